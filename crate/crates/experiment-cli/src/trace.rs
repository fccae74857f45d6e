//! Append-only experiment trace: one ASCII record per line.
//!
//! ```text
//! FLIP <cycle> <block> <page> <byte> <bit>
//! LAT <cycle> <block> <page> <byte> - <microseconds>
//! SUMMARY <aggressor_page> <self|NEVER> <pred|NEVER> <succ|NEVER>
//! ```

use std::fmt::Write as _;

use thiserror::Error;

/// One trace line.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceRecord {
    /// First observed deviation of one bit.
    Flip { cycle: u64, block: u32, page: u32, byte: u32, bit: u8 },
    /// Reported latency of one program operation.
    Latency { cycle: u64, block: u32, page: u32, byte: u32, micros: f64 },
    /// Per-aggressor first-flip summary from a whole-block sweep.
    Summary {
        aggressor_page: u32,
        self_first: Option<u32>,
        predecessor_first: Option<u32>,
        successor_first: Option<u32>,
    },
}

#[derive(Debug, Error, PartialEq)]
pub enum TraceParseError {
    #[error("line {line}: unknown record kind {kind:?}")]
    UnknownKind { line: usize, kind: String },
    #[error("line {line}: expected {expected} fields, got {got}")]
    FieldCount { line: usize, expected: usize, got: usize },
    #[error("line {line}: bad {field} value {value:?}")]
    BadField { line: usize, field: &'static str, value: String },
}

fn cycles_field(value: Option<u32>) -> String {
    match value {
        Some(v) => v.to_string(),
        None => "NEVER".to_string(),
    }
}

impl TraceRecord {
    pub fn to_line(&self) -> String {
        match self {
            TraceRecord::Flip { cycle, block, page, byte, bit } => {
                format!("FLIP {cycle} {block} {page} {byte} {bit}")
            }
            TraceRecord::Latency { cycle, block, page, byte, micros } => {
                format!("LAT {cycle} {block} {page} {byte} - {micros}")
            }
            TraceRecord::Summary {
                aggressor_page,
                self_first,
                predecessor_first,
                successor_first,
            } => format!(
                "SUMMARY {aggressor_page} {} {} {}",
                cycles_field(*self_first),
                cycles_field(*predecessor_first),
                cycles_field(*successor_first),
            ),
        }
    }
}

pub fn write_trace(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for record in records {
        let _ = writeln!(out, "{}", record.to_line());
    }
    out
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>, TraceParseError> {
    let mut records = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_ascii_whitespace().collect();
        let expect = |expected: usize| -> Result<(), TraceParseError> {
            if fields.len() != expected {
                return Err(TraceParseError::FieldCount { line, expected, got: fields.len() });
            }
            Ok(())
        };
        match fields[0] {
            "FLIP" => {
                expect(6)?;
                records.push(TraceRecord::Flip {
                    cycle: parse(line, "cycle", fields[1])?,
                    block: parse(line, "block", fields[2])?,
                    page: parse_bounded(line, "page", fields[3], 63)?,
                    byte: parse_bounded(line, "byte", fields[4], 2111)?,
                    bit: parse_bounded(line, "bit", fields[5], 7)? as u8,
                });
            }
            "LAT" => {
                expect(7)?;
                if fields[5] != "-" {
                    return Err(TraceParseError::BadField {
                        line,
                        field: "separator",
                        value: fields[5].to_string(),
                    });
                }
                records.push(TraceRecord::Latency {
                    cycle: parse(line, "cycle", fields[1])?,
                    block: parse(line, "block", fields[2])?,
                    page: parse_bounded(line, "page", fields[3], 63)?,
                    byte: parse_bounded(line, "byte", fields[4], 2111)?,
                    micros: parse(line, "microseconds", fields[6])?,
                });
            }
            "SUMMARY" => {
                expect(5)?;
                records.push(TraceRecord::Summary {
                    aggressor_page: parse_bounded(line, "aggressor_page", fields[1], 63)?,
                    self_first: parse_cycles(line, "self", fields[2])?,
                    predecessor_first: parse_cycles(line, "predecessor", fields[3])?,
                    successor_first: parse_cycles(line, "successor", fields[4])?,
                });
            }
            other => {
                return Err(TraceParseError::UnknownKind { line, kind: other.to_string() })
            }
        }
    }
    Ok(records)
}

fn parse<T: std::str::FromStr>(
    line: usize,
    field: &'static str,
    value: &str,
) -> Result<T, TraceParseError> {
    value
        .parse()
        .map_err(|_| TraceParseError::BadField { line, field, value: value.to_string() })
}

fn parse_bounded(
    line: usize,
    field: &'static str,
    value: &str,
    max: u32,
) -> Result<u32, TraceParseError> {
    let parsed: u32 = parse(line, field, value)?;
    if parsed > max {
        return Err(TraceParseError::BadField { line, field, value: value.to_string() });
    }
    Ok(parsed)
}

fn parse_cycles(
    line: usize,
    field: &'static str,
    value: &str,
) -> Result<Option<u32>, TraceParseError> {
    if value == "NEVER" {
        return Ok(None);
    }
    parse(line, field, value).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_flip_line_parses() {
        let records = parse_trace("FLIP 306 0 2 17 5\n").unwrap();
        assert_eq!(
            records,
            vec![TraceRecord::Flip { cycle: 306, block: 0, page: 2, byte: 17, bit: 5 }]
        );
    }

    #[test]
    fn summary_never_fields_round_trip() {
        let rec = TraceRecord::Summary {
            aggressor_page: 4,
            self_first: Some(3000),
            predecessor_first: None,
            successor_first: Some(13_000),
        };
        assert_eq!(rec.to_line(), "SUMMARY 4 3000 NEVER 13000");
        assert_eq!(parse_trace(&write_trace(std::slice::from_ref(&rec))).unwrap(), vec![rec]);
    }

    #[test]
    fn malformed_lines_name_their_line_number() {
        let err = parse_trace("FLIP 1 0 0 0 0\nFLIP abc 0 0 0 0\n").unwrap_err();
        assert_eq!(
            err,
            TraceParseError::BadField { line: 2, field: "cycle", value: "abc".to_string() }
        );
        let err = parse_trace("NOPE 1 2\n").unwrap_err();
        assert!(matches!(err, TraceParseError::UnknownKind { line: 1, .. }));
        let err = parse_trace("LAT 1 0 0 0 x 12.5\n").unwrap_err();
        assert!(matches!(err, TraceParseError::BadField { field: "separator", .. }));
    }

    #[test]
    fn out_of_geometry_fields_are_rejected() {
        assert!(matches!(
            parse_trace("FLIP 1 0 0 0 8\n").unwrap_err(),
            TraceParseError::BadField { field: "bit", .. }
        ));
        assert!(matches!(
            parse_trace("FLIP 1 0 0 2112 0\n").unwrap_err(),
            TraceParseError::BadField { field: "byte", .. }
        ));
        assert!(matches!(
            parse_trace("SUMMARY 64 1 NEVER NEVER\n").unwrap_err(),
            TraceParseError::BadField { field: "aggressor_page", .. }
        ));
    }

    #[test]
    fn latency_values_round_trip_exactly() {
        let rec = TraceRecord::Latency {
            cycle: 17,
            block: 0,
            page: 3,
            byte: 1999,
            micros: 201.83749999923,
        };
        let parsed = parse_trace(&write_trace(std::slice::from_ref(&rec))).unwrap();
        assert_eq!(parsed, vec![rec]);
    }
}
