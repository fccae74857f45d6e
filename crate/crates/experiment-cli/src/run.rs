use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use flash_device_model::{DeviceError, FlashChip};
use nand_protocol::ChipGeometry;
use puf_extraction::{
    extract_adjacent, extract_multi_page_sweep, extract_program_latency, extract_read_disturb,
    extract_same_page, ExtractError, Signature, StableBitMap, Technique, NEVER,
};
use signature_analysis::{
    default_bucket_edges, fit_exponential, fractional_hamming, heatmap, pearson,
    predict_first_flip, signature_values, stable_bits_across_passes, AnalysisError,
};
use thiserror::Error;

use crate::config_file::{ConfigError, RunConfig};
use crate::files::{
    signature_from_bytes, signature_to_bytes, stable_map_to_bytes, FileFormatError,
};
use crate::manifest::RunManifest;
use crate::trace::{parse_trace, write_trace, TraceParseError, TraceRecord};

/// Errors mapped onto process exit codes: configuration and input-format
/// problems exit 2, device/protocol problems exit 3, I/O and replay
/// mismatches exit 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("device: {0}")]
    Device(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("replay diverged in {0:?}")]
    ReplayMismatch(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Device(_) => 3,
            CliError::Io { .. } | CliError::ReplayMismatch(_) => 1,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<FileFormatError> for CliError {
    fn from(e: FileFormatError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<TraceParseError> for CliError {
    fn from(e: TraceParseError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<DeviceError> for CliError {
    fn from(e: DeviceError) -> Self {
        match e {
            DeviceError::Params(p) => CliError::Config(p.to_string()),
            other => CliError::Device(other.to_string()),
        }
    }
}

impl From<ExtractError> for CliError {
    fn from(e: ExtractError) -> Self {
        match e {
            ExtractError::Device(d) => d.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn flip_records(records: &mut Vec<TraceRecord>, block: u32, sig: &Signature) {
    for bit in 0..sig.values().len() as u32 {
        let cycle = sig.first_flip(bit);
        if cycle != NEVER {
            records.push(TraceRecord::Flip {
                cycle: u64::from(cycle),
                block,
                page: sig.page,
                byte: bit / 8,
                bit: (bit % 8) as u8,
            });
        }
    }
}

fn sort_flips(records: &mut [TraceRecord]) {
    records.sort_by_key(|r| match r {
        TraceRecord::Flip { cycle, page, byte, bit, .. } => {
            (*cycle, *page, *byte, u32::from(*bit))
        }
        _ => (0, 0, 0, 0),
    });
}

struct RunOutputs {
    records: Vec<TraceRecord>,
    /// (file name, bytes) pairs beyond the trace itself.
    files: Vec<(String, Vec<u8>)>,
}

fn heatmap_svg(sig: &Signature) -> Result<Vec<u8>, CliError> {
    let grid = heatmap(sig, &default_bucket_edges(sig.total_cycles))?;
    Ok(grid.to_svg().into_bytes())
}

fn execute(config: &RunConfig, chip: &mut FlashChip) -> Result<RunOutputs, CliError> {
    let e = &config.experiment;
    let mut records = Vec::new();
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    let mut primary: Option<(Signature, StableBitMap)> = None;

    match e.technique {
        Technique::SamePage => {
            let (sig, stable) = extract_same_page(chip, e)?;
            flip_records(&mut records, e.block, &sig);
            primary = Some((sig, stable));
        }
        Technique::AdjacentPage => {
            let out = extract_adjacent(chip, e)?;
            // The pair partner (target XOR 1) is the disturbed neighbour;
            // the other side is kept as a far-control file.
            let (partner, far) = if e.target_page % 2 == 1 {
                (out.below, out.above)
            } else {
                (out.above, out.below)
            };
            flip_records(&mut records, e.block, &partner.0);
            flip_records(&mut records, e.block, &far.0);
            files.push(("signature_far.bin".into(), signature_to_bytes(&far.0)));
            files.push(("stable_far.bin".into(), stable_map_to_bytes(&far.1)));
            primary = Some(partner);
        }
        Technique::MultiPageSweep => {
            let summaries =
                extract_multi_page_sweep(chip, e.block, e.iterations, e.pattern, e.pre_program_all)?;
            for s in summaries {
                records.push(TraceRecord::Summary {
                    aggressor_page: s.aggressor,
                    self_first: s.self_first,
                    predecessor_first: s.predecessor_first,
                    successor_first: s.successor_first,
                });
            }
        }
        Technique::ReadDisturb => {
            let results = extract_read_disturb(chip, e)?;
            for (sig, stable) in &results {
                flip_records(&mut records, e.block, sig);
                files.push((
                    format!("signature_p{:02}.bin", sig.page),
                    signature_to_bytes(sig),
                ));
                files.push((
                    format!("stable_p{:02}.bin", sig.page),
                    stable_map_to_bytes(stable),
                ));
            }
            // The primary signature is the first page that is a victim of
            // the hammered page.
            let primary_page = if e.target_page == 0 { 1 } else { 0 };
            primary = results.into_iter().find(|(sig, _)| sig.page == primary_page);
        }
        Technique::ProgramLatency => {
            chip.erase_block(e.block)?;
            let latencies = extract_program_latency(chip, e.block, e.target_page)?;
            let mut sig = Signature::all_stable(
                Technique::ProgramLatency,
                e.block,
                e.target_page,
                latencies.len() as u32,
                e.pattern,
            );
            for (byte, &micros) in latencies.iter().enumerate() {
                records.push(TraceRecord::Latency {
                    cycle: byte as u64 + 1,
                    block: e.block,
                    page: e.target_page,
                    byte: byte as u32,
                    micros,
                });
                // Nanosecond quantization so the latency vector fits the
                // common signature container (replicated across the byte's
                // eight bit slots).
                let nanos = (micros * 1000.0).round().clamp(0.0, f64::from(u32::MAX - 1)) as u32;
                for bit in 0..8 {
                    sig.record((byte * 8 + bit) as u32, nanos);
                }
            }
            let stable = StableBitMap::all_stable(e.block, e.target_page, sig.total_cycles);
            files.push(("signature.bin".into(), signature_to_bytes(&sig)));
            files.push(("stable.bin".into(), stable_map_to_bytes(&stable)));
        }
    }

    sort_flips(&mut records);
    if let Some((sig, stable)) = primary {
        files.insert(0, ("signature.bin".into(), signature_to_bytes(&sig)));
        files.insert(1, ("stable.bin".into(), stable_map_to_bytes(&stable)));
        files.push(("heatmap.svg".into(), heatmap_svg(&sig)?));
    }
    Ok(RunOutputs { records, files })
}

/// Run one configured extraction on a freshly seeded chip and write the
/// fixed output layout into `out_dir`.
pub fn run_experiment(
    config: &RunConfig,
    out_dir: &Path,
    mut log: impl FnMut(&str),
) -> Result<(), CliError> {
    let params = config.resolved_params();
    let geometry = ChipGeometry::with_blocks(config.blocks)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut chip = FlashChip::new(config.chip_seed, geometry, params)?;

    let outputs = execute(config, &mut chip)?;

    fs::create_dir_all(out_dir)
        .map_err(|source| CliError::Io { path: out_dir.to_path_buf(), source })?;
    let trace_text = write_trace(&outputs.records);
    write_file(&out_dir.join("trace.log"), trace_text.as_bytes())?;
    log(&format!("wrote trace.log ({} records)", outputs.records.len()));

    let mut names = vec!["trace.log".to_string()];
    for (name, bytes) in &outputs.files {
        write_file(&out_dir.join(name), bytes)?;
        log(&format!("wrote {name} ({} bytes)", bytes.len()));
        names.push(name.clone());
    }

    let manifest = RunManifest::new(config.clone(), names);
    write_file(&out_dir.join("manifest.txt"), manifest.render().as_bytes())?;
    log("wrote manifest.txt");
    Ok(())
}

/// Compare two signature files: correlation, stable-bit Hamming distance,
/// and a match/distinct verdict against the 0.15 authentication threshold.
pub fn compare_report(path_a: &Path, path_b: &Path) -> Result<String, CliError> {
    let a = signature_from_bytes(&read_file(path_a)?)?;
    let b = signature_from_bytes(&read_file(path_b)?)?;
    if a.technique != b.technique {
        return Err(CliError::Config(format!(
            "techniques differ: {} vs {}",
            a.technique.name(),
            b.technique.name()
        )));
    }
    let r = match pearson(&signature_values(&a), &signature_values(&b)) {
        Ok(r) => format!("{r}"),
        Err(AnalysisError::ConstantInput) => "undefined".to_string(),
        Err(e) => return Err(e.into()),
    };
    let map_a = a.stable_map();
    let map_b = b.stable_map();
    let distance = fractional_hamming(&map_a, &map_b)?;
    let common = stable_bits_across_passes(&[map_a.clone(), map_b.clone()])?;
    let verdict = if distance < 0.15 { "match" } else { "distinct" };

    let mut out = String::new();
    let _ = writeln!(out, "technique = {}", a.technique.name());
    let _ = writeln!(out, "pearson = {r}");
    let _ = writeln!(out, "fractional_hamming = {distance}");
    let _ = writeln!(out, "stable_bits_a = {}", map_a.stable_count());
    let _ = writeln!(out, "stable_bits_b = {}", map_b.stable_count());
    let _ = writeln!(out, "stable_bits_common = {}", common.stable_count());
    let _ = writeln!(out, "verdict = {verdict}");
    let _ = writeln!(out);
    let _ = writeln!(out, "{:<22} {:>12} {:>12}", "", "a", "b");
    let _ = writeln!(
        out,
        "{:<22} {:>12} {:>12}",
        "block/page",
        format!("{}/{}", a.block, a.page),
        format!("{}/{}", b.block, b.page)
    );
    let _ = writeln!(
        out,
        "{:<22} {:>12} {:>12}",
        "total cycles", a.total_cycles, b.total_cycles
    );
    let _ = writeln!(
        out,
        "{:<22} {:>12} {:>12}",
        "stable bits",
        map_a.stable_count(),
        map_b.stable_count()
    );
    let _ = writeln!(
        out,
        "{:<22} {:>12} {:>12}",
        "flipped bits",
        a.values().len() - a.sentinel_count(),
        b.values().len() - b.sentinel_count()
    );
    Ok(out)
}

/// Fit the exponential first-flip laws to a sweep trace and tabulate
/// predictions for every page of a block.
pub fn fit_report(trace_path: &Path) -> Result<String, CliError> {
    let records = parse_trace(&read_text(trace_path)?)?;
    let summaries: Vec<_> = records
        .iter()
        .filter_map(|r| match r {
            TraceRecord::Summary {
                aggressor_page,
                self_first,
                predecessor_first,
                successor_first,
            } => Some((*aggressor_page, *self_first, *predecessor_first, *successor_first)),
            _ => None,
        })
        .collect();
    if summaries.len() < 2 {
        return Err(CliError::Config(format!(
            "need at least 2 SUMMARY records to fit, trace has {}",
            summaries.len()
        )));
    }
    let intra: Vec<(f64, f64)> = summaries
        .iter()
        .filter_map(|(p, s, _, _)| s.map(|c| (f64::from(*p), f64::from(c))))
        .collect();
    // The disturbed neighbour is the pair partner: below for odd
    // aggressors, above for even ones.
    let pair: Vec<(f64, f64)> = summaries
        .iter()
        .filter_map(|(p, _, pred, succ)| {
            let partner = if p % 2 == 1 { pred } else { succ };
            partner.map(|c| (f64::from(*p), f64::from(c)))
        })
        .collect();
    let intra_fit = fit_exponential(&intra).map_err(|e| {
        CliError::Config(format!("intra series ({} finite points): {e}", intra.len()))
    })?;
    let pair_fit = fit_exponential(&pair).map_err(|e| {
        CliError::Config(format!("pair series ({} finite points): {e}", pair.len()))
    })?;

    let mut out = String::new();
    let _ = writeln!(out, "intra_scale = {}", intra_fit.scale);
    let _ = writeln!(out, "intra_rate = {}", intra_fit.rate);
    let _ = writeln!(out, "intra_log_rms = {}", intra_fit.log_rms);
    let _ = writeln!(out, "pair_scale = {}", pair_fit.scale);
    let _ = writeln!(out, "pair_rate = {}", pair_fit.rate);
    let _ = writeln!(out, "pair_log_rms = {}", pair_fit.log_rms);
    let _ = writeln!(out);
    let _ = writeln!(out, "{:>4} {:>20} {:>20}", "page", "intra_predicted", "pair_predicted");
    for page in 0..64u32 {
        let _ = writeln!(
            out,
            "{:>4} {:>20} {:>20}",
            page,
            predict_first_flip(&intra_fit, page),
            predict_first_flip(&pair_fit, page)
        );
    }
    Ok(out)
}

/// Render a signature file as a heatmap in SVG and/or CSV form.
pub fn plot(
    signature_path: &Path,
    svg: Option<&Path>,
    csv: Option<&Path>,
) -> Result<(), CliError> {
    if svg.is_none() && csv.is_none() {
        return Err(CliError::Config(
            "plot needs at least one of --svg and --csv".to_string(),
        ));
    }
    let sig = signature_from_bytes(&read_file(signature_path)?)?;
    let grid = heatmap(&sig, &default_bucket_edges(sig.total_cycles))?;
    if let Some(path) = svg {
        write_file(path, grid.to_svg().as_bytes())?;
    }
    if let Some(path) = csv {
        write_file(path, grid.to_csv().as_bytes())?;
    }
    Ok(())
}

/// Re-run a directory's manifest into a scratch directory and verify every
/// listed output matches byte for byte.
pub fn replay(run_dir: &Path, mut log: impl FnMut(&str)) -> Result<(), CliError> {
    let manifest_path = run_dir.join("manifest.txt");
    let manifest = RunManifest::parse(&read_text(&manifest_path)?)?;
    let scratch = std::env::temp_dir().join(format!("nandpuf-replay-{}", std::process::id()));
    let result = (|| -> Result<(), CliError> {
        run_experiment(&manifest.config, &scratch, |_| {})?;
        let mut diverged = Vec::new();
        let mut checked = manifest.outputs.clone();
        checked.push("manifest.txt".to_string());
        for name in &checked {
            let original = read_file(&run_dir.join(name))?;
            let rerun = read_file(&scratch.join(name))?;
            if original != rerun {
                diverged.push(name.clone());
            }
        }
        if diverged.is_empty() {
            log(&format!("replay: {} outputs identical", checked.len()));
            Ok(())
        } else {
            Err(CliError::ReplayMismatch(diverged))
        }
    })();
    let _ = fs::remove_dir_all(&scratch);
    result
}
