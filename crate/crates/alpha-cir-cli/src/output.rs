//! CSV emission with provenance headers.
//!
//! Every artifact starts with `#`-prefixed comment lines embedding the
//! artifact version, the seed, and the run configuration, so a result file
//! alone is enough to reproduce itself. The worker count is the one setting
//! deliberately left out of the header: it cannot change any number in the
//! file (reductions are worker-count invariant), and omitting it keeps the
//! bytes identical across machines with different parallelism.
//!
//! Numeric fields use Rust's shortest round-trip float formatting, so the
//! files carry full precision and are byte-stable for fixed inputs.

use std::fmt::Write as _;

use alpha_cir::experiments::{ErrorEstimate, ProbeKind, ProbeResult};
use alpha_cir::scheme::PathRecord;

use crate::config::RunConfig;

/// Version stamp written into every provenance header.
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// The probe kind as it appears in configs and CSV fields.
pub fn kind_name(kind: ProbeKind) -> &'static str {
    match kind {
        ProbeKind::DnegProbability => "dneg-probability",
        ProbeKind::Moment => "moment",
        ProbeKind::Mgf => "mgf",
    }
}

/// The `#`-prefixed comment block shared by every CSV artifact.
fn provenance_header(config: &RunConfig, kind: &str) -> String {
    // Round-trip through a TOML table so one key can be dropped without
    // hand-formatting the rest.
    let mut table: toml::Table = config.emit().parse().expect("emitted config parses back");
    if let Some(mc) = table.get_mut("mc").and_then(|v| v.as_table_mut()) {
        mc.remove("parallel_workers");
    }

    let mut out = String::new();
    let _ = writeln!(out, "# artifact = alpha-cir v{ARTIFACT_VERSION} {kind}");
    let _ = writeln!(out, "# seed = {}", config.mc.seed);
    let _ = writeln!(out, "# config = (worker count omitted; results are worker-count invariant)");
    for line in table.to_string().lines() {
        let _ = writeln!(out, "#   {line}");
    }
    out
}

/// One simulated trajectory as `t,x` rows (`n + 1` rows for a full path).
pub fn path_csv(config: &RunConfig, record: &PathRecord) -> String {
    let mut out = provenance_header(config, "path");
    let _ = writeln!(out, "# negative_discriminant_repairs = {}", record.d_negative_count);
    if let Some(step) = record.exploded_at {
        let _ = writeln!(out, "# overflowed at step {step}; trajectory truncated");
    }
    out.push_str("# columns = t,x\n");
    let dt = record.grid.dt();
    for (i, x) in record.values.iter().enumerate() {
        let _ = writeln!(out, "{},{x}", i as f64 * dt);
    }
    out
}

/// The strong-error table: one `n,error,stderr,exploded` row per base grid,
/// with the fitted slope in the header.
pub fn error_csv(config: &RunConfig, estimate: &ErrorEstimate) -> String {
    let mut out = provenance_header(config, "strong-error");
    let _ = writeln!(
        out,
        "# fitted_slope = {} (stderr {})",
        estimate.fitted_slope, estimate.slope_stderr
    );
    out.push_str("# columns = n,error,stderr,exploded\n");
    for row in &estimate.rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            row.n, row.mean_abs_diff, row.std_error, row.exploded_count
        );
    }
    out
}

/// Probe outcomes, one row per result.
pub fn probe_csv(config: &RunConfig, results: &[ProbeResult]) -> String {
    let mut out = provenance_header(config, "probe");
    out.push_str("# columns = kind,estimate,stderr,reference,passed,detail\n");
    for r in results {
        let reference = r.reference_value.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            kind_name(r.kind),
            r.estimate,
            r.std_error,
            reference,
            r.passed,
            csv_quote(&r.detail)
        );
    }
    out
}

/// Quotes a CSV field whose text may contain commas or quotes.
fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}
