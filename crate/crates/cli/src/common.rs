//! Shared plumbing for the subcommands: exit-coded failures, config loading,
//! float formatting, and engine-run helpers.

use std::path::Path;

use dkg_core::schedule::{parse_config, sigma_of, t_of, ExperimentConfig};
use dkg_core::picard::{run as picard_run, DataParams, IterateTable, RunOptions};
use dkg_core::Error as CoreError;

pub const EXIT_BAD_INPUT: u8 = 2;
pub const EXIT_NON_CONVERGENCE: u8 = 3;
pub const EXIT_TOLERANCE: u8 = 4;
pub const EXIT_INSTABILITY: u8 = 5;

pub struct Failure {
    pub code: u8,
    pub message: String,
}

pub fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

pub type CmdResult = Result<(), Failure>;

pub fn core_failure(err: CoreError) -> Failure {
    let code = match &err {
        CoreError::Instability { .. } => EXIT_INSTABILITY,
        CoreError::Io(_) | CoreError::MalformedDump(_) | CoreError::Config(_) => EXIT_BAD_INPUT,
        _ => EXIT_BAD_INPUT,
    };
    fail(code, err.to_string())
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(EXIT_BAD_INPUT, format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| fail(EXIT_BAD_INPUT, e.to_string()))
}

pub fn ensure_out_dir(path: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(path)
        .map_err(|e| fail(EXIT_BAD_INPUT, format!("cannot create {}: {e}", path.display())))
}

/// 17 significant digit float formatting (reproducible CSV/report contract).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| fail(EXIT_BAD_INPUT, format!("serialization: {e}")))?;
    std::fs::write(path, text + "\n")
        .map_err(|e| fail(EXIT_BAD_INPUT, format!("cannot write {}: {e}", path.display())))
}

/// Scheduled parameters of one sweep row.
pub struct RowParams {
    pub n: u32,
    pub sigma: f64,
    pub t: f64,
}

pub fn row_params(config: &ExperimentConfig, n: u32) -> Result<RowParams, Failure> {
    let sigma = sigma_of(n as f64, config.sigma_rule).map_err(core_failure)?;
    let t = t_of(n as f64, config.schedule).map_err(core_failure)?;
    Ok(RowParams { n, sigma, t })
}

/// Run the engine for one scheduled row at the configured spacing.
pub fn engine_run(
    config: &ExperimentConfig,
    row: &RowParams,
    k_max: usize,
) -> Result<(DataParams, IterateTable), Failure> {
    let p = DataParams::desk_with(row.n, row.sigma, row.t * row.n as f64, config.delta_xi, 1)
        .map_err(core_failure)?;
    let table = picard_run(&p, &RunOptions::new(k_max)).map_err(core_failure)?;
    Ok((p, table))
}
