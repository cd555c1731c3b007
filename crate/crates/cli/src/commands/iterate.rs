//! `dkg iterate`: run the Picard engine per configured N, write ledgers,
//! envelope conformance, and the bound-sequence check.

use rand::SeedableRng;
use serde::Serialize;

use dkg_core::norms::measure_algebra_constant;
use dkg_core::picard::{
    envelope_conformance, kis_bound_check, Component, ConformanceReport, ConstantLedger, KisReport,
    LedgerReport,
};
use dkg_core::spectral::dump_to_file;

use crate::common::{
    core_failure, engine_run, ensure_out_dir, fail, load_config, row_params, CmdResult,
    EXIT_BAD_INPUT, EXIT_NON_CONVERGENCE,
};
use crate::CommonOpts;

#[derive(Serialize)]
struct IterateEntry {
    ledger: LedgerReport,
    constants: ConstantLedger,
    conformance: ConformanceReport,
    kis: KisReport,
}

#[derive(Serialize)]
struct IterateReport {
    seed: u64,
    c1_empirical: f64,
    entries: Vec<IterateEntry>,
}

pub fn run(opts: &CommonOpts) -> CmdResult {
    let config = load_config(&opts.config)?;
    ensure_out_dir(&opts.out)?;

    for &n in &config.n_list {
        if n > opts.engine_budget {
            return Err(fail(
                EXIT_BAD_INPUT,
                format!("N = {n} exceeds the engine budget {}", opts.engine_budget),
            ));
        }
    }

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    let c1 = measure_algebra_constant(&mut rng, 100).map_err(core_failure)?;

    let mut entries = Vec::new();
    let mut all_converged = true;
    for &n in &config.n_list {
        let row = row_params(&config, n)?;
        if row.t * row.n as f64 <= 1.0 {
            return Err(fail(
                EXIT_BAD_INPUT,
                format!("N = {n}: schedule gives tN = {} <= 1; constants are undefined there", row.t * n as f64),
            ));
        }
        let (_p, table) = engine_run(&config, &row, config.k_max)?;
        let constants = ConstantLedger::from_measurements(c1.max_ratio, &table).map_err(core_failure)?;
        let conformance = envelope_conformance(&table, &constants);
        let kis = kis_bound_check(constants.a[1], 2.0 * constants.c1, 12).map_err(core_failure)?;
        all_converged &= table.converged;

        if opts.dump_spectra {
            if let Some(phi2) = table.final_field(Component::Phi, 2) {
                let path = opts.out.join(format!("iterate_phi2_N{n}.spec"));
                dump_to_file(phi2, &path).map_err(core_failure)?;
            }
        }
        entries.push(IterateEntry { ledger: table.ledger_report(), constants, conformance, kis });
    }

    let report = IterateReport { seed: opts.seed, c1_empirical: c1.max_ratio, entries };
    crate::common::write_json(&opts.out.join("iterate_report.json"), &report)?;

    for entry in &report.entries {
        println!(
            "N={} tN={:.4}: converged={} geometric_ratio={:?} conformance_ok={}",
            entry.ledger.n,
            entry.ledger.t_times_n,
            entry.ledger.converged,
            entry.ledger.geometric_ratio_mod,
            entry.conformance.all_ok
        );
    }
    if !all_converged {
        return Err(fail(EXIT_NON_CONVERGENCE, "iteration ledger grew between even orders".to_string()));
    }
    Ok(())
}
