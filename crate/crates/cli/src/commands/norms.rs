//! `dkg norms`: print norms of a binary spectrum dump.

use std::path::Path;

use dkg_core::norms::{compute, NormKind};
use dkg_core::spectral::load_from_file;

use crate::common::{fail, fmt_f64, CmdResult, EXIT_BAD_INPUT};

pub fn run(
    file: &Path,
    hs: &[f64],
    hsdot: &[f64],
    modulation: bool,
    l1: bool,
    linf: bool,
    halfline: &[f64],
) -> CmdResult {
    let f = load_from_file(file)
        .map_err(|e| fail(EXIT_BAD_INPUT, format!("{}: {e}", file.display())))?;

    let mut requested: Vec<(String, NormKind)> = Vec::new();
    for &s in hs {
        requested.push((format!("Hs({s})"), NormKind::Hs(s)));
    }
    for &s in hsdot {
        requested.push((format!("HsDot({s})"), NormKind::HsDot(s)));
    }
    if modulation {
        requested.push(("Modulation".into(), NormKind::Modulation));
    }
    if l1 {
        requested.push(("L1".into(), NormKind::L1));
    }
    if linf {
        requested.push(("Linf".into(), NormKind::Linf));
    }
    for &s in halfline {
        requested.push((format!("HalfLineHs({s})"), NormKind::HalfLineHs(s)));
    }
    if requested.is_empty() {
        // Default panel: the norms the experiments live on.
        requested = vec![
            ("Hs(-0.5)".into(), NormKind::Hs(-0.5)),
            ("Hs(0.5)".into(), NormKind::Hs(0.5)),
            ("Modulation".into(), NormKind::Modulation),
            ("HalfLineHs(0.5)".into(), NormKind::HalfLineHs(0.5)),
        ];
    }

    for (name, kind) in requested {
        let value = compute(&f, kind)
            .map_err(|e| fail(EXIT_BAD_INPUT, format!("{name}: {e}")))?;
        println!("{name}\t{}", fmt_f64(value));
    }
    Ok(())
}
