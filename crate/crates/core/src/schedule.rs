//! The experiment family: amplitude rule, time schedules, asymptotic flags,
//! initial-state construction, and the JSON experiment configuration.

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::picard::FieldState;
use crate::spectral::{indicator, FrequencyGrid, SpectralFunction, SupportInterval};

/// Amplitude rule for `sigma_N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SigmaRule {
    /// `(log log N)^{-beta}`: tends to zero, slower than `(log log N)^{-1/2}`
    /// whenever `beta < 1/2`.
    PaperSlow { beta: f64 },
    Fixed { value: f64 },
}

impl SigmaRule {
    pub fn validate(&self) -> Result<()> {
        match self {
            SigmaRule::PaperSlow { beta } => {
                if !(*beta > 0.0 && *beta < 0.5) {
                    return Err(Error::Config(format!("beta = {beta} must lie in (0, 1/2)")));
                }
            }
            SigmaRule::Fixed { value } => {
                if !(*value > 0.0 && *value <= 1.0) {
                    return Err(Error::Config(format!("fixed sigma = {value} must lie in (0, 1]")));
                }
            }
        }
        Ok(())
    }
}

/// Existence-time schedule `t = t(N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Schedule {
    /// `t = N^{-1} (log N)^{sqrt(log N)}`; reaches its smallness regime only
    /// at astronomically large `N`, kept for formula-level checks and flags.
    PaperExact,
    /// `t = N^{alpha - 1}`, so `tN = N^alpha`; all smallness conditions hold
    /// at desk scale for `alpha < 1/6`.
    PowerLaw { alpha: f64 },
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        if let Schedule::PowerLaw { alpha } = self {
            if !(*alpha > 0.0 && *alpha < 1.0 / 6.0) {
                return Err(Error::Config(format!("alpha = {alpha} must lie in (0, 1/6)")));
            }
        }
        Ok(())
    }
}

/// `sigma_N` under the given rule.
pub fn sigma_of(n: f64, rule: SigmaRule) -> Result<f64> {
    if !(n >= 16.0) {
        return Err(Error::InvalidInput(format!("sigma rule needs N >= 16, got {n}")));
    }
    rule.validate()?;
    Ok(match rule {
        SigmaRule::PaperSlow { beta } => n.ln().ln().powf(-beta),
        SigmaRule::Fixed { value } => value,
    })
}

/// `t(N)` under the given schedule.
pub fn t_of(n: f64, schedule: Schedule) -> Result<f64> {
    if !(n >= 16.0) {
        return Err(Error::InvalidInput(format!("time schedule needs N >= 16, got {n}")));
    }
    schedule.validate()?;
    Ok(match schedule {
        Schedule::PaperExact => {
            let ln_n = n.ln();
            (ln_n.sqrt() * ln_n.ln() - ln_n).exp()
        }
        Schedule::PowerLaw { alpha } => n.powf(alpha - 1.0),
    })
}

/// The smallness quantities governing convergence of the iteration series,
/// with green/red flags (`< 1` at this `N`).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AsymptoticFlags {
    pub t_times_n: f64,
    pub log_tn: f64,
    pub t3n2: f64,
    pub t3n52: f64,
    pub tn_large: bool,
    pub t3n2_small: bool,
    pub t3n52_small: bool,
    /// All of the above: the asymptotic regime is reached at this `N`.
    pub regime_reached: bool,
}

pub fn asymptotic_flags(n: f64, schedule: Schedule) -> Result<AsymptoticFlags> {
    let t = t_of(n, schedule)?;
    let tn = t * n;
    let log_tn = tn.ln();
    let t3n2 = t.powi(3) * n * n;
    let t3n52 = t.powi(3) * n.powf(2.5);
    let tn_large = tn >= std::f64::consts::E;
    let t3n2_small = t3n2 < 1.0;
    let t3n52_small = t3n52 < 1.0;
    Ok(AsymptoticFlags {
        t_times_n: tn,
        log_tn,
        t3n2,
        t3n52,
        tn_large,
        t3n2_small,
        t3n52_small,
        regime_reached: tn_large && t3n2_small && t3n52_small,
    })
}

/// Initial state of the inflation family on `grid`:
/// `u0_hat = sigma 1_[5N,7N]`, `v0_hat = sigma (log N)^{-1/2} 1_[-N,0]`,
/// `phi0 = dt_phi0 = 0`.
pub fn build_initial_state(n: f64, sigma: f64, grid: FrequencyGrid) -> Result<FieldState> {
    if !(n >= 16.0) {
        return Err(Error::InvalidInput(format!("data family needs N >= 16, got {n}")));
    }
    if grid.xi_max < 16.0 * n {
        return Err(Error::InvalidInput(format!(
            "grid extent {} too small for N = {n} (need >= {})",
            grid.xi_max,
            16.0 * n
        )));
    }
    let u0 = indicator(grid, SupportInterval::new(5.0 * n, 7.0 * n)?, sigma)?;
    let v0 = indicator(grid, SupportInterval::new(-n, 0.0)?, sigma / n.ln().sqrt())?;
    FieldState::new(
        u0,
        v0,
        SpectralFunction::zero(grid),
        SpectralFunction::zero(grid),
        0.0,
    )
}

/// Parsed experiment configuration (see the CLI for the JSON schema).
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub n_list: Vec<u32>,
    pub sigma_rule: SigmaRule,
    pub schedule: Schedule,
    pub k_max: usize,
    pub delta_xi: f64,
    pub eta_tol: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(Error::Config("N_list must not be empty".into()));
        }
        for w in self.n_list.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Config("N_list must be strictly ascending".into()));
            }
        }
        if self.n_list[0] < 16 {
            return Err(Error::Config("every N must be >= 16".into()));
        }
        self.sigma_rule.validate()?;
        self.schedule.validate()?;
        if self.k_max < 2 {
            return Err(Error::Config("K_max must be >= 2".into()));
        }
        if !(self.delta_xi > 0.0 && self.delta_xi <= 0.25) {
            return Err(Error::Config(format!("delta_xi = {} must lie in (0, 1/4]", self.delta_xi)));
        }
        if !(self.eta_tol > 0.0 && self.eta_tol < 1e-2) {
            return Err(Error::Config(format!("eta_tol = {} implausible", self.eta_tol)));
        }
        Ok(())
    }
}

fn expect_object<'v>(v: &'v Value, what: &str, allowed: &[&str]) -> Result<&'v serde_json::Map<String, Value>> {
    let map = v
        .as_object()
        .ok_or_else(|| Error::Config(format!("{what} must be a JSON object")))?;
    for key in map.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(Error::Config(format!("unknown key {key:?} in {what}")));
        }
    }
    Ok(map)
}

fn get_f64(map: &serde_json::Map<String, Value>, key: &str, what: &str) -> Result<f64> {
    map.get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::Config(format!("{what} needs a numeric {key:?}")))
}

/// Parse a configuration document, rejecting unknown keys at every level.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON: {e}")))?;
    let map = expect_object(
        &root,
        "config",
        &["N_list", "sigma_rule", "schedule", "K_max", "delta_xi", "quadrature"],
    )?;

    let n_list: Vec<u32> = map
        .get("N_list")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Config("config needs an integer array \"N_list\"".into()))?
        .iter()
        .map(|v| {
            v.as_u64()
                .and_then(|x| u32::try_from(x).ok())
                .ok_or_else(|| Error::Config(format!("bad N value {v}")))
        })
        .collect::<Result<_>>()?;

    let sigma_value = map
        .get("sigma_rule")
        .ok_or_else(|| Error::Config("config needs \"sigma_rule\"".into()))?;
    let sigma_map = expect_object(sigma_value, "sigma_rule", &["kind", "beta", "value"])?;
    let sigma_rule = match sigma_map.get("kind").and_then(Value::as_str) {
        Some("paper_slow") => {
            if sigma_map.contains_key("value") {
                return Err(Error::Config("paper_slow takes \"beta\", not \"value\"".into()));
            }
            SigmaRule::PaperSlow { beta: get_f64(sigma_map, "beta", "sigma_rule")? }
        }
        Some("fixed") => {
            if sigma_map.contains_key("beta") {
                return Err(Error::Config("fixed takes \"value\", not \"beta\"".into()));
            }
            SigmaRule::Fixed { value: get_f64(sigma_map, "value", "sigma_rule")? }
        }
        other => return Err(Error::Config(format!("unknown sigma_rule kind {other:?}"))),
    };

    let schedule_value = map
        .get("schedule")
        .ok_or_else(|| Error::Config("config needs \"schedule\"".into()))?;
    let schedule_map = expect_object(schedule_value, "schedule", &["kind", "alpha"])?;
    let schedule = match schedule_map.get("kind").and_then(Value::as_str) {
        Some("paper_exact") => {
            if schedule_map.contains_key("alpha") {
                return Err(Error::Config("paper_exact takes no \"alpha\"".into()));
            }
            Schedule::PaperExact
        }
        Some("power_law") => Schedule::PowerLaw { alpha: get_f64(schedule_map, "alpha", "schedule")? },
        other => return Err(Error::Config(format!("unknown schedule kind {other:?}"))),
    };

    let k_max = match map.get("K_max") {
        None => 5,
        Some(v) => v
            .as_u64()
            .map(|x| x as usize)
            .ok_or_else(|| Error::Config("K_max must be an integer".into()))?,
    };
    let delta_xi = match map.get("delta_xi") {
        None => 0.25,
        Some(v) => v.as_f64().ok_or_else(|| Error::Config("delta_xi must be a number".into()))?,
    };
    let eta_tol = match map.get("quadrature") {
        None => 1e-9,
        Some(q) => {
            let qmap = expect_object(q, "quadrature", &["eta_tol"])?;
            get_f64(qmap, "eta_tol", "quadrature")?
        }
    };

    let config = ExperimentConfig { n_list, sigma_rule, schedule, k_max, delta_xi, eta_tol };
    config.validate()?;
    Ok(config)
}
