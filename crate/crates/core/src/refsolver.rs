//! Direct nonlinear integration of the reduced system by Strang splitting,
//! independent of the Picard expansion: half-step free evolution (exact
//! transport phases for `u`, `v`; the exact wave rotation for
//! `(phi, d_t phi)`), a nonlinear kick with frozen coefficients
//!
//! ```text
//! u      += -i dt conv(phi, v)
//! v      += -i dt conv(phi, u)
//! d_t phi +=  2 dt F[Re(u conj v)]
//! ```
//!
//! then another free half-step. The free parts are exact, the kick
//! coefficients are band-limited and small, so the scheme is second order
//! at the resolution rule.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::norms::modulation_norm;
use crate::picard::{real_product_source, FieldState};
use crate::propagators::{transport, wave_pair_evolve, Direction, TimeGrid};
use crate::spectral::convolve;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Disable to integrate only the free system (reversibility checks).
    pub nonlinear: bool,
    /// Record every `record_every`-th state (0 = none; endpoints always kept
    /// when recording is on).
    pub record_every: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { nonlinear: true, record_every: 0 }
    }
}

#[derive(Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<FieldState>,
}

fn half_free(state: &mut FieldState, tau: f64) -> Result<()> {
    state.u = transport(&state.u, tau, Direction::Right);
    state.v = transport(&state.v, tau, Direction::Left);
    let (phi, dt_phi) = wave_pair_evolve(&state.phi, &state.dt_phi, tau)?;
    state.phi = phi;
    state.dt_phi = dt_phi;
    Ok(())
}

fn kick(state: &mut FieldState, dt: f64) -> Result<()> {
    let minus_i_dt = Complex64::new(0.0, -dt);
    let du = convolve(&state.phi, &state.v)?.scaled(minus_i_dt);
    let dv = convolve(&state.phi, &state.u)?.scaled(minus_i_dt);
    let source = real_product_source(&state.u, &state.v)?;
    state.u = state.u.add(&du)?;
    state.v = state.v.add(&dv)?;
    state.dt_phi = state.dt_phi.add(&source.scaled(Complex64::new(2.0 * dt, 0.0)))?;
    Ok(())
}

/// Integrate from `initial.t` to `t_final` in `n_steps` Strang steps.
///
/// `n_steps` must obey the resolution rule for the grid's top frequency. A
/// modulation norm growing more than tenfold within one step aborts with an
/// instability diagnostic.
pub fn solve(
    initial: &FieldState,
    t_final: f64,
    n_steps: usize,
    opts: &SolveOptions,
) -> Result<(FieldState, Option<Trajectory>)> {
    let duration = t_final - initial.t;
    let required = TimeGrid::required_steps(duration, initial.u.grid.xi_max);
    if n_steps < required {
        return Err(Error::InvalidInput(format!(
            "n_steps = {n_steps} violates the resolution rule (need >= {required})"
        )));
    }
    let dt = duration / n_steps as f64;
    let mut state = initial.clone();
    let mut trajectory = if opts.record_every > 0 {
        Some(Trajectory { times: vec![state.t], states: vec![state.clone()] })
    } else {
        None
    };

    let norm_triplet = |s: &FieldState| -> Result<[f64; 3]> {
        Ok([
            modulation_norm(&s.u)?,
            modulation_norm(&s.v)?,
            modulation_norm(&s.phi)?,
        ])
    };
    let mut prev_norms = norm_triplet(&state)?;

    for step in 0..n_steps {
        half_free(&mut state, dt / 2.0)?;
        if opts.nonlinear {
            kick(&mut state, dt)?;
        }
        half_free(&mut state, dt / 2.0)?;
        state.t = initial.t + dt * (step + 1) as f64;

        let norms = norm_triplet(&state)?;
        for (idx, name) in ["u", "v", "phi"].iter().enumerate() {
            let floor = 1e-30;
            if norms[idx] > 10.0 * prev_norms[idx].max(floor) && prev_norms[idx] > floor {
                return Err(Error::Instability {
                    step,
                    component: name.to_string(),
                    before: prev_norms[idx],
                    after: norms[idx],
                });
            }
        }
        prev_norms = norms;

        if let Some(tr) = trajectory.as_mut() {
            let is_last = step + 1 == n_steps;
            if (step + 1) % opts.record_every == 0 || is_last {
                tr.times.push(state.t);
                tr.states.push(state.clone());
            }
        }
    }
    Ok((state, trajectory))
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualRow {
    pub t: f64,
    pub equation: String,
    pub relative: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub rows: Vec<ResidualRow>,
    pub max_relative: f64,
}

/// A-posteriori residual of the reduced system along a recorded trajectory:
/// central-difference time derivatives against the spectral right-hand
/// sides, in modulation norm, each equation normalized by the magnitude of
/// its largest term.
pub fn residual(trajectory: &Trajectory, sample_nodes: &[usize]) -> Result<ResidualReport> {
    if trajectory.states.len() < 3 {
        return Err(Error::InvalidInput("residual needs at least 3 recorded states".into()));
    }
    let mut rows = Vec::new();
    for &j in sample_nodes {
        if j == 0 || j + 1 >= trajectory.states.len() {
            return Err(Error::InvalidInput(format!(
                "sample node {j} is not interior to the trajectory"
            )));
        }
        let prev = &trajectory.states[j - 1];
        let next = &trajectory.states[j + 1];
        let here = &trajectory.states[j];
        let two_dt = trajectory.times[j + 1] - trajectory.times[j - 1];
        let grid = here.u.grid;

        let ddt = |a: &crate::spectral::SpectralFunction, b: &crate::spectral::SpectralFunction| {
            crate::spectral::SpectralFunction {
                grid,
                samples: b
                    .samples
                    .iter()
                    .zip(&a.samples)
                    .map(|(nb, na)| (nb - na) / two_dt)
                    .collect(),
                real_physical: false,
            }
        };
        let i_xi = |f: &crate::spectral::SpectralFunction, sign: f64| crate::spectral::SpectralFunction {
            grid,
            samples: grid
                .nodes()
                .zip(&f.samples)
                .map(|(xi, z)| z * Complex64::new(0.0, sign * xi))
                .collect(),
            real_physical: false,
        };

        // (d_t + d_x) u + i phi v = 0
        let dt_u = ddt(&prev.u, &next.u);
        let ixu = i_xi(&here.u, 1.0);
        let coupling_u = convolve(&here.phi, &here.v)?.scaled(Complex64::new(0.0, 1.0));
        let r_u = dt_u.add(&ixu)?.add(&coupling_u)?;
        let scale_u = modulation_norm(&dt_u)?
            .max(modulation_norm(&ixu)?)
            .max(modulation_norm(&coupling_u)?)
            .max(1e-300);
        rows.push(ResidualRow {
            t: trajectory.times[j],
            equation: "u".into(),
            relative: modulation_norm(&r_u)? / scale_u,
        });

        // (d_t - d_x) v + i phi u = 0
        let dt_v = ddt(&prev.v, &next.v);
        let ixv = i_xi(&here.v, -1.0);
        let coupling_v = convolve(&here.phi, &here.u)?.scaled(Complex64::new(0.0, 1.0));
        let r_v = dt_v.add(&ixv)?.add(&coupling_v)?;
        let scale_v = modulation_norm(&dt_v)?
            .max(modulation_norm(&ixv)?)
            .max(modulation_norm(&coupling_v)?)
            .max(1e-300);
        rows.push(ResidualRow {
            t: trajectory.times[j],
            equation: "v".into(),
            relative: modulation_norm(&r_v)? / scale_v,
        });

        // d_t phi = dt_phi  and  d_t dt_phi + xi^2 phi = 2 F[Re(u conj v)]
        let dt_phi_fd = ddt(&prev.phi, &next.phi);
        let r_phi1 = dt_phi_fd.sub(&here.dt_phi)?;
        let scale_phi1 = modulation_norm(&dt_phi_fd)?
            .max(modulation_norm(&here.dt_phi)?)
            .max(1e-300);
        rows.push(ResidualRow {
            t: trajectory.times[j],
            equation: "phi".into(),
            relative: modulation_norm(&r_phi1)? / scale_phi1,
        });

        let dt_dtphi = ddt(&prev.dt_phi, &next.dt_phi);
        let xi2_phi = crate::spectral::SpectralFunction {
            grid,
            samples: grid
                .nodes()
                .zip(&here.phi.samples)
                .map(|(xi, z)| z * (xi * xi))
                .collect(),
            real_physical: here.phi.real_physical,
        };
        let source = real_product_source(&here.u, &here.v)?.scaled(Complex64::new(2.0, 0.0));
        let r_phi2 = dt_dtphi.add(&xi2_phi)?.sub(&source)?;
        let scale_phi2 = modulation_norm(&dt_dtphi)?
            .max(modulation_norm(&xi2_phi)?)
            .max(modulation_norm(&source)?)
            .max(1e-300);
        rows.push(ResidualRow {
            t: trajectory.times[j],
            equation: "dt_phi".into(),
            relative: modulation_norm(&r_phi2)? / scale_phi2,
        });
    }
    let max_relative = rows.iter().map(|r| r.relative).fold(0.0, f64::max);
    Ok(ResidualReport { rows, max_relative })
}
