//! Linear evolution on the Fourier side: transport phases for the null
//! derivatives, the wave kernel `sin(tau xi)/xi`, Duhamel time quadrature,
//! and free wave propagation of `(phi, d_t phi)` pairs.
//!
//! Duhamel integrals use composite trapezoid on a uniform [`TimeGrid`]. The
//! accumulator types stream the cumulative trapezoid so a caller can obtain
//! the integral at every node in one pass without storing source history.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{FrequencyGrid, SpectralFunction};

/// Hermitian-symmetry tolerance for wave sources (they represent real
/// physical densities).
const HERMITIAN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Solves `(d_t + d_x) u = 0`: multiply by `e^{-i t xi}`.
    Right,
    /// Solves `(d_t - d_x) v = 0`: multiply by `e^{+i t xi}`.
    Left,
}

/// Uniform nodes `t'_j = j t_final / n_steps`.
#[derive(Debug, Clone)]
pub struct TimeGrid {
    pub t_final: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    /// `n_steps` must satisfy the resolution rule
    /// `n_steps >= max(8, ceil(8 |t_final| xi_max))`.
    pub fn new(t_final: f64, n_steps: usize, xi_max: f64) -> Result<Self> {
        if !t_final.is_finite() {
            return Err(Error::InvalidInput("non-finite final time".into()));
        }
        let required = Self::required_steps(t_final, xi_max);
        if n_steps < required {
            return Err(Error::InvalidInput(format!(
                "n_steps = {n_steps} violates the resolution rule (need >= {required} for t = {t_final}, xi_max = {xi_max})"
            )));
        }
        Ok(TimeGrid { t_final, n_steps })
    }

    pub fn required_steps(t_final: f64, xi_max: f64) -> usize {
        ((8.0 * t_final.abs() * xi_max).ceil() as usize).max(8)
    }

    /// Minimal grid satisfying the resolution rule.
    pub fn with_rule(t_final: f64, xi_max: f64) -> Result<Self> {
        Self::new(t_final, Self::required_steps(t_final, xi_max), xi_max)
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        self.t_final * j as f64 / self.n_steps as f64
    }

    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }
}

/// Free transport: multiply samples by the unit-modulus phase `e^{-+ i t xi}`.
pub fn transport(f: &SpectralFunction, t: f64, direction: Direction) -> SpectralFunction {
    let sign = match direction {
        Direction::Right => -1.0,
        Direction::Left => 1.0,
    };
    let samples = f
        .grid
        .nodes()
        .zip(&f.samples)
        .map(|(xi, z)| z * Complex64::from_polar(1.0, sign * t * xi))
        .collect();
    SpectralFunction { grid: f.grid, samples, real_physical: false }
}

/// `sin(tau xi)/xi` with the removable singularity filled in; the series
/// branch keeps the evaluation stable for `|tau xi| < 1e-4`.
pub fn sinc_kernel(tau: f64, xi: f64) -> f64 {
    let z = tau * xi;
    if z.abs() < 1e-4 {
        tau * (1.0 - z * z / 6.0)
    } else {
        z.sin() / xi
    }
}

/// The wave-kernel multiplier `m(xi) = sin(tau xi)/xi` sampled on `grid`.
pub fn wave_multiplier(grid: FrequencyGrid, tau: f64) -> Result<SpectralFunction> {
    if tau < 0.0 {
        return Err(Error::InvalidInput(format!("wave multiplier needs tau >= 0, got {tau}")));
    }
    let mut out = SpectralFunction::from_fn(grid, |xi| Complex64::new(sinc_kernel(tau, xi), 0.0));
    out.real_physical = true;
    Ok(out)
}

/// Streaming cumulative trapezoid of `e^{+- i t' xi} S(t')`; emits the
/// transport Duhamel value at each pushed node.
pub struct TransportAccumulator {
    direction: Direction,
    grid: FrequencyGrid,
    acc: Vec<Complex64>,
    prev: Option<(f64, Vec<Complex64>)>,
}

impl TransportAccumulator {
    pub fn new(grid: FrequencyGrid, direction: Direction) -> Self {
        TransportAccumulator {
            direction,
            grid,
            acc: vec![Complex64::new(0.0, 0.0); grid.n_points],
            prev: None,
        }
    }

    fn phase_sign(&self) -> f64 {
        match self.direction {
            Direction::Right => 1.0,
            Direction::Left => -1.0,
        }
    }

    /// Push the source at node time `t` (nodes must arrive in order) and get
    /// `-i int_0^t e^{-+ i (t - t') xi} S(t') dt'`.
    pub fn push(&mut self, t: f64, source: &SpectralFunction) -> Result<SpectralFunction> {
        if source.grid != self.grid {
            return Err(Error::GridMismatch("transport accumulator source grid".into()));
        }
        let sgn = self.phase_sign();
        let weighted: Vec<Complex64> = self
            .grid
            .nodes()
            .zip(&source.samples)
            .map(|(xi, z)| z * Complex64::from_polar(1.0, sgn * t * xi))
            .collect();
        if let Some((t_prev, w_prev)) = &self.prev {
            let half_dt = 0.5 * (t - t_prev);
            for i in 0..self.acc.len() {
                self.acc[i] += half_dt * (w_prev[i] + weighted[i]);
            }
        }
        self.prev = Some((t, weighted));
        let minus_i = Complex64::new(0.0, -1.0);
        let samples = self
            .grid
            .nodes()
            .zip(&self.acc)
            .map(|(xi, a)| minus_i * Complex64::from_polar(1.0, -sgn * t * xi) * a)
            .collect();
        Ok(SpectralFunction { grid: self.grid, samples, real_physical: false })
    }
}

/// Streaming cumulative trapezoid for the wave Duhamel term and its time
/// derivative.
pub struct WaveAccumulator {
    grid: FrequencyGrid,
    /// `int cos(t' xi) S dt'`
    bc: Vec<Complex64>,
    /// `int sin(t' xi)/xi S dt'`
    bs: Vec<Complex64>,
    prev: Option<(f64, Vec<Complex64>)>,
}

/// Wave Duhamel output at one node.
pub struct WaveSlice {
    pub phi: SpectralFunction,
    pub dt_phi: SpectralFunction,
}

impl WaveAccumulator {
    pub fn new(grid: FrequencyGrid) -> Self {
        WaveAccumulator {
            grid,
            bc: vec![Complex64::new(0.0, 0.0); grid.n_points],
            bs: vec![Complex64::new(0.0, 0.0); grid.n_points],
            prev: None,
        }
    }

    /// Push the (Hermitian) source at node time `t`; returns
    /// `phi(t) = 2 int_0^t sin((t-t') xi)/xi S dt'` and its time derivative
    /// `2 int_0^t cos((t-t') xi) S dt'`.
    pub fn push(&mut self, t: f64, source: &SpectralFunction, node: usize) -> Result<WaveSlice> {
        if source.grid != self.grid {
            return Err(Error::GridMismatch("wave accumulator source grid".into()));
        }
        let asym = source.hermitian_asymmetry();
        if asym > HERMITIAN_TOL {
            return Err(Error::NonHermitianSource { node, asymmetry: asym });
        }
        if let Some((t_prev, s_prev)) = &self.prev {
            let half_dt = 0.5 * (t - t_prev);
            for (i, xi) in self.grid.nodes().enumerate() {
                let gc_prev = s_prev[i] * (t_prev * xi).cos();
                let gc_now = source.samples[i] * (t * xi).cos();
                self.bc[i] += half_dt * (gc_prev + gc_now);
                let gs_prev = s_prev[i] * sinc_kernel(*t_prev, xi);
                let gs_now = source.samples[i] * sinc_kernel(t, xi);
                self.bs[i] += half_dt * (gs_prev + gs_now);
            }
        }
        self.prev = Some((t, source.samples.clone()));
        let mut phi = SpectralFunction::zero(self.grid);
        let mut dt_phi = SpectralFunction::zero(self.grid);
        for (i, xi) in self.grid.nodes().enumerate() {
            let c = (t * xi).cos();
            phi.samples[i] = 2.0 * (sinc_kernel(t, xi) * self.bc[i] - c * self.bs[i]);
            dt_phi.samples[i] = 2.0 * (c * self.bc[i] + (t * xi).sin() * xi * self.bs[i]);
        }
        phi.real_physical = true;
        dt_phi.real_physical = true;
        Ok(WaveSlice { phi, dt_phi })
    }
}

fn check_source_len(source: &[SpectralFunction], tg: &TimeGrid) -> Result<()> {
    if source.len() != tg.n_nodes() {
        return Err(Error::InvalidInput(format!(
            "source has {} slices but the time grid has {} nodes",
            source.len(),
            tg.n_nodes()
        )));
    }
    Ok(())
}

/// `-i int_0^T e^{-+ i (T - t') xi} S(t') d t'` at `T = tg.t_final` by
/// composite trapezoid over the nodes of `tg`.
pub fn duhamel_transport(
    source: &[SpectralFunction],
    tg: &TimeGrid,
    direction: Direction,
) -> Result<SpectralFunction> {
    check_source_len(source, tg)?;
    let mut acc = TransportAccumulator::new(source[0].grid, direction);
    let mut last = None;
    for (j, s) in source.iter().enumerate() {
        last = Some(acc.push(tg.node(j), s)?);
    }
    Ok(last.expect("time grid has at least one node"))
}

/// Transport Duhamel value at every node of `tg`.
pub fn duhamel_transport_profile(
    source: &[SpectralFunction],
    tg: &TimeGrid,
    direction: Direction,
) -> Result<Vec<SpectralFunction>> {
    check_source_len(source, tg)?;
    let mut acc = TransportAccumulator::new(source[0].grid, direction);
    source
        .iter()
        .enumerate()
        .map(|(j, s)| acc.push(tg.node(j), s))
        .collect()
}

/// `2 int_0^T sin((T-t') xi)/xi S(t') dt'` at `T = tg.t_final`; the source
/// slices must be Hermitian and the output is flagged real-physical.
pub fn duhamel_wave(source: &[SpectralFunction], tg: &TimeGrid) -> Result<SpectralFunction> {
    check_source_len(source, tg)?;
    let mut acc = WaveAccumulator::new(source[0].grid);
    let mut last = None;
    for (j, s) in source.iter().enumerate() {
        last = Some(acc.push(tg.node(j), s, j)?);
    }
    Ok(last.expect("time grid has at least one node").phi)
}

/// Wave Duhamel term and its time derivative at every node of `tg`.
pub fn duhamel_wave_profile(source: &[SpectralFunction], tg: &TimeGrid) -> Result<Vec<WaveSlice>> {
    check_source_len(source, tg)?;
    let mut acc = WaveAccumulator::new(source[0].grid);
    source
        .iter()
        .enumerate()
        .map(|(j, s)| acc.push(tg.node(j), s, j))
        .collect()
}

/// Free wave propagation of the pair `(phi_hat, d_t phi_hat)` by time `tau`
/// (either sign): the rotation
/// `phi' = cos(tau xi) phi + sin(tau xi)/xi dt_phi`,
/// `dt_phi' = -xi sin(tau xi) phi + cos(tau xi) dt_phi`.
pub fn wave_pair_evolve(
    phi: &SpectralFunction,
    dt_phi: &SpectralFunction,
    tau: f64,
) -> Result<(SpectralFunction, SpectralFunction)> {
    phi.assert_same_grid(dt_phi)?;
    let grid = phi.grid;
    let mut phi_out = SpectralFunction::zero(grid);
    let mut dt_out = SpectralFunction::zero(grid);
    for (i, xi) in grid.nodes().enumerate() {
        let c = (tau * xi).cos();
        let s_over = sinc_kernel(tau, xi);
        let s_times = (tau * xi).sin() * xi;
        phi_out.samples[i] = c * phi.samples[i] + s_over * dt_phi.samples[i];
        dt_out.samples[i] = -s_times * phi.samples[i] + c * dt_phi.samples[i];
    }
    phi_out.real_physical = phi.real_physical && dt_phi.real_physical;
    dt_out.real_physical = phi_out.real_physical;
    Ok((phi_out, dt_out))
}
