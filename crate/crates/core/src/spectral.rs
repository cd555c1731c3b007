//! Frequency-grid representation of Fourier transforms.
//!
//! Everything downstream (norms, propagators, the iteration engine, the
//! reference solver) works on uniformly sampled Fourier data. The convention
//! is `f_hat(xi) = int e^{-i x xi} f(x) dx`, so a pointwise product of
//! physical functions becomes `(1/2pi) (f_hat * g_hat)` on this side. The
//! `1/2pi` is carried by [`convolve`] so that all modules agree exactly.

use std::cell::RefCell;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Default cap on grid sizes (number of sample points).
pub const DEFAULT_MAX_POINTS: usize = (1 << 24) + 1;

/// Relative tolerance used when deciding whether a frequency sits on a node.
const NODE_SNAP_TOL: f64 = 1e-9;

/// Uniform, symmetric sampling of the frequency variable.
///
/// The grid always satisfies `xi_min = -xi_max` and `n_points - 1` is a power
/// of two, so conjugate reflection maps nodes to nodes and convolutions can
/// ride on power-of-two FFTs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub xi_min: f64,
    pub xi_max: f64,
    pub n_points: usize,
    pub delta_xi: f64,
}

impl FrequencyGrid {
    pub fn node(&self, i: usize) -> f64 {
        self.xi_min + self.delta_xi * i as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.node(i))
    }

    /// Index of the node at frequency `xi`, if `xi` sits on the grid.
    pub fn index_of(&self, xi: f64) -> Option<usize> {
        let raw = (xi - self.xi_min) / self.delta_xi;
        let rounded = raw.round();
        if (raw - rounded).abs() > NODE_SNAP_TOL * (1.0 + raw.abs()) {
            return None;
        }
        let i = rounded as isize;
        if i < 0 || i as usize >= self.n_points {
            None
        } else {
            Some(i as usize)
        }
    }

    /// Index of the node at xi = 0 (always present: the grid is symmetric
    /// with an even panel count).
    pub fn zero_index(&self) -> usize {
        (self.n_points - 1) / 2
    }

    pub fn contains(&self, xi: f64) -> bool {
        xi >= self.xi_min - NODE_SNAP_TOL && xi <= self.xi_max + NODE_SNAP_TOL
    }
}

/// Construct a symmetric grid `[-extent, extent]` whose spacing is the
/// largest value `<= delta_xi` for which the panel count is a power of two.
pub fn make_grid(extent: f64, delta_xi: f64) -> Result<FrequencyGrid> {
    make_grid_with_budget(extent, delta_xi, DEFAULT_MAX_POINTS)
}

pub fn make_grid_with_budget(extent: f64, delta_xi: f64, max_points: usize) -> Result<FrequencyGrid> {
    if !(extent > 0.0) || !(delta_xi > 0.0) {
        return Err(Error::InvalidInput(format!(
            "grid extent and spacing must be positive (got extent={extent}, delta_xi={delta_xi})"
        )));
    }
    if extent / delta_xi < 8.0 {
        return Err(Error::InvalidInput(format!(
            "grid must resolve at least 8 nodes per half-line (extent/delta_xi = {})",
            extent / delta_xi
        )));
    }
    // Smallest power of two >= 2*extent/delta_xi, so the realized spacing is
    // rounded down from the request.
    let target = 2.0 * extent / delta_xi;
    let mut panels: usize = 1;
    while (panels as f64) < target * (1.0 - 1e-12) {
        panels = panels
            .checked_mul(2)
            .ok_or_else(|| Error::InvalidInput("grid panel count overflow".into()))?;
        if panels >= usize::MAX / 2 {
            return Err(Error::InvalidInput("grid panel count overflow".into()));
        }
    }
    let n_points = panels + 1;
    if n_points > max_points {
        return Err(Error::MemoryBudget { requested: n_points, budget: max_points });
    }
    Ok(FrequencyGrid {
        xi_min: -extent,
        xi_max: extent,
        n_points,
        delta_xi: 2.0 * extent / panels as f64,
    })
}

/// Closed frequency interval, used for support bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SupportInterval {
    pub lo: f64,
    pub hi: f64,
}

impl SupportInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidInput(format!("support interval has lo {lo} > hi {hi}")));
        }
        Ok(Self { lo, hi })
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, xi: f64) -> bool {
        xi >= self.lo && xi <= self.hi
    }

    /// Minkowski sum with another interval.
    pub fn sum(&self, other: &SupportInterval) -> SupportInterval {
        SupportInterval { lo: self.lo + other.lo, hi: self.hi + other.hi }
    }

    pub fn reflect(&self) -> SupportInterval {
        SupportInterval { lo: -self.hi, hi: -self.lo }
    }
}

/// Merge a list of intervals into maximal disjoint ones, gluing gaps up to `gap`.
pub fn merge_intervals(mut intervals: Vec<SupportInterval>, gap: f64) -> Vec<SupportInterval> {
    intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut out: Vec<SupportInterval> = Vec::new();
    for iv in intervals {
        match out.last_mut() {
            Some(last) if iv.lo <= last.hi + gap => {
                if iv.hi > last.hi {
                    last.hi = iv.hi;
                }
            }
            _ => out.push(iv),
        }
    }
    out
}

/// Complex samples of a Fourier transform on a [`FrequencyGrid`].
#[derive(Debug, Clone)]
pub struct SpectralFunction {
    pub grid: FrequencyGrid,
    pub samples: Vec<Complex64>,
    /// Marks functions whose physical-space counterpart is real, i.e.
    /// `f_hat(-xi) = conj(f_hat(xi))` at every node.
    pub real_physical: bool,
}

impl SpectralFunction {
    pub fn zero(grid: FrequencyGrid) -> Self {
        SpectralFunction {
            grid,
            samples: vec![Complex64::new(0.0, 0.0); grid.n_points],
            real_physical: true,
        }
    }

    pub fn from_samples(grid: FrequencyGrid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.n_points {
            return Err(Error::GridMismatch(format!(
                "sample count {} does not match grid ({} points)",
                samples.len(),
                grid.n_points
            )));
        }
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite sample".into()));
        }
        Ok(SpectralFunction { grid, samples, real_physical: false })
    }

    /// Sample an arbitrary function of frequency on the grid.
    pub fn from_fn(grid: FrequencyGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let samples = grid.nodes().map(f).collect();
        SpectralFunction { grid, samples, real_physical: false }
    }

    pub fn assert_same_grid(&self, other: &SpectralFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "grids differ: [{}, {}] x {} vs [{}, {}] x {}",
                self.grid.xi_min, self.grid.xi_max, self.grid.n_points,
                other.grid.xi_min, other.grid.xi_max, other.grid.n_points
            )));
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Maximum of `|f(-xi) - conj(f(xi))|` relative to the peak magnitude.
    pub fn hermitian_asymmetry(&self) -> f64 {
        let n = self.grid.n_points;
        let peak = self.max_abs();
        if peak == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..n {
            let j = n - 1 - i;
            let d = (self.samples[j] - self.samples[i].conj()).norm();
            worst = worst.max(d);
        }
        worst / peak
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_asymmetry() <= tol
    }

    /// Mark as real-physical after verifying Hermitian symmetry.
    pub fn flag_real_physical(mut self, tol: f64) -> Result<Self> {
        let asym = self.hermitian_asymmetry();
        if asym > tol {
            return Err(Error::InvalidInput(format!(
                "cannot flag as real_physical: Hermitian asymmetry {asym:.3e} > {tol:.1e}"
            )));
        }
        self.real_physical = true;
        Ok(self)
    }

    pub fn scaled(&self, c: Complex64) -> SpectralFunction {
        SpectralFunction {
            grid: self.grid,
            samples: self.samples.iter().map(|z| z * c).collect(),
            real_physical: self.real_physical && c.im == 0.0,
        }
    }

    pub fn add(&self, other: &SpectralFunction) -> Result<SpectralFunction> {
        self.assert_same_grid(other)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + b)
            .collect();
        Ok(SpectralFunction {
            grid: self.grid,
            samples,
            real_physical: self.real_physical && other.real_physical,
        })
    }

    pub fn sub(&self, other: &SpectralFunction) -> Result<SpectralFunction> {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    /// Discrete l2 distance relative to `reference` (quadrature weights cancel).
    pub fn relative_l2_distance(&self, reference: &SpectralFunction) -> Result<f64> {
        self.assert_same_grid(reference)?;
        let mut num = 0.0;
        let mut den = 0.0;
        for (a, b) in self.samples.iter().zip(&reference.samples) {
            num += (a - b).norm_sqr();
            den += b.norm_sqr();
        }
        if den == 0.0 {
            return Ok(if num == 0.0 { 0.0 } else { f64::INFINITY });
        }
        Ok((num / den).sqrt())
    }
}

/// Characteristic function of `interval`, sampled with the midpoint-of-jump
/// convention: nodes exactly at the endpoints carry half the amplitude so
/// trapezoidal quadrature of the samples reproduces the exact integral.
pub fn indicator(grid: FrequencyGrid, interval: SupportInterval, amplitude: f64) -> Result<SpectralFunction> {
    if !grid.contains(interval.lo) || !grid.contains(interval.hi) {
        return Err(Error::InvalidInput(format!(
            "interval [{}, {}] exceeds grid extent {}",
            interval.lo, interval.hi, grid.xi_max
        )));
    }
    let mut out = SpectralFunction::zero(grid);
    let snap = NODE_SNAP_TOL * (1.0 + interval.lo.abs().max(interval.hi.abs()));
    for (i, xi) in grid.nodes().enumerate() {
        let v = if (xi - interval.lo).abs() <= snap || (xi - interval.hi).abs() <= snap {
            0.5 * amplitude
        } else if xi > interval.lo && xi < interval.hi {
            amplitude
        } else {
            0.0
        };
        out.samples[i] = Complex64::new(v, 0.0);
    }
    // Hermitian only for symmetric intervals; cheap exact test.
    out.real_physical = (interval.lo + interval.hi).abs() <= snap;
    Ok(out)
}

/// Fourier transform of the complex conjugate: `g(xi) = conj(f(-xi))`.
pub fn conjugate_reflect(f: &SpectralFunction) -> SpectralFunction {
    let n = f.grid.n_points;
    let samples = (0..n).map(|i| f.samples[n - 1 - i].conj()).collect();
    SpectralFunction { grid: f.grid, samples, real_physical: f.real_physical }
}

/// Hermitian part `(f + conjugate_reflect(f)) / 2`; the Fourier transform of
/// the real part of the physical function.
pub fn hermitian_symmetrize(f: &SpectralFunction) -> SpectralFunction {
    let n = f.grid.n_points;
    let samples: Vec<Complex64> = (0..n)
        .map(|i| 0.5 * (f.samples[i] + f.samples[n - 1 - i].conj()))
        .collect();
    SpectralFunction { grid: f.grid, samples, real_physical: true }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if forward {
            p.plan_fft_forward(len)
        } else {
            p.plan_fft_inverse(len)
        }
    })
}

fn fft_len_for(n_points: usize) -> usize {
    // Panel count is a power of two; doubling it leaves exactly one circular
    // alias (the extreme bin), which falls outside the extracted index range.
    2 * (n_points - 1)
}

/// `(1/2pi) (f * g)` by trapezoidal discrete convolution, FFT-accelerated.
///
/// This is the Fourier transform of the pointwise physical product `fg`
/// under the convention `f_hat(xi) = int e^{-i x xi} f dx`. The output lives
/// on the shared input grid; callers must keep supports inside the extent.
pub fn convolve(f: &SpectralFunction, g: &SpectralFunction) -> Result<SpectralFunction> {
    convolve_pairs(&[(f, g)])
}

/// Sum of convolutions `(1/2pi) sum_i (f_i * g_i)` sharing one inverse FFT.
pub fn convolve_pairs(pairs: &[(&SpectralFunction, &SpectralFunction)]) -> Result<SpectralFunction> {
    let (f0, _) = pairs.first().ok_or_else(|| Error::InvalidInput("empty pair list".into()))?;
    let grid = f0.grid;
    for (f, g) in pairs {
        f.assert_same_grid(g)?;
        if f.grid != grid {
            return Err(Error::GridMismatch("convolution pairs on different grids".into()));
        }
    }
    let m = grid.n_points - 1;
    let p = fft_len_for(grid.n_points);
    if p > 4 * DEFAULT_MAX_POINTS {
        return Err(Error::MemoryBudget { requested: p, budget: 4 * DEFAULT_MAX_POINTS });
    }
    let fwd = plan(p, true);
    let inv = plan(p, false);

    let mut acc = vec![Complex64::new(0.0, 0.0); p];
    let mut buf_a = vec![Complex64::new(0.0, 0.0); p];
    let mut buf_b = vec![Complex64::new(0.0, 0.0); p];
    for (f, g) in pairs {
        buf_a.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        buf_b.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        buf_a[..grid.n_points].copy_from_slice(&f.samples);
        buf_b[..grid.n_points].copy_from_slice(&g.samples);
        fwd.process(&mut buf_a);
        fwd.process(&mut buf_b);
        for i in 0..p {
            acc[i] += buf_a[i] * buf_b[i];
        }
    }
    inv.process(&mut acc);
    let scale = grid.delta_xi / (2.0 * std::f64::consts::PI) / p as f64;
    // c(xi_k) lives at linear-convolution index k + m/2; with fft length 2m the
    // only circular alias lands at index 0, outside [m/2, 3m/2].
    let shift = m / 2;
    let samples: Vec<Complex64> = (0..grid.n_points)
        .map(|k| acc[(k + shift) % p] * scale)
        .collect();
    let mut out = SpectralFunction { grid, samples, real_physical: false };
    out.real_physical = pairs.iter().all(|(f, g)| f.real_physical && g.real_physical);
    Ok(out)
}

/// Maximal intervals on which `|samples| >= threshold * max|samples|`.
///
/// A zero function has empty support. With `threshold = 0` only strictly
/// nonzero samples count.
pub fn support_of(f: &SpectralFunction, threshold: f64) -> Result<Vec<SupportInterval>> {
    if threshold < 0.0 {
        return Err(Error::InvalidInput("support threshold must be nonnegative".into()));
    }
    let peak = f.max_abs();
    if peak == 0.0 {
        return Ok(Vec::new());
    }
    let cut = threshold * peak;
    let keep = |z: &Complex64| if threshold == 0.0 { z.norm() > 0.0 } else { z.norm() >= cut };
    let mut out = Vec::new();
    let mut run_start: Option<usize> = None;
    for i in 0..f.grid.n_points {
        if keep(&f.samples[i]) {
            if run_start.is_none() {
                run_start = Some(i);
            }
        } else if let Some(s) = run_start.take() {
            out.push(SupportInterval { lo: f.grid.node(s), hi: f.grid.node(i - 1) });
        }
    }
    if let Some(s) = run_start {
        out.push(SupportInterval { lo: f.grid.node(s), hi: f.grid.node(f.grid.n_points - 1) });
    }
    Ok(out)
}

/// Null-coordinate substitution `u = psi1 - psi2`, `v = psi1 + psi2`.
pub fn spinor_to_null(
    psi1: &SpectralFunction,
    psi2: &SpectralFunction,
) -> Result<(SpectralFunction, SpectralFunction)> {
    psi1.assert_same_grid(psi2)?;
    let u = psi1.sub(psi2)?;
    let v = psi1.add(psi2)?;
    Ok((u, v))
}

/// Inverse of [`spinor_to_null`]: `psi1 = (u+v)/2`, `psi2 = (v-u)/2`.
pub fn null_to_spinor(
    u: &SpectralFunction,
    v: &SpectralFunction,
) -> Result<(SpectralFunction, SpectralFunction)> {
    u.assert_same_grid(v)?;
    let half = Complex64::new(0.5, 0.0);
    let psi1 = u.add(v)?.scaled(half);
    let psi2 = v.sub(u)?.scaled(half);
    Ok((psi1, psi2))
}

const DUMP_MAGIC: &[u8; 8] = b"DKGSPEC1";

/// Binary dump: magic, grid parameters, flag byte, interleaved re/im f64 LE.
pub fn write_dump<W: Write>(f: &SpectralFunction, mut w: W) -> Result<()> {
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&f.grid.xi_min.to_le_bytes())?;
    w.write_all(&f.grid.xi_max.to_le_bytes())?;
    w.write_all(&(f.grid.n_points as u64).to_le_bytes())?;
    w.write_all(&[u8::from(f.real_physical)])?;
    for z in &f.samples {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn dump_to_file(f: &SpectralFunction, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_dump(f, std::io::BufWriter::new(file))
}

pub fn read_dump<R: Read>(mut r: R) -> Result<SpectralFunction> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(Error::MalformedDump("bad magic".into()));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let xi_min = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let xi_max = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let n_points = u64::from_le_bytes(b8) as usize;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    if n_points < 2 || n_points > 4 * DEFAULT_MAX_POINTS {
        return Err(Error::MalformedDump(format!("implausible point count {n_points}")));
    }
    if !(xi_max > xi_min) || (xi_min + xi_max).abs() > 1e-9 * xi_max.abs() {
        return Err(Error::MalformedDump("grid not symmetric".into()));
    }
    let panels = n_points - 1;
    if panels & (panels - 1) != 0 {
        return Err(Error::MalformedDump("panel count not a power of two".into()));
    }
    let grid = FrequencyGrid {
        xi_min,
        xi_max,
        n_points,
        delta_xi: (xi_max - xi_min) / panels as f64,
    };
    let mut samples = Vec::with_capacity(n_points);
    for _ in 0..n_points {
        r.read_exact(&mut b8)?;
        let re = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let im = f64::from_le_bytes(b8);
        if !re.is_finite() || !im.is_finite() {
            return Err(Error::MalformedDump("non-finite sample".into()));
        }
        samples.push(Complex64::new(re, im));
    }
    Ok(SpectralFunction { grid, samples, real_physical: flag[0] != 0 })
}

pub fn load_from_file(path: &Path) -> Result<SpectralFunction> {
    let file = std::fs::File::open(path)?;
    read_dump(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn make_grid_small_example() {
        let g = make_grid(8.0, 1.0).unwrap();
        assert_eq!(g.n_points, 17);
        assert_eq!(g.xi_min, -8.0);
        assert_eq!(g.xi_max, 8.0);
        assert_eq!(g.delta_xi, 1.0);
    }

    #[test]
    fn make_grid_rounds_spacing_down_to_power_of_two_panels() {
        let g = make_grid(16.0 * 256.0, 0.25).unwrap();
        assert_eq!(g.n_points - 1, 32768);
        assert_eq!(g.xi_max, 4096.0);
        assert_relative_eq!(g.delta_xi, 0.25);

        // A non-dyadic request rounds the spacing down.
        let g = make_grid(10.0, 0.3).unwrap();
        assert!(g.delta_xi <= 0.3);
        assert!((g.n_points - 1).is_power_of_two());
    }

    #[test]
    fn make_grid_rejects_bad_input() {
        assert!(make_grid(-1.0, 0.5).is_err());
        assert!(make_grid(1.0, 0.0).is_err());
        assert!(make_grid(1.0, 0.5).is_err()); // under 8 nodes of resolution
        assert!(matches!(
            make_grid_with_budget(1024.0, 1e-6, 1 << 20),
            Err(Error::MemoryBudget { .. })
        ));
    }

    #[test]
    fn indicator_half_amplitude_at_edges() {
        let g = make_grid(16.0, 0.5).unwrap();
        let f = indicator(g, SupportInterval::new(5.0, 7.0).unwrap(), 2.0).unwrap();
        let at = |xi: f64| f.samples[g.index_of(xi).unwrap()].re;
        assert_eq!(at(6.0), 2.0);
        assert_eq!(at(5.0), 1.0);
        assert_eq!(at(7.0), 1.0);
        assert_eq!(at(4.5), 0.0);
        assert_eq!(at(7.5), 0.0);
    }

    #[test]
    fn indicator_degenerate_interval() {
        let g = make_grid(16.0, 0.5).unwrap();
        let f = indicator(g, SupportInterval::new(0.0, 0.0).unwrap(), 1.0).unwrap();
        let nonzero: Vec<_> = f.samples.iter().filter(|z| z.norm() > 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(f.samples[g.zero_index()].re, 0.5);
    }

    #[test]
    fn indicator_outside_grid_errors() {
        let g = make_grid(16.0, 0.5).unwrap();
        assert!(indicator(g, SupportInterval::new(10.0, 20.0).unwrap(), 1.0).is_err());
    }

    #[test]
    fn conjugate_reflect_involution_and_reflection() {
        let g = make_grid(16.0, 0.5).unwrap();
        let f = indicator(g, SupportInterval::new(5.0, 7.0).unwrap(), 1.0).unwrap();
        let r = conjugate_reflect(&f);
        // Real samples reflect: support moves to [-7, -5].
        assert_eq!(r.samples[g.index_of(-6.0).unwrap()].re, 1.0);
        assert_eq!(r.samples[g.index_of(6.0).unwrap()].re, 0.0);
        let rr = conjugate_reflect(&r);
        for (a, b) in rr.samples.iter().zip(&f.samples) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn conjugate_reflect_fixes_hermitian_functions() {
        let g = make_grid(16.0, 0.25).unwrap();
        let f = SpectralFunction::from_fn(g, |xi| Complex64::new((-xi * xi).exp(), xi * (-xi * xi).exp()));
        let f = hermitian_symmetrize(&f);
        let r = conjugate_reflect(&f);
        for (a, b) in r.samples.iter().zip(&f.samples) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn convolve_indicators_gives_scaled_hat() {
        // 1_[0,1] * 1_[0,1] is the triangular hat on [0,2] with peak 1 at xi=1;
        // the product convention scales by 1/2pi. At the peak the edges of
        // both factors align, which costs one order, hence the looser bound
        // there.
        let g = make_grid(16.0, 1.0 / 256.0).unwrap();
        let f = indicator(g, SupportInterval::new(0.0, 1.0).unwrap(), 1.0).unwrap();
        let c = convolve(&f, &f).unwrap();
        let two_pi = 2.0 * std::f64::consts::PI;
        let at = |xi: f64| c.samples[g.index_of(xi).unwrap()].re;
        assert_relative_eq!(at(1.0), 1.0 / two_pi, max_relative = 3e-3);
        assert_relative_eq!(at(0.5), 0.5 / two_pi, max_relative = 1e-6);
        assert_relative_eq!(at(1.25), 0.75 / two_pi, max_relative = 1e-6);
        assert_relative_eq!(at(1.5), 0.5 / two_pi, max_relative = 1e-6);
        assert!(at(2.5).abs() < 1e-12);
        assert!(at(-0.5).abs() < 1e-12);
    }

    #[test]
    fn convolve_with_zero_annihilates() {
        let g = make_grid(16.0, 0.5).unwrap();
        let f = indicator(g, SupportInterval::new(-3.0, 4.0).unwrap(), 1.3).unwrap();
        let z = SpectralFunction::zero(g);
        let c = convolve(&f, &z).unwrap();
        assert_eq!(c.max_abs(), 0.0);
    }

    #[test]
    fn convolve_quadrature_second_order_against_hat() {
        // Error against the analytic formula shrinks 4x when spacing halves.
        // Probe frequencies where the factor edges do not align (there the
        // midpoint-of-jump convention keeps the rule second order); phases
        // make the integrand non-constant so the error does not vanish.
        let exact = |xi: f64, t: f64| {
            // int_max(0,xi-1)^min(1,xi) e^{i t eta} d eta / 2pi
            let lo = (xi - 1.0).max(0.0);
            let hi = xi.min(1.0);
            if hi <= lo {
                return Complex64::new(0.0, 0.0);
            }
            let i_t = Complex64::new(0.0, t);
            ((i_t * hi).exp() - (i_t * lo).exp()) / i_t / (2.0 * std::f64::consts::PI)
        };
        let t = 3.0;
        let err_at = |dx: f64| {
            let g = make_grid(16.0, dx).unwrap();
            let f = indicator(g, SupportInterval::new(0.0, 1.0).unwrap(), 1.0).unwrap();
            let phased = SpectralFunction {
                grid: g,
                samples: g
                    .nodes()
                    .zip(&f.samples)
                    .map(|(xi, z)| z * Complex64::from_polar(1.0, t * xi))
                    .collect(),
                real_physical: false,
            };
            let c = convolve(&f, &phased).unwrap();
            let mut worst = 0.0f64;
            for xi in [0.25, 0.5, 0.75, 1.25, 1.5, 1.75] {
                let i = g.index_of(xi).unwrap();
                worst = worst.max((c.samples[i] - exact(xi, t)).norm());
            }
            worst
        };
        let e1 = err_at(1.0 / 16.0);
        let e2 = err_at(1.0 / 32.0);
        let ratio = e1 / e2;
        assert!(
            (3.5..=4.5).contains(&ratio),
            "expected second-order convergence, got ratio {ratio} ({e1} -> {e2})"
        );
    }

    #[test]
    fn convolve_support_minkowski_sum() {
        let n = 8.0;
        let g = make_grid(16.0 * n, 0.25).unwrap();
        let u0 = indicator(g, SupportInterval::new(5.0 * n, 7.0 * n).unwrap(), 1.0).unwrap();
        let v0 = indicator(g, SupportInterval::new(0.0, n).unwrap(), 1.0).unwrap();
        let c = convolve(&u0, &v0).unwrap();
        let sup = support_of(&c, 1e-10).unwrap();
        assert!(!sup.is_empty());
        for iv in &sup {
            assert!(iv.lo >= 5.0 * n - 0.26 && iv.hi <= 8.0 * n + 0.26, "support {iv:?}");
        }
    }

    #[test]
    fn support_of_indicator_and_zero() {
        let g = make_grid(64.0, 0.25).unwrap();
        let f = indicator(g, SupportInterval::new(5.0, 7.0).unwrap(), 1.0).unwrap();
        let sup = support_of(&f, 0.5).unwrap();
        assert_eq!(sup.len(), 1);
        assert_eq!(sup[0].lo, 5.0);
        assert_eq!(sup[0].hi, 7.0);
        assert!(support_of(&SpectralFunction::zero(g), 0.5).unwrap().is_empty());
    }

    #[test]
    fn null_spinor_round_trip() {
        let g = make_grid(16.0, 0.5).unwrap();
        let psi1 = SpectralFunction::from_fn(g, |xi| Complex64::new(xi.cos(), 0.3 * xi));
        let psi2 = SpectralFunction::from_fn(g, |xi| Complex64::new(0.1 * xi * xi, -xi.sin()));
        let (u, v) = spinor_to_null(&psi1, &psi2).unwrap();
        let (p1, p2) = null_to_spinor(&u, &v).unwrap();
        for (a, b) in p1.samples.iter().zip(&psi1.samples) {
            assert!((a - b).norm() <= 1e-14 * (1.0 + b.norm()));
        }
        for (a, b) in p2.samples.iter().zip(&psi2.samples) {
            assert!((a - b).norm() <= 1e-14 * (1.0 + b.norm()));
        }
        // Degenerate cases.
        let (u, _v) = spinor_to_null(&psi1, &psi1).unwrap();
        assert_eq!(u.max_abs(), 0.0);
        let zero = SpectralFunction::zero(g);
        let (u, v) = spinor_to_null(&psi1, &zero).unwrap();
        assert_eq!(u.samples, psi1.samples);
        assert_eq!(v.samples, psi1.samples);
    }

    #[test]
    fn dump_round_trip() {
        let g = make_grid(16.0, 0.5).unwrap();
        let f = SpectralFunction::from_fn(g, |xi| Complex64::new(xi, -xi * 0.5));
        let mut buf = Vec::new();
        write_dump(&f, &mut buf).unwrap();
        let back = read_dump(buf.as_slice()).unwrap();
        assert_eq!(back.grid, f.grid);
        assert_eq!(back.samples, f.samples);
        assert!(read_dump(&buf[..40]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_dump(bad.as_slice()).is_err());
    }
}
