//! Norm calculators on the Fourier side: inhomogeneous and homogeneous
//! Sobolev, the modulation norm `sum_k ||f_hat||_{L^2([k-1,k+1])}`, Lebesgue
//! norms of the physical function, the half-line Sobolev functional, and the
//! dilation-invariance checks for the `Hdot^{+-1/2} / L^{1,inf}` ratios.
//!
//! All quadrature is composite trapezoid on the sample grid; window integrals
//! use the piecewise-linear interpolant of `weight * |f_hat|^2` so partial
//! panels stay consistent with the full-panel rule.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::spectral::{convolve, make_grid, FrequencyGrid, SpectralFunction};

/// Norm selector used by the CLI's `norms` command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    Hs(f64),
    HsDot(f64),
    Modulation,
    L1,
    Linf,
    HalfLineHs(f64),
}

pub fn compute(f: &SpectralFunction, kind: NormKind) -> Result<f64> {
    match kind {
        NormKind::Hs(s) => sobolev_norm(f, s),
        NormKind::HsDot(s) => homogeneous_sobolev_norm(f, s),
        NormKind::Modulation => modulation_norm(f),
        NormKind::L1 => lebesgue_norm(f, LebesgueExponent::One),
        NormKind::Linf => lebesgue_norm(f, LebesgueExponent::Infinity),
        NormKind::HalfLineHs(s) => half_line_sobolev(f, s),
    }
}

fn japanese_bracket_sq(xi: f64) -> f64 {
    1.0 + xi * xi
}

/// Trapezoid of `g_i = weight(xi_i) |f_i|^2` over the node range `[i0, i1]`.
fn trapezoid_weighted(f: &SpectralFunction, i0: usize, i1: usize, weight: impl Fn(f64) -> f64) -> f64 {
    if i1 <= i0 {
        return 0.0;
    }
    let g = |i: usize| weight(f.grid.node(i)) * f.samples[i].norm_sqr();
    let mut total = 0.5 * (g(i0) + g(i1));
    for i in i0 + 1..i1 {
        total += g(i);
    }
    total * f.grid.delta_xi
}

/// Integral of the piecewise-linear interpolant of `|f|^2` over `[a, b]`
/// clamped to the grid. Agrees with plain trapezoid when `a`, `b` are nodes.
fn interval_mass(f: &SpectralFunction, a: f64, b: f64) -> f64 {
    let grid = f.grid;
    let a = a.max(grid.xi_min);
    let b = b.min(grid.xi_max);
    if b <= a {
        return 0.0;
    }
    let h = grid.delta_xi;
    let pos = |x: f64| (x - grid.xi_min) / h;
    let g = |i: usize| f.samples[i].norm_sqr();
    let g_lin = |x: f64| {
        let p = pos(x);
        let i = (p.floor() as usize).min(grid.n_points - 2);
        let th = p - i as f64;
        g(i) * (1.0 - th) + g(i + 1) * th
    };
    let ia = pos(a).ceil() as usize;
    let ib = pos(b).floor() as usize;
    // Snap nearly-on-node endpoints to avoid sliver panels.
    let snap = 1e-9;
    let ia = if (pos(a) - pos(a).round()).abs() < snap { pos(a).round() as usize } else { ia };
    let ib = if (pos(b) - pos(b).round()).abs() < snap { pos(b).round() as usize } else { ib };
    if ia > ib {
        // Both endpoints inside one panel.
        return (b - a) * 0.5 * (g_lin(a) + g_lin(b));
    }
    let mut total = trapezoid_weighted(f, ia, ib, |_| 1.0);
    let left_len = grid.node(ia) - a;
    if left_len > snap * h {
        total += left_len * 0.5 * (g_lin(a) + g(ia));
    }
    let right_len = b - grid.node(ib);
    if right_len > snap * h {
        total += right_len * 0.5 * (g(ib) + g_lin(b));
    }
    total
}

/// `||f||_{H^s} = || <xi>^s f_hat ||_{L^2}` by trapezoidal quadrature.
pub fn sobolev_norm(f: &SpectralFunction, s: f64) -> Result<f64> {
    if !s.is_finite() {
        return Err(Error::InvalidInput("regularity exponent must be finite".into()));
    }
    Ok(trapezoid_weighted(f, 0, f.grid.n_points - 1, |xi| japanese_bracket_sq(xi).powf(s)).sqrt())
}

/// Homogeneous counterpart with weight `|xi|^{2s}`.
///
/// For `s < 0` the node at `xi = 0` is excluded (its weight is singular);
/// for `s <= -1/2` a nonvanishing `f_hat(0)` means the true integral
/// diverges and the call fails.
pub fn homogeneous_sobolev_norm(f: &SpectralFunction, s: f64) -> Result<f64> {
    if !s.is_finite() {
        return Err(Error::InvalidInput("regularity exponent must be finite".into()));
    }
    if s <= -0.5 {
        let peak = f.max_abs();
        let at_zero = f.samples[f.grid.zero_index()].norm();
        if peak > 0.0 && at_zero > 1e-12 * peak {
            return Err(Error::DivergentNorm(format!(
                "|xi|^{{2s}} with s = {s} is non-integrable against f_hat(0) = {at_zero:.3e}"
            )));
        }
    }
    let zero = f.grid.zero_index();
    let skip_zero = s < 0.0;
    let weight = |xi: f64| if xi == 0.0 { 0.0 } else { xi.abs().powf(2.0 * s) };
    let g = |i: usize| {
        if skip_zero && i == zero {
            0.0
        } else {
            weight(f.grid.node(i)) * f.samples[i].norm_sqr()
        }
    };
    let n = f.grid.n_points;
    let mut total = 0.5 * (g(0) + g(n - 1));
    for i in 1..n - 1 {
        total += g(i);
    }
    Ok((total * f.grid.delta_xi).sqrt())
}

/// `sum_{k in Z} ||f_hat||_{L^2([k-1, k+1])}` over all windows meeting the grid.
pub fn modulation_norm(f: &SpectralFunction) -> Result<f64> {
    if f.grid.delta_xi > 0.25 {
        return Err(Error::InvalidInput(format!(
            "modulation windows need delta_xi <= 1/4 (got {})",
            f.grid.delta_xi
        )));
    }
    let k_lo = (f.grid.xi_min - 1.0).ceil() as i64;
    let k_hi = (f.grid.xi_max + 1.0).floor() as i64;
    let mut total = 0.0;
    for k in k_lo..=k_hi {
        let mass = interval_mass(f, k as f64 - 1.0, k as f64 + 1.0);
        if mass > 0.0 {
            total += mass.sqrt();
        }
    }
    Ok(total)
}

/// `(int_{xi >= 0} <xi>^{2s} |f_hat|^2 d xi)^{1/2}`.
pub fn half_line_sobolev(f: &SpectralFunction, s: f64) -> Result<f64> {
    if !s.is_finite() {
        return Err(Error::InvalidInput("regularity exponent must be finite".into()));
    }
    let zero = f.grid.zero_index();
    Ok(trapezoid_weighted(f, zero, f.grid.n_points - 1, |xi| japanese_bracket_sq(xi).powf(s)).sqrt())
}

/// Physical-space sampling of `f` on the window `[-pi/delta_xi, pi/delta_xi)`.
///
/// Returns `(x_nodes, values)`; the inverse transform uses the same
/// trapezoidal weights as the forward-side quadrature, with the two grid
/// endpoints folded into one bin of the length-`n_points - 1` FFT.
pub fn to_physical(f: &SpectralFunction) -> (Vec<f64>, Vec<Complex64>) {
    let grid = f.grid;
    let m = grid.n_points - 1;
    let h = grid.delta_xi;
    let window = 2.0 * std::f64::consts::PI / h;
    let dx = window / m as f64;
    let x0 = -0.5 * window;

    let mut bins = vec![Complex64::new(0.0, 0.0); m];
    bins[0] = 0.5 * (f.samples[0] + f.samples[m]);
    for i in 1..m {
        bins[i] = f.samples[i];
    }
    // Alternate signs absorb the e^{i x_j xi_min} offset of the first node.
    for (i, z) in bins.iter_mut().enumerate() {
        if i % 2 == 1 {
            *z = -*z;
        }
    }
    let mut planner = rustfft::FftPlanner::<f64>::new();
    planner.plan_fft_inverse(m).process(&mut bins);

    let scale = h / (2.0 * std::f64::consts::PI);
    let xs: Vec<f64> = (0..m).map(|j| x0 + dx * j as f64).collect();
    let values: Vec<Complex64> = (0..m)
        .map(|j| {
            let phase = Complex64::from_polar(1.0, -xs[j] * grid.xi_max);
            bins[j] * phase * scale
        })
        .collect();
    (xs, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LebesgueExponent {
    One,
    Infinity,
}

/// `L^1` (trapezoid over the physical window) or `L^inf` (max-abs) norm of
/// the physical function. Fails if the function has not decayed below
/// `1e-10` of its peak at the window edge, where periodization would bite.
pub fn lebesgue_norm(f: &SpectralFunction, p: LebesgueExponent) -> Result<f64> {
    let (xs, values) = to_physical(f);
    let magnitudes: Vec<f64> = values.iter().map(|z| z.norm()).collect();
    let peak = magnitudes.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(0.0);
    }
    let edge = magnitudes[0].max(*magnitudes.last().unwrap());
    if edge > 1e-10 * peak {
        return Err(Error::DivergentNorm(format!(
            "physical window [{:.3}, {:.3}] too small: edge magnitude {:.3e} vs peak {:.3e}",
            xs[0],
            xs[xs.len() - 1],
            edge,
            peak
        )));
    }
    match p {
        LebesgueExponent::Infinity => Ok(peak),
        LebesgueExponent::One => {
            let dx = xs[1] - xs[0];
            Ok(dx * magnitudes.iter().sum::<f64>())
        }
    }
}

/// Smooth rapidly-decaying test profiles for the dilation checks.
///
/// The plain Gaussian works for the `Hdot^{1/2}/L^inf` ratio; the derivative
/// profile has a vanishing zero mode, as the divergent-weight side of
/// [`homogeneous_sobolev_norm`] requires at `s = -1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingFamily {
    Gaussian,
    GaussianDerivative,
}

impl ScalingFamily {
    /// Fourier transform of `f(lambda x)`.
    pub fn fourier(&self, xi: f64, lambda: f64) -> Complex64 {
        let root = (2.0 * std::f64::consts::PI).sqrt();
        let gauss = (-xi * xi / (2.0 * lambda * lambda)).exp();
        match self {
            ScalingFamily::Gaussian => Complex64::new(root / lambda * gauss, 0.0),
            ScalingFamily::GaussianDerivative => {
                Complex64::new(0.0, root * xi / (lambda * lambda) * gauss)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScalingReport {
    pub s: f64,
    pub ratios: Vec<(f64, f64)>,
    pub max_relative_deviation: f64,
}

/// Check that `||f_lambda||_{Hdot^s} / ||f_lambda||_{L^p}` is independent of
/// the dilation `lambda` (`p = 1` for `s = -1/2`, `p = inf` for `s = +1/2`).
/// Both sides are evaluated by their own quadrature on one shared grid.
pub fn scaling_ratio_check(family: ScalingFamily, s: f64, lambdas: &[f64]) -> Result<ScalingReport> {
    if s != 0.5 && s != -0.5 {
        return Err(Error::InvalidInput("scaling check is defined for s = +-1/2".into()));
    }
    if lambdas.is_empty() || lambdas.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::InvalidInput("dilation list must be positive".into()));
    }
    let l_max = lambdas.iter().copied().fold(f64::MIN, f64::max);
    let l_min = lambdas.iter().copied().fold(f64::MAX, f64::min);
    // The physical sampling step is pi/extent, so a large extent is needed to
    // resolve the |x|-kink of the L^1 integrand, not just the Fourier decay.
    let grid = make_grid((16.0 * l_max).max(1024.0), l_min / 64.0)?;
    let p = if s > 0.0 { LebesgueExponent::Infinity } else { LebesgueExponent::One };

    let mut ratios = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let f = SpectralFunction::from_fn(grid, |xi| family.fourier(xi, lambda));
        let num = homogeneous_sobolev_norm(&f, s)?;
        let den = lebesgue_norm(&f, p)?;
        if den == 0.0 {
            return Err(Error::DivergentNorm("zero Lebesgue norm in scaling ratio".into()));
        }
        ratios.push((lambda, num / den));
    }
    let reference = ratios[0].1;
    let max_relative_deviation = ratios
        .iter()
        .map(|&(_, r)| (r / reference - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(ScalingReport { s, ratios, max_relative_deviation })
}

#[derive(Debug, Clone)]
pub struct AlgebraConstantReport {
    pub max_ratio: f64,
    pub n_pairs: usize,
}

/// Empirical product constant of the modulation norm: the largest observed
/// `||fg|| / (||f|| ||g||)` over random band-limited pairs.
pub fn measure_algebra_constant(rng: &mut impl Rng, n_pairs: usize) -> Result<AlgebraConstantReport> {
    let grid = make_grid(32.0, 0.25)?;
    let mut max_ratio = 0.0f64;
    for _ in 0..n_pairs {
        let f = random_band_limited(rng, grid);
        let g = random_band_limited(rng, grid);
        let nf = modulation_norm(&f)?;
        let ng = modulation_norm(&g)?;
        if nf == 0.0 || ng == 0.0 {
            continue;
        }
        let prod = convolve(&f, &g)?;
        let np = modulation_norm(&prod)?;
        max_ratio = max_ratio.max(np / (nf * ng));
    }
    Ok(AlgebraConstantReport { max_ratio, n_pairs })
}

fn random_band_limited(rng: &mut impl Rng, grid: FrequencyGrid) -> SpectralFunction {
    let half_width: f64 = rng.gen_range(1.0..12.0);
    let center: f64 = rng.gen_range(-4.0..4.0);
    let mut f = SpectralFunction::zero(grid);
    for (i, xi) in grid.nodes().enumerate() {
        if (xi - center).abs() <= half_width {
            f.samples[i] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    f.real_physical = false;
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{indicator, SupportInterval};
    use approx::assert_relative_eq;

    #[test]
    fn sobolev_norm_of_band_indicator_matches_asinh() {
        // ||sigma 1_[5N,7N]||_{H^{-1/2}} = sigma sqrt(asinh 7N - asinh 5N);
        // frozen reference sqrt(asinh(700) - asinh(500)) = 0.58006184741491497.
        let n = 100.0;
        let grid = make_grid(8.0 * n, 1.0 / 1024.0).unwrap();
        let f = indicator(grid, SupportInterval::new(5.0 * n, 7.0 * n).unwrap(), 1.0).unwrap();
        let v = sobolev_norm(&f, -0.5).unwrap();
        assert_relative_eq!(v, 0.58006184741491497, max_relative = 1e-6);
    }

    #[test]
    fn sobolev_norm_zero() {
        let grid = make_grid(8.0, 0.25).unwrap();
        assert_eq!(sobolev_norm(&SpectralFunction::zero(grid), -0.5).unwrap(), 0.0);
    }

    #[test]
    fn u0_ratio_to_sigma_in_bracket() {
        // ||u_0||_{H^{-1/2}} / sigma in [0.5, 0.7] uniformly in N >= 16.
        for n in [16.0, 64.0, 256.0] {
            let grid = make_grid(8.0 * n, 0.25f64.min(n / 256.0)).unwrap();
            let sigma = 0.7;
            let f = indicator(grid, SupportInterval::new(5.0 * n, 7.0 * n).unwrap(), sigma).unwrap();
            let r = sobolev_norm(&f, -0.5).unwrap() / sigma;
            assert!((0.5..=0.7).contains(&r), "N={n}: ratio {r}");
        }
    }

    #[test]
    fn homogeneous_norm_gaussian_half() {
        // f = e^{-x^2/2}, f_hat = sqrt(2pi) e^{-xi^2/2}:
        // ||f||_{Hdot^{1/2}}^2 = int |xi| 2pi e^{-xi^2} = 2pi, norm = sqrt(2pi).
        let grid = make_grid(16.0, 1.0 / 1024.0).unwrap();
        let f = SpectralFunction::from_fn(grid, |xi| ScalingFamily::Gaussian.fourier(xi, 1.0));
        let v = homogeneous_sobolev_norm(&f, 0.5).unwrap();
        assert_relative_eq!(v, 2.5066282746310005, max_relative = 1e-6);
    }

    #[test]
    fn homogeneous_norm_s_zero_is_l2() {
        let grid = make_grid(16.0, 1.0 / 64.0).unwrap();
        let f = indicator(grid, SupportInterval::new(1.0, 2.0).unwrap(), 1.0).unwrap();
        let v = homogeneous_sobolev_norm(&f, 0.0).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 2e-2); // edge samples carry O(h) defect
        assert_eq!(homogeneous_sobolev_norm(&SpectralFunction::zero(grid), 0.5).unwrap(), 0.0);
    }

    #[test]
    fn homogeneous_norm_flags_divergence() {
        let grid = make_grid(16.0, 1.0 / 64.0).unwrap();
        let f = SpectralFunction::from_fn(grid, |xi| ScalingFamily::Gaussian.fourier(xi, 1.0));
        assert!(matches!(homogeneous_sobolev_norm(&f, -0.5), Err(Error::DivergentNorm(_))));
    }

    #[test]
    fn modulation_norm_unit_indicator() {
        // Windows k=0 and k=1 each contribute 1 in the fine-grid limit.
        let grid = make_grid(16.0, 1.0 / 4096.0).unwrap();
        let f = indicator(grid, SupportInterval::new(0.0, 1.0).unwrap(), 1.0).unwrap();
        let v = modulation_norm(&f).unwrap();
        assert_relative_eq!(v, 2.0, max_relative = 1e-2);
    }

    #[test]
    fn modulation_norm_band_indicator_window_sum() {
        // sigma ((2N-1) sqrt 2 + 2); N=4, sigma=1 -> 11.899494936611665.
        let grid = make_grid(64.0, 1.0 / 4096.0).unwrap();
        let f = indicator(grid, SupportInterval::new(20.0, 28.0).unwrap(), 1.0).unwrap();
        let v = modulation_norm(&f).unwrap();
        assert_relative_eq!(v, 11.899494936611665, max_relative = 1e-2);
    }

    #[test]
    fn modulation_norm_requires_resolved_windows() {
        let grid = make_grid(16.0, 0.5).unwrap();
        let f = SpectralFunction::zero(grid);
        assert!(modulation_norm(&f).is_err());
    }

    #[test]
    fn modulation_dominates_l2() {
        // ||f_hat||_{L^2} <= ||f||_{M}: overlapping windows double-cover.
        let grid = make_grid(32.0, 0.25).unwrap();
        let mut rng = rand::rngs::mock::StepRng::new(12345, 0x9E3779B97F4A7C15);
        for _ in 0..8 {
            let f = random_band_limited(&mut rng, grid);
            let l2 = trapezoid_weighted(&f, 0, grid.n_points - 1, |_| 1.0).sqrt();
            let m = modulation_norm(&f).unwrap();
            assert!(l2 <= m * (1.0 + 1e-12), "l2 {l2} vs modulation {m}");
        }
    }

    #[test]
    fn half_line_of_negative_support_vanishes() {
        let grid = make_grid(64.0, 0.25).unwrap();
        let f = indicator(grid, SupportInterval::new(-32.0, -20.0).unwrap(), 1.0).unwrap();
        assert_eq!(half_line_sobolev(&f, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn half_line_of_symmetric_function_is_total_over_sqrt2() {
        let grid = make_grid(16.0, 1.0 / 64.0).unwrap();
        let f = SpectralFunction::from_fn(grid, |xi| Complex64::new((-xi * xi / 2.0).exp(), 0.0));
        let half = half_line_sobolev(&f, 0.5).unwrap();
        let full = sobolev_norm(&f, 0.5).unwrap();
        assert_relative_eq!(half, full / 2.0f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn half_line_band_indicator_asinh() {
        let n = 50.0;
        let grid = make_grid(8.0 * n, 1.0 / 512.0).unwrap();
        let c = 0.3;
        let f = indicator(grid, SupportInterval::new(6.0 * n, 7.0 * n).unwrap(), c).unwrap();
        let v = half_line_sobolev(&f, -0.5).unwrap();
        let exact = c * ((7.0 * n).asinh() - (6.0 * n).asinh()).sqrt();
        assert_relative_eq!(v, exact, max_relative = 1e-4);
    }

    #[test]
    fn lebesgue_norms_of_gaussian() {
        let grid = make_grid(16.0, 1.0 / 64.0).unwrap();
        let f = SpectralFunction::from_fn(grid, |xi| ScalingFamily::Gaussian.fourier(xi, 1.0));
        let l1 = lebesgue_norm(&f, LebesgueExponent::One).unwrap();
        let linf = lebesgue_norm(&f, LebesgueExponent::Infinity).unwrap();
        assert_relative_eq!(l1, 2.5066282746310005, max_relative = 1e-8);
        assert_relative_eq!(linf, 1.0, max_relative = 1e-8);
        assert_eq!(lebesgue_norm(&SpectralFunction::zero(grid), LebesgueExponent::One).unwrap(), 0.0);
    }

    #[test]
    fn lebesgue_dilation_scalings() {
        let grid = make_grid(32.0, 1.0 / 64.0).unwrap();
        let f1 = SpectralFunction::from_fn(grid, |xi| ScalingFamily::Gaussian.fourier(xi, 1.0));
        let f2 = SpectralFunction::from_fn(grid, |xi| ScalingFamily::Gaussian.fourier(xi, 2.0));
        let l1_1 = lebesgue_norm(&f1, LebesgueExponent::One).unwrap();
        let l1_2 = lebesgue_norm(&f2, LebesgueExponent::One).unwrap();
        assert_relative_eq!(l1_2, l1_1 / 2.0, max_relative = 1e-8);
        let li_1 = lebesgue_norm(&f1, LebesgueExponent::Infinity).unwrap();
        let li_2 = lebesgue_norm(&f2, LebesgueExponent::Infinity).unwrap();
        assert_relative_eq!(li_2, li_1, max_relative = 1e-8);
    }

    #[test]
    fn lebesgue_rejects_unresolved_window() {
        // An indicator's physical profile decays like 1/x and cannot satisfy
        // the edge-decay requirement.
        let grid = make_grid(16.0, 0.25).unwrap();
        let f = indicator(grid, SupportInterval::new(1.0, 2.0).unwrap(), 1.0).unwrap();
        assert!(lebesgue_norm(&f, LebesgueExponent::One).is_err());
    }

    #[test]
    fn scaling_ratio_gaussian_plus_half() {
        let report = scaling_ratio_check(ScalingFamily::Gaussian, 0.5, &[1.0, 2.0, 4.0]).unwrap();
        assert!(report.max_relative_deviation <= 1e-4, "deviation {}", report.max_relative_deviation);
    }

    #[test]
    fn scaling_ratio_derivative_minus_half() {
        let report =
            scaling_ratio_check(ScalingFamily::GaussianDerivative, -0.5, &[1.0, 2.0]).unwrap();
        assert!(report.max_relative_deviation <= 1e-4, "deviation {}", report.max_relative_deviation);
    }

    #[test]
    fn scaling_ratio_single_lambda_is_exact() {
        let report = scaling_ratio_check(ScalingFamily::Gaussian, 0.5, &[1.0]).unwrap();
        assert_eq!(report.max_relative_deviation, 0.0);
    }

    #[test]
    fn phase_invariance_of_fourier_side_norms() {
        let grid = make_grid(32.0, 0.25).unwrap();
        let f = indicator(grid, SupportInterval::new(3.0, 9.0).unwrap(), 0.8).unwrap();
        let phased = SpectralFunction {
            grid,
            samples: f
                .samples
                .iter()
                .enumerate()
                .map(|(i, z)| z * Complex64::from_polar(1.0, 0.37 * i as f64))
                .collect(),
            real_physical: false,
        };
        for (a, b) in [
            (sobolev_norm(&f, -0.5).unwrap(), sobolev_norm(&phased, -0.5).unwrap()),
            (modulation_norm(&f).unwrap(), modulation_norm(&phased).unwrap()),
            (half_line_sobolev(&f, 0.5).unwrap(), half_line_sobolev(&phased, 0.5).unwrap()),
        ] {
            assert_relative_eq!(a, b, max_relative = 1e-13);
        }
    }

    #[test]
    fn sobolev_monotone_in_pointwise_magnitude() {
        let grid = make_grid(16.0, 0.25).unwrap();
        let small = indicator(grid, SupportInterval::new(-2.0, 5.0).unwrap(), 0.5).unwrap();
        let big = indicator(grid, SupportInterval::new(-3.0, 6.0).unwrap(), 1.0).unwrap();
        assert!(sobolev_norm(&small, 0.5).unwrap() <= sobolev_norm(&big, 0.5).unwrap());
    }

    #[test]
    fn algebra_constant_is_finite_and_stable() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let r1 = measure_algebra_constant(&mut rng, 100).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let r2 = measure_algebra_constant(&mut rng, 200).unwrap();
        assert!(r1.max_ratio.is_finite() && r1.max_ratio > 0.0);
        assert!(
            (r2.max_ratio - r1.max_ratio).abs() / r1.max_ratio < 0.10,
            "doubling samples moved the constant too much: {} -> {}",
            r1.max_ratio,
            r2.max_ratio
        );
    }
}
