//! Observables of prepared states: fidelity, Wigner functions, Fock
//! populations, quadrature squeezing and log-log fits.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::hilbert::{partial_trace_spin, BosonDensityMatrix, BosonOps, HybridState, Operator};

/// `|⟨a|b⟩|²`.
pub fn fidelity(a: &HybridState, b: &HybridState) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// Wigner function sampled on a uniform phase-space grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub q_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    /// `values[(i, j)] = W(q_axis[i], p_axis[j])`.
    pub values: DMatrix<f64>,
}

impl WignerGrid {
    pub fn dq(&self) -> f64 {
        self.q_axis[1] - self.q_axis[0]
    }

    pub fn dp(&self) -> f64 {
        self.p_axis[1] - self.p_axis[0]
    }

    /// `Σ W dq dp`.
    pub fn integral(&self) -> f64 {
        self.values.sum() * self.dq() * self.dp()
    }

    pub fn min_value(&self) -> f64 {
        self.values.min()
    }

    /// `∫ W dP` at each grid `Q`.
    pub fn q_marginal(&self) -> Vec<f64> {
        self.values.row_iter().map(|r| r.sum() * self.dp()).collect()
    }

    /// `∫ W dQ` at each grid `P`.
    pub fn p_marginal(&self) -> Vec<f64> {
        self.values.column_iter().map(|c| c.sum() * self.dq()).collect()
    }

    /// Grid-moment variance along `P`.
    pub fn p_variance(&self) -> f64 {
        moment_variance(&self.p_axis, &self.p_marginal(), self.dp())
    }

    /// Grid-moment variance along `Q`.
    pub fn q_variance(&self) -> f64 {
        moment_variance(&self.q_axis, &self.q_marginal(), self.dq())
    }
}

fn moment_variance(axis: &[f64], density: &[f64], step: f64) -> f64 {
    let norm: f64 = density.iter().sum::<f64>() * step;
    let mean: f64 = axis.iter().zip(density).map(|(x, w)| x * w).sum::<f64>() * step / norm;
    axis.iter().zip(density).map(|(x, w)| (x - mean).powi(2) * w).sum::<f64>() * step / norm
}

/// `points` equally spaced values from `min` to `max` inclusive.
pub fn uniform_axis(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(max > min) || !min.is_finite() || !max.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "grid axis needs max > min and at least 2 points (got {min}:{max}:{points})"
        )));
    }
    let step = (max - min) / (points - 1) as f64;
    Ok((0..points).map(|i| min + step * i as f64).collect())
}

fn check_uniform(axis: &[f64]) -> Result<()> {
    if axis.len() < 2 {
        return Err(Error::InvalidParameter("grid axis needs at least 2 points".into()));
    }
    let step = axis[1] - axis[0];
    if !(step > 0.0) || axis.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > 1e-9 * step.abs().max(1.0)) {
        return Err(Error::InvalidParameter("grid axis must be uniform and increasing".into()));
    }
    Ok(())
}

/// Wigner function of a Fock-basis density matrix.
///
/// Uses the Laguerre-kernel expansion `W = Σ_mn ρ_mn W_mn` with the cross
/// terms generated by the normalized three-term Laguerre recurrence, which
/// stays in range for cutoffs of a few hundred.
pub fn wigner(rho: &BosonDensityMatrix, q_axis: &[f64], p_axis: &[f64]) -> Result<WignerGrid> {
    rho.validate()?;
    check_uniform(q_axis)?;
    check_uniform(p_axis)?;
    let m = rho.matrix();
    let rows: Vec<Vec<f64>> = q_axis
        .par_iter()
        .map(|&q| {
            let mut scratch = vec![Complex64::default(); m.nrows()];
            p_axis.iter().map(|&p| wigner_point(m, q, p, &mut scratch)).collect()
        })
        .collect();
    let values = DMatrix::from_fn(q_axis.len(), p_axis.len(), |i, j| rows[i][j]);
    Ok(WignerGrid {
        q_axis: q_axis.to_vec(),
        p_axis: p_axis.to_vec(),
        values,
    })
}

fn wigner_point(rho: &DMatrix<Complex64>, q: f64, p: f64, w: &mut [Complex64]) -> f64 {
    let dim = rho.nrows();
    let alpha = Complex64::new(q, p) * std::f64::consts::FRAC_1_SQRT_2;
    let two_alpha = alpha * 2.0;
    let two_alpha_conj = two_alpha.conj();
    w[0] = Complex64::new((-2.0 * alpha.norm_sqr()).exp() / PI, 0.0);
    let mut total = rho[(0, 0)].re * w[0].re;
    for n in 1..dim {
        w[n] = two_alpha * w[n - 1] / (n as f64).sqrt();
        total += 2.0 * (rho[(0, n)] * w[n]).re;
    }
    for mm in 1..dim {
        let sm = (mm as f64).sqrt();
        let mut temp = w[mm];
        w[mm] = (two_alpha_conj * temp - w[mm - 1] * sm) / sm;
        total += (rho[(mm, mm)] * w[mm]).re;
        for n in (mm + 1)..dim {
            let next = (two_alpha * w[n - 1] - temp * sm) / (n as f64).sqrt();
            temp = w[n];
            w[n] = next;
            total += 2.0 * (rho[(mm, n)] * w[n]).re;
        }
    }
    total
}

/// Normalized Hermite functions `φ_0(x) … φ_nmax(x)`, the position-space Fock states.
pub fn hermite_functions(x: f64, nmax: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(PI.powf(-0.25) * (-0.5 * x * x).exp());
    if nmax >= 1 {
        out.push(std::f64::consts::SQRT_2 * x * out[0]);
    }
    for n in 1..nmax {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

/// `ψ(x) = Σ_n c_n φ_n(x)`.
pub fn wavefunction(fock: &DVector<Complex64>, x: f64) -> Complex64 {
    let phi = hermite_functions(x, fock.len().saturating_sub(1));
    fock.iter().zip(&phi).map(|(c, f)| c * f).sum()
}

/// Position density `|ψ(x)|²`.
pub fn position_density(fock: &DVector<Complex64>, x: f64) -> f64 {
    wavefunction(fock, x).norm_sqr()
}

/// Wigner function of a pure boson state by direct quadrature of
/// `W(Q,P) = (1/2π) ∫ ψ*(Q + s/2) ψ(Q − s/2) e^{iPs} ds` (trapezoid rule).
pub fn wigner_quadrature(fock: &DVector<Complex64>, q: f64, p: f64, ds: f64) -> f64 {
    let nmax = fock.len().saturating_sub(1) as f64;
    // Hermite functions up to nmax are negligible beyond the turning point plus a margin.
    let support = (2.0 * nmax + 1.0).sqrt() + 9.0;
    let half_width = 2.0 * (support + q.abs());
    let steps = (half_width / ds).ceil() as i64;
    let mut acc = Complex64::default();
    for k in -steps..=steps {
        let s = k as f64 * ds;
        let weight = if k.abs() == steps { 0.5 } else { 1.0 };
        let left = wavefunction(fock, q + s / 2.0).conj();
        let right = wavefunction(fock, q - s / 2.0);
        acc += left * right * Complex64::from_polar(weight, p * s);
    }
    acc.re * ds / (2.0 * PI)
}

/// Photon-number populations `P(n) = ρ_nn`.
pub fn fock_distribution(rho: &BosonDensityMatrix) -> Vec<f64> {
    rho.matrix().diagonal().iter().map(|z| z.re).collect()
}

/// `½ Σ |p_n − q_n|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Total population on odd photon numbers.
pub fn odd_population(dist: &[f64]) -> f64 {
    dist.iter().skip(1).step_by(2).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureStats {
    pub dq: f64,
    pub dp: f64,
    pub product: f64,
    pub mean_q: f64,
    pub mean_p: f64,
}

/// Standard deviations of `Q` and `P` in state `rho`.
pub fn quadrature_stats(rho: &BosonDensityMatrix, q: &Operator, p: &Operator) -> Result<QuadratureStats> {
    let mean_q = rho.expectation(q)?.re;
    let mean_p = rho.expectation(p)?.re;
    let q2 = rho.expectation(&(q * q))?.re;
    let p2 = rho.expectation(&(p * p))?.re;
    let var_q = q2 - mean_q * mean_q;
    let var_p = p2 - mean_p * mean_p;
    if var_q < -1e-10 || var_p < -1e-10 {
        return Err(Error::Numerical(format!(
            "negative quadrature variance (var Q = {var_q:e}, var P = {var_p:e})"
        )));
    }
    let dq = var_q.max(0.0).sqrt();
    let dp = var_p.max(0.0).sqrt();
    Ok(QuadratureStats {
        dq,
        dp,
        product: dq * dp,
        mean_q,
        mean_p,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl PowerLawFit {
    pub fn predict(&self, x: f64) -> f64 {
        (self.intercept + self.slope * x.ln()).exp()
    }
}

/// Least-squares line through `(ln x, ln y)`.
pub fn powerlaw_fit(x: &[f64], y: &[f64]) -> Result<PowerLawFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::InvalidParameter("power-law fit needs at least 3 points".into()));
    }
    if x.iter().chain(y).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter("power-law fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = ly.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("power-law fit needs distinct x values".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    Ok(PowerLawFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Observables of one intermediate circuit state.
#[derive(Debug, Clone)]
pub struct BlockReport {
    /// 0 is the input state, `j` the state after block `j`.
    pub block: usize,
    pub fock: Vec<f64>,
    pub quadratures: QuadratureStats,
    pub parity: f64,
    pub norm: f64,
    pub spin_up_weight: f64,
    pub purity: f64,
    pub wigner: Option<WignerGrid>,
}

/// Reports for a sequence of block states (input state first).
pub fn block_trace_report(
    states: &[HybridState],
    boson: &BosonOps,
    parity: &Operator,
    wigner_axes: Option<(&[f64], &[f64])>,
) -> Result<Vec<BlockReport>> {
    states
        .iter()
        .enumerate()
        .map(|(block, state)| {
            let rho = partial_trace_spin(state)?;
            let wigner = match wigner_axes {
                Some((q, p)) => Some(wigner(&rho, q, p)?),
                None => None,
            };
            Ok(BlockReport {
                block,
                fock: fock_distribution(&rho),
                quadratures: quadrature_stats(&rho, &boson.q, &boson.p)?,
                parity: parity.expectation(state)?.re,
                norm: state.norm(),
                spin_up_weight: state.spin_up_weight(),
                purity: rho.purity(),
                wigner,
            })
        })
        .collect()
}

/// First index from which every later value stays within `tol` of the last one.
pub fn saturation_index(values: &[f64], tol: f64) -> Option<usize> {
    let last = *values.last()?;
    let mut idx = values.len() - 1;
    while idx > 0 && (values[idx - 1] - last).abs() <= tol {
        idx -= 1;
    }
    Some(idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{build_boson_ops, HilbertConfig, Spin};
    use crate::model::{critical_squeezing_x, squeezed_vacuum};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn fock(dim: usize, n: usize) -> DVector<Complex64> {
        let mut v = DVector::zeros(dim);
        v[n] = Complex64::new(1.0, 0.0);
        v
    }

    fn random_fock(dim: usize, occupied: usize, seed: u64) -> DVector<Complex64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut v = DVector::zeros(dim);
        for n in 0..occupied {
            v[n] = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        let norm = v.norm();
        v.unscale(norm)
    }

    fn default_axis() -> Vec<f64> {
        uniform_axis(-8.0, 8.0, 201).unwrap()
    }

    #[test]
    fn fidelity_examples() {
        let cfg = HilbertConfig::new(10).unwrap();
        let a = HybridState::basis(&cfg, 0, Spin::Down).unwrap();
        let b = HybridState::basis(&cfg, 1, Spin::Down).unwrap();
        assert_eq!(fidelity(&a, &a).unwrap(), 1.0);
        assert_eq!(fidelity(&a, &b).unwrap(), 0.0);
        let cfg60 = HilbertConfig::new(60).unwrap();
        let x = critical_squeezing_x(0.6).unwrap();
        let sq = HybridState::product(&squeezed_vacuum(x, &cfg60).unwrap(), Spin::Down).unwrap();
        let vac = HybridState::basis(&cfg60, 0, Spin::Down).unwrap();
        let f = fidelity(&vac, &sq).unwrap();
        assert_abs_diff_eq!(f, 1.0 / x.cosh(), epsilon = 1e-12);
        assert_abs_diff_eq!(f, 0.993808, epsilon = 1e-6);
        assert!(fidelity(&a, &vac).is_err());
    }

    #[test]
    fn vacuum_wigner() {
        let rho = BosonDensityMatrix::pure(&fock(61, 0)).unwrap();
        let axis = default_axis();
        let grid = wigner(&rho, &axis, &axis).unwrap();
        assert_abs_diff_eq!(grid.values[(100, 100)], 1.0 / PI, epsilon = 1e-12);
        assert_abs_diff_eq!(grid.integral(), 1.0, epsilon = 1e-3);
        for (i, &q) in axis.iter().enumerate().step_by(17) {
            for (j, &p) in axis.iter().enumerate().step_by(13) {
                assert_abs_diff_eq!(grid.values[(i, j)], (-q * q - p * p).exp() / PI, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn single_photon_wigner_is_negative_at_origin() {
        let rho = BosonDensityMatrix::pure(&fock(20, 1)).unwrap();
        let grid = wigner(&rho, &[-0.5, 0.0, 0.5], &[-0.5, 0.0, 0.5]).unwrap();
        assert_abs_diff_eq!(grid.values[(1, 1)], -1.0 / PI, epsilon = 1e-12);
    }

    #[test]
    fn squeezed_wigner_moments() {
        let cfg = HilbertConfig::new(60).unwrap();
        let x = 0.5;
        let rho = BosonDensityMatrix::pure(&squeezed_vacuum(x, &cfg).unwrap()).unwrap();
        let axis = default_axis();
        let grid = wigner(&rho, &axis, &axis).unwrap();
        assert_abs_diff_eq!(grid.p_variance(), (-2.0 * x).exp() / 2.0, epsilon = 1e-4);
        assert_abs_diff_eq!(grid.q_variance(), (2.0 * x).exp() / 2.0, epsilon = 1e-4);
        // Iso-contour semi-axes: W is constant where Q²e^{−2x} + P²e^{2x} is.
        let w_q = rho_wigner_at(&rho, x.exp(), 0.0);
        let w_p = rho_wigner_at(&rho, 0.0, (-x).exp());
        assert_abs_diff_eq!(w_q, w_p, epsilon = 1e-10);
    }

    fn rho_wigner_at(rho: &BosonDensityMatrix, q: f64, p: f64) -> f64 {
        let mut scratch = vec![Complex64::default(); rho.dim()];
        wigner_point(rho.matrix(), q, p, &mut scratch)
    }

    #[test]
    fn laguerre_kernel_matches_direct_quadrature() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for seed in 0..5 {
            let v = random_fock(30, 8, seed);
            let rho = BosonDensityMatrix::pure(&v).unwrap();
            for _ in 0..6 {
                let q = rng.random_range(-3.0..3.0);
                let p = rng.random_range(-3.0..3.0);
                let direct = wigner_quadrature(&v, q, p, 0.01);
                assert_abs_diff_eq!(rho_wigner_at(&rho, q, p), direct, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn wigner_marginal_is_position_density() {
        let v = random_fock(61, 6, 3);
        let rho = BosonDensityMatrix::pure(&v).unwrap();
        let axis = default_axis();
        let grid = wigner(&rho, &axis, &axis).unwrap();
        let marginal = grid.q_marginal();
        for (i, &q) in axis.iter().enumerate() {
            assert_abs_diff_eq!(marginal[i], position_density(&v, q), epsilon = 1e-4);
        }
    }

    #[test]
    fn wigner_rejects_bad_input() {
        let rho = BosonDensityMatrix::pure(&fock(5, 0)).unwrap();
        assert!(wigner(&rho, &[0.0, 0.1, 0.5], &[0.0, 1.0]).is_err());
        assert!(uniform_axis(1.0, -1.0, 10).is_err());
        assert!(uniform_axis(-1.0, 1.0, 1).is_err());
    }

    #[test]
    fn hermite_functions_orthonormal() {
        let xs = uniform_axis(-15.0, 15.0, 3001).unwrap();
        let dx = xs[1] - xs[0];
        let table: Vec<Vec<f64>> = xs.iter().map(|&x| hermite_functions(x, 12)).collect();
        for m in 0..=12 {
            for n in 0..=12 {
                let overlap: f64 = table.iter().map(|row| row[m] * row[n]).sum::<f64>() * dx;
                assert_abs_diff_eq!(overlap, if m == n { 1.0 } else { 0.0 }, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn fock_distribution_examples() {
        let cfg = HilbertConfig::new(60).unwrap();
        let psi0 = HybridState::basis(&cfg, 0, Spin::Down).unwrap();
        let dist = fock_distribution(&partial_trace_spin(&psi0).unwrap());
        assert_eq!(dist[0], 1.0);
        let x = critical_squeezing_x(0.6).unwrap();
        let rho = BosonDensityMatrix::pure(&squeezed_vacuum(x, &cfg).unwrap()).unwrap();
        let dist = fock_distribution(&rho);
        assert!(odd_population(&dist) < 1e-12);
        assert_abs_diff_eq!(dist[2] / dist[0], x.tanh().powi(2) / 2.0, epsilon = 1e-12);
        // tanh x = 1/9 exactly at g = 0.6
        assert_abs_diff_eq!(dist[2] / dist[0], 1.0 / 162.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dist.iter().sum::<f64>(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn quadrature_examples() {
        let cfg = HilbertConfig::new(60).unwrap();
        let ops = build_boson_ops(&cfg);
        let vac = BosonDensityMatrix::pure(&fock(61, 0)).unwrap();
        let s = quadrature_stats(&vac, &ops.q, &ops.p).unwrap();
        assert_abs_diff_eq!(s.dq, FRAC_1_SQRT_2, epsilon = 1e-14);
        assert_abs_diff_eq!(s.dp, FRAC_1_SQRT_2, epsilon = 1e-14);
        assert_abs_diff_eq!(s.product, 0.5, epsilon = 1e-14);

        let x = critical_squeezing_x(0.6).unwrap();
        let rho = BosonDensityMatrix::pure(&squeezed_vacuum(x, &cfg).unwrap()).unwrap();
        let s = quadrature_stats(&rho, &ops.q, &ops.p).unwrap();
        assert_abs_diff_eq!(s.dp, 0.632456, epsilon = 1e-6);
        assert_abs_diff_eq!(s.dq, 0.790569, epsilon = 1e-6);
        assert_abs_diff_eq!(s.product, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn exact_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 2.0 * v.powi(3)).collect();
        let fit = powerlaw_fit(&x, &y).unwrap();
        assert_abs_diff_eq!(fit.slope, 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.intercept, 2f64.ln(), epsilon = 1e-10);
        assert_abs_diff_eq!(fit.r_squared, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.predict(3.0), 54.0, epsilon = 1e-9);
    }

    #[test]
    fn noisy_power_law() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v.sqrt() * (1.0 + 0.01 * rng.random_range(-1.0..1.0))).collect();
        let fit = powerlaw_fit(&x, &y).unwrap();
        assert!((fit.slope - 0.5).abs() < 0.05);
    }

    #[test]
    fn power_law_rejects_bad_data() {
        assert!(powerlaw_fit(&[1.0, 2.0, 3.0], &[1.0, 0.0, 2.0]).is_err());
        assert!(powerlaw_fit(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(powerlaw_fit(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn saturation_and_total_variation() {
        assert_eq!(saturation_index(&[3.0, 2.0, 1.0005, 1.0002, 1.0], 1e-3), Some(2));
        assert_eq!(saturation_index(&[1.0], 1e-3), Some(0));
        assert_eq!(saturation_index(&[], 1e-3), None);
        assert_abs_diff_eq!(total_variation(&[0.5, 0.5], &[1.0, 0.0]), 0.5);
    }

    #[test]
    fn block_report_for_initial_state() {
        let cfg = HilbertConfig::new(20).unwrap();
        let set = crate::model::build_hamiltonians(&crate::model::RabiParams::from_g(0.1, 4.0, 1.0).unwrap(), &cfg).unwrap();
        let psi0 = HybridState::basis(&cfg, 0, Spin::Down).unwrap();
        let axis = uniform_axis(-4.0, 4.0, 41).unwrap();
        let reports = block_trace_report(&[psi0], &set.boson, &set.parity, Some((&axis, &axis))).unwrap();
        assert_eq!(reports.len(), 1);
        assert_abs_diff_eq!(reports[0].quadratures.dp, FRAC_1_SQRT_2, epsilon = 1e-14);
        assert_eq!(reports[0].fock[0], 1.0);
        assert_abs_diff_eq!(reports[0].parity, -1.0);
        assert!(reports[0].wigner.is_some());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn wigner_normalized_and_bounded(seed in any::<u64>(), occupied in 1usize..20) {
            let v = random_fock(61, occupied, seed);
            let rho = BosonDensityMatrix::pure(&v).unwrap();
            let axis = default_axis();
            let grid = wigner(&rho, &axis, &axis).unwrap();
            prop_assert!((grid.integral() - 1.0).abs() <= 1e-3);
            prop_assert!(grid.min_value() >= -1.0 / PI - 1e-9);
        }

        #[test]
        fn heisenberg_bound_for_reduced_states(seed in any::<u64>()) {
            let cfg = HilbertConfig::new(30).unwrap();
            let ops = build_boson_ops(&cfg);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            // Keep the top Fock levels empty so truncation does not distort [Q, P].
            let v = DVector::from_fn(cfg.dim(), |i, _| {
                if i / 2 < 20 { Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) } else { Complex64::default() }
            });
            let psi = HybridState::normalized(v).unwrap();
            let s = quadrature_stats(&partial_trace_spin(&psi).unwrap(), &ops.q, &ops.p).unwrap();
            prop_assert!(s.product >= 0.5 - 1e-9);
        }
    }
}
