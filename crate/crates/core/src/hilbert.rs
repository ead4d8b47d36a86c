//! Truncated Fock-space algebra for one bosonic mode coupled to a spin-1/2.
//!
//! Hybrid basis states `|n, s⟩` are flattened as `2n + s`, spin index fastest,
//! with `s = 0` for `|↑⟩` and `s = 1` for `|↓⟩`. The ladder operators use a
//! hard cutoff: `a†|N⟩ = 0`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Relative tolerance used to decide whether a matrix is Hermitian.
pub const HERMITIAN_RTOL: f64 = 1e-12;
/// Tolerance on unit norm for states and unit trace for density matrices.
pub const NORM_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Truncation of the bosonic mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertConfig {
    fock_cutoff: usize,
}

impl HilbertConfig {
    /// `fock_cutoff` is the highest retained photon number `N`.
    pub fn new(fock_cutoff: usize) -> Result<Self> {
        if fock_cutoff < 1 {
            return Err(Error::InvalidParameter(format!(
                "Fock cutoff must be at least 1, got {fock_cutoff}"
            )));
        }
        Ok(Self { fock_cutoff })
    }

    pub fn fock_cutoff(&self) -> usize {
        self.fock_cutoff
    }

    /// Dimension `N + 1` of the boson space.
    pub fn boson_dim(&self) -> usize {
        self.fock_cutoff + 1
    }

    /// Dimension `2(N + 1)` of the hybrid space.
    pub fn dim(&self) -> usize {
        2 * self.boson_dim()
    }

    pub fn index(&self, n: usize, spin: Spin) -> usize {
        2 * n + spin as usize
    }
}

/// Spin basis label. `Down` is the `-1` eigenstate of `σ_z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Up = 0,
    Down = 1,
}

impl Spin {
    pub fn from_index(s: usize) -> Spin {
        if s == 0 {
            Spin::Up
        } else {
            Spin::Down
        }
    }

    /// Eigenvalue of `σ_z`.
    pub fn sz(self) -> f64 {
        match self {
            Spin::Up => 1.0,
            Spin::Down => -1.0,
        }
    }
}

/// Dense complex square matrix. The Hermitian flag is computed on construction
/// and is therefore always truthful.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    matrix: DMatrix<Complex64>,
    hermitian: bool,
}

impl Operator {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let hermitian = hermitian_deviation(&matrix) <= HERMITIAN_RTOL * max_abs(&matrix);
        Ok(Self { matrix, hermitian })
    }

    pub fn from_real(matrix: DMatrix<f64>) -> Result<Self> {
        Self::new(matrix.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| Complex64::new(x, 0.0)));
        Self {
            matrix: DMatrix::from_diagonal(&d),
            hermitian: true,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
            hermitian: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            matrix: self.matrix.adjoint(),
            hermitian: self.hermitian,
        }
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn scale(&self, factor: f64) -> Operator {
        Operator {
            matrix: self.matrix.scale(factor),
            hermitian: self.hermitian,
        }
    }

    pub fn scale_complex(&self, factor: Complex64) -> Result<Operator> {
        Operator::new(&self.matrix * factor)
    }

    /// `AB - BA`.
    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.check_dim(other.dim())?;
        Operator::new(&self.matrix * &other.matrix - &other.matrix * &self.matrix)
    }

    pub fn apply(&self, state: &HybridState) -> Result<DVector<Complex64>> {
        self.check_dim(state.dim())?;
        Ok(&self.matrix * state.amplitudes())
    }

    /// `⟨ψ|A|ψ⟩`.
    pub fn expectation(&self, state: &HybridState) -> Result<Complex64> {
        let applied = self.apply(state)?;
        Ok(state.amplitudes().dotc(&applied))
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found,
            });
        }
        Ok(())
    }
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

fn hermitian_deviation(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;

    fn add(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        let matrix = &self.matrix + &rhs.matrix;
        let hermitian = hermitian_deviation(&matrix) <= HERMITIAN_RTOL * max_abs(&matrix);
        Operator { matrix, hermitian }
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;

    fn sub(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        let matrix = &self.matrix - &rhs.matrix;
        let hermitian = hermitian_deviation(&matrix) <= HERMITIAN_RTOL * max_abs(&matrix);
        Operator { matrix, hermitian }
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;

    fn mul(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        let matrix = &self.matrix * &rhs.matrix;
        let hermitian = hermitian_deviation(&matrix) <= HERMITIAN_RTOL * max_abs(&matrix);
        Operator { matrix, hermitian }
    }
}

/// Normalized pure state. Used both for hybrid `(n, s)` vectors and, where
/// noted, for plain Fock-space vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    amplitudes: DVector<Complex64>,
}

impl HybridState {
    /// Wraps an amplitude vector that must already be normalized.
    pub fn new(amplitudes: DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Numerical(format!("state norm is {norm}, expected 1")));
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes `amplitudes`; fails on a zero or non-finite vector.
    pub fn normalized(amplitudes: DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::Numerical(format!("cannot normalize vector with norm {norm}")));
        }
        Ok(Self {
            amplitudes: amplitudes.unscale(norm),
        })
    }

    /// Computational basis state `|n, s⟩`.
    pub fn basis(cfg: &HilbertConfig, n: usize, spin: Spin) -> Result<Self> {
        if n > cfg.fock_cutoff() {
            return Err(Error::InvalidParameter(format!(
                "Fock index {n} above cutoff {}",
                cfg.fock_cutoff()
            )));
        }
        let mut amplitudes = DVector::zeros(cfg.dim());
        amplitudes[cfg.index(n, spin)] = ONE;
        Ok(Self { amplitudes })
    }

    /// Product state `|boson⟩ ⊗ |spin⟩` from a normalized Fock vector.
    pub fn product(boson: &DVector<Complex64>, spin: Spin) -> Result<Self> {
        let mut amplitudes = DVector::zeros(2 * boson.len());
        for (n, &c) in boson.iter().enumerate() {
            amplitudes[2 * n + spin as usize] = c;
        }
        Self::new(amplitudes)
    }

    pub(crate) fn from_raw(amplitudes: DVector<Complex64>) -> Self {
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<Complex64> {
        self.amplitudes
    }

    pub fn amplitude(&self, n: usize, spin: Spin) -> Complex64 {
        self.amplitudes[2 * n + spin as usize]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &HybridState) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Total weight on spin-up components.
    pub fn spin_up_weight(&self) -> f64 {
        self.amplitudes.iter().step_by(2).map(|z| z.norm_sqr()).sum()
    }
}

/// Reduced density matrix of the boson after tracing out the spin.
#[derive(Debug, Clone, PartialEq)]
pub struct BosonDensityMatrix {
    matrix: DMatrix<Complex64>,
}

impl BosonDensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        let rho = Self { matrix };
        rho.validate()?;
        Ok(rho)
    }

    /// Pure-state density matrix `|φ⟩⟨φ|` of a normalized Fock vector.
    pub fn pure(boson: &DVector<Complex64>) -> Result<Self> {
        let norm = boson.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidDensityMatrix(format!("vector norm is {norm}")));
        }
        Ok(Self {
            matrix: boson * boson.adjoint(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.matrix;
        if !m.is_square() {
            return Err(Error::InvalidDensityMatrix("matrix is not square".into()));
        }
        let dev = hermitian_deviation(m);
        if dev > 1e-12 {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {dev:e})"
            )));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace is {tr}")));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -NORM_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let eig = SymmetricEigen::new(self.matrix.clone());
        eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `Tr(ρ A)` for an operator on the boson space.
    pub fn expectation(&self, op: &Operator) -> Result<Complex64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: op.dim(),
            });
        }
        // Tr(ρA) = Σ_ij ρ_ij A_ji
        let mut acc = ZERO;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                acc += self.matrix[(i, j)] * op.matrix()[(j, i)];
            }
        }
        Ok(acc)
    }
}

/// Ladder, number and quadrature operators on the `(N+1)`-dimensional boson space.
#[derive(Debug, Clone)]
pub struct BosonOps {
    pub a: Operator,
    pub a_dag: Operator,
    pub n_op: Operator,
    /// `(a + a†)/√2`
    pub q: Operator,
    /// `-i(a - a†)/√2`
    pub p: Operator,
}

pub fn build_boson_ops(cfg: &HilbertConfig) -> BosonOps {
    let dim = cfg.boson_dim();
    let mut a = DMatrix::<Complex64>::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    let a_dag = a.adjoint();
    let n_diag: Vec<f64> = (0..dim).map(|n| n as f64).collect();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let q = (&a + &a_dag).scale(s);
    let p = (&a - &a_dag) * Complex64::new(0.0, -s);
    BosonOps {
        a: Operator {
            matrix: a,
            hermitian: false,
        },
        a_dag: Operator {
            matrix: a_dag,
            hermitian: false,
        },
        n_op: Operator::from_diagonal(&n_diag),
        q: Operator {
            matrix: q,
            hermitian: true,
        },
        p: Operator {
            matrix: p,
            hermitian: true,
        },
    }
}

pub fn sigma_x() -> Operator {
    Operator {
        matrix: DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        hermitian: true,
    }
}

/// `σ_z` in the `(↑, ↓)` ordering: `diag(+1, -1)`.
pub fn sigma_z() -> Operator {
    Operator::from_diagonal(&[1.0, -1.0])
}

/// Embeds `boson_op ⊗ spin_op` in the hybrid space (spin index fastest).
pub fn tensor(boson_op: &Operator, spin_op: &Operator) -> Result<Operator> {
    if spin_op.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: spin_op.dim(),
        });
    }
    let matrix = boson_op.matrix.kronecker(&spin_op.matrix);
    Ok(Operator {
        matrix,
        hermitian: boson_op.hermitian && spin_op.hermitian,
    })
}

/// Eigendecomposition of a Hermitian operator, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    /// Columns are the eigenvectors, in the order of `values`.
    pub vectors: DMatrix<Complex64>,
}

impl Eigh {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V diag(λ) V†`.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let mut scaled = self.vectors.clone();
        for (j, &l) in self.values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(l);
        }
        scaled * self.vectors.adjoint()
    }

    /// Column `k` as a state vector.
    pub fn vector(&self, k: usize) -> DVector<Complex64> {
        self.vectors.column(k).into_owned()
    }
}

pub fn eigh(op: &Operator) -> Result<Eigh> {
    if !op.is_hermitian() {
        return Err(Error::NotHermitian {
            deviation: hermitian_deviation(&op.matrix),
        });
    }
    let (values, vectors) = sorted_eigen(op.matrix.clone());
    Ok(Eigh { values, vectors })
}

/// Eigendecomposition of a real symmetric matrix, eigenvalues ascending.
pub fn eigh_real(matrix: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    sorted_eigen(matrix.clone())
}

fn sorted_eigen<T: nalgebra::ComplexField<RealField = f64>>(
    matrix: DMatrix<T>,
) -> (Vec<f64>, DMatrix<T>) {
    let eig = SymmetricEigen::new(matrix);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])].clone()
    });
    (values, vectors)
}

/// `V diag(e^{-itλ}) V† ψ` for a generator with eigendecomposition `eig`.
pub fn apply_diag_exp(state: &HybridState, eig: &Eigh, t: f64) -> Result<HybridState> {
    if state.dim() != eig.dim() {
        return Err(Error::DimensionMismatch {
            expected: eig.dim(),
            found: state.dim(),
        });
    }
    let mut coeffs = eig.vectors.ad_mul(state.amplitudes());
    for (c, &l) in coeffs.iter_mut().zip(&eig.values) {
        *c *= Complex64::from_polar(1.0, -t * l);
    }
    Ok(HybridState::from_raw(&eig.vectors * coeffs))
}

/// Reduced boson state `ρ_mn = Σ_s ψ(m,s) ψ*(n,s)`.
pub fn partial_trace_spin(state: &HybridState) -> Result<BosonDensityMatrix> {
    if !state.dim().is_multiple_of(2) {
        return Err(Error::DimensionMismatch {
            expected: state.dim() + 1,
            found: state.dim(),
        });
    }
    let bdim = state.dim() / 2;
    let psi = state.amplitudes();
    let matrix = DMatrix::from_fn(bdim, bdim, |m, n| {
        psi[2 * m] * psi[2 * n].conj() + psi[2 * m + 1] * psi[2 * n + 1].conj()
    });
    Ok(BosonDensityMatrix { matrix })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Scaling-and-squaring Taylor exponential, independent of `eigh`.
    fn expm(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let norm = m.iter().map(|z| z.norm()).sum::<f64>();
        let squarings = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
        let scaled = m / Complex64::new(2f64.powi(squarings), 0.0);
        let dim = m.nrows();
        let mut result = DMatrix::<Complex64>::identity(dim, dim);
        let mut term = DMatrix::<Complex64>::identity(dim, dim);
        for k in 1..40 {
            term = &term * &scaled / Complex64::new(k as f64, 0.0);
            result += &term;
        }
        for _ in 0..squarings {
            result = &result * &result;
        }
        result
    }

    fn random_hermitian(dim: usize, seed: u64) -> Operator {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(dim, dim, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        Operator::new((&m + m.adjoint()) * c(0.5, 0.0)).unwrap()
    }

    fn random_state(dim: usize, seed: u64) -> HybridState {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let v = DVector::from_fn(dim, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        HybridState::normalized(v).unwrap()
    }

    #[test]
    fn config_dimensions() {
        let cfg = HilbertConfig::new(60).unwrap();
        assert_eq!(cfg.boson_dim(), 61);
        assert_eq!(cfg.dim(), 122);
        assert_eq!(cfg.index(3, Spin::Down), 7);
        assert!(HilbertConfig::new(0).is_err());
    }

    #[test]
    fn ladder_operators_at_small_cutoff() {
        let cfg = HilbertConfig::new(2).unwrap();
        let ops = build_boson_ops(&cfg);
        let two = DVector::from_vec(vec![c(0., 0.), c(0., 0.), c(1., 0.)]);
        let lowered = ops.a.matrix() * &two;
        assert_abs_diff_eq!(lowered[1].re, 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(lowered[0].norm() + lowered[2].norm(), 0.0);
        let raised = ops.a_dag.matrix() * &two;
        assert_eq!(raised.norm(), 0.0);
        let q2 = ops.q.matrix() * ops.q.matrix();
        assert_abs_diff_eq!(q2[(0, 0)].re, 0.5, epsilon = 1e-15);
        assert!(ops.q.is_hermitian() && ops.p.is_hermitian() && ops.n_op.is_hermitian());
        assert!(!ops.a.is_hermitian());
        assert_eq!(ops.a_dag.matrix(), &ops.a.matrix().adjoint());
        let n = &ops.a_dag * &ops.a;
        assert!((n.matrix() - ops.n_op.matrix()).norm() < 1e-14);
    }

    #[test]
    fn quadrature_commutator_is_canonical_below_cutoff() {
        let cfg = HilbertConfig::new(60).unwrap();
        let ops = build_boson_ops(&cfg);
        let comm = ops.q.commutator(&ops.p).unwrap();
        // [Q, P] = i [a, a†] and the truncated [a, a†] is diag(1, ..., 1, -N).
        for i in 0..61 {
            for j in 0..61 {
                let expected = if i != j {
                    c(0., 0.)
                } else if i < 60 {
                    c(0., 1.)
                } else {
                    c(0., -60.)
                };
                assert_abs_diff_eq!((comm.matrix()[(i, j)] - expected).norm(), 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn tensor_products_follow_basis_ordering() {
        let cfg = HilbertConfig::new(4).unwrap();
        let ops = build_boson_ops(&cfg);
        let id_b = Operator::identity(cfg.boson_dim());

        let sz = tensor(&id_b, &sigma_z()).unwrap();
        let down = HybridState::basis(&cfg, 0, Spin::Down).unwrap();
        assert_abs_diff_eq!(sz.expectation(&down).unwrap().re, -1.0);
        let applied = sz.apply(&down).unwrap();
        assert_abs_diff_eq!((applied + down.amplitudes()).norm(), 0.0);

        let n = tensor(&ops.n_op, &Operator::identity(2)).unwrap();
        let three_up = HybridState::basis(&cfg, 3, Spin::Up).unwrap();
        let applied = n.apply(&three_up).unwrap();
        assert_abs_diff_eq!((applied - three_up.amplitudes() * c(3., 0.)).norm(), 0.0);

        let flip = tensor(&ops.a, &sigma_x()).unwrap();
        let one_down = HybridState::basis(&cfg, 1, Spin::Down).unwrap();
        let zero_up = HybridState::basis(&cfg, 0, Spin::Up).unwrap();
        let applied = flip.apply(&one_down).unwrap();
        assert_abs_diff_eq!((applied - zero_up.amplitudes()).norm(), 0.0, epsilon = 1e-15);

        assert!(tensor(&id_b, &id_b).is_err());
    }

    #[test]
    fn eigh_of_pauli_x() {
        let eig = eigh(&sigma_x()).unwrap();
        assert_abs_diff_eq!(eig.values[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.values[1], 1.0, epsilon = 1e-14);
        // |⟨(↑ - ↓)/√2 | v0⟩| = 1
        let minus = DVector::from_vec(vec![c(FRAC_1_SQRT_2, 0.), c(-FRAC_1_SQRT_2, 0.)]);
        assert_abs_diff_eq!(minus.dotc(&eig.vector(0)).norm(), 1.0, epsilon = 1e-14);
        let plus = DVector::from_vec(vec![c(FRAC_1_SQRT_2, 0.), c(FRAC_1_SQRT_2, 0.)]);
        assert_abs_diff_eq!(plus.dotc(&eig.vector(1)).norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eigh_of_number_operator() {
        let ops = build_boson_ops(&HilbertConfig::new(4).unwrap());
        let eig = eigh(&ops.n_op).unwrap();
        assert_eq!(eig.values, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn eigh_rejects_non_hermitian() {
        let ops = build_boson_ops(&HilbertConfig::new(3).unwrap());
        assert!(matches!(eigh(&ops.a), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn diag_exp_identity_and_phase() {
        let cfg = HilbertConfig::new(3).unwrap();
        let sz = tensor(&Operator::identity(cfg.boson_dim()), &sigma_z()).unwrap();
        let eig = eigh(&sz).unwrap();
        let down = HybridState::basis(&cfg, 0, Spin::Down).unwrap();
        let same = apply_diag_exp(&down, &eig, 0.0).unwrap();
        assert_abs_diff_eq!((same.amplitudes() - down.amplitudes()).norm(), 0.0, epsilon = 1e-15);
        let out = apply_diag_exp(&down, &eig, PI / 2.0).unwrap();
        let expected = down.amplitudes() * Complex64::from_polar(1.0, PI / 2.0);
        assert_abs_diff_eq!((out.amplitudes() - expected).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(out.norm(), 1.0, epsilon = 1e-14);

        let wrong = HybridState::basis(&HilbertConfig::new(2).unwrap(), 0, Spin::Up).unwrap();
        assert!(apply_diag_exp(&wrong, &eig, 1.0).is_err());
    }

    #[test]
    fn number_operator_evolution_is_two_pi_periodic() {
        let cfg = HilbertConfig::new(8).unwrap();
        let ops = build_boson_ops(&cfg);
        let gen = tensor(&ops.n_op, &Operator::identity(2)).unwrap();
        let eig = eigh(&gen).unwrap();
        let psi = random_state(cfg.dim(), 11);
        let t = 2.0 * PI;
        let out = apply_diag_exp(&psi, &eig, t).unwrap();
        let direct = expm(&(gen.matrix() * c(0., -t))) * psi.amplitudes();
        assert_abs_diff_eq!((out.amplitudes() - &direct).norm(), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!((out.amplitudes() - psi.amplitudes()).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn diag_exp_matches_taylor_exponential() {
        let h = random_hermitian(12, 3);
        let eig = eigh(&h).unwrap();
        let psi = random_state(12, 4);
        let out = apply_diag_exp(&psi, &eig, 0.7).unwrap();
        let direct = expm(&(h.matrix() * c(0., -0.7))) * psi.amplitudes();
        assert_abs_diff_eq!((out.amplitudes() - direct).norm(), 0.0, epsilon = 1e-11);
    }

    #[test]
    fn partial_trace_of_product_and_entangled_states() {
        let cfg = HilbertConfig::new(4).unwrap();
        let prod = HybridState::basis(&cfg, 2, Spin::Down).unwrap();
        let rho = partial_trace_spin(&prod).unwrap();
        assert_abs_diff_eq!(rho.matrix()[(2, 2)].re, 1.0);
        assert_abs_diff_eq!(rho.purity(), 1.0);

        let mut v = DVector::zeros(cfg.dim());
        v[cfg.index(0, Spin::Up)] = c(FRAC_1_SQRT_2, 0.);
        v[cfg.index(1, Spin::Down)] = c(FRAC_1_SQRT_2, 0.);
        let bell = HybridState::new(v).unwrap();
        let rho = partial_trace_spin(&bell).unwrap();
        assert_abs_diff_eq!(rho.matrix()[(0, 0)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.matrix()[(1, 1)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.matrix()[(0, 1)].norm(), 0.0);
        assert_abs_diff_eq!(rho.purity(), 0.5, epsilon = 1e-15);
        rho.validate().unwrap();
    }

    #[test]
    fn density_matrix_validation() {
        let bad_trace = DMatrix::from_diagonal(&DVector::from_vec(vec![c(0.5, 0.), c(0.4, 0.)]));
        assert!(BosonDensityMatrix::new(bad_trace).is_err());
        let negative = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.2, 0.), c(-0.2, 0.)]));
        assert!(BosonDensityMatrix::new(negative).is_err());
        let non_herm = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.), c(0.1, 0.), c(0.0, 0.), c(0.5, 0.)]);
        assert!(BosonDensityMatrix::new(non_herm).is_err());
    }

    #[test]
    fn unnormalized_states_rejected() {
        let v = DVector::from_vec(vec![c(1., 0.), c(1., 0.)]);
        assert!(HybridState::new(v.clone()).is_err());
        let s = HybridState::normalized(v).unwrap();
        assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-15);
        assert!(HybridState::normalized(DVector::zeros(2)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn eigh_round_trip(dim in 1usize..=128, seed in any::<u64>()) {
            let h = random_hermitian(dim, seed);
            let eig = eigh(&h).unwrap();
            let scale = h.norm();
            let recon = eig.reconstruct();
            prop_assert!((recon - h.matrix()).norm() <= 1e-9 * scale);
            let gram = eig.vectors.adjoint() * &eig.vectors;
            prop_assert!((gram - DMatrix::<Complex64>::identity(dim, dim)).norm() <= 1e-9);
            prop_assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
            let residual = h.matrix() * &eig.vectors - &eig.vectors * DMatrix::from_diagonal(
                &DVector::from_iterator(dim, eig.values.iter().map(|&l| c(l, 0.))));
            prop_assert!(residual.norm() <= 1e-9 * scale);
        }

        #[test]
        fn diag_exp_composes_and_preserves_norm(seed in any::<u64>(), t1 in -5.0f64..5.0, t2 in -5.0f64..5.0) {
            let h = random_hermitian(16, seed);
            let eig = eigh(&h).unwrap();
            let psi = random_state(16, seed ^ 0x5eed);
            let two_step = apply_diag_exp(&apply_diag_exp(&psi, &eig, t1).unwrap(), &eig, t2).unwrap();
            let one_step = apply_diag_exp(&psi, &eig, t1 + t2).unwrap();
            prop_assert!((two_step.amplitudes() - one_step.amplitudes()).norm() <= 1e-10);
            prop_assert!((one_step.norm() - 1.0).abs() <= 1e-10);
        }

        #[test]
        fn partial_trace_is_a_density_matrix(seed in any::<u64>(), cutoff in 1usize..20) {
            let cfg = HilbertConfig::new(cutoff).unwrap();
            let psi = random_state(cfg.dim(), seed);
            let rho = partial_trace_spin(&psi).unwrap();
            prop_assert!((rho.trace() - 1.0).abs() <= 1e-10);
            prop_assert!(rho.min_eigenvalue() >= -1e-10);
            prop_assert!(rho.validate().is_ok());
        }
    }
}
