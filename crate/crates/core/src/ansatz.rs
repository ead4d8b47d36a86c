//! Hamiltonian variational ansatz `U(θ) = Π_j e^{−iγ_j H₃} e^{−iβ_j H₂} e^{−iα_j H₁}`.
//!
//! `H₁` and `H₂` are diagonal in the Fock ⊗ spin basis, so their gates are
//! phase multiplications. `H₃ = (a + a†) ⊗ σ_x` is diagonalized once as the
//! product of the eigenbasis of `a + a†` (real, tridiagonal) and the `σ_x`
//! eigenbasis; each coupling gate is then two real basis changes around a
//! diagonal phase.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::hilbert::{eigh_real, Eigh, HilbertConfig, HybridState, Operator, Spin};

/// Variational angles, one `(α, β, γ)` triple per block.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AnsatzParams {
    thetas: Vec<[f64; 3]>,
}

impl AnsatzParams {
    pub fn zeros(depth: usize) -> Self {
        Self {
            thetas: vec![[0.0; 3]; depth],
        }
    }

    pub fn from_blocks(thetas: Vec<[f64; 3]>) -> Self {
        Self { thetas }
    }

    /// Flat layout `[α₁, β₁, γ₁, α₂, …]`.
    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if !flat.len().is_multiple_of(3) {
            return Err(Error::InvalidParameter(format!(
                "parameter vector length {} is not a multiple of 3",
                flat.len()
            )));
        }
        Ok(Self {
            thetas: flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
        })
    }

    pub fn depth(&self) -> usize {
        self.thetas.len()
    }

    pub fn blocks(&self) -> &[[f64; 3]] {
        &self.thetas
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.thetas.iter().flatten().copied().collect()
    }

    /// Appends an identity block `(0, 0, 0)`.
    pub fn with_zero_block(&self) -> Self {
        let mut thetas = self.thetas.clone();
        thetas.push([0.0; 3]);
        Self { thetas }
    }

    pub fn concat(&self, other: &AnsatzParams) -> Self {
        let mut thetas = self.thetas.clone();
        thetas.extend_from_slice(&other.thetas);
        Self { thetas }
    }
}

/// `|0⟩ ⊗ |↓⟩`, which lies in the `Π = −1` sector.
pub fn initial_state(cfg: &HilbertConfig) -> HybridState {
    HybridState::basis(cfg, 0, Spin::Down).expect("vacuum is always inside the cutoff")
}

/// Result of running the circuit.
#[derive(Debug, Clone)]
pub struct AnsatzOutput {
    pub final_state: HybridState,
    /// State after each full block, when requested. Does not include the input.
    pub blocks: Option<Vec<HybridState>>,
}

/// Generator spectra and the cached coupling-gate eigenbasis for one cutoff.
#[derive(Debug, Clone)]
pub struct CompiledAnsatz {
    cfg: HilbertConfig,
    /// Diagonal of `H₁ = σ_z` in the hybrid basis.
    spin_diag: Vec<f64>,
    /// Diagonal of `H₂ = a†a` in the hybrid basis.
    number_diag: Vec<f64>,
    /// Eigenvalues of `a + a†`, ascending.
    mode_values: Vec<f64>,
    /// Eigenvectors of `a + a†`, row-major `[n * nb + k]`.
    modes: Vec<f64>,
    /// Transpose of `modes`.
    modes_t: Vec<f64>,
    /// `H₃` eigenvalues in coupling-basis order: `−μ_k` then `+μ_k`.
    coupling_values: Vec<f64>,
}

impl CompiledAnsatz {
    pub fn new(cfg: &HilbertConfig) -> Result<Self> {
        let nb = cfg.boson_dim();
        let x = DMatrix::from_fn(nb, nb, |i, j| {
            if j == i + 1 {
                (j as f64).sqrt()
            } else if i == j + 1 {
                (i as f64).sqrt()
            } else {
                0.0
            }
        });
        let (mode_values, vecs) = eigh_real(&x);
        let residual = (&x * &vecs - &vecs * DMatrix::from_diagonal(&DVector::from_vec(mode_values.clone()))).norm();
        if residual > 1e-9 * x.norm() {
            return Err(Error::Numerical(format!(
                "coupling eigendecomposition residual {residual:e}"
            )));
        }
        let mut modes = vec![0.0; nb * nb];
        let mut modes_t = vec![0.0; nb * nb];
        for n in 0..nb {
            for k in 0..nb {
                modes[n * nb + k] = vecs[(n, k)];
                modes_t[k * nb + n] = vecs[(n, k)];
            }
        }
        let coupling_values = mode_values
            .iter()
            .map(|&m| -m)
            .chain(mode_values.iter().copied())
            .collect();
        let spin_diag = (0..cfg.dim()).map(|i| Spin::from_index(i % 2).sz()).collect();
        let number_diag = (0..cfg.dim()).map(|i| (i / 2) as f64).collect();
        Ok(Self {
            cfg: *cfg,
            spin_diag,
            number_diag,
            mode_values,
            modes,
            modes_t,
            coupling_values,
        })
    }

    pub fn config(&self) -> &HilbertConfig {
        &self.cfg
    }

    pub fn dim(&self) -> usize {
        self.cfg.dim()
    }

    /// Diagonal of `H₁`.
    pub fn spin_spectrum(&self) -> &[f64] {
        &self.spin_diag
    }

    /// Diagonal of `H₂`.
    pub fn number_spectrum(&self) -> &[f64] {
        &self.number_diag
    }

    /// Eigenvalues of the boson factor `a + a†`.
    pub fn mode_values(&self) -> &[f64] {
        &self.mode_values
    }

    /// Full eigendecomposition of `H₃` assembled from the cached factors.
    pub fn coupling_eigh(&self) -> Eigh {
        let nb = self.cfg.boson_dim();
        let dim = self.dim();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&i, &j| self.coupling_values[i].total_cmp(&self.coupling_values[j]));
        let vectors = DMatrix::from_fn(dim, dim, |row, col| {
            let idx = order[col];
            let (k, sign) = if idx < nb { (idx, -1.0) } else { (idx - nb, 1.0) };
            let n = row / 2;
            let amp = self.modes[n * nb + k] * FRAC_1_SQRT_2;
            Complex64::new(if row % 2 == 0 { amp } else { sign * amp }, 0.0)
        });
        Eigh {
            values: order.iter().map(|&i| self.coupling_values[i]).collect(),
            vectors,
        }
    }

    /// Runs the circuit on `psi0`.
    pub fn apply(&self, params: &AnsatzParams, psi0: &HybridState, capture_blocks: bool) -> Result<AnsatzOutput> {
        self.check_dim(psi0.dim())?;
        let mut ws = Workspace::new(self.cfg.boson_dim());
        let mut psi: Vec<Complex64> = psi0.amplitudes().iter().copied().collect();
        let mut blocks = capture_blocks.then(|| Vec::with_capacity(params.depth()));
        for theta in params.blocks() {
            self.apply_block(&mut psi, theta, &mut ws);
            if let Some(b) = blocks.as_mut() {
                b.push(HybridState::from_raw(DVector::from_column_slice(&psi)));
            }
        }
        Ok(AnsatzOutput {
            final_state: HybridState::from_raw(DVector::from_vec(psi)),
            blocks,
        })
    }

    /// `⟨ψ(θ)|H|ψ(θ)⟩`.
    pub fn energy(&self, h: &Operator, params: &AnsatzParams, psi0: &HybridState) -> Result<f64> {
        self.check_dim(h.dim())?;
        let out = self.apply(params, psi0, false)?;
        expectation_real(h, out.final_state.amplitudes())
    }

    /// Energy and its exact gradient with respect to the flat parameter vector,
    /// computed by one forward pass and one reverse (adjoint) sweep.
    pub fn energy_and_gradient(
        &self,
        h: &Operator,
        params: &AnsatzParams,
        psi0: &HybridState,
    ) -> Result<(f64, Vec<f64>)> {
        self.check_dim(h.dim())?;
        self.check_dim(psi0.dim())?;
        let nb = self.cfg.boson_dim();
        let mut ws = Workspace::new(nb);
        let mut phi: Vec<Complex64> = psi0.amplitudes().iter().copied().collect();
        for theta in params.blocks() {
            self.apply_block(&mut phi, theta, &mut ws);
        }
        let phi_vec = DVector::from_column_slice(&phi);
        let lam_vec = h.matrix() * &phi_vec;
        let energy = checked_real(phi_vec.dotc(&lam_vec))?;
        let mut lam: Vec<Complex64> = lam_vec.iter().copied().collect();

        let mut grad = vec![0.0; 3 * params.depth()];
        let mut phi_t = vec![Complex64::default(); 2 * nb];
        let mut lam_t = vec![Complex64::default(); 2 * nb];
        for (j, theta) in params.blocks().iter().enumerate().rev() {
            let [alpha, beta, gamma] = *theta;

            self.to_coupling_basis(&phi, &mut phi_t, &mut ws);
            self.to_coupling_basis(&lam, &mut lam_t, &mut ws);
            grad[3 * j + 2] = 2.0 * weighted_overlap(&lam_t, &phi_t, &self.coupling_values).im;
            phase_by(&mut phi_t, &self.coupling_values, gamma);
            phase_by(&mut lam_t, &self.coupling_values, gamma);
            self.back_to_fock_basis(&phi_t, &mut phi, &mut ws);
            self.back_to_fock_basis(&lam_t, &mut lam, &mut ws);

            grad[3 * j + 1] = 2.0 * weighted_overlap(&lam, &phi, &self.number_diag).im;
            phase_by(&mut phi, &self.number_diag, beta);
            phase_by(&mut lam, &self.number_diag, beta);

            grad[3 * j] = 2.0 * weighted_overlap(&lam, &phi, &self.spin_diag).im;
            phase_by(&mut phi, &self.spin_diag, alpha);
            phase_by(&mut lam, &self.spin_diag, alpha);
        }
        Ok((energy, grad))
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

    fn apply_block(&self, psi: &mut [Complex64], theta: &[f64; 3], ws: &mut Workspace) {
        let [alpha, beta, gamma] = *theta;
        phase_by(psi, &self.spin_diag, -alpha);
        phase_by(psi, &self.number_diag, -beta);
        let mut coeffs = std::mem::take(&mut ws.coeffs);
        self.to_coupling_basis(psi, &mut coeffs, ws);
        phase_by(&mut coeffs, &self.coupling_values, -gamma);
        self.back_to_fock_basis(&coeffs, psi, ws);
        ws.coeffs = coeffs;
    }

    /// Coefficients `⟨e_k|ψ⟩` in the `H₃` eigenbasis; `σ_x = −1` modes first.
    fn to_coupling_basis(&self, psi: &[Complex64], out: &mut [Complex64], ws: &mut Workspace) {
        let nb = self.cfg.boson_dim();
        let (minus, plus) = ws.split.split_at_mut(nb);
        for n in 0..nb {
            let up = psi[2 * n];
            let down = psi[2 * n + 1];
            minus[n] = (up - down) * FRAC_1_SQRT_2;
            plus[n] = (up + down) * FRAC_1_SQRT_2;
        }
        let (out_minus, out_plus) = out.split_at_mut(nb);
        for k in 0..nb {
            let row = &self.modes_t[k * nb..(k + 1) * nb];
            let (mut sm, mut sp) = (Complex64::default(), Complex64::default());
            for ((&b, &m), &p) in row.iter().zip(minus.iter()).zip(plus.iter()) {
                sm += m * b;
                sp += p * b;
            }
            out_minus[k] = sm;
            out_plus[k] = sp;
        }
    }

    fn back_to_fock_basis(&self, coeffs: &[Complex64], psi: &mut [Complex64], _ws: &mut Workspace) {
        let nb = self.cfg.boson_dim();
        let (c_minus, c_plus) = coeffs.split_at(nb);
        for n in 0..nb {
            let row = &self.modes[n * nb..(n + 1) * nb];
            let (mut m, mut p) = (Complex64::default(), Complex64::default());
            for ((&b, &cm), &cp) in row.iter().zip(c_minus.iter()).zip(c_plus.iter()) {
                m += cm * b;
                p += cp * b;
            }
            psi[2 * n] = (p + m) * FRAC_1_SQRT_2;
            psi[2 * n + 1] = (p - m) * FRAC_1_SQRT_2;
        }
    }
}

struct Workspace {
    split: Vec<Complex64>,
    coeffs: Vec<Complex64>,
}

impl Workspace {
    fn new(nb: usize) -> Self {
        Self {
            split: vec![Complex64::default(); 2 * nb],
            coeffs: vec![Complex64::default(); 2 * nb],
        }
    }
}

/// `v_i ← e^{i t d_i} v_i`.
fn phase_by(v: &mut [Complex64], diag: &[f64], t: f64) {
    if t == 0.0 {
        return;
    }
    for (z, &d) in v.iter_mut().zip(diag) {
        *z *= Complex64::from_polar(1.0, t * d);
    }
}

/// `Σ_i conj(a_i) d_i b_i`.
fn weighted_overlap(a: &[Complex64], b: &[Complex64], d: &[f64]) -> Complex64 {
    a.iter()
        .zip(b)
        .zip(d)
        .fold(Complex64::default(), |acc, ((x, y), &w)| acc + x.conj() * y * w)
}

/// Imaginary residue above this signals a non-Hermitian operator.
pub const IMAGINARY_RESIDUE_TOL: f64 = 1e-8;

fn checked_real(z: Complex64) -> Result<f64> {
    if z.im.abs() > IMAGINARY_RESIDUE_TOL * z.re.abs().max(1.0) {
        return Err(Error::Numerical(format!(
            "expectation value has imaginary part {:e}; operator is not Hermitian",
            z.im
        )));
    }
    Ok(z.re)
}

pub(crate) fn expectation_real(h: &Operator, psi: &DVector<Complex64>) -> Result<f64> {
    checked_real(psi.dotc(&(h.matrix() * psi)))
}
