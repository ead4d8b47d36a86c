//! The quantum Rabi Hamiltonian, its ansatz generators and analytic references.
//!
//! `H = ω₀ a†a + (Ω/2) σ_z − λ (a + a†) σ_x` splits into the three generators
//! `H₁ = σ_z`, `H₂ = a†a` and `H₃ = (a + a†) σ_x`, each of which commutes with
//! the parity `Π = e^{iπa†a} σ_z`. Near `Ω/ω₀ → ∞` the low-energy sector is
//! described by a boson-only quadratic Hamiltonian whose eigenstates are
//! squeezed Fock states; those serve as oracles.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    self, build_boson_ops, sigma_x, sigma_z, tensor, BosonOps, HilbertConfig, HybridState, Operator,
};

/// Largest squeezing parameter accepted by [`build_squeeze_operator`].
pub const MAX_SQUEEZE: f64 = 3.0;

/// Degeneracy threshold for the ground level.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Physical parameters of the Rabi model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiParams {
    /// Cavity frequency ω₀.
    pub omega0: f64,
    /// Atomic transition frequency Ω.
    pub omega: f64,
    /// Coupling λ.
    pub lambda: f64,
}

impl RabiParams {
    pub fn new(omega0: f64, omega: f64, lambda: f64) -> Result<Self> {
        if !(omega0 > 0.0 && omega0.is_finite()) {
            return Err(Error::InvalidParameter(format!("omega0 must be positive, got {omega0}")));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidParameter(format!("Omega must be positive, got {omega}")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be non-negative, got {lambda}")));
        }
        Ok(Self { omega0, omega, lambda })
    }

    /// Parameters at dimensionless coupling `g`, with `λ = g √(ω₀Ω) / 2`.
    pub fn from_g(omega0: f64, omega: f64, g: f64) -> Result<Self> {
        if !(g >= 0.0 && g.is_finite()) {
            return Err(Error::InvalidParameter(format!("g must be non-negative, got {g}")));
        }
        Self::new(omega0, omega, g * (omega0 * omega).sqrt() / 2.0)
    }

    /// Dimensionless coupling `g = 2λ / √(ω₀Ω)`.
    pub fn g(&self) -> f64 {
        2.0 * self.lambda / (self.omega0 * self.omega).sqrt()
    }

    /// Ground energy of the effective low-energy Hamiltonian,
    /// `(ω₀/2)(√(1−g²) − 1) − Ω/2`. Only defined for `g < 1`.
    pub fn effective_ground_energy(&self) -> Result<f64> {
        self.effective_level(0)
    }

    /// Level `n` of the effective spectrum, `ω₀√(1−g²)(n + ½) − ω₀/2 − Ω/2`.
    pub fn effective_level(&self, n: usize) -> Result<f64> {
        let g = self.g();
        if g >= 1.0 {
            return Err(Error::Domain(format!("effective spectrum requires g < 1, got {g}")));
        }
        let freq = self.omega0 * (1.0 - g * g).sqrt();
        Ok(freq * (n as f64 + 0.5) - self.omega0 / 2.0 - self.omega / 2.0)
    }
}

/// All operators derived from one parameter point.
#[derive(Debug, Clone)]
pub struct HamiltonianSet {
    pub params: RabiParams,
    pub cfg: HilbertConfig,
    /// Full Rabi Hamiltonian on the hybrid space.
    pub full: Operator,
    /// `σ_z` embedded in the hybrid space.
    pub h1: Operator,
    /// `a†a` embedded in the hybrid space.
    pub h2: Operator,
    /// `(a + a†) σ_x`.
    pub h3: Operator,
    /// Effective boson-only Hamiltonian; used only as a reference.
    pub effective: Operator,
    /// `e^{iπa†a} σ_z`.
    pub parity: Operator,
    pub boson: BosonOps,
}

pub fn build_hamiltonians(params: &RabiParams, cfg: &HilbertConfig) -> Result<HamiltonianSet> {
    let boson = build_boson_ops(cfg);
    let id_b = Operator::identity(cfg.boson_dim());
    let id_s = Operator::identity(2);
    let x = &boson.a + &boson.a_dag;

    let h1 = tensor(&id_b, &sigma_z())?;
    let h2 = tensor(&boson.n_op, &id_s)?;
    let h3 = tensor(&x, &sigma_x())?;
    let full = &(&h2.scale(params.omega0) + &h1.scale(params.omega / 2.0)) - &h3.scale(params.lambda);

    let g = params.g();
    let x2 = &x * &x;
    let shift = Operator::identity(cfg.boson_dim()).scale(params.omega / 2.0);
    let effective = &(&boson.n_op.scale(params.omega0) - &x2.scale(params.omega0 * g * g / 4.0)) - &shift;

    let signs: Vec<f64> = (0..cfg.boson_dim())
        .map(|n| if n % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    let parity = tensor(&Operator::from_diagonal(&signs), &sigma_z())?;

    Ok(HamiltonianSet {
        params: *params,
        cfg: *cfg,
        full,
        h1,
        h2,
        h3,
        effective,
        parity,
        boson,
    })
}

/// Lowest eigenpair of a Hamiltonian.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    pub state: HybridState,
    /// Distance to the next eigenvalue.
    pub gap: f64,
    /// `⟨Π⟩` of the returned state.
    pub parity: f64,
    /// Whether the lowest level was degenerate within [`DEGENERACY_TOL`].
    pub degenerate: bool,
}

/// Exact diagonalization of `h`. A degenerate lowest level is resolved by
/// diagonalizing the parity within it and preferring the `Π = −1` sector.
/// The global phase is fixed so that the largest amplitude is real positive.
pub fn exact_ground_state(h: &Operator, parity: &Operator) -> Result<GroundState> {
    if parity.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: parity.dim(),
        });
    }
    let eig = hilbert::eigh(h)?;
    let e0 = eig.values[0];
    let multiplicity = eig.values.iter().take_while(|&&e| e - e0 <= DEGENERACY_TOL).count();
    let gap = eig.values.get(multiplicity).map_or(f64::INFINITY, |&e| e - e0);
    let degenerate = multiplicity > 1;

    let vector = if degenerate {
        let basis = eig.vectors.columns(0, multiplicity).into_owned();
        let restricted = basis.adjoint() * parity.matrix() * &basis;
        let sub = hilbert::eigh(&Operator::new(restricted)?)?;
        // Most negative parity eigenvalue first; ties keep the lower index.
        &basis * sub.vector(0)
    } else {
        eig.vector(0)
    };
    let state = HybridState::normalized(fix_phase(vector))?;
    let parity_value = parity.expectation(&state)?.re;
    Ok(GroundState {
        energy: e0,
        state,
        gap,
        parity: parity_value,
        degenerate,
    })
}

fn fix_phase(mut v: nalgebra::DVector<Complex64>) -> nalgebra::DVector<Complex64> {
    let (_, pivot) = v
        .iter()
        .enumerate()
        .fold((0.0, 0), |(best, idx), (i, z)| if z.norm() > best { (z.norm(), i) } else { (best, idx) });
    let phase = v[pivot].conj() / v[pivot].norm();
    if phase.is_finite() {
        v *= phase;
    }
    v
}

/// Squeezing operator `S(x) = exp((x/2)(a†² − a²))` on the boson space.
pub fn build_squeeze_operator(x: f64, cfg: &HilbertConfig) -> Result<Operator> {
    if !x.is_finite() || x.abs() > MAX_SQUEEZE {
        return Err(Error::Truncation(format!(
            "squeezing parameter {x} exceeds the supported range |x| <= {MAX_SQUEEZE}"
        )));
    }
    let ops = build_boson_ops(cfg);
    let a2 = ops.a.matrix() * ops.a.matrix();
    let ad2 = ops.a_dag.matrix() * ops.a_dag.matrix();
    // K = i·(x/2)(a†² − a²) is Hermitian and S = e^{−iK}.
    let k = (ad2 - a2) * Complex64::new(0.0, x / 2.0);
    let eig = hilbert::eigh(&Operator::new(k)?)?;
    let mut phased = eig.vectors.clone();
    for (j, &l) in eig.values.iter().enumerate() {
        let ph = Complex64::from_polar(1.0, -l);
        for z in phased.column_mut(j).iter_mut() {
            *z *= ph;
        }
    }
    let s = phased * eig.vectors.adjoint();
    let dim = cfg.boson_dim();
    let defect = (s.adjoint() * &s - DMatrix::<Complex64>::identity(dim, dim)).norm();
    if defect > 1e-8 {
        return Err(Error::Numerical(format!("squeeze operator not unitary (defect {defect:e})")));
    }
    Operator::new(s)
}

/// `S(x)|0⟩` as a Fock-space vector.
pub fn squeezed_vacuum(x: f64, cfg: &HilbertConfig) -> Result<nalgebra::DVector<Complex64>> {
    let s = build_squeeze_operator(x, cfg)?;
    Ok(s.matrix().column(0).into_owned())
}

/// Squeezing of the effective ground state, `x = −¼ ln(1 − g²)`.
pub fn critical_squeezing_x(g: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&g) {
        return Err(Error::Domain(format!(
            "squeezing parameter diverges at g >= 1 and is undefined for g < 0 (g = {g})"
        )));
    }
    Ok(-0.25 * (1.0 - g * g).ln())
}
