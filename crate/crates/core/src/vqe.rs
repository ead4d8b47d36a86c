//! Energy minimization over ansatz angles.
//!
//! Each depth `p` is optimized from the depth `p − 1` solution extended by an
//! identity block, so the best energy can only decrease with depth. Further
//! restarts add uniform noise to that warm start. Optimization uses BFGS on
//! exact adjoint gradients; the central-difference [`gradient`] is kept as an
//! independent check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::ansatz::{initial_state, AnsatzParams, CompiledAnsatz};
use crate::error::{Error, Result};
use crate::hilbert::{HilbertConfig, HybridState, Operator};
use crate::model::{build_hamiltonians, exact_ground_state, GroundState, HamiltonianSet, RabiParams};
use crate::optim::{self, BfgsSettings, Objective, Termination};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// Half-step of the central finite-difference gradient.
    pub gradient_step: f64,
    /// Absolute energy change below which an optimization stops.
    pub convergence_tol: f64,
    pub restarts: usize,
    /// Amplitude of the uniform perturbation used by restarts after the first.
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            gradient_step: 1e-6,
            convergence_tol: 1e-12,
            restarts: 5,
            init_scale: 0.1,
            seed: 1234,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gradient_step > 0.0) {
            return Err(Error::InvalidParameter("gradient_step must be positive".into()));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::InvalidParameter("convergence_tol must be positive".into()));
        }
        if self.restarts < 1 {
            return Err(Error::InvalidParameter("restarts must be at least 1".into()));
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return Err(Error::InvalidParameter("init_scale must be non-negative".into()));
        }
        Ok(())
    }
}

/// A restart that was abandoned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartFailure {
    pub restart: usize,
    pub reason: String,
}

/// Outcome of optimizing one depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeRun {
    pub params: RabiParams,
    pub fock_cutoff: usize,
    pub depth: usize,
    pub best_thetas: AnsatzParams,
    pub best_energy: f64,
    pub exact_energy: f64,
    /// `|⟨ψ_exact|ψ(θ)⟩|²`, clamped to `[0, 1]`.
    pub fidelity: f64,
    pub infidelity: f64,
    pub energy_history: Vec<f64>,
    pub seed: u64,
    pub best_restart: usize,
    pub iterations: usize,
    pub termination: Termination,
    pub restart_failures: Vec<RestartFailure>,
    pub wall_time_secs: f64,
}

/// `⟨ψ(θ)|H|ψ(θ)⟩` starting from `|0, ↓⟩`.
pub fn cost(compiled: &CompiledAnsatz, h: &Operator, thetas: &AnsatzParams) -> Result<f64> {
    compiled.energy(h, thetas, &initial_state(compiled.config()))
}

/// Central finite-difference gradient with half-step `step`.
pub fn gradient(compiled: &CompiledAnsatz, h: &Operator, thetas: &AnsatzParams, step: f64) -> Result<Vec<f64>> {
    stencil_gradient(compiled, h, thetas, step, &[(1.0, 1.0)], 2.0)
}

/// Fourth-order central difference, `(−f(2h) + 8f(h) − 8f(−h) + f(−2h)) / 12h`.
pub fn gradient_four_point(compiled: &CompiledAnsatz, h: &Operator, thetas: &AnsatzParams, step: f64) -> Result<Vec<f64>> {
    stencil_gradient(compiled, h, thetas, step, &[(1.0, 8.0), (2.0, -1.0)], 12.0)
}

fn stencil_gradient(
    compiled: &CompiledAnsatz,
    h: &Operator,
    thetas: &AnsatzParams,
    step: f64,
    taps: &[(f64, f64)],
    denom: f64,
) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!("finite-difference step must be positive, got {step}")));
    }
    let flat = thetas.to_flat();
    let mut grad = Vec::with_capacity(flat.len());
    let mut shifted = flat.clone();
    for k in 0..flat.len() {
        let mut acc = 0.0;
        for &(offset, weight) in taps {
            shifted[k] = flat[k] + offset * step;
            let up = cost(compiled, h, &AnsatzParams::from_flat(&shifted)?)?;
            shifted[k] = flat[k] - offset * step;
            let down = cost(compiled, h, &AnsatzParams::from_flat(&shifted)?)?;
            acc += weight * (up - down);
        }
        shifted[k] = flat[k];
        grad.push(acc / (denom * step));
    }
    Ok(grad)
}

struct EnergyObjective<'a> {
    compiled: &'a CompiledAnsatz,
    h: &'a Operator,
    psi0: &'a HybridState,
}

impl Objective for EnergyObjective<'_> {
    fn value_and_gradient(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.compiled.energy_and_gradient(self.h, &AnsatzParams::from_flat(x)?, self.psi0)
    }
}

/// Hamiltonians, compiled ansatz and exact ground state for one parameter point.
#[derive(Debug, Clone)]
pub struct VqeProblem {
    pub hamiltonians: HamiltonianSet,
    pub compiled: CompiledAnsatz,
    pub ground: GroundState,
    pub psi0: HybridState,
    /// `H − E_ref` with `E_ref = ⟨0,↓|H|0,↓⟩`. Minimizing this instead of `H`
    /// keeps the large `−Ω/2` offset out of the line-search comparisons.
    shifted: Operator,
    reference_energy: f64,
}

struct RestartResult {
    thetas: Vec<f64>,
    energy: f64,
    history: Vec<f64>,
    iterations: usize,
    termination: Termination,
}

impl VqeProblem {
    pub fn new(params: &RabiParams, cfg: &HilbertConfig) -> Result<Self> {
        let hamiltonians = build_hamiltonians(params, cfg)?;
        let ground = exact_ground_state(&hamiltonians.full, &hamiltonians.parity)?;
        let psi0 = initial_state(cfg);
        let reference_energy = hamiltonians.full.expectation(&psi0)?.re;
        let shifted = &hamiltonians.full - &Operator::identity(cfg.dim()).scale(reference_energy);
        Ok(Self {
            compiled: CompiledAnsatz::new(cfg)?,
            psi0,
            hamiltonians,
            ground,
            shifted,
            reference_energy,
        })
    }

    pub fn params(&self) -> &RabiParams {
        &self.hamiltonians.params
    }

    pub fn cost(&self, thetas: &AnsatzParams) -> Result<f64> {
        self.compiled.energy(&self.hamiltonians.full, thetas, &self.psi0)
    }

    pub fn state(&self, thetas: &AnsatzParams) -> Result<HybridState> {
        Ok(self.compiled.apply(thetas, &self.psi0, false)?.final_state)
    }

    /// Final state and the state after each block, starting with the input state.
    pub fn block_states(&self, thetas: &AnsatzParams) -> Result<Vec<HybridState>> {
        let out = self.compiled.apply(thetas, &self.psi0, true)?;
        let mut states = vec![self.psi0.clone()];
        states.extend(out.blocks.unwrap_or_default());
        Ok(states)
    }

    pub fn fidelity(&self, thetas: &AnsatzParams) -> Result<f64> {
        let state = self.state(thetas)?;
        Ok(self.ground.state.inner(&state)?.norm_sqr())
    }

    /// Optimizes a depth-`p` circuit. `warm_start`, if given, must have depth `p − 1`.
    pub fn optimize_depth(&self, p: usize, cfg: &OptimizerConfig, warm_start: Option<&AnsatzParams>) -> Result<VqeRun> {
        cfg.validate()?;
        if p < 1 {
            return Err(Error::InvalidParameter("depth must be at least 1".into()));
        }
        let base = match warm_start {
            Some(w) if w.depth() + 1 != p => {
                return Err(Error::InvalidParameter(format!(
                    "warm start has depth {}, expected {}",
                    w.depth(),
                    p - 1
                )))
            }
            Some(w) => w.with_zero_block(),
            None => AnsatzParams::zeros(p),
        };
        let start = Instant::now();
        let base_flat = base.to_flat();
        let settings = BfgsSettings {
            max_iterations: cfg.max_iterations,
            value_tol: cfg.convergence_tol,
            ..Default::default()
        };

        let outcomes: Vec<Result<RestartResult>> = (0..cfg.restarts)
            .into_par_iter()
            .map(|restart| {
                let x0 = restart_start(&base_flat, restart, p, cfg);
                let mut objective = EnergyObjective {
                    compiled: &self.compiled,
                    h: &self.shifted,
                    psi0: &self.psi0,
                };
                let out = optim::minimize(&mut objective, &x0, &settings)?;
                Ok(RestartResult {
                    thetas: out.x,
                    energy: out.value,
                    history: out.history.iter().map(|e| e + self.reference_energy).collect(),
                    iterations: out.iterations,
                    termination: out.termination,
                })
            })
            .collect();

        let mut failures = Vec::new();
        let mut best: Option<(usize, RestartResult)> = None;
        for (restart, outcome) in outcomes.into_iter().enumerate() {
            match outcome {
                Ok(r) => {
                    if best.as_ref().is_none_or(|(_, b)| r.energy < b.energy) {
                        best = Some((restart, r));
                    }
                }
                Err(e) => failures.push(RestartFailure {
                    restart,
                    reason: e.to_string(),
                }),
            }
        }
        let (best_restart, best) = best.ok_or_else(|| {
            Error::Numerical(format!("all {} restarts failed at depth {p}", cfg.restarts))
        })?;

        let thetas = AnsatzParams::from_flat(&best.thetas)?;
        let fidelity = self.fidelity(&thetas)?.clamp(0.0, 1.0);
        Ok(VqeRun {
            params: *self.params(),
            fock_cutoff: self.hamiltonians.cfg.fock_cutoff(),
            depth: p,
            best_thetas: thetas,
            best_energy: best.energy + self.reference_energy,
            exact_energy: self.ground.energy,
            fidelity,
            infidelity: 1.0 - fidelity,
            energy_history: best.history,
            seed: cfg.seed,
            best_restart,
            iterations: best.iterations,
            termination: best.termination,
            restart_failures: failures,
            wall_time_secs: start.elapsed().as_secs_f64(),
        })
    }

    /// Optimizes depths `1..=p_max`, each warm-started from the previous one.
    pub fn depth_sweep(&self, p_max: usize, cfg: &OptimizerConfig) -> Result<Vec<VqeRun>> {
        if p_max < 1 {
            return Err(Error::InvalidParameter("p_max must be at least 1".into()));
        }
        let mut runs: Vec<VqeRun> = Vec::with_capacity(p_max);
        for p in 1..=p_max {
            let warm = runs.last().map(|r| r.best_thetas.clone());
            runs.push(self.optimize_depth(p, cfg, warm.as_ref())?);
        }
        Ok(runs)
    }
}

/// Convenience wrapper: build the problem and sweep depths.
pub fn depth_sweep(params: &RabiParams, hilbert: &HilbertConfig, p_max: usize, cfg: &OptimizerConfig) -> Result<Vec<VqeRun>> {
    VqeProblem::new(params, hilbert)?.depth_sweep(p_max, cfg)
}

fn restart_start(base: &[f64], restart: usize, p: usize, cfg: &OptimizerConfig) -> Vec<f64> {
    if restart == 0 {
        return base.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(((p as u64) << 32) | restart as u64);
    base.iter()
        .map(|&v| v + cfg.init_scale * rng.random_range(-1.0..=1.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn problem(omega: f64, g: f64, n: usize) -> VqeProblem {
        VqeProblem::new(&RabiParams::from_g(0.1, omega, g).unwrap(), &HilbertConfig::new(n).unwrap()).unwrap()
    }

    fn random_thetas(depth: usize, seed: u64) -> AnsatzParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AnsatzParams::from_flat(&(0..3 * depth).map(|_| rng.random_range(-1.5..1.5)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn cost_at_zero_angles_is_initial_energy() {
        let prob = problem(64.0, 1.0, 60);
        for p in [0, 1, 5] {
            let c = cost(&prob.compiled, &prob.hamiltonians.full, &AnsatzParams::zeros(p)).unwrap();
            assert_abs_diff_eq!(c, -32.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn cost_respects_variational_bound() {
        let prob = problem(16.0, 1.0, 40);
        for seed in 0..100 {
            let c = prob.cost(&random_thetas(3, seed)).unwrap();
            assert!(c >= prob.ground.energy - 1e-9);
        }
    }

    #[test]
    fn gradient_vanishes_along_spin_phase_at_origin() {
        let prob = problem(64.0, 1.0, 30);
        let g = gradient(&prob.compiled, &prob.hamiltonians.full, &AnsatzParams::zeros(2), 1e-6).unwrap();
        assert!(g[0].abs() < 1e-6);
    }

    #[test]
    fn finite_difference_step_robustness() {
        let prob = problem(8.0, 1.0, 30);
        let thetas = random_thetas(2, 42);
        let h = &prob.hamiltonians.full;
        let g5 = gradient(&prob.compiled, h, &thetas, 1e-5).unwrap();
        let g6 = gradient(&prob.compiled, h, &thetas, 1e-6).unwrap();
        for (a, b) in g5.iter().zip(&g6) {
            assert!((a - b).abs() <= 1e-4 * a.abs().max(b.abs()).max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn directional_derivative_consistent() {
        let prob = problem(8.0, 1.0, 30);
        let thetas = random_thetas(2, 7);
        let h = &prob.hamiltonians.full;
        let grad = gradient(&prob.compiled, h, &thetas, 1e-6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut u: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        u.iter_mut().for_each(|v| *v /= n);
        let step = 1e-6;
        let flat = thetas.to_flat();
        let shift = |s: f64| AnsatzParams::from_flat(&flat.iter().zip(&u).map(|(t, d)| t + s * d).collect::<Vec<_>>()).unwrap();
        let fd = (prob.cost(&shift(step)).unwrap() - prob.cost(&shift(-step)).unwrap()) / (2.0 * step);
        let projected: f64 = grad.iter().zip(&u).map(|(g, d)| g * d).sum();
        assert_abs_diff_eq!(projected, fd, epsilon = 1e-6);
    }

    #[test]
    fn central_and_four_point_stencils_agree() {
        let prob = problem(16.0, 1.0, 40);
        let h = &prob.hamiltonians.full;
        for seed in 0..4 {
            let thetas = random_thetas(3, seed);
            let g2 = gradient(&prob.compiled, h, &thetas, 1e-6).unwrap();
            let g4 = gradient_four_point(&prob.compiled, h, &thetas, 1e-3).unwrap();
            let (_, adjoint) = prob.compiled.energy_and_gradient(h, &thetas, &prob.psi0).unwrap();
            for ((a, b), c) in g2.iter().zip(&g4).zip(&adjoint) {
                assert!((a - b).abs() <= 1e-5, "{a} vs {b}");
                assert!((a - c).abs() <= 1e-5, "{a} vs {c}");
            }
        }
        assert!(gradient(&prob.compiled, h, &random_thetas(1, 0), 0.0).is_err());
    }

    #[test]
    fn decoupled_limit_is_already_optimal() {
        let prob = VqeProblem::new(&RabiParams::new(0.1, 64.0, 0.0).unwrap(), &HilbertConfig::new(20).unwrap()).unwrap();
        let run = prob.optimize_depth(1, &OptimizerConfig::default(), None).unwrap();
        assert_abs_diff_eq!(run.best_energy, -32.0, epsilon = 1e-12);
        assert_abs_diff_eq!(run.fidelity, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn warm_start_depth_checked() {
        let prob = problem(4.0, 1.0, 20);
        let cfg = OptimizerConfig::default();
        assert!(prob.optimize_depth(3, &cfg, Some(&AnsatzParams::zeros(1))).is_err());
        assert!(prob.optimize_depth(0, &cfg, None).is_err());
        let bad = OptimizerConfig { restarts: 0, ..cfg };
        assert!(prob.optimize_depth(1, &bad, None).is_err());
    }

    #[test]
    fn sweep_energy_non_increasing_and_deterministic() {
        let prob = problem(4.0, 1.0, 60);
        let cfg = OptimizerConfig {
            restarts: 3,
            ..Default::default()
        };
        let runs = prob.depth_sweep(8, &cfg).unwrap();
        for pair in runs.windows(2) {
            assert!(pair[1].best_energy <= pair[0].best_energy + 1e-12);
        }
        for r in &runs {
            assert!(r.best_energy >= r.exact_energy - 1e-9);
            assert!((0.0..=1.0).contains(&r.fidelity));
        }
        let again = prob.depth_sweep(8, &cfg).unwrap();
        for (a, b) in runs.iter().zip(&again) {
            assert_eq!(a.energy_history, b.energy_history);
            assert_eq!(a.best_thetas, b.best_thetas);
        }
    }
}
