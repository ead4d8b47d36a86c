//! BFGS with a strong-Wolfe line search.

use crate::error::{Error, Result};

pub trait Objective {
    fn value_and_gradient(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)>;
}

#[derive(Debug, Clone, Copy)]
pub struct BfgsSettings {
    pub max_iterations: usize,
    /// Stop after two consecutive iterations with `|Δf|` below this.
    pub value_tol: f64,
    /// Stop when `‖∇f‖∞` falls below this.
    pub gradient_tol: f64,
}

impl Default for BfgsSettings {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            value_tol: 1e-12,
            gradient_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ValueChange,
    Gradient,
    /// No decrease found even along steepest descent; usually the
    /// floating-point floor of the objective.
    LineSearch,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct BfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    /// Objective at the start point and after every accepted step.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
}

impl BfgsOutcome {
    pub fn converged(&self) -> bool {
        self.termination != Termination::MaxIterations
    }
}

const WOLFE_C1: f64 = 1e-4;
const WOLFE_C2: f64 = 0.9;
const MAX_BRACKET: usize = 30;
const MAX_ZOOM: usize = 40;

pub fn minimize<O: Objective>(objective: &mut O, x0: &[f64], settings: &BfgsSettings) -> Result<BfgsOutcome> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut f, mut g) = objective.value_and_gradient(&x)?;
    check_finite(f, &g, 0)?;
    let mut history = vec![f];
    if n == 0 {
        return Ok(BfgsOutcome {
            x,
            value: f,
            history,
            iterations: 0,
            termination: Termination::Gradient,
        });
    }

    let mut inv_hess = identity(n);
    let mut fresh = true;
    let mut small_steps = 0;
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;

    while iterations < settings.max_iterations {
        if inf_norm(&g) < settings.gradient_tol {
            termination = Termination::Gradient;
            break;
        }
        let mut dir = mat_vec_neg(&inv_hess, &g);
        if !(dot(&g, &dir) < 0.0) {
            inv_hess = identity(n);
            fresh = true;
            dir = g.iter().map(|v| -v).collect();
        }

        let initial_step = if fresh { (1.0 / inf_norm(&g)).min(1.0) } else { 1.0 };
        let step = match line_search(objective, &x, f, &g, &dir, initial_step, iterations)? {
            Some(step) => step,
            None if !fresh => {
                inv_hess = identity(n);
                fresh = true;
                continue;
            }
            None => {
                termination = Termination::LineSearch;
                break;
            }
        };
        iterations += 1;

        let s: Vec<f64> = dir.iter().map(|d| step.t * d).collect();
        let y: Vec<f64> = step.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-14 * norm(&s) * norm(&y) && sy > 0.0 {
            if fresh {
                let scale = sy / dot(&y, &y);
                inv_hess.iter_mut().for_each(|v| *v *= scale);
                fresh = false;
            }
            bfgs_update(&mut inv_hess, &s, &y, sy);
        }

        let decrease = f - step.f;
        x = step.x;
        f = step.f;
        g = step.g;
        history.push(f);

        if decrease.abs() < settings.value_tol {
            small_steps += 1;
            if small_steps >= 2 {
                termination = Termination::ValueChange;
                break;
            }
        } else {
            small_steps = 0;
        }
    }

    Ok(BfgsOutcome {
        x,
        value: f,
        history,
        iterations,
        termination,
    })
}

#[derive(Clone)]
struct Trial {
    t: f64,
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    slope: f64,
}

struct LineProbe<'a, O> {
    objective: &'a mut O,
    x: &'a [f64],
    dir: &'a [f64],
    iteration: usize,
}

impl<O: Objective> LineProbe<'_, O> {
    fn eval(&mut self, t: f64) -> Result<Trial> {
        let x: Vec<f64> = self.x.iter().zip(self.dir).map(|(xi, di)| xi + t * di).collect();
        let (f, g) = self.objective.value_and_gradient(&x)?;
        if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite objective during line search at iteration {}",
                self.iteration
            )));
        }
        let slope = dot(&g, self.dir);
        Ok(Trial { t, x, f, g, slope })
    }
}

/// Strong-Wolfe search (bracket, then zoom with safeguarded cubic
/// interpolation). Falls back to the best sufficient-decrease point seen when
/// the curvature condition cannot be met at floating-point resolution.
fn line_search<O: Objective>(
    objective: &mut O,
    x: &[f64],
    f0: f64,
    g0: &[f64],
    dir: &[f64],
    initial_step: f64,
    iteration: usize,
) -> Result<Option<Trial>> {
    let slope0 = dot(g0, dir);
    let mut probe = LineProbe {
        objective,
        x,
        dir,
        iteration,
    };
    let armijo = |t: f64, f: f64| f <= f0 + WOLFE_C1 * t * slope0 && f < f0;
    let curvature = |slope: f64| slope.abs() <= -WOLFE_C2 * slope0;

    let mut fallback: Option<Trial> = None;
    let keep = |trial: &Trial, fallback: &mut Option<Trial>| {
        if armijo(trial.t, trial.f) && fallback.as_ref().is_none_or(|b| trial.f < b.f) {
            *fallback = Some(trial.clone());
        }
    };

    let mut prev = Trial {
        t: 0.0,
        x: x.to_vec(),
        f: f0,
        g: g0.to_vec(),
        slope: slope0,
    };
    let mut t = initial_step;
    let (mut lo, mut hi) = 'bracket: {
        for i in 0..MAX_BRACKET {
            let trial = probe.eval(t)?;
            keep(&trial, &mut fallback);
            if !armijo(trial.t, trial.f) || (i > 0 && trial.f >= prev.f) {
                break 'bracket (prev, trial);
            }
            if curvature(trial.slope) {
                return Ok(Some(trial));
            }
            if trial.slope >= 0.0 {
                break 'bracket (trial, prev);
            }
            t *= 2.0;
            prev = trial;
        }
        return Ok(fallback);
    };

    for _ in 0..MAX_ZOOM {
        let (a, b) = (lo.t.min(hi.t), lo.t.max(hi.t));
        let width = b - a;
        if width <= 1e-16 * b.max(1.0) {
            break;
        }
        let t = cubic_minimizer(&lo, &hi)
            .filter(|t| t.is_finite())
            .unwrap_or(0.5 * (a + b))
            .clamp(a + 0.1 * width, b - 0.1 * width);
        let trial = probe.eval(t)?;
        keep(&trial, &mut fallback);
        if !armijo(trial.t, trial.f) || trial.f >= lo.f {
            hi = trial;
        } else {
            if curvature(trial.slope) {
                return Ok(Some(trial));
            }
            if trial.slope * (hi.t - lo.t) >= 0.0 {
                hi = lo;
            }
            lo = trial;
        }
    }
    Ok(fallback)
}

/// Minimizer of the cubic matching values and slopes at both ends.
fn cubic_minimizer(a: &Trial, b: &Trial) -> Option<f64> {
    let d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.t - b.t);
    let disc = d1 * d1 - a.slope * b.slope;
    if disc < 0.0 {
        return None;
    }
    let d2 = (b.t - a.t).signum() * disc.sqrt();
    Some(b.t - (b.t - a.t) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2))
}

fn check_finite(f: f64, g: &[f64], iteration: usize) -> Result<()> {
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("non-finite objective at iteration {iteration}")));
    }
    Ok(())
}

fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[i * n + j] * y[j]).sum()).collect();
    let yhy = dot(y, &hy);
    let coef = (1.0 + rho * yhy) * rho;
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += coef * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

fn mat_vec_neg(m: &[f64], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|i| -dot(&m[i * n..(i + 1) * n], v)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rosenbrock {
        evals: usize,
    }

    impl Objective for Rosenbrock {
        fn value_and_gradient(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
            self.evals += 1;
            let f = (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
            let g = vec![
                -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]),
                200.0 * (x[1] - x[0] * x[0]),
            ];
            Ok((f, g))
        }
    }

    struct Quadratic(Vec<f64>);

    impl Objective for Quadratic {
        fn value_and_gradient(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
            let f = x.iter().zip(&self.0).map(|(v, w)| 0.5 * w * v * v).sum();
            Ok((f, x.iter().zip(&self.0).map(|(v, w)| w * v).collect()))
        }
    }

    struct Poisoned;

    impl Objective for Poisoned {
        fn value_and_gradient(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
            if x[0] == 1.0 {
                Ok((1.0, vec![2.0]))
            } else {
                Ok((f64::NAN, vec![f64::NAN]))
            }
        }
    }

    #[test]
    fn solves_rosenbrock() {
        let mut obj = Rosenbrock { evals: 0 };
        let out = minimize(&mut obj, &[-1.2, 1.0], &BfgsSettings::default()).unwrap();
        assert!(out.converged());
        assert!((out.x[0] - 1.0).abs() < 1e-5 && (out.x[1] - 1.0).abs() < 1e-5, "{:?}", out.x);
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn ill_conditioned_quadratic() {
        let weights: Vec<f64> = (0..20).map(|i| 10f64.powf(i as f64 / 5.0)).collect();
        let mut obj = Quadratic(weights);
        let out = minimize(&mut obj, &[1.0; 20], &BfgsSettings::default()).unwrap();
        assert!(out.value < 1e-12, "value {}", out.value);
    }

    #[test]
    fn stationary_start_stops_immediately() {
        let mut obj = Quadratic(vec![1.0, 2.0]);
        let out = minimize(&mut obj, &[0.0, 0.0], &BfgsSettings::default()).unwrap();
        assert_eq!(out.termination, Termination::Gradient);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn non_finite_line_search_aborts() {
        let err = minimize(&mut Poisoned, &[1.0], &BfgsSettings::default()).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
    }

    #[test]
    fn respects_iteration_cap() {
        let mut obj = Rosenbrock { evals: 0 };
        let settings = BfgsSettings {
            max_iterations: 3,
            ..Default::default()
        };
        let out = minimize(&mut obj, &[-1.2, 1.0], &settings).unwrap();
        assert_eq!(out.iterations, 3);
        assert_eq!(out.termination, Termination::MaxIterations);
        assert_eq!(out.history.len(), 4);
    }
}
