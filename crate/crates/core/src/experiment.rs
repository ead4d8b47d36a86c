//! Experiment orchestration: configuration, ground-truth export, single VQE
//! runs, depth sweeps over several Ω, and the files they produce.
//!
//! Every CSV starts with `# config_hash: …` and `# seed: …` comment lines;
//! every JSON document carries the same information in a `header` object.
//! Files are written to a temporary sibling and renamed into place.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::analysis::{
    block_trace_report, fock_distribution, powerlaw_fit, quadrature_stats, uniform_axis, wigner, BlockReport,
    PowerLawFit, QuadratureStats, WignerGrid,
};
use crate::ansatz::{initial_state, CompiledAnsatz};
use crate::error::{Error, Result};
use crate::hilbert::{partial_trace_spin, HilbertConfig, HybridState};
use crate::model::{build_hamiltonians, exact_ground_state, RabiParams};
use crate::vqe::{OptimizerConfig, VqeProblem, VqeRun};

pub const OUTPUT_ENV: &str = "RABI_VQE_OUT";
pub const DEFAULT_OUTPUT_DIR: &str = "rabi-vqe-out";

/// Tolerance for the parity and norm checks applied to every produced state.
pub const INVARIANT_TOL: f64 = 1e-10;

/// Square phase-space grid, `points` samples on `[min, max]` along both axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerGridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for WignerGridSpec {
    fn default() -> Self {
        Self {
            min: -8.0,
            max: 8.0,
            points: 161,
        }
    }
}

impl WignerGridSpec {
    pub fn axis(&self) -> Result<Vec<f64>> {
        uniform_axis(self.min, self.max, self.points)
    }
}

/// Parses `"min:max:points"`.
impl FromStr for WignerGridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Config(format!("wigner grid must look like qmin:qmax:npts, got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let spec = Self {
            min: parts[0].trim().parse().map_err(|_| bad())?,
            max: parts[1].trim().parse().map_err(|_| bad())?,
            points: parts[2].trim().parse().map_err(|_| bad())?,
        };
        spec.axis().map_err(|e| Error::Config(e.to_string()))?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub omega0: f64,
    pub omega_list: Vec<f64>,
    /// Dimensionless coupling. At most one of `g` and `lambda` may be set;
    /// with neither, `g = 1`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub fock_cutoff: usize,
    pub p_max: usize,
    /// Not part of the config hash.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism. Not part of the
    /// config hash.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    pub optimizer: OptimizerConfig,
    pub wigner_grid: WignerGridSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            omega0: 0.1,
            omega_list: vec![4.0, 8.0, 16.0, 32.0, 64.0],
            g: None,
            lambda: None,
            fock_cutoff: 60,
            p_max: 12,
            output_dir: None,
            jobs: None,
            optimizer: OptimizerConfig::default(),
            wigner_grid: WignerGridSpec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let config = |msg: String| Err(Error::Config(msg));
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return config(format!("omega0 must be positive, got {}", self.omega0));
        }
        if self.omega_list.is_empty() {
            return config("omega_list is empty".into());
        }
        if let Some(bad) = self.omega_list.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return config(format!("Omega values must be positive, got {bad}"));
        }
        if self.g.is_some() && self.lambda.is_some() {
            return config("specify at most one of g and lambda".into());
        }
        if self.fock_cutoff < 1 {
            return config("fock_cutoff must be at least 1".into());
        }
        if self.p_max < 1 {
            return config("p_max must be at least 1".into());
        }
        if self.jobs == Some(0) {
            return config("jobs must be at least 1".into());
        }
        self.optimizer.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.wigner_grid.axis().map_err(|e| Error::Config(e.to_string()))?;
        for &omega in &self.omega_list {
            self.params_for(omega).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn params_for(&self, omega: f64) -> Result<RabiParams> {
        match self.lambda {
            Some(lambda) => RabiParams::new(self.omega0, omega, lambda),
            None => RabiParams::from_g(self.omega0, omega, self.g.unwrap_or(1.0)),
        }
    }

    pub fn hilbert(&self) -> Result<HilbertConfig> {
        HilbertConfig::new(self.fock_cutoff)
    }

    /// Output directory: the configured one, else `$RABI_VQE_OUT`, else
    /// [`DEFAULT_OUTPUT_DIR`].
    pub fn resolved_output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }

    /// SHA-256 of the canonical JSON form, ignoring where results go and how
    /// many threads produce them.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        canonical.jobs = None;
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn header(&self) -> Header {
        Header {
            config_hash: self.hash(),
            seed: self.optimizer.seed,
        }
    }

    fn with_pool<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        match self.jobs {
            None => Ok(f()),
            Some(jobs) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(jobs)
                    .build()
                    .map_err(|e| Error::Config(format!("cannot start {jobs} workers: {e}")))?;
                Ok(pool.install(f))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub config_hash: String,
    pub seed: u64,
}

impl Header {
    fn csv_preamble(&self) -> String {
        format!("# config_hash: {}\n# seed: {}\n", self.config_hash, self.seed)
    }
}

// ---------------------------------------------------------------------------
// Ground truth

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRow {
    pub omega0: f64,
    #[serde(rename = "Omega")]
    pub omega: f64,
    pub lambda: f64,
    pub g: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub ground_energy: f64,
    pub dq: f64,
    pub dp: f64,
    pub product: f64,
    pub parity: f64,
    pub fock_file: String,
}

/// Exact ground state observables for one Ω.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub row: GroundTruthRow,
    pub fock: Vec<f64>,
    pub state: HybridState,
}

pub fn ground_truth(cfg: &ExperimentConfig) -> Result<Vec<GroundTruth>> {
    cfg.validate()?;
    let hilbert = cfg.hilbert()?;
    cfg.with_pool(|| {
        cfg.omega_list
            .par_iter()
            .map(|&omega| {
                let params = cfg.params_for(omega)?;
                let hs = build_hamiltonians(&params, &hilbert)?;
                let ground = exact_ground_state(&hs.full, &hs.parity)?;
                let rho = partial_trace_spin(&ground.state)?;
                let stats = quadrature_stats(&rho, &hs.boson.q, &hs.boson.p)?;
                Ok(GroundTruth {
                    row: GroundTruthRow {
                        omega0: params.omega0,
                        omega,
                        lambda: params.lambda,
                        g: params.g(),
                        n: cfg.fock_cutoff,
                        ground_energy: ground.energy,
                        dq: stats.dq,
                        dp: stats.dp,
                        product: stats.product,
                        parity: ground.parity,
                        fock_file: format!("fock_ground_Omega{omega}.csv"),
                    },
                    fock: fock_distribution(&rho),
                    state: ground.state,
                })
            })
            .collect()
    })?
}

/// Writes `ground_truth.csv` and one `fock_ground_Omega*.csv` per Ω.
pub fn cmd_ground_truth(cfg: &ExperimentConfig) -> Result<Vec<GroundTruth>> {
    let truths = ground_truth(cfg)?;
    let dir = prepare_dir(cfg)?;
    let header = cfg.header();
    let rows: Vec<&GroundTruthRow> = truths.iter().map(|t| &t.row).collect();
    write_atomic(&dir.join("ground_truth.csv"), &csv_rows(&header, &rows)?)?;
    for t in &truths {
        write_atomic(&dir.join(&t.row.fock_file), &fock_csv(&header, &t.fock)?)?;
    }
    Ok(truths)
}

// ---------------------------------------------------------------------------
// Single run

/// Final depth-`p` run of a warm-started chain, with per-block observables.
#[derive(Debug, Clone)]
pub struct VqeOutput {
    pub run: VqeRun,
    pub blocks: Vec<BlockReport>,
}

/// Optimizes depths `1..=depth` at one Ω, warm starting each from the last,
/// and traces the final circuit block by block.
pub fn run_vqe(cfg: &ExperimentConfig, omega: f64, depth: usize, capture_wigner: bool) -> Result<VqeOutput> {
    cfg.validate()?;
    if depth < 1 {
        return Err(Error::Config("depth must be at least 1".into()));
    }
    let problem = VqeProblem::new(&cfg.params_for(omega)?, &cfg.hilbert()?)?;
    let runs = cfg.with_pool(|| problem.depth_sweep(depth, &cfg.optimizer))??;
    let run = runs.into_iter().next_back().expect("depth ≥ 1");
    let axis = if capture_wigner { Some(cfg.wigner_grid.axis()?) } else { None };
    let states = problem.block_states(&run.best_thetas)?;
    let hs = &problem.hamiltonians;
    let blocks = block_trace_report(&states, &hs.boson, &hs.parity, axis.as_ref().map(|a| (&a[..], &a[..])))?;
    for b in &blocks {
        check_invariants(b.parity, b.norm, &format!("Omega={omega}, block {}", b.block))?;
    }
    Ok(VqeOutput { run, blocks })
}

/// Runs [`run_vqe`] and writes the run JSON, the block trace CSV and, when
/// `capture_wigner` is set, one Wigner grid per block. A failed optimization
/// still produces the JSON, with the reason in an `error` field.
pub fn cmd_vqe(cfg: &ExperimentConfig, omega: f64, depth: usize, capture_wigner: bool) -> Result<VqeOutput> {
    let result = run_vqe(cfg, omega, depth, capture_wigner);
    let dir = prepare_dir(cfg)?;
    let header = cfg.header();
    let stem = format!("Omega{omega}_p{depth}");
    let json = match &result {
        Ok(out) => serde_json::json!({ "header": header, "run": out.run }),
        Err(e) => serde_json::json!({ "header": header, "error": e.to_string() }),
    };
    write_atomic(&dir.join(format!("vqe_{stem}.json")), &to_json_bytes(&json)?)?;
    let out = result?;
    write_atomic(&dir.join(format!("blocks_{stem}.csv")), &blocks_csv(&header, &out.blocks)?)?;
    for b in &out.blocks {
        if let Some(grid) = &b.wigner {
            write_atomic(&dir.join(format!("wigner_{stem}_block{}.csv", b.block)), &wigner_csv(&header, grid)?)?;
        }
    }
    Ok(out)
}

/// Recomputes the Wigner grid of a stored run's final state, or of the state
/// after `block` (0 is the input state), and writes it next to the run file.
pub fn cmd_wigner(cfg: &ExperimentConfig, run_path: &Path, block: Option<usize>) -> Result<PathBuf> {
    let text = std::fs::read_to_string(run_path).map_err(|e| Error::io(run_path, e))?;
    let doc: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::io(run_path, e))?;
    let run: VqeRun = doc
        .get("run")
        .cloned()
        .ok_or_else(|| Error::Config(format!("{} holds no completed run", run_path.display())))
        .and_then(|v| serde_json::from_value(v).map_err(|e| Error::io(run_path, e)))?;
    let hilbert = HilbertConfig::new(run.fock_cutoff)?;
    let compiled = CompiledAnsatz::new(&hilbert)?;
    let psi0 = initial_state(&hilbert);
    let state = match block {
        None => compiled.apply(&run.best_thetas, &psi0, false)?.final_state,
        Some(0) => psi0,
        Some(j) if j <= run.depth => compiled
            .apply(&run.best_thetas, &psi0, true)?
            .blocks
            .and_then(|mut b| (j <= b.len()).then(|| b.swap_remove(j - 1)))
            .expect("captured blocks"),
        Some(j) => {
            return Err(Error::Config(format!("block {j} out of range for a depth-{} run", run.depth)));
        }
    };
    let axis = cfg.wigner_grid.axis()?;
    let grid = wigner(&partial_trace_spin(&state)?, &axis, &axis)?;
    let stem = run_path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    let name = match block {
        Some(j) => format!("wigner_{stem}_block{j}.csv"),
        None => format!("wigner_{stem}.csv"),
    };
    let dir = prepare_dir(cfg)?;
    let path = dir.join(name);
    write_atomic(&path, &wigner_csv(&cfg.header(), &grid)?)?;
    Ok(path)
}

// ---------------------------------------------------------------------------
// Sweep

/// Final-state observables of one optimized depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthPoint {
    pub depth: usize,
    pub energy: f64,
    pub infidelity: f64,
    pub dq: f64,
    pub dp: f64,
    pub product: f64,
    pub parity: f64,
    pub norm: f64,
}

#[derive(Debug, Clone)]
pub struct OmegaSweep {
    pub omega: f64,
    pub params: RabiParams,
    pub exact_energy: f64,
    pub exact: QuadratureStats,
    pub exact_fock: Vec<f64>,
    pub points: Vec<DepthPoint>,
    pub runs: Vec<VqeRun>,
    /// Set when the sweep stopped before `p_max`.
    pub failure: Option<String>,
}

impl OmegaSweep {
    /// Smallest depth whose infidelity is at most `threshold`.
    pub fn threshold_depth(&self, threshold: f64) -> Option<usize> {
        self.points.iter().find(|p| p.infidelity <= threshold).map(|p| p.depth)
    }

    pub fn final_point(&self) -> Option<&DepthPoint> {
        self.points.last()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdDepth {
    #[serde(rename = "Omega")]
    pub omega: f64,
    pub infidelity_1e6: Option<usize>,
    pub infidelity_1e8: Option<usize>,
}

/// Power-law fits `ln y = slope ln Ω + intercept`; `None` with fewer than
/// three usable points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub vqe_dq: Option<PowerLawFit>,
    pub vqe_dp: Option<PowerLawFit>,
    pub exact_dq: Option<PowerLawFit>,
    pub exact_dp: Option<PowerLawFit>,
    pub threshold_depths: Vec<ThresholdDepth>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    #[serde(rename = "Omega")]
    pub omega: f64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub header: Header,
    pub sweeps: Vec<OmegaSweep>,
    pub fits: FitSummary,
    pub failures: Vec<SweepFailure>,
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let hilbert = cfg.hilbert()?;
    let results: Vec<Result<OmegaSweep>> = cfg.with_pool(|| {
        cfg.omega_list
            .par_iter()
            .map(|&omega| sweep_one(cfg, &hilbert, omega))
            .collect()
    })?;

    let mut sweeps = Vec::new();
    let mut failures = Vec::new();
    for (&omega, result) in cfg.omega_list.iter().zip(results) {
        match result {
            Ok(s) => {
                if let Some(reason) = &s.failure {
                    failures.push(SweepFailure {
                        omega,
                        reason: reason.clone(),
                    });
                }
                sweeps.push(s);
            }
            Err(e) => failures.push(SweepFailure {
                omega,
                reason: e.to_string(),
            }),
        }
    }
    let fits = fit_summary(&sweeps);
    Ok(SweepReport {
        header: cfg.header(),
        sweeps,
        fits,
        failures,
    })
}

fn sweep_one(cfg: &ExperimentConfig, hilbert: &HilbertConfig, omega: f64) -> Result<OmegaSweep> {
    let params = cfg.params_for(omega)?;
    let problem = VqeProblem::new(&params, hilbert)?;
    let hs = &problem.hamiltonians;
    let exact_rho = partial_trace_spin(&problem.ground.state)?;
    let mut sweep = OmegaSweep {
        omega,
        params,
        exact_energy: problem.ground.energy,
        exact: quadrature_stats(&exact_rho, &hs.boson.q, &hs.boson.p)?,
        exact_fock: fock_distribution(&exact_rho),
        points: Vec::new(),
        runs: Vec::new(),
        failure: None,
    };
    for p in 1..=cfg.p_max {
        let warm = sweep.runs.last().map(|r| r.best_thetas.clone());
        let point = problem.optimize_depth(p, &cfg.optimizer, warm.as_ref()).and_then(|run| {
            let state = problem.state(&run.best_thetas)?;
            let stats = quadrature_stats(&partial_trace_spin(&state)?, &hs.boson.q, &hs.boson.p)?;
            let point = DepthPoint {
                depth: p,
                energy: run.best_energy,
                infidelity: run.infidelity,
                dq: stats.dq,
                dp: stats.dp,
                product: stats.product,
                parity: hs.parity.expectation(&state)?.re,
                norm: state.norm(),
            };
            check_invariants(point.parity, point.norm, &format!("Omega={omega}, p={p}"))?;
            Ok((run, point))
        });
        match point {
            Ok((run, point)) => {
                sweep.runs.push(run);
                sweep.points.push(point);
            }
            Err(e) => {
                sweep.failure = Some(format!("stopped at p={p}: {e}"));
                break;
            }
        }
    }
    Ok(sweep)
}

fn fit_summary(sweeps: &[OmegaSweep]) -> FitSummary {
    let fit = |pick: &dyn Fn(&OmegaSweep) -> Option<f64>| -> Option<PowerLawFit> {
        let (x, y): (Vec<f64>, Vec<f64>) = sweeps.iter().filter_map(|s| Some((s.omega, pick(s)?))).unzip();
        powerlaw_fit(&x, &y).ok()
    };
    FitSummary {
        vqe_dq: fit(&|s| s.final_point().map(|p| p.dq)),
        vqe_dp: fit(&|s| s.final_point().map(|p| p.dp)),
        exact_dq: fit(&|s| Some(s.exact.dq)),
        exact_dp: fit(&|s| Some(s.exact.dp)),
        threshold_depths: sweeps
            .iter()
            .map(|s| ThresholdDepth {
                omega: s.omega,
                infidelity_1e6: s.threshold_depth(1e-6),
                infidelity_1e8: s.threshold_depth(1e-8),
            })
            .collect(),
    }
}

#[derive(Serialize)]
struct FidelityRow {
    #[serde(rename = "Omega")]
    omega: f64,
    p: usize,
    energy: f64,
    infidelity: f64,
}

#[derive(Serialize)]
struct SqueezingRow {
    #[serde(rename = "Omega")]
    omega: f64,
    p: usize,
    dq: f64,
    dp: f64,
    product: f64,
}

#[derive(Serialize)]
struct ScalingRow {
    #[serde(rename = "Omega")]
    omega: f64,
    dq: f64,
    dp: f64,
    infidelity: f64,
    exact_dq: f64,
    exact_dp: f64,
}

/// Names of the files written by [`write_sweep`].
pub const SWEEP_FILES: [&str; 5] = [
    "fidelity_depth.csv",
    "squeezing_depth.csv",
    "scaling.csv",
    "fits.json",
    "schema.json",
];

pub fn write_sweep(report: &SweepReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let header = &report.header;
    let mut fidelity = Vec::new();
    let mut squeezing = Vec::new();
    let mut scaling = Vec::new();
    for s in &report.sweeps {
        for p in &s.points {
            fidelity.push(FidelityRow {
                omega: s.omega,
                p: p.depth,
                energy: p.energy,
                infidelity: p.infidelity,
            });
            squeezing.push(SqueezingRow {
                omega: s.omega,
                p: p.depth,
                dq: p.dq,
                dp: p.dp,
                product: p.product,
            });
        }
        if let Some(last) = s.final_point() {
            scaling.push(ScalingRow {
                omega: s.omega,
                dq: last.dq,
                dp: last.dp,
                infidelity: last.infidelity,
                exact_dq: s.exact.dq,
                exact_dp: s.exact.dp,
            });
        }
    }
    write_atomic(&dir.join(SWEEP_FILES[0]), &csv_rows(header, &fidelity)?)?;
    write_atomic(&dir.join(SWEEP_FILES[1]), &csv_rows(header, &squeezing)?)?;
    write_atomic(&dir.join(SWEEP_FILES[2]), &csv_rows(header, &scaling)?)?;
    let fits = serde_json::json!({
        "header": header,
        "fits": report.fits,
        "failures": report.failures,
    });
    write_atomic(&dir.join(SWEEP_FILES[3]), &to_json_bytes(&fits)?)?;
    write_atomic(&dir.join(SWEEP_FILES[4]), &to_json_bytes(&schema())?)?;
    Ok(())
}

pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    let report = run_sweep(cfg)?;
    write_sweep(&report, &prepare_dir(cfg)?)?;
    Ok(report)
}

/// Column documentation for every tabular output.
pub fn schema() -> serde_json::Value {
    serde_json::json!({
        "comment_lines": "CSV files begin with '# config_hash: <sha256>' and '# seed: <u64>'",
        "ground_truth.csv": {
            "omega0": "cavity frequency", "Omega": "atomic frequency", "lambda": "coupling",
            "g": "2 lambda / sqrt(omega0 Omega)", "N": "Fock cutoff",
            "ground_energy": "exact ground energy", "dq": "position spread of the boson state",
            "dp": "momentum spread", "product": "dq * dp", "parity": "<Pi>",
            "fock_file": "file holding the boson Fock distribution"
        },
        "fock_ground_Omega*.csv": { "n": "Fock number", "probability": "P(n)" },
        "blocks_Omega*_p*.csv": {
            "block": "0 = input state, j = after block j", "dq": "position spread", "dp": "momentum spread",
            "product": "dq * dp", "parity": "<Pi>", "P0..PN": "boson Fock distribution"
        },
        "wigner_*.csv": "first row: 'q\\p' then the p axis; each further row: q then W(q, p_0..)",
        "fidelity_depth.csv": {
            "Omega": "atomic frequency", "p": "circuit depth", "energy": "best variational energy",
            "infidelity": "1 - |<exact|psi_p>|^2"
        },
        "squeezing_depth.csv": {
            "Omega": "atomic frequency", "p": "circuit depth", "dq": "position spread of the optimized state",
            "dp": "momentum spread", "product": "dq * dp"
        },
        "scaling.csv": {
            "Omega": "atomic frequency", "dq": "position spread at the deepest circuit", "dp": "momentum spread",
            "infidelity": "infidelity at the deepest circuit", "exact_dq": "exact ground state dq",
            "exact_dp": "exact ground state dp"
        },
        "fits.json": "power-law fits ln y = slope ln Omega + intercept, threshold depths, per-Omega failures"
    })
}

// ---------------------------------------------------------------------------
// Files

fn check_invariants(parity: f64, norm: f64, context: &str) -> Result<()> {
    if (parity + 1.0).abs() > INVARIANT_TOL || (norm - 1.0).abs() > INVARIANT_TOL {
        return Err(Error::Numerical(format!(
            "{context}: parity {parity} and norm {norm} violate the symmetry sector"
        )));
    }
    Ok(())
}

fn prepare_dir(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = cfg.resolved_output_dir();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn csv_rows<T: Serialize>(header: &Header, rows: &[T]) -> Result<Vec<u8>> {
    let mut buf = header.csv_preamble().into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for row in rows {
            w.serialize(row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<csv>".into(),
            message: e.to_string(),
        })?;
    }
    Ok(buf)
}

fn csv_records(header: &Header, records: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut buf = header.csv_preamble().into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for rec in records {
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<csv>".into(),
            message: e.to_string(),
        })?;
    }
    Ok(buf)
}

fn fock_csv(header: &Header, fock: &[f64]) -> Result<Vec<u8>> {
    let rows = std::iter::once(vec!["n".to_string(), "probability".to_string()])
        .chain(fock.iter().enumerate().map(|(n, p)| vec![n.to_string(), p.to_string()]));
    csv_records(header, rows)
}

fn blocks_csv(header: &Header, blocks: &[BlockReport]) -> Result<Vec<u8>> {
    let n_fock = blocks.first().map_or(0, |b| b.fock.len());
    let mut head: Vec<String> = ["block", "dq", "dp", "product", "parity"].map(String::from).to_vec();
    head.extend((0..n_fock).map(|n| format!("P{n}")));
    let rows = blocks.iter().map(|b| {
        let mut rec = vec![
            b.block.to_string(),
            b.quadratures.dq.to_string(),
            b.quadratures.dp.to_string(),
            b.quadratures.product.to_string(),
            b.parity.to_string(),
        ];
        rec.extend(b.fock.iter().map(|p| p.to_string()));
        rec
    });
    csv_records(header, std::iter::once(head).chain(rows))
}

fn wigner_csv(header: &Header, grid: &WignerGrid) -> Result<Vec<u8>> {
    let head = std::iter::once("q\\p".to_string()).chain(grid.p_axis.iter().map(|p| p.to_string()));
    let rows = grid.q_axis.iter().enumerate().map(|(i, q)| {
        std::iter::once(q.to_string())
            .chain((0..grid.p_axis.len()).map(|j| grid.values[(i, j)].to_string()))
            .collect()
    });
    csv_records(header, std::iter::once(head.collect()).chain(rows))
}

fn to_json_bytes(value: &serde_json::Value) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Numerical(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io {
        path: "<csv>".into(),
        message: e.to_string(),
    }
}
