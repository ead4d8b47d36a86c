use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use rabi_vqe::experiment::{self, ExperimentConfig, WignerGridSpec};
use rabi_vqe::Error;

#[derive(Parser)]
#[command(name = "rabi-vqe", version, about = "Variational ground states of the quantum Rabi model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact diagonalization reference for every Omega in the list.
    GroundTruth(Common),
    /// Optimize one Omega up to a given depth and trace the circuit block by block.
    Vqe {
        #[command(flatten)]
        common: Common,
        /// Write a Wigner grid for every block.
        #[arg(long)]
        capture_blocks: bool,
    },
    /// Depth sweep for every Omega, with scaling fits.
    Sweep(Common),
    /// Wigner grid of a stored run.
    Wigner {
        #[command(flatten)]
        common: Common,
        /// Run JSON written by `vqe`.
        #[arg(long)]
        run: PathBuf,
        /// State after this block (0 = input state); default is the final state.
        #[arg(long)]
        block: Option<usize>,
    },
    /// Print the version.
    Version,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    omega0: Option<f64>,
    /// Single Omega; replaces the configured list.
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long, conflicts_with = "lambda")]
    g: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    cutoff: Option<usize>,
    /// Depth for `vqe`; defaults to p_max.
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    pmax: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    /// "qmin:qmax:npts"
    #[arg(long)]
    wigner_grid: Option<WignerGridSpec>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.omega0 {
            cfg.omega0 = v;
        }
        if let Some(v) = self.omega {
            cfg.omega_list = vec![v];
        }
        if let Some(v) = self.g {
            cfg.g = Some(v);
            cfg.lambda = None;
        }
        if let Some(v) = self.lambda {
            cfg.lambda = Some(v);
            cfg.g = None;
        }
        if let Some(v) = self.cutoff {
            cfg.fock_cutoff = v;
        }
        if let Some(v) = self.pmax {
            cfg.p_max = v;
        }
        if let Some(v) = self.seed {
            cfg.optimizer.seed = v;
        }
        if let Some(v) = self.restarts {
            cfg.optimizer.restarts = v;
        }
        if let Some(v) = &self.out {
            cfg.output_dir = Some(v.clone());
        }
        if let Some(v) = self.jobs {
            cfg.jobs = Some(v);
        }
        if let Some(v) = self.wigner_grid {
            cfg.wigner_grid = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::GroundTruth(common) => {
            let cfg = common.resolve()?;
            for t in experiment::cmd_ground_truth(&cfg)? {
                println!(
                    "Omega={:<6} E0={:.12} dq={:.6} dp={:.6} parity={:+.1}",
                    t.row.omega, t.row.ground_energy, t.row.dq, t.row.dp, t.row.parity
                );
            }
            println!("wrote {}", cfg.resolved_output_dir().display());
        }
        Command::Vqe { common, capture_blocks } => {
            let cfg = common.resolve()?;
            if cfg.omega_list.len() != 1 {
                return Err(Error::Config("vqe needs a single Omega (use --omega)".into()));
            }
            let depth = common.depth.unwrap_or(cfg.p_max);
            let out = experiment::cmd_vqe(&cfg, cfg.omega_list[0], depth, capture_blocks)?;
            println!(
                "p={} E={:.12} E0={:.12} 1-F={:.3e} ({:?} after {} iterations, restart {})",
                out.run.depth,
                out.run.best_energy,
                out.run.exact_energy,
                out.run.infidelity,
                out.run.termination,
                out.run.iterations,
                out.run.best_restart
            );
            println!("wrote {}", cfg.resolved_output_dir().display());
        }
        Command::Sweep(common) => {
            let cfg = common.resolve()?;
            let report = experiment::cmd_sweep(&cfg)?;
            for s in &report.sweeps {
                if let Some(last) = s.final_point() {
                    let p6 = s.threshold_depth(1e-6).map_or("-".into(), |p| p.to_string());
                    println!(
                        "Omega={:<6} p={} 1-F={:.3e} dq={:.5} dp={:.5} p*(1e-6)={p6}",
                        s.omega, last.depth, last.infidelity, last.dq, last.dp
                    );
                }
            }
            for f in &report.failures {
                eprintln!("Omega={}: {}", f.omega, f.reason);
            }
            println!("wrote {}", cfg.resolved_output_dir().display());
        }
        Command::Wigner { common, run, block } => {
            let cfg = common.resolve()?;
            let path = experiment::cmd_wigner(&cfg, &run, block)?;
            println!("wrote {}", path.display());
        }
        Command::Version => println!("rabi-vqe {}", env!("CARGO_PKG_VERSION")),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
