mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Config;

#[derive(Parser, Debug)]
#[command(name = "nlslab", version, about = "Ground states and dynamics of NLS with a partial harmonic trap")]
struct Cli {
    /// Flat `key = value` file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads; 0 lets the pool decide.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print the merged configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct GridArgs {
    /// Nodes per axis, `n1,n2,n3`.
    #[arg(long)]
    grid: Option<String>,
    /// Box lengths, `L1,L2,L3`.
    #[arg(long = "box")]
    box_len: Option<String>,
}

#[derive(Args, Debug, Default)]
struct SolveArgs {
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    chi: Option<f64>,
    /// Preconditioner step.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// gaussian, gaussian-complex-phase, random-smooth or file:PATH.
    #[arg(long)]
    init: Option<String>,
    /// plain or conjugate.
    #[arg(long)]
    method: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Transverse oscillator eigenvalues as CSV.
    Spectrum {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        cutoff: Option<usize>,
    },
    /// One constrained minimization.
    Groundstate {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long)]
        r: Option<f64>,
        /// Field file for the minimizer.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimizers over a list of mass radii with fitted rates.
    Sweep {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        solve: SolveArgs,
        /// Strictly increasing, comma separated.
        #[arg(long)]
        r_list: Option<String>,
        #[arg(long)]
        cutoff: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Strang-split real-time evolution of a field file.
    Evolve {
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_final: Option<f64>,
        /// Relative H-norm size of a seeded smooth perturbation.
        #[arg(long)]
        perturb: Option<f64>,
        #[arg(long)]
        sample_every: Option<usize>,
        /// Drop the trap (diagnostic mode outside the trapped setting).
        #[arg(long)]
        no_trap: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The claim battery on a field file, or on a fresh solve without `--in`.
    Verify {
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        gn_corpus: Option<usize>,
        #[arg(long)]
        rearrange_corpus: Option<usize>,
        #[arg(long)]
        stability_t: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Schwarz rearrangement of a field file with the inequality checks.
    Rearrange {
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        checks: Option<PathBuf>,
    },
}

fn s<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(ToString::to_string)
}

fn path(v: &Option<PathBuf>) -> Option<String> {
    v.as_ref().map(|p| p.display().to_string())
}

impl GridArgs {
    fn pairs(&self) -> Vec<(&'static str, Option<String>)> {
        vec![("grid", self.grid.clone()), ("box", self.box_len.clone())]
    }
}

impl SolveArgs {
    fn pairs(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("p", s(&self.p)),
            ("chi", s(&self.chi)),
            ("dt", s(&self.dt)),
            ("tol", s(&self.tol)),
            ("max-iter", s(&self.max_iter)),
            ("init", self.init.clone()),
            ("method", self.method.clone()),
        ]
    }
}

const GLOBAL_DEFAULTS: &[(&str, &str)] = &[("out-dir", "."), ("jobs", "0"), ("seed", "0")];
const GRID_DEFAULTS: &[(&str, &str)] = &[("grid", "32,32,64"), ("box", "16,16,32")];
const SOLVE_DEFAULTS: &[(&str, &str)] = &[
    ("p", "3"),
    ("chi", "4"),
    ("dt", "1"),
    ("tol", "1e-8"),
    ("max-iter", "5000"),
    ("init", "gaussian"),
    ("method", "conjugate"),
];

impl Command {
    fn defaults(&self) -> Vec<(&'static str, &'static str)> {
        let mut d: Vec<(&str, &str)> = GLOBAL_DEFAULTS.to_vec();
        match self {
            Command::Spectrum { .. } => {
                d.extend_from_slice(GRID_DEFAULTS);
                d.push(("cutoff", "45"));
            }
            Command::Groundstate { .. } => {
                d.extend_from_slice(GRID_DEFAULTS);
                d.extend_from_slice(SOLVE_DEFAULTS);
                d.extend([("r", "0.1"), ("out", "ground_state.nls3")]);
            }
            Command::Sweep { .. } => {
                d.extend_from_slice(GRID_DEFAULTS);
                d.extend_from_slice(SOLVE_DEFAULTS);
                d.extend([("r-list", "0.05,0.1,0.2,0.4"), ("cutoff", "45"), ("out", "sweep.csv")]);
            }
            Command::Evolve { .. } => d.extend([
                ("in", ""),
                ("p", "3"),
                ("dt", "0.01"),
                ("t-final", "20"),
                ("perturb", "0"),
                ("sample-every", "10"),
                ("trap", "true"),
                ("out", "trajectory.csv"),
            ]),
            Command::Verify { .. } => {
                d.extend_from_slice(GRID_DEFAULTS);
                d.extend_from_slice(SOLVE_DEFAULTS);
                d.extend([
                    ("in", ""),
                    ("r", "0.1"),
                    ("gn-corpus", "200"),
                    ("rearrange-corpus", "100"),
                    ("stability-t", "2"),
                    ("out", "claims.csv"),
                ]);
            }
            Command::Rearrange { .. } => d.extend([
                ("in", ""),
                ("p", "3"),
                ("out", "rearranged.nls3"),
                ("checks", "rearrange_checks.csv"),
            ]),
        }
        d
    }

    fn flags(&self) -> Vec<(&'static str, Option<String>)> {
        match self {
            Command::Spectrum { grid, cutoff } => {
                let mut f = grid.pairs();
                f.push(("cutoff", s(cutoff)));
                f
            }
            Command::Groundstate { grid, solve, r, out } => {
                let mut f = grid.pairs();
                f.extend(solve.pairs());
                f.extend([("r", s(r)), ("out", path(out))]);
                f
            }
            Command::Sweep { grid, solve, r_list, cutoff, out } => {
                let mut f = grid.pairs();
                f.extend(solve.pairs());
                f.extend([("r-list", r_list.clone()), ("cutoff", s(cutoff)), ("out", path(out))]);
                f
            }
            Command::Evolve { input, p, dt, t_final, perturb, sample_every, no_trap, out } => vec![
                ("in", path(input)),
                ("p", s(p)),
                ("dt", s(dt)),
                ("t-final", s(t_final)),
                ("perturb", s(perturb)),
                ("sample-every", s(sample_every)),
                ("trap", no_trap.then(|| "false".to_string())),
                ("out", path(out)),
            ],
            Command::Verify { input, grid, solve, r, gn_corpus, rearrange_corpus, stability_t, out } => {
                let mut f = grid.pairs();
                f.extend(solve.pairs());
                f.extend([
                    ("in", path(input)),
                    ("r", s(r)),
                    ("gn-corpus", s(gn_corpus)),
                    ("rearrange-corpus", s(rearrange_corpus)),
                    ("stability-t", s(stability_t)),
                    ("out", path(out)),
                ]);
                f
            }
            Command::Rearrange { input, p, out, checks } => {
                vec![("in", path(input)), ("p", s(p)), ("out", path(out)), ("checks", path(checks))]
            }
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let mut cfg = Config::from_defaults(&cli.command.defaults());
    if let Some(file) = &cli.config {
        cfg.merge_file(file)?;
    }
    cfg.merge_flags(vec![("out-dir", path(&cli.out_dir)), ("jobs", s(&cli.jobs)), ("seed", s(&cli.seed))]);
    cfg.merge_flags(cli.command.flags());
    if cli.print_config {
        print!("{}", cfg.render());
        return Ok(true);
    }
    let jobs: usize = cfg.get("jobs")?;
    if jobs > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    match cli.command {
        Command::Spectrum { .. } => commands::spectrum(&cfg),
        Command::Groundstate { .. } => commands::groundstate(&cfg),
        Command::Sweep { .. } => commands::sweep(&cfg),
        Command::Evolve { .. } => commands::evolve(&cfg),
        Command::Verify { .. } => commands::verify(&cfg),
        Command::Rearrange { .. } => commands::rearrange(&cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
