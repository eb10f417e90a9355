//! Command-line laboratory for the regularized degenerate-diffusion
//! experiments: admissibility reports, solves, functional evaluations,
//! refinement sweeps, constant estimation, and radial reference values.

use clap::{Parser, Subcommand, ValueEnum};
use plaplab::config::{self, Benchmark, ExperimentConfig, Format};
use plaplab::{report, sweep, LabError};
use plaplab_core::exponents::{self, ExponentParams};
use plaplab_core::fields::save_scalar_field;
use plaplab_core::oracles::{cz_constant, radial_functional_exact, CzMode, RadialSolution, RadialValue};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "plaplab", about = "numerical laboratory for weighted regularity estimates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration file (key = value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed override for randomized estimators.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread count (0 = all cores).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Output format selection.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Both)]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Both,
}

impl FormatArg {
    fn formats(self) -> Vec<Format> {
        match self {
            FormatArg::Csv => vec![Format::Csv],
            FormatArg::Json => vec![Format::Json],
            FormatArg::Both => vec![Format::Csv, Format::Json],
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the exponent admissibility ledger for the configured bundle.
    Admissible,
    /// Run one solve at the first sweep point; write the field and report.
    Solve,
    /// Evaluate the configured functionals on the first grid only.
    Functionals,
    /// Full refinement sweep with verdicts.
    Sweep,
    /// Estimate (or look up) the second-derivative inequality constant.
    Cz,
    /// Print radial-oracle reference values for the configured functionals.
    Oracle,
}

fn main() {
    let cli = Cli::parse();
    if cli.threads != 1 {
        let threads = if cli.threads == 0 { num_threads() } else { cli.threads };
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .ok();
    }
    match dispatch(&cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn num_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, LabError> {
    let path = cli.config.as_ref().ok_or_else(|| {
        LabError::Config(config::ConfigError::Missing("--config <path>".into()))
    })?;
    let mut cfg = config::load(path)?;
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    } else if let Ok(dir) = std::env::var("PLAPLAB_OUT") {
        cfg.output.dir = PathBuf::from(dir);
    }
    if let Some(seed) = cli.seed {
        cfg.cz.seed = seed;
    }
    cfg.output.formats = cli.format.formats();
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> Result<(), LabError> {
    match cli.command {
        Command::Admissible => {
            let cfg = load_config(cli)?;
            let e = &cfg.exponents;
            let params = ExponentParams {
                p: e.p,
                q: e.q,
                gamma: e.gamma,
                n: e.n,
                cz_constant: e.cz,
                f_has_sign: e.f_has_sign,
            };
            let rep = exponents::report(&params)?;
            println!("{}", serde_json::to_string_pretty(&rep).expect("report serializes"));
            Ok(())
        }
        Command::Solve => {
            let mut cfg = load_config(cli)?;
            cfg.solve.enabled = true;
            let p = cfg.axes.p.first().copied().unwrap_or(2.0);
            let eps = cfg.axes.epsilon.first().copied().unwrap_or(0.0);
            let cells = cfg.axes.cells.first().copied().unwrap_or(64);
            let bundle = sweep::build_field(&cfg, p, eps, cells)?;
            std::fs::create_dir_all(&cfg.output.dir)?;
            save_scalar_field(&cfg.output.dir.join("solution.txt"), &bundle.u, "solution")?;
            if let Some(rep) = &bundle.solve_report {
                std::fs::write(
                    cfg.output.dir.join("solve_report.json"),
                    serde_json::to_string_pretty(rep).expect("report serializes"),
                )?;
            }
            if !bundle.converged {
                return Err(LabError::Solver(plaplab_core::solver::SolverError::Invalid(
                    "solve did not converge within max_iter".into(),
                )));
            }
            println!(
                "converged; residual {:.3e}; outputs in {}",
                bundle.solve_residual.unwrap_or(f64::NAN),
                cfg.output.dir.display()
            );
            Ok(())
        }
        Command::Functionals => {
            let mut cfg = load_config(cli)?;
            cfg.axes.cells.truncate(1);
            let rep = sweep::run(&cfg)?;
            let paths = report::write_all(&rep, &cfg.output.dir.clone(), &cfg.output.formats, "functionals")?;
            print!("{}", report::summary_text(&rep));
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::Sweep => {
            let cfg = load_config(cli)?;
            let rep = sweep::run(&cfg)?;
            let paths = report::write_all(&rep, &cfg.output.dir, &cfg.output.formats, "sweep")?;
            print!("{}", report::summary_text(&rep));
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::Cz => {
            let cfg = load_config(cli)?;
            let mode = if cfg.cz.estimate {
                CzMode::Estimate {
                    cells: cfg.cz.cells,
                    family_size: cfg.cz.family,
                    seed: cfg.cz.seed,
                }
            } else {
                CzMode::Known
            };
            let est = cz_constant(cfg.exponents.n, cfg.cz.q, &mode)?;
            println!(
                "{}",
                serde_json::json!({
                    "q": cfg.cz.q,
                    "n": cfg.exponents.n,
                    "value": est.value,
                    "exact": est.exact,
                    "seed": est.seed,
                    "ratios": est.ratios,
                })
            );
            Ok(())
        }
        Command::Oracle => {
            let cfg = load_config(cli)?;
            let (n, scale) = match cfg.benchmark {
                Benchmark::Radial { n, scale } => (n, scale),
                _ => {
                    return Err(LabError::Config(config::ConfigError::Invalid(
                        "oracle values need a radial benchmark".into(),
                    )))
                }
            };
            let p = cfg.axes.p.first().copied().unwrap_or(1.5);
            let eps = cfg.axes.epsilon.first().copied().unwrap_or(0.0);
            let (r0, r1) = cfg.window.unwrap_or((0.1, 0.4));
            let sol = RadialSolution::new(p, n, scale);
            let mut rows = Vec::new();
            for spec in &cfg.functionals {
                let mut params = spec.params.clone();
                params.entry("p".into()).or_insert(p);
                params.entry("epsilon".into()).or_insert(eps);
                for name in spec.kind.required_params() {
                    let axis = match *name {
                        "alpha" => cfg.axes.alpha.first(),
                        "gamma" => cfg.axes.gamma.first(),
                        "alpha_tilde" => cfg.axes.alpha_tilde.first(),
                        "k" => cfg.axes.k.first(),
                        _ => None,
                    };
                    if let Some(&v) = axis {
                        params.entry(name.to_string()).or_insert(v);
                    }
                }
                let Some(kind) = sweep::to_radial_kind(spec.kind, &params) else {
                    continue;
                };
                let value = radial_functional_exact(&kind, &sol, r0, r1)?;
                rows.push(match value {
                    RadialValue::Finite(v) => {
                        serde_json::json!({"kind": spec.kind.name(), "value": v})
                    }
                    RadialValue::Divergent => {
                        serde_json::json!({"kind": spec.kind.name(), "value": "divergent"})
                    }
                });
            }
            println!("{}", serde_json::Value::Array(rows));
            Ok(())
        }
    }
}
