use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cobranet::cli::{
    self, DualConfig, DualTarget, Fig3Config, Fig3Scale, SimulateConfig, TreeConfig,
    VerifyDualityConfig,
};
use cobranet::degree::DegreeProfile;

/// Simulator and analytics for biased opinion dynamics on directed
/// configuration-model graphs, with a dual branching/coalescing/dying
/// particle system.
#[derive(Parser)]
#[command(name = "cobranet", version, about)]
struct Cli {
    /// Base seed for all randomized commands (64-bit).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; falls back to COBRANET_THREADS, then all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the closed-form predictions for a profile as JSON.
    Theory {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 2)]
        s: u8,
    },
    /// Run the forward opinion dynamics and write density trajectories.
    Simulate {
        #[arg(long)]
        profile: PathBuf,
        /// Expected vertex count; must match the profile total.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 2)]
        s: u8,
        #[arg(long, default_value_t = 30.0)]
        t_max: f64,
        #[arg(long, default_value_t = 0.5)]
        sample_dt: f64,
        #[arg(long, default_value_t = 1)]
        trials: u64,
        /// Output CSV (columns trial,time,red_density); a theory companion
        /// and a manifest are written next to it.
        #[arg(long)]
        out: PathBuf,
        /// Also dump the sampled graph as a "tail head" edge list.
        #[arg(long)]
        dump_graph: Option<PathBuf>,
    },
    /// Estimate label survival of the dual particle system.
    Dual {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 2)]
        s: u8,
        /// Start the particle at this vertex.
        #[arg(long, conflicts_with = "all_vertices")]
        vertex: Option<u32>,
        /// Average over uniformly random start vertices (estimates the
        /// predicted red density).
        #[arg(long)]
        all_vertices: bool,
        #[arg(long, default_value_t = 30.0)]
        t_max: f64,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long)]
        dump_graph: Option<PathBuf>,
    },
    /// Monte-Carlo survival of the percolated branching tree.
    Tree {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        root_degree: u32,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 60)]
        gen_cap: u32,
    },
    /// Check the exact pathwise duality over many seeds; nonzero exit on
    /// any mismatch.
    VerifyDuality {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 2)]
        s: u8,
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        #[arg(long, default_value_t = 100)]
        seeds: u64,
    },
    /// Emit the (rho, p) regime grid with the critical boundary.
    PhaseDiagram {
        #[arg(long, default_value_t = 0.02)]
        rho_min: f64,
        #[arg(long, default_value_t = 0.5)]
        rho_max: f64,
        #[arg(long, default_value_t = 49)]
        rho_count: usize,
        #[arg(long, default_value_t = 0.0)]
        p_min: f64,
        #[arg(long, default_value_t = 1.0)]
        p_max: f64,
        #[arg(long, default_value_t = 51)]
        p_count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Preset experiments.
    Experiment {
        #[command(subcommand)]
        what: ExperimentCommand,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScaleArg {
    Full,
    Desk,
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Density trajectories for the three preset profiles at p in
    /// {0.3, 0.45}, with CSVs, a gnuplot script and a manifest.
    Fig3 {
        /// Output directory for the CSV bundle, plot script and manifest.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = ScaleArg::Desk)]
        scale: ScaleArg,
        #[arg(long, default_value_t = 5)]
        trials: u64,
    },
}

fn configure_threads(cli_threads: Option<usize>) -> cobranet::Result<()> {
    let threads = match cli_threads {
        Some(t) => Some(t),
        None => match std::env::var("COBRANET_THREADS") {
            Ok(v) => Some(v.parse::<usize>().map_err(|_| {
                cobranet::Error::Domain(format!("COBRANET_THREADS must be an integer, got {v:?}"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(threads) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| cobranet::Error::Domain(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> cobranet::Result<ExitCode> {
    configure_threads(cli.threads)?;
    let seed = cli.seed;
    match cli.command {
        Command::Theory { profile, p, s } => {
            let seq = DegreeProfile::from_path(&profile)?.build_sequence()?;
            let report = cli::theory_report(&seq, p, s)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Simulate {
            profile,
            n,
            p,
            s,
            t_max,
            sample_dt,
            trials,
            out,
            dump_graph,
        } => {
            eprintln!("effective seed: {seed}");
            let cfg = SimulateConfig {
                profile: DegreeProfile::from_path(&profile)?,
                expected_n: n,
                p,
                s,
                t_max,
                sample_dt,
                trials,
                seed,
                out,
                dump_graph,
            };
            let summary = cli::run_simulate(&cfg)?;
            let last = *summary.mean_series.red_density.last().unwrap();
            println!(
                "n={} trials={} final mean red density {last:.6}",
                summary.n, summary.trials
            );
            println!("wrote {}", summary.csv_path.display());
            println!("wrote {}", summary.theory_path.display());
            println!("wrote {}", summary.manifest_path.display());
        }
        Command::Dual {
            profile,
            p,
            s,
            vertex,
            all_vertices,
            t_max,
            trials,
            dump_graph,
        } => {
            eprintln!("effective seed: {seed}");
            let target = match (vertex, all_vertices) {
                (Some(x), false) => DualTarget::Vertex(x),
                (None, true) => DualTarget::AllVertices,
                (None, false) => {
                    return Err(cobranet::Error::Domain(
                        "pass --vertex <X> or --all-vertices".into(),
                    ))
                }
                (Some(_), true) => unreachable!("clap conflict rule"),
            };
            let cfg = DualConfig {
                profile: DegreeProfile::from_path(&profile)?,
                p,
                s,
                target,
                t_max,
                trials,
                seed,
                dump_graph,
            };
            let summary = cli::run_dual(&cfg)?;
            println!(
                "survival estimate {:.6} +- {:.6} ({} / {} trials)",
                summary.estimate.survival,
                summary.estimate.std_error,
                summary.estimate.survivors,
                summary.estimate.trials
            );
            match summary.prediction {
                Some(q) => println!("theory prediction {q:.6}"),
                None => println!("theory prediction n/a"),
            }
        }
        Command::Tree {
            profile,
            p,
            root_degree,
            trials,
            gen_cap,
        } => {
            eprintln!("effective seed: {seed}");
            let cfg = TreeConfig {
                profile: DegreeProfile::from_path(&profile)?,
                p,
                root_degree,
                trials,
                gen_cap,
                seed,
            };
            let summary = cli::run_tree(&cfg)?;
            println!(
                "survival estimate {:.6} +- {:.6} ({} / {} trials, cap {gen_cap})",
                summary.estimate.survival,
                summary.estimate.std_error,
                summary.estimate.survivors,
                summary.estimate.trials
            );
            println!(
                "closed-form prediction {:.6} (rho = {:.6})",
                summary.prediction, summary.rho
            );
        }
        Command::VerifyDuality {
            profile,
            n,
            p,
            s,
            t_max,
            seeds,
        } => {
            eprintln!("effective seed: {seed}");
            let cfg = VerifyDualityConfig {
                profile: DegreeProfile::from_path(&profile)?,
                expected_n: n,
                p,
                s,
                t_max,
                seeds,
                base_seed: seed,
            };
            let summary = cli::run_verify_duality(&cfg)?;
            if summary.mismatches.is_empty() {
                println!("{} seeds verified, zero mismatches", summary.seeds_run);
            } else {
                for report in &summary.mismatches {
                    eprintln!(
                        "MISMATCH at seed {}: vertices {:?} (replay with --seed {})",
                        report.seed, report.violations, report.seed
                    );
                }
                return Ok(ExitCode::from(1));
            }
        }
        Command::PhaseDiagram {
            rho_min,
            rho_max,
            rho_count,
            p_min,
            p_max,
            p_count,
            out,
        } => {
            let rho_grid = cli::linspace(rho_min, rho_max, rho_count);
            let p_grid = cli::linspace(p_min, p_max, p_count);
            let manifest = cli::run_phase_diagram(&rho_grid, &p_grid, &out, seed)?;
            println!("wrote {}", out.display());
            println!("wrote {}", manifest.display());
        }
        Command::Experiment { what } => match what {
            ExperimentCommand::Fig3 { out, scale, trials } => {
                eprintln!("effective seed: {seed}");
                let cfg = Fig3Config {
                    scale: match scale {
                        ScaleArg::Full => Fig3Scale::Full,
                        ScaleArg::Desk => Fig3Scale::Desk,
                    },
                    trials,
                    seed,
                    out_dir: out,
                };
                let summary = cli::run_fig3(&cfg)?;
                println!("n = {}", summary.n);
                for combo in &summary.combos {
                    let last = *combo.mean_series.red_density.last().unwrap();
                    println!(
                        "{:<10} p={:<4} predicted {:.4}  final mean density {:.4}",
                        combo.profile_name, combo.p, combo.q_star, last
                    );
                }
                println!("wrote {}", summary.plot_script_path.display());
                println!("wrote {}", summary.manifest_path.display());
            }
        },
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
