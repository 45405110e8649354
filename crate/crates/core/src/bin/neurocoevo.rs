use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use neurocoevo::coevo::CoevoConfig;
use neurocoevo::experiment::{
    load_config, load_controller, load_genome, load_morphology, parse_set, run_decode_controller,
    run_decode_sam, run_evolve, run_robustness, run_simulate, run_sweep, ConfigDocument, EvolveOutcome,
    ExperimentError, OutputOptions,
};
use neurocoevo::sim::SimParams;

#[derive(Parser, Debug)]
#[command(name = "neurocoevo", version, about = "Cooperative coevolution of soft actuator bodies and controllers")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Continue from checkpoint.json when present.
    #[arg(long, global = true)]
    resume: bool,
    /// Omit timestamps so identical runs give identical files.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Override a configuration value, e.g. --set sim.duration=0.5
    #[arg(long = "set", global = true, value_name = "KEY=VALUE", value_parser = parse_set)]
    sets: Vec<(String, String)>,
    /// Suppress progress output.
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one coevolution.
    Evolve {
        /// Run configuration or sweep spec (its `base` is used).
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run every configuration and trial of a sweep spec.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Evaluate a morphology against random phase controllers.
    Robustness {
        #[arg(long)]
        morphology: PathBuf,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        /// Simulation settings ({material, actuation, sim}).
        #[arg(long)]
        sim_config: Option<PathBuf>,
    },
    /// Decode a genome into a morphology or phase map.
    Decode {
        #[arg(long)]
        genome: PathBuf,
        #[arg(long, value_enum)]
        role: RoleArg,
        /// Morphology JSON, required for controllers.
        #[arg(long)]
        morphology: Option<PathBuf>,
        /// Run configuration supplying canvas and enclosure.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output file (default: <out>/morphology.json or <out>/phases.json).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Simulate a morphology with a phase map and print the yz displacement.
    Simulate {
        #[arg(long)]
        morphology: PathBuf,
        #[arg(long)]
        controller: PathBuf,
        #[arg(long)]
        sim_config: Option<PathBuf>,
        /// Trace CSV (default: <out>/trace.csv).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum RoleArg {
    Sam,
    Controller,
}

fn run(cli: Cli) -> Result<(), ExperimentError> {
    let g = cli.global;
    if let Some(jobs) = g.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| ExperimentError::Runtime(e.to_string()))?;
    }
    let opts = OutputOptions { deterministic: g.deterministic };
    let quiet = g.quiet;
    match cli.command {
        Command::Evolve { config } => {
            let mut cfg: CoevoConfig = ConfigDocument::load(config.as_deref(), &g.sets)?.run_config();
            if let Some(seed) = g.seed {
                cfg.seed = seed;
            }
            let outcome = run_evolve(&cfg, &g.out, g.resume, opts, |row| {
                if !quiet {
                    eprintln!(
                        "gen {:>4} {:<10} best {:.6e} mean {:.6e} champion {:.6e}",
                        row.generation,
                        row.evolving_population,
                        row.best_aptitude,
                        row.mean_aptitude,
                        row.champion_aptitude
                    );
                }
            })?;
            if let EvolveOutcome::AlreadyFinished(_) = outcome {
                if !quiet {
                    eprintln!("run in {} is already complete", g.out.display());
                }
            }
            let champ = outcome.state().champion.as_ref().map_or(0.0, |c| c.aptitude);
            println!("{champ}");
        }
        Command::Sweep { spec } => {
            let mut spec = ConfigDocument::load(Some(&spec), &g.sets)?.sweep_spec()?;
            if let Some(seed) = g.seed {
                spec.base_seed = seed;
            }
            let report = run_sweep(&spec, &g.out, g.resume, opts, |label, t, row| {
                if !quiet {
                    eprintln!("{label} trial {t:02} gen {:>4} champion {:.6e}", row.generation, row.champion_aptitude);
                }
            })?;
            for ex in &report.excluded {
                eprintln!("excluded {} trial {}: {}", ex.configuration, ex.trial, ex.error);
            }
        }
        Command::Robustness { morphology, count, sim_config } => {
            let params: SimParams = load_config(sim_config.as_deref(), &g.sets)?;
            let report = run_robustness(&morphology, count, g.seed.unwrap_or(0), &params, &g.out, opts)?;
            let s = report.summary;
            println!("min {} q1 {} median {} q3 {} max {} blowups {}", s.min, s.q1, s.median, s.q3, s.max, s.blowup_count);
        }
        Command::Decode { genome, role, morphology, config, output } => {
            let genome = load_genome(&genome)?;
            match role {
                RoleArg::Sam => {
                    let cfg: CoevoConfig = ConfigDocument::load(config.as_deref(), &g.sets)?.run_config();
                    let out = output.unwrap_or_else(|| g.out.join("morphology.json"));
                    let m = run_decode_sam(&genome, &cfg, &out)?;
                    println!("{} voxels, {} contractile", m.voxel_count(), m.contractile_cells().len());
                }
                RoleArg::Controller => {
                    let path = morphology.ok_or_else(|| {
                        ExperimentError::Config("--morphology is required for --role controller".into())
                    })?;
                    let m = load_morphology(&path)?;
                    let out = output.unwrap_or_else(|| g.out.join("phases.json"));
                    let c = run_decode_controller(&genome, &m, &out)?;
                    println!("{} phases", c.len());
                }
            }
        }
        Command::Simulate { morphology, controller, sim_config, trace } => {
            let params: SimParams = load_config(sim_config.as_deref(), &g.sets)?;
            let m = load_morphology(&morphology)?;
            let c = load_controller(&controller)?;
            let trace = trace.unwrap_or_else(|| g.out.join("trace.csv"));
            let delta = run_simulate(&m, &c, &params, &trace, opts)?;
            println!("{delta}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
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
