//! `ramcts`: generate losing episodes, compute references, run the searchers
//! and aggregate performance profiles.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context as _;
use clap::{Args, Parser, Subcommand};
use ramcts::baselines::Method;
use ramcts::envs::GameKind;
use ramcts::harness::{self, ExperimentConfig, HarnessError, Mode};

#[derive(Parser, Debug)]
#[command(name = "ramcts", version, about = "Responsibility attribution experiments on team card games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate losing trajectories (JSONL) and write the configuration.
    Gen(Flags),
    /// Compute exact or lower-bound reference assignments.
    Oracle(Flags),
    /// Run the searchers over the generated trajectories.
    Run(Flags),
    /// Aggregate run records into performance profiles.
    Profile(Flags),
    /// Render profile SVGs.
    Plot(Flags),
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// JSON configuration; flags override its values. Defaults to
    /// `<out>/config.json` when present.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    game: Option<GameKind>,
    #[arg(long)]
    hand_size: Option<usize>,
    #[arg(long)]
    budget: Option<u64>,
    /// Comma-separated method names.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    trajectories: Option<usize>,
    /// Posterior samples per trajectory (unknown-context mode).
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated error thresholds in [0, 1].
    #[arg(long, value_delimiter = ',')]
    thresholds: Option<Vec<f64>>,
    /// Goofspiel opponents always play their greedy card.
    #[arg(long)]
    deterministic_opponents: bool,
}

impl Flags {
    fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let file = match (&self.config, &self.out) {
            (Some(p), _) => Some(p.clone()),
            (None, Some(out)) if out.join("config.json").exists() => Some(out.join("config.json")),
            (None, None) if PathBuf::from("out/config.json").exists() => Some(PathBuf::from("out/config.json")),
            _ => None,
        };
        let mut cfg = match file {
            Some(p) => ExperimentConfig::load(&p).with_context(|| format!("reading {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => {$( if let Some(v) = &self.$f { cfg.$f = v.clone(); } )*};
        }
        set!(game, hand_size, budget, methods, runs, trajectories, samples, mode, seed, out, thresholds);
        if self.deterministic_opponents {
            cfg.deterministic_opponents = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(command: &Command) -> anyhow::Result<()> {
    match command {
        Command::Gen(f) => {
            let cfg = f.resolve()?;
            let recs = harness::gen(&cfg)?;
            println!("wrote {} instances of {}({}) to {}", recs.len(), cfg.game, cfg.hand_size, cfg.out.display());
        }
        Command::Oracle(f) => {
            let cfg = f.resolve()?;
            let refs = harness::oracle(&cfg)?;
            for (id, d) in &refs {
                let d: Vec<String> = d.iter().map(ToString::to_string).collect();
                println!("{id}: {}", d.join(" "));
            }
        }
        Command::Run(f) => {
            let cfg = f.resolve()?;
            let runs = harness::run(&cfg)?;
            let exact = runs.iter().filter(|r| r.final_point().eps == 0.into()).count();
            println!("{} runs, {exact} with zero final error; wrote {}", runs.len(), cfg.out.join("runs.csv").display());
        }
        Command::Profile(f) => {
            let cfg = f.resolve()?;
            let table = harness::profile(&cfg)?;
            for (m, at) in &table.converged_at {
                match at {
                    Some(s) => println!("{m}: all runs exact by {s} steps"),
                    None => println!("{m}: not all runs exact within the budget"),
                }
            }
        }
        Command::Plot(f) => {
            let cfg = f.resolve()?;
            for p in harness::plot(&cfg)? {
                println!("wrote {}", p.display());
            }
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
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let generation = e.downcast_ref::<HarnessError>().is_some_and(HarnessError::is_generation_failure);
            ExitCode::from(if generation { 2 } else { 1 })
        }
    }
}
