use std::path::PathBuf;
use std::process::ExitCode;

use adequacy::Architecture;
use adequacy_cli::commands;
use adequacy_cli::report::{compare, RunReport};
use adequacy_cli::{CliError, CliResult, ExperimentConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "adequacy", version, about = "Multilevel Monte Carlo adequacy studies of systems with storage")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config; omitted sections use the reference system and defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Reseed libraries, training and runs from one value.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> CliResult<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.apply_seed(s);
        }
        if let Some(o) = &self.out {
            cfg.output.dir = o.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate demand and wind libraries and the fleet tables.
    Generate(Common),
    /// Mine training days and fit the surrogate models.
    Train(Common),
    /// Run the multilevel estimator for one architecture.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Architecture, top level first, e.g. "Exact|HGB+Gre|Avg".
        #[arg(long)]
        arch: Option<String>,
        /// Budget per run in seconds.
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long)]
        repeats: Option<usize>,
        /// Worker threads; 0 uses every core.
        #[arg(long)]
        workers: Option<usize>,
        /// Report of a plain Monte Carlo run to compute speedups against.
        #[arg(long)]
        baseline: Option<PathBuf>,
    },
    /// Tabulate run reports of one system; speedups are relative to the
    /// `Exact` report.
    Compare {
        reports: Vec<PathBuf>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Surrogate accuracy against training-set size.
    Accuracy(Common),
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Generate(c) => {
            let s = commands::generate(&c.load()?)?;
            println!("{}", serde_json::to_string_pretty(&s).expect("summary serializes"));
        }
        Command::Train(c) => {
            let r = commands::train(&c.load()?)?;
            println!("{}", serde_json::to_string_pretty(&r).expect("report serializes"));
        }
        Command::Estimate { common, arch, budget, repeats, workers, baseline } => {
            let mut cfg = common.load()?;
            if let Some(a) = arch {
                cfg.run.architecture = a.parse::<Architecture>()?;
            }
            if let Some(b) = budget {
                cfg.run.budget = b;
            }
            if let Some(r) = repeats {
                cfg.run.repeats = r;
            }
            if let Some(w) = workers {
                cfg.run.workers = w;
            }
            let baseline = baseline.map(|p| RunReport::read(&p)).transpose()?;
            let (report, paths) = commands::estimate(&cfg, baseline.as_ref())?;
            print!("{}", report.to_csv());
            eprintln!("wrote {}", paths.json.display());
        }
        Command::Compare { reports, out } => {
            let reports = reports.iter().map(|p| RunReport::read(p)).collect::<CliResult<Vec<_>>>()?;
            let table = compare(&reports)?;
            match out {
                Some(p) => std::fs::write(&p, table).map_err(|e| CliError::io(&p, e))?,
                None => print!("{table}"),
            }
        }
        Command::Accuracy(c) => {
            for r in commands::accuracy(&c.load()?)? {
                println!(
                    "train {:>6}: LOL RMSE {:.4} ± {:.4} h, ENS RMSE {:.1} ± {:.1} MWh",
                    r.train_size, r.lol_rmse.mean, r.lol_rmse.se, r.ens_rmse.mean, r.ens_rmse.se
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
