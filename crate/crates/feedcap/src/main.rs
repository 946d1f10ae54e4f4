use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use feedcap::config::{BisectConfig, Command, ExperimentConfig};
use feedcap::reference::ChiSource;
use feedcap::{run_config, Result};

#[derive(Parser)]
#[command(
    name = "feedcap",
    version,
    about = "Holevo capacities and classical-feedback bound checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Estimate the Holevo capacity of a channel.
    Chi(Flags),
    /// PPT entanglement-breaking test, or bisection of a family with --bisect.
    EbTest(Flags),
    /// Product/separable-input feedback protocols against the capacity bounds.
    VerifyFeedback(Flags),
    /// Feedback protocols with an entanglement-breaking first channel.
    VerifyEb(Flags),
    /// Entangled-input protocols; reports the largest excess, asserts nothing.
    ExploreEntangled(Flags),
    /// Compare the two-use estimate with twice the single-use capacity.
    AdditivityCheck(Flags),
    /// Run an experiment described by a JSON config file.
    Run {
        config: PathBuf,
        /// Overrides the report directory of the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone, Debug, Default)]
struct Flags {
    /// Channel name `kind[:params][@dim][^n]` or channel file.
    #[arg(long)]
    channel: Option<String>,
    /// First channel of a protocol (defaults to --channel).
    #[arg(long)]
    omega: Option<String>,
    /// Second channel of a protocol (defaults to --channel).
    #[arg(long)]
    lambda: Option<String>,
    /// Protocol file to run instead of random protocols.
    #[arg(long)]
    protocol: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    /// Messages per random protocol.
    #[arg(long)]
    messages: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated input classes: product, separable, entangled.
    #[arg(long, value_delimiter = ',')]
    class: Vec<String>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    ensemble_size: Option<usize>,
    /// Optimizer convergence tolerance for chi and additivity-check; bound
    /// tolerance for the protocol commands.
    #[arg(long)]
    tol: Option<f64>,
    /// Allowance added for grid capacity references.
    #[arg(long)]
    slack: Option<f64>,
    #[arg(long)]
    grid_resolution: Option<usize>,
    /// auto, grid or closed-form.
    #[arg(long)]
    chi_source: Option<String>,
    /// Capacity reference for the first use (overrides --chi-source).
    #[arg(long)]
    chi1: Option<f64>,
    /// Capacity reference for the second use (overrides --chi-source).
    #[arg(long)]
    chi2: Option<f64>,
    /// Channel family to bisect for the EB threshold.
    #[arg(long)]
    bisect: Option<String>,
    #[arg(long, default_value_t = 2)]
    bisect_dim: usize,
    #[arg(long, default_value_t = 0.0)]
    bisect_lo: f64,
    #[arg(long, default_value_t = 1.0)]
    bisect_hi: f64,
    #[arg(long, default_value_t = 1e-9)]
    bisect_tol: f64,
    /// Report directory (summary.json, rows.csv); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Flags {
    fn into_config(self, command: Command) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig::new(command);
        c.channel = self.channel;
        c.omega = self.omega;
        c.lambda = self.lambda;
        c.protocol = self.protocol;
        c.classes = self.class;
        c.slack = self.slack;
        c.chi1 = self.chi1;
        c.chi2 = self.chi2;
        c.out = self.out;
        c.optimizer.ensemble_size = self.ensemble_size;
        if let Some(v) = self.trials {
            c.trials = v;
        }
        if let Some(v) = self.messages {
            c.messages = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.restarts {
            c.optimizer.restarts = v;
        }
        if let Some(v) = self.max_iters {
            c.optimizer.max_iters = v;
        }
        if let Some(v) = self.patience {
            c.optimizer.patience = v;
        }
        if let Some(v) = self.grid_resolution {
            c.grid_resolution = v;
        }
        if let Some(v) = self.tol {
            match command {
                Command::Chi | Command::AdditivityCheck => c.optimizer.tol = v,
                _ => c.tol = v,
            }
        }
        if let Some(s) = self.chi_source {
            c.chi_source = s.parse::<ChiSource>()?;
        }
        if let Some(family) = self.bisect {
            c.bisect = Some(BisectConfig {
                family,
                dim: self.bisect_dim,
                lo: self.bisect_lo,
                hi: self.bisect_hi,
                tol: self.bisect_tol,
            });
        }
        Ok(c)
    }
}

fn config(cli: Cli) -> Result<ExperimentConfig> {
    let (command, flags) = match cli.command {
        Cmd::Run { config, out } => {
            let mut c = ExperimentConfig::load(&config)?;
            if out.is_some() {
                c.out = out;
            }
            return Ok(c);
        }
        Cmd::Chi(f) => (Command::Chi, f),
        Cmd::EbTest(f) => (Command::EbTest, f),
        Cmd::VerifyFeedback(f) => (Command::VerifyFeedback, f),
        Cmd::VerifyEb(f) => (Command::VerifyEb, f),
        Cmd::ExploreEntangled(f) => (Command::ExploreEntangled, f),
        Cmd::AdditivityCheck(f) => (Command::AdditivityCheck, f),
    };
    flags.into_config(command)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = config(cli).and_then(|cfg| {
        let outcome = run_config(&cfg)?;
        if cfg.out.is_none() {
            println!("{}", serde_json::to_string_pretty(&outcome.summary)?);
        }
        Ok(outcome)
    });
    match outcome {
        Ok(o) => {
            if !o.passed {
                eprintln!("bound violation: see the {} report", o.command.name());
            }
            ExitCode::from(o.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
