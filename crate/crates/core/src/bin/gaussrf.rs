use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gaussrf::experiments::{run_and_write, Experiment, ExperimentConfig, Format, OneOrMany};
use gaussrf::Error;

#[derive(Parser)]
#[command(name = "gaussrf", version, about = "Recursive-filter Gaussian experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Operator norms of the one-pass filters
    Table1(Common),
    /// Distance between filter and exact operators
    Table2(Common),
    /// Trimmed distances on a stretched grid
    Table3(Common),
    /// Filter responses to a cosine
    FigCos(Common),
    /// Filter responses to a unit impulse
    FigDirac(Common),
    /// End-to-end assimilation on a synthetic problem
    VarDemo(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config file; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    /// One or more scales, comma separated
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    sigma: Option<Vec<f64>>,
    /// One or more first-order iteration counts, comma separated
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    /// Keep only results of this filter order (1 or 3)
    #[arg(long)]
    order: Option<u32>,
    /// Use the effective scale q(sigma) in the third-order filter
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    use_q: Option<bool>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json
    #[arg(long)]
    format: Option<String>,
    /// Observation count (var-demo)
    #[arg(long)]
    obs: Option<usize>,
    /// Error standard deviation (var-demo)
    #[arg(long, allow_negative_numbers = true)]
    noise: Option<f64>,
    /// CG iteration cap (var-demo)
    #[arg(long)]
    max_iter: Option<usize>,
}

impl Common {
    fn into_config(self) -> Result<ExperimentConfig, Error> {
        let base = match &self.config {
            Some(p) => ExperimentConfig::from_json_file(p)?,
            None => ExperimentConfig::default(),
        };
        let format = self.format.as_deref().map(str::parse::<Format>).transpose()?;
        let flags = ExperimentConfig {
            m: self.m,
            sigma: self.sigma.map(OneOrMany::Many),
            order: self.order,
            k: self.k.map(OneOrMany::Many),
            use_q: self.use_q,
            seed: self.seed,
            out: self.out,
            format,
            obs: self.obs,
            noise: self.noise,
            max_iter: self.max_iter,
        };
        let cfg = base.merged_with(flags);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, common) = match cli.command {
        Command::Table1(c) => (Experiment::Table1, c),
        Command::Table2(c) => (Experiment::Table2, c),
        Command::Table3(c) => (Experiment::Table3, c),
        Command::FigCos(c) => (Experiment::FigCos, c),
        Command::FigDirac(c) => (Experiment::FigDirac, c),
        Command::VarDemo(c) => (Experiment::VarDemo, c),
    };
    let result = common
        .into_config()
        .and_then(|cfg| run_and_write(experiment, &cfg));
    match result {
        Ok(out) if out.numerical_failure => {
            eprintln!("gaussrf: {}: solver did not converge", experiment.name());
            ExitCode::from(3)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gaussrf: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
