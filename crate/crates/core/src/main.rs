use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crowdflow::pipeline::{run_pipeline, PipelineConfig, StageName, StageToggles};

#[derive(Parser)]
#[command(name = "crowdflow", version, about = "Crowd-flow topology from mmWave radar recordings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate agents and render point clouds (and optionally ADC samples).
    Simulate(Common),
    /// Turn an ADC recording into per-window point clouds.
    Frontend(Common),
    /// Estimate the flow field from point clouds.
    Flow(Common),
    /// Extract the flow graph and split ratios from a flow field.
    Graph(Common),
    /// Divergence and curl maps of a flow field.
    Semantics(Common),
    /// Score an estimated graph against a truth graph.
    Eval(Common),
    /// Run several stages; defaults to the configured stage set.
    Pipeline(Common),
    /// Print the default configuration as JSON.
    DefaultConfig,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file; missing keys take their defaults.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output directory (overrides CROWDFLOW_OUT and the config).
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Scenario seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Built-in scenario name for the simulate stage.
    #[arg(long)]
    preset: Option<String>,
    /// Stage to run (repeatable; pipeline only).
    #[arg(long = "stage", value_name = "NAME")]
    stages: Vec<StageName>,
    /// Only log errors.
    #[arg(short, long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, only) = match cli.command {
        Command::DefaultConfig => {
            match serde_json::to_string_pretty(&PipelineConfig::default()) {
                Ok(s) => {
                    println!("{s}");
                    return ExitCode::SUCCESS;
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            }
        }
        Command::Simulate(c) => (c, Some(StageName::Simulate)),
        Command::Frontend(c) => (c, Some(StageName::Frontend)),
        Command::Flow(c) => (c, Some(StageName::Flow)),
        Command::Graph(c) => (c, Some(StageName::Graph)),
        Command::Semantics(c) => (c, Some(StageName::Semantics)),
        Command::Eval(c) => (c, Some(StageName::Eval)),
        Command::Pipeline(c) => (c, None),
    };

    let level = if common.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let mut cfg = match &common.config {
        Some(p) => match PipelineConfig::load(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => PipelineConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = Some(s);
    }
    if let Some(p) = common.preset {
        cfg.simulate.preset = Some(p);
        cfg.simulate.scenario = None;
    }
    match only {
        Some(stage) => cfg.stages = StageToggles::only(&[stage]),
        None if !common.stages.is_empty() => cfg.stages = StageToggles::only(&common.stages),
        None => {}
    }

    let out = cfg.resolve_out(common.out.as_deref());
    match run_pipeline(&cfg, &out) {
        Ok(summary) => {
            log::info!(
                "wrote {} artifacts to {}",
                summary.manifest.artifacts.len(),
                summary.out.display()
            );
            if let Some(report) = summary.eval {
                if !common.quiet {
                    println!("{}", report.summary());
                }
            }
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::FAILURE
        }
    }
}
