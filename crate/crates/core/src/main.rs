use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use socnav_core::model::{convert_wide_csv, convert_wide_csv_dir, save_dataset, save_survey, ObstacleMap, WideCsvOptions};
use socnav_core::preprocess::NormMode;
use socnav_core::report::{render_figures, run_pipeline, Config, PipelineOptions, ReportError};
use socnav_core::metrics::SwAccumulation;
use socnav_core::synth::{fixture_specs, fixture_survey, generate, SynthSpec};

#[derive(Parser)]
#[command(name = "socnav", version, about = "Social navigation metrics and their agreement with human assessment")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory of experiment JSON files (when no config is given).
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Survey CSV (when no config is given).
    #[arg(long, global = true)]
    survey: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Clustering seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Single k for the subset search.
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true, value_parser = ["ratio", "minmax"])]
    norm: Option<String>,
    /// Ignore the survey and skip the stages that need it.
    #[arg(long, global = true)]
    qm_only: bool,
    /// Sum per-step social work instead of integrating over time.
    #[arg(long, global = true)]
    sw_raw_sum: bool,
    /// Reject robot trajectories that exceed the platform velocity limits.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Convert wide tracker CSV files into experiment JSON files.
    Convert {
        /// A CSV file or a directory of them.
        #[arg(long)]
        input: PathBuf,
        /// Multiplier turning the time column into seconds.
        #[arg(long, default_value_t = 1.0)]
        time_scale: f64,
        /// JSON obstacle map (`bounds` and `segments`) attached to every run.
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Compute raw metrics.
    Metrics,
    /// Compute and normalize metrics and scale the survey.
    Normalize,
    /// Survey-space clustering and metric subset search.
    Cluster,
    /// Spearman/Kendall correlations between metrics and survey.
    Correlate,
    /// Aggregate scores and trend agreement.
    Aggregate,
    /// Re-render the figures from the CSV tables in the output directory.
    Report,
    /// Every stage end to end.
    Pipeline,
    /// Generate synthetic experiments.
    Synth {
        /// JSON file with one spec or a list of specs.
        #[arg(long, required_unless_present = "fixture")]
        spec: Option<PathBuf>,
        /// Generate the built-in 24-run corpus and a matching survey instead.
        #[arg(long)]
        fixture: bool,
    },
}

fn fail(msg: String) -> ReportError {
    ReportError::Config(msg)
}

fn load_config(g: &Global) -> Result<Config, ReportError> {
    let mut cfg = match &g.config {
        Some(path) => Config::load(path)?,
        None => {
            let data = g
                .data
                .clone()
                .ok_or_else(|| fail("either --config or --data is required".into()))?;
            Config::new(data, g.survey.clone(), g.out.clone().unwrap_or_else(|| PathBuf::from("out")))
        }
    };
    if g.config.is_some() {
        if let Some(d) = &g.data {
            cfg.dataset.dir = d.clone();
        }
        if let Some(s) = &g.survey {
            cfg.dataset.survey = Some(s.clone());
        }
    }
    if let Some(out) = &g.out {
        cfg.dataset.output_dir = out.clone();
    }
    if let Some(seed) = g.seed {
        cfg.cluster.seed = seed;
    }
    if let Some(k) = g.k {
        cfg.cluster.subset_k = vec![k];
    }
    if let Some(norm) = &g.norm {
        cfg.dataset.norm = norm.parse::<NormMode>().map_err(fail)?;
    }
    if g.sw_raw_sum {
        cfg.sw_accumulation = SwAccumulation::RawSum;
    }
    if g.strict {
        cfg.dataset.strict = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(g: &Global) -> Result<PathBuf, ReportError> {
    if let Some(out) = &g.out {
        return Ok(out.clone());
    }
    match &g.config {
        Some(path) => Ok(Config::load(path)?.dataset.output_dir),
        None => Err(fail("--out is required".into())),
    }
}

fn read_map(path: &Path) -> Result<ObstacleMap, ReportError> {
    let text = std::fs::read_to_string(path).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    let raw: ObstacleMap = serde_json::from_str(&text)?;
    Ok(ObstacleMap::new(raw.bounds, raw.segments)?)
}

fn read_specs(path: &Path) -> Result<Vec<SynthSpec>, ReportError> {
    let text = std::fs::read_to_string(path).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    Ok(if value.is_array() {
        serde_json::from_value(value)?
    } else {
        vec![serde_json::from_value(value)?]
    })
}

fn run(cli: Cli) -> Result<(), ReportError> {
    let g = &cli.global;
    let stages = |normalize, cluster, correlate, aggregate| PipelineOptions {
        qm_only: g.qm_only,
        normalize,
        cluster,
        correlate,
        aggregate,
    };
    let opts = match &cli.command {
        Command::Convert { input, time_scale, map } => {
            let out = out_dir(g)?;
            let opts = WideCsvOptions {
                time_scale: *time_scale,
                map: map.as_deref().map(read_map).transpose()?,
            };
            let records = if input.is_dir() {
                convert_wide_csv_dir(input, &opts)?
            } else {
                vec![convert_wide_csv(input, &opts)?]
            };
            save_dataset(&records, &out)?;
            println!("converted {} run(s) into {}", records.len(), out.display());
            return Ok(());
        }
        Command::Synth { spec, fixture } => {
            let out = out_dir(g)?;
            let seed = g.seed.unwrap_or(42);
            let specs = match spec {
                Some(path) => read_specs(path)?,
                None => fixture_specs(seed),
            };
            let records = specs
                .iter()
                .map(generate)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| fail(e.to_string()))?;
            save_dataset(&records, &out)?;
            if *fixture {
                let survey = fixture_survey(&records, &Default::default(), seed).map_err(|e| fail(e.to_string()))?;
                save_survey(&survey, &out.join("survey.csv"))?;
            }
            println!("generated {} run(s) into {}", records.len(), out.display());
            return Ok(());
        }
        Command::Report => {
            let dir = out_dir(g)?;
            let written = render_figures(&dir)?;
            if written.is_empty() {
                return Err(fail(format!("no tables to render in {}", dir.display())));
            }
            for f in written {
                println!("{}", dir.join(f).display());
            }
            return Ok(());
        }
        Command::Metrics => stages(false, false, false, false),
        Command::Normalize => stages(true, false, false, false),
        Command::Cluster => stages(true, true, false, false),
        Command::Correlate => stages(true, false, true, false),
        Command::Aggregate => stages(true, false, false, true),
        Command::Pipeline => stages(true, true, true, true),
    };
    let cfg = load_config(g)?;
    let summary = run_pipeline(&cfg, &opts)?;
    println!("{} experiment(s) -> {}", summary.n_experiments, summary.output_dir.display());
    if let Some(k) = summary.selected_k {
        println!("survey-space k = {k} (silhouette {:.3})", summary.silhouettes.iter().find(|s| s.0 == k).map_or(0.0, |s| s.1));
    }
    for f in &summary.files {
        println!("  {f}");
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
