use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde_json::{json, Value};
use tputml::pipeline::{self, InjectSpec, PipelineConfig, PipelineError, Run, CONFIG_SCHEMA_VERSION};

#[derive(Parser)]
#[command(name = "tputml", about = "Throughput forecasting pipeline")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

fn version() -> String {
    format!("{} (config schema {CONFIG_SCHEMA_VERSION})", env!("CARGO_PKG_VERSION"))
}

#[derive(Args)]
struct Global {
    /// JSON config; defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Artifacts directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Accept upstream artifacts produced by a different config.
    #[arg(long, global = true)]
    force: bool,
    /// Config override `dotted.key=value`; the value is parsed as JSON, else taken as a string.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse logs (or generate synthetic data) into the canonical dataset.
    Ingest {
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long)]
        resample_period: Option<i64>,
    },
    /// Fit and apply the preprocessing plan.
    Preprocess,
    /// Rank features and drop redundant ones.
    SelectFeatures,
    /// Hyperparameter search; saves the best model.
    Search {
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long, value_parser = ["bayesian", "random"])]
        method: Option<String>,
    },
    /// Train the fixed model from the `train` config section.
    Train,
    /// Score the saved model on the test split.
    Evaluate {
        /// Also run the baseline comparison over `seeds`.
        #[arg(long)]
        compare: bool,
    },
    /// Look-back and horizon sweeps.
    Sweep,
    /// Replay the test rows against the saved model.
    Monitor {
        /// e.g. `scale=0.5,start=14m,len=10m`
        #[arg(long)]
        inject: Option<String>,
        #[arg(long)]
        check_period: Option<i64>,
        #[arg(long)]
        window_size: Option<i64>,
    },
    /// Write a drifted copy of the dataset.
    InjectDrift {
        #[arg(long)]
        spec: String,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest { .. } => "ingest",
            Command::Preprocess => "preprocess",
            Command::SelectFeatures => "select-features",
            Command::Search { .. } => "search",
            Command::Train => "train",
            Command::Evaluate { .. } => "evaluate",
            Command::Sweep => "sweep",
            Command::Monitor { .. } => "monitor",
            Command::InjectDrift { .. } => "inject-drift",
        }
    }
}

fn log(event: &str, fields: Value) {
    let mut v = json!({ "event": event });
    if let (Some(m), Value::Object(f)) = (v.as_object_mut(), fields) {
        m.extend(f);
    }
    eprintln!("{v}");
}

fn set_path(root: &mut Value, key: &str, value: Value) -> Result<(), PipelineError> {
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, p) in parts.iter().enumerate() {
        let obj = cur.as_object_mut().ok_or_else(|| PipelineError::Config(format!("'{key}' does not name an object path")))?;
        if i + 1 == parts.len() {
            obj.insert(p.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(p.to_string()).or_insert_with(|| json!({}));
        if cur.is_null() {
            *cur = json!({});
        }
    }
    Ok(())
}

fn apply_overrides(cfg: PipelineConfig, overrides: &[(String, Value)]) -> Result<PipelineConfig, PipelineError> {
    if overrides.is_empty() {
        return Ok(cfg);
    }
    let mut v = serde_json::to_value(&cfg).expect("config serializes");
    for (k, val) in overrides {
        set_path(&mut v, k, val.clone())?;
    }
    serde_json::from_value(v).map_err(|e| PipelineError::Config(e.to_string()))
}

fn parse_override(s: &str) -> Result<(String, Value), PipelineError> {
    let (k, v) = s.split_once('=').ok_or_else(|| PipelineError::Config(format!("--set expects KEY=VALUE, got '{s}'")))?;
    let val = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.trim().to_string(), val))
}

fn load_config(g: &Global, cmd: &Command) -> Result<PipelineConfig, PipelineError> {
    let base = match &g.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let mut ov: Vec<(String, Value)> = g.overrides.iter().map(|s| parse_override(s)).collect::<Result<_, _>>()?;
    if let Some(s) = g.seed {
        ov.push(("seed".into(), json!(s)));
    }
    if let Some(o) = &g.out {
        ov.push(("paths.artifacts_dir".into(), json!(o)));
    }
    match cmd {
        Command::Ingest { data_dir, resample_period } => {
            if let Some(d) = data_dir {
                ov.push(("paths.data_dir".into(), json!(d)));
            }
            if let Some(p) = resample_period {
                ov.push(("ingest.resample_period_s".into(), json!(p)));
            }
        }
        Command::Search { budget, method } => {
            if let Some(b) = budget {
                ov.push(("search.budget".into(), json!(b)));
            }
            if let Some(m) = method {
                ov.push(("search.method".into(), json!(m)));
            }
        }
        Command::Monitor { check_period, window_size, .. } => {
            if let Some(c) = check_period {
                ov.push(("monitor.check_period".into(), json!(c)));
            }
            if let Some(w) = window_size {
                ov.push(("monitor.window_size".into(), json!(w)));
            }
        }
        _ => {}
    }
    apply_overrides(base, &ov)
}

fn execute(cli: &Cli) -> Result<Value, PipelineError> {
    let cfg = load_config(&cli.global, &cli.command)?;
    let mut run = Run::new(cfg, cli.command.name(), cli.global.force)?;
    log("start", json!({ "command": cli.command.name(), "config_hash": run.store.config_hash, "seed": run.config.seed }));
    let summary = match &cli.command {
        Command::Ingest { .. } => {
            let ds = pipeline::ingest(&mut run)?;
            json!({ "records": ds.len(), "segments": ds.segments.len(), "span_s": ds.time_span_seconds() })
        }
        Command::Preprocess => {
            let (plan, frame) = pipeline::preprocess(&mut run)?;
            json!({ "rows": frame.rows(), "columns": frame.names, "warnings": plan.warnings })
        }
        Command::SelectFeatures => {
            let sel = pipeline::select(&mut run)?;
            println!("{}", sel.report.ranked_table());
            json!({ "inputs": sel.inputs })
        }
        Command::Search { .. } => serde_json::to_value(pipeline::search(&mut run)?).expect("meta serializes"),
        Command::Train => serde_json::to_value(pipeline::train_fixed(&mut run)?).expect("meta serializes"),
        Command::Evaluate { compare } => {
            let mut r = pipeline::evaluate(&mut run)?;
            if *compare {
                r.rows.extend(pipeline::compare(&mut run)?.rows);
            }
            let rows: Vec<Value> = r
                .rows
                .iter()
                .map(|x| json!({ "model": x.model, "seed": x.seed, "mae_norm": x.mae_norm, "mae_kbps": x.mae_kbps, "mape_percent": x.mape_percent }))
                .collect();
            json!({ "rows": rows })
        }
        Command::Sweep => {
            let (lb, hz) = pipeline::sweep(&mut run)?;
            let m = |r: &tputml::eval::MetricsReport| r.means().map(|x| json!([x.look_back, x.horizon, x.mae_norm])).collect::<Vec<_>>();
            json!({ "lookback": m(&lb), "horizon": m(&hz) })
        }
        Command::Monitor { inject, .. } => {
            let spec = inject.as_deref().map(str::parse::<InjectSpec>).transpose()?;
            let out = pipeline::monitor(&mut run, spec)?;
            json!({ "initial_baseline": out.initial_baseline, "flags": out.report.summary.flags, "detection_times": out.report.summary.detection_times })
        }
        Command::InjectDrift { spec } => {
            let m = pipeline::inject(&mut run, spec.parse()?)?;
            json!({ "rows_affected": m.rows_affected, "mean_before": m.mean_before, "mean_after": m.mean_after })
        }
    };
    let manifest = run.finish()?;
    log("done", json!({ "command": manifest.command, "wall_s": manifest.wall_s, "outputs": manifest.outputs, "summary": summary }));
    Ok(summary)
}

fn main() -> ExitCode {
    let version: &'static str = Box::leak(version().into_boxed_str());
    let matches = Cli::command().version(version).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match execute(&cli) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            log("error", json!({ "command": cli.command.name(), "code": code, "message": e.to_string() }));
            ExitCode::from(code as u8)
        }
    }
}
