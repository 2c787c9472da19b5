use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::artifacts::{ArtifactStore, RunManifest};
use super::config::{PipelineConfig, CONFIG_SCHEMA_VERSION};
use super::PipelineError;
use crate::drift::{inject_drift, replay_mae, run_monitor, DriftMonitorState, DriftSegment, DriftTransform, InjectionManifest, MonitorReport, Stream};
use crate::eval::{compare_models, make_windows, score, sweep_horizon, sweep_lookback, timings_csv, MetricsReport, Split, WindowedSet};
use crate::features::{select_features, FeatureReport};
use crate::ingest::{parse_csv, partition, resample_uniform, write_canonical_csv, Schema, SessionDataset, SessionTags, Sidecar};
use crate::nn::{train, Architecture, ModelFile, ModelSpec, TrainConfig};
use crate::preprocess::PreprocessPlan;
use crate::search::run_pipeline_search;
use crate::Frame;

pub const DATASET: &str = "dataset.json";
pub const PLAN: &str = "plan.json";
pub const FRAME: &str = "frame.json";
pub const FEATURES: &str = "features.json";
pub const MODEL: &str = "model.json";
pub const MODEL_META: &str = "model_meta.json";
pub const METRICS_CSV: &str = "metrics.csv";
pub const METRICS_JSON: &str = "metrics.json";

/// Config, artifact directory and the command being run.
pub struct Run {
    pub config: PipelineConfig,
    pub store: ArtifactStore,
    command: String,
    inputs: Vec<String>,
    outputs: Vec<String>,
    started: Instant,
}

fn stage<E: std::fmt::Display>(e: E) -> PipelineError {
    PipelineError::Stage(e.to_string())
}

impl Run {
    pub fn new(config: PipelineConfig, command: &str, force: bool) -> Result<Self, PipelineError> {
        config.validate()?;
        let store = ArtifactStore::new(config.paths.artifacts_dir.clone(), config.hash(), force)?;
        Ok(Run { config, store, command: command.into(), inputs: Vec::new(), outputs: Vec::new(), started: Instant::now() })
    }

    fn read<T: serde::de::DeserializeOwned>(&mut self, name: &str) -> Result<T, PipelineError> {
        self.inputs.push(name.into());
        self.store.read_json(name)
    }

    fn write<T: Serialize>(&mut self, name: &str, body: &T) -> Result<(), PipelineError> {
        self.outputs.push(name.into());
        self.store.write_json(name, body)
    }

    fn write_csv(&mut self, name: &str, csv: &str) -> Result<(), PipelineError> {
        self.outputs.push(name.into());
        self.store.write_csv(name, csv)
    }

    fn write_plain(&mut self, name: &str, text: &str) -> Result<(), PipelineError> {
        self.outputs.push(name.into());
        self.store.write_text(name, &format!("# config_hash: {}\n{text}", self.store.config_hash))
    }

    fn write_model(&mut self, name: &str, m: &ModelFile) -> Result<(), PipelineError> {
        self.outputs.push(name.into());
        self.store.write_model(name, m)
    }

    fn read_model(&mut self) -> Result<ModelFile, PipelineError> {
        self.inputs.push(MODEL.into());
        self.store.read_model(MODEL)
    }

    /// Writes the run manifest; call last.
    pub fn finish(self) -> Result<RunManifest, PipelineError> {
        let m = RunManifest {
            command: self.command.clone(),
            config_hash: self.store.config_hash.clone(),
            seed: self.config.seed,
            version: env!("CARGO_PKG_VERSION").into(),
            config_schema_version: CONFIG_SCHEMA_VERSION,
            inputs: self.inputs,
            outputs: self.outputs,
            wall_s: self.started.elapsed().as_secs_f64(),
        };
        self.store.write_manifest(&m)?;
        Ok(m)
    }

    fn row_split(&self, n: usize) -> (usize, usize) {
        let f = self.config.windows.fractions;
        let train_end = ((n as f64) * f.train).round() as usize;
        let val_end = ((n as f64) * (f.train + f.val)).round() as usize;
        (train_end.min(n), val_end.min(n))
    }
}

fn csv_files(dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        let entries = std::fs::read_dir(&d).map_err(|e| PipelineError::io(&d, e))?;
        for e in entries {
            let p = e.map_err(|e| PipelineError::io(&d, e))?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")) {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Reads logs (or generates a synthetic session), partitions, keeps one
/// partition and resamples it.
pub fn ingest(run: &mut Run) -> Result<SessionDataset, PipelineError> {
    let opts = run.config.ingest.clone();
    let ds = if let Some(s) = &opts.synthetic {
        crate::synth::generate(s)
    } else {
        let dir = run.config.paths.data_dir.clone().ok_or_else(|| PipelineError::Config("paths.data_dir or ingest.synthetic is required".into()))?;
        let schema = match &opts.schema_map {
            Some(p) => Schema::load(p).map_err(stage)?,
            None => Schema::default(),
        };
        let files = csv_files(&dir)?;
        if files.is_empty() {
            return Err(PipelineError::MissingArtifact(format!("no .csv files under {}", dir.display())));
        }
        let tags = SessionTags { network_mode: opts.network_mode, application: opts.application, mobility: None };
        let parsed = files.iter().map(|f| parse_csv(f, &schema, tags)).collect::<Result<Vec<_>, _>>().map_err(stage)?;
        let parts = partition(parsed).map_err(stage)?;
        let chosen = parts
            .into_iter()
            .filter(|((m, a), _)| opts.network_mode.map_or(true, |x| x == *m) && opts.application.map_or(true, |x| x == *a))
            // largest partition; ties go to the first key
            .fold(None::<SessionDataset>, |best, (_, d)| match best {
                Some(b) if b.len() >= d.len() => Some(b),
                _ => Some(d),
            });
        chosen.ok_or_else(|| PipelineError::Stage("no records match the configured network mode and application".into()))?
    };
    let ds = if opts.resample_period_s > 1 { resample_uniform(&ds, opts.resample_period_s, opts.max_gap_s) } else { ds };
    if ds.is_empty() {
        return Err(PipelineError::Stage("dataset is empty after ingestion".into()));
    }
    let mut csv = Vec::new();
    write_canonical_csv(&ds.records, &mut csv).map_err(stage)?;
    run.write(DATASET, &ds)?;
    run.write_csv("dataset.csv", &String::from_utf8(csv).expect("csv is utf-8"))?;
    run.write("dataset_sidecar.json", &Sidecar::of(&ds))?;
    Ok(ds)
}

/// Fits the plan on the leading training fraction of rows and applies it to all rows.
pub fn preprocess(run: &mut Run) -> Result<(PreprocessPlan, Frame), PipelineError> {
    let ds: SessionDataset = run.read(DATASET)?;
    let (train_end, _) = run.row_split(ds.len());
    if train_end == 0 {
        return Err(PipelineError::Stage("training fraction holds no rows".into()));
    }
    let plan = PreprocessPlan::fit(&ds.records[..train_end], &run.config.preprocess).map_err(stage)?;
    let frame = plan.apply(&ds);
    run.write(PLAN, &plan)?;
    run.write(FRAME, &frame)?;
    Ok((plan, frame))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelection {
    pub report: FeatureReport,
    /// Model input columns: the selected features plus the target, sorted.
    pub inputs: Vec<String>,
}

pub fn select(run: &mut Run) -> Result<FeatureSelection, PipelineError> {
    let frame: Frame = run.read(FRAME)?;
    let plan: PreprocessPlan = run.read(PLAN)?;
    let (train_end, _) = run.row_split(frame.rows());
    let report = select_features(&frame.slice_rows(0..train_end), &plan.target, &run.config.features).map_err(stage)?;
    let mut inputs = report.final_features.clone();
    if !inputs.contains(&plan.target) {
        inputs.push(plan.target.clone());
    }
    inputs.sort();
    let sel = FeatureSelection { report, inputs };
    run.write(FEATURES, &sel)?;
    Ok(sel)
}

struct Prepared {
    plan: PreprocessPlan,
    frame: Frame,
    inputs: Vec<String>,
}

fn prepared(run: &mut Run) -> Result<Prepared, PipelineError> {
    let plan: PreprocessPlan = run.read(PLAN)?;
    let frame: Frame = run.read(FRAME)?;
    let sel: FeatureSelection = run.read(FEATURES)?;
    Ok(Prepared { plan, frame, inputs: sel.inputs })
}

fn windows(run: &Run, p: &Prepared) -> Result<WindowedSet, PipelineError> {
    let w = &run.config.windows;
    make_windows(&p.frame, &p.inputs, &p.plan.target, w.look_back, w.horizon, w.fractions).map_err(stage)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub source: String,
    pub learning_rate: f64,
    pub best_epoch: Option<usize>,
    pub best_val_mae: Option<f64>,
}

pub fn search(run: &mut Run) -> Result<ModelMeta, PipelineError> {
    let p = prepared(run)?;
    let data = windows(run, &p)?;
    let found = run_pipeline_search(&data, &run.config.space, &run.config.search, run.config.seed).map_err(stage)?;
    let model = ModelFile::new(&found.spec, &found.weights, p.inputs.clone(), p.plan.target.clone(), p.plan.fitted_on.clone());
    let meta = ModelMeta {
        source: "search".into(),
        learning_rate: found.learning_rate,
        best_epoch: found.final_trace.best_epoch,
        best_val_mae: found.final_trace.best_val_mae,
    };
    run.write_csv("search_trace.csv", &found.trace.to_csv())?;
    run.write_csv("train_trace.csv", &found.final_trace.to_csv())?;
    run.write_model(MODEL, &model)?;
    run.write(MODEL_META, &meta)?;
    Ok(meta)
}

/// Trains the fixed model from `config.train` on train+val with early stopping on val.
pub fn train_fixed(run: &mut Run) -> Result<ModelMeta, PipelineError> {
    let p = prepared(run)?;
    let data = windows(run, &p)?;
    let t = &run.config.train;
    let f = p.inputs.len();
    let spec = match t.architecture {
        Architecture::Direct => ModelSpec::direct(f, data.target_index, t.units, data.look_back, data.horizon),
        Architecture::EncoderDecoder => ModelSpec::encoder_decoder(
            f,
            data.target_index,
            t.encoder_layers,
            t.decoder_layers,
            t.units,
            t.dense_units.clone(),
            t.dropout,
            data.look_back,
            data.horizon,
        ),
    };
    let cfg = TrainConfig {
        learning_rate: t.learning_rate,
        batch_size: t.batch_size,
        max_epochs: t.max_epochs,
        patience: t.patience,
        teacher_forcing: t.teacher_forcing,
    };
    let (weights, trace) = train(&spec, &data.train_val::<f64>(), Some(&data.part::<f64>(Split::Val)), &cfg, run.config.seed).map_err(stage)?;
    let model = ModelFile::new(&spec, &weights, p.inputs.clone(), p.plan.target.clone(), p.plan.fitted_on.clone());
    let meta = ModelMeta { source: "train".into(), learning_rate: t.learning_rate, best_epoch: trace.best_epoch, best_val_mae: trace.best_val_mae };
    run.write_csv("train_trace.csv", &trace.to_csv())?;
    run.write_model(MODEL, &model)?;
    run.write(MODEL_META, &meta)?;
    Ok(meta)
}

/// Scores the saved model on the test split.
pub fn evaluate(run: &mut Run) -> Result<MetricsReport, PipelineError> {
    let model = run.read_model()?;
    let p = prepared(run)?;
    if model.features != p.inputs || model.plan_fingerprint != p.plan.fitted_on {
        return Err(PipelineError::Stage("model was trained on different features or preprocessing".into()));
    }
    let data = windows(run, &p)?;
    let weights = model.weights::<f64>().map_err(stage)?;
    let s = score(&model.spec, &weights, &data.part::<f64>(Split::Test), &p.plan.target_normalizer(), run.config.compare.epsilon_kbps).map_err(stage)?;
    let mut report = MetricsReport::default();
    let tag = run.store.read_json::<ModelMeta>(MODEL_META).map(|m| m.source).unwrap_or_else(|_| "model".into());
    report.push(&run.config.dataset_tag.clone(), &tag, data.look_back, data.horizon, s, run.config.seed);
    run.write_csv(METRICS_CSV, &report.to_csv())?;
    run.write(METRICS_JSON, &report)?;
    Ok(report)
}

/// Baselines against the searched model over `config.seeds`.
pub fn compare(run: &mut Run) -> Result<MetricsReport, PipelineError> {
    let p = prepared(run)?;
    let data = windows(run, &p)?;
    let seeds = run.config.seeds.clone();
    let mut cfg = run.config.compare.clone();
    cfg.space = run.config.space.clone();
    cfg.search = run.config.search.clone();
    let out = compare_models(&data, &p.plan.target_normalizer(), &run.config.dataset_tag.clone(), &seeds, &cfg).map_err(stage)?;
    run.write_csv("comparison.csv", &out.report.to_csv())?;
    run.write("comparison.json", &out.report)?;
    run.write_plain("comparison.dat", &out.report.gnuplot_models())?;
    // wall times change run to run, so they go to the manifest directory only
    run.store.write_text("comparison_timings.csv", &timings_csv(&out.timings))?;
    Ok(out.report)
}

pub fn sweep(run: &mut Run) -> Result<(MetricsReport, MetricsReport), PipelineError> {
    let p = prepared(run)?;
    let s = run.config.sweep.clone();
    let tag = run.config.dataset_tag.clone();
    let seeds = run.config.seeds.clone();
    let norm = p.plan.target_normalizer();
    let step = run.config.ingest.resample_period_s.max(1) as f64;
    let lb = sweep_lookback(&p.frame, &p.inputs, &p.plan.target, &norm, &tag, &s.look_backs, s.fixed_horizon, &seeds, &s.model).map_err(stage)?;
    let hz = sweep_horizon(&p.frame, &p.inputs, &p.plan.target, &norm, &tag, s.fixed_look_back, &s.horizons, &seeds, &s.model).map_err(stage)?;
    run.write_csv("sweep_lookback.csv", &lb.report.to_csv())?;
    run.write("sweep_lookback.json", &lb.report)?;
    run.write_plain("sweep_lookback.dat", &lb.report.gnuplot(false, step))?;
    run.write_csv("sweep_horizon.csv", &hz.report.to_csv())?;
    run.write("sweep_horizon.json", &hz.report)?;
    run.write_plain("sweep_horizon.dat", &hz.report.gnuplot(true, step))?;
    let mut t = lb.timings;
    t.extend(hz.timings);
    run.store.write_text("sweep_timings.csv", &timings_csv(&t))?;
    Ok((lb.report, hz.report))
}

/// `scale=0.5,start=14m,len=10m`; `offset=` replaces `scale=`, `len` is optional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InjectSpec {
    pub segment: DriftSegment,
    pub transform: DriftTransform,
}

fn parse_seconds(v: &str) -> Result<i64, PipelineError> {
    let bad = || PipelineError::Config(format!("bad duration '{v}'"));
    let (num, mult) = match v.chars().last() {
        Some('m') => (&v[..v.len() - 1], 60.0),
        Some('h') => (&v[..v.len() - 1], 3600.0),
        Some('s') => (&v[..v.len() - 1], 1.0),
        _ => (v, 1.0),
    };
    let x: f64 = num.parse().map_err(|_| bad())?;
    Ok((x * mult).round() as i64)
}

impl std::str::FromStr for InjectSpec {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut transform = None;
        let mut start = None;
        let mut len = None;
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| PipelineError::Config(format!("expected key=value, got '{part}'")))?;
            let num = || v.parse::<f64>().map_err(|_| PipelineError::Config(format!("bad number '{v}'")));
            match k {
                "scale" => transform = Some(DriftTransform::Scale(num()?)),
                "offset" => transform = Some(DriftTransform::Offset(num()?)),
                "start" => start = Some(parse_seconds(v)?),
                "len" | "length" => len = Some(parse_seconds(v)?),
                _ => return Err(PipelineError::Config(format!("unknown injection key '{k}'"))),
            }
        }
        Ok(InjectSpec {
            segment: DriftSegment { start_s: start.ok_or_else(|| PipelineError::Config("injection needs start=".into()))?, length_s: len },
            transform: transform.ok_or_else(|| PipelineError::Config("injection needs scale= or offset=".into()))?,
        })
    }
}

pub fn inject(run: &mut Run, spec: InjectSpec) -> Result<InjectionManifest, PipelineError> {
    let ds: SessionDataset = run.read(DATASET)?;
    let (out, manifest) = inject_drift(&ds, spec.segment, spec.transform).map_err(stage)?;
    run.write("dataset_drifted.json", &out)?;
    run.write("injection_manifest.json", &manifest)?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorOutput {
    pub initial_baseline: f64,
    pub stream_rows: usize,
    pub report: MonitorReport,
}

/// Replays the test rows (optionally drifted) against the saved model.
/// The initial baseline is the model's replay MAE on the validation rows.
pub fn monitor(run: &mut Run, inject: Option<InjectSpec>) -> Result<MonitorOutput, PipelineError> {
    let model = run.read_model()?;
    let meta: ModelMeta = run.read(MODEL_META)?;
    let plan: PreprocessPlan = run.read(PLAN)?;
    let ds: SessionDataset = run.read(DATASET)?;
    let (train_end, val_end) = run.row_split(ds.len());
    let slice = |lo: usize, hi: usize| {
        let mut d = ds.clone();
        d.records = ds.records[lo..hi].to_vec();
        d.segments = ds.segments.iter().filter_map(|s| {
            let (a, b) = (s.start.max(lo), s.end.min(hi));
            (a < b).then(|| (a - lo)..(b - lo))
        })
        .collect();
        d
    };
    let val_ds = slice(train_end, val_end);
    let mut stream_ds = slice(val_end, ds.len());
    if stream_ds.is_empty() || val_ds.is_empty() {
        return Err(PipelineError::Stage("validation or test rows are empty".into()));
    }
    if let Some(spec) = inject {
        let (d, manifest) = inject_drift(&stream_ds, spec.segment, spec.transform).map_err(stage)?;
        stream_ds = d;
        run.write("injection_manifest.json", &manifest)?;
    }
    let weights = model.weights::<f64>().map_err(stage)?;
    let to_stream = |d: &SessionDataset| Stream::from_frame(&plan.apply(d), &model.features, &model.target).map_err(stage);
    let baseline = replay_mae(&model.spec, &weights, &to_stream(&val_ds)?, 0, i64::MAX).map_err(stage)?;
    let stream = to_stream(&stream_ds)?;
    let m = &run.config.monitor;
    let mut state = DriftMonitorState::new(baseline);
    state.rel_margin = m.rel_margin;
    state.check_period = m.check_period;
    state.window_size = m.window_size;
    state.adaptation = m.adaptation;
    let (report, adapted) = run_monitor(&model.spec, weights, &stream, &mut state, meta.learning_rate, run.config.seed).map_err(stage)?;
    run.write_csv("monitor_report.csv", &report.to_csv())?;
    let out = MonitorOutput { initial_baseline: baseline, stream_rows: stream.len(), report };
    run.write("monitor_summary.json", &out)?;
    let adapted_model = ModelFile::new(&model.spec, &adapted, model.features.clone(), model.target.clone(), model.plan_fingerprint.clone());
    run.write_model("model_adapted.json", &adapted_model)?;
    Ok(out)
}
