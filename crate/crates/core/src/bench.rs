//! Batch protocol: prepare data, train methods, evaluate, write reports and
//! plot data. Everything here reads and writes under `BenchConfig::out_dir`:
//!
//! ```text
//! prep/      manifest.json train.csv validation.csv test.csv scaling.json
//! models/M/  manifest.json history.json + model files
//! bench/     report.json timings.json report.txt predictions/M.csv
//! ```
//!
//! `report.json` and all model files are deterministic for a fixed config;
//! wall-clock timings live in `timings.json` and the rendered table only.

use std::cell::RefCell;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::anfis::{anfis_train_multi, AnfisModel, AnfisSet};
use crate::config::{BenchConfig, Method};
use crate::data::{load_dataset, prepare, Dataset, ScaleMode, SplitRatios, N_INPUTS};
use crate::ensemble::{bagging_train, Committee};
use crate::error::{Error, Result};
use crate::hmc::{hmc_sample, BayesianMlp, PosteriorEnsemble, PosteriorSpec};
use crate::lssvm::{grid_tune, lssvm_train_multi, LsSvmModel, LsSvmParams, MultiLsSvm};
use crate::metrics::{mse, render_table, EvalReport};
use crate::mlp::{train_scg, MlpModel, MlpShape, TrainConfig, TrainHistory};
use crate::model::Regressor;
use crate::rbf::{rbf_train_two_stage, RbfModel};
use crate::rng::RngStream;
use crate::synth::generate_synthetic;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_TRAINING: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Process exit code for an error: 2 config, 3 training, 4 io.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::InvalidParam(_) => EXIT_CONFIG,
        Error::Io { .. } | Error::Parse { .. } | Error::Schema { .. } | Error::Empty(_) | Error::Json(_) => EXIT_IO,
        _ => EXIT_TRAINING,
    }
}

pub const PREP_DIR: &str = "prep";
pub const MODELS_DIR: &str = "models";
pub const BENCH_DIR: &str = "bench";
pub const MANIFEST: &str = "manifest.json";

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_file(path, &s)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&s)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepManifest {
    pub source: String,
    pub rows_total: usize,
    pub removed: usize,
    pub kept: usize,
    pub seed: u64,
    pub ratios: SplitRatios,
    pub scale_mode: ScaleMode,
    pub train_rows: usize,
    pub validation_rows: usize,
    pub test_rows: usize,
    pub train: String,
    pub validation: String,
    pub test: String,
    pub scaling: String,
}

#[derive(Debug, Clone)]
pub struct PreparedSplit {
    pub manifest: PrepManifest,
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
}

/// Load, remove outliers, scale and split; writes everything under `prep/`.
pub fn cmd_prep(cfg: &BenchConfig) -> Result<PrepManifest> {
    cfg.validate()?;
    let (raw, source) = match &cfg.data.path {
        Some(p) => (load_dataset(p, cfg.data.delimiter)?, p.display().to_string()),
        None => {
            let s = cfg.data.synthetic;
            (
                generate_synthetic(&s)?,
                format!("synthetic(samples={}, noise={}, seed={})", s.samples, s.noise, s.seed),
            )
        }
    };
    let prepared = prepare(&raw, cfg.split, cfg.seed, cfg.data.scale_mode)?;
    let dir = cfg.out_dir.join(PREP_DIR);
    let split = &prepared.split;
    write_file(&dir.join("train.csv"), &split.train.to_csv())?;
    write_file(&dir.join("validation.csv"), &split.validation.to_csv())?;
    write_file(&dir.join("test.csv"), &split.test.to_csv())?;
    write_json(&dir.join("scaling.json"), &prepared.params)?;
    let manifest = PrepManifest {
        source,
        rows_total: raw.len(),
        removed: prepared.removed,
        kept: prepared.kept,
        seed: cfg.seed,
        ratios: cfg.split,
        scale_mode: cfg.data.scale_mode,
        train_rows: split.train.len(),
        validation_rows: split.validation.len(),
        test_rows: split.test.len(),
        train: "train.csv".into(),
        validation: "validation.csv".into(),
        test: "test.csv".into(),
        scaling: "scaling.json".into(),
    };
    write_json(&dir.join(MANIFEST), &manifest)?;
    log::info!("prepared {} rows ({} removed) into {}", manifest.kept, manifest.removed, dir.display());
    Ok(manifest)
}

pub fn load_prepared(out_dir: &Path) -> Result<PreparedSplit> {
    let dir = out_dir.join(PREP_DIR);
    let manifest: PrepManifest = read_json(&dir.join(MANIFEST))?;
    Ok(PreparedSplit {
        train: Dataset::read_csv(&dir.join(&manifest.train), N_INPUTS)?,
        validation: Dataset::read_csv(&dir.join(&manifest.validation), N_INPUTS)?,
        test: Dataset::read_csv(&dir.join(&manifest.test), N_INPUTS)?,
        manifest,
    })
}

/// Predicts the per-output training mean everywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanPredictor {
    pub n_in: usize,
    pub mean: Vec<f64>,
}

impl MeanPredictor {
    pub fn fit(train: &Dataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyInput("training set"));
        }
        let n = train.len() as f64;
        let mean = (0..train.n_out).map(|p| train.targets.iter().map(|t| t[p]).sum::<f64>() / n).collect();
        Ok(MeanPredictor { n_in: train.n_in, mean })
    }
}

impl Regressor for MeanPredictor {
    fn n_inputs(&self) -> usize {
        self.n_in
    }
    fn n_outputs(&self) -> usize {
        self.mean.len()
    }
    fn predict(&self, _: &[f64]) -> Result<Vec<f64>> {
        Ok(self.mean.clone())
    }
}

#[derive(Debug, Clone)]
pub enum TrainedModel {
    Mlp(MlpModel),
    Rbf(RbfModel),
    MlpCommittee(Committee<MlpModel>),
    RbfCommittee(Committee<RbfModel>),
    Bayesian(BayesianMlp),
    LsSvm(MultiLsSvm),
    Anfis(AnfisSet),
}

impl TrainedModel {
    fn inner(&self) -> &dyn Regressor {
        match self {
            TrainedModel::Mlp(m) => m,
            TrainedModel::Rbf(m) => m,
            TrainedModel::MlpCommittee(m) => m,
            TrainedModel::RbfCommittee(m) => m,
            TrainedModel::Bayesian(m) => m,
            TrainedModel::LsSvm(m) => m,
            TrainedModel::Anfis(m) => m,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            TrainedModel::Mlp(_) => "mlp",
            TrainedModel::Rbf(_) => "rbf",
            TrainedModel::MlpCommittee(_) => "mlp-committee",
            TrainedModel::RbfCommittee(_) => "rbf-committee",
            TrainedModel::Bayesian(_) => "bayesian-mlp",
            TrainedModel::LsSvm(_) => "lssvm",
            TrainedModel::Anfis(_) => "anfis",
        }
    }
}

impl Regressor for TrainedModel {
    fn n_inputs(&self) -> usize {
        self.inner().n_inputs()
    }
    fn n_outputs(&self) -> usize {
        self.inner().n_outputs()
    }
    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.inner().predict(x)
    }
}

/// A trained model plus its method-specific history.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub method: Method,
    pub model: TrainedModel,
    pub history: serde_json::Value,
}

fn mlp_member(data: &Dataset, validation: &Dataset, hidden: usize, tc: &TrainConfig, rng: &mut RngStream) -> Result<(MlpModel, TrainHistory)> {
    let shape = MlpShape::new(data.n_in, hidden, data.n_out)?;
    let init = MlpModel::init(shape, rng);
    train_scg(&init, data, validation, tc)
}

/// Trains one method on a prepared split. The method's random stream is
/// `substream(method.stream_id())` of the configured seed, so results do not
/// depend on which other methods run.
pub fn train_method(method: Method, cfg: &BenchConfig, split: &PreparedSplit) -> Result<TrainOutcome> {
    let root = RngStream::new(cfg.seed).substream(method.stream_id());
    let (train, validation) = (&split.train, &split.validation);
    let (model, history) = match method {
        Method::Mlp => {
            let (m, h) = mlp_member(train, validation, cfg.mlp.hidden, &cfg.mlp.train_config(), &mut root.clone())?;
            (TrainedModel::Mlp(m), serde_json::to_value(h)?)
        }
        Method::Rbf => {
            let fit = rbf_train_two_stage(train, cfg.rbf.centers, &mut root.clone(), cfg.rbf.kmeans_iters)?;
            let h = serde_json::json!({
                "kmeans_iterations": fit.kmeans_iterations,
                "regularized": fit.regularized,
                "normal_residual": fit.normal_residual,
                "residual_scale": fit.residual_scale,
            });
            (TrainedModel::Rbf(fit.model), h)
        }
        Method::CommitteeMlp | Method::BaggingMlp => {
            let hists = RefCell::new(Vec::new());
            let tc = cfg.mlp.train_config();
            let trainer = |d: &Dataset, r: &mut RngStream| {
                let (m, h) = mlp_member(d, validation, cfg.mlp.hidden, &tc, r)?;
                hists.borrow_mut().push(h);
                Ok(m)
            };
            let run = bagging_train(trainer, cfg.committee.members, train, &root, method == Method::BaggingMlp)?;
            let h = serde_json::json!({ "members": hists.into_inner(), "resamples": run.resamples });
            (TrainedModel::MlpCommittee(run.committee), h)
        }
        Method::CommitteeRbf | Method::BaggingRbf => {
            let info = RefCell::new(Vec::new());
            let trainer = |d: &Dataset, r: &mut RngStream| {
                let fit = rbf_train_two_stage(d, cfg.rbf.centers, r, cfg.rbf.kmeans_iters)?;
                info.borrow_mut().push(serde_json::json!({
                    "kmeans_iterations": fit.kmeans_iterations,
                    "regularized": fit.regularized,
                }));
                Ok(fit.model)
            };
            let run = bagging_train(trainer, cfg.committee.members, train, &root, method == Method::BaggingRbf)?;
            let h = serde_json::json!({ "members": info.into_inner(), "resamples": run.resamples });
            (TrainedModel::RbfCommittee(run.committee), h)
        }
        Method::BayesianMlp => {
            let b = &cfg.bayesian;
            let tc = TrainConfig {
                max_cycles: b.init_cycles.max(1),
                weight_decay: b.alpha / b.beta,
                ..cfg.mlp.train_config()
            };
            let (init, init_hist) = mlp_member(train, validation, b.hidden, &tc, &mut root.substream(0))?;
            let spec = PosteriorSpec::new(init.shape(), b.alpha, b.beta, train)?;
            let hmc = b.hmc_config(cfg.seed);
            let ens = hmc_sample(&spec, &hmc, &init.params(), &mut root.substream(1))?;
            let h = serde_json::json!({
                "init": init_hist,
                "accepted": ens.accepted,
                "proposed": ens.proposed,
                "acceptance_rate": ens.acceptance_rate,
                "energy_trace": ens.energy_trace,
            });
            let model = BayesianMlp {
                shape: init.shape(),
                alpha: b.alpha,
                beta: b.beta,
                ensemble: ens,
            };
            (TrainedModel::Bayesian(model), h)
        }
        Method::Lssvm => {
            let l = &cfg.lssvm;
            let (params, surfaces) = if l.tune {
                let mut params = Vec::with_capacity(train.n_out);
                let mut surfaces = Vec::with_capacity(train.n_out);
                for p in 0..train.n_out {
                    let t = grid_tune(&train.output(p), &validation.output(p), &l.sigma2_grid, &l.c_grid)?;
                    params.push(LsSvmParams {
                        c: t.best_c,
                        sigma2: t.best_sigma2,
                    });
                    surfaces.push(t.surface);
                }
                (params, Some(surfaces))
            } else {
                (l.params(), None)
            };
            let fits = lssvm_train_multi(train, &params)?;
            let h = serde_json::json!({
                "params": params,
                "residual": fits.iter().map(|f| f.residual).collect::<Vec<_>>(),
                "residual_scale": fits.iter().map(|f| f.residual_scale).collect::<Vec<_>>(),
                "tuning": surfaces,
            });
            let models = fits.into_iter().map(|f| f.model).collect();
            (TrainedModel::LsSvm(MultiLsSvm { models }), h)
        }
        Method::Anfis => {
            let a = &cfg.anfis;
            let (set, hists) = anfis_train_multi(&a.per_output(), a.mfs_per_input, train, validation)?;
            (TrainedModel::Anfis(set), serde_json::to_value(hists)?)
        }
    };
    Ok(TrainOutcome { method, model, history })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub method: Method,
    pub kind: String,
    pub n_inputs: usize,
    pub n_outputs: usize,
    pub files: Vec<String>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub extra: serde_json::Value,
}

/// Writes `manifest.json`, `history.json` and the model files into `dir`.
pub fn save_model(dir: &Path, outcome: &TrainOutcome) -> Result<ModelManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let model = &outcome.model;
    let mut extra = serde_json::Value::Null;
    let files: Vec<String> = match model {
        TrainedModel::Mlp(m) => {
            write_json(&dir.join("model.json"), m)?;
            vec!["model.json".into()]
        }
        TrainedModel::Rbf(m) => {
            write_json(&dir.join("model.json"), m)?;
            vec!["model.json".into()]
        }
        TrainedModel::MlpCommittee(c) => {
            extra = serde_json::json!({ "weights": c.weights });
            save_members(dir, &c.members)?
        }
        TrainedModel::RbfCommittee(c) => {
            extra = serde_json::json!({ "weights": c.weights });
            save_members(dir, &c.members)?
        }
        TrainedModel::Bayesian(b) => {
            let mut files = Vec::with_capacity(b.ensemble.samples.len());
            for (i, w) in b.ensemble.samples.iter().enumerate() {
                let name = format!("sample_{i:03}.json");
                write_json(&dir.join(&name), w)?;
                files.push(name);
            }
            let mut trace = String::from("trajectory,energy\n");
            for (i, e) in b.ensemble.energy_trace.iter().enumerate() {
                let _ = writeln!(trace, "{i},{e:?}");
            }
            write_file(&dir.join("energy_trace.csv"), &trace)?;
            extra = serde_json::json!({
                "shape": b.shape,
                "alpha": b.alpha,
                "beta": b.beta,
                "accepted": b.ensemble.accepted,
                "proposed": b.ensemble.proposed,
                "acceptance_rate": b.ensemble.acceptance_rate,
                "energy_trace": "energy_trace.csv",
            });
            files
        }
        TrainedModel::LsSvm(m) => save_members(dir, &m.models)?,
        TrainedModel::Anfis(m) => save_members(dir, &m.models)?,
    };
    let manifest = ModelManifest {
        method: outcome.method,
        kind: model.kind().into(),
        n_inputs: model.n_inputs(),
        n_outputs: model.n_outputs(),
        files,
        extra,
    };
    write_json(&dir.join(MANIFEST), &manifest)?;
    write_json(&dir.join("history.json"), &outcome.history)?;
    Ok(manifest)
}

fn save_members<T: Serialize>(dir: &Path, members: &[T]) -> Result<Vec<String>> {
    let mut files = Vec::with_capacity(members.len());
    for (i, m) in members.iter().enumerate() {
        let name = format!("member_{i:02}.json");
        write_json(&dir.join(&name), m)?;
        files.push(name);
    }
    Ok(files)
}

fn load_members<T: DeserializeOwned>(dir: &Path, files: &[String]) -> Result<Vec<T>> {
    files.iter().map(|f| read_json(&dir.join(f))).collect()
}

fn read_energy_trace(path: &Path) -> Result<Vec<f64>> {
    let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    s.lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.rsplit(',').next().and_then(|v| v.trim().parse().ok()).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: "bad energy value".into(),
            })
        })
        .collect()
}

pub fn load_model(dir: &Path) -> Result<TrainedModel> {
    let man: ModelManifest = read_json(&dir.join(MANIFEST))?;
    let extra = |key: &str| -> Result<serde_json::Value> {
        man.extra.get(key).cloned().ok_or_else(|| Error::Config {
            field: format!("{}.{key}", dir.join(MANIFEST).display()),
            msg: "missing manifest entry".into(),
        })
    };
    let weights: Option<Vec<f64>> = match man.extra.get("weights") {
        Some(v) => serde_json::from_value(v.clone())?,
        None => None,
    };
    let model = match man.kind.as_str() {
        "mlp" => {
            let m: MlpModel = read_json(&dir.join(&man.files[0]))?;
            m.validate()?;
            TrainedModel::Mlp(m)
        }
        "rbf" => {
            let m: RbfModel = read_json(&dir.join(&man.files[0]))?;
            m.validate()?;
            TrainedModel::Rbf(m)
        }
        "mlp-committee" => {
            let members: Vec<MlpModel> = load_members(dir, &man.files)?;
            TrainedModel::MlpCommittee(match weights {
                Some(w) => Committee::weighted(members, w)?,
                None => Committee::new(members)?,
            })
        }
        "rbf-committee" => {
            let members: Vec<RbfModel> = load_members(dir, &man.files)?;
            TrainedModel::RbfCommittee(match weights {
                Some(w) => Committee::weighted(members, w)?,
                None => Committee::new(members)?,
            })
        }
        "bayesian-mlp" => {
            let samples: Vec<Vec<f64>> = load_members(dir, &man.files)?;
            let shape: MlpShape = serde_json::from_value(extra("shape")?)?;
            let trace_file: String = serde_json::from_value(extra("energy_trace")?)?;
            let ensemble = PosteriorEnsemble {
                samples,
                accepted: serde_json::from_value(extra("accepted")?)?,
                proposed: serde_json::from_value(extra("proposed")?)?,
                acceptance_rate: serde_json::from_value(extra("acceptance_rate")?)?,
                energy_trace: read_energy_trace(&dir.join(trace_file))?,
            };
            TrainedModel::Bayesian(BayesianMlp {
                shape,
                alpha: serde_json::from_value(extra("alpha")?)?,
                beta: serde_json::from_value(extra("beta")?)?,
                ensemble,
            })
        }
        "lssvm" => {
            let models: Vec<LsSvmModel> = load_members(dir, &man.files)?;
            for m in &models {
                m.validate()?;
            }
            TrainedModel::LsSvm(MultiLsSvm { models })
        }
        "anfis" => {
            let models: Vec<AnfisModel> = load_members(dir, &man.files)?;
            for m in &models {
                m.validate()?;
            }
            TrainedModel::Anfis(AnfisSet { models })
        }
        other => {
            return Err(Error::Config {
                field: "kind".into(),
                msg: format!("unknown model kind {other:?} in {}", dir.display()),
            })
        }
    };
    Ok(model)
}

pub fn model_dir(cfg: &BenchConfig, method: Method) -> PathBuf {
    cfg.out_dir.join(MODELS_DIR).join(method.name())
}

/// Trains one method on the prepared data and persists it.
pub fn cmd_train(cfg: &BenchConfig, method: Method) -> Result<ModelManifest> {
    cfg.validate()?;
    let split = load_prepared(&cfg.out_dir)?;
    let outcome = train_method(method, cfg, &split)?;
    save_model(&model_dir(cfg, method), &outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test: Option<EvalReport>,
    /// Test MSE over the mean-predictor test MSE.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub seed: u64,
    pub source: String,
    pub train_rows: usize,
    pub validation_rows: usize,
    pub test_rows: usize,
    pub baseline: EvalReport,
    pub methods: Vec<MethodResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodTiming {
    pub method: Method,
    pub train_seconds: f64,
    pub execute_seconds: f64,
}

fn predictions_csv(preds: &[Vec<f64>]) -> String {
    let m = preds.first().map_or(0, |p| p.len());
    let mut s = (1..=m).map(|p| format!("y{p}")).collect::<Vec<_>>().join(",");
    s.push('\n');
    for row in preds {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Reads a predictions file written by the bench.
pub fn read_predictions(path: &Path) -> Result<Vec<Vec<f64>>> {
    let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    s.lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.split(',')
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|_| Error::Parse {
                        path: path.to_path_buf(),
                        line: i + 1,
                        msg: format!("bad number {v:?}"),
                    })
                })
                .collect()
        })
        .collect()
}

fn run_one(method: Method, cfg: &BenchConfig, split: &PreparedSplit, bench_dir: &Path) -> Result<(EvalReport, MethodTiming)> {
    let t0 = Instant::now();
    let outcome = train_method(method, cfg, split)?;
    let train_seconds = t0.elapsed().as_secs_f64();
    save_model(&model_dir(cfg, method), &outcome)?;
    let t1 = Instant::now();
    let preds = outcome.model.predict_all(&split.test.inputs)?;
    let execute_seconds = t1.elapsed().as_secs_f64();
    let report = mse(&preds, &split.test.targets)?;
    write_file(&bench_dir.join("predictions").join(format!("{}.csv", method.name())), &predictions_csv(&preds))?;
    Ok((
        report,
        MethodTiming {
            method,
            train_seconds,
            execute_seconds,
        },
    ))
}

/// Trains and evaluates every configured method on the prepared split. A
/// failing method is recorded in the report and the others still run.
pub fn cmd_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let split = load_prepared(&cfg.out_dir)?;
    let bench_dir = cfg.out_dir.join(BENCH_DIR);
    let baseline_model = MeanPredictor::fit(&split.train)?;
    let baseline = mse(&baseline_model.predict_all(&split.test.inputs)?, &split.test.targets)?;
    let mut results = Vec::with_capacity(cfg.methods.len());
    let mut timings = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        log::info!("bench: {method}");
        match run_one(method, cfg, &split, &bench_dir) {
            Ok((report, timing)) => {
                results.push(MethodResult {
                    method,
                    baseline_ratio: Some(report.total_mse / baseline.total_mse),
                    test: Some(report),
                    error: None,
                });
                timings.push(timing);
            }
            Err(e) => {
                log::error!("{method}: {e}");
                results.push(MethodResult {
                    method,
                    test: None,
                    baseline_ratio: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    let report = BenchReport {
        seed: cfg.seed,
        source: split.manifest.source.clone(),
        train_rows: split.train.len(),
        validation_rows: split.validation.len(),
        test_rows: split.test.len(),
        baseline: baseline.clone(),
        methods: results,
    };
    write_json(&bench_dir.join("report.json"), &report)?;
    write_json(&bench_dir.join("timings.json"), &timings)?;
    let mut rows = vec![("mean-predictor".to_string(), baseline)];
    for r in &report.methods {
        if let Some(t) = &r.test {
            let mut t = t.clone();
            if let Some(tm) = timings.iter().find(|tm| tm.method == r.method) {
                t.train_seconds = tm.train_seconds;
                t.execute_seconds = tm.execute_seconds;
            }
            rows.push((r.method.name().to_string(), t));
        }
    }
    let mut table = render_table(&rows);
    for r in &report.methods {
        if let Some(e) = &r.error {
            let _ = writeln!(table, "{}: FAILED: {e}", r.method);
        }
    }
    write_file(&bench_dir.join("report.txt"), &table)?;
    Ok(report)
}

pub const DEFAULT_PLOT_POINTS: usize = 60;

/// `(output, index, actual, predicted)` rows for the first `n` test samples of
/// every output.
pub fn plot_rows(model: &dyn Regressor, test: &Dataset, n: usize) -> Result<Vec<(usize, usize, f64, f64)>> {
    if n == 0 || n > test.len() {
        return Err(Error::param(format!("plot point count {n} must be in 1..={}", test.len())));
    }
    let preds = model.predict_all(&test.inputs[..n])?;
    let mut rows = Vec::with_capacity(n * test.n_out);
    for p in 0..test.n_out {
        for (i, (y, t)) in preds.iter().zip(&test.targets).enumerate() {
            rows.push((p + 1, i + 1, t[p], y[p]));
        }
    }
    Ok(rows)
}

/// Writes plot-ready CSV for a saved model and a test file.
pub fn cmd_plot_data(model_dir: &Path, test_csv: &Path, n: usize, out: &Path) -> Result<usize> {
    let model = load_model(model_dir)?;
    let test = Dataset::read_csv(test_csv, model.n_inputs())?;
    let rows = plot_rows(&model, &test, n)?;
    let mut s = String::from("output,index,actual,predicted\n");
    for (p, i, a, y) in &rows {
        let _ = writeln!(s, "{p},{i},{a:?},{y:?}");
    }
    write_file(out, &s)?;
    Ok(rows.len())
}

/// Writes a synthetic raw dataset as CSV.
pub fn cmd_synth(spec: &crate::synth::SyntheticSpec, out: &Path) -> Result<usize> {
    let raw = generate_synthetic(spec)?;
    write_file(out, &raw.to_csv())?;
    Ok(raw.len())
}
