//! Benchmark configuration (TOML). Every knob defaults to the value the
//! reference study settled on; see `BenchConfig::default`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::anfis::AnfisTrainConfig;
use crate::data::{ScaleMode, SplitRatios, N_OUTPUTS};
use crate::error::{Error, Result};
use crate::hmc::HmcConfig;
use crate::lssvm::LsSvmParams;
use crate::membership::MfFamily;
use crate::mlp::TrainConfig;
use crate::synth::SyntheticSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Mlp,
    Rbf,
    CommitteeMlp,
    CommitteeRbf,
    BaggingMlp,
    BaggingRbf,
    BayesianMlp,
    Lssvm,
    Anfis,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Mlp,
        Method::Rbf,
        Method::CommitteeMlp,
        Method::CommitteeRbf,
        Method::BaggingMlp,
        Method::BaggingRbf,
        Method::BayesianMlp,
        Method::Lssvm,
        Method::Anfis,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Mlp => "mlp",
            Method::Rbf => "rbf",
            Method::CommitteeMlp => "committee-mlp",
            Method::CommitteeRbf => "committee-rbf",
            Method::BaggingMlp => "bagging-mlp",
            Method::BaggingRbf => "bagging-rbf",
            Method::BayesianMlp => "bayesian-mlp",
            Method::Lssvm => "lssvm",
            Method::Anfis => "anfis",
        }
    }

    /// Stable index used to derive the method's random stream.
    pub fn stream_id(&self) -> u64 {
        Method::ALL.iter().position(|m| m == self).expect("listed") as u64
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config {
                field: "method".into(),
                msg: format!(
                    "unknown method {s:?}; expected one of {}",
                    Method::ALL.map(|m| m.name()).join(", ")
                ),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// CSV file with 8 columns. When absent the synthetic generator is used.
    pub path: Option<PathBuf>,
    pub delimiter: char,
    pub scale_mode: ScaleMode,
    pub synthetic: SyntheticSpec,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            path: None,
            delimiter: ',',
            scale_mode: ScaleMode::FullDataset,
            synthetic: SyntheticSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpSection {
    pub hidden: usize,
    pub max_cycles: usize,
    pub weight_decay: f64,
    pub patience: usize,
    pub eval_every: usize,
}

impl Default for MlpSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        MlpSection {
            hidden: 8,
            max_cycles: t.max_cycles,
            weight_decay: t.weight_decay,
            patience: t.patience,
            eval_every: t.eval_every,
        }
    }
}

impl MlpSection {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            max_cycles: self.max_cycles,
            weight_decay: self.weight_decay,
            patience: self.patience,
            eval_every: self.eval_every,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RbfSection {
    pub centers: usize,
    /// Iteration cap of the k-means stage.
    pub kmeans_iters: usize,
}

impl Default for RbfSection {
    fn default() -> Self {
        RbfSection {
            centers: 30,
            kmeans_iters: 150,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommitteeSection {
    pub members: usize,
}

impl Default for CommitteeSection {
    fn default() -> Self {
        CommitteeSection { members: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BayesianSection {
    pub hidden: usize,
    pub alpha: f64,
    pub beta: f64,
    pub step_size: f64,
    pub leapfrog_steps: usize,
    pub burn_in: usize,
    pub retained: usize,
    /// SCG cycles used to place the chain's starting point.
    pub init_cycles: usize,
}

impl Default for BayesianSection {
    fn default() -> Self {
        let h = HmcConfig::default();
        BayesianSection {
            hidden: 8,
            alpha: 0.01,
            beta: 30.0,
            step_size: h.step_size,
            leapfrog_steps: h.leapfrog_steps,
            burn_in: h.burn_in,
            retained: h.retained,
            init_cycles: 240,
        }
    }
}

impl BayesianSection {
    pub fn hmc_config(&self, seed: u64) -> HmcConfig {
        HmcConfig {
            step_size: self.step_size,
            leapfrog_steps: self.leapfrog_steps,
            burn_in: self.burn_in,
            retained: self.retained,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LsSvmSection {
    /// Per-output regularisation constants.
    pub c: Vec<f64>,
    /// Per-output Gaussian kernel widths σ².
    pub sigma2: Vec<f64>,
    /// Pick (C, σ²) per output by validation grid search instead.
    pub tune: bool,
    pub c_grid: Vec<f64>,
    pub sigma2_grid: Vec<f64>,
}

impl Default for LsSvmSection {
    fn default() -> Self {
        LsSvmSection {
            c: vec![10.0, 1.0, 10.0, 10.0],
            sigma2: vec![1.0, 1.0, 10.0, 0.1],
            tune: false,
            c_grid: vec![0.1, 1.0, 10.0, 100.0],
            sigma2_grid: vec![0.1, 1.0, 10.0],
        }
    }
}

impl LsSvmSection {
    pub fn params(&self) -> Vec<LsSvmParams> {
        self.c
            .iter()
            .zip(&self.sigma2)
            .map(|(&c, &sigma2)| LsSvmParams { c, sigma2 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnfisSection {
    pub mfs_per_input: usize,
    /// Membership family per output.
    pub families: Vec<MfFamily>,
    /// Training epochs per output.
    pub epochs: Vec<usize>,
    pub step_size: f64,
    pub step_increase: f64,
    pub step_decrease: f64,
}

impl Default for AnfisSection {
    fn default() -> Self {
        let t = AnfisTrainConfig::default();
        AnfisSection {
            mfs_per_input: 2,
            families: vec![
                MfFamily::PiCurve,
                MfFamily::PiCurve,
                MfFamily::SigmoidDifference,
                MfFamily::PiCurve,
            ],
            epochs: vec![50, 60, 100, 120],
            step_size: t.step_size,
            step_increase: t.step_increase,
            step_decrease: t.step_decrease,
        }
    }
}

impl AnfisSection {
    pub fn per_output(&self) -> Vec<(MfFamily, AnfisTrainConfig)> {
        self.families
            .iter()
            .zip(&self.epochs)
            .map(|(&f, &epochs)| {
                (
                    f,
                    AnfisTrainConfig {
                        epochs,
                        step_size: self.step_size,
                        step_increase: self.step_increase,
                        step_decrease: self.step_decrease,
                    },
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub methods: Vec<Method>,
    pub data: DataConfig,
    pub split: SplitRatios,
    pub mlp: MlpSection,
    pub rbf: RbfSection,
    pub committee: CommitteeSection,
    pub bayesian: BayesianSection,
    pub lssvm: LsSvmSection,
    pub anfis: AnfisSection,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            seed: 0,
            out_dir: PathBuf::from("out"),
            methods: Method::ALL.to_vec(),
            data: DataConfig::default(),
            split: SplitRatios::default(),
            mlp: MlpSection::default(),
            rbf: RbfSection::default(),
            committee: CommitteeSection::default(),
            bayesian: BayesianSection::default(),
            lssvm: LsSvmSection::default(),
            anfis: AnfisSection::default(),
        }
    }
}

fn field(name: &str, r: Result<()>) -> Result<()> {
    r.map_err(|e| match e {
        Error::InvalidParam(msg) => Error::Config {
            field: name.into(),
            msg,
        },
        other => other,
    })
}

fn require(name: &str, ok: bool, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config {
            field: name.into(),
            msg: msg.into(),
        })
    }
}

fn positive_list(name: &str, v: &[f64]) -> Result<()> {
    for (i, x) in v.iter().enumerate() {
        require(&format!("{name}[{i}]"), *x > 0.0 && x.is_finite(), "must be positive")?;
    }
    Ok(())
}

impl BenchConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: BenchConfig = toml::from_str(s).map_err(|e| Error::Config {
            field: e.span().map_or_else(|| "<file>".into(), |sp| locate_key(s, sp.start)),
            msg: e.message().to_string(),
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }

    /// Checks every knob against its module's preconditions. Errors carry the
    /// dotted path of the offending field.
    pub fn validate(&self) -> Result<()> {
        require("methods", !self.methods.is_empty(), "at least one method is required")?;
        if self.data.path.is_none() {
            field("data.synthetic", self.data.synthetic.validate())?;
        }
        field("split", self.split.validate())?;

        let m = &self.mlp;
        require("mlp.hidden", m.hidden > 0, "must be at least 1")?;
        field("mlp", m.train_config().validate())?;

        require("rbf.centers", self.rbf.centers > 0, "must be at least 1")?;
        require("rbf.kmeans_iters", self.rbf.kmeans_iters > 0, "must be at least 1")?;
        require("committee.members", self.committee.members > 0, "must be at least 1")?;

        let b = &self.bayesian;
        require("bayesian.hidden", b.hidden > 0, "must be at least 1")?;
        require("bayesian.alpha", b.alpha > 0.0 && b.alpha.is_finite(), "must be positive")?;
        require("bayesian.beta", b.beta > 0.0 && b.beta.is_finite(), "must be positive")?;
        require("bayesian.step_size", b.step_size > 0.0 && b.step_size.is_finite(), "must be positive")?;
        require("bayesian.leapfrog_steps", b.leapfrog_steps > 0, "must be at least 1")?;
        require("bayesian.retained", b.retained > 0, "must be at least 1")?;

        let l = &self.lssvm;
        if l.tune {
            require("lssvm.c_grid", !l.c_grid.is_empty(), "must not be empty")?;
            require("lssvm.sigma2_grid", !l.sigma2_grid.is_empty(), "must not be empty")?;
            positive_list("lssvm.c_grid", &l.c_grid)?;
            positive_list("lssvm.sigma2_grid", &l.sigma2_grid)?;
        } else {
            require("lssvm.c", l.c.len() == N_OUTPUTS, "needs one value per output")?;
            require("lssvm.sigma2", l.sigma2.len() == N_OUTPUTS, "needs one value per output")?;
            positive_list("lssvm.c", &l.c)?;
            positive_list("lssvm.sigma2", &l.sigma2)?;
        }

        let a = &self.anfis;
        require("anfis.mfs_per_input", a.mfs_per_input > 0, "must be at least 1")?;
        require("anfis.families", a.families.len() == N_OUTPUTS, "needs one family per output")?;
        require("anfis.epochs", a.epochs.len() == N_OUTPUTS, "needs one epoch count per output")?;
        for (p, (_, c)) in a.per_output().iter().enumerate() {
            field(&format!("anfis[{p}]"), c.validate())?;
        }
        Ok(())
    }
}

/// Best-effort `section.key` for a byte offset in a TOML document.
fn locate_key(src: &str, offset: usize) -> String {
    let mut section = String::new();
    let mut key = String::new();
    let mut pos = 0;
    for line in src.lines() {
        let t = line.trim();
        if t.starts_with('[') {
            section = t.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            key.clear();
        } else if let Some((k, _)) = t.split_once('=') {
            key = k.trim().to_string();
        }
        pos += line.len() + 1;
        if pos > offset {
            break;
        }
    }
    match (section.is_empty(), key.is_empty()) {
        (true, _) => key,
        (false, true) => section,
        (false, false) => format!("{section}.{key}"),
    }
}
