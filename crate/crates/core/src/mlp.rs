//! Two-layer perceptron: tanh hidden units, linear outputs.
//!
//! Parameters are handled as one flat vector laid out as
//! `[W1 (hidden × in, row-major), b1, W2 (out × hidden, row-major), b2]`.
//! The optimizer and the HMC sampler both work on that vector directly.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{check_len, mse_on, Regressor};
use crate::optim::{Objective, Scg, ScgOptions, StepOutcome};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpShape {
    pub n_in: usize,
    pub n_hidden: usize,
    pub n_out: usize,
}

impl MlpShape {
    pub fn new(n_in: usize, n_hidden: usize, n_out: usize) -> Result<Self> {
        if n_in == 0 || n_hidden == 0 || n_out == 0 {
            return Err(Error::param(format!(
                "MLP layer sizes must be positive, got {n_in}-{n_hidden}-{n_out}"
            )));
        }
        Ok(MlpShape {
            n_in,
            n_hidden,
            n_out,
        })
    }

    pub fn n_params(&self) -> usize {
        self.n_hidden * (self.n_in + 1) + self.n_out * (self.n_hidden + 1)
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.n_hidden * self.n_in;
        let w2 = b1 + self.n_hidden;
        let b2 = w2 + self.n_out * self.n_hidden;
        (b1, w2, b2)
    }

    /// Forward pass on a flat parameter vector; fills `hidden` with tanh
    /// activations and `out` with the linear outputs.
    pub fn forward_into(&self, params: &[f64], x: &[f64], hidden: &mut [f64], out: &mut [f64]) {
        let (ob1, ow2, ob2) = self.offsets();
        let w1 = &params[..ob1];
        let b1 = &params[ob1..ow2];
        let w2 = &params[ow2..ob2];
        let b2 = &params[ob2..];
        for j in 0..self.n_hidden {
            let row = &w1[j * self.n_in..(j + 1) * self.n_in];
            let a: f64 = b1[j] + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
            hidden[j] = a.tanh();
        }
        for k in 0..self.n_out {
            let row = &w2[k * self.n_hidden..(k + 1) * self.n_hidden];
            out[k] = b2[k] + row.iter().zip(hidden.iter()).map(|(w, z)| w * z).sum::<f64>();
        }
    }

    /// `E_D = ½ Σ_n ‖y(xⁿ) − tⁿ‖²` and its gradient, by backpropagation.
    pub fn data_error_and_grad(&self, params: &[f64], data: &Dataset) -> (f64, Vec<f64>) {
        let (ob1, ow2, ob2) = self.offsets();
        let mut grad = vec![0.0; self.n_params()];
        let mut hidden = vec![0.0; self.n_hidden];
        let mut out = vec![0.0; self.n_out];
        let mut delta_out = vec![0.0; self.n_out];
        let mut err = 0.0;
        let w2 = &params[ow2..ob2];
        for (x, t) in data.inputs.iter().zip(&data.targets) {
            self.forward_into(params, x, &mut hidden, &mut out);
            for k in 0..self.n_out {
                let d = out[k] - t[k];
                delta_out[k] = d;
                err += 0.5 * d * d;
                grad[ob2 + k] += d;
                let g = &mut grad[ow2 + k * self.n_hidden..ow2 + (k + 1) * self.n_hidden];
                for (gj, zj) in g.iter_mut().zip(&hidden) {
                    *gj += d * zj;
                }
            }
            for j in 0..self.n_hidden {
                let back: f64 = (0..self.n_out)
                    .map(|k| w2[k * self.n_hidden + j] * delta_out[k])
                    .sum();
                let dh = (1.0 - hidden[j] * hidden[j]) * back;
                grad[ob1 + j] += dh;
                let g = &mut grad[j * self.n_in..(j + 1) * self.n_in];
                for (gi, xi) in g.iter_mut().zip(x) {
                    *gi += dh * xi;
                }
            }
        }
        (err, grad)
    }

    pub fn data_error(&self, params: &[f64], data: &Dataset) -> f64 {
        let mut hidden = vec![0.0; self.n_hidden];
        let mut out = vec![0.0; self.n_out];
        let mut err = 0.0;
        for (x, t) in data.inputs.iter().zip(&data.targets) {
            self.forward_into(params, x, &mut hidden, &mut out);
            err += out.iter().zip(t).map(|(y, t)| 0.5 * (y - t) * (y - t)).sum::<f64>();
        }
        err
    }

    pub fn check_data(&self, data: &Dataset) -> Result<()> {
        if data.is_empty() {
            return Err(Error::EmptyInput("batch"));
        }
        check_len("batch inputs", data.n_in, self.n_in)?;
        check_len("batch targets", data.n_out, self.n_out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub n_in: usize,
    pub n_hidden: usize,
    pub n_out: usize,
    pub hidden_activation: String,
    pub output_activation: String,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl MlpModel {
    pub fn zeros(shape: MlpShape) -> Self {
        Self::from_params(shape, &vec![0.0; shape.n_params()]).expect("length matches shape")
    }

    /// Weights drawn uniformly with standard deviation `1/sqrt(fan_in)`, where
    /// the fan-in counts the bias input.
    pub fn init(shape: MlpShape, rng: &mut RngStream) -> Self {
        let mut draw = |fan_in: usize, n: usize| -> Vec<f64> {
            let half = (3.0 / fan_in as f64).sqrt();
            (0..n).map(|_| rng.random_range(-half..half)).collect()
        };
        let w1 = draw(shape.n_in + 1, shape.n_hidden * shape.n_in);
        let b1 = draw(shape.n_in + 1, shape.n_hidden);
        let w2 = draw(shape.n_hidden + 1, shape.n_out * shape.n_hidden);
        let b2 = draw(shape.n_hidden + 1, shape.n_out);
        MlpModel {
            n_in: shape.n_in,
            n_hidden: shape.n_hidden,
            n_out: shape.n_out,
            hidden_activation: "tanh".into(),
            output_activation: "linear".into(),
            w1,
            b1,
            w2,
            b2,
        }
    }

    pub fn from_params(shape: MlpShape, params: &[f64]) -> Result<Self> {
        check_len("MLP parameter vector", params.len(), shape.n_params())?;
        let (ob1, ow2, ob2) = shape.offsets();
        Ok(MlpModel {
            n_in: shape.n_in,
            n_hidden: shape.n_hidden,
            n_out: shape.n_out,
            hidden_activation: "tanh".into(),
            output_activation: "linear".into(),
            w1: params[..ob1].to_vec(),
            b1: params[ob1..ow2].to_vec(),
            w2: params[ow2..ob2].to_vec(),
            b2: params[ob2..].to_vec(),
        })
    }

    pub fn shape(&self) -> MlpShape {
        MlpShape {
            n_in: self.n_in,
            n_hidden: self.n_hidden,
            n_out: self.n_out,
        }
    }

    pub fn n_params(&self) -> usize {
        self.shape().n_params()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_params());
        p.extend_from_slice(&self.w1);
        p.extend_from_slice(&self.b1);
        p.extend_from_slice(&self.w2);
        p.extend_from_slice(&self.b2);
        p
    }

    /// Checks array lengths and activation labels after deserialization.
    pub fn validate(&self) -> Result<()> {
        let s = MlpShape::new(self.n_in, self.n_hidden, self.n_out)?;
        check_len("w1", self.w1.len(), s.n_hidden * s.n_in)?;
        check_len("b1", self.b1.len(), s.n_hidden)?;
        check_len("w2", self.w2.len(), s.n_out * s.n_hidden)?;
        check_len("b2", self.b2.len(), s.n_out)?;
        if self.hidden_activation != "tanh" || self.output_activation != "linear" {
            return Err(Error::param(format!(
                "unsupported activations {}/{}",
                self.hidden_activation, self.output_activation
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("MLP input", x.len(), self.n_in)?;
        let mut hidden = vec![0.0; self.n_hidden];
        let mut out = vec![0.0; self.n_out];
        self.shape().forward_into(&self.params(), x, &mut hidden, &mut out);
        Ok(out)
    }

    /// `½ Σ_n ‖y(xⁿ) − tⁿ‖² + (α/2) Σ_i w_i²`.
    pub fn loss(&self, batch: &Dataset, alpha: f64) -> Result<f64> {
        let shape = self.shape();
        shape.check_data(batch)?;
        let p = self.params();
        Ok(shape.data_error(&p, batch) + 0.5 * alpha * sq_norm(&p))
    }

    /// Exact gradient of [`MlpModel::loss`] in flat parameter layout.
    pub fn gradient(&self, batch: &Dataset, alpha: f64) -> Result<Vec<f64>> {
        let shape = self.shape();
        shape.check_data(batch)?;
        let p = self.params();
        let (_, mut g) = shape.data_error_and_grad(&p, batch);
        for (gi, wi) in g.iter_mut().zip(&p) {
            *gi += alpha * wi;
        }
        Ok(g)
    }
}

impl Regressor for MlpModel {
    fn n_inputs(&self) -> usize {
        self.n_in
    }
    fn n_outputs(&self) -> usize {
        self.n_out
    }
    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward(x)
    }
}

pub(crate) fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Regularized sum-of-squares objective `β·E_D + (α/2)‖w‖²` over a dataset.
pub struct MlpObjective<'a> {
    pub shape: MlpShape,
    pub data: &'a Dataset,
    pub alpha: f64,
    pub beta: f64,
}

impl Objective for MlpObjective<'_> {
    fn dim(&self) -> usize {
        self.shape.n_params()
    }
    fn value(&self, w: &[f64]) -> f64 {
        self.beta * self.shape.data_error(w, self.data) + 0.5 * self.alpha * sq_norm(w)
    }
    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let (_, mut g) = self.shape.data_error_and_grad(w, self.data);
        for (gi, wi) in g.iter_mut().zip(w) {
            *gi = self.beta * *gi + self.alpha * wi;
        }
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub max_cycles: usize,
    pub weight_decay: f64,
    /// Validation evaluations without improvement before stopping.
    pub patience: usize,
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_cycles: 240,
            weight_decay: 0.01,
            patience: 50,
            eval_every: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_cycles == 0 {
            return Err(Error::param("max_cycles must be at least 1"));
        }
        if self.eval_every == 0 {
            return Err(Error::param("eval_every must be at least 1"));
        }
        if !(self.weight_decay >= 0.0) || !self.weight_decay.is_finite() {
            return Err(Error::param("weight_decay must be finite and non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Cycle index at each evaluation point.
    pub cycles: Vec<usize>,
    pub train_error: Vec<f64>,
    pub validation_error: Vec<f64>,
    /// Regularized training objective after every cycle.
    pub objective: Vec<f64>,
    pub best_cycle: usize,
    pub best_validation_error: f64,
}

/// Trains with SCG on the full batch, evaluating train/validation MSE every
/// `eval_every` cycles and returning the checkpoint with the lowest
/// validation error.
pub fn train_scg(
    model: &MlpModel,
    train: &Dataset,
    validation: &Dataset,
    config: &TrainConfig,
) -> Result<(MlpModel, TrainHistory)> {
    config.validate()?;
    let shape = model.shape();
    shape.check_data(train)?;
    shape.check_data(validation)?;
    let obj = MlpObjective {
        shape,
        data: train,
        alpha: config.weight_decay,
        beta: 1.0,
    };
    let mut scg = Scg::new(&obj, model.params(), ScgOptions::default())?;
    let mut hist = TrainHistory {
        best_validation_error: f64::INFINITY,
        ..Default::default()
    };
    let mut best = model.clone();
    let mut since_best = 0usize;
    for cycle in 1..=config.max_cycles {
        let outcome = scg.step(&obj)?;
        hist.objective.push(scg.value());
        let done = outcome == StepOutcome::Converged || cycle == config.max_cycles;
        if cycle % config.eval_every == 0 || done {
            let current = MlpModel::from_params(shape, scg.params())?;
            let tr = mse_on(&current, train)?;
            let va = mse_on(&current, validation)?;
            if !va.is_finite() {
                return Err(Error::Training(format!("non-finite validation error at cycle {cycle}")));
            }
            hist.cycles.push(cycle);
            hist.train_error.push(tr);
            hist.validation_error.push(va);
            if va < hist.best_validation_error {
                hist.best_validation_error = va;
                hist.best_cycle = cycle;
                best = current;
                since_best = 0;
            } else {
                since_best += 1;
            }
            if since_best >= config.patience {
                break;
            }
        }
        if done {
            break;
        }
    }
    Ok((best, hist))
}
