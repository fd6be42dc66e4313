//! First-order Sugeno ANFIS with grid-partitioned inputs and hybrid learning.
//!
//! Layers: membership degrees, product rule firing, normalisation, linear
//! rule consequents weighted by normalised firing, sum. Consequents are fitted
//! by batch least squares and premise parameters by gradient descent on the
//! batch SSE.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{least_squares, normal_equation_residual, ridge_least_squares, Matrix};
use crate::membership::{MembershipFunction, MfFamily};
use crate::model::{check_len, Regressor};

/// Product of membership degrees.
pub fn rule_firing(memberships: &[f64]) -> f64 {
    memberships.iter().product()
}

pub fn normalize_firing(firing: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = firing.iter().sum();
    if !(total > 0.0) {
        return Err(Error::NoFiring);
    }
    Ok(firing.iter().map(|w| w / total).collect())
}

/// `z = Σ p_i x_i + c` for a consequent laid out as `[p_1, …, p_n, c]`.
pub fn consequent_eval(consequent: &[f64], x: &[f64]) -> Result<f64> {
    check_len("consequent", consequent.len(), x.len() + 1)?;
    let n = x.len();
    Ok(consequent[..n].iter().zip(x).map(|(p, v)| p * v).sum::<f64>() + consequent[n])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnfisModel {
    pub n_in: usize,
    /// `inputs[i]` holds the membership functions of input `i`.
    pub inputs: Vec<Vec<MembershipFunction>>,
    /// `rules[r][i]` is the membership function index used by rule `r` on input `i`.
    pub rules: Vec<Vec<usize>>,
    /// `consequents[r] = [p_1, …, p_n, c]`.
    pub consequents: Vec<Vec<f64>>,
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub memberships: Vec<Vec<f64>>,
    pub firing: Vec<f64>,
    pub normalized: Vec<f64>,
    pub rule_outputs: Vec<f64>,
    pub output: f64,
}

/// All combinations of MF indices, last input varying fastest.
pub fn grid_rules(mfs_per_input: &[usize]) -> Vec<Vec<usize>> {
    let mut rules = vec![vec![]];
    for &m in mfs_per_input {
        rules = rules
            .into_iter()
            .flat_map(|r| {
                (0..m).map(move |k| {
                    let mut r = r.clone();
                    r.push(k);
                    r
                })
            })
            .collect();
    }
    rules
}

impl AnfisModel {
    /// Grid partition over the given per-input ranges with zero consequents.
    pub fn grid(family: MfFamily, mfs_per_input: usize, ranges: &[(f64, f64)]) -> Result<Self> {
        if mfs_per_input == 0 {
            return Err(Error::param("need at least one membership function per input"));
        }
        if ranges.is_empty() {
            return Err(Error::EmptyInput("ANFIS inputs"));
        }
        let mut inputs = Vec::with_capacity(ranges.len());
        for &(lo, hi) in ranges {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::param(format!("bad input range [{lo}, {hi}]")));
            }
            let mfs = if mfs_per_input == 1 {
                vec![family.grid_member(0.5 * (lo + hi), hi - lo)]
            } else {
                let h = (hi - lo) / (mfs_per_input - 1) as f64;
                (0..mfs_per_input).map(|k| family.grid_member(lo + k as f64 * h, h)).collect()
            };
            inputs.push(mfs);
        }
        let n_in = ranges.len();
        let rules = grid_rules(&vec![mfs_per_input; n_in]);
        let consequents = vec![vec![0.0; n_in + 1]; rules.len()];
        Ok(AnfisModel {
            n_in,
            inputs,
            rules,
            consequents,
        })
    }

    /// Grid partition spanning each input's minimum and maximum in `train`.
    pub fn grid_from_data(family: MfFamily, mfs_per_input: usize, train: &Dataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyInput("training set"));
        }
        let ranges: Vec<(f64, f64)> = (0..train.n_in)
            .map(|i| {
                train.inputs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                    (lo.min(x[i]), hi.max(x[i]))
                })
            })
            .collect();
        Self::grid(family, mfs_per_input, &ranges)
    }

    pub fn n_rules(&self) -> usize {
        self.rules.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.inputs.len() != self.n_in {
            return Err(Error::dim(format!("{} MF groups for {} inputs", self.inputs.len(), self.n_in)));
        }
        for mf in self.inputs.iter().flatten() {
            mf.validate()?;
        }
        if self.consequents.len() != self.rules.len() {
            return Err(Error::dim("consequent count differs from rule count"));
        }
        for (rule, cons) in self.rules.iter().zip(&self.consequents) {
            check_len("rule", rule.len(), self.n_in)?;
            check_len("consequent", cons.len(), self.n_in + 1)?;
            if rule.iter().zip(&self.inputs).any(|(&k, mfs)| k >= mfs.len()) {
                return Err(Error::dim("rule refers to a missing membership function"));
            }
        }
        Ok(())
    }

    pub fn trace(&self, x: &[f64]) -> Result<ForwardTrace> {
        check_len("ANFIS input", x.len(), self.n_in)?;
        let memberships: Vec<Vec<f64>> = self
            .inputs
            .iter()
            .zip(x)
            .map(|(mfs, &v)| mfs.iter().map(|mf| mf.eval(v)).collect())
            .collect();
        let firing: Vec<f64> = self
            .rules
            .iter()
            .map(|rule| rule.iter().enumerate().map(|(i, &k)| memberships[i][k]).product())
            .collect();
        let normalized = normalize_firing(&firing)?;
        let rule_outputs = self
            .consequents
            .iter()
            .map(|c| consequent_eval(c, x))
            .collect::<Result<Vec<_>>>()?;
        let output = normalized.iter().zip(&rule_outputs).map(|(w, z)| w * z).sum();
        Ok(ForwardTrace {
            memberships,
            firing,
            normalized,
            rule_outputs,
            output,
        })
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        Ok(self.trace(x)?.output)
    }

    /// Premise parameters flattened input by input, MF by MF.
    pub fn premise_params(&self) -> Vec<f64> {
        self.inputs.iter().flatten().flat_map(|mf| mf.params.iter().copied()).collect()
    }

    pub fn set_premise_params(&mut self, params: &[f64]) -> Result<()> {
        check_len("premise parameters", params.len(), self.premise_params().len())?;
        let mut it = params.iter();
        for mf in self.inputs.iter_mut().flatten() {
            for p in mf.params.iter_mut() {
                *p = *it.next().expect("length checked");
            }
        }
        Ok(())
    }

    fn check_batch(&self, batch: &Dataset) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::EmptyInput("ANFIS batch"));
        }
        check_len("ANFIS input", batch.n_in, self.n_in)?;
        check_len("ANFIS output", batch.n_out, 1)
    }

    pub fn sse(&self, batch: &Dataset) -> Result<f64> {
        self.check_batch(batch)?;
        let mut e = 0.0;
        for (x, t) in batch.inputs.iter().zip(&batch.targets) {
            let d = self.forward(x)? - t[0];
            e += d * d;
        }
        Ok(e)
    }

    pub fn rmse(&self, batch: &Dataset) -> Result<f64> {
        Ok((self.sse(batch)? / batch.len() as f64).sqrt())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: AnfisModel = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }
}

impl Regressor for AnfisModel {
    fn n_inputs(&self) -> usize {
        self.n_in
    }

    fn n_outputs(&self) -> usize {
        1
    }

    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![self.forward(x)?])
    }
}

#[derive(Debug, Clone)]
pub struct LseFit {
    pub model: AnfisModel,
    pub regularized: bool,
    pub normal_residual: f64,
    pub residual_scale: f64,
}

/// Row of the consequent design matrix: `w̄_r·x_1, …, w̄_r·x_n, w̄_r` per rule.
fn design_row(model: &AnfisModel, x: &[f64]) -> Result<Vec<f64>> {
    let t = model.trace(x)?;
    let mut row = Vec::with_capacity(model.n_rules() * (model.n_in + 1));
    for w in &t.normalized {
        row.extend(x.iter().map(|v| w * v));
        row.push(*w);
    }
    Ok(row)
}

/// Least-squares consequents for fixed premises.
pub fn anfis_lse_consequents(model: &AnfisModel, batch: &Dataset) -> Result<LseFit> {
    model.check_batch(batch)?;
    let rows = batch
        .inputs
        .iter()
        .map(|x| design_row(model, x))
        .collect::<Result<Vec<_>>>()?;
    let phi = Matrix::from_rows(&rows)?;
    let t = Matrix::column(&batch.target_column(0));
    let sol = if phi.rows() >= phi.cols() {
        least_squares(&phi, &t)?
    } else {
        ridge_least_squares(&phi, &t)?
    };
    let (normal_residual, residual_scale) = normal_equation_residual(&phi, &sol.weights, &t)?;
    let mut out = model.clone();
    let w = sol.weights.as_slice();
    let k = model.n_in + 1;
    for (r, cons) in out.consequents.iter_mut().enumerate() {
        cons.copy_from_slice(&w[r * k..(r + 1) * k]);
    }
    Ok(LseFit {
        model: out,
        regularized: sol.regularized,
        normal_residual,
        residual_scale,
    })
}

/// Batch SSE and its gradient with respect to the flattened premise parameters.
pub fn premise_gradient(model: &AnfisModel, batch: &Dataset) -> Result<(f64, Vec<f64>)> {
    model.check_batch(batch)?;
    let mut offsets = Vec::with_capacity(model.n_in);
    let mut n_params = 0;
    for mfs in &model.inputs {
        let mut o = Vec::with_capacity(mfs.len());
        for mf in mfs {
            o.push(n_params);
            n_params += mf.params.len();
        }
        offsets.push(o);
    }
    let mut grad = vec![0.0; n_params];
    let mut sse = 0.0;
    for (x, t) in batch.inputs.iter().zip(&batch.targets) {
        let mut mu = Vec::with_capacity(model.n_in);
        let mut dmu = Vec::with_capacity(model.n_in);
        for (mfs, &v) in model.inputs.iter().zip(x) {
            let (m, d): (Vec<f64>, Vec<Vec<f64>>) = mfs.iter().map(|mf| mf.eval_with_grad(v)).unzip();
            mu.push(m);
            dmu.push(d);
        }
        let firing: Vec<f64> = model
            .rules
            .iter()
            .map(|rule| rule.iter().enumerate().map(|(i, &k)| mu[i][k]).product())
            .collect();
        let total: f64 = firing.iter().sum();
        if !(total > 0.0) {
            return Err(Error::NoFiring);
        }
        let z = model
            .consequents
            .iter()
            .map(|c| consequent_eval(c, x))
            .collect::<Result<Vec<_>>>()?;
        let y = firing.iter().zip(&z).map(|(w, z)| w * z).sum::<f64>() / total;
        let e = y - t[0];
        sse += e * e;
        // dE/dμ_{i,k} accumulated over the rules using (i, k)
        let mut de_dmu: Vec<Vec<f64>> = mu.iter().map(|m| vec![0.0; m.len()]).collect();
        for (r, rule) in model.rules.iter().enumerate() {
            let dy_dw = (z[r] - y) / total;
            for (i, &k) in rule.iter().enumerate() {
                let others: f64 = rule
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(j, &kj)| mu[j][kj])
                    .product();
                de_dmu[i][k] += 2.0 * e * dy_dw * others;
            }
        }
        for i in 0..model.n_in {
            for (k, d) in dmu[i].iter().enumerate() {
                let g = de_dmu[i][k];
                if g == 0.0 {
                    continue;
                }
                let o = offsets[i][k];
                for (q, dq) in d.iter().enumerate() {
                    grad[o + q] += g * dq;
                }
            }
        }
    }
    Ok((sse, grad))
}

#[derive(Debug, Clone)]
pub struct PremiseStep {
    pub model: AnfisModel,
    /// Set when a parameter had to be pushed back into its valid region.
    pub clamped: bool,
}

/// One gradient-descent step `θ ← θ − η ∇SSE` on the premise parameters.
pub fn anfis_backprop_premise(model: &AnfisModel, batch: &Dataset, learning_rate: f64) -> Result<PremiseStep> {
    if !(learning_rate >= 0.0 && learning_rate.is_finite()) {
        return Err(Error::param(format!("learning rate must be non-negative, got {learning_rate}")));
    }
    let (_, grad) = premise_gradient(model, batch)?;
    Ok(apply_premise_step(model, &grad, learning_rate))
}

fn apply_premise_step(model: &AnfisModel, grad: &[f64], learning_rate: f64) -> PremiseStep {
    let mut out = model.clone();
    if learning_rate == 0.0 || grad.iter().all(|g| *g == 0.0) {
        return PremiseStep { model: out, clamped: false };
    }
    let params: Vec<f64> = model
        .premise_params()
        .iter()
        .zip(grad)
        .map(|(p, g)| p - learning_rate * g)
        .collect();
    out.set_premise_params(&params).expect("same layout");
    let mut clamped = false;
    for mf in out.inputs.iter_mut().flatten() {
        clamped |= mf.clamp();
    }
    PremiseStep { model: out, clamped }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnfisTrainConfig {
    pub epochs: usize,
    /// Initial length of the premise step (normalised gradient descent).
    pub step_size: f64,
    /// Step growth after four consecutive error decreases.
    pub step_increase: f64,
    /// Step shrink after two consecutive up/down oscillations.
    pub step_decrease: f64,
}

impl Default for AnfisTrainConfig {
    fn default() -> Self {
        AnfisTrainConfig {
            epochs: 100,
            step_size: 0.01,
            step_increase: 1.1,
            step_decrease: 0.9,
        }
    }
}

impl AnfisTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            return Err(Error::param("ANFIS step_size must be non-negative"));
        }
        if !(self.step_increase >= 1.0 && self.step_decrease > 0.0 && self.step_decrease <= 1.0) {
            return Err(Error::param("ANFIS step_increase must be >= 1 and step_decrease in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnfisHistory {
    pub train_rmse: Vec<f64>,
    pub validation_rmse: Vec<f64>,
    pub step_sizes: Vec<f64>,
    /// Epoch (1-based) of the returned checkpoint; 0 for the initial model.
    pub best_epoch: usize,
    pub best_validation_rmse: Option<f64>,
    pub regularized_epochs: usize,
    pub clamped_epochs: usize,
}

/// Hybrid learning. Each epoch fits the consequents by least squares, records
/// training and validation RMSE, then takes one premise step. Returns the
/// model with the lowest validation RMSE.
pub fn anfis_train_hybrid(
    model: &AnfisModel,
    train: &Dataset,
    validation: &Dataset,
    config: &AnfisTrainConfig,
) -> Result<(AnfisModel, AnfisHistory)> {
    config.validate()?;
    model.validate()?;
    model.check_batch(train)?;
    model.check_batch(validation)?;
    let mut hist = AnfisHistory::default();
    let mut best = model.clone();
    let mut current = model.clone();
    let mut step = config.step_size;
    for epoch in 1..=config.epochs {
        let fit = anfis_lse_consequents(&current, train)?;
        if fit.regularized {
            hist.regularized_epochs += 1;
        }
        current = fit.model;
        let tr = current.rmse(train)?;
        let va = current.rmse(validation)?;
        hist.train_rmse.push(tr);
        hist.validation_rmse.push(va);
        hist.step_sizes.push(step);
        if hist.best_validation_rmse.is_none_or(|b| va < b) {
            hist.best_validation_rmse = Some(va);
            hist.best_epoch = epoch;
            best = current.clone();
        }
        if epoch == config.epochs {
            break;
        }
        let (_, grad) = premise_gradient(&current, train)?;
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm > 0.0 {
            let s = apply_premise_step(&current, &grad, step / norm);
            if s.clamped {
                hist.clamped_epochs += 1;
            }
            current = s.model;
        }
        step = adapt_step(step, &hist.train_rmse, config);
    }
    Ok((best, hist))
}

fn adapt_step(step: f64, errors: &[f64], config: &AnfisTrainConfig) -> f64 {
    let n = errors.len();
    if n < 5 {
        return step;
    }
    let d: Vec<f64> = errors[n - 5..].windows(2).map(|w| w[1] - w[0]).collect();
    if d.iter().all(|v| *v < 0.0) {
        step * config.step_increase
    } else if d[0] < 0.0 && d[1] > 0.0 && d[2] < 0.0 && d[3] > 0.0 {
        step * config.step_decrease
    } else {
        step
    }
}

/// One single-output ANFIS per target column, acting jointly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnfisSet {
    pub models: Vec<AnfisModel>,
}

impl Regressor for AnfisSet {
    fn n_inputs(&self) -> usize {
        self.models.first().map_or(0, |m| m.n_in)
    }

    fn n_outputs(&self) -> usize {
        self.models.len()
    }

    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.models.iter().map(|m| m.forward(x)).collect()
    }
}

/// Trains one model per output on separate threads. `per_output[p]` gives
/// the membership family and schedule for output `p`.
pub fn anfis_train_multi(
    per_output: &[(MfFamily, AnfisTrainConfig)],
    mfs_per_input: usize,
    train: &Dataset,
    validation: &Dataset,
) -> Result<(AnfisSet, Vec<AnfisHistory>)> {
    if train.n_out == 0 {
        return Err(Error::EmptyInput("targets"));
    }
    check_len("ANFIS output settings", per_output.len(), train.n_out)?;
    let results: Vec<Result<(AnfisModel, AnfisHistory)>> = std::thread::scope(|s| {
        let handles: Vec<_> = per_output
            .iter()
            .enumerate()
            .map(|(p, (family, config))| {
                s.spawn(move || {
                    let tr = train.output(p);
                    let va = validation.output(p);
                    let init = AnfisModel::grid_from_data(*family, mfs_per_input, &tr)?;
                    anfis_train_hybrid(&init, &tr, &va, config)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("ANFIS worker panicked")).collect()
    });
    let mut models = Vec::with_capacity(results.len());
    let mut hists = Vec::with_capacity(results.len());
    for r in results {
        let (m, h) = r?;
        models.push(m);
        hists.push(h);
    }
    Ok((AnfisSet { models }, hists))
}
