//! Bayesian MLP by Markov chain Monte Carlo.
//!
//! The posterior over weights is `P(w|D) ∝ exp(−S(w))` with
//! `S(w) = β·E_D + α·E_w`, `E_D = ½ Σ_n ‖y(xⁿ, w) − tⁿ‖²`, `E_w = ½ ‖w‖²`.
//! The normalizers of the prior, likelihood and posterior cancel in every
//! acceptance ratio and are never computed.
//!
//! Two samplers are provided: a random-walk Metropolis chain and Hybrid Monte
//! Carlo, which treats `S` as potential energy, adds a Gaussian momentum `p`
//! and proposes by integrating Hamiltonian dynamics with the leapfrog scheme.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::mlp::{sq_norm, MlpModel, MlpObjective, MlpShape};
use crate::model::{check_len, Regressor};
use crate::optim::Objective;
use crate::rng::RngStream;

/// Network shape, hyperparameters and data that define `S(w)`.
#[derive(Debug, Clone, Copy)]
pub struct PosteriorSpec<'a> {
    pub shape: MlpShape,
    /// Weight-decay (prior) coefficient.
    pub alpha: f64,
    /// Data-error coefficient (inverse noise variance).
    pub beta: f64,
    pub data: &'a Dataset,
}

impl<'a> PosteriorSpec<'a> {
    pub fn new(shape: MlpShape, alpha: f64, beta: f64, data: &'a Dataset) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::param(format!("alpha must be finite and positive, got {alpha}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::param(format!("beta must be finite and positive, got {beta}")));
        }
        shape.check_data(data)?;
        Ok(PosteriorSpec {
            shape,
            alpha,
            beta,
            data,
        })
    }

    fn objective(&self) -> MlpObjective<'a> {
        MlpObjective {
            shape: self.shape,
            data: self.data,
            alpha: self.alpha,
            beta: self.beta,
        }
    }

    pub fn energy(&self, w: &[f64]) -> Result<f64> {
        check_len("weight vector", w.len(), self.shape.n_params())?;
        Ok(self.objective().value(w))
    }

    pub fn energy_grad(&self, w: &[f64]) -> Result<Vec<f64>> {
        check_len("weight vector", w.len(), self.shape.n_params())?;
        Ok(self.objective().gradient(w))
    }
}

impl Objective for PosteriorSpec<'_> {
    fn dim(&self) -> usize {
        self.shape.n_params()
    }
    fn value(&self, w: &[f64]) -> f64 {
        self.objective().value(w)
    }
    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        self.objective().gradient(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HmcConfig {
    pub step_size: f64,
    pub leapfrog_steps: usize,
    /// Initial trajectories whose states are discarded.
    pub burn_in: usize,
    pub retained: usize,
    pub seed: u64,
}

impl Default for HmcConfig {
    fn default() -> Self {
        HmcConfig {
            step_size: 0.0005,
            leapfrog_steps: 100,
            burn_in: 10,
            retained: 100,
            seed: 0,
        }
    }
}

impl HmcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::param("HMC step size must be positive"));
        }
        if self.leapfrog_steps == 0 {
            return Err(Error::param("HMC needs at least one leapfrog step"));
        }
        if self.retained == 0 {
            return Err(Error::param("HMC must retain at least one sample"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorEnsemble {
    pub samples: Vec<Vec<f64>>,
    pub accepted: usize,
    pub proposed: usize,
    pub acceptance_rate: f64,
    /// `S(w)` of the chain state after every trajectory, burn-in included.
    pub energy_trace: Vec<f64>,
}

/// `w + scale·ε`, `ε ~ N(0, I)`.
pub fn random_walk_step(w: &[f64], scale: f64, rng: &mut RngStream) -> Vec<f64> {
    w.iter()
        .map(|wi| {
            let e: f64 = rng.sample(StandardNormal);
            wi + scale * e
        })
        .collect()
}

/// Metropolis rule on energies (negative log densities): always accept a
/// candidate that does not raise the energy, otherwise accept with
/// probability `exp(S_current − S_candidate)`. Non-finite candidates are rejected.
pub fn metropolis_accept(current: f64, candidate: f64, rng: &mut RngStream) -> bool {
    if !candidate.is_finite() {
        return false;
    }
    if candidate <= current {
        return true;
    }
    let u: f64 = rng.random();
    u < (current - candidate).exp()
}

/// `L` leapfrog steps of size `eps` for `H = E(w) + ½‖p‖²`.
///
/// Returns `None` if the state becomes non-finite.
pub fn leapfrog<G>(w: &[f64], p: &[f64], eps: f64, steps: usize, mut grad: G) -> Option<(Vec<f64>, Vec<f64>)>
where
    G: FnMut(&[f64]) -> Vec<f64>,
{
    let mut w = w.to_vec();
    let mut p = p.to_vec();
    let mut g = grad(&w);
    for _ in 0..steps {
        for (pi, gi) in p.iter_mut().zip(&g) {
            *pi -= 0.5 * eps * gi;
        }
        for (wi, pi) in w.iter_mut().zip(&p) {
            *wi += eps * pi;
        }
        g = grad(&w);
        for (pi, gi) in p.iter_mut().zip(&g) {
            *pi -= 0.5 * eps * gi;
        }
        if !w.iter().chain(&p).all(|v| v.is_finite()) {
            return None;
        }
    }
    Some((w, p))
}

/// Hybrid Monte Carlo on the potential `target`.
///
/// Each trajectory: draw `p ~ N(0, I)`, pick a direction `λ ∈ {−1, +1}`, run
/// `L` leapfrog steps of size `λε`, then Metropolis-accept on the total energy.
/// The first `burn_in` states are dropped and the next `retained` kept.
pub fn hmc_sample<O: Objective + ?Sized>(target: &O, config: &HmcConfig, init: &[f64], rng: &mut RngStream) -> Result<PosteriorEnsemble> {
    config.validate()?;
    check_len("initial state", init.len(), target.dim())?;
    let mut w = init.to_vec();
    let mut energy = target.value(&w);
    if !energy.is_finite() {
        return Err(Error::Training(format!("non-finite energy at initial state ({energy})")));
    }
    let total = config.burn_in + config.retained;
    let mut samples = Vec::with_capacity(config.retained);
    let mut trace = Vec::with_capacity(total);
    let mut accepted = 0;
    for t in 0..total {
        let p: Vec<f64> = (0..w.len()).map(|_| rng.sample(StandardNormal)).collect();
        let lambda = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let h_current = energy + 0.5 * sq_norm(&p);
        let proposal = leapfrog(&w, &p, lambda * config.step_size, config.leapfrog_steps, |x| target.gradient(x));
        if let Some((w_new, p_new)) = proposal {
            let e_new = target.value(&w_new);
            let h_new = e_new + 0.5 * sq_norm(&p_new);
            if metropolis_accept(h_current, h_new, rng) {
                w = w_new;
                energy = e_new;
                accepted += 1;
            }
        }
        trace.push(energy);
        if t >= config.burn_in {
            samples.push(w.clone());
        }
    }
    Ok(PosteriorEnsemble {
        samples,
        accepted,
        proposed: total,
        acceptance_rate: accepted as f64 / total as f64,
        energy_trace: trace,
    })
}

/// Random-walk Metropolis on the potential `target`, with the same burn-in and
/// retention bookkeeping as [`hmc_sample`]. `step_size` is the proposal scale.
pub fn metropolis_sample<O: Objective + ?Sized>(target: &O, config: &HmcConfig, init: &[f64], rng: &mut RngStream) -> Result<PosteriorEnsemble> {
    config.validate()?;
    check_len("initial state", init.len(), target.dim())?;
    let mut w = init.to_vec();
    let mut energy = target.value(&w);
    let total = config.burn_in + config.retained;
    let mut samples = Vec::with_capacity(config.retained);
    let mut trace = Vec::with_capacity(total);
    let mut accepted = 0;
    for t in 0..total {
        let cand = random_walk_step(&w, config.step_size, rng);
        let e = target.value(&cand);
        if metropolis_accept(energy, e, rng) {
            w = cand;
            energy = e;
            accepted += 1;
        }
        trace.push(energy);
        if t >= config.burn_in {
            samples.push(w.clone());
        }
    }
    Ok(PosteriorEnsemble {
        samples,
        accepted,
        proposed: total,
        acceptance_rate: accepted as f64 / total as f64,
        energy_trace: trace,
    })
}

/// Predictive mean `(1/L) Σ_i y(x, w_i)` and per-output (population)
/// standard deviation over the retained samples.
pub fn bayesian_predict(ensemble: &PosteriorEnsemble, shape: MlpShape, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    predictive(&ensemble.samples, shape, x)
}

fn predictive(samples: &[Vec<f64>], shape: MlpShape, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("posterior ensemble"));
    }
    check_len("MLP input", x.len(), shape.n_in)?;
    let mut hidden = vec![0.0; shape.n_hidden];
    let mut out = vec![0.0; shape.n_out];
    let mut sum = vec![0.0; shape.n_out];
    let mut sum_sq = vec![0.0; shape.n_out];
    for w in samples {
        check_len("weight sample", w.len(), shape.n_params())?;
        shape.forward_into(w, x, &mut hidden, &mut out);
        for k in 0..shape.n_out {
            sum[k] += out[k];
            sum_sq[k] += out[k] * out[k];
        }
    }
    let n = samples.len() as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std = sum_sq
        .iter()
        .zip(&mean)
        .map(|(s2, m)| (s2 / n - m * m).max(0.0).sqrt())
        .collect();
    Ok((mean, std))
}

/// A sampled posterior packaged as a predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesianMlp {
    pub shape: MlpShape,
    pub alpha: f64,
    pub beta: f64,
    pub ensemble: PosteriorEnsemble,
}

impl BayesianMlp {
    pub fn predict_with_std(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        bayesian_predict(&self.ensemble, self.shape, x)
    }

    pub fn sample_models(&self) -> Result<Vec<MlpModel>> {
        self.ensemble
            .samples
            .iter()
            .map(|w| MlpModel::from_params(self.shape, w))
            .collect()
    }
}

impl Regressor for BayesianMlp {
    fn n_inputs(&self) -> usize {
        self.shape.n_in
    }
    fn n_outputs(&self) -> usize {
        self.shape.n_out
    }
    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.predict_with_std(x)?.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::Committee;

    fn data(n: usize, shape: MlpShape, seed: u64) -> Dataset {
        let mut r = RngStream::new(seed);
        Dataset::new(
            (0..n).map(|_| (0..shape.n_in).map(|_| r.random::<f64>()).collect()).collect(),
            (0..n).map(|_| (0..shape.n_out).map(|_| r.random::<f64>()).collect()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn energy_at_zero_weights() {
        let shape = MlpShape::new(2, 3, 2).unwrap();
        let d = data(5, shape, 1);
        let spec = PosteriorSpec::new(shape, 0.01, 30.0, &d).unwrap();
        let e = spec.energy(&vec![0.0; shape.n_params()]).unwrap();
        let expect: f64 = 15.0 * d.targets.iter().map(|t| sq_norm(t)).sum::<f64>();
        assert!((e - expect).abs() < 1e-12);
    }

    #[test]
    fn energy_matches_mlp_loss_at_unit_beta() {
        let shape = MlpShape::new(2, 3, 2).unwrap();
        let d = data(5, shape, 1);
        let m = MlpModel::init(shape, &mut RngStream::new(3));
        let spec = PosteriorSpec::new(shape, 0.2, 1.0, &d).unwrap();
        assert_eq!(spec.energy(&m.params()).unwrap(), m.loss(&d, 0.2).unwrap());
        let perfect = Dataset::new(d.inputs.clone(), m.predict_all(&d.inputs).unwrap()).unwrap();
        let spec = PosteriorSpec {
            alpha: 0.0,
            ..PosteriorSpec::new(shape, 1.0, 1.0, &perfect).unwrap()
        };
        assert_eq!(spec.energy(&m.params()).unwrap(), 0.0);
    }

    #[test]
    fn invalid_hyperparameters() {
        let shape = MlpShape::new(1, 1, 1).unwrap();
        let d = data(2, shape, 0);
        assert!(PosteriorSpec::new(shape, 0.0, 1.0, &d).is_err());
        assert!(PosteriorSpec::new(shape, 1.0, f64::NAN, &d).is_err());
    }

    #[test]
    fn prior_term_gradient() {
        let shape = MlpShape::new(2, 2, 1).unwrap();
        let d = data(4, shape, 2);
        let w = MlpModel::init(shape, &mut RngStream::new(8)).params();
        let a = PosteriorSpec::new(shape, 0.5, 3.0, &d).unwrap().energy_grad(&w).unwrap();
        let b = PosteriorSpec::new(shape, 1.5, 3.0, &d).unwrap().energy_grad(&w).unwrap();
        for ((ga, gb), wi) in a.iter().zip(&b).zip(&w) {
            assert!((gb - ga - wi).abs() < 1e-12);
        }
        let zero_beta = PosteriorSpec {
            beta: 0.0,
            ..PosteriorSpec::new(shape, 0.7, 1.0, &d).unwrap()
        };
        let g = zero_beta.energy_grad(&w).unwrap();
        for (gi, wi) in g.iter().zip(&w) {
            assert!((gi - 0.7 * wi).abs() < 1e-15);
        }
    }

    #[test]
    fn random_walk_basics() {
        let w = vec![1.0, -2.0];
        assert_eq!(random_walk_step(&w, 0.0, &mut RngStream::new(1)), w);
        assert_eq!(
            random_walk_step(&w, 0.3, &mut RngStream::new(1)),
            random_walk_step(&w, 0.3, &mut RngStream::new(1))
        );
        let mut r = RngStream::new(2);
        let n = 100_000;
        let mut sum = [0.0; 2];
        for _ in 0..n {
            let s = random_walk_step(&w, 0.5, &mut r);
            sum[0] += s[0];
            sum[1] += s[1];
        }
        let se = 0.5 / (n as f64).sqrt();
        assert!((sum[0] / n as f64 - 1.0).abs() < 4.0 * se);
        assert!((sum[1] / n as f64 + 2.0).abs() < 4.0 * se);
    }

    #[test]
    fn metropolis_edge_cases() {
        let mut r = RngStream::new(0);
        assert!(metropolis_accept(5.0, 4.0, &mut r));
        assert!(metropolis_accept(5.0, 5.0, &mut r));
        assert!(!metropolis_accept(5.0, f64::INFINITY, &mut r));
        assert!(!metropolis_accept(5.0, f64::NAN, &mut r));
    }

    #[test]
    fn leapfrog_hand_computed_oscillator_step() {
        let (w, p) = leapfrog(&[1.0], &[0.0], 0.1, 1, |w| vec![w[0]]).unwrap();
        assert!((w[0] - 0.995).abs() < 1e-15);
        assert!((p[0] + 0.09975).abs() < 1e-15);
    }

    #[test]
    fn leapfrog_free_particle() {
        let (w, p) = leapfrog(&[0.5, 1.0], &[2.0, -1.0], 0.05, 7, |_| vec![0.0, 0.0]).unwrap();
        assert!((w[0] - (0.5 + 0.05 * 7.0 * 2.0)).abs() < 1e-14);
        assert!((w[1] - (1.0 - 0.05 * 7.0)).abs() < 1e-14);
        assert_eq!(p, vec![2.0, -1.0]);
    }

    #[test]
    fn leapfrog_aborts_on_blow_up() {
        assert!(leapfrog(&[1.0], &[0.0], 1.0, 2000, |w| vec![-w[0] * w[0] * w[0]]).is_none());
    }

    #[test]
    fn prediction_from_samples() {
        let shape = MlpShape::new(1, 1, 1).unwrap();
        // output = b2, so two samples with b2 = 0 and 2
        let ens = PosteriorEnsemble {
            samples: vec![vec![0.0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0, 2.0]],
            accepted: 0,
            proposed: 0,
            acceptance_rate: 0.0,
            energy_trace: vec![],
        };
        let (m, s) = bayesian_predict(&ens, shape, &[0.3]).unwrap();
        assert!((m[0] - 1.0).abs() < 1e-15 && (s[0] - 1.0).abs() < 1e-15);

        let w = MlpModel::init(MlpShape::new(2, 3, 2).unwrap(), &mut RngStream::new(1)).params();
        let same = PosteriorEnsemble {
            samples: vec![w.clone(); 4],
            ..ens.clone()
        };
        let shape = MlpShape::new(2, 3, 2).unwrap();
        let (m, s) = bayesian_predict(&same, shape, &[0.2, 0.9]).unwrap();
        let direct = MlpModel::from_params(shape, &w).unwrap().forward(&[0.2, 0.9]).unwrap();
        for k in 0..2 {
            assert!((m[k] - direct[k]).abs() < 1e-15);
            assert!(s[k] < 1e-7);
        }
        let empty = PosteriorEnsemble {
            samples: vec![],
            ..ens
        };
        assert!(bayesian_predict(&empty, shape, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn prediction_equals_committee_of_samples() {
        let shape = MlpShape::new(3, 4, 2).unwrap();
        let samples: Vec<Vec<f64>> = (0..6).map(|s| MlpModel::init(shape, &mut RngStream::new(s)).params()).collect();
        let b = BayesianMlp {
            shape,
            alpha: 1.0,
            beta: 1.0,
            ensemble: PosteriorEnsemble {
                samples,
                accepted: 0,
                proposed: 0,
                acceptance_rate: 0.0,
                energy_trace: vec![],
            },
        };
        let c = Committee::new(b.sample_models().unwrap()).unwrap();
        let x = [0.1, 0.5, -0.3];
        let (a, bb) = (b.predict(&x).unwrap(), c.predict(&x).unwrap());
        for k in 0..2 {
            assert!((a[k] - bb[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn config_validation() {
        assert!(HmcConfig::default().validate().is_ok());
        assert!(HmcConfig { step_size: 0.0, ..Default::default() }.validate().is_err());
        assert!(HmcConfig { leapfrog_steps: 0, ..Default::default() }.validate().is_err());
        assert!(HmcConfig { retained: 0, ..Default::default() }.validate().is_err());
    }
}
