//! Averaging committees and bootstrap aggregation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::Regressor;
use crate::rng::RngStream;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Committee<R> {
    pub members: Vec<R>,
    /// Optional fixed combination weights; uniform averaging when absent.
    pub weights: Option<Vec<f64>>,
}

impl<R: Regressor> Committee<R> {
    pub fn new(members: Vec<R>) -> Result<Self> {
        Self::check(&members)?;
        Ok(Committee {
            members,
            weights: None,
        })
    }

    /// Fixed weighted sum of member outputs. Weights are used as given.
    pub fn weighted(members: Vec<R>, weights: Vec<f64>) -> Result<Self> {
        Self::check(&members)?;
        if weights.len() != members.len() {
            return Err(Error::dim(format!(
                "{} weights for {} members",
                weights.len(),
                members.len()
            )));
        }
        Ok(Committee {
            members,
            weights: Some(weights),
        })
    }

    fn check(members: &[R]) -> Result<()> {
        let first = members.first().ok_or(Error::EmptyInput("committee"))?;
        let (ni, no) = (first.n_inputs(), first.n_outputs());
        if members.iter().any(|m| m.n_inputs() != ni || m.n_outputs() != no) {
            return Err(Error::dim("committee members disagree on dimensions"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

impl<R: Regressor> Regressor for Committee<R> {
    fn n_inputs(&self) -> usize {
        self.members.first().map_or(0, |m| m.n_inputs())
    }

    fn n_outputs(&self) -> usize {
        self.members.first().map_or(0, |m| m.n_outputs())
    }

    /// `y_k = (1/N) Σ_i y_ki`, or `Σ_i c_i y_ki` with fixed weights.
    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.members.is_empty() {
            return Err(Error::EmptyInput("committee"));
        }
        let mut acc = vec![0.0; self.n_outputs()];
        for (i, m) in self.members.iter().enumerate() {
            let y = m.predict(x)?;
            let c = self.weights.as_ref().map_or(1.0, |w| w[i]);
            for (a, v) in acc.iter_mut().zip(&y) {
                *a += c * v;
            }
        }
        if self.weights.is_none() {
            let n = self.members.len() as f64;
            for a in acc.iter_mut() {
                *a /= n;
            }
        }
        Ok(acc)
    }
}

/// Draws `n` rows with replacement. Returns the resample and the source indices.
pub fn bootstrap_sample(train: &Dataset, rng: &mut RngStream) -> Result<(Dataset, Vec<usize>)> {
    if train.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    let n = train.len();
    let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    Ok((train.subset(&idx), idx))
}

#[derive(Debug, Clone)]
pub struct BaggingRun<R> {
    pub committee: Committee<R>,
    /// Source row indices of each member's resample.
    pub resamples: Vec<Vec<usize>>,
}

/// Trains `n` members, member `i` on its own bootstrap resample of `train`.
///
/// Member `i` draws its resample from `rng.substream(2i)` and hands
/// `rng.substream(2i + 1)` to the trainer. With `bootstrap = false` every
/// member sees `train` unchanged (plain committee of differently seeded runs).
pub fn bagging_train<R, F>(trainer: F, n: usize, train: &Dataset, rng: &RngStream, bootstrap: bool) -> Result<BaggingRun<R>>
where
    R: Regressor,
    F: Fn(&Dataset, &mut RngStream) -> Result<R>,
{
    if n == 0 {
        return Err(Error::param("bagging needs at least one member"));
    }
    let mut members = Vec::with_capacity(n);
    let mut resamples = Vec::with_capacity(n);
    for i in 0..n as u64 {
        let (data, idx) = if bootstrap {
            bootstrap_sample(train, &mut rng.substream(2 * i))?
        } else {
            (train.clone(), (0..train.len()).collect())
        };
        members.push(trainer(&data, &mut rng.substream(2 * i + 1))?);
        resamples.push(idx);
    }
    Ok(BaggingRun {
        committee: Committee::new(members)?,
        resamples,
    })
}
