use crate::data::Dataset;
use crate::error::{Error, Result};

/// Anything that maps an input vector to an output vector.
pub trait Regressor {
    fn n_inputs(&self) -> usize;
    fn n_outputs(&self) -> usize;
    fn predict(&self, x: &[f64]) -> Result<Vec<f64>>;

    fn predict_all(&self, inputs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        inputs.iter().map(|x| self.predict(x)).collect()
    }
}

impl<R: Regressor + ?Sized> Regressor for Box<R> {
    fn n_inputs(&self) -> usize {
        (**self).n_inputs()
    }
    fn n_outputs(&self) -> usize {
        (**self).n_outputs()
    }
    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).predict(x)
    }
}

impl<R: Regressor + ?Sized> Regressor for &R {
    fn n_inputs(&self) -> usize {
        (**self).n_inputs()
    }
    fn n_outputs(&self) -> usize {
        (**self).n_outputs()
    }
    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).predict(x)
    }
}

/// Sum of squared errors over a dataset.
pub fn sse<R: Regressor + ?Sized>(model: &R, data: &Dataset) -> Result<f64> {
    let mut s = 0.0;
    for (x, t) in data.inputs.iter().zip(&data.targets) {
        let y = model.predict(x)?;
        s += y.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    Ok(s)
}

/// Total MSE (sum over outputs, mean over samples).
pub fn mse_on<R: Regressor + ?Sized>(model: &R, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    Ok(sse(model, data)? / data.len() as f64)
}

pub(crate) fn check_len(what: &str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::dim(format!("{what}: expected length {expected}, got {got}")));
    }
    Ok(())
}
