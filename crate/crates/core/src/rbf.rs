//! Gaussian radial basis function network with two-stage training: k-means
//! centers and nearest-neighbour widths, then a linear least-squares output
//! layer.

use serde::{Deserialize, Serialize};

use crate::cluster::kmeans;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{least_squares, normal_equation_residual, ridge_least_squares, sq_dist, Matrix};
use crate::model::{check_len, Regressor};
use crate::rng::RngStream;

pub const MIN_WIDTH: f64 = 1e-6;

/// `exp(−‖x − u‖² / (2σ²))`.
pub fn rbf_activation(x: &[f64], center: &[f64], width: f64) -> Result<f64> {
    if !(width > 0.0) {
        return Err(Error::param(format!("RBF width must be positive, got {width}")));
    }
    check_len("RBF input", x.len(), center.len())?;
    Ok((-sq_dist(x, center) / (2.0 * width * width)).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfModel {
    pub n_in: usize,
    pub n_out: usize,
    pub centers: Vec<Vec<f64>>,
    pub widths: Vec<f64>,
    /// `weights[k][j]`: hidden unit `j` to output `k`.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

impl RbfModel {
    pub fn n_hidden(&self) -> usize {
        self.centers.len()
    }

    /// Centers, widths, output weights and biases.
    pub fn n_params(&self) -> usize {
        let m = self.n_hidden();
        m * self.n_in + m + self.n_out * (m + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.centers.is_empty() {
            return Err(Error::param("RBF network needs at least one hidden unit"));
        }
        check_len("widths", self.widths.len(), self.centers.len())?;
        check_len("biases", self.biases.len(), self.n_out)?;
        check_len("weight rows", self.weights.len(), self.n_out)?;
        for c in &self.centers {
            check_len("center", c.len(), self.n_in)?;
        }
        for w in &self.weights {
            check_len("weight row", w.len(), self.centers.len())?;
        }
        if let Some(s) = self.widths.iter().find(|s| !(**s > 0.0)) {
            return Err(Error::param(format!("RBF width must be positive, got {s}")));
        }
        Ok(())
    }

    pub fn hidden(&self, x: &[f64]) -> Vec<f64> {
        self.centers
            .iter()
            .zip(&self.widths)
            .map(|(c, s)| (-sq_dist(x, c) / (2.0 * s * s)).exp())
            .collect()
    }

    /// `y_k = w_k0 + Σ_j w_kj φ_j(x)`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("RBF input", x.len(), self.n_in)?;
        let phi = self.hidden(x);
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| b + w.iter().zip(&phi).map(|(a, p)| a * p).sum::<f64>())
            .collect())
    }
}

impl Regressor for RbfModel {
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

/// Mean distance from each center to its (up to) two nearest other centers,
/// floored at [`MIN_WIDTH`]. A lone center gets the RMS distance of `points` to it.
pub fn nearest_center_widths(centers: &[Vec<f64>], points: &[Vec<f64>]) -> Vec<f64> {
    if centers.len() == 1 {
        let ms = points.iter().map(|p| sq_dist(p, &centers[0])).sum::<f64>() / points.len().max(1) as f64;
        return vec![ms.sqrt().max(MIN_WIDTH)];
    }
    centers
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let mut d: Vec<f64> = centers
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != j)
                .map(|(_, o)| sq_dist(c, o).sqrt())
                .collect();
            d.sort_by(f64::total_cmp);
            let k = d.len().min(2);
            (d[..k].iter().sum::<f64>() / k as f64).max(MIN_WIDTH)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct RbfFit {
    pub model: RbfModel,
    pub kmeans_iterations: usize,
    /// Stage 2 fell back to the ridge solve.
    pub regularized: bool,
    /// `‖Φᵀ(ΦW − T)‖∞` and its scale.
    pub normal_residual: f64,
    pub residual_scale: f64,
}

/// Design matrix `[1, φ_1(x), …, φ_M(x)]`, one row per sample.
pub fn design_matrix(centers: &[Vec<f64>], widths: &[f64], inputs: &[Vec<f64>]) -> Matrix {
    let m = centers.len();
    let mut phi = Matrix::zeros(inputs.len(), m + 1);
    for (i, x) in inputs.iter().enumerate() {
        let row = phi.row_mut(i);
        row[0] = 1.0;
        for j in 0..m {
            row[j + 1] = (-sq_dist(x, &centers[j]) / (2.0 * widths[j] * widths[j])).exp();
        }
    }
    phi
}

/// Stage 2 alone: optimal output weights and biases for fixed hidden units.
pub fn fit_output_layer(centers: Vec<Vec<f64>>, widths: Vec<f64>, train: &Dataset) -> Result<RbfFit> {
    if train.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    let phi = design_matrix(&centers, &widths, &train.inputs);
    let t = Matrix::from_rows(&train.targets)?;
    let ls = if phi.rows() >= phi.cols() {
        least_squares(&phi, &t)?
    } else {
        ridge_least_squares(&phi, &t)?
    };
    let (normal_residual, residual_scale) = normal_equation_residual(&phi, &ls.weights, &t)?;
    let w = &ls.weights;
    let model = RbfModel {
        n_in: train.n_in,
        n_out: train.n_out,
        weights: (0..train.n_out)
            .map(|k| (0..centers.len()).map(|j| w[(j + 1, k)]).collect())
            .collect(),
        biases: (0..train.n_out).map(|k| w[(0, k)]).collect(),
        centers,
        widths,
    };
    Ok(RbfFit {
        model,
        kmeans_iterations: 0,
        regularized: ls.regularized,
        normal_residual,
        residual_scale,
    })
}

/// Stage 1 (unsupervised): k-means on the inputs for `m` centers, widths from
/// neighbouring centers. Stage 2: least-squares output layer.
pub fn rbf_train_two_stage(train: &Dataset, m: usize, rng: &mut RngStream, kmeans_iters: usize) -> Result<RbfFit> {
    if m == 0 {
        return Err(Error::param("RBF network needs at least one hidden unit"));
    }
    let km = kmeans(&train.inputs, m, rng, kmeans_iters)?;
    let widths = nearest_center_widths(&km.centers, &train.inputs);
    let mut fit = fit_output_layer(km.centers, widths, train)?;
    fit.kmeans_iterations = km.iterations;
    Ok(fit)
}
