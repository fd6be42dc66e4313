//! Least-squares support vector regression.
//!
//! Equality constraints with squared slack turn SVM training into one dense
//! linear system of dimension `N + 1`:
//!
//! ```text
//! [ 0   1ᵀ        ] [ b ]   [ 0 ]
//! [ 1   K + I/C   ] [ a ] = [ t ]
//! ```
//!
//! and the regressor is `f(x) = Σ_i a_i K(x, x_i) + b`.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{dot, linear_residual, solve_linear, sq_dist, Matrix};
use crate::model::{check_len, Regressor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Kernel {
    /// `exp(−‖x − x'‖² / (2σ²))`
    Gaussian { sigma2: f64 },
    /// Plain inner product. Test aid only.
    Linear,
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Gaussian { sigma2 } if !(sigma2 > 0.0 && sigma2.is_finite()) => {
                Err(Error::param(format!("kernel σ² must be positive, got {sigma2}")))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Kernel::Gaussian { sigma2 } => (-sq_dist(x, y) / (2.0 * sigma2)).exp(),
            Kernel::Linear => dot(x, y),
        }
    }
}

pub fn gaussian_kernel(x: &[f64], y: &[f64], sigma2: f64) -> Result<f64> {
    let k = Kernel::Gaussian { sigma2 };
    k.validate()?;
    check_len("kernel argument", y.len(), x.len())?;
    Ok(k.eval(x, y))
}

/// Gram matrix `K_ij = K(x_i, x_j)`.
pub fn kernel_matrix(kernel: &Kernel, inputs: &[Vec<f64>]) -> Matrix {
    let n = inputs.len();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval(&inputs[i], &inputs[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsSvmModel {
    pub kernel: Kernel,
    /// Regularization constant `C`.
    pub c: f64,
    pub bias: f64,
    /// Dual coefficients, one per stored training input.
    pub alpha: Vec<f64>,
    pub inputs: Vec<Vec<f64>>,
}

impl LsSvmModel {
    pub fn n_in(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    /// `Σ_i a_i K(x, x_i) + b`.
    pub fn predict_one(&self, x: &[f64]) -> f64 {
        self.bias
            + self
                .alpha
                .iter()
                .zip(&self.inputs)
                .map(|(a, xi)| a * self.kernel.eval(x, xi))
                .sum::<f64>()
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        check_len("dual coefficients", self.alpha.len(), self.inputs.len())?;
        let n = self.n_in();
        if self.inputs.iter().any(|x| x.len() != n) {
            return Err(Error::dim("stored inputs have inconsistent dimensions"));
        }
        if !self.alpha.iter().chain([&self.bias, &self.c]).all(|v| v.is_finite()) {
            return Err(Error::param("non-finite LS-SVM parameter"));
        }
        Ok(())
    }
}

impl Regressor for LsSvmModel {
    fn n_inputs(&self) -> usize {
        self.n_in()
    }
    fn n_outputs(&self) -> usize {
        1
    }
    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("LS-SVM input", x.len(), self.n_in())?;
        Ok(vec![self.predict_one(x)])
    }
}

#[derive(Debug, Clone)]
pub struct LsSvmFit {
    pub model: LsSvmModel,
    /// `‖A·[b; a] − [0; t]‖∞` and its scale.
    pub residual: f64,
    pub residual_scale: f64,
}

/// The `(N+1) × (N+1)` dual system matrix.
pub fn dual_system(kernel: &Kernel, inputs: &[Vec<f64>], c: f64) -> Matrix {
    let n = inputs.len();
    let k = kernel_matrix(kernel, inputs);
    let mut a = Matrix::zeros(n + 1, n + 1);
    for i in 0..n {
        a[(0, i + 1)] = 1.0;
        a[(i + 1, 0)] = 1.0;
        for j in 0..n {
            a[(i + 1, j + 1)] = k[(i, j)];
        }
        a[(i + 1, i + 1)] += 1.0 / c;
    }
    a
}

pub fn lssvm_train(inputs: &[Vec<f64>], targets: &[f64], c: f64, kernel: Kernel) -> Result<LsSvmFit> {
    if inputs.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    check_len("LS-SVM targets", targets.len(), inputs.len())?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::param(format!("regularization constant C must be positive, got {c}")));
    }
    kernel.validate()?;
    let d = inputs[0].len();
    if inputs.iter().any(|x| x.len() != d) {
        return Err(Error::dim("training inputs have inconsistent dimensions"));
    }
    let n = inputs.len();
    let a = dual_system(&kernel, inputs, c);
    let mut rhs = vec![0.0; n + 1];
    rhs[1..].copy_from_slice(targets);
    let rhs = Matrix::column(&rhs);
    let sol = solve_linear(&a, &rhs)?;
    let (residual, residual_scale) = linear_residual(&a, &sol, &rhs)?;
    let sol = sol.into_vec();
    Ok(LsSvmFit {
        model: LsSvmModel {
            kernel,
            c,
            bias: sol[0],
            alpha: sol[1..].to_vec(),
            inputs: inputs.to_vec(),
        },
        residual,
        residual_scale,
    })
}

/// `max(|f − t| − ε, 0)`.
pub fn eps_insensitive_loss(f: f64, t: f64, eps: f64) -> f64 {
    ((f - t).abs() - eps).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub c: f64,
    pub sigma2: f64,
    pub train_mse: f64,
    pub validation_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best_c: f64,
    pub best_sigma2: f64,
    pub surface: Vec<GridPoint>,
}

fn mse_single(model: &LsSvmModel, data: &Dataset) -> f64 {
    data.inputs
        .iter()
        .zip(&data.targets)
        .map(|(x, t)| (model.predict_one(x) - t[0]).powi(2))
        .sum::<f64>()
        / data.len() as f64
}

/// Trains on every `(C, σ²)` pair and picks the lowest validation MSE. Ties go
/// to the smaller `C`, then the larger `σ²`.
pub fn grid_tune(train: &Dataset, validation: &Dataset, sigma2_grid: &[f64], c_grid: &[f64]) -> Result<TuneResult> {
    if sigma2_grid.is_empty() || c_grid.is_empty() {
        return Err(Error::param("tuning grids must be non-empty"));
    }
    check_len("training targets per row", train.n_out, 1)?;
    check_len("validation targets per row", validation.n_out, 1)?;
    if validation.is_empty() {
        return Err(Error::EmptyInput("validation set"));
    }
    let t = train.target_column(0);
    let mut surface = Vec::with_capacity(sigma2_grid.len() * c_grid.len());
    for &c in c_grid {
        for &sigma2 in sigma2_grid {
            let fit = lssvm_train(&train.inputs, &t, c, Kernel::Gaussian { sigma2 })?;
            surface.push(GridPoint {
                c,
                sigma2,
                train_mse: mse_single(&fit.model, train),
                validation_mse: mse_single(&fit.model, validation),
            });
        }
    }
    let best = surface
        .iter()
        .min_by(|a, b| {
            a.validation_mse
                .total_cmp(&b.validation_mse)
                .then(a.c.total_cmp(&b.c))
                .then(b.sigma2.total_cmp(&a.sigma2))
        })
        .expect("non-empty grid");
    Ok(TuneResult {
        best_c: best.c,
        best_sigma2: best.sigma2,
        surface,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LsSvmParams {
    pub c: f64,
    pub sigma2: f64,
}

/// One independent LS-SVM per output column, combined into a multi-output predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiLsSvm {
    pub models: Vec<LsSvmModel>,
}

impl Regressor for MultiLsSvm {
    fn n_inputs(&self) -> usize {
        self.models.first().map_or(0, |m| m.n_in())
    }
    fn n_outputs(&self) -> usize {
        self.models.len()
    }
    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("LS-SVM input", x.len(), self.n_inputs())?;
        Ok(self.models.iter().map(|m| m.predict_one(x)).collect())
    }
}

pub fn lssvm_train_multi(train: &Dataset, params: &[LsSvmParams]) -> Result<Vec<LsSvmFit>> {
    check_len("per-output LS-SVM parameters", params.len(), train.n_out)?;
    params
        .iter()
        .enumerate()
        .map(|(p, prm)| lssvm_train(&train.inputs, &train.target_column(p), prm.c, Kernel::Gaussian { sigma2: prm.sigma2 }))
        .collect()
}
