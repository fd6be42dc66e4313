//! Scaled conjugate gradient (Møller, 1993).
//!
//! Line-search free: the step length comes from a finite-difference estimate of
//! the curvature along the search direction, regularized by a scale `λ` that is
//! raised when the quadratic model is poor and lowered when it is good. Steps
//! that would increase the objective are rejected, so the objective value at
//! the accepted iterate never increases.

use crate::error::{Error, Result};
use crate::linalg::dot;

pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, w: &[f64]) -> f64;
    fn gradient(&self, w: &[f64]) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy)]
pub struct ScgOptions {
    /// Finite-difference step scale for the curvature estimate.
    pub sigma0: f64,
    pub lambda_init: f64,
    /// Stop when the gradient norm drops below this.
    pub grad_tol: f64,
}

impl Default for ScgOptions {
    fn default() -> Self {
        ScgOptions {
            sigma0: 1e-4,
            lambda_init: 1e-6,
            grad_tol: 1e-12,
        }
    }
}

const LAMBDA_MIN: f64 = 1e-15;
const LAMBDA_MAX: f64 = 1e100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Accepted,
    Rejected,
    Converged,
}

/// SCG state; call [`Scg::step`] once per cycle.
#[derive(Debug, Clone)]
pub struct Scg {
    opts: ScgOptions,
    w: Vec<f64>,
    f: f64,
    grad: Vec<f64>,
    grad_old: Vec<f64>,
    dir: Vec<f64>,
    lambda: f64,
    success: bool,
    n_success: usize,
    mu: f64,
    kappa: f64,
    gamma: f64,
    converged: bool,
}

fn check_finite(what: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Training(format!("non-finite {what} ({v})")))
    }
}

impl Scg {
    pub fn new<O: Objective + ?Sized>(obj: &O, w0: Vec<f64>, opts: ScgOptions) -> Result<Self> {
        if w0.len() != obj.dim() {
            return Err(Error::dim(format!(
                "initial point has {} entries, objective expects {}",
                w0.len(),
                obj.dim()
            )));
        }
        let f = check_finite("initial objective", obj.value(&w0))?;
        let grad = obj.gradient(&w0);
        check_finite("initial gradient", dot(&grad, &grad))?;
        let dir = grad.iter().map(|g| -g).collect();
        Ok(Scg {
            opts,
            w: w0,
            f,
            grad_old: grad.clone(),
            grad,
            dir,
            lambda: opts.lambda_init,
            success: true,
            n_success: 0,
            mu: 0.0,
            kappa: 0.0,
            gamma: 0.0,
            converged: false,
        })
    }

    pub fn params(&self) -> &[f64] {
        &self.w
    }

    pub fn value(&self) -> f64 {
        self.f
    }

    pub fn gradient_norm(&self) -> f64 {
        dot(&self.grad, &self.grad).sqrt()
    }

    pub fn is_converged(&self) -> bool {
        self.converged
    }

    pub fn step<O: Objective + ?Sized>(&mut self, obj: &O) -> Result<StepOutcome> {
        if self.converged {
            return Ok(StepOutcome::Converged);
        }
        if self.gradient_norm() < self.opts.grad_tol {
            self.converged = true;
            return Ok(StepOutcome::Converged);
        }
        let n = self.w.len();
        if self.success {
            self.mu = dot(&self.dir, &self.grad);
            if self.mu >= 0.0 {
                self.dir = self.grad.iter().map(|g| -g).collect();
                self.mu = dot(&self.dir, &self.grad);
            }
            self.kappa = dot(&self.dir, &self.dir);
            if self.kappa < f64::EPSILON * f64::EPSILON {
                self.converged = true;
                return Ok(StepOutcome::Converged);
            }
            let sigma = self.opts.sigma0 / self.kappa.sqrt();
            let probe: Vec<f64> = self.w.iter().zip(&self.dir).map(|(w, d)| w + sigma * d).collect();
            let g_probe = obj.gradient(&probe);
            let diff: Vec<f64> = g_probe.iter().zip(&self.grad).map(|(a, b)| a - b).collect();
            self.gamma = check_finite("curvature estimate", dot(&self.dir, &diff) / sigma)?;
        }

        let mut delta = self.gamma + self.lambda * self.kappa;
        if delta <= 0.0 {
            delta = self.lambda * self.kappa;
            self.lambda -= self.gamma / self.kappa;
        }
        let alpha = -self.mu / delta;
        let w_new: Vec<f64> = self.w.iter().zip(&self.dir).map(|(w, d)| w + alpha * d).collect();
        let f_new = check_finite("objective", obj.value(&w_new))?;
        let comparison = 2.0 * (f_new - self.f) / (alpha * self.mu);

        let outcome;
        if comparison >= 0.0 && f_new <= self.f {
            self.success = true;
            self.n_success += 1;
            self.w = w_new;
            self.f = f_new;
            self.grad_old = std::mem::take(&mut self.grad);
            self.grad = obj.gradient(&self.w);
            check_finite("gradient", dot(&self.grad, &self.grad))?;
            outcome = StepOutcome::Accepted;
        } else {
            self.success = false;
            outcome = StepOutcome::Rejected;
        }

        if comparison < 0.25 {
            self.lambda = (4.0 * self.lambda).min(LAMBDA_MAX);
        }
        if comparison > 0.75 {
            self.lambda = (0.5 * self.lambda).max(LAMBDA_MIN);
        }

        if self.n_success == n {
            self.dir = self.grad.iter().map(|g| -g).collect();
            self.n_success = 0;
        } else if self.success {
            let diff: f64 = self
                .grad_old
                .iter()
                .zip(&self.grad)
                .map(|(o, g)| (o - g) * g)
                .sum();
            let beta = diff / self.mu;
            for (d, g) in self.dir.iter_mut().zip(&self.grad) {
                *d = beta * *d - g;
            }
        }
        Ok(outcome)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// f(w) = ½ wᵀ A w − bᵀ w with A SPD.
    struct Quadratic {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
    }

    impl Objective for Quadratic {
        fn dim(&self) -> usize {
            self.b.len()
        }
        fn value(&self, w: &[f64]) -> f64 {
            let aw: Vec<f64> = self.a.iter().map(|r| dot(r, w)).collect();
            0.5 * dot(w, &aw) - dot(&self.b, w)
        }
        fn gradient(&self, w: &[f64]) -> Vec<f64> {
            self.a.iter().zip(&self.b).map(|(r, b)| dot(r, w) - b).collect()
        }
    }

    #[test]
    fn quadratic_converges_monotonically() {
        let q = Quadratic {
            a: vec![
                vec![4.0, 1.0, 0.0],
                vec![1.0, 3.0, 0.5],
                vec![0.0, 0.5, 2.0],
            ],
            b: vec![1.0, -2.0, 0.5],
        };
        let mut s = Scg::new(&q, vec![0.0; 3], ScgOptions::default()).unwrap();
        let mut last = s.value();
        for _ in 0..50 {
            if s.step(&q).unwrap() == StepOutcome::Converged {
                break;
            }
            assert!(s.value() <= last);
            last = s.value();
        }
        assert!(s.gradient_norm() < 1e-8, "{}", s.gradient_norm());
    }

    struct Nan;
    impl Objective for Nan {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, _: &[f64]) -> f64 {
            f64::NAN
        }
        fn gradient(&self, _: &[f64]) -> Vec<f64> {
            vec![1.0]
        }
    }

    #[test]
    fn non_finite_objective_aborts() {
        assert!(matches!(
            Scg::new(&Nan, vec![0.0], ScgOptions::default()),
            Err(Error::Training(_))
        ));
    }
}
