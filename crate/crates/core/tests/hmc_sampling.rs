//! Statistical checks of the samplers against analytic targets.

use rand::Rng;
use steamreg::data::Dataset;
use steamreg::hmc::{hmc_sample, leapfrog, metropolis_accept, metropolis_sample, HmcConfig, PosteriorSpec};
use steamreg::linalg::{solve_linear, Matrix};
use steamreg::mlp::MlpShape;
use steamreg::optim::Objective;
use steamreg::rng::RngStream;

/// `S(w) = ½ (w − μ)ᵀ A (w − μ)`.
struct Quadratic {
    a: Matrix,
    mu: Vec<f64>,
}

impl Quadratic {
    fn isotropic(d: usize, precision: f64) -> Self {
        let mut a = Matrix::identity(d);
        for i in 0..d {
            a[(i, i)] = precision;
        }
        Quadratic { a, mu: vec![0.0; d] }
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.mu.len()
    }
    fn value(&self, w: &[f64]) -> f64 {
        let d: Vec<f64> = w.iter().zip(&self.mu).map(|(a, b)| a - b).collect();
        let g = self.gradient(w);
        0.5 * d.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>()
    }
    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let n = self.mu.len();
        (0..n)
            .map(|i| (0..n).map(|j| self.a[(i, j)] * (w[j] - self.mu[j])).sum())
            .collect()
    }
}

fn mean(samples: &[Vec<f64>]) -> Vec<f64> {
    let n = samples.len() as f64;
    let d = samples[0].len();
    (0..d).map(|i| samples.iter().map(|s| s[i]).sum::<f64>() / n).collect()
}

fn covariance(samples: &[Vec<f64>]) -> Matrix {
    let m = mean(samples);
    let d = m.len();
    let n = samples.len() as f64;
    let mut c = Matrix::zeros(d, d);
    for s in samples {
        for i in 0..d {
            for j in 0..d {
                c[(i, j)] += (s[i] - m[i]) * (s[j] - m[j]) / n;
            }
        }
    }
    c
}

fn frobenius(m: &Matrix) -> f64 {
    m.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Standard error of the mean of component `i` by batch means, which
/// accounts for autocorrelation along the chain.
fn batch_se(samples: &[Vec<f64>], i: usize, batches: usize) -> f64 {
    let size = samples.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| samples[b * size..(b + 1) * size].iter().map(|s| s[i]).sum::<f64>() / size as f64)
        .collect();
    let mu = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

#[test]
fn leapfrog_is_time_reversible() {
    let mut rng = RngStream::new(11);
    let shape = MlpShape::new(2, 3, 1).unwrap();
    let xs: Vec<Vec<f64>> = (0..20).map(|_| vec![rng.random(), rng.random()]).collect();
    let ts: Vec<Vec<f64>> = xs.iter().map(|x| vec![(3.0 * x[0]).sin() * x[1]]).collect();
    let data = Dataset::new(xs, ts).unwrap();
    let spec = PosteriorSpec::new(shape, 0.1, 5.0, &data).unwrap();
    for _ in 0..5 {
        let w0: Vec<f64> = (0..shape.n_params()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p0: Vec<f64> = (0..shape.n_params()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (w1, p1) = leapfrog(&w0, &p0, 0.01, 50, |w| spec.gradient(w)).unwrap();
        let back: Vec<f64> = p1.iter().map(|v| -v).collect();
        let (w2, p2) = leapfrog(&w1, &back, 0.01, 50, |w| spec.gradient(w)).unwrap();
        for (a, b) in w2.iter().zip(&w0) {
            assert!((a - b).abs() < 1e-9);
        }
        for (a, b) in p2.iter().zip(&p0) {
            assert!((a + b).abs() < 1e-9);
        }
    }
}

fn oscillator_energy_error(eps: f64, steps: usize) -> f64 {
    let (w, p) = leapfrog(&[1.0], &[0.0], eps, steps, |w| vec![w[0]]).unwrap();
    (0.5 * (w[0] * w[0] + p[0] * p[0]) - 0.5).abs()
}

#[test]
fn leapfrog_energy_error_is_second_order() {
    for (eps, steps) in [(0.1, 10), (0.05, 7), (0.2, 3)] {
        let coarse = oscillator_energy_error(eps, steps);
        let fine = oscillator_energy_error(eps / 2.0, steps * 2);
        let ratio = coarse / fine;
        assert!((3.0..=5.0).contains(&ratio), "eps {eps}: ratio {ratio}");
    }
}

#[test]
fn metropolis_frequency_matches_exp_minus_delta() {
    let mut rng = RngStream::new(3);
    for ds in [0.1f64, 0.7, 2.0] {
        let n = 100_000;
        let hits = (0..n).filter(|_| metropolis_accept(1.0, 1.0 + ds, &mut rng)).count();
        let p = (-ds).exp();
        let freq = hits as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() < 3.0 * se, "ΔS {ds}: {freq} vs {p}");
    }
}

#[test]
fn hmc_samples_standard_normal() {
    let target = Quadratic::isotropic(2, 1.0);
    let cfg = HmcConfig {
        step_size: 0.2,
        leapfrog_steps: 8,
        burn_in: 100,
        retained: 5000,
        seed: 0,
    };
    let ens = hmc_sample(&target, &cfg, &[3.0, -3.0], &mut RngStream::new(17)).unwrap();
    assert_eq!(ens.samples.len(), 5000);
    assert_eq!(ens.energy_trace.len(), 5100);
    let m = mean(&ens.samples);
    let c = covariance(&ens.samples);
    for i in 0..2 {
        let se = batch_se(&ens.samples, i, 50);
        assert!(m[i].abs() < 3.0 * se, "mean[{i}] = {} (se {se})", m[i]);
        assert!((c[(i, i)] - 1.0).abs() < 0.1, "var[{i}] = {}", c[(i, i)]);
    }
    assert!(ens.acceptance_rate > 0.9);
}

/// Linear model `t = wᵀx + noise` with prior precision α and noise precision β.
struct LinearPosterior {
    xs: Vec<Vec<f64>>,
    ts: Vec<f64>,
    alpha: f64,
    beta: f64,
}

impl Objective for LinearPosterior {
    fn dim(&self) -> usize {
        self.xs[0].len()
    }
    fn value(&self, w: &[f64]) -> f64 {
        let ed: f64 = self
            .xs
            .iter()
            .zip(&self.ts)
            .map(|(x, t)| (x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() - t).powi(2))
            .sum();
        0.5 * self.beta * ed + 0.5 * self.alpha * w.iter().map(|v| v * v).sum::<f64>()
    }
    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = w.iter().map(|v| self.alpha * v).collect();
        for (x, t) in self.xs.iter().zip(&self.ts) {
            let r = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() - t;
            for (gi, xi) in g.iter_mut().zip(x) {
                *gi += self.beta * r * xi;
            }
        }
        g
    }
}

#[test]
fn hmc_recovers_conjugate_linear_posterior() {
    let mut rng = RngStream::new(29);
    let d = 3;
    let truth = [0.5, -1.0, 0.25];
    let xs: Vec<Vec<f64>> = (0..30).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let ts: Vec<f64> = xs
        .iter()
        .map(|x| x.iter().zip(&truth).map(|(a, b)| a * b).sum::<f64>() + 0.2 * rng.random_range(-1.0..1.0))
        .collect();
    let post = LinearPosterior { xs, ts, alpha: 1.0, beta: 25.0 };

    // A = αI + βXᵀX, mean = β A⁻¹ Xᵀt, covariance = A⁻¹
    let mut a = Matrix::identity(d);
    let mut xt = vec![0.0; d];
    for (x, t) in post.xs.iter().zip(&post.ts) {
        for i in 0..d {
            xt[i] += post.beta * x[i] * t;
            for j in 0..d {
                a[(i, j)] += post.beta * x[i] * x[j];
            }
        }
    }
    let mean_exact = solve_linear(&a, &Matrix::column(&xt)).unwrap().into_vec();
    let cov_exact = solve_linear(&a, &Matrix::identity(d)).unwrap();

    let cfg = HmcConfig {
        step_size: 0.01,
        leapfrog_steps: 10,
        burn_in: 200,
        retained: 5000,
        seed: 0,
    };
    let ens = hmc_sample(&post, &cfg, &[0.0; 3], &mut RngStream::new(31)).unwrap();
    let m = mean(&ens.samples);
    for i in 0..d {
        let se = batch_se(&ens.samples, i, 50);
        assert!((m[i] - mean_exact[i]).abs() < 3.0 * se, "mean[{i}]: {} vs {}", m[i], mean_exact[i]);
    }
    let c = covariance(&ens.samples);
    let rel = frobenius(&c.sub(&cov_exact).unwrap()) / frobenius(&cov_exact);
    assert!(rel < 0.05, "covariance Frobenius error {rel}");
}

#[test]
fn vanishing_likelihood_samples_the_prior() {
    let mut rng = RngStream::new(41);
    let shape = MlpShape::new(2, 3, 1).unwrap();
    let xs: Vec<Vec<f64>> = (0..10).map(|_| vec![rng.random(), rng.random()]).collect();
    let ts: Vec<Vec<f64>> = (0..10).map(|_| vec![rng.random()]).collect();
    let data = Dataset::new(xs, ts).unwrap();
    let alpha = 4.0;
    let spec = PosteriorSpec::new(shape, alpha, 1e-10, &data).unwrap();
    let cfg = HmcConfig {
        step_size: 0.05,
        leapfrog_steps: 12,
        burn_in: 50,
        retained: 4000,
        seed: 0,
    };
    let ens = hmc_sample(&spec, &cfg, &vec![0.0; shape.n_params()], &mut RngStream::new(43)).unwrap();
    let c = covariance(&ens.samples);
    let mut target = Matrix::identity(shape.n_params());
    for i in 0..shape.n_params() {
        target[(i, i)] = 1.0 / alpha;
    }
    let rel = frobenius(&c.sub(&target).unwrap()) / frobenius(&target);
    assert!(rel < 0.1, "prior covariance Frobenius error {rel}");
}

#[test]
fn acceptance_does_not_rise_with_larger_steps() {
    let mut rng = RngStream::new(5);
    let shape = MlpShape::new(2, 4, 1).unwrap();
    let xs: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.random(), rng.random()]).collect();
    let ts: Vec<Vec<f64>> = xs.iter().map(|x| vec![x[0] * x[1]]).collect();
    let data = Dataset::new(xs, ts).unwrap();
    let spec = PosteriorSpec::new(shape, 0.01, 30.0, &data).unwrap();
    let init: Vec<f64> = (0..shape.n_params()).map(|_| rng.random_range(-0.5..0.5)).collect();
    let run = |eps: f64| {
        let cfg = HmcConfig {
            step_size: eps,
            leapfrog_steps: 20,
            burn_in: 0,
            retained: 2000,
            seed: 0,
        };
        hmc_sample(&spec, &cfg, &init, &mut RngStream::new(7)).unwrap().acceptance_rate
    };
    let small = run(0.01);
    let large = run(0.04);
    assert!(small >= large, "{small} < {large}");
    assert!(small > 0.9);
}

#[test]
fn random_walk_metropolis_also_targets_the_normal() {
    let target = Quadratic::isotropic(1, 1.0);
    let cfg = HmcConfig {
        step_size: 1.5,
        leapfrog_steps: 1,
        burn_in: 500,
        retained: 20_000,
        seed: 0,
    };
    let ens = metropolis_sample(&target, &cfg, &[0.0], &mut RngStream::new(2)).unwrap();
    let c = covariance(&ens.samples);
    assert!((c[(0, 0)] - 1.0).abs() < 0.1);
    assert!(ens.acceptance_rate < 0.9);
}
