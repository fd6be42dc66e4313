//! Analytic gradients against central finite differences.

use rand::Rng;
use steamreg::anfis::{premise_gradient, AnfisModel};
use steamreg::data::Dataset;
use steamreg::hmc::PosteriorSpec;
use steamreg::membership::MfFamily;
use steamreg::mlp::{MlpModel, MlpShape};
use steamreg::optim::Objective;
use steamreg::rng::RngStream;

fn random_data(n: usize, n_in: usize, n_out: usize, rng: &mut RngStream) -> Dataset {
    Dataset::new(
        (0..n).map(|_| (0..n_in).map(|_| rng.random::<f64>()).collect()).collect(),
        (0..n).map(|_| (0..n_out).map(|_| rng.random::<f64>()).collect()).collect(),
    )
    .unwrap()
}

fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

fn central<F: Fn(&[f64]) -> f64>(f: F, w: &[f64], j: usize, h: f64) -> f64 {
    let mut up = w.to_vec();
    up[j] += h;
    let mut dn = w.to_vec();
    dn[j] -= h;
    (f(&up) - f(&dn)) / (2.0 * h)
}

#[test]
fn mlp_loss_gradient() {
    let mut rng = RngStream::new(100);
    for (k, &(n_in, h, n_out)) in [(4, 8, 4), (2, 3, 1), (3, 5, 2), (1, 1, 1), (4, 2, 3), (5, 6, 2)].iter().enumerate() {
        let shape = MlpShape::new(n_in, h, n_out).unwrap();
        let model = MlpModel::init(shape, &mut rng.substream(k as u64));
        let data = random_data(25, n_in, n_out, &mut rng);
        let alpha = 0.01 * (k + 1) as f64;
        let g = model.gradient(&data, alpha).unwrap();
        let f = |w: &[f64]| MlpModel::from_params(shape, w).unwrap().loss(&data, alpha).unwrap();
        let w = model.params();
        for j in 0..w.len() {
            let fd = central(f, &w, j, 1e-6);
            assert!(rel_err(fd, g[j], 1e-7) < 1e-5, "{n_in}-{h}-{n_out} p{j}: {fd} vs {}", g[j]);
        }
    }
}

#[test]
fn posterior_energy_gradient() {
    let mut rng = RngStream::new(200);
    let shape = MlpShape::new(4, 8, 4).unwrap();
    let data = random_data(30, 4, 4, &mut rng);
    for (alpha, beta) in [(0.01, 30.0), (1.0, 1.0), (0.5, 0.0001), (2.0, 10.0), (0.01, 0.5)] {
        let spec = PosteriorSpec::new(shape, alpha, beta, &data).unwrap();
        let w: Vec<f64> = (0..shape.n_params()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = spec.energy_grad(&w).unwrap();
        for j in 0..w.len() {
            let fd = central(|x| spec.value(x), &w, j, 1e-6);
            assert!(rel_err(fd, g[j], 1e-7) < 1e-5, "α={alpha} β={beta} p{j}: {fd} vs {}", g[j]);
        }
    }
}

#[test]
fn anfis_premise_gradient_all_smooth_families() {
    let mut rng = RngStream::new(300);
    for family in [MfFamily::Gaussian, MfFamily::Bell, MfFamily::SigmoidProduct, MfFamily::SigmoidDifference, MfFamily::PiCurve] {
        for _ in 0..5 {
            let mut m = AnfisModel::grid(family, 2, &[(0.0, 1.0); 4]).unwrap();
            for c in m.consequents.iter_mut().flatten() {
                *c = rng.random_range(-1.0..1.0);
            }
            let data = random_data(20, 4, 1, &mut rng);
            let (_, g) = premise_gradient(&m, &data).unwrap();
            let p0 = m.premise_params();
            let floor = 1e-3 * g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let f = |p: &[f64]| {
                let mut q = m.clone();
                q.set_premise_params(p).unwrap();
                q.sse(&data).unwrap()
            };
            for j in 0..p0.len() {
                let fd = central(f, &p0, j, 1e-6);
                assert!(rel_err(fd, g[j], floor) < 1e-4, "{} p{j}: {fd} vs {}", family.name(), g[j]);
            }
        }
    }
}
