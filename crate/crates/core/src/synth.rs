//! Synthetic stand-in for steam generator records.
//!
//! Inputs are drawn uniformly: fuel and air in `[0, 1]`, reference level in
//! `[-100, 100]` mm and load disturbance in `[-1, 1]`. With `u` the inputs
//! mapped onto `[0, 1]`, the outputs in nominal units are
//!
//! ```text
//! g1 = 0.2 + 0.6·u1·(1 − 0.5·u2) + 0.2·u4                     drum pressure
//! g2 = 0.5 + 0.35·tanh(3(u2 − u1)) + 0.1·sin(π·u3)            excess oxygen
//! g3 = 0.5 + 0.6(u3 − 0.5) + 0.3(u4 − 0.5)·u1 − 0.2(u2 − 0.5)² water level
//! g4 = 0.1 + 0.5·u1 + 0.3·u4² + 0.1·u2·u3                     steam flow
//! ```
//!
//! Gaussian noise with the requested standard deviation is added to each
//! `g_k`, which is then mapped affinely onto the output's physical span.
//! The map is smooth and monotone enough to be learnable; it makes no claim
//! about real plant dynamics.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{RawDataset, N_COLUMNS, N_INPUTS, N_OUTPUTS};
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// `(low, high)` physical span of each input column.
pub const INPUT_RANGES: [(f64, f64); N_INPUTS] = [(0.0, 1.0), (0.0, 1.0), (-100.0, 100.0), (-1.0, 1.0)];

/// `(low, high)` physical span that nominal output value 0..1 maps onto.
pub const OUTPUT_RANGES: [(f64, f64); N_OUTPUTS] = [(250.0, 350.0), (1.0, 8.0), (-100.0, 100.0), (5.0, 40.0)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub samples: usize,
    /// Noise standard deviation in nominal (0..1 span) output units.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            samples: 2000,
            noise: 0.05,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 10 {
            return Err(Error::param(format!("synthetic sample count must be >= 10, got {}", self.samples)));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::param("synthetic noise must be a non-negative number"));
        }
        Ok(())
    }
}

/// Noise-free outputs in nominal units for inputs already mapped onto `[0, 1]`.
pub fn synthetic_map(u: [f64; N_INPUTS]) -> [f64; N_OUTPUTS] {
    let [u1, u2, u3, u4] = u;
    [
        0.2 + 0.6 * u1 * (1.0 - 0.5 * u2) + 0.2 * u4,
        0.5 + 0.35 * (3.0 * (u2 - u1)).tanh() + 0.1 * (PI * u3).sin(),
        0.5 + 0.6 * (u3 - 0.5) + 0.3 * (u4 - 0.5) * u1 - 0.2 * (u2 - 0.5).powi(2),
        0.1 + 0.5 * u1 + 0.3 * u4 * u4 + 0.1 * u2 * u3,
    ]
}

fn to_physical(v: f64, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * v
}

/// Nominal value of a physical input, the inverse of the input draw.
pub fn input_to_unit(column: usize, v: f64) -> f64 {
    let (lo, hi) = INPUT_RANGES[column];
    (v - lo) / (hi - lo)
}

pub fn output_to_unit(column: usize, v: f64) -> f64 {
    let (lo, hi) = OUTPUT_RANGES[column];
    (v - lo) / (hi - lo)
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<RawDataset> {
    spec.validate()?;
    let mut rng = RngStream::new(spec.seed);
    let mut rows = Vec::with_capacity(spec.samples);
    for _ in 0..spec.samples {
        let mut u = [0.0; N_INPUTS];
        for v in u.iter_mut() {
            *v = rng.random::<f64>();
        }
        let g = synthetic_map(u);
        let mut row = [0.0; N_COLUMNS];
        for i in 0..N_INPUTS {
            row[i] = to_physical(u[i], INPUT_RANGES[i]);
        }
        for k in 0..N_OUTPUTS {
            let e: f64 = if spec.noise > 0.0 {
                spec.noise * rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            };
            row[N_INPUTS + k] = to_physical(g[k] + e, OUTPUT_RANGES[k]);
        }
        rows.push(row);
    }
    Ok(RawDataset::new(rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_determinism() {
        let spec = SyntheticSpec {
            samples: 50,
            noise: 0.05,
            seed: 7,
        };
        let a = generate_synthetic(&spec).unwrap();
        assert_eq!(a.len(), 50);
        assert_eq!(a.rows[0].len(), 8);
        assert_eq!(a.to_csv(), generate_synthetic(&spec).unwrap().to_csv());
        let b = generate_synthetic(&SyntheticSpec { seed: 8, ..spec }).unwrap();
        assert_ne!(a.rows, b.rows);
    }

    #[test]
    fn noiseless_rows_lie_on_the_map() {
        let raw = generate_synthetic(&SyntheticSpec {
            samples: 200,
            noise: 0.0,
            seed: 1,
        })
        .unwrap();
        for row in &raw.rows {
            let u = [0, 1, 2, 3].map(|i| input_to_unit(i, row[i]));
            let g = synthetic_map(u);
            for k in 0..N_OUTPUTS {
                assert!((output_to_unit(k, row[N_INPUTS + k]) - g[k]).abs() < 1e-12);
            }
            assert!((0.0..=1.0).contains(&row[0]) && (0.0..=1.0).contains(&row[1]));
        }
    }

    #[test]
    fn clean_file_has_no_outliers() {
        let raw = generate_synthetic(&SyntheticSpec::default()).unwrap();
        assert_eq!(crate::data::remove_outliers(&raw).1, 0);
    }

    #[test]
    fn spec_validation() {
        assert!(SyntheticSpec { samples: 9, ..Default::default() }.validate().is_err());
        assert!(SyntheticSpec { noise: -0.1, ..Default::default() }.validate().is_err());
        assert!(SyntheticSpec { samples: 10, ..Default::default() }.validate().is_ok());
    }
}
