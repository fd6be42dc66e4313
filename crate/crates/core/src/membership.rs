//! Fuzzy membership functions with analytic parameter derivatives.
//!
//! Parameter layouts:
//!
//! | family               | params               |
//! |----------------------|----------------------|
//! | gaussian             | `[c, σ]` or two-sided `[c1, σ1, c2, σ2]` |
//! | bell                 | `[a, b, c]`          |
//! | triangular           | `[a, b, c]`          |
//! | trapezoidal          | `[a, b, c, d]`       |
//! | sigmoid-difference   | `[a1, c1, a2, c2]`   |
//! | sigmoid-product      | `[a1, c1, a2, c2]`   |
//! | pi-curve             | `[a, b, c, d]`       |
//!
//! Kinks of the piecewise families get a zero subgradient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MIN_SPREAD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MfFamily {
    Gaussian,
    Bell,
    Triangular,
    Trapezoidal,
    SigmoidDifference,
    SigmoidProduct,
    PiCurve,
}

impl MfFamily {
    pub const ALL: [MfFamily; 7] = [
        MfFamily::Gaussian,
        MfFamily::Bell,
        MfFamily::Triangular,
        MfFamily::Trapezoidal,
        MfFamily::SigmoidDifference,
        MfFamily::SigmoidProduct,
        MfFamily::PiCurve,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MfFamily::Gaussian => "gaussian",
            MfFamily::Bell => "bell",
            MfFamily::Triangular => "triangular",
            MfFamily::Trapezoidal => "trapezoidal",
            MfFamily::SigmoidDifference => "sigmoid-difference",
            MfFamily::SigmoidProduct => "sigmoid-product",
            MfFamily::PiCurve => "pi-curve",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        MfFamily::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::param(format!("unknown membership family {s:?}")))
    }

    /// Grid-partition membership function centred at `center` for neighbours
    /// `spacing` apart. Adjacent functions meet at (or slightly above) 0.5
    /// halfway between centres.
    pub fn grid_member(&self, center: f64, spacing: f64) -> MembershipFunction {
        let h = spacing.max(MIN_SPREAD);
        let params = match self {
            MfFamily::Gaussian => vec![center, 0.5 * h / (2.0 * std::f64::consts::LN_2).sqrt()],
            MfFamily::Bell => vec![0.5 * h, 2.0, center],
            MfFamily::Triangular => vec![center - h, center, center + h],
            MfFamily::Trapezoidal => vec![center - 0.75 * h, center - 0.25 * h, center + 0.25 * h, center + 0.75 * h],
            MfFamily::SigmoidDifference => {
                let a = 8.0 / h;
                vec![a, center - 0.55 * h, a, center + 0.55 * h]
            }
            MfFamily::SigmoidProduct => {
                let a = 8.0 / h;
                vec![a, center - 0.55 * h, -a, center + 0.55 * h]
            }
            MfFamily::PiCurve => vec![center - h, center, center, center + h],
        };
        MembershipFunction { family: *self, params }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipFunction {
    pub family: MfFamily,
    pub params: Vec<f64>,
}

fn sigmoid(a: f64, c: f64, x: f64) -> f64 {
    1.0 / (1.0 + (-a * (x - c)).exp())
}

fn gauss(x: f64, c: f64, s: f64) -> f64 {
    (-(x - c) * (x - c) / (2.0 * s * s)).exp()
}

/// S-shaped spline rising from 0 at `a` to 1 at `b`, with its parameter gradient.
fn s_curve(x: f64, a: f64, b: f64) -> (f64, [f64; 2]) {
    let r = b - a;
    let m = 0.5 * (a + b);
    if x <= a {
        (0.0, [0.0, 0.0])
    } else if x <= m {
        let u = x - a;
        (
            2.0 * u * u / (r * r),
            [-4.0 * u / (r * r) + 4.0 * u * u / (r * r * r), -4.0 * u * u / (r * r * r)],
        )
    } else if x < b {
        let v = x - b;
        (
            1.0 - 2.0 * v * v / (r * r),
            [-4.0 * v * v / (r * r * r), 4.0 * v / (r * r) + 4.0 * v * v / (r * r * r)],
        )
    } else {
        (1.0, [0.0, 0.0])
    }
}

/// Z-shaped spline falling from 1 at `c` to 0 at `d`.
fn z_curve(x: f64, c: f64, d: f64) -> (f64, [f64; 2]) {
    let s = d - c;
    let m = 0.5 * (c + d);
    if x <= c {
        (1.0, [0.0, 0.0])
    } else if x <= m {
        let u = x - c;
        (
            1.0 - 2.0 * u * u / (s * s),
            [4.0 * u / (s * s) - 4.0 * u * u / (s * s * s), 4.0 * u * u / (s * s * s)],
        )
    } else if x < d {
        let v = x - d;
        (
            2.0 * v * v / (s * s),
            [4.0 * v * v / (s * s * s), -4.0 * v / (s * s) - 4.0 * v * v / (s * s * s)],
        )
    } else {
        (0.0, [0.0, 0.0])
    }
}

impl MembershipFunction {
    pub fn new(family: MfFamily, params: Vec<f64>) -> Result<Self> {
        let mf = MembershipFunction { family, params };
        mf.validate()?;
        Ok(mf)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        let bad = |why: &str| Err(Error::param(format!("{} {:?}: {why}", self.family.name(), p)));
        if p.iter().any(|v| !v.is_finite()) {
            return bad("non-finite parameter");
        }
        let arity_ok = match self.family {
            MfFamily::Gaussian => p.len() == 2 || p.len() == 4,
            MfFamily::Bell | MfFamily::Triangular => p.len() == 3,
            _ => p.len() == 4,
        };
        if !arity_ok {
            return bad("wrong number of parameters");
        }
        match self.family {
            MfFamily::Gaussian if p.len() == 2 => {
                if !(p[1] > 0.0) {
                    return bad("σ must be positive");
                }
            }
            MfFamily::Gaussian => {
                if !(p[1] > 0.0 && p[3] > 0.0) || p[0] > p[2] {
                    return bad("need σ1, σ2 > 0 and c1 <= c2");
                }
            }
            MfFamily::Bell => {
                if !(p[0] > 0.0 && p[1] > 0.0) {
                    return bad("need a > 0 and b > 0");
                }
            }
            MfFamily::Triangular => {
                if !(p[0] <= p[1] && p[1] <= p[2] && p[0] < p[2]) {
                    return bad("need a <= b <= c with a < c");
                }
            }
            MfFamily::Trapezoidal => {
                if !(p[0] <= p[1] && p[1] <= p[2] && p[2] <= p[3] && p[0] < p[3]) {
                    return bad("need a <= b <= c <= d with a < d");
                }
            }
            MfFamily::PiCurve => {
                if !(p[0] < p[1] && p[1] <= p[2] && p[2] < p[3]) {
                    return bad("need a < b <= c < d");
                }
            }
            MfFamily::SigmoidDifference | MfFamily::SigmoidProduct => {}
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_with_grad(x).0
    }

    /// Membership degree and its derivative with respect to each parameter.
    pub fn eval_with_grad(&self, x: f64) -> (f64, Vec<f64>) {
        let p = &self.params;
        match self.family {
            MfFamily::Gaussian if p.len() == 2 => {
                let (c, s) = (p[0], p[1]);
                let u = x - c;
                let mu = gauss(x, c, s);
                (mu, vec![mu * u / (s * s), mu * u * u / (s * s * s)])
            }
            MfFamily::Gaussian => {
                let (c1, s1, c2, s2) = (p[0], p[1], p[2], p[3]);
                let (f1, d1) = if x < c1 {
                    let g = gauss(x, c1, s1);
                    let u = x - c1;
                    (g, [g * u / (s1 * s1), g * u * u / (s1 * s1 * s1)])
                } else {
                    (1.0, [0.0, 0.0])
                };
                let (f2, d2) = if x > c2 {
                    let g = gauss(x, c2, s2);
                    let u = x - c2;
                    (g, [g * u / (s2 * s2), g * u * u / (s2 * s2 * s2)])
                } else {
                    (1.0, [0.0, 0.0])
                };
                (f1 * f2, vec![f2 * d1[0], f2 * d1[1], f1 * d2[0], f1 * d2[1]])
            }
            MfFamily::Bell => {
                let (a, b, c) = (p[0], p[1], p[2]);
                let t = (x - c) / a;
                let t2 = t * t;
                let q = t2.powf(b);
                let mu = 1.0 / (1.0 + q);
                let dmu_dq = -mu * mu;
                if t == 0.0 {
                    return (mu, vec![0.0, 0.0, 0.0]);
                }
                let dq_da = -2.0 * b * q / a;
                let dq_db = q * t2.ln();
                let dq_dc = -2.0 * b * q / (t * a);
                (mu, vec![dmu_dq * dq_da, dmu_dq * dq_db, dmu_dq * dq_dc])
            }
            MfFamily::Triangular => {
                let (a, b, c) = (p[0], p[1], p[2]);
                if x > a && x < b {
                    let r = b - a;
                    ((x - a) / r, vec![(x - b) / (r * r), -(x - a) / (r * r), 0.0])
                } else if x > b && x < c {
                    let r = c - b;
                    ((c - x) / r, vec![0.0, (c - x) / (r * r), (x - b) / (r * r)])
                } else if x == b {
                    (1.0, vec![0.0; 3])
                } else {
                    (0.0, vec![0.0; 3])
                }
            }
            MfFamily::Trapezoidal => {
                let (a, b, c, d) = (p[0], p[1], p[2], p[3]);
                if x > a && x < b {
                    let r = b - a;
                    ((x - a) / r, vec![(x - b) / (r * r), -(x - a) / (r * r), 0.0, 0.0])
                } else if x >= b && x <= c {
                    (1.0, vec![0.0; 4])
                } else if x > c && x < d {
                    let r = d - c;
                    ((d - x) / r, vec![0.0, 0.0, (d - x) / (r * r), (x - c) / (r * r)])
                } else {
                    (0.0, vec![0.0; 4])
                }
            }
            MfFamily::SigmoidDifference | MfFamily::SigmoidProduct => {
                let (a1, c1, a2, c2) = (p[0], p[1], p[2], p[3]);
                let s1 = sigmoid(a1, c1, x);
                let s2 = sigmoid(a2, c2, x);
                let ds1 = [s1 * (1.0 - s1) * (x - c1), -s1 * (1.0 - s1) * a1];
                let ds2 = [s2 * (1.0 - s2) * (x - c2), -s2 * (1.0 - s2) * a2];
                if self.family == MfFamily::SigmoidProduct {
                    (s1 * s2, vec![s2 * ds1[0], s2 * ds1[1], s1 * ds2[0], s1 * ds2[1]])
                } else {
                    let diff = s1 - s2;
                    let sg = if diff > 0.0 {
                        1.0
                    } else if diff < 0.0 {
                        -1.0
                    } else {
                        0.0
                    };
                    (diff.abs().min(1.0), vec![sg * ds1[0], sg * ds1[1], -sg * ds2[0], -sg * ds2[1]])
                }
            }
            MfFamily::PiCurve => {
                let (s, ds) = s_curve(x, p[0], p[1]);
                let (z, dz) = z_curve(x, p[2], p[3]);
                (s * z, vec![z * ds[0], z * ds[1], s * dz[0], s * dz[1]])
            }
        }
    }

    /// Pushes parameters back into the valid region. Returns `true` if anything changed.
    pub fn clamp(&mut self) -> bool {
        let before = self.params.clone();
        let p = &mut self.params;
        let sort_spread = |v: &mut [f64]| {
            v.sort_by(f64::total_cmp);
            if v[v.len() - 1] - v[0] < MIN_SPREAD {
                let last = v.len() - 1;
                v[last] = v[0] + MIN_SPREAD;
            }
        };
        match self.family {
            MfFamily::Gaussian if p.len() == 2 => p[1] = p[1].max(MIN_SPREAD),
            MfFamily::Gaussian => {
                p[1] = p[1].max(MIN_SPREAD);
                p[3] = p[3].max(MIN_SPREAD);
                if p[0] > p[2] {
                    let m = 0.5 * (p[0] + p[2]);
                    p[0] = m;
                    p[2] = m;
                }
            }
            MfFamily::Bell => {
                p[0] = p[0].max(MIN_SPREAD);
                p[1] = p[1].max(MIN_SPREAD);
            }
            MfFamily::Triangular | MfFamily::Trapezoidal => sort_spread(p),
            MfFamily::PiCurve => {
                p.sort_by(f64::total_cmp);
                if p[1] - p[0] < MIN_SPREAD {
                    p[0] = p[1] - MIN_SPREAD;
                }
                if p[3] - p[2] < MIN_SPREAD {
                    p[3] = p[2] + MIN_SPREAD;
                }
            }
            MfFamily::SigmoidDifference | MfFamily::SigmoidProduct => {}
        }
        *p != before
    }
}
