//! Mean squared error with its per-output decomposition, and report tables.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Evaluation summary for one model on one dataset.
///
/// `total_mse` is the sum over outputs of the per-output MSE, i.e. the mean
/// over samples of the squared Euclidean error. `rmse` is `sqrt(total_mse / m)`
/// so it stays on the scale of a single output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub total_mse: f64,
    pub per_output_mse: Vec<f64>,
    pub rmse: f64,
    pub samples: usize,
    #[serde(default)]
    pub train_seconds: f64,
    #[serde(default)]
    pub execute_seconds: f64,
}

impl EvalReport {
    /// Report from per-output MSEs; the total is their sum.
    pub fn from_per_output(per_output_mse: Vec<f64>, samples: usize) -> Self {
        let total_mse: f64 = per_output_mse.iter().sum();
        let m = per_output_mse.len().max(1) as f64;
        EvalReport {
            total_mse,
            rmse: (total_mse / m).sqrt(),
            per_output_mse,
            samples,
            train_seconds: 0.0,
            execute_seconds: 0.0,
        }
    }
}

fn check_shapes<P: AsRef<[f64]>, T: AsRef<[f64]>>(pred: &[P], targets: &[T]) -> Result<usize> {
    if pred.is_empty() {
        return Err(Error::EmptyInput("prediction set"));
    }
    if pred.len() != targets.len() {
        return Err(Error::dim(format!(
            "{} predictions for {} targets",
            pred.len(),
            targets.len()
        )));
    }
    let m = targets[0].as_ref().len();
    for (p, t) in pred.iter().zip(targets) {
        if p.as_ref().len() != m || t.as_ref().len() != m {
            return Err(Error::dim("prediction/target width mismatch"));
        }
    }
    Ok(m)
}

/// Per-output decomposition: `(1/R) Σ_k (t_p(k) − y_p(k))²` for each output `p`.
pub fn mse<P: AsRef<[f64]>, T: AsRef<[f64]>>(predictions: &[P], targets: &[T]) -> Result<EvalReport> {
    let m = check_shapes(predictions, targets)?;
    let r = predictions.len();
    let mut per = vec![0.0; m];
    for (y, t) in predictions.iter().zip(targets) {
        for (acc, (yp, tp)) in per.iter_mut().zip(y.as_ref().iter().zip(t.as_ref())) {
            *acc += (tp - yp) * (tp - yp);
        }
    }
    for v in per.iter_mut() {
        *v /= r as f64;
    }
    Ok(EvalReport::from_per_output(per, r))
}

/// Norm form: `(1/R) Σ_k ‖t(k) − y(k)‖²`.
pub fn mse_norm_form<P: AsRef<[f64]>, T: AsRef<[f64]>>(predictions: &[P], targets: &[T]) -> Result<f64> {
    check_shapes(predictions, targets)?;
    let sum: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(y, t)| {
            let d: f64 = y.as_ref().iter().zip(t.as_ref()).map(|(a, b)| (b - a) * (b - a)).sum();
            d
        })
        .sum();
    Ok(sum / predictions.len() as f64)
}

/// Double-sum form over samples and outputs.
pub fn mse_double_sum<P: AsRef<[f64]>, T: AsRef<[f64]>>(predictions: &[P], targets: &[T]) -> Result<f64> {
    let m = check_shapes(predictions, targets)?;
    let r = predictions.len();
    let mut s = 0.0;
    for k in 0..r {
        for p in 0..m {
            let d = targets[k].as_ref()[p] - predictions[k].as_ref()[p];
            s += d * d;
        }
    }
    Ok(s / r as f64)
}

/// Combines single-output models acting together as one multi-output predictor:
/// the total is the sum of each model's MSE.
pub fn aggregate_single_output_models(reports: &[EvalReport], expected_outputs: usize) -> Result<EvalReport> {
    if reports.len() != expected_outputs {
        return Err(Error::dim(format!(
            "{} single-output reports for {expected_outputs} outputs",
            reports.len()
        )));
    }
    let mut per = Vec::with_capacity(reports.len());
    let mut samples = 0;
    for r in reports {
        if r.per_output_mse.len() != 1 {
            return Err(Error::dim("aggregated reports must each cover one output"));
        }
        per.push(r.per_output_mse[0]);
        samples = samples.max(r.samples);
    }
    let mut out = EvalReport::from_per_output(per, samples);
    out.train_seconds = reports.iter().map(|r| r.train_seconds).sum();
    out.execute_seconds = reports.iter().map(|r| r.execute_seconds).sum();
    Ok(out)
}

/// Plain-text method × metric table.
pub fn render_table(rows: &[(String, EvalReport)]) -> String {
    let m = rows.iter().map(|(_, r)| r.per_output_mse.len()).max().unwrap_or(0);
    let mut header = vec!["Method".to_string(), "MSE (test)".to_string()];
    header.extend((1..=m).map(|p| format!("Output{p}")));
    header.extend(["RMSE".to_string(), "Train (s)".to_string(), "Execute (s)".to_string()]);
    let mut cells: Vec<Vec<String>> = vec![header];
    for (name, r) in rows {
        let mut row = vec![name.clone(), format!("{:.6}", r.total_mse)];
        for p in 0..m {
            row.push(r.per_output_mse.get(p).map_or("-".into(), |v| format!("{v:.6}")));
        }
        row.push(format!("{:.6}", r.rmse));
        row.push(format!("{:.3}", r.train_seconds));
        row.push(format!("{:.3}", r.execute_seconds));
        cells.push(row);
    }
    let widths: Vec<usize> = (0..cells[0].len())
        .map(|j| cells.iter().map(|r| r[j].len()).max().unwrap_or(0))
        .collect();
    let mut s = String::new();
    for (i, row) in cells.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        let _ = writeln!(s, "{}", line.join("  ").trim_end());
        if i == 0 {
            let _ = writeln!(s, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let t = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
        let r = mse(&t, &t).unwrap();
        assert_eq!(r.total_mse, 0.0);
        assert_eq!(r.per_output_mse, vec![0.0, 0.0]);
    }

    #[test]
    fn two_samples_one_output() {
        let y = vec![vec![0.0], vec![0.0]];
        let t = vec![vec![1.0], vec![3.0]];
        assert_eq!(mse(&y, &t).unwrap().total_mse, 5.0);
    }

    #[test]
    fn shape_mismatch() {
        assert!(mse(&[vec![1.0]], &[vec![1.0, 2.0]]).is_err());
        assert!(mse(&[vec![1.0]], &[vec![1.0], vec![2.0]]).is_err());
        assert!(mse::<Vec<f64>, Vec<f64>>(&[], &[]).is_err());
    }

    fn single(v: f64) -> EvalReport {
        EvalReport::from_per_output(vec![v], 10)
    }

    #[test]
    fn aggregate_edge_cases() {
        let z = aggregate_single_output_models(&[single(0.0), single(0.0)], 2).unwrap();
        assert_eq!(z.total_mse, 0.0);
        let one = aggregate_single_output_models(&[single(0.25)], 1).unwrap();
        assert_eq!(one.total_mse, 0.25);
        assert!(aggregate_single_output_models(&[single(0.25)], 4).is_err());
    }

    #[test]
    fn permutation_invariant() {
        let y = vec![vec![0.1, 0.2], vec![0.5, 0.1], vec![0.9, 0.7]];
        let t = vec![vec![0.0, 0.3], vec![0.4, 0.4], vec![1.0, 0.2]];
        let a = mse(&y, &t).unwrap().total_mse;
        let perm = [2, 0, 1];
        let yp: Vec<_> = perm.iter().map(|&i| y[i].clone()).collect();
        let tp: Vec<_> = perm.iter().map(|&i| t[i].clone()).collect();
        assert!((a - mse(&yp, &tp).unwrap().total_mse).abs() < 1e-15);
    }

    #[test]
    fn table_has_a_row_per_method() {
        let r = EvalReport::from_per_output(vec![0.1, 0.2], 5);
        let s = render_table(&[("mlp".into(), r.clone()), ("rbf".into(), r)]);
        assert_eq!(s.lines().count(), 4);
        assert!(s.contains("Output2"));
    }
}
