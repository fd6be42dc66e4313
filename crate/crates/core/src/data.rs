//! Steam-generator data preparation: CSV ingestion, outlier removal, min-max
//! scaling, and the seeded train/validation/test split.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

pub const N_INPUTS: usize = 4;
pub const N_OUTPUTS: usize = 4;
pub const N_COLUMNS: usize = N_INPUTS + N_OUTPUTS;

pub const COLUMN_NAMES: [&str; N_COLUMNS] = [
    "fuel",
    "air",
    "reference_level",
    "disturbance",
    "drum_pressure",
    "excess_oxygen",
    "water_level",
    "steam_flow",
];

/// Unscaled plant records in file order: four inputs then four outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub columns: Vec<String>,
    pub rows: Vec<[f64; N_COLUMNS]>,
}

impl RawDataset {
    pub fn new(rows: Vec<[f64; N_COLUMNS]>) -> Self {
        RawDataset {
            columns: COLUMN_NAMES.iter().map(|s| s.to_string()).collect(),
            rows,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            write_row(&mut s, r);
        }
        s
    }

    /// Splits each record into (inputs, targets) without rescaling.
    pub fn to_dataset(&self) -> Dataset {
        Dataset {
            n_in: N_INPUTS,
            n_out: N_OUTPUTS,
            inputs: self.rows.iter().map(|r| r[..N_INPUTS].to_vec()).collect(),
            targets: self.rows.iter().map(|r| r[N_INPUTS..].to_vec()).collect(),
        }
    }
}

fn write_row(s: &mut String, vals: &[f64]) {
    for (i, v) in vals.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        // `{:?}` prints the shortest representation that round-trips exactly.
        let _ = write!(s, "{v:?}");
    }
    s.push('\n');
}

/// Input/target pairs with fixed dimensions. All learners consume this.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub n_in: usize,
    pub n_out: usize,
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::dim(format!(
                "{} inputs but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        let n_in = inputs.first().map_or(0, Vec::len);
        let n_out = targets.first().map_or(0, Vec::len);
        if inputs.iter().any(|x| x.len() != n_in) || targets.iter().any(|t| t.len() != n_out) {
            return Err(Error::dim("ragged rows in dataset"));
        }
        Ok(Dataset {
            n_in,
            n_out,
            inputs,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            n_in: self.n_in,
            n_out: self.n_out,
            inputs: indices.iter().map(|&i| self.inputs[i].clone()).collect(),
            targets: indices.iter().map(|&i| self.targets[i].clone()).collect(),
        }
    }

    /// Single-output view of target column `p`.
    pub fn output(&self, p: usize) -> Dataset {
        Dataset {
            n_in: self.n_in,
            n_out: 1,
            inputs: self.inputs.clone(),
            targets: self.targets.iter().map(|t| vec![t[p]]).collect(),
        }
    }

    pub fn target_column(&self, p: usize) -> Vec<f64> {
        self.targets.iter().map(|t| t[p]).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let names: Vec<String> = if self.n_in == N_INPUTS && self.n_out == N_OUTPUTS {
            COLUMN_NAMES.iter().map(|c| c.to_string()).collect()
        } else {
            (0..self.n_in)
                .map(|i| format!("x{i}"))
                .chain((0..self.n_out).map(|p| format!("t{p}")))
                .collect()
        };
        s.push_str(&names.join(","));
        s.push('\n');
        let mut row = Vec::with_capacity(self.n_in + self.n_out);
        for (x, t) in self.inputs.iter().zip(&self.targets) {
            row.clear();
            row.extend_from_slice(x);
            row.extend_from_slice(t);
            write_row(&mut s, &row);
        }
        s
    }

    /// Reads a headered CSV written by [`Dataset::to_csv`].
    pub fn read_csv(path: &Path, n_in: usize) -> Result<Dataset> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        let mut width = None;
        for (lineno, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let vals = parse_fields(line, ',', path, lineno + 1)?;
            let w = *width.get_or_insert(vals.len());
            if vals.len() != w || w <= n_in {
                return Err(Error::Schema {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    expected: w,
                    found: vals.len(),
                });
            }
            inputs.push(vals[..n_in].to_vec());
            targets.push(vals[n_in..].to_vec());
        }
        if inputs.is_empty() {
            return Err(Error::Empty(path.to_path_buf()));
        }
        Dataset::new(inputs, targets)
    }
}

fn parse_fields(line: &str, delimiter: char, path: &Path, lineno: usize) -> Result<Vec<f64>> {
    line.split(delimiter)
        .map(|f| {
            f.trim().parse::<f64>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                msg: format!("cannot parse {:?} as a number", f.trim()),
            })
        })
        .collect()
}

/// Reads an 8-column delimited file. A first line that does not parse as
/// numbers is taken as the header.
pub fn load_dataset(path: &Path, delimiter: char) -> Result<RawDataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut columns: Vec<String> = COLUMN_NAMES.iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    let mut first = true;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(delimiter).collect();
        if first {
            first = false;
            if fields.iter().any(|f| f.trim().parse::<f64>().is_err()) {
                if fields.len() != N_COLUMNS {
                    return Err(Error::Schema {
                        path: path.to_path_buf(),
                        line: lineno,
                        expected: N_COLUMNS,
                        found: fields.len(),
                    });
                }
                columns = fields.iter().map(|f| f.trim().to_string()).collect();
                continue;
            }
        }
        if fields.len() != N_COLUMNS {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                line: lineno,
                expected: N_COLUMNS,
                found: fields.len(),
            });
        }
        let vals = parse_fields(line, delimiter, path, lineno)?;
        let mut row = [0.0; N_COLUMNS];
        row.copy_from_slice(&vals);
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Empty(path.to_path_buf()));
    }
    Ok(RawDataset { columns, rows })
}

/// Drops records whose fuel or air input (already on a 0..1 scale in the
/// plant log) falls outside `[0, 1]`. Returns survivors in original order and
/// the number removed.
pub fn remove_outliers(raw: &RawDataset) -> (RawDataset, usize) {
    let in_range = |v: f64| (0.0..=1.0).contains(&v);
    let rows: Vec<[f64; N_COLUMNS]> = raw
        .rows
        .iter()
        .filter(|r| in_range(r[0]) && in_range(r[1]))
        .copied()
        .collect();
    let removed = raw.rows.len() - rows.len();
    (
        RawDataset {
            columns: raw.columns.clone(),
            rows,
        },
        removed,
    )
}

/// Per-column minimum and maximum used for min-max scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ScalingParams {
    pub fn fit(raw: &RawDataset) -> Result<Self> {
        if raw.rows.is_empty() {
            return Err(Error::EmptyInput("dataset"));
        }
        let mut min = vec![f64::INFINITY; N_COLUMNS];
        let mut max = vec![f64::NEG_INFINITY; N_COLUMNS];
        for r in &raw.rows {
            for j in 0..N_COLUMNS {
                min[j] = min[j].min(r[j]);
                max[j] = max[j].max(r[j]);
            }
        }
        let params = ScalingParams { min, max };
        if let Some(&j) = params.constant_columns().first() {
            return Err(Error::ConstantColumn {
                index: j,
                name: raw.columns.get(j).cloned().unwrap_or_default(),
            });
        }
        Ok(params)
    }

    pub fn constant_columns(&self) -> Vec<usize> {
        (0..self.min.len()).filter(|&j| self.max[j] == self.min[j]).collect()
    }

    pub fn scale_value(&self, column: usize, v: f64) -> f64 {
        (v - self.min[column]) / (self.max[column] - self.min[column])
    }

    pub fn unscale_value(&self, column: usize, v: f64) -> f64 {
        self.min[column] + v * (self.max[column] - self.min[column])
    }

    /// Applies these parameters to a raw dataset (used for train-only scaling,
    /// where held-out values may leave `[0, 1]`).
    pub fn apply(&self, raw: &RawDataset) -> Result<Dataset> {
        if self.min.len() != N_COLUMNS || self.max.len() != N_COLUMNS {
            return Err(Error::dim(format!(
                "scaling params have {} columns, expected {N_COLUMNS}",
                self.min.len()
            )));
        }
        let scaled = |r: &[f64; N_COLUMNS], range: std::ops::Range<usize>| -> Vec<f64> {
            range.map(|j| self.scale_value(j, r[j])).collect()
        };
        Ok(Dataset {
            n_in: N_INPUTS,
            n_out: N_OUTPUTS,
            inputs: raw.rows.iter().map(|r| scaled(r, 0..N_INPUTS)).collect(),
            targets: raw.rows.iter().map(|r| scaled(r, N_INPUTS..N_COLUMNS)).collect(),
        })
    }

    /// Maps a vector of scaled outputs back to plant units.
    pub fn unscale_outputs(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .enumerate()
            .map(|(p, &v)| self.unscale_value(N_INPUTS + p, v))
            .collect()
    }
}

/// Scales every column to `[0, 1]` by its own min and max.
pub fn minmax_scale(raw: &RawDataset) -> Result<(Dataset, ScalingParams)> {
    let params = ScalingParams::fit(raw)?;
    let data = params.apply(raw)?;
    Ok((data, params))
}

pub fn inverse_scale(scaled: &Dataset, params: &ScalingParams) -> Result<RawDataset> {
    let width = scaled.n_in + scaled.n_out;
    if width != N_COLUMNS || params.min.len() != N_COLUMNS || params.max.len() != N_COLUMNS {
        return Err(Error::dim(format!(
            "dataset has {width} columns, scaling params {}",
            params.min.len()
        )));
    }
    let rows = scaled
        .inputs
        .iter()
        .zip(&scaled.targets)
        .map(|(x, t)| {
            let mut r = [0.0; N_COLUMNS];
            for (j, v) in x.iter().chain(t).enumerate() {
                r[j] = params.unscale_value(j, *v);
            }
            r
        })
        .collect();
    Ok(RawDataset::new(rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.6,
            validation: 0.2,
            test: 0.2,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let r = [self.train, self.validation, self.test];
        if r.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::param(format!("split ratios must be positive, got {r:?}")));
        }
        let sum: f64 = r.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::param(format!("split ratios sum to {sum}, expected 1")));
        }
        Ok(())
    }

    /// (train, validation, test) sizes: validation and test take their floor
    /// share, train takes the rest.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let share = |r: f64| ((n as f64) * r + 1e-9).floor() as usize;
        let val = share(self.validation);
        let test = share(self.test).min(n - val);
        (n - val - test, val, test)
    }
}

#[derive(Debug, Clone)]
pub struct SplitDataset {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
    pub seed: u64,
    pub ratios: SplitRatios,
    /// Row indices into the split input, in shuffled order.
    pub train_idx: Vec<usize>,
    pub validation_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

/// Seeded permutation of row indices followed by a contiguous three-way cut.
pub fn split_indices(n: usize, ratios: SplitRatios, seed: u64) -> Result<[Vec<usize>; 3]> {
    ratios.validate()?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut RngStream::new(seed));
    let (ntr, nva, _) = ratios.sizes(n);
    let test = idx.split_off(ntr + nva);
    let val = idx.split_off(ntr);
    Ok([idx, val, test])
}

pub fn shuffle_split(data: &Dataset, ratios: SplitRatios, seed: u64) -> Result<SplitDataset> {
    let [tr, va, te] = split_indices(data.len(), ratios, seed)?;
    Ok(SplitDataset {
        train: data.subset(&tr),
        validation: data.subset(&va),
        test: data.subset(&te),
        seed,
        ratios,
        train_idx: tr,
        validation_idx: va,
        test_idx: te,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleMode {
    /// Fit min/max on the whole cleaned dataset, then split.
    #[default]
    FullDataset,
    /// Split first, fit min/max on the training rows only.
    TrainOnly,
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub split: SplitDataset,
    pub params: ScalingParams,
    pub removed: usize,
    pub kept: usize,
}

/// Outlier removal, scaling and splitting in one pass.
pub fn prepare(raw: &RawDataset, ratios: SplitRatios, seed: u64, mode: ScaleMode) -> Result<Prepared> {
    let (clean, removed) = remove_outliers(raw);
    if clean.is_empty() {
        return Err(Error::EmptyInput("dataset after outlier removal"));
    }
    let (split, params) = match mode {
        ScaleMode::FullDataset => {
            let (scaled, params) = minmax_scale(&clean)?;
            (shuffle_split(&scaled, ratios, seed)?, params)
        }
        ScaleMode::TrainOnly => {
            let [tr, va, te] = split_indices(clean.len(), ratios, seed)?;
            let pick = |ix: &[usize]| RawDataset {
                columns: clean.columns.clone(),
                rows: ix.iter().map(|&i| clean.rows[i]).collect(),
            };
            let params = ScalingParams::fit(&pick(&tr))?;
            let split = SplitDataset {
                train: params.apply(&pick(&tr))?,
                validation: params.apply(&pick(&va))?,
                test: params.apply(&pick(&te))?,
                seed,
                ratios,
                train_idx: tr,
                validation_idx: va,
                test_idx: te,
            };
            (split, params)
        }
    };
    Ok(Prepared {
        split,
        params,
        removed,
        kept: clean.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn row(fuel: f64, air: f64, k: f64) -> [f64; N_COLUMNS] {
        [fuel, air, 20.0 + k, 5.0 - k, 300.0 + k, 3.0 * k, 0.1 * k, 15.0 + k]
    }

    #[test]
    fn loads_two_rows() {
        let f = write_tmp("0.5,0.5,20,5,300,3,0.1,15\n0.5,0.5,20,5,300,3,0.1,15\n");
        let raw = load_dataset(f.path(), ',').unwrap();
        assert_eq!(raw.len(), 2);
        assert_eq!(raw.rows[0], [0.5, 0.5, 20.0, 5.0, 300.0, 3.0, 0.1, 15.0]);
    }

    #[test]
    fn header_is_skipped() {
        let f = write_tmp("a,b,c,d,e,f,g,h\n1,2,3,4,5,6,7,8\n");
        let raw = load_dataset(f.path(), ',').unwrap();
        assert_eq!(raw.columns[7], "h");
        assert_eq!(raw.len(), 1);
    }

    #[test]
    fn empty_file_has_no_rows() {
        let f = write_tmp("");
        let err = load_dataset(f.path(), ',').unwrap_err();
        assert!(err.to_string().contains("no data rows"));
    }

    #[test]
    fn seven_fields_is_schema_error() {
        let f = write_tmp("1,2,3,4,5,6,7,8\n1,2,3,4,5,6,7\n");
        match load_dataset(f.path(), ',').unwrap_err() {
            Error::Schema { line, found, .. } => {
                assert_eq!(line, 2);
                assert_eq!(found, 7);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn malformed_number_names_line() {
        let f = write_tmp("1,2,3,4,5,6,7,8\n1,2,x,4,5,6,7,8\n");
        match load_dataset(f.path(), ',').unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn alternate_delimiter() {
        let f = write_tmp("1;2;3;4;5;6;7;8\n");
        assert_eq!(load_dataset(f.path(), ';').unwrap().len(), 1);
    }

    #[test]
    fn outliers_removed_in_order() {
        let raw = RawDataset::new(vec![
            row(0.5, 0.5, 1.0),
            row(1.2, 0.5, 2.0),
            row(0.3, -0.1, 3.0),
            row(1.0, 0.0, 4.0),
        ]);
        let (clean, removed) = remove_outliers(&raw);
        assert_eq!(removed, 2);
        assert_eq!(clean.rows, vec![raw.rows[0], raw.rows[3]]);
        let (again, removed2) = remove_outliers(&clean);
        assert_eq!(removed2, 0);
        assert_eq!(again, clean);
    }

    #[test]
    fn scales_column() {
        let raw = RawDataset::new(vec![row(0.0, 0.0, 0.0), row(0.5, 0.5, 5.0), row(1.0, 1.0, 10.0)]);
        let (d, p) = minmax_scale(&raw).unwrap();
        assert_eq!(d.inputs.iter().map(|x| x[2]).collect::<Vec<_>>(), vec![0.0, 0.5, 1.0]);
        assert_eq!((p.min[2], p.max[2]), (20.0, 30.0));
        // fuel already spans [0, 1] so it is untouched
        assert_eq!(d.inputs.iter().map(|x| x[0]).collect::<Vec<_>>(), vec![0.0, 0.5, 1.0]);
        assert_eq!(p.unscale_value(2, 0.5), 25.0);
        assert_eq!(p.unscale_value(2, 0.0), 20.0);
        assert_eq!(p.unscale_value(2, 1.0), 30.0);
    }

    #[test]
    fn constant_column_is_rejected() {
        let mut a = row(0.0, 0.0, 0.0);
        let mut b = row(1.0, 1.0, 1.0);
        a[5] = 3.0;
        b[5] = 3.0;
        match minmax_scale(&RawDataset::new(vec![a, b, a])).unwrap_err() {
            Error::ConstantColumn { index, name } => {
                assert_eq!(index, 5);
                assert_eq!(name, "excess_oxygen");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn inverse_scale_checks_width() {
        let d = Dataset::new(vec![vec![0.0]], vec![vec![1.0]]).unwrap();
        let p = ScalingParams {
            min: vec![0.0; 8],
            max: vec![1.0; 8],
        };
        assert!(inverse_scale(&d, &p).is_err());
    }

    #[test]
    fn split_sizes_and_determinism() {
        let d = Dataset::new(
            (0..10).map(|i| vec![i as f64]).collect(),
            (0..10).map(|i| vec![i as f64]).collect(),
        )
        .unwrap();
        let s = shuffle_split(&d, SplitRatios::default(), 3).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (6, 2, 2));
        let s2 = shuffle_split(&d, SplitRatios::default(), 3).unwrap();
        assert_eq!(s.train, s2.train);
        assert_eq!(s.test_idx, s2.test_idx);
    }

    #[test]
    fn remainder_goes_to_train() {
        let r = SplitRatios::default();
        assert_eq!(r.sizes(11), (7, 2, 2));
        assert_eq!(r.sizes(1), (1, 0, 0));
    }

    #[test]
    fn different_seeds_give_different_orderings() {
        let [a, _, _] = split_indices(100, SplitRatios::default(), 1).unwrap();
        let [b, _, _] = split_indices(100, SplitRatios::default(), 2).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn bad_ratios() {
        let r = SplitRatios {
            train: 0.6,
            validation: 0.3,
            test: 0.2,
        };
        assert!(split_indices(10, r, 0).is_err());
        let r = SplitRatios {
            train: 1.2,
            validation: -0.1,
            test: -0.1,
        };
        assert!(split_indices(10, r, 0).is_err());
    }

    #[test]
    fn train_only_mode_fits_on_train() {
        let rows: Vec<_> = (0..20)
            .map(|k| row(k as f64 / 20.0, (k % 7) as f64 / 7.0, k as f64))
            .collect();
        let p = prepare(&RawDataset::new(rows), SplitRatios::default(), 5, ScaleMode::TrainOnly).unwrap();
        for x in &p.split.train.inputs {
            assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
        }
        assert_eq!(p.split.train.len() + p.split.validation.len() + p.split.test.len(), 20);
    }

    #[test]
    fn dataset_csv_round_trip() {
        let d = Dataset::new(vec![vec![0.1, 1.0 / 3.0]], vec![vec![2.0e-17]]).unwrap();
        let f = write_tmp(&d.to_csv());
        assert_eq!(Dataset::read_csv(f.path(), 2).unwrap(), d);
    }
}
