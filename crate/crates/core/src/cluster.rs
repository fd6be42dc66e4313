//! Lloyd's k-means with greedy farthest-point seeding.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::sq_dist;
use crate::rng::RngStream;

#[derive(Debug, Clone)]
pub struct KMeans {
    pub centers: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    /// Within-cluster sum of squares after each Lloyd iteration.
    pub sse_history: Vec<f64>,
    pub iterations: usize,
}

impl KMeans {
    pub fn sse(&self) -> f64 {
        self.sse_history.last().copied().unwrap_or(f64::NAN)
    }
}

fn count_distinct(points: &[Vec<f64>]) -> usize {
    let mut keys: Vec<Vec<u64>> = points
        .iter()
        .map(|p| p.iter().map(|v| (v + 0.0).to_bits()).collect())
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Clusters `points` into `k` groups.
///
/// The first center is drawn uniformly from `rng`; each further center is the
/// point farthest from all centers chosen so far. Iterates until assignments
/// stop changing or `max_iters` is reached. A cluster that empties out is
/// re-seeded at the point with the largest distance to its own center.
pub fn kmeans(points: &[Vec<f64>], k: usize, rng: &mut RngStream, max_iters: usize) -> Result<KMeans> {
    if points.is_empty() {
        return Err(Error::EmptyInput("point set"));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::dim("points have inconsistent dimensions"));
    }
    if k == 0 {
        return Err(Error::param("k must be at least 1"));
    }
    let distinct = count_distinct(points);
    if k > distinct {
        return Err(Error::param(format!(
            "k = {k} exceeds the {distinct} distinct points"
        )));
    }

    let mut centers = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..points.len())].clone());
    let mut min_d: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let (far, _) = min_d
            .iter()
            .enumerate()
            .fold((0, -1.0), |b, (i, &d)| if d > b.1 { (i, d) } else { b });
        let c = points[far].clone();
        for (m, p) in min_d.iter_mut().zip(points) {
            *m = m.min(sq_dist(p, &c));
        }
        centers.push(c);
    }

    let mut assignments: Vec<usize> = points.iter().map(|p| nearest(p, &centers).0).collect();
    let mut sse_history = Vec::new();
    let mut iterations = 0;
    loop {
        // update step
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                for (c, s) in centers[j].iter_mut().zip(&sums[j]) {
                    *c = s / counts[j] as f64;
                }
            }
        }
        for j in 0..k {
            if counts[j] == 0 {
                let (far, _) = points
                    .iter()
                    .zip(&assignments)
                    .enumerate()
                    .map(|(i, (p, &a))| (i, sq_dist(p, &centers[a])))
                    .fold((0, -1.0), |b, cur| if cur.1 > b.1 { cur } else { b });
                let old = assignments[far];
                counts[old] -= 1;
                counts[j] = 1;
                assignments[far] = j;
                centers[j] = points[far].clone();
                if counts[old] > 0 {
                    let members: Vec<&Vec<f64>> = points
                        .iter()
                        .zip(&assignments)
                        .filter(|(_, &a)| a == old)
                        .map(|(p, _)| p)
                        .collect();
                    for d in 0..dim {
                        centers[old][d] =
                            members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64;
                    }
                }
            }
        }
        let sse: f64 = points
            .iter()
            .zip(&assignments)
            .map(|(p, &a)| sq_dist(p, &centers[a]))
            .sum();
        sse_history.push(sse);
        iterations += 1;
        if iterations >= max_iters.max(1) {
            break;
        }
        // assignment step
        let mut changed = false;
        for (p, a) in points.iter().zip(assignments.iter_mut()) {
            let (j, d) = nearest(p, &centers);
            if j != *a && d < sq_dist(p, &centers[*a]) {
                *a = j;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(KMeans {
        centers,
        assignments,
        sse_history,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    /// Exhaustive search over all two-way partitions.
    fn brute_force_two_means(v: &[f64]) -> (f64, f64, f64) {
        let n = v.len();
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for mask in 1..(1u32 << n) - 1 {
            let (a, b): (Vec<f64>, Vec<f64>) = {
                let mut a = vec![];
                let mut b = vec![];
                for (i, &x) in v.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        a.push(x)
                    } else {
                        b.push(x)
                    }
                }
                (a, b)
            };
            let ma = a.iter().sum::<f64>() / a.len() as f64;
            let mb = b.iter().sum::<f64>() / b.len() as f64;
            let sse: f64 = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>()
                + b.iter().map(|x| (x - mb).powi(2)).sum::<f64>();
            if sse < best.0 {
                best = (sse, ma.min(mb), ma.max(mb));
            }
        }
        best
    }

    #[test]
    fn two_clusters_match_brute_force() {
        let v = [0.0, 0.1, 10.0, 10.1];
        let (sse, lo, hi) = brute_force_two_means(&v);
        for seed in 0..5 {
            let km = kmeans(&pts(&v), 2, &mut RngStream::new(seed), 100).unwrap();
            let mut c: Vec<f64> = km.centers.iter().map(|c| c[0]).collect();
            c.sort_by(f64::total_cmp);
            assert!((c[0] - lo).abs() < 1e-12 && (c[1] - hi).abs() < 1e-12);
            assert!((km.sse() - sse).abs() < 1e-12);
        }
        assert!((lo - 0.05).abs() < 1e-12 && (hi - 10.05).abs() < 1e-12);
    }

    #[test]
    fn k_equals_n_is_exact() {
        let p = pts(&[3.0, -1.0, 7.5, 2.0]);
        let km = kmeans(&p, 4, &mut RngStream::new(1), 10).unwrap();
        assert_eq!(km.sse(), 0.0);
        let mut c: Vec<f64> = km.centers.iter().map(|c| c[0]).collect();
        c.sort_by(f64::total_cmp);
        assert_eq!(c, vec![-1.0, 2.0, 3.0, 7.5]);
    }

    #[test]
    fn single_cluster_is_global_mean() {
        let p = vec![vec![1.0, 2.0], vec![3.0, 6.0], vec![5.0, 1.0]];
        let km = kmeans(&p, 1, &mut RngStream::new(9), 10).unwrap();
        assert!((km.centers[0][0] - 3.0).abs() < 1e-15);
        assert!((km.centers[0][1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn too_many_clusters() {
        let p = pts(&[1.0, 1.0, 2.0]);
        assert!(kmeans(&p, 3, &mut RngStream::new(0), 10).is_err());
    }

    #[test]
    fn sse_non_increasing_and_centers_are_means() {
        use rand::Rng;
        let mut r = RngStream::new(123);
        let p: Vec<Vec<f64>> = (0..300)
            .map(|_| (0..3).map(|_| r.random::<f64>()).collect())
            .collect();
        for seed in 0..5 {
            let km = kmeans(&p, 7, &mut RngStream::new(seed), 200).unwrap();
            for w in km.sse_history.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{:?}", km.sse_history);
            }
            for j in 0..7 {
                let members: Vec<&Vec<f64>> = p
                    .iter()
                    .zip(&km.assignments)
                    .filter(|(_, &a)| a == j)
                    .map(|(x, _)| x)
                    .collect();
                assert!(!members.is_empty());
                for d in 0..3 {
                    let m = members.iter().map(|x| x[d]).sum::<f64>() / members.len() as f64;
                    assert!((m - km.centers[j][d]).abs() < 1e-12);
                }
            }
        }
    }
}
