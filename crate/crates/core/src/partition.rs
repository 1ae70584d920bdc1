//! Data-dependent partitions of the pooled sample.
//!
//! The pooled sample is clustered once with k-means; its Voronoi cells are
//! the bins for the frequency vectors of each sample. In the double-centers
//! setting each cell contributes two support points, the means of the `X`
//! and `Y` observations falling in it.

use rand::Rng;

use crate::data::{sq_dist, Dataset};
use crate::error::{invalid_input, Result};
use crate::ot::{cost_matrix, CostMatrix, ProbVector};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            restarts: 10,
            max_iter: 300,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// `k x d` cluster centers.
    pub centers: Dataset,
    pub assignments: Vec<usize>,
    /// Within-cluster sum of squared distances.
    pub wss: f64,
}

impl KMeansResult {
    pub fn k(&self) -> usize {
        self.centers.len()
    }
}

/// One Lloyd run, with the objective after every assignment step.
#[derive(Debug, Clone)]
pub struct LloydRun {
    pub result: KMeansResult,
    pub wss_history: Vec<f64>,
    pub converged: bool,
}

/// Best of `cfg.restarts` Lloyd runs from k-means++ seeds.
///
/// Ties in the final objective go to the earliest restart.
pub fn kmeans(data: &Dataset, k: usize, cfg: &KMeansConfig) -> Result<KMeansResult> {
    if k == 0 || k > data.len() {
        return Err(invalid_input(format!(
            "k = {k} clusters requested for {} points",
            data.len()
        )));
    }
    if cfg.restarts == 0 || cfg.max_iter == 0 {
        return Err(invalid_input("k-means needs at least one restart and one iteration"));
    }
    let mut best: Option<KMeansResult> = None;
    for restart in 0..cfg.restarts {
        let mut rng = rng::stream(cfg.seed, &[restart as u64]);
        let seeds = kmeans_pp_seeds(data, k, &mut rng);
        let run = lloyd(data, seeds, cfg.max_iter)?;
        if best.as_ref().is_none_or(|b| run.result.wss < b.wss) {
            best = Some(run.result);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Distance-proportional seeding.
pub fn kmeans_pp_seeds<R: Rng + ?Sized>(data: &Dataset, k: usize, rng: &mut R) -> Dataset {
    let n = data.len();
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));
    let mut nearest: Vec<f64> = data.rows().map(|r| sq_dist(r, data.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, w) in nearest.iter().enumerate() {
                if *w > 0.0 && target < *w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            // Guard against rounding walking past the last positive weight.
            if nearest[pick] == 0.0 {
                pick = nearest.iter().rposition(|w| *w > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        chosen.push(next);
        for (d, r) in nearest.iter_mut().zip(data.rows()) {
            *d = d.min(sq_dist(r, data.row(next)));
        }
    }
    data.select(&chosen).expect("indices are in range")
}

/// Lloyd's algorithm from the given initial centers.
///
/// Stops when assignments no longer change, so on convergence every center
/// of a non-empty cell is the mean of its points and every point sits in its
/// nearest cell. A cluster that loses all of its points is moved onto the
/// point that is currently farthest from its own center.
pub fn lloyd(data: &Dataset, initial: Dataset, max_iter: usize) -> Result<LloydRun> {
    if initial.dim() != data.dim() {
        return Err(invalid_input("initial centers have the wrong dimension"));
    }
    let k = initial.len();
    let d = data.dim();
    let mut centers = initial.values().to_vec();
    let mut labels: Vec<usize> = Vec::new();
    let mut dist = vec![0.0; data.len()];
    let mut wss_history = Vec::new();
    let mut converged = false;

    for _ in 0..max_iter {
        let new_labels = nearest_centers(data, &centers, d, &mut dist);
        wss_history.push(dist.iter().sum());
        if new_labels == labels {
            converged = true;
            break;
        }
        labels = new_labels;

        let mut sums = vec![0.0; k * d];
        let mut counts = vec![0usize; k];
        for (row, &l) in data.rows().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l * d..(l + 1) * d].iter_mut().zip(row) {
                *s += x;
            }
        }
        for j in 0..k {
            let center = &mut centers[j * d..(j + 1) * d];
            if counts[j] > 0 {
                let c = counts[j] as f64;
                for (dst, s) in center.iter_mut().zip(&sums[j * d..(j + 1) * d]) {
                    *dst = s / c;
                }
            } else {
                let far = argmax(&dist);
                center.copy_from_slice(data.row(far));
                dist[far] = 0.0;
            }
        }
    }

    if !converged {
        labels = nearest_centers(data, &centers, d, &mut dist);
        wss_history.push(dist.iter().sum());
    }
    let wss = dist.iter().sum();
    Ok(LloydRun {
        result: KMeansResult {
            centers: Dataset::new(centers, d)?,
            assignments: labels,
            wss,
        },
        wss_history,
        converged,
    })
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn nearest_centers(data: &Dataset, centers: &[f64], d: usize, dist: &mut [f64]) -> Vec<usize> {
    data.rows()
        .zip(dist.iter_mut())
        .map(|(row, out)| {
            let (j, dj) = nearest(row, centers, d);
            *out = dj;
            j
        })
        .collect()
}

#[inline]
fn nearest(point: &[f64], centers: &[f64], d: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.chunks_exact(d).enumerate() {
        let dist = sq_dist(point, c);
        if dist < best.1 {
            best = (j, dist);
        }
    }
    best
}

/// Index of the nearest center for every row of `data` (ties to the lowest index).
pub fn assign_voronoi(data: &Dataset, centers: &Dataset) -> Result<Vec<usize>> {
    if data.dim() != centers.dim() {
        return Err(invalid_input(format!(
            "data has dimension {}, centers have {}",
            data.dim(),
            centers.dim()
        )));
    }
    Ok(data
        .rows()
        .map(|r| nearest(r, centers.values(), centers.dim()).0)
        .collect())
}

/// Cell frequencies of the two samples.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyPair {
    pub a: ProbVector,
    pub b: ProbVector,
}

pub fn cell_counts(labels: &[usize], k: usize) -> Result<Vec<usize>> {
    let mut counts = vec![0usize; k];
    for &l in labels {
        if l >= k {
            return Err(invalid_input(format!("label {l} out of range for {k} cells")));
        }
        counts[l] += 1;
    }
    Ok(counts)
}

pub fn frequencies(labels_x: &[usize], labels_y: &[usize], k: usize) -> Result<FrequencyPair> {
    if labels_x.is_empty() || labels_y.is_empty() {
        return Err(invalid_input("both samples need at least one label"));
    }
    Ok(FrequencyPair {
        a: ProbVector::from_counts(&cell_counts(labels_x, k)?)?,
        b: ProbVector::from_counts(&cell_counts(labels_y, k)?)?,
    })
}

/// Support of per-cell sample means with zero-padded frequency vectors.
#[derive(Debug, Clone)]
pub struct DoubleCentersSetup {
    /// `X` centers of the kept cells followed by their `Y` centers.
    pub omega: Dataset,
    /// `X` frequencies followed by zeros.
    pub a_pad: ProbVector,
    /// Zeros followed by `Y` frequencies.
    pub b_pad: ProbVector,
    pub cost: CostMatrix,
    /// Original indices of the kept cells (cells empty in both samples are dropped).
    pub cells: Vec<usize>,
}

impl DoubleCentersSetup {
    /// Number of kept cells; the support has twice this many points.
    pub fn kept(&self) -> usize {
        self.cells.len()
    }
}

pub fn double_centers(
    x: &Dataset,
    y: &Dataset,
    labels_x: &[usize],
    labels_y: &[usize],
    k: usize,
) -> Result<DoubleCentersSetup> {
    if labels_x.len() != x.len() || labels_y.len() != y.len() {
        return Err(invalid_input("one label per observation is required"));
    }
    let pooled = x.concat(y)?;
    let labels: Vec<usize> = labels_x.iter().chain(labels_y).copied().collect();
    let in_x: Vec<bool> = (0..pooled.len()).map(|i| i < x.len()).collect();
    double_centers_pooled(&pooled, &labels, &in_x, k)
}

/// Double-centers setup for the split of `pooled` given by `in_x`.
pub fn double_centers_pooled(
    pooled: &Dataset,
    labels: &[usize],
    in_x: &[bool],
    k: usize,
) -> Result<DoubleCentersSetup> {
    if labels.len() != pooled.len() || in_x.len() != pooled.len() {
        return Err(invalid_input("labels and membership must cover the pooled sample"));
    }
    let d = pooled.dim();
    let mut sums = [vec![0.0; k * d], vec![0.0; k * d]];
    let mut counts = [vec![0usize; k], vec![0usize; k]];
    for ((row, &l), &is_x) in pooled.rows().zip(labels).zip(in_x) {
        if l >= k {
            return Err(invalid_input(format!("label {l} out of range for {k} cells")));
        }
        let s = usize::from(!is_x);
        counts[s][l] += 1;
        for (acc, v) in sums[s][l * d..(l + 1) * d].iter_mut().zip(row) {
            *acc += v;
        }
    }
    let (nx, ny): (usize, usize) = (counts[0].iter().sum(), counts[1].iter().sum());
    if nx == 0 || ny == 0 {
        return Err(invalid_input("both samples need at least one observation"));
    }

    let cells: Vec<usize> = (0..k).filter(|&j| counts[0][j] + counts[1][j] > 0).collect();
    let means = |s: usize, j: usize| -> Option<Vec<f64>> {
        (counts[s][j] > 0).then(|| {
            let c = counts[s][j] as f64;
            sums[s][j * d..(j + 1) * d].iter().map(|v| v / c).collect()
        })
    };
    let x_means: Vec<Option<Vec<f64>>> = cells.iter().map(|&j| means(0, j)).collect();
    let y_means: Vec<Option<Vec<f64>>> = cells.iter().map(|&j| means(1, j)).collect();

    let kept = cells.len();
    let mut omega = Vec::with_capacity(2 * kept * d);
    for c in 0..kept {
        let center = match &x_means[c] {
            Some(m) => m.clone(),
            None => closest(&x_means, y_means[c].as_ref().expect("cell is non-empty")),
        };
        omega.extend(center);
    }
    for c in 0..kept {
        let center = match &y_means[c] {
            Some(m) => m.clone(),
            None => closest(&y_means, x_means[c].as_ref().expect("cell is non-empty")),
        };
        omega.extend(center);
    }
    let omega = Dataset::new(omega, d)?;

    let (fx, fy) = (nx as f64, ny as f64);
    let mut a_pad = vec![0.0; 2 * kept];
    let mut b_pad = vec![0.0; 2 * kept];
    for (c, &j) in cells.iter().enumerate() {
        a_pad[c] = counts[0][j] as f64 / fx;
        b_pad[kept + c] = counts[1][j] as f64 / fy;
    }
    let cost = cost_matrix(&omega);
    Ok(DoubleCentersSetup {
        omega,
        a_pad: ProbVector::new(a_pad)?,
        b_pad: ProbVector::new(b_pad)?,
        cost,
        cells,
    })
}

/// The existing center in `candidates` closest to `target` (lowest index on ties).
fn closest(candidates: &[Option<Vec<f64>>], target: &[f64]) -> Vec<f64> {
    let mut best: Option<(&Vec<f64>, f64)> = None;
    for c in candidates.iter().flatten() {
        let dist = sq_dist(c, target);
        if best.is_none_or(|(_, bd)| dist < bd) {
            best = Some((c, dist));
        }
    }
    best.expect("the other sample occupies at least one cell").0.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn line(points: &[f64]) -> Dataset {
        Dataset::new(points.to_vec(), 1).unwrap()
    }

    fn sorted_centers(r: &KMeansResult) -> Vec<f64> {
        let mut c = r.centers.values().to_vec();
        c.sort_by(f64::total_cmp);
        c
    }

    #[test]
    fn two_points_two_clusters() {
        let r = kmeans(&line(&[0.0, 10.0]), 2, &KMeansConfig::default()).unwrap();
        assert_eq!(sorted_centers(&r), vec![0.0, 10.0]);
        assert_eq!(r.wss, 0.0);
    }

    #[test]
    fn four_points_two_clusters() {
        // Enumerating the seven 2-partitions of {0,1,9,10} gives the optimum
        // {0,1} | {9,10} with wss 0.25 * 4 = 1.
        let r = kmeans(&line(&[0.0, 1.0, 9.0, 10.0]), 2, &KMeansConfig::default()).unwrap();
        assert_eq!(sorted_centers(&r), vec![0.5, 9.5]);
        assert_abs_diff_eq!(r.wss, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn single_cluster_is_grand_mean() {
        let data = Dataset::from_rows(&[[1.0, 2.0], [3.0, -1.0], [-2.0, 0.5], [0.0, 4.0]]).unwrap();
        let r = kmeans(&data, 1, &KMeansConfig::default()).unwrap();
        let mean = [0.5, 1.375];
        assert_abs_diff_eq!(r.centers.row(0)[0], mean[0], epsilon = 1e-12);
        assert_abs_diff_eq!(r.centers.row(0)[1], mean[1], epsilon = 1e-12);
        let tss: f64 = data.rows().map(|p| sq_dist(p, &mean)).sum();
        assert_abs_diff_eq!(r.wss, tss, epsilon = 1e-12);
    }

    #[test]
    fn too_many_clusters() {
        assert!(kmeans(&line(&[0.0, 1.0]), 3, &KMeansConfig::default()).is_err());
        assert!(kmeans(&line(&[0.0, 1.0]), 0, &KMeansConfig::default()).is_err());
    }

    #[test]
    fn voronoi_ties_and_identity() {
        let centers = line(&[-1.0, 1.0, 5.0]);
        assert_eq!(assign_voronoi(&line(&[0.0]), &centers).unwrap(), vec![0]);
        assert_eq!(assign_voronoi(&centers, &centers).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn frequency_examples() {
        let f = frequencies(&[0, 0, 1, 1], &[1], 2).unwrap();
        assert_eq!(f.a.as_slice(), &[0.5, 0.5]);
        let f = frequencies(&[2, 2, 2], &[0], 3).unwrap();
        assert_eq!(f.a.as_slice(), &[0.0, 0.0, 1.0]);
        assert!(frequencies(&[3], &[0], 3).is_err());
    }

    #[test]
    fn empty_cluster_is_reseeded() {
        // Both initial centers start on the left; the second one owns nothing
        // at first and must be moved to the far point.
        let data = line(&[0.0, 1.0, 2.0, 100.0]);
        let run = lloyd(&data, line(&[1.0, -500.0]), 300).unwrap();
        assert!(run.converged);
        assert_eq!(sorted_centers(&run.result), vec![1.0, 100.0]);
    }

    #[test]
    fn double_centers_identical_samples() {
        let x = Dataset::from_rows(&[[0.0, 0.0], [1.0, 0.0], [5.0, 5.0], [6.0, 5.0]]).unwrap();
        let labels = vec![0, 0, 1, 1];
        let s = double_centers(&x, &x, &labels, &labels, 2).unwrap();
        for j in 0..2 {
            assert_eq!(s.omega.row(j), s.omega.row(2 + j));
            assert_eq!(s.cost.get(j, 2 + j), 0.0);
        }
        assert_eq!(s.a_pad.as_slice(), &[0.5, 0.5, 0.0, 0.0]);
        assert_eq!(s.b_pad.as_slice(), &[0.0, 0.0, 0.5, 0.5]);
    }

    #[test]
    fn absent_sample_falls_back_to_closest_center() {
        // Cell 2 holds X only; its X mean is at 0. Y means: cell 0 at 1, cell 1 at -2.
        let x = line(&[1.0, -2.0, 0.0]);
        let y = line(&[1.0, -2.0]);
        let s = double_centers(&x, &y, &[0, 1, 2], &[0, 1], 3).unwrap();
        assert_eq!(s.omega.row(3 + 2), &[1.0]);
        assert_eq!(s.b_pad[3 + 2], 0.0);
        // And symmetrically for a cell with Y only.
        let s = double_centers(&y, &x, &[0, 1], &[0, 1, 2], 3).unwrap();
        assert_eq!(s.omega.row(2), &[1.0]);
    }

    #[test]
    fn doubly_empty_cell_is_dropped() {
        let x = line(&[0.0, 4.0]);
        let y = line(&[0.5, 4.5]);
        let s = double_centers(&x, &y, &[0, 2], &[0, 2], 3).unwrap();
        assert_eq!(s.cells, vec![0, 2]);
        assert_eq!(s.omega.len(), 4);
        assert_eq!(s.omega.values(), &[0.0, 4.0, 0.5, 4.5]);
    }
}
