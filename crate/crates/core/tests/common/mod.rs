//! Independent reference computations shared by the integration tests.
//! Each one is deliberately naive and shares no code with the library.
#![allow(dead_code)]

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random probability vector of length `len`; with `zeros` some entries may be exactly 0.
pub fn random_simplex(rng: &mut ChaCha8Rng, len: usize, zeros: bool) -> Vec<f64> {
    loop {
        let mut w: Vec<f64> = (0..len)
            .map(|_| {
                if zeros && rng.random_bool(0.25) {
                    0.0
                } else {
                    rng.random_range(0.01..1.0)
                }
            })
            .collect();
        let s: f64 = w.iter().sum();
        if s > 0.0 {
            w.iter_mut().for_each(|x| *x /= s);
            // Push the rounding residue into the largest entry.
            let resid = 1.0 - w.iter().sum::<f64>();
            let imax = (0..len).max_by(|&i, &j| w[i].total_cmp(&w[j])).unwrap();
            w[imax] += resid;
            return w;
        }
    }
}

pub fn random_points(rng: &mut ChaCha8Rng, len: usize, dim: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..len)
        .map(|_| (0..dim).map(|_| rng.random_range(-scale..scale)).collect())
        .collect()
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Pairwise squared distances, row-major.
pub fn cost_oracle(points: &[Vec<f64>]) -> Vec<f64> {
    let mut out = Vec::new();
    for p in points {
        for q in points {
            out.push(sq_dist(p, q));
        }
    }
    out
}

/// Minimum transport cost by enumerating every basis of the transportation
/// polytope: each (r + c - 1)-subset of cells that forms a spanning tree of
/// the bipartite row/column graph determines a unique vertex.
pub fn brute_force_ot(a: &[f64], b: &[f64], d: &[f64]) -> f64 {
    let (r, c) = (a.len(), b.len());
    let cells = r * c;
    let size = r + c - 1;
    let mut best = f64::INFINITY;
    let mut subset: Vec<usize> = (0..size).collect();
    loop {
        if let Some(plan) = solve_basis(a, b, &subset) {
            if plan.iter().all(|&(_, v)| v >= -1e-12) {
                let cost: f64 = plan.iter().map(|&(cell, v)| v * d[cell]).sum();
                best = best.min(cost);
            }
        }
        // Next combination in lexicographic order.
        let mut i = size;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if subset[i] < cells - size + i {
                break;
            }
        }
        subset[i] += 1;
        for j in i + 1..size {
            subset[j] = subset[j - 1] + 1;
        }
    }
}

fn solve_basis(a: &[f64], b: &[f64], subset: &[usize]) -> Option<Vec<(usize, f64)>> {
    let c = b.len();
    let mut row_left = a.to_vec();
    let mut col_left = b.to_vec();
    let mut open: Vec<usize> = subset.to_vec();
    let mut out = Vec::new();
    while !open.is_empty() {
        // A row or column with a single open cell fixes that cell.
        let mut progress = false;
        for idx in 0..open.len() {
            let cell = open[idx];
            let (i, j) = (cell / c, cell % c);
            let row_count = open.iter().filter(|&&x| x / c == i).count();
            let col_count = open.iter().filter(|&&x| x % c == j).count();
            let value = if row_count == 1 {
                row_left[i]
            } else if col_count == 1 {
                col_left[j]
            } else {
                continue;
            };
            row_left[i] -= value;
            col_left[j] -= value;
            out.push((cell, value));
            open.remove(idx);
            progress = true;
            break;
        }
        if !progress {
            return None;
        }
    }
    let ok = row_left.iter().chain(&col_left).all(|x| x.abs() < 1e-9);
    ok.then_some(out)
}

fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Entropic problem on a 2 x 2 instance by ternary search over the single
/// free plan entry `t = T[0][0]`. Returns `(t, <D,T>, <D,T> - lambda H(T))`.
pub fn sinkhorn_2x2(a: [f64; 2], b: [f64; 2], d: [f64; 4], lambda: f64) -> (f64, f64, f64) {
    let plan = |t: f64| [t, a[0] - t, b[0] - t, a[1] - b[0] + t];
    let cost = |t: f64| plan(t).iter().zip(d).map(|(p, c)| p * c).sum::<f64>();
    let obj = |t: f64| cost(t) + lambda * plan(t).iter().map(|&p| xlogx(p)).sum::<f64>();
    let (mut lo, mut hi) = ((a[0] - b[1]).max(0.0), a[0].min(b[0]));
    for _ in 0..300 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if obj(m1) < obj(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let t = 0.5 * (lo + hi);
    (t, cost(t), obj(t))
}

/// Smallest within-cluster sum of squares over every labelling of `points`
/// into exactly `k` non-empty groups.
pub fn exhaustive_kmeans(points: &[Vec<f64>], k: usize) -> f64 {
    let n = points.len();
    let mut labels = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        let mut used = vec![false; k];
        labels.iter().for_each(|&l| used[l] = true);
        if used.iter().all(|&u| u) {
            best = best.min(wss(points, &labels, k));
        }
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
    }
}

pub fn wss(points: &[Vec<f64>], labels: &[usize], k: usize) -> f64 {
    let means = groupby_means(points, labels, k);
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| sq_dist(p, means[l].as_ref().unwrap()))
        .sum()
}

/// Per-label mean, `None` for absent labels.
pub fn groupby_means(points: &[Vec<f64>], labels: &[usize], k: usize) -> Vec<Option<Vec<f64>>> {
    let mut groups: HashMap<usize, Vec<&Vec<f64>>> = HashMap::new();
    for (p, &l) in points.iter().zip(labels) {
        groups.entry(l).or_default().push(p);
    }
    (0..k)
        .map(|l| {
            groups.get(&l).map(|g| {
                let dim = g[0].len();
                (0..dim)
                    .map(|j| g.iter().map(|p| p[j]).sum::<f64>() / g.len() as f64)
                    .collect()
            })
        })
        .collect()
}

pub fn histogram(labels: &[usize], k: usize) -> Vec<f64> {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for &l in labels {
        *counts.entry(l).or_default() += 1;
    }
    (0..k)
        .map(|l| *counts.get(&l).unwrap_or(&0) as f64 / labels.len() as f64)
        .collect()
}

/// Indices of the `k` nearest neighbours of every point (ties by index), by
/// sorting the full distance list.
pub fn knn_oracle(points: &[Vec<f64>], k: usize) -> Vec<Vec<usize>> {
    (0..points.len())
        .map(|i| {
            let mut all: Vec<(f64, usize)> = (0..points.len())
                .filter(|&j| j != i)
                .map(|j| (sq_dist(&points[i], &points[j]), j))
                .collect();
            all.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            all.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Exact permutation p-value: fraction of all `C(n+m, n)` splits whose
/// statistic is at least the observed one.
pub fn exhaustive_pvalue(n: usize, m: usize, stat: impl Fn(&[bool]) -> f64) -> f64 {
    let total = n + m;
    let observed: Vec<bool> = (0..total).map(|i| i < n).collect();
    let t_obs = stat(&observed);
    let (mut hits, mut splits) = (0usize, 0usize);
    for mask in 0u32..(1 << total) {
        if mask.count_ones() as usize != n {
            continue;
        }
        let in_x: Vec<bool> = (0..total).map(|i| mask & (1 << i) != 0).collect();
        splits += 1;
        if stat(&in_x) >= t_obs {
            hits += 1;
        }
    }
    hits as f64 / splits as f64
}

/// Kolmogorov-Smirnov distance between a sample and Uniform(0, 1).
pub fn ks_uniform(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            ((i + 1) as f64 / n - x).max(x - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Empirical covariance of the first `k - 1` one-hot coordinates of
/// categorical draws from `p`.
pub fn monte_carlo_multinomial_cov(p: &[f64], draws: usize, seed: u64) -> Vec<Vec<f64>> {
    let k = p.len();
    let mut rng = rng(seed);
    let mut sums = vec![0.0; k - 1];
    let mut cross = vec![vec![0.0; k - 1]; k - 1];
    for _ in 0..draws {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut cat = k - 1;
        for (j, &pj) in p.iter().enumerate() {
            acc += pj;
            if u < acc {
                cat = j;
                break;
            }
        }
        if cat < k - 1 {
            sums[cat] += 1.0;
            cross[cat][cat] += 1.0;
        }
    }
    let n = draws as f64;
    (0..k - 1)
        .map(|i| {
            (0..k - 1)
                .map(|j| cross[i][j] / n - (sums[i] / n) * (sums[j] / n))
                .collect()
        })
        .collect()
}
