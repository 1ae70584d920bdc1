mod common;

use approx::assert_abs_diff_eq;
use common::*;
use proptest::prelude::*;
use rand::Rng;
use sinkperm::partition::{
    assign_voronoi, double_centers, frequencies, kmeans, lloyd, KMeansConfig,
};
use sinkperm::Dataset;

fn ds(points: &[Vec<f64>]) -> Dataset {
    Dataset::from_rows(points).unwrap()
}

#[test]
fn kmeans_reaches_the_exhaustive_optimum_on_small_sets() {
    let mut r = rng(41);
    for trial in 0..30 {
        let n = r.random_range(4..=8);
        let k = if trial % 2 == 0 { 2 } else { 3 };
        let pts = random_points(&mut r, n, 2, 1.0);
        let cfg = KMeansConfig { seed: trial, ..KMeansConfig::default() };
        let res = kmeans(&ds(&pts), k, &cfg).unwrap();
        let best = exhaustive_kmeans(&pts, k);
        assert_abs_diff_eq!(res.wss, best, epsilon = 1e-9);
        assert_abs_diff_eq!(res.wss, wss(&pts, &res.assignments, k), epsilon = 1e-9);
    }
}

#[test]
fn result_is_a_lloyd_fixed_point() {
    let mut r = rng(43);
    let pts = random_points(&mut r, 200, 3, 1.0);
    let data = ds(&pts);
    let res = kmeans(&data, 6, &KMeansConfig::default()).unwrap();
    assert_eq!(assign_voronoi(&data, &res.centers).unwrap(), res.assignments);
    let means = groupby_means(&pts, &res.assignments, 6);
    for (j, m) in means.iter().enumerate() {
        let m = m.as_ref().expect("no empty cluster");
        for (x, y) in m.iter().zip(res.centers.row(j)) {
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-12);
        }
    }
}

#[test]
fn same_seed_same_partition() {
    let mut r = rng(47);
    let data = ds(&random_points(&mut r, 300, 5, 1.0));
    let cfg = KMeansConfig { seed: 9, ..KMeansConfig::default() };
    let a = kmeans(&data, 10, &cfg).unwrap();
    let b = kmeans(&data, 10, &cfg).unwrap();
    assert_eq!(a.assignments, b.assignments);
    assert_eq!(a.centers, b.centers);
}

#[test]
fn lloyd_never_increases_wss() {
    let mut r = rng(53);
    let pts = random_points(&mut r, 150, 2, 1.0);
    let init = ds(&pts[..7]);
    let run = lloyd(&ds(&pts), init, 300).unwrap();
    assert!(run.converged);
    for w in run.wss_history.windows(2) {
        assert!(w[1] <= w[0] + 1e-12);
    }
}

#[test]
fn frequencies_match_histogram() {
    let mut r = rng(59);
    for _ in 0..20 {
        let k = r.random_range(1..=6);
        let lx: Vec<usize> = (0..r.random_range(1..40)).map(|_| r.random_range(0..k)).collect();
        let ly: Vec<usize> = (0..r.random_range(1..40)).map(|_| r.random_range(0..k)).collect();
        let f = frequencies(&lx, &ly, k).unwrap();
        assert_eq!(f.a.as_slice(), histogram(&lx, k).as_slice());
        assert_eq!(f.b.as_slice(), histogram(&ly, k).as_slice());
    }
}

#[test]
fn double_centers_match_groupby_means() {
    let mut r = rng(61);
    for _ in 0..20 {
        let k = 4;
        let x = random_points(&mut r, 30, 2, 1.0);
        let y = random_points(&mut r, 25, 2, 1.0);
        // Labels from a fixed set of centers so every cell is populated by someone.
        let centers = ds(&[vec![-0.5, -0.5], vec![0.5, -0.5], vec![-0.5, 0.5], vec![0.5, 0.5]]);
        let lx = assign_voronoi(&ds(&x), &centers).unwrap();
        let ly = assign_voronoi(&ds(&y), &centers).unwrap();
        let setup = double_centers(&ds(&x), &ds(&y), &lx, &ly, k).unwrap();
        let mx = groupby_means(&x, &lx, k);
        let my = groupby_means(&y, &ly, k);
        let kept = setup.kept();
        for (c, &j) in setup.cells.iter().enumerate() {
            if let Some(m) = &mx[j] {
                assert_eq!(setup.omega.row(c), m.as_slice());
            }
            if let Some(m) = &my[j] {
                assert_eq!(setup.omega.row(kept + c), m.as_slice());
            }
        }
        let hx = histogram(&lx, k);
        let hy = histogram(&ly, k);
        for (c, &j) in setup.cells.iter().enumerate() {
            assert_abs_diff_eq!(setup.a_pad[c], hx[j], epsilon = 1e-15);
            assert_abs_diff_eq!(setup.b_pad[kept + c], hy[j], epsilon = 1e-15);
            assert_eq!(setup.a_pad[kept + c], 0.0);
            assert_eq!(setup.b_pad[c], 0.0);
        }
        let oracle = cost_oracle(&setup.omega.rows().map(|r| r.to_vec()).collect::<Vec<_>>());
        assert_eq!(setup.cost.entries(), oracle.as_slice());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn voronoi_labels_are_nearest(
        pts in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), 1..30),
        centers in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), 1..6),
    ) {
        let labels = assign_voronoi(&ds(&pts), &ds(&centers)).unwrap();
        for (p, &l) in pts.iter().zip(&labels) {
            let dl = sq_dist(p, &centers[l]);
            for (j, c) in centers.iter().enumerate() {
                let dj = sq_dist(p, c);
                prop_assert!(dl < dj || (dl == dj && l <= j));
            }
        }
    }
}
