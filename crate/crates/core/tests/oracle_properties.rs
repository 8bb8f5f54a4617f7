mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rocrecal_core::oracle::{
    binormal_slope, brute_force_envelope, normal_upper_quantile, odds_ratio_rank, polyline_tpr,
    ranked_roc, DiscretePoint,
};

fn random_instance(rng: &mut ChaCha8Rng, k: usize) -> Vec<DiscretePoint> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter()
        .enumerate()
        .map(|(id, m)| DiscretePoint {
            id,
            mass: m / total,
            p1: rng.random_range(0.01..0.99),
        })
        .collect()
}

fn or_attains_envelope(points: &[DiscretePoint], ranking: &[f64]) -> bool {
    let env = brute_force_envelope(points).unwrap();
    let curve = ranked_roc(points, ranking).unwrap();
    env.iter()
        .all(|&(f, t)| (polyline_tpr(&curve, f) - t).abs() <= 1e-12)
}

#[test]
fn five_point_instance() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pts = random_instance(&mut rng, 5);
    assert!(or_attains_envelope(&pts, &odds_ratio_rank(&pts).unwrap()));
}

#[test]
fn six_point_instance_all_vertices() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let pts = random_instance(&mut rng, 6);
    let env = brute_force_envelope(&pts).unwrap();
    // every subset sum of negative masses is a vertex of some ordering
    assert_eq!(env.len(), 64);
    assert!(or_attains_envelope(&pts, &odds_ratio_rank(&pts).unwrap()));
}

#[test]
fn reversed_ranking_does_not_attain_envelope() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pts = random_instance(&mut rng, 5);
    let reversed: Vec<f64> = odds_ratio_rank(&pts).unwrap().iter().map(|v| -v).collect();
    assert!(!or_attains_envelope(&pts, &reversed));
}

#[test]
fn quantile_matches_bisection() {
    for &p in &[1e-10, 1e-4, 0.01, 0.05, 0.1, 0.3, 0.5, 0.77, 0.975, 0.9999] {
        let a = normal_upper_quantile(p);
        let b = common::upper_quantile_bisect(p);
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{p}: {a} vs {b}");
    }
}

#[test]
fn binormal_value_at_one_tenth() {
    let eta = common::upper_quantile_bisect(0.1);
    let expected = (1.5 * eta - 1.125f64).exp();
    assert!((binormal_slope(1.5, 0.1).unwrap() - expected).abs() <= 1e-12 * expected);
    // eta is about 1.2816
    assert!((eta - 1.2816).abs() < 1e-4);
}

#[test]
fn binormal_slope_decreases() {
    for mu in [0.3, 1.0, 2.5] {
        let vals: Vec<f64> = (1..1000)
            .map(|i| binormal_slope(mu, i as f64 / 1000.0).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[0] > w[1]));
    }
}
