//! Test-only references that do not share code with the solvers they check.

#![allow(dead_code)]

use egosenti::datamodel::SentimentLabel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Projected gradient ascent on the box-constrained hinge dual
/// `max sum a - 1/2 a^T Q a`, `Q_ij = y_i y_j <[x_i, B], [x_j, B]>`,
/// iterated until the max projected-gradient magnitude drops below `tol`.
/// Returns the primal weights (bias column last).
pub fn qp_oracle(
    xs: &[Vec<f64>],
    ys: &[f64],
    costs: &[f64],
    bias_scale: f64,
    tol: f64,
) -> Vec<f64> {
    let n = xs.len();
    let aug: Vec<Vec<f64>> = xs
        .iter()
        .map(|x| {
            let mut v = x.clone();
            v.push(bias_scale);
            v
        })
        .collect();
    let mut q = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let d: f64 = aug[i].iter().zip(&aug[j]).map(|(a, b)| a * b).sum();
            q[i][j] = ys[i] * ys[j] * d;
        }
    }
    // largest eigenvalue by power iteration; Q is PSD
    let mut v = vec![1.0; n];
    let mut lambda = 0.0;
    for _ in 0..2000 {
        let w: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| q[i][j] * v[j]).sum())
            .collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        lambda = norm;
        v = w.iter().map(|x| x / norm).collect();
    }
    let step = 1.0 / (lambda * 1.01).max(1e-12);
    let mut a = vec![0.0; n];
    for _ in 0..5_000_000 {
        let grad: Vec<f64> = (0..n)
            .map(|i| 1.0 - (0..n).map(|j| q[i][j] * a[j]).sum::<f64>())
            .collect();
        let mut worst = 0.0f64;
        for i in 0..n {
            let pg = if a[i] <= 0.0 {
                grad[i].max(0.0)
            } else if a[i] >= costs[i] {
                grad[i].min(0.0)
            } else {
                grad[i]
            };
            worst = worst.max(pg.abs());
        }
        if worst < tol {
            break;
        }
        for i in 0..n {
            a[i] = (a[i] + step * grad[i]).clamp(0.0, costs[i]);
        }
    }
    let dim = xs[0].len() + 1;
    let mut w = vec![0.0; dim];
    for i in 0..n {
        for k in 0..dim {
            w[k] += a[i] * ys[i] * aug[i][k];
        }
    }
    w
}

/// A small binary fixture.
pub struct Fixture {
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<f64>,
    pub costs: Vec<f64>,
}

/// Seeded random fixtures with `n <= 20`, `d <= 3`: points around a random
/// hyperplane with a few flipped labels and mixed per-sample costs.
pub fn small_fixtures(count: usize, seed: u64) -> Vec<Fixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let d = rng.random_range(1..=3usize);
        let n = rng.random_range(2..=20usize);
        let normal: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let offset = rng.random_range(-0.5..0.5);
        let c = [0.1, 1.0, 10.0][out.len() % 3];
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..n {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let s: f64 = x.iter().zip(&normal).map(|(a, b)| a * b).sum::<f64>() + offset;
            let mut y = if s >= 0.0 { 1.0 } else { -1.0 };
            if rng.random_bool(0.15) {
                y = -y;
            }
            xs.push(x);
            ys.push(y);
        }
        if !(ys.contains(&1.0) && ys.contains(&-1.0)) {
            continue;
        }
        let costs = ys
            .iter()
            .map(|&y| if y > 0.0 { c } else { 2.0 * c })
            .collect();
        out.push(Fixture { xs, ys, costs });
    }
    out
}

/// Majority vote by exhaustive counting: the label with the most votes;
/// among those, the largest margin sum; then Neutral, Positive, Negative.
pub fn counting_oracle(preds: &[(SentimentLabel, f64)]) -> SentimentLabel {
    use SentimentLabel::*;
    let count = |l: SentimentLabel| preds.iter().filter(|(p, _)| *p == l).count();
    let margin = |l: SentimentLabel| -> f64 {
        let mut m: Vec<f64> = preds
            .iter()
            .filter(|(p, _)| *p == l)
            .map(|(_, v)| *v)
            .collect();
        m.sort_by(f64::total_cmp);
        m.iter().sum()
    };
    let top = [Positive, Neutral, Negative]
        .iter()
        .map(|&l| count(l))
        .max()
        .unwrap();
    let tied: Vec<SentimentLabel> = [Neutral, Positive, Negative]
        .into_iter()
        .filter(|&l| count(l) == top)
        .collect();
    let best_margin = tied
        .iter()
        .map(|&l| margin(l))
        .fold(f64::NEG_INFINITY, f64::max);
    // `tied` is listed in priority order, so the first hit wins
    *tied.iter().find(|&&l| margin(l) == best_margin).unwrap()
}
