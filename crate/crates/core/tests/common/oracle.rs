//! Reference computations that share no code with the library.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

/// HITS limit by repeated squaring of `HᵀH`.
///
/// Power iteration from a uniform hub vector converges to `P Hᵀ1`, where
/// `P` projects onto the dominant eigenspace of `HᵀH`. Squaring the
/// max-normalized matrix drives it to a multiple of `P` without ever
/// forming eigenvectors; hubs follow as `H a`. Squaring stops as soon as
/// the matrix settles, since further rounds would amplify rounding noise
/// between exactly tied eigenvalues.
pub fn hits(n: usize, edges: &[(usize, usize)]) -> (Vec<f64>, Vec<f64>) {
    let mut h = DMatrix::<f64>::zeros(n, n);
    for &(f, t) in edges {
        h[(f, t)] = 1.0;
    }
    let mut p = h.transpose() * &h;
    p /= p.amax();
    for _ in 0..64 {
        let mut next = &p * &p;
        next /= next.amax();
        let moved = (&next - &p).amax();
        p = next;
        if moved < 1e-13 {
            break;
        }
    }
    let a = &p * (h.transpose() * DVector::from_element(n, 1.0));
    let a = &a / a.sum();
    let hub = &h * &a;
    let hub = &hub / hub.sum();
    (hub.iter().copied().collect(), a.iter().copied().collect())
}

/// Random simple digraph without self-loops.
pub fn random_graph<R: Rng>(rng: &mut R, max_nodes: usize) -> (usize, Vec<(usize, usize)>) {
    let n = rng.gen_range(2..=max_nodes);
    let mut all: Vec<(usize, usize)> = (0..n)
        .flat_map(|f| (0..n).filter(move |&t| t != f).map(move |t| (f, t)))
        .collect();
    all.shuffle(rng);
    let m = rng.gen_range(1..=all.len().min(3 * n));
    all.truncate(m);
    (n, all)
}

pub fn t_two_sided(t: f64, df: f64) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df).unwrap();
    2.0 * dist.cdf(-t.abs())
}

pub fn f_upper(f: f64, d1: f64, d2: f64) -> f64 {
    FisherSnedecor::new(d1, d2).unwrap().sf(f)
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x
}

/// Least squares by the normal equations. Returns coefficients and RSS.
pub fn least_squares(x: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64) {
    let p = x[0].len();
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for (row, &yi) in x.iter().zip(y) {
        for i in 0..p {
            xty[i] += row[i] * yi;
            for j in 0..p {
                xtx[i][j] += row[i] * row[j];
            }
        }
    }
    let beta = solve(xtx, xty);
    let rss = x
        .iter()
        .zip(y)
        .map(|(row, &yi)| {
            let fit: f64 = row.iter().zip(&beta).map(|(a, b)| a * b).sum();
            (yi - fit).powi(2)
        })
        .sum();
    (beta, rss)
}

pub struct AncovaOracle {
    pub f: f64,
    pub p: f64,
    pub df1: f64,
    pub df2: f64,
    pub adjusted: Vec<f64>,
}

/// Full model `y ~ 1 + dummies + x` against `y ~ 1 + x`; adjusted means are
/// full-model predictions at the grand mean of `x`.
pub fn ancova(groups: &[(Vec<f64>, Vec<f64>)]) -> AncovaOracle {
    let k = groups.len();
    let mut full = Vec::new();
    let mut reduced = Vec::new();
    let mut y = Vec::new();
    for (g, (xs, ys)) in groups.iter().enumerate() {
        for (&xi, &yi) in xs.iter().zip(ys) {
            let mut row = vec![1.0];
            row.extend((1..k).map(|d| if d == g { 1.0 } else { 0.0 }));
            row.push(xi);
            full.push(row);
            reduced.push(vec![1.0, xi]);
            y.push(yi);
        }
    }
    let n = y.len();
    let (beta, rss_full) = least_squares(&full, &y);
    let (_, rss_reduced) = least_squares(&reduced, &y);
    let df1 = (k - 1) as f64;
    let df2 = (n - k - 1) as f64;
    let f = ((rss_reduced - rss_full) / df1) / (rss_full / df2);
    let grand_x = full.iter().map(|r| r[k]).sum::<f64>() / n as f64;
    let adjusted = (0..k)
        .map(|g| beta[0] + if g == 0 { 0.0 } else { beta[g] } + beta[k] * grand_x)
        .collect();
    AncovaOracle {
        f,
        p: f_upper(f, df1, df2),
        df1,
        df2,
        adjusted,
    }
}
