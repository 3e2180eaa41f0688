//! Synthetic assessment data.

use chunkchain::analytics::GroupSample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn random_groups(rng: &mut ChaCha8Rng, slope: f64) -> Vec<GroupSample> {
    let noise = Normal::new(0.0, 4.0).unwrap();
    ["A", "B", "P"]
        .iter()
        .enumerate()
        .map(|(g, label)| {
            let n = rng.gen_range(4..30);
            let shift = rng.gen_range(-5.0..5.0) + g as f64;
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(5.0..40.0)).collect();
            let y: Vec<f64> = x.iter().map(|xi| 10.0 + shift + slope * xi + noise.sample(rng)).collect();
            GroupSample::new(*label, x, y)
        })
        .collect()
}

/// Shifts each group's covariate so that it is uncorrelated with the
/// response inside the group, forcing the pooled slope to zero.
pub fn decorrelate(groups: &mut [GroupSample]) {
    for g in groups {
        let n = g.response.len() as f64;
        let my = g.response.iter().sum::<f64>() / n;
        let mx = g.covariate.iter().sum::<f64>() / n;
        let yc: Vec<f64> = g.response.iter().map(|y| y - my).collect();
        let xc: Vec<f64> = g.covariate.iter().map(|x| x - mx).collect();
        let proj = xc.iter().zip(&yc).map(|(a, b)| a * b).sum::<f64>() / yc.iter().map(|b| b * b).sum::<f64>();
        g.covariate = xc.iter().zip(&yc).map(|(x, y)| mx + x - proj * y).collect();
    }
}

/// Paired samples of length `n` whose sample correlation is exactly `r`
/// up to rounding: `y` mixes standardized `x` with a residual made
/// orthogonal to it.
pub fn with_correlation<R: Rng>(rng: &mut R, n: usize, r: f64) -> (Vec<f64>, Vec<f64>) {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let standardize = |v: &mut Vec<f64>| {
        let m = v.iter().sum::<f64>() / n as f64;
        v.iter_mut().for_each(|x| *x -= m);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
    };
    let mut x: Vec<f64> = (0..n).map(|_| normal.sample(rng)).collect();
    let mut z: Vec<f64> = (0..n).map(|_| normal.sample(rng)).collect();
    standardize(&mut x);
    standardize(&mut z);
    let dot: f64 = x.iter().zip(&z).map(|(a, b)| a * b).sum();
    z.iter_mut().zip(&x).for_each(|(zi, xi)| *zi -= dot * xi);
    standardize(&mut z);
    let s = (1.0 - r * r).sqrt();
    let y = x.iter().zip(&z).map(|(xi, zi)| 30.0 + 8.0 * (r * xi + s * zi)).collect();
    let x = x.iter().map(|xi| 25.0 + 6.0 * xi).collect();
    (x, y)
}
