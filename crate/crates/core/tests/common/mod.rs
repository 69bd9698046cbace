#![allow(dead_code)]

use prospect_explain::dataset::{Features, Outcome, Standardized};
use prospect_explain::rng::Rng;

/// Central finite difference of `f` at `x` along coordinate `k`.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], k: usize, h: f64) -> f64 {
    let mut up = x.to_vec();
    let mut down = x.to_vec();
    up[k] += h;
    down[k] -= h;
    (f(&up) - f(&down)) / (2.0 * h)
}

/// `|a − b| / max(|a|, |b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

pub fn random_batch(rng: &mut Rng, n: usize) -> Standardized {
    let x: Vec<Features> = (0..n)
        .map(|_| std::array::from_fn(|_| rng.standard_normal()))
        .collect();
    let y = (0..n)
        .map(|_| {
            if rng.next_f64() < 0.5 {
                Outcome::Success
            } else {
                Outcome::Failure
            }
        })
        .collect();
    Standardized::from_rows(x, y)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}
