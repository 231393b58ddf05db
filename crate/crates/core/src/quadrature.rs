//! Grundmann–Möller rules on simplices of dimension 0..=3.
//!
//! Points are barycentric (length `dim + 1`), weights sum to one so that an
//! integral is `measure * sum(w_q f(x_q))`.

use std::sync::OnceLock;

#[derive(Debug, Clone)]
pub struct QuadRule {
    pub dim: usize,
    pub degree: usize,
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// All compositions of `total` into `parts` nonnegative parts, lexicographic.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in compositions(total - first, parts - 1) {
            let mut c = vec![first];
            c.append(&mut rest);
            out.push(c);
        }
    }
    out
}

fn grundmann_moller(dim: usize, s: usize) -> QuadRule {
    if dim == 0 {
        return QuadRule { dim, degree: usize::MAX, points: vec![[1.0, 0.0, 0.0, 0.0]], weights: vec![1.0] };
    }
    let d = 2 * s + 1;
    let n = dim;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for i in 0..=s {
        let denom = (d + n - 2 * i) as f64;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let w = sign * 2f64.powi(-(2 * s as i32)) * denom.powi(d as i32)
            / (factorial(i) * factorial(d + n - i))
            * factorial(n);
        for beta in compositions(s - i, n + 1) {
            let mut p = [0.0; 4];
            for (j, b) in beta.iter().enumerate() {
                p[j] = (2 * b + 1) as f64 / denom;
            }
            points.push(p);
            weights.push(w);
        }
    }
    QuadRule { dim, degree: d, points, weights }
}

const MAX_S: usize = 5;

/// Rule on a `dim`-simplex exact for polynomials of total degree `degree`.
pub fn simplex_rule(dim: usize, degree: usize) -> &'static QuadRule {
    static CACHE: OnceLock<Vec<Vec<QuadRule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| {
        (0..=3)
            .map(|dm| (0..=MAX_S).map(|s| grundmann_moller(dm, s)).collect())
            .collect()
    });
    let s = degree.saturating_sub(1).div_ceil(2);
    assert!(s <= MAX_S, "quadrature degree {degree} not available");
    &cache[dim][s]
}
