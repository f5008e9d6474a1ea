//! Gauss-Legendre rules and collapsed (Duffy) rules on triangles.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, exact for polynomials of
/// degree `<= 2n - 1`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "need at least one node");
    let mut rule = vec![(0.0, 0.0); n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let dp = legendre(n, x).1;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule[i] = (-x, w);
        rule[n - 1 - i] = (x, w);
    }
    rule
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    gauss_legendre(n)
        .into_iter()
        .map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect()
}

/// Rule on the reference triangle `{ξ, η >= 0, ξ + η <= 1}` as
/// `(ξ, η, weight)`, weights summing to `1/2`. Exact for total degree
/// `<= 2n - 2`.
pub fn triangle_rule(n: usize) -> Vec<(f64, f64, f64)> {
    let line = gauss_legendre_unit(n);
    let mut rule = Vec::with_capacity(n * n);
    for &(u, wu) in &line {
        for &(v, wv) in &line {
            rule.push((u, (1.0 - u) * v, wu * wv * (1.0 - u)));
        }
    }
    rule
}
