//! Ellipse helpers: point-to-curve distance and arc-length parameterization.

use std::f64::consts::TAU;

use super::Point;

/// Euclidean distance from `p` (relative to the center) to the axis-aligned
/// ellipse with semi-axes `a >= b`. Robust bisection on the Lagrange
/// multiplier, after reflecting `p` into the first quadrant.
pub(super) fn distance(a: f64, b: f64, p: Point) -> f64 {
    let y0 = p[0].abs();
    let y1 = p[1].abs();
    if y1 > 0.0 {
        if y0 > 0.0 {
            let z0 = y0 / a;
            let z1 = y1 / b;
            let g = z0 * z0 + z1 * z1 - 1.0;
            if g == 0.0 {
                return 0.0;
            }
            let r0 = (a / b) * (a / b);
            let sbar = root(r0, z0, z1, g);
            let x0 = r0 * y0 / (sbar + r0);
            let x1 = y1 / (sbar + 1.0);
            (x0 - y0).hypot(x1 - y1)
        } else {
            (y1 - b).abs()
        }
    } else {
        let numer = a * y0;
        let denom = a * a - b * b;
        if numer < denom {
            let xde0 = numer / denom;
            let x0 = a * xde0;
            let x1 = b * (1.0 - xde0 * xde0).max(0.0).sqrt();
            (x0 - y0).hypot(x1)
        } else {
            (y0 - a).abs()
        }
    }
}

fn root(r0: f64, z0: f64, z1: f64, g: f64) -> f64 {
    let n0 = r0 * z0;
    let mut s0 = z1 - 1.0;
    let mut s1 = if g < 0.0 { 0.0 } else { n0.hypot(z1) - 1.0 };
    let mut s = 0.0;
    for _ in 0..200 {
        s = 0.5 * (s0 + s1);
        if s == s0 || s == s1 {
            break;
        }
        let ratio0 = n0 / (s + r0);
        let ratio1 = z1 / (s + 1.0);
        let gs = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
        if gs > 0.0 {
            s0 = s;
        } else if gs < 0.0 {
            s1 = s;
        } else {
            break;
        }
    }
    s
}

/// Cumulative arc length of `t ↦ (a cos t, b sin t)` on a fine panel grid,
/// with Newton inversion.
pub(super) struct ArcLength {
    a: f64,
    b: f64,
    cumulative: Vec<f64>,
}

const PANELS: usize = 2048;
// 4-point Gauss-Legendre on [-1, 1]
const GL4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

impl ArcLength {
    pub(super) fn new(a: f64, b: f64) -> Self {
        let dt = TAU / PANELS as f64;
        let mut cumulative = Vec::with_capacity(PANELS + 1);
        let mut s = 0.0;
        cumulative.push(0.0);
        for k in 0..PANELS {
            let mid = (k as f64 + 0.5) * dt;
            s += GL4
                .iter()
                .map(|&(x, w)| w * speed(a, b, mid + 0.5 * dt * x))
                .sum::<f64>()
                * 0.5
                * dt;
            cumulative.push(s);
        }
        Self { a, b, cumulative }
    }

    pub(super) fn total(&self) -> f64 {
        self.cumulative[PANELS]
    }

    /// Parameter `t` at which the arc length from `t = 0` equals `s`.
    pub(super) fn parameter_at(&self, s: f64) -> f64 {
        let dt = TAU / PANELS as f64;
        let k = match self.cumulative.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(k) => return k as f64 * dt,
            Err(k) => k.saturating_sub(1).min(PANELS - 1),
        };
        let mut t = k as f64 * dt
            + dt * (s - self.cumulative[k]) / (self.cumulative[k + 1] - self.cumulative[k]);
        for _ in 0..4 {
            let lo = k as f64 * dt;
            let h = t - lo;
            // arc length from the panel start to t by 4-point Gauss-Legendre
            let partial = GL4
                .iter()
                .map(|&(x, w)| w * speed(self.a, self.b, lo + 0.5 * h * (x + 1.0)))
                .sum::<f64>()
                * 0.5
                * h;
            t -= (self.cumulative[k] + partial - s) / speed(self.a, self.b, t);
        }
        t
    }
}

fn speed(a: f64, b: f64, t: f64) -> f64 {
    (a * t.sin()).hypot(b * t.cos())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_matches_dense_search() {
        let (a, b) = (2.0, 1.0);
        let pts: Vec<Point> = (0..20000)
            .map(|k| {
                let t = TAU * k as f64 / 20000.0;
                [a * t.cos(), b * t.sin()]
            })
            .collect();
        for p in [
            [0.3, 0.2],
            [1.9, 0.05],
            [3.0, 2.0],
            [0.0, 0.5],
            [1.0, 0.0],
            [-1.2, -0.7],
        ] {
            let brute = pts
                .iter()
                .map(|q| (q[0] - p[0]).hypot(q[1] - p[1]))
                .fold(f64::INFINITY, f64::min);
            let d = distance(a, b, p);
            assert!((d - brute).abs() < 1e-6, "{p:?}: {d} vs {brute}");
        }
    }

    #[test]
    fn circle_perimeter() {
        let arc = ArcLength::new(1.0, 1.0);
        assert!((arc.total() - TAU).abs() < 1e-12);
        assert!((arc.parameter_at(1.0) - 1.0).abs() < 1e-12);
    }
}
