//! The scale-invariant quantities of a nodal field: Hölder seminorm,
//! normalized `L^p` norm, mean and boundary oscillation.
//!
//! The seminorm is a supremum over node pairs, so it never exceeds the
//! continuum value; on large meshes only a deterministic subset of pairs is
//! visited and the estimate is lower still.

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::Point;
use crate::quadrature::triangle_rule;
use crate::solver::SolutionSample;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NormError {
    #[error("need at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("need at least 3 boundary nodes, got {0}")]
    TooFewBoundaryNodes(usize),
    #[error("alpha must lie in (0,1], got {0}")]
    BadAlpha(f64),
    #[error("p must lie in [1,inf), got {0}")]
    BadP(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeminormOptions {
    /// Visit every pair when the node count is at most this.
    pub exhaustive_threshold: usize,
    /// Size of the stratified pair subset on larger meshes.
    pub pair_budget: usize,
}

impl Default for SeminormOptions {
    fn default() -> Self {
        Self {
            exhaustive_threshold: 4000,
            pair_budget: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeminormEstimate {
    /// Lower estimate of the continuum seminorm.
    pub value: f64,
    pub exhaustive: bool,
    pub pairs: usize,
    /// Node pair attaining `value`.
    pub argmax: (usize, usize),
}

fn check_alpha(alpha: f64) -> Result<(), NormError> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(NormError::BadAlpha(alpha))
    }
}

struct Quotient<'a> {
    nodes: &'a [Point],
    values: &'a [f64],
    alpha: f64,
    factor: f64,
}

impl Quotient<'_> {
    fn at(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.nodes[i], self.nodes[j]);
        let d = (a[0] - b[0]).hypot(a[1] - b[1]);
        if d == 0.0 {
            return 0.0;
        }
        let dv = (self.values[i] - self.values[j]).abs();
        if self.alpha == 1.0 {
            self.factor * dv / d
        } else {
            self.factor * dv / d.powf(self.alpha)
        }
    }
}

fn better(a: (f64, usize, usize), b: (f64, usize, usize)) -> (f64, usize, usize) {
    // ties broken by index so the reduction order does not matter
    if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) {
        b
    } else {
        a
    }
}

fn anchor_row(q: &Quotient<'_>, a: usize) -> (f64, usize, usize) {
    (0..q.nodes.len())
        .into_par_iter()
        .map(|j| (q.at(a.min(j), a.max(j)), a.min(j), a.max(j)))
        .reduce(|| (0.0, usize::MAX, usize::MAX), better)
}

/// All pairs closer than a reach chosen so that roughly `budget` pairs are
/// visited, found through a bucket grid.
fn local_pairs(q: &Quotient<'_>, budget: usize, area: f64) -> ((f64, usize, usize), usize) {
    let none = (0.0, usize::MAX, usize::MAX);
    let n = q.nodes.len();
    let reach = (2.0 * budget as f64 * area / (std::f64::consts::PI * (n * n) as f64)).sqrt();
    if !(reach > 0.0) {
        return (none, 0);
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for x in q.nodes {
        for k in 0..2 {
            lo[k] = lo[k].min(x[k]);
            hi[k] = hi[k].max(x[k]);
        }
    }
    let cols = (((hi[0] - lo[0]) / reach) as usize + 1).min(4096);
    let rows = (((hi[1] - lo[1]) / reach) as usize + 1).min(4096);
    let cell_of = |x: Point| {
        let c = (((x[0] - lo[0]) / reach) as usize).min(cols - 1);
        let r = (((x[1] - lo[1]) / reach) as usize).min(rows - 1);
        (c, r)
    };
    let mut buckets = vec![Vec::new(); cols * rows];
    for (i, &x) in q.nodes.iter().enumerate() {
        let (c, r) = cell_of(x);
        buckets[r * cols + c].push(i);
    }
    let reach2 = reach * reach;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let x = q.nodes[i];
            let (c, r) = cell_of(x);
            let mut b = none;
            let mut count = 0usize;
            for rr in r.saturating_sub(1)..=(r + 1).min(rows - 1) {
                for cc in c.saturating_sub(1)..=(c + 1).min(cols - 1) {
                    for &j in &buckets[rr * cols + cc] {
                        let y = q.nodes[j];
                        if j > i && (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) <= reach2 {
                            b = better(b, (q.at(i, j), i, j));
                            count += 1;
                        }
                    }
                }
            }
            (b, count)
        })
        .reduce(|| (none, 0), |a, b| (better(a.0, b.0), a.1 + b.1))
}

/// `sup (d_Ω/2)^α |v(x₁) − v(x₂)| / |x₁ − x₂|^α` over node pairs.
///
/// Above the exhaustive threshold the pairs are: mesh edges, all
/// boundary-boundary pairs, the global and boundary extremal nodes against
/// every node, all pairs within a short reach, and a stratified subset
/// `(i, i + offset_m mod n)`. The best pair is then polished by rescanning
/// each of its ends against every node until nothing improves.
pub fn holder_seminorm(
    sample: &SolutionSample,
    alpha: f64,
    options: SeminormOptions,
) -> Result<SeminormEstimate, NormError> {
    check_alpha(alpha)?;
    let mesh = sample.mesh();
    let n = mesh.node_count();
    if n < 2 {
        return Err(NormError::TooFewNodes(n));
    }
    let q = Quotient {
        nodes: mesh.nodes(),
        values: sample.values(),
        alpha,
        factor: (0.5 * mesh.domain().diameter()).powf(alpha),
    };
    let none = (0.0, usize::MAX, usize::MAX);
    if n <= options.exhaustive_threshold {
        let best = (0..n)
            .into_par_iter()
            .map(|i| (i + 1..n).map(|j| (q.at(i, j), i, j)).fold(none, better))
            .reduce(|| none, better);
        return Ok(SeminormEstimate {
            value: best.0,
            exhaustive: true,
            pairs: n * (n - 1) / 2,
            argmax: (best.1, best.2),
        });
    }

    let mut best = none;
    let mut pairs = 0usize;
    for tri in mesh.triangles() {
        for k in 0..3 {
            best = better(
                best,
                (q.at(tri[k], tri[(k + 1) % 3]), tri[k], tri[(k + 1) % 3]),
            );
        }
        pairs += 3;
    }
    let nb = mesh.boundary_count();
    let boundary_best = (0..nb)
        .into_par_iter()
        .map(|i| (i + 1..nb).map(|j| (q.at(i, j), i, j)).fold(none, better))
        .reduce(|| none, better);
    best = better(best, boundary_best);
    pairs += nb * nb.saturating_sub(1) / 2;

    let v = sample.values();
    let argext = |range: std::ops::Range<usize>| {
        let lo = range
            .clone()
            .min_by(|&a, &b| v[a].total_cmp(&v[b]))
            .unwrap_or(0);
        let hi = range.max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap_or(0);
        [lo, hi]
    };
    let mut anchors: Vec<usize> = argext(0..n).into_iter().chain(argext(0..nb)).collect();
    anchors.sort_unstable();
    anchors.dedup();
    for &a in &anchors {
        best = better(best, anchor_row(&q, a));
        pairs += n;
    }

    let (local_best, local_pairs) = local_pairs(&q, options.pair_budget / 2, mesh.area());
    best = better(best, local_best);
    pairs += local_pairs;

    let offsets = (options.pair_budget / 2 / n).max(1);
    // golden-ratio spread of offsets over 1..n
    let phi = 0.618_033_988_749_894_9;
    let stratified = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut b = none;
            for m in 0..offsets {
                let off = 1 + (((m as f64 + 1.0) * phi).fract() * (n - 1) as f64) as usize;
                let j = (i + off) % n;
                let (lo, hi) = (i.min(j), i.max(j));
                b = better(b, (q.at(lo, hi), lo, hi));
            }
            b
        })
        .reduce(|| none, better);
    best = better(best, stratified);
    pairs += offsets * n;

    // coordinate ascent: hold one end of the best pair, rescan the other
    if best.1 != usize::MAX {
        let mut free = best.1;
        for _ in 0..16 {
            let row = anchor_row(&q, free);
            pairs += n;
            if row.0 > best.0 {
                best = row;
                free = if row.1 == free { row.2 } else { row.1 };
            } else {
                let other = if best.1 == free { best.2 } else { best.1 };
                let row = anchor_row(&q, other);
                pairs += n;
                if row.0 > best.0 {
                    best = row;
                    free = if row.1 == other { row.2 } else { row.1 };
                } else {
                    break;
                }
            }
        }
    }

    Ok(SeminormEstimate {
        value: best.0,
        exhaustive: false,
        pairs,
        argmax: (best.1, best.2),
    })
}

fn integrate_power(vals: [f64; 3], area: f64, p: f64, rule: &[(f64, f64, f64)]) -> f64 {
    rule.iter()
        .map(|&(xi, eta, w)| {
            let v = (1.0 - xi - eta) * vals[0] + xi * vals[1] + eta * vals[2];
            w * v.abs().powf(p)
        })
        .sum::<f64>()
        * 2.0
        * area
}

/// `∫_T |w|^p` for `w` linear with vertex values `vals`, after splitting
/// `T` along the zero line of `w` so the integrand is smooth on each piece.
fn triangle_power(pts: [Point; 3], vals: [f64; 3], p: f64, rule: &[(f64, f64, f64)]) -> f64 {
    let area = |a: Point, b: Point, c: Point| {
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs()
    };
    let pos = vals.iter().filter(|&&v| v > 0.0).count();
    let neg = vals.iter().filter(|&&v| v < 0.0).count();
    if pos == 0 || neg == 0 {
        return integrate_power(vals, area(pts[0], pts[1], pts[2]), p, rule);
    }
    // the lone vertex is the one whose sign differs from the other two
    let lone = (0..3)
        .find(|&k| {
            let s = vals[k].signum();
            vals[(k + 1) % 3].signum() != s && vals[(k + 2) % 3].signum() != s
        })
        .unwrap_or(0);
    let (a, b, c) = (lone, (lone + 1) % 3, (lone + 2) % 3);
    let cut = |i: usize, j: usize| {
        let t = vals[i] / (vals[i] - vals[j]);
        [
            pts[i][0] + t * (pts[j][0] - pts[i][0]),
            pts[i][1] + t * (pts[j][1] - pts[i][1]),
        ]
    };
    let (pab, pac) = (cut(a, b), cut(a, c));
    let tip = integrate_power([vals[a], 0.0, 0.0], area(pts[a], pab, pac), p, rule);
    let quad1 = integrate_power([0.0, vals[b], vals[c]], area(pab, pts[b], pts[c]), p, rule);
    let quad2 = integrate_power([0.0, vals[c], 0.0], area(pab, pts[c], pac), p, rule);
    tip + quad1 + quad2
}

/// `(|Ω_h|⁻¹ ∫ |v − c|^p)^{1/p}` with `c = v_Ω` if `centered`, else 0.
/// `|Ω_h|` is the area of the triangulation.
pub fn normalized_lp_norm(
    sample: &SolutionSample,
    p: f64,
    centered: bool,
) -> Result<f64, NormError> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(NormError::BadP(p));
    }
    let c = if centered { mean_value(sample) } else { 0.0 };
    let mesh = sample.mesh();
    let n_rule = ((p.ceil() as usize) + 1).max(3);
    let rule = triangle_rule(n_rule);
    let v = sample.values();
    let mut total = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        total += triangle_power(mesh.triangle_points(t), tri.map(|i| v[i] - c), p, &rule);
    }
    Ok((total / mesh.area()).powf(1.0 / p))
}

/// `|Ω_h|⁻¹ ∫ v`, exact for the piecewise-linear field.
pub fn mean_value(sample: &SolutionSample) -> f64 {
    let mesh = sample.mesh();
    let v = sample.values();
    let mut sum = 0.0;
    let mut area = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let a = mesh.triangle_area(t);
        sum += a * (v[tri[0]] + v[tri[1]] + v[tri[2]]) / 3.0;
        area += a;
    }
    sum / area
}

/// `max_Γ v − min_Γ v` over boundary nodes.
pub fn boundary_oscillation(sample: &SolutionSample) -> Result<f64, NormError> {
    let mesh = sample.mesh();
    let nb = mesh.boundary_count();
    if nb < 3 {
        return Err(NormError::TooFewBoundaryNodes(nb));
    }
    let b = &sample.values()[..nb];
    let max = b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = b.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(max - min)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    pub alpha: f64,
    pub p: f64,
    pub seminorm: f64,
    pub lp_centered: f64,
    pub mean: f64,
    pub boundary_osc: f64,
    /// False when the seminorm comes from a pair subset.
    pub seminorm_exhaustive: bool,
    pub seminorm_pairs: usize,
}

pub const NORM_CSV_HEADER: &str =
    "sample_id,alpha,p,seminorm,lp_centered,mean,boundary_osc,seminorm_exhaustive,seminorm_pairs";

impl NormReport {
    pub fn csv_row(&self, sample_id: &str) -> Vec<String> {
        vec![
            sample_id.to_string(),
            self.alpha.to_string(),
            self.p.to_string(),
            self.seminorm.to_string(),
            self.lp_centered.to_string(),
            self.mean.to_string(),
            self.boundary_osc.to_string(),
            self.seminorm_exhaustive.to_string(),
            self.seminorm_pairs.to_string(),
        ]
    }
}

pub fn norm_report(
    sample: &SolutionSample,
    alpha: f64,
    p: f64,
    options: SeminormOptions,
) -> Result<NormReport, NormError> {
    let semi = holder_seminorm(sample, alpha, options)?;
    Ok(NormReport {
        alpha,
        p,
        seminorm: semi.value,
        lp_centered: normalized_lp_norm(sample, p, true)?,
        mean: mean_value(sample),
        boundary_osc: boundary_oscillation(sample)?,
        seminorm_exhaustive: semi.exhaustive,
        seminorm_pairs: semi.pairs,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use proptest::prelude::*;

    use super::*;
    use crate::geometry::Domain;
    use crate::solver::{mesh_domain, reference_solution, Analytic, Mesh, Provenance};

    fn disk(h: f64) -> Arc<Mesh> {
        Arc::new(mesh_domain(&Domain::unit_disk(), h).unwrap())
    }

    fn sample(mesh: &Arc<Mesh>, f: impl Fn(Point) -> f64) -> SolutionSample {
        let v = mesh.nodes().iter().map(|&x| f(x)).collect();
        SolutionSample::new(Arc::clone(mesh), v, Provenance::Reference("test".into())).unwrap()
    }

    #[test]
    fn constant_field() {
        let m = disk(0.1);
        let s = sample(&m, |_| 3.0);
        assert_eq!(
            holder_seminorm(&s, 1.0, SeminormOptions::default())
                .unwrap()
                .value,
            0.0
        );
        assert!((normalized_lp_norm(&s, 2.5, false).unwrap() - 3.0).abs() < 1e-12);
        assert!((mean_value(&s) - 3.0).abs() < 1e-14);
        assert_eq!(boundary_oscillation(&s).unwrap(), 0.0);
    }

    #[test]
    fn linear_field_on_the_disk() {
        let m = disk(0.05);
        let x1 = reference_solution(&Analytic::linear(1.0, 0.0, 0.0), &m).unwrap();
        let s1 = holder_seminorm(&x1, 1.0, SeminormOptions::default()).unwrap();
        assert!((s1.value - 1.0).abs() < 1e-12, "{s1:?}");
        // antipodal boundary nodes at angles 0 and π
        let s_half = holder_seminorm(&x1, 0.5, SeminormOptions::default()).unwrap();
        assert!((s_half.value - 2f64.sqrt()).abs() < 1e-9, "{s_half:?}");
        assert_eq!(boundary_oscillation(&x1).unwrap(), 2.0);
        assert!(mean_value(&x1).abs() < 1e-12);
        // polar-integral oracles, up to the inscribed-polygon error O(h²)
        let l2 = normalized_lp_norm(&x1, 2.0, false).unwrap();
        assert!((l2 - 0.5).abs() < 3e-3, "{l2}");
        let l1 = normalized_lp_norm(&x1, 1.0, false).unwrap();
        assert!((l1 - 4.0 / (3.0 * PI)).abs() < 3e-3, "{l1}");
    }

    #[test]
    fn squared_radius_mean_and_saddle_oscillation() {
        let m = disk(0.02);
        let r2 = sample(&m, |x| x[0] * x[0] + x[1] * x[1]);
        assert!((mean_value(&r2) - 0.5).abs() < 1e-3);
        let saddle = sample(&m, |x| x[0] * x[0] - x[1] * x[1]);
        assert!((boundary_oscillation(&saddle).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lp_norm_is_exact_for_sign_changing_linear_fields() {
        // oracle: on the unit square ∫|x − 1/3|^p dx = ((1/3)^{p+1} + (2/3)^{p+1})/(p+1)
        let m = Arc::new(mesh_domain(&Domain::unit_square(), 0.13).unwrap());
        let s = sample(&m, |x| x[0] - 1.0 / 3.0);
        for p in [1.0, 2.0, 3.0, 4.0] {
            let exact = (((1.0f64 / 3.0).powf(p + 1.0) + (2.0f64 / 3.0).powf(p + 1.0)) / (p + 1.0))
                .powf(1.0 / p);
            let got = normalized_lp_norm(&s, p, false).unwrap();
            assert!((got - exact).abs() < 1e-13, "p={p}: {got} vs {exact}");
        }
    }

    #[test]
    fn sampled_seminorm_never_exceeds_exhaustive() {
        let m = disk(0.05);
        let forced = SeminormOptions {
            exhaustive_threshold: 0,
            pair_budget: 20_000,
        };
        for k in 2..5 {
            let s = reference_solution(&Analytic::harmonic(k, false).unwrap(), &m).unwrap();
            for alpha in [0.3, 0.7, 1.0] {
                let full = holder_seminorm(&s, alpha, SeminormOptions::default()).unwrap();
                let part = holder_seminorm(&s, alpha, forced).unwrap();
                assert!(full.exhaustive && !part.exhaustive);
                assert!(part.value <= full.value);
                assert!(part.value >= 0.95 * full.value, "k={k} alpha={alpha}");
            }
        }
    }

    #[test]
    fn rejects_bad_exponents() {
        let m = disk(0.2);
        let s = sample(&m, |x| x[0]);
        assert!(holder_seminorm(&s, 0.0, SeminormOptions::default()).is_err());
        assert!(holder_seminorm(&s, 1.5, SeminormOptions::default()).is_err());
        assert!(normalized_lp_norm(&s, 0.5, true).is_err());
        assert!(normalized_lp_norm(&s, f64::INFINITY, true).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn shift_and_dilation_invariance(
            a in -2.0..2.0f64, b in -2.0..2.0f64, shift in -100.0..100.0f64,
            alpha in 0.2..1.0f64, p in 1.0..5.0f64,
        ) {
            let m = disk(0.1);
            let s = sample(&m, |x| a * x[0] * x[0] + b * x[0] * x[1] + x[1]);
            let opts = SeminormOptions::default();
            let base = norm_report(&s, alpha, p, opts).unwrap();
            let shifted = norm_report(&s.transformed(1.0, shift), alpha, p, opts).unwrap();
            let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(1e-300);
            prop_assert!(rel(base.seminorm, shifted.seminorm) < 1e-9);
            prop_assert!(rel(base.lp_centered, shifted.lp_centered) < 1e-9);
            prop_assert!(rel(base.boundary_osc, shifted.boundary_osc) < 1e-9);
            let big = norm_report(&s.dilated(10.0).unwrap(), alpha, p, opts).unwrap();
            prop_assert!(rel(base.seminorm, big.seminorm) < 1e-12);
            prop_assert!(rel(base.lp_centered, big.lp_centered) < 1e-12);
            prop_assert!(rel(base.boundary_osc, big.boundary_osc) < 1e-12);
            prop_assert!(base.boundary_osc <= 2f64.powf(alpha) * base.seminorm * (1.0 + 1e-12));
        }
    }
}
