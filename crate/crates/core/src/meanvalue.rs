//! Mean-value families `D_r(x₀)` with `B_{cr}(x₀) ⊆ D_r(x₀) ⊆ B_{Cr}(x₀)`:
//! balls for the Laplacian and ellipsoids `x₀ + A^{1/2} B_r` for constant
//! coefficients. Variable coefficients are refused.

use std::f64::consts::TAU;

use thiserror::Error;

use crate::coefficients::{CoefficientError, CoefficientField, SymMat2};
use crate::geometry::{Domain, Point};
use crate::quadrature::gauss_legendre_unit;
use crate::solver::SolutionSample;

const RADIAL_NODES: usize = 64;
const ANGULAR_NODES: usize = 128;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeanValueError {
    #[error("family construction out of scope for variable coefficients (needs an obstacle-problem construction)")]
    VariableCoefficients,
    #[error("center ({}, {}) is not strictly inside the domain", .0[0], .0[1])]
    CenterOutside(Point),
    #[error("radius {r} outside (0, {r_max}]")]
    BadRadius { r: f64, r_max: f64 },
    #[error("radii must be strictly increasing")]
    RadiiNotIncreasing,
    #[error("set D_r escapes the meshed domain near ({}, {})", .0[0], .0[1])]
    Escapes(Point),
    #[error(transparent)]
    Coefficient(#[from] CoefficientError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyShape {
    Ball,
    /// `D_r = x₀ + S·B_r` with `S = A^{1/2}`.
    Ellipsoid(SymMat2),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanValueFamily {
    pub center: Point,
    pub shape: FamilyShape,
    /// Inner inclusion constant.
    pub c: f64,
    /// Outer inclusion constant.
    pub big_c: f64,
    /// `dist(x₀, Γ)/C`.
    pub r_max: f64,
}

pub fn build_family(
    field: &CoefficientField,
    x0: Point,
    domain: &Domain,
) -> Result<MeanValueFamily, MeanValueError> {
    let a = field
        .constant_matrix()
        .ok_or(MeanValueError::VariableCoefficients)?;
    let dist = -domain.signed_distance(x0);
    if !(dist > 0.0) {
        return Err(MeanValueError::CenterOutside(x0));
    }
    let (shape, c, big_c) = if field.is_identity() {
        (FamilyShape::Ball, 1.0, 1.0)
    } else {
        let e = a.eigen();
        (
            FamilyShape::Ellipsoid(a.sqrt()?),
            e.min.sqrt(),
            e.max.sqrt(),
        )
    };
    Ok(MeanValueFamily {
        center: x0,
        shape,
        c,
        big_c,
        r_max: dist / big_c,
    })
}

impl MeanValueFamily {
    /// `x₀ + r·S·u`.
    pub fn map(&self, r: f64, u: Point) -> Point {
        let v = match self.shape {
            FamilyShape::Ball => u,
            FamilyShape::Ellipsoid(s) => s.apply(u),
        };
        [self.center[0] + r * v[0], self.center[1] + r * v[1]]
    }

    fn check_radius(&self, r: f64) -> Result<(), MeanValueError> {
        if r > 0.0 && r <= self.r_max * (1.0 + 1e-12) {
            Ok(())
        } else {
            Err(MeanValueError::BadRadius {
                r,
                r_max: self.r_max,
            })
        }
    }

    /// Sampled sandwich check `B_{cr} ⊆ D_r ⊆ B_{Cr}` on `n` boundary points of
    /// `D_r`, plus the principal axes, which touch both balls exactly.
    pub fn inclusion_holds(&self, r: f64, n: usize) -> bool {
        let (lo, hi) = (self.c * r * (1.0 - 1e-12), self.big_c * r * (1.0 + 1e-12));
        let mut dirs: Vec<Point> = (0..n)
            .map(|k| {
                let t = TAU * k as f64 / n as f64;
                [t.cos(), t.sin()]
            })
            .collect();
        if let FamilyShape::Ellipsoid(s) = self.shape {
            let e = s.eigen();
            dirs.extend([e.min_vector, e.max_vector]);
        }
        let radius = |u: Point| {
            let p = self.map(r, u);
            (p[0] - self.center[0]).hypot(p[1] - self.center[1])
        };
        let sandwich = dirs.iter().all(|&u| (lo..=hi).contains(&radius(u)));
        let axes_touch = match self.shape {
            FamilyShape::Ball => true,
            FamilyShape::Ellipsoid(s) => {
                let e = s.eigen();
                (radius(e.min_vector) - self.c * r).abs() <= 1e-12 * r
                    && (radius(e.max_vector) - self.big_c * r).abs() <= 1e-12 * r
            }
        };
        sandwich && axes_touch
    }
}

/// Average of the piecewise-linear interpolant over `D_r(x₀)`, by pulling
/// the set back to the unit disk: Gauss-Legendre in the radius (weight ρ)
/// times the uniform rule in the angle.
pub fn set_average(
    sample: &SolutionSample,
    family: &MeanValueFamily,
    r: f64,
) -> Result<f64, MeanValueError> {
    family.check_radius(r)?;
    let mesh = sample.mesh();
    let radial = gauss_legendre_unit(RADIAL_NODES);
    let mut sum = 0.0;
    let mut weight = 0.0;
    for k in 0..ANGULAR_NODES {
        let t = TAU * k as f64 / ANGULAR_NODES as f64;
        let (s, c) = t.sin_cos();
        let mut ring = 0.0;
        for &(rho, w) in &radial {
            let x = family.map(r, [rho * c, rho * s]);
            let v = mesh
                .interpolate(sample.values(), x)
                .ok_or(MeanValueError::Escapes(x))?;
            ring += w * rho * v;
            weight += w * rho;
        }
        sum += ring;
    }
    Ok(sum / weight)
}

/// Interpolation error estimate for the piecewise-linear field:
/// `h_max²/2` times a Hessian bound taken from the largest jump of the
/// elementwise gradient across an edge, divided by `h_max`.
pub fn interpolation_bound(sample: &SolutionSample) -> f64 {
    let mesh = sample.mesh();
    let v = sample.values();
    let mut grads = Vec::with_capacity(mesh.triangles().len());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let [p0, p1, p2] = mesh.triangle_points(t);
        let two_area = 2.0 * mesh.triangle_area(t);
        let (v0, v1, v2) = (v[tri[0]], v[tri[1]], v[tri[2]]);
        grads.push([
            (v0 * (p1[1] - p2[1]) + v1 * (p2[1] - p0[1]) + v2 * (p0[1] - p1[1])) / two_area,
            (v0 * (p2[0] - p1[0]) + v1 * (p0[0] - p2[0]) + v2 * (p1[0] - p0[0])) / two_area,
        ]);
    }
    let mut edges: Vec<(usize, usize, usize)> = Vec::with_capacity(3 * grads.len());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            edges.push((a.min(b), a.max(b), t));
        }
    }
    edges.sort_unstable();
    let mut jump = 0.0f64;
    for w in edges.windows(2) {
        if (w[0].0, w[0].1) == (w[1].0, w[1].1) {
            let (g, h) = (grads[w[0].2], grads[w[1].2]);
            jump = jump.max((g[0] - h[0]).hypot(g[1] - h[1]));
        }
    }
    0.5 * mesh.max_edge_length() * jump
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanValueVerdict {
    Consistent,
    NotSubsolution,
}

impl std::fmt::Display for MeanValueVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MeanValueVerdict::Consistent => write!(f, "consistent"),
            MeanValueVerdict::NotSubsolution => {
                write!(f, "not a subsolution consistency violation")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanValueRow {
    pub r: f64,
    pub average: f64,
    /// Average is at least the previous one (or `v(x₀)` for the first) minus tol.
    pub monotone_ok: bool,
    pub inclusion_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanValueReport {
    pub family: MeanValueFamily,
    pub v_at_x0: f64,
    pub tol: f64,
    pub rows: Vec<MeanValueRow>,
    /// `v(x₀) <= average(r₁) + tol`.
    pub center_ok: bool,
    pub monotone_ok: bool,
    pub inclusion_ok: bool,
    /// Every average equals `v(x₀)` within tol.
    pub equality_ok: bool,
    pub verdict: MeanValueVerdict,
}

pub const MEANVALUE_CSV_HEADER: &str = "x0x,x0y,r,average,v_at_x0,monotone_ok,inclusion_ok,tol";

impl MeanValueReport {
    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|row| {
                vec![
                    self.family.center[0].to_string(),
                    self.family.center[1].to_string(),
                    row.r.to_string(),
                    row.average.to_string(),
                    self.v_at_x0.to_string(),
                    row.monotone_ok.to_string(),
                    row.inclusion_ok.to_string(),
                    self.tol.to_string(),
                ]
            })
            .collect()
    }
}

/// Checks `v(x₀) <= avg(r₁) <= avg(r₂) <= ...` within
/// `tol = 1e-6·(1 + |v(x₀)|) + interpolation_bound`, and the inclusion
/// sandwich at every radius.
pub fn check_mean_value_property(
    sample: &SolutionSample,
    field: &CoefficientField,
    x0: Point,
    radii: &[f64],
) -> Result<MeanValueReport, MeanValueError> {
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(MeanValueError::RadiiNotIncreasing);
    }
    let family = build_family(field, x0, sample.mesh().domain())?;
    let v0 = sample.value_at(x0).ok_or(MeanValueError::Escapes(x0))?;
    let tol = 1e-6 * (1.0 + v0.abs()) + interpolation_bound(sample);
    let mut rows = Vec::with_capacity(radii.len());
    let mut prev = v0;
    for &r in radii {
        let average = set_average(sample, &family, r)?;
        rows.push(MeanValueRow {
            r,
            average,
            monotone_ok: average >= prev - tol,
            inclusion_ok: family.inclusion_holds(r, 256),
        });
        prev = average;
    }
    let center_ok = rows.first().is_none_or(|row| v0 <= row.average + tol);
    let monotone_ok = rows.iter().all(|row| row.monotone_ok);
    let inclusion_ok = rows.iter().all(|row| row.inclusion_ok);
    let equality_ok = rows.iter().all(|row| (row.average - v0).abs() <= tol);
    let verdict = if center_ok && monotone_ok {
        MeanValueVerdict::Consistent
    } else {
        MeanValueVerdict::NotSubsolution
    };
    Ok(MeanValueReport {
        family,
        v_at_x0: v0,
        tol,
        rows,
        center_ok,
        monotone_ok,
        inclusion_ok,
        equality_ok,
        verdict,
    })
}
