//! Feasible interior-cone and local-John certificates, checked by sampling.
//!
//! Neither certificate is optimal. Each is built from a simple rule, then
//! every invariant is tested on a boundary sample before it is returned;
//! a failing rule is relaxed along a fixed shrink schedule.

use std::f64::consts::{FRAC_PI_4, TAU};

use super::{
    add, dist, interior_bisector, normalize, rotate, scale, sub, Domain, DomainKind, GeometryError,
    Point,
};

/// Sampling densities for certificate validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingConfig {
    /// Boundary points at which the local condition is tested.
    pub boundary_points: usize,
    /// Test points per local check (cone points, or path points times radii).
    pub local_points: usize,
    /// Number of halvings tried before giving up.
    pub shrink_steps: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            boundary_points: 256,
            local_points: 1000,
            shrink_steps: 8,
        }
    }
}

impl SamplingConfig {
    /// Same schedule with every density multiplied by `factor`.
    pub fn densified(self, factor: usize) -> Self {
        Self {
            boundary_points: self.boundary_points * factor,
            local_points: self.local_points * factor,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeViolation {
    pub point: Point,
    pub theta: f64,
    pub h: f64,
}

/// `(θ, h)` interior cone certificate. `theta` is the half-aperture.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeCertificate {
    pub theta: f64,
    pub h: f64,
    /// Axis `e_x` chosen for each sampled boundary point `x`.
    pub axis_map: Vec<(Point, Point)>,
}

impl ConeCertificate {
    /// Re-runs the containment test with the given densities, choosing axes
    /// for new boundary points by the same rule.
    pub fn validate(&self, domain: &Domain, config: SamplingConfig) -> Result<(), ConeViolation> {
        check_cones(domain, self.theta, self.h, config).map(|_| ())
    }
}

pub fn cone_parameters(domain: &Domain) -> Result<ConeCertificate, GeometryError> {
    cone_parameters_with(domain, SamplingConfig::default())
}

pub fn cone_parameters_with(
    domain: &Domain,
    config: SamplingConfig,
) -> Result<ConeCertificate, GeometryError> {
    let theta = match domain.min_interior_angle() {
        Some(a) => (0.25 * a).min(FRAC_PI_4),
        None => FRAC_PI_4,
    };
    let mut h = match domain.kind() {
        DomainKind::Disk { radius, .. } => 0.5 * radius,
        DomainKind::Ellipse { a, b, .. } => 0.5 * b * b / a,
        DomainKind::Polygon { vertices } => {
            let shortest = super::edges(vertices)
                .map(|(p, q)| dist(p, q))
                .fold(f64::INFINITY, f64::min);
            0.25 * shortest
        }
    };
    let mut last = None;
    for _ in 0..=config.shrink_steps {
        match check_cones(domain, theta, h, config) {
            Ok(axis_map) => return Ok(ConeCertificate { theta, h, axis_map }),
            Err(v) => last = Some(v),
        }
        h *= 0.5;
    }
    Err(GeometryError::ConeValidation(
        last.expect("at least one attempt"),
    ))
}

fn check_cones(
    domain: &Domain,
    theta: f64,
    h: f64,
    config: SamplingConfig,
) -> Result<Vec<(Point, Point)>, ConeViolation> {
    let pattern = cone_pattern(theta, h, config.local_points);
    let margin = 1e-12 * domain.diameter();
    let vertices = domain.vertices();
    let hub = domain.centroid();
    let hub_inside = domain.strictly_contains(hub, margin);
    let mut axis_map = Vec::new();
    for bp in domain.boundary_sample(config.boundary_points) {
        let x = bp.point;
        let mut candidates: Vec<Point> = Vec::new();
        if let Some(vs) = vertices {
            if let Some(i) = vs.iter().position(|&v| dist(v, x) <= margin) {
                candidates.push(interior_bisector(vs, i));
            }
        }
        if hub_inside && dist(hub, x) > margin {
            candidates.push(normalize(sub(hub, x)));
        }
        if let Some(nu) = bp.normal {
            candidates.push([-nu[0], -nu[1]]);
        }
        let reference = candidates.first().copied().unwrap_or([1.0, 0.0]);
        let fan = 72;
        for k in 1..=fan / 2 {
            let step = TAU * k as f64 / fan as f64;
            candidates.push(rotate(reference, step));
            candidates.push(rotate(reference, -step));
        }
        let axis = candidates
            .into_iter()
            .find(|&e| cone_fits(domain, x, e, &pattern, margin));
        match axis {
            Some(e) => axis_map.push((x, e)),
            None => return Err(ConeViolation { point: x, theta, h }),
        }
    }
    Ok(axis_map)
}

/// Sector sample points in polar form `(t, ψ)` with `t ∈ (0, h]`.
fn cone_pattern(theta: f64, h: f64, n: usize) -> Vec<(f64, f64)> {
    let n_r = ((n as f64 / 1.6).sqrt().round() as usize).max(2);
    let n_a = n.div_ceil(n_r).max(2);
    let mut out = Vec::with_capacity(n_r * n_a);
    for i in 1..=n_r {
        let t = h * i as f64 / n_r as f64;
        for j in 0..n_a {
            let psi = -theta + 2.0 * theta * j as f64 / (n_a - 1) as f64;
            out.push((t, psi));
        }
    }
    out
}

fn cone_fits(domain: &Domain, x: Point, axis: Point, pattern: &[(f64, f64)], margin: f64) -> bool {
    pattern
        .iter()
        .all(|&(t, psi)| domain.strictly_contains(add(x, scale(rotate(axis, psi), t)), margin))
}

#[derive(Debug, Clone, PartialEq)]
pub struct JohnViolation {
    pub x: Point,
    pub r: f64,
    pub z: Point,
    pub reason: &'static str,
}

/// How the John center direction is chosen at a boundary point.
#[derive(Debug, Clone, PartialEq)]
pub enum CenterRule {
    /// Along the inward normal (smooth boundaries).
    InwardNormal,
    /// Toward a fixed interior hub, e.g. the centroid of a polygon.
    TowardHub(Point),
}

/// `(b₀, R)` local John certificate with straight-segment paths.
///
/// The John center of `Δ_r(x)` is `x_r = x + (r/2) u`, with `u` given by the
/// center rule; the path from `z` is the segment `[z, x_r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JohnCertificate {
    pub b0: f64,
    pub r_max: f64,
    pub rule: CenterRule,
    domain: Domain,
}

impl JohnCertificate {
    /// John center `x_r` for boundary point `x` and radius `r <= R`.
    pub fn center(&self, x: Point, r: f64) -> Point {
        let u = match (&self.rule, self.domain.exterior_normal(x)) {
            (CenterRule::InwardNormal, Some(nu)) => [-nu[0], -nu[1]],
            (CenterRule::InwardNormal, None) => normalize(sub(self.domain.centroid(), x)),
            (CenterRule::TowardHub(hub), _) => normalize(sub(*hub, x)),
        };
        add(x, scale(u, 0.5 * r))
    }

    /// Polyline path from `z ∈ Δ_r(x)` to the John center.
    pub fn path(&self, x: Point, r: f64, z: Point) -> Vec<Point> {
        vec![z, self.center(x, r)]
    }

    pub fn validate(&self, domain: &Domain, config: SamplingConfig) -> Result<(), JohnViolation> {
        check_john(domain, self, config)
    }
}

pub fn john_parameters(domain: &Domain) -> Result<JohnCertificate, GeometryError> {
    john_parameters_with(domain, SamplingConfig::default())
}

pub fn john_parameters_with(
    domain: &Domain,
    config: SamplingConfig,
) -> Result<JohnCertificate, GeometryError> {
    let rule = if domain.is_polygon() {
        CenterRule::TowardHub(domain.centroid())
    } else {
        CenterRule::InwardNormal
    };
    let (b0_start, r_start) = match domain.kind() {
        DomainKind::Disk { radius, .. } => (3.0, *radius),
        DomainKind::Ellipse { a, b, .. } => (3.0, b * b / a),
        DomainKind::Polygon { vertices } => {
            let shortest = super::edges(vertices)
                .map(|(p, q)| dist(p, q))
                .fold(f64::INFINITY, f64::min);
            (4.0, 0.5 * shortest)
        }
    };
    let mut last = None;
    for b0 in [b0_start, 2.0 * b0_start] {
        let mut r_max = r_start;
        for _ in 0..=config.shrink_steps {
            let cert = JohnCertificate {
                b0,
                r_max,
                rule: rule.clone(),
                domain: domain.clone(),
            };
            match check_john(domain, &cert, config) {
                Ok(()) => return Ok(cert),
                Err(v) => last = Some(v),
            }
            r_max *= 0.5;
        }
    }
    Err(GeometryError::JohnValidation(
        last.expect("at least one attempt"),
    ))
}

fn check_john(
    domain: &Domain,
    cert: &JohnCertificate,
    config: SamplingConfig,
) -> Result<(), JohnViolation> {
    let margin = 1e-12 * domain.diameter();
    let radii = [1.0, 0.5, 0.25, 0.125].map(|f| f * cert.r_max);
    // each (x, r) check spends about `local_points` samples: up to 32 path
    // origins z, each probed at the same number of path points
    let max_z = 32;
    let path_points = (config.local_points / max_z).max(8);
    let dense = domain.boundary_sample(4 * config.boundary_points);
    for bp in domain.boundary_sample(config.boundary_points) {
        let x = bp.point;
        for &r in &radii {
            let fail = |z: Point, reason| JohnViolation { x, r, z, reason };
            let xr = cert.center(x, r);
            if dist(xr, x) >= r || !domain.strictly_contains(xr, margin) {
                return Err(fail(x, "John center outside B_r(x) ∩ Ω"));
            }
            if -domain.signed_distance(xr) < r / cert.b0 {
                return Err(fail(x, "ball B_{r/b0}(x_r) leaves the domain"));
            }
            let near: Vec<Point> = dense
                .iter()
                .map(|q| q.point)
                .filter(|&z| dist(z, x) < r)
                .collect();
            let stride = near.len().div_ceil(max_z).max(1);
            let zs = std::iter::once(x).chain(
                near.iter()
                    .enumerate()
                    .filter(|(i, _)| i % stride == 0 || *i == near.len() - 1)
                    .map(|(_, &z)| z),
            );
            for z in zs {
                let path = cert.path(x, r, z);
                let length: f64 = path.windows(2).map(|w| dist(w[0], w[1])).sum();
                if length > cert.b0 * r {
                    return Err(fail(z, "path longer than b0·r"));
                }
                for k in 1..=path_points {
                    let p = along(&path, k as f64 / path_points as f64);
                    if -domain.signed_distance(p) <= dist(p, z) / cert.b0 {
                        return Err(fail(z, "path point too close to the boundary"));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Point at fraction `s ∈ [0, 1]` of the arc length of a polyline.
fn along(path: &[Point], s: f64) -> Point {
    let total: f64 = path.windows(2).map(|w| dist(w[0], w[1])).sum();
    let mut remaining = s * total;
    for w in path.windows(2) {
        let len = dist(w[0], w[1]);
        if remaining <= len {
            return add(w[0], scale(sub(w[1], w[0]), remaining / len));
        }
        remaining -= len;
    }
    *path.last().expect("non-empty path")
}
