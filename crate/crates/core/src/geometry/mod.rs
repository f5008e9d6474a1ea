//! Bounded planar domains and the geometric parameters that enter the
//! oscillation constants: diameter, measure, interior sphere radius, and
//! feasibility certificates for the interior cone and local John conditions.

mod certificates;
mod ellipse;
mod text;

pub use certificates::{
    cone_parameters, cone_parameters_with, john_parameters, john_parameters_with, CenterRule,
    ConeCertificate, ConeViolation, JohnCertificate, JohnViolation, SamplingConfig,
};

use std::f64::consts::{PI, TAU};

use thiserror::Error;

/// A point or vector in the plane.
pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("disk radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("ellipse semi-axes must satisfy a >= b > 0, got a = {a}, b = {b}")]
    BadSemiAxes { a: f64, b: f64 },
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon has a zero-length edge at vertex {0}")]
    RepeatedVertex(usize),
    #[error("polygon edges {0} and {1} cross")]
    SelfIntersecting(usize, usize),
    #[error("degenerate polygon (zero area)")]
    ZeroArea,
    #[error("polygon vertices must be listed counterclockwise")]
    Clockwise,
    #[error("non-finite coordinate in domain description")]
    NonFinite,
    #[error("no uniform interior sphere at corners")]
    NoInteriorSphere,
    #[error("cone certificate failed validation at boundary point ({}, {})", .0.point[0], .0.point[1])]
    ConeValidation(ConeViolation),
    #[error(
        "John certificate failed validation at x = ({}, {}), r = {}, z = ({}, {}): {}",
        .0.x[0], .0.x[1], .0.r, .0.z[0], .0.z[1], .0.reason
    )]
    JohnValidation(JohnViolation),
    #[error("rotation of an axis-aligned ellipse by {0} rad is not representable")]
    UnsupportedRotation(f64),
    #[error("domain block: {0}")]
    Parse(String),
}

pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

pub(crate) fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

pub(crate) fn scale(a: Point, t: f64) -> Point {
    [a[0] * t, a[1] * t]
}

pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub(crate) fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

pub(crate) fn normalize(a: Point) -> Point {
    let n = norm(a);
    [a[0] / n, a[1] / n]
}

pub(crate) fn rotate(a: Point, angle: f64) -> Point {
    let (s, c) = angle.sin_cos();
    [c * a[0] - s * a[1], s * a[0] + c * a[1]]
}

/// Distance from `p` to the closed segment `[a, b]`.
pub(crate) fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    let t = if len2 > 0.0 {
        (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    dist(p, add(a, scale(ab, t)))
}

/// The three supported domain shapes. Ellipses are axis-aligned with the
/// major semi-axis `a` along the first coordinate.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind {
    Disk { center: Point, radius: f64 },
    Ellipse { center: Point, a: f64, b: f64 },
    Polygon { vertices: Vec<Point> },
}

/// A validated bounded planar domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    kind: DomainKind,
}

/// One boundary point, with its exterior unit normal where the boundary is
/// differentiable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub point: Point,
    pub normal: Option<Point>,
}

impl Domain {
    pub fn disk(center: Point, radius: f64) -> Result<Self, GeometryError> {
        Self::new(DomainKind::Disk { center, radius })
    }

    pub fn unit_disk() -> Self {
        Self::disk([0.0, 0.0], 1.0).expect("unit disk is valid")
    }

    pub fn ellipse(center: Point, a: f64, b: f64) -> Result<Self, GeometryError> {
        Self::new(DomainKind::Ellipse { center, a, b })
    }

    pub fn polygon(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        Self::new(DomainKind::Polygon { vertices })
    }

    /// Axis-aligned rectangle with lower-left corner `origin`.
    pub fn rectangle(origin: Point, width: f64, height: f64) -> Result<Self, GeometryError> {
        let [x, y] = origin;
        Self::polygon(vec![
            [x, y],
            [x + width, y],
            [x + width, y + height],
            [x, y + height],
        ])
    }

    pub fn unit_square() -> Self {
        Self::rectangle([0.0, 0.0], 1.0, 1.0).expect("unit square is valid")
    }

    pub fn new(kind: DomainKind) -> Result<Self, GeometryError> {
        match &kind {
            DomainKind::Disk { center, radius } => {
                if !center.iter().chain([radius]).all(|v| v.is_finite()) {
                    return Err(GeometryError::NonFinite);
                }
                if *radius <= 0.0 {
                    return Err(GeometryError::NonPositiveRadius(*radius));
                }
            }
            DomainKind::Ellipse { center, a, b } => {
                if !center.iter().chain([a, b]).all(|v| v.is_finite()) {
                    return Err(GeometryError::NonFinite);
                }
                if !(*b > 0.0 && a >= b) {
                    return Err(GeometryError::BadSemiAxes { a: *a, b: *b });
                }
            }
            DomainKind::Polygon { vertices } => validate_polygon(vertices)?,
        }
        Ok(Self { kind })
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn is_polygon(&self) -> bool {
        matches!(self.kind, DomainKind::Polygon { .. })
    }

    /// Supremum of pairwise distances.
    pub fn diameter(&self) -> f64 {
        match &self.kind {
            DomainKind::Disk { radius, .. } => 2.0 * radius,
            DomainKind::Ellipse { a, .. } => 2.0 * a,
            DomainKind::Polygon { vertices } => {
                let mut d: f64 = 0.0;
                for (i, &p) in vertices.iter().enumerate() {
                    for &q in &vertices[i + 1..] {
                        d = d.max(dist(p, q));
                    }
                }
                d
            }
        }
    }

    pub fn area(&self) -> f64 {
        match &self.kind {
            DomainKind::Disk { radius, .. } => PI * radius * radius,
            DomainKind::Ellipse { a, b, .. } => PI * a * b,
            DomainKind::Polygon { vertices } => shoelace(vertices),
        }
    }

    /// `(d_Ω, |Ω|)`.
    pub fn diameter_and_measure(&self) -> (f64, f64) {
        (self.diameter(), self.area())
    }

    /// Length of the boundary curve.
    pub fn perimeter(&self) -> f64 {
        match &self.kind {
            DomainKind::Disk { radius, .. } => TAU * radius,
            DomainKind::Ellipse { a, b, .. } => ellipse::ArcLength::new(*a, *b).total(),
            DomainKind::Polygon { vertices } => edges(vertices).map(|(p, q)| dist(p, q)).sum(),
        }
    }

    /// Center for disks and ellipses, area centroid for polygons.
    pub fn centroid(&self) -> Point {
        match &self.kind {
            DomainKind::Disk { center, .. } | DomainKind::Ellipse { center, .. } => *center,
            DomainKind::Polygon { vertices } => {
                let origin = vertices[0];
                let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
                for (p, q) in edges(vertices) {
                    let (p, q) = (sub(p, origin), sub(q, origin));
                    let w = cross(p, q);
                    a2 += w;
                    cx += (p[0] + q[0]) * w;
                    cy += (p[1] + q[1]) * w;
                }
                [origin[0] + cx / (3.0 * a2), origin[1] + cy / (3.0 * a2)]
            }
        }
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Point, Point) {
        match &self.kind {
            DomainKind::Disk { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            DomainKind::Ellipse { center, a, b } => (
                [center[0] - a, center[1] - b],
                [center[0] + a, center[1] + b],
            ),
            DomainKind::Polygon { vertices } => {
                let mut lo = vertices[0];
                let mut hi = vertices[0];
                for v in vertices {
                    lo = [lo[0].min(v[0]), lo[1].min(v[1])];
                    hi = [hi[0].max(v[0]), hi[1].max(v[1])];
                }
                (lo, hi)
            }
        }
    }

    /// Signed distance to the boundary: negative inside, positive outside.
    pub fn signed_distance(&self, p: Point) -> f64 {
        match &self.kind {
            DomainKind::Disk { center, radius } => dist(p, *center) - radius,
            DomainKind::Ellipse { center, a, b } => {
                let q = sub(p, *center);
                let d = ellipse::distance(*a, *b, q);
                if (q[0] / a).powi(2) + (q[1] / b).powi(2) <= 1.0 {
                    -d
                } else {
                    d
                }
            }
            DomainKind::Polygon { vertices } => {
                let d = edges(vertices)
                    .map(|(a, b)| segment_distance(p, a, b))
                    .fold(f64::INFINITY, f64::min);
                if point_in_polygon(vertices, p) {
                    -d
                } else {
                    d
                }
            }
        }
    }

    pub fn dist_to_boundary(&self, p: Point) -> f64 {
        self.signed_distance(p).abs()
    }

    /// Membership in the closed domain, with an absolute slack `tol`.
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        self.signed_distance(p) <= tol
    }

    /// True when `p` lies in the open domain at distance more than `margin`
    /// from the boundary.
    pub fn strictly_contains(&self, p: Point, margin: f64) -> bool {
        self.signed_distance(p) < -margin
    }

    /// Exterior unit normal at a boundary point, if the boundary is
    /// differentiable there. For polygons the nearest edge decides; corners
    /// (within `1e-12 · d_Ω` of a vertex) have no normal.
    pub fn exterior_normal(&self, p: Point) -> Option<Point> {
        match &self.kind {
            DomainKind::Disk { center, .. } => Some(normalize(sub(p, *center))),
            DomainKind::Ellipse { center, a, b } => {
                let q = sub(p, *center);
                Some(normalize([q[0] / (a * a), q[1] / (b * b)]))
            }
            DomainKind::Polygon { vertices } => {
                let tol = 1e-12 * self.diameter();
                if vertices.iter().any(|&v| dist(v, p) <= tol) {
                    return None;
                }
                let (a, b) = edges(vertices)
                    .min_by(|(a, b), (c, d)| {
                        segment_distance(p, *a, *b).total_cmp(&segment_distance(p, *c, *d))
                    })
                    .expect("polygon has edges");
                let t = normalize(sub(b, a));
                Some([t[1], -t[0]])
            }
        }
    }

    /// `n` boundary points, approximately equispaced in arc length, starting
    /// at angle 0 (disk, ellipse) or at the first vertex (polygon).
    pub fn boundary_sample(&self, n: usize) -> Vec<BoundaryPoint> {
        let n = n.max(3);
        match &self.kind {
            DomainKind::Disk { center, radius } => (0..n)
                .map(|k| {
                    let phi = TAU * k as f64 / n as f64;
                    let u = [phi.cos(), phi.sin()];
                    BoundaryPoint {
                        point: add(*center, scale(u, *radius)),
                        normal: Some(u),
                    }
                })
                .collect(),
            DomainKind::Ellipse { center, a, b } => {
                let arc = ellipse::ArcLength::new(*a, *b);
                let total = arc.total();
                (0..n)
                    .map(|k| {
                        let t = arc.parameter_at(total * k as f64 / n as f64);
                        let q = [a * t.cos(), b * t.sin()];
                        BoundaryPoint {
                            point: add(*center, q),
                            normal: Some(normalize([q[0] / (a * a), q[1] / (b * b)])),
                        }
                    })
                    .collect()
            }
            DomainKind::Polygon { vertices } => {
                let total = self.perimeter();
                let step = total / n as f64;
                let tol = 1e-12 * total;
                let mut out = Vec::with_capacity(n);
                let mut k = 0usize;
                let mut start = 0.0;
                for (a, b) in edges(vertices) {
                    let len = dist(a, b);
                    let t = normalize(sub(b, a));
                    let normal = [t[1], -t[0]];
                    while k < n {
                        let s = k as f64 * step - start;
                        if s > len - tol && start + len < total - tol {
                            break;
                        }
                        let at_vertex = s.abs() <= tol || (len - s).abs() <= tol;
                        out.push(BoundaryPoint {
                            point: add(a, scale(t, s.min(len))),
                            normal: (!at_vertex).then_some(normal),
                        });
                        k += 1;
                    }
                    start += len;
                }
                out
            }
        }
    }

    /// Largest radius of balls touching every boundary point from inside.
    ///
    /// Disks return their radius, ellipses the minimal curvature radius
    /// `b²/a`; polygons have none. The value is cross-checked by rolling the
    /// ball along 720 sampled boundary points.
    pub fn interior_sphere_radius(&self) -> Result<f64, GeometryError> {
        let r = match &self.kind {
            DomainKind::Disk { radius, .. } => *radius,
            DomainKind::Ellipse { a, b, .. } => b * b / a,
            DomainKind::Polygon { .. } => return Err(GeometryError::NoInteriorSphere),
        };
        debug_assert!(self.interior_ball_fits(r, 720));
        Ok(r)
    }

    /// Sampling oracle: for each of `n` boundary points the ball of radius `r`
    /// centered at `x - r ν(x)` lies in the closed domain.
    pub fn interior_ball_fits(&self, r: f64, n: usize) -> bool {
        let tol = 1e-9 * r;
        self.boundary_sample(n).iter().all(|bp| match bp.normal {
            Some(nu) => {
                let c = sub(bp.point, scale(nu, r));
                -self.signed_distance(c) >= r - tol
            }
            None => false,
        })
    }

    /// Interior angle at every polygon vertex, in `(0, 2π]`.
    pub fn interior_angles(&self) -> Option<Vec<f64>> {
        let DomainKind::Polygon { vertices } = &self.kind else {
            return None;
        };
        Some(
            (0..vertices.len())
                .map(|i| interior_angle(vertices, i))
                .collect(),
        )
    }

    /// Smallest interior vertex angle; `None` for smooth domains.
    pub fn min_interior_angle(&self) -> Option<f64> {
        self.interior_angles()
            .map(|a| a.into_iter().fold(f64::INFINITY, f64::min))
    }

    /// Dilation `x ↦ t x` about the origin.
    pub fn dilated(&self, t: f64) -> Result<Self, GeometryError> {
        self.map_points(|p| scale(p, t), |l| l * t)
    }

    pub fn translated(&self, v: Point) -> Result<Self, GeometryError> {
        self.map_points(|p| add(p, v), |l| l)
    }

    /// Rotation about the origin. Ellipses only admit rotations by multiples
    /// of π, which map them onto themselves.
    pub fn rotated(&self, angle: f64) -> Result<Self, GeometryError> {
        if let DomainKind::Ellipse { .. } = self.kind {
            let turns = angle / PI;
            if (turns - turns.round()).abs() > 1e-15 {
                return Err(GeometryError::UnsupportedRotation(angle));
            }
        }
        self.map_points(|p| rotate(p, angle), |l| l)
    }

    fn map_points(
        &self,
        f: impl Fn(Point) -> Point,
        len: impl Fn(f64) -> f64,
    ) -> Result<Self, GeometryError> {
        let kind = match &self.kind {
            DomainKind::Disk { center, radius } => DomainKind::Disk {
                center: f(*center),
                radius: len(*radius),
            },
            DomainKind::Ellipse { center, a, b } => DomainKind::Ellipse {
                center: f(*center),
                a: len(*a),
                b: len(*b),
            },
            DomainKind::Polygon { vertices } => DomainKind::Polygon {
                vertices: vertices.iter().map(|&p| f(p)).collect(),
            },
        };
        Self::new(kind)
    }

    /// Polygon vertices, or `None` for curved domains.
    pub fn vertices(&self) -> Option<&[Point]> {
        match &self.kind {
            DomainKind::Polygon { vertices } => Some(vertices),
            _ => None,
        }
    }
}

pub(crate) fn edges(vertices: &[Point]) -> impl Iterator<Item = (Point, Point)> + '_ {
    let n = vertices.len();
    (0..n).map(move |i| (vertices[i], vertices[(i + 1) % n]))
}

fn shoelace(vertices: &[Point]) -> f64 {
    let origin = vertices[0];
    0.5 * edges(vertices)
        .map(|(p, q)| cross(sub(p, origin), sub(q, origin)))
        .sum::<f64>()
}

fn interior_angle(vertices: &[Point], i: usize) -> f64 {
    let n = vertices.len();
    let v = vertices[i];
    let d_next = normalize(sub(vertices[(i + 1) % n], v));
    let d_prev = normalize(sub(vertices[(i + n - 1) % n], v));
    let a = cross(d_next, d_prev).atan2(dot(d_next, d_prev));
    if a <= 0.0 {
        a + TAU
    } else {
        a
    }
}

/// Unit vector bisecting the interior angle at vertex `i`.
pub(crate) fn interior_bisector(vertices: &[Point], i: usize) -> Point {
    let n = vertices.len();
    let v = vertices[i];
    let d_next = normalize(sub(vertices[(i + 1) % n], v));
    rotate(d_next, 0.5 * interior_angle(vertices, i))
}

fn point_in_polygon(vertices: &[Point], p: Point) -> bool {
    let mut inside = false;
    for (a, b) in edges(vertices) {
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    cross(sub(b, a), sub(c, a))
}

fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

/// Rejects polygons with proper edge crossings. Collinear overlaps are
/// tolerated so that weakly simple shapes such as zero-width slits can be
/// represented.
fn validate_polygon(vertices: &[Point]) -> Result<(), GeometryError> {
    let n = vertices.len();
    if n < 3 {
        return Err(GeometryError::TooFewVertices(n));
    }
    if vertices.iter().flatten().any(|v| !v.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    for i in 0..n {
        if vertices[i] == vertices[(i + 1) % n] {
            return Err(GeometryError::RepeatedVertex(i));
        }
    }
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            let (c, d) = (vertices[j], vertices[(j + 1) % n]);
            if segments_cross(a, b, c, d) {
                return Err(GeometryError::SelfIntersecting(i, j));
            }
        }
    }
    let area = shoelace(vertices);
    let scale = vertices
        .iter()
        .map(|v| v[0].abs().max(v[1].abs()))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    if area.abs() <= 1e-14 * scale * scale {
        return Err(GeometryError::ZeroArea);
    }
    if area < 0.0 {
        return Err(GeometryError::Clockwise);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_disk_diameter_and_area() {
        let (d, a) = Domain::unit_disk().diameter_and_measure();
        assert_eq!(d, 2.0);
        assert_eq!(a, PI);
    }

    #[test]
    fn rectangle_diameter_and_area() {
        let r = Domain::rectangle([0.0, 0.0], 3.0, 4.0).unwrap();
        assert_eq!(r.diameter_and_measure(), (5.0, 12.0));
    }

    #[test]
    fn ellipse_diameter_matches_dense_boundary_sampling() {
        let e = Domain::ellipse([0.0, 0.0], 2.0, 1.0).unwrap();
        // oracle: max pairwise distance over 2000 parametric boundary points
        let pts: Vec<Point> = (0..2000)
            .map(|k| {
                let t = TAU * k as f64 / 2000.0;
                [2.0 * t.cos(), t.sin()]
            })
            .collect();
        let mut best: f64 = 0.0;
        for (i, p) in pts.iter().enumerate() {
            for q in &pts[i + 1..] {
                best = best.max(dist(*p, *q));
            }
        }
        let (d, a) = e.diameter_and_measure();
        assert!((d - best).abs() < 1e-9, "{d} vs {best}");
        assert_eq!(d, 4.0);
        assert!((a - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn degenerate_polygons_are_rejected() {
        assert_eq!(
            Domain::polygon(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]),
            Err(GeometryError::ZeroArea)
        );
        assert_eq!(
            Domain::polygon(vec![[0.0, 0.0], [1.0, 1.0]]),
            Err(GeometryError::TooFewVertices(2))
        );
        assert_eq!(
            Domain::polygon(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]),
            Err(GeometryError::Clockwise)
        );
        // bow tie
        assert!(matches!(
            Domain::polygon(vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]),
            Err(GeometryError::SelfIntersecting(..))
        ));
        assert!(Domain::disk([0.0, 0.0], 0.0).is_err());
        assert!(Domain::ellipse([0.0, 0.0], 1.0, 2.0).is_err());
    }

    #[test]
    fn interior_sphere_radius_cases() {
        assert_eq!(
            Domain::disk([1.0, -2.0], 0.7)
                .unwrap()
                .interior_sphere_radius(),
            Ok(0.7)
        );
        let e = Domain::ellipse([0.0, 0.0], 2.0, 1.0).unwrap();
        let ri = e.interior_sphere_radius().unwrap();
        assert!((ri - 0.5).abs() < 1e-15);
        assert!(e.interior_ball_fits(ri, 2000));
        assert!(!e.interior_ball_fits(ri * 1.01, 2000));
        assert_eq!(
            Domain::unit_square().interior_sphere_radius(),
            Err(GeometryError::NoInteriorSphere)
        );
    }

    #[test]
    fn boundary_sample_disk_and_square() {
        let s = Domain::unit_disk().boundary_sample(4);
        let expect = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (bp, e) in s.iter().zip(expect) {
            assert!(dist(bp.point, e) < 1e-15);
            assert!(dist(bp.normal.unwrap(), e) < 1e-15);
        }
        let sq = Domain::unit_square().boundary_sample(8);
        assert_eq!(sq.len(), 8);
        for side in 0..4 {
            let corner = &sq[2 * side];
            let mid = &sq[2 * side + 1];
            assert!(corner.normal.is_none());
            assert!(mid.normal.is_some());
        }
        assert!(dist(sq[1].point, [0.5, 0.0]) < 1e-15);
        assert!(dist(sq[1].normal.unwrap(), [0.0, -1.0]) < 1e-15);
        assert!(dist(sq[5].point, [0.5, 1.0]) < 1e-15);
    }

    #[test]
    fn ellipse_boundary_sample_is_arc_length_uniform() {
        let e = Domain::ellipse([0.0, 0.0], 2.0, 1.0).unwrap();
        let pts = e.boundary_sample(360);
        // oracle: arc length between consecutive samples by a fine chord sum
        let arc = |p: Point, q: Point| {
            let t0 = (p[1]).atan2(p[0] / 2.0);
            let mut t1 = (q[1]).atan2(q[0] / 2.0);
            if t1 < t0 {
                t1 += TAU;
            }
            let m = 400;
            let mut s = 0.0;
            let mut prev = [2.0 * t0.cos(), t0.sin()];
            for k in 1..=m {
                let t = t0 + (t1 - t0) * k as f64 / m as f64;
                let cur = [2.0 * t.cos(), t.sin()];
                s += dist(prev, cur);
                prev = cur;
            }
            s
        };
        let spacing: Vec<f64> = (0..pts.len())
            .map(|k| arc(pts[k].point, pts[(k + 1) % pts.len()].point))
            .collect();
        let mean = spacing.iter().sum::<f64>() / spacing.len() as f64;
        for s in spacing {
            assert!((s - mean).abs() / mean < 0.01);
        }
        for bp in &pts {
            assert!(e.dist_to_boundary(bp.point) < 1e-12);
        }
    }

    #[test]
    fn signed_distance_signs() {
        let sq = Domain::unit_square();
        assert!((sq.signed_distance([0.5, 0.5]) + 0.5).abs() < 1e-15);
        assert!((sq.signed_distance([2.0, 0.5]) - 1.0).abs() < 1e-15);
        let e = Domain::ellipse([1.0, 1.0], 2.0, 1.0).unwrap();
        assert!((e.signed_distance([1.0, 1.0]) + 1.0).abs() < 1e-12);
        assert!((e.signed_distance([4.0, 1.0]) - 1.0).abs() < 1e-12);
        assert!((e.signed_distance([1.0, 3.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interior_angles_of_square_and_slit() {
        let sq = Domain::unit_square();
        for a in sq.interior_angles().unwrap() {
            assert!((a - PI / 2.0).abs() < 1e-15);
        }
        let slit = Domain::polygon(vec![
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [0.5, 1.0],
            [0.5, 0.4],
            [0.5, 1.0],
            [0.0, 1.0],
        ])
        .unwrap();
        assert!((slit.area() - 1.0).abs() < 1e-15);
        let angles = slit.interior_angles().unwrap();
        assert!((angles[4] - TAU).abs() < 1e-15);
        assert!(slit.dist_to_boundary([0.5, 0.6]) < 1e-15);
    }

    #[test]
    fn disk_interior_sphere_is_the_radius_after_motion() {
        let d = Domain::disk([0.3, 0.1], 1.5).unwrap();
        let moved = d.rotated(0.4).unwrap().translated([2.0, -1.0]).unwrap();
        assert_eq!(moved.interior_sphere_radius(), Ok(1.5));
    }
}
