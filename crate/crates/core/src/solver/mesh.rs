//! Unstructured triangular meshes: equispaced boundary nodes, a hexagonal
//! interior lattice, constrained Delaunay triangulation and a few Laplacian
//! smoothing sweeps.

use std::fmt::Write as _;
use std::sync::OnceLock;

use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use super::SolverError;
use crate::geometry::{Domain, DomainKind, Point};

const SMOOTHING_SWEEPS: usize = 4;
const MIN_ANGLE_DEG: f64 = 15.0;

#[derive(Debug)]
pub struct Mesh {
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    boundary_count: usize,
    h: f64,
    domain: Domain,
    locator: OnceLock<Locator>,
}

impl Clone for Mesh {
    fn clone(&self) -> Self {
        Self {
            nodes: self.nodes.clone(),
            triangles: self.triangles.clone(),
            boundary: self.boundary.clone(),
            boundary_count: self.boundary_count,
            h: self.h,
            domain: self.domain.clone(),
            locator: OnceLock::new(),
        }
    }
}

impl PartialEq for Mesh {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.triangles == other.triangles
            && self.boundary == other.boundary
            && self.h == other.h
            && self.domain == other.domain
    }
}

/// Meshes `domain` with target edge length `h`, `0 < h <= d_Ω/2`.
///
/// Boundary nodes come first, in counterclockwise boundary order.
pub fn mesh_domain(domain: &Domain, h: f64) -> Result<Mesh, SolverError> {
    let d = domain.diameter();
    if !(h > 0.0 && h <= 0.5 * d) {
        return Err(SolverError::BadMeshSize { h, max: 0.5 * d });
    }
    let boundary = boundary_nodes(domain, h)?;
    let nb = boundary.len();
    let constraints: Vec<[usize; 2]> = (0..nb).map(|i| [i, (i + 1) % nb]).collect();
    let mut nodes = boundary;
    nodes.extend(lattice(domain, h));

    let mut triangles = triangulate(domain, &nodes, &constraints)?;
    for _ in 0..SMOOTHING_SWEEPS {
        smooth(domain, h, nb, &mut nodes, &triangles);
        triangles = triangulate(domain, &nodes, &constraints)?;
    }
    let mut flags = vec![false; nodes.len()];
    flags[..nb].iter_mut().for_each(|f| *f = true);
    let mesh = Mesh {
        nodes,
        triangles,
        boundary: flags,
        boundary_count: nb,
        h,
        domain: domain.clone(),
        locator: OnceLock::new(),
    };
    let min_angle = mesh.min_angle_degrees();
    if min_angle < MIN_ANGLE_DEG {
        return Err(SolverError::PoorQuality { min_angle });
    }
    Ok(mesh)
}

fn boundary_nodes(domain: &Domain, h: f64) -> Result<Vec<Point>, SolverError> {
    match domain.kind() {
        DomainKind::Disk { .. } | DomainKind::Ellipse { .. } => {
            let n = ((domain.perimeter() / h).ceil() as usize).max(12);
            let n = n + n % 2;
            Ok(domain
                .boundary_sample(n)
                .into_iter()
                .map(|b| b.point)
                .collect())
        }
        DomainKind::Polygon { vertices } => {
            let mut seen = vertices.clone();
            seen.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
            if seen.windows(2).any(|w| w[0] == w[1]) {
                return Err(SolverError::Meshing(
                    "polygon touches itself; cannot mesh a zero-width feature".into(),
                ));
            }
            let n = vertices.len();
            let mut pts = Vec::new();
            for i in 0..n {
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                let segs = ((len / h).ceil() as usize).max(1);
                for k in 0..segs {
                    let t = k as f64 / segs as f64;
                    pts.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
                }
            }
            Ok(pts)
        }
    }
}

fn lattice(domain: &Domain, h: f64) -> Vec<Point> {
    let (lo, hi) = domain.bounding_box();
    let c = domain.centroid();
    let dy = h * 3f64.sqrt() / 2.0;
    let j0 = ((lo[1] - c[1]) / dy).floor() as i64;
    let j1 = ((hi[1] - c[1]) / dy).ceil() as i64;
    let i0 = ((lo[0] - c[0]) / h).floor() as i64 - 1;
    let i1 = ((hi[0] - c[0]) / h).ceil() as i64 + 1;
    let mut pts = Vec::new();
    for j in j0..=j1 {
        let shift = if j.rem_euclid(2) == 1 { 0.5 } else { 0.0 };
        for i in i0..=i1 {
            let p = [c[0] + (i as f64 + shift) * h, c[1] + j as f64 * dy];
            if domain.signed_distance(p) < -0.6 * h {
                pts.push(p);
            }
        }
    }
    pts
}

fn triangulate(
    domain: &Domain,
    nodes: &[Point],
    constraints: &[[usize; 2]],
) -> Result<Vec<[usize; 3]>, SolverError> {
    let vertices: Vec<Point2<f64>> = nodes.iter().map(|p| Point2::new(p[0], p[1])).collect();
    let cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(
        vertices,
        constraints.to_vec(),
    )
    .map_err(|e| SolverError::Meshing(format!("triangulation failed: {e:?}")))?;
    if cdt.num_vertices() != nodes.len() {
        return Err(SolverError::Meshing("duplicate mesh nodes".into()));
    }
    let mut tris = Vec::with_capacity(cdt.num_inner_faces());
    let sliver = 1e-9 * domain.diameter().powi(2);
    for face in cdt.inner_faces() {
        let [a, b, c] = face.vertices().map(|v| v.fix().index());
        let centroid = [
            (nodes[a][0] + nodes[b][0] + nodes[c][0]) / 3.0,
            (nodes[a][1] + nodes[b][1] + nodes[c][1]) / 3.0,
        ];
        let o = orient(nodes[a], nodes[b], nodes[c]);
        // slivers of collinear boundary nodes on straight edges
        if domain.signed_distance(centroid) >= 0.0 || o.abs() <= sliver {
            continue;
        }
        if o > 0.0 {
            tris.push([a, b, c]);
        } else {
            tris.push([a, c, b]);
        }
    }
    Ok(tris)
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn smooth(domain: &Domain, h: f64, nb: usize, nodes: &mut [Point], tris: &[[usize; 3]]) {
    let n = nodes.len();
    let mut sum = vec![[0.0, 0.0]; n];
    let mut count = vec![0usize; n];
    for t in tris {
        for k in 0..3 {
            let (i, j) = (t[k], t[(k + 1) % 3]);
            sum[i][0] += nodes[j][0];
            sum[i][1] += nodes[j][1];
            count[i] += 1;
            sum[j][0] += nodes[i][0];
            sum[j][1] += nodes[i][1];
            count[j] += 1;
        }
    }
    for i in nb..n {
        if count[i] == 0 {
            continue;
        }
        let p = [sum[i][0] / count[i] as f64, sum[i][1] / count[i] as f64];
        if domain.signed_distance(p) < -0.3 * h {
            nodes[i] = p;
        }
    }
}

impl Mesh {
    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary[i]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    /// Boundary nodes are `0..boundary_count()`.
    pub fn boundary_count(&self) -> usize {
        self.boundary_count
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|i| self.nodes[i])
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * orient(a, b, c)
    }

    /// Area of the triangulation (not of the domain).
    pub fn area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.triangle_area(t))
            .sum()
    }

    pub fn max_edge_length(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k], t[(k + 1) % 3])))
            .map(|(i, j)| dist(self.nodes[i], self.nodes[j]))
            .fold(0.0, f64::max)
    }

    pub fn min_angle_degrees(&self) -> f64 {
        let mut min = 180.0f64;
        for t in 0..self.triangles.len() {
            let p = self.triangle_points(t);
            for k in 0..3 {
                let (a, b, c) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [c[0] - a[0], c[1] - a[1]];
                let ang = (u[0] * v[1] - u[1] * v[0])
                    .abs()
                    .atan2(u[0] * v[0] + u[1] * v[1]);
                min = min.min(ang.to_degrees());
            }
        }
        min
    }

    /// Mesh of the dilated domain `t·Ω`; connectivity unchanged.
    pub fn dilated(&self, t: f64) -> Result<Mesh, SolverError> {
        Ok(Mesh {
            nodes: self.nodes.iter().map(|p| [t * p[0], t * p[1]]).collect(),
            triangles: self.triangles.clone(),
            boundary: self.boundary.clone(),
            boundary_count: self.boundary_count,
            h: t * self.h,
            domain: self.domain.dilated(t)?,
            locator: OnceLock::new(),
        })
    }

    /// Triangle containing `p` and the barycentric coordinates of `p` in it.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        self.locator
            .get_or_init(|| Locator::new(self))
            .locate(self, p)
    }

    /// Value of the piecewise-linear interpolant of nodal `values` at `p`.
    pub fn interpolate(&self, values: &[f64], p: Point) -> Option<f64> {
        let (t, w) = self.locate(p)?;
        let tri = self.triangles[t];
        Some(w[0] * values[tri[0]] + w[1] * values[tri[1]] + w[2] * values[tri[2]])
    }

    /// Plaintext dump: `nodes E elements F`, node lines `x y flag`, element
    /// lines `i j k`, then one `value` line per node if `values` is given.
    pub fn dump(&self, values: Option<&[f64]>) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "nodes {} elements {}",
            self.nodes.len(),
            self.triangles.len()
        );
        for (p, &b) in self.nodes.iter().zip(&self.boundary) {
            let _ = writeln!(out, "{} {} {}", p[0], p[1], b as u8);
        }
        for t in &self.triangles {
            let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
        }
        if let Some(values) = values {
            for v in values {
                let _ = writeln!(out, "{v}");
            }
        }
        out
    }
}

/// Parsed contents of a mesh dump.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshDump {
    pub nodes: Vec<Point>,
    pub boundary: Vec<bool>,
    pub triangles: Vec<[usize; 3]>,
    pub values: Option<Vec<f64>>,
}

pub fn read_dump(text: &str) -> Result<MeshDump, SolverError> {
    let err = |line: usize, msg: &str| SolverError::Dump(format!("line {}: {msg}", line + 1));
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (hl, header) = lines.next().ok_or_else(|| err(0, "empty dump"))?;
    let words: Vec<&str> = header.split_whitespace().collect();
    let (ne, nf) = match words.as_slice() {
        ["nodes", e, "elements", f] => (
            e.parse::<usize>().map_err(|_| err(hl, "bad node count"))?,
            f.parse::<usize>()
                .map_err(|_| err(hl, "bad element count"))?,
        ),
        _ => return Err(err(hl, "expected 'nodes E elements F'")),
    };
    let mut nodes = Vec::with_capacity(ne);
    let mut boundary = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (ln, l) = lines.next().ok_or_else(|| err(0, "missing node lines"))?;
        let f: Vec<&str> = l.split_whitespace().collect();
        let [x, y, flag] = f.as_slice() else {
            return Err(err(ln, "expected 'x y flag'"));
        };
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(ln, "malformed number"));
        nodes.push([num(x)?, num(y)?]);
        boundary.push(match *flag {
            "0" => false,
            "1" => true,
            _ => return Err(err(ln, "flag must be 0 or 1")),
        });
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| err(0, "missing element lines"))?;
        let idx: Result<Vec<usize>, _> = l.split_whitespace().map(str::parse).collect();
        match idx.as_deref() {
            Ok([i, j, k]) if *i < ne && *j < ne && *k < ne => triangles.push([*i, *j, *k]),
            _ => return Err(err(ln, "expected three node indices")),
        }
    }
    let rest: Vec<(usize, &str)> = lines.collect();
    let values = if rest.is_empty() {
        None
    } else if rest.len() == ne {
        let v: Result<Vec<f64>, _> = rest
            .iter()
            .map(|(ln, l)| {
                l.trim()
                    .parse::<f64>()
                    .map_err(|_| err(*ln, "malformed value"))
            })
            .collect();
        Some(v?)
    } else {
        return Err(err(rest[0].0, "value count does not match node count"));
    };
    Ok(MeshDump {
        nodes,
        boundary,
        triangles,
        values,
    })
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Uniform bucket grid over triangle bounding boxes.
#[derive(Debug)]
struct Locator {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl Locator {
    fn new(mesh: &Mesh) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &mesh.nodes {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let cell = (2.0 * mesh.max_edge_length()).max(1e-300);
        let nx = (((hi[0] - lo[0]) / cell).floor() as usize + 1).max(1);
        let ny = (((hi[1] - lo[1]) / cell).floor() as usize + 1).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let pts = tri.map(|i| mesh.nodes[i]);
            let bx0 = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let bx1 = pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            let by0 = pts.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
            let by1 = pts.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
            let (i0, j0) = Self::cell_of(lo, cell, nx, ny, [bx0, by0]);
            let (i1, j1) = Self::cell_of(lo, cell, nx, ny, [bx1, by1]);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(t as u32);
                }
            }
        }
        Self {
            origin: lo,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    fn cell_of(origin: Point, cell: f64, nx: usize, ny: usize, p: Point) -> (usize, usize) {
        let i = ((p[0] - origin[0]) / cell).floor().max(0.0) as usize;
        let j = ((p[1] - origin[1]) / cell).floor().max(0.0) as usize;
        (i.min(nx - 1), j.min(ny - 1))
    }

    fn locate(&self, mesh: &Mesh, p: Point) -> Option<(usize, [f64; 3])> {
        let (i, j) = Self::cell_of(self.origin, self.cell, self.nx, self.ny, p);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in &self.buckets[j * self.nx + i] {
            let [a, b, c] = mesh.triangle_points(t as usize);
            let area = orient(a, b, c);
            let w = [
                orient(p, b, c) / area,
                orient(a, p, c) / area,
                orient(a, b, p) / area,
            ];
            let worst = w[0].min(w[1]).min(w[2]);
            if best.is_none_or(|(_, _, bw)| worst > bw) {
                best = Some((t as usize, w, worst));
            }
        }
        match best {
            Some((t, w, worst)) if worst >= -1e-10 => Some((t, w)),
            _ => None,
        }
    }
}
