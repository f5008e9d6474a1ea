//! Piecewise-linear finite elements for `div(A ∇v) = 0` with Dirichlet data,
//! discrete subsolution checks and closed-form reference fields.

pub mod mesh;
mod reference;
pub mod sparse;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::coefficients::CoefficientField;
use crate::geometry::{GeometryError, Point};
use crate::quadrature::triangle_rule;

pub use mesh::{mesh_domain, read_dump, Mesh, MeshDump};
pub use reference::{Analytic, BoundaryData, FourierSeries, MAX_HARMONIC_DEGREE};
use sparse::{iteration_cap, pcg, CsrMatrix};

pub const SOLVER_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("mesh size h = {h} outside (0, {max}]")]
    BadMeshSize { h: f64, max: f64 },
    #[error("meshing failed: {0}")]
    Meshing(String),
    #[error("mesh quality too low: minimum angle {min_angle:.2} degrees")]
    PoorQuality { min_angle: f64 },
    #[error("malformed mesh dump: {0}")]
    Dump(String),
    #[error("boundary data not finite at node {node}")]
    BadBoundaryData { node: usize },
    #[error("conjugate gradients stalled after {iterations} iterations (relative residual {})", history.last().copied().unwrap_or(f64::NAN))]
    NotConverged {
        iterations: usize,
        history: Vec<f64>,
    },
    #[error("unknown or invalid reference field: {0}")]
    UnknownReference(String),
    #[error("value count {got} does not match node count {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Where a sample's nodal values came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    DirichletSolve {
        field: String,
        data: String,
    },
    Subsolution(String),
    Reference(String),
    /// `scale·v + shift` of another sample.
    Transformed {
        base: Box<Provenance>,
        scale: f64,
        shift: f64,
    },
}

impl Provenance {
    pub fn is_solution(&self) -> bool {
        match self {
            Provenance::DirichletSolve { .. } | Provenance::Reference(_) => true,
            Provenance::Subsolution(_) => false,
            Provenance::Transformed { base, .. } => base.is_solution(),
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::DirichletSolve { field, data } => {
                write!(f, "dirichlet-solve[{field}; {data}]")
            }
            Provenance::Subsolution(id) => write!(f, "subsolution[{id}]"),
            Provenance::Reference(id) => write!(f, "reference[{id}]"),
            Provenance::Transformed { base, scale, shift } => {
                write!(f, "{scale}*({base})+{shift}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
    pub boundary_min: f64,
    pub boundary_max: f64,
    /// How far the solution leaves `[min g, max g]` (0 if it does not).
    pub max_principle_excess: f64,
}

impl SolveStats {
    /// `1e-8·osc(g)`.
    pub fn max_principle_tolerance(&self) -> f64 {
        1e-8 * (self.boundary_max - self.boundary_min)
    }

    pub fn max_principle_holds(&self) -> bool {
        self.max_principle_excess <= self.max_principle_tolerance()
    }
}

/// Nodal values on a shared mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionSample {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
    provenance: Provenance,
    alpha: f64,
    stats: Option<SolveStats>,
}

impl SolutionSample {
    pub fn new(
        mesh: Arc<Mesh>,
        values: Vec<f64>,
        provenance: Provenance,
    ) -> Result<Self, SolverError> {
        if values.len() != mesh.node_count() {
            return Err(SolverError::LengthMismatch {
                expected: mesh.node_count(),
                got: values.len(),
            });
        }
        Ok(Self {
            mesh,
            values,
            provenance,
            alpha: 1.0,
            stats: None,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Hölder exponent used downstream (default 1).
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn stats(&self) -> Option<&SolveStats> {
        self.stats.as_ref()
    }

    /// Value of the piecewise-linear interpolant.
    pub fn value_at(&self, x: Point) -> Option<f64> {
        self.mesh.interpolate(&self.values, x)
    }

    /// `scale·v + shift` on the same mesh.
    pub fn transformed(&self, scale: f64, shift: f64) -> Self {
        Self {
            mesh: Arc::clone(&self.mesh),
            values: self.values.iter().map(|v| scale * v + shift).collect(),
            provenance: Provenance::Transformed {
                base: Box::new(self.provenance.clone()),
                scale,
                shift,
            },
            alpha: self.alpha,
            stats: None,
        }
    }

    /// Same nodal values on the dilated mesh `x ↦ t·x`.
    pub fn dilated(&self, t: f64) -> Result<Self, SolverError> {
        Ok(Self {
            mesh: Arc::new(self.mesh.dilated(t)?),
            values: self.values.clone(),
            provenance: self.provenance.clone(),
            alpha: self.alpha,
            stats: self.stats.clone(),
        })
    }

    /// `(∫ (v_h − u)²)^{1/2}` over the triangulation.
    pub fn l2_error(&self, exact: impl Fn(Point) -> f64) -> f64 {
        let rule = triangle_rule(4);
        let mut sum = 0.0;
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            let [a, b, c] = self.mesh.triangle_points(t);
            let two_area = 2.0 * self.mesh.triangle_area(t);
            let v = tri.map(|i| self.values[i]);
            for &(xi, eta, w) in &rule {
                let l0 = 1.0 - xi - eta;
                let x = [
                    l0 * a[0] + xi * b[0] + eta * c[0],
                    l0 * a[1] + xi * b[1] + eta * c[1],
                ];
                let e = l0 * v[0] + xi * v[1] + eta * v[2] - exact(x);
                sum += w * two_area * e * e;
            }
        }
        sum.sqrt()
    }
}

/// Global stiffness matrix over all nodes, one coefficient matrix per
/// element evaluated at its centroid. Exactly symmetric.
pub fn stiffness_matrix(mesh: &Mesh, field: &CoefficientField) -> CsrMatrix {
    let n = mesh.node_count();
    let mut triplets = Vec::with_capacity(9 * mesh.triangles().len());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let [p0, p1, p2] = mesh.triangle_points(t);
        let two_area = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0]);
        let grads = [
            [(p1[1] - p2[1]) / two_area, (p2[0] - p1[0]) / two_area],
            [(p2[1] - p0[1]) / two_area, (p0[0] - p2[0]) / two_area],
            [(p0[1] - p1[1]) / two_area, (p1[0] - p0[0]) / two_area],
        ];
        let centroid = [(p0[0] + p1[0] + p2[0]) / 3.0, (p0[1] + p1[1] + p2[1]) / 3.0];
        let a = field.evaluate(centroid);
        let area = 0.5 * two_area;
        for i in 0..3 {
            let ag = a.apply(grads[i]);
            for j in i..3 {
                let k = area * (ag[0] * grads[j][0] + ag[1] * grads[j][1]);
                triplets.push((tri[i], tri[j], k));
                if i != j {
                    triplets.push((tri[j], tri[i], k));
                }
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &triplets)
}

/// Assembled Dirichlet problem, reusable for many boundary data.
#[derive(Debug, Clone)]
pub struct DirichletSystem {
    mesh: Arc<Mesh>,
    field_summary: String,
    full: CsrMatrix,
    interior_block: CsrMatrix,
    coupling: CsrMatrix,
}

impl DirichletSystem {
    pub fn new(mesh: Arc<Mesh>, field: &CoefficientField) -> Self {
        let full = stiffness_matrix(&mesh, field);
        let nb = mesh.boundary_count();
        let n = mesh.node_count();
        let interior_map: Vec<Option<usize>> = (0..n).map(|i| (i >= nb).then(|| i - nb)).collect();
        let boundary_map: Vec<Option<usize>> = (0..n).map(|i| (i < nb).then_some(i)).collect();
        let interior_block = full.submatrix(&interior_map, &interior_map);
        let coupling = full.submatrix(&interior_map, &boundary_map);
        Self {
            mesh,
            field_summary: field.summary(),
            full,
            interior_block,
            coupling,
        }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.full
    }

    /// Stiffness matrix restricted to interior nodes.
    pub fn interior_block(&self) -> &CsrMatrix {
        &self.interior_block
    }

    /// Nodal solution for boundary values given at nodes `0..boundary_count`.
    pub fn solve_nodal(&self, boundary: &[f64]) -> Result<(Vec<f64>, SolveStats), SolverError> {
        let nb = self.mesh.boundary_count();
        assert_eq!(boundary.len(), nb, "one value per boundary node");
        if let Some(node) = boundary.iter().position(|g| !g.is_finite()) {
            return Err(SolverError::BadBoundaryData { node });
        }
        let ni = self.mesh.node_count() - nb;
        let mut rhs = vec![0.0; ni];
        self.coupling.mul_vec(boundary, &mut rhs);
        rhs.iter_mut().for_each(|v| *v = -*v);
        let mut x = vec![0.0; ni];
        let out = pcg(
            &self.interior_block,
            &rhs,
            &mut x,
            SOLVER_TOLERANCE,
            iteration_cap(ni),
        );
        if !out.converged {
            return Err(SolverError::NotConverged {
                iterations: out.iterations,
                history: out.history,
            });
        }
        let mut values = boundary.to_vec();
        values.extend_from_slice(&x);
        let gmin = boundary.iter().copied().fold(f64::INFINITY, f64::min);
        let gmax = boundary.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let excess = x
            .iter()
            .map(|&v| (v - gmax).max(gmin - v))
            .fold(0.0f64, f64::max);
        let stats = SolveStats {
            iterations: out.iterations,
            relative_residual: out.relative_residual,
            boundary_min: gmin,
            boundary_max: gmax,
            max_principle_excess: excess,
        };
        Ok((values, stats))
    }

    pub fn solve(&self, data: &BoundaryData) -> Result<SolutionSample, SolverError> {
        let domain = self.mesh.domain();
        let g: Vec<f64> = self.mesh.nodes()[..self.mesh.boundary_count()]
            .iter()
            .map(|&x| data.eval(x, domain))
            .collect();
        let (values, stats) = self.solve_nodal(&g)?;
        let mut sample = SolutionSample::new(
            Arc::clone(&self.mesh),
            values,
            Provenance::DirichletSolve {
                field: self.field_summary.clone(),
                data: data.to_string(),
            },
        )?;
        sample.stats = Some(stats);
        Ok(sample)
    }
}

/// One-shot assembly and solve.
pub fn assemble_and_solve_dirichlet(
    mesh: &Arc<Mesh>,
    field: &CoefficientField,
    data: &BoundaryData,
) -> Result<SolutionSample, SolverError> {
    DirichletSystem::new(Arc::clone(mesh), field).solve(data)
}

/// Nodal evaluation of a closed form. The squared distance is tagged as a
/// subsolution, everything else as a reference solution.
pub fn reference_solution(id: &Analytic, mesh: &Arc<Mesh>) -> Result<SolutionSample, SolverError> {
    id.check_domain(mesh.domain())?;
    let values = mesh
        .nodes()
        .iter()
        .map(|&x| id.eval(x, mesh.domain()))
        .collect();
    let provenance = if id.is_subsolution_only() {
        Provenance::Subsolution(id.to_string())
    } else {
        Provenance::Reference(id.to_string())
    };
    SolutionSample::new(Arc::clone(mesh), values, provenance)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsolutionReport {
    /// `(node, −(K v)_node)` for every interior node.
    pub residuals: Vec<(usize, f64)>,
    /// Residuals divided by the lumped mass, approximating `Lv` pointwise.
    pub lumped: Vec<f64>,
    pub min_residual: f64,
    /// `max_i Σ_j |K_ij v_j|`.
    pub scale: f64,
    pub is_subsolution: bool,
}

impl SubsolutionReport {
    /// `1e-9·scale`.
    pub fn tolerance(&self) -> f64 {
        1e-9 * self.scale
    }
}

/// Tests `v` against every interior hat function: `Lv >= 0` weakly iff
/// `−(K v)_i >= −1e-9·scale` at every interior node.
pub fn weak_subsolution_residual(
    sample: &SolutionSample,
    field: &CoefficientField,
) -> SubsolutionReport {
    let mesh = sample.mesh();
    let k = stiffness_matrix(mesh, field);
    let mut mass = vec![0.0; mesh.node_count()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let a = mesh.triangle_area(t) / 3.0;
        for &i in tri {
            mass[i] += a;
        }
    }
    let v = sample.values();
    let mut residuals = Vec::new();
    let mut lumped = Vec::new();
    let mut scale = 0.0f64;
    for i in mesh.boundary_count()..mesh.node_count() {
        let (mut s, mut abs) = (0.0, 0.0);
        for (j, kij) in k.row(i) {
            s += kij * v[j];
            abs += (kij * v[j]).abs();
        }
        scale = scale.max(abs);
        residuals.push((i, -s));
        lumped.push(-s / mass[i]);
    }
    let min_residual = residuals.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    SubsolutionReport {
        is_subsolution: residuals.iter().all(|r| r.1 >= -1e-9 * scale),
        residuals,
        lumped,
        min_residual,
        scale,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{FieldSpec, SymMat2};
    use crate::geometry::Domain;

    fn disk_mesh(h: f64) -> Arc<Mesh> {
        Arc::new(mesh_domain(&Domain::unit_disk(), h).unwrap())
    }

    #[test]
    fn interior_block_is_exactly_symmetric() {
        let m = disk_mesh(0.1);
        let field = CoefficientField::new(
            FieldSpec::RandomCells {
                cell: 0.13,
                min_eig: 0.5,
                max_eig: 30.0,
            },
            5,
        )
        .unwrap();
        let sys = DirichletSystem::new(m, &field);
        assert!(sys.stiffness().is_symmetric());
        assert!(sys.interior_block().is_symmetric());
    }

    #[test]
    fn linear_data_on_the_disk() {
        let m = disk_mesh(0.05);
        let data = BoundaryData::Analytic(Analytic::linear(1.0, 0.0, 0.0));
        let s = assemble_and_solve_dirichlet(&m, &CoefficientField::identity(), &data).unwrap();
        let h2 = m.h() * m.h();
        for (x, v) in m.nodes().iter().zip(s.values()) {
            assert!((v - x[0]).abs() <= h2);
        }
        assert!(s.stats().unwrap().max_principle_holds());
    }

    #[test]
    fn linear_reproduction_on_polygons() {
        let square = Arc::new(mesh_domain(&Domain::unit_square(), 0.05).unwrap());
        let data = BoundaryData::Analytic(Analytic::linear(1.0, -2.0, 0.5));
        for field in [
            CoefficientField::identity(),
            CoefficientField::constant(SymMat2::diag(4.0, 1.0)).unwrap(),
            CoefficientField::constant(SymMat2::new(2.0, 1.0, 2.0)).unwrap(),
        ] {
            let s = assemble_and_solve_dirichlet(&square, &field, &data).unwrap();
            for (x, v) in square.nodes().iter().zip(s.values()) {
                assert!((v - (x[0] - 2.0 * x[1] + 0.5)).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn checkerboard_respects_the_maximum_principle() {
        let m = disk_mesh(0.05);
        let field = CoefficientField::new(
            FieldSpec::Checkerboard {
                cell: 0.1,
                even: SymMat2::diag(1.0, 1.0),
                odd: SymMat2::diag(5.0, 5.0),
            },
            0,
        )
        .unwrap();
        let data = BoundaryData::Fourier(FourierSeries::random(8, 11));
        let s = assemble_and_solve_dirichlet(&m, &field, &data).unwrap();
        let st = s.stats().unwrap();
        assert!(st.max_principle_holds(), "{st:?}");
    }

    #[test]
    fn cubic_harmonic_converges() {
        let exact = Analytic::harmonic(3, false).unwrap();
        let data = BoundaryData::Analytic(exact.clone());
        let d = Domain::unit_disk();
        let errs: Vec<f64> = [0.08, 0.04]
            .iter()
            .map(|&h| {
                let m = disk_mesh(h);
                let s =
                    assemble_and_solve_dirichlet(&m, &CoefficientField::identity(), &data).unwrap();
                s.l2_error(|x| exact.eval(x, &d))
            })
            .collect();
        let order = (errs[0] / errs[1]).log2();
        assert!(order >= 1.5, "{errs:?} order {order}");
    }

    #[test]
    fn subsolution_classification() {
        let m = disk_mesh(0.1);
        let id = CoefficientField::identity();
        let sq = reference_solution(&Analytic::SquaredDistance { center: [0.0, 0.0] }, &m).unwrap();
        assert!(matches!(sq.provenance(), Provenance::Subsolution(_)));
        let r = weak_subsolution_residual(&sq, &id);
        assert!(r.is_subsolution);
        assert!(r.min_residual > 0.0);
        // lumped residual approximates Δ|x|² = 4
        let mean = r.lumped.iter().sum::<f64>() / r.lumped.len() as f64;
        assert!((mean - 4.0).abs() < 0.2, "{mean}");
        let neg = sq.transformed(-1.0, 0.0);
        assert!(!weak_subsolution_residual(&neg, &id).is_subsolution);
        let aniso = CoefficientField::constant(SymMat2::new(2.0, 1.0, 2.0)).unwrap();
        assert!(weak_subsolution_residual(&sq, &aniso).is_subsolution);
    }

    #[test]
    fn solved_samples_have_zero_residual() {
        let m = disk_mesh(0.05);
        let field = CoefficientField::constant(SymMat2::diag(4.0, 1.0)).unwrap();
        let data = BoundaryData::Fourier(FourierSeries::random(6, 2));
        let s = assemble_and_solve_dirichlet(&m, &field, &data).unwrap();
        let r = weak_subsolution_residual(&s, &field);
        assert!(r.is_subsolution);
        let worst = r.residuals.iter().map(|x| x.1.abs()).fold(0.0, f64::max);
        assert!(worst <= 1e-8 * r.scale, "{worst} vs {}", r.scale);
    }

    #[test]
    fn reference_examples() {
        let m = disk_mesh(0.2);
        let x1 = reference_solution(&Analytic::linear(1.0, 0.0, 0.0), &m).unwrap();
        for (p, v) in m.nodes().iter().zip(x1.values()) {
            assert_eq!(*v, p[0]);
        }
        let sq = Arc::new(mesh_domain(&Domain::unit_square(), 0.25).unwrap());
        let f = Analytic::FourierHarmonic(FourierSeries::mode(1, false));
        assert!(reference_solution(&f, &sq).is_err());
    }

    #[test]
    fn non_finite_boundary_data_is_rejected() {
        let m = disk_mesh(0.2);
        let sys = DirichletSystem::new(Arc::clone(&m), &CoefficientField::identity());
        let mut g = vec![0.0; m.boundary_count()];
        g[3] = f64::NAN;
        assert!(matches!(
            sys.solve_nodal(&g),
            Err(SolverError::BadBoundaryData { node: 3 })
        ));
    }
}
