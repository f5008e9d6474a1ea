//! Coefficient fields `A(x)` for `div(A ∇v)`, with certified ellipticity
//! bounds `λ |ξ|² <= <A(x) ξ, ξ> <= Λ |ξ|²`.
//!
//! Rough fields are piecewise constant on a square cell grid, which is all
//! that per-element assembly needs from a merely measurable coefficient.

use std::fmt;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::Point;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoefficientError {
    #[error("eigenvalue bounds must satisfy 0 < min <= max, got [{0}, {1}]")]
    BadEigenRange(f64, f64),
    #[error("cell size must be positive, got {0}")]
    BadCellSize(f64),
    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(SymMat2),
    #[error("matrix square root needs a constant field")]
    NotConstant,
}

/// Symmetric 2×2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMat2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl fmt::Display for SymMat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            self.xx, self.xy, self.xy, self.yy
        )
    }
}

/// Eigen-decomposition of a symmetric 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigen2 {
    pub min: f64,
    pub max: f64,
    /// Unit eigenvector for `min`.
    pub min_vector: Point,
    /// Unit eigenvector for `max`.
    pub max_vector: Point,
}

impl SymMat2 {
    pub const IDENTITY: SymMat2 = SymMat2 {
        xx: 1.0,
        xy: 0.0,
        yy: 1.0,
    };

    pub fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Self::new(a, 0.0, b)
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn apply(&self, v: Point) -> Point {
        [
            self.xx * v[0] + self.xy * v[1],
            self.xy * v[0] + self.yy * v[1],
        ]
    }

    /// `<A ξ, ξ>`.
    pub fn quadratic_form(&self, xi: Point) -> f64 {
        let a = self.apply(xi);
        a[0] * xi[0] + a[1] * xi[1]
    }

    pub fn eigen(&self) -> Eigen2 {
        let mean = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        let rad = half_diff.hypot(self.xy);
        let phi = 0.5 * (2.0 * self.xy).atan2(self.xx - self.yy);
        let (s, c) = phi.sin_cos();
        Eigen2 {
            min: mean - rad,
            max: mean + rad,
            min_vector: [-s, c],
            max_vector: [c, s],
        }
    }

    pub fn is_spd(&self) -> bool {
        self.xx > 0.0 && self.det() > 0.0
    }

    /// Symmetric positive-definite square root, in closed form
    /// `S = (A + √det·I) / √(tr + 2√det)`.
    pub fn sqrt(&self) -> Result<SymMat2, CoefficientError> {
        if !self.is_spd() {
            return Err(CoefficientError::NotSpd(*self));
        }
        let s = self.det().sqrt();
        let t = (self.trace() + 2.0 * s).sqrt();
        Ok(SymMat2::new(
            (self.xx + s) / t,
            self.xy / t,
            (self.yy + s) / t,
        ))
    }

    /// `R diag(e1, e2) Rᵀ` with `R` the rotation by `angle`.
    pub fn from_eigen(e1: f64, e2: f64, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        SymMat2::new(
            e1 * c * c + e2 * s * s,
            (e1 - e2) * c * s,
            e1 * s * s + e2 * c * c,
        )
    }
}

/// Field description without derived bounds.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSpec {
    Identity,
    Constant(SymMat2),
    /// Cell `(i, j) = (⌊x/cell⌋, ⌊y/cell⌋)` takes `even` when `i + j` is even.
    Checkerboard {
        cell: f64,
        even: SymMat2,
        odd: SymMat2,
    },
    /// Independent random SPD matrix per cell: eigenvalues log-uniform in
    /// `[min_eig, max_eig]`, eigenvector angle uniform.
    RandomCells {
        cell: f64,
        min_eig: f64,
        max_eig: f64,
    },
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Identity => write!(f, "identity"),
            FieldSpec::Constant(m) => write!(f, "constant {m}"),
            FieldSpec::Checkerboard { cell, even, odd } => {
                write!(f, "checkerboard cell={cell} even={even} odd={odd}")
            }
            FieldSpec::RandomCells {
                cell,
                min_eig,
                max_eig,
            } => write!(f, "random cell={cell} eig=[{min_eig}, {max_eig}]"),
        }
    }
}

/// An immutable coefficient field with declared ellipticity bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    spec: FieldSpec,
    seed: u64,
    lambda: f64,
    big_lambda: f64,
}

fn check_spd(m: &SymMat2) -> Result<Eigen2, CoefficientError> {
    let e = m.eigen();
    if !(e.min > 0.0) || !m.is_spd() {
        return Err(CoefficientError::NotSpd(*m));
    }
    Ok(e)
}

impl CoefficientField {
    /// Builds a field; `seed` only matters for random fields.
    pub fn new(spec: FieldSpec, seed: u64) -> Result<Self, CoefficientError> {
        let (lambda, big_lambda) = match &spec {
            FieldSpec::Identity => (1.0, 1.0),
            FieldSpec::Constant(m) => {
                let e = check_spd(m)?;
                (e.min, e.max)
            }
            FieldSpec::Checkerboard { cell, even, odd } => {
                if !(*cell > 0.0) {
                    return Err(CoefficientError::BadCellSize(*cell));
                }
                let (a, b) = (check_spd(even)?, check_spd(odd)?);
                (a.min.min(b.min), a.max.max(b.max))
            }
            FieldSpec::RandomCells {
                cell,
                min_eig,
                max_eig,
            } => {
                if !(*cell > 0.0) {
                    return Err(CoefficientError::BadCellSize(*cell));
                }
                if !(*min_eig > 0.0 && min_eig <= max_eig && max_eig.is_finite()) {
                    return Err(CoefficientError::BadEigenRange(*min_eig, *max_eig));
                }
                (*min_eig, *max_eig)
            }
        };
        Ok(Self {
            spec,
            seed,
            lambda,
            big_lambda,
        })
    }

    pub fn identity() -> Self {
        Self::new(FieldSpec::Identity, 0).expect("identity is valid")
    }

    pub fn constant(m: SymMat2) -> Result<Self, CoefficientError> {
        Self::new(FieldSpec::Constant(m), 0)
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Declared lower ellipticity bound `λ`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Declared upper ellipticity bound `Λ`.
    pub fn big_lambda(&self) -> f64 {
        self.big_lambda
    }

    /// Same field with overridden declared bounds (for testing certificates).
    pub fn with_declared_bounds(mut self, lambda: f64, big_lambda: f64) -> Self {
        self.lambda = lambda;
        self.big_lambda = big_lambda;
        self
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.spec, FieldSpec::Identity)
    }

    /// The matrix if the field does not depend on `x`.
    pub fn constant_matrix(&self) -> Option<SymMat2> {
        match self.spec {
            FieldSpec::Identity => Some(SymMat2::IDENTITY),
            FieldSpec::Constant(m) => Some(m),
            _ => None,
        }
    }

    pub fn evaluate(&self, x: Point) -> SymMat2 {
        match &self.spec {
            FieldSpec::Identity => SymMat2::IDENTITY,
            FieldSpec::Constant(m) => *m,
            FieldSpec::Checkerboard { cell, even, odd } => {
                let (i, j) = cell_index(x, *cell);
                if (i + j).rem_euclid(2) == 0 {
                    *even
                } else {
                    *odd
                }
            }
            FieldSpec::RandomCells {
                cell,
                min_eig,
                max_eig,
            } => {
                let (i, j) = cell_index(x, *cell);
                random_cell_matrix(self.seed, i, j, *min_eig, *max_eig)
            }
        }
    }

    /// Symmetric positive-definite square root of a constant field.
    pub fn matrix_sqrt(&self) -> Result<SymMat2, CoefficientError> {
        self.constant_matrix()
            .ok_or(CoefficientError::NotConstant)?
            .sqrt()
    }

    /// Square root of the matrix at a fixed point.
    pub fn matrix_sqrt_at(&self, x: Point) -> Result<SymMat2, CoefficientError> {
        self.evaluate(x).sqrt()
    }

    pub fn summary(&self) -> String {
        match self.spec {
            FieldSpec::RandomCells { .. } => format!("{} seed={}", self.spec, self.seed),
            _ => self.spec.to_string(),
        }
    }
}

fn cell_index(x: Point, cell: f64) -> (i64, i64) {
    ((x[0] / cell).floor() as i64, (x[1] / cell).floor() as i64)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn random_cell_matrix(seed: u64, i: i64, j: i64, lo: f64, hi: f64) -> SymMat2 {
    let key = splitmix64(seed ^ splitmix64(i as u64 ^ splitmix64(j as u64)));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    let mut draw = || {
        let u: f64 = rng.random();
        (ln_lo + u * (ln_hi - ln_lo)).exp().clamp(lo, hi)
    };
    let (e1, e2) = (draw(), draw());
    let angle = std::f64::consts::PI * rng.random::<f64>();
    SymMat2::from_eigen(e1, e2, angle)
}

/// Outcome of a sampled ellipticity check.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticityReport {
    pub pass: bool,
    pub min_quotient: f64,
    pub max_quotient: f64,
    /// `min(q_min - λ, Λ - q_max)`; negative on failure.
    pub worst_margin: f64,
    pub worst_point: Point,
    pub worst_direction: Point,
}

/// Samples `n_samples` points in `[-1, 1]²`.
pub fn verify_ellipticity(
    field: &CoefficientField,
    n_samples: usize,
    seed: u64,
) -> EllipticityReport {
    verify_ellipticity_in(field, n_samples, seed, ([-1.0, -1.0], [1.0, 1.0]))
}

/// Rayleigh quotients at sampled points: the exact extremes from the
/// eigen-decomposition plus one random direction per point. Passes iff all
/// lie in `[λ - ε, Λ + ε]`, `ε = 1e-12·Λ`.
pub fn verify_ellipticity_in(
    field: &CoefficientField,
    n_samples: usize,
    seed: u64,
    region: (Point, Point),
) -> EllipticityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = region;
    let (lambda, big_lambda) = (field.lambda(), field.big_lambda());
    let eps = 1e-12 * big_lambda;
    let mut report = EllipticityReport {
        pass: true,
        min_quotient: f64::INFINITY,
        max_quotient: f64::NEG_INFINITY,
        worst_margin: f64::INFINITY,
        worst_point: lo,
        worst_direction: [1.0, 0.0],
    };
    for _ in 0..n_samples.max(1) {
        let x = [
            lo[0] + (hi[0] - lo[0]) * rng.random::<f64>(),
            lo[1] + (hi[1] - lo[1]) * rng.random::<f64>(),
        ];
        let a = field.evaluate(x);
        let e = a.eigen();
        let angle = std::f64::consts::TAU * rng.random::<f64>();
        let random_dir = [angle.cos(), angle.sin()];
        for xi in [e.min_vector, e.max_vector, random_dir] {
            let q = a.quadratic_form(xi);
            report.min_quotient = report.min_quotient.min(q);
            report.max_quotient = report.max_quotient.max(q);
            let margin = (q - lambda).min(big_lambda - q);
            if margin < report.worst_margin {
                report.worst_margin = margin;
                report.worst_point = x;
                report.worst_direction = xi;
            }
        }
    }
    report.pass = report.min_quotient >= lambda - eps && report.max_quotient <= big_lambda + eps;
    report
}
