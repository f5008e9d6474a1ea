//! Closed-form fields and boundary data.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::SolverError;
use crate::geometry::{Domain, DomainKind, Point};

/// Trigonometric polynomial `a0 + Σ_k (a_k cos kφ + b_k sin kφ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    pub a0: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl FourierSeries {
    pub fn new(a0: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        let n = cos.len().max(sin.len());
        let (mut cos, mut sin) = (cos, sin);
        cos.resize(n, 0.0);
        sin.resize(n, 0.0);
        Self { a0, cos, sin }
    }

    /// Mode `k >= 1` alone: `cos kφ` or `sin kφ`.
    pub fn mode(k: usize, sine: bool) -> Self {
        let mut c = vec![0.0; k];
        let mut s = vec![0.0; k];
        if sine {
            s[k - 1] = 1.0;
        } else {
            c[k - 1] = 1.0;
        }
        Self::new(0.0, c, s)
    }

    /// Seeded random data with `a_k, b_k ~ N(0, 1)/k`, zero mean term.
    pub fn random(degree: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cos = Vec::with_capacity(degree);
        let mut sin = Vec::with_capacity(degree);
        for k in 1..=degree {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            cos.push(a / k as f64);
            sin.push(b / k as f64);
        }
        Self::new(0.0, cos, sin)
    }

    pub fn degree(&self) -> usize {
        self.cos.len()
    }

    pub fn at_angle(&self, phi: f64) -> f64 {
        let mut s = self.a0;
        for k in 0..self.degree() {
            let (sk, ck) = ((k + 1) as f64 * phi).sin_cos();
            s += self.cos[k] * ck + self.sin[k] * sk;
        }
        s
    }

    /// Harmonic extension into the disk `B_radius(center)`.
    pub fn harmonic_at(&self, x: Point, center: Point, radius: f64) -> f64 {
        let (dx, dy) = (x[0] - center[0], x[1] - center[1]);
        let rho = dx.hypot(dy) / radius;
        let phi = dy.atan2(dx);
        let mut s = self.a0;
        let mut rk = 1.0;
        for k in 0..self.degree() {
            rk *= rho;
            let (sk, ck) = ((k + 1) as f64 * phi).sin_cos();
            s += rk * (self.cos[k] * ck + self.sin[k] * sk);
        }
        s
    }

    /// Coefficient vector `[a0, a1, b1, a2, b2, ...]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![self.a0];
        for k in 0..self.degree() {
            v.push(self.cos[k]);
            v.push(self.sin[k]);
        }
        v
    }

    pub fn from_vec(v: &[f64]) -> Self {
        let a0 = v.first().copied().unwrap_or(0.0);
        let pairs = &v[1.min(v.len())..];
        let cos = pairs.iter().step_by(2).copied().collect();
        let sin = pairs.iter().skip(1).step_by(2).copied().collect();
        Self::new(a0, cos, sin)
    }
}

impl fmt::Display for FourierSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "fourier({}", self.a0)?;
        for k in 0..self.degree() {
            write!(f, "; {} {}", self.cos[k], self.sin[k])?;
        }
        write!(f, ")")
    }
}

/// Closed-form fields, written `linear(a,b,c)`, `harmonic(k,re|im)`,
/// `sqdist(x,y)` and `fourier(a0; a1 b1; a2 b2; ...)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Analytic {
    /// `a·x₁ + b·x₂ + c`.
    Linear { a: f64, b: f64, c: f64 },
    /// `Re` or `Im` of `(x₁ + i x₂)^degree`, `degree <= 6`.
    HarmonicPoly { degree: u32, imaginary: bool },
    /// `|x − center|²`.
    SquaredDistance { center: Point },
    /// Harmonic extension of a trigonometric polynomial into a disk domain.
    FourierHarmonic(FourierSeries),
}

pub const MAX_HARMONIC_DEGREE: u32 = 6;

impl Analytic {
    pub fn linear(a: f64, b: f64, c: f64) -> Self {
        Analytic::Linear { a, b, c }
    }

    pub fn harmonic(degree: u32, imaginary: bool) -> Result<Self, SolverError> {
        if degree > MAX_HARMONIC_DEGREE {
            return Err(SolverError::UnknownReference(format!(
                "harmonic polynomial degree {degree} exceeds {MAX_HARMONIC_DEGREE}"
            )));
        }
        Ok(Analytic::HarmonicPoly { degree, imaginary })
    }

    /// Solves every constant-coefficient equation (linear) or the Laplace
    /// equation (harmonic kinds); the squared distance is a strict
    /// subsolution for every constant SPD field.
    pub fn is_subsolution_only(&self) -> bool {
        matches!(self, Analytic::SquaredDistance { .. })
    }

    pub fn check_domain(&self, domain: &Domain) -> Result<(), SolverError> {
        match (self, domain.kind()) {
            (Analytic::FourierHarmonic(_), DomainKind::Disk { .. })
            | (Analytic::Linear { .. }, _) => Ok(()),
            (Analytic::FourierHarmonic(_), _) => Err(SolverError::UnknownReference(
                "fourier-harmonic fields need a disk domain".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: Point, domain: &Domain) -> f64 {
        match self {
            Analytic::Linear { a, b, c } => a * x[0] + b * x[1] + c,
            Analytic::HarmonicPoly { degree, imaginary } => {
                let (mut re, mut im) = (1.0, 0.0);
                for _ in 0..*degree {
                    (re, im) = (re * x[0] - im * x[1], re * x[1] + im * x[0]);
                }
                if *imaginary {
                    im
                } else {
                    re
                }
            }
            Analytic::SquaredDistance { center } => {
                let (dx, dy) = (x[0] - center[0], x[1] - center[1]);
                dx * dx + dy * dy
            }
            Analytic::FourierHarmonic(series) => match domain.kind() {
                DomainKind::Disk { center, radius } => series.harmonic_at(x, *center, *radius),
                _ => f64::NAN,
            },
        }
    }
}

impl fmt::Display for Analytic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Analytic::Linear { a, b, c } => write!(f, "linear({a},{b},{c})"),
            Analytic::HarmonicPoly { degree, imaginary } => {
                write!(
                    f,
                    "harmonic({degree},{})",
                    if *imaginary { "im" } else { "re" }
                )
            }
            Analytic::SquaredDistance { center } => {
                write!(f, "sqdist({},{})", center[0], center[1])
            }
            Analytic::FourierHarmonic(s) => write!(f, "{s}"),
        }
    }
}

fn parse_args(id: &str) -> Option<(&str, &str)> {
    let open = id.find('(')?;
    let inner = id[open + 1..].strip_suffix(')')?;
    Some((id[..open].trim(), inner))
}

fn nums(s: &str, sep: char) -> Option<Vec<f64>> {
    s.split(sep)
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().ok())
        .collect()
}

impl FromStr for FourierSeries {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SolverError::UnknownReference(format!("malformed fourier data '{s}'"));
        let (name, inner) = parse_args(s.trim()).ok_or_else(bad)?;
        if name != "fourier" {
            return Err(bad());
        }
        let mut groups = inner.split(';');
        let a0 = match nums(groups.next().unwrap_or(""), ' ').as_deref() {
            Some([a0]) => *a0,
            _ => return Err(bad()),
        };
        let (mut cos, mut sin) = (Vec::new(), Vec::new());
        for g in groups {
            match nums(g, ' ').as_deref() {
                Some([a, b]) => {
                    cos.push(*a);
                    sin.push(*b);
                }
                _ => return Err(bad()),
            }
        }
        Ok(FourierSeries::new(a0, cos, sin))
    }
}

impl FromStr for Analytic {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let unknown = || SolverError::UnknownReference(s.to_string());
        let (name, inner) = parse_args(s).ok_or_else(unknown)?;
        match name {
            "linear" => match nums(inner, ',').as_deref() {
                Some([a, b, c]) => Ok(Analytic::linear(*a, *b, *c)),
                _ => Err(unknown()),
            },
            "harmonic" => {
                let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
                match parts.as_slice() {
                    [k, part] => {
                        let k: u32 = k.parse().map_err(|_| unknown())?;
                        let imaginary = match *part {
                            "re" => false,
                            "im" => true,
                            _ => return Err(unknown()),
                        };
                        Analytic::harmonic(k, imaginary)
                    }
                    _ => Err(unknown()),
                }
            }
            "sqdist" => match nums(inner, ',').as_deref() {
                Some([x, y]) => Ok(Analytic::SquaredDistance { center: [*x, *y] }),
                _ => Err(unknown()),
            },
            "fourier" => Ok(Analytic::FourierHarmonic(s.parse()?)),
            _ => Err(unknown()),
        }
    }
}

/// Dirichlet data: a closed form evaluated at boundary nodes, or a
/// trigonometric polynomial in the polar angle about the domain centroid.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryData {
    Analytic(Analytic),
    Fourier(FourierSeries),
}

impl BoundaryData {
    pub fn eval(&self, x: Point, domain: &Domain) -> f64 {
        match self {
            BoundaryData::Analytic(a) => a.eval(x, domain),
            BoundaryData::Fourier(s) => {
                let c = domain.centroid();
                s.at_angle((x[1] - c[1]).atan2(x[0] - c[0]))
            }
        }
    }
}

impl fmt::Display for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryData::Analytic(a) => write!(f, "{a}"),
            BoundaryData::Fourier(s) => write!(f, "{s}"),
        }
    }
}

impl FromStr for BoundaryData {
    type Err = SolverError;

    /// `fourier(...)` is read as angular data; everything else as a closed form.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim_start().starts_with("fourier") {
            Ok(BoundaryData::Fourier(s.parse()?))
        } else {
            Ok(BoundaryData::Analytic(s.parse()?))
        }
    }
}
