//! Explicit constants of the oscillation inequality
//! `osc_Γ v <= K [v]^{N/(N+αp)} ‖v − v_Ω‖_p^{αp/(N+αp)}`, the two-term
//! bound in the probe depth `σ`, its minimizer, and end-to-end checks.

mod extremal;

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use thiserror::Error;

use crate::norms::{norm_report, NormError, NormReport, SeminormOptions};
use crate::solver::{SolutionSample, SolverError};

pub use extremal::{extremal_search, field_constants, ExtremalConfig, ExtremalResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InequalityError {
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("sigma ratio {0} outside (0, 1)")]
    BadSigma(f64),
    #[error("degenerate: v constant")]
    Degenerate,
    #[error("extremal search needs an identity or constant coefficient field")]
    VariableField,
    #[error("fourier degree {0} exceeds 12")]
    DegreeTooLarge(usize),
    #[error("no valid candidate found")]
    NoValidCandidate,
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

fn bad(msg: impl Into<String>) -> InequalityError {
    InequalityError::BadParameter(msg.into())
}

/// Geometric hypothesis under which a bound is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeometryKind {
    Ball,
    /// Uniform interior sphere condition with radius `inner_radius`.
    Smooth {
        diameter: f64,
        inner_radius: f64,
    },
    /// Uniform interior cone condition, half-aperture `theta`, height `height`.
    Cone {
        diameter: f64,
        theta: f64,
        height: f64,
    },
    /// `(b0, radius)`-local John condition.
    John {
        diameter: f64,
        b0: f64,
        radius: f64,
    },
}

impl GeometryKind {
    pub fn validate(&self) -> Result<(), InequalityError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(bad(format!("{name} must be positive, got {v}")))
            }
        };
        match *self {
            GeometryKind::Ball => Ok(()),
            GeometryKind::Smooth {
                diameter,
                inner_radius,
            } => {
                positive("diameter", diameter)?;
                positive("inner radius", inner_radius)
            }
            GeometryKind::Cone {
                diameter,
                theta,
                height,
            } => {
                positive("diameter", diameter)?;
                positive("height", height)?;
                if theta > 0.0 && theta <= FRAC_PI_2 {
                    Ok(())
                } else {
                    Err(bad(format!("theta must lie in (0, pi/2], got {theta}")))
                }
            }
            GeometryKind::John {
                diameter,
                b0,
                radius,
            } => {
                positive("diameter", diameter)?;
                positive("radius", radius)?;
                if b0 > 1.0 && b0.is_finite() {
                    Ok(())
                } else {
                    Err(bad(format!("b0 must exceed 1, got {b0}")))
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GeometryKind::Ball => "ball",
            GeometryKind::Smooth { .. } => "smooth",
            GeometryKind::Cone { .. } => "cone",
            GeometryKind::John { .. } => "john",
        }
    }

    /// Largest admissible value of the depth ratio (`σ/r` for the ball,
    /// `2σ/d_Ω` otherwise).
    pub fn sigma_threshold(&self) -> f64 {
        match *self {
            GeometryKind::Ball => 1.0,
            GeometryKind::Smooth {
                diameter,
                inner_radius,
            } => 2.0 * inner_radius / diameter,
            GeometryKind::Cone {
                diameter,
                theta,
                height,
            } => 2.0 * height / (diameter * (1.0 + theta.sin())),
            GeometryKind::John {
                diameter,
                b0,
                radius,
            } => 2.0 * radius / (b0 * diameter),
        }
    }
}

impl fmt::Display for GeometryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GeometryKind::Ball => write!(f, "ball"),
            GeometryKind::Smooth {
                diameter,
                inner_radius,
            } => write!(f, "smooth(d={diameter} ri={inner_radius})"),
            GeometryKind::Cone {
                diameter,
                theta,
                height,
            } => write!(f, "cone(d={diameter} theta={theta} h={height})"),
            GeometryKind::John {
                diameter,
                b0,
                radius,
            } => write!(f, "john(d={diameter} b0={b0} R={radius})"),
        }
    }
}

/// Dimension, exponents and mean-value constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub n: u32,
    pub alpha: f64,
    pub p: f64,
    pub c: f64,
    pub big_c: f64,
}

impl BoundParams {
    /// Planar parameters.
    pub fn planar(alpha: f64, p: f64, c: f64, big_c: f64) -> Self {
        Self {
            n: 2,
            alpha,
            p,
            c,
            big_c,
        }
    }

    pub fn validate(&self) -> Result<(), InequalityError> {
        if self.n < 1 {
            return Err(bad("dimension must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(bad(format!("alpha must lie in (0,1], got {}", self.alpha)));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(bad(format!("p must lie in [1,inf), got {}", self.p)));
        }
        if !(self.c > 0.0 && self.c <= self.big_c && self.big_c.is_finite()) {
            return Err(bad(format!(
                "need 0 < c <= C, got c={} C={}",
                self.c, self.big_c
            )));
        }
        Ok(())
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }

    /// `N/(N+αp)`, the seminorm exponent.
    pub fn seminorm_exponent(&self) -> f64 {
        self.nf() / (self.nf() + self.alpha * self.p)
    }

    /// `αp/(N+αp)`, the `L^p` exponent.
    pub fn lp_exponent(&self) -> f64 {
        self.alpha * self.p / (self.nf() + self.alpha * self.p)
    }
}

/// `C/c` scaled by the geometry: `1/sin θ` for cones, `b0` for John domains.
fn effective_ratio(kind: &GeometryKind, params: &BoundParams) -> f64 {
    match *kind {
        GeometryKind::Ball | GeometryKind::Smooth { .. } => params.big_c / params.c,
        GeometryKind::Cone { theta, .. } => params.big_c / (params.c * theta.sin()),
        GeometryKind::John { b0, .. } => params.big_c * b0 / params.c,
    }
}

fn leading_factor(kind: &GeometryKind, params: &BoundParams) -> f64 {
    let base = 2.0 * (1.0 + params.alpha * params.p / params.nf());
    let geometric = match *kind {
        GeometryKind::Ball => return base,
        GeometryKind::Smooth {
            diameter,
            inner_radius,
        } => (diameter / inner_radius).powf(params.alpha),
        GeometryKind::Cone {
            diameter,
            theta,
            height,
        } => (diameter / height).powf(params.alpha) * (1.0 + theta.sin()).powf(params.alpha),
        GeometryKind::John {
            diameter,
            b0,
            radius,
        } => (diameter * b0 / radius).powf(params.alpha),
    };
    base.max(geometric)
}

/// The explicit upper bound for `K`.
pub fn k_bound(kind: &GeometryKind, params: &BoundParams) -> Result<f64, InequalityError> {
    kind.validate()?;
    params.validate()?;
    let (nf, ap) = (params.nf(), params.alpha * params.p);
    let ratio = effective_ratio(kind, params);
    Ok(leading_factor(kind, params)
        * (nf / ap).powf(ap / (nf + ap))
        * ratio.powf(params.alpha * nf / (nf + ap)))
}

/// `2[(C'/c)^{N/p} ‖v‖ s^{−N/p} + [v] s^α]` at depth ratio `s`, where
/// `C'/c` is the geometry-scaled constant ratio.
pub fn rhs_of_sigma(
    kind: &GeometryKind,
    params: &BoundParams,
    sigma_ratio: f64,
    seminorm: f64,
    lp_norm: f64,
) -> Result<f64, InequalityError> {
    kind.validate()?;
    params.validate()?;
    if !(sigma_ratio > 0.0 && sigma_ratio < 1.0) {
        return Err(InequalityError::BadSigma(sigma_ratio));
    }
    let np = params.nf() / params.p;
    let ratio = effective_ratio(kind, params);
    let first = if lp_norm == 0.0 {
        0.0
    } else {
        ratio.powf(np) * lp_norm * sigma_ratio.powf(-np)
    };
    Ok(2.0 * (first + seminorm * sigma_ratio.powf(params.alpha)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `σ*` below the geometric threshold: the two-term bound is minimized.
    Interior,
    /// `σ* >=` threshold: the seminorm alone bounds the oscillation.
    Boundary,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Interior => "interior",
            Branch::Boundary => "boundary",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaChoice {
    pub ratio: f64,
    pub branch: Branch,
}

/// `[(N/αp)(C'/c)^{N/p} ‖v‖/[v]]^{p/(N+αp)}` and its branch.
pub fn optimal_sigma(
    kind: &GeometryKind,
    params: &BoundParams,
    seminorm: f64,
    lp_norm: f64,
) -> Result<SigmaChoice, InequalityError> {
    kind.validate()?;
    params.validate()?;
    if !(seminorm > 0.0) {
        return Err(InequalityError::Degenerate);
    }
    let (nf, ap) = (params.nf(), params.alpha * params.p);
    let ratio = ((nf / ap) * effective_ratio(kind, params).powf(nf / params.p) * lp_norm
        / seminorm)
        .powf(params.p / (nf + ap));
    let branch = if ratio < kind.sigma_threshold() {
        Branch::Interior
    } else {
        Branch::Boundary
    };
    Ok(SigmaChoice { ratio, branch })
}

/// `2(1+αp/N)(N/αp)^{αp/(N+αp)}(C'/c)^{αN/(N+αp)} [v]^{N/(N+αp)} ‖v‖^{αp/(N+αp)}`,
/// the minimum of [`rhs_of_sigma`] over all positive ratios.
pub fn closed_form_minimum(
    kind: &GeometryKind,
    params: &BoundParams,
    seminorm: f64,
    lp_norm: f64,
) -> Result<f64, InequalityError> {
    kind.validate()?;
    params.validate()?;
    let (nf, ap) = (params.nf(), params.alpha * params.p);
    Ok(2.0
        * (1.0 + ap / nf)
        * (nf / ap).powf(ap / (nf + ap))
        * effective_ratio(kind, params).powf(params.alpha * nf / (nf + ap))
        * seminorm.powf(params.seminorm_exponent())
        * lp_norm.powf(params.lp_exponent()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub kind: GeometryKind,
    pub params: BoundParams,
    pub norms: NormReport,
    pub lhs: f64,
    pub rhs: f64,
    pub k_bound: f64,
    pub sigma_star: f64,
    pub branch: Branch,
    /// `lhs/rhs`; 0 in the degenerate case.
    pub slack: f64,
    /// `rhs_of_sigma(σ*)` when `σ*` lies in `(0, 1)`.
    pub rhs_at_sigma_star: Option<f64>,
}

pub const INEQUALITY_CSV_HEADER: &str =
    "run_id,kind,alpha,p,c,C,k_bound,lhs,rhs,sigma_star,branch,slack";

impl InequalityReport {
    pub fn holds(&self, tolerance: f64) -> bool {
        self.slack <= 1.0 + tolerance
    }

    pub fn csv_row(&self, run_id: &str) -> Vec<String> {
        vec![
            run_id.to_string(),
            self.kind.to_string(),
            self.params.alpha.to_string(),
            self.params.p.to_string(),
            self.params.c.to_string(),
            self.params.big_c.to_string(),
            self.k_bound.to_string(),
            self.lhs.to_string(),
            self.rhs.to_string(),
            self.sigma_star.to_string(),
            self.branch.to_string(),
            self.slack.to_string(),
        ]
    }
}

pub fn verify_inequality(
    sample: &SolutionSample,
    kind: &GeometryKind,
    params: &BoundParams,
) -> Result<InequalityReport, InequalityError> {
    verify_inequality_with(sample, kind, params, SeminormOptions::default())
}

pub fn verify_inequality_with(
    sample: &SolutionSample,
    kind: &GeometryKind,
    params: &BoundParams,
    options: SeminormOptions,
) -> Result<InequalityReport, InequalityError> {
    let k = k_bound(kind, params)?;
    let norms = norm_report(sample, params.alpha, params.p, options)?;
    if norms.seminorm == 0.0 {
        return Ok(InequalityReport {
            kind: *kind,
            params: *params,
            norms,
            lhs: 0.0,
            rhs: 0.0,
            k_bound: k,
            sigma_star: 0.0,
            branch: Branch::Interior,
            slack: 0.0,
            rhs_at_sigma_star: None,
        });
    }
    let lhs = norms.boundary_osc;
    let rhs = k
        * norms.seminorm.powf(params.seminorm_exponent())
        * norms.lp_centered.powf(params.lp_exponent());
    let sigma = optimal_sigma(kind, params, norms.seminorm, norms.lp_centered)?;
    let rhs_at_sigma_star = if sigma.ratio > 0.0 && sigma.ratio < 1.0 {
        Some(rhs_of_sigma(
            kind,
            params,
            sigma.ratio,
            norms.seminorm,
            norms.lp_centered,
        )?)
    } else {
        None
    };
    Ok(InequalityReport {
        kind: *kind,
        params: *params,
        lhs,
        rhs,
        k_bound: k,
        sigma_star: sigma.ratio,
        branch: sigma.branch,
        slack: lhs / rhs,
        rhs_at_sigma_star,
        norms,
    })
}
