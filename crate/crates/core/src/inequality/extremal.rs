//! Derivative-free search for boundary data maximizing
//! `osc_Γ v / ([v]^{N/(N+αp)} ‖v − v_Ω‖_p^{αp/(N+αp)})` over trigonometric
//! polynomials, which gives a lower estimate of the optimal constant.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{k_bound, BoundParams, GeometryKind, InequalityError};
use crate::coefficients::CoefficientField;
use crate::geometry::Domain;
use crate::norms::{boundary_oscillation, holder_seminorm, normalized_lp_norm, SeminormOptions};
use crate::solver::{
    mesh_domain, BoundaryData, DirichletSystem, FourierSeries, Provenance, SolutionSample,
};

pub const MAX_DEGREE: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalConfig {
    pub alpha: f64,
    pub p: f64,
    pub degree: usize,
    pub population: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Mesh size of the underlying solves.
    pub h: f64,
    /// Initial mutation step relative to the size of the mean.
    pub initial_step: f64,
    pub seminorm: SeminormOptions,
}

impl Default for ExtremalConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            p: 2.0,
            degree: 8,
            population: 32,
            iterations: 200,
            seed: 0,
            h: 0.04,
            initial_step: 0.3,
            seminorm: SeminormOptions {
                exhaustive_threshold: 0,
                pair_budget: 100_000,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalResult {
    /// Best objective found.
    pub k_est: f64,
    /// Boundary data achieving `k_est`, scaled to unit denominator.
    pub best: FourierSeries,
    pub k_bound: f64,
    /// Best-so-far objective after the initial population and after each
    /// iteration.
    pub trace: Vec<f64>,
    pub evaluations: usize,
    /// Candidates skipped because their norms vanished.
    pub skipped: usize,
}

impl ExtremalResult {
    pub fn sandwich_ok(&self) -> bool {
        self.k_est <= self.k_bound + 1e-9
    }
}

/// Mean-value constants `(c, C)`: 1 for the Laplacian, square roots of the
/// extreme eigenvalues for a constant matrix.
pub fn field_constants(field: &CoefficientField) -> Result<(f64, f64), InequalityError> {
    if field.is_identity() {
        return Ok((1.0, 1.0));
    }
    let a = field
        .constant_matrix()
        .ok_or(InequalityError::VariableField)?;
    let e = a.eigen();
    Ok((e.min.sqrt(), e.max.sqrt()))
}

struct Objective {
    mesh: Arc<crate::solver::Mesh>,
    basis: Vec<Vec<f64>>,
    alpha: f64,
    p: f64,
    sem_exp: f64,
    lp_exp: f64,
    seminorm: SeminormOptions,
}

impl Objective {
    /// `(objective, denominator)`, or `None` for degenerate candidates.
    fn eval(&self, x: &[f64]) -> Result<Option<(f64, f64)>, InequalityError> {
        let n = self.mesh.node_count();
        let mut values = vec![0.0; n];
        for (coef, b) in x.iter().zip(&self.basis) {
            if *coef != 0.0 {
                values.iter_mut().zip(b).for_each(|(v, bi)| *v += coef * bi);
            }
        }
        let sample = SolutionSample::new(
            Arc::clone(&self.mesh),
            values,
            Provenance::Reference("candidate".into()),
        )?;
        let sem = holder_seminorm(&sample, self.alpha, self.seminorm)?.value;
        let lp = normalized_lp_norm(&sample, self.p, true)?;
        let denom = sem.powf(self.sem_exp) * lp.powf(self.lp_exp);
        if !(denom > 0.0 && denom.is_finite()) {
            return Ok(None);
        }
        Ok(Some((boundary_oscillation(&sample)? / denom, denom)))
    }
}

pub fn extremal_search(
    domain: &Domain,
    field: &CoefficientField,
    kind: &GeometryKind,
    config: &ExtremalConfig,
) -> Result<ExtremalResult, InequalityError> {
    if config.degree > MAX_DEGREE {
        return Err(InequalityError::DegreeTooLarge(config.degree));
    }
    if config.degree == 0 || config.population < 2 {
        return Err(InequalityError::BadParameter(
            "need degree >= 1 and population >= 2".into(),
        ));
    }
    let (c, big_c) = field_constants(field)?;
    let params = BoundParams::planar(config.alpha, config.p, c, big_c);
    let upper = k_bound(kind, &params)?;

    let mesh = Arc::new(mesh_domain(domain, config.h)?);
    let system = DirichletSystem::new(Arc::clone(&mesh), field);
    let boundary = &mesh.nodes()[..mesh.boundary_count()];
    let mut basis = Vec::with_capacity(2 * config.degree);
    for k in 1..=config.degree {
        for sine in [false, true] {
            let data = BoundaryData::Fourier(FourierSeries::mode(k, sine));
            let g: Vec<f64> = boundary.iter().map(|&x| data.eval(x, domain)).collect();
            basis.push(system.solve_nodal(&g)?.0);
        }
    }
    let objective = Objective {
        mesh,
        basis,
        alpha: config.alpha,
        p: config.p,
        sem_exp: params.seminorm_exponent(),
        lp_exp: params.lp_exponent(),
        seminorm: config.seminorm,
    };
    let dim = 2 * config.degree;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let gaussian = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..dim).map(|_| StandardNormal.sample(rng)).collect()
    };

    let mut population: Vec<Vec<f64>> = (0..config.population.min(dim))
        .map(|m| {
            let mut e = vec![0.0; dim];
            e[m] = 1.0;
            e
        })
        .collect();
    while population.len() < config.population {
        population.push(gaussian(&mut rng));
    }

    let mu = (config.population / 4).max(1);
    let raw: Vec<f64> = (0..mu)
        .map(|i| ((mu as f64 + 0.5) / (i as f64 + 1.0)).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut trace = Vec::with_capacity(config.iterations + 1);
    let mut evaluations = 0;
    let mut skipped = 0;
    let mut mean = vec![0.0; dim];
    let mut step = 0.0;

    for iteration in 0..=config.iterations {
        if iteration > 0 {
            population = (0..config.population)
                .map(|_| {
                    let z = gaussian(&mut rng);
                    mean.iter().zip(&z).map(|(m, zi)| m + step * zi).collect()
                })
                .collect();
        }
        let scored: Vec<Option<(f64, f64)>> = population
            .par_iter()
            .map(|x| objective.eval(x))
            .collect::<Result<_, _>>()?;
        evaluations += population.len();
        let mut ranked: Vec<(f64, Vec<f64>)> = Vec::with_capacity(population.len());
        for (x, s) in population.iter().zip(scored) {
            match s {
                Some((obj, denom)) => ranked.push((obj, x.iter().map(|v| v / denom).collect())),
                None => skipped += 1,
            }
        }
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
        let improved = match (&best, ranked.first()) {
            (_, None) => false,
            (None, Some(_)) => true,
            (Some((b, _)), Some((g, _))) => g > b,
        };
        if improved {
            best = Some(ranked[0].clone());
        }
        if !ranked.is_empty() {
            let take = mu.min(ranked.len());
            let wsum: f64 = weights[..take].iter().sum();
            mean = vec![0.0; dim];
            for (w, (_, x)) in weights.iter().zip(&ranked[..take]) {
                mean.iter_mut()
                    .zip(x)
                    .for_each(|(m, xi)| *m += w / wsum * xi);
            }
            let size = mean.iter().map(|v| v * v).sum::<f64>().sqrt();
            step = if iteration == 0 {
                config.initial_step * size
            } else {
                let s = if improved { step * 1.2 } else { step * 0.92 };
                s.clamp(1e-4 * size, 2.0 * size)
            };
        }
        trace.push(best.as_ref().map_or(f64::NEG_INFINITY, |b| b.0));
    }

    let (k_est, x) = best.ok_or(InequalityError::NoValidCandidate)?;
    let mut coeffs = vec![0.0];
    coeffs.extend(x);
    Ok(ExtremalResult {
        k_est,
        best: FourierSeries::from_vec(&coeffs),
        k_bound: upper,
        trace,
        evaluations,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::SymMat2;

    fn quick() -> ExtremalConfig {
        ExtremalConfig {
            degree: 3,
            population: 8,
            iterations: 6,
            h: 0.1,
            seed: 4,
            ..ExtremalConfig::default()
        }
    }

    #[test]
    fn small_search_is_sandwiched_monotone_and_reproducible() {
        let d = Domain::unit_disk();
        let id = CoefficientField::identity();
        let a = extremal_search(&d, &id, &GeometryKind::Ball, &quick()).unwrap();
        assert!(a.k_est >= 2.0 * 2f64.sqrt() - 1e-4, "{}", a.k_est);
        assert!(a.sandwich_ok());
        assert_eq!(a.trace.len(), 7);
        assert!(a.trace.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(*a.trace.last().unwrap(), a.k_est);
        let b = extremal_search(&d, &id, &GeometryKind::Ball, &quick()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_requests() {
        let d = Domain::unit_disk();
        let board = CoefficientField::new(
            crate::coefficients::FieldSpec::Checkerboard {
                cell: 0.1,
                even: SymMat2::IDENTITY,
                odd: SymMat2::diag(2.0, 2.0),
            },
            0,
        )
        .unwrap();
        assert!(matches!(
            extremal_search(&d, &board, &GeometryKind::Ball, &quick()),
            Err(InequalityError::VariableField)
        ));
        let deep = ExtremalConfig {
            degree: 13,
            ..quick()
        };
        assert!(matches!(
            extremal_search(
                &d,
                &CoefficientField::identity(),
                &GeometryKind::Ball,
                &deep
            ),
            Err(InequalityError::DegreeTooLarge(13))
        ));
    }

    #[test]
    fn constants_of_fields() {
        assert_eq!(
            field_constants(&CoefficientField::identity()).unwrap(),
            (1.0, 1.0)
        );
        let a = CoefficientField::constant(SymMat2::diag(4.0, 1.0)).unwrap();
        assert_eq!(field_constants(&a).unwrap(), (1.0, 2.0));
    }
}
