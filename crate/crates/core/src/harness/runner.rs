//! Executes a parsed configuration and writes its CSV and SVG artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use super::compare::{summarize, RefinementRow};
use super::config::{ExperimentConfig, GeometryChoice, Mode};
use super::svg::Plot;
use super::HarnessError;
use crate::coefficients::CoefficientField;
use crate::geometry::{cone_parameters, john_parameters, Domain, DomainKind, Point};
use crate::inequality::{
    extremal_search, field_constants, rhs_of_sigma, verify_inequality, BoundParams, ExtremalConfig,
    GeometryKind, InequalityReport, INEQUALITY_CSV_HEADER,
};
use crate::meanvalue::{check_mean_value_property, MeanValueVerdict, MEANVALUE_CSV_HEADER};
use crate::solver::{mesh_domain, reference_solution, Analytic, BoundaryData, DirichletSystem};

pub const WORKERS_ENV: &str = "OSCBOUND_WORKERS";

pub fn verify_csv_header() -> String {
    format!(
        "{INEQUALITY_CSV_HEADER},h,seminorm,lp_centered,boundary_osc,mean,seminorm_exhaustive,\
         solution_error,max_principle_ok,status,gated,domain,field,data,seed"
    )
}

pub fn meanvalue_csv_header() -> String {
    format!(
        "{MEANVALUE_CSV_HEADER},center_ok,equality_ok,verdict,h,status,gated,domain,field,sample"
    )
}

pub const EXTREMAL_CSV_HEADER: &str = "iteration,best_objective,k_bound,sandwich_ok,kind,alpha,p,\
    degree,population,iterations,seed,h,domain,field,best_data";

/// Worker cap: the environment variable wins over the CLI flag, which wins
/// over the config value.
pub fn resolve_workers(config: Option<usize>, cli: Option<usize>) -> usize {
    let env = std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok());
    env.or(cli)
        .or(config)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub mode: Mode,
    pub artifacts: Vec<PathBuf>,
    /// Gated checks that failed, one line each.
    pub failures: Vec<String>,
    pub rows: usize,
}

impl RunSummary {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// The geometric hypothesis a run is checked under.
pub fn resolve_geometry(
    domain: &Domain,
    choice: GeometryChoice,
) -> Result<GeometryKind, HarnessError> {
    let d = domain.diameter();
    let kind = match (choice, domain.kind()) {
        (GeometryChoice::Auto | GeometryChoice::Ball, DomainKind::Disk { .. }) => {
            GeometryKind::Ball
        }
        (GeometryChoice::Ball, _) => {
            return Err(HarnessError::Setup(
                "the ball bound needs a disk domain".into(),
            ))
        }
        (GeometryChoice::Auto, DomainKind::Ellipse { .. }) | (GeometryChoice::Smooth, _) => {
            GeometryKind::Smooth {
                diameter: d,
                inner_radius: domain.interior_sphere_radius()?,
            }
        }
        (GeometryChoice::Auto, DomainKind::Polygon { .. }) | (GeometryChoice::Cone, _) => {
            let cert = cone_parameters(domain)?;
            GeometryKind::Cone {
                diameter: d,
                theta: cert.theta,
                height: cert.h,
            }
        }
        (GeometryChoice::John, _) => {
            let cert = john_parameters(domain)?;
            GeometryKind::John {
                diameter: d,
                b0: cert.b0,
                radius: cert.r_max,
            }
        }
    };
    kind.validate()?;
    Ok(kind)
}

/// `(c, C)`: exact for identity and constant fields, the `√λ, √Λ` surrogate
/// otherwise.
pub fn bound_constants(field: &CoefficientField) -> (f64, f64) {
    field_constants(field).unwrap_or_else(|_| (field.lambda().sqrt(), field.big_lambda().sqrt()))
}

/// Closed-form solution for the data, when one is known.
pub fn exact_solution(
    data: &BoundaryData,
    domain: &Domain,
    field: &CoefficientField,
) -> Option<Box<dyn Fn(Point) -> f64 + Send + Sync>> {
    let constant = field.constant_matrix().is_some();
    match data {
        BoundaryData::Analytic(a @ Analytic::Linear { .. }) if constant => {
            let (a, d) = (a.clone(), domain.clone());
            Some(Box::new(move |x| a.eval(x, &d)))
        }
        BoundaryData::Analytic(
            a @ (Analytic::HarmonicPoly { .. } | Analytic::FourierHarmonic(_)),
        ) if field.is_identity() => {
            let (a, d) = (a.clone(), domain.clone());
            Some(Box::new(move |x| a.eval(x, &d)))
        }
        BoundaryData::Fourier(s) if field.is_identity() => match domain.kind() {
            DomainKind::Disk { center, radius } => {
                let (s, c, r) = (s.clone(), *center, *radius);
                Some(Box::new(move |x| s.harmonic_at(x, c, r)))
            }
            _ => None,
        },
        _ => None,
    }
}

pub fn run(config: &ExperimentConfig, workers: usize) -> Result<RunSummary, HarnessError> {
    fs::create_dir_all(&config.out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Setup(e.to_string()))?;
    pool.install(|| match config.mode {
        Mode::Verify | Mode::Sweep => run_verify(config),
        Mode::MeanValue => run_meanvalue(config),
        Mode::Extremal => run_extremal(config),
    })
}

struct VerifyRow {
    record: Vec<String>,
    report: Option<InequalityReport>,
    error: Option<f64>,
    failure: Option<String>,
}

fn echo(config: &ExperimentConfig, data: &str) -> [String; 4] {
    [
        config.domain.summary(),
        config.field.summary(),
        data.to_string(),
        config.seed.to_string(),
    ]
}

fn run_verify(config: &ExperimentConfig) -> Result<RunSummary, HarnessError> {
    let kind = resolve_geometry(&config.domain, config.geometry)?;
    let (c, big_c) = bound_constants(&config.field);
    let gated = config.is_gated();
    let runs = config.planned_runs();

    let systems: Vec<Result<DirichletSystem, String>> = config
        .h_list
        .par_iter()
        .map(|&h| {
            mesh_domain(&config.domain, h)
                .map(|m| DirichletSystem::new(Arc::new(m), &config.field))
                .map_err(|e| e.to_string())
        })
        .collect();

    let rows: Vec<VerifyRow> = runs
        .par_iter()
        .map(|run| {
            let h_index = config
                .h_list
                .iter()
                .position(|&h| h == run.h)
                .expect("planned h");
            let params = BoundParams::planar(config.alpha, run.p, c, big_c);
            let run_id = format!("run{}", run.index);
            let data_text = run.data.to_string();
            let tail_error = |msg: String| {
                let mut record = vec![
                    run_id.clone(),
                    kind.to_string(),
                    config.alpha.to_string(),
                    run.p.to_string(),
                    c.to_string(),
                    big_c.to_string(),
                ];
                record.extend(std::iter::repeat_n(String::new(), 6));
                record.push(run.h.to_string());
                record.extend(std::iter::repeat_n(String::new(), 7));
                record.push("error".into());
                record.push(gated.to_string());
                record.extend(echo(config, &data_text));
                VerifyRow {
                    record,
                    report: None,
                    error: None,
                    failure: Some(format!("{run_id} (p={}, h={}): {msg}", run.p, run.h)),
                }
            };
            let system = match &systems[h_index] {
                Ok(s) => s,
                Err(e) => return tail_error(e.clone()),
            };
            let sample = match system.solve(&run.data) {
                Ok(s) => s.with_alpha(config.alpha),
                Err(e) => return tail_error(e.to_string()),
            };
            let report = match verify_inequality(&sample, &kind, &params) {
                Ok(r) => r,
                Err(e) => return tail_error(e.to_string()),
            };
            let error = exact_solution(&run.data, &config.domain, &config.field)
                .map(|u| sample.l2_error(u));
            let max_ok = sample.stats().is_none_or(|s| s.max_principle_holds());
            let holds = report.holds(config.slack_tolerance);
            let status = if holds && max_ok { "ok" } else { "fail" };
            let mut record = report.csv_row(&run_id);
            record.extend([
                run.h.to_string(),
                report.norms.seminorm.to_string(),
                report.norms.lp_centered.to_string(),
                report.norms.boundary_osc.to_string(),
                report.norms.mean.to_string(),
                report.norms.seminorm_exhaustive.to_string(),
                error.map_or_else(String::new, |e| e.to_string()),
                max_ok.to_string(),
                status.to_string(),
                gated.to_string(),
            ]);
            record.extend(echo(config, &data_text));
            let failure = (status != "ok").then(|| {
                format!(
                    "{run_id} (p={}, h={}): slack {} (max principle ok: {max_ok})",
                    run.p, run.h, report.slack
                )
            });
            VerifyRow {
                record,
                report: Some(report),
                error,
                failure,
            }
        })
        .collect();

    let csv_path = config.out_dir.join("inequality.csv");
    let header = verify_csv_header();
    write_csv(&csv_path, &header, rows.iter().map(|r| &r.record))?;
    let mut artifacts = vec![csv_path];

    // slack against h, one curve per (data, p)
    let mut slack_plot = Plot::new("slack vs mesh size", "h", "slack").log_log();
    let mut refinement_rows = Vec::new();
    for (data_index, p) in runs
        .iter()
        .map(|r| (r.data_index, r.p.to_bits()))
        .collect::<std::collections::BTreeSet<_>>()
    {
        let points: Vec<(f64, f64)> = runs
            .iter()
            .zip(&rows)
            .filter(|(r, _)| r.data_index == data_index && r.p.to_bits() == p)
            .filter_map(|(r, row)| row.report.as_ref().map(|rep| (r.h, rep.slack)))
            .filter(|&(_, s)| s > 0.0)
            .collect();
        if slack_plot.series.len() < 8 {
            slack_plot = slack_plot.with_series(
                &format!("data {data_index}, p={}", f64::from_bits(p)),
                points,
            );
        }
    }
    for (run, row) in runs.iter().zip(&rows) {
        if let Some(rep) = &row.report {
            refinement_rows.push(RefinementRow {
                key: format!("data {} | p={}", run.data_index, run.p),
                h: run.h,
                error: row.error,
                slack: rep.slack,
            });
        }
    }
    artifacts.push(write_svg(
        &config.out_dir.join("slack_vs_h.svg"),
        &slack_plot,
    )?);

    if let Some((run, rep)) = runs.iter().zip(&rows).find_map(|(r, row)| {
        row.report
            .as_ref()
            .filter(|rep| rep.norms.seminorm > 0.0)
            .map(|rep| (r, rep))
    }) {
        let params = rep.params;
        let curve: Vec<(f64, f64)> = (1..200)
            .map(|k| k as f64 / 200.0)
            .filter_map(|s| {
                rhs_of_sigma(&kind, &params, s, rep.norms.seminorm, rep.norms.lp_centered)
                    .ok()
                    .map(|v| (s, v))
            })
            .collect();
        let mut plot = Plot::new(
            &format!("rhs(sigma), run{} (p={}, h={})", run.index, run.p, run.h),
            "sigma",
            "rhs",
        )
        .with_series("rhs_of_sigma", curve);
        if let Some(v) = rep.rhs_at_sigma_star {
            plot = plot.with_marker(
                rep.sigma_star,
                v,
                &format!("sigma* = {:.4}", rep.sigma_star),
            );
        }
        artifacts.push(write_svg(&config.out_dir.join("rhs_sigma.svg"), &plot)?);
    }

    if config.mode == Mode::Sweep && config.h_list.len() > 1 {
        let summary = summarize(&refinement_rows);
        let path = config.out_dir.join("refinement.csv");
        summary.write_csv(&path)?;
        artifacts.push(path);
    }

    let failures = if gated {
        rows.iter().filter_map(|r| r.failure.clone()).collect()
    } else {
        Vec::new()
    };
    Ok(RunSummary {
        mode: config.mode,
        artifacts,
        failures,
        rows: rows.len(),
    })
}

fn run_meanvalue(config: &ExperimentConfig) -> Result<RunSummary, HarnessError> {
    let h = *config.h_list.last().expect("non-empty h list");
    let mesh = Arc::new(mesh_domain(&config.domain, h)?);
    let (sample, sample_text) = match &config.meanvalue.reference {
        Some(a) => (reference_solution(a, &mesh)?, a.to_string()),
        None => {
            let data = config
                .data
                .as_ref()
                .and_then(|d| d.items(config.seed).into_iter().next())
                .ok_or_else(|| HarnessError::Setup("meanvalue needs data or a reference".into()))?;
            let system = DirichletSystem::new(Arc::clone(&mesh), &config.field);
            (system.solve(&data)?, data.to_string())
        }
    };
    let gated = config.is_gated();
    let is_solution = sample.provenance().is_solution();

    let reports: Vec<_> = config
        .meanvalue
        .centers
        .par_iter()
        .map(|&x0| check_mean_value_property(&sample, &config.field, x0, &config.meanvalue.radii))
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut plot = Plot::new("set averages vs radius", "r", "average");
    for (x0, report) in config.meanvalue.centers.iter().zip(&reports) {
        let tail = |status: &str| {
            vec![
                h.to_string(),
                status.to_string(),
                gated.to_string(),
                config.domain.summary(),
                config.field.summary(),
                sample_text.clone(),
            ]
        };
        match report {
            Ok(rep) => {
                let ok = rep.verdict == MeanValueVerdict::Consistent
                    && rep.inclusion_ok
                    && (!is_solution || rep.equality_ok);
                let status = if ok { "ok" } else { "fail" };
                for mut row in rep.csv_rows() {
                    row.extend([
                        rep.center_ok.to_string(),
                        rep.equality_ok.to_string(),
                        rep.verdict.to_string(),
                    ]);
                    row.extend(tail(status));
                    records.push(row);
                }
                if !ok {
                    failures.push(format!("center ({}, {}): {}", x0[0], x0[1], rep.verdict));
                }
                plot = plot
                    .with_series(
                        &format!("x0 = ({}, {})", x0[0], x0[1]),
                        rep.rows.iter().map(|r| (r.r, r.average)).collect(),
                    )
                    .with_marker(0.0, rep.v_at_x0, "v(x0)");
            }
            Err(e) => {
                let mut row = vec![x0[0].to_string(), x0[1].to_string()];
                row.extend(std::iter::repeat_n(String::new(), 9));
                row.extend(tail("error"));
                records.push(row);
                failures.push(format!("center ({}, {}): {e}", x0[0], x0[1]));
            }
        }
    }
    let csv_path = config.out_dir.join("meanvalue.csv");
    write_csv(&csv_path, &meanvalue_csv_header(), records.iter())?;
    let svg = write_svg(&config.out_dir.join("averages_vs_r.svg"), &plot)?;
    Ok(RunSummary {
        mode: config.mode,
        artifacts: vec![csv_path, svg],
        failures: if gated { failures } else { Vec::new() },
        rows: records.len(),
    })
}

fn run_extremal(config: &ExperimentConfig) -> Result<RunSummary, HarnessError> {
    let kind = resolve_geometry(&config.domain, config.geometry)?;
    let ex = &config.extremal;
    let p = config.p_list[0];
    let search = ExtremalConfig {
        alpha: config.alpha,
        p,
        degree: ex.degree,
        population: ex.population,
        iterations: ex.iterations,
        seed: config.seed,
        h: ex.h,
        ..ExtremalConfig::default()
    };
    let result = extremal_search(&config.domain, &config.field, &kind, &search)?;
    let best = result.best.to_string();
    let sandwich = result.sandwich_ok();
    let records: Vec<Vec<String>> = result
        .trace
        .iter()
        .enumerate()
        .map(|(i, v)| {
            vec![
                i.to_string(),
                v.to_string(),
                result.k_bound.to_string(),
                sandwich.to_string(),
                kind.to_string(),
                config.alpha.to_string(),
                p.to_string(),
                ex.degree.to_string(),
                ex.population.to_string(),
                ex.iterations.to_string(),
                config.seed.to_string(),
                ex.h.to_string(),
                config.domain.summary(),
                config.field.summary(),
                best.clone(),
            ]
        })
        .collect();
    let csv_path = config.out_dir.join("extremal.csv");
    write_csv(&csv_path, EXTREMAL_CSV_HEADER, records.iter())?;
    let plot = Plot::new("best objective vs iteration", "iteration", "best objective")
        .with_series(
            "best so far",
            result
                .trace
                .iter()
                .enumerate()
                .map(|(i, v)| (i as f64, *v))
                .collect(),
        )
        .with_series(
            "k_bound",
            vec![
                (0.0, result.k_bound),
                (ex.iterations as f64, result.k_bound),
            ],
        );
    let svg = write_svg(&config.out_dir.join("best_objective.svg"), &plot)?;

    let mut failures = Vec::new();
    if !sandwich {
        failures.push(format!(
            "K_est {} exceeds k_bound {}",
            result.k_est, result.k_bound
        ));
    }
    if result.trace.windows(2).any(|w| w[1] < w[0]) {
        failures.push("best-so-far trace is not monotone".into());
    }
    Ok(RunSummary {
        mode: config.mode,
        artifacts: vec![csv_path, svg],
        failures: if config.is_gated() {
            failures
        } else {
            Vec::new()
        },
        rows: records.len(),
    })
}

fn write_csv<'a>(
    path: &Path,
    header: &str,
    rows: impl Iterator<Item = &'a Vec<String>>,
) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header.split(','))?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_svg(path: &Path, plot: &Plot) -> Result<PathBuf, HarnessError> {
    fs::write(path, plot.render())?;
    Ok(path.to_path_buf())
}
