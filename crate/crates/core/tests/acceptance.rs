//! Acceptance suite. Runs every criterion in sequence so the wall-clock
//! budgets are measured without interference, prints one line per
//! criterion, and fails if any criterion fails.

use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oscbound::coefficients::{CoefficientField, FieldSpec, SymMat2};
use oscbound::geometry::{cone_parameters, john_parameters, Domain, SamplingConfig};
use oscbound::harness::least_squares_slope;
use oscbound::inequality::{
    closed_form_minimum, extremal_search, k_bound, optimal_sigma, rhs_of_sigma, verify_inequality,
    BoundParams, ExtremalConfig, GeometryKind,
};
use oscbound::meanvalue::{build_family, check_mean_value_property, set_average};
use oscbound::norms::{boundary_oscillation, holder_seminorm, normalized_lp_norm, SeminormOptions};
use oscbound::solver::{
    mesh_domain, reference_solution, Analytic, BoundaryData, DirichletSystem, FourierSeries,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn within(elapsed: Duration, budget_s: f64) -> bool {
    elapsed.as_secs_f64() < budget_s
}

fn disk_system(h: f64, field: &CoefficientField) -> DirichletSystem {
    let mesh = Arc::new(mesh_domain(&Domain::unit_disk(), h).unwrap());
    DirichletSystem::new(mesh, field)
}

fn canonical_case() -> Outcome {
    let t = Instant::now();
    let system = disk_system(0.01, &CoefficientField::identity());
    let sample = system
        .solve(&BoundaryData::Analytic(Analytic::linear(1.0, 0.0, 0.0)))
        .unwrap();
    let params = BoundParams::planar(1.0, 2.0, 1.0, 1.0);
    let r = verify_inequality(&sample, &GeometryKind::Ball, &params).unwrap();
    let checks = [
        ("lhs", r.lhs, 2.0),
        ("seminorm", r.norms.seminorm, 1.0),
        ("lp", r.norms.lp_centered, 0.5),
        ("k_bound", r.k_bound, 4.0),
        ("rhs", r.rhs, 2.828427),
        ("sigma*", r.sigma_star, std::f64::consts::FRAC_1_SQRT_2),
    ];
    let worst = checks.iter().map(|c| rel(c.1, c.2)).fold(0.0, f64::max);
    let elapsed = t.elapsed();
    Outcome {
        pass: worst <= 1e-3 && within(elapsed, 30.0),
        detail: format!(
            "lhs={:.6} sem={:.6} lp={:.6} k={} rhs={:.6} sigma*={:.6}, worst rel err {worst:.2e}, {:.1}s",
            r.lhs,
            r.norms.seminorm,
            r.norms.lp_centered,
            r.k_bound,
            r.rhs,
            r.sigma_star,
            elapsed.as_secs_f64()
        ),
    }
}

fn regression_corpus() -> Outcome {
    let t = Instant::now();
    let hs = [0.04, 0.02, 0.01];
    let id = CoefficientField::identity();
    let systems: Vec<_> = hs.iter().map(|&h| disk_system(h, &id)).collect();
    let logs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let (mut worst, mut runs, mut trend_ok, mut strict_ok) = (0.0f64, 0, 0, 0);
    for seed in 0..50u64 {
        let data = BoundaryData::Fourier(FourierSeries::random(1 + (seed as usize % 8), seed));
        let samples: Vec<_> = systems.iter().map(|s| s.solve(&data).unwrap()).collect();
        for p in [1.0, 2.0, 4.0] {
            let params = BoundParams::planar(1.0, p, 1.0, 1.0);
            let slacks: Vec<f64> = samples
                .iter()
                .map(|s| {
                    verify_inequality(s, &GeometryKind::Ball, &params)
                        .unwrap()
                        .slack
                })
                .collect();
            worst = worst.max(slacks[2]);
            runs += 1;
            // slack against ln h: a non-negative slope means no growth as h shrinks
            if least_squares_slope(&logs, &slacks).is_some_and(|s| s >= 0.0) {
                trend_ok += 1;
            }
            if slacks.windows(2).all(|w| w[1] <= w[0]) {
                strict_ok += 1;
            }
        }
    }
    let elapsed = t.elapsed();
    let fraction = trend_ok as f64 / runs as f64;
    Outcome {
        pass: worst <= 1.02 && fraction >= 0.9 && within(elapsed, 300.0),
        detail: format!(
            "worst slack {worst:.4} at h=0.01; non-increasing trend {trend_ok}/{runs} ({:.1}%), \
             step-by-step monotone {strict_ok}/{runs}; {:.1}s",
            100.0 * fraction,
            elapsed.as_secs_f64()
        ),
    }
}

fn constant_coefficient_corpus() -> Outcome {
    let t = Instant::now();
    let fields = [SymMat2::diag(4.0, 1.0), SymMat2::new(2.0, 1.0, 2.0)];
    let (mut worst, mut runs) = (0.0f64, 0);
    for (k, a) in fields.iter().enumerate() {
        let field = CoefficientField::constant(*a).unwrap();
        let e = a.eigen();
        let (c, big_c) = (e.min.sqrt(), e.max.sqrt());
        let system = disk_system(0.01, &field);
        for seed in 0..20u64 {
            let degree = 1 + (seed as usize % 8);
            let data =
                BoundaryData::Fourier(FourierSeries::random(degree, 1000 * (k as u64 + 1) + seed));
            let sample = system.solve(&data).unwrap();
            for p in [1.0, 2.0, 4.0] {
                let params = BoundParams::planar(1.0, p, c, big_c);
                let r = verify_inequality(&sample, &GeometryKind::Ball, &params).unwrap();
                worst = worst.max(r.slack);
                runs += 1;
            }
        }
    }
    let elapsed = t.elapsed();
    Outcome {
        pass: worst <= 1.02 && within(elapsed, 300.0),
        detail: format!(
            "{runs} runs, worst slack {worst:.4} at h=0.01; {:.1}s",
            elapsed.as_secs_f64()
        ),
    }
}

fn mean_value_property() -> Outcome {
    let t = Instant::now();
    let id = CoefficientField::identity();
    let system = disk_system(0.01, &id);
    let centers = [
        [0.0, 0.0],
        [0.3, 0.0],
        [0.0, -0.3],
        [-0.2, 0.2],
        [0.1, 0.35],
    ];
    let radii = [0.1, 0.2, 0.3];

    let mut harmonic_err = 0.0f64;
    for degree in 1..=4 {
        for imaginary in [false, true] {
            let data = BoundaryData::Analytic(Analytic::harmonic(degree, imaginary).unwrap());
            let sample = system.solve(&data).unwrap();
            for &x0 in &centers {
                let report = check_mean_value_property(&sample, &id, x0, &radii).unwrap();
                for row in &report.rows {
                    harmonic_err = harmonic_err.max((row.average - report.v_at_x0).abs());
                }
            }
        }
    }

    let mesh = Arc::clone(system.mesh());
    let (mut quad_err, mut strictly_monotone) = (0.0f64, true);
    for &x0 in &centers {
        let sample = reference_solution(&Analytic::SquaredDistance { center: x0 }, &mesh).unwrap();
        let report = check_mean_value_property(&sample, &id, x0, &radii).unwrap();
        for row in &report.rows {
            quad_err = quad_err.max((row.average - 0.5 * row.r * row.r).abs());
        }
        strictly_monotone &= report.rows.windows(2).all(|w| w[1].average > w[0].average);
    }

    let big = Domain::disk([0.0, 0.0], 2.0).unwrap();
    let aniso = CoefficientField::constant(SymMat2::diag(4.0, 1.0)).unwrap();
    let big_mesh = Arc::new(mesh_domain(&big, 0.02).unwrap());
    let odd = reference_solution(&Analytic::linear(1.0, 0.0, 0.0), &big_mesh).unwrap();
    let family = build_family(&aniso, [0.0, 0.0], &big).unwrap();
    let odd_avg = [0.3, 0.6, 0.9]
        .iter()
        .map(|&r| set_average(&odd, &family, r).unwrap().abs())
        .fold(0.0, f64::max);

    let elapsed = t.elapsed();
    Outcome {
        pass: harmonic_err <= 1e-3
            && quad_err <= 1e-4
            && strictly_monotone
            && odd_avg <= 1e-10
            && within(elapsed, 60.0),
        detail: format!(
            "harmonic |avg-v(x0)| {harmonic_err:.2e}; |x-x0|^2 vs r^2/2 {quad_err:.2e}, strictly monotone {strictly_monotone}; \
             ellipsoid odd average {odd_avg:.2e}; {:.1}s",
            elapsed.as_secs_f64()
        ),
    }
}

fn sigma_optimality() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let log_uniform =
        |rng: &mut ChaCha8Rng, lo: f64, hi: f64| (rng.random_range(lo.ln()..hi.ln())).exp();
    let (mut tuples, mut drawn, mut violations) = (0, 0, 0);
    let mut worst_identity = 0.0f64;
    while tuples < 100 {
        drawn += 1;
        let sem = log_uniform(&mut rng, 1e-2, 1e2);
        let lp = log_uniform(&mut rng, 1e-2, 1e2);
        let alpha = rng.random_range(0.05..=1.0);
        let p = rng.random_range(1.0..8.0);
        let ratio = rng.random_range(1.0..10.0);
        let params = BoundParams::planar(alpha, p, 1.0, ratio);
        let kind = GeometryKind::Ball;
        let star = optimal_sigma(&kind, &params, sem, lp).unwrap();
        if !(star.ratio > 0.0 && star.ratio < 1.0) {
            continue;
        }
        tuples += 1;
        let at_star = rhs_of_sigma(&kind, &params, star.ratio, sem, lp).unwrap();
        for _ in 0..1000 {
            let s = rng.random_range(1e-6..1.0 - 1e-9);
            if at_star > rhs_of_sigma(&kind, &params, s, sem, lp).unwrap() * (1.0 + 1e-12) {
                violations += 1;
            }
        }
        let closed = closed_form_minimum(&kind, &params, sem, lp).unwrap();
        worst_identity = worst_identity.max(rel(closed, at_star));
    }
    let elapsed = t.elapsed();
    Outcome {
        pass: violations == 0 && worst_identity <= 1e-9 && within(elapsed, 10.0),
        detail: format!(
            "{tuples} tuples with sigma* in (0,1) ({drawn} drawn), {violations} sampled sigma beat sigma*; \
             closed-form identity rel err {worst_identity:.2e}; {:.2}s",
            elapsed.as_secs_f64()
        ),
    }
}

fn bound_identities() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mismatches = 0;
    for _ in 0..100 {
        let d = rng.random_range(0.1..10.0);
        let params = BoundParams {
            n: rng.random_range(1..=6),
            alpha: rng.random_range(0.05..=1.0),
            p: rng.random_range(1.0..8.0),
            c: 1.0,
            big_c: rng.random_range(1.0..5.0),
        };
        let smooth = GeometryKind::Smooth {
            diameter: d,
            inner_radius: d / 2.0,
        };
        if k_bound(&smooth, &params).unwrap() != k_bound(&GeometryKind::Ball, &params).unwrap() {
            mismatches += 1;
        }
    }
    let hand = k_bound(
        &GeometryKind::Ball,
        &BoundParams::planar(1.0, 1.0, 1.0, 1.0),
    )
    .unwrap();
    let expected = 3.0 * 2f64.cbrt();
    let elapsed = t.elapsed();
    Outcome {
        pass: mismatches == 0 && (hand - expected).abs() <= 1e-12 && within(elapsed, 1.0),
        detail: format!(
            "smooth(d/r_i=2) vs ball: {mismatches}/100 mismatches; k_bound(ball,2,1,1)={hand:.15} vs 3*2^(1/3)={expected:.15}; {:.3}s",
            elapsed.as_secs_f64()
        ),
    }
}

fn extremal_sandwich() -> Outcome {
    let t = Instant::now();
    let config = ExtremalConfig {
        degree: 8,
        population: 32,
        iterations: 200,
        ..ExtremalConfig::default()
    };
    let r = extremal_search(
        &Domain::unit_disk(),
        &CoefficientField::identity(),
        &GeometryKind::Ball,
        &config,
    )
    .unwrap();
    let monotone = r.trace.windows(2).all(|w| w[1] >= w[0]);
    let elapsed = t.elapsed();
    Outcome {
        pass: r.k_est >= 2.82843 - 1e-4
            && r.k_est <= 4.0 + 1e-9
            && monotone
            && within(elapsed, 600.0),
        detail: format!(
            "K_est={:.6} in [2.82843, 4]? bound {}, monotone trace {monotone}, {} evaluations; {:.1}s",
            r.k_est,
            r.k_bound,
            r.evaluations,
            elapsed.as_secs_f64()
        ),
    }
}

fn solver_convergence() -> Outcome {
    let t = Instant::now();
    let id = CoefficientField::identity();
    let cubic = Analytic::harmonic(3, false).unwrap();
    let disk = Domain::unit_disk();
    let hs = [0.08, 0.04, 0.02];
    let errors: Vec<f64> = hs
        .iter()
        .map(|&h| {
            let s = disk_system(h, &id)
                .solve(&BoundaryData::Analytic(cubic.clone()))
                .unwrap();
            s.l2_error(|x| cubic.eval(x, &disk))
        })
        .collect();
    let min_order = errors
        .windows(2)
        .zip(hs.windows(2))
        .map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .fold(f64::INFINITY, f64::min);

    let polygons = [
        Domain::unit_square(),
        Domain::polygon(vec![
            [0.0, 0.0],
            [2.0, 0.0],
            [2.0, 1.0],
            [1.0, 1.0],
            [1.0, 2.0],
            [0.0, 2.0],
        ])
        .unwrap(),
        Domain::polygon(vec![[0.0, 0.0], [1.0, 0.0], [0.3, 0.8]]).unwrap(),
    ];
    let fields = [
        id.clone(),
        CoefficientField::constant(SymMat2::new(2.0, 1.0, 2.0)).unwrap(),
    ];
    let linear = Analytic::linear(0.7, -1.3, 0.4);
    let mut linear_err = 0.0f64;
    for d in &polygons {
        let mesh = Arc::new(mesh_domain(d, 0.05).unwrap());
        for f in &fields {
            let s = DirichletSystem::new(Arc::clone(&mesh), f)
                .solve(&BoundaryData::Analytic(linear.clone()))
                .unwrap();
            for (x, v) in mesh.nodes().iter().zip(s.values()) {
                linear_err = linear_err.max((v - linear.eval(*x, d)).abs());
            }
        }
    }

    let board = CoefficientField::new(
        FieldSpec::Checkerboard {
            cell: 0.1,
            even: SymMat2::IDENTITY,
            odd: SymMat2::new(50.0, 10.0, 5.0),
        },
        0,
    )
    .unwrap();
    let board_system = disk_system(0.02, &board);
    let mut worst_excess = 0.0f64;
    let mut max_ok = true;
    for seed in 0..10 {
        let s = board_system
            .solve(&BoundaryData::Fourier(FourierSeries::random(6, 500 + seed)))
            .unwrap();
        let stats = s.stats().unwrap();
        let osc = stats.boundary_max - stats.boundary_min;
        worst_excess = worst_excess.max(stats.max_principle_excess / osc);
        max_ok &= stats.max_principle_holds();
    }
    let elapsed = t.elapsed();
    Outcome {
        pass: min_order >= 1.5 && linear_err <= 1e-9 && max_ok && within(elapsed, 120.0),
        detail: format!(
            "L2 errors {:.3e} {:.3e} {:.3e}, min order {min_order:.3}; linear reproduction {linear_err:.2e}; \
             checkerboard max-principle excess/osc {worst_excess:.2e}; {:.1}s",
            errors[0],
            errors[1],
            errors[2],
            elapsed.as_secs_f64()
        ),
    }
}

fn invariance_suite() -> Outcome {
    let t = Instant::now();
    let system = disk_system(0.05, &CoefficientField::identity());
    let params = BoundParams::planar(0.7, 3.0, 1.0, 1.0);
    let mut worst = 0.0f64;
    let mut branches_agree = true;
    for seed in 0..5 {
        let base = system
            .solve(&BoundaryData::Fourier(FourierSeries::random(5, 900 + seed)))
            .unwrap();
        let variants = [base.dilated(10.0).unwrap(), base.transformed(1.0, 3.75)];
        let quantities = |s: &oscbound::solver::SolutionSample| {
            let r = verify_inequality(s, &GeometryKind::Ball, &params).unwrap();
            (
                [
                    r.norms.seminorm,
                    r.norms.lp_centered,
                    r.norms.boundary_osc,
                    r.slack,
                ],
                r.branch,
            )
        };
        let (q0, b0) = quantities(&base);
        for v in &variants {
            let (q, b) = quantities(v);
            branches_agree &= b == b0;
            for (x, y) in q.iter().zip(&q0) {
                worst = worst.max(rel(*x, *y));
            }
        }
    }
    // direct norm calls on the sampled (large mesh) path as well
    let big = disk_system(0.015, &CoefficientField::identity());
    let s = big
        .solve(&BoundaryData::Fourier(FourierSeries::random(4, 42)))
        .unwrap();
    let d = s.dilated(10.0).unwrap();
    let opts = SeminormOptions::default();
    let pairs = [
        (
            holder_seminorm(&s, 1.0, opts).unwrap().value,
            holder_seminorm(&d, 1.0, opts).unwrap().value,
        ),
        (
            normalized_lp_norm(&s, 2.0, true).unwrap(),
            normalized_lp_norm(&d, 2.0, true).unwrap(),
        ),
        (
            boundary_oscillation(&s).unwrap(),
            boundary_oscillation(&d).unwrap(),
        ),
    ];
    for (a, b) in pairs {
        worst = worst.max(rel(b, a));
    }
    let elapsed = t.elapsed();
    Outcome {
        pass: worst <= 1e-12 && branches_agree && within(elapsed, 10.0),
        detail: format!(
            "worst relative change {worst:.2e} under dilation by 10 and shift; branches agree {branches_agree}; {:.1}s",
            elapsed.as_secs_f64()
        ),
    }
}

fn geometry_certificates() -> Outcome {
    let t = Instant::now();
    let dense = SamplingConfig::default().densified(2);
    let square = Domain::unit_square();
    let cone = cone_parameters(&square).unwrap();
    let cone_ok = cone.validate(&square, dense).is_ok();
    let disk = Domain::unit_disk();
    let john = john_parameters(&disk).unwrap();
    let john_ok = john.validate(&disk, dense).is_ok();
    let ellipse = Domain::ellipse([0.0, 0.0], 2.0, 1.0).unwrap();
    let ri = ellipse.interior_sphere_radius().unwrap();
    let ri_ok = (ri - 0.5).abs() <= 1e-6 && ellipse.interior_ball_fits(ri, 2000);
    let elapsed = t.elapsed();
    Outcome {
        pass: cone_ok && john_ok && ri_ok && within(elapsed, 30.0),
        detail: format!(
            "square cone (theta={:.4}, h={:.4}) revalidates {cone_ok}; disk John (b0={}, R={}) revalidates {john_ok}; \
             ellipse r_i={ri:.8}; {:.2}s",
            cone.theta,
            cone.h,
            john.b0,
            john.r_max,
            elapsed.as_secs_f64()
        ),
    }
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("canonical closed-form case", canonical_case),
        ("inequality regression corpus", regression_corpus),
        ("constant-coefficient corpus", constant_coefficient_corpus),
        ("mean value property", mean_value_property),
        ("sigma* optimality", sigma_optimality),
        ("bound-formula identities", bound_identities),
        ("extremal sandwich", extremal_sandwich),
        ("solver convergence", solver_convergence),
        ("invariance suite", invariance_suite),
        ("geometry certificates", geometry_certificates),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = check();
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        // written past the test harness capture so the lines always show
        let mut out = std::io::stdout().lock();
        let _ = writeln!(
            out,
            "criterion {:>2} {verdict}: {name}: {}",
            i + 1,
            outcome.detail
        );
        let _ = out.flush();
        if !outcome.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
