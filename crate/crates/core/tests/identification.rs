mod common;

use opinionfit::bundled;
use opinionfit::diagnose::evaluate;
use opinionfit::estimate::{fit, fit_fj_with_fixed_susceptibility, gradient_check, objective, SolverConfig, StepRule};
use opinionfit::io::{read_fit, write_fit};
use opinionfit::models::{simulate, SimState};
use opinionfit::{Error, Family, Matrix, ModelSpec, ParamParts, ParamSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn spec(f: Family, lag: usize) -> ModelSpec {
    ModelSpec::new(f, lag).unwrap()
}

fn quick(n_starts: usize) -> SolverConfig {
    SolverConfig {
        n_starts,
        ..SolverConfig::default()
    }
}

#[test]
fn fdg_generator_is_recovered() {
    for seed in 0..3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = common::stochastic(&mut rng, 4, 0.0);
        let params = ParamSet::new(
            Family::Fdg,
            ParamParts {
                w: Some(w.clone()),
                ..Default::default()
            },
        )
        .unwrap();
        let x0 = common::unit_vec(&mut rng, 4, 0.0, 1.0);
        let panel = common::simulate_panel(spec(Family::Fdg, 0), &params, x0.clone(), x0, 40);
        let r = fit(spec(Family::Fdg, 0), &panel, 40, &quick(2)).unwrap();
        assert!(r.objective < 1e-10, "seed {seed}: objective {}", r.objective);
        let gap = r.params.w().max_abs_diff(&w);
        assert!(gap < 1e-4, "seed {seed}: W off by {gap}");
    }
}

#[test]
fn repo_data_is_refit_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let params = common::random_params(&mut rng, Family::Repo, 3, 1, 0.1);
    let xe0 = common::unit_vec(&mut rng, 3, 0.0, 1.0);
    let x0 = common::unit_vec(&mut rng, 3, 0.0, 1.0);
    let panel = common::simulate_panel(spec(Family::Repo, 0), &params, xe0, x0, 60);
    let r = fit(spec(Family::Repo, 0), &panel, 60, &quick(2)).unwrap();
    assert!(r.objective < 1e-8, "objective {}", r.objective);
    assert!(r.solver_trace.is_monotone());
}

#[test]
fn fj_with_unit_susceptibility_matches_fdg() {
    let panel = bundled::panel();
    let fdg = fit(spec(Family::Fdg, 0), &panel, 10, &quick(1)).unwrap();
    let fj = fit_fj_with_fixed_susceptibility(&panel, 10, &[1.0; 7], &quick(1)).unwrap();
    assert!(
        (fdg.objective - fj.objective).abs() < 1e-8,
        "{} vs {}",
        fdg.objective,
        fj.objective
    );
}

#[test]
fn fdg_is_seed_independent_and_step_rules_agree() {
    let panel = bundled::panel();
    let a = fit(
        spec(Family::Fdg, 0),
        &panel,
        10,
        &SolverConfig {
            seed: 1,
            n_starts: 3,
            ..Default::default()
        },
    )
    .unwrap();
    let b = fit(
        spec(Family::Fdg, 0),
        &panel,
        10,
        &SolverConfig {
            seed: 99,
            n_starts: 3,
            ..Default::default()
        },
    )
    .unwrap();
    let c = fit(
        spec(Family::Fdg, 0),
        &panel,
        10,
        &SolverConfig {
            n_starts: 1,
            step_rule: StepRule::Fixed,
            ..Default::default()
        },
    )
    .unwrap();
    assert!((a.objective - b.objective).abs() < 1e-8);
    assert!((a.objective - c.objective).abs() < 1e-8);
}

#[test]
fn fits_are_deterministic() {
    let panel = bundled::panel();
    let cfg = SolverConfig {
        n_starts: 3,
        seed: 4,
        ..Default::default()
    };
    let a = fit(spec(Family::Epo, 1), &panel, 10, &cfg).unwrap();
    let b = fit(spec(Family::Epo, 1), &panel, 10, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn objective_matches_direct_sum() {
    // Independent evaluation of the two-layer residuals on random data.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (n, t_est, lag) = (4, 9, 1);
    let panel = common::random_panel(&mut rng, n, 11);
    let p = common::random_params(&mut rng, Family::Epo, n, t_est, 0.0);
    let (a, d, s, z, phi, x) = (
        p.a().unwrap(),
        p.d().unwrap(),
        p.s().unwrap(),
        p.z().unwrap(),
        p.phi().unwrap(),
        p.x().unwrap(),
    );
    let xe = |k: usize, t: usize| panel.value(k, t);
    let mut total = 0.0;
    for t in lag..t_est - 1 {
        for b in 0..n {
            let peers: f64 = (0..n).map(|k| a[(b, k)] * xe(k, t)).sum();
            let lagged: f64 = (0..n).map(|k| a[(b, k)] * xe(k, t - lag)).sum();
            let r1 = x[(b, t + 1)] - s[b] * (d[b] * x[(b, t)] + (1.0 - d[b]) * peers) - (1.0 - s[b]) * z[b];
            let r2 = xe(b, t + 1) - phi[b] * x[(b, t + 1)] - (1.0 - phi[b]) * lagged;
            total += r1 * r1 + r2 * r2;
        }
    }
    let got = objective(spec(Family::Epo, lag), &p, &panel, t_est).unwrap();
    assert!((got - total).abs() < 1e-12 * (1.0 + total));
}

#[test]
fn gradients_agree_with_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let panel = common::random_panel(&mut rng, 4, 10);
    for (fam, lag) in [
        (Family::Fdg, 0),
        (Family::Fj, 0),
        (Family::Fdgm, 2),
        (Family::Epo, 1),
        (Family::Repo, 0),
    ] {
        for _ in 0..10 {
            let p = common::random_params(&mut rng, fam, 4, 8, 0.01);
            let dev = gradient_check(spec(fam, lag), &p, &panel, 8).unwrap();
            assert!(dev < 1e-4, "{fam} lag {lag}: {dev}");
        }
    }
}

#[test]
fn gradient_check_refuses_boundary_points() {
    let panel = bundled::panel();
    let w = Matrix::identity(7);
    let p = ParamSet::new(
        Family::Fdg,
        ParamParts {
            w: Some(w),
            ..Default::default()
        },
    )
    .unwrap();
    assert!(matches!(
        gradient_check(spec(Family::Fdg, 0), &p, &panel, 10),
        Err(Error::OnBoundary { .. })
    ));
}

#[test]
fn invalid_splits_and_configs_are_rejected() {
    let panel = bundled::panel();
    assert!(matches!(
        fit(spec(Family::Fdg, 0), &panel, 13, &quick(1)),
        Err(Error::InvalidSplit(_))
    ));
    assert!(matches!(
        fit(spec(Family::Epo, 2), &panel, 4, &quick(1)),
        Err(Error::InvalidSplit(_))
    ));
    assert!(matches!(
        fit(spec(Family::Fdg, 0), &panel, 10, &quick(0)),
        Err(Error::InvalidSpec(_))
    ));
    assert!(matches!(ModelSpec::new(Family::Fdgm, 0), Err(Error::InvalidSpec(_))));
}

#[test]
fn fitted_models_round_trip_through_json() {
    let panel = bundled::panel();
    for (fam, lag) in [(Family::Fj, 0), (Family::Fdgm, 1), (Family::Epo, 0), (Family::Repo, 2)] {
        let r = fit(spec(fam, lag), &panel, 10, &quick(2)).unwrap();
        let mut buf = Vec::new();
        write_fit(&mut buf, &r).unwrap();
        let back = read_fit(buf.as_slice()).unwrap();
        assert_eq!(back, r, "{fam} lag {lag}");
        assert_eq!(back.objective.to_bits(), r.objective.to_bits());
    }
}

#[test]
fn fj_fixed_point_is_stationary() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = common::random_params(&mut rng, Family::Fj, 5, 1, 0.05);
    let spec = spec(Family::Fj, 0);
    let mut x = vec![0.5; 5];
    for _ in 0..5000 {
        x = simulate(spec, &p, &SimState::observed(vec![x]), 1).unwrap().remove(0).0;
    }
    let traj = simulate(spec, &p, &SimState::observed(vec![x.clone()]), 20).unwrap();
    for (step, _) in traj {
        for (a, b) in step.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn reference_forecast_errors_match_reference_metrics() {
    let panel = bundled::panel();
    let table = bundled::reference_metrics();
    for s in bundled::reference_specs() {
        let params = bundled::reference_params(s).unwrap();
        let value = objective(s, &params, &panel, bundled::T_EST).unwrap();
        let fit = opinionfit::FitResult {
            spec: s,
            params,
            objective: value,
            n_train_periods: bundled::T_EST,
            solver_trace: Default::default(),
            seed: 0,
            n_starts: 1,
        };
        let m = evaluate(&fit, &panel, &bundled::TEST_PERIODS).unwrap();
        let r = &table[&s];
        assert!((value - r.sum_of_residuals).abs() < 1e-3, "{s}: objective {value}");
        assert!((m.rmse_per_test_period[0] - r.rmse_t11).abs() < 5e-4, "{s}");
        assert!((m.rmse_per_test_period[1] - r.rmse_t12).abs() < 5e-4, "{s}");
        assert!((m.rmse_test_overall - r.rmse_out).abs() < 5e-4, "{s}");
        assert!(m.mae <= m.rmse_in_sample);
    }
}

#[test]
fn fdg_in_sample_rmse_is_in_reference_range() {
    let panel = bundled::panel();
    let r = fit(spec(Family::Fdg, 0), &panel, 10, &quick(1)).unwrap();
    let m = evaluate(&r, &panel, &[11, 12]).unwrap();
    assert!((0.14..=0.155).contains(&m.rmse_in_sample), "{}", m.rmse_in_sample);
}
