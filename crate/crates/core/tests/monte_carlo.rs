//! Simulation checks of estimator behaviour on data with known structure.

use hrisk_core::forecast::ModelSpec;
use hrisk_core::tgarch::log_likelihood_at;
use hrisk_core::{
    describe, evaluate, fit_pca, fit_tgarch, fit_var1, scores, simulate_tgarch, split_train_test,
    subsample_fit, CovState, Design, EquationParams, Panel, PcaMode, PredictiveSpec, TGarchConfig,
    TGarchParams, TimeSeries, VarCoefficients, YearMonth,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

const SEEDS: u64 = 20;

fn ym() -> YearMonth {
    YearMonth::new(1971, 1).unwrap()
}

fn ts(id: &str, v: Vec<f64>) -> TimeSeries {
    TimeSeries::new(id, ym(), v).unwrap()
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn at_least_90_percent(hits: usize, total: usize) -> bool {
    10 * hits >= 9 * total
}

fn garch(omega: f64, alpha: f64, phi: f64, gamma: f64) -> TGarchParams {
    let eq = EquationParams::new(omega, alpha, phi, gamma);
    TGarchParams {
        housing: eq,
        factor: eq,
        cross: EquationParams::new(0.2 * omega, alpha, phi, gamma),
    }
}

fn var_coefficients(matrix: [[f64; 2]; 2]) -> VarCoefficients {
    VarCoefficients {
        intercepts: [0.0, 0.0],
        matrix,
    }
}

#[test]
fn jarque_bera_accepts_normal_data() {
    let accepted = (0..SEEDS)
        .filter(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let d = describe(&ts("z", normals(&mut rng, 576))).unwrap();
            d.jarque_bera.unwrap().p_value > 0.05
        })
        .count();
    assert!(
        at_least_90_percent(accepted, SEEDS as usize),
        "{accepted}/{SEEDS}"
    );
}

#[test]
fn var_slopes_on_independent_noise_stay_within_two_se() {
    let (mut inside, mut total) = (0, 0);
    for s in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + s);
        let fit = fit_var1(
            &ts("x", normals(&mut rng, 2000)),
            &ts("f", normals(&mut rng, 2000)),
        )
        .unwrap();
        for eq in 0..2 {
            for k in 0..2 {
                total += 1;
                inside += usize::from(
                    fit.coefficients.matrix[eq][k].abs() <= 2.0 * fit.std_errors[eq][k + 1],
                );
            }
        }
    }
    assert!(at_least_90_percent(inside, total), "{inside}/{total}");
}

#[test]
fn var_recovers_planted_coefficients() {
    let truth = [[0.5, 0.2], [0.1, 0.4]];
    for s in 0..5 {
        let sim = simulate_tgarch(
            &garch(1.0, 0.0, 0.0, 0.0),
            &var_coefficients(truth),
            5000,
            200 + s,
        )
        .unwrap();
        let fit = fit_var1(&sim.x, &sim.f).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let got = fit.coefficients.matrix[i][j];
                assert!(
                    (got - truth[i][j]).abs() <= 0.05,
                    "seed {s} [{i}][{j}] {got}"
                );
            }
        }
    }
}

#[test]
fn symmetric_garch_has_unit_unconditional_variance() {
    let sim = simulate_tgarch(
        &garch(0.1, 0.1, 0.8, 0.0),
        &var_coefficients([[0.0; 2]; 2]),
        50_000,
        300,
    )
    .unwrap();
    for v in [
        sim.innovations.housing.clone(),
        sim.innovations.factor.clone(),
    ] {
        let var = hrisk_core::stats::variance(&v);
        assert!((var - 1.0).abs() <= 0.1, "{var}");
    }
}

#[test]
fn constant_variance_simulation_is_gaussian_noise() {
    let accepted = (0..SEEDS)
        .filter(|&s| {
            let sim = simulate_tgarch(
                &garch(1.0, 0.0, 0.0, 0.0),
                &var_coefficients([[0.0; 2]; 2]),
                576,
                400 + s,
            )
            .unwrap();
            describe(&sim.x).unwrap().jarque_bera.unwrap().p_value > 0.05
        })
        .count();
    assert!(
        at_least_90_percent(accepted, SEEDS as usize),
        "{accepted}/{SEEDS}"
    );
}

#[test]
fn symmetric_data_gives_small_threshold_terms() {
    let truth = garch(0.1, 0.1, 0.8, 0.0);
    let coeffs = var_coefficients([[0.3, 0.1], [0.0, 0.2]]);
    let (mut gi, mut gf) = (Vec::new(), Vec::new());
    for s in 0..SEEDS {
        let sim = simulate_tgarch(&truth, &coeffs, 5000, 500 + s).unwrap();
        let fit = fit_tgarch(
            &sim.x,
            &sim.f,
            &TGarchConfig {
                seed: s,
                ..TGarchConfig::default()
            },
        )
        .unwrap();
        assert!(fit.path.first_non_pd().is_none());
        gi.push(fit.params.housing.gamma.abs());
        gf.push(fit.params.factor.gamma.abs());
    }
    for g in [gi, gf] {
        let m = hrisk_core::stats::median(&g);
        assert!(m < 0.05, "median |γ| {m}");
    }
}

#[test]
fn true_parameters_beat_random_perturbations() {
    let truth = garch(0.1, 0.1, 0.8, 0.1);
    let coeffs = var_coefficients([[0.3, 0.1], [0.0, 0.2]]);
    let (mut wins, mut trials) = (0, 0);
    for s in 0..10 {
        let sim = simulate_tgarch(&truth, &coeffs, 5000, 600 + s).unwrap();
        let init = CovState::from_residuals(&sim.innovations);
        let at_truth = log_likelihood_at(&sim.innovations, &truth, init).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(700 + s);
        let jitter = Normal::new(0.0, 0.05).unwrap();
        let mut drawn = 0;
        while drawn < 50 {
            let mut a = truth.to_array();
            for v in &mut a {
                *v += jitter.sample(&mut rng);
            }
            let p = TGarchParams::from_array(&a);
            if p.validate().is_err() {
                continue;
            }
            drawn += 1;
            trials += 1;
            let beaten =
                log_likelihood_at(&sim.innovations, &p, init).is_none_or(|ll| at_truth > ll);
            wins += usize::from(beaten);
        }
    }
    assert!(100 * wins >= 95 * trials, "{wins}/{trials}");
}

#[test]
fn uncorrelated_unit_columns_split_variance_evenly() {
    let n = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(800);
    let center = |v: Vec<f64>| {
        let m = v.iter().sum::<f64>() / n as f64;
        v.into_iter().map(|x| x - m).collect::<Vec<_>>()
    };
    let a = center(normals(&mut rng, n));
    let b = center(normals(&mut rng, n));
    // remove the sample correlation so the population limit holds exactly
    let proj =
        a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / a.iter().map(|x| x * x).sum::<f64>();
    let b: Vec<f64> = b.iter().zip(&a).map(|(y, x)| y - proj * x).collect();
    let unit = |v: &[f64]| {
        let sd = hrisk_core::stats::std_dev(v);
        v.iter().map(|x| x / sd).collect::<Vec<_>>()
    };
    let panel = Panel::new(ym(), vec!["a".into(), "b".into()], vec![unit(&a), unit(&b)]).unwrap();
    for mode in [PcaMode::Covariance, PcaMode::Correlation] {
        let m = fit_pca(&panel, mode).unwrap();
        for p in &m.proportions {
            assert!((p - 0.5).abs() < 1e-6, "{p}");
        }
    }
}

#[test]
fn low_noise_factor_panel_recovers_factor() {
    let n = 500;
    let mut rng = ChaCha8Rng::seed_from_u64(900);
    let f = normals(&mut rng, n);
    let cols: Vec<Vec<f64>> = (0..12)
        .map(|_| {
            let b: f64 = rng.random_range(0.5..1.5);
            f.iter()
                .map(|v| b * v + 0.1 * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    let ids = (0..12).map(|j| format!("c{j}")).collect();
    let panel = Panel::new(ym(), ids, cols).unwrap();
    let m = fit_pca(&panel, PcaMode::Correlation).unwrap();
    let s = scores(&m, &panel, 1).unwrap();
    let r = hrisk_core::stats::pearson(s[0].series.values(), &f)
        .unwrap()
        .abs();
    assert!(r > 0.99, "{r}");
}

#[test]
fn doubled_post_break_beta_is_detected() {
    let n = 576;
    let spec = PredictiveSpec::default();
    let noise = Normal::new(0.0, 0.5).unwrap();
    let mut larger = 0;
    for s in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + s);
        let h = normals(&mut rng, n);
        let r: Vec<f64> = (0..n)
            .map(|t| {
                let beta = if t < n / 2 { 0.1 } else { 0.2 };
                let prev = if t == 0 { 0.0 } else { h[t - 1] };
                beta * prev + noise.sample(&mut rng)
            })
            .collect();
        let brk = ym().add_months(n as i64 / 2 - 1);
        let fit = subsample_fit(&ts("R", r), &ts("H", h), None, brk, &spec).unwrap();
        larger += usize::from(fit.post.ols.coefficients[1] > fit.pre.ols.coefficients[1]);
    }
    assert!(
        at_least_90_percent(larger, SEEDS as usize),
        "{larger}/{SEEDS}"
    );
}

#[test]
fn intercept_only_forecasts_beat_noise_regressors() {
    let n = 576;
    let mut wins = 0;
    for s in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(1100 + s);
        let d = Design {
            start: ym(),
            y: normals(&mut rng, n),
            names: (0..12).map(|j| format!("z{j}")).collect(),
            columns: (0..12).map(|_| normals(&mut rng, n)).collect(),
        };
        let (train, test) = split_train_test(&d, 0.8).unwrap();
        let names: Vec<&str> = d.names.iter().map(String::as_str).collect();
        let small = evaluate(&ModelSpec::new("mean", &[]), &train, &test).unwrap();
        let big = evaluate(&ModelSpec::new("all", &names), &train, &test).unwrap();
        wins += usize::from(small.out_of_sample.msfe <= big.out_of_sample.msfe);
    }
    assert!(10 * wins >= 7 * SEEDS as usize, "{wins}/{SEEDS}");
}
