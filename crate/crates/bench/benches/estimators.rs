use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hrisk_core::breaks::find_breaks_design;
use hrisk_core::eigen::jacobi_eigen;
use hrisk_core::regression::solve_quantile;
use hrisk_core::tgarch::log_likelihood_at;
use hrisk_core::{
    enumerate_models, fit_tgarch, simulate_tgarch, CovState, Design, EquationParams, Panel,
    TGarchConfig, TGarchParams, TimeSeries, VarCoefficients, YearMonth,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::hint::black_box;

fn ym() -> YearMonth {
    YearMonth::new(1971, 1).unwrap()
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn params() -> TGarchParams {
    let eq = EquationParams::new(0.1, 0.1, 0.8, 0.1);
    TGarchParams {
        housing: eq,
        factor: eq,
        cross: EquationParams::new(0.02, 0.05, 0.8, 0.05),
    }
}

fn coefficients() -> VarCoefficients {
    VarCoefficients {
        intercepts: [0.0, 0.0],
        matrix: [[0.3, 0.1], [0.0, 0.2]],
    }
}

fn eigen(c: &mut Criterion) {
    let mut group = c.benchmark_group("jacobi_eigen");
    for k in [10, 76] {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cols: Vec<Vec<f64>> = (0..k).map(|_| normals(&mut rng, 200)).collect();
        let a: Vec<Vec<f64>> = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| cols[i].iter().zip(&cols[j]).map(|(x, y)| x * y).sum())
                    .collect()
            })
            .collect();
        group.bench_with_input(BenchmarkId::from_parameter(k), &a, |b, a| {
            b.iter(|| jacobi_eigen(black_box(a)))
        });
    }
    group.finish();
}

fn tgarch(c: &mut Criterion) {
    let sim = simulate_tgarch(&params(), &coefficients(), 576, 2).unwrap();
    let init = CovState::from_residuals(&sim.innovations);
    c.bench_function("tgarch_loglik_576", |b| {
        b.iter(|| log_likelihood_at(black_box(&sim.innovations), black_box(&params()), init))
    });
    let config = TGarchConfig {
        restarts: 2,
        ..TGarchConfig::default()
    };
    let mut group = c.benchmark_group("tgarch_fit");
    group.sample_size(10);
    group.bench_function("576_two_restarts", |b| {
        b.iter(|| fit_tgarch(&sim.x, &sim.f, black_box(&config)))
    });
    group.finish();
}

fn quantile(c: &mut Criterion) {
    let mut group = c.benchmark_group("quantile_fit");
    for n in [100, 576] {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = normals(&mut rng, n);
        let y: Vec<f64> = x
            .iter()
            .zip(normals(&mut rng, n))
            .map(|(a, e)| 0.5 + 0.2 * a + e)
            .collect();
        let rows: Vec<Vec<f64>> = x.iter().map(|v| vec![1.0, *v]).collect();
        group.bench_with_input(
            BenchmarkId::from_parameter(n),
            &(y, rows),
            |b, (y, rows)| b.iter(|| solve_quantile(black_box(y), black_box(rows), 0.75)),
        );
    }
    group.finish();
}

fn breaks(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 576;
    let h = normals(&mut rng, n);
    let d = Design {
        start: ym(),
        y: normals(&mut rng, n),
        names: vec!["H".into()],
        columns: vec![h],
    };
    let mut group = c.benchmark_group("breaks_dp");
    group.sample_size(10);
    group.bench_function("576_five_breaks", |b| {
        b.iter(|| find_breaks_design(black_box(&d), 5, 0.15))
    });
    group.finish();
}

fn selection(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 576;
    let y = TimeSeries::new("y", ym(), normals(&mut rng, n)).unwrap();
    let ids: Vec<String> = (0..12).map(|j| format!("c{j}")).collect();
    let cols = (0..12).map(|_| normals(&mut rng, n)).collect();
    let panel = Panel::new(ym(), ids, cols).unwrap();
    c.bench_function("enumerate_models_12", |b| {
        b.iter(|| enumerate_models(&y, black_box(&panel), &[], 20))
    });
}

criterion_group!(benches, eigen, tgarch, quantile, breaks, selection);
criterion_main!(benches);
