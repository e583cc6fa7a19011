//! Benchmarks of the multivariate t engine: box probabilities at the
//! dimensions the pipeline actually uses (7 highest-dose and 42 Williams
//! interaction contrasts) and the critical-value search.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use trendsim_core::synthetic::ames_synthetic_dataset;
use trendsim_core::{
    correlation_from_contrasts, covariance, equicoordinate_quantile, fit_cell_means,
    grand_mean_matrix, kronecker_interaction, mvt_rectangle_probability, williams_matrix,
    CorrelationMatrix, CovarianceKind, DoseContrastChoice, QmcConfig, Tail,
};

fn interaction_correlation(dose: DoseContrastChoice) -> (CorrelationMatrix, f64) {
    let dataset = ames_synthetic_dataset(7).unwrap();
    let model = fit_cell_means(&dataset).unwrap();
    let cov = covariance(&model, CovarianceKind::Classical).unwrap();
    let dose_matrix = match dose {
        DoseContrastChoice::Williams => williams_matrix(dataset.dose_factor()).unwrap(),
        DoseContrastChoice::Highest => dose.build(dataset.dose_factor()).unwrap(),
    };
    let ia = kronecker_interaction(
        &grand_mean_matrix(dataset.lab_factor()).unwrap(),
        &dose_matrix,
    )
    .unwrap();
    (correlation_from_contrasts(&ia, &cov).unwrap(), cov.df as f64)
}

fn bench_rectangle_probability(c: &mut Criterion) {
    let mut group = c.benchmark_group("mvt_rectangle_probability");
    group.sample_size(10);
    for (name, choice) in [
        ("q7_highest", DoseContrastChoice::Highest),
        ("q42_williams", DoseContrastChoice::Williams),
    ] {
        let (r, df) = interaction_correlation(choice);
        let q = r.dim();
        let cfg = QmcConfig {
            sample_budget: 16_384,
            randomizations: 8,
            seed: 1,
            target_abs_error: 1e-4,
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                mvt_rectangle_probability(&vec![-2.8; q], &vec![2.8; q], &r, df, &cfg).unwrap()
            })
        });
    }
    group.finish();
}

fn bench_quantile(c: &mut Criterion) {
    let (r, df) = interaction_correlation(DoseContrastChoice::Highest);
    let cfg = QmcConfig {
        sample_budget: 8_192,
        randomizations: 8,
        seed: 1,
        target_abs_error: 1e-3,
    };
    let mut group = c.benchmark_group("equicoordinate_quantile");
    group.sample_size(10);
    group.bench_function("q7_two_sided_alpha_0.10", |b| {
        b.iter(|| equicoordinate_quantile(0.10, &r, df, Tail::TwoSidedBox, &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_rectangle_probability, bench_quantile);
criterion_main!(benches);
