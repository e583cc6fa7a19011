//! End-to-end pipeline cost on the bundled design: fit, covariance, and the
//! per-replicate path the simulator takes.

use criterion::{criterion_group, criterion_main, Criterion};

use trendsim_core::synthetic::ames_synthetic_dataset;
use trendsim_core::{
    covariance, fit_cell_means, interaction_f_test, run_simulation, Alternative, CovarianceKind,
    DoseContrastChoice, QmcConfig, SimulationScenario, SimulationSettings,
};

fn bench_fit_and_covariance(c: &mut Criterion) {
    let dataset = ames_synthetic_dataset(7).unwrap();
    c.bench_function("fit_cell_means_294_obs", |b| {
        b.iter(|| fit_cell_means(&dataset).unwrap())
    });
    let model = fit_cell_means(&dataset).unwrap();
    c.bench_function("hc3_covariance_49_cells", |b| {
        b.iter(|| covariance(&model, CovarianceKind::Hc3).unwrap())
    });
    c.bench_function("interaction_f_test", |b| {
        b.iter(|| interaction_f_test(&dataset).unwrap())
    });
}

fn bench_simulated_replicates(c: &mut Criterion) {
    let scenario = SimulationScenario {
        replicates: 10,
        ..SimulationScenario::ames_null(3, 10)
    };
    let settings = SimulationSettings {
        dose_contrast: DoseContrastChoice::Williams,
        vcov: CovarianceKind::Hc3,
        alternative: Alternative::Greater,
        alpha: 0.05,
        p_threshold: 0.10,
        target_lab: None,
        track_equivalence: true,
        qmc: QmcConfig {
            sample_budget: 1024,
            randomizations: 8,
            seed: 0,
            target_abs_error: 2e-3,
        },
    };
    let mut group = c.benchmark_group("simulate");
    group.sample_size(10);
    group.bench_function("10_null_replicates_7x7x6", |b| {
        b.iter(|| run_simulation(&scenario, &settings).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_fit_and_covariance, bench_simulated_replicates);
criterion_main!(benches);
