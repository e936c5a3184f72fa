//! Timings for the hot paths: the closed-form pipeline, its pieces, and
//! the grid oracle it is checked against.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use cascade_eom::metrics;
use cascade_eom::oracle;
use cascade_eom::schemes::{self, Scheme1Config};
use cascade_eom::source::initial_state;
use cascade_eom::units::CellParams;
use cascade_eom::{apply_cell, DotParams, Photon};

fn two_cell_config() -> Scheme1Config {
    let dot = DotParams::from_energies(1.3980, 1.4000, 1e9, 1.0).unwrap();
    let cell = CellParams::from_datasheet(52e-3, 830e-9, 1.5, 0.02).unwrap();
    Scheme1Config::new(dot, cell, cell)
}

fn bench_pipeline(c: &mut Criterion) {
    let cfg = two_cell_config();
    let state = initial_state(&cfg.dot).unwrap();
    let (b1, b2) = schemes::scheme1_ramp_rates(&cfg.dot, &cfg.cell1, &cfg.cell2).unwrap();
    let (ramp1, _ramp2) = schemes::scheme1_ramps(&cfg, b1, b2);
    let rho = metrics::polarization_density_matrix(&state).unwrap();

    c.bench_function("scheme1_run", |b| {
        b.iter(|| schemes::scheme1_run(black_box(&cfg)).unwrap())
    });
    c.bench_function("apply_cell", |b| {
        b.iter(|| apply_cell(black_box(&state), &cfg.cell1, &ramp1, Photon::One).unwrap())
    });
    c.bench_function("density_matrix_closed_form", |b| {
        b.iter(|| metrics::polarization_density_matrix(black_box(&state)).unwrap())
    });
    c.bench_function("concurrence", |b| {
        b.iter(|| metrics::concurrence(black_box(&rho)).unwrap())
    });
    c.bench_function("oracle_compare_2k", |b| {
        b.iter(|| {
            oracle::compare_transform(black_box(&state), &cfg.cell1, &ramp1, Photon::One, 1 << 11, 1.0)
                .unwrap()
        })
    });
}

criterion_group!(benches, bench_pipeline);
criterion_main!(benches);
