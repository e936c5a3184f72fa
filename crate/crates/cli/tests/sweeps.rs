//! The documented sweep behaviors, driven through the run layer in process.

use cascade_eom::schemes::{self, Scheme1Config};
use cascade_eom::units::CellParams;
use cascade_eom::DotParams;
use cascade_eom_cli::config::RunConfig;
use cascade_eom_cli::run::sweep_rows;

fn default_scheme() -> Scheme1Config {
    let dot = DotParams::from_energies(1.3980, 1.4000, 1e9, 1.0).unwrap();
    let cell = CellParams::from_datasheet(52e-3, 830e-9, 1.5, 0.02).unwrap();
    Scheme1Config::new(dot, cell, cell)
}

fn sweep_config(body: &str) -> RunConfig {
    RunConfig::parse(body).unwrap()
}

#[test]
fn path_offset_sweep_is_linear_with_the_predicted_slope() {
    let cfg = sweep_config("[sweep]\nparameter = \"delta_l1\"\nfrom = 0.0\nto = 5.0\nsteps = 11\n");
    let (rows, _) = sweep_rows(&cfg, Some(1)).unwrap();
    assert_eq!(rows.len(), 11);
    let scheme = default_scheme();
    let (b1, _) =
        schemes::scheme1_ramp_rates(&scheme.dot, &scheme.cell1, &scheme.cell2).unwrap();
    let per_meter = schemes::path_fluctuation_phase(&scheme.cell1, b1, scheme.dot.k_h1, 1.0);
    for pair in rows.windows(2) {
        let slope = (pair[1].constant_phase_rad - pair[0].constant_phase_rad)
            / ((pair[1].value - pair[0].value) * 1e-3);
        assert!(
            ((slope - per_meter) / per_meter).abs() <= 1e-2,
            "slope {slope:.6e} rad/m vs predicted {per_meter:.6e}"
        );
    }
}

#[test]
fn trigger_mismatch_sweep_degrades_monotonically() {
    let cfg = sweep_config("[sweep]\nparameter = \"delta_t\"\nfrom = 0.0\nto = 2.0\nsteps = 9\n");
    let (rows, _) = sweep_rows(&cfg, Some(1)).unwrap();
    for pair in rows.windows(2) {
        assert!(
            pair[1].fidelity_opt < pair[0].fidelity_opt,
            "fidelity rose from {:.9} to {:.9} at dt = {} ns",
            pair[0].fidelity_opt,
            pair[1].fidelity_opt,
            pair[1].value
        );
    }
}

#[test]
fn correction_holds_across_the_splitting_range() {
    let cfg = sweep_config(
        "[sweep]\nparameter = \"fss_uev\"\nfrom = 0.3\nto = 40.0\nsteps = 9\nscale = \"log\"\n",
    );
    let (rows, _) = sweep_rows(&cfg, Some(1)).unwrap();
    for row in &rows {
        assert!(
            row.fidelity_opt >= 1.0 - 1e-4,
            "fidelity_opt {:.9} at {} ueV",
            row.fidelity_opt,
            row.value
        );
    }
}
