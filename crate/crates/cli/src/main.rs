//! Command-line driver for the cascade correction: single runs, parameter
//! sweeps, hardware feasibility, and oracle cross-checks.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cascade_eom::schemes::{self, Scheme1Config};
use cascade_eom::{apply_cell, eom, metrics, oracle, source, Photon, RampProfile};
use cascade_eom_cli::config::{ResolvedScheme, RunConfig};
use cascade_eom_cli::run;

#[derive(Parser)]
#[command(name = "cascade-eom-cli", version, about = "Ramped electro-optic correction of a \
biexciton-cascade photon pair: simulate, sweep, and stress the closed forms")]
struct Cli {
    /// TOML configuration file (defaults apply when omitted).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// CSV output path, overriding `[output] path` from the configuration.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Worker threads for sweeps; defaults to all cores.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Print the fully resolved configuration as TOML and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured correction once and report its metrics.
    Simulate,
    /// Evaluate the correction across the configured parameter sweep.
    Sweep,
    /// Report ramp rates, peak voltages, and drift sensitivities.
    Feasibility,
    /// Cross-check the closed-form transforms against grid propagation.
    OracleCheck {
        #[arg(long, hide = true)]
        corrupt_f: bool,
    },
}

/// Failure routed to a process exit code: 1 tolerance, 2 config, 3 physics.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    fn tolerance(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    fn physics(err: cascade_eom::Error) -> Self {
        Failure { code: 3, message: err.to_string() }
    }
}

impl From<run::RunError> for Failure {
    fn from(err: run::RunError) -> Self {
        match err {
            run::RunError::Config(e) => Failure::config(e),
            run::RunError::Physics(e) => Failure::physics(e),
        }
    }
}

/// Dying silently on a closed pipe (`... | head`) matches the standard
/// tools; the Rust default would panic on the first failed print instead.
fn restore_sigpipe_default() {
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

fn main() -> ExitCode {
    restore_sigpipe_default();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_config(cli)?;
    if cli.print_config {
        print!("{}", cfg.resolved_toml());
        return Ok(());
    }
    match &cli.command {
        None => Err(Failure::config(
            "missing subcommand (simulate | sweep | feasibility | oracle-check); see --help",
        )),
        Some(Command::Simulate) => simulate(cli, &cfg),
        Some(Command::Sweep) => sweep(cli, &cfg),
        Some(Command::Feasibility) => feasibility(&cfg),
        Some(Command::OracleCheck { corrupt_f }) => oracle_check(&cfg, *corrupt_f),
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    match &cli.config {
        None => Ok(RunConfig::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
            RunConfig::parse(&text)
                .map_err(|e| Failure::config(format!("{}: {e}", path.display())))
        }
    }
}

fn output_path(cli: &Cli, cfg: &RunConfig) -> Option<PathBuf> {
    cli.output
        .clone()
        .or_else(|| cfg.output.path.as_ref().map(PathBuf::from))
}

fn write_csv_or_fail(path: &Path, document: &str) -> Result<(), Failure> {
    run::write_csv(path, document)
        .map_err(|e| Failure::config(format!("writing {}: {e}", path.display())))
}

fn simulate(cli: &Cli, cfg: &RunConfig) -> Result<(), Failure> {
    if cfg.sweep.is_some() {
        return Err(Failure::config(
            "[sweep]: simulate runs a single point; drop the sweep section or use the sweep \
             subcommand",
        ));
    }
    let (row, warnings) = run::run_once(cfg, "-", 0.0)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let scheme_name = match cfg.scheme.kind {
        1 => "reverse ramp pair, one cell per photon",
        _ => "polarization flip, one shared cell",
    };
    println!("scheme             : {} ({scheme_name})", cfg.scheme.kind);
    println!(
        "ramp rates         : {:+.4} V/ns, {:+.4} V/ns",
        row.b1_v_per_ns, row.b2_v_per_ns
    );
    println!(
        "max |voltage|      : {:.2} V over {} ns",
        row.max_voltage_v, cfg.feasibility.ramp_duration_ns
    );
    println!(
        "fidelity raw / opt : {:.9} / {:.9}",
        row.fidelity_raw, row.fidelity_opt
    );
    println!("concurrence        : {:.9}", row.concurrence);
    println!(
        "residual kappa     : {:+.6e} rad/m (photon 1), {:+.6e} rad/m (photon 2)",
        row.residual_kappa1, row.residual_kappa2
    );
    println!("constant phase     : {:+.6e} rad", row.constant_phase_rad);
    println!("amplitude epsilon  : {:.6e}", row.epsilon_amp);
    println!();
    println!("{}", run::CSV_COLUMNS);
    println!("{}", row.csv_line());
    if let Some(path) = output_path(cli, cfg) {
        let doc = run::csv_document(cfg, std::slice::from_ref(&row));
        write_csv_or_fail(&path, &doc)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn sweep(cli: &Cli, cfg: &RunConfig) -> Result<(), Failure> {
    let section = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Failure::config("sweep requires a [sweep] section in the configuration"))?
        .clone();
    let (rows, warnings) = run::sweep_rows(cfg, cli.jobs)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let path = output_path(cli, cfg).unwrap_or_else(|| PathBuf::from("sweep.csv"));
    let doc = run::csv_document(cfg, &rows);
    write_csv_or_fail(&path, &doc)?;
    println!(
        "swept {} over [{}, {}] in {} steps; wrote {}",
        section.parameter,
        section.from,
        section.to,
        section.steps,
        path.display()
    );
    Ok(())
}

fn feasibility(cfg: &RunConfig) -> Result<(), Failure> {
    let fcfg = match cfg.scheme().map_err(Failure::config)? {
        ResolvedScheme::RampPair(c) => c,
        ResolvedScheme::Flip(c) => {
            let mut f = Scheme1Config::new(c.dot, c.cell, c.cell);
            f.l1 = c.l1;
            f.l2 = c.l2;
            f.delta_l1 = c.delta_l1;
            f.delta_l2 = c.delta_l2;
            f
        }
    };
    let fs = &cfg.feasibility;
    let duration = fs.ramp_duration_ns * 1e-9;
    let window = (fs.slew_min_v_per_ns * 1e9, fs.slew_max_v_per_ns * 1e9);
    let rep = schemes::feasibility(&fcfg, duration, window, fs.voltage_cap_v)
        .map_err(Failure::physics)?;
    let n = fs.n_cells as f64;
    let per = |r: f64| r / n;
    let in_window =
        |r: f64| per(r).abs() * 1e-9 >= fs.slew_min_v_per_ns && per(r).abs() * 1e-9 <= fs.slew_max_v_per_ns;
    let window_ok = in_window(rep.rate1) && in_window(rep.rate2) && in_window(rep.rate_flip);
    let cap_ok = per(rep.max_voltage1).max(per(rep.max_voltage2)).max(per(rep.max_voltage_flip))
        <= fs.voltage_cap_v;
    println!(
        "ideal ramp rates    : b1 = {:+.4} V/ns, b2 = {:+.4} V/ns, flip = {:+.4} V/ns",
        rep.rate1 * 1e-9,
        rep.rate2 * 1e-9,
        rep.rate_flip * 1e-9
    );
    if fs.n_cells > 1 {
        println!(
            "per-cell rates (n={}): b1 = {:+.4} V/ns, b2 = {:+.4} V/ns, flip = {:+.4} V/ns",
            fs.n_cells,
            per(rep.rate1) * 1e-9,
            per(rep.rate2) * 1e-9,
            per(rep.rate_flip) * 1e-9
        );
    }
    println!(
        "peak |voltage|      : {:.2} V / {:.2} V / {:.2} V per cell over {} ns",
        per(rep.max_voltage1).abs(),
        per(rep.max_voltage2).abs(),
        per(rep.max_voltage_flip).abs(),
        fs.ramp_duration_ns
    );
    println!(
        "slew window         : {:.1} - {:.1} V/ns -> {}",
        fs.slew_min_v_per_ns,
        fs.slew_max_v_per_ns,
        if window_ok { "within" } else { "OUT OF WINDOW" }
    );
    println!(
        "voltage cap         : {:.1} V -> {}",
        fs.voltage_cap_v,
        if cap_ok { "within" } else { "EXCEEDED" }
    );
    println!(
        "walk-off            : d1 = {:+.4e} m, d2 = {:+.4e} m, net = {:+.4e} m",
        rep.walkoff1, rep.walkoff2, rep.net_walkoff
    );
    println!("constant phase      : {:+.4e} rad (wrapped)", rep.constant_phase);
    println!(
        "trigger sensitivity : {:.4e} rad per ns of ramp-start mismatch",
        rep.phase_per_second_mismatch * 1e-9
    );
    println!(
        "path sensitivity    : {:.4e} rad/mm (arm 1), {:.4e} rad/mm (arm 2)",
        rep.phase_per_meter_path1 * 1e-3,
        rep.phase_per_meter_path2 * 1e-3
    );
    println!(
        "transit stretch     : {:+.3e} (cell 1), {:+.3e} (cell 2)",
        rep.transit_stretch1, rep.transit_stretch2
    );
    Ok(())
}

/// Grid resolution used by the oracle-check subcommand.
const ORACLE_GRID: usize = 1 << 14;
/// Positions (m, behind each wavepacket head) probed by the transit check.
const TRANSIT_PROBES: [f64; 3] = [0.0, -0.4, -1.7];

fn oracle_check(cfg: &RunConfig, corrupt_f: bool) -> Result<(), Failure> {
    let f_scale = if corrupt_f { 1.001 } else { 1.0 };
    let mut checks: Vec<(String, f64, f64)> = Vec::new();

    let transform_checks = |label: &str,
                                t: &oracle::TransformCheck,
                                checks: &mut Vec<(String, f64, f64)>| {
        checks.push((format!("{label} envelope L2 error"), t.l2_error, 1e-4));
        checks.push((format!("{label} phase error (rad)"), t.max_phase_error, 1e-3));
        checks.push((format!("{label} norm drift"), t.norm_drift, 1e-6));
    };
    let timing_checks = |label: &str,
                             cell: &cascade_eom::CellParams,
                             ramp: &RampProfile,
                             checks: &mut Vec<(String, f64, f64)>|
     -> Result<(), Failure> {
        let mut worst = 0.0f64;
        for x in TRANSIT_PROBES {
            let closed = eom::transit_time(cell, ramp, x).map_err(Failure::physics)?;
            let numeric = oracle::transit_time_numeric(cell, ramp, x).map_err(Failure::physics)?;
            worst = worst.max(((numeric - closed) / closed).abs());
        }
        checks.push((format!("{label} transit-time rel error"), worst, 1e-10));
        let d_closed = eom::walkoff(cell, ramp).map_err(Failure::physics)?;
        let d_numeric = oracle::walkoff_numeric(cell, ramp).map_err(Failure::physics)?;
        let rel = if d_closed == 0.0 {
            d_numeric.abs()
        } else {
            ((d_numeric - d_closed) / d_closed).abs()
        };
        checks.push((format!("{label} walk-off rel error"), rel, 1e-9));
        Ok(())
    };

    let state = match cfg.scheme().map_err(Failure::config)? {
        ResolvedScheme::RampPair(c) => {
            let state = source::initial_state(&c.dot).map_err(Failure::physics)?;
            let (b1, b2) = if c.cell1.eta == 0.0 && c.cell2.eta == 0.0 {
                (0.0, 0.0)
            } else {
                schemes::scheme1_ramp_rates(&c.dot, &c.cell1, &c.cell2)
                    .map_err(Failure::physics)?
            };
            let (r1, r2) = schemes::scheme1_ramps(&c, b1 * c.b1_scale, b2 * c.b2_scale);
            let t1 = oracle::compare_transform(&state, &c.cell1, &r1, Photon::One, ORACLE_GRID, f_scale)
                .map_err(Failure::physics)?;
            transform_checks("cell 1", &t1, &mut checks);
            let after1 = apply_cell(&state, &c.cell1, &r1, Photon::One).map_err(Failure::physics)?;
            let t2 = oracle::compare_transform(&after1, &c.cell2, &r2, Photon::Two, ORACLE_GRID, f_scale)
                .map_err(Failure::physics)?;
            transform_checks("cell 2", &t2, &mut checks);
            timing_checks("cell 1", &c.cell1, &r1, &mut checks)?;
            timing_checks("cell 2", &c.cell2, &r2, &mut checks)?;
            state
        }
        ResolvedScheme::Flip(c) => {
            let state = source::initial_state_flipped(&c.dot).map_err(Failure::physics)?;
            let rate = if c.cell.eta == 0.0 {
                0.0
            } else {
                schemes::scheme2_ramp_rate(&c.dot, &c.cell).map_err(Failure::physics)? * c.b_scale
            };
            let r1 = RampProfile::new(0.0, rate, c.l1 + c.delta_l1);
            let r2 = RampProfile::new(0.0, rate, c.l2 + c.delta_l2);
            let t1 = oracle::compare_transform(&state, &c.cell, &r1, Photon::One, ORACLE_GRID, f_scale)
                .map_err(Failure::physics)?;
            transform_checks("pass 1", &t1, &mut checks);
            let after1 = apply_cell(&state, &c.cell, &r1, Photon::One).map_err(Failure::physics)?;
            let t2 = oracle::compare_transform(&after1, &c.cell, &r2, Photon::Two, ORACLE_GRID, f_scale)
                .map_err(Failure::physics)?;
            transform_checks("pass 2", &t2, &mut checks);
            timing_checks("pass 1", &c.cell, &r1, &mut checks)?;
            timing_checks("pass 2", &c.cell, &r2, &mut checks)?;
            state
        }
    };

    let rho_grid = oracle::density_matrix_grid(&state, 1024).map_err(Failure::physics)?;
    let rho_closed = metrics::polarization_density_matrix(&state).map_err(Failure::physics)?;
    let mut max_diff = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            max_diff = max_diff.max((rho_grid.entry(i, j) - rho_closed.entry(i, j)).norm());
        }
    }
    checks.push(("density matrix max entry error".into(), max_diff, 1e-4));

    let mut failures = 0usize;
    for (name, value, limit) in &checks {
        let ok = value.is_finite() && value < limit;
        if !ok {
            failures += 1;
        }
        println!(
            "[{}] {name:<34} {value:10.3e}  (limit {limit:.0e})",
            if ok { "PASS" } else { "FAIL" }
        );
    }
    if failures > 0 {
        Err(Failure::tolerance(format!("{failures} oracle metric(s) out of tolerance")))
    } else {
        println!("all {} oracle checks passed", checks.len());
        Ok(())
    }
}
