//! Scheme execution and CSV emission: fixed column order, deterministic
//! formatting, atomic writes.

use std::io::Write as _;
use std::path::Path;

use cascade_eom::schemes::{self, CorrectionReport};
use cascade_eom::Error as CoreError;

use crate::config::{ResolvedScheme, RunConfig, SweepScale};

/// Column header, fixed order.
pub const CSV_COLUMNS: &str = "param,value,fidelity_raw,fidelity_opt,concurrence,\
constant_phase_rad,residual_kappa1,residual_kappa2,epsilon_amp,b1_v_per_ns,b2_v_per_ns,\
max_voltage_v";

/// One line of results: the swept parameter (name and value in its config
/// units) followed by the restoration metrics of a single run.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub param: String,
    pub value: f64,
    pub fidelity_raw: f64,
    pub fidelity_opt: f64,
    pub concurrence: f64,
    pub constant_phase_rad: f64,
    pub residual_kappa1: f64,
    pub residual_kappa2: f64,
    pub epsilon_amp: f64,
    pub b1_v_per_ns: f64,
    pub b2_v_per_ns: f64,
    pub max_voltage_v: f64,
}

/// 12 significant digits, scientific notation — the determinism contract.
pub fn fmt_value(v: f64) -> String {
    format!("{v:.11e}")
}

impl ResultRow {
    pub fn csv_line(&self) -> String {
        let cells = [
            self.value,
            self.fidelity_raw,
            self.fidelity_opt,
            self.concurrence,
            self.constant_phase_rad,
            self.residual_kappa1,
            self.residual_kappa2,
            self.epsilon_amp,
            self.b1_v_per_ns,
            self.b2_v_per_ns,
            self.max_voltage_v,
        ];
        let mut line = self.param.clone();
        for c in cells {
            line.push(',');
            line.push_str(&fmt_value(c));
        }
        line
    }
}

/// Executes the configured scheme once; `param`/`value` only label the row.
pub fn run_once(
    cfg: &RunConfig,
    param: &str,
    value: f64,
) -> Result<(ResultRow, Vec<String>), RunError> {
    let scheme = cfg.scheme().map_err(RunError::Config)?;
    let report: CorrectionReport = match &scheme {
        ResolvedScheme::RampPair(c) => schemes::scheme1_run(c).map_err(RunError::Physics)?,
        ResolvedScheme::Flip(c) => schemes::scheme2_run(c).map_err(RunError::Physics)?,
    };
    let duration = cfg.feasibility.ramp_duration_ns * 1e-9;
    let peak_rate = report.rate1.abs().max(report.rate2.abs());
    let row = ResultRow {
        param: param.to_string(),
        value,
        fidelity_raw: report.fidelity_raw,
        fidelity_opt: report.fidelity_opt,
        concurrence: report.concurrence,
        constant_phase_rad: report.constant_phase,
        residual_kappa1: report.residual_kappa1,
        residual_kappa2: report.residual_kappa2,
        epsilon_amp: report.amp_ratio_epsilon,
        b1_v_per_ns: report.rate1 * 1e-9,
        b2_v_per_ns: report.rate2 * 1e-9,
        max_voltage_v: schemes::required_max_voltage(peak_rate, duration),
    };
    Ok((row, report.warnings))
}

/// Run with config-vs-physics errors kept apart for exit-code mapping.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Physics(CoreError),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "config error: {e}"),
            RunError::Physics(e) => write!(f, "physics error: {e}"),
        }
    }
}

/// The swept parameter values, endpoint-inclusive.
pub fn sweep_values(from: f64, to: f64, steps: usize, scale: SweepScale) -> Vec<f64> {
    (0..steps)
        .map(|i| {
            let t = i as f64 / (steps - 1) as f64;
            match scale {
                SweepScale::Linear => from + (to - from) * t,
                SweepScale::Log => from * (to / from).powf(t),
            }
        })
        .collect()
}

/// Evaluates every sweep step (concurrently when `jobs != 1`) and returns the
/// rows in sweep order along with deduplicated warnings.
pub fn sweep_rows(
    cfg: &RunConfig,
    jobs: Option<usize>,
) -> Result<(Vec<ResultRow>, Vec<String>), RunError> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| RunError::Config("sweep requires a [sweep] section".into()))?;
    let values = sweep_values(sweep.from, sweep.to, sweep.steps, sweep.scale);
    let evaluate = |&value: &f64| -> Result<(ResultRow, Vec<String>), RunError> {
        let mut step_cfg = cfg.clone();
        step_cfg
            .set_parameter(&sweep.parameter, value)
            .map_err(RunError::Config)?;
        run_once(&step_cfg, &sweep.parameter, value)
    };
    let results: Vec<Result<(ResultRow, Vec<String>), RunError>> = match jobs {
        Some(1) => values.iter().map(evaluate).collect(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| RunError::Config(format!("--jobs: {e}")))?;
            pool.install(|| {
                use rayon::prelude::*;
                values.par_iter().map(evaluate).collect()
            })
        }
        None => {
            use rayon::prelude::*;
            values.par_iter().map(evaluate).collect()
        }
    };
    let mut rows = Vec::with_capacity(results.len());
    let mut warnings: Vec<String> = Vec::new();
    for r in results {
        let (row, mut w) = r?;
        rows.push(row);
        warnings.append(&mut w);
    }
    warnings.sort();
    warnings.dedup();
    Ok((rows, warnings))
}

/// The full CSV document: `#`-prefixed header block with the tool version and
/// the resolved configuration, then the column header and the rows.
pub fn csv_document(cfg: &RunConfig, rows: &[ResultRow]) -> String {
    let mut doc = String::new();
    doc.push_str(&format!(
        "# {} {}\n",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION")
    ));
    for line in cfg.resolved_toml().lines() {
        doc.push_str("# ");
        doc.push_str(line);
        doc.push('\n');
    }
    doc.push_str(CSV_COLUMNS);
    doc.push('\n');
    for row in rows {
        doc.push_str(&row.csv_line());
        doc.push('\n');
    }
    doc
}

/// Writes atomically: a temp file in the destination directory, then rename.
pub fn write_csv(path: &Path, document: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(document.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
