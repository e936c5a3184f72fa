//! Run configuration: TOML sections with unit-suffixed keys, strict rejection
//! of unknown keys, and resolution into the core parameter types.

use cascade_eom::schemes::{Scheme1Config, Scheme2Config};
use cascade_eom::{CellParams, DotParams};
use serde::{Deserialize, Serialize};

/// Parameters a sweep may vary.
pub const SWEEP_PARAMETERS: [&str; 8] = [
    "delta_l1", "delta_l2", "delta_t", "fss_uev", "b1_scale", "b2_scale", "L1", "L2",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub dot: DotSection,
    pub cell: CellSection,
    /// Second modulator; omit to reuse `[cell]` for both.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cell2: Option<CellSection>,
    pub scheme: SchemeSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    pub output: OutputSection,
    pub feasibility: FeasibilitySection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DotSection {
    pub photon1_energy_ev: f64,
    pub photon2_energy_ev: f64,
    pub gamma_per_s: f64,
    pub fss_uev: f64,
}

impl Default for DotSection {
    fn default() -> Self {
        DotSection {
            photon1_energy_ev: 1.3980,
            photon2_energy_ev: 1.4000,
            gamma_per_s: 1.0e9,
            fss_uev: 1.0,
        }
    }
}

/// One modulator, in datasheet form (`alpha_mrad_per_v` at `wavelength_nm`
/// with index `n0`) or direct form (`eta_per_v` and `v0_m_per_s`); the two
/// forms are mutually exclusive.  `thickness_m` always applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CellSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_mrad_per_v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wavelength_nm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n0: Option<f64>,
    pub thickness_m: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_per_v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v0_m_per_s: Option<f64>,
}

impl Default for CellSection {
    fn default() -> Self {
        CellSection {
            alpha_mrad_per_v: None,
            wavelength_nm: None,
            n0: None,
            thickness_m: 0.02,
            eta_per_v: None,
            v0_m_per_s: None,
        }
    }
}

impl CellSection {
    pub fn resolve(&self, which: &str) -> Result<CellParams, String> {
        let direct = self.eta_per_v.is_some() || self.v0_m_per_s.is_some();
        let cell = if direct {
            if self.alpha_mrad_per_v.is_some() || self.wavelength_nm.is_some() || self.n0.is_some()
            {
                return Err(format!(
                    "[{which}]: datasheet keys (alpha_mrad_per_v, wavelength_nm, n0) cannot be \
                     combined with the direct form (eta_per_v, v0_m_per_s)"
                ));
            }
            let (Some(eta), Some(v0)) = (self.eta_per_v, self.v0_m_per_s) else {
                return Err(format!(
                    "[{which}]: the direct form needs both eta_per_v and v0_m_per_s"
                ));
            };
            CellParams::new(eta, self.thickness_m, v0)
        } else {
            let alpha = self.alpha_mrad_per_v.unwrap_or(52.0);
            let wavelength = self.wavelength_nm.unwrap_or(830.0);
            let n0 = self.n0.unwrap_or(1.5);
            CellParams::from_datasheet(alpha * 1e-3, wavelength * 1e-9, n0, self.thickness_m)
        };
        cell.map_err(|e| format!("[{which}]: {e}"))
    }

    /// The section with every key it resolves through spelled out, so an
    /// echoed config re-parses to the identical run.
    fn resolved(&self) -> CellSection {
        let mut out = self.clone();
        if out.eta_per_v.is_none() && out.v0_m_per_s.is_none() {
            out.alpha_mrad_per_v = Some(out.alpha_mrad_per_v.unwrap_or(52.0));
            out.wavelength_nm = Some(out.wavelength_nm.unwrap_or(830.0));
            out.n0 = Some(out.n0.unwrap_or(1.5));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeSection {
    /// 1 = reverse ramp pair, 2 = polarization flip plus one cell.
    pub kind: u8,
    pub l1_m: f64,
    pub l2_m: f64,
    pub bias1_v: f64,
    pub bias2_v: f64,
    pub delta_t_ns: f64,
    pub delta_l1_mm: f64,
    pub delta_l2_mm: f64,
    pub b1_scale: f64,
    pub b2_scale: f64,
}

impl Default for SchemeSection {
    fn default() -> Self {
        SchemeSection {
            kind: 1,
            l1_m: 0.5,
            l2_m: 0.5,
            bias1_v: 0.0,
            bias2_v: 0.0,
            delta_t_ns: 0.0,
            delta_l1_mm: 0.0,
            delta_l2_mm: 0.0,
            b1_scale: 1.0,
            b2_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepScale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: String,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    #[serde(default = "default_scale")]
    pub scale: SweepScale,
}

fn default_scale() -> SweepScale {
    SweepScale::Linear
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    /// Only "csv" is supported; the key exists so the intent is explicit.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeasibilitySection {
    pub ramp_duration_ns: f64,
    pub n_cells: usize,
    pub slew_min_v_per_ns: f64,
    pub slew_max_v_per_ns: f64,
    pub voltage_cap_v: f64,
}

impl Default for FeasibilitySection {
    fn default() -> Self {
        FeasibilitySection {
            ramp_duration_ns: 5.0,
            n_cells: 1,
            slew_min_v_per_ns: 25.0,
            slew_max_v_per_ns: 35.0,
            voltage_cap_v: 300.0,
        }
    }
}

/// A run resolved down to core types.
#[derive(Debug, Clone)]
pub enum ResolvedScheme {
    RampPair(Scheme1Config),
    Flip(Scheme2Config),
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, String> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        match self.scheme.kind {
            1 => {}
            2 => {
                if self.scheme.bias1_v != 0.0 || self.scheme.bias2_v != 0.0 {
                    return Err("[scheme]: bias voltages do not apply to kind = 2".into());
                }
                if self.scheme.delta_t_ns != 0.0 {
                    return Err(
                        "[scheme]: delta_t_ns does not apply to kind = 2 (single ramp)".into(),
                    );
                }
                if self.scheme.b2_scale != 1.0 {
                    return Err("[scheme]: b2_scale does not apply to kind = 2".into());
                }
                if self.cell2.is_some() {
                    return Err("[cell2]: kind = 2 uses a single cell".into());
                }
            }
            k => return Err(format!("[scheme]: kind must be 1 or 2, got {k}")),
        }
        if let Some(sweep) = &self.sweep {
            if !SWEEP_PARAMETERS.contains(&sweep.parameter.as_str()) {
                return Err(format!(
                    "[sweep]: unknown parameter {:?}; expected one of {}",
                    sweep.parameter,
                    SWEEP_PARAMETERS.join(", ")
                ));
            }
            if self.scheme.kind == 2
                && matches!(sweep.parameter.as_str(), "delta_t" | "b2_scale")
            {
                return Err(format!(
                    "[sweep]: parameter {:?} does not apply to kind = 2",
                    sweep.parameter
                ));
            }
            if !sweep.from.is_finite() || !sweep.to.is_finite() {
                return Err("[sweep]: bounds must be finite".into());
            }
            if sweep.steps < 2 {
                return Err(format!("[sweep]: steps must be at least 2, got {}", sweep.steps));
            }
            if sweep.scale == SweepScale::Log && (sweep.from <= 0.0 || sweep.to <= 0.0) {
                return Err("[sweep]: log scale needs strictly positive bounds".into());
            }
        }
        if self.feasibility.n_cells == 0 {
            return Err("[feasibility]: n_cells must be at least 1".into());
        }
        if let Some(format) = &self.output.format {
            if format != "csv" {
                return Err(format!("[output]: unsupported format {format:?}; only \"csv\""));
            }
        }
        Ok(())
    }

    pub fn dot(&self) -> Result<DotParams, String> {
        DotParams::from_energies(
            self.dot.photon1_energy_ev,
            self.dot.photon2_energy_ev,
            self.dot.gamma_per_s,
            self.dot.fss_uev,
        )
        .map_err(|e| format!("[dot]: {e}"))
    }

    pub fn cells(&self) -> Result<(CellParams, CellParams), String> {
        let c1 = self.cell.resolve("cell")?;
        let c2 = match &self.cell2 {
            Some(c) => c.resolve("cell2")?,
            None => c1,
        };
        Ok((c1, c2))
    }

    /// Builds the core scheme configuration this run describes.
    pub fn scheme(&self) -> Result<ResolvedScheme, String> {
        let dot = self.dot()?;
        let (cell1, cell2) = self.cells()?;
        let s = &self.scheme;
        Ok(match s.kind {
            1 => {
                let mut cfg = Scheme1Config::new(dot, cell1, cell2);
                cfg.l1 = s.l1_m;
                cfg.l2 = s.l2_m;
                cfg.bias1 = s.bias1_v;
                cfg.bias2 = s.bias2_v;
                cfg.delta_t = s.delta_t_ns * 1e-9;
                cfg.delta_l1 = s.delta_l1_mm * 1e-3;
                cfg.delta_l2 = s.delta_l2_mm * 1e-3;
                cfg.b1_scale = s.b1_scale;
                cfg.b2_scale = s.b2_scale;
                ResolvedScheme::RampPair(cfg)
            }
            _ => {
                let mut cfg = Scheme2Config::new(dot, cell1);
                cfg.l1 = s.l1_m;
                cfg.l2 = s.l2_m;
                cfg.delta_l1 = s.delta_l1_mm * 1e-3;
                cfg.delta_l2 = s.delta_l2_mm * 1e-3;
                cfg.b_scale = s.b1_scale;
                ResolvedScheme::Flip(cfg)
            }
        })
    }

    /// Sets the value of a sweep parameter (in its config units).
    pub fn set_parameter(&mut self, name: &str, value: f64) -> Result<(), String> {
        match name {
            "delta_l1" => self.scheme.delta_l1_mm = value,
            "delta_l2" => self.scheme.delta_l2_mm = value,
            "delta_t" => self.scheme.delta_t_ns = value,
            "fss_uev" => self.dot.fss_uev = value,
            "b1_scale" => self.scheme.b1_scale = value,
            "b2_scale" => self.scheme.b2_scale = value,
            "L1" => self.scheme.l1_m = value,
            "L2" => self.scheme.l2_m = value,
            other => return Err(format!("unknown sweep parameter {other:?}")),
        }
        Ok(())
    }

    /// The configuration with every applied default spelled out, as TOML.
    pub fn resolved_toml(&self) -> String {
        let mut out = self.clone();
        out.cell = out.cell.resolved();
        out.cell2 = out.cell2.as_ref().map(|c| c.resolved());
        toml::to_string_pretty(&out).expect("resolved config serializes")
    }
}
