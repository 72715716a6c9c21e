//! Strict JSON configuration: sections `grid`, `scheme`, `experiment`,
//! `output`; unknown keys are rejected. Each subcommand validates the
//! fields it needs and reports the offending path.

use std::path::Path;

use chsplit_core::propagators::{InnerOrder, SubstepControl};
use chsplit_core::{InitialData, SchemeConfig, SchemeKind, TrigMode};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<SchemeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n_points: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    pub kind: SchemeKindCfg,
    pub nu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substep: Option<SubstepSection>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKindCfg {
    StrangLnl,
    StrangShifted,
    LieFirstOrder,
    Imex,
}

impl SchemeKindCfg {
    pub fn to_core(self) -> SchemeKind {
        match self {
            SchemeKindCfg::StrangLnl => SchemeKind::StrangLnl,
            SchemeKindCfg::StrangShifted => SchemeKind::StrangShifted,
            SchemeKindCfg::LieFirstOrder => SchemeKind::LieFirstOrder,
            SchemeKindCfg::Imex => SchemeKind::Imex,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubstepSection {
    #[serde(default = "default_safety")]
    pub safety: f64,
    #[serde(default = "default_max_substeps")]
    pub max_substeps: usize,
    #[serde(default)]
    pub inner_order: InnerOrderCfg,
}

fn default_safety() -> f64 {
    0.5
}

fn default_max_substeps() -> usize {
    1_000_000
}

impl Default for SubstepSection {
    fn default() -> Self {
        SubstepSection {
            safety: default_safety(),
            max_substeps: default_max_substeps(),
            inner_order: InnerOrderCfg::Rk4,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum InnerOrderCfg {
    #[default]
    Rk4,
}

impl SubstepSection {
    pub fn to_core(self) -> SubstepControl {
        SubstepControl {
            safety: self.safety,
            max_substeps: self.max_substeps,
            inner_order: match self.inner_order {
                InnerOrderCfg::Rk4 => InnerOrder::Rk4,
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_data: Option<InitialDataCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance_band: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taus: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSection>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDataCfg {
    SingleMode {
        amplitude: f64,
        wavenumber: u32,
    },
    TrigPoly {
        modes: Vec<TrigModeCfg>,
    },
    RandomBandlimited {
        seed: u64,
        band: u32,
        amplitude: f64,
    },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigModeCfg {
    pub k: u32,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

impl InitialDataCfg {
    pub fn to_core(&self) -> InitialData {
        match self {
            InitialDataCfg::SingleMode {
                amplitude,
                wavenumber,
            } => InitialData::SingleMode {
                amplitude: *amplitude,
                wavenumber: *wavenumber,
            },
            InitialDataCfg::TrigPoly { modes } => InitialData::TrigPoly {
                modes: modes
                    .iter()
                    .map(|m| TrigMode {
                        wavenumber: m.k,
                        cos_amp: m.cos,
                        sin_amp: m.sin,
                    })
                    .collect(),
            },
            InitialDataCfg::RandomBandlimited {
                seed,
                band,
                amplitude,
            } => InitialData::RandomBandlimited {
                seed: *seed,
                band: *band,
                amplitude: *amplitude,
            },
        }
    }

    /// Pin any randomness into explicit coefficients for the config echo.
    pub fn materialized(&self) -> InitialDataCfg {
        InitialDataCfg::TrigPoly {
            modes: self
                .to_core()
                .materialize()
                .into_iter()
                .map(|m| TrigModeCfg {
                    k: m.wavenumber,
                    cos: m.cos_amp,
                    sin: m.sin_amp,
                })
                .collect(),
        }
    }

    pub fn validate(&self, path: &str, max_wavenumber: Option<u32>) -> Result<(), CliError> {
        let check_k = |k: u32, where_: String| -> Result<(), CliError> {
            if k < 1 {
                return Err(CliError::config(where_.clone(), "wavenumber must be >= 1"));
            }
            if let Some(max_k) = max_wavenumber {
                if k >= max_k {
                    return Err(CliError::config(
                        where_,
                        format!("wavenumber {k} does not fit the grid band (must be < {max_k})"),
                    ));
                }
            }
            Ok(())
        };
        match self {
            InitialDataCfg::SingleMode { wavenumber, .. } => {
                check_k(*wavenumber, format!("{path}.single_mode.wavenumber"))?;
            }
            InitialDataCfg::TrigPoly { modes } => {
                for (i, m) in modes.iter().enumerate() {
                    check_k(m.k, format!("{path}.trig_poly.modes[{i}].k"))?;
                }
            }
            InitialDataCfg::RandomBandlimited {
                band, amplitude, ..
            } => {
                if *band < 1 {
                    return Err(CliError::config(
                        format!("{path}.random_bandlimited.band"),
                        "band must be >= 1",
                    ));
                }
                check_k(*band, format!("{path}.random_bandlimited.band"))?;
                if !amplitude.is_finite() {
                    return Err(CliError::config(
                        format!("{path}.random_bandlimited.amplitude"),
                        "amplitude must be finite",
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    #[serde(default = "default_kernel_nu")]
    pub nu: f64,
    pub betas: Vec<f64>,
    pub scans: Vec<KernelScanCfg>,
}

fn default_kernel_nu() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelScanCfg {
    pub variant: KernelVariantCfg,
    pub p: PValue,
    /// Ladder override for this scan; falls back to the section-level
    /// `betas`. Decay exponents are asymptotic, so a scan may need a
    /// smaller-β window than the rest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum KernelVariantCfg {
    Plain,
    SecondDeriv,
}

impl KernelVariantCfg {
    pub fn to_core(self) -> chsplit_core::KernelVariant {
        match self {
            KernelVariantCfg::Plain => chsplit_core::KernelVariant::Plain,
            KernelVariantCfg::SecondDeriv => chsplit_core::KernelVariant::SecondDeriv,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            KernelVariantCfg::Plain => "plain",
            KernelVariantCfg::SecondDeriv => "second_deriv",
        }
    }
}

/// Lebesgue exponent in JSON: a number, or the string `"inf"`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PValue {
    Number(f64),
    Text(String),
}

impl PValue {
    pub fn resolve(&self, path: &str) -> Result<f64, CliError> {
        match self {
            PValue::Number(p) if *p >= 1.0 && p.is_finite() => Ok(*p),
            PValue::Number(p) => Err(CliError::config(
                path.to_string(),
                format!("p must lie in [1, inf], got {p}"),
            )),
            PValue::Text(s) if s == "inf" => Ok(f64::INFINITY),
            PValue::Text(s) => Err(CliError::config(
                path.to_string(),
                format!("p must be a number or \"inf\", got \"{s}\""),
            )),
        }
    }

    pub fn label(&self) -> String {
        match self {
            PValue::Number(p) => format!("{p}"),
            PValue::Text(s) => s.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<u64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(path.display().to_string(), e.to_string()))
    }

    pub fn grid(&self) -> Result<&GridSection, CliError> {
        self.grid
            .as_ref()
            .ok_or_else(|| CliError::config("grid", "section is required for this command"))
    }

    pub fn scheme(&self) -> Result<&SchemeSection, CliError> {
        self.scheme
            .as_ref()
            .ok_or_else(|| CliError::config("scheme", "section is required for this command"))
    }

    pub fn experiment(&self) -> Result<&ExperimentSection, CliError> {
        self.experiment
            .as_ref()
            .ok_or_else(|| CliError::config("experiment", "section is required for this command"))
    }
}

impl SchemeSection {
    /// Assemble the core configuration for time-marching commands
    /// (needs `tau` and `n_steps`).
    pub fn to_core_config(&self, grid_points: usize) -> Result<SchemeConfig, CliError> {
        let tau = self
            .tau
            .ok_or_else(|| CliError::config("scheme.tau", "required for this command"))?;
        let n_steps = self
            .n_steps
            .ok_or_else(|| CliError::config("scheme.n_steps", "required for this command"))?;
        let cfg = SchemeConfig {
            nu: self.nu,
            tau,
            scheme: self.kind.to_core(),
            n_steps: n_steps as usize,
            grid_points,
            substep: self.substep.unwrap_or_default().to_core(),
        };
        cfg.validate()
            .map_err(|e| CliError::config("scheme", e.to_string()))?;
        Ok(cfg)
    }
}
