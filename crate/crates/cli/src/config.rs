//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("config error in `{field}`: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default = "defaults::master_seed")]
    pub master_seed: u64,
    pub grid: GridConfig,
    #[serde(default)]
    pub region: RegionConfig,
    #[serde(default)]
    pub window: WindowConfig,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub reconstruct: ReconstructConfig,
    #[serde(default)]
    pub montecarlo: MonteCarloConfig,
    #[serde(default)]
    pub certify: CertifyConfig,
    #[serde(default)]
    pub witness: WitnessConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RegionConfig {
    /// Disk of `radius` grid points around `center` (grid center if absent).
    Disk {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<[usize; 2]>,
        radius: f64,
    },
    Full,
    /// Text file with `len` lines of `len` characters; `1` or `#` marks a
    /// point inside the region. Line index is time, column index frequency.
    Mask {
        path: PathBuf,
    },
}

impl Default for RegionConfig {
    fn default() -> Self {
        RegionConfig::Disk {
            center: None,
            radius: 120.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum WindowConfig {
    #[default]
    Gaussian,
    /// `TFRS` signal file, normalized on load.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingConfig {
    pub gamma: f64,
    pub r: usize,
    pub distinct: bool,
    /// Covering cell side in grid points; `round(√len)` if absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cell_px: Option<usize>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            gamma: 0.5,
            r: 300,
            distinct: true,
            cell_px: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReconstructConfig {
    pub epsilon_targets: Vec<f64>,
    /// Adds a row for a random function in `V_N`.
    pub include_vn: bool,
    /// Writes `|V_φ f|` grids and the sample mask as CSV.
    pub dump_grids: bool,
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        ReconstructConfig {
            epsilon_targets: vec![0.0335, 1.8252e-9],
            include_vn: true,
            dump_grids: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloConfig {
    pub trials: usize,
    pub nu_grid: Vec<f64>,
    pub r_grid: Vec<usize>,
    /// Target failure probability for the `required_samples` column.
    pub delta: f64,
    /// Covering threshold `a = covering_factor / |Ω|`.
    pub covering_factor: f64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig {
            trials: 2000,
            nu_grid: vec![0.2, 0.3, 0.5],
            r_grid: vec![250, 1000, 4000],
            delta: 0.05,
            covering_factor: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertifyConfig {
    pub eps: f64,
    pub nu: f64,
    pub batch: usize,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            eps: 1e-4,
            nu: 0.3,
            batch: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WitnessConfig {
    pub eps: f64,
    pub eta: f64,
    /// One-based eigenindex; the largest `M` with `α_M > 1 − ε` if absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Concentration of the function used for the equal-samples witness.
    pub f_eps: f64,
    pub r: usize,
}

impl Default for WitnessConfig {
    fn default() -> Self {
        WitnessConfig {
            eps: 0.05,
            eta: 4.0,
            m: None,
            f_eps: 0.02,
            r: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub cg_tol: f64,
    pub eig_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            cg_tol: 1e-12,
            eig_residual: 1e-8,
        }
    }
}

mod defaults {
    pub fn master_seed() -> u64 {
        2024
    }
}

impl Default for ExperimentConfig {
    /// The L = 480 disk experiment.
    fn default() -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            master_seed: defaults::master_seed(),
            grid: GridConfig { len: 480 },
            region: RegionConfig::default(),
            window: WindowConfig::default(),
            sampling: SamplingConfig::default(),
            reconstruct: ReconstructConfig::default(),
            montecarlo: MonteCarloConfig::default(),
            certify: CertifyConfig::default(),
            witness: WitnessConfig::default(),
            tolerances: Tolerances::default(),
            base_dir: None,
        }
    }
}

fn check(cond: bool, field: &str, message: impl FnOnce() -> String) -> Result<(), ConfigError> {
    if cond {
        Ok(())
    } else {
        Err(ConfigError::new(field, message()))
    }
}

fn unit_open(x: f64) -> bool {
    x > 0.0 && x < 1.0
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .map(|s| {
                    let line = text[..s.start].matches('\n').count() + 1;
                    format!("line {line}")
                })
                .unwrap_or_else(|| "<document>".into());
            ConfigError::new(field, e.message().trim().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("--config", format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        match &self.base_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        check(self.schema_version == SCHEMA_VERSION, "schema_version", || {
            format!(
                "unsupported version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )
        })?;
        let len = self.grid.len;
        check(len >= 4, "grid.len", || format!("{len} is below the minimum of 4"))?;
        match &self.region {
            RegionConfig::Disk { center, radius } => {
                check(*radius > 0.0 && radius.is_finite(), "region.radius", || {
                    format!("{radius} must be positive")
                })?;
                check(2.0 * radius < len as f64, "region.radius", || {
                    format!("diameter {} does not fit in the {len}-point grid", 2.0 * radius)
                })?;
                if let Some([m, n]) = center {
                    check(*m < len && *n < len, "region.center", || {
                        format!("[{m}, {n}] is off the grid")
                    })?;
                }
            }
            RegionConfig::Full => {}
            RegionConfig::Mask { path } => {
                check(!path.as_os_str().is_empty(), "region.path", || "empty path".into())?;
            }
        }
        if let WindowConfig::File { path } = &self.window {
            check(!path.as_os_str().is_empty(), "window.path", || "empty path".into())?;
        }
        let s = &self.sampling;
        check(unit_open(s.gamma), "sampling.gamma", || {
            format!("{} is not in (0, 1)", s.gamma)
        })?;
        check(s.r >= 1, "sampling.r", || "must be at least 1".into())?;
        if let Some(c) = s.cell_px {
            check(c >= 1, "sampling.cell_px", || "must be at least 1".into())?;
        }
        for (i, e) in self.reconstruct.epsilon_targets.iter().enumerate() {
            check(unit_open(*e), &format!("reconstruct.epsilon_targets[{i}]"), || {
                format!("{e} is not in (0, 1)")
            })?;
        }
        let mc = &self.montecarlo;
        check(mc.trials >= 1, "montecarlo.trials", || "must be at least 1".into())?;
        for (i, nu) in mc.nu_grid.iter().enumerate() {
            check(
                *nu >= 0.0 && nu.is_finite(),
                &format!("montecarlo.nu_grid[{i}]"),
                || format!("{nu} must be non-negative"),
            )?;
        }
        for (i, r) in mc.r_grid.iter().enumerate() {
            check(*r >= 1, &format!("montecarlo.r_grid[{i}]"), || {
                "must be at least 1".into()
            })?;
        }
        check(unit_open(mc.delta), "montecarlo.delta", || {
            format!("{} is not in (0, 1)", mc.delta)
        })?;
        check(mc.covering_factor > 1.0, "montecarlo.covering_factor", || {
            format!("{} must exceed 1 (a > 1/|Omega|)", mc.covering_factor)
        })?;
        let c = &self.certify;
        check(unit_open(c.eps), "certify.eps", || {
            format!("{} is not in (0, 1)", c.eps)
        })?;
        check(c.batch >= 1, "certify.batch", || "must be at least 1".into())?;
        check(c.nu > 0.0 && c.nu.is_finite(), "certify.nu", || {
            format!("{} must be positive", c.nu)
        })?;
        let w = &self.witness;
        check(unit_open(w.eps), "witness.eps", || {
            format!("{} is not in (0, 1)", w.eps)
        })?;
        check(w.eta > 1.0 && w.eta < 1.0 / w.eps, "witness.eta", || {
            format!("{} is not in (1, 1/eps) = (1, {})", w.eta, 1.0 / w.eps)
        })?;
        check(w.f_eps > 0.0 && w.f_eps < w.eps, "witness.f_eps", || {
            format!("{} must be in (0, witness.eps)", w.f_eps)
        })?;
        check(w.r >= 1, "witness.r", || "must be at least 1".into())?;
        if let Some(m) = w.m {
            check(m >= 1 && m <= len, "witness.m", || format!("{m} is not in [1, {len}]"))?;
        }
        let t = &self.tolerances;
        check(t.cg_tol > 0.0, "tolerances.cg_tol", || {
            format!("{} must be positive", t.cg_tol)
        })?;
        check(t.eig_residual > 0.0, "tolerances.eig_residual", || {
            format!("{} must be positive", t.eig_residual)
        })?;
        Ok(())
    }
}
