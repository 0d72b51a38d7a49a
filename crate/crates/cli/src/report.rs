//! Run reports: `report.json`, `summary.txt`, `timings.json` and CSV side
//! files. Everything except the timings is a function of the config.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tfsample::signal_io::save_signal;
use tfsample::Signal;

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub verb: String,
    pub config: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub reconstruction: Vec<ReconRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub montecarlo: Vec<MonteCarloRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessSummary>,
    pub artifacts: Vec<String>,
    #[serde(skip)]
    pub timings: Vec<(String, f64)>,
}

impl RunReport {
    pub fn new(verb: &str, config: &ExperimentConfig) -> Self {
        RunReport {
            tool: "tfsample",
            version: env!("CARGO_PKG_VERSION"),
            verb: verb.to_string(),
            config: config.clone(),
            spectrum: None,
            sampling: None,
            reconstruction: Vec::new(),
            montecarlo: Vec::new(),
            certificate: None,
            witness: None,
            artifacts: Vec::new(),
            timings: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSummary {
    pub len: usize,
    pub region_label: String,
    pub region_points: usize,
    /// Alternating run lengths of the row-major mask, starting with an
    /// outside run.
    pub region_rle: Vec<usize>,
    pub omega_measure: f64,
    pub trace: f64,
    pub gamma: f64,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_n_plus_1: Option<f64>,
    pub alpha_max: f64,
    pub max_eig_residual: f64,
    /// Eigenvalue-count interval for `#{α_k > 1 − δ}` at `δ = 1 − γ`.
    pub count_interval: CountSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct CountSummary {
    pub delta: f64,
    pub count: usize,
    pub lower: f64,
    pub upper: f64,
    pub contains: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SamplingSummary {
    pub r: usize,
    pub distinct: bool,
    pub seed: u64,
    pub bessel_b: f64,
    pub vn_frame_lower: f64,
    pub vn_frame_upper: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconRow {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_target: Option<f64>,
    pub seed: u64,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub within_bound: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloRow {
    pub nu: f64,
    pub r: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub empirical_freq: f64,
    pub sigma: f64,
    /// `min(1, N exp(−ν² r / (|Ω|(1+ν/3))))`
    pub theory_bound: f64,
    pub subspace_bound_raw: f64,
    pub within_4_sigma: bool,
    pub covering_freq: f64,
    pub covering_bound: f64,
    pub success_probability: f64,
    /// Absent for `ν = 0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub required_samples: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateSummary {
    pub r: usize,
    pub seed: u64,
    pub cell_px: usize,
    pub n0: usize,
    pub bessel_b: f64,
    pub c_phi: f64,
    pub eps: f64,
    pub nu: f64,
    pub gamma: f64,
    pub eps_max: f64,
    pub nu_max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_lemma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_theorem: Option<f64>,
    pub lemma_vacuous: bool,
    pub theorem_vacuous: bool,
    /// Lower constant the batch is checked against: the larger non-vacuous
    /// `A`, or 0.
    pub a_used: f64,
    /// Lower bound on the probability that the draw satisfies the
    /// certificate's hypotheses; not clamped.
    pub success_probability: f64,
    /// `success_probability ≤ 0`: `r` is too small for the probabilistic
    /// guarantee, whatever the sign of `A`.
    pub probability_vacuous: bool,
    pub required_samples: u64,
    pub batch: Vec<BatchRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchRow {
    pub seed: u64,
    pub epsilon: f64,
    /// `Σ_j |V_φ f(λ_j)|² / ‖f‖²`
    pub ratio: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessSummary {
    pub eps: f64,
    pub eta: f64,
    pub m: usize,
    pub alpha_m: f64,
    pub delta: f64,
    pub f_concentration: f64,
    pub psi_m_concentration: f64,
    pub delta_h_concentration: f64,
    pub alias_r: usize,
    pub alias_seed: u64,
    pub alias_delta: f64,
    pub alias_complement_dim: usize,
    pub alias_max_sample_difference: f64,
    pub alias_p_opt_difference: f64,
    pub alias_f_eps: f64,
    pub alias_f_tilde_eps: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv error on {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("cannot write signal {path}: {source}")]
    Signal { path: PathBuf, source: tfsample::Error },
    #[error("non-finite value in report: {0}")]
    NonFinite(String),
}

/// Files under one output directory.
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, ReportError> {
        fs::create_dir_all(root).map_err(|source| ReportError::Io {
            path: root.to_path_buf(),
            source,
        })?;
        Ok(OutputDir {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<(), ReportError> {
        let path = self.path(name);
        self.ensure_parent(&path)?;
        fs::write(&path, text).map_err(|source| ReportError::Io { path, source })
    }

    fn ensure_parent(&self, path: &Path) -> Result<(), ReportError> {
        match path.parent() {
            Some(parent) => fs::create_dir_all(parent).map_err(|source| ReportError::Io {
                path: parent.to_path_buf(),
                source,
            }),
            None => Ok(()),
        }
    }

    /// `TFRS` binary signal file.
    pub fn write_signal(&self, name: &str, f: &Signal) -> Result<(), ReportError> {
        let path = self.path(name);
        self.ensure_parent(&path)?;
        save_signal(&path, f).map_err(|source| ReportError::Signal { path, source })
    }

    /// Rows of already formatted cells under a header.
    pub fn write_csv<R, S>(&self, name: &str, header: &[&str], rows: R) -> Result<(), ReportError>
    where
        R: IntoIterator<Item = Vec<S>>,
        S: AsRef<str>,
    {
        let path = self.path(name);
        let err = |source| ReportError::Csv {
            path: path.clone(),
            source,
        };
        let mut w = csv::Writer::from_path(&path).map_err(err)?;
        w.write_record(header).map_err(err)?;
        for row in rows {
            w.write_record(row.iter().map(AsRef::as_ref)).map_err(err)?;
        }
        w.flush().map_err(|source| ReportError::Io {
            path: path.clone(),
            source,
        })
    }

    /// `len × len` matrix without header, one grid row (time index) per line.
    pub fn write_grid(&self, name: &str, len: usize, values: &[f64]) -> Result<(), ReportError> {
        let path = self.path(name);
        let err = |source| ReportError::Csv {
            path: path.clone(),
            source,
        };
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(&path)
            .map_err(err)?;
        for row in values.chunks(len) {
            w.write_record(row.iter().map(|v| format!("{v:e}"))).map_err(err)?;
        }
        w.flush().map_err(|source| ReportError::Io {
            path: path.clone(),
            source,
        })
    }
}

fn check_finite(value: &serde_json::Value, at: &str) -> Result<(), ReportError> {
    match value {
        serde_json::Value::Null => Err(ReportError::NonFinite(at.to_string())),
        serde_json::Value::Array(items) => items
            .iter()
            .enumerate()
            .try_for_each(|(i, v)| check_finite(v, &format!("{at}[{i}]"))),
        serde_json::Value::Object(map) => map.iter().try_for_each(|(k, v)| check_finite(v, &format!("{at}.{k}"))),
        _ => Ok(()),
    }
}

impl RunReport {
    /// JSON with non-finite numbers rejected (serde_json writes them as
    /// `null`).
    pub fn to_json(&self) -> Result<String, ReportError> {
        let value = serde_json::to_value(self).expect("report serializes");
        check_finite(&value, "report")?;
        Ok(serde_json::to_string_pretty(&value).expect("report serializes") + "\n")
    }

    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "tfsample {} {}", self.version, self.verb);
        let _ = writeln!(s, "master_seed {}", self.config.master_seed);
        if let Some(sp) = &self.spectrum {
            let _ = writeln!(s, "\n[spectrum]");
            let _ = writeln!(
                s,
                "L = {}, region {} with {} points, |Omega| = {}",
                sp.len, sp.region_label, sp.region_points, sp.omega_measure
            );
            let _ = writeln!(s, "trace H = {:.12}", sp.trace);
            let _ = writeln!(s, "N = {} at gamma = {}", sp.n, sp.gamma);
            if let (Some(a), Some(b)) = (sp.alpha_n, sp.alpha_n_plus_1) {
                let _ = writeln!(s, "alpha_N = {a:.6}, alpha_N+1 = {b:.6}");
            }
            let c = &sp.count_interval;
            let _ = writeln!(
                s,
                "#{{alpha > {:.3}}} = {} in [{:.3}, {:.3}]: {}",
                1.0 - c.delta,
                c.count,
                c.lower,
                c.upper,
                c.contains
            );
        }
        if let Some(sm) = &self.sampling {
            let _ = writeln!(s, "\n[sampling]");
            let _ = writeln!(s, "r = {} (distinct: {}), seed {}", sm.r, sm.distinct, sm.seed);
            let _ = writeln!(s, "Bessel bound B = {:.6}", sm.bessel_b);
            let _ = writeln!(
                s,
                "frame bounds on V_N: [{:.6}, {:.6}]",
                sm.vn_frame_lower, sm.vn_frame_upper
            );
        }
        if !self.reconstruction.is_empty() {
            let _ = writeln!(s, "\n[reconstruction]");
            let _ = writeln!(
                s,
                "{:<14} {:>12} {:>14} {:>14} {:>6}  status",
                "function", "epsilon", "rel. error", "bound", "iter"
            );
            for row in &self.reconstruction {
                let num = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.5e}"));
                let _ = writeln!(
                    s,
                    "{:<14} {:>12} {:>14} {:>14} {:>6}  {}",
                    row.label,
                    num(row.epsilon),
                    num(row.relative_error),
                    num(row.error_bound),
                    row.iterations.map_or("-".to_string(), |i| i.to_string()),
                    row.status
                );
            }
        }
        if !self.montecarlo.is_empty() {
            let _ = writeln!(s, "\n[montecarlo]");
            let _ = writeln!(
                s,
                "{:>6} {:>7} {:>10} {:>10} {:>10} {:>10}  ok",
                "nu", "r", "freq", "bound", "cov freq", "cov bound"
            );
            for row in &self.montecarlo {
                let _ = writeln!(
                    s,
                    "{:>6} {:>7} {:>10.4} {:>10.4} {:>10.4} {:>10.3e}  {}",
                    row.nu,
                    row.r,
                    row.empirical_freq,
                    row.theory_bound,
                    row.covering_freq,
                    row.covering_bound,
                    row.within_4_sigma
                );
            }
        }
        if let Some(c) = &self.certificate {
            let _ = writeln!(s, "\n[certificate]");
            let _ = writeln!(
                s,
                "r = {}, N0 = {} (cell {} px), B = {:.6}, C_phi = {:.6}",
                c.r, c.n0, c.cell_px, c.bessel_b, c.c_phi
            );
            let _ = writeln!(s, "eps = {}, nu = {}, gamma = {}", c.eps, c.nu, c.gamma);
            let fmt = |a: Option<f64>, vac: bool| match a {
                Some(a) if vac => format!("{a:.6} (vacuous)"),
                Some(a) => format!("{a:.6}"),
                None => "n/a (inadmissible)".to_string(),
            };
            let _ = writeln!(s, "A (projection lemma) = {}", fmt(c.a_lemma, c.lemma_vacuous));
            let _ = writeln!(s, "A (covering theorem) = {}", fmt(c.a_theorem, c.theorem_vacuous));
            let _ = writeln!(s, "admissible: eps < {:.4e}, nu < {:.4}", c.eps_max, c.nu_max);
            let _ = writeln!(
                s,
                "success probability >= {:.6}{}",
                c.success_probability,
                if c.probability_vacuous { " (vacuous)" } else { "" }
            );
            let _ = writeln!(s, "required r for delta = {}", c.required_samples);
            let _ = writeln!(s, "batch checked against A = {:.6}", c.a_used);
            for b in &c.batch {
                let _ = writeln!(
                    s,
                    "  f(seed {}): eps {:.3e}, ratio {:.6}, lower {}, upper {}",
                    b.seed, b.epsilon, b.ratio, b.lower_holds, b.upper_holds
                );
            }
        }
        if let Some(w) = &self.witness {
            let _ = writeln!(s, "\n[witness]");
            let _ = writeln!(
                s,
                "M = {} (alpha_M = {:.6}), eta = {}, delta = {:.6}",
                w.m, w.alpha_m, w.eta, w.delta
            );
            let _ = writeln!(
                s,
                "concentration: f {:.6}, psi_M {:.6}, delta h {:.6} (threshold {})",
                w.f_concentration,
                w.psi_m_concentration,
                w.delta_h_concentration,
                1.0 - w.eps
            );
            let _ = writeln!(
                s,
                "equal samples: r = {}, delta = {:.6}, max sample diff {:.3e}, p_opt diff {:.3e}",
                w.alias_r, w.alias_delta, w.alias_max_sample_difference, w.alias_p_opt_difference
            );
        }
        if !self.artifacts.is_empty() {
            let _ = writeln!(s, "\n[artifacts]");
            for a in &self.artifacts {
                let _ = writeln!(s, "{a}");
            }
        }
        s
    }

    pub fn timings_json(&self) -> String {
        let map: serde_json::Map<String, serde_json::Value> = self
            .timings
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::json!(v)))
            .collect();
        serde_json::to_string_pretty(&map).expect("timings serialize") + "\n"
    }

    /// Writes `report.json`, `summary.txt`, `timings.json` and the echoed
    /// config.
    pub fn write(&mut self, out: &OutputDir) -> Result<(), ReportError> {
        for name in ["config.toml", "report.json", "summary.txt", "timings.json"] {
            self.artifacts.push(name.to_string());
        }
        out.write_text("config.toml", &self.config.to_toml_string())?;
        out.write_text("report.json", &self.to_json()?)?;
        out.write_text("summary.txt", &self.summary_text())?;
        out.write_text("timings.json", &self.timings_json())
    }
}
