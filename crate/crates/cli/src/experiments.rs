//! The canned experiments behind each CLI verb.
//!
//! Every random input is drawn from a seed derived from `master_seed` and a
//! fixed stream number, so a run is reproducible from its echoed config.

use std::fs;
use std::time::Instant;

use rand::RngCore;
use tfsample::bounds::{bound_report, exact_bessel_bound, verify_sampling_inequality, vn_frame_bounds};
use tfsample::locop::{
    build_localization_operator, concentration, eigendecompose_with_tolerance, eigenvalue_count_estimate,
};
use tfsample::recon::{make_concentrated_test_function, reconstruct, ReconstructionResult};
use tfsample::regions::{default_cell_px, disk_region, uniform_sample};
use tfsample::sampling::{
    binomial_sigma, covering_failure_frequency, covering_tail, failure_frequency, monte_carlo_statistics,
    required_samples, subspace_failure_bound, success_probability, trial_rng, RegionSampler, TailParams,
};
use tfsample::signal_io::load_signal;
use tfsample::tfcore::{make_gaussian_window, stft};
use tfsample::witnesses::{largest_concentrated_index, nonlinearity_witness, null_sample_witness};
use tfsample::{EigenSystem, Error, Execution, SampleSet, Signal, TFPoint, TFRegion, Window, C64};

use crate::config::{ConfigError, ExperimentConfig, RegionConfig, WindowConfig};
use crate::report::{
    BatchRow, CertificateSummary, CountSummary, MonteCarloRow, OutputDir, ReconRow, ReportError, RunReport,
    SamplingSummary, SpectrumSummary, WitnessSummary,
};

/// Stream numbers for [`derive_seed`].
pub mod streams {
    pub const SAMPLES: u64 = 1;
    pub const VN_FUNCTION: u64 = 2;
    pub const WITNESS_SAMPLES: u64 = 3;
    pub const WITNESS_FUNCTION: u64 = 4;
    /// Plus the index into `epsilon_targets`.
    pub const FUNCTION: u64 = 100;
    /// Plus the batch index.
    pub const BATCH: u64 = 10_000;
    /// Plus the index into `r_grid`.
    pub const MONTE_CARLO: u64 = 1 << 20;
    pub const COVERING: u64 = 1 << 21;
}

/// First output of the ChaCha8 generator for `(master, stream)`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    trial_rng(master, stream).next_u64()
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{context}: {source}")]
    Library { context: String, source: Error },
}

impl RunError {
    /// 2 for configuration and input errors, 3 for numerical failures, 4 for
    /// infeasible requests, 1 for output errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Report(ReportError::NonFinite(_)) => 3,
            RunError::Report(_) => 1,
            RunError::Library { source, .. } => match source {
                Error::Convergence { .. } | Error::ZeroSignal => 3,
                Error::Infeasible(_) => 4,
                _ => 2,
            },
        }
    }
}

trait Context<T> {
    fn context(self, what: &str) -> Result<T, RunError>;
}

impl<T> Context<T> for tfsample::Result<T> {
    fn context(self, what: &str) -> Result<T, RunError> {
        self.map_err(|source| RunError::Library {
            context: what.to_string(),
            source,
        })
    }
}

/// A finished run: the report plus whether any step failed numerically
/// without aborting (a CG row that did not converge).
pub struct RunOutcome {
    pub report: RunReport,
    pub numerical_failure: bool,
}

struct Timer<'a> {
    report: &'a mut Vec<(String, f64)>,
}

impl Timer<'_> {
    fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.report.push((name.to_string(), start.elapsed().as_secs_f64()));
        out
    }
}

pub fn build_region(cfg: &ExperimentConfig) -> Result<TFRegion, RunError> {
    let len = cfg.grid.len;
    match &cfg.region {
        RegionConfig::Disk { center, radius } => {
            let [m, n] = center.unwrap_or([len / 2, len / 2]);
            disk_region(len, TFPoint { m, n }, *radius).context("building the disk region")
        }
        RegionConfig::Full => Ok(TFRegion::full(len)),
        RegionConfig::Mask { path } => {
            let path = cfg.resolve(path);
            let text = fs::read_to_string(&path)
                .map_err(|e| ConfigError::new("region.path", format!("{}: {e}", path.display())))?;
            let mask = parse_mask(&text, len).map_err(|msg| ConfigError::new("region.path", msg))?;
            TFRegion::from_mask(len, mask, format!("mask {}", path.display()))
                .map_err(|e| ConfigError::new("region.path", e.to_string()).into())
        }
    }
}

/// `len` lines of `len` characters, `1`/`#` inside and `0`/`.` outside.
fn parse_mask(text: &str, len: usize) -> Result<Vec<bool>, String> {
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.len() != len {
        return Err(format!("expected {len} rows, found {}", lines.len()));
    }
    let mut mask = Vec::with_capacity(len * len);
    for (i, line) in lines.iter().enumerate() {
        let line = line.trim_end();
        if line.chars().count() != len {
            return Err(format!(
                "row {} has {} columns, expected {len}",
                i + 1,
                line.chars().count()
            ));
        }
        for (j, c) in line.chars().enumerate() {
            mask.push(match c {
                '1' | '#' => true,
                '0' | '.' => false,
                other => return Err(format!("row {} column {}: unexpected {other:?}", i + 1, j + 1)),
            });
        }
    }
    Ok(mask)
}

pub fn build_window(cfg: &ExperimentConfig) -> Result<Window, RunError> {
    match &cfg.window {
        WindowConfig::Gaussian => make_gaussian_window(cfg.grid.len).context("building the Gaussian window"),
        WindowConfig::File { path } => {
            let path = cfg.resolve(path);
            let signal =
                load_signal(&path).map_err(|e| ConfigError::new("window.path", format!("{}: {e}", path.display())))?;
            if signal.len() != cfg.grid.len {
                return Err(ConfigError::new(
                    "window.path",
                    format!("window has length {}, grid.len is {}", signal.len(), cfg.grid.len),
                )
                .into());
            }
            Window::normalize(signal).map_err(|e| ConfigError::new("window.path", e.to_string()).into())
        }
    }
}

struct Setup {
    region: TFRegion,
    window: Window,
    eigs: EigenSystem,
}

/// Region, window and eigensystem, with the spectrum summary filled in.
fn setup(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<Setup, RunError> {
    let mut timer = Timer {
        report: &mut report.timings,
    };
    let region = timer.time("region", || build_region(cfg))?;
    let window = build_window(cfg)?;
    let op = timer
        .time("operator", || build_localization_operator(&region, &window))
        .context("building H")?;
    let eigs = timer
        .time("eigensolve", || {
            eigendecompose_with_tolerance(&op, cfg.tolerances.eig_residual)
        })
        .context("eigendecomposition of H")?
        .with_gamma(cfg.sampling.gamma)
        .context("spectral cut")?;

    let delta = 1.0 - cfg.sampling.gamma;
    let interval = timer
        .time("count_estimate", || eigenvalue_count_estimate(&region, &window, delta))
        .context("eigenvalue-count estimate")?;
    let alphas = eigs.eigenvalues();
    let count = alphas.iter().filter(|&&a| a > 1.0 - delta).count();
    let n = eigs.n();
    report.spectrum = Some(SpectrumSummary {
        len: region.len(),
        region_label: region.label().to_string(),
        region_points: region.point_count(),
        region_rle: region.to_rle(),
        omega_measure: region.measure(),
        trace: op.trace(),
        gamma: eigs.gamma(),
        n,
        alpha_n: n.checked_sub(1).map(|k| alphas[k]),
        alpha_n_plus_1: alphas.get(n).copied(),
        alpha_max: alphas[0],
        max_eig_residual: eigs.max_residual(),
        count_interval: CountSummary {
            delta,
            count,
            lower: interval.lower,
            upper: interval.upper,
            contains: interval.contains(count),
        },
    });
    Ok(Setup { region, window, eigs })
}

fn draw_samples(cfg: &ExperimentConfig, region: &TFRegion, r: usize, stream: u64) -> Result<SampleSet, RunError> {
    let seed = derive_seed(cfg.master_seed, stream);
    if cfg.sampling.distinct && r > region.point_count() {
        return Err(ConfigError::new(
            "sampling.r",
            format!(
                "{r} distinct points requested from a region of {}",
                region.point_count()
            ),
        )
        .into());
    }
    uniform_sample(region, r, seed, cfg.sampling.distinct).context("drawing sampling points")
}

fn sample_mask(samples: &SampleSet) -> Vec<f64> {
    let len = samples.grid_len();
    let mut grid = vec![0.0; len * len];
    for p in samples.points() {
        grid[p.m * len + p.n] = 1.0;
    }
    grid
}

fn normalized_concentration(f: &Signal, setup: &Setup) -> Result<f64, RunError> {
    Ok(1.0
        - concentration(f, &setup.region, &setup.window)
            .context("concentration")?
            .epsilon)
}

pub fn run_spectrum(cfg: &ExperimentConfig, out: &OutputDir, emit_eigenvectors: bool) -> Result<RunOutcome, RunError> {
    let mut report = RunReport::new("spectrum", cfg);
    let s = setup(cfg, &mut report)?;
    let len = cfg.grid.len;

    out.write_csv(
        "eigenvalues.csv",
        &["k", "alpha"],
        s.eigs
            .eigenvalues()
            .iter()
            .enumerate()
            .map(|(k, a)| vec![(k + 1).to_string(), format!("{a:e}")]),
    )?;
    report.artifacts.push("eigenvalues.csv".into());

    let psi1 = stft(&s.eigs.eigenvector(0), &s.window).context("STFT of psi_1")?;
    out.write_grid("psi1_stft_power.csv", len, &psi1.power())?;
    report.artifacts.push("psi1_stft_power.csv".into());

    if emit_eigenvectors {
        for k in 0..s.eigs.n() {
            let name = format!("eigenvectors/psi_{:04}.tfrs", k + 1);
            out.write_signal(&name, &s.eigs.eigenvector(k))?;
            report.artifacts.push(name);
        }
    }
    Ok(RunOutcome {
        report,
        numerical_failure: false,
    })
}

fn recon_row(label: String, eps_target: Option<f64>, seed: u64, res: &ReconstructionResult) -> ReconRow {
    ReconRow {
        label,
        eps_target,
        seed,
        status: if res.converged {
            "ok".into()
        } else {
            "cg not converged".into()
        },
        epsilon: Some(res.epsilon),
        relative_error: Some(res.relative_error),
        error_bound: Some(res.error_bound),
        iterations: Some(res.iterations),
        converged: Some(res.converged),
        within_bound: Some(res.relative_error <= res.error_bound),
    }
}

pub fn run_reconstruct(
    cfg: &ExperimentConfig,
    out: &OutputDir,
    emit_eigenvectors: bool,
) -> Result<RunOutcome, RunError> {
    let mut report = RunReport::new("reconstruct", cfg);
    let s = setup(cfg, &mut report)?;
    let len = cfg.grid.len;
    let samples = draw_samples(cfg, &s.region, cfg.sampling.r, streams::SAMPLES)?;

    let start = Instant::now();
    let bessel_b = exact_bessel_bound(&samples, &s.window).context("Bessel bound")?;
    let (lo, hi) = vn_frame_bounds(&samples, &s.eigs, &s.window).context("frame bounds on V_N")?;
    report.timings.push(("bounds".into(), start.elapsed().as_secs_f64()));
    report.sampling = Some(SamplingSummary {
        r: samples.len(),
        distinct: samples.is_distinct(),
        seed: samples.seed(),
        bessel_b,
        vn_frame_lower: lo,
        vn_frame_upper: hi,
    });

    out.write_csv(
        "samples.csv",
        &["j", "m", "n"],
        samples
            .points()
            .iter()
            .enumerate()
            .map(|(j, p)| vec![(j + 1).to_string(), p.m.to_string(), p.n.to_string()]),
    )?;
    report.artifacts.push("samples.csv".into());
    if cfg.reconstruct.dump_grids {
        out.write_grid("samples_mask.csv", len, &sample_mask(&samples))?;
        report.artifacts.push("samples_mask.csv".into());
    }

    let mut jobs: Vec<(String, Option<f64>, u64)> = cfg
        .reconstruct
        .epsilon_targets
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            (
                format!("f{}", i + 1),
                Some(e),
                derive_seed(cfg.master_seed, streams::FUNCTION + i as u64),
            )
        })
        .collect();
    if cfg.reconstruct.include_vn {
        jobs.push(("vn".into(), None, derive_seed(cfg.master_seed, streams::VN_FUNCTION)));
    }

    let mut numerical_failure = false;
    for (label, eps_target, seed) in jobs {
        let start = Instant::now();
        let f = match eps_target {
            Some(eps) => match make_concentrated_test_function(&s.eigs, eps, seed) {
                Ok(f) => f,
                Err(Error::Infeasible(msg)) => {
                    report.reconstruction.push(ReconRow {
                        label,
                        eps_target,
                        seed,
                        status: format!("infeasible: {msg}"),
                        epsilon: None,
                        relative_error: None,
                        error_bound: None,
                        iterations: None,
                        converged: None,
                        within_bound: None,
                    });
                    continue;
                }
                Err(e) => return Err(e).context(&format!("test function {label}")),
            },
            None => {
                let coeffs = Signal::random(s.eigs.n(), &mut trial_rng(seed, 0));
                s.eigs.synthesize(coeffs.values())
            }
        };
        let res = reconstruct(&f, &samples, &s.eigs, &s.window, cfg.tolerances.cg_tol)
            .context(&format!("reconstruction of {label}"))?;
        numerical_failure |= !res.converged;
        report
            .reconstruction
            .push(recon_row(label.clone(), eps_target, seed, &res));
        report
            .timings
            .push((format!("reconstruct_{label}"), start.elapsed().as_secs_f64()));

        let name = format!("coefficients_{label}.csv");
        out.write_csv(
            &name,
            &["k", "re", "im"],
            res.coefficients
                .iter()
                .enumerate()
                .map(|(k, c)| vec![(k + 1).to_string(), format!("{:e}", c.re), format!("{:e}", c.im)]),
        )?;
        report.artifacts.push(name);
        if cfg.reconstruct.dump_grids {
            let v = stft(&f, &s.window).context("STFT of test function")?;
            let abs: Vec<f64> = v.values().iter().map(|z| z.norm()).collect();
            let name = format!("{label}_stft_abs.csv");
            out.write_grid(&name, len, &abs)?;
            report.artifacts.push(name);
        }
        if emit_eigenvectors {
            let name = format!("signals/{label}.tfrs");
            out.write_signal(&name, &f)?;
            report.artifacts.push(name);
        }
    }
    Ok(RunOutcome {
        report,
        numerical_failure,
    })
}

pub fn run_montecarlo(cfg: &ExperimentConfig, out: &OutputDir) -> Result<RunOutcome, RunError> {
    let mut report = RunReport::new("montecarlo", cfg);
    let s = setup(cfg, &mut report)?;
    let mc = &cfg.montecarlo;
    let exec = Execution::default();
    let omega = s.region.measure();
    let n = s.eigs.n() as f64;
    let cell_px = cfg.sampling.cell_px.unwrap_or_else(|| default_cell_px(cfg.grid.len));
    let a = mc.covering_factor / omega;
    let eps1 = s.region.covering_excess(cell_px);
    let eps2 = n - omega;

    let start = Instant::now();
    let sampler = RegionSampler::new(&s.region, &s.window, &s.eigs).context("sampler table")?;
    report.timings.push(("sampler".into(), start.elapsed().as_secs_f64()));

    for (ri, &r) in mc.r_grid.iter().enumerate() {
        let start = Instant::now();
        let seed = derive_seed(cfg.master_seed, streams::MONTE_CARLO + ri as u64);
        let stats = monte_carlo_statistics(mc.trials, r, &sampler, seed, exec);
        let cover_seed = derive_seed(cfg.master_seed, streams::COVERING + ri as u64);
        let covering_freq = covering_failure_frequency(mc.trials, r, &s.region, cell_px, a, cover_seed, exec)
            .context("covering frequency")?;
        for &nu in &mc.nu_grid {
            let params = TailParams {
                subspace_dim: n,
                eps1,
                eps2,
                a,
                ..TailParams::new(nu, r as f64, omega)
            };
            let raw = subspace_failure_bound(&params).context("subspace bound")?;
            let theory_bound = raw.min(1.0);
            let freq = failure_frequency(&stats, nu, omega);
            let sigma = binomial_sigma(freq, mc.trials);
            report.montecarlo.push(MonteCarloRow {
                nu,
                r,
                trials: mc.trials,
                master_seed: seed,
                empirical_freq: freq,
                sigma,
                theory_bound,
                subspace_bound_raw: raw,
                within_4_sigma: freq <= theory_bound + 4.0 * sigma,
                covering_freq,
                covering_bound: covering_tail(&params).context("covering tail")?,
                success_probability: success_probability(&params).context("success probability")?,
                required_samples: if nu > 0.0 {
                    Some(required_samples(nu, mc.delta, omega, eps2.max(0.0)).context("required samples")?)
                } else {
                    None
                },
            });
        }
        report
            .timings
            .push((format!("trials_r{r}"), start.elapsed().as_secs_f64()));
    }

    out.write_csv(
        "montecarlo.csv",
        &[
            "nu",
            "r",
            "empirical_freq",
            "theory_bound",
            "trials",
            "master_seed",
            "sigma",
            "covering_freq",
            "covering_bound",
            "success_probability",
            "required_samples",
        ],
        report.montecarlo.iter().map(|row| {
            vec![
                row.nu.to_string(),
                row.r.to_string(),
                row.empirical_freq.to_string(),
                format!("{:e}", row.theory_bound),
                row.trials.to_string(),
                row.master_seed.to_string(),
                format!("{:e}", row.sigma),
                row.covering_freq.to_string(),
                format!("{:e}", row.covering_bound),
                format!("{:e}", row.success_probability),
                row.required_samples.map_or(String::new(), |r| r.to_string()),
            ]
        }),
    )?;
    report.artifacts.push("montecarlo.csv".into());
    Ok(RunOutcome {
        report,
        numerical_failure: false,
    })
}

pub fn run_certify(cfg: &ExperimentConfig, _out: &OutputDir) -> Result<RunOutcome, RunError> {
    let mut report = RunReport::new("certify", cfg);
    let s = setup(cfg, &mut report)?;
    let c = &cfg.certify;
    let omega = s.region.measure();
    let samples = draw_samples(cfg, &s.region, cfg.sampling.r, streams::SAMPLES)?;
    let cell_px = cfg.sampling.cell_px.unwrap_or_else(|| default_cell_px(cfg.grid.len));

    let start = Instant::now();
    let b =
        bound_report(&samples, &s.window, cell_px, omega, cfg.sampling.gamma, c.eps, c.nu).context("bound report")?;
    report.timings.push(("bounds".into(), start.elapsed().as_secs_f64()));
    let n = s.eigs.n() as f64;
    let eps2 = (n - omega).max(0.0);
    let required = required_samples(c.nu, cfg.montecarlo.delta, omega, eps2).context("required samples")?;
    let params = TailParams {
        subspace_dim: n,
        eps1: s.region.covering_excess(cell_px),
        eps2: n - omega,
        a: cfg.montecarlo.covering_factor / omega,
        ..TailParams::new(c.nu, samples.len() as f64, omega)
    };
    let success = success_probability(&params).context("success probability")?;
    let a_used = [b.a_lemma, b.a_theorem].into_iter().flatten().fold(0.0, f64::max);

    let start = Instant::now();
    let mut batch = Vec::with_capacity(c.batch);
    for i in 0..c.batch {
        let seed = derive_seed(cfg.master_seed, streams::BATCH + i as u64);
        let f = make_concentrated_test_function(&s.eigs, c.eps, seed).context("batch test function")?;
        let check = verify_sampling_inequality(&f, &samples, &s.window, a_used).context("sampling inequality")?;
        batch.push(BatchRow {
            seed,
            epsilon: concentration(&f, &s.region, &s.window)
                .context("concentration")?
                .epsilon,
            ratio: check.ratio,
            lower_holds: check.lower_holds,
            upper_holds: check.upper_holds,
        });
    }
    report.timings.push(("batch".into(), start.elapsed().as_secs_f64()));

    let (lo, hi) = vn_frame_bounds(&samples, &s.eigs, &s.window).context("frame bounds on V_N")?;
    report.sampling = Some(SamplingSummary {
        r: samples.len(),
        distinct: samples.is_distinct(),
        seed: samples.seed(),
        bessel_b: b.bessel_b,
        vn_frame_lower: lo,
        vn_frame_upper: hi,
    });
    report.certificate = Some(CertificateSummary {
        r: b.r,
        seed: samples.seed(),
        cell_px: b.cell_px,
        n0: b.n0,
        bessel_b: b.bessel_b,
        c_phi: b.c_phi,
        eps: b.eps,
        nu: b.nu,
        gamma: b.gamma,
        eps_max: b.eps_max,
        nu_max: b.nu_max,
        a_lemma: b.a_lemma,
        a_theorem: b.a_theorem,
        lemma_vacuous: b.lemma_vacuous(),
        theorem_vacuous: b.theorem_vacuous(),
        a_used,
        success_probability: success,
        probability_vacuous: success <= 0.0,
        required_samples: required,
        batch,
    });
    Ok(RunOutcome {
        report,
        numerical_failure: false,
    })
}

pub fn run_witness(cfg: &ExperimentConfig, out: &OutputDir) -> Result<RunOutcome, RunError> {
    let mut report = RunReport::new("witness", cfg);
    let s = setup(cfg, &mut report)?;
    let w = &cfg.witness;

    let m = match w.m {
        Some(m) => m - 1,
        None => largest_concentrated_index(&s.eigs, w.eps).ok_or_else(|| RunError::Library {
            context: "nonlinearity witness".into(),
            source: Error::Infeasible(format!("no eigenvalue exceeds 1 - eps = {}", 1.0 - w.eps)),
        })?,
    };
    let start = Instant::now();
    let nw = nonlinearity_witness(&s.eigs, w.eps, w.eta, m).context("nonlinearity witness")?;
    let delta_h = nw.h.scaled(C64::new(nw.delta, 0.0));

    let samples = draw_samples(cfg, &s.region, w.r, streams::WITNESS_SAMPLES)?;
    let f_seed = derive_seed(cfg.master_seed, streams::WITNESS_FUNCTION);
    let f = make_concentrated_test_function(&s.eigs, w.f_eps, f_seed).context("equal-samples test function")?;
    let aw = null_sample_witness(&samples, &s.window, &f, &s.eigs, w.eps).context("equal-samples witness")?;
    let p = reconstruct(&aw.f, &samples, &s.eigs, &s.window, cfg.tolerances.cg_tol).context("reconstruction of f")?;
    let p_tilde = reconstruct(&aw.f_tilde, &samples, &s.eigs, &s.window, cfg.tolerances.cg_tol)
        .context("reconstruction of f~")?;
    report.timings.push(("witnesses".into(), start.elapsed().as_secs_f64()));

    report.witness = Some(WitnessSummary {
        eps: w.eps,
        eta: w.eta,
        m: m + 1,
        alpha_m: s.eigs.eigenvalue(m),
        delta: nw.delta,
        f_concentration: normalized_concentration(&nw.f, &s)?,
        psi_m_concentration: normalized_concentration(&nw.psi_m, &s)?,
        delta_h_concentration: normalized_concentration(&delta_h, &s)?,
        alias_r: samples.len(),
        alias_seed: samples.seed(),
        alias_delta: aw.delta,
        alias_complement_dim: aw.complement_dim,
        alias_max_sample_difference: aw.max_sample_difference,
        alias_p_opt_difference: p.p_opt.sub(&p_tilde.p_opt).norm() / p.p_opt.norm(),
        alias_f_eps: 1.0 - normalized_concentration(&aw.f, &s)?,
        alias_f_tilde_eps: 1.0 - normalized_concentration(&aw.f_tilde, &s)?,
    });

    for (name, sig) in [
        ("witness_f.tfrs", &nw.f),
        ("witness_psi_m.tfrs", &nw.psi_m),
        ("witness_h.tfrs", &nw.h),
        ("alias_f.tfrs", &aw.f),
        ("alias_f_tilde.tfrs", &aw.f_tilde),
        ("alias_phi_perp.tfrs", &aw.phi_perp),
    ] {
        out.write_signal(name, sig)?;
        report.artifacts.push(name.to_string());
    }
    Ok(RunOutcome {
        report,
        numerical_failure: !(p.converged && p_tilde.converged),
    })
}
