//! Least-squares reconstruction on `V_N` from local STFT samples.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bounds::exact_bessel_bound;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::locop::EigenSystem;
use crate::regions::SampleSet;
use crate::sampling::basis_samples;
use crate::tfcore::{stft_point, Signal, Window, C64};

pub const DEFAULT_TOL: f64 = 1e-12;

/// Normal equations `G c = b` with `G = Yᴴ Y`, `b = Yᴴ s` and
/// `Y_jk = V_φ ψ_k(λ_j)`.
#[derive(Debug, Clone)]
pub struct NormalEquations {
    pub gram: CMatrix,
    pub rhs: CVector,
    pub rows: CMatrix,
}

pub fn gram_and_rhs(
    samples: &SampleSet,
    eigs: &EigenSystem,
    window: &Window,
    values: &[C64],
) -> Result<NormalEquations> {
    if samples.is_empty() {
        return Err(Error::param("r", "no sample points"));
    }
    if eigs.n() == 0 {
        return Err(Error::param("N", "V_N is trivial"));
    }
    Error::check_len(samples.len(), values.len())?;
    let rows = basis_samples(samples.points(), eigs, window)?;
    let s = CVector::from_column_slice(values);
    Ok(NormalEquations {
        gram: rows.ad_mul(&rows),
        rhs: rows.ad_mul(&s),
        rows,
    })
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub solution: CVector,
    pub iterations: usize,
    pub converged: bool,
    /// `‖G c_k − b‖ / ‖b‖` after each iteration, starting with `k = 0`.
    pub residual_history: Vec<f64>,
}

/// Conjugate gradients from `c₀ = 0`. Stops at relative residual `tol` or
/// after `max_iter` steps; the latter is reported, not raised.
pub fn cg_solve(gram: &CMatrix, rhs: &CVector, tol: f64, max_iter: usize) -> Result<CgOutcome> {
    if !(tol > 0.0) {
        return Err(Error::param("tol", format!("{tol} must be positive")));
    }
    let n = gram.nrows();
    if gram.ncols() != n {
        return Err(Error::InvalidDimension {
            len: gram.ncols(),
            reason: "Gram matrix must be square",
        });
    }
    Error::check_len(n, rhs.len())?;
    let mut x = CVector::zeros(n);
    let b_norm = rhs.norm();
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            solution: x,
            iterations: 0,
            converged: true,
            residual_history: vec![0.0],
        });
    }
    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut rr = r.norm_squared();
    let mut history = vec![1.0];
    for it in 1..=max_iter {
        let gp = gram * &p;
        let pgp = p.dotc(&gp).re;
        if !(pgp > 0.0) {
            // direction in the kernel: the residual is already as small as it gets
            return Ok(CgOutcome {
                solution: x,
                iterations: it - 1,
                converged: false,
                residual_history: history,
            });
        }
        let alpha = C64::new(rr / pgp, 0.0);
        x.axpy(alpha, &p, C64::new(1.0, 0.0));
        r.axpy(-alpha, &gp, C64::new(1.0, 0.0));
        let rr_new = r.norm_squared();
        history.push(rr_new.sqrt() / b_norm);
        if rr_new.sqrt() <= tol * b_norm {
            return Ok(CgOutcome {
                solution: x,
                iterations: it,
                converged: true,
                residual_history: history,
            });
        }
        let beta = C64::new(rr_new / rr, 0.0);
        p = &r + &p * beta;
        rr = rr_new;
    }
    Ok(CgOutcome {
        solution: x,
        iterations: max_iter,
        converged: false,
        residual_history: history,
    })
}

/// `√(B ε / (1 − γ))`
pub fn error_bound(bessel_b: f64, eps: f64, gamma: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::param("eps", format!("{eps} is not in [0, 1)")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::param("gamma", format!("{gamma} is not in (0, 1)")));
    }
    Ok((bessel_b * eps / (1.0 - gamma)).sqrt())
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub coefficients: Vec<C64>,
    pub p_opt: Signal,
    pub iterations: usize,
    pub converged: bool,
    /// `(Σ_j |V_φ f(λ_j) − V_φ p_opt(λ_j)|²)^{1/2}`
    pub residual_norm: f64,
    pub relative_error: f64,
    pub error_bound: f64,
    pub bessel_b: f64,
    /// Measured `1 − ⟨Hf, f⟩/‖f‖²`.
    pub epsilon: f64,
    /// Sampled residual of `P_{V_N} f`, an upper bound for `residual_norm`.
    pub projection_residual_norm: f64,
    pub cg_residuals: Vec<f64>,
}

/// Samples `f` on `Λ` and solves the least-squares problem over `V_N` with
/// `max_iter = 10 N`.
pub fn reconstruct(
    f: &Signal,
    samples: &SampleSet,
    eigs: &EigenSystem,
    window: &Window,
    tol: f64,
) -> Result<ReconstructionResult> {
    if f.norm_sqr() == 0.0 {
        return Err(Error::ZeroSignal);
    }
    Error::check_len(window.len(), f.len())?;
    let values = samples
        .points()
        .iter()
        .map(|p| stft_point(f, window, *p))
        .collect::<Result<Vec<_>>>()?;
    let ne = gram_and_rhs(samples, eigs, window, &values)?;
    let cg = cg_solve(&ne.gram, &ne.rhs, tol, 10 * eigs.n())?;
    let s = CVector::from_column_slice(&values);
    let residual_norm = (&s - &ne.rows * &cg.solution).norm();

    let all = eigs.coefficients(f);
    let proj = CVector::from_column_slice(&all[..eigs.n()]);
    let projection_residual_norm = (&s - &ne.rows * proj).norm();

    let epsilon = deficit(eigs, &all);
    let bessel_b = exact_bessel_bound(samples, window)?;
    let coefficients: Vec<C64> = cg.solution.iter().copied().collect();
    Ok(ReconstructionResult {
        p_opt: eigs.synthesize(&coefficients),
        coefficients,
        iterations: cg.iterations,
        converged: cg.converged,
        residual_norm,
        relative_error: residual_norm / f.norm(),
        error_bound: error_bound(bessel_b, epsilon.clamp(0.0, 1.0 - f64::EPSILON), eigs.gamma())?,
        bessel_b,
        epsilon,
        projection_residual_norm,
        cg_residuals: cg.residual_history,
    })
}

/// `Σ_k (1 − α_k)|c_k|² / Σ_k |c_k|²`, i.e. `1 − ⟨Hf,f⟩/‖f‖²` without the
/// cancellation of forming `⟨Hf,f⟩` first.
fn deficit(eigs: &EigenSystem, coeffs: &[C64]) -> f64 {
    let total: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    let miss: f64 = coeffs
        .iter()
        .zip(eigs.eigenvalues())
        .map(|(c, a)| (1.0 - a) * c.norm_sqr())
        .sum();
    miss / total
}

/// Measured `1 − ⟨Hf,f⟩/‖f‖²` from the eigen-expansion of `f`.
pub fn measured_epsilon(f: &Signal, eigs: &EigenSystem) -> Result<f64> {
    Error::check_len(eigs.len(), f.len())?;
    if f.norm_sqr() == 0.0 {
        return Err(Error::ZeroSignal);
    }
    Ok(deficit(eigs, &eigs.coefficients(f)))
}

fn random_unit<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    let v = Signal::random(dim, rng);
    let n = v.norm();
    v.values().iter().map(|z| z / n).collect()
}

/// Unit-norm `f = √(1−s) u + √s v` whose measured `1 − ⟨Hf,f⟩` equals
/// `eps_target` to relative `1e-6`.
///
/// `u` is a random unit vector in the span of the leading `ψ_k` with
/// `1 − α_k ≤ eps_target/2` (all of `V_N` when that allows it), `v` a random unit
/// vector in `span{ψ_k : α_k < γ}`. The two live on disjoint eigenindices, so
/// the deficit is affine in `s` and `s` is solved for exactly.
pub fn make_concentrated_test_function(eigs: &EigenSystem, eps_target: f64, seed: u64) -> Result<Signal> {
    if !(eps_target > 0.0 && eps_target < 1.0) {
        return Err(Error::param("eps_target", format!("{eps_target} is not in (0, 1)")));
    }
    let alphas = eigs.eigenvalues();
    let k = alphas[..eigs.n()]
        .iter()
        .take_while(|&&a| 1.0 - a <= eps_target / 2.0)
        .count();
    if k == 0 {
        return Err(Error::Infeasible(format!(
            "no eigenvalue within {} of 1 (alpha_1 = {})",
            eps_target / 2.0,
            alphas.first().copied().unwrap_or(0.0)
        )));
    }
    let low: Vec<usize> = (0..alphas.len()).filter(|&i| alphas[i] < eigs.gamma()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_unit(k, &mut rng);
    let v = random_unit(low.len().max(1), &mut rng);

    let d_u: f64 = u.iter().zip(alphas).map(|(c, a)| (1.0 - a) * c.norm_sqr()).sum();
    let d_v: f64 = if low.is_empty() {
        0.0
    } else {
        v.iter().zip(&low).map(|(c, &i)| (1.0 - alphas[i]) * c.norm_sqr()).sum()
    };
    if eps_target < d_u || eps_target > d_v {
        return Err(Error::Infeasible(format!(
            "eps_target {eps_target} outside the reachable range [{d_u}, {d_v}]"
        )));
    }
    let s = (eps_target - d_u) / (d_v - d_u);

    let mut coeffs = vec![C64::new(0.0, 0.0); alphas.len()];
    for (i, c) in u.iter().enumerate() {
        coeffs[i] = c * (1.0 - s).sqrt();
    }
    for (c, &i) in v.iter().zip(&low) {
        coeffs[i] = c * s.sqrt();
    }
    let f = eigs.synthesize(&coeffs).normalized()?;
    let measured = measured_epsilon(&f, eigs)?;
    if (measured - eps_target).abs() > 1e-6 * eps_target {
        return Err(Error::Infeasible(format!(
            "constructed eps {measured} misses target {eps_target}"
        )));
    }
    Ok(f)
}
