//! Random-matrix view of sampling on `V_N`.
//!
//! For a sample point `λ` let `a(λ)_k = ⟨ψ_k, π(λ)φ⟩`. Then
//! `T(λ) = a aᴴ` is rank one, `|V_φ p(λ)|² = cᴴ T c` for `p = Σ c_k ψ_k`,
//! and under uniform sampling on `Ω` its mean is `diag(α_k) / |Ω|`. The
//! smallest eigenvalue of the centered average decides whether the sampling
//! inequality on `V_N` holds; matrix Bernstein bounds its lower tail.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::locop::EigenSystem;
use crate::par::Execution;
use crate::regions::{covering_index, uniform_sample_with, SampleSet, TFRegion};
use crate::tfcore::{stft, stft_point_unchecked, TFPoint, Window, C64};

/// Rank-one matrix `T(λ)_{kl} = ⟨ψ_k, π(λ)φ⟩ · conj(⟨ψ_l, π(λ)φ⟩)`.
#[derive(Debug, Clone)]
pub struct TMatrix {
    entries: CMatrix,
    source_point: TFPoint,
}

impl TMatrix {
    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn source_point(&self) -> TFPoint {
        self.source_point
    }

    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|z| z.re).sum()
    }
}

fn require_subspace(eigs: &EigenSystem) -> Result<usize> {
    match eigs.n() {
        0 => Err(Error::param("N", "V_N is trivial (N = 0)")),
        n => Ok(n),
    }
}

/// `r × N` matrix `Y_{jk} = V_φ ψ_k(λ_j)`.
pub fn basis_samples(points: &[TFPoint], eigs: &EigenSystem, window: &Window) -> Result<CMatrix> {
    basis_samples_with(points, eigs, window, Execution::default())
}

pub fn basis_samples_with(points: &[TFPoint], eigs: &EigenSystem, window: &Window, exec: Execution) -> Result<CMatrix> {
    let n = require_subspace(eigs)?;
    let len = window.len();
    Error::check_len(eigs.eigenvectors().nrows(), len)?;
    if let Some(p) = points.iter().find(|p| p.m >= len || p.n >= len) {
        return Err(Error::param("point", format!("({}, {}) off grid", p.m, p.n)));
    }
    let psis: Vec<Vec<C64>> = (0..n)
        .map(|k| eigs.eigenvectors().column(k).iter().copied().collect())
        .collect();
    let phi = window.values();
    let rows = exec.map(points.len(), |j| {
        psis.iter()
            .map(|psi| stft_point_unchecked(psi, phi, points[j]))
            .collect::<Vec<_>>()
    });
    Ok(CMatrix::from_fn(points.len(), n, |j, k| rows[j][k]))
}

pub fn build_t_matrix(point: TFPoint, eigs: &EigenSystem, window: &Window) -> Result<TMatrix> {
    let y = basis_samples_with(&[point], eigs, window, Execution::Sequential)?;
    // a = conj(row of Y)
    let a = y.row(0).adjoint();
    Ok(TMatrix {
        entries: &a * a.adjoint(),
        source_point: point,
    })
}

/// Diagonal of `E(T) = diag(α_1..α_N) / |Ω|`.
pub fn expected_t(eigs: &EigenSystem, region: &TFRegion) -> Result<Vec<f64>> {
    let n = require_subspace(eigs)?;
    let measure = region.measure();
    if measure <= 0.0 {
        return Err(Error::InvalidRegion("empty region has no uniform law".into()));
    }
    Ok(eigs.eigenvalues()[..n].iter().map(|a| a / measure).collect())
}

/// `(1/r) Σ_j T_j − diag(expected)` from the sampled rows `Y`.
pub fn centered_average(rows: &CMatrix, expected: &[f64]) -> CMatrix {
    let r = rows.nrows().max(1) as f64;
    let mut m = rows.ad_mul(rows) / C64::new(r, 0.0);
    for (k, e) in expected.iter().enumerate() {
        m[(k, k)] -= C64::new(*e, 0.0);
    }
    m
}

/// Smallest eigenvalue of `(1/r) Σ_j (T_j − E T_j)`.
pub fn empirical_min_eigenvalue(
    samples: &SampleSet,
    eigs: &EigenSystem,
    region: &TFRegion,
    window: &Window,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::param("r", "at least one sample is required"));
    }
    let expected = expected_t(eigs, region)?;
    let rows = basis_samples(samples.points(), eigs, window)?;
    Ok(linalg::min_eigenvalue(centered_average(&rows, &expected)))
}

/// Parameters of the tail bounds. `subspace_dim` is the `N` in the matrix
/// Bernstein bound; `eps1`/`eps2` are the covering and eigenvalue-count
/// excesses and `a` the covering rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailParams {
    pub nu: f64,
    pub r: f64,
    pub omega_measure: f64,
    pub subspace_dim: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub a: f64,
}

impl TailParams {
    /// `N = |Ω|`, `ε₁ = ε₂ = 0`, `a = 3/|Ω|`.
    pub fn new(nu: f64, r: f64, omega_measure: f64) -> Self {
        TailParams {
            nu,
            r,
            omega_measure,
            subspace_dim: omega_measure,
            eps1: 0.0,
            eps2: 0.0,
            a: 3.0 / omega_measure,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu >= 0.0) {
            return Err(Error::param("nu", format!("{} < 0", self.nu)));
        }
        if !(self.r >= 0.0) {
            return Err(Error::param("r", format!("{} < 0", self.r)));
        }
        if !(self.omega_measure > 0.0) {
            return Err(Error::param("omega_measure", "must be positive"));
        }
        if !(self.a > 1.0 / self.omega_measure) {
            return Err(Error::param(
                "a",
                format!("{} must exceed 1/|Ω| = {}", self.a, 1.0 / self.omega_measure),
            ));
        }
        Ok(())
    }
}

/// Matrix Bernstein tail `N exp(−(t²/2) / (σ² + Bt/3))`.
pub fn tropp_tail(n: f64, sigma2: f64, bnorm: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) || !(sigma2 >= 0.0) || !(bnorm > 0.0) {
        return Err(Error::param(
            "tropp",
            format!("need t >= 0, sigma2 >= 0, B > 0 (t={t}, sigma2={sigma2}, B={bnorm})"),
        ));
    }
    if t == 0.0 {
        return Ok(n);
    }
    Ok(n * (-(t * t / 2.0) / (sigma2 + bnorm * t / 3.0)).exp())
}

/// `N exp(−ν² r / (|Ω| (1 + ν/3)))`; not clamped to `[0, 1]`.
pub fn subspace_failure_bound(p: &TailParams) -> Result<f64> {
    p.validate()?;
    Ok(p.subspace_dim * (-p.nu * p.nu * p.r / (p.omega_measure * (1.0 + p.nu / 3.0))).exp())
}

/// Exponent rate `a ln(a|Ω|) − (a − 1/|Ω|)` of the covering tail.
pub fn covering_rate(a: f64, omega_measure: f64) -> f64 {
    a * (a * omega_measure).ln() - (a - 1.0 / omega_measure)
}

/// `(|Ω| + ε₁) exp(−r (a ln(a|Ω|) − (a − 1/|Ω|)))`, a bound on `P(N₀ > ar)`.
pub fn covering_tail(p: &TailParams) -> Result<f64> {
    p.validate()?;
    Ok((p.omega_measure + p.eps1) * (-p.r * covering_rate(p.a, p.omega_measure)).exp())
}

/// Lower bound on the probability that the sampling inequality holds:
/// `1 − (|Ω| + ε₂) e^{…} − (|Ω| + ε₁) e^{…}`. May be negative.
pub fn success_probability(p: &TailParams) -> Result<f64> {
    p.validate()?;
    let sub = TailParams {
        subspace_dim: p.omega_measure + p.eps2,
        ..*p
    };
    Ok(1.0 - subspace_failure_bound(&sub)? - covering_tail(p)?)
}

/// Smallest integer `r ≥ |Ω| (1 + ν/3)/ν² · ln(2(|Ω| + ε₂)/δ)`.
pub fn required_samples(nu: f64, delta: f64, omega_measure: f64, eps2: f64) -> Result<u64> {
    Ok(required_samples_real(nu, delta, omega_measure, eps2)?.ceil().max(1.0) as u64)
}

/// The real-valued threshold behind [`required_samples`].
pub fn required_samples_real(nu: f64, delta: f64, omega_measure: f64, eps2: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::param("nu", "must be positive"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", "must lie in (0, 1)"));
    }
    if !(omega_measure > 0.0) {
        return Err(Error::param("omega_measure", "must be positive"));
    }
    Ok(omega_measure * (1.0 + nu / 3.0) / (nu * nu) * (2.0 * (omega_measure + eps2) / delta).ln())
}

/// Independent generator for trial `trial` of a campaign: ChaCha8 seeded
/// with `master_seed`, stream `trial`.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

/// Precomputed `V_φ ψ_k(λ)` for every `λ ∈ Ω` and `k < N`, so a trial costs
/// one `r × N` gather plus an `N × N` eigensolve.
#[derive(Debug, Clone)]
pub struct RegionSampler {
    region: TFRegion,
    points: Vec<TFPoint>,
    /// row-major `#Ω × N`
    table: Vec<C64>,
    n: usize,
    expected: Vec<f64>,
}

impl RegionSampler {
    pub fn new(region: &TFRegion, window: &Window, eigs: &EigenSystem) -> Result<Self> {
        Self::new_with(region, window, eigs, Execution::default())
    }

    pub fn new_with(region: &TFRegion, window: &Window, eigs: &EigenSystem, exec: Execution) -> Result<Self> {
        let n = require_subspace(eigs)?;
        let expected = expected_t(eigs, region)?;
        let points = region.points();
        let transforms: Vec<Vec<C64>> = exec
            .map(n, |k| stft(&eigs.eigenvector(k), window).map(|v| v.values().to_vec()))
            .into_iter()
            .collect::<Result<_>>()?;
        let len = region.len();
        let mut table = Vec::with_capacity(points.len() * n);
        for p in &points {
            for tr in &transforms {
                table.push(tr[p.m * len + p.n]);
            }
        }
        Ok(RegionSampler {
            region: region.clone(),
            points,
            table,
            n,
            expected,
        })
    }

    pub fn region(&self) -> &TFRegion {
        &self.region
    }

    pub fn subspace_dim(&self) -> usize {
        self.n
    }

    pub fn expected(&self) -> &[f64] {
        &self.expected
    }

    /// Row `(V_φψ_k(λ))_k` for the `i`-th region point.
    pub fn row(&self, i: usize) -> &[C64] {
        &self.table[i * self.n..(i + 1) * self.n]
    }

    pub fn point_count(&self) -> usize {
        self.points.len()
    }

    /// Draws `r` i.i.d. uniform region indices.
    pub fn draw_indices<R: Rng + ?Sized>(&self, r: usize, rng: &mut R) -> Vec<usize> {
        (0..r).map(|_| rng.random_range(0..self.points.len())).collect()
    }

    pub fn rows_for(&self, indices: &[usize]) -> CMatrix {
        CMatrix::from_fn(indices.len(), self.n, |j, k| self.table[indices[j] * self.n + k])
    }

    pub fn points_for(&self, indices: &[usize]) -> Vec<TFPoint> {
        indices.iter().map(|&i| self.points[i]).collect()
    }

    /// Smallest eigenvalue of the centered average for one random draw.
    pub fn min_eigenvalue_statistic<R: Rng + ?Sized>(&self, r: usize, rng: &mut R) -> f64 {
        let idx = self.draw_indices(r, rng);
        linalg::min_eigenvalue(centered_average(&self.rows_for(&idx), &self.expected))
    }

    /// `‖Σ_j E(X_j²)‖` for `r` draws, computed exactly over the region
    /// (the tail bound only uses the cruder `r / |Ω|`).
    pub fn exact_sigma2(&self, r: usize) -> f64 {
        let n = self.n;
        let mut second = CMatrix::zeros(n, n);
        for i in 0..self.points.len() {
            let a = nalgebra::DVector::from_iterator(n, self.row(i).iter().map(|z| z.conj()));
            let tr = a.norm_squared();
            second += &a * a.adjoint() * C64::new(tr, 0.0);
        }
        second /= C64::new(self.points.len() as f64, 0.0);
        for (k, e) in self.expected.iter().enumerate() {
            second[(k, k)] -= C64::new(e * e, 0.0);
        }
        r as f64 * linalg::max_eigenvalue(second)
    }
}

/// Minimum-eigenvalue statistic of each trial, in trial order.
pub fn monte_carlo_statistics(
    trials: usize,
    r: usize,
    sampler: &RegionSampler,
    master_seed: u64,
    exec: Execution,
) -> Vec<f64> {
    exec.map(trials, |i| {
        let mut rng = trial_rng(master_seed, i as u64);
        sampler.min_eigenvalue_statistic(r, &mut rng)
    })
}

/// Fraction of trials with `α_min ≤ −ν/|Ω|`.
pub fn monte_carlo_failure_frequency(
    trials: usize,
    nu: f64,
    r: usize,
    sampler: &RegionSampler,
    master_seed: u64,
    exec: Execution,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::param("trials", "at least one trial is required"));
    }
    let stats = monte_carlo_statistics(trials, r, sampler, master_seed, exec);
    Ok(failure_frequency(&stats, nu, sampler.region().measure()))
}

pub fn failure_frequency(stats: &[f64], nu: f64, omega_measure: f64) -> f64 {
    let threshold = -nu / omega_measure;
    stats.iter().filter(|&&s| s <= threshold).count() as f64 / stats.len().max(1) as f64
}

/// Empirical `P(N₀ > a r)` for i.i.d. uniform draws and `cell_px` cells.
pub fn covering_failure_frequency(
    trials: usize,
    r: usize,
    region: &TFRegion,
    cell_px: usize,
    a: f64,
    master_seed: u64,
    exec: Execution,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::param("trials", "at least one trial is required"));
    }
    // validate once; covering_index only fails on a zero cell size
    let _ = covering_index(&uniform_sample_with(region, 1, false, &mut trial_rng(0, 0))?, cell_px)?;
    let limit = a * r as f64;
    let failures = exec.count(trials, |i| {
        let mut rng = trial_rng(master_seed, i as u64);
        let set = uniform_sample_with(region, r, false, &mut rng).expect("validated region");
        let rep = covering_index(&set, cell_px).expect("validated cell size");
        rep.n0 as f64 > limit
    });
    Ok(failures as f64 / trials as f64)
}

/// Binomial standard error `√(p(1−p)/n)`.
pub fn binomial_sigma(freq: f64, trials: usize) -> f64 {
    (freq * (1.0 - freq) / trials.max(1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locop::{build_localization_operator, eigendecompose};
    use crate::regions::{disk_region, uniform_sample};
    use crate::tfcore::{make_gaussian_window, Signal};

    fn setup(len: usize, radius: f64) -> (TFRegion, Window, EigenSystem) {
        let w = make_gaussian_window(len).unwrap();
        let region = disk_region(len, TFPoint { m: len / 2, n: len / 2 }, radius).unwrap();
        let eigs = eigendecompose(&build_localization_operator(&region, &w).unwrap()).unwrap();
        (region, w, eigs)
    }

    #[test]
    fn t_matrix_structure() {
        let (region, w, eigs) = setup(16, 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for p in region.points().iter().step_by(5) {
            let t = build_t_matrix(*p, &eigs, &w).unwrap();
            let e = t.entries();
            assert!(linalg::hermitian_defect(e) < 1e-14);
            assert!(t.trace() >= 0.0 && t.trace() <= 1.0 + 1e-12);
            let sq = e * e - e * C64::new(t.trace(), 0.0);
            assert!(linalg::max_abs(&sq) < 1e-10);
            let vals = linalg::hermitian_eigenvalues(e.clone());
            assert!(vals[1..].iter().all(|v| v.abs() < 1e-12));
            // trace equals the projected atom energy
            let atom = crate::tfcore::tf_shift(w.signal(), *p).unwrap();
            let proj = crate::locop::project_vn(&atom, &eigs).unwrap();
            assert!((t.trace() - proj.norm_sqr()).abs() < 1e-12);
            // quadratic form against a direct STFT sample
            let c: Vec<C64> = Signal::random(eigs.n(), &mut rng).into_values();
            let cv = nalgebra::DVector::from_column_slice(&c);
            let q = (cv.adjoint() * e * &cv)[(0, 0)].re;
            let f = eigs.synthesize(&c);
            let direct = crate::tfcore::stft_point(&f, &w, *p).unwrap().norm_sqr();
            assert!((q - direct).abs() < 1e-10 * (1.0 + direct));
            // centered norm bound
            let exp = expected_t(&eigs, &region).unwrap();
            let mut x = e.clone();
            for (k, v) in exp.iter().enumerate() {
                x[(k, k)] -= C64::new(*v, 0.0);
            }
            let vals = linalg::hermitian_eigenvalues(x);
            assert!(vals[0].abs().max(vals.last().unwrap().abs()) <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn one_dimensional_t_matrix() {
        let (region, w, eigs) = setup(16, 3.0);
        let mut eigs1 = eigs.clone();
        let g = 0.5 * (eigs.eigenvalue(0) + eigs.eigenvalue(1));
        eigs1.set_gamma(g.min(0.999)).unwrap();
        if eigs1.n() == 1 {
            let p = region.points()[7];
            let t = build_t_matrix(p, &eigs1, &w).unwrap();
            assert_eq!(t.entries().shape(), (1, 1));
            let v = crate::tfcore::stft_point(&eigs.eigenvector(0), &w, p).unwrap();
            assert!((t.entries()[(0, 0)].re - v.norm_sqr()).abs() < 1e-14);
        }
    }

    #[test]
    fn exhaustive_average_is_diagonal() {
        let (region, w, eigs) = setup(32, 5.0);
        let points = region.points();
        let rows = basis_samples(&points, &eigs, &w).unwrap();
        let avg = rows.ad_mul(&rows) / C64::new(points.len() as f64, 0.0);
        let exp = expected_t(&eigs, &region).unwrap();
        for k in 0..eigs.n() {
            for l in 0..eigs.n() {
                let target = if k == l { exp[k] } else { 0.0 };
                assert!((avg[(k, l)] - C64::new(target, 0.0)).norm() < 1e-10);
            }
        }
        let all = SampleSet::from_points(&region, points, 0).unwrap();
        let v = empirical_min_eigenvalue(&all, &eigs, &region, &w).unwrap();
        assert!(v.abs() < 1e-10);
    }

    #[test]
    fn full_grid_expectation() {
        let (_, w, _) = setup(12, 2.0);
        let full = TFRegion::full(12);
        let eigs = eigendecompose(&build_localization_operator(&full, &w).unwrap()).unwrap();
        let exp = expected_t(&eigs, &full).unwrap();
        assert!(exp.iter().all(|e| (e - 1.0 / 12.0).abs() < 1e-10));
    }

    #[test]
    fn statistic_lower_bound_and_sampling_inequality() {
        let (region, w, eigs) = setup(24, 5.0);
        let measure = region.measure();
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let single = uniform_sample(&region, 1, 1, false).unwrap();
        let v1 = empirical_min_eigenvalue(&single, &eigs, &region, &w).unwrap();
        assert!(v1 >= -1.0 / measure - 1.0);
        assert!(v1 >= -1.0 - 1e-12);

        let set = uniform_sample(&region, 60, 9, false).unwrap();
        let stat = empirical_min_eigenvalue(&set, &eigs, &region, &w).unwrap();
        let nu = -stat * measure;
        let op = build_localization_operator(&region, &w).unwrap();
        for _ in 0..20 {
            let c: Vec<C64> = Signal::random(eigs.n(), &mut rng).into_values();
            let p = eigs.synthesize(&c);
            let lhs: f64 = set
                .points()
                .iter()
                .map(|q| crate::tfcore::stft_point(&p, &w, *q).unwrap().norm_sqr())
                .sum::<f64>()
                / set.len() as f64;
            let rhs = (op.quadratic_form(&p).unwrap() - nu * p.norm_sqr()) / measure;
            assert!(lhs >= rhs - 1e-10);
        }
    }

    #[test]
    fn tail_formulas() {
        assert_eq!(tropp_tail(7.0, 2.0, 1.0, 0.0).unwrap(), 7.0);
        assert!((tropp_tail(2.0, 1.0, 1.0, 3.0).unwrap() - 2.0 * (-2.25f64).exp()).abs() < 1e-15);
        assert!(tropp_tail(2.0, 1.0, 0.0, 3.0).is_err());

        // Tropp with σ² = r/|Ω|, B = 1, t = rν/|Ω| has half the exponent of the
        // subspace bound as stated
        let (omega, nu, r) = (94.25, 0.3, 5000.0);
        let mut p = TailParams::new(nu, r, omega);
        p.subspace_dim = 94.0;
        let via_tropp = tropp_tail(94.0, r / omega, 1.0, r * nu / omega).unwrap();
        let stated = subspace_failure_bound(&p).unwrap();
        assert!((94.0 * (via_tropp / 94.0).powi(2) - stated).abs() < 1e-12 * stated);
        assert!(stated < via_tropp);

        let p0 = TailParams { nu: 0.0, ..p };
        assert_eq!(subspace_failure_bound(&p0).unwrap(), 94.0);

        let mut last = f64::INFINITY;
        for r in (100..20000).step_by(500) {
            let b = subspace_failure_bound(&TailParams { r: r as f64, ..p }).unwrap();
            assert!(b < last);
            last = b;
        }
    }

    #[test]
    fn covering_formula() {
        let omega = 94.25;
        let mut p = TailParams::new(0.3, 300.0, omega);
        p.eps1 = 6.0;
        let v = covering_tail(&p).unwrap();
        let expected = 100.25 * (-300.0 / omega * (3.0 * 3f64.ln() - 2.0)).exp();
        assert!((v - expected).abs() < 1e-12);
        assert!((v - 1.6209).abs() < 1e-3);
        assert!((covering_rate(3.0 / omega, omega) - (3.0 * 3f64.ln() - 2.0) / omega).abs() < 1e-15);
        let bad = TailParams { a: 1.0 / omega, ..p };
        assert!(matches!(covering_tail(&bad), Err(Error::InvalidParameter { .. })));
        let mut last = f64::INFINITY;
        for r in (0..10_000).step_by(250) {
            let b = covering_tail(&TailParams { r: r as f64, ..p }).unwrap();
            assert!(b < last);
            last = b;
        }
    }

    #[test]
    fn success_probability_cases() {
        let omega = 94.25;
        let p = TailParams::new(0.3, 300.0, omega);
        assert!(success_probability(&p).unwrap() < 0.0);
        let mut z = TailParams::new(0.3, 0.0, omega);
        z.eps1 = 2.0;
        z.eps2 = 1.0;
        let v = success_probability(&z).unwrap();
        assert!((v - (1.0 - (omega + 1.0) - (omega + 2.0))).abs() < 1e-12);

        let delta = 0.05;
        let r = required_samples(0.3, delta, omega, 0.0).unwrap();
        let at_r = TailParams::new(0.3, r as f64, omega);
        let cov = covering_tail(&at_r).unwrap();
        assert!(success_probability(&at_r).unwrap() >= 1.0 - delta / 2.0 - cov - 1e-12);
    }

    #[test]
    fn required_samples_behaviour() {
        assert_eq!(required_samples(0.3, 0.05, 94.25, 0.0).unwrap(), 9487);
        let real = required_samples_real(0.3, 0.05, 94.25, 0.0).unwrap();
        assert!((real - 9486.066992498113).abs() < 1e-8);
        let mut last = u64::MAX;
        for d in [0.1, 0.3, 0.5, 0.9, 0.99] {
            let r = required_samples(0.3, d, 94.25, 0.0).unwrap();
            assert!(r > 0 && r < last);
            last = r;
        }
        let a = required_samples_real(0.2, 0.05, 94.25, 0.0).unwrap();
        let b = required_samples_real(0.1, 0.05, 94.25, 0.0).unwrap();
        assert!((b / a - 4.0).abs() < 0.2);
        assert!(required_samples(0.0, 0.05, 94.25, 0.0).is_err());
        assert!(required_samples(0.3, 1.0, 94.25, 0.0).is_err());
    }

    #[test]
    fn sampler_matches_direct_rows() {
        let (region, w, eigs) = setup(20, 4.0);
        let sampler = RegionSampler::new(&region, &w, &eigs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let idx = sampler.draw_indices(15, &mut rng);
        let pts = sampler.points_for(&idx);
        let direct = basis_samples(&pts, &eigs, &w).unwrap();
        assert!(linalg::max_abs(&(direct - sampler.rows_for(&idx))) < 1e-12);
        let sigma2 = sampler.exact_sigma2(100);
        assert!(sigma2 >= 0.0 && sigma2 <= 100.0 / region.measure() + 1e-10);
    }

    #[test]
    fn monte_carlo_is_deterministic_and_bounded() {
        let (region, w, eigs) = setup(24, 5.0);
        let sampler = RegionSampler::new(&region, &w, &eigs).unwrap();
        let a = monte_carlo_failure_frequency(200, 0.3, 50, &sampler, 7, Execution::Parallel).unwrap();
        let b = monte_carlo_failure_frequency(200, 0.3, 50, &sampler, 7, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        let huge = region.measure() * (1.0 + eigs.eigenvalue(0) / region.measure());
        let none = monte_carlo_failure_frequency(200, huge, 50, &sampler, 7, Execution::Parallel).unwrap();
        assert_eq!(none, 0.0);
        assert!(monte_carlo_failure_frequency(0, 0.3, 50, &sampler, 7, Execution::Parallel).is_err());
    }

    #[test]
    fn covering_frequency_deterministic() {
        let region = disk_region(40, TFPoint { m: 20, n: 20 }, 8.0).unwrap();
        let a =
            covering_failure_frequency(100, 80, &region, 6, 1.5 / region.measure(), 3, Execution::Parallel).unwrap();
        let b =
            covering_failure_frequency(100, 80, &region, 6, 1.5 / region.measure(), 3, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        assert!(covering_failure_frequency(10, 80, &region, 0, 1.0, 3, Execution::Parallel).is_err());
    }
}
