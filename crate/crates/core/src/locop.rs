//! Time-frequency localization operator `H = V_φ* χ_Ω V_φ`, its spectral
//! decomposition and the concentration functional `⟨Hf, f⟩`.

use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::par::Execution;
use crate::regions::TFRegion;
use crate::tfcore::{stft, Signal, Window, C64};

/// Eigenvalues at or below this are treated as the kernel.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Default bound on `‖Hψ_k − α_k ψ_k‖₂` accepted from the eigensolver.
pub const EIG_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct LocalizationOperator {
    matrix: CMatrix,
    region: TFRegion,
    window: Window,
}

impl LocalizationOperator {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn region(&self) -> &TFRegion {
        &self.region
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    pub fn apply(&self, f: &Signal) -> Result<Signal> {
        Error::check_len(self.len(), f.len())?;
        Ok(linalg::vector_signal(&(&self.matrix * linalg::signal_vector(f))))
    }

    /// `⟨Hf, f⟩`, real for Hermitian `H`.
    pub fn quadratic_form(&self, f: &Signal) -> Result<f64> {
        Ok(self.apply(f)?.inner(f).re)
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }
}

pub fn build_localization_operator(region: &TFRegion, window: &Window) -> Result<LocalizationOperator> {
    build_localization_operator_with(region, window, Execution::default())
}

/// Dense assembly of
/// `H(t, s) = (1/L) Σ_{(m,n)∈Ω} φ(t−m) conj(φ(s−m)) e^{2πi n (t−s)/L}`.
///
/// The frequency sum for a fixed `m` only depends on `t − s`, so it is one
/// inverse FFT of the region's column indicator.
pub fn build_localization_operator_with(
    region: &TFRegion,
    window: &Window,
    exec: Execution,
) -> Result<LocalizationOperator> {
    let len = region.len();
    Error::check_len(len, window.len())?;
    let ifft = FftPlanner::new().plan_fft_inverse(len);
    // (m, K_m) for each time shift that meets the region
    let kernels: Vec<(usize, Vec<C64>)> = (0..len)
        .filter_map(|m| {
            let col = region.frequencies_at(m);
            if !col.iter().any(|&b| b) {
                return None;
            }
            let mut k: Vec<C64> = col.iter().map(|&b| C64::new(if b { 1.0 } else { 0.0 }, 0.0)).collect();
            ifft.process(&mut k);
            Some((m, k))
        })
        .collect();
    let phi = window.values();
    let scale = 1.0 / len as f64;
    let mut data = vec![C64::new(0.0, 0.0); len * len];
    exec.for_each_chunk(&mut data, len, |t, row| {
        for (m, kernel) in &kernels {
            let a = phi[(t + len - m) % len] * scale;
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            for (s, slot) in row.iter_mut().enumerate() {
                *slot += a * phi[(s + len - m) % len].conj() * kernel[(t + len - s) % len];
            }
        }
    });
    Ok(LocalizationOperator {
        matrix: CMatrix::from_row_slice(len, len, &data),
        region: region.clone(),
        window: window.clone(),
    })
}

/// Eigenpairs of `H` in non-increasing order with a spectral cut `N` at
/// level `γ`.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
    n_cut: usize,
    gamma: f64,
    max_residual: f64,
}

impl EigenSystem {
    /// Builds a system from already-sorted eigenpairs (columns of `vectors`).
    pub fn from_parts(eigenvalues: Vec<f64>, eigenvectors: CMatrix, gamma: f64) -> Result<Self> {
        Error::check_len(eigenvectors.ncols(), eigenvalues.len())?;
        if eigenvalues.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::param("eigenvalues", "must be sorted non-increasing"));
        }
        let mut sys = EigenSystem {
            eigenvalues,
            eigenvectors,
            n_cut: 0,
            gamma,
            max_residual: 0.0,
        };
        sys.set_gamma(gamma)?;
        Ok(sys)
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Zero-based: `eigenvalue(0)` is `α₁`.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        self.eigenvalues[k]
    }

    pub fn eigenvector(&self, k: usize) -> Signal {
        linalg::column_signal(&self.eigenvectors, k)
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    /// Dimension `N` of `V_N`.
    pub fn n(&self) -> usize {
        self.n_cut
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }

    pub fn set_gamma(&mut self, gamma: f64) -> Result<()> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::param("gamma", format!("{gamma} is not in (0, 1)")));
        }
        self.gamma = gamma;
        self.n_cut = cut_index(&self.eigenvalues, gamma);
        Ok(())
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        self.set_gamma(gamma)?;
        Ok(self)
    }

    /// Orthonormal basis of `V_N` as the first `N` columns.
    pub fn vn_basis(&self) -> CMatrix {
        self.eigenvectors.columns(0, self.n_cut).into_owned()
    }

    /// Coefficients `⟨f, ψ_k⟩` for all `k`.
    pub fn coefficients(&self, f: &Signal) -> Vec<C64> {
        (0..self.len())
            .map(|k| {
                self.eigenvectors
                    .column(k)
                    .iter()
                    .zip(f.values())
                    .map(|(psi, x)| x * psi.conj())
                    .sum()
            })
            .collect()
    }

    /// `Σ_k α_k |⟨f, ψ_k⟩|²`
    pub fn energy(&self, f: &Signal) -> f64 {
        self.coefficients(f)
            .iter()
            .zip(&self.eigenvalues)
            .map(|(c, a)| a * c.norm_sqr())
            .sum()
    }

    /// `Σ_k coeffs[k] ψ_k` over the leading `coeffs.len()` eigenvectors.
    pub fn synthesize(&self, coeffs: &[C64]) -> Signal {
        let len = self.eigenvectors.nrows();
        let mut out = vec![C64::new(0.0, 0.0); len];
        for (k, c) in coeffs.iter().enumerate() {
            for (o, psi) in out.iter_mut().zip(self.eigenvectors.column(k).iter()) {
                *o += c * psi;
            }
        }
        Signal::from_vec_unchecked(out)
    }

    /// Number of eigenvalues above [`RANK_TOLERANCE`].
    pub fn numerical_rank(&self) -> usize {
        self.eigenvalues.iter().filter(|&&a| a > RANK_TOLERANCE).count()
    }

    /// Projection onto `ker H`, computed as `f − Σ_{α_k > tol} ⟨f, ψ_k⟩ ψ_k`.
    pub fn kernel_component(&self, f: &Signal) -> Signal {
        let rank = self.numerical_rank();
        let coeffs = self.coefficients(f);
        f.sub(&self.synthesize(&coeffs[..rank]))
    }
}

fn cut_index(eigenvalues: &[f64], gamma: f64) -> usize {
    eigenvalues.iter().take_while(|&&a| a >= gamma).count()
}

pub fn eigendecompose(op: &LocalizationOperator) -> Result<EigenSystem> {
    eigendecompose_with_tolerance(op, EIG_RESIDUAL_TOL)
}

/// Full dense eigensolve, checked against `max_k ‖Hψ_k − α_k ψ_k‖ ≤ tol`.
/// The cut level defaults to `γ = 1/2`.
pub fn eigendecompose_with_tolerance(op: &LocalizationOperator, tol: f64) -> Result<EigenSystem> {
    let (values, vectors) = linalg::hermitian_eigen(op.matrix.clone());
    let hv = &op.matrix * &vectors;
    let mut worst: f64 = 0.0;
    for (k, &a) in values.iter().enumerate() {
        let r = (hv.column(k) - vectors.column(k) * C64::new(a, 0.0)).norm();
        worst = worst.max(r);
    }
    if !(worst <= tol) {
        return Err(Error::Convergence {
            solver: "hermitian eigensolver",
            residual: worst,
            tolerance: tol,
        });
    }
    let mut sys = EigenSystem::from_parts(values, vectors, 0.5)?;
    sys.max_residual = worst;
    Ok(sys)
}

/// Largest `N` with `α_N ≥ γ`.
pub fn choose_n(eigs: &EigenSystem, gamma: f64) -> Result<usize> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::param("gamma", format!("{gamma} is not in (0, 1)")));
    }
    Ok(cut_index(&eigs.eigenvalues, gamma))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentrationValue {
    /// `⟨Hf, f⟩ = (1/L) Σ_{λ∈Ω} |V_φ f(λ)|²`
    pub value: f64,
    /// `1 − value / ‖f‖²`
    pub epsilon: f64,
}

/// Energy of `f` inside `Ω`, measured on the STFT.
pub fn concentration(f: &Signal, region: &TFRegion, window: &Window) -> Result<ConcentrationValue> {
    Error::check_len(region.len(), f.len())?;
    let norm = f.norm_sqr();
    if norm == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let v = stft(f, window)?;
    let value = v
        .values()
        .iter()
        .zip(region.mask())
        .filter(|(_, &inside)| inside)
        .map(|(z, _)| z.norm_sqr())
        .sum::<f64>()
        / region.len() as f64;
    Ok(ConcentrationValue {
        value,
        epsilon: 1.0 - value / norm,
    })
}

/// Orthogonal projection onto `V_N`.
pub fn project_vn(f: &Signal, eigs: &EigenSystem) -> Result<Signal> {
    Error::check_len(eigs.eigenvectors.nrows(), f.len())?;
    if eigs.n() == 0 {
        return Err(Error::param("N", "projection onto V_N needs N >= 1"));
    }
    let coeffs = eigs.coefficients(f);
    Ok(eigs.synthesize(&coeffs[..eigs.n()]))
}

/// Interval `[|Ω| − R, |Ω| + R]` containing `#{k : α_k > 1 − δ}`.
/// Slacks of the three projection inequalities for a given `f`; each is
/// non-negative when the inequality holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaSlacks {
    pub epsilon: f64,
    /// `‖P f‖² − (1 − ε/(1−γ))‖f‖²`
    pub projection: f64,
    /// `(ε/(1−γ))‖f‖² − ‖f − P f‖²`
    pub remainder: f64,
    /// `⟨H P f, P f⟩ − γ(1 − ε/(1−γ))‖f‖²`
    pub energy: f64,
}

impl LemmaSlacks {
    pub fn min(&self) -> f64 {
        self.projection.min(self.remainder).min(self.energy)
    }
}

/// Evaluates the projection inequalities with `ε` measured from `f`.
pub fn lemma_slacks(f: &Signal, op: &LocalizationOperator, eigs: &EigenSystem) -> Result<LemmaSlacks> {
    let nf = f.norm_sqr();
    if nf == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let gamma = eigs.gamma();
    let epsilon = 1.0 - op.quadratic_form(f)? / nf;
    let ratio = epsilon / (1.0 - gamma);
    let pf = project_vn(f, eigs)?;
    Ok(LemmaSlacks {
        epsilon,
        projection: pf.norm_sqr() - (1.0 - ratio) * nf,
        remainder: ratio * nf - f.sub(&pf).norm_sqr(),
        energy: op.quadratic_form(&pf)? - gamma * (1.0 - ratio) * nf,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountInterval {
    pub lower: f64,
    pub upper: f64,
    pub radius: f64,
    /// `∫_Ω ∫_Ω |V_φ φ(z − z')|² dz dz'`
    pub double_integral: f64,
}

impl CountInterval {
    pub fn contains(&self, count: usize) -> bool {
        let c = count as f64;
        c >= self.lower - 1e-9 && c <= self.upper + 1e-9
    }
}

/// Eigenvalue-count estimate
/// `|#{α_k > 1−δ} − |Ω|| ≤ max(1/δ, 1/(1−δ)) · |∫∫_{Ω×Ω} |V_φφ(z−z')|² − |Ω||`.
///
/// The double sum over `Ω × Ω` is a correlation, evaluated as
/// `Σ_d |V_φφ(d)|² · #{(z, z') ∈ Ω² : z − z' = d}` with the pair counts
/// taken from a 2-D FFT of the mask.
pub fn eigenvalue_count_estimate(region: &TFRegion, window: &Window, delta: f64) -> Result<CountInterval> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", format!("{delta} is not in (0, 1)")));
    }
    let len = region.len();
    Error::check_len(len, window.len())?;
    let ambiguity = stft(window.signal(), window)?;
    let mut grid: Vec<C64> = region
        .mask()
        .iter()
        .map(|&b| C64::new(if b { 1.0 } else { 0.0 }, 0.0))
        .collect();
    fft2(&mut grid, len, false);
    for z in grid.iter_mut() {
        *z = C64::new(z.norm_sqr(), 0.0);
    }
    fft2(&mut grid, len, true);
    let norm = (len * len) as f64;
    let weighted: f64 = grid
        .iter()
        .zip(ambiguity.values())
        .map(|(pairs, v)| (pairs.re / norm).round() * v.norm_sqr())
        .sum();
    let double_integral = weighted / (len * len) as f64;
    let measure = region.measure();
    let radius = (1.0 / delta).max(1.0 / (1.0 - delta)) * (double_integral - measure).abs();
    Ok(CountInterval {
        lower: measure - radius,
        upper: measure + radius,
        radius,
        double_integral,
    })
}

/// In-place unnormalized 2-D DFT of a row-major `len × len` grid.
fn fft2(data: &mut [C64], len: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    };
    fft.process(data);
    let mut col = vec![C64::new(0.0, 0.0); len];
    for n in 0..len {
        for m in 0..len {
            col[m] = data[m * len + n];
        }
        fft.process(&mut col);
        for m in 0..len {
            data[m * len + n] = col[m];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regions::disk_region;
    use crate::tfcore::{make_gaussian_window, stft_adjoint, TFPoint};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn masked_synthesis(f: &Signal, region: &TFRegion, w: &Window) -> Signal {
        let mut v = stft(f, w).unwrap();
        for (z, &inside) in v.values_mut().iter_mut().zip(region.mask()) {
            if !inside {
                *z = C64::new(0.0, 0.0);
            }
        }
        stft_adjoint(&v, w).unwrap()
    }

    /// Entry formula evaluated literally, summing over region points.
    fn direct_entry(region: &TFRegion, w: &Window, t: usize, s: usize) -> C64 {
        let len = region.len();
        let phi = w.signal().values();
        region
            .points()
            .iter()
            .map(|p| {
                let ang = 2.0 * std::f64::consts::PI * (p.n as f64) * (t as f64 - s as f64) / len as f64;
                phi[(t + len - p.m) % len] * phi[(s + len - p.m) % len].conj() * C64::from_polar(1.0, ang)
            })
            .sum::<C64>()
            / len as f64
    }

    fn random_region(len: usize, rng: &mut ChaCha8Rng) -> TFRegion {
        use rand::Rng;
        let mask = (0..len * len).map(|_| rng.random_bool(0.2)).collect();
        TFRegion::from_mask(len, mask, "random").unwrap()
    }

    #[test]
    fn full_grid_gives_identity() {
        for len in [8, 17, 32] {
            let w = make_gaussian_window(len).unwrap();
            let op = build_localization_operator(&TFRegion::full(len), &w).unwrap();
            let err = linalg::max_abs(&(op.matrix() - CMatrix::identity(len, len)));
            assert!(err < 1e-10, "L = {len}: {err}");
        }
    }

    #[test]
    fn entries_match_direct_formula_and_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let w = Window::normalize(Signal::random(16, &mut rng)).unwrap();
        let region = random_region(16, &mut rng);
        let op = build_localization_operator(&region, &w).unwrap();
        for t in 0..16 {
            for s in 0..16 {
                let d = direct_entry(&region, &w, t, s);
                assert!((op.matrix()[(t, s)] - d).norm() < 1e-12);
            }
        }
        let f = Signal::random(16, &mut rng);
        let hf = op.apply(&f).unwrap();
        assert!(hf.sub(&masked_synthesis(&f, &region, &w)).norm() < 1e-12);
        assert!(linalg::hermitian_defect(op.matrix()) < 1e-12);
        let seq = build_localization_operator_with(&region, &w, Execution::Sequential).unwrap();
        assert_eq!(seq.matrix(), op.matrix());
    }

    #[test]
    fn empty_region_is_zero_operator() {
        let w = make_gaussian_window(8).unwrap();
        let op = build_localization_operator(&TFRegion::empty(8), &w).unwrap();
        assert_eq!(linalg::max_abs(op.matrix()), 0.0);
        let mismatch = build_localization_operator(&TFRegion::empty(9), &w);
        assert!(matches!(mismatch, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn eigensystem_rebuilds_operator() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let w = make_gaussian_window(16).unwrap();
        let region = disk_region(16, TFPoint { m: 5, n: 9 }, 3.0).unwrap();
        let op = build_localization_operator(&region, &w).unwrap();
        let eigs = eigendecompose(&op).unwrap();
        let mut rebuilt = CMatrix::zeros(16, 16);
        for k in 0..16 {
            let psi = eigs.eigenvectors().column(k);
            rebuilt += psi * psi.adjoint() * C64::new(eigs.eigenvalue(k), 0.0);
        }
        assert!(linalg::max_abs(&(rebuilt - op.matrix())) < 1e-10);
        let gram = eigs.eigenvectors().adjoint() * eigs.eigenvectors();
        assert!(linalg::max_abs(&(gram - CMatrix::identity(16, 16))) < 1e-10);
        assert!(eigs.max_residual() <= 1e-8);
        let trace: f64 = eigs.eigenvalues().iter().sum();
        assert!((trace - region.measure()).abs() < 1e-8 * region.measure());
        assert!((op.trace() - region.measure()).abs() < 1e-12);
        assert!(eigs.eigenvalue(0) <= 1.0 + 1e-10);
        assert!(*eigs.eigenvalues().last().unwrap() >= -1e-12);

        // the top eigenvector maximizes the concentration functional
        let top = op.quadratic_form(&eigs.eigenvector(0)).unwrap();
        for _ in 0..100 {
            let f = Signal::random(16, &mut rng).normalized().unwrap();
            assert!(top >= op.quadratic_form(&f).unwrap() - 1e-12);
        }
    }

    #[test]
    fn identity_spectrum() {
        let w = make_gaussian_window(12).unwrap();
        let op = build_localization_operator(&TFRegion::full(12), &w).unwrap();
        let eigs = eigendecompose(&op).unwrap();
        assert!(eigs.eigenvalues().iter().all(|a| (a - 1.0).abs() < 1e-10));
        assert_eq!(choose_n(&eigs, 0.5).unwrap(), 12);
    }

    #[test]
    fn choose_n_edges() {
        let w = make_gaussian_window(16).unwrap();
        let region = disk_region(16, TFPoint { m: 8, n: 8 }, 2.5).unwrap();
        let eigs = eigendecompose(&build_localization_operator(&region, &w).unwrap()).unwrap();
        let a1 = eigs.eigenvalue(0);
        assert_eq!(choose_n(&eigs, (a1 + 1e-9).min(0.999_999_999)).unwrap(), 0);
        let smallest_positive = eigs
            .eigenvalues()
            .iter()
            .copied()
            .filter(|&a| a > RANK_TOLERANCE)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(choose_n(&eigs, smallest_positive * 0.5).unwrap(), eigs.numerical_rank());
        assert!(choose_n(&eigs, 1.0).is_err());
        assert!(choose_n(&eigs, 0.0).is_err());
        let n = eigs.n();
        if n > 0 && n < 16 {
            assert!(eigs.eigenvalue(n - 1) >= eigs.gamma());
            assert!(eigs.gamma() >= eigs.eigenvalue(n));
        }
    }

    #[test]
    fn concentration_functional() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let w = make_gaussian_window(16).unwrap();
        let f = Signal::random(16, &mut rng);
        let full = concentration(&f, &TFRegion::full(16), &w).unwrap();
        assert!((full.value - f.norm_sqr()).abs() < 1e-10 * f.norm_sqr());
        assert!(full.epsilon.abs() < 1e-10);

        let region = disk_region(16, TFPoint { m: 4, n: 4 }, 3.0).unwrap();
        let op = build_localization_operator(&region, &w).unwrap();
        let c = concentration(&f, &region, &w).unwrap();
        assert!((c.value - op.quadratic_form(&f).unwrap()).abs() < 1e-12);
        assert!(c.value >= 0.0 && c.value <= f.norm_sqr());

        let eigs = eigendecompose(&op).unwrap();
        let psi = eigs.eigenvector(2).scaled(C64::new(0.0, 2.0));
        let cp = concentration(&psi, &region, &w).unwrap();
        assert!((cp.value - 4.0 * eigs.eigenvalue(2)).abs() < 1e-10);
        assert!((eigs.energy(&f) - c.value).abs() < 1e-10);

        assert!(matches!(
            concentration(&Signal::zeros(16), &region, &w),
            Err(Error::ZeroSignal)
        ));
    }

    #[test]
    fn projection_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let w = make_gaussian_window(20).unwrap();
        let region = disk_region(20, TFPoint { m: 10, n: 10 }, 4.0).unwrap();
        let eigs = eigendecompose(&build_localization_operator(&region, &w).unwrap()).unwrap();
        assert!(eigs.n() >= 1);
        let psi1 = eigs.eigenvector(0).scaled(C64::new(0.3, -1.1));
        assert!(project_vn(&psi1, &eigs).unwrap().sub(&psi1).norm() < 1e-12);
        let outside = eigs.eigenvector(eigs.n());
        assert!(project_vn(&outside, &eigs).unwrap().norm() < 1e-12);

        let f = Signal::random(20, &mut rng);
        let g = Signal::random(20, &mut rng);
        let pf = project_vn(&f, &eigs).unwrap();
        let ppf = project_vn(&pf, &eigs).unwrap();
        assert!(ppf.sub(&pf).norm() < 1e-12);
        let pg = project_vn(&g, &eigs).unwrap();
        assert!((pf.inner(&g) - f.inner(&pg)).norm() < 1e-10);
        let pyth = pf.norm_sqr() + f.sub(&pf).norm_sqr();
        assert!((pyth - f.norm_sqr()).abs() < 1e-10 * f.norm_sqr());

        let ker = eigs.kernel_component(&f);
        let recomposed = eigs.synthesize(&eigs.coefficients(&f)[..eigs.numerical_rank()]);
        assert!(recomposed.sub(&f.sub(&ker)).norm() < 1e-12);
    }

    #[test]
    fn count_estimate_degenerates_on_full_grid() {
        let w = make_gaussian_window(24).unwrap();
        let est = eigenvalue_count_estimate(&TFRegion::full(24), &w, 0.5).unwrap();
        assert!(est.radius < 1e-9);
        assert!((est.lower - 24.0).abs() < 1e-9);
        assert!(est.contains(24));
        assert!(eigenvalue_count_estimate(&TFRegion::full(24), &w, 1.0).is_err());
    }

    #[test]
    fn count_estimate_brackets_small_disk() {
        let w = make_gaussian_window(32).unwrap();
        let region = disk_region(32, TFPoint { m: 16, n: 16 }, 2.0).unwrap();
        let op = build_localization_operator(&region, &w).unwrap();
        let eigs = eigendecompose(&op).unwrap();
        // Σ α_k² equals the double integral
        let hs: f64 = eigs.eigenvalues().iter().map(|a| a * a).sum();
        for delta in [0.3, 0.5, 0.7] {
            let est = eigenvalue_count_estimate(&region, &w, delta).unwrap();
            assert!((est.double_integral - hs).abs() < 1e-10);
            let count = eigs.eigenvalues().iter().filter(|&&a| a > 1.0 - delta).count();
            assert!(est.contains(count), "delta {delta}: {count} not in {est:?}");
        }
    }

    #[test]
    fn lemma_inequalities_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let w = make_gaussian_window(24).unwrap();
        let region = disk_region(24, TFPoint { m: 12, n: 12 }, 5.0).unwrap();
        let op = build_localization_operator(&region, &w).unwrap();
        let base = eigendecompose(&op).unwrap();
        for trial in 0..30 {
            let cut = 1 + trial % 8;
            let gamma = 0.5 * (base.eigenvalue(cut - 1) + base.eigenvalue(cut));
            if !(gamma > 0.0 && gamma < 1.0) {
                continue;
            }
            let eigs = base.clone().with_gamma(gamma).unwrap();
            assert_eq!(eigs.n(), cut);
            // mostly inside V_N with a random perturbation
            let coeffs: Vec<C64> = Signal::random(cut, &mut rng).into_values();
            let mut f = eigs.synthesize(&coeffs);
            f.axpy(C64::new(0.2, 0.0), &Signal::random(24, &mut rng));
            let eps = 1.0 - op.quadratic_form(&f).unwrap() / f.norm_sqr();
            let pf = project_vn(&f, &eigs).unwrap();
            let nf = f.norm_sqr();
            let ratio = eps / (1.0 - gamma);
            assert!(pf.norm_sqr() - (1.0 - ratio) * nf >= -1e-9);
            assert!(ratio * nf - f.sub(&pf).norm_sqr() >= -1e-9);
            assert!(op.quadratic_form(&pf).unwrap() - gamma * (1.0 - ratio) * nf >= -1e-9);
            let sl = lemma_slacks(&f, &op, &eigs).unwrap();
            assert!((sl.epsilon - eps).abs() < 1e-14);
            assert!((sl.remainder - (ratio * nf - f.sub(&pf).norm_sqr())).abs() < 1e-12);
            assert!(sl.min() >= -1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn operator_is_psd_contraction(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = Window::normalize(Signal::random(12, &mut rng)).unwrap();
            let region = random_region(12, &mut rng);
            let op = build_localization_operator(&region, &w).unwrap();
            prop_assert!((op.trace() - region.measure()).abs() <= 1e-8 * region.measure().max(1.0));
            let vals = linalg::hermitian_eigenvalues(op.matrix().clone());
            prop_assert!(vals[0] <= 1.0 + 1e-10);
            prop_assert!(*vals.last().unwrap() >= -1e-10);
            let f = Signal::random(12, &mut rng);
            let q = op.quadratic_form(&f).unwrap();
            prop_assert!(q <= vals[0] * f.norm_sqr() + 1e-10);
        }
    }
}
