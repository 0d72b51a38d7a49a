//! Bessel bounds of finite Gabor systems and the lower-bound constants of the
//! sampling inequality.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::locop::EigenSystem;
use crate::regions::{covering_index, SampleSet};
use crate::sampling::basis_samples;
use crate::tfcore::{stft_point, tf_shift, Signal, Window, C64};

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 2000;

/// How the Bessel bound was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BesselMethod {
    PowerIteration { iterations: usize },
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselBound {
    pub value: f64,
    pub method: BesselMethod,
}

/// Atoms `π(λ_j) φ` as the columns of an `L × r` matrix.
pub fn atom_matrix(samples: &SampleSet, window: &Window) -> Result<CMatrix> {
    Error::check_len(samples.grid_len(), window.len())?;
    let len = window.len();
    let mut m = CMatrix::zeros(len, samples.len());
    for (j, p) in samples.points().iter().enumerate() {
        let atom = tf_shift(window.signal(), *p)?;
        m.set_column(j, &linalg::signal_vector(&atom));
    }
    Ok(m)
}

/// Optimal Bessel bound `‖Σ_j π(λ_j)φ ⊗ π(λ_j)φ*‖` of the finite system.
pub fn exact_bessel_bound(samples: &SampleSet, window: &Window) -> Result<f64> {
    Ok(bessel_bound_detailed(samples, window)?.value)
}

/// Power iteration on the frame operator, falling back to a dense solve
/// when the residual does not reach `1e-10` relative.
pub fn bessel_bound_detailed(samples: &SampleSet, window: &Window) -> Result<BesselBound> {
    if samples.is_empty() {
        return Err(Error::param("r", "Bessel bound of an empty system"));
    }
    let atoms = atom_matrix(samples, window)?;
    let len = atoms.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x = linalg::signal_vector(&Signal::random(len, &mut rng));
    x /= C64::new(x.norm(), 0.0);
    for it in 1..=POWER_MAX_ITER {
        let sx = &atoms * atoms.ad_mul(&x);
        let rho = x.dotc(&sx).re;
        let residual = (&sx - &x * C64::new(rho, 0.0)).norm();
        if rho > 0.0 && residual <= POWER_TOL * rho {
            return Ok(BesselBound {
                value: rho,
                method: BesselMethod::PowerIteration { iterations: it },
            });
        }
        let n = sx.norm();
        if n == 0.0 {
            break;
        }
        x = sx / C64::new(n, 0.0);
    }
    Ok(BesselBound {
        value: dense_bessel_bound_from_atoms(&atoms),
        method: BesselMethod::Dense,
    })
}

/// Largest eigenvalue of the smaller of the `r × r` Gram matrix and the
/// `L × L` frame operator.
pub fn dense_bessel_bound(samples: &SampleSet, window: &Window) -> Result<f64> {
    Ok(dense_bessel_bound_from_atoms(&atom_matrix(samples, window)?))
}

fn dense_bessel_bound_from_atoms(atoms: &CMatrix) -> f64 {
    let m = if atoms.ncols() <= atoms.nrows() {
        atoms.ad_mul(atoms)
    } else {
        atoms * atoms.adjoint()
    };
    linalg::max_eigenvalue(m)
}

/// `A = (r/|Ω|)(γ − γε/(1−γ) − ν) − 2B √(ε/(1−γ))`
pub fn lemma_lower_bound_a(r: f64, omega_measure: f64, gamma: f64, eps: f64, nu: f64, bessel_b: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::param("gamma", format!("{gamma} is not in (0, 1)")));
    }
    if !(eps >= 0.0 && eps < 1.0 - gamma) {
        return Err(Error::param(
            "eps",
            format!("{eps} is outside [0, 1 - gamma) = [0, {})", 1.0 - gamma),
        ));
    }
    if !(omega_measure > 0.0) {
        return Err(Error::param("omega_measure", "must be positive"));
    }
    let ratio = eps / (1.0 - gamma);
    Ok(r / omega_measure * (gamma - gamma * ratio - nu) - 2.0 * bessel_b * ratio.sqrt())
}

/// Smallest `r` for which [`lemma_lower_bound_a`] is positive, or `None` when
/// `γ − γε/(1−γ) − ν ≤ 0`.
pub fn lemma_positive_threshold(omega_measure: f64, gamma: f64, eps: f64, nu: f64, bessel_b: f64) -> Option<f64> {
    let ratio = eps / (1.0 - gamma);
    let margin = gamma - gamma * ratio - nu;
    (margin > 0.0).then(|| omega_measure * 2.0 * bessel_b * ratio.sqrt() / margin)
}

/// Admissible `(ε, ν)` region for a given `C_φ`:
/// `ε < 1/(4(1+6√2 C_φ)²)` and `ν < 1/2 − (1+6√2 C_φ)√ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissible {
    pub c_phi: f64,
    pub eps_max: f64,
}

impl Admissible {
    fn factor(&self) -> f64 {
        1.0 + 6.0 * std::f64::consts::SQRT_2 * self.c_phi
    }

    pub fn nu_max(&self, eps: f64) -> f64 {
        0.5 - self.factor() * eps.max(0.0).sqrt()
    }

    pub fn contains(&self, eps: f64, nu: f64) -> bool {
        eps >= 0.0 && eps < self.eps_max && nu >= 0.0 && nu < self.nu_max(eps)
    }
}

pub fn admissible_params(c_phi: f64) -> Result<Admissible> {
    if !(c_phi >= 0.0) || !c_phi.is_finite() {
        return Err(Error::param(
            "c_phi",
            format!("{c_phi} must be finite and non-negative"),
        ));
    }
    let k = 1.0 + 6.0 * std::f64::consts::SQRT_2 * c_phi;
    Ok(Admissible {
        c_phi,
        eps_max: 1.0 / (4.0 * k * k),
    })
}

/// `A = (r/|Ω|)(1/2 − ε − ν − 6√2 C_φ √ε)` on the admissible region.
pub fn theorem_lower_bound_a(r: f64, omega_measure: f64, eps: f64, nu: f64, c_phi: f64) -> Result<f64> {
    let adm = admissible_params(c_phi)?;
    if !adm.contains(eps, nu) {
        return Err(Error::param(
            "eps/nu",
            format!(
                "(eps={eps}, nu={nu}) outside the admissible region (eps < {}, nu < {})",
                adm.eps_max,
                adm.nu_max(eps)
            ),
        ));
    }
    if !(omega_measure > 0.0) {
        return Err(Error::param("omega_measure", "must be positive"));
    }
    Ok(r / omega_measure * (0.5 - eps - nu - 6.0 * std::f64::consts::SQRT_2 * c_phi * eps.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingCheck {
    pub sample_energy: f64,
    pub norm_sqr: f64,
    /// `Σ_j |V_φ f(λ_j)|² / ‖f‖²`
    pub ratio: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
}

/// Evaluates both sides of `A‖f‖² ≤ Σ_j |V_φ f(λ_j)|² ≤ r‖f‖²`.
pub fn verify_sampling_inequality(f: &Signal, samples: &SampleSet, window: &Window, a: f64) -> Result<SamplingCheck> {
    let norm_sqr = f.norm_sqr();
    if norm_sqr == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let sample_energy = samples
        .points()
        .iter()
        .map(|p| stft_point(f, window, *p).map(|z| z.norm_sqr()))
        .sum::<Result<f64>>()?;
    let r = samples.len() as f64;
    Ok(SamplingCheck {
        sample_energy,
        norm_sqr,
        ratio: sample_energy / norm_sqr,
        lower_holds: sample_energy >= a * norm_sqr,
        upper_holds: sample_energy <= r * norm_sqr * (1.0 + 1e-12),
    })
}

/// Extreme eigenvalues of `Σ_j P π(λ_j)φ ⊗ P π(λ_j)φ` on `V_N`, i.e. the
/// optimal frame bounds of the projected atoms.
pub fn vn_frame_bounds(samples: &SampleSet, eigs: &EigenSystem, window: &Window) -> Result<(f64, f64)> {
    let rows = basis_samples(samples.points(), eigs, window)?;
    let vals = linalg::hermitian_eigenvalues(rows.ad_mul(&rows));
    Ok((*vals.last().unwrap(), vals[0]))
}

/// Bound constants for one sample set and parameter choice.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub bessel_b: f64,
    pub n0: usize,
    pub cell_px: usize,
    pub c_phi: f64,
    pub a_lemma: Option<f64>,
    /// `None` when `(ε, ν)` is outside the admissible region.
    pub a_theorem: Option<f64>,
    pub eps_max: f64,
    pub nu_max: f64,
    pub r: usize,
    pub omega_measure: f64,
    pub gamma: f64,
    pub eps: f64,
    pub nu: f64,
}

impl BoundReport {
    /// A certificate with `A ≤ 0` (or none at all) guarantees nothing.
    pub fn lemma_vacuous(&self) -> bool {
        self.a_lemma.is_none_or(|a| a <= 0.0)
    }

    pub fn theorem_vacuous(&self) -> bool {
        self.a_theorem.is_none_or(|a| a <= 0.0)
    }
}

#[allow(clippy::too_many_arguments)]
pub fn bound_report(
    samples: &SampleSet,
    window: &Window,
    cell_px: usize,
    omega_measure: f64,
    gamma: f64,
    eps: f64,
    nu: f64,
) -> Result<BoundReport> {
    let bessel_b = exact_bessel_bound(samples, window)?;
    let n0 = covering_index(samples, cell_px)?.n0;
    let c_phi = bessel_b / n0.max(1) as f64;
    let adm = admissible_params(c_phi)?;
    let r = samples.len();
    let a_lemma = lemma_lower_bound_a(r as f64, omega_measure, gamma, eps, nu, bessel_b).ok();
    let a_theorem = theorem_lower_bound_a(r as f64, omega_measure, eps, nu, c_phi).ok();
    Ok(BoundReport {
        bessel_b,
        n0,
        cell_px,
        c_phi,
        a_lemma,
        a_theorem,
        eps_max: adm.eps_max,
        nu_max: adm.nu_max(eps),
        r,
        omega_measure,
        gamma,
        eps,
        nu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locop::{build_localization_operator, eigendecompose};
    use crate::regions::{disk_region, uniform_sample, TFRegion};
    use crate::tfcore::{make_gaussian_window, TFPoint};
    use proptest::prelude::*;

    #[test]
    fn full_grid_is_tight() {
        let w = make_gaussian_window(16).unwrap();
        let full = TFRegion::full(16);
        let all = SampleSet::from_points(&full, full.points(), 0).unwrap();
        let b = exact_bessel_bound(&all, &w).unwrap();
        assert!((b - 16.0).abs() < 1e-8);
    }

    #[test]
    fn single_point_bound_is_window_energy() {
        let w = make_gaussian_window(16).unwrap();
        let full = TFRegion::full(16);
        let one = SampleSet::from_points(&full, vec![TFPoint { m: 3, n: 7 }], 0).unwrap();
        assert!((exact_bessel_bound(&one, &w).unwrap() - 1.0).abs() < 1e-10);
        let empty = SampleSet::from_points(&full, vec![], 0).unwrap();
        assert!(exact_bessel_bound(&empty, &w).is_err());
    }

    #[test]
    fn power_iteration_matches_dense() {
        let w = make_gaussian_window(64).unwrap();
        let full = TFRegion::full(64);
        for seed in 0..3 {
            let s = uniform_sample(&full, 50, seed, true).unwrap();
            let fast = exact_bessel_bound(&s, &w).unwrap();
            let dense = dense_bessel_bound(&s, &w).unwrap();
            assert!((fast - dense).abs() < 1e-8 * dense, "{fast} vs {dense}");
        }
    }

    #[test]
    fn lemma_constant() {
        assert!((lemma_lower_bound_a(300.0, 94.25, 0.5, 0.0, 0.0, 7.0).unwrap() - 150.0 / 94.25).abs() < 1e-14);
        let a = lemma_lower_bound_a(300.0, 94.25, 0.5, 0.0335, 0.1, 7.85).unwrap();
        let by_hand = 300.0 / 94.25 * (0.5 - 0.0335 - 0.1) - 2.0 * 7.85 * (0.067f64).sqrt();
        assert!((a - by_hand).abs() < 1e-12);
        assert!(a < 0.0);
        assert!(lemma_lower_bound_a(300.0, 94.25, 0.5, 0.5, 0.1, 7.85).is_err());
        assert!(lemma_lower_bound_a(300.0, 94.25, 1.0, 0.0, 0.1, 7.85).is_err());

        // positivity threshold in r
        let (omega, gamma, eps, nu, b) = (94.25, 0.5, 0.01, 0.1, 7.85);
        let r_star = lemma_positive_threshold(omega, gamma, eps, nu, b).unwrap();
        assert!(lemma_lower_bound_a(r_star * 1.001, omega, gamma, eps, nu, b).unwrap() > 0.0);
        assert!(lemma_lower_bound_a(r_star * 0.999, omega, gamma, eps, nu, b).unwrap() < 0.0);
    }

    #[test]
    fn theorem_constant() {
        let a = theorem_lower_bound_a(1000.0, 94.25, 0.0, 0.0, 0.3).unwrap();
        assert!((a - 1000.0 / (2.0 * 94.25)).abs() < 1e-12);
        let a = theorem_lower_bound_a(1000.0, 94.25, 0.01, 0.1, 0.1).unwrap();
        assert!((a - 3.237_635_928_462_751).abs() < 1e-12);
        assert!(theorem_lower_bound_a(1000.0, 94.25, 0.2, 0.1, 0.1).is_err());
    }

    #[test]
    fn admissible_thresholds() {
        let adm = admissible_params(1.0).unwrap();
        assert!((adm.eps_max - 0.0027786866321921672).abs() < 1e-15);
        assert!(adm.nu_max(adm.eps_max).abs() < 1e-14);
        let tiny = admissible_params(1e-12).unwrap();
        assert!((tiny.eps_max - 0.25).abs() < 1e-10);
        assert!((tiny.nu_max(0.04) - (0.5 - 0.2)).abs() < 1e-10);
        assert!(admissible_params(-1.0).is_err());
    }

    #[test]
    fn inequality_check_and_frame_bounds() {
        let w = make_gaussian_window(24).unwrap();
        let region = disk_region(24, TFPoint { m: 12, n: 12 }, 5.0).unwrap();
        let eigs = eigendecompose(&build_localization_operator(&region, &w).unwrap()).unwrap();
        let s = uniform_sample(&region, 80, 4, false).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let f = Signal::random(24, &mut rng);
            let chk = verify_sampling_inequality(&f, &s, &w, 0.0).unwrap();
            assert!(chk.upper_holds && chk.lower_holds);
        }
        let (lo, hi) = vn_frame_bounds(&s, &eigs, &w).unwrap();
        assert!(lo > 0.0 && hi <= 80.0);
        assert!(verify_sampling_inequality(&Signal::zeros(24), &s, &w, 1.0).is_err());

        let rep = bound_report(&s, &w, 5, region.measure(), 0.5, 0.01, 0.1).unwrap();
        assert!((rep.c_phi - rep.bessel_b / rep.n0 as f64).abs() < 1e-15);
        assert_eq!(rep.r, 80);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn theorem_is_lemma_with_covering_substitution(
            r in 1.0f64..1e5, omega in 1.0f64..500.0, c in 0.0f64..2.0, u in 0.0f64..1.0, v in 0.0f64..1.0
        ) {
            let adm = admissible_params(c).unwrap();
            let eps = u * adm.eps_max * 0.999;
            let nu = v * adm.nu_max(eps) * 0.999;
            let thm = theorem_lower_bound_a(r, omega, eps, nu, c).unwrap();
            let b = 3.0 * r * c / omega;
            let lem = lemma_lower_bound_a(r, omega, 0.5, eps, nu, b).unwrap();
            prop_assert!((thm - lem).abs() <= 1e-12 * (1.0 + thm.abs()));
            prop_assert!(thm > 0.0);
        }

        #[test]
        fn bessel_monotone_under_inclusion(seed in any::<u64>(), r in 1usize..30, extra in 1usize..20) {
            let w = make_gaussian_window(20).unwrap();
            let full = TFRegion::full(20);
            let big = uniform_sample(&full, r + extra, seed, false).unwrap();
            let small = SampleSet::from_points(&full, big.points()[..r].to_vec(), 0).unwrap();
            let bs = exact_bessel_bound(&small, &w).unwrap();
            let bb = exact_bessel_bound(&big, &w).unwrap();
            prop_assert!(bs <= bb + 1e-10 * bb.max(1.0));
        }
    }
}
