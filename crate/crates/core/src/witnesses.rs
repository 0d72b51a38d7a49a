//! Explicit counterexamples: the set of `(ε, φ)`-concentrated functions is
//! not a linear space, and distinct concentrated functions can share all
//! their STFT samples on `Λ`.

use crate::bounds::atom_matrix;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::locop::EigenSystem;
use crate::regions::SampleSet;
use crate::tfcore::{stft_point, Signal, Window, C64};

const RANK_TOL: f64 = 1e-10;
const BISECTION_STEPS: usize = 200;

#[derive(Debug, Clone)]
pub struct NonlinearityWitness {
    pub psi_m: Signal,
    pub h: Signal,
    pub delta: f64,
    pub f: Signal,
    pub eta: f64,
    pub eps: f64,
    /// Zero-based eigenindex.
    pub m: usize,
    /// `(k, c_k)` of the three atoms of `h`, `M` first.
    pub coefficients: [(usize, f64); 3],
}

/// Largest zero-based `M` with `α_M > 1 − ε`.
pub fn largest_concentrated_index(eigs: &EigenSystem, eps: f64) -> Option<usize> {
    eigs.eigenvalues().iter().rposition(|&a| a > 1.0 - eps)
}

/// `h` has mass on `M`, the largest other eigenvalue and the smallest one,
/// with `c_M = (1−ε)/(2α_M)`; `δ` is set to `2c_M(α_M − (1−ε))/(ε(η−1))`.
pub fn nonlinearity_witness(eigs: &EigenSystem, eps: f64, eta: f64, m: usize) -> Result<NonlinearityWitness> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param("eps", format!("{eps} is not in (0, 1)")));
    }
    if !(eta > 1.0 && eta < 1.0 / eps) {
        return Err(Error::param(
            "eta",
            format!("{eta} is not in (1, 1/eps) = (1, {})", 1.0 / eps),
        ));
    }
    let alphas = eigs.eigenvalues();
    if m >= alphas.len() || alphas[m] <= 1.0 - eps {
        return Err(Error::Infeasible(format!("alpha_M > 1 - eps fails for M = {m}")));
    }
    if alphas.len() < 3 {
        return Err(Error::Infeasible("need at least three eigenvalues".into()));
    }
    let alpha_m = alphas[m];
    let hi = (0..alphas.len()).find(|&k| k != m).unwrap();
    let lo = (0..alphas.len()).rev().find(|&k| k != m).unwrap();
    let (a_hi, a_lo) = (alphas[hi], alphas[lo]);

    let c_m = (1.0 - eps) / (2.0 * alpha_m);
    let q = 1.0 - c_m * c_m;
    let r = (1.0 - eta * eps) - alpha_m * c_m * c_m;
    if !(a_hi > a_lo) {
        return Err(Error::Infeasible("spectrum is flat".into()));
    }
    let x_hi = (r - a_lo * q) / (a_hi - a_lo);
    let x_lo = q - x_hi;
    if x_hi < 0.0 || x_lo < 0.0 {
        return Err(Error::Infeasible(format!(
            "1 - eta*eps = {} is not reachable with three atoms",
            1.0 - eta * eps
        )));
    }
    let (c_hi, c_lo) = (x_hi.sqrt(), x_lo.sqrt());

    let mut coeffs = vec![C64::new(0.0, 0.0); alphas.len()];
    coeffs[m] = C64::new(c_m, 0.0);
    coeffs[hi] = C64::new(c_hi, 0.0);
    coeffs[lo] = C64::new(c_lo, 0.0);
    let h = eigs.synthesize(&coeffs);
    let psi_m = eigs.eigenvector(m);
    let delta = 2.0 * c_m * (alpha_m - (1.0 - eps)) / (eps * (eta - 1.0));
    let mut f = psi_m.clone();
    f.axpy(C64::new(delta, 0.0), &h);

    let w = NonlinearityWitness {
        psi_m,
        h,
        delta,
        f,
        eta,
        eps,
        m,
        coefficients: [(m, c_m), (hi, c_hi), (lo, c_lo)],
    };
    let concentrated = |g: &Signal| eigs.energy(g) >= (1.0 - eps) * g.norm_sqr();
    if !concentrated(&w.f) || concentrated(&w.h.scaled(C64::new(delta, 0.0))) {
        return Err(Error::Infeasible("witness failed its own check".into()));
    }
    Ok(w)
}

#[derive(Debug, Clone)]
pub struct AliasWitness {
    pub f: Signal,
    pub f_tilde: Signal,
    pub phi_perp: Signal,
    pub delta: f64,
    pub complement_dim: usize,
    /// `max_j |V_φ f(λ_j) − V_φ f̃(λ_j)|`
    pub max_sample_difference: f64,
}

/// Orthonormal columns spanning the columns of `m`, by two-pass modified
/// Gram-Schmidt. Columns whose remainder falls below `RANK_TOL` times their
/// norm are dropped.
fn orthonormal_span(m: &CMatrix) -> Vec<CVector> {
    let mut basis: Vec<CVector> = Vec::new();
    for j in 0..m.ncols() {
        let mut v = m.column(j).into_owned();
        let n0 = v.norm();
        if n0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in &basis {
                let c = q.dotc(&v);
                v.axpy(-c, q, C64::new(1.0, 0.0));
            }
        }
        let n = v.norm();
        if n > RANK_TOL * n0 {
            basis.push(v / C64::new(n, 0.0));
        }
    }
    basis
}

/// Completes `basis` with unit coordinate vectors, returning only the new
/// (complement) vectors.
fn complement(basis: &[CVector], len: usize) -> Vec<CVector> {
    let mut all: Vec<CVector> = basis.to_vec();
    let mut out = Vec::new();
    for t in 0..len {
        if all.len() == len {
            break;
        }
        let mut v = CVector::zeros(len);
        v[t] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            for q in &all {
                let c = q.dotc(&v);
                v.axpy(-c, q, C64::new(1.0, 0.0));
            }
        }
        let n = v.norm();
        if n > 1e-8 {
            let v = v / C64::new(n, 0.0);
            all.push(v.clone());
            out.push(v);
        }
    }
    out
}

fn dense_h(eigs: &EigenSystem) -> CMatrix {
    let v = eigs.eigenvectors();
    let d = CMatrix::from_diagonal(&CVector::from_iterator(
        eigs.len(),
        eigs.eigenvalues().iter().map(|&a| C64::new(a, 0.0)),
    ));
    v * d * v.adjoint()
}

/// `f̃ = f + δ φ⊥` with `φ⊥ ∈ Φ^⊥` the unit vector of largest concentration
/// (top eigenvector of `H` compressed to `Φ^⊥`), and `δ` the largest value
/// of a bisection from `0.1 ‖f‖` that keeps `f̃` concentrated, halved.
pub fn null_sample_witness(
    samples: &SampleSet,
    window: &Window,
    f: &Signal,
    eigs: &EigenSystem,
    eps: f64,
) -> Result<AliasWitness> {
    Error::check_len(window.len(), f.len())?;
    Error::check_len(eigs.len(), f.len())?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param("eps", format!("{eps} is not in (0, 1)")));
    }
    let len = f.len();
    let slack = |g: &Signal| eigs.energy(g) - (1.0 - eps) * g.norm_sqr();
    if f.norm_sqr() == 0.0 || !(slack(f) > 0.0) {
        return Err(Error::Infeasible("f is not strictly (eps, phi)-concentrated".into()));
    }

    let phi_basis = orthonormal_span(&atom_matrix(samples, window)?);
    if phi_basis.len() >= len {
        return Err(Error::Infeasible("the sampled atoms span C^L".into()));
    }
    let comp = complement(&phi_basis, len);
    let c = CMatrix::from_columns(&comp);
    let compressed = c.ad_mul(&(dense_h(eigs) * &c));
    let (_, vecs) = linalg::hermitian_eigen(compressed);
    let mut phi_perp = linalg::vector_signal(&(&c * vecs.column(0)));
    phi_perp = phi_perp.normalized()?;

    let with = |d: f64| {
        let mut g = f.clone();
        g.axpy(C64::new(d, 0.0), &phi_perp);
        g
    };
    let start = 0.1 * f.norm();
    let delta = if slack(&with(start)) > 0.0 {
        start
    } else {
        let (mut lo, mut hi) = (0.0, start);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if slack(&with(mid)) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * lo
    };
    let f_tilde = with(delta);
    if !(delta > 0.0) || !(slack(&f_tilde) > 0.0) {
        return Err(Error::Infeasible("no admissible delta found".into()));
    }
    let max_sample_difference = samples
        .points()
        .iter()
        .map(|p| Ok((stft_point(f, window, *p)? - stft_point(&f_tilde, window, *p)?).norm()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(AliasWitness {
        f: f.clone(),
        f_tilde,
        phi_perp,
        delta,
        complement_dim: comp.len(),
        max_sample_difference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locop::{build_localization_operator, concentration, eigendecompose};
    use crate::recon::{make_concentrated_test_function, reconstruct};
    use crate::regions::{disk_region, uniform_sample, TFRegion};
    use crate::tfcore::{make_gaussian_window, TFPoint};

    fn setup() -> (TFRegion, Window, EigenSystem) {
        let w = make_gaussian_window(64).unwrap();
        let region = disk_region(64, TFPoint { m: 32, n: 32 }, 16.0).unwrap();
        let eigs = eigendecompose(&build_localization_operator(&region, &w).unwrap()).unwrap();
        (region, w, eigs)
    }

    #[test]
    fn nonlinearity_conditions() {
        let (region, w, eigs) = setup();
        let eps = 0.05;
        let m = largest_concentrated_index(&eigs, eps).unwrap();
        assert!(eigs.eigenvalue(m) > 1.0 - eps && eigs.eigenvalue(m + 1) <= 1.0 - eps);
        for eta in [1.5, 4.0, 15.0] {
            let wit = nonlinearity_witness(&eigs, eps, eta, m).unwrap();
            let alpha_m = eigs.eigenvalue(m);
            let c_m = wit.coefficients[0].1;
            assert!(c_m > 0.0 && c_m < (1.0 - eps) / alpha_m);
            assert!((wit.h.norm() - 1.0).abs() < 1e-8);
            assert!((eigs.energy(&wit.h) - (1.0 - eta * eps)).abs() < 1e-8);

            let lhs = concentration(&wit.f, &region, &w).unwrap().value;
            let expansion = alpha_m + 2.0 * wit.delta * alpha_m * c_m + wit.delta.powi(2) * (1.0 - eta * eps);
            assert!((lhs - expansion).abs() < 1e-8, "{lhs} vs {expansion}");
            let rhs = (1.0 + 2.0 * wit.delta * c_m + wit.delta.powi(2)) * (1.0 - eps);
            assert!(lhs > rhs);
            assert!((wit.f.norm_sqr() - (1.0 + 2.0 * wit.delta * c_m + wit.delta.powi(2))).abs() < 1e-10);

            let dh = wit.h.scaled(C64::new(wit.delta, 0.0));
            assert!(concentration(&dh, &region, &w).unwrap().epsilon > eps);
            assert!(concentration(&wit.psi_m, &region, &w).unwrap().epsilon < eps);
        }
        assert!(nonlinearity_witness(&eigs, eps, 1.0, m).is_err());
        assert!(nonlinearity_witness(&eigs, eps, 1.0 / eps, m).is_err());
        assert!(nonlinearity_witness(&eigs, eps, 2.0, eigs.len() - 1).is_err());
    }

    #[test]
    fn alias_witness_shares_samples() {
        let (region, w, eigs) = setup();
        let eps = 0.05;
        let f = make_concentrated_test_function(&eigs, 0.02, 8).unwrap();
        let set = uniform_sample(&region, 40, 2, true).unwrap();
        let wit = null_sample_witness(&set, &w, &f, &eigs, eps).unwrap();
        assert!(wit.max_sample_difference < 1e-10);
        assert!(wit.complement_dim >= 64 - 40);
        assert!(wit.delta > 1e-6);
        assert!((f.sub(&wit.f_tilde).norm() - wit.delta).abs() < 1e-12);
        for g in [&f, &wit.f_tilde] {
            assert!(concentration(g, &region, &w).unwrap().epsilon <= eps);
        }
        let a = reconstruct(&f, &set, &eigs, &w, 1e-12).unwrap();
        let b = reconstruct(&wit.f_tilde, &set, &eigs, &w, 1e-12).unwrap();
        assert!(a.p_opt.sub(&b.p_opt).norm() < 1e-9);
    }

    #[test]
    fn alias_witness_errors() {
        let (region, w, eigs) = setup();
        let f = make_concentrated_test_function(&eigs, 0.02, 8).unwrap();
        // ε below the deficit of f
        let set = uniform_sample(&region, 10, 2, true).unwrap();
        assert!(null_sample_witness(&set, &w, &f, &eigs, 0.01).is_err());
        // atoms spanning the whole space
        let full = TFRegion::full(64);
        let all = SampleSet::from_points(&full, full.points(), 0).unwrap();
        assert!(null_sample_witness(&all, &w, &f, &eigs, 0.05).is_err());
    }
}
