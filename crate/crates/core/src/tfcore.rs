//! Discrete time-frequency engine on the cyclic group Z_L.
//!
//! Conventions used throughout the crate:
//!
//! * `(π(m, n) f)(t) = f((t - m) mod L) · e^{2πi n t / L}`
//! * `V_φ f(m, n) = ⟨f, π(m, n) φ⟩ = Σ_t f(t) · conj(φ(t - m)) · e^{-2πi n t / L}`
//! * each grid point carries measure `1/L`, so the full `L × L` grid has
//!   measure `L` and `V_φ` is an isometry for unit-norm windows.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::par::Execution;

pub type C64 = Complex64;

const WINDOW_NORM_TOL: f64 = 1e-12;

/// A vector in `ℂ^L`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    values: Vec<C64>,
}

impl Signal {
    pub fn new(values: Vec<C64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidDimension {
                len: 0,
                reason: "signal must be non-empty",
            });
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::param("values", "non-finite entry"));
        }
        Ok(Signal { values })
    }

    pub(crate) fn from_vec_unchecked(values: Vec<C64>) -> Self {
        debug_assert!(!values.is_empty());
        Signal { values }
    }

    pub fn zeros(len: usize) -> Self {
        Signal::from_vec_unchecked(vec![C64::new(0.0, 0.0); len])
    }

    pub fn delta(len: usize, at: usize) -> Self {
        let mut s = Signal::zeros(len);
        s.values[at % len] = C64::new(1.0, 0.0);
        s
    }

    /// Standard complex Gaussian entries (independent real and imaginary parts).
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let values = (0..len)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Signal::from_vec_unchecked(values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `⟨self, other⟩ = Σ self(t) · conj(other(t))`.
    pub fn inner(&self, other: &Signal) -> C64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum()
    }

    pub fn scaled(&self, s: C64) -> Signal {
        Signal::from_vec_unchecked(self.values.iter().map(|z| z * s).collect())
    }

    /// `self += a · x`
    pub fn axpy(&mut self, a: C64, x: &Signal) {
        debug_assert_eq!(self.len(), x.len());
        for (y, xv) in self.values.iter_mut().zip(&x.values) {
            *y += a * xv;
        }
    }

    pub fn sub(&self, other: &Signal) -> Signal {
        let mut out = self.clone();
        out.axpy(C64::new(-1.0, 0.0), other);
        out
    }

    pub fn normalized(&self) -> Result<Signal> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroSignal);
        }
        Ok(self.scaled(C64::new(1.0 / n, 0.0)))
    }
}

/// A unit-norm analysis atom.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    signal: Signal,
}

impl Window {
    pub fn new(signal: Signal) -> Result<Self> {
        let n = signal.norm();
        if (n - 1.0).abs() > WINDOW_NORM_TOL {
            return Err(Error::param("window", format!("norm {n} is not 1")));
        }
        Ok(Window { signal })
    }

    /// Rescales `signal` to unit norm.
    pub fn normalize(signal: Signal) -> Result<Self> {
        Ok(Window {
            signal: signal.normalized()?,
        })
    }

    pub fn signal(&self) -> &Signal {
        &self.signal
    }

    pub fn len(&self) -> usize {
        self.signal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signal.is_empty()
    }

    pub(crate) fn values(&self) -> &[C64] {
        self.signal.values()
    }
}

/// Time-frequency grid point `(m, n)`: time shift `m`, frequency `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TFPoint {
    pub m: usize,
    pub n: usize,
}

impl TFPoint {
    pub fn new(m: usize, n: usize, len: usize) -> Result<Self> {
        if m >= len || n >= len {
            return Err(Error::param(
                "point",
                format!("({m}, {n}) outside the {len}x{len} grid"),
            ));
        }
        Ok(TFPoint { m, n })
    }

    /// `(self - other) mod L` in both coordinates.
    pub fn wrapping_sub(self, other: TFPoint, len: usize) -> TFPoint {
        TFPoint {
            m: (self.m + len - other.m) % len,
            n: (self.n + len - other.n) % len,
        }
    }
}

/// `L × L` array of STFT values, row-major in `(m, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TFMatrix {
    len: usize,
    values: Vec<C64>,
}

impl TFMatrix {
    pub fn zeros(len: usize) -> Self {
        TFMatrix {
            len,
            values: vec![C64::new(0.0, 0.0); len * len],
        }
    }

    pub fn from_values(len: usize, values: Vec<C64>) -> Result<Self> {
        Error::check_len(len * len, values.len())?;
        Ok(TFMatrix { len, values })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, p: TFPoint) -> C64 {
        self.values[p.m * self.len + p.n]
    }

    pub fn set(&mut self, p: TFPoint, z: C64) {
        self.values[p.m * self.len + p.n] = z;
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn row(&self, m: usize) -> &[C64] {
        &self.values[m * self.len..(m + 1) * self.len]
    }

    /// `(1/L) Σ |V(m, n)|²`
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.len as f64
    }

    /// Inner product with grid weight `1/L`.
    pub fn inner(&self, other: &TFMatrix) -> C64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum::<C64>()
            / self.len as f64
    }

    /// `|V(m, n)|²` as a real grid, used for plot dumps.
    pub fn power(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// Periodized, unit-norm discrete Gaussian `Σ_k exp(-π (t + kL)² / L)`.
pub fn make_gaussian_window(len: usize) -> Result<Window> {
    if len < 4 {
        return Err(Error::InvalidDimension {
            len,
            reason: "gaussian window needs L >= 4",
        });
    }
    let lf = len as f64;
    // exp(-π K² L) < 1e-16 bounds every omitted wrap term.
    let mut wraps = 1usize;
    while std::f64::consts::PI * (wraps * wraps) as f64 * lf <= 37.0 {
        wraps += 1;
    }
    let k = wraps as i64 + 1;
    let values: Vec<C64> = (0..len)
        .map(|t| {
            let s: f64 = (-k..=k)
                .map(|j| {
                    let x = t as f64 + j as f64 * lf;
                    (-std::f64::consts::PI * x * x / lf).exp()
                })
                .sum();
            C64::new(s, 0.0)
        })
        .collect();
    Window::normalize(Signal::from_vec_unchecked(values))
}

/// `π(λ) f`
pub fn tf_shift(f: &Signal, p: TFPoint) -> Result<Signal> {
    let len = f.len();
    TFPoint::new(p.m, p.n, len)?;
    let values = (0..len)
        .map(|t| f.values[(t + len - p.m) % len] * modulation(p.n * t, len))
        .collect();
    Ok(Signal::from_vec_unchecked(values))
}

/// `e^{2πi k / L}` with `k` reduced modulo `L` first, which keeps the phase
/// accurate for large products `n·t`.
#[inline]
pub(crate) fn modulation(k: usize, len: usize) -> C64 {
    let k = k % len;
    C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / len as f64)
}

fn forward_plan(len: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_forward(len)
}

fn inverse_plan(len: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_inverse(len)
}

/// Full STFT via one length-`L` FFT per time shift.
pub fn stft(f: &Signal, window: &Window) -> Result<TFMatrix> {
    stft_with(f, window, Execution::default())
}

pub fn stft_with(f: &Signal, window: &Window, exec: Execution) -> Result<TFMatrix> {
    let len = f.len();
    Error::check_len(len, window.len())?;
    let fft = forward_plan(len);
    let phi = window.values();
    let fv = f.values();
    let mut out = TFMatrix::zeros(len);
    exec.for_each_chunk(&mut out.values, len, |m, row| {
        for (t, slot) in row.iter_mut().enumerate() {
            *slot = fv[t] * phi[(t + len - m) % len].conj();
        }
        fft.process(row);
    });
    Ok(out)
}

/// Synthesis operator with grid weight `1/L`:
/// `g(t) = (1/L) Σ_{m,n} F(m, n) · φ(t - m) · e^{2πi n t / L}`.
pub fn stft_adjoint(coeffs: &TFMatrix, window: &Window) -> Result<Signal> {
    stft_adjoint_with(coeffs, window, Execution::default())
}

pub fn stft_adjoint_with(coeffs: &TFMatrix, window: &Window, exec: Execution) -> Result<Signal> {
    let len = coeffs.len();
    Error::check_len(len, window.len())?;
    let ifft = inverse_plan(len);
    let phi = window.values();
    let mut rows = coeffs.values.clone();
    exec.for_each_chunk(&mut rows, len, |m, row| {
        ifft.process(row);
        for (t, z) in row.iter_mut().enumerate() {
            *z *= phi[(t + len - m) % len];
        }
    });
    let scale = 1.0 / len as f64;
    let values = (0..len)
        .map(|t| (0..len).map(|m| rows[m * len + t]).sum::<C64>() * scale)
        .collect();
    Ok(Signal::from_vec_unchecked(values))
}

/// Single STFT sample `V_φ f(λ)` in `O(L)`.
pub fn stft_point(f: &Signal, window: &Window, p: TFPoint) -> Result<C64> {
    let len = f.len();
    Error::check_len(len, window.len())?;
    TFPoint::new(p.m, p.n, len)?;
    Ok(stft_point_unchecked(f.values(), window.values(), p))
}

#[inline]
pub(crate) fn stft_point_unchecked(f: &[C64], phi: &[C64], p: TFPoint) -> C64 {
    let len = f.len();
    (0..len)
        .map(|t| f[t] * phi[(t + len - p.m) % len].conj() * modulation(p.n * t, len).conj())
        .sum()
}
