//! Scalar helpers shared by the model: digamma, stable sigmoid forms,
//! log-sum-exp and the storage scalar abstraction.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Sub};
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

/// Storage type for prototype and output vectors.
///
/// Vectors are stored as `f32` for throughput; `f64` models exist for
/// gradient checks. All dot products and accumulations happen in `f64`.
pub trait Scalar:
    Copy
    + Debug
    + Default
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + AddAssign
{
    const ZERO: Self;

    fn to_f64(self) -> f64;
    fn from_f64(v: f64) -> Self;
    fn is_finite(self) -> bool;

    /// Relaxed atomic load used by lock-free parallel training.
    ///
    /// # Safety
    /// `ptr` must be valid and aligned, and every concurrent access to the
    /// same location must also go through these atomic helpers.
    unsafe fn load_relaxed(ptr: *const Self) -> Self;

    /// Relaxed atomic store; see [`Scalar::load_relaxed`].
    ///
    /// # Safety
    /// Same contract as [`Scalar::load_relaxed`].
    unsafe fn store_relaxed(ptr: *mut Self, value: Self);
}

impl Scalar for f32 {
    const ZERO: Self = 0.0;

    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }

    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn is_finite(self) -> bool {
        f32::is_finite(self)
    }

    #[inline]
    unsafe fn load_relaxed(ptr: *const Self) -> Self {
        f32::from_bits(AtomicU32::from_ptr(ptr as *mut u32).load(Ordering::Relaxed))
    }

    #[inline]
    unsafe fn store_relaxed(ptr: *mut Self, value: Self) {
        AtomicU32::from_ptr(ptr as *mut u32).store(value.to_bits(), Ordering::Relaxed)
    }
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;

    #[inline]
    fn to_f64(self) -> f64 {
        self
    }

    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }

    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }

    #[inline]
    unsafe fn load_relaxed(ptr: *const Self) -> Self {
        f64::from_bits(AtomicU64::from_ptr(ptr as *mut u64).load(Ordering::Relaxed))
    }

    #[inline]
    unsafe fn store_relaxed(ptr: *mut Self, value: Self) {
        AtomicU64::from_ptr(ptr as *mut u64).store(value.to_bits(), Ordering::Relaxed)
    }
}

/// Dot product accumulated in `f64` over four interleaved lanes.
#[inline]
pub fn dot<F: Scalar>(a: &[F], b: &[F]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let (ca, ra) = (a.chunks_exact(4), a.chunks_exact(4).remainder());
    let rb = b.chunks_exact(4).remainder();
    for (x, y) in ca.zip(b.chunks_exact(4)) {
        for l in 0..4 {
            acc[l] += x[l].to_f64() * y[l].to_f64();
        }
    }
    let mut tail = 0.0;
    for (&x, &y) in ra.iter().zip(rb) {
        tail += x.to_f64() * y.to_f64();
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += a * x`, with the product formed in `f64`.
#[inline]
pub fn axpy<F: Scalar>(a: f64, x: &[F], y: &mut [F]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = F::from_f64(yi.to_f64() + a * xi.to_f64());
    }
}

/// Euclidean norm accumulated in `f64`.
pub fn norm<F: Scalar>(a: &[F]) -> f64 {
    dot(a, a).sqrt()
}

/// Logistic function, evaluated without overflow for either sign.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log σ(x) = -softplus(-x)`; finite for every finite `x`.
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Numerically stable `log Σ exp(x_i)`. Returns `-inf` for an empty slice
/// or when every entry is `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Replace log-weights by the normalized probabilities they define.
pub fn exp_normalize(xs: &mut [f64]) {
    let lse = log_sum_exp(xs);
    for x in xs.iter_mut() {
        *x = (*x - lse).exp();
    }
}

/// Digamma function ψ(x) for x > 0.
///
/// Shifts the argument upward with ψ(x) = ψ(x + 1) − 1/x until x ≥ 10 and
/// then evaluates the asymptotic expansion
/// ψ(x) ≈ ln x − 1/(2x) − Σ B₂ₙ / (2n x²ⁿ).
pub fn digamma(x: f64) -> f64 {
    if x.is_nan() || x <= 0.0 {
        return f64::NAN;
    }
    if x.is_infinite() {
        return f64::INFINITY;
    }
    let mut x = x;
    let mut shift = 0.0;
    while x < 10.0 {
        shift -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Bernoulli terms B2/2, B4/4, ... B14/14
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    shift + x.ln() - 0.5 * inv - series
}
