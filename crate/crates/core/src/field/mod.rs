//! Exact scalar arithmetic and small dense linear algebra.
//!
//! Everything here is generic over [`Field`]. The solver runs on [`Scalar`]
//! (complex numbers with arbitrary-precision rational parts); `Complex<f64>`
//! is provided for the floating-point spectral checks only.

mod matrix;
mod serial;

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub use matrix::{epsilon, is_in_span, mat_mul, nullspace, projector_from_span, rank_of, EchelonBasis, Matrix};
pub use serial::{from_sc, parse_rational, parse_scalar, rational_to_string, to_sc, Sc};

/// Exact Gaussian rational: `re + i·im` with `re, im ∈ ℚ`.
pub type Scalar = Complex<BigRational>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("malformed rational {0:?}")]
    Rational(String),
    #[error("malformed scalar: {0}")]
    Scalar(String),
}

/// A field usable by the linear-algebra routines.
///
/// The `*_ref` methods exist so hot loops over big rationals avoid clones.
pub trait Field:
    Clone
    + PartialEq
    + fmt::Debug
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    fn conj(&self) -> Self;
    fn add_ref(&self, rhs: &Self) -> Self;
    fn sub_ref(&self, rhs: &Self) -> Self;
    fn mul_ref(&self, rhs: &Self) -> Self;
    fn div_ref(&self, rhs: &Self) -> Self;
    fn from_i64(v: i64) -> Self;

    /// `|z|²`, embedded back into the field.
    fn abs_sqr(&self) -> Self {
        self.conj().mul_ref(self)
    }

    /// `self += a·b`
    fn add_mul(&mut self, a: &Self, b: &Self) {
        *self = self.add_ref(&a.mul_ref(b));
    }

    /// `self -= a·b`
    fn sub_mul(&mut self, a: &Self, b: &Self) {
        *self = self.sub_ref(&a.mul_ref(b));
    }
}

impl Field for Scalar {
    fn conj(&self) -> Self {
        Complex::new(self.re.clone(), -&self.im)
    }
    fn add_ref(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub_ref(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul_ref(&self, rhs: &Self) -> Self {
        // Real and purely imaginary operands are common; skip the full product.
        if self.im.is_zero() && rhs.im.is_zero() {
            return Complex::new(&self.re * &rhs.re, BigRational::zero());
        }
        self * rhs
    }
    fn div_ref(&self, rhs: &Self) -> Self {
        if rhs.im.is_zero() {
            return Complex::new(&self.re / &rhs.re, &self.im / &rhs.re);
        }
        self / rhs
    }
    fn from_i64(v: i64) -> Self {
        Complex::new(BigRational::from_integer(v.into()), BigRational::zero())
    }
    fn abs_sqr(&self) -> Self {
        Complex::new(&self.re * &self.re + &self.im * &self.im, BigRational::zero())
    }
    fn add_mul(&mut self, a: &Self, b: &Self) {
        if a.is_zero() || b.is_zero() {
            return;
        }
        *self = &*self + a.mul_ref(b);
    }
    fn sub_mul(&mut self, a: &Self, b: &Self) {
        if a.is_zero() || b.is_zero() {
            return;
        }
        *self = &*self - a.mul_ref(b);
    }
}

impl Field for Complex64 {
    fn conj(&self) -> Self {
        Complex::conj(self)
    }
    fn add_ref(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub_ref(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul_ref(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div_ref(&self, rhs: &Self) -> Self {
        self / rhs
    }
    fn from_i64(v: i64) -> Self {
        Complex64::new(v as f64, 0.0)
    }
}

/// Builds `(rn/rd) + i·(in/id)`. Panics on a zero denominator.
pub fn scalar(rn: i64, rd: i64, inum: i64, id: i64) -> Scalar {
    Complex::new(
        BigRational::new(rn.into(), rd.into()),
        BigRational::new(inum.into(), id.into()),
    )
}

/// Real integer scalar.
pub fn int(v: i64) -> Scalar {
    Scalar::from_i64(v)
}

/// Purely imaginary integer scalar `i·v`.
pub fn imag(v: i64) -> Scalar {
    Complex::new(BigRational::zero(), BigRational::from_integer(v.into()))
}

/// Rescales a projective vector in place: entries become Gaussian integers
/// with coprime components and the first nonzero entry points into the
/// half plane `re > 0 ∨ (re = 0 ∧ im > 0)`. Zero vectors are left alone.
pub fn normalize_projective(v: &mut [Scalar]) {
    let Some(lead) = v.iter().position(|z| !z.is_zero()) else {
        return;
    };
    let mut den = BigInt::one();
    for z in v.iter() {
        den = den.lcm(z.re.denom());
        den = den.lcm(z.im.denom());
    }
    let mut content = BigInt::zero();
    for z in v.iter() {
        for part in [&z.re, &z.im] {
            let k = part.numer() * (&den / part.denom());
            content = content.gcd(&k);
        }
    }
    let flip = v[lead].re.is_negative() || (v[lead].re.is_zero() && v[lead].im.is_negative());
    let mut factor = BigRational::new(den, content);
    if flip {
        factor = -factor;
    }
    if factor.is_one() {
        return;
    }
    for z in v.iter_mut() {
        z.re *= &factor;
        z.im *= &factor;
    }
}

/// Real part of a scalar known to be real; used for norms and energies.
pub fn real_part(z: &Scalar) -> BigRational {
    z.re.clone()
}

/// Lossy conversion used only by floating-point checks.
pub fn to_complex64(z: &Scalar) -> Complex64 {
    use num_traits::ToPrimitive;
    Complex64::new(z.re.to_f64().unwrap_or(f64::NAN), z.im.to_f64().unwrap_or(f64::NAN))
}

/// Hermitian inner product `⟨u, v⟩ = Σ conj(u_i) v_i`.
pub fn inner<T: Field>(u: &[T], v: &[T]) -> T {
    let mut acc = T::zero();
    for (a, b) in u.iter().zip(v) {
        acc.add_mul(&a.conj(), b);
    }
    acc
}

/// Bilinear contraction `Σ u_i v_i` (no conjugation).
pub fn dot<T: Field>(u: &[T], v: &[T]) -> T {
    let mut acc = T::zero();
    for (a, b) in u.iter().zip(v) {
        acc.add_mul(a, b);
    }
    acc
}

/// Kronecker product of two vectors, first factor most significant.
pub fn kron_vec<T: Field>(u: &[T], v: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(u.len() * v.len());
    for a in u {
        for b in v {
            out.push(a.mul_ref(b));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_ops_are_exact() {
        let a = scalar(1, 3, 2, 5);
        let b = scalar(-7, 2, 1, 1);
        let q = a.div_ref(&b);
        assert_eq!(q.mul_ref(&b), a);
        assert_eq!(a.conj().conj(), a);
        assert_eq!(a.abs_sqr(), scalar(1, 9, 0, 1) + scalar(4, 25, 0, 1));
    }

    #[test]
    fn canonical_denominators() {
        let z = scalar(4, -8, 6, 4);
        assert_eq!(z.re, BigRational::new((-1).into(), 2.into()));
        assert!(z.re.denom().is_positive());
        assert_eq!(*z.im.numer(), BigInt::from(3));
    }

    #[test]
    fn projective_normalization() {
        let mut v = vec![scalar(-1, 2, 0, 1), scalar(3, 4, 1, 4)];
        normalize_projective(&mut v);
        assert_eq!(v, vec![int(2), scalar(-3, 1, -1, 1)]);
        let mut w = vec![int(0), imag(-6), int(4)];
        normalize_projective(&mut w);
        assert_eq!(w, vec![int(0), imag(3), int(-2)]);
        let mut z = vec![int(0), int(0)];
        normalize_projective(&mut z);
        assert_eq!(z, vec![int(0), int(0)]);
    }
}
