//! JSON form of a scalar: `["p/q", "r/s"]` (real part, imaginary part).

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::Zero;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{FieldError, Scalar};

/// Serde wrapper for [`Scalar`].
#[derive(Clone, Debug, PartialEq)]
pub struct Sc(pub Scalar);

impl From<Scalar> for Sc {
    fn from(z: Scalar) -> Self {
        Sc(z)
    }
}

/// Always written as `p/q`, including integers (`3/1`).
pub fn rational_to_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Accepts `p/q` or a bare integer `p`; `q` must be a positive decimal.
pub fn parse_rational(s: &str) -> Result<BigRational, FieldError> {
    let bad = || FieldError::Rational(s.to_string());
    let is_int = |t: &str, signed: bool| {
        let digits = if signed { t.strip_prefix('-').unwrap_or(t) } else { t };
        !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
    };
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    if !is_int(num, true) || !is_int(den, false) {
        return Err(bad());
    }
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(num, den))
}

pub fn parse_scalar(parts: &[String]) -> Result<Scalar, FieldError> {
    match parts {
        [re, im] => Ok(Complex::new(parse_rational(re)?, parse_rational(im)?)),
        _ => Err(FieldError::Scalar(format!(
            "expected [re, im], got {} components",
            parts.len()
        ))),
    }
}

impl Serialize for Sc {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [rational_to_string(&self.0.re), rational_to_string(&self.0.im)].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Sc {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let parts = Vec::<String>::deserialize(d)?;
        parse_scalar(&parts).map(Sc).map_err(D::Error::custom)
    }
}

/// Serde wrapper for a vector of scalars.
pub fn to_sc(v: &[Scalar]) -> Vec<Sc> {
    v.iter().cloned().map(Sc).collect()
}

pub fn from_sc(v: Vec<Sc>) -> Vec<Scalar> {
    v.into_iter().map(|s| s.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::scalar;
    use proptest::prelude::*;

    #[test]
    fn parses_fractions_and_integers() {
        assert_eq!(parse_rational("-3/6").unwrap(), BigRational::new((-1).into(), 2.into()));
        assert_eq!(parse_rational("7").unwrap(), BigRational::from_integer(7.into()));
        for bad in ["", "1/0", "1/-2", "a", "1/", "/2", "--1", "1.5", "+1"] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn writes_canonical_form() {
        let json = serde_json::to_string(&Sc(scalar(2, -4, 3, 1))).unwrap();
        assert_eq!(json, r#"["-1/2","3/1"]"#);
    }

    proptest! {
        #[test]
        fn json_round_trip(a in -1000i64..1000, b in 1i64..50, c in -1000i64..1000, d in 1i64..50) {
            let z = scalar(a, b, c, d);
            let text = serde_json::to_string(&Sc(z.clone())).unwrap();
            let back: Sc = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back.0, z);
        }
    }
}
