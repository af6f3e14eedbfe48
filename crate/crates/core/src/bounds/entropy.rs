use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::{Error, Result};

/// `H(x) = −[x log₂ x + (1−x) log₂(1−x)]` with `0·log 0 = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::out_of_range("x", x, "entropy argument must lie in [0, 1]"));
    }
    Ok(binary_entropy_unchecked(x))
}

pub(crate) fn binary_entropy_unchecked(x: f64) -> f64 {
    let term = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    term(x) + term(1.0 - x)
}

/// Exact binomial coefficient.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `log₂` of a big integer, accurate to double precision.
pub fn log2_big(v: &BigUint) -> f64 {
    if v.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().expect("fits in f64").log2();
    }
    let shift = bits - 64;
    let top = (v >> shift).to_f64().expect("64-bit head");
    top.log2() + shift as f64
}

/// One instance of `C(N, r) ≤ 2^{N·H(r/N)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinomialEntropyCheck {
    /// `log₂ C(N, r)`
    pub lhs: f64,
    /// `N·H(r/N)`
    pub rhs: f64,
    pub holds: bool,
}

/// Checks `C(N, r) ≤ 2^{N·H(r/N)}` exactly. The right-hand side equals
/// `N^N / (r^r (N−r)^{N−r})`, so the test is the integer comparison
/// `C(N, r) · r^r · (N−r)^{N−r} ≤ N^N`.
pub fn binomial_entropy_inequality(n: u64, r: u64) -> Result<BinomialEntropyCheck> {
    if r > n {
        return Err(Error::out_of_range("r", r as f64, format!("must not exceed N = {n}")));
    }
    let c = binomial(n, r);
    let lhs_int = &c * pow(r, r) * pow(n - r, n - r);
    let rhs_int = pow(n, n);
    let rhs = if n == 0 {
        0.0
    } else {
        n as f64 * binary_entropy_unchecked(r as f64 / n as f64)
    };
    Ok(BinomialEntropyCheck {
        lhs: log2_big(&c),
        rhs,
        holds: lhs_int <= rhs_int,
    })
}

// 0^0 = 1, matching the 0·log 0 = 0 convention
fn pow(base: u64, exp: u64) -> BigUint {
    num_traits::pow(BigUint::from(base), exp as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.11).unwrap() - 0.49999).abs() < 1e-4);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.5).is_err());
    }

    #[test]
    fn entropy_is_concave_on_grid() {
        let h = |x: f64| binary_entropy(x).unwrap();
        for i in 1..999 {
            let x = i as f64 / 1000.0;
            let d = 1e-3;
            assert!(h(x - d) + h(x + d) - 2.0 * h(x) <= 1e-12, "x = {x}");
        }
    }

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(4, 2), BigUint::from(6u32));
        assert_eq!(binomial(20, 3), BigUint::from(1140u32));
        assert_eq!(binomial(5, 7), BigUint::zero());
    }

    #[test]
    fn log2_of_huge_integer() {
        let v = BigUint::one() << 5000u32;
        assert!((log2_big(&v) - 5000.0).abs() < 1e-9);
        let three = num_traits::pow(BigUint::from(3u32), 2000);
        assert!((log2_big(&three) - 2000.0 * 3f64.log2()).abs() < 1e-6);
    }

    #[test]
    fn inequality_examples() {
        let c = binomial_entropy_inequality(4, 2).unwrap();
        assert!((c.lhs - 6f64.log2()).abs() < 1e-12);
        assert_eq!(c.rhs, 4.0);
        assert!(c.holds);
        let zero = binomial_entropy_inequality(10, 0).unwrap();
        assert_eq!((zero.lhs, zero.rhs, zero.holds), (0.0, 0.0, true));
        assert!(binomial_entropy_inequality(3, 4).is_err());
    }
}
