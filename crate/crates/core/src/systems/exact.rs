//! Arbitrary-precision orbit states. The Gauss map acts exactly on
//! rationals (one Euclid step per iteration); the golden beta-map acts
//! exactly on `Q(sqrt 5)`, since `beta * (a + b beta) = b + (a + b) beta`.

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Truncates a non-negative rational `num / den <= 1` to a dyadic with
/// `bits` fractional bits.
pub(crate) fn truncate_dyadic(num: &BigUint, den: &BigUint, bits: u32) -> (BigUint, BigUint) {
    let scale = BigUint::one() << bits;
    let a = (num * &scale) / den;
    (a, scale)
}

/// `num / den` as an `f64`, correctly rounded up to the last couple of ulps.
pub(crate) fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let shift = 64 + den.bits() as i64 - num.bits() as i64;
    let q = if shift >= 0 {
        (num << shift as u64) / den
    } else {
        num / (den << (-shift) as u64)
    };
    q.to_f64().unwrap_or(f64::INFINITY) * (-(shift as f64)).exp2()
}

/// Exact Gauss-map state `num / den` in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaussRational {
    num: BigUint,
    den: BigUint,
}

impl GaussRational {
    pub fn new(num: BigUint, den: BigUint) -> Result<Self> {
        if den.is_zero() || num > den {
            return Err(Error::invalid("Gauss state must be a rational in [0, 1]"));
        }
        Ok(Self { num, den })
    }

    /// Applies `T(x) = 1/x mod 1`, returning the partial quotient
    /// `floor(1/x)` (0 at the fixed point 0).
    pub fn step(&mut self) -> u64 {
        if self.num.is_zero() {
            return 0;
        }
        let k = &self.den / &self.num;
        let rem = &self.den % &self.num;
        self.den = std::mem::replace(&mut self.num, rem);
        k.to_u64().unwrap_or(u64::MAX)
    }

    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.num, &self.den)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
}

/// Exact golden beta-map state `(a + b * beta) / den` in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldenState {
    a: BigInt,
    b: BigInt,
    den: BigInt,
}

impl GoldenState {
    pub fn from_rational(num: BigUint, den: BigUint) -> Result<Self> {
        if den.is_zero() || num > den {
            return Err(Error::invalid("beta state must be a rational in [0, 1]"));
        }
        Ok(Self {
            a: BigInt::from(num),
            b: BigInt::zero(),
            den: BigInt::from(den),
        })
    }

    /// Applies `T(x) = beta x mod 1`; returns the digit 0 or 1.
    pub fn step(&mut self) -> u64 {
        let new_b = &self.a + &self.b;
        let new_a = std::mem::replace(&mut self.b, new_b);
        self.a = new_a;
        // digit is 1 iff (a - den) + b*beta >= 0
        let shifted = &self.a - &self.den;
        if golden_sign(&shifted, &self.b) != Sign::Minus {
            self.a = shifted;
            1
        } else {
            0
        }
    }

    pub fn to_f64(&self) -> f64 {
        // 2^(k+1) * beta = 2^k + sqrt(5) * 2^k, with sqrt(5) * 2^k floored.
        let k = self.b.bits() + 80;
        let sqrt5 = BigInt::from(sqrt5_scaled(k));
        let two_k = BigInt::one() << k;
        let scaled = (&self.a << (k + 1)) + &self.b * (&two_k + sqrt5);
        let den = &self.den << (k + 1);
        match (scaled.to_biguint(), den.to_biguint()) {
            (Some(n), Some(d)) => ratio_to_f64(&n, &d).min(1.0),
            _ => 0.0,
        }
    }
}

thread_local! {
    static SQRT5: std::cell::RefCell<(u64, BigUint)> = std::cell::RefCell::new((0, BigUint::zero()));
}

/// `floor(sqrt(5) * 2^k)`, cut down from a cached value at least as precise.
fn sqrt5_scaled(k: u64) -> BigUint {
    SQRT5.with(|c| {
        let mut c = c.borrow_mut();
        if c.0 < k {
            let kk = k.max(2 * c.0).max(1024);
            *c = (kk, (BigUint::from(5u32) << (2 * kk)).sqrt());
        }
        &c.1 >> (c.0 - k)
    })
}

/// Sign of `m + n * beta` with `beta = (1 + sqrt 5) / 2`, computed exactly
/// as the sign of `(2m + n) + n sqrt 5`.
pub(crate) fn golden_sign(m: &BigInt, n: &BigInt) -> Sign {
    let u = BigInt::from(2) * m + n;
    let su = u.sign();
    let sn = n.sign();
    match (su, sn) {
        (Sign::NoSign, s) | (s, Sign::NoSign) => s,
        (a, b) if a == b => a,
        _ => {
            let u2 = &u * &u;
            let v2 = BigInt::from(5) * n * n;
            match u2.cmp(&v2) {
                std::cmp::Ordering::Greater => su,
                std::cmp::Ordering::Less => sn,
                std::cmp::Ordering::Equal => Sign::NoSign,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rational_is_euclid() {
        // 13/31 = [0; 2, 2, 1, 1, 2]
        let mut s = GaussRational::new(BigUint::from(13u32), BigUint::from(31u32)).unwrap();
        let digits: Vec<u64> = (0..6).map(|_| s.step()).collect();
        assert_eq!(digits, vec![2, 2, 1, 1, 2, 0]);
        assert!(s.is_zero());
    }

    #[test]
    fn ratio_conversion() {
        let v = ratio_to_f64(&BigUint::from(1u32), &BigUint::from(3u32));
        assert!((v - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn golden_exact_matches_float_briefly() {
        let x0 = 0.3f64;
        let (num, den) = truncate_dyadic(&BigUint::from(3u32), &BigUint::from(10u32), 200);
        let mut s = GoldenState::from_rational(num, den).unwrap();
        let mut x = x0;
        for _ in 0..20 {
            let d = s.step();
            let y = crate::systems::GOLDEN * x;
            let k = u64::from(y >= 1.0);
            x = y - k as f64;
            assert_eq!(d, k);
            assert!((s.to_f64() - x).abs() < 1e-9);
        }
    }

    #[test]
    fn cached_sqrt5_matches_direct() {
        for k in [10u64, 2000, 1500, 5000, 64] {
            let direct = (BigUint::from(5u32) << (2 * k)).sqrt();
            assert_eq!(sqrt5_scaled(k), direct, "k = {k}");
        }
    }

    #[test]
    fn golden_sign_cases() {
        let s = |m: i64, n: i64| golden_sign(&BigInt::from(m), &BigInt::from(n));
        assert_eq!(s(-1, 1), Sign::Plus); // beta - 1 > 0
        assert_eq!(s(-2, 1), Sign::Minus); // beta - 2 < 0
        assert_eq!(s(2, -1), Sign::Plus);
        assert_eq!(s(0, 0), Sign::NoSign);
        assert_eq!(s(-1597, 987), Sign::Minus); // 987 beta = 1596.99955
        assert_eq!(s(-1596, 987), Sign::Plus);
    }
}
