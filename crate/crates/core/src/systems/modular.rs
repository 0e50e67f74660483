//! Exact orbits of integer-matrix maps on rational points `a / q`.

use std::fmt;

use num_integer::Integer;
use rand::Rng;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::geometry::Coords;

/// A rational point `(a_1 / q_1, ..., a_d / q_d)` with `0 <= a_i < q_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModularPoint {
    nums: SmallVec<[u64; 2]>,
    mods: SmallVec<[u64; 2]>,
}

impl ModularPoint {
    pub fn new(nums: &[u64], mods: &[u64]) -> Result<Self> {
        if nums.is_empty() || nums.len() != mods.len() {
            return Err(Error::invalid(
                "numerators and moduli must be non-empty and of equal length",
            ));
        }
        for (a, q) in nums.iter().zip(mods) {
            if *q < 2 || *q >= 1 << 62 {
                return Err(Error::invalid(format!("modulus {q} outside [2, 2^62)")));
            }
            if a >= q {
                return Err(Error::invalid(format!("numerator {a} must be below its modulus {q}")));
            }
        }
        Ok(Self {
            nums: SmallVec::from_slice(nums),
            mods: SmallVec::from_slice(mods),
        })
    }

    /// Parses `"a/q"` or `"a/q,b/p"`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut nums = Vec::new();
        let mut mods = Vec::new();
        for part in s.split(',') {
            let (a, q) = part
                .trim()
                .split_once('/')
                .ok_or_else(|| Error::invalid(format!("expected a/q, got '{part}'")))?;
            nums.push(
                a.trim()
                    .parse::<u64>()
                    .map_err(|e| Error::invalid(format!("bad numerator '{a}': {e}")))?,
            );
            mods.push(
                q.trim()
                    .parse::<u64>()
                    .map_err(|e| Error::invalid(format!("bad modulus '{q}': {e}")))?,
            );
        }
        Self::new(&nums, &mods)
    }

    pub fn dim(&self) -> usize {
        self.nums.len()
    }

    pub fn nums(&self) -> &[u64] {
        &self.nums
    }

    pub fn mods(&self) -> &[u64] {
        &self.mods
    }

    pub fn to_coords(&self) -> Coords {
        self.nums
            .iter()
            .zip(&self.mods)
            .map(|(a, q)| *a as f64 / *q as f64)
            .collect()
    }

    /// Checks that each modulus is coprime to every multiplier of the map,
    /// which makes the orbit purely periodic.
    pub(crate) fn check_coprime(&self, multipliers: &[u64]) -> Result<()> {
        if multipliers.len() != self.dim() {
            return Err(Error::InvalidMode(format!(
                "seed has dimension {} but the map has dimension {}",
                self.dim(),
                multipliers.len()
            )));
        }
        let product: u64 = multipliers.iter().product();
        for q in &self.mods {
            if q.gcd(&product) != 1 {
                return Err(Error::InvalidMode(format!(
                    "modulus {q} shares a factor with the map's integer data {product}"
                )));
            }
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn multiply(&mut self, multipliers: &[u64]) -> u64 {
        let mut digit = 0;
        for (i, m) in multipliers.iter().enumerate() {
            let prod = self.nums[i] as u128 * *m as u128;
            let q = self.mods[i] as u128;
            digit = digit * m + (prod / q) as u64;
            self.nums[i] = (prod % q) as u64;
        }
        digit
    }
}

impl fmt::Display for ModularPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (a, q)) in self.nums.iter().zip(&self.mods).enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            let g = a.gcd(q).max(1);
            write!(f, "{}/{}", a / g, q / g)?;
        }
        Ok(())
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime_u64(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for p in BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A uniformly drawn prime with exactly `bits` bits (top bit set).
pub fn random_prime<R: Rng + ?Sized>(rng: &mut R, bits: u32) -> Result<u64> {
    if !(8..=62).contains(&bits) {
        return Err(Error::invalid(format!("modulus_bits must lie in [8, 62], got {bits}")));
    }
    let top = 1u64 << (bits - 1);
    loop {
        let candidate = (rng.random::<u64>() & (top - 1)) | top | 1;
        if is_prime_u64(candidate) {
            return Ok(candidate);
        }
    }
}
