//! The built-in measure-preserving systems `([0,1]^d, T, mu)`: map,
//! branch partition, invariant density, expansion constant and samplers.

mod exact;
mod modular;
mod orbit;
pub mod validation;

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Coords, Hyperrectangle, Point};

pub use exact::{GaussRational, GoldenState};
pub use modular::{is_prime_u64, random_prime, ModularPoint};
pub use orbit::{Orbit, OrbitMode, Seed};

/// Golden ratio, the fixed base of the beta-transformation.
pub const GOLDEN: f64 = 1.618_033_988_749_895;
/// Parry normalizing constant `C = (beta + 1) / (beta + 2)` for golden beta.
pub const PARRY_C: f64 = (GOLDEN + 1.0) / (GOLDEN + 2.0);
/// `1 / beta`, the single branch point of the golden beta-map.
pub const GOLDEN_INV: f64 = GOLDEN - 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Gauss,
    BetaGolden,
    Doubling,
    ToralDiag23,
}

impl SystemKind {
    pub const ALL: [SystemKind; 4] = [
        SystemKind::Gauss,
        SystemKind::BetaGolden,
        SystemKind::Doubling,
        SystemKind::ToralDiag23,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SystemKind::Gauss => "gauss",
            SystemKind::BetaGolden => "beta_golden",
            SystemKind::Doubling => "doubling",
            SystemKind::ToralDiag23 => "toral_diag23",
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SystemKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            Error::invalid(format!(
                "unknown system '{s}' (expected gauss, beta_golden, doubling or toral_diag23)"
            ))
        })
    }
}

/// One element `U_i` of the branch partition, reported by its closure.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub digit: u64,
    pub bounds: Hyperrectangle,
}

/// A concrete system. Immutable; share freely across threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystemDescriptor {
    kind: SystemKind,
}

impl SystemDescriptor {
    pub fn new(kind: SystemKind) -> Self {
        Self { kind }
    }

    pub fn gauss() -> Self {
        Self::new(SystemKind::Gauss)
    }

    pub fn beta_golden() -> Self {
        Self::new(SystemKind::BetaGolden)
    }

    pub fn doubling() -> Self {
        Self::new(SystemKind::Doubling)
    }

    pub fn toral_diag23() -> Self {
        Self::new(SystemKind::ToralDiag23)
    }

    pub fn all() -> [SystemDescriptor; 4] {
        SystemKind::ALL.map(Self::new)
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            SystemKind::ToralDiag23 => 2,
            _ => 1,
        }
    }

    /// Integer multipliers of the linear systems, one per axis.
    pub(crate) fn multipliers(&self) -> Option<&'static [u64]> {
        match self.kind {
            SystemKind::Doubling => Some(&[2]),
            SystemKind::ToralDiag23 => Some(&[2, 3]),
            _ => None,
        }
    }

    /// Orbit modes the engine can run for this system.
    pub fn supports(&self, mode: &OrbitMode) -> bool {
        matches!(
            (self.kind, mode),
            (
                SystemKind::Gauss | SystemKind::BetaGolden,
                OrbitMode::Float64 | OrbitMode::HighPrecision { .. }
            ) | (SystemKind::Doubling | SystemKind::ToralDiag23, OrbitMode::ExactModular)
        )
    }

    pub fn default_mode(&self) -> OrbitMode {
        match self.kind {
            SystemKind::Gauss | SystemKind::BetaGolden => OrbitMode::Float64,
            SystemKind::Doubling | SystemKind::ToralDiag23 => OrbitMode::ExactModular,
        }
    }

    /// Lyapunov exponent in nats per step (largest, for the torus).
    pub fn lyapunov(&self) -> f64 {
        match self.kind {
            SystemKind::Gauss => std::f64::consts::PI.powi(2) / (6.0 * LN_2),
            SystemKind::BetaGolden => GOLDEN.ln(),
            SystemKind::Doubling => LN_2,
            SystemKind::ToralDiag23 => 3f64.ln(),
        }
    }

    /// Condition III constant: `|Tx - Ty| >= L |x - y|` within a branch.
    pub fn expansion_lower_bound(&self) -> f64 {
        match self.kind {
            SystemKind::Gauss => 1.0,
            SystemKind::BetaGolden => GOLDEN,
            SystemKind::Doubling | SystemKind::ToralDiag23 => 2.0,
        }
    }

    /// Invariant density `h(x)`.
    pub fn density(&self, x: &Point) -> f64 {
        self.density_coords(x.coords())
    }

    #[inline]
    pub(crate) fn density_coords(&self, x: &[f64]) -> f64 {
        match self.kind {
            SystemKind::Gauss => 1.0 / ((1.0 + x[0]) * LN_2),
            SystemKind::BetaGolden => beta_density(x[0]),
            SystemKind::Doubling | SystemKind::ToralDiag23 => 1.0,
        }
    }

    /// One application of `T` in double precision, with the branch digit of
    /// the input point. `T(0) = 0` for the Gauss map.
    pub fn step(&self, x: &Point) -> Result<(Point, u64)> {
        if x.dim() != self.dim() {
            return Err(Error::invalid(format!(
                "{} acts on dimension {}, got a point of dimension {}",
                self.name(),
                self.dim(),
                x.dim()
            )));
        }
        let mut c = Coords::from_slice(x.coords());
        let digit = self.step_in_place(&mut c);
        Ok((Point::from_coords(c), digit))
    }

    /// Applies `T` to raw coordinates; returns the branch digit.
    #[inline]
    pub(crate) fn step_in_place(&self, x: &mut [f64]) -> u64 {
        match self.kind {
            SystemKind::Gauss => {
                let (y, k) = gauss_step(x[0]);
                x[0] = y;
                k
            }
            SystemKind::BetaGolden => {
                let y = GOLDEN * x[0];
                let k = if y >= 1.0 { 1 } else { 0 };
                x[0] = (y - k as f64).clamp(0.0, 1.0);
                k
            }
            SystemKind::Doubling => {
                let (y, k) = scale_mod1(x[0], 2.0);
                x[0] = y;
                k
            }
            SystemKind::ToralDiag23 => {
                let (y0, k0) = scale_mod1(x[0], 2.0);
                let (y1, k1) = scale_mod1(x[1], 3.0);
                x[0] = y0;
                x[1] = y1;
                k0 * 3 + k1
            }
        }
    }

    /// Branch digit containing `x` under the half-open `[left, right)`
    /// convention (the right end of the cube belongs to the last branch).
    pub fn branch_of(&self, x: &Point) -> u64 {
        let c = x.coords();
        match self.kind {
            SystemKind::Gauss => gauss_digit(c[0]),
            SystemKind::BetaGolden => u64::from(c[0] >= GOLDEN_INV),
            SystemKind::Doubling => u64::from(c[0] >= 0.5),
            SystemKind::ToralDiag23 => {
                let i = u64::from(c[0] >= 0.5);
                let j = ((c[1] * 3.0).floor() as u64).min(2);
                i * 3 + j
            }
        }
    }

    /// Number of branches; `None` for the (countably infinite) Gauss partition.
    pub fn partition_len(&self) -> Option<usize> {
        match self.kind {
            SystemKind::Gauss => None,
            SystemKind::BetaGolden | SystemKind::Doubling => Some(2),
            SystemKind::ToralDiag23 => Some(6),
        }
    }

    /// Smallest valid branch digit (Gauss digits start at 1).
    pub fn first_digit(&self) -> u64 {
        match self.kind {
            SystemKind::Gauss => 1,
            _ => 0,
        }
    }

    /// The branch with the given digit. Gauss: `U_i = (1/(i+1), 1/i)`,
    /// `i >= 1`. Beta and doubling: digits 0, 1 left to right. Torus:
    /// digit `3 i + j` is `(i/2, (i+1)/2) x (j/3, (j+1)/3)`.
    pub fn branch(&self, digit: u64) -> Result<Branch> {
        let out_of_range = || Error::OutOfRange {
            index: digit as usize,
            len: self.partition_len().unwrap_or(usize::MAX),
        };
        let bounds = match self.kind {
            SystemKind::Gauss => {
                if digit == 0 {
                    return Err(out_of_range());
                }
                let i = digit as f64;
                Hyperrectangle::from_bounds(&[1.0 / (i + 1.0)], &[1.0 / i])?
            }
            SystemKind::BetaGolden => match digit {
                0 => Hyperrectangle::from_bounds(&[0.0], &[GOLDEN_INV])?,
                1 => Hyperrectangle::from_bounds(&[GOLDEN_INV], &[1.0])?,
                _ => return Err(out_of_range()),
            },
            SystemKind::Doubling => match digit {
                0 => Hyperrectangle::from_bounds(&[0.0], &[0.5])?,
                1 => Hyperrectangle::from_bounds(&[0.5], &[1.0])?,
                _ => return Err(out_of_range()),
            },
            SystemKind::ToralDiag23 => {
                if digit >= 6 {
                    return Err(out_of_range());
                }
                let (i, j) = ((digit / 3) as f64, (digit % 3) as f64);
                Hyperrectangle::from_bounds(&[i / 2.0, j / 3.0], &[(i + 1.0) / 2.0, (j + 1.0) / 3.0])?
            }
        };
        Ok(Branch { digit, bounds })
    }

    /// Lazy enumeration of the partition in digit order.
    pub fn partition(&self) -> impl Iterator<Item = Branch> + '_ {
        let first = self.first_digit();
        let end = self.partition_len().map_or(u64::MAX, |n| first + n as u64);
        (first..end).map_while(move |d| self.branch(d).ok())
    }

    /// The branch map extended continuously to the closure of a branch
    /// (no reduction mod 1), used for the expansion check.
    pub fn branch_map(&self, digit: u64, x: &[f64]) -> Coords {
        match self.kind {
            SystemKind::Gauss => Coords::from_slice(&[1.0 / x[0] - digit as f64]),
            SystemKind::BetaGolden => Coords::from_slice(&[GOLDEN * x[0] - digit as f64]),
            SystemKind::Doubling => Coords::from_slice(&[2.0 * x[0] - digit as f64]),
            SystemKind::ToralDiag23 => {
                Coords::from_slice(&[2.0 * x[0] - (digit / 3) as f64, 3.0 * x[1] - (digit % 3) as f64])
            }
        }
    }

    /// Inverse of the branch `digit`, defined on the image `T(U_digit)`.
    pub fn inverse_branch(&self, digit: u64, y: &[f64]) -> Coords {
        match self.kind {
            SystemKind::Gauss => Coords::from_slice(&[1.0 / (digit as f64 + y[0])]),
            SystemKind::BetaGolden => Coords::from_slice(&[(y[0] + digit as f64) / GOLDEN]),
            SystemKind::Doubling => Coords::from_slice(&[(y[0] + digit as f64) / 2.0]),
            SystemKind::ToralDiag23 => {
                Coords::from_slice(&[(y[0] + (digit / 3) as f64) / 2.0, (y[1] + (digit % 3) as f64) / 3.0])
            }
        }
    }

    /// Closure of the image `T(U_digit)`.
    pub fn branch_image(&self, digit: u64) -> Hyperrectangle {
        match (self.kind, digit) {
            (SystemKind::BetaGolden, 1) => Hyperrectangle::from_bounds(&[0.0], &[GOLDEN - 1.0]).expect("valid bounds"),
            _ => Hyperrectangle::unit(self.dim()),
        }
    }

    /// Points around which all but finitely many branches concentrate
    /// (Condition V). Empty for finite partitions.
    pub fn concentration_set(&self) -> Vec<Point> {
        match self.kind {
            SystemKind::Gauss => vec![Point::scalar(0.0).expect("origin")],
            _ => Vec::new(),
        }
    }

    /// Draws one point distributed according to `mu`.
    pub fn sample_mu<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Point> {
        let c: Coords = match self.kind {
            SystemKind::Gauss => {
                let u: f64 = rng.random();
                Coords::from_slice(&[(u.exp2() - 1.0).clamp(0.0, 1.0)])
            }
            SystemKind::BetaGolden => {
                let cap = PARRY_C * GOLDEN;
                let mut tries = 0;
                loop {
                    let x: f64 = rng.random();
                    let u: f64 = rng.random();
                    if u * cap <= beta_density(x) {
                        break Coords::from_slice(&[x]);
                    }
                    tries += 1;
                    if tries >= 10_000 {
                        return Err(Error::Internal("rejection sampler exceeded 10^4 proposals".into()));
                    }
                }
            }
            SystemKind::Doubling => Coords::from_slice(&[rng.random::<f64>()]),
            SystemKind::ToralDiag23 => Coords::from_slice(&[rng.random::<f64>(), rng.random::<f64>()]),
        };
        Ok(Point::from_coords(c))
    }

    /// Draws a `mu`-distributed exact seed `a / q` with `a` uniform in
    /// `[1, q - 1]` on every axis.
    pub fn sample_modular<R: Rng + ?Sized>(&self, rng: &mut R, q: u64) -> Result<ModularPoint> {
        let mults = self
            .multipliers()
            .ok_or_else(|| Error::InvalidMode(format!("{} has no exact-modular engine", self.name())))?;
        let nums: Vec<u64> = mults.iter().map(|_| rng.random_range(1..q)).collect();
        ModularPoint::new(&nums, &vec![q; mults.len()])
    }
}

impl SystemDescriptor {
    /// A `mu`-distributed seed suited to `mode`: `a / q` for exact-modular
    /// orbits (with the supplied modulus), a double-precision point otherwise.
    pub fn sample_seed<R: Rng + ?Sized>(&self, mode: &OrbitMode, rng: &mut R, modulus: u64) -> Result<Seed> {
        match mode {
            OrbitMode::ExactModular => Ok(Seed::Modular(self.sample_modular(rng, modulus)?)),
            _ => Ok(Seed::Real(self.sample_mu(rng)?)),
        }
    }
}

impl fmt::Display for SystemDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[inline]
fn beta_density(x: f64) -> f64 {
    if x < GOLDEN_INV {
        PARRY_C * GOLDEN
    } else {
        PARRY_C
    }
}

/// `(frac(1/x), floor(1/x))` with `T(0) = 0`. Reciprocals that overflow
/// or lose every fractional bit land on the fixed point 0.
#[inline]
pub(crate) fn gauss_step(x: f64) -> (f64, u64) {
    if x <= 0.0 {
        return (0.0, 0);
    }
    let y = 1.0 / x;
    if !(y < 9.0e15) {
        return (0.0, 0);
    }
    let k = y.floor();
    (y - k, k as u64)
}

/// Branch digit `i` with `1/(i+1) <= x < 1/i`; `x = 1` belongs to branch 1.
fn gauss_digit(x: f64) -> u64 {
    if x <= 0.0 {
        return 0;
    }
    if x >= 1.0 {
        return 1;
    }
    let mut i = (1.0 / x).floor() as u64;
    // Rounding in 1/x can land one digit off next to the endpoints.
    while i > 1 && x >= 1.0 / i as f64 {
        i -= 1;
    }
    while x < 1.0 / (i + 1) as f64 {
        i += 1;
    }
    i
}

#[inline]
fn scale_mod1(x: f64, m: f64) -> (f64, u64) {
    let y = m * x;
    let k = y.floor();
    let k = if k >= m { m - 1.0 } else { k };
    ((y - k).min(1.0), k as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(c: &[f64]) -> Point {
        Point::new(c).unwrap()
    }

    #[test]
    fn gauss_golden_fixed_point() {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let (y, k) = SystemDescriptor::gauss().step(&p(&[g])).unwrap();
        assert!((y.coord(0) - g).abs() < 1e-15);
        assert_eq!(k, 1);
    }

    #[test]
    fn gauss_zero_is_fixed() {
        let (y, _) = SystemDescriptor::gauss().step(&p(&[0.0])).unwrap();
        assert_eq!(y.coord(0), 0.0);
    }

    #[test]
    fn doubling_period_two() {
        let s = SystemDescriptor::doubling();
        let (y, _) = s.step(&p(&[1.0 / 3.0])).unwrap();
        assert!((y.coord(0) - 2.0 / 3.0).abs() < 1e-15);
        let (z, _) = s.step(&y).unwrap();
        assert!((z.coord(0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn toral_step_exact() {
        let (y, _) = SystemDescriptor::toral_diag23().step(&p(&[0.25, 0.5])).unwrap();
        assert_eq!(y.coords(), &[0.5, 0.5]);
        assert!(SystemDescriptor::toral_diag23().step(&p(&[0.25])).is_err());
    }

    #[test]
    fn density_examples() {
        let h0 = SystemDescriptor::gauss().density(&p(&[0.0]));
        assert!((h0 - std::f64::consts::LOG2_E).abs() < 1e-12);
        let hb = SystemDescriptor::beta_golden().density(&p(&[0.5]));
        assert!((hb - 1.170_820_393_249_937).abs() < 1e-12);
        assert_eq!(SystemDescriptor::toral_diag23().density(&p(&[0.3, 0.9])), 1.0);
        // half-open resolution at the breakpoint
        assert_eq!(SystemDescriptor::beta_golden().density(&p(&[GOLDEN_INV])), PARRY_C);
    }

    #[test]
    fn partition_examples() {
        let b = SystemDescriptor::gauss().branch(1).unwrap();
        assert_eq!((b.bounds.lo()[0], b.bounds.hi()[0]), (0.5, 1.0));
        let beta: Vec<_> = SystemDescriptor::beta_golden().partition().collect();
        assert_eq!(beta.len(), 2);
        assert!((beta[0].bounds.hi()[0] - 1.0 / GOLDEN).abs() < 1e-15);
        let dbl: Vec<_> = SystemDescriptor::doubling().partition().collect();
        assert_eq!(dbl[0].bounds.hi()[0], 0.5);
        assert!(matches!(
            SystemDescriptor::doubling().branch(2),
            Err(Error::OutOfRange { .. })
        ));
        assert_eq!(SystemDescriptor::toral_diag23().partition().count(), 6);
        let first: Vec<_> = SystemDescriptor::gauss().partition().take(3).map(|b| b.digit).collect();
        assert_eq!(first, vec![1, 2, 3]);
    }

    #[test]
    fn branch_of_half_open() {
        let g = SystemDescriptor::gauss();
        assert_eq!(g.branch_of(&p(&[0.5])), 1);
        assert_eq!(g.branch_of(&p(&[0.4999])), 2);
        assert_eq!(g.branch_of(&p(&[1.0 / 3.0])), 2);
        assert_eq!(g.branch_of(&p(&[0.3333])), 3);
        assert_eq!(g.branch_of(&p(&[1.0])), 1);
        let t = SystemDescriptor::toral_diag23();
        assert_eq!(t.branch_of(&p(&[0.5, 1.0])), 5);
    }

    #[test]
    fn expansion_constants() {
        assert_eq!(SystemDescriptor::gauss().expansion_lower_bound(), 1.0);
        assert!((SystemDescriptor::beta_golden().expansion_lower_bound() - 1.6180).abs() < 1e-4);
        assert_eq!(SystemDescriptor::toral_diag23().expansion_lower_bound(), 2.0);
    }

    #[test]
    fn parse_names() {
        for k in SystemKind::ALL {
            assert_eq!(k.name().parse::<SystemKind>().unwrap(), k);
        }
        assert!("tent".parse::<SystemKind>().is_err());
    }

    #[test]
    fn toral_sample_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = SystemDescriptor::toral_diag23();
        let m = 1_000_000;
        let mut sum = [0.0; 2];
        for _ in 0..m {
            let x = s.sample_mu(&mut rng).unwrap();
            sum[0] += x.coord(0);
            sum[1] += x.coord(1);
        }
        assert!((sum[0] / m as f64 - 0.5).abs() < 1e-3);
        assert!((sum[1] / m as f64 - 0.5).abs() < 1e-3);
    }

    #[test]
    fn beta_sample_left_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let s = SystemDescriptor::beta_golden();
        let m = 1_000_000;
        let left = (0..m)
            .filter(|_| s.sample_mu(&mut rng).unwrap().coord(0) < GOLDEN_INV)
            .count();
        assert!((left as f64 / m as f64 - PARRY_C).abs() < 2e-3);
    }

    #[test]
    fn gauss_sample_ks() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let s = SystemDescriptor::gauss();
        let m = 1_000_000;
        let mut xs: Vec<f64> = (0..m).map(|_| s.sample_mu(&mut rng).unwrap().coord(0)).collect();
        xs.sort_by(f64::total_cmp);
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let f = (1.0 + x).log2();
                (f - i as f64 / m as f64)
                    .abs()
                    .max((f - (i + 1) as f64 / m as f64).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.002, "KS = {ks}");
    }
}
