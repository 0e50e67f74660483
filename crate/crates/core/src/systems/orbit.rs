use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::exact::{ratio_to_f64, truncate_dyadic, GaussRational, GoldenState};
use super::modular::ModularPoint;
use super::{SystemDescriptor, SystemKind};
use crate::error::{Error, Result};
use crate::geometry::{Coords, Point};

/// How an orbit is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum OrbitMode {
    /// IEEE double pseudo-orbit.
    Float64,
    /// Integer arithmetic on `a / q`.
    ExactModular,
    /// Exact iteration of the seed truncated to `bits` fractional bits.
    HighPrecision { bits: u32 },
}

impl OrbitMode {
    pub fn name(&self) -> &'static str {
        match self {
            OrbitMode::Float64 => "float64",
            OrbitMode::ExactModular => "exact_modular",
            OrbitMode::HighPrecision { .. } => "high_precision",
        }
    }

    /// Parses a mode name; `bits` applies to the high-precision mode.
    pub fn parse(name: &str, bits: u32) -> Result<Self> {
        match name {
            "float64" | "float" => Ok(OrbitMode::Float64),
            "exact_modular" | "exact" | "modular" => Ok(OrbitMode::ExactModular),
            "high_precision" | "hp" => Ok(OrbitMode::HighPrecision { bits }),
            other => Err(Error::InvalidMode(format!(
                "unknown orbit mode '{other}' (expected float64, exact_modular or high_precision)"
            ))),
        }
    }
}

impl fmt::Display for OrbitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrbitMode::HighPrecision { bits } => write!(f, "high_precision({bits} bits)"),
            m => f.write_str(m.name()),
        }
    }
}

/// Initial condition of an orbit.
#[derive(Debug, Clone, PartialEq)]
pub enum Seed {
    Real(Point),
    Modular(ModularPoint),
    /// Arbitrary rational per axis, `(numerator, denominator)`.
    Rational(Vec<(BigUint, BigUint)>),
}

impl Seed {
    pub fn real(coords: &[f64]) -> Result<Self> {
        Ok(Seed::Real(Point::new(coords)?))
    }

    pub fn dim(&self) -> usize {
        match self {
            Seed::Real(p) => p.dim(),
            Seed::Modular(m) => m.dim(),
            Seed::Rational(v) => v.len(),
        }
    }

    /// The seed as a double-precision point.
    pub fn to_point(&self) -> Result<Point> {
        match self {
            Seed::Real(p) => Ok(p.clone()),
            Seed::Modular(m) => Point::new(&m.to_coords()),
            Seed::Rational(v) => {
                let c: Vec<f64> = v.iter().map(|(n, d)| ratio_to_f64(n, d)).collect();
                Point::new(&c)
            }
        }
    }

    fn rational_1d(&self, bits: u32) -> Result<(BigUint, BigUint)> {
        if self.dim() != 1 {
            return Err(Error::InvalidMode("high-precision orbits are one-dimensional".into()));
        }
        let (num, den) = match self {
            Seed::Real(p) => f64_to_ratio(p.coord(0)),
            Seed::Modular(m) => (BigUint::from(m.nums()[0]), BigUint::from(m.mods()[0])),
            Seed::Rational(v) => v[0].clone(),
        };
        if den.is_zero() || num > den {
            return Err(Error::invalid("seed must lie in [0, 1]"));
        }
        Ok(truncate_dyadic(&num, &den, bits))
    }
}

impl FromStr for Seed {
    type Err = Error;

    /// `"0.25,0.5"` gives a real seed; any `/` gives a modular seed.
    fn from_str(s: &str) -> Result<Self> {
        if s.contains('/') {
            return Ok(Seed::Modular(ModularPoint::parse(s)?));
        }
        let coords = s
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::invalid(format!("bad coordinate '{c}': {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Seed::real(&coords)
    }
}

fn f64_to_ratio(x: f64) -> (BigUint, BigUint) {
    if x == 0.0 {
        return (BigUint::zero(), BigUint::one());
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    };
    if e >= 0 {
        (BigUint::from(mant) << e as u64, BigUint::one())
    } else {
        (BigUint::from(mant), BigUint::one() << (-e) as u64)
    }
}

enum Engine {
    Float(Coords),
    Modular {
        state: ModularPoint,
        start: ModularPoint,
        mults: &'static [u64],
    },
    Gauss(GaussRational),
    Golden(GoldenState),
}

/// Streaming orbit `T x0, T^2 x0, ..., T^N x0`. Memory use is independent
/// of `N`; exact modes are bit-exact and deterministic.
pub struct Orbit {
    sys: SystemDescriptor,
    engine: Engine,
    remaining: u64,
    steps: u64,
    last_digit: u64,
    period: Option<u64>,
}

impl Orbit {
    pub fn new(sys: SystemDescriptor, seed: &Seed, mode: OrbitMode, n: u64) -> Result<Self> {
        if seed.dim() != sys.dim() {
            return Err(Error::invalid(format!(
                "{} needs a {}-dimensional seed, got {}",
                sys.name(),
                sys.dim(),
                seed.dim()
            )));
        }
        if !sys.supports(&mode) {
            return Err(Error::InvalidMode(unsupported_reason(sys, mode)));
        }
        let engine = match mode {
            OrbitMode::Float64 => Engine::Float(Coords::from_slice(seed.to_point()?.coords())),
            OrbitMode::ExactModular => {
                let Seed::Modular(m) = seed else {
                    return Err(Error::InvalidMode(
                        "exact_modular orbits need a rational seed a/q (q coprime to the map's multipliers), \
                         not a decimal"
                            .into(),
                    ));
                };
                let mults = sys.multipliers().expect("linear system");
                m.check_coprime(mults)?;
                Engine::Modular {
                    state: m.clone(),
                    start: m.clone(),
                    mults,
                }
            }
            OrbitMode::HighPrecision { bits } => {
                let bits_per_step = sys.lyapunov() / std::f64::consts::LN_2;
                let needed = bits_per_step * n as f64;
                if (bits as f64) < needed {
                    return Err(Error::PrecisionBudget(format!(
                        "{} loses about {:.2} bits per step; {} steps need {:.0} bits but only {} were configured \
                         (usable horizon is about {} steps)",
                        sys.name(),
                        bits_per_step,
                        n,
                        needed.ceil(),
                        bits,
                        (bits as f64 / bits_per_step).floor()
                    )));
                }
                let (num, den) = seed.rational_1d(bits)?;
                match sys.kind() {
                    SystemKind::Gauss => Engine::Gauss(GaussRational::new(num, den)?),
                    SystemKind::BetaGolden => Engine::Golden(GoldenState::from_rational(num, den)?),
                    _ => unreachable!("mode support checked above"),
                }
            }
        };
        Ok(Self {
            sys,
            engine,
            remaining: n,
            steps: 0,
            last_digit: 0,
            period: None,
        })
    }

    /// Branch digit of the point most recently mapped.
    pub fn last_digit(&self) -> u64 {
        self.last_digit
    }

    /// Exact-modular orbits report their period once it closes.
    pub fn period(&self) -> Option<u64> {
        self.period
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// The current state as an exact rational, when the engine is modular.
    pub fn modular_state(&self) -> Option<&ModularPoint> {
        match &self.engine {
            Engine::Modular { state, .. } => Some(state),
            _ => None,
        }
    }

    /// Advances one step and writes the new coordinates into `out`.
    /// Returns `false` once `N` points have been produced.
    #[inline]
    pub fn advance_into(&mut self, out: &mut [f64]) -> bool {
        if self.remaining == 0 {
            return false;
        }
        self.remaining -= 1;
        self.steps += 1;
        match &mut self.engine {
            Engine::Float(x) => {
                self.last_digit = self.sys.step_in_place(x);
                out.copy_from_slice(x);
            }
            Engine::Modular { state, start, mults } => {
                self.last_digit = state.multiply(mults);
                if self.period.is_none() && state == start {
                    self.period = Some(self.steps);
                }
                for (o, (a, q)) in out.iter_mut().zip(state.nums().iter().zip(state.mods())) {
                    *o = *a as f64 / *q as f64;
                }
            }
            Engine::Gauss(s) => {
                self.last_digit = s.step();
                out[0] = s.to_f64();
            }
            Engine::Golden(s) => {
                self.last_digit = s.step();
                out[0] = s.to_f64();
            }
        }
        true
    }
}

impl Iterator for Orbit {
    type Item = Point;

    fn next(&mut self) -> Option<Point> {
        let mut c = Coords::from_elem(0.0, self.sys.dim());
        self.advance_into(&mut c).then(|| Point::from_coords(c))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = self.remaining as usize;
        (r, Some(r))
    }
}

fn unsupported_reason(sys: SystemDescriptor, mode: OrbitMode) -> String {
    match (sys.kind(), mode) {
        (SystemKind::Doubling | SystemKind::ToralDiag23, OrbitMode::Float64) => format!(
            "{} shifts binary digits out of the mantissa, so float64 orbits collapse to 0 \
             within about 53 steps; use exact_modular",
            sys.name()
        ),
        (SystemKind::Doubling | SystemKind::ToralDiag23, OrbitMode::HighPrecision { .. }) => {
            format!(
                "{} runs exactly in exact_modular mode; high_precision is not offered",
                sys.name()
            )
        }
        _ => format!(
            "{} has no exact-modular engine (its map is not an integer matrix)",
            sys.name()
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_exact_one_third() {
        let seed: Seed = "1/3".parse().unwrap();
        let mut orb = Orbit::new(SystemDescriptor::doubling(), &seed, OrbitMode::ExactModular, 4).unwrap();
        let mut out = Vec::new();
        while orb.next().is_some() {
            out.push(orb.modular_state().unwrap().to_string());
        }
        assert_eq!(out, vec!["2/3", "1/3", "2/3", "1/3"]);
        assert_eq!(orb.period(), Some(2));
    }

    #[test]
    fn toral_period_three() {
        let seed: Seed = "1/7,1/13".parse().unwrap();
        let mut orb = Orbit::new(SystemDescriptor::toral_diag23(), &seed, OrbitMode::ExactModular, 10).unwrap();
        for _ in orb.by_ref() {}
        assert_eq!(orb.period(), Some(3));
    }

    #[test]
    fn mode_errors() {
        let seed = Seed::real(&[0.3]).unwrap();
        assert!(matches!(
            Orbit::new(SystemDescriptor::doubling(), &seed, OrbitMode::Float64, 3),
            Err(Error::InvalidMode(_))
        ));
        assert!(matches!(
            Orbit::new(SystemDescriptor::doubling(), &seed, OrbitMode::ExactModular, 3),
            Err(Error::InvalidMode(_))
        ));
        assert!(matches!(
            Orbit::new(SystemDescriptor::gauss(), &seed, OrbitMode::ExactModular, 3),
            Err(Error::InvalidMode(_))
        ));
        let even: Seed = "1/4".parse().unwrap();
        assert!(Orbit::new(SystemDescriptor::doubling(), &even, OrbitMode::ExactModular, 3).is_err());
    }

    #[test]
    fn precision_budget_refused() {
        let seed = Seed::real(&[0.3]).unwrap();
        let r = Orbit::new(
            SystemDescriptor::gauss(),
            &seed,
            OrbitMode::HighPrecision { bits: 64 },
            100,
        );
        assert!(matches!(r, Err(Error::PrecisionBudget(_))));
    }

    #[test]
    fn float_orbit_streams_n_points() {
        let seed = Seed::real(&[0.3]).unwrap();
        let orb = Orbit::new(SystemDescriptor::gauss(), &seed, OrbitMode::Float64, 17).unwrap();
        assert_eq!(orb.count(), 17);
    }

    #[test]
    fn f64_ratio_is_exact() {
        let (n, d) = f64_to_ratio(0.375);
        assert_eq!(ratio_to_f64(&n, &d), 0.375);
        let x = 0.123_456_789_012_345_67;
        let (n, d) = f64_to_ratio(x);
        assert_eq!(ratio_to_f64(&n, &d), x);
    }
}
