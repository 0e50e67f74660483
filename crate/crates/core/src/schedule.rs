//! Radius schedules `{r_n}`, their volume parameters `gamma_n`, the
//! normalizers `Phi_N`, and the thinning that discards terms with
//! `gamma_n <= n^-2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Coords;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// A sequence of radius vectors `r_n`, `n >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadiusSchedule {
    /// `r_{n,i} = c_i * n^(-a_i)`.
    PowerLaw { exponents: Vec<f64>, scales: Vec<f64> },
    /// Explicit radius vectors for `n = 1..=len`; zero afterwards.
    Explicit { radii: Vec<Vec<f64>> },
}

impl RadiusSchedule {
    pub fn power_law(exponents: &[f64], scales: &[f64]) -> Result<Self> {
        let s = RadiusSchedule::PowerLaw {
            exponents: exponents.to_vec(),
            scales: scales.to_vec(),
        };
        s.validate()?;
        Ok(s)
    }

    /// Power law with unit scales.
    pub fn power(exponents: &[f64]) -> Result<Self> {
        Self::power_law(exponents, &vec![1.0; exponents.len()])
    }

    /// Constant radius vector (a power law with zero exponents).
    pub fn constant(radius: &[f64]) -> Result<Self> {
        Self::power_law(&vec![0.0; radius.len()], radius)
    }

    pub fn explicit(radii: Vec<Vec<f64>>) -> Result<Self> {
        let s = RadiusSchedule::Explicit { radii };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RadiusSchedule::PowerLaw { exponents, scales } => {
                if exponents.is_empty() || exponents.len() != scales.len() {
                    return Err(Error::invalid(
                        "power-law schedule needs equal, non-zero numbers of exponents and scales",
                    ));
                }
                if exponents.iter().chain(scales).any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return Err(Error::invalid(
                        "power-law exponents and scales must be finite and non-negative",
                    ));
                }
            }
            RadiusSchedule::Explicit { radii } => {
                let d = radii.first().map_or(0, Vec::len);
                if d == 0 {
                    return Err(Error::invalid("explicit schedule must list at least one radius vector"));
                }
                if radii.iter().any(|r| r.len() != d) {
                    return Err(Error::invalid("explicit radius vectors differ in dimension"));
                }
                if radii.iter().flatten().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return Err(Error::invalid("explicit radii must be finite and non-negative"));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            RadiusSchedule::PowerLaw { exponents, .. } => exponents.len(),
            RadiusSchedule::Explicit { radii } => radii[0].len(),
        }
    }

    /// `(r_n, gamma_n)` with `gamma_n = prod_i r_{n,i}`.
    pub fn values(&self, n: u64) -> Result<(Coords, f64)> {
        if n == 0 {
            return Err(Error::invalid("schedule index starts at n = 1"));
        }
        let r = self.radius(n);
        let gamma = r.iter().product();
        Ok((r, gamma))
    }

    pub(crate) fn radius(&self, n: u64) -> Coords {
        match self {
            RadiusSchedule::PowerLaw { exponents, scales } => {
                let nf = n as f64;
                exponents
                    .iter()
                    .zip(scales)
                    .map(|(a, c)| if *a == 0.0 { *c } else { c * nf.powf(-a) })
                    .collect()
            }
            RadiusSchedule::Explicit { radii } => match radii.get((n - 1) as usize) {
                Some(r) => Coords::from_slice(r),
                None => Coords::from_elem(0.0, radii[0].len()),
            },
        }
    }

    pub fn gamma(&self, n: u64) -> Result<f64> {
        Ok(self.values(n)?.1)
    }

    /// Analytic classification of `sum_n gamma_n`. A power law diverges iff
    /// its exponents sum to at most one and no scale vanishes; an explicit
    /// list has finite support and therefore converges.
    pub fn is_divergent(&self) -> bool {
        match self {
            RadiusSchedule::PowerLaw { exponents, scales } => {
                exponents.iter().sum::<f64>() <= 1.0 && scales.iter().product::<f64>() > 0.0
            }
            RadiusSchedule::Explicit { .. } => false,
        }
    }

    /// `|r_n| -> 0` (max norm), the hypothesis of the divergence law.
    pub fn radii_shrink(&self) -> bool {
        match self {
            RadiusSchedule::PowerLaw { exponents, scales } => {
                exponents.iter().zip(scales).all(|(a, c)| *a > 0.0 || *c == 0.0)
            }
            RadiusSchedule::Explicit { .. } => true,
        }
    }

    pub fn thin(&self) -> ThinnedSchedule {
        ThinnedSchedule { base: self.clone() }
    }
}

/// `Phi_N = sum_{k <= N} 2^d gamma_k` with compensated accumulation.
pub fn partial_normalizer(s: &RadiusSchedule, n_max: u64, d: usize) -> Result<f64> {
    if n_max == 0 {
        return Err(Error::invalid("normalizer needs N >= 1"));
    }
    let scale = 2f64.powi(d as i32);
    let direct = match s {
        RadiusSchedule::PowerLaw { .. } => n_max.min(EXACT_TERMS),
        RadiusSchedule::Explicit { radii } => n_max.min(radii.len() as u64),
    };
    let mut acc = CompensatedSum::new();
    for k in 1..=direct {
        acc.add(scale * s.radius(k).iter().product::<f64>());
    }
    if let RadiusSchedule::PowerLaw { exponents, scales } = s {
        if n_max > direct {
            let k = scale * scales.iter().product::<f64>();
            acc.add(power_tail(k, exponents.iter().sum(), direct as f64, n_max as f64));
        }
    }
    Ok(acc.value())
}

/// Terms summed one by one before the power-law tail switches to a closed form.
const EXACT_TERMS: u64 = 1 << 20;

/// `sum_{m < n <= big} k n^-s` by Euler-Maclaurin; the first omitted term is
/// of order `k m^(-s-5)`.
fn power_tail(k: f64, s: f64, m: f64, big: f64) -> f64 {
    let f = |x: f64| k * x.powf(-s);
    let f1 = |x: f64| -s * k * x.powf(-s - 1.0);
    let f3 = |x: f64| -s * (s + 1.0) * (s + 2.0) * k * x.powf(-s - 3.0);
    let integral = if (s - 1.0).abs() < 1e-12 {
        k * (big / m).ln()
    } else {
        k * (big.powf(1.0 - s) - m.powf(1.0 - s)) / (1.0 - s)
    };
    integral + (f(big) - f(m)) / 2.0 + (f1(big) - f1(m)) / 12.0 - (f3(big) - f3(m)) / 720.0
}

/// A schedule with every term satisfying `gamma_n <= n^-2` zeroed. The
/// active set is `D = {n : gamma_n > n^-2}` (strict).
#[derive(Debug, Clone, PartialEq)]
pub struct ThinnedSchedule {
    base: RadiusSchedule,
}

impl ThinnedSchedule {
    pub fn base(&self) -> &RadiusSchedule {
        &self.base
    }

    pub fn is_active(&self, n: u64) -> bool {
        n >= 1 && is_active_gamma(n, self.base.radius(n).iter().product())
    }

    /// Thinned `(r_n, gamma_n)`; inactive indices report the base radius
    /// but a zero volume.
    pub fn values(&self, n: u64) -> Result<(Coords, f64, bool)> {
        let (r, g) = self.base.values(n)?;
        let active = is_active_gamma(n, g);
        Ok((r, if active { g } else { 0.0 }, active))
    }

    /// Active indices up to `n_max`.
    pub fn active_set(&self, n_max: u64) -> Vec<u64> {
        (1..=n_max).filter(|n| self.is_active(*n)).collect()
    }

    /// `sum_{n <= n_max, n not in D} gamma_n`; bounded by `pi^2 / 6`.
    pub fn removed_mass(&self, n_max: u64) -> f64 {
        (1..=n_max)
            .map(|n| {
                let g: f64 = self.base.radius(n).iter().product();
                if is_active_gamma(n, g) {
                    0.0
                } else {
                    g
                }
            })
            .collect::<CompensatedSum>()
            .value()
    }
}

#[inline]
fn is_active_gamma(n: u64, gamma: f64) -> bool {
    let nf = n as f64;
    gamma > 1.0 / (nf * nf)
}

/// Precomputed radii, volumes and running normalizers for `k = 1..=N`.
/// Experiments share one table across every seed.
#[derive(Debug, Clone)]
pub struct ScheduleTable {
    dim: usize,
    radii: Vec<f64>,
    gammas: Vec<f64>,
    active: Vec<bool>,
}

impl ScheduleTable {
    pub fn new(s: &RadiusSchedule, n_max: u64) -> Self {
        let dim = s.dim();
        let mut radii = Vec::with_capacity(n_max as usize * dim);
        let mut gammas = Vec::with_capacity(n_max as usize);
        let mut active = Vec::with_capacity(n_max as usize);
        for k in 1..=n_max {
            let r = s.radius(k);
            let g: f64 = r.iter().product();
            radii.extend_from_slice(&r);
            gammas.push(g);
            active.push(is_active_gamma(k, g));
        }
        Self {
            dim,
            radii,
            gammas,
            active,
        }
    }

    pub fn len(&self) -> u64 {
        self.gammas.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Radius vector for index `k >= 1`.
    #[inline]
    pub fn radius(&self, k: u64) -> &[f64] {
        let i = (k - 1) as usize * self.dim;
        &self.radii[i..i + self.dim]
    }

    #[inline]
    pub fn gamma(&self, k: u64) -> f64 {
        self.gammas[(k - 1) as usize]
    }

    #[inline]
    pub fn is_active(&self, k: u64) -> bool {
        self.active[(k - 1) as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_value_examples() {
        let s = RadiusSchedule::power(&[0.5]).unwrap();
        let (r, g) = s.values(4).unwrap();
        assert_eq!(r[0], 0.5);
        assert_eq!(g, 0.5);

        let s = RadiusSchedule::power(&[0.2, 0.3]).unwrap();
        let (r, g) = s.values(1).unwrap();
        assert_eq!((r[0], r[1], g), (1.0, 1.0, 1.0));
        let g = s.gamma(10_000).unwrap();
        assert!((g - 1e-2).abs() < 1e-15);

        assert!(matches!(s.values(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn divergence_flag() {
        assert!(RadiusSchedule::power(&[0.5]).unwrap().is_divergent());
        assert!(RadiusSchedule::power(&[0.5, 0.5]).unwrap().is_divergent());
        assert!(!RadiusSchedule::power(&[2.0]).unwrap().is_divergent());
        assert!(!RadiusSchedule::power_law(&[0.2], &[0.0]).unwrap().is_divergent());
        assert!(!RadiusSchedule::explicit(vec![vec![0.5]; 3]).unwrap().is_divergent());
    }

    #[test]
    fn normalizer_trivial() {
        let s = RadiusSchedule::constant(&[1.0]).unwrap();
        assert_eq!(partial_normalizer(&s, 10, 1).unwrap(), 20.0);
        assert!(partial_normalizer(&s, 0, 1).is_err());
    }

    #[test]
    fn normalizer_tail_matches_direct_sum() {
        for (a, c) in [(0.5, 1.0), (1.0, 0.3), (0.25, 2.0), (1.7, 1.0)] {
            let s = RadiusSchedule::power_law(&[a], &[c]).unwrap();
            let n = EXACT_TERMS + 3_000_000;
            let mut acc = CompensatedSum::new();
            for k in 1..=n {
                acc.add(2.0 * c * (k as f64).powf(-a));
            }
            let fast = partial_normalizer(&s, n, 1).unwrap();
            assert!(
                (fast / acc.value() - 1.0).abs() < 1e-13,
                "a = {a}: {fast} vs {}",
                acc.value()
            );
        }
    }

    #[test]
    fn thinning_examples() {
        let s = RadiusSchedule::power(&[0.5]).unwrap().thin();
        assert!(!s.is_active(1));
        assert!((2..1000).all(|n| s.is_active(n)));

        let s = RadiusSchedule::power(&[3.0]).unwrap().thin();
        assert!(s.active_set(1000).is_empty());
        assert!((1..50).all(|n| s.values(n).unwrap().1 == 0.0));

        let s = RadiusSchedule::explicit(vec![vec![1.0], vec![0.3], vec![1e-9]])
            .unwrap()
            .thin();
        assert_eq!(s.active_set(3), vec![2]);
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut c = CompensatedSum::new();
        c.add(1.0);
        for _ in 0..1_000_000 {
            c.add(1e-16);
        }
        assert!((c.value() - (1.0 + 1e-10)).abs() < 1e-22);
    }
}
