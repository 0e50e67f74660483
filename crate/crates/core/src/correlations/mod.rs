//! Correlation estimates, decay-rate fits and the boundary-regularity
//! checks on branch partitions and cylinders.

mod conditions;
mod cylinders;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Hyperrectangle;
use crate::measure::mu_rect;
use crate::systems::{random_prime, Orbit, OrbitMode, SystemDescriptor};

pub use conditions::{
    boundary_neighborhood_measure, condition_iv_check, condition_v_check, cylinder_boundary_growth, BoundaryMeasure,
    BoundaryRegularityReport, ConditionVReport, ConditionVRow, GrowthReport, GrowthRow,
};
pub use cylinders::{cylinder_of_word, cylinders, Cylinder};

/// Number of blocks used by the jackknife standard errors.
pub const JACKKNIFE_BLOCKS: usize = 50;
/// Minimum sample count accepted by the estimators.
pub const MIN_SAMPLES: usize = 1000;

/// `f_eps(x) = max(0, 1 - dist(x, E) / eps)` with the max-norm distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderBump {
    pub set: Hyperrectangle,
    pub eps: f64,
}

impl HolderBump {
    pub fn new(set: Hyperrectangle, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::invalid(format!("bump width must be positive, got {eps}")));
        }
        Ok(Self { set, eps })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (1.0 - self.set.distance_to(x) / self.eps).max(0.0)
    }

    /// Largest `|f(x) - f(y)| / |x - y|` over random pairs in the unit cube;
    /// should not exceed `1 / eps`.
    pub fn lipschitz_estimate<R: Rng + ?Sized>(&self, pairs: usize, rng: &mut R) -> f64 {
        let d = self.set.dim();
        let mut worst: f64 = 0.0;
        for _ in 0..pairs {
            let x: Vec<f64> = (0..d).map(|_| rng.random()).collect();
            // half the pairs are close, so the slope near the edge is probed
            let scale = if rng.random::<bool>() { self.eps } else { 1.0 };
            let y: Vec<f64> = x
                .iter()
                .map(|c| (c + scale * (rng.random::<f64>() - 0.5)).clamp(0.0, 1.0))
                .collect();
            let dist = crate::geometry::max_norm_diff(&x, &y);
            if dist > 0.0 {
                worst = worst.max((self.eval(&x) - self.eval(&y)).abs() / dist);
            }
        }
        worst
    }
}

/// Bounded observables used by the estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observable {
    /// `x -> x_axis`.
    Coordinate {
        axis: usize,
    },
    Constant {
        value: f64,
    },
    /// Indicator of a closed box.
    Indicator {
        set: Hyperrectangle,
    },
    Bump(HolderBump),
    /// `x -> cos(2 pi k x_axis)`.
    Cosine {
        axis: usize,
        frequency: f64,
    },
}

impl Observable {
    pub fn identity() -> Self {
        Observable::Coordinate { axis: 0 }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Observable::Coordinate { axis } => x[*axis],
            Observable::Constant { value } => *value,
            Observable::Indicator { set } => f64::from(u8::from(set.contains_coords(x))),
            Observable::Bump(b) => b.eval(x),
            Observable::Cosine { axis, frequency } => (2.0 * std::f64::consts::PI * frequency * x[*axis]).cos(),
        }
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        let ok = match self {
            Observable::Coordinate { axis } | Observable::Cosine { axis, .. } => *axis < d,
            Observable::Constant { .. } => true,
            Observable::Indicator { set } => set.dim() == d,
            Observable::Bump(b) => b.set.dim() == d,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("observable does not fit dimension {d}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Independent `mu`-samples, each iterated `n_max` times.
    MonteCarlo,
    /// Time averages along one long orbit.
    Birkhoff,
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monte_carlo" | "monte-carlo" | "mc" => Ok(Estimator::MonteCarlo),
            "birkhoff" => Ok(Estimator::Birkhoff),
            other => Err(Error::invalid(format!(
                "unsupported estimator '{other}' (expected monte_carlo or birkhoff)"
            ))),
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::MonteCarlo => "monte_carlo",
            Estimator::Birkhoff => "birkhoff",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCurve {
    pub lags: Vec<u64>,
    pub estimates: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub samples: usize,
    pub estimator: Estimator,
}

/// Per-block sums for one lag: `sum f`, `sum g`, `sum f g`, count.
#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    f: f64,
    g: f64,
    fg: f64,
    n: f64,
}

impl Sums {
    fn add(&mut self, f: f64, g: f64) {
        self.f += f;
        self.g += g;
        self.fg += f * g;
        self.n += 1.0;
    }

    fn merged(&self, o: &Sums) -> Sums {
        Sums {
            f: self.f + o.f,
            g: self.g + o.g,
            fg: self.fg + o.fg,
            n: self.n + o.n,
        }
    }

    fn minus(&self, o: &Sums) -> Sums {
        Sums {
            f: self.f - o.f,
            g: self.g - o.g,
            fg: self.fg - o.fg,
            n: self.n - o.n,
        }
    }

    fn covariance(&self) -> f64 {
        self.fg / self.n - (self.f / self.n) * (self.g / self.n)
    }
}

/// Estimate and delete-one-block jackknife standard error.
fn jackknife(blocks: &[Sums]) -> (f64, f64) {
    let total = blocks.iter().fold(Sums::default(), |a, b| a.merged(b));
    let est = total.covariance();
    let b = blocks.iter().filter(|s| s.n > 0.0).count();
    if b < 2 {
        return (est, f64::INFINITY);
    }
    let loo: Vec<f64> = blocks
        .iter()
        .filter(|s| s.n > 0.0)
        .map(|s| total.minus(s).covariance())
        .collect();
    let mean = loo.iter().sum::<f64>() / b as f64;
    let var = loo.iter().map(|v| (v - mean).powi(2)).sum::<f64>() * (b as f64 - 1.0) / b as f64;
    // floor keeps standard errors positive when an observable is constant
    let floor = 1e-15 * (1.0 + est.abs());
    (est, var.sqrt().max(floor))
}

/// Estimates `C(n) = ∫ f g∘T^n dmu - ∫ f dmu ∫ g dmu` for `n = 0..=n_max`.
///
/// Orbits run in the system's default mode; exact-modular systems draw a
/// fresh 61-bit prime modulus per call. Standard errors come from a
/// delete-one-block jackknife over [`JACKKNIFE_BLOCKS`] contiguous blocks.
pub fn estimate_correlation<R: Rng + ?Sized>(
    sys: &SystemDescriptor,
    f: &Observable,
    g: &Observable,
    n_max: u64,
    samples: usize,
    estimator: Estimator,
    rng: &mut R,
) -> Result<CorrelationCurve> {
    if samples < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "correlation estimates need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    f.check_dim(sys.dim())?;
    g.check_dim(sys.dim())?;
    let mode = sys.default_mode();
    let modulus = random_prime(rng, 61)?;
    let d = sys.dim();
    let lags = (n_max + 1) as usize;
    let block_len = samples.div_ceil(JACKKNIFE_BLOCKS);
    let mut blocks = vec![vec![Sums::default(); JACKKNIFE_BLOCKS]; lags];
    let mut path = vec![0.0; lags * d];

    match estimator {
        Estimator::MonteCarlo => {
            for s in 0..samples {
                let seed = sys.sample_seed(&mode, rng, modulus)?;
                trajectory(sys, &seed, mode, &mut path)?;
                let fx = f.eval(&path[..d]);
                let b = s / block_len;
                for (n, lag) in blocks.iter_mut().enumerate() {
                    lag[b].add(fx, g.eval(&path[n * d..(n + 1) * d]));
                }
            }
        }
        Estimator::Birkhoff => {
            let seed = sys.sample_seed(&mode, rng, modulus)?;
            let x0 = seed.to_point()?;
            let total = samples as u64 + n_max;
            let mut orbit = Orbit::new(*sys, &seed, mode, total)?;
            // ring buffer of the last n_max + 1 points, oldest first
            let mut ring = vec![0.0; lags * d];
            ring[..d].copy_from_slice(x0.coords());
            let mut filled = 1usize;
            let mut y = vec![0.0; d];
            let mut t = 0usize;
            loop {
                if filled == lags {
                    let head = t % lags;
                    let fx = f.eval(&ring[head * d..(head + 1) * d]);
                    let b = t / block_len;
                    for (n, lag) in blocks.iter_mut().enumerate() {
                        let idx = (head + n) % lags;
                        lag[b].add(fx, g.eval(&ring[idx * d..(idx + 1) * d]));
                    }
                    t += 1;
                    if t == samples || !orbit.advance_into(&mut y) {
                        break;
                    }
                    ring[head * d..(head + 1) * d].copy_from_slice(&y);
                } else {
                    if !orbit.advance_into(&mut y) {
                        break;
                    }
                    ring[filled * d..(filled + 1) * d].copy_from_slice(&y);
                    filled += 1;
                }
            }
        }
    }

    let mut estimates = Vec::with_capacity(lags);
    let mut std_errors = Vec::with_capacity(lags);
    for lag in &blocks {
        let (e, se) = jackknife(lag);
        estimates.push(e);
        std_errors.push(se);
    }
    Ok(CorrelationCurve {
        lags: (0..=n_max).collect(),
        estimates,
        std_errors,
        samples,
        estimator,
    })
}

/// Writes `x0, T x0, ..., T^{n} x0` into `out` (`n + 1` points of dimension d).
fn trajectory(sys: &SystemDescriptor, seed: &crate::systems::Seed, mode: OrbitMode, out: &mut [f64]) -> Result<()> {
    let d = sys.dim();
    let n = out.len() / d - 1;
    out[..d].copy_from_slice(seed.to_point()?.coords());
    let mut orbit = Orbit::new(*sys, seed, mode, n as u64)?;
    for k in 1..=n {
        orbit.advance_into(&mut out[k * d..(k + 1) * d]);
    }
    Ok(())
}

/// `C e^{-tau n}` fitted to the significant part of a curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub constant: f64,
    pub rate: f64,
    pub lags: Vec<u64>,
}

/// Least squares of `ln |C(n)|` on `n` over lags with `|C(n)| > 3 se(n)`.
pub fn fit_decay_rate(curve: &CorrelationCurve) -> Result<DecayFit> {
    fit_log_linear(&curve.lags, &curve.estimates, &curve.std_errors)
}

fn fit_log_linear(lags: &[u64], values: &[f64], errors: &[f64]) -> Result<DecayFit> {
    let used: Vec<(u64, f64)> = lags
        .iter()
        .zip(values.iter().zip(errors))
        .filter(|(_, (v, se))| v.abs() > 3.0 * **se && v.abs() > 0.0)
        .map(|(n, (v, _))| (*n, v.abs().ln()))
        .collect();
    if used.len() < 3 {
        return Err(Error::InsufficientSignal(format!(
            "only {} lag(s) exceed three standard errors; at least 3 are needed",
            used.len()
        )));
    }
    let m = used.len() as f64;
    let mx = used.iter().map(|(n, _)| *n as f64).sum::<f64>() / m;
    let my = used.iter().map(|(_, y)| *y).sum::<f64>() / m;
    let sxx: f64 = used.iter().map(|(n, _)| (*n as f64 - mx).powi(2)).sum();
    let sxy: f64 = used.iter().map(|(n, y)| (*n as f64 - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientSignal("significant lags are not distinct".into()));
    }
    let slope = sxy / sxx;
    Ok(DecayFit {
        constant: (my - slope * mx).exp(),
        rate: -slope,
        lags: used.iter().map(|(n, _)| *n).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetCorrelationReport {
    pub mu_r: f64,
    pub mu_f: f64,
    pub lags: Vec<u64>,
    /// `|mu^(R ∩ T^-n F) - mu(R) mu(F)|`.
    pub deviations: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub fit: Option<DecayFit>,
    /// Why no fit was produced, when the signal was too weak.
    pub fit_note: Option<String>,
    /// Deviation at the last lag is no larger than at lag 0, within error.
    pub decays: bool,
}

/// Frequency estimate of `mu(R ∩ T^-n F)` over `mu`-samples against the
/// product `mu(R) mu(F)`, for `n = 0..=n_max`.
pub fn set_correlation_check<R: Rng + ?Sized>(
    sys: &SystemDescriptor,
    r: &Hyperrectangle,
    f: &Hyperrectangle,
    n_max: u64,
    samples: usize,
    rng: &mut R,
) -> Result<SetCorrelationReport> {
    let mu_r = mu_rect(sys, r)?.value;
    let mu_f = mu_rect(sys, f)?.value;
    if !(mu_f > 0.0) {
        return Err(Error::invalid("F must have positive measure"));
    }
    if samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let d = sys.dim();
    let mode = sys.default_mode();
    let modulus = random_prime(rng, 61)?;
    let lags = (n_max + 1) as usize;
    let mut counts = vec![0u64; lags];
    let mut path = vec![0.0; lags * d];
    for _ in 0..samples {
        let seed = sys.sample_seed(&mode, rng, modulus)?;
        trajectory(sys, &seed, mode, &mut path)?;
        if !r.contains_coords(&path[..d]) {
            continue;
        }
        for (n, c) in counts.iter_mut().enumerate() {
            if f.contains_coords(&path[n * d..(n + 1) * d]) {
                *c += 1;
            }
        }
    }
    let target = mu_r * mu_f;
    let m = samples as f64;
    let mut deviations = Vec::with_capacity(lags);
    let mut std_errors = Vec::with_capacity(lags);
    for c in &counts {
        let p = *c as f64 / m;
        deviations.push((p - target).abs());
        // binomial error, evaluated at the larger of p and the target so
        // that an empty count does not claim zero uncertainty
        let q = p.max(target);
        std_errors.push((q * (1.0 - q) / m).sqrt().max(1.0 / m));
    }
    let lag_ids: Vec<u64> = (0..=n_max).collect();
    let (fit, fit_note) = match fit_log_linear(&lag_ids, &deviations, &std_errors) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let decays = deviations[lags - 1] <= deviations[0] + 3.0 * (std_errors[0] + std_errors[lags - 1]);
    Ok(SetCorrelationReport {
        mu_r,
        mu_f,
        lags: lag_ids,
        deviations,
        std_errors,
        fit,
        fit_note,
        decays,
    })
}
