//! Hit counting for `T^k x ∈ R(x, r_k)` and for the measure-matched
//! targets `R(x, xi_k(x))` with `mu(R(x, xi_k(x))) = gamma_k`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{max_norm_diff, Coords, Hyperrectangle, Point};
use crate::measure::mu_centered;
use crate::schedule::{CompensatedSum, RadiusSchedule, ScheduleTable};
use crate::systems::{Orbit, OrbitMode, Seed, SystemDescriptor};

/// Geometric checkpoint ratio `10^(1/8)`.
pub const CHECKPOINT_RATIO: f64 = 1.333_521_432_163_324;
/// Maximum number of hit indices kept per series.
pub const HIT_LOG_CAP: usize = 100_000;
/// Bisection cap for [`scale_to_measure`].
pub const MAX_BISECTION_STEPS: usize = 200;

/// Which target family a series counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    /// `R(x, r_k)`, normalized by `sum 2^d gamma_k`; ratio tends to `h(x)`.
    Plain,
    /// `R(x, xi_k(x))` on the thinned schedule, normalized by
    /// `sum gamma_k`; ratio tends to 1.
    Hat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub n: u64,
    pub hits: u64,
    pub normalizer: f64,
    /// `hits / normalizer`; `None` while the normalizer is zero.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitSeries {
    pub target: TargetKind,
    pub seed: Vec<f64>,
    pub density: f64,
    pub mode: String,
    pub checkpoints: Vec<Checkpoint>,
    pub total_hits: u64,
    pub last_hit: Option<u64>,
    pub hit_log: Vec<u64>,
    pub hit_log_truncated: bool,
}

impl HitSeries {
    pub fn final_checkpoint(&self) -> Option<&Checkpoint> {
        self.checkpoints.last()
    }

    pub fn final_ratio(&self) -> Option<f64> {
        self.final_checkpoint().and_then(|c| c.ratio)
    }

    pub fn final_normalizer(&self) -> f64 {
        self.final_checkpoint().map_or(0.0, |c| c.normalizer)
    }

    /// Hits with index strictly greater than `k`.
    pub fn hits_after(&self, k: u64) -> u64 {
        if self.hit_log_truncated {
            let logged = self.hit_log.iter().filter(|i| **i > k).count() as u64;
            return logged + (self.total_hits - self.hit_log.len() as u64);
        }
        self.hit_log.iter().filter(|i| **i > k).count() as u64
    }
}

/// Geometric checkpoints `round(10^(j/8))`, deduplicated, always ending at `n`.
pub fn checkpoint_grid(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut j = 0i32;
    loop {
        let c = 10f64.powf(j as f64 / 8.0).round() as u64;
        if c >= n {
            break;
        }
        if out.last() != Some(&c) {
            out.push(c);
        }
        j += 1;
    }
    out.push(n);
    out
}

fn validate_checkpoints(checkpoints: &[u64], n: u64) -> Result<Vec<u64>> {
    let mut cps: Vec<u64> = checkpoints.iter().copied().filter(|c| *c >= 1 && *c <= n).collect();
    cps.sort_unstable();
    cps.dedup();
    if cps.last() != Some(&n) {
        cps.push(n);
    }
    Ok(cps)
}

/// Streams the orbit of `seed` once, counting `T^k x0 ∈ R(x0, r_k)` for
/// `k = 1..=n`. Memory is O(1) apart from checkpoints and the capped hit log.
pub fn hit_series(
    sys: &SystemDescriptor,
    seed: &Seed,
    schedule: &RadiusSchedule,
    n: u64,
    mode: OrbitMode,
    checkpoints: &[u64],
) -> Result<HitSeries> {
    if n == 0 {
        return Err(Error::invalid("hit series needs N >= 1"));
    }
    if schedule.dim() != sys.dim() {
        return Err(Error::invalid(format!(
            "schedule dimension {} does not match {} (d = {})",
            schedule.dim(),
            sys.name(),
            sys.dim()
        )));
    }
    let table = ScheduleTable::new(schedule, n);
    run_series(sys, seed, &table, n, mode, checkpoints, TargetKind::Plain)
}

/// [`hit_series`] over the measure-matched targets of the thinned schedule.
pub fn hat_hit_series(
    sys: &SystemDescriptor,
    seed: &Seed,
    schedule: &RadiusSchedule,
    n: u64,
    mode: OrbitMode,
    checkpoints: &[u64],
) -> Result<HitSeries> {
    if n == 0 {
        return Err(Error::invalid("hit series needs N >= 1"));
    }
    if schedule.dim() != sys.dim() {
        return Err(Error::invalid("schedule dimension does not match the system"));
    }
    let table = ScheduleTable::new(schedule, n);
    run_series(sys, seed, &table, n, mode, checkpoints, TargetKind::Hat)
}

/// Shared driver used by the harness, which reuses one table for every seed.
pub fn run_series(
    sys: &SystemDescriptor,
    seed: &Seed,
    table: &ScheduleTable,
    n: u64,
    mode: OrbitMode,
    checkpoints: &[u64],
    target: TargetKind,
) -> Result<HitSeries> {
    if n == 0 || n > table.len() {
        return Err(Error::invalid(format!(
            "N = {n} outside the precomputed schedule range 1..={}",
            table.len()
        )));
    }
    let cps = validate_checkpoints(checkpoints, n)?;
    let x0 = seed.to_point()?;
    let x: Coords = Coords::from_slice(x0.coords());
    let d = sys.dim();
    let scale = 2f64.powi(d as i32);
    let mut orbit = Orbit::new(*sys, seed, mode, n)?;
    let mut y = [0.0f64; 4];
    let y = &mut y[..d];

    let mut hits = 0u64;
    let mut last_hit = None;
    let mut log = Vec::new();
    let mut truncated = false;
    let mut norm = CompensatedSum::new();
    let mut out = Vec::with_capacity(cps.len());
    let mut next_cp = 0;

    for k in 1..=n {
        if !orbit.advance_into(y) {
            return Err(Error::Internal("orbit ended early".into()));
        }
        let r = table.radius(k);
        let hit = match target {
            TargetKind::Plain => {
                norm.add(scale * table.gamma(k));
                within(&x, y, r)
            }
            TargetKind::Hat => {
                if table.is_active(k) {
                    let g = table.gamma(k);
                    norm.add(g);
                    hat_contains(sys, &x, r, g, y)
                } else {
                    max_norm_diff(&x, y) == 0.0
                }
            }
        };
        if hit {
            hits += 1;
            last_hit = Some(k);
            if log.len() < HIT_LOG_CAP {
                log.push(k);
            } else {
                truncated = true;
            }
        }
        if k == cps[next_cp] {
            let normalizer = norm.value();
            out.push(Checkpoint {
                n: k,
                hits,
                normalizer,
                ratio: (normalizer > 0.0).then(|| hits as f64 / normalizer),
            });
            next_cp += 1;
        }
    }

    Ok(HitSeries {
        target,
        seed: x0.coords().to_vec(),
        density: match target {
            TargetKind::Plain => sys.density(&x0),
            TargetKind::Hat => 1.0,
        },
        mode: mode.to_string(),
        checkpoints: out,
        total_hits: hits,
        last_hit,
        hit_log: log,
        hit_log_truncated: truncated,
    })
}

#[inline]
fn within(x: &[f64], y: &[f64], r: &[f64]) -> bool {
    x.iter().zip(y).zip(r).all(|((a, b), w)| (a - b).abs() <= *w)
}

/// `y ∈ R(x, l r)` where `mu(R(x, l r)) = gamma`, decided without solving
/// for `l`: with `t = max_i |y_i - x_i| / r_i`, membership is `t <= l`,
/// and because `l -> mu(R(x, l r))` is strictly increasing until the box
/// covers the cube, `t <= l` holds exactly when `mu(R(x, t r)) <= gamma`.
#[inline]
pub(crate) fn hat_contains(sys: &SystemDescriptor, x: &[f64], r: &[f64], gamma: f64, y: &[f64]) -> bool {
    let mut t = 0.0f64;
    for i in 0..x.len() {
        let dist = (y[i] - x[i]).abs();
        if r[i] == 0.0 {
            if dist > 0.0 {
                return false;
            }
        } else {
            t = t.max(dist / r[i]);
        }
    }
    let mut rt = [0.0; 4];
    for i in 0..x.len() {
        rt[i] = t * r[i];
    }
    mu_centered(sys, x, &rt[..x.len()]) <= gamma
}

/// `l_n(x)` with `mu(R(x, l r) ∩ [0,1]^d) = gamma`, and `xi = l r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledTarget {
    pub scale: f64,
    pub xi: Vec<f64>,
    pub achieved: f64,
    pub residual: f64,
}

/// Solves `mu(R(x, l r)) = gamma` for `l >= 0` by monotone bisection.
/// The bracket doubles from `[0, 1]` until it encloses the target, then is
/// halved until its ends are adjacent doubles or the step cap is reached;
/// the upper end is returned.
pub fn scale_to_measure(sys: &SystemDescriptor, x: &Point, r: &[f64], gamma: f64) -> Result<ScaledTarget> {
    if x.dim() != sys.dim() || r.len() != sys.dim() {
        return Err(Error::invalid("dimension mismatch in scale_to_measure"));
    }
    if r.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::invalid("radius must be finite and non-negative"));
    }
    if !(gamma >= 0.0) {
        return Err(Error::invalid(format!(
            "target measure must be non-negative, got {gamma}"
        )));
    }
    let xc = x.coords();
    let m = |l: f64| {
        let mut rl = [0.0; 4];
        for i in 0..r.len() {
            rl[i] = l * r[i];
        }
        mu_centered(sys, xc, &rl[..r.len()])
    };
    if gamma == 0.0 {
        return Ok(ScaledTarget {
            scale: 0.0,
            xi: vec![0.0; r.len()],
            achieved: m(0.0),
            residual: m(0.0),
        });
    }
    if gamma > 1.0 {
        return Err(Error::UnreachableTarget(format!(
            "gamma = {gamma} exceeds the total mass 1"
        )));
    }
    if r.contains(&0.0) {
        return Err(Error::UnreachableTarget(
            "a zero radius component gives a null rectangle, so no positive measure is reachable".into(),
        ));
    }
    // Smallest scale at which the box covers the cube.
    let l_cover = xc.iter().zip(r).map(|(c, w)| c.max(1.0 - c) / w).fold(0.0, f64::max);
    let full = m(l_cover);
    if gamma >= full {
        if gamma - full > 1e-12 {
            return Err(Error::UnreachableTarget(format!(
                "gamma = {gamma} exceeds the reachable mass {full}"
            )));
        }
        return Ok(ScaledTarget {
            scale: l_cover,
            xi: r.iter().map(|w| l_cover * w).collect(),
            achieved: full,
            residual: (full - gamma).abs(),
        });
    }
    let mut lo = 0.0f64;
    let mut hi = 1.0f64.min(l_cover);
    while m(hi) < gamma {
        lo = hi;
        hi = (hi * 2.0).min(l_cover);
    }
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if m(mid) < gamma {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let achieved = m(hi);
    Ok(ScaledTarget {
        scale: hi,
        xi: r.iter().map(|w| hi * w).collect(),
        achieved,
        residual: (achieved - gamma).abs(),
    })
}

/// Whether `T^n x ∈ R(x, xi_n(x))`, given the orbit point `y = T^n x`.
/// Uses the thinned `gamma_n` (zero when `gamma_n <= n^-2`).
pub fn hat_membership(sys: &SystemDescriptor, x: &Point, n: u64, schedule: &RadiusSchedule, y: &Point) -> Result<bool> {
    let (r, gamma, _) = schedule.thin().values(n)?;
    let target = scale_to_measure(sys, x, &r, gamma)?;
    let rect = Hyperrectangle::from_center(x, &target.xi)?;
    rect.contains(y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub samples: usize,
    /// Whether the inner rectangle is empty (some `xi - 2 r n^2 r_n < 0`).
    pub inner_vacuous: bool,
    pub inner_hits: usize,
    pub hat_hits: usize,
    pub inner_violations: usize,
    pub outer_violations: usize,
}

impl SandwichReport {
    pub fn pass(&self) -> bool {
        self.inner_violations == 0 && self.outer_violations == 0
    }
}

/// For samples `F ⊂ B(x, r)` checks
/// `T^n y ∈ R(x, xi_n(x) - 2 r n^2 r_n)  =>  y ∈ Ê_n  =>  T^n y ∈ R(x, xi_n(x) + 2 r n^2 r_n)`.
pub fn sandwich_check(
    sys: &SystemDescriptor,
    x: &Point,
    r: f64,
    n: u64,
    schedule: &RadiusSchedule,
    samples: &[Point],
) -> Result<SandwichReport> {
    let (rn, gamma) = schedule.values(n)?;
    if !(gamma > 0.0) {
        return Err(Error::invalid("sandwich check needs gamma_n > 0"));
    }
    if !(r >= 0.0) {
        return Err(Error::invalid("ball radius must be non-negative"));
    }
    let xi = scale_to_measure(sys, x, &rn, gamma)?.xi;
    let pad = 2.0 * r * (n as f64).powi(2);
    let inner: Vec<f64> = xi.iter().zip(&rn).map(|(a, w)| a - pad * w).collect();
    let outer: Vec<f64> = xi.iter().zip(&rn).map(|(a, w)| a + pad * w).collect();
    let inner_vacuous = inner.iter().any(|v| *v < 0.0);

    let mut report = SandwichReport {
        samples: samples.len(),
        inner_vacuous,
        inner_hits: 0,
        hat_hits: 0,
        inner_violations: 0,
        outer_violations: 0,
    };
    for y in samples {
        if y.dist(x) > r {
            return Err(Error::invalid("sample lies outside B(x, r)"));
        }
        let mut ty = Coords::from_slice(y.coords());
        for _ in 0..n {
            sys.step_in_place(&mut ty);
        }
        let xi_y = scale_to_measure(sys, y, &rn, gamma)?.xi;
        let in_hat = within(y.coords(), &ty, &xi_y);
        let in_inner = !inner_vacuous && within(x.coords(), &ty, &inner);
        let in_outer = within(x.coords(), &ty, &outer);
        report.inner_hits += usize::from(in_inner);
        report.hat_hits += usize::from(in_hat);
        if in_inner && !in_hat {
            report.inner_violations += 1;
        }
        if in_hat && !in_outer {
            report.outer_violations += 1;
        }
    }
    Ok(report)
}

/// Uniform samples from `B(x, r) ∩ [0,1]^d` (max-norm ball).
pub fn sample_ball<R: Rng + ?Sized>(x: &Point, r: f64, count: usize, rng: &mut R) -> Vec<Point> {
    (0..count)
        .map(|_| {
            let c: Coords = x
                .coords()
                .iter()
                .map(|c| {
                    let lo = (c - r).max(0.0);
                    let hi = (c + r).min(1.0);
                    (lo + (hi - lo) * rng.random::<f64>()).clamp(lo, hi)
                })
                .collect();
            Point::from_coords(c)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HatMeasureEstimate {
    pub n: u64,
    pub samples: usize,
    pub gamma: f64,
    pub frequency: f64,
    pub lower_allowance: f64,
    pub pass: bool,
}

/// Estimates `mu(Ê_n)` by the frequency of `T^n y ∈ R(y, xi_n(y))` over
/// `mu`-distributed `y`, and checks it against
/// `(1 - 0.05) gamma_n - 3 sqrt(gamma_n / M)`.
pub fn hat_measure_estimate<R: Rng + ?Sized>(
    sys: &SystemDescriptor,
    n: u64,
    schedule: &RadiusSchedule,
    samples: usize,
    modulus: u64,
    rng: &mut R,
) -> Result<HatMeasureEstimate> {
    let (r, gamma, _) = schedule.thin().values(n)?;
    let mode = sys.default_mode();
    let mut hits = 0usize;
    let d = sys.dim();
    let mut y = [0.0; 4];
    for _ in 0..samples {
        let seed = match mode {
            OrbitMode::ExactModular => Seed::Modular(sys.sample_modular(rng, modulus)?),
            _ => Seed::Real(sys.sample_mu(rng)?),
        };
        let x = seed.to_point()?;
        let mut orbit = Orbit::new(*sys, &seed, mode, n)?;
        while orbit.advance_into(&mut y[..d]) {}
        let hit = if gamma > 0.0 {
            hat_contains(sys, x.coords(), &r, gamma, &y[..d])
        } else {
            max_norm_diff(x.coords(), &y[..d]) == 0.0
        };
        hits += usize::from(hit);
    }
    let frequency = hits as f64 / samples.max(1) as f64;
    let lower_allowance = 0.95 * gamma - 3.0 * (gamma / samples.max(1) as f64).sqrt();
    Ok(HatMeasureEstimate {
        n,
        samples,
        gamma,
        frequency,
        lower_allowance,
        pass: frequency >= lower_allowance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_geometric() {
        let g = checkpoint_grid(1000);
        assert_eq!(&g[..6], &[1, 2, 3, 4, 6, 7]);
        assert_eq!(*g.last().unwrap(), 1000);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g.contains(&100));
        assert_eq!(checkpoint_grid(1), vec![1]);
    }

    #[test]
    fn golden_fixed_point_always_recurs() {
        use num_bigint::BigUint;
        // g = (sqrt 5 - 1)/2 to 600 bits, as an exact rational
        let scale = BigUint::from(1u32) << 1200u32;
        let s5 = (BigUint::from(5u32) * &scale * &scale).sqrt();
        let num = s5 - &scale;
        let den = scale * 2u32;
        let seed = Seed::Rational(vec![(num, den)]);
        let sched = RadiusSchedule::constant(&[0.1]).unwrap();
        let s = hit_series(
            &SystemDescriptor::gauss(),
            &seed,
            &sched,
            50,
            OrbitMode::HighPrecision { bits: 512 },
            &[],
        )
        .unwrap();
        assert_eq!(s.total_hits, 50);
    }

    #[test]
    fn doubling_one_third_hits() {
        let seed: Seed = "1/3".parse().unwrap();
        let sys = SystemDescriptor::doubling();
        let s = hit_series(
            &sys,
            &seed,
            &RadiusSchedule::constant(&[0.1]).unwrap(),
            100,
            OrbitMode::ExactModular,
            &[],
        )
        .unwrap();
        assert_eq!(s.total_hits, 50);
        assert!(s.hit_log.iter().all(|k| k % 2 == 0));
        let s = hit_series(
            &sys,
            &seed,
            &RadiusSchedule::constant(&[0.4]).unwrap(),
            100,
            OrbitMode::ExactModular,
            &[],
        )
        .unwrap();
        assert_eq!(s.total_hits, 100);
    }

    #[test]
    fn full_cube_always_hits() {
        let seed = Seed::real(&[0.377]).unwrap();
        let s = hit_series(
            &SystemDescriptor::gauss(),
            &seed,
            &RadiusSchedule::constant(&[1.0]).unwrap(),
            1000,
            OrbitMode::Float64,
            &[10, 100],
        )
        .unwrap();
        assert_eq!(s.total_hits, 1000);
        assert_eq!(
            s.checkpoints.iter().map(|c| c.n).collect::<Vec<_>>(),
            vec![10, 100, 1000]
        );
        assert_eq!(s.checkpoints[0].normalizer, 20.0);
    }

    #[test]
    fn scale_examples() {
        let t = SystemDescriptor::toral_diag23();
        let x = Point::new(&[0.5, 0.5]).unwrap();
        let s = scale_to_measure(&t, &x, &[0.1, 0.1], 0.01).unwrap();
        assert!((s.scale - 0.5).abs() < 1e-12);
        assert!(s.residual <= 1e-12);
        let z = scale_to_measure(&t, &x, &[0.1, 0.1], 0.0).unwrap();
        assert_eq!(z.scale, 0.0);
        assert!(matches!(
            scale_to_measure(&t, &x, &[0.1, 0.1], 1.5),
            Err(Error::UnreachableTarget(_))
        ));
        assert!(matches!(
            scale_to_measure(&t, &x, &[0.0, 0.1], 0.2),
            Err(Error::UnreachableTarget(_))
        ));
        let full = scale_to_measure(&t, &x, &[0.1, 0.1], 1.0).unwrap();
        assert!((full.scale - 5.0).abs() < 1e-12);
    }

    #[test]
    fn hat_membership_examples() {
        let t = SystemDescriptor::toral_diag23();
        let x = Point::new(&[0.5, 0.5]).unwrap();
        let sched = RadiusSchedule::power(&[0.2, 0.3]).unwrap();
        assert!(hat_membership(&t, &x, 5, &sched, &x).unwrap());

        let g = SystemDescriptor::gauss();
        let x = Point::scalar(0.5).unwrap();
        let sched = RadiusSchedule::explicit(vec![vec![1.0], vec![1.0], vec![0.2]]).unwrap();
        let target = scale_to_measure(&g, &x, &[1.0], 0.2).unwrap();
        // log2((1.5 + l) / (1.5 - l)) = 0.2  solved in closed form
        let c = 0.2f64.exp2();
        let oracle = 1.5 * (c - 1.0) / (1.0 + c);
        assert!((target.scale - oracle).abs() < 1e-9, "{} vs {oracle}", target.scale);
        assert!((target.scale - 0.103_806).abs() < 1e-6);
        let y = Point::scalar(0.62).unwrap();
        assert!(!hat_membership(&g, &x, 3, &sched, &y).unwrap());
        let y = Point::scalar(0.6).unwrap();
        assert!(hat_membership(&g, &x, 3, &sched, &y).unwrap());
        // thinned-out index: degenerate target, only exact returns count
        let tiny = RadiusSchedule::explicit(vec![vec![1.0], vec![1.0], vec![1e-9]]).unwrap();
        assert!(!hat_membership(&g, &x, 3, &tiny, &y).unwrap());
        assert!(hat_membership(&g, &x, 3, &tiny, &x).unwrap());
    }

    #[test]
    fn hat_contains_matches_bisection() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for sys in SystemDescriptor::all() {
            for _ in 0..2000 {
                let x = sys.sample_mu(&mut rng).unwrap();
                let y = sys.sample_mu(&mut rng).unwrap();
                let r: Vec<f64> = (0..sys.dim()).map(|_| rng.random::<f64>() * 0.5 + 0.01).collect();
                let gamma = rng.random::<f64>() * 0.5;
                let t = scale_to_measure(&sys, &x, &r, gamma).unwrap();
                let explicit = within(x.coords(), y.coords(), &t.xi);
                let fast = hat_contains(&sys, x.coords(), &r, gamma, y.coords());
                if explicit != fast {
                    // only acceptable on the boundary itself
                    let rect = Hyperrectangle::from_center(&x, &t.xi).unwrap();
                    assert!(rect.distance_to_boundary(y.coords()) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_schedule_hat_series_is_empty() {
        let seed = Seed::real(&[0.3]).unwrap();
        let s = hat_hit_series(
            &SystemDescriptor::gauss(),
            &seed,
            &RadiusSchedule::constant(&[0.0]).unwrap(),
            1000,
            OrbitMode::Float64,
            &[],
        )
        .unwrap();
        assert_eq!(s.total_hits, 0);
        assert_eq!(s.final_ratio(), None);
    }

    #[test]
    fn sandwich_trivial_ball() {
        let g = SystemDescriptor::gauss();
        let x = Point::scalar(0.4).unwrap();
        let sched = RadiusSchedule::power(&[0.5]).unwrap();
        let rep = sandwich_check(&g, &x, 0.0, 3, &sched, std::slice::from_ref(&x)).unwrap();
        assert!(rep.pass());
    }
}
