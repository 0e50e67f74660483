//! Numerical checks that a descriptor's data is consistent: invariance of
//! the density, the expansion constant, and the partition covering.

use std::f64::consts::{LN_2, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{SystemDescriptor, SystemKind};
use crate::measure::quadrature::{integrate, integrate_2d, integrate_split};
use crate::measure::{density_breakpoints, mu_bounds};
use crate::schedule::CompensatedSum;

/// Test functions for the invariance check, tensorized in d = 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    One,
    Identity,
    Square,
    Cosine,
}

impl TestFunction {
    pub const ALL: [TestFunction; 4] = [
        TestFunction::One,
        TestFunction::Identity,
        TestFunction::Square,
        TestFunction::Cosine,
    ];

    pub fn eval(self, x: f64) -> f64 {
        match self {
            TestFunction::One => 1.0,
            TestFunction::Identity => x,
            TestFunction::Square => x * x,
            TestFunction::Cosine => (2.0 * PI * x).cos(),
        }
    }

    fn eval_tensor(self, x: &[f64]) -> f64 {
        x.iter().map(|c| self.eval(*c)).product()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvarianceDefect {
    pub function: TestFunction,
    pub pushed: f64,
    pub direct: f64,
    pub defect: f64,
}

/// Number of Gauss branches summed explicitly in the transfer operator;
/// the remainder is replaced by its midpoint-rule integral plus the
/// first Euler-Maclaurin correction.
const GAUSS_EXPLICIT_BRANCHES: u64 = 200;

/// `|∫ f∘T h dλ - ∫ f h dλ|` by adaptive quadrature.
///
/// Finite partitions integrate `f(T x) h(x)` branch by branch. The Gauss
/// map has infinitely many branches, so the left side is evaluated as
/// `∫ f(y) (P h)(y) dy` with the transfer operator
/// `(P h)(y) = sum_i h(1/(i+y)) / (i+y)^2` summed explicitly up to a cutoff
/// and closed with the tail integral `∫_0^{1/(I+1/2+y)} h(u) du`.
pub fn invariance_defect(sys: &SystemDescriptor, f: TestFunction, tol: f64) -> InvarianceDefect {
    invariance_defect_with(sys, |x| sys.density_coords(x), f, tol)
}

/// [`invariance_defect`] for a candidate density other than the system's own.
pub fn invariance_defect_with<H: Fn(&[f64]) -> f64>(
    sys: &SystemDescriptor,
    h: H,
    f: TestFunction,
    tol: f64,
) -> InvarianceDefect {
    let breaks = density_breakpoints(sys);
    let (pushed, direct) = match sys.kind() {
        SystemKind::Gauss => {
            let pushed = integrate(|y| f.eval(y) * gauss_transfer(&h, y), 0.0, 1.0, tol).value;
            let direct = integrate(|x| f.eval(x) * h(&[x]), 0.0, 1.0, tol).value;
            (pushed, direct)
        }
        SystemKind::BetaGolden | SystemKind::Doubling => {
            let mut acc = CompensatedSum::new();
            for b in sys.partition() {
                let (lo, hi) = (b.bounds.lo()[0], b.bounds.hi()[0]);
                let q = integrate_split(
                    |x| f.eval(sys.branch_map(b.digit, &[x])[0]) * h(&[x]),
                    lo,
                    hi,
                    breaks,
                    tol / 2.0,
                );
                acc.add(q.value);
            }
            let direct = integrate_split(|x| f.eval(x) * h(&[x]), 0.0, 1.0, breaks, tol).value;
            (acc.value(), direct)
        }
        SystemKind::ToralDiag23 => {
            let mut acc = CompensatedSum::new();
            for b in sys.partition() {
                let (lo, hi) = (b.bounds.lo(), b.bounds.hi());
                let q = integrate_2d(
                    |x, y| f.eval_tensor(&sys.branch_map(b.digit, &[x, y])) * h(&[x, y]),
                    [lo[0], lo[1]],
                    [hi[0], hi[1]],
                    [&[], &[]],
                    tol / 6.0,
                );
                acc.add(q.value);
            }
            let direct = integrate_2d(
                |x, y| f.eval_tensor(&[x, y]) * h(&[x, y]),
                [0.0, 0.0],
                [1.0, 1.0],
                [&[], &[]],
                tol,
            )
            .value;
            (acc.value(), direct)
        }
    };
    InvarianceDefect {
        function: f,
        pushed,
        direct,
        defect: (pushed - direct).abs(),
    }
}

fn gauss_transfer<H: Fn(&[f64]) -> f64>(h: &H, y: f64) -> f64 {
    let term = |t: f64| h(&[1.0 / t]) / (t * t);
    let mut acc = CompensatedSum::new();
    for i in (1..=GAUSS_EXPLICIT_BRANCHES).rev() {
        acc.add(term(i as f64 + y));
    }
    let t0 = GAUSS_EXPLICIT_BRANCHES as f64 + 0.5 + y;
    acc.add(simpson(|u| h(&[u]), 0.0, 1.0 / t0, 32));
    let dt = 1e-3;
    acc.add((term(t0 + dt) - term(t0 - dt)) / (2.0 * dt) / 24.0);
    acc.value()
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub bound: f64,
    pub pairs: usize,
    pub min_ratio: f64,
    pub violations: usize,
}

/// Samples within-branch pairs and checks `|Tx - Ty| >= L |x - y|` up to
/// an absolute slack of `1e-12`. Gauss branches are drawn from `i <= branch_cap`.
pub fn check_expansion<R: Rng + ?Sized>(
    sys: &SystemDescriptor,
    pairs: usize,
    branch_cap: u64,
    rng: &mut R,
) -> ExpansionReport {
    let l = sys.expansion_lower_bound();
    let first = sys.first_digit();
    let count = sys.partition_len().map_or(branch_cap, |n| n as u64);
    let mut min_ratio = f64::INFINITY;
    let mut violations = 0;
    for _ in 0..pairs {
        let digit = first + rng.random_range(0..count);
        let b = sys.branch(digit).expect("digit in range");
        let draw = |rng: &mut R| -> Vec<f64> {
            b.bounds
                .lo()
                .iter()
                .zip(b.bounds.hi())
                .map(|(a, c)| a + (c - a) * rng.random::<f64>())
                .collect()
        };
        let x = draw(rng);
        let y = draw(rng);
        let dx = crate::geometry::max_norm_diff(&x, &y);
        let dt = crate::geometry::max_norm_diff(&sys.branch_map(digit, &x), &sys.branch_map(digit, &y));
        if dx > 0.0 {
            min_ratio = min_ratio.min(dt / dx);
        }
        if dt < l * dx - 1e-12 {
            violations += 1;
        }
    }
    ExpansionReport {
        bound: l,
        pairs,
        min_ratio,
        violations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub enumerated: u64,
    pub enumerated_volume: f64,
    pub tail_volume: f64,
    pub total: f64,
}

/// `sum_i λ(U_i)`; the Gauss enumeration stops at `gauss_cap` and the
/// remaining mass `λ((0, 1/(cap+1)))` is reported as the tail.
pub fn partition_coverage(sys: &SystemDescriptor, gauss_cap: u64) -> CoverageReport {
    let mut acc = CompensatedSum::new();
    let mut enumerated = 0;
    let tail = match sys.partition_len() {
        Some(_) => {
            for b in sys.partition() {
                acc.add(b.bounds.volume());
                enumerated += 1;
            }
            0.0
        }
        None => {
            for b in sys.partition().take(gauss_cap as usize) {
                acc.add(b.bounds.volume());
                enumerated += 1;
            }
            1.0 / (gauss_cap as f64 + 1.0)
        }
    };
    let enumerated_volume = acc.value();
    acc.add(tail);
    CoverageReport {
        enumerated,
        enumerated_volume,
        tail_volume: tail,
        total: acc.value(),
    }
}

/// `∫ h dλ` by quadrature (should be 1).
pub fn density_mass(sys: &SystemDescriptor) -> f64 {
    match sys.dim() {
        1 => integrate_split(|x| sys.density_coords(&[x]), 0.0, 1.0, density_breakpoints(sys), 1e-13).value,
        _ => {
            integrate_2d(
                |x, y| sys.density_coords(&[x, y]),
                [0.0, 0.0],
                [1.0, 1.0],
                [&[], &[]],
                1e-13,
            )
            .value
        }
    }
}

/// The Gauss interval measure `log2((1+b)/(1+a))`, exposed for checks.
pub fn gauss_interval_measure(a: f64, b: f64) -> f64 {
    ((1.0 + b) / (1.0 + a)).ln() / LN_2
}

/// Closed-form `mu` of the box with the given bounds.
pub fn mu_of_bounds(sys: &SystemDescriptor, lo: &[f64], hi: &[f64]) -> f64 {
    mu_bounds(sys, lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn densities_are_invariant() {
        for sys in SystemDescriptor::all() {
            for f in TestFunction::ALL {
                let d = invariance_defect(&sys, f, 1e-11);
                assert!(d.defect <= 1e-8, "{sys} {f:?}: {d:?}");
            }
        }
    }

    #[test]
    fn wrong_density_is_caught() {
        // Lebesgue measure is not Gauss-invariant.
        let g = SystemDescriptor::gauss();
        let d = invariance_defect_with(&g, |_| 1.0, TestFunction::Identity, 1e-10);
        assert!(d.defect > 1e-2, "{d:?}");
    }

    #[test]
    fn densities_have_unit_mass() {
        for sys in SystemDescriptor::all() {
            assert!((density_mass(&sys) - 1.0).abs() <= 1e-10, "{sys}");
        }
    }

    #[test]
    fn expansion_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for sys in SystemDescriptor::all() {
            let r = check_expansion(&sys, 100_000, 100, &mut rng);
            assert_eq!(r.violations, 0, "{sys}: {r:?}");
            assert!(r.min_ratio >= r.bound - 1e-9);
        }
    }

    #[test]
    fn coverage_is_complete() {
        for sys in SystemDescriptor::all() {
            let c = partition_coverage(&sys, 1_000_000);
            assert!((c.total - 1.0).abs() <= 1e-12, "{sys}: {c:?}");
        }
        let c = partition_coverage(&SystemDescriptor::gauss(), 1_000_000);
        assert!((c.tail_volume - 1.0 / 1_000_001.0).abs() < 1e-18);
    }
}
