//! Adaptive composite midpoint quadrature with interval bisection.
//!
//! On each subinterval the midpoint rule is evaluated with 1, 2 and 4
//! panels (`M1`, `M2`, `M4`). Two Richardson steps give `R1 = M2 + (M2 - M1)/3`
//! and `R2 = M4 + (M4 - M2)/3`; the subinterval is accepted when
//! `|R2 - R1| / 15` is below its share of the tolerance and contributes
//! `R2 + (R2 - R1) / 15`. Children reuse the parent's nested midpoints, so
//! every refinement costs four new evaluations.

use crate::schedule::CompensatedSum;

/// Hard cap on the number of accepted subintervals.
pub const MAX_SUBINTERVALS: usize = 1_000_000;

/// Initial uniform split before adaptivity kicks in; guards against a
/// coarse first panel agreeing with its halves by accident.
const INITIAL_PANELS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Sum of local error estimates.
    pub error: f64,
    pub subintervals: usize,
    /// Whether the subinterval cap was hit before the tolerance was met.
    pub capped: bool,
}

/// Pending subinterval with `f` at its midpoint and at the midpoints of its halves.
struct Panel {
    l: f64,
    r: f64,
    center: f64,
    left: f64,
    right: f64,
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Quadrature {
    if !(b > a) {
        return Quadrature {
            value: 0.0,
            error: 0.0,
            subintervals: 0,
            capped: false,
        };
    }
    let total = b - a;
    let mut value = CompensatedSum::new();
    let mut error = 0.0;
    let mut accepted = 0usize;
    let mut capped = false;

    let width = total / INITIAL_PANELS as f64;
    let mut stack: Vec<Panel> = (0..INITIAL_PANELS)
        .rev()
        .map(|i| {
            let l = a + width * i as f64;
            let r = if i + 1 == INITIAL_PANELS { b } else { l + width };
            let h = r - l;
            Panel {
                l,
                r,
                center: f(l + 0.5 * h),
                left: f(l + 0.25 * h),
                right: f(r - 0.25 * h),
            }
        })
        .collect();

    while let Some(p) = stack.pop() {
        let h = p.r - p.l;
        let q = [
            f(p.l + 0.125 * h),
            f(p.l + 0.375 * h),
            f(p.l + 0.625 * h),
            f(p.l + 0.875 * h),
        ];
        let m1 = h * p.center;
        let m2 = 0.5 * h * (p.left + p.right);
        let m4 = 0.25 * h * (q[0] + q[1] + q[2] + q[3]);
        let r1 = m2 + (m2 - m1) / 3.0;
        let r2 = m4 + (m4 - m2) / 3.0;
        let est = (r2 - r1).abs() / 15.0;
        let share = tol * h / total;
        let mid = 0.5 * (p.l + p.r);
        let too_narrow = h <= 8.0 * f64::EPSILON * mid.abs().max(1e-300);
        if est <= share || too_narrow || accepted + stack.len() + 2 > MAX_SUBINTERVALS {
            if est > share && !too_narrow {
                capped = true;
            }
            value.add(r2 + (r2 - r1) / 15.0);
            error += est;
            accepted += 1;
        } else {
            stack.push(Panel {
                l: mid,
                r: p.r,
                center: p.right,
                left: q[2],
                right: q[3],
            });
            stack.push(Panel {
                l: p.l,
                r: mid,
                center: p.left,
                left: q[0],
                right: q[1],
            });
        }
    }
    Quadrature {
        value: value.value(),
        error,
        subintervals: accepted,
        capped,
    }
}

/// Integrates over `[a, b]` after splitting at the given interior
/// breakpoints, so piecewise-smooth integrands converge fast.
pub fn integrate_split<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, breakpoints: &[f64], tol: f64) -> Quadrature {
    let mut cuts: Vec<f64> = std::iter::once(a)
        .chain(breakpoints.iter().copied().filter(|p| *p > a && *p < b))
        .chain(std::iter::once(b))
        .collect();
    cuts.sort_by(f64::total_cmp);
    let pieces = (cuts.len() - 1).max(1) as f64;
    let mut out = Quadrature {
        value: 0.0,
        error: 0.0,
        subintervals: 0,
        capped: false,
    };
    let mut sum = CompensatedSum::new();
    for w in cuts.windows(2) {
        let q = integrate(&mut f, w[0], w[1], tol / pieces);
        sum.add(q.value);
        out.error += q.error;
        out.subintervals += q.subintervals;
        out.capped |= q.capped;
    }
    out.value = sum.value();
    out
}

/// Iterated integral over a 2-d box `[lo0, hi0] x [lo1, hi1]`.
pub fn integrate_2d<F: FnMut(f64, f64) -> f64>(
    mut f: F,
    lo: [f64; 2],
    hi: [f64; 2],
    breaks: [&[f64]; 2],
    tol: f64,
) -> Quadrature {
    let width0 = (hi[0] - lo[0]).max(f64::MIN_POSITIVE);
    let mut inner_error = 0.0;
    let mut inner_capped = false;
    let mut inner_count = 0;
    let outer = integrate_split(
        |x| {
            let q = integrate_split(|y| f(x, y), lo[1], hi[1], breaks[1], tol / (2.0 * width0));
            inner_error = f64::max(inner_error, q.error);
            inner_capped |= q.capped;
            inner_count += q.subintervals;
            q.value
        },
        lo[0],
        hi[0],
        breaks[0],
        tol / 2.0,
    );
    Quadrature {
        value: outer.value,
        error: outer.error + inner_error * width0,
        subintervals: outer.subintervals.max(inner_count),
        capped: outer.capped || inner_capped,
    }
}
