//! `mu` of rectangles, density norms, local density ratios and the
//! measure inequalities the recurrence estimates rest on.

pub mod quadrature;

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{max_norm, Hyperrectangle, Point};
use crate::systems::{SystemDescriptor, SystemKind, GOLDEN, GOLDEN_INV, PARRY_C};

/// Default absolute tolerance of the quadrature path.
pub const QUAD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureValue {
    pub value: f64,
    pub method: Method,
    pub error_bound: f64,
}

/// `mu(R ∩ [0,1]^d)` in closed form.
pub fn mu_rect(sys: &SystemDescriptor, r: &Hyperrectangle) -> Result<MeasureValue> {
    check_dim(sys, r)?;
    Ok(MeasureValue {
        value: mu_bounds(sys, r.lo(), r.hi()),
        method: Method::ClosedForm,
        error_bound: 0.0,
    })
}

/// `mu(R ∩ [0,1]^d)` by adaptive quadrature of the density.
pub fn mu_rect_quadrature(sys: &SystemDescriptor, r: &Hyperrectangle) -> Result<MeasureValue> {
    check_dim(sys, r)?;
    let r = r.clipped();
    let (lo, hi) = (r.lo(), r.hi());
    let q = match sys.dim() {
        1 => quadrature::integrate_split(
            |x| sys.density_coords(&[x]),
            lo[0],
            hi[0],
            density_breakpoints(sys),
            QUAD_TOL,
        ),
        _ => quadrature::integrate_2d(
            |x, y| sys.density_coords(&[x, y]),
            [lo[0], lo[1]],
            [hi[0], hi[1]],
            [&[], &[]],
            QUAD_TOL,
        ),
    };
    Ok(MeasureValue {
        value: q.value.clamp(0.0, 1.0),
        method: Method::Quadrature,
        error_bound: q.error,
    })
}

fn check_dim(sys: &SystemDescriptor, r: &Hyperrectangle) -> Result<()> {
    if r.dim() != sys.dim() {
        return Err(Error::invalid(format!(
            "rectangle dimension {} does not match {} (d = {})",
            r.dim(),
            sys.name(),
            sys.dim()
        )));
    }
    Ok(())
}

/// Interior discontinuities of the density.
pub(crate) fn density_breakpoints(sys: &SystemDescriptor) -> &'static [f64] {
    match sys.kind() {
        SystemKind::BetaGolden => &[GOLDEN_INV],
        _ => &[],
    }
}

/// Closed-form `mu` of the box `prod [lo_i, hi_i]` clipped to the cube.
#[inline]
pub(crate) fn mu_bounds(sys: &SystemDescriptor, lo: &[f64], hi: &[f64]) -> f64 {
    match sys.kind() {
        SystemKind::Gauss => {
            let a = lo[0].clamp(0.0, 1.0);
            let b = hi[0].clamp(0.0, 1.0);
            if b <= a {
                0.0
            } else {
                ((b - a) / (1.0 + a)).ln_1p() / LN_2
            }
        }
        SystemKind::BetaGolden => {
            let a = lo[0].clamp(0.0, 1.0);
            let b = hi[0].clamp(0.0, 1.0);
            let left = (b.min(GOLDEN_INV) - a).max(0.0);
            let right = (b - a.max(GOLDEN_INV)).max(0.0);
            (PARRY_C * GOLDEN * left + PARRY_C * right).min(1.0)
        }
        SystemKind::Doubling | SystemKind::ToralDiag23 => lo
            .iter()
            .zip(hi)
            .map(|(a, b)| (b.clamp(0.0, 1.0) - a.clamp(0.0, 1.0)).max(0.0))
            .product(),
    }
}

/// `mu(R(x, r) ∩ [0,1]^d)` without building a rectangle.
#[inline]
pub(crate) fn mu_centered(sys: &SystemDescriptor, x: &[f64], r: &[f64]) -> f64 {
    let mut lo = [0.0; 4];
    let mut hi = [0.0; 4];
    let d = x.len();
    for i in 0..d {
        lo[i] = x[i] - r[i];
        hi[i] = x[i] + r[i];
    }
    mu_bounds(sys, &lo[..d], &hi[..d])
}

/// Lebesgue volume of `R(x, r) ∩ [0,1]^d`.
pub(crate) fn lambda_centered(x: &[f64], r: &[f64]) -> f64 {
    x.iter()
        .zip(r)
        .map(|(c, w)| ((c + w).min(1.0) - (c - w).max(0.0)).max(0.0))
        .product()
}

/// `|h|_q` together with the Hölder exponent `s = 1 - 1/q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityNorm {
    pub q: f64,
    pub s: f64,
    pub value: f64,
}

/// `|h|_q = (∫ h^q dλ)^(1/q)` in closed form.
pub fn hq_norm(sys: &SystemDescriptor, q: f64) -> Result<DensityNorm> {
    if !(q > 1.0) || !q.is_finite() {
        return Err(Error::invalid(format!(
            "integrability exponent must satisfy q > 1, got {q}"
        )));
    }
    let value = match sys.kind() {
        SystemKind::Gauss => {
            // ∫ (1+x)^-q dx = (1 - 2^(1-q)) / (q - 1)
            ((1.0 - (1.0 - q).exp2()) / (q - 1.0)).powf(1.0 / q) / LN_2
        }
        SystemKind::BetaGolden => {
            let left = (PARRY_C * GOLDEN).powf(q) * GOLDEN_INV;
            let right = PARRY_C.powf(q) * (1.0 - GOLDEN_INV);
            (left + right).powf(1.0 / q)
        }
        SystemKind::Doubling | SystemKind::ToralDiag23 => 1.0,
    };
    Ok(DensityNorm {
        q,
        s: 1.0 - 1.0 / q,
        value,
    })
}

/// `|h|_q` by quadrature of `h^q`, the cross-check of [`hq_norm`].
pub fn hq_norm_quadrature(sys: &SystemDescriptor, q: f64) -> Result<DensityNorm> {
    let closed = hq_norm(sys, q)?;
    let integral = match sys.dim() {
        1 => {
            quadrature::integrate_split(
                |x| sys.density_coords(&[x]).powf(q),
                0.0,
                1.0,
                density_breakpoints(sys),
                QUAD_TOL,
            )
            .value
        }
        _ => {
            quadrature::integrate_2d(
                |x, y| sys.density_coords(&[x, y]).powf(q),
                [0.0, 0.0],
                [1.0, 1.0],
                [&[], &[]],
                QUAD_TOL,
            )
            .value
        }
    };
    Ok(DensityNorm {
        value: integral.powf(1.0 / q),
        ..closed
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HqCheck {
    pub mu: f64,
    pub lambda: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Checks `mu(F) <= |h|_q λ(F)^s` for a finite union of rectangles that
/// are disjoint after clipping (shared faces allowed).
pub fn check_hq_inequality(sys: &SystemDescriptor, q: f64, union: &[Hyperrectangle]) -> Result<HqCheck> {
    let norm = hq_norm(sys, q)?;
    let clipped: Vec<Hyperrectangle> = union.iter().map(Hyperrectangle::clipped).collect();
    for r in &clipped {
        check_dim(sys, r)?;
    }
    for (i, a) in clipped.iter().enumerate() {
        for b in &clipped[i + 1..] {
            if a.intersect(b).is_some_and(|c| c.volume() > 0.0) {
                return Err(Error::invalid("rectangles in the union overlap"));
            }
        }
    }
    let mu: f64 = clipped.iter().map(|r| mu_bounds(sys, r.lo(), r.hi())).sum();
    let lambda: f64 = clipped.iter().map(Hyperrectangle::volume).sum();
    let bound = norm.value * lambda.powf(norm.s);
    Ok(HqCheck {
        mu,
        lambda,
        bound,
        pass: mu <= bound + 1e-12,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnlargedBounds {
    pub gamma: f64,
    pub mu_enlarged: f64,
    pub mu_shrunk: f64,
    pub upper: f64,
    pub lower: f64,
    pub pass: bool,
}

/// With `gamma = mu(R(x, xi))`, checks
/// `mu(R(x, xi + delta)) <= gamma + 2d|h|_q |delta|^s` and
/// `mu(R(x, xi - delta)) >= gamma - 2d|h|_q |delta|^s`.
pub fn enlarged_rect_bounds(
    sys: &SystemDescriptor,
    x: &Point,
    xi: &[f64],
    delta: &[f64],
    q: f64,
) -> Result<EnlargedBounds> {
    let d = sys.dim();
    if x.dim() != d || xi.len() != d || delta.len() != d {
        return Err(Error::invalid("dimension mismatch in enlarged_rect_bounds"));
    }
    if delta.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::invalid("delta must be non-negative"));
    }
    let shrunk: Vec<f64> = xi.iter().zip(delta).map(|(a, b)| a - b).collect();
    if shrunk.iter().any(|v| *v < 0.0) {
        return Err(Error::invalid("xi - delta is negative in some coordinate"));
    }
    let enlarged: Vec<f64> = xi.iter().zip(delta).map(|(a, b)| a + b).collect();
    let norm = hq_norm(sys, q)?;
    let gamma = mu_centered(sys, x.coords(), xi);
    let slack = 2.0 * d as f64 * norm.value * max_norm(delta).powf(norm.s);
    let mu_enlarged = mu_centered(sys, x.coords(), &enlarged);
    let mu_shrunk = mu_centered(sys, x.coords(), &shrunk);
    let upper = gamma + slack;
    let lower = gamma - slack;
    Ok(EnlargedBounds {
        gamma,
        mu_enlarged,
        mu_shrunk,
        upper,
        lower,
        pass: mu_enlarged <= upper + 1e-12 && mu_shrunk >= lower - 1e-12,
    })
}

/// `mu(R(x, r 1)) / λ(R(x, r 1) ∩ [0,1]^d)`; tends to `h(x)` as `r -> 0`.
pub fn local_density(sys: &SystemDescriptor, x: &Point, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::invalid("local density needs r > 0"));
    }
    let radius = vec![r; x.dim()];
    let lambda = lambda_centered(x.coords(), &radius);
    Ok(mu_centered(sys, x.coords(), &radius) / lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(lo: &[f64], hi: &[f64]) -> Hyperrectangle {
        Hyperrectangle::from_bounds(lo, hi).unwrap()
    }

    #[test]
    fn mu_rect_examples() {
        let g = SystemDescriptor::gauss();
        assert!((mu_rect(&g, &rect(&[0.0], &[1.0])).unwrap().value - 1.0).abs() < 1e-15);
        let half = mu_rect(&g, &rect(&[0.0], &[0.5])).unwrap().value;
        assert!((half - 1.5f64.ln() / LN_2).abs() < 1e-15);
        assert!((half - 0.584_962_5).abs() < 1e-7);
        let b = SystemDescriptor::beta_golden();
        let left = mu_rect(&b, &rect(&[0.0], &[1.0 / GOLDEN])).unwrap().value;
        assert!((left - 0.723_607).abs() < 1e-6);
        assert!((mu_rect(&b, &rect(&[0.0], &[1.0])).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadrature_agrees_on_fixed_boxes() {
        for sys in SystemDescriptor::all() {
            let r = if sys.dim() == 1 {
                rect(&[0.1], &[0.8])
            } else {
                rect(&[0.1, 0.2], &[0.7, 0.9])
            };
            let a = mu_rect(&sys, &r).unwrap().value;
            let b = mu_rect_quadrature(&sys, &r).unwrap().value;
            assert!((a - b).abs() < 1e-10, "{sys}: {a} vs {b}");
        }
    }

    #[test]
    fn hq_examples() {
        assert_eq!(hq_norm(&SystemDescriptor::toral_diag23(), 2.0).unwrap().value, 1.0);
        let g = hq_norm(&SystemDescriptor::gauss(), 2.0).unwrap().value;
        assert!((g - (0.5f64).sqrt() / LN_2).abs() < 1e-14);
        assert!((g - 1.020_140).abs() < 1e-6);
        assert!(hq_norm(&SystemDescriptor::gauss(), 1.0).is_err());
    }

    #[test]
    fn hq_inequality_examples() {
        let g = SystemDescriptor::gauss();
        let c = check_hq_inequality(&g, 2.0, &[rect(&[0.0], &[0.01])]).unwrap();
        assert!((c.mu - 0.014_355).abs() < 1e-6);
        assert!((c.bound - 0.102_014).abs() < 1e-6);
        assert!(c.pass);
        let overlap = [rect(&[0.0], &[0.5]), rect(&[0.4], &[0.6])];
        assert!(check_hq_inequality(&g, 2.0, &overlap).is_err());
        let touching = [rect(&[0.0], &[0.5]), rect(&[0.5], &[0.6])];
        assert!(check_hq_inequality(&g, 2.0, &touching).is_ok());
    }

    #[test]
    fn enlarged_examples() {
        let t = SystemDescriptor::doubling();
        let x = Point::scalar(0.5).unwrap();
        let e = enlarged_rect_bounds(&t, &x, &[0.1], &[0.0], 2.0).unwrap();
        assert!((e.mu_enlarged - e.gamma).abs() < 1e-15 && (e.mu_shrunk - e.gamma).abs() < 1e-15);
        let e = enlarged_rect_bounds(&t, &x, &[0.1], &[0.01], 2.0).unwrap();
        assert!((e.mu_enlarged - 0.22).abs() < 1e-12);
        assert!((e.upper - 0.4).abs() < 1e-12);
        assert!(e.pass);
        assert!(enlarged_rect_bounds(&t, &x, &[0.1], &[0.2], 2.0).is_err());
    }

    #[test]
    fn local_density_examples() {
        let g = SystemDescriptor::gauss();
        let v = local_density(&g, &Point::scalar(0.5).unwrap(), 1e-4).unwrap();
        assert!((v - 1.0 / (1.5 * LN_2)).abs() < 1e-4);
        let t = SystemDescriptor::toral_diag23();
        let v = local_density(&t, &Point::new(&[0.3, 0.6]).unwrap(), 0.05).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let b = SystemDescriptor::beta_golden();
        let v = local_density(&b, &Point::scalar(0.3).unwrap(), 1e-5).unwrap();
        assert!((v - PARRY_C * GOLDEN).abs() < 1e-9);
        // near the cube boundary the ratio uses the clipped volume
        let v = local_density(&t, &Point::new(&[0.0, 1.0]).unwrap(), 0.1).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }
}
