//! Boundary thickness of branches and cylinders (`lambda((∂E)_eps)`), and
//! the concentration count of the partition near its accumulation set.

use serde::{Deserialize, Serialize};

use super::cylinders::cylinders;
use crate::error::{Error, Result};
use crate::geometry::Hyperrectangle;
use crate::systems::SystemDescriptor;

/// Grid spacing used by the checkers, as a fraction of `eps`.
const CHECK_SPACING: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMeasure {
    pub value: f64,
    pub eps: f64,
    pub spacing: f64,
    pub cells: u64,
    /// Bound on the relative counting error, `2 spacing / eps`.
    pub relative_error_bound: f64,
}

/// Lebesgue measure of the max-norm `eps`-neighbourhood of `∂E` inside
/// `[0,1]^d`, by counting grid cells whose centres lie within `eps` of the
/// boundary. For a box the count factorizes over rows, so only rows are scanned.
pub fn boundary_neighborhood_measure(set: &Hyperrectangle, eps: f64, spacing: f64) -> Result<BoundaryMeasure> {
    if !(eps > 0.0) {
        return Err(Error::invalid("eps must be positive"));
    }
    if !(spacing > 0.0) || spacing > eps / 10.0 {
        return Err(Error::invalid(format!(
            "grid spacing {spacing} is too coarse for eps = {eps}; it must be at most eps/10"
        )));
    }
    let cells_per_axis = (1.0 / spacing).ceil();
    if cells_per_axis > 1e9 {
        return Err(Error::invalid("grid spacing too fine"));
    }
    let k = cells_per_axis as u64;
    let s = 1.0 / cells_per_axis;
    let (lo, hi) = (set.lo(), set.hi());
    let center = |i: u64| (i as f64 + 0.5) * s;
    // cells near either end along axis 0, and cells within eps of [lo0, hi0]
    let near_end = |x: f64| (x - lo[0]).abs() <= eps || (x - hi[0]).abs() <= eps;
    let near_span = |x: f64| lo[0] - x <= eps && x - hi[0] <= eps;
    let ends = count_where(
        &[(lo[0] - eps, lo[0] + eps), (hi[0] - eps, hi[0] + eps)],
        s,
        k,
        near_end,
    );
    let count = match set.dim() {
        1 => ends,
        2 => {
            // a row within eps of a horizontal face counts every cell within
            // eps of [lo0, hi0]; a row strictly between the faces counts the
            // cells near the vertical faces, the same number on every row
            let span = count_where(&[(lo[0] - eps, hi[0] + eps)], s, k, near_span);
            let first = (((lo[1] - eps) / s).floor() - 1.0).max(0.0) as u64;
            let last = ((((hi[1] + eps) / s).ceil() + 1.0).max(0.0) as u64).min(k);
            let mut c = 0u64;
            for j in first..last {
                let y = center(j);
                if (y - lo[1]).abs() <= eps || (y - hi[1]).abs() <= eps {
                    c += span;
                } else if lo[1] < y && y < hi[1] {
                    c += ends;
                }
            }
            c
        }
        d => {
            return Err(Error::invalid(format!(
                "boundary measures are implemented for d <= 2, got d = {d}"
            )))
        }
    };
    Ok(BoundaryMeasure {
        value: count as f64 * s.powi(set.dim() as i32),
        eps,
        spacing: s,
        cells: count,
        relative_error_bound: 2.0 * s / eps,
    })
}

/// Cells whose centre satisfies `pred`, where `pred` holds exactly on the
/// union of the given intervals. Interval ends located by division are
/// corrected with `pred` itself so ties resolve the same way as a direct scan.
fn count_where<P: Fn(f64) -> bool>(intervals: &[(f64, f64)], s: f64, k: u64, pred: P) -> u64 {
    let mut v = intervals.to_vec();
    v.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (a, b) in v {
        match merged.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    let c = |i: u64| (i as f64 + 0.5) * s;
    let clamp = |x: f64| (x.max(0.0) as u64).min(k - 1);
    let mut total = 0;
    let mut covered_to = 0u64;
    for (a, b) in merged {
        let mut first = clamp((a / s - 0.5).ceil()).max(covered_to);
        let mut last = clamp((b / s - 0.5).floor());
        while first > covered_to && pred(c(first - 1)) {
            first -= 1;
        }
        while first <= last && !pred(c(first)) {
            first += 1;
        }
        while last + 1 < k && pred(c(last + 1)) {
            last += 1;
        }
        while last >= first && !pred(c(last)) {
            if last == 0 {
                break;
            }
            last -= 1;
        }
        if first <= last && pred(c(first)) {
            total += last - first + 1;
            covered_to = last + 1;
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRegularityReport {
    pub system: String,
    pub alpha: f64,
    pub eps: Vec<f64>,
    /// Largest `lambda((∂U_i)_eps)` over the sampled branches, per `eps`.
    pub measures: Vec<f64>,
    /// `measures / eps^alpha`.
    pub ratios: Vec<f64>,
    pub branches_checked: usize,
    pub fitted_alpha: Option<f64>,
    pub k1_hat: f64,
    pub bound: f64,
    pub pass: bool,
}

/// `sup_i sup_eps lambda((∂U_i)_eps) / eps` over the sampled branches,
/// checked against 4.2 for intervals and 10 for the planar boxes.
pub fn condition_iv_check(
    sys: &SystemDescriptor,
    eps_grid: &[f64],
    branch_cap: u64,
) -> Result<BoundaryRegularityReport> {
    if eps_grid.is_empty() {
        return Err(Error::invalid("empty eps grid"));
    }
    let alpha = 1.0;
    let branches: Vec<Hyperrectangle> = match sys.partition_len() {
        Some(_) => sys.partition().map(|b| b.bounds).collect(),
        None => sys.partition().take(branch_cap as usize).map(|b| b.bounds).collect(),
    };
    let mut measures = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let mut worst: f64 = 0.0;
        for b in &branches {
            worst = worst.max(boundary_neighborhood_measure(b, eps, eps * CHECK_SPACING)?.value);
        }
        measures.push(worst);
    }
    let ratios: Vec<f64> = measures.iter().zip(eps_grid).map(|(m, e)| m / e.powf(alpha)).collect();
    let k1_hat = ratios.iter().copied().fold(0.0, f64::max);
    let bound = if sys.dim() == 1 { 4.2 } else { 10.0 };
    Ok(BoundaryRegularityReport {
        system: sys.name().to_string(),
        alpha,
        eps: eps_grid.to_vec(),
        fitted_alpha: log_log_slope(eps_grid, &measures),
        measures,
        ratios,
        branches_checked: branches.len(),
        k1_hat,
        bound,
        pass: k1_hat <= bound,
    })
}

fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionVRow {
    pub r: f64,
    /// Branches not contained in the `r`-neighbourhood of the concentration set.
    pub count: u64,
    /// `lambda` of that neighbourhood inside the cube.
    pub measure: f64,
    pub count_bound: f64,
    pub measure_bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionVReport {
    pub system: String,
    pub beta1: f64,
    pub beta2: f64,
    pub k2: f64,
    pub rows: Vec<ConditionVRow>,
    pub pass: bool,
}

/// Counts branches sticking out of `∪_{a ∈ A} B(a, r)` and the measure of
/// that union, against `K2 r^-beta1` and `K2 r^beta2`.
pub fn condition_v_check(sys: &SystemDescriptor, r_grid: &[f64]) -> Result<ConditionVReport> {
    let centers = sys.concentration_set();
    let (beta1, beta2, k2) = match sys.partition_len() {
        None => (1.0, 1.0, 2.0),
        Some(n) => (1.0, 1.0, (n as f64).max(2.0)),
    };
    let mut rows = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::invalid(format!("r must lie in (0, 1), got {r}")));
        }
        let balls: Vec<Hyperrectangle> = centers
            .iter()
            .map(|c| Hyperrectangle::from_center_clipped(c, &vec![r; sys.dim()]))
            .collect::<Result<_>>()?;
        let covered = |b: &Hyperrectangle| balls.iter().any(|ball| b.is_subset_of(ball));
        let count = match sys.partition_len() {
            Some(_) => sys.partition().filter(|b| !covered(&b.bounds)).count() as u64,
            // branches shrink towards the concentration point, so the
            // first covered branch ends the count
            None => sys.partition().take_while(|b| !covered(&b.bounds)).count() as u64,
        };
        let measure: f64 = balls.iter().map(Hyperrectangle::volume).sum::<f64>().min(1.0);
        let count_bound = k2 * r.powf(-beta1);
        let measure_bound = k2 * r.powf(beta2);
        rows.push(ConditionVRow {
            r,
            count,
            measure,
            count_bound,
            measure_bound,
            pass: count as f64 <= count_bound && measure <= measure_bound,
        });
    }
    Ok(ConditionVReport {
        system: sys.name().to_string(),
        beta1,
        beta2,
        k2,
        pass: rows.iter().all(|r| r.pass),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub depth: usize,
    pub cylinders: usize,
    pub checked: usize,
    pub max_measure: f64,
    /// `K max(n, L^{-nd}) eps`.
    pub envelope: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub system: String,
    pub eps: f64,
    /// Constant fitted on the depth-1 cylinders.
    pub k: f64,
    pub rows: Vec<GrowthRow>,
    pub pass: bool,
}

/// Relative slack on the envelope absorbing the grid-counting error.
const GROWTH_SLACK: f64 = 0.02;

/// `lambda((∂J_n)_eps) <= K max(n, L^{-nd}) eps` for depths `1..=max_depth`,
/// with `K` fixed at depth 1. At most `sample` evenly spaced cylinders are
/// measured per depth.
pub fn cylinder_boundary_growth(
    sys: &SystemDescriptor,
    max_depth: usize,
    eps: f64,
    cap: u64,
    sample: usize,
) -> Result<GrowthReport> {
    if max_depth == 0 || sample == 0 {
        return Err(Error::invalid("depth and sample size must be positive"));
    }
    let l = sys.expansion_lower_bound();
    let d = sys.dim() as f64;
    let scale = |n: usize| (n as f64).max(l.powf(-(n as f64) * d));
    let mut rows = Vec::with_capacity(max_depth);
    let mut k = 0.0;
    for depth in 1..=max_depth {
        let all = cylinders(sys, depth, cap)?;
        let step = all.len().div_ceil(sample).max(1);
        let mut worst: f64 = 0.0;
        let mut checked = 0;
        for c in all.iter().step_by(step) {
            worst = worst.max(boundary_neighborhood_measure(&c.bounds, eps, eps * CHECK_SPACING)?.value);
            checked += 1;
        }
        if depth == 1 {
            k = worst / (scale(1) * eps);
        }
        let envelope = k * scale(depth) * eps;
        rows.push(GrowthRow {
            depth,
            cylinders: all.len(),
            checked,
            max_measure: worst,
            envelope,
            pass: worst <= envelope * (1.0 + GROWTH_SLACK),
        });
    }
    Ok(GrowthReport {
        system: sys.name().to_string(),
        eps,
        k,
        pass: rows.iter().all(|r| r.pass),
        rows,
    })
}
