//! Points and axis-parallel boxes in the unit cube under the max norm.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Coordinate storage. Every built-in system has d <= 2, so points never
/// touch the heap on the hot path.
pub type Coords = SmallVec<[f64; 4]>;

/// A location in `[0,1]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point {
    coords: Coords,
}

impl Point {
    /// Builds a point, rejecting empty or out-of-cube coordinates.
    pub fn new(coords: &[f64]) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("point must have at least one coordinate"));
        }
        if let Some(c) = coords.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::invalid(format!("coordinate {c} outside [0,1]")));
        }
        Ok(Self {
            coords: Coords::from_slice(coords),
        })
    }

    /// Builds a point without the cube check. Callers guarantee the
    /// coordinates come from a map of the unit cube into itself.
    #[inline]
    pub(crate) fn from_coords(coords: Coords) -> Self {
        Self { coords }
    }

    pub fn scalar(x: f64) -> Result<Self> {
        Self::new(&[x])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.coords[i]
    }

    /// Max-norm distance.
    pub fn dist(&self, other: &Point) -> f64 {
        max_norm_diff(&self.coords, &other.coords)
    }
}

#[inline]
pub(crate) fn max_norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Max norm of a vector.
pub fn max_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Closed box `prod [lo_i, hi_i]`, stored by bounds so that clipped and
/// un-clipped rectangles share one representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperrectangle {
    lo: Coords,
    hi: Coords,
}

impl Hyperrectangle {
    /// `R(x, r) = prod [x_i - r_i, x_i + r_i]`, not clipped.
    pub fn from_center(x: &Point, r: &[f64]) -> Result<Self> {
        Self::from_center_coords(x.coords(), r)
    }

    pub(crate) fn from_center_coords(x: &[f64], r: &[f64]) -> Result<Self> {
        if x.len() != r.len() {
            return Err(Error::invalid(format!(
                "radius has dimension {} but center has dimension {}",
                r.len(),
                x.len()
            )));
        }
        if let Some(ri) = r.iter().find(|ri| !(**ri >= 0.0)) {
            return Err(Error::invalid(format!("negative radius {ri}")));
        }
        Ok(Self {
            lo: x.iter().zip(r).map(|(c, w)| c - w).collect(),
            hi: x.iter().zip(r).map(|(c, w)| c + w).collect(),
        })
    }

    /// Same as [`from_center`](Self::from_center) intersected with `[0,1]^d`.
    pub fn from_center_clipped(x: &Point, r: &[f64]) -> Result<Self> {
        Ok(Self::from_center(x, r)?.clipped())
    }

    /// Box from explicit bounds; requires `lo_i <= hi_i`.
    pub fn from_bounds(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::invalid("bounds must be non-empty and of equal dimension"));
        }
        if lo.iter().zip(hi).any(|(a, b)| !(a <= b)) {
            return Err(Error::invalid("lower bound exceeds upper bound"));
        }
        Ok(Self {
            lo: Coords::from_slice(lo),
            hi: Coords::from_slice(hi),
        })
    }

    pub fn unit(d: usize) -> Self {
        Self {
            lo: Coords::from_elem(0.0, d),
            hi: Coords::from_elem(1.0, d),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn center(&self) -> Coords {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn half_widths(&self) -> Coords {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (b - a)).collect()
    }

    /// Intersection with the unit cube. An axis that misses `[0,1]`
    /// entirely collapses to a degenerate (zero-width) interval on the
    /// nearest face.
    pub fn clipped(&self) -> Self {
        let mut lo = Coords::with_capacity(self.dim());
        let mut hi = Coords::with_capacity(self.dim());
        for (a, b) in self.lo.iter().zip(&self.hi) {
            let a = a.clamp(0.0, 1.0);
            let b = b.clamp(0.0, 1.0);
            lo.push(a);
            hi.push(b.max(a));
        }
        Self { lo, hi }
    }

    /// Closed-box membership: `lo_i <= y_i <= hi_i` on every axis.
    pub fn contains(&self, y: &Point) -> Result<bool> {
        if y.dim() != self.dim() {
            return Err(Error::invalid(format!(
                "point dimension {} does not match rectangle dimension {}",
                y.dim(),
                self.dim()
            )));
        }
        Ok(self.contains_coords(y.coords()))
    }

    #[inline]
    pub(crate) fn contains_coords(&self, y: &[f64]) -> bool {
        y.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    /// Lebesgue volume of the box as stored (no clipping applied).
    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a).max(0.0)).product()
    }

    pub fn intersect(&self, other: &Self) -> Option<Self> {
        let mut lo = Coords::new();
        let mut hi = Coords::new();
        for i in 0..self.dim() {
            let a = self.lo[i].max(other.lo[i]);
            let b = self.hi[i].min(other.hi[i]);
            if a > b {
                return None;
            }
            lo.push(a);
            hi.push(b);
        }
        Some(Self { lo, hi })
    }

    /// Max-norm distance from `y` to the box (zero inside).
    pub fn distance_to(&self, y: &[f64]) -> f64 {
        y.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (a, b))| (a - v).max(v - b).max(0.0))
            .fold(0.0, f64::max)
    }

    /// Max-norm distance from `y` to the topological boundary of the box.
    pub fn distance_to_boundary(&self, y: &[f64]) -> f64 {
        let outside = self.distance_to(y);
        if outside > 0.0 {
            return outside;
        }
        y.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (a, b))| (v - a).min(b - v))
            .fold(f64::INFINITY, f64::min)
    }

    /// Splits the box along `axis` at `at` (clamped into the box).
    pub fn split(&self, axis: usize, at: f64) -> (Self, Self) {
        let at = at.clamp(self.lo[axis], self.hi[axis]);
        let mut left = self.clone();
        let mut right = self.clone();
        left.hi[axis] = at;
        right.lo[axis] = at;
        (left, right)
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        (0..self.dim()).all(|i| other.lo[i] <= self.lo[i] && self.hi[i] <= other.hi[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> Point {
        Point::new(c).unwrap()
    }

    #[test]
    fn rect_from_center_examples() {
        let r = Hyperrectangle::from_center(&p(&[0.5]), &[0.1]).unwrap();
        assert!((r.lo()[0] - 0.4).abs() < 1e-15 && (r.hi()[0] - 0.6).abs() < 1e-15);

        let r = Hyperrectangle::from_center_clipped(&p(&[0.0]), &[0.2]).unwrap();
        assert_eq!((r.lo()[0], r.hi()[0]), (0.0, 0.2));

        let r = Hyperrectangle::from_center(&p(&[0.5, 0.5]), &[0.0, 0.0]).unwrap();
        assert_eq!(r.volume(), 0.0);
        assert!(r.contains(&p(&[0.5, 0.5])).unwrap());
    }

    #[test]
    fn negative_radius_rejected() {
        assert!(matches!(
            Hyperrectangle::from_center(&p(&[0.5]), &[-0.1]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(Hyperrectangle::from_center(&p(&[0.5]), &[f64::NAN]).is_err());
    }

    #[test]
    fn contains_is_closed() {
        let r = Hyperrectangle::from_bounds(&[0.4], &[0.6]).unwrap();
        assert!(r.contains(&p(&[0.6])).unwrap());
        assert!(!r.contains(&p(&[0.61])).unwrap());
        let r2 = Hyperrectangle::from_bounds(&[0.4, 0.4], &[0.6, 0.6]).unwrap();
        assert!(!r2.contains(&p(&[0.5, 0.7])).unwrap());
        assert!(r2.contains(&p(&[0.5])).is_err());
    }

    #[test]
    fn point_validation() {
        assert!(Point::new(&[]).is_err());
        assert!(Point::new(&[1.2]).is_err());
        assert!(Point::new(&[0.0, 1.0]).is_ok());
    }

    #[test]
    fn boundary_distance() {
        let r = Hyperrectangle::from_bounds(&[0.25, 0.25], &[0.75, 0.75]).unwrap();
        assert!((r.distance_to_boundary(&[0.5, 0.3]) - 0.05).abs() < 1e-15);
        assert!((r.distance_to_boundary(&[0.8, 0.5]) - 0.05).abs() < 1e-15);
        assert_eq!(r.distance_to(&[0.5, 0.5]), 0.0);
    }
}
