//! Cylinders `J = U_{i0} ∩ T^-1 U_{i1} ∩ ... ∩ T^-(n-1) U_{i(n-1)}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Hyperrectangle;
use crate::systems::{SystemDescriptor, SystemKind};

/// Refuse enumerations larger than this many words.
const MAX_CYLINDERS: f64 = 1e7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub depth: usize,
    pub word: Vec<u64>,
    pub bounds: Hyperrectangle,
    /// Exact endpoints `"p/q"` where available (Gauss).
    pub exact: Option<[String; 2]>,
}

impl Cylinder {
    pub fn length(&self) -> f64 {
        self.bounds.volume()
    }
}

/// All nonempty cylinders of the given depth in lexicographic word order.
/// Gauss digits are restricted to `1..=cap`; `cap` is ignored for finite
/// partitions.
pub fn cylinders(sys: &SystemDescriptor, depth: usize, cap: u64) -> Result<Vec<Cylinder>> {
    if depth == 0 {
        return Err(Error::invalid("cylinder depth must be at least 1"));
    }
    let alphabet = sys.partition_len().map_or(cap, |n| n as u64);
    if alphabet == 0 {
        return Err(Error::invalid("branch cap must be at least 1"));
    }
    if (alphabet as f64).powi(depth as i32) > MAX_CYLINDERS {
        return Err(Error::invalid(format!(
            "{alphabet}^{depth} cylinders exceed the enumeration limit of {MAX_CYLINDERS:e}"
        )));
    }
    match sys.kind() {
        SystemKind::Gauss => gauss_cylinders(depth, cap),
        _ => finite_cylinders(sys, depth),
    }
}

/// The cylinder of one word, or `None` when the word is not admissible.
pub fn cylinder_of_word(sys: &SystemDescriptor, word: &[u64]) -> Result<Option<Cylinder>> {
    if word.is_empty() {
        return Err(Error::invalid("empty word"));
    }
    match sys.kind() {
        SystemKind::Gauss => {
            if word.contains(&0) {
                return Ok(None);
            }
            gauss_cylinder(word).map(Some)
        }
        _ => {
            let mut current: Option<Hyperrectangle> = None;
            for &digit in word.iter().rev() {
                let branch = sys.branch(digit)?.bounds;
                current = match current {
                    None => Some(branch),
                    Some(c) => match pull_back(sys, digit, &branch, &c) {
                        Some(b) => Some(b),
                        None => return Ok(None),
                    },
                };
            }
            Ok(current.map(|bounds| Cylinder {
                depth: word.len(),
                word: word.to_vec(),
                bounds,
                exact: None,
            }))
        }
    }
}

/// `U_i ∩ T_i^-1(C)`, if it has positive volume.
fn pull_back(
    sys: &SystemDescriptor,
    digit: u64,
    branch: &Hyperrectangle,
    c: &Hyperrectangle,
) -> Option<Hyperrectangle> {
    let image = sys.branch_image(digit);
    let inside = c.intersect(&image)?;
    if inside.lo().iter().zip(inside.hi()).any(|(a, b)| !(a < b)) {
        return None;
    }
    // every built-in branch is increasing in each coordinate
    let lo = sys.inverse_branch(digit, inside.lo());
    let hi = sys.inverse_branch(digit, inside.hi());
    let pre = Hyperrectangle::from_bounds(&lo, &hi).ok()?;
    let out = pre.intersect(branch)?;
    out.lo().iter().zip(out.hi()).all(|(a, b)| a < b).then_some(out)
}

fn finite_cylinders(sys: &SystemDescriptor, depth: usize) -> Result<Vec<Cylinder>> {
    let branches: Vec<_> = sys.partition().collect();
    // built from the last digit backwards, so each level holds suffix cylinders
    let mut level: Vec<(Vec<u64>, Hyperrectangle)> =
        branches.iter().map(|b| (vec![b.digit], b.bounds.clone())).collect();
    for _ in 1..depth {
        let mut next = Vec::with_capacity(level.len() * branches.len());
        for b in &branches {
            for (word, c) in &level {
                if let Some(bounds) = pull_back(sys, b.digit, &b.bounds, c) {
                    let mut w = Vec::with_capacity(word.len() + 1);
                    w.push(b.digit);
                    w.extend_from_slice(word);
                    next.push((w, bounds));
                }
            }
        }
        level = next;
    }
    Ok(level
        .into_iter()
        .map(|(word, bounds)| Cylinder {
            depth,
            word,
            bounds,
            exact: None,
        })
        .collect())
}

fn gauss_cylinders(depth: usize, cap: u64) -> Result<Vec<Cylinder>> {
    let mut out = Vec::new();
    let mut word = vec![1u64; depth];
    loop {
        out.push(gauss_cylinder(&word)?);
        // odometer increment, last digit fastest
        let mut i = depth;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if word[i] < cap {
                word[i] += 1;
                break;
            }
            word[i] = 1;
        }
    }
}

/// Points with continued-fraction digits `a_1..a_n` form the interval with
/// endpoints `p_n/q_n` and `(p_n + p_{n-1})/(q_n + q_{n-1})`.
fn gauss_cylinder(word: &[u64]) -> Result<Cylinder> {
    let overflow = || Error::invalid("convergent denominators overflow 128 bits");
    let (mut p_prev, mut q_prev, mut p, mut q) = (1u128, 0u128, 0u128, 1u128);
    for &a in word {
        let a = a as u128;
        let p_next = a
            .checked_mul(p)
            .and_then(|v| v.checked_add(p_prev))
            .ok_or_else(overflow)?;
        let q_next = a
            .checked_mul(q)
            .and_then(|v| v.checked_add(q_prev))
            .ok_or_else(overflow)?;
        (p_prev, q_prev, p, q) = (p, q, p_next, q_next);
    }
    let (p2, q2) = (
        p.checked_add(p_prev).ok_or_else(overflow)?,
        q.checked_add(q_prev).ok_or_else(overflow)?,
    );
    let a = p as f64 / q as f64;
    let b = p2 as f64 / q2 as f64;
    let (lo, hi, exact) = if a <= b {
        (a, b, [format!("{p}/{q}"), format!("{p2}/{q2}")])
    } else {
        (b, a, [format!("{p2}/{q2}"), format!("{p}/{q}")])
    };
    Ok(Cylinder {
        depth: word.len(),
        word: word.to_vec(),
        bounds: Hyperrectangle::from_bounds(&[lo], &[hi])?,
        exact: Some(exact),
    })
}
