//! Sets of uniqueness for `B^k_q` and for its nonnegative cone `(B^k_q)_+`.
//!
//! `U` is a set of uniqueness for a family of functions when the zero
//! function is the only member vanishing on all of `U`.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};

use crate::cube::{self, check_degree, enumerate_subcubes, Vertex};
use crate::error::{Error, Result};
use crate::exact::{kernel_basis, lp_feasible, one, rank, zero, LpOutcome, LpProblem, Rational};
use crate::walsh::{self, basis_masks, subcube_indicator, walsh_sign, CoeffVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Space {
    Linear,
    Cone,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UniquenessVerdict {
    Unique,
    /// A nonzero function of degree at most `q` vanishing on `U`; for the
    /// cone test it is also nonnegative everywhere.
    NotUnique { witness: CoeffVector },
}

impl UniquenessVerdict {
    pub fn is_unique(&self) -> bool {
        matches!(self, UniquenessVerdict::Unique)
    }

    pub fn witness(&self) -> Option<&CoeffVector> {
        match self {
            UniquenessVerdict::Unique => None,
            UniquenessVerdict::NotUnique { witness } => Some(witness),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub k: u32,
    pub q: u32,
    pub points: Vec<Vertex>,
    pub space: Space,
}

impl Problem {
    pub fn solve(&self) -> Result<UniquenessVerdict> {
        match self.space {
            Space::Linear => is_unique_linear(self.k, self.q, &self.points),
            Space::Cone => is_unique_cone(self.k, self.q, &self.points),
        }
    }
}

/// Deduplicated point bitmasks, after checking dimensions.
fn support(k: u32, q: u32, points: &[Vertex]) -> Result<BTreeSet<u32>> {
    cube::check_dim(k, cube::DEFAULT_MAX_DIM)?;
    check_degree(k, q)?;
    points
        .iter()
        .map(|p| {
            if p.dim() == k {
                Ok(p.bits())
            } else {
                Err(Error::DimensionMismatch { left: k, right: p.dim() })
            }
        })
        .collect()
}

fn basis_row(masks: &[u32], bits: u32) -> Vec<Rational> {
    masks
        .iter()
        .map(|&m| if walsh_sign(m, bits) > 0 { one() } else { -one() })
        .collect()
}

pub fn is_unique_linear(k: u32, q: u32, points: &[Vertex]) -> Result<UniquenessVerdict> {
    let pts = support(k, q, points)?;
    let masks = basis_masks(k, q);
    if pts.is_empty() {
        return Ok(UniquenessVerdict::NotUnique { witness: CoeffVector::constant(k, q, one())? });
    }
    let m: Vec<Vec<Rational>> = pts.iter().map(|&b| basis_row(&masks, b)).collect();
    if rank(&m)? == masks.len() {
        return Ok(UniquenessVerdict::Unique);
    }
    let v = kernel_basis(&m)?.into_iter().next().expect("rank deficiency leaves a kernel");
    Ok(UniquenessVerdict::NotUnique { witness: CoeffVector::from_basis_coords(k, q, &v)? })
}

/// First `(k-q)`-subcube, in enumeration order, that misses every point.
/// Its indicator lies in the cone and vanishes on the points.
pub fn missed_subcube(k: u32, q: u32, points: &[Vertex]) -> Result<Option<cube::Subcube>> {
    let pts = support(k, q, points)?;
    Ok(enumerate_subcubes(k, q)?
        .into_iter()
        .find(|s| !pts.iter().any(|&b| s.contains_bits(b))))
}

/// Cone test. A subcube missed by `U` gives an immediate indicator witness;
/// otherwise the exact LP decides.
pub fn is_unique_cone(k: u32, q: u32, points: &[Vertex]) -> Result<UniquenessVerdict> {
    if let Some(s) = missed_subcube(k, q, points)? {
        return Ok(UniquenessVerdict::NotUnique { witness: subcube_indicator(s) });
    }
    is_unique_cone_lp(k, q, points)
}

/// Cone test by LP alone: variables are the Walsh coefficients of degree
/// `<= q`, with `f(x) >= 0` off `U`, `f(u) = 0` on `U`, and `f_∅ = 1`.
pub fn is_unique_cone_lp(k: u32, q: u32, points: &[Vertex]) -> Result<UniquenessVerdict> {
    let problem = cone_lp(k, q, points)?;
    match lp_feasible(&problem)? {
        LpOutcome::Infeasible => Ok(UniquenessVerdict::Unique),
        LpOutcome::Feasible(x) => Ok(UniquenessVerdict::NotUnique {
            witness: CoeffVector::from_basis_coords(k, q, &x)?,
        }),
    }
}

/// The cone LP for `U` in canonical basis column order.
pub fn cone_lp(k: u32, q: u32, points: &[Vertex]) -> Result<LpProblem> {
    let pts = support(k, q, points)?;
    let masks = basis_masks(k, q);
    let n = masks.len();
    let mut p = LpProblem::new(n);
    let mut norm = vec![zero(); n];
    norm[0] = one();
    p.add_eq(norm, one())?;
    for bits in 0..=cube::full_mask(k) {
        let row = basis_row(&masks, bits);
        if pts.contains(&bits) {
            p.add_eq(row, zero())?;
        } else {
            p.add_ge(row, zero())?;
        }
    }
    Ok(p)
}

pub fn is_minimal_cone(k: u32, q: u32, points: &[Vertex]) -> Result<bool> {
    let pts: Vec<Vertex> = support(k, q, points)?
        .into_iter()
        .map(|b| Vertex::from_raw(k, b))
        .collect();
    if !is_unique_cone(k, q, &pts)?.is_unique() {
        return Ok(false);
    }
    for i in 0..pts.len() {
        let mut rest = pts.clone();
        rest.remove(i);
        if is_unique_cone(k, q, &rest)?.is_unique() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The MLE for `e(B^k_q)` exists iff the support of the sample is a set of
/// uniqueness for the cone; multiplicities are irrelevant.
pub fn mle_exists(k: u32, q: u32, sample: &[Vertex]) -> Result<bool> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(is_unique_cone(k, q, sample)?.is_unique())
}

/// Checks a witness: nonzero, zero on `U`, and for the cone also `>= 0` on
/// the whole cube with a strictly positive value somewhere.
pub fn validate_witness(points: &[Vertex], witness: &CoeffVector, space: Space) -> Result<bool> {
    for p in points {
        if walsh::eval_function(witness, *p)? != zero() {
            return Ok(false);
        }
    }
    if witness.is_zero() {
        return Ok(false);
    }
    if space == Space::Cone {
        let vals = witness.values();
        if vals.iter().any(Signed::is_negative) || vals.iter().all(Zero::is_zero) {
            return Ok(false);
        }
    }
    Ok(true)
}
