//! Unions of Hamming levels `W_D` around the all `-1` vertex.
//!
//! For such sets the cone test collapses to `q + 1` variables: averaging a
//! witness over coordinate permutations keeps it a witness, and a symmetric
//! subcube combination is determined by its class sums `T_0..T_q`. Level `j`
//! then contributes the row `(C(k-q, j-i))_i`.
//!
//! For `q = 2` the normalized rows `Q_j` project to a convex polygon
//! `P_0..P_k`; hull edges are exactly the level pairs that fail to be sets of
//! uniqueness.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::cube::{binomial, check_degree, enumerate_subcubes, level_set, LevelSpec, Vertex};
use crate::error::{Error, Result};
use crate::exact::{int, lp_feasible, one, zero, LpOutcome, LpProblem, Rational};
use crate::uniqueness::{is_unique_cone_lp, UniquenessVerdict};
use crate::walsh::{combination, level_sum_row, CoeffVector, TVector};

fn check_levels(k: u32, levels: &BTreeSet<u32>) -> Result<()> {
    match levels.iter().find(|&&d| d > k) {
        Some(&level) => Err(Error::LevelOutOfRange { k, level }),
        None => Ok(()),
    }
}

/// `W_D` is a set of uniqueness for `(B^k_2)_+` iff two of its levels are
/// at distance between 2 and `k - 1`.
pub fn characterize_level_set(k: u32, levels: &BTreeSet<u32>) -> Result<bool> {
    if k < 2 {
        return Err(Error::DimensionOutOfRange { k, max: crate::cube::DEFAULT_MAX_DIM });
    }
    check_levels(k, levels)?;
    Ok(levels
        .iter()
        .any(|&i| levels.iter().any(|&j| j > i && (2..=k - 1).contains(&(j - i)))))
}

fn row_rational(k: u32, q: u32, j: u32) -> Result<Vec<Rational>> {
    Ok(level_sum_row(k, q, j)?.into_iter().map(|c| int(c as i64)).collect())
}

/// The T-space cone LP: `row_j . T = 0` on `D`, `>= 0` elsewhere, `sum T = 1`.
pub fn level_lp(k: u32, q: u32, levels: &BTreeSet<u32>) -> Result<LpProblem> {
    check_degree(k, q)?;
    check_levels(k, levels)?;
    let n = q as usize + 1;
    let mut p = LpProblem::new(n);
    p.add_eq(vec![one(); n], one())?;
    for j in 0..=k {
        let row = row_rational(k, q, j)?;
        if levels.contains(&j) {
            p.add_eq(row, zero())?;
        } else {
            p.add_ge(row, zero())?;
        }
    }
    Ok(p)
}

/// Symmetric witness T-vector for `W_D`, or `None` when `W_D` is a set of uniqueness.
pub fn level_witness_t(k: u32, q: u32, levels: &BTreeSet<u32>) -> Result<Option<TVector>> {
    match lp_feasible(&level_lp(k, q, levels)?)? {
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Feasible(t) => Ok(Some(TVector { k, q, t })),
    }
}

/// Spreads `T_i` uniformly over the `C(k,q) C(q,i)` subcubes of class `i`.
pub fn lift_symmetric(t: &TVector) -> Result<CoeffVector> {
    let (k, q) = (t.k, t.q);
    let per_class: Vec<Rational> = (0..=q)
        .map(|i| {
            let count = binomial(k as i64, q as i64) * binomial(q as i64, i as i64);
            &t.t[i as usize] / int(count as i64)
        })
        .collect();
    let alpha: Vec<_> = enumerate_subcubes(k, q)?
        .into_iter()
        .map(|s| (s, per_class[s.class() as usize].clone()))
        .filter(|(_, a)| !a.is_zero())
        .collect();
    combination(k, q, &alpha)
}

pub fn level_cone_unique(k: u32, q: u32, levels: &BTreeSet<u32>) -> Result<UniquenessVerdict> {
    match level_witness_t(k, q, levels)? {
        None => Ok(UniquenessVerdict::Unique),
        Some(t) => Ok(UniquenessVerdict::NotUnique { witness: lift_symmetric(&t)? }),
    }
}

/// `T . Q_j`, the level-`j` sum of the lifted witness divided by the
/// (positive) total of row `j`.
pub fn psi(t: &TVector, j: u32) -> Result<Rational> {
    let row = level_sum_row(t.k, t.q, j)?;
    let total: u64 = row.iter().sum();
    let s = row.iter().zip(&t.t).fold(zero(), |a, (&r, ti)| a + int(r as i64) * ti);
    Ok(s / int(total as i64))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PolygonPoint {
    pub j: u32,
    #[serde(serialize_with = "ser_rational")]
    pub x: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub y: Rational,
}

fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

pub fn polygon_points(k: u32) -> Result<Vec<PolygonPoint>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("polygon needs k >= 2, got {k}")));
    }
    let n = k as i64 - 2;
    Ok((0..=k)
        .map(|j| {
            let j64 = j as i64;
            let (a, b, c) = (binomial(n, j64), binomial(n, j64 - 1), binomial(n, j64 - 2));
            let s = BigInt::from(a) + BigInt::from(b) + BigInt::from(c);
            PolygonPoint {
                j,
                x: Rational::new(BigInt::from(a), s.clone()),
                y: Rational::new(BigInt::from(b), s),
            }
        })
        .collect())
}

/// Twice the signed area of `(a, b, c)`; positive for a left turn.
pub fn orientation(a: &PolygonPoint, b: &PolygonPoint, c: &PolygonPoint) -> Rational {
    (&b.x - &a.x) * (&c.y - &a.y) - (&b.y - &a.y) * (&c.x - &a.x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Intersection {
    Disjoint,
    /// Interiors cross at a single point.
    Proper,
    /// Touching at an endpoint or overlapping collinearly.
    Improper,
}

fn on_segment(a: &PolygonPoint, b: &PolygonPoint, p: &PolygonPoint) -> bool {
    let within = |u: &Rational, v: &Rational, w: &Rational| (u.min(v) <= w) && (w <= u.max(v));
    within(&a.x, &b.x, &p.x) && within(&a.y, &b.y, &p.y)
}

pub fn segment_intersection(
    a1: &PolygonPoint,
    a2: &PolygonPoint,
    b1: &PolygonPoint,
    b2: &PolygonPoint,
) -> Result<Intersection> {
    let same = |p: &PolygonPoint, q: &PolygonPoint| p.x == q.x && p.y == q.y;
    if same(a1, a2) || same(b1, b2) {
        return Err(Error::DegenerateSegment);
    }
    let d1 = orientation(b1, b2, a1);
    let d2 = orientation(b1, b2, a2);
    let d3 = orientation(a1, a2, b1);
    let d4 = orientation(a1, a2, b2);
    let opposite = |u: &Rational, v: &Rational| (u.is_positive() && v.is_negative()) || (u.is_negative() && v.is_positive());
    if opposite(&d1, &d2) && opposite(&d3, &d4) {
        return Ok(Intersection::Proper);
    }
    let touches = (d1.is_zero() && on_segment(b1, b2, a1))
        || (d2.is_zero() && on_segment(b1, b2, a2))
        || (d3.is_zero() && on_segment(a1, a2, b1))
        || (d4.is_zero() && on_segment(a1, a2, b2));
    Ok(if touches { Intersection::Improper } else { Intersection::Disjoint })
}

pub fn segments_intersect(
    a1: &PolygonPoint,
    a2: &PolygonPoint,
    b1: &PolygonPoint,
    b2: &PolygonPoint,
) -> Result<bool> {
    Ok(segment_intersection(a1, a2, b1, b2)? != Intersection::Disjoint)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PolygonReport {
    pub k: u32,
    pub symmetry: bool,
    pub slopes: bool,
    pub unimodal: bool,
    pub convex_position: bool,
    pub diagnostics: Vec<String>,
}

impl PolygonReport {
    pub fn all_hold(&self) -> bool {
        self.symmetry && self.slopes && self.unimodal && self.convex_position
    }
}

pub fn verify_polygon_properties(k: u32) -> Result<PolygonReport> {
    if k < 3 {
        return Err(Error::InvalidArgument(format!("polygon checks need k >= 3, got {k}")));
    }
    let pts = polygon_points(k)?;
    let ku = k as usize;
    let mut diagnostics = Vec::new();

    let symmetry = (0..=ku).all(|j| pts[j].y == pts[ku - j].y);
    if !symmetry {
        diagnostics.push("y-coordinates are not symmetric".into());
    }

    let mut slopes = true;
    let mut prev: Option<Rational> = None;
    for j in 1..=ku - 2 {
        let p = &pts[j];
        let slope = &p.y / &p.x;
        let want = Rational::new(BigInt::from(j), BigInt::from(ku - j - 1));
        if slope != want {
            diagnostics.push(format!("slope(P_{j}) = {slope}, expected {want}"));
            slopes = false;
        }
        if prev.as_ref().is_some_and(|s| *s >= slope) {
            diagnostics.push(format!("slope not increasing at j={j}"));
            slopes = false;
        }
        prev = Some(slope);
    }

    let half_lo = ku / 2;
    let half_hi = ku.div_ceil(2);
    let unimodal = (0..half_lo).all(|j| pts[j].y < pts[j + 1].y) && (half_hi..ku).all(|j| pts[j].y > pts[j + 1].y);
    if !unimodal {
        diagnostics.push("y-coordinates are not unimodal".into());
    }

    // every other point strictly left of each edge of the closed chain
    let n = pts.len();
    let mut convex_position = true;
    'edges: for i in 0..n {
        let (a, b) = (&pts[i], &pts[(i + 1) % n]);
        for (m, c) in pts.iter().enumerate() {
            if m == i || m == (i + 1) % n {
                continue;
            }
            let o = orientation(a, b, c);
            if !o.is_positive() {
                diagnostics.push(format!(
                    "P_{m} is {} edge (P_{}, P_{})",
                    if o.is_zero() { "collinear with" } else { "outside" },
                    a.j,
                    b.j
                ));
                convex_position = false;
                break 'edges;
            }
        }
    }

    Ok(PolygonReport { k, symmetry, slopes, unimodal, convex_position, diagnostics })
}

/// Exact CSV with header `j,x_num,x_den,y_num,y_den`.
pub fn polygon_csv(points: &[PolygonPoint]) -> String {
    let mut out = String::from("j,x_num,x_den,y_num,y_den\n");
    for p in points {
        let _ = writeln!(out, "{},{},{},{},{}", p.j, p.x.numer(), p.x.denom(), p.y.numer(), p.y.denom());
    }
    out
}

/// JSON with exact strings and decimal approximations.
pub fn polygon_json(points: &[PolygonPoint]) -> serde_json::Value {
    let rows: Vec<_> = points
        .iter()
        .map(|p| {
            serde_json::json!({
                "j": p.j,
                "x": p.x.to_string(),
                "y": p.y.to_string(),
                "x_approx": p.x.to_f64().unwrap_or(f64::NAN),
                "y_approx": p.y.to_f64().unwrap_or(f64::NAN),
            })
        })
        .collect();
    serde_json::Value::Array(rows)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelVerdictRow {
    pub levels: Vec<u32>,
    pub predicate: bool,
    pub t_space: bool,
    pub full_lp: bool,
}

impl LevelVerdictRow {
    pub fn consistent(&self) -> bool {
        self.predicate == self.t_space && self.t_space == self.full_lp
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelVerdictReport {
    pub k: u32,
    pub q: u32,
    pub rows: Vec<LevelVerdictRow>,
}

impl LevelVerdictReport {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.consistent()).count()
    }
}

fn levels_of(mask: u64, k: u32) -> BTreeSet<u32> {
    (0..=k).filter(|d| mask >> d & 1 == 1).collect()
}

/// Compares the closed-form predicate, the T-space LP and the full LP on
/// every `D ⊆ {0..k}` (including `D = ∅`, where all three say "not unique").
pub fn verify_level_theorem(k: u32) -> Result<LevelVerdictReport> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("level theorem needs k >= 2, got {k}")));
    }
    let rows = (0u64..1 << (k + 1))
        .into_par_iter()
        .map(|mask| {
            let d = levels_of(mask, k);
            let points: Vec<Vertex> = if d.is_empty() {
                Vec::new()
            } else {
                level_set(&LevelSpec::new(k, d.iter().copied())?)?
            };
            Ok(LevelVerdictRow {
                levels: d.iter().copied().collect(),
                predicate: characterize_level_set(k, &d)?,
                t_space: level_cone_unique(k, 2, &d)?.is_unique(),
                full_lp: is_unique_cone_lp(k, 2, &points)?.is_unique(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LevelVerdictReport { k, q: 2, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Construction {
    /// Every level: the whole cube.
    Full,
    /// Even levels.
    Alternating,
    /// Levels 0 and k.
    Antipodal,
    /// Levels 1 and k.
    W1k,
    /// Levels 1 and k - 1.
    W1k1,
    /// Levels `0..=q/2` and `k-q/2..=k`.
    Blofeld,
}

impl std::str::FromStr for Construction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "full" => Self::Full,
            "alternating" => Self::Alternating,
            "antipodal" => Self::Antipodal,
            "w1k" => Self::W1k,
            "w1k1" => Self::W1k1,
            "blofeld" => Self::Blofeld,
            other => return Err(Error::UnknownConstruction(other.to_string())),
        })
    }
}

impl Construction {
    pub fn name(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::Alternating => "alternating",
            Self::Antipodal => "antipodal",
            Self::W1k => "w1k",
            Self::W1k1 => "w1k1",
            Self::Blofeld => "blofeld",
        }
    }

    pub fn levels(self, k: u32, q: u32) -> Result<BTreeSet<u32>> {
        check_degree(k, q)?;
        let bad = || Error::IncompatibleConstruction { name: self.name().into(), k, q };
        Ok(match self {
            Self::Full => (0..=k).collect(),
            Self::Alternating => (0..=k).step_by(2).collect(),
            Self::Antipodal => [0, k].into(),
            Self::W1k => {
                if k < 2 {
                    return Err(bad());
                }
                [1, k].into()
            }
            Self::W1k1 => {
                if k < 3 {
                    return Err(bad());
                }
                [1, k - 1].into()
            }
            Self::Blofeld => {
                let h = q / 2;
                (0..=h).chain(k - h..=k).collect()
            }
        })
    }

    /// Size claimed for the construction: `2^k`, `2^(k-1)`, `2`, `k+1`, `2k`,
    /// or `2 sum_{i <= q/2} C(k, i)`. The blofeld count assumes the two level
    /// blocks are disjoint (`2 * (q/2) < k`).
    pub fn documented_size(self, k: u32, q: u32) -> u64 {
        match self {
            Self::Full => 1 << k,
            Self::Alternating => 1 << (k - 1),
            Self::Antipodal => 2,
            Self::W1k => k as u64 + 1,
            Self::W1k1 => 2 * k as u64,
            Self::Blofeld => 2 * (0..=q / 2).map(|i| binomial(k as i64, i as i64)).sum::<u64>(),
        }
    }
}

pub fn known_construction(k: u32, q: u32, name: &str) -> Result<Vec<Vertex>> {
    let c: Construction = name.parse()?;
    let levels = c.levels(k, q)?;
    level_set(&LevelSpec::new(k, levels)?)
}
