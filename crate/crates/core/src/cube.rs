//! The discrete cube `{-1,+1}^k`: vertices, Hamming levels, subcubes, and the
//! signed-permutation symmetry group.
//!
//! A vertex is a `k`-bit mask where bit `i` is set iff coordinate `i + 1`
//! equals `+1`. Text form lists coordinates left to right, so `"+--"` is the
//! vertex with only coordinate 1 positive (bits `0b001`).

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Default enumeration cap on `k`; `2^k` vertices must fit in memory.
pub const DEFAULT_MAX_DIM: u32 = 24;

/// Largest `k` a [`Vertex`] can encode.
pub const HARD_MAX_DIM: u32 = 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex {
    bits: u32,
    k: u32,
}

impl Vertex {
    pub fn new(k: u32, bits: u32) -> Result<Self> {
        check_dim(k, HARD_MAX_DIM)?;
        if k < 32 && bits >> k != 0 {
            return Err(Error::InvalidArgument(format!(
                "bits {bits:#b} do not fit in k={k}"
            )));
        }
        Ok(Self { bits, k })
    }

    pub(crate) fn from_raw(k: u32, bits: u32) -> Self {
        debug_assert!(bits >> k == 0);
        Self { bits, k }
    }

    /// The all `-1` vertex.
    pub fn bottom(k: u32) -> Result<Self> {
        Self::new(k, 0)
    }

    /// The all `+1` vertex.
    pub fn top(k: u32) -> Result<Self> {
        check_dim(k, HARD_MAX_DIM)?;
        Ok(Self { bits: full_mask(k), k })
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    pub fn dim(self) -> u32 {
        self.k
    }

    /// Number of `+1` coordinates.
    pub fn level(self) -> u32 {
        self.bits.count_ones()
    }

    /// Coordinate `i` (0-based) as `-1` or `+1`.
    pub fn coord(self, i: u32) -> i8 {
        if self.bits >> i & 1 == 1 {
            1
        } else {
            -1
        }
    }

    pub fn antipode(self) -> Self {
        Self { bits: !self.bits & full_mask(self.k), k: self.k }
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.k {
            f.write_str(if self.bits >> i & 1 == 1 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl FromStr for Vertex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let k = s.len() as u32;
        if k == 0 || k > HARD_MAX_DIM {
            return Err(Error::BadVertex(s.to_string()));
        }
        let mut bits = 0u32;
        for (i, c) in s.chars().enumerate() {
            match c {
                '+' => bits |= 1 << i,
                '-' => {}
                _ => return Err(Error::BadVertex(s.to_string())),
            }
        }
        Ok(Self { bits, k })
    }
}

impl serde::Serialize for Vertex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Vertex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub(crate) fn full_mask(k: u32) -> u32 {
    if k >= 32 {
        u32::MAX
    } else {
        (1u32 << k) - 1
    }
}

pub(crate) fn check_dim(k: u32, max: u32) -> Result<()> {
    if k == 0 || k > max {
        Err(Error::DimensionOutOfRange { k, max })
    } else {
        Ok(())
    }
}

pub(crate) fn check_degree(k: u32, q: u32) -> Result<()> {
    if q > k {
        Err(Error::DegreeOutOfRange { k, q })
    } else {
        Ok(())
    }
}

fn same_dim(a: u32, b: u32) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { left: a, right: b })
    }
}

/// Binomial coefficient with `C(n, r) = 0` whenever `r < 0` or `r > n`.
pub fn binomial(n: i64, r: i64) -> u64 {
    if n < 0 || r < 0 || r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    u64::try_from(acc).expect("binomial coefficient overflows u64")
}

pub fn enumerate_vertices(k: u32) -> Result<Vec<Vertex>> {
    enumerate_vertices_capped(k, DEFAULT_MAX_DIM)
}

/// All `2^k` vertices in ascending bit order, with an explicit dimension cap.
pub fn enumerate_vertices_capped(k: u32, cap: u32) -> Result<Vec<Vertex>> {
    check_dim(k, cap.min(HARD_MAX_DIM))?;
    Ok((0..=full_mask(k)).map(|bits| Vertex { bits, k }).collect())
}

pub fn hamming(x: Vertex, y: Vertex) -> Result<u32> {
    same_dim(x.k, y.k)?;
    Ok((x.bits ^ y.bits).count_ones())
}

/// A union of Hamming spheres `W_D(base) = { y : dist(base, y) in D }`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelSpec {
    pub k: u32,
    pub levels: BTreeSet<u32>,
    pub base: Vertex,
}

impl LevelSpec {
    /// Levels around the all `-1` vertex.
    pub fn new(k: u32, levels: impl IntoIterator<Item = u32>) -> Result<Self> {
        Self::with_base(Vertex::bottom(k)?, levels)
    }

    pub fn with_base(base: Vertex, levels: impl IntoIterator<Item = u32>) -> Result<Self> {
        let k = base.k;
        let levels: BTreeSet<u32> = levels.into_iter().collect();
        if levels.is_empty() {
            return Err(Error::EmptyLevels);
        }
        if let Some(&level) = levels.iter().find(|&&d| d > k) {
            return Err(Error::LevelOutOfRange { k, level });
        }
        Ok(Self { k, levels, base })
    }

    /// Bitmask over `0..=k` with bit `d` set for every level in the spec.
    pub fn level_mask(&self) -> u64 {
        self.levels.iter().fold(0, |m, &d| m | 1 << d)
    }
}

pub fn level_set(spec: &LevelSpec) -> Result<Vec<Vertex>> {
    let all = enumerate_vertices(spec.k)?;
    Ok(all
        .into_iter()
        .filter(|y| spec.levels.contains(&(y.bits ^ spec.base.bits).count_ones()))
        .collect())
}

/// A `(k-q)`-subcube: `q` coordinates are fixed, the rest are free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subcube {
    fixed_mask: u32,
    sign_mask: u32,
    k: u32,
}

impl Subcube {
    pub fn new(k: u32, fixed_mask: u32, sign_mask: u32) -> Result<Self> {
        check_dim(k, HARD_MAX_DIM)?;
        if fixed_mask & !full_mask(k) != 0 || sign_mask & !fixed_mask != 0 {
            return Err(Error::InvalidArgument(format!(
                "invalid subcube masks fixed={fixed_mask:#b} sign={sign_mask:#b} for k={k}"
            )));
        }
        Ok(Self { fixed_mask, sign_mask, k })
    }

    pub fn fixed_mask(self) -> u32 {
        self.fixed_mask
    }

    pub fn sign_mask(self) -> u32 {
        self.sign_mask
    }

    pub fn dim(self) -> u32 {
        self.k
    }

    /// Number of fixed coordinates.
    pub fn q(self) -> u32 {
        self.fixed_mask.count_ones()
    }

    pub fn class(self) -> u32 {
        self.sign_mask.count_ones()
    }

    pub fn len(self) -> u64 {
        1u64 << (self.k - self.q())
    }

    pub fn contains(self, x: Vertex) -> Result<bool> {
        same_dim(self.k, x.k)?;
        Ok(self.contains_bits(x.bits))
    }

    #[inline]
    pub(crate) fn contains_bits(self, bits: u32) -> bool {
        bits & self.fixed_mask == self.sign_mask
    }

    pub fn points(self) -> impl Iterator<Item = Vertex> {
        let free = !self.fixed_mask & full_mask(self.k);
        let k = self.k;
        let sign = self.sign_mask;
        SubmaskIter::new(free).map(move |m| Vertex { bits: sign | m, k })
    }
}

impl fmt::Display for Subcube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.k {
            let c = if self.fixed_mask >> i & 1 == 0 {
                "*"
            } else if self.sign_mask >> i & 1 == 1 {
                "+"
            } else {
                "-"
            };
            f.write_str(c)?;
        }
        Ok(())
    }
}

impl FromStr for Subcube {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let k = s.len() as u32;
        if k == 0 || k > HARD_MAX_DIM {
            return Err(Error::BadSubcube(s.to_string()));
        }
        let (mut fixed, mut sign) = (0u32, 0u32);
        for (i, c) in s.chars().enumerate() {
            match c {
                '+' => {
                    fixed |= 1 << i;
                    sign |= 1 << i;
                }
                '-' => fixed |= 1 << i,
                '*' => {}
                _ => return Err(Error::BadSubcube(s.to_string())),
            }
        }
        Ok(Self { fixed_mask: fixed, sign_mask: sign, k })
    }
}

/// Iterates every submask of a mask in ascending order, including 0 and the mask itself.
struct SubmaskIter {
    mask: u32,
    next: Option<u32>,
}

impl SubmaskIter {
    fn new(mask: u32) -> Self {
        Self { mask, next: Some(0) }
    }
}

impl Iterator for SubmaskIter {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        let cur = self.next?;
        self.next = if cur == self.mask {
            None
        } else {
            // increment within the bits of `mask`
            Some((cur | !self.mask).wrapping_add(1) & self.mask)
        };
        Some(cur)
    }
}

/// All `C(k,q) * 2^q` subcubes, ordered by fixed mask then sign mask.
pub fn enumerate_subcubes(k: u32, q: u32) -> Result<Vec<Subcube>> {
    check_dim(k, DEFAULT_MAX_DIM)?;
    check_degree(k, q)?;
    let mut out = Vec::with_capacity((binomial(k as i64, q as i64) << q) as usize);
    for fixed in 0..=full_mask(k) {
        if fixed.count_ones() != q {
            continue;
        }
        out.extend(SubmaskIter::new(fixed).map(|sign| Subcube { fixed_mask: fixed, sign_mask: sign, k }));
    }
    Ok(out)
}

pub fn subcube_class(s: Subcube) -> u32 {
    s.class()
}

pub fn subcube_contains(s: Subcube, x: Vertex) -> Result<bool> {
    s.contains(x)
}

/// `|W_j ∩ S| = C(k-q, j-i)` for any subcube `S` of class `i`.
pub fn level_subcube_count(k: u32, q: u32, class: u32, level: u32) -> u64 {
    binomial(k as i64 - q as i64, level as i64 - class as i64)
}

/// An element of the hyperoctahedral group: flip the coordinates in `flip`,
/// then send coordinate `i` to coordinate `perm[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignedPerm {
    pub perm: Vec<u32>,
    pub flip: u32,
}

impl SignedPerm {
    pub fn identity(k: u32) -> Self {
        Self { perm: (0..k).collect(), flip: 0 }
    }

    pub fn apply_bits(&self, bits: u32) -> u32 {
        let x = bits ^ self.flip;
        self.perm
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &p)| acc | ((x >> i) & 1) << p)
    }

    pub fn apply(&self, v: Vertex) -> Vertex {
        Vertex { bits: self.apply_bits(v.bits), k: v.k }
    }
}

/// Permutations of `0..k` in lexicographic order.
pub(crate) fn permutations(k: u32) -> Vec<Vec<u32>> {
    let mut cur: Vec<u32> = (0..k).collect();
    let mut out = vec![cur.clone()];
    loop {
        let Some(i) = (1..cur.len()).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..cur.len()).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

/// The full signed-permutation group of the `k`-cube (`k! * 2^k` elements).
pub fn signed_permutations(k: u32) -> Vec<SignedPerm> {
    let perms = permutations(k);
    let mut out = Vec::with_capacity(perms.len() << k);
    for perm in perms {
        for flip in 0..=full_mask(k) {
            out.push(SignedPerm { perm: perm.clone(), flip });
        }
    }
    out
}

/// Lexicographically least image (as a sorted vertex list) of `points` under
/// the signed-permutation group, together with the transform that produces it.
pub fn canonical_form(points: &[Vertex]) -> Result<(Vec<Vertex>, SignedPerm)> {
    let Some(first) = points.first() else {
        return Ok((Vec::new(), SignedPerm::identity(0)));
    };
    let k = first.k;
    for p in points {
        same_dim(k, p.k)?;
    }
    let mut src: Vec<u32> = points.iter().map(|v| v.bits).collect();
    src.sort_unstable();
    src.dedup();

    let mut best: Option<(Vec<u32>, SignedPerm)> = None;
    let mut image = Vec::with_capacity(src.len());
    for g in signed_permutations(k) {
        image.clear();
        image.extend(src.iter().map(|&b| g.apply_bits(b)));
        image.sort_unstable();
        if best.as_ref().is_none_or(|(b, _)| image < *b) {
            best = Some((image.clone(), g));
        }
    }
    let (bits, g) = best.expect("group is nonempty");
    Ok((bits.into_iter().map(|b| Vertex { bits: b, k }).collect(), g))
}

/// Precomputed action of the signed-permutation group on point-set bitmasks,
/// for `k <= 6` (so that a subset of the cube fits in a `u64`).
#[derive(Debug, Clone)]
pub struct PointSetSymmetry {
    k: u32,
    maps: Vec<Vec<u8>>,
}

impl PointSetSymmetry {
    pub fn new(k: u32) -> Result<Self> {
        check_dim(k, 6)?;
        let n = 1u32 << k;
        let maps = signed_permutations(k)
            .iter()
            .map(|g| (0..n).map(|b| g.apply_bits(b) as u8).collect())
            .collect();
        Ok(Self { k, maps })
    }

    pub fn dim(&self) -> u32 {
        self.k
    }

    pub fn group_order(&self) -> usize {
        self.maps.len()
    }

    fn image(map: &[u8], mut set: u64) -> u64 {
        let mut out = 0u64;
        while set != 0 {
            let b = set.trailing_zeros();
            out |= 1u64 << map[b as usize];
            set &= set - 1;
        }
        out
    }

    /// Canonical representative of the orbit of `set`, using the same order as
    /// [`canonical_form`]: the least sorted vertex list.
    pub fn canonical(&self, set: u64) -> u64 {
        let mut best = set;
        for map in &self.maps {
            let img = Self::image(map, set);
            if set_lex_less(img, best) {
                best = img;
            }
        }
        best
    }
}

/// Compares two equal-size point sets as sorted vertex lists: `a < b` iff the
/// smallest element of the symmetric difference lies in `a`.
pub(crate) fn set_lex_less(a: u64, b: u64) -> bool {
    let diff = a ^ b;
    diff != 0 && a & (diff & diff.wrapping_neg()) != 0
}

pub fn mask_to_vertices(k: u32, mut set: u64) -> Vec<Vertex> {
    let mut out = Vec::with_capacity(set.count_ones() as usize);
    while set != 0 {
        out.push(Vertex { bits: set.trailing_zeros(), k });
        set &= set - 1;
    }
    out
}

pub fn vertices_to_mask(points: &[Vertex]) -> u64 {
    points.iter().fold(0, |m, v| m | 1u64 << v.bits)
}

/// Parses a comma separated list of vertex strings.
pub fn parse_vertex_list(s: &str) -> Result<Vec<Vertex>> {
    let pts: Vec<Vertex> = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(Vertex::from_str)
        .collect::<Result<_>>()?;
    if let Some(first) = pts.first() {
        for p in &pts {
            same_dim(first.k, p.k)?;
        }
    }
    Ok(pts)
}
