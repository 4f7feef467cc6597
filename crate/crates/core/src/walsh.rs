//! Walsh functions and the spaces `B^k_q` of functions of degree at most `q`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::cube::{self, binomial, check_degree, check_dim, Subcube, Vertex};
use crate::error::{Error, Result};
use crate::exact::Rational;

/// `w_L`, the product of the coordinates in `L`. `L` is stored as a bit mask
/// with bit `i` standing for coordinate `i + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WalshIndex {
    mask: u32,
    k: u32,
}

impl WalshIndex {
    pub fn new(k: u32, mask: u32) -> Result<Self> {
        check_dim(k, cube::HARD_MAX_DIM)?;
        if mask & !cube::full_mask(k) != 0 {
            return Err(Error::InvalidArgument(format!("index mask {mask:#b} exceeds k={k}")));
        }
        Ok(Self { mask, k })
    }

    /// Builds `w_L` from 1-based coordinate indices.
    pub fn from_coords(k: u32, coords: &[u32]) -> Result<Self> {
        let mut mask = 0;
        for &c in coords {
            if c == 0 || c > k {
                return Err(Error::InvalidArgument(format!("coordinate {c} outside 1..={k}")));
            }
            mask |= 1 << (c - 1);
        }
        Self::new(k, mask)
    }

    pub fn mask(self) -> u32 {
        self.mask
    }

    pub fn degree(self) -> u32 {
        self.mask.count_ones()
    }

    /// 1-based coordinates in ascending order.
    pub fn coords(self) -> Vec<u32> {
        (0..self.k).filter(|i| self.mask >> i & 1 == 1).map(|i| i + 1).collect()
    }
}

impl Ord for WalshIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.k, self.degree(), self.mask).cmp(&(other.k, other.degree(), other.mask))
    }
}

impl PartialOrd for WalshIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for WalshIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c: Vec<String> = self.coords().iter().map(u32::to_string).collect();
        write!(f, "w{{{}}}", c.join(","))
    }
}

#[inline]
pub(crate) fn walsh_sign(mask: u32, bits: u32) -> i32 {
    // a coordinate contributes -1 when its bit is clear
    if (mask & !bits).count_ones() & 1 == 0 {
        1
    } else {
        -1
    }
}

pub fn walsh_eval(l: WalshIndex, x: Vertex) -> Result<i32> {
    if l.k != x.dim() {
        return Err(Error::DimensionMismatch { left: l.k, right: x.dim() });
    }
    Ok(walsh_sign(l.mask, x.bits()))
}

/// Masks of all subsets of `{1..k}` with at most `q` elements, ordered by degree then mask.
pub(crate) fn basis_masks(k: u32, q: u32) -> Vec<u32> {
    let mut m: Vec<u32> = (0..=cube::full_mask(k)).filter(|m| m.count_ones() <= q).collect();
    m.sort_by_key(|&m| (m.count_ones(), m));
    m
}

pub fn basis(k: u32, q: u32) -> Result<Vec<WalshIndex>> {
    check_dim(k, cube::DEFAULT_MAX_DIM)?;
    check_degree(k, q)?;
    Ok(basis_masks(k, q).into_iter().map(|mask| WalshIndex { mask, k }).collect())
}

/// `dim B^k_q = sum_{i <= q} C(k, i)`.
pub fn space_dim(k: u32, q: u32) -> usize {
    (0..=q).map(|i| binomial(k as i64, i as i64) as usize).sum()
}

/// A function in `B^k_q` given by exact Walsh coefficients. Absent indices
/// have coefficient zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeffVector {
    k: u32,
    q: u32,
    coeffs: BTreeMap<u32, Rational>,
}

impl CoeffVector {
    pub fn zero(k: u32, q: u32) -> Result<Self> {
        check_dim(k, cube::HARD_MAX_DIM)?;
        check_degree(k, q)?;
        Ok(Self { k, q, coeffs: BTreeMap::new() })
    }

    pub fn constant(k: u32, q: u32, c: Rational) -> Result<Self> {
        let mut f = Self::zero(k, q)?;
        f.set(WalshIndex { mask: 0, k }, c)?;
        Ok(f)
    }

    /// Builds a function from values on the canonical basis order of `basis(k, q)`.
    pub fn from_basis_coords(k: u32, q: u32, coords: &[Rational]) -> Result<Self> {
        let masks = basis_masks(k, q);
        if coords.len() != masks.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                masks.len(),
                coords.len()
            )));
        }
        let mut f = Self::zero(k, q)?;
        for (m, c) in masks.into_iter().zip(coords) {
            if !c.is_zero() {
                f.coeffs.insert(m, c.clone());
            }
        }
        Ok(f)
    }

    pub fn dim(&self) -> u32 {
        self.k
    }

    pub fn degree_bound(&self) -> u32 {
        self.q
    }

    pub fn set(&mut self, l: WalshIndex, c: Rational) -> Result<()> {
        if l.k != self.k {
            return Err(Error::DimensionMismatch { left: self.k, right: l.k });
        }
        if l.degree() > self.q {
            return Err(Error::InvalidArgument(format!("{l} has degree above q={}", self.q)));
        }
        if c.is_zero() {
            self.coeffs.remove(&l.mask);
        } else {
            self.coeffs.insert(l.mask, c);
        }
        Ok(())
    }

    pub fn get(&self, l: WalshIndex) -> Rational {
        self.coeffs.get(&l.mask).cloned().unwrap_or_else(Rational::zero)
    }

    /// Nonzero coefficients in canonical basis order.
    pub fn iter(&self) -> impl Iterator<Item = (WalshIndex, &Rational)> {
        let mut v: Vec<(WalshIndex, &Rational)> =
            self.coeffs.iter().map(|(&mask, c)| (WalshIndex { mask, k: self.k }, c)).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v.into_iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add_scaled(&mut self, other: &CoeffVector, scale: &Rational) -> Result<()> {
        if (other.k, other.q) != (self.k, self.q) {
            return Err(Error::MixedSubcubes);
        }
        for (&m, c) in &other.coeffs {
            let e = self.coeffs.entry(m).or_insert_with(Rational::zero);
            *e += c * scale;
            if e.is_zero() {
                self.coeffs.remove(&m);
            }
        }
        Ok(())
    }

    pub(crate) fn eval_bits(&self, bits: u32) -> Rational {
        let mut acc = Rational::zero();
        for (&m, c) in &self.coeffs {
            if walsh_sign(m, bits) > 0 {
                acc += c;
            } else {
                acc -= c;
            }
        }
        acc
    }

    /// Values at every vertex, in ascending bit order.
    pub fn values(&self) -> Vec<Rational> {
        (0..=cube::full_mask(self.k)).map(|b| self.eval_bits(b)).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.wire()).expect("coefficient list serializes")
    }

    fn wire(&self) -> Vec<WireCoeff> {
        self.iter()
            .map(|(l, c)| WireCoeff { l: l.coords(), num: c.numer().to_string(), den: c.denom().to_string() })
            .collect()
    }

    pub fn from_json(k: u32, q: u32, v: &serde_json::Value) -> Result<Self> {
        let wire: Vec<WireCoeff> =
            serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        let mut f = Self::zero(k, q)?;
        for w in wire {
            let num: BigInt = w.num.parse().map_err(|_| Error::Parse(w.num.clone()))?;
            let den: BigInt = w.den.parse().map_err(|_| Error::Parse(w.den.clone()))?;
            if den.is_zero() {
                return Err(Error::Parse("zero denominator".into()));
            }
            f.set(WalshIndex::from_coords(k, &w.l)?, Rational::new(num, den))?;
        }
        Ok(f)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct WireCoeff {
    #[serde(rename = "L")]
    l: Vec<u32>,
    num: String,
    den: String,
}

pub fn eval_function(f: &CoeffVector, x: Vertex) -> Result<Rational> {
    if f.k != x.dim() {
        return Err(Error::DimensionMismatch { left: f.k, right: x.dim() });
    }
    Ok(f.eval_bits(x.bits()))
}

/// Rows indexed by `points`, columns by `basis(k, q)`; entry `w_L(u)`.
pub fn restriction_matrix(k: u32, q: u32, points: &[Vertex]) -> Result<Vec<Vec<i8>>> {
    if points.is_empty() {
        return Err(Error::EmptyPoints);
    }
    check_dim(k, cube::DEFAULT_MAX_DIM)?;
    check_degree(k, q)?;
    let masks = basis_masks(k, q);
    points
        .iter()
        .map(|u| {
            if u.dim() != k {
                return Err(Error::DimensionMismatch { left: k, right: u.dim() });
            }
            Ok(masks.iter().map(|&m| walsh_sign(m, u.bits()) as i8).collect())
        })
        .collect()
}

pub fn to_rational_matrix(m: &[Vec<i8>]) -> Vec<Vec<Rational>> {
    m.iter()
        .map(|r| r.iter().map(|&x| Rational::from_integer(BigInt::from(x))).collect())
        .collect()
}

/// `1_S` as a degree-`q` function: the product of `(1 ± r_i)/2` over the
/// fixed coordinates of `S`.
pub fn subcube_indicator(s: Subcube) -> CoeffVector {
    let q = s.q();
    let scale = Rational::new(BigInt::one(), BigInt::one() << q);
    let mut coeffs = BTreeMap::new();
    let fixed = s.fixed_mask();
    let mut l = 0u32;
    loop {
        // sign of w_L on S is the product of fixed signs over L
        let neg = (l & !s.sign_mask()).count_ones() & 1 == 1;
        coeffs.insert(l, if neg { -scale.clone() } else { scale.clone() });
        if l == fixed {
            break;
        }
        l = (l | !fixed).wrapping_add(1) & fixed;
    }
    CoeffVector { k: s.dim(), q, coeffs }
}

/// Class sums `T_0..T_q` of a subcube combination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TVector {
    pub k: u32,
    pub q: u32,
    pub t: Vec<Rational>,
}

impl TVector {
    pub fn total(&self) -> Rational {
        self.t.iter().fold(Rational::zero(), |a, b| a + b)
    }
}

fn check_alpha(k: u32, q: u32, alpha: &[(Subcube, Rational)]) -> Result<()> {
    if alpha.iter().any(|(s, _)| s.dim() != k || s.q() != q) {
        return Err(Error::MixedSubcubes);
    }
    Ok(())
}

pub fn t_vector(k: u32, q: u32, alpha: &[(Subcube, Rational)]) -> Result<TVector> {
    check_degree(k, q)?;
    check_alpha(k, q, alpha)?;
    let mut t = vec![Rational::zero(); q as usize + 1];
    for (s, a) in alpha {
        t[s.class() as usize] += a;
    }
    Ok(TVector { k, q, t })
}

/// `sum_S alpha_S 1_S` in the Walsh basis.
pub fn combination(k: u32, q: u32, alpha: &[(Subcube, Rational)]) -> Result<CoeffVector> {
    check_alpha(k, q, alpha)?;
    let mut f = CoeffVector::zero(k, q)?;
    for (s, a) in alpha {
        f.add_scaled(&subcube_indicator(*s), a)?;
    }
    Ok(f)
}

/// Row `(C(k-q, j-i))_{i=0..q}`: the level sum over `W_j` of a subcube
/// combination is this row dotted with its T-vector.
pub fn level_sum_row(k: u32, q: u32, level: u32) -> Result<Vec<u64>> {
    check_degree(k, q)?;
    if level > k {
        return Err(Error::LevelOutOfRange { k, level });
    }
    Ok((0..=q).map(|i| cube::level_subcube_count(k, q, i, level)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::{enumerate_subcubes, enumerate_vertices, level_set, LevelSpec};
    use crate::exact::{int, rat};
    use proptest::prelude::*;

    fn v(s: &str) -> Vertex {
        s.parse().unwrap()
    }

    fn sum_over(f: &CoeffVector, pts: &[Vertex]) -> Rational {
        pts.iter().fold(Rational::zero(), |a, &x| a + eval_function(f, x).unwrap())
    }

    #[test]
    fn walsh_eval_examples() {
        let e = WalshIndex::new(3, 0).unwrap();
        assert!(enumerate_vertices(3).unwrap().into_iter().all(|x| walsh_eval(e, x).unwrap() == 1));
        assert_eq!(walsh_eval(WalshIndex::from_coords(3, &[1]).unwrap(), v("-++")).unwrap(), -1);
        assert_eq!(walsh_eval(WalshIndex::from_coords(3, &[1, 2]).unwrap(), v("--+")).unwrap(), 1);
        assert!(walsh_eval(e, v("--")).is_err());
    }

    #[test]
    fn basis_lengths_and_order() {
        assert_eq!(basis(4, 2).unwrap().len(), 11);
        assert_eq!(basis(3, 3).unwrap().len(), 8);
        assert_eq!(basis(3, 0).unwrap(), vec![WalshIndex::new(3, 0).unwrap()]);
        let b = basis(4, 2).unwrap();
        assert!(b.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(b.len(), space_dim(4, 2));
        assert!(basis(2, 3).is_err());
    }

    #[test]
    fn orthogonality() {
        for k in 1..=8 {
            let all = enumerate_vertices(k).unwrap();
            let b = basis(k, k).unwrap();
            for &l in &b {
                for &m in &b {
                    let s: i32 = all.iter().map(|&x| walsh_eval(l, x).unwrap() * walsh_eval(m, x).unwrap()).sum();
                    assert_eq!(s, if l == m { 1 << k } else { 0 });
                }
            }
        }
    }

    #[test]
    fn constant_and_sum_identity() {
        let f = CoeffVector::constant(4, 2, int(1)).unwrap();
        assert!(f.values().iter().all(|x| *x == int(1)));

        let mut g = CoeffVector::zero(4, 2).unwrap();
        g.set(WalshIndex::new(4, 0).unwrap(), rat(3, 7)).unwrap();
        g.set(WalshIndex::from_coords(4, &[2, 3]).unwrap(), rat(-5, 2)).unwrap();
        g.set(WalshIndex::from_coords(4, &[4]).unwrap(), int(9)).unwrap();
        let total = sum_over(&g, &enumerate_vertices(4).unwrap());
        assert_eq!(total, rat(3, 7) * int(16));
        assert!(g.set(WalshIndex::from_coords(4, &[1, 2, 3]).unwrap(), int(1)).is_err());
    }

    #[test]
    fn indicator_examples() {
        let full = subcube_indicator("***".parse().unwrap());
        assert_eq!(full, CoeffVector::constant(3, 0, int(1)).unwrap());

        // (1/4)(1 + r_1)(1 + r_2)
        let s: Subcube = "++**".parse().unwrap();
        let f = subcube_indicator(s);
        assert_eq!(f.get(WalshIndex::new(4, 0).unwrap()), rat(1, 4));
        assert_eq!(f.get(WalshIndex::from_coords(4, &[1]).unwrap()), rat(1, 4));
        assert_eq!(f.get(WalshIndex::from_coords(4, &[1, 2]).unwrap()), rat(1, 4));

        let s: Subcube = "+-**".parse().unwrap();
        let f = subcube_indicator(s);
        assert_eq!(f.get(WalshIndex::new(4, 0).unwrap()), rat(1, 4));
        assert_eq!(f.get(WalshIndex::from_coords(4, &[2]).unwrap()), rat(-1, 4));
        for x in enumerate_vertices(4).unwrap() {
            let want = if s.contains(x).unwrap() { int(1) } else { int(0) };
            assert_eq!(eval_function(&f, x).unwrap(), want);
        }
    }

    #[test]
    fn indicators_are_zero_one() {
        for k in 1..=5 {
            for q in 0..=k {
                for s in enumerate_subcubes(k, q).unwrap() {
                    let vals = subcube_indicator(s).values();
                    assert!(vals.iter().all(|x| *x == int(0) || *x == int(1)));
                    assert_eq!(vals.iter().filter(|x| **x == int(1)).count() as u64, s.len());
                }
            }
        }
    }

    #[test]
    fn restriction_matrix_examples() {
        let all = enumerate_vertices(2).unwrap();
        let m = restriction_matrix(2, 2, &all).unwrap();
        assert_eq!(m.len(), 4);
        for i in 0..4 {
            for j in 0..4 {
                let ip: i32 = (0..4).map(|c| (m[i][c] * m[j][c]) as i32).sum();
                assert_eq!(ip, if i == j { 4 } else { 0 });
            }
        }
        let m = restriction_matrix(3, 1, &[v("---"), v("+++")]).unwrap();
        assert_eq!(m, vec![vec![1, -1, -1, -1], vec![1, 1, 1, 1]]);
        assert_eq!(restriction_matrix(3, 1, &[]).unwrap_err(), Error::EmptyPoints);
        let u: Vec<Vertex> = enumerate_vertices(4).unwrap().into_iter().take(5).collect();
        let m = restriction_matrix(4, 2, &u).unwrap();
        assert_eq!((m.len(), m[0].len()), (5, 11));
    }

    #[test]
    fn full_restriction_has_full_rank() {
        for k in 1..=5 {
            for q in 0..=k {
                let m = restriction_matrix(k, q, &enumerate_vertices(k).unwrap()).unwrap();
                assert_eq!(crate::exact::rank(&to_rational_matrix(&m)).unwrap(), space_dim(k, q));
            }
        }
    }

    #[test]
    fn t_vector_examples() {
        let s: Subcube = "+-*".parse().unwrap();
        let t = t_vector(3, 2, &[(s, int(1))]).unwrap();
        assert_eq!(t.t, vec![int(0), int(1), int(0)]);

        let alpha: Vec<_> = enumerate_subcubes(3, 1).unwrap().into_iter().map(|s| (s, int(1))).collect();
        let t = t_vector(3, 1, &alpha).unwrap();
        assert_eq!(t.t, vec![int(3), int(3)]);
        let phi = combination(3, 1, &alpha).unwrap();
        let brute = sum_over(&phi, &enumerate_vertices(3).unwrap());
        assert_eq!(brute, int(24));
        assert_eq!(brute, int(4) * t.total());

        assert_eq!(t_vector(3, 2, &[(s, int(1)), ("+**".parse().unwrap(), int(1))]).unwrap_err(), Error::MixedSubcubes);
    }

    #[test]
    fn level_sum_row_examples() {
        assert_eq!(level_sum_row(5, 3, 1).unwrap(), vec![2, 1, 0, 0]);
        assert_eq!(level_sum_row(5, 3, 0).unwrap(), vec![1, 0, 0, 0]);
        assert_eq!(level_sum_row(4, 2, 2).unwrap(), vec![1, 2, 1]);
        assert!(level_sum_row(4, 2, 5).is_err());
    }

    #[test]
    fn json_round_trip() {
        let f = subcube_indicator("+-**".parse().unwrap());
        let j = f.to_json();
        assert_eq!(j[0]["L"], serde_json::json!([]));
        assert_eq!(j[0]["num"], "1");
        assert_eq!(j[0]["den"], "4");
        assert_eq!(CoeffVector::from_json(4, 2, &j).unwrap(), f);
    }

    fn alpha_strategy(k: u32, q: u32) -> impl Strategy<Value = Vec<(Subcube, Rational)>> {
        let subcubes = enumerate_subcubes(k, q).unwrap();
        let n = subcubes.len();
        proptest::collection::vec((-5i64..6, 1i64..5), n).prop_map(move |v| {
            subcubes.iter().zip(v).map(|(&s, (a, b))| (s, rat(a, b))).collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn level_sums_match_t_space(
            (k, q, alpha) in (2u32..=6).prop_flat_map(|k| (Just(k), 0..=k))
                .prop_flat_map(|(k, q)| (Just(k), Just(q), alpha_strategy(k, q)))
        ) {
            let phi = combination(k, q, &alpha).unwrap();
            let t = t_vector(k, q, &alpha).unwrap();
            let all = enumerate_vertices(k).unwrap();
            prop_assert_eq!(sum_over(&phi, &all), Rational::from_integer(BigInt::from(1u64 << (k - q))) * t.total());
            for j in 0..=k {
                let w = level_set(&LevelSpec::new(k, [j]).unwrap()).unwrap();
                let row = level_sum_row(k, q, j).unwrap();
                let predicted = row.iter().zip(&t.t).fold(Rational::zero(), |a, (&r, ti)| a + int(r as i64) * ti);
                prop_assert_eq!(sum_over(&phi, &w), predicted);
            }
        }
    }
}
