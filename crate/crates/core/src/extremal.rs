//! Smallest sets of uniqueness `u(k,q)` and smallest subcube transversals
//! `g(k,q)`, by exhaustive search and by the known bounds.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::cube::{
    binomial, check_degree, enumerate_subcubes, mask_to_vertices, set_lex_less, vertices_to_mask, PointSetSymmetry,
    Vertex,
};
use crate::error::{Error, Result};
use crate::levels::{known_construction, Construction};
use crate::uniqueness::{is_unique_cone, is_unique_cone_lp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exhaustive,
    Formula,
    Bound,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exhaustive => "exhaustive",
            Method::Formula => "formula",
            Method::Bound => "bound",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Quantity {
    U,
    G,
}

impl Quantity {
    pub fn as_str(self) -> &'static str {
        match self {
            Quantity::U => "u",
            Quantity::G => "g",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExtremalResult {
    pub quantity: Quantity,
    pub k: u32,
    pub q: u32,
    pub value: usize,
    pub certificate: Option<Vec<Vertex>>,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtremalOutcome {
    Found(ExtremalResult),
    /// Budget exhausted; the true value lies in `lower..=upper`.
    Unknown { quantity: Quantity, k: u32, q: u32, lower: usize, upper: Option<usize> },
}

impl ExtremalOutcome {
    pub fn value(&self) -> Option<usize> {
        match self {
            ExtremalOutcome::Found(r) => Some(r.value),
            ExtremalOutcome::Unknown { .. } => None,
        }
    }

    pub fn result(&self) -> Option<&ExtremalResult> {
        match self {
            ExtremalOutcome::Found(r) => Some(r),
            ExtremalOutcome::Unknown { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    pub max_k: u32,
    /// Canonical candidates for `u`, search nodes for `g`.
    pub max_work: u64,
    pub time_limit: Option<Duration>,
}

impl SearchBudget {
    pub fn for_u() -> Self {
        Self { max_k: 4, max_work: 2_000_000, time_limit: None }
    }

    pub fn for_g() -> Self {
        Self { max_k: 6, max_work: 50_000_000, time_limit: None }
    }

    fn expired(&self, start: Instant, work: u64) -> bool {
        work > self.max_work || self.time_limit.is_some_and(|t| start.elapsed() > t)
    }
}

fn subcube_masks(k: u32, q: u32) -> Result<Vec<u64>> {
    Ok(enumerate_subcubes(k, q)?
        .into_iter()
        .map(|s| vertices_to_mask(&s.points().collect::<Vec<_>>()))
        .collect())
}

pub fn is_transversal(k: u32, q: u32, points: &[Vertex]) -> Result<bool> {
    let set: BTreeSet<u32> = points.iter().map(|v| v.bits()).collect();
    Ok(enumerate_subcubes(k, q)?
        .iter()
        .all(|s| set.iter().any(|&b| s.contains(Vertex::from_raw(k, b)).unwrap_or(false))))
}

fn check_search(k: u32, q: u32, budget: &SearchBudget) -> Result<()> {
    check_degree(k, q)?;
    let max = budget.max_k.min(6);
    if k == 0 || k > max {
        return Err(Error::DimensionOutOfRange { k, max });
    }
    Ok(())
}

/// Smallest cone set of uniqueness, by ascending size over orbit
/// representatives. Candidates that miss a subcube are skipped without an LP.
pub fn u_exact(k: u32, q: u32, budget: &SearchBudget) -> Result<ExtremalOutcome> {
    check_search(k, q, budget)?;
    let start = Instant::now();
    let sym = PointSetSymmetry::new(k)?;
    let cubes = subcube_masks(k, q)?;
    let n = 1u32 << k;
    let upper = construction_upper(k, q);

    let mut layer: Vec<u64> = vec![0];
    let mut work = 0u64;
    for size in 1..=n as usize {
        let mut next: BTreeSet<u64> = BTreeSet::new();
        for &set in &layer {
            for b in 0..n {
                if set >> b & 1 == 0 {
                    next.insert(sym.canonical(set | 1u64 << b));
                }
            }
        }
        let mut layer_sorted: Vec<u64> = next.into_iter().collect();
        layer_sorted.sort_by(|a, b| lex_cmp(*a, *b));
        work += layer_sorted.len() as u64;
        if budget.expired(start, work) {
            return Ok(ExtremalOutcome::Unknown { quantity: Quantity::U, k, q, lower: size, upper });
        }

        let found: Vec<u64> = layer_sorted
            .par_iter()
            .filter(|&&set| cubes.iter().all(|&c| c & set != 0))
            .filter_map(|&set| {
                let pts = mask_to_vertices(k, set);
                match is_unique_cone_lp(k, q, &pts) {
                    Ok(v) if v.is_unique() => Some(Ok(set)),
                    Ok(_) => None,
                    Err(e) => Some(Err(e)),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(&best) = found.iter().min_by(|a, b| lex_cmp(**a, **b)) {
            return Ok(ExtremalOutcome::Found(ExtremalResult {
                quantity: Quantity::U,
                k,
                q,
                value: size,
                certificate: Some(mask_to_vertices(k, best)),
                method: Method::Exhaustive,
            }));
        }
        layer = layer_sorted;
    }
    unreachable!("the whole cube is always a set of uniqueness")
}

fn lex_cmp(a: u64, b: u64) -> std::cmp::Ordering {
    if a == b {
        std::cmp::Ordering::Equal
    } else if set_lex_less(a, b) {
        std::cmp::Ordering::Less
    } else {
        std::cmp::Ordering::Greater
    }
}

struct HittingSearch<'a> {
    cubes: &'a [u64],
    /// Subcubes containing each point.
    incident: Vec<Vec<usize>>,
    best: u64,
    best_size: u32,
    nodes: u64,
    budget: &'a SearchBudget,
    start: Instant,
    aborted: bool,
}

impl HittingSearch<'_> {
    fn lower_bound(&self, chosen: u64, forbidden: u64) -> Option<u32> {
        // disjoint uncovered subcubes each need their own point
        let mut used = 0u64;
        let mut packing = 0;
        let mut uncovered = 0u32;
        for &c in self.cubes {
            if c & chosen != 0 {
                continue;
            }
            if c & !forbidden == 0 {
                return None;
            }
            uncovered += 1;
            if c & used == 0 {
                used |= c;
                packing += 1;
            }
        }
        let max_cover = self
            .incident
            .iter()
            .enumerate()
            .filter(|(p, _)| (chosen | forbidden) >> p & 1 == 0)
            .map(|(_, inc)| inc.iter().filter(|&&i| self.cubes[i] & chosen == 0).count() as u32)
            .max()
            .unwrap_or(0);
        let by_degree = if uncovered == 0 { 0 } else { uncovered.div_ceil(max_cover.max(1)) };
        Some(chosen.count_ones() + packing.max(by_degree))
    }

    fn search(&mut self, chosen: u64, mut forbidden: u64) {
        self.nodes += 1;
        if self.budget.expired(self.start, self.nodes) {
            self.aborted = true;
            return;
        }
        let Some(target) = self.cubes.iter().copied().find(|&c| c & chosen == 0) else {
            if chosen.count_ones() < self.best_size || (chosen.count_ones() == self.best_size && set_lex_less(chosen, self.best)) {
                self.best = chosen;
                self.best_size = chosen.count_ones();
            }
            return;
        };
        match self.lower_bound(chosen, forbidden) {
            Some(lb) if lb < self.best_size => {}
            _ => return,
        }
        // branch on which point of `target` is the first one chosen
        let mut cand = target & !forbidden;
        while cand != 0 {
            let p = cand.trailing_zeros();
            cand &= cand - 1;
            self.search(chosen | 1u64 << p, forbidden);
            if self.aborted {
                return;
            }
            forbidden |= 1u64 << p;
        }
    }
}

fn greedy_transversal(cubes: &[u64], n: u32) -> u64 {
    let mut chosen = 0u64;
    loop {
        let open: Vec<u64> = cubes.iter().copied().filter(|&c| c & chosen == 0).collect();
        if open.is_empty() {
            return chosen;
        }
        let p = (0..n)
            .max_by_key(|&p| (open.iter().filter(|&&c| c >> p & 1 == 1).count(), std::cmp::Reverse(p)))
            .expect("nonempty cube");
        chosen |= 1u64 << p;
    }
}

/// Minimum set meeting every `(k-q)`-subcube, by branch and bound. The
/// symmetry group is vertex-transitive, so the search fixes the all `-1`
/// vertex in the solution.
pub fn g_exact(k: u32, q: u32, budget: &SearchBudget) -> Result<ExtremalOutcome> {
    check_search(k, q, budget)?;
    let cubes = subcube_masks(k, q)?;
    let n = 1u32 << k;
    let mut incident = vec![Vec::new(); n as usize];
    for (i, &c) in cubes.iter().enumerate() {
        for p in 0..n {
            if c >> p & 1 == 1 {
                incident[p as usize].push(i);
            }
        }
    }
    let greedy = greedy_transversal(&cubes, n);
    let sym = PointSetSymmetry::new(k)?;
    let greedy = sym.canonical(greedy);
    let mut s = HittingSearch {
        cubes: &cubes,
        incident,
        best: greedy,
        best_size: greedy.count_ones(),
        nodes: 0,
        budget,
        start: Instant::now(),
        aborted: false,
    };
    s.search(1, 0);
    if s.aborted {
        let lower = s.lower_bound(1, 0).unwrap_or(1) as usize;
        return Ok(ExtremalOutcome::Unknown { quantity: Quantity::G, k, q, lower, upper: Some(s.best_size as usize) });
    }
    let best = sym.canonical(s.best);
    Ok(ExtremalOutcome::Found(ExtremalResult {
        quantity: Quantity::G,
        k,
        q,
        value: best.count_ones() as usize,
        certificate: Some(mask_to_vertices(k, best)),
        method: Method::Exhaustive,
    }))
}

/// `min { r : C(r-1, floor(k/2) - 1) >= k }`, or `None` when no `r` works.
pub fn kleitman_spencer_g2(k: u32) -> Option<u64> {
    if k < 2 {
        return None;
    }
    let m = (k / 2) as i64 - 1;
    if m == 0 {
        // C(r-1, 0) = 1 < k for every r
        return None;
    }
    (1u64..).find(|&r| binomial(r as i64 - 1, m) >= k as u64)
}

/// `min { r : C(r-1, floor(r/2) - 1) >= k }`, the least number of rows of a
/// binary array on `k` columns in which every pair of columns shows all four
/// patterns. Equals `g(k,2)` for `k >= 2`.
pub fn pairwise_covering_g2(k: u32) -> Option<u64> {
    if k < 2 {
        return None;
    }
    (2u64..).find(|&r| binomial(r as i64 - 1, (r / 2) as i64 - 1) >= k as u64)
}

/// `g(k,q) >= 2^(q-2) g(k-q+2, 2)`, from repeating `g(k,q) >= 2 g(k-1,q-1)`.
pub fn graham_lower_chain(k: u32, q: u32) -> Result<u64> {
    if q < 2 || q > k {
        return Err(Error::DegreeOutOfRange { k, q });
    }
    let base = pairwise_covering_g2(k - q + 2).expect("k - q + 2 >= 2");
    Ok(base << (q - 2))
}

/// Closed-form values: `u(k,0) = 1`, `u(k,1) = 2`, `u(k,k-1) = 2^(k-1)`,
/// `u(k,k) = 2^k`.
pub fn u_closed_form(k: u32, q: u32) -> Option<usize> {
    if q == k {
        Some(1 << k)
    } else if q == 0 {
        Some(1)
    } else if q == 1 {
        Some(2)
    } else if q + 1 == k {
        Some(1 << (k - 1))
    } else {
        None
    }
}

fn construction_upper(k: u32, q: u32) -> Option<usize> {
    constructions_for(k, q).into_iter().map(|(_, n)| n).min()
}

/// Constructions that serve as upper bounds on `u(k,q)`, with their sizes.
fn constructions_for(k: u32, q: u32) -> Vec<(Construction, usize)> {
    let mut out = Vec::new();
    let mut push = |c: Construction| {
        if let Ok(pts) = known_construction(k, q, c.name()) {
            out.push((c, pts.len()));
        }
    };
    if q == 2 && k >= 3 {
        push(Construction::W1k);
    }
    if q == 3 && k >= 4 {
        push(Construction::W1k1);
    }
    if q >= 1 {
        push(Construction::Blofeld);
    }
    push(Construction::Full);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundSummary {
    pub k: u32,
    pub q: u32,
    pub lower: usize,
    pub upper: usize,
    pub lower_source: String,
    pub upper_source: String,
}

pub fn bound_summary(k: u32, q: u32, budget: &SearchBudget) -> Result<BoundSummary> {
    check_degree(k, q)?;
    if k == 0 {
        return Err(Error::DimensionOutOfRange { k, max: budget.max_k });
    }
    if let Some(v) = u_closed_form(k, q) {
        return Ok(BoundSummary {
            k,
            q,
            lower: v,
            upper: v,
            lower_source: "closed form".into(),
            upper_source: "closed form".into(),
        });
    }
    let mut lower = (1usize, String::from("trivial"));
    if q >= 2 {
        let chain = graham_lower_chain(k, q)? as usize;
        if chain > lower.0 {
            lower = (chain, "transversal chain".into());
        }
    }
    if k <= budget.max_k.min(6) {
        if let ExtremalOutcome::Found(r) = g_exact(k, q, budget)? {
            if r.value > lower.0 {
                lower = (r.value, "exhaustive transversal g(k,q)".into());
            }
        }
    }
    let (c, upper) = constructions_for(k, q)
        .into_iter()
        .min_by_key(|&(_, n)| n)
        .expect("the full cube is always available");
    Ok(BoundSummary {
        k,
        q,
        lower: lower.0,
        upper,
        lower_source: lower.1,
        upper_source: format!("{} construction", c.name()),
    })
}

/// Whether `u(k,2) = k + 1`; `None` if the search ran out of budget.
pub fn conjecture_check(k: u32, budget: &SearchBudget) -> Result<Option<bool>> {
    Ok(u_exact(k, 2, budget)?.value().map(|u| u == k as usize + 1))
}

/// Re-validates a certificate: a cone set of uniqueness for `u`, a
/// transversal for `g`, of the stated size.
pub fn validate_certificate(r: &ExtremalResult) -> Result<bool> {
    let Some(cert) = &r.certificate else {
        return Ok(true);
    };
    let distinct: BTreeSet<&Vertex> = cert.iter().collect();
    if distinct.len() != r.value {
        return Ok(false);
    }
    match r.quantity {
        Quantity::U => Ok(is_unique_cone(r.k, r.q, cert)?.is_unique()),
        Quantity::G => is_transversal(r.k, r.q, cert),
    }
}

/// CSV header for result tables.
pub const RESULT_CSV_HEADER: &str = "k,q,quantity,value,method,certificate";

pub fn result_csv_row(r: &ExtremalResult) -> String {
    let cert = r
        .certificate
        .as_ref()
        .map(|c| c.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "))
        .unwrap_or_default();
    format!("{},{},{},{},{},{}", r.k, r.q, r.quantity.as_str(), r.value, r.method.as_str(), cert)
}

pub fn result_json(r: &ExtremalResult) -> serde_json::Value {
    serde_json::json!({
        "k": r.k,
        "q": r.q,
        "quantity": r.quantity.as_str(),
        "value": r.value,
        "method": r.method.as_str(),
        "certificate": r.certificate.as_ref().map(|c| c.iter().map(ToString::to_string).collect::<Vec<_>>()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(k: u32, q: u32) -> ExtremalResult {
        u_exact(k, q, &SearchBudget::for_u()).unwrap().result().cloned().expect("within budget")
    }

    fn g(k: u32, q: u32) -> ExtremalResult {
        g_exact(k, q, &SearchBudget::for_g()).unwrap().result().cloned().expect("within budget")
    }

    #[test]
    fn u_small_values() {
        let r = u(3, 1);
        assert_eq!(r.value, 2);
        assert!(validate_certificate(&r).unwrap());
        // the canonical antipodal pair
        assert_eq!(r.certificate.as_ref().unwrap().iter().map(ToString::to_string).collect::<Vec<_>>(), vec!["---", "+++"]);
        assert_eq!(u(3, 3).value, 8);
        assert_eq!(u(3, 2).value, 4);
        assert!(validate_certificate(&u(3, 2)).unwrap());
    }

    #[test]
    fn g_small_values() {
        assert_eq!(g(2, 2).value, 4);
        let r = g(3, 2);
        assert_eq!(r.value, 4);
        assert!(validate_certificate(&r).unwrap());
        assert_eq!(g(3, 1).value, 2);
        assert_eq!(g(4, 2).value, 5);
    }

    #[test]
    fn g_brute_force_tiny() {
        // independent oracle: scan all subsets by size
        for k in 1..=3u32 {
            for q in 0..=k {
                let cubes = subcube_masks(k, q).unwrap();
                let n = 1u64 << (1 << k);
                let best = (1..n).filter(|s| cubes.iter().all(|c| c & s != 0)).map(|s| s.count_ones()).min().unwrap();
                assert_eq!(g(k, q).value, best as usize, "k={k} q={q}");
            }
        }
    }

    #[test]
    fn kleitman_spencer_formula() {
        assert_eq!(kleitman_spencer_g2(4), Some(5));
        assert_eq!(kleitman_spencer_g2(6), Some(5));
        assert_eq!(kleitman_spencer_g2(3), None);
        assert_eq!(kleitman_spencer_g2(2), None);
        assert_eq!(kleitman_spencer_g2(10), Some(7));
    }

    #[test]
    fn pairwise_covering_matches_search() {
        assert_eq!(pairwise_covering_g2(1), None);
        for k in 2..=6 {
            assert_eq!(pairwise_covering_g2(k), Some(g(k, 2).value as u64), "k={k}");
        }
        assert_eq!(pairwise_covering_g2(10), Some(6));
        assert_eq!(pairwise_covering_g2(11), Some(7));
    }

    #[test]
    fn chain_examples() {
        assert_eq!(graham_lower_chain(5, 3).unwrap(), 10);
        assert_eq!(graham_lower_chain(4, 2).unwrap(), 5);
        assert_eq!(graham_lower_chain(4, 3).unwrap(), 8);
        assert_eq!(graham_lower_chain(8, 4).unwrap(), 24);
        assert!(graham_lower_chain(4, 1).is_err());
        for k in 2..=6 {
            for q in 2..=k {
                assert!(graham_lower_chain(k, q).unwrap() <= g(k, q).value as u64);
            }
        }
    }

    #[test]
    fn bound_summary_examples() {
        let b = SearchBudget::for_g();
        let s = bound_summary(5, 2, &b).unwrap();
        assert_eq!(s.upper, 6);
        assert!(s.lower <= s.upper);
        let s = bound_summary(5, 3, &b).unwrap();
        assert_eq!(s.upper, 10);
        assert!(s.lower <= s.upper);
        let s = bound_summary(4, 4, &b).unwrap();
        assert_eq!((s.lower, s.upper), (16, 16));
    }

    #[test]
    fn budget_exhaustion_is_unknown() {
        let tiny = SearchBudget { max_k: 4, max_work: 3, time_limit: None };
        assert!(matches!(u_exact(4, 2, &tiny).unwrap(), ExtremalOutcome::Unknown { .. }));
        assert!(matches!(g_exact(4, 2, &tiny).unwrap(), ExtremalOutcome::Unknown { .. }));
        assert!(u_exact(5, 2, &SearchBudget::for_u()).is_err());
    }

    #[test]
    fn csv_row_format() {
        let r = u(3, 1);
        assert_eq!(result_csv_row(&r), "3,1,u,2,exhaustive,--- +++");
        assert_eq!(result_json(&r)["certificate"][1], "+++");
    }
}

