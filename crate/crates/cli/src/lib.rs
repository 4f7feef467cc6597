//! Verification suites and argument helpers behind the `uniqcube` binary.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use serde::Serialize;
use uniqcube::cube::{enumerate_vertices, level_set, LevelSpec, Vertex};
use uniqcube::extremal::{bound_summary, g_exact, u_closed_form, u_exact, validate_certificate, SearchBudget};
use uniqcube::levels::{known_construction, verify_level_theorem, verify_polygon_properties};
use uniqcube::uniqueness::{is_minimal_cone, is_unique_cone};
use uniqcube::{Error, Result};

/// Largest `k` each suite accepts.
pub const LEVEL_THEOREM_MAX_K: u32 = 8;
pub const POLYGON_MAX_K: u32 = 1000;
pub const REMARKS_MAX_K: u32 = 6;

/// `"3..6"`, `"3..=6"` (both inclusive) or a single `"5"`.
pub fn parse_k_range(s: &str) -> Result<RangeInclusive<u32>> {
    let num = |t: &str| t.trim().parse::<u32>().map_err(|_| Error::Parse(format!("bad k range {s:?}")));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?),
        None => {
            let k = num(s)?;
            (k, k)
        }
    };
    if lo > hi {
        return Err(Error::Parse(format!("empty k range {s:?}")));
    }
    Ok(lo..=hi)
}

/// Comma-separated unsigned integers.
pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|_| Error::Parse(format!("bad list entry {t:?}"))))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub k: u32,
    pub status: Status,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, k: u32, ok: bool, detail: impl Into<String>) -> Self {
        let status = if ok { Status::Pass } else { Status::Fail };
        Self { name: name.into(), k, status, detail: detail.into() }
    }

    fn skipped(name: impl Into<String>, k: u32, detail: impl Into<String>) -> Self {
        Self { name: name.into(), k, status: Status::Skipped, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    LevelTheorem,
    Polygon,
    Remarks,
    Bounds,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "level-theorem" => Ok(Self::LevelTheorem),
            "polygon" => Ok(Self::Polygon),
            "remarks" => Ok(Self::Remarks),
            "bounds" => Ok(Self::Bounds),
            other => Err(Error::InvalidArgument(format!("unknown suite {other:?}"))),
        }
    }
}

pub fn run_suite(suite: Suite, ks: RangeInclusive<u32>, budget: &SearchBudget) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for k in ks {
        match suite {
            Suite::LevelTheorem => out.push(level_theorem(k)?),
            Suite::Polygon => out.push(polygon(k)?),
            Suite::Remarks => out.extend(remarks(k)?),
            Suite::Bounds => out.extend(bounds(k, budget)?),
        }
    }
    Ok(out)
}

pub fn level_theorem(k: u32) -> Result<Check> {
    let name = "level-theorem";
    if !(2..=LEVEL_THEOREM_MAX_K).contains(&k) {
        return Ok(Check::skipped(name, k, format!("k outside 2..={LEVEL_THEOREM_MAX_K}")));
    }
    let report = verify_level_theorem(k)?;
    let failures = report.failures();
    Ok(Check::new(name, k, failures == 0, format!("{} level sets, {failures} disagreements", report.rows.len())))
}

pub fn polygon(k: u32) -> Result<Check> {
    let name = "polygon";
    if !(3..=POLYGON_MAX_K).contains(&k) {
        return Ok(Check::skipped(name, k, format!("k outside 3..={POLYGON_MAX_K}")));
    }
    let r = verify_polygon_properties(k)?;
    let detail = if r.all_hold() {
        "symmetry, slopes, unimodality, convex position".to_string()
    } else {
        r.diagnostics.join("; ")
    };
    Ok(Check::new(name, k, r.all_hold(), detail))
}

fn levels_of(mask: u64, k: u32) -> BTreeSet<u32> {
    (0..=k).filter(|d| mask >> d & 1 == 1).collect()
}

/// The three small-degree facts: only the whole cube works for `q = k`, the
/// even levels are a minimal set for `q = k-1`, two antipodes suffice for
/// `q = 1`.
pub fn remarks(k: u32) -> Result<Vec<Check>> {
    if !(2..=REMARKS_MAX_K).contains(&k) {
        return Ok(vec![Check::skipped("remarks", k, format!("k outside 2..={REMARKS_MAX_K}"))]);
    }
    let mut out = Vec::new();

    let mut wrong = Vec::new();
    for mask in 1u64..1 << (k + 1) {
        let d = levels_of(mask, k);
        let unique = is_unique_cone(k, k, &level_set(&LevelSpec::new(k, d.iter().copied())?)?)?.is_unique();
        if unique != (d.len() == k as usize + 1) {
            wrong.push(format!("{d:?}"));
        }
    }
    out.push(Check::new(
        "full-degree level sets",
        k,
        wrong.is_empty(),
        if wrong.is_empty() { "only D = {0..k} is unique".to_string() } else { wrong.join(" ") },
    ));

    // every proper subset lies inside X minus one point, and uniqueness is
    // inherited by supersets
    let all = enumerate_vertices(k)?;
    let mut survivors = Vec::new();
    for x in &all {
        let rest: Vec<Vertex> = all.iter().copied().filter(|y| y != x).collect();
        if is_unique_cone(k, k, &rest)?.is_unique() {
            survivors.push(x.to_string());
        }
    }
    out.push(Check::new(
        "full-degree proper subsets",
        k,
        survivors.is_empty(),
        if survivors.is_empty() { "X minus any point fails".to_string() } else { survivors.join(" ") },
    ));

    let even = known_construction(k, k - 1, "alternating")?;
    let unique = is_unique_cone(k, k - 1, &even)?.is_unique();
    let minimal = is_minimal_cone(k, k - 1, &even)?;
    out.push(Check::new(
        "even levels for q = k-1",
        k,
        unique && minimal,
        format!("{} points, unique {unique}, minimal {minimal}", even.len()),
    ));

    let pair = known_construction(k, 1, "antipodal")?;
    let unique = is_unique_cone(k, 1, &pair)?.is_unique();
    out.push(Check::new("antipodes for q = 1", k, unique, format!("unique {unique}")));
    Ok(out)
}

/// Exhaustive `u` and `g` values where the budget allows, checked against the
/// closed forms, `g <= u`, the halving recursion and the bound summary.
pub fn bounds(k: u32, budget: &SearchBudget) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let g_budget = SearchBudget { max_k: budget.max_k.max(SearchBudget::for_g().max_k), ..*budget };
    let g_of = |k: u32, q: u32| -> Result<Option<usize>> {
        if k > g_budget.max_k {
            return Ok(None);
        }
        Ok(g_exact(k, q, &g_budget)?.value())
    };
    for q in 1..=k {
        let label = format!("q={q}");
        let u = if k <= budget.max_k { Some(u_exact(k, q, budget)?) } else { None };
        let g = if k <= g_budget.max_k { Some(g_exact(k, q, &g_budget)?) } else { None };
        let g_value = g.as_ref().and_then(|g| g.value());

        let summary = bound_summary(k, q, &g_budget)?;
        out.push(Check::new(
            format!("bound summary {label}"),
            k,
            summary.lower <= summary.upper,
            format!("{} ({}) <= {} ({})", summary.lower, summary.lower_source, summary.upper, summary.upper_source),
        ));

        match (u.as_ref().and_then(|u| u.result()), g.as_ref().and_then(|g| g.result())) {
            (Some(ur), Some(gr)) => {
                let certs = validate_certificate(ur)? && validate_certificate(gr)?;
                out.push(Check::new(
                    format!("g <= u {label}"),
                    k,
                    gr.value <= ur.value && certs,
                    format!("g={} u={} certificates valid {certs}", gr.value, ur.value),
                ));
                if let Some(cf) = u_closed_form(k, q) {
                    out.push(Check::new(format!("u closed form {label}"), k, cf == ur.value, format!("u={} closed form {cf}", ur.value)));
                }
            }
            (None, Some(gr)) => {
                out.push(Check::skipped(format!("g <= u {label}"), k, format!("g={}, u beyond budget", gr.value)));
            }
            _ => out.push(Check::skipped(format!("g <= u {label}"), k, "beyond budget")),
        }

        if q >= 2 && k >= 2 {
            match (g_value, g_of(k - 1, q - 1)?) {
                (Some(a), Some(b)) => out.push(Check::new(
                    format!("g halving {label}"),
                    k,
                    a >= 2 * b,
                    format!("g({k},{q})={a} >= 2 g({},{})={}", k - 1, q - 1, 2 * b),
                )),
                _ => out.push(Check::skipped(format!("g halving {label}"), k, "beyond budget")),
            }
        }
    }
    Ok(out)
}

/// 0 when everything passed, 1 on any failure, 3 when only skips remain.
pub fn exit_code(checks: &[Check]) -> u8 {
    if checks.iter().any(|c| c.status == Status::Fail) {
        1
    } else if checks.iter().any(|c| c.status == Status::Skipped) {
        3
    } else {
        0
    }
}
