//! Exact phase-1 simplex over free variables.
//!
//! Equality rows are eliminated up front by Gauss-Jordan, so the tableau only
//! carries the inequality rows. Inequalities whose right-hand side is
//! nonpositive start with their surplus variable basic and need no artificial.

use num_traits::{Signed, Zero};

use super::Rational;
use crate::error::{Error, Result};

/// Feasibility problem `A_eq x = b_eq`, `A_ge x >= b_ge` over free variables.
#[derive(Debug, Clone, Default)]
pub struct LpProblem {
    n: usize,
    eq: Vec<(Vec<Rational>, Rational)>,
    ge: Vec<(Vec<Rational>, Rational)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Feasible(Vec<Rational>),
    Infeasible,
}

impl LpOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, LpOutcome::Feasible(_))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LpStats {
    pub pivots: usize,
    pub rows: usize,
    pub columns: usize,
}

impl LpProblem {
    pub fn new(n: usize) -> Self {
        Self { n, ..Self::default() }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn add_eq(&mut self, row: Vec<Rational>, rhs: Rational) -> Result<&mut Self> {
        self.check(&row)?;
        self.eq.push((row, rhs));
        Ok(self)
    }

    pub fn add_ge(&mut self, row: Vec<Rational>, rhs: Rational) -> Result<&mut Self> {
        self.check(&row)?;
        self.ge.push((row, rhs));
        Ok(self)
    }

    fn check(&self, row: &[Rational]) -> Result<()> {
        if row.len() != self.n {
            return Err(Error::LpWidth { found: row.len(), expected: self.n });
        }
        Ok(())
    }

    pub fn equalities(&self) -> &[(Vec<Rational>, Rational)] {
        &self.eq
    }

    pub fn inequalities(&self) -> &[(Vec<Rational>, Rational)] {
        &self.ge
    }

    /// Checks a candidate point against every row by exact substitution.
    pub fn satisfied_by(&self, x: &[Rational]) -> bool {
        x.len() == self.n
            && self.eq.iter().all(|(r, b)| super::dot(r, x) == *b)
            && self.ge.iter().all(|(r, b)| super::dot(r, x) >= *b)
    }
}

pub fn lp_feasible(p: &LpProblem) -> Result<LpOutcome> {
    lp_feasible_with_stats(p).map(|(o, _)| o)
}

/// Like [`lp_feasible`], also reporting tableau size and pivot count.
pub fn lp_feasible_with_stats(p: &LpProblem) -> Result<(LpOutcome, LpStats)> {
    for (r, _) in p.eq.iter().chain(&p.ge) {
        p.check(r)?;
    }
    let mut stats = LpStats::default();
    let Some(elim) = eliminate_equalities(p) else {
        return Ok((LpOutcome::Infeasible, stats));
    };

    // substitute x_p = c_p - sum_f a_pf x_f into every inequality
    let m = elim.free.len();
    let mut rows = Vec::with_capacity(p.ge.len());
    for (row, rhs) in &p.ge {
        let mut g = vec![Rational::zero(); m];
        let mut b = rhs.clone();
        for (fi, &f) in elim.free.iter().enumerate() {
            g[fi] += &row[f];
        }
        for (pi, &pv) in elim.pivot_vars.iter().enumerate() {
            if row[pv].is_zero() {
                continue;
            }
            b -= &row[pv] * &elim.constants[pi];
            for fi in 0..m {
                if !elim.coeffs[pi][fi].is_zero() {
                    g[fi] -= &row[pv] * &elim.coeffs[pi][fi];
                }
            }
        }
        if g.iter().all(Zero::is_zero) {
            if b.is_positive() {
                return Ok((LpOutcome::Infeasible, stats));
            }
            continue;
        }
        rows.push((g, b));
    }

    let free_vals = match solve_inequalities(m, &rows, &mut stats) {
        Some(v) => v,
        None => return Ok((LpOutcome::Infeasible, stats)),
    };

    let mut x = vec![Rational::zero(); p.n];
    for (fi, &f) in elim.free.iter().enumerate() {
        x[f] = free_vals[fi].clone();
    }
    for (pi, &pv) in elim.pivot_vars.iter().enumerate() {
        let mut v = elim.constants[pi].clone();
        for fi in 0..m {
            if !elim.coeffs[pi][fi].is_zero() {
                v -= &elim.coeffs[pi][fi] * &free_vals[fi];
            }
        }
        x[pv] = v;
    }
    debug_assert!(p.satisfied_by(&x));
    Ok((LpOutcome::Feasible(x), stats))
}

struct Elimination {
    pivot_vars: Vec<usize>,
    /// `constants[i] - coeffs[i] . x_free` gives pivot variable `i`.
    constants: Vec<Rational>,
    coeffs: Vec<Vec<Rational>>,
    free: Vec<usize>,
}

/// Gauss-Jordan on the equality rows; `None` if they are inconsistent.
fn eliminate_equalities(p: &LpProblem) -> Option<Elimination> {
    let n = p.n;
    let mut a: Vec<Vec<Rational>> = p
        .eq
        .iter()
        .map(|(r, b)| r.iter().cloned().chain(std::iter::once(b.clone())).collect())
        .collect();
    let mut pivot_vars = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let Some(pr) = (r..a.len()).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, pr);
        let inv = a[r][c].recip();
        for v in a[r].iter_mut() {
            *v *= &inv;
        }
        let pivot_row = a[r].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (j, pv) in pivot_row.iter().enumerate() {
                if !pv.is_zero() {
                    row[j] -= &f * pv;
                }
            }
        }
        pivot_vars.push(c);
        r += 1;
    }
    if a[r..].iter().any(|row| !row[n].is_zero()) {
        return None;
    }
    let mut is_pivot = vec![false; n];
    for &c in &pivot_vars {
        is_pivot[c] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
    let constants = a[..r].iter().map(|row| row[n].clone()).collect();
    let coeffs = a[..r]
        .iter()
        .map(|row| free.iter().map(|&f| row[f].clone()).collect())
        .collect();
    Some(Elimination { pivot_vars, constants, coeffs, free })
}

/// Phase-1 simplex with Bland's rule for `g_r . x >= b_r` over free `x`.
fn solve_inequalities(
    m: usize,
    rows: &[(Vec<Rational>, Rational)],
    stats: &mut LpStats,
) -> Option<Vec<Rational>> {
    if rows.is_empty() {
        return Some(vec![Rational::zero(); m]);
    }
    let nrows = rows.len();
    // columns: x+ (m), x- (m), surplus (nrows), artificials (one per row with b > 0)
    let art_rows: Vec<usize> = (0..nrows).filter(|&r| rows[r].1.is_positive()).collect();
    let surplus0 = 2 * m;
    let art0 = surplus0 + nrows;
    let ncols = art0 + art_rows.len();
    let rhs = ncols;
    stats.rows = nrows;
    stats.columns = ncols;

    let mut t = vec![vec![Rational::zero(); ncols + 1]; nrows];
    let mut basis = vec![0usize; nrows];
    let mut art_iter = 0;
    for (r, (g, b)) in rows.iter().enumerate() {
        let row = &mut t[r];
        if b.is_positive() {
            // g x - s + a = b
            for j in 0..m {
                row[j] = g[j].clone();
                row[m + j] = -&g[j];
            }
            row[surplus0 + r] = -Rational::from_integer(1.into());
            row[art0 + art_iter] = Rational::from_integer(1.into());
            row[rhs] = b.clone();
            basis[r] = art0 + art_iter;
            art_iter += 1;
        } else {
            // -g x + s = -b
            for j in 0..m {
                row[j] = -&g[j];
                row[m + j] = g[j].clone();
            }
            row[surplus0 + r] = Rational::from_integer(1.into());
            row[rhs] = -b;
            basis[r] = surplus0 + r;
        }
    }

    // reduced costs for min sum(artificials)
    let mut obj = vec![Rational::zero(); ncols + 1];
    for &r in &art_rows {
        for j in 0..art0 {
            if !t[r][j].is_zero() {
                obj[j] -= &t[r][j];
            }
        }
        obj[rhs] -= &t[r][rhs];
    }

    loop {
        let Some(enter) = (0..art0).find(|&j| obj[j].is_negative()) else {
            break;
        };
        let mut leave: Option<(usize, Rational)> = None;
        for r in 0..nrows {
            if !t[r][enter].is_positive() {
                continue;
            }
            let ratio = &t[r][rhs] / &t[r][enter];
            let better = match &leave {
                None => true,
                Some((lr, best)) => ratio < *best || (ratio == *best && basis[r] < basis[*lr]),
            };
            if better {
                leave = Some((r, ratio));
            }
        }
        // phase-1 objective is bounded below by 0, so a leaving row exists
        let (lr, _) = leave.expect("phase-1 objective is bounded");
        pivot(&mut t, &mut obj, lr, enter);
        basis[lr] = enter;
        stats.pivots += 1;
    }

    if !obj[rhs].is_zero() {
        return None;
    }
    let mut x = vec![Rational::zero(); m];
    for (r, &b) in basis.iter().enumerate() {
        if b < m {
            x[b] += &t[r][rhs];
        } else if b < 2 * m {
            x[b - m] -= &t[r][rhs];
        }
    }
    Some(x)
}

fn pivot(t: &mut [Vec<Rational>], obj: &mut [Rational], lr: usize, col: usize) {
    let inv = t[lr][col].recip();
    for v in t[lr].iter_mut() {
        if !v.is_zero() {
            *v *= &inv;
        }
    }
    let prow = t[lr].clone();
    let nz: Vec<usize> = (0..prow.len()).filter(|&j| !prow[j].is_zero()).collect();
    let eliminate = |row: &mut [Rational]| {
        if row[col].is_zero() {
            return;
        }
        let f = row[col].clone();
        for &j in &nz {
            row[j] -= &f * &prow[j];
        }
    };
    for (r, row) in t.iter_mut().enumerate() {
        if r != lr {
            eliminate(row);
        }
    }
    eliminate(obj);
}
