//! Two-phase dense simplex over exact rationals with Bland's pivot rule.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::rational::{dot, Q};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rel {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<Q>,
    pub rel: Rel,
    pub rhs: Q,
}

impl Constraint {
    pub fn new(coeffs: Vec<Q>, rel: Rel, rhs: Q) -> Self {
        Constraint { coeffs, rel, rhs }
    }

    pub fn le(coeffs: Vec<Q>, rhs: Q) -> Self {
        Self::new(coeffs, Rel::Le, rhs)
    }

    pub fn ge(coeffs: Vec<Q>, rhs: Q) -> Self {
        Self::new(coeffs, Rel::Ge, rhs)
    }

    pub fn eq(coeffs: Vec<Q>, rhs: Q) -> Self {
        Self::new(coeffs, Rel::Eq, rhs)
    }

    pub fn holds(&self, x: &[Q]) -> bool {
        let lhs = dot(&self.coeffs, x);
        match self.rel {
            Rel::Le => lhs <= self.rhs,
            Rel::Eq => lhs == self.rhs,
            Rel::Ge => lhs >= self.rhs,
        }
    }

    /// Same constraint with `extra` zero coefficients appended.
    pub fn padded(&self, extra: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.extend(std::iter::repeat_with(Q::zero).take(extra));
        Constraint::new(coeffs, self.rel, self.rhs.clone())
    }
}

/// `Σ x = 1` and `x ≥ 0` rows for an `m`-dimensional simplex.
pub fn simplex_constraints(m: usize) -> Vec<Constraint> {
    let mut out = vec![Constraint::eq(vec![Q::one(); m], Q::one())];
    for i in 0..m {
        out.push(Constraint::ge(super::rational::unit(m, i), Q::zero()));
    }
    out
}

pub fn in_simplex(x: &[Q]) -> bool {
    x.iter().all(|v| !v.is_negative()) && x.iter().sum::<Q>().is_one()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<Q>,
    pub sense: Sense,
    pub constraints: Vec<Constraint>,
    /// Per-variable sign restriction; free variables are split internally.
    pub nonneg: Vec<bool>,
}

impl LinearProgram {
    pub fn new(num_vars: usize, objective: Vec<Q>, sense: Sense) -> Self {
        LinearProgram {
            num_vars,
            objective,
            sense,
            constraints: Vec::new(),
            nonneg: vec![false; num_vars],
        }
    }

    /// Program over the probability simplex: all variables nonnegative, summing to one.
    pub fn over_simplex(objective: Vec<Q>, sense: Sense) -> Self {
        let m = objective.len();
        let mut lp = Self::new(m, objective, sense);
        lp.nonneg = vec![true; m];
        lp.constraints
            .push(Constraint::eq(vec![Q::one(); m], Q::one()));
        lp
    }

    pub fn with(mut self, cons: impl IntoIterator<Item = Constraint>) -> Self {
        self.constraints.extend(cons);
        self
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::MalformedInput(what));
        if self.objective.len() != self.num_vars {
            return bad(format!(
                "objective has {} coefficients, expected {}",
                self.objective.len(),
                self.num_vars
            ));
        }
        if self.nonneg.len() != self.num_vars {
            return bad("sign vector length mismatch".into());
        }
        for (k, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != self.num_vars {
                return bad(format!(
                    "constraint {k} has {} coefficients, expected {}",
                    c.coeffs.len(),
                    self.num_vars
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpResult {
    Optimal { value: Q, point: Vec<Q> },
    Infeasible,
    Unbounded,
}

impl LpResult {
    pub fn optimal(self) -> Option<(Q, Vec<Q>)> {
        match self {
            LpResult::Optimal { value, point } => Some((value, point)),
            _ => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        !matches!(self, LpResult::Infeasible)
    }
}

struct Tableau {
    rows: Vec<Vec<Q>>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, obj: &mut [Q], r: usize, c: usize) {
        let inv = self.rows[r][c].recip();
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        let prow = self.rows[r].clone();
        for (k, row) in self.rows.iter_mut().enumerate() {
            if k == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, p) in row.iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *v -= &f * p;
                }
            }
        }
        if !obj[c].is_zero() {
            let f = obj[c].clone();
            for (v, p) in obj.iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *v -= &f * p;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Objective row for maximizing `cost`: reduced costs `-c_j + c_B B^-1 A_j`, value in last slot.
    fn objective_row(&self, cost: &[Q]) -> Vec<Q> {
        let mut obj: Vec<Q> = (0..=self.ncols)
            .map(|j| if j < self.ncols { -cost[j].clone() } else { Q::zero() })
            .collect();
        for (r, &b) in self.basis.iter().enumerate() {
            if !obj[b].is_zero() {
                let f = obj[b].clone();
                for (v, p) in obj.iter_mut().zip(&self.rows[r]) {
                    if !p.is_zero() {
                        *v -= &f * p;
                    }
                }
            }
        }
        obj
    }

    /// Maximizes `cost` over columns flagged in `allowed`. Returns false when unbounded.
    fn optimize(&mut self, cost: &[Q], allowed: &[bool]) -> (bool, Vec<Q>) {
        let mut obj = self.objective_row(cost);
        loop {
            let entering = (0..self.ncols).find(|&j| allowed[j] && obj[j].is_negative());
            let Some(c) = entering else {
                return (true, obj);
            };
            let mut best: Option<(usize, Q)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                if row[c].is_positive() {
                    let ratio = &row[self.ncols] / &row[c];
                    let better = match &best {
                        None => true,
                        Some((br, bv)) => {
                            ratio < *bv || (ratio == *bv && self.basis[r] < self.basis[*br])
                        }
                    };
                    if better {
                        best = Some((r, ratio));
                    }
                }
            }
            match best {
                None => return (false, obj),
                Some((r, _)) => self.pivot(&mut obj, r, c),
            }
        }
    }
}

/// Scales a row by a positive factor so every entry is an integer with no common divisor.
fn integral_row(coeffs: Vec<Q>, rel: Rel, rhs: Q) -> (Vec<Q>, Rel, Q) {
    let entries = || coeffs.iter().chain(std::iter::once(&rhs)).filter(|v| !v.is_zero());
    let lcm = entries().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let gcd = entries().fold(BigInt::zero(), |acc, v| acc.gcd(&(v.numer() * &lcm / v.denom())));
    if gcd.is_zero() {
        return (coeffs, rel, rhs);
    }
    let f = Q::new(lcm, gcd);
    if f.is_one() {
        return (coeffs, rel, rhs);
    }
    let scaled = coeffs.into_iter().map(|v| v * &f).collect();
    (scaled, rel, rhs * f)
}

pub fn lp_solve_exact(lp: &LinearProgram) -> Result<LpResult> {
    lp.validate()?;
    // Column layout: structural columns (free variables split in two), then slacks, then artificials.
    let mut var_cols: Vec<(usize, Option<usize>)> = Vec::with_capacity(lp.num_vars);
    let mut ncol = 0;
    for v in 0..lp.num_vars {
        if lp.nonneg[v] {
            var_cols.push((ncol, None));
            ncol += 1;
        } else {
            var_cols.push((ncol, Some(ncol + 1)));
            ncol += 2;
        }
    }
    let nstruct = ncol;
    let rows_in: Vec<(Vec<Q>, Rel, Q)> = lp
        .constraints
        .iter()
        .map(|c| {
            let mut coeffs = vec![Q::zero(); nstruct];
            for (v, a) in c.coeffs.iter().enumerate() {
                let (p, n) = var_cols[v];
                coeffs[p] = a.clone();
                if let Some(n) = n {
                    coeffs[n] = -a.clone();
                }
            }
            // Zero-rhs `≥` rows flip to `≤` so their slack can start in the basis.
            let flip = c.rhs.is_negative() || (c.rhs.is_zero() && c.rel == Rel::Ge);
            let (coeffs, rel, rhs) = if flip {
                let rel = match c.rel {
                    Rel::Le => Rel::Ge,
                    Rel::Ge => Rel::Le,
                    Rel::Eq => Rel::Eq,
                };
                (coeffs.into_iter().map(|x| -x).collect(), rel, -c.rhs.clone())
            } else {
                (coeffs, c.rel, c.rhs.clone())
            };
            integral_row(coeffs, rel, rhs)
        })
        .collect();
    let nslack = rows_in.iter().filter(|r| r.1 != Rel::Eq).count();
    let nart = rows_in.iter().filter(|r| r.1 != Rel::Le).count();
    let ncols = nstruct + nslack + nart;
    let mut rows = Vec::with_capacity(rows_in.len());
    let mut basis = Vec::with_capacity(rows_in.len());
    let (mut s, mut a) = (nstruct, nstruct + nslack);
    for (coeffs, rel, rhs) in rows_in {
        let mut row = coeffs;
        row.resize(ncols + 1, Q::zero());
        row[ncols] = rhs;
        match rel {
            Rel::Le => {
                row[s] = Q::one();
                basis.push(s);
                s += 1;
            }
            Rel::Ge => {
                row[s] = -Q::one();
                s += 1;
                row[a] = Q::one();
                basis.push(a);
                a += 1;
            }
            Rel::Eq => {
                row[a] = Q::one();
                basis.push(a);
                a += 1;
            }
        }
        rows.push(row);
    }
    let mut t = Tableau { rows, basis, ncols };
    let first_art = nstruct + nslack;
    let all = vec![true; ncols];

    if nart > 0 {
        let cost: Vec<Q> = (0..ncols)
            .map(|j| if j >= first_art { -Q::one() } else { Q::zero() })
            .collect();
        let (_, obj) = t.optimize(&cost, &all);
        if !obj[ncols].is_zero() {
            return Ok(LpResult::Infeasible);
        }
        // Drive zero-level artificials out of the basis; drop redundant rows.
        let mut r = 0;
        while r < t.rows.len() {
            if t.basis[r] >= first_art {
                match (0..first_art).find(|&c| !t.rows[r][c].is_zero()) {
                    Some(c) => {
                        let mut dummy = vec![Q::zero(); ncols + 1];
                        t.pivot(&mut dummy, r, c);
                        r += 1;
                    }
                    None => {
                        t.rows.remove(r);
                        t.basis.remove(r);
                    }
                }
            } else {
                r += 1;
            }
        }
    }

    let sign = match lp.sense {
        Sense::Max => Q::one(),
        Sense::Min => -Q::one(),
    };
    let mut cost = vec![Q::zero(); ncols];
    for v in 0..lp.num_vars {
        let (p, n) = var_cols[v];
        cost[p] = &sign * &lp.objective[v];
        if let Some(n) = n {
            cost[n] = -&cost[p];
        }
    }
    let allowed: Vec<bool> = (0..ncols).map(|j| j < first_art).collect();
    let (bounded, _) = t.optimize(&cost, &allowed);
    if !bounded {
        return Ok(LpResult::Unbounded);
    }
    let mut colval = vec![Q::zero(); ncols];
    for (r, &b) in t.basis.iter().enumerate() {
        colval[b] = t.rows[r][ncols].clone();
    }
    let point: Vec<Q> = var_cols
        .iter()
        .map(|&(p, n)| match n {
            Some(n) => &colval[p] - &colval[n],
            None => colval[p].clone(),
        })
        .collect();
    let value = dot(&lp.objective, &point);
    Ok(LpResult::Optimal { value, point })
}

/// Optimizes `objective` over `{x : constraints}` with the given sign restrictions.
pub fn optimize(
    objective: &[Q],
    sense: Sense,
    constraints: &[Constraint],
    nonneg: &[bool],
) -> Result<LpResult> {
    let mut lp = LinearProgram::new(objective.len(), objective.to_vec(), sense);
    lp.nonneg = nonneg.to_vec();
    lp.constraints = constraints.to_vec();
    lp_solve_exact(&lp)
}

pub fn is_feasible(num_vars: usize, constraints: &[Constraint], nonneg: &[bool]) -> Result<bool> {
    Ok(optimize(&vec![Q::zero(); num_vars], Sense::Max, constraints, nonneg)?.is_feasible())
}

/// Lexicographically smallest point of a bounded polyhedron, or `None` if it is empty.
pub fn lex_min_point(
    num_vars: usize,
    constraints: &[Constraint],
    nonneg: &[bool],
) -> Result<Option<Vec<Q>>> {
    let mut cons = constraints.to_vec();
    let mut last = None;
    for k in 0..num_vars {
        let obj = super::rational::unit(num_vars, k);
        match optimize(&obj, Sense::Min, &cons, nonneg)? {
            LpResult::Infeasible => return Ok(None),
            LpResult::Unbounded => return Err(Error::Unbounded),
            LpResult::Optimal { value, point } => {
                cons.push(Constraint::eq(obj, value));
                last = Some(point);
            }
        }
    }
    if num_vars == 0 {
        return Ok(if is_feasible(0, constraints, nonneg)? { Some(vec![]) } else { None });
    }
    Ok(last)
}

/// Optimum of `objective` together with the lexicographically smallest optimal point.
pub fn lex_optimum(
    objective: &[Q],
    sense: Sense,
    constraints: &[Constraint],
    nonneg: &[bool],
) -> Result<Option<(Q, Vec<Q>)>> {
    let n = objective.len();
    match optimize(objective, sense, constraints, nonneg)? {
        LpResult::Infeasible => Ok(None),
        LpResult::Unbounded => Err(Error::Unbounded),
        LpResult::Optimal { value, .. } => {
            let mut cons = constraints.to_vec();
            cons.push(Constraint::eq(objective.to_vec(), value.clone()));
            let p = lex_min_point(n, &cons, nonneg)?
                .ok_or_else(|| Error::InternalVerification("optimal face vanished".into()))?;
            Ok(Some((value, p)))
        }
    }
}

/// Simplex-restricted convenience wrappers: variables are a point of the `m`-simplex.
pub mod on_simplex {
    use super::*;

    fn with_simplex(m: usize, extra: &[Constraint]) -> Vec<Constraint> {
        let mut cons = Vec::with_capacity(extra.len() + 1);
        cons.push(Constraint::eq(vec![Q::one(); m], Q::one()));
        cons.extend_from_slice(extra);
        cons
    }

    pub fn optimize(objective: &[Q], sense: Sense, extra: &[Constraint]) -> Result<LpResult> {
        let m = objective.len();
        super::optimize(objective, sense, &with_simplex(m, extra), &vec![true; m])
    }

    pub fn value(objective: &[Q], sense: Sense, extra: &[Constraint]) -> Result<Option<Q>> {
        Ok(optimize(objective, sense, extra)?.optimal().map(|(v, _)| v))
    }

    pub fn lex_optimum(
        objective: &[Q],
        sense: Sense,
        extra: &[Constraint],
    ) -> Result<Option<(Q, Vec<Q>)>> {
        let m = objective.len();
        super::lex_optimum(objective, sense, &with_simplex(m, extra), &vec![true; m])
    }

    pub fn lex_min_point(m: usize, extra: &[Constraint]) -> Result<Option<Vec<Q>>> {
        super::lex_min_point(m, &with_simplex(m, extra), &vec![true; m])
    }

    pub fn is_feasible(m: usize, extra: &[Constraint]) -> Result<bool> {
        super::is_feasible(m, &with_simplex(m, extra), &vec![true; m])
    }
}
