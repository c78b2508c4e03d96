//! Two-phase primal simplex on a dense tableau.
//!
//! Generic over the scalar: floats use a tolerance, exact rationals use zero.
//! Dantzig pricing, a Harris ratio test, lexicographic tie-breaking on
//! degenerate runs and periodic rebuilds of the tableau from the input rows.

use std::fmt::Debug;

use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};
use thiserror::Error;

use crate::Rational;

pub trait LpScalar: Clone + Num + Signed + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync {
    /// Absolute tolerance for sign tests.
    fn tolerance() -> Self;
    fn from_rational(r: &Rational) -> Self;
}

impl LpScalar for f64 {
    fn tolerance() -> Self {
        1e-9
    }
    fn from_rational(r: &Rational) -> Self {
        r.to_f64().unwrap_or(f64::NAN)
    }
}

impl LpScalar for f32 {
    fn tolerance() -> Self {
        1e-5
    }
    fn from_rational(r: &Rational) -> Self {
        r.to_f32().unwrap_or(f32::NAN)
    }
}

impl LpScalar for Rational {
    fn tolerance() -> Self {
        num_traits::Zero::zero()
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Row<T> {
    pub coeffs: Vec<(usize, T)>,
    pub sense: Sense,
    pub rhs: T,
    pub name: String,
}

/// `maximize objective . x` subject to `rows`, `x >= 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram<T> {
    pub n: usize,
    pub objective: Vec<T>,
    pub rows: Vec<Row<T>>,
    pub var_names: Vec<String>,
}

impl<T: LpScalar> LinearProgram<T> {
    pub fn new(n: usize) -> Self {
        Self { n, objective: vec![T::zero(); n], rows: Vec::new(), var_names: (0..n).map(|j| format!("x{j}")).collect() }
    }

    pub fn add_row(&mut self, name: impl Into<String>, coeffs: Vec<(usize, T)>, sense: Sense, rhs: T) {
        self.rows.push(Row { coeffs, sense, rhs, name: name.into() });
    }

    /// Largest violation of any row or sign constraint at `x`.
    pub fn max_violation(&self, x: &[T]) -> T {
        let mut worst = T::zero();
        for v in x {
            if *v < T::zero() && -v.clone() > worst {
                worst = -v.clone();
            }
        }
        for r in &self.rows {
            let lhs = r.coeffs.iter().fold(T::zero(), |s, (j, a)| s + a.clone() * x[*j].clone());
            let gap = lhs - r.rhs.clone();
            let viol = match r.sense {
                Sense::Le => gap,
                Sense::Ge => -gap,
                Sense::Eq => gap.abs(),
            };
            if viol > worst {
                worst = viol;
            }
        }
        worst
    }

    pub fn evaluate(&self, x: &[T]) -> T {
        self.objective.iter().zip(x).fold(T::zero(), |s, (c, v)| s + c.clone() * v.clone())
    }

    /// Converts every coefficient through `f64`-exact rationals or floats.
    pub fn map<U: LpScalar>(&self, f: impl Fn(&T) -> U) -> LinearProgram<U> {
        LinearProgram {
            n: self.n,
            objective: self.objective.iter().map(&f).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| Row { coeffs: r.coeffs.iter().map(|(j, a)| (*j, f(a))).collect(), sense: r.sense, rhs: f(&r.rhs), name: r.name.clone() })
                .collect(),
            var_names: self.var_names.clone(),
        }
    }

    /// Text in the CPLEX LP file format.
    pub fn to_lp_format(&self) -> String {
        let term = |a: &T, name: &str, first: bool| {
            let v = a.to_f64().unwrap_or(f64::NAN);
            let sign = if v < 0.0 { "- " } else if first { "" } else { "+ " };
            format!("{sign}{} {name}", fmt_num(v.abs()))
        };
        let mut s = String::from("\\ generated by hardlab\nMaximize\n obj:");
        let mut first = true;
        for (j, c) in self.objective.iter().enumerate() {
            if !c.is_zero() {
                s += &format!(" {}", term(c, &self.var_names[j], first));
                first = false;
            }
        }
        if first {
            s += &format!(" 0 {}", self.var_names.first().map_or("x0", |v| v.as_str()));
        }
        s += "\nSubject To\n";
        for (i, r) in self.rows.iter().enumerate() {
            let name = if r.name.is_empty() { format!("r{i}") } else { r.name.clone() };
            s += &format!(" {name}:");
            let mut first = true;
            for (j, a) in &r.coeffs {
                if !a.is_zero() {
                    s += &format!(" {}", term(a, &self.var_names[*j], first));
                    first = false;
                }
            }
            if first {
                s += &format!(" 0 {}", self.var_names[0]);
            }
            let op = match r.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            s += &format!(" {op} {}\n", fmt_num(r.rhs.to_f64().unwrap_or(f64::NAN)));
        }
        s += "Bounds\n";
        for name in &self.var_names {
            s += &format!(" {name} >= 0\n");
        }
        s += "End\n";
        s
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v:.17e}")
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<T> {
    Optimal { value: T, x: Vec<T>, max_violation: T },
    /// Phase-1 optimum (total artificial infeasibility) above tolerance.
    Infeasible { phase1: T },
    Unbounded,
}

impl<T> LpOutcome<T> {
    pub fn is_feasible(&self) -> bool {
        !matches!(self, LpOutcome::Infeasible { .. })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("solution violates constraints by {0:e}")]
    Unstable(f64),
}

#[derive(Debug, Clone)]
pub struct Simplex<T> {
    pub tol: T,
    pub max_iter: usize,
    /// Consecutive degenerate pivots before the lexicographic rule.
    pub lex_after: usize,
    /// Pivots between rebuilds of the tableau (floats only).
    pub reinvert_every: usize,
    /// Post-solve residual above which the result is rejected.
    pub residual_limit: T,
}

impl<T: LpScalar> Default for Simplex<T> {
    fn default() -> Self {
        let tol = T::tolerance();
        let residual_limit = tol.clone() * T::from_f64(1e3).unwrap();
        Self { tol, max_iter: 200_000, lex_after: 50, reinvert_every: 500, residual_limit }
    }
}

struct Tableau<T> {
    m: usize,
    width: usize,
    /// `(m + 1) x (width + 1)`, row 0 is the objective, last column the rhs.
    t: Vec<T>,
    basis: Vec<usize>,
    banned: Vec<bool>,
    dead: Vec<bool>,
    /// Initial basic column of each row; their current entries form the
    /// inverse basis.
    init_cols: Vec<usize>,
    /// Initial tableau; row 0 is replaced by the phase cost on rebuild.
    orig: Vec<T>,
}

impl<T: LpScalar> Tableau<T> {
    #[inline]
    fn at(&self, i: usize, j: usize) -> &T {
        &self.t[i * (self.width + 1) + j]
    }

    fn rhs(&self, i: usize) -> &T {
        self.at(i, self.width)
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.width + 1;
        let p = self.t[r * w + q].clone();
        for j in 0..w {
            let v = std::mem::replace(&mut self.t[r * w + j], T::zero());
            self.t[r * w + j] = v / p.clone();
        }
        let prow: Vec<(usize, T)> = (0..w).filter(|&j| !self.t[r * w + j].is_zero()).map(|j| (j, self.t[r * w + j].clone())).collect();
        for i in 0..=self.m {
            if i == r || self.dead.get(i.wrapping_sub(1)).copied().unwrap_or(false) {
                continue;
            }
            let f = self.t[i * w + q].clone();
            if f.is_zero() {
                continue;
            }
            for (j, a) in &prow {
                let v = std::mem::replace(&mut self.t[i * w + j], T::zero());
                self.t[i * w + j] = v - f.clone() * a.clone();
            }
            self.t[i * w + q] = T::zero();
        }
        self.basis[r - 1] = q;
    }

    /// Rebuilds rows and objective from the original rows and `cost` for the
    /// current basis, with partial pivoting. Clears accumulated round-off.
    fn reinvert(&mut self, cost: &[T]) {
        let w = self.width + 1;
        let mut t = self.orig.clone();
        t[..self.width].clone_from_slice(cost);
        t[self.width] = T::zero();
        self.t = t;
        let cols = std::mem::take(&mut self.basis);
        let dead_cols: Vec<usize> = cols.iter().zip(&self.dead).filter(|(_, &d)| d).map(|(&c, _)| c).collect();
        self.dead = vec![false; self.m];
        self.basis = vec![usize::MAX; self.m];
        for &q in &cols {
            let r = (1..=self.m)
                .filter(|&i| self.basis[i - 1] == usize::MAX)
                .max_by(|&a, &b| self.t[a * w + q].abs().partial_cmp(&self.t[b * w + q].abs()).unwrap())
                .expect("square basis");
            self.pivot(r, q);
        }
        for i in 0..self.m {
            self.dead[i] = dead_cols.contains(&self.basis[i]);
        }
    }

    /// Runs simplex iterations on the current objective row. Leaving rows use
    /// a Harris two-pass test that prefers large pivots; after `lex_after`
    /// consecutive degenerate pivots, candidates are ranked
    /// lexicographically by the inverse basis instead.
    fn optimize(&mut self, s: &Simplex<T>, cost: &[T], iters: &mut usize) -> Result<bool, LpError> {
        let mut degenerate = 0usize;
        let mut since_reinvert = 0usize;
        let exact = s.tol.is_zero();
        loop {
            if *iters >= s.max_iter {
                return Err(LpError::IterationLimit(s.max_iter));
            }
            if !exact && since_reinvert >= s.reinvert_every {
                self.reinvert(cost);
                since_reinvert = 0;
            }
            let neg_tol = -s.tol.clone();
            let mut enter = None;
            let mut best = neg_tol.clone();
            for j in 0..self.width {
                if self.banned[j] {
                    continue;
                }
                let d = self.at(0, j);
                if *d < best {
                    best = d.clone();
                    enter = Some(j);
                }
            }
            let Some(q) = enter else { return Ok(true) };
            let zero = T::zero();
            let clamp = |v: &T| if *v < zero { zero.clone() } else { v.clone() };
            let col_max = (1..=self.m).filter(|&i| !self.dead[i - 1]).map(|i| self.at(i, q).abs()).fold(zero.clone(), |m, v| if v > m { v } else { m });
            let ptol = if exact { zero.clone() } else { s.tol.clone() * (T::one() + col_max) };
            let rows: Vec<usize> = (1..=self.m).filter(|&i| !self.dead[i - 1] && *self.at(i, q) > ptol).collect();
            if rows.is_empty() {
                return Ok(false);
            }
            let theta = rows
                .iter()
                .map(|&i| (clamp(self.rhs(i)) + s.tol.clone()) / self.at(i, q).clone())
                .fold(None, |m: Option<T>, v| match m {
                    Some(m) if m <= v => Some(m),
                    _ => Some(v),
                })
                .expect("non-empty");
            let mut cands: Vec<usize> = rows.into_iter().filter(|&i| clamp(self.rhs(i)) / self.at(i, q).clone() <= theta).collect();
            let r = if degenerate >= s.lex_after {
                let big = cands.iter().map(|&i| self.at(i, q).clone()).fold(zero.clone(), |m, v| if v > m { v } else { m });
                let floor = big * T::from_f64(1e-3).unwrap();
                cands.retain(|&i| *self.at(i, q) >= floor);
                let mut k = 0;
                while cands.len() > 1 && k < self.init_cols.len() {
                    let c = self.init_cols[k];
                    let key = |i: usize| self.at(i, c).clone() / self.at(i, q).clone();
                    let lo = cands.iter().map(|&i| key(i)).fold(None, |m: Option<T>, v| match m {
                        Some(m) if m <= v => Some(m),
                        _ => Some(v),
                    });
                    let lo = lo.expect("non-empty");
                    cands.retain(|&i| key(i) <= lo.clone() + s.tol.clone());
                    k += 1;
                }
                cands[0]
            } else {
                *cands.iter().max_by(|&&a, &&b| self.at(a, q).partial_cmp(self.at(b, q)).unwrap()).expect("non-empty")
            };
            let ratio = clamp(self.rhs(r)) / self.at(r, q).clone();
            if ratio <= s.tol {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, q);
            *iters += 1;
            since_reinvert += 1;
        }
    }
}

impl<T: LpScalar> Simplex<T> {
    pub fn solve(&self, lp: &LinearProgram<T>) -> Result<LpOutcome<T>, LpError> {
        let n = lp.n;
        let m = lp.rows.len();
        let mut slack_cols = 0;
        let mut art_cols = 0;
        let mut rows: Vec<(Vec<(usize, T)>, Sense, T)> = Vec::with_capacity(m);
        for r in &lp.rows {
            let (coeffs, sense, rhs) = if r.rhs < T::zero() {
                let flip = match r.sense {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                    Sense::Eq => Sense::Eq,
                };
                (r.coeffs.iter().map(|(j, a)| (*j, -a.clone())).collect(), flip, -r.rhs.clone())
            } else {
                (r.coeffs.clone(), r.sense, r.rhs.clone())
            };
            if sense != Sense::Eq {
                slack_cols += 1;
            }
            if sense != Sense::Le {
                art_cols += 1;
            }
            rows.push((coeffs, sense, rhs));
        }
        let width = n + slack_cols + art_cols;
        let w = width + 1;
        let mut tab = Tableau {
            m,
            width,
            t: vec![T::zero(); (m + 1) * w],
            basis: vec![0; m],
            banned: vec![false; width],
            dead: vec![false; m],
            init_cols: vec![0; m],
            orig: Vec::new(),
        };
        let mut next_slack = n;
        let mut next_art = n + slack_cols;
        let mut is_art = vec![false; width];
        for (i, (coeffs, sense, rhs)) in rows.iter().enumerate() {
            let base = (i + 1) * w;
            for (j, a) in coeffs {
                let v = std::mem::replace(&mut tab.t[base + j], T::zero());
                tab.t[base + j] = v + a.clone();
            }
            tab.t[base + width] = rhs.clone();
            match sense {
                Sense::Le => {
                    tab.t[base + next_slack] = T::one();
                    tab.basis[i] = next_slack;
                    next_slack += 1;
                }
                Sense::Ge => {
                    tab.t[base + next_slack] = -T::one();
                    next_slack += 1;
                    tab.t[base + next_art] = T::one();
                    tab.basis[i] = next_art;
                    is_art[next_art] = true;
                    next_art += 1;
                }
                Sense::Eq => {
                    tab.t[base + next_art] = T::one();
                    tab.basis[i] = next_art;
                    is_art[next_art] = true;
                    next_art += 1;
                }
            }
        }

        tab.init_cols = tab.basis.clone();
        tab.orig = tab.t.clone();
        let mut iters = 0;
        if art_cols > 0 {
            let cost: Vec<T> = (0..width).map(|j| if is_art[j] { T::one() } else { T::zero() }).collect();
            tab.t[..width].clone_from_slice(&cost);
            for i in 0..m {
                if is_art[tab.basis[i]] {
                    for j in 0..w {
                        let v = std::mem::replace(&mut tab.t[j], T::zero());
                        tab.t[j] = v - tab.t[(i + 1) * w + j].clone();
                    }
                }
            }
            tab.optimize(self, &cost, &mut iters)?;
            let infeas = -tab.t[width].clone();
            if infeas > self.tol.clone() * T::from_usize(m.max(1)).unwrap() {
                return Ok(LpOutcome::Infeasible { phase1: infeas });
            }
            for i in 0..m {
                if !is_art[tab.basis[i]] {
                    continue;
                }
                let pick = (0..width)
                    .filter(|&j| !is_art[j])
                    .max_by(|&a, &b| tab.at(i + 1, a).abs().partial_cmp(&tab.at(i + 1, b).abs()).unwrap());
                match pick {
                    Some(j) if tab.at(i + 1, j).abs() > self.tol => tab.pivot(i + 1, j),
                    _ => {
                        tab.dead[i] = true;
                    }
                }
            }
            for j in 0..width {
                if is_art[j] {
                    tab.banned[j] = true;
                }
            }
        }

        let cost: Vec<T> = (0..width).map(|j| if j < n { -lp.objective[j].clone() } else { T::zero() }).collect();
        tab.t[..width].clone_from_slice(&cost);
        tab.t[width] = T::zero();
        for i in 0..m {
            if tab.dead[i] {
                continue;
            }
            let b = tab.basis[i];
            let c = if b < n { lp.objective[b].clone() } else { T::zero() };
            if c.is_zero() {
                continue;
            }
            for j in 0..w {
                let v = std::mem::replace(&mut tab.t[j], T::zero());
                tab.t[j] = v + c.clone() * tab.t[(i + 1) * w + j].clone();
            }
        }
        if !tab.optimize(self, &cost, &mut iters)? {
            return Ok(LpOutcome::Unbounded);
        }
        let mut x = vec![T::zero(); n];
        for i in 0..m {
            if !tab.dead[i] && tab.basis[i] < n {
                let v = tab.rhs(i + 1).clone();
                x[tab.basis[i]] = if v < T::zero() { T::zero() } else { v };
            }
        }
        let max_violation = lp.max_violation(&x);
        if max_violation > self.residual_limit {
            return Err(LpError::Unstable(max_violation.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(LpOutcome::Optimal { value: lp.evaluate(&x), x, max_violation })
    }
}
