//! Exact weighted MAX-k-CUT under partial assignments.
//!
//! Two backends share one contract: the exact optimum and the
//! lexicographically smallest maximizing assignment. Weights are lifted to a
//! common denominator once so that the search runs on `i64`.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::{parse_rational, Rational};

const UNSET: u8 = u8::MAX;
const DEADLINE_POLL: u64 = 1 << 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("deadline exceeded")]
    Timeout,
    #[error("weights do not fit in 64-bit integers after scaling")]
    Overflow,
    #[error("invalid instance: {0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {msg}")]
pub struct FormatError {
    pub line: usize,
    pub msg: String,
}

/// Weighted clause `w * [color(a) != color(b)]`, 0-based ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub a: usize,
    pub b: usize,
    pub w: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KCutInstance {
    pub k: usize,
    pub m: usize,
    pub clauses: Vec<Clause>,
    pub fixed: BTreeMap<usize, u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Brute,
    Bnb,
}

impl std::str::FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "brute" => Ok(Self::Brute),
            "bnb" => Ok(Self::Bnb),
            _ => Err(format!("unknown backend {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub value: Rational,
    /// Full assignment including the fixed variables.
    pub assignment: Vec<u8>,
}

impl KCutInstance {
    pub fn new(k: usize, m: usize) -> Self {
        Self { k, m, clauses: Vec::new(), fixed: BTreeMap::new() }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if self.k < 1 || self.k > 64 {
            return Err(SolveError::Invalid(format!("k = {} out of range", self.k)));
        }
        for c in &self.clauses {
            if c.a >= self.m || c.b >= self.m {
                return Err(SolveError::Invalid(format!("clause ({}, {}) out of range", c.a, c.b)));
            }
            if c.w < Rational::zero() {
                return Err(SolveError::Invalid("negative weight".into()));
            }
        }
        for (&v, &c) in &self.fixed {
            if v >= self.m || c as usize >= self.k {
                return Err(SolveError::Invalid(format!("fix {v} {c} out of range")));
            }
        }
        Ok(())
    }

    pub fn total_weight(&self) -> Rational {
        self.clauses.iter().map(|c| c.w.clone()).sum()
    }

    /// Objective at a full assignment.
    pub fn value(&self, assignment: &[u8]) -> Rational {
        self.clauses.iter().filter(|c| assignment[c.a] != assignment[c.b]).map(|c| c.w.clone()).sum()
    }

    pub fn free_count(&self) -> usize {
        self.m - self.fixed.len()
    }

    /// Text form: `k=K vars=M`, then `a b w` clause lines (1-based), then
    /// optional `fix var color` lines.
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        });
        let (hl, header) = lines.next().ok_or(FormatError { line: 1, msg: "missing header".into() })?;
        let (k, m) = parse_header(header).ok_or(FormatError { line: hl + 1, msg: "expected `k=<int> vars=<int>`".into() })?;
        let mut inst = KCutInstance::new(k, m);
        for (i, line) in lines {
            let err = |msg: &str| FormatError { line: i + 1, msg: msg.to_string() };
            let toks: Vec<&str> = line.split_whitespace().collect();
            let id = |t: &str| -> Result<usize, FormatError> {
                let v: usize = t.parse().map_err(|_| err("bad variable id"))?;
                if v == 0 || v > m {
                    return Err(err("variable id out of range"));
                }
                Ok(v - 1)
            };
            match toks.as_slice() {
                ["fix", v, c] => {
                    let c: u8 = c.parse().map_err(|_| err("bad color"))?;
                    if c as usize >= k {
                        return Err(err("color out of range"));
                    }
                    inst.fixed.insert(id(v)?, c);
                }
                [a, b, w] => {
                    let w = parse_rational(w).ok_or_else(|| err("bad weight"))?;
                    if w <= Rational::zero() {
                        return Err(err("weight must be positive"));
                    }
                    inst.clauses.push(Clause { a: id(a)?, b: id(b)?, w });
                }
                _ => return Err(err("expected `a b w` or `fix var color`")),
            }
        }
        Ok(inst)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("k={} vars={}\n", self.k, self.m);
        for c in &self.clauses {
            s += &format!("{} {} {}\n", c.a + 1, c.b + 1, c.w);
        }
        for (v, c) in &self.fixed {
            s += &format!("fix {} {}\n", v + 1, c);
        }
        s
    }
}

pub(crate) fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut k = None;
    let mut m = None;
    for tok in line.split_whitespace() {
        let (key, val) = tok.split_once('=')?;
        match key {
            "k" => k = Some(val.parse().ok()?),
            "vars" => m = Some(val.parse().ok()?),
            _ => return None,
        }
    }
    Some((k?, m?))
}

impl fmt::Display for KCutInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Integer form of an instance's clause graph: parallel clauses merged,
/// loops dropped (they never score).
#[derive(Debug, Clone)]
pub struct Compiled {
    pub k: usize,
    pub m: usize,
    pub adj: Vec<Vec<(usize, i64)>>,
    pub scale: BigInt,
}

impl Compiled {
    pub fn new(k: usize, m: usize, clauses: &[Clause]) -> Result<Self, SolveError> {
        let scale = clauses.iter().fold(BigInt::one(), |l, c| l.lcm(c.w.denom()));
        let mut merged: BTreeMap<(usize, usize), i64> = BTreeMap::new();
        let mut total: i64 = 0;
        for c in clauses {
            if c.a == c.b {
                continue;
            }
            let w = (c.w.numer() * (&scale / c.w.denom())).to_i64().ok_or(SolveError::Overflow)?;
            total = total.checked_add(w).ok_or(SolveError::Overflow)?;
            *merged.entry((c.a.min(c.b), c.a.max(c.b))).or_insert(0) += w;
        }
        let mut adj = vec![Vec::new(); m];
        for (&(a, b), &w) in &merged {
            if w != 0 {
                adj[a].push((b, w));
                adj[b].push((a, w));
            }
        }
        Ok(Self { k, m, adj, scale })
    }

    pub fn from_instance(inst: &KCutInstance) -> Result<Self, SolveError> {
        inst.validate()?;
        Self::new(inst.k, inst.m, &inst.clauses)
    }

    pub fn to_rational(&self, v: i64) -> Rational {
        Rational::new(BigInt::from(v), self.scale.clone())
    }

    pub fn value(&self, col: &[u8]) -> i64 {
        let mut s = 0;
        for (a, row) in self.adj.iter().enumerate() {
            for &(b, w) in row {
                if a < b && col[a] != col[b] {
                    s += w;
                }
            }
        }
        s
    }

    fn fixed_colors(&self, fixed: &BTreeMap<usize, u8>) -> Vec<u8> {
        let mut col = vec![UNSET; self.m];
        for (&v, &c) in fixed {
            col[v] = c;
        }
        col
    }
}

struct Clock {
    deadline: Option<Instant>,
    ticks: u64,
}

impl Clock {
    fn new(deadline: Option<Instant>) -> Self {
        Self { deadline, ticks: 0 }
    }

    #[inline]
    fn expired(&mut self) -> bool {
        self.ticks += 1;
        if self.ticks % DEADLINE_POLL != 0 {
            return false;
        }
        matches!(self.deadline, Some(d) if Instant::now() >= d)
    }
}

/// Streams every completion of the fixed colors in lexicographic order.
pub fn max_value_brute(inst: &KCutInstance, deadline: Option<Instant>) -> Result<Solution, SolveError> {
    let c = Compiled::from_instance(inst)?;
    let col = c.fixed_colors(&inst.fixed);
    let (v, a) = brute_compiled(&c, col, deadline)?;
    Ok(Solution { value: c.to_rational(v), assignment: a })
}

pub fn brute_compiled(c: &Compiled, mut col: Vec<u8>, deadline: Option<Instant>) -> Result<(i64, Vec<u8>), SolveError> {
    let free: Vec<usize> = (0..c.m).filter(|&v| col[v] == UNSET).collect();
    for &v in &free {
        col[v] = 0;
    }
    let k = c.k as u8;
    let mut cur = c.value(&col);
    let mut best = cur;
    let mut best_col = col.clone();
    let mut clock = Clock::new(deadline);
    let recolor = |col: &mut Vec<u8>, cur: &mut i64, v: usize, to: u8| {
        let from = col[v];
        for &(u, w) in &c.adj[v] {
            let cu = col[u];
            *cur += w * ((to != cu) as i64 - (from != cu) as i64);
        }
        col[v] = to;
    };
    'outer: loop {
        let mut i = free.len();
        loop {
            if i == 0 {
                break 'outer;
            }
            i -= 1;
            let v = free[i];
            if col[v] + 1 < k {
                let next = col[v] + 1;
                recolor(&mut col, &mut cur, v, next);
                break;
            }
            recolor(&mut col, &mut cur, v, 0);
        }
        if cur > best {
            best = cur;
            best_col.copy_from_slice(&col);
        }
        if clock.expired() {
            return Err(SolveError::Timeout);
        }
    }
    Ok((best, best_col))
}

/// Static branching order and suffix bounds for one set of free variables.
///
/// `dolls[j]` is the exact max-cut of the subgraph induced by `order[j..]`.
#[derive(Debug, Clone)]
pub struct Plan {
    order: Vec<usize>,
    dolls: Vec<i64>,
    symmetric: bool,
}

impl Plan {
    /// Greedy order: next is the free variable with the most weight into the
    /// already placed set (fixed variables included).
    pub fn greedy(c: &Compiled, free: &[bool]) -> Result<Self, SolveError> {
        let mut placed: Vec<bool> = free.iter().map(|f| !f).collect();
        let mut link = vec![0i64; c.m];
        for v in 0..c.m {
            if placed[v] {
                for &(u, w) in &c.adj[v] {
                    link[u] += w;
                }
            }
        }
        let degree: Vec<i64> = c.adj.iter().map(|r| r.iter().map(|e| e.1).sum()).collect();
        let mut order = Vec::new();
        while let Some(v) = (0..c.m)
            .filter(|&v| !placed[v])
            .max_by_key(|&v| (link[v], degree[v], std::cmp::Reverse(v)))
        {
            placed[v] = true;
            order.push(v);
            for &(u, w) in &c.adj[v] {
                link[u] += w;
            }
        }
        Self::with_order(c, order, free.iter().all(|&f| f), None)
    }

    /// Free variables in index order.
    pub fn indexed(c: &Compiled, free: &[bool], deadline: Option<Instant>) -> Result<Self, SolveError> {
        let order = (0..c.m).filter(|&v| free[v]).collect();
        Self::with_order(c, order, free.iter().all(|&f| f), deadline)
    }

    fn with_order(c: &Compiled, order: Vec<usize>, symmetric: bool, deadline: Option<Instant>) -> Result<Self, SolveError> {
        let n = order.len();
        let mut plan = Plan { order, dolls: vec![0; n + 1], symmetric };
        for j in (0..n).rev() {
            let mut active = vec![false; c.m];
            for &v in &plan.order[j..] {
                active[v] = true;
            }
            let head = plan.order[j];
            let link: i64 = c.adj[head].iter().filter(|e| active[e.0]).map(|e| e.1).sum();
            plan.dolls[j] = plan.dolls[j + 1] + link;
            let col = vec![UNSET; c.m];
            let mut s = Search::new(c, &plan, j, &active, col, plan.dolls[j + 1] - 1, true, deadline);
            s.run_value();
            if s.timed_out {
                return Err(SolveError::Timeout);
            }
            plan.dolls[j] = s.best;
        }
        Ok(plan)
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }
}

struct Search<'a> {
    c: &'a Compiled,
    plan: &'a Plan,
    start: usize,
    active: &'a [bool],
    col: Vec<u8>,
    cw: Vec<i64>,
    tot: Vec<i64>,
    la: Vec<i64>,
    la_sum: i64,
    cur: i64,
    best: i64,
    best_col: Option<Vec<u8>>,
    symmetric: bool,
    clock: Clock,
    timed_out: bool,
}

impl<'a> Search<'a> {
    #[allow(clippy::too_many_arguments)]
    fn new(
        c: &'a Compiled,
        plan: &'a Plan,
        start: usize,
        active: &'a [bool],
        col: Vec<u8>,
        incumbent: i64,
        symmetric: bool,
        deadline: Option<Instant>,
    ) -> Self {
        let k = c.k;
        let m = c.m;
        let mut s = Search {
            c,
            plan,
            start,
            active,
            col,
            cw: vec![0; m * k],
            tot: vec![0; m],
            la: vec![0; m],
            la_sum: 0,
            cur: 0,
            best: incumbent,
            best_col: None,
            symmetric,
            clock: Clock::new(deadline),
            timed_out: false,
        };
        for v in 0..m {
            if !active[v] || s.col[v] == UNSET {
                continue;
            }
            for &(u, w) in &c.adj[v] {
                if !active[u] {
                    continue;
                }
                if s.col[u] == UNSET {
                    s.cw[u * k + s.col[v] as usize] += w;
                    s.tot[u] += w;
                } else if u > v && s.col[u] != s.col[v] {
                    s.cur += w;
                }
            }
        }
        for &u in &plan.order[start..] {
            s.la[u] = s.lookahead(u);
            s.la_sum += s.la[u];
        }
        s
    }

    #[inline]
    fn lookahead(&self, u: usize) -> i64 {
        let k = self.c.k;
        let row = &self.cw[u * k..u * k + k];
        self.tot[u] - row.iter().copied().min().unwrap_or(0)
    }

    #[inline]
    fn assign(&mut self, v: usize, color: u8) {
        let k = self.c.k;
        self.cur += self.tot[v] - self.cw[v * k + color as usize];
        self.la_sum -= self.la[v];
        self.col[v] = color;
        for &(u, w) in &self.c.adj[v] {
            if self.active[u] && self.col[u] == UNSET {
                self.cw[u * k + color as usize] += w;
                self.tot[u] += w;
                let la = self.lookahead(u);
                self.la_sum += la - self.la[u];
                self.la[u] = la;
            }
        }
    }

    #[inline]
    fn unassign(&mut self, v: usize) {
        let k = self.c.k;
        let color = self.col[v];
        self.col[v] = UNSET;
        for &(u, w) in &self.c.adj[v] {
            if self.active[u] && self.col[u] == UNSET {
                self.cw[u * k + color as usize] -= w;
                self.tot[u] -= w;
                let la = self.lookahead(u);
                self.la_sum += la - self.la[u];
                self.la[u] = la;
            }
        }
        self.la_sum += self.la[v];
        self.cur -= self.tot[v] - self.cw[v * k + color as usize];
    }

    #[inline]
    fn bound(&self, depth: usize) -> i64 {
        self.cur + self.la_sum + self.plan.dolls[depth]
    }

    /// Finds any assignment strictly better than the incumbent.
    fn run_value(&mut self) {
        let start = self.start;
        self.dfs_value(start, 0);
    }

    fn dfs_value(&mut self, depth: usize, max_color: u8) {
        if self.timed_out || self.clock.expired() {
            self.timed_out = true;
            return;
        }
        if depth == self.plan.order.len() {
            if self.cur > self.best {
                self.best = self.cur;
                self.best_col = Some(self.col.clone());
            }
            return;
        }
        if self.bound(depth) <= self.best {
            return;
        }
        let v = self.plan.order[depth];
        let k = self.c.k;
        let first = depth == self.start;
        let limit = match (self.symmetric, first) {
            (true, true) => 1,
            (true, false) => (max_color as usize + 2).min(k),
            (false, _) => k,
        };
        let mut colors: Vec<(i64, u8)> =
            (0..limit as u8).map(|c| (self.cw[v * k + c as usize], c)).collect();
        colors.sort_unstable();
        for (_, color) in colors {
            self.assign(v, color);
            let next_max = if first { color } else { max_color.max(color) };
            self.dfs_value(depth + 1, next_max);
            self.unassign(v);
            if self.timed_out {
                return;
            }
        }
    }

    /// First leaf in lexicographic order reaching `target`.
    fn dfs_canonical(&mut self, depth: usize, max_color: Option<u8>, target: i64) -> bool {
        if self.clock.expired() {
            self.timed_out = true;
        }
        if self.timed_out {
            return false;
        }
        if depth == self.plan.order.len() {
            if self.cur == target {
                self.best = self.cur;
                self.best_col = Some(self.col.clone());
                return true;
            }
            return false;
        }
        if self.bound(depth) < target {
            return false;
        }
        let v = self.plan.order[depth];
        let k = self.c.k;
        let limit = match (self.symmetric, max_color) {
            (true, None) => 1,
            (true, Some(mc)) => (mc as usize + 2).min(k),
            (false, _) => k,
        };
        for color in 0..limit as u8 {
            self.assign(v, color);
            let next = Some(max_color.map_or(color, |m| m.max(color)));
            let found = self.dfs_canonical(depth + 1, next, target);
            self.unassign(v);
            if found || self.timed_out {
                return found;
            }
        }
        false
    }
}

/// Reusable solver state for many solves over the same free set.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub compiled: Compiled,
    free: Vec<bool>,
    plan: Plan,
}

impl Prepared {
    pub fn new(compiled: Compiled, free: Vec<bool>) -> Result<Self, SolveError> {
        let plan = Plan::greedy(&compiled, &free)?;
        Ok(Self { compiled, free, plan })
    }

    fn colors(&self, fixed: &[u8]) -> Vec<u8> {
        let mut col = vec![UNSET; self.compiled.m];
        let mut it = fixed.iter();
        for v in 0..self.compiled.m {
            if !self.free[v] {
                col[v] = *it.next().expect("one color per fixed variable");
            }
        }
        col
    }

    /// Optimum over completions of `fixed` (colors for the non-free variables
    /// in index order), if it exceeds `lower`.
    pub fn value_above(&self, fixed: &[u8], lower: i64, deadline: Option<Instant>) -> Result<Option<i64>, SolveError> {
        let col = self.colors(fixed);
        let active = vec![true; self.compiled.m];
        let mut s = Search::new(&self.compiled, &self.plan, 0, &active, col, lower, self.plan.symmetric, deadline);
        s.run_value();
        if s.timed_out {
            return Err(SolveError::Timeout);
        }
        Ok(s.best_col.map(|_| s.best))
    }

    pub fn value(&self, fixed: &[u8], deadline: Option<Instant>) -> Result<i64, SolveError> {
        Ok(self.value_above(fixed, -1, deadline)?.expect("some completion scores at least 0"))
    }

    /// Optimum plus the lexicographically smallest maximizer.
    pub fn solve(&self, fixed: &[u8], deadline: Option<Instant>) -> Result<(i64, Vec<u8>), SolveError> {
        let target = self.value(fixed, deadline)?;
        let indexed = Plan::indexed(&self.compiled, &self.free, deadline)?;
        let col = self.colors(fixed);
        let active = vec![true; self.compiled.m];
        let mut s = Search::new(&self.compiled, &indexed, 0, &active, col, target, indexed.symmetric, deadline);
        let found = s.dfs_canonical(0, None, target);
        if s.timed_out {
            return Err(SolveError::Timeout);
        }
        assert!(found, "canonical pass must reach the optimum");
        Ok((target, s.best_col.expect("found")))
    }
}

pub fn max_value_bnb(inst: &KCutInstance, deadline: Option<Instant>) -> Result<Solution, SolveError> {
    let c = Compiled::from_instance(inst)?;
    let free: Vec<bool> = (0..c.m).map(|v| !inst.fixed.contains_key(&v)).collect();
    let fixed: Vec<u8> = inst.fixed.values().copied().collect();
    let p = Prepared::new(c, free)?;
    let (v, a) = p.solve(&fixed, deadline)?;
    Ok(Solution { value: p.compiled.to_rational(v), assignment: a })
}

pub fn solve(inst: &KCutInstance, backend: Backend, deadline: Option<Instant>) -> Result<Solution, SolveError> {
    match backend {
        Backend::Brute => max_value_brute(inst, deadline),
        Backend::Bnb => max_value_bnb(inst, deadline),
    }
}

/// Random instance with loops, parallel clauses, rational weights and
/// random fixings.
pub fn random_instance(rng: &mut impl Rng, k: usize, m: usize) -> KCutInstance {
    let mut inst = KCutInstance::new(k, m);
    if m == 0 {
        return inst;
    }
    let clauses = rng.gen_range(0..=m * (m + 1) / 2 + 2);
    for _ in 0..clauses {
        let a = rng.gen_range(0..m);
        let b = if rng.gen_bool(0.05) { a } else { rng.gen_range(0..m) };
        let w = Rational::new(rng.gen_range(1..=9).into(), rng.gen_range(1..=4).into());
        inst.clauses.push(Clause { a, b, w });
    }
    if rng.gen_bool(0.5) {
        for v in 0..m {
            if rng.gen_bool(0.25) {
                inst.fixed.insert(v, rng.gen_range(0..k) as u8);
            }
        }
    }
    inst
}

#[derive(Debug, Clone)]
pub struct Divergence {
    pub instance: KCutInstance,
    pub left: Option<Solution>,
    pub right: Option<Solution>,
}

#[derive(Debug, Clone)]
pub struct EquivReport {
    pub trials: usize,
    pub divergence: Option<Divergence>,
}

impl EquivReport {
    pub fn ok(&self) -> bool {
        self.divergence.is_none()
    }
}

pub type SolverFn<'a> = &'a (dyn Fn(&KCutInstance) -> Result<Solution, SolveError> + Sync);

/// Runs two solvers on seeded instances with `k` cycling over 2..=4 and
/// `m <= m_max`; stops at the first disagreement in value or argmax.
pub fn solver_equiv_check_with(seed: u64, trials: usize, m_max: usize, left: SolverFn, right: SolverFn) -> EquivReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 0..trials {
        let k = 2 + t % 3;
        let m = rng.gen_range(0..=m_max);
        let inst = random_instance(&mut rng, k, m);
        let l = left(&inst).ok();
        let r = right(&inst).ok();
        if l.is_none() || l != r {
            return EquivReport { trials: t + 1, divergence: Some(Divergence { instance: inst, left: l, right: r }) };
        }
    }
    EquivReport { trials, divergence: None }
}

pub fn solver_equiv_check(seed: u64, trials: usize, m_max: usize) -> EquivReport {
    solver_equiv_check_with(seed, trials, m_max, &|i| max_value_brute(i, None), &|i| max_value_bnb(i, None))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    fn complete(k: usize) -> KCutInstance {
        let mut inst = KCutInstance::new(k, k);
        for a in 0..k {
            for b in a + 1..k {
                inst.clauses.push(Clause { a, b, w: r(1) });
            }
        }
        inst
    }

    #[test]
    fn empty_instance() {
        let inst = KCutInstance::new(3, 0);
        for b in [Backend::Brute, Backend::Bnb] {
            let s = solve(&inst, b, None).unwrap();
            assert_eq!(s.value, r(0));
            assert!(s.assignment.is_empty());
        }
    }

    #[test]
    fn rainbow_clique() {
        for k in 2..=4 {
            for b in [Backend::Brute, Backend::Bnb] {
                let s = solve(&complete(k), b, None).unwrap();
                assert_eq!(s.value, r((k * (k - 1) / 2) as i64));
                assert_eq!(s.assignment, (0..k as u8).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn zero_weight_like_instance() {
        let mut inst = KCutInstance::new(3, 3);
        inst.clauses.push(Clause { a: 1, b: 1, w: r(5) });
        let s = max_value_bnb(&inst, None).unwrap();
        assert_eq!(s.value, r(0));
        assert_eq!(s.assignment, vec![0, 0, 0]);
    }

    #[test]
    fn fixed_colors_respected() {
        let mut inst = complete(3);
        inst.fixed.insert(0, 2);
        inst.fixed.insert(1, 2);
        for b in [Backend::Brute, Backend::Bnb] {
            let s = solve(&inst, b, None).unwrap();
            assert_eq!(s.value, r(2));
            assert_eq!(s.assignment, vec![2, 2, 0]);
        }
    }

    #[test]
    fn rational_weights_lifted() {
        let mut inst = KCutInstance::new(2, 2);
        inst.clauses.push(Clause { a: 0, b: 1, w: Rational::new(1.into(), 3.into()) });
        inst.clauses.push(Clause { a: 0, b: 1, w: Rational::new(1.into(), 6.into()) });
        assert_eq!(max_value_bnb(&inst, None).unwrap().value, Rational::new(1.into(), 2.into()));
    }

    #[test]
    fn equivalence_small() {
        let rep = solver_equiv_check(1, 300, 7);
        assert!(rep.ok(), "{:?}", rep.divergence);
        assert!(solver_equiv_check(1, 0, 7).ok());
    }

    #[test]
    fn injected_bug_is_caught() {
        // Scores loops as if they were always cut.
        let buggy = |inst: &KCutInstance| {
            let mut s = max_value_brute(inst, None)?;
            let loops: Rational = inst.clauses.iter().filter(|c| c.a == c.b).map(|c| c.w.clone()).sum();
            s.value += loops;
            Ok(s)
        };
        let rep = solver_equiv_check_with(1, 200, 8, &|i| max_value_brute(i, None), &buggy);
        let div = rep.divergence.expect("divergence expected");
        assert!(div.instance.clauses.iter().any(|c| c.a == c.b));
    }

    #[test]
    fn deadline_in_the_past_times_out() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut inst = random_instance(&mut rng, 4, 14);
        inst.fixed.clear();
        let past = Some(Instant::now());
        assert_eq!(max_value_brute(&inst, past), Err(SolveError::Timeout));
    }

    #[test]
    fn text_round_trip() {
        let text = "k=3 vars=4\n1 2 3\n2 4 1/2\nfix 1 2\n";
        let inst = KCutInstance::parse(text).unwrap();
        assert_eq!(inst.to_text(), text);
        assert!(KCutInstance::parse("k=3 vars=2\n1 3 1\n").is_err());
        assert!(KCutInstance::parse("k=3\n").is_err());
    }
}
