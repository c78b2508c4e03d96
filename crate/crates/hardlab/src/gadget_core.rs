//! Gadgets from 3LIN(k) to MAX-k-CUT and their completeness/soundness
//! parameters.
//!
//! Variables are 0-based here: primaries `0..3`, globals `3..3+k`, auxiliary
//! variables after that. The text format is 1-based.

use std::sync::atomic::{AtomicI64, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::kcut_solver::{brute_compiled, Clause, Compiled, FormatError, KCutInstance, Prepared, SolveError};
use crate::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GadgetError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("clause on identical variables {0}")]
    SelfClause(usize),
    #[error("{vars} variables cannot hold 3 primaries and {k} globals")]
    TooFewVars { k: usize, vars: usize },
    #[error("gadget files take no `fix` lines")]
    FixedVariables,
    #[error("assignment has length {got}, expected {expected}")]
    Length { got: usize, expected: usize },
    #[error("color {0} outside Z_k")]
    Alphabet(u8),
    #[error("residue {0} outside Z_k")]
    Residue(usize),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("deadline exceeded; partial parameters are not authoritative")]
    Timeout { partial: Box<GadgetParams> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gadget {
    pub k: usize,
    pub n_aux: usize,
    pub clauses: Vec<Clause>,
}

impl Gadget {
    pub fn new(k: usize, n_aux: usize, clauses: Vec<Clause>) -> Result<Self, GadgetError> {
        let g = Self { k, n_aux, clauses };
        g.validate()?;
        Ok(g)
    }

    pub fn vars(&self) -> usize {
        3 + self.k + self.n_aux
    }

    pub fn validate(&self) -> Result<(), GadgetError> {
        for c in &self.clauses {
            if c.a == c.b {
                return Err(GadgetError::SelfClause(c.a + 1));
            }
            if c.a >= self.vars() || c.b >= self.vars() {
                return Err(GadgetError::Solve(SolveError::Invalid(format!("clause ({}, {}) out of range", c.a + 1, c.b + 1))));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, GadgetError> {
        let inst = KCutInstance::parse(text)?;
        if !inst.fixed.is_empty() {
            return Err(GadgetError::FixedVariables);
        }
        if inst.m < 3 + inst.k {
            return Err(GadgetError::TooFewVars { k: inst.k, vars: inst.m });
        }
        Self::new(inst.k, inst.m - 3 - inst.k, inst.clauses)
    }

    pub fn to_text(&self) -> String {
        self.as_instance().to_text()
    }

    pub fn as_instance(&self) -> KCutInstance {
        KCutInstance { k: self.k, m: self.vars(), clauses: self.clauses.clone(), fixed: Default::default() }
    }

    pub fn total_weight(&self) -> Rational {
        self.clauses.iter().map(|c| c.w.clone()).sum()
    }

    pub fn integral(&self) -> bool {
        self.clauses.iter().all(|c| c.w.is_integer())
    }
}

/// `x1 + x2 + x3 = i (mod k)`.
pub fn predicate_3lin(k: usize, i: usize, x: [u8; 3]) -> bool {
    x.iter().map(|&v| v as usize).sum::<usize>() % k == i % k
}

/// Restricted-growth strings of length `k` in lexicographic order.
pub fn allowed_global_assignments(k: usize) -> Vec<Vec<u8>> {
    fn grow(k: usize, prefix: &mut Vec<u8>, next: u8, out: &mut Vec<Vec<u8>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        for c in 0..=next.min(k as u8 - 1) {
            prefix.push(c);
            grow(k, prefix, if c == next { next + 1 } else { next }, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        grow(k, &mut Vec::new(), 0, &mut out);
    }
    out
}

/// All triples over `Z_k` in lexicographic order.
pub fn triples(k: usize) -> Vec<[u8; 3]> {
    let k = k as u8;
    (0..k).flat_map(|a| (0..k).flat_map(move |b| (0..k).map(move |c| [a, b, c]))).collect()
}

pub fn gadget_value(g: &Gadget, assignment: &[u8]) -> Result<Rational, GadgetError> {
    if assignment.len() != g.vars() {
        return Err(GadgetError::Length { got: assignment.len(), expected: g.vars() });
    }
    if let Some(&c) = assignment.iter().find(|&&c| c as usize >= g.k) {
        return Err(GadgetError::Alphabet(c));
    }
    Ok(g.clauses.iter().filter(|c| assignment[c.a] != assignment[c.b]).map(|c| c.w.clone()).sum())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GadgetParams {
    pub c: Rational,
    pub c_prime: Rational,
    pub s: Rational,
    pub t: Rational,
    /// For each satisfying `x`, the lexicographically smallest maximizing
    /// auxiliary assignment with globals at `(0, 1, ..., k-1)`.
    pub witness_map: Vec<([u8; 3], Vec<u8>)>,
}

/// Solves one `(x, y)` slice of the auxiliary maximization.
struct Slicer {
    prepared: Prepared,
    brute: bool,
}

impl Slicer {
    fn new(g: &Gadget, brute: bool) -> Result<Self, GadgetError> {
        let compiled = Compiled::new(g.k, g.vars(), &g.clauses)?;
        let free: Vec<bool> = (0..g.vars()).map(|v| v >= 3 + g.k).collect();
        Ok(Self { prepared: Prepared::new(compiled, free)?, brute })
    }

    fn fixed(x: &[u8; 3], y: &[u8]) -> Vec<u8> {
        x.iter().chain(y).copied().collect()
    }

    fn colors(&self, fixed: &[u8]) -> Vec<u8> {
        let mut col = fixed.to_vec();
        col.resize(self.prepared.compiled.m, u8::MAX);
        col
    }

    fn argmax(&self, x: &[u8; 3], y: &[u8], deadline: Option<Instant>) -> Result<(i64, Vec<u8>), SolveError> {
        let fixed = Self::fixed(x, y);
        if self.brute {
            brute_compiled(&self.prepared.compiled, self.colors(&fixed), deadline)
        } else {
            self.prepared.solve(&fixed, deadline)
        }
    }

    fn value_above(&self, x: &[u8; 3], y: &[u8], lower: i64, deadline: Option<Instant>) -> Result<Option<i64>, SolveError> {
        let fixed = Self::fixed(x, y);
        if self.brute {
            let (v, _) = brute_compiled(&self.prepared.compiled, self.colors(&fixed), deadline)?;
            Ok((v > lower).then_some(v))
        } else {
            self.prepared.value_above(&fixed, lower, deadline)
        }
    }
}

/// Parameters of `g` as an `i`-gadget. Slices run on the current rayon pool.
pub fn gadget_params(g: &Gadget, i: usize, brute: bool, deadline: Option<Instant>) -> Result<GadgetParams, GadgetError> {
    g.validate()?;
    if i >= g.k {
        return Err(GadgetError::Residue(i));
    }
    let slicer = Slicer::new(g, brute)?;
    let compiled = &slicer.prepared.compiled;
    let k = g.k;
    let rainbow: Vec<u8> = (0..k as u8).collect();
    let ys = allowed_global_assignments(k);
    let (sat, unsat): (Vec<[u8; 3]>, Vec<[u8; 3]>) = triples(k).into_iter().partition(|x| predicate_3lin(k, i, *x));

    let completeness: Vec<Result<(i64, Vec<u8>), SolveError>> =
        sat.par_iter().map(|x| slicer.argmax(x, &rainbow, deadline)).collect();

    let sweep = |xs: &[[u8; 3]]| -> (i64, bool) {
        let best = AtomicI64::new(-1);
        let slices: Vec<([u8; 3], &Vec<u8>)> = xs.iter().flat_map(|x| ys.iter().map(move |y| (*x, y))).collect();
        let timed_out = slices
            .par_iter()
            .map(|(x, y)| match slicer.value_above(x, y, best.load(Ordering::Relaxed), deadline) {
                Ok(Some(v)) => {
                    best.fetch_max(v, Ordering::Relaxed);
                    false
                }
                Ok(None) => false,
                Err(_) => true,
            })
            .reduce(|| false, |a, b| a || b);
        (best.into_inner(), timed_out)
    };
    let (c_prime, t1) = sweep(&sat);
    let (s, t2) = sweep(&unsat);

    let mut timed_out = t1 || t2;
    let mut c = i64::MAX;
    let mut witness_map = Vec::new();
    for (x, r) in sat.iter().zip(completeness) {
        match r {
            Ok((v, col)) => {
                c = c.min(v);
                witness_map.push((*x, col[3 + k..].to_vec()));
            }
            Err(SolveError::Timeout) => timed_out = true,
            Err(e) => return Err(e.into()),
        }
    }
    let params = GadgetParams {
        c: compiled.to_rational(if c == i64::MAX { 0 } else { c }),
        c_prime: compiled.to_rational(c_prime.max(0)),
        s: compiled.to_rational(s.max(0)),
        t: g.total_weight(),
        witness_map,
    };
    if timed_out {
        return Err(GadgetError::Timeout { partial: Box::new(params) });
    }
    Ok(params)
}
