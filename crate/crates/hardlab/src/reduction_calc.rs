//! Reduction parameters from a family of `k` gadgets, global-variable
//! rotation, and explicit composition with a 3LIN(k) source instance.

use std::time::Instant;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::gadget_core::{gadget_params, Gadget, GadgetError, GadgetParams};
use crate::kcut_solver::{Clause, KCutInstance};
use crate::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReductionError {
    #[error("expected {expected} gadgets, got {got}")]
    GadgetCount { expected: usize, got: usize },
    #[error("gadget alphabets differ")]
    MixedK,
    #[error("variable {0} is not a global position")]
    NotGlobal(usize),
    #[error("rotation is not a permutation of the globals")]
    NotPermutation,
    #[error("composed instance would need {0} variables, above the cap")]
    TooLarge(usize),
    #[error("source clause {0} is malformed")]
    BadSource(usize),
    #[error("soundness b = {b} exceeds completeness a = {a}")]
    SoundAboveComplete { a: Rational, b: Rational },
    #[error("total gadget weight is zero")]
    ZeroWeight,
    #[error(transparent)]
    Gadget(#[from] GadgetError),
}

/// Renames global `from[j]` to `to[j]` (1-based ids, as printed in gadget
/// files). Both lists must enumerate the same set of global positions.
pub fn rotate_globals(g: &Gadget, from: &[usize], to: &[usize]) -> Result<Gadget, ReductionError> {
    let globals = 4..4 + g.k;
    if from.len() != to.len() {
        return Err(ReductionError::NotPermutation);
    }
    for &v in from.iter().chain(to) {
        if !globals.contains(&v) {
            return Err(ReductionError::NotGlobal(v));
        }
    }
    let (mut a, mut b) = (from.to_vec(), to.to_vec());
    a.sort_unstable();
    b.sort_unstable();
    a.dedup();
    if a != b || a.len() != from.len() {
        return Err(ReductionError::NotPermutation);
    }
    let rename = |v: usize| from.iter().position(|&f| f == v + 1).map_or(v, |j| to[j] - 1);
    let clauses = g.clauses.iter().map(|c| Clause { a: rename(c.a), b: rename(c.b), w: c.w.clone() }).collect();
    Ok(Gadget::new(g.k, g.n_aux, clauses)?)
}

/// Shift-by-one rotation used to derive `I_i` from `I_{i-1}`:
/// `(4, 5, ..., k+3) -> (k+3, 4, ..., k+2)`.
pub fn rotate_shift(g: &Gadget) -> Result<Gadget, ReductionError> {
    let from: Vec<usize> = (4..4 + g.k).collect();
    let mut to = from.clone();
    to.rotate_right(1);
    rotate_globals(g, &from, &to)
}

/// Swap of the last two globals: `(4, ..., k+1, k+2, k+3) -> (4, ..., k+1, k+3, k+2)`.
pub fn rotate_swap_last(g: &Gadget) -> Result<Gadget, ReductionError> {
    let from: Vec<usize> = (4..4 + g.k).collect();
    let mut to = from.clone();
    let n = to.len();
    if n >= 2 {
        to.swap(n - 2, n - 1);
    }
    rotate_globals(g, &from, &to)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionSummary {
    pub k: usize,
    pub params: Vec<GadgetParams>,
    pub a: Rational,
    pub b: Rational,
    pub ratio: Rational,
    /// `r_perm[0]` maximizes `c' - s`; the rest follow in increasing order.
    pub r_perm: Vec<usize>,
}

impl ReductionSummary {
    pub fn hardness_statement(&self) -> String {
        format!(
            "NP-hard to distinguish value >= ({} - eps) from value <= ({} + eps); NP-hard to approximate within {} + eps, for every eps > 0",
            self.a, self.b, self.ratio
        )
    }
}

/// Computes `a`, `b` and `b/a` from parameters indexed by source residue.
pub fn summarize(params: Vec<GadgetParams>) -> Result<ReductionSummary, ReductionError> {
    let k = params.len();
    let t: Rational = params.iter().map(|p| p.t.clone()).sum();
    if t.is_zero() {
        return Err(ReductionError::ZeroWeight);
    }
    let a = params.iter().map(|p| p.c.clone()).sum::<Rational>() / &t;
    let gap = |p: &GadgetParams| &p.c_prime - &p.s;
    let mut r0 = 0;
    for (i, p) in params.iter().enumerate() {
        if gap(p) > gap(&params[r0]) {
            r0 = i;
        }
    }
    let b_for = |r: usize| {
        let s_rest: Rational = params.iter().enumerate().filter(|&(j, _)| j != r).map(|(_, p)| p.s.clone()).sum();
        (&params[r].c_prime + s_rest) / &t
    };
    let b = b_for(r0);
    for (i, p) in params.iter().enumerate() {
        if gap(p) == gap(&params[r0]) {
            debug_assert_eq!(b_for(i), b, "b depends on the tie-break");
        }
    }
    if b > a {
        return Err(ReductionError::SoundAboveComplete { a, b });
    }
    let ratio = if a.is_zero() { Rational::one() } else { &b / &a };
    let mut r_perm = vec![r0];
    r_perm.extend((0..k).filter(|&i| i != r0));
    Ok(ReductionSummary { k, params, a, b, ratio, r_perm })
}

/// Computes every gadget's parameters and then the summary. `gadgets[i]`
/// must be the `i`-gadget.
pub fn reduction_summary(gadgets: &[Gadget], brute: bool, deadline: Option<Instant>) -> Result<ReductionSummary, ReductionError> {
    let k = gadgets.first().map_or(0, |g| g.k);
    if gadgets.len() != k || k == 0 {
        return Err(ReductionError::GadgetCount { expected: k.max(1), got: gadgets.len() });
    }
    if gadgets.iter().any(|g| g.k != k) {
        return Err(ReductionError::MixedK);
    }
    let params = gadgets
        .iter()
        .enumerate()
        .map(|(i, g)| gadget_params(g, i, brute, deadline))
        .collect::<Result<Vec<_>, _>>()?;
    summarize(params)
}

/// A 3LIN(k) instance: clause `j` asks `x[v0] + x[v1] + x[v2] = residue`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreeLin {
    pub k: usize,
    pub n: usize,
    pub clauses: Vec<([usize; 3], usize)>,
}

impl ThreeLin {
    pub fn satisfied_by(&self, x: &[u8]) -> usize {
        self.clauses
            .iter()
            .filter(|(v, i)| v.iter().map(|&j| x[j] as usize).sum::<usize>() % self.k == *i)
            .count()
    }
}

/// Variable layout of a composed instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n: usize,
    pub k: usize,
    pub n_aux: usize,
}

impl Layout {
    pub fn global(&self, j: usize) -> usize {
        self.n + j
    }

    pub fn aux(&self, clause: usize, a: usize) -> usize {
        self.n + self.k + clause * self.n_aux + a
    }

    pub fn vars(&self, clauses: usize) -> usize {
        self.n + self.k + clauses * self.n_aux
    }
}

pub const DEFAULT_VAR_CAP: usize = 1 << 24;

/// One copy of `I_{residue}` per source clause, sharing a single global block.
/// Gadgets with fewer auxiliary variables are padded with isolated ones.
pub fn compose_instance(src: &ThreeLin, gadgets: &[Gadget], cap: usize) -> Result<(KCutInstance, Layout), ReductionError> {
    let k = src.k;
    if gadgets.len() != k {
        return Err(ReductionError::GadgetCount { expected: k, got: gadgets.len() });
    }
    if gadgets.iter().any(|g| g.k != k) {
        return Err(ReductionError::MixedK);
    }
    let n_aux = gadgets.iter().map(|g| g.n_aux).max().unwrap_or(0);
    let layout = Layout { n: src.n, k, n_aux };
    let vars = layout.vars(src.clauses.len());
    if vars > cap {
        return Err(ReductionError::TooLarge(vars));
    }
    let mut inst = KCutInstance::new(k, vars);
    for (j, (xs, i)) in src.clauses.iter().enumerate() {
        if *i >= k || xs.iter().any(|&v| v >= src.n) {
            return Err(ReductionError::BadSource(j));
        }
        let g = &gadgets[*i];
        let map = |v: usize| match v {
            0..=2 => xs[v],
            v if v < 3 + k => layout.global(v - 3),
            v => layout.aux(j, v - 3 - k),
        };
        inst.clauses.extend(g.clauses.iter().map(|c| Clause { a: map(c.a), b: map(c.b), w: c.w.clone() }));
    }
    Ok((inst, layout))
}

/// Assignment built from a source assignment `x`: globals `(0, ..., k-1)`,
/// auxiliary blocks from each gadget's completeness witnesses.
pub fn completeness_assignment(src: &ThreeLin, params: &[GadgetParams], layout: &Layout, x: &[u8]) -> Vec<u8> {
    let mut col = vec![0u8; layout.vars(src.clauses.len())];
    col[..src.n].copy_from_slice(&x[..src.n]);
    for j in 0..src.k {
        col[layout.global(j)] = j as u8;
    }
    for (j, (xs, i)) in src.clauses.iter().enumerate() {
        let triple = [x[xs[0]], x[xs[1]], x[xs[2]]];
        if let Some((_, z)) = params[*i].witness_map.iter().find(|(t, _)| *t == triple) {
            for (a, &c) in z.iter().enumerate() {
                col[layout.aux(j, a)] = c;
            }
        }
    }
    col
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    fn params(c: i64, cp: i64, s: i64, t: i64) -> GadgetParams {
        GadgetParams { c: r(c), c_prime: r(cp), s: r(s), t: r(t), witness_map: vec![] }
    }

    #[test]
    fn k3_formulas() {
        let sum = summarize(vec![params(18, 18, 16, 18), params(48, 48, 46, 53), params(48, 48, 46, 53)]).unwrap();
        assert_eq!(sum.a, Rational::new(57.into(), 62.into()));
        assert_eq!(sum.b, Rational::new(55.into(), 62.into()));
        assert_eq!(sum.ratio, Rational::new(55.into(), 57.into()));
        assert_eq!(sum.r_perm, vec![0, 1, 2]);
    }

    #[test]
    fn k4_formulas() {
        let p = params(49535, 49538, 48681, 52941);
        let sum = summarize(vec![p.clone(), p.clone(), p.clone(), p]).unwrap();
        assert_eq!(sum.a, Rational::new(49535.into(), 52941.into()));
        assert_eq!(sum.b, Rational::new(195581.into(), 211764.into()));
        assert_eq!(sum.ratio, Rational::new(195581.into(), 198140.into()));
    }

    #[test]
    fn scaling_invariance() {
        let base = vec![params(18, 18, 16, 18), params(48, 48, 46, 53), params(48, 48, 46, 53)];
        let scale = Rational::new(7.into(), 3.into());
        let scaled = base
            .iter()
            .map(|p| GadgetParams {
                c: &p.c * &scale,
                c_prime: &p.c_prime * &scale,
                s: &p.s * &scale,
                t: &p.t * &scale,
                witness_map: vec![],
            })
            .collect();
        let (x, y) = (summarize(base).unwrap(), summarize(scaled).unwrap());
        assert_eq!((x.ratio, x.r_perm), (y.ratio, y.r_perm));
    }

    #[test]
    fn identity_rotation() {
        let g = Gadget::parse("k=3 vars=7\n1 4 1\n5 6 2\n6 7 1\n").unwrap();
        assert_eq!(rotate_globals(&g, &[4, 5, 6], &[4, 5, 6]).unwrap(), g);
        let s = rotate_globals(&g, &[4, 5, 6], &[4, 6, 5]).unwrap();
        assert_eq!(s.to_text(), "k=3 vars=7\n1 4 1\n6 5 2\n5 7 1\n");
        assert_eq!(rotate_globals(&g, &[4, 5], &[4, 7]), Err(ReductionError::NotGlobal(7)));
        assert_eq!(rotate_globals(&g, &[4, 5], &[4, 4]), Err(ReductionError::NotPermutation));
    }

    #[test]
    fn degenerate_global_clause_family() {
        let g = Gadget::parse("k=3 vars=6\n4 5 1\n").unwrap();
        let sum = reduction_summary(&[g.clone(), g.clone(), g], false, None).unwrap();
        assert!(sum.params.iter().all(|p| (p.c.clone(), p.c_prime.clone(), p.s.clone(), p.t.clone()) == (r(1), r(1), r(1), r(1))));
        assert_eq!((sum.a, sum.b, sum.ratio), (r(1), r(1), r(1)));
    }

    #[test]
    fn empty_source_composes_to_globals_only() {
        let g = Gadget::parse("k=3 vars=6\n4 5 1\n").unwrap();
        let src = ThreeLin { k: 3, n: 0, clauses: vec![] };
        let (inst, layout) = compose_instance(&src, &[g.clone(), g.clone(), g], DEFAULT_VAR_CAP).unwrap();
        assert_eq!(inst.m, 3);
        assert_eq!(layout.global(0), 0);
        assert_eq!(inst.total_weight(), r(0));
    }
}
