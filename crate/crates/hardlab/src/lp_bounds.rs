//! Upper bounds on the max-cut and independent-set fractions of `d`-regular
//! graphs with nontrivial spectrum at most `lambda`, via linear programs over
//! distributions of labeled depth-`L` trees.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graph_core::MultiGraph;
use crate::simplex::{LinearProgram, LpError, LpOutcome, LpScalar, Sense, Simplex};
use crate::Rational;

pub const DEFAULT_CLASS_GUARD: usize = 2_000_000;

#[derive(Debug, Error)]
pub enum LpBoundError {
    #[error("degree {0} is not supported (need d >= 3)")]
    Degree(usize),
    #[error("enumeration would exceed {guard} classes")]
    Guard { guard: usize },
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("LP at alpha = {alpha}: {source}")]
    Lp { alpha: f64, source: LpError },
    #[error("LP at alpha = {alpha} is unbounded")]
    Unbounded { alpha: f64 },
    #[error("graph is not {0}-regular")]
    NotRegular(usize),
    #[error("vertex {0} lifts to a labeling outside the class system")]
    NotInSystem(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Vertices of `T_{d,L}` in breadth-first order, addressed by the child
/// index taken at each level.
#[derive(Debug, Clone)]
pub struct Tree {
    pub d: usize,
    pub depth: usize,
    pub addresses: Vec<Vec<usize>>,
    pub parent: Vec<Option<usize>>,
}

impl Tree {
    pub fn len(&self) -> usize {
        self.addresses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.addresses.is_empty()
    }

    pub fn level(&self, v: usize) -> usize {
        self.addresses[v].len()
    }

    pub fn children(&self, v: usize) -> Vec<usize> {
        (0..self.len()).filter(|&u| self.parent[u] == Some(v)).collect()
    }
}

pub fn build_tree(d: usize, depth: usize) -> Tree {
    let mut addresses = vec![Vec::new()];
    let mut parent = vec![None];
    let mut frontier = vec![0usize];
    for level in 0..depth {
        let mut next = Vec::new();
        for &v in &frontier {
            let arity = if level == 0 { d } else { d - 1 };
            for q in 0..arity {
                let mut a = addresses[v].clone();
                a.push(q);
                addresses.push(a);
                parent.push(Some(v));
                next.push(addresses.len() - 1);
            }
        }
        frontier = next;
    }
    Tree { d, depth, addresses, parent }
}

/// Vertices at depth `j` of `T_{d,L}`.
pub fn level_size(d: usize, j: usize) -> u64 {
    if j == 0 {
        1
    } else {
        d as u64 * (d as u64 - 1).pow(j as u32 - 1)
    }
}

/// Probability mass per depth after an `L`-step simple random walk from the
/// root.
pub fn walk_depth_mass(d: usize, steps: usize) -> Vec<Rational> {
    let mut p = vec![Rational::zero(); steps + 1];
    p[0] = Rational::one();
    let dd = Rational::from_integer(BigInt::from(d));
    for _ in 0..steps {
        let mut q = vec![Rational::zero(); steps + 1];
        for (j, mass) in p.iter().enumerate() {
            if mass.is_zero() {
                continue;
            }
            if j == 0 {
                q[1] += mass;
            } else {
                q[j - 1] += mass / &dd;
                q[j + 1] += mass * Rational::new(BigInt::from(d - 1), BigInt::from(d));
            }
        }
        p = q;
    }
    p
}

/// Endpoint distribution of the walk, one entry per vertex of
/// `build_tree(d, steps)`.
pub fn walk_distribution(d: usize, steps: usize) -> Vec<Rational> {
    let mass = walk_depth_mass(d, steps);
    let tree = build_tree(d, steps);
    (0..tree.len())
        .map(|v| {
            let j = tree.level(v);
            &mass[j] / Rational::from_integer(BigInt::from(level_size(d, j)))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassMode {
    /// Labelings whose internal labels form a maximum cut given the leaves.
    MaxCut,
    /// Leaf labels free; an internal vertex is in the set iff all of its
    /// children are out.
    IndependentSet,
    /// Every labeling.
    Unrestricted,
}

/// Canonical labeled branch: a vertex plus everything below it, children
/// sorted by id.
#[derive(Debug, Clone)]
pub struct Branch {
    pub label: i8,
    pub children: Vec<u32>,
    pub height: usize,
    /// Vertices labeled +1 at each relative depth.
    pub plus: Vec<u64>,
    /// Number of distinct labelings of the branch in this class.
    pub orbit: u128,
    /// Cut edges inside the branch.
    pub inner_cut: u64,
    /// Best cut of the branch plus its parent edge for parent label `+1`
    /// (index 0) or `-1` (index 1), leaves fixed.
    pub best: [u64; 2],
}

impl Branch {
    fn value(&self, parent: i8) -> u64 {
        self.inner_cut + (self.label != parent) as u64
    }

    fn optimal_under(&self, parent: i8) -> bool {
        self.value(parent) == self.best[side(parent)]
    }
}

fn side(label: i8) -> usize {
    (label < 0) as usize
}

#[derive(Debug, Default, Clone)]
pub struct BranchTable {
    index: HashMap<(i8, Vec<u32>), u32>,
    nodes: Vec<Branch>,
    trunc: HashMap<u32, u32>,
}

impl BranchTable {
    pub fn get(&self, id: u32) -> &Branch {
        &self.nodes[id as usize]
    }

    pub fn lookup(&self, label: i8, children: &[u32]) -> Option<u32> {
        self.index.get(&(label, children.to_vec())).copied()
    }

    pub fn intern(&mut self, label: i8, mut children: Vec<u32>) -> u32 {
        children.sort_unstable();
        if let Some(&id) = self.index.get(&(label, children.clone())) {
            return id;
        }
        let b = self.make(label, &children);
        let id = self.nodes.len() as u32;
        self.nodes.push(b);
        self.index.insert((label, children), id);
        id
    }

    fn make(&self, label: i8, children: &[u32]) -> Branch {
        if children.is_empty() {
            return Branch {
                label,
                children: vec![],
                height: 0,
                plus: vec![(label > 0) as u64],
                orbit: 1,
                inner_cut: 0,
                best: [(label != 1) as u64, (label != -1) as u64],
            };
        }
        let kids: Vec<&Branch> = children.iter().map(|&c| self.get(c)).collect();
        let height = kids[0].height + 1;
        let mut plus = vec![0u64; height + 1];
        plus[0] = (label > 0) as u64;
        for k in &kids {
            for (j, p) in k.plus.iter().enumerate() {
                plus[j + 1] += p;
            }
        }
        let inner_cut = kids.iter().map(|k| k.value(label)).sum();
        let mut best = [0u64; 2];
        for parent in [1i8, -1] {
            best[side(parent)] = [1i8, -1]
                .iter()
                .map(|&l| (l != parent) as u64 + kids.iter().map(|k| k.best[side(l)]).sum::<u64>())
                .max()
                .unwrap();
        }
        Branch { label, children: children.to_vec(), height, plus, orbit: arrangements(children, |c| self.get(c).orbit), inner_cut, best }
    }

    /// Drops the deepest level of a branch of height >= 1.
    pub fn truncate(&mut self, id: u32) -> u32 {
        if let Some(&t) = self.trunc.get(&id) {
            return t;
        }
        let b = self.get(id).clone();
        assert!(b.height >= 1, "cannot truncate a leaf");
        let t = if b.height == 1 {
            self.intern(b.label, vec![])
        } else {
            let kids = b.children.iter().map(|&c| self.truncate(c)).collect();
            self.intern(b.label, kids)
        };
        self.trunc.insert(id, t);
        t
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Distinct orderings of a sorted multiset of children times the product of
/// their orbit sizes.
fn arrangements(sorted: &[u32], orbit: impl Fn(u32) -> u128) -> u128 {
    let mut total: u128 = 1;
    let mut placed: u128 = 0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        for r in 1..=(j - i) as u128 {
            placed += 1;
            total = total.saturating_mul(placed) / r;
        }
        total = total.saturating_mul(orbit(sorted[i]).saturating_pow((j - i) as u32));
        i = j;
    }
    total
}

fn binomial(n: usize, k: usize) -> u128 {
    let mut r: u128 = 1;
    for i in 0..k as u128 {
        r = r.saturating_mul(n as u128 - i) / (i + 1);
    }
    r
}

/// Calls `f` on each size-`k` multiset of `items` in lexicographic order.
fn multisets(items: &[u32], k: usize, f: &mut impl FnMut(&[u32])) {
    fn rec(items: &[u32], k: usize, from: usize, cur: &mut Vec<u32>, f: &mut impl FnMut(&[u32])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in from..items.len() {
            cur.push(items[i]);
            rec(items, k, i, cur, f);
            cur.pop();
        }
    }
    rec(items, k, 0, &mut Vec::with_capacity(k), f);
}

#[derive(Debug, Clone)]
pub struct LabelClass {
    pub label: i8,
    /// Sorted ids of the `d` root subtrees.
    pub children: Vec<u32>,
    pub orbit: u128,
    pub plus: Vec<u64>,
}

/// Classes of `T_{d,L}` labelings with their LP coefficients.
#[derive(Debug, Clone)]
pub struct LabelingClassSystem {
    pub d: usize,
    pub depth: usize,
    pub mode: ClassMode,
    pub table: BranchTable,
    pub classes: Vec<LabelClass>,
    /// `y_0` per class.
    pub y0: Vec<Rational>,
    /// Mean of `y_0 y_c` over the root's children.
    pub edge_corr: Vec<Rational>,
    /// Expectation of `y_0 y_v` for `v` the endpoint of the root walk.
    pub walk_corr: Vec<Rational>,
    /// Sparse rows `sum_c row[c] p_c = 0`.
    pub consistency: Vec<Vec<(usize, Rational)>>,
    root_index: HashMap<(i8, Vec<u32>), usize>,
}

fn kept_branches(table: &mut BranchTable, d: usize, height: usize, mode: ClassMode, guard: usize) -> Result<Vec<u32>, LpBoundError> {
    if height == 0 {
        return Ok(vec![table.intern(1, vec![]), table.intern(-1, vec![])]);
    }
    let sub = kept_branches(table, d, height - 1, mode, guard)?;
    let arity = d - 1;
    let mut out = Vec::new();
    for label in [1i8, -1] {
        let cands: Vec<u32> = match mode {
            ClassMode::MaxCut => sub.iter().copied().filter(|&c| table.get(c).optimal_under(label)).collect(),
            _ => sub.clone(),
        };
        if binomial(cands.len() + arity - 1, arity) > guard as u128 {
            return Err(LpBoundError::Guard { guard });
        }
        multisets(&cands, arity, &mut |kids| {
            let label = match mode {
                ClassMode::IndependentSet if kids.iter().all(|&c| table.get(c).label < 0) => 1,
                ClassMode::IndependentSet => -1,
                _ => label,
            };
            let id = table.intern(label, kids.to_vec());
            let b = table.get(id);
            let keep = match mode {
                ClassMode::MaxCut => b.optimal_under(1) || b.optimal_under(-1),
                _ => true,
            };
            if keep {
                out.push(id);
            }
        });
        if mode == ClassMode::IndependentSet {
            break;
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

impl LabelingClassSystem {
    pub fn enumerate(d: usize, depth: usize, mode: ClassMode) -> Result<Self, LpBoundError> {
        Self::enumerate_guarded(d, depth, mode, DEFAULT_CLASS_GUARD)
    }

    pub fn enumerate_guarded(d: usize, depth: usize, mode: ClassMode, guard: usize) -> Result<Self, LpBoundError> {
        if d < 3 {
            return Err(LpBoundError::Degree(d));
        }
        let mut table = BranchTable::default();
        let mut classes = Vec::new();
        if depth == 0 {
            for label in [1i8, -1] {
                classes.push(LabelClass { label, children: vec![], orbit: 1, plus: vec![(label > 0) as u64] });
            }
        } else {
            let sub = kept_branches(&mut table, d, depth - 1, mode, guard)?;
            for label in [1i8, -1] {
                let cands: Vec<u32> = match mode {
                    ClassMode::MaxCut => sub.iter().copied().filter(|&c| table.get(c).optimal_under(label)).collect(),
                    _ => sub.clone(),
                };
                if binomial(cands.len() + d - 1, d) > guard as u128 {
                    return Err(LpBoundError::Guard { guard });
                }
                multisets(&cands, d, &mut |kids| {
                    let root = match mode {
                        ClassMode::IndependentSet if kids.iter().all(|&c| table.get(c).label < 0) => 1,
                        ClassMode::IndependentSet => -1,
                        _ => label,
                    };
                    if mode == ClassMode::MaxCut {
                        let here: u64 = kids.iter().map(|&c| table.get(c).best[side(label)]).sum();
                        let flipped: u64 = kids.iter().map(|&c| table.get(c).best[side(-label)]).sum();
                        if here < flipped {
                            return;
                        }
                    }
                    let mut plus = vec![0u64; depth + 1];
                    plus[0] = (root > 0) as u64;
                    for &c in kids {
                        for (j, p) in table.get(c).plus.iter().enumerate() {
                            plus[j + 1] += p;
                        }
                    }
                    let orbit = arrangements(kids, |c| table.get(c).orbit);
                    classes.push(LabelClass { label: root, children: kids.to_vec(), orbit, plus });
                });
                if mode == ClassMode::IndependentSet {
                    break;
                }
            }
        }
        let mut sys = LabelingClassSystem {
            d,
            depth,
            mode,
            table,
            classes,
            y0: vec![],
            edge_corr: vec![],
            walk_corr: vec![],
            consistency: vec![],
            root_index: HashMap::new(),
        };
        sys.coefficients();
        Ok(sys)
    }

    fn coefficients(&mut self) {
        let d = self.d;
        let depth = self.depth;
        let dd = Rational::from_integer(BigInt::from(d));
        let mass = walk_depth_mass(d, depth);
        let mut rows: BTreeMap<(u32, u32), Vec<(usize, Rational)>> = BTreeMap::new();
        for (ci, c) in self.classes.iter().enumerate() {
            let y0 = c.label as i64;
            self.root_index.insert((c.label, c.children.clone()), ci);
            self.y0.push(Rational::from_integer(y0.into()));
            let agree: i64 = c.children.iter().map(|&k| y0 * self.table.get(k).label as i64).sum();
            self.edge_corr.push(if depth == 0 { Rational::zero() } else { Rational::from_integer(agree.into()) / &dd });
            let mut walk = Rational::zero();
            for (j, m) in mass.iter().enumerate() {
                let size = level_size(d, j) as i64;
                let s = y0 * (2 * c.plus[j] as i64 - size);
                walk += m * Rational::new(s.into(), size.into());
            }
            self.walk_corr.push(walk);
            if depth == 0 {
                continue;
            }
            let mut i = 0;
            while i < c.children.len() {
                let b = c.children[i];
                let mut j = i;
                while j < c.children.len() && c.children[j] == b {
                    j += 1;
                }
                let others: Vec<u32> = c.children.iter().enumerate().filter(|&(t, _)| t != i).map(|(_, &o)| o).collect();
                let a = if depth == 1 {
                    self.table.intern(c.label, vec![])
                } else {
                    let kids = others.iter().map(|&o| self.table.truncate(o)).collect();
                    self.table.intern(c.label, kids)
                };
                if a != b {
                    let (key, sign) = if a < b { ((a, b), 1) } else { ((b, a), -1) };
                    let coef = Rational::new(BigInt::from(sign * (j - i) as i64), BigInt::from(d));
                    let row = rows.entry(key).or_default();
                    match row.last_mut() {
                        Some((last, v)) if *last == ci => *v += coef,
                        _ => row.push((ci, coef)),
                    }
                }
                i = j;
            }
        }
        self.consistency = rows.into_values().map(|r| r.into_iter().filter(|(_, v)| !v.is_zero()).collect::<Vec<_>>()).filter(|r| !r.is_empty()).collect();
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Sum of orbit sizes: the number of labelings the system represents.
    pub fn labeling_count(&self) -> u128 {
        self.classes.iter().map(|c| c.orbit).sum()
    }

    pub fn class_of(&self, label: i8, children: &[u32]) -> Option<usize> {
        let mut kids = children.to_vec();
        kids.sort_unstable();
        self.root_index.get(&(label, kids)).copied()
    }

    /// Lifted class distribution of a `d`-regular graph with vertex labels
    /// `y`: vertex `i` contributes the class of its depth-`L` nonbacktracking
    /// walk tree with weight `1/n`.
    pub fn lift(&self, g: &MultiGraph, y: &[i8]) -> Result<Vec<Rational>, LpBoundError> {
        let n = g.n();
        if g.degree_profile().degree != Some(self.d as u64) {
            return Err(LpBoundError::NotRegular(self.d));
        }
        // arcs: (tail, head, reverse arc index)
        let mut arcs: Vec<(usize, usize, usize)> = Vec::new();
        for (u, v, m) in g.edges() {
            for _ in 0..m {
                let a = arcs.len();
                arcs.push((u, v, a + 1));
                arcs.push((v, u, a));
            }
        }
        let mut out_arcs = vec![Vec::new(); n];
        for (a, &(u, _, _)) in arcs.iter().enumerate() {
            out_arcs[u].push(a);
        }
        // memo[h][arc]: branch id of the subtree reached through `arc`, height h
        let mut memo: Vec<Vec<Option<u32>>> = Vec::new();
        for h in 0..self.depth {
            let mut level = vec![None; arcs.len()];
            for (a, &(_, v, rev)) in arcs.iter().enumerate() {
                let kids: Option<Vec<u32>> = if h == 0 {
                    Some(vec![])
                } else {
                    out_arcs[v].iter().filter(|&&b| b != rev).map(|&b| memo[h - 1][b]).collect()
                };
                level[a] = kids.and_then(|mut k| {
                    k.sort_unstable();
                    self.table.lookup(y[v], &k)
                });
            }
            memo.push(level);
        }
        let mut p = vec![Rational::zero(); self.len()];
        let share = Rational::new(BigInt::one(), BigInt::from(n));
        for i in 0..n {
            let kids: Option<Vec<u32>> =
                if self.depth == 0 { Some(vec![]) } else { out_arcs[i].iter().map(|&a| memo[self.depth - 1][a]).collect() };
            let idx = kids.and_then(|k| self.class_of(y[i], &k)).ok_or(LpBoundError::NotInSystem(i))?;
            p[idx] += &share;
        }
        Ok(p)
    }
}

pub fn enumerate_classes(d: usize, depth: usize, mode: ClassMode) -> Result<LabelingClassSystem, LpBoundError> {
    LabelingClassSystem::enumerate(d, depth, mode)
}

/// Root-mean and walk-correlation windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Windows {
    pub root: (f64, f64),
    pub walk: Option<(f64, f64)>,
}

/// With `v = E[y_0]` in `[l, u]` and `s = (lambda/d)^L`, the walk correlation
/// lies in `[v^2 - s(1 - v^2), v^2 + s(1 - v^2)]`, lower end `v^2` for even `L`.
pub fn windows(d: usize, depth: usize, alpha: f64, delta: f64, lambda: f64) -> Windows {
    windows_over(d, depth, alpha, alpha, delta, lambda)
}

/// Union of the windows for every `alpha` in `[alpha_lo, alpha_hi]`.
pub fn windows_over(d: usize, depth: usize, alpha_lo: f64, alpha_hi: f64, delta: f64, lambda: f64) -> Windows {
    let l = (2.0 * alpha_lo - 1.0 - 2.0 * delta).max(-1.0);
    let u = (2.0 * alpha_hi - 1.0 + 2.0 * delta).min(1.0);
    if depth == 0 {
        return Windows { root: (l, u), walk: None };
    }
    let lo2 = if l <= 0.0 && 0.0 <= u { 0.0 } else { (l * l).min(u * u) };
    let hi2 = (l * l).max(u * u);
    let s = (lambda / d as f64).powi(depth as i32);
    let upper = |v2: f64| v2 + s * (1.0 - v2);
    let lower = |v2: f64| if depth % 2 == 0 { v2 } else { v2 - s * (1.0 - v2) };
    let hi = upper(lo2).max(upper(hi2));
    let lo = lower(lo2).min(lower(hi2));
    Windows { root: (l, u), walk: Some((lo, hi)) }
}

#[derive(Debug, Clone)]
pub struct CertLp<T> {
    pub lp: LinearProgram<T>,
    pub alpha: f64,
    /// Equal to `alpha` except for interval relaxations.
    pub alpha_hi: f64,
    pub delta: f64,
    pub lambda: f64,
    pub windows: Windows,
}

pub fn assemble_lp<T: LpScalar>(sys: &LabelingClassSystem, alpha: f64, delta: f64, lambda: f64) -> Result<CertLp<T>, LpBoundError> {
    assemble_lp_over(sys, alpha, alpha, delta, lambda)
}

/// LP whose feasible set contains that of `assemble_lp` for every `alpha`
/// in `[alpha, alpha_hi]`.
pub fn assemble_lp_over<T: LpScalar>(
    sys: &LabelingClassSystem,
    alpha: f64,
    alpha_hi: f64,
    delta: f64,
    lambda: f64,
) -> Result<CertLp<T>, LpBoundError> {
    let unit = 0.0..=1.0;
    if !unit.contains(&alpha) || !unit.contains(&alpha_hi) || alpha > alpha_hi || delta < 0.0 || !(lambda > 0.0) {
        return Err(LpBoundError::Parameter(format!("alpha = [{alpha}, {alpha_hi}], delta = {delta}, lambda = {lambda}")));
    }
    let n = sys.len();
    let w = windows_over(sys.d, sys.depth, alpha, alpha_hi, delta, lambda);
    let f = |x: f64| T::from_f64(x).expect("finite window");
    let r = |x: &Rational| T::from_rational(x);
    let mut lp = LinearProgram::new(n);
    lp.var_names = (0..n).map(|j| format!("p{j}")).collect();
    if sys.mode != ClassMode::IndependentSet {
        let half = Rational::new(BigInt::one(), BigInt::from(2));
        lp.objective = sys.edge_corr.iter().map(|e| r(&((Rational::one() - e) * &half))).collect();
    }
    let dense = |v: &[Rational]| v.iter().enumerate().filter(|(_, x)| !x.is_zero()).map(|(j, x)| (j, r(x))).collect::<Vec<_>>();
    lp.add_row("simplex", (0..n).map(|j| (j, T::one())).collect(), Sense::Eq, T::one());
    lp.add_row("root_lo", dense(&sys.y0), Sense::Ge, f(w.root.0));
    lp.add_row("root_hi", dense(&sys.y0), Sense::Le, f(w.root.1));
    if let Some((lo, hi)) = w.walk {
        lp.add_row("walk_lo", dense(&sys.walk_corr), Sense::Ge, f(lo));
        lp.add_row("walk_hi", dense(&sys.walk_corr), Sense::Le, f(hi));
    }
    for (i, row) in sys.consistency.iter().enumerate() {
        lp.add_row(format!("cons{i}"), row.iter().map(|(j, v)| (*j, r(v))).collect(), Sense::Eq, T::zero());
    }
    Ok(CertLp { lp, alpha, alpha_hi, delta, lambda, windows: w })
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpResult {
    Optimal { value: f64 },
    Infeasible,
}

pub fn solve_lp<T: LpScalar>(cert: &CertLp<T>) -> Result<LpResult, LpBoundError> {
    match Simplex::<T>::default().solve(&cert.lp) {
        Ok(LpOutcome::Optimal { value, .. }) => Ok(LpResult::Optimal { value: value.to_f64().unwrap_or(f64::NAN) }),
        Ok(LpOutcome::Infeasible { .. }) => Ok(LpResult::Infeasible),
        Ok(LpOutcome::Unbounded) => Err(LpBoundError::Unbounded { alpha: cert.alpha }),
        Err(source) => Err(LpBoundError::Lp { alpha: cert.alpha, source }),
    }
}

/// Rounds up to three decimals after adding `slack`.
pub fn round_up_3(x: f64, slack: f64) -> f64 {
    ((x + slack) * 1000.0 - 1e-9).ceil() / 1000.0
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub mode: ClassMode,
    pub d: usize,
    pub depth: usize,
    pub delta: f64,
    pub eps: f64,
    pub lambda: f64,
    /// Reported bound, rounded up to three decimals.
    pub bound: f64,
    /// Unrounded value: max LP optimum (max-cut) or largest feasible grid
    /// alpha (independent set).
    pub raw: f64,
    pub arg_alpha: Option<f64>,
    pub classes: usize,
    pub consistency_rows: usize,
    pub alphas_solved: usize,
}

#[derive(Debug, Clone, Default)]
pub struct CertifyOptions {
    pub export_dir: Option<std::path::PathBuf>,
    pub class_guard: Option<usize>,
    /// Solve every grid point instead of pruning `alpha` intervals.
    pub exhaustive: bool,
}

impl Certificate {
    fn set_max(&mut self, best: Option<(f64, f64)>) {
        if let Some((alpha, v)) = best {
            self.arg_alpha = Some(alpha);
            self.raw = v;
            self.bound = round_up_3(v, 1e-6);
        }
    }
}

pub fn certify_upper_bound(d: usize, depth: usize, mode: ClassMode, delta: f64, eps: f64) -> Result<Certificate, LpBoundError> {
    certify_with(d, depth, mode, delta, eps, &CertifyOptions::default())
}

/// Max-cut: maximum of LP optima over `alpha in {0, delta, ..., 1/2}`.
/// Independent set: largest feasible grid `alpha`, plus `delta`.
pub fn certify_with(d: usize, depth: usize, mode: ClassMode, delta: f64, eps: f64, opts: &CertifyOptions) -> Result<Certificate, LpBoundError> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(LpBoundError::Parameter(format!("delta = {delta}")));
    }
    let sys = LabelingClassSystem::enumerate_guarded(d, depth, mode, opts.class_guard.unwrap_or(DEFAULT_CLASS_GUARD))?;
    let lambda = 2.0 * ((d - 1) as f64).sqrt() + eps;
    let steps = (0.5 / delta).round() as usize;
    let alpha_at = |j: usize| j as f64 * delta;
    let solve_over = |lo: usize, hi: usize| -> Result<LpResult, LpBoundError> {
        let cert = assemble_lp_over::<f64>(&sys, alpha_at(lo), alpha_at(hi), delta, lambda)?;
        if let Some(dir) = &opts.export_dir {
            std::fs::create_dir_all(dir)?;
            let name = if lo == hi { format!("{mode:?}_d{d}_L{depth}_a{lo:05}.lp") } else { format!("{mode:?}_d{d}_L{depth}_a{lo:05}-{hi:05}.lp") };
            std::fs::write(Path::new(dir).join(name.to_lowercase()), cert.lp.to_lp_format())?;
        }
        solve_lp(&cert)
    };
    let solve_at = |j: usize| solve_over(j, j);
    let mut cert = Certificate {
        mode,
        d,
        depth,
        delta,
        eps,
        lambda,
        bound: f64::NAN,
        raw: f64::NAN,
        arg_alpha: None,
        classes: sys.len(),
        consistency_rows: sys.consistency.len(),
        alphas_solved: 0,
    };
    match mode {
        ClassMode::IndependentSet => {
            for j in (0..=steps).rev() {
                cert.alphas_solved += 1;
                if matches!(solve_at(j)?, LpResult::Optimal { .. }) {
                    cert.arg_alpha = Some(alpha_at(j));
                    cert.raw = alpha_at(j);
                    cert.bound = round_up_3(alpha_at(j) + delta, 0.0);
                    break;
                }
            }
        }
        _ if opts.exhaustive => {
            let results = (0..=steps).into_par_iter().map(|j| solve_at(j).map(|r| (j, r))).collect::<Result<Vec<_>, _>>()?;
            cert.alphas_solved = results.len();
            let mut best: Option<(usize, f64)> = None;
            for (j, r) in results {
                if let LpResult::Optimal { value } = r {
                    if best.is_none_or(|(_, b)| value > b) {
                        best = Some((j, value));
                    }
                }
            }
            cert.set_max(best.map(|(j, v)| (alpha_at(j), v)));
        }
        _ => {
            // Depth-first over grid intervals; an interval LP bounds every
            // grid point inside it, so dominated or infeasible intervals are
            // dropped whole.
            let mut best: Option<(usize, f64)> = None;
            let mut stack = vec![(0usize, steps)];
            while let Some((lo, hi)) = stack.pop() {
                cert.alphas_solved += 1;
                let LpResult::Optimal { value } = solve_over(lo, hi)? else { continue };
                if best.is_some_and(|(_, b)| value <= b) {
                    continue;
                }
                if lo == hi {
                    best = Some((lo, value));
                    continue;
                }
                let mid = lo + (hi - lo) / 2;
                stack.push((lo, mid));
                stack.push((mid + 1, hi));
            }
            cert.set_max(best.map(|(j, v)| (alpha_at(j), v)));
        }
    }
    Ok(cert)
}

/// Flips single vertices while that strictly increases the cut.
pub fn locally_optimize_cut(g: &MultiGraph, y: &mut [i8]) {
    let adj = g.adjacency_lists();
    loop {
        let mut improved = false;
        for v in 0..g.n() {
            let same = adj[v].iter().filter(|&&u| u != v && y[u] == y[v]).count();
            let diff = adj[v].iter().filter(|&&u| u != v && y[u] != y[v]).count();
            if same > diff {
                y[v] = -y[v];
                improved = true;
            }
        }
        if !improved {
            return;
        }
    }
}

/// Largest violation of the assembled constraints at `p`, and the objective.
pub fn evaluate_point(cert: &CertLp<f64>, p: &[Rational]) -> (f64, f64) {
    let x: Vec<f64> = p.iter().map(|v| v.to_f64().unwrap()).collect();
    (cert.lp.max_violation(&x), cert.lp.evaluate(&x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(p: i64, q: i64) -> Rational {
        Rational::new(p.into(), q.into())
    }

    #[test]
    fn tree_sizes() {
        assert_eq!(build_tree(4, 0).len(), 1);
        assert_eq!(build_tree(4, 2).len(), 17);
        assert_eq!(build_tree(3, 4).len(), 46);
        for (d, l) in [(3, 3), (4, 3), (5, 2)] {
            let formula = 1 + d * ((d - 1usize).pow(l as u32) - 1) / (d - 2);
            let t = build_tree(d, l);
            assert_eq!(t.len(), formula);
            assert_eq!(t.children(0).len(), d);
            assert!(t.children(1).len() == d - 1 || l == 1);
        }
    }

    #[test]
    fn walk_examples() {
        let p = walk_distribution(3, 1);
        assert_eq!(p[0], rat(0, 1));
        assert!(p[1..].iter().all(|x| *x == rat(1, 3)));
        let p = walk_distribution(3, 2);
        assert_eq!(p[0], rat(1, 3));
        assert!(p[1..4].iter().all(|x| x.is_zero()));
        assert!(p[4..].iter().all(|x| *x == rat(1, 9)));
        for (d, l) in [(3, 4), (4, 3), (5, 5)] {
            assert_eq!(walk_distribution(d, l).iter().sum::<Rational>(), Rational::one());
        }
    }

    #[test]
    fn class_counts() {
        let count = |d, l, m| LabelingClassSystem::enumerate(d, l, m).unwrap().len();
        assert_eq!(count(3, 1, ClassMode::MaxCut), 4);
        assert_eq!(count(4, 1, ClassMode::MaxCut), 6);
        assert_eq!(count(3, 2, ClassMode::MaxCut), 12);
        assert_eq!(count(4, 2, ClassMode::MaxCut), 70);
        assert_eq!(count(3, 3, ClassMode::MaxCut), 82);
        assert_eq!(count(3, 1, ClassMode::IndependentSet), 4);
        assert_eq!(count(4, 1, ClassMode::IndependentSet), 5);
        assert_eq!(count(3, 2, ClassMode::IndependentSet), 10);
        assert_eq!(count(3, 3, ClassMode::IndependentSet), 56);
        assert_eq!(count(3, 0, ClassMode::MaxCut), 2);
    }

    /// Brute force over every labeling of the explicit tree.
    fn brute_counts(d: usize, l: usize) -> (u128, u128, u128) {
        let t = build_tree(d, l);
        let n = t.len();
        let kids: Vec<Vec<usize>> = (0..n).map(|v| t.children(v)).collect();
        let edges: Vec<(usize, usize)> = (1..n).map(|v| (t.parent[v].unwrap(), v)).collect();
        let leaves: Vec<usize> = (0..n).filter(|&v| kids[v].is_empty()).collect();
        let cut = |y: &[i8]| edges.iter().filter(|&&(a, b)| y[a] != y[b]).count();
        let mut best_for_leaves: HashMap<Vec<i8>, usize> = HashMap::new();
        let all: Vec<Vec<i8>> = (0..1u64 << n).map(|mask| (0..n).map(|v| if mask >> v & 1 == 1 { 1 } else { -1 }).collect()).collect();
        for y in &all {
            let key: Vec<i8> = leaves.iter().map(|&v| y[v]).collect();
            let e = best_for_leaves.entry(key).or_insert(0);
            *e = (*e).max(cut(y));
        }
        let mut mc = 0;
        let mut is = 0;
        for y in &all {
            let key: Vec<i8> = leaves.iter().map(|&v| y[v]).collect();
            if cut(y) == best_for_leaves[&key] {
                mc += 1;
            }
            let greedy = (0..n).all(|v| kids[v].is_empty() || (y[v] == 1) == kids[v].iter().all(|&c| y[c] == -1));
            if greedy {
                is += 1;
            }
        }
        (all.len() as u128, mc, is)
    }

    #[test]
    fn orbit_sizes_sum_to_labelings() {
        for (d, l) in [(3, 1), (3, 2), (4, 1)] {
            let (all, mc, is) = brute_counts(d, l);
            assert_eq!(LabelingClassSystem::enumerate(d, l, ClassMode::Unrestricted).unwrap().labeling_count(), all);
            assert_eq!(LabelingClassSystem::enumerate(d, l, ClassMode::MaxCut).unwrap().labeling_count(), mc);
            assert_eq!(LabelingClassSystem::enumerate(d, l, ClassMode::IndependentSet).unwrap().labeling_count(), is);
        }
    }

    #[test]
    fn orbit_coefficients_match_expansion() {
        // Expand each (3,2) class into its explicit labelings and average.
        let sys = LabelingClassSystem::enumerate(3, 2, ClassMode::Unrestricted).unwrap();
        let t = build_tree(3, 2);
        let walk = walk_distribution(3, 2);
        let n = t.len();
        let kids: Vec<Vec<usize>> = (0..n).map(|v| t.children(v)).collect();
        let mut sums: Vec<(Rational, Rational, u128)> = vec![(Rational::zero(), Rational::zero(), 0); sys.len()];
        for mask in 0..1u64 << n {
            let y: Vec<i8> = (0..n).map(|v| if mask >> v & 1 == 1 { 1 } else { -1 }).collect();
            let branch = |v: usize| {
                let k: Vec<u32> = kids[v].iter().map(|&c| sys.table.lookup(y[c], &[]).unwrap()).collect();
                let mut k = k;
                k.sort_unstable();
                sys.table.lookup(y[v], &k).unwrap()
            };
            let root_kids: Vec<u32> = kids[0].iter().map(|&c| branch(c)).collect();
            let ci = sys.class_of(y[0], &root_kids).unwrap();
            let edge: i64 = kids[0].iter().map(|&c| (y[0] * y[c]) as i64).sum();
            let w: Rational = (0..n).map(|v| &walk[v] * Rational::from_integer(((y[0] * y[v]) as i64).into())).sum();
            sums[ci].0 += rat(edge, 3);
            sums[ci].1 += w;
            sums[ci].2 += 1;
        }
        for (ci, (e, w, count)) in sums.into_iter().enumerate() {
            assert_eq!(count, sys.classes[ci].orbit);
            let c = Rational::from_integer((count as i64).into());
            assert_eq!(e / &c, sys.edge_corr[ci]);
            assert_eq!(w / &c, sys.walk_corr[ci]);
        }
    }

    #[test]
    fn depth_zero_window() {
        let sys = LabelingClassSystem::enumerate(3, 0, ClassMode::MaxCut).unwrap();
        for (alpha, feasible) in [(0.5, true), (0.0, true), (1.0, true)] {
            let lp = assemble_lp::<f64>(&sys, alpha, 0.01, 3.0).unwrap();
            assert_eq!(matches!(solve_lp(&lp).unwrap(), LpResult::Optimal { .. }), feasible);
        }
        assert!(assemble_lp::<f64>(&sys, 1.5, 0.01, 3.0).is_err());
    }

    #[test]
    fn odd_window_at_half() {
        let w = windows(3, 1, 0.5, 0.0, 2.0);
        assert_eq!(w.walk, Some((-2.0 / 3.0, 2.0 / 3.0)));
    }

    #[test]
    fn hoffman_d3_depth1() {
        let c = certify_upper_bound(3, 1, ClassMode::MaxCut, 0.005, 1e-5).unwrap();
        let hoffman = 0.5 + (2.0 * 2f64.sqrt() + 1e-5) / 6.0;
        assert!((c.raw - hoffman).abs() < 2e-3, "{c:?}");
        assert!(c.raw >= hoffman - 1e-9);
    }

    #[test]
    fn interval_pruning_matches_grid() {
        for (d, l, delta) in [(3, 1, 0.01), (4, 1, 0.01), (3, 2, 0.01), (4, 2, 0.005)] {
            let pruned = certify_upper_bound(d, l, ClassMode::MaxCut, delta, 1e-5).unwrap();
            let opts = CertifyOptions { exhaustive: true, ..Default::default() };
            let full = certify_with(d, l, ClassMode::MaxCut, delta, 1e-5, &opts).unwrap();
            assert!((pruned.raw - full.raw).abs() < 1e-9, "{pruned:?} {full:?}");
            assert_eq!(pruned.bound, full.bound);
            assert!(pruned.alphas_solved < full.alphas_solved);
        }
    }

    #[test]
    fn independent_set_scan_matches_full_sweep() {
        for (d, l) in [(3, 1), (4, 1), (3, 2), (4, 2)] {
            let c = certify_upper_bound(d, l, ClassMode::IndependentSet, 0.01, 1e-5).unwrap();
            let sys = LabelingClassSystem::enumerate(d, l, ClassMode::IndependentSet).unwrap();
            let feasible: Vec<usize> = (0..=50)
                .filter(|&j| {
                    let cert = assemble_lp::<f64>(&sys, j as f64 * 0.01, 0.01, c.lambda).unwrap();
                    matches!(solve_lp(&cert).unwrap(), LpResult::Optimal { .. })
                })
                .collect();
            let top = *feasible.last().unwrap();
            assert!((c.raw - top as f64 * 0.01).abs() < 1e-12, "d={d} L={l}");
        }
    }

    #[test]
    fn interval_windows_contain_point_windows() {
        let lambda = 2.0 * 3f64.sqrt();
        for depth in 1..=4 {
            let outer = windows_over(4, depth, 0.2, 0.4, 0.001, lambda);
            for a in [0.2, 0.25, 0.3, 0.4] {
                let w = windows(4, depth, a, 0.001, lambda);
                assert!(outer.root.0 <= w.root.0 && w.root.1 <= outer.root.1);
                let (ol, oh) = outer.walk.unwrap();
                let (l, h) = w.walk.unwrap();
                assert!(ol <= l && h <= oh);
            }
        }
    }

    #[test]
    fn lift_of_k4_is_feasible() {
        let edges: Vec<_> = (0..4).flat_map(|u| (u + 1..4).map(move |v| (u, v))).collect();
        let g = MultiGraph::from_edges(4, &edges).unwrap();
        let lambda = 2.0 * 2f64.sqrt() + 1e-5;
        for l in 1..=2 {
            let sys = LabelingClassSystem::enumerate(3, l, ClassMode::Unrestricted).unwrap();
            for mask in 0..16u32 {
                let y: Vec<i8> = (0..4).map(|v| if mask >> v & 1 == 1 { 1 } else { -1 }).collect();
                let p = sys.lift(&g, &y).unwrap();
                let alpha = mask.count_ones() as f64 / 4.0;
                let cert = assemble_lp::<f64>(&sys, alpha, 1e-12, lambda).unwrap();
                let (viol, obj) = evaluate_point(&cert, &p);
                assert!(viol <= 1e-9, "L={l} mask={mask} viol={viol}");
                let cut = edges.iter().filter(|&&(a, b)| y[a] != y[b]).count() as f64 / 6.0;
                assert!((obj - cut).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn rational_solve_matches_float() {
        let sys = LabelingClassSystem::enumerate(3, 2, ClassMode::MaxCut).unwrap();
        let lambda = 2.0 * 2f64.sqrt() + 1e-5;
        let f = solve_lp(&assemble_lp::<f64>(&sys, 0.5, 0.0005, lambda).unwrap()).unwrap();
        let q = solve_lp(&assemble_lp::<Rational>(&sys, 0.5, 0.0005, lambda).unwrap()).unwrap();
        match (f, q) {
            (LpResult::Optimal { value: a }, LpResult::Optimal { value: b }) => assert!((a - b).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }
}
