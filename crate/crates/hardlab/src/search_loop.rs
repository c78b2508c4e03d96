//! Seeded propose-test-refine loops over gadget families and
//! (graph, witness) pairs. Proposals are random mutations; tests are the
//! exact scoring functions of `reduction_calc` and `spectral_cert`.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::gadget_core::Gadget;
use crate::graph_core::MultiGraph;
use crate::kcut_solver::Clause;
use crate::lp_bounds::locally_optimize_cut;
use crate::reduction_calc::{reduction_summary, rotate_shift, rotate_swap_last, ReductionError, ReductionSummary};
use crate::spectral_cert::{is_ramanujan, score_pair, Mode, Score, Verdict, Witness, WitnessKind};
use crate::Rational;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("degree {0} not supported (need 3 or 4)")]
    Degree(usize),
    #[error("no {d}-regular graph fits in {n_max} vertices")]
    TooSmall { d: usize, n_max: usize },
    #[error("initial family: {0}")]
    Initial(#[from] ReductionError),
    #[error("k = {0} not supported (need k >= 2)")]
    Alphabet(usize),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Budget {
    pub evals: usize,
    pub wall: Option<Duration>,
}

impl Budget {
    pub fn evals(evals: usize) -> Self {
        Self { evals, wall: None }
    }

    fn spent(&self, evals: usize, start: Instant) -> bool {
        evals >= self.evals || self.wall.is_some_and(|w| start.elapsed() >= w)
    }
}

/// The free gadgets of a family. For `k = 3` the family is
/// `[I0, I1, swap(I1)]`; for `k = 2`, `[I0, I1]`; for `k >= 4`,
/// `I_i = shift(I_{i-1})`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Genome {
    pub k: usize,
    pub free: Vec<Gadget>,
}

impl Genome {
    pub fn slots(k: usize) -> usize {
        if k <= 3 {
            2
        } else {
            1
        }
    }

    pub fn expand(&self) -> Result<Vec<Gadget>, ReductionError> {
        match self.k {
            2 => Ok(self.free.clone()),
            3 => Ok(vec![self.free[0].clone(), self.free[1].clone(), rotate_swap_last(&self.free[1])?]),
            k => {
                let mut fam = vec![self.free[0].clone()];
                for _ in 1..k {
                    let next = rotate_shift(fam.last().expect("non-empty"))?;
                    fam.push(next);
                }
                Ok(fam)
            }
        }
    }
}

pub fn random_gadget(rng: &mut impl Rng, k: usize, n_aux: usize, weight_max: i64) -> Gadget {
    let vars = 3 + k + n_aux;
    let mut clauses = Vec::new();
    for a in 3 + k..vars {
        for _ in 0..3 {
            let b = rng.gen_range(0..vars);
            if b != a {
                clauses.push(Clause { a, b, w: Rational::from_integer(rng.gen_range(1..=weight_max).into()) });
            }
        }
    }
    Gadget::new(k, n_aux, clauses).expect("valid by construction")
}

fn mutate_gadget(rng: &mut impl Rng, g: &Gadget, weight_max: i64) -> Gadget {
    let vars = g.vars();
    let mut clauses = g.clauses.clone();
    let pair = |rng: &mut dyn rand::RngCore| loop {
        let a = rng.gen_range(0..vars);
        let b = rng.gen_range(0..vars);
        if a != b {
            return (a.min(b), a.max(b));
        }
    };
    match rng.gen_range(0..4) {
        0 => {
            let (a, b) = pair(rng);
            clauses.push(Clause { a, b, w: Rational::from_integer(rng.gen_range(1..=weight_max).into()) });
        }
        1 if !clauses.is_empty() => {
            clauses.swap_remove(rng.gen_range(0..clauses.len()));
        }
        2 if !clauses.is_empty() => {
            let i = rng.gen_range(0..clauses.len());
            let step = if rng.gen_bool(0.5) { 1 } else { -1 };
            let w = &clauses[i].w + Rational::from_integer(step.into());
            if w >= Rational::from_integer(1.into()) {
                clauses[i].w = w;
            }
        }
        _ if !clauses.is_empty() => {
            let i = rng.gen_range(0..clauses.len());
            let v = rng.gen_range(0..vars);
            let c = &mut clauses[i];
            if rng.gen_bool(0.5) {
                if v != c.b {
                    c.a = v;
                }
            } else if v != c.a {
                c.b = v;
            }
        }
        _ => {
            let (a, b) = pair(rng);
            clauses.push(Clause { a, b, w: Rational::from_integer(1.into()) });
        }
    }
    Gadget::new(g.k, g.n_aux, clauses).expect("mutations keep clauses valid")
}

#[derive(Debug, Clone)]
pub struct GadgetSearch {
    pub k: usize,
    pub n_aux: usize,
    pub budget: Budget,
    pub seed: u64,
    pub weight_max: i64,
    /// Starting free gadgets; random when `None`.
    pub initial: Option<Genome>,
    /// Keep `free[0]` fixed.
    pub freeze_first: bool,
}

impl GadgetSearch {
    pub fn new(k: usize, n_aux: usize, budget: Budget, seed: u64) -> Self {
        Self { k, n_aux, budget, seed, weight_max: 3, initial: None, freeze_first: false }
    }
}

#[derive(Debug, Clone)]
pub struct GadgetSearchResult {
    pub genome: Genome,
    pub family: Vec<Gadget>,
    pub summary: ReductionSummary,
    pub initial_ratio: Rational,
    pub evaluations: usize,
    /// Best ratio after each improvement, with the evaluation count.
    pub trace: Vec<(usize, Rational)>,
}

/// Minimizes `b / a`; smaller is a stronger hardness ratio.
pub fn hill_climb_gadget(cfg: &GadgetSearch) -> Result<GadgetSearchResult, SearchError> {
    if cfg.k < 2 {
        return Err(SearchError::Alphabet(cfg.k));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let start = Instant::now();
    let score = |g: &Genome| -> Result<ReductionSummary, ReductionError> { reduction_summary(&g.expand()?, false, None) };
    let (genome, mut best_summary) = match &cfg.initial {
        Some(g) => (g.clone(), score(g)?),
        None => {
            // Draw until the family has soundness at most completeness.
            let mut draw = 0;
            loop {
                let g = Genome {
                    k: cfg.k,
                    free: (0..Genome::slots(cfg.k)).map(|_| random_gadget(&mut rng, cfg.k, cfg.n_aux, cfg.weight_max)).collect(),
                };
                draw += 1;
                match score(&g) {
                    Ok(s) => break (g, s),
                    Err(e) if draw >= 1000 => return Err(e.into()),
                    Err(_) => {}
                }
            }
        }
    };
    let initial_ratio = best_summary.ratio.clone();
    let mut best = genome;
    let mut current = best.clone();
    let mut current_ratio = initial_ratio.clone();
    let mut trace = vec![(0, initial_ratio.clone())];
    let mutable: Vec<usize> = (0..best.free.len()).filter(|&i| !(cfg.freeze_first && i == 0)).collect();
    let mut evals = 0;
    while !mutable.is_empty() && !cfg.budget.spent(evals, start) {
        let slot = *mutable.choose(&mut rng).expect("non-empty");
        let mut cand = current.clone();
        cand.free[slot] = mutate_gadget(&mut rng, &current.free[slot], cfg.weight_max);
        evals += 1;
        let Ok(s) = score(&cand) else { continue };
        if s.ratio <= current_ratio {
            current = cand;
            current_ratio = s.ratio.clone();
            if s.ratio < best_summary.ratio {
                best = current.clone();
                trace.push((evals, s.ratio.clone()));
                best_summary = s;
            }
        }
    }
    Ok(GadgetSearchResult { family: best.expand()?, genome: best, summary: best_summary, initial_ratio, evaluations: evals, trace })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    MaxCut,
    IndependentSet,
}

#[derive(Debug, Clone)]
pub struct GraphSearch {
    pub d: usize,
    pub n_max: usize,
    pub objective: Objective,
    pub budget: Budget,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct GraphSearchResult {
    pub graph: MultiGraph,
    pub witness: Witness,
    pub score: Score,
    pub initial_score: Score,
    pub evaluations: usize,
}

/// Random simple `d`-regular graph by the pairing model with restarts.
pub fn random_regular(rng: &mut impl Rng, n: usize, d: usize) -> Option<MultiGraph> {
    if n <= d || (n * d) % 2 == 1 {
        return None;
    }
    'retry: for _ in 0..1000 {
        let mut points: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat(v).take(d)).collect();
        points.shuffle(rng);
        let mut g = MultiGraph::new(n);
        for p in points.chunks(2) {
            if p[0] == p[1] || g.multiplicity(p[0], p[1]) > 0 {
                continue 'retry;
            }
            g.add_edge(p[0], p[1]).expect("in range");
        }
        return Some(g);
    }
    None
}

fn witness_of(kind: WitnessKind, y: &[i8]) -> Witness {
    Witness { kind, vertices: (0..y.len()).filter(|&v| y[v] > 0).collect() }
}

/// Makes the witness locally optimal: a greedy-flip cut, or a maximal
/// independent set after dropping conflicts.
fn repair(g: &MultiGraph, kind: WitnessKind, y: &mut [i8]) {
    match kind {
        WitnessKind::Cut => locally_optimize_cut(g, y),
        WitnessKind::IndependentSet => {
            let adj = g.adjacency_lists();
            for v in 0..g.n() {
                if y[v] > 0 && adj[v].iter().any(|&u| (u == v || u < v) && y[u] > 0) {
                    y[v] = -1;
                }
            }
            for v in 0..g.n() {
                if y[v] < 0 && adj[v].iter().all(|&u| u != v && y[u] < 0) {
                    y[v] = 1;
                }
            }
        }
    }
}

fn swap_edges(rng: &mut impl Rng, g: &mut MultiGraph) -> bool {
    let edges: Vec<(usize, usize)> = g.edges().map(|(u, v, _)| (u, v)).collect();
    if edges.len() < 2 {
        return false;
    }
    let (a, b) = edges[rng.gen_range(0..edges.len())];
    let (c, e) = edges[rng.gen_range(0..edges.len())];
    let (c, e) = if rng.gen_bool(0.5) { (c, e) } else { (e, c) };
    let distinct = a != c && a != e && b != c && b != e;
    if !distinct || g.multiplicity(a, c) > 0 || g.multiplicity(b, e) > 0 {
        return false;
    }
    g.remove_edge(a, b);
    g.remove_edge(c, e);
    g.add_edge(a, c).expect("in range");
    g.add_edge(b, e).expect("in range");
    true
}

/// Adds vertices `u`, `v` joined by an edge and splits `d - 1` edges across
/// them, keeping the graph `d`-regular.
fn insert_pair(rng: &mut impl Rng, g: &MultiGraph, d: usize) -> Option<MultiGraph> {
    let mut edges: Vec<(usize, usize)> = g.edges().map(|(x, y, _)| (x, y)).collect();
    edges.shuffle(rng);
    let pick: Vec<(usize, usize)> = edges.into_iter().take(d - 1).collect();
    if pick.len() < d - 1 {
        return None;
    }
    let n = g.n();
    let mut h = MultiGraph::new(n + 2);
    for (x, y, m) in g.edges() {
        h.add_edges(x, y, m).expect("in range");
    }
    h.add_edge(n, n + 1).expect("in range");
    for (x, y) in pick {
        h.remove_edge(x, y);
        h.add_edge(x, n).expect("in range");
        h.add_edge(y, n + 1).expect("in range");
    }
    let simple = h.edges().all(|(_, _, m)| m == 1);
    simple.then_some(h)
}

fn exact_score(g: &MultiGraph, w: &Witness) -> Score {
    score_pair(g, w, Mode::Exact).unwrap_or(Score::NegInfinity)
}

fn float_score(g: &MultiGraph, w: &Witness) -> Score {
    score_pair(g, w, Mode::Float).unwrap_or(Score::NegInfinity)
}

/// Maximizes the witness fraction over Ramanujan graphs. Candidates are
/// screened in floating point; the best-so-far is only replaced after an
/// exact re-check.
pub fn hill_climb_graph(cfg: &GraphSearch) -> Result<GraphSearchResult, SearchError> {
    if cfg.d != 3 && cfg.d != 4 {
        return Err(SearchError::Degree(cfg.d));
    }
    let kind = match cfg.objective {
        Objective::MaxCut => WitnessKind::Cut,
        Objective::IndependentSet => WitnessKind::IndependentSet,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let start = Instant::now();
    let n0 = ((cfg.d + 1).max(cfg.n_max / 2)..=cfg.n_max).find(|n| n * cfg.d % 2 == 0);
    let n0 = n0.ok_or(SearchError::TooSmall { d: cfg.d, n_max: cfg.n_max })?;
    let mut g = random_regular(&mut rng, n0, cfg.d).ok_or(SearchError::TooSmall { d: cfg.d, n_max: cfg.n_max })?;
    let mut y: Vec<i8> = (0..n0).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
    repair(&g, kind, &mut y);
    let mut cur_score = exact_score(&g, &witness_of(kind, &y));
    let initial_score = cur_score.clone();
    let (mut best_g, mut best_y, mut best_score) = (g.clone(), y.clone(), cur_score.clone());
    let mut evals = 0;
    while !cfg.budget.spent(evals, start) {
        let mut h = g.clone();
        let mut z = y.clone();
        match rng.gen_range(0..10) {
            0..=5 => {
                if !swap_edges(&mut rng, &mut h) {
                    continue;
                }
            }
            6 if h.n() + 2 <= cfg.n_max => {
                let Some(bigger) = insert_pair(&mut rng, &h, cfg.d) else { continue };
                h = bigger;
                z.extend(match kind {
                    WitnessKind::Cut => [1, -1],
                    WitnessKind::IndependentSet => [-1, -1],
                });
            }
            _ => {
                let v = rng.gen_range(0..z.len());
                z[v] = -z[v];
            }
        }
        repair(&h, kind, &mut z);
        evals += 1;
        let w = witness_of(kind, &z);
        let s = float_score(&h, &w);
        if s >= cur_score || cur_score == Score::NegInfinity {
            if s > best_score {
                let exact = exact_score(&h, &w);
                if exact > best_score {
                    best_score = exact;
                    best_g = h.clone();
                    best_y = z.clone();
                }
            }
            g = h;
            y = z;
            cur_score = s;
        }
    }
    Ok(GraphSearchResult { witness: witness_of(kind, &best_y), graph: best_g, score: best_score, initial_score, evaluations: evals })
}

/// Exact re-verification of a returned pair.
pub fn reverify(g: &MultiGraph) -> bool {
    matches!(is_ramanujan(g, Mode::Exact).map(|r| r.verdict), Ok(Some(Verdict::Ramanujan)))
}
