//! Ramanujan certification and witness scoring.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::graph_core::MultiGraph;
use crate::linalg::jacobi_eigenvalues;
use crate::Rational;

pub const JACOBI_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Ramanujan,
    NotRamanujan,
    BoundaryUncertain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Float,
    Exact,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub eigenvalues: Vec<f64>,
    pub lambda_star: f64,
    pub threshold: f64,
    pub error_bound: f64,
    pub verdict: Option<Verdict>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CertError {
    #[error("graph is not regular")]
    NotRegular,
    #[error("degree {0} is below 2")]
    DegreeTooSmall(u64),
    #[error("graph has no vertices")]
    Empty,
    #[error("witness vertex {0} out of range for {1} vertices")]
    WitnessOutOfRange(usize, usize),
    #[error("duplicate witness vertex {0}")]
    DuplicateVertex(usize),
    #[error("bad witness token {0:?}")]
    BadToken(String),
    #[error("expected a {expected:?} witness")]
    WrongKind { expected: WitnessKind },
    #[error("float verdict is within the error bound of the threshold; rerun in exact mode")]
    Uncertain,
}

/// Eigenvalues of the adjacency matrix, descending. `verdict` is unset.
pub fn spectrum(g: &MultiGraph) -> SpectralReport {
    let a: Vec<Vec<f64>> =
        g.adjacency_matrix().into_iter().map(|r| r.into_iter().map(|x| x as f64).collect()).collect();
    let e = jacobi_eigenvalues(a, JACOBI_TOL, MAX_SWEEPS);
    let lambda_star = e.values.iter().skip(1).fold(0.0f64, |m, v| m.max(v.abs()));
    let d = g.degree_profile().degree.unwrap_or(0) as f64;
    SpectralReport {
        eigenvalues: e.values,
        lambda_star,
        threshold: 2.0 * (d - 1.0).max(0.0).sqrt(),
        error_bound: e.error_bound,
        verdict: None,
    }
}

pub fn is_ramanujan(g: &MultiGraph, mode: Mode) -> Result<SpectralReport, CertError> {
    if g.n() == 0 {
        return Err(CertError::Empty);
    }
    let d = g.degree_profile().degree.ok_or(CertError::NotRegular)?;
    if d < 2 {
        return Err(CertError::DegreeTooSmall(d));
    }
    let mut report = spectrum(g);
    let gap = report.lambda_star - report.threshold;
    report.verdict = Some(match mode {
        Mode::Float if gap.abs() <= report.error_bound => Verdict::BoundaryUncertain,
        Mode::Float if gap < 0.0 => Verdict::Ramanujan,
        Mode::Float => Verdict::NotRamanujan,
        Mode::Exact if exact_psd_certificate(g, d) => Verdict::Ramanujan,
        Mode::Exact => Verdict::NotRamanujan,
    });
    Ok(report)
}

/// Decides `4(d-1)I - (A - (d/n)J)^2 >= 0` exactly. For a `d`-regular `A`
/// that matrix times `n` is `4(d-1)n I - n A^2 + d^2 J`.
fn exact_psd_certificate(g: &MultiGraph, d: u64) -> bool {
    let n = g.n();
    let a = g.adjacency_matrix();
    let d = d as i64;
    let ni = n as i64;
    let mut m = vec![vec![BigInt::zero(); n]; n];
    for i in 0..n {
        for j in i..n {
            let a2: i64 = (0..n).map(|k| a[i][k] * a[k][j]).sum();
            let mut v = d * d - ni * a2;
            if i == j {
                v += 4 * (d - 1) * ni;
            }
            m[i][j] = BigInt::from(v);
            m[j][i] = BigInt::from(v);
        }
    }
    is_psd_fraction_free(m)
}

/// Fraction-free symmetric elimination. Pivots are taken in order; a zero
/// pivot requires its remaining row to vanish.
pub fn is_psd_fraction_free(mut m: Vec<Vec<BigInt>>) -> bool {
    let n = m.len();
    let mut alive: Vec<usize> = (0..n).collect();
    let mut prev = BigInt::from(1);
    while let Some(&p) = alive.first() {
        alive.remove(0);
        let piv = m[p][p].clone();
        if piv.is_negative() {
            return false;
        }
        if piv.is_zero() {
            if alive.iter().any(|&j| !m[p][j].is_zero()) {
                return false;
            }
            continue;
        }
        for (ii, &i) in alive.iter().enumerate() {
            for &j in &alive[ii..] {
                let num = &piv * &m[i][j] - &m[i][p] * &m[p][j];
                let (q, r) = num.div_rem(&prev);
                debug_assert!(r.is_zero());
                m[i][j] = q.clone();
                m[j][i] = q;
            }
        }
        prev = piv;
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    Cut,
    IndependentSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub kind: WitnessKind,
    pub vertices: Vec<usize>,
}

impl Witness {
    /// Parses whitespace-separated 0-based ids, rejecting duplicates.
    pub fn parse(kind: WitnessKind, text: &str) -> Result<Self, CertError> {
        let mut seen = HashSet::new();
        let mut vertices = Vec::new();
        for tok in text.split_whitespace() {
            let v: usize = tok.parse().map_err(|_| CertError::BadToken(tok.to_string()))?;
            if !seen.insert(v) {
                return Err(CertError::DuplicateVertex(v));
            }
            vertices.push(v);
        }
        Ok(Self { kind, vertices })
    }

    fn membership(&self, n: usize) -> Result<Vec<bool>, CertError> {
        let mut inside = vec![false; n];
        for &v in &self.vertices {
            if v >= n {
                return Err(CertError::WitnessOutOfRange(v, n));
            }
            inside[v] = true;
        }
        Ok(inside)
    }
}

/// Fraction of edges (with multiplicity) with exactly one endpoint in `S`.
pub fn cut_fraction(g: &MultiGraph, w: &Witness) -> Result<Rational, CertError> {
    if w.kind != WitnessKind::Cut {
        return Err(CertError::WrongKind { expected: WitnessKind::Cut });
    }
    let inside = w.membership(g.n())?;
    let crossing: u64 = g.edges().filter(|&(u, v, _)| inside[u] != inside[v]).map(|e| e.2 as u64).sum();
    let total = g.edge_count();
    if total == 0 {
        return Ok(Rational::zero());
    }
    Ok(Rational::new(crossing.into(), total.into()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IsOutcome {
    Fraction(Rational),
    /// Edges with both endpoints in the set; loops included.
    Violation(Vec<(usize, usize)>),
}

pub fn independent_set_fraction(g: &MultiGraph, w: &Witness) -> Result<IsOutcome, CertError> {
    if w.kind != WitnessKind::IndependentSet {
        return Err(CertError::WrongKind { expected: WitnessKind::IndependentSet });
    }
    let inside = w.membership(g.n())?;
    let bad: Vec<(usize, usize)> = g.edges().filter(|&(u, v, _)| inside[u] && inside[v]).map(|e| (e.0, e.1)).collect();
    if !bad.is_empty() {
        return Ok(IsOutcome::Violation(bad));
    }
    if g.n() == 0 {
        return Ok(IsOutcome::Fraction(Rational::zero()));
    }
    Ok(IsOutcome::Fraction(Rational::new(w.vertices.len().into(), g.n().into())))
}

/// Extended rational with a bottom element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Score {
    NegInfinity,
    Value(Rational),
}

impl PartialOrd for Score {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Score {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Score::NegInfinity, Score::NegInfinity) => Ordering::Equal,
            (Score::NegInfinity, _) => Ordering::Less,
            (_, Score::NegInfinity) => Ordering::Greater,
            (Score::Value(a), Score::Value(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Score::NegInfinity => write!(f, "-inf"),
            Score::Value(v) => write!(f, "{v}"),
        }
    }
}

/// Fitness of a (graph, witness) pair: the witness fraction on Ramanujan
/// graphs, `-inf` otherwise.
pub fn score_pair(g: &MultiGraph, w: &Witness, mode: Mode) -> Result<Score, CertError> {
    let verdict = match is_ramanujan(g, mode) {
        Ok(r) => r.verdict.expect("set by is_ramanujan"),
        Err(CertError::NotRegular | CertError::DegreeTooSmall(_) | CertError::Empty) => return Ok(Score::NegInfinity),
        Err(e) => return Err(e),
    };
    match verdict {
        Verdict::BoundaryUncertain => return Err(CertError::Uncertain),
        Verdict::NotRamanujan => return Ok(Score::NegInfinity),
        Verdict::Ramanujan => {}
    }
    match w.kind {
        WitnessKind::Cut => cut_fraction(g, w).map(Score::Value),
        WitnessKind::IndependentSet => Ok(match independent_set_fraction(g, w)? {
            IsOutcome::Fraction(f) => Score::Value(f),
            IsOutcome::Violation(_) => Score::NegInfinity,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cycle(n: usize) -> MultiGraph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        MultiGraph::from_edges(n, &edges).unwrap()
    }

    fn complete(n: usize) -> MultiGraph {
        let edges: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        MultiGraph::from_edges(n, &edges).unwrap()
    }

    fn two_k4() -> MultiGraph {
        let mut g = MultiGraph::new(8);
        for base in [0, 4] {
            for u in 0..4 {
                for v in u + 1..4 {
                    g.add_edge(base + u, base + v).unwrap();
                }
            }
        }
        g
    }

    fn petersen() -> MultiGraph {
        let mut e = Vec::new();
        for i in 0..5 {
            e.push((i, (i + 1) % 5));
            e.push((i, i + 5));
            e.push((i + 5, (i + 2) % 5 + 5));
        }
        MultiGraph::from_edges(10, &e).unwrap()
    }

    #[test]
    fn cycle_spectrum() {
        let r = spectrum(&cycle(8));
        let mut want: Vec<f64> = (0..8).map(|j| 2.0 * (2.0 * std::f64::consts::PI * j as f64 / 8.0).cos()).collect();
        want.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (x, y) in r.eigenvalues.iter().zip(&want) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-10);
        }
        assert!(r.error_bound <= 1e-11);
    }

    #[test]
    fn k4_spectrum() {
        let r = spectrum(&complete(4));
        for (x, y) in r.eigenvalues.iter().zip([3.0, -1.0, -1.0, -1.0]) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-10);
        }
    }

    #[test]
    fn petersen_spectrum() {
        let r = spectrum(&petersen());
        let want = [3.0, 1.0, 1.0, 1.0, 1.0, 1.0, -2.0, -2.0, -2.0, -2.0];
        for (x, y) in r.eigenvalues.iter().zip(want) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-10);
        }
    }

    #[test]
    fn c4_is_boundary_ramanujan() {
        let r = is_ramanujan(&cycle(4), Mode::Exact).unwrap();
        assert_eq!(r.verdict, Some(Verdict::Ramanujan));
        let f = is_ramanujan(&cycle(4), Mode::Float).unwrap();
        assert_eq!(f.verdict, Some(Verdict::BoundaryUncertain));
    }

    #[test]
    fn disjoint_k4s_fail() {
        for mode in [Mode::Float, Mode::Exact] {
            assert_eq!(is_ramanujan(&two_k4(), mode).unwrap().verdict, Some(Verdict::NotRamanujan));
        }
        let w = Witness { kind: WitnessKind::Cut, vertices: vec![0, 1] };
        assert_eq!(score_pair(&two_k4(), &w, Mode::Exact).unwrap(), Score::NegInfinity);
    }

    #[test]
    fn non_regular_rejected() {
        let g = MultiGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(is_ramanujan(&g, Mode::Exact).unwrap_err(), CertError::NotRegular);
    }

    #[test]
    fn fractions() {
        let k2 = complete(2);
        let w = Witness { kind: WitnessKind::Cut, vertices: vec![0] };
        assert_eq!(cut_fraction(&k2, &w).unwrap(), Rational::from_integer(1.into()));
        let empty = Witness { kind: WitnessKind::IndependentSet, vertices: vec![] };
        assert_eq!(independent_set_fraction(&petersen(), &empty).unwrap(), IsOutcome::Fraction(Rational::zero()));
        let bad = Witness { kind: WitnessKind::IndependentSet, vertices: vec![0, 1] };
        assert_eq!(independent_set_fraction(&k2, &bad).unwrap(), IsOutcome::Violation(vec![(0, 1)]));
    }

    #[test]
    fn loop_in_set_is_violation() {
        let mut g = MultiGraph::new(2);
        g.add_edge(0, 0).unwrap();
        let w = Witness { kind: WitnessKind::IndependentSet, vertices: vec![0] };
        assert_eq!(independent_set_fraction(&g, &w).unwrap(), IsOutcome::Violation(vec![(0, 0)]));
    }

    #[test]
    fn c4_alternating_cut_scores_one() {
        let w = Witness { kind: WitnessKind::Cut, vertices: vec![0, 2] };
        assert_eq!(score_pair(&cycle(4), &w, Mode::Exact).unwrap(), Score::Value(Rational::from_integer(1.into())));
        assert_eq!(score_pair(&cycle(4), &w, Mode::Float).unwrap_err(), CertError::Uncertain);
    }

    #[test]
    fn witness_loader_rejects_duplicates() {
        assert_eq!(Witness::parse(WitnessKind::Cut, "1 2 1").unwrap_err(), CertError::DuplicateVertex(1));
        assert!(matches!(Witness::parse(WitnessKind::Cut, "1 x"), Err(CertError::BadToken(_))));
    }

    #[test]
    fn psd_elimination_small_cases() {
        let m = |rows: &[&[i64]]| rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
        assert!(is_psd_fraction_free(m(&[&[2, -1], &[-1, 2]])));
        assert!(is_psd_fraction_free(m(&[&[1, 1], &[1, 1]])));
        assert!(!is_psd_fraction_free(m(&[&[1, 2], &[2, 1]])));
        assert!(!is_psd_fraction_free(m(&[&[0, 1], &[1, 0]])));
        assert!(is_psd_fraction_free(m(&[&[0, 0], &[0, 3]])));
    }
}
