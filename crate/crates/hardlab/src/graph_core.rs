//! Undirected multigraphs and the sparse6 text encoding.
//!
//! Vertices are 0-based. A loop adds 2 to its vertex degree.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

const HEADER: &[u8] = b">>sparse6<<";

/// Undirected multigraph keyed by `(min, max)` endpoint pairs.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct MultiGraph {
    n: usize,
    edges: BTreeMap<(usize, usize), u32>,
}

impl fmt::Debug for MultiGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiGraph")
            .field("n", &self.n)
            .field("edges", &self.edge_count())
            .finish()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("endpoint {0} out of range for {1} vertices")]
    VertexOutOfRange(usize, usize),
}

impl MultiGraph {
    pub fn new(n: usize) -> Self {
        Self { n, edges: BTreeMap::new() }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut g = Self::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Adds one copy of edge `{u, v}`.
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<(), GraphError> {
        self.add_edges(u, v, 1)
    }

    pub fn add_edges(&mut self, u: usize, v: usize, mult: u32) -> Result<(), GraphError> {
        for x in [u, v] {
            if x >= self.n {
                return Err(GraphError::VertexOutOfRange(x, self.n));
            }
        }
        if mult > 0 {
            *self.edges.entry(key(u, v)).or_insert(0) += mult;
        }
        Ok(())
    }

    /// Removes one copy of `{u, v}`; returns false if absent.
    pub fn remove_edge(&mut self, u: usize, v: usize) -> bool {
        let k = key(u, v);
        match self.edges.get_mut(&k) {
            Some(m) if *m > 1 => {
                *m -= 1;
                true
            }
            Some(_) => {
                self.edges.remove(&k);
                true
            }
            None => false,
        }
    }

    pub fn multiplicity(&self, u: usize, v: usize) -> u32 {
        self.edges.get(&key(u, v)).copied().unwrap_or(0)
    }

    /// Distinct edges with their multiplicities, `u <= v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.edges.iter().map(|(&(u, v), &m)| (u, v, m))
    }

    /// Total edge multiplicity; a loop counts once.
    pub fn edge_count(&self) -> u64 {
        self.edges.values().map(|&m| m as u64).sum()
    }

    pub fn loop_count(&self) -> u64 {
        self.edges().filter(|e| e.0 == e.1).map(|e| e.2 as u64).sum()
    }

    /// Neighbor list with multiplicity; a loop appears twice.
    pub fn adjacency_lists(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for (u, v, m) in self.edges() {
            for _ in 0..m {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        adj
    }

    /// Dense adjacency matrix with loops on the diagonal counted twice.
    pub fn adjacency_matrix(&self) -> Vec<Vec<i64>> {
        let mut a = vec![vec![0i64; self.n]; self.n];
        for (u, v, m) in self.edges() {
            if u == v {
                a[u][u] += 2 * m as i64;
            } else {
                a[u][v] += m as i64;
                a[v][u] += m as i64;
            }
        }
        a
    }

    pub fn degree_profile(&self) -> DegreeProfile {
        let mut degrees = vec![0u64; self.n];
        for (u, v, m) in self.edges() {
            degrees[u] += m as u64;
            degrees[v] += m as u64;
        }
        let regular = degrees.windows(2).all(|w| w[0] == w[1]);
        let degree = if regular { degrees.first().copied() } else { None };
        DegreeProfile { degrees, degree }
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let adj = self.adjacency_lists();
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn to_sparse6(&self) -> String {
        write_sparse6(self)
    }
}

fn key(u: usize, v: usize) -> (usize, usize) {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Per-vertex degrees with the loop convention above.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeProfile {
    pub degrees: Vec<u64>,
    /// `Some(d)` iff every vertex has degree `d` and `n >= 1`.
    pub degree: Option<u64>,
}

impl DegreeProfile {
    pub fn is_regular(&self) -> bool {
        self.degree.is_some()
    }
}

pub fn degree_profile(g: &MultiGraph) -> DegreeProfile {
    g.degree_profile()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Sparse6Error {
    #[error("missing ':' sparse6 marker at byte {offset}")]
    MissingMarker { offset: usize },
    #[error("byte {byte:#04x} at offset {offset} is outside the printable range 63..=126")]
    InvalidByte { offset: usize, byte: u8 },
    #[error("vertex count field truncated at byte {offset}")]
    TruncatedSize { offset: usize },
    #[error("vertex index {index} >= n = {n} at byte {offset}")]
    VertexOutOfRange { offset: usize, index: u64, n: usize },
}

impl Sparse6Error {
    pub fn offset(&self) -> usize {
        match *self {
            Self::MissingMarker { offset }
            | Self::InvalidByte { offset, .. }
            | Self::TruncatedSize { offset }
            | Self::VertexOutOfRange { offset, .. } => offset,
        }
    }
}

/// Decodes a sparse6 string. Leading/trailing whitespace and an optional
/// `>>sparse6<<` header are accepted.
pub fn parse_sparse6(input: &[u8]) -> Result<MultiGraph, Sparse6Error> {
    let start = input.iter().position(|b| !b.is_ascii_whitespace()).unwrap_or(input.len());
    let end = input.iter().rposition(|b| !b.is_ascii_whitespace()).map_or(start, |e| e + 1);
    let mut pos = start;
    if input[pos..end].starts_with(HEADER) {
        pos += HEADER.len();
    }
    if input.get(pos) != Some(&b':') || pos >= end {
        return Err(Sparse6Error::MissingMarker { offset: pos });
    }
    pos += 1;
    let body = &input[pos..end];
    for (i, &b) in body.iter().enumerate() {
        if !(63..=126).contains(&b) {
            return Err(Sparse6Error::InvalidByte { offset: pos + i, byte: b });
        }
    }
    let (n, used) = decode_size(body).map_err(|o| Sparse6Error::TruncatedSize { offset: pos + o })?;
    let data = &body[used..];
    let data_offset = pos + used;
    let mut g = MultiGraph::new(n);
    let k = bits_for(n);
    let total_bits = data.len() * 6;
    let bit = |i: usize| (data[i / 6] - 63) >> (5 - i % 6) & 1;

    let mut v: u64 = 0;
    let mut i = 0;
    while i + 1 + k <= total_bits {
        let pair_start = i;
        let b = bit(i);
        i += 1;
        let mut x: u64 = 0;
        for _ in 0..k {
            x = (x << 1) | bit(i) as u64;
            i += 1;
        }
        if b == 1 {
            v += 1;
        }
        if x >= n as u64 || v >= n as u64 {
            // Only the final partial byte may hold padding.
            if total_bits - pair_start < 6 {
                break;
            }
            return Err(Sparse6Error::VertexOutOfRange {
                offset: data_offset + pair_start / 6,
                index: x.max(v),
                n,
            });
        }
        if x > v {
            v = x;
        } else {
            g.add_edge(x as usize, v as usize).expect("indices checked");
        }
    }
    Ok(g)
}

fn decode_size(body: &[u8]) -> Result<(usize, usize), usize> {
    let field = |from: usize, len: usize| -> Result<u64, usize> {
        if body.len() < from + len {
            return Err(body.len());
        }
        Ok(body[from..from + len].iter().fold(0u64, |acc, &b| (acc << 6) | (b - 63) as u64))
    };
    match body.first() {
        None => Err(0),
        Some(&126) if body.get(1) == Some(&126) => Ok((field(2, 6)? as usize, 8)),
        Some(&126) => Ok((field(1, 3)? as usize, 4)),
        Some(&b) => Ok(((b - 63) as usize, 1)),
    }
}

fn encode_size(n: usize, out: &mut Vec<u8>) {
    let push_bits = |out: &mut Vec<u8>, value: u64, groups: u32| {
        for g in (0..groups).rev() {
            out.push(((value >> (6 * g)) & 63) as u8 + 63);
        }
    };
    if n <= 62 {
        out.push(n as u8 + 63);
    } else if n <= 258_047 {
        out.push(126);
        push_bits(out, n as u64, 3);
    } else {
        out.extend_from_slice(&[126, 126]);
        push_bits(out, n as u64, 6);
    }
}

/// Number of bits needed to write `n - 1`.
fn bits_for(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Encodes `g` with the `>>sparse6<<` header, no trailing newline.
pub fn write_sparse6(g: &MultiGraph) -> String {
    let n = g.n();
    let k = bits_for(n);
    let mut sorted: Vec<(usize, usize)> = Vec::with_capacity(g.edge_count() as usize);
    for (u, v, m) in g.edges() {
        for _ in 0..m {
            sorted.push((v, u));
        }
    }
    sorted.sort_unstable();

    let mut bits: Vec<u8> = Vec::new();
    let push = |bits: &mut Vec<u8>, b: u8, x: usize| {
        bits.push(b);
        for j in (0..k).rev() {
            bits.push((x >> j & 1) as u8);
        }
    };
    let mut cur = 0usize;
    for &(v, u) in &sorted {
        if v == cur {
            push(&mut bits, 0, u);
        } else if v == cur + 1 {
            cur = v;
            push(&mut bits, 1, u);
        } else {
            cur = v;
            push(&mut bits, 1, v);
            push(&mut bits, 0, u);
        }
    }
    let pad = (6 - bits.len() % 6) % 6;
    if k < 6 && n == 1 << k && pad >= k && cur + 1 < n {
        bits.push(0);
    }
    while bits.len() % 6 != 0 {
        bits.push(1);
    }

    let mut out = HEADER.to_vec();
    out.push(b':');
    encode_size(n, &mut out);
    for chunk in bits.chunks(6) {
        out.push(chunk.iter().fold(0u8, |acc, &b| (acc << 1) | b) + 63);
    }
    String::from_utf8(out).expect("sparse6 output is ASCII")
}
