//! Network topologies and the contact-probability matrix built on them.
//!
//! Node labels `0..n` exist only for the simulator's bookkeeping. Protocol
//! code never sees them except through [`crate::spread::ContactSampler`].

use std::collections::{HashSet, VecDeque};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::rng::{seeded_rng, shuffle};

/// Retry budget for [`build_random_regular`].
pub const DEFAULT_REGULAR_RETRIES: usize = 1000;

/// Row/column sum tolerance for [`TransitionMatrix`].
pub const STOCHASTIC_TOLERANCE: f64 = 1e-12;

/// Undirected, connected, simple graph on `n` nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Validates and builds a graph. Edges are unordered; `(u, v)` and
    /// `(v, u)` count as the same edge.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("graph needs at least one node"));
        }
        let mut seen = HashSet::new();
        let mut normalized = Vec::new();
        for (u, v) in edges {
            for node in [u, v] {
                if node >= n {
                    return Err(Error::NodeOutOfRange { node, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            let e = (u.min(v), u.max(v));
            if !seen.insert(e) {
                return Err(Error::DuplicateEdge(e.0, e.1));
            }
            normalized.push(e);
        }
        normalized.sort_unstable();

        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &normalized {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }

        let g = Graph {
            n,
            edges: normalized,
            adjacency,
        };
        if let Some(node) = g.first_unreachable() {
            return Err(Error::Disconnected(node));
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.adjacency[u].binary_search(&v).is_ok()
    }

    fn first_unreachable(&self) -> Option<usize> {
        let mut visited = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        visited[0] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if !visited[v] {
                    visited[v] = true;
                    queue.push_back(v);
                }
            }
        }
        visited.iter().position(|&seen| !seen)
    }

    /// Serializes to the line-oriented edge-list format read by
    /// [`load_edge_list`].
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        writeln!(out, "n {}", self.n).unwrap();
        for &(u, v) in &self.edges {
            writeln!(out, "{u} {v}").unwrap();
        }
        out
    }
}

pub fn build_complete(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(Error::invalid(format!("complete graph needs n >= 2, got {n}")));
    }
    let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
    Graph::new(n, edges)
}

pub fn build_ring(n: usize) -> Result<Graph> {
    if n < 3 {
        return Err(Error::invalid(format!("ring needs n >= 3, got {n}")));
    }
    Graph::new(n, (0..n).map(|u| (u, (u + 1) % n)))
}

pub fn build_path(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(Error::invalid(format!("path needs n >= 2, got {n}")));
    }
    Graph::new(n, (0..n - 1).map(|u| (u, u + 1)))
}

/// `d`-dimensional grid with side `c`: nodes are the points of `{1..c}^d`,
/// adjacent when they differ by one in exactly one coordinate.
///
/// Node index is the mixed-radix encoding `sum_k a_k c^k` of the 0-based
/// coordinates.
pub fn build_grid(d: usize, c: usize) -> Result<Graph> {
    if d < 1 {
        return Err(Error::invalid("grid dimension d must be >= 1"));
    }
    if c < 2 {
        return Err(Error::invalid(format!("grid side must satisfy c >= 2, got {c}")));
    }
    let n = u32::try_from(d)
        .ok()
        .and_then(|d| c.checked_pow(d))
        .ok_or_else(|| Error::invalid(format!("grid size {c}^{d} overflows")))?;
    let mut edges = Vec::with_capacity(d * n);
    for node in 0..n {
        let mut stride = 1;
        let mut rest = node;
        for _ in 0..d {
            if rest % c < c - 1 {
                edges.push((node, node + stride));
            }
            rest /= c;
            stride *= c;
        }
    }
    Graph::new(n, edges)
}

/// Random `deg`-regular connected graph from the pairing (configuration)
/// model, with up to [`DEFAULT_REGULAR_RETRIES`] attempts.
pub fn build_random_regular(n: usize, deg: usize, seed: u64) -> Result<Graph> {
    build_random_regular_with_budget(n, deg, seed, DEFAULT_REGULAR_RETRIES)
}

/// Each attempt shuffles the outstanding half-edge stubs and pairs them
/// off. Pairs that would form a self-loop or a parallel edge go back into
/// the pool and are re-paired in the next round; an attempt is abandoned
/// when no admissible pair remains, or when the finished graph is
/// disconnected.
pub fn build_random_regular_with_budget(
    n: usize,
    deg: usize,
    seed: u64,
    retries: usize,
) -> Result<Graph> {
    if deg < 3 {
        return Err(Error::invalid(format!("regular degree must be >= 3, got {deg}")));
    }
    if deg >= n {
        return Err(Error::invalid(format!("regular degree {deg} must be < n = {n}")));
    }
    if !(n * deg).is_multiple_of(2) {
        return Err(Error::invalid(format!("n * deg must be even, got {n} * {deg}")));
    }
    let mut rng = seeded_rng(seed);
    for _ in 0..retries {
        let Some(edges) = try_pairing(n, deg, &mut rng) else {
            continue;
        };
        match Graph::new(n, edges) {
            Ok(g) => return Ok(g),
            Err(Error::Disconnected(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::GenerationFailure(retries))
}

fn try_pairing(n: usize, deg: usize, rng: &mut crate::rng::SimRng) -> Option<Vec<(usize, usize)>> {
    let mut stubs: Vec<usize> = (0..n).flat_map(|u| std::iter::repeat_n(u, deg)).collect();
    let mut edges: HashSet<(usize, usize)> = HashSet::with_capacity(n * deg / 2);
    while !stubs.is_empty() {
        shuffle(rng, &mut stubs);
        let mut leftover = Vec::new();
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u != v && !edges.contains(&(u, v)) {
                edges.insert((u, v));
            } else {
                leftover.extend([u, v]);
            }
        }
        if !leftover.is_empty() && !admissible_pair_exists(&leftover, &edges) {
            return None;
        }
        stubs = leftover;
    }
    let mut edges: Vec<_> = edges.into_iter().collect();
    edges.sort_unstable();
    Some(edges)
}

fn admissible_pair_exists(stubs: &[usize], edges: &HashSet<(usize, usize)>) -> bool {
    let mut nodes: Vec<usize> = stubs.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    nodes.iter().enumerate().any(|(k, &u)| {
        nodes[k + 1..]
            .iter()
            .any(|&v| !edges.contains(&(u, v)))
    })
}

/// Parses the edge-list format: a header line `n <count>`, then one
/// `u v` pair per line. Blank lines and lines starting with `#` are
/// ignored.
pub fn load_edge_list(text: &str) -> Result<Graph> {
    let mut n = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parse = |s: &str| {
            s.parse::<usize>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("expected a non-negative integer, found {s:?}"),
            })
        };
        match (n, fields.as_slice()) {
            (None, ["n", count]) => n = Some(parse(count)?),
            (None, _) => {
                return Err(Error::Parse {
                    line: line_no,
                    message: "expected header `n <count>`".into(),
                })
            }
            (Some(_), [u, v]) => edges.push((parse(u)?, parse(v)?)),
            (Some(_), _) => {
                return Err(Error::Parse {
                    line: line_no,
                    message: "expected `u v`".into(),
                })
            }
        }
    }
    let n = n.ok_or_else(|| Error::Parse {
        line: 0,
        message: "missing header `n <count>`".into(),
    })?;
    Graph::new(n, edges)
}

/// Doubly stochastic contact-probability matrix, stored by rows with
/// only the non-zero entries (column-sorted).
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl TransitionMatrix {
    /// Builds and validates a matrix supported on `graph`'s edges plus the
    /// diagonal. Entries may be given in any order; zeros are dropped.
    pub fn new(graph: &Graph, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        if rows.len() != graph.n() {
            return Err(Error::DimensionMismatch {
                expected: graph.n(),
                got: rows.len(),
            });
        }
        let n = graph.n();
        let mut cleaned = Vec::with_capacity(n);
        let mut col_sums = vec![0.0; n];
        for (i, mut row) in rows.into_iter().enumerate() {
            row.retain(|&(_, p)| p != 0.0);
            row.sort_by_key(|&(j, _)| j);
            let mut row_sum = 0.0;
            for (k, &(j, p)) in row.iter().enumerate() {
                if j >= n {
                    return Err(Error::NodeOutOfRange { node: j, n });
                }
                if k > 0 && row[k - 1].0 == j {
                    return Err(Error::invalid(format!("entry ({i}, {j}) given twice")));
                }
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::invalid(format!("P[{i}][{j}] = {p} outside [0, 1]")));
                }
                if i != j && !graph.has_edge(i, j) {
                    return Err(Error::invalid(format!("P[{i}][{j}] > 0 but ({i}, {j}) is not an edge")));
                }
                row_sum += p;
                col_sums[j] += p;
            }
            if (row_sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
                return Err(Error::invalid(format!("row {i} sums to {row_sum}")));
            }
            cleaned.push(row);
        }
        if let Some((j, s)) = col_sums
            .iter()
            .enumerate()
            .find(|(_, s)| (*s - 1.0).abs() > STOCHASTIC_TOLERANCE)
        {
            return Err(Error::invalid(format!("column {j} sums to {s}; matrix is not doubly stochastic")));
        }
        Ok(TransitionMatrix { n, rows: cleaned })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Non-zero entries of row `i` as `(column, probability)`.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = &self.rows[i];
        row.binary_search_by_key(&j, |&(c, _)| c)
            .map(|k| row[k].1)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n]; self.n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, p) in row {
                dense[i][j] = p;
            }
        }
        dense
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows
            .iter()
            .enumerate()
            .all(|(i, row)| row.iter().all(|&(j, p)| self.get(j, i) == p))
    }

    /// `y = P x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (yi, row) in y.iter_mut().zip(&self.rows) {
            *yi = row.iter().map(|&(j, p)| p * x[j]).sum();
        }
    }
}

/// Max-degree chain: `P_ij = 1/Δ` on edges, `P_ii = 1 - d_i/Δ`.
pub fn max_degree_matrix(graph: &Graph) -> TransitionMatrix {
    let delta = graph.max_degree();
    let rows = (0..graph.n())
        .map(|i| {
            if delta == 0 {
                return vec![(i, 1.0)];
            }
            let share = 1.0 / delta as f64;
            let mut row: Vec<(usize, f64)> = graph.neighbors(i).iter().map(|&j| (j, share)).collect();
            let stay = (delta - graph.degree(i)) as f64 / delta as f64;
            row.push((i, stay));
            row
        })
        .collect();
    TransitionMatrix::new(graph, rows).expect("max-degree construction is doubly stochastic")
}
