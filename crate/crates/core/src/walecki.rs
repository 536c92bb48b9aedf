//! Walecki decomposition of the complete graph `K_N`.
//!
//! Vertex `0` is the origin `o`; vertex `i` for `1 <= i <= N-1` is the root of
//! unity `w^(i-1)` with `w = exp(2 pi i / (N-1))`. The circle edges split into
//! the product classes
//!
//! ```text
//! W_p = { <w^j, w^k> : j != k, j + k = p (mod N-1) },   0 <= p <= N-2,
//! ```
//!
//! each 1-regular. Rotation by `w` maps `W_p` onto `W_{p+2}`. Pairing the
//! classes and attaching the origin produces Hamiltonian cycles:
//!
//! * `N` even: cycle `C_j` is `~W_{2j} + ~W_{2j+1}`, two perfect matchings,
//!   for `j < (N-2)/2`; the matching `~W_{N-2}` is left over.
//! * `N` odd: cycle `C_j` is `~W_{2j}^+ + ~W_{2j}^- + W_{2j+1}`, where `W_0`
//!   is split by the sign of the real part of its endpoints.
//!
//! All cycles are rotations of `C_0` with the origin held fixed.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected edge with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
}

impl Edge {
    pub fn new(a: usize, b: usize) -> Self {
        assert_ne!(a, b, "self loops are not edges");
        Self { u: a.min(b), v: a.max(b) }
    }

    pub fn touches(&self, vertex: usize) -> bool {
        self.u == vertex || self.v == vertex
    }
}

/// Which piece of the construction a 1-regular subgraph came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "tag", content = "cycle_index")]
pub enum SubgraphKind {
    /// `W_{2j+1}` (odd `N`).
    WOdd(usize),
    /// `~W_{2j}^+`: nonnegative real part, plus the origin edge (odd `N`).
    W0Plus(usize),
    /// `~W_{2j}^-`: negative real part, plus the origin edge (odd `N`).
    W0Minus(usize),
    /// `~W_{2j}`, a perfect matching (even `N`).
    WTildeEven(usize),
    /// `~W_{2j+1}`, a perfect matching (even `N`).
    WTildeOdd(usize),
    /// `~W_{N-2}`, the matching not used by any cycle (even `N`).
    OneFactorLeftover,
    /// A whole cycle, for `N` in {3, 5} where the three-way split is not defined.
    UnsplitCycle(usize),
}

impl SubgraphKind {
    pub fn cycle_index(&self) -> Option<usize> {
        match *self {
            SubgraphKind::WOdd(j)
            | SubgraphKind::W0Plus(j)
            | SubgraphKind::W0Minus(j)
            | SubgraphKind::WTildeEven(j)
            | SubgraphKind::WTildeOdd(j)
            | SubgraphKind::UnsplitCycle(j) => Some(j),
            SubgraphKind::OneFactorLeftover => None,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            SubgraphKind::WOdd(j) => format!("W_odd[{j}]"),
            SubgraphKind::W0Plus(j) => format!("W0_plus[{j}]"),
            SubgraphKind::W0Minus(j) => format!("W0_minus[{j}]"),
            SubgraphKind::WTildeEven(j) => format!("W_tilde_even[{j}]"),
            SubgraphKind::WTildeOdd(j) => format!("W_tilde_odd[{j}]"),
            SubgraphKind::OneFactorLeftover => "one_factor_leftover".to_string(),
            SubgraphKind::UnsplitCycle(j) => format!("unsplit_cycle[{j}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subgraph {
    pub kind: SubgraphKind,
    pub edges: Vec<Edge>,
}

impl Subgraph {
    /// No vertex is an endpoint of two edges.
    pub fn is_one_regular(&self) -> bool {
        is_one_regular(&self.edges)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDecomposition {
    pub n: usize,
    /// Hamiltonian cycles, each listed in walk order starting at the origin.
    pub cycles: Vec<Vec<Edge>>,
    pub subgraphs: Vec<Subgraph>,
    /// False for `N` in {3, 5}: `subgraphs` then holds whole cycles.
    pub split: bool,
}

impl EdgeDecomposition {
    pub fn edge_count(&self) -> usize {
        self.subgraphs.iter().map(|s| s.edges.len()).sum()
    }

    /// The leftover perfect matching for even `N`.
    pub fn leftover(&self) -> Option<&Subgraph> {
        self.subgraphs.iter().find(|s| s.kind == SubgraphKind::OneFactorLeftover)
    }

    /// Checks the partition, 1-regularity and Hamiltonicity invariants.
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        let mut seen = vec![false; n * n];
        for s in &self.subgraphs {
            if self.split && !s.is_one_regular() {
                return Err(Error::Domain(format!("{} is not 1-regular", s.kind.label())));
            }
            for e in &s.edges {
                if e.u >= e.v || e.v >= n {
                    return Err(Error::Domain(format!("invalid edge {e:?}")));
                }
                let slot = &mut seen[e.u * n + e.v];
                if *slot {
                    return Err(Error::Domain(format!("edge {e:?} appears twice")));
                }
                *slot = true;
            }
        }
        if self.edge_count() != n * (n - 1) / 2 {
            return Err(Error::Domain(format!("{} edges covered, expected {}", self.edge_count(), n * (n - 1) / 2)));
        }
        for (j, c) in self.cycles.iter().enumerate() {
            if !is_hamiltonian_cycle(n, c) {
                return Err(Error::Domain(format!("cycle {j} is not Hamiltonian")));
            }
        }
        Ok(())
    }

    /// Graphviz rendering with one edge colour class per subgraph.
    pub fn to_dot(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "graph walecki_k{} {{", self.n);
        let _ = writeln!(out, "  node [shape=circle];");
        let _ = writeln!(out, "  0 [label=\"o\"];");
        for i in 1..self.n {
            let _ = writeln!(out, "  {i} [label=\"w^{}\"];", i - 1);
        }
        for (idx, s) in self.subgraphs.iter().enumerate() {
            for e in &s.edges {
                let _ = writeln!(
                    out,
                    "  {} -- {} [label=\"{}\", colorscheme=set312, color={}];",
                    e.u,
                    e.v,
                    s.kind.label(),
                    idx % 12 + 1
                );
            }
        }
        out.push_str("}\n");
        out
    }
}

pub fn is_one_regular(edges: &[Edge]) -> bool {
    let mut seen = std::collections::HashSet::with_capacity(edges.len() * 2);
    edges.iter().all(|e| seen.insert(e.u) && seen.insert(e.v))
}

/// `edges` forms a single closed walk through all `n` vertices.
pub fn is_hamiltonian_cycle(n: usize, edges: &[Edge]) -> bool {
    if edges.len() != n {
        return false;
    }
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for e in edges {
        adj.entry(e.u).or_default().push(e.v);
        adj.entry(e.v).or_default().push(e.u);
    }
    if adj.len() != n || adj.values().any(|nb| nb.len() != 2) {
        return false;
    }
    let (mut prev, mut cur) = (0usize, adj[&0][0]);
    let mut steps = 1;
    while cur != 0 {
        let nb = &adj[&cur];
        let next = if nb[0] == prev { nb[1] } else { nb[0] };
        prev = cur;
        cur = next;
        steps += 1;
        if steps > n {
            return false;
        }
    }
    steps == n
}

#[inline]
fn circle_vertex(n: usize, exponent: usize) -> usize {
    exponent % (n - 1) + 1
}

/// Rotation by `w^shift`, fixing the origin.
pub fn rotate_vertex(n: usize, vertex: usize, shift: usize) -> usize {
    if vertex == 0 {
        0
    } else {
        circle_vertex(n, vertex - 1 + shift)
    }
}

pub fn rotate_edges(n: usize, edges: &[Edge], shift: usize) -> Vec<Edge> {
    edges.iter().map(|e| Edge::new(rotate_vertex(n, e.u, shift), rotate_vertex(n, e.v, shift))).collect()
}

/// The product class `W_p`, listed by increasing smaller exponent.
pub fn w_set(n: usize, p: usize) -> Result<Vec<Edge>> {
    if n < 3 {
        return Err(Error::Input(format!("need N >= 3, got {n}")));
    }
    if p > n - 2 {
        return Err(Error::Input(format!("class index p = {p} outside 0..={}", n - 2)));
    }
    let m = n - 1;
    Ok((0..m)
        .filter_map(|j| {
            let k = (p + m - j) % m;
            (j < k).then(|| Edge::new(circle_vertex(n, j), circle_vertex(n, k)))
        })
        .collect())
}

/// Builds the full decomposition: cycles plus their 1-regular pieces.
pub fn decompose(n: usize) -> Result<EdgeDecomposition> {
    if n < 3 {
        return Err(Error::Input(format!("need N >= 3, got {n}")));
    }
    let m = n - 1;
    let mut subgraphs = Vec::new();
    let mut cycles = Vec::new();

    if n % 2 == 0 {
        // m odd: every W_p misses exactly one circle vertex, the solution of
        // 2j = p (mod m); attaching it to the origin completes a matching.
        let fixed = |p: usize| p * (m + 1) / 2 % m;
        let augment = |p: usize| -> Result<Vec<Edge>> {
            let mut w = w_set(n, p)?;
            w.push(Edge::new(0, circle_vertex(n, fixed(p))));
            Ok(w)
        };
        let even = augment(0)?;
        let odd = augment(1)?;
        for j in 0..(n - 2) / 2 {
            let a = rotate_edges(n, &even, j);
            let b = rotate_edges(n, &odd, j);
            cycles.push(walk_order(n, a.iter().chain(&b).copied().collect()));
            subgraphs.push(Subgraph { kind: SubgraphKind::WTildeEven(j), edges: a });
            subgraphs.push(Subgraph { kind: SubgraphKind::WTildeOdd(j), edges: b });
        }
        subgraphs.push(Subgraph { kind: SubgraphKind::OneFactorLeftover, edges: rotate_edges(n, &even, (n - 2) / 2) });
        return Ok(EdgeDecomposition { n, cycles, subgraphs, split: true });
    }

    // m even: W_0 = { <w^k, w^-k> : 1 <= k < m/2 }; "+" when cos(2 pi k / m) >= 0,
    // i.e. 4k <= m.
    let mut plus = vec![Edge::new(0, circle_vertex(n, 0))];
    let mut minus = vec![Edge::new(0, circle_vertex(n, m / 2))];
    for k in 1..m / 2 {
        let e = Edge::new(circle_vertex(n, k), circle_vertex(n, m - k));
        if 4 * k <= m {
            plus.push(e);
        } else {
            minus.push(e);
        }
    }
    let w1 = w_set(n, 1)?;
    let split = n >= 7;
    for j in 0..m / 2 {
        let odd = rotate_edges(n, &w1, j);
        let p = rotate_edges(n, &plus, j);
        let q = rotate_edges(n, &minus, j);
        let cycle = walk_order(n, odd.iter().chain(&p).chain(&q).copied().collect());
        if split {
            subgraphs.push(Subgraph { kind: SubgraphKind::WOdd(j), edges: odd });
            subgraphs.push(Subgraph { kind: SubgraphKind::W0Plus(j), edges: p });
            subgraphs.push(Subgraph { kind: SubgraphKind::W0Minus(j), edges: q });
        } else {
            subgraphs.push(Subgraph { kind: SubgraphKind::UnsplitCycle(j), edges: cycle.clone() });
        }
        cycles.push(cycle);
    }
    Ok(EdgeDecomposition { n, cycles, subgraphs, split })
}

/// The 1-regular pieces of [`decompose`]; whole cycles when `N` is 3 or 5.
pub fn split_subgraphs(n: usize) -> Result<Vec<Subgraph>> {
    Ok(decompose(n)?.subgraphs)
}

/// Orders the edges of a cycle along the walk starting at the origin.
fn walk_order(n: usize, edges: Vec<Edge>) -> Vec<Edge> {
    let mut adj = vec![Vec::with_capacity(2); n];
    for e in &edges {
        adj[e.u].push(e.v);
        adj[e.v].push(e.u);
    }
    if adj.iter().any(|a| a.len() != 2) {
        return edges;
    }
    let mut out = Vec::with_capacity(edges.len());
    let (mut prev, mut cur) = (0usize, adj[0][0]);
    out.push(Edge::new(0, cur));
    while cur != 0 {
        let next = if adj[cur][0] == prev { adj[cur][1] } else { adj[cur][0] };
        out.push(Edge::new(cur, next));
        prev = cur;
        cur = next;
        if out.len() > edges.len() {
            return edges;
        }
    }
    out
}
