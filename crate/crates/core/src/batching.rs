//! Batches of difference vectors drawn from the subgraphs of a Walecki
//! decomposition.
//!
//! Within a 1-regular subgraph `W` the edges are cut into `floor(|W|/M)`
//! contiguous batches. The `|W| mod M` leftover edges go round-robin, one per
//! batch, so every batch has between `M` and `2M - 1` columns. A batch of size
//! `m` keeps the absolute failure budget `eta*M`, i.e. its effective fraction
//! is `eta*M/m`; that budget is stored as an integer so order-statistic
//! indices never depend on floating point rounding.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::Dataset;
use crate::matrix::{DenseMatrix, Scalar};
use crate::walecki::{Edge, EdgeDecomposition, SubgraphKind};

/// Refuse to enumerate more minibatches than this.
pub const MINIBATCH_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Batch<T> {
    pub id: usize,
    pub edges: Vec<Edge>,
    /// `D x m`, column `i` is `x_u - x_v` for `edges[i]`.
    pub matrix: DenseMatrix<T>,
    /// `matrix` with unit-norm columns.
    pub unit_matrix: DenseMatrix<T>,
    /// The integer budget `eta*M`.
    pub eta_m: usize,
    pub m_requested: usize,
    pub subgraph_index: usize,
    pub source_subgraph: SubgraphKind,
}

impl<T: Scalar> Batch<T> {
    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// `eta*M/m`.
    pub fn eta_effective(&self) -> f64 {
        self.eta_m as f64 / self.m() as f64
    }

    /// Zero-based index of the lower order statistic, `eta*M - 1`.
    pub fn lower_index(&self) -> usize {
        self.eta_m - 1
    }

    /// Zero-based index of the upper order statistic, `m - eta*M`.
    pub fn upper_index(&self) -> usize {
        self.m() - self.eta_m
    }

    /// All column subsets of size `eta*M`.
    pub fn minibatches(&self) -> Result<impl Iterator<Item = Vec<usize>>> {
        minibatch_enumerate(self.m(), self.eta_m)
    }
}

/// Per-subgraph `zeta` bookkeeping: `zeta_effective * batches = zeta * n`
/// with `n = floor((N-1)/(4M))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZetaSchedule {
    pub zeta: f64,
    pub n: usize,
    /// The integer `zeta*n`.
    pub zeta_n: usize,
    pub zeta_effective: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchPlan<T> {
    pub n_points: usize,
    pub dim: usize,
    pub m_requested: usize,
    pub eta: f64,
    pub batches: Vec<Batch<T>>,
    /// `(kind, number of batches)` for each subgraph, in decomposition order.
    pub n_per_subgraph: Vec<(SubgraphKind, usize)>,
    pub zeta: Option<ZetaSchedule>,
}

impl<T: Scalar> BatchPlan<T> {
    pub fn total_columns(&self) -> usize {
        self.batches.iter().map(|b| b.m()).sum()
    }

    /// Batches belonging to subgraph `index`.
    pub fn subgraph_batches(&self, index: usize) -> impl Iterator<Item = &Batch<T>> {
        self.batches.iter().filter(move |b| b.subgraph_index == index)
    }

    /// Attaches the `zeta` schedule; `zeta * floor((N-1)/(4M))` must be an integer.
    pub fn with_zeta(mut self, zeta: f64) -> Result<Self> {
        if !(zeta > 0.0 && zeta <= 0.5) {
            return Err(Error::Input(format!("zeta must lie in (0, 1/2], got {zeta}")));
        }
        let n = (self.n_points - 1) / (4 * self.m_requested);
        if n == 0 {
            return Err(Error::Input(format!("floor((N-1)/(4M)) = 0 for N={}, M={}", self.n_points, self.m_requested)));
        }
        let zeta_n = integral_product(zeta, n, "zeta", "floor((N-1)/(4M))")?;
        let zeta_effective = self.n_per_subgraph.iter().map(|&(_, count)| zeta_n as f64 / count as f64).collect();
        self.zeta = Some(ZetaSchedule { zeta, n, zeta_n, zeta_effective });
        Ok(self)
    }
}

/// Checks that `x * count` is a positive integer and returns it. The error
/// names the largest admissible `x` below the requested one.
fn integral_product(x: f64, count: usize, name: &str, count_name: &str) -> Result<usize> {
    let prod = x * count as f64;
    let rounded = prod.round();
    if (prod - rounded).abs() > 1e-9 * prod.max(1.0) || rounded < 1.0 {
        let nearest = (prod.floor().max(1.0)) / count as f64;
        return Err(Error::Input(format!(
            "{name}*{count_name} = {prod} is not a positive integer ({count_name} = {count}); nearest valid {name} is {nearest}"
        )));
    }
    Ok(rounded as usize)
}

fn batch_from_edges<T: Scalar>(
    dataset: &Dataset<T>,
    edges: Vec<Edge>,
    meta: (usize, usize, usize, usize, SubgraphKind),
    zero_edges: &mut Vec<Edge>,
) -> Result<Batch<T>> {
    let (id, eta_m, m_requested, subgraph_index, kind) = meta;
    let columns: Vec<Vec<T>> = edges.iter().map(|e| dataset.difference(e.u, e.v)).collect();
    let mut unit = Vec::with_capacity(columns.len());
    for (edge, col) in edges.iter().zip(&columns) {
        let norm = col.iter().map(|&x| x * x).sum::<T>().sqrt();
        if norm == T::zero() {
            zero_edges.push(*edge);
            unit.push(col.clone());
        } else {
            unit.push(col.iter().map(|&x| x / norm).collect());
        }
    }
    Ok(Batch {
        id,
        matrix: DenseMatrix::from_columns(dataset.d(), &columns)?,
        unit_matrix: DenseMatrix::from_columns(dataset.d(), &unit)?,
        edges,
        eta_m,
        m_requested,
        subgraph_index,
        source_subgraph: kind,
    })
}

fn check_sizes<T: Scalar>(dataset: &Dataset<T>, decomp: &EdgeDecomposition) -> Result<()> {
    if dataset.n() != decomp.n {
        return Err(Error::Input(format!(
            "dataset has {} points but the decomposition is for N={}",
            dataset.n(),
            decomp.n
        )));
    }
    Ok(())
}

/// Sizes of the batches a subgraph of `len` edges is cut into.
pub fn batch_sizes(len: usize, m: usize) -> Vec<usize> {
    let count = len / m;
    let mut sizes = vec![m; count];
    for i in 0..len % m {
        sizes[i % count] += 1;
    }
    sizes
}

/// Cuts every subgraph of `decomp` into batches of at least `m` edges.
pub fn build_batches<T: Scalar>(
    dataset: &Dataset<T>,
    decomp: &EdgeDecomposition,
    m: usize,
    eta: f64,
) -> Result<BatchPlan<T>> {
    check_sizes(dataset, decomp)?;
    if m == 0 {
        return Err(Error::Input("batch size M must be positive".into()));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Input(format!("eta must lie in (0, 1], got {eta}")));
    }
    let eta_m = integral_product(eta, m, "eta", "M")?;
    let smallest = decomp.subgraphs.iter().map(|s| s.edges.len()).min().unwrap_or(0);
    if m > smallest {
        return Err(Error::Input(format!("M={m} exceeds the smallest subgraph size {smallest}")));
    }

    let mut batches = Vec::new();
    let mut n_per_subgraph = Vec::with_capacity(decomp.subgraphs.len());
    let mut zero_edges = Vec::new();
    for (si, sub) in decomp.subgraphs.iter().enumerate() {
        let sizes = batch_sizes(sub.edges.len(), m);
        n_per_subgraph.push((sub.kind, sizes.len()));
        let mut rest = sub.edges.as_slice();
        for size in sizes {
            let (head, tail) = rest.split_at(size);
            rest = tail;
            let meta = (batches.len(), eta_m, m, si, sub.kind);
            batches.push(batch_from_edges(dataset, head.to_vec(), meta, &mut zero_edges)?);
        }
    }
    if !zero_edges.is_empty() {
        return Err(Error::Data { message: "duplicate points give zero difference vectors".into(), edges: zero_edges });
    }
    Ok(BatchPlan { n_points: decomp.n, dim: dataset.d(), m_requested: m, eta, batches, n_per_subgraph, zeta: None })
}

/// One batch per Hamiltonian cycle, plus the leftover matching for even `N`.
///
/// This is the batching used for the standard simplex, where `M = N`. Since
/// `eta*m` is rarely an integer here, each batch gets the budget
/// `max(floor(eta*m), 1)`, which never exceeds the requested fraction.
pub fn cycle_batches<T: Scalar>(dataset: &Dataset<T>, decomp: &EdgeDecomposition, eta: f64) -> Result<BatchPlan<T>> {
    check_sizes(dataset, decomp)?;
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Input(format!("eta must lie in (0, 1], got {eta}")));
    }
    let mut groups: Vec<(SubgraphKind, Vec<Edge>)> =
        decomp.cycles.iter().enumerate().map(|(j, c)| (SubgraphKind::UnsplitCycle(j), c.clone())).collect();
    if let Some(left) = decomp.leftover() {
        groups.push((left.kind, left.edges.clone()));
    }
    let mut batches = Vec::with_capacity(groups.len());
    let mut zero_edges = Vec::new();
    for (si, (kind, edges)) in groups.iter().enumerate() {
        let eta_m = ((eta * edges.len() as f64 + 1e-9).floor() as usize).max(1);
        let meta = (si, eta_m, decomp.n, si, *kind);
        batches.push(batch_from_edges(dataset, edges.clone(), meta, &mut zero_edges)?);
    }
    if !zero_edges.is_empty() {
        return Err(Error::Data { message: "duplicate points give zero difference vectors".into(), edges: zero_edges });
    }
    Ok(BatchPlan {
        n_points: decomp.n,
        dim: dataset.d(),
        m_requested: decomp.n,
        eta,
        n_per_subgraph: groups.iter().map(|(k, _)| (*k, 1)).collect(),
        batches,
        zeta: None,
    })
}

/// Exact `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = match acc.checked_mul((n - i) as u128) {
            Some(x) => x / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// All `size`-subsets of `0..m` in lexicographic order, lazily.
pub fn minibatch_enumerate(m: usize, size: usize) -> Result<impl Iterator<Item = Vec<usize>>> {
    if size == 0 || size > m {
        return Err(Error::Input(format!("minibatch size {size} must lie in 1..={m}")));
    }
    let count = binomial(m, size);
    if count > MINIBATCH_LIMIT {
        return Err(Error::Input(format!(
            "C({m}, {size}) = {count} minibatches exceeds the enumeration limit {MINIBATCH_LIMIT}"
        )));
    }
    Ok((0..m).combinations(size))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walecki::decompose;

    fn line_points(n: usize, d: usize) -> Dataset<f64> {
        // Distinct points on a moment curve.
        let rows: Vec<Vec<f64>> =
            (0..n).map(|i| (0..d).map(|j| ((i + 1) as f64).powi(j as i32 + 1) / 10.0).collect()).collect();
        Dataset::new(DenseMatrix::from_rows(&rows).unwrap(), "curve").unwrap()
    }

    #[test]
    fn n8_m4_gives_seven_batches_of_four() {
        let plan = build_batches(&line_points(8, 3), &decompose(8).unwrap(), 4, 0.25).unwrap();
        assert_eq!(plan.batches.len(), 7);
        assert!(plan.batches.iter().all(|b| b.m() == 4 && b.eta_m == 1));
    }

    #[test]
    fn n9_m2_remainder() {
        let plan = build_batches(&line_points(9, 3), &decompose(9).unwrap(), 2, 0.5).unwrap();
        // Per cycle: sizes {4, 3, 2} -> {2+2, 3, 2}.
        let sizes: Vec<usize> = plan.subgraph_batches(1).map(|b| b.m()).collect();
        assert_eq!(sizes, vec![3]);
        let three = plan.subgraph_batches(1).next().unwrap();
        assert_eq!(three.eta_m, 1);
        assert!((three.eta_effective() * 3.0 - 2.0 * 0.5).abs() < 1e-15);
        assert_eq!(plan.subgraph_batches(0).map(|b| b.m()).collect::<Vec<_>>(), vec![2, 2]);
        assert_eq!(plan.total_columns(), 36);
    }

    #[test]
    fn eta_integrality() {
        let ds = line_points(8, 3);
        let d = decompose(8).unwrap();
        assert!(build_batches(&ds, &d, 4, 0.25).is_ok());
        let err = build_batches(&ds, &d, 4, 0.3).unwrap_err();
        match err {
            Error::Input(msg) => assert!(msg.contains("0.25"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn oversized_m_is_rejected() {
        assert!(matches!(build_batches(&line_points(8, 3), &decompose(8).unwrap(), 5, 0.2), Err(Error::Input(_))));
    }

    #[test]
    fn duplicates_are_reported() {
        let mut rows: Vec<Vec<f64>> = line_points(8, 2).points.columns();
        rows = (0..8).map(|i| rows.iter().map(|c| c[i]).collect()).collect();
        rows[5] = rows[2].clone();
        let ds = Dataset::new(DenseMatrix::from_rows(&rows).unwrap(), "dup").unwrap();
        match build_batches(&ds, &decompose(8).unwrap(), 4, 0.25).unwrap_err() {
            Error::Data { edges, .. } => assert_eq!(edges, vec![Edge::new(2, 5)]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unit_columns() {
        let plan = build_batches(&line_points(12, 4), &decompose(12).unwrap(), 3, 1.0 / 3.0).unwrap();
        for b in &plan.batches {
            for norm in b.unit_matrix.column_norms() {
                assert!((norm - 1.0).abs() < 1e-12);
            }
            assert!(b.m() >= 3 && b.m() <= 5);
        }
    }

    #[test]
    fn sizes_stay_in_window() {
        for len in 1..60 {
            for m in 1..=len {
                let sizes = batch_sizes(len, m);
                assert_eq!(sizes.iter().sum::<usize>(), len);
                assert!(sizes.iter().all(|&s| s >= m && s < 2 * m));
            }
        }
    }

    #[test]
    fn zeta_schedule() {
        let plan = build_batches(&line_points(33, 2), &decompose(33).unwrap(), 2, 0.5).unwrap();
        // n = floor(32/8) = 4.
        let plan = plan.with_zeta(0.25).unwrap();
        let z = plan.zeta.as_ref().unwrap();
        assert_eq!((z.n, z.zeta_n), (4, 1));
        for ((_, count), eff) in plan.n_per_subgraph.iter().zip(&z.zeta_effective) {
            assert!((eff * *count as f64 - 1.0).abs() < 1e-12);
        }
        let plan = build_batches(&line_points(33, 2), &decompose(33).unwrap(), 2, 0.5).unwrap();
        assert!(matches!(plan.with_zeta(0.3), Err(Error::Input(_))));
    }

    #[test]
    fn cycle_mode() {
        let plan = cycle_batches(&line_points(6, 3), &decompose(6).unwrap(), 0.1).unwrap();
        assert_eq!(plan.batches.iter().map(|b| b.m()).collect::<Vec<_>>(), vec![6, 6, 3]);
        assert!(plan.batches.iter().all(|b| b.eta_m == 1));
    }

    #[test]
    fn minibatch_counts() {
        assert_eq!(minibatch_enumerate(4, 1).unwrap().count(), 4);
        assert_eq!(minibatch_enumerate(4, 2).unwrap().count(), 6);
        assert!(minibatch_enumerate(40, 20).is_err());
        assert_eq!(binomial(40, 20), 137_846_528_820);
        assert_eq!(binomial(30, 15), 155_117_520);
    }
}
