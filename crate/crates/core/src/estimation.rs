//! Second moments of unit difference vectors and the intrinsic-dimension
//! estimator built on them.
//!
//! For a random vector `y` with `y_hat = y/|y|`, `Sigma_hat = E y_hat y_hat^T`
//! and `r_hat = tr Sigma_hat / |Sigma_hat| = 1/|Sigma_hat|`. From `m` unit
//! columns, `Sigma_hat_m = (1/m) sum y_hat y_hat^T` and `1/(3 |Sigma_hat_m|)`
//! lies in `[r_hat/5, r_hat]` with high probability once
//! `m >= 8 D log(2D/delta)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::batching::BatchPlan;
use crate::error::{Error, Result};
use crate::io::Dataset;
use crate::matrix::{symmetric_operator_norm, top_eigenvalue, DenseMatrix, Scalar};
use crate::walecki::SubgraphKind;

/// Columns handed to `empirical_sigma` must have norm within this of 1.
pub const UNIT_TOLERANCE: f64 = 1e-9;

/// Tolerance for `|Sigma_hat_m|`; the estimator only needs a constant factor.
pub const TOP_EIG_TOL: f64 = 1e-6;

/// Leaf size of the pairwise outer-product sum.
const PAIRWISE_LEAF: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSecondMoment<T> {
    pub matrix: DenseMatrix<T>,
    pub m: usize,
    pub top_eig: f64,
}

/// `sum_j c_j c_j^T` over columns `lo..hi`, split in halves down to
/// `PAIRWISE_LEAF` columns. The tree depends only on the column count, so the
/// result is deterministic under any thread schedule.
fn outer_sum<T: Scalar>(cols: &[Vec<T>], d: usize) -> Vec<T> {
    if cols.len() <= PAIRWISE_LEAF {
        let mut acc = vec![T::zero(); d * d];
        for c in cols {
            for i in 0..d {
                let ci = c[i];
                if ci == T::zero() {
                    continue;
                }
                let row = &mut acc[i * d..(i + 1) * d];
                for (a, &cj) in row.iter_mut().zip(c) {
                    *a = *a + ci * cj;
                }
            }
        }
        return acc;
    }
    let (left, right) = cols.split_at(cols.len() / 2);
    let (mut a, b) = rayon::join(|| outer_sum(left, d), || outer_sum(right, d));
    for (x, y) in a.iter_mut().zip(b) {
        *x = *x + y;
    }
    a
}

/// `(1/m) Y Y^T` without any normalization checks.
pub fn second_moment<T: Scalar>(columns: &DenseMatrix<T>) -> DenseMatrix<T> {
    let d = columns.rows();
    let m = columns.cols();
    let cols = columns.columns();
    let mut acc = outer_sum(&cols, d);
    let inv = T::one() / T::of_usize(m);
    for (i, x) in acc.iter_mut().enumerate() {
        // Mirror the upper triangle so the result is exactly symmetric.
        let (r, c) = (i / d, i % d);
        if r <= c {
            *x = *x * inv;
        }
    }
    for r in 0..d {
        for c in 0..r {
            acc[r * d + c] = acc[c * d + r];
        }
    }
    DenseMatrix::new(d, d, acc).expect("finite second moment")
}

/// `Sigma_hat_m` from a `D x m` matrix of unit columns.
pub fn empirical_sigma<T: Scalar>(unit_columns: &DenseMatrix<T>) -> Result<EmpiricalSecondMoment<T>> {
    if unit_columns.cols() == 0 {
        return Err(Error::Input("no columns".into()));
    }
    for (j, norm) in unit_columns.column_norms().into_iter().enumerate() {
        if (norm.as_f64() - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::Input(format!("column {j} has norm {norm}, expected 1")));
        }
    }
    let matrix = second_moment(unit_columns);
    let top_eig = top_eigenvalue(&matrix, TOP_EIG_TOL)?.as_f64();
    Ok(EmpiricalSecondMoment { matrix, m: unit_columns.cols(), top_eig })
}

/// `ceil(8 D log(2D/delta))`.
pub fn rhat_sample_size(d: usize, delta: f64) -> usize {
    let df = d as f64;
    (8.0 * df * (2.0 * df / delta).ln()).ceil() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhatEstimate {
    /// `1/(3 |Sigma_hat_m|)`.
    pub rhat_lower: f64,
    pub m_used: usize,
    /// Pairs skipped because the two points coincide.
    pub dropped: usize,
    pub top_eig: f64,
}

/// Estimates `r_hat` from the unit differences of consecutive disjoint pairs
/// `(0,1), (2,3), ...`. Identical pairs are skipped and replaced by the next
/// unused pair.
///
/// The pairs are independent only if the points are an iid sample; for a
/// fixed dataset, shuffle or subsample with replacement first.
pub fn estimate_rhat<T: Scalar>(points: &Dataset<T>, delta: f64) -> Result<RhatEstimate> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Input(format!("delta must lie in (0, 1), got {delta}")));
    }
    let d = points.d();
    let m = rhat_sample_size(d, delta);
    let available = (points.n() - 1) / 2;
    if m > available {
        return Err(Error::Input(format!(
            "estimating r_hat at D={d}, delta={delta} needs m={m} disjoint pairs, i.e. N >= {}, but N={}",
            2 * m + 1,
            points.n()
        )));
    }
    let mut cols = Vec::with_capacity(m);
    let mut dropped = 0;
    let mut pair = 0;
    while cols.len() < m {
        if 2 * pair + 1 >= points.n() {
            return Err(Error::Input(format!(
                "only {} usable pairs after dropping {dropped} duplicates, need m={m}",
                cols.len()
            )));
        }
        let diff = points.difference(2 * pair, 2 * pair + 1);
        pair += 1;
        let norm = diff.iter().map(|&x| x * x).sum::<T>().sqrt();
        if norm == T::zero() {
            dropped += 1;
            continue;
        }
        cols.push(diff.into_iter().map(|x| x / norm).collect::<Vec<T>>());
    }
    let sigma = empirical_sigma(&DenseMatrix::from_columns(d, &cols)?)?;
    Ok(RhatEstimate { rhat_lower: 1.0 / (3.0 * sigma.top_eig), m_used: m, dropped, top_eig: sigma.top_eig })
}

/// Fraction of rows `y` with `|y|^2 < eps * mean |y|^2`.
pub fn small_ball_estimate<T: Scalar>(samples: &Dataset<T>, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Input(format!("eps must be positive, got {eps}")));
    }
    let sq: Vec<f64> = (0..samples.n()).map(|i| samples.point(i).iter().map(|x| x.as_f64().powi(2)).sum()).collect();
    let mean = sq.iter().sum::<f64>() / sq.len() as f64;
    Ok(sq.iter().filter(|&&s| s < eps * mean).count() as f64 / sq.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgraphDeviations {
    pub subgraph_index: usize,
    pub kind: SubgraphKind,
    /// `|Sigma_hat_M - Sigma_hat|` for each batch, ascending.
    pub sorted: Vec<f64>,
}

impl SubgraphDeviations {
    /// The `i`-th smallest deviation (zero-based).
    pub fn order_stat(&self, i: usize) -> Option<f64> {
        self.sorted.get(i).copied()
    }
}

/// Per-subgraph sorted deviations of the batch second moments from `sigma_ref`.
pub fn subgraph_deviation_orderstats<T: Scalar>(
    plan: &BatchPlan<T>,
    sigma_ref: &DenseMatrix<T>,
) -> Result<Vec<SubgraphDeviations>> {
    if sigma_ref.rows() != plan.dim || sigma_ref.cols() != plan.dim {
        return Err(Error::Input(format!(
            "reference is {}x{}, batches live in dimension {}",
            sigma_ref.rows(),
            sigma_ref.cols(),
            plan.dim
        )));
    }
    let deviations: Vec<(usize, f64)> = plan
        .batches
        .par_iter()
        .map(|b| {
            let diff = second_moment(&b.unit_matrix).sub(sigma_ref)?;
            Ok((b.subgraph_index, symmetric_operator_norm(&diff)?.as_f64()))
        })
        .collect::<Result<_>>()?;
    let mut out: Vec<SubgraphDeviations> = plan
        .n_per_subgraph
        .iter()
        .enumerate()
        .map(|(i, (kind, _))| SubgraphDeviations { subgraph_index: i, kind: *kind, sorted: Vec::new() })
        .collect();
    for (si, dev) in deviations {
        out[si].sorted.push(dev);
    }
    for s in &mut out {
        s.sorted.sort_by(|a, b| a.total_cmp(b));
    }
    Ok(out)
}

/// A law with finitely many atoms, for exact second moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteLaw {
    pub atoms: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl DiscreteLaw {
    pub fn uniform(atoms: Vec<Vec<f64>>) -> Result<Self> {
        let w = 1.0 / atoms.len() as f64;
        Self::new(atoms.clone(), vec![w; atoms.len()])
    }

    pub fn new(atoms: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::Input("need one weight per atom and at least one atom".into()));
        }
        let d = atoms[0].len();
        if atoms.iter().any(|a| a.len() != d) {
            return Err(Error::Input("atoms must share a dimension".into()));
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w < 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::Input(format!("weights must be nonnegative and sum to 1, got {total}")));
        }
        Ok(Self { atoms, weights })
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].len()
    }

    /// `E y y^T`.
    pub fn second_moment(&self) -> DenseMatrix<f64> {
        self.weighted_outer(|a| Some(a.to_vec()))
    }

    /// `E y_hat y_hat^T`, ignoring atoms at the origin.
    pub fn unit_second_moment(&self) -> DenseMatrix<f64> {
        self.weighted_outer(|a| {
            let n = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            (n > 0.0).then(|| a.iter().map(|x| x / n).collect())
        })
    }

    fn weighted_outer(&self, f: impl Fn(&[f64]) -> Option<Vec<f64>>) -> DenseMatrix<f64> {
        let d = self.dim();
        let mut acc = DenseMatrix::zeros(d, d);
        let mut mass = 0.0;
        for (a, &w) in self.atoms.iter().zip(&self.weights) {
            if let Some(v) = f(a) {
                mass += w;
                for i in 0..d {
                    for j in 0..d {
                        acc.set(i, j, acc.get(i, j) + w * v[i] * v[j]);
                    }
                }
            }
        }
        acc.scaled(1.0 / mass)
    }

    /// `P{|y|^2 < eps E|y|^2}`.
    pub fn small_ball(&self, eps: f64) -> f64 {
        let sq: Vec<f64> = self.atoms.iter().map(|a| a.iter().map(|x| x * x).sum()).collect();
        let mean: f64 = sq.iter().zip(&self.weights).map(|(s, w)| s * w).sum();
        sq.iter().zip(&self.weights).filter(|(s, _)| **s < eps * mean).map(|(_, w)| w).sum()
    }

    /// Law of `xi - xi'` for two independent draws.
    pub fn difference_law(&self) -> Self {
        let mut atoms = Vec::with_capacity(self.atoms.len().pow(2));
        let mut weights = Vec::with_capacity(atoms.capacity());
        for (a, wa) in self.atoms.iter().zip(&self.weights) {
            for (b, wb) in self.atoms.iter().zip(&self.weights) {
                atoms.push(a.iter().zip(b).map(|(x, y)| x - y).collect());
                weights.push(wa * wb);
            }
        }
        Self { atoms, weights }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_basis_column() {
        let s = empirical_sigma(&DenseMatrix::from_columns(3, &[vec![1.0, 0.0, 0.0]]).unwrap()).unwrap();
        assert_eq!(s.matrix.get(0, 0), 1.0);
        assert_eq!(s.matrix.frobenius_sq(), 1.0);
        assert_relative_eq!(s.top_eig, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn orthonormal_basis_gives_scaled_identity() {
        let s = empirical_sigma(&DenseMatrix::<f64>::identity(5)).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(s.matrix.get(i, j), if i == j { 0.2 } else { 0.0 });
            }
        }
        assert_relative_eq!(s.top_eig, 0.2, max_relative = 1e-6);
    }

    #[test]
    fn non_unit_column_rejected() {
        let y = DenseMatrix::from_columns(2, &[vec![1.0, 1.0]]).unwrap();
        assert!(matches!(empirical_sigma(&y), Err(Error::Input(_))));
    }

    #[test]
    fn pairwise_sum_matches_direct_product() {
        let cols: Vec<Vec<f64>> = (0..300)
            .map(|j| {
                let v: Vec<f64> = (0..6).map(|i| ((i * 31 + j * 17) % 13) as f64 - 6.0 + 0.5).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.iter().map(|x| x / n).collect()
            })
            .collect();
        let y = DenseMatrix::from_columns(6, &cols).unwrap();
        let s = empirical_sigma(&y).unwrap();
        let direct = y.gram_rows().scaled(1.0 / 300.0);
        assert!(s.matrix.sub(&direct).unwrap().max_abs() < 1e-14);
        assert_relative_eq!(s.matrix.trace(), 1.0, max_relative = 1e-12);
        assert_eq!(s.matrix.asymmetry(), 0.0);
    }

    #[test]
    fn rank_one_support() {
        // xi uniform on {e1, -e1}: every nonzero difference is +-2 e1.
        // Every fifth pair repeats a point and must be skipped.
        let pairs = 2 * rhat_sample_size(2, 0.1);
        let rows: Vec<Vec<f64>> = (0..pairs)
            .flat_map(|p| {
                let second = if p % 5 == 0 { 1.0 } else { -1.0 };
                [vec![1.0, 0.0], vec![second, 0.0]]
            })
            .chain([vec![0.0, 0.0]])
            .collect();
        let ds = Dataset::new(DenseMatrix::from_rows(&rows).unwrap(), "pm-e1").unwrap();
        let est = estimate_rhat(&ds, 0.1).unwrap();
        assert_relative_eq!(est.rhat_lower, 1.0 / 3.0, max_relative = 1e-6);
        assert!(est.dropped > 0);
    }

    #[test]
    fn insufficient_samples() {
        let ds = Dataset::new(DenseMatrix::<f64>::identity(10), "tiny").unwrap();
        match estimate_rhat(&ds, 0.05).unwrap_err() {
            Error::Input(msg) => assert!(msg.contains("m=")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn small_ball_examples() {
        let ds = Dataset::new(DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 3.0]]).unwrap(), "two").unwrap();
        // |y|^2 in {1, 9}, mean 5.
        assert_eq!(small_ball_estimate(&ds, 1.0).unwrap(), 0.5);
        let ds = Dataset::new(DenseMatrix::<f64>::identity(4), "const").unwrap();
        assert_eq!(small_ball_estimate(&ds, 0.99).unwrap(), 0.0);
    }

    #[test]
    fn discrete_law_moments() {
        let law = DiscreteLaw::uniform(vec![vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let s = law.second_moment();
        assert_eq!((s.get(0, 0), s.get(1, 1), s.get(0, 1)), (0.5, 2.0, 0.0));
        let u = law.unit_second_moment();
        assert_eq!((u.get(0, 0), u.get(1, 1)), (0.5, 0.5));
        let diff = law.difference_law();
        assert_eq!(diff.atoms.len(), 4);
        // Two of the four differences are zero and are ignored after retraction.
        assert_relative_eq!(diff.unit_second_moment().trace(), 1.0, max_relative = 1e-15);
    }
}
