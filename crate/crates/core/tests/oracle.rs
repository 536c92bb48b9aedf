//! Linear algebra checked against nalgebra.

use bulkjl::matrix::{cholesky_upper, singular_spectrum, stable_ranks, symmetric_eigenvalues, top_eigenvalue};
use bulkjl::Matrix;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn to_na(a: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice())
}

fn matrix_strategy(max_rows: usize, max_cols: usize) -> impl Strategy<Value = Matrix> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(-10.0f64..10.0, r * c).prop_map(move |data| Matrix::new(r, c, data).unwrap())
    })
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn singular_values_match(a in matrix_strategy(12, 12)) {
        let ours = singular_spectrum(&a).unwrap().values;
        let mut theirs: Vec<f64> = to_na(&a).singular_values().iter().copied().collect();
        theirs.sort_by(|x, y| y.total_cmp(x));
        prop_assert_eq!(ours.len(), theirs.len());
        for (x, y) in ours.iter().zip(&theirs) {
            prop_assert!(close(*x, *y, 1e-10), "{} vs {}", x, y);
        }
    }

    #[test]
    fn stable_ranks_match(a in matrix_strategy(10, 14)) {
        prop_assume!(a.frobenius_sq() > 1e-6);
        let r = stable_ranks(&a).unwrap();
        let na = to_na(&a);
        let s = na.singular_values();
        let frob: f64 = s.iter().map(|x| x * x).sum();
        let top = s.iter().fold(0.0f64, |m, x| m.max(*x));
        let gram = &na * na.transpose();
        prop_assert!(close(r.r_inf, frob / (top * top), 1e-9));
        prop_assert!(close(r.r_4, frob * frob / gram.norm_squared(), 1e-9));
    }

    #[test]
    fn symmetric_eigen_match(a in matrix_strategy(9, 9)) {
        let s = a.gram_rows();
        let mut ours = symmetric_eigenvalues(&s).unwrap();
        ours.sort_by(f64::total_cmp);
        let mut theirs: Vec<f64> = to_na(&s).symmetric_eigenvalues().iter().copied().collect();
        theirs.sort_by(f64::total_cmp);
        let scale = theirs.last().unwrap().abs().max(1.0);
        for (x, y) in ours.iter().zip(&theirs) {
            prop_assert!((x - y).abs() <= 1e-9 * scale, "{} vs {}", x, y);
        }
        let top = top_eigenvalue(&s, 1e-10).unwrap();
        prop_assert!((top - theirs.last().unwrap()).abs() <= 1e-8 * scale);
    }

    #[test]
    fn cholesky_reconstructs(a in matrix_strategy(8, 8)) {
        let n = a.rows();
        let s = {
            let g = a.gram_rows();
            let mut shifted = g.clone();
            for i in 0..n {
                shifted.set(i, i, g.get(i, i) + 1.0);
            }
            shifted
        };
        let r = cholesky_upper(&s).unwrap();
        let back = r.transpose().matmul(&r).unwrap();
        let theirs = to_na(&s).cholesky().unwrap().l();
        for i in 0..n {
            for j in 0..n {
                prop_assert!(close(back.get(i, j), s.get(i, j), 1e-10));
                prop_assert!(close(r.get(j, i), theirs[(i, j)], 1e-9));
            }
        }
    }
}
