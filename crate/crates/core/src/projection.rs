//! Random projection matrices with iid mean-zero, unit-variance entries.
//!
//! Entry `(i, j)` of a matrix with seed `s` is a function of the Philox
//! block at `(key = s, counter = (i, j))` only, so generation order and
//! thread count do not affect the result.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, Scalar};
use crate::rng::{block_at, gaussian_from_block, open_unit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryDist {
    Gaussian,
    Rademacher,
    /// Uniform on `[-sqrt 3, sqrt 3]`.
    UniformSqrt3,
}

impl EntryDist {
    pub const ALL: [EntryDist; 3] = [EntryDist::Gaussian, EntryDist::Rademacher, EntryDist::UniformSqrt3];

    /// The sub-gaussian norm `K = |Z_11|_psi2`, i.e. the least `t` with
    /// `E exp(Z^2/t^2) <= 2`.
    ///
    /// Gaussian: `sqrt(8/3)`. Rademacher: `1/sqrt(ln 2)`. The uniform case has
    /// no closed form and is solved by bisection on a quadrature.
    pub fn psi2_norm(self) -> f64 {
        match self {
            EntryDist::Gaussian => (8.0f64 / 3.0).sqrt(),
            EntryDist::Rademacher => 1.0 / std::f64::consts::LN_2.sqrt(),
            EntryDist::UniformSqrt3 => uniform_psi2(),
        }
    }

    /// One entry from a Philox block.
    #[inline]
    pub fn sample(self, block: [u32; 4]) -> f64 {
        match self {
            EntryDist::Gaussian => gaussian_from_block(block),
            EntryDist::Rademacher => {
                if block[0] & 1 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            EntryDist::UniformSqrt3 => {
                let u = open_unit(u64::from(block[0]) << 32 | u64::from(block[1]));
                (2.0 * u - 1.0) * 3f64.sqrt()
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EntryDist::Gaussian => "gaussian",
            EntryDist::Rademacher => "rademacher",
            EntryDist::UniformSqrt3 => "uniform_sqrt3",
        }
    }
}

impl std::str::FromStr for EntryDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "gaussian" | "normal" => Ok(EntryDist::Gaussian),
            "rademacher" | "sign" => Ok(EntryDist::Rademacher),
            "uniform_sqrt3" | "uniform" => Ok(EntryDist::UniformSqrt3),
            other => Err(Error::Input(format!("unknown entry distribution {other:?}"))),
        }
    }
}

/// `E exp(U^2/t^2)` for `U` uniform on `[-sqrt 3, sqrt 3]`, by Simpson's rule.
fn uniform_mgf(t: f64) -> f64 {
    let a = 3f64.sqrt();
    let n = 2000;
    let h = a / n as f64;
    let f = |x: f64| (x * x / (t * t)).exp();
    let mut s = f(0.0) + f(a);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(i as f64 * h);
    }
    s * h / 3.0 / a
}

fn uniform_psi2() -> f64 {
    // The mgf is decreasing in t; at t = 1 it exceeds 2, at t = 3 it does not.
    let (mut lo, mut hi) = (1.0f64, 3.0f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if uniform_mgf(mid) > 2.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionSpec {
    pub k: usize,
    pub d: usize,
    pub dist: EntryDist,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionMatrix<T> {
    pub spec: ProjectionSpec,
    pub matrix: DenseMatrix<T>,
}

impl<T: Scalar> ProjectionMatrix<T> {
    pub fn k(&self) -> usize {
        self.matrix.rows()
    }

    pub fn d(&self) -> usize {
        self.matrix.cols()
    }

    /// Wraps a fixed `k x D` matrix, e.g. a deterministic test double.
    pub fn from_matrix(matrix: DenseMatrix<T>, dist: EntryDist, seed: u64) -> Self {
        let spec = ProjectionSpec { k: matrix.rows(), d: matrix.cols(), dist, seed };
        Self { spec, matrix }
    }
}

/// Draws `Z` for `spec`; entries are computed in parallel by row.
pub fn generate<T: Scalar>(spec: ProjectionSpec) -> Result<ProjectionMatrix<T>> {
    if spec.k == 0 || spec.d == 0 {
        return Err(Error::Input(format!("projection needs k, D >= 1, got k={}, D={}", spec.k, spec.d)));
    }
    let mut data = vec![T::zero(); spec.k * spec.d];
    data.par_chunks_mut(spec.d).enumerate().for_each(|(i, row)| {
        for (j, x) in row.iter_mut().enumerate() {
            *x = T::of(spec.dist.sample(block_at(spec.seed, i as u64, j as u64)));
        }
    });
    Ok(ProjectionMatrix { spec, matrix: DenseMatrix::new(spec.k, spec.d, data)? })
}

/// `sqrt(gamma/k) * Z * Y` for a `D x m` matrix `Y`.
pub fn apply_scaled<T: Scalar>(z: &ProjectionMatrix<T>, y: &DenseMatrix<T>, gamma: f64) -> Result<DenseMatrix<T>> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Input(format!("gamma must be positive, got {gamma}")));
    }
    if y.rows() != z.d() {
        return Err(Error::Input(format!("projection is {}x{} but data has {} rows", z.k(), z.d(), y.rows())));
    }
    let scale = T::of((gamma / z.k() as f64).sqrt());
    Ok(z.matrix.matmul(y)?.scaled(scale))
}
