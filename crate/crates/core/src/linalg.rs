//! Small dense-matrix helpers shared across the crate.
//!
//! Adjacency matrices are kept as exact unsigned integers ([`IntMat`]) so
//! that commutation checks and path counts are free of rounding; everything
//! spectral is done in `f64` through [`nalgebra::DMatrix`].

use nalgebra::DMatrix;

use crate::error::KgsError;

/// Dense square matrix of non-negative integers, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMat {
    n: usize,
    data: Vec<u64>,
}

impl IntMat {
    /// Build from row-major data; `data.len()` must equal `n * n`.
    pub fn from_rows(n: usize, data: Vec<u64>) -> Self {
        assert_eq!(data.len(), n * n, "row-major data must hold n*n entries");
        IntMat { n, data }
    }

    /// Identity matrix of size `n`.
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0u64; n * n];
        for i in 0..n {
            data[i * n + i] = 1;
        }
        IntMat { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.data[row * self.n + col]
    }

    /// Sum of the entries in `row`.
    pub fn row_sum(&self, row: usize) -> u64 {
        self.data[row * self.n..(row + 1) * self.n].iter().sum()
    }

    /// Exact product, with overflow detection in 128-bit intermediates.
    pub fn checked_mul(&self, other: &IntMat) -> Result<IntMat, KgsError> {
        assert_eq!(self.n, other.n, "matrix sizes must agree");
        let n = self.n;
        let mut data = vec![0u64; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc: u128 = 0;
                for l in 0..n {
                    acc += self.get(i, l) as u128 * other.get(l, j) as u128;
                }
                data[i * n + j] = u64::try_from(acc)
                    .map_err(|_| KgsError::CountOverflow { len: 0 })?;
            }
        }
        Ok(IntMat { n, data })
    }

    /// Entrywise equality of products `self * other` and `other * self`,
    /// computed in 128-bit arithmetic so the comparison itself cannot
    /// overflow.  Returns the first differing position if any.
    pub fn commutes_with(&self, other: &IntMat) -> Option<(usize, usize, u128, u128)> {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                let mut ab: u128 = 0;
                let mut ba: u128 = 0;
                for l in 0..n {
                    ab += self.get(i, l) as u128 * other.get(l, j) as u128;
                    ba += other.get(i, l) as u128 * self.get(l, j) as u128;
                }
                if ab != ba {
                    return Some((i, j, ab, ba));
                }
            }
        }
        None
    }

    /// Boolean support product: `result(i,j) = 1` iff some `l` has
    /// `self(i,l) > 0` and `other(l,j) > 0`.
    pub fn support_mul(&self, other: &IntMat) -> IntMat {
        let n = self.n;
        let mut data = vec![0u64; n * n];
        for i in 0..n {
            for j in 0..n {
                if (0..n).any(|l| self.get(i, l) > 0 && other.get(l, j) > 0) {
                    data[i * n + j] = 1;
                }
            }
        }
        IntMat { n, data }
    }

    /// Convert to an `f64` matrix.
    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j) as f64)
    }
}

/// Maximum absolute entry of a matrix (the sup norm used for convergence
/// checks on Cesàro iterates).
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()))
}

/// Orthonormal basis of the column span of `m`, via SVD.  Columns of the
/// result are orthonormal in the plain Euclidean sense; singular directions
/// below `rel_tol * sigma_max` are dropped.
pub fn orthonormal_span(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    if m.ncols() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("SVD with U requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > rel_tol * smax && **s > 0.0)
        .map(|(i, _)| i)
        .collect();
    let mut out = DMatrix::zeros(m.nrows(), keep.len());
    for (c, &i) in keep.iter().enumerate() {
        out.set_column(c, &u.column(i));
    }
    out
}

/// Largest principal angle (radians) between the column spans of `u` and
/// `v`, both of which must already have orthonormal columns.  The spans are
/// equal iff the result is ~0 and the column counts agree.
pub fn max_principal_angle(u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    let d = u.ncols().min(v.ncols());
    if d == 0 {
        // at least one span is trivial; angle is 0 if both are, else right angle
        return if u.ncols() == v.ncols() {
            0.0
        } else {
            std::f64::consts::FRAC_PI_2
        };
    }
    // If the column counts differ, the bigger space has directions orthogonal
    // to the smaller one; report a right angle in that case.
    if u.ncols() != v.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    let cross = u.transpose() * v;
    // For nearly equal spans the cosine saturates at 1 and `acos` loses half
    // the working precision, so measure the sine directly off the projection
    // residual and only fall back to the cosine for wide angles.
    let resid = v - u * &cross;
    let sine = spectral_norm(&resid).clamp(0.0, 1.0);
    if sine * sine <= 0.5 {
        sine.asin()
    } else {
        let svd = cross.svd(false, false);
        let cosine = svd
            .singular_values
            .iter()
            .cloned()
            .fold(f64::MAX, f64::min);
        cosine.clamp(0.0, 1.0).acos()
    }
}

/// Eigen decomposition of a symmetric matrix by the cyclic Jacobi method.
///
/// Returns the eigenvalues in ascending order together with a matrix whose
/// `i`-th column is the unit eigenvector for the `i`-th eigenvalue.  Jacobi
/// is slower than tridiagonal solvers but keeps the residual
/// `‖A v - λ v‖` at the roundoff floor, which the subspace comparisons
/// made downstream rely on.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    assert_eq!(a.nrows(), a.ncols(), "matrix must be square");
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let mut a = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        return (vec![0.0; n], v);
    }
    let stop = f64::EPSILON * scale;
    // cyclic sweeps; Jacobi converges quadratically once the off-diagonal
    // mass is small, so the cap is never reached in practice
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(a[(p, q)].abs());
            }
        }
        if off <= stop {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for r in 0..n {
                    if r != p && r != q {
                        let arp = a[(r, p)];
                        let arq = a[(r, q)];
                        a[(r, p)] = c * arp - s * arq;
                        a[(p, r)] = a[(r, p)];
                        a[(r, q)] = s * arp + c * arq;
                        a[(q, r)] = a[(r, q)];
                    }
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = c * vrp - s * vrq;
                    v[(r, q)] = s * vrp + c * vrq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        vectors.set_column(c, &v.column(i));
    }
    (values, vectors)
}

/// Operator norm (largest singular value).
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let svd = m.clone().svd(false, false);
    svd.singular_values.iter().cloned().fold(0.0f64, f64::max)
}
