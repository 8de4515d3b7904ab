//! Small dense symmetric linear algebra: Cholesky-backed quadratic forms and
//! the Sherman-Morrison rank-one inverse update.
//!
//! Dimensions here are tiny (n <= 10), so everything is dense row-major
//! `Vec<f64>` with no blocking.

use crate::error::{Error, Result};

/// Relative pivot floor: a factorization pivot below `PIVOT_FLOOR * ||H||`
/// is treated as loss of positive definiteness.
const PIVOT_FLOOR: f64 = 1e-12;

/// Dense symmetric matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds from row-major entries, symmetrizing as (M + M^T)/2.
    /// Mixed finite differences are not exactly symmetric, so every
    /// constructor funnels through this.
    pub fn from_rows(n: usize, rows: &[f64]) -> Self {
        assert_eq!(rows.len(), n * n, "row data must be n*n");
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = 0.5 * (rows[i * n + j] + rows[j * n + i]);
            }
        }
        m
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = c;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn matmul(&self, other: &SymMatrix) -> Vec<f64> {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                for j in 0..n {
                    out[i * n + j] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    /// Squared Hilbert-Schmidt (Frobenius) norm.
    pub fn hs_norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    /// Max-abs entry.
    pub fn max_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    /// Adds `c * a (x) a` in place.
    pub fn add_outer(&mut self, a: &[f64], c: f64) {
        assert_eq!(a.len(), self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                self[(i, j)] += c * a[i] * a[j];
            }
        }
    }

    /// Cholesky factorization `H = L L^T`. Fails with `SingularHessian` when a
    /// pivot drops below the relative floor, which is how positive
    /// definiteness is decided throughout the toolkit.
    pub fn cholesky(&self) -> Result<Cholesky> {
        let n = self.n;
        let norm = self.max_norm().max(f64::MIN_POSITIVE);
        let floor = PIVOT_FLOOR * norm;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > floor) {
                return Err(Error::SingularHessian { index: j, pivot: d });
            }
            let dj = d.sqrt();
            l[j * n + j] = dj;
            for i in (j + 1)..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / dj;
            }
        }
        Ok(Cholesky { n, l })
    }
}

impl std::ops::Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for SymMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Lower-triangular Cholesky factor of an SPD matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Solves `H x = b` by forward/back substitution.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l[i * n + k] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                y[i] -= self.l[k * n + i] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        y
    }
}

/// `<H^{-1} w, w>` via the symmetric factorization; never forms the inverse.
pub fn hess_inv_quadform(h: &SymMatrix, w: &[f64]) -> Result<f64> {
    let chol = h.cholesky()?;
    // <H^{-1}w, w> = ||L^{-1}w||^2
    let n = h.dim();
    let mut y = w.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= chol.l[i * n + k] * y[k];
        }
        y[i] /= chol.l[i * n + i];
    }
    Ok(y.iter().map(|v| v * v).sum())
}

/// `(A + a (x) a)^{-1}` as a dense symmetric matrix, computed as
/// `A^{-1} - (A^{-1}a (x) A^{-1}a) / (1 + <A^{-1}a, a>)`.
pub fn rank_one_inverse(a_mat: &SymMatrix, a: &[f64]) -> Result<SymMatrix> {
    let n = a_mat.dim();
    assert_eq!(a.len(), n);
    let chol = a_mat.cholesky()?;
    // columns of A^{-1}
    let mut inv = SymMatrix::zeros(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = chol.solve(&e);
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    let ainv_a = chol.solve(a);
    let denom = 1.0 + dot(&ainv_a, a);
    let mut out = inv;
    out.add_outer(&ainv_a, -1.0 / denom);
    Ok(out)
}

/// Quadratic form `<(A + a (x) a)^{-1} w, w>` without forming the update,
/// using the same Sherman-Morrison identity.
pub fn rank_one_inv_quadform(a_mat: &SymMatrix, a: &[f64], w: &[f64]) -> Result<f64> {
    let chol = a_mat.cholesky()?;
    let ainv_w = chol.solve(w);
    let ainv_a = chol.solve(a);
    let base = dot(&ainv_w, w);
    let cross = dot(&ainv_a, w);
    let denom = 1.0 + dot(&ainv_a, a);
    Ok(base - cross * cross / denom)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Thomas algorithm for a tridiagonal system. `lower[i]` couples row i to
/// i-1 (lower[0] unused), `upper[i]` couples row i to i+1 (last unused).
/// Returns `None` when a pivot vanishes.
pub fn tridiag_solve(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Option<Vec<f64>> {
    let n = diag.len();
    assert!(lower.len() == n && upper.len() == n && rhs.len() == n);
    if n == 0 {
        return Some(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    if diag[0] == 0.0 {
        return None;
    }
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - lower[i] * c[i - 1];
        if denom == 0.0 {
            return None;
        }
        c[i] = upper[i] / denom;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let xi = x[i] - c[i] * x[i + 1];
        x[i] = xi;
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
        // G^T G + I is comfortably SPD
        let g: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += g[k * n + i] * g[k * n + j];
                }
                m[(i, j)] = s + if i == j { 1.0 } else { 0.0 };
            }
        }
        m
    }

    #[test]
    fn quadform_scalar_matrix() {
        let h = SymMatrix::scaled_identity(2, 2.0);
        let v = hess_inv_quadform(&h, &[1.0, 1.0]).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn quadform_diagonal() {
        let mut h = SymMatrix::zeros(2);
        h[(0, 0)] = 1.0;
        h[(1, 1)] = 4.0;
        let v = hess_inv_quadform(&h, &[2.0, 2.0]).unwrap();
        assert!((v - 5.0).abs() < 1e-14);
    }

    #[test]
    fn quadform_matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let h = random_spd(3, &mut rng);
            let w: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let q = hess_inv_quadform(&h, &w).unwrap();
            // independent oracle: Gaussian elimination solve
            let x = gauss_solve(&h, &w);
            let oracle = dot(&x, &w);
            assert!((q - oracle).abs() <= 1e-12 * oracle.abs().max(1.0));
        }
    }

    // dense solve with partial pivoting, used only as a test oracle
    fn gauss_solve(h: &SymMatrix, b: &[f64]) -> Vec<f64> {
        let n = h.dim();
        let mut a = vec![0.0; n * (n + 1)];
        for i in 0..n {
            for j in 0..n {
                a[i * (n + 1) + j] = h[(i, j)];
            }
            a[i * (n + 1) + n] = b[i];
        }
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&p, &q| {
                    a[p * (n + 1) + col]
                        .abs()
                        .total_cmp(&a[q * (n + 1) + col].abs())
                })
                .unwrap();
            if piv != col {
                for j in 0..=n {
                    a.swap(col * (n + 1) + j, piv * (n + 1) + j);
                }
            }
            for row in (col + 1)..n {
                let f = a[row * (n + 1) + col] / a[col * (n + 1) + col];
                for j in col..=n {
                    a[row * (n + 1) + j] -= f * a[col * (n + 1) + j];
                }
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = a[i * (n + 1) + n];
            for j in (i + 1)..n {
                s -= a[i * (n + 1) + j] * x[j];
            }
            x[i] = s / a[i * (n + 1) + i];
        }
        x
    }

    #[test]
    fn rank_one_identity_direct() {
        let m = rank_one_inverse(&SymMatrix::identity(2), &[1.0, 0.0]).unwrap();
        assert!((m[(0, 0)] - 0.5).abs() < 1e-14);
        assert!((m[(1, 1)] - 1.0).abs() < 1e-14);
        assert!(m[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn rank_one_zero_vector_gives_plain_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_spd(3, &mut rng);
        let inv = rank_one_inverse(&a, &[0.0; 3]).unwrap();
        let prod = a.matmul(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((prod[i * 3 + j] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rank_one_multiply_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..=6 {
            for _ in 0..10 {
                let a = random_spd(n, &mut rng);
                let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
                let inv = rank_one_inverse(&a, &v).unwrap();
                let mut pert = a.clone();
                pert.add_outer(&v, 1.0);
                let prod = pert.matmul(&inv);
                for i in 0..n {
                    for j in 0..n {
                        let expect = if i == j { 1.0 } else { 0.0 };
                        assert!(
                            (prod[i * n + j] - expect).abs() < 1e-10,
                            "n={n} entry ({i},{j})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn rank_one_quadform_matches_full_update() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let a = random_spd(4, &mut rng);
            let v: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut pert = a.clone();
            pert.add_outer(&v, 1.0);
            let direct = hess_inv_quadform(&pert, &w).unwrap();
            let fast = rank_one_inv_quadform(&a, &v, &w).unwrap();
            assert!((direct - fast).abs() < 1e-12 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn pointwise_dual_bound() {
        // 2<v,w> - <Hv,v> <= <H^{-1}w,w>
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let n = rng.gen_range(1..=4);
            let h = random_spd(n, &mut rng);
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let lhs = 2.0 * dot(&v, &w) - dot(&h.matvec(&v), &v);
            let rhs = hess_inv_quadform(&h, &w).unwrap();
            assert!(lhs <= rhs + 1e-12);
        }
    }

    #[test]
    fn trace_hs_bound() {
        // (Tr Q)^2 <= n ||Q||_HS^2
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..200 {
            let n = rng.gen_range(1..=5);
            let mut q = SymMatrix::zeros(n);
            for i in 0..n {
                for j in i..n {
                    let v = rng.gen_range(-3.0..3.0);
                    q[(i, j)] = v;
                    q[(j, i)] = v;
                }
            }
            let t = q.trace();
            assert!(t * t <= n as f64 * q.hs_norm_sq() + 1e-12);
        }
    }

    #[test]
    fn non_spd_rejected() {
        let mut h = SymMatrix::zeros(2);
        h[(0, 0)] = 1.0;
        h[(1, 1)] = -1.0;
        assert!(matches!(
            h.cholesky(),
            Err(Error::SingularHessian { .. })
        ));
    }
}
