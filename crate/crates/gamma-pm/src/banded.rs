//! Symmetric banded linear algebra: Cholesky factorization for the
//! fourth-order implicit operators, plus a Woodbury wrapper for the
//! periodic (wrapped) variant.

use crate::error::{Error, Result};

/// Symmetric banded matrix stored by diagonals: `diag[d][i] = A[i][i+d]`
/// for d = 0..=kd, i = 0..n-1-d.
#[derive(Debug, Clone)]
pub struct SymBanded {
    pub n: usize,
    pub kd: usize,
    pub diag: Vec<Vec<f64>>,
}

impl SymBanded {
    pub fn zeros(n: usize, kd: usize) -> Self {
        let diag = (0..=kd).map(|d| vec![0.0; n - d.min(n)]).collect();
        SymBanded { n, kd, diag }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        debug_assert!(d <= self.kd, "entry ({i},{j}) outside band {}", self.kd);
        self.diag[d][lo] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        if d > self.kd {
            0.0
        } else {
            self.diag[d][lo]
        }
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let mut acc = self.diag[0][i] * x[i];
            for d in 1..=self.kd {
                if i + d < self.n {
                    acc += self.diag[d][i] * x[i + d];
                }
                if i >= d {
                    acc += self.diag[d][i - d] * x[i - d];
                }
            }
            y[i] = acc;
        }
        y
    }

    /// Shift the diagonal: A + tau I.
    pub fn shifted(&self, tau: f64) -> SymBanded {
        let mut a = self.clone();
        for v in &mut a.diag[0] {
            *v += tau;
        }
        a
    }

    /// Banded Cholesky A = L L^T. Fails on a non-positive pivot, which the
    /// Newton callers treat as "increase the damping".
    pub fn cholesky(&self) -> Result<BandedChol> {
        let n = self.n;
        let kd = self.kd;
        let mut l = self.diag.clone();
        for j in 0..n {
            let mut s = l[0][j];
            for d in 1..=kd.min(j) {
                s -= l[d][j - d] * l[d][j - d];
            }
            if s <= 0.0 || !s.is_finite() {
                return Err(Error::Geometry(format!(
                    "cholesky breakdown at pivot {j}: {s}"
                )));
            }
            let ljj = s.sqrt();
            l[0][j] = ljj;
            let imax = (j + kd).min(n - 1);
            for i in (j + 1)..=imax {
                let d = i - j;
                let mut s = l[d][j];
                // overlap of bands for columns < j
                let kmin = i.saturating_sub(kd).max(0);
                for k in kmin..j {
                    let di = i - k;
                    let dj = j - k;
                    if di <= kd && dj <= kd {
                        s -= l[di][k] * l[dj][k];
                    }
                }
                l[d][j] = s / ljj;
            }
        }
        Ok(BandedChol { n, kd, l })
    }
}

/// Lower-triangular banded Cholesky factor.
#[derive(Debug, Clone)]
pub struct BandedChol {
    n: usize,
    kd: usize,
    /// l[d][j] = L[j+d][j]
    l: Vec<Vec<f64>>,
}

impl BandedChol {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let kd = self.kd;
        let mut y = b.to_vec();
        // forward: L y = b
        for j in 0..n {
            y[j] /= self.l[0][j];
            let imax = (j + kd).min(n - 1);
            for i in (j + 1)..=imax {
                y[i] -= self.l[i - j][j] * y[j];
            }
        }
        // backward: L^T x = y
        for j in (0..n).rev() {
            let imax = (j + kd).min(n - 1);
            for i in (j + 1)..=imax {
                y[j] -= self.l[i - j][j] * y[i];
            }
            y[j] /= self.l[0][j];
        }
        y
    }
}

/// Solver for A + U V^T with banded SPD A (Woodbury identity); used for
/// the periodic fourth-order operator, whose wrap couplings have small rank.
pub struct LowRankUpdateSolver {
    chol: BandedChol,
    u: Vec<Vec<f64>>,
    /// (I + V^T A^{-1} U)^{-1} as a dense row-major matrix
    cap_inv: Vec<f64>,
    ainv_u: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    r: usize,
}

impl LowRankUpdateSolver {
    pub fn new(a: &SymBanded, u: Vec<Vec<f64>>, v: Vec<Vec<f64>>) -> Result<Self> {
        let chol = a.cholesky()?;
        let r = u.len();
        assert_eq!(v.len(), r);
        let ainv_u: Vec<Vec<f64>> = u.iter().map(|col| chol.solve(col)).collect();
        // cap = I + V^T A^{-1} U
        let mut cap = vec![0.0; r * r];
        for i in 0..r {
            for j in 0..r {
                let dot: f64 = v[i].iter().zip(&ainv_u[j]).map(|(a, b)| a * b).sum();
                cap[i * r + j] = dot + if i == j { 1.0 } else { 0.0 };
            }
        }
        let cap_inv = invert_dense(&cap, r)
            .ok_or_else(|| Error::Geometry("singular capacitance matrix".into()))?;
        Ok(LowRankUpdateSolver {
            chol,
            u,
            cap_inv,
            ainv_u,
            v,
            r,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = self.chol.solve(b);
        // w = cap^{-1} V^T x
        let mut vtx = vec![0.0; self.r];
        for i in 0..self.r {
            vtx[i] = self.v[i].iter().zip(&x).map(|(a, b)| a * b).sum();
        }
        let mut w = vec![0.0; self.r];
        for i in 0..self.r {
            for j in 0..self.r {
                w[i] += self.cap_inv[i * self.r + j] * vtx[j];
            }
        }
        for j in 0..self.r {
            for (xi, au) in x.iter_mut().zip(&self.ainv_u[j]) {
                *xi -= au * w[j];
            }
        }
        let _ = &self.u;
        x
    }
}

fn invert_dense(m: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut a = m.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let mut piv = col;
        for row in col + 1..n {
            if a[row * n + col].abs() > a[piv * n + col].abs() {
                piv = row;
            }
        }
        if a[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
                inv.swap(col * n + k, piv * n + k);
            }
        }
        let d = a[col * n + col];
        for k in 0..n {
            a[col * n + k] /= d;
            inv[col * n + k] /= d;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row * n + col];
            if f == 0.0 {
                continue;
            }
            for k in 0..n {
                a[row * n + k] -= f * a[col * n + k];
                inv[row * n + k] -= f * inv[col * n + k];
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_solve(a: &SymBanded, b: &[f64]) -> Vec<f64> {
        // reference via Gaussian elimination on the dense matrix
        let n = a.n;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = a.get(i, j);
            }
        }
        let inv = invert_dense(&m, n).unwrap();
        (0..n)
            .map(|i| (0..n).map(|j| inv[i * n + j] * b[j]).sum())
            .collect()
    }

    #[test]
    fn banded_cholesky_matches_dense() {
        let n = 24;
        let mut a = SymBanded::zeros(n, 3);
        for i in 0..n {
            a.add(i, i, 8.0 + (i % 3) as f64);
            if i + 1 < n {
                a.add(i, i + 1, -2.0);
            }
            if i + 2 < n {
                a.add(i, i + 2, 0.5);
            }
            if i + 3 < n {
                a.add(i, i + 3, -0.1);
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let x = a.cholesky().unwrap().solve(&b);
        let xd = dense_solve(&a, &b);
        for (u, v) in x.iter().zip(&xd) {
            assert!((u - v).abs() < 1e-10, "{u} vs {v}");
        }
        // residual
        let r = a.matvec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-10);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = SymBanded::zeros(4, 1);
        for i in 0..4 {
            a.add(i, i, -1.0);
        }
        assert!(a.cholesky().is_err());
    }

    #[test]
    fn woodbury_matches_dense() {
        let n = 16;
        let mut a = SymBanded::zeros(n, 2);
        for i in 0..n {
            a.add(i, i, 6.0);
            if i + 1 < n {
                a.add(i, i + 1, -2.0);
            }
            if i + 2 < n {
                a.add(i, i + 2, 0.3);
            }
        }
        // corner coupling: A' = A + u v^T + v u^T with u = e0, v = 0.4 e_{n-1}
        let mut u0 = vec![0.0; n];
        u0[0] = 1.0;
        let mut v0 = vec![0.0; n];
        v0[n - 1] = 0.4;
        let solver =
            LowRankUpdateSolver::new(&a, vec![u0.clone(), v0.clone()], vec![v0.clone(), u0.clone()])
                .unwrap();
        let b: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let x = solver.solve(&b);
        // dense reference
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = a.get(i, j);
            }
        }
        m[0 * n + n - 1] += 0.4;
        m[(n - 1) * n + 0] += 0.4;
        let inv = invert_dense(&m, n).unwrap();
        for i in 0..n {
            let xi: f64 = (0..n).map(|j| inv[i * n + j] * b[j]).sum();
            assert!((x[i] - xi).abs() < 1e-10);
        }
    }
}
