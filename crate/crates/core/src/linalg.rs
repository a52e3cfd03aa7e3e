//! Small structured solvers: tridiagonal, block tridiagonal, banded Cholesky.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix.
#[derive(Clone, Debug)]
pub struct Tridiag {
    pub diag: Vec<f64>,
    /// off[i] couples i and i + 1.
    pub off: Vec<f64>,
}

impl Tridiag {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.off[i] * x[i + 1];
            }
            y[i] = s;
        }
    }

    pub fn quad(&self, x: &[f64]) -> f64 {
        let n = self.len();
        let mut s = 0.0;
        for i in 0..n {
            s += self.diag[i] * x[i] * x[i];
            if i + 1 < n {
                s += 2.0 * self.off[i] * x[i] * x[i + 1];
            }
        }
        s
    }

    /// Thomas algorithm; in place on b.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.len();
        let mut c = vec![0.0; n];
        let mut d = self.diag[0];
        c[0] = if n > 1 { self.off[0] / d } else { 0.0 };
        b[0] /= d;
        for i in 1..n {
            d = self.diag[i] - self.off[i - 1] * c[i - 1];
            if i + 1 < n {
                c[i] = self.off[i] / d;
            }
            b[i] = (b[i] - self.off[i - 1] * b[i - 1]) / d;
        }
        for i in (0..n - 1).rev() {
            b[i] -= c[i] * b[i + 1];
        }
    }
}

/// Block tridiagonal system with dense diagonal blocks and diagonal coupling blocks.
pub struct BlockTridiag {
    pub diag: Vec<DMatrix<f64>>,
    /// lower[j] is the diagonal of the block at (j + 1, j).
    pub lower: Vec<Vec<f64>>,
    /// upper[j] is the diagonal of the block at (j, j + 1).
    pub upper: Vec<Vec<f64>>,
}

impl BlockTridiag {
    /// Solves in place; x is laid out block-major.
    pub fn solve(&self, x: &mut [f64]) -> Result<()> {
        let nb = self.diag.len();
        let m = self.diag[0].nrows();
        let mut inv: Vec<DMatrix<f64>> = Vec::with_capacity(nb);
        let mut rhs: Vec<nalgebra::DVector<f64>> = (0..nb)
            .map(|j| nalgebra::DVector::from_column_slice(&x[j * m..(j + 1) * m]))
            .collect();
        for j in 0..nb {
            let mut d = self.diag[j].clone();
            if j > 0 {
                let pinv = &inv[j - 1];
                let lo = &self.lower[j - 1];
                let up = &self.upper[j - 1];
                for a in 0..m {
                    for b in 0..m {
                        d[(a, b)] -= lo[a] * pinv[(a, b)] * up[b];
                    }
                }
                let mut r = pinv * &rhs[j - 1];
                for a in 0..m {
                    r[a] *= lo[a];
                }
                rhs[j] -= r;
            }
            let di = d
                .try_inverse()
                .ok_or_else(|| Error::Precondition("singular block in Newton system".into()))?;
            inv.push(di);
        }
        let mut sol = vec![nalgebra::DVector::<f64>::zeros(m); nb];
        for j in (0..nb).rev() {
            let mut r = rhs[j].clone();
            if j + 1 < nb {
                let up = &self.upper[j];
                for a in 0..m {
                    r[a] -= up[a] * sol[j + 1][a];
                }
            }
            sol[j] = &inv[j] * r;
        }
        for j in 0..nb {
            x[j * m..(j + 1) * m].copy_from_slice(sol[j].as_slice());
        }
        Ok(())
    }
}

/// Symmetric positive definite banded matrix, lower band storage: band[i][k] = A[i][i-k].
#[derive(Clone, Debug)]
pub struct Banded {
    pub n: usize,
    pub bw: usize,
    pub band: Vec<Vec<f64>>,
}

impl Banded {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Banded { n, bw, band: vec![vec![0.0; bw + 1]; n] }
    }

    /// Adds v to A[i][j] (and A[j][i]); requires |i - j| <= bw.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (a, b) = if i >= j { (i, j) } else { (j, i) };
        self.band[a][a - b] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i >= j { (i, j) } else { (j, i) };
        if a - b > self.bw {
            0.0
        } else {
            self.band[a][a - b]
        }
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for v in y.iter_mut() {
            *v = 0.0;
        }
        for i in 0..self.n {
            y[i] += self.band[i][0] * x[i];
            for k in 1..=self.bw.min(i) {
                let a = self.band[i][k];
                if a != 0.0 {
                    y[i] += a * x[i - k];
                    y[i - k] += a * x[i];
                }
            }
        }
    }

    pub fn quad(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; self.n];
        self.apply(x, &mut y);
        crate::special::dot(x, &y)
    }

    /// Cholesky factor L (same storage); fails when not positive definite.
    pub fn cholesky(&self) -> Result<BandedCholesky> {
        let n = self.n;
        let bw = self.bw;
        let mut l = self.band.clone();
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut s = l[i][i - j];
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    s -= l[i][i - k] * l[j][j - k];
                }
                if i == j {
                    if s <= 0.0 {
                        return Err(Error::Precondition("matrix is not positive definite".into()));
                    }
                    l[i][0] = s.sqrt();
                } else {
                    l[i][i - j] = s / l[j][0];
                }
            }
        }
        Ok(BandedCholesky { n, bw, l })
    }
}

#[derive(Clone, Debug)]
pub struct BandedCholesky {
    pub n: usize,
    pub bw: usize,
    l: Vec<Vec<f64>>,
}

impl BandedCholesky {
    /// Solves L y = b in place.
    pub fn forward(&self, b: &mut [f64]) {
        for i in 0..self.n {
            let mut s = b[i];
            for k in 1..=self.bw.min(i) {
                s -= self.l[i][k] * b[i - k];
            }
            b[i] = s / self.l[i][0];
        }
    }

    /// Solves L^T x = y in place.
    pub fn backward(&self, b: &mut [f64]) {
        for i in (0..self.n).rev() {
            b[i] /= self.l[i][0];
            let bi = b[i];
            for k in 1..=self.bw.min(i) {
                b[i - k] -= self.l[i][k] * bi;
            }
        }
    }

    pub fn solve(&self, b: &mut [f64]) {
        self.forward(b);
        self.backward(b);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_solve() {
        let t = Tridiag { diag: vec![4.0, 5.0, 6.0, 7.0], off: vec![1.0, -1.0, 2.0] };
        let x = [1.0, -2.0, 0.5, 3.0];
        let mut b = vec![0.0; 4];
        t.apply(&x, &mut b);
        t.solve(&mut b);
        for i in 0..4 {
            assert!((b[i] - x[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn banded_cholesky_solve() {
        let n = 30;
        let mut a = Banded::zeros(n, 3);
        for i in 0..n {
            a.add(i, i, 10.0 + i as f64 * 0.1);
            if i >= 1 {
                a.add(i, i - 1, -1.0);
            }
            if i >= 3 {
                a.add(i, i - 3, 0.7);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b = vec![0.0; n];
        a.apply(&x, &mut b);
        a.cholesky().unwrap().solve(&mut b);
        for i in 0..n {
            assert!((b[i] - x[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn block_tridiagonal_solve() {
        let m = 3;
        let nb = 5;
        let diag: Vec<DMatrix<f64>> = (0..nb)
            .map(|j| DMatrix::from_fn(m, m, |a, b| if a == b { 6.0 + j as f64 } else { 0.5 }))
            .collect();
        let off: Vec<Vec<f64>> = (0..nb - 1).map(|j| vec![-1.0, 0.3 * j as f64, 0.2]).collect();
        let up: Vec<Vec<f64>> = off.iter().map(|v| v.iter().map(|x| 2.0 * x).collect()).collect();
        let bt = BlockTridiag { diag: diag.clone(), lower: off.clone(), upper: up.clone() };
        let x: Vec<f64> = (0..nb * m).map(|i| (i as f64).cos()).collect();
        let mut b = vec![0.0; nb * m];
        for j in 0..nb {
            for a in 0..m {
                let mut s = 0.0;
                for c in 0..m {
                    s += diag[j][(a, c)] * x[j * m + c];
                }
                if j > 0 {
                    s += off[j - 1][a] * x[(j - 1) * m + a];
                }
                if j + 1 < nb {
                    s += up[j][a] * x[(j + 1) * m + a];
                }
                b[j * m + a] = s;
            }
        }
        bt.solve(&mut b).unwrap();
        for i in 0..nb * m {
            assert!((b[i] - x[i]).abs() < 1e-12);
        }
    }
}
