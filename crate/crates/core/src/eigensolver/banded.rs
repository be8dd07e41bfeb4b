use crate::error::{Error, Result};

/// Symmetric positive definite matrix in lower band storage with in-place
/// Cholesky factorization.
#[derive(Debug, Clone)]
pub struct BandedSpd {
    n: usize,
    bw: usize,
    /// Row `i` holds columns `i - bw ..= i` at offsets `0 ..= bw`.
    data: Vec<f64>,
    factored: bool,
}

impl BandedSpd {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandedSpd {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
            factored: false,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
        self.factored = false;
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * (self.bw + 1) + (j + self.bw - i)
    }

    /// Add `v` to entry `(i, j)`; `(j, i)` is implied by symmetry.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(i - j <= self.bw);
        let k = self.at(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.at(i, j)]
        }
    }

    /// Overwrite with the Cholesky factor `L` (`A = L L^T`).
    pub fn factor(&mut self) -> Result<()> {
        let bw = self.bw;
        for i in 0..self.n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = self.data[self.at(i, j)];
                let ri = self.at(i, k0);
                let rj = self.at(j, k0);
                let len = j - k0;
                let (a, b) = (&self.data[ri..ri + len], &self.data[rj..rj + len]);
                s -= a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite(i));
                    }
                    let k = self.at(i, i);
                    self.data[k] = s.sqrt();
                } else {
                    let d = self.data[self.at(j, j)];
                    let k = self.at(i, j);
                    self.data[k] = s / d;
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    /// Solve `A x = b` in place using the factor.
    pub fn solve(&self, b: &mut [f64]) {
        assert!(self.factored, "solve before factor");
        let bw = self.bw;
        for i in 0..self.n {
            let j0 = i.saturating_sub(bw);
            let r = self.at(i, j0);
            let s: f64 = self.data[r..r + (i - j0)]
                .iter()
                .zip(&b[j0..i])
                .map(|(l, x)| l * x)
                .sum();
            b[i] = (b[i] - s) / self.data[self.at(i, i)];
        }
        for i in (0..self.n).rev() {
            b[i] /= self.data[self.at(i, i)];
            let xi = b[i];
            let j0 = i.saturating_sub(bw);
            for j in j0..i {
                b[j] -= self.data[self.at(i, j)] * xi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_solve() {
        // 1D Dirichlet Laplacian: A = tridiag(-1, 2, -1), x = A^{-1} 1 is
        // i (n + 1 - i) / 2 for i = 1..n
        let n = 9;
        let mut a = BandedSpd::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        a.factor().unwrap();
        let mut b = vec![1.0; n];
        a.solve(&mut b);
        for (i, x) in b.iter().enumerate() {
            let k = (i + 1) as f64;
            assert!((x - k * (n as f64 + 1.0 - k) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn wide_band_matches_dense_product() {
        let n = 30;
        let bw = 5;
        let mut a = BandedSpd::zeros(n, bw);
        for i in 0..n {
            a.add(i, i, 20.0 + i as f64);
            for d in 1..=bw.min(i) {
                a.add(i, i - d, ((i * 7 + d * 3) % 5) as f64 * 0.3 - 0.6);
            }
        }
        let orig = a.clone();
        a.factor().unwrap();
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| orig.get(i, j) * x_true[j]).sum())
            .collect();
        a.solve(&mut b);
        for (x, y) in b.iter().zip(&x_true) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let mut a = BandedSpd::zeros(2, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(1, 0, 2.0);
        assert_eq!(a.factor(), Err(Error::NotPositiveDefinite(1)));
    }
}
