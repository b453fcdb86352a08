//! Envelope (skyline) storage and Cholesky factorization for the banded SPD
//! systems produced by grid stencils.

use crate::error::{Error, Result};

/// Lower triangle of a symmetric matrix in row envelope form: row `i` stores
/// columns `first[i]..=i` contiguously.
#[derive(Debug, Clone)]
pub struct SkylineMatrix {
    first: Vec<usize>,
    offset: Vec<usize>,
    values: Vec<f64>,
}

impl SkylineMatrix {
    /// Allocate a zero matrix with the given first stored column per row (`first[i] ≤ i`).
    pub fn with_profile(first: Vec<usize>) -> Self {
        let mut offset = Vec::with_capacity(first.len() + 1);
        let mut total = 0;
        for (i, &f) in first.iter().enumerate() {
            assert!(f <= i, "profile column {f} exceeds row {i}");
            offset.push(total);
            total += i - f + 1;
        }
        offset.push(total);
        SkylineMatrix { first, offset, values: vec![0.0; total] }
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    pub fn fill_zero(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && j >= self.first[i], "({i},{j}) outside the profile");
        self.offset[i] + (j - self.first[i])
    }

    /// Add `v` to entry `(i, j)`; only the lower triangle (`j ≤ i`) is stored.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        let s = self.slot(i, j);
        self.values[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        if j < self.first[i] {
            0.0
        } else {
            self.values[self.slot(i, j)]
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let f = self.first[i];
            let row = &self.values[self.offset[i]..self.offset[i + 1]];
            for (k, &a) in row.iter().enumerate() {
                let j = f + k;
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// In-place Cholesky `A = L Lᵀ`; the envelope is preserved by the factorization.
    pub fn factor(mut self) -> Result<CholeskyFactor> {
        let n = self.dim();
        for i in 0..n {
            let fi = self.first[i];
            let oi = self.offset[i];
            for j in fi..i {
                let fj = self.first[j];
                let oj = self.offset[j];
                let k0 = fi.max(fj);
                let mut s = self.values[oi + (j - fi)];
                let a = &self.values[oi + (k0 - fi)..oi + (j - fi)];
                let b = &self.values[oj + (k0 - fj)..oj + (j - fj)];
                s -= dot(a, b);
                let djj = self.values[oj + (j - fj)];
                self.values[oi + (j - fi)] = s / djj;
            }
            let row = &self.values[oi..oi + (i - fi)];
            let d = self.values[oi + (i - fi)] - dot(row, row);
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { row: i, pivot: d });
            }
            self.values[oi + (i - fi)] = d.sqrt();
        }
        Ok(CholeskyFactor { l: self })
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators let the compiler vectorize the reduction.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for t in 0..4 {
            acc[t] += a[4 * c + t] * b[4 * c + t];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

/// Cholesky factor in envelope storage.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    l: SkylineMatrix,
}

impl CholeskyFactor {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let l = &self.l;
        let n = l.dim();
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let f = l.first[i];
            let o = l.offset[i];
            let s = dot(&l.values[o..o + (i - f)], &y[f..i]);
            y[i] = (y[i] - s) / l.values[o + (i - f)];
        }
        for i in (0..n).rev() {
            let f = l.first[i];
            let o = l.offset[i];
            y[i] /= l.values[o + (i - f)];
            let yi = y[i];
            for (k, &a) in l.values[o..o + (i - f)].iter().enumerate() {
                y[f + k] -= a * yi;
            }
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_from(first: &[usize], entries: &[(usize, usize, f64)]) -> SkylineMatrix {
        let mut m = SkylineMatrix::with_profile(first.to_vec());
        for &(i, j, v) in entries {
            m.add(i, j, v);
        }
        m
    }

    #[test]
    fn solves_tridiagonal_system() {
        // 1D Laplacian with Dirichlet ends; exact solution of -u'' = 2 with h = 1 on 4 points.
        let n = 4;
        let first: Vec<usize> = (0..n).map(|i: usize| i.saturating_sub(1)).collect();
        let mut entries = Vec::new();
        for i in 0..n {
            entries.push((i, i, 2.0));
            if i > 0 {
                entries.push((i, i - 1, -1.0));
            }
        }
        let m = dense_from(&first, &entries);
        let x = m.factor().unwrap().solve(&[2.0; 4]);
        let expect = [4.0, 6.0, 6.0, 4.0];
        for (a, b) in x.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_matrix_is_reported() {
        let m = dense_from(&[0, 0], &[(0, 0, 1.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(matches!(m.factor(), Err(Error::NotPositiveDefinite { row: 1, .. })));
    }

    proptest! {
        #[test]
        fn factor_solve_inverts_matvec(
            n in 1usize..30,
            band in 0usize..6,
            seed in proptest::collection::vec(-1.0f64..1.0, 200),
        ) {
            // Diagonally dominant banded SPD matrix.
            let first: Vec<usize> = (0..n).map(|i| i.saturating_sub(band)).collect();
            let mut m = SkylineMatrix::with_profile(first.clone());
            let mut k = 0;
            let mut rowsum = vec![0.0; n];
            for i in 0..n {
                for j in first[i]..i {
                    let v = seed[k % seed.len()];
                    k += 1;
                    m.add(i, j, v);
                    rowsum[i] += v.abs();
                    rowsum[j] += v.abs();
                }
            }
            for (i, s) in rowsum.iter().enumerate() {
                m.add(i, i, s + 1.0);
            }
            let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
            let b = m.matvec(&x);
            let y = m.clone().factor().unwrap().solve(&b);
            for (a, e) in y.iter().zip(&x) {
                prop_assert!((a - e).abs() < 1e-10);
            }
        }
    }
}
