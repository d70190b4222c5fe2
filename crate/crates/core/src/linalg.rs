//! Sparse row storage and a banded LU factorization with partial pivoting.
//!
//! The five-point operator on an `nx x ny` grid has lower and upper bandwidth
//! `nx`, so a band solver is a direct sparse solver with fill confined to the
//! band. Factorization costs `O(n * kl * (kl + ku))`, each solve `O(n * (2kl + ku))`.

/// Compressed sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Build from per-row `(column, value)` lists. Duplicate columns are summed
    /// and zero entries kept (the pattern is structural).
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                assert!(c < n, "column {c} out of range");
                if last == Some(c) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `(column, value)` entries of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(cc, _)| cc == c).map_or(0.0, |(_, v)| v)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    /// Lower and upper bandwidth.
    pub fn bandwidth(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for r in 0..self.n {
            for (c, _) in self.row(r) {
                if c < r {
                    kl = kl.max(r - c);
                } else {
                    ku = ku.max(c - r);
                }
            }
        }
        (kl, ku)
    }
}

/// Zero pivot encountered while factorizing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroPivot {
    pub column: usize,
}

/// LU factors of a banded matrix, `P A = L U`, stored row-wise.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    /// Row `r` holds columns `r - kl ..= r + kl + ku` of U.
    upper: Vec<f64>,
    /// Multipliers of elimination step `k`, rows `k + 1 ..= k + kl`.
    lower: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn factorize(a: &SparseMatrix) -> Result<Self, ZeroPivot> {
        let n = a.dim();
        let (kl, ku) = a.bandwidth();
        let width = 2 * kl + ku + 1;
        let mut upper = vec![0.0; n * width];
        for r in 0..n {
            for (c, v) in a.row(r) {
                upper[r * width + c + kl - r] += v;
            }
        }
        let mut lu = Self {
            n,
            kl,
            ku,
            width,
            upper,
            lower: vec![0.0; n * kl.max(1)],
            pivots: vec![0; n],
        };
        lu.eliminate()?;
        Ok(lu)
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> usize {
        r * self.width + c + self.kl - r
    }

    fn eliminate(&mut self) -> Result<(), ZeroPivot> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);

            let mut p = k;
            let mut best = self.upper[self.at(k, k)].abs();
            for r in k + 1..=last_row {
                let v = self.upper[self.at(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > 0.0) || !best.is_finite() {
                return Err(ZeroPivot { column: k });
            }
            self.pivots[k] = p;
            if p != k {
                for c in k..=last_col {
                    let (a, b) = (self.at(k, c), self.at(p, c));
                    self.upper.swap(a, b);
                }
            }

            let pivot = self.upper[self.at(k, k)];
            let pivot_start = self.at(k, k);
            for r in k + 1..=last_row {
                let idx = self.at(r, k);
                let m = self.upper[idx] / pivot;
                self.lower[k * kl + (r - k - 1)] = m;
                self.upper[idx] = 0.0;
                if m == 0.0 {
                    continue;
                }
                let row_start = self.at(r, k + 1);
                let len = last_col - k;
                // rows k and r are disjoint slices of `upper`
                let (head, tail) = self.upper.split_at_mut(row_start);
                let src = &head[pivot_start + 1..pivot_start + 1 + len];
                for (dst, s) in tail[..len].iter_mut().zip(src) {
                    *dst -= m * s;
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solve `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, kl) = (self.n, self.kl);
        assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                let last_row = (k + kl).min(n - 1);
                let mult = &self.lower[k * kl..];
                for (r, m) in (k + 1..=last_row).zip(mult) {
                    b[r] -= m * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + self.kl + self.ku).min(n - 1);
            let start = self.at(k, k);
            let row = &self.upper[start..start + (last_col - k) + 1];
            let mut s = b[k];
            for (u, x) in row[1..].iter().zip(&b[k + 1..=last_col]) {
                s -= u * x;
            }
            b[k] = s / row[0];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
        let ax = a.matvec(x);
        let num = ax.iter().zip(b).fold(0.0, |m: f64, (p, q)| m.max((p - q).abs()));
        let den = b.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        num / den
    }

    #[test]
    fn duplicates_are_summed() {
        let a = SparseMatrix::from_rows(vec![vec![(0, 1.0), (0, 2.0)], vec![(1, 4.0)]]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn needs_pivoting() {
        // zero leading diagonal entry forces a row interchange
        let a = SparseMatrix::from_rows(vec![
            vec![(0, 0.0), (1, 2.0)],
            vec![(0, 3.0), (1, 1.0), (2, -1.0)],
            vec![(1, 1.0), (2, 4.0)],
        ]);
        let lu = BandedLu::factorize(&a).unwrap();
        let b = [1.0, 2.0, 3.0];
        let x = lu.solve(&b);
        assert!(residual(&a, &x, &b) < 1e-14);
    }

    #[test]
    fn singular_reports_column() {
        let a = SparseMatrix::from_rows(vec![vec![(0, 1.0), (1, 1.0)], vec![(0, 1.0), (1, 1.0)]]);
        assert_eq!(BandedLu::factorize(&a).unwrap_err(), ZeroPivot { column: 1 });
    }

    proptest! {
        #[test]
        fn random_banded_systems_solve(n in 1usize..40, kl in 0usize..5, ku in 0usize..5, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<Vec<(usize, f64)>> = (0..n)
                .map(|r| {
                    let lo = r.saturating_sub(kl);
                    let hi = (r + ku).min(n - 1);
                    (lo..=hi).map(|c| (c, rng.random_range(-1.0..1.0) + if c == r { 0.1 } else { 0.0 })).collect()
                })
                .collect();
            let a = SparseMatrix::from_rows(rows);
            if let Ok(lu) = BandedLu::factorize(&a) {
                let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let x = lu.solve(&b);
                // normwise backward error; robust to ill-conditioned draws
                let ax = a.matvec(&x);
                let num = ax.iter().zip(&b).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
                let a_norm = (0..n).map(|r| a.row(r).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max);
                let x_norm = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let b_norm = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let eta = num / (a_norm * x_norm + b_norm);
                prop_assert!(eta < 1e-12, "backward error {}", eta);
            }
        }
    }
}
