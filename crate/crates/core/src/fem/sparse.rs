//! Compressed sparse row storage.

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl CsrMatrix {
    /// Sums duplicate entries in the order they were pushed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>, symmetric: bool) -> Self {
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len() / 4);
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len() / 4);
        let mut last = None;
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) outside {n} x {n}");
            if last == Some((i, j)) {
                *values.last_mut().expect("entry exists") += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
            symmetric,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, (0..n).map(|i| (i, i, 1.0)).collect(), true)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_symmetric_flagged(&self) -> bool {
        self.symmetric
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `x^T A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.bilinear_form(x, x)
    }

    /// `x^T A y`.
    pub fn bilinear_form(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(self.mul_vec(y)).map(|(a, b)| a * b).sum()
    }

    /// Largest `|a_ij - a_ji|` over stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        self.triplets()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// `self + scale * other`, same dimension.
    pub fn add_scaled(&self, scale: f64, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let trips = self
            .triplets()
            .chain(other.triplets().map(|(i, j, v)| (i, j, scale * v)))
            .collect();
        CsrMatrix::from_triplets(self.n, trips, self.symmetric && other.symmetric)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let a = CsrMatrix::from_triplets(3, vec![(0, 0, 1.0), (2, 1, 2.0), (0, 0, 3.0), (1, 2, 2.0)], true);
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(0, 0), 4.0);
        assert_eq!(a.get(1, 1), 0.0);
        assert_eq!(a.mul_vec(&[1.0, 1.0, 1.0]), vec![4.0, 2.0, 2.0]);
        assert_eq!(a.max_asymmetry(), 0.0);
        assert_eq!(a.diagonal(), vec![4.0, 0.0, 0.0]);
    }

    #[test]
    fn add_scaled_merges_patterns() {
        let a = CsrMatrix::identity(2);
        let b = CsrMatrix::from_triplets(2, vec![(0, 1, 1.0), (1, 0, 1.0)], true);
        let c = a.add_scaled(2.0, &b);
        assert_eq!(c.get(0, 1), 2.0);
        assert_eq!(c.get(1, 1), 1.0);
        assert_eq!(c.quadratic_form(&[1.0, 1.0]), 6.0);
    }
}
