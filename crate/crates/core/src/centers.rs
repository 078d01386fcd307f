//! A stacked block of `K` centers in `R^d`, the per-user decision variable.

use serde::{Deserialize, Serialize};

/// `K` centers of dimension `d`, stored row-major as one flat block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Centers {
    k: usize,
    d: usize,
    data: Vec<f64>,
}

impl Centers {
    pub fn zeros(k: usize, d: usize) -> Self {
        Self { k, d, data: vec![0.0; k * d] }
    }

    /// Builds a block from `K` rows. Panics if rows are missing or ragged.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        assert!(!rows.is_empty(), "at least one center required");
        let d = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == d), "ragged center rows");
        let mut data = Vec::with_capacity(rows.len() * d);
        for r in rows {
            data.extend_from_slice(r);
        }
        Self { k: rows.len(), d, data }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.d..(k + 1) * self.d]
    }

    pub fn row_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.d..(k + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Reorders rows so that new row `k` is old row `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.k);
        let rows: Vec<Vec<f64>> = perm.iter().map(|&p| self.row(p).to_vec()).collect();
        Self::from_rows(&rows)
    }
}

/// Squared Euclidean distance between two slices of equal length.
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest row of `centers` to `point`, ties to the smallest index.
pub fn nearest_center(centers: &Centers, point: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (k, row) in centers.rows().enumerate() {
        let d = dist2(row, point);
        if d < best_d {
            best_d = d;
            best = k;
        }
    }
    best
}
