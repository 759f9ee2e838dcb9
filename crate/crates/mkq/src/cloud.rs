//! Dense point clouds: the empirical measure with uniform weights.

use crate::error::{Error, Result};

/// `n` observations in `d` dimensions, stored row-major.
///
/// Represents the empirical measure putting mass `1/n` on each row.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<f64>,
    n: usize,
    d: usize,
}

impl PointCloud {
    /// Builds a cloud from a flat row-major buffer of length `n * d`.
    pub fn from_flat(n: usize, d: usize, points: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::parameter("dimension must be at least 1"));
        }
        if points.len() != n * d {
            return Err(Error::data(format!(
                "expected {} values for a {}x{} cloud, got {}",
                n * d,
                n,
                d,
                points.len()
            )));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::data("point cloud contains non-finite entries"));
        }
        Ok(PointCloud { points, n, d })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::data("empty point cloud"));
        }
        let d = rows[0].len();
        let mut flat = Vec::with_capacity(n * d);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(Error::data(format!(
                    "row {} has {} fields, expected {}",
                    i,
                    r.len(),
                    d
                )));
            }
            flat.extend_from_slice(r);
        }
        Self::from_flat(n, d, flat)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.d)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.points
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for r in self.rows() {
            for (mi, xi) in m.iter_mut().zip(r) {
                *mi += xi;
            }
        }
        for mi in &mut m {
            *mi /= self.n as f64;
        }
        m
    }

    /// True when every row equals the first one; such a cloud cannot be
    /// transported onto a continuous reference.
    pub fn is_degenerate(&self) -> bool {
        let first = self.row(0);
        self.rows().all(|r| r == first)
    }

    /// Component-wise affine image `a * x + b` of the cloud.
    pub fn affine(&self, a: f64, b: &[f64]) -> Result<Self> {
        if b.len() != self.d {
            return Err(Error::parameter("shift dimension mismatch"));
        }
        let points = self
            .rows()
            .flat_map(|r| r.iter().zip(b).map(|(x, bi)| a * x + bi))
            .collect();
        Self::from_flat(self.n, self.d, points)
    }

    pub fn min_coordinate(&self) -> f64 {
        self.points.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}
