use diffnum::Tensor;

use crate::error::{Error, Result};

/// A 2-D point `(x, y)`.
pub type Point = [f64; 2];

/// `n` trajectories of `len` points each, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracks {
    n: usize,
    len: usize,
    points: Vec<Point>,
}

impl Tracks {
    pub fn zeros(n: usize, len: usize) -> Self {
        Self {
            n,
            len,
            points: vec![[0.0, 0.0]; n * len],
        }
    }

    pub fn from_rows(rows: Vec<Vec<Point>>) -> Result<Self> {
        let len = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != len) {
            return Err(Error::Mismatch("trajectories of unequal length".into()));
        }
        Ok(Self {
            n: rows.len(),
            len,
            points: rows.concat(),
        })
    }

    /// Reads `[n, 2·len]` flattened `(x, y)` rows.
    pub fn from_tensor(t: &Tensor) -> Self {
        let (n, w) = (t.rows(), t.cols());
        let points = t.data().chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        Self {
            n,
            len: w / 2,
            points,
        }
    }

    pub fn num_tracks(&self) -> usize {
        self.n
    }

    pub fn track_len(&self) -> usize {
        self.len
    }

    pub fn get(&self, i: usize, t: usize) -> Point {
        self.points[i * self.len + t]
    }

    pub fn set(&mut self, i: usize, t: usize, p: Point) {
        self.points[i * self.len + t] = p;
    }

    pub fn track(&self, i: usize) -> &[Point] {
        &self.points[i * self.len..(i + 1) * self.len]
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// `[n, 2·len]` with each row `x0 y0 x1 y1 …`.
    pub fn to_tensor(&self) -> Tensor {
        let data = self.points.iter().flat_map(|p| p.iter().copied()).collect();
        Tensor::new(&[self.n, 2 * self.len], data).expect("non-empty tracks")
    }

    /// Tracks in the given order of indices.
    pub fn select(&self, order: &[usize]) -> Self {
        let points = order.iter().flat_map(|&i| self.track(i).iter().copied()).collect();
        Self {
            n: order.len(),
            len: self.len,
            points,
        }
    }

    /// Elementwise `self + other`.
    pub fn plus(&self, other: &Tracks) -> Self {
        let points = self
            .points
            .iter()
            .zip(&other.points)
            .map(|(a, b)| [a[0] + b[0], a[1] + b[1]])
            .collect();
        Self {
            n: self.n,
            len: self.len,
            points,
        }
    }

    /// Tracks `start..end` stacked in order.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            n: end - start,
            len: self.len,
            points: self.points[start * self.len..end * self.len].to_vec(),
        }
    }

    /// Stacks several groups of equal-length tracks.
    pub fn stack(parts: &[&Tracks]) -> Result<Self> {
        let len = parts.first().map(|t| t.len).unwrap_or(0);
        if parts.iter().any(|t| t.len != len) {
            return Err(Error::Mismatch("stacking tracks of unequal length".into()));
        }
        Ok(Self {
            n: parts.iter().map(|t| t.n).sum(),
            len,
            points: parts.iter().flat_map(|t| t.points.iter().copied()).collect(),
        })
    }
}

pub fn distance(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}
