//! Per-segment sample storage shared by every profile-like type.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::network::Grid;

/// One value per grid sample, stored segment by segment in network order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Field {
    segments: Vec<Vec<f64>>,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Self { segments: grid.segments().iter().map(|g| vec![value; g.len()]).collect() }
    }

    pub fn from_segments(segments: Vec<Vec<f64>>) -> Self {
        Self { segments }
    }

    /// Samples `f(segment index, local abscissa)` on every grid point.
    pub fn from_fn(grid: &Grid, mut f: impl FnMut(usize, f64) -> f64) -> Self {
        let segments =
            grid.segments().iter().enumerate().map(|(i, g)| (0..g.len()).map(|k| f(i, g.local(k))).collect()).collect();
        Self { segments }
    }

    pub fn num_segments(&self) -> usize {
        self.segments.len()
    }

    pub fn segments(&self) -> &[Vec<f64>] {
        &self.segments
    }

    pub fn into_segments(self) -> Vec<Vec<f64>> {
        self.segments
    }

    /// True when the sample counts agree segment by segment with `grid`.
    pub fn matches(&self, grid: &Grid) -> bool {
        self.segments.len() == grid.len() && self.segments.iter().zip(grid.segments()).all(|(s, g)| s.len() == g.len())
    }

    pub fn same_shape(&self, other: &Field) -> bool {
        self.segments.len() == other.segments.len()
            && self.segments.iter().zip(&other.segments).all(|(a, b)| a.len() == b.len())
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments.iter().flat_map(|s| s.iter().copied())
    }

    pub fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field { segments: self.segments.iter().map(|s| s.iter().map(|&x| f(x)).collect()).collect() }
    }

    /// Sample-wise combination of two fields of identical shape.
    ///
    /// Panics if the shapes differ; callers check with [`Field::same_shape`].
    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert!(self.same_shape(other), "field shape mismatch");
        Field {
            segments: self
                .segments
                .iter()
                .zip(&other.segments)
                .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect())
                .collect(),
        }
    }

    /// `self += scale * other`, sample-wise.
    pub fn add_scaled(&mut self, scale: f64, other: &Field) {
        assert!(self.same_shape(other), "field shape mismatch");
        for (a, b) in self.segments.iter_mut().zip(&other.segments) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }
}

impl Index<usize> for Field {
    type Output = [f64];

    fn index(&self, segment: usize) -> &[f64] {
        &self.segments[segment]
    }
}

impl IndexMut<usize> for Field {
    fn index_mut(&mut self, segment: usize) -> &mut [f64] {
        &mut self.segments[segment]
    }
}
