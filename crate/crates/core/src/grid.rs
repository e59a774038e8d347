//! Uniform box grids, node sets and scalar fields.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// A uniform tensor-product grid on a box. Nodes are stored row-major with
/// the last axis varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    lo: Vec<f64>,
    hi: Vec<f64>,
    dims: Vec<usize>,
    h: Vec<f64>,
    strides: Vec<usize>,
}

impl GridSpec {
    /// `dims` are node counts per axis (at least 3 each).
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, dims: Vec<usize>) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != dims.len() || lo.is_empty() {
            return Err(Error::InvalidGrid(format!(
                "axis count mismatch: lo {}, hi {}, dims {}",
                lo.len(),
                hi.len(),
                dims.len()
            )));
        }
        for a in 0..lo.len() {
            if !(lo[a].is_finite() && hi[a].is_finite() && hi[a] > lo[a]) {
                return Err(Error::InvalidGrid(format!("empty interval on axis {a}: [{}, {}]", lo[a], hi[a])));
            }
            if dims[a] < 3 {
                return Err(Error::InvalidGrid(format!("axis {a} has {} nodes, need at least 3", dims[a])));
            }
        }
        let h = (0..lo.len()).map(|a| (hi[a] - lo[a]) / (dims[a] - 1) as f64).collect();
        let mut strides = vec![1; dims.len()];
        for a in (0..dims.len().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * dims[a + 1];
        }
        Ok(GridSpec { lo, hi, dims, h, strides })
    }

    /// Box `Π [lo_a, hi_a]` with `intervals[a]` cells per axis.
    pub fn with_intervals(bounds: &[(f64, f64)], intervals: &[usize]) -> Result<Self> {
        if bounds.len() != intervals.len() {
            return Err(Error::InvalidGrid("bounds and intervals differ in length".into()));
        }
        Self::new(
            bounds.iter().map(|b| b.0).collect(),
            bounds.iter().map(|b| b.1).collect(),
            intervals.iter().map(|k| k + 1).collect(),
        )
    }

    /// `[lo, hi]^n` with `intervals` cells on every axis.
    pub fn cube(n: usize, lo: f64, hi: f64, intervals: usize) -> Result<Self> {
        Self::new(vec![lo; n], vec![hi; n], vec![intervals + 1; n])
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn spacing(&self) -> &[f64] {
        &self.h
    }

    #[inline]
    pub fn h(&self, axis: usize) -> f64 {
        self.h[axis]
    }

    /// Largest spacing among the first `m` axes.
    pub fn max_spacing(&self, m: usize) -> f64 {
        self.h[..m.min(self.h.len())].iter().cloned().fold(0.0, f64::max)
    }

    /// Volume of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.h.iter().product()
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    #[inline]
    pub fn index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(k, s)| k * s).sum()
    }

    #[inline]
    pub fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for a in 0..self.dims.len() {
            out[a] = flat / self.strides[a];
            flat %= self.strides[a];
        }
    }

    #[inline]
    pub fn axis_index(&self, flat: usize, axis: usize) -> usize {
        (flat / self.strides[axis]) % self.dims[axis]
    }

    #[inline]
    pub fn coord(&self, axis: usize, k: usize) -> f64 {
        let n = (self.dims[axis] - 1) as f64;
        self.lo[axis] + (self.hi[axis] - self.lo[axis]) * (k as f64) / n
    }

    /// Coordinates of node `flat`.
    #[inline]
    pub fn point_into(&self, flat: usize, out: &mut [f64]) {
        for a in 0..self.dims.len() {
            out[a] = self.coord(a, (flat / self.strides[a]) % self.dims[a]);
        }
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.ndim()];
        self.point_into(flat, &mut p);
        p
    }

    /// Whether the node lies on the topological boundary of the box.
    pub fn is_boundary(&self, flat: usize) -> bool {
        (0..self.dims.len()).any(|a| {
            let k = self.axis_index(flat, a);
            k == 0 || k + 1 == self.dims[a]
        })
    }

    /// Nearest node to `point` (clamped into the box).
    pub fn nearest_node(&self, point: &[f64]) -> usize {
        let mut flat = 0;
        for a in 0..self.dims.len() {
            let t = (point[a] - self.lo[a]) / self.h[a];
            let k = math::round(t).clamp(0.0, (self.dims[a] - 1) as f64) as usize;
            flat += k * self.strides[a];
        }
        flat
    }

    /// Node index if `point` coincides with a node up to `rel_tol` of the spacing.
    pub fn node_at(&self, point: &[f64], rel_tol: f64) -> Option<usize> {
        let flat = self.nearest_node(point);
        let mut p = vec![0.0; self.ndim()];
        self.point_into(flat, &mut p);
        let close = (0..self.ndim()).all(|a| math::abs(p[a] - point[a]) <= rel_tol * self.h[a]);
        close.then_some(flat)
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        (0..self.dims.len()).all(|a| {
            let eps = 1e-12 * self.h[a];
            point[a] >= self.lo[a] - eps && point[a] <= self.hi[a] + eps
        })
    }

    /// 1-D Lagrange weights on `axis` for coordinate `x`. Uses the single
    /// node when `x` sits on it, otherwise a four-node window (clamped into
    /// the axis) giving cubic interpolation. Returns `None` outside the box.
    #[inline]
    pub fn axis_weights(&self, axis: usize, x: f64) -> Option<AxisWeights> {
        let n = self.dims[axis];
        let t = (x - self.lo[axis]) / self.h[axis];
        let last = (n - 1) as f64;
        if !(t >= -1e-9 && t <= last + 1e-9) {
            return None;
        }
        let t = t.clamp(0.0, last);
        let k = math::floor(t);
        let frac = t - k;
        if frac <= 1e-14 {
            return Some(AxisWeights::single(k as usize));
        }
        if frac >= 1.0 - 1e-14 {
            return Some(AxisWeights::single(k as usize + 1));
        }
        let w = n.min(4);
        let start = (k as isize - 1).clamp(0, (n - w) as isize) as usize;
        let mut weights = [0.0; 4];
        for (a, wa) in weights.iter_mut().enumerate().take(w) {
            let xa = (start + a) as f64;
            let mut v = 1.0;
            for b in 0..w {
                if b != a {
                    let xb = (start + b) as f64;
                    v *= (t - xb) / (xa - xb);
                }
            }
            *wa = v;
        }
        Some(AxisWeights { start, len: w, weights })
    }

    /// Tensor-product interpolation weights for an arbitrary point, appended
    /// to `out` as `(node, weight)`. Returns `false` if the point is outside.
    pub fn interp_weights(&self, point: &[f64], out: &mut Vec<(usize, f64)>) -> bool {
        let nd = self.ndim();
        let mut axes = [AxisWeights::single(0); 8];
        let mut heap;
        let axes: &mut [AxisWeights] = if nd <= 8 {
            &mut axes[..nd]
        } else {
            heap = vec![AxisWeights::single(0); nd];
            &mut heap[..]
        };
        for a in 0..nd {
            match self.axis_weights(a, point[a]) {
                Some(w) => axes[a] = w,
                None => return false,
            }
        }
        let base = out.len();
        out.push((0, 1.0));
        for (a, aw) in axes.iter().enumerate() {
            let stride = self.strides[a];
            let end = out.len();
            if aw.len == 1 {
                for e in &mut out[base..end] {
                    e.0 += aw.start * stride;
                }
                continue;
            }
            for idx in base..end {
                let (node, w) = out[idx];
                for k in 1..aw.len {
                    out.push((node + (aw.start + k) * stride, w * aw.weights[k]));
                }
                out[idx] = (node + aw.start * stride, w * aw.weights[0]);
            }
        }
        true
    }
}

/// Interpolation window along one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisWeights {
    pub start: usize,
    pub len: usize,
    pub weights: [f64; 4],
}

impl AxisWeights {
    pub fn single(k: usize) -> Self {
        AxisWeights { start: k, len: 1, weights: [1.0, 0.0, 0.0, 0.0] }
    }
}

/// A subset of grid nodes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NodeSet {
    bits: Vec<bool>,
}

impl NodeSet {
    pub fn empty(len: usize) -> Self {
        NodeSet { bits: vec![false; len] }
    }

    pub fn full(len: usize) -> Self {
        NodeSet { bits: vec![true; len] }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        NodeSet { bits }
    }

    pub fn from_indices(len: usize, idx: &[usize]) -> Self {
        let mut s = Self::empty(len);
        for &i in idx {
            s.bits[i] = true;
        }
        s
    }

    pub fn from_fn(len: usize, f: impl FnMut(usize) -> bool) -> Self {
        NodeSet { bits: (0..len).map(f).collect() }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.bits[i]
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        self.bits[i] = true;
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        self.bits[i] = false;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter_map(|(i, b)| b.then_some(i))
    }

    pub fn intersection(&self, other: &Self) -> Self {
        NodeSet { bits: self.bits.iter().zip(&other.bits).map(|(a, b)| *a && *b).collect() }
    }

    pub fn union(&self, other: &Self) -> Self {
        NodeSet { bits: self.bits.iter().zip(&other.bits).map(|(a, b)| *a || *b).collect() }
    }

    pub fn difference(&self, other: &Self) -> Self {
        NodeSet { bits: self.bits.iter().zip(&other.bits).map(|(a, b)| *a && !*b).collect() }
    }

    pub fn complement(&self) -> Self {
        NodeSet { bits: self.bits.iter().map(|b| !b).collect() }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| !*a || *b)
    }
}

/// Scalar samples on a grid. Nodes outside `valid` carry no meaningful
/// value (operators mark nodes whose stencil left the box).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
    valid: NodeSet,
}

impl ScalarField {
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("field value at node {i}")));
        }
        let valid = NodeSet::full(values.len());
        Ok(ScalarField { grid, values, valid })
    }

    /// Values with an explicit validity mask. Invalid entries may hold anything
    /// and are normalized to zero.
    pub fn with_mask(grid: GridSpec, mut values: Vec<f64>, valid: NodeSet) -> Result<Self> {
        if values.len() != grid.len() || valid.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        for (i, v) in values.iter_mut().enumerate() {
            if !valid.contains(i) {
                *v = 0.0;
            } else if !v.is_finite() {
                return Err(Error::NonFinite(format!("field value at node {i}")));
            }
        }
        Ok(ScalarField { grid, values, valid })
    }

    /// Samples `f` at every node. Nodes where `f` is not finite are masked.
    pub fn from_fn(grid: &GridSpec, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let mut p = vec![0.0; grid.ndim()];
        let mut values = (0..grid.len())
            .map(|i| {
                grid.point_into(i, &mut p);
                f(&p)
            })
            .collect::<Vec<_>>();
        let valid = NodeSet::from_fn(values.len(), |i| values[i].is_finite());
        for v in values.iter_mut().filter(|v| !v.is_finite()) {
            *v = 0.0;
        }
        ScalarField { grid: grid.clone(), values, valid }
    }

    pub fn constant(grid: &GridSpec, c: f64) -> Self {
        ScalarField { grid: grid.clone(), values: vec![c; grid.len()], valid: NodeSet::full(grid.len()) }
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn valid(&self) -> &NodeSet {
        &self.valid
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    #[inline]
    pub fn is_valid(&self, i: usize) -> bool {
        self.valid.contains(i)
    }

    pub fn is_fully_valid(&self) -> bool {
        self.valid.count() == self.values.len()
    }

    /// Nodes on the topological boundary of the box.
    pub fn boundary_mask(&self) -> NodeSet {
        NodeSet::from_fn(self.grid.len(), |i| self.grid.is_boundary(i))
    }

    pub fn same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Pointwise map over valid nodes.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        let values = self.values.iter().enumerate().map(|(i, v)| if self.valid.contains(i) { f(*v) } else { 0.0 }).collect();
        ScalarField { grid: self.grid.clone(), values, valid: self.valid.clone() }
    }

    /// Pointwise combination; valid where both inputs are valid.
    pub fn zip_with(&self, other: &ScalarField, mut f: impl FnMut(f64, f64) -> f64) -> Result<Self> {
        self.same_grid(other)?;
        let valid = self.valid.intersection(&other.valid);
        let values = (0..self.values.len())
            .map(|i| if valid.contains(i) { f(self.values[i], other.values[i]) } else { 0.0 })
            .collect();
        Ok(ScalarField { grid: self.grid.clone(), values, valid })
    }

    /// Maximum of `|u|` over valid nodes (zero if none).
    pub fn max_abs(&self) -> f64 {
        self.valid.iter().map(|i| math::abs(self.values[i])).fold(0.0, f64::max)
    }

    /// Maximum of `|u|` over valid nodes inside `region`.
    pub fn max_abs_on(&self, region: &NodeSet) -> f64 {
        region.iter().filter(|&i| self.valid.contains(i)).map(|i| math::abs(self.values[i])).fold(0.0, f64::max)
    }

    /// Interpolated value at an arbitrary point (cubic per axis). `None` if
    /// the point is outside the box or touches an invalid node.
    pub fn sample(&self, point: &[f64]) -> Option<f64> {
        let mut w = Vec::with_capacity(64);
        self.sample_with(point, &mut w)
    }

    pub(crate) fn sample_with(&self, point: &[f64], scratch: &mut Vec<(usize, f64)>) -> Option<f64> {
        scratch.clear();
        if !self.grid.interp_weights(point, scratch) {
            return None;
        }
        let mut acc = 0.0;
        for &(node, w) in scratch.iter() {
            if w != 0.0 {
                if !self.valid.contains(node) {
                    return None;
                }
                acc += w * self.values[node];
            }
        }
        Some(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(vec![0.0], vec![1.0], vec![2]).is_err());
        assert!(GridSpec::new(vec![1.0], vec![1.0], vec![5]).is_err());
        assert!(GridSpec::new(vec![0.0, 0.0], vec![1.0], vec![5, 5]).is_err());
        let g = GridSpec::cube(3, -1.0, 1.0, 4).unwrap();
        assert_eq!(g.dims(), &[5, 5, 5]);
        assert_eq!(g.h(0), 0.5);
        assert_eq!(g.len(), 125);
    }

    #[test]
    fn index_roundtrip_and_coords() {
        let g = GridSpec::new(vec![-1.0, 0.0, 2.0], vec![1.0, 3.0, 4.0], vec![5, 4, 3]).unwrap();
        let mut m = [0; 3];
        for flat in 0..g.len() {
            g.unravel(flat, &mut m);
            assert_eq!(g.index(&m), flat);
        }
        assert_eq!(g.point(g.index(&[2, 0, 1])), vec![0.0, 0.0, 3.0]);
        assert!(g.is_boundary(g.index(&[0, 1, 1])));
        assert!(!g.is_boundary(g.index(&[2, 1, 1])));
    }

    #[test]
    fn cubic_interpolation_reproduces_cubics() {
        let g = GridSpec::cube(3, -1.0, 1.0, 8).unwrap();
        let u = ScalarField::from_fn(&g, |x| x[0] * x[0] * x[0] - 2.0 * x[1] * x[2] + x[2] * x[2] + 0.5);
        for p in [[0.13, -0.77, 0.41], [-0.99, 0.999, -0.2], [1.0, 1.0, 1.0], [0.0, 0.25, -0.125]] {
            let exact = p[0] * p[0] * p[0] - 2.0 * p[1] * p[2] + p[2] * p[2] + 0.5;
            assert!((u.sample(&p).unwrap() - exact).abs() < 1e-12, "{p:?}");
        }
        assert!(u.sample(&[1.01, 0.0, 0.0]).is_none());
    }

    #[test]
    fn node_sets() {
        let a = NodeSet::from_indices(6, &[0, 2, 4]);
        let b = NodeSet::from_indices(6, &[2, 3]);
        assert_eq!(a.intersection(&b).iter().collect::<Vec<_>>(), vec![2]);
        assert_eq!(a.union(&b).count(), 4);
        assert_eq!(a.difference(&b).iter().collect::<Vec<_>>(), vec![0, 4]);
        assert!(a.intersection(&b).is_subset(&a));
    }

    #[test]
    fn non_finite_values_rejected() {
        let g = GridSpec::cube(1, 0.0, 1.0, 2).unwrap();
        assert!(ScalarField::from_values(g.clone(), vec![0.0, f64::NAN, 1.0]).is_err());
        assert!(ScalarField::from_values(g, vec![0.0, 1.0]).is_err());
    }
}
