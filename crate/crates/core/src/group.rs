//! Step-2 stratified groups in graded exponential coordinates.
//!
//! Coordinates `0..m` span the first layer `V₁`, coordinates `m..n` the second
//! layer `V₂`. The group law is the truncated Baker–Campbell–Hausdorff product
//!
//! ```text
//! (x·y)_i = x_i + y_i                                  i < m
//! (x·y)_l = x_l + y_l + Σ_{i,j<m} γ_ij^l x_i y_j         l ≥ m
//! ```
//!
//! with `γ_ij^l = −γ_ji^l`, so that `[X_i, X_j] = Σ_l 2 γ_ij^l X_l`. All
//! indices in this API are zero-based.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Deref, DerefMut};

use crate::error::{Error, Result};
use crate::math;

/// Default coefficient of the second-layer term in the homogeneous norm.
pub const DEFAULT_GAUGE_C: f64 = 16.0;

/// A point in graded coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPoint(pub Vec<f64>);

impl GroupPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        GroupPoint(coords)
    }

    pub fn origin(n: usize) -> Self {
        GroupPoint(vec![0.0; n])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Deref for GroupPoint {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for GroupPoint {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for GroupPoint {
    fn from(v: Vec<f64>) -> Self {
        GroupPoint(v)
    }
}

impl From<&[f64]> for GroupPoint {
    fn from(v: &[f64]) -> Self {
        GroupPoint(v.to_vec())
    }
}

/// A step-2 stratified group: layer dimensions, structure constants and the
/// coefficient of the homogeneous norm.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    m: usize,
    n: usize,
    /// Dense `γ_ij^l`, laid out as `((i * m) + j) * (n - m) + (l - m)`.
    gamma: Vec<f64>,
    gauge_c: f64,
}

impl GroupSpec {
    /// Builds a group from a sparse list of structure constants `(i, j, l, γ_ij^l)`.
    ///
    /// Listing only one of `(i, j, l)` and `(j, i, l)` is enough; the partner
    /// is filled in by antisymmetry. Listing both with values that are not
    /// negatives of each other is an error, as is any diagonal entry.
    pub fn new(m: usize, n: usize, triplets: &[(usize, usize, usize, f64)], gauge_c: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidStructure("first layer must be nonempty".into()));
        }
        if n < m {
            return Err(Error::InvalidStructure(format!("n = {n} is smaller than m = {m}")));
        }
        if !(gauge_c > 0.0 && gauge_c.is_finite()) {
            return Err(Error::InvalidStructure(format!("gauge_c must be positive, got {gauge_c}")));
        }
        let k = n - m;
        let mut gamma = vec![0.0; m * m * k];
        let mut set = vec![false; m * m * k];
        for &(i, j, l, value) in triplets {
            if i >= m || j >= m || l < m || l >= n {
                return Err(Error::IndexOutOfRange(format!("structure constant ({i}, {j}, {l})")));
            }
            if !value.is_finite() {
                return Err(Error::InvalidStructure(format!("non-finite γ at ({i}, {j}, {l})")));
            }
            if i == j {
                if value != 0.0 {
                    return Err(Error::InvalidStructure(format!("diagonal γ at ({i}, {i}, {l}) must vanish")));
                }
                continue;
            }
            let a = (i * m + j) * k + (l - m);
            let b = (j * m + i) * k + (l - m);
            if set[a] && gamma[a] != value {
                return Err(Error::InvalidStructure(format!("γ({i}, {j}, {l}) given twice with different values")));
            }
            if set[b] && gamma[b] != -value {
                return Err(Error::InvalidStructure(format!("γ({i}, {j}, {l}) = {value} breaks antisymmetry")));
            }
            gamma[a] = value;
            gamma[b] = -value;
            set[a] = true;
            set[b] = true;
        }
        Ok(GroupSpec { m, n, gamma, gauge_c })
    }

    /// The Heisenberg group `H^k`: `m = 2k`, `n = 2k + 1`, `[X_{2i}, X_{2i+1}] = X_n`.
    pub fn heisenberg(k: usize) -> Self {
        let m = 2 * k;
        let triplets: Vec<_> = (0..k).map(|i| (2 * i, 2 * i + 1, m, 0.5)).collect();
        GroupSpec::new(m, m + 1, &triplets, DEFAULT_GAUGE_C).expect("Heisenberg constants are valid")
    }

    /// `H¹` with `γ_12^3 = 1/2`.
    pub fn heisenberg1() -> Self {
        Self::heisenberg(1)
    }

    /// `H²` with `γ_12^5 = γ_34^5 = 1/2`.
    pub fn heisenberg2() -> Self {
        Self::heisenberg(2)
    }

    /// Looks up a built-in preset by name.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "heisenberg1" => Ok(Self::heisenberg1()),
            "heisenberg2" => Ok(Self::heisenberg2()),
            other => Err(Error::UnknownName(format!("group preset `{other}`"))),
        }
    }

    pub fn with_gauge_c(mut self, gauge_c: f64) -> Result<Self> {
        if !(gauge_c > 0.0 && gauge_c.is_finite()) {
            return Err(Error::InvalidStructure(format!("gauge_c must be positive, got {gauge_c}")));
        }
        self.gauge_c = gauge_c;
        Ok(self)
    }

    /// Dimension of the first layer.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Topological dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layer2_dim(&self) -> usize {
        self.n - self.m
    }

    /// Homogeneity degree of coordinate `j`.
    pub fn degree(&self, j: usize) -> u32 {
        if j < self.m {
            1
        } else {
            2
        }
    }

    /// Homogeneous dimension `Q = m + 2 (n − m)`.
    pub fn homogeneous_dim(&self) -> usize {
        self.m + 2 * (self.n - self.m)
    }

    pub fn gauge_c(&self) -> f64 {
        self.gauge_c
    }

    /// `γ_ij^l` with `i, j < m` and `m ≤ l < n`. Out-of-range indices give zero.
    #[inline]
    pub fn gamma(&self, i: usize, j: usize, l: usize) -> f64 {
        if i >= self.m || j >= self.m || l < self.m || l >= self.n {
            return 0.0;
        }
        self.gamma[(i * self.m + j) * (self.n - self.m) + (l - self.m)]
    }

    /// Nonzero structure constants as `(i, j, l, γ)` with `i < j`.
    pub fn structure_triplets(&self) -> Vec<(usize, usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.m {
            for j in (i + 1)..self.m {
                for l in self.m..self.n {
                    let g = self.gamma(i, j, l);
                    if g != 0.0 {
                        out.push((i, j, l, g));
                    }
                }
            }
        }
        out
    }

    fn check_len(&self, x: &[f64]) {
        assert_eq!(x.len(), self.n, "point has {} coordinates, group has n = {}", x.len(), self.n);
    }

    /// `q_l(x, y) = Σ_{i,j<m} γ_ij^l x_i y_j`.
    #[inline]
    pub fn bracket_term(&self, l: usize, x: &[f64], y: &[f64]) -> f64 {
        let k = self.n - self.m;
        let mut acc = 0.0;
        for i in 0..self.m {
            if x[i] == 0.0 {
                continue;
            }
            let row = i * self.m;
            for j in 0..self.m {
                acc += self.gamma[(row + j) * k + (l - self.m)] * x[i] * y[j];
            }
        }
        acc
    }

    /// Writes `x·y` into `out`. All three slices have length `n`.
    #[inline]
    pub fn multiply_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        for i in 0..self.m {
            out[i] = x[i] + y[i];
        }
        for l in self.m..self.n {
            out[l] = x[l] + y[l] + self.bracket_term(l, x, y);
        }
    }

    /// Group product `x·y`.
    ///
    /// Panics if either point does not have `n` coordinates.
    pub fn multiply(&self, x: &[f64], y: &[f64]) -> GroupPoint {
        self.check_len(x);
        self.check_len(y);
        let mut out = vec![0.0; self.n];
        self.multiply_into(x, y, &mut out);
        GroupPoint(out)
    }

    /// `x⁻¹ = −x` in exponential coordinates.
    pub fn inverse(&self, x: &[f64]) -> GroupPoint {
        self.check_len(x);
        GroupPoint(x.iter().map(|v| -v).collect())
    }

    /// `x⁻¹·y`, written into `out`.
    #[inline]
    pub fn relative_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        for i in 0..self.m {
            out[i] = y[i] - x[i];
        }
        for l in self.m..self.n {
            out[l] = y[l] - x[l] - self.bracket_term(l, x, y);
        }
    }

    /// `x⁻¹·y`.
    pub fn relative(&self, x: &[f64], y: &[f64]) -> GroupPoint {
        self.check_len(x);
        self.check_len(y);
        let mut out = vec![0.0; self.n];
        self.relative_into(x, y, &mut out);
        GroupPoint(out)
    }

    /// Intrinsic dilation `(δ_r x)_j = r^{d_j} x_j`.
    pub fn dilate(&self, r: f64, x: &[f64]) -> Result<GroupPoint> {
        if !(r > 0.0) {
            return Err(Error::NonPositiveScale(r));
        }
        self.check_len(x);
        Ok(GroupPoint(self.dilate_unchecked(r, x)))
    }

    pub(crate) fn dilate_unchecked(&self, r: f64, x: &[f64]) -> Vec<f64> {
        let r2 = r * r;
        x.iter().enumerate().map(|(j, v)| if j < self.m { r * v } else { r2 * v }).collect()
    }

    /// Homogeneous norm `N(x) = (|π(x)|⁴ + c Σ_{l≥m} x_l²)^{1/4}`.
    #[inline]
    pub fn gauge_norm(&self, x: &[f64]) -> f64 {
        let mut h2 = 0.0;
        for v in &x[..self.m] {
            h2 += v * v;
        }
        let mut v2 = 0.0;
        for v in &x[self.m..self.n] {
            v2 += v * v;
        }
        math::sqrt(math::sqrt(h2 * h2 + self.gauge_c * v2))
    }

    /// Gauge distance `N(x⁻¹y)`.
    pub fn gauge_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut buf = [0.0; 16];
        if self.n <= buf.len() {
            self.relative_into(x, y, &mut buf[..self.n]);
            self.gauge_norm(&buf[..self.n])
        } else {
            let z = self.relative(x, y);
            self.gauge_norm(&z)
        }
    }

    /// Coefficient `a_jl(x) = Σ_i γ_ij^l x_i` of `∂_{x_l}` in `X_j`.
    pub fn vf_coeff(&self, j: usize, l: usize, x: &[f64]) -> Result<f64> {
        if j >= self.m {
            return Err(Error::IndexOutOfRange(format!("vector field index {j} (m = {})", self.m)));
        }
        if l < self.m || l >= self.n {
            return Err(Error::IndexOutOfRange(format!("second-layer index {l} (m = {}, n = {})", self.m, self.n)));
        }
        self.check_len(x);
        Ok(self.vf_coeff_unchecked(j, l, x))
    }

    #[inline]
    pub(crate) fn vf_coeff_unchecked(&self, j: usize, l: usize, x: &[f64]) -> f64 {
        (0..self.m).map(|i| self.gamma(i, j, l) * x[i]).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h1() -> GroupSpec {
        GroupSpec::heisenberg1()
    }

    #[test]
    fn heisenberg_product_closed_form() {
        let g = h1();
        let p = g.multiply(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]);
        assert_eq!(p.coords(), &[1.0, 1.0, 0.5]);
        // reversed order flips the bracket term
        let q = g.multiply(&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0]);
        assert_eq!(q.coords(), &[1.0, 1.0, -0.5]);
    }

    #[test]
    fn identity_and_inverse() {
        let g = h1();
        let x = [1.0, 2.0, 3.0];
        assert_eq!(g.multiply(&x, &[0.0; 3]).coords(), &x);
        assert_eq!(g.inverse(&x).coords(), &[-1.0, -2.0, -3.0]);
        assert_eq!(g.inverse(&[0.0; 3]).coords(), &[0.0; 3]);
        let e = g.multiply(&[1.0, 0.0, 0.0], &g.inverse(&[1.0, 0.0, 0.0]));
        assert_eq!(e.coords(), &[0.0; 3]);
        let e = g.multiply(&x, &g.inverse(&x));
        assert_eq!(e.coords(), &[0.0; 3]);
    }

    #[test]
    fn dilation_examples() {
        let g = h1();
        assert_eq!(g.dilate(2.0, &[1.0, 1.0, 1.0]).unwrap().coords(), &[2.0, 2.0, 4.0]);
        assert_eq!(g.dilate(1.0, &[0.3, -0.7, 2.5]).unwrap().coords(), &[0.3, -0.7, 2.5]);
        assert!(matches!(g.dilate(0.0, &[1.0, 1.0, 1.0]), Err(Error::NonPositiveScale(_))));
        assert!(g.dilate(-1.0, &[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn gauge_examples() {
        let g = h1();
        assert_eq!(g.gauge_norm(&[1.0, 0.0, 0.0]), 1.0);
        assert!((g.gauge_norm(&[0.0, 0.0, 1.0]) - 2.0).abs() < 1e-15);
        let x = [0.3, -0.4, 0.2];
        assert!((g.gauge_norm(&x) - g.gauge_norm(&g.inverse(&x))).abs() < 1e-15);
    }

    #[test]
    fn vector_field_coefficients() {
        let g = h1();
        assert_eq!(g.vf_coeff(0, 2, &[0.0, 1.0, 0.0]).unwrap(), -0.5);
        assert_eq!(g.vf_coeff(1, 2, &[1.0, 0.0, 0.0]).unwrap(), 0.5);
        assert!(g.vf_coeff(2, 2, &[0.0; 3]).is_err());
        assert!(g.vf_coeff(0, 1, &[0.0; 3]).is_err());
        assert!(g.vf_coeff(0, 3, &[0.0; 3]).is_err());
    }

    #[test]
    fn antisymmetry_is_filled_and_checked() {
        let g = GroupSpec::new(2, 3, &[(0, 1, 2, 0.5)], 16.0).unwrap();
        assert_eq!(g.gamma(1, 0, 2), -0.5);
        assert_eq!(g, GroupSpec::heisenberg1());
        assert!(GroupSpec::new(2, 3, &[(0, 1, 2, 0.5), (1, 0, 2, 0.5)], 16.0).is_err());
        assert!(GroupSpec::new(2, 3, &[(0, 1, 2, 0.5), (1, 0, 2, -0.5)], 16.0).is_ok());
        assert!(GroupSpec::new(2, 3, &[(0, 0, 2, 1.0)], 16.0).is_err());
        assert!(GroupSpec::new(2, 3, &[(0, 1, 1, 1.0)], 16.0).is_err());
        assert!(GroupSpec::new(2, 3, &[], 0.0).is_err());
    }

    #[test]
    fn presets_and_dimensions() {
        let g = GroupSpec::preset("heisenberg2").unwrap();
        assert_eq!((g.m(), g.n(), g.homogeneous_dim()), (4, 5, 6));
        assert_eq!(g.gamma(2, 3, 4), 0.5);
        assert_eq!(g.gamma(0, 2, 4), 0.0);
        assert_eq!(g.degree(3), 1);
        assert_eq!(g.degree(4), 2);
        assert!(GroupSpec::preset("engel").is_err());
        assert_eq!(GroupSpec::heisenberg1().homogeneous_dim(), 4);
    }
}
