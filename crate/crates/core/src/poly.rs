//! Polynomials of homogeneous degree at most two and their horizontal
//! derivatives.
//!
//! A `HomPoly2` is
//!
//! ```text
//! p(x) = a0 + Σ_i b_i x_i + ½ Σ_{i,j<m} c_ij x_i x_j + Σ_{l≥m} c2_l x_l
//! ```
//!
//! For the degree-two part the horizontal Hessian is constant and equals
//! `X_i X_j p = c_ij + Σ_l γ_ij^l c2_l`; its symmetric part recovers `c`, its
//! antisymmetric part is the γ-contraction of `c2`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::group::GroupSpec;
use crate::math;

/// Relative tolerance used to decide whether an antisymmetric part is representable.
pub const DEFAULT_REPRESENTABILITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct HomPoly2 {
    pub a0: f64,
    pub b: Vec<f64>,
    /// Row-major symmetric `m × m`.
    pub c: Vec<f64>,
    pub c2: Vec<f64>,
}

impl HomPoly2 {
    pub fn new(g: &GroupSpec, a0: f64, b: Vec<f64>, c: Vec<f64>, c2: Vec<f64>) -> Result<Self> {
        let m = g.m();
        check_dim(b.len(), m)?;
        check_dim(c.len(), m * m)?;
        check_dim(c2.len(), g.layer2_dim())?;
        for i in 0..m {
            for j in (i + 1)..m {
                let (x, y) = (c[i * m + j], c[j * m + i]);
                if math::abs(x - y) > 1e-12 * (1.0 + math::abs(x).max(math::abs(y))) {
                    return Err(Error::AsymmetricQuadratic);
                }
            }
        }
        Ok(HomPoly2 { a0, b, c, c2 })
    }

    pub fn zero(g: &GroupSpec) -> Self {
        HomPoly2 { a0: 0.0, b: vec![0.0; g.m()], c: vec![0.0; g.m() * g.m()], c2: vec![0.0; g.layer2_dim()] }
    }

    /// Pure degree-two polynomial.
    pub fn quadratic(g: &GroupSpec, c: Vec<f64>, c2: Vec<f64>) -> Result<Self> {
        Self::new(g, 0.0, vec![0.0; g.m()], c, c2)
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    #[inline]
    pub fn c_at(&self, i: usize, j: usize) -> f64 {
        self.c[i * self.m() + j]
    }

    /// Only the degree-two part.
    pub fn quadratic_part(&self) -> Self {
        HomPoly2 { a0: 0.0, b: vec![0.0; self.b.len()], c: self.c.clone(), c2: self.c2.clone() }
    }

    pub fn evaluate(&self, g: &GroupSpec, x: &[f64]) -> Result<f64> {
        check_dim(x.len(), g.n())?;
        check_dim(self.b.len(), g.m())?;
        check_dim(self.c2.len(), g.layer2_dim())?;
        Ok(self.eval_unchecked(x))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let m = self.b.len();
        let mut acc = self.a0;
        for i in 0..m {
            acc += self.b[i] * x[i];
            let mut row = 0.0;
            for j in 0..m {
                row += self.c[i * m + j] * x[j];
            }
            acc += 0.5 * x[i] * row;
        }
        for (l, cl) in self.c2.iter().enumerate() {
            acc += cl * x[m + l];
        }
        acc
    }
}

fn check_dim(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        Err(Error::DimensionMismatch { expected, got })
    } else {
        Ok(())
    }
}

/// `m × m` matrix of second horizontal derivatives; entry `(i, j)` is `X_i X_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianMatrix {
    m: usize,
    entries: Vec<f64>,
}

impl HessianMatrix {
    pub fn zeros(m: usize) -> Self {
        HessianMatrix { m, entries: vec![0.0; m * m] }
    }

    pub fn from_rows(m: usize, entries: Vec<f64>) -> Result<Self> {
        check_dim(entries.len(), m * m)?;
        Ok(HessianMatrix { m, entries })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.m + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.m + j] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.m).map(|i| self.get(i, i)).sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        math::sqrt(self.entries.iter().map(|v| v * v).sum())
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.m);
        for i in 0..self.m {
            for j in 0..self.m {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn symmetric_part(&self) -> Self {
        let mut s = Self::zeros(self.m);
        for i in 0..self.m {
            for j in 0..self.m {
                s.set(i, j, 0.5 * (self.get(i, j) + self.get(j, i)));
            }
        }
        s
    }

    pub fn antisymmetric_part(&self) -> Self {
        let mut s = Self::zeros(self.m);
        for i in 0..self.m {
            for j in 0..self.m {
                s.set(i, j, 0.5 * (self.get(i, j) - self.get(j, i)));
            }
        }
        s
    }

    pub fn sub(&self, other: &Self) -> Self {
        HessianMatrix { m: self.m, entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect() }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries.iter().zip(&other.entries).map(|(a, b)| math::abs(a - b)).fold(0.0, f64::max)
    }
}

/// `X_i X_j p = c_ij + Σ_l γ_ij^l c2_l`, constant in `x`.
pub fn horizontal_hessian(g: &GroupSpec, p: &HomPoly2) -> HessianMatrix {
    let m = g.m();
    let mut h = HessianMatrix::zeros(m);
    for i in 0..m {
        for j in 0..m {
            let mut v = p.c_at(i, j);
            for (k, cl) in p.c2.iter().enumerate() {
                v += g.gamma(i, j, m + k) * cl;
            }
            h.set(i, j, v);
        }
    }
    h
}

/// `(X_j p)(x) = b_j + Σ_i c_ji x_i + Σ_l a_jl(x) c2_l`.
pub fn horizontal_gradient(g: &GroupSpec, p: &HomPoly2, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(x.len(), g.n())?;
    let m = g.m();
    Ok((0..m)
        .map(|j| {
            let mut v = p.b[j];
            for i in 0..m {
                v += p.c_at(j, i) * x[i];
            }
            for (k, cl) in p.c2.iter().enumerate() {
                v += g.vf_coeff_unchecked(j, m + k, x) * cl;
            }
            v
        })
        .collect())
}

/// Sub-Laplacian of a degree-two polynomial: the trace of its horizontal Hessian.
pub fn sub_laplacian(g: &GroupSpec, p: &HomPoly2) -> f64 {
    horizontal_hessian(g, p).trace()
}

/// Output of [`poly_from_hessian`]: the polynomial and the residual of the
/// antisymmetric-part fit (zero when the input is representable).
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub poly: HomPoly2,
    /// Frobenius norm of the unrepresented antisymmetric part.
    pub residual: f64,
    /// `residual` divided by `max(|P|, tiny)`.
    pub relative_residual: f64,
}

impl Reconstruction {
    pub fn is_representable(&self, rel_tol: f64) -> bool {
        self.relative_residual <= rel_tol
    }
}

/// Builds the degree-two polynomial whose horizontal Hessian is `hess`.
///
/// `c` is the symmetric part; `c2` is the minimum-norm least-squares solution
/// of `Σ_l γ_ij^l c2_l = ½ (P_ij − P_ji)` over `i < j`.
pub fn poly_from_hessian(g: &GroupSpec, hess: &HessianMatrix) -> Result<Reconstruction> {
    let m = g.m();
    check_dim(hess.m(), m)?;
    let k = g.layer2_dim();
    let sym = hess.symmetric_part();
    let anti = hess.antisymmetric_part();

    // rows: pairs i < j, columns: second-layer directions
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| ((i + 1)..m).map(move |j| (i, j))).collect();
    let rhs: Vec<f64> = pairs.iter().map(|&(i, j)| anti.get(i, j)).collect();
    let mut gtg = vec![0.0; k * k];
    let mut gtr = vec![0.0; k];
    for (row, &(i, j)) in pairs.iter().enumerate() {
        for a in 0..k {
            let ga = g.gamma(i, j, m + a);
            gtr[a] += ga * rhs[row];
            for b in 0..k {
                gtg[a * k + b] += ga * g.gamma(i, j, m + b);
            }
        }
    }
    let c2 = pseudo_inverse_apply(&gtg, k, &gtr);

    let mut residual2 = 0.0;
    for (row, &(i, j)) in pairs.iter().enumerate() {
        let fit: f64 = (0..k).map(|a| g.gamma(i, j, m + a) * c2[a]).sum();
        let d = fit - rhs[row];
        // each pair appears twice in the full antisymmetric matrix
        residual2 += 2.0 * d * d;
    }
    let residual = math::sqrt(residual2);
    let scale = hess.norm().max(f64::MIN_POSITIVE);
    let poly = HomPoly2 { a0: 0.0, b: vec![0.0; m], c: sym.entries, c2 };
    Ok(Reconstruction { poly, residual, relative_residual: residual / scale })
}

/// Like [`poly_from_hessian`] but rejects inputs whose antisymmetric part is
/// not representable within `rel_tol`.
pub fn poly_from_hessian_checked(g: &GroupSpec, hess: &HessianMatrix, rel_tol: f64) -> Result<HomPoly2> {
    let rec = poly_from_hessian(g, hess)?;
    if rec.is_representable(rel_tol) {
        Ok(rec.poly)
    } else {
        Err(Error::NotRepresentable { residual: rec.residual })
    }
}

/// Applies the Moore–Penrose pseudo-inverse of the symmetric PSD matrix `a`
/// (size `k`) to `v`, via a cyclic Jacobi eigendecomposition.
fn pseudo_inverse_apply(a: &[f64], k: usize, v: &[f64]) -> Vec<f64> {
    if k == 0 {
        return Vec::new();
    }
    let (evals, evecs) = symmetric_eigen(a, k);
    let max_ev = evals.iter().fold(0.0f64, |acc, e| acc.max(math::abs(*e)));
    let cutoff = max_ev * 1e-12 * k as f64;
    let mut out = vec![0.0; k];
    for (e, &lambda) in evals.iter().enumerate() {
        if math::abs(lambda) <= cutoff || lambda == 0.0 {
            continue;
        }
        let proj: f64 = (0..k).map(|r| evecs[r * k + e] * v[r]).sum();
        for r in 0..k {
            out[r] += evecs[r * k + e] * proj / lambda;
        }
    }
    out
}

/// Cyclic Jacobi eigenvalue iteration for a small symmetric matrix.
/// Returns eigenvalues and column eigenvectors (row-major `k × k`).
fn symmetric_eigen(a: &[f64], k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut m = a.to_vec();
    let mut v = vec![0.0; k * k];
    for i in 0..k {
        v[i * k + i] = 1.0;
    }
    for _sweep in 0..64 {
        let off: f64 = (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| m[i * k + j] * m[i * k + j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..k {
            for q in (p + 1)..k {
                let apq = m[p * k + q];
                if math::abs(apq) < 1e-300 {
                    continue;
                }
                let theta = (m[q * k + q] - m[p * k + p]) / (2.0 * apq);
                let sign = if theta < 0.0 { -1.0 } else { 1.0 };
                let t = sign / (math::abs(theta) + math::sqrt(theta * theta + 1.0));
                let c = 1.0 / math::sqrt(t * t + 1.0);
                let s = t * c;
                for r in 0..k {
                    let mrp = m[r * k + p];
                    let mrq = m[r * k + q];
                    m[r * k + p] = c * mrp - s * mrq;
                    m[r * k + q] = s * mrp + c * mrq;
                }
                for r in 0..k {
                    let mpr = m[p * k + r];
                    let mqr = m[q * k + r];
                    m[p * k + r] = c * mpr - s * mqr;
                    m[q * k + r] = s * mpr + c * mqr;
                }
                for r in 0..k {
                    let vrp = v[r * k + p];
                    let vrq = v[r * k + q];
                    v[r * k + p] = c * vrp - s * vrq;
                    v[r * k + q] = s * vrp + c * vrq;
                }
            }
        }
    }
    ((0..k).map(|i| m[i * k + i]).collect(), v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h1() -> GroupSpec {
        GroupSpec::heisenberg1()
    }

    fn sample_poly() -> HomPoly2 {
        // c12 = c21 = 1, c3 = 1
        HomPoly2::quadratic(&h1(), vec![0.0, 1.0, 1.0, 0.0], vec![1.0]).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let g = h1();
        assert_eq!(sample_poly().evaluate(&g, &[1.0, 1.0, 1.0]).unwrap(), 2.0);
        assert_eq!(HomPoly2::zero(&g).evaluate(&g, &[3.0, -1.0, 2.0]).unwrap(), 0.0);
        assert!(sample_poly().evaluate(&g, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn quadratic_part_is_two_homogeneous() {
        let g = h1();
        let p = HomPoly2::quadratic(&g, vec![0.7, -0.2, -0.2, 1.3], vec![0.9]).unwrap();
        let x = [0.4, -1.1, 0.6];
        for r in [0.5, 2.0, 3.7] {
            let dx = g.dilate(r, &x).unwrap();
            let lhs = p.evaluate(&g, &dx).unwrap();
            let rhs = r * r * p.evaluate(&g, &x).unwrap();
            assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn asymmetric_quadratic_rejected() {
        assert_eq!(HomPoly2::quadratic(&h1(), vec![0.0, 1.0, 0.0, 0.0], vec![0.0]), Err(Error::AsymmetricQuadratic));
    }

    #[test]
    fn hessian_of_sample() {
        let h = horizontal_hessian(&h1(), &sample_poly());
        assert_eq!(h.entries(), &[0.0, 1.5, 0.5, 0.0]);
        assert_eq!(h.symmetric_part().entries(), sample_poly().c.as_slice());
    }

    #[test]
    fn hessian_without_second_layer_is_c() {
        let g = h1();
        let p = HomPoly2::quadratic(&g, vec![2.0, -1.0, -1.0, 3.0], vec![0.0]).unwrap();
        assert_eq!(horizontal_hessian(&g, &p).entries(), p.c.as_slice());
    }

    #[test]
    fn worked_reconstruction() {
        let g = h1();
        let p = HessianMatrix::from_rows(2, vec![1.0, 2.0, -1.0, -1.0]).unwrap();
        let rec = poly_from_hessian(&g, &p).unwrap();
        assert_eq!(rec.poly.c, vec![1.0, 0.5, 0.5, -1.0]);
        assert!((rec.poly.c2[0] - 3.0).abs() < 1e-14);
        assert!(rec.residual < 1e-14);
        let back = horizontal_hessian(&g, &rec.poly);
        assert!(back.max_abs_diff(&p) < 1e-14);
        assert_eq!(sub_laplacian(&g, &rec.poly), 0.0);
    }

    #[test]
    fn reconstruction_trivial_cases() {
        let g = h1();
        let rec = poly_from_hessian(&g, &HessianMatrix::zeros(2)).unwrap();
        assert_eq!(rec.poly, HomPoly2::zero(&g));
        let sym = HessianMatrix::from_rows(2, vec![0.3, -0.8, -0.8, 1.1]).unwrap();
        let rec = poly_from_hessian(&g, &sym).unwrap();
        assert_eq!(rec.poly.c2, vec![0.0]);
        assert_eq!(rec.poly.c, sym.entries().to_vec());
    }

    #[test]
    fn unrepresentable_antisymmetric_part_reports_residual() {
        // abelian R^3 seen as m = 2, n = 3 with no brackets
        let g = GroupSpec::new(2, 3, &[], 16.0).unwrap();
        let p = HessianMatrix::from_rows(2, vec![0.0, 1.0, -1.0, 0.0]).unwrap();
        let rec = poly_from_hessian(&g, &p).unwrap();
        assert!((rec.residual - 2f64.sqrt()).abs() < 1e-14);
        assert!(matches!(poly_from_hessian_checked(&g, &p, 1e-10), Err(Error::NotRepresentable { .. })));
    }

    #[test]
    fn gradient_examples() {
        let g = h1();
        let p = HomPoly2::new(&g, 0.3, vec![1.0, -2.0], vec![0.5, 0.1, 0.1, 0.2], vec![0.7]).unwrap();
        assert_eq!(horizontal_gradient(&g, &p, &[0.0; 3]).unwrap(), vec![1.0, -2.0]);
        let x3 = HomPoly2::quadratic(&g, vec![0.0; 4], vec![1.0]).unwrap();
        assert_eq!(horizontal_gradient(&g, &x3, &[0.0, 1.0, 0.0]).unwrap()[0], -0.5);
    }
}
