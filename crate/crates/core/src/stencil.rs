//! Left-invariant finite differences along group lines.
//!
//! `X_j u(x)` is approximated with values at `x·(±h e_j)`. For first-layer
//! directions this right translation moves the first-layer coordinates onto
//! neighbouring nodes but shears the second layer by `±h a_jl(x)`, so those
//! values are read through per-axis cubic Lagrange interpolation.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, NodeSet, ScalarField};
use crate::group::GroupSpec;
use crate::par;

/// Sparse row: `(node, weight)` pairs, possibly with repeated nodes.
pub type Row = Vec<(usize, f64)>;

struct Scratch {
    x: Vec<f64>,
    y: Vec<f64>,
    shifted: Vec<f64>,
    row: Row,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch { x: vec![0.0; n], y: vec![0.0; n], shifted: vec![0.0; n], row: Vec::with_capacity(64) }
    }
}

fn check(g: &GroupSpec, grid: &GridSpec) -> Result<()> {
    if grid.ndim() != g.n() {
        return Err(Error::DimensionMismatch { expected: g.n(), got: grid.ndim() });
    }
    Ok(())
}

/// Appends `scale ×` the interpolation weights of `u(x·(s e_j))`, where `x`
/// is the node `node`. Returns `false` when the shifted point leaves the box.
fn push_shift(g: &GroupSpec, grid: &GridSpec, node: usize, j: usize, s: f64, scale: f64, sc: &mut Scratch) -> bool {
    grid.point_into(node, &mut sc.x);
    sc.y.iter_mut().for_each(|v| *v = 0.0);
    sc.y[j] = s;
    g.multiply_into(&sc.x, &sc.y, &mut sc.shifted);
    let start = sc.row.len();
    if !grid.interp_weights(&sc.shifted, &mut sc.row) {
        sc.row.truncate(start);
        return false;
    }
    for e in &mut sc.row[start..] {
        e.1 *= scale;
    }
    true
}

/// Row of the central difference for `X_j` at `node` (any `j < n`).
pub fn xj_row(g: &GroupSpec, grid: &GridSpec, node: usize, j: usize, out: &mut Row) -> bool {
    let mut sc = Scratch::new(g.n());
    let ok = xj_row_with(g, grid, node, j, &mut sc);
    out.clear();
    out.extend_from_slice(&sc.row);
    ok
}

fn xj_row_with(g: &GroupSpec, grid: &GridSpec, node: usize, j: usize, sc: &mut Scratch) -> bool {
    sc.row.clear();
    let h = grid.h(j);
    push_shift(g, grid, node, j, h, 0.5 / h, sc) && push_shift(g, grid, node, j, -h, -0.5 / h, sc)
}

/// Row of the three-point formula for `X_j²` at `node`.
pub fn xjj_row(g: &GroupSpec, grid: &GridSpec, node: usize, j: usize, out: &mut Row) -> bool {
    let mut sc = Scratch::new(g.n());
    let ok = xjj_row_with(g, grid, node, j, &mut sc);
    out.clear();
    out.extend_from_slice(&sc.row);
    ok
}

fn xjj_row_with(g: &GroupSpec, grid: &GridSpec, node: usize, j: usize, sc: &mut Scratch) -> bool {
    sc.row.clear();
    push_xjj(g, grid, node, j, sc)
}

fn push_xjj(g: &GroupSpec, grid: &GridSpec, node: usize, j: usize, sc: &mut Scratch) -> bool {
    let h = grid.h(j);
    let inv = 1.0 / (h * h);
    if !(push_shift(g, grid, node, j, h, inv, sc) && push_shift(g, grid, node, j, -h, inv, sc)) {
        return false;
    }
    sc.row.push((node, -2.0 * inv));
    true
}

fn laplacian_row_with(g: &GroupSpec, grid: &GridSpec, node: usize, sc: &mut Scratch) -> bool {
    sc.row.clear();
    for j in 0..g.m() {
        if !push_xjj(g, grid, node, j, sc) {
            return false;
        }
    }
    merge_row(&mut sc.row);
    true
}

/// Row of `Δ_H = Σ_{j<m} X_j²` at `node` with repeated nodes merged and
/// sorted by node index.
pub fn laplacian_row(g: &GroupSpec, grid: &GridSpec, node: usize, out: &mut Row) -> bool {
    let mut sc = Scratch::new(g.n());
    let ok = laplacian_row_with(g, grid, node, &mut sc);
    out.clear();
    out.extend_from_slice(&sc.row);
    ok
}

/// Sorts by node and sums duplicates, dropping exact zeros.
pub fn merge_row(row: &mut Row) {
    row.sort_unstable_by_key(|e| e.0);
    let mut w = 0;
    for r in 0..row.len() {
        if w > 0 && row[w - 1].0 == row[r].0 {
            row[w - 1].1 += row[r].1;
        } else {
            row[w] = row[r];
            w += 1;
        }
    }
    row.truncate(w);
    row.retain(|e| e.1 != 0.0);
}

/// Nodes at which the sub-Laplacian stencil stays inside the box.
pub fn laplacian_support(g: &GroupSpec, grid: &GridSpec) -> Result<NodeSet> {
    check(g, grid)?;
    let bits = par::map_indexed(grid.len(), || Scratch::new(g.n()), |sc, i| laplacian_row_with(g, grid, i, sc));
    Ok(NodeSet::from_bits(bits))
}

fn apply_rows<F>(g: &GroupSpec, u: &ScalarField, build: F) -> Result<ScalarField>
where
    F: Fn(usize, &mut Scratch) -> bool + Sync + Send,
{
    check(g, u.grid())?;
    let out = par::map_indexed(
        u.grid().len(),
        || Scratch::new(g.n()),
        |sc, i| {
            if !build(i, sc) {
                return None;
            }
            let mut acc = 0.0;
            for &(k, w) in &sc.row {
                if w != 0.0 {
                    if !u.is_valid(k) {
                        return None;
                    }
                    acc += w * u.get(k);
                }
            }
            Some(acc)
        },
    );
    let valid = NodeSet::from_fn(out.len(), |i| out[i].is_some());
    let values = out.into_iter().map(|v| v.unwrap_or(0.0)).collect();
    ScalarField::with_mask(u.grid().clone(), values, valid)
}

/// Central difference along the group flow of `X_j`, `j < n`. Nodes whose
/// stencil leaves the box or reads an invalid node are masked.
pub fn apply_xj(g: &GroupSpec, u: &ScalarField, j: usize) -> Result<ScalarField> {
    if j >= g.n() {
        return Err(Error::IndexOutOfRange(alloc::format!("derivative index {j} (n = {})", g.n())));
    }
    let grid = u.grid();
    apply_rows(g, u, |i, sc| xj_row_with(g, grid, i, j, sc))
}

/// `X_i X_j u` for first-layer `i, j`: three-point formula on the diagonal,
/// composition `X_i(X_j u)` otherwise.
pub fn apply_xixj(g: &GroupSpec, u: &ScalarField, i: usize, j: usize) -> Result<ScalarField> {
    if i >= g.m() || j >= g.m() {
        return Err(Error::IndexOutOfRange(alloc::format!("Hessian entry ({i}, {j}) (m = {})", g.m())));
    }
    let grid = u.grid();
    if i == j {
        apply_rows(g, u, |k, sc| xjj_row_with(g, grid, k, j, sc))
    } else {
        let xj = apply_xj(g, u, j)?;
        apply_xj(g, &xj, i)
    }
}

/// Discrete sub-Laplacian `Σ_{j<m} X_j² u`.
pub fn sub_laplacian(g: &GroupSpec, u: &ScalarField) -> Result<ScalarField> {
    let grid = u.grid();
    apply_rows(g, u, |k, sc| laplacian_row_with(g, grid, k, sc))
}

/// All horizontal derivatives of a field up to order two.
#[derive(Debug, Clone)]
pub struct Derivatives {
    /// `X_j u` for every `j < n` (second-layer fields are plain partials).
    pub first: Vec<ScalarField>,
    /// `X_i X_j u` stored at `i * m + j`.
    pub hessian: Vec<ScalarField>,
    pub laplacian: ScalarField,
    m: usize,
}

impl Derivatives {
    pub fn compute(g: &GroupSpec, u: &ScalarField) -> Result<Self> {
        let m = g.m();
        let first = (0..g.n()).map(|j| apply_xj(g, u, j)).collect::<Result<Vec<_>>>()?;
        let mut hessian = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                let h = if i == j { apply_xixj(g, u, i, i)? } else { apply_xj(g, &first[j], i)? };
                hessian.push(h);
            }
        }
        let mut laplacian = hessian[0].clone();
        for j in 1..m {
            laplacian = laplacian.zip_with(&hessian[j * m + j], |a, b| a + b)?;
        }
        Ok(Derivatives { first, hessian, laplacian, m })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn hessian_entry(&self, i: usize, j: usize) -> &ScalarField {
        &self.hessian[i * self.m + j]
    }

    /// Nodes where every Hessian entry is valid.
    pub fn hessian_valid(&self) -> NodeSet {
        let mut v = self.hessian[0].valid().clone();
        for h in &self.hessian[1..] {
            v = v.intersection(h.valid());
        }
        v
    }

    /// Frobenius norm of the discrete Hessian at a valid node.
    pub fn hessian_norm_at(&self, node: usize) -> f64 {
        crate::math::sqrt(self.hessian.iter().map(|h| h.get(node) * h.get(node)).sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h1_grid(n: usize) -> GridSpec {
        GridSpec::cube(3, -1.0, 1.0, n).unwrap()
    }

    #[test]
    fn x1_of_x3_is_minus_half_x2() {
        let g = GroupSpec::heisenberg1();
        let grid = h1_grid(8);
        let u = ScalarField::from_fn(&grid, |x| x[2]);
        let d = apply_xj(&g, &u, 0).unwrap();
        let mut count = 0;
        for i in d.valid().iter() {
            let x = grid.point(i);
            assert!((d.get(i) + 0.5 * x[1]).abs() < 1e-12);
            count += 1;
        }
        assert!(count > 0);
    }

    #[test]
    fn masked_nodes_are_exactly_those_leaving_box() {
        let g = GroupSpec::heisenberg1();
        let grid = h1_grid(6);
        let u = ScalarField::from_fn(&grid, |x| x[0]);
        let d = apply_xj(&g, &u, 0).unwrap();
        for i in 0..grid.len() {
            let x = grid.point(i);
            let h = grid.h(0);
            let plus = g.multiply(&x, &[h, 0.0, 0.0]);
            let minus = g.multiply(&x, &[-h, 0.0, 0.0]);
            assert_eq!(d.is_valid(i), grid.contains(&plus) && grid.contains(&minus));
        }
    }

    #[test]
    fn hessian_of_worked_polynomial() {
        // c12 = c21 = 1, c3 = 1: p = x1 x2 + x3.
        let g = GroupSpec::heisenberg1();
        let grid = h1_grid(8);
        let u = ScalarField::from_fn(&grid, |x| x[0] * x[1] + x[2]);
        let d = Derivatives::compute(&g, &u).unwrap();
        let valid = d.hessian_valid();
        assert!(valid.count() > 0);
        for k in valid.iter() {
            assert!((d.hessian_entry(0, 1).get(k) - 1.5).abs() < 1e-10);
            assert!((d.hessian_entry(1, 0).get(k) - 0.5).abs() < 1e-10);
            assert!(d.hessian_entry(0, 0).get(k).abs() < 1e-10);
        }
    }

    #[test]
    fn merged_laplacian_row_sums_to_zero() {
        let g = GroupSpec::heisenberg1();
        let grid = h1_grid(8);
        let mut row = Vec::new();
        let node = grid.index(&[4, 3, 5]);
        assert!(laplacian_row(&g, &grid, node, &mut row));
        let s: f64 = row.iter().map(|e| e.1).sum();
        assert!(s.abs() < 1e-9);
        assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
    }
}
