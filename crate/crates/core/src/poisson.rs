//! Dirichlet problems for the discrete sub-Laplacian.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, NodeSet, ScalarField};
use crate::group::GroupSpec;
use crate::krylov::{self, CsrMatrix, KrylovSettings, KrylovStats};
use crate::par;
use crate::stencil;

/// Result of a Dirichlet solve.
#[derive(Debug, Clone)]
pub struct DirichletSolution {
    /// Solution on the domain, boundary data elsewhere.
    pub v: ScalarField,
    pub stats: KrylovStats,
    /// When `f ≥ 0` on the domain: `max_domain v − max(referenced boundary data)`.
    /// Positive values are maximum-principle violations; they are reported,
    /// not treated as errors.
    pub max_principle_excess: Option<f64>,
}

/// Default equation nodes on a box: off the topological boundary and with
/// the whole stencil inside the box.
pub fn box_domain(g: &GroupSpec, grid: &GridSpec) -> Result<NodeSet> {
    let support = stencil::laplacian_support(g, grid)?;
    Ok(NodeSet::from_fn(grid.len(), |i| support.contains(i) && !grid.is_boundary(i)))
}

/// Solves `Δ_H v = f` on the nodes of `domain` with `v = boundary` on every
/// other node the stencil touches.
///
/// Only the equation rows are handed to the Krylov solver; the identity rows
/// of the boundary nodes are eliminated. The relative residual is still
/// measured against the right-hand side of the full system (`f` on the
/// domain, Dirichlet data elsewhere).
///
/// The domain must be connected under the stencil graph, and every domain
/// node must have its stencil inside the box.
pub fn solve_dirichlet(
    g: &GroupSpec,
    f: &ScalarField,
    boundary: &ScalarField,
    domain: &NodeSet,
    settings: &KrylovSettings,
) -> Result<DirichletSolution> {
    let system = assemble(g, f, boundary, domain)?;
    let comps = components(&system);
    if comps > 1 {
        return Err(Error::DisconnectedDomain { components: comps });
    }
    finish(system, f, boundary, None, settings)
}

/// Same as [`solve_dirichlet`] without the connectivity check and with an
/// optional warm start.
pub(crate) fn solve_unchecked(
    g: &GroupSpec,
    f: &ScalarField,
    boundary: &ScalarField,
    domain: &NodeSet,
    guess: Option<&ScalarField>,
    settings: &KrylovSettings,
) -> Result<DirichletSolution> {
    let system = assemble(g, f, boundary, domain)?;
    finish(system, f, boundary, guess, settings)
}

struct System {
    unknowns: Vec<usize>,
    matrix: CsrMatrix,
    rhs: Vec<f64>,
    referenced: NodeSet,
    full_rhs_norm: f64,
}

fn assemble(g: &GroupSpec, f: &ScalarField, boundary: &ScalarField, domain: &NodeSet) -> Result<System> {
    f.same_grid(boundary)?;
    let grid = f.grid();
    if grid.ndim() != g.n() {
        return Err(Error::DimensionMismatch { expected: g.n(), got: grid.ndim() });
    }
    if domain.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: domain.len() });
    }
    let unknowns: Vec<usize> = domain.iter().collect();
    if unknowns.is_empty() {
        return Err(Error::Empty("Dirichlet domain".into()));
    }
    let mut slot = vec![usize::MAX; grid.len()];
    for (k, &i) in unknowns.iter().enumerate() {
        slot[i] = k;
    }
    let rows = par::map_indexed(
        unknowns.len(),
        Vec::new,
        |row: &mut stencil::Row, k| -> Result<(Vec<(usize, f64)>, f64, Vec<usize>)> {
            let i = unknowns[k];
            if !stencil::laplacian_row(g, grid, i, row) {
                return Err(Error::InvalidDomainNode(i));
            }
            if !f.is_valid(i) {
                return Err(Error::InvalidDomainNode(i));
            }
            let mut entries = Vec::with_capacity(row.len());
            let mut rhs = f.get(i);
            let mut touched = Vec::new();
            for &(node, w) in row.iter() {
                if slot[node] != usize::MAX {
                    entries.push((slot[node], w));
                } else {
                    if !boundary.is_valid(node) {
                        return Err(Error::InvalidDomainNode(i));
                    }
                    rhs -= w * boundary.get(node);
                    touched.push(node);
                }
            }
            Ok((entries, rhs, touched))
        },
    );
    let mut mat_rows = Vec::with_capacity(unknowns.len());
    let mut rhs = Vec::with_capacity(unknowns.len());
    let mut referenced = NodeSet::empty(grid.len());
    for r in rows {
        let (entries, b, touched) = r?;
        mat_rows.push(entries);
        rhs.push(b);
        for t in touched {
            referenced.insert(t);
        }
    }
    // Norm of the right-hand side of the full system: equation rows carry f,
    // identity rows carry the Dirichlet data.
    let mut full = 0.0;
    for i in 0..grid.len() {
        let v = if slot[i] != usize::MAX {
            f.get(i)
        } else if boundary.is_valid(i) {
            boundary.get(i)
        } else {
            0.0
        };
        full += v * v;
    }
    Ok(System { unknowns, matrix: CsrMatrix::from_rows(mat_rows)?, rhs, referenced, full_rhs_norm: crate::math::sqrt(full) })
}

fn components(sys: &System) -> usize {
    let n = sys.unknowns.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut a: usize) -> usize {
        while p[a] != a {
            p[a] = p[p[a]];
            a = p[a];
        }
        a
    }
    for i in 0..n {
        for (j, _) in sys.matrix.row(i) {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a] = b;
            }
        }
    }
    (0..n).filter(|&i| find(&mut parent, i) == i).count()
}

fn finish(
    sys: System,
    f: &ScalarField,
    boundary: &ScalarField,
    guess: Option<&ScalarField>,
    settings: &KrylovSettings,
) -> Result<DirichletSolution> {
    let mut x: Vec<f64> = match guess {
        Some(gf) => sys.unknowns.iter().map(|&i| if gf.is_valid(i) { gf.get(i) } else { 0.0 }).collect(),
        None => vec![0.0; sys.unknowns.len()],
    };
    let stats = krylov::solve_relative_to(&sys.matrix, &sys.rhs, &mut x, settings, sys.full_rhs_norm)?;
    if !stats.converged {
        return Err(Error::NotConverged { iterations: stats.iterations, residual: stats.residual });
    }
    let grid = f.grid();
    let mut values = boundary.values().to_vec();
    let mut valid = boundary.valid().clone();
    for (k, &i) in sys.unknowns.iter().enumerate() {
        values[i] = x[k];
        valid.insert(i);
    }
    let nonneg = sys.unknowns.iter().all(|&i| f.get(i) >= 0.0);
    let max_principle_excess = if nonneg {
        let vmax = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let bmax = sys.referenced.iter().map(|i| boundary.get(i)).fold(f64::NEG_INFINITY, f64::max);
        Some(if bmax.is_finite() { vmax - bmax } else { vmax })
    } else {
        None
    };
    let v = ScalarField::with_mask(grid.clone(), values, valid)?;
    Ok(DirichletSolution { v, stats, max_principle_excess })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_quadratic_recovered() {
        let g = GroupSpec::heisenberg1();
        let grid = GridSpec::cube(3, -1.0, 1.0, 8).unwrap();
        let exact = ScalarField::from_fn(&grid, |x| 0.5 * (x[0] * x[0] - x[1] * x[1]));
        let f = ScalarField::zeros(&grid);
        let dom = box_domain(&g, &grid).unwrap();
        let s = KrylovSettings { tol: 1e-12, ..Default::default() };
        let sol = solve_dirichlet(&g, &f, &exact, &dom, &s).unwrap();
        let err = sol.v.zip_with(&exact, |a, b| a - b).unwrap().max_abs();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn disconnected_domain_rejected() {
        let g = GroupSpec::heisenberg1();
        let grid = GridSpec::cube(3, -1.0, 1.0, 8).unwrap();
        let a = grid.index(&[2, 2, 2]);
        let b = grid.index(&[6, 6, 6]);
        let dom = NodeSet::from_indices(grid.len(), &[a, b]);
        let z = ScalarField::zeros(&grid);
        let r = solve_dirichlet(&g, &z, &z, &dom, &KrylovSettings::default());
        assert!(matches!(r, Err(Error::DisconnectedDomain { components: 2 })));
    }

    #[test]
    fn boundary_node_in_domain_rejected() {
        let g = GroupSpec::heisenberg1();
        let grid = GridSpec::cube(3, -1.0, 1.0, 4).unwrap();
        let dom = NodeSet::from_indices(grid.len(), &[0]);
        let z = ScalarField::zeros(&grid);
        let r = solve_dirichlet(&g, &z, &z, &dom, &KrylovSettings::default());
        assert!(matches!(r, Err(Error::InvalidDomainNode(0))));
    }
}
