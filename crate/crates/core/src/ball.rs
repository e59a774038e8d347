//! Discrete gauge balls, averages and mean oscillation.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::group::{GroupPoint, GroupSpec};
use crate::math;

/// Nodes `y` of `grid` with `N(center⁻¹ y) < r`, in increasing index order.
pub fn gauge_ball_points(g: &GroupSpec, center: &[f64], r: f64, grid: &GridSpec) -> Result<Vec<usize>> {
    if !(r > 0.0) {
        return Err(Error::NonPositiveScale(r));
    }
    if center.len() != g.n() || grid.ndim() != g.n() {
        return Err(Error::DimensionMismatch { expected: g.n(), got: center.len().min(grid.ndim()) });
    }
    let (lo_idx, hi_idx) = index_bbox(g, center, r, grid);
    let n = g.n();
    let mut out = Vec::new();
    if (0..n).any(|a| lo_idx[a] > hi_idx[a]) {
        return Ok(out);
    }
    let mut multi = lo_idx.clone();
    let mut y = vec![0.0; n];
    let mut rel = vec![0.0; n];
    loop {
        for a in 0..n {
            y[a] = grid.coord(a, multi[a]);
        }
        g.relative_into(center, &y, &mut rel);
        if g.gauge_norm(&rel) < r {
            out.push(grid.index(&multi));
        }
        // Odometer over the box of candidate indices, last axis fastest.
        let mut a = n;
        loop {
            if a == 0 {
                return Ok(out);
            }
            a -= 1;
            if multi[a] < hi_idx[a] {
                multi[a] += 1;
                break;
            }
            multi[a] = lo_idx[a];
        }
    }
}

/// Coordinate bounding box of the open gauge ball.
pub fn ball_bbox(g: &GroupSpec, center: &[f64], r: f64) -> (Vec<f64>, Vec<f64>) {
    let m = g.m();
    let mut lo = vec![0.0; g.n()];
    let mut hi = vec![0.0; g.n()];
    for a in 0..m {
        lo[a] = center[a] - r;
        hi[a] = center[a] + r;
    }
    // y_l = x_l + q_l(x, d) + z_l with |d| < r and |z_l| < r²/√c.
    let vert = r * r / math::sqrt(g.gauge_c());
    for l in m..g.n() {
        let mut shear = 0.0;
        for j in 0..m {
            let coeff: f64 = (0..m).map(|i| g.gamma(i, j, l) * center[i]).sum();
            shear += math::abs(coeff);
        }
        let w = vert + r * shear;
        lo[l] = center[l] - w;
        hi[l] = center[l] + w;
    }
    (lo, hi)
}

fn index_bbox(g: &GroupSpec, center: &[f64], r: f64, grid: &GridSpec) -> (Vec<usize>, Vec<usize>) {
    let (lo, hi) = ball_bbox(g, center, r);
    let n = g.n();
    let mut li = vec![0; n];
    let mut hi_i = vec![0; n];
    for a in 0..n {
        let last = (grid.dims()[a] - 1) as f64;
        let t0 = math::floor((lo[a] - grid.lo()[a]) / grid.h(a)).max(0.0);
        let t1 = (math::floor((hi[a] - grid.lo()[a]) / grid.h(a)) + 1.0).min(last);
        if t1 < 0.0 || t0 > last {
            li[a] = 1;
            hi_i[a] = 0;
        } else {
            li[a] = t0 as usize;
            hi_i[a] = t1 as usize;
        }
    }
    (li, hi_i)
}

/// A discrete gauge ball on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: GroupPoint,
    pub radius: f64,
    pub nodes: Vec<usize>,
}

impl Ball {
    /// Fails with [`Error::EmptyBall`] when no node falls inside.
    pub fn new(g: &GroupSpec, grid: &GridSpec, center: &[f64], r: f64) -> Result<Self> {
        let nodes = gauge_ball_points(g, center, r, grid)?;
        if nodes.is_empty() {
            return Err(Error::EmptyBall { center: center.to_vec(), radius: r });
        }
        Ok(Ball { center: GroupPoint(center.to_vec()), radius: r, nodes })
    }

    /// Whether the coordinate bounding box of the ball lies inside the grid box.
    pub fn fits_in_box(g: &GroupSpec, grid: &GridSpec, center: &[f64], r: f64) -> bool {
        let (lo, hi) = ball_bbox(g, center, r);
        grid.contains(&lo) && grid.contains(&hi)
    }

    /// Fails with [`Error::BallOutsideValidRegion`] when a node is masked in `u`.
    pub fn check_valid(&self, u: &ScalarField) -> Result<()> {
        if self.nodes.iter().all(|&i| u.is_valid(i)) {
            Ok(())
        } else {
            Err(Error::BallOutsideValidRegion { radius: self.radius })
        }
    }

    /// Mean of `u` over the ball's nodes.
    pub fn average(&self, u: &ScalarField) -> Result<f64> {
        self.check_valid(u)?;
        Ok(self.nodes.iter().map(|&i| u.get(i)).sum::<f64>() / self.nodes.len() as f64)
    }

    /// Mean of `|u − u_B|` over the ball's nodes.
    pub fn mean_oscillation(&self, u: &ScalarField) -> Result<f64> {
        let avg = self.average(u)?;
        Ok(self.nodes.iter().map(|&i| math::abs(u.get(i) - avg)).sum::<f64>() / self.nodes.len() as f64)
    }
}

/// Node-counting mean of `u` over the gauge ball `B_r(center)`.
pub fn ball_average(g: &GroupSpec, u: &ScalarField, center: &[f64], r: f64) -> Result<f64> {
    Ball::new(g, u.grid(), center, r)?.average(u)
}

/// `max ⨍_{B∩box} |u − u_B|` over every `(center, r)` pair of the family.
/// This is a lower bound for the BMO seminorm.
pub fn bmo_seminorm(g: &GroupSpec, u: &ScalarField, centers: &[GroupPoint], radii: &[f64]) -> Result<f64> {
    if centers.is_empty() || radii.is_empty() {
        return Err(Error::Empty("BMO ball family".into()));
    }
    let mut best: f64 = 0.0;
    for c in centers {
        for &r in radii {
            best = best.max(Ball::new(g, u.grid(), c, r)?.mean_oscillation(u)?);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_brute_force() {
        let g = GroupSpec::heisenberg1();
        let grid = GridSpec::cube(3, -1.0, 1.0, 4).unwrap();
        for (c, r) in [([0.0, 0.0, 0.0], 1.01), ([0.5, -0.5, 0.25], 0.8), ([1.0, 1.0, -1.0], 0.6)] {
            let got = gauge_ball_points(&g, &c, r, &grid).unwrap();
            let want: Vec<usize> = (0..grid.len()).filter(|&i| g.gauge_distance(&c, &grid.point(i)) < r).collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn tiny_ball_contains_only_center() {
        let g = GroupSpec::heisenberg1();
        let grid = GridSpec::cube(3, -1.0, 1.0, 8).unwrap();
        let c = grid.point(grid.index(&[3, 4, 5]));
        assert_eq!(gauge_ball_points(&g, &c, 1e-6, &grid).unwrap(), vec![grid.index(&[3, 4, 5])]);
        let off = [0.1, 0.1, 0.1];
        assert!(gauge_ball_points(&g, &off, 1e-6, &grid).unwrap().is_empty());
        assert!(matches!(Ball::new(&g, &grid, &off, 1e-6), Err(Error::EmptyBall { .. })));
    }

    #[test]
    fn constant_average_is_exact() {
        let g = GroupSpec::heisenberg1();
        let grid = GridSpec::cube(3, -1.0, 1.0, 8).unwrap();
        let one = ScalarField::constant(&grid, 1.0);
        assert_eq!(ball_average(&g, &one, &[0.2, 0.1, 0.0], 0.5).unwrap(), 1.0);
        let c = [GroupPoint(vec![0.0; 3])];
        assert_eq!(bmo_seminorm(&g, &one, &c, &[0.5, 0.25]).unwrap(), 0.0);
    }
}
