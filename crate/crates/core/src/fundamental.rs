//! Fundamental solution of the sub-Laplacian on Heisenberg-type `H¹` and
//! convolution against it.
//!
//! On `H¹` with `γ₁₂³ = γ` and gauge coefficient `c = 4/γ²`, the kernel
//! `Γ = C_Γ N^{-2}` solves `Δ_H Γ = −δ₀`. The constant `C_Γ` is not taken
//! from the literature: it is fixed by requiring the flux of
//! `Σ_j (X_j Γ) X_j` out of a cube around the origin to equal `−1`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{NodeSet, ScalarField};
use crate::group::GroupSpec;
use crate::math;
use crate::par;
use crate::stencil::Derivatives;

const GL8_X: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL8_W: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// Calibrated fundamental solution on `H¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalSolution {
    g: GroupSpec,
    c_gamma: f64,
    flux: f64,
}

impl FundamentalSolution {
    /// Builds the kernel for a supported group. Only `H¹` (`m = 2`, `n = 3`)
    /// with gauge coefficient `4/γ₁₂³²` is supported.
    pub fn new(g: &GroupSpec) -> Result<Self> {
        if g.m() != 2 || g.n() != 3 {
            return Err(Error::UnsupportedGroup(alloc::format!("m = {}, n = {}; only H¹ has a built-in kernel", g.m(), g.n())));
        }
        let gamma = g.gamma(0, 1, 2);
        if gamma == 0.0 {
            return Err(Error::UnsupportedGroup("abelian structure".into()));
        }
        let expected = 4.0 / (gamma * gamma);
        if math::abs(g.gauge_c() - expected) > 1e-12 * expected {
            return Err(Error::UnsupportedGroup(alloc::format!(
                "gauge coefficient {} does not match 4/γ² = {expected}",
                g.gauge_c()
            )));
        }
        let flux = unit_flux(g, 1.0, 24);
        Ok(FundamentalSolution { g: g.clone(), c_gamma: -1.0 / flux, flux })
    }

    /// Normalizing constant `C_Γ`.
    pub fn constant(&self) -> f64 {
        self.c_gamma
    }

    /// Flux of the unnormalized field through the calibration cube.
    pub fn raw_flux(&self) -> f64 {
        self.flux
    }

    pub fn group(&self) -> &GroupSpec {
        &self.g
    }

    /// `Γ(x)`; infinite at the origin.
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        let n = self.g.gauge_norm(x);
        self.c_gamma / (n * n)
    }

    /// Horizontal gradient `(X_1 Γ, X_2 Γ)` at `x ≠ 0`.
    pub fn horizontal_gradient(&self, x: &[f64]) -> [f64; 2] {
        let raw = raw_horizontal_gradient(&self.g, x);
        [self.c_gamma * raw[0], self.c_gamma * raw[1]]
    }

    /// Mean of `Γ(y⁻¹x)` over the axis-aligned cell of half-widths `half`
    /// centred at `z`.
    ///
    /// The kernel is `C_Γ (ρ² + c t²)^{-1/2}` with `ρ = |π|²`, and along the
    /// vertical direction of the cell `t` is affine in `y₃`, so the vertical
    /// integral is done in closed form with `asinh`. The horizontal face is
    /// sampled with a 3×3 Gauss rule, split into quadrants when the cell
    /// contains `x`.
    pub fn cell_average_at(&self, x: &[f64], z: &[f64], half: &[f64]) -> f64 {
        let gx = [-math::sqrt(0.6), 0.0, math::sqrt(0.6)];
        let gw = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
        self.column_mean(x, z, half, &gx, &gw)
    }

    /// Same as [`Self::cell_average_at`] with the horizontal rule given by
    /// nodes `gx` on `[−1, 1]` and weights `gw` summing to one.
    fn column_mean(&self, x: &[f64], z: &[f64], half: &[f64], gx: &[f64], gw: &[f64]) -> f64 {
        let sc = math::sqrt(self.g.gauge_c());
        let own = (0..2).all(|k| math::abs(x[k] - z[k]) < half[k]);
        let (parts, scale) = if own { (4, 0.5) } else { (1, 1.0) };
        let mut y = [0.0, 0.0, z[2]];
        let mut rel = [0.0; 3];
        let mut acc = 0.0;
        for part in 0..parts {
            // Quadrant centres sit at ±half/2 when split.
            let off = if own {
                [((part & 1) as f64 - 0.5) * half[0], (((part >> 1) & 1) as f64 - 0.5) * half[1]]
            } else {
                [0.0, 0.0]
            };
            for (a, wa) in gx.iter().zip(gw) {
                for (b, wb) in gx.iter().zip(gw) {
                    y[0] = z[0] + off[0] + scale * half[0] * a;
                    y[1] = z[1] + off[1] + scale * half[1] * b;
                    self.g.relative_into(&y, x, &mut rel);
                    let rho = rel[0] * rel[0] + rel[1] * rel[1];
                    let (t0, t1) = (rel[2] - half[2], rel[2] + half[2]);
                    let col = if rho > 0.0 {
                        (math::asinh(sc * t1 / rho) - math::asinh(sc * t0 / rho)) / sc
                    } else {
                        // Only reachable for a sample on the axis through x outside the cell.
                        (math::log(math::abs(t1)) - math::log(math::abs(t0))) * if t1 > 0.0 { 1.0 } else { -1.0 } / sc
                    };
                    acc += wa * wb * col;
                }
            }
        }
        self.c_gamma * acc / (parts as f64 * 2.0 * half[2])
    }
}

fn raw_horizontal_gradient(g: &GroupSpec, x: &[f64]) -> [f64; 2] {
    let c = g.gauge_c();
    let rho = x[0] * x[0] + x[1] * x[1];
    let s = rho * rho + c * x[2] * x[2];
    let s32 = s * math::sqrt(s);
    let d = [-2.0 * rho * x[0] / s32, -2.0 * rho * x[1] / s32, -c * x[2] / s32];
    let mut out = [0.0; 2];
    for (j, o) in out.iter_mut().enumerate() {
        *o = d[j] + g.vf_coeff_unchecked(j, 2, x) * d[2];
    }
    out
}

/// Flux of `Σ_j (X_j N^{-2}) X_j` out of the cube `[−a, a]³`, by composite
/// 8-point Gauss–Legendre with `panels²` panels per face.
pub fn unit_flux(g: &GroupSpec, a: f64, panels: usize) -> f64 {
    let mut total = 0.0;
    let width = 2.0 * a / panels as f64;
    for axis in 0..3 {
        let (p, q) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [-1.0, 1.0] {
            let mut face = 0.0;
            for pi in 0..panels {
                for qi in 0..panels {
                    let p0 = -a + width * (pi as f64 + 0.5);
                    let q0 = -a + width * (qi as f64 + 0.5);
                    for (s, ws) in GL8_X.iter().zip(&GL8_W) {
                        for (t, wt) in GL8_X.iter().zip(&GL8_W) {
                            let mut x = [0.0; 3];
                            x[axis] = side * a;
                            x[p] = p0 + 0.5 * width * s;
                            x[q] = q0 + 0.5 * width * t;
                            let grad = raw_horizontal_gradient(g, &x);
                            let mut flux = 0.0;
                            for (j, gj) in grad.iter().enumerate() {
                                // Euclidean component of X_j normal to this face.
                                let xj_normal = if axis < 2 {
                                    if axis == j { 1.0 } else { 0.0 }
                                } else {
                                    g.vf_coeff_unchecked(j, 2, &x)
                                };
                                flux += gj * xj_normal;
                            }
                            face += side * flux * ws * wt * 0.25 * width * width;
                        }
                    }
                }
            }
            total += face;
        }
    }
    total
}

/// `(f*Γ)(x) = Σ_z Γ(z⁻¹x) f(z) |cell|` at every node of `targets`
/// (all nodes when `None`). Nodes outside `targets` are marked invalid.
/// Cells where the midpoint value misrepresents the kernel use
/// [`FundamentalSolution::cell_average_at`] instead.
pub fn convolve_fundamental(g: &GroupSpec, f: &ScalarField, targets: Option<&NodeSet>) -> Result<ScalarField> {
    let kernel = FundamentalSolution::new(g)?;
    let grid = f.grid();
    if grid.ndim() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: grid.ndim() });
    }
    let support: Vec<(usize, [f64; 3], f64)> = f
        .valid()
        .iter()
        .filter(|&i| f.get(i) != 0.0)
        .map(|i| {
            let p = grid.point(i);
            (i, [p[0], p[1], p[2]], f.get(i))
        })
        .collect();
    let vol = grid.cell_volume();
    let half = [0.5 * grid.h(0), 0.5 * grid.h(1), 0.5 * grid.h(2)];
    let out = par::map_indexed(
        grid.len(),
        || vec![0.0; 3],
        |x, i| {
            if let Some(t) = targets {
                if !t.contains(i) {
                    return None;
                }
            }
            grid.point_into(i, x);
            let t_half = vertical_extent(g, x, &half);
            let mut acc = 0.0;
            let mut rel = [0.0; 3];
            for (_, z, fz) in &support {
                g.relative_into(z, x, &mut rel);
                let rho = rel[0] * rel[0] + rel[1] * rel[1];
                acc += fz * match near_field(g, &rel, rho, t_half, &half) {
                    Near::Far => kernel.c_gamma / math::sqrt(rho * rho + g.gauge_c() * rel[2] * rel[2]),
                    Near::Thin => kernel.column_mean(x, z, &half, &[0.0], &[1.0]),
                    Near::Close => kernel.cell_average_at(x, z, &half),
                };
            }
            Some(acc * vol)
        },
    );
    let valid = NodeSet::from_fn(out.len(), |i| out[i].is_some());
    let values = out.into_iter().map(|v| v.unwrap_or(0.0)).collect();
    ScalarField::with_mask(grid.clone(), values, valid)
}

/// Half-extent in `t` of a cell seen from `x`, including the shear.
fn vertical_extent(g: &GroupSpec, x: &[f64], half: &[f64]) -> f64 {
    let gamma = g.gamma(0, 1, 2);
    half[2] + math::abs(gamma) * (math::abs(x[1]) * half[0] + math::abs(x[0]) * half[1])
}

enum Near {
    Far,
    Thin,
    Close,
}

/// The kernel varies in `t` on the scale `ρ/√c` and in `π` on the scale
/// `|π|`. Midpoint sampling is kept where both are large against the cell,
/// a single column with exact `t` integration where only the first is small.
fn near_field(g: &GroupSpec, rel: &[f64; 3], rho: f64, t_half: f64, half: &[f64]) -> Near {
    const REACH: f64 = 8.0;
    const CLOSE: f64 = 3.0;
    if math::abs(rel[2]) >= REACH * t_half {
        return Near::Far;
    }
    let hmax = 2.0 * half[0].max(half[1]);
    if rho < CLOSE * CLOSE * hmax * hmax {
        Near::Close
    } else if rho / math::sqrt(g.gauge_c()) < REACH * t_half {
        Near::Thin
    } else {
        Near::Far
    }
}

/// Discrete `C^{1,1}` indicators of `f*Γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct C11Report {
    /// Largest Frobenius norm of the discrete horizontal Hessian.
    pub sup_d2: f64,
    /// Largest sampled quotient `|∇_h v(x) − ∇_h v(y)| / N(x⁻¹y)` over
    /// neighbouring node pairs.
    pub lip_sample: f64,
}

/// Computes `v = f*Γ` on `targets` and reports Hessian and Lipschitz bounds
/// over the nodes where the stencils are valid.
pub fn c11_hypothesis_check(g: &GroupSpec, f: &ScalarField, targets: Option<&NodeSet>) -> Result<C11Report> {
    let v = convolve_fundamental(g, f, targets)?;
    let d = Derivatives::compute(g, &v)?;
    let valid = d.hessian_valid();
    if valid.count() == 0 {
        return Err(Error::Empty("no node with a valid Hessian stencil".into()));
    }
    let sup_d2 = valid.iter().map(|i| d.hessian_norm_at(i)).fold(0.0, f64::max);
    let grid = v.grid();
    let grad_ok = d.first[0].valid().intersection(d.first[1].valid());
    let mut lip: f64 = 0.0;
    for i in grad_ok.iter() {
        for axis in 0..grid.ndim() {
            let k = grid.axis_index(i, axis);
            if k + 1 >= grid.dims()[axis] {
                continue;
            }
            let j = i + grid.stride(axis);
            if !grad_ok.contains(j) {
                continue;
            }
            let dist = g.gauge_distance(&grid.point(i), &grid.point(j));
            let dx = d.first[0].get(i) - d.first[0].get(j);
            let dy = d.first[1].get(i) - d.first[1].get(j);
            lip = lip.max(math::sqrt(dx * dx + dy * dy) / dist);
        }
    }
    Ok(C11Report { sup_d2, lip_sample: lip })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flux_is_independent_of_cube_size() {
        let g = GroupSpec::heisenberg1();
        let a = unit_flux(&g, 1.0, 16);
        let b = unit_flux(&g, 0.5, 16);
        assert!((a - b).abs() < 1e-8 * a.abs(), "{a} {b}");
        assert!(a < 0.0);
    }

    #[test]
    fn kernel_is_harmonic_off_origin() {
        // Second differences of the analytic kernel along the group flow.
        let g = GroupSpec::heisenberg1();
        let k = FundamentalSolution::new(&g).unwrap();
        let x = [0.3, -0.2, 0.15];
        let h = 1e-3;
        let mut lap = 0.0;
        for j in 0..2 {
            let mut e = [0.0; 3];
            e[j] = h;
            let p = g.multiply(&x, &e);
            e[j] = -h;
            let m = g.multiply(&x, &e);
            lap += (k.eval(&p) - 2.0 * k.eval(&x) + k.eval(&m)) / (h * h);
        }
        assert!(lap.abs() < 1e-4 * k.eval(&x).abs(), "{lap}");
    }

    #[test]
    fn unsupported_groups_rejected() {
        assert!(FundamentalSolution::new(&GroupSpec::heisenberg2()).is_err());
        let g = GroupSpec::heisenberg1().with_gauge_c(1.0).unwrap();
        assert!(FundamentalSolution::new(&g).is_err());
    }
}
