use carnot_core::fundamental::{c11_hypothesis_check, convolve_fundamental, FundamentalSolution};
use carnot_core::regularity::box_region;
use carnot_core::stencil::sub_laplacian;
use carnot_core::{GridSpec, GroupSpec, ScalarField};
use std::f64::consts::PI;

/// `∫ Γ Δ_H φ dx` for `φ = exp(−|π|² − t²)`, which must equal `−φ(0) = −1`.
///
/// For rotationally symmetric `φ(r, t)` on `H¹`,
/// `Δ_H φ = φ_rr + φ_r/r + (r²/4) φ_tt`. With `ρ = r²`, `τ = 4t` and polar
/// coordinates `(ρ, τ) = s (cos α, sin α)` the kernel singularity cancels
/// against the Jacobian, leaving
/// `(π C_Γ / 4) ∫_{−π/2}^{π/2} ∫_0^∞ Δ_H φ ds dα`.
fn weak_form(c_gamma: f64) -> f64 {
    let lap = |rho: f64, t: f64| {
        let phi = (-rho - t * t).exp();
        (4.0 * rho - 4.0 + rho * t * t - 0.5 * rho) * phi
    };
    let (na, ns, smax) = (800, 8000, 60.0);
    let (da, ds) = (PI / na as f64, smax / ns as f64);
    let mut acc = 0.0;
    for ia in 0..na {
        let a = -0.5 * PI + (ia as f64 + 0.5) * da;
        for is in 0..ns {
            let s = (is as f64 + 0.5) * ds;
            acc += lap(s * a.cos(), 0.25 * s * a.sin());
        }
    }
    0.25 * PI * c_gamma * acc * da * ds
}

#[test]
fn calibrated_constant_satisfies_the_weak_form() {
    let k = FundamentalSolution::new(&GroupSpec::heisenberg1()).unwrap();
    let w = weak_form(k.constant());
    assert!((w + 1.0).abs() < 1e-4, "{w}");
}

#[test]
fn kernel_is_homogeneous_of_degree_two_minus_q() {
    let g = GroupSpec::heisenberg1();
    let k = FundamentalSolution::new(&g).unwrap();
    let x = [0.3, -0.4, 0.2];
    for r in [0.25, 2.0, 7.0] {
        let y = g.dilate(r, &x).unwrap();
        assert!((k.eval(&y.0) * r * r - k.eval(&x)).abs() < 1e-12 * k.eval(&x));
    }
}

#[test]
fn far_cell_average_matches_point_value() {
    let k = FundamentalSolution::new(&GroupSpec::heisenberg1()).unwrap();
    let x = [0.0, 0.0, 0.0];
    let z = [0.6, -0.3, 0.1];
    let half = [1e-3, 1e-3, 1e-4];
    let rel = GroupSpec::heisenberg1().relative(&z, &x);
    let point = k.eval(&rel.0);
    assert!((k.cell_average_at(&x, &z, &half) - point).abs() < 1e-5 * point);
}

fn bump_error(n: usize) -> f64 {
    let g = GroupSpec::heisenberg1();
    let grid = GridSpec::with_intervals(&[(-1.0, 1.0), (-1.0, 1.0), (-0.25, 0.25)], &[n, n, n]).unwrap();
    let f = ScalarField::from_fn(&grid, |x| {
        let n4 = (x[0] * x[0] + x[1] * x[1]).powi(2) + 16.0 * x[2] * x[2];
        (1.0 - n4 / 0.0625).max(0.0).powi(3)
    });
    let targets = box_region(&grid, &[-0.6, -0.6, -0.15], &[0.6, 0.6, 0.15]);
    let v = convolve_fundamental(&g, &f, Some(&targets)).unwrap();
    let lap = sub_laplacian(&g, &v).unwrap();
    let inner = box_region(&grid, &[-0.5, -0.5, -0.1], &[0.5, 0.5, 0.1]);
    inner.iter().map(|i| (lap.get(i) + f.get(i)).abs()).fold(0.0, f64::max)
}

#[test]
fn convolution_inverts_the_sub_laplacian() {
    let (a, b) = (bump_error(16), bump_error(32));
    assert!(b < a, "{a} -> {b}");
    assert!(b < 0.1, "{b}");
}

#[test]
fn c11_check_reports_finite_bounds() {
    let g = GroupSpec::heisenberg1();
    let grid = GridSpec::with_intervals(&[(-1.0, 1.0), (-1.0, 1.0), (-0.25, 0.25)], &[16, 16, 16]).unwrap();
    let f = ScalarField::from_fn(&grid, |x| if x[0] > 0.0 && x[0] < 0.5 && x[1].abs() < 0.5 && x[2].abs() < 0.1 { 1.0 } else { 0.0 });
    let targets = box_region(&grid, &[-0.6, -0.6, -0.15], &[0.6, 0.6, 0.15]);
    let rep = c11_hypothesis_check(&g, &f, Some(&targets)).unwrap();
    assert!(rep.sup_d2.is_finite() && rep.sup_d2 > 0.0);
    assert!(rep.lip_sample.is_finite() && rep.lip_sample > 0.0);
}
