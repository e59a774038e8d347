use carnot_core::obstacle::{default_zero_tol, manufactured_instance, solve_classical_obstacle, solve_no_sign};
use carnot_core::stencil::sub_laplacian;
use carnot_core::{GridSpec, GroupSpec, KrylovSettings, ObstacleInstance, ObstacleSettings, ScalarField, Seed};

fn cube(n: usize) -> GridSpec {
    GridSpec::cube(3, -1.0, 1.0, n).unwrap()
}

fn settings(seed: Seed, tol: f64) -> ObstacleSettings {
    ObstacleSettings { seed, krylov: KrylovSettings { tol, ..Default::default() }, ..Default::default() }
}

fn max_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.zip_with(b, |x, y| x - y).unwrap().max_abs()
}

#[test]
fn quadratic_instance_is_recovered() {
    let g = GroupSpec::heisenberg1();
    let m = manufactured_instance("quadratic", &g, &cube(16)).unwrap();
    let tol = 1e-8;
    let r = solve_no_sign(&m.instance, &settings(m.seed, tol)).unwrap();
    assert!(r.converged);
    assert!(max_diff(&r.u, &m.reference) <= 10.0 * tol);
}

#[test]
fn halfspace_instance_is_recovered() {
    let g = GroupSpec::heisenberg1();
    let m = manufactured_instance("halfspace", &g, &cube(16)).unwrap();
    let r = solve_no_sign(&m.instance, &settings(m.seed, 1e-10)).unwrap();
    assert!(r.converged && !r.cycle);
    assert!(max_diff(&r.u, &m.reference) < 1e-6);
    assert!(r.residual < 1e-6);
    // every node with x₁ > 2h is free, every node with x₁ < 0 is pinned
    let grid = r.u.grid();
    for i in m.instance.domain.iter() {
        let x1 = grid.point(i)[0];
        if x1 > 0.25 {
            assert!(r.active_mask.contains(i));
        } else if x1 < 0.0 {
            assert!(!r.active_mask.contains(i));
        }
    }
}

#[test]
fn all_active_seed_still_yields_a_solution() {
    let g = GroupSpec::heisenberg1();
    let m = manufactured_instance("halfspace", &g, &cube(12)).unwrap();
    let r = solve_no_sign(&m.instance, &settings(Seed::AllActive, 1e-10)).unwrap();
    assert!(r.converged);
    assert!(r.residual < 1e-6);
}

#[test]
fn classical_solution_is_complementary() {
    let g = GroupSpec::heisenberg1();
    let grid = cube(12);
    let f = ScalarField::from_fn(&grid, |x| 1.0 + 0.5 * x[1]);
    let b = ScalarField::from_fn(&grid, |x| 0.3 * (x[0] + x[2]).max(0.0));
    let inst = ObstacleInstance::new(g.clone(), f.clone(), b, None).unwrap();
    let r = solve_classical_obstacle(&inst, &settings(Seed::Classical, 1e-12)).unwrap();
    assert!(r.converged);
    assert!(r.residual < 1e-6, "{}", r.residual);
    let lap = sub_laplacian(&g, &r.u).unwrap();
    let mut contact = 0;
    for i in inst.domain.iter() {
        assert!(r.u.get(i) >= 0.0);
        if r.u.get(i) == 0.0 {
            contact += 1;
            let multiplier = f.get(i) - lap.get(i);
            assert!(multiplier > -1e-6, "{multiplier}");
        }
        if r.active_mask.contains(i) {
            assert!((f.get(i) - lap.get(i)).abs() < 1e-6);
        }
    }
    assert!(contact > 0);
}

#[test]
fn zero_instance_stays_zero() {
    let g = GroupSpec::heisenberg1();
    let m = manufactured_instance("zero", &g, &cube(10)).unwrap();
    for r in [solve_no_sign(&m.instance, &settings(m.seed, 1e-10)).unwrap(), solve_classical_obstacle(&m.instance, &settings(m.seed, 1e-10)).unwrap()] {
        assert!(r.u.max_abs() < 1e-9);
    }
}

#[test]
fn default_threshold_scales_with_h_squared() {
    let g = GroupSpec::heisenberg1();
    let a = default_zero_tol(&g, &ScalarField::constant(&cube(8), 2.0));
    let b = default_zero_tol(&g, &ScalarField::constant(&cube(16), 2.0));
    assert!((a / b - 4.0).abs() < 1e-12);
    assert!(default_zero_tol(&g, &ScalarField::zeros(&cube(8))) > 0.0);
}
