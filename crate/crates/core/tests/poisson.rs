use carnot_core::poisson::{box_domain, solve_dirichlet};
use carnot_core::{Error, GridSpec, GroupSpec, KrylovSettings, NodeSet, ScalarField};

fn tight() -> KrylovSettings {
    KrylovSettings { tol: 1e-12, ..Default::default() }
}

fn cube(n: usize) -> GridSpec {
    GridSpec::cube(3, -1.0, 1.0, n).unwrap()
}

fn max_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.zip_with(b, |x, y| x - y).unwrap().max_abs()
}

#[test]
fn recovers_degree_two_solutions() {
    let g = GroupSpec::heisenberg1();
    let grid = cube(16);
    let dom = box_domain(&g, &grid).unwrap();
    let cases: [(f64, fn(&[f64]) -> f64); 3] = [
        (1.0, |x| 0.5 * x[0] * x[0]),
        (0.0, |x| 0.5 * (x[0] * x[0] - x[1] * x[1]) + x[2]),
        (4.0, |x| x[0] * x[0] + x[1] * x[1] - 3.0 * x[2] + 0.25),
    ];
    for (fv, exact) in cases {
        let u = ScalarField::from_fn(&grid, exact);
        let sol = solve_dirichlet(&g, &ScalarField::constant(&grid, fv), &u, &dom, &tight()).unwrap();
        assert!(sol.stats.converged);
        assert!(max_diff(&sol.v, &u) < 1e-9, "{}", max_diff(&sol.v, &u));
    }
}

#[test]
fn solution_operator_is_linear() {
    let g = GroupSpec::heisenberg1();
    let grid = cube(12);
    let dom = box_domain(&g, &grid).unwrap();
    let f1 = ScalarField::from_fn(&grid, |x| (3.0 * x[0]).sin() + x[2]);
    let f2 = ScalarField::from_fn(&grid, |x| x[1] * x[1] - 0.5);
    let b1 = ScalarField::from_fn(&grid, |x| x[0] * x[1]);
    let b2 = ScalarField::from_fn(&grid, |x| (x[2] - x[0]).cos());
    let s = tight();
    let v1 = solve_dirichlet(&g, &f1, &b1, &dom, &s).unwrap().v;
    let v2 = solve_dirichlet(&g, &f2, &b2, &dom, &s).unwrap().v;
    let f = f1.zip_with(&f2, |a, b| 2.0 * a - b).unwrap();
    let b = b1.zip_with(&b2, |a, b| 2.0 * a - b).unwrap();
    let v = solve_dirichlet(&g, &f, &b, &dom, &s).unwrap().v;
    let combo = v1.zip_with(&v2, |a, b| 2.0 * a - b).unwrap();
    assert!(max_diff(&v, &combo) < 1e-9);
}

// u = x₁⁴ + sin x₃ has Δ_H u = 12x₁² − ¼|π(x)|² sin x₃.
fn manufactured_error(n: usize) -> f64 {
    let g = GroupSpec::heisenberg1();
    let grid = cube(n);
    let exact = ScalarField::from_fn(&grid, |x| x[0].powi(4) + x[2].sin());
    let f = ScalarField::from_fn(&grid, |x| 12.0 * x[0] * x[0] - 0.25 * (x[0] * x[0] + x[1] * x[1]) * x[2].sin());
    let dom = box_domain(&g, &grid).unwrap();
    let sol = solve_dirichlet(&g, &f, &exact, &dom, &tight()).unwrap();
    max_diff(&sol.v, &exact)
}

#[test]
fn converges_under_refinement() {
    let (a, b) = (manufactured_error(12), manufactured_error(24));
    assert!((a / b).log2() > 1.5, "{a:e} -> {b:e}");
}

#[test]
fn maximum_principle_holds_for_nonnegative_data() {
    let g = GroupSpec::heisenberg1();
    let grid = cube(12);
    let dom = box_domain(&g, &grid).unwrap();
    let f = ScalarField::from_fn(&grid, |x| 1.0 + x[0] * x[0]);
    let b = ScalarField::from_fn(&grid, |x| x[1]);
    let sol = solve_dirichlet(&g, &f, &b, &dom, &tight()).unwrap();
    let excess = sol.max_principle_excess.expect("f ≥ 0 on the domain");
    assert!(excess <= 1e-9, "{excess}");
}

#[test]
fn rejects_bad_domains() {
    let g = GroupSpec::heisenberg1();
    let grid = cube(10);
    let z = ScalarField::zeros(&grid);
    let mut with_boundary = box_domain(&g, &grid).unwrap();
    with_boundary.insert(0);
    assert!(matches!(solve_dirichlet(&g, &z, &z, &with_boundary, &tight()), Err(Error::InvalidDomainNode(0))));

    let a = grid.index(&[3, 3, 5]);
    let b = grid.index(&[7, 7, 5]);
    let two = NodeSet::from_indices(grid.len(), &[a, b]);
    assert!(matches!(solve_dirichlet(&g, &z, &z, &two, &tight()), Err(Error::DisconnectedDomain { components: 2 })));

    assert!(solve_dirichlet(&g, &z, &z, &NodeSet::empty(grid.len()), &tight()).is_err());
}

#[test]
fn reports_non_convergence() {
    let g = GroupSpec::heisenberg1();
    let grid = cube(12);
    let dom = box_domain(&g, &grid).unwrap();
    let f = ScalarField::from_fn(&grid, |x| (5.0 * x[0]).sin());
    let s = KrylovSettings { tol: 1e-14, max_iters: 2, ..Default::default() };
    assert!(matches!(solve_dirichlet(&g, &f, &ScalarField::zeros(&grid), &dom, &s), Err(Error::NotConverged { .. })));
}
