//! Active-set solvers for `Δ_H u = f χ_{u≠0}` (no sign condition) and for the
//! classical obstacle problem `Δ_H u = f χ_{u>0}`, `u ≥ 0`.
//!
//! Both solvers work with a set of pinned nodes on which `u = 0` is imposed
//! and solve `Δ_H u = f` on the remaining equation nodes. The no-sign solver
//! pins `{|u| ≤ zero_tol}` of the previous iterate and stops once the set
//! repeats. The classical solver is a primal-dual active-set iteration on the
//! complementarity system `u ≥ 0`, `f − Δ_H u ≥ 0`, `u (f − Δ_H u) = 0`.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, NodeSet, ScalarField};
use crate::group::GroupSpec;
use crate::krylov::KrylovSettings;
use crate::math;
use crate::poisson;
use crate::stencil;

/// Coefficient in the default threshold `c·h²·max|f|`.
pub const DEFAULT_ZERO_TOL_FACTOR: f64 = 0.25;

/// `c·h²·max|f|` with `h` the largest first-layer spacing (`c·h²` if `f ≡ 0`).
pub fn default_zero_tol(g: &GroupSpec, f: &ScalarField) -> f64 {
    let h = f.grid().max_spacing(g.m());
    let fmax = f.max_abs();
    DEFAULT_ZERO_TOL_FACTOR * h * h * if fmax > 0.0 { fmax } else { 1.0 }
}

/// Problem data for both solvers.
#[derive(Debug, Clone)]
pub struct ObstacleInstance {
    pub g: GroupSpec,
    pub f: ScalarField,
    /// Dirichlet data, read on every node outside `domain`.
    pub boundary: ScalarField,
    /// Threshold defining the discrete zero set `{|u| ≤ zero_tol}`.
    pub zero_tol: f64,
    /// Equation nodes.
    pub domain: NodeSet,
}

impl ObstacleInstance {
    /// Validates the data; `zero_tol = None` selects [`default_zero_tol`].
    pub fn new(g: GroupSpec, f: ScalarField, boundary: ScalarField, zero_tol: Option<f64>) -> Result<Self> {
        f.same_grid(&boundary)?;
        if !f.is_fully_valid() || !boundary.is_fully_valid() {
            return Err(Error::Precondition("obstacle data must be defined on every node".into()));
        }
        let zero_tol = zero_tol.unwrap_or_else(|| default_zero_tol(&g, &f));
        if !(zero_tol > 0.0 && zero_tol.is_finite()) {
            return Err(Error::Precondition(alloc::format!("zero_tol must be positive, got {zero_tol}")));
        }
        let domain = poisson::box_domain(&g, f.grid())?;
        Ok(ObstacleInstance { g, f, boundary, zero_tol, domain })
    }

    pub fn grid(&self) -> &GridSpec {
        self.f.grid()
    }
}

/// Initial active set for the no-sign iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Seed {
    /// Every equation node active: the first iterate solves `Δ_H u = f`.
    #[default]
    AllActive,
    /// Start from the solution of the classical obstacle problem.
    Classical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleSettings {
    /// Cap on active-set updates (each one is a linear solve).
    pub max_iters: usize,
    pub krylov: KrylovSettings,
    pub seed: Seed,
}

impl Default for ObstacleSettings {
    fn default() -> Self {
        ObstacleSettings { max_iters: 100, krylov: KrylovSettings::default(), seed: Seed::AllActive }
    }
}

/// Outcome of an obstacle solve.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub u: ScalarField,
    /// `{|u| > zero_tol}` (`{u > zero_tol}` for the classical solver) on the
    /// equation nodes.
    pub active_mask: NodeSet,
    /// Number of linear solves performed.
    pub iterations: usize,
    /// `max |Δ_H u − f|` over free nodes together with `max |u|` over pinned nodes.
    pub residual: f64,
    /// `max |Δ_H u − f χ_{active}|` over all equation nodes.
    pub equation_residual: f64,
    pub converged: bool,
    /// Set when the iteration revisited an earlier active set.
    pub cycle: bool,
    /// Active set before the last update when the iteration did not settle.
    pub previous_mask: Option<NodeSet>,
    /// Residual after each linear solve.
    pub history: Vec<f64>,
    pub linear_iterations: usize,
}

struct Pinned {
    u: ScalarField,
    lap: ScalarField,
    residual: f64,
    krylov_iters: usize,
}

/// Solves `Δ_H u = f` on `free` with `u = 0` on `domain \ free`.
fn solve_pinned(inst: &ObstacleInstance, free: &NodeSet, guess: Option<&ScalarField>, s: &KrylovSettings) -> Result<Pinned> {
    let pinned = inst.domain.difference(free);
    let mut bvals = inst.boundary.values().to_vec();
    for i in pinned.iter() {
        bvals[i] = 0.0;
    }
    let bd = ScalarField::from_values(inst.grid().clone(), bvals)?;
    let (u, krylov_iters) = if free.count() == 0 {
        (bd, 0)
    } else {
        let sol = poisson::solve_unchecked(&inst.g, &inst.f, &bd, free, guess, s)?;
        (sol.v, sol.stats.iterations)
    };
    let lap = stencil::sub_laplacian(&inst.g, &u)?;
    let mut residual: f64 = 0.0;
    for i in inst.domain.iter() {
        let r = if free.contains(i) { math::abs(lap.get(i) - inst.f.get(i)) } else { math::abs(u.get(i)) };
        residual = residual.max(r);
    }
    Ok(Pinned { u, lap, residual, krylov_iters })
}

fn equation_residual(inst: &ObstacleInstance, lap: &ScalarField, active: &NodeSet) -> f64 {
    inst.domain
        .iter()
        .map(|i| {
            let rhs = if active.contains(i) { inst.f.get(i) } else { 0.0 };
            math::abs(lap.get(i) - rhs)
        })
        .fold(0.0, f64::max)
}

fn nonzero_set(inst: &ObstacleInstance, u: &ScalarField) -> NodeSet {
    NodeSet::from_fn(inst.grid().len(), |i| inst.domain.contains(i) && math::abs(u.get(i)) > inst.zero_tol)
}

/// No-sign problem `Δ_H u = f χ_{u≠0}`.
///
/// Each step pins `u = 0` on the zero set of the previous iterate and solves
/// `Δ_H u = f` elsewhere. Stops when the active set repeats the previous
/// one (converged), when it revisits an older one (cycle) or after
/// `max_iters` solves.
pub fn solve_no_sign(inst: &ObstacleInstance, settings: &ObstacleSettings) -> Result<SolveResult> {
    let mut history = Vec::new();
    let mut linear_iterations = 0;
    let mut iterations = 0;
    let (mut active, mut guess) = match settings.seed {
        Seed::AllActive => (inst.domain.clone(), None),
        Seed::Classical => {
            let c = solve_classical_obstacle(inst, settings)?;
            iterations += c.iterations;
            linear_iterations += c.linear_iterations;
            history.extend_from_slice(&c.history);
            (nonzero_set(inst, &c.u), Some(c.u))
        }
    };
    let mut seen: Vec<NodeSet> = alloc::vec![active.clone()];
    loop {
        let step = solve_pinned(inst, &active, guess.as_ref(), &settings.krylov)?;
        iterations += 1;
        linear_iterations += step.krylov_iters;
        history.push(step.residual);
        let next = nonzero_set(inst, &step.u);
        let settled = next == active;
        let cycle = !settled && seen.iter().any(|s| *s == next);
        if settled || cycle || iterations >= settings.max_iters {
            let equation_residual = equation_residual(inst, &step.lap, &next);
            return Ok(SolveResult {
                u: step.u,
                active_mask: next,
                iterations,
                residual: step.residual,
                equation_residual,
                converged: settled,
                cycle,
                previous_mask: if settled { None } else { Some(active) },
                history,
                linear_iterations,
            });
        }
        seen.push(next.clone());
        active = next;
        guess = Some(step.u);
    }
}

/// Classical obstacle problem `Δ_H u = f χ_{u>0}`, `u ≥ 0`, by a primal-dual
/// active-set iteration. Contact nodes carry `u = 0`; a contact node is
/// released when its multiplier `f − Δ_H u` turns negative and a free node
/// enters contact when `u` turns negative. The returned field is clamped to
/// `max(u, 0)`.
pub fn solve_classical_obstacle(inst: &ObstacleInstance, settings: &ObstacleSettings) -> Result<SolveResult> {
    let n = inst.grid().len();
    let fscale = inst.f.max_abs().max(1.0);
    let eps_lambda = 1e-9 * fscale;
    let eps_u = 1e-3 * inst.zero_tol;
    let mut contact = NodeSet::empty(n);
    let mut seen: Vec<NodeSet> = alloc::vec![contact.clone()];
    let mut guess: Option<ScalarField> = None;
    let mut history = Vec::new();
    let mut linear_iterations = 0;
    let mut iterations = 0;
    loop {
        let free = inst.domain.difference(&contact);
        let step = solve_pinned(inst, &free, guess.as_ref(), &settings.krylov)?;
        iterations += 1;
        linear_iterations += step.krylov_iters;
        history.push(step.residual);
        let next = NodeSet::from_fn(n, |i| {
            if !inst.domain.contains(i) {
                false
            } else if contact.contains(i) {
                inst.f.get(i) - step.lap.get(i) > eps_lambda
            } else {
                step.u.get(i) < -eps_u
            }
        });
        let settled = next == contact;
        let cycle = !settled && seen.iter().any(|s| *s == next);
        if settled || cycle || iterations >= settings.max_iters {
            let u = step.u.map(|v| v.max(0.0));
            let lap = stencil::sub_laplacian(&inst.g, &u)?;
            let active = NodeSet::from_fn(n, |i| inst.domain.contains(i) && u.get(i) > inst.zero_tol);
            let mut residual: f64 = 0.0;
            for i in inst.domain.iter() {
                let r = if contact.contains(i) { math::abs(u.get(i)) } else { math::abs(lap.get(i) - inst.f.get(i)) };
                residual = residual.max(r);
            }
            let equation_residual = equation_residual(inst, &lap, &active);
            return Ok(SolveResult {
                u,
                active_mask: active,
                iterations,
                residual,
                equation_residual,
                converged: settled,
                cycle,
                previous_mask: if settled { None } else { Some(contact) },
                history,
                linear_iterations,
            });
        }
        seen.push(next.clone());
        contact = next;
        guess = Some(step.u);
    }
}

/// A manufactured instance with its exact solution sampled on the grid.
#[derive(Debug, Clone)]
pub struct Manufactured {
    pub name: String,
    pub instance: ObstacleInstance,
    pub reference: ScalarField,
    /// Seed under which the no-sign solver selects the reference solution.
    pub seed: Seed,
    /// Whether the reference solves the classical (sign-constrained) problem.
    pub classical: bool,
}

/// Names accepted by [`manufactured_instance`].
pub const MANUFACTURED_NAMES: [&str; 3] = ["halfspace", "quadratic", "zero"];

/// Builds one of the manufactured instances:
///
/// * `"halfspace"`: `u* = ½ (x₁⁺)²`, `f ≡ 1`;
/// * `"quadratic"`: `u* = x₁²`, `f ≡ 2`;
/// * `"zero"`: `u* ≡ 0`, `f ≡ 1`, zero boundary data (classical problem).
///
/// Boundary data are `u*` itself.
pub fn manufactured_instance(name: &str, g: &GroupSpec, grid: &GridSpec) -> Result<Manufactured> {
    if grid.ndim() != g.n() {
        return Err(Error::DimensionMismatch { expected: g.n(), got: grid.ndim() });
    }
    let (fval, exact, seed, classical): (f64, fn(&[f64]) -> f64, Seed, bool) = match name {
        "halfspace" => (1.0, |x| 0.5 * x[0].max(0.0) * x[0].max(0.0), Seed::Classical, true),
        "quadratic" => (2.0, |x| x[0] * x[0], Seed::AllActive, false),
        "zero" => (1.0, |_| 0.0, Seed::Classical, true),
        other => return Err(Error::UnknownName(other.into())),
    };
    let reference = ScalarField::from_fn(grid, exact);
    let f = ScalarField::constant(grid, fval);
    let instance = ObstacleInstance::new(g.clone(), f, reference.clone(), None)?;
    Ok(Manufactured { name: name.into(), instance, reference, seed, classical })
}
