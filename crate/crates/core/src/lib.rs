//! Numerical toolkit for step-2 stratified (Carnot) groups.
//!
//! The crate covers exact group arithmetic in graded coordinates, polynomials
//! of homogeneous degree two, left-invariant finite differences on box grids,
//! Dirichlet solves for the sub-Laplacian, a fixed-point solver for the
//! no-sign obstacle-type equation `Δ_H u = f χ_{u≠0}` and a set of
//! diagnostics (approximating polynomials, growth ratios, coincidence-set
//! measures, blow-up comparisons).
//!
//! Everything here is `no_std` + `alloc`. File formats, configuration and the
//! command line live in the companion `carnot-lab` crate.
#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

mod math;
mod par;

pub mod ball;
pub mod error;
pub mod fundamental;
pub mod grid;
pub mod group;
pub mod krylov;
pub mod obstacle;
pub mod poisson;
pub mod poly;
pub mod regularity;
pub mod stencil;

pub use ball::{ball_average, bmo_seminorm, gauge_ball_points, Ball};
pub use error::{Error, Result};
pub use grid::{GridSpec, NodeSet, ScalarField};
pub use group::{GroupPoint, GroupSpec};
pub use krylov::{CsrMatrix, KrylovSettings, KrylovStats};
pub use obstacle::{ObstacleInstance, ObstacleSettings, Seed, SolveResult};
pub use poly::{HessianMatrix, HomPoly2};
