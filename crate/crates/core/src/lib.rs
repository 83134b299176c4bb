//! Optimal transport with a boundary reservoir and the minimizing-movement
//! scheme it induces for reaction–diffusion–drift equations with Dirichlet data.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`] — uniform cell-centred mesh of an interval and boundary projections.
//! * [`model`] — drift, boundary data, reaction presets and the derived cost integrand `e`.
//! * [`transport`] — the transport problem with creation field, its entropic scaling
//!   solver, exact polish, a brute-force oracle, potentials and diagnostics.
//! * [`flow`] — JKO trajectories, barrier envelopes and τ-refinement studies.
//! * [`pde`] — implicit finite-difference reference solver and weak-form residuals.
//! * [`io`] — experiment configuration, orchestration and CSV reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod flow;
pub mod grid;
pub mod io;
pub mod model;
pub mod pde;
pub mod transport;

pub use error::{Error, Result};
pub use grid::{build_grid, Grid, ProjectionResult};
pub use model::{ModelSpec, ReactionSpec};
pub use transport::{Density, SolverOptions, TransportSolution};
