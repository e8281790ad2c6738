//! One-group, time-dependent slab Monte Carlo with weight windows driven by a
//! hybrid low-order second-moment (LOSM) solve.
//!
//! The crate is `no_std` with `alloc`. Everything that touches files, threads
//! or the wall clock lives in the `slabww` companion crate; this crate reaches
//! those through the [`driver::Executor`] and [`driver::Clock`] traits.
//!
//! Module map:
//!
//! * [`model`]: mesh, materials, time grid and the validated [`ProblemSpec`].
//! * [`rng`]: counter-based random streams keyed per history.
//! * [`transport`]: the analog history kernel, census banks and combing.
//! * [`tally`]: track-length and time-layer estimators, batch statistics.
//! * [`losm`]: finite-volume backward Euler / Crank-Nicolson LOSM solver.
//! * [`smoothing`]: moving-average filter for Monte Carlo derived inputs.
//! * [`windows`]: window construction and splitting / roulette.
//! * [`reference`]: tabulated reference flux, growth law, relative error.
//! * [`driver`]: the two-phase timestep loop.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod driver;
mod error;
pub mod losm;
pub mod model;
pub mod reference;
pub mod rng;
pub mod smoothing;
pub mod tally;
pub mod transport;
mod tridiag;
pub mod windows;

pub use error::{Error, Result};
pub use model::{
    BoundaryKind, CellField, CrossSections, EdgeField, Material, Mesh1D, PopulationTarget, ProblemSpec, RunMode, Side,
    SourceSpec, TimeGrid, WindowParams,
};
pub use tridiag::solve_tridiagonal;
