//! Driven discrete-time quantum walks.
//!
//! Coherent walkers are injected at every step of a coined walk. Because the
//! walk is linear and the injection is a displacement, the state stays a
//! product of coherent states and is fully described by one complex
//! amplitude per mode; a step is `a_t = U (a_{t-1} + alpha_t)` with
//! `U = S C`.
//!
//! - [`lattice`]: topologies, mode indexing, amplitude states
//! - [`coin`]: coin matrices and their per-vertex assignment
//! - [`walk`]: shift/coin operators and the driven recursion
//! - [`spectrum`]: eigendecomposition, mismatch profiles, spectral gaps
//! - [`analytic`]: closed-form single-mode dynamics
//! - [`search`]: driven search for a marked vertex on a torus
//! - [`config`], [`output`] and [`cli`]: experiment files, result files and
//!   the command implementations behind the `ddtqw` binary

pub mod analytic;
pub mod cli;
pub mod coin;
pub mod config;
pub mod error;
pub mod lattice;
pub mod output;
pub mod par;
pub mod search;
pub mod sparse;
pub mod spectrum;
pub mod walk;

pub use analytic::{analytic_displacement_amplitude, analytic_mode_intensity, Displacement};
pub use coin::{Coin, CoinAssignment};
pub use error::{Error, Result};
pub use lattice::{
    intensity_by_vertex, mode_index, AmplitudeState, Boundary, Direction, Mode, Topology, C64,
};
pub use par::Execution;
pub use spectrum::{
    eigendecompose, eigendecompose_matrix, mismatch_profile, spectral_gap, to_eigenbasis,
    wrap_phase, EigenDecomposition, MismatchProfile,
};
pub use walk::{
    build_coin_operator, build_step_operator, compose_walk_operator, driven_step, evolve_step,
    run_driven_walk, run_driven_walk_with, InjectionSchedule, RunRecord, WalkOperator,
};
