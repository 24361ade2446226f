//! Canopy tree souvlaki: a unimodular random graph assembled from "meatball"
//! pieces of a hyperbolic product graph glued along a d-ary skeleton.
//!
//! The crate builds the finite graphs `T'_n`, truncations of the infinite
//! spine, and balls of the local weak limit, and it checks finite-volume
//! versions of the properties the construction is known for:
//!
//! * [`topology`]: coordinates and neighbor oracle of a single meatball `M_k`.
//! * [`assembly`]: gadgets `M'_k`, the glued graph `T'_n`, spine truncations,
//!   limit balls and the global canonical-address oracle.
//! * [`census`]: exact volumes, ownership counts and root-level laws.
//! * [`flow`]: the explicit unit flow between consecutive junctions and its
//!   energy, both edge-by-edge and in closed form.
//! * [`electrical`]: effective resistances, junction contraction and
//!   spanning-subtree contrasts.
//! * [`walk`]: random-walk hitting experiments and exact harmonic solves.
//! * [`diagnostics`]: mass transport, local weak convergence and Gromov
//!   four-point hyperbolicity.
//! * [`cli`]: the `souvlaki` command line front end.

pub mod assembly;
pub mod census;
pub mod cli;
pub mod diagnostics;
pub mod electrical;
pub mod error;
pub mod flow;
pub mod graph;
pub mod linalg;
pub mod rational;
pub mod topology;
pub mod walk;

pub use error::{Error, Result};

/// Default vertex budget for materialized graphs.
pub const DEFAULT_BUDGET: u64 = 8_000_000;

/// Default branching of the skeleton tree.
pub const DEFAULT_D: u32 = 7;
