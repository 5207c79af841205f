//! Number-conserving cellular automata with the von Neumann neighborhood.
//!
//! A local rule maps the `2d + 1` states a cell sees (itself plus its axis
//! neighbors) to the cell's next state; it is number-conserving when the
//! induced global map preserves the total state sum on every toroidal
//! configuration. This crate decides that property through a reconstruction
//! identity over the rule's monomer and dimer values, rebuilds full rule
//! tables from those few parameters, enumerates every conserving rule for
//! small dimensions and state sets, and cross-checks everything against
//! direct simulation oracles.
//!
//! Modules follow the pipeline:
//!
//! * [`lattice`] — direction algebra, torus geometry, neighborhood overlap.
//! * [`rules`] — state sets, neighborhood configurations, dense and
//!   parametric rules.
//! * [`conservation`] — prescreens, the reconstruction identity, the
//!   decision procedure, and dense/parametric conversion.
//! * [`enumeration`] — pruned search for all conserving rules, with
//!   classification labels.
//! * [`simulate`] — the global map and exhaustive, finite-support and
//!   sampled oracles.
//! * [`io`] — JSON file formats for rules, configurations, catalogs and
//!   verdicts.

pub mod conservation;
pub mod enumeration;
pub mod error;
pub mod io;
pub mod lattice;
pub mod rules;
pub mod simulate;

pub use error::{Error, Result};
