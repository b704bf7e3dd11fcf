//! Hierarchical entanglement routing on quantum tree networks.
//!
//! A quantum tree network (QTN) places end nodes on the leaves of a uniform
//! k-ary tree and routers on its internal nodes. Every pair of end nodes has a
//! unique routing path through its lowest common ancestor, and routers higher in
//! the tree hold exponentially more memories so that aggregated flows never
//! congest.
//!
//! The crate is split by concern:
//!
//! - [`topology`]: tree construction, labels, routing paths, memory allocation
//!   and router activation probabilities.
//! - [`deployment`]: geometric realizations (minimal disk covering and
//!   square-lattice embedding), growth rates, channel lengths, repeater counts.
//! - [`overhead`]: closed-form and layer-by-layer qubit budgets with error
//!   correction, nested codes and router-router encoding.
//! - [`simulator`]: a cycle-based discrete-event simulation of entanglement
//!   generation, expiry and FIFO request fulfillment.
//! - [`experiments`]: replicated sweeps with sequential CI stopping, batch
//!   studies, dynamic step responses and curve fitting.
//! - [`mesh`]: Monte Carlo intersection counting for straight-line routing in
//!   a continuous-plane mesh.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod deployment;
pub mod error;
pub mod experiments;
pub mod mesh;
pub mod overhead;
pub mod simulator;
pub mod topology;

pub use error::{Error, Result};
