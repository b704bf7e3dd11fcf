//! Geometric realizations of a tree: where nodes sit, how long channels are
//! and how many repeater stations each channel needs.

pub mod covering;
mod layout;

pub use covering::{covering_table, CoveringSolution};
pub use layout::{growth_rate, layout, plan, repeater_count, write_layout_csv, DeploymentMode, DeploymentPlan, NodePosition};
