//! Sample generation from conditional belief functions.
//!
//! A Dempster-Shafer belief distribution factorized along a Bayesian network
//! is given as one conditional mass (or K) table per node. Each table is
//! turned into a K table, variable domains are extended with V-expressions,
//! and a proper conditional probability table over the extended domains is
//! built per node. Forward sampling over those tables followed by collapsing
//! every extended value to its `MY` subset yields subset-valued records.
//!
//! [`fusion`] computes the exact (possibly negative) joint mass by
//! unnormalized conjunctive combination, and [`verify`] computes the exact
//! distribution the sampler realizes and compares samples against it.

pub mod cpt;
pub mod error;
pub mod fixtures;
pub mod fusion;
pub mod graph;
pub mod report;
pub mod sampler;
pub mod tables;
pub mod verify;
pub mod vexpr;

pub use cpt::{build_network, check_feasibility, ExtCpt};
pub use error::{Error, Result};
pub use fusion::{network_joint, JointMass};
pub use graph::{parse_network, validate_network, validate_structure, Network};
pub use report::ValidationReport;
pub use sampler::{generate, SampleRecord, Sampler};
pub use tables::{
    k_to_m, m_to_k, CondKTable, CondMassTable, CondTable, Frame, ProductFocal, SubsetMask,
    TableKind,
};
pub use verify::{compare_empirical, exact_collapsed_joint, exact_extended_joint};
pub use vexpr::{VExpr, VnExpr};
