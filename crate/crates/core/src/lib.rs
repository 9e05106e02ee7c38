//! Static analysis and load-strategy simulation for module federations.
//!
//! The pipeline: [`manifest::load_workspace`] reads a host manifest and its
//! remotes, [`shares::resolve_shares`] negotiates shared package versions,
//! [`graph::build_graph`] links modules across applications,
//! [`planner::plan`] turns the graph into fetch requests for a
//! [`planner::LoadStrategy`], and [`simulator::simulate`] replays a plan over
//! a fair-share network model. [`trace`] converts simulated timelines into
//! spans and [`interfaces`] type-checks consumers against exposed modules.

pub mod cli;
pub mod diag;
pub mod error;
pub mod graph;
pub mod interfaces;
mod json;
pub mod manifest;
pub mod planner;
pub mod semver;
pub mod shares;
pub mod simulator;
pub mod trace;

pub use diag::{Diagnostic, Severity};
pub use error::{Error, Result};
pub use json::parse_strict as parse_json_strict;
