//! Optimal partisan districting under aggregate and idiosyncratic
//! uncertainty.
//!
//! The designer splits a population of voter types into districts to
//! maximize the expected number of districts won. This crate solves the
//! discretized problem exactly as a linear program, evaluates closed-form
//! benchmark plans, checks the structure of optimal plans, and estimates the
//! uncertainty ratio `gamma` from precinct returns.

pub mod benchmarks;
pub mod error;
pub mod estimation;
pub mod lp;
pub mod model;
pub mod simplex;
pub mod taste;
pub mod verification;

pub use error::{Error, Result};
pub use model::{District, Plan, PlanDistrict, ProblemInstance};
pub use taste::{Taste, TasteShock};
