//! Cost-aware service provisioning for hybrid fog/cloud deployments.
//!
//! The crate models fog nodes, cloud servers and stateless services, prices
//! a placement with a queueing-based delay model, and searches for cheap
//! feasible placements with a hybrid binary PSO / chemical-reaction
//! optimizer. [`sim`] replays traffic traces through provisioning policies.

// NaN must fail validation, so range checks are written as negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cost;
pub mod delay;
pub mod matrix;
pub mod model;
pub mod optimizer;
pub mod scenario;
pub mod sim;
pub mod traffic;
