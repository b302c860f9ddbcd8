//! NB-IoT over bent-pipe GEO/LEO satellites: orbital geometry, link budgets,
//! NTN protocol adaptations (timing advance, timers, HARQ/RLC), RRC-idle cell
//! selection and a deterministic discrete-event simulator.

// Validation uses `!(x > 0.0)` on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod constants;
pub mod error;
pub mod geo;
pub mod geometry;
pub mod link_budget;
pub mod mobility;
pub mod orbit;
pub mod protocol;
pub mod report;
pub mod sim;
