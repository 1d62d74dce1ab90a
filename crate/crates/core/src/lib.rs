//! Accelerated Benders decomposition for binary/continuous MILPs with a
//! QUBO-compiled master problem.
//!
//! The pipeline is: build a model ([`bench`]), normalize it into the
//! `max iᵀz + cᵀy, Az + By ≤ b` shape ([`model`]), decompose it
//! ([`benders`]), optionally compile each master problem to a QUBO
//! ([`qubo`]) and hand it to a sampler ([`sampler`]).

pub mod lpcore;
pub mod model;
pub mod benders;
pub mod qubo;
pub mod sampler;
pub mod bench;
