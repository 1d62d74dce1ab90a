//! Model builders for the two benchmark families: optimal transmission
//! switching on a DC network and worst-case verification of a ReLU dispatch
//! policy. Both produce a [`ModelSource`](crate::model::ModelSource) for
//! [`compile`](crate::model::compile).

mod nn;
mod ots;

pub use nn::{
    build_nn_verification, propagate_bounds, BoundSide, Interval, Layer, NeuralNetSpec, NnColumns, BOUND_LIMIT,
};
pub use ots::{big_m, build_ots, Bus, Generator, Line, NetworkCase, OtsColumns};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid case: {0}")]
    InvalidCase(String),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("no generator {0}")]
    UnknownGenerator(usize),
    #[error("pre-activation bound {bound:e} at layer {layer}, neuron {neuron}; tighten the input box")]
    BoundBlowup { layer: usize, neuron: usize, bound: f64 },
}

/// Bundled inputs. The networks use public test-system topologies with
/// synthetic costs and limits; the policy network has synthetic weights.
pub mod cases {
    use super::{NetworkCase, NeuralNetSpec};

    pub const CASE6: &str = include_str!("../../cases/case6.json");
    pub const CASE14: &str = include_str!("../../cases/case14.json");
    pub const NN9: &str = include_str!("../../cases/nn9.json");

    pub fn case6() -> NetworkCase {
        NetworkCase::from_json(CASE6).expect("bundled case parses")
    }

    pub fn case14() -> NetworkCase {
        NetworkCase::from_json(CASE14).expect("bundled case parses")
    }

    pub fn nn9() -> NeuralNetSpec {
        NeuralNetSpec::from_json(NN9).expect("bundled network parses")
    }
}
