//! Statistical model checking of HyperPCTL* formulae on discrete-time Markov
//! chains, with an exact checker for small instances and a grid-world
//! benchmark generator.

pub mod cli;
pub mod engine;
pub mod gridworld;
pub mod logic;
pub mod model;
pub mod oracle;
pub mod stats;
