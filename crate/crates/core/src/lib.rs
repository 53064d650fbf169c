pub mod milp;
pub mod network;
pub mod risk;

pub mod cli;
mod linalg;
pub mod mld;
pub mod ops;
pub mod pareto;
pub mod service;
