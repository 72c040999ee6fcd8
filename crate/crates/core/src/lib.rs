//! Skeletal enumeration of hybrid quantum-classical programs and
//! statevector-based differential testing of circuit optimizers.

pub mod circuit;
pub mod corpus;
pub mod difftest;
pub mod enumeration;
pub mod gate;
pub mod lang;
pub mod optimizer;
pub mod rng;
pub mod seedgen;
pub mod simulator;
pub mod skeleton;
