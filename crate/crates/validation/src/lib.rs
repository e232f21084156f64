//! Reference computations written independently of `bbpre`, used as
//! oracles by its tests and by the acceptance suite.

pub mod markov;
pub mod quadrature;
pub mod simple_bpre;
pub mod two_sample;
