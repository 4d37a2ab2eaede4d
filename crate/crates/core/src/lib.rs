//! Simulation and verification toolkit for random surface growth with a reflecting wall.

pub mod asymptotics;
pub mod correlation;
pub mod enveloping;
pub mod exact;
pub mod growth_sim;
pub mod harness;
pub mod special_fn;
