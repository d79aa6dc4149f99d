//! A constraint engine built on local propagation of partial information,
//! extended with lazily expanded recursion and a hierarchy of autoencoders
//! that compresses frame states and guides search.

pub mod autoenc;
#[cfg(feature = "cli")]
pub mod cli;
pub mod hierarchy;
pub mod language;
pub mod lattice;
pub mod network;
pub mod planning;
pub mod rng;
pub mod search;
