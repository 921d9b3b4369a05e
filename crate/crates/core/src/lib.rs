//! Multi-resolution intentional planning over action-language domains.

pub mod bench;
pub mod controller;
pub mod diagnosis;
pub mod domain;
pub mod executor;
pub mod intention;
pub mod multires;
pub mod search;
pub mod semantics;
#[cfg(test)]
mod testing;
