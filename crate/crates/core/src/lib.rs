//! Energy-based screening of post-fault power-system dynamics.
//!
//! The crate models a lossless AC network as a graph of buses and lines,
//! evaluates the swing-equation energy function, and certifies that a
//! post-fault state cannot reach any protective-relay angle limit. The
//! certification solves, per transmission line, a linear-programming
//! relaxation of the energy-constrained angle maximization and tightens it
//! with tangent cuts until it either proves the line safe or gives up.
//!
//! Modules:
//! - [`network`]: immutable network model and validation.
//! - [`energy`]: potential/kinetic energy, gradient, convex equilibrium solve.
//! - [`dynamics`]: swing-equation integration, fault application and clearing.
//! - [`lp`]: self-contained bounded-variable simplex solver.
//! - [`screening`]: per-line cutting-plane certification and the
//!   maximum-secure-energy search.
//! - [`oracle`]: brute-force grid references for two-free-angle networks.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the default `std`
//! feature only switches float math to the standard library.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod dynamics;
pub mod energy;
mod error;
pub mod lp;
mod math;
pub mod network;
pub mod oracle;
pub mod screening;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
