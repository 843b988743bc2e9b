//! Equilibrium lead distances and pickoff decisions for the runner-pitcher
//! disengagement game.
//!
//! The crate is `no_std` (it needs `alloc`). Enable the `parallel` feature to
//! spread Bellman sweeps, kernel assembly and rollouts over a rayon pool.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod error;
pub mod game;
pub mod models;
pub mod records;
pub mod sim;
pub mod solver;
mod par;
pub mod state;
pub mod transitions;

pub use error::{Error, Result};
