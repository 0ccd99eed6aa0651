//! Homogenization toolkit for the Neumann problem on thin domains whose top
//! boundary oscillates with period `eps` and bottom boundary with period
//! `eps^alpha`, `alpha > 1`.
//!
//! The pipeline is: solve the periodic cell problem ([`homogenize`]) for the
//! effective coefficients, solve the 1D limit problem ([`limit1d`]), then
//! compare against direct finite-element solves of the thin-domain problem
//! ([`verify`]).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod homogenize;
pub mod limit1d;
pub mod mesh;
pub mod pipeline;
pub mod verify;

pub use error::{Error, Result};
