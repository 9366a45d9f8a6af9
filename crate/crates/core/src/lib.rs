//! Distributed model predictive control of multi-zone buildings with a
//! piecewise-affine thermal comfort model.
//!
//! The crate is `no_std` (with `alloc`). IO, file formats, threading and the
//! command line live in the `dmpc` companion crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod admm;
pub mod comfort;
pub mod exec;
pub mod linalg;
pub mod qp;
pub mod thermal;
pub mod mpc;
pub mod sim;
