//! Core algorithms for crowd navigation benchmarking.
//!
//! This crate is `no_std` (with `alloc`) and holds everything that is pure
//! computation: planar geometry, the trajectory smoothness metric, the
//! multi-objective scoring model, and a deterministic 2D crowd simulation
//! with ORCA and social-force agents plus the built-in robot policies.
//!
//! File formats, subprocess policies, the batch runner, and the CLI live in
//! the companion `crowdbench` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod policy;
pub mod scoring;
pub mod sim;
pub mod trajmetric;
pub mod vec2;

pub use vec2::Vec2;
