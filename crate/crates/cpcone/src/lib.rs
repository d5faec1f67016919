//! Toolkit for the cone of 5x5 completely positive (CP) matrices.
//!
//! A symmetric matrix A is completely positive when A = B B^T for some
//! entrywise-nonnegative B. From dimension five on this cone is strictly
//! smaller than the doubly nonnegative cone (positive semidefinite with
//! nonnegative entries), and the interesting part of its boundary consists
//! of matrices orthogonal to diagonal scalings of two families of extreme
//! copositive matrices: the Horn matrix and the Hildebrand matrices
//! T(Theta). This crate provides
//!
//! - exact generators and certificates for those boundary loci, including
//!   rational boundary points certified in exact arithmetic ([`boundary`]),
//! - a trust-region solver for the cp-factorization itself, with zero
//!   pattern enforcement and a cp-rank classification protocol ([`solver`]),
//! - charts, Jacobians and outward normal directions of the boundary,
//!   which manufacture doubly nonnegative matrices that are not completely
//!   positive ([`geometry`]),
//! - an experiment harness and reference factorizations ([`experiments`]),
//!   wired to a command-line interface ([`cli`]).

pub mod boundary;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod mat;
pub mod solver;

pub use error::{Error, Result};
