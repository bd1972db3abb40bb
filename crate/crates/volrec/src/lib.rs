//! Exact volume polynomials of moduli spaces of bordered Riemann surfaces
//! and super Riemann surfaces for the Airy, Weil-Petersson, (2,p) minimal
//! string, Bessel, super Weil-Petersson and (2,2p-2) minimal superstring
//! spectral curves, untwisted and with the Masur-Veech twist.
//!
//! The same coefficient tables are produced by four independent routes:
//! the coefficient recursion in [`abo`], residue recursion in [`ceo`] (plus
//! its dilaton-leaf variant), and generating-function shifts or group
//! actions in [`genfun`]. [`graphs`] sums over stable graphs and [`kernels`]
//! checks the recursion kernels numerically.

#![allow(clippy::type_complexity)]

pub mod abo;
pub mod ceo;
pub mod error;
pub mod exact;
pub mod genfun;
pub mod golden;
pub mod graphs;
pub mod kernels;
pub mod models;
pub mod suites;
pub mod table;

pub use error::{Error, Result};
pub use exact::{Gen, Rat, SymPoly};
