//! Exact engine for fermionic forms, crystal one-dimensional sums and
//! Q-system characters attached to non-twisted affine Lie algebras.
//!
//! The modules build on each other in this order: [`root_data`] and
//! [`qseries`] supply exact constants and polynomial arithmetic,
//! [`fermionic`] evaluates the configuration sums, [`crystals`] and
//! [`onedsum`] evaluate the path side, [`characters`] handles Weyl
//! characters and Q-systems, and [`verifier`] ties them together.

pub mod characters;
pub mod crystals;
pub mod error;
pub mod fermionic;
pub mod onedsum;
pub mod qseries;
pub mod root_data;
pub mod verifier;

pub use error::{Error, Result};
