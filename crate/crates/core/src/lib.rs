//! Darboux transformations and Darboux integrability of Schrödinger-type
//! Riccati vector fields, with symbolic and numerical certification.

pub mod catalog;
pub mod cli;
pub mod darboux;
pub mod error;
pub mod expr;
pub mod integrability;
mod report;
pub mod riccati;
pub mod verifier;

pub use error::{DkitError, Result};
