//! Discrete averaging for iterated maps.
//!
//! An interpolating vector field is a fixed weighted sum of the iterates of a
//! map. Its time-one flow approximates the map, and for planar area-preserving
//! maps its Hamiltonian part is an adiabatic invariant. This crate holds the
//! pure algorithms: exact truncated jets, reference maps, interpolation
//! schemes, fixed-step flows, invariant extraction and validity scans. It
//! needs `alloc` only; file formats, the CLI and threading live in the
//! `discavg` crate.
#![cfg_attr(not(any(test, feature = "std")), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod diagnostics;
pub mod error;
pub mod flow;
pub mod interpolation;
pub mod invariants;
pub mod jet;
pub mod maps;
pub mod rational;

pub use error::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;
