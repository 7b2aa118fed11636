//! Direct and inverse scattering of time-harmonic waves by sound-soft cracks.
//!
//! The crate covers the forward problem for collections of open arcs, the
//! Frechet derivative of the crack-to-far-field map, a modified Newton
//! reconstruction with Chebyshev order escalation and multi-frequency
//! continuation, low-frequency asymptotics, and direct sampling.
//!
//! `no_std` with `alloc`; file formats and the command line live in the
//! `arcscat` crate.

#![no_std]

extern crate alloc;

pub mod error;
pub mod forward;
pub mod frechet;
pub mod geometry;
pub mod inversion;
pub mod lowfreq;
pub mod numerics;
pub mod sampling;

pub use error::{Error, Result};
pub use forward::{solve_density, DensitySolution, FarFieldSet};
pub use geometry::{ChebCrack, Crack, CrackSet, NystromGrid, Point2, TrigCrack, TrigTerm};
