//! Exact solutions of spherically symmetric ultrametric diffusion.
//!
//! The crate is organised around the data the whole pipeline runs on:
//!
//! * [`hierarchy`] describes the sphere radii `d_i` and ball populations
//!   `N_i` around a centre point, explicit finite trees, and the
//!   convergence / regularity checks on those sequences.
//! * [`spectrum`] builds the radial eigenbasis and eigenvalues `λ_i` of the
//!   Kolmogorov–Feller generator.
//! * [`diffusion`] evaluates the exact solution series for pure diffusion.
//! * [`sink`] handles a point reaction sink at the centre: Laplace-domain
//!   algebra, interlaced poles, residues, survival, and Talbot inversion.
//! * [`asymptotics`] evaluates the power-law / log-periodic laws and fits
//!   exponents from computed curves.
//! * [`oracle`] is brute-force ground truth: dense generators on finite
//!   trees, matrix exponentials, an ODE integrator and Gillespie sampling.
//! * [`cli`] and [`scenario`] implement the command-line surface and file
//!   formats.

// Range checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod cli;
pub mod diffusion;
mod error;
pub mod hierarchy;
pub mod oracle;
pub mod scenario;
pub mod sink;
pub mod spectrum;

pub use error::{Error, Result};
pub use hierarchy::{Asymptotics, Branching, FiniteTree, Kernel, UltrametricHierarchy};
pub use spectrum::Spectrum;

/// A value together with an upper bound on its absolute truncation error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounded<T> {
    pub value: T,
    pub bound: f64,
}

impl<T> Bounded<T> {
    pub fn new(value: T, bound: f64) -> Self {
        Self { value, bound }
    }
}
