//! Direct sampling reconstruction from near-field data.
//!
//! Two indicator functionals locate the scatterer support from the data
//! matrices on the measurement circle:
//!
//! - `i_ff` pushes the near-field operator through a truncated
//!   Dirichlet-to-far-field transform and pairs it with plane-wave test
//!   functions: the transform is a circulant series kernel in the angular
//!   variable whose modes divide by `H_m(kR)`, truncated at order `M`.
//! - `i_cd` pairs the Cauchy data with the fundamental solution and its
//!   normal derivative in a boundary-integral combination whose value
//!   collapses, by the second Green identity, onto the imaginary part of
//!   the fundamental solution centered at the sampling point.
//!
//! Both peak on the scatterer and decay as the sampling point leaves it.
//! The module also carries the operator self-checks used by the
//! verification suites: the two-path factorization identity of the
//! near-field operator and the boundary form of Green's second identity.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::forward::{point_source_field, FieldGrid, SolverContext, SolverError, SolverOptions};
use crate::media::Medium;
use crate::point::Point;
use crate::specfun::{self, SpecFunError, WaveContext};
use crate::synth::{MeasurementCircle, NearFieldData};

/// Errors from indicator evaluation and the self-checks.
#[derive(Debug)]
pub enum ImagingError {
    Usage(String),
    SpecFun(SpecFunError),
    Solver(SolverError),
    Io(std::io::Error),
    Parse { line: usize, message: String },
}

impl std::fmt::Display for ImagingError {
    fmt_impl!();
}

macro_rules! fmt_impl {
    () => {};
}

impl std::error::Error for ImagingError {}

impl From<SpecFunError> for ImagingError {
    fn from(e: SpecFunError) -> Self {
        ImagingError::SpecFun(e)
    }
}

impl From<SolverError> for ImagingError {
    fn from(e: SolverError) -> Self {
        ImagingError::Solver(e)
    }
}

impl From<std::io::Error> for ImagingError {
    fn from(e: std::io::Error) -> Self {
        ImagingError::Io(e)
    }
}

fn usage(msg: impl Into<String>) -> ImagingError {
    ImagingError::Usage(msg.into())
}
