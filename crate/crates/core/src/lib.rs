//! Near-field acoustic scattering toolkit in two dimensions.
//!
//! The crate simulates time-harmonic scattering of point sources by
//! penetrable (isotropic or anisotropic) media via FFT-accelerated
//! Lippmann-Schwinger volume-integral solvers, synthesizes noisy Cauchy
//! data on a measurement circle, and reconstructs the scatterer support
//! with two direct sampling indicator functionals: one built on a
//! Dirichlet-to-far-field transform of the near-field operator, one built
//! directly on the Cauchy data.
//!
//! Module map:
//! - [`specfun`]: cylindrical Bessel/Hankel functions and the outgoing
//!   Helmholtz fundamental solution with its derivatives.
//! - [`media`]: scatterer geometry, membership tests and contrast fields.
//! - [`forward`]: volume-integral forward solvers, Cauchy-trace
//!   evaluation and a separation-of-variables disk oracle.
//! - [`synth`]: measurement circle, full data synthesis, the
//!   multiplicative noise model and the `nfd` file format.
//! - [`imaging`]: the truncated far-field transform, both indicator
//!   functionals, grid scans and the operator-identity self-checks.
//! - [`config`]: the line-oriented experiment configuration format.
//! - [`verify`]: named verification suites used by the CLI and tests.

pub mod config;
pub mod forward;
pub mod imaging;
pub mod media;
mod point;
pub mod specfun;
pub mod synth;
pub mod verify;

pub use point::{Point, SymMat2};
