//! Perfect reconstruction and causal prediction of signals in shift-invariant
//! spaces from periodic nonuniform samples of the signal and its derivatives.
//!
//! The pipeline runs bottom-up through the modules:
//!
//! * [`generators`]: B-splines, Daubechies scaling functions, tabulated generators.
//! * [`polyphase`]: sampling schemes, the polyphase matrix and the CIS test.
//! * [`kernels`]: inverse polyphase coefficients, interpolating kernels, reconstruction.
//! * [`moments`]: generalized vanishing moments and polynomial reproduction order.
//! * [`prediction`]: Lagrange shift weights, causal kernels and the predictor.
//! * [`approximation`]: the sampling operator, `L^p` errors and convergence studies.
//! * [`serialization`]: JSON documents for kernel sets and predictors.

pub mod approximation;
pub mod error;
pub mod generators;
pub mod kernels;
pub mod moments;
pub mod polyphase;
pub mod prediction;
pub mod serialization;

pub use error::{Error, Result};
