//! β-numbers, square functions and Dorronsoro-type inequalities on the
//! Heisenberg group `H^n`, evaluated numerically.
//!
//! Modules, from the bottom up:
//!
//! - [`hgroup`]: group law, dilations, the Korányi gauge, horizontal derivatives
//! - [`fields`]: the [`ScalarField`] abstraction and the test-function catalog
//! - [`quad`]: ball averages, whole-group `L^p` norms and scale integrals
//! - [`affine`]: projection onto affine maps in the horizontal variables
//! - [`beta`]: β-numbers and their scale profiles
//! - [`squarefn`]: the square functions `G_α` and `S_α`
//! - [`verify`]: the identity and inequality harness
//!
//! With the default `parallel` feature, loops over scales, sample points and
//! sweep cases run on the rayon pool. Every reduction happens in a fixed order
//! afterwards, so results are bit-identical for any number of threads and
//! identical to a build without the feature.

pub mod affine;
pub mod beta;
pub mod error;
pub mod fields;
pub mod hgroup;
pub mod par;
pub mod quad;
pub mod squarefn;
pub mod verify;

pub use error::{Error, Result};
pub use fields::{catalog, Params, ScalarField};
pub use hgroup::{GroupParams, Point};
pub use quad::{Domain, Estimate, Mode, QuadSpec, ScaleGrid};
