//! Multistable Lévy motions: the independent-increments process `L_I` and the
//! field-based process `L_F`, their series simulation, characteristic
//! functions, semi-martingale decompositions and tangency diagnostics.

// `!(x < y)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alpha;
pub mod charfn;
pub mod checks;
pub mod decomp;
pub mod error;
pub mod localize;
pub mod quad;
pub mod rng;
pub mod series;
pub mod stable;
pub mod stats;

pub use alpha::{AlphaFunction, AlphaKind, Interpolation};
pub use error::{Error, Result};
pub use series::{PathSample, ProcessKind, SeriesDraw, TimeGrid};
