// `!(x > 0.0)` guards are deliberate: they reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod oracle;
pub mod oscillator;
pub mod quad;
pub mod scattering;
pub mod sweep;
pub mod thermo;

pub use error::{Error, Result};
