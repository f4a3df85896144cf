//! Sparse trigonometric approximation and recovery in mixed-smoothness classes.

pub mod error;
pub mod experiments;
mod fft;
pub mod index;
pub mod measure;
pub mod mterm;
pub mod poly;
pub mod recovery;

pub use error::{Error, Result};
pub use index::{BlockLabel, LayerSpec, MultiIndex, Weight};
pub use poly::{GridSpec, GridValues, SpaceParams, SparseTrigPoly};
