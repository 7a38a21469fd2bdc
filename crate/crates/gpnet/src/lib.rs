pub mod bge;
pub mod cli;
pub mod dag;
pub mod density;
pub mod error;
pub mod evidence;
pub mod gp;
pub mod inference;
pub mod metrics;
pub mod opt;
pub mod quadrature;
pub mod samplers;
pub mod score;
pub mod synth;
pub mod util;

pub use error::{Error, Result};
