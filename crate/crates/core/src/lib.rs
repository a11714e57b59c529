//! Approximate variation of functions sampled on finite grids with values in
//! spaces carrying a finite family of pseudometrics. Values are exact on
//! real coordinates and certified brackets on finite spaces; on top sit
//! growth diagnostics and a pointwise selection procedure.

pub mod approxvar;
pub mod checks;
pub mod cli;
pub mod error;
pub mod extreal;
pub mod families;
pub mod gage;
pub mod gridfn;
pub mod io;
pub mod oracle;
pub mod regulated;
pub mod selection;

pub use crate::approxvar::{eps_variation, profile, Bracket, Profile};
pub use crate::error::{Error, Result};
pub use crate::extreal::ExtReal;
pub use crate::gage::{GageSpace, Point, PseudometricId};
pub use crate::gridfn::{Grid, SampledFunction};
