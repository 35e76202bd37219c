//! Rotation numbers of one-parameter families `f_t = R_t ∘ f` of circle
//! diffeomorphisms: estimation, mode-locking plateaus, continued-fraction
//! combinatorics, distortion certificates and derivative probes.

pub mod circle_map;
pub mod cli;
pub mod cont_frac;
pub mod denjoy;
pub mod derivative_probe;
pub mod error;
pub mod extremum;
pub mod measure_conj;
pub mod real;
pub mod rotation;
pub mod staircase;
pub mod verify;

pub use error::{Error, Result};
