//! Thermodynamic formalism for subshifts of finite type: Perron data,
//! pressure and Gibbs measures, multifractal entropy spectra and the
//! rigidity question of when two potentials share a spectrum.

pub mod error;
pub mod perron;
pub mod rigidity;
pub mod shift;
pub mod sim;
pub mod spectrum;
pub mod thermo;

pub use error::{Error, Result};
