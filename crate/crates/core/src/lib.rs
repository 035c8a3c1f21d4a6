//! Forward scattering by Born iteration of the Lippmann-Schwinger equation
//! and numerical certification of the estimates behind uniqueness for
//! fixed-incident-direction scattering data.

pub mod asymptotics;
pub mod checks;
pub mod error;
pub mod fft;
pub mod green;
pub mod grid;
pub mod harness;
pub mod identities;
pub mod inversion;
pub mod io;
pub mod linalg;
pub mod potential;
pub mod quadrature;
pub mod radon;
pub mod solver;
pub mod spectral;
pub mod vec3;

pub use error::{Result, ScatterError};
