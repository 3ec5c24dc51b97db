//! Spectral toolkit for the NLS approximation of capillary-gravity water
//! waves in arc-length formulation.

pub mod dispersion;
pub mod kernels;
pub mod nls;
pub mod resonance;
pub mod spectral_core;
pub mod twi;
pub mod wavepacket;
pub mod wwsim;

pub use spectral_core::C64;
