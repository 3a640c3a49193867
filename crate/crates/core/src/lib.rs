//! Harmonic analysis on products of hyperbolic planes.
//!
//! Group coordinates and flows live in [`geometry`]; spherical functions in
//! [`special_functions`]; the sl(2) operators, the micro-local lift and the
//! distribution S_phi in [`lie_operators`]; spherical transforms, windows and
//! quantization in [`transforms`]; trace-formula terms and synthetic spectra in
//! [`trace_spectra`]; experiment orchestration in [`ergodicity_lab`].

pub mod ergodicity_lab;
pub mod geometry;
pub mod lie_operators;
pub mod quadrature;
pub mod special_functions;
pub mod trace_spectra;
pub mod transforms;

pub use num_complex::Complex64;
