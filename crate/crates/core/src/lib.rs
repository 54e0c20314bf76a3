//! Numerical laboratory for driven-SU(2) Floquet systems.
//!
//! The central object is the one-period evolution operator of a kicked
//! two-mode system in its spin-J representation,
//!
//! ```text
//!   F = e^{+i η J_z²/(2J)} · e^{-i α J_x} · e^{-i η J_z²/(2J)} · e^{-i α J_x},
//! ```
//!
//! whose eigenphase spectrum, plotted against the effective Planck constant
//! ℏ_η = η/J over [0, 4π), forms a self-similar "butterfly" pattern. The
//! crate provides:
//!
//! - exact construction of rotation/torsion factors and parity blocks
//!   ([`su2`], [`floquet`]),
//! - eigenphase spectra and parameter sweeps with symmetry checks
//!   ([`spectrum`]),
//! - multifractal box-counting dimensions D_q of a spectrum ([`fractal`]),
//! - detection and classification of level crossings, including the
//!   coherent-destruction-of-tunneling points ([`crossings`]),
//! - the mean-field map on the unit sphere with Poincaré sections and
//!   Lyapunov estimates ([`classical`]),
//! - stroboscopic evolution and FFT-based spectrum retrieval ([`dynamics`]),
//! - dataset serialization, caching, and a verification suite ([`io`],
//!   [`verify`]).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub mod classical;
pub mod crossings;
pub mod dynamics;
pub mod floquet;
pub mod fractal;
pub mod io;
pub mod linalg;
pub mod spectrum;
pub mod su2;
pub mod verify;

/// Dense complex matrix used throughout.
pub type CMat = DMatrix<Complex64>;
/// Dense complex vector (state vector).
pub type CVec = DVector<Complex64>;
/// Dense real matrix.
pub type RMat = DMatrix<f64>;
/// Complex scalar.
pub type C64 = Complex64;

/// Engine version recorded in dataset provenance headers.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Full period of the spectrum in ℏ_η.
pub const HETA_PERIOD: f64 = 4.0 * std::f64::consts::PI;
