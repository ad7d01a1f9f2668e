//! Kuramoto oscillators on convergent graph sequences.
//!
//! The crate is organised around the objects of the theory:
//!
//! * [`graphon`]: limiting kernels `W(x, y)` on the unit square, node grids,
//!   deterministic weighted graphs and W-random graph sampling.
//! * [`frequency`]: intrinsic-frequency densities `g`, sampling and
//!   quadrature for integrals against `g`.
//! * [`spectra`]: eigenvalues of the kernel operator, the transition points
//!   `K_c^±`, the resolvent integral `D(λ)` and the eigenvalue branch
//!   `λ(ζ, K)` of the linearised operator.
//! * [`dynamics`]: the finite-`n` Kuramoto model on weighted or sampled
//!   graphs, integrated with fixed-step RK4.
//! * [`meanfield`]: Fourier–Galerkin solver for the Vlasov equation, the
//!   linearised first harmonic, stability classification and a bounded
//!   Lipschitz distance proxy.

pub mod dynamics;
pub mod error;
pub mod frequency;
pub mod graphon;
pub mod lattice;
pub mod meanfield;
pub mod quad;
pub mod rng;
pub mod spectra;
pub mod textio;

pub use error::{Error, Result};

/// Crate version, recorded in output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
