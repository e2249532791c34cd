//! Computing with smooth functions on the unit sphere through the double Fourier sphere
//! method: low-rank construction by structure-preserving Gaussian elimination, Fourier
//! calculus, and a spectral Poisson solver.

pub mod banded;
pub mod calculus;
pub mod error;
pub mod fourier;
pub mod harmonics;
pub mod lowrank;
pub mod poisson;
pub mod sphere_domain;

pub use error::{Result, SphereError};
pub use lowrank::{construct, ConstructorConfig, LowRankSphereFun, Parity};
pub use sphere_domain::{cart_real, sph_real, CartFn, CartPoint, SphFn, SphPoint, SphereSource};
