//! Numerical core for a coupled image/edge-variable diffusion system
//!
//! ```text
//! u_t + eps A u = delta div(g(v) grad u)
//! v_t - lambda Lap v = delta (1 - lambda)(|grad u| - v) + (1 - delta) grad v . grad lambda
//! u = v = 0 on the boundary,  u(0) = delta u0,  v(0) = delta v0
//! ```
//!
//! on uniform rectangular grids, together with checkers for the energy
//! estimate, the dissipative inequality against test pairs, and a
//! Gronwall-type bound. The crate is `no_std` and only needs `alloc`; float
//! functions come from `num_traits::Float` (libm), which std's inherent
//! methods shadow whenever std is in the build, hence the scoped
//! `allow(unused_imports)` on those imports.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod grid;
pub mod model;
pub mod linsolve;
pub mod operators;
pub mod solver;
pub mod analysis;

pub use error::{Error, Result};
pub use grid::{GridSpec, ScalarField, VectorField};
pub use model::{Diffusivity, DiffusivityParams, LambdaField, ModelConfig};
