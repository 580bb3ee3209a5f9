//! Globally conservative solutions of the two-component nonlinear dispersive
//! system
//!
//! ```text
//! u_t - u_txx + f(u)_x - f(u)_xxx + (g(u) + f''(u) u_x^2 / 2)_x + rho rho_x = 0
//! rho_t + f'(u) rho_x + (1/2 + f''(u)/2) rho u_x = 0
//! ```
//!
//! computed in energy-weighted characteristic coordinates `(T, Z)`. The
//! transformed unknowns `(u, rho, w, v)` obey a semi-linear system whose right
//! side stays bounded through wave breaking, so solutions can be continued
//! past the time where `u_x` blows up while the H1-type energy is conserved.
//!
//! Pipeline: [`model`] defines the flux pair, [`lagrangian`] maps Eulerian
//! data onto the `Z` grid, [`nonlocal`] evaluates the Helmholtz-kernel source
//! terms in O(N), [`evolution`] integrates with RK4, [`reconstruction`] maps
//! back to `x`, and [`diagnostics`] checks the conserved quantities and
//! identities along the way. [`oracle`] is an independent Eulerian solver
//! for smooth, pre-breaking windows.

pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod lagrangian;
pub mod model;
pub mod nonlocal;
pub mod oracle;
pub mod quadrature;
pub mod reconstruction;

pub use error::{Error, Result};
pub use lagrangian::{InitialData, LagrangianGrid, LagrangianState};
pub use model::{FluxModel, Preset};
