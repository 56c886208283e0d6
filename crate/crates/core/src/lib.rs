//! Pseudospectral simulation of the nonlocal dislocation-density equation
//!
//! ```text
//! u_t = -|u_x| Λ^α u,      Λ^α = (-∂²ₓ)^{α/2},  α ∈ (0, 2)
//! ```
//!
//! together with the closed-form self-similar profile that serves as its
//! analytic oracle and the diagnostics used to check decay laws, conservation
//! and convergence towards self-similarity.
//!
//! The crate is organised bottom-up:
//!
//! * [`profile`]: Getoor function, self-similar profile Φ_α and its constants.
//! * [`grid`] and [`operators`]: periodic grids, Fourier multipliers and the
//!   Lévy-Khintchine quadrature operator.
//! * [`solver`]: integrating-factor Heun integration of the density equation
//!   `v_t = ε v_xx + (|v| Λ^{α-1} H v)_x`.
//! * [`diagnostics`]: norms, power-law fits, support tracking, oracle errors.
//! * [`run_io`]: configuration files, snapshots and run manifests.
//! * [`verify`]: the verification battery behind the `verify` subcommand.
//!
//! Data-parallel kernels go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and falls back to plain iterators otherwise.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod operators;
pub mod par;
pub mod profile;
pub mod quadrature;
pub mod run_io;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{Field, Grid, Spectrum};
pub use profile::AlphaParams;

/// Version string recorded in manifests and printed by `--version`.
pub fn version_string() -> String {
    format!(
        "{} {} ({})",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION"),
        env!("DISLOCFLOW_GIT_DESCRIBE")
    )
}
