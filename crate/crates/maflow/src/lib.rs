//! A numerical laboratory for Monge-Ampère flows on flat complex tori.
//!
//! The crate simulates two parabolic complex Monge-Ampère flows whose
//! reference form interpolates between an initial Kähler form and a possibly
//! degenerate limit form, tracks the energy functional and its dissipation
//! along the way, and independently solves the limiting degenerate
//! Monge-Ampère equation with a damped Newton method so the flow limit can be
//! checked against it.
//!
//! Module map:
//!
//! * [`grid`] — periodic grids, scalar fields, quadrature, masks.
//! * [`spectral`] (internal) — Fourier-multiplier derivatives.
//! * [`hermitian`] — constant Hermitian matrices and matrix fields.
//! * [`forms`] — closed (1,1)-forms, the reference pencil, class volumes.
//! * [`flow`] — time integration of the flows with positivity guarding.
//! * [`energy`] — the scalar diagnostics: energy, dissipation, rate fits.
//! * [`elliptic`] — the limit-equation solver and its linear oracle.
//!
//! See the guide in `book/` for worked examples; its code snippets are
//! compiled as doc-tests.

pub mod elliptic;
pub mod energy;
pub mod error;
pub mod fastmath;
pub mod flow;
pub mod forms;
pub mod grid;
pub mod hermitian;
mod spectral;

pub use error::{Error, Result};
pub use grid::{Grid, Mask, ScalarField, Wave};
pub use hermitian::{HermitianField, HermitianMatrix};
pub use spectral::HolomorphicGradient;

pub use forms::{metric_field, mixed_class_pairing, ma_density, ricci_form, Background, Pencil};
