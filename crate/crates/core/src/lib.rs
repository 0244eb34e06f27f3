//! Reduced-functional computations for normalized multi-spike solutions of
//! `−Δu = |u|^{2*−2}u + λu` with prescribed mass `∫u² = ρ` on bounded
//! domains of R^N, N ≥ 5.
//!
//! Module overview:
//!
//! - [`bubble`]: Aubin–Talenti bubbles, dimension constants, linearized kernel.
//! - [`greens`]: Dirichlet Green's functions, Robin function, domain kernels.
//! - [`tabulated`]: grid-sampled regular parts loaded from binary files.
//! - [`reduced`]: the reduced functional, its derivatives, critical points.
//! - [`normalized`]: mass matching and the approximate solution.
//! - [`quadrature`]: seeded Monte Carlo and adaptive radial rules.
//! - [`pohozaev`]: surface quadratic forms and local Pohozaev residuals.
//! - [`cli`]: configuration, reports and the verification suite.

pub mod bubble;
pub mod cli;
pub mod fd;
pub mod field;
pub mod greens;
pub mod normalized;
pub mod pohozaev;
pub mod quadrature;
pub mod reduced;
pub mod tabulated;
