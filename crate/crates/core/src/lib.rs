//! Symbolic-numeric exterior calculus on Lie algebroids.
//!
//! The crate provides, bottom up:
//!
//! - [`expr`]: a small expression DSL (parse, differentiate, simplify,
//!   evaluate) for the smooth coefficient functions everything else is
//!   made of;
//! - [`chart`]: coordinate charts, deterministic sampling and the numeric
//!   zero test all residual checks reduce to;
//! - [`algebroid`]: Lie algebroid data with axiom validation, sections,
//!   sparse exterior forms, wedge, exterior derivative, Lie derivative and
//!   interior product;
//! - [`prolong`]: prolongation algebroids over product bundles, connection
//!   splittings and the pullback along a bundle section;
//! - [`eds`]: algebraic/differential ideals, sampled ideal membership,
//!   integral-manifold residuals and the dependency condition;
//! - [`ip`]: the inverse-problem algebroid over `R x g` with its derived
//!   coefficient fields, reduced Helmholtz residuals, two-form checks,
//!   sigma-form systems, Euler-Poincare residuals and Lie-algebra
//!   cohomology obstructions;
//! - [`solver`]: polynomial-ansatz multiplier search by collocation and
//!   null-space extraction;
//! - [`odesim`]: fixed-step RK4 integration of expression-defined vector
//!   fields.

pub mod algebroid;
pub mod chart;
pub mod eds;
pub mod expr;
pub mod ip;
pub mod linalg;
pub mod odesim;
pub mod prolong;
pub mod report;
pub mod solver;
