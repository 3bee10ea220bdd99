//! Numerical toolkit for the sub-elliptic Dirichlet eigenvalue problem on the
//! first Heisenberg group.
//!
//! The group is `R^3` with coordinates `(x, y, t)`, the non-commutative product
//! `a ∘ b = (a.x + b.x, a.y + b.y, a.t + b.t + 2(b.x·a.y − a.x·b.y))`, and the
//! anisotropic dilations `δ_λ(x, y, t) = (λx, λy, λ²t)`. The left-invariant
//! horizontal fields `X = ∂x + 2y∂t`, `Y = ∂y − 2x∂t` generate the sub-Laplacian
//! `Δ_H = X² + Y²`, whose Dirichlet spectrum this crate estimates and bounds.
//!
//! The pipeline, bottom to top:
//!
//! * [`geometry`] — group operations, gauge norm/distance, fundamental solution,
//!   horizontal weight, closed-form gauge-ball integrals;
//! * [`bessel`] — `J_0`/`J_1`, zeros of `J_1`, and the radial modes of the
//!   ψ-weighted model problem on gauge balls;
//! * [`domain`] / [`grid`] — implicit domains and their structured grids with
//!   interior/boundary classification and bisected surface sampling;
//! * [`operator`] / [`sparse`] — symmetric positive-semidefinite assembly of the
//!   horizontal energy, plus diagonal mass matrices;
//! * [`solver`] — conjugate gradients and deflated inverse iteration for the
//!   smallest generalized eigenpairs;
//! * [`green`] — Green functions, harmonic radius, level-set domains, and the
//!   harmonic-center search;
//! * [`perimeter`] — marching-tetrahedra surfaces, horizontal perimeter,
//!   volume, isoperimetric and co-area checks;
//! * [`transplant`] — radial-profile transplantation and the eigenvalue upper
//!   bounds it yields.

pub mod bessel;
pub mod domain;
pub mod error;
pub mod geometry;
pub mod green;
pub mod grid;
pub mod operator;
pub mod perimeter;
pub mod solver;
pub mod sparse;
pub mod transplant;

pub use error::{Error, Result};
pub use geometry::Point3;
