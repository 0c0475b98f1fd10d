//! Numerical spectral-theory toolkit for the perturbed one-body Stark
//! Hamiltonian `H = ½p² − x + q` on a truncated uniform grid.
//!
//! The whole toolkit is generated by a single parabolic escape function
//! `f = χ(r+x) + [1−χ(r+x)](r+x)^{1/2}`: its level sets are paraboloids,
//! its gradient flow defines the conjugate operator `A = Re p^f`, and its
//! dyadic shells `2^n ≤ f < 2^{n+1}` define the Besov-type norms `B`, `B*`
//! used to measure resolvents. On top of that sit:
//!
//! - [`geometry`]: pointwise evaluation of `f`, its derivatives, the smooth
//!   cutoffs `χ_m`, and the shell indexing,
//! - [`potential`]: admissible potential families `q = q₁+q₂+q₃` and a
//!   numerical validator for their decay/confinement conditions,
//! - [`grid`] / [`sparse`] / [`operators`]: sparse finite-difference
//!   discretizations of `H`, `p^f`, `A`, `p̃` and the ℓ-weighted forms,
//! - [`solver`]: certified complex resolvent solves `(H−z)φ = ψ`,
//! - [`besov`]: shell-mass reports and the regularized θ weight family,
//! - [`phase`]: the asymptotic complex phases `a_z`, `a^sim` and the
//!   factorization remainder `q₆`,
//! - [`verify`]: operator-identity checks (weighted commutator, resolvent
//!   factorization, WKB annihilation) with h-refinement order fits,
//! - [`experiments`]: resolvent-level sweeps (LAP plateau, radiation
//!   condition, Hölder exponent, Sommerfeld discrimination, Rellich
//!   illustration),
//! - [`config`] / [`report`]: strict run configuration and deterministic
//!   CSV/JSON/SVG artifact writers.

pub mod besov;
pub mod config;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod grid;
pub mod operators;
pub mod phase;
pub mod potential;
pub mod report;
pub mod solver;
pub mod sparse;
pub mod util;
pub mod verify;

pub use error::CoreError;
pub use geometry::{GeometryEval, Point};
pub use grid::{GridField, GridSpec};
pub use sparse::SparseOperator;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
