//! Boundary reduction for acoustic transmission problems without fundamental
//! solutions.
//!
//! Layer potentials are computed as solutions of coercive full-space
//! variational problems on a truncated box, which yields discrete-exact jump
//! relations, a Calderon operator whose shifted form annihilates Cauchy traces
//! of homogeneous solutions, and a coercive single-trace skeleton equation for
//! transmission problems with variable coefficients and complex frequency
//! `s` (`Re s > 0`).
//!
//! The crate is organised along the pipeline:
//!
//! * [`geometry`]: partitioned simplicial box meshes, skeleton extraction,
//!   oriented interfaces, boundary tagging, ASCII mesh I/O.
//! * [`coefficients`]: SPD matrix field `A`, scalar field `p`, per-subdomain
//!   extensions and spectral bounds; frequency validation.
//! * [`femspace`]: P1 conforming/broken/trace spaces, frequency-scaled norms
//!   and traces, screened-Laplace lifting.
//! * [`assembly`]: sesquilinear forms, facet mass matrices, weak co-normal
//!   derivatives.
//! * [`linsolve`]: sparse complex-symmetric factorisations.
//! * [`potentials`]: Newton, single layer and double layer potentials,
//!   Green's representation.
//! * [`calderon`]: jumps/means, the four boundary operators, the Calderon
//!   operator, duality pairings and constant estimation.
//! * [`skeleton`]: single-trace spaces, the skeleton Galerkin solve, volume
//!   reconstruction and a direct FEM reference solver.
//! * [`verify`]: the executable check suite shared by the CLI and the
//!   acceptance tests.

pub mod analytic;
pub mod assembly;
pub mod calderon;
pub mod coefficients;
pub mod export;
pub mod femspace;
pub mod geometry;
pub mod linsolve;
pub mod potentials;
pub mod skeleton;
pub mod tol;
pub mod verify;

use thiserror::Error;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum SkelError {
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("coefficient error: {0}")]
    Coefficient(String),
    #[error("frequency not in right half-plane: Re s = {0} <= 0")]
    FrequencyHalfPlane(f64),
    #[error("frequency below s0 floor: |s| = {norm} < s0 = {s0}")]
    FrequencyFloor { norm: f64, s0: f64 },
    #[error("space mismatch: expected {expected}, got {got}")]
    SpaceMismatch { expected: String, got: String },
    #[error("linear solve failed: {0}")]
    Solve(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SkelError>;

/// Principal square root of `s`; continuous on the right half-plane.
pub fn sqrt_principal(s: C64) -> C64 {
    s.sqrt()
}
