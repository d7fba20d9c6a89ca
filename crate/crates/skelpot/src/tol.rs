//! Central tolerance constants.
//!
//! Identities that are exact consequences of the discrete algebra (jump
//! relations, projection property, duality of trace-extraction paths) are
//! checked near machine precision; quantities limited by discretisation
//! error carry method-level thresholds.

/// Exact f64 arithmetic (symmetry of assembled forms, unit normals).
pub const EXACT: f64 = 1e-12;

/// Algebraically exact identities routed through one or two sparse solves
/// (jump relations, lifting independence, linearity of solves).
pub const SOLVE_EXACT: f64 = 1e-10;

/// Identities routed through several solves and a dense recombination
/// (Green's reconstruction, duality of K and K').
pub const MULTI_SOLVE: f64 = 1e-8;

/// Calderon projection residual for discrete homogeneous solutions.
pub const PROJECTION: f64 = 1e-6;

/// Relative discretisation-error budget at the baseline resolution 32.
pub const BASELINE_REL: f64 = 0.05;

/// Looser budget for quadrature-vs-FEM residuals (ultra-weak identity,
/// manufactured co-normal traces) at resolution 32.
pub const QUADRATURE_REL: f64 = 0.10;

/// Required reduction factor of baseline discrepancies under one uniform
/// refinement.
pub const REFINE_FACTOR: f64 = 1.5;

/// Multiplicative headroom absorbing unspecified constants in operator
/// norm ceilings.
pub const CEILING_FACTOR: f64 = 10.0;

/// Width of the log-log exponent acceptance window around predicted
/// continuity exponents.
pub const EXPONENT_WINDOW: f64 = 0.3;

/// Allowed min/max ratio for compensated coercivity constants across a
/// frequency sweep.
pub const COERCIVITY_BAND: f64 = 10.0;

/// Relative change of the single layer operator under doubling of the
/// truncation box at strong decay.
pub const TRUNCATION_REL: f64 = 0.01;
