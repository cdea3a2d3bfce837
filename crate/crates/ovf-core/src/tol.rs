//! Default tolerances used across the crate.
//!
//! All instances handled here have O(1) entries by construction (generators
//! normalize per atom), so absolute and relative scales coincide up to small
//! factors. Every verification report records the tolerance it actually used.

/// Idempotency and Hermiticity residual for projections with unit-scale entries.
pub const PROJECTION_RESIDUAL: f64 = 1e-12;

/// Strictness floor for the interior parameter `a` of a rank-one projection
/// block: `min(a, 1-a)` must exceed this at construction. Keeps
/// `(a(1-a))^(1/2)` well-conditioned and the rank classification unambiguous.
pub const INTERIOR_STRICTNESS: f64 = 1e-9;

/// Off-diagonal modulus below which a projection block is classified as
/// diagonal (phase of the off-diagonal entry is then meaningless).
pub const PHASE_FLOOR: f64 = 1e-12;

/// Default residual tolerance for the OVF identity suite.
pub const IDENTITY_RESIDUAL: f64 = 1e-10;

/// Default residual tolerance for the stationarity equality on basis pairs.
pub const STATIONARITY_RESIDUAL: f64 = 1e-9;

/// Eigenvalue floor for positive-semidefiniteness checks.
pub const PSD_FLOOR: f64 = -1e-12;

/// Entry-wise tolerance for the density decomposition `rho = phi + psi`.
pub const DECOMPOSITION_RESIDUAL: f64 = 1e-12;

/// Rank cliff: an atom's density matrix counts as rank one when its smaller
/// eigenvalue is at most this multiple of the trace.
pub const RANK_CLIFF: f64 = 1e-12;

/// Slack floor for the closed-form feasibility inequalities.
pub const FEASIBILITY_SLACK: f64 = -1e-12;

/// Step of the brute-force feasibility scan over the admissible interval.
pub const GRID_STEP: f64 = 1e-4;

/// Relative eigenvalue clip when factorizing a positive-semidefinite Gram
/// matrix into table vectors.
pub const GRAM_CLIP: f64 = 1e-12;

/// A Gram eigenvalue below `-GRAM_PSD_GUARD * scale` signals inconsistent
/// input rather than rounding noise.
pub const GRAM_PSD_GUARD: f64 = 1e-10;

/// Bisection tolerance for level-set root finding on polynomial pieces.
pub const ROOT_BISECTION: f64 = 1e-12;

/// Residual allowed when validating scalar-field profile constraints on a
/// dense grid.
pub const PROFILE_RESIDUAL: f64 = 1e-12;

/// Absolute floor used when normalizing residuals by operand norms, so that
/// vanishing operands do not produce spurious failures.
pub const NORM_FLOOR: f64 = 1e-12;
