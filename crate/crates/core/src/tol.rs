//! Numerical tolerances shared across modules.
//!
//! Every threshold that decides a discrete outcome (generic or not, in the
//! open set or not, certified or not) lives here so that it can be audited
//! in one place.

/// Relative size below which the eigenvalue of a restricted Gram matrix is
/// treated as zero, i.e. the subspace is degenerate for the form.
pub const DEGENERATE_RESTRICTION: f64 = 1e-9;

/// Smallest singular value of `[x^j | y^(d-j)]` below which two flags are
/// not transverse.
pub const TRANSVERSE: f64 = 1e-9;

/// Absolute gap between consecutive Cartan or Jordan coordinates below which
/// there is no gap.
pub const GAP: f64 = 1e-6;

/// Upper bound on the condition number of an eigenvector matrix (or a flag
/// basis) before the input is rejected as ill conditioned.
pub const CONDITION_CAP: f64 = 1e8;

/// Relative eigen residual `||M v - mu v|| / ||M||` accepted by the eigen
/// solver.
pub const EIGEN_RESIDUAL: f64 = 1e-8;

/// Two moduli whose logarithms differ by less than this belong to the same
/// cluster of the self adjoint factor used for the (p,q)-Cartan projection.
pub const CLUSTER_LOG_GAP: f64 = 1e-7;

/// Phase (in radians, distance to 0 or pi) below which an eigenvalue counts
/// as real.
pub const REAL_PHASE: f64 = 1e-6;

/// Relative tolerance on Hermitian symmetry of a Gram matrix.
pub const HERMITIAN: f64 = 1e-10;

/// Largest supported dimension.
pub const MAX_DIM: usize = 8;
