//! Shared numeric tolerances.

/// Default relative tolerance for float comparisons.
pub const REL: f64 = 1e-9;

/// Agreement of a character with a spectral radius.
pub const ACHIEVER_REL: f64 = 1e-6;

/// Column sums of a log-character matrix.
pub const ZERO_SUM_ABS: f64 = 1e-6;

/// Relative singular-value cutoff for numerical null spaces.
pub const NULL_REL: f64 = 1e-8;

/// Eigenvalues closer than this (relative) are treated as one cluster.
pub const CLUSTER_REL: f64 = 1e-7;

/// Symmetry check for float divisor classes.
pub const SYM_ABS: f64 = 1e-12;

/// Strict-inequality margin factor for sign tests on log characters.
pub const STRICT_MARGIN: f64 = 1e-9;

/// Eigenvalue modulus counted as 1 in the entropy check.
pub const UNIT_MODULUS: f64 = 1e-6;

/// Default digit budget per coordinate.
pub const DIGIT_BUDGET: u64 = 1_000_000;

/// Digit cap for orbit points visited while searching for a period.
pub const PERIOD_SEARCH_DIGITS: u64 = 100_000;

/// Safety factor applied to observed one-step defects.
pub const TAIL_SAFETY: f64 = 2.0;
