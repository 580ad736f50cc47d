//! Numerical tolerances shared across modules.

/// A cubic root `u` counts as real when `|Im u| < REAL_ROOT * (1 + |u|)`.
pub const REAL_ROOT: f64 = 1e-10;

/// Two roots count as coincident below this relative separation.
pub const COINCIDENT_ROOT: f64 = 1e-8;

/// Default relative tolerance for action quadratures.
pub const QUAD_DEFAULT: f64 = 1e-10;

/// Default tolerance for the 1D solve locating `g` in EBK quantization.
pub const ROOT_DEFAULT: f64 = 1e-10;

/// Guard against zero pivots in Sturm sequence counting.
pub const STURM_PIVOT_GUARD: f64 = 1e-300;

/// Relative width below which a nearest-neighbor match in the joint-spectrum
/// lattice is reported as ambiguous instead of being guessed.
pub const MATCH_AMBIGUITY: f64 = 0.1;

/// Fraction of the local column spacing used to bias the initial
/// cross-column frame vector during lattice transport.
pub const FRAME_BIAS: f64 = 0.45;
