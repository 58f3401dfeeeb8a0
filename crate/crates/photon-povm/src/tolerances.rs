//! Pinned numerical thresholds used by the validation suite and the CLI
//! exit criteria. Centralized so no check carries an ad-hoc magic number.

/// Max-norm residual of `Σ_n M_n − 𝟙` for the first-order elements over a
/// full pixel tiling and the full time window. The pixel and time integrals
/// are analytic, so the off-diagonal Kronecker deltas are exact and only
/// accumulation round-off remains.
pub const COMPLETENESS_RESIDUAL: f64 = 1e-10;

/// Hermiticity of assembled elements, `max |M − M†|`.
pub const ELEMENT_HERMITICITY: f64 = 1e-13;

/// Eigenvalue floor for positive semidefiniteness of elements.
pub const ELEMENT_PSD_FLOOR: f64 = -1e-12;

/// Agreement between the first-order kernel and `c·Σ_σ|ψ_σ|²` computed
/// through independent code paths (double mode sum vs squared wave
/// function).
pub const FLUX_IDENTITY: f64 = 1e-12;

/// `w1_exact` on a single-mode state against the closed-form `c/V`.
pub const SINGLE_MODE_EXACTNESS: f64 = 1e-13;

/// Allowed band for the log–log slope of the first-order kernel error over
/// relative bandwidths {0.04, 0.02, 0.01, 0.005}.
pub const CONVERGENCE_SLOPE: (f64, f64) = (1.7, 2.3);

/// Peak-normalized first-order deviation allowed at relative bandwidth 0.01.
pub const NARROWBAND_MAX_REL_ERR: f64 = 5e-3;

/// Relative error allowed between the fitted delay and `n/(2·c·α_{k0})`.
pub const TAU_RELATIVE: f64 = 0.05;

/// Total ordered pixel-pair probability against 1 (analytic contraction
/// oracle), within time-quadrature accuracy.
pub const TWO_PHOTON_NORMALIZATION: f64 = 1e-6;

/// Default convergence demand on doubling the two-photon quadrature order.
pub const QUADRATURE_TOL: f64 = 1e-6;

/// One-photon sampling: sum of outcome probabilities must cover the pulse.
pub const PROBABILITY_DEFICIT_ONE: f64 = 1e-6;

/// Two-photon sampling: quadrature-limited coverage tolerance.
pub const PROBABILITY_DEFICIT_TWO: f64 = 1e-4;

/// Total variation bound between a 10⁵-trial histogram and the exact
/// distribution (default for `simulate`).
pub const TOTAL_VARIATION: f64 = 0.01;

/// Same-pixel double-detection probability above which the coincidence
/// runner warns that the low-density assumption is strained.
pub const DOUBLE_HIT_WARNING: f64 = 0.05;
