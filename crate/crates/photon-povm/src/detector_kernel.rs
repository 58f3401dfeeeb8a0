//! The in-detector counting kernel of a thick absorptive photodetector.
//!
//! Inside the detector the longitudinal wave-vector component acquires an
//! imaginary part `α_k = γ·k` (absorption) and the propagation speed becomes
//! `c/n`. Integrating the first-order coincidence-rate operator through the
//! full detector depth leaves a double mode sum whose weight is
//!
//! ```text
//! w1(x, y, t) = (s·ρ_a·c / 2V) Σ_σ Σ_{a,b} conj(c_{a,σ}) c_{b,σ}
//!               · sqrt(k_a k_b) / (α_a + α_b + i·n·(k_b − k_a))
//!               · exp(i(k_ax − k_bx)x + i(k_ay − k_by)y − i(k_a − k_b)·c·t)
//! ```
//!
//! with `a` the conjugated (bra) index and `s·ρ_a = 4γ` in units
//! `ħ = ε₀ = 1`. The sign of the imaginary denominator term is tied to the
//! bra/ket pairing: this combination is the one for which the kernel is a
//! positive semidefinite form and reduces, for narrowband pulses, to a
//! *delayed* flux measurement
//!
//! ```text
//! w1(x, y, t) ≈ c · Σ_σ |ψ_σ(x, y, 0, t − τ)|²,    τ = n/(2·c·α_{k0}) > 0
//! ```
//!
//! which is the first-order form ([`w1_first_order`]). The delay τ is a few optical
//! cycles: the depth integral samples field that entered the absorber
//! earlier. On any fixed-|k| shell the exact weight is constant and the two
//! kernels agree identically; the residual difference for finite bandwidth
//! scales as the square of the relative bandwidth, which the tests measure.

use crate::mode_space::{Helicity, ModeGrid};
use crate::photon_states::{OnePhotonState, TwoPhotonState};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("wavenumber must be positive, got {k}")]
    NonPositiveK { k: f64 },
    #[error("{name} must be positive, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("detector parameters were built for a different grid (k0 or c differ)")]
    GridMismatch,
    #[error("need at least 3 distinct wavenumber magnitudes to fit tau, got {distinct}")]
    InsufficientBandwidth { distinct: usize },
    #[error("kernel produced {value}, below the negative round-off floor; this is a bug")]
    NegativeDensity { value: f64 },
}

/// Values more negative than this signal a broken positive-semidefinite
/// form rather than round-off.
const NEGATIVE_FLOOR: f64 = -1e-10;

/// Absorption and dispersion constants of the detector medium.
///
/// `gamma` sets the absorption law `α_k = γ·k`; equivalently the combined
/// sensitivity-density factor is `s·ρ_a = 4γ` (with `ħ = ε₀ = 1`), which is
/// the only combination in which the microscopic constants ever appear.
/// `tau` is the detection delay used by the first-order kernel; it starts at
/// zero and is normally set by [`DetectorParams::fit_tau`].
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorParams {
    gamma: f64,
    n_index: f64,
    c_light: f64,
    k0: f64,
    tau: f64,
}

impl DetectorParams {
    pub fn new(gamma: f64, n_index: f64, grid: &ModeGrid) -> Result<Self, KernelError> {
        if gamma <= 0.0 || !gamma.is_finite() {
            return Err(KernelError::InvalidParameter {
                name: "gamma",
                value: gamma,
            });
        }
        if n_index < 1.0 || !n_index.is_finite() {
            return Err(KernelError::InvalidParameter {
                name: "n_index",
                value: n_index,
            });
        }
        Ok(DetectorParams {
            gamma,
            n_index,
            c_light: grid.c_light(),
            k0: grid.k0(),
            tau: 0.0,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn n_index(&self) -> f64 {
        self.n_index
    }

    pub fn c_light(&self) -> f64 {
        self.c_light
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn set_tau(&mut self, tau: f64) {
        self.tau = tau;
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    /// Absorption probability per unit length, `α_k = γ·k`.
    pub fn alpha(&self, k: f64) -> Result<f64, KernelError> {
        if k <= 0.0 || k.is_nan() {
            return Err(KernelError::NonPositiveK { k });
        }
        Ok(self.gamma * k)
    }

    /// Combined sensitivity-density factor `s·ρ_a = 4γ` (`ħ = ε₀ = 1`).
    pub fn s_rho(&self) -> f64 {
        4.0 * self.gamma
    }

    /// First-order delay from the analytic expansion of the kernel factor,
    /// `τ = n/(2·c·α_{k0})`. [`Self::fit_tau`] must reproduce this within a
    /// few percent on a narrowband grid.
    pub fn analytic_tau(&self) -> f64 {
        self.n_index / (2.0 * self.c_light * self.gamma * self.k0)
    }

    /// Exact kernel factor `sqrt(k_bra·k_ket)/(α_bra + α_ket + i·n·(k_ket − k_bra))`
    /// pairing the conjugated (bra) mode with the ket mode.
    pub fn exact_weight(&self, k_bra: f64, k_ket: f64) -> Complex64 {
        let num = (k_bra * k_ket).sqrt();
        let den = Complex64::new(self.gamma * (k_bra + k_ket), self.n_index * (k_ket - k_bra));
        num / den
    }

    /// Fits the detection delay as the linear phase slope of the exact
    /// kernel factor against `(k_bra − k_ket)·c`, least squares over the
    /// adjacent pairs of distinct wavenumber shells on the grid (the locally
    /// linear window around `k0`), and stores it.
    ///
    /// Fails with [`KernelError::InsufficientBandwidth`] when the grid has
    /// fewer than 3 distinct magnitudes.
    pub fn fit_tau(&mut self, grid: &ModeGrid) -> Result<f64, KernelError> {
        self.check_grid(grid)?;
        let ks = grid.k_magnitudes();
        if ks.len() < 3 {
            return Err(KernelError::InsufficientBandwidth { distinct: ks.len() });
        }
        let mut xs = Vec::with_capacity(2 * (ks.len() - 1));
        let mut ys = Vec::with_capacity(2 * (ks.len() - 1));
        for pair in ks.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            for (bra, ket) in [(lo, hi), (hi, lo)] {
                xs.push((bra - ket) * self.c_light);
                ys.push(self.exact_weight(bra, ket).arg());
            }
        }
        let tau = crate::linalg::fit_slope_through_origin(&xs, &ys);
        self.tau = tau;
        Ok(tau)
    }

    fn check_grid(&self, grid: &ModeGrid) -> Result<(), KernelError> {
        if self.k0 != grid.k0() || self.c_light != grid.c_light() {
            return Err(KernelError::GridMismatch);
        }
        Ok(())
    }
}

fn clamp_density(value: f64) -> Result<f64, KernelError> {
    if value < NEGATIVE_FLOOR {
        return Err(KernelError::NegativeDensity { value });
    }
    Ok(value.max(0.0))
}

/// Expectation of the exact thick-detector counting kernel on a one-photon
/// state at the detector plane. Real and (after the round-off clamp)
/// nonnegative; a value below the `−1e−10` floor is reported as a bug.
pub fn w1_exact(
    params: &DetectorParams,
    state: &OnePhotonState,
    x: f64,
    y: f64,
    t: f64,
) -> Result<f64, KernelError> {
    let grid = state.grid();
    params.check_grid(grid)?;
    let modes = grid.modes();
    let n = modes.len();
    let c = grid.c_light();
    let pref = params.s_rho() * c / (2.0 * grid.volume());

    // u_b = c_b · exp(−i(k_bx·x + k_by·y) + i·k_b·c·t); the quadratic form
    // Σ conj(u_a)·X(a,b)·u_b then carries the phases of the double sum.
    let mut acc = Complex64::new(0.0, 0.0);
    for h in Helicity::BOTH {
        let u: Vec<Complex64> = (0..n)
            .map(|i| {
                let m = &modes[i];
                state.amplitude(i, h)
                    * Complex64::from_polar(1.0, -(m.kx * x + m.ky * y) + m.k * c * t)
            })
            .collect();
        for a in 0..n {
            if u[a].norm_sqr() == 0.0 {
                continue;
            }
            for b in 0..n {
                if u[b].norm_sqr() == 0.0 {
                    continue;
                }
                acc += u[a].conj() * params.exact_weight(modes[a].k, modes[b].k) * u[b];
            }
        }
    }
    clamp_density(pref * acc.re)
}

/// First-order (narrowband) counting kernel: a delayed flux measurement,
/// `w1 = c·Σ_σ|ψ_σ(x, y, 0, t − τ)|²`, evaluated as an explicit double mode
/// sum so it exercises a code path independent of
/// [`OnePhotonState::flux_density`].
pub fn w1_first_order(
    params: &DetectorParams,
    state: &OnePhotonState,
    x: f64,
    y: f64,
    t: f64,
) -> Result<f64, KernelError> {
    let grid = state.grid();
    params.check_grid(grid)?;
    let modes = grid.modes();
    let n = modes.len();
    let c = grid.c_light();
    let shifted = t - params.tau;
    let mut acc = Complex64::new(0.0, 0.0);
    for h in Helicity::BOTH {
        let u: Vec<Complex64> = (0..n)
            .map(|i| {
                let m = &modes[i];
                state.amplitude(i, h)
                    * Complex64::from_polar(1.0, -(m.kx * x + m.ky * y) + m.k * c * shifted)
            })
            .collect();
        for a in 0..n {
            if u[a].norm_sqr() == 0.0 {
                continue;
            }
            for b in 0..n {
                acc += u[a].conj() * u[b];
            }
        }
    }
    clamp_density(c / grid.volume() * acc.re)
}

/// Time-ordered two-photon coincidence rate at the detector plane:
/// `c²·Σ_{σσ'} |ψ_{σσ'}(x, y, 0, t−τ; x', y', 0, t'−τ)|²`. Symmetric under
/// swapping the two detection events.
#[allow(clippy::too_many_arguments)]
pub fn w2(
    params: &DetectorParams,
    state: &TwoPhotonState,
    x: f64,
    y: f64,
    t: f64,
    x2: f64,
    y2: f64,
    t2: f64,
) -> Result<f64, KernelError> {
    let grid = state.grid();
    params.check_grid(grid)?;
    let c = grid.c_light();
    let psi = state.wave_function([x, y, 0.0], t - params.tau, [x2, y2, 0.0], t2 - params.tau);
    let sum: f64 = psi
        .iter()
        .flat_map(|row| row.iter())
        .map(|v| v.norm_sqr())
        .sum();
    Ok(c * c * sum)
}

/// Largest deviation of the first-order kernel from the exact kernel over a
/// time scan at fixed `(x, y)`, normalized by the scan's peak exact value.
pub fn first_order_deviation(
    params: &DetectorParams,
    state: &OnePhotonState,
    x: f64,
    y: f64,
    times: &[f64],
) -> Result<f64, KernelError> {
    let mut worst = 0.0f64;
    let mut peak = 0.0f64;
    for &t in times {
        let e = w1_exact(params, state, x, y, t)?;
        let f = w1_first_order(params, state, x, y, t)?;
        worst = worst.max((e - f).abs());
        peak = peak.max(e);
    }
    if peak == 0.0 {
        return Err(KernelError::NegativeDensity { value: 0.0 });
    }
    Ok(worst / peak)
}
