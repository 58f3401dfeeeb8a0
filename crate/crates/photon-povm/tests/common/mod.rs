//! Shared fixtures and independent oracles for the integration suites.
//!
//! The oracles here deliberately avoid the library's quadrature and
//! assembly paths: ordered time integrals are closed-form and transverse
//! pixel integrals are rebuilt from scratch.

// each integration test binary compiles this module; not all use every item
#![allow(dead_code)]

use num_complex::Complex64;
use photon_povm::detector_kernel::DetectorParams;
use photon_povm::mode_space::{build_mode_grid, GridSpec, Helicity, ModeGrid};
use photon_povm::photon_states::{flat_index, TwoPhotonState};
use photon_povm::povm::{PixelGrid, PixelIndex};
use std::f64::consts::TAU;
use std::sync::Arc;

/// The canonical 45-mode grid (3×3 transverse, 5 shells, k0 = 10).
pub fn grid_45() -> Arc<ModeGrid> {
    Arc::new(
        build_mode_grid(
            &GridSpec::new(TAU, TAU, TAU, 10.0)
                .with_ranges((-1, 1), (-1, 1), (-2, 2))
                .with_paraxial_limit(0.05),
        )
        .unwrap(),
    )
}

/// Axial grid with `2·half + 1` shells spaced `dk` around `k0`.
pub fn axial_grid(k0: f64, dk: f64, half: i32) -> Arc<ModeGrid> {
    Arc::new(
        build_mode_grid(&GridSpec::new(TAU, TAU, TAU / dk * 1.0, k0).with_ranges(
            (0, 0),
            (0, 0),
            (-half, half),
        ))
        .unwrap(),
    )
}

/// Single-shell transverse grid (9 modes at k = k0).
pub fn shell_grid() -> Arc<ModeGrid> {
    Arc::new(
        build_mode_grid(
            &GridSpec::new(TAU, TAU, TAU, 10.0)
                .with_ranges((-1, 1), (-1, 1), (0, 0))
                .with_paraxial_limit(0.05),
        )
        .unwrap(),
    )
}

/// Three axial shells: the smallest grid with enough bandwidth for a τ fit.
pub fn axial_pair_grid() -> Arc<ModeGrid> {
    Arc::new(
        build_mode_grid(&GridSpec::new(TAU, TAU, TAU, 10.0).with_ranges((0, 0), (0, 0), (-1, 1)))
            .unwrap(),
    )
}

/// `∫ exp(iΔ·u) du` over `[lo, hi]`, rebuilt for the oracle path.
pub fn phase_integral(delta: f64, lo: f64, hi: f64) -> Complex64 {
    let len = hi - lo;
    let mid = 0.5 * (lo + hi);
    let x = 0.5 * delta * len;
    let sinc = if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    };
    Complex64::from_polar(1.0, delta * mid) * (len * sinc)
}

/// Closed-form `∫_0^T dt e^{−iω(t−τ)} ∫_0^t dt' e^{−iω'(t'−τ)}`.
pub fn ordered_phase_integral(omega: f64, omega2: f64, t_len: f64, tau: f64) -> Complex64 {
    let shift = Complex64::from_polar(1.0, (omega + omega2) * tau);
    let i = Complex64::new(0.0, 1.0);
    let inner = |w: f64, t: f64| -> Complex64 {
        if w.abs() < 1e-12 {
            Complex64::new(t, 0.0)
        } else {
            (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -w * t)) / (i * w)
        }
    };
    if omega2.abs() < 1e-12 {
        if omega.abs() < 1e-12 {
            return shift * Complex64::new(0.5 * t_len * t_len, 0.0);
        }
        let e = Complex64::from_polar(1.0, -omega * t_len);
        let val = (e * Complex64::new(t_len, 0.0)) / (-i * omega)
            - (e - 1.0) / Complex64::new(-omega * omega, 0.0);
        return shift * val;
    }
    let a = inner(omega, t_len);
    let b = inner(omega + omega2, t_len);
    shift * (a - b) / (i * omega2)
}

/// Brute-force contraction oracle for the ordered two-photon pixel-pair
/// probability over the full time window: an explicit quadruple mode sum
/// with analytic transverse and ordered-time integrals.
pub fn two_photon_pair_oracle(
    params: &DetectorParams,
    state: &TwoPhotonState,
    pixels: &PixelGrid,
    pixel: PixelIndex,
    pixel2: PixelIndex,
) -> f64 {
    let grid = state.grid();
    let modes = grid.modes();
    let n = modes.len();
    let c = grid.c_light();
    let t_len = grid.t_window();
    let (x0, x1) = pixels.x_bounds(pixel.ix);
    let (y0, y1) = pixels.y_bounds(pixel.iy);
    let (u0, u1) = pixels.x_bounds(pixel2.ix);
    let (v0, v1) = pixels.y_bounds(pixel2.iy);
    let amps = state.amplitudes();
    let mut total = Complex64::new(0.0, 0.0);
    for ha in Helicity::BOTH {
        for hb in Helicity::BOTH {
            for a in 0..n {
                for a2 in 0..n {
                    let ex = phase_integral(modes[a].kx - modes[a2].kx, x0, x1)
                        * phase_integral(modes[a].ky - modes[a2].ky, y0, y1);
                    if ex.norm_sqr() < 1e-60 {
                        continue;
                    }
                    for b in 0..n {
                        for b2 in 0..n {
                            let ca = amps[(flat_index(a, ha), flat_index(b, hb))];
                            let cb = amps[(flat_index(a2, ha), flat_index(b2, hb))];
                            if ca.norm_sqr() == 0.0 || cb.norm_sqr() == 0.0 {
                                continue;
                            }
                            let ey = phase_integral(modes[b].kx - modes[b2].kx, u0, u1)
                                * phase_integral(modes[b].ky - modes[b2].ky, v0, v1);
                            if ey.norm_sqr() < 1e-60 {
                                continue;
                            }
                            let omega = (modes[a].k - modes[a2].k) * c;
                            let omega2 = (modes[b].k - modes[b2].k) * c;
                            let it = ordered_phase_integral(omega, omega2, t_len, params.tau());
                            total += ca.conj() * cb * ex * ey * it;
                        }
                    }
                }
            }
        }
    }
    (2.0 * c * c / (grid.volume() * grid.volume()) * total).re
}
