//! Property tests for the algebraic invariants: polarization orthonormality,
//! serialization round trips, exchange symmetry, and probability bounds.

mod common;

use common::{axial_pair_grid, shell_grid};
use ndarray::Array2;
use num_complex::Complex64;
use photon_povm::detector_kernel::{w1_exact, DetectorParams};
use photon_povm::mode_space::{polarization_vector, ChiConvention, Helicity};
use photon_povm::photon_states::{OnePhotonState, TwoPhotonState};
use photon_povm::povm::{povm_element, probability, KernelKind, PixelGrid, PixelIndex};
use proptest::prelude::*;
use std::sync::Arc;

fn dot_conj(a: &[Complex64; 3], b: &[Complex64; 3]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

proptest! {
    /// Unit norm, transversality, and helicity orthogonality hold for every
    /// propagation direction and both gauge conventions.
    #[test]
    fn polarization_orthonormal_transverse(
        theta in 0.0..std::f64::consts::PI,
        phi in 0.0..std::f64::consts::TAU,
        linear in any::<bool>(),
    ) {
        let convention = if linear { ChiConvention::Linear } else { ChiConvention::Circular };
        let ep = polarization_vector(theta, phi, Helicity::Plus, convention);
        let em = polarization_vector(theta, phi, Helicity::Minus, convention);
        let khat = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
        prop_assert!((dot_conj(&ep, &ep).re - 1.0).abs() < 1e-13);
        prop_assert!((dot_conj(&em, &em).re - 1.0).abs() < 1e-13);
        prop_assert!(dot_conj(&ep, &em).norm() < 1e-13);
        let kp: Complex64 = (0..3).map(|i| ep[i] * khat[i]).sum();
        let km: Complex64 = (0..3).map(|i| em[i] * khat[i]).sum();
        prop_assert!(kp.norm() < 1e-13);
        prop_assert!(km.norm() < 1e-13);
    }
}

fn amplitude_strategy(len: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// CSV serialization restores every amplitude bit for bit.
    #[test]
    fn one_photon_csv_round_trip(raw in amplitude_strategy(6)) {
        let grid = axial_pair_grid();
        let mut amps = Array2::zeros((grid.len(), 2));
        for (i, (re, im)) in raw.iter().enumerate() {
            amps[(i / 2, i % 2)] = Complex64::new(*re, *im);
        }
        prop_assume!(amps.iter().any(|c: &Complex64| c.norm_sqr() > 0.0));
        let state = OnePhotonState::new(Arc::clone(&grid), amps).unwrap();
        let mut buf = Vec::new();
        state.write_csv(&mut buf).unwrap();
        let restored = OnePhotonState::read_csv(Arc::clone(&grid), buf.as_slice()).unwrap();
        for i in 0..grid.len() {
            for h in Helicity::BOTH {
                let a = state.amplitude(i, h);
                let b = restored.amplitude(i, h);
                prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
                prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
        }
    }

    /// The symmetric pair wave function is invariant under exchanging the
    /// two detection events (positions, times, and helicity labels).
    #[test]
    fn two_photon_exchange_symmetry(
        raw in amplitude_strategy(36),
        x1 in -3.0..3.0f64, y1 in -3.0..3.0f64, t1 in -2.0..2.0f64,
        x2 in -3.0..3.0f64, y2 in -3.0..3.0f64, t2 in -2.0..2.0f64,
    ) {
        let grid = axial_pair_grid();
        let dim = grid.len() * 2;
        let mut amps = Array2::zeros((dim, dim));
        for (idx, (re, im)) in raw.iter().enumerate() {
            amps[(idx / dim, idx % dim)] = Complex64::new(*re, *im);
        }
        prop_assume!(amps.iter().any(|c: &Complex64| c.norm_sqr() > 0.0));
        let state = TwoPhotonState::new(Arc::clone(&grid), amps).unwrap();
        let a = state.wave_function([x1, y1, 0.0], t1, [x2, y2, 0.0], t2);
        let b = state.wave_function([x2, y2, 0.0], t2, [x1, y1, 0.0], t1);
        for ha in 0..2 {
            for hb in 0..2 {
                prop_assert!((a[ha][hb] - b[hb][ha]).norm() < 1e-14);
            }
        }
    }

    /// Detection probabilities are phase-invariant and live in [0, 1+ε].
    #[test]
    fn probability_bounds_and_phase_invariance(
        raw in amplitude_strategy(18),
        phase in 0.0..std::f64::consts::TAU,
        ix in 0usize..2, iy in 0usize..2,
    ) {
        let grid = shell_grid();
        let mut amps = Array2::zeros((grid.len(), 2));
        for (i, (re, im)) in raw.iter().enumerate() {
            amps[(i / 2, i % 2)] = Complex64::new(*re, *im);
        }
        prop_assume!(amps.iter().any(|c: &Complex64| c.norm_sqr() > 0.0));
        let state = OnePhotonState::new(Arc::clone(&grid), amps).unwrap();
        let params = DetectorParams::new(0.05, 1.0, &grid).unwrap();
        let pixels = PixelGrid::new(&grid, 2, 2, 2).unwrap();
        let el = povm_element(
            &params,
            &grid,
            &pixels,
            PixelIndex { ix, iy },
            pixels.bin_window(1).unwrap(),
            KernelKind::FirstOrder,
        )
        .unwrap();
        let p = probability(&el, &state).unwrap();
        prop_assert!((0.0..=1.0 + 1e-10).contains(&p));
        let q = probability(&el, &state.with_global_phase(phase)).unwrap();
        prop_assert!((p - q).abs() < 1e-13);
    }

    /// The exact kernel is a positive form: real, nonnegative expectation
    /// on arbitrary states at arbitrary detector-plane points.
    #[test]
    fn exact_kernel_nonnegative(
        raw in amplitude_strategy(6),
        x in -3.0..3.0f64, y in -3.0..3.0f64, t in -5.0..5.0f64,
    ) {
        let grid = axial_pair_grid();
        let mut amps = Array2::zeros((grid.len(), 2));
        for (i, (re, im)) in raw.iter().enumerate() {
            amps[(i / 2, i % 2)] = Complex64::new(*re, *im);
        }
        prop_assume!(amps.iter().any(|c: &Complex64| c.norm_sqr() > 0.0));
        let state = OnePhotonState::new(Arc::clone(&grid), amps).unwrap();
        let params = DetectorParams::new(0.3, 1.5, &grid).unwrap();
        let w = w1_exact(&params, &state, x, y, t).unwrap();
        prop_assert!(w >= 0.0);
    }
}
