//! Discrete paraxial mode lattice and transverse polarization bases.
//!
//! Modes live on a rectangular wave-vector lattice defined by periodic
//! boundary conditions over the quantization volume `V = c·T·A`, where
//! `A = Lx·Ly` is the transverse box and `T` the time window:
//!
//! ```text
//! kx = 2π·mx/Lx,   ky = 2π·my/Ly,   k = k0 + 2π·mz/(c·T)
//! ```
//!
//! The wavenumber magnitude `k` is gridded directly (the longitudinal
//! component `kz = sqrt(k² − kx² − ky²)` is derived, never stored) because
//! after the thick-detector z-integration every downstream formula depends
//! only on `(kx, ky, k)`. Each mode carries the per-mode field normalization
//! `E_k = sqrt(k·c/(2V))` (units `ħ = ε₀ = 1`).
//!
//! Every mode must be propagating (`kx² + ky² < k²`) and paraxial
//! (`(kx² + ky²)/k² ≤ paraxial_limit`). Both are hard construction errors,
//! not warnings: the pixel-locality of detection and the identification of
//! the absorbed polarization with helicity are only valid near normal
//! incidence, so a grid that violates them would silently break the
//! identities the rest of the crate asserts.

use num_complex::Complex64;
use std::f64::consts::TAU;
use thiserror::Error;

/// Construction errors for [`build_mode_grid`]. Offending index triples are
/// always identified so a bad config line can be traced to a mode.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModeSpaceError {
    #[error("{name} must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("empty index range on the {axis} axis")]
    EmptyIndexRange { axis: char },
    #[error("mode ({mx},{my},{mz}) has non-positive wavenumber k = {k}")]
    NonPositiveWavenumber { mx: i32, my: i32, mz: i32, k: f64 },
    #[error("mode ({mx},{my},{mz}) is not propagating: kx²+ky² ≥ k²")]
    NonPropagatingMode { mx: i32, my: i32, mz: i32 },
    #[error(
        "mode ({mx},{my},{mz}) violates the paraxial limit: (kx²+ky²)/k² = {ratio:.6} > {limit}"
    )]
    ParaxialViolation {
        mx: i32,
        my: i32,
        mz: i32,
        ratio: f64,
        limit: f64,
    },
}

/// A single lattice mode. `kx`, `ky`, `k` are derived from the integer
/// indices at construction; `e_field` is `E_k = sqrt(k·c/(2V))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub mx: i32,
    pub my: i32,
    pub mz: i32,
    pub kx: f64,
    pub ky: f64,
    pub k: f64,
    pub e_field: f64,
}

impl Mode {
    /// Derived longitudinal wave-vector component.
    pub fn kz(&self) -> f64 {
        (self.k * self.k - self.kx * self.kx - self.ky * self.ky).sqrt()
    }

    /// `(kx² + ky²)/k²`, the quantity bounded by the paraxial limit.
    pub fn transverse_ratio(&self) -> f64 {
        (self.kx * self.kx + self.ky * self.ky) / (self.k * self.k)
    }

    /// Polar angle of the wave vector, from the exact spherical
    /// decomposition of `(kx, ky, kz)`, with no small-angle approximation, so
    /// polarization orthonormality is exact even at the paraxial boundary.
    pub fn theta(&self) -> f64 {
        let kt = (self.kx * self.kx + self.ky * self.ky).sqrt();
        kt.atan2(self.kz())
    }

    /// Azimuthal angle in `[0, 2π)`.
    pub fn phi(&self) -> f64 {
        if self.kx == 0.0 && self.ky == 0.0 {
            return 0.0;
        }
        let p = self.ky.atan2(self.kx);
        if p < 0.0 {
            p + TAU
        } else {
            p
        }
    }
}

/// Inputs for [`build_mode_grid`]. Index ranges are inclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub lx: f64,
    pub ly: f64,
    pub t_window: f64,
    pub k0: f64,
    pub mx_range: (i32, i32),
    pub my_range: (i32, i32),
    pub mz_range: (i32, i32),
    pub paraxial_limit: f64,
    pub c_light: f64,
}

impl GridSpec {
    /// Spec with the given box and carrier, a single `(0,0,0)` mode and the
    /// defaults `paraxial_limit = 0.01`, `c = 1`.
    pub fn new(lx: f64, ly: f64, t_window: f64, k0: f64) -> Self {
        GridSpec {
            lx,
            ly,
            t_window,
            k0,
            mx_range: (0, 0),
            my_range: (0, 0),
            mz_range: (0, 0),
            paraxial_limit: 0.01,
            c_light: 1.0,
        }
    }

    pub fn with_ranges(mut self, mx: (i32, i32), my: (i32, i32), mz: (i32, i32)) -> Self {
        self.mx_range = mx;
        self.my_range = my;
        self.mz_range = mz;
        self
    }

    pub fn with_paraxial_limit(mut self, limit: f64) -> Self {
        self.paraxial_limit = limit;
        self
    }

    pub fn with_c_light(mut self, c: f64) -> Self {
        self.c_light = c;
        self
    }
}

/// The discrete mode lattice. Immutable after construction; safe to share
/// across any number of reader threads.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeGrid {
    spec: GridSpec,
    modes: Vec<Mode>,
}

/// Builds the lattice from a [`GridSpec`].
///
/// The mode list is ordered lexicographically in `(mx, my, mz)` and is
/// bit-identical across rebuilds from the same spec. Any requested index
/// triple that is non-propagating or exceeds the paraxial limit is a hard
/// error naming the triple; modes are never silently dropped.
pub fn build_mode_grid(spec: &GridSpec) -> Result<ModeGrid, ModeSpaceError> {
    for (name, value) in [
        ("Lx", spec.lx),
        ("Ly", spec.ly),
        ("T", spec.t_window),
        ("k0", spec.k0),
        ("c", spec.c_light),
        ("paraxial_limit", spec.paraxial_limit),
    ] {
        if value <= 0.0 || !value.is_finite() {
            return Err(ModeSpaceError::NonPositiveParameter { name, value });
        }
    }
    for (axis, (lo, hi)) in [
        ('x', spec.mx_range),
        ('y', spec.my_range),
        ('z', spec.mz_range),
    ] {
        if lo > hi {
            return Err(ModeSpaceError::EmptyIndexRange { axis });
        }
    }

    let volume = spec.c_light * spec.t_window * spec.lx * spec.ly;
    let mut modes = Vec::with_capacity(
        range_len(spec.mx_range) * range_len(spec.my_range) * range_len(spec.mz_range),
    );
    for mx in spec.mx_range.0..=spec.mx_range.1 {
        for my in spec.my_range.0..=spec.my_range.1 {
            for mz in spec.mz_range.0..=spec.mz_range.1 {
                let kx = TAU * f64::from(mx) / spec.lx;
                let ky = TAU * f64::from(my) / spec.ly;
                let k = spec.k0 + TAU * f64::from(mz) / (spec.c_light * spec.t_window);
                if k <= 0.0 {
                    return Err(ModeSpaceError::NonPositiveWavenumber { mx, my, mz, k });
                }
                let kt2 = kx * kx + ky * ky;
                if kt2 >= k * k {
                    return Err(ModeSpaceError::NonPropagatingMode { mx, my, mz });
                }
                let ratio = kt2 / (k * k);
                if ratio > spec.paraxial_limit {
                    return Err(ModeSpaceError::ParaxialViolation {
                        mx,
                        my,
                        mz,
                        ratio,
                        limit: spec.paraxial_limit,
                    });
                }
                let e_field = (k * spec.c_light / (2.0 * volume)).sqrt();
                modes.push(Mode {
                    mx,
                    my,
                    mz,
                    kx,
                    ky,
                    k,
                    e_field,
                });
            }
        }
    }
    Ok(ModeGrid {
        spec: spec.clone(),
        modes,
    })
}

fn range_len(r: (i32, i32)) -> usize {
    if r.0 > r.1 {
        0
    } else {
        (r.1 - r.0 + 1) as usize
    }
}

impl ModeGrid {
    /// Quantization volume `V = c·T·Lx·Ly`, exactly as stored.
    pub fn volume(&self) -> f64 {
        self.spec.c_light * self.spec.t_window * self.spec.lx * self.spec.ly
    }

    /// Transverse box area `A = Lx·Ly`.
    pub fn area(&self) -> f64 {
        self.spec.lx * self.spec.ly
    }

    pub fn lx(&self) -> f64 {
        self.spec.lx
    }

    pub fn ly(&self) -> f64 {
        self.spec.ly
    }

    pub fn t_window(&self) -> f64 {
        self.spec.t_window
    }

    pub fn k0(&self) -> f64 {
        self.spec.k0
    }

    pub fn c_light(&self) -> f64 {
        self.spec.c_light
    }

    pub fn paraxial_limit(&self) -> f64 {
        self.spec.paraxial_limit
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn mode(&self, index: usize) -> &Mode {
        &self.modes[index]
    }

    /// Wavenumber spacing `2π/(c·T)` of the magnitude lattice.
    pub fn dk(&self) -> f64 {
        TAU / (self.spec.c_light * self.spec.t_window)
    }

    /// Distinct wavenumber magnitudes present on the grid, ascending.
    pub fn k_magnitudes(&self) -> Vec<f64> {
        (self.spec.mz_range.0..=self.spec.mz_range.1)
            .map(|mz| self.spec.k0 + TAU * f64::from(mz) / (self.spec.c_light * self.spec.t_window))
            .collect()
    }
}

/// Photon helicity, the spin projection along the wave vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Helicity {
    Plus,
    Minus,
}

impl Helicity {
    pub const BOTH: [Helicity; 2] = [Helicity::Plus, Helicity::Minus];

    /// `σ = ±1`.
    pub fn sign(self) -> f64 {
        match self {
            Helicity::Plus => 1.0,
            Helicity::Minus => -1.0,
        }
    }

    /// Storage index: `Plus → 0`, `Minus → 1`.
    pub fn index(self) -> usize {
        match self {
            Helicity::Plus => 0,
            Helicity::Minus => 1,
        }
    }

    pub fn from_index(index: usize) -> Option<Helicity> {
        match index {
            0 => Some(Helicity::Plus),
            1 => Some(Helicity::Minus),
            _ => None,
        }
    }

    pub fn from_sign(sign: i32) -> Option<Helicity> {
        match sign {
            1 => Some(Helicity::Plus),
            -1 => Some(Helicity::Minus),
            _ => None,
        }
    }

    pub fn flipped(self) -> Helicity {
        match self {
            Helicity::Plus => Helicity::Minus,
            Helicity::Minus => Helicity::Plus,
        }
    }
}

/// Gauge choice for the transverse basis: the pair of unit vectors is
/// rotated about `k̂` through the Euler angle `χ(θ, φ)`.
///
/// - `Circular` (`χ = 0`): definite-helicity vectors
///   `e_σ = (θ̂ + iσφ̂)/√2`, circularly polarized in the paraxial limit.
/// - `Linear` (`χ = −φ`): the rotation carries the transverse axes back onto
///   the `x`/`y` directions, so the basis pair is real and reduces exactly to
///   `x̂` (σ = +1) and `ŷ` (σ = −1) at `θ = 0`, describing linearly
///   polarized photons in the paraxial limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChiConvention {
    Circular,
    Linear,
}

/// Transverse polarization unit vector for the propagation direction
/// `k̂(θ, φ)`, helicity label `σ`, and gauge convention.
///
/// Always unit-norm, orthogonal to `k̂`, and orthogonal to the opposite
/// label under the Hermitian inner product. Total on its domain.
pub fn polarization_vector(
    theta: f64,
    phi: f64,
    helicity: Helicity,
    convention: ChiConvention,
) -> [Complex64; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    // spherical triad, right-handed: θ̂ × φ̂ = k̂
    let theta_hat = [ct * cp, ct * sp, -st];
    let phi_hat = [-sp, cp, 0.0];
    match convention {
        ChiConvention::Circular => {
            let s = helicity.sign();
            let inv = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            [0, 1, 2].map(|i| inv * Complex64::new(theta_hat[i], s * phi_hat[i]))
        }
        ChiConvention::Linear => {
            // Rotation of (θ̂, φ̂) about k̂ through χ = −φ.
            let axes = match helicity {
                Helicity::Plus => [0, 1, 2].map(|i| cp * theta_hat[i] - sp * phi_hat[i]),
                Helicity::Minus => [0, 1, 2].map(|i| sp * theta_hat[i] + cp * phi_hat[i]),
            };
            axes.map(|v| Complex64::new(v, 0.0))
        }
    }
}

/// Polarization vector of a lattice mode, using its exact `(θ, φ)`.
pub fn mode_polarization(
    mode: &Mode,
    helicity: Helicity,
    convention: ChiConvention,
) -> [Complex64; 3] {
    polarization_vector(mode.theta(), mode.phi(), helicity, convention)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn canonical_spec() -> GridSpec {
        GridSpec::new(TAU, TAU, TAU, 10.0)
            .with_ranges((-1, 1), (-1, 1), (-2, 2))
            .with_paraxial_limit(0.05)
    }

    #[test]
    fn canonical_grid_has_45_modes_with_center_k() {
        let grid = build_mode_grid(&canonical_spec()).unwrap();
        assert_eq!(grid.len(), 45);
        let center = grid
            .modes()
            .iter()
            .find(|m| (m.mx, m.my, m.mz) == (0, 0, 0))
            .unwrap();
        assert_eq!(center.k, 10.0);
    }

    #[test]
    fn volume_is_ctla_exactly() {
        let spec = GridSpec::new(3.0, 5.0, 7.0, 10.0).with_c_light(2.0);
        let grid = build_mode_grid(&spec).unwrap();
        assert_eq!(grid.volume(), 2.0 * 7.0 * 3.0 * 5.0);
    }

    #[test]
    fn paraxial_violation_identifies_triple() {
        // kx = 3 at k = 10: ratio (3/10)² = 0.09 > 0.01.
        let spec = GridSpec::new(TAU, TAU, TAU, 10.0).with_ranges((3, 3), (0, 0), (0, 0));
        match build_mode_grid(&spec) {
            Err(ModeSpaceError::ParaxialViolation {
                mx, my, mz, ratio, ..
            }) => {
                assert_eq!((mx, my, mz), (3, 0, 0));
                assert!((ratio - 0.09).abs() < 1e-15);
            }
            other => panic!("expected ParaxialViolation, got {other:?}"),
        }
    }

    #[test]
    fn non_propagating_mode_is_an_error() {
        // k = 0.5 at kx = 1 is evanescent.
        let spec = GridSpec::new(TAU, TAU, TAU, 0.5)
            .with_ranges((1, 1), (0, 0), (0, 0))
            .with_paraxial_limit(1.0);
        assert!(matches!(
            build_mode_grid(&spec),
            Err(ModeSpaceError::NonPropagatingMode {
                mx: 1,
                my: 0,
                mz: 0
            })
        ));
    }

    #[test]
    fn non_positive_wavenumber_is_an_error() {
        let spec = GridSpec::new(TAU, TAU, TAU, 1.0).with_ranges((0, 0), (0, 0), (-3, 0));
        assert!(matches!(
            build_mode_grid(&spec),
            Err(ModeSpaceError::NonPositiveWavenumber { mz: -3, .. })
        ));
    }

    #[test]
    fn empty_range_is_an_error() {
        let spec = GridSpec::new(TAU, TAU, TAU, 10.0).with_ranges((1, -1), (0, 0), (0, 0));
        assert!(matches!(
            build_mode_grid(&spec),
            Err(ModeSpaceError::EmptyIndexRange { axis: 'x' })
        ));
    }

    #[test]
    fn e_field_scales_as_sqrt_k() {
        // Same volume, two carriers a factor 4 apart: E_k ratio is exactly 2.
        let g1 = build_mode_grid(&GridSpec::new(TAU, TAU, TAU, 4.0)).unwrap();
        let g2 = build_mode_grid(&GridSpec::new(TAU, TAU, TAU, 16.0)).unwrap();
        let ratio = g2.mode(0).e_field / g1.mode(0).e_field;
        assert!((ratio - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rebuild_is_bit_identical() {
        let a = build_mode_grid(&canonical_spec()).unwrap();
        let b = build_mode_grid(&canonical_spec()).unwrap();
        assert_eq!(a, b);
        for (ma, mb) in a.modes().iter().zip(b.modes()) {
            assert_eq!(ma.k.to_bits(), mb.k.to_bits());
            assert_eq!(ma.e_field.to_bits(), mb.e_field.to_bits());
        }
    }

    #[test]
    fn mode_order_is_lexicographic_without_duplicates() {
        let grid = build_mode_grid(&canonical_spec()).unwrap();
        let triples: Vec<_> = grid.modes().iter().map(|m| (m.mx, m.my, m.mz)).collect();
        let mut sorted = triples.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(triples, sorted);
    }

    fn dot_conj(a: &[Complex64; 3], b: &[Complex64; 3]) -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
    }

    #[test]
    fn circular_vectors_at_normal_incidence() {
        // e_{±1} = (x̂ + iσŷ)/√2 at θ = 0.
        let e = polarization_vector(0.0, 0.0, Helicity::Plus, ChiConvention::Circular);
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e[0] - Complex64::new(inv, 0.0)).norm() < 1e-15);
        assert!((e[1] - Complex64::new(0.0, inv)).norm() < 1e-15);
        assert!(e[2].norm() < 1e-15);
    }

    #[test]
    fn linear_vectors_reduce_to_x_and_y_at_normal_incidence() {
        for phi in [0.0, 0.7, 2.9, 5.5] {
            let ex = polarization_vector(0.0, phi, Helicity::Plus, ChiConvention::Linear);
            let ey = polarization_vector(0.0, phi, Helicity::Minus, ChiConvention::Linear);
            assert!(
                (ex[0] - Complex64::new(1.0, 0.0)).norm() < 1e-14,
                "phi={phi}"
            );
            assert!(ex[1].norm() < 1e-14 && ex[2].norm() < 1e-14);
            assert!((ey[1] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
            assert!(ey[0].norm() < 1e-14 && ey[2].norm() < 1e-14);
        }
    }

    #[test]
    fn polarization_triad_is_orthonormal_and_transverse() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let theta = rng.random::<f64>() * std::f64::consts::PI * 0.999;
            let phi = rng.random::<f64>() * TAU;
            let khat = [
                theta.sin() * phi.cos(),
                theta.sin() * phi.sin(),
                theta.cos(),
            ];
            for convention in [ChiConvention::Circular, ChiConvention::Linear] {
                let ep = polarization_vector(theta, phi, Helicity::Plus, convention);
                let em = polarization_vector(theta, phi, Helicity::Minus, convention);
                let norm_p = dot_conj(&ep, &ep).re;
                let norm_m = dot_conj(&em, &em).re;
                let cross = dot_conj(&ep, &em).norm();
                let trans_p: Complex64 = (0..3).map(|i| ep[i] * khat[i]).sum();
                let trans_m: Complex64 = (0..3).map(|i| em[i] * khat[i]).sum();
                assert!((norm_p - 1.0).abs() < 1e-13);
                assert!((norm_m - 1.0).abs() < 1e-13);
                assert!(cross < 1e-13);
                assert!(trans_p.norm() < 1e-13);
                assert!(trans_m.norm() < 1e-13);
            }
        }
    }

    #[test]
    fn mode_angles_match_wave_vector() {
        let grid = build_mode_grid(&canonical_spec()).unwrap();
        for m in grid.modes() {
            let kt = (m.kx * m.kx + m.ky * m.ky).sqrt();
            assert!((m.theta().sin() * m.k - kt).abs() < 1e-12);
            assert!((m.kz() * m.kz() + kt * kt - m.k * m.k).abs() < 1e-10);
        }
    }
}
