//! Photon counting on a discrete mode lattice.
//!
//! This crate is a numerical laboratory for photodetection by a pixelated
//! counting array. It builds, from first principles, the measurement
//! operators of an absorptive detector and turns the identities they satisfy
//! into machine-checkable invariants:
//!
//! - [`mode_space`]: a discrete paraxial wave-vector lattice with periodic
//!   boundary conditions over the quantization volume `V = c·T·A`, plus
//!   helicity polarization bases.
//! - [`photon_states`]: one- and two-photon states, their localized-basis
//!   wave functions, and flux / coincidence densities.
//! - [`detector_kernel`]: the in-detector absorption law `α_k = γ·k`, the
//!   exact thick-detector counting kernel, its narrowband (first-order)
//!   reduction `c·n̂(t−τ)`, and the detection delay `τ`.
//! - [`povm`]: pixel/time measurement operators as explicit Hermitian
//!   matrices on the one-photon space, completeness and positivity checks,
//!   and time-ordered two-photon coincidence probabilities.
//! - [`measurement_sim`]: seeded Monte Carlo sampling of detection outcomes
//!   and the post-measurement collapse records (uniform atomic excitation in
//!   the firing pixel, photon field in vacuum).
//! - [`cli_io`]: config parsing, experiment orchestration and CSV emission
//!   for the `photon-povm` binary.
//!
//! Units: `ħ = ε₀ = 1`, with the speed of light configurable (default 1).
//!
//! # Quick start
//!
//! ```
//! use photon_povm::mode_space::{build_mode_grid, GridSpec};
//! use photon_povm::photon_states::{GaussianPulse, OnePhotonState};
//! use photon_povm::detector_kernel::DetectorParams;
//! use photon_povm::povm::{completeness_residual, KernelKind, PixelGrid};
//! use std::sync::Arc;
//!
//! let spec = GridSpec::new(2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI,
//!                          2.0 * std::f64::consts::PI, 10.0)
//!     .with_ranges((-1, 1), (-1, 1), (-2, 2))
//!     .with_paraxial_limit(0.05);
//! let grid = Arc::new(build_mode_grid(&spec).unwrap());
//! let params = DetectorParams::new(0.05, 1.0, &grid).unwrap();
//! let pixels = PixelGrid::new(&grid, 4, 4, 4).unwrap();
//!
//! // Summed over a full pixel tiling and the full time window, the
//! // first-order elements resolve the identity.
//! let residual = completeness_residual(&params, &grid, &pixels, KernelKind::FirstOrder).unwrap();
//! assert!(residual < 1e-10);
//! ```

pub mod cli_io;
pub mod detector_kernel;
pub mod linalg;
pub mod measurement_sim;
pub mod mode_space;
pub mod photon_states;
pub mod povm;
pub mod tolerances;

/// Book chapters double as doc-tests so the guide under `book/` can never
/// drift from the library. `cargo test --doc` runs every fenced Rust block.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/modes.md")]
    mod modes {}
    #[doc = include_str!("../../../book/src/states.md")]
    mod states {}
    #[doc = include_str!("../../../book/src/kernel.md")]
    mod kernel {}
    #[doc = include_str!("../../../book/src/povm.md")]
    mod povm {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    mod sampling {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
