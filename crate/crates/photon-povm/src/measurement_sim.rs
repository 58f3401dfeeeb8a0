//! Seeded Monte Carlo detection sampling and post-measurement collapse.
//!
//! Outcome probabilities come from the measurement operators (one photon:
//! pixel × time bin; two photons: ordered pairs of them). Sampling is a
//! categorical draw with a named, versioned, stream-capable generator
//! (ChaCha12): trials are split into fixed-size blocks, block `w` draws from
//! stream `w` of the seed, so results are bit-identical regardless of how
//! many worker threads run the blocks.
//!
//! After a detection the photon sector collapses to the vacuum, not to a
//! localized one-photon state, and each detected photon leaves one pixel's
//! atoms in a uniform excitation superposition: amplitude `1/√(2N)` over the
//! `2N` (polarization × atom) labels of the firing pixel. The squared norm
//! `2N·(1/√(2N))² = 1` is checked in integer arithmetic.

use crate::detector_kernel::DetectorParams;
use crate::mode_space::ModeGrid;
use crate::photon_states::{OnePhotonState, TwoPhotonState};
use crate::povm::{
    povm_element, probability, two_photon_probability, KernelKind, PixelGrid, PixelIndex,
    PovmError, QuadSpec,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(
        "outcome probabilities sum to {sum}, deficit {deficit:e} beyond tolerance {tolerance:e}: the detector does not cover the pulse"
    )]
    ProbabilityDeficit {
        sum: f64,
        deficit: f64,
        tolerance: f64,
    },
    #[error("trials must be positive")]
    ZeroTrials,
    #[error("cannot collapse an empty detection record")]
    EmptyRecord,
    #[error("atoms per pixel must be at least 1")]
    InvalidAtoms,
    #[error("trial index {trial} out of range ({trials} trials)")]
    TrialOutOfRange { trial: usize, trials: usize },
    #[error(transparent)]
    Povm(#[from] PovmError),
}

/// One detected photon: which pixel fired, in which time bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DetectionEvent {
    pub pixel: PixelIndex,
    pub time_bin: usize,
}

/// The discrete outcome space sampling draws from: each outcome is the
/// ordered event list of one trial (J events for a J-photon input), with
/// its exact probability.
#[derive(Debug, Clone)]
pub struct OutcomeSpace {
    pub outcomes: Vec<Vec<DetectionEvent>>,
    pub probabilities: Vec<f64>,
}

impl OutcomeSpace {
    pub fn total_probability(&self) -> f64 {
        self.probabilities.iter().sum()
    }
}

/// Sampled detection record: the seed, the outcome space, and one outcome
/// index per trial. Identical inputs and seed reproduce this bit-exactly.
#[derive(Debug, Clone)]
pub struct DetectionRecord {
    pub seed: u64,
    pub space: OutcomeSpace,
    trial_outcomes: Vec<u32>,
}

const TRIALS_PER_BLOCK: u64 = 4096;

impl DetectionRecord {
    pub fn trials(&self) -> usize {
        self.trial_outcomes.len()
    }

    pub fn events_for_trial(&self, trial: usize) -> &[DetectionEvent] {
        &self.space.outcomes[self.trial_outcomes[trial] as usize]
    }

    pub fn outcome_index(&self, trial: usize) -> usize {
        self.trial_outcomes[trial] as usize
    }

    /// Counts per outcome index, ordered.
    pub fn counts(&self) -> BTreeMap<usize, u64> {
        let mut map = BTreeMap::new();
        for &o in &self.trial_outcomes {
            *map.entry(o as usize).or_insert(0u64) += 1;
        }
        map
    }

    /// Total variation distance between the empirical histogram and the
    /// exact outcome probabilities.
    pub fn total_variation(&self) -> f64 {
        let n = self.trials() as f64;
        let counts = self.counts();
        let mut tv = 0.0;
        for (i, &p) in self.space.probabilities.iter().enumerate() {
            let f = counts.get(&i).copied().unwrap_or(0) as f64 / n;
            tv += (f - p).abs();
        }
        0.5 * tv
    }

    /// CSV rows `(trial, photon, pixel_x, pixel_y, time_bin)` under a
    /// comment header carrying the seed.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# photon-povm detection record")?;
        writeln!(out, "# seed = {}", self.seed)?;
        writeln!(out, "trial,photon,pixel_x,pixel_y,time_bin")?;
        for trial in 0..self.trials() {
            for (j, ev) in self.events_for_trial(trial).iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    trial, j, ev.pixel.ix, ev.pixel.iy, ev.time_bin
                )?;
            }
        }
        Ok(())
    }
}

fn categorical_sample(space: &OutcomeSpace, trials: u64, seed: u64) -> Vec<u32> {
    let total: f64 = space.total_probability();
    let mut cumulative = Vec::with_capacity(space.probabilities.len());
    let mut acc = 0.0;
    for &p in &space.probabilities {
        acc += p.max(0.0) / total;
        cumulative.push(acc);
    }
    if let Some(last) = cumulative.last_mut() {
        *last = 1.0;
    }

    let blocks = trials.div_ceil(TRIALS_PER_BLOCK);
    let mut out: Vec<Vec<u32>> = (0..blocks)
        .into_par_iter()
        .map(|block| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(block + 1);
            let count = TRIALS_PER_BLOCK.min(trials - block * TRIALS_PER_BLOCK);
            (0..count)
                .map(|_| {
                    let u: f64 = rng.random();
                    cumulative.partition_point(|&c| c < u) as u32
                })
                .collect()
        })
        .collect();
    let mut flat = Vec::with_capacity(trials as usize);
    for block in out.drain(..) {
        flat.extend(block);
    }
    flat
}

/// Exact one-photon outcome probabilities over (pixel × time bin).
pub fn one_photon_outcomes(
    state: &OnePhotonState,
    pixels: &PixelGrid,
    params: &DetectorParams,
    kernel: KernelKind,
    grid: &Arc<ModeGrid>,
) -> Result<OutcomeSpace, SimError> {
    let mut outcomes = Vec::with_capacity(pixels.pixel_count() * pixels.time_bins());
    let mut probabilities = Vec::with_capacity(outcomes.capacity());
    for pixel in pixels.pixels() {
        for bin in 0..pixels.time_bins() {
            let window = pixels.bin_window(bin)?;
            let element = povm_element(params, grid, pixels, pixel, window, kernel)?;
            outcomes.push(vec![DetectionEvent {
                pixel,
                time_bin: bin,
            }]);
            probabilities.push(probability(&element, state)?);
        }
    }
    Ok(OutcomeSpace {
        outcomes,
        probabilities,
    })
}

/// Exact two-photon outcome probabilities over ordered (pixel, bin) pairs:
/// the first event is the later detection, so pairs with `bin >= bin2` carry
/// all the weight (equal bins keep the in-bin time ordering).
pub fn two_photon_outcomes(
    state: &TwoPhotonState,
    pixels: &PixelGrid,
    params: &DetectorParams,
    quad: &QuadSpec,
) -> Result<OutcomeSpace, SimError> {
    let mut pairs = Vec::new();
    for pixel in pixels.pixels() {
        for bin in 0..pixels.time_bins() {
            for pixel2 in pixels.pixels() {
                for bin2 in 0..=bin {
                    pairs.push((pixel, bin, pixel2, bin2));
                }
            }
        }
    }
    let results: Vec<Result<f64, PovmError>> = pairs
        .par_iter()
        .map(|&(pixel, bin, pixel2, bin2)| {
            two_photon_probability(
                params,
                state,
                pixels,
                pixel,
                pixels.bin_window(bin)?,
                pixel2,
                pixels.bin_window(bin2)?,
                quad,
            )
        })
        .collect();
    let mut outcomes = Vec::with_capacity(pairs.len());
    let mut probabilities = Vec::with_capacity(pairs.len());
    for ((pixel, bin, pixel2, bin2), result) in pairs.into_iter().zip(results) {
        outcomes.push(vec![
            DetectionEvent {
                pixel,
                time_bin: bin,
            },
            DetectionEvent {
                pixel: pixel2,
                time_bin: bin2,
            },
        ]);
        probabilities.push(result?);
    }
    Ok(OutcomeSpace {
        outcomes,
        probabilities,
    })
}

fn check_coverage(space: &OutcomeSpace, tolerance: f64) -> Result<(), SimError> {
    let sum = space.total_probability();
    let deficit = (1.0 - sum).abs();
    if deficit > tolerance {
        return Err(SimError::ProbabilityDeficit {
            sum,
            deficit,
            tolerance,
        });
    }
    Ok(())
}

/// Samples one-photon detections. The outcome probabilities must cover the
/// pulse (sum within `1e−6` of 1), otherwise [`SimError::ProbabilityDeficit`].
pub fn sample_one_photon(
    state: &OnePhotonState,
    pixels: &PixelGrid,
    params: &DetectorParams,
    kernel: KernelKind,
    trials: u64,
    seed: u64,
) -> Result<DetectionRecord, SimError> {
    if trials == 0 {
        return Err(SimError::ZeroTrials);
    }
    let grid = Arc::clone(state.grid_arc());
    let space = one_photon_outcomes(state, pixels, params, kernel, &grid)?;
    check_coverage(&space, crate::tolerances::PROBABILITY_DEFICIT_ONE)?;
    let trial_outcomes = categorical_sample(&space, trials, seed);
    Ok(DetectionRecord {
        seed,
        space,
        trial_outcomes,
    })
}

/// Samples ordered two-photon coincidences. Coverage tolerance is the
/// looser `1e−4` (time quadrature).
pub fn sample_two_photon(
    state: &TwoPhotonState,
    pixels: &PixelGrid,
    params: &DetectorParams,
    quad: &QuadSpec,
    trials: u64,
    seed: u64,
) -> Result<DetectionRecord, SimError> {
    if trials == 0 {
        return Err(SimError::ZeroTrials);
    }
    let space = two_photon_outcomes(state, pixels, params, quad)?;
    check_coverage(&space, crate::tolerances::PROBABILITY_DEFICIT_TWO)?;
    let trial_outcomes = categorical_sample(&space, trials, seed);
    Ok(DetectionRecord {
        seed,
        space,
        trial_outcomes,
    })
}

/// After every counting measurement the photon field is in the vacuum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhotonSector {
    Vacuum,
}

/// One detected photon's share of the collapsed state: a uniform
/// superposition with amplitude `1/√(2N)` over the `2N` (polarization, atom)
/// excitation labels of its pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CollapseFactor {
    pub pixel: PixelIndex,
    pub atoms: u64,
}

impl CollapseFactor {
    pub fn label_count(&self) -> u64 {
        2 * self.atoms
    }

    pub fn amplitude(&self) -> f64 {
        1.0 / (self.label_count() as f64).sqrt()
    }
}

/// The collapsed state after a J-photon trial: a product of one factor per
/// detected photon, photon sector in vacuum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollapseRecord {
    factors: Vec<CollapseFactor>,
}

impl CollapseRecord {
    pub fn factors(&self) -> &[CollapseFactor] {
        &self.factors
    }

    pub fn photon_sector(&self) -> PhotonSector {
        PhotonSector::Vacuum
    }

    /// Squared norm as an exact rational: numerator `Π 2Nᵢ` from the label
    /// count, denominator `Π 2Nᵢ` from the squared amplitudes.
    pub fn norm_squared_exact(&self) -> (u128, u128) {
        let mut num: u128 = 1;
        let mut den: u128 = 1;
        for f in &self.factors {
            num *= u128::from(f.label_count());
            den *= u128::from(f.label_count());
        }
        (num, den)
    }

    /// True iff the exact squared norm is 1; by construction it always is.
    pub fn is_normalized(&self) -> bool {
        let (num, den) = self.norm_squared_exact();
        num == den
    }
}

/// Collapse descriptor for one trial's event list.
pub fn collapse_trial(
    events: &[DetectionEvent],
    atoms_per_pixel: u64,
) -> Result<CollapseRecord, SimError> {
    if events.is_empty() {
        return Err(SimError::EmptyRecord);
    }
    if atoms_per_pixel == 0 {
        return Err(SimError::InvalidAtoms);
    }
    Ok(CollapseRecord {
        factors: events
            .iter()
            .map(|ev| CollapseFactor {
                pixel: ev.pixel,
                atoms: atoms_per_pixel,
            })
            .collect(),
    })
}

/// Collapse descriptor for one trial of a sampled record.
pub fn collapse_state(
    record: &DetectionRecord,
    trial: usize,
    atoms_per_pixel: u64,
) -> Result<CollapseRecord, SimError> {
    if trial >= record.trials() {
        return Err(SimError::TrialOutOfRange {
            trial,
            trials: record.trials(),
        });
    }
    collapse_trial(record.events_for_trial(trial), atoms_per_pixel)
}
