//! One- and two-photon states on a mode grid, their localized-basis wave
//! functions, and the flux / coincidence densities they induce.
//!
//! A one-photon state is a normalized amplitude array `c[k, σ]` over
//! (mode × helicity); its wave function is the projection onto the localized
//! basis,
//!
//! ```text
//! ψ_σ(r, t) = (1/√V) Σ_k c_{k,σ} exp(−i k·r + i k c t)
//! ```
//!
//! with `kz` derived from `(kx, ky, k)`. A two-photon state is an
//! exchange-symmetric rank-2 amplitude array over the same flattened
//! (mode × helicity) index; its symmetric wave function carries the
//! `1/√2!` prefactor:
//!
//! ```text
//! ψ_{σσ'}(r, t; r', t') = (1/(√2·V)) Σ_{k,k'} (c_{kσ;k'σ'} + c_{k'σ';kσ})
//!                         · exp(−i k·r + i k c t) · exp(−i k'·r' + i k' c t')
//! ```
//!
//! With amplitudes normalized to `Σ|c|² = 1`, the flux density
//! `c·Σ_σ|ψ_σ|²` integrates to one photon over the detector plane and time
//! window, and the time-ordered coincidence rate integrates to one pair,
//! the bookkeeping the POVM completeness checks rely on.
//!
//! States are immutable after construction; all evaluators are pure.

use crate::mode_space::{Helicity, ModeGrid};
use ndarray::{s, Array1, Array2};
use num_complex::Complex64;
use std::io::{BufRead, Write};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StateError {
    #[error("pulse amplitudes all underflowed to zero on this grid")]
    DegeneratePulse,
    #[error("amplitude array has shape {got:?}, expected {expected:?}")]
    ShapeMismatch {
        got: Vec<usize>,
        expected: Vec<usize>,
    },
    #[error("{name} must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("states live on different mode grids")]
    GridMismatch,
    #[error("csv error at line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Flattened (mode × helicity) index: `mode_index * 2 + helicity.index()`.
pub fn flat_index(mode_index: usize, helicity: Helicity) -> usize {
    mode_index * 2 + helicity.index()
}

/// Gaussian single-photon pulse parameters in wave-vector space. The
/// amplitude profile is
/// `exp(−(kx−kx0)²/4wx² − (ky−ky0)²/4wy² − (k−k_center)²/4wk²)` scaled by
/// the per-helicity weight, then normalized.
#[derive(Debug, Clone, Copy)]
pub struct GaussianPulse {
    pub kx0: f64,
    pub ky0: f64,
    pub k_center: f64,
    pub wx: f64,
    pub wy: f64,
    pub wk: f64,
    /// Complex weight per helicity, indexed `[+1, −1]`; at least one nonzero.
    pub weights: [Complex64; 2],
}

impl GaussianPulse {
    /// Axial pulse: centered on `kx = ky = 0`, helicity `+1` only, broad in
    /// the transverse directions.
    pub fn axial(k_center: f64, wk: f64) -> Self {
        GaussianPulse {
            kx0: 0.0,
            ky0: 0.0,
            k_center,
            wx: 1e6,
            wy: 1e6,
            wk,
            weights: [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        }
    }
}

/// Sampled wave-function value: two helicity components at one spacetime
/// point.
#[derive(Debug, Clone, Copy)]
pub struct WaveFunctionSample {
    pub position: [f64; 3],
    pub time: f64,
    pub values: [Complex64; 2],
}

/// A normalized one-photon state `Σ c_{k,σ} |k,σ⟩`.
#[derive(Debug, Clone)]
pub struct OnePhotonState {
    grid: Arc<ModeGrid>,
    /// Shape (n_modes, 2); `Σ|c|² = 1`.
    amplitudes: Array2<Complex64>,
}

impl OnePhotonState {
    /// Normalizes and wraps an amplitude array of shape `(n_modes, 2)`.
    pub fn new(grid: Arc<ModeGrid>, amplitudes: Array2<Complex64>) -> Result<Self, StateError> {
        let expected = vec![grid.len(), 2];
        if amplitudes.shape() != expected.as_slice() {
            return Err(StateError::ShapeMismatch {
                got: amplitudes.shape().to_vec(),
                expected,
            });
        }
        let norm_sq: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if norm_sq <= 0.0 || !norm_sq.is_finite() {
            return Err(StateError::DegeneratePulse);
        }
        let amplitudes = amplitudes / Complex64::new(norm_sq.sqrt(), 0.0);
        Ok(OnePhotonState { grid, amplitudes })
    }

    /// All amplitude on a single (mode, helicity) basis state.
    pub fn single_mode(
        grid: Arc<ModeGrid>,
        mode_index: usize,
        helicity: Helicity,
    ) -> Result<Self, StateError> {
        let mut amplitudes = Array2::zeros((grid.len(), 2));
        amplitudes[(mode_index, helicity.index())] = Complex64::new(1.0, 0.0);
        OnePhotonState::new(grid, amplitudes)
    }

    /// Gaussian pulse, normalized. Errors with [`StateError::DegeneratePulse`]
    /// if every amplitude underflows to zero on the grid.
    pub fn gaussian(grid: Arc<ModeGrid>, pulse: &GaussianPulse) -> Result<Self, StateError> {
        for (name, value) in [("wx", pulse.wx), ("wy", pulse.wy), ("wk", pulse.wk)] {
            if value <= 0.0 || value.is_nan() {
                return Err(StateError::NonPositiveParameter { name, value });
            }
        }
        if pulse.weights.iter().all(|w| w.norm_sqr() == 0.0) {
            return Err(StateError::DegeneratePulse);
        }
        let mut amplitudes = Array2::zeros((grid.len(), 2));
        for (i, mode) in grid.modes().iter().enumerate() {
            let ex = -((mode.kx - pulse.kx0) / (2.0 * pulse.wx)).powi(2)
                - ((mode.ky - pulse.ky0) / (2.0 * pulse.wy)).powi(2)
                - ((mode.k - pulse.k_center) / (2.0 * pulse.wk)).powi(2);
            let env = ex.exp();
            for h in Helicity::BOTH {
                amplitudes[(i, h.index())] = pulse.weights[h.index()] * env;
            }
        }
        OnePhotonState::new(grid, amplitudes)
    }

    pub fn grid(&self) -> &ModeGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<ModeGrid> {
        &self.grid
    }

    pub fn amplitudes(&self) -> &Array2<Complex64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, mode_index: usize, helicity: Helicity) -> Complex64 {
        self.amplitudes[(mode_index, helicity.index())]
    }

    /// Amplitudes flattened to length `2·n_modes` in [`flat_index`] order.
    pub fn amplitude_vector(&self) -> Array1<Complex64> {
        Array1::from_iter(self.amplitudes.iter().copied())
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Returns a copy with every amplitude multiplied by `exp(i·phase)`.
    pub fn with_global_phase(&self, phase: f64) -> Self {
        let factor = Complex64::from_polar(1.0, phase);
        OnePhotonState {
            grid: Arc::clone(&self.grid),
            amplitudes: &self.amplitudes * factor,
        }
    }

    /// The localized-basis wave function `ψ_σ(r, t)`, both helicity
    /// components, by direct mode summation.
    pub fn wave_function(&self, position: [f64; 3], time: f64) -> [Complex64; 2] {
        let [x, y, z] = position;
        let c = self.grid.c_light();
        let inv_sqrt_v = 1.0 / self.grid.volume().sqrt();
        let mut values = [Complex64::new(0.0, 0.0); 2];
        for (i, mode) in self.grid.modes().iter().enumerate() {
            let phase = -(mode.kx * x + mode.ky * y + mode.kz() * z) + mode.k * c * time;
            let factor = Complex64::from_polar(1.0, phase);
            for h in Helicity::BOTH {
                values[h.index()] += self.amplitudes[(i, h.index())] * factor;
            }
        }
        values.map(|v| v * inv_sqrt_v)
    }

    pub fn wave_function_sample(&self, position: [f64; 3], time: f64) -> WaveFunctionSample {
        WaveFunctionSample {
            position,
            time,
            values: self.wave_function(position, time),
        }
    }

    /// Photon flux density at the detector plane `z = 0`:
    /// `c · Σ_σ |ψ_σ(x, y, 0, t)|²`. Nonnegative by construction.
    pub fn flux_density(&self, x: f64, y: f64, t: f64) -> f64 {
        let psi = self.wave_function([x, y, 0.0], t);
        self.grid.c_light() * (psi[0].norm_sqr() + psi[1].norm_sqr())
    }

    /// Writes the documented CSV form: a comment header, a column header,
    /// then one row per (mx, my, mz, σ). Amplitudes use Rust's shortest
    /// round-trip float formatting, so `read_csv` restores them exactly.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), StateError> {
        writeln!(out, "# photon-povm one-photon state")?;
        writeln!(out, "mx,my,mz,sigma,re,im")?;
        for (i, mode) in self.grid.modes().iter().enumerate() {
            for h in Helicity::BOTH {
                let a = self.amplitudes[(i, h.index())];
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    mode.mx,
                    mode.my,
                    mode.mz,
                    h.sign() as i32,
                    a.re,
                    a.im
                )?;
            }
        }
        Ok(())
    }

    /// Reads the CSV form produced by [`Self::write_csv`]. Rows may appear
    /// in any order but every (mode, σ) slot must be filled exactly once.
    pub fn read_csv<R: BufRead>(grid: Arc<ModeGrid>, reader: R) -> Result<Self, StateError> {
        let mut amplitudes = Array2::zeros((grid.len(), 2));
        let mut filled = vec![false; grid.len() * 2];
        let index_of = mode_index_map(&grid);
        let mut saw_header = false;
        for (line_no, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = line_no + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if !saw_header {
                if trimmed != "mx,my,mz,sigma,re,im" {
                    return Err(StateError::Csv {
                        line: line_no,
                        message: format!("expected header mx,my,mz,sigma,re,im, got {trimmed}"),
                    });
                }
                saw_header = true;
                continue;
            }
            let (slot, value) = parse_amplitude_row(trimmed, line_no, &index_of)?;
            if filled[slot] {
                return Err(StateError::Csv {
                    line: line_no,
                    message: "duplicate (mode, sigma) row".into(),
                });
            }
            filled[slot] = true;
            amplitudes[(slot / 2, slot % 2)] = value;
        }
        if !filled.iter().all(|&f| f) {
            return Err(StateError::Csv {
                line: 0,
                message: "missing (mode, sigma) rows".into(),
            });
        }
        // Round-trip exactness: accept the amplitudes verbatim, but they
        // must already describe a normalized state.
        let norm_sq: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > 1e-12 {
            return Err(StateError::Csv {
                line: 0,
                message: format!("state is not normalized: sum |c|^2 = {norm_sq}"),
            });
        }
        Ok(OnePhotonState { grid, amplitudes })
    }
}

fn mode_index_map(grid: &ModeGrid) -> std::collections::HashMap<(i32, i32, i32), usize> {
    grid.modes()
        .iter()
        .enumerate()
        .map(|(i, m)| ((m.mx, m.my, m.mz), i))
        .collect()
}

fn parse_amplitude_row(
    row: &str,
    line_no: usize,
    index_of: &std::collections::HashMap<(i32, i32, i32), usize>,
) -> Result<(usize, Complex64), StateError> {
    let csv_err = |message: String| StateError::Csv {
        line: line_no,
        message,
    };
    let fields: Vec<&str> = row.split(',').collect();
    if fields.len() != 6 {
        return Err(csv_err(format!("expected 6 fields, got {}", fields.len())));
    }
    let mx: i32 = fields[0].parse().map_err(|e| csv_err(format!("mx: {e}")))?;
    let my: i32 = fields[1].parse().map_err(|e| csv_err(format!("my: {e}")))?;
    let mz: i32 = fields[2].parse().map_err(|e| csv_err(format!("mz: {e}")))?;
    let sigma: i32 = fields[3]
        .parse()
        .map_err(|e| csv_err(format!("sigma: {e}")))?;
    let re: f64 = fields[4].parse().map_err(|e| csv_err(format!("re: {e}")))?;
    let im: f64 = fields[5].parse().map_err(|e| csv_err(format!("im: {e}")))?;
    let helicity = Helicity::from_sign(sigma)
        .ok_or_else(|| csv_err(format!("sigma must be +1 or -1, got {sigma}")))?;
    let mode = *index_of
        .get(&(mx, my, mz))
        .ok_or_else(|| csv_err(format!("mode ({mx},{my},{mz}) not on this grid")))?;
    Ok((flat_index(mode, helicity), Complex64::new(re, im)))
}

/// Helicity pairing rule for down-conversion-style correlated pairs:
/// `TypeI` photons share the same helicity, `TypeII` photons carry
/// orthogonal (opposite) helicities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolarizationRule {
    TypeI,
    TypeII,
}

/// A normalized, exchange-symmetric two-photon state
/// `Σ c_{kσ;k'σ'} |k,σ; k',σ'⟩` stored as a `(2n × 2n)` array over the
/// flattened (mode × helicity) index, with `c = cᵀ` and `Σ|c|² = 1`.
#[derive(Debug, Clone)]
pub struct TwoPhotonState {
    grid: Arc<ModeGrid>,
    amplitudes: Array2<Complex64>,
}

impl TwoPhotonState {
    /// Symmetrizes (`(c + cᵀ)/2`), normalizes, and wraps an amplitude array
    /// of shape `(2n, 2n)`.
    pub fn new(grid: Arc<ModeGrid>, amplitudes: Array2<Complex64>) -> Result<Self, StateError> {
        let dim = grid.len() * 2;
        let expected = vec![dim, dim];
        if amplitudes.shape() != expected.as_slice() {
            return Err(StateError::ShapeMismatch {
                got: amplitudes.shape().to_vec(),
                expected,
            });
        }
        let mut sym = Array2::zeros((dim, dim));
        for i in 0..dim {
            for j in 0..dim {
                sym[(i, j)] = 0.5 * (amplitudes[(i, j)] + amplitudes[(j, i)]);
            }
        }
        let norm_sq: f64 = sym.iter().map(|c| c.norm_sqr()).sum();
        if norm_sq <= 0.0 || !norm_sq.is_finite() {
            return Err(StateError::DegeneratePulse);
        }
        let sym = sym / Complex64::new(norm_sq.sqrt(), 0.0);
        Ok(TwoPhotonState {
            grid,
            amplitudes: sym,
        })
    }

    /// Momentum-anti-correlated pair: amplitude concentrated near
    /// `kx + kx' ≈ 0`, `ky + ky' ≈ 0` with a Gaussian of width `pump_width`,
    /// so the photon positions are correlated. The helicity assignment
    /// follows the polarization rule.
    pub fn correlated(
        grid: Arc<ModeGrid>,
        pump_width: f64,
        rule: PolarizationRule,
    ) -> Result<Self, StateError> {
        if pump_width <= 0.0 || pump_width.is_nan() {
            return Err(StateError::NonPositiveParameter {
                name: "pump_width",
                value: pump_width,
            });
        }
        let n = grid.len();
        let mut amplitudes = Array2::zeros((2 * n, 2 * n));
        for (i, a) in grid.modes().iter().enumerate() {
            for (j, b) in grid.modes().iter().enumerate() {
                let sum_x = a.kx + b.kx;
                let sum_y = a.ky + b.ky;
                let env =
                    (-(sum_x * sum_x + sum_y * sum_y) / (4.0 * pump_width * pump_width)).exp();
                if env == 0.0 {
                    continue;
                }
                for ha in Helicity::BOTH {
                    for hb in Helicity::BOTH {
                        let paired = match rule {
                            PolarizationRule::TypeI => ha == hb,
                            PolarizationRule::TypeII => ha != hb,
                        };
                        if paired {
                            amplitudes[(flat_index(i, ha), flat_index(j, hb))] =
                                Complex64::new(env, 0.0);
                        }
                    }
                }
            }
        }
        TwoPhotonState::new(grid, amplitudes)
    }

    /// Symmetrized product of two one-photon states.
    pub fn product(a: &OnePhotonState, b: &OnePhotonState) -> Result<Self, StateError> {
        if a.grid() != b.grid() {
            return Err(StateError::GridMismatch);
        }
        let va = a.amplitude_vector();
        let vb = b.amplitude_vector();
        let dim = va.len();
        let mut amplitudes = Array2::zeros((dim, dim));
        for i in 0..dim {
            for j in 0..dim {
                amplitudes[(i, j)] = va[i] * vb[j];
            }
        }
        TwoPhotonState::new(Arc::clone(a.grid_arc()), amplitudes)
    }

    /// Single-photon marginal: amplitudes are the square roots of the
    /// marginal probabilities `Σ_{k',σ'} |c_{kσ;k'σ'}|²` (phases dropped).
    pub fn marginal(&self) -> Result<OnePhotonState, StateError> {
        let n = self.grid.len();
        let mut amplitudes = Array2::zeros((n, 2));
        for i in 0..n {
            for h in Helicity::BOTH {
                let row = flat_index(i, h);
                let p: f64 = self.amplitudes.row(row).iter().map(|c| c.norm_sqr()).sum();
                amplitudes[(i, h.index())] = Complex64::new(p.sqrt(), 0.0);
            }
        }
        OnePhotonState::new(Arc::clone(&self.grid), amplitudes)
    }

    /// The product state of two copies of [`Self::marginal`]: a separable
    /// pair with the same single-photon marginal distribution, used as the
    /// uncorrelated reference in coincidence comparisons.
    pub fn separable_partner(&self) -> Result<TwoPhotonState, StateError> {
        let m = self.marginal()?;
        TwoPhotonState::product(&m, &m)
    }

    pub fn grid(&self) -> &ModeGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<ModeGrid> {
        &self.grid
    }

    /// Amplitude array over the flattened (mode × helicity) index.
    pub fn amplitudes(&self) -> &Array2<Complex64> {
        &self.amplitudes
    }

    /// The `(σ, σ')` helicity block as an `n_modes × n_modes` matrix view.
    pub fn helicity_block(&self, ha: Helicity, hb: Helicity) -> ndarray::ArrayView2<'_, Complex64> {
        self.amplitudes.slice(s![ha.index()..; 2, hb.index()..; 2])
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Maximum deviation from exchange symmetry, `max |c − cᵀ|`.
    pub fn max_asymmetry(&self) -> f64 {
        let dim = self.amplitudes.nrows();
        let mut worst = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                worst = worst.max((self.amplitudes[(i, j)] - self.amplitudes[(j, i)]).norm());
            }
        }
        worst
    }

    /// The symmetric two-photon wave function `ψ_{σσ'}(r, t; r', t')`,
    /// indexed `[σ][σ']`. Symmetric under the simultaneous exchange
    /// `(r, t, σ) ↔ (r', t', σ')`.
    pub fn wave_function(
        &self,
        position: [f64; 3],
        time: f64,
        position2: [f64; 3],
        time2: f64,
    ) -> [[Complex64; 2]; 2] {
        let c = self.grid.c_light();
        // Per-mode plane-wave factors for each argument.
        let phases = |p: [f64; 3], t: f64| -> Vec<Complex64> {
            self.grid
                .modes()
                .iter()
                .map(|m| {
                    Complex64::from_polar(
                        1.0,
                        -(m.kx * p[0] + m.ky * p[1] + m.kz() * p[2]) + m.k * c * t,
                    )
                })
                .collect()
        };
        let f1 = phases(position, time);
        let f2 = phases(position2, time2);
        let pref = 1.0 / (std::f64::consts::SQRT_2 * self.grid.volume());
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for ha in Helicity::BOTH {
            for hb in Helicity::BOTH {
                let mut acc = Complex64::new(0.0, 0.0);
                for (i, f1i) in f1.iter().enumerate() {
                    let row = flat_index(i, ha);
                    for (j, f2j) in f2.iter().enumerate() {
                        let col = flat_index(j, hb);
                        let sym = self.amplitudes[(row, col)] + self.amplitudes[(col, row)];
                        if sym.norm_sqr() == 0.0 {
                            continue;
                        }
                        acc += sym * f1i * f2j;
                    }
                }
                out[ha.index()][hb.index()] = acc * pref;
            }
        }
        out
    }

    /// CSV form: one row per amplitude entry, exact round trip.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), StateError> {
        writeln!(out, "# photon-povm two-photon state")?;
        writeln!(out, "mx,my,mz,sigma,mx2,my2,mz2,sigma2,re,im")?;
        for (i, a) in self.grid.modes().iter().enumerate() {
            for ha in Helicity::BOTH {
                for (j, b) in self.grid.modes().iter().enumerate() {
                    for hb in Helicity::BOTH {
                        let v = self.amplitudes[(flat_index(i, ha), flat_index(j, hb))];
                        writeln!(
                            out,
                            "{},{},{},{},{},{},{},{},{},{}",
                            a.mx,
                            a.my,
                            a.mz,
                            ha.sign() as i32,
                            b.mx,
                            b.my,
                            b.mz,
                            hb.sign() as i32,
                            v.re,
                            v.im
                        )?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Reads the CSV form produced by [`Self::write_csv`].
    pub fn read_csv<R: BufRead>(grid: Arc<ModeGrid>, reader: R) -> Result<Self, StateError> {
        let dim = grid.len() * 2;
        let mut amplitudes = Array2::zeros((dim, dim));
        let mut filled = vec![false; dim * dim];
        let index_of = mode_index_map(&grid);
        let mut saw_header = false;
        for (line_no, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = line_no + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if !saw_header {
                if trimmed != "mx,my,mz,sigma,mx2,my2,mz2,sigma2,re,im" {
                    return Err(StateError::Csv {
                        line: line_no,
                        message: "bad two-photon header".into(),
                    });
                }
                saw_header = true;
                continue;
            }
            let csv_err = |message: String| StateError::Csv {
                line: line_no,
                message,
            };
            let fields: Vec<&str> = trimmed.split(',').collect();
            if fields.len() != 10 {
                return Err(csv_err(format!("expected 10 fields, got {}", fields.len())));
            }
            let parse_i = |s: &str| s.parse::<i32>().map_err(|e| csv_err(format!("{e}")));
            let parse_f = |s: &str| s.parse::<f64>().map_err(|e| csv_err(format!("{e}")));
            let (mx, my, mz, sg) = (
                parse_i(fields[0])?,
                parse_i(fields[1])?,
                parse_i(fields[2])?,
                parse_i(fields[3])?,
            );
            let (mx2, my2, mz2, sg2) = (
                parse_i(fields[4])?,
                parse_i(fields[5])?,
                parse_i(fields[6])?,
                parse_i(fields[7])?,
            );
            let (re, im) = (parse_f(fields[8])?, parse_f(fields[9])?);
            let ha = Helicity::from_sign(sg)
                .ok_or_else(|| csv_err(format!("sigma must be ±1, got {sg}")))?;
            let hb = Helicity::from_sign(sg2)
                .ok_or_else(|| csv_err(format!("sigma2 must be ±1, got {sg2}")))?;
            let i = *index_of
                .get(&(mx, my, mz))
                .ok_or_else(|| csv_err(format!("mode ({mx},{my},{mz}) not on this grid")))?;
            let j = *index_of
                .get(&(mx2, my2, mz2))
                .ok_or_else(|| csv_err(format!("mode ({mx2},{my2},{mz2}) not on this grid")))?;
            let (row, col) = (flat_index(i, ha), flat_index(j, hb));
            if filled[row * dim + col] {
                return Err(csv_err("duplicate amplitude row".into()));
            }
            filled[row * dim + col] = true;
            amplitudes[(row, col)] = Complex64::new(re, im);
        }
        if !filled.iter().all(|&f| f) {
            return Err(StateError::Csv {
                line: 0,
                message: "missing amplitude rows".into(),
            });
        }
        let norm_sq: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > 1e-12 {
            return Err(StateError::Csv {
                line: 0,
                message: format!("state is not normalized: sum |c|^2 = {norm_sq}"),
            });
        }
        let mut worst = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                worst = worst.max((amplitudes[(i, j)] - amplitudes[(j, i)]).norm());
            }
        }
        if worst > 1e-14 {
            return Err(StateError::Csv {
                line: 0,
                message: format!("amplitudes are not exchange-symmetric: max |c - cT| = {worst}"),
            });
        }
        Ok(TwoPhotonState { grid, amplitudes })
    }
}
