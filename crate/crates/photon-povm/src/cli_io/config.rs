//! Flat `section.key = value` experiment configuration.

use super::CliError;
use crate::mode_space::GridSpec;
use num_complex::Complex64;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseFamily {
    Gaussian,
    Correlated,
}

/// Fully resolved configuration for one experiment run. Field defaults are
/// the canonical desk-scale setup (45-mode grid, 4×4 pixels, 4 time bins).
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    // grid
    pub lx: f64,
    pub ly: f64,
    pub t_window: f64,
    pub k0: f64,
    pub mx_range: (i32, i32),
    pub my_range: (i32, i32),
    pub mz_range: (i32, i32),
    pub paraxial_limit: f64,
    pub c_light: f64,
    // detector
    pub gamma: f64,
    pub n_index: f64,
    // pixels
    pub npx: usize,
    pub npy: usize,
    pub time_bins: usize,
    // pulse
    pub family: PulseFamily,
    pub kx0: f64,
    pub ky0: f64,
    pub k_center: f64,
    pub wx: f64,
    pub wy: f64,
    pub wk: f64,
    pub weight_plus: Complex64,
    pub weight_minus: Complex64,
    pub pump_width: f64,
    pub type_two: bool,
    // run
    pub trials: u64,
    pub seed: u64,
    pub exact_kernel: bool,
    pub quad_order: usize,
    pub quad_tol: f64,
    pub tv_bound: f64,
    pub bandwidths: Vec<f64>,
    pub samples_x: usize,
    pub samples_y: usize,
    pub samples_t: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            lx: TAU,
            ly: TAU,
            t_window: TAU,
            k0: 10.0,
            mx_range: (-1, 1),
            my_range: (-1, 1),
            mz_range: (-2, 2),
            paraxial_limit: 0.05,
            c_light: 1.0,
            gamma: 0.05,
            n_index: 1.0,
            npx: 4,
            npy: 4,
            time_bins: 16,
            family: PulseFamily::Gaussian,
            kx0: 0.0,
            ky0: 0.0,
            k_center: 10.0,
            wx: 1e6,
            wy: 1e6,
            wk: 0.9,
            weight_plus: Complex64::new(1.0, 0.0),
            weight_minus: Complex64::new(0.0, 0.0),
            pump_width: 0.6,
            type_two: true,
            trials: 400_000,
            seed: 20260810,
            exact_kernel: false,
            quad_order: 32,
            quad_tol: crate::tolerances::QUADRATURE_TOL,
            tv_bound: crate::tolerances::TOTAL_VARIATION,
            bandwidths: vec![0.04, 0.02, 0.01, 0.005],
            samples_x: 8,
            samples_y: 8,
            samples_t: 8,
        }
    }
}

struct RawEntry {
    line: usize,
    value: String,
}

impl ExperimentConfig {
    /// Parses the flat key=value text. Unknown keys, malformed lines, and
    /// out-of-domain values are all [`CliError::Config`] with the line.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut raw: BTreeMap<String, RawEntry> = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let stripped = match line.find('#') {
                Some(pos) => &line[..pos],
                None => line,
            };
            let stripped = stripped.trim();
            if stripped.is_empty() {
                continue;
            }
            let Some((key, value)) = stripped.split_once('=') else {
                return Err(CliError::Config {
                    line: Some(line_no),
                    message: format!("expected key = value, got `{stripped}`"),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if raw
                .insert(
                    key.clone(),
                    RawEntry {
                        line: line_no,
                        value,
                    },
                )
                .is_some()
            {
                return Err(CliError::Config {
                    line: Some(line_no),
                    message: format!("duplicate key {key}"),
                });
            }
        }

        let mut cfg = ExperimentConfig::default();
        let mut take = |key: &str| raw.remove(key);
        macro_rules! set {
            ($key:literal, $field:expr, $parse:expr) => {
                if let Some(entry) = take($key) {
                    $field = $parse(&entry.value).map_err(|m: String| CliError::Config {
                        line: Some(entry.line),
                        message: format!("{}: {m}", $key),
                    })?;
                }
            };
        }
        let pf64 = |s: &str| s.parse::<f64>().map_err(|e| e.to_string());
        let pi32 = |s: &str| s.parse::<i32>().map_err(|e| e.to_string());
        let pusize = |s: &str| s.parse::<usize>().map_err(|e| e.to_string());
        let pu64 = |s: &str| s.parse::<u64>().map_err(|e| e.to_string());

        set!("grid.lx", cfg.lx, pf64);
        set!("grid.ly", cfg.ly, pf64);
        set!("grid.t", cfg.t_window, pf64);
        set!("grid.k0", cfg.k0, pf64);
        set!("grid.mx_min", cfg.mx_range.0, pi32);
        set!("grid.mx_max", cfg.mx_range.1, pi32);
        set!("grid.my_min", cfg.my_range.0, pi32);
        set!("grid.my_max", cfg.my_range.1, pi32);
        set!("grid.mz_min", cfg.mz_range.0, pi32);
        set!("grid.mz_max", cfg.mz_range.1, pi32);
        set!("grid.paraxial_limit", cfg.paraxial_limit, pf64);
        set!("grid.c", cfg.c_light, pf64);
        set!("detector.gamma", cfg.gamma, pf64);
        set!("detector.n_index", cfg.n_index, pf64);
        set!("pixels.nx", cfg.npx, pusize);
        set!("pixels.ny", cfg.npy, pusize);
        set!("pixels.time_bins", cfg.time_bins, pusize);
        set!("pulse.family", cfg.family, |s: &str| match s {
            "gaussian" => Ok(PulseFamily::Gaussian),
            "correlated" => Ok(PulseFamily::Correlated),
            other => Err(format!("unknown family `{other}` (gaussian|correlated)")),
        });
        set!("pulse.kx0", cfg.kx0, pf64);
        set!("pulse.ky0", cfg.ky0, pf64);
        set!("pulse.k_center", cfg.k_center, pf64);
        set!("pulse.wx", cfg.wx, pf64);
        set!("pulse.wy", cfg.wy, pf64);
        set!("pulse.wk", cfg.wk, pf64);
        set!("pulse.weight_plus_re", cfg.weight_plus.re, pf64);
        set!("pulse.weight_plus_im", cfg.weight_plus.im, pf64);
        set!("pulse.weight_minus_re", cfg.weight_minus.re, pf64);
        set!("pulse.weight_minus_im", cfg.weight_minus.im, pf64);
        set!("pulse.pump_width", cfg.pump_width, pf64);
        set!("pulse.polarization", cfg.type_two, |s: &str| match s {
            "typeI" => Ok(false),
            "typeII" => Ok(true),
            other => Err(format!("unknown polarization `{other}` (typeI|typeII)")),
        });
        set!("run.trials", cfg.trials, pu64);
        set!("run.seed", cfg.seed, pu64);
        set!("run.kernel", cfg.exact_kernel, |s: &str| match s {
            "exact" => Ok(true),
            "first_order" => Ok(false),
            other => Err(format!("unknown kernel `{other}` (exact|first_order)")),
        });
        set!("run.quad_order", cfg.quad_order, pusize);
        set!("run.quad_tol", cfg.quad_tol, pf64);
        set!("run.tv_bound", cfg.tv_bound, pf64);
        set!("run.bandwidths", cfg.bandwidths, |s: &str| {
            s.split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| e.to_string()))
                .collect::<Result<Vec<f64>, String>>()
        });
        set!("run.samples_x", cfg.samples_x, pusize);
        set!("run.samples_y", cfg.samples_y, pusize);
        set!("run.samples_t", cfg.samples_t, pusize);

        if let Some((key, entry)) = raw.into_iter().next() {
            return Err(CliError::Config {
                line: Some(entry.line),
                message: format!("unknown key {key}"),
            });
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            line: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<(), CliError> {
        let positive = [
            ("grid.lx", self.lx),
            ("grid.ly", self.ly),
            ("grid.t", self.t_window),
            ("grid.k0", self.k0),
            ("grid.paraxial_limit", self.paraxial_limit),
            ("grid.c", self.c_light),
            ("detector.gamma", self.gamma),
            ("pulse.wx", self.wx),
            ("pulse.wy", self.wy),
            ("pulse.wk", self.wk),
            ("pulse.pump_width", self.pump_width),
            ("run.quad_tol", self.quad_tol),
            ("run.tv_bound", self.tv_bound),
        ];
        for (name, value) in positive {
            if value <= 0.0 || !value.is_finite() {
                return Err(CliError::config(format!("{name} must be positive")));
            }
        }
        if self.n_index < 1.0 || self.n_index.is_nan() {
            return Err(CliError::config("detector.n_index must be >= 1"));
        }
        for (name, value) in [
            ("pixels.nx", self.npx),
            ("pixels.ny", self.npy),
            ("pixels.time_bins", self.time_bins),
            ("run.quad_order", self.quad_order),
            ("run.samples_x", self.samples_x),
            ("run.samples_y", self.samples_y),
            ("run.samples_t", self.samples_t),
        ] {
            if value == 0 {
                return Err(CliError::config(format!("{name} must be positive")));
            }
        }
        if self.trials == 0 {
            return Err(CliError::config("run.trials must be positive"));
        }
        for (axis, r) in [
            ("mx", self.mx_range),
            ("my", self.my_range),
            ("mz", self.mz_range),
        ] {
            if r.0 > r.1 {
                return Err(CliError::config(format!(
                    "grid.{axis}_min must not exceed grid.{axis}_max"
                )));
            }
        }
        if self.bandwidths.iter().any(|&b| b <= 0.0 || b.is_nan()) {
            return Err(CliError::config("run.bandwidths must be positive"));
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec::new(self.lx, self.ly, self.t_window, self.k0)
            .with_ranges(self.mx_range, self.my_range, self.mz_range)
            .with_paraxial_limit(self.paraxial_limit)
            .with_c_light(self.c_light)
    }

    /// The fully resolved config as sorted `key = value` lines; the text
    /// that gets hashed into output headers.
    pub fn canonical_text(&self) -> String {
        let mut lines = vec![
            format!("detector.gamma = {}", self.gamma),
            format!("detector.n_index = {}", self.n_index),
            format!("grid.c = {}", self.c_light),
            format!("grid.k0 = {}", self.k0),
            format!("grid.lx = {}", self.lx),
            format!("grid.ly = {}", self.ly),
            format!("grid.mx_max = {}", self.mx_range.1),
            format!("grid.mx_min = {}", self.mx_range.0),
            format!("grid.my_max = {}", self.my_range.1),
            format!("grid.my_min = {}", self.my_range.0),
            format!("grid.mz_max = {}", self.mz_range.1),
            format!("grid.mz_min = {}", self.mz_range.0),
            format!("grid.paraxial_limit = {}", self.paraxial_limit),
            format!("grid.t = {}", self.t_window),
            format!("pixels.nx = {}", self.npx),
            format!("pixels.ny = {}", self.npy),
            format!("pixels.time_bins = {}", self.time_bins),
            format!(
                "pulse.family = {}",
                match self.family {
                    PulseFamily::Gaussian => "gaussian",
                    PulseFamily::Correlated => "correlated",
                }
            ),
            format!("pulse.k_center = {}", self.k_center),
            format!("pulse.kx0 = {}", self.kx0),
            format!("pulse.ky0 = {}", self.ky0),
            format!(
                "pulse.polarization = {}",
                if self.type_two { "typeII" } else { "typeI" }
            ),
            format!("pulse.pump_width = {}", self.pump_width),
            format!("pulse.weight_minus_im = {}", self.weight_minus.im),
            format!("pulse.weight_minus_re = {}", self.weight_minus.re),
            format!("pulse.weight_plus_im = {}", self.weight_plus.im),
            format!("pulse.weight_plus_re = {}", self.weight_plus.re),
            format!("pulse.wk = {}", self.wk),
            format!("pulse.wx = {}", self.wx),
            format!("pulse.wy = {}", self.wy),
            format!(
                "run.bandwidths = {}",
                self.bandwidths
                    .iter()
                    .map(|b| b.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
            format!(
                "run.kernel = {}",
                if self.exact_kernel {
                    "exact"
                } else {
                    "first_order"
                }
            ),
            format!("run.quad_order = {}", self.quad_order),
            format!("run.quad_tol = {}", self.quad_tol),
            format!("run.samples_t = {}", self.samples_t),
            format!("run.samples_x = {}", self.samples_x),
            format!("run.samples_y = {}", self.samples_y),
            format!("run.seed = {}", self.seed),
            format!("run.trials = {}", self.trials),
            format!("run.tv_bound = {}", self.tv_bound),
        ];
        lines.sort();
        lines.join("\n") + "\n"
    }

    /// First 16 hex characters of the SHA-256 of [`Self::canonical_text`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}
