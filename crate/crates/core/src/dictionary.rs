//! Per-dimension sparsifying dictionaries: ULA steering vectors on a
//! spatial-frequency grid and sampled pulse responses on a delay grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dictionary of `n_atoms` columns ("atoms") of length `n_samples`.
///
/// Atoms are stored column-contiguous. They are deliberately left
/// unnormalized: every selection metric divides by the measured atom energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    n_samples: usize,
    entries: Vec<Complex64>,
    atom_params: Vec<f64>,
}

impl Dictionary {
    /// Builds a dictionary from column-major `entries`.
    pub fn new(n_samples: usize, entries: Vec<Complex64>, atom_params: Vec<f64>) -> Result<Self> {
        let n_atoms = atom_params.len();
        if n_samples == 0 || n_atoms == 0 {
            return Err(Error::Config(
                "dictionary must have at least one row and one atom".into(),
            ));
        }
        if entries.len() != n_samples * n_atoms {
            return Err(Error::Shape(format!(
                "{} entries for a {n_samples}x{n_atoms} dictionary",
                entries.len()
            )));
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite("dictionary entries"));
        }
        if atom_params.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "atom parameters must be strictly increasing".into(),
            ));
        }
        let dict = Dictionary {
            n_samples,
            entries,
            atom_params,
        };
        if let Some(j) = (0..n_atoms).find(|&j| dict.atom(j).iter().all(|z| z.norm_sqr() == 0.0)) {
            return Err(Error::Config(format!("atom {j} is identically zero")));
        }
        Ok(dict)
    }

    /// The `n x n` identity, with atom parameters `0..n`.
    pub fn identity(n: usize) -> Result<Self> {
        let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            entries[j * n + j] = Complex64::new(1.0, 0.0);
        }
        Dictionary::new(n, entries, (0..n).map(|j| j as f64).collect())
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_atoms(&self) -> usize {
        self.atom_params.len()
    }

    pub fn atom(&self, j: usize) -> &[Complex64] {
        &self.entries[j * self.n_samples..(j + 1) * self.n_samples]
    }

    pub fn entry(&self, row: usize, atom: usize) -> Complex64 {
        self.entries[atom * self.n_samples + row]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn atom_params(&self) -> &[f64] {
        &self.atom_params
    }

    pub fn param(&self, j: usize) -> f64 {
        self.atom_params[j]
    }

    /// Index of the atom whose parameter is closest to `value`.
    pub fn nearest_atom(&self, value: f64) -> usize {
        let pos = self.atom_params.partition_point(|&p| p < value);
        match pos {
            0 => 0,
            p if p == self.atom_params.len() => p - 1,
            p => {
                if (self.atom_params[p] - value).abs() < (value - self.atom_params[p - 1]).abs() {
                    p
                } else {
                    p - 1
                }
            }
        }
    }

    /// Element-wise conjugate, keeping the parameter grid.
    pub fn conjugate(&self) -> Self {
        Dictionary {
            n_samples: self.n_samples,
            entries: self.entries.iter().map(|z| z.conj()).collect(),
            atom_params: self.atom_params.clone(),
        }
    }
}

/// Half-wavelength ULA response `exp(i*pi*n*omega)` for `n = 0..n_antennas`.
pub fn steering_vector(n_antennas: usize, omega: f64) -> Vec<Complex64> {
    (0..n_antennas)
        .map(|n| Complex64::from_polar(1.0, PI * n as f64 * omega))
        .collect()
}

/// Spatial-frequency grid `omega_j = -1 + 2j / n_atoms`.
pub fn spatial_grid(n_atoms: usize) -> Vec<f64> {
    (0..n_atoms)
        .map(|j| -1.0 + 2.0 * j as f64 / n_atoms as f64)
        .collect()
}

/// Steering-vector dictionary for one array axis.
pub fn build_axis_dictionary(n_antennas: usize, n_atoms: usize) -> Result<Dictionary> {
    if n_antennas == 0 {
        return Err(Error::Config("axis must have at least one antenna".into()));
    }
    if n_atoms < n_antennas {
        return Err(Error::Config(format!(
            "{n_atoms} atoms cannot span an axis of {n_antennas} antennas"
        )));
    }
    let grid = spatial_grid(n_atoms);
    let entries = grid
        .iter()
        .flat_map(|&omega| steering_vector(n_antennas, omega))
        .collect();
    Dictionary::new(n_antennas, entries, grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PulseKind {
    Sinc,
    RaisedCosine,
}

/// Band-limited pulse shaping filter `p(t)` with `p(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseShape {
    pub kind: PulseKind,
    /// Roll-off in `[0, 1]`; ignored by the sinc pulse.
    #[serde(default)]
    pub rolloff: f64,
    /// Sample period `T_s` in seconds.
    pub sample_period: f64,
}

impl PulseShape {
    pub fn sinc(sample_period: f64) -> Self {
        PulseShape {
            kind: PulseKind::Sinc,
            rolloff: 0.0,
            sample_period,
        }
    }

    pub fn raised_cosine(sample_period: f64, rolloff: f64) -> Self {
        PulseShape {
            kind: PulseKind::RaisedCosine,
            rolloff,
            sample_period,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_period > 0.0 && self.sample_period.is_finite()) {
            return Err(Error::Config("pulse sample period must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.rolloff) {
            return Err(Error::Config("pulse roll-off must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        evaluate_pulse(self, t)
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

pub fn evaluate_pulse(pulse: &PulseShape, t: f64) -> f64 {
    let x = t / pulse.sample_period;
    match pulse.kind {
        PulseKind::Sinc => sinc(x),
        PulseKind::RaisedCosine => {
            let beta = pulse.rolloff;
            if beta == 0.0 {
                return sinc(x);
            }
            let denom = 1.0 - (2.0 * beta * x).powi(2);
            // removable singularity at |t| = T_s / (2 beta)
            if denom.abs() < 1e-10 {
                PI / 4.0 * sinc(1.0 / (2.0 * beta))
            } else {
                sinc(x) * (PI * beta * x).cos() / denom
            }
        }
    }
}

/// Delay dictionary: column `j` samples `p(d*T_s - tau_j)` for
/// `d = 0..n_taps`, with `tau_j = j * tau_max / n_atoms`.
pub fn build_delay_dictionary(
    n_taps: usize,
    n_atoms: usize,
    pulse: &PulseShape,
    tau_max: f64,
) -> Result<Dictionary> {
    pulse.validate()?;
    if n_atoms == 0 || n_taps == 0 {
        return Err(Error::Config(
            "delay dictionary needs at least one tap and one atom".into(),
        ));
    }
    let ts = pulse.sample_period;
    if !(tau_max > 0.0) || tau_max > n_taps as f64 * ts * (1.0 + 1e-12) {
        return Err(Error::Config(format!(
            "maximum delay {tau_max:e} s must lie in (0, {n_taps} * T_s]"
        )));
    }
    let taus: Vec<f64> = (0..n_atoms)
        .map(|j| j as f64 * tau_max / n_atoms as f64)
        .collect();
    let entries = taus
        .iter()
        .flat_map(|&tau| {
            (0..n_taps)
                .map(move |d| Complex64::new(evaluate_pulse(pulse, d as f64 * ts - tau), 0.0))
        })
        .collect();
    Dictionary::new(n_taps, entries, taus)
}
