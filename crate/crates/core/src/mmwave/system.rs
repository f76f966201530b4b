use serde::{Deserialize, Serialize};

use crate::dictionary::{PulseKind, PulseShape};
use crate::error::{Error, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Whether every training frame reuses the same pilot rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PilotReuse {
    /// The first `M_T` Hadamard rows in every frame.
    #[default]
    Identical,
    /// Frame `m_2` uses rows `m_2 * M_T ..` (cyclically) of the Hadamard matrix.
    PerFrameRows,
}

/// Array, RF, pilot and noise parameters of the hybrid MIMO link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub ntx_x: usize,
    pub ntx_y: usize,
    pub nrx_x: usize,
    pub nrx_y: usize,
    /// Transmit RF chains `M_T`.
    pub rf_tx: usize,
    /// Receive RF chains `M_R`.
    pub rf_rx: usize,
    /// Training symbols per frame `Q`.
    pub training_len: usize,
    /// Delay taps `D`.
    pub delay_taps: usize,
    /// Transmit power in mW.
    pub power_mw: f64,
    /// Noise power in mW.
    pub noise_mw: f64,
    pub pulse: PulseShape,
    /// Dictionary oversampling `K_res`.
    pub k_res: usize,
    /// Zero symbols before the pilot body.
    pub pad_pre: usize,
    /// Zero symbols after the pilot body.
    pub pad_post: usize,
    #[serde(default)]
    pub pilot_reuse: PilotReuse,
    /// Multiply every pilot symbol column by a fixed pseudo-random sign.
    /// Keeps the rows orthogonal but breaks the periodicity of the leading
    /// Hadamard rows, which otherwise trades delay against transmit angle.
    #[serde(default)]
    pub pilot_scramble: bool,
    /// Carrier frequency in Hz, used for free-space path gains.
    pub carrier_hz: f64,
}

/// Named parameter sets.
pub const PRESETS: [&str; 4] = ["system1", "system2", "system1-desk", "system2-desk"];

impl SystemConfig {
    /// Looks up a named preset.
    ///
    /// `system1`/`system2` are the full-size systems; the `-desk` variants
    /// shrink arrays, delay spread and dictionary resolution so that the dense
    /// solver still fits in memory for the first one.
    pub fn preset(name: &str) -> Result<Self> {
        let full = |nt: usize, nr: usize| SystemConfig {
            ntx_x: nt,
            ntx_y: nt,
            nrx_x: nr,
            nrx_y: nr,
            rf_tx: nt,
            rf_rx: nr,
            training_len: 64,
            delay_taps: 64,
            power_mw: dbm_to_mw(20.0),
            noise_mw: dbm_to_mw(-81.0),
            pulse: PulseShape::sinc(1.0 / 1.76e9),
            k_res: 512,
            pad_pre: 64,
            pad_post: 32,
            pilot_reuse: PilotReuse::Identical,
            pilot_scramble: false,
            carrier_hz: 60e9,
        };
        let desk = |nt: usize, mt: usize, nr: usize, mr: usize| SystemConfig {
            ntx_x: nt,
            ntx_y: nt,
            nrx_x: nr,
            nrx_y: nr,
            rf_tx: mt,
            rf_rx: mr,
            training_len: 32,
            delay_taps: 8,
            power_mw: dbm_to_mw(20.0),
            noise_mw: dbm_to_mw(-81.0),
            pulse: PulseShape::sinc(5e-9),
            k_res: 8,
            pad_pre: 8,
            pad_post: 8,
            pilot_reuse: PilotReuse::Identical,
            pilot_scramble: true,
            carrier_hz: 60e9,
        };
        match name {
            "system1" => Ok(full(4, 8)),
            "system2" => Ok(full(8, 16)),
            "system1-desk" => Ok(desk(2, 2, 4, 4)),
            "system2-desk" => Ok(desk(4, 4, 8, 8)),
            other => Err(Error::Config(format!(
                "unknown preset {other:?}; expected one of {}",
                PRESETS.join(", ")
            ))),
        }
    }

    pub fn n_tx(&self) -> usize {
        self.ntx_x * self.ntx_y
    }

    pub fn n_rx(&self) -> usize {
        self.nrx_x * self.nrx_y
    }

    /// Number of combiners `M_1 = N_R / M_R`.
    pub fn n_combiners(&self) -> usize {
        self.n_rx() / self.rf_rx
    }

    /// Number of precoders `M_2 = N_T / M_T`.
    pub fn n_precoders(&self) -> usize {
        self.n_tx() / self.rf_tx
    }

    pub fn n_frames(&self) -> usize {
        self.n_combiners() * self.n_precoders()
    }

    pub fn sample_period(&self) -> f64 {
        self.pulse.sample_period
    }

    pub fn pilot_len(&self) -> usize {
        self.pad_pre + self.training_len + self.pad_post
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    /// Largest excess delay the delay dictionary covers, `D * T_s`.
    pub fn max_excess_delay(&self) -> f64 {
        self.delay_taps as f64 * self.sample_period()
    }

    /// Rows and columns of the dense measurement matrix,
    /// `Q N_R N_T / M_T` by `N_T N_R D`.
    pub fn dense_formula(&self) -> (u128, u128) {
        let (q, nr, nt, mt, d) = (
            self.training_len as u128,
            self.n_rx() as u128,
            self.n_tx() as u128,
            self.rf_tx as u128,
            self.delay_taps as u128,
        );
        (q * nr * nt / mt, nt * nr * d)
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.ntx_x, self.ntx_y, self.nrx_x, self.nrx_y, self.rf_tx, self.rf_rx,
        ];
        if dims.contains(&0) {
            return Err(Error::Config(
                "antenna and RF-chain counts must be positive".into(),
            ));
        }
        if !self.n_tx().is_multiple_of(self.rf_tx) {
            return Err(Error::Config(format!(
                "M_T = {} does not divide N_T = {}",
                self.rf_tx,
                self.n_tx()
            )));
        }
        if !self.n_rx().is_multiple_of(self.rf_rx) {
            return Err(Error::Config(format!(
                "M_R = {} does not divide N_R = {}",
                self.rf_rx,
                self.n_rx()
            )));
        }
        if self.delay_taps == 0 || self.training_len == 0 {
            return Err(Error::Config("Q and D must be at least 1".into()));
        }
        if !self.training_len.is_power_of_two() {
            return Err(Error::Config(format!(
                "training length {} is not a power of two",
                self.training_len
            )));
        }
        if self.rf_tx > self.training_len {
            return Err(Error::Config(format!(
                "{} pilot streams need at least as many training symbols, got {}",
                self.rf_tx, self.training_len
            )));
        }
        if self.pad_pre + self.pad_post + 1 < self.delay_taps {
            return Err(Error::Config(format!(
                "pilot padding {} + {} is shorter than D - 1 = {}",
                self.pad_pre,
                self.pad_post,
                self.delay_taps - 1
            )));
        }
        if !(self.power_mw > 0.0 && self.power_mw.is_finite()) {
            return Err(Error::Config("transmit power must be positive".into()));
        }
        if !(self.noise_mw > 0.0 && self.noise_mw.is_finite()) {
            return Err(Error::Config("noise power must be positive".into()));
        }
        if self.k_res == 0 {
            return Err(Error::Config("K_res must be at least 1".into()));
        }
        if !(self.carrier_hz > 0.0) {
            return Err(Error::Config("carrier frequency must be positive".into()));
        }
        if self.pulse.kind == PulseKind::RaisedCosine && self.pulse.rolloff == 0.0 {
            log::debug!("raised-cosine pulse with zero roll-off is a sinc");
        }
        self.pulse.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        for name in PRESETS {
            SystemConfig::preset(name).unwrap().validate().unwrap();
        }
        assert!(SystemConfig::preset("system3").is_err());
    }

    #[test]
    fn dense_formula_for_full_systems() {
        let s1 = SystemConfig::preset("system1").unwrap();
        assert_eq!(s1.dense_formula(), (64 * 64 * 16 / 4, 16 * 64 * 64));
        let s2 = SystemConfig::preset("system2").unwrap();
        assert_eq!(s2.dense_formula(), (64 * 256 * 64 / 8, 64 * 256 * 64));
    }

    #[test]
    fn divisibility_enforced() {
        let mut c = SystemConfig::preset("system1-desk").unwrap();
        c.rf_rx = 3;
        assert!(c.validate().is_err());
        let mut c = SystemConfig::preset("system1-desk").unwrap();
        c.training_len = 12;
        assert!(c.validate().is_err());
        let mut c = SystemConfig::preset("system1-desk").unwrap();
        c.pad_pre = 2;
        c.pad_post = 2;
        assert!(c.validate().is_err());
    }

    #[test]
    fn dbm_round_trip() {
        assert!((dbm_to_mw(20.0) - 100.0).abs() < 1e-12);
        assert!((mw_to_dbm(dbm_to_mw(-81.0)) + 81.0).abs() < 1e-12);
    }
}
