//! JSON run configuration shared by the CLI and tests.
//!
//! Every field has a chloroform-scale default, so an empty object `{}` is a
//! complete configuration. Numeric values deserialize as `f64` and are
//! converted to the working scalar on use.

use crate::error::{Result, SpinSimError};
use crate::experiment::{ExperimentConfig, InputMode};
use crate::noise::{calibrate_inhomogeneity, NoiseSettings, RelaxationParams};
use crate::pulse::Oracle;
use crate::readout::{Acquisition, LINE_HALF_WINDOW};
use crate::spin::SpinSystem;
use crate::Real;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

fn default_epsilons() -> Vec<f64> {
    // hbar omega / kT for 500 MHz protons at 298 K, carbon 4x smaller
    vec![8.05e-5, 8.05e-5 / 4.0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    /// Target nutation-envelope decay constant for RF inhomogeneity.
    pub envelope_time_constant_s: f64,
    /// Number of RF scale factors in the inhomogeneity ensemble.
    pub ensemble_size: usize,
    /// Finite width attributed to each pulse.
    pub pulse_width_s: f64,
    /// Receiver signal-to-noise ratio per spin label.
    pub snr: BTreeMap<String, f64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        let mut snr = BTreeMap::new();
        snr.insert("A".to_string(), 4300.0);
        snr.insert("B".to_string(), 35.0);
        Self {
            envelope_time_constant_s: 200e-6,
            ensemble_size: 21,
            pulse_width_s: 12.5e-6,
            snr,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcquisitionConfig {
    pub n_samples: usize,
    pub dwell_s: f64,
    /// Exponential apodization in Hz; 0 disables it.
    pub line_broadening_hz: f64,
    /// Bins summed on each side of a line center.
    pub window_bins: usize,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            n_samples: 4096,
            dwell_s: 5e-4,
            line_broadening_hz: 0.0,
            window_bins: LINE_HALF_WINDOW,
        }
    }
}

/// Top-level configuration document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Spin system in the standard interchange layout
    /// (`{"spins": [...], "j_hz": {"A-B": 215}}`); omitted = chloroform.
    pub system: Option<serde_json::Value>,
    /// Per-spin hbar omega / kT ratios, same order as the spins.
    #[serde(default = "default_epsilons")]
    pub polarizations: Vec<f64>,
    pub noise: NoiseConfig,
    pub acquisition: AcquisitionConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            system: None,
            polarizations: default_epsilons(),
            noise: NoiseConfig::default(),
            acquisition: AcquisitionConfig::default(),
        }
    }
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SimConfig = serde_json::from_str(text)
            .map_err(|e| SpinSimError::InvalidConfig(format!("config JSON: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        // builds the system, which enforces the physical invariants
        let system = self.system::<f64>()?;
        if self.polarizations.len() != system.n_spins() {
            return Err(SpinSimError::InvalidConfig(
                "one polarization ratio per spin required".into(),
            ));
        }
        if self.noise.ensemble_size == 0 {
            return Err(SpinSimError::InvalidConfig(
                "noise ensemble must not be empty".into(),
            ));
        }
        if self.noise.pulse_width_s <= 0.0 || self.noise.envelope_time_constant_s <= 0.0 {
            return Err(SpinSimError::InvalidConfig(
                "pulse width and envelope time constant must be positive".into(),
            ));
        }
        for (label, &snr) in &self.noise.snr {
            system.index_of(label)?;
            if snr <= 0.0 {
                return Err(SpinSimError::InvalidConfig(format!(
                    "SNR for spin {label} must be positive"
                )));
            }
        }
        if self.acquisition.n_samples < 2 || self.acquisition.dwell_s <= 0.0 {
            return Err(SpinSimError::InvalidConfig(
                "acquisition needs >= 2 samples and a positive dwell time".into(),
            ));
        }
        Ok(())
    }

    pub fn system<T: Real>(&self) -> Result<SpinSystem<T>> {
        match &self.system {
            Some(v) => SpinSystem::from_json(&v.to_string()),
            None => Ok(SpinSystem::chloroform()),
        }
    }

    pub fn experiment<T: Real>(
        &self,
        oracle: Oracle,
        input_mode: InputMode,
        noise_enabled: bool,
    ) -> Result<ExperimentConfig<T>> {
        let mut cfg = ExperimentConfig::new(
            self.system()?,
            oracle,
            input_mode,
            self.polarizations.iter().map(|&p| T::of(p)).collect(),
        )?;
        cfg.noise_enabled = noise_enabled;
        Ok(cfg)
    }

    /// Noise settings with the RF distribution calibrated to the configured
    /// envelope time constant.
    pub fn noise_settings<T: Real>(&self) -> Result<NoiseSettings<T>> {
        let pulse_width = T::of(self.noise.pulse_width_s);
        let pulse_power = T::FRAC_PI_2() / pulse_width;
        let system = self.system::<T>()?;
        let polarizations: Vec<T> = self.polarizations.iter().map(|&p| T::of(p)).collect();
        Ok(NoiseSettings {
            rf: calibrate_inhomogeneity(
                T::of(self.noise.envelope_time_constant_s),
                pulse_power,
                self.noise.ensemble_size,
            )?,
            relax: RelaxationParams::thermal(&system, &polarizations)?,
            pulse_width_s: pulse_width,
        })
    }

    /// Acquisition for one detected spin; receiver noise is attached only
    /// when `with_receiver_noise` is set and an SNR is configured for the
    /// spin.
    pub fn acquisition<T: Real>(&self, spin: &str, with_receiver_noise: bool) -> Acquisition<T> {
        Acquisition {
            n_samples: self.acquisition.n_samples,
            dwell_s: T::of(self.acquisition.dwell_s),
            snr: if with_receiver_noise {
                self.noise.snr.get(spin).map(|&s| T::of(s))
            } else {
                None
            },
        }
    }
}
