use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Per-device error and timing parameters.
///
/// `p1`/`p2` are depolarizing probabilities applied after every one- and
/// two-qubit gate, `readout` is a symmetric per-qubit bit-flip probability.
/// Gate durations and coherence times are in microseconds; they only feed
/// the fidelity estimate, the simulator does not model thermal relaxation.
/// Fields missing from a config file take their [`NoiseModel::noiseless`] value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    pub p1: f64,
    pub p2: f64,
    pub readout: f64,
    pub t_g1: f64,
    pub t_g2: f64,
    pub t1: f64,
    pub t2: f64,
}

impl NoiseModel {
    /// Zero error rates with nominal superconducting timings.
    pub fn noiseless() -> Self {
        NoiseModel {
            p1: 0.0,
            p2: 0.0,
            readout: 0.0,
            t_g1: 0.035,
            t_g2: 0.4,
            t1: 100.0,
            t2: 100.0,
        }
    }

    pub fn with_rates(p1: f64, p2: f64, readout: f64) -> Self {
        NoiseModel {
            p1,
            p2,
            readout,
            ..Self::noiseless()
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.p1 == 0.0 && self.p2 == 0.0 && self.readout == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p1", self.p1), ("p2", self.p2)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(format!("{name} = {p} outside [0, 1]")));
            }
        }
        if !(0.0..=0.5).contains(&self.readout) {
            return Err(invalid(format!(
                "readout = {} outside [0, 0.5]",
                self.readout
            )));
        }
        for (name, t) in [("t_g1", self.t_g1), ("t_g2", self.t_g2)] {
            if !(t.is_finite() && t >= 0.0) {
                return Err(invalid(format!(
                    "{name} = {t} must be a non-negative duration"
                )));
            }
        }
        for (name, t) in [("t1", self.t1), ("t2", self.t2)] {
            if !(t.is_finite() && t > 0.0) {
                return Err(invalid(format!("{name} = {t} must be positive")));
            }
        }
        Ok(())
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::noiseless()
    }
}
