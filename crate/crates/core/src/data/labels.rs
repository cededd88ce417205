//! Device and sensor class vocabulary.
//!
//! Three device models, five embedded cameras. The tablet exposes a single
//! sensor class whose token is `SGT2_F`; the token is used verbatim without
//! interpreting which physical side of the device it denotes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Device model (3-class, model-level experiments).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Device {
    #[serde(rename = "IP5")]
    Ip5,
    #[serde(rename = "SG4")]
    Sg4,
    #[serde(rename = "SGT2")]
    Sgt2,
}

impl Device {
    pub const ALL: [Device; 3] = [Device::Ip5, Device::Sg4, Device::Sgt2];

    pub fn token(&self) -> &'static str {
        match self {
            Device::Ip5 => "IP5",
            Device::Sg4 => "SG4",
            Device::Sgt2 => "SGT2",
        }
    }

    pub fn from_token(token: &str) -> Option<Device> {
        Device::ALL.iter().copied().find(|d| d.token() == token)
    }

    pub fn index(&self) -> usize {
        *self as usize
    }
}

/// Embedded camera (5-class, sensor-level experiments).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sensor {
    #[serde(rename = "IP5_F")]
    Ip5Front,
    #[serde(rename = "IP5_B")]
    Ip5Back,
    #[serde(rename = "SG4_F")]
    Sg4Front,
    #[serde(rename = "SG4_B")]
    Sg4Back,
    #[serde(rename = "SGT2_F")]
    Sgt2Front,
}

impl Sensor {
    pub const ALL: [Sensor; 5] = [
        Sensor::Ip5Front,
        Sensor::Ip5Back,
        Sensor::Sg4Front,
        Sensor::Sg4Back,
        Sensor::Sgt2Front,
    ];

    pub fn token(&self) -> &'static str {
        match self {
            Sensor::Ip5Front => "IP5_F",
            Sensor::Ip5Back => "IP5_B",
            Sensor::Sg4Front => "SG4_F",
            Sensor::Sg4Back => "SG4_B",
            Sensor::Sgt2Front => "SGT2_F",
        }
    }

    pub fn from_token(token: &str) -> Option<Sensor> {
        Sensor::ALL.iter().copied().find(|s| s.token() == token)
    }

    pub fn device(&self) -> Device {
        match self {
            Sensor::Ip5Front | Sensor::Ip5Back => Device::Ip5,
            Sensor::Sg4Front | Sensor::Sg4Back => Device::Sg4,
            Sensor::Sgt2Front => Device::Sgt2,
        }
    }

    pub fn index(&self) -> usize {
        *self as usize
    }
}

/// Whether patches are labeled by device model (3 classes) or by individual
/// sensor (5 classes).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    Model,
    Sensor,
}

impl LabelMode {
    /// Size of the full class vocabulary for this mode.
    pub fn num_classes(&self) -> usize {
        match self {
            LabelMode::Model => Device::ALL.len(),
            LabelMode::Sensor => Sensor::ALL.len(),
        }
    }

    pub fn label_of(&self, sensor: Sensor) -> usize {
        match self {
            LabelMode::Model => sensor.device().index(),
            LabelMode::Sensor => sensor.index(),
        }
    }

    /// Class names for the first `n` classes of this mode's vocabulary.
    pub fn class_names(&self, n: usize) -> Result<Vec<String>> {
        if n == 0 || n > self.num_classes() {
            return Err(Error::Config(format!(
                "{n} classes requested but {self:?} mode has {}",
                self.num_classes()
            )));
        }
        Ok(match self {
            LabelMode::Model => Device::ALL[..n].iter().map(|d| d.token().to_string()).collect(),
            LabelMode::Sensor => Sensor::ALL[..n].iter().map(|s| s.token().to_string()).collect(),
        })
    }

    pub fn parse(s: &str) -> Result<LabelMode> {
        match s {
            "model" => Ok(LabelMode::Model),
            "sensor" => Ok(LabelMode::Sensor),
            other => Err(Error::Config(format!(
                "unknown label mode '{other}' (expected 'model' or 'sensor')"
            ))),
        }
    }
}
