// SPDX-License-Identifier: Apache-2.0

//! JSON configuration: bus parameters, wiring and fault plans.
//!
//! ```json
//! {
//!   "cpu_data_width": 32,
//!   "num_channels": 2,
//!   "wires": [ { "tx": 0, "rx": [1] } ],
//!   "min_end_ns": 0
//! }
//! ```
//!
//! Faults come from a separate document and are attached to wires by index:
//!
//! ```json
//! { "faults": [
//!   { "wire": 0, "at_ns": 0, "kind": "flip_bit", "word_index": 3, "bit": 9 },
//!   { "wire": 0, "at_ns": 0, "kind": "truncate_word", "word_index": 5, "after_bits": 20 },
//!   { "wire": 0, "at_ns": 900000, "kind": "gap_violation", "shrink_to_bit_times": 1 }
//! ] }
//! ```

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::bus::BusConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FaultKind {
    /// Invert ARINC bit `bit` (1..=32) of the `word_index`-th word sent on the wire.
    FlipBit { word_index: u64, bit: u8 },
    /// Stop driving the `word_index`-th word after `after_bits` bits.
    TruncateWord { word_index: u64, after_bits: u8 },
    /// Shrink the next inter-word gap beginning at or after `at_ns`.
    GapViolation { shrink_to_bit_times: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fault {
    pub at_ns: u64,
    #[serde(flatten)]
    pub kind: FaultKind,
}

/// Faults for one wire, in non-decreasing time order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FaultPlan(pub Vec<Fault>);

impl FaultPlan {
    pub fn validate(&self, wire: usize) -> Result<(), SimError> {
        if self.0.windows(2).any(|w| w[1].at_ns < w[0].at_ns) {
            return Err(SimError::Config(format!("wire {wire}: fault timestamps must be non-decreasing")));
        }
        for f in &self.0 {
            match f.kind {
                FaultKind::FlipBit { bit, .. } if !(1..=32).contains(&bit) => {
                    return Err(SimError::Config(format!("wire {wire}: flip_bit bit {bit} outside 1..=32")));
                }
                FaultKind::TruncateWord { after_bits, .. } if after_bits > 31 => {
                    return Err(SimError::Config(format!(
                        "wire {wire}: truncate_word after_bits {after_bits} must be below 32"
                    )));
                }
                FaultKind::GapViolation { shrink_to_bit_times } if shrink_to_bit_times > 3 => {
                    return Err(SimError::Config(format!(
                        "wire {wire}: gap_violation must shrink below 4 bit times, got {shrink_to_bit_times}"
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wire {
    pub tx: u8,
    pub rx: Vec<u8>,
    #[serde(default, skip_serializing_if = "FaultPlan::is_empty")]
    pub faults: FaultPlan,
}

impl FaultPlan {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Topology {
    pub wires: Vec<Wire>,
}

impl Topology {
    /// Every Tx channel `i` wired to Rx channel `i`.
    pub fn loopback(num_channels: u8) -> Self {
        Self {
            wires: (0..num_channels)
                .map(|c| Wire {
                    tx: c,
                    rx: vec![c],
                    faults: FaultPlan::default(),
                })
                .collect(),
        }
    }

    pub fn validate(&self, num_channels: u8) -> Result<(), SimError> {
        let mut tx_used = [false; 16];
        let mut rx_used = [false; 16];
        for (i, w) in self.wires.iter().enumerate() {
            if w.tx >= num_channels {
                return Err(SimError::Config(format!("wire {i}: tx {} >= num_channels {num_channels}", w.tx)));
            }
            if std::mem::replace(&mut tx_used[w.tx as usize], true) {
                return Err(SimError::Config(format!("wire {i}: tx {} already drives another wire", w.tx)));
            }
            for &r in &w.rx {
                if r >= num_channels {
                    return Err(SimError::Config(format!("wire {i}: rx {r} >= num_channels {num_channels}")));
                }
                if std::mem::replace(&mut rx_used[r as usize], true) {
                    return Err(SimError::Config(format!("wire {i}: rx {r} already listens to a wire")));
                }
            }
            w.faults.validate(i)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(flatten)]
    pub bus: BusConfig,
    #[serde(default)]
    pub wires: Vec<Wire>,
    /// Keep simulating at least this long even if the bus goes quiet.
    #[serde(default)]
    pub min_end_ns: u64,
}

impl SimConfig {
    pub fn topology(&self) -> Topology {
        Topology {
            wires: self.wires.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let c: SimConfig = serde_json::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        c.bus.validate().map_err(|e| SimError::Config(e.to_string()))?;
        c.topology().validate(c.bus.num_channels)?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireFault {
    pub wire: usize,
    #[serde(flatten)]
    pub fault: Fault,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FaultFile {
    pub faults: Vec<WireFault>,
}

impl FaultFile {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::Config(e.to_string()))
    }

    /// Appends each fault to its wire's plan.
    pub fn apply(&self, topology: &mut Topology) -> Result<(), SimError> {
        for wf in &self.faults {
            let wire = topology
                .wires
                .get_mut(wf.wire)
                .ok_or_else(|| SimError::Config(format!("fault names wire {} which does not exist", wf.wire)))?;
            wire.faults.0.push(wf.fault);
        }
        Ok(())
    }
}
