// SPDX-License-Identifier: Apache-2.0

use serde::Serialize;

use super::SimError;
use crate::bus::{AccessWarning, CoreSnapshot, InterruptState};
use crate::line::{RxErrorKind, Span};
use crate::word::Arinc429Word;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReceivedWord {
    pub t_ns: u64,
    pub word: Arinc429Word,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChannelWords {
    pub channel: u8,
    pub words: Vec<ReceivedWord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    ParityError,
    RxOverflow,
    LabelFiltered,
    Discarded,
    RzViolation,
    ShortWord,
    LongWord,
}

impl EventKind {
    /// Line and data errors, as opposed to informational drops.
    pub fn is_error(self) -> bool {
        !matches!(self, EventKind::LabelFiltered | EventKind::Discarded)
    }
}

impl From<RxErrorKind> for EventKind {
    fn from(k: RxErrorKind) -> Self {
        match k {
            RxErrorKind::RzViolation => EventKind::RzViolation,
            RxErrorKind::ShortWord => EventKind::ShortWord,
            RxErrorKind::LongWord => EventKind::LongWord,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimEvent {
    pub t_ns: u64,
    pub channel: u8,
    pub kind: EventKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub word: Option<Arinc429Word>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InterruptEdge {
    pub t_ns: u64,
    #[serde(flatten)]
    pub state: InterruptState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReadRecord {
    pub line: usize,
    pub t_ns: u64,
    pub address: u16,
    pub value: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BusWarning {
    pub line: usize,
    pub t_ns: u64,
    pub address: u16,
    #[serde(flatten)]
    pub warning: AccessWarning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExpectationFailure {
    pub line: usize,
    pub t_ns: u64,
    pub message: String,
}

/// Every constant-level span seen on one wire; the spans tile `[0, end_ns)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WireTrace {
    pub spans: Vec<(u64, Span)>,
}

impl WireTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.spans.len() * 18);
        for (t, s) in &self.spans {
            out.push_str(&format!("{},{},{}\n", t, s.duration_ns, s.level));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimulationReport {
    pub end_ns: u64,
    pub received: Vec<ChannelWords>,
    pub events: Vec<SimEvent>,
    pub interrupt_edges: Vec<InterruptEdge>,
    pub reads: Vec<ReadRecord>,
    pub bus_warnings: Vec<BusWarning>,
    pub expectation_failures: Vec<ExpectationFailure>,
    pub final_state: CoreSnapshot,
    #[serde(skip)]
    pub traces: Vec<WireTrace>,
}

impl SimulationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn received_words(&self, channel: u8) -> Vec<Arinc429Word> {
        self.received
            .iter()
            .find(|c| c.channel == channel)
            .map(|c| c.words.iter().map(|r| r.word).collect())
            .unwrap_or_default()
    }

    pub fn error_count(&self) -> usize {
        self.events.iter().filter(|e| e.kind.is_error()).count()
    }
}

pub fn emit_trace(report: &SimulationReport, wire: usize) -> Result<String, SimError> {
    report
        .traces
        .get(wire)
        .map(WireTrace::to_csv)
        .ok_or(SimError::NoSuchWire(wire))
}
