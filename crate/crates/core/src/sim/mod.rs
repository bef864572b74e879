// SPDX-License-Identifier: Apache-2.0

//! Event-driven bus simulator.
//!
//! Time is integer nanoseconds. The loop jumps between the instants at which
//! something can change: a transmitter span ending, or a script `WAIT`
//! expiring. At each instant, in order:
//!
//! 1. receivers are fed the line levels held since the previous instant,
//! 2. due faults are armed on their wire's transmitter,
//! 3. transmitters advance,
//! 4. script directives run until the next `WAIT`, each followed by a
//!    transmitter tick so a freshly written word starts at once.
//!
//! The run ends when the script is exhausted, no `WAIT` is pending and every
//! transmitter is idle.

mod config;
mod report;
mod script;

use thiserror::Error;

pub use config::{Fault, FaultFile, FaultKind, FaultPlan, SimConfig, Topology, Wire, WireFault};
pub use report::{
    emit_trace, BusWarning, ChannelWords, EventKind, ExpectationFailure, InterruptEdge, ReadRecord, ReceivedWord,
    SimEvent, SimulationReport, WireTrace,
};
pub use script::{Directive, ScriptError, ScriptLine, StimulusScript};

use crate::bus::{AccessWarning, BusConfig, BusError, Core429, InterruptState};
use crate::channel::{LineFault, RxNotification};
use crate::line::{LineLevel, Span};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("simulation aborted at script line {line}: {source}")]
    Abort { line: usize, source: BusError },
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error("no wire {0}")]
    NoSuchWire(usize),
}

struct WireState {
    tx: u8,
    faults: Vec<Fault>,
    next_fault: usize,
    level: LineLevel,
    idle_since: Option<u64>,
    trace: WireTrace,
}

impl WireState {
    fn record(&mut self, now: u64, span: Option<Span>, busy: bool) {
        match span {
            Some(s) => {
                if let Some(start) = self.idle_since.take() {
                    if now > start {
                        self.trace.spans.push((start, Span::new(now - start, LineLevel::Null)));
                    }
                }
                self.trace.spans.push((now, s));
                self.level = s.level;
            }
            None if !busy => {
                self.level = LineLevel::Null;
                self.idle_since.get_or_insert(now);
            }
            None => {}
        }
    }
}

struct Engine {
    core: Core429,
    wires: Vec<WireState>,
    /// Rx channel -> wire index.
    rx_wire: Vec<Option<usize>>,
    now: u64,
    irq: InterruptState,
    report: SimulationReport,
}

impl Engine {
    fn new(bus: BusConfig, topology: &Topology) -> Result<Self, SimError> {
        let core = Core429::new(bus).map_err(|e| SimError::Config(e.to_string()))?;
        topology.validate(bus.num_channels)?;
        let n = bus.num_channels as usize;
        let mut rx_wire = vec![None; n];
        let wires = topology
            .wires
            .iter()
            .enumerate()
            .map(|(i, w)| {
                for &r in &w.rx {
                    rx_wire[r as usize] = Some(i);
                }
                WireState {
                    tx: w.tx,
                    faults: w.faults.0.clone(),
                    next_fault: 0,
                    level: LineLevel::Null,
                    idle_since: Some(0),
                    trace: WireTrace::default(),
                }
            })
            .collect();
        let irq = core.interrupts();
        let report = SimulationReport {
            end_ns: 0,
            received: (0..bus.num_channels)
                .map(|channel| ChannelWords {
                    channel,
                    words: Vec::new(),
                })
                .collect(),
            events: Vec::new(),
            interrupt_edges: Vec::new(),
            reads: Vec::new(),
            bus_warnings: Vec::new(),
            expectation_failures: Vec::new(),
            final_state: core.snapshot(),
            traces: Vec::new(),
        };
        Ok(Self {
            core,
            wires,
            rx_wire,
            now: 0,
            irq,
            report,
        })
    }

    fn note_irq(&mut self, t_ns: u64) {
        let irq = self.core.interrupts();
        if irq != self.irq {
            self.irq = irq;
            self.report.interrupt_edges.push(InterruptEdge { t_ns, state: irq });
        }
    }

    fn feed_receivers(&mut self, until: u64) {
        let dt = until - self.now;
        if dt == 0 {
            return;
        }
        for ch in 0..self.core.num_channels() {
            let level = self.rx_wire[ch as usize].map_or(LineLevel::Null, |w| self.wires[w].level);
            for n in self.core.rx_feed(ch, level, dt) {
                let (kind, word) = match n {
                    RxNotification::Stored(w) => {
                        self.report.received[ch as usize]
                            .words
                            .push(ReceivedWord { t_ns: until, word: w });
                        continue;
                    }
                    RxNotification::ParityError(w) => (EventKind::ParityError, Some(w)),
                    RxNotification::Filtered(w) => (EventKind::LabelFiltered, Some(w)),
                    RxNotification::Overflow(w) => (EventKind::RxOverflow, Some(w)),
                    RxNotification::Discarded(w) => (EventKind::Discarded, Some(w)),
                    RxNotification::LineError(k) => (k.into(), None),
                };
                self.report.events.push(SimEvent {
                    t_ns: until,
                    channel: ch,
                    kind,
                    word,
                });
            }
        }
        self.note_irq(until);
    }

    fn arm_faults(&mut self) {
        for w in &mut self.wires {
            while let Some(f) = w.faults.get(w.next_fault).filter(|f| f.at_ns <= self.now) {
                let tx = self.core.tx_mut(w.tx);
                match f.kind {
                    FaultKind::FlipBit { word_index, bit } => tx.arm_fault(word_index, LineFault::FlipBit { bit }),
                    FaultKind::TruncateWord { word_index, after_bits } => {
                        tx.arm_fault(word_index, LineFault::Truncate { after_bits })
                    }
                    FaultKind::GapViolation { shrink_to_bit_times } => tx.arm_gap_violation(shrink_to_bit_times),
                }
                w.next_fault += 1;
            }
        }
    }

    fn tick(&mut self) {
        let out = self.core.tick(self.now);
        for w in &mut self.wires {
            let o = &out[w.tx as usize];
            w.record(self.now, o.span, self.core.tx(w.tx).is_busy());
        }
        self.note_irq(self.now);
    }

    fn warn(&mut self, line: usize, address: u16, warnings: Vec<AccessWarning>) {
        let t_ns = self.now;
        self.report
            .bus_warnings
            .extend(warnings.into_iter().map(|warning| BusWarning {
                line,
                t_ns,
                address,
                warning,
            }));
    }

    /// Runs one directive; returns a wake-up time for `WAIT`.
    fn execute(&mut self, sl: &ScriptLine) -> Result<Option<u64>, SimError> {
        let abort = |source| SimError::Abort { line: sl.line, source };
        match sl.directive {
            Directive::Write { address, value } => {
                let w = self.core.write_register(address, value).map_err(abort)?;
                self.warn(sl.line, address, w);
                self.tick();
            }
            Directive::Read { address, expect } => {
                let (value, w) = self.core.read_register(address).map_err(abort)?;
                self.warn(sl.line, address, w);
                self.report.reads.push(ReadRecord {
                    line: sl.line,
                    t_ns: self.now,
                    address,
                    value,
                    expected: expect,
                });
                if let Some(e) = expect.filter(|e| *e != value) {
                    self.report.expectation_failures.push(ExpectationFailure {
                        line: sl.line,
                        t_ns: self.now,
                        message: format!("READ 0x{address:03X}: expected 0x{e:08X}, got 0x{value:08X}"),
                    });
                }
                self.note_irq(self.now);
            }
            Directive::Wait { ns } => return Ok(Some(self.now + ns)),
            Directive::ExpectIrq { level } => {
                let actual = self.core.interrupts().int_out;
                if actual != level {
                    self.report.expectation_failures.push(ExpectationFailure {
                        line: sl.line,
                        t_ns: self.now,
                        message: format!("EXPECT_IRQ {}: int_out is {}", level as u8, actual as u8),
                    });
                }
            }
        }
        Ok(None)
    }

    fn run(mut self, script: &StimulusScript, min_end_ns: u64) -> Result<SimulationReport, SimError> {
        let mut pc = 0;
        let mut wake: Option<u64> = None;
        loop {
            self.arm_faults();
            self.tick();
            if wake.is_some_and(|t| t <= self.now) {
                wake = None;
            }
            while wake.is_none() && pc < script.lines.len() {
                wake = self.execute(&script.lines[pc])?;
                pc += 1;
            }
            let next = [
                self.core.next_tx_event_ns(),
                wake,
                (self.now < min_end_ns).then_some(min_end_ns),
            ]
            .into_iter()
            .flatten()
            .min();
            let Some(next) = next else { break };
            self.feed_receivers(next);
            self.now = next;
        }
        let end = self.now;
        for w in &mut self.wires {
            if let Some(start) = w.idle_since.take() {
                if end > start {
                    w.trace.spans.push((start, Span::new(end - start, LineLevel::Null)));
                }
            }
        }
        self.report.end_ns = end;
        self.report.final_state = self.core.snapshot();
        self.report.traces = self.wires.into_iter().map(|w| w.trace).collect();
        Ok(self.report)
    }
}

pub fn run_simulation(
    config: BusConfig,
    topology: &Topology,
    script: &StimulusScript,
    min_end_ns: u64,
) -> Result<SimulationReport, SimError> {
    Engine::new(config, topology)?.run(script, min_end_ns)
}

/// Runs a parsed configuration with faults merged into its topology.
pub fn run_config(
    config: &SimConfig,
    script: &StimulusScript,
    faults: Option<&FaultFile>,
) -> Result<SimulationReport, SimError> {
    let mut topology = config.topology();
    if let Some(f) = faults {
        f.apply(&mut topology)?;
    }
    run_simulation(config.bus, &topology, script, config.min_end_ns)
}
