// SPDX-License-Identifier: Apache-2.0

//! Core top level: up to 16 Tx/Rx channel pairs behind the CPU interface.
//!
//! A 9-bit CPU address splits into `channel = addr[8:5]` and
//! `offset = addr[4:0]`. Registers wider than the CPU data bus are moved in
//! several beats, least-significant beat first; `wait_beats` on each access
//! reports how many beats are still owed (the `cpu_wait` handshake).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelError, RxChannel, RxNotification, TxChannel};
use crate::fifo::FifoError;
use crate::line::{LineLevel, Span};
use crate::word::Arinc429Word;

pub const MAX_CHANNELS: u8 = 16;
pub const ADDRESS_SPACE: u16 = 512;
pub const CHANNEL_STRIDE: u16 = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BusError {
    #[error("address 0x{0:03X} exceeds cpu_add[8:0]")]
    AddressRange(u16),
    #[error("unmapped address 0x{address:03X} (channel {channel}, offset 0x{offset:02X})")]
    UnmappedAddress { address: u16, channel: u8, offset: u8 },
    #[error("data 0x{data:X} wider than the {width}-bit cpu bus")]
    DataWidth { data: u32, width: u8 },
    #[error("cpu_data_width must be 8, 16 or 32, got {0}")]
    InvalidWidth(u8),
    #[error("num_channels must be 1..=16, got {0}")]
    InvalidChannelCount(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BusConfig {
    pub cpu_data_width: u8,
    pub num_channels: u8,
}

impl Default for BusConfig {
    fn default() -> Self {
        Self {
            cpu_data_width: 32,
            num_channels: MAX_CHANNELS,
        }
    }
}

impl BusConfig {
    pub fn new(cpu_data_width: u8, num_channels: u8) -> Result<Self, BusError> {
        let c = Self {
            cpu_data_width,
            num_channels,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), BusError> {
        if !matches!(self.cpu_data_width, 8 | 16 | 32) {
            return Err(BusError::InvalidWidth(self.cpu_data_width));
        }
        if !(1..=MAX_CHANNELS).contains(&self.num_channels) {
            return Err(BusError::InvalidChannelCount(self.num_channels));
        }
        Ok(())
    }

    fn data_mask(&self) -> u32 {
        if self.cpu_data_width == 32 {
            u32::MAX
        } else {
            (1 << self.cpu_data_width) - 1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Access {
    ReadWrite,
    ReadOnly,
    WriteOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Register {
    TxControl,
    TxStatus,
    TxFifo,
    RxControl,
    RxStatus,
    RxFifo,
    TxFifoLevel,
    RxFifoLevel,
    LabelIndex,
    LabelEnable,
}

impl Register {
    pub const ALL: [Register; 10] = [
        Register::TxControl,
        Register::TxStatus,
        Register::TxFifo,
        Register::RxControl,
        Register::RxStatus,
        Register::RxFifo,
        Register::TxFifoLevel,
        Register::RxFifoLevel,
        Register::LabelIndex,
        Register::LabelEnable,
    ];

    pub const fn offset(self) -> u8 {
        self as u8
    }

    pub const fn access(self) -> Access {
        match self {
            Register::TxStatus | Register::RxStatus | Register::RxFifo => Access::ReadOnly,
            Register::TxFifo => Access::WriteOnly,
            _ => Access::ReadWrite,
        }
    }

    /// Bits carried by the register, which sets how many beats it takes.
    pub const fn width_bits(self) -> u8 {
        match self {
            Register::TxFifo | Register::RxFifo => 32,
            Register::TxFifoLevel | Register::RxFifoLevel => 16,
            _ => 8,
        }
    }

    pub const fn beats(self, cpu_data_width: u8) -> u8 {
        self.width_bits().div_ceil(cpu_data_width)
    }

    pub const fn name(self) -> &'static str {
        match self {
            Register::TxControl => "TX_CONTROL",
            Register::TxStatus => "TX_STATUS",
            Register::TxFifo => "TX_FIFO",
            Register::RxControl => "RX_CONTROL",
            Register::RxStatus => "RX_STATUS",
            Register::RxFifo => "RX_FIFO",
            Register::TxFifoLevel => "TX_FIFO_LEVEL",
            Register::RxFifoLevel => "RX_FIFO_LEVEL",
            Register::LabelIndex => "LABEL_INDEX",
            Register::LabelEnable => "LABEL_ENABLE",
        }
    }
}

impl fmt::Display for Register {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn register_map(offset: u8) -> Option<Register> {
    Register::ALL.get(offset as usize).copied()
}

/// Splits a 9-bit address into (channel, offset).
pub fn decode_address(address: u16) -> Result<(u8, u8), BusError> {
    if address >= ADDRESS_SPACE {
        return Err(BusError::AddressRange(address));
    }
    Ok(((address >> 5) as u8, (address & 0x1F) as u8))
}

pub const fn encode_address(channel: u8, reg: Register) -> u16 {
    channel as u16 * CHANNEL_STRIDE + reg.offset() as u16
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccessKind {
    Read,
    Write,
}

/// One CPU bus beat. `kind` stands in for the active-low `cpu_ren`/`cpu_wen` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BusTransaction {
    pub kind: AccessKind,
    pub address: u16,
    pub data: u32,
}

impl BusTransaction {
    pub fn read(address: u16) -> Self {
        Self {
            kind: AccessKind::Read,
            address,
            data: 0,
        }
    }

    pub fn write(address: u16, data: u32) -> Self {
        Self {
            kind: AccessKind::Write,
            address,
            data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case", tag = "warning")]
pub enum AccessWarning {
    /// Read of a write-only port; reads as 0.
    WriteOnlyRead,
    /// Write to a read-only register; ignored.
    ReadOnlyWrite,
    /// A multi-beat access was abandoned before its last beat; the partial word is discarded.
    ProtocolViolation { address: u16 },
    RxFifoEmpty,
    TxFifoOverflow,
    LevelRange { value: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AccessResult {
    pub data: Option<u32>,
    pub wait_beats: u8,
    pub warnings: Vec<AccessWarning>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct InterruptState {
    pub int_out_rx: bool,
    pub int_out_tx: bool,
    pub int_out: bool,
}

impl InterruptState {
    pub fn from_lines(int_out_rx: bool, int_out_tx: bool) -> Self {
        Self {
            int_out_rx,
            int_out_tx,
            int_out: int_out_rx || int_out_tx,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct PartialAccess {
    kind: AccessKind,
    address: u16,
    beats_done: u8,
    beats_total: u8,
    value: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LineOutput {
    pub channel: u8,
    pub at_ns: u64,
    /// Level on the line from `at_ns` on.
    pub level: LineLevel,
    /// Set when a new span starts at `at_ns`.
    pub span: Option<Span>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChannelSnapshot {
    pub channel: u8,
    pub tx_control: u8,
    pub tx_status: u8,
    pub tx_fifo_level: u16,
    pub tx_fifo: Vec<Arinc429Word>,
    pub tx_in_flight: Option<Arinc429Word>,
    pub rx_control: u8,
    pub rx_status: u8,
    pub rx_fifo_level: u16,
    pub rx_fifo: Vec<Arinc429Word>,
    pub label_index: u8,
    /// Enabled labels in octal.
    pub enabled_labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoreSnapshot {
    pub interrupts: InterruptState,
    pub channels: Vec<ChannelSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Core429 {
    config: BusConfig,
    tx: Vec<TxChannel>,
    rx: Vec<RxChannel>,
    label_index: Vec<u8>,
    line: Vec<LineLevel>,
    partial: Option<PartialAccess>,
    irq: InterruptState,
}

impl Core429 {
    pub fn new(config: BusConfig) -> Result<Self, BusError> {
        config.validate()?;
        let n = config.num_channels as usize;
        let mut core = Self {
            config,
            tx: vec![TxChannel::new(); n],
            rx: vec![RxChannel::new(); n],
            label_index: vec![0; n],
            line: vec![LineLevel::Null; n],
            partial: None,
            irq: InterruptState::default(),
        };
        core.refresh_interrupts();
        Ok(core)
    }

    pub fn config(&self) -> BusConfig {
        self.config
    }

    pub fn num_channels(&self) -> u8 {
        self.config.num_channels
    }

    pub fn tx(&self, ch: u8) -> &TxChannel {
        &self.tx[ch as usize]
    }

    pub fn rx(&self, ch: u8) -> &RxChannel {
        &self.rx[ch as usize]
    }

    /// Direct channel access for fault injection and test benches; the
    /// interrupt lines are refreshed on the next core operation.
    pub fn tx_mut(&mut self, ch: u8) -> &mut TxChannel {
        &mut self.tx[ch as usize]
    }

    pub fn interrupts(&self) -> InterruptState {
        self.irq
    }

    fn refresh_interrupts(&mut self) {
        self.irq = aggregate_interrupts(self);
    }

    /// Resolves an address to its channel and register for this core.
    pub fn resolve(&self, address: u16) -> Result<(u8, Register), BusError> {
        let (channel, offset) = decode_address(address)?;
        match register_map(offset) {
            Some(reg) if channel < self.config.num_channels => Ok((channel, reg)),
            _ => Err(BusError::UnmappedAddress {
                address,
                channel,
                offset,
            }),
        }
    }

    /// Performs one bus beat.
    pub fn cpu_access(&mut self, txn: BusTransaction) -> Result<AccessResult, BusError> {
        let mut result = AccessResult::default();
        if let Some(p) = self.partial.take() {
            if p.address == txn.address && p.kind == txn.kind {
                self.partial = Some(p);
            } else {
                result.warnings.push(AccessWarning::ProtocolViolation { address: p.address });
            }
        }
        let (channel, reg) = self.resolve(txn.address)?;
        if txn.kind == AccessKind::Write && txn.data & !self.config.data_mask() != 0 {
            return Err(BusError::DataWidth {
                data: txn.data,
                width: self.config.cpu_data_width,
            });
        }

        let width = self.config.cpu_data_width;
        let beats = reg.beats(width);
        match (txn.kind, reg.access()) {
            (AccessKind::Read, Access::WriteOnly) => {
                result.data = Some(0);
                result.warnings.push(AccessWarning::WriteOnlyRead);
            }
            (AccessKind::Write, Access::ReadOnly) => {
                result.warnings.push(AccessWarning::ReadOnlyWrite);
            }
            (kind, _) if beats == 1 => match kind {
                AccessKind::Read => result.data = Some(self.read_reg(channel, reg, &mut result.warnings)),
                AccessKind::Write => self.write_reg(channel, reg, txn.data, &mut result.warnings),
            },
            (kind, _) => {
                let mut p = match self.partial.take() {
                    Some(p) => p,
                    None => {
                        let value = match kind {
                            AccessKind::Read => {
                                if reg == Register::RxFifo && self.rx[channel as usize].fifo().is_empty() {
                                    // nothing to stream out; single-beat zero
                                    result.data = Some(0);
                                    result.warnings.push(AccessWarning::RxFifoEmpty);
                                    self.refresh_interrupts();
                                    return Ok(result);
                                }
                                self.peek_reg(channel, reg)
                            }
                            AccessKind::Write => 0,
                        };
                        PartialAccess {
                            kind,
                            address: txn.address,
                            beats_done: 0,
                            beats_total: beats,
                            value,
                        }
                    }
                };
                let shift = p.beats_done as u32 * width as u32;
                match kind {
                    AccessKind::Read => {
                        result.data = Some((p.value >> shift) & self.config.data_mask());
                    }
                    AccessKind::Write => p.value |= txn.data << shift,
                }
                p.beats_done += 1;
                result.wait_beats = p.beats_total - p.beats_done;
                if result.wait_beats == 0 {
                    match kind {
                        AccessKind::Read => {
                            self.read_reg(channel, reg, &mut result.warnings);
                        }
                        AccessKind::Write => self.write_reg(channel, reg, p.value, &mut result.warnings),
                    }
                } else {
                    self.partial = Some(p);
                }
            }
        }
        self.refresh_interrupts();
        Ok(result)
    }

    /// Value a read would return, without side effects.
    fn peek_reg(&self, ch: u8, reg: Register) -> u32 {
        let (tx, rx) = (&self.tx[ch as usize], &self.rx[ch as usize]);
        match reg {
            Register::TxControl => tx.control() as u32,
            Register::TxStatus => tx.peek_status() as u32,
            Register::TxFifo => 0,
            Register::RxControl => rx.control() as u32,
            Register::RxStatus => rx.peek_status() as u32,
            Register::RxFifo => rx.fifo().peek().map_or(0, |w| w.raw()),
            Register::TxFifoLevel => tx.fifo().level() as u32,
            Register::RxFifoLevel => rx.fifo().level() as u32,
            Register::LabelIndex => self.label_index[ch as usize] as u32,
            Register::LabelEnable => rx.label_enabled(self.label_index[ch as usize]) as u32,
        }
    }

    fn read_reg(&mut self, ch: u8, reg: Register, warnings: &mut Vec<AccessWarning>) -> u32 {
        let i = ch as usize;
        match reg {
            Register::TxStatus => self.tx[i].read_status() as u32,
            Register::RxStatus => self.rx[i].read_status() as u32,
            Register::RxFifo => match self.rx[i].read_word() {
                Ok(w) => w.raw(),
                Err(_) => {
                    warnings.push(AccessWarning::RxFifoEmpty);
                    0
                }
            },
            _ => self.peek_reg(ch, reg),
        }
    }

    fn write_reg(&mut self, ch: u8, reg: Register, value: u32, warnings: &mut Vec<AccessWarning>) {
        let i = ch as usize;
        let level = |r: Result<(), ChannelError>, warnings: &mut Vec<AccessWarning>| {
            if r.is_err() {
                warnings.push(AccessWarning::LevelRange { value });
            }
        };
        match reg {
            Register::TxControl => self.tx[i].write_control(value as u8),
            Register::RxControl => self.rx[i].write_control(value as u8),
            Register::TxFifo => {
                if let Err(ChannelError::Fifo(FifoError::Overflow)) = self.tx[i].write_word(Arinc429Word(value)) {
                    warnings.push(AccessWarning::TxFifoOverflow);
                }
            }
            Register::TxFifoLevel => level(self.tx[i].set_fifo_level(value), warnings),
            Register::RxFifoLevel => level(self.rx[i].set_fifo_level(value), warnings),
            Register::LabelIndex => self.label_index[i] = value as u8,
            Register::LabelEnable => {
                let label = self.label_index[i];
                self.rx[i]
                    .set_label(label as u16, value & 1 == 1)
                    .expect("label index is 8 bits");
            }
            Register::TxStatus | Register::RxStatus | Register::RxFifo => unreachable!("read-only"),
        }
    }

    /// Whole-register write, split into as many beats as the bus width needs.
    pub fn write_register(&mut self, address: u16, value: u32) -> Result<Vec<AccessWarning>, BusError> {
        let (_, reg) = self.resolve(address)?;
        let width = self.config.cpu_data_width;
        let mask = self.config.data_mask();
        let beats = if reg.access() == Access::ReadOnly { 1 } else { reg.beats(width) };
        let mut warnings = Vec::new();
        for b in 0..beats {
            let chunk = if beats == 1 { value & mask } else { (value >> (b as u32 * width as u32)) & mask };
            warnings.extend(self.cpu_access(BusTransaction::write(address, chunk))?.warnings);
        }
        Ok(warnings)
    }

    /// Whole-register read, reassembling beats.
    pub fn read_register(&mut self, address: u16) -> Result<(u32, Vec<AccessWarning>), BusError> {
        let width = self.config.cpu_data_width as u32;
        let mut value = 0u32;
        let mut warnings = Vec::new();
        let mut beat = 0u32;
        loop {
            let r = self.cpu_access(BusTransaction::read(address))?;
            value |= r.data.unwrap_or(0) << (beat * width);
            warnings.extend(r.warnings);
            beat += 1;
            if r.wait_beats == 0 {
                break;
            }
        }
        Ok((value, warnings))
    }

    /// Feeds one span of line activity into an Rx channel.
    pub fn rx_feed(&mut self, ch: u8, level: LineLevel, duration_ns: u64) -> Vec<RxNotification> {
        let n = self.rx[ch as usize].feed(level, duration_ns);
        self.refresh_interrupts();
        n
    }

    /// Advances every Tx serializer to `now_ns`.
    pub fn tick(&mut self, now_ns: u64) -> Vec<LineOutput> {
        let mut out = Vec::with_capacity(self.tx.len());
        for (i, tx) in self.tx.iter_mut().enumerate() {
            let span = tx.tick(now_ns);
            match span {
                Some(s) => self.line[i] = s.level,
                None if !tx.is_busy() => self.line[i] = LineLevel::Null,
                None => {}
            }
            out.push(LineOutput {
                channel: i as u8,
                at_ns: now_ns,
                level: self.line[i],
                span,
            });
        }
        self.refresh_interrupts();
        out
    }

    /// Earliest pending Tx span end.
    pub fn next_tx_event_ns(&self) -> Option<u64> {
        self.tx.iter().filter_map(TxChannel::busy_until_ns).min()
    }

    pub fn snapshot(&self) -> CoreSnapshot {
        let channels = (0..self.config.num_channels)
            .map(|c| {
                let (tx, rx) = (&self.tx[c as usize], &self.rx[c as usize]);
                ChannelSnapshot {
                    channel: c,
                    tx_control: tx.control(),
                    tx_status: tx.peek_status(),
                    tx_fifo_level: tx.fifo().level(),
                    tx_fifo: tx.fifo().iter().collect(),
                    tx_in_flight: tx.in_flight(),
                    rx_control: rx.control(),
                    rx_status: rx.peek_status(),
                    rx_fifo_level: rx.fifo().level(),
                    rx_fifo: rx.fifo().iter().collect(),
                    label_index: self.label_index[c as usize],
                    enabled_labels: rx
                        .label_table()
                        .iter()
                        .enumerate()
                        .filter(|(_, on)| **on)
                        .map(|(l, _)| format!("{l:03o}"))
                        .collect(),
                }
            })
            .collect();
        CoreSnapshot {
            interrupts: self.irq,
            channels,
        }
    }
}

pub fn aggregate_interrupts(core: &Core429) -> InterruptState {
    InterruptState::from_lines(
        core.rx.iter().any(RxChannel::interrupt),
        core.tx.iter().any(TxChannel::interrupt),
    )
}

pub fn cpu_access(core: &mut Core429, txn: BusTransaction) -> Result<AccessResult, BusError> {
    core.cpu_access(txn)
}

pub fn core_tick(core: &mut Core429, now_ns: u64) -> Vec<LineOutput> {
    core.tick(now_ns)
}
