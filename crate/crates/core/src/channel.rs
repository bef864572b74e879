// SPDX-License-Identifier: Apache-2.0

//! Transmit and receive channels: control/status registers, the serializer
//! and demodulator glue, label filtering and per-channel interrupts.
//!
//! Control register layout (both directions):
//!
//! | bit | meaning                                      |
//! |-----|----------------------------------------------|
//! | 0   | enable                                       |
//! | 1   | parity enable (Tx: insert, Rx: check)        |
//! | 2   | rate select, 0 = high, 1 = low               |
//! | 3   | label filter enable (Rx only)                |
//! | 4   | interrupt on FIFO empty                      |
//! | 5   | interrupt on FIFO half full                  |
//! | 6   | interrupt on FIFO full                       |
//! | 7   | reserved, reads 0                            |
//!
//! Status register: bits 0..=2 mirror the FIFO flags (empty, half full,
//! full), bit 3 is the sticky Rx parity error and bit 4 the sticky FIFO
//! overflow. Sticky bits clear when status is read.

use serde::Serialize;
use thiserror::Error;

use crate::fifo::{FifoError, WordFifo};
use crate::line::{modulate_word, BitRate, LineLevel, RxErrorKind, RxEvent, DemodState, Span, SymbolStream};
use crate::word::{self, Arinc429Word, CodecError, WordFields};

pub mod control {
    pub const ENABLE: u8 = 0x01;
    pub const PARITY: u8 = 0x02;
    pub const RATE_LOW: u8 = 0x04;
    pub const LABEL_FILTER: u8 = 0x08;
    pub const IRQ_EMPTY: u8 = 0x10;
    pub const IRQ_HALF_FULL: u8 = 0x20;
    pub const IRQ_FULL: u8 = 0x40;
    pub const IRQ_ALL: u8 = IRQ_EMPTY | IRQ_HALF_FULL | IRQ_FULL;

    pub const TX_WRITABLE: u8 = 0x77;
    pub const RX_WRITABLE: u8 = 0x7F;
}

pub mod status {
    pub const EMPTY: u8 = 0x01;
    pub const HALF_FULL: u8 = 0x02;
    pub const FULL: u8 = 0x04;
    pub const PARITY_ERROR: u8 = 0x08;
    pub const OVERFLOW: u8 = 0x10;
    pub const FLAGS: u8 = EMPTY | HALF_FULL | FULL;
    pub const STICKY: u8 = PARITY_ERROR | OVERFLOW;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub struct ControlBits(u8);

impl ControlBits {
    pub const fn new(raw: u8) -> Self {
        Self(raw)
    }

    pub const fn raw(self) -> u8 {
        self.0
    }

    pub const fn enabled(self) -> bool {
        self.0 & control::ENABLE != 0
    }

    pub const fn parity_enabled(self) -> bool {
        self.0 & control::PARITY != 0
    }

    pub const fn rate(self) -> BitRate {
        if self.0 & control::RATE_LOW != 0 {
            BitRate::Low
        } else {
            BitRate::High
        }
    }

    pub const fn label_filter(self) -> bool {
        self.0 & control::LABEL_FILTER != 0
    }

    /// Irq enables shifted down to line up with status bits 0..=2.
    pub const fn irq_mask(self) -> u8 {
        (self.0 & control::IRQ_ALL) >> 4
    }
}

/// Interrupt line for one channel: any FIFO flag whose enable is set.
#[inline]
pub const fn interrupt_from(status_reg: u8, control_reg: u8) -> bool {
    status_reg & status::FLAGS & ControlBits(control_reg).irq_mask() != 0
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChannelError {
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Fifo(#[from] FifoError),
    #[error("label {0} out of range 0..=255")]
    LabelRange(u16),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxInput {
    Fields(WordFields),
    Raw(Arinc429Word),
}

impl From<WordFields> for TxInput {
    fn from(f: WordFields) -> Self {
        TxInput::Fields(f)
    }
}

impl From<Arinc429Word> for TxInput {
    fn from(w: Arinc429Word) -> Self {
        TxInput::Raw(w)
    }
}

/// Line corruption applied to one transmitted word, for fault injection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LineFault {
    /// Invert the driven half-cell of ARINC bit `bit` (1..=32).
    FlipBit { bit: u8 },
    /// Drive only the first `after_bits` bits; the rest of the word stays NULL.
    Truncate { after_bits: u8 },
}

fn apply_fault(stream: &mut SymbolStream, fault: LineFault) {
    let spans = stream.spans_mut();
    match fault {
        LineFault::FlipBit { bit } => {
            if let Some(s) = (1..=32).contains(&bit).then(|| &mut spans[2 * (bit as usize - 1)]) {
                s.level = match s.level {
                    LineLevel::Hi => LineLevel::Lo,
                    LineLevel::Lo => LineLevel::Hi,
                    other => other,
                };
            }
        }
        LineFault::Truncate { after_bits } => {
            for s in spans.iter_mut().take(64).skip(2 * after_bits.min(32) as usize) {
                s.level = LineLevel::Null;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Serializer {
    word: Arinc429Word,
    rate: BitRate,
    stream: SymbolStream,
    next: usize,
    span_end_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TxChannel {
    control: ControlBits,
    fifo: WordFifo,
    overflow: bool,
    serializer: Option<Serializer>,
    words_started: u64,
    armed: Vec<(u64, LineFault)>,
    pending_gap: Option<u8>,
}

impl TxChannel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn control(&self) -> u8 {
        self.control.raw()
    }

    pub fn write_control(&mut self, value: u8) {
        self.control = ControlBits(value & control::TX_WRITABLE);
    }

    /// Status without clearing sticky bits.
    pub fn peek_status(&self) -> u8 {
        self.fifo.flags().bits() | if self.overflow { status::OVERFLOW } else { 0 }
    }

    pub fn read_status(&mut self) -> u8 {
        let s = self.peek_status();
        self.overflow = false;
        s
    }

    pub fn fifo(&self) -> &WordFifo {
        &self.fifo
    }

    pub fn set_fifo_level(&mut self, level: u32) -> Result<(), ChannelError> {
        Ok(self.fifo.set_level(level)?)
    }

    pub fn interrupt(&self) -> bool {
        interrupt_from(self.peek_status(), self.control.raw())
    }

    pub fn is_busy(&self) -> bool {
        self.serializer.is_some()
    }

    /// When the span currently on the line ends, if one is.
    pub fn busy_until_ns(&self) -> Option<u64> {
        self.serializer.as_ref().map(|s| s.span_end_ns)
    }

    /// Word currently on the line.
    pub fn in_flight(&self) -> Option<Arinc429Word> {
        self.serializer.as_ref().map(|s| s.word)
    }

    pub fn words_started(&self) -> u64 {
        self.words_started
    }

    /// True if a tick at `now` would start a word.
    pub fn ready_to_start(&self) -> bool {
        self.serializer.is_none() && self.control.enabled() && !self.fifo.is_empty()
    }

    /// Queues a word. With parity enabled bit 32 is recomputed here, so the
    /// FIFO holds exactly what will go out on the line.
    pub fn write_word(&mut self, input: impl Into<TxInput>) -> Result<Arinc429Word, ChannelError> {
        let parity = self.control.parity_enabled();
        let word = match input.into() {
            TxInput::Fields(f) => word::assemble(f, parity)?,
            TxInput::Raw(w) if parity => word::with_odd_parity(w),
            TxInput::Raw(w) => w,
        };
        if let Err(e) = self.fifo.push(word) {
            self.overflow = true;
            return Err(e.into());
        }
        Ok(word)
    }

    /// Arms a fault for the `word_index`-th word this channel starts (0-based).
    pub fn arm_fault(&mut self, word_index: u64, fault: LineFault) {
        self.armed.push((word_index, fault));
    }

    /// Shortens the next inter-word gap that has not yet begun to `bit_times`.
    pub fn arm_gap_violation(&mut self, bit_times: u8) {
        if let Some(ser) = self.serializer.as_mut() {
            let last = ser.stream.len() - 1;
            if ser.next <= last {
                let period = ser.rate.bit_period_ns();
                ser.stream.spans_mut()[last].duration_ns = bit_times as u64 * period;
                return;
            }
        }
        self.pending_gap = Some(bit_times);
    }

    /// Advances the serializer. Returns the span that starts at `now_ns`, or
    /// `None` if the line holds its current span or is idle (NULL).
    pub fn tick(&mut self, now_ns: u64) -> Option<Span> {
        if let Some(ser) = self.serializer.as_mut() {
            if now_ns < ser.span_end_ns {
                return None;
            }
            // a zero-length shrunk gap leaves nothing to emit
            while let Some(span) = ser.stream.spans().get(ser.next).copied() {
                ser.next += 1;
                if span.duration_ns > 0 {
                    ser.span_end_ns = now_ns + span.duration_ns;
                    return Some(span);
                }
            }
            self.serializer = None;
        }
        if !self.control.enabled() {
            return None;
        }
        let word = self.fifo.pop().ok()?;
        let rate = self.control.rate();
        let mut stream = modulate_word(word, rate);
        let index = self.words_started;
        self.words_started += 1;
        for (_, fault) in self.armed.iter().filter(|(i, _)| *i == index) {
            apply_fault(&mut stream, *fault);
        }
        self.armed.retain(|(i, _)| *i > index);
        if let Some(bits) = self.pending_gap.take() {
            let period = rate.bit_period_ns();
            let last = stream.len() - 1;
            stream.spans_mut()[last].duration_ns = bits as u64 * period;
        }
        let first = stream.spans()[0];
        self.serializer = Some(Serializer {
            word,
            rate,
            stream,
            next: 1,
            span_end_ns: now_ns + first.duration_ns,
        });
        Some(first)
    }
}

/// Functional form of [`TxChannel::tick`].
pub fn tx_tick(ch: &mut TxChannel, now_ns: u64) -> Option<(u64, LineLevel)> {
    ch.tick(now_ns).map(|s| (s.duration_ns, s.level))
}

pub fn tx_write_word(ch: &mut TxChannel, input: impl Into<TxInput>) -> Result<Arinc429Word, ChannelError> {
    ch.write_word(input)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RxNotification {
    Stored(Arinc429Word),
    ParityError(Arinc429Word),
    /// Label not enabled while the filter is on.
    Filtered(Arinc429Word),
    Overflow(Arinc429Word),
    /// Receiver disabled; the word was discarded.
    Discarded(Arinc429Word),
    LineError(RxErrorKind),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RxChannel {
    control: ControlBits,
    fifo: WordFifo,
    demod: DemodState,
    label_table: [bool; 256],
    parity_error: bool,
    overflow: bool,
}

impl Default for RxChannel {
    fn default() -> Self {
        Self::new()
    }
}

impl RxChannel {
    pub fn new() -> Self {
        Self {
            control: ControlBits::default(),
            fifo: WordFifo::new(),
            demod: DemodState::new(BitRate::High),
            label_table: [false; 256],
            parity_error: false,
            overflow: false,
        }
    }

    pub fn control(&self) -> u8 {
        self.control.raw()
    }

    pub fn write_control(&mut self, value: u8) {
        self.control = ControlBits(value & control::RX_WRITABLE);
        self.demod.set_rate(self.control.rate());
    }

    pub fn peek_status(&self) -> u8 {
        let mut s = self.fifo.flags().bits();
        if self.parity_error {
            s |= status::PARITY_ERROR;
        }
        if self.overflow {
            s |= status::OVERFLOW;
        }
        s
    }

    pub fn read_status(&mut self) -> u8 {
        let s = self.peek_status();
        self.parity_error = false;
        self.overflow = false;
        s
    }

    pub fn fifo(&self) -> &WordFifo {
        &self.fifo
    }

    pub fn demod(&self) -> &DemodState {
        &self.demod
    }

    pub fn set_fifo_level(&mut self, level: u32) -> Result<(), ChannelError> {
        Ok(self.fifo.set_level(level)?)
    }

    pub fn read_word(&mut self) -> Result<Arinc429Word, FifoError> {
        self.fifo.pop()
    }

    pub fn interrupt(&self) -> bool {
        interrupt_from(self.peek_status(), self.control.raw())
    }

    /// Takes effect for every word that completes after this call.
    pub fn set_label(&mut self, label: u16, enabled: bool) -> Result<(), ChannelError> {
        let slot = self
            .label_table
            .get_mut(label as usize)
            .ok_or(ChannelError::LabelRange(label))?;
        *slot = enabled;
        Ok(())
    }

    pub fn label_enabled(&self, label: u8) -> bool {
        self.label_table[label as usize]
    }

    pub fn label_table(&self) -> &[bool; 256] {
        &self.label_table
    }

    pub fn feed(&mut self, level: LineLevel, duration_ns: u64) -> Vec<RxNotification> {
        self.demod
            .step(level, duration_ns)
            .into_iter()
            .map(|ev| match ev {
                RxEvent::Word(w) => self.accept(w),
                RxEvent::Error(kind) => RxNotification::LineError(kind),
            })
            .collect()
    }

    fn accept(&mut self, w: Arinc429Word) -> RxNotification {
        if !self.control.enabled() {
            return RxNotification::Discarded(w);
        }
        if self.control.parity_enabled() && !word::check_parity(w) {
            self.parity_error = true;
            return RxNotification::ParityError(w);
        }
        if self.control.label_filter() && !self.label_table[w.label() as usize] {
            return RxNotification::Filtered(w);
        }
        match self.fifo.push(w) {
            Ok(()) => RxNotification::Stored(w),
            Err(_) => {
                self.overflow = true;
                RxNotification::Overflow(w)
            }
        }
    }
}

pub fn rx_feed(ch: &mut RxChannel, level: LineLevel, duration_ns: u64) -> Vec<RxNotification> {
    ch.feed(level, duration_ns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::line::demodulate;
    use crate::word::check_parity;

    fn run_tx(tx: &mut TxChannel) -> (SymbolStream, Vec<u64>) {
        let mut out = SymbolStream::new();
        let mut starts = Vec::new();
        let mut t = 0;
        while let Some(s) = tx.tick(t) {
            starts.push(t);
            out.push(s.duration_ns, s.level);
            t += s.duration_ns;
        }
        (out, starts)
    }

    fn enabled_tx(extra: u8) -> TxChannel {
        let mut tx = TxChannel::new();
        tx.write_control(control::ENABLE | extra);
        tx
    }

    fn enabled_rx(extra: u8) -> RxChannel {
        let mut rx = RxChannel::new();
        rx.write_control(control::ENABLE | extra);
        rx
    }

    fn feed_stream(rx: &mut RxChannel, s: &SymbolStream) -> Vec<RxNotification> {
        s.iter().flat_map(|sp| rx.feed(sp.level, sp.duration_ns)).collect()
    }

    #[test]
    fn write_starts_transmission_on_next_tick() {
        let mut tx = enabled_tx(0);
        assert_eq!(tx.tick(0), None);
        tx.write_word(Arinc429Word(0x8000_0000)).unwrap();
        assert!(!tx.is_busy());
        assert_eq!(tx.tick(0), Some(Span::new(5_000, LineLevel::Lo)));
        assert!(tx.is_busy());
        assert_eq!(tx.fifo().occupancy(), 0);
    }

    #[test]
    fn parity_inserted_at_enqueue() {
        let mut tx = enabled_tx(control::PARITY);
        let queued = tx.write_word(Arinc429Word(0x0000_0003)).unwrap();
        assert_eq!(queued, Arinc429Word(0x8000_0003));
        assert_eq!(tx.fifo().peek(), Some(queued));
        let (stream, _) = run_tx(&mut tx);
        let ev = demodulate(&mut DemodState::new(BitRate::High), &stream);
        match ev.as_slice() {
            [RxEvent::Word(w)] => assert!(check_parity(*w)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn disabled_channel_queues_without_sending() {
        let mut tx = TxChannel::new();
        tx.write_word(Arinc429Word(1)).unwrap();
        assert_eq!(tx.tick(0), None);
        assert!(!tx.is_busy());
        assert_eq!(tx.fifo().occupancy(), 1);
    }

    #[test]
    fn tx_spans_equal_modulator_output() {
        let mut tx = enabled_tx(0);
        let w = Arinc429Word(0xCAFE_0123);
        tx.write_word(w).unwrap();
        let (stream, _) = run_tx(&mut tx);
        assert_eq!(stream, modulate_word(w, BitRate::High));
    }

    #[test]
    fn second_word_starts_one_word_time_later() {
        let mut tx = enabled_tx(0);
        tx.write_word(Arinc429Word(1)).unwrap();
        tx.write_word(Arinc429Word(2)).unwrap();
        let (stream, starts) = run_tx(&mut tx);
        assert_eq!(starts[65], 360_000);
        assert_eq!(stream.duration_ns(), 720_000);
    }

    #[test]
    fn rate_change_applies_at_word_boundary() {
        let mut tx = enabled_tx(0);
        tx.write_word(Arinc429Word(1)).unwrap();
        tx.write_word(Arinc429Word(2)).unwrap();
        let first = tx.tick(0).unwrap();
        tx.write_control(control::ENABLE | control::RATE_LOW);
        let mut t = first.duration_ns;
        while let Some(s) = tx.tick(t) {
            t += s.duration_ns;
        }
        assert_eq!(t, 360_000 + 2_880_000);
    }

    #[test]
    fn tx_overflow_is_sticky() {
        let mut tx = TxChannel::new();
        for i in 0..512 {
            tx.write_word(Arinc429Word(i)).unwrap();
        }
        assert_eq!(
            tx.write_word(Arinc429Word(0)),
            Err(ChannelError::Fifo(FifoError::Overflow))
        );
        assert_eq!(tx.read_status() & status::OVERFLOW, status::OVERFLOW);
        assert_eq!(tx.read_status() & status::OVERFLOW, 0);
        assert_eq!(tx.peek_status(), status::HALF_FULL | status::FULL);
    }

    #[test]
    fn rx_stores_clean_word() {
        let mut rx = enabled_rx(0);
        let w = Arinc429Word(0x1234_5678);
        let n = feed_stream(&mut rx, &modulate_word(w, BitRate::High));
        assert_eq!(n, vec![RxNotification::Stored(w)]);
        assert_eq!(rx.read_word(), Ok(w));
    }

    #[test]
    fn rx_parity_error_drops_and_latches() {
        let mut rx = enabled_rx(control::PARITY);
        let good = word::with_odd_parity(Arinc429Word(0x0000_0013));
        let bad = good.with_bit_flipped(17);
        let n = feed_stream(&mut rx, &modulate_word(bad, BitRate::High));
        assert_eq!(n, vec![RxNotification::ParityError(bad)]);
        assert!(rx.fifo().is_empty());
        assert_ne!(rx.read_status() & status::PARITY_ERROR, 0);
        assert_eq!(rx.read_status() & status::PARITY_ERROR, 0);
    }

    #[test]
    fn rx_label_filter() {
        let mut rx = enabled_rx(control::LABEL_FILTER);
        let w = word::assemble(WordFields::new(0o205, 0, 7, 0), true).unwrap();
        let n = feed_stream(&mut rx, &modulate_word(w, BitRate::High));
        assert_eq!(n, vec![RxNotification::Filtered(w)]);
        assert_eq!(rx.peek_status() & status::STICKY, 0);
        rx.set_label(0o205, true).unwrap();
        let n = feed_stream(&mut rx, &modulate_word(w, BitRate::High));
        assert_eq!(n, vec![RxNotification::Stored(w)]);
        assert_eq!(rx.set_label(256, true), Err(ChannelError::LabelRange(256)));
    }

    #[test]
    fn label_change_mid_gap_applies_to_next_word() {
        let mut rx = enabled_rx(control::LABEL_FILTER);
        rx.set_label(0o310, true).unwrap();
        let w = word::assemble(WordFields::new(0o310, 0, 0, 0), true).unwrap();
        let s = modulate_word(w, BitRate::High);
        assert_eq!(feed_stream(&mut rx, &s), vec![RxNotification::Stored(w)]);
        // disable halfway through the next word's body: the word still completes after the call
        let (head, tail) = s.spans().split_at(20);
        let mut n: Vec<_> = head.iter().flat_map(|sp| rx.feed(sp.level, sp.duration_ns)).collect();
        rx.set_label(0o310, false).unwrap();
        n.extend(tail.iter().flat_map(|sp| rx.feed(sp.level, sp.duration_ns)));
        assert_eq!(n, vec![RxNotification::Filtered(w)]);
        assert_eq!(rx.fifo().occupancy(), 1);
    }

    #[test]
    fn interrupt_masking() {
        let mut rx = RxChannel::new();
        assert!(!rx.interrupt());
        rx.write_control(control::IRQ_EMPTY);
        assert!(rx.interrupt());
        let mut tx = TxChannel::new();
        tx.set_fifo_level(2).unwrap();
        tx.write_control(control::IRQ_HALF_FULL);
        tx.write_word(Arinc429Word(0)).unwrap();
        assert!(!tx.interrupt());
        tx.write_word(Arinc429Word(0)).unwrap();
        assert!(tx.interrupt());
    }

    #[test]
    fn interrupt_truth_table() {
        for status_bits in 0..8u8 {
            for enables in 0..8u8 {
                assert_eq!(
                    interrupt_from(status_bits, enables << 4),
                    status_bits & enables != 0
                );
            }
        }
    }

    #[test]
    fn reserved_control_bits_read_zero() {
        let mut tx = TxChannel::new();
        tx.write_control(0xFF);
        assert_eq!(tx.control(), 0x77);
        tx.write_control(0x00);
        assert_eq!(tx.control(), 0);
        let mut rx = RxChannel::new();
        rx.write_control(0x80);
        assert_eq!(rx.control(), 0);
        rx.write_control(0xFF);
        assert_eq!(rx.control(), 0x7F);
    }

    #[test]
    fn faults_corrupt_only_target_word() {
        let mut tx = enabled_tx(control::PARITY);
        let mut rx = enabled_rx(control::PARITY);
        for i in 0..4 {
            tx.write_word(Arinc429Word(i)).unwrap();
        }
        tx.arm_fault(1, LineFault::FlipBit { bit: 9 });
        tx.arm_fault(2, LineFault::Truncate { after_bits: 10 });
        let (stream, _) = run_tx(&mut tx);
        let n = feed_stream(&mut rx, &stream);
        assert_eq!(n.len(), 4);
        assert!(matches!(n[0], RxNotification::Stored(_)));
        assert!(matches!(n[1], RxNotification::ParityError(_)));
        assert_eq!(n[2], RxNotification::LineError(RxErrorKind::ShortWord));
        assert!(matches!(n[3], RxNotification::Stored(_)));
    }

    #[test]
    fn gap_violation_loses_following_word() {
        let mut tx = enabled_tx(0);
        let mut rx = enabled_rx(0);
        for i in 1..=3 {
            tx.write_word(Arinc429Word(i)).unwrap();
        }
        let first = tx.tick(0).unwrap();
        tx.arm_gap_violation(1);
        let mut stream = SymbolStream::new();
        stream.push(first.duration_ns, first.level);
        let mut t = 5_000;
        while let Some(s) = tx.tick(t) {
            stream.push(s.duration_ns, s.level);
            t += s.duration_ns;
        }
        assert_eq!(t, 3 * 360_000 - 30_000);
        let n = feed_stream(&mut rx, &stream);
        assert_eq!(
            n,
            vec![
                RxNotification::Stored(Arinc429Word(1)),
                RxNotification::LineError(RxErrorKind::LongWord),
                RxNotification::Stored(Arinc429Word(3)),
            ]
        );
    }
}
