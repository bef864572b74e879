// SPDX-License-Identifier: Apache-2.0

//! Bipolar return-to-zero line coding.
//!
//! Each bit cell is a driven half-cell (HI for 1, LO for 0) followed by a
//! NULL half-cell. Words go out ARINC bit 1 first and are followed by a
//! 4-bit-time NULL gap, which is also what the receiver syncs on.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::word::Arinc429Word;

/// NULL bit times between words.
pub const GAP_BIT_TIMES: u64 = 4;
/// Bit times occupied by one word plus its trailing gap.
pub const WORD_BIT_TIMES: u64 = 32 + GAP_BIT_TIMES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum LineLevel {
    Hi,
    #[default]
    Null,
    Lo,
    /// Two drivers on one wire at once. Only produced by [`mix`].
    Collision,
}

impl LineLevel {
    #[inline]
    pub fn is_driven(self) -> bool {
        !matches!(self, LineLevel::Null)
    }

    pub fn from_bit(bit: bool) -> Self {
        if bit {
            LineLevel::Hi
        } else {
            LineLevel::Lo
        }
    }

    /// Trace CSV symbol.
    pub fn symbol(self) -> &'static str {
        match self {
            LineLevel::Hi => "+1",
            LineLevel::Null => "0",
            LineLevel::Lo => "-1",
            LineLevel::Collision => "X",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "+1" => LineLevel::Hi,
            "0" => LineLevel::Null,
            "-1" => LineLevel::Lo,
            "X" => LineLevel::Collision,
            _ => return None,
        })
    }
}

impl fmt::Display for LineLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BitRate {
    /// 100 kbit/s.
    #[default]
    High,
    /// 12.5 kbit/s.
    Low,
}

impl BitRate {
    pub const fn bits_per_second(self) -> u64 {
        match self {
            BitRate::High => 100_000,
            BitRate::Low => 12_500,
        }
    }

    pub const fn bit_period_ns(self) -> u64 {
        1_000_000_000 / self.bits_per_second()
    }

    pub const fn half_cell_ns(self) -> u64 {
        self.bit_period_ns() / 2
    }

    pub const fn gap_ns(self) -> u64 {
        GAP_BIT_TIMES * self.bit_period_ns()
    }

    /// Duration of one modulated word including its gap.
    pub const fn word_ns(self) -> u64 {
        WORD_BIT_TIMES * self.bit_period_ns()
    }
}

/// One constant-level piece of a line waveform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub duration_ns: u64,
    pub level: LineLevel,
}

impl Span {
    pub const fn new(duration_ns: u64, level: LineLevel) -> Self {
        Self { duration_ns, level }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SymbolStream {
    spans: Vec<Span>,
}

impl SymbolStream {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a span; zero-length spans are dropped.
    pub fn push(&mut self, duration_ns: u64, level: LineLevel) {
        if duration_ns > 0 {
            self.spans.push(Span::new(duration_ns, level));
        }
    }

    pub fn null(duration_ns: u64) -> Self {
        let mut s = Self::new();
        s.push(duration_ns, LineLevel::Null);
        s
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn spans_mut(&mut self) -> &mut [Span] {
        &mut self.spans
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn duration_ns(&self) -> u64 {
        self.spans.iter().map(|s| s.duration_ns).sum()
    }

    pub fn append(&mut self, other: &SymbolStream) {
        self.spans.extend_from_slice(&other.spans);
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Span> {
        self.spans.iter()
    }

    /// Level at absolute time `t_ns` (stream starts at 0). NULL past the end.
    pub fn level_at(&self, t_ns: u64) -> LineLevel {
        let mut start = 0;
        for s in &self.spans {
            if t_ns < start + s.duration_ns {
                return s.level;
            }
            start += s.duration_ns;
        }
        LineLevel::Null
    }

    /// Trace CSV, one `t_start_ns,duration_ns,level` line per span.
    pub fn to_csv(&self, t0_ns: u64) -> String {
        let mut out = String::with_capacity(self.spans.len() * 16);
        let mut t = t0_ns;
        for s in &self.spans {
            out.push_str(&format!("{},{},{}\n", t, s.duration_ns, s.level));
            t += s.duration_ns;
        }
        out
    }
}

impl FromIterator<Span> for SymbolStream {
    fn from_iter<I: IntoIterator<Item = Span>>(iter: I) -> Self {
        let mut s = SymbolStream::new();
        for span in iter {
            s.push(span.duration_ns, span.level);
        }
        s
    }
}

impl<'a> IntoIterator for &'a SymbolStream {
    type Item = &'a Span;
    type IntoIter = std::slice::Iter<'a, Span>;
    fn into_iter(self) -> Self::IntoIter {
        self.spans.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceParseError {
    #[error("line {line}: expected 3 comma-separated fields")]
    Fields { line: usize },
    #[error("line {line}: bad number {text:?}")]
    Number { line: usize, text: String },
    #[error("line {line}: bad level {text:?}")]
    Level { line: usize, text: String },
}

/// Parses trace CSV into `(t_start_ns, span)` rows.
pub fn parse_trace_csv(text: &str) -> Result<Vec<(u64, Span)>, TraceParseError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(TraceParseError::Fields { line: line_no });
        }
        let num = |s: &str| {
            s.parse::<u64>().map_err(|_| TraceParseError::Number {
                line: line_no,
                text: s.to_string(),
            })
        };
        let t = num(parts[0])?;
        let d = num(parts[1])?;
        let level = LineLevel::from_symbol(parts[2]).ok_or_else(|| TraceParseError::Level {
            line: line_no,
            text: parts[2].to_string(),
        })?;
        rows.push((t, Span::new(d, level)));
    }
    Ok(rows)
}

pub fn modulate_word(word: Arinc429Word, rate: BitRate) -> SymbolStream {
    modulate_word_with_gap(word, rate, GAP_BIT_TIMES)
}

/// Like [`modulate_word`] but with a caller-chosen trailing gap. Gaps under
/// four bit times violate the protocol and exist for fault injection.
pub fn modulate_word_with_gap(word: Arinc429Word, rate: BitRate, gap_bit_times: u64) -> SymbolStream {
    let half = rate.half_cell_ns();
    let mut s = SymbolStream {
        spans: Vec::with_capacity(65),
    };
    for n in 1..=32 {
        s.push(half, LineLevel::from_bit(word.bit(n)));
        s.push(half, LineLevel::Null);
    }
    s.push(gap_bit_times * rate.bit_period_ns(), LineLevel::Null);
    s
}

/// Combines streams placed at absolute start offsets onto one timeline
/// starting at 0. NULL is the identity; two driven levels make a collision.
///
/// Span boundaries of every stream that drives the line at least once are
/// kept, so a lone stream at offset 0 comes back unchanged. All-NULL streams
/// only extend the end of the timeline.
pub fn mix(streams: &[(u64, &SymbolStream)]) -> SymbolStream {
    let end = streams
        .iter()
        .map(|(off, s)| off + s.duration_ns())
        .max()
        .unwrap_or(0);
    let mut breaks = vec![0, end];
    // (start, end, level) per stream
    let mut segments: Vec<Vec<(u64, u64, LineLevel)>> = Vec::with_capacity(streams.len());
    for (off, s) in streams {
        let mut t = *off;
        let mut segs = Vec::with_capacity(s.len());
        for span in s.iter() {
            segs.push((t, t + span.duration_ns, span.level));
            t += span.duration_ns;
        }
        if s.iter().any(|sp| sp.level.is_driven()) {
            breaks.push(*off);
            breaks.extend(segs.iter().map(|seg| seg.1));
        }
        segments.push(segs);
    }
    breaks.sort_unstable();
    breaks.dedup();

    let mut cursors = vec![0usize; segments.len()];
    let mut out = SymbolStream::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a == b {
            continue;
        }
        let mut drivers = 0;
        let mut level = LineLevel::Null;
        for (segs, cur) in segments.iter().zip(cursors.iter_mut()) {
            while *cur < segs.len() && segs[*cur].1 <= a {
                *cur += 1;
            }
            if let Some(&(s0, _, l)) = segs.get(*cur) {
                if s0 <= a && l.is_driven() {
                    drivers += 1;
                    level = l;
                }
            }
        }
        if drivers > 1 {
            level = LineLevel::Collision;
        }
        out.push(b - a, level);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RxErrorKind {
    /// Bad half-cell shape or timing, or a collision on the line.
    RzViolation,
    /// Word gap seen before 32 bits arrived.
    ShortWord,
    /// A 33rd bit cell started before the word gap.
    LongWord,
}

impl fmt::Display for RxErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RxErrorKind::RzViolation => "rz_violation",
            RxErrorKind::ShortWord => "short_word",
            RxErrorKind::LongWord => "long_word",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RxEvent {
    Word(Arinc429Word),
    Error(RxErrorKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemodPhase {
    /// Hunting for a word gap, or armed once one has been seen.
    #[default]
    Idle,
    /// Collecting bit cells.
    Synced,
    /// 32 bits received; waiting for the gap before the next word may start.
    AwaitGap,
}

/// Receiver demodulator state, advanced one constant-level span at a time.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DemodState {
    pub phase: DemodPhase,
    pub bits_collected: u8,
    pub shift_register: u32,
    pub null_run_ns: u64,
    pub current_rate: BitRate,
    run_level: LineLevel,
    run_ns: u64,
    pending_rate: Option<BitRate>,
}

impl Default for DemodState {
    fn default() -> Self {
        Self::new(BitRate::High)
    }
}

#[inline]
fn half_cell_ok(d: u64, nominal: u64) -> bool {
    d * 20 >= nominal * 19 && d * 20 <= nominal * 21
}

#[inline]
fn half_cell_min(nominal: u64) -> u64 {
    (nominal * 19).div_ceil(20)
}

#[inline]
fn half_cell_max(nominal: u64) -> u64 {
    nominal * 21 / 20
}

impl DemodState {
    /// Reset state: the line is taken to have been idle long enough to arm
    /// sync at either rate, so a rate change straight after reset keeps it armed.
    pub fn new(rate: BitRate) -> Self {
        let idle = BitRate::Low.gap_ns();
        Self {
            phase: DemodPhase::Idle,
            bits_collected: 0,
            shift_register: 0,
            null_run_ns: idle,
            current_rate: rate,
            run_level: LineLevel::Null,
            run_ns: idle,
            pending_rate: None,
        }
    }

    /// A receiver that has not yet seen a word gap.
    pub fn hunting(rate: BitRate) -> Self {
        Self {
            null_run_ns: 0,
            run_ns: 0,
            ..Self::new(rate)
        }
    }

    pub fn is_armed(&self) -> bool {
        self.phase == DemodPhase::Idle
            && self.run_level == LineLevel::Null
            && self.null_run_ns >= self.current_rate.gap_ns()
    }

    /// Rate changes take effect once the demodulator is between words.
    pub fn set_rate(&mut self, rate: BitRate) {
        if self.phase == DemodPhase::Idle {
            self.current_rate = rate;
            self.pending_rate = None;
        } else if rate != self.current_rate {
            self.pending_rate = Some(rate);
        } else {
            self.pending_rate = None;
        }
    }

    pub fn rate(&self) -> BitRate {
        self.pending_rate.unwrap_or(self.current_rate)
    }

    /// Consumes one constant-level span. Adjacent spans of the same level
    /// are treated as one continuous run.
    pub fn step(&mut self, level: LineLevel, duration_ns: u64) -> Vec<RxEvent> {
        let mut events = Vec::new();
        if duration_ns == 0 {
            return events;
        }
        if level == self.run_level {
            self.run_ns += duration_ns;
            if level == LineLevel::Null {
                self.null_run_ns = self.run_ns;
            }
        } else {
            let armed = self.is_armed();
            let errored = self.close_run(level, &mut events);
            self.run_level = level;
            self.run_ns = duration_ns;
            self.null_run_ns = if level == LineLevel::Null { duration_ns } else { 0 };
            self.open_run(armed, errored, &mut events);
        }
        self.check_run(&mut events);
        events
    }

    fn enter_idle(&mut self) {
        self.phase = DemodPhase::Idle;
        self.bits_collected = 0;
        self.shift_register = 0;
        if let Some(r) = self.pending_rate.take() {
            self.current_rate = r;
        }
    }

    fn fail(&mut self, kind: RxErrorKind, events: &mut Vec<RxEvent>) {
        events.push(RxEvent::Error(kind));
        self.enter_idle();
    }

    /// The current run ends because `next` differs. Returns true if an error was reported.
    fn close_run(&mut self, next: LineLevel, events: &mut Vec<RxEvent>) -> bool {
        let half = self.current_rate.half_cell_ns();
        match self.phase {
            DemodPhase::Idle => false,
            DemodPhase::Synced => match self.run_level {
                LineLevel::Hi | LineLevel::Lo => {
                    if next == LineLevel::Null && half_cell_ok(self.run_ns, half) {
                        if self.run_level == LineLevel::Hi {
                            self.shift_register |= 1 << self.bits_collected;
                        }
                        self.bits_collected += 1;
                        false
                    } else {
                        self.fail(RxErrorKind::RzViolation, events);
                        true
                    }
                }
                LineLevel::Null => {
                    // bits_collected < 32 here; 32 moves to AwaitGap in check_run
                    if next != LineLevel::Collision && half_cell_ok(self.run_ns, half) {
                        false
                    } else {
                        self.fail(RxErrorKind::RzViolation, events);
                        true
                    }
                }
                LineLevel::Collision => {
                    self.enter_idle();
                    false
                }
            },
            DemodPhase::AwaitGap => {
                let kind = if next == LineLevel::Collision {
                    RxErrorKind::RzViolation
                } else {
                    RxErrorKind::LongWord
                };
                self.fail(kind, events);
                true
            }
        }
    }

    fn open_run(&mut self, was_armed: bool, errored: bool, events: &mut Vec<RxEvent>) {
        match self.run_level {
            LineLevel::Collision => {
                if !errored {
                    self.fail(RxErrorKind::RzViolation, events);
                }
            }
            LineLevel::Hi | LineLevel::Lo => {
                if self.phase == DemodPhase::Idle && was_armed && !errored {
                    self.phase = DemodPhase::Synced;
                    self.bits_collected = 0;
                    self.shift_register = 0;
                }
            }
            LineLevel::Null => {}
        }
    }

    fn check_run(&mut self, events: &mut Vec<RxEvent>) {
        let half = self.current_rate.half_cell_ns();
        let gap = self.current_rate.gap_ns();
        match (self.phase, self.run_level) {
            (DemodPhase::Synced, LineLevel::Hi | LineLevel::Lo) => {
                if self.run_ns > half_cell_max(half) {
                    self.fail(RxErrorKind::RzViolation, events);
                }
            }
            (DemodPhase::Synced, LineLevel::Null) => {
                if self.bits_collected == 32 {
                    if self.run_ns >= half_cell_min(half) {
                        events.push(RxEvent::Word(Arinc429Word(self.shift_register)));
                        self.phase = DemodPhase::AwaitGap;
                        self.bits_collected = 0;
                        self.shift_register = 0;
                        if self.null_run_ns >= gap {
                            self.enter_idle();
                        }
                    }
                } else if self.null_run_ns >= gap {
                    self.fail(RxErrorKind::ShortWord, events);
                }
            }
            (DemodPhase::AwaitGap, LineLevel::Null) if self.null_run_ns >= gap => self.enter_idle(),
            _ => {}
        }
    }
}

/// Functional form of [`DemodState::step`].
pub fn demod_step(mut state: DemodState, level: LineLevel, duration_ns: u64) -> (DemodState, Vec<RxEvent>) {
    let events = state.step(level, duration_ns);
    (state, events)
}

/// Feeds a whole stream and collects events.
pub fn demodulate(state: &mut DemodState, stream: &SymbolStream) -> Vec<RxEvent> {
    let mut out = Vec::new();
    for s in stream {
        out.extend(state.step(s.level, s.duration_ns));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(events: &[RxEvent]) -> Vec<Arinc429Word> {
        events
            .iter()
            .filter_map(|e| match e {
                RxEvent::Word(w) => Some(*w),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn overlapping_words_trace_a_collision() {
        let a = modulate_word(Arinc429Word(0xFFFF_FFFF), BitRate::High);
        let b = modulate_word(Arinc429Word(0), BitRate::High);
        let csv = mix(&[(0, &a), (2_000, &b)]).to_csv(0);
        assert!(csv.lines().any(|l| l.ends_with(",X")), "{csv}");
    }

    #[test]
    fn reset_state_stays_armed_across_rate_change() {
        let mut st = DemodState::new(BitRate::High);
        st.set_rate(BitRate::Low);
        assert!(st.is_armed());
        let w = Arinc429Word(0x8000_0011);
        assert_eq!(demodulate(&mut st, &modulate_word(w, BitRate::Low)), [RxEvent::Word(w)]);
    }

    #[test]
    fn bit_periods() {
        assert_eq!(BitRate::High.bit_period_ns(), 10_000);
        assert_eq!(BitRate::Low.bit_period_ns(), 80_000);
        assert_eq!(BitRate::High.half_cell_ns() * 2, BitRate::High.bit_period_ns());
        assert_eq!(BitRate::Low.half_cell_ns() * 2, BitRate::Low.bit_period_ns());
        assert_eq!(BitRate::High.word_ns(), 360_000);
        assert_eq!(BitRate::Low.word_ns(), 2_880_000);
    }

    #[test]
    fn modulate_single_one_bit() {
        let s = modulate_word(Arinc429Word(1), BitRate::High);
        assert_eq!(s.spans()[0], Span::new(5_000, LineLevel::Hi));
        assert_eq!(s.duration_ns(), 360_000);
        // bit 2 onwards are zeros
        assert_eq!(s.spans()[2], Span::new(5_000, LineLevel::Lo));
        assert_eq!(*s.spans().last().unwrap(), Span::new(40_000, LineLevel::Null));
        assert_eq!(s.len(), 65);
    }

    #[test]
    fn modulate_zero_word() {
        let s = modulate_word(Arinc429Word(0), BitRate::High);
        for bit in 0..32 {
            assert_eq!(s.spans()[2 * bit], Span::new(5_000, LineLevel::Lo));
            assert_eq!(s.spans()[2 * bit + 1], Span::new(5_000, LineLevel::Null));
            assert_eq!(s.level_at(bit as u64 * 10_000), LineLevel::Lo);
        }
        assert_eq!(s.duration_ns(), 360_000);
    }

    #[test]
    fn modulate_low_rate_duration() {
        let s = modulate_word(Arinc429Word(0xDEAD_BEEF), BitRate::Low);
        assert_eq!(s.duration_ns(), 2_880_000);
    }

    #[test]
    fn loopback_both_rates() {
        for rate in [BitRate::High, BitRate::Low] {
            let mut st = DemodState::hunting(rate);
            assert!(st.step(LineLevel::Null, rate.gap_ns()).is_empty());
            let w = Arinc429Word(0x8000_0013);
            let ev = demodulate(&mut st, &modulate_word(w, rate));
            assert_eq!(ev, vec![RxEvent::Word(w)]);
        }
    }

    #[test]
    fn hunting_receiver_ignores_word_without_leading_gap() {
        let mut st = DemodState::hunting(BitRate::High);
        let w = Arinc429Word(0x1234_5678);
        assert!(demodulate(&mut st, &modulate_word(w, BitRate::High)).is_empty());
        // its trailing gap now arms sync
        let ev = demodulate(&mut st, &modulate_word(w, BitRate::High));
        assert_eq!(ev, vec![RxEvent::Word(w)]);
    }

    #[test]
    fn short_word_then_resync() {
        let rate = BitRate::High;
        let mut st = DemodState::new(rate);
        let full = modulate_word(Arinc429Word(0xFFFF_FFFF), rate);
        let mut short = SymbolStream::new();
        for s in &full.spans()[..62] {
            short.push(s.duration_ns, s.level);
        }
        short.push(rate.gap_ns(), LineLevel::Null);
        let ev = demodulate(&mut st, &short);
        assert_eq!(ev, vec![RxEvent::Error(RxErrorKind::ShortWord)]);
        let w = Arinc429Word(0x0BAD_F00D);
        assert_eq!(demodulate(&mut st, &modulate_word(w, rate)), vec![RxEvent::Word(w)]);
    }

    #[test]
    fn idle_line_is_silent() {
        let mut st = DemodState::new(BitRate::High);
        for _ in 0..1000 {
            assert!(st.step(LineLevel::Null, 1_000_000).is_empty());
        }
        assert_eq!(st.phase, DemodPhase::Idle);
    }

    #[test]
    fn split_and_merged_spans_are_equivalent() {
        let rate = BitRate::High;
        let w = Arinc429Word(0xA5A5_0F0F);
        let s = modulate_word(w, rate);
        let mut st = DemodState::new(rate);
        let mut ev = Vec::new();
        for span in &s {
            let a = span.duration_ns / 3;
            ev.extend(st.step(span.level, a));
            ev.extend(st.step(span.level, span.duration_ns - a));
        }
        assert_eq!(ev, vec![RxEvent::Word(w)]);
    }

    #[test]
    fn half_cell_tolerance_edges() {
        let rate = BitRate::High;
        let feed = |hi: u64, null: u64| {
            let mut st = DemodState::new(rate);
            let mut ev = Vec::new();
            for _ in 0..32 {
                ev.extend(st.step(LineLevel::Lo, hi));
                ev.extend(st.step(LineLevel::Null, null));
            }
            ev.extend(st.step(LineLevel::Null, rate.gap_ns()));
            ev
        };
        assert_eq!(words(&feed(4_750, 5_250)), vec![Arinc429Word(0)]);
        assert_eq!(words(&feed(5_250, 4_750)), vec![Arinc429Word(0)]);
        assert_eq!(feed(4_749, 5_000)[0], RxEvent::Error(RxErrorKind::RzViolation));
        assert_eq!(feed(5_251, 5_000)[0], RxEvent::Error(RxErrorKind::RzViolation));
        assert_eq!(feed(5_000, 5_251)[0], RxEvent::Error(RxErrorKind::RzViolation));
    }

    #[test]
    fn non_return_to_zero_is_violation() {
        let rate = BitRate::High;
        let mut st = DemodState::new(rate);
        let mut ev = st.step(LineLevel::Hi, 5_000);
        ev.extend(st.step(LineLevel::Lo, 5_000));
        assert_eq!(ev, vec![RxEvent::Error(RxErrorKind::RzViolation)]);
        assert_eq!(st.phase, DemodPhase::Idle);
    }

    #[test]
    fn missing_gap_is_long_word() {
        let rate = BitRate::High;
        let a = modulate_word_with_gap(Arinc429Word(0x1111_1111), rate, 1);
        let b = modulate_word(Arinc429Word(0x2222_2222), rate);
        let mut st = DemodState::new(rate);
        let mut ev = demodulate(&mut st, &a);
        ev.extend(demodulate(&mut st, &b));
        assert_eq!(
            ev,
            vec![
                RxEvent::Word(Arinc429Word(0x1111_1111)),
                RxEvent::Error(RxErrorKind::LongWord)
            ]
        );
        let c = Arinc429Word(0x3333_3333);
        assert_eq!(demodulate(&mut st, &modulate_word(c, rate)), vec![RxEvent::Word(c)]);
    }

    #[test]
    fn rate_change_waits_for_word_boundary() {
        let mut st = DemodState::new(BitRate::High);
        st.step(LineLevel::Hi, 5_000);
        st.set_rate(BitRate::Low);
        assert_eq!(st.current_rate, BitRate::High);
        assert_eq!(st.rate(), BitRate::Low);
        st.step(LineLevel::Hi, 10_000);
        assert_eq!(st.phase, DemodPhase::Idle);
        assert_eq!(st.current_rate, BitRate::Low);
    }

    #[test]
    fn mix_identities() {
        let s = modulate_word(Arinc429Word(0x8000_0013), BitRate::High);
        assert_eq!(mix(&[(0, &s)]), s);
        let idle = SymbolStream::null(s.duration_ns());
        assert_eq!(mix(&[(0, &s), (0, &idle)]), s);
        assert_eq!(mix(&[(0, &idle), (0, &s)]), s);
        assert!(mix(&[]).is_empty());
    }

    #[test]
    fn mix_offsets_pad_with_null() {
        let s = modulate_word(Arinc429Word(0), BitRate::High);
        let m = mix(&[(1_000, &s)]);
        assert_eq!(m.spans()[0], Span::new(1_000, LineLevel::Null));
        assert_eq!(m.duration_ns(), 361_000);
        assert_eq!(&m.spans()[1..], s.spans());
    }

    #[test]
    fn overlapping_words_collide() {
        let rate = BitRate::High;
        let a = modulate_word(Arinc429Word(0xFFFF_FFFF), rate);
        let b = modulate_word(Arinc429Word(0xFFFF_FFFF), rate);
        // b starts during a's last bit cell
        let m = mix(&[(0, &a), (310_000, &b)]);
        assert!(m.iter().any(|s| s.level == LineLevel::Collision));
        let mut st = DemodState::new(rate);
        let ev = demodulate(&mut st, &m);
        assert_eq!(ev.first(), Some(&RxEvent::Error(RxErrorKind::RzViolation)));
        assert!(!ev.contains(&RxEvent::Word(Arinc429Word(0xFFFF_FFFF))));
    }

    #[test]
    fn csv_round_trip() {
        let s = modulate_word(Arinc429Word(3), BitRate::High);
        let csv = s.to_csv(100);
        assert!(csv.starts_with("100,5000,+1\n5100,5000,0\n10100,5000,+1\n"));
        let rows = parse_trace_csv(&csv).unwrap();
        assert_eq!(rows.len(), 65);
        assert_eq!(rows.last().unwrap(), &(320_100, Span::new(40_000, LineLevel::Null)));
        assert!(matches!(
            parse_trace_csv("0,10,Z"),
            Err(TraceParseError::Level { line: 1, .. })
        ));
    }
}
