// SPDX-License-Identifier: Apache-2.0

//! Software model of a multi-channel ARINC 429 transmitter/receiver core.
//!
//! The crate is layered bottom-up:
//!
//! - [`word`]: 32-bit word assembly, disassembly and odd parity
//! - [`line`]: bipolar return-to-zero modulation, demodulation and line mixing
//! - [`fifo`]: the 512-word watermarked FIFO
//! - [`channel`]: Tx and Rx channels with their control/status registers
//! - [`bus`]: the CPU-facing core with address decode and interrupt aggregation
//! - [`sim`]: an event-driven bus simulator with fault injection and tracing

pub mod bus;
pub mod channel;
pub mod fifo;
pub mod line;
pub mod selftest;
pub mod sim;
pub mod word;

pub use bus::{
    AccessKind, AccessResult, AccessWarning, BusConfig, BusError, BusTransaction, Core429, CoreSnapshot,
    InterruptState, Register,
};
pub use channel::{ControlBits, LineFault, RxChannel, RxNotification, TxChannel};
pub use fifo::{FifoError, FifoFlags, WordFifo, FIFO_CAPACITY};
pub use line::{BitRate, DemodState, LineLevel, RxErrorKind, RxEvent, Span, SymbolStream};
pub use word::{Arinc429Word, CodecError, WordFields};
