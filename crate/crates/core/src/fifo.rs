// SPDX-License-Identifier: Apache-2.0

//! 512-word FIFO with a programmable watermark.

use std::collections::VecDeque;

use serde::Serialize;
use thiserror::Error;

use crate::word::Arinc429Word;

pub const FIFO_CAPACITY: usize = 512;
pub const DEFAULT_LEVEL: u16 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FifoError {
    #[error("fifo full, word dropped")]
    Overflow,
    #[error("fifo empty")]
    Underflow,
    #[error("fifo level {0} outside 1..=512")]
    LevelRange(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub struct FifoFlags {
    pub empty: bool,
    pub half_full: bool,
    pub full: bool,
}

impl FifoFlags {
    /// Packed as status bits 0..=2.
    pub fn bits(self) -> u8 {
        self.empty as u8 | (self.half_full as u8) << 1 | (self.full as u8) << 2
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WordFifo {
    storage: VecDeque<Arinc429Word>,
    level: u16,
}

impl Default for WordFifo {
    fn default() -> Self {
        Self::new()
    }
}

impl WordFifo {
    pub fn new() -> Self {
        Self {
            storage: VecDeque::with_capacity(FIFO_CAPACITY),
            level: DEFAULT_LEVEL,
        }
    }

    pub fn push(&mut self, word: Arinc429Word) -> Result<(), FifoError> {
        if self.storage.len() >= FIFO_CAPACITY {
            return Err(FifoError::Overflow);
        }
        self.storage.push_back(word);
        Ok(())
    }

    pub fn pop(&mut self) -> Result<Arinc429Word, FifoError> {
        self.storage.pop_front().ok_or(FifoError::Underflow)
    }

    pub fn peek(&self) -> Option<Arinc429Word> {
        self.storage.front().copied()
    }

    pub fn set_level(&mut self, level: u32) -> Result<(), FifoError> {
        if !(1..=FIFO_CAPACITY as u32).contains(&level) {
            return Err(FifoError::LevelRange(level));
        }
        self.level = level as u16;
        Ok(())
    }

    pub fn level(&self) -> u16 {
        self.level
    }

    pub fn occupancy(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn flags(&self) -> FifoFlags {
        let n = self.storage.len();
        FifoFlags {
            empty: n == 0,
            half_full: n >= self.level as usize,
            full: n == FIFO_CAPACITY,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Arinc429Word> + '_ {
        self.storage.iter().copied()
    }

    pub fn clear(&mut self) {
        self.storage.clear();
    }
}
