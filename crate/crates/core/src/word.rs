// SPDX-License-Identifier: Apache-2.0

//! 32-bit ARINC 429 word assembly, disassembly and odd parity.
//!
//! ARINC bit `n` lives at binary position `n - 1` of [`Arinc429Word::raw`]:
//!
//! | ARINC bits | field  | notes                                   |
//! |------------|--------|-----------------------------------------|
//! | 1-8        | label  | bit-reversed, bit 1 is the label MSB    |
//! | 9-10       | SDI    |                                         |
//! | 11-29      | data   | data LSB at bit 11                      |
//! | 30-31      | SSM    |                                         |
//! | 32         | parity | odd parity over the whole word          |

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const LABEL_MASK: u32 = 0x0000_00FF;
pub const SDI_MASK: u32 = 0x0000_0300;
pub const DATA_MASK: u32 = 0x1FFF_FC00;
pub const SSM_MASK: u32 = 0x6000_0000;
pub const PARITY_MASK: u32 = 0x8000_0000;

const SDI_SHIFT: u32 = 8;
const DATA_SHIFT: u32 = 10;
const SSM_SHIFT: u32 = 29;
const PARITY_SHIFT: u32 = 31;

pub const MAX_SDI: u8 = 3;
pub const MAX_DATA: u32 = (1 << 19) - 1;
pub const MAX_SSM: u8 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("{field} out of range: {value} > {max}")]
    FieldRange {
        field: &'static str,
        value: u32,
        max: u32,
    },
    #[error("{what}: invalid digit {found:?} at position {position}")]
    InvalidDigit {
        what: &'static str,
        found: char,
        position: usize,
    },
    #[error("{what}: empty input")]
    Empty { what: &'static str },
    #[error("{what}: value does not fit ({input})")]
    Overflow { what: &'static str, input: String },
}

/// A raw 32-bit ARINC 429 word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Arinc429Word(pub u32);

impl Arinc429Word {
    #[inline]
    pub const fn raw(self) -> u32 {
        self.0
    }

    /// Label in natural (un-reversed) bit order.
    #[inline]
    pub const fn label(self) -> u8 {
        (self.0 as u8).reverse_bits()
    }

    /// ARINC bit `n` (1-based) of the word.
    #[inline]
    pub const fn bit(self, n: u8) -> bool {
        debug_assert!(n >= 1 && n <= 32);
        (self.0 >> (n - 1)) & 1 == 1
    }

    #[inline]
    pub const fn with_bit_flipped(self, n: u8) -> Self {
        Self(self.0 ^ (1 << (n - 1)))
    }

    pub fn fields(self) -> WordFields {
        disassemble(self)
    }

    pub fn has_valid_parity(self) -> bool {
        check_parity(self)
    }
}

impl From<u32> for Arinc429Word {
    fn from(raw: u32) -> Self {
        Self(raw)
    }
}

impl From<Arinc429Word> for u32 {
    fn from(w: Arinc429Word) -> Self {
        w.0
    }
}

impl fmt::Display for Arinc429Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{:08X}", self.0)
    }
}

impl fmt::UpperHex for Arinc429Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::UpperHex::fmt(&self.0, f)
    }
}

impl Serialize for Arinc429Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Arinc429Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_hex_word(&s).map_err(serde::de::Error::custom)
    }
}

/// Decoded word fields. The data field is opaque (no BNR/BCD interpretation).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct WordFields {
    pub label: u8,
    pub sdi: u8,
    pub data: u32,
    pub ssm: u8,
    pub parity_bit: u8,
}

impl WordFields {
    pub fn new(label: u8, sdi: u8, data: u32, ssm: u8) -> Self {
        Self {
            label,
            sdi,
            data,
            ssm,
            parity_bit: 0,
        }
    }

    pub fn validate(&self) -> Result<(), CodecError> {
        check_range("sdi", self.sdi as u32, MAX_SDI as u32)?;
        check_range("data", self.data, MAX_DATA)?;
        check_range("ssm", self.ssm as u32, MAX_SSM as u32)?;
        check_range("parity_bit", self.parity_bit as u32, 1)
    }
}

fn check_range(field: &'static str, value: u32, max: u32) -> Result<(), CodecError> {
    if value > max {
        Err(CodecError::FieldRange { field, value, max })
    } else {
        Ok(())
    }
}

/// Parity bit that gives the full 32-bit word odd parity. Bits above 31 are ignored.
#[inline]
pub const fn compute_parity(bits_1_to_31: u32) -> u8 {
    ((bits_1_to_31 & !PARITY_MASK).count_ones() & 1 == 0) as u8
}

pub fn assemble(fields: WordFields, parity_enabled: bool) -> Result<Arinc429Word, CodecError> {
    fields.validate()?;
    let body = fields.label.reverse_bits() as u32
        | (fields.sdi as u32) << SDI_SHIFT
        | fields.data << DATA_SHIFT
        | (fields.ssm as u32) << SSM_SHIFT;
    let parity = if parity_enabled {
        compute_parity(body)
    } else {
        fields.parity_bit
    };
    Ok(Arinc429Word(body | (parity as u32) << PARITY_SHIFT))
}

pub fn disassemble(word: Arinc429Word) -> WordFields {
    let raw = word.0;
    WordFields {
        label: word.label(),
        sdi: ((raw & SDI_MASK) >> SDI_SHIFT) as u8,
        data: (raw & DATA_MASK) >> DATA_SHIFT,
        ssm: ((raw & SSM_MASK) >> SSM_SHIFT) as u8,
        parity_bit: (raw >> PARITY_SHIFT) as u8,
    }
}

#[inline]
pub const fn check_parity(word: Arinc429Word) -> bool {
    word.0.count_ones() & 1 == 1
}

/// Recomputes bit 32 so the word has odd parity.
#[inline]
pub const fn with_odd_parity(word: Arinc429Word) -> Arinc429Word {
    let body = word.0 & !PARITY_MASK;
    Arinc429Word(body | (compute_parity(body) as u32) << PARITY_SHIFT)
}

/// Three-digit octal rendering used for labels.
pub fn format_label(label: u8) -> String {
    format!("{label:03o}")
}

/// Parses an octal label (`"310"`, `"0o310"`), reporting the offending position.
pub fn parse_octal_label(s: &str) -> Result<u8, CodecError> {
    const WHAT: &str = "octal label";
    let (offset, digits) = match s.strip_prefix("0o") {
        Some(rest) => (2, rest),
        None => (0, s),
    };
    if digits.is_empty() {
        return Err(CodecError::Empty { what: WHAT });
    }
    let mut value: u32 = 0;
    for (i, c) in digits.chars().enumerate() {
        let d = c.to_digit(8).ok_or(CodecError::InvalidDigit {
            what: WHAT,
            found: c,
            position: offset + i,
        })?;
        value = value * 8 + d;
        if value > 0xFF {
            return Err(CodecError::Overflow {
                what: WHAT,
                input: s.to_string(),
            });
        }
    }
    Ok(value as u8)
}

/// Parses a hexadecimal word, with or without `0x`, reporting the offending position.
pub fn parse_hex_word(s: &str) -> Result<Arinc429Word, CodecError> {
    const WHAT: &str = "hex word";
    let (offset, digits) = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(rest) => (2, rest),
        None => (0, s),
    };
    if digits.is_empty() {
        return Err(CodecError::Empty { what: WHAT });
    }
    let mut value: u64 = 0;
    for (i, c) in digits.chars().enumerate() {
        let d = c.to_digit(16).ok_or(CodecError::InvalidDigit {
            what: WHAT,
            found: c,
            position: offset + i,
        })?;
        value = value << 4 | d as u64;
        if value > u32::MAX as u64 {
            return Err(CodecError::Overflow {
                what: WHAT,
                input: s.to_string(),
            });
        }
    }
    Ok(Arinc429Word(value as u32))
}
