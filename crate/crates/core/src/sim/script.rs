// SPDX-License-Identifier: Apache-2.0

//! Line-oriented stimulus scripts.
//!
//! ```text
//! # tx 0 and rx 1: enable with parity, then send one word
//! WRITE 0x000 0x03
//! WRITE 0x023 0x03
//! WRITE 0x002 0x00000012
//! WAIT  400000
//! READ  0x025 0x80000012
//! EXPECT_IRQ 0
//! ```
//!
//! Numbers accept `0x` hex, `0o` octal, `0b` binary or decimal. `#` starts a
//! comment. Keywords are case-insensitive.

use std::fmt;

use thiserror::Error;

use crate::bus::ADDRESS_SPACE;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("script line {line}: {message}")]
pub struct ScriptError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Directive {
    Write { address: u16, value: u32 },
    Read { address: u16, expect: Option<u32> },
    Wait { ns: u64 },
    ExpectIrq { level: bool },
}

impl fmt::Display for Directive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Directive::Write { address, value } => write!(f, "WRITE 0x{address:03X} 0x{value:08X}"),
            Directive::Read { address, expect: None } => write!(f, "READ 0x{address:03X}"),
            Directive::Read {
                address,
                expect: Some(e),
            } => write!(f, "READ 0x{address:03X} 0x{e:08X}"),
            Directive::Wait { ns } => write!(f, "WAIT {ns}"),
            Directive::ExpectIrq { level } => write!(f, "EXPECT_IRQ {}", *level as u8),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ScriptLine {
    /// 1-based source line.
    pub line: usize,
    pub directive: Directive,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StimulusScript {
    pub lines: Vec<ScriptLine>,
}

fn parse_number(tok: &str) -> Result<u64, String> {
    let t = tok.replace('_', "");
    let (radix, digits) = if let Some(d) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        (16, d)
    } else if let Some(d) = t.strip_prefix("0o") {
        (8, d)
    } else if let Some(d) = t.strip_prefix("0b") {
        (2, d)
    } else {
        (10, t.as_str())
    };
    u64::from_str_radix(digits, radix).map_err(|e| format!("bad number {tok:?}: {e}"))
}

impl StimulusScript {
    pub fn new(directives: impl IntoIterator<Item = Directive>) -> Self {
        Self {
            lines: directives
                .into_iter()
                .enumerate()
                .map(|(i, directive)| ScriptLine { line: i + 1, directive })
                .collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, ScriptError> {
        let mut lines = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let err = |message: String| ScriptError { line, message };
            let toks: Vec<&str> = body.split_whitespace().collect();
            let num = |idx: usize, what: &str| -> Result<u64, ScriptError> {
                let tok = toks.get(idx).ok_or_else(|| err(format!("missing {what}")))?;
                parse_number(tok).map_err(err)
            };
            let address = |idx: usize| -> Result<u16, ScriptError> {
                let a = num(idx, "address")?;
                if a >= ADDRESS_SPACE as u64 {
                    return Err(err(format!("address 0x{a:X} does not fit cpu_add[8:0]")));
                }
                Ok(a as u16)
            };
            let value32 = |idx: usize| -> Result<u32, ScriptError> {
                let v = num(idx, "value")?;
                u32::try_from(v).map_err(|_| err(format!("value 0x{v:X} wider than 32 bits")))
            };
            let arity = |n: std::ops::RangeInclusive<usize>| -> Result<(), ScriptError> {
                if n.contains(&(toks.len() - 1)) {
                    Ok(())
                } else {
                    Err(err(format!("{} takes {:?} operands, got {}", toks[0], n, toks.len() - 1)))
                }
            };
            let directive = match toks[0].to_ascii_uppercase().as_str() {
                "WRITE" => {
                    arity(2..=2)?;
                    Directive::Write {
                        address: address(1)?,
                        value: value32(2)?,
                    }
                }
                "READ" => {
                    arity(1..=2)?;
                    Directive::Read {
                        address: address(1)?,
                        expect: if toks.len() > 2 { Some(value32(2)?) } else { None },
                    }
                }
                "WAIT" => {
                    arity(1..=1)?;
                    let ns = num(1, "duration")?;
                    if ns == 0 {
                        return Err(err("WAIT duration must be positive".into()));
                    }
                    Directive::Wait { ns }
                }
                "EXPECT_IRQ" => {
                    arity(1..=1)?;
                    let level = match num(1, "level")? {
                        0 => false,
                        1 => true,
                        v => return Err(err(format!("EXPECT_IRQ level must be 0 or 1, got {v}"))),
                    };
                    Directive::ExpectIrq { level }
                }
                other => return Err(err(format!("unknown directive {other:?}"))),
            };
            lines.push(ScriptLine { line, directive });
        }
        Ok(Self { lines })
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }
}

impl fmt::Display for StimulusScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lines {
            writeln!(f, "{}", l.directive)?;
        }
        Ok(())
    }
}
