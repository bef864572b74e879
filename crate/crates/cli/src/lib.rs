// SPDX-License-Identifier: Apache-2.0

//! Command-line front end: word encode/decode, simulation runs and the
//! built-in self test.
//!
//! Exit codes: 0 success, 1 usage or input error (also a failing self
//! test), 2 simulation abort.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use arinc429_core::sim::{run_config, FaultFile, SimConfig, SimError, StimulusScript};
use arinc429_core::word::{assemble, format_label, parse_hex_word, parse_octal_label};
use arinc429_core::{selftest, WordFields};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ABORT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "arinc429", version, about = "ARINC 429 word codec and multi-channel bus simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Assemble a word from its fields and print it as hex.
    Encode(EncodeArgs),
    /// Split a hex word into its fields.
    Decode {
        /// 32-bit word, `0x` prefix optional.
        word: String,
    },
    /// Run a stimulus script against a configured core.
    Simulate(SimulateArgs),
    /// Run the seeded invariant checks.
    Selftest {
        #[arg(long, default_value_t = 429)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
struct EncodeArgs {
    /// Label in octal, e.g. 310.
    #[arg(long)]
    label: String,
    #[arg(long, default_value_t = 0)]
    sdi: u8,
    /// 19-bit data field, decimal or 0x hex.
    #[arg(long, default_value = "0", value_parser = parse_u32)]
    data: u32,
    #[arg(long, default_value_t = 0)]
    ssm: u8,
    /// Compute bit 32 for odd parity.
    #[arg(long, conflicts_with = "parity_bit")]
    parity: bool,
    /// Force bit 32 to this value.
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
    parity_bit: Option<u8>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Bus and topology JSON.
    #[arg(long)]
    config: PathBuf,
    /// Stimulus script.
    #[arg(long)]
    script: PathBuf,
    /// Fault plan JSON.
    #[arg(long)]
    faults: Option<PathBuf>,
    /// Output directory for report.json and wire_<n>.csv.
    #[arg(long)]
    out: PathBuf,
}

fn parse_u32(s: &str) -> Result<u32, String> {
    let r = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(h) => u32::from_str_radix(h, 16),
        None => s.parse(),
    };
    r.map_err(|e| format!("{s:?}: {e}"))
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    let result = match cli.command {
        Command::Encode(a) => encode(&a, out),
        Command::Decode { word } => decode(&word, out),
        Command::Simulate(a) => simulate(&a, out, err),
        Command::Selftest { seed } => self_test(seed, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

struct Failure(i32, String);

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure(EXIT_USAGE, e.to_string())
}

fn io(path: &Path, e: std::io::Error) -> Failure {
    Failure(EXIT_USAGE, format!("{}: {e}", path.display()))
}

fn encode(a: &EncodeArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let label = parse_octal_label(&a.label).map_err(usage)?;
    let mut fields = WordFields::new(label, a.sdi, a.data, a.ssm);
    fields.parity_bit = a.parity_bit.unwrap_or(0);
    let w = assemble(fields, a.parity).map_err(usage)?;
    writeln!(out, "{w}").map_err(usage)?;
    Ok(EXIT_OK)
}

fn decode(text: &str, out: &mut dyn Write) -> Result<i32, Failure> {
    let w = parse_hex_word(text).map_err(usage)?;
    let f = w.fields();
    let valid = if w.has_valid_parity() { "valid" } else { "invalid" };
    let table = format!(
        "word    {w}\nlabel   {}\nsdi     {}\ndata    {} (0x{:05X})\nssm     {}\nparity  {} {valid}\n",
        format_label(f.label),
        f.sdi,
        f.data,
        f.data,
        f.ssm,
        f.parity_bit
    );
    out.write_all(table.as_bytes()).map_err(usage)?;
    Ok(EXIT_OK)
}

fn simulate(a: &SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let read = |p: &Path| fs::read_to_string(p).map_err(|e| io(p, e));
    let config = SimConfig::from_json(&read(&a.config)?).map_err(usage)?;
    let script = StimulusScript::parse(&read(&a.script)?).map_err(usage)?;
    let faults = match &a.faults {
        Some(p) => Some(FaultFile::from_json(&read(p)?).map_err(usage)?),
        None => None,
    };
    let report = match run_config(&config, &script, faults.as_ref()) {
        Ok(r) => r,
        Err(e @ SimError::Abort { .. }) => return Err(Failure(EXIT_ABORT, e.to_string())),
        Err(e) => return Err(usage(e)),
    };

    fs::create_dir_all(&a.out).map_err(|e| io(&a.out, e))?;
    let path = a.out.join("report.json");
    fs::write(&path, report.to_json()).map_err(|e| io(&path, e))?;
    for (i, t) in report.traces.iter().enumerate() {
        let path = a.out.join(format!("wire_{i}.csv"));
        fs::write(&path, t.to_csv()).map_err(|e| io(&path, e))?;
    }

    let received: usize = report.received.iter().map(|c| c.words.len()).sum();
    let _ = writeln!(
        out,
        "simulated {} ns: {received} words received, {} errors, {} interrupt edges",
        report.end_ns,
        report.error_count(),
        report.interrupt_edges.len()
    );
    for f in &report.expectation_failures {
        let _ = writeln!(err, "warning: script line {}: {}", f.line, f.message);
    }
    Ok(EXIT_OK)
}

fn self_test(seed: u64, out: &mut dyn Write) -> Result<i32, Failure> {
    let results = selftest::run(seed);
    for r in &results {
        let _ = writeln!(out, "{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    Ok(if results.iter().all(|r| r.passed) { EXIT_OK } else { EXIT_USAGE })
}
