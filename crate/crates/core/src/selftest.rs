// SPDX-License-Identifier: Apache-2.0

//! Quick, seeded invariant checks behind the `selftest` CLI subcommand.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bus::{aggregate_interrupts, encode_address, BusConfig, Core429, Register};
use crate::channel::{control, interrupt_from};
use crate::fifo::{WordFifo, FIFO_CAPACITY};
use crate::line::{demodulate, modulate_word, BitRate, DemodState, RxEvent};
use crate::sim::{run_simulation, Directive, StimulusScript, Topology};
use crate::word::{assemble, check_parity, disassemble, Arinc429Word, WordFields, MAX_DATA};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, failures: usize, trials: usize) -> CheckResult {
    CheckResult {
        name,
        passed: failures == 0,
        detail: format!("{failures} failures in {trials} trials"),
    }
}

fn random_fields(rng: &mut impl Rng) -> WordFields {
    WordFields::new(rng.random(), rng.random_range(0..4), rng.random_range(0..=MAX_DATA), rng.random_range(0..4))
}

fn codec(rng: &mut impl Rng) -> CheckResult {
    let mut bad = 0;
    for _ in 0..10_000 {
        let f = random_fields(rng);
        if disassemble(assemble(f, false).unwrap()) != f {
            bad += 1;
        }
    }
    check("codec round trip", bad, 10_000)
}

fn parity(rng: &mut impl Rng) -> CheckResult {
    let mut bad = 0;
    for _ in 0..1_000 {
        let w = assemble(random_fields(rng), true).unwrap();
        bad += !check_parity(w) as usize;
        bad += (1..=32).filter(|&b| check_parity(w.with_bit_flipped(b))).count();
    }
    check("parity closure and single-bit sensitivity", bad, 33_000)
}

fn line_loopback(rng: &mut impl Rng) -> CheckResult {
    let mut bad = 0;
    for rate in [BitRate::High, BitRate::Low] {
        let mut st = DemodState::new(rate);
        for _ in 0..500 {
            let w = Arinc429Word(rng.random());
            if demodulate(&mut st, &modulate_word(w, rate)) != [RxEvent::Word(w)] {
                bad += 1;
            }
        }
    }
    check("line coding loopback", bad, 1_000)
}

fn fifo_oracle(rng: &mut impl Rng) -> CheckResult {
    let mut fifo = WordFifo::new();
    let mut model: VecDeque<u32> = VecDeque::new();
    let mut level = 256usize;
    let mut bad = 0;
    for i in 0..20_000u32 {
        match rng.random_range(0..10) {
            0..=4 => {
                let ok = fifo.push(Arinc429Word(i)).is_ok();
                if model.len() < FIFO_CAPACITY {
                    model.push_back(i);
                    bad += !ok as usize;
                } else {
                    bad += ok as usize;
                }
            }
            5..=8 => {
                bad += (fifo.pop().ok().map(|w| w.raw()) != model.pop_front()) as usize;
            }
            _ => {
                level = rng.random_range(1..=FIFO_CAPACITY);
                fifo.set_level(level as u32).unwrap();
            }
        }
        let f = fifo.flags();
        let n = model.len();
        bad += (f.empty != (n == 0) || f.full != (n == FIFO_CAPACITY) || f.half_full != (n >= level)) as usize;
    }
    check("fifo reference oracle", bad, 20_000)
}

fn interrupts(rng: &mut impl Rng) -> CheckResult {
    let mut bad = 0;
    for s in 0..8u8 {
        for e in 0..8u8 {
            bad += (interrupt_from(s, e << 4) != (s & e != 0)) as usize;
        }
    }
    let mut core = Core429::new(BusConfig::new(32, 16).unwrap()).unwrap();
    for _ in 0..200 {
        let ch = rng.random_range(0..16u8);
        let reg = if rng.random() { Register::TxControl } else { Register::RxControl };
        core.write_register(encode_address(ch, reg), rng.random_range(0..0x80)).unwrap();
        let st = core.interrupts();
        bad += (st != aggregate_interrupts(&core) || st.int_out != (st.int_out_rx || st.int_out_tx)) as usize;
    }
    check("interrupt algebra", bad, 264)
}

fn simulation(rng: &mut impl Rng) -> CheckResult {
    let ws: Vec<u32> = (0..20).map(|_| rng.random()).collect();
    let mut d = vec![
        Directive::Write {
            address: encode_address(0, Register::TxControl),
            value: control::ENABLE as u32,
        },
        Directive::Write {
            address: encode_address(0, Register::RxControl),
            value: control::ENABLE as u32,
        },
    ];
    d.extend(ws.iter().map(|&w| Directive::Write {
        address: encode_address(0, Register::TxFifo),
        value: w,
    }));
    let script = StimulusScript::new(d);
    let topo = Topology::loopback(1);
    let cfg = BusConfig::new(32, 1).unwrap();
    let a = run_simulation(cfg, &topo, &script, 0);
    let b = run_simulation(cfg, &topo, &script, 0);
    let bad = match (a, b) {
        (Ok(a), Ok(b)) => {
            let got: Vec<u32> = a.received_words(0).iter().map(|w| w.raw()).collect();
            (got != ws) as usize + (a.to_json() != b.to_json()) as usize + a.error_count()
        }
        _ => 1,
    };
    check("loopback simulation conservation and determinism", bad, 1)
}

pub fn run(seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        codec(&mut rng),
        parity(&mut rng),
        line_loopback(&mut rng),
        fifo_oracle(&mut rng),
        interrupts(&mut rng),
        simulation(&mut rng),
    ]
}
