// SPDX-License-Identifier: Apache-2.0

//! Fixtures shared by the criterion benches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use arinc429_core::bus::{encode_address, Register};
use arinc429_core::channel::control;
use arinc429_core::sim::{Directive, StimulusScript};
use arinc429_core::word::{assemble, WordFields, MAX_DATA};
use arinc429_core::Arinc429Word;

/// Seeded random words with valid parity.
pub fn words(n: usize, seed: u64) -> Vec<Arinc429Word> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let f = WordFields::new(rng.random(), rng.random_range(0..4), rng.random_range(0..=MAX_DATA), rng.random_range(0..4));
            assemble(f, true).expect("fields in range")
        })
        .collect()
}

/// Tx n -> Rx n on every channel, `per_channel` words each, all written at t=0.
pub fn loopback_script(channels: u8, per_channel: usize, seed: u64) -> StimulusScript {
    let ctl = (control::ENABLE | control::PARITY) as u32;
    let mut d = Vec::new();
    for ch in 0..channels {
        d.push(Directive::Write {
            address: encode_address(ch, Register::TxControl),
            value: ctl,
        });
        d.push(Directive::Write {
            address: encode_address(ch, Register::RxControl),
            value: ctl,
        });
        d.extend(words(per_channel, seed + ch as u64).into_iter().map(|w| Directive::Write {
            address: encode_address(ch, Register::TxFifo),
            value: w.raw(),
        }));
    }
    StimulusScript::new(d)
}
