//! Samples a counter right at its transitions and compares the worst error of
//! a Gray word resolved as a whole with a binary word resolved bit by bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vcosim::digital::{
    gray_decode, gray_encode, CounterTrajectory, Encoding, Sampler, SamplerMode, SamplerModel,
    Transition,
};

fn histogram(encoding: Encoding, mode: SamplerMode, events: usize) -> Vec<usize> {
    let bits = 6;
    let m = 1u32 << bits;
    type Code = fn(u32) -> u32;
    let (enc, dec): (Code, Code) = match encoding {
        Encoding::Gray => (gray_encode, gray_decode),
        Encoding::Binary => (|c| c, |w| w),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut sampler = Sampler::new(SamplerModel {
        aperture_s: 0.2,
        seed: 8,
        mode,
    });
    let mut hist = vec![0; m as usize / 2 + 1];
    for _ in 0..events {
        let c0 = rng.random_range(0..m);
        let next = [Transition {
            time_s: 1.0,
            word: enc((c0 + 1) % m),
        }];
        let traj = CounterTrajectory {
            initial: enc(c0),
            width: bits,
            encoding,
            transitions: &next,
        };
        let t: f64 = rng.random_range(0.9..1.1);
        let truth = if t >= 1.0 { (c0 + 1) % m } else { c0 };
        let got = dec(sampler.sample(&traj, t).word.value) & (m - 1);
        let d = (got + m - truth) % m;
        hist[d.min(m - d) as usize] += 1;
    }
    hist
}

fn main() {
    let events = 100_000;
    for (name, enc, mode) in [
        ("gray, per word", Encoding::Gray, SamplerMode::PerWord),
        ("binary, per bit", Encoding::Binary, SamplerMode::PerBit),
    ] {
        let h = histogram(enc, mode, events);
        let worst = h.iter().rposition(|&n| n > 0).unwrap_or(0);
        let spread: Vec<String> = h
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(e, n)| format!("{e}:{n}"))
            .collect();
        println!(
            "{name:<16} worst {worst:>2} LSB  error:count {}",
            spread.join(" ")
        );
    }
}
