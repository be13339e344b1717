//! Asynchronous sampling of a running counter with a metastability window.
//!
//! A flip-flop whose input changes within `aperture_s` of the clock edge
//! may resolve either way. Sampling a Gray word, only one bit can be in
//! flight, so the result is the old or the new word; sampling a binary word,
//! every toggling bit resolves independently.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DigitalWord, Encoding};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerMode {
    /// The register resolves to one of the words present in the window.
    #[default]
    PerWord,
    /// Each toggling bit resolves independently.
    PerBit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerModel {
    /// Width of the metastability window centred on the edge; 0 is ideal.
    pub aperture_s: f64,
    pub seed: u64,
    #[serde(default)]
    pub mode: SamplerMode,
}

impl SamplerModel {
    pub fn ideal() -> Self {
        Self {
            aperture_s: 0.0,
            seed: 0,
            mode: SamplerMode::PerWord,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.aperture_s.is_finite() && self.aperture_s >= 0.0) {
            return Err(Error::config(format!(
                "aperture must be >= 0, got {}",
                self.aperture_s
            )));
        }
        Ok(())
    }
}

/// Counter change at `time_s`; `word` holds from then on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub time_s: f64,
    pub word: u32,
}

/// Word history around a sampling instant. Transitions are time-ordered.
#[derive(Debug, Clone, Copy)]
pub struct CounterTrajectory<'a> {
    /// Word in force before the first listed transition.
    pub initial: u32,
    pub width: u32,
    pub encoding: Encoding,
    pub transitions: &'a [Transition],
}

impl CounterTrajectory<'_> {
    /// Word in force at `t` (a transition at exactly `t` has happened).
    pub fn word_at(&self, t: f64) -> u32 {
        self.transitions
            .iter()
            .take_while(|tr| tr.time_s <= t)
            .last()
            .map_or(self.initial, |tr| tr.word)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleOutcome {
    pub word: DigitalWord,
    /// Transitions that fell inside the aperture.
    pub in_window: usize,
    /// More than one transition inside the aperture.
    pub aperture_too_wide: bool,
}

/// Sampling register with its own random source.
#[derive(Debug, Clone)]
pub struct Sampler {
    pub model: SamplerModel,
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(model: SamplerModel) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(model.seed),
            model,
        }
    }

    pub fn sample(&mut self, traj: &CounterTrajectory<'_>, t_s: f64) -> SampleOutcome {
        let half = self.model.aperture_s / 2.0;
        let (lo, hi) = (t_s - half, t_s + half);
        let (word, in_window) = if half > 0.0 {
            let old = traj.word_at(lo);
            let inside: Vec<u32> = traj
                .transitions
                .iter()
                .filter(|tr| tr.time_s > lo && tr.time_s <= hi)
                .map(|tr| tr.word)
                .collect();
            let word = match inside.len() {
                0 => old,
                _ => self.resolve(old, &inside),
            };
            (word, inside.len())
        } else {
            (traj.word_at(t_s), 0)
        };
        SampleOutcome {
            word: DigitalWord::new(word, traj.width, traj.encoding)
                .expect("trajectory words fit their width"),
            in_window,
            aperture_too_wide: in_window > 1,
        }
    }

    fn resolve(&mut self, old: u32, inside: &[u32]) -> u32 {
        match self.model.mode {
            SamplerMode::PerWord => {
                let pick = self.rng.random_range(0..=inside.len());
                if pick == 0 {
                    old
                } else {
                    inside[pick - 1]
                }
            }
            SamplerMode::PerBit => {
                // A bit is uncertain if it takes more than one value in the window.
                let mut or = old;
                let mut and = old;
                for &w in inside {
                    or |= w;
                    and &= w;
                }
                let uncertain = or ^ and;
                let coin: u32 = self.rng.random();
                (and & !uncertain) | (coin & uncertain)
            }
        }
    }
}

/// Samples `traj` at `t_s` through `sampler`.
pub fn sample(traj: &CounterTrajectory<'_>, t_s: f64, sampler: &mut Sampler) -> SampleOutcome {
    sampler.sample(traj, t_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digital::{gray_decode, gray_encode};

    fn model(mode: SamplerMode) -> SamplerModel {
        SamplerModel {
            aperture_s: 1e-9,
            seed: 11,
            mode,
        }
    }

    #[test]
    fn no_transition_in_window_is_exact() {
        let tr = [Transition {
            time_s: 5e-9,
            word: 0b0110,
        }];
        let traj = CounterTrajectory {
            initial: 0b0010,
            width: 4,
            encoding: Encoding::Gray,
            transitions: &tr,
        };
        let mut s = Sampler::new(model(SamplerMode::PerWord));
        assert_eq!(s.sample(&traj, 0.0).word.value, 0b0010);
        assert_eq!(s.sample(&traj, 1e-8).word.value, 0b0110);
    }

    #[test]
    fn gray_edge_resolves_to_neighbour() {
        let mut s = Sampler::new(model(SamplerMode::PerWord));
        let (old, new) = (gray_encode(7), gray_encode(8));
        let tr = [Transition {
            time_s: 0.0,
            word: new,
        }];
        let traj = CounterTrajectory {
            initial: old,
            width: 4,
            encoding: Encoding::Gray,
            transitions: &tr,
        };
        let mut seen = [false; 2];
        for _ in 0..200 {
            let out = s.sample(&traj, 0.0);
            assert_eq!(out.in_window, 1);
            let d = gray_decode(out.word.value);
            assert!(d == 7 || d == 8);
            seen[(d - 7) as usize] = true;
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn binary_edge_can_mix_bits() {
        let mut s = Sampler::new(model(SamplerMode::PerBit));
        let tr = [Transition {
            time_s: 0.0,
            word: 0b1000,
        }];
        let traj = CounterTrajectory {
            initial: 0b0111,
            width: 4,
            encoding: Encoding::Binary,
            transitions: &tr,
        };
        let seen_15 = (0..500).any(|_| s.sample(&traj, 0.0).word.value == 0b1111);
        assert!(seen_15, "worst-case 8 LSB error should occur");
    }

    #[test]
    fn two_transitions_flag_wide_aperture() {
        let mut s = Sampler::new(model(SamplerMode::PerWord));
        let tr = [
            Transition {
                time_s: -0.2e-9,
                word: 1,
            },
            Transition {
                time_s: 0.2e-9,
                word: 3,
            },
        ];
        let traj = CounterTrajectory {
            initial: 0,
            width: 4,
            encoding: Encoding::Gray,
            transitions: &tr,
        };
        let out = s.sample(&traj, 0.0);
        assert!(out.aperture_too_wide);
        assert!([0, 1, 3].contains(&out.word.value));
    }

    #[test]
    fn ideal_sampler_takes_word_at_edge() {
        let mut s = Sampler::new(SamplerModel::ideal());
        let tr = [Transition {
            time_s: 0.0,
            word: 9,
        }];
        let traj = CounterTrajectory {
            initial: 8,
            width: 4,
            encoding: Encoding::Binary,
            transitions: &tr,
        };
        assert_eq!(s.sample(&traj, 0.0).word.value, 9);
        assert_eq!(s.sample(&traj, -1e-12).word.value, 8);
    }

    #[test]
    fn negative_aperture_rejected() {
        let m = SamplerModel {
            aperture_s: -1.0,
            ..SamplerModel::ideal()
        };
        assert!(m.validate().is_err());
    }
}
