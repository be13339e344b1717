//! Idealized loops in normalized time (one unit per sampling period).
//!
//! The reference is a continuous-time second-order loop with a rectangular
//! feedback pulse and feedback gains 1 and 1.5, whose NTF is `(1-z^-1)^2`.
//! The nested form moves the first integrator out of the loop: an open
//! integrator `X` feeds a first-order loop whose quantized state `w` is
//! differenced at the output. Started from the same state, both emit the
//! same sequence.

use serde::{Deserialize, Serialize};

use crate::digital::{mod_subtract, DigitalWord};
use crate::error::{Error, Result};
use crate::signal::Excitation;

use super::SimConfig;

/// State magnitude treated as divergence.
const DIVERGENCE: f64 = 1e6;
const CHUNK: usize = 4096;

/// Input scaling `u = offset + counts_per_volt * x`, in counts per sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopInput {
    pub counts_per_volt: f64,
    pub offset: f64,
}

impl LoopInput {
    /// Same scaling as the oscillator loop: VCO gain and rest rate over fs.
    pub fn from_config(cfg: &SimConfig) -> Self {
        Self {
            counts_per_volt: cfg.counts_per_volt(),
            offset: cfg.rest_counts(),
        }
    }

    /// Unit gain around zero.
    pub fn unity() -> Self {
        Self {
            counts_per_volt: 1.0,
            offset: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceOptions {
    pub input: LoopInput,
    /// Integrator states `(I1, I2)` at t = 0.
    pub initial: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceOutput {
    pub y: Vec<i64>,
    /// Largest integrator magnitude over the run.
    pub max_state: f64,
}

/// Engine-rate discretization of the continuous reference loop.
///
/// `I1` uses the rectangle rule (its input is piecewise constant per step
/// apart from `x`), `I2` the trapezoid rule on `I1`; the quantizer rounds
/// and its output is fed back immediately.
pub fn simulate_reference_ctsdm<E: Excitation + ?Sized>(
    cfg: &SimConfig,
    input: &E,
    n_samples: usize,
    opts: &ReferenceOptions,
) -> Result<ReferenceOutput> {
    check_run(cfg, input, n_samples)?;
    let k = cfg.oversampling as usize;
    let h = 1.0 / k as f64;
    let [mut i1, mut i2] = opts.initial;
    let mut y_hold = 0.0;
    let mut max_state = i1.abs().max(i2.abs());
    let mut y = Vec::with_capacity(n_samples);
    let mut feed = Feed::new(input, cfg.engine_rate());
    for n in 0..n_samples {
        for step in 0..k {
            let u = opts.input.offset + opts.input.counts_per_volt * feed.at(n * k + step);
            let i1_new = i1 + (u - y_hold) * h;
            i2 += (0.5 * (i1 + i1_new) - 1.5 * y_hold) * h;
            i1 = i1_new;
            max_state = max_state.max(i1.abs()).max(i2.abs());
        }
        if !(max_state < DIVERGENCE) {
            return Err(Error::Unstable(format!(
                "reference loop state reached {max_state:.3e} at sample {n}"
            )));
        }
        let q = i2.round();
        y_hold = q;
        y.push(q as i64);
    }
    Ok(ReferenceOutput { y, max_state })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FirstIntegrator {
    /// Real-valued, unbounded.
    Continuous,
    /// Unbounded integer counter `floor(X)`.
    Counter,
    /// `bits`-wide counter read through a modulo subtractor whose output
    /// code `offset` means zero, so the representable difference is
    /// `[-offset, 2^bits - offset)`.
    Modulo { bits: u32, offset: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NestedOptions {
    pub mode: FirstIntegrator,
    pub input: LoopInput,
    /// `(X, W)` at t = 0.
    pub initial: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct NestedOutput {
    pub y: Vec<i64>,
    /// Sampling periods in which the first counter wrapped twice or more.
    pub multi_wrap: u64,
    /// Steps where the modulo difference differed from the unbounded one.
    pub out_of_range_steps: u64,
}

/// Open first integrator followed by a first-order loop and a first
/// difference.
///
/// States are kept relative to the last output word so they stay small;
/// rebasing by an integer leaves every quantizer decision unchanged.
pub fn simulate_nested<E: Excitation + ?Sized>(
    cfg: &SimConfig,
    input: &E,
    n_samples: usize,
    opts: &NestedOptions,
) -> Result<NestedOutput> {
    check_run(cfg, input, n_samples)?;
    let modulo_bits = match opts.mode {
        FirstIntegrator::Modulo { bits, offset }
            if !(2..=16).contains(&bits) || !(0..1i64 << bits).contains(&offset) =>
        {
            return Err(Error::config(format!(
                "modulo width {bits} / offset {offset} invalid"
            )))
        }
        FirstIntegrator::Modulo { bits, .. } => Some(bits),
        _ => None,
    };
    let k = cfg.oversampling as usize;
    let h = 1.0 / k as f64;
    let [mut x, mut w_state] = opts.initial;
    // Absolute value of the origin the relative states are measured from.
    let mut origin: i64 = 0;
    let mut w_prev: i64 = 0;
    let mut out = NestedOutput {
        y: Vec::with_capacity(n_samples),
        multi_wrap: 0,
        out_of_range_steps: 0,
    };
    let mut feed = Feed::new(input, cfg.engine_rate());

    // Integrand seen by the loop for first-integrator state `x` against the
    // held word (which sits at relative position 0).
    let integrand = |x: f64, origin: i64, out: &mut NestedOutput| -> Result<f64> {
        Ok(match opts.mode {
            FirstIntegrator::Continuous => x,
            FirstIntegrator::Counter => x.floor(),
            FirstIntegrator::Modulo { bits, offset } => {
                let m = 1i64 << bits;
                let c = x.floor() as i64;
                let cw = DigitalWord::binary((c + origin + offset).rem_euclid(m) as u32, bits);
                let ww = DigitalWord::binary(origin.rem_euclid(m) as u32, bits);
                let v = i64::from(mod_subtract(cw, ww)?.value) - offset;
                if v != c {
                    out.out_of_range_steps += 1;
                }
                v as f64
            }
        })
    };

    for n in 0..n_samples {
        let counter_start = x.floor() as i64 + origin;
        let mut g_old = integrand(x, origin, &mut out)?;
        for step in 0..k {
            let u = opts.input.offset + opts.input.counts_per_volt * feed.at(n * k + step);
            x += u * h;
            let g_new = integrand(x, origin, &mut out)?;
            // The held word is 0 in relative coordinates.
            w_state += 0.5 * (g_old + g_new) * h;
            g_old = g_new;
        }
        if !(w_state.abs() < DIVERGENCE && x.abs() < DIVERGENCE) {
            return Err(Error::Unstable(format!(
                "nested loop state diverged at sample {n}"
            )));
        }
        if let Some(bits) = modulo_bits {
            let counter_end = x.floor() as i64 + origin;
            if (counter_end >> bits) - (counter_start >> bits) >= 2 {
                out.multi_wrap += 1;
            }
        }
        let w_rel = w_state.round() as i64;
        let w_abs = origin + w_rel;
        out.y.push(match modulo_bits {
            Some(bits) => {
                let m = 1i64 << bits;
                (w_abs.rem_euclid(m) - w_prev.rem_euclid(m) + m / 2).rem_euclid(m) - m / 2
            }
            None => w_abs - w_prev,
        });
        w_prev = w_abs;
        origin = w_abs;
        x -= w_rel as f64;
        w_state -= w_rel as f64;
    }
    Ok(out)
}

fn check_run<E: Excitation + ?Sized>(cfg: &SimConfig, input: &E, n_samples: usize) -> Result<()> {
    if !(cfg.fs_hz.is_finite() && cfg.fs_hz > 0.0) || cfg.oversampling < 1 {
        return Err(Error::config("invalid sampling configuration"));
    }
    if n_samples == 0 {
        return Err(Error::config("sample count must be positive"));
    }
    let needed = n_samples as u64 * u64::from(cfg.oversampling);
    if let Some(len) = input.len_hint() {
        if len < needed {
            return Err(Error::InsufficientSamples {
                needed: needed as usize,
                available: len as usize,
            });
        }
    }
    Ok(())
}

/// Sequential reader over an excitation, buffered in chunks.
struct Feed<'a, E: ?Sized> {
    src: &'a E,
    rate: f64,
    buf: Vec<f64>,
    start: usize,
    len: usize,
}

impl<'a, E: Excitation + ?Sized> Feed<'a, E> {
    fn new(src: &'a E, rate: f64) -> Self {
        Self {
            src,
            rate,
            buf: vec![0.0; CHUNK],
            start: 0,
            len: 0,
        }
    }

    #[inline]
    fn at(&mut self, i: usize) -> f64 {
        if i >= self.start + self.len || i < self.start {
            self.start = i;
            self.len = CHUNK;
            if let Some(total) = self.src.len_hint() {
                self.len = self.len.min(total as usize - i);
            }
            self.src
                .fill(i as u64, self.rate, &mut self.buf[..self.len]);
        }
        self.buf[i - self.start]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Stimulus;

    fn cfg(k: u32) -> SimConfig {
        SimConfig {
            oversampling: k,
            ..SimConfig::default()
        }
    }

    #[test]
    fn zero_input_idles_bounded() {
        let opts = ReferenceOptions {
            input: LoopInput::unity(),
            initial: [0.0, 0.0],
        };
        let out = simulate_reference_ctsdm(&cfg(64), &Stimulus::Silence, 4096, &opts).unwrap();
        assert!(out.max_state < 4.0, "max state {}", out.max_state);
        assert!(out.y.iter().all(|&v| v.abs() <= 2));
    }

    #[test]
    fn constant_input_mean_tracks() {
        let opts = ReferenceOptions {
            input: LoopInput {
                counts_per_volt: 1.0,
                offset: 3.3,
            },
            initial: [0.0, 0.0],
        };
        let out = simulate_reference_ctsdm(&cfg(64), &Stimulus::Silence, 10_000, &opts).unwrap();
        let mean = out.y.iter().sum::<i64>() as f64 / out.y.len() as f64;
        assert!((mean - 3.3).abs() < 1e-3, "mean {mean}");
    }

    #[test]
    fn nested_matches_reference_from_same_state() {
        let c = cfg(64);
        let stim = Stimulus::tone(-6.0, 7_000.0);
        let input = LoopInput::from_config(&c);
        for initial in [[0.0, 0.0], [0.3, -0.2]] {
            let r = simulate_reference_ctsdm(&c, &stim, 3000, &ReferenceOptions { input, initial })
                .unwrap();
            let nested = NestedOptions {
                mode: FirstIntegrator::Continuous,
                input,
                initial,
            };
            let d = simulate_nested(&c, &stim, 3000, &nested).unwrap();
            assert_eq!(r.y, d.y);
        }
    }

    #[test]
    fn modulo_counter_equals_unbounded_counter() {
        let c = cfg(64);
        let stim = Stimulus::tone(-3.0, 5_000.0);
        let input = LoopInput::from_config(&c);
        let run = |mode| {
            simulate_nested(
                &c,
                &stim,
                4000,
                &NestedOptions {
                    mode,
                    input,
                    initial: [0.0, 0.0],
                },
            )
            .unwrap()
        };
        let counter = run(FirstIntegrator::Counter);
        let modulo = run(FirstIntegrator::Modulo {
            bits: 6,
            offset: 16,
        });
        assert_eq!(modulo.multi_wrap, 0);
        assert_eq!(modulo.out_of_range_steps, 0);
        assert_eq!(counter.y, modulo.y);
    }

    #[test]
    fn narrow_modulo_counter_reports_wraps() {
        let c = cfg(64);
        let input = LoopInput {
            counts_per_volt: 0.0,
            offset: 40.0,
        };
        let out = simulate_nested(
            &c,
            &Stimulus::Silence,
            500,
            &NestedOptions {
                mode: FirstIntegrator::Modulo { bits: 4, offset: 0 },
                input,
                initial: [0.0, 0.0],
            },
        )
        .unwrap();
        assert!(out.multi_wrap > 0);
        assert!(out.out_of_range_steps > 0);
    }

    #[test]
    fn runaway_gain_is_unstable() {
        let opts = ReferenceOptions {
            input: LoopInput {
                counts_per_volt: 1.0,
                offset: 0.0,
            },
            initial: [1e7, 0.0],
        };
        let r = simulate_reference_ctsdm(&cfg(16), &Stimulus::Silence, 10, &opts);
        assert!(matches!(r, Err(Error::Unstable(_))));
    }
}
