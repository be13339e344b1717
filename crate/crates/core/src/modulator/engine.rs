//! Fixed-step engine for the oscillator-only loop.
//!
//! Each branch runs `K` engine steps per sampling period. Per step the input
//! VCO integrates its control voltage, every subtractor forms
//! `(C_j - w_hold) mod 2^B`, the DAC codes steer the DCOs, and each state
//! change of the last DCO walks the tap/encoder/extender path. Sampling
//! happens at the end of the first step after an edge (so transitions on
//! both sides of the edge are known) and the new word is held from the
//! following step on.

use crate::digital::{
    gray_to_binary, CounterTrajectory, DigitalWord, Encoding, FirstDifference, GrayEncoder,
    GrayExtender, Sampler, Transition,
};
use crate::error::{Error, Result};
use crate::oscillator::{
    instantaneous_frequency, taps_at_state, OscillatorParams, OscillatorState, TunedFrequency,
};
use crate::signal::{Excitation, Stimulus};

use super::{Branch, BranchTrace, DcoStageConfig, EventKind, EventLog, ModulatorTrace, SimConfig};

const CHUNK: usize = 4096;

/// Additive test signals used to measure internal transfer functions.
/// Both are applied with opposite signs to the two branches; the DCO
/// voltage is split in half like the main input.
#[derive(Clone, Copy, Default)]
pub struct Injection<'a> {
    /// Integer sequence added to the sampled word, one entry per sample.
    pub quantizer: Option<&'a [i32]>,
    /// Voltage added at the control input of the last DCO.
    pub dco_input: Option<&'a Stimulus>,
}

/// Second-order loop of the configured stage-2 DCO.
pub fn simulate_proposed<E: Excitation + ?Sized>(
    cfg: &SimConfig,
    input: &E,
    n_samples: usize,
) -> Result<ModulatorTrace> {
    simulate_with(
        cfg,
        std::slice::from_ref(&cfg.stage2),
        input,
        n_samples,
        Injection::default(),
    )
}

/// Order `stages.len() + 1` cascade: the input VCO followed by one DCO
/// integrator per stage, each fed by a modulo subtractor against the
/// common sampled output. Only the last DCO is Gray-counted and sampled.
pub fn simulate_higher_order<E: Excitation + ?Sized>(
    cfg: &SimConfig,
    stages: &[DcoStageConfig],
    input: &E,
    n_samples: usize,
) -> Result<ModulatorTrace> {
    simulate_with(cfg, stages, input, n_samples, Injection::default())
}

pub fn simulate_with<E: Excitation + ?Sized>(
    cfg: &SimConfig,
    stages: &[DcoStageConfig],
    input: &E,
    n_samples: usize,
    injection: Injection<'_>,
) -> Result<ModulatorTrace> {
    cfg.validate_stages(stages)?;
    if n_samples == 0 {
        return Err(Error::config("sample count must be positive"));
    }
    let steps = n_samples as u64 * u64::from(cfg.oversampling) + 1;
    if let Some(len) = input.len_hint() {
        if len < steps {
            return Err(Error::InsufficientSamples {
                needed: steps as usize,
                available: len as usize,
            });
        }
    }
    if let Some(d) = injection.quantizer {
        if d.len() < n_samples {
            return Err(Error::InsufficientSamples {
                needed: n_samples,
                available: d.len(),
            });
        }
    }
    if let Some(stim) = injection.dco_input {
        stim.validate(cfg.engine_rate())?;
    }

    let run = |branch| BranchRun::new(cfg, stages, branch, injection)?.run(input, n_samples);
    let (p, n) = if cfg.pseudo_differential {
        let (p, n) = rayon::join(|| run(Branch::P), || run(Branch::N));
        (p?, Some(n?))
    } else {
        (run(Branch::P)?, None)
    };
    let (branch_p, mut events) = p;
    let (branch_n, dout) = match n {
        Some((bn, ev_n)) => {
            events.merge(ev_n);
            let dout = branch_p.y.iter().zip(&bn.y).map(|(a, b)| a - b).collect();
            (Some(bn), dout)
        }
        None => (None, branch_p.y.clone()),
    };
    Ok(ModulatorTrace {
        order: stages.len() + 1,
        branch_p,
        branch_n,
        dout,
        events,
        config: cfg.clone(),
    })
}

fn derive_seed(base: u64, tag: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = base ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Oscillator phase split into an integer state count and a small
/// fractional phase, so precision does not decay over long runs.
struct Counter {
    osc: OscillatorState,
    base: i64,
    states: f64,
}

impl Counter {
    fn new(params: &OscillatorParams, dt: f64, seed: u64, start_states: f64) -> Self {
        let states = f64::from(params.states_per_cycle);
        let whole = start_states.floor();
        Self {
            osc: OscillatorState::with_noise(params, dt, seed, (start_states - whole) / states),
            base: whole as i64,
            states,
        }
    }

    #[inline]
    fn position(&self) -> f64 {
        self.states * self.osc.theta
    }

    /// Phases never go negative, so truncation is the floor.
    #[inline]
    fn count(&self) -> i64 {
        self.base + self.position() as i64
    }

    fn rebase(&mut self) {
        let whole = self.osc.theta.floor();
        self.osc.theta -= whole;
        self.base += whole as i64 * self.states as i64;
    }
}

struct DcoStage {
    params: OscillatorParams,
    dac_volts: Vec<f64>,
    freq: Vec<TunedFrequency>,
    counter: Counter,
}

/// Subtractor input operating point `r/k - r*Ts/2` at rest rate `r`.
fn operating_point(rate: f64, gain: f64, ts: f64, modulus: i64) -> f64 {
    (rate / gain - rate * ts / 2.0).clamp(0.0, (modulus - 1) as f64)
}

struct BranchRun<'a> {
    cfg: &'a SimConfig,
    branch: Branch,
    sign: f64,
    scale: f64,
    injection: Injection<'a>,
    vco: Counter,
    stages: Vec<DcoStage>,
    /// Encoder output for each DCO state, taps wired mirrored.
    gray_of_state: Vec<u32>,
    extender: GrayExtender,
    sampler: Sampler,
}

impl<'a> BranchRun<'a> {
    fn new(
        cfg: &'a SimConfig,
        stages: &[DcoStageConfig],
        branch: Branch,
        injection: Injection<'a>,
    ) -> Result<Self> {
        let dt = cfg.dt();
        let modulus = 1i64 << cfg.word_bits;
        let tag = match branch {
            Branch::P => 0,
            Branch::N => 1 << 32,
        };
        let rest = cfg.stage1.rest_state_rate();
        // C_j starts at its operating point above the (zero) output count.
        let mut start = Vec::with_capacity(stages.len());
        for st in stages {
            start.push(operating_point(
                rest,
                st.effective_gain(),
                cfg.ts(),
                modulus,
            ));
        }
        let vco = Counter::new(&cfg.stage1, dt, derive_seed(cfg.seed, tag), start[0]);
        let n_stages = stages.len();
        let dco_stages = stages
            .iter()
            .enumerate()
            .map(|(i, st)| {
                let dac_volts = st.dac.transfer_table();
                let freq = dac_volts
                    .iter()
                    .map(|&v| instantaneous_frequency(&st.dco, v))
                    .collect();
                let initial = if i + 1 < n_stages { start[i + 1] } else { 0.0 };
                DcoStage {
                    params: st.dco.clone(),
                    dac_volts,
                    freq,
                    counter: Counter::new(
                        &st.dco,
                        dt,
                        derive_seed(cfg.seed, tag | (i as u64 + 1)),
                        initial,
                    ),
                }
            })
            .collect::<Vec<_>>();
        let last = &dco_stages[n_stages - 1];
        let taps = last.params.taps;
        let encoder = GrayEncoder::new(taps.trailing_zeros())?;
        let gray_of_state: Vec<u32> = (0..2 * i64::from(taps))
            .map(|s| encoder.encode(taps_at_state(s, taps, true).mirrored()))
            .collect();
        let extender = GrayExtender::new(
            DigitalWord::gray(gray_of_state[0], encoder.bits()),
            cfg.word_bits,
        )?;
        Ok(Self {
            cfg,
            branch,
            sign: if branch == Branch::P { 1.0 } else { -1.0 },
            scale: if cfg.pseudo_differential { 0.5 } else { 1.0 },
            injection,
            vco,
            stages: dco_stages,
            gray_of_state,
            extender,
            sampler: Sampler::new(cfg.sampler_model(derive_seed(cfg.seed, tag | 0xFFFF))),
        })
    }

    fn run<E: Excitation + ?Sized>(
        mut self,
        input: &E,
        n_samples: usize,
    ) -> Result<(BranchTrace, EventLog)> {
        let cfg = self.cfg;
        let k_steps = cfg.oversampling as usize;
        let bits = cfg.word_bits;
        let modulus = 1i64 << bits;
        let mask = modulus - 1;
        let half = 1i32 << (bits - 1);
        let dt = cfg.dt();
        let rate = cfg.engine_rate();
        let gain = self.sign * self.scale;
        let last = self.stages.len() - 1;
        let period_states = self.gray_of_state.len() as i64;
        let injected_dco = self.injection.dco_input;

        let mut trace = BranchTrace {
            y: Vec::with_capacity(n_samples),
            w: Vec::with_capacity(n_samples),
            v1: Vec::with_capacity(n_samples),
        };
        let mut log = EventLog::default();

        let mut xbuf = vec![0.0; CHUNK];
        let mut ibuf = vec![0.0; CHUNK];
        let mut chunk_pos = CHUNK;
        let mut step_abs: u64 = 0;

        let mut fd = FirstDifference::new(bits);
        let mut w_unb: i64 = 0;
        let mut w_hold: i64 = 0;
        let mut word = self.extender.output().value;
        let mut pre_word = word;
        let mut window: Vec<Transition> = Vec::with_capacity(8);
        let n_in = self.stages.len();
        let mut inputs = vec![0i64; n_in];
        let mut codes = vec![0usize; n_in];
        let mut period_start = vec![0i64; n_in];

        // The extra period only runs its first step, which samples the last edge.
        for period in 0..=n_samples {
            let steps = if period == n_samples { 1 } else { k_steps };
            let mut clamped = false;
            for k in 0..steps {
                if chunk_pos == CHUNK {
                    input.fill(step_abs, rate, &mut xbuf);
                    if let Some(stim) = injected_dco {
                        stim.fill(step_abs, rate, &mut ibuf);
                    }
                    chunk_pos = 0;
                }
                let x = gain * xbuf[chunk_pos];

                // Subtractor inputs: the VCO count, then each upstream DCO count.
                inputs[0] = self.vco.count();
                for (slot, st) in inputs[1..n_in].iter_mut().zip(&self.stages) {
                    *slot = st.counter.count();
                }
                if k == 0 {
                    period_start.copy_from_slice(&inputs);
                }
                let mut out_of_range = false;
                for (code, &c) in codes.iter_mut().zip(&inputs) {
                    // Same bits as `mod_subtract` on B-bit binary words.
                    *code = ((c - w_hold) & mask) as usize;
                    out_of_range |= !(0..modulus).contains(&(c - w_unb));
                }
                log.out_of_range_steps += u64::from(out_of_range);

                let f1 = instantaneous_frequency(&cfg.stage1, x);
                clamped |= f1.clamped;
                self.vco.osc.advance(f1.hz, dt);

                let mut f_last = 0.0;
                for (j, stage) in self.stages.iter_mut().enumerate() {
                    let f = match injected_dco {
                        Some(_) if j == last => instantaneous_frequency(
                            &stage.params,
                            stage.dac_volts[codes[j]] + gain * ibuf[chunk_pos],
                        ),
                        _ => stage.freq[codes[j]],
                    };
                    clamped |= f.clamped;
                    if j == last {
                        f_last = f.hz;
                    } else {
                        stage.counter.osc.advance(f.hz, dt);
                    }
                }

                // Last DCO: every state change drives the Gray path. The
                // sampling window spans the last step before the edge and
                // the first one after it.
                let in_window = k == 0 || k == k_steps - 1;
                if k == k_steps - 1 {
                    window.clear();
                    pre_word = word;
                }
                let dco = &mut self.stages[last].counter;
                let p0 = dco.position();
                dco.osc.advance(f_last, dt);
                let p1 = dco.position();
                let first = p0 as i64 + 1;
                let end = p1 as i64;
                for m in first..=end {
                    let state = (dco.base + m).rem_euclid(period_states) as usize;
                    word = self.extender.push_raw(self.gray_of_state[state])?;
                    if in_window {
                        let frac = (m as f64 - p0) / (p1 - p0);
                        let offset = if k == 0 { 0.0 } else { -1.0 };
                        window.push(Transition {
                            time_s: (offset + frac) * dt,
                            word,
                        });
                    }
                }

                if k == 0 && period > 0 {
                    let edge = period as u64 - 1;
                    let traj = CounterTrajectory {
                        initial: pre_word,
                        width: bits,
                        encoding: Encoding::Gray,
                        transitions: &window,
                    };
                    let outcome = self.sampler.sample(&traj, 0.0);
                    if outcome.aperture_too_wide {
                        log.record(edge, self.branch, EventKind::Aperture);
                    }
                    let sampled = i64::from(gray_to_binary(outcome.word)?.value);
                    // Unbounded counterpart nearest the true DCO count.
                    let true_count = self.stages[last].counter.count();
                    let delta =
                        (sampled - true_count + modulus / 2).rem_euclid(modulus) - modulus / 2;
                    let d = self
                        .injection
                        .quantizer
                        .map_or(0, |q| i64::from(q[edge as usize]) * self.sign as i64);
                    w_unb = true_count + delta + d;
                    w_hold = (sampled + d) & mask;
                    let y = fd.push(w_hold as u32);
                    if !(0..half).contains(&y) {
                        log.record(edge, self.branch, EventKind::OutputRange);
                    }
                    trace.y.push(y);
                    trace.w.push(w_hold as u32);
                    trace.v1.push(codes[0] as u32);
                }

                chunk_pos += 1;
                step_abs += 1;
            }

            if steps == k_steps {
                let p = period as u64;
                if clamped {
                    log.record(p, self.branch, EventKind::Overload);
                }
                let ends = std::iter::once(self.vco.count())
                    .chain(self.stages[..last].iter().map(|st| st.counter.count()));
                let wraps = period_start
                    .iter()
                    .zip(ends)
                    .filter(|(s, e)| (*e >> bits) - (**s >> bits) >= 2)
                    .count();
                for _ in 0..wraps {
                    log.record(p, self.branch, EventKind::MultiWrap);
                }
                self.vco.rebase();
                for st in &mut self.stages {
                    st.counter.rebase();
                }
            }
        }
        log.total_steps = step_abs;
        Ok((trace, log))
    }
}
