//! Phase-accumulator oscillator models.
//!
//! Oscillators are integrators: their phase (in cycles) is the running
//! integral of the instantaneous frequency. Counters downstream see
//! `floor(S * theta)` where `S` is the number of distinguishable states per
//! oscillation period.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::digital::DigitalWord;
use crate::error::{Error, Result};

/// Lowest frequency an oscillator may run at; requests below are clamped.
pub const MIN_FREQUENCY_HZ: f64 = 1.0;

/// Number of one-pole sections used to synthesize 1/f frequency noise.
const FLICKER_POLES: usize = 6;
/// Pole spacing of the flicker synthesizer (one decade).
const FLICKER_POLE_RATIO: f64 = 10.0;
/// Level correction for decade-spaced Lorentzians summed into a 1/f slope.
const FLICKER_GAIN: f64 = 1.6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseParams {
    /// One-sided PSD of white fractional-frequency noise (1/Hz). Zero disables.
    pub white_frac_density: f64,
    /// Frequency at which the 1/f component equals the white floor. Zero disables.
    pub flicker_corner_hz: f64,
}

impl NoiseParams {
    pub fn is_enabled(&self) -> bool {
        self.white_frac_density > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    /// Rest frequency at zero control voltage.
    pub f0_hz: f64,
    /// Tuning gain in Hz per volt.
    pub k_tune: f64,
    /// Counter-visible states per oscillation period.
    pub states_per_cycle: u32,
    /// Tuning-curve terms beyond linear: `poly_nl[i]` multiplies `v^(i+2)`
    /// and is expressed in V^-(i+1), so the curve reads
    /// `f0 + k_tune * (v + sum poly_nl[i] v^(i+2))`.
    #[serde(default)]
    pub poly_nl: Vec<f64>,
    #[serde(default)]
    pub noise: NoiseParams,
    /// Physical output phases.
    pub taps: u32,
}

impl OscillatorParams {
    /// Input VCO: 21-stage ring at 6 MHz with 7 equidistant phases combined,
    /// i.e. 42 MHz effective rate at rest.
    pub fn input_vco() -> Self {
        Self {
            f0_hz: 6.0e6,
            k_tune: 6.0e6,
            states_per_cycle: 7,
            poly_nl: Vec::new(),
            noise: NoiseParams::default(),
            taps: 7,
        }
    }

    /// DCO whose effective state rate is `k_eff_per_lsb * code` when driven by
    /// a mid-scale referenced DAC with `v_lsb` volts per code.
    pub fn dco_for_gain(k_eff_per_lsb: f64, taps: u32, dac_bits: u32, v_lsb: f64) -> Self {
        let states = 2 * taps;
        Self {
            f0_hz: k_eff_per_lsb * f64::from(1u32 << (dac_bits - 1)) / f64::from(states),
            k_tune: k_eff_per_lsb / (f64::from(states) * v_lsb),
            states_per_cycle: states,
            poly_nl: Vec::new(),
            noise: NoiseParams::default(),
            taps,
        }
    }

    /// Effective state rate (states per second) at rest.
    pub fn rest_state_rate(&self) -> f64 {
        self.f0_hz * f64::from(self.states_per_cycle)
    }

    pub fn validate(&self, feeds_gray_counter: bool) -> Result<()> {
        if !(self.f0_hz.is_finite() && self.f0_hz > 0.0) {
            return Err(Error::config(format!(
                "f0 must be positive, got {}",
                self.f0_hz
            )));
        }
        if !self.k_tune.is_finite() {
            return Err(Error::config("k_tune must be finite"));
        }
        if self.states_per_cycle == 0 {
            return Err(Error::config("states_per_cycle must be >= 1"));
        }
        if feeds_gray_counter && !self.states_per_cycle.is_power_of_two() {
            return Err(Error::config(format!(
                "a Gray-counted oscillator needs a power-of-two state count, got {}",
                self.states_per_cycle
            )));
        }
        if self.poly_nl.iter().any(|c| !c.is_finite()) {
            return Err(Error::config("poly_nl coefficients must be finite"));
        }
        let n = self.noise;
        if !(n.white_frac_density >= 0.0 && n.flicker_corner_hz >= 0.0) {
            return Err(Error::config("noise parameters must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunedFrequency {
    pub hz: f64,
    /// The tuning curve asked for a frequency below [`MIN_FREQUENCY_HZ`].
    pub clamped: bool,
}

/// Evaluates the tuning curve at `v_ctrl`.
#[inline]
pub fn instantaneous_frequency(params: &OscillatorParams, v_ctrl: f64) -> TunedFrequency {
    let mut excess = v_ctrl;
    if !params.poly_nl.is_empty() {
        let mut power = v_ctrl;
        for c in &params.poly_nl {
            power *= v_ctrl;
            excess += c * power;
        }
    }
    let hz = params.f0_hz + params.k_tune * excess;
    if hz < MIN_FREQUENCY_HZ {
        TunedFrequency {
            hz: MIN_FREQUENCY_HZ,
            clamped: true,
        }
    } else {
        TunedFrequency { hz, clamped: false }
    }
}

/// Seeded noise generator shared by the white and flicker components.
#[derive(Debug, Clone)]
struct PhaseNoise {
    rng: ChaCha8Rng,
    white_hz2: f64,
    /// (pole coefficient, drive std-dev, state) per Lorentzian section.
    flicker: Vec<(f64, f64, f64)>,
    dt: f64,
    white_sigma: f64,
}

impl PhaseNoise {
    fn new(params: &OscillatorParams, dt: f64, seed: u64) -> Self {
        let NoiseParams {
            white_frac_density,
            flicker_corner_hz,
        } = params.noise;
        let white_hz2 = params.f0_hz * params.f0_hz * white_frac_density;
        let mut flicker = Vec::new();
        if flicker_corner_hz > 0.0 && white_hz2 > 0.0 {
            for i in 0..FLICKER_POLES {
                let pole = flicker_corner_hz / FLICKER_POLE_RATIO.powi(i as i32);
                // Lorentzian A/(1+(f/p)^2) with A = gain * S_white * fc / p.
                let level = FLICKER_GAIN * white_hz2 * flicker_corner_hz / pole;
                let variance = level * pole * std::f64::consts::FRAC_PI_2;
                let rho = (-std::f64::consts::TAU * pole * dt).exp();
                flicker.push((rho, (variance * (1.0 - rho * rho)).sqrt(), 0.0));
            }
        }
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            white_hz2,
            flicker,
            dt,
            // Phase random walk: var(theta(t)) = S_f * t / 2.
            white_sigma: (white_hz2 * dt / 2.0).sqrt(),
        }
    }

    #[inline]
    fn phase_increment(&mut self) -> f64 {
        let mut d = 0.0;
        if self.white_hz2 > 0.0 {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            d += self.white_sigma * z;
        }
        if !self.flicker.is_empty() {
            let mut freq = 0.0;
            for (rho, sigma, state) in &mut self.flicker {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                *state = *rho * *state + *sigma * z;
                freq += *state;
            }
            d += freq * self.dt;
        }
        d
    }
}

/// Running phase of one oscillator.
#[derive(Debug, Clone)]
pub struct OscillatorState {
    /// Phase in cycles; never decreases.
    pub theta: f64,
    pub last_freq_hz: f64,
    noise: Option<PhaseNoise>,
}

impl OscillatorState {
    /// Noise-free oscillator starting at `theta`.
    pub fn new(theta: f64) -> Self {
        Self {
            theta,
            last_freq_hz: 0.0,
            noise: None,
        }
    }

    /// Oscillator with the frequency noise described by `params`, for a fixed
    /// step `dt`. Deterministic for a given seed.
    pub fn with_noise(params: &OscillatorParams, dt: f64, seed: u64, theta: f64) -> Self {
        let noise = params
            .noise
            .is_enabled()
            .then(|| PhaseNoise::new(params, dt, seed));
        Self {
            theta,
            last_freq_hz: 0.0,
            noise,
        }
    }

    /// Integrates `f_inst` over `dt`. Noise increments are clipped so the
    /// phase stays monotone.
    #[inline]
    pub fn advance(&mut self, f_inst: f64, dt: f64) {
        let mut step = f_inst * dt;
        if let Some(noise) = &mut self.noise {
            step = (step + noise.phase_increment()).max(0.0);
        }
        self.theta += step;
        self.last_freq_hz = f_inst;
    }
}

/// Free-function form of [`OscillatorState::advance`].
pub fn advance(state: &mut OscillatorState, f_inst: f64, dt: f64) {
    state.advance(f_inst, dt);
}

/// Counter value `floor(S * theta) mod 2^B`.
#[inline]
pub fn counter_view(theta: f64, states_per_cycle: u32, width_bits: u32) -> DigitalWord {
    let count = (f64::from(states_per_cycle) * theta).floor() as i64;
    DigitalWord::binary(count.rem_euclid(1i64 << width_bits) as u32, width_bits)
}

/// Logic levels of the ring-oscillator taps, bit `k` = tap `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Taps {
    pub bits: u64,
    pub len: u32,
}

impl Taps {
    #[inline]
    pub fn get(&self, k: u32) -> bool {
        self.bits >> k & 1 == 1
    }

    pub fn to_vec(&self) -> Vec<bool> {
        (0..self.len).map(|k| self.get(k)).collect()
    }

    pub fn from_bools(levels: &[bool]) -> Self {
        let bits = levels
            .iter()
            .enumerate()
            .fold(0u64, |acc, (k, &b)| acc | (u64::from(b) << k));
        Self {
            bits,
            len: levels.len() as u32,
        }
    }

    /// Re-wires the taps so that encoder input `k` sees the physical phase
    /// delayed by `-k` steps (`phi'_0 = phi_0`, `phi'_k = !phi_{M-k}`).
    /// With this wiring the Gray encoder counts up as the ring advances.
    pub fn mirrored(&self) -> Self {
        let m = self.len;
        let mut bits = self.bits & 1;
        for k in 1..m {
            if !self.get(m - k) {
                bits |= 1 << k;
            }
        }
        Self { bits, len: m }
    }
}

/// Tap levels for a ring at phase `theta` (cycles).
///
/// A differential ring of `M` cells has `2M` states per period; with state
/// index `s = floor(2M * theta)`, tap `k` is high iff `(s - k) mod 2M < M`.
/// A single-ended ring of `M` inverters inverts every other node.
pub fn tap_waveforms(theta: f64, taps: u32, differential: bool) -> Result<Taps> {
    if !(2..=64).contains(&taps) {
        return Err(Error::config(format!("tap count {taps} outside 2..=64")));
    }
    let period = 2 * i64::from(taps);
    let state = ((period as f64) * theta).floor() as i64;
    Ok(taps_at_state(state, taps, differential))
}

#[inline]
pub(crate) fn taps_at_state(state: i64, taps: u32, differential: bool) -> Taps {
    let period = 2 * i64::from(taps);
    let mut bits = 0u64;
    for k in 0..taps {
        let mut high = (state - i64::from(k)).rem_euclid(period) < i64::from(taps);
        if !differential && k % 2 == 1 {
            high = !high;
        }
        if high {
            bits |= 1 << k;
        }
    }
    Taps { bits, len: taps }
}

/// Binary-weighted (R-2R) DAC with per-bit weight mismatch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DacModel {
    pub n_bits: u32,
    /// Nominal volts per LSB.
    pub v_lsb: f64,
    /// Relative error of each bit weight, LSB first. Missing entries are zero.
    #[serde(default)]
    pub bit_weight_error: Vec<f64>,
    pub offset_v: f64,
}

impl DacModel {
    /// Ideal DAC referenced to mid-scale: code `2^(n-1)` maps to 0 V.
    pub fn mid_scale(n_bits: u32, v_lsb: f64) -> Self {
        Self {
            n_bits,
            v_lsb,
            bit_weight_error: Vec::new(),
            offset_v: -f64::from(1u32 << (n_bits - 1)) * v_lsb,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=16).contains(&self.n_bits) {
            return Err(Error::config(format!(
                "DAC width {} outside 1..=16",
                self.n_bits
            )));
        }
        if self.bit_weight_error.len() > self.n_bits as usize {
            return Err(Error::config("more bit-weight errors than DAC bits"));
        }
        if !(self.v_lsb.is_finite() && self.offset_v.is_finite()) {
            return Err(Error::config("DAC voltages must be finite"));
        }
        Ok(())
    }

    pub fn output(&self, code: u32) -> Result<f64> {
        if u64::from(code) >= 1u64 << self.n_bits {
            return Err(Error::logic(format!(
                "DAC code {code} exceeds {} bits",
                self.n_bits
            )));
        }
        let mut v = self.offset_v;
        for b in 0..self.n_bits {
            if code >> b & 1 == 1 {
                let err = self
                    .bit_weight_error
                    .get(b as usize)
                    .copied()
                    .unwrap_or(0.0);
                v += f64::from(1u32 << b) * self.v_lsb * (1.0 + err);
            }
        }
        Ok(v)
    }

    /// Output voltage for every code, indexed by code.
    pub fn transfer_table(&self) -> Vec<f64> {
        (0..1u32 << self.n_bits)
            .map(|c| self.output(c).expect("code in range"))
            .collect()
    }
}

/// Analog output for a binary word; the word must fit the DAC.
pub fn dac_output(model: &DacModel, code: DigitalWord) -> Result<f64> {
    code.expect_binary()?;
    model.output(code.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rest_frequency_and_effective_rate() {
        let vco = OscillatorParams::input_vco();
        let f = instantaneous_frequency(&vco, 0.0);
        assert_eq!(f.hz, 6.0e6);
        assert!(!f.clamped);
        assert_eq!(vco.rest_state_rate(), 42.0e6);
    }

    #[test]
    fn linear_tuning() {
        let p = OscillatorParams {
            k_tune: 1e6,
            ..OscillatorParams::input_vco()
        };
        assert_eq!(instantaneous_frequency(&p, 1.0).hz, 7.0e6);
    }

    #[test]
    fn clamp_is_flagged() {
        let p = OscillatorParams::input_vco();
        let f = instantaneous_frequency(&p, -5.0);
        assert!(f.clamped);
        assert_eq!(f.hz, MIN_FREQUENCY_HZ);
    }

    #[test]
    fn cubic_term_applies() {
        let p = OscillatorParams {
            f0_hz: 1e6,
            k_tune: 1e6,
            poly_nl: vec![0.0, 0.5],
            ..OscillatorParams::input_vco()
        };
        // f0 + k (v + 0.5 v^3) at v = 0.2
        let want = 1e6 + 1e6 * (0.2 + 0.5 * 0.008);
        assert!((instantaneous_frequency(&p, 0.2).hz - want).abs() < 1e-6);
    }

    #[test]
    fn one_cycle_per_sample_period() {
        let fs = 3.072e6;
        let mut s = OscillatorState::new(0.0);
        s.advance(fs, 1.0 / fs);
        assert!((s.theta - 1.0).abs() < 1e-15);
    }

    #[test]
    fn noiseless_accumulation_is_exact() {
        let (f, dt, n) = (6.0e6, 1.0 / 1.572_864e9, 100_000);
        let mut s = OscillatorState::new(0.0);
        for _ in 0..n {
            s.advance(f, dt);
        }
        let want = n as f64 * f * dt;
        assert!(((s.theta - want) / want).abs() < 1e-12);
    }

    #[test]
    fn white_noise_phase_variance_grows_linearly() {
        let params = OscillatorParams {
            noise: NoiseParams {
                white_frac_density: 1e-9,
                flicker_corner_hz: 0.0,
            },
            ..OscillatorParams::input_vco()
        };
        let dt = 1e-8;
        let (checkpoints, seeds) = ([250usize, 500, 1000], 1000u64);
        let mut sums = [0.0f64; 3];
        let mut sq = [0.0f64; 3];
        for seed in 0..seeds {
            let mut s = OscillatorState::with_noise(&params, dt, seed, 0.0);
            let mut step = 0;
            for (i, &cp) in checkpoints.iter().enumerate() {
                while step < cp {
                    s.advance(params.f0_hz, dt);
                    step += 1;
                }
                let dev = s.theta - params.f0_hz * dt * cp as f64;
                sums[i] += dev;
                sq[i] += dev * dev;
            }
        }
        let var: Vec<f64> = (0..3)
            .map(|i| sq[i] / seeds as f64 - (sums[i] / seeds as f64).powi(2))
            .collect();
        // S_f = f0^2 h0, var = S_f t / 2
        for (i, &cp) in checkpoints.iter().enumerate() {
            let t = cp as f64 * dt;
            let want = params.f0_hz.powi(2) * 1e-9 * t / 2.0;
            let rel = var[i] / want;
            assert!((0.85..1.15).contains(&rel), "checkpoint {cp}: ratio {rel}");
        }
        let ratio = var[2] / var[0];
        assert!((3.4..4.6).contains(&ratio), "variance ratio {ratio}");
    }

    #[test]
    fn noise_is_seed_deterministic() {
        let params = OscillatorParams {
            noise: NoiseParams {
                white_frac_density: 1e-10,
                flicker_corner_hz: 1e4,
            },
            ..OscillatorParams::input_vco()
        };
        let run = |seed| {
            let mut s = OscillatorState::with_noise(&params, 1e-9, seed, 0.0);
            for _ in 0..1000 {
                s.advance(6e6, 1e-9);
            }
            s.theta
        };
        assert_eq!(run(7).to_bits(), run(7).to_bits());
        assert_ne!(run(7).to_bits(), run(8).to_bits());
    }

    #[test]
    fn counter_view_examples() {
        assert_eq!(counter_view(0.0, 32, 6).value, 0);
        assert_eq!(counter_view(1.0, 32, 6).value, 32);
        assert_eq!(counter_view(2.5, 32, 6).value, 16);
    }

    #[test]
    fn tap_waveform_examples() {
        let t0 = tap_waveforms(0.0, 16, true).unwrap();
        let mut want = vec![false; 16];
        want[0] = true;
        assert_eq!(t0.to_vec(), want);

        let t16 = tap_waveforms(16.0 / 32.0, 16, true).unwrap();
        assert_eq!(t16.bits, !t0.bits & 0xFFFF);
    }

    #[test]
    fn consecutive_states_flip_one_tap() {
        for differential in [true, false] {
            let m = if differential { 16 } else { 7 };
            for s in 0..(4 * m as i64) {
                let a = taps_at_state(s, m, differential);
                let b = taps_at_state(s + 1, m, differential);
                assert_eq!((a.bits ^ b.bits).count_ones(), 1, "state {s}");
            }
        }
    }

    #[test]
    fn mirrored_wiring_round_trip() {
        for s in 0..32 {
            let t = taps_at_state(s, 16, true);
            // psi_{-k}: mirrored tap k is high iff (s + k) mod 32 < 16.
            let m = t.mirrored();
            for k in 0..16 {
                assert_eq!(m.get(k), (s + i64::from(k)).rem_euclid(32) < 16);
            }
        }
    }

    #[test]
    fn dac_examples() {
        let dac = DacModel {
            n_bits: 6,
            v_lsb: 0.01,
            bit_weight_error: Vec::new(),
            offset_v: 0.1,
        };
        assert_eq!(dac.output(0).unwrap(), 0.1);
        assert!((dac.output(63).unwrap() - 0.73).abs() < 1e-12);
        assert!(dac.output(64).is_err());
        assert!(dac_output(&dac, DigitalWord::binary(3, 6)).is_ok());
        assert!(dac_output(&dac, DigitalWord::gray(3, 6)).is_err());
    }

    #[test]
    fn msb_mismatch_inl_step() {
        let dac = DacModel {
            n_bits: 6,
            v_lsb: 0.01,
            bit_weight_error: vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.01],
            offset_v: 0.0,
        };
        let inl: Vec<f64> = (0..64)
            .map(|c| dac.output(c).unwrap() / dac.v_lsb - f64::from(c))
            .collect();
        assert!((inl[32] - inl[31] - 0.32).abs() < 1e-9);
        assert!(inl[..32].iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn mid_scale_dco_mapping() {
        // 1.2 MHz per LSB effective, 16-tap differential ring, 6-bit DAC.
        let dac = DacModel::mid_scale(6, 1.0 / 64.0);
        let dco = OscillatorParams::dco_for_gain(1.2e6, 16, 6, dac.v_lsb);
        assert!((dco.f0_hz - 1.2e6).abs() < 1e-6);
        for code in [0u32, 1, 35, 63] {
            let f = instantaneous_frequency(&dco, dac.output(code).unwrap()).hz;
            let rate = f * f64::from(dco.states_per_cycle);
            assert!((rate - 1.2e6 * f64::from(code)).abs() < 1e-3 || code == 0);
        }
    }

    proptest! {
        #[test]
        fn small_mismatch_keeps_dac_monotone(errs in prop::collection::vec(-0.0156f64..0.0156, 6)) {
            let dac = DacModel { n_bits: 6, v_lsb: 1.0, bit_weight_error: errs, offset_v: 0.0 };
            let table = dac.transfer_table();
            for pair in table.windows(2) {
                prop_assert!(pair[1] > pair[0]);
            }
        }

        #[test]
        fn counter_rate_tracks_frequency(f in 1e6f64..9e7, v in 0.0f64..1.0) {
            // Counter increments over a constant-frequency interval.
            let p = OscillatorParams { k_tune: 0.0, f0_hz: f, ..OscillatorParams::input_vco() };
            let f_inst = instantaneous_frequency(&p, v).hz;
            let (dt, steps) = (1e-9, 20_000);
            let mut s = OscillatorState::new(0.0);
            let start = (7.0 * s.theta).floor();
            for _ in 0..steps { s.advance(f_inst, dt); }
            let counted = (7.0 * s.theta).floor() - start;
            let exact = 7.0 * f_inst * dt * steps as f64;
            prop_assert!((counted - exact).abs() <= 1.0);
        }
    }
}
