//! Complete modulators built from oscillators and digital logic.
//!
//! [`simulate_proposed`] runs the oscillator-only second-order loop;
//! [`simulate_higher_order`] cascades further DCO stages. The continuous
//! reference loop and its nested rearrangement live in [`reference`],
//! closed-form transfer functions in [`transfer`], and the symbolic linear
//! model in [`linear`].

mod config;
mod engine;
pub mod linear;
pub mod reference;
pub mod transfer;

pub use config::{DcoStageConfig, SamplerSettings, SimConfig, MAX_STATES_PER_STEP};
pub use engine::{simulate_higher_order, simulate_proposed, simulate_with, Injection};

use serde::{Deserialize, Serialize};

/// Events kept with their timestamps; later ones are only counted.
pub const MAX_LOGGED_EVENTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    P,
    N,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    /// An oscillator was asked for a non-positive frequency (per period).
    Overload,
    /// A counter wrapped more than once in one sampling period.
    MultiWrap,
    /// More than one Gray transition fell inside the sampling aperture.
    Aperture,
    /// Per-branch output left its nominal range `[0, 2^(B-1))`.
    OutputRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub sample: u64,
    pub branch: Branch,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub overload: u64,
    pub multi_wrap: u64,
    pub aperture: u64,
    pub output_range: u64,
    /// Engine steps where some subtractor input differed from its unbounded
    /// value, i.e. the modulo difference left `[0, 2^B)`.
    pub out_of_range_steps: u64,
    pub total_steps: u64,
    pub first: Vec<Event>,
}

impl EventLog {
    pub(crate) fn record(&mut self, sample: u64, branch: Branch, kind: EventKind) {
        let counter = match kind {
            EventKind::Overload => &mut self.overload,
            EventKind::MultiWrap => &mut self.multi_wrap,
            EventKind::Aperture => &mut self.aperture,
            EventKind::OutputRange => &mut self.output_range,
        };
        *counter += 1;
        if self.first.len() < MAX_LOGGED_EVENTS {
            self.first.push(Event {
                sample,
                branch,
                kind,
            });
        }
    }

    pub(crate) fn merge(&mut self, other: EventLog) {
        self.overload += other.overload;
        self.multi_wrap += other.multi_wrap;
        self.aperture += other.aperture;
        self.output_range += other.output_range;
        self.out_of_range_steps += other.out_of_range_steps;
        self.total_steps += other.total_steps;
        self.first.extend(other.first);
        self.first.sort_by_key(|e| e.sample);
        self.first.truncate(MAX_LOGGED_EVENTS);
    }
}

/// Per-branch samples and probes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BranchTrace {
    /// Signed first difference of the sampled word.
    pub y: Vec<i32>,
    /// Sampled last-stage count, binary.
    pub w: Vec<u32>,
    /// First subtractor output at each sampling instant.
    pub v1: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct ModulatorTrace {
    pub order: usize,
    pub branch_p: BranchTrace,
    /// Present for pseudo-differential runs.
    pub branch_n: Option<BranchTrace>,
    /// `y_p - y_n`, or `y_p` single-ended.
    pub dout: Vec<i32>,
    pub events: EventLog,
    pub config: SimConfig,
}

impl ModulatorTrace {
    pub fn len(&self) -> usize {
        self.dout.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dout.is_empty()
    }

    pub fn dout_f64(&self) -> Vec<f64> {
        self.dout.iter().map(|&v| f64::from(v)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockReport {
    pub locked: bool,
    pub overload_events: u64,
    pub multi_wrap_events: u64,
    /// Fraction of engine steps with a subtractor out of range.
    pub dwell_fraction: f64,
    pub aperture_events: u64,
    pub output_range_events: u64,
}

/// Summarizes whether the loop tracked its input throughout the run.
pub fn lock_check(trace: &ModulatorTrace) -> LockReport {
    let ev = &trace.events;
    let dwell_fraction = if ev.total_steps == 0 {
        0.0
    } else {
        ev.out_of_range_steps as f64 / ev.total_steps as f64
    };
    LockReport {
        locked: ev.overload == 0 && ev.multi_wrap == 0 && ev.out_of_range_steps == 0,
        overload_events: ev.overload,
        multi_wrap_events: ev.multi_wrap,
        dwell_fraction,
        aperture_events: ev.aperture,
        output_range_events: ev.output_range,
    }
}
