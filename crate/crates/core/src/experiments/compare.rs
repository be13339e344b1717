use serde::{Deserialize, Serialize};

use super::Measurement;
use crate::error::Result;
use crate::modulator::reference::{
    simulate_nested, simulate_reference_ctsdm, FirstIntegrator, LoopInput, NestedOptions,
    ReferenceOptions,
};
use crate::modulator::SimConfig;
use crate::signal::Stimulus;
use crate::spectrum::{band_average_db, max_band_delta_db, SpectrumRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComparisonOptions {
    /// First integrator of the nested loop in the spectral comparison.
    pub mode: FirstIntegrator,
    pub reference_initial: [f64; 2],
    pub nested_initial: [f64; 2],
    pub f_lo: f64,
    /// Upper band edge; `None` means fs/4.
    pub f_hi: Option<f64>,
    pub bands_per_octave: f64,
    pub min_bins: usize,
}

impl Default for ComparisonOptions {
    fn default() -> Self {
        Self {
            mode: FirstIntegrator::Continuous,
            reference_initial: [0.0, 0.0],
            nested_initial: [0.5, 0.25],
            f_lo: 20.0,
            f_hi: None,
            bands_per_octave: 3.0,
            min_bins: 32,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub reference: SpectrumRecord,
    pub nested: SpectrumRecord,
    /// `(centre_hz, reference_db, nested_db)` per band.
    pub bands: Vec<(f64, f64, f64)>,
    pub max_delta_db: f64,
    /// Samples that differ between the reference and an ideal nested loop
    /// started from the same state.
    pub ideal_mismatches: usize,
    /// In `Modulo` mode, samples where the nested loop differs from the
    /// unbounded integer counter started from the same state.
    pub mode_mismatches: Option<usize>,
    pub nested_multi_wrap: u64,
    pub nested_out_of_range_steps: u64,
}

fn mismatches(a: &[i64], b: &[i64]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

fn to_f64(y: &[i64]) -> Vec<f64> {
    y.iter().map(|&v| v as f64).collect()
}

/// Runs the continuous reference loop and the nested loop on the same
/// stimulus and compares their averaged spectra band by band.
pub fn compare_architectures(
    cfg: &SimConfig,
    stim: &Stimulus,
    meas: &Measurement,
    opts: &ComparisonOptions,
) -> Result<Comparison> {
    meas.validate()?;
    let n = meas.n_samples();
    let input = LoopInput::from_config(cfg);
    let reference = simulate_reference_ctsdm(
        cfg,
        stim,
        n,
        &ReferenceOptions {
            input,
            initial: opts.reference_initial,
        },
    )?;
    let nested_with = |mode, initial| {
        simulate_nested(
            cfg,
            stim,
            n,
            &NestedOptions {
                mode,
                input,
                initial,
            },
        )
    };
    let nested = nested_with(opts.mode, opts.nested_initial)?;

    let ideal = nested_with(FirstIntegrator::Continuous, opts.reference_initial)?;
    let mode_mismatches = match opts.mode {
        FirstIntegrator::Modulo { .. } => {
            let same_start = nested_with(opts.mode, opts.reference_initial)?;
            let unbounded = nested_with(FirstIntegrator::Counter, opts.reference_initial)?;
            Some(mismatches(&unbounded.y, &same_start.y))
        }
        _ => None,
    };

    let ref_spec = meas.spectrum(cfg.fs_hz, &to_f64(&reference.y))?;
    let nest_spec = meas.spectrum(cfg.fs_hz, &to_f64(&nested.y))?;
    let f_hi = opts.f_hi.unwrap_or(cfg.fs_hz / 4.0);
    let max_delta_db = max_band_delta_db(
        &ref_spec,
        &nest_spec,
        opts.f_lo,
        f_hi,
        opts.bands_per_octave,
        opts.min_bins,
    )?;
    let ra = band_average_db(
        &ref_spec,
        opts.f_lo,
        f_hi,
        opts.bands_per_octave,
        opts.min_bins,
    );
    let na = band_average_db(
        &nest_spec,
        opts.f_lo,
        f_hi,
        opts.bands_per_octave,
        opts.min_bins,
    );
    let bands = ra.iter().zip(&na).map(|(r, n)| (r.0, r.1, n.1)).collect();
    Ok(Comparison {
        reference: ref_spec,
        nested: nest_spec,
        bands,
        max_delta_db,
        ideal_mismatches: mismatches(&reference.y, &ideal.y),
        mode_mismatches,
        nested_multi_wrap: nested.multi_wrap,
        nested_out_of_range_steps: nested.out_of_range_steps,
    })
}
