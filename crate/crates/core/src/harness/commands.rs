use serde_json::{json, Value};

use super::output::{csv, num, Artifacts};
use super::{Experiment, Metrics, RunContext, Status};
use crate::error::Result;
use crate::experiments::{
    amplitude_sweep, cascade_stages, compare_architectures, decade_slope, fit_line,
    frequency_sweep, measure_ntf, run_tone, run_tone_with, snap_stimulus, ToneRun,
};
use crate::modulator::linear::{ntf_closed_form, ntf_from_blocks};
use crate::modulator::transfer::{ntf_magnitude_db, ntf_pole, stf_magnitude_db};
use crate::signal::Stimulus;
use crate::spectrum::{slope_fit_db_per_decade, SpectrumRecord};

pub(super) fn dispatch(ctx: &RunContext) -> Result<(Artifacts, Status)> {
    match ctx.experiment {
        Experiment::Run => run(ctx),
        Experiment::SweepAmp => sweep_amp(ctx),
        Experiment::SweepFreq => sweep_freq(ctx),
        Experiment::Ntf => ntf(ctx),
        Experiment::Stf => stf(ctx),
        Experiment::Compare => compare(ctx),
        Experiment::HigherOrder => higher_order(ctx),
    }
}

fn stimulus(ctx: &RunContext, nfft: usize) -> Stimulus {
    if ctx.cfg.coherent {
        snap_stimulus(&ctx.cfg.stimulus, ctx.cfg.sim.fs_hz, nfft)
    } else {
        ctx.cfg.stimulus.clone()
    }
}

fn logspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..n).map(move |i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
}

fn spectrum_csv(ctx: &RunContext, spec: &SpectrumRecord) -> Vec<u8> {
    let rows = spec
        .freqs()
        .into_iter()
        .zip(spec.psd_db())
        .map(|(f, p)| vec![num(f), num(p)]);
    csv(&ctx.comment(), &["freq_hz", "psd_db"], rows)
}

fn metrics_json(m: &Metrics) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(m).expect("metrics serialize");
    s.push('\n');
    s.into_bytes()
}

fn insert(m: &mut Metrics, key: &str, v: Value) {
    m.details.insert(key.to_owned(), v);
}

/// Shared by `run` and `higher-order`.
fn tone_metrics(ctx: &RunContext, r: &ToneRun) -> Result<Metrics> {
    let mut m = ctx.metrics();
    if let Some(t) = r.metrics {
        m.sndr_dba = Some(t.sndr_db);
        m.snr_dba = Some(t.snr_db);
        m.thd_pct = Some(t.thd_pct);
        insert(&mut m, "f_sig_hz", json!(t.f_sig));
        insert(&mut m, "below_floor", json!(t.below_floor));
    }
    let [lo, hi] = ctx.cfg.slope_band_hz;
    m.slope_db_per_dec = Some(slope_fit_db_per_decade(&r.spectrum, lo, hi)?);
    m.lock = Some(r.lock);
    let cpv = ctx.cfg.sim.counts_per_volt();
    insert(&mut m, "inband_noise_db_counts", json!(r.inband_noise_db));
    insert(
        &mut m,
        "inband_noise_dbv",
        json!(r.inband_noise_db - 20.0 * cpv.log10()),
    );
    insert(&mut m, "slope_band_hz", json!(ctx.cfg.slope_band_hz));
    insert(&mut m, "order", json!(r.trace.order));
    Ok(m)
}

fn status_of(locked: bool) -> Status {
    if locked {
        Status::Ok
    } else {
        Status::Flagged
    }
}

fn run(ctx: &RunContext) -> Result<(Artifacts, Status)> {
    let cfg = &ctx.cfg;
    let stim = stimulus(ctx, cfg.measurement.nfft);
    let r = run_tone(&cfg.sim, &stim, cfg.dither, &cfg.measurement)?;
    let t = &r.trace;
    let rows = (0..t.len()).map(|n| {
        vec![
            n.to_string(),
            t.dout[n].to_string(),
            t.branch_p.w[n].to_string(),
            t.branch_n
                .as_ref()
                .map_or_else(String::new, |b| b.w[n].to_string()),
        ]
    });
    let mut a = Artifacts::default();
    a.add(
        "trace.csv",
        csv(&ctx.comment(), &["n", "dout", "wp", "wn"], rows),
    );
    a.add("spectrum.csv", spectrum_csv(ctx, &r.spectrum));
    a.add("metrics.json", metrics_json(&tone_metrics(ctx, &r)?));
    Ok((a, status_of(r.lock.locked)))
}

fn higher_order(ctx: &RunContext) -> Result<(Artifacts, Status)> {
    let cfg = &ctx.cfg;
    let stim = stimulus(ctx, cfg.measurement.nfft);
    let stages = cascade_stages(&cfg.higher_order.stage_gains_hz);
    let r = run_tone_with(&cfg.sim, &stages, &stim, cfg.dither, &cfg.measurement)?;
    let mut m = tone_metrics(ctx, &r)?;
    insert(
        &mut m,
        "stage_gains_hz",
        json!(cfg.higher_order.stage_gains_hz),
    );
    let mut a = Artifacts::default();
    a.add("spectrum.csv", spectrum_csv(ctx, &r.spectrum));
    a.add("metrics.json", metrics_json(&m));
    Ok((a, status_of(r.lock.locked)))
}

fn sweep_amp(ctx: &RunContext) -> Result<(Artifacts, Status)> {
    let cfg = &ctx.cfg;
    let s = &cfg.sweep_amp;
    let stim = stimulus(ctx, s.measurement.nfft);
    let sweep = amplitude_sweep(&cfg.sim, &stim, &s.levels_dbv, cfg.dither, &s.measurement)?;
    let rows = sweep.points.iter().map(|p| {
        vec![
            num(p.level_dbv),
            num(p.snr_dba),
            num(p.sndr_dba),
            num(p.thd_pct),
            p.locked.to_string(),
        ]
    });
    let mut m = ctx.metrics();
    m.aop_dbv = sweep.aop_dbv;
    m.dr_db = sweep.dr_db;
    let peak = sweep
        .points
        .iter()
        .max_by(|a, b| a.sndr_dba.total_cmp(&b.sndr_dba));
    m.sndr_dba = peak.map(|p| p.sndr_dba);
    m.snr_dba = peak.map(|p| p.snr_dba);
    m.thd_pct = peak.map(|p| p.thd_pct);
    insert(&mut m, "peak_level_dbv", json!(peak.map(|p| p.level_dbv)));
    insert(&mut m, "snr_zero_dbv", json!(sweep.snr_zero_dbv));
    insert(&mut m, "dither_rms_v", json!(cfg.dither.rms_v));
    // Points beyond the overload point are expected to lose lock.
    let limit = sweep.aop_dbv.unwrap_or(f64::INFINITY);
    let healthy = sweep
        .points
        .iter()
        .filter(|p| p.level_dbv <= limit)
        .all(|p| p.locked);
    let mut a = Artifacts::default();
    a.add(
        "sweep_amp.csv",
        csv(
            &ctx.comment(),
            &["level_dbv", "snr_dba", "sndr_dba", "thd_pct", "locked"],
            rows,
        ),
    );
    a.add("metrics.json", metrics_json(&m));
    Ok((a, status_of(healthy)))
}

fn sweep_freq(ctx: &RunContext) -> Result<(Artifacts, Status)> {
    let cfg = &ctx.cfg;
    let s = &cfg.sweep_freq;
    let mut sim = cfg.sim.clone();
    if let Some(poly) = &s.dco_poly_nl {
        sim.stage2.dco.poly_nl = poly.clone();
    }
    let pts = frequency_sweep(&sim, s.level_dbv, &s.freqs_hz, cfg.dither, &s.measurement)?;
    let rows = pts
        .iter()
        .map(|p| vec![num(p.freq_hz), num(p.gain_db), num(p.h3_dbc)]);

    // Flatness and extrapolation use the points requested inside 1-20 kHz.
    let band: Vec<_> = s
        .freqs_hz
        .iter()
        .zip(&pts)
        .filter(|(f, _)| (1e3..=20e3).contains(*f))
        .map(|(_, p)| *p)
        .collect();
    let flatness = band
        .iter()
        .map(|p| p.gain_db)
        .fold(None, |acc: Option<(f64, f64)>, g| {
            Some(acc.map_or((g, g), |(lo, hi)| (lo.min(g), hi.max(g))))
        })
        .map(|(lo, hi)| hi - lo);
    let dc_fit = fit_line(
        &band
            .iter()
            .map(|p| (p.freq_hz * p.freq_hz, p.gain_db))
            .collect::<Vec<_>>(),
    )
    .map(|(_, c)| c);
    let h3_slope = decade_slope(
        &pts.iter()
            .map(|p| (p.freq_hz, p.h3_dbc))
            .collect::<Vec<_>>(),
    );

    let mut m = ctx.metrics();
    insert(&mut m, "gain_flatness_1k_20k_db", json!(flatness));
    insert(&mut m, "dc_gain_extrapolated_db", json!(dc_fit));
    insert(
        &mut m,
        "dc_gain_model_db",
        json!(stf_magnitude_db(sim.k_vco_eff(), sim.fs_hz, 0.0)),
    );
    insert(&mut m, "h3_slope_db_per_dec", json!(h3_slope));
    insert(&mut m, "level_dbv", json!(s.level_dbv));
    let locked = pts.iter().all(|p| p.locked);
    let mut a = Artifacts::default();
    a.add(
        "stf.csv",
        csv(&ctx.comment(), &["freq_hz", "gain_db", "h3_dbc"], rows),
    );
    a.add("metrics.json", metrics_json(&m));
    Ok((a, status_of(locked)))
}

fn ntf(ctx: &RunContext) -> Result<(Artifacts, Status)> {
    let cfg = &ctx.cfg;
    let sim = &cfg.sim;
    let k = sim.stage2.effective_gain();
    let rows = logspace(10.0, sim.fs_hz / 2.0, cfg.ntf.points)
        .map(|f| vec![num(f), num(ntf_magnitude_db(k, sim.fs_hz, f))]);
    let mut a = Artifacts::default();
    a.add("ntf.csv", csv(&ctx.comment(), &["freq_hz", "ntf_db"], rows));

    let pole = ntf_pole(k, sim.fs_hz);
    let mut m = ctx.metrics();
    insert(&mut m, "pole", json!(pole.location));
    insert(&mut m, "stable", json!(pole.stable));
    insert(
        &mut m,
        "symbolic_matches_closed_form",
        json!(ntf_from_blocks().equivalent(&ntf_closed_form())),
    );
    if cfg.ntf.measure {
        let n = &cfg.ntf;
        let pts = measure_ntf(sim, n.amplitude, n.nfft, n.n_avg, n.settle)?;
        let band = sim.fs_hz / 1000.0..=sim.fs_hz / 4.0;
        let worst = pts
            .iter()
            .filter(|p| band.contains(&p.freq_hz))
            .map(|p| (p.measured_db - p.closed_form_db).abs())
            .fold(0.0, f64::max);
        insert(&mut m, "max_deviation_db", json!(worst));
        let rows = pts
            .iter()
            .map(|p| vec![num(p.freq_hz), num(p.measured_db), num(p.closed_form_db)]);
        a.add(
            "ntf_measured.csv",
            csv(
                &ctx.comment(),
                &["freq_hz", "measured_db", "closed_form_db"],
                rows,
            ),
        );
    }
    a.add("metrics.json", metrics_json(&m));
    Ok((a, status_of(pole.stable)))
}

fn stf(ctx: &RunContext) -> Result<(Artifacts, Status)> {
    let sim = &ctx.cfg.sim;
    let k = sim.k_vco_eff();
    let rows = logspace(10.0, sim.fs_hz / 2.0, ctx.cfg.stf.points)
        .map(|f| vec![num(f), num(stf_magnitude_db(k, sim.fs_hz, f))]);
    let dc = stf_magnitude_db(k, sim.fs_hz, 0.0);
    let mut m = ctx.metrics();
    insert(&mut m, "dc_gain_db", json!(dc));
    insert(
        &mut m,
        "droop_20k_db",
        json!(stf_magnitude_db(k, sim.fs_hz, 20e3) - dc),
    );
    let mut a = Artifacts::default();
    a.add(
        "stf_model.csv",
        csv(&ctx.comment(), &["freq_hz", "gain_db"], rows),
    );
    a.add("metrics.json", metrics_json(&m));
    Ok((a, Status::Ok))
}

fn compare(ctx: &RunContext) -> Result<(Artifacts, Status)> {
    let cfg = &ctx.cfg;
    let stim = stimulus(ctx, cfg.measurement.nfft);
    let c = compare_architectures(&cfg.sim, &stim, &cfg.measurement, &cfg.compare)?;
    let rows = c
        .bands
        .iter()
        .map(|&(f, r, n)| vec![num(f), num(r), num(n), num(r - n)]);
    let mut m = ctx.metrics();
    insert(&mut m, "max_delta_db", json!(c.max_delta_db));
    insert(&mut m, "ideal_mismatches", json!(c.ideal_mismatches));
    insert(&mut m, "mode_mismatches", json!(c.mode_mismatches));
    insert(&mut m, "nested_multi_wrap", json!(c.nested_multi_wrap));
    insert(
        &mut m,
        "nested_out_of_range_steps",
        json!(c.nested_out_of_range_steps),
    );
    let mut a = Artifacts::default();
    a.add("spectrum_reference.csv", spectrum_csv(ctx, &c.reference));
    a.add("spectrum_nested.csv", spectrum_csv(ctx, &c.nested));
    a.add(
        "compare.csv",
        csv(
            &ctx.comment(),
            &["band_hz", "reference_db", "nested_db", "delta_db"],
            rows,
        ),
    );
    a.add("metrics.json", metrics_json(&m));
    let clean = c.nested_multi_wrap == 0 && c.nested_out_of_range_steps == 0;
    Ok((a, status_of(clean)))
}
