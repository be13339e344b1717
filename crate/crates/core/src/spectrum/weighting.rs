use serde::{Deserialize, Serialize};

fn r_a(f: f64) -> f64 {
    let f2 = f * f;
    let (p1, p2, p3, p4) = (
        20.6f64.powi(2),
        107.7f64.powi(2),
        737.9f64.powi(2),
        12194f64.powi(2),
    );
    p4 * f2 * f2 / ((f2 + p1) * ((f2 + p2) * (f2 + p3)).sqrt() * (f2 + p4))
}

/// A-weighting in dB, normalized to exactly 0 dB at 1 kHz.
pub fn a_weight_db(f: f64) -> f64 {
    if f <= 0.0 {
        return f64::NEG_INFINITY;
    }
    20.0 * (r_a(f) / r_a(1000.0)).log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Flat,
    #[default]
    A,
}

impl Weighting {
    /// Power gain at `f`.
    pub fn power_gain(self, f: f64) -> f64 {
        match self {
            Weighting::Flat => 1.0,
            Weighting::A => 10f64.powf(a_weight_db(f) / 10.0),
        }
    }
}
