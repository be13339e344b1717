//! Closed-form loop transfer functions.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

/// Magnitudes below this are reported as this many dB.
pub const DB_FLOOR: f64 = -300.0;

pub fn to_db(mag: f64) -> f64 {
    if mag > 0.0 {
        (20.0 * mag.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pole {
    /// Real-axis location `1 - k/fs`.
    pub location: f64,
    pub stable: bool,
}

pub fn ntf_pole(k_dco_eff: f64, fs: f64) -> Pole {
    let ratio = k_dco_eff / fs;
    Pole {
        location: 1.0 - ratio,
        stable: ratio > 0.0 && ratio < 2.0,
    }
}

/// `(1 - z^-1)^2 / (1 - (1 - k/fs) z^-1)` at `z = exp(j 2 pi f/fs)`.
pub fn ntf_response(k_dco_eff: f64, fs: f64, f: f64) -> Complex64 {
    let zinv = Complex64::from_polar(1.0, -2.0 * PI * f / fs);
    let one = Complex64::new(1.0, 0.0);
    let zero = one - zinv;
    zero * zero / (one - ntf_pole(k_dco_eff, fs).location * zinv)
}

/// NTF magnitude in dB. Check [`ntf_pole`] for stability; the expression is
/// evaluated regardless.
pub fn ntf_magnitude_db(k_dco_eff: f64, fs: f64, f: f64) -> f64 {
    to_db(ntf_response(k_dco_eff, fs, f).norm())
}

/// `sin(pi x) / (pi x)`, 1 at 0.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// `|k_vco/fs * sinc^2(f/fs)|` in dB.
pub fn stf_magnitude_db(k_vco_eff: f64, fs: f64, f: f64) -> f64 {
    to_db((k_vco_eff / fs * sinc(f / fs).powi(2)).abs())
}
