//! Closed-form stationary scattering off the square well without dissipation.
//!
//! Regions: `ψ = e^{ikx} + A e^{-ikx}` for `x < 0`, `C e^{iqx} + D e^{-iqx}`
//! inside, `B e^{ikx}` for `x > L`. The incident wave has unit amplitude and
//! zero phase at `x = 0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::problem::{PhysicalConstants, SquareWell, WaveNumbers};

/// `|T|² = 1 / (1 + ((k² - q²)/(2kq))² sin²(qL))`.
pub fn transmission_probability(wn: &WaveNumbers, width: f64) -> f64 {
    let f = wn.mismatch().powi(2) * (wn.q * width).sin().powi(2);
    1.0 / (1.0 + f)
}

/// `|R|²` evaluated from its own expression rather than `1 - |T|²`.
pub fn reflection_probability(wn: &WaveNumbers, width: f64) -> f64 {
    let f = wn.mismatch().powi(2) * (wn.q * width).sin().powi(2);
    f / (1.0 + f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticCoefficients {
    pub wave_numbers: WaveNumbers,
    pub width: f64,
    /// `A`
    pub refl_amp: Complex64,
    /// `B`
    pub trans_amp: Complex64,
    pub refl_prob: f64,
    pub trans_prob: f64,
    /// `(C, D)` of the interior solution.
    pub interior_amps: (Complex64, Complex64),
    /// Multiple of 2π added to the interior phase so that `S(0) = arg(1 + A)`.
    branch: f64,
}

/// Amplitudes from continuity of `ψ` and `ψ'` at `x = 0` and `x = L`.
pub fn scattering_amplitudes(wn: &WaveNumbers, width: f64) -> AnalyticCoefficients {
    let (k, q) = (wn.k, wn.q);
    let ql = q * width;
    let (s, c) = ql.sin_cos();
    // (q² + k²)/(2qk) and (q² - k²)/(2qk) written through n² - 1 = V/E.
    let sum_ratio = k * k * (2.0 + wn.contrast) / (2.0 * q * k);
    let diff_ratio = -wn.mismatch();

    // t = B e^{ikL}
    let t = Complex64::new(c, -sum_ratio * s).inv();
    let trans_amp = t * Complex64::from_polar(1.0, -k * width);
    let refl_amp = Complex64::new(0.0, diff_ratio * s) * t;

    let cc = t * Complex64::from_polar((q + k) / (2.0 * q), -ql);
    let dd = t * Complex64::from_polar((q - k) / (2.0 * q), ql);

    let mut out = AnalyticCoefficients {
        wave_numbers: *wn,
        width,
        refl_amp,
        trans_amp,
        refl_prob: refl_amp.norm_sqr(),
        trans_prob: trans_amp.norm_sqr(),
        interior_amps: (cc, dd),
        branch: 0.0,
    };
    let raw = out.unanchored_phase(0.0);
    let target = (Complex64::new(1.0, 0.0) + refl_amp).arg();
    out.branch = 2.0 * PI * ((target - raw) / (2.0 * PI)).round();
    out
}

impl AnalyticCoefficients {
    /// Interior field `Φ(x) = C e^{iqx} + D e^{-iqx}`.
    pub fn interior_field(&self, x: f64) -> Complex64 {
        let (c, d) = self.interior_amps;
        let q = self.wave_numbers.q;
        c * Complex64::from_polar(1.0, q * x) + d * Complex64::from_polar(1.0, -q * x)
    }

    pub fn interior_derivative(&self, x: f64) -> Complex64 {
        let (c, d) = self.interior_amps;
        let q = self.wave_numbers.q;
        Complex64::new(0.0, q)
            * (c * Complex64::from_polar(1.0, q * x) - d * Complex64::from_polar(1.0, -q * x))
    }

    // |D| < |C| whenever flux is transmitted, so arg(1 + (D/C) e^{-2iqx})
    // stays on the principal branch and the phase is continuous in x.
    fn unanchored_phase(&self, x: f64) -> f64 {
        let (c, d) = self.interior_amps;
        let q = self.wave_numbers.q;
        let z = Complex64::new(1.0, 0.0) + (d / c) * Complex64::from_polar(1.0, -2.0 * q * x);
        q * x + c.arg() + z.arg()
    }

    /// Continuous phase `S(x)` of the interior field, anchored so that
    /// `S(0) = arg(1 + A)` lies in `(-π/2, π/2)`.
    pub fn interior_phase(&self, x: f64) -> f64 {
        self.unanchored_phase(x) + self.branch
    }

    /// `S(0)`.
    pub fn entry_phase(&self) -> f64 {
        self.interior_phase(0.0)
    }

    /// `S(L)`; equals `kL + arg B` up to the branch fixed by continuity.
    pub fn exit_phase(&self) -> f64 {
        self.interior_phase(self.width)
    }

    /// Probability current `ρS' = q(|C|² - |D|²)`, equal to `k|B|²`.
    pub fn flux(&self) -> f64 {
        let (c, d) = self.interior_amps;
        self.wave_numbers.q * (c.norm_sqr() - d.norm_sqr())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Resonance {
    pub order: u32,
    pub energy: f64,
}

/// Energies with `qL = jπ`, `j = 1..=max_order`, that lie in the scattering
/// continuum (`E > 0`), ascending.
pub fn resonance_energies(
    well: &SquareWell,
    constants: &PhysicalConstants,
    max_order: u32,
) -> Vec<Resonance> {
    (1..=max_order)
        .filter_map(|j| {
            let energy = resonance_energy(well, constants, j);
            (energy > 0.0).then_some(Resonance { order: j, energy })
        })
        .collect()
}

/// `E_j = (jπħ/L)²/(2m) - V`; may be non-positive.
pub fn resonance_energy(well: &SquareWell, constants: &PhysicalConstants, order: u32) -> f64 {
    let p = order as f64 * PI * constants.hbar() / well.width();
    p * p / (2.0 * constants.mass()) - well.depth()
}

/// Resonances whose energy lies in `[lo, hi]`.
pub fn resonances_in_range(
    well: &SquareWell,
    constants: &PhysicalConstants,
    lo: f64,
    hi: f64,
) -> Vec<Resonance> {
    // qL = jπ  =>  j = L sqrt(2m(E + V))/(πħ)
    let j_max = (well.width() * (constants.energy_to_k2() * (hi + well.depth())).sqrt() / PI)
        .floor()
        .max(0.0) as u32;
    resonance_energies(well, constants, j_max + 1)
        .into_iter()
        .filter(|r| r.energy >= lo && r.energy <= hi)
        .collect()
}
