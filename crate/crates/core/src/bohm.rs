//! Hydrodynamic (amplitude/phase) description of the interior field and the
//! first-order-in-ν closed form for the transmission coefficient.
//!
//! With `Φ = φ e^{iS}` and `ρ = φ²` the stationary Kostin equation splits into
//! a flux law `ρS' = C` and an amplitude equation whose first integral is
//!
//! ```text
//! I(x) = ρ'²/(4ρ) + q²ρ + C²/ρ,     I(x) - (2mν/ħ)(Sρ - Cx) = I₀.
//! ```
//!
//! The boundary data at the exit edge are `S'(L) = k`, `ρ(L) = C/k`,
//! `ρ'(L) = 0`, and `|T|² = ρ(L) = C/k`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::analytic::scattering_amplitudes;
use crate::error::{Error, Result};
use crate::problem::ScatteringProblem;

/// Sampled amplitude/phase fields on an ascending grid over `[0, L]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HydroFields {
    pub grid: Vec<f64>,
    pub rho: Vec<f64>,
    /// `ρ'`; empty when the fields came from bare samples.
    pub drho: Vec<f64>,
    pub phase: Vec<f64>,
    /// `C = ρS'`.
    pub flux_const: f64,
    /// `I(x)`; empty until [`HydroFields::fill_invariant`] runs.
    pub invariant: Vec<f64>,
}

/// Where to pin the unwrapped phase in [`madelung_split`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseAnchor {
    /// First sample keeps its principal argument.
    Principal,
    /// Shift by a multiple of 2π so the last sample is as close as possible
    /// to the given value.
    End(f64),
}

/// Split complex samples `Φ(x_i)` into `ρ = |Φ|²` and the continuous phase.
///
/// `ρ'` is estimated by finite differences and `C` as the mean of `ρS'`;
/// the invariant is left empty.
pub fn madelung_split(grid: &[f64], samples: &[Complex64], anchor: PhaseAnchor) -> Result<HydroFields> {
    if grid.len() != samples.len() {
        return Err(Error::Format(format!(
            "grid has {} points but {} samples were given",
            grid.len(),
            samples.len()
        )));
    }
    if let Some(w) = grid.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::Format(format!("grid is not ascending at index {}", w + 1)));
    }
    if let Some(i) = samples.iter().position(|z| z.norm_sqr() == 0.0) {
        return Err(Error::ZeroSample { index: i, x: grid[i] });
    }

    let rho: Vec<f64> = samples.iter().map(|z| z.norm_sqr()).collect();
    let mut phase = Vec::with_capacity(samples.len());
    let mut prev = samples[0].arg();
    let mut acc = prev;
    phase.push(acc);
    for z in &samples[1..] {
        let cur = z.arg();
        acc += wrap(cur - prev);
        prev = cur;
        phase.push(acc);
    }
    if let (PhaseAnchor::End(target), Some(&last)) = (anchor, phase.last()) {
        let shift = 2.0 * PI * ((target - last) / (2.0 * PI)).round();
        phase.iter_mut().for_each(|s| *s += shift);
    }

    let mut out = HydroFields {
        grid: grid.to_vec(),
        rho,
        drho: Vec::new(),
        phase,
        flux_const: 0.0,
        invariant: Vec::new(),
    };
    if out.grid.len() >= 3 {
        out.drho = derivative(&out.grid, &out.rho);
        let sp = derivative(&out.grid, &out.phase);
        out.flux_const =
            out.rho.iter().zip(&sp).map(|(r, s)| r * s).sum::<f64>() / out.rho.len() as f64;
    }
    Ok(out)
}

impl HydroFields {
    /// Fields from a complex profile with known derivative. `C` is taken
    /// from the current at the last sample.
    pub fn from_complex_profile(
        grid: Vec<f64>,
        field: &[Complex64],
        dfield: &[Complex64],
        phase: Vec<f64>,
    ) -> Self {
        let rho: Vec<f64> = field.iter().map(|z| z.norm_sqr()).collect();
        let drho = field
            .iter()
            .zip(dfield)
            .map(|(f, d)| 2.0 * (f.conj() * d).re)
            .collect();
        let flux_const = field
            .last()
            .zip(dfield.last())
            .map(|(f, d)| (f.conj() * d).im)
            .unwrap_or(0.0);
        Self {
            grid,
            rho,
            drho,
            phase,
            flux_const,
            invariant: Vec::new(),
        }
    }

    /// Fields from the real amplitude `φ` and its derivative.
    pub fn from_amplitude(
        grid: Vec<f64>,
        amp: &[f64],
        damp: &[f64],
        phase: Vec<f64>,
        flux_const: f64,
    ) -> Self {
        Self {
            grid,
            rho: amp.iter().map(|p| p * p).collect(),
            drho: amp.iter().zip(damp).map(|(p, d)| 2.0 * p * d).collect(),
            phase,
            flux_const,
            invariant: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Evaluate `I(x)` at every sample.
    pub fn fill_invariant(&mut self, q: f64) -> Result<()> {
        if self.drho.len() != self.rho.len() {
            self.drho = derivative(&self.grid, &self.rho);
        }
        self.invariant = self
            .rho
            .iter()
            .zip(&self.drho)
            .map(|(&r, &d)| invariant_i(r, d, self.flux_const, q))
            .collect::<Result<_>>()?;
        Ok(())
    }

    /// `I(x) - (2mν/ħ)(S(x)ρ(x) - Cx)` at every sample; requires the
    /// invariant to be filled.
    pub fn conserved_combination(&self, dissipation_coeff: f64) -> Vec<f64> {
        self.invariant
            .iter()
            .zip(&self.phase)
            .zip(&self.rho)
            .zip(&self.grid)
            .map(|(((i, s), r), x)| i - dissipation_coeff * (s * r - self.flux_const * x))
            .collect()
    }

    /// Largest relative deviation of the conserved combination from its
    /// value at `x = 0`.
    pub fn conservation_residual(&self, dissipation_coeff: f64) -> f64 {
        let j = self.conserved_combination(dissipation_coeff);
        let Some(&j0) = j.first() else { return 0.0 };
        j.iter()
            .map(|v| (v - j0).abs() / j0.abs())
            .fold(0.0, f64::max)
    }

    /// Largest relative deviation of `ρS'` from `C` over interior samples,
    /// with `S'` from centred differences of the sampled phase (8th order
    /// where four neighbours exist on each side of a uniform grid).
    pub fn flux_residual(&self) -> f64 {
        let n = self.len();
        if n < 3 {
            return 0.0;
        }
        let rel = |i: usize, sp: f64| (self.rho[i] * sp - self.flux_const).abs() / self.flux_const.abs();
        if let Some(h) = uniform_step(&self.grid).filter(|_| n >= 9) {
            const W: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
            let y = &self.phase;
            return (4..n - 4)
                .map(|i| {
                    let sp = (1..=4).map(|j| W[j - 1] * (y[i + j] - y[i - j])).sum::<f64>() / h;
                    rel(i, sp)
                })
                .fold(0.0, f64::max);
        }
        let sp = derivative(&self.grid, &self.phase);
        (1..n - 1).map(|i| rel(i, sp[i])).fold(0.0, f64::max)
    }
}

fn uniform_step(x: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 {
        return None;
    }
    let h = (x[n - 1] - x[0]) / (n - 1) as f64;
    x.windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h)
        .then_some(h)
}

/// `I = ρ'²/(4ρ) + q²ρ + C²/ρ`.
pub fn invariant_i(rho: f64, drho: f64, flux: f64, q: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::param("rho", rho, "density must be > 0"));
    }
    Ok(drho * drho / (4.0 * rho) + q * q * rho + flux * flux / rho)
}

/// Exit-edge data `(S'(L), ρ(L), ρ'(L)) = (k, C/k, 0)`.
pub fn boundary_values_at_l(k: f64, flux: f64) -> (f64, f64, f64) {
    (k, flux / k, 0.0)
}

/// Reflection amplitude and probability from the entry-edge fields:
///
/// ```text
/// A = (2i[kρ(0) - C] - ρ'(0)) / (2i[kρ(0) + C] + ρ'(0))
/// ```
pub fn reflection_from_fields(rho0: f64, drho0: f64, flux: f64, k: f64) -> Result<(Complex64, f64)> {
    if !(rho0 > 0.0) {
        return Err(Error::param("rho0", rho0, "density must be > 0"));
    }
    let num = Complex64::new(-drho0, 2.0 * (k * rho0 - flux));
    let den = Complex64::new(drho0, 2.0 * (k * rho0 + flux));
    if !(den.norm() > 0.0) {
        return Err(Error::param("rho0", rho0, "reflection denominator vanishes"));
    }
    let dd = drho0 * drho0;
    let prob = (4.0 * (k * rho0 - flux).powi(2) + dd) / (4.0 * (k * rho0 + flux).powi(2) + dd);
    Ok((num / den, prob))
}

/// `|T|² = 4kC / (ρ'(0)²/(4ρ(0)) + C²/ρ(0) + k²ρ(0) + 2kC)`.
pub fn transmission_from_fields(rho0: f64, drho0: f64, flux: f64, k: f64) -> Result<f64> {
    if !(rho0 > 0.0) {
        return Err(Error::param("rho0", rho0, "density must be > 0"));
    }
    Ok(4.0 * k * flux
        / (drho0 * drho0 / (4.0 * rho0) + flux * flux / rho0 + k * k * rho0 + 2.0 * k * flux))
}

/// `|T|²` written through `I₀`:
/// `4kC / (I₀ + [k² - q² + (2mν/ħ)S(0)]ρ(0) + 2kC)`.
pub fn transmission_from_i0(
    i0: f64,
    rho0: f64,
    s0: f64,
    flux: f64,
    k: f64,
    q: f64,
    dissipation_coeff: f64,
) -> f64 {
    4.0 * k * flux / (i0 + (k * k - q * q + dissipation_coeff * s0) * rho0 + 2.0 * k * flux)
}

/// `S(0) = arctan(ρ'(0) / (2[kρ(0) + C]))` on the principal branch.
pub fn s0_from_fields(rho0: f64, drho0: f64, flux: f64, k: f64) -> f64 {
    (drho0 / (2.0 * (k * rho0 + flux))).atan()
}

/// Residuals of the two real entry-edge matching conditions,
/// `cos S(0) φ(0)[k + S'(0)] + φ'(0) sin S(0) - 2k` and
/// `sin S(0) φ(0)[k + S'(0)] - φ'(0) cos S(0)`.
pub fn entry_matching_residuals(phi0: f64, dphi0: f64, dphase0: f64, s0: f64, k: f64) -> (f64, f64) {
    let (s, c) = s0.sin_cos();
    let a = phi0 * (k + dphase0);
    (c * a + dphi0 * s - 2.0 * k, s * a - dphi0 * c)
}

/// Output of [`closed_form_transmission`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedFormReport {
    pub s_at_0: f64,
    pub s_at_l: f64,
    pub beta_at_0: f64,
    /// Auxiliary function `E_ν` (not an energy).
    pub e_aux: f64,
    pub f_aux: f64,
    /// `4 / F_ν`.
    pub trans_prob: f64,
    /// `|T|²` from the `|T|⁻² = 1 + sin²[qβ(0)](...)` form.
    pub trans_prob_alt: f64,
    pub d_nu: f64,
    pub rho_nu_at_0: f64,
    /// `(2mν/ħk²) · max(kL, |S(L)|, |S(0)|)`.
    pub expansion_parameter: f64,
    pub warnings: Vec<String>,
}

impl ClosedFormReport {
    /// Relative gap between the `4/F_ν` and `|T|⁻²` forms.
    pub fn form_discrepancy(&self) -> f64 {
        (self.trans_prob - self.trans_prob_alt).abs() / self.trans_prob
    }

    pub fn is_perturbative(&self) -> bool {
        self.expansion_parameter < EXPANSION_LIMIT
    }
}

/// Above this value of the expansion parameter the closed form is flagged.
pub const EXPANSION_LIMIT: f64 = 0.1;

/// First-order-in-ν transmission coefficient.
///
/// Phases entering the ν-terms are taken at zeroth order from the
/// dissipationless amplitudes: `S(0) = arg(1 + A₀)` and `S(L)` its continuous
/// continuation across the well (`kL + arg B₀` up to 2π).
pub fn closed_form_transmission(problem: &ScatteringProblem) -> Result<ClosedFormReport> {
    let wn = problem.wave_numbers();
    if !(wn.contrast > 0.0) || !(wn.n > 1.0) {
        return Err(Error::NoContrast { n: wn.n });
    }
    let consts = problem.constants();
    let (hbar, mass, nu) = (consts.hbar(), consts.mass(), problem.nu());
    let l = problem.width();
    let (k, q) = (wn.k, wn.q);
    let nn = wn.n * wn.n;
    let c2 = wn.contrast; // n² - 1

    let amps = scattering_amplitudes(&wn, l);
    let s0 = amps.entry_phase();
    let sl = amps.exit_phase();
    let kl = k * l;

    // 2mν/(ħk²) and mν/(ħq²)
    let g = 2.0 * mass * nu / (hbar * k * k);
    let hq = mass * nu / (hbar * q * q);

    let beta0 = l * (1.0 - nu * hbar / problem.depth() * (kl / 2.0 + s0));
    let qb = q * beta0;

    let e_aux = c2 * (1.0 + g * (1.0 + nn) / (c2 * c2) * (kl - sl + s0)) * (2.0 * qb).cos()
        + (1.0 + nn) * (1.0 + g / (1.0 + nn) * (kl - sl));
    // (1 - n²)/(2n²) [1 + (mνS(0)/ħq²)(n² + 1)/(1 - n²)]
    let factor = -c2 / (2.0 * nn) * (1.0 - hq * s0 * (nn + 1.0) / c2);
    let f_aux = 3.0 + nn + g * (kl - sl) + factor * e_aux;
    if !(f_aux > 0.0) {
        return Err(Error::PerturbationBreakdown { f_aux });
    }
    let trans_prob = 4.0 / f_aux;

    let t_inv = 1.0
        + qb.sin().powi(2) * (c2 / (2.0 * wn.n)).powi(2) * (1.0 - hq * s0 * (nn + 1.0) / c2);
    let trans_prob_alt = 1.0 / t_inv;

    let flux = k * trans_prob;
    let rho_nu_at_0 = flux / (nn * k) * (c2 * qb.cos().powi(2) + 1.0);
    let dc = 2.0 * mass * nu / hbar;
    let d_nu = flux * flux * k * k * (1.0 + nn).powi(2)
        + 2.0 * dc * flux * flux * (1.0 + nn) * (kl - sl)
        + 2.0 * dc * flux * k * (1.0 + nn) * rho_nu_at_0 * s0
        - 4.0 * k * k * nn * flux * flux;

    let expansion_parameter = g * kl.max(sl.abs()).max(s0.abs());
    let mut warnings = Vec::new();
    if expansion_parameter >= EXPANSION_LIMIT {
        warnings.push(format!(
            "expansion parameter {expansion_parameter:.3e} >= {EXPANSION_LIMIT}; \
             first-order closed form is outside its validity range"
        ));
    }

    Ok(ClosedFormReport {
        s_at_0: s0,
        s_at_l: sl,
        beta_at_0: beta0,
        e_aux,
        f_aux,
        trans_prob,
        trans_prob_alt,
        d_nu,
        rho_nu_at_0,
        expansion_parameter,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckItem {
    pub name: &'static str,
    pub value: f64,
    pub expected: f64,
    pub residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResonanceCheck {
    /// Resonance order `j` the problem is compared against (`qL ≈ jπ`).
    pub order: u32,
    pub items: Vec<CheckItem>,
    pub passed: bool,
}

/// Walk the chain `qβ(0) ≈ jπ`, `ρ'(0) = 0`, `sin[qβ(0)] = 0`, `S(0) = 0`,
/// `|T|² = 1` for a problem tuned to a transparency resonance. Every link is
/// reported with its residual, whether or not it passes `tol`.
pub fn resonance_limit_check(problem: &ScatteringProblem, tol: f64) -> Result<ResonanceCheck> {
    let cf = closed_form_transmission(problem)?;
    let wn = problem.wave_numbers();
    let (k, q) = (wn.k, wn.q);
    let order = ((q * problem.width() / PI).round() as u32).max(1);
    let qb = q * cf.beta_at_0;

    let flux = k * cf.trans_prob;
    // sqrt(I² - 4q²C²) with I ≈ Ck(1 + n²) is Ck(n² - 1); θ(0) = -qβ(0)
    let drho0 = flux * k * wn.contrast / q * (2.0 * qb).sin();
    let s0 = s0_from_fields(cf.rho_nu_at_0, drho0, flux, k);

    let mut items = Vec::new();
    let mut push = |name, value: f64, expected: f64| {
        let residual = value - expected;
        items.push(CheckItem {
            name,
            value,
            expected,
            residual,
            passed: residual.abs() <= tol,
        });
    };
    push("q*beta(0)", qb, order as f64 * PI);
    push("rho'(0)", drho0, 0.0);
    push("sin(q*beta(0))", qb.sin(), 0.0);
    push("S(0)", s0, 0.0);
    push("|T|^2", cf.trans_prob, 1.0);

    let passed = items.iter().all(|i| i.passed);
    Ok(ResonanceCheck {
        order,
        items,
        passed,
    })
}

fn wrap(d: f64) -> f64 {
    d - 2.0 * PI * (d / (2.0 * PI)).round()
}

/// Derivative of sampled data. Uniform grids with at least five points get
/// fourth-order stencils everywhere (centred inside, skewed near the ends);
/// anything else falls back to three-point second-order formulas.
pub(crate) fn derivative(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![0.0; n];
    }
    if n == 2 {
        return vec![(y[1] - y[0]) / (x[1] - x[0]); 2];
    }
    if let Some(h) = uniform_step(x).filter(|_| n >= 5) {
        let c = 12.0 * h;
        let mut d = vec![0.0; n];
        d[0] = (-25.0 * y[0] + 48.0 * y[1] - 36.0 * y[2] + 16.0 * y[3] - 3.0 * y[4]) / c;
        d[1] = (-3.0 * y[0] - 10.0 * y[1] + 18.0 * y[2] - 6.0 * y[3] + y[4]) / c;
        for i in 2..n - 2 {
            d[i] = (-y[i + 2] + 8.0 * y[i + 1] - 8.0 * y[i - 1] + y[i - 2]) / c;
        }
        let m = n - 1;
        d[m - 1] = (3.0 * y[m] + 10.0 * y[m - 1] - 18.0 * y[m - 2] + 6.0 * y[m - 3] - y[m - 4]) / c;
        d[m] = (25.0 * y[m] - 48.0 * y[m - 1] + 36.0 * y[m - 2] - 16.0 * y[m - 3] + 3.0 * y[m - 4]) / c;
        return d;
    }
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
        d[i] = (-h1 / (h0 * (h0 + h1))) * y[i - 1]
            + ((h1 - h0) / (h0 * h1)) * y[i]
            + (h0 / (h1 * (h0 + h1))) * y[i + 1];
    }
    let (h0, h1) = (x[1] - x[0], x[2] - x[1]);
    d[0] = -(2.0 * h0 + h1) / (h0 * (h0 + h1)) * y[0] + (h0 + h1) / (h0 * h1) * y[1]
        - h0 / (h1 * (h0 + h1)) * y[2];
    let (h0, h1) = (x[n - 2] - x[n - 3], x[n - 1] - x[n - 2]);
    d[n - 1] = h1 / (h0 * (h0 + h1)) * y[n - 3] - (h0 + h1) / (h0 * h1) * y[n - 2]
        + (2.0 * h1 + h0) / (h1 * (h0 + h1)) * y[n - 1];
    d
}
