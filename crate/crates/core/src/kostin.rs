//! Shooting solvers for the stationary Kostin equation inside the well,
//!
//! ```text
//! Φ'' + [q² - (2mν/ħ) S(x)] Φ = 0,    S = continuous arg Φ,
//! ```
//!
//! with dissipation acting only on `0 < x < L` (outside, the free plane waves
//! are kept). Both solvers integrate backward from `x = L`, where every
//! boundary value is fixed by the transmitted wave, and Newton-iterate on
//! the unknown transmitted data until the entry-edge matching holds.
//!
//! The phase is tracked by integrating `S'` rather than taking principal
//! arguments. Its 2π branch is fixed once from the dissipationless solution,
//! which has `S(0) = arg(1 + A)` in `(-π/2, π/2)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::analytic::{scattering_amplitudes, AnalyticCoefficients};
use crate::bohm::{
    entry_matching_residuals, madelung_split, reflection_from_fields, HydroFields, PhaseAnchor,
};
use crate::error::{Error, Result};
use crate::ode;
use crate::problem::ScatteringProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Requested integration step; the actual step is `L/N` with `N` the
    /// smallest step count not exceeding it.
    pub step: f64,
    pub max_newton_iters: usize,
    /// Tolerance on the normalised matching residual.
    pub newton_tol: f64,
    pub integrator: Integrator,
}

impl SolverConfig {
    /// Defaults: step `L/1000`, Newton tolerance `1e-12`, 50 iterations.
    pub fn for_width(width: f64) -> Self {
        Self {
            step: width / 1000.0,
            max_newton_iters: 50,
            newton_tol: 1e-12,
            integrator: Integrator::Rk4,
        }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn validate(&self, width: f64) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::InvalidConfig(format!("step must be > 0, got {}", self.step)));
        }
        if self.step > width / 100.0 * (1.0 + 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "step {} exceeds L/100 = {}",
                self.step,
                width / 100.0
            )));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "newton_tol must be > 0, got {}",
                self.newton_tol
            )));
        }
        if self.max_newton_iters == 0 {
            return Err(Error::InvalidConfig("max_newton_iters must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of equal steps across a well of the given width.
    pub fn steps(&self, width: f64) -> usize {
        let r = width / self.step;
        let n = if (r - r.round()).abs() <= 1e-9 * r {
            r.round()
        } else {
            r.ceil()
        };
        (n as usize).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ComplexField,
    Hydrodynamic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumericSolution {
    pub method: Method,
    /// Interior fields on the ascending integration grid.
    pub fields: HydroFields,
    /// `Φ(x)` on the same grid.
    pub field: Vec<Complex64>,
    pub refl_amp: Complex64,
    pub trans_amp: Complex64,
    pub refl_prob: f64,
    pub trans_prob: f64,
    /// `1 - (|R|² + |T|²)`.
    pub flux_deficit: f64,
    pub newton_iters: usize,
    /// Final normalised matching residual.
    pub max_residual: f64,
    /// Residual norm before every Newton update, then the final one.
    pub residual_history: Vec<f64>,
}

impl NumericSolution {
    pub fn entry_phase(&self) -> f64 {
        self.fields.phase[0]
    }

    pub fn exit_phase(&self) -> f64 {
        *self.fields.phase.last().expect("non-empty grid")
    }

    /// `1 - |A|²`, the transmission booked as `1 - |R|²`; differs from
    /// `|B|²` only by `flux_deficit`.
    pub fn one_minus_refl(&self) -> f64 {
        1.0 - self.refl_prob
    }
}

/// Shooting on the complex transmitted amplitude `B`.
pub fn solve_complex_field(problem: &ScatteringProblem, cfg: &SolverConfig) -> Result<NumericSolution> {
    let setup = Setup::new(problem, cfg)?;
    let b0 = setup.zeroth.trans_amp;
    let scale = 2.0 * setup.k;
    let residual = |x: [f64; 2]| -> Result<[f64; 2]> {
        let b = Complex64::new(x[0], x[1]);
        let end = setup.shoot_complex(b, None)?;
        let g = end.dfield - Complex64::new(0.0, setup.k) * (2.0 - end.field);
        Ok([g.re / scale, g.im / scale])
    };
    let outcome = newton2(residual, [b0.re, b0.im], [b0.norm(), b0.norm()], cfg)?;

    let b = Complex64::new(outcome.x[0], outcome.x[1]);
    let mut rec = Record::with_capacity(setup.steps + 1);
    let end = setup.shoot_complex(b, Some(&mut rec))?;
    rec.reverse();

    let refl_amp = end.field - 1.0;
    check_branch(end.phase, (1.0 + refl_amp).arg())?;

    let mut fields = HydroFields::from_complex_profile(rec.grid, &rec.field, &rec.dfield, rec.phase);
    fields.fill_invariant(setup.q)?;
    let refl_prob = refl_amp.norm_sqr();
    let trans_prob = b.norm_sqr();
    Ok(NumericSolution {
        method: Method::ComplexField,
        fields,
        field: rec.field,
        refl_amp,
        trans_amp: b,
        refl_prob,
        trans_prob,
        flux_deficit: 1.0 - refl_prob - trans_prob,
        newton_iters: outcome.iters,
        max_residual: outcome.residual,
        residual_history: outcome.history,
    })
}

/// Shooting on the real unknowns `(C, S(L))` of the amplitude/phase system
/// `φ'' = [(S')² - q² + (2mν/ħ)S] φ`, `S' = C/φ²`.
pub fn solve_hydrodynamic(problem: &ScatteringProblem, cfg: &SolverConfig) -> Result<NumericSolution> {
    let setup = Setup::new(problem, cfg)?;
    let k = setup.k;
    let c0 = setup.zeroth.flux();
    let sl0 = setup.zeroth.exit_phase();
    let residual = |x: [f64; 2]| -> Result<[f64; 2]> {
        let end = setup.shoot_hydro(x[0], x[1], None)?;
        let dphase0 = x[0] / (end.amp * end.amp);
        let sum = end.amp * (k + dphase0);
        let magnitude = 4.0 * k * k - end.damp * end.damp - sum * sum;
        let (_, imag) = entry_matching_residuals(end.amp, end.damp, dphase0, end.phase, k);
        Ok([magnitude / (4.0 * k * k), imag / (2.0 * k)])
    };
    let outcome = newton2(residual, [c0, sl0], [c0, sl0.abs().max(1.0)], cfg)?;
    let [flux, sl] = outcome.x;

    let mut rec = HydroRecord::with_capacity(setup.steps + 1);
    let end = setup.shoot_hydro(flux, sl, Some(&mut rec))?;
    rec.reverse();

    let dphase0 = flux / (end.amp * end.amp);
    let (real, _) = entry_matching_residuals(end.amp, end.damp, dphase0, end.phase, k);
    if (real / (2.0 * k)).abs() > 1e-6 {
        return Err(Error::WrongBranch(format!(
            "entry matching holds with 2k replaced by {:.6}",
            real + 2.0 * k
        )));
    }
    if end.phase.abs() >= PI / 2.0 {
        return Err(Error::WrongBranch(format!("S(0) = {} outside (-π/2, π/2)", end.phase)));
    }

    let field: Vec<Complex64> = rec
        .amp
        .iter()
        .zip(&rec.phase)
        .map(|(&a, &s)| Complex64::from_polar(a, s))
        .collect();
    let mut fields = HydroFields::from_amplitude(rec.grid, &rec.amp, &rec.damp, rec.phase, flux);
    fields.fill_invariant(setup.q)?;

    let rho0 = fields.rho[0];
    let drho0 = fields.drho[0];
    let (refl_amp, refl_prob) = reflection_from_fields(rho0, drho0, flux, k)?;
    let trans_prob = flux / k;
    let trans_amp = Complex64::from_polar(trans_prob.sqrt(), sl - k * setup.width);
    Ok(NumericSolution {
        method: Method::Hydrodynamic,
        fields,
        field,
        refl_amp,
        trans_amp,
        refl_prob,
        trans_prob,
        flux_deficit: 1.0 - refl_prob - trans_prob,
        newton_iters: outcome.iters,
        max_residual: outcome.residual,
        residual_history: outcome.history,
    })
}

pub fn solve(problem: &ScatteringProblem, cfg: &SolverConfig, method: Method) -> Result<NumericSolution> {
    match method {
        Method::ComplexField => solve_complex_field(problem, cfg),
        Method::Hydrodynamic => solve_hydrodynamic(problem, cfg),
    }
}

/// Profile agreement tolerance (relative, sup norm) between the two
/// formulations.
pub const PROFILE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossValidation {
    pub complex: NumericSolution,
    pub hydro: NumericSolution,
    pub trans_prob_diff: f64,
    pub trans_prob_tol: f64,
    /// `max|ρ_c - ρ_h| / max|ρ_h|` with `ρ_c` from splitting the complex profile.
    pub rho_rel_diff: f64,
    /// Same for the phase.
    pub phase_rel_diff: f64,
    pub passed: bool,
}

impl CrossValidation {
    pub fn failure_summary(&self) -> Option<String> {
        if self.passed {
            return None;
        }
        Some(format!(
            "formulations disagree: |dT2| = {:.3e} (tol {:.1e}), rho rel {:.3e}, S rel {:.3e} (tol {:.1e})",
            self.trans_prob_diff, self.trans_prob_tol, self.rho_rel_diff, self.phase_rel_diff, PROFILE_TOL
        ))
    }
}

/// Run both formulations and compare `|T|²` (to `10·newton_tol`) and the
/// split complex profile against the hydrodynamic one (to [`PROFILE_TOL`]).
pub fn cross_validate(problem: &ScatteringProblem, cfg: &SolverConfig) -> Result<CrossValidation> {
    let complex = solve_complex_field(problem, cfg)?;
    let hydro = solve_hydrodynamic(problem, cfg)?;
    let (rho_rel_diff, phase_rel_diff) = profile_agreement(&complex, &hydro)?;
    let trans_prob_diff = (complex.trans_prob - hydro.trans_prob).abs();
    let trans_prob_tol = 10.0 * cfg.newton_tol;
    let passed = trans_prob_diff <= trans_prob_tol
        && rho_rel_diff <= PROFILE_TOL
        && phase_rel_diff <= PROFILE_TOL;
    Ok(CrossValidation {
        complex,
        hydro,
        trans_prob_diff,
        trans_prob_tol,
        rho_rel_diff,
        phase_rel_diff,
        passed,
    })
}

/// Split the complex-field profile into `(ρ, S)`, anchoring the phase at
/// the tracked exit value, and return the relative sup-norm gaps to the
/// hydrodynamic `(ρ, S)`.
pub fn profile_agreement(complex: &NumericSolution, hydro: &NumericSolution) -> Result<(f64, f64)> {
    let split = madelung_split(
        &complex.fields.grid,
        &complex.field,
        PhaseAnchor::End(complex.exit_phase()),
    )?;
    Ok((
        sup_rel_diff(&split.rho, &hydro.fields.rho),
        sup_rel_diff(&split.phase, &hydro.fields.phase),
    ))
}

/// `max_i |a_i - b_i| / max_i |b_i|`.
pub fn sup_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a
        .iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    diff / scale
}

fn check_branch(tracked: f64, principal: f64) -> Result<()> {
    if (tracked - principal).abs() > 1e-6 {
        return Err(Error::WrongBranch(format!(
            "tracked S(0) = {tracked} but arg(1 + A) = {principal}"
        )));
    }
    Ok(())
}

// Shared per-problem data.
struct Setup {
    k: f64,
    q: f64,
    width: f64,
    coeff: f64,
    steps: usize,
    h: f64,
    zeroth: AnalyticCoefficients,
}

struct ComplexEnd {
    field: Complex64,
    dfield: Complex64,
    phase: f64,
}

struct HydroEnd {
    amp: f64,
    damp: f64,
    phase: f64,
}

#[derive(Default)]
struct Record {
    grid: Vec<f64>,
    field: Vec<Complex64>,
    dfield: Vec<Complex64>,
    phase: Vec<f64>,
}

impl Record {
    fn with_capacity(n: usize) -> Self {
        Self {
            grid: Vec::with_capacity(n),
            field: Vec::with_capacity(n),
            dfield: Vec::with_capacity(n),
            phase: Vec::with_capacity(n),
        }
    }

    fn reverse(&mut self) {
        self.grid.reverse();
        self.field.reverse();
        self.dfield.reverse();
        self.phase.reverse();
    }
}

#[derive(Default)]
struct HydroRecord {
    grid: Vec<f64>,
    amp: Vec<f64>,
    damp: Vec<f64>,
    phase: Vec<f64>,
}

impl HydroRecord {
    fn with_capacity(n: usize) -> Self {
        Self {
            grid: Vec::with_capacity(n),
            amp: Vec::with_capacity(n),
            damp: Vec::with_capacity(n),
            phase: Vec::with_capacity(n),
        }
    }

    fn reverse(&mut self) {
        self.grid.reverse();
        self.amp.reverse();
        self.damp.reverse();
        self.phase.reverse();
    }
}

// Densities below this fraction of the exit density count as a node.
const NODE_FLOOR: f64 = 1e-14;

impl Setup {
    fn new(problem: &ScatteringProblem, cfg: &SolverConfig) -> Result<Self> {
        let width = problem.width();
        cfg.validate(width)?;
        let wn = problem.wave_numbers();
        let steps = cfg.steps(width);
        Ok(Self {
            k: wn.k,
            q: wn.q,
            width,
            coeff: problem.dissipation_coeff(),
            steps,
            h: width / steps as f64,
            zeroth: scattering_amplitudes(&wn, width),
        })
    }

    // grid positions are recomputed from the step index so every record is
    // exactly `L·(N - i)/N`
    fn node_at(&self, i: usize) -> f64 {
        self.width * (self.steps - i) as f64 / self.steps as f64
    }

    fn shoot_complex(&self, b: Complex64, mut rec: Option<&mut Record>) -> Result<ComplexEnd> {
        let b0 = self.zeroth.trans_amp;
        let sl = self.zeroth.exit_phase() + wrap((b / b0).arg());
        let exit = b * Complex64::from_polar(1.0, self.k * self.width);
        let dexit = Complex64::new(0.0, self.k) * exit;
        let floor = NODE_FLOOR * exit.norm_sqr();
        let (q2, g) = (self.q * self.q, self.coeff);

        let rhs = |_x: f64, y: &[f64; 5]| -> [f64; 5] {
            let pot = q2 - g * y[4];
            let r2 = y[0] * y[0] + y[1] * y[1];
            let cur = y[0] * y[3] - y[1] * y[2];
            [y[2], y[3], -pot * y[0], -pot * y[1], cur / r2]
        };
        let mut i = 0usize;
        let y = ode::integrate(
            rhs,
            self.width,
            [exit.re, exit.im, dexit.re, dexit.im, sl],
            -self.h,
            self.steps,
            |_, y: &[f64; 5]| {
                let x = self.node_at(i);
                i += 1;
                if y[0] * y[0] + y[1] * y[1] <= floor || !y[4].is_finite() {
                    return Err(Error::NodeEncountered { x });
                }
                if let Some(r) = rec.as_deref_mut() {
                    r.grid.push(x);
                    r.field.push(Complex64::new(y[0], y[1]));
                    r.dfield.push(Complex64::new(y[2], y[3]));
                    r.phase.push(y[4]);
                }
                Ok(())
            },
        )?;
        Ok(ComplexEnd {
            field: Complex64::new(y[0], y[1]),
            dfield: Complex64::new(y[2], y[3]),
            phase: y[4],
        })
    }

    fn shoot_hydro(&self, flux: f64, sl: f64, mut rec: Option<&mut HydroRecord>) -> Result<HydroEnd> {
        if !(flux > 0.0) || !flux.is_finite() || !sl.is_finite() {
            return Err(Error::param("C", flux, "flux constant must be finite and > 0"));
        }
        let amp_l = (flux / self.k).sqrt();
        let floor = NODE_FLOOR * amp_l * amp_l;
        let (q2, g) = (self.q * self.q, self.coeff);
        let rhs = |_x: f64, y: &[f64; 3]| -> [f64; 3] {
            let sp = flux / (y[0] * y[0]);
            [y[1], (sp * sp - q2 + g * y[2]) * y[0], sp]
        };
        let mut i = 0usize;
        let y = ode::integrate(rhs, self.width, [amp_l, 0.0, sl], -self.h, self.steps, |_, y: &[f64; 3]| {
            let x = self.node_at(i);
            i += 1;
            if y[0] * y[0] <= floor || !y[0].is_finite() {
                return Err(Error::NodeEncountered { x });
            }
            if let Some(r) = rec.as_deref_mut() {
                r.grid.push(x);
                r.amp.push(y[0]);
                r.damp.push(y[1]);
                r.phase.push(y[2]);
            }
            Ok(())
        })?;
        Ok(HydroEnd {
            amp: y[0],
            damp: y[1],
            phase: y[2],
        })
    }
}

fn wrap(d: f64) -> f64 {
    d - 2.0 * PI * (d / (2.0 * PI)).round()
}

struct NewtonOutcome {
    x: [f64; 2],
    iters: usize,
    residual: f64,
    history: Vec<f64>,
}

const MAX_HALVINGS: usize = 8;

/// Damped 2-D Newton with a forward-difference Jacobian. A trial step that
/// does not lower the residual norm (or fails to evaluate) is halved up to
/// [`MAX_HALVINGS`] times.
fn newton2<F>(f: F, x0: [f64; 2], scale: [f64; 2], cfg: &SolverConfig) -> Result<NewtonOutcome>
where
    F: Fn([f64; 2]) -> Result<[f64; 2]>,
{
    let norm = |r: [f64; 2]| r[0].hypot(r[1]);
    let mut x = x0;
    let mut r = f(x)?;
    let mut history = vec![norm(r)];
    for iter in 0..cfg.max_newton_iters {
        let rn = norm(r);
        if rn <= cfg.newton_tol {
            return Ok(NewtonOutcome {
                x,
                iters: iter,
                residual: rn,
                history,
            });
        }

        let mut jac = [[0.0; 2]; 2];
        for j in 0..2 {
            let eps = 1e-7 * x[j].abs().max(scale[j]).max(1e-12);
            let mut xp = x;
            xp[j] += eps;
            let rp = f(xp)?;
            jac[0][j] = (rp[0] - r[0]) / eps;
            jac[1][j] = (rp[1] - r[1]) / eps;
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let fro = jac.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        let condition = if det == 0.0 { f64::INFINITY } else { fro * fro / det.abs() };
        if !condition.is_finite() || condition > 1e14 {
            return Err(Error::SingularJacobian { condition });
        }
        let dx = [
            (jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
            (-jac[1][0] * r[0] + jac[0][0] * r[1]) / det,
        ];

        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let xt = [x[0] - lambda * dx[0], x[1] - lambda * dx[1]];
            if let Ok(rt) = f(xt) {
                if norm(rt) < rn {
                    accepted = Some((xt, rt));
                    break;
                }
                accepted.get_or_insert((xt, rt));
            }
            lambda *= 0.5;
        }
        let Some((xt, rt)) = accepted else {
            return Err(Error::NonConvergence {
                iterations: iter + 1,
                residual: rn,
            });
        };
        x = xt;
        r = rt;
        history.push(norm(r));
    }
    let rn = norm(r);
    if rn <= cfg.newton_tol {
        return Ok(NewtonOutcome {
            x,
            iters: cfg.max_newton_iters,
            residual: rn,
            history,
        });
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_newton_iters,
        residual: rn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{resonance_energy, transmission_probability};
    use crate::problem::{PhysicalConstants, SquareWell};

    fn problem(v: f64, l: f64, e: f64, nu: f64) -> ScatteringProblem {
        ScatteringProblem::natural(v, l, e, nu).unwrap()
    }

    #[test]
    fn config_validation() {
        let cfg = SolverConfig::for_width(2.0);
        assert!(cfg.validate(2.0).is_ok());
        assert_eq!(cfg.steps(2.0), 1000);
        assert!(cfg.with_step(0.1).validate(2.0).is_err());
        assert!(cfg.with_step(0.02).validate(2.0).is_ok());
        assert!(cfg.with_step(-1.0).validate(2.0).is_err());
        let mut bad = cfg;
        bad.newton_tol = 0.0;
        assert!(bad.validate(2.0).is_err());
        bad = cfg;
        bad.max_newton_iters = 0;
        assert!(bad.validate(2.0).is_err());
        // non-dividing step rounds up the count
        assert_eq!(cfg.with_step(0.0015).steps(1.0), 667);
    }

    #[test]
    fn complex_matches_analytic_without_dissipation() {
        for (v, l, e) in [(2.5, 1.0, 2.0), (4.0, 2.0, 0.5), (0.7, 0.6, 3.0)] {
            let p = problem(v, l, e, 0.0);
            let sol = solve_complex_field(&p, &SolverConfig::for_width(l)).unwrap();
            let t = transmission_probability(&p.wave_numbers(), l);
            assert!((sol.trans_prob - t).abs() < 1e-8, "{v} {l} {e}");
            assert!((sol.refl_prob + sol.trans_prob - 1.0).abs() < 1e-8);
            assert_eq!(sol.fields.grid[0], 0.0);
            assert_eq!(*sol.fields.grid.last().unwrap(), l);
        }
    }

    #[test]
    fn free_propagation() {
        let p = problem(1e-12, 1.0, 2.0, 0.0);
        let sol = solve_complex_field(&p, &SolverConfig::for_width(1.0)).unwrap();
        assert!((sol.trans_amp - 1.0).norm() < 1e-9);
        assert!(sol.refl_amp.norm() < 1e-9);
        let k = 2.0;
        for (x, f) in sol.fields.grid.iter().zip(&sol.field) {
            assert!((f - Complex64::from_polar(1.0, k * x)).norm() < 1e-9);
        }
    }

    #[test]
    fn hydro_matches_analytic_without_dissipation() {
        for (v, l, e) in [(2.5, 1.0, 2.0), (4.0, 2.0, 0.5), (0.7, 0.6, 3.0)] {
            let p = problem(v, l, e, 0.0);
            let sol = solve_hydrodynamic(&p, &SolverConfig::for_width(l)).unwrap();
            let t = transmission_probability(&p.wave_numbers(), l);
            assert!((sol.trans_prob - t).abs() < 1e-8);
            assert!((sol.refl_prob + sol.trans_prob - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn hydro_at_resonance() {
        let well = SquareWell::new(25.0, 1.0).unwrap();
        let e3 = resonance_energy(&well, &PhysicalConstants::natural(), 3);
        let p = problem(25.0, 1.0, e3, 0.0);
        let sol = solve_hydrodynamic(&p, &SolverConfig::for_width(1.0)).unwrap();
        let k = p.wave_numbers().k;
        assert!((sol.fields.flux_const / k - 1.0).abs() < 1e-6);
        assert!((sol.fields.rho[0] - 1.0).abs() < 1e-6);
        assert!(sol.fields.drho[0].abs() < 1e-6);
    }

    #[test]
    fn conservation_along_dissipative_solution() {
        let p = problem(2.5, 1.0, 2.0, 1e-3);
        let g = p.dissipation_coeff();
        for sol in [
            solve_hydrodynamic(&p, &SolverConfig::for_width(1.0)).unwrap(),
            solve_complex_field(&p, &SolverConfig::for_width(1.0)).unwrap(),
        ] {
            assert!(sol.fields.conservation_residual(g) < 1e-6);
            assert!(sol.fields.flux_residual() < 1e-8);
            // the combination is not conserved without the ν-term
            assert!(sol.fields.conservation_residual(0.0) > 1e-6);
        }
    }

    #[test]
    fn transmission_through_i0_matches_flux() {
        use crate::bohm::transmission_from_i0;
        for nu in [0.0, 2e-3] {
            let p = problem(2.5, 1.0, 2.0, nu);
            let g = p.dissipation_coeff();
            let wn = p.wave_numbers();
            let sol = solve_hydrodynamic(&p, &SolverConfig::for_width(1.0)).unwrap();
            // I₀ taken at the far edge, then carried to x = 0
            let i0 = *sol.fields.conserved_combination(g).last().unwrap();
            let f = &sol.fields;
            let t2 = transmission_from_i0(i0, f.rho[0], f.phase[0], f.flux_const, wn.k, wn.q, g);
            assert!((t2 - sol.trans_prob).abs() < 1e-8, "{t2} vs {}", sol.trans_prob);
        }
    }

    #[test]
    fn dissipation_keeps_flux_balance() {
        // the dissipative term is real, so the current is still divergence-free
        let p = problem(2.5, 1.0, 2.0, 4e-3);
        let sol = solve_complex_field(&p, &SolverConfig::for_width(1.0)).unwrap();
        assert!(sol.flux_deficit.abs() < 1e-10, "{}", sol.flux_deficit);
        let t0 = transmission_probability(&p.wave_numbers(), 1.0);
        assert!((sol.trans_prob - t0).abs() > 1e-5);
    }

    #[test]
    fn formulations_agree() {
        for nu in [0.0, 1e-3] {
            let p = problem(2.5, 1.0, 2.0, nu);
            let cv = cross_validate(&p, &SolverConfig::for_width(1.0)).unwrap();
            assert!(cv.passed, "{:?}", cv.failure_summary());
        }
        let p = problem(1e-12, 1.0, 2.0, 0.0);
        let cv = cross_validate(&p, &SolverConfig::for_width(1.0)).unwrap();
        assert!((cv.complex.trans_prob - 1.0).abs() < 1e-9);
        assert!((cv.hydro.trans_prob - 1.0).abs() < 1e-9);
    }

    #[test]
    fn newton_is_fast_from_the_dissipationless_guess() {
        let p = problem(2.5, 1.0, 2.0, 2e-3);
        let sol = solve_complex_field(&p, &SolverConfig::for_width(1.0)).unwrap();
        assert!(sol.newton_iters <= 5);
        let h = &sol.residual_history;
        assert!(h.last().unwrap() <= &1e-12);
        // quadratic contraction: r_{i+1} <= c r_i² with a modest c
        for w in h.windows(2) {
            if w[0] > 1e-9 {
                assert!(w[1] <= 1e3 * w[0] * w[0] + 1e-13, "{h:?}");
            }
        }
    }

    #[test]
    fn non_convergence_is_reported() {
        let p = problem(2.5, 1.0, 2.0, 1e-3);
        let mut cfg = SolverConfig::for_width(1.0);
        cfg.max_newton_iters = 1;
        cfg.newton_tol = 1e-30;
        match solve_complex_field(&p, &cfg) {
            Err(Error::NonConvergence { iterations, residual }) => {
                assert_eq!(iterations, 1);
                assert!(residual > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn step_halving_is_fourth_order() {
        let p = problem(2.5, 1.0, 2.0, 1e-3);
        let t: Vec<f64> = [100.0, 200.0, 400.0]
            .iter()
            .map(|n| {
                let cfg = SolverConfig::for_width(1.0).with_step(1.0 / n);
                solve_hydrodynamic(&p, &cfg).unwrap().trans_prob
            })
            .collect();
        let ratio = (t[1] - t[0]).abs() / (t[2] - t[1]).abs();
        assert!((ratio - 16.0).abs() < 0.5, "{ratio}");
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn newton_from_zeroth_order_guess(e in 0.5f64..5.0, n in 1.01f64..5.0,
                                          l in 0.5f64..2.0, frac in 0.0f64..1.0) {
            let k = (2.0 * e).sqrt();
            // (2mν/ħk²)·kL ≤ 0.1
            let nu = frac * 0.05 * k / l;
            let p = problem(e * (n * n - 1.0), l, e, nu);
            let cfg = SolverConfig::for_width(l);
            let c = solve_complex_field(&p, &cfg).unwrap();
            let h = solve_hydrodynamic(&p, &cfg).unwrap();
            proptest::prop_assert!(c.newton_iters <= 5, "{:?}", c.residual_history);
            proptest::prop_assert!(h.newton_iters <= 5, "{:?}", h.residual_history);
            proptest::prop_assert!(c.flux_deficit.abs() < 1e-6);
        }
    }

    #[test]
    fn sup_rel_diff_basics() {
        assert_eq!(sup_rel_diff(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert!((sup_rel_diff(&[1.0, 2.2], &[1.0, 2.0]) - 0.1).abs() < 1e-12);
        assert!(sup_rel_diff(&[1.0], &[1.0, 2.0]).is_infinite());
    }
}
