//! Problem definition shared by every solver: constants, the well, the
//! incident energy and the dissipation constant.
//!
//! The well is stored by its (positive) depth `V`; the potential is `-V` on
//! `0 < x < L` and zero elsewhere. The stationary time factor `e^{-iωt}` is
//! implied by the energy through `ω = E/ħ` and is never stored.

use serde::Serialize;

use crate::error::{Error, Result};

/// `ħ` and the particle mass. Defaults to natural units `ħ = m = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalConstants {
    hbar: f64,
    mass: f64,
}

impl PhysicalConstants {
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        positive("hbar", hbar)?;
        positive("mass", mass)?;
        Ok(Self { hbar, mass })
    }

    pub const fn natural() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
        }
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `2m/ħ²`, the factor turning an energy into a squared wave number.
    pub fn energy_to_k2(&self) -> f64 {
        2.0 * self.mass / (self.hbar * self.hbar)
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::natural()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SquareWell {
    depth: f64,
    width: f64,
}

impl SquareWell {
    pub fn new(depth: f64, width: f64) -> Result<Self> {
        positive("depth", depth)?;
        positive("width", width)?;
        Ok(Self { depth, width })
    }

    /// Well depth `V` (the interior potential is `-V`).
    pub fn depth(&self) -> f64 {
        self.depth
    }

    /// Well width `L`.
    pub fn width(&self) -> f64 {
        self.width
    }

    /// Potential energy at `x`.
    pub fn potential(&self, x: f64) -> f64 {
        if x > 0.0 && x < self.width {
            -self.depth
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScatteringProblem {
    well: SquareWell,
    energy: f64,
    nu: f64,
    constants: PhysicalConstants,
}

impl ScatteringProblem {
    pub fn new(
        well: SquareWell,
        energy: f64,
        nu: f64,
        constants: PhysicalConstants,
    ) -> Result<Self> {
        positive("energy", energy)?;
        if !(nu >= 0.0) || !nu.is_finite() {
            return Err(Error::param("nu", nu, "must be finite and >= 0"));
        }
        Ok(Self {
            well,
            energy,
            nu,
            constants,
        })
    }

    /// Natural units, `ħ = m = 1`.
    pub fn natural(depth: f64, width: f64, energy: f64, nu: f64) -> Result<Self> {
        Self::new(
            SquareWell::new(depth, width)?,
            energy,
            nu,
            PhysicalConstants::natural(),
        )
    }

    pub fn well(&self) -> SquareWell {
        self.well
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn constants(&self) -> PhysicalConstants {
        self.constants
    }

    pub fn width(&self) -> f64 {
        self.well.width
    }

    pub fn depth(&self) -> f64 {
        self.well.depth
    }

    /// Same problem with a different dissipation constant.
    pub fn with_nu(&self, nu: f64) -> Result<Self> {
        Self::new(self.well, self.energy, nu, self.constants)
    }

    /// Same problem at a different incident energy.
    pub fn with_energy(&self, energy: f64) -> Result<Self> {
        Self::new(self.well, energy, self.nu, self.constants)
    }

    /// `2mν/ħ`: coefficient of the phase in the stationary Kostin equation
    /// `Φ'' + [q² - (2mν/ħ) S] Φ = 0`.
    pub fn dissipation_coeff(&self) -> f64 {
        2.0 * self.constants.mass * self.nu / self.constants.hbar
    }

    pub fn wave_numbers(&self) -> WaveNumbers {
        WaveNumbers::compute(self.energy, self.well.depth, self.constants)
    }
}

/// Outside (`k`) and inside (`q`) wave numbers and their ratio `n = q/k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveNumbers {
    pub k: f64,
    pub q: f64,
    pub n: f64,
    /// `n² - 1 = V/E`, kept separately so shallow wells do not lose it to
    /// cancellation.
    pub contrast: f64,
}

impl WaveNumbers {
    /// Validating constructor from the physical inputs.
    pub fn from_energy(energy: f64, depth: f64, constants: PhysicalConstants) -> Result<Self> {
        positive("energy", energy)?;
        positive("depth", depth)?;
        Ok(Self::compute(energy, depth, constants))
    }

    fn compute(energy: f64, depth: f64, constants: PhysicalConstants) -> Self {
        let c = constants.energy_to_k2();
        let k = (c * energy).sqrt();
        let q = (c * (energy + depth)).sqrt();
        Self {
            k,
            q,
            n: q / k,
            contrast: depth / energy,
        }
    }

    /// `(k² - q²) / (2kq)`, the factor multiplying `sin(qL)` in the
    /// reflection amplitude.
    pub fn mismatch(&self) -> f64 {
        // k² - q² = -k²(n² - 1)
        -self.k * self.k * self.contrast / (2.0 * self.k * self.q)
    }
}

/// Convenience wrapper returning the wave numbers of a problem.
pub fn wave_numbers(problem: &ScatteringProblem) -> WaveNumbers {
    problem.wave_numbers()
}

fn positive(field: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::param(field, value, "must be finite and > 0"))
    }
}
