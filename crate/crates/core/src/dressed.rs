//! Nonadiabatic dressed states of the driven, damped two-level system.
//!
//! All quantities are evaluated in closed form from the field's derivative
//! stack. With `g(t) = ∂ₜφ − iΩ⁻¹∂ₜΩ` and `Γ = γ_g + γ_e`:
//!
//! ```text
//! Δω̃′ = Δω − iΓ/2 − g
//! Ω̃′  = ±[Ω² + Δω̃′² − 2i ∂ₜΔω̃′]^{1/2}
//! Λ₁,₂ = (Δω̃′ ± Ω̃′)/2,   Λ̃′ⱼ = Λⱼ − i ∂ₜΩ̃′ / (2Ω̃′)
//! COS(θ/2) = √(Λ̃′₁/Ω̃′),   SIN(θ/2) = sgn(Δω) √(−Λ̃′₂/Ω̃′)
//! ω̃′_G = ω_g + Λ₂,         ω̃′_E = ω_e − Λ₂ − iΓ/2 − g
//! ```
//!
//! `∂ₜΔω̃′` and `∂ₜΩ̃′` follow from the chain rule, so the time derivatives
//! of Ω up to third order and of φ up to third order enter.
//!
//! Complex square roots take the principal branch; along a grid the sign is
//! chosen to stay closest to the previous sample.

use thiserror::Error;

use crate::field::{FieldError, PulseSpec};
use crate::numerics::{cumulative_trapezoid_c, is_strictly_increasing, nearest_sign};
use crate::C64;

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NadsError {
    #[error("Ω⁻¹∂ₜΩ diverges at t = {t} (field below the envelope floor)")]
    Divergent { t: f64 },
    #[error("degenerate point at t = {t}: |Ω̃′| = {magnitude:e} below threshold")]
    Degenerate { t: f64, magnitude: f64 },
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("time grid must be nonempty and strictly increasing")]
    BadGrid,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Bare two-level system with non-Hermitian damping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemSpec {
    pub omega_g: f64,
    pub omega_e: f64,
    pub gamma_g: f64,
    pub gamma_e: f64,
}

impl SystemSpec {
    pub fn new(omega_g: f64, omega_e: f64, gamma_g: f64, gamma_e: f64) -> Result<Self, NadsError> {
        let s = SystemSpec { omega_g, omega_e, gamma_g, gamma_e };
        s.validate()?;
        Ok(s)
    }

    /// Undamped system with the given bare splitting, ground at zero.
    pub fn undamped(splitting: f64) -> Self {
        SystemSpec { omega_g: 0.0, omega_e: splitting, gamma_g: 0.0, gamma_e: 0.0 }
    }

    pub fn with_damping(mut self, gamma_g: f64, gamma_e: f64) -> Self {
        self.gamma_g = gamma_g;
        self.gamma_e = gamma_e;
        self
    }

    pub fn validate(&self) -> Result<(), NadsError> {
        if !(self.omega_e > self.omega_g) {
            return Err(NadsError::InvalidSystem("omega_e must exceed omega_g".into()));
        }
        if !(self.gamma_g >= 0.0) || !(self.gamma_e >= 0.0) {
            return Err(NadsError::InvalidSystem("damping rates must be ≥ 0".into()));
        }
        Ok(())
    }

    pub fn splitting(&self) -> f64 {
        self.omega_e - self.omega_g
    }

    pub fn total_damping(&self) -> f64 {
        self.gamma_g + self.gamma_e
    }
}

/// Δω = ω_e − ω_g − ω.
pub fn detuning(system: &SystemSpec, pulse: &PulseSpec) -> f64 {
    system.omega_e - system.omega_g - pulse.carrier
}

/// sgn with sgn(0) = +1.
pub fn sign_of(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Form of the excited dressed frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExcitedForm {
    /// `ω_e − Λ₂ − iΓ/2 − g`, as derived; identical to `ω_g + ω + Λ₁`.
    #[default]
    AsPrinted,
    /// `ω_e − Λ₂`, mirroring the ground form. Not physically motivated;
    /// kept for comparison.
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NadsOptions {
    pub excited_form: ExcitedForm,
    /// `|Ω̃′| < degeneracy_rel · max(|Δω|, Ω₀)` is a level-crossing degeneracy.
    pub degeneracy_rel: f64,
    /// Drop every nonadiabatic factor (ADS limit).
    pub adiabatic: bool,
}

impl Default for NadsOptions {
    fn default() -> Self {
        NadsOptions { excited_form: ExcitedForm::AsPrinted, degeneracy_rel: 1e-10, adiabatic: false }
    }
}

/// All complex nonadiabatic scalars at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NadsQuantities {
    pub t: f64,
    pub delta: f64,
    pub delta_na: C64,
    pub rabi_na: C64,
    /// `∂ₜΩ̃′`, consistent with the branch of `rabi_na`.
    pub rabi_na_rate: C64,
    pub lambda1: C64,
    pub lambda2: C64,
    pub lambda1_na: C64,
    pub lambda2_na: C64,
    pub omega_ground: C64,
    pub omega_excited: C64,
    pub cos_half: C64,
    pub sin_half: C64,
}

/// Real and virtual components of both NADS at one grid point, as bare-basis
/// amplitudes carrying their accumulated phases (mixing coefficients not
/// included; see [`DressedComponents::ground_vector`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressedComponents {
    pub t: f64,
    /// `|G̃_r⟩`, along `|g⟩`.
    pub g_real: C64,
    /// `|G̃_v⟩`, along `|e⟩`.
    pub g_virtual: C64,
    /// `|Ẽ_r⟩`, along `|e⟩`.
    pub e_real: C64,
    /// `|Ẽ_v⟩`, along `|g⟩`.
    pub e_virtual: C64,
    pub phase_g: C64,
    pub phase_gv: C64,
    pub phase_e: C64,
    pub phase_ev: C64,
    pub cos_half: C64,
    pub sin_half: C64,
}

impl DressedComponents {
    /// `|G̃⟩ = COS |G̃_r⟩ + SIN |G̃_v⟩` as `(c_g, c_e)`.
    pub fn ground_vector(&self) -> [C64; 2] {
        [self.cos_half * self.g_real, self.sin_half * self.g_virtual]
    }

    /// `|Ẽ⟩ = COS |Ẽ_r⟩ − SIN |Ẽ_v⟩` as `(c_g, c_e)`.
    pub fn excited_vector(&self) -> [C64; 2] {
        [-self.sin_half * self.e_virtual, self.cos_half * self.e_real]
    }
}

/// Field quantities entering the NADS at one instant.
struct Jet {
    omega: [f64; 2],
    /// g, g′, g″
    g: [C64; 3],
}

/// A system + pulse pair with evaluation options.
#[derive(Debug, Clone, PartialEq)]
pub struct NadsModel {
    pub system: SystemSpec,
    pub pulse: PulseSpec,
    pub options: NadsOptions,
}

impl NadsModel {
    pub fn new(system: SystemSpec, pulse: PulseSpec) -> Self {
        NadsModel { system, pulse, options: NadsOptions::default() }
    }

    pub fn with_options(mut self, options: NadsOptions) -> Self {
        self.options = options;
        self
    }

    /// The ADS reduction: same system and pulse with all nonadiabatic
    /// factors (field derivatives, damping) removed.
    pub fn adiabatic(&self) -> Self {
        let mut m = self.clone();
        m.options.adiabatic = true;
        m
    }

    pub fn detuning(&self) -> f64 {
        detuning(&self.system, &self.pulse)
    }

    fn jet(&self, t: f64) -> Result<Jet, NadsError> {
        let p = &self.pulse;
        let omega = [p.envelope(t), p.envelope_derivative(t, 1)];
        if self.options.adiabatic || p.is_absent() {
            return Ok(Jet { omega, g: [C64::new(0.0, 0.0); 3] });
        }
        let u = p.log_derivative_stack(t, 2).ok_or(NadsError::Divergent { t })?;
        let mut g = [C64::new(0.0, 0.0); 3];
        for (k, slot) in g.iter_mut().enumerate() {
            *slot = C64::new(p.phase_derivative(t, k + 1)?, -u[k]);
        }
        Ok(Jet { omega, g })
    }

    fn damping(&self) -> f64 {
        if self.options.adiabatic {
            0.0
        } else {
            self.system.total_damping()
        }
    }

    /// `g(t) = ∂ₜφ − iΩ⁻¹∂ₜΩ`.
    pub fn nonadiabatic_function(&self, t: f64) -> Result<C64, NadsError> {
        Ok(self.jet(t)?.g[0])
    }

    /// Δω̃′ at `t`.
    pub fn nonadiabatic_detuning(&self, t: f64) -> Result<C64, NadsError> {
        let jet = self.jet(t)?;
        Ok(C64::new(self.detuning(), -0.5 * self.damping()) - jet.g[0])
    }

    /// Ω̃′ at `t`. With `previous`, the sign closest to it is taken;
    /// otherwise `sgn(Δω)` times the principal root.
    pub fn nonadiabatic_rabi(&self, t: f64, previous: Option<C64>) -> Result<C64, NadsError> {
        let jet = self.jet(t)?;
        let (rabi, _) = self.rabi_with_rate(&jet, previous);
        Ok(rabi)
    }

    fn rabi_with_rate(&self, jet: &Jet, previous: Option<C64>) -> (C64, C64) {
        let delta_na = C64::new(self.detuning(), -0.5 * self.damping()) - jet.g[0];
        let (d1, d2) = (-jet.g[1], -jet.g[2]);
        let [om, om1] = jet.omega;
        let square = om * om + delta_na * delta_na - 2.0 * I * d1;
        let root = square.sqrt();
        let rabi = match previous {
            Some(prev) => nearest_sign(root, prev),
            None => root * sign_of(self.detuning()),
        };
        if self.options.adiabatic || rabi == C64::new(0.0, 0.0) {
            return (rabi, C64::new(0.0, 0.0));
        }
        let square_rate = 2.0 * om * om1 + 2.0 * delta_na * d1 - 2.0 * I * d2;
        (rabi, square_rate / (2.0 * rabi))
    }

    fn degeneracy_threshold(&self) -> f64 {
        self.options.degeneracy_rel * self.detuning().abs().max(self.pulse.peak_rabi)
    }

    /// Full set of quantities at `t`. `previous` carries branch continuity
    /// for Ω̃′ and the mixing pair.
    pub fn quantities(&self, t: f64, previous: Option<&NadsQuantities>) -> Result<NadsQuantities, NadsError> {
        let jet = self.jet(t)?;
        let delta = self.detuning();
        let gamma = self.damping();
        let delta_na = C64::new(delta, -0.5 * gamma) - jet.g[0];
        let (rabi_na, rabi_na_rate) = self.rabi_with_rate(&jet, previous.map(|q| q.rabi_na));
        let magnitude = rabi_na.norm();
        if magnitude == 0.0 || magnitude < self.degeneracy_threshold() {
            return Err(NadsError::Degenerate { t, magnitude });
        }
        let lambda1 = 0.5 * (delta_na + rabi_na);
        let lambda2 = 0.5 * (delta_na - rabi_na);
        let correction = -I * rabi_na_rate / (2.0 * rabi_na);
        let lambda1_na = lambda1 + correction;
        let lambda2_na = lambda2 + correction;

        let mut cos_half = (lambda1_na / rabi_na).sqrt();
        let mut sin_half = (-lambda2_na / rabi_na).sqrt() * sign_of(delta);
        if let Some(prev) = previous {
            cos_half = nearest_sign(cos_half, prev.cos_half);
            sin_half = nearest_sign(sin_half, prev.sin_half);
        }

        let omega_ground = self.system.omega_g + lambda2;
        let omega_excited = match self.options.excited_form {
            ExcitedForm::AsPrinted => self.system.omega_e - lambda2 - I * (0.5 * gamma) - jet.g[0],
            ExcitedForm::Symmetric => self.system.omega_e - lambda2,
        };

        Ok(NadsQuantities {
            t,
            delta,
            delta_na,
            rabi_na,
            rabi_na_rate,
            lambda1,
            lambda2,
            lambda1_na,
            lambda2_na,
            omega_ground,
            omega_excited,
            cos_half,
            sin_half,
        })
    }

    /// `(Λ₁, Λ₂, Λ̃′₁, Λ̃′₂)`.
    pub fn lambdas(&self, t: f64) -> Result<[C64; 4], NadsError> {
        let q = self.quantities(t, None)?;
        Ok([q.lambda1, q.lambda2, q.lambda1_na, q.lambda2_na])
    }

    /// `(COS(θ/2), SIN(θ/2))`.
    pub fn mixing(&self, t: f64) -> Result<(C64, C64), NadsError> {
        let q = self.quantities(t, None)?;
        Ok((q.cos_half, q.sin_half))
    }

    /// `(ω̃′_G, ω̃′_E)`.
    pub fn dressed_frequencies(&self, t: f64) -> Result<(C64, C64), NadsError> {
        let q = self.quantities(t, None)?;
        Ok((q.omega_ground, q.omega_excited))
    }

    /// Branch-continuous quantities along a strictly increasing grid.
    pub fn quantities_series(&self, grid: &[f64]) -> Result<Vec<NadsQuantities>, NadsError> {
        if grid.is_empty() || !is_strictly_increasing(grid) {
            return Err(NadsError::BadGrid);
        }
        let mut out: Vec<NadsQuantities> = Vec::with_capacity(grid.len());
        for &t in grid {
            let q = self.quantities(t, out.last())?;
            out.push(q);
        }
        Ok(out)
    }

    /// Real and virtual components of both NADS along `grid`.
    ///
    /// Phase integrals of ω̃′ run from `grid[0]` by the trapezoidal rule; the
    /// carrier enters as the exact `ω t` so that components keep the
    /// `exp(−iΦ_F)` relation to the field regardless of where the grid starts.
    pub fn construct(&self, grid: &[f64]) -> Result<Vec<DressedComponents>, NadsError> {
        let series = self.quantities_series(grid)?;
        let wg: Vec<C64> = series.iter().map(|q| q.omega_ground).collect();
        let we: Vec<C64> = series.iter().map(|q| q.omega_excited).collect();
        let int_g = cumulative_trapezoid_c(grid, &wg);
        let int_e = cumulative_trapezoid_c(grid, &we);
        let omega = self.pulse.carrier;
        let out = series
            .iter()
            .enumerate()
            .map(|(i, q)| {
                let t = grid[i];
                let phi = self.pulse.phase(t);
                let phase_g = int_g[i];
                let phase_gv = int_g[i] + omega * t + phi;
                let phase_e = int_e[i] + phi;
                let phase_ev = int_e[i] - omega * t;
                DressedComponents {
                    t,
                    g_real: (-I * phase_g).exp(),
                    g_virtual: (-I * phase_gv).exp(),
                    e_real: (-I * phase_e).exp(),
                    e_virtual: (-I * phase_ev).exp(),
                    phase_g,
                    phase_gv,
                    phase_e,
                    phase_ev,
                    cos_half: q.cos_half,
                    sin_half: q.sin_half,
                }
            })
            .collect();
        Ok(out)
    }

    /// Ground NADS `|G̃(t)⟩` as bare amplitudes `(c_g, c_e)` over `grid`.
    pub fn construct_ground(&self, grid: &[f64]) -> Result<Vec<[C64; 2]>, NadsError> {
        Ok(self.construct(grid)?.iter().map(DressedComponents::ground_vector).collect())
    }

    /// Excited NADS `|Ẽ(t)⟩` as bare amplitudes `(c_g, c_e)` over `grid`.
    pub fn construct_excited(&self, grid: &[f64]) -> Result<Vec<[C64; 2]>, NadsError> {
        Ok(self.construct(grid)?.iter().map(DressedComponents::excited_vector).collect())
    }
}

/// ADS quantities: the NADS formulas with `∂ₜφ`, `Ω⁻¹∂ₜΩ`, `∂ₜΔω̃′`,
/// `∂ₜΩ̃′`, `γ_g` and `γ_e` set to zero.
pub fn reduce_to_ads(system: &SystemSpec, pulse: &PulseSpec, t: f64) -> Result<NadsQuantities, NadsError> {
    NadsModel::new(*system, pulse.clone()).adiabatic().quantities(t, None)
}
