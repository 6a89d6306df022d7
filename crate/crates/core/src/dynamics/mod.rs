//! Numerical Schrödinger-equation oracle for the damped two-level system.
//!
//! Two integration frames are offered. `RotatingFrame` keeps only the
//! co-rotating part of the coupling and works with amplitudes in the frame of
//! the field phase, `b = c_e exp(i(ω_g t + Φ_F))`:
//!
//! ```text
//! i ȧ_g = −iγ_g/2 a_g − Ω/2 b
//! i ḃ   = (Δω − ∂ₜφ − iγ_e/2) b − Ω/2 a_g
//! ```
//!
//! `FullField` keeps the literal `−μE(t)` coupling in the interaction
//! picture, so the counter-rotating terms are retained. Either way the
//! trajectory is reported as bare-basis amplitudes `(c_g, c_e)`.

mod dopri;

use thiserror::Error;

use crate::dressed::{DressedComponents, NadsError, NadsModel, SystemSpec};
use crate::field::{FieldError, PulseSpec};
use crate::numerics::{cumulative_trapezoid, is_strictly_increasing, pearson};
use crate::C64;

pub use dopri::Tolerances;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Default relative (and absolute) integrator tolerance.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Column-normalised condition number above which the NADS pair is treated
/// as degenerate.
pub const MAX_BASIS_CONDITION: f64 = 1e8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("integrator exceeded its step budget at t = {t}")]
    TooManySteps { t: f64 },
    #[error("tolerance must be > 0")]
    BadTolerance,
    #[error("initial state norm exceeds 1")]
    InitialNorm,
    #[error("time grid must have at least one point and be strictly increasing")]
    BadGrid,
    #[error("series length mismatch: {0}")]
    Length(String),
    #[error("degenerate NADS basis at t = {t} (condition number {condition:e})")]
    Degenerate { t: f64, condition: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Nads(#[from] NadsError),
}

impl From<dopri::SolveError> for DynamicsError {
    fn from(e: dopri::SolveError) -> Self {
        match e {
            dopri::SolveError::StepUnderflow { t, h } => DynamicsError::StepUnderflow { t, h },
            dopri::SolveError::TooManySteps { t } => DynamicsError::TooManySteps { t },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IntegrationMode {
    #[default]
    RotatingFrame,
    FullField,
}

impl IntegrationMode {
    pub fn name(self) -> &'static str {
        match self {
            IntegrationMode::RotatingFrame => "rotating-frame",
            IntegrationMode::FullField => "full-field",
        }
    }
}

impl std::str::FromStr for IntegrationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rotating-frame" => Ok(IntegrationMode::RotatingFrame),
            "full-field" => Ok(IntegrationMode::FullField),
            other => Err(format!("unknown integration mode '{other}'")),
        }
    }
}

/// Bare-basis amplitudes at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pub t: f64,
    pub c_g: C64,
    pub c_e: C64,
}

impl StateVector {
    pub fn ground(t: f64) -> Self {
        StateVector { t, c_g: C64::new(1.0, 0.0), c_e: C64::new(0.0, 0.0) }
    }

    pub fn excited(t: f64) -> Self {
        StateVector { t, c_g: C64::new(0.0, 0.0), c_e: C64::new(1.0, 0.0) }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c_g.norm_sqr() + self.c_e.norm_sqr()
    }

    pub fn amplitudes(&self) -> [C64; 2] {
        [self.c_g, self.c_e]
    }
}

/// Squared moduli `(p_g, p_e)`.
pub fn project_bare(state: &StateVector) -> (f64, f64) {
    (state.c_g.norm_sqr(), state.c_e.norm_sqr())
}

/// `|⟨v|ψ⟩|² / (⟨v|v⟩⟨ψ|ψ⟩)`.
pub fn fidelity(state: &StateVector, v: &[C64; 2]) -> f64 {
    let overlap = v[0].conj() * state.c_g + v[1].conj() * state.c_e;
    let nv = v[0].norm_sqr() + v[1].norm_sqr();
    overlap.norm_sqr() / (nv * state.norm_sqr())
}

/// Integrates the Schrödinger equation over `grid`, starting from `initial`
/// at `grid[0]` (its `t` field is ignored).
pub fn integrate(
    system: &SystemSpec,
    pulse: &PulseSpec,
    grid: &[f64],
    mode: IntegrationMode,
    tolerance: f64,
    initial: StateVector,
) -> Result<Vec<StateVector>, DynamicsError> {
    if !(tolerance > 0.0) {
        return Err(DynamicsError::BadTolerance);
    }
    if initial.norm_sqr() > 1.0 + 1e-12 {
        return Err(DynamicsError::InitialNorm);
    }
    if grid.is_empty() || !is_strictly_increasing(grid) {
        return Err(DynamicsError::BadGrid);
    }
    pulse.check_fd_order(1)?;
    let tol = Tolerances { rtol: tolerance, atol: tolerance, max_steps: 200_000_000 };
    let t0 = grid[0];
    let (wg, we) = (system.omega_g, system.omega_e);
    let (hg, he) = (0.5 * system.gamma_g, 0.5 * system.gamma_e);

    match mode {
        IntegrationMode::RotatingFrame => {
            let delta = crate::dressed::detuning(system, pulse);
            let y0 = [
                initial.c_g * (I * wg * t0).exp(),
                initial.c_e * (I * (wg * t0 + pulse.total_phase(t0))).exp(),
            ];
            let rhs = |t: f64, y: &[C64; 2]| {
                let half_rabi = 0.5 * pulse.envelope(t);
                let shift = delta - pulse.phase_derivative_unchecked(t, 1);
                [
                    -hg * y[0] + I * half_rabi * y[1],
                    C64::new(-he, -shift) * y[1] + I * half_rabi * y[0],
                ]
            };
            let sol = dopri::solve(rhs, grid, y0, tol)?;
            Ok(grid
                .iter()
                .zip(sol)
                .map(|(&t, y)| StateVector {
                    t,
                    c_g: y[0] * (-I * wg * t).exp(),
                    c_e: y[1] * (-I * (wg * t + pulse.total_phase(t))).exp(),
                })
                .collect())
        }
        IntegrationMode::FullField => {
            let split = we - wg;
            let y0 = [initial.c_g * (I * wg * t0).exp(), initial.c_e * (I * we * t0).exp()];
            let rhs = |t: f64, y: &[C64; 2]| {
                let coupling = pulse.field_value(t);
                let rot = (I * split * t).exp();
                [
                    -hg * y[0] + I * coupling * rot.conj() * y[1],
                    -he * y[1] + I * coupling * rot * y[0],
                ]
            };
            let sol = dopri::solve(rhs, grid, y0, tol)?;
            Ok(grid
                .iter()
                .zip(sol)
                .map(|(&t, y)| StateVector {
                    t,
                    c_g: y[0] * (-I * wg * t).exp(),
                    c_e: y[1] * (-I * we * t).exp(),
                })
                .collect())
        }
    }
}

/// Decomposition of a state onto the (generally non-orthogonal) NADS pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NadsProjection {
    pub a_ground: C64,
    pub a_excited: C64,
    pub p_g_real: f64,
    pub p_g_virtual: f64,
    pub p_e_real: f64,
    pub p_e_virtual: f64,
}

/// Solves `ψ = a_G |G̃⟩ + a_E |Ẽ⟩`. Component populations are the squared
/// moduli of the four component vectors, e.g. `|a_G · COS · G̃_r|²`.
pub fn project_nads(state: &StateVector, dressed: &DressedComponents) -> Result<NadsProjection, DynamicsError> {
    let g = dressed.ground_vector();
    let e = dressed.excited_vector();
    let condition = column_condition(&g, &e);
    if !(condition <= MAX_BASIS_CONDITION) {
        return Err(DynamicsError::Degenerate { t: dressed.t, condition });
    }
    let det = g[0] * e[1] - e[0] * g[1];
    let a_ground = (state.c_g * e[1] - e[0] * state.c_e) / det;
    let a_excited = (g[0] * state.c_e - g[1] * state.c_g) / det;
    Ok(NadsProjection {
        a_ground,
        a_excited,
        p_g_real: (a_ground * g[0]).norm_sqr(),
        p_g_virtual: (a_ground * g[1]).norm_sqr(),
        p_e_real: (a_excited * e[1]).norm_sqr(),
        p_e_virtual: (a_excited * e[0]).norm_sqr(),
    })
}

/// 2-norm condition number of `[u v]` after normalising both columns.
fn column_condition(u: &[C64; 2], v: &[C64; 2]) -> f64 {
    let nu = (u[0].norm_sqr() + u[1].norm_sqr()).sqrt();
    let nv = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    if nu == 0.0 || nv == 0.0 {
        return f64::INFINITY;
    }
    let (a, b) = ([u[0] / nu, u[1] / nu], [v[0] / nv, v[1] / nv]);
    // unit columns: σ_max² + σ_min² = 2, σ_max σ_min = |det|, σ_max² = 1 + |⟨a|b⟩|
    let det = (a[0] * b[1] - b[0] * a[1]).norm();
    let overlap = (a[0].conj() * b[0] + a[1].conj() * b[1]).norm();
    if det == 0.0 {
        return f64::INFINITY;
    }
    (1.0 + overlap) / det
}

/// Population time series on a common grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PopulationSeries {
    pub times: Vec<f64>,
    pub p_bare_g: Vec<f64>,
    pub p_bare_e: Vec<f64>,
    pub p_g_real: Vec<f64>,
    pub p_g_virtual: Vec<f64>,
    pub p_e_real: Vec<f64>,
    pub p_e_virtual: Vec<f64>,
    /// Ω²(t).
    pub intensity: Vec<f64>,
    /// ∫Ω² dt from the first grid point.
    pub integrated_intensity: Vec<f64>,
}

impl PopulationSeries {
    fn with_intensity(pulse: &PulseSpec, times: &[f64]) -> Self {
        let intensity: Vec<f64> = times.iter().map(|&t| pulse.envelope(t).powi(2)).collect();
        let integrated_intensity = cumulative_trapezoid(times, &intensity);
        PopulationSeries { times: times.to_vec(), intensity, integrated_intensity, ..Default::default() }
    }

    /// Bare and NADS-component populations of a TDSE trajectory.
    pub fn from_trajectory(
        pulse: &PulseSpec,
        trajectory: &[StateVector],
        dressed: &[DressedComponents],
    ) -> Result<Self, DynamicsError> {
        if trajectory.len() != dressed.len() {
            return Err(DynamicsError::Length(format!(
                "{} trajectory points vs {} dressed points",
                trajectory.len(),
                dressed.len()
            )));
        }
        let times: Vec<f64> = trajectory.iter().map(|s| s.t).collect();
        let mut s = Self::with_intensity(pulse, &times);
        for (state, comp) in trajectory.iter().zip(dressed) {
            let (pg, pe) = project_bare(state);
            let proj = project_nads(state, comp)?;
            s.p_bare_g.push(pg);
            s.p_bare_e.push(pe);
            s.p_g_real.push(proj.p_g_real);
            s.p_g_virtual.push(proj.p_g_virtual);
            s.p_e_real.push(proj.p_e_real);
            s.p_e_virtual.push(proj.p_e_virtual);
        }
        Ok(s)
    }

    /// Incoherent mixture of the two NADS: the system occupies the excited
    /// NADS with probability `p_excited[i]` and the ground NADS otherwise,
    /// each split into real and virtual parts by the normalised mixing
    /// weights `|COS|²`, `|SIN|²`.
    pub fn from_occupancy(model: &NadsModel, times: &[f64], p_excited: &[f64]) -> Result<Self, DynamicsError> {
        if times.len() != p_excited.len() {
            return Err(DynamicsError::Length(format!(
                "{} grid points vs {} occupancies",
                times.len(),
                p_excited.len()
            )));
        }
        let q = model.quantities_series(times)?;
        let mut s = Self::with_intensity(&model.pulse, times);
        for (qi, &pe) in q.iter().zip(p_excited) {
            let (c2, s2) = (qi.cos_half.norm_sqr(), qi.sin_half.norm_sqr());
            let (wr, wv) = (c2 / (c2 + s2), s2 / (c2 + s2));
            let pg = 1.0 - pe;
            s.p_g_real.push(pg * wr);
            s.p_g_virtual.push(pg * wv);
            s.p_e_real.push(pe * wr);
            s.p_e_virtual.push(pe * wv);
            s.p_bare_g.push(pg * wr + pe * wv);
            s.p_bare_e.push(pg * wv + pe * wr);
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Coherent/incoherent signatures of a population series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceDiagnostics {
    /// Pearson correlation of the virtual ground population with Ω².
    pub r_coherent: f64,
    /// Pearson correlation of the real excited population with ∫Ω² dt.
    pub r_incoherent: f64,
    /// `max p_G_virtual / max p_E_real`; `+∞` when `p_E_real ≡ 0`.
    pub peak_ratio: f64,
}

pub fn coherence_diagnostics(series: &PopulationSeries) -> CoherenceDiagnostics {
    let r_coherent = pearson(&series.p_g_virtual, &series.intensity);
    let r_incoherent = pearson(&series.p_e_real, &series.integrated_intensity);
    let peak_v = series.p_g_virtual.iter().cloned().fold(0.0, f64::max);
    let peak_r = series.p_e_real.iter().cloned().fold(0.0, f64::max);
    let peak_ratio = if peak_r == 0.0 { f64::INFINITY } else { peak_v / peak_r };
    CoherenceDiagnostics { r_coherent, r_incoherent, peak_ratio }
}
