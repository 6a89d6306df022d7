//! Driving field in carrier-envelope form.
//!
//! The field is `E(t) = Ω(t) cos(ω t + φ(t))` with the amplitude already
//! expressed as a Rabi frequency (dipole moment and field strength folded
//! together, ħ = 1). Envelopes provide closed-form derivatives to any order;
//! tabulated phase profiles fall back to central finite differences.

use std::f64::consts::PI;

use thiserror::Error;

use crate::numerics::binomial;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("invalid pulse: {0}")]
    Invalid(String),
    #[error(
        "finite-difference derivative of order {order} with step {step} spans {span}, \
         wider than the support window ({window})"
    )]
    FiniteDifferenceSpan { order: usize, step: f64, span: f64, window: f64 },
}

/// Envelope family. All shapes are centred on `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum Envelope {
    ConstantWave,
    /// `Ω₀ exp(−t²/τ²)`.
    Gaussian,
    /// `Ω₀ sech(t/τ)`.
    Sech,
    /// Plateau of length `duration` centred on zero with `sin²` ramps of
    /// length `ramp` on either side.
    FlatTop { ramp: f64 },
}

impl Envelope {
    pub fn name(&self) -> &'static str {
        match self {
            Envelope::ConstantWave => "constant-wave",
            Envelope::Gaussian => "gaussian",
            Envelope::Sech => "sech",
            Envelope::FlatTop { .. } => "flat-top",
        }
    }
}

/// Sampled phase profile, linearly interpolated and clamped at the ends.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTable {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl PhaseTable {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self, FieldError> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(FieldError::Invalid("phase table needs at least two (t, φ) pairs".into()));
        }
        if !crate::numerics::is_strictly_increasing(&times) {
            return Err(FieldError::Invalid("phase table times must be strictly increasing".into()));
        }
        Ok(PhaseTable { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        let i = self.times.partition_point(|&x| x <= t) - 1;
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let w = (t - t0) / (t1 - t0);
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }
}

/// Parametric driving pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSpec {
    pub shape: Envelope,
    /// Peak Rabi frequency Ω₀.
    pub peak_rabi: f64,
    /// 1/e half-width τ (gaussian, sech) or plateau length (flat-top).
    pub duration: f64,
    /// Carrier angular frequency ω.
    pub carrier: f64,
    pub phase_offset: f64,
    /// Linear chirp coefficient `b` in `φ(t) = φ₀ + b t²/2`.
    pub chirp_rate: f64,
    pub t_on: f64,
    pub t_off: f64,
    /// Optional tabulated phase added on top of the chirp model.
    pub phase_table: Option<PhaseTable>,
    /// Step for finite-difference derivatives of tabulated phases.
    pub fd_step: f64,
    /// Envelope floor for the log-derivative, relative to `peak_rabi`.
    pub floor_rel: f64,
}

/// Result of `Ω⁻¹ ∂ₜΩ`; the field-off singularity is reported, not computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogDerivative {
    Finite(f64),
    Divergent,
}

impl LogDerivative {
    pub fn finite(self) -> Option<f64> {
        match self {
            LogDerivative::Finite(v) => Some(v),
            LogDerivative::Divergent => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub t: f64,
    pub envelope: f64,
    pub phase: f64,
    pub total_phase: f64,
    pub field_value: f64,
}

pub const DEFAULT_FLOOR_REL: f64 = 1e-12;

impl PulseSpec {
    fn with_shape(shape: Envelope, peak_rabi: f64, duration: f64) -> Self {
        PulseSpec {
            shape,
            peak_rabi,
            duration,
            carrier: 0.0,
            phase_offset: 0.0,
            chirp_rate: 0.0,
            t_on: f64::NEG_INFINITY,
            t_off: f64::INFINITY,
            phase_table: None,
            fd_step: duration * 1e-3,
            floor_rel: DEFAULT_FLOOR_REL,
        }
    }

    /// Constant-wave field, on for all time unless a window is set.
    pub fn constant(peak_rabi: f64) -> Self {
        Self::with_shape(Envelope::ConstantWave, peak_rabi, 1.0)
    }

    pub fn gaussian(peak_rabi: f64, tau: f64) -> Self {
        Self::with_shape(Envelope::Gaussian, peak_rabi, tau)
    }

    pub fn sech(peak_rabi: f64, tau: f64) -> Self {
        Self::with_shape(Envelope::Sech, peak_rabi, tau)
    }

    pub fn flat_top(peak_rabi: f64, plateau: f64, ramp: f64) -> Self {
        let mut p = Self::with_shape(Envelope::FlatTop { ramp }, peak_rabi, plateau);
        p.t_on = -0.5 * plateau - ramp;
        p.t_off = 0.5 * plateau + ramp;
        p
    }

    pub fn with_carrier(mut self, carrier: f64) -> Self {
        self.carrier = carrier;
        self
    }

    pub fn with_chirp(mut self, chirp_rate: f64) -> Self {
        self.chirp_rate = chirp_rate;
        self
    }

    pub fn with_phase_offset(mut self, phase_offset: f64) -> Self {
        self.phase_offset = phase_offset;
        self
    }

    pub fn with_window(mut self, t_on: f64, t_off: f64) -> Self {
        self.t_on = t_on;
        self.t_off = t_off;
        self
    }

    pub fn with_phase_table(mut self, table: PhaseTable) -> Self {
        self.phase_table = Some(table);
        self
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        let bad = |m: &str| Err(FieldError::Invalid(m.to_string()));
        if !(self.peak_rabi >= 0.0) || !self.peak_rabi.is_finite() {
            return bad("peak_rabi must be finite and ≥ 0");
        }
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return bad("duration must be finite and > 0");
        }
        if !(self.t_on < self.t_off) {
            return bad("t_on must be < t_off");
        }
        if let Envelope::FlatTop { ramp } = self.shape {
            if !(ramp >= 0.0) || !ramp.is_finite() {
                return bad("flat-top ramp must be finite and ≥ 0");
            }
        }
        if !(self.fd_step > 0.0) {
            return bad("fd_step must be > 0");
        }
        if !(self.floor_rel >= 0.0) {
            return bad("floor_rel must be ≥ 0");
        }
        for (name, v) in [
            ("carrier", self.carrier),
            ("phase_offset", self.phase_offset),
            ("chirp_rate", self.chirp_rate),
        ] {
            if !v.is_finite() {
                return Err(FieldError::Invalid(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    /// Zero amplitude: no field, hence no meaningful phase.
    pub fn is_absent(&self) -> bool {
        self.peak_rabi == 0.0
    }

    pub fn in_window(&self, t: f64) -> bool {
        t >= self.t_on && t <= self.t_off
    }

    /// Envelope floor ε_Ω below which `Ω⁻¹∂ₜΩ` is treated as divergent.
    pub fn envelope_floor(&self) -> f64 {
        self.floor_rel * self.peak_rabi
    }

    /// Ω(t).
    pub fn envelope(&self, t: f64) -> f64 {
        self.envelope_derivative(t, 0)
    }

    /// `∂ₜⁿ Ω(t)`; `n = 0` is the envelope itself. Closed form for every shape.
    pub fn envelope_derivative(&self, t: f64, n: usize) -> f64 {
        if !self.in_window(t) || self.peak_rabi == 0.0 {
            return 0.0;
        }
        let tau = self.duration;
        let amp = self.peak_rabi;
        match self.shape {
            Envelope::ConstantWave => {
                if n == 0 {
                    amp
                } else {
                    0.0
                }
            }
            Envelope::Gaussian => {
                let x = t / tau;
                let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
                amp * sign * hermite(n, x) * (-x * x).exp() / tau.powi(n as i32)
            }
            Envelope::Sech => {
                let x = t / tau;
                let u = x.tanh();
                let sech = 1.0 / x.cosh();
                amp * sech * sech_polynomial(n, u) / tau.powi(n as i32)
            }
            Envelope::FlatTop { ramp } => {
                let half = 0.5 * tau;
                if t.abs() <= half {
                    return if n == 0 { amp } else { 0.0 };
                }
                if ramp == 0.0 || t.abs() > half + ramp {
                    return 0.0;
                }
                // Ω₀ (1 − cos(π s))/2 with s the ramp coordinate rising from the foot.
                let (s, ds_dt) = if t < 0.0 {
                    ((t + half + ramp) / ramp, 1.0 / ramp)
                } else {
                    ((half + ramp - t) / ramp, -1.0 / ramp)
                };
                let arg = PI * s + n as f64 * 0.5 * PI;
                if n == 0 {
                    0.5 * amp * (1.0 - arg.cos())
                } else {
                    -0.5 * amp * (PI * ds_dt).powi(n as i32) * arg.cos()
                }
            }
        }
    }

    /// φ(t), the slowly varying phase.
    pub fn phase(&self, t: f64) -> f64 {
        let table = self.phase_table.as_ref().map_or(0.0, |tab| tab.eval(t));
        self.phase_offset + 0.5 * self.chirp_rate * t * t + table
    }

    /// Φ_F(t) = ω t + φ(t).
    pub fn total_phase(&self, t: f64) -> f64 {
        self.carrier * t + self.phase(t)
    }

    /// Real field in Rabi units, `Ω(t) cos Φ_F(t)`.
    pub fn field_value(&self, t: f64) -> f64 {
        self.envelope(t) * self.total_phase(t).cos()
    }

    pub fn sample(&self, t: f64) -> FieldSample {
        let envelope = self.envelope(t);
        let phase = self.phase(t);
        let total_phase = self.carrier * t + phase;
        FieldSample { t, envelope, phase, total_phase, field_value: envelope * total_phase.cos() }
    }

    /// Checks that a finite-difference derivative of order `n` fits in the
    /// support window. Only tabulated phases use finite differences.
    pub fn check_fd_order(&self, n: usize) -> Result<(), FieldError> {
        if self.phase_table.is_none() || n == 0 {
            return Ok(());
        }
        let span = self.fd_step * n as f64;
        let window = self.t_off - self.t_on;
        if span > window {
            return Err(FieldError::FiniteDifferenceSpan { order: n, step: self.fd_step, span, window });
        }
        Ok(())
    }

    /// `∂ₜⁿ φ(t)`.
    pub fn phase_derivative(&self, t: f64, n: usize) -> Result<f64, FieldError> {
        self.check_fd_order(n)?;
        Ok(self.phase_derivative_unchecked(t, n))
    }

    pub(crate) fn phase_derivative_unchecked(&self, t: f64, n: usize) -> f64 {
        if n == 0 {
            return self.phase(t);
        }
        let chirp = match n {
            1 => self.chirp_rate * t,
            2 => self.chirp_rate,
            _ => 0.0,
        };
        let table = match &self.phase_table {
            Some(tab) => central_difference(|x| tab.eval(x), t, n, self.fd_step),
            None => 0.0,
        };
        chirp + table
    }

    /// `Ω⁻¹ ∂ₜΩ`. Below the envelope floor the quotient is reported as
    /// divergent, except for a field that is identically zero.
    pub fn log_derivative(&self, t: f64) -> LogDerivative {
        match self.log_derivative_stack(t, 0) {
            Some(v) => LogDerivative::Finite(v[0]),
            None => LogDerivative::Divergent,
        }
    }

    /// `[u, u′, …, u⁽ⁿ⁾]` for `u = Ω⁻¹∂ₜΩ`, from the Leibniz recurrence
    /// `Ω⁽ᵐ⁺¹⁾ = Σⱼ C(m, j) u⁽ʲ⁾ Ω⁽ᵐ⁻ʲ⁾`. `None` when divergent.
    pub fn log_derivative_stack(&self, t: f64, n: usize) -> Option<Vec<f64>> {
        if self.peak_rabi == 0.0 {
            return Some(vec![0.0; n + 1]);
        }
        let omega = self.envelope(t);
        if omega.abs() < self.envelope_floor() || omega == 0.0 {
            return None;
        }
        let d: Vec<f64> = (0..=n + 1).map(|k| self.envelope_derivative(t, k)).collect();
        let mut u = Vec::with_capacity(n + 1);
        for m in 0..=n {
            let mut acc = d[m + 1];
            for (j, uj) in u.iter().enumerate() {
                acc -= binomial(m, j) * uj * d[m - j];
            }
            u.push(acc / omega);
        }
        Some(u)
    }
}

/// Physicists' Hermite polynomial `Hₙ(x)`.
fn hermite(n: usize, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * x);
    if n == 0 {
        return h0;
    }
    for k in 1..n {
        let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// `Pₙ(u)` with `dⁿ/dxⁿ sech x = sech x · Pₙ(tanh x)`, built from
/// `Pₙ₊₁(u) = −u Pₙ(u) + (1 − u²) Pₙ′(u)`.
fn sech_polynomial(n: usize, u: f64) -> f64 {
    let mut coeffs = vec![1.0];
    for _ in 0..n {
        let mut next = vec![0.0; coeffs.len() + 1];
        for (k, &c) in coeffs.iter().enumerate() {
            next[k + 1] -= c;
            if k >= 1 {
                let dc = k as f64 * c;
                next[k - 1] += dc;
                next[k + 1] -= dc;
            }
        }
        coeffs = next;
    }
    coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c)
}

/// n-th central difference `δₕⁿ f(t) / hⁿ`.
pub(crate) fn central_difference(f: impl Fn(f64) -> f64, t: f64, n: usize, h: f64) -> f64 {
    let half = 0.5 * n as f64;
    let mut acc = 0.0;
    for k in 0..=n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binomial(n, k) * f(t + (half - k as f64) * h);
    }
    acc / h.powi(n as i32)
}
