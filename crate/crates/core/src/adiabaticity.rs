//! Generalized adiabatic condition of all orders.
//!
//! With `g(t) = ∂ₜφ − iΩ⁻¹∂ₜΩ` the condition of order `(n, k)` reads
//! `|∂ₜⁿ g| ≪ |Δω − iγ/2|^{n+1−k} |Ω|^k` for `0 ≤ k ≤ n + 1`. Every ratio
//! `LHS / RHS` is evaluated here, and "≪" becomes `ratio < threshold`.
//! Derivatives of the envelope term are analytic, so only tabulated phases
//! go through finite differences.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::dressed::{detuning, SystemSpec};
use crate::field::{FieldError, PulseSpec};
use crate::C64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdiabaticityError {
    #[error("invalid order (n = {n}, k = {k}); need 0 ≤ k ≤ n + 1")]
    InvalidOrder { n: usize, k: usize },
    #[error("threshold must lie in (0, 1), got {0}")]
    InvalidThreshold(f64),
    #[error("empty time grid")]
    EmptyGrid,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Damping combination entering `|Δω − iγ/2|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GammaConvention {
    /// `γ = γ_g + γ_e`.
    #[default]
    Sum,
    /// `γ = (γ_g + γ_e)/2`.
    HalfSum,
}

impl GammaConvention {
    pub fn gamma(self, system: &SystemSpec) -> f64 {
        match self {
            GammaConvention::Sum => system.gamma_g + system.gamma_e,
            GammaConvention::HalfSum => 0.5 * (system.gamma_g + system.gamma_e),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GammaConvention::Sum => "sum",
            GammaConvention::HalfSum => "half-sum",
        }
    }
}

impl std::str::FromStr for GammaConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sum" => Ok(GammaConvention::Sum),
            "half-sum" => Ok(GammaConvention::HalfSum),
            other => Err(format!("unknown gamma convention '{other}' (expected sum or half-sum)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdiabaticityOptions {
    pub n_max: usize,
    pub threshold: f64,
    pub gamma_convention: GammaConvention,
    /// Margin of the frequency-form check.
    pub margin: f64,
}

impl Default for AdiabaticityOptions {
    fn default() -> Self {
        AdiabaticityOptions { n_max: 3, threshold: 0.1, gamma_convention: GammaConvention::Sum, margin: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionEntry {
    pub n: usize,
    pub k: usize,
    pub worst_ratio: f64,
    pub worst_time: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyForm {
    pub delta: f64,
    pub doppler_width: f64,
    pub laser_width: f64,
    pub margin: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticityReport {
    pub entries: Vec<ConditionEntry>,
    pub threshold: f64,
    pub frequency_form: Option<FrequencyForm>,
    /// Set for an exactly resonant drive, `Δω = 0`.
    pub resonance_violation: bool,
}

impl AdiabaticityReport {
    pub fn is_satisfied(&self) -> bool {
        !self.resonance_violation
            && self.entries.iter().all(|e| e.satisfied)
            && self.frequency_form.is_none_or(|f| f.satisfied)
    }

    pub fn entry(&self, n: usize, k: usize) -> Option<&ConditionEntry> {
        self.entries.iter().find(|e| e.n == n && e.k == k)
    }

    pub fn with_frequency_form(mut self, delta: f64, doppler_width: f64, laser_width: f64, margin: f64) -> Self {
        self.frequency_form = Some(FrequencyForm {
            delta,
            doppler_width,
            laser_width,
            margin,
            satisfied: frequency_form_check(delta, doppler_width, laser_width, margin),
        });
        self
    }

    /// `n,k,worst_ratio,worst_time,satisfied` with a header row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,k,worst_ratio,worst_time,satisfied\n");
        for e in &self.entries {
            s.push_str(&format!("{},{},{:e},{:e},{}\n", e.n, e.k, e.worst_ratio, e.worst_time, e.satisfied));
        }
        s
    }
}

impl fmt::Display for AdiabaticityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>3} {:>3} {:>14} {:>14}  status", "n", "k", "worst_ratio", "worst_time")?;
        for e in &self.entries {
            writeln!(
                f,
                "{:>3} {:>3} {:>14.6e} {:>14.6e}  {}",
                e.n,
                e.k,
                e.worst_ratio,
                e.worst_time,
                if e.satisfied { "ok" } else { "VIOLATED" }
            )?;
        }
        writeln!(f, "threshold: {}", self.threshold)?;
        if self.resonance_violation {
            writeln!(f, "resonant drive (zero detuning): condition violated")?;
        }
        if let Some(ff) = &self.frequency_form {
            writeln!(
                f,
                "frequency form: delta = {}, doppler = {}, laser = {}, margin = {} -> {}",
                ff.delta,
                ff.doppler_width,
                ff.laser_width,
                ff.margin,
                if ff.satisfied { "ok" } else { "VIOLATED" }
            )?;
        }
        write!(f, "overall: {}", if self.is_satisfied() { "satisfied" } else { "violated" })
    }
}

/// `g(t) = ∂ₜφ − iΩ⁻¹∂ₜΩ`; `None` where the log-derivative diverges.
pub fn nonadiabatic_function(pulse: &PulseSpec, t: f64) -> Result<Option<C64>, FieldError> {
    Ok(derivative_stack(pulse, t, 0)?.map(|d| d[0]))
}

/// `[g, ∂ₜg, …, ∂ₜⁿg]`, or `None` where the log-derivative diverges.
/// An absent field carries no phase, so `g ≡ 0`.
pub fn derivative_stack(pulse: &PulseSpec, t: f64, n: usize) -> Result<Option<Vec<C64>>, FieldError> {
    pulse.check_fd_order(n + 1)?;
    if pulse.is_absent() {
        return Ok(Some(vec![C64::new(0.0, 0.0); n + 1]));
    }
    Ok(pulse.log_derivative_stack(t, n).map(|u| {
        u.iter()
            .enumerate()
            .map(|(m, um)| C64::new(pulse.phase_derivative_unchecked(t, m + 1), -um))
            .collect()
    }))
}

fn rhs_base(system: &SystemSpec, pulse: &PulseSpec, convention: GammaConvention) -> f64 {
    C64::new(detuning(system, pulse), -0.5 * convention.gamma(system)).norm()
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else if rhs == 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs
    }
}

/// `|∂ₜⁿ g| / (|Δω − iγ/2|^{n+1−k} |Ω|^k)`; `+∞` at divergent instants.
pub fn condition_ratio(
    system: &SystemSpec,
    pulse: &PulseSpec,
    t: f64,
    n: usize,
    k: usize,
    convention: GammaConvention,
) -> Result<f64, AdiabaticityError> {
    if k > n + 1 {
        return Err(AdiabaticityError::InvalidOrder { n, k });
    }
    let Some(stack) = derivative_stack(pulse, t, n)? else {
        return Ok(f64::INFINITY);
    };
    let base = rhs_base(system, pulse, convention);
    let rhs = base.powi((n + 1 - k) as i32) * pulse.envelope(t).abs().powi(k as i32);
    Ok(ratio(stack[n].norm(), rhs))
}

/// `|Ω⁻¹∂ₜΩ| / |Δω − iγ/2|`.
pub fn ordinary_condition(system: &SystemSpec, pulse: &PulseSpec, t: f64, convention: GammaConvention) -> f64 {
    match pulse.log_derivative(t).finite() {
        None => f64::INFINITY,
        Some(u) => ratio(u.abs(), rhs_base(system, pulse, convention)),
    }
}

/// `|∂ₜφ − iΩ⁻¹∂ₜΩ| / Ω`.
pub fn born_fock_condition(pulse: &PulseSpec, t: f64) -> Result<f64, FieldError> {
    match nonadiabatic_function(pulse, t)? {
        None => Ok(f64::INFINITY),
        Some(g) => Ok(ratio(g.norm(), pulse.envelope(t).abs())),
    }
}

/// `delta > margin · max(doppler_width, laser_width)`.
pub fn frequency_form_check(delta: f64, doppler_width: f64, laser_width: f64, margin: f64) -> bool {
    delta > margin * doppler_width.max(laser_width)
}

/// Worst ratio of every `(n, k)` with `n ≤ n_max` over `grid`.
pub fn check(
    system: &SystemSpec,
    pulse: &PulseSpec,
    grid: &[f64],
    options: &AdiabaticityOptions,
) -> Result<AdiabaticityReport, AdiabaticityError> {
    if grid.is_empty() {
        return Err(AdiabaticityError::EmptyGrid);
    }
    if !(options.threshold > 0.0 && options.threshold < 1.0) {
        return Err(AdiabaticityError::InvalidThreshold(options.threshold));
    }
    let n_max = options.n_max;
    pulse.check_fd_order(n_max + 1)?;
    let base = rhs_base(system, pulse, options.gamma_convention);

    let per_time: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&t| {
            let stack = derivative_stack(pulse, t, n_max).expect("order checked above");
            let omega = pulse.envelope(t).abs();
            let mut out = Vec::new();
            for n in 0..=n_max {
                for k in 0..=n + 1 {
                    out.push(match &stack {
                        None => f64::INFINITY,
                        Some(s) => {
                            let rhs = base.powi((n + 1 - k) as i32) * omega.powi(k as i32);
                            ratio(s[n].norm(), rhs)
                        }
                    });
                }
            }
            out
        })
        .collect();

    let mut entries = Vec::new();
    let mut idx = 0;
    for n in 0..=n_max {
        for k in 0..=n + 1 {
            let (mut worst, mut at) = (per_time[0][idx], grid[0]);
            for (row, &t) in per_time.iter().zip(grid).skip(1) {
                if row[idx] > worst {
                    worst = row[idx];
                    at = t;
                }
            }
            entries.push(ConditionEntry {
                n,
                k,
                worst_ratio: worst,
                worst_time: at,
                satisfied: worst < options.threshold,
            });
            idx += 1;
        }
    }
    Ok(AdiabaticityReport {
        entries,
        threshold: options.threshold,
        frequency_form: None,
        resonance_violation: detuning(system, pulse) == 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linspace;
    use proptest::prelude::*;

    const SUM: GammaConvention = GammaConvention::Sum;

    fn sys(delta: f64) -> SystemSpec {
        SystemSpec::undamped(10.0 + delta)
    }

    #[test]
    fn nonadiabatic_function_examples() {
        assert_eq!(nonadiabatic_function(&PulseSpec::constant(1.0), 3.0).unwrap(), Some(C64::new(0.0, 0.0)));
        let g = nonadiabatic_function(&PulseSpec::gaussian(1.0, 10.0), 3.0).unwrap().unwrap();
        assert!(g.re.abs() < 1e-15 && (g.im - 0.06).abs() < 1e-14);
        let g = nonadiabatic_function(&PulseSpec::constant(1.0).with_chirp(0.05), 2.0).unwrap().unwrap();
        assert!((g.re - 0.1).abs() < 1e-15 && g.im == 0.0);
    }

    #[test]
    fn condition_ratio_examples() {
        let p = PulseSpec::gaussian(1.0, 100.0).with_carrier(10.0);
        let r = condition_ratio(&sys(1.0), &p, 100.0, 0, 0, SUM).unwrap();
        assert!((r - 0.02).abs() < 1e-14);
        let c = PulseSpec::constant(1.0).with_carrier(10.0);
        assert_eq!(condition_ratio(&sys(1.0), &c, 0.0, 0, 0, SUM).unwrap(), 0.0);
        let ch = PulseSpec::constant(0.5).with_carrier(10.0).with_chirp(0.05);
        let r = condition_ratio(&sys(1.0), &ch, 2.0, 0, 1, SUM).unwrap();
        assert!((r - 0.2).abs() < 1e-14);
        assert!(matches!(
            condition_ratio(&sys(1.0), &p, 0.0, 1, 3, SUM),
            Err(AdiabaticityError::InvalidOrder { n: 1, k: 3 })
        ));
    }

    #[test]
    fn damping_enters_the_denominator() {
        let p = PulseSpec::gaussian(1.0, 100.0).with_carrier(10.0);
        let s = sys(0.6).with_damping(0.3, 1.3);
        // |0.6 − 0.8i| = 1
        let r = condition_ratio(&s, &p, 100.0, 0, 0, SUM).unwrap();
        assert!((r - 0.02).abs() < 1e-14);
        let r_half = condition_ratio(&s, &p, 100.0, 0, 0, GammaConvention::HalfSum).unwrap();
        assert!((r_half - 0.02 / (0.36f64 + 0.16).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn divergent_instant_is_infinite() {
        let p = PulseSpec::flat_top(1.0, 10.0, 2.0).with_carrier(10.0);
        assert_eq!(condition_ratio(&sys(1.0), &p, 50.0, 0, 0, SUM).unwrap(), f64::INFINITY);
        let rep = check(&sys(1.0), &p, &[0.0, 50.0], &AdiabaticityOptions::default()).unwrap();
        assert!(!rep.is_satisfied());
    }

    #[test]
    fn constant_wave_report() {
        let p = PulseSpec::constant(0.3).with_carrier(10.0);
        let rep = check(&sys(0.5), &p, &linspace(0.0, 10.0, 11), &AdiabaticityOptions::default()).unwrap();
        assert!(rep.is_satisfied());
        assert!(rep.entries.iter().all(|e| e.worst_ratio == 0.0 && e.satisfied));
        assert_eq!(rep.entries.len(), 2 + 3 + 4 + 5);
    }

    #[test]
    fn resonant_drive_is_violated() {
        let p = PulseSpec::constant(0.3).with_carrier(10.0);
        let rep = check(&sys(0.0), &p, &[0.0], &AdiabaticityOptions::default()).unwrap();
        assert!(rep.resonance_violation && !rep.is_satisfied());
    }

    #[test]
    fn bad_inputs() {
        let p = PulseSpec::constant(0.3);
        let o = AdiabaticityOptions { threshold: 1.5, ..Default::default() };
        assert!(check(&sys(1.0), &p, &[0.0], &o).is_err());
        assert!(matches!(check(&sys(1.0), &p, &[], &AdiabaticityOptions::default()), Err(AdiabaticityError::EmptyGrid)));
    }

    #[test]
    fn frequency_form_examples() {
        assert!(frequency_form_check(0.8, 0.04, 0.005, 10.0));
        assert!(!frequency_form_check(0.0, 0.04, 0.005, 10.0));
        assert!(!frequency_form_check(0.8, 0.4, 0.005, 10.0));
    }

    #[test]
    fn ordinary_nests_in_zero_order() {
        let s = sys(0.7).with_damping(0.01, 0.05);
        let p = PulseSpec::gaussian(0.5, 30.0).with_carrier(10.0);
        for t in linspace(-90.0, 90.0, 181) {
            let a = ordinary_condition(&s, &p, t, SUM);
            let b = condition_ratio(&s, &p, t, 0, 0, SUM).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(ordinary_condition(&s, &PulseSpec::constant(1.0), 0.0, SUM), 0.0);
    }

    #[test]
    fn born_fock_nests_in_first_index() {
        // constant envelope with chirp: both reduce to |∂ₜφ| / Ω
        let s = sys(1.0);
        let p = PulseSpec::constant(0.4).with_carrier(10.0).with_chirp(0.03);
        for t in linspace(-5.0, 5.0, 21) {
            let bf = born_fock_condition(&p, t).unwrap();
            let r = condition_ratio(&s, &p, t, 0, 1, SUM).unwrap();
            assert!((bf - r).abs() < 1e-12);
            assert!((bf - (0.03 * t).abs() / 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_and_table() {
        let p = PulseSpec::gaussian(0.2, 50.0).with_carrier(10.0);
        let o = AdiabaticityOptions { n_max: 1, ..Default::default() };
        let rep = check(&sys(1.0), &p, &linspace(-100.0, 100.0, 11), &o)
            .unwrap()
            .with_frequency_form(0.8, 0.04, 0.005, 10.0);
        let csv = rep.to_csv();
        assert_eq!(csv.lines().count(), 1 + 5);
        assert!(csv.starts_with("n,k,worst_ratio,worst_time,satisfied\n"));
        let table = rep.to_string();
        assert!(table.contains("frequency form"));
    }

    fn rescaled(s: f64, n_max: usize, shape: impl Fn(f64) -> PulseSpec) -> Vec<f64> {
        let tau = 20.0 * s;
        let p = shape(tau).with_carrier(10.0);
        let grid = linspace(-3.0 * tau, 3.0 * tau, 601);
        let o = AdiabaticityOptions { n_max, ..Default::default() };
        check(&sys(1.0), &p, &grid, &o).unwrap().entries.iter().map(|e| e.worst_ratio).collect()
    }

    #[test]
    fn time_rescaling_law() {
        let entries: Vec<(usize, usize)> = (0..=3).flat_map(|n| (0..=n + 1).map(move |k| (n, k))).collect();
        for s in [2.0, 10.0] {
            let base = rescaled(1.0, 3, |tau| PulseSpec::sech(0.5, tau));
            let scaled = rescaled(s, 3, |tau| PulseSpec::sech(0.5, tau));
            for (i, &(n, _)) in entries.iter().enumerate() {
                let expect = base[i] * s.powi(-(n as i32 + 1));
                assert!((scaled[i] - expect).abs() <= 0.05 * expect, "n={n} s={s}");
                assert!(scaled[i] < base[i]);
            }
            let base = rescaled(1.0, 1, |tau| PulseSpec::gaussian(0.5, tau));
            let scaled = rescaled(s, 1, |tau| PulseSpec::gaussian(0.5, tau));
            for (i, &(n, _)) in entries.iter().take(5).enumerate() {
                let expect = base[i] * s.powi(-(n as i32 + 1));
                assert!((scaled[i] - expect).abs() <= 0.05 * expect);
                assert!(scaled[i] < base[i]);
            }
        }
    }

    proptest! {
        #[test]
        fn report_is_complete_and_consistent(n_max in 0usize..5, threshold in 0.01f64..0.99, tau in 5.0f64..200.0) {
            let p = PulseSpec::gaussian(0.3, tau).with_carrier(10.0);
            let o = AdiabaticityOptions { n_max, threshold, ..Default::default() };
            let rep = check(&sys(1.0), &p, &linspace(-2.0 * tau, 2.0 * tau, 41), &o).unwrap();
            prop_assert_eq!(rep.entries.len(), (0..=n_max).map(|n| n + 2).sum::<usize>());
            for n in 0..=n_max {
                for k in 0..=n + 1 {
                    let e = rep.entry(n, k).unwrap();
                    prop_assert_eq!(e.satisfied, e.worst_ratio < threshold);
                }
            }
        }
    }
}
