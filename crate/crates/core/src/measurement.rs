//! Stochastic nonadiabatic loop, collapse on field-off and pointer readout.
//!
//! The system occupies exactly one NADS at a time. Coherent formation of the
//! virtual component is instantaneous; the incoherent hop between the ground
//! and excited NADS is a telegraph process with rate set by [`RateModel`].
//! A ground → excited hop absorbs one photon and the return hop emits one,
//! closing a loop. When the field goes off the occupied NADS collapses onto
//! its real bare state and the pointer is read out.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::dressed::{NadsError, NadsModel};
use crate::field::PulseSpec;
use crate::numerics::is_strictly_increasing;
use crate::C64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("trajectories must be ≥ 1")]
    NoTrajectories,
    #[error("rate_scale must be finite and ≥ 0, got {0}")]
    BadRate(f64),
    #[error("grid must have at least two strictly increasing points")]
    BadGrid,
}

/// Occupied NADS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Which {
    Ground,
    Excited,
}

impl Which {
    pub fn name(self) -> &'static str {
        match self {
            Which::Ground => "ground",
            Which::Excited => "excited",
        }
    }

    fn flipped(self) -> Self {
        match self {
            Which::Ground => Which::Excited,
            Which::Excited => Which::Ground,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BareState {
    G,
    E,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pointer {
    Ag,
    Ae,
}

impl fmt::Display for BareState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BareState::G => "g",
            BareState::E => "e",
        })
    }
}

impl fmt::Display for Pointer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pointer::Ag => "A_g",
            Pointer::Ae => "A_e",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopState {
    pub which: Which,
    pub entered_at: f64,
    pub photons_absorbed: u64,
    pub photons_emitted: u64,
    pub loop_count: u64,
    /// Completed dwells in the order they happened.
    pub dwell_times: Vec<(Which, f64)>,
}

impl LoopState {
    pub fn ground(t: f64) -> Self {
        LoopState {
            which: Which::Ground,
            entered_at: t,
            photons_absorbed: 0,
            photons_emitted: 0,
            loop_count: 0,
            dwell_times: Vec::new(),
        }
    }

    /// Advances over `[t, t + dt]`, hopping with probability `1 − e^{−rate·dt}`.
    /// Returns whether a hop happened.
    pub fn step<R: Rng + ?Sized>(&mut self, t: f64, dt: f64, rate: f64, rng: &mut R) -> bool {
        self.step_with_probability(t, dt, flip_probability(rate, dt), rng)
    }

    fn step_with_probability<R: Rng + ?Sized>(&mut self, t: f64, dt: f64, p: f64, rng: &mut R) -> bool {
        if p <= 0.0 || rng.gen::<f64>() >= p {
            return false;
        }
        let at = t + dt;
        self.dwell_times.push((self.which, at - self.entered_at));
        self.entered_at = at;
        match self.which {
            Which::Ground => self.photons_absorbed += 1,
            Which::Excited => {
                self.photons_emitted += 1;
                self.loop_count += 1;
            }
        }
        self.which = self.which.flipped();
        true
    }
}

pub fn flip_probability(rate: f64, dt: f64) -> f64 {
    -(-rate * dt).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateModel {
    #[default]
    Constant,
    /// `Γ₀ |SIN(θ/2)|²`: transfer proportional to the virtual weight.
    VirtualWeighted,
}

impl RateModel {
    pub fn name(self) -> &'static str {
        match self {
            RateModel::Constant => "constant",
            RateModel::VirtualWeighted => "virtual-weighted",
        }
    }
}

impl std::str::FromStr for RateModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "constant" => Ok(RateModel::Constant),
            "virtual-weighted" => Ok(RateModel::VirtualWeighted),
            other => Err(format!("unknown rate model '{other}' (expected constant or virtual-weighted)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub rate_scale: f64,
    pub rate_model: RateModel,
    pub trajectories: usize,
    pub seed: u64,
    pub grid: Vec<f64>,
}

impl McConfig {
    pub fn validate(&self) -> Result<(), McError> {
        if self.trajectories == 0 {
            return Err(McError::NoTrajectories);
        }
        if !(self.rate_scale.is_finite() && self.rate_scale >= 0.0) {
            return Err(McError::BadRate(self.rate_scale));
        }
        if self.grid.len() < 2 || !is_strictly_increasing(&self.grid) {
            return Err(McError::BadGrid);
        }
        Ok(())
    }
}

/// Virtual components exist only while the field acts.
pub fn field_is_off(pulse: &PulseSpec, t: f64) -> bool {
    let omega = pulse.envelope(t);
    !pulse.in_window(t) || omega == 0.0 || omega.abs() < pulse.envelope_floor()
}

/// Hop rate at `t`; zero when the field is off.
pub fn nonadiabatic_rate(config: &McConfig, model: &NadsModel, t: f64) -> f64 {
    if field_is_off(&model.pulse, t) {
        return 0.0;
    }
    match config.rate_model {
        RateModel::Constant => config.rate_scale,
        RateModel::VirtualWeighted => {
            // at a degeneracy both NADS are equal-weight mixtures
            let s2 = match model.mixing(t) {
                Ok((c, s)) => s.norm_sqr() / (c.norm_sqr() + s.norm_sqr()),
                Err(_) => 0.5,
            };
            config.rate_scale * s2
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub terminal_bare: BareState,
    pub pointer: Pointer,
    pub loops: u64,
    pub photons_absorbed: u64,
    pub photons_emitted: u64,
    /// All dwells, the last one closed at `collapsed_at`.
    pub dwell_times: Vec<(Which, f64)>,
    pub collapsed_at: f64,
}

impl Outcome {
    /// Durations of completed ground → excited → ground loops.
    pub fn loop_durations(&self) -> Vec<f64> {
        let n = self.loops as usize;
        self.dwell_times.chunks(2).take(n).map(|p| p[0].1 + p[1].1).collect()
    }
}

/// Real components survive, virtual ones vanish, and the pointer follows.
pub fn collapse_on_field_off(state: LoopState, t_off: f64) -> Outcome {
    let mut dwell_times = state.dwell_times;
    dwell_times.push((state.which, t_off - state.entered_at));
    let (terminal_bare, pointer) = match state.which {
        Which::Ground => (BareState::G, Pointer::Ag),
        Which::Excited => (BareState::E, Pointer::Ae),
    };
    Outcome {
        terminal_bare,
        pointer,
        loops: state.loop_count,
        photons_absorbed: state.photons_absorbed,
        photons_emitted: state.photons_emitted,
        dwell_times,
        collapsed_at: t_off,
    }
}

/// Collapse time: field switch-off or the end of the grid, whichever is first.
pub fn collapse_time(config: &McConfig, pulse: &PulseSpec) -> f64 {
    let end = *config.grid.last().expect("validated grid");
    if pulse.t_off.is_finite() {
        pulse.t_off.clamp(config.grid[0], end)
    } else {
        end
    }
}

/// Per-step `(t, dt, rate)` on the left grid points, up to the field-off time.
fn rate_table(config: &McConfig, model: &NadsModel) -> Vec<(f64, f64, f64)> {
    let t_off = collapse_time(config, &model.pulse);
    config
        .grid
        .windows(2)
        .filter(|w| w[0] < t_off)
        .map(|w| {
            let dt = w[1].min(t_off) - w[0];
            (w[0], dt, nonadiabatic_rate(config, model, w[0]))
        })
        .collect()
}

fn run_table<R: Rng + ?Sized>(table: &[(f64, f64, f64)], t0: f64, t_off: f64, rng: &mut R) -> Outcome {
    let mut state = LoopState::ground(t0);
    for &(t, dt, p) in table {
        state.step_with_probability(t, dt, p, rng);
    }
    collapse_on_field_off(state, t_off)
}

fn probability_table(config: &McConfig, model: &NadsModel) -> Vec<(f64, f64, f64)> {
    rate_table(config, model).into_iter().map(|(t, dt, rate)| (t, dt, flip_probability(rate, dt))).collect()
}

pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One trajectory from the ground NADS at `grid[0]`.
pub fn run_trajectory<R: Rng + ?Sized>(config: &McConfig, model: &NadsModel, rng: &mut R) -> Result<Outcome, McError> {
    config.validate()?;
    let table = probability_table(config, model);
    Ok(run_table(&table, config.grid[0], collapse_time(config, &model.pulse), rng))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DwellHistogram {
    /// `bins + 1` edges.
    pub edges: Vec<f64>,
    pub ground: Vec<u64>,
    pub excited: Vec<u64>,
}

impl DwellHistogram {
    pub fn from_dwells<'a>(dwells: impl Iterator<Item = &'a (Which, f64)> + Clone, bins: usize) -> Self {
        let max = dwells.clone().map(|d| d.1).fold(0.0, f64::max);
        let width = if max > 0.0 { max / bins as f64 } else { 1.0 };
        let edges = (0..=bins).map(|i| i as f64 * width).collect();
        let (mut ground, mut excited) = (vec![0; bins], vec![0; bins]);
        for (which, d) in dwells {
            let i = ((d / width) as usize).min(bins - 1);
            match which {
                Which::Ground => ground[i] += 1,
                Which::Excited => excited[i] += 1,
            }
        }
        DwellHistogram { edges, ground, excited }
    }
}

pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub trajectories: usize,
    pub fraction_g: f64,
    pub fraction_e: f64,
    pub mean_loops: f64,
    /// `(matches − mismatches)/N` between terminal state and pointer.
    pub pointer_correlation: f64,
    /// Mean duration of completed loops; `None` when no loop closed.
    pub mean_loop_duration: Option<f64>,
    pub histogram: DwellHistogram,
    pub outcomes: Vec<Outcome>,
}

impl EnsembleStats {
    /// Binomial standard error of the terminal fractions.
    pub fn fraction_sigma(&self) -> f64 {
        (self.fraction_e * self.fraction_g / self.trajectories as f64).sqrt()
    }
}

impl fmt::Display for EnsembleStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "trajectories: {}", self.trajectories)?;
        writeln!(f, "fraction g: {:.6}", self.fraction_g)?;
        writeln!(f, "fraction e: {:.6} (± {:.6})", self.fraction_e, self.fraction_sigma())?;
        writeln!(f, "mean loops: {:.6}", self.mean_loops)?;
        writeln!(f, "pointer correlation: {:.6}", self.pointer_correlation)?;
        match self.mean_loop_duration {
            Some(d) => write!(f, "mean loop duration: {d:.6e}"),
            None => write!(f, "mean loop duration: none (no completed loop)"),
        }
    }
}

/// Runs all trajectories in parallel; trajectory `i` uses stream `i` of `seed`.
pub fn ensemble(config: &McConfig, model: &NadsModel) -> Result<EnsembleStats, McError> {
    config.validate()?;
    let table = probability_table(config, model);
    let (t0, t_off) = (config.grid[0], collapse_time(config, &model.pulse));
    let outcomes: Vec<Outcome> = (0..config.trajectories as u64)
        .into_par_iter()
        .map(|i| run_table(&table, t0, t_off, &mut trajectory_rng(config.seed, i)))
        .collect();

    let n = outcomes.len() as f64;
    let in_e = outcomes.iter().filter(|o| o.terminal_bare == BareState::E).count() as f64;
    let matches = outcomes
        .iter()
        .filter(|o| matches!((o.terminal_bare, o.pointer), (BareState::G, Pointer::Ag) | (BareState::E, Pointer::Ae)))
        .count() as f64;
    let loop_durations: Vec<f64> = outcomes.iter().flat_map(|o| o.loop_durations()).collect();
    let mean_loop_duration = if loop_durations.is_empty() {
        None
    } else {
        Some(loop_durations.iter().sum::<f64>() / loop_durations.len() as f64)
    };
    let histogram = DwellHistogram::from_dwells(outcomes.iter().flat_map(|o| o.dwell_times.iter()), HISTOGRAM_BINS);
    Ok(EnsembleStats {
        trajectories: outcomes.len(),
        fraction_g: 1.0 - in_e / n,
        fraction_e: in_e / n,
        mean_loops: outcomes.iter().map(|o| o.loops as f64).sum::<f64>() / n,
        pointer_correlation: (2.0 * matches - n) / n,
        mean_loop_duration,
        histogram,
        outcomes,
    })
}

/// Ensemble-mean excited-NADS occupancy on the grid, from the exact
/// recursion `P ← P(1 − 2p) + p` of the telegraph process.
pub fn mean_occupancy(config: &McConfig, model: &NadsModel) -> Result<Vec<f64>, McError> {
    config.validate()?;
    let t_off = collapse_time(config, &model.pulse);
    let mut p_e = 0.0;
    let mut out = vec![0.0];
    for w in config.grid.windows(2) {
        if w[0] < t_off {
            let p = flip_probability(nonadiabatic_rate(config, model, w[0]), w[1].min(t_off) - w[0]);
            p_e = p_e * (1.0 - 2.0 * p) + p;
        }
        out.push(p_e);
    }
    Ok(out)
}

/// `P_e(T) = (1 − e^{−2ΓT})/2` for a constant hop rate.
pub fn telegraph_excited_fraction(rate: f64, duration: f64) -> f64 {
    -0.5 * (-2.0 * rate * duration).exp_m1()
}

/// Coefficients of `|G̃_r⟩|A_g⟩, |G̃_v⟩|A_e⟩, |Ẽ_r⟩|A_e⟩, |Ẽ_v⟩|A_g⟩`.
/// Only the pair belonging to the occupied NADS is nonzero.
pub fn entangled_coefficients(model: &NadsModel, t: f64, which: Which) -> Result<[C64; 4], NadsError> {
    let zero = C64::new(0.0, 0.0);
    let (c, s) = if field_is_off(&model.pulse, t) {
        (C64::new(1.0, 0.0), zero)
    } else {
        model.mixing(t)?
    };
    Ok(match which {
        Which::Ground => [c, s, zero, zero],
        Which::Excited => [zero, zero, c, -s],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dressed::SystemSpec;
    use crate::numerics::linspace;

    fn config(rate: f64, model: RateModel, trajectories: usize, grid: Vec<f64>) -> McConfig {
        McConfig { rate_scale: rate, rate_model: model, trajectories, seed: 7, grid }
    }

    fn static_model(omega: f64) -> NadsModel {
        NadsModel::new(SystemSpec::undamped(10.0), PulseSpec::constant(omega).with_carrier(9.0))
    }

    #[test]
    fn rate_examples() {
        let c = config(0.05, RateModel::Constant, 1, vec![0.0, 1.0]);
        assert_eq!(nonadiabatic_rate(&c, &static_model(1.0), 0.0), 0.05);
        assert_eq!(nonadiabatic_rate(&c, &static_model(0.0), 0.0), 0.0);
        let off = NadsModel::new(SystemSpec::undamped(10.0), PulseSpec::flat_top(1.0, 2.0, 1.0).with_carrier(9.0));
        assert_eq!(nonadiabatic_rate(&c, &off, 10.0), 0.0);
        let w = config(1.0, RateModel::VirtualWeighted, 1, vec![0.0, 1.0]);
        assert!((nonadiabatic_rate(&w, &static_model(1.0), 0.0) - 0.146_446_609_406_726_3).abs() < 1e-12);
    }

    #[test]
    fn step_limits() {
        let mut rng = trajectory_rng(1, 0);
        let mut s = LoopState::ground(0.0);
        for i in 0..100 {
            assert!(!s.step(i as f64, 1.0, 0.0, &mut rng));
        }
        assert_eq!(s, LoopState::ground(0.0));
        assert!(s.step(0.0, 1.0, f64::INFINITY, &mut rng));
        assert_eq!((s.which, s.photons_absorbed, s.entered_at), (Which::Excited, 1, 1.0));
        assert!(s.step(1.0, 2.0, 1e300, &mut rng));
        assert_eq!((s.which, s.photons_emitted, s.loop_count), (Which::Ground, 1, 1));
        assert_eq!(s.dwell_times, vec![(Which::Ground, 1.0), (Which::Excited, 2.0)]);
    }

    #[test]
    fn flip_fraction_matches_exponential_law() {
        let mut rng = trajectory_rng(42, 3);
        let n = 1_000_000;
        let mut flips = 0usize;
        for _ in 0..n {
            let mut s = LoopState::ground(0.0);
            if s.step(0.0, 1.0, 0.05, &mut rng) {
                flips += 1;
            }
        }
        let p = 1.0 - (-0.05f64).exp();
        assert!((p - 0.048_771).abs() < 1e-6);
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!(((flips as f64 / n as f64) - p).abs() < 3.0 * sigma);
    }

    #[test]
    fn collapse_examples() {
        let o = collapse_on_field_off(LoopState::ground(0.0), 5.0);
        assert_eq!((o.terminal_bare, o.pointer, o.loops), (BareState::G, Pointer::Ag, 0));
        let mut s = LoopState::ground(0.0);
        s.step(0.0, 1.0, f64::INFINITY, &mut trajectory_rng(0, 0));
        let o = collapse_on_field_off(s, 5.0);
        assert_eq!((o.terminal_bare, o.pointer), (BareState::E, Pointer::Ae));
        assert_eq!(o.dwell_times, vec![(Which::Ground, 1.0), (Which::Excited, 4.0)]);
        assert_eq!(o.photons_absorbed - o.photons_emitted, 1);
    }

    #[test]
    fn field_never_on() {
        let m = static_model(0.0);
        let c = config(1.0, RateModel::Constant, 50, linspace(0.0, 10.0, 11));
        let e = ensemble(&c, &m).unwrap();
        assert_eq!(e.fraction_g, 1.0);
        assert!(e.outcomes.iter().all(|o| o.loops == 0 && o.pointer == Pointer::Ag));
    }

    #[test]
    fn zero_rate_is_adiabatic() {
        let m = NadsModel::new(SystemSpec::undamped(10.0), PulseSpec::gaussian(0.5, 5.0).with_carrier(9.0));
        let c = config(0.0, RateModel::VirtualWeighted, 100, linspace(-15.0, 15.0, 301));
        let e = ensemble(&c, &m).unwrap();
        assert_eq!((e.fraction_g, e.mean_loops, e.mean_loop_duration), (1.0, 0.0, None));
    }

    #[test]
    fn telegraph_equilibrium_and_closed_form() {
        let m = static_model(0.3);
        // long pulse: Γ·T = 50
        let c = config(0.5, RateModel::Constant, 10_000, linspace(0.0, 100.0, 2001));
        let e = ensemble(&c, &m).unwrap();
        let sigma = (0.25f64 / 1e4).sqrt();
        assert!((e.fraction_e - 0.5).abs() < 3.0 * sigma, "{}", e.fraction_e);
        assert_eq!(e.pointer_correlation, 1.0);
        assert!(e.mean_loop_duration.unwrap() > 0.0);

        let c = config(0.05, RateModel::Constant, 10_000, linspace(0.0, 10.0, 1001));
        let e = ensemble(&c, &m).unwrap();
        let p = telegraph_excited_fraction(0.05, 10.0);
        let sigma = (p * (1.0 - p) / 1e4).sqrt();
        assert!((e.fraction_e - p).abs() < 3.0 * sigma, "{} vs {p}", e.fraction_e);
        let occ = mean_occupancy(&c, &m).unwrap();
        assert!((occ.last().unwrap() - p).abs() < 1e-3);
    }

    #[test]
    fn photon_bookkeeping() {
        let m = static_model(0.3);
        let c = config(2.0, RateModel::Constant, 200, linspace(0.0, 20.0, 401));
        for o in ensemble(&c, &m).unwrap().outcomes {
            let diff = o.photons_absorbed - o.photons_emitted;
            assert_eq!(diff, (o.terminal_bare == BareState::E) as u64);
            assert_eq!(o.loops, o.photons_emitted);
            let total: f64 = o.dwell_times.iter().map(|d| d.1).sum();
            assert!((total - 20.0).abs() < 1e-9);
        }
    }

    #[test]
    fn reproducible() {
        let m = NadsModel::new(SystemSpec::undamped(10.0), PulseSpec::gaussian(0.5, 5.0).with_carrier(9.0));
        let c = config(0.4, RateModel::VirtualWeighted, 500, linspace(-15.0, 15.0, 301));
        let (a, b) = (ensemble(&c, &m).unwrap(), ensemble(&c, &m).unwrap());
        assert_eq!(a, b);
        let other = ensemble(&McConfig { seed: 8, ..c }, &m).unwrap();
        assert_ne!(a.outcomes, other.outcomes);
    }

    #[test]
    fn entangled_coefficient_patterns() {
        let off = entangled_coefficients(&static_model(0.0), 0.0, Which::Ground).unwrap();
        assert_eq!(off[0], C64::new(1.0, 0.0));
        assert!(off[1..].iter().all(|c| c.norm() == 0.0));
        let on = static_model(1.0);
        let g = entangled_coefficients(&on, 0.0, Which::Ground).unwrap();
        let mods: Vec<f64> = g.iter().map(|c| c.norm_sqr()).collect();
        assert!((mods[0] - 0.853_553_390_593_273_6).abs() < 1e-12);
        assert!((mods[1] - 0.146_446_609_406_726_3).abs() < 1e-12);
        assert_eq!((mods[2], mods[3]), (0.0, 0.0));
        let e = entangled_coefficients(&on, 0.0, Which::Excited).unwrap();
        assert_eq!((e[2], e[3]), (g[0], -g[1]));
        assert_eq!((e[0].norm(), e[1].norm()), (0.0, 0.0));
    }

    #[test]
    fn config_validation() {
        let m = static_model(1.0);
        assert_eq!(ensemble(&config(1.0, RateModel::Constant, 0, vec![0.0, 1.0]), &m), Err(McError::NoTrajectories));
        assert!(matches!(ensemble(&config(-1.0, RateModel::Constant, 1, vec![0.0, 1.0]), &m), Err(McError::BadRate(_))));
        assert_eq!(ensemble(&config(1.0, RateModel::Constant, 1, vec![0.0]), &m), Err(McError::BadGrid));
    }
}
