//! Sectioned `key = value` scenario files.
//!
//! ```text
//! [scenario]      name, unit, doppler_width, laser_width, density, temperature
//! [system]        omega_g, omega_e, gamma_g, gamma_e
//! [pulse]         shape, peak_rabi, duration, ramp, carrier, phase_offset,
//!                 chirp_rate, t_on, t_off, fd_step, floor_rel, phase_table
//! [grid]          t_start, t_end, steps
//! [adiabaticity]  n_max, threshold, margin, gamma_convention
//! [mc]            rate_scale, rate_model, trajectories, seed
//! [nads]          excited_form
//! ```
//!
//! Frequency-valued keys (`omega_*`, `gamma_*`, `peak_rabi`, `carrier`,
//! `*_width`, `rate_scale`) are read in the declared `unit` and converted to
//! rad/ps; `chirp_rate` is read in unit per ps. Times are in ps whenever a
//! physical unit is declared. `#` starts a comment. `density` and
//! `temperature` are metadata only.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::adiabaticity::{self, AdiabaticityError, AdiabaticityOptions, AdiabaticityReport, GammaConvention};
use crate::dressed::{detuning, ExcitedForm, NadsModel, NadsOptions, SystemSpec};
use crate::field::{Envelope, PhaseTable, PulseSpec, DEFAULT_FLOOR_REL};
use crate::measurement::{McConfig, RateModel};
use crate::numerics::linspace;
use crate::units::FrequencyUnit;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}{key}: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ScenarioError {
    /// Dotted `section.key`, or the section name for section-level errors.
    pub key: String,
    pub line: Option<usize>,
    pub message: String,
}

impl ScenarioError {
    fn new(key: impl Into<String>, line: Option<usize>, message: impl Into<String>) -> Self {
        ScenarioError { key: key.into(), line, message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn points(&self) -> Vec<f64> {
        linspace(self.t_start, self.t_end, self.steps)
    }

    pub fn spacing(&self) -> f64 {
        (self.t_end - self.t_start) / (self.steps - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub unit: FrequencyUnit,
    pub system: SystemSpec,
    pub pulse: PulseSpec,
    pub grid: TimeGrid,
    pub adiabaticity: AdiabaticityOptions,
    pub doppler_width: f64,
    pub laser_width: f64,
    pub density: Option<f64>,
    pub temperature: Option<f64>,
    /// Rates in rad/ps; `grid` holds the scenario grid points.
    pub mc: Option<McConfig>,
    pub nads: NadsOptions,
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("scenario", &["name", "unit", "doppler_width", "laser_width", "density", "temperature"]),
    ("system", &["omega_g", "omega_e", "gamma_g", "gamma_e"]),
    (
        "pulse",
        &[
            "shape",
            "peak_rabi",
            "duration",
            "ramp",
            "carrier",
            "phase_offset",
            "chirp_rate",
            "t_on",
            "t_off",
            "fd_step",
            "floor_rel",
            "phase_table",
        ],
    ),
    ("grid", &["t_start", "t_end", "steps"]),
    ("adiabaticity", &["n_max", "threshold", "margin", "gamma_convention"]),
    ("mc", &["rate_scale", "rate_model", "trajectories", "seed"]),
    ("nads", &["excited_form"]),
];

const DEFAULT_TRAJECTORIES: usize = 1000;

struct Entries {
    values: BTreeMap<String, (String, usize)>,
    section_lines: BTreeMap<String, usize>,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<(&str, usize)> {
        self.values.get(key).map(|(v, l)| (v.as_str(), *l))
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.values.get(key).map(|(_, l)| *l)
    }

    fn section_line(&self, section: &str) -> Option<usize> {
        self.section_lines.get(section).copied()
    }

    fn has_section(&self, section: &str) -> bool {
        self.section_lines.contains_key(section)
    }

    fn section_is_empty(&self, section: &str) -> bool {
        let prefix = format!("{section}.");
        !self.values.keys().any(|k| k.starts_with(&prefix))
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ScenarioError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((v, l)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| ScenarioError::new(key, Some(l), format!("cannot parse '{v}': {e}"))),
        }
    }

    fn required<T: std::str::FromStr>(&self, key: &str) -> Result<T, ScenarioError>
    where
        T::Err: std::fmt::Display,
    {
        self.parsed(key)?.ok_or_else(|| ScenarioError::new(key, None, "missing required key"))
    }

    fn or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, ScenarioError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parsed(key)?.unwrap_or(default))
    }
}

fn tokenize(text: &str) -> Result<Entries, ScenarioError> {
    let mut values = BTreeMap::new();
    let mut section_lines = BTreeMap::new();
    let mut section: Option<&'static [&'static str]> = None;
    let mut section_name = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ScenarioError::new(line, Some(line_no), "malformed section header"))?
                .trim();
            let keys = SECTIONS
                .iter()
                .find(|(s, _)| *s == name)
                .ok_or_else(|| ScenarioError::new(name, Some(line_no), "unknown section"))?
                .1;
            if section_lines.insert(name.to_string(), line_no).is_some() {
                return Err(ScenarioError::new(name, Some(line_no), "duplicate section"));
            }
            section = Some(keys);
            section_name = name.to_string();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ScenarioError::new(line, Some(line_no), "expected 'key = value'"))?;
        let (key, value) = (key.trim(), value.trim());
        let keys = section.ok_or_else(|| ScenarioError::new(key, Some(line_no), "key outside of any section"))?;
        let dotted = format!("{section_name}.{key}");
        if !keys.contains(&key) {
            return Err(ScenarioError::new(dotted, Some(line_no), "unknown key"));
        }
        if values.insert(dotted.clone(), (value.to_string(), line_no)).is_some() {
            return Err(ScenarioError::new(dotted, Some(line_no), "duplicate key"));
        }
    }
    Ok(Entries { values, section_lines })
}

fn parse_shape(v: &str, key: &str, line: Option<usize>) -> Result<u8, ScenarioError> {
    match v {
        "constant" | "constant-wave" => Ok(0),
        "gaussian" => Ok(1),
        "sech" => Ok(2),
        "flat-top" => Ok(3),
        other => Err(ScenarioError::new(
            key,
            line,
            format!("unknown shape '{other}' (expected constant-wave, gaussian, sech or flat-top)"),
        )),
    }
}

fn parse_table(v: &str, key: &str, line: Option<usize>) -> Result<PhaseTable, ScenarioError> {
    let err = |m: String| ScenarioError::new(key, line, m);
    let mut times = Vec::new();
    let mut values = Vec::new();
    for pair in v.split(',') {
        let (t, p) = pair.trim().split_once(':').ok_or_else(|| err(format!("expected 't:phase', got '{pair}'")))?;
        times.push(t.trim().parse::<f64>().map_err(|e| err(format!("bad time '{t}': {e}")))?);
        values.push(p.trim().parse::<f64>().map_err(|e| err(format!("bad phase '{p}': {e}")))?);
    }
    PhaseTable::new(times, values).map_err(|e| err(e.to_string()))
}

fn parse_excited_form(v: &str) -> Result<ExcitedForm, String> {
    match v {
        "as-printed" => Ok(ExcitedForm::AsPrinted),
        "symmetric" => Ok(ExcitedForm::Symmetric),
        other => Err(format!("unknown excited form '{other}' (expected as-printed or symmetric)")),
    }
}

fn excited_form_name(f: ExcitedForm) -> &'static str {
    match f {
        ExcitedForm::AsPrinted => "as-printed",
        ExcitedForm::Symmetric => "symmetric",
    }
}

/// Parses and validates a scenario, converting frequencies to rad/ps.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let e = tokenize(text)?;
    for s in ["system", "pulse", "grid"] {
        if !e.has_section(s) {
            return Err(ScenarioError::new(s, None, "missing required section"));
        }
    }
    let unit: FrequencyUnit = e.or("scenario.unit", FrequencyUnit::Internal)?;
    let f = unit.to_internal();
    let freq = |key: &str, default: Option<f64>| -> Result<f64, ScenarioError> {
        let v: f64 = match default {
            Some(d) => e.or(key, d)?,
            None => e.required(key)?,
        };
        if !v.is_finite() {
            return Err(ScenarioError::new(key, e.line(key), "must be finite"));
        }
        Ok(v * f)
    };
    let nonneg = |key: &str, v: f64| -> Result<f64, ScenarioError> {
        if v >= 0.0 {
            Ok(v)
        } else {
            Err(ScenarioError::new(key, e.line(key), "must be ≥ 0"))
        }
    };

    let name: String = e.or("scenario.name", "unnamed".to_string())?;
    let doppler_width = nonneg("scenario.doppler_width", freq("scenario.doppler_width", Some(0.0))?)?;
    let laser_width = nonneg("scenario.laser_width", freq("scenario.laser_width", Some(0.0))?)?;
    let density: Option<f64> = e.parsed("scenario.density")?;
    let temperature: Option<f64> = e.parsed("scenario.temperature")?;

    let system = SystemSpec {
        omega_g: freq("system.omega_g", Some(0.0))?,
        omega_e: freq("system.omega_e", None)?,
        gamma_g: nonneg("system.gamma_g", freq("system.gamma_g", Some(0.0))?)?,
        gamma_e: nonneg("system.gamma_e", freq("system.gamma_e", Some(0.0))?)?,
    };
    system
        .validate()
        .map_err(|err| ScenarioError::new("system", e.section_line("system"), err.to_string()))?;

    let (shape_raw, shape_line) = e
        .raw("pulse.shape")
        .ok_or_else(|| ScenarioError::new("pulse.shape", None, "missing required key"))?;
    let shape = parse_shape(shape_raw, "pulse.shape", Some(shape_line))?;
    let peak = freq("pulse.peak_rabi", None)?;
    let needs_duration = shape != 0;
    let duration: f64 = if needs_duration { e.required("pulse.duration")? } else { e.or("pulse.duration", 1.0)? };
    let mut pulse = match shape {
        0 => PulseSpec::constant(peak),
        1 => PulseSpec::gaussian(peak, duration),
        2 => PulseSpec::sech(peak, duration),
        _ => PulseSpec::flat_top(peak, duration, e.required("pulse.ramp")?),
    };
    pulse.duration = duration;
    pulse.fd_step = duration * 1e-3;
    if shape != 3 && e.raw("pulse.ramp").is_some() {
        return Err(ScenarioError::new("pulse.ramp", e.line("pulse.ramp"), "only valid for flat-top pulses"));
    }
    pulse.carrier = freq("pulse.carrier", None)?;
    pulse.phase_offset = e.or("pulse.phase_offset", 0.0)?;
    pulse.chirp_rate = freq("pulse.chirp_rate", Some(0.0))?;
    if let Some(t_on) = e.parsed("pulse.t_on")? {
        pulse.t_on = t_on;
    }
    if let Some(t_off) = e.parsed("pulse.t_off")? {
        pulse.t_off = t_off;
    }
    if let Some(h) = e.parsed("pulse.fd_step")? {
        pulse.fd_step = h;
    }
    pulse.floor_rel = e.or("pulse.floor_rel", DEFAULT_FLOOR_REL)?;
    if let Some((v, l)) = e.raw("pulse.phase_table") {
        pulse.phase_table = Some(parse_table(v, "pulse.phase_table", Some(l))?);
    }
    pulse
        .validate()
        .map_err(|err| ScenarioError::new("pulse", e.section_line("pulse"), err.to_string()))?;

    let steps: usize = e.required("grid.steps")?;
    if steps < 2 {
        return Err(ScenarioError::new("grid.steps", e.line("grid.steps"), "must be ≥ 2"));
    }
    let grid = TimeGrid { t_start: e.required("grid.t_start")?, t_end: e.required("grid.t_end")?, steps };
    if !(grid.t_start < grid.t_end) || !grid.t_end.is_finite() || !grid.t_start.is_finite() {
        return Err(ScenarioError::new("grid.t_end", e.line("grid.t_end"), "need finite t_start < t_end"));
    }

    let d = AdiabaticityOptions::default();
    let adiabaticity = AdiabaticityOptions {
        n_max: e.or("adiabaticity.n_max", d.n_max)?,
        threshold: e.or("adiabaticity.threshold", d.threshold)?,
        margin: e.or("adiabaticity.margin", d.margin)?,
        gamma_convention: e.or::<GammaConvention>("adiabaticity.gamma_convention", d.gamma_convention)?,
    };
    if !(adiabaticity.threshold > 0.0 && adiabaticity.threshold < 1.0) {
        return Err(ScenarioError::new(
            "adiabaticity.threshold",
            e.line("adiabaticity.threshold"),
            "must lie in (0, 1)",
        ));
    }
    if !(adiabaticity.margin >= 0.0) {
        return Err(ScenarioError::new("adiabaticity.margin", e.line("adiabaticity.margin"), "must be ≥ 0"));
    }

    let mc = if e.has_section("mc") && !e.section_is_empty("mc") {
        let rate_scale = nonneg("mc.rate_scale", freq("mc.rate_scale", None)?)?;
        let trajectories: usize = e.or("mc.trajectories", DEFAULT_TRAJECTORIES)?;
        if trajectories == 0 {
            return Err(ScenarioError::new("mc.trajectories", e.line("mc.trajectories"), "must be ≥ 1"));
        }
        Some(McConfig {
            rate_scale,
            rate_model: e.or("mc.rate_model", RateModel::Constant)?,
            trajectories,
            seed: e.or("mc.seed", 0u64)?,
            grid: grid.points(),
        })
    } else {
        None
    };

    let nads = NadsOptions {
        excited_form: match e.raw("nads.excited_form") {
            None => ExcitedForm::default(),
            Some((v, l)) => parse_excited_form(v).map_err(|m| ScenarioError::new("nads.excited_form", Some(l), m))?,
        },
        ..NadsOptions::default()
    };

    Ok(Scenario {
        name,
        unit,
        system,
        pulse,
        grid,
        adiabaticity,
        doppler_width,
        laser_width,
        density,
        temperature,
        mc,
        nads,
    })
}

impl std::str::FromStr for Scenario {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_scenario(s)
    }
}

const GRISCHKOWSKY: &str = "\
# Weak, far-detuned picosecond pulse on an atomic vapour line.
# rate_scale is a calibration of the loop engine so that the peak virtual
# ground population exceeds the peak real excited population twentyfold.
[scenario]
name = grischkowsky
unit = cm^-1
doppler_width = 0.04
laser_width = 0.005
density = 3e13
temperature = 400

[system]
omega_g = 0
omega_e = 12816.5

[pulse]
shape = gaussian
peak_rabi = 0.2
duration = 2000
carrier = 12815.7

[grid]
t_start = -6000
t_end = 6000
steps = 4001

[adiabaticity]
n_max = 3
threshold = 0.1
margin = 10

[mc]
rate_scale = 1e-4
rate_model = virtual-weighted
trajectories = 10000
seed = 42
";

const ZERO_FIELD: &str = "\
[scenario]
name = zero-field

[system]
omega_g = 0
omega_e = 10

[pulse]
shape = constant-wave
peak_rabi = 0
carrier = 9

[grid]
t_start = 0
t_end = 50
steps = 501
";

pub const BUILTIN_NAMES: &[&str] = &["grischkowsky", "zero-field"];

impl Scenario {
    pub fn builtin(name: &str) -> Option<Scenario> {
        let text = match name {
            "grischkowsky" => GRISCHKOWSKY,
            "zero-field" => ZERO_FIELD,
            _ => return None,
        };
        Some(parse_scenario(text).expect("built-in scenarios are valid"))
    }

    pub fn model(&self) -> NadsModel {
        NadsModel::new(self.system, self.pulse.clone()).with_options(self.nads)
    }

    pub fn grid_points(&self) -> Vec<f64> {
        self.grid.points()
    }

    /// Detuning in the declared unit.
    pub fn detuning_in_unit(&self) -> f64 {
        detuning(&self.system, &self.pulse) / self.unit.to_internal()
    }

    /// Full adiabaticity report, including the frequency-form check in the
    /// declared unit.
    pub fn check(&self) -> Result<AdiabaticityReport, AdiabaticityError> {
        let f = self.unit.to_internal();
        Ok(adiabaticity::check(&self.system, &self.pulse, &self.grid_points(), &self.adiabaticity)?
            .with_frequency_form(
                self.detuning_in_unit().abs(),
                self.doppler_width / f,
                self.laser_width / f,
                self.adiabaticity.margin,
            ))
    }

    /// Scenario text that parses back to `self`.
    pub fn render(&self) -> String {
        let f = self.unit.to_internal();
        let fr = |v: f64| format!("{:?}", v / f);
        let mut s = String::new();
        let _ = writeln!(s, "[scenario]");
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "unit = {}", self.unit.name());
        let _ = writeln!(s, "doppler_width = {}", fr(self.doppler_width));
        let _ = writeln!(s, "laser_width = {}", fr(self.laser_width));
        if let Some(d) = self.density {
            let _ = writeln!(s, "density = {d:?}");
        }
        if let Some(t) = self.temperature {
            let _ = writeln!(s, "temperature = {t:?}");
        }
        let _ = writeln!(s, "\n[system]");
        let _ = writeln!(s, "omega_g = {}", fr(self.system.omega_g));
        let _ = writeln!(s, "omega_e = {}", fr(self.system.omega_e));
        let _ = writeln!(s, "gamma_g = {}", fr(self.system.gamma_g));
        let _ = writeln!(s, "gamma_e = {}", fr(self.system.gamma_e));
        let p = &self.pulse;
        let _ = writeln!(s, "\n[pulse]");
        let shape = match p.shape {
            Envelope::ConstantWave => "constant-wave",
            Envelope::Gaussian => "gaussian",
            Envelope::Sech => "sech",
            Envelope::FlatTop { .. } => "flat-top",
        };
        let _ = writeln!(s, "shape = {shape}");
        let _ = writeln!(s, "peak_rabi = {}", fr(p.peak_rabi));
        let _ = writeln!(s, "duration = {:?}", p.duration);
        if let Envelope::FlatTop { ramp } = p.shape {
            let _ = writeln!(s, "ramp = {ramp:?}");
        }
        let _ = writeln!(s, "carrier = {}", fr(p.carrier));
        let _ = writeln!(s, "phase_offset = {:?}", p.phase_offset);
        let _ = writeln!(s, "chirp_rate = {}", fr(p.chirp_rate));
        if p.t_on.is_finite() {
            let _ = writeln!(s, "t_on = {:?}", p.t_on);
        }
        if p.t_off.is_finite() {
            let _ = writeln!(s, "t_off = {:?}", p.t_off);
        }
        let _ = writeln!(s, "fd_step = {:?}", p.fd_step);
        let _ = writeln!(s, "floor_rel = {:?}", p.floor_rel);
        if let Some(table) = &p.phase_table {
            let pairs: Vec<String> =
                table.times().iter().zip(table.values()).map(|(t, v)| format!("{t:?}:{v:?}")).collect();
            let _ = writeln!(s, "phase_table = {}", pairs.join(", "));
        }
        let _ = writeln!(s, "\n[grid]");
        let _ = writeln!(s, "t_start = {:?}", self.grid.t_start);
        let _ = writeln!(s, "t_end = {:?}", self.grid.t_end);
        let _ = writeln!(s, "steps = {}", self.grid.steps);
        let a = &self.adiabaticity;
        let _ = writeln!(s, "\n[adiabaticity]");
        let _ = writeln!(s, "n_max = {}", a.n_max);
        let _ = writeln!(s, "threshold = {:?}", a.threshold);
        let _ = writeln!(s, "margin = {:?}", a.margin);
        let _ = writeln!(s, "gamma_convention = {}", a.gamma_convention.name());
        if let Some(mc) = &self.mc {
            let _ = writeln!(s, "\n[mc]");
            let _ = writeln!(s, "rate_scale = {}", fr(mc.rate_scale));
            let _ = writeln!(s, "rate_model = {}", mc.rate_model.name());
            let _ = writeln!(s, "trajectories = {}", mc.trajectories);
            let _ = writeln!(s, "seed = {}", mc.seed);
        }
        let _ = writeln!(s, "\n[nads]");
        let _ = writeln!(s, "excited_form = {}", excited_form_name(self.nads.excited_form));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &str = "[system]\nomega_e = 10\n[pulse]\nshape = gaussian\npeak_rabi = 0.5\nduration = 20\ncarrier = 9\n[grid]\nt_start = -60\nt_end = 60\nsteps = 121\n";

    #[test]
    fn grischkowsky_values() {
        let s = Scenario::builtin("grischkowsky").unwrap();
        assert_eq!(s.unit, FrequencyUnit::Wavenumber);
        assert!((s.detuning_in_unit() - 0.8).abs() < 1e-9);
        let f = s.unit.to_internal();
        assert!((s.doppler_width / f - 0.04).abs() < 1e-15);
        assert!((s.laser_width / f - 0.005).abs() < 1e-15);
        assert_eq!((s.density, s.temperature), (Some(3e13), Some(400.0)));
        assert_eq!(s.mc.as_ref().unwrap().rate_model, RateModel::VirtualWeighted);
        let rep = s.check().unwrap();
        assert!(rep.frequency_form.unwrap().satisfied);
        assert!(rep.entry(0, 0).unwrap().satisfied);
    }

    #[test]
    fn minimal_defaults() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.unit, FrequencyUnit::Internal);
        assert_eq!(s.system, SystemSpec::undamped(10.0));
        assert_eq!(s.pulse, PulseSpec::gaussian(0.5, 20.0).with_carrier(9.0));
        assert_eq!(s.mc, None);
        assert_eq!(s.adiabaticity, AdiabaticityOptions::default());
    }

    #[test]
    fn empty_mc_section_disables_monte_carlo() {
        let s = parse_scenario(&format!("{MINIMAL}[mc]\n# nothing\n")).unwrap();
        assert_eq!(s.mc, None);
    }

    #[test]
    fn errors_name_key_and_line() {
        let e = parse_scenario(&MINIMAL.replace("steps = 121", "steps = 1")).unwrap_err();
        assert_eq!((e.key.as_str(), e.line), ("grid.steps", Some(11)));
        assert!(e.to_string().contains("grid.steps"));
        let e = parse_scenario(&MINIMAL.replace("carrier = 9", "carrier = 9\ncolour = red")).unwrap_err();
        assert_eq!((e.key.as_str(), e.line, e.message.as_str()), ("pulse.colour", Some(8), "unknown key"));
        let e = parse_scenario(&MINIMAL.replace("omega_e = 10\n", "")).unwrap_err();
        assert_eq!(e.key, "system.omega_e");
        let e = parse_scenario(&format!("[scenario]\nunit = furlongs\n{MINIMAL}")).unwrap_err();
        assert_eq!((e.key.as_str(), e.line), ("scenario.unit", Some(2)));
        let e = parse_scenario(&MINIMAL.replace("t_end = 60", "t_end = -70")).unwrap_err();
        assert_eq!(e.key, "grid.t_end");
        let e = parse_scenario(&MINIMAL.replace("peak_rabi = 0.5", "peak_rabi = x")).unwrap_err();
        assert_eq!((e.key.as_str(), e.line), ("pulse.peak_rabi", Some(5)));
        let e = parse_scenario(&format!("[bogus]\n{MINIMAL}")).unwrap_err();
        assert_eq!(e.key, "bogus");
    }

    #[test]
    fn units_apply_to_every_frequency() {
        let text = format!("[scenario]\nunit = GHz\n{}", MINIMAL.replace("carrier = 9", "carrier = 9\nchirp_rate = 0.5"));
        let s = parse_scenario(&text).unwrap();
        let f = FrequencyUnit::GHz.to_internal();
        assert_eq!(s.system.omega_e, 10.0 * f);
        assert_eq!(s.pulse.peak_rabi, 0.5 * f);
        assert_eq!(s.pulse.carrier, 9.0 * f);
        assert_eq!(s.pulse.chirp_rate, 0.5 * f);
        assert_eq!(s.pulse.duration, 20.0);
    }

    #[test]
    fn builtins_round_trip() {
        for name in BUILTIN_NAMES {
            let s = Scenario::builtin(name).unwrap();
            let back = parse_scenario(&s.render()).unwrap();
            assert_eq!(back.render(), s.render());
        }
        assert!(Scenario::builtin("nope").is_none());
    }

    fn close(a: f64, b: f64) -> bool {
        a == b || (a - b).abs() <= 4.0 * f64::EPSILON * a.abs().max(b.abs())
    }

    fn arb_scenario() -> impl Strategy<Value = Scenario> {
        (
            0usize..4,
            0.0f64..5.0,
            0.0f64..2.0,
            0.1f64..100.0,
            -0.1f64..0.1,
            0.0f64..0.5,
            2usize..500,
            0u8..4,
            proptest::option::of((0.0f64..1.0, 1usize..100_000, any::<u64>())),
            any::<bool>(),
        )
            .prop_map(|(unit, omega_e, rabi, duration, chirp, gamma, steps, shape, mc, table)| {
                let unit = [FrequencyUnit::Internal, FrequencyUnit::Wavenumber, FrequencyUnit::GHz, FrequencyUnit::THz]
                    [unit];
                let f = unit.to_internal();
                let mut pulse = match shape {
                    0 => PulseSpec::constant(rabi * f),
                    1 => PulseSpec::gaussian(rabi * f, duration),
                    2 => PulseSpec::sech(rabi * f, duration),
                    _ => PulseSpec::flat_top(rabi * f, duration, 0.25 * duration),
                }
                .with_carrier(omega_e * 0.9 * f)
                .with_chirp(chirp * f)
                .with_phase_offset(chirp * 3.0);
                if shape == 0 {
                    pulse.duration = 1.0;
                    pulse.fd_step = 1e-3;
                }
                if table {
                    pulse = pulse.with_phase_table(PhaseTable::new(vec![-1.0, 0.5, 2.0], vec![0.0, chirp, 0.3]).unwrap());
                }
                let grid = TimeGrid { t_start: -duration, t_end: 2.0 * duration, steps };
                Scenario {
                    name: "prop".into(),
                    unit,
                    system: SystemSpec { omega_g: 0.0, omega_e: (omega_e + 0.1) * f, gamma_g: 0.5 * gamma * f, gamma_e: gamma * f },
                    pulse,
                    grid,
                    adiabaticity: AdiabaticityOptions { n_max: steps % 5, threshold: 0.05, margin: 5.0, gamma_convention: GammaConvention::HalfSum },
                    doppler_width: 0.01 * f,
                    laser_width: 0.002 * f,
                    density: if table { Some(1e10) } else { None },
                    temperature: None,
                    mc: mc.map(|(rate, trajectories, seed)| McConfig {
                        rate_scale: rate * f,
                        rate_model: RateModel::VirtualWeighted,
                        trajectories,
                        seed,
                        grid: grid.points(),
                    }),
                    nads: NadsOptions { excited_form: if table { ExcitedForm::Symmetric } else { ExcitedForm::AsPrinted }, ..NadsOptions::default() },
                }
            })
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(s in arb_scenario()) {
            let back = parse_scenario(&s.render()).unwrap();
            if s.unit == FrequencyUnit::Internal {
                prop_assert_eq!(&back, &s);
            } else {
                let (a, b) = (&back.system, &s.system);
                prop_assert!(close(a.omega_e, b.omega_e) && close(a.gamma_g, b.gamma_g) && close(a.gamma_e, b.gamma_e));
                prop_assert!(close(back.pulse.peak_rabi, s.pulse.peak_rabi));
                prop_assert!(close(back.pulse.carrier, s.pulse.carrier));
                prop_assert!(close(back.pulse.chirp_rate, s.pulse.chirp_rate));
                prop_assert!(close(back.doppler_width, s.doppler_width));
                prop_assert_eq!(back.pulse.duration, s.pulse.duration);
                prop_assert_eq!(&back.pulse.phase_table, &s.pulse.phase_table);
                prop_assert_eq!(back.grid, s.grid);
                prop_assert_eq!(back.adiabaticity, s.adiabaticity);
                prop_assert_eq!(back.nads, s.nads);
                prop_assert_eq!(back.mc.is_some(), s.mc.is_some());
            }
        }
    }
}
