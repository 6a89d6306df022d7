//! Frequency units accepted in scenario files.
//!
//! Internally every angular frequency is in rad/ps (ħ = 1) and every time is
//! in ps. The `internal` unit means values are already in that system.

use std::fmt;
use std::str::FromStr;

use std::f64::consts::TAU;

/// Speed of light in cm/ps.
const SPEED_OF_LIGHT_CM_PER_PS: f64 = 0.029_979_245_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrequencyUnit {
    #[default]
    Internal,
    /// Spectroscopic wavenumber; 1 cm⁻¹ = 2π × 29.9792458 GHz.
    Wavenumber,
    GHz,
    THz,
}

impl FrequencyUnit {
    /// Multiplier from this unit to rad/ps.
    pub fn to_internal(self) -> f64 {
        match self {
            FrequencyUnit::Internal => 1.0,
            FrequencyUnit::Wavenumber => TAU * SPEED_OF_LIGHT_CM_PER_PS,
            FrequencyUnit::GHz => TAU * 1e-3,
            FrequencyUnit::THz => TAU,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FrequencyUnit::Internal => "internal",
            FrequencyUnit::Wavenumber => "cm^-1",
            FrequencyUnit::GHz => "GHz",
            FrequencyUnit::THz => "THz",
        }
    }
}

impl fmt::Display for FrequencyUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FrequencyUnit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "internal" => Ok(FrequencyUnit::Internal),
            "cm^-1" | "cm-1" | "1/cm" => Ok(FrequencyUnit::Wavenumber),
            "GHz" | "ghz" => Ok(FrequencyUnit::GHz),
            "THz" | "thz" => Ok(FrequencyUnit::THz),
            other => Err(format!("unknown frequency unit '{other}'")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumber_conversion() {
        // 2π × 29.9792458 GHz expressed in rad/ps
        let expected = 2.0 * std::f64::consts::PI * 29.979_245_8e9 * 1e-12;
        assert!((FrequencyUnit::Wavenumber.to_internal() - expected).abs() < 1e-15);
        assert!((FrequencyUnit::Wavenumber.to_internal() - 0.188_365_156_731_6).abs() < 1e-12);
    }

    #[test]
    fn parse_and_display_agree() {
        for unit in [FrequencyUnit::Internal, FrequencyUnit::Wavenumber, FrequencyUnit::GHz, FrequencyUnit::THz] {
            assert_eq!(unit.name().parse::<FrequencyUnit>().unwrap(), unit);
        }
        assert!("eV".parse::<FrequencyUnit>().is_err());
    }
}
