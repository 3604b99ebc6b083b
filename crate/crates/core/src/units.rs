//! Unit-tagged scalar quantities used by the config layer.
//!
//! Dimensional values are written as `"<number> <unit>"`, e.g.
//! `"20 MHz_over_2pi"` or `"0.05 us"`. Bare numbers are rejected for
//! dimensional fields. Internally frequencies are angular (rad/us).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const TWO_PI: f64 = 2.0 * PI;

/// Converts `f/(2 pi)` in MHz to angular rad/us.
pub fn mhz(value: f64) -> f64 {
    TWO_PI * value
}

/// Converts `f/(2 pi)` in GHz to angular rad/us.
pub fn ghz(value: f64) -> f64 {
    TWO_PI * 1e3 * value
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    /// Frequency quoted as f/(2 pi) in MHz.
    MhzOver2Pi,
    /// Frequency quoted as f/(2 pi) in GHz.
    GhzOver2Pi,
    /// Angular frequency in rad/us.
    RadPerUs,
    /// Rate in 1/us.
    PerUs,
    Us,
    Ns,
    Rad,
    /// Dimensionless number.
    One,
}

impl Unit {
    pub fn tag(self) -> &'static str {
        match self {
            Unit::MhzOver2Pi => "MHz_over_2pi",
            Unit::GhzOver2Pi => "GHz_over_2pi",
            Unit::RadPerUs => "rad_per_us",
            Unit::PerUs => "per_us",
            Unit::Us => "us",
            Unit::Ns => "ns",
            Unit::Rad => "rad",
            Unit::One => "1",
        }
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "MHz_over_2pi" => Unit::MhzOver2Pi,
            "GHz_over_2pi" => Unit::GhzOver2Pi,
            "rad_per_us" => Unit::RadPerUs,
            "per_us" => Unit::PerUs,
            "us" => Unit::Us,
            "ns" => Unit::Ns,
            "rad" => Unit::Rad,
            "1" => Unit::One,
            other => return Err(Error::Unit(format!("unknown unit tag `{other}`"))),
        })
    }
}

/// A number with an explicit unit tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub unit: Unit,
}

impl Quantity {
    pub fn new(value: f64, unit: Unit) -> Self {
        Self { value, unit }
    }

    /// Angular frequency in rad/us.
    pub fn angular(&self) -> Result<f64> {
        match self.unit {
            Unit::MhzOver2Pi => Ok(mhz(self.value)),
            Unit::GhzOver2Pi => Ok(ghz(self.value)),
            Unit::RadPerUs => Ok(self.value),
            u => Err(Error::Unit(format!("expected a frequency, got `{}`", u.tag()))),
        }
    }

    /// Decay rate in 1/us. Accepts `per_us` or a lifetime in `us`/`ns`.
    pub fn rate(&self) -> Result<f64> {
        match self.unit {
            Unit::PerUs => Ok(self.value),
            Unit::Us | Unit::Ns => {
                let tau = self.micros()?;
                if tau <= 0.0 {
                    return Err(Error::Unit("lifetime must be positive".into()));
                }
                Ok(1.0 / tau)
            }
            u => Err(Error::Unit(format!("expected a rate or lifetime, got `{}`", u.tag()))),
        }
    }

    pub fn micros(&self) -> Result<f64> {
        match self.unit {
            Unit::Us => Ok(self.value),
            Unit::Ns => Ok(self.value * 1e-3),
            u => Err(Error::Unit(format!("expected a time, got `{}`", u.tag()))),
        }
    }

    pub fn radians(&self) -> Result<f64> {
        match self.unit {
            Unit::Rad => Ok(self.value),
            u => Err(Error::Unit(format!("expected an angle, got `{}`", u.tag()))),
        }
    }

    pub fn dimensionless(&self) -> Result<f64> {
        match self.unit {
            Unit::One => Ok(self.value),
            u => Err(Error::Unit(format!("expected a plain number, got `{}`", u.tag()))),
        }
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split_whitespace();
        let (Some(num), Some(tag), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Unit(format!(
                "`{s}` is not of the form \"<number> <unit>\""
            )));
        };
        let value: f64 = num
            .parse()
            .map_err(|_| Error::Unit(format!("`{num}` is not a number")))?;
        if !value.is_finite() {
            return Err(Error::Unit(format!("`{num}` is not finite")));
        }
        Ok(Quantity::new(value, tag.parse()?))
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.value, self.unit.tag())
    }
}

impl Serialize for Quantity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Quantity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tagged_frequencies() {
        let q: Quantity = "20 MHz_over_2pi".parse().unwrap();
        assert!((q.angular().unwrap() - 40.0 * PI).abs() < 1e-12);
        let q: Quantity = "-4 GHz_over_2pi".parse().unwrap();
        assert!((q.angular().unwrap() + 8000.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn rejects_bare_numbers_and_wrong_dimensions() {
        assert!("20".parse::<Quantity>().is_err());
        assert!("20 furlongs".parse::<Quantity>().is_err());
        let q: Quantity = "0.05 us".parse().unwrap();
        assert!(q.angular().is_err());
        assert_eq!(q.micros().unwrap(), 0.05);
    }

    #[test]
    fn lifetime_converts_to_rate() {
        let q: Quantity = "155 ns".parse().unwrap();
        assert!((q.rate().unwrap() - 1.0 / 0.155).abs() < 1e-12);
    }
}
