//! Time values. One scheduling cycle is one nanosecond; every time value is
//! canonicalized to whole nanoseconds.

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimeUnit {
    Ns,
    Us,
    Ms,
    S,
}

impl TimeUnit {
    pub fn ns_per_unit(self) -> f64 {
        match self {
            TimeUnit::Ns => 1.0,
            TimeUnit::Us => 1e3,
            TimeUnit::Ms => 1e6,
            TimeUnit::S => 1e9,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TimeUnit::Ns => "ns",
            TimeUnit::Us => "us",
            TimeUnit::Ms => "ms",
            TimeUnit::S => "s",
        }
    }
}

impl FromStr for TimeUnit {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ns" => Ok(TimeUnit::Ns),
            "us" => Ok(TimeUnit::Us),
            "ms" => Ok(TimeUnit::Ms),
            "s" => Ok(TimeUnit::S),
            _ => Err(()),
        }
    }
}

/// A magnitude with a unit, as written in source or configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeValue {
    pub magnitude: f64,
    pub unit: TimeUnit,
}

/// Tolerance used to decide whether a converted duration is a whole number of
/// nanoseconds.
const WHOLE_NS_TOLERANCE: f64 = 1e-6;

impl TimeValue {
    pub fn new(magnitude: f64, unit: TimeUnit) -> Self {
        TimeValue { magnitude, unit }
    }

    pub fn ns(magnitude: f64) -> Self {
        TimeValue::new(magnitude, TimeUnit::Ns)
    }

    pub fn as_ns_f64(&self) -> f64 {
        self.magnitude * self.unit.ns_per_unit()
    }

    /// Rounds to the nearest nanosecond.
    pub fn to_ns_rounded(&self) -> Option<i64> {
        let v = self.as_ns_f64();
        v.is_finite().then(|| v.round() as i64)
    }

    /// Converts to whole nanoseconds, refusing values that are not integral
    /// (for example `1.5ns`).
    pub fn to_ns_exact(&self) -> Option<i64> {
        let v = self.as_ns_f64();
        if !v.is_finite() {
            return None;
        }
        let r = v.round();
        ((v - r).abs() <= WHOLE_NS_TOLERANCE).then_some(r as i64)
    }
}

impl fmt::Display for TimeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.magnitude, self.unit.as_str())
    }
}

/// Parses text such as `20ns`, `0.02us` or a bare number of nanoseconds.
pub fn parse_time_text(text: &str) -> Option<TimeValue> {
    let text = text.trim();
    let split = text.char_indices().find(|(_, c)| c.is_ascii_alphabetic()).map(|(i, _)| i).unwrap_or(text.len());
    let (num, unit) = text.split_at(split);
    let magnitude: f64 = num.trim().parse().ok()?;
    let unit = if unit.is_empty() { TimeUnit::Ns } else { unit.parse().ok()? };
    Some(TimeValue::new(magnitude, unit))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_conversion() {
        assert_eq!(TimeValue::ns(20.0).to_ns_exact(), Some(20));
        assert_eq!(TimeValue::new(0.02, TimeUnit::Us).to_ns_exact(), Some(20));
        assert_eq!(TimeValue::ns(1.5).to_ns_exact(), None);
        assert_eq!(TimeValue::ns(1.5).to_ns_rounded(), Some(2));
        assert_eq!(parse_time_text("0.3us").unwrap().to_ns_exact(), Some(300));
        assert!(parse_time_text("5xs").is_none());
    }
}
