//! Unit-carrying quantities.
//!
//! Simulation internals run in minutes and kilometres. The planning formulas
//! are usually quoted per hour (arrival rates in requests/h, speeds in km/h),
//! so every public planning operation takes one of these wrappers instead of a
//! bare `f64`, and conversion happens in exactly one place.

use serde::{Deserialize, Serialize};

/// A span of time, stored in minutes.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
pub struct TimeSpan(f64);

impl TimeSpan {
    pub const fn minutes(m: f64) -> Self {
        Self(m)
    }

    pub fn hours(h: f64) -> Self {
        Self(h * 60.0)
    }

    pub const fn as_minutes(self) -> f64 {
        self.0
    }

    pub fn as_hours(self) -> f64 {
        self.0 / 60.0
    }
}

/// An event rate, stored per minute.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Rate(f64);

impl Rate {
    pub const fn per_minute(r: f64) -> Self {
        Self(r)
    }

    pub fn per_hour(r: f64) -> Self {
        Self(r / 60.0)
    }

    pub const fn as_per_minute(self) -> f64 {
        self.0
    }

    pub fn as_per_hour(self) -> f64 {
        self.0 * 60.0
    }
}

/// A ground speed, stored in km per minute.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Speed(f64);

impl Speed {
    pub fn kmh(v: f64) -> Self {
        Self(v / 60.0)
    }

    pub const fn km_per_minute(v: f64) -> Self {
        Self(v)
    }

    pub const fn as_km_per_minute(self) -> f64 {
        self.0
    }

    pub fn as_kmh(self) -> f64 {
        self.0 * 60.0
    }

    /// Time needed to cover `km` at this speed.
    pub fn travel_time(self, km: f64) -> TimeSpan {
        TimeSpan::minutes(km / self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_round_trip() {
        assert_eq!(TimeSpan::hours(0.5).as_minutes(), 30.0);
        assert_eq!(Rate::per_hour(39.0).as_per_minute(), 0.65);
        assert!((Speed::kmh(30.0).as_km_per_minute() - 0.5).abs() < 1e-15);
        assert!((Speed::kmh(30.0).travel_time(1.5).as_minutes() - 3.0).abs() < 1e-12);
    }
}
