//! 30-minute program time units on a UTC grid.

use std::fmt;
use std::ops::{Add, Sub};

use chrono::{DateTime, TimeZone, Timelike, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PTU_MINUTES: i64 = 30;
pub const PTU_HOURS: f64 = 0.5;
pub const PTUS_PER_DAY: i64 = 48;
/// Day-ahead gate closure, as a PTU offset within the day (12:00 UTC).
pub const DAY_AHEAD_GATE_OFFSET: i64 = 24;

/// Index of a 30-minute slot counted from the Unix epoch. A `Ptu` names both
/// the slot and its start timestamp.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Ptu(pub i64);

impl Ptu {
    const SECONDS: i64 = PTU_MINUTES * 60;

    /// Exact conversion; errors when `t` is not on a PTU boundary.
    pub fn from_datetime(t: DateTime<Utc>) -> Result<Self> {
        let secs = t.timestamp();
        if secs.rem_euclid(Self::SECONDS) != 0 || t.nanosecond() != 0 {
            return Err(Error::InvalidInput(format!(
                "timestamp {} is not aligned to a 30-minute boundary",
                t.to_rfc3339()
            )));
        }
        Ok(Ptu(secs.div_euclid(Self::SECONDS)))
    }

    /// First PTU boundary at or after `t`. Used for forecast issue times, which
    /// only become usable at the next clock tick.
    pub fn ceil_from(t: DateTime<Utc>) -> Self {
        let secs = t.timestamp();
        let extra = if t.nanosecond() > 0 { 1 } else { 0 };
        let q = secs.div_euclid(Self::SECONDS);
        if secs.rem_euclid(Self::SECONDS) == 0 && extra == 0 {
            Ptu(q)
        } else {
            Ptu(q + 1)
        }
    }

    pub fn to_datetime(self) -> DateTime<Utc> {
        Utc.timestamp_opt(self.0 * Self::SECONDS, 0)
            .single()
            .expect("PTU index within chrono range")
    }

    pub fn day(self) -> i64 {
        self.0.div_euclid(PTUS_PER_DAY)
    }

    pub fn slot_of_day(self) -> i64 {
        self.0.rem_euclid(PTUS_PER_DAY)
    }

    pub fn start_of_day(day: i64) -> Self {
        Ptu(day * PTUS_PER_DAY)
    }

    pub fn is_day_ahead_gate(self) -> bool {
        self.slot_of_day() == DAY_AHEAD_GATE_OFFSET
    }

    /// Tick at which day-ahead bids covering this PTU are submitted.
    pub fn day_ahead_gate(self) -> Self {
        Ptu(Self::start_of_day(self.day()).0 - PTUS_PER_DAY + DAY_AHEAD_GATE_OFFSET)
    }

    /// Latest tick at which an intra-day trade for this PTU can be placed.
    pub fn intraday_gate(self) -> Self {
        Ptu(self.0 - 1)
    }
}

impl Add<i64> for Ptu {
    type Output = Ptu;
    fn add(self, rhs: i64) -> Ptu {
        Ptu(self.0 + rhs)
    }
}

impl Sub<i64> for Ptu {
    type Output = Ptu;
    fn sub(self, rhs: i64) -> Ptu {
        Ptu(self.0 - rhs)
    }
}

impl Sub<Ptu> for Ptu {
    type Output = i64;
    fn sub(self, rhs: Ptu) -> i64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for Ptu {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_datetime().format("%Y-%m-%dT%H:%M:%SZ"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_aligned_timestamps() {
        let t = Utc.with_ymd_and_hms(2017, 9, 1, 12, 30, 0).unwrap();
        let p = Ptu::from_datetime(t).unwrap();
        assert_eq!(p.to_datetime(), t);
        assert_eq!(p.slot_of_day(), 25);
        assert_eq!(p.to_string(), "2017-09-01T12:30:00Z");
    }

    #[test]
    fn rejects_misaligned() {
        let t = Utc.with_ymd_and_hms(2017, 9, 1, 12, 31, 0).unwrap();
        assert!(Ptu::from_datetime(t).is_err());
        assert_eq!(Ptu::ceil_from(t).to_datetime().minute(), 0);
        assert_eq!(Ptu::ceil_from(t).to_datetime().hour(), 13);
    }

    #[test]
    fn gates() {
        let midnight = Ptu::from_datetime(Utc.with_ymd_and_hms(2018, 1, 2, 0, 0, 0).unwrap()).unwrap();
        let noon_before = Ptu::from_datetime(Utc.with_ymd_and_hms(2018, 1, 1, 12, 0, 0).unwrap()).unwrap();
        assert_eq!(midnight.day_ahead_gate(), noon_before);
        assert_eq!((midnight + 47).day_ahead_gate(), noon_before);
        assert!(noon_before.is_day_ahead_gate());
        assert_eq!(midnight.intraday_gate(), midnight - 1);
    }
}
