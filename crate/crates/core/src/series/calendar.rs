//! Month/quarter arithmetic and release-date rules.

use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};

use crate::{Error, Result};

/// Length of a month in the synthetic daily calendar.
pub const SYNTHETIC_MONTH_DAYS: u32 = 30;

/// A calendar month, stored as `year * 12 + (month - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Month(i32);

impl Month {
    pub fn new(year: i32, month: u32) -> Self {
        assert!((1..=12).contains(&month), "month out of range: {month}");
        Month(year * 12 + month as i32 - 1)
    }

    pub fn from_date(d: NaiveDate) -> Self {
        Month::new(d.year(), d.month())
    }

    pub fn index(self) -> i32 {
        self.0
    }

    pub fn year(self) -> i32 {
        self.0.div_euclid(12)
    }

    /// Calendar month in `1..=12`.
    pub fn month(self) -> u32 {
        self.0.rem_euclid(12) as u32 + 1
    }

    pub fn first_day(self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year(), self.month(), 1).expect("valid month")
    }

    pub fn days(self) -> u32 {
        let next = (self + 1).first_day();
        (next - self.first_day()).num_days() as u32
    }

    pub fn last_day(self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year(), self.month(), self.days()).expect("valid day")
    }

    /// Date of day `day` in this month, clamped to the month length.
    pub fn day(self, day: u32) -> NaiveDate {
        let d = day.clamp(1, self.days());
        NaiveDate::from_ymd_opt(self.year(), self.month(), d).expect("valid day")
    }

    pub fn quarter(self) -> Quarter {
        Quarter(self.0.div_euclid(3))
    }

    pub fn is_quarter_end(self) -> bool {
        self.month() % 3 == 0
    }
}

impl Add<i32> for Month {
    type Output = Month;
    fn add(self, rhs: i32) -> Month {
        Month(self.0 + rhs)
    }
}

impl Sub<i32> for Month {
    type Output = Month;
    fn sub(self, rhs: i32) -> Month {
        Month(self.0 - rhs)
    }
}

impl Sub<Month> for Month {
    type Output = i32;
    fn sub(self, rhs: Month) -> i32 {
        self.0 - rhs.0
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year(), self.month())
    }
}

impl FromStr for Month {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("expected month like 2019-07, got `{s}`"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u32 = m.parse().map_err(|_| bad())?;
        if !(1..=12).contains(&month) {
            return Err(bad());
        }
        Ok(Month::new(year, month))
    }
}

/// A calendar quarter, stored as `year * 4 + (quarter - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Quarter(i32);

impl Quarter {
    pub fn new(year: i32, q: u32) -> Self {
        assert!((1..=4).contains(&q), "quarter out of range: {q}");
        Quarter(year * 4 + q as i32 - 1)
    }

    pub fn year(self) -> i32 {
        self.0.div_euclid(4)
    }

    /// Quarter number in `1..=4`.
    pub fn number(self) -> u32 {
        self.0.rem_euclid(4) as u32 + 1
    }

    pub fn first_month(self) -> Month {
        Month(self.0 * 3)
    }

    pub fn last_month(self) -> Month {
        Month(self.0 * 3 + 2)
    }

    pub fn index(self) -> i32 {
        self.0
    }
}

impl Add<i32> for Quarter {
    type Output = Quarter;
    fn add(self, rhs: i32) -> Quarter {
        Quarter(self.0 + rhs)
    }
}

impl Sub<i32> for Quarter {
    type Output = Quarter;
    fn sub(self, rhs: i32) -> Quarter {
        Quarter(self.0 - rhs)
    }
}

impl Sub<Quarter> for Quarter {
    type Output = i32;
    fn sub(self, rhs: Quarter) -> i32 {
        self.0 - rhs.0
    }
}

impl fmt::Display for Quarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year(), self.number())
    }
}

impl FromStr for Quarter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("expected quarter like 2019Q3, got `{s}`"));
        let (y, q) = s.trim().split_once(['Q', 'q']).ok_or_else(bad)?;
        let year: i32 = y.parse().map_err(|_| bad())?;
        let q: u32 = q.parse().map_err(|_| bad())?;
        if !(1..=4).contains(&q) {
            return Err(bad());
        }
        Ok(Quarter::new(year, q))
    }
}

/// The information date of a vintage.
///
/// `Date` uses the real calendar. `Synthetic` is the daily-exercise calendar in
/// which every month has [`SYNTHETIC_MONTH_DAYS`] days; day 30 is the month end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsOf {
    Date(NaiveDate),
    Synthetic { month: Month, day: u32 },
}

impl AsOf {
    /// Vintage at the last day of `month` (real calendar).
    pub fn end_of_month(month: Month) -> Self {
        AsOf::Date(month.last_day())
    }

    pub fn month(&self) -> Month {
        match *self {
            AsOf::Date(d) => Month::from_date(d),
            AsOf::Synthetic { month, .. } => month,
        }
    }

    /// Day within the as-of month (synthetic days are returned as given).
    pub fn day(&self) -> u32 {
        match *self {
            AsOf::Date(d) => d.day(),
            AsOf::Synthetic { day, .. } => day,
        }
    }

    /// Whether a statistic published on day `day` of `month` is known.
    pub fn knows_release(&self, month: Month, day: u32) -> bool {
        match *self {
            AsOf::Date(d) => month.day(day) <= d,
            AsOf::Synthetic { month: m, day: dd } => (month, day) <= (m, dd),
        }
    }

    /// Whether a daily observation dated `date` is known.
    pub fn knows_date(&self, date: NaiveDate) -> bool {
        match *self {
            AsOf::Date(d) => date <= d,
            AsOf::Synthetic { month, day } => {
                let m = Month::from_date(date);
                m < month || (m == month && (day >= SYNTHETIC_MONTH_DAYS || date.day() <= day))
            }
        }
    }

    /// Latest real calendar date whose daily data are known.
    pub fn cutoff_date(&self) -> NaiveDate {
        match *self {
            AsOf::Date(d) => d,
            AsOf::Synthetic { month, day } => {
                if day >= SYNTHETIC_MONTH_DAYS {
                    month.last_day()
                } else {
                    month.day(day)
                }
            }
        }
    }
}

impl fmt::Display for AsOf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AsOf::Date(d) => write!(f, "{d}"),
            AsOf::Synthetic { month, day } => write!(f, "{month}-d{day:02}"),
        }
    }
}

/// Synthetic as-of for day `d` (1-based) of a daily window starting in `first`.
pub fn synthetic_day(first: Month, d: u32) -> AsOf {
    assert!(d >= 1, "synthetic days are 1-based");
    let offset = (d - 1) / SYNTHETIC_MONTH_DAYS;
    AsOf::Synthetic {
        month: first + offset as i32,
        day: (d - 1) % SYNTHETIC_MONTH_DAYS + 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn month_arithmetic() {
        let m = Month::new(2020, 1);
        assert_eq!((m - 1).to_string(), "2019-12");
        assert_eq!((m + 14).to_string(), "2021-03");
        assert_eq!(Month::new(2020, 2).days(), 29);
        assert_eq!(Month::new(2021, 2).last_day(), NaiveDate::from_ymd_opt(2021, 2, 28).unwrap());
        assert!(Month::new(2020, 6).is_quarter_end());
        assert_eq!(Month::new(2020, 5).quarter(), Quarter::new(2020, 2));
        assert_eq!(Month::new(-1, 12).month(), 12);
    }

    #[test]
    fn quarter_parse_roundtrip() {
        let q: Quarter = "2019Q3".parse().unwrap();
        assert_eq!(q.first_month(), Month::new(2019, 7));
        assert_eq!(q.last_month(), Month::new(2019, 9));
        assert_eq!(q.to_string(), "2019Q3");
        assert!("2019Q5".parse::<Quarter>().is_err());
    }

    #[test]
    fn month_parse_roundtrip() {
        let m: Month = "2019-07".parse().unwrap();
        assert_eq!(m, Month::new(2019, 7));
        assert_eq!(m.to_string().parse::<Month>().unwrap(), m);
        assert!("2019-13".parse::<Month>().is_err());
        assert!("2019Q1".parse::<Month>().is_err());
    }

    #[test]
    fn synthetic_days_map_to_months() {
        let first = Month::new(2020, 1);
        assert_eq!(synthetic_day(first, 1), AsOf::Synthetic { month: first, day: 1 });
        assert_eq!(synthetic_day(first, 30), AsOf::Synthetic { month: first, day: 30 });
        assert_eq!(synthetic_day(first, 73), AsOf::Synthetic { month: first + 2, day: 13 });
        assert_eq!(synthetic_day(first, 150), AsOf::Synthetic { month: first + 4, day: 30 });
    }

    #[test]
    fn release_rules_clamp_to_month_length() {
        let feb = Month::new(2021, 2);
        let end = AsOf::end_of_month(feb);
        assert!(end.knows_release(feb, 30));
        let synth = AsOf::Synthetic { month: feb, day: 28 };
        assert!(!synth.knows_release(feb, 30));
        assert!(synth.knows_date(feb.day(28)));
        let synth_end = AsOf::Synthetic { month: feb, day: 30 };
        assert_eq!(synth_end.cutoff_date(), feb.last_day());
    }
}
