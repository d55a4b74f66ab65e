//! Calendar months.
//!
//! All series in this crate are monthly, so a date is just a year and a
//! month. Day-of-month information in input files is validated and dropped.

use std::fmt;
use std::str::FromStr;

/// A calendar month, ordered chronologically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    year: i32,
    month: u8,
}

impl YearMonth {
    pub fn new(year: i32, month: u8) -> Option<Self> {
        (1..=12).contains(&month).then_some(Self { year, month })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u8 {
        self.month
    }

    /// Months since year 0, January.
    pub fn ordinal(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    pub fn from_ordinal(ord: i64) -> Self {
        let year = ord.div_euclid(12) as i32;
        let month = (ord.rem_euclid(12) + 1) as u8;
        Self { year, month }
    }

    /// Shift by a signed number of months.
    pub fn add_months(self, k: i64) -> Self {
        Self::from_ordinal(self.ordinal() + k)
    }

    pub fn succ(self) -> Self {
        self.add_months(1)
    }

    /// Signed number of months from `self` to `other`.
    pub fn months_until(self, other: Self) -> i64 {
        other.ordinal() - self.ordinal()
    }

    /// Label such as `2009:M4`, as used for reporting break dates.
    pub fn colon_label(self) -> String {
        format!("{}:M{}", self.year, self.month)
    }

    /// Compact label such as `2009M4`, used for sample ranges.
    pub fn compact_label(self) -> String {
        format!("{}M{}", self.year, self.month)
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseYearMonthError(pub String);

impl fmt::Display for ParseYearMonthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "invalid year-month '{}' (expected YYYY-MM or YYYY-MM-DD)",
            self.0
        )
    }
}

impl std::error::Error for ParseYearMonthError {}

fn days_in_month(year: i32, month: u8) -> u8 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        _ => {
            let leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
            if leap {
                29
            } else {
                28
            }
        }
    }
}

impl FromStr for YearMonth {
    type Err = ParseYearMonthError;

    /// Accepts `YYYY-MM` or `YYYY-MM-DD`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseYearMonthError(s.to_string());
        let t = s.trim();
        let parts: Vec<&str> = t.split('-').collect();
        if !(parts.len() == 2 || parts.len() == 3) || parts[0].len() != 4 || parts[1].len() != 2 {
            return Err(err());
        }
        let year: i32 = parts[0].parse().map_err(|_| err())?;
        let month: u8 = parts[1].parse().map_err(|_| err())?;
        let ym = YearMonth::new(year, month).ok_or_else(err)?;
        if parts.len() == 3 {
            if parts[2].len() != 2 {
                return Err(err());
            }
            let day: u8 = parts[2].parse().map_err(|_| err())?;
            if day == 0 || day > days_in_month(year, month) {
                return Err(err());
            }
        }
        Ok(ym)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_forms() {
        let a: YearMonth = "1971-01".parse().unwrap();
        let b: YearMonth = "1971-01-31".parse().unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "1971-01");
    }

    #[test]
    fn rejects_bad_dates() {
        for s in ["1971-13", "71-01", "1971-02-30", "1971/01", "", "1971-1"] {
            assert!(s.parse::<YearMonth>().is_err(), "{s}");
        }
        assert!("2000-02-29".parse::<YearMonth>().is_ok());
        assert!("1900-02-29".parse::<YearMonth>().is_err());
    }

    #[test]
    fn arithmetic() {
        let d = YearMonth::new(2009, 12).unwrap();
        assert_eq!(d.succ(), YearMonth::new(2010, 1).unwrap());
        assert_eq!(d.add_months(-12), YearMonth::new(2008, 12).unwrap());
        assert_eq!(d.months_until(YearMonth::new(2010, 4).unwrap()), 4);
        assert_eq!(YearMonth::new(2009, 4).unwrap().colon_label(), "2009:M4");
        assert_eq!(YearMonth::new(1971, 1).unwrap().compact_label(), "1971M1");
    }
}
