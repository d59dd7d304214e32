use std::ops::Range;

use chrono::NaiveDate;

use super::series::{RoadDataset, SLOTS_PER_DAY};
use crate::error::{Error, Result};

/// A named half-open interval of whole days counted from the dataset start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedDays {
    pub name: String,
    pub days: Range<usize>,
}

impl NamedDays {
    pub fn new(name: impl Into<String>, days: Range<usize>) -> Self {
        Self {
            name: name.into(),
            days,
        }
    }

    /// `[start, end)` as calendar dates relative to `origin`.
    pub fn from_dates(
        name: impl Into<String>,
        origin: NaiveDate,
        start: NaiveDate,
        end: NaiveDate,
    ) -> Result<Self> {
        let offset = |d: NaiveDate| {
            usize::try_from((d - origin).num_days())
                .map_err(|_| Error::Contract(format!("date {d} precedes dataset start {origin}")))
        };
        Ok(Self::new(name, offset(start)?..offset(end)?))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedSlots {
    pub name: String,
    pub slots: Range<usize>,
}

/// Converts named day intervals into slot intervals of `dataset`.
pub fn split_by_calendar(dataset: &RoadDataset, ranges: &[NamedDays]) -> Result<Vec<NamedSlots>> {
    let span_days = dataset.len() / SLOTS_PER_DAY;
    for r in ranges {
        if r.days.start > r.days.end {
            return Err(Error::Contract(format!("interval {} is reversed", r.name)));
        }
        if r.days.end > span_days {
            return Err(Error::Contract(format!(
                "interval {} ends at day {} beyond the {span_days}-day dataset",
                r.name, r.days.end
            )));
        }
    }
    for (i, a) in ranges.iter().enumerate() {
        for b in &ranges[i + 1..] {
            if a.days.start < b.days.end && b.days.start < a.days.end {
                return Err(Error::Contract(format!(
                    "intervals {} and {} overlap",
                    a.name, b.name
                )));
            }
        }
    }
    Ok(ranges
        .iter()
        .map(|r| NamedSlots {
            name: r.name.clone(),
            slots: r.days.start * SLOTS_PER_DAY..r.days.end * SLOTS_PER_DAY,
        })
        .collect())
}

/// Two consecutive years, each `year_days` long (365 for real data; a small
/// value such as 28 for desk-scale runs). Months scale with the year.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Calendar {
    pub year_days: usize,
}

impl Default for Calendar {
    fn default() -> Self {
        Self { year_days: 365 }
    }
}

impl Calendar {
    pub fn new(year_days: usize) -> Result<Self> {
        if year_days == 0 {
            return Err(Error::Spec("a year needs at least one day".into()));
        }
        Ok(Self { year_days })
    }

    /// Length of January: 31 days in a 365-day year, scaled, at least one day.
    pub fn month_days(&self) -> usize {
        ((31 * self.year_days) as f64 / 365.0).round().max(1.0) as usize
    }

    pub fn total_days(&self) -> usize {
        2 * self.year_days
    }

    pub fn year1(&self) -> NamedDays {
        NamedDays::new("year1", 0..self.year_days)
    }

    pub fn january_year2(&self) -> NamedDays {
        NamedDays::new(
            "january_year2",
            self.year_days..self.year_days + self.month_days(),
        )
    }

    pub fn test_year2(&self) -> NamedDays {
        NamedDays::new("test_year2", self.year_days..self.total_days())
    }

    pub fn february_onward_year2(&self) -> NamedDays {
        NamedDays::new(
            "february_onward_year2",
            self.year_days + self.month_days()..self.total_days(),
        )
    }

    pub fn by_name(&self, name: &str) -> Option<NamedDays> {
        match name {
            "year1" => Some(self.year1()),
            "january_year2" => Some(self.january_year2()),
            "test_year2" => Some(self.test_year2()),
            "february_onward_year2" => Some(self.february_onward_year2()),
            _ => None,
        }
    }

    pub fn release_slot(&self) -> usize {
        self.year_days * SLOTS_PER_DAY
    }

    pub fn february_slot(&self) -> usize {
        (self.year_days + self.month_days()) * SLOTS_PER_DAY
    }
}
