use std::collections::BTreeMap;

use chrono::{DateTime, Datelike, IsoWeek, NaiveDate, TimeDelta, Timelike, Utc, Weekday};

use super::{Bin, Result, SeriesKey, TimeseriesError, TopicSeries};

/// One ISO week of a series. `means[slot]` and `counts[slot]` are indexed by
/// `weekday * slots_per_day + slot_of_day` with Monday as weekday 0.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlayWeek {
    pub week: IsoWeek,
    pub highlight: bool,
    pub means: Vec<Option<f64>>,
    pub counts: Vec<usize>,
}

/// A series folded onto a Monday-first week.
#[derive(Clone, Debug, PartialEq)]
pub struct WeeklyOverlay {
    pub camera: String,
    pub key: SeriesKey,
    pub bin_width: TimeDelta,
    pub slots_per_day: usize,
    /// Chronological.
    pub weeks: Vec<OverlayWeek>,
    /// Distinct weeks of the requested highlight dates, sorted, whether or
    /// not the series reaches them.
    pub highlight_weeks: Vec<IsoWeek>,
}

impl WeeklyOverlay {
    pub fn slots_per_week(&self) -> usize {
        7 * self.slots_per_day
    }

    /// `(weekday, slot_of_day)` of a week slot; weekday 0 is Monday.
    pub fn slot_position(&self, slot: usize) -> (usize, usize) {
        (slot / self.slots_per_day, slot % self.slots_per_day)
    }

    /// Start instant of `slot` in `week`.
    pub fn slot_start(&self, week: IsoWeek, slot: usize) -> DateTime<Utc> {
        let monday = NaiveDate::from_isoywd_opt(week.year(), week.week(), Weekday::Mon)
            .expect("valid ISO week")
            .and_hms_opt(0, 0, 0)
            .expect("midnight")
            .and_utc();
        monday + self.bin_width * slot as i32
    }

    /// Populated bins back in chronological order.
    pub fn flatten(&self) -> Vec<Bin> {
        let mut out = Vec::new();
        for w in &self.weeks {
            for (slot, (&mean, &count)) in w.means.iter().zip(&w.counts).enumerate() {
                if count > 0 {
                    out.push(Bin {
                        start: self.slot_start(w.week, slot),
                        mean,
                        count,
                    });
                }
            }
        }
        out
    }
}

/// Reindexes `series` into ISO weeks. Weeks containing any of `highlight`
/// are flagged.
pub fn weekly_overlay(series: &TopicSeries, highlight: &[NaiveDate]) -> Result<WeeklyOverlay> {
    let width = series.bin_width.num_seconds();
    if width <= 0 || series.bin_width.subsec_nanos() != 0 || 86_400 % width != 0 {
        return Err(TimeseriesError::IncompatibleBinWidth(series.bin_width));
    }
    let slots_per_day = (86_400 / width) as usize;

    let mut highlight_weeks: Vec<IsoWeek> = highlight.iter().map(|d| d.iso_week()).collect();
    highlight_weeks.sort();
    highlight_weeks.dedup();

    let mut weeks: BTreeMap<IsoWeek, OverlayWeek> = BTreeMap::new();
    for bin in &series.bins {
        let seconds = i64::from(bin.start.num_seconds_from_midnight());
        if seconds % width != 0 {
            return Err(TimeseriesError::MisalignedBins(bin.start));
        }
        let date = bin.start.date_naive();
        let slot = date.weekday().num_days_from_monday() as usize * slots_per_day
            + (seconds / width) as usize;
        let week = date.iso_week();
        let entry = weeks.entry(week).or_insert_with(|| OverlayWeek {
            week,
            highlight: highlight_weeks.binary_search(&week).is_ok(),
            means: vec![None; 7 * slots_per_day],
            counts: vec![0; 7 * slots_per_day],
        });
        entry.means[slot] = bin.mean;
        entry.counts[slot] = bin.count;
    }

    Ok(WeeklyOverlay {
        camera: series.camera.clone(),
        key: series.key,
        bin_width: series.bin_width,
        slots_per_day,
        weeks: weeks.into_values().collect(),
        highlight_weeks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_timestamp;
    use crate::timeseries::default_bin_width;

    fn series(bins: Vec<(&str, Option<f64>, usize)>) -> TopicSeries {
        TopicSeries {
            camera: "cam".into(),
            key: SeriesKey::Topic(0),
            bin_width: default_bin_width(),
            bins: bins
                .into_iter()
                .map(|(s, mean, count)| Bin {
                    start: parse_timestamp(s).unwrap(),
                    mean,
                    count,
                })
                .collect(),
        }
    }

    fn date(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    #[test]
    fn one_week_is_one_row() {
        // 2018-01-01 is a Monday
        let s = series(vec![
            ("2018-01-01T00:00:00Z", Some(0.1), 1),
            ("2018-01-07T23:45:00Z", Some(0.9), 2),
        ]);
        let o = weekly_overlay(&s, &[]).unwrap();
        assert_eq!(o.slots_per_week(), 672);
        assert_eq!(o.weeks.len(), 1);
        assert_eq!(o.weeks[0].means[0], Some(0.1));
        assert_eq!(o.weeks[0].means[671], Some(0.9));
        assert_eq!(o.slot_position(671), (6, 95));
        assert_eq!(o.flatten(), s.bins);
    }

    #[test]
    fn highlight_flags_the_containing_week() {
        let s = series(vec![
            ("2017-12-26T12:00:00Z", Some(0.5), 1),
            ("2018-01-02T12:00:00Z", Some(0.5), 1),
            ("2018-01-09T12:00:00Z", Some(0.5), 1),
        ]);
        let o = weekly_overlay(&s, &[date("2018-01-04")]).unwrap();
        let flags: Vec<bool> = o.weeks.iter().map(|w| w.highlight).collect();
        assert_eq!(flags, [false, true, false]);
        let o = weekly_overlay(&s, &[date("2017-12-25")]).unwrap();
        assert!(o.weeks[0].highlight);
        assert_eq!(o.weeks[0].week, date("2017-12-25").iso_week());
    }

    #[test]
    fn iso_week_spans_new_year() {
        // Sunday 2017-12-31 belongs to 2017-W52, Monday 2018-01-01 to 2018-W01
        let s = series(vec![
            ("2017-12-31T06:00:00Z", Some(0.2), 1),
            ("2018-01-01T06:00:00Z", Some(0.3), 1),
        ]);
        let o = weekly_overlay(&s, &[]).unwrap();
        assert_eq!(o.weeks.len(), 2);
        assert_eq!((o.weeks[0].week.year(), o.weeks[0].week.week()), (2017, 52));
        assert_eq!((o.weeks[1].week.year(), o.weeks[1].week.week()), (2018, 1));
    }

    #[test]
    fn width_must_divide_a_day() {
        let mut s = series(vec![("2018-01-01T00:00:00Z", Some(1.0), 1)]);
        s.bin_width = TimeDelta::minutes(7);
        assert!(matches!(
            weekly_overlay(&s, &[]),
            Err(TimeseriesError::IncompatibleBinWidth(_))
        ));
        let shifted =
            series(vec![("2018-01-01T00:00:00Z", Some(1.0), 1)]).shifted(TimeDelta::minutes(5));
        assert!(matches!(
            weekly_overlay(&shifted, &[]),
            Err(TimeseriesError::MisalignedBins(_))
        ));
    }
}
