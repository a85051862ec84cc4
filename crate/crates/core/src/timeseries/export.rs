use std::io::{Read, Write};

use chrono::TimeDelta;

use super::{Bin, Result, SeriesKey, TimeseriesError, TopicSeries, WeeklyOverlay};
use crate::corpus::{format_timestamp, parse_timestamp};

/// Writes `camera,key,bin_start,mean,count`; gaps have an empty mean.
/// Floats use the shortest text that parses back to the same value.
pub fn write_series_csv<W: Write>(series: &[TopicSeries], writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["camera", "key", "bin_start", "mean", "count"])?;
    for s in series {
        let key = s.key.to_string();
        for b in &s.bins {
            csv.write_record([
                s.camera.as_str(),
                key.as_str(),
                &format_timestamp(&b.start),
                &b.mean.map(|m| m.to_string()).unwrap_or_default(),
                &b.count.to_string(),
            ])?;
        }
    }
    csv.flush()?;
    Ok(())
}

/// Reads a series CSV back. Consecutive rows with the same camera and key
/// form one series; the width is not stored in the file and must be given.
pub fn read_series_csv<R: Read>(reader: R, bin_width: TimeDelta) -> Result<Vec<TopicSeries>> {
    let mut csv = csv::Reader::from_reader(reader);
    let mut out: Vec<TopicSeries> = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let bad = |reason: String| TimeseriesError::Malformed { line, reason };
        if record.len() != 5 {
            return Err(bad(format!("expected 5 fields, found {}", record.len())));
        }
        let key: SeriesKey = record[1].parse().map_err(bad)?;
        let start = parse_timestamp(&record[2])
            .ok_or_else(|| bad(format!("bad timestamp `{}`", &record[2])))?;
        let mean = match &record[3] {
            "" => None,
            m => Some(
                m.parse::<f64>()
                    .map_err(|e| bad(format!("bad mean `{m}`: {e}")))?,
            ),
        };
        let count: usize = record[4]
            .parse()
            .map_err(|e| bad(format!("bad count `{}`: {e}", &record[4])))?;
        if mean.is_some() != (count > 0) {
            return Err(bad("mean must be present exactly when count > 0".into()));
        }
        let bin = Bin { start, mean, count };
        match out.last_mut() {
            Some(s) if s.camera == record[0] && s.key == key => {
                let prev = s.bins.last().expect("series has a bin").start;
                if start - prev != bin_width {
                    return Err(bad(format!(
                        "bin {start} does not follow {prev} by {bin_width}"
                    )));
                }
                s.bins.push(bin);
            }
            _ => out.push(TopicSeries {
                camera: record[0].to_string(),
                key,
                bin_width,
                bins: vec![bin],
            }),
        }
    }
    Ok(out)
}

/// Writes `camera,key,week,weekday,slot,mean,count,highlight` with one row
/// per slot of every week present. `week` is `YYYY-Www`, `weekday` runs
/// 1 (Monday) to 7 and `slot` is the bin of the day, from 0.
pub fn write_overlay_csv<W: Write>(overlays: &[WeeklyOverlay], writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record([
        "camera",
        "key",
        "week",
        "weekday",
        "slot",
        "mean",
        "count",
        "highlight",
    ])?;
    for o in overlays {
        let key = o.key.to_string();
        for w in &o.weeks {
            let week = format!("{}-W{:02}", w.week.year(), w.week.week());
            for (slot, (mean, count)) in w.means.iter().zip(&w.counts).enumerate() {
                let (day, of_day) = o.slot_position(slot);
                csv.write_record([
                    o.camera.as_str(),
                    key.as_str(),
                    week.as_str(),
                    &(day + 1).to_string(),
                    &of_day.to_string(),
                    &mean.map(|m| m.to_string()).unwrap_or_default(),
                    &count.to_string(),
                    if w.highlight { "true" } else { "false" },
                ])?;
            }
        }
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::{default_bin_width, weekly_overlay};

    fn sample() -> Vec<TopicSeries> {
        let start = parse_timestamp("2018-01-04T16:45:00Z").unwrap();
        let w = default_bin_width();
        vec![
            TopicSeries {
                camera: "a,b".into(),
                key: SeriesKey::Label(4),
                bin_width: w,
                bins: vec![
                    Bin {
                        start,
                        mean: Some(0.1 + 0.2),
                        count: 3,
                    },
                    Bin {
                        start: start + w,
                        mean: None,
                        count: 0,
                    },
                    Bin {
                        start: start + w * 2,
                        mean: Some(1.0 / 3.0),
                        count: 1,
                    },
                ],
            },
            TopicSeries {
                camera: "c".into(),
                key: SeriesKey::Topic(0),
                bin_width: w,
                bins: vec![Bin {
                    start,
                    mean: Some(4.6 / 3.0),
                    count: 3,
                }],
            },
        ]
    }

    #[test]
    fn empty_series_is_header_only() {
        let mut buf = Vec::new();
        write_series_csv(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "camera,key,bin_start,mean,count\n"
        );
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let series = sample();
        let mut buf = Vec::new();
        write_series_csv(&series, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("\"a,b\",label:5,2018-01-04T17:00:00Z,,0\n"));
        let back = read_series_csv(buf.as_slice(), default_bin_width()).unwrap();
        assert_eq!(back, series);
    }

    #[test]
    fn reader_rejects_inconsistent_rows() {
        let gap_with_mean =
            "camera,key,bin_start,mean,count\nc,topic:1,2018-01-01T00:00:00Z,0.5,0\n";
        assert!(matches!(
            read_series_csv(gap_with_mean.as_bytes(), default_bin_width()),
            Err(TimeseriesError::Malformed { line: 2, .. })
        ));
        let skipped = "camera,key,bin_start,mean,count\n\
                       c,topic:1,2018-01-01T00:00:00Z,0.5,1\n\
                       c,topic:1,2018-01-01T00:30:00Z,0.5,1\n";
        assert!(matches!(
            read_series_csv(skipped.as_bytes(), default_bin_width()),
            Err(TimeseriesError::Malformed { line: 3, .. })
        ));
    }

    #[test]
    fn overlay_rows_cover_every_slot() {
        let overlay = weekly_overlay(&sample()[1], &[]).unwrap();
        let mut buf = Vec::new();
        write_overlay_csv(&[overlay], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 672);
        // Thursday 16:45 is weekday 4, slot 67
        assert!(text.contains("c,topic:1,2018-W01,4,67,"));
    }
}
