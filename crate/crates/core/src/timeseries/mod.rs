//! Binned per-camera series of topic probabilities and label weights, weekly
//! overlays, and their CSV / SVG exports.
//!
//! Bins are half-open `[start, start + width)` intervals aligned to
//! 1970-01-01T00:00:00Z plus whole multiples of the width, so every camera and
//! every series share one bin grid. A bin without images is a gap, never 0.

mod export;
mod overlay;
mod svg;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, TimeDelta, Utc};
use thiserror::Error;

use crate::lda::DenseMatrix;
use crate::weighting::{ImageLabelMatrix, RowMeta};

pub use export::{read_series_csv, write_overlay_csv, write_series_csv};
pub use overlay::{weekly_overlay, OverlayWeek, WeeklyOverlay};
pub use svg::{overlay_svg, series_svg};

#[derive(Debug, Error)]
pub enum TimeseriesError {
    #[error("{theta} topic rows but {meta} metadata rows")]
    LengthMismatch { theta: usize, meta: usize },
    #[error("index {index} out of range for {size} columns")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("bin width must be a positive whole number of seconds, got {0}")]
    InvalidBinWidth(TimeDelta),
    #[error("bin width {0} does not divide a day")]
    IncompatibleBinWidth(TimeDelta),
    #[error("bin starting {0} is not aligned to midnight plus whole bins")]
    MisalignedBins(DateTime<Utc>),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = TimeseriesError> = std::result::Result<T, E>;

/// Fifteen minutes.
pub fn default_bin_width() -> TimeDelta {
    TimeDelta::minutes(15)
}

/// What a series tracks. Indices are 0-based; the text form is 1-based
/// (`topic:1`, `label:12`) to match the exported tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SeriesKey {
    Topic(usize),
    Label(usize),
}

impl fmt::Display for SeriesKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeriesKey::Topic(z) => write!(f, "topic:{}", z + 1),
            SeriesKey::Label(j) => write!(f, "label:{}", j + 1),
        }
    }
}

impl FromStr for SeriesKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, index) = s
            .split_once(':')
            .ok_or_else(|| format!("series key `{s}` is not `topic:N` or `label:N`"))?;
        let n: usize = index
            .parse()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| format!("series key `{s}` needs a 1-based index"))?;
        match kind {
            "topic" => Ok(SeriesKey::Topic(n - 1)),
            "label" => Ok(SeriesKey::Label(n - 1)),
            _ => Err(format!("series key `{s}` is not `topic:N` or `label:N`")),
        }
    }
}

/// One bin. `mean` is `None` exactly when `count` is 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Bin {
    pub start: DateTime<Utc>,
    pub mean: Option<f64>,
    pub count: usize,
}

/// A contiguous run of bins for one camera, from its first populated bin to
/// its last.
#[derive(Clone, Debug, PartialEq)]
pub struct TopicSeries {
    pub camera: String,
    pub key: SeriesKey,
    pub bin_width: TimeDelta,
    pub bins: Vec<Bin>,
}

impl TopicSeries {
    pub fn total_count(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }

    pub fn populated(&self) -> impl Iterator<Item = &Bin> {
        self.bins.iter().filter(|b| b.count > 0)
    }

    /// Same series with every bin start moved by `offset`, for plotting in a
    /// fixed local time.
    pub fn shifted(&self, offset: TimeDelta) -> Self {
        let mut out = self.clone();
        for b in &mut out.bins {
            b.start += offset;
        }
        out
    }
}

fn width_seconds(width: TimeDelta) -> Result<i64> {
    if width <= TimeDelta::zero() || width.subsec_nanos() != 0 {
        return Err(TimeseriesError::InvalidBinWidth(width));
    }
    Ok(width.num_seconds())
}

/// Groups `(timestamp, value)` points into bins. Points are summed in the
/// order given.
fn bin_points(
    camera: &str,
    key: SeriesKey,
    points: &[(DateTime<Utc>, f64)],
    width: i64,
) -> TopicSeries {
    let mut acc: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
    for &(ts, v) in points {
        let slot = acc
            .entry(ts.timestamp().div_euclid(width))
            .or_insert((0.0, 0));
        slot.0 += v;
        slot.1 += 1;
    }
    let start_of = |idx: i64| DateTime::from_timestamp(idx * width, 0).expect("bin start in range");
    let mut bins = Vec::new();
    if let (Some(&first), Some(&last)) = (acc.keys().next(), acc.keys().next_back()) {
        bins.reserve((last - first + 1) as usize);
        for idx in first..=last {
            bins.push(match acc.get(&idx) {
                Some(&(sum, count)) => Bin {
                    start: start_of(idx),
                    mean: Some(sum / count as f64),
                    count,
                },
                None => Bin {
                    start: start_of(idx),
                    mean: None,
                    count: 0,
                },
            });
        }
    }
    TopicSeries {
        camera: camera.to_string(),
        key,
        bin_width: TimeDelta::seconds(width),
        bins,
    }
}

/// Per-camera series of `theta[i][z]`, cameras sorted.
pub fn topic_series(
    theta: &DenseMatrix,
    row_meta: &[RowMeta],
    z: usize,
    bin_width: TimeDelta,
) -> Result<Vec<TopicSeries>> {
    if theta.rows() != row_meta.len() {
        return Err(TimeseriesError::LengthMismatch {
            theta: theta.rows(),
            meta: row_meta.len(),
        });
    }
    if z >= theta.cols() {
        return Err(TimeseriesError::IndexOutOfRange {
            index: z,
            size: theta.cols(),
        });
    }
    let width = width_seconds(bin_width)?;
    let mut by_camera: BTreeMap<&str, Vec<(DateTime<Utc>, f64)>> = BTreeMap::new();
    for (i, meta) in row_meta.iter().enumerate() {
        by_camera
            .entry(&meta.camera)
            .or_default()
            .push((meta.timestamp, theta.get(i, z)));
    }
    Ok(by_camera
        .into_iter()
        .map(|(camera, points)| bin_points(camera, SeriesKey::Topic(z), &points, width))
        .collect())
}

/// Per-camera series of matrix column `j`. Images without the label count
/// as 0 in their bin.
pub fn label_series(
    matrix: &ImageLabelMatrix,
    j: usize,
    bin_width: TimeDelta,
) -> Result<Vec<TopicSeries>> {
    let width = width_seconds(bin_width)?;
    let columns = matrix
        .label_column_series(j)
        .map_err(|_| TimeseriesError::IndexOutOfRange {
            index: j,
            size: matrix.n_cols(),
        })?;
    Ok(columns
        .iter()
        .map(|(camera, points)| bin_points(camera, SeriesKey::Label(j), points, width))
        .collect())
}
