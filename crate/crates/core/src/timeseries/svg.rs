//! Self-contained SVG line plots. Each series or overlay gets its own panel;
//! lines break wherever a bin is empty.

use std::fmt::Write;

use super::{TopicSeries, WeeklyOverlay};
use crate::corpus::format_timestamp;

const WIDTH: f64 = 960.0;
const PANEL_HEIGHT: f64 = 220.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 28.0;
const BOTTOM: f64 = 28.0;
const GREY: &str = "#b8b8b8";
const PALETTE: [&str; 6] = [
    "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Maps data coordinates into one panel.
struct Panel {
    top: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Panel {
    fn new(index: usize, x_max: f64, values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (0.0f64, f64::NEG_INFINITY);
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !(hi > lo) {
            hi = lo + 1.0;
        }
        Self {
            top: index as f64 * PANEL_HEIGHT,
            x_max: x_max.max(1.0),
            y_min: lo,
            y_max: hi,
        }
    }

    fn plot_width(&self) -> f64 {
        WIDTH - LEFT - RIGHT
    }

    fn plot_height(&self) -> f64 {
        PANEL_HEIGHT - TOP - BOTTOM
    }

    fn x(&self, v: f64) -> f64 {
        LEFT + v / self.x_max * self.plot_width()
    }

    fn y(&self, v: f64) -> f64 {
        self.top + TOP + (self.y_max - v) / (self.y_max - self.y_min) * self.plot_height()
    }

    fn frame(&self, out: &mut String, title: &str) {
        let (x0, y0) = (LEFT, self.top + TOP);
        let _ = writeln!(
            out,
            r##"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="#ffffff" stroke="#444444" stroke-width="1"/>"##,
            self.plot_width(),
            self.plot_height()
        );
        let _ = writeln!(
            out,
            r#"<text x="{x0:.2}" y="{:.2}" font-size="13">{}</text>"#,
            self.top + TOP - 8.0,
            escape(title)
        );
        for v in [self.y_min, self.y_max] {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                self.y(v) + 4.0,
                trim_number(v)
            );
        }
    }
}

fn trim_number(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Path data for `(x, optional y)` points; a `None` ends the current run.
fn path_data(panel: &Panel, points: impl Iterator<Item = (f64, Option<f64>)>) -> String {
    let mut d = String::new();
    let mut pen_down = false;
    for (x, y) in points {
        match y {
            Some(y) => {
                let cmd = if pen_down { 'L' } else { 'M' };
                if !d.is_empty() {
                    d.push(' ');
                }
                let _ = write!(d, "{cmd}{:.2},{:.2}", panel.x(x), panel.y(y));
                pen_down = true;
            }
            None => pen_down = false,
        }
    }
    d
}

fn document(panels: usize, body: String) -> String {
    let height = PANEL_HEIGHT * panels.max(1) as f64;
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{height}\" \
         viewBox=\"0 0 {WIDTH} {height}\" font-family=\"sans-serif\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"#fafafa\"/>\n{body}</svg>\n"
    )
}

/// One panel per series, time on the x axis. Isolated populated bins show
/// as dots.
pub fn series_svg(series: &[TopicSeries]) -> String {
    let mut body = String::new();
    for (i, s) in series.iter().enumerate() {
        let n = s.bins.len();
        let panel = Panel::new(
            i,
            n.saturating_sub(1) as f64,
            s.bins.iter().filter_map(|b| b.mean),
        );
        panel.frame(&mut body, &format!("{} / {}", s.camera, s.key));
        if let (Some(first), Some(last)) = (s.bins.first(), s.bins.last()) {
            let y = panel.top + PANEL_HEIGHT - 8.0;
            let _ = writeln!(
                body,
                r#"<text x="{LEFT:.2}" y="{y:.2}" font-size="11">{}</text>"#,
                format_timestamp(&first.start)
            );
            let _ = writeln!(
                body,
                r#"<text x="{:.2}" y="{y:.2}" font-size="11" text-anchor="end">{}</text>"#,
                WIDTH - RIGHT,
                format_timestamp(&last.start)
            );
        }
        let d = path_data(
            &panel,
            s.bins.iter().enumerate().map(|(k, b)| (k as f64, b.mean)),
        );
        let _ = writeln!(
            body,
            r#"<path class="series" d="{d}" fill="none" stroke="{}" stroke-width="1.5" stroke-linecap="round" stroke-linejoin="round"/>"#,
            PALETTE[1]
        );
    }
    document(series.len(), body)
}

/// One panel per overlay with a Monday-to-Sunday x axis. Every week is one
/// `path`: grey for ordinary weeks, drawn first, and a palette colour for
/// highlighted weeks, drawn on top.
pub fn overlay_svg(overlays: &[WeeklyOverlay]) -> String {
    const DAYS: [&str; 7] = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"];
    let mut body = String::new();
    for (i, o) in overlays.iter().enumerate() {
        let slots = o.slots_per_week();
        let panel = Panel::new(
            i,
            slots.saturating_sub(1) as f64,
            o.weeks
                .iter()
                .flat_map(|w| w.means.iter().flatten().copied()),
        );
        panel.frame(&mut body, &format!("{} / {}", o.camera, o.key));
        for (d, name) in DAYS.iter().enumerate() {
            let x = panel.x((d * o.slots_per_day) as f64);
            if d > 0 {
                let _ = writeln!(
                    body,
                    r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#e0e0e0" stroke-width="1"/>"##,
                    panel.top + TOP,
                    panel.top + PANEL_HEIGHT - BOTTOM
                );
            }
            let _ = writeln!(
                body,
                r#"<text x="{:.2}" y="{:.2}" font-size="11">{name}</text>"#,
                x + 4.0,
                panel.top + PANEL_HEIGHT - 8.0
            );
        }

        let mut colour = 0;
        let mut highlighted = Vec::new();
        for pass in [false, true] {
            for w in o.weeks.iter().filter(|w| w.highlight == pass) {
                let stroke = if pass {
                    let c = PALETTE[colour % PALETTE.len()];
                    colour += 1;
                    highlighted.push((w.week, c));
                    c
                } else {
                    GREY
                };
                let d = path_data(
                    &panel,
                    w.means.iter().enumerate().map(|(k, m)| (k as f64, *m)),
                );
                let _ = writeln!(
                    body,
                    r#"<path class="week" data-week="{}-W{:02}" d="{d}" fill="none" stroke="{stroke}" stroke-width="{}" stroke-linecap="round" stroke-linejoin="round"/>"#,
                    w.week.year(),
                    w.week.week(),
                    if pass { "2" } else { "1" }
                );
            }
        }
        for (k, (week, c)) in highlighted.iter().enumerate() {
            let _ = writeln!(
                body,
                r#"<text x="{:.2}" y="{:.2}" font-size="11" fill="{c}" text-anchor="end">week of {}</text>"#,
                WIDTH - RIGHT - 6.0,
                panel.top + TOP + 14.0 * (k + 1) as f64,
                week_monday(*week)
            );
        }
    }
    document(overlays.len(), body)
}

fn week_monday(week: chrono::IsoWeek) -> chrono::NaiveDate {
    chrono::NaiveDate::from_isoywd_opt(week.year(), week.week(), chrono::Weekday::Mon)
        .expect("valid ISO week")
}
