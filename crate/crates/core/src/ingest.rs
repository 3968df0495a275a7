//! Reading raw price files onto the uniform grid and cutting the result into
//! weekly trading windows.

use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{TickSeries, TimeGrid, DEFAULT_STEP};

const SECONDS_PER_DAY: i64 = 86_400;
const SECONDS_PER_WEEK: i64 = 7 * SECONDS_PER_DAY;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    Name(String),
    Index(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeFormat {
    EpochSeconds,
    Iso8601,
}

/// Column mapping for a delimited price file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatSpec {
    pub delimiter: char,
    pub has_header: bool,
    pub timestamp: Column,
    pub price: Column,
    /// Optional boolean column marking rows that were already filled.
    pub gap: Option<Column>,
    pub time_format: TimeFormat,
    /// Grid step in seconds.
    pub step: i64,
    pub label: String,
}

impl Default for FormatSpec {
    fn default() -> Self {
        Self {
            delimiter: ',',
            has_header: true,
            timestamp: Column::Index(0),
            price: Column::Index(1),
            gap: None,
            time_format: TimeFormat::EpochSeconds,
            step: DEFAULT_STEP,
            label: String::new(),
        }
    }
}

impl FormatSpec {
    /// Layout of the toolkit's own `timestamp,value,gap` series files.
    pub fn canonical() -> Self {
        Self {
            timestamp: Column::Name("timestamp".into()),
            price: Column::Name("value".into()),
            gap: Some(Column::Name("gap".into())),
            ..Self::default()
        }
    }
}

pub fn parse_price_file(path: impl AsRef<Path>, spec: &FormatSpec) -> Result<TickSeries> {
    let path = path.as_ref();
    let io_err = |source| Error::Io { path: path.display().to_string(), source };
    let mut text = String::new();
    File::open(path).and_then(|mut f| f.read_to_string(&mut text)).map_err(io_err)?;
    parse_price_text(&text, spec)
}

/// Parses delimited text. Rows must be in nondecreasing time order; when
/// several rows fall into the same grid step the last one wins.
pub fn parse_price_text(text: &str, spec: &FormatSpec) -> Result<TickSeries> {
    if !spec.delimiter.is_ascii() {
        return Err(Error::usage("delimiter must be a single ASCII character"));
    }
    if spec.step <= 0 {
        return Err(Error::usage("grid step must be positive"));
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(spec.delimiter as u8)
        .has_headers(spec.has_header)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());

    let headers = if spec.has_header {
        Some(reader.headers().map_err(|e| Error::data(format!("cannot read header: {e}")))?.clone())
    } else {
        None
    };
    let resolve = |c: &Column| -> Result<usize> {
        match c {
            Column::Index(i) => Ok(*i),
            Column::Name(n) => headers
                .as_ref()
                .and_then(|h| h.iter().position(|x| x == n))
                .ok_or_else(|| Error::usage(format!("column '{n}' not found in header"))),
        }
    };
    let ts_col = resolve(&spec.timestamp)?;
    let px_col = resolve(&spec.price)?;
    let gap_col = spec.gap.as_ref().map(resolve).transpose()?;

    let mut rows: Vec<(i64, f64, bool)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::data(format!("malformed row: {e}")))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |i: usize| {
            record.get(i).ok_or_else(|| Error::Data { line, message: format!("missing column {i}") })
        };
        let t = parse_time(field(ts_col)?, spec.time_format).map_err(|message| Error::Data { line, message })?;
        let raw = field(px_col)?;
        let price: f64 = raw.parse().map_err(|_| Error::Data { line, message: format!("invalid price '{raw}'") })?;
        if !(price > 0.0 && price.is_finite()) {
            return Err(Error::Data { line, message: format!("price must be strictly positive, got {raw}") });
        }
        let gap = match gap_col {
            Some(c) => parse_flag(field(c)?).ok_or_else(|| Error::Data { line, message: "invalid gap flag".into() })?,
            None => false,
        };
        if let Some(&(prev, _, _)) = rows.last() {
            if t < prev {
                return Err(Error::Data { line, message: format!("timestamp {t} precedes previous row ({prev})") });
            }
        }
        rows.push((t, price, gap));
    }
    if rows.is_empty() {
        return Err(Error::data("file contains no observations"));
    }

    let start = rows[0].0;
    let last = rows[rows.len() - 1].0;
    let count = ((last - start) / spec.step) as usize + 1;
    let mut values = vec![f64::NAN; count];
    let mut gaps = vec![true; count];
    for &(t, p, g) in &rows {
        let i = ((t - start) / spec.step) as usize;
        values[i] = p;
        gaps[i] = g;
    }
    for i in 1..count {
        if values[i].is_nan() {
            values[i] = values[i - 1];
        }
    }
    if count < 2 {
        return Err(Error::data("file spans a single grid step; at least two samples are needed"));
    }
    let grid = TimeGrid::new(start, spec.step, count)?;
    TickSeries::new(grid, values, gaps, spec.label.clone())
}

fn parse_time(s: &str, format: TimeFormat) -> std::result::Result<i64, String> {
    match format {
        TimeFormat::EpochSeconds => s.parse::<i64>().map_err(|_| format!("invalid epoch timestamp '{s}'")),
        TimeFormat::Iso8601 => {
            if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
                return Ok(dt.timestamp());
            }
            for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
                if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
                    return Ok(dt.and_utc().timestamp());
                }
            }
            Err(format!("invalid ISO-8601 timestamp '{s}'"))
        }
    }
}

fn parse_flag(s: &str) -> Option<bool> {
    match s {
        "1" | "true" | "TRUE" | "True" => Some(true),
        "0" | "false" | "FALSE" | "False" | "" => Some(false),
        _ => None,
    }
}

/// Resamples onto a grid `factor` times coarser, keeping every `factor`-th
/// price. A coarse sample is flagged when any fine sample it covers is, so
/// the gap fraction can only grow.
pub fn resample(series: &TickSeries, factor: usize) -> Result<TickSeries> {
    if factor == 0 {
        return Err(Error::usage("resampling factor must be positive"));
    }
    let n = series.len();
    let count = (n - 1) / factor + 1;
    let values: Vec<f64> = (0..count).map(|j| series.values()[j * factor]).collect();
    let mask = series.gap_mask();
    let gaps: Vec<bool> = (0..count)
        .map(|j| {
            let hi = j * factor;
            let lo = if j == 0 { 0 } else { hi + 1 - factor };
            mask[lo..=hi].iter().any(|&g| g)
        })
        .collect();
    let g = series.grid();
    let grid = TimeGrid::new(g.start_epoch(), g.step() * factor as i64, count)?;
    TickSeries::new(grid, values, gaps, series.label())
}

/// A weekday plus time of day, UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeekInstant {
    /// 0 = Monday … 6 = Sunday.
    pub weekday: u8,
    pub seconds_of_day: i64,
}

impl WeekInstant {
    pub fn new(weekday: Weekday, hour: u32, minute: u32) -> Self {
        Self { weekday: weekday.num_days_from_monday() as u8, seconds_of_day: (hour * 3600 + minute * 60) as i64 }
    }

    /// Weekday and time of day of an epoch second.
    pub fn of_epoch(t: i64) -> Self {
        let p = week_position(t);
        Self { weekday: (p / SECONDS_PER_DAY) as u8, seconds_of_day: p % SECONDS_PER_DAY }
    }

    fn offset(&self) -> i64 {
        self.weekday as i64 * SECONDS_PER_DAY + self.seconds_of_day
    }
}

impl FromStr for WeekInstant {
    type Err = Error;

    /// Accepts strings such as `"Sun 21:00"` or `"friday 22:00"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::usage(format!("cannot parse week instant '{s}', expected e.g. 'Sun 21:00'"));
        let (day, time) = s.trim().split_once(' ').ok_or_else(bad)?;
        let weekday = Weekday::from_str(day.trim()).map_err(|_| bad())?;
        let (h, m) = time.trim().split_once(':').ok_or_else(bad)?;
        let (h, m): (u32, u32) = (h.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?);
        if h > 23 || m > 59 {
            return Err(bad());
        }
        Ok(Self::new(weekday, h, m))
    }
}

impl std::fmt::Display for WeekInstant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        const DAYS: [&str; 7] = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"];
        let h = self.seconds_of_day / 3600;
        let m = (self.seconds_of_day % 3600) / 60;
        write!(f, "{} {:02}:{:02}", DAYS[self.weekday as usize], h, m)
    }
}

/// Weekly trading window, start inclusive and end exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeekWindow {
    pub start: WeekInstant,
    pub end: WeekInstant,
}

impl Default for WeekWindow {
    /// Sunday 21:00 to Friday 22:00 UTC.
    fn default() -> Self {
        Self { start: WeekInstant::new(Weekday::Sun, 21, 0), end: WeekInstant::new(Weekday::Fri, 22, 0) }
    }
}

impl WeekWindow {
    pub fn duration(&self) -> i64 {
        let d = (self.end.offset() - self.start.offset()).rem_euclid(SECONDS_PER_WEEK);
        if d == 0 {
            SECONDS_PER_WEEK
        } else {
            d
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeekSegmentation {
    pub week_length: usize,
    /// Half-open index ranges `[start, end)`, one per complete week.
    pub ranges: Vec<(usize, usize)>,
    /// Epoch second of each window start.
    pub week_starts: Vec<i64>,
}

impl WeekSegmentation {
    pub fn weeks(&self) -> usize {
        self.ranges.len()
    }
}

/// Seconds since Monday 00:00 UTC of the week containing `t`.
fn week_position(t: i64) -> i64 {
    // 1970-01-01 was a Thursday.
    (t + 3 * SECONDS_PER_DAY).rem_euclid(SECONDS_PER_WEEK)
}

/// Cuts the grid into complete weekly windows; partial weeks at either end
/// are dropped.
pub fn segment_weeks(grid: &TimeGrid, window: &WeekWindow) -> Result<WeekSegmentation> {
    let step = grid.step();
    let duration = window.duration();
    if duration % step != 0 {
        return Err(Error::usage(format!("week window of {duration} s is not a multiple of the {step} s grid step")));
    }
    let week_length = (duration / step) as usize;
    let t0 = grid.start_epoch();
    let mut ws = t0 + (window.start.offset() - week_position(t0)).rem_euclid(SECONDS_PER_WEEK);
    let mut ranges = Vec::new();
    let mut week_starts = Vec::new();
    loop {
        let first = ((ws - t0) + step - 1).div_euclid(step) as usize;
        let end = first + week_length;
        if end > grid.count() {
            break;
        }
        ranges.push((first, end));
        week_starts.push(ws);
        ws += SECONDS_PER_WEEK;
    }
    Ok(WeekSegmentation { week_length, ranges, week_starts })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn epoch(s: &str) -> i64 {
        NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M").unwrap().and_utc().timestamp()
    }

    #[test]
    fn three_rows_map_directly() {
        let s = parse_price_text("t,p\n0,1.0\n60,1.1\n120,1.2\n", &FormatSpec::default()).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.values(), &[1.0, 1.1, 1.2]);
        assert!(s.gap_mask().iter().all(|g| !g));
    }

    #[test]
    fn missing_minutes_are_carried_forward() {
        let s = parse_price_text("t,p\n0,1.0\n180,1.3\n", &FormatSpec::default()).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.values(), &[1.0, 1.0, 1.0, 1.3]);
        assert_eq!(s.gap_mask(), &[false, true, true, false]);
    }

    #[test]
    fn negative_price_reports_its_line() {
        let err = parse_price_text("t,p\n0,1.0\n60,-1.2\n", &FormatSpec::default()).unwrap_err();
        match err {
            Error::Data { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected error {e:?}"),
        }
    }

    #[test]
    fn decreasing_time_and_empty_input_are_data_errors() {
        assert!(matches!(
            parse_price_text("t,p\n60,1.0\n0,1.0\n", &FormatSpec::default()),
            Err(Error::Data { line: 3, .. })
        ));
        assert!(matches!(parse_price_text("t,p\n", &FormatSpec::default()), Err(Error::InvalidData(_))));
    }

    #[test]
    fn iso_timestamps_and_named_columns() {
        let spec = FormatSpec {
            delimiter: ';',
            timestamp: Column::Name("time".into()),
            price: Column::Name("mid".into()),
            time_format: TimeFormat::Iso8601,
            ..FormatSpec::default()
        };
        let text = "mid;time\n1.25;2004-01-04T21:00:00Z\n1.26;2004-01-04 21:02:00\n";
        let s = parse_price_text(text, &spec).unwrap();
        assert_eq!(s.grid().start_epoch(), epoch("2004-01-04 21:00"));
        assert_eq!(s.values(), &[1.25, 1.25, 1.26]);
    }

    #[test]
    fn coarse_resampling_keeps_gap_fraction() {
        let s = parse_price_text("t,p\n0,1\n60,2\n240,3\n300,4\n", &FormatSpec::default()).unwrap();
        let c = resample(&s, 2).unwrap();
        assert_eq!(c.values(), &[1.0, 2.0, 3.0]);
        assert_eq!(c.gap_mask(), &[false, true, true]);
        let frac = |m: &[bool]| m.iter().filter(|g| **g).count() as f64 / m.len() as f64;
        assert!(frac(c.gap_mask()) >= frac(s.gap_mask()));
    }

    #[test]
    fn default_window_is_7260_minutes() {
        assert_eq!(WeekWindow::default().duration() / 60, 7260);
        assert_eq!("Sun 21:00".parse::<WeekInstant>().unwrap(), WeekWindow::default().start);
        assert!("Sun 25:00".parse::<WeekInstant>().is_err());
        assert_eq!(WeekInstant::of_epoch(epoch("2004-01-04 21:00")).to_string(), "Sun 21:00");
        assert_eq!(WeekInstant::of_epoch(epoch("2007-03-30 13:30")).to_string(), "Fri 13:30");
    }

    #[test]
    fn single_week_and_one_minute_short() {
        let start = epoch("2004-01-04 21:00");
        let g = TimeGrid::new(start, 60, 7260).unwrap();
        let seg = segment_weeks(&g, &WeekWindow::default()).unwrap();
        assert_eq!(seg.weeks(), 1);
        assert_eq!(seg.ranges[0], (0, 7260));

        let g = TimeGrid::new(start, 60, 7259).unwrap();
        assert_eq!(segment_weeks(&g, &WeekWindow::default()).unwrap().weeks(), 0);
    }

    #[test]
    fn window_not_multiple_of_step_is_rejected() {
        let g = TimeGrid::new(0, 7 * 60, 100).unwrap();
        let w = WeekWindow { start: WeekInstant::new(Weekday::Sun, 21, 0), end: WeekInstant::new(Weekday::Fri, 22, 1) };
        assert!(segment_weeks(&g, &w).unwrap_err().is_usage());
    }

    #[test]
    fn friday_start_over_169_calendar_weeks_holds_168_windows() {
        // 21:00 on Friday 2 January 2004 plus 1183 days, one-minute steps.
        // The span ends on a Friday at 21:00, one hour before the last
        // window would close.
        let start = epoch("2004-01-02 21:00");
        let count = 1_703_520;
        let g = TimeGrid::new(start, 60, count).unwrap();
        assert_eq!(g.timestamp(count), epoch("2007-03-30 21:00"));
        let seg = segment_weeks(&g, &WeekWindow::default()).unwrap();
        assert_eq!(seg.weeks(), 168);
        assert_eq!(seg.week_length, 7260);
        assert!(seg.weeks() * seg.week_length <= count);
        assert!(seg.ranges.windows(2).all(|w| w[0].1 <= w[1].0));
        assert_eq!(seg.week_starts[0], epoch("2004-01-04 21:00"));

        let g = TimeGrid::new(start, 60, count + 60).unwrap();
        assert_eq!(segment_weeks(&g, &WeekWindow::default()).unwrap().weeks(), 169);
    }
}
