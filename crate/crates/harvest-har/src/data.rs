//! Canonical data model: sensor series, event logs, labels, and CSV I/O.
//!
//! Sample indices at 50 Hz are the universal coordinate; there are no
//! wall-clock timestamps anywhere in the pipeline. A dataset on disk is a
//! pair of files:
//!
//! * the data CSV, header `idx,ax,ay,az,rssi,label` (the `label` column is
//!   optional), one row per 50 Hz sample, all values fixed 6-decimal;
//! * the event-log CSV, header `start,end`, one row per event, stored next
//!   to the data file (`foo.csv` -> `foo.events.csv`).
//!
//! RSSI is sampled at 1 Hz by the hardware; in the data CSV it appears
//! held constant within each second so every row carries four channels.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Accelerometer sampling rate. RSSI is logged once per second.
pub const SAMPLE_RATE_HZ: usize = 50;

/// Accelerometer measurement range in G.
pub const ACCEL_RANGE_G: f64 = 4.0;

/// Channel order used everywhere: accel x, y, z, then RSSI.
pub const CHANNEL_NAMES: [&str; 4] = ["ax", "ay", "az", "rssi"];

const DATA_HEADER_LABELED: &str = "idx,ax,ay,az,rssi,label";
const DATA_HEADER_UNLABELED: &str = "idx,ax,ay,az,rssi";
const EVENTS_HEADER: &str = "start,end";

// ---------------------------------------------------------------------------
// RawRecording
// ---------------------------------------------------------------------------

/// An unprocessed recording: 3-axis acceleration at 50 Hz plus RSSI at its
/// native 1 Hz rate.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecording {
    accel_x: Vec<f64>,
    accel_y: Vec<f64>,
    accel_z: Vec<f64>,
    rssi: Vec<f64>,
    start_index: usize,
}

impl RawRecording {
    /// Validates and constructs a recording.
    ///
    /// Accel channels must share a length `N >= 1`, values must lie within
    /// the sensor's +/-4 G range, and `rssi` must hold `ceil(N / 50)`
    /// one-per-second samples.
    pub fn new(
        accel_x: Vec<f64>,
        accel_y: Vec<f64>,
        accel_z: Vec<f64>,
        rssi: Vec<f64>,
        start_index: usize,
    ) -> Result<Self> {
        let n = accel_x.len();
        if n == 0 {
            return Err(Error::Invariant("recording must contain at least one sample".into()));
        }
        if accel_y.len() != n || accel_z.len() != n {
            return Err(Error::Invariant(format!(
                "accel channel lengths differ: x={n}, y={}, z={}",
                accel_y.len(),
                accel_z.len()
            )));
        }
        let expected_rssi = n.div_ceil(SAMPLE_RATE_HZ);
        if rssi.len() != expected_rssi {
            return Err(Error::Invariant(format!(
                "rssi length {} does not match ceil({n} / {SAMPLE_RATE_HZ}) = {expected_rssi}",
                rssi.len()
            )));
        }
        for (name, chan) in [("ax", &accel_x), ("ay", &accel_y), ("az", &accel_z)] {
            if let Some(v) = chan.iter().find(|v| !v.is_finite() || v.abs() > ACCEL_RANGE_G) {
                return Err(Error::Invariant(format!(
                    "channel {name} value {v} outside sensor range +/-{ACCEL_RANGE_G} G"
                )));
            }
        }
        if let Some(v) = rssi.iter().find(|v| !v.is_finite()) {
            return Err(Error::Invariant(format!("non-finite rssi value {v}")));
        }
        Ok(RawRecording { accel_x, accel_y, accel_z, rssi, start_index })
    }

    pub fn len(&self) -> usize {
        self.accel_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accel_x.is_empty()
    }

    pub fn accel_x(&self) -> &[f64] {
        &self.accel_x
    }

    pub fn accel_y(&self) -> &[f64] {
        &self.accel_y
    }

    pub fn accel_z(&self) -> &[f64] {
        &self.accel_z
    }

    /// RSSI at its native 1 Hz rate.
    pub fn rssi(&self) -> &[f64] {
        &self.rssi
    }

    pub fn start_index(&self) -> usize {
        self.start_index
    }

    /// RSSI hold-upsampled to one value per 50 Hz sample.
    pub fn rssi_held(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.rssi[i / SAMPLE_RATE_HZ]);
        }
        out
    }

    /// Rebuilds a recording from a series whose RSSI channel was held
    /// within each second: the 1 Hz stream is recovered by taking the
    /// first value of each 50-sample block.
    pub fn from_held_series(series: &MultiStreamSeries, start_index: usize) -> Result<Self> {
        let n = series.len();
        let rssi_held = series.channel(3);
        let mut rssi = Vec::with_capacity(n.div_ceil(SAMPLE_RATE_HZ));
        let mut i = 0;
        while i < n {
            rssi.push(rssi_held[i]);
            i += SAMPLE_RATE_HZ;
        }
        RawRecording::new(
            series.channel(0).to_vec(),
            series.channel(1).to_vec(),
            series.channel(2).to_vec(),
            rssi,
            start_index,
        )
    }
}

// ---------------------------------------------------------------------------
// MultiStreamSeries
// ---------------------------------------------------------------------------

/// The fused 4-channel series (accel x/y/z + hold-upsampled RSSI), all
/// channels sharing one length. When `scaled` is set every value lies in
/// [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct MultiStreamSeries {
    channels: [Vec<f64>; 4],
    scaled: bool,
}

impl MultiStreamSeries {
    pub fn new(channels: [Vec<f64>; 4], scaled: bool) -> Result<Self> {
        let n = channels[0].len();
        for (c, chan) in channels.iter().enumerate() {
            if chan.len() != n {
                return Err(Error::Invariant(format!(
                    "channel {} length {} differs from channel ax length {n}",
                    CHANNEL_NAMES[c],
                    chan.len()
                )));
            }
            if let Some(v) = chan.iter().find(|v| !v.is_finite()) {
                return Err(Error::Invariant(format!(
                    "non-finite value {v} in channel {}",
                    CHANNEL_NAMES[c]
                )));
            }
            if scaled {
                if let Some(v) = chan.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(Error::Invariant(format!(
                        "scaled series has value {v} outside [0,1] in channel {}",
                        CHANNEL_NAMES[c]
                    )));
                }
            }
        }
        Ok(MultiStreamSeries { channels, scaled })
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn scaled(&self) -> bool {
        self.scaled
    }

    pub fn channel(&self, index: usize) -> &[f64] {
        &self.channels[index]
    }

    pub fn channels(&self) -> &[Vec<f64>; 4] {
        &self.channels
    }

    /// Returns the sub-series over `[from, to)`. The original is unchanged.
    pub fn slice(&self, from: usize, to: usize) -> Result<MultiStreamSeries> {
        if from >= to || to > self.len() {
            return Err(Error::Bounds { from, to, len: self.len() });
        }
        let channels = [
            self.channels[0][from..to].to_vec(),
            self.channels[1][from..to].to_vec(),
            self.channels[2][from..to].to_vec(),
            self.channels[3][from..to].to_vec(),
        ];
        MultiStreamSeries::new(channels, self.scaled)
    }

    /// Concatenates two series channel-wise. The result is flagged scaled
    /// only if both inputs were.
    pub fn concat(&self, other: &MultiStreamSeries) -> Result<MultiStreamSeries> {
        let mut channels = self.channels.clone();
        for (c, chan) in channels.iter_mut().enumerate() {
            chan.extend_from_slice(other.channel(c));
        }
        MultiStreamSeries::new(channels, self.scaled && other.scaled)
    }

    /// Keeps only the samples at `indices` (strictly increasing), in order.
    pub fn take_indices(&self, indices: &[usize]) -> Result<MultiStreamSeries> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::Bounds { from: bad, to: bad + 1, len: self.len() });
        }
        let channels = [0, 1, 2, 3].map(|c| {
            indices.iter().map(|&i| self.channels[c][i]).collect::<Vec<f64>>()
        });
        MultiStreamSeries::new(channels, self.scaled)
    }
}

// ---------------------------------------------------------------------------
// EventLog
// ---------------------------------------------------------------------------

/// Ordered bag-emptying event intervals as `[start, end)` sample pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventLog {
    events: Vec<(usize, usize)>,
}

impl EventLog {
    /// Validates ordering: `start < end` per event, events strictly
    /// increasing and non-overlapping.
    pub fn new(events: Vec<(usize, usize)>) -> Result<Self> {
        for (i, &(start, end)) in events.iter().enumerate() {
            if start >= end {
                return Err(Error::Invariant(format!(
                    "event {i} has end {end} <= start {start}"
                )));
            }
            if i > 0 && events[i - 1].1 > start {
                return Err(Error::Invariant(format!(
                    "event {i} starting at {start} overlaps or precedes event {} ending at {}",
                    i - 1,
                    events[i - 1].1
                )));
            }
        }
        Ok(EventLog { events })
    }

    pub fn empty() -> Self {
        EventLog { events: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn events(&self) -> &[(usize, usize)] {
        &self.events
    }

    pub fn iter(&self) -> impl Iterator<Item = &(usize, usize)> {
        self.events.iter()
    }
}

// ---------------------------------------------------------------------------
// LabelSequence
// ---------------------------------------------------------------------------

/// Per-sample binary labels: 1 inside a bag-emptying event, 0 elsewhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSequence {
    labels: Vec<u8>,
}

impl LabelSequence {
    pub fn new(labels: Vec<u8>) -> Result<Self> {
        if let Some((i, &v)) = labels.iter().enumerate().find(|(_, &v)| v > 1) {
            return Err(Error::Invariant(format!("label {v} at sample {i} is not binary")));
        }
        Ok(LabelSequence { labels })
    }

    pub fn zeros(n: usize) -> Self {
        LabelSequence { labels: vec![0; n] }
    }

    /// Labels with ones exactly on the event spans.
    pub fn from_events(n: usize, events: &EventLog) -> Result<Self> {
        let mut labels = vec![0u8; n];
        for &(start, end) in events.iter() {
            if end > n {
                return Err(Error::Bounds { from: start, to: end, len: n });
            }
            labels[start..end].iter_mut().for_each(|l| *l = 1);
        }
        Ok(LabelSequence { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn get(&self, i: usize) -> u8 {
        self.labels[i]
    }

    /// Maximal runs of ones as `[start, end)` spans.
    pub fn runs(&self) -> Vec<(usize, usize)> {
        runs_of_ones(&self.labels)
    }

    /// The runs of ones interpreted as an event log.
    pub fn to_events(&self) -> EventLog {
        EventLog { events: self.runs() }
    }

    pub fn take_indices(&self, indices: &[usize]) -> Result<LabelSequence> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.labels.len()) {
            return Err(Error::Bounds { from: bad, to: bad + 1, len: self.labels.len() });
        }
        Ok(LabelSequence { labels: indices.iter().map(|&i| self.labels[i]).collect() })
    }

    pub fn slice(&self, from: usize, to: usize) -> Result<LabelSequence> {
        if from >= to || to > self.labels.len() {
            return Err(Error::Bounds { from, to, len: self.labels.len() });
        }
        Ok(LabelSequence { labels: self.labels[from..to].to_vec() })
    }
}

/// Maximal runs of ones in a binary slice.
pub fn runs_of_ones(labels: &[u8]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &l) in labels.iter().enumerate() {
        match (l, start) {
            (1, None) => start = Some(i),
            (0, Some(s)) => {
                runs.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, labels.len()));
    }
    runs
}

// ---------------------------------------------------------------------------
// CSV encoding
// ---------------------------------------------------------------------------

/// Renders the data CSV. Fixed 6-decimal formatting makes the output a
/// deterministic function of the values.
pub fn series_to_csv(series: &MultiStreamSeries, labels: Option<&LabelSequence>) -> Result<String> {
    if let Some(l) = labels {
        if l.len() != series.len() {
            return Err(Error::Invariant(format!(
                "label length {} does not match series length {}",
                l.len(),
                series.len()
            )));
        }
    }
    let header = if labels.is_some() { DATA_HEADER_LABELED } else { DATA_HEADER_UNLABELED };
    let mut out = String::with_capacity(series.len() * 48 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for i in 0..series.len() {
        let _ = write!(
            out,
            "{i},{:.6},{:.6},{:.6},{:.6}",
            series.channel(0)[i],
            series.channel(1)[i],
            series.channel(2)[i],
            series.channel(3)[i],
        );
        if let Some(l) = labels {
            let _ = write!(out, ",{}", l.get(i));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn events_to_csv(events: &EventLog) -> String {
    let mut out = String::with_capacity(events.len() * 16 + EVENTS_HEADER.len() + 1);
    out.push_str(EVENTS_HEADER);
    out.push('\n');
    for &(start, end) in events.iter() {
        let _ = writeln!(out, "{start},{end}");
    }
    out
}

// ---------------------------------------------------------------------------
// CSV parsing
// ---------------------------------------------------------------------------

fn parse_f64(field: &str, line: usize, col: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("column {col}: {field:?} is not a number")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("column {col}: non-finite value {field:?}")));
    }
    Ok(v)
}

fn parse_index(field: &str, line: usize, col: &str) -> Result<usize> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("column {col}: {field:?} is not a sample index")))
}

/// Parses the data CSV. Returns the 4-channel series (with the `scaled`
/// flag set when every value already lies in [0, 1]) and, if the file has
/// a `label` column, the label sequence.
pub fn parse_series_csv(text: &str) -> Result<(MultiStreamSeries, Option<LabelSequence>)> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::parse(1, "empty file".to_string()))?;
    let labeled = match header.trim_end_matches('\r') {
        DATA_HEADER_LABELED => true,
        DATA_HEADER_UNLABELED => false,
        other => {
            return Err(Error::parse(
                1,
                format!("unexpected header {other:?}; want {DATA_HEADER_LABELED:?}"),
            ))
        }
    };
    let mut channels: [Vec<f64>; 4] = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    let mut labels: Vec<u8> = Vec::new();
    let want_fields = if labeled { 6 } else { 5 };
    for (row, raw_line) in lines.enumerate() {
        let line_no = row + 2;
        let line = raw_line.trim_end_matches('\r');
        if line.is_empty() {
            return Err(Error::parse(line_no, "blank line inside data".to_string()));
        }
        let mut fields = line.split(',');
        let mut next = |col: &str| {
            fields
                .next()
                .ok_or_else(|| Error::parse(line_no, format!("missing column {col}")))
        };
        let idx = parse_index(next("idx")?, line_no, "idx")?;
        if idx != row {
            return Err(Error::parse(line_no, format!("idx {idx} out of order; expected {row}")));
        }
        for c in 0..4 {
            channels[c].push(parse_f64(next(CHANNEL_NAMES[c])?, line_no, CHANNEL_NAMES[c])?);
        }
        if labeled {
            let field = next("label")?;
            let v = match field.trim() {
                "0" => 0u8,
                "1" => 1u8,
                other => {
                    return Err(Error::parse(
                        line_no,
                        format!("column label: {other:?} is not 0 or 1"),
                    ))
                }
            };
            labels.push(v);
        }
        if fields.next().is_some() {
            return Err(Error::parse(
                line_no,
                format!("too many columns; expected {want_fields}"),
            ));
        }
    }
    if channels[0].is_empty() {
        return Err(Error::parse(1, "file contains a header but no samples".to_string()));
    }
    let scaled = channels
        .iter()
        .all(|chan| chan.iter().all(|v| (0.0..=1.0).contains(v)));
    let series = MultiStreamSeries::new(channels, scaled)?;
    let labels = if labeled { Some(LabelSequence::new(labels)?) } else { None };
    Ok((series, labels))
}

/// Parses the event-log CSV, enforcing ordering invariants. Line numbers in
/// errors are 1-based and count the header.
pub fn parse_events_csv(text: &str) -> Result<EventLog> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::parse(1, "empty file".to_string()))?;
    if header.trim_end_matches('\r') != EVENTS_HEADER {
        return Err(Error::parse(
            1,
            format!("unexpected header {header:?}; want {EVENTS_HEADER:?}"),
        ));
    }
    let mut events = Vec::new();
    for (row, raw_line) in lines.enumerate() {
        let line_no = row + 2;
        let line = raw_line.trim_end_matches('\r');
        if line.is_empty() {
            return Err(Error::parse(line_no, "blank line inside event log".to_string()));
        }
        let mut fields = line.split(',');
        let start = parse_index(
            fields.next().ok_or_else(|| Error::parse(line_no, "missing column start"))?,
            line_no,
            "start",
        )?;
        let end = parse_index(
            fields.next().ok_or_else(|| Error::parse(line_no, "missing column end"))?,
            line_no,
            "end",
        )?;
        if fields.next().is_some() {
            return Err(Error::parse(line_no, "too many columns; expected 2".to_string()));
        }
        if start >= end {
            return Err(Error::parse(line_no, format!("event end {end} <= start {start}")));
        }
        if let Some(&(_, prev_end)) = events.last() {
            if start < prev_end {
                return Err(Error::parse(
                    line_no,
                    format!("event start {start} overlaps previous event ending at {prev_end}"),
                ));
            }
        }
        events.push((start, end));
    }
    EventLog::new(events)
}

// ---------------------------------------------------------------------------
// File-level load/save
// ---------------------------------------------------------------------------

/// The event-log path that accompanies a data CSV: `foo.csv` -> `foo.events.csv`.
pub fn events_path(data_path: &Path) -> PathBuf {
    data_path.with_extension("events.csv")
}

/// Writes the dataset pair (data CSV + sibling event log). Output bytes are
/// a deterministic function of the inputs.
pub fn save_dataset(
    series: &MultiStreamSeries,
    events: &EventLog,
    labels: Option<&LabelSequence>,
    path: &Path,
) -> Result<()> {
    let csv = series_to_csv(series, labels)?;
    std::fs::write(path, csv).map_err(|e| Error::io(path, e))?;
    let epath = events_path(path);
    std::fs::write(&epath, events_to_csv(events)).map_err(|e| Error::io(&epath, e))?;
    Ok(())
}

/// Loads the dataset pair written by [`save_dataset`]. Labels are returned
/// only if the data CSV has a `label` column. Event spans are checked
/// against the series length.
pub fn load_dataset(
    path: &Path,
) -> Result<(MultiStreamSeries, EventLog, Option<LabelSequence>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (series, labels) = parse_series_csv(&text)?;
    let epath = events_path(path);
    let etext = std::fs::read_to_string(&epath).map_err(|e| Error::io(&epath, e))?;
    let events = parse_events_csv(&etext)?;
    if let Some(&(_, end)) = events.events().last() {
        if end > series.len() {
            return Err(Error::Invariant(format!(
                "event log ends at {end} but series has only {} samples",
                series.len()
            )));
        }
    }
    if let Some(l) = &labels {
        if l.len() != series.len() {
            return Err(Error::Invariant(format!(
                "label length {} does not match series length {}",
                l.len(),
                series.len()
            )));
        }
    }
    Ok((series, events, labels))
}
