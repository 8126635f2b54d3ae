//! 6-fold contiguous cross-validation, confusion metrics, and prediction
//! traces.
//!
//! The window sequence is split into k contiguous, equal segments (the
//! remainder spread over the leading segments). Each fold trains on the
//! other k-1 segments — with balancing applied to the training data only —
//! and evaluates the held-out segment at window level: both the model
//! probability and the fractional window truth are thresholded at 0.5.

use std::fmt::Write as _;
use std::path::Path;

use crate::data::{LabelSequence, MultiStreamSeries};
use crate::error::{Error, Result};
use crate::features::{extract, window_label, windows, WindowView};
use crate::models::ensemble::{ensemble_fit, ensemble_predict, EnsembleTrainConfig};
use crate::models::rcnn::LstmCarry;
use crate::models::{train_rcnn, ModelKind, ModelParams, RcnnTrainConfig, WindowSequence};
use crate::preprocess::{balance, estimate_policy_from_lengths};
use crate::rng::derive_seed;

// ---------------------------------------------------------------------------
// Fold planning
// ---------------------------------------------------------------------------

/// Contiguous equal-length fold segments over window indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub segments: Vec<(usize, usize)>,
}

pub fn plan_folds(n_windows: usize, k: usize) -> Result<FoldPlan> {
    if k == 0 {
        return Err(Error::Config("fold count must be positive".into()));
    }
    if n_windows < k {
        return Err(Error::InsufficientData(format!(
            "cannot split {n_windows} windows into {k} folds"
        )));
    }
    let base = n_windows / k;
    let remainder = n_windows % k;
    let mut segments = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let len = base + usize::from(i < remainder);
        segments.push((start, start + len));
        start += len;
    }
    Ok(FoldPlan { k, segments })
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// Confusion counts and the derived ratios. When a ratio's denominator is
/// zero the value is reported as 0 with the matching degenerate flag set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub degenerate_precision: bool,
    pub degenerate_recall: bool,
}

impl MetricsReport {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> MetricsReport {
        let total = tp + fp + tn + fn_;
        let accuracy = if total > 0 { (tp + tn) as f64 / total as f64 } else { 0.0 };
        let degenerate_precision = tp + fp == 0;
        let precision = if degenerate_precision { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let degenerate_recall = tp + fn_ == 0;
        let recall = if degenerate_recall { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
        let f_score = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        MetricsReport {
            tp,
            fp,
            tn,
            fn_,
            accuracy,
            precision,
            recall,
            f_score,
            degenerate_precision,
            degenerate_recall,
        }
    }

    /// Metrics from paired probabilities and fractional truths, both
    /// thresholded at 0.5.
    pub fn from_pairs(probabilities: &[f64], truths: &[f64]) -> Result<MetricsReport> {
        if probabilities.len() != truths.len() {
            return Err(Error::Shape(format!(
                "{} probabilities vs {} truths",
                probabilities.len(),
                truths.len()
            )));
        }
        let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
        for (&p, &t) in probabilities.iter().zip(truths) {
            match (p >= 0.5, t >= 0.5) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, false) => tn += 1,
                (false, true) => fn_ += 1,
            }
        }
        Ok(MetricsReport::from_counts(tp, fp, tn, fn_))
    }
}

/// Per-metric median across folds; an even count averages the two central
/// values.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InsufficientData("median of an empty set".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite metric"));
    let n = sorted.len();
    Ok(if n % 2 == 1 { sorted[n / 2] } else { (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0 })
}

/// Median accuracy/precision/recall/F-score over the non-skipped folds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

pub fn summarize(outcomes: &[FoldOutcome]) -> Result<SummaryReport> {
    let reports: Vec<&MetricsReport> =
        outcomes.iter().filter_map(|o| o.metrics.as_ref()).collect();
    if reports.is_empty() {
        return Err(Error::InsufficientData("no completed folds to summarize".into()));
    }
    let collect = |f: fn(&MetricsReport) -> f64| -> Vec<f64> { reports.iter().map(|r| f(r)).collect() };
    Ok(SummaryReport {
        accuracy: median(&collect(|r| r.accuracy))?,
        precision: median(&collect(|r| r.precision))?,
        recall: median(&collect(|r| r.recall))?,
        f_score: median(&collect(|r| r.f_score))?,
    })
}

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

/// One window of the held-out trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowPrediction {
    /// Global window index.
    pub window: usize,
    pub probability: f64,
    /// Fractional window truth.
    pub truth: f64,
}

#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub fold: usize,
    /// None when the fold was skipped (single-class training data).
    pub metrics: Option<MetricsReport>,
    pub skipped: Option<String>,
    pub trace: Vec<WindowPrediction>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvConfig {
    pub k: usize,
    pub window_width: usize,
    /// Apply class balancing to each fold's training data.
    pub balance_training: bool,
    pub ensemble: EnsembleTrainConfig,
    pub rcnn: RcnnTrainConfig,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            k: 6,
            window_width: crate::features::WINDOW_WIDTH,
            balance_training: true,
            ensemble: EnsembleTrainConfig::default(),
            rcnn: RcnnTrainConfig::default(),
            seed: 0,
        }
    }
}

impl CvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_width < 3 {
            return Err(Error::Config("window width must be at least 3".into()));
        }
        self.ensemble.validate()?;
        self.rcnn.validate()?;
        Ok(())
    }
}

/// A training segment after optional balancing: an owned series/labels
/// splice that stays contiguous internally.
struct TrainSegment {
    series: MultiStreamSeries,
    labels: LabelSequence,
}

/// Runs k-fold contiguous cross-validation of the chosen model. `labels`
/// is whichever label source is under study (predefined, ground-truth, or
/// learned); it serves as both the training signal and the evaluation
/// truth, so label sources can be compared with an unchanged harness.
pub fn run_cv(
    series: &MultiStreamSeries,
    labels: &LabelSequence,
    kind: ModelKind,
    cfg: &CvConfig,
) -> Result<Vec<FoldOutcome>> {
    cfg.validate()?;
    if labels.len() != series.len() {
        return Err(Error::Invariant(format!(
            "label length {} does not match series length {}",
            labels.len(),
            series.len()
        )));
    }
    let width = cfg.window_width;
    let n_windows = series.len() / width;
    let plan = plan_folds(n_windows, cfg.k)?;

    let mut outcomes = Vec::with_capacity(cfg.k);
    for fold in 0..cfg.k {
        let outcome = run_fold(series, labels, kind, cfg, &plan, fold)?;
        outcomes.push(outcome);
    }
    Ok(outcomes)
}

fn run_fold(
    series: &MultiStreamSeries,
    labels: &LabelSequence,
    kind: ModelKind,
    cfg: &CvConfig,
    plan: &FoldPlan,
    fold: usize,
) -> Result<FoldOutcome> {
    let width = cfg.window_width;
    let (test_lo, test_hi) = plan.segments[fold];

    // Assemble training segments (in sample coordinates), balanced
    // per segment when enabled. Balancing draws use fold- and
    // segment-specific seeds derived from the master seed.
    let mut segments: Vec<TrainSegment> = Vec::new();
    for (si, &(w_lo, w_hi)) in plan.segments.iter().enumerate() {
        if si == fold {
            continue;
        }
        let s_lo = w_lo * width;
        let s_hi = w_hi * width;
        let seg_series = series.slice(s_lo, s_hi)?;
        let seg_labels = labels.slice(s_lo, s_hi)?;
        segments.push(TrainSegment { series: seg_series, labels: seg_labels });
    }

    if cfg.balance_training {
        // The balancing policy comes from the event lengths observed in
        // the training labels across all training segments.
        let lengths: Vec<f64> = segments
            .iter()
            .flat_map(|seg| seg.labels.runs())
            .map(|(s, e)| (e - s) as f64)
            .collect();
        if lengths.len() >= 2 {
            let base_policy = estimate_policy_from_lengths(&lengths)?;
            let mut balanced = Vec::with_capacity(segments.len());
            for (si, seg) in segments.iter().enumerate() {
                if seg.labels.runs().is_empty() {
                    // Without an event the balancing rule keeps nothing.
                    continue;
                }
                let policy = base_policy
                    .with_seed(derive_seed(cfg.seed, (fold as u64) << 32 | si as u64));
                let (bs, bl) = balance(&seg.series, &seg.labels, &policy)?;
                balanced.push(TrainSegment { series: bs, labels: bl });
            }
            segments = balanced;
        }
    }

    // Featurize per segment so windows never straddle a splice.
    let mut train_windows: Vec<Vec<(usize, WindowView<'_>)>> = Vec::new();
    let mut train_targets: Vec<Vec<f64>> = Vec::new();
    for seg in &segments {
        let w = windows(&seg.series, width);
        let mut targets = Vec::with_capacity(w.len());
        for &(start, _) in &w {
            targets.push(window_label(&seg.labels, start, width)?);
        }
        train_windows.push(w);
        train_targets.push(targets);
    }
    let all_targets: Vec<f64> = train_targets.iter().flatten().copied().collect();
    let has_event = all_targets.iter().any(|&t| t >= 0.5);
    let has_nonevent = all_targets.iter().any(|&t| t < 0.5);
    if all_targets.is_empty() || !has_event || !has_nonevent {
        return Ok(FoldOutcome {
            fold,
            metrics: None,
            skipped: Some(format!(
                "training data contains a single class ({} windows)",
                all_targets.len()
            )),
            trace: Vec::new(),
        });
    }

    let fold_seed = derive_seed(cfg.seed, 0x0f01d + fold as u64);
    let params = match kind {
        ModelKind::Ensemble => {
            let mut feats = Vec::with_capacity(all_targets.len());
            for group in &train_windows {
                for (_, view) in group {
                    feats.push(extract(view)?.0.to_vec());
                }
            }
            let train_cfg = EnsembleTrainConfig { seed: fold_seed, ..cfg.ensemble };
            ModelParams::Ensemble(ensemble_fit(&feats, &all_targets, &train_cfg)?.0)
        }
        ModelKind::Rcnn => {
            let groups: Vec<WindowSequence<'_>> = train_windows
                .iter()
                .zip(&train_targets)
                .map(|(group, targets)| WindowSequence {
                    windows: group.iter().map(|(_, v)| v.channels.to_vec()).collect(),
                    targets: targets.clone(),
                })
                .collect();
            let train_cfg = RcnnTrainConfig { seed: fold_seed, ..cfg.rcnn };
            ModelParams::Rcnn(train_rcnn(&groups, &train_cfg)?.0)
        }
    };

    // Evaluate the held-out segment, unbalanced, in temporal order.
    let carry_period = Some(cfg.rcnn.truncation);
    let trace = predict_trace(series, labels, &params, width, test_lo, test_hi, carry_period)?;
    let probs: Vec<f64> = trace.iter().map(|t| t.probability).collect();
    let truths: Vec<f64> = trace.iter().map(|t| t.truth).collect();
    let metrics = MetricsReport::from_pairs(&probs, &truths)?;
    Ok(FoldOutcome { fold, metrics: Some(metrics), skipped: None, trace })
}

/// Probability trace of a fitted model over windows `[w_lo, w_hi)` of the
/// series. The RCNN carry starts from zero and resets every
/// `carry_period` windows, mirroring the truncation regime it was trained
/// under; `None` lets the carry flow across the whole stretch.
pub fn predict_trace(
    series: &MultiStreamSeries,
    labels: &LabelSequence,
    params: &ModelParams,
    width: usize,
    w_lo: usize,
    w_hi: usize,
    carry_period: Option<usize>,
) -> Result<Vec<WindowPrediction>> {
    let all = windows(series, width);
    if w_hi > all.len() || w_lo >= w_hi {
        return Err(Error::Bounds { from: w_lo, to: w_hi, len: all.len() });
    }
    let mut trace = Vec::with_capacity(w_hi - w_lo);
    match params {
        ModelParams::Ensemble(p) => {
            for (start, view) in &all[w_lo..w_hi] {
                let feats = extract(view)?;
                let prob = ensemble_predict(p, feats.as_slice())?;
                trace.push(WindowPrediction {
                    window: start / width,
                    probability: prob,
                    truth: window_label(labels, *start, width)?,
                });
            }
        }
        ModelParams::Rcnn(p) => {
            let mut carry = LstmCarry::zeros(p.spec.lstm_hidden);
            for (i, (start, view)) in all[w_lo..w_hi].iter().enumerate() {
                if let Some(period) = carry_period {
                    if period > 0 && i % period == 0 {
                        carry = LstmCarry::zeros(p.spec.lstm_hidden);
                    }
                }
                let (prob, next) = p.forward(&view.channels, &carry)?;
                carry = next;
                trace.push(WindowPrediction {
                    window: start / width,
                    probability: prob,
                    truth: window_label(labels, *start, width)?,
                });
            }
        }
    }
    Ok(trace)
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

/// Writes `metrics.csv`, one `trace_fold<i>.csv` per fold, and
/// `summary.csv` into `dir`. All numbers use fixed 6-decimal formatting,
/// so identical outcomes produce identical bytes.
pub fn write_report_dir(outcomes: &[FoldOutcome], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut metrics = String::from(
        "fold,accuracy,precision,recall,f_score,tp,fp,tn,fn,degenerate_precision,degenerate_recall,skipped\n",
    );
    for o in outcomes {
        match (&o.metrics, &o.skipped) {
            (Some(m), _) => {
                let _ = writeln!(
                    metrics,
                    "{},{:.6},{:.6},{:.6},{:.6},{},{},{},{},{},{},",
                    o.fold,
                    m.accuracy,
                    m.precision,
                    m.recall,
                    m.f_score,
                    m.tp,
                    m.fp,
                    m.tn,
                    m.fn_,
                    u8::from(m.degenerate_precision),
                    u8::from(m.degenerate_recall),
                );
            }
            (None, reason) => {
                let _ = writeln!(
                    metrics,
                    "{},,,,,,,,,,,{}",
                    o.fold,
                    reason.as_deref().unwrap_or("skipped")
                );
            }
        }
    }
    let metrics_path = dir.join("metrics.csv");
    std::fs::write(&metrics_path, metrics).map_err(|e| Error::io(&metrics_path, e))?;

    for o in outcomes {
        let mut trace = String::from("window,probability,truth\n");
        for t in &o.trace {
            let _ = writeln!(trace, "{},{:.6},{:.6}", t.window, t.probability, t.truth);
        }
        let path = dir.join(format!("trace_fold{}.csv", o.fold));
        std::fs::write(&path, trace).map_err(|e| Error::io(&path, e))?;
    }

    let summary = summarize(outcomes)?;
    let mut text = String::from("metric,median\n");
    let _ = writeln!(text, "accuracy,{:.6}", summary.accuracy);
    let _ = writeln!(text, "precision,{:.6}", summary.precision);
    let _ = writeln!(text, "recall,{:.6}", summary.recall);
    let _ = writeln!(text, "f_score,{:.6}", summary.f_score);
    let path = dir.join("summary.csv");
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(())
}

/// Parses the metrics CSV written by [`write_report_dir`]; skipped folds
/// come back as `None`. Ratios are rebuilt from the confusion counts, so
/// the metric identities hold exactly.
pub fn parse_metrics_csv(text: &str) -> Result<Vec<(usize, Option<MetricsReport>)>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::parse(1, "empty metrics file"))?;
    if !header.starts_with("fold,accuracy,") {
        return Err(Error::parse(1, format!("unexpected metrics header {header:?}")));
    }
    let mut out = Vec::new();
    for (row, line) in lines.enumerate() {
        let line_no = row + 2;
        let fields: Vec<&str> = line.trim_end_matches('\r').split(',').collect();
        if fields.len() != 12 {
            return Err(Error::parse(line_no, format!("expected 12 columns, got {}", fields.len())));
        }
        let fold: usize =
            fields[0].parse().map_err(|_| Error::parse(line_no, "bad fold index"))?;
        if fields[1].is_empty() {
            out.push((fold, None));
            continue;
        }
        let count = |i: usize| -> Result<usize> {
            fields[i].parse().map_err(|_| Error::parse(line_no, format!("bad count {:?}", fields[i])))
        };
        let report = MetricsReport::from_counts(count(5)?, count(6)?, count(7)?, count(8)?);
        out.push((fold, Some(report)));
    }
    Ok(out)
}

/// Parses a trace CSV written by [`write_report_dir`].
pub fn parse_trace_csv(text: &str) -> Result<Vec<WindowPrediction>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::parse(1, "empty trace file"))?;
    if header.trim_end_matches('\r') != "window,probability,truth" {
        return Err(Error::parse(1, format!("unexpected trace header {header:?}")));
    }
    let mut out = Vec::new();
    for (row, line) in lines.enumerate() {
        let line_no = row + 2;
        let mut fields = line.trim_end_matches('\r').split(',');
        let mut next = |col: &str| {
            fields.next().ok_or_else(|| Error::parse(line_no, format!("missing column {col}")))
        };
        let window: usize = next("window")?
            .parse()
            .map_err(|_| Error::parse(line_no, "bad window index"))?;
        let probability: f64 = next("probability")?
            .parse()
            .map_err(|_| Error::parse(line_no, "bad probability"))?;
        let truth: f64 =
            next("truth")?.parse().map_err(|_| Error::parse(line_no, "bad truth"))?;
        if !(probability.is_finite() && truth.is_finite()) {
            return Err(Error::parse(line_no, "non-finite trace values"));
        }
        out.push(WindowPrediction { window, probability, truth });
    }
    Ok(out)
}
