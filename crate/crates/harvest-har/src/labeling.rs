//! Semi-supervised refinement of bag-emptying event labels.
//!
//! Only approximate event times are logged in the field; durations are
//! unknown. Labels are therefore learned in four steps, run independently
//! on the stretch of data around each logged event:
//!
//! 1. predefine: mark `pre_span` samples before and `post_span` samples
//!    after the logged time as event samples;
//! 2. featurize: per-sample statistics over a `window_q`-sample window,
//!    per channel, plus an indicator of the neighbouring samples' labels;
//! 3. refine: 2-means clustering seeded from the predefined classes, so
//!    cluster identity (event vs non-event) is preserved;
//! 4. filter: set-theoretic cleanup — predicted runs that do not overlap
//!    the predefined span are rejected (intersection), gaps between the
//!    survivors are joined (union, never extending past the outermost
//!    survivors), and a run longer than twice the predefined span is
//!    replaced by the predefined span.

use crate::data::{runs_of_ones, EventLog, LabelSequence, MultiStreamSeries};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelingConfig {
    /// Sliding window length for per-sample features.
    pub window_q: usize,
    /// Samples marked as event before the logged time.
    pub pre_span: usize,
    /// Samples marked as event after the logged time.
    pub post_span: usize,
    /// Lloyd iterations of the 2-means refinement.
    pub kmeans_iters: usize,
    /// Weight of the neighbour-label indicator feature relative to the
    /// z-scored statistics.
    pub neighbor_weight: f64,
    /// Reserved; the refinement itself is deterministic.
    pub seed: u64,
}

impl Default for LabelingConfig {
    fn default() -> Self {
        LabelingConfig {
            window_q: 256,
            pre_span: 500,
            post_span: 700,
            kmeans_iters: 10,
            neighbor_weight: 1.0,
            seed: 0,
        }
    }
}

impl LabelingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_q < 2 {
            return Err(Error::Config(format!("window_q must be >= 2, got {}", self.window_q)));
        }
        if self.pre_span + self.post_span == 0 {
            return Err(Error::Config("pre_span + post_span must be positive".into()));
        }
        if self.kmeans_iters == 0 {
            return Err(Error::Config("kmeans_iters must be >= 1".into()));
        }
        if !(self.neighbor_weight.is_finite() && self.neighbor_weight >= 0.0) {
            return Err(Error::Config(format!(
                "neighbor_weight must be finite and non-negative, got {}",
                self.neighbor_weight
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Predefined labels
// ---------------------------------------------------------------------------

/// The moment the observer writes down for a logged event interval: its
/// midpoint. A field log records instants (the bag being emptied at the
/// bin), for which the midpoint is the instant itself; a ground-truth
/// interval maps to the middle of the action.
pub fn logged_time(event: (usize, usize)) -> usize {
    (event.0 + event.1) / 2
}

/// Marks `[t - pre_span, t + post_span)` around each event's logged time
/// `t`, clamped to the sequence bounds; overlapping windows merge.
pub fn predefine_labels(n: usize, events: &EventLog, cfg: &LabelingConfig) -> Result<LabelSequence> {
    cfg.validate()?;
    let mut labels = vec![0u8; n];
    for &event in events.iter() {
        let t = logged_time(event);
        if t >= n {
            return Err(Error::Bounds { from: t, to: t + 1, len: n });
        }
        let lo = t.saturating_sub(cfg.pre_span);
        let hi = (t + cfg.post_span).min(n);
        labels[lo..hi].iter_mut().for_each(|l| *l = 1);
    }
    LabelSequence::new(labels)
}

// ---------------------------------------------------------------------------
// Per-sample features
// ---------------------------------------------------------------------------

/// Statistics of one sample's `window_q` window: mean, standard deviation,
/// minimum, maximum, and standard deviation of the first derivative, per
/// channel, plus the neighbour-label indicator (the mean label over the
/// window).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleFeature {
    pub mean: [f64; 4],
    pub std: [f64; 4],
    pub min: [f64; 4],
    pub max: [f64; 4],
    pub deriv_std: [f64; 4],
    pub neighbor_flag: f64,
}

pub const STAT_DIMS: usize = 20;

impl SampleFeature {
    /// The 20 statistics in a fixed channel-major order.
    pub fn stats(&self) -> [f64; STAT_DIMS] {
        let mut out = [0.0; STAT_DIMS];
        for c in 0..4 {
            out[c * 5] = self.mean[c];
            out[c * 5 + 1] = self.std[c];
            out[c * 5 + 2] = self.min[c];
            out[c * 5 + 3] = self.max[c];
            out[c * 5 + 4] = self.deriv_std[c];
        }
        out
    }
}

fn window_stats(window: &[f64]) -> (f64, f64, f64, f64, f64) {
    let q = window.len() as f64;
    let mean = window.iter().sum::<f64>() / q;
    let var = window.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / q;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in window {
        min = min.min(v);
        max = max.max(v);
    }
    // First differences within the window: q - 1 of them.
    let d_mean = window.windows(2).map(|w| w[1] - w[0]).sum::<f64>() / (q - 1.0);
    let d_var = window
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            (d - d_mean) * (d - d_mean)
        })
        .sum::<f64>()
        / (q - 1.0);
    (mean, var.sqrt(), min, max, d_var.sqrt())
}

/// Features for sample `j` over the window `[j, j + window_q)`. The
/// trailing `window_q - 1` samples of a sequence have no full window and
/// are excluded from featurization by the callers.
pub fn sample_features(
    series: &MultiStreamSeries,
    labels: &LabelSequence,
    j: usize,
    cfg: &LabelingConfig,
) -> Result<SampleFeature> {
    cfg.validate()?;
    let q = cfg.window_q;
    if j + q > series.len() {
        return Err(Error::Bounds { from: j, to: j + q, len: series.len() });
    }
    if labels.len() != series.len() {
        return Err(Error::Invariant(format!(
            "label length {} does not match series length {}",
            labels.len(),
            series.len()
        )));
    }
    let mut feature = SampleFeature {
        mean: [0.0; 4],
        std: [0.0; 4],
        min: [0.0; 4],
        max: [0.0; 4],
        deriv_std: [0.0; 4],
        neighbor_flag: 0.0,
    };
    for c in 0..4 {
        let (mean, std, min, max, deriv_std) = window_stats(&series.channel(c)[j..j + q]);
        feature.mean[c] = mean;
        feature.std[c] = std;
        feature.min[c] = min;
        feature.max[c] = max;
        feature.deriv_std[c] = deriv_std;
    }
    feature.neighbor_flag =
        labels.labels()[j..j + q].iter().map(|&l| l as f64).sum::<f64>() / q as f64;
    Ok(feature)
}

// ---------------------------------------------------------------------------
// Class initialization
// ---------------------------------------------------------------------------

/// Initial class per featurizable sample: 1 iff the mean label over the
/// sample's window is >= 0.5 (inclusive).
pub fn initialize_classes(labels: &LabelSequence, cfg: &LabelingConfig) -> Result<Vec<u8>> {
    cfg.validate()?;
    let q = cfg.window_q;
    if labels.len() < q {
        return Err(Error::InsufficientData(format!(
            "need at least window_q = {q} labels, got {}",
            labels.len()
        )));
    }
    let values = labels.labels();
    let mut classes = Vec::with_capacity(labels.len() - q + 1);
    for j in 0..=labels.len() - q {
        let sum: usize = values[j..j + q].iter().map(|&l| l as usize).sum();
        classes.push(u8::from(sum as f64 / q as f64 >= 0.5));
    }
    Ok(classes)
}

// ---------------------------------------------------------------------------
// 2-means refinement
// ---------------------------------------------------------------------------

/// Result of the Lloyd refinement. `wcss` records, per iteration, the
/// within-cluster sum of squares before and after the assignment/update
/// pair, both measured against that iteration's feature matrix (the
/// neighbour indicator is recomputed from the current assignment at the
/// start of each iteration, so the matrix changes between iterations).
#[derive(Debug, Clone)]
pub struct KmeansRefinement {
    pub classes: Vec<u8>,
    pub wcss: Vec<(f64, f64)>,
}

/// Refines the classes with 2-means clustering. Centroids are initialized
/// to the per-class feature means, so cluster 1 stays the event cluster.
/// The 20 statistics are z-scored over the segment once; the indicator
/// enters unscaled, multiplied by `neighbor_weight`, and is recomputed
/// from the current assignment at the start of every iteration.
pub fn kmeans_refine(
    features: &[SampleFeature],
    classes: &[u8],
    cfg: &LabelingConfig,
) -> Result<KmeansRefinement> {
    cfg.validate()?;
    if features.len() != classes.len() {
        return Err(Error::Invariant(format!(
            "features ({}) and classes ({}) differ in length",
            features.len(),
            classes.len()
        )));
    }
    let n = features.len();
    let ones = classes.iter().filter(|&&c| c == 1).count();
    if ones == 0 || ones == n {
        return Err(Error::SingleClass(if ones == 0 { 0 } else { 1 }));
    }

    // Static feature block, z-scored per dimension over the segment.
    // A zero-variance dimension carries no information; it z-scores to 0.
    let mut stats: Vec<[f64; STAT_DIMS]> = features.iter().map(|f| f.stats()).collect();
    for d in 0..STAT_DIMS {
        let mean = stats.iter().map(|s| s[d]).sum::<f64>() / n as f64;
        let var = stats.iter().map(|s| (s[d] - mean) * (s[d] - mean)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        for s in stats.iter_mut() {
            s[d] = if sd > 0.0 { (s[d] - mean) / sd } else { 0.0 };
        }
    }

    let q = cfg.window_q;
    let dim = STAT_DIMS + 1;
    let mut cur = classes.to_vec();
    let mut wcss_trace = Vec::with_capacity(cfg.kmeans_iters);

    // The indicator for sample j: mean of the current labels over the
    // window [j, j + q), clipped to the assigned range.
    let flags_of = |cur: &[u8]| -> Vec<f64> {
        let mut prefix = vec![0u32; n + 1];
        for (i, &c) in cur.iter().enumerate() {
            prefix[i + 1] = prefix[i] + c as u32;
        }
        (0..n)
            .map(|j| {
                let hi = (j + q).min(n);
                (prefix[hi] - prefix[j]) as f64 / (hi - j) as f64
            })
            .collect()
    };

    let row = |stats: &[[f64; STAT_DIMS]], flags: &[f64], j: usize, out: &mut [f64]| {
        out[..STAT_DIMS].copy_from_slice(&stats[j]);
        out[STAT_DIMS] = cfg.neighbor_weight * flags[j];
    };

    let mut centroids = [vec![0.0f64; dim], vec![0.0f64; dim]];
    // Initial centroids: per-class means of the initial feature matrix.
    {
        let flags = flags_of(&cur);
        let mut counts = [0usize; 2];
        let mut buf = vec![0.0; dim];
        for j in 0..n {
            row(&stats, &flags, j, &mut buf);
            let c = cur[j] as usize;
            counts[c] += 1;
            for d in 0..dim {
                centroids[c][d] += buf[d];
            }
        }
        for c in 0..2 {
            for d in 0..dim {
                centroids[c][d] /= counts[c] as f64;
            }
        }
    }

    let dist_sq = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    };

    let mut buf = vec![0.0; dim];
    for _ in 0..cfg.kmeans_iters {
        let flags = flags_of(&cur);

        let mut wcss_pre = 0.0;
        for j in 0..n {
            row(&stats, &flags, j, &mut buf);
            wcss_pre += dist_sq(&buf, &centroids[cur[j] as usize]);
        }

        // Assignment step.
        let mut next = vec![0u8; n];
        for j in 0..n {
            row(&stats, &flags, j, &mut buf);
            let d0 = dist_sq(&buf, &centroids[0]);
            let d1 = dist_sq(&buf, &centroids[1]);
            next[j] = u8::from(d1 < d0);
        }

        // Update step; an emptied cluster keeps its previous centroid.
        let mut sums = [vec![0.0f64; dim], vec![0.0f64; dim]];
        let mut counts = [0usize; 2];
        for j in 0..n {
            row(&stats, &flags, j, &mut buf);
            let c = next[j] as usize;
            counts[c] += 1;
            for d in 0..dim {
                sums[c][d] += buf[d];
            }
        }
        for c in 0..2 {
            if counts[c] > 0 {
                for d in 0..dim {
                    centroids[c][d] = sums[c][d] / counts[c] as f64;
                }
            }
        }

        let mut wcss_post = 0.0;
        for j in 0..n {
            row(&stats, &flags, j, &mut buf);
            wcss_post += dist_sq(&buf, &centroids[next[j] as usize]);
        }
        wcss_trace.push((wcss_pre, wcss_post));

        let converged = next == cur;
        cur = next;
        if converged {
            break;
        }
    }

    Ok(KmeansRefinement { classes: cur, wcss: wcss_trace })
}

// ---------------------------------------------------------------------------
// Set-theoretic filtering
// ---------------------------------------------------------------------------

/// Filters a predicted label segment against the predefined labels of the
/// same segment:
///
/// (a) predicted runs with no overlap with the predefined span are
///     rejected;
/// (b) gaps between the surviving runs are joined into one run, never
///     extending beyond the outermost survivors;
/// (c) if the joined run is longer than twice the predefined span, or no
///     run survived (a), the predefined span is used instead.
pub fn filter_predictions(predicted: &[u8], predefined: &[u8]) -> Result<Vec<u8>> {
    if predicted.len() != predefined.len() {
        return Err(Error::Invariant(format!(
            "predicted ({}) and predefined ({}) lengths differ",
            predicted.len(),
            predefined.len()
        )));
    }
    let span_len = predefined.iter().filter(|&&l| l == 1).count();
    let survivors: Vec<(usize, usize)> = runs_of_ones(predicted)
        .into_iter()
        .filter(|&(s, e)| predefined[s..e].iter().any(|&l| l == 1))
        .collect();
    if survivors.is_empty() {
        return Ok(predefined.to_vec());
    }
    let joined = (survivors[0].0, survivors[survivors.len() - 1].1);
    if joined.1 - joined.0 > 2 * span_len {
        return Ok(predefined.to_vec());
    }
    let mut out = vec![0u8; predicted.len()];
    out[joined.0..joined.1].iter_mut().for_each(|l| *l = 1);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Full pipeline
// ---------------------------------------------------------------------------

/// Learns refined labels for the whole series.
///
/// The stretch processed for event `i` nominally runs from the previous
/// event's end to the next event's start; because neighbouring stretches
/// would overlap on the gaps, each is truncated at the midpoint of the
/// inter-event gap, so the segments tile `[0, n)` and their filtered
/// labels concatenate into the full output.
///
/// Within a segment the predicted classes come from the 2-means
/// refinement; the trailing `window_q - 1` samples have no full window and
/// keep their predefined labels. Segments where the initial classes are
/// single-class (or shorter than the window) skip the refinement and fall
/// through to the filter unchanged.
pub fn learn_labels(
    series: &MultiStreamSeries,
    events: &EventLog,
    cfg: &LabelingConfig,
) -> Result<LabelSequence> {
    cfg.validate()?;
    let n = series.len();
    if let Some(&(start, end)) = events.events().last() {
        if start >= n || end > n {
            return Err(Error::Bounds { from: start, to: end, len: n });
        }
    }
    let predefined = predefine_labels(n, events, cfg)?;
    if events.is_empty() {
        return Ok(predefined);
    }

    let mut out: Vec<u8> = Vec::with_capacity(n);
    let spans = events.events();
    for i in 0..spans.len() {
        let lo = if i == 0 { 0 } else { (spans[i - 1].1 + spans[i].0) / 2 };
        let hi = if i + 1 == spans.len() { n } else { (spans[i].1 + spans[i + 1].0) / 2 };
        let segment = learn_segment(series, &predefined, lo, hi, cfg)?;
        out.extend_from_slice(&segment);
    }
    debug_assert_eq!(out.len(), n);
    LabelSequence::new(out)
}

fn learn_segment(
    series: &MultiStreamSeries,
    predefined: &LabelSequence,
    lo: usize,
    hi: usize,
    cfg: &LabelingConfig,
) -> Result<Vec<u8>> {
    let b = &predefined.labels()[lo..hi];
    let seg_len = hi - lo;
    let q = cfg.window_q;
    if seg_len < q + 1 {
        // Too short to featurize; pass the predefined labels through.
        return Ok(b.to_vec());
    }
    let seg_series = series.slice(lo, hi)?;
    let seg_labels = LabelSequence::new(b.to_vec())?;

    let n_feat = seg_len - q + 1;
    let mut features = Vec::with_capacity(n_feat);
    for j in 0..n_feat {
        features.push(sample_features(&seg_series, &seg_labels, j, cfg)?);
    }
    let init = initialize_classes(&seg_labels, cfg)?;

    let ones = init.iter().filter(|&&c| c == 1).count();
    let refined = if ones == 0 || ones == n_feat {
        init
    } else {
        kmeans_refine(&features, &init, cfg)?.classes
    };

    // Per-sample predictions: refined classes where a full window exists,
    // predefined labels for the trailing window_q - 1 samples.
    let mut predicted = Vec::with_capacity(seg_len);
    predicted.extend_from_slice(&refined);
    predicted.extend_from_slice(&b[n_feat..]);
    filter_predictions(&predicted, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn cfg_small(q: usize, pre: usize, post: usize) -> LabelingConfig {
        LabelingConfig { window_q: q, pre_span: pre, post_span: post, ..Default::default() }
    }

    fn series_from(channels: [Vec<f64>; 4]) -> MultiStreamSeries {
        MultiStreamSeries::new(channels, false).unwrap()
    }

    fn flat_series(n: usize, value: f64) -> MultiStreamSeries {
        series_from([vec![value; n], vec![value; n], vec![value; n], vec![value; n]])
    }

    // -- predefine_labels ---------------------------------------------------

    #[test]
    fn predefine_no_events() {
        let labels =
            predefine_labels(100, &EventLog::empty(), &LabelingConfig::default()).unwrap();
        assert!(labels.labels().iter().all(|&l| l == 0));
    }

    #[test]
    fn predefine_window_placement() {
        let events = EventLog::new(vec![(1000, 1001)]).unwrap();
        let labels = predefine_labels(3000, &events, &LabelingConfig::default()).unwrap();
        assert_eq!(labels.runs(), vec![(500, 1700)]);
    }

    #[test]
    fn predefine_clamps_at_bounds() {
        let events = EventLog::new(vec![(100, 101)]).unwrap();
        let labels = predefine_labels(3000, &events, &LabelingConfig::default()).unwrap();
        assert_eq!(labels.runs(), vec![(0, 800)]);

        let events = EventLog::new(vec![(2900, 2901)]).unwrap();
        let labels = predefine_labels(3000, &events, &LabelingConfig::default()).unwrap();
        assert_eq!(labels.runs(), vec![(2400, 3000)]);
    }

    #[test]
    fn predefine_out_of_range_event() {
        let events = EventLog::new(vec![(5000, 5001)]).unwrap();
        assert!(predefine_labels(3000, &events, &LabelingConfig::default()).is_err());
    }

    // -- sample_features ----------------------------------------------------

    #[test]
    fn constant_window_features() {
        let series = flat_series(16, 2.5);
        let labels = LabelSequence::zeros(16);
        let cfg = cfg_small(8, 1, 1);
        let f = sample_features(&series, &labels, 0, &cfg).unwrap();
        for c in 0..4 {
            assert_eq!(f.mean[c], 2.5);
            assert_eq!(f.std[c], 0.0);
            assert_eq!(f.min[c], 2.5);
            assert_eq!(f.max[c], 2.5);
            assert_eq!(f.deriv_std[c], 0.0);
        }
        assert_eq!(f.neighbor_flag, 0.0);
    }

    #[test]
    fn alternating_window_features() {
        let n = 12;
        let alt: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let series = series_from([alt.clone(), alt.clone(), alt.clone(), alt]);
        let labels = LabelSequence::new(vec![1; n]).unwrap();
        let cfg = cfg_small(8, 1, 1);
        let f = sample_features(&series, &labels, 0, &cfg).unwrap();
        assert_eq!(f.mean[0], 0.5);
        // Every first difference is +/-1, mean ~ 0.14 over 7 diffs; just
        // check the magnitude of each difference shows up in deriv_std.
        assert!(f.deriv_std[0] > 0.9);
        assert_eq!(f.neighbor_flag, 1.0);
    }

    #[test]
    fn features_match_direct_recomputation() {
        // Independent oracle: naive statistics over random windows.
        let mut rng = Rng::new(41);
        let n = 400;
        let channels =
            [0; 4].map(|_| (0..n).map(|_| rng.uniform_in(-2.0, 2.0)).collect::<Vec<f64>>());
        let series = series_from(channels.clone());
        let labels = LabelSequence::new((0..n).map(|i| u8::from(i % 3 == 0)).collect()).unwrap();
        let cfg = cfg_small(32, 1, 1);
        for _ in 0..20 {
            let j = rng.below(n - 32);
            let f = sample_features(&series, &labels, j, &cfg).unwrap();
            for c in 0..4 {
                let w = &channels[c][j..j + 32];
                let mean = w.iter().sum::<f64>() / 32.0;
                let sd =
                    (w.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 32.0).sqrt();
                let min = w.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let diffs: Vec<f64> = (1..32).map(|k| w[k] - w[k - 1]).collect();
                let dmean = diffs.iter().sum::<f64>() / 31.0;
                let dsd =
                    (diffs.iter().map(|d| (d - dmean) * (d - dmean)).sum::<f64>() / 31.0).sqrt();
                assert_eq!(f.mean[c], mean);
                assert_eq!(f.std[c], sd);
                assert_eq!(f.min[c], min);
                assert_eq!(f.max[c], max);
                assert_eq!(f.deriv_std[c], dsd);
            }
            let flag =
                labels.labels()[j..j + 32].iter().map(|&l| l as f64).sum::<f64>() / 32.0;
            assert_eq!(f.neighbor_flag, flag);
        }
    }

    // -- initialize_classes -------------------------------------------------

    #[test]
    fn initialize_all_ones() {
        let labels = LabelSequence::new(vec![1; 20]).unwrap();
        let classes = initialize_classes(&labels, &cfg_small(8, 1, 1)).unwrap();
        assert_eq!(classes, vec![1; 13]);
    }

    #[test]
    fn initialize_half_window_inclusive() {
        // Window exactly half covered -> class 1 (threshold is >= 0.5).
        let mut labels = vec![0u8; 8];
        labels[4..8].iter_mut().for_each(|l| *l = 1);
        let labels = LabelSequence::new(labels).unwrap();
        let classes = initialize_classes(&labels, &cfg_small(8, 1, 1)).unwrap();
        assert_eq!(classes, vec![1]);
    }

    #[test]
    fn initialize_matches_brute_force() {
        let mut rng = Rng::new(77);
        let labels =
            LabelSequence::new((0..300).map(|_| u8::from(rng.uniform() < 0.4)).collect()).unwrap();
        let q = 16;
        let classes = initialize_classes(&labels, &cfg_small(q, 1, 1)).unwrap();
        for (j, &c) in classes.iter().enumerate() {
            let mean = labels.labels()[j..j + q].iter().map(|&l| l as f64).sum::<f64>()
                / q as f64;
            assert_eq!(c, u8::from(mean >= 0.5), "sample {j}");
        }
    }

    // -- kmeans_refine ------------------------------------------------------

    /// Builds SampleFeatures whose 20 stats are zeros except mean[0] = x.
    fn feature_at(x: f64) -> SampleFeature {
        SampleFeature {
            mean: [x, 0.0, 0.0, 0.0],
            std: [0.0; 4],
            min: [0.0; 4],
            max: [0.0; 4],
            deriv_std: [0.0; 4],
            neighbor_flag: 0.0,
        }
    }

    #[test]
    fn separated_clouds_are_fixed_point() {
        let mut features = Vec::new();
        let mut classes = Vec::new();
        for i in 0..10 {
            features.push(feature_at(if i < 5 { 0.0 + 0.01 * i as f64 } else { 10.0 + 0.01 * i as f64 }));
            classes.push(u8::from(i >= 5));
        }
        let cfg = LabelingConfig { window_q: 4, kmeans_iters: 10, ..Default::default() };
        let out = kmeans_refine(&features, &classes, &cfg).unwrap();
        assert_eq!(out.classes, classes);
    }

    #[test]
    fn single_lloyd_step_matches_hand_computation() {
        // Four points on a line: 0, 1, 9, 10, initial split {0,1} vs {9,10}
        // but point 1 mislabelled into the event class: initial classes
        // [0, 1, 1, 1]. Centroids: c0 = 0, c1 = mean(1, 9, 10) = 20/3.
        // After z-scoring (mean 5, sd ~4.528): x -> (x-5)/sd. Nearest
        // centroid for point 1 is c0 (|1-0| < |1-20/3| scales equally), so
        // one step reassigns it to class 0.
        let features = vec![feature_at(0.0), feature_at(1.0), feature_at(9.0), feature_at(10.0)];
        let classes = vec![0, 1, 1, 1];
        let cfg = LabelingConfig {
            window_q: 4,
            kmeans_iters: 1,
            neighbor_weight: 0.0, // isolate the static statistics
            ..Default::default()
        };
        let out = kmeans_refine(&features, &classes, &cfg).unwrap();
        assert_eq!(out.classes, vec![0, 0, 1, 1]);
    }

    #[test]
    fn wcss_non_increasing_within_iterations() {
        let mut rng = Rng::new(4242);
        for _ in 0..20 {
            let n = 60 + rng.below(60);
            let features: Vec<SampleFeature> = (0..n)
                .map(|_| {
                    let base = if rng.uniform() < 0.5 { 0.0 } else { 2.0 };
                    feature_at(base + rng.normal(0.0, 1.5))
                })
                .collect();
            let classes: Vec<u8> =
                (0..n).map(|i| u8::from(features[i].mean[0] > 1.0)).collect();
            let ones = classes.iter().filter(|&&c| c == 1).count();
            if ones == 0 || ones == n {
                continue;
            }
            let cfg = LabelingConfig { window_q: 8, kmeans_iters: 12, ..Default::default() };
            let out = kmeans_refine(&features, &classes, &cfg).unwrap();
            for (i, &(pre, post)) in out.wcss.iter().enumerate() {
                assert!(
                    post <= pre + 1e-9,
                    "iteration {i}: wcss rose from {pre} to {post}"
                );
            }
        }
    }

    #[test]
    fn kmeans_requires_both_classes() {
        let features = vec![feature_at(0.0), feature_at(1.0)];
        assert!(matches!(
            kmeans_refine(&features, &[1, 1], &LabelingConfig::default()),
            Err(Error::SingleClass(1))
        ));
    }

    // -- filter_predictions -------------------------------------------------

    fn seg(n: usize, runs: &[(usize, usize)]) -> Vec<u8> {
        let mut v = vec![0u8; n];
        for &(s, e) in runs {
            v[s..e].iter_mut().for_each(|l| *l = 1);
        }
        v
    }

    #[test]
    fn filter_fixed_point() {
        let predefined = seg(100, &[(40, 60)]);
        let out = filter_predictions(&predefined, &predefined).unwrap();
        assert_eq!(out, predefined);
    }

    #[test]
    fn filter_removes_distant_and_bridges_gap() {
        let predefined = seg(300, &[(100, 200)]);
        // Two overlapping runs with a 50-sample gap plus one distant run.
        let predicted = seg(300, &[(90, 120), (170, 210), (260, 280)]);
        let out = filter_predictions(&predicted, &predefined).unwrap();
        assert_eq!(runs_of_ones(&out), vec![(90, 210)]);
    }

    #[test]
    fn filter_rejects_overlong_run() {
        let predefined = seg(600, &[(100, 200)]); // span length 100
        let predicted = seg(600, &[(90, 291)]); // length 201 > 2 * 100
        let out = filter_predictions(&predicted, &predefined).unwrap();
        assert_eq!(out, predefined);
    }

    #[test]
    fn filter_falls_back_when_nothing_overlaps() {
        let predefined = seg(100, &[(40, 60)]);
        let predicted = seg(100, &[(0, 10), (80, 90)]);
        let out = filter_predictions(&predicted, &predefined).unwrap();
        assert_eq!(out, predefined);
    }

    #[test]
    fn filter_never_extends_beyond_survivors() {
        let predefined = seg(100, &[(40, 60)]);
        let predicted = seg(100, &[(45, 50), (55, 58)]);
        let out = filter_predictions(&predicted, &predefined).unwrap();
        // Joined run spans the survivors only.
        assert_eq!(runs_of_ones(&out), vec![(45, 58)]);
    }

    // -- learn_labels -------------------------------------------------------

    /// Synthetic segment series: amplitude steps up inside the true event.
    fn stepped_series(n: usize, true_events: &[(usize, usize)], noise: f64, seed: u64) -> MultiStreamSeries {
        let mut rng = Rng::new(seed);
        let mut channels = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for i in 0..n {
            let inside = true_events.iter().any(|&(s, e)| s <= i && i < e);
            let amp = if inside { 1.0 } else { 0.2 };
            for chan in channels.iter_mut() {
                chan[i] = amp * (0.3 * i as f64).sin() + noise * rng.normal(0.0, 1.0)
                    + if inside { 0.5 } else { 0.0 };
            }
        }
        series_from(channels)
    }

    fn iou(a: (usize, usize), b: (usize, usize)) -> f64 {
        let inter = a.1.min(b.1).saturating_sub(a.0.max(b.0));
        let union = a.1.max(b.1) - a.0.min(b.0);
        inter as f64 / union as f64
    }

    #[test]
    fn learn_labels_one_run_per_event() {
        let n = 12_000;
        let true_events = [(2000usize, 3200usize), (7000usize, 8100usize)];
        let series = stepped_series(n, &true_events, 0.05, 9);
        let events = EventLog::new(true_events.to_vec()).unwrap();
        let cfg = LabelingConfig { window_q: 64, ..Default::default() };
        let learned = learn_labels(&series, &events, &cfg).unwrap();
        assert_eq!(learned.len(), n);
        let runs = learned.runs();
        assert_eq!(runs.len(), events.len(), "one learned run per logged event");
    }

    #[test]
    fn learn_labels_recovers_clean_events() {
        // Noise-free, high-contrast instance: the learned intervals must
        // align closely with the truth.
        let n = 10_000;
        let true_events = [(2000usize, 3100usize), (6500usize, 7600usize)];
        let series = stepped_series(n, &true_events, 0.0, 13);
        let events = EventLog::new(true_events.to_vec()).unwrap();
        let cfg = LabelingConfig { window_q: 64, ..Default::default() };
        let learned = learn_labels(&series, &events, &cfg).unwrap();
        let runs = learned.runs();
        assert_eq!(runs.len(), 2);
        for (run, truth) in runs.iter().zip(true_events.iter()) {
            assert!(iou(*run, *truth) >= 0.8, "run {run:?} vs truth {truth:?}");
        }
    }

    #[test]
    fn disabling_refinement_recovers_predefined() {
        // With the flat series the initial classes are single-class inside
        // segments only when spans dominate; instead check the documented
        // degradation: filtering the initialization itself reproduces the
        // predefined labels.
        let n = 6000;
        let events = EventLog::new(vec![(2500, 2600)]).unwrap();
        let cfg = LabelingConfig::default();
        let predefined = predefine_labels(n, &events, &cfg).unwrap();
        let init = initialize_classes(&predefined, &cfg).unwrap();
        let q = cfg.window_q;
        let mut predicted = init.clone();
        predicted.extend_from_slice(&predefined.labels()[n - q + 1..]);
        let filtered = filter_predictions(&predicted, predefined.labels()).unwrap();
        // The window-mean threshold shifts each boundary by at most q/2;
        // the filter must still produce exactly one run overlapping the
        // span, no longer than twice the span.
        let runs = runs_of_ones(&filtered);
        assert_eq!(runs.len(), 1);
        let (s, e) = runs[0];
        let span = predefined.runs()[0];
        assert!(s < span.1 && e > span.0);
        assert!(e - s <= 2 * (span.1 - span.0));
    }

    #[test]
    fn learned_labels_binary_and_full_length() {
        let n = 9000;
        let true_events = [(3000usize, 4200usize)];
        let series = stepped_series(n, &true_events, 0.1, 31);
        let events = EventLog::new(true_events.to_vec()).unwrap();
        let learned = learn_labels(&series, &events, &LabelingConfig::default()).unwrap();
        assert_eq!(learned.len(), n);
        assert!(learned.labels().iter().all(|&l| l <= 1));
    }
}
