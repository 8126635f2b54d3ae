//! Filtering, scaling, stream fusion, and dataset balancing.
//!
//! Each accelerometer channel is bandpass filtered (the low cut removes
//! gravity offsets, the high cut limits aliasing), the RSSI stream is
//! hold-upsampled to 50 Hz, and all four channels are min-max scaled to
//! [0, 1]. Balancing trims the heavy non-event majority by keeping, for
//! each event, a normally-distributed number of immediately preceding
//! non-event samples.

use crate::data::{LabelSequence, MultiStreamSeries, RawRecording, CHANNEL_NAMES, SAMPLE_RATE_HZ};
use crate::error::{Error, Result};
use crate::rng::Rng;

// ---------------------------------------------------------------------------
// Bandpass filter
// ---------------------------------------------------------------------------

/// Butterworth bandpass design: high-pass at `low_cut_hz` cascaded with
/// low-pass at `high_cut_hz`, each of the given order, applied forward and
/// backward for zero phase distortion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub low_cut_hz: f64,
    pub high_cut_hz: f64,
    pub order: usize,
}

impl Default for FilterSpec {
    fn default() -> Self {
        // The low cut kills gravity-offset drift; the high cut sits under
        // the 25 Hz Nyquist frequency.
        FilterSpec { low_cut_hz: 0.3, high_cut_hz: 20.0, order: 2 }
    }
}

impl FilterSpec {
    pub fn validate(&self) -> Result<()> {
        let nyquist = SAMPLE_RATE_HZ as f64 / 2.0;
        if !(self.low_cut_hz > 0.0 && self.low_cut_hz < self.high_cut_hz && self.high_cut_hz < nyquist)
        {
            return Err(Error::Config(format!(
                "bandpass cutoffs must satisfy 0 < low < high < {nyquist} Hz, got ({}, {})",
                self.low_cut_hz, self.high_cut_hz
            )));
        }
        if self.order == 0 || self.order > 8 {
            return Err(Error::Config(format!(
                "filter order must be in 1..=8, got {}",
                self.order
            )));
        }
        Ok(())
    }
}

/// One direct-form-II-transposed section (biquad, or first-order with the
/// trailing coefficients zero).
#[derive(Debug, Clone, Copy)]
struct Section {
    b: [f64; 3],
    a: [f64; 2], // a1, a2 with a0 normalized to 1
}

impl Section {
    /// DC gain H(z=1).
    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    /// Runs the section over `x`, with the internal state initialized to
    /// the steady state for a constant input `x[0]`. That removes the
    /// start-up transient: a constant input yields a constant output of
    /// `dc_gain * x[0]` from the first sample.
    fn filter_steady(&self, x: &[f64]) -> Vec<f64> {
        let h1 = self.dc_gain();
        let x0 = x[0];
        let mut s2 = (self.b[2] - self.a[1] * h1) * x0;
        let mut s1 = (self.b[1] - self.a[0] * h1) * x0 + s2;
        let mut y = Vec::with_capacity(x.len());
        for &xi in x {
            let yi = self.b[0] * xi + s1;
            s1 = self.b[1] * xi - self.a[0] * yi + s2;
            s2 = self.b[2] * xi - self.a[1] * yi;
            y.push(yi);
        }
        y
    }
}

/// Butterworth pole angles produce one biquad per conjugate pair plus a
/// first-order section for odd orders.
fn butterworth_sections(order: usize, cutoff_hz: f64, highpass: bool) -> Vec<Section> {
    let omega = 2.0 * std::f64::consts::PI * cutoff_hz / SAMPLE_RATE_HZ as f64;
    let mut sections = Vec::new();
    let pairs = order / 2;
    for k in 0..pairs {
        let psi = std::f64::consts::PI * (2.0 * k as f64 + 1.0) / (2.0 * order as f64);
        let q = 1.0 / (2.0 * psi.cos());
        sections.push(biquad(omega, q, highpass));
    }
    if order % 2 == 1 {
        sections.push(first_order(omega, highpass));
    }
    sections
}

/// Bilinear-transform biquad (Audio EQ Cookbook form).
fn biquad(omega: f64, q: f64, highpass: bool) -> Section {
    let (sin_w, cos_w) = omega.sin_cos();
    let alpha = sin_w / (2.0 * q);
    let a0 = 1.0 + alpha;
    let (b0, b1, b2) = if highpass {
        ((1.0 + cos_w) / 2.0, -(1.0 + cos_w), (1.0 + cos_w) / 2.0)
    } else {
        ((1.0 - cos_w) / 2.0, 1.0 - cos_w, (1.0 - cos_w) / 2.0)
    };
    Section {
        b: [b0 / a0, b1 / a0, b2 / a0],
        a: [-2.0 * cos_w / a0, (1.0 - alpha) / a0],
    }
}

fn first_order(omega: f64, highpass: bool) -> Section {
    let k = (omega / 2.0).tan();
    let a0 = k + 1.0;
    let (b0, b1) = if highpass { (1.0 / a0, -1.0 / a0) } else { (k / a0, k / a0) };
    Section { b: [b0, b1, 0.0], a: [(k - 1.0) / a0, 0.0] }
}

/// Zero-phase bandpass: the section cascade is applied forward, then again
/// over the reversed signal, cancelling the phase response. Output length
/// equals input length.
pub fn bandpass(channel: &[f64], spec: &FilterSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    if channel.len() <= 3 * spec.order {
        return Err(Error::InsufficientData(format!(
            "bandpass needs more than {} samples for order {}, got {}",
            3 * spec.order,
            spec.order,
            channel.len()
        )));
    }
    let mut sections = butterworth_sections(spec.order, spec.low_cut_hz, true);
    sections.extend(butterworth_sections(spec.order, spec.high_cut_hz, false));

    let mut y = channel.to_vec();
    for s in &sections {
        y = s.filter_steady(&y);
    }
    y.reverse();
    for s in &sections {
        y = s.filter_steady(&y);
    }
    y.reverse();
    Ok(y)
}

// ---------------------------------------------------------------------------
// Fusion and scaling
// ---------------------------------------------------------------------------

/// Min-max scales `values` to [0, 1]; returns the scaled copy with the
/// original (min, max). A constant channel cannot be scaled.
pub fn min_max_scale(values: &[f64], channel_name: &str) -> Result<(Vec<f64>, f64, f64)> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
    }
    if !(max > min) {
        return Err(Error::Invariant(format!(
            "channel {channel_name} is constant ({min}); min-max scaling undefined"
        )));
    }
    let range = max - min;
    let scaled = values.iter().map(|v| ((v - min) / range).clamp(0.0, 1.0)).collect();
    Ok((scaled, min, max))
}

/// Bandpasses the accelerometer channels, hold-upsamples RSSI to 50 Hz,
/// and min-max scales all four streams to [0, 1].
pub fn fuse(raw: &RawRecording, spec: &FilterSpec) -> Result<MultiStreamSeries> {
    let filtered = [
        bandpass(raw.accel_x(), spec)?,
        bandpass(raw.accel_y(), spec)?,
        bandpass(raw.accel_z(), spec)?,
    ];
    let rssi = raw.rssi_held();
    let mut channels: Vec<Vec<f64>> = Vec::with_capacity(4);
    for (c, chan) in filtered.iter().enumerate() {
        channels.push(min_max_scale(chan, CHANNEL_NAMES[c])?.0);
    }
    channels.push(min_max_scale(&rssi, CHANNEL_NAMES[3])?.0);
    let [ax, ay, az, r]: [Vec<f64>; 4] = channels.try_into().expect("four channels");
    MultiStreamSeries::new([ax, ay, az, r], true)
}

// ---------------------------------------------------------------------------
// Balancing
// ---------------------------------------------------------------------------

/// Length statistics of the event sequences, used to draw how much
/// pre-event context each event keeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalancingPolicy {
    /// Mean event length in samples.
    pub mu: f64,
    /// Standard deviation of event lengths in samples.
    pub sigma: f64,
    pub seed: u64,
}

impl BalancingPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) || self.sigma < 0.0 {
            return Err(Error::Config(format!(
                "balancing policy needs mu > 0 and sigma >= 0, got mu={}, sigma={}",
                self.mu, self.sigma
            )));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Estimates the policy from logged event lengths: sample mean and
/// population standard deviation.
pub fn estimate_policy(events: &crate::data::EventLog) -> Result<BalancingPolicy> {
    estimate_policy_from_lengths(
        &events.iter().map(|&(s, e)| (e - s) as f64).collect::<Vec<_>>(),
    )
}

pub fn estimate_policy_from_lengths(lengths: &[f64]) -> Result<BalancingPolicy> {
    if lengths.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "balancing statistics need at least 2 events, got {}",
            lengths.len()
        )));
    }
    let n = lengths.len() as f64;
    let mu = lengths.iter().sum::<f64>() / n;
    let var = lengths.iter().map(|l| (l - mu) * (l - mu)).sum::<f64>() / n;
    Ok(BalancingPolicy { mu, sigma: var.sqrt(), seed: 0 })
}

/// Balances the class distribution: every event keeps all of its samples
/// plus `n ~ Normal(mu, sigma)` (rounded, clamped to >= 1, truncated at the
/// available history) immediately preceding non-event samples; every other
/// non-event sample is dropped. Order is preserved.
pub fn balance(
    series: &MultiStreamSeries,
    labels: &LabelSequence,
    policy: &BalancingPolicy,
) -> Result<(MultiStreamSeries, LabelSequence)> {
    policy.validate()?;
    if labels.len() != series.len() {
        return Err(Error::Invariant(format!(
            "label length {} does not match series length {}",
            labels.len(),
            series.len()
        )));
    }
    let runs = labels.runs();
    if runs.is_empty() {
        return Err(Error::InsufficientData(
            "balancing needs at least one event in the labels".into(),
        ));
    }
    let mut rng = Rng::new(policy.seed);
    let mut keep: Vec<usize> = Vec::new();
    let mut prev_end = 0usize;
    for &(start, end) in &runs {
        let draw = rng.normal(policy.mu, policy.sigma).round();
        let n = if draw < 1.0 { 1usize } else { draw as usize };
        let available = start - prev_end;
        let kept_prefix = n.min(available);
        keep.extend(start - kept_prefix..start);
        keep.extend(start..end);
        prev_end = end;
    }
    let balanced_series = series.take_indices(&keep)?;
    let balanced_labels = labels.take_indices(&keep)?;
    Ok((balanced_series, balanced_labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::EventLog;

    /// Amplitude of the `freq_hz` component via quadrature correlation —
    /// an oracle independent of the filter implementation.
    fn tone_amplitude(signal: &[f64], freq_hz: f64) -> f64 {
        let n = signal.len() as f64;
        let w = 2.0 * std::f64::consts::PI * freq_hz / SAMPLE_RATE_HZ as f64;
        let (mut s, mut c) = (0.0, 0.0);
        for (i, &x) in signal.iter().enumerate() {
            s += x * (w * i as f64).sin();
            c += x * (w * i as f64).cos();
        }
        2.0 * (s * s + c * c).sqrt() / n
    }

    fn sine(freq_hz: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * freq_hz * i as f64 / SAMPLE_RATE_HZ as f64).sin())
            .collect()
    }

    #[test]
    fn constant_input_maps_to_zero() {
        let x = vec![2.5; 400];
        let y = bandpass(&x, &FilterSpec::default()).unwrap();
        assert_eq!(y.len(), x.len());
        for v in y {
            assert!(v.abs() < 1e-6, "residual {v}");
        }
    }

    #[test]
    fn passband_tone_preserved() {
        // 5 Hz lies well inside the 0.3-20 Hz passband.
        let x = sine(5.0, 2000);
        let y = bandpass(&x, &FilterSpec::default()).unwrap();
        // Skip edge transients when measuring.
        let amp = tone_amplitude(&y[200..1800], 5.0);
        assert!((amp - 1.0).abs() < 0.05, "passband amplitude {amp}");
    }

    #[test]
    fn sub_cutoff_tone_attenuated() {
        // 0.05 Hz is far below the 0.3 Hz low cut.
        let x = sine(0.05, 4000);
        let y = bandpass(&x, &FilterSpec::default()).unwrap();
        let amp = tone_amplitude(&y, 0.05);
        assert!(amp < 0.10, "stopband amplitude {amp}");
    }

    #[test]
    fn filter_is_linear() {
        let mut rng = Rng::new(5);
        let x: Vec<f64> = (0..500).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let y: Vec<f64> = (0..500).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let spec = FilterSpec::default();
        let (a, b) = (0.7, -1.3);
        let combo: Vec<f64> = x.iter().zip(&y).map(|(xi, yi)| a * xi + b * yi).collect();
        let fx = bandpass(&x, &spec).unwrap();
        let fy = bandpass(&y, &spec).unwrap();
        let fcombo = bandpass(&combo, &spec).unwrap();
        for i in 0..500 {
            let expect = a * fx[i] + b * fy[i];
            assert!((fcombo[i] - expect).abs() < 1e-6, "index {i}");
        }
    }

    #[test]
    fn degenerate_spec_rejected() {
        let x = vec![0.0; 100];
        assert!(bandpass(&x, &FilterSpec { low_cut_hz: 5.0, high_cut_hz: 1.0, order: 2 }).is_err());
        assert!(bandpass(&x, &FilterSpec { low_cut_hz: 0.3, high_cut_hz: 30.0, order: 2 }).is_err());
        assert!(bandpass(&x, &FilterSpec { low_cut_hz: 0.3, high_cut_hz: 20.0, order: 0 }).is_err());
        assert!(bandpass(&[0.0; 6], &FilterSpec::default()).is_err());
    }

    fn test_recording(n: usize) -> RawRecording {
        let mut rng = Rng::new(17);
        let mut tone = |f: f64, amp: f64, off: f64| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    off + amp
                        * (2.0 * std::f64::consts::PI * f * i as f64 / SAMPLE_RATE_HZ as f64).sin()
                        + 0.01 * rng.uniform_in(-1.0, 1.0)
                })
                .collect()
        };
        let rssi: Vec<f64> = (0..n.div_ceil(SAMPLE_RATE_HZ))
            .map(|i| -70.0 + 10.0 * (i as f64 / 10.0).sin())
            .collect();
        RawRecording::new(tone(2.0, 0.4, 0.1), tone(3.0, 0.5, -0.2), tone(5.0, 0.6, 0.98), rssi, 0)
            .unwrap()
    }

    #[test]
    fn fuse_scales_to_unit_interval() {
        let raw = test_recording(600);
        let fused = fuse(&raw, &FilterSpec::default()).unwrap();
        assert!(fused.scaled());
        assert_eq!(fused.len(), 600);
        for c in 0..4 {
            let chan = fused.channel(c);
            let min = chan.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = chan.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(min, 0.0, "channel {c} min");
            assert_eq!(max, 1.0, "channel {c} max");
        }
    }

    #[test]
    fn fused_rssi_is_piecewise_constant() {
        let raw = test_recording(600);
        let fused = fuse(&raw, &FilterSpec::default()).unwrap();
        let rssi = fused.channel(3);
        for block in 0..12 {
            let first = rssi[block * 50];
            for i in 0..50 {
                assert_eq!(rssi[block * 50 + i], first);
            }
        }
    }

    #[test]
    fn inverse_scaling_recovers_filtered_signal() {
        let raw = test_recording(600);
        let spec = FilterSpec::default();
        let filtered = bandpass(raw.accel_x(), &spec).unwrap();
        let (scaled, min, max) = min_max_scale(&filtered, "ax").unwrap();
        for i in 0..filtered.len() {
            let recovered = scaled[i] * (max - min) + min;
            assert!((recovered - filtered[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_channel_scaling_error_names_channel() {
        let raw = RawRecording::new(
            vec![0.5; 300],
            test_recording(300).accel_y().to_vec(),
            test_recording(300).accel_z().to_vec(),
            vec![-60.0; 6],
            0,
        )
        .unwrap();
        // The accel_x channel is constant; after bandpass it is all zeros.
        let err = fuse(&raw, &FilterSpec::default()).unwrap_err();
        assert!(err.to_string().contains("ax"), "{err}");
    }

    #[test]
    fn policy_two_point_statistics() {
        let events = EventLog::new(vec![(0, 100), (200, 300)]).unwrap();
        let p = estimate_policy(&events).unwrap();
        assert_eq!(p.mu, 100.0);
        assert_eq!(p.sigma, 0.0);

        let events = EventLog::new(vec![(0, 100), (200, 400)]).unwrap();
        let p = estimate_policy(&events).unwrap();
        assert_eq!(p.mu, 150.0);
        assert_eq!(p.sigma, 50.0);

        assert!(estimate_policy(&EventLog::new(vec![(0, 10)]).unwrap()).is_err());
    }

    fn series_of_len(n: usize) -> MultiStreamSeries {
        let chan: Vec<f64> = (0..n).map(|i| i as f64).collect();
        MultiStreamSeries::new([chan.clone(), chan.clone(), chan.clone(), chan], false).unwrap()
    }

    #[test]
    fn degenerate_normal_keeps_exact_prefix() {
        let n = 100;
        let series = series_of_len(n);
        let mut labels = vec![0u8; n];
        labels[30..40].iter_mut().for_each(|l| *l = 1);
        labels[80..90].iter_mut().for_each(|l| *l = 1);
        let labels = LabelSequence::new(labels).unwrap();
        let policy = BalancingPolicy { mu: 7.0, sigma: 0.0, seed: 1 };
        let (bs, bl) = balance(&series, &labels, &policy).unwrap();
        // Each event keeps exactly 7 preceding samples plus its 10 own.
        assert_eq!(bl.len(), 2 * (7 + 10));
        assert_eq!(bs.channel(0)[0], 23.0);
        assert_eq!(bl.runs(), vec![(7, 17), (24, 34)]);
    }

    #[test]
    fn balance_fixed_point() {
        // Input that is already events plus exact 5-sample prefixes.
        let n = 30;
        let series = series_of_len(n);
        let mut labels = vec![0u8; n];
        labels[5..15].iter_mut().for_each(|l| *l = 1);
        labels[20..30].iter_mut().for_each(|l| *l = 1);
        let labels = LabelSequence::new(labels).unwrap();
        let policy = BalancingPolicy { mu: 5.0, sigma: 0.0, seed: 3 };
        let (bs, bl) = balance(&series, &labels, &policy).unwrap();
        assert_eq!(bs, series);
        assert_eq!(bl, labels);
    }

    #[test]
    fn balance_keeps_every_event_sample_in_order() {
        let n = 400;
        let series = series_of_len(n);
        let mut labels = vec![0u8; n];
        labels[100..150].iter_mut().for_each(|l| *l = 1);
        labels[300..360].iter_mut().for_each(|l| *l = 1);
        let labels = LabelSequence::new(labels).unwrap();
        let policy = BalancingPolicy { mu: 55.0, sigma: 10.0, seed: 9 };
        let (bs, bl) = balance(&series, &labels, &policy).unwrap();
        let event_count = bl.labels().iter().filter(|&&l| l == 1).count();
        assert_eq!(event_count, 110);
        // Order preserved: the identity channel must be strictly increasing.
        let chan = bs.channel(0);
        assert!(chan.windows(2).all(|w| w[0] < w[1]));
        // Determinism.
        let (bs2, _) = balance(&series, &labels, &policy).unwrap();
        assert_eq!(bs, bs2);
    }
}
