//! Window-level feature extraction for the ensemble classifier.
//!
//! Classification operates on 256-sample windows with zero overlap. Each
//! window yields 8 statistics per channel: standard deviation, energy
//! (mean squared value), RMS and mean of the first and second finite
//! differences, minimum, and maximum — 32 dimensions in total, in channel-
//! major order.

use crate::data::{LabelSequence, MultiStreamSeries};
use crate::error::{Error, Result};

/// Default classification window width.
pub const WINDOW_WIDTH: usize = 256;

/// Statistics per channel in [`EnsembleFeatureVector`] order.
pub const STATS_PER_CHANNEL: usize = 8;

/// Total feature dimension: 8 statistics x 4 channels.
pub const FEATURE_DIM: usize = 32;

/// A borrowed window of the four channels, all `width` samples long.
#[derive(Debug, Clone, Copy)]
pub struct WindowView<'a> {
    pub channels: [&'a [f64]; 4],
}

impl<'a> WindowView<'a> {
    pub fn width(&self) -> usize {
        self.channels[0].len()
    }
}

/// The ensemble feature vector, channel-major:
/// `[std, energy, rms_d1, rms_d2, mean_d1, mean_d2, min, max]` per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleFeatureVector(pub [f64; FEATURE_DIM]);

impl EnsembleFeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Disjoint consecutive windows of `width` samples; the trailing remainder
/// shorter than `width` is discarded. A series shorter than one window
/// yields no windows.
pub fn windows(series: &MultiStreamSeries, width: usize) -> Vec<(usize, WindowView<'_>)> {
    debug_assert!(width > 0);
    let count = series.len() / width;
    (0..count)
        .map(|w| {
            let start = w * width;
            (
                start,
                WindowView {
                    channels: [
                        &series.channel(0)[start..start + width],
                        &series.channel(1)[start..start + width],
                        &series.channel(2)[start..start + width],
                        &series.channel(3)[start..start + width],
                    ],
                },
            )
        })
        .collect()
}

/// Extracts the 32-dimensional feature vector from one window.
pub fn extract(window: &WindowView<'_>) -> Result<EnsembleFeatureVector> {
    let n = window.width();
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "feature extraction needs a window of at least 3 samples, got {n}"
        )));
    }
    let mut out = [0.0; FEATURE_DIM];
    for (c, chan) in window.channels.iter().enumerate() {
        let nf = n as f64;
        let mean = chan.iter().sum::<f64>() / nf;
        let var = chan.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf;
        let energy = chan.iter().map(|v| v * v).sum::<f64>() / nf;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &v in chan.iter() {
            min = min.min(v);
            max = max.max(v);
        }
        // First differences: n-1 values; second differences: n-2.
        let mut sum_d1 = 0.0;
        let mut sum_d1_sq = 0.0;
        for w in chan.windows(2) {
            let d = w[1] - w[0];
            sum_d1 += d;
            sum_d1_sq += d * d;
        }
        let mut sum_d2 = 0.0;
        let mut sum_d2_sq = 0.0;
        for w in chan.windows(3) {
            let d = w[2] - 2.0 * w[1] + w[0];
            sum_d2 += d;
            sum_d2_sq += d * d;
        }
        let n1 = (n - 1) as f64;
        let n2 = (n - 2) as f64;
        let base = c * STATS_PER_CHANNEL;
        out[base] = var.sqrt();
        out[base + 1] = energy;
        out[base + 2] = (sum_d1_sq / n1).sqrt();
        out[base + 3] = (sum_d2_sq / n2).sqrt();
        out[base + 4] = sum_d1 / n1;
        out[base + 5] = sum_d2 / n2;
        out[base + 6] = min;
        out[base + 7] = max;
    }
    Ok(EnsembleFeatureVector(out))
}

/// Fractional ground truth of a window: the mean of the binary sample
/// labels. Thresholded at 0.5 when a hard class is needed.
pub fn window_label(labels: &LabelSequence, start: usize, width: usize) -> Result<f64> {
    if start + width > labels.len() {
        return Err(Error::Bounds { from: start, to: start + width, len: labels.len() });
    }
    let sum: usize = labels.labels()[start..start + width].iter().map(|&l| l as usize).sum();
    Ok(sum as f64 / width as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn series_of(values: Vec<f64>) -> MultiStreamSeries {
        MultiStreamSeries::new(
            [values.clone(), values.clone(), values.clone(), values],
            false,
        )
        .unwrap()
    }

    #[test]
    fn window_counts() {
        let series = series_of((0..512).map(|i| i as f64).collect());
        let w = windows(&series, 256);
        assert_eq!(w.len(), 2);
        assert_eq!(w[0].0, 0);
        assert_eq!(w[1].0, 256);

        let series = series_of((0..511).map(|i| i as f64).collect());
        assert_eq!(windows(&series, 256).len(), 1);

        let series = series_of((0..200).map(|i| i as f64).collect());
        assert!(windows(&series, 256).is_empty());
    }

    #[test]
    fn windows_tile_prefix() {
        let n = 1000;
        let width = 256;
        let series = series_of((0..n).map(|i| i as f64).collect());
        let w = windows(&series, width);
        let mut covered = 0;
        for (i, (start, view)) in w.iter().enumerate() {
            assert_eq!(*start, i * width);
            assert_eq!(view.width(), width);
            covered += width;
        }
        assert_eq!(covered, (n / width) * width);
    }

    #[test]
    fn constant_window_closed_form() {
        let c = 0.7;
        let series = series_of(vec![c; 16]);
        let w = windows(&series, 16);
        let f = extract(&w[0].1).unwrap();
        for ch in 0..4 {
            let base = ch * STATS_PER_CHANNEL;
            assert!(f.0[base].abs() < 1e-12, "std");
            assert!((f.0[base + 1] - c * c).abs() < 1e-15, "energy");
            assert!(f.0[base + 2].abs() < 1e-12, "rms_d1");
            assert!(f.0[base + 3].abs() < 1e-12, "rms_d2");
            assert!(f.0[base + 4].abs() < 1e-12, "mean_d1");
            assert!(f.0[base + 5].abs() < 1e-12, "mean_d2");
            assert_eq!(f.0[base + 6], c, "min");
            assert_eq!(f.0[base + 7], c, "max");
        }
    }

    #[test]
    fn linear_ramp_closed_form() {
        let h = 0.25;
        let series = series_of((0..20).map(|i| h * i as f64).collect());
        let w = windows(&series, 20);
        let f = extract(&w[0].1).unwrap();
        let base = 0;
        assert!((f.0[base + 4] - h).abs() < 1e-12, "mean_d1");
        assert!((f.0[base + 2] - h).abs() < 1e-12, "rms_d1 of constant slope");
        assert!(f.0[base + 3].abs() < 1e-12, "rms_d2 of linear ramp");
        assert!(f.0[base + 5].abs() < 1e-12, "mean_d2");
    }

    #[test]
    fn matches_independent_recomputation() {
        let mut rng = Rng::new(55);
        let n = 64;
        let values: Vec<f64> = (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let series = series_of(values.clone());
        let f = extract(&windows(&series, n)[0].1).unwrap();

        // Oracle: naive loops over the same definitions.
        let nf = n as f64;
        let mean = values.iter().sum::<f64>() / nf;
        let std = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf).sqrt();
        let energy = values.iter().map(|v| v * v).sum::<f64>() / nf;
        let d1: Vec<f64> = (1..n).map(|i| values[i] - values[i - 1]).collect();
        let d2: Vec<f64> = (2..n).map(|i| values[i] - 2.0 * values[i - 1] + values[i - 2]).collect();
        let rms = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
        let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

        assert_eq!(f.0[0], std);
        assert_eq!(f.0[1], energy);
        assert_eq!(f.0[2], rms(&d1));
        assert_eq!(f.0[3], rms(&d2));
        assert_eq!(f.0[4], avg(&d1));
        assert_eq!(f.0[5], avg(&d2));
        assert_eq!(f.0[6], min);
        assert_eq!(f.0[7], max);
    }

    #[test]
    fn scaled_data_feature_bounds() {
        let mut rng = Rng::new(8);
        let values: Vec<f64> = (0..256).map(|_| rng.uniform()).collect();
        let series = series_of(values);
        let f = extract(&windows(&series, 256)[0].1).unwrap();
        for ch in 0..4 {
            let base = ch * STATS_PER_CHANNEL;
            assert!(f.0[base] <= 0.5, "std bound on [0,1] data");
            assert!(f.0[base + 1] <= 1.0, "energy bound");
            assert!((0.0..=1.0).contains(&f.0[base + 6]));
            assert!((0.0..=1.0).contains(&f.0[base + 7]));
        }
    }

    #[test]
    fn too_short_window_rejected() {
        let series = series_of(vec![0.0, 1.0]);
        let view = WindowView {
            channels: [
                series.channel(0),
                series.channel(1),
                series.channel(2),
                series.channel(3),
            ],
        };
        assert!(extract(&view).is_err());
    }

    #[test]
    fn window_label_means() {
        let labels = LabelSequence::new(vec![1, 1, 1, 1, 0, 0, 0, 0]).unwrap();
        assert_eq!(window_label(&labels, 0, 4).unwrap(), 1.0);
        assert_eq!(window_label(&labels, 2, 4).unwrap(), 0.5);
        assert_eq!(window_label(&labels, 4, 4).unwrap(), 0.0);
        assert!(window_label(&labels, 6, 4).is_err());

        // Brute-force comparison on random labels.
        let mut rng = Rng::new(3);
        let raw: Vec<u8> = (0..100).map(|_| u8::from(rng.uniform() < 0.3)).collect();
        let labels = LabelSequence::new(raw.clone()).unwrap();
        for start in [0usize, 13, 60] {
            let mean =
                raw[start..start + 20].iter().map(|&l| l as f64).sum::<f64>() / 20.0;
            assert_eq!(window_label(&labels, start, 20).unwrap(), mean);
        }
    }
}
