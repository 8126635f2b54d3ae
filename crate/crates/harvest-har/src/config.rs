//! Flat key=value configuration shared by every pipeline stage.
//!
//! A config file holds one `key=value` pair per line (`#` comments and
//! blank lines allowed). The same keys can be passed on the command line;
//! precedence is defaults < file < command-line pairs < dedicated flags.
//! Unknown keys are rejected, and the merged configuration is re-validated
//! against every module's invariants before use.

use crate::error::{Error, Result};
use crate::eval::CvConfig;
use crate::labeling::LabelingConfig;
use crate::preprocess::FilterSpec;
use crate::synth::ScenarioConfig;

/// Every tunable of the pipeline, with the module defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub filter: FilterSpec,
    pub labeling: LabelingConfig,
    pub cv: CvConfig,
    /// Generator shape; `duration_samples`, `n_events` and `seed` are
    /// filled in by the generate command.
    pub scenario: ScenarioConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            filter: FilterSpec::default(),
            labeling: LabelingConfig::default(),
            cv: CvConfig::default(),
            scenario: crate::synth::default_scenario(0, 0),
        }
    }
}

impl PipelineConfig {
    /// Applies one override. The key namespaces mirror the modules:
    /// `filter.*`, `label.*`, `ensemble.*`, `rcnn.*`, `cv.*`, `gen.*`.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let bad_value = |what: &str| {
            Error::Config(format!("key {key}: {value:?} is not a valid {what}"))
        };
        let as_f64 = || value.parse::<f64>().map_err(|_| bad_value("number"));
        let as_usize = || value.parse::<usize>().map_err(|_| bad_value("integer"));
        let as_bool = || match value {
            "true" | "1" => Ok(true),
            "false" | "0" => Ok(false),
            _ => Err(bad_value("boolean")),
        };
        match key {
            "filter.low" => self.filter.low_cut_hz = as_f64()?,
            "filter.high" => self.filter.high_cut_hz = as_f64()?,
            "filter.order" => self.filter.order = as_usize()?,

            "label.window_q" => self.labeling.window_q = as_usize()?,
            "label.pre_span" => self.labeling.pre_span = as_usize()?,
            "label.post_span" => self.labeling.post_span = as_usize()?,
            "label.iters" => self.labeling.kmeans_iters = as_usize()?,
            "label.neighbor_weight" => self.labeling.neighbor_weight = as_f64()?,

            "ensemble.hidden" => self.cv.ensemble.hidden_dim = as_usize()?,
            "ensemble.epochs" => self.cv.ensemble.epochs = as_usize()?,
            "ensemble.batch" => self.cv.ensemble.batch_size = as_usize()?,
            "ensemble.lr" => self.cv.ensemble.learning_rate = as_f64()?,
            "ensemble.weight_nb" => self.cv.ensemble.weight_nb = as_f64()?,

            "rcnn.epochs" => self.cv.rcnn.epochs = as_usize()?,
            "rcnn.batch" => self.cv.rcnn.batch_size = as_usize()?,
            "rcnn.truncation" => self.cv.rcnn.truncation = as_usize()?,
            "rcnn.lr" => self.cv.rcnn.learning_rate = as_f64()?,
            "rcnn.conv1_filters" => self.cv.rcnn.spec.conv1_filters = as_usize()?,
            "rcnn.conv1_kernel" => self.cv.rcnn.spec.conv1_kernel = as_usize()?,
            "rcnn.pool1" => self.cv.rcnn.spec.pool1_width = as_usize()?,
            "rcnn.conv2_filters" => self.cv.rcnn.spec.conv2_filters = as_usize()?,
            "rcnn.conv2_kernel" => self.cv.rcnn.spec.conv2_kernel = as_usize()?,
            "rcnn.pool2" => self.cv.rcnn.spec.pool2_width = as_usize()?,
            "rcnn.dense" => self.cv.rcnn.spec.dense_units = as_usize()?,
            "rcnn.lstm_hidden" => self.cv.rcnn.spec.lstm_hidden = as_usize()?,

            "cv.k" => self.cv.k = as_usize()?,
            "cv.window" => {
                let w = as_usize()?;
                self.cv.window_width = w;
                self.cv.rcnn.spec.input_width = w;
            }
            "cv.balance" => self.cv.balance_training = as_bool()?,

            "gen.duration_samples" => self.scenario.duration_samples = as_usize()?,
            "gen.mean_event_s" => self.scenario.mean_event_duration_s = as_f64()?,
            "gen.empty_lo_s" => self.scenario.empty_phase_range_s.0 = as_f64()?,
            "gen.empty_hi_s" => self.scenario.empty_phase_range_s.1 = as_f64()?,
            "gen.picking_amp" => self.scenario.picking_amp = as_f64()?,
            "gen.walking_amp" => self.scenario.walking_amp = as_f64()?,
            "gen.lift_spike_amp" => self.scenario.lift_spike_amp = as_f64()?,
            "gen.shake_amp" => self.scenario.shake_amp = as_f64()?,
            "gen.rssi_near" => self.scenario.rssi_near_dbm = as_f64()?,
            "gen.rssi_far" => self.scenario.rssi_far_dbm = as_f64()?,
            "gen.noise_sd" => self.scenario.noise_sd = as_f64()?,

            other => return Err(Error::Config(format!("unknown configuration key {other:?}"))),
        }
        Ok(())
    }

    /// Validates all module invariants after merging.
    pub fn validate(&self) -> Result<()> {
        self.filter.validate()?;
        self.labeling.validate()?;
        self.cv.validate()?;
        Ok(())
    }
}

/// Parses `key=value` lines. Blank lines and `#` comments are skipped;
/// anything else without an `=` is an error naming the line.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(i + 1, format!("expected key=value, got {line:?}")))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(Error::parse(i + 1, "empty key".to_string()));
        }
        pairs.push((key.to_string(), value.to_string()));
    }
    Ok(pairs)
}

/// Parses config text and applies it onto defaults; used by the CLI and
/// exercised directly by the fuzz targets.
pub fn config_from_text(text: &str) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    for (key, value) in parse_config_text(text)? {
        cfg.apply(&key, &value)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_pairs() {
        let text = "# tuning\nfilter.low = 0.5\n\nrcnn.epochs=10\n";
        let pairs = parse_config_text(text).unwrap();
        assert_eq!(
            pairs,
            vec![
                ("filter.low".to_string(), "0.5".to_string()),
                ("rcnn.epochs".to_string(), "10".to_string())
            ]
        );
    }

    #[test]
    fn applies_known_keys() {
        let cfg = config_from_text("filter.low=0.5\nfilter.high=18\ncv.k=4\nlabel.iters=3\n")
            .unwrap();
        assert_eq!(cfg.filter.low_cut_hz, 0.5);
        assert_eq!(cfg.filter.high_cut_hz, 18.0);
        assert_eq!(cfg.cv.k, 4);
        assert_eq!(cfg.labeling.kmeans_iters, 3);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = config_from_text("nonsense.key=1\n").unwrap_err();
        assert!(err.to_string().contains("nonsense.key"), "{err}");
    }

    #[test]
    fn invalid_merged_config_rejected() {
        // Individually parseable, jointly invalid.
        assert!(config_from_text("filter.low=10\nfilter.high=5\n").is_err());
        assert!(config_from_text("label.iters=0\n").is_err());
        assert!(config_from_text("ensemble.weight_nb=1.5\n").is_err());
    }

    #[test]
    fn missing_equals_names_line() {
        let err = parse_config_text("filter.low=0.3\ngarbage line\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn window_override_propagates_to_rcnn_input() {
        let cfg = config_from_text("cv.window=128\n").unwrap();
        assert_eq!(cfg.cv.window_width, 128);
        assert_eq!(cfg.cv.rcnn.spec.input_width, 128);
    }
}
