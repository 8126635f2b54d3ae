//! Classifiers and their training loops.
//!
//! Two models predict the per-window event probability:
//!
//! * the ensemble: Gaussian naive Bayes + MLP over window features,
//!   votes weighted 60/40;
//! * the RCNN: conv/pool/conv/pool/dense feeding an LSTM cell whose
//!   output drives a sigmoid neuron, trained with truncated
//!   backpropagation through time.
//!
//! Both train with ADAM. Fitted parameters serialize to a versioned
//! textual format with shape headers ([`encode_model`] / [`decode_model`]).

pub mod adam;
pub mod ensemble;
pub mod gnb;
pub mod mlp;
pub mod rcnn;

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::models::adam::{AdamConfig, AdamState};
use crate::models::ensemble::EnsembleParams;
use crate::models::gnb::GnbParams;
use crate::models::mlp::MlpParams;
use crate::models::rcnn::{LstmParams, RcnnParams, RcnnSpec};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Ensemble,
    Rcnn,
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ensemble" => Ok(ModelKind::Ensemble),
            "rcnn" => Ok(ModelKind::Rcnn),
            other => Err(Error::Config(format!(
                "unknown model kind {other:?}; expected ensemble or rcnn"
            ))),
        }
    }
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Ensemble => "ensemble",
            ModelKind::Rcnn => "rcnn",
        }
    }
}

// ---------------------------------------------------------------------------
// RCNN training
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcnnTrainConfig {
    pub spec: RcnnSpec,
    pub epochs: usize,
    /// Mini-batch size in truncation blocks.
    pub batch_size: usize,
    /// Truncated-BPTT length in windows; the LSTM carry resets at every
    /// block boundary.
    pub truncation: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for RcnnTrainConfig {
    fn default() -> Self {
        RcnnTrainConfig {
            spec: RcnnSpec::default(),
            epochs: 50,
            batch_size: 8,
            truncation: 8,
            learning_rate: 1e-3,
            seed: 0,
        }
    }
}

impl RcnnTrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.epochs == 0 || self.batch_size == 0 || self.truncation == 0 {
            return Err(Error::Config(
                "rcnn epochs, batch_size and truncation must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// One contiguous run of windows with fractional targets. Runs never span
/// discontinuities (fold joins, balancing splices between segments).
pub struct WindowSequence<'a> {
    pub windows: Vec<Vec<&'a [f64]>>,
    pub targets: Vec<f64>,
}

/// Trains the RCNN with seeded mini-batch ADAM over truncation blocks.
/// Each contiguous group is chopped into blocks of `truncation` windows;
/// the carry starts from zero at every block. Returns the parameters and
/// the per-epoch mean training loss.
pub fn train_rcnn(
    groups: &[WindowSequence<'_>],
    cfg: &RcnnTrainConfig,
) -> Result<(RcnnParams, Vec<f64>)> {
    cfg.validate()?;
    // Blocks index into groups: (group, start, end).
    let mut blocks: Vec<(usize, usize, usize)> = Vec::new();
    let mut total_windows = 0usize;
    let mut any_event = false;
    let mut any_nonevent = false;
    for (gi, group) in groups.iter().enumerate() {
        if group.windows.len() != group.targets.len() {
            return Err(Error::Shape(format!(
                "group {gi}: {} windows vs {} targets",
                group.windows.len(),
                group.targets.len()
            )));
        }
        total_windows += group.windows.len();
        for &t in &group.targets {
            if t >= 0.5 {
                any_event = true;
            } else {
                any_nonevent = true;
            }
        }
        let mut start = 0;
        while start < group.windows.len() {
            let end = (start + cfg.truncation).min(group.windows.len());
            blocks.push((gi, start, end));
            start = end;
        }
    }
    if total_windows == 0 {
        return Err(Error::InsufficientData("no training windows".into()));
    }
    if !any_event || !any_nonevent {
        return Err(Error::SingleClass(u8::from(any_event)));
    }

    let mut rng = Rng::new(cfg.seed);
    let mut params = RcnnParams::init(cfg.spec, &mut rng)?;
    let mut flat = params.to_flat();
    let mut state =
        AdamState::new(flat.len(), AdamConfig::default().with_alpha(cfg.learning_rate));
    let mut order: Vec<usize> = (0..blocks.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = vec![0.0; flat.len()];
            let scale = 1.0 / batch.len() as f64;
            for &bi in batch {
                let (gi, s, e) = blocks[bi];
                let group = &groups[gi];
                let (g, loss) =
                    params.block_grad(&group.windows[s..e], &group.targets[s..e], scale)?;
                epoch_loss += loss;
                for (acc, gv) in grads.iter_mut().zip(&g) {
                    *acc += gv;
                }
            }
            state.step(&mut flat, &grads)?;
            params.from_flat(&flat)?;
        }
        trace.push(epoch_loss / blocks.len() as f64);
    }
    Ok((params, trace))
}

// ---------------------------------------------------------------------------
// Parameter serialization
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Ensemble(EnsembleParams),
    Rcnn(RcnnParams),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Ensemble(_) => ModelKind::Ensemble,
            ModelParams::Rcnn(_) => ModelKind::Rcnn,
        }
    }
}

const MODEL_MAGIC: &str = "harvest-har-model v1";
/// Upper bound on any single serialized vector; keeps hostile headers from
/// requesting huge allocations.
const MAX_VEC_LEN: usize = 1 << 24;

fn push_scalar(out: &mut String, name: &str, v: f64) {
    let _ = writeln!(out, "f {name} {v}");
}

fn push_usize(out: &mut String, name: &str, v: usize) {
    let _ = writeln!(out, "u {name} {v}");
}

fn push_vec(out: &mut String, name: &str, values: &[f64]) {
    let _ = write!(out, "v {name} {}", values.len());
    for v in values {
        let _ = write!(out, " {v}");
    }
    out.push('\n');
}

/// Renders parameters to the versioned text format. Floats use the
/// shortest round-trip representation, so decode(encode(p)) == p exactly
/// and identical parameters produce identical bytes.
pub fn encode_model(params: &ModelParams) -> String {
    let mut out = String::new();
    out.push_str(MODEL_MAGIC);
    out.push('\n');
    let _ = writeln!(out, "kind {}", params.kind().name());
    match params {
        ModelParams::Ensemble(p) => {
            push_scalar(&mut out, "weight_nb", p.weight_nb);
            push_scalar(&mut out, "weight_mlp", p.weight_mlp);
            push_vec(&mut out, "feat_mean", &p.feat_mean);
            push_vec(&mut out, "feat_sd", &p.feat_sd);
            push_vec(&mut out, "gnb.prior", &p.gnb.prior);
            push_vec(&mut out, "gnb.mean0", &p.gnb.mean[0]);
            push_vec(&mut out, "gnb.mean1", &p.gnb.mean[1]);
            push_vec(&mut out, "gnb.var0", &p.gnb.var[0]);
            push_vec(&mut out, "gnb.var1", &p.gnb.var[1]);
            push_usize(&mut out, "mlp.input_dim", p.mlp.input_dim);
            push_usize(&mut out, "mlp.hidden_dim", p.mlp.hidden_dim);
            push_vec(&mut out, "mlp.w_hidden", &p.mlp.w_hidden);
            push_vec(&mut out, "mlp.b_hidden", &p.mlp.b_hidden);
            push_vec(&mut out, "mlp.w_out", &p.mlp.w_out);
            push_scalar(&mut out, "mlp.b_out", p.mlp.b_out);
        }
        ModelParams::Rcnn(p) => {
            let s = &p.spec;
            for (name, v) in [
                ("spec.in_channels", s.in_channels),
                ("spec.input_width", s.input_width),
                ("spec.conv1_filters", s.conv1_filters),
                ("spec.conv1_kernel", s.conv1_kernel),
                ("spec.pool1_width", s.pool1_width),
                ("spec.conv2_filters", s.conv2_filters),
                ("spec.conv2_kernel", s.conv2_kernel),
                ("spec.pool2_width", s.pool2_width),
                ("spec.dense_units", s.dense_units),
                ("spec.lstm_hidden", s.lstm_hidden),
            ] {
                push_usize(&mut out, name, v);
            }
            push_vec(&mut out, "conv1_w", &p.conv1_w);
            push_vec(&mut out, "conv1_b", &p.conv1_b);
            push_vec(&mut out, "conv2_w", &p.conv2_w);
            push_vec(&mut out, "conv2_b", &p.conv2_b);
            push_vec(&mut out, "dense_w", &p.dense_w);
            push_vec(&mut out, "dense_b", &p.dense_b);
            for gate in 0..4 {
                push_vec(&mut out, &format!("lstm.w{gate}"), &p.lstm.w[gate]);
                push_vec(&mut out, &format!("lstm.u{gate}"), &p.lstm.u[gate]);
                push_vec(&mut out, &format!("lstm.b{gate}"), &p.lstm.b[gate]);
            }
            push_vec(&mut out, "out_w", &p.out_w);
            push_scalar(&mut out, "out_b", p.out_b);
        }
    }
    out
}

struct FieldReader<'a> {
    lines: std::str::Lines<'a>,
    line_no: usize,
}

impl<'a> FieldReader<'a> {
    fn next_line(&mut self) -> Result<&'a str> {
        self.line_no += 1;
        self.lines
            .next()
            .map(|l| l.trim_end_matches('\r'))
            .ok_or_else(|| Error::parse(self.line_no, "unexpected end of file"))
    }

    fn scalar(&mut self, name: &str) -> Result<f64> {
        let line = self.next_line()?;
        let rest = line
            .strip_prefix("f ")
            .and_then(|r| r.strip_prefix(name))
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| Error::parse(self.line_no, format!("expected scalar {name}")))?;
        let v: f64 = rest
            .parse()
            .map_err(|_| Error::parse(self.line_no, format!("bad float {rest:?}")))?;
        if !v.is_finite() {
            return Err(Error::parse(self.line_no, format!("non-finite value for {name}")));
        }
        Ok(v)
    }

    fn unsigned(&mut self, name: &str) -> Result<usize> {
        let line = self.next_line()?;
        let rest = line
            .strip_prefix("u ")
            .and_then(|r| r.strip_prefix(name))
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| Error::parse(self.line_no, format!("expected integer {name}")))?;
        rest.parse()
            .map_err(|_| Error::parse(self.line_no, format!("bad integer {rest:?}")))
    }

    fn vector(&mut self, name: &str, expected_len: Option<usize>) -> Result<Vec<f64>> {
        let line = self.next_line()?;
        let rest = line
            .strip_prefix("v ")
            .and_then(|r| r.strip_prefix(name))
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| Error::parse(self.line_no, format!("expected vector {name}")))?;
        let mut parts = rest.split(' ');
        let len: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::parse(self.line_no, format!("bad vector length for {name}")))?;
        if len > MAX_VEC_LEN {
            return Err(Error::parse(self.line_no, format!("vector {name} too large: {len}")));
        }
        if let Some(expect) = expected_len {
            if len != expect {
                return Err(Error::parse(
                    self.line_no,
                    format!("vector {name} has length {len}, expected {expect}"),
                ));
            }
        }
        let mut values = Vec::with_capacity(len.min(1 << 16));
        for token in parts {
            let v: f64 = token
                .parse()
                .map_err(|_| Error::parse(self.line_no, format!("bad float {token:?}")))?;
            if !v.is_finite() {
                return Err(Error::parse(self.line_no, format!("non-finite value in {name}")));
            }
            values.push(v);
            if values.len() > len {
                return Err(Error::parse(
                    self.line_no,
                    format!("vector {name} has more than {len} values"),
                ));
            }
        }
        if values.len() != len {
            return Err(Error::parse(
                self.line_no,
                format!("vector {name} has {} values, header said {len}", values.len()),
            ));
        }
        Ok(values)
    }

    fn end(&mut self) -> Result<()> {
        loop {
            match self.lines.next() {
                None => return Ok(()),
                Some(l) if l.trim().is_empty() => continue,
                Some(_) => return Err(Error::parse(self.line_no + 1, "trailing content")),
            }
        }
    }
}

/// Parses the text format back into parameters, validating every shape.
pub fn decode_model(text: &str) -> Result<ModelParams> {
    let mut reader = FieldReader { lines: text.lines(), line_no: 0 };
    let magic = reader.next_line()?;
    if magic != MODEL_MAGIC {
        return Err(Error::parse(1, format!("bad magic {magic:?}")));
    }
    let kind_line = reader.next_line()?;
    let kind: ModelKind = kind_line
        .strip_prefix("kind ")
        .ok_or_else(|| Error::parse(reader.line_no, "expected kind line"))?
        .parse()?;
    match kind {
        ModelKind::Ensemble => {
            let weight_nb = reader.scalar("weight_nb")?;
            let weight_mlp = reader.scalar("weight_mlp")?;
            if !(weight_nb > 0.0 && weight_mlp > 0.0 && (weight_nb + weight_mlp - 1.0).abs() < 1e-9)
            {
                return Err(Error::parse(
                    reader.line_no,
                    format!(
                        "ensemble weights {weight_nb}/{weight_mlp} must be positive and sum to 1"
                    ),
                ));
            }
            let feat_mean = reader.vector("feat_mean", None)?;
            let dim = feat_mean.len();
            if dim == 0 {
                return Err(Error::parse(reader.line_no, "feature dimension is zero"));
            }
            let feat_sd = reader.vector("feat_sd", Some(dim))?;
            if feat_sd.iter().any(|&s| s <= 0.0) {
                return Err(Error::parse(reader.line_no, "feat_sd must be positive"));
            }
            let prior_v = reader.vector("gnb.prior", Some(2))?;
            if prior_v.iter().any(|&p| p <= 0.0) {
                return Err(Error::parse(reader.line_no, "priors must be positive"));
            }
            let mean0 = reader.vector("gnb.mean0", Some(dim))?;
            let mean1 = reader.vector("gnb.mean1", Some(dim))?;
            let var0 = reader.vector("gnb.var0", Some(dim))?;
            let var1 = reader.vector("gnb.var1", Some(dim))?;
            if var0.iter().chain(&var1).any(|&v| v <= 0.0) {
                return Err(Error::parse(reader.line_no, "variances must be positive"));
            }
            let input_dim = reader.unsigned("mlp.input_dim")?;
            if input_dim != dim {
                return Err(Error::parse(
                    reader.line_no,
                    format!("mlp input_dim {input_dim} does not match feature dim {dim}"),
                ));
            }
            let hidden_dim = reader.unsigned("mlp.hidden_dim")?;
            if hidden_dim == 0 || hidden_dim > MAX_VEC_LEN / dim {
                return Err(Error::parse(reader.line_no, "mlp.hidden_dim out of range"));
            }
            let w_hidden = reader.vector("mlp.w_hidden", Some(hidden_dim * input_dim))?;
            let b_hidden = reader.vector("mlp.b_hidden", Some(hidden_dim))?;
            let w_out = reader.vector("mlp.w_out", Some(hidden_dim))?;
            let b_out = reader.scalar("mlp.b_out")?;
            reader.end()?;
            Ok(ModelParams::Ensemble(EnsembleParams {
                gnb: GnbParams {
                    prior: [prior_v[0], prior_v[1]],
                    mean: [mean0, mean1],
                    var: [var0, var1],
                },
                mlp: MlpParams { input_dim, hidden_dim, w_hidden, b_hidden, w_out, b_out },
                weight_nb,
                weight_mlp,
                feat_mean,
                feat_sd,
            }))
        }
        ModelKind::Rcnn => {
            let spec = RcnnSpec {
                in_channels: reader.unsigned("spec.in_channels")?,
                input_width: reader.unsigned("spec.input_width")?,
                conv1_filters: reader.unsigned("spec.conv1_filters")?,
                conv1_kernel: reader.unsigned("spec.conv1_kernel")?,
                pool1_width: reader.unsigned("spec.pool1_width")?,
                conv2_filters: reader.unsigned("spec.conv2_filters")?,
                conv2_kernel: reader.unsigned("spec.conv2_kernel")?,
                pool2_width: reader.unsigned("spec.pool2_width")?,
                dense_units: reader.unsigned("spec.dense_units")?,
                lstm_hidden: reader.unsigned("spec.lstm_hidden")?,
            };
            let max_dim = MAX_VEC_LEN;
            if [
                spec.in_channels,
                spec.input_width,
                spec.conv1_filters,
                spec.conv1_kernel,
                spec.conv2_filters,
                spec.conv2_kernel,
                spec.dense_units,
                spec.lstm_hidden,
            ]
            .iter()
            .any(|&d| d > max_dim)
            {
                return Err(Error::parse(reader.line_no, "spec dimensions too large"));
            }
            spec.validate()
                .map_err(|e| Error::parse(reader.line_no, format!("invalid spec: {e}")))?;
            if spec.dense_units.saturating_mul(spec.flat_dim()) > MAX_VEC_LEN
                || spec.lstm_hidden.saturating_mul(spec.dense_units) > MAX_VEC_LEN
                || spec.lstm_hidden.saturating_mul(spec.lstm_hidden) > MAX_VEC_LEN
                || spec
                    .conv1_filters
                    .saturating_mul(spec.in_channels)
                    .saturating_mul(spec.conv1_kernel)
                    > MAX_VEC_LEN
                || spec
                    .conv2_filters
                    .saturating_mul(spec.conv1_filters)
                    .saturating_mul(spec.conv2_kernel)
                    > MAX_VEC_LEN
            {
                return Err(Error::parse(reader.line_no, "spec dimensions too large"));
            }
            let h = spec.lstm_hidden;
            let conv1_w = reader.vector(
                "conv1_w",
                Some(spec.conv1_filters * spec.in_channels * spec.conv1_kernel),
            )?;
            let conv1_b = reader.vector("conv1_b", Some(spec.conv1_filters))?;
            let conv2_w = reader.vector(
                "conv2_w",
                Some(spec.conv2_filters * spec.conv1_filters * spec.conv2_kernel),
            )?;
            let conv2_b = reader.vector("conv2_b", Some(spec.conv2_filters))?;
            let dense_w = reader.vector("dense_w", Some(spec.dense_units * spec.flat_dim()))?;
            let dense_b = reader.vector("dense_b", Some(spec.dense_units))?;
            let mut w: [Vec<f64>; 4] = [vec![], vec![], vec![], vec![]];
            let mut u: [Vec<f64>; 4] = [vec![], vec![], vec![], vec![]];
            let mut b: [Vec<f64>; 4] = [vec![], vec![], vec![], vec![]];
            for gate in 0..4 {
                w[gate] = reader.vector(&format!("lstm.w{gate}"), Some(h * spec.dense_units))?;
                u[gate] = reader.vector(&format!("lstm.u{gate}"), Some(h * h))?;
                b[gate] = reader.vector(&format!("lstm.b{gate}"), Some(h))?;
            }
            let out_w = reader.vector("out_w", Some(h))?;
            let out_b = reader.scalar("out_b")?;
            reader.end()?;
            Ok(ModelParams::Rcnn(RcnnParams {
                spec,
                conv1_w,
                conv1_b,
                conv2_w,
                conv2_b,
                dense_w,
                dense_b,
                lstm: LstmParams { w, u, b },
                out_w,
                out_b,
            }))
        }
    }
}

pub fn save_model(params: &ModelParams, path: &Path) -> Result<()> {
    std::fs::write(path, encode_model(params)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<ModelParams> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_model(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ensemble::{ensemble_fit, EnsembleTrainConfig};

    fn tiny_rcnn_cfg() -> RcnnTrainConfig {
        RcnnTrainConfig {
            spec: RcnnSpec {
                in_channels: 2,
                input_width: 16,
                conv1_filters: 2,
                conv1_kernel: 3,
                pool1_width: 2,
                conv2_filters: 2,
                conv2_kernel: 2,
                pool2_width: 2,
                dense_units: 4,
                lstm_hidden: 3,
            },
            epochs: 12,
            batch_size: 4,
            truncation: 4,
            learning_rate: 0.01,
            seed: 7,
        }
    }

    fn toy_groups(seed: u64) -> (Vec<Vec<Vec<f64>>>, Vec<f64>) {
        // One long group: amplitude encodes the class.
        let mut rng = Rng::new(seed);
        let mut windows = Vec::new();
        let mut targets = Vec::new();
        for i in 0..32 {
            let class = f64::from(i % 4 >= 2);
            let amp = if class > 0.5 { 1.0 } else { 0.2 };
            windows.push(
                (0..2)
                    .map(|_| {
                        (0..16)
                            .map(|t| amp * ((t as f64) * 0.9).sin() + rng.normal(0.0, 0.05))
                            .collect()
                    })
                    .collect::<Vec<Vec<f64>>>(),
            );
            targets.push(class);
        }
        (windows, targets)
    }

    #[test]
    fn rcnn_training_reduces_loss_and_is_deterministic() {
        let (windows, targets) = toy_groups(3);
        let seqs = vec![WindowSequence {
            windows: windows.iter().map(|w| w.iter().map(Vec::as_slice).collect()).collect(),
            targets: targets.clone(),
        }];
        let cfg = tiny_rcnn_cfg();
        let (params, trace) = train_rcnn(&seqs, &cfg).unwrap();
        assert_eq!(trace.len(), cfg.epochs);
        assert!(
            trace.last().unwrap() < trace.first().unwrap(),
            "loss did not fall: {trace:?}"
        );
        let (params2, trace2) = train_rcnn(&seqs, &cfg).unwrap();
        assert_eq!(params, params2);
        assert_eq!(trace, trace2);
    }

    #[test]
    fn rcnn_single_class_rejected() {
        let (windows, _) = toy_groups(4);
        let seqs = vec![WindowSequence {
            windows: windows.iter().map(|w| w.iter().map(Vec::as_slice).collect()).collect(),
            targets: vec![1.0; windows.len()],
        }];
        assert!(matches!(train_rcnn(&seqs, &tiny_rcnn_cfg()), Err(Error::SingleClass(1))));
    }

    fn fitted_ensemble() -> EnsembleParams {
        let mut rng = Rng::new(5);
        let mut features = Vec::new();
        let mut targets = Vec::new();
        for i in 0..40 {
            let c = f64::from(i % 2 == 0);
            features.push(vec![c + rng.normal(0.0, 0.2), rng.normal(0.0, 1.0)]);
            targets.push(c);
        }
        let cfg = EnsembleTrainConfig { hidden_dim: 8, epochs: 5, ..Default::default() };
        ensemble_fit(&features, &targets, &cfg).unwrap().0
    }

    #[test]
    fn ensemble_serialization_round_trip() {
        let params = ModelParams::Ensemble(fitted_ensemble());
        let text = encode_model(&params);
        assert!(text.starts_with("harvest-har-model v1\nkind ensemble\n"));
        let back = decode_model(&text).unwrap();
        assert_eq!(back, params);
        // Deterministic bytes.
        assert_eq!(encode_model(&params), text);
    }

    #[test]
    fn rcnn_serialization_round_trip() {
        let mut rng = Rng::new(9);
        let p = RcnnParams::init(tiny_rcnn_cfg().spec, &mut rng).unwrap();
        let params = ModelParams::Rcnn(p);
        let text = encode_model(&params);
        let back = decode_model(&text).unwrap();
        assert_eq!(back, params);
    }

    #[test]
    fn decode_rejects_corruption() {
        let params = ModelParams::Ensemble(fitted_ensemble());
        let text = encode_model(&params);
        assert!(decode_model("garbage").is_err());
        assert!(decode_model("").is_err());
        // Flip the declared length of the first vector.
        let broken = text.replacen("v feat_mean 2", "v feat_mean 3", 1);
        assert!(decode_model(&broken).is_err());
        // Truncate mid-file.
        let half = &text[..text.len() / 2];
        assert!(decode_model(half).is_err());
    }

    #[test]
    fn model_kind_parses() {
        assert_eq!("ensemble".parse::<ModelKind>().unwrap(), ModelKind::Ensemble);
        assert_eq!("rcnn".parse::<ModelKind>().unwrap(), ModelKind::Rcnn);
        assert!("cnn".parse::<ModelKind>().is_err());
    }
}
