//! Weighted ensemble of Gaussian naive Bayes and an MLP over window
//! features. The naive Bayes vote carries 60% of the weight by default.

use crate::error::{Error, Result};
use crate::models::adam::{AdamConfig, AdamState};
use crate::models::gnb::{gnb_fit, gnb_predict, GnbParams};
use crate::models::mlp::{bce_loss, MlpParams};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleTrainConfig {
    pub hidden_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_nb: f64,
    pub seed: u64,
}

impl Default for EnsembleTrainConfig {
    fn default() -> Self {
        EnsembleTrainConfig {
            hidden_dim: 512,
            epochs: 30,
            batch_size: 32,
            learning_rate: 1e-3,
            weight_nb: 0.6,
            seed: 0,
        }
    }
}

impl EnsembleTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0 || self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "ensemble hidden_dim, epochs and batch_size must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(0.0 < self.weight_nb && self.weight_nb < 1.0) {
            return Err(Error::Config(format!(
                "weight_nb must lie strictly inside (0, 1), got {}",
                self.weight_nb
            )));
        }
        Ok(())
    }
}

/// Fitted ensemble: the naive Bayes consumes raw features (its variances
/// absorb scale), the MLP consumes features z-scored with the training
/// statistics stored here.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleParams {
    pub gnb: GnbParams,
    pub mlp: MlpParams,
    pub weight_nb: f64,
    pub weight_mlp: f64,
    pub feat_mean: Vec<f64>,
    pub feat_sd: Vec<f64>,
}

impl EnsembleParams {
    pub fn zscore(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.feat_mean.iter().zip(&self.feat_sd))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

/// Weighted probability: `weight_nb * gnb + weight_mlp * mlp`.
pub fn ensemble_predict(params: &EnsembleParams, x: &[f64]) -> Result<f64> {
    let p_nb = gnb_predict(&params.gnb, x)?;
    let p_mlp = params.mlp.forward(&params.zscore(x))?;
    Ok(params.weight_nb * p_nb + params.weight_mlp * p_mlp)
}

/// Fits both components: maximum-likelihood naive Bayes on the thresholded
/// classes and a mini-batch ADAM loop for the MLP against the fractional
/// targets. Returns the parameters and the per-epoch mean training loss of
/// the MLP.
pub fn ensemble_fit(
    features: &[Vec<f64>],
    targets: &[f64],
    cfg: &EnsembleTrainConfig,
) -> Result<(EnsembleParams, Vec<f64>)> {
    cfg.validate()?;
    if features.len() != targets.len() {
        return Err(Error::Shape(format!(
            "features ({}) and targets ({}) differ in length",
            features.len(),
            targets.len()
        )));
    }
    if features.is_empty() {
        return Err(Error::InsufficientData("cannot train on an empty set".into()));
    }
    let dim = features[0].len();
    let classes: Vec<u8> = targets.iter().map(|&t| u8::from(t >= 0.5)).collect();
    let gnb = gnb_fit(features, &classes)?;

    // Training-set z-score statistics for the MLP path. A constant
    // dimension is left unscaled (sd 1).
    let n = features.len() as f64;
    let mut feat_mean = vec![0.0; dim];
    for x in features {
        for d in 0..dim {
            feat_mean[d] += x[d];
        }
    }
    feat_mean.iter_mut().for_each(|m| *m /= n);
    let mut feat_sd = vec![0.0; dim];
    for x in features {
        for d in 0..dim {
            let diff = x[d] - feat_mean[d];
            feat_sd[d] += diff * diff;
        }
    }
    for s in feat_sd.iter_mut() {
        *s = (*s / n).sqrt();
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    let scaled: Vec<Vec<f64>> = features
        .iter()
        .map(|x| {
            x.iter()
                .zip(feat_mean.iter().zip(&feat_sd))
                .map(|(v, (m, s))| (v - m) / s)
                .collect()
        })
        .collect();

    let mut rng = Rng::new(cfg.seed);
    let mut mlp = MlpParams::init(dim, cfg.hidden_dim, &mut rng);
    let mut flat = mlp.to_flat();
    let mut state = AdamState::new(
        flat.len(),
        AdamConfig::default().with_alpha(cfg.learning_rate),
    );
    let mut order: Vec<usize> = (0..features.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = vec![0.0; flat.len()];
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let (g, loss) = mlp.grad(&scaled[i], targets[i])?;
                epoch_loss += loss;
                for (acc, gi) in grads.iter_mut().zip(&g) {
                    *acc += gi * scale;
                }
            }
            state.step(&mut flat, &grads)?;
            mlp.from_flat(&flat)?;
        }
        trace.push(epoch_loss / features.len() as f64);
    }

    let params = EnsembleParams {
        gnb,
        mlp,
        weight_nb: cfg.weight_nb,
        weight_mlp: 1.0 - cfg.weight_nb,
        feat_mean,
        feat_sd,
    };
    Ok((params, trace))
}

/// Mean BCE of the ensemble output over a labelled set.
pub fn ensemble_loss(params: &EnsembleParams, features: &[Vec<f64>], targets: &[f64]) -> Result<f64> {
    let mut loss = 0.0;
    for (x, &t) in features.iter().zip(targets) {
        loss += bce_loss(ensemble_predict(params, x)?, t);
    }
    Ok(loss / features.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_params() -> EnsembleParams {
        let gnb = GnbParams {
            prior: [0.5, 0.5],
            mean: [vec![0.0], vec![1.0]],
            var: [vec![0.01], vec![0.01]],
        };
        let mlp = MlpParams {
            input_dim: 1,
            hidden_dim: 1,
            w_hidden: vec![0.0],
            b_hidden: vec![0.0],
            w_out: vec![0.0],
            b_out: 0.0,
        };
        EnsembleParams {
            gnb,
            mlp,
            weight_nb: 0.6,
            weight_mlp: 0.4,
            feat_mean: vec![0.0],
            feat_sd: vec![1.0],
        }
    }

    #[test]
    fn weighted_vote_arithmetic() {
        let params = toy_params();
        // gnb at its class-1 mean -> ~1.0; zero-weight mlp -> 0.5.
        let p = ensemble_predict(&params, &[1.0]).unwrap();
        assert!((p - (0.6 * 1.0 + 0.4 * 0.5)).abs() < 1e-6, "{p}");
        // gnb at class-0 mean -> ~0.0.
        let p = ensemble_predict(&params, &[0.0]).unwrap();
        assert!((p - 0.4 * 0.5).abs() < 1e-6, "{p}");
    }

    #[test]
    fn vote_is_convex_combination() {
        let params = toy_params();
        for x in [-0.5, 0.0, 0.3, 0.7, 1.0, 1.5] {
            let p_nb = gnb_predict(&params.gnb, &[x]).unwrap();
            let p_mlp = params.mlp.forward(&params.zscore(&[x])).unwrap();
            let p = ensemble_predict(&params, &[x]).unwrap();
            assert!((p - (0.6 * p_nb + 0.4 * p_mlp)).abs() < 1e-12);
            assert!(p >= p_nb.min(p_mlp) && p <= p_nb.max(p_mlp));
        }
    }

    #[test]
    fn training_reduces_loss_and_is_deterministic() {
        let mut rng = Rng::new(31);
        let mut features = Vec::new();
        let mut targets = Vec::new();
        for i in 0..60 {
            let c = f64::from(i % 2 == 0);
            features.push(vec![
                c + rng.normal(0.0, 0.3),
                -c + rng.normal(0.0, 0.3),
                rng.normal(0.0, 1.0),
            ]);
            targets.push(c);
        }
        let cfg = EnsembleTrainConfig {
            hidden_dim: 16,
            epochs: 15,
            batch_size: 8,
            ..Default::default()
        };
        let (params, trace) = ensemble_fit(&features, &targets, &cfg).unwrap();
        assert_eq!(trace.len(), 15);
        assert!(
            trace.last().unwrap() < &(trace[0] * 0.8),
            "loss trace {trace:?} did not fall"
        );
        // Determinism.
        let (params2, trace2) = ensemble_fit(&features, &targets, &cfg).unwrap();
        assert_eq!(params, params2);
        assert_eq!(trace, trace2);
    }

    #[test]
    fn single_class_training_rejected() {
        let features = vec![vec![0.0], vec![0.1]];
        let targets = vec![1.0, 1.0];
        assert!(ensemble_fit(&features, &targets, &EnsembleTrainConfig::default()).is_err());
    }
}
