//! Single-hidden-layer perceptron: tanh hidden units, sigmoid output,
//! binary cross-entropy loss, reverse-mode gradients.

use crate::error::{Error, Result};
use crate::rng::Rng;

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Binary cross-entropy against a (possibly fractional) target.
pub fn bce_loss(p: f64, target: f64) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    -(target * p.ln() + (1.0 - target) * (1.0 - p).ln())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    /// Hidden weights, row-major `hidden_dim x input_dim`.
    pub w_hidden: Vec<f64>,
    pub b_hidden: Vec<f64>,
    /// Output weights, `hidden_dim`.
    pub w_out: Vec<f64>,
    pub b_out: f64,
}

impl MlpParams {
    /// Xavier-uniform initialization, deterministic given the generator.
    pub fn init(input_dim: usize, hidden_dim: usize, rng: &mut Rng) -> Self {
        let s_hidden = (6.0 / (input_dim + hidden_dim) as f64).sqrt();
        let s_out = (6.0 / (hidden_dim + 1) as f64).sqrt();
        MlpParams {
            input_dim,
            hidden_dim,
            w_hidden: (0..hidden_dim * input_dim)
                .map(|_| rng.uniform_in(-s_hidden, s_hidden))
                .collect(),
            b_hidden: vec![0.0; hidden_dim],
            w_out: (0..hidden_dim).map(|_| rng.uniform_in(-s_out, s_out)).collect(),
            b_out: 0.0,
        }
    }

    pub fn n_params(&self) -> usize {
        self.hidden_dim * self.input_dim + self.hidden_dim + self.hidden_dim + 1
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.n_params());
        flat.extend_from_slice(&self.w_hidden);
        flat.extend_from_slice(&self.b_hidden);
        flat.extend_from_slice(&self.w_out);
        flat.push(self.b_out);
        flat
    }

    pub fn from_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.n_params(),
                flat.len()
            )));
        }
        let (wh, rest) = flat.split_at(self.hidden_dim * self.input_dim);
        let (bh, rest) = rest.split_at(self.hidden_dim);
        let (wo, bo) = rest.split_at(self.hidden_dim);
        self.w_hidden.copy_from_slice(wh);
        self.b_hidden.copy_from_slice(bh);
        self.w_out.copy_from_slice(wo);
        self.b_out = bo[0];
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::Shape(format!(
                "input dimension {} does not match {}",
                x.len(),
                self.input_dim
            )));
        }
        Ok(())
    }

    /// Event probability: `sigmoid(w_out . tanh(W x + b) + b_out)`.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        Ok(self.forward_cached(x)?.0)
    }

    fn forward_cached(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_input(x)?;
        let mut hidden = Vec::with_capacity(self.hidden_dim);
        for h in 0..self.hidden_dim {
            let row = &self.w_hidden[h * self.input_dim..(h + 1) * self.input_dim];
            let z: f64 =
                row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + self.b_hidden[h];
            hidden.push(z.tanh());
        }
        let z_out: f64 =
            self.w_out.iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>() + self.b_out;
        Ok((sigmoid(z_out), hidden))
    }

    /// Gradients of the binary cross-entropy loss at one example, in
    /// [`to_flat`] order, plus the loss value.
    pub fn grad(&self, x: &[f64], target: f64) -> Result<(Vec<f64>, f64)> {
        let (p, hidden) = self.forward_cached(x)?;
        let loss = bce_loss(p, target);
        // d loss / d z_out for sigmoid + BCE.
        let dz_out = p - target;

        let mut grads = vec![0.0; self.n_params()];
        let wh_len = self.hidden_dim * self.input_dim;
        let (g_wh, rest) = grads.split_at_mut(wh_len);
        let (g_bh, rest) = rest.split_at_mut(self.hidden_dim);
        let (g_wo, g_bo) = rest.split_at_mut(self.hidden_dim);

        for h in 0..self.hidden_dim {
            g_wo[h] = dz_out * hidden[h];
            // Backprop through tanh: dh/dz = 1 - tanh^2.
            let dz_h = dz_out * self.w_out[h] * (1.0 - hidden[h] * hidden[h]);
            g_bh[h] = dz_h;
            let row = &mut g_wh[h * self.input_dim..(h + 1) * self.input_dim];
            for (g, xi) in row.iter_mut().zip(x) {
                *g = dz_h * xi;
            }
        }
        g_bo[0] = dz_out;
        Ok((grads, loss))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_output_half() {
        let params = MlpParams {
            input_dim: 4,
            hidden_dim: 3,
            w_hidden: vec![0.0; 12],
            b_hidden: vec![0.0; 3],
            w_out: vec![0.0; 3],
            b_out: 0.0,
        };
        assert_eq!(params.forward(&[1.0, -2.0, 0.5, 3.0]).unwrap(), 0.5);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let mut rng = Rng::new(0);
        let params = MlpParams::init(4, 3, &mut rng);
        assert!(params.forward(&[0.0; 5]).is_err());
    }

    #[test]
    fn flat_round_trip() {
        let mut rng = Rng::new(2);
        let params = MlpParams::init(5, 7, &mut rng);
        let flat = params.to_flat();
        let mut other = MlpParams::init(5, 7, &mut rng);
        other.from_flat(&flat).unwrap();
        assert_eq!(other, params);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let eps = 1e-5;
        for seed in 0..20 {
            let mut rng = Rng::new(seed);
            let input_dim = 2 + rng.below(5);
            let hidden_dim = 1 + rng.below(6);
            let mut params = MlpParams::init(input_dim, hidden_dim, &mut rng);
            let x: Vec<f64> = (0..input_dim).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
            let target = rng.uniform();
            let (analytic, _) = params.grad(&x, target).unwrap();
            let flat = params.to_flat();
            for i in 0..flat.len() {
                let mut plus = flat.clone();
                plus[i] += eps;
                params.from_flat(&plus).unwrap();
                let lp = bce_loss(params.forward(&x).unwrap(), target);
                let mut minus = flat.clone();
                minus[i] -= eps;
                params.from_flat(&minus).unwrap();
                let lm = bce_loss(params.forward(&x).unwrap(), target);
                params.from_flat(&flat).unwrap();
                let numeric = (lp - lm) / (2.0 * eps);
                let denom = analytic[i].abs().max(numeric.abs()).max(1e-8);
                assert!(
                    (analytic[i] - numeric).abs() / denom < 1e-4,
                    "seed {seed} param {i}: analytic {} vs numeric {numeric}",
                    analytic[i]
                );
            }
        }
    }

    #[test]
    fn adam_training_reduces_loss_on_separable_set() {
        use crate::models::adam::{AdamConfig, AdamState};
        let mut rng = Rng::new(7);
        let mut params = MlpParams::init(2, 8, &mut rng);
        // Linearly separable toy set.
        let data: Vec<(Vec<f64>, f64)> = (0..40)
            .map(|i| {
                let c = f64::from(i % 2 == 0);
                let x = vec![
                    c * 2.0 - 1.0 + rng.uniform_in(-0.2, 0.2),
                    c * 2.0 - 1.0 + rng.uniform_in(-0.2, 0.2),
                ];
                (x, c)
            })
            .collect();
        let loss_of = |p: &MlpParams| -> f64 {
            data.iter().map(|(x, t)| bce_loss(p.forward(x).unwrap(), *t)).sum::<f64>()
                / data.len() as f64
        };
        let initial = loss_of(&params);
        let mut flat = params.to_flat();
        let mut state = AdamState::new(flat.len(), AdamConfig { alpha: 0.01, ..Default::default() });
        for _ in 0..100 {
            let mut grads = vec![0.0; flat.len()];
            for (x, t) in &data {
                let (g, _) = params.grad(x, *t).unwrap();
                for (acc, gi) in grads.iter_mut().zip(&g) {
                    *acc += gi / data.len() as f64;
                }
            }
            state.step(&mut flat, &grads).unwrap();
            params.from_flat(&flat).unwrap();
        }
        let final_loss = loss_of(&params);
        assert!(final_loss < initial / 2.0, "loss {initial} -> {final_loss}");
    }
}
