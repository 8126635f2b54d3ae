//! Recurrent convolutional network.
//!
//! Per window: two 1-D convolution + ReLU + max-pool stages over the
//! channel-major input tensor, a dense ReLU layer, then an LSTM cell whose
//! hidden state carries across consecutive windows; a sigmoid neuron on
//! the LSTM output emits the event probability. Gradients are exact
//! reverse-mode, backpropagated through time over a block of windows.

use crate::error::{Error, Result};
use crate::models::mlp::{bce_loss, sigmoid};
use crate::rng::Rng;

/// Input centering applied ahead of conv1: the fused channels live in
/// [0, 1], which puts a large DC component on every convolution tap;
/// mapping to [-1, 1] zero-centers typical data.
fn center(v: f64) -> f64 {
    2.0 * (v - 0.5)
}

/// Architecture description. The reference configuration is
/// 4x256 input, conv 16x8, pool 4, conv 32x8, pool 4, dense 64, LSTM 64.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RcnnSpec {
    pub in_channels: usize,
    pub input_width: usize,
    pub conv1_filters: usize,
    pub conv1_kernel: usize,
    pub pool1_width: usize,
    pub conv2_filters: usize,
    pub conv2_kernel: usize,
    pub pool2_width: usize,
    pub dense_units: usize,
    pub lstm_hidden: usize,
}

impl Default for RcnnSpec {
    fn default() -> Self {
        RcnnSpec {
            in_channels: 4,
            input_width: 256,
            conv1_filters: 16,
            conv1_kernel: 8,
            pool1_width: 4,
            conv2_filters: 32,
            conv2_kernel: 8,
            pool2_width: 4,
            dense_units: 64,
            lstm_hidden: 64,
        }
    }
}

impl RcnnSpec {
    pub fn conv1_out_w(&self) -> usize {
        self.input_width + 1 - self.conv1_kernel
    }

    pub fn pool1_out_w(&self) -> usize {
        self.conv1_out_w() / self.pool1_width
    }

    pub fn conv2_out_w(&self) -> usize {
        self.pool1_out_w() + 1 - self.conv2_kernel
    }

    pub fn pool2_out_w(&self) -> usize {
        self.conv2_out_w() / self.pool2_width
    }

    pub fn flat_dim(&self) -> usize {
        self.conv2_filters * self.pool2_out_w()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.in_channels,
            self.input_width,
            self.conv1_filters,
            self.conv1_kernel,
            self.pool1_width,
            self.conv2_filters,
            self.conv2_kernel,
            self.pool2_width,
            self.dense_units,
            self.lstm_hidden,
        ];
        if positive.iter().any(|&v| v == 0) {
            return Err(Error::Config("all rcnn dimensions must be positive".into()));
        }
        if self.conv1_kernel > self.input_width {
            return Err(Error::Config(format!(
                "conv1 kernel {} exceeds input width {}",
                self.conv1_kernel, self.input_width
            )));
        }
        if self.pool1_out_w() == 0 {
            return Err(Error::Config("pool1 output is empty; widen the input".into()));
        }
        if self.conv2_kernel > self.pool1_out_w() {
            return Err(Error::Config(format!(
                "conv2 kernel {} exceeds pool1 output width {}",
                self.conv2_kernel,
                self.pool1_out_w()
            )));
        }
        if self.pool2_out_w() == 0 {
            return Err(Error::Config("pool2 output is empty; widen the input".into()));
        }
        Ok(())
    }
}

/// LSTM gate parameters: for each of input/forget/cell/output, an input
/// matrix `hidden x dense_units`, a recurrent matrix `hidden x hidden`,
/// and a bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub w: [Vec<f64>; 4],
    pub u: [Vec<f64>; 4],
    pub b: [Vec<f64>; 4],
}

/// Gate order within [`LstmParams`] arrays.
pub const GATE_INPUT: usize = 0;
pub const GATE_FORGET: usize = 1;
pub const GATE_CELL: usize = 2;
pub const GATE_OUTPUT: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct RcnnParams {
    pub spec: RcnnSpec,
    /// conv1 kernels, `[filter][in_channel][tap]` flattened.
    pub conv1_w: Vec<f64>,
    pub conv1_b: Vec<f64>,
    /// conv2 kernels, `[filter][conv1_filter][tap]` flattened.
    pub conv2_w: Vec<f64>,
    pub conv2_b: Vec<f64>,
    /// Dense weights, `[unit][flat_dim]` flattened.
    pub dense_w: Vec<f64>,
    pub dense_b: Vec<f64>,
    pub lstm: LstmParams,
    pub out_w: Vec<f64>,
    pub out_b: f64,
}

/// LSTM hidden and cell state carried across windows.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCarry {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmCarry {
    pub fn zeros(hidden: usize) -> Self {
        LstmCarry { h: vec![0.0; hidden], c: vec![0.0; hidden] }
    }
}

impl RcnnParams {
    pub fn zeros(spec: RcnnSpec) -> Result<Self> {
        spec.validate()?;
        let h = spec.lstm_hidden;
        let d = spec.dense_units;
        Ok(RcnnParams {
            spec,
            conv1_w: vec![0.0; spec.conv1_filters * spec.in_channels * spec.conv1_kernel],
            conv1_b: vec![0.0; spec.conv1_filters],
            conv2_w: vec![0.0; spec.conv2_filters * spec.conv1_filters * spec.conv2_kernel],
            conv2_b: vec![0.0; spec.conv2_filters],
            dense_w: vec![0.0; d * spec.flat_dim()],
            dense_b: vec![0.0; d],
            lstm: LstmParams {
                w: [vec![0.0; h * d], vec![0.0; h * d], vec![0.0; h * d], vec![0.0; h * d]],
                u: [vec![0.0; h * h], vec![0.0; h * h], vec![0.0; h * h], vec![0.0; h * h]],
                b: [vec![0.0; h], vec![0.0; h], vec![0.0; h], vec![0.0; h]],
            },
            out_w: vec![0.0; h],
            out_b: 0.0,
        })
    }

    /// He-uniform for the ReLU stages, Xavier-uniform for the LSTM and
    /// output; the forget-gate bias starts at 1.
    pub fn init(spec: RcnnSpec, rng: &mut Rng) -> Result<Self> {
        let mut p = Self::zeros(spec)?;
        let he = |fan_in: usize| (6.0 / fan_in as f64).sqrt();
        let xavier = |fan_in: usize, fan_out: usize| (6.0 / (fan_in + fan_out) as f64).sqrt();

        let s1 = he(spec.in_channels * spec.conv1_kernel);
        p.conv1_w.iter_mut().for_each(|w| *w = rng.uniform_in(-s1, s1));
        let s2 = he(spec.conv1_filters * spec.conv2_kernel);
        p.conv2_w.iter_mut().for_each(|w| *w = rng.uniform_in(-s2, s2));
        let sd = he(spec.flat_dim());
        p.dense_w.iter_mut().for_each(|w| *w = rng.uniform_in(-sd, sd));
        // Small nonzero ReLU biases keep pre-activations off the exact
        // zero of the ReLU kink, where the subgradient is ambiguous.
        p.conv1_b.iter_mut().for_each(|b| *b = rng.uniform_in(0.01, 0.05));
        p.conv2_b.iter_mut().for_each(|b| *b = rng.uniform_in(0.01, 0.05));
        p.dense_b.iter_mut().for_each(|b| *b = rng.uniform_in(0.01, 0.05));

        let sw = xavier(spec.dense_units, spec.lstm_hidden);
        let su = xavier(spec.lstm_hidden, spec.lstm_hidden);
        for gate in 0..4 {
            p.lstm.w[gate].iter_mut().for_each(|w| *w = rng.uniform_in(-sw, sw));
            p.lstm.u[gate].iter_mut().for_each(|w| *w = rng.uniform_in(-su, su));
        }
        p.lstm.b[GATE_FORGET].iter_mut().for_each(|b| *b = 1.0);

        let so = xavier(spec.lstm_hidden, 1);
        p.out_w.iter_mut().for_each(|w| *w = rng.uniform_in(-so, so));
        Ok(p)
    }

    pub fn n_params(&self) -> usize {
        self.conv1_w.len()
            + self.conv1_b.len()
            + self.conv2_w.len()
            + self.conv2_b.len()
            + self.dense_w.len()
            + self.dense_b.len()
            + self.lstm.w.iter().map(Vec::len).sum::<usize>()
            + self.lstm.u.iter().map(Vec::len).sum::<usize>()
            + self.lstm.b.iter().map(Vec::len).sum::<usize>()
            + self.out_w.len()
            + 1
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.n_params());
        flat.extend_from_slice(&self.conv1_w);
        flat.extend_from_slice(&self.conv1_b);
        flat.extend_from_slice(&self.conv2_w);
        flat.extend_from_slice(&self.conv2_b);
        flat.extend_from_slice(&self.dense_w);
        flat.extend_from_slice(&self.dense_b);
        for gate in 0..4 {
            flat.extend_from_slice(&self.lstm.w[gate]);
            flat.extend_from_slice(&self.lstm.u[gate]);
            flat.extend_from_slice(&self.lstm.b[gate]);
        }
        flat.extend_from_slice(&self.out_w);
        flat.push(self.out_b);
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
        let mut cursor = 0usize;
        let mut take = |dst: &mut [f64]| {
            dst.copy_from_slice(&flat[cursor..cursor + dst.len()]);
            cursor += dst.len();
        };
        take(&mut self.conv1_w);
        take(&mut self.conv1_b);
        take(&mut self.conv2_w);
        take(&mut self.conv2_b);
        take(&mut self.dense_w);
        take(&mut self.dense_b);
        for gate in 0..4 {
            take(&mut self.lstm.w[gate]);
            take(&mut self.lstm.u[gate]);
            take(&mut self.lstm.b[gate]);
        }
        take(&mut self.out_w);
        self.out_b = flat[cursor];
        Ok(())
    }

    fn check_input(&self, window: &[&[f64]]) -> Result<()> {
        if window.len() != self.spec.in_channels {
            return Err(Error::Shape(format!(
                "expected {} channels, got {}",
                self.spec.in_channels,
                window.len()
            )));
        }
        for (c, chan) in window.iter().enumerate() {
            if chan.len() != self.spec.input_width {
                return Err(Error::Shape(format!(
                    "channel {c} has width {}, expected {}",
                    chan.len(),
                    self.spec.input_width
                )));
            }
        }
        Ok(())
    }

    /// Event probability for one window plus the updated carry. With the
    /// carry reset beforehand this is a pure function of the parameters
    /// and the window.
    pub fn forward(&self, window: &[&[f64]], carry: &LstmCarry) -> Result<(f64, LstmCarry)> {
        let cache = self.forward_cached(window, carry)?;
        Ok((cache.p, LstmCarry { h: cache.h, c: cache.c }))
    }

    fn forward_cached(&self, window: &[&[f64]], carry: &LstmCarry) -> Result<StepCache> {
        self.check_input(window)?;
        let s = &self.spec;
        if carry.h.len() != s.lstm_hidden || carry.c.len() != s.lstm_hidden {
            return Err(Error::Shape(format!(
                "carry dimension {} does not match lstm hidden {}",
                carry.h.len(),
                s.lstm_hidden
            )));
        }

        // conv1 + ReLU.
        let w1 = s.conv1_out_w();
        let mut a1 = vec![0.0; s.conv1_filters * w1];
        for f in 0..s.conv1_filters {
            let base = f * s.in_channels * s.conv1_kernel;
            for t in 0..w1 {
                let mut acc = self.conv1_b[f];
                for (c, chan) in window.iter().enumerate() {
                    let kb = base + c * s.conv1_kernel;
                    for k in 0..s.conv1_kernel {
                        acc += self.conv1_w[kb + k] * center(chan[t + k]);
                    }
                }
                a1[f * w1 + t] = acc.max(0.0);
            }
        }

        // pool1 (max, non-overlapping; remainder discarded).
        let p1w = s.pool1_out_w();
        let mut p1 = vec![0.0; s.conv1_filters * p1w];
        let mut argmax1 = vec![0usize; s.conv1_filters * p1w];
        max_pool(&a1, s.conv1_filters, w1, s.pool1_width, &mut p1, &mut argmax1);

        // conv2 + ReLU over the pooled features.
        let w2 = s.conv2_out_w();
        let mut a2 = vec![0.0; s.conv2_filters * w2];
        for g in 0..s.conv2_filters {
            let base = g * s.conv1_filters * s.conv2_kernel;
            for t in 0..w2 {
                let mut acc = self.conv2_b[g];
                for f in 0..s.conv1_filters {
                    let kb = base + f * s.conv2_kernel;
                    let row = f * p1w;
                    for k in 0..s.conv2_kernel {
                        acc += self.conv2_w[kb + k] * p1[row + t + k];
                    }
                }
                a2[g * w2 + t] = acc.max(0.0);
            }
        }

        // pool2 + flatten.
        let p2w = s.pool2_out_w();
        let mut flat = vec![0.0; s.conv2_filters * p2w];
        let mut argmax2 = vec![0usize; s.conv2_filters * p2w];
        max_pool(&a2, s.conv2_filters, w2, s.pool2_width, &mut flat, &mut argmax2);

        // Dense + ReLU.
        let flat_dim = s.flat_dim();
        let mut dense = vec![0.0; s.dense_units];
        for (u, unit) in dense.iter_mut().enumerate() {
            let row = &self.dense_w[u * flat_dim..(u + 1) * flat_dim];
            let z: f64 =
                row.iter().zip(&flat).map(|(w, x)| w * x).sum::<f64>() + self.dense_b[u];
            *unit = z.max(0.0);
        }

        // LSTM cell.
        let h = s.lstm_hidden;
        let mut gates = [vec![0.0; h], vec![0.0; h], vec![0.0; h], vec![0.0; h]];
        for gate in 0..4 {
            for j in 0..h {
                let wrow = &self.lstm.w[gate][j * s.dense_units..(j + 1) * s.dense_units];
                let urow = &self.lstm.u[gate][j * h..(j + 1) * h];
                let z: f64 = wrow.iter().zip(&dense).map(|(w, x)| w * x).sum::<f64>()
                    + urow.iter().zip(&carry.h).map(|(u, hp)| u * hp).sum::<f64>()
                    + self.lstm.b[gate][j];
                gates[gate][j] = if gate == GATE_CELL { z.tanh() } else { sigmoid(z) };
            }
        }
        let mut c = vec![0.0; h];
        let mut tanh_c = vec![0.0; h];
        let mut h_new = vec![0.0; h];
        for j in 0..h {
            c[j] = gates[GATE_FORGET][j] * carry.c[j] + gates[GATE_INPUT][j] * gates[GATE_CELL][j];
            tanh_c[j] = c[j].tanh();
            h_new[j] = gates[GATE_OUTPUT][j] * tanh_c[j];
        }

        let z_out: f64 =
            self.out_w.iter().zip(&h_new).map(|(w, hj)| w * hj).sum::<f64>() + self.out_b;
        let p = sigmoid(z_out);

        Ok(StepCache {
            a1,
            argmax1,
            p1,
            a2,
            argmax2,
            flat,
            dense,
            gates,
            c_prev: carry.c.clone(),
            h_prev: carry.h.clone(),
            c,
            tanh_c,
            h: h_new,
            p,
        })
    }

    /// Gradients of `loss_scale * mean BCE` over a block of consecutive
    /// windows, backpropagated through time. The carry starts at zero (a
    /// truncation block boundary). Returns the flat gradient vector and
    /// the unscaled mean loss.
    pub fn block_grad(
        &self,
        windows: &[Vec<&[f64]>],
        targets: &[f64],
        loss_scale: f64,
    ) -> Result<(Vec<f64>, f64)> {
        if windows.is_empty() || windows.len() != targets.len() {
            return Err(Error::Shape(format!(
                "block of {} windows with {} targets",
                windows.len(),
                targets.len()
            )));
        }
        let s = &self.spec;
        let steps = windows.len();
        let mut caches = Vec::with_capacity(steps);
        let mut carry = LstmCarry::zeros(s.lstm_hidden);
        let mut loss = 0.0;
        for (window, &target) in windows.iter().zip(targets) {
            let cache = self.forward_cached(window, &carry)?;
            carry = LstmCarry { h: cache.h.clone(), c: cache.c.clone() };
            loss += bce_loss(cache.p, target);
            caches.push(cache);
        }
        loss /= steps as f64;

        let mut grads = RcnnParams::zeros(*s)?;
        let h = s.lstm_hidden;
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];

        for t in (0..steps).rev() {
            let cache = &caches[t];
            // Output neuron: dL/dz = scale * (p - y) / T.
            let dz_out = loss_scale * (cache.p - targets[t]) / steps as f64;
            let mut dh: Vec<f64> = std::mem::take(&mut dh_next);
            for j in 0..h {
                grads.out_w[j] += dz_out * cache.h[j];
                dh[j] += dz_out * self.out_w[j];
            }
            grads.out_b += dz_out;

            // LSTM cell backward.
            let i_g = &cache.gates[GATE_INPUT];
            let f_g = &cache.gates[GATE_FORGET];
            let g_g = &cache.gates[GATE_CELL];
            let o_g = &cache.gates[GATE_OUTPUT];
            let mut dz_gates = [vec![0.0; h], vec![0.0; h], vec![0.0; h], vec![0.0; h]];
            let mut dc_prev = vec![0.0; h];
            for j in 0..h {
                let do_j = dh[j] * cache.tanh_c[j];
                let dc_j = dh[j] * o_g[j] * (1.0 - cache.tanh_c[j] * cache.tanh_c[j]) + dc_next[j];
                let di_j = dc_j * g_g[j];
                let df_j = dc_j * cache.c_prev[j];
                let dg_j = dc_j * i_g[j];
                dc_prev[j] = dc_j * f_g[j];
                dz_gates[GATE_INPUT][j] = di_j * i_g[j] * (1.0 - i_g[j]);
                dz_gates[GATE_FORGET][j] = df_j * f_g[j] * (1.0 - f_g[j]);
                dz_gates[GATE_CELL][j] = dg_j * (1.0 - g_g[j] * g_g[j]);
                dz_gates[GATE_OUTPUT][j] = do_j * o_g[j] * (1.0 - o_g[j]);
            }
            dc_next = dc_prev;

            let mut d_dense = vec![0.0; s.dense_units];
            let mut dh_prev = vec![0.0; h];
            for gate in 0..4 {
                let dz = &dz_gates[gate];
                for j in 0..h {
                    let dz_j = dz[j];
                    if dz_j == 0.0 {
                        continue;
                    }
                    let wrow_base = j * s.dense_units;
                    for u in 0..s.dense_units {
                        grads.lstm.w[gate][wrow_base + u] += dz_j * cache.dense[u];
                        d_dense[u] += dz_j * self.lstm.w[gate][wrow_base + u];
                    }
                    let urow_base = j * h;
                    for k in 0..h {
                        grads.lstm.u[gate][urow_base + k] += dz_j * cache.h_prev[k];
                        dh_prev[k] += dz_j * self.lstm.u[gate][urow_base + k];
                    }
                    grads.lstm.b[gate][j] += dz_j;
                }
            }
            dh_next = dh_prev;

            // Dense backward (ReLU mask from the cached activations).
            let flat_dim = s.flat_dim();
            let mut d_flat = vec![0.0; flat_dim];
            for u in 0..s.dense_units {
                if cache.dense[u] <= 0.0 {
                    continue;
                }
                let dz_u = d_dense[u];
                let row = u * flat_dim;
                for x in 0..flat_dim {
                    grads.dense_w[row + x] += dz_u * cache.flat[x];
                    d_flat[x] += dz_u * self.dense_w[row + x];
                }
                grads.dense_b[u] += dz_u;
            }

            // pool2 backward: route to the argmax positions.
            let w2 = s.conv2_out_w();
            let mut d_a2 = vec![0.0; s.conv2_filters * w2];
            for g in 0..s.conv2_filters {
                for t2 in 0..s.pool2_out_w() {
                    let out_idx = g * s.pool2_out_w() + t2;
                    d_a2[g * w2 + cache.argmax2[out_idx]] += d_flat[out_idx];
                }
            }

            // conv2 backward with ReLU mask.
            let p1w = s.pool1_out_w();
            let mut d_p1 = vec![0.0; s.conv1_filters * p1w];
            for g in 0..s.conv2_filters {
                let base = g * s.conv1_filters * s.conv2_kernel;
                for t2 in 0..w2 {
                    let a = cache.a2[g * w2 + t2];
                    if a <= 0.0 {
                        continue;
                    }
                    let dz = d_a2[g * w2 + t2];
                    if dz == 0.0 {
                        continue;
                    }
                    grads.conv2_b[g] += dz;
                    for f in 0..s.conv1_filters {
                        let kb = base + f * s.conv2_kernel;
                        let row = f * p1w;
                        for k in 0..s.conv2_kernel {
                            grads.conv2_w[kb + k] += dz * cache.p1[row + t2 + k];
                            d_p1[row + t2 + k] += dz * self.conv2_w[kb + k];
                        }
                    }
                }
            }

            // pool1 backward.
            let w1 = s.conv1_out_w();
            let mut d_a1 = vec![0.0; s.conv1_filters * w1];
            for f in 0..s.conv1_filters {
                for t1 in 0..p1w {
                    let out_idx = f * p1w + t1;
                    d_a1[f * w1 + cache.argmax1[out_idx]] += d_p1[out_idx];
                }
            }

            // conv1 backward with ReLU mask.
            let window = &windows[t];
            for f in 0..s.conv1_filters {
                let base = f * s.in_channels * s.conv1_kernel;
                for t1 in 0..w1 {
                    let a = cache.a1[f * w1 + t1];
                    if a <= 0.0 {
                        continue;
                    }
                    let dz = d_a1[f * w1 + t1];
                    if dz == 0.0 {
                        continue;
                    }
                    grads.conv1_b[f] += dz;
                    for (c, chan) in window.iter().enumerate() {
                        let kb = base + c * s.conv1_kernel;
                        for k in 0..s.conv1_kernel {
                            grads.conv1_w[kb + k] += dz * center(chan[t1 + k]);
                        }
                    }
                }
            }
        }

        Ok((grads.to_flat(), loss))
    }
}

/// Non-overlapping max pooling over each row of a `rows x width` matrix;
/// the trailing remainder (width % pool) is discarded. Ties resolve to the
/// first maximum. `argmax` stores the within-row source column.
fn max_pool(
    input: &[f64],
    rows: usize,
    width: usize,
    pool: usize,
    output: &mut [f64],
    argmax: &mut [usize],
) {
    let out_w = width / pool;
    for r in 0..rows {
        for t in 0..out_w {
            let base = t * pool;
            let mut best = f64::NEG_INFINITY;
            let mut best_k = base;
            for k in 0..pool {
                let v = input[r * width + base + k];
                if v > best {
                    best = v;
                    best_k = base + k;
                }
            }
            output[r * out_w + t] = best;
            argmax[r * out_w + t] = best_k;
        }
    }
}

/// Per-step activations cached for backpropagation.
struct StepCache {
    a1: Vec<f64>,
    argmax1: Vec<usize>,
    p1: Vec<f64>,
    a2: Vec<f64>,
    argmax2: Vec<usize>,
    flat: Vec<f64>,
    dense: Vec<f64>,
    gates: [Vec<f64>; 4],
    c_prev: Vec<f64>,
    h_prev: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
    p: f64,
}
