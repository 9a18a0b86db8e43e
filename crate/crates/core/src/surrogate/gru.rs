//! Gated recurrent sequence regressor with explicit forward and backward
//! passes and an Adam optimizer.
//!
//! One recurrent layer (update and reset gates, tanh candidate) followed by a
//! per-step fully connected output map. All parameters live in a single flat
//! vector, so the optimizer and the serialized artifact are trivially
//! deterministic. Dropout applies to the hidden state before the output map
//! during training only.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameter block offsets for the flat weight vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GruDims {
    pub input: usize,
    pub hidden: usize,
}

impl GruDims {
    fn blocks(&self) -> [usize; 11] {
        let d = self.input;
        let h = self.hidden;
        // Wz, Uz, bz, Wr, Ur, br, Wc, Uc, bc, Wo, bo
        [h * d, h * h, h, h * d, h * h, h, h * d, h * h, h, d * h, d]
    }

    pub fn n_params(&self) -> usize {
        self.blocks().iter().sum()
    }

    fn offset(&self, block: usize) -> usize {
        self.blocks()[..block].iter().sum()
    }
}

/// The trained network: dimensions plus the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruNetwork {
    pub dims: GruDims,
    pub params: Vec<f64>,
}

const N_BLOCKS: usize = 11;

impl GruNetwork {
    /// Uniform initialization in `[-1/sqrt(hidden), 1/sqrt(hidden)]`.
    pub fn init(input: usize, hidden: usize, rng: &mut ChaCha12Rng) -> Self {
        let dims = GruDims { input, hidden };
        let scale = 1.0 / (hidden as f64).sqrt();
        let params = (0..dims.n_params())
            .map(|_| (rng.gen::<f64>() * 2.0 - 1.0) * scale)
            .collect();
        Self { dims, params }
    }

    fn block(&self, i: usize) -> &[f64] {
        let off = self.dims.offset(i);
        &self.params[off..off + self.dims.blocks()[i]]
    }

    /// Forward pass over a `d x T` input, producing the `d x T` output.
    pub fn forward(&self, input: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if input.nrows() != self.dims.input {
            return Err(Error::DimensionMismatch(format!(
                "network expects {} input channels, got {}",
                self.dims.input,
                input.nrows()
            )));
        }
        let mut trace = ForwardTrace::new(self.dims, input.ncols());
        self.run_forward(input, None, &mut trace);
        Ok(trace.output)
    }

    /// Forward pass recording activations; `dropout` supplies the inverted
    /// dropout mask per step when training.
    fn run_forward(&self, input: &DMatrix<f64>, dropout: Option<&DMatrix<f64>>, t: &mut ForwardTrace) {
        let d = self.dims.input;
        let h = self.dims.hidden;
        let steps = input.ncols();
        let (wz, uz, bz) = (self.block(0), self.block(1), self.block(2));
        let (wr, ur, br) = (self.block(3), self.block(4), self.block(5));
        let (wc, uc, bc) = (self.block(6), self.block(7), self.block(8));
        let (wo, bo) = (self.block(9), self.block(10));

        let mut h_prev = vec![0.0f64; h];
        let mut pre = vec![0.0f64; h];
        let mut rh = vec![0.0f64; h];
        for step in 0..steps {
            let x = input.column(step);
            // Update gate.
            for i in 0..h {
                let mut acc = bz[i];
                for j in 0..d {
                    acc += wz[i * d + j] * x[j];
                }
                for j in 0..h {
                    acc += uz[i * h + j] * h_prev[j];
                }
                pre[i] = sigmoid(acc);
            }
            t.z.column_mut(step).copy_from_slice(&pre);
            // Reset gate.
            for i in 0..h {
                let mut acc = br[i];
                for j in 0..d {
                    acc += wr[i * d + j] * x[j];
                }
                for j in 0..h {
                    acc += ur[i * h + j] * h_prev[j];
                }
                pre[i] = sigmoid(acc);
            }
            t.r.column_mut(step).copy_from_slice(&pre);
            // Candidate on the reset-gated state.
            for i in 0..h {
                rh[i] = t.r[(i, step)] * h_prev[i];
            }
            for i in 0..h {
                let mut acc = bc[i];
                for j in 0..d {
                    acc += wc[i * d + j] * x[j];
                }
                for j in 0..h {
                    acc += uc[i * h + j] * rh[j];
                }
                pre[i] = acc.tanh();
            }
            t.c.column_mut(step).copy_from_slice(&pre);
            // New hidden state.
            for i in 0..h {
                let z = t.z[(i, step)];
                let hv = (1.0 - z) * h_prev[i] + z * t.c[(i, step)];
                t.h[(i, step)] = hv;
                h_prev[i] = hv;
            }
            // Output on the (possibly dropped-out) hidden state.
            for i in 0..h {
                let mask = dropout.map(|m| m[(i, step)]).unwrap_or(1.0);
                t.h_drop[(i, step)] = t.h[(i, step)] * mask;
            }
            for o in 0..d {
                let mut acc = bo[o];
                for j in 0..h {
                    acc += wo[o * h + j] * t.h_drop[(j, step)];
                }
                t.output[(o, step)] = acc;
            }
        }
    }

    /// Forward + backward for one sequence; accumulates gradients into
    /// `grad` and returns the sequence MSE.
    fn backward(
        &self,
        input: &DMatrix<f64>,
        target: &DMatrix<f64>,
        dropout: Option<&DMatrix<f64>>,
        grad: &mut [f64],
        trace: &mut ForwardTrace,
    ) -> f64 {
        let d = self.dims.input;
        let h = self.dims.hidden;
        let steps = input.ncols();
        self.run_forward(input, dropout, trace);

        let norm = 1.0 / (steps * d) as f64;
        let mut loss = 0.0;
        for step in 0..steps {
            for o in 0..d {
                let e = trace.output[(o, step)] - target[(o, step)];
                loss += e * e;
            }
        }
        loss *= norm;

        let (wz_o, uz_o, bz_o) = (self.dims.offset(0), self.dims.offset(1), self.dims.offset(2));
        let (wr_o, ur_o, br_o) = (self.dims.offset(3), self.dims.offset(4), self.dims.offset(5));
        let (wc_o, uc_o, bc_o) = (self.dims.offset(6), self.dims.offset(7), self.dims.offset(8));
        let (wo_o, bo_o) = (self.dims.offset(9), self.dims.offset(10));
        let (uz, ur, uc) = (self.block(1), self.block(4), self.block(7));
        let wo = self.block(9);

        let mut dh_next = vec![0.0f64; h];
        let mut dz = vec![0.0f64; h];
        let mut dr = vec![0.0f64; h];
        let mut dcp = vec![0.0f64; h];
        let mut drh = vec![0.0f64; h];
        for step in (0..steps).rev() {
            let x = input.column(step);
            // Output layer.
            let mut dh = dh_next.clone();
            for o in 0..d {
                let dy = 2.0 * norm * (trace.output[(o, step)] - target[(o, step)]);
                grad[bo_o + o] += dy;
                for j in 0..h {
                    grad[wo_o + o * h + j] += dy * trace.h_drop[(j, step)];
                    let mask = dropout.map(|m| m[(j, step)]).unwrap_or(1.0);
                    dh[j] += wo[o * h + j] * dy * mask;
                }
            }
            // h_t = (1 - z) h_prev + z c.
            let h_prev = |i: usize| if step == 0 { 0.0 } else { trace.h[(i, step - 1)] };
            let mut dh_prev = vec![0.0f64; h];
            for i in 0..h {
                let z = trace.z[(i, step)];
                let c = trace.c[(i, step)];
                dz[i] = dh[i] * (c - h_prev(i)) * z * (1.0 - z);
                let dc = dh[i] * z;
                dcp[i] = dc * (1.0 - c * c);
                dh_prev[i] = dh[i] * (1.0 - z);
            }
            // Candidate path.
            for i in 0..h {
                drh[i] = 0.0;
            }
            for i in 0..h {
                grad[bc_o + i] += dcp[i];
                for j in 0..d {
                    grad[wc_o + i * d + j] += dcp[i] * x[j];
                }
                for j in 0..h {
                    let rhj = trace.r[(j, step)] * h_prev(j);
                    grad[uc_o + i * h + j] += dcp[i] * rhj;
                    drh[j] += uc[i * h + j] * dcp[i];
                }
            }
            for i in 0..h {
                let r = trace.r[(i, step)];
                dr[i] = drh[i] * h_prev(i) * r * (1.0 - r);
                dh_prev[i] += drh[i] * r;
            }
            // Gate weight gradients and recurrent backflow.
            for i in 0..h {
                grad[bz_o + i] += dz[i];
                grad[br_o + i] += dr[i];
                for j in 0..d {
                    grad[wz_o + i * d + j] += dz[i] * x[j];
                    grad[wr_o + i * d + j] += dr[i] * x[j];
                }
                for j in 0..h {
                    grad[uz_o + i * h + j] += dz[i] * h_prev(j);
                    grad[ur_o + i * h + j] += dr[i] * h_prev(j);
                    dh_prev[j] += uz[i * h + j] * dz[i] + ur[i * h + j] * dr[i];
                }
            }
            dh_next = dh_prev;
        }
        loss
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Per-sequence activation storage reused across training steps.
struct ForwardTrace {
    z: DMatrix<f64>,
    r: DMatrix<f64>,
    c: DMatrix<f64>,
    h: DMatrix<f64>,
    h_drop: DMatrix<f64>,
    output: DMatrix<f64>,
}

impl ForwardTrace {
    fn new(dims: GruDims, steps: usize) -> Self {
        Self {
            z: DMatrix::zeros(dims.hidden, steps),
            r: DMatrix::zeros(dims.hidden, steps),
            c: DMatrix::zeros(dims.hidden, steps),
            h: DMatrix::zeros(dims.hidden, steps),
            h_drop: DMatrix::zeros(dims.hidden, steps),
            output: DMatrix::zeros(dims.input, steps),
        }
    }
}

/// Mean-squared-error training options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden_width: usize,
    pub dropout_rate: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    /// Held out for overfit monitoring and early stopping.
    pub validation_fraction: f64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_width: 200,
            dropout_rate: 0.5,
            learning_rate: 0.001,
            max_epochs: 400,
            batch_size: 16,
            validation_fraction: 0.1,
            patience: 40,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::Config("validation_fraction must lie in (0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config("dropout_rate must lie in [0, 1)".into()));
        }
        if self.hidden_width == 0 || self.max_epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("network and training sizes must be positive".into()));
        }
        Ok(())
    }
}

/// Adam with standard moment estimates and bias correction.
struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: usize,
    lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize, lr: f64) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let bc1 = 1.0 - Self::BETA1.powi(self.t as i32);
        let bc2 = 1.0 - Self::BETA2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + Self::EPS);
        }
    }
}

/// Fit a network to `(input, target)` sequence pairs.
///
/// Deterministic for a fixed `rng` state: initialization, the train /
/// validation split, epoch shuffles and dropout masks all draw from it in a
/// fixed order. Returns the weights of the best validation epoch.
pub fn fit(
    sequences: &[(DMatrix<f64>, DMatrix<f64>)],
    config: &TrainConfig,
    rng: &mut ChaCha12Rng,
) -> Result<GruNetwork> {
    config.validate()?;
    if sequences.is_empty() {
        return Err(Error::Config("empty training set".into()));
    }
    let d = sequences[0].0.nrows();
    let steps = sequences[0].0.ncols();
    for (x, y) in sequences {
        if x.nrows() != d || y.nrows() != d || x.ncols() != steps || y.ncols() != steps {
            return Err(Error::DimensionMismatch(
                "all training sequences must share one shape".into(),
            ));
        }
    }

    let mut net = GruNetwork::init(d, config.hidden_width, rng);
    let n = sequences.len();
    let mut order: Vec<usize> = (0..n).collect();
    shuffle(&mut order, rng);
    let n_val = ((n as f64 * config.validation_fraction).round() as usize).clamp(
        if n > 1 { 1 } else { 0 },
        n.saturating_sub(1),
    );
    let (val_idx, train_idx) = order.split_at(n_val);
    let val_idx = val_idx.to_vec();
    let mut train_order = train_idx.to_vec();

    let n_params = net.dims.n_params();
    let mut adam = Adam::new(n_params, config.learning_rate);
    let mut grad = vec![0.0f64; n_params];
    let mut trace = ForwardTrace::new(net.dims, steps);
    let h = config.hidden_width;

    let mut best = net.params.clone();
    let mut best_val = f64::INFINITY;
    let mut since_best = 0usize;

    for _epoch in 0..config.max_epochs {
        shuffle(&mut train_order, rng);
        for batch in train_order.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut batch_loss = 0.0;
            for &idx in batch {
                let (x, y) = &sequences[idx];
                let mask = if config.dropout_rate > 0.0 {
                    let keep = 1.0 - config.dropout_rate;
                    Some(DMatrix::from_fn(h, steps, |_, _| {
                        if rng.gen::<f64>() < keep {
                            1.0 / keep
                        } else {
                            0.0
                        }
                    }))
                } else {
                    None
                };
                batch_loss += net.backward(x, y, mask.as_ref(), &mut grad, &mut trace);
            }
            if !batch_loss.is_finite() {
                return Err(Error::TrainingDiverged(format!(
                    "non-finite loss at optimizer step {}",
                    adam.t
                )));
            }
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            adam.step(&mut net.params, &grad);
        }

        // Validation (no dropout).
        let eval_set: &[usize] = if val_idx.is_empty() { &train_order } else { &val_idx };
        let mut val_loss = 0.0;
        for &idx in eval_set {
            let (x, y) = &sequences[idx];
            net.run_forward(x, None, &mut trace);
            let mut l = 0.0;
            for step in 0..steps {
                for o in 0..d {
                    let e = trace.output[(o, step)] - y[(o, step)];
                    l += e * e;
                }
            }
            val_loss += l / (steps * d) as f64;
        }
        val_loss /= eval_set.len() as f64;
        if val_loss < best_val - 1e-12 {
            best_val = val_loss;
            best.copy_from_slice(&net.params);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                break;
            }
        }
    }
    net.params = best;
    Ok(net)
}

fn shuffle<R: Rng>(xs: &mut [usize], rng: &mut R) {
    for i in (1..xs.len()).rev() {
        let j = rng.gen_range(0..=i);
        xs.swap(i, j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    fn toy_sequences(n: usize, d: usize, steps: usize) -> Vec<(DMatrix<f64>, DMatrix<f64>)> {
        // Target = smoothed scaled input, a causal map a GRU can represent.
        (0..n)
            .map(|s| {
                let x = DMatrix::from_fn(d, steps, |i, t| {
                    ((s * 7 + i * 3 + t) as f64 * 0.21).sin()
                });
                let mut y = DMatrix::zeros(d, steps);
                for i in 0..d {
                    let mut acc = 0.0;
                    for t in 0..steps {
                        acc = 0.6 * acc + 0.4 * x[(i, t)];
                        y[(i, t)] = acc;
                    }
                }
                (x, y)
            })
            .collect()
    }

    #[test]
    fn gradients_match_finite_differences() {
        let d = 2;
        let h = 5;
        let steps = 7;
        let net = GruNetwork::init(d, h, &mut rng(3));
        let x = DMatrix::from_fn(d, steps, |i, t| ((i + t) as f64 * 0.37).sin());
        let y = DMatrix::from_fn(d, steps, |i, t| ((i * t) as f64 * 0.19).cos());
        let mut grad = vec![0.0; net.dims.n_params()];
        let mut trace = ForwardTrace::new(net.dims, steps);
        let loss0 = net.backward(&x, &y, None, &mut grad, &mut trace);

        let eps = 1e-6;
        let mut worst = 0.0f64;
        for p in (0..net.dims.n_params()).step_by(17) {
            let mut plus = net.clone();
            plus.params[p] += eps;
            let mut minus = net.clone();
            minus.params[p] -= eps;
            let lp = seq_loss(&plus, &x, &y);
            let lm = seq_loss(&minus, &x, &y);
            let fd = (lp - lm) / (2.0 * eps);
            let err = (grad[p] - fd).abs() / fd.abs().max(1e-6);
            worst = worst.max(err);
        }
        assert!(worst < 1e-5, "worst gradient error {worst}, loss {loss0}");
    }

    fn seq_loss(net: &GruNetwork, x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
        let out = net.forward(x).unwrap();
        let mut l = 0.0;
        for t in 0..x.ncols() {
            for i in 0..x.nrows() {
                let e = out[(i, t)] - y[(i, t)];
                l += e * e;
            }
        }
        l / (x.ncols() * x.nrows()) as f64
    }

    #[test]
    fn fits_zero_targets_to_zero() {
        let xs: Vec<_> = toy_sequences(8, 2, 12)
            .into_iter()
            .map(|(x, _)| {
                let zeros = DMatrix::zeros(2, 12);
                (x, zeros)
            })
            .collect();
        let config = TrainConfig {
            hidden_width: 8,
            dropout_rate: 0.0,
            learning_rate: 0.02,
            max_epochs: 300,
            batch_size: 8,
            validation_fraction: 0.2,
            patience: 300,
        };
        let net = fit(&xs, &config, &mut rng(1)).unwrap();
        for (x, _) in &xs {
            let out = net.forward(x).unwrap();
            assert!(out.abs().max() < 1e-3, "max output {}", out.abs().max());
        }
    }

    #[test]
    fn training_is_deterministic() {
        let xs = toy_sequences(10, 2, 15);
        let config = TrainConfig {
            hidden_width: 6,
            dropout_rate: 0.3,
            learning_rate: 0.01,
            max_epochs: 20,
            batch_size: 4,
            validation_fraction: 0.2,
            patience: 20,
        };
        let a = fit(&xs, &config, &mut rng(42)).unwrap();
        let b = fit(&xs, &config, &mut rng(42)).unwrap();
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn prediction_has_no_dropout() {
        let xs = toy_sequences(6, 2, 10);
        let config = TrainConfig {
            hidden_width: 6,
            dropout_rate: 0.5,
            learning_rate: 0.01,
            max_epochs: 5,
            batch_size: 4,
            validation_fraction: 0.2,
            patience: 5,
        };
        let net = fit(&xs, &config, &mut rng(7)).unwrap();
        let a = net.forward(&xs[0].0).unwrap();
        let b = net.forward(&xs[0].0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn learns_a_causal_smoothing_map() {
        let xs = toy_sequences(16, 2, 20);
        let config = TrainConfig {
            hidden_width: 12,
            dropout_rate: 0.0,
            learning_rate: 0.02,
            max_epochs: 500,
            batch_size: 16,
            validation_fraction: 0.15,
            patience: 500,
        };
        let net = fit(&xs, &config, &mut rng(11)).unwrap();
        let mut worst = 0.0f64;
        for (x, y) in &xs {
            worst = worst.max(seq_loss_vs(&net, x, y));
        }
        assert!(worst < 5e-3, "worst per-sequence MSE {worst}");
    }

    fn seq_loss_vs(net: &GruNetwork, x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
        let out = net.forward(x).unwrap();
        let mut l = 0.0;
        for t in 0..x.ncols() {
            for i in 0..x.nrows() {
                let e = out[(i, t)] - y[(i, t)];
                l += e * e;
            }
        }
        l / (x.ncols() * x.nrows()) as f64
    }

    #[test]
    fn divergent_loss_reports_error() {
        let mut xs = toy_sequences(4, 2, 10);
        xs[2].0[(1, 3)] = f64::NAN; // poisoned input makes the loss non-finite
        let config = TrainConfig {
            hidden_width: 6,
            dropout_rate: 0.0,
            learning_rate: 0.01,
            max_epochs: 50,
            batch_size: 4,
            validation_fraction: 0.25,
            patience: 50,
        };
        let out = fit(&xs, &config, &mut rng(5));
        assert!(matches!(out, Err(Error::TrainingDiverged(_))));
    }
}
