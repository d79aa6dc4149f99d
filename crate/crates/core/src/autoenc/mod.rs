//! A small feedforward autoencoder `F → H → K → H → F` trained by plain
//! minibatch SGD on reconstruction error plus an L1 penalty on code
//! activity and L2 weight decay. Code units whose mean activity falls
//! below a threshold are considered pruned, so the effective code width
//! falls out of training instead of being fixed up front.

mod checkpoint;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SeededRng;

pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutoencError {
    #[error("expected a vector of length {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub learning_rate: f64,
    /// Weight of the L1 code-activity term.
    pub sparsity: f64,
    /// Weight of the L2 penalty on weight matrices (not biases).
    pub decay: f64,
    /// Mean |activation| below which a code unit counts as inactive.
    pub prune_threshold: f64,
    pub batch_size: usize,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper { learning_rate: 0.01, sparsity: 0.05, decay: 1e-4, prune_threshold: 0.05, batch_size: 32 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Tanh,
    Linear,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Linear => z,
        }
    }

    /// Derivative in terms of the activation value.
    fn slope(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Linear => 1.0,
        }
    }
}

/// Dense layer; `weights` is `outputs × inputs`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Layer { inputs, outputs, weights: vec![0.0; inputs * outputs], biases: vec![0.0; outputs], activation }
    }

    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let z = self.biases[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            out.push(self.activation.apply(z));
        }
    }
}

/// Per-feature affine normalization applied before encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardization {
    pub fn identity(features: usize) -> Self {
        Standardization { mean: vec![0.0; features], std: vec![1.0; features] }
    }

    /// Mean and population std per feature; constant features keep std 1.
    pub fn fit(data: &[Vec<f64>]) -> Self {
        let f = data[0].len();
        let n = data.len() as f64;
        let mut mean = vec![0.0; f];
        for x in data {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v / n;
            }
        }
        let mut std = vec![0.0; f];
        for x in data {
            for ((s, v), m) in std.iter_mut().zip(x).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        for s in &mut std {
            *s = if *s > 1e-16 { s.sqrt() } else { 1.0 };
        }
        Standardization { mean, std }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.std).map(|((v, m), s)| (v - m) / s).collect()
    }

    fn invert(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.mean).zip(&self.std).map(|((v, m), s)| v * s + m).collect()
    }
}

/// A latent vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Code(pub Vec<f64>);

impl Code {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    /// `[F, H, K, H, F]`.
    pub sizes: [usize; 5],
    pub layers: [Layer; 4],
    pub hyper: Hyper,
    pub standardization: Standardization,
    /// Code units found active on the last training set; all active before training.
    pub active_mask: Vec<bool>,
}

const CODE_LAYER: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Loss {
    pub reconstruction: f64,
    pub sparsity: f64,
    pub decay: f64,
    pub total: f64,
}

/// Gradients with the same shapes as the layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: [Vec<f64>; 4],
    pub biases: [Vec<f64>; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub initial: Loss,
    /// Full-dataset loss after each epoch.
    pub trace: Vec<Loss>,
}

impl TrainReport {
    pub fn final_loss(&self) -> Loss {
        self.trace.last().copied().unwrap_or(self.initial)
    }
}

impl Autoencoder {
    pub fn zeros(features: usize, hidden: usize, code: usize, hyper: Hyper) -> Self {
        use Activation::*;
        Autoencoder {
            sizes: [features, hidden, code, hidden, features],
            layers: [
                Layer::zeros(features, hidden, Tanh),
                Layer::zeros(hidden, code, Linear),
                Layer::zeros(code, hidden, Tanh),
                Layer::zeros(hidden, features, Linear),
            ],
            hyper,
            standardization: Standardization::identity(features),
            active_mask: vec![true; code],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn new(features: usize, hidden: usize, code: usize, hyper: Hyper, rng: &mut SeededRng) -> Self {
        let mut ae = Self::zeros(features, hidden, code, hyper);
        for layer in &mut ae.layers {
            let limit = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.uniform(-limit, limit);
            }
        }
        ae
    }

    pub fn features(&self) -> usize {
        self.sizes[0]
    }

    pub fn code_len(&self) -> usize {
        self.sizes[2]
    }

    fn check(&self, x: &[f64], expected: usize) -> Result<(), AutoencError> {
        if x.len() != expected {
            return Err(AutoencError::DimensionMismatch { expected, found: x.len() });
        }
        Ok(())
    }

    fn forward_std(&self, x: &[f64]) -> [Vec<f64>; 5] {
        let mut acts: [Vec<f64>; 5] = Default::default();
        acts[0] = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let (done, rest) = acts.split_at_mut(i + 1);
            layer.forward(&done[i], &mut rest[0]);
        }
        acts
    }

    pub fn encode(&self, x: &[f64]) -> Result<Code, AutoencError> {
        self.check(x, self.features())?;
        let s = self.standardization.apply(x);
        let mut h = Vec::new();
        let mut c = Vec::new();
        self.layers[0].forward(&s, &mut h);
        self.layers[1].forward(&h, &mut c);
        Ok(Code(c))
    }

    pub fn decode(&self, code: &Code) -> Result<Vec<f64>, AutoencError> {
        self.check(&code.0, self.code_len())?;
        let mut h = Vec::new();
        let mut y = Vec::new();
        self.layers[2].forward(&code.0, &mut h);
        self.layers[3].forward(&h, &mut y);
        Ok(self.standardization.invert(&y))
    }

    fn decay_sum(&self) -> f64 {
        self.layers.iter().flat_map(|l| l.weights.iter()).map(|w| w * w).sum()
    }

    fn standardized(&self, batch: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, AutoencError> {
        if batch.is_empty() {
            return Err(AutoencError::EmptyBatch);
        }
        batch
            .iter()
            .map(|x| {
                self.check(x, self.features())?;
                Ok(self.standardization.apply(x))
            })
            .collect()
    }

    /// Loss on a batch; reconstruction is measured in standardized units.
    pub fn loss(&self, batch: &[Vec<f64>]) -> Result<Loss, AutoencError> {
        let xs = self.standardized(batch)?;
        Ok(self.loss_std(&xs))
    }

    fn loss_std(&self, xs: &[Vec<f64>]) -> Loss {
        let n = xs.len() as f64;
        let f = self.features() as f64;
        let (mut rec, mut sp) = (0.0, 0.0);
        for x in xs {
            let acts = self.forward_std(x);
            rec += acts[4].iter().zip(x).map(|(y, t)| (y - t) * (y - t)).sum::<f64>() / f / n;
            sp += acts[2].iter().map(|c| c.abs()).sum::<f64>() / n;
        }
        let decay = self.decay_sum();
        Loss { reconstruction: rec, sparsity: sp, decay, total: rec + self.hyper.sparsity * sp + self.hyper.decay * decay }
    }

    /// Analytic gradient of the total loss on a batch.
    pub fn gradients(&self, batch: &[Vec<f64>]) -> Result<(Loss, Gradients), AutoencError> {
        let xs = self.standardized(batch)?;
        Ok(self.gradients_std(&xs))
    }

    fn gradients_std(&self, xs: &[Vec<f64>]) -> (Loss, Gradients) {
        let n = xs.len() as f64;
        let f = self.features() as f64;
        let mut g = Gradients {
            weights: std::array::from_fn(|i| vec![0.0; self.layers[i].weights.len()]),
            biases: std::array::from_fn(|i| vec![0.0; self.layers[i].outputs]),
        };
        let (mut rec, mut sp) = (0.0, 0.0);
        for x in xs {
            let acts = self.forward_std(x);
            rec += acts[4].iter().zip(x).map(|(y, t)| (y - t) * (y - t)).sum::<f64>() / f / n;
            sp += acts[2].iter().map(|c| c.abs()).sum::<f64>() / n;
            // delta = dLoss/d(pre-activation) of the current layer
            let mut delta: Vec<f64> = acts[4].iter().zip(x).map(|(y, t)| 2.0 * (y - t) / (f * n)).collect();
            for li in (0..4).rev() {
                let layer = &self.layers[li];
                let input = &acts[li];
                for (o, d) in delta.iter().enumerate() {
                    g.biases[li][o] += d;
                    let row = &mut g.weights[li][o * layer.inputs..(o + 1) * layer.inputs];
                    for (gw, v) in row.iter_mut().zip(input) {
                        *gw += d * v;
                    }
                }
                if li == 0 {
                    break;
                }
                let below = &self.layers[li - 1];
                let mut next = vec![0.0; layer.inputs];
                for (o, d) in delta.iter().enumerate() {
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (acc, w) in next.iter_mut().zip(row) {
                        *acc += d * w;
                    }
                }
                if li - 1 == CODE_LAYER {
                    for (acc, c) in next.iter_mut().zip(&acts[2]) {
                        *acc += self.hyper.sparsity * c.signum() * (*c != 0.0) as u8 as f64 / n;
                    }
                }
                for (acc, a) in next.iter_mut().zip(&acts[li]) {
                    *acc *= below.activation.slope(*a);
                }
                delta = next;
            }
        }
        for (gw, layer) in g.weights.iter_mut().zip(&self.layers) {
            for (d, w) in gw.iter_mut().zip(&layer.weights) {
                *d += 2.0 * self.hyper.decay * w;
            }
        }
        let decay = self.decay_sum();
        let loss = Loss { reconstruction: rec, sparsity: sp, decay, total: rec + self.hyper.sparsity * sp + self.hyper.decay * decay };
        (loss, g)
    }

    fn step(&mut self, g: &Gradients) {
        let lr = self.hyper.learning_rate;
        for (li, layer) in self.layers.iter_mut().enumerate() {
            for (w, d) in layer.weights.iter_mut().zip(&g.weights[li]) {
                *w -= lr * d;
            }
            for (b, d) in layer.biases.iter_mut().zip(&g.biases[li]) {
                *b -= lr * d;
            }
        }
    }

    /// Mean |code activation| per unit over a dataset.
    pub fn code_activity(&self, data: &[Vec<f64>]) -> Result<Vec<f64>, AutoencError> {
        let xs = self.standardized(data)?;
        let n = xs.len() as f64;
        let mut activity = vec![0.0; self.code_len()];
        for x in &xs {
            for (a, c) in activity.iter_mut().zip(&self.forward_std(x)[2]) {
                *a += c.abs() / n;
            }
        }
        Ok(activity)
    }

    pub fn active_units(&self, data: &[Vec<f64>]) -> Result<Vec<bool>, AutoencError> {
        Ok(self.code_activity(data)?.into_iter().map(|a| a > self.hyper.prune_threshold).collect())
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    fn parameter_mut(&mut self, mut index: usize) -> &mut f64 {
        for layer in &mut self.layers {
            if index < layer.weights.len() {
                return &mut layer.weights[index];
            }
            index -= layer.weights.len();
            if index < layer.biases.len() {
                return &mut layer.biases[index];
            }
            index -= layer.biases.len();
        }
        panic!("parameter index out of range");
    }
}

/// Number of code units whose mean |activation| over `data` exceeds the
/// prune threshold.
pub fn effective_dim(ae: &Autoencoder, data: &[Vec<f64>]) -> Result<usize, AutoencError> {
    Ok(ae.active_units(data)?.into_iter().filter(|&a| a).count())
}

/// Minibatch SGD for `epochs` passes over `data`, shuffled from `seed`.
/// Standardization is refit on `data` first unless `epochs` is zero.
pub fn train(ae: &mut Autoencoder, data: &[Vec<f64>], epochs: usize, seed: u64) -> Result<TrainReport, AutoencError> {
    if epochs > 0 {
        ae.standardized(data)?;
        ae.standardization = Standardization::fit(data);
    }
    let xs = ae.standardized(data)?;
    let initial = ae.loss_std(&xs);
    let mut rng = SeededRng::new(seed);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut trace = Vec::with_capacity(epochs);
    let batch_size = ae.hyper.batch_size.max(1);
    for epoch in 0..epochs {
        rng.shuffle(&mut order);
        for chunk in order.chunks(batch_size) {
            let batch: Vec<Vec<f64>> = chunk.iter().map(|&i| xs[i].clone()).collect();
            let (_, g) = ae.gradients_std(&batch);
            ae.step(&g);
        }
        let loss = ae.loss_std(&xs);
        if !loss.total.is_finite() {
            return Err(AutoencError::Diverged { epoch, loss: loss.total });
        }
        trace.push(loss);
    }
    if epochs > 0 {
        ae.active_mask = ae.active_units(data)?;
    }
    Ok(TrainReport { initial, trace })
}

/// Largest relative difference between the analytic gradient of the total
/// loss on `[x]` and central finite differences with step `1e-5`.
pub fn gradient_check(ae: &Autoencoder, x: &[f64]) -> Result<f64, AutoencError> {
    const EPS: f64 = 1e-5;
    let batch = vec![x.to_vec()];
    let (_, g) = ae.gradients(&batch)?;
    let analytic: Vec<f64> = g.weights.iter().zip(&g.biases).flat_map(|(w, b)| w.iter().chain(b).copied()).collect();
    let mut probe = ae.clone();
    let mut worst = 0.0f64;
    for (i, &a) in analytic.iter().enumerate() {
        let orig = *probe.parameter_mut(i);
        *probe.parameter_mut(i) = orig + EPS;
        let up = probe.loss(&batch)?.total;
        *probe.parameter_mut(i) = orig - EPS;
        let down = probe.loss(&batch)?.total;
        *probe.parameter_mut(i) = orig;
        let numeric = (up - down) / (2.0 * EPS);
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// The fixed recipe for the 10-D embedded plane: 512 points, `10 → 24 → 8`,
/// 200 epochs, everything seeded with 7.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneRecipe {
    pub points: usize,
    pub dim: usize,
    pub hidden: usize,
    pub code: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for PlaneRecipe {
    fn default() -> Self {
        PlaneRecipe { points: 512, dim: 10, hidden: 24, code: 8, epochs: 200, seed: 7 }
    }
}

impl PlaneRecipe {
    pub fn data(&self) -> Vec<Vec<f64>> {
        plane_dataset(self.points, self.dim, self.seed)
    }

    /// Trains a fresh model on [`PlaneRecipe::data`] with the given sparsity weight.
    pub fn run(&self, sparsity: f64) -> Result<(Autoencoder, TrainReport), AutoencError> {
        let hyper = Hyper { sparsity, ..Hyper::default() };
        let mut ae = Autoencoder::new(self.dim, self.hidden, self.code, hyper, &mut SeededRng::new(self.seed));
        let report = train(&mut ae, &self.data(), self.epochs, self.seed)?;
        Ok((ae, report))
    }
}

/// Points `A·u + b` with `u` uniform in `[-1, 1]²`, `A` and `b` drawn once.
pub fn plane_dataset(points: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = SeededRng::new(seed);
    let a: Vec<[f64; 2]> = (0..dim).map(|_| [rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)]).collect();
    let b: Vec<f64> = (0..dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
    (0..points)
        .map(|_| {
            let u = [rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)];
            a.iter().zip(&b).map(|(row, bi)| row[0] * u[0] + row[1] * u[1] + bi).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64, hyper: Hyper) -> Autoencoder {
        Autoencoder::new(4, 5, 3, hyper, &mut SeededRng::new(seed))
    }

    #[test]
    fn zero_weights_give_zero_code_and_bias_output() {
        let mut ae = Autoencoder::zeros(4, 5, 3, Hyper::default());
        ae.layers[3].biases = vec![1.0, 2.0, 3.0, 4.0];
        let code = ae.encode(&[0.3, -0.2, 0.9, 1.0]).unwrap();
        assert_eq!(code.0, vec![0.0; 3]);
        assert_eq!(ae.decode(&code).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let ae = Autoencoder::zeros(4, 5, 3, Hyper::default());
        assert_eq!(ae.encode(&[1.0]), Err(AutoencError::DimensionMismatch { expected: 4, found: 1 }));
        assert!(ae.decode(&Code(vec![0.0; 4])).is_err());
        assert_eq!(ae.loss(&[]), Err(AutoencError::EmptyBatch));
    }

    #[test]
    fn perfect_zero_model_has_zero_loss() {
        let ae = Autoencoder::zeros(4, 5, 3, Hyper::default());
        let loss = ae.loss(&[vec![0.0; 4]]).unwrap();
        assert_eq!(loss.total, 0.0);
    }

    #[test]
    fn unregularized_total_is_reconstruction() {
        let ae = small(3, Hyper { sparsity: 0.0, decay: 0.0, ..Hyper::default() });
        let loss = ae.loss(&[vec![0.1, 0.5, -0.4, 0.2]]).unwrap();
        assert!(loss.reconstruction > 0.0);
        assert_eq!(loss.total, loss.reconstruction);
    }

    #[test]
    fn duplicated_batch_keeps_loss() {
        let ae = small(4, Hyper::default());
        let batch = vec![vec![0.1, 0.5, -0.4, 0.2], vec![-1.0, 0.0, 0.3, 0.7]];
        let doubled: Vec<_> = batch.iter().chain(&batch).cloned().collect();
        let (a, b) = (ae.loss(&batch).unwrap(), ae.loss(&doubled).unwrap());
        assert!((a.total - b.total).abs() < 1e-12);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = SeededRng::new(11);
        for seed in 0..5 {
            let ae = small(seed, Hyper { decay: 0.01, ..Hyper::default() });
            let x: Vec<f64> = (0..4).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let err = gradient_check(&ae, &x).unwrap();
            assert!(err < 1e-4, "seed {seed}: {err}");
        }
    }

    #[test]
    fn zero_input_zero_weights_leave_encoder_gradient_zero() {
        let mut ae = Autoencoder::zeros(4, 5, 3, Hyper { sparsity: 0.0, decay: 0.0, ..Hyper::default() });
        ae.layers[3].biases = vec![0.5; 4];
        let (_, g) = ae.gradients(&[vec![0.0; 4]]).unwrap();
        assert!(g.weights[0].iter().chain(&g.weights[1]).all(|&d| d == 0.0));
    }

    #[test]
    fn decay_gradient_is_exact() {
        let hyper = Hyper { sparsity: 0.0, decay: 0.3, ..Hyper::default() };
        let ae = small(9, hyper);
        let x = vec![vec![0.2, -0.1, 0.4, 0.0]];
        let (_, with) = ae.gradients(&x).unwrap();
        let (_, without) = Autoencoder { hyper: Hyper { decay: 0.0, ..hyper }, ..ae.clone() }.gradients(&x).unwrap();
        for li in 0..4 {
            for ((a, b), w) in with.weights[li].iter().zip(&without.weights[li]).zip(&ae.layers[li].weights) {
                assert!((a - b - 2.0 * 0.3 * w).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_epochs_changes_nothing() {
        let mut ae = small(1, Hyper::default());
        let before = ae.clone();
        let report = train(&mut ae, &plane_dataset(16, 4, 1), 0, 5).unwrap();
        assert!(report.trace.is_empty());
        assert_eq!(ae, before);
    }

    #[test]
    fn training_is_seed_deterministic() {
        let data = plane_dataset(64, 4, 2);
        let run = || {
            let mut ae = small(1, Hyper::default());
            let r = train(&mut ae, &data, 5, 9).unwrap();
            (ae, r)
        };
        let (a, ra) = run();
        let (b, rb) = run();
        assert_eq!(ra, rb);
        assert_eq!(a, b);
    }

    #[test]
    fn untrained_zero_model_has_no_active_units() {
        let ae = Autoencoder::zeros(4, 5, 3, Hyper::default());
        assert_eq!(effective_dim(&ae, &plane_dataset(8, 4, 0)).unwrap(), 0);
    }

    #[test]
    fn repeated_point_needs_no_code() {
        let data = vec![vec![0.7, -0.3, 0.1, 0.9]; 64];
        let mut ae = small(5, Hyper::default());
        train(&mut ae, &data, 100, 1).unwrap();
        assert_eq!(effective_dim(&ae, &data).unwrap(), 0);
    }
}
