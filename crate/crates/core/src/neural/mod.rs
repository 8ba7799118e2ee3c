//! Minimal feedforward network engine.
//!
//! Dense layers with ReLU on every hidden layer, inverted dropout on hidden
//! activations, and a single linear output unit used as a ranking score.
//! Gradients are computed by hand and applied with plain SGD.

mod container;
mod scorer;
mod train;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub use container::{read_container, write_container, ContainerMeta, ModelKind, CONTAINER_VERSION};
pub use scorer::{FofeCache, FofeGrads, FofeNet, NetInput};
pub use train::{binary_step, rank_step, train_binary, train_ranking, BinaryItem, EpochStats, RankingItem};

/// Random source used for dropout masks and sampling during training.
pub type TrainRng = ChaCha8Rng;

/// Forward-pass mode. Dropout masks are drawn from the rng in train mode.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut TrainRng),
}

/// Fully connected layer, weights row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Uniform in `+-sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn random<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = (6.0 / (inputs + outputs) as f64).sqrt();
        Dense {
            inputs,
            outputs,
            weights: (0..inputs * outputs).map(|_| rng.gen_range(-bound..bound)).collect(),
            bias: vec![0.0; outputs],
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }
}

/// Feedforward scorer with a scalar output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
    dropout: f64,
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    // Input to each layer (after activation and dropout of the previous one).
    inputs: Vec<Vec<f64>>,
    // Pre-activation of each hidden layer.
    pre: Vec<Vec<f64>>,
    // Inverted-dropout multipliers per hidden layer; `None` in eval mode.
    masks: Vec<Option<Vec<f64>>>,
}

impl ForwardCache {
    /// Smallest |pre-activation| over all hidden units. Finite-difference
    /// checks use it to stay clear of ReLU kinks.
    pub fn min_abs_preactivation(&self) -> f64 {
        self.pre.iter().flatten().fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }
}

/// Parameter gradients shaped like an [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl MlpGrads {
    pub fn zeros_like(net: &Mlp) -> Self {
        MlpGrads {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            bias: net.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights.iter().chain(&self.bias).flat_map(|v| v.iter().copied())
    }

    pub fn is_zero(&self) -> bool {
        self.values().all(|g| g == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(f64::is_finite)
    }
}

impl Mlp {
    /// Random network `input_dim -> hidden.. -> 1`.
    pub fn new<R: Rng>(input_dim: usize, hidden: &[usize], dropout: f64, rng: &mut R) -> Result<Self> {
        check_dropout(dropout)?;
        let mut dims = vec![input_dim];
        dims.extend_from_slice(hidden);
        dims.push(1);
        if dims.contains(&0) {
            return Err(Error::InvalidParameter("layer sizes must be positive".into()));
        }
        let layers = dims.windows(2).map(|w| Dense::random(w[0], w[1], rng)).collect();
        Ok(Mlp { layers, dropout })
    }

    pub fn from_layers(layers: Vec<Dense>, dropout: f64) -> Result<Self> {
        check_dropout(dropout)?;
        let last = layers
            .last()
            .ok_or_else(|| Error::InvalidParameter("network needs at least one layer".into()))?;
        if last.outputs != 1 {
            return Err(Error::InvalidParameter("final layer must have one output".into()));
        }
        for l in &layers {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::InvalidParameter("layer parameter shape mismatch".into()));
            }
        }
        if layers.windows(2).any(|w| w[0].outputs != w[1].inputs) {
            return Err(Error::InvalidParameter("layer dimensions do not chain".into()));
        }
        Ok(Mlp { layers, dropout })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn dropout(&self) -> f64 {
        self.dropout
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Evaluation-mode score.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        Ok(self.forward(x, Mode::Eval)?.0)
    }

    pub fn forward(&self, x: &[f64], mut mode: Mode<'_>) -> Result<(f64, ForwardCache)> {
        if x.len() != self.input_dim() {
            return Err(Error::InvalidParameter(format!(
                "input has {} features, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        let hidden = self.layers.len() - 1;
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(hidden),
            masks: Vec::with_capacity(hidden),
        };
        let mut h = x.to_vec();
        for layer in &self.layers[..hidden] {
            let a = layer.apply(&h);
            let mut next: Vec<f64> = a.iter().map(|&v| v.max(0.0)).collect();
            let mask = match &mut mode {
                Mode::Train(rng) if self.dropout > 0.0 => {
                    let keep = 1.0 - self.dropout;
                    let m: Vec<f64> = (0..next.len())
                        .map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
                        .collect();
                    for (v, k) in next.iter_mut().zip(&m) {
                        *v *= k;
                    }
                    Some(m)
                }
                _ => None,
            };
            cache.inputs.push(std::mem::replace(&mut h, next));
            cache.pre.push(a);
            cache.masks.push(mask);
        }
        let out = self.layers[hidden].apply(&h)[0];
        cache.inputs.push(h);
        Ok((out, cache))
    }

    /// Accumulates `dscore * d(score)/d(params)` into `grads` and returns
    /// `dscore * d(score)/d(input)`.
    pub fn backward(&self, cache: &ForwardCache, dscore: f64, grads: &mut MlpGrads) -> Vec<f64> {
        let mut g = vec![dscore];
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let h = &cache.inputs[l];
            for (o, &go) in g.iter().enumerate() {
                if go == 0.0 {
                    continue;
                }
                let row = &mut grads.weights[l][o * layer.inputs..(o + 1) * layer.inputs];
                for (w, &hv) in row.iter_mut().zip(h) {
                    *w += go * hv;
                }
                grads.bias[l][o] += go;
            }
            let mut dh = vec![0.0; layer.inputs];
            for (o, &go) in g.iter().enumerate() {
                if go == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (d, &w) in dh.iter_mut().zip(row) {
                    *d += go * w;
                }
            }
            if l > 0 {
                if let Some(mask) = &cache.masks[l - 1] {
                    for (d, m) in dh.iter_mut().zip(mask) {
                        *d *= m;
                    }
                }
                for (d, &a) in dh.iter_mut().zip(&cache.pre[l - 1]) {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            g = dh;
        }
        g
    }

    /// `theta <- theta - lr * grad`. Leaves the network untouched and fails if
    /// any gradient is not finite.
    pub fn sgd_step(&mut self, grads: &MlpGrads, lr: f64) -> Result<()> {
        if !grads.is_finite() {
            return Err(Error::TrainingDiverged("non-finite gradient".into()));
        }
        if grads.weights.len() != self.layers.len()
            || self
                .layers
                .iter()
                .zip(&grads.weights)
                .any(|(l, g)| l.weights.len() != g.len())
        {
            return Err(Error::InvalidParameter("gradient shape mismatch".into()));
        }
        for ((layer, gw), gb) in self.layers.iter_mut().zip(&grads.weights).zip(&grads.bias) {
            for (w, g) in layer.weights.iter_mut().zip(gw) {
                *w -= lr * g;
            }
            for (b, g) in layer.bias.iter_mut().zip(gb) {
                *b -= lr * g;
            }
        }
        Ok(())
    }
}

fn check_dropout(rate: f64) -> Result<()> {
    if (0.0..1.0).contains(&rate) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "dropout rate must lie in [0, 1), got {rate}"
        )))
    }
}

/// `max(0, gamma + neg - pos)`.
pub fn hinge_rank_loss(pos_score: f64, neg_score: f64, gamma: f64) -> f64 {
    (gamma + neg_score - pos_score).max(0.0)
}

/// Training hyperparameters for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    /// Multiplicative learning-rate decay applied once per epoch.
    pub lr_decay: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Cap on negatives scored per question per epoch.
    pub max_negatives: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            gamma: 0.1,
            learning_rate: 0.01,
            lr_decay: 0.95,
            epochs: 30,
            seed: 0,
            max_negatives: 50,
        }
    }
}

impl TrainConfig {
    // Negated comparisons so that NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidParameter("margin gamma must be positive".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidParameter("learning rate must be positive".into()));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::InvalidParameter("lr decay must lie in (0, 1]".into()));
        }
        if self.max_negatives == 0 {
            return Err(Error::InvalidParameter("max_negatives must be positive".into()));
        }
        Ok(())
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        self.learning_rate * self.lr_decay.powi(epoch as i32)
    }
}

/// One positive feature vector with its negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingBatch {
    pub positive: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// Summed hinge loss of `batch` and its parameter gradient.
///
/// Negatives whose margin is already satisfied contribute nothing. With an
/// rng, dropout masks are drawn in the order positive, then negatives.
pub fn backward(
    net: &Mlp,
    batch: &RankingBatch,
    cfg: &TrainConfig,
    rng: Option<&mut TrainRng>,
) -> Result<(f64, MlpGrads)> {
    let mut grads = MlpGrads::zeros_like(net);
    let mut rng = rng;
    let mut run = |x: &[f64]| match rng.as_deref_mut() {
        Some(r) => net.forward(x, Mode::Train(r)),
        None => net.forward(x, Mode::Eval),
    };
    let (pos, pos_cache) = run(&batch.positive)?;
    let mut loss = 0.0;
    let mut active = 0usize;
    for neg in &batch.negatives {
        let (s, cache) = run(neg)?;
        let l = hinge_rank_loss(pos, s, cfg.gamma);
        if l > 0.0 {
            loss += l;
            active += 1;
            net.backward(&cache, 1.0, &mut grads);
        }
    }
    if active > 0 {
        net.backward(&pos_cache, -(active as f64), &mut grads);
    }
    Ok((loss, grads))
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy on a logit, computed stably.
pub fn logistic_loss(logit: f64, positive: bool) -> f64 {
    let y = if positive { 1.0 } else { 0.0 };
    logit.max(0.0) - logit * y + (-logit.abs()).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> TrainRng {
        TrainRng::seed_from_u64(seed)
    }

    #[test]
    fn zero_network_scores_zero() {
        let net = Mlp::from_layers(vec![Dense::zeros(3, 4), Dense::zeros(4, 1)], 0.0).unwrap();
        assert_eq!(net.score(&[1.0, -2.0, 5.0]).unwrap(), 0.0);
    }

    #[test]
    fn affine_identity() {
        let layer = Dense {
            inputs: 1,
            outputs: 1,
            weights: vec![1.0],
            bias: vec![0.0],
        };
        let net = Mlp::from_layers(vec![layer], 0.0).unwrap();
        assert_eq!(net.score(&[2.5]).unwrap(), 2.5);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let net = Mlp::new(3, &[4], 0.0, &mut rng(1)).unwrap();
        assert!(matches!(net.score(&[1.0]), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn layers_must_chain() {
        assert!(Mlp::from_layers(vec![Dense::zeros(3, 4), Dense::zeros(5, 1)], 0.0).is_err());
        assert!(Mlp::from_layers(vec![Dense::zeros(3, 2)], 0.0).is_err());
        assert!(Mlp::from_layers(vec![Dense::zeros(3, 1)], 1.0).is_err());
    }

    #[test]
    fn train_mode_is_deterministic_per_rng_state() {
        let net = Mlp::new(5, &[16, 16], 0.5, &mut rng(2)).unwrap();
        let x = [0.3, -1.0, 0.5, 2.0, 0.1];
        let a = net.forward(&x, Mode::Train(&mut rng(9))).unwrap().0;
        let b = net.forward(&x, Mode::Train(&mut rng(9))).unwrap().0;
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn hinge_examples() {
        assert_eq!(hinge_rank_loss(0.5, 0.2, 0.1), 0.0);
        assert!((hinge_rank_loss(0.3, 0.3, 0.1) - 0.1).abs() < 1e-15);
        assert!((hinge_rank_loss(0.0, 0.4, 0.1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn satisfied_margins_give_zero_gradient() {
        let layer = Dense {
            inputs: 1,
            outputs: 1,
            weights: vec![1.0],
            bias: vec![0.0],
        };
        let net = Mlp::from_layers(vec![layer], 0.0).unwrap();
        let batch = RankingBatch {
            positive: vec![1.0],
            negatives: vec![vec![0.5], vec![-3.0]],
        };
        let (loss, grads) = backward(&net, &batch, &TrainConfig::default(), None).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grads.is_zero());
    }

    #[test]
    fn duplicated_negative_doubles_gradient() {
        let net = Mlp::new(4, &[8], 0.0, &mut rng(3)).unwrap();
        let pos = vec![0.1, 0.2, 0.3, 0.4];
        let neg = vec![1.0, -0.5, 0.7, 2.0];
        let cfg = TrainConfig {
            gamma: 100.0,
            ..TrainConfig::default()
        };
        let one = RankingBatch {
            positive: pos.clone(),
            negatives: vec![neg.clone()],
        };
        let two = RankingBatch {
            positive: pos,
            negatives: vec![neg.clone(), neg],
        };
        let (_, g1) = backward(&net, &one, &cfg, None).unwrap();
        let (_, g2) = backward(&net, &two, &cfg, None).unwrap();
        for (a, b) in g1.values().zip(g2.values()) {
            assert!((2.0 * a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn sgd_no_op_cases() {
        let mut net = Mlp::new(3, &[4], 0.0, &mut rng(4)).unwrap();
        let before = net.clone();
        let zero = MlpGrads::zeros_like(&net);
        net.sgd_step(&zero, 0.1).unwrap();
        assert_eq!(net, before);
        let mut ones = MlpGrads::zeros_like(&net);
        ones.weights.iter_mut().flatten().for_each(|g| *g = 1.0);
        net.sgd_step(&ones, 0.0).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn sgd_rejects_non_finite() {
        let mut net = Mlp::new(2, &[], 0.0, &mut rng(5)).unwrap();
        let before = net.clone();
        let mut g = MlpGrads::zeros_like(&net);
        g.weights[0][0] = f64::NAN;
        assert!(matches!(net.sgd_step(&g, 0.1), Err(Error::TrainingDiverged(_))));
        assert_eq!(net, before);
    }

    #[test]
    fn sgd_step_on_quadratic_moves_toward_minimum() {
        // f(w) = (w - 3)^2 on a 1x1 net scoring x = 1 with zero bias:
        // score = w, df/dw = 2 (w - 3). One step from w = 0 with lr 0.1 lands
        // at 0.6, closing 20% of the gap.
        let layer = Dense {
            inputs: 1,
            outputs: 1,
            weights: vec![0.0],
            bias: vec![0.0],
        };
        let mut net = Mlp::from_layers(vec![layer], 0.0).unwrap();
        let (w, cache) = net.forward(&[1.0], Mode::Eval).unwrap();
        let mut g = MlpGrads::zeros_like(&net);
        net.backward(&cache, 2.0 * (w - 3.0), &mut g);
        g.bias[0][0] = 0.0;
        net.sgd_step(&g, 0.1).unwrap();
        let w1 = net.layers()[0].weights[0];
        assert!((w1 - 0.6).abs() < 1e-15);
        assert!((w1 - 3.0).abs() < 3.0);
    }

    #[test]
    fn logistic_loss_matches_naive_form() {
        for z in [-3.0, -0.1, 0.0, 0.7, 4.0] {
            let p = sigmoid(z);
            assert!((logistic_loss(z, true) + p.ln()).abs() < 1e-12);
            assert!((logistic_loss(z, false) + (1.0 - p).ln()).abs() < 1e-12);
        }
        assert_eq!(sigmoid(0.0), 0.5);
    }

    #[test]
    fn lr_schedule_decays() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.lr_at(0), 0.01);
        assert!((cfg.lr_at(2) - 0.01 * 0.95 * 0.95).abs() < 1e-18);
    }
}
