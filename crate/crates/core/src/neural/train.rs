use rand::seq::{index, SliceRandom};
use rand::SeedableRng;

use super::{logistic_loss, sigmoid, FofeGrads, FofeNet, Mode, NetInput, TrainConfig, TrainRng};
use crate::error::Result;

/// One question's gold candidate and its competitors.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingItem {
    pub positive: NetInput,
    pub negatives: Vec<NetInput>,
}

/// One question's spans for binary classification. `negatives` are always
/// used; `pool` is subsampled every epoch.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BinaryItem {
    pub positives: Vec<NetInput>,
    pub negatives: Vec<NetInput>,
    pub pool: Vec<NetInput>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub lr: f64,
}

fn run(net: &FofeNet, input: &NetInput, rng: &mut Option<&mut TrainRng>) -> Result<(f64, super::FofeCache)> {
    match rng.as_deref_mut() {
        Some(r) => net.forward(input, Mode::Train(r)),
        None => net.forward(input, Mode::Eval),
    }
}

/// Summed hinge loss of one positive against `negatives`, with gradients.
pub fn rank_step(
    net: &FofeNet,
    positive: &NetInput,
    negatives: &[&NetInput],
    gamma: f64,
    mut rng: Option<&mut TrainRng>,
) -> Result<(f64, FofeGrads)> {
    let mut grads = FofeGrads::zeros_like(net);
    let (pos, pos_cache) = run(net, positive, &mut rng)?;
    let mut loss = 0.0;
    let mut active = 0usize;
    for neg in negatives {
        let (s, cache) = run(net, neg, &mut rng)?;
        let l = super::hinge_rank_loss(pos, s, gamma);
        if l > 0.0 {
            loss += l;
            active += 1;
            net.backward(neg, &cache, 1.0, &mut grads);
        }
    }
    if active > 0 {
        net.backward(positive, &pos_cache, -(active as f64), &mut grads);
    }
    Ok((loss, grads))
}

/// Summed logistic loss over labelled inputs, with gradients.
pub fn binary_step(
    net: &FofeNet,
    examples: &[(&NetInput, bool)],
    mut rng: Option<&mut TrainRng>,
) -> Result<(f64, FofeGrads)> {
    let mut grads = FofeGrads::zeros_like(net);
    let mut loss = 0.0;
    for &(input, label) in examples {
        let (z, cache) = run(net, input, &mut rng)?;
        loss += logistic_loss(z, label);
        let dz = sigmoid(z) - if label { 1.0 } else { 0.0 };
        net.backward(input, &cache, dz, &mut grads);
    }
    Ok((loss, grads))
}

fn sample<'a, T>(items: &'a [T], cap: usize, rng: &mut TrainRng) -> Vec<&'a T> {
    if items.len() <= cap {
        return items.iter().collect();
    }
    let mut picked = index::sample(rng, items.len(), cap).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| &items[i]).collect()
}

/// Pairwise hinge training, one SGD step per question.
pub fn train_ranking(net: &mut FofeNet, items: &[RankingItem], cfg: &TrainConfig) -> Result<Vec<EpochStats>> {
    cfg.validate()?;
    let mut rng = TrainRng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..items.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let lr = cfg.lr_at(epoch);
        let mut total = 0.0;
        for &i in &order {
            let item = &items[i];
            if item.negatives.is_empty() {
                continue;
            }
            let negatives = sample(&item.negatives, cfg.max_negatives, &mut rng);
            let (loss, grads) = rank_step(net, &item.positive, &negatives, cfg.gamma, Some(&mut rng))?;
            if loss > 0.0 {
                net.sgd_step(&grads, lr)?;
            }
            total += loss;
        }
        log::debug!("epoch {epoch}: hinge loss {total:.6} lr {lr:.6}");
        history.push(EpochStats { epoch, loss: total, lr });
    }
    Ok(history)
}

/// Per-span logistic training, one SGD step per question.
pub fn train_binary(
    net: &mut FofeNet,
    items: &[BinaryItem],
    cfg: &TrainConfig,
    pool_samples: usize,
) -> Result<Vec<EpochStats>> {
    cfg.validate()?;
    let mut rng = TrainRng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..items.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let lr = cfg.lr_at(epoch);
        let mut total = 0.0;
        for &i in &order {
            let item = &items[i];
            let mut batch: Vec<(&NetInput, bool)> = item.positives.iter().map(|x| (x, true)).collect();
            batch.extend(item.negatives.iter().map(|x| (x, false)));
            batch.extend(
                sample(&item.pool, pool_samples, &mut rng)
                    .into_iter()
                    .map(|x| (x, false)),
            );
            if batch.is_empty() {
                continue;
            }
            let (loss, grads) = binary_step(net, &batch, Some(&mut rng))?;
            net.sgd_step(&grads, lr)?;
            total += loss;
        }
        log::debug!("epoch {epoch}: logistic loss {total:.6} lr {lr:.6}");
        history.push(EpochStats { epoch, loss: total, lr });
    }
    Ok(history)
}
