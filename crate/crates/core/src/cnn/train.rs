//! Training loop: seeded shuffling, upfront augmentation, mini-batch
//! ADAM on the class-weighted binary cross-entropy.

use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, OptimizerState};
use super::augment::{augment, AugmentRanges};
use super::layers::LayerSpec;
use super::loss::weighted_bce;
use super::model::{Class, CnnModel};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::imaging::GrayImage;
use crate::seeds;

pub const HYPERPARAMS_SCHEMA: &str = "contamdet/hyperparams/v1";

/// Everything that determines a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub layers: Vec<LayerSpec>,
    /// ADAM learning rate.
    pub alpha: f64,
    /// ADAM momentum (first-moment decay).
    pub mu: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// (w_FC, w_TC) multipliers in the loss.
    pub class_weights: (f64, f64),
    /// Synthetic copies created per training image.
    pub augment_copies: usize,
    #[serde(default)]
    pub augment: AugmentRanges,
    pub seed: u64,
}

impl Hyperparams {
    /// Reference architecture: three conv/relu/pool blocks, one dense
    /// hidden layer with dropout, sigmoid output.
    pub fn reference(seed: u64) -> Self {
        Self {
            layers: vec![
                LayerSpec::Conv { filters: 16, kernel: 3 },
                LayerSpec::Relu,
                LayerSpec::MaxPool { window: 2 },
                LayerSpec::Conv { filters: 32, kernel: 3 },
                LayerSpec::Relu,
                LayerSpec::MaxPool { window: 2 },
                LayerSpec::Conv { filters: 64, kernel: 3 },
                LayerSpec::Relu,
                LayerSpec::MaxPool { window: 2 },
                LayerSpec::Dense { units: 64 },
                LayerSpec::Relu,
                LayerSpec::Dropout { rate: 0.5 },
                LayerSpec::Dense { units: 1 },
                LayerSpec::Sigmoid,
            ],
            alpha: 1e-3,
            mu: 0.9,
            batch_size: 32,
            epochs: 10,
            class_weights: (1.0, 2.0),
            augment_copies: 3,
            augment: AugmentRanges::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha <= 0.0 {
            return Err(Error::InvalidInput("alpha must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.mu) {
            return Err(Error::InvalidInput("mu must lie in [0, 1)".into()));
        }
        if self.batch_size < 1 || self.epochs < 1 {
            return Err(Error::InvalidInput("batch size and epochs must be >= 1".into()));
        }
        if self.class_weights.0 <= 0.0 || self.class_weights.1 <= 0.0 {
            return Err(Error::InvalidInput("class weights must be positive".into()));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        #[derive(Serialize)]
        struct Wrapper<'a> {
            schema: &'a str,
            #[serde(flatten)]
            hp: &'a Hyperparams,
        }
        let json =
            serde_json::to_vec_pretty(&Wrapper { schema: HYPERPARAMS_SCHEMA, hp: self })?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let value: serde_json::Value = serde_json::from_slice(&bytes)?;
        if let Some(schema) = value.get("schema").and_then(|v| v.as_str()) {
            if schema != HYPERPARAMS_SCHEMA {
                return Err(Error::Schema {
                    expected: HYPERPARAMS_SCHEMA.into(),
                    found: schema.into(),
                });
            }
        }
        Ok(serde_json::from_value(value)?)
    }
}

/// A labeled crop.
#[derive(Clone, Debug)]
pub struct TrainSample {
    pub image: GrayImage,
    pub label: Class,
}

pub struct TrainOutcome {
    pub model: CnnModel,
    /// Mean training loss per epoch.
    pub loss_trace: Vec<f64>,
}

/// Train a network on labeled crops. The dataset must contain both
/// classes; all randomness is derived from `hp.seed`.
pub fn train(samples: &[TrainSample], hp: &Hyperparams) -> Result<TrainOutcome> {
    hp.validate()?;
    if samples.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    let has_tc = samples.iter().any(|s| s.label == Class::Tc);
    let has_fc = samples.iter().any(|s| s.label == Class::Fc);
    if !has_tc || !has_fc {
        return Err(Error::Data("training set must contain both TC and FC samples".into()));
    }
    let h = samples[0].image.height();
    let w = samples[0].image.width();
    if samples.iter().any(|s| s.image.height() != h || s.image.width() != w) {
        return Err(Error::Data("training crops have inconsistent dimensions".into()));
    }

    // Independent derived streams: initialization, epoch shuffling,
    // per-image augmentation, per-forward dropout.
    let mut init_rng = seeds::rng(hp.seed, 0);
    let mut epoch_rng = seeds::rng(hp.seed, 1);
    let aug_seed = seeds::derive(hp.seed, 2);
    let drop_seed = seeds::derive(hp.seed, 3);

    let mut model = CnnModel::new(hp.layers.clone(), (1, h, w), &mut init_rng)?;

    // Upfront augmentation: each image contributes itself plus
    // `augment_copies` transformed copies.
    let mut expanded: Vec<(Tensor, Class)> =
        Vec::with_capacity(samples.len() * (1 + hp.augment_copies));
    for (i, sample) in samples.iter().enumerate() {
        expanded.push((model.tensor_from_image(&sample.image)?, sample.label));
        let mut aug_rng = seeds::rng(aug_seed, i as u64);
        for _ in 0..hp.augment_copies {
            let copy = augment(&sample.image, &mut aug_rng, &hp.augment);
            expanded.push((model.tensor_from_image(&copy)?, sample.label));
        }
    }

    let mut state = OptimizerState::new(&model.param_sizes());
    let mut order: Vec<usize> = (0..expanded.len()).collect();
    let mut dropout_seq = 0u64;
    let mut loss_trace = Vec::with_capacity(hp.epochs);

    for epoch in 0..hp.epochs {
        order.shuffle(&mut epoch_rng);
        let mut epoch_loss = 0.0;
        for (batch_idx, batch) in order.chunks(hp.batch_size).enumerate() {
            let scale = 1.0 / batch.len() as f64;
            // Per-sample passes are independent given pre-assigned
            // dropout streams; losses and gradients join in batch order,
            // so the update is identical for any thread count.
            let seq_base = dropout_seq;
            dropout_seq += batch.len() as u64;
            let passes: Vec<(f64, super::model::Gradients)> = batch
                .par_iter()
                .enumerate()
                .map(|(j, &si)| {
                    let (x, label) = &expanded[si];
                    let mut drop_rng = seeds::rng(drop_seed, seq_base + j as u64);
                    let (p, cache) = model.forward(x, true, Some(&mut drop_rng))?;
                    let (loss, dloss_dp) = weighted_bce(p, *label, hp.class_weights);
                    let grads = model.backward(&cache, dloss_dp)?;
                    Ok((loss, grads))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut batch_loss = 0.0;
            let mut acc = None;
            for (loss, grads) in passes {
                batch_loss += loss;
                match &mut acc {
                    None => acc = Some(grads),
                    Some(a) => a.add_assign(&grads),
                }
            }
            batch_loss *= scale;
            if !batch_loss.is_finite() {
                return Err(Error::Divergence { epoch, batch: batch_idx });
            }
            let mut grads = acc.expect("non-empty batch");
            grads.scale(scale);
            let grad_slices = grads.param_slices();
            let mut param_slices = model.param_slices_mut();
            adam_step(&mut param_slices, &grad_slices, &mut state, hp.alpha, hp.mu);
            epoch_loss += batch_loss * batch.len() as f64;
        }
        loss_trace.push(epoch_loss / expanded.len() as f64);
    }

    model.hyperparams = Some(hp.clone());
    Ok(TrainOutcome { model, loss_trace })
}

/// Read a crop dataset manifest: CSV with `path,label` rows, paths
/// relative to the manifest's directory.
pub fn load_manifest(manifest: &Path) -> Result<Vec<TrainSample>> {
    let base = manifest.parent().unwrap_or_else(|| Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(manifest)
        .map_err(|e| Error::Data(format!("manifest {}: {e}", manifest.display())))?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Data(format!("manifest row: {e}")))?;
        if record.len() < 2 {
            return Err(Error::Data("manifest rows need path,label".into()));
        }
        let path = base.join(&record[0]);
        let image = crate::imaging::load_image(&path)?;
        let label = Class::parse(&record[1])?;
        out.push(TrainSample { image, label });
    }
    if out.is_empty() {
        return Err(Error::Data(format!("manifest {} lists no crops", manifest.display())));
    }
    Ok(out)
}

/// Write a loss trace CSV (`epoch,loss`).
pub fn write_loss_trace(trace: &[f64], path: &Path) -> Result<()> {
    let mut out = String::from("epoch,loss\n");
    for (i, loss) in trace.iter().enumerate() {
        out.push_str(&format!("{i},{loss}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}
