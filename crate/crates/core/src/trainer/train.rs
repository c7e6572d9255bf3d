use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{Adam, AdamConfig};
use super::net::{NetSpec, ResNet};
use super::tensor::{InputScaling, Tensor};
use crate::dataset::ImageDataset;
use crate::error::{Error, Result};
use crate::planner::{ArchPlan, Family};
use crate::SCHEMA_VERSION;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: AdamConfig,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Share of the shuffled training set used for fitting; the rest validates.
    pub train_fraction: f64,
    /// Standardise inputs with the fitting split's pixel mean and deviation.
    pub standardize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: AdamConfig::default(),
            batch_size: 128,
            epochs: 5,
            seed: 0,
            train_fraction: 0.8,
            standardize: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let lr = self.optimizer.learning_rate;
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {lr}"
            )));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub family: Family,
    pub depth: u32,
    pub n_blocks: u32,
    pub width: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub model: ModelSummary,
    pub seed: u64,
    pub train_images: usize,
    pub validation_images: usize,
    pub test_images: usize,
    /// Percent.
    pub final_test_accuracy: f64,
    /// Validation accuracy (percent) after each epoch.
    pub epoch_accuracies: Vec<f64>,
    /// Mean training loss over each epoch's batches.
    pub epoch_losses: Vec<f64>,
    /// Monotonic time spent in the epoch loop, rounded up to whole ms.
    pub wall_time_ms: u64,
    pub param_count: usize,
    pub input_scaling: InputScaling,
}

/// Percentage of `indices` in `ds` that `net` classifies correctly.
pub fn accuracy(
    net: &ResNet,
    ds: &ImageDataset,
    indices: &[usize],
    scaling: InputScaling,
) -> Result<f64> {
    if indices.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for &i in indices {
        let mut x = Tensor::from_images(ds, &[i])?;
        x.standardize(scaling);
        let logits = net.forward_sample(x.item(0))?.logits;
        let pred = argmax(&logits);
        if pred == ds.labels[i] {
            correct += 1;
        }
    }
    Ok(100.0 * correct as f64 / indices.len() as f64)
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Trains a ResNet described by `plan` on `train_ds` and reports accuracy on
/// `test_ds`.
pub fn train(
    plan: &ArchPlan,
    train_ds: &ImageDataset,
    test_ds: &ImageDataset,
    cfg: &TrainConfig,
) -> Result<RunRecord> {
    cfg.validate()?;
    if plan.family != Family::ResNet {
        return Err(Error::Config(format!(
            "only ResNet is trainable, got {}",
            plan.family
        )));
    }
    let width = plan
        .breadth
        .ok_or_else(|| Error::Config("plan has no breadth".into()))?;
    let shape = train_ds
        .shape()
        .ok_or_else(|| Error::Config("training set is empty".into()))?;
    if test_ds.shape().is_some_and(|s| s != shape) {
        return Err(Error::Config(format!(
            "test images {:?} differ from training images {shape:?}",
            test_ds.shape()
        )));
    }
    let classes = train_ds.num_classes.max(test_ds.num_classes);
    let spec = NetSpec::resnet(plan.depth, width, shape, classes);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = ResNet::init_with(spec, &mut rng)?;

    let mut order: Vec<usize> = (0..train_ds.len()).collect();
    order.shuffle(&mut rng);
    let n_fit = ((train_ds.len() as f64) * cfg.train_fraction).round() as usize;
    let n_fit = n_fit.clamp(1, train_ds.len());
    let (fit, validation) = order.split_at(n_fit);
    let mut fit = fit.to_vec();
    let validation = validation.to_vec();

    let scaling = if cfg.standardize {
        InputScaling::fit(train_ds, &fit)
    } else {
        InputScaling::IDENTITY
    };

    let mut opt = Adam::new(cfg.optimizer, net.param_count());
    let mut epoch_accuracies = Vec::with_capacity(cfg.epochs);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let start = Instant::now();
    for epoch in 0..cfg.epochs {
        fit.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in fit.chunks(cfg.batch_size) {
            let mut x = Tensor::from_images(train_ds, batch)?;
            x.standardize(scaling);
            let labels: Vec<usize> = batch.iter().map(|&i| train_ds.labels[i]).collect();
            let (loss, grads) = net.loss_and_grad(&x, &labels)?;
            if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::Training {
                    epoch,
                    detail: format!("non-finite loss {loss} after {} steps", opt.steps()),
                });
            }
            total += loss * batch.len() as f64;
            opt.update(&mut net.params, &grads);
        }
        epoch_losses.push(total / fit.len() as f64);
        epoch_accuracies.push(accuracy(&net, train_ds, &validation, scaling)?);
    }
    let elapsed = start.elapsed();
    let wall_time_ms = (elapsed.as_micros().div_ceil(1000) as u64).max(1);

    let test_indices: Vec<usize> = (0..test_ds.len()).collect();
    let final_test_accuracy = accuracy(&net, test_ds, &test_indices, scaling)?;
    Ok(RunRecord {
        schema_version: SCHEMA_VERSION,
        model: ModelSummary {
            family: plan.family,
            depth: plan.depth,
            n_blocks: plan.n_blocks,
            width,
        },
        seed: cfg.seed,
        train_images: fit.len(),
        validation_images: validation.len(),
        test_images: test_ds.len(),
        final_test_accuracy,
        epoch_accuracies,
        epoch_losses,
        wall_time_ms,
        param_count: net.param_count(),
        input_scaling: scaling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synth_dataset, ClassSpec, SynthSpec};
    use std::collections::BTreeMap;

    /// Two classes: mostly dark pixels versus mostly bright pixels.
    fn learnable(n_per_class: usize, seed: u64) -> ImageDataset {
        let spec = SynthSpec {
            height: 6,
            width: 6,
            channels: 1,
            classes: vec![
                ClassSpec {
                    distribution: BTreeMap::from([(20, 0.9), (200, 0.1)]),
                },
                ClassSpec {
                    distribution: BTreeMap::from([(20, 0.1), (200, 0.9)]),
                },
            ],
        };
        synth_dataset(&spec, n_per_class, seed).unwrap()
    }

    fn plan(depth_blocks: u32, width: u32) -> ArchPlan {
        ArchPlan::for_blocks(Family::ResNet, depth_blocks).with_breadth(width)
    }

    fn cfg(epochs: usize, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs,
            seed,
            batch_size: 16,
            optimizer: AdamConfig {
                learning_rate: 3e-3,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn defaults_follow_protocol() {
        let c = TrainConfig::default();
        assert_eq!(c.batch_size, 128);
        assert_eq!(c.optimizer, AdamConfig::default());
        assert_eq!(c.train_fraction, 0.8);
    }

    #[test]
    fn loss_decreases_between_epochs() {
        let train_ds = learnable(40, 1);
        let test_ds = learnable(20, 2);
        let rec = train(&plan(1, 4), &train_ds, &test_ds, &cfg(6, 3)).unwrap();
        assert_eq!(rec.epoch_losses.len(), 6);
        for w in rec.epoch_losses.windows(2) {
            assert!(w[1] < w[0], "{:?}", rec.epoch_losses);
        }
        assert!(rec.final_test_accuracy > 90.0, "{rec:?}");
        assert_eq!(
            (rec.train_images, rec.validation_images, rec.test_images),
            (64, 16, 40)
        );
    }

    #[test]
    fn zero_epochs_is_the_untrained_net() {
        let train_ds = learnable(10, 1);
        let test_ds = learnable(10, 2);
        let c = cfg(0, 5);
        let rec = train(&plan(1, 3), &train_ds, &test_ds, &c).unwrap();
        assert!(rec.epoch_accuracies.is_empty());
        let spec = NetSpec::resnet(8, 3, (6, 6, 1), 2);
        let net = ResNet::init_with(spec, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let all: Vec<usize> = (0..test_ds.len()).collect();
        assert_eq!(
            rec.final_test_accuracy,
            accuracy(&net, &test_ds, &all, rec.input_scaling).unwrap()
        );
        assert!(rec.wall_time_ms >= 1);
    }

    #[test]
    fn same_seed_same_record() {
        let train_ds = learnable(20, 1);
        let test_ds = learnable(10, 2);
        let a = train(&plan(1, 3), &train_ds, &test_ds, &cfg(2, 7)).unwrap();
        let b = train(&plan(1, 3), &train_ds, &test_ds, &cfg(2, 7)).unwrap();
        assert_eq!(a.epoch_accuracies, b.epoch_accuracies);
        assert_eq!(a.epoch_losses, b.epoch_losses);
        assert_eq!(a.final_test_accuracy, b.final_test_accuracy);
        let c = train(&plan(1, 3), &train_ds, &test_ds, &cfg(2, 8)).unwrap();
        assert_ne!(a.epoch_losses, c.epoch_losses);
    }

    #[test]
    fn rejects_bad_configs() {
        let ds = learnable(5, 1);
        let mut c = cfg(1, 0);
        c.train_fraction = 1.0;
        assert!(matches!(
            train(&plan(1, 2), &ds, &ds, &c),
            Err(Error::Config(_))
        ));
        c = cfg(1, 0);
        c.optimizer.learning_rate = 0.0;
        assert!(matches!(
            train(&plan(1, 2), &ds, &ds, &c),
            Err(Error::Config(_))
        ));
        let dense = ArchPlan::for_blocks(Family::DenseNet, 1).with_breadth(12);
        assert!(matches!(
            train(&dense, &ds, &ds, &cfg(1, 0)),
            Err(Error::Config(_))
        ));
        let no_width = ArchPlan::for_blocks(Family::ResNet, 1);
        assert!(matches!(
            train(&no_width, &ds, &ds, &cfg(1, 0)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn divergence_reports_epoch() {
        let ds = learnable(10, 1);
        let mut c = cfg(3, 0);
        c.optimizer.learning_rate = 1e300;
        match train(&plan(1, 2), &ds, &ds, &c) {
            Err(Error::Training { epoch, .. }) => assert!(epoch < 3),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn record_round_trips_through_json() {
        let ds = learnable(5, 1);
        let rec = train(&plan(1, 2), &ds, &ds, &cfg(1, 0)).unwrap();
        let json = serde_json::to_string(&rec).unwrap();
        assert_eq!(serde_json::from_str::<RunRecord>(&json).unwrap(), rec);
        assert!(json.contains("\"schema_version\":1"));
    }
}
