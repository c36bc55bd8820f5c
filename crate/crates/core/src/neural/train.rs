use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::{AdamState, DEFAULT_LR};
use super::deeponet::OperatorModel;
use super::loss::{loss_mad_grad, loss_pinn_grad, MadBatch, PinnBatch, DEFAULT_WEIGHTS};
use crate::dataset::Dataset;
use crate::error::{MadError, Result};
use crate::geometry::Domain;
use crate::rng::{derive_seed, rng_from_seed, stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Mad,
    Pinn,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Mad => "mad",
            LossKind::Pinn => "pinn",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = MadError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mad" => Ok(LossKind::Mad),
            "pinn" => Ok(LossKind::Pinn),
            _ => Err(MadError::invalid(format!("unknown loss '{s}' (mad|pinn)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    /// `None` trains on the full set each epoch.
    pub batch_size: Option<usize>,
    pub weights: (f64, f64),
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10_000,
            lr: DEFAULT_LR,
            seed: 0,
            batch_size: None,
            weights: DEFAULT_WEIGHTS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub loss: LossKind,
    pub epochs: usize,
    /// Mean batch loss per epoch, measured before each update.
    pub history: Vec<f64>,
    pub wall_time: f64,
}

impl TrainReport {
    pub fn final_loss(&self) -> Option<f64> {
        self.history.last().copied()
    }
}

enum Batch {
    Mad(MadBatch),
    Pinn(PinnBatch),
}

impl Batch {
    fn len(&self) -> usize {
        match self {
            Batch::Mad(b) => b.len(),
            Batch::Pinn(b) => b.len(),
        }
    }

    fn grad(&self, model: &OperatorModel, idx: Option<&[usize]>) -> Result<(f64, Vec<Vec<f64>>)> {
        match (self, idx) {
            (Batch::Mad(b), None) => loss_mad_grad(model, b),
            (Batch::Mad(b), Some(i)) => loss_mad_grad(model, &b.select(i)),
            (Batch::Pinn(b), None) => loss_pinn_grad(model, b),
            (Batch::Pinn(b), Some(i)) => loss_pinn_grad(model, &b.select(i)),
        }
    }
}

pub fn train(model: &mut OperatorModel, ds: &Dataset, d: &Domain, loss: LossKind, cfg: &TrainConfig) -> Result<TrainReport> {
    let batch = match loss {
        LossKind::Mad => Batch::Mad(MadBatch::from_dataset(ds, d)?),
        LossKind::Pinn => Batch::Pinn(PinnBatch::from_dataset(ds, d, cfg.weights)?),
    };
    if ds.meta.has_f && !model.is_dual() {
        return Err(MadError::invalid("dataset carries a source; train the dual architecture"));
    }
    train_batch(model, &batch, loss, cfg)
}

pub fn train_mad(model: &mut OperatorModel, b: &MadBatch, cfg: &TrainConfig) -> Result<TrainReport> {
    train_batch(model, &Batch::Mad(b.clone()), LossKind::Mad, cfg)
}

pub fn train_pinn(model: &mut OperatorModel, b: &PinnBatch, cfg: &TrainConfig) -> Result<TrainReport> {
    train_batch(model, &Batch::Pinn(b.clone()), LossKind::Pinn, cfg)
}

fn train_batch(model: &mut OperatorModel, batch: &Batch, loss: LossKind, cfg: &TrainConfig) -> Result<TrainReport> {
    if cfg.batch_size == Some(0) {
        return Err(MadError::invalid("batch size must be >= 1"));
    }
    let start = Instant::now();
    let sizes: Vec<usize> = model.nets().iter().map(|n| n.param_count()).collect();
    let mut adam = AdamState::new(&sizes, cfg.lr)?;
    let n = batch.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng_from_seed(derive_seed(cfg.seed, stream::SHUFFLE, 0));
    let mut history = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        let epoch_loss = match cfg.batch_size {
            Some(bs) if bs < n => {
                order.shuffle(&mut rng);
                let mut acc = 0.0;
                let chunks = order.chunks(bs);
                let count = chunks.len();
                for idx in chunks {
                    let (l, g) = batch.grad(model, Some(idx))?;
                    step(&mut adam, model, &g)?;
                    acc += l;
                }
                acc / count as f64
            }
            _ => {
                let (l, g) = batch.grad(model, None)?;
                step(&mut adam, model, &g)?;
                l
            }
        };
        if !epoch_loss.is_finite() {
            return Err(MadError::invalid("training diverged (non-finite loss)"));
        }
        history.push(epoch_loss);
    }
    Ok(TrainReport {
        loss,
        epochs: cfg.epochs,
        history,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

fn step(adam: &mut AdamState, model: &mut OperatorModel, grads: &[Vec<f64>]) -> Result<()> {
    let mut nets = model.nets_mut();
    let mut blocks: Vec<&mut [f64]> = nets.iter_mut().map(|n| n.params.as_mut_slice()).collect();
    adam.step(&mut blocks, grads)
}
