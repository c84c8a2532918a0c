//! Optimisation loops, losses, task weighting and metrics.

mod adam;
mod loss;
mod metrics;
mod trainer;

use thiserror::Error;

use crate::data::{Splits, WindowSample};
use crate::model::ModelError;

pub use adam::{adam_step, adam_update, AdamState};
pub use loss::{cross_entropy, masked_loss, masked_mse, mse, multi_task_loss, TaskWeights};
pub use metrics::{classification_metrics, regression_metrics, Metrics};
pub use trainer::{
    evaluate, fewshot_subset, finetune, predict, prepare, pretrain_multi_domain, sample_loss,
    train_supervised, DomainLoss, EpochRecord, Example, History,
};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("mask selects no positions")]
    EmptyMask,
    #[error("domain {0} has no training windows")]
    EmptyDomain(String),
    #[error("empty split: {0}")]
    EmptySplit(String),
    #[error("non-finite loss at epoch {epoch}, step {step}")]
    NonFinite { epoch: usize, step: usize },
    #[error("invalid training configuration: {0}")]
    Config(String),
}

/// Optimiser and loop settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    /// Stop after this many optimiser steps even mid-epoch.
    pub max_steps: Option<usize>,
    /// Fraction of the training split used by [`finetune`].
    pub fewshot_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-4,
            batch_size: 32,
            max_epochs: 10,
            patience: 3,
            seed: 0,
            max_steps: None,
            fewshot_fraction: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.patience == 0 {
            return bad("patience must be at least 1");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be at least 1");
        }
        if !(self.fewshot_fraction > 0.0 && self.fewshot_fraction <= 1.0) {
            return bad("fewshot_fraction must be in (0, 1]");
        }
        Ok(())
    }
}

/// Windows of one named domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainWindows {
    pub name: String,
    pub windows: Splits<WindowSample>,
}

impl DomainWindows {
    pub fn new(name: impl Into<String>, windows: Splits<WindowSample>) -> Self {
        DomainWindows { name: name.into(), windows }
    }
}
