use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::adam::{adam_step, adam_update, AdamState};
use super::loss::{cross_entropy, masked_mse, mse, multi_task_loss, TaskWeights};
use super::metrics::{classification_metrics, regression_metrics, Metrics};
use super::{DomainWindows, TrainConfig, TrainError};
use crate::data::{Target, WindowSample};
use crate::model::{backward_into, forward_tokens, model_forward, HeadKind, ModelParams};
use crate::tokenizer::tokenize_fft;
use crate::wavebook::Wavebook;

/// A window with its token grid precomputed when the tokenizer is fixed.
#[derive(Debug, Clone)]
pub struct Example {
    pub input: Vec<f64>,
    pub tokens: Option<Array2<f64>>,
    pub target: Target,
}

pub fn prepare(
    params: &ModelParams,
    book: Option<&Wavebook>,
    samples: &[WindowSample],
) -> Result<Vec<Example>, TrainError> {
    samples
        .iter()
        .map(|s| {
            let tokens = match (&params.embed, book) {
                (Some(_), _) => None,
                (None, Some(b)) => Some(
                    tokenize_fft(&s.input, b).map_err(crate::model::ModelError::from)?.values,
                ),
                (None, None) => return Err(crate::model::ModelError::MissingWavebook.into()),
            };
            Ok(Example { input: s.input.clone(), tokens, target: s.target.clone() })
        })
        .collect()
}

fn forward(
    params: &ModelParams,
    ex: &Example,
) -> Result<(Array1<f64>, crate::model::ForwardCache), TrainError> {
    Ok(match &ex.tokens {
        Some(t) => forward_tokens(params, t.view())?,
        None => model_forward(params, &ex.input, None)?,
    })
}

/// Loss of one prediction and its gradient w.r.t. the prediction.
pub fn sample_loss(
    kind: HeadKind,
    pred: &Array1<f64>,
    target: &Target,
) -> Result<(f64, Array1<f64>), TrainError> {
    match (kind, target) {
        (HeadKind::Forecast { horizon }, Target::Forecast(y)) if y.len() == horizon => {
            Ok(mse(pred, y))
        }
        (HeadKind::Impute, Target::Impute { mask, original }) => {
            masked_mse(pred.as_slice().expect("contiguous"), original, mask)
        }
        (HeadKind::Classify { classes }, Target::Class(k)) if *k < classes => {
            Ok(cross_entropy(pred, *k))
        }
        (kind, _) => Err(TrainError::Shape(format!(
            "{} head cannot score this target",
            kind.name()
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainLoss {
    pub domain: String,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub steps: usize,
    pub domains: Vec<DomainLoss>,
    pub mean_val_loss: f64,
    /// Learnable log-variances, one per domain; empty with a single domain.
    pub log_var: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
    pub total_steps: usize,
}

impl History {
    /// Mean training loss of the last recorded epoch.
    pub fn final_train_loss(&self) -> Option<f64> {
        let e = self.epochs.last()?;
        Some(e.domains.iter().map(|d| d.train_loss).sum::<f64>() / e.domains.len() as f64)
    }
}

fn mean_loss(params: &ModelParams, examples: &[Example]) -> Result<f64, TrainError> {
    let mut total = 0.0;
    for ex in examples {
        let (y, _) = forward(params, ex)?;
        total += sample_loss(params.config.head, &y, &ex.target)?.0;
    }
    Ok(total / examples.len() as f64)
}

struct Prepared {
    name: String,
    train: Vec<Example>,
    val: Vec<Example>,
}

/// Shared loop: shuffled mixed-domain batches, uncertainty weighting across
/// domains, Adam, early stopping on the mean validation loss.
fn run(
    mut params: ModelParams,
    book: Option<&Wavebook>,
    domains: &[DomainWindows],
    cfg: &TrainConfig,
) -> Result<(ModelParams, History), TrainError> {
    cfg.validate()?;
    if domains.is_empty() {
        return Err(TrainError::EmptyDomain("<none>".into()));
    }
    let mut data = Vec::with_capacity(domains.len());
    for d in domains {
        if d.windows.train.is_empty() {
            return Err(TrainError::EmptyDomain(d.name.clone()));
        }
        data.push(Prepared {
            name: d.name.clone(),
            train: prepare(&params, book, &d.windows.train)?,
            val: prepare(&params, book, &d.windows.val)?,
        });
    }
    let n_dom = data.len();
    let weighted = n_dom > 1;
    let mut weights = TaskWeights::new(n_dom);
    let (mut wm, mut wv) = (vec![0.0; n_dom], vec![0.0; n_dom]);
    let mut adam = AdamState::new(&params, cfg.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut pool: Vec<(usize, usize)> = data
        .iter()
        .enumerate()
        .flat_map(|(d, p)| (0..p.train.len()).map(move |i| (d, i)))
        .collect();
    let kind = params.config.head;

    let mut history = History { best_val_loss: f64::INFINITY, ..Default::default() };
    let mut best = params.clone();
    let mut bad_epochs = 0;
    let mut steps = 0;
    let mut grads = params.zeros_like();
    'epochs: for epoch in 1..=cfg.max_epochs {
        pool.shuffle(&mut rng);
        let mut train_sum = vec![0.0; n_dom];
        let mut train_cnt = vec![0usize; n_dom];
        let mut hit_limit = false;
        for batch in pool.chunks(cfg.batch_size) {
            let mut counts = vec![0usize; n_dom];
            for &(d, _) in batch {
                counts[d] += 1;
            }
            let alphas = weights.alphas();
            grads.scale(0.0);
            let mut batch_loss = vec![0.0; n_dom];
            for &(d, i) in batch {
                let ex = &data[d].train[i];
                let (y, cache) = forward(&params, ex)?;
                let (l, g) = sample_loss(kind, &y, &ex.target)?;
                if !l.is_finite() {
                    return Err(TrainError::NonFinite { epoch, step: steps });
                }
                batch_loss[d] += l;
                let scale = if weighted { alphas[d] } else { 1.0 } / counts[d] as f64;
                backward_into(&params, &cache, &(g * scale), &mut grads)?;
            }
            if weighted {
                let present: Vec<usize> = (0..n_dom).filter(|&d| counts[d] > 0).collect();
                let losses: Vec<f64> =
                    present.iter().map(|&d| batch_loss[d] / counts[d] as f64).collect();
                let sub = TaskWeights { log_var: present.iter().map(|&d| weights.log_var[d]).collect() };
                let (_, _, ds) = multi_task_loss(&losses, &sub)?;
                for (k, &d) in present.iter().enumerate() {
                    adam_update(
                        &mut weights.log_var[d..d + 1],
                        &ds[k..k + 1],
                        &mut wm[d..d + 1],
                        &mut wv[d..d + 1],
                        adam.step_count + 1,
                        cfg.lr,
                        adam.beta1,
                        adam.beta2,
                        adam.eps,
                    );
                }
            }
            adam_step(&mut params, &grads, &mut adam)?;
            if !params.is_finite() {
                return Err(TrainError::NonFinite { epoch, step: steps });
            }
            for d in 0..n_dom {
                train_sum[d] += batch_loss[d];
                train_cnt[d] += counts[d];
            }
            steps += 1;
            if cfg.max_steps.is_some_and(|m| steps >= m) {
                hit_limit = true;
                break;
            }
        }

        let mut record = EpochRecord {
            epoch,
            steps,
            domains: Vec::with_capacity(n_dom),
            mean_val_loss: 0.0,
            log_var: if weighted { weights.log_var.clone() } else { Vec::new() },
        };
        for (d, p) in data.iter().enumerate() {
            let train_loss = train_sum[d] / train_cnt[d].max(1) as f64;
            let val_loss =
                if p.val.is_empty() { train_loss } else { mean_loss(&params, &p.val)? };
            record.domains.push(DomainLoss { domain: p.name.clone(), train_loss, val_loss });
        }
        record.mean_val_loss =
            record.domains.iter().map(|d| d.val_loss).sum::<f64>() / n_dom as f64;
        if !record.mean_val_loss.is_finite() {
            return Err(TrainError::NonFinite { epoch, step: steps });
        }
        if record.mean_val_loss < history.best_val_loss {
            history.best_val_loss = record.mean_val_loss;
            history.best_epoch = epoch;
            best = params.clone();
            bad_epochs = 0;
        } else {
            bad_epochs += 1;
        }
        history.epochs.push(record);
        if bad_epochs >= cfg.patience {
            history.stopped_early = true;
            break 'epochs;
        }
        if hit_limit {
            break;
        }
    }
    history.total_steps = steps;
    Ok((best, history))
}

/// Trains on several domains at once with learnable loss weights.
pub fn pretrain_multi_domain(
    params: ModelParams,
    book: Option<&Wavebook>,
    domains: &[DomainWindows],
    cfg: &TrainConfig,
) -> Result<(ModelParams, History), TrainError> {
    run(params, book, domains, cfg)
}

pub fn train_supervised(
    params: ModelParams,
    book: Option<&Wavebook>,
    domain: &DomainWindows,
    cfg: &TrainConfig,
) -> Result<(ModelParams, History), TrainError> {
    run(params, book, std::slice::from_ref(domain), cfg)
}

/// Continues training all parameters on the target domain, restricted to
/// `cfg.fewshot_fraction` of its training windows.
pub fn finetune(
    params: ModelParams,
    book: Option<&Wavebook>,
    target: &DomainWindows,
    cfg: &TrainConfig,
) -> Result<(ModelParams, History), TrainError> {
    cfg.validate()?;
    let mut t = target.clone();
    t.windows.train = fewshot_subset(&target.windows.train, cfg.fewshot_fraction, cfg.seed)?;
    run(params, book, std::slice::from_ref(&t), cfg)
}

/// The first `⌈f·N⌉` windows for regression targets; for class targets,
/// `⌈f·n_k⌉` seeded picks from every class `k`, in original order.
pub fn fewshot_subset(
    samples: &[WindowSample],
    f: f64,
    seed: u64,
) -> Result<Vec<WindowSample>, TrainError> {
    if !(f > 0.0 && f <= 1.0) {
        return Err(TrainError::Config(format!("few-shot fraction must be in (0, 1], got {f}")));
    }
    let take = |n: usize| ((f * n as f64).ceil() as usize).min(n);
    let is_class = samples.iter().all(|s| matches!(s.target, Target::Class(_)));
    if !is_class || samples.is_empty() {
        return Ok(samples[..take(samples.len())].to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = samples
        .iter()
        .filter_map(|s| match s.target {
            Target::Class(k) => Some(k),
            _ => None,
        })
        .max()
        .unwrap_or(0)
        + 1;
    let mut keep = vec![false; samples.len()];
    for k in 0..classes {
        let mut members: Vec<usize> = (0..samples.len())
            .filter(|&i| samples[i].target == Target::Class(k))
            .collect();
        members.shuffle(&mut rng);
        let n = take(members.len());
        for &i in &members[..n] {
            keep[i] = true;
        }
    }
    Ok(samples.iter().zip(keep).filter(|(_, k)| *k).map(|(s, _)| s.clone()).collect())
}

/// Model outputs for every sample.
pub fn predict(
    params: &ModelParams,
    book: Option<&Wavebook>,
    samples: &[WindowSample],
) -> Result<Vec<Array1<f64>>, TrainError> {
    prepare(params, book, samples)?.iter().map(|ex| Ok(forward(params, ex)?.0)).collect()
}

/// Scores a split: MSE/MAE for forecasting and imputation (masked points
/// only), accuracy and macro precision/recall/F1 for classification.
pub fn evaluate(
    params: &ModelParams,
    book: Option<&Wavebook>,
    samples: &[WindowSample],
) -> Result<Metrics, TrainError> {
    if samples.is_empty() {
        return Err(TrainError::EmptySplit("test split has no windows".into()));
    }
    let preds = predict(params, book, samples)?;
    match params.config.head {
        HeadKind::Classify { classes } => {
            let mut p = Vec::with_capacity(preds.len());
            let mut t = Vec::with_capacity(preds.len());
            for (y, s) in preds.iter().zip(samples) {
                let Target::Class(k) = s.target else {
                    return Err(TrainError::Shape("classification head needs class targets".into()));
                };
                let arg = y
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b })
                    .0;
                p.push(arg);
                t.push(k);
            }
            classification_metrics(&p, &t, classes)
        }
        kind => {
            let (mut p, mut t) = (Vec::new(), Vec::new());
            for (y, s) in preds.iter().zip(samples) {
                match &s.target {
                    Target::Forecast(tar) if matches!(kind, HeadKind::Forecast { .. }) => {
                        p.extend(y.iter().copied());
                        t.extend(tar.iter().copied());
                    }
                    Target::Impute { mask, original } if kind == HeadKind::Impute => {
                        for i in 0..mask.len() {
                            if mask[i] {
                                p.push(y[i]);
                                t.push(original[i]);
                            }
                        }
                    }
                    _ => return Err(TrainError::Shape("target does not match the head".into())),
                }
            }
            regression_metrics(&p, &t)
        }
    }
}
