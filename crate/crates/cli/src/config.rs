//! Run configuration: a JSON document merged over task defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use wavequant::data::SplitMode;
use wavequant::model::{HeadKind, ModelConfig};
use wavequant::training::TrainConfig;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Forecast,
    Impute,
    Classify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Supervised,
    Pretrain,
    Finetune,
    Zeroshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WavebookSection {
    /// `haar`, `db2` or `file:<path>` with whitespace or comma separated taps.
    pub filter: String,
    pub m: u32,
    pub lambda: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(rename = "L")]
    pub layers: usize,
    /// Defaults to λ.
    pub d_k: Option<usize>,
    pub n_heads: usize,
    /// Defaults to 4λ.
    pub d_ff: Option<usize>,
    /// Replace the wavebook with a learnable sliding window of this odd width.
    pub window_embed: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub fewshot_fraction: f64,
    pub max_steps: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitModeName {
    Strict,
    LookbackOverlap,
}

impl From<SplitModeName> for SplitMode {
    fn from(s: SplitModeName) -> Self {
        match s {
            SplitModeName::Strict => SplitMode::Strict,
            SplitModeName::LookbackOverlap => SplitMode::LookbackOverlap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// CSV files for forecasting and imputation, one domain each; for
    /// classification, consecutive `(train, test)` UCR file pairs.
    pub paths: Vec<PathBuf>,
    /// Window length. For classification it defaults to the series length.
    pub lookback: Option<usize>,
    pub horizon: Option<usize>,
    pub mask_ratio: Option<f64>,
    pub split_mode: SplitModeName,
    pub standardize: bool,
    /// Keep only the first `n` validation windows of each domain.
    pub max_val_windows: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    pub regime: Regime,
    pub wavebook: WavebookSection,
    pub model: ModelSection,
    pub train: TrainSection,
    pub data: DataSection,
    pub output_dir: PathBuf,
    /// Weights to start from (finetune) or to score (evaluate). Evaluation
    /// falls back to `<output_dir>/model.wqmd`.
    pub checkpoint: Option<PathBuf>,
}

/// Defaults for a task, following the usual per-task hyper-parameters.
pub fn defaults(task: Task) -> Value {
    let (layers, lr, batch, epochs) = match task {
        Task::Forecast | Task::Impute => (10, 1e-4, 32, 10),
        Task::Classify => (5, 1e-3, 64, 30),
    };
    let (lookback, horizon, mask_ratio) = match task {
        Task::Forecast => (json!(336), json!(96), Value::Null),
        Task::Impute => (json!(96), Value::Null, json!(0.25)),
        Task::Classify => (Value::Null, Value::Null, Value::Null),
    };
    json!({
        "regime": "supervised",
        "wavebook": { "filter": "db2", "m": 8, "lambda": 100 },
        "model": { "L": layers, "d_k": null, "n_heads": 4, "d_ff": null, "window_embed": null },
        "train": {
            "lr": lr,
            "batch_size": batch,
            "max_epochs": epochs,
            "patience": 3,
            "seed": 0,
            "fewshot_fraction": 1.0,
            "max_steps": null
        },
        "data": {
            "paths": [],
            "lookback": lookback,
            "horizon": horizon,
            "mask_ratio": mask_ratio,
            "split_mode": "strict",
            "standardize": true,
            "max_val_windows": null
        },
        "output_dir": "runs/default",
        "checkpoint": null
    })
}

/// Recursively overlays `top` on `base`; non-object values replace.
pub fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Applies `key.path=value`. The value is parsed as JSON when possible and
/// taken as a string otherwise.
pub fn apply_override(doc: &mut Value, assignment: &str) -> CliResult<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("override {assignment:?} is not key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(CliError::config(format!("override {assignment:?} has an empty key")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if !node.is_object() {
            return Err(CliError::config(format!(
                "override {key:?}: {} is not an object",
                parts[..i].join(".")
            )));
        }
        let map = node.as_object_mut().expect("checked above");
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("loop returns on the last key")
}

impl RunConfig {
    /// Builds a configuration from a user document and overrides.
    pub fn from_value(mut user: Value, overrides: &[String]) -> CliResult<Self> {
        if !user.is_object() {
            return Err(CliError::config("configuration must be a JSON object"));
        }
        for o in overrides {
            apply_override(&mut user, o)?;
        }
        let task: Task = match user.get("task") {
            Some(t) => serde_json::from_value(t.clone())
                .map_err(|e| CliError::config(format!("task: {e}")))?,
            None => return Err(CliError::config("missing required key \"task\"")),
        };
        let mut doc = defaults(task);
        merge(&mut doc, user);
        let mut cfg: RunConfig = serde_json::from_value(doc)
            .map_err(|e| CliError::config(format!("invalid configuration: {e}")))?;
        cfg.resolve();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let user: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Self::from_value(user, overrides)
    }

    fn resolve(&mut self) {
        let lambda = self.wavebook.lambda;
        self.model.d_k.get_or_insert(lambda);
        self.model.d_ff.get_or_insert(4 * lambda);
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.data.paths.is_empty() {
            return Err(CliError::config("data.paths is empty"));
        }
        match self.task {
            Task::Forecast => match self.data.horizon {
                Some(h) if h > 0 => {}
                _ => return Err(CliError::config("forecasting needs data.horizon ≥ 1")),
            },
            Task::Impute => match self.data.mask_ratio {
                Some(r) if r > 0.0 && r < 1.0 => {}
                _ => return Err(CliError::config("imputation needs data.mask_ratio in (0, 1)")),
            },
            Task::Classify => {
                if self.data.paths.len() % 2 != 0 {
                    return Err(CliError::config(
                        "classification needs data.paths as (train, test) pairs",
                    ));
                }
            }
        }
        if self.data.lookback == Some(0) {
            return Err(CliError::config("data.lookback must be positive"));
        }
        if self.task != Task::Classify && self.data.lookback.is_none() {
            return Err(CliError::config("data.lookback is required"));
        }
        if matches!(self.regime, Regime::Supervised | Regime::Finetune) && self.domain_count() != 1
        {
            return Err(CliError::config(format!(
                "{} regime uses exactly one dataset, got {}",
                self.regime_name(),
                self.domain_count()
            )));
        }
        if matches!(self.regime, Regime::Finetune | Regime::Zeroshot) && self.checkpoint.is_none() {
            return Err(CliError::config(format!(
                "{} regime needs a checkpoint",
                self.regime_name()
            )));
        }
        filter_source(&self.wavebook.filter)?;
        self.train_config().validate().map_err(|e| CliError::config(e))?;
        // class count is only known after loading, any value checks the rest
        let probe = self.model_config(self.data.lookback.unwrap_or(24), self.head_kind(2));
        probe.validate().map_err(|e| CliError::config(e))?;
        Ok(())
    }

    pub fn regime_name(&self) -> &'static str {
        match self.regime {
            Regime::Supervised => "supervised",
            Regime::Pretrain => "pretrain",
            Regime::Finetune => "finetune",
            Regime::Zeroshot => "zeroshot",
        }
    }

    pub fn domain_count(&self) -> usize {
        match self.task {
            Task::Classify => self.data.paths.len() / 2,
            _ => self.data.paths.len(),
        }
    }

    pub fn head_kind(&self, classes: usize) -> HeadKind {
        match self.task {
            Task::Forecast => HeadKind::Forecast { horizon: self.data.horizon.unwrap_or(1) },
            Task::Impute => HeadKind::Impute,
            Task::Classify => HeadKind::Classify { classes },
        }
    }

    pub fn model_config(&self, lookback: usize, head: HeadKind) -> ModelConfig {
        let lambda = self.wavebook.lambda;
        ModelConfig {
            lambda,
            lookback,
            layers: self.model.layers,
            d_k: self.model.d_k.unwrap_or(lambda),
            n_heads: self.model.n_heads,
            d_ff: self.model.d_ff.unwrap_or(4 * lambda),
            head,
            window_embed: self.model.window_embed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            lr: t.lr,
            batch_size: t.batch_size,
            max_epochs: t.max_epochs,
            patience: t.patience,
            seed: t.seed,
            max_steps: t.max_steps,
            fewshot_fraction: t.fewshot_fraction,
        }
    }

    /// Checkpoint read by `evaluate`.
    pub fn eval_checkpoint(&self) -> PathBuf {
        self.checkpoint.clone().unwrap_or_else(|| self.output_dir.join(crate::CHECKPOINT_FILE))
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("configuration serializes")
    }
}

/// Where the scaling filter comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum FilterSource {
    Named(&'static str),
    File(PathBuf),
}

pub fn filter_source(spec: &str) -> CliResult<FilterSource> {
    match spec {
        "haar" => Ok(FilterSource::Named("haar")),
        "db2" => Ok(FilterSource::Named("db2")),
        s => match s.strip_prefix("file:") {
            Some(p) if !p.is_empty() => Ok(FilterSource::File(PathBuf::from(p))),
            _ => Err(CliError::config(format!(
                "unknown filter {s:?}; expected haar, db2 or file:<path>"
            ))),
        },
    }
}
