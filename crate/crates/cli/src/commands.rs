use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use wavequant::data::{
    load_ett_csv, load_ucr_tsv, make_forecast_windows, make_imputation_windows, standardize,
    ucr_windows,
};
use wavequant::model::{load_checkpoint, save_checkpoint, Checkpoint, HeadKind, ModelParams};
use wavequant::tokenizer::{encode_grid, tokenize_fft};
use wavequant::training::{
    evaluate, finetune, pretrain_multi_domain, train_supervised, DomainWindows, History, Metrics,
};
use wavequant::wavebook::filter::parse_filter_text;
use wavequant::wavebook::{
    build_filter_pair, build_wavebook, cascade_mother, load_wavebook, named_filter,
    save_wavebook, Wavebook,
};

use crate::config::{filter_source, FilterSource, Regime, RunConfig, Task};
use crate::error::{CliError, CliResult};
use crate::{CHECKPOINT_FILE, HISTORY_FILE, METRICS_FILE, VERSION, WAVEBOOK_FILE};

/// What a command did, for callers embedding the CLI.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub written: Vec<PathBuf>,
    /// The plan printed by `--dry-run`.
    pub plan: Option<Value>,
}

pub fn provenance(command: &str, config: Value) -> Value {
    json!({ "version": VERSION, "command": command, "config": config })
}

fn write_bytes(path: &Path, bytes: &[u8], out: &mut Outcome) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::data(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, bytes)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))?;
    out.written.push(path.to_path_buf());
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize, out: &mut Outcome) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON output serializes");
    text.push('\n');
    write_bytes(path, text.as_bytes(), out)
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".provenance.json");
    PathBuf::from(s)
}

pub fn build_book(filter: &str, m: u32, lambda: usize) -> CliResult<Wavebook> {
    let taps = match filter_source(filter)? {
        FilterSource::Named(name) => named_filter(name).expect("validated filter name"),
        FilterSource::File(p) => {
            let text = fs::read_to_string(&p)
                .map_err(|e| CliError::data(format!("cannot read filter {}: {e}", p.display())))?;
            parse_filter_text(&text)?
        }
    };
    let fp = build_filter_pair(&taps)?;
    Ok(build_wavebook(&cascade_mother(&fp, m)?, lambda)?)
}

pub fn cmd_build_wavebook(
    filter: &str,
    m: u32,
    lambda: usize,
    out_path: &Path,
    dry_run: bool,
) -> CliResult<Outcome> {
    let config = json!({ "filter": filter, "m": m, "lambda": lambda, "out": out_path });
    filter_source(filter)?;
    if dry_run {
        let plan = json!({
            "command": "build-wavebook",
            "config": config,
            "outputs": [out_path, sidecar(out_path)],
        });
        return Ok(Outcome { written: vec![], plan: Some(plan) });
    }
    let book = build_book(filter, m, lambda)?;
    info!("wavebook {}: f_c = {}, lengths {:?}", book.id(), book.f_c, book.basis_lengths());
    let mut out = Outcome::default();
    save_wavebook(&book, out_path)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", out_path.display())))?;
    out.written.push(out_path.to_path_buf());
    let meta = json!({
        "provenance": provenance("build-wavebook", config),
        "wavebook": {
            "id": book.id(),
            "f_c": book.f_c,
            "scales": book.scales,
            "basis_lengths": book.basis_lengths(),
        }
    });
    write_json(&sidecar(out_path), &meta, &mut out)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GridFormat {
    Binary,
    Csv,
}

/// Reads one numeric column, skipping a non-numeric header line.
pub fn read_series_csv(path: &Path) -> CliResult<Vec<f64>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
    let mut values = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        if rec.len() != 1 {
            return Err(CliError::data(format!(
                "{} line {}: expected one column, found {}",
                path.display(),
                i + 1,
                rec.len()
            )));
        }
        match rec[0].trim().parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if i == 0 => {}
            Err(_) => {
                return Err(CliError::data(format!(
                    "{} line {}: cannot parse {:?}",
                    path.display(),
                    i + 1,
                    &rec[0]
                )))
            }
        }
    }
    if values.is_empty() {
        return Err(CliError::data(format!("{} has no values", path.display())));
    }
    Ok(values)
}

pub fn cmd_tokenize(
    wavebook: &Path,
    input: &Path,
    out_path: &Path,
    format: GridFormat,
    dry_run: bool,
) -> CliResult<Outcome> {
    let config = json!({ "wavebook": wavebook, "input": input, "out": out_path, "format": format });
    if dry_run {
        let plan = json!({
            "command": "tokenize",
            "config": config,
            "outputs": [out_path, sidecar(out_path)],
        });
        return Ok(Outcome { written: vec![], plan: Some(plan) });
    }
    let book = load_wavebook(wavebook)?;
    let x = read_series_csv(input)?;
    let grid = tokenize_fft(&x, &book).map_err(|e| CliError::data(e))?;
    let bytes = match format {
        GridFormat::Binary => encode_grid(&grid),
        GridFormat::Csv => {
            let mut s = String::new();
            for row in grid.values.rows() {
                let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                s.push_str(&cells.join(","));
                s.push('\n');
            }
            s.into_bytes()
        }
    };
    let mut out = Outcome::default();
    write_bytes(out_path, &bytes, &mut out)?;
    let meta = json!({
        "provenance": provenance("tokenize", config),
        "grid": { "lambda": grid.lambda(), "length": grid.length(), "wavebook_id": grid.wavebook_id },
    });
    write_json(&sidecar(out_path), &meta, &mut out)?;
    Ok(out)
}

/// Windows of every configured dataset plus the head they call for.
pub struct LoadedData {
    pub domains: Vec<DomainWindows>,
    pub head: HeadKind,
    pub lookback: usize,
}

pub fn load_data(cfg: &RunConfig) -> CliResult<LoadedData> {
    let d = &cfg.data;
    let mut domains = Vec::new();
    let mut head = cfg.head_kind(0);
    let mut lookback = d.lookback.unwrap_or(0);
    match cfg.task {
        Task::Forecast | Task::Impute => {
            for path in &d.paths {
                let mut ds = load_ett_csv(path)?;
                ds.split_mode = d.split_mode.into();
                if d.standardize {
                    ds = standardize(ds)?;
                }
                let windows = match cfg.task {
                    Task::Forecast => {
                        make_forecast_windows(&ds, lookback, d.horizon.expect("validated"))?
                    }
                    _ => make_imputation_windows(
                        &ds,
                        lookback,
                        d.mask_ratio.expect("validated"),
                        cfg.train.seed,
                    )?,
                };
                info!("{}: {} rows, windows {:?}", ds.name, ds.len(), windows.lens());
                domains.push(DomainWindows::new(ds.name.clone(), windows));
            }
        }
        Task::Classify => {
            let mut classes = None;
            for pair in d.paths.chunks(2) {
                let mut ds = load_ucr_tsv(&pair[0], &pair[1], cfg.train.seed)?;
                if d.standardize {
                    ds.standardize();
                }
                let k = ds.num_classes();
                if *classes.get_or_insert(k) != k {
                    return Err(CliError::config(format!(
                        "{} has {k} classes but an earlier dataset has {}",
                        ds.name,
                        classes.unwrap()
                    )));
                }
                if d.lookback.is_none() {
                    if lookback != 0 && lookback != ds.series_len {
                        return Err(CliError::config(
                            "datasets differ in series length; set data.lookback",
                        ));
                    }
                    lookback = ds.series_len;
                }
                let windows = ucr_windows(&ds, lookback);
                info!("{}: {k} classes, windows {:?}", ds.name, windows.lens());
                domains.push(DomainWindows::new(ds.name.clone(), windows));
            }
            head = cfg.head_kind(classes.unwrap_or(1));
        }
    }
    let mut seen = std::collections::HashSet::new();
    for (i, dom) in domains.iter_mut().enumerate() {
        if !seen.insert(dom.name.clone()) {
            dom.name = format!("{}#{i}", dom.name);
        }
        if let Some(n) = d.max_val_windows {
            dom.windows.val.truncate(n);
        }
    }
    Ok(LoadedData { domains, head, lookback })
}

#[derive(Serialize)]
struct DomainResult<'a> {
    domain: &'a str,
    split: &'static str,
    metrics: Metrics,
}

fn score(
    params: &ModelParams,
    book: Option<&Wavebook>,
    data: &LoadedData,
) -> CliResult<Vec<(String, Metrics)>> {
    data.domains
        .iter()
        .map(|d| {
            let m = evaluate(params, book, &d.windows.test)?;
            info!("{} test: {}", d.name, serde_json::to_string(&m).unwrap_or_default());
            Ok((d.name.clone(), m))
        })
        .collect()
}

fn metrics_doc(
    command: &str,
    cfg: &RunConfig,
    params: &ModelParams,
    checkpoint: Option<&Path>,
    results: Vec<(String, Metrics)>,
) -> Value {
    let results: Vec<DomainResult> = results
        .iter()
        .map(|(d, m)| DomainResult { domain: d, split: "test", metrics: m.clone() })
        .collect();
    json!({
        "provenance": provenance(command, cfg.to_value()),
        "model": params.config,
        "checkpoint": checkpoint,
        "results": results,
    })
}

fn plan(command: &str, cfg: &RunConfig, steps: Vec<String>, outputs: Vec<PathBuf>) -> Outcome {
    Outcome {
        written: vec![],
        plan: Some(json!({
            "command": command,
            "config": cfg.to_value(),
            "steps": steps,
            "outputs": outputs,
        })),
    }
}

fn resolve_lookback(cfg: &mut RunConfig, data: &LoadedData) {
    cfg.data.lookback = Some(data.lookback);
}

/// Wavebook needed by `params`: the one referenced by the checkpoint if any,
/// else one built from the configuration.
fn book_for(
    params: &ModelParams,
    cfg: &RunConfig,
    ck_path: Option<&Path>,
    referenced: Option<&str>,
) -> CliResult<Option<Wavebook>> {
    if params.embed.is_some() {
        return Ok(None);
    }
    let book = match (referenced, ck_path) {
        (Some(rel), Some(ck)) => {
            let p = Path::new(rel);
            let p = if p.is_absolute() {
                p.to_path_buf()
            } else {
                ck.parent().unwrap_or(Path::new(".")).join(p)
            };
            load_wavebook(&p).map_err(|e| CliError::new(crate::ErrorKind::Data, e))?
        }
        _ => build_book(&cfg.wavebook.filter, cfg.wavebook.m, cfg.wavebook.lambda)?,
    };
    if book.lambda != params.config.lambda {
        return Err(CliError::config(format!(
            "wavebook has λ = {} but the model expects {}",
            book.lambda, params.config.lambda
        )));
    }
    Ok(Some(book))
}

fn save_run(
    command: &str,
    cfg: &RunConfig,
    params: &ModelParams,
    book: Option<&Wavebook>,
    history: &History,
    results: Vec<(String, Metrics)>,
) -> CliResult<Outcome> {
    let dir = &cfg.output_dir;
    let mut out = Outcome::default();
    let wavebook_path = match book {
        Some(b) => {
            let p = dir.join(WAVEBOOK_FILE);
            fs::create_dir_all(dir)
                .map_err(|e| CliError::data(format!("cannot create {}: {e}", dir.display())))?;
            save_wavebook(b, &p)
                .map_err(|e| CliError::data(format!("cannot write {}: {e}", p.display())))?;
            out.written.push(p);
            Some(WAVEBOOK_FILE.to_string())
        }
        None => None,
    };
    let ck_path = dir.join(CHECKPOINT_FILE);
    let ck = Checkpoint { params: params.clone(), wavebook_path };
    fs::create_dir_all(dir)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", dir.display())))?;
    save_checkpoint(&ck, &ck_path)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", ck_path.display())))?;
    out.written.push(ck_path.clone());
    let prov = provenance(command, cfg.to_value());
    write_json(&sidecar(&ck_path), &json!({ "provenance": prov, "model": params.config }), &mut out)?;
    write_json(
        &dir.join(HISTORY_FILE),
        &json!({ "provenance": prov, "history": history }),
        &mut out,
    )?;
    let doc = metrics_doc(command, cfg, params, Some(&ck_path), results);
    write_json(&dir.join(METRICS_FILE), &doc, &mut out)?;
    Ok(out)
}

fn run_outputs(cfg: &RunConfig, wave: bool) -> Vec<PathBuf> {
    let d = &cfg.output_dir;
    let mut v = Vec::new();
    if wave {
        v.push(d.join(WAVEBOOK_FILE));
    }
    v.push(d.join(CHECKPOINT_FILE));
    v.push(sidecar(&d.join(CHECKPOINT_FILE)));
    v.push(d.join(HISTORY_FILE));
    v.push(d.join(METRICS_FILE));
    v
}

/// Trains from scratch: one domain for the supervised regime, several for
/// multi-domain pretraining.
pub fn cmd_pretrain(mut cfg: RunConfig, dry_run: bool) -> CliResult<Outcome> {
    if !matches!(cfg.regime, Regime::Supervised | Regime::Pretrain) {
        return Err(CliError::config(format!(
            "pretrain runs the supervised or pretrain regime, not {}",
            cfg.regime_name()
        )));
    }
    if dry_run {
        let steps = vec![
            format!("load {} dataset(s) for {:?}", cfg.domain_count(), cfg.task),
            format!(
                "build wavebook {} m={} λ={}",
                cfg.wavebook.filter, cfg.wavebook.m, cfg.wavebook.lambda
            ),
            format!("initialise model with seed {}", cfg.train.seed),
            format!("train ({}) and score the test split", cfg.regime_name()),
        ];
        let outputs = run_outputs(&cfg, cfg.model.window_embed.is_none());
        return Ok(plan("pretrain", &cfg, steps, outputs));
    }
    let data = load_data(&cfg)?;
    resolve_lookback(&mut cfg, &data);
    let mc = cfg.model_config(data.lookback, data.head);
    let params = ModelParams::init(mc, &mut ChaCha8Rng::seed_from_u64(cfg.train.seed))?;
    let book = book_for(&params, &cfg, None, None)?;
    info!("model with {} parameters", params.num_params());
    let tc = cfg.train_config();
    let (params, history) = match cfg.regime {
        Regime::Supervised => train_supervised(params, book.as_ref(), &data.domains[0], &tc)?,
        _ => pretrain_multi_domain(params, book.as_ref(), &data.domains, &tc)?,
    };
    log_history(&history);
    let results = score(&params, book.as_ref(), &data)?;
    save_run("pretrain", &cfg, &params, book.as_ref(), &history, results)
}

pub fn cmd_finetune(mut cfg: RunConfig, dry_run: bool) -> CliResult<Outcome> {
    if cfg.regime != Regime::Finetune {
        return Err(CliError::config(format!(
            "finetune runs the finetune regime, not {}",
            cfg.regime_name()
        )));
    }
    let ck_path = cfg.checkpoint.clone().expect("validated");
    if dry_run {
        let steps = vec![
            format!("load checkpoint {}", ck_path.display()),
            format!("load the target dataset for {:?}", cfg.task),
            format!(
                "fine-tune all parameters on {} of the training windows",
                cfg.train.fewshot_fraction
            ),
            "score the test split".to_string(),
        ];
        return Ok(plan("finetune", &cfg, steps, run_outputs(&cfg, true)));
    }
    let ck = load_checkpoint(&ck_path)?;
    let data = load_data(&cfg)?;
    resolve_lookback(&mut cfg, &data);
    let mut params = ck.params;
    if params.config.lookback != data.lookback {
        return Err(CliError::config(format!(
            "checkpoint lookback {} differs from data lookback {}",
            params.config.lookback, data.lookback
        )));
    }
    let book = book_for(&params, &cfg, Some(&ck_path), ck.wavebook_path.as_deref())?;
    if params.config.head != data.head {
        info!("replacing {} head with {}", params.config.head.name(), data.head.name());
        params.replace_head(data.head, &mut ChaCha8Rng::seed_from_u64(cfg.train.seed));
    }
    let (params, history) = finetune(params, book.as_ref(), &data.domains[0], &cfg.train_config())?;
    log_history(&history);
    let results = score(&params, book.as_ref(), &data)?;
    save_run("finetune", &cfg, &params, book.as_ref(), &history, results)
}

/// Scores a checkpoint on the test split of every configured dataset
/// without updating it.
pub fn cmd_evaluate(mut cfg: RunConfig, dry_run: bool) -> CliResult<Outcome> {
    let ck_path = cfg.eval_checkpoint();
    if dry_run {
        let steps = vec![
            format!("load checkpoint {}", ck_path.display()),
            format!("load {} dataset(s) for {:?}", cfg.domain_count(), cfg.task),
            "score the test split with frozen parameters".to_string(),
        ];
        return Ok(plan("evaluate", &cfg, steps, vec![cfg.output_dir.join(METRICS_FILE)]));
    }
    let ck = load_checkpoint(&ck_path)?;
    let data = load_data(&cfg)?;
    resolve_lookback(&mut cfg, &data);
    let params = ck.params;
    if params.config.head != data.head || params.config.lookback != data.lookback {
        return Err(CliError::config(format!(
            "checkpoint ({} head, lookback {}) cannot score {:?} windows of length {}",
            params.config.head.name(),
            params.config.lookback,
            cfg.task,
            data.lookback
        )));
    }
    let book = book_for(&params, &cfg, Some(&ck_path), ck.wavebook_path.as_deref())?;
    let results = score(&params, book.as_ref(), &data)?;
    let mut out = Outcome::default();
    let doc = metrics_doc("evaluate", &cfg, &params, Some(&ck_path), results);
    write_json(&cfg.output_dir.join(METRICS_FILE), &doc, &mut out)?;
    Ok(out)
}

fn log_history(h: &History) {
    for e in &h.epochs {
        let parts: Vec<String> = e
            .domains
            .iter()
            .map(|d| format!("{} train {:.5} val {:.5}", d.domain, d.train_loss, d.val_loss))
            .collect();
        info!("epoch {} ({} steps): {}", e.epoch, e.steps, parts.join("; "));
    }
    info!(
        "best epoch {} (val {:.5}), {} steps{}",
        h.best_epoch,
        h.best_val_loss,
        h.total_steps,
        if h.stopped_early { ", stopped early" } else { "" }
    );
}
