//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use ndarray::Array1;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tempfile::TempDir;
use wavequant::data::synthetic::{series_dataset, sum_of_waves, Wave};
use wavequant::data::{make_forecast_windows, standardize};
use wavequant::model::{backward, model_forward, HeadKind, ModelConfig, ModelParams};
use wavequant::tokenizer::{recode, tokenize, tokenize_fft};
use wavequant::training::{
    evaluate, pretrain_multi_domain, train_supervised, DomainWindows, TrainConfig,
};
use wavequant::wavebook::{
    build_filter_pair, build_wavebook, cascade_mother, filter, verify_unitary, zero_mean_ratio,
    Wavebook,
};

struct Outcome {
    pass: bool,
    detail: String,
    /// Runtime charged to the criterion when it differs from wall time.
    elapsed: Option<Duration>,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail, elapsed: None }
}

struct Report {
    passed: usize,
    total: usize,
}

impl Report {
    fn check(&mut self, id: u32, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) {
        let t0 = Instant::now();
        let mut o = f();
        let took = o.elapsed.unwrap_or_else(|| t0.elapsed());
        let mut timing = format!("{:.2} s", took.as_secs_f64());
        if let Some(limit) = limit {
            write!(timing, " / limit {} s", limit.as_secs()).unwrap();
            if took > limit {
                o.pass = false;
                o.detail.push_str("; over the time limit");
            }
        }
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} {id:>2} {name}: {} [{timing}]", o.detail);
        self.total += 1;
        if o.pass {
            self.passed += 1;
        }
    }
}

fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

fn db2_book(m: u32, lambda: usize) -> Wavebook {
    let fp = build_filter_pair(&filter::db2()).unwrap();
    build_wavebook(&cascade_mother(&fp, m).unwrap(), lambda).unwrap()
}

fn max_abs(a: impl IntoIterator<Item = f64>) -> f64 {
    a.into_iter().fold(0.0, |m, v| m.max(v.abs()))
}

// 1
fn filter_unitarity() -> Outcome {
    let haar = build_filter_pair(&filter::haar()).unwrap();
    let db2 = build_filter_pair(&filter::db2()).unwrap();
    let mut scaled = haar.clone();
    scaled.h.iter_mut().chain(scaled.g.iter_mut()).for_each(|v| *v *= 1.01);
    let (eh, ed, es) = (
        verify_unitary(&haar, 512).unwrap(),
        verify_unitary(&db2, 512).unwrap(),
        verify_unitary(&scaled, 512).unwrap(),
    );
    outcome(
        eh < 1e-9 && ed < 1e-9 && es > 1e-2,
        format!("haar {eh:.1e}, db2 {ed:.1e} (< 1e-9); 1%-scaled haar {es:.2e} (> 1e-2)"),
    )
}

// 2
fn mother_admissibility() -> Outcome {
    let w = cascade_mother(&build_filter_pair(&filter::db2()).unwrap(), 8).unwrap();
    let ratio = zero_mean_ratio(&w.amplitudes);
    let norm = w.amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt();
    outcome(
        ratio < 1e-3 && (norm - 1.0).abs() < 1e-10 && w.amplitudes.len() == 256,
        format!("|ΣA|/Σ|A| = {ratio:.2e} (< 1e-3), ‖A‖₂ − 1 = {:.1e} (< 1e-10)", norm - 1.0),
    )
}

/// Tokens of a unit impulse at `k`, written out from the kernel.
fn impulse_tokens(a: &[f64], scale: f64, k: usize, l: usize) -> Vec<f64> {
    let n = a.len();
    let c = |m: usize| if m >= k && m - k < n { a[m - k] } else { 0.0 };
    let off = n / 2 - 1;
    (0..l).map(|j| -scale.sqrt() * (c(j + off + 1) - c(j + off))).collect()
}

// 3
fn tokenizer_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut books: HashMap<(bool, usize), Wavebook> = HashMap::new();
    let (mut impulse_bad, mut const_bad, mut count_bad) = (0, 0, 0);
    let (mut lin_worst, mut fft_worst) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let use_db2 = rng.gen_bool(0.5);
        let lambda = rng.gen_range(1..=32);
        let l = rng.gen_range(1..=512);
        let b = books.entry((use_db2, lambda)).or_insert_with(|| {
            let h = if use_db2 { filter::db2() } else { filter::haar() };
            build_wavebook(&cascade_mother(&build_filter_pair(&h).unwrap(), 6).unwrap(), lambda)
                .unwrap()
        });
        let x: Vec<f64> = (0..l).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..l).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let (alpha, beta) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));

        let k = rng.gen_range(0..l);
        let mut imp = vec![0.0; l];
        imp[k] = 1.0;
        let gi = tokenize(&imp, b).unwrap().values;
        for i in 0..b.lambda {
            if gi.row(i).to_vec() != impulse_tokens(&b.bases[i], b.scales[i], k, l) {
                impulse_bad += 1;
            }
        }

        let gx = tokenize(&x, b).unwrap().values;
        let gy = tokenize(&y, b).unwrap().values;
        let mix: Vec<f64> = x.iter().zip(&y).map(|(u, v)| alpha * u + beta * v).collect();
        let gm = tokenize(&mix, b).unwrap().values;
        let rhs = &gx * alpha + &gy * beta;
        let scale = max_abs(rhs.iter().copied()).max(1e-300);
        lin_worst = lin_worst.max(max_abs((&gm - &rhs).iter().copied()) / scale);

        let level = rng.gen_range(-10.0..10.0);
        let gc = tokenize(&vec![level; l], b).unwrap().values;
        for (i, basis) in b.bases.iter().enumerate() {
            let n = basis.len();
            for j in (n / 2 + 1)..=l.saturating_sub(n / 2) {
                if gc[[i, j - 1]] != 0.0 {
                    const_bad += 1;
                }
            }
        }

        let gf = tokenize_fft(&x, b).unwrap().values;
        fft_worst = fft_worst.max(max_abs((&gf - &gx).iter().copied()));
        if gx.ncols() != l || gf.ncols() != l || gx.nrows() != lambda {
            count_bad += 1;
        }
    }
    outcome(
        impulse_bad == 0 && const_bad == 0 && count_bad == 0 && lin_worst < 1e-10 && fft_worst < 1e-9,
        format!(
            "1000 cases: impulse mismatches {impulse_bad}, linearity {lin_worst:.1e} (< 1e-10), \
             nonzero constant interiors {const_bad}, FFT vs direct {fft_worst:.1e} (< 1e-9), \
             wrong token counts {count_bad}"
        ),
    )
}

// 4
fn worked_example() -> Outcome {
    let p = recode(&[1.0; 6], &[0.0, 1.0, -1.0, 0.0], 1.0).unwrap();
    let want = vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0];
    outcome(p == want, format!("p = {p:?}, expected {want:?}"))
}

/// Loss for each head with its gradient w.r.t. the output.
fn head_loss(kind: HeadKind, y: &Array1<f64>, target: &[f64]) -> (f64, Array1<f64>) {
    match kind {
        HeadKind::Classify { .. } => {
            let label = target[0] as usize;
            let max = y.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let z: f64 = y.iter().map(|v| (v - max).exp()).sum();
            let mut g = y.mapv(|v| (v - max).exp() / z);
            g[label] -= 1.0;
            (-(y[label] - max - z.ln()), g)
        }
        _ => {
            let n = y.len() as f64;
            let d: Array1<f64> = y.iter().zip(target).map(|(a, b)| a - b).collect();
            (d.mapv(|v| v * v).sum() / n, d * (2.0 / n))
        }
    }
}

fn gradient_error(kind: HeadKind, seed: u64) -> f64 {
    let book = db2_book(6, 8);
    let cfg = ModelConfig {
        lambda: 8,
        lookback: 16,
        layers: 2,
        d_k: 8,
        n_heads: 2,
        d_ff: 32,
        head: kind,
        window_embed: None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ModelParams::init(cfg, &mut rng).unwrap();
    for t in params.tensors_mut() {
        t.iter_mut().for_each(|v| *v += rng.gen_range(-0.05..0.05));
    }
    let x: Vec<f64> = (0..16).map(|i| (i as f64 * 0.6).cos() + rng.gen_range(-0.3..0.3)).collect();
    let target: Vec<f64> = match kind {
        HeadKind::Classify { classes } => vec![rng.gen_range(0..classes) as f64],
        _ => (0..kind.output_len(16)).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    };
    let loss_at = |p: &ModelParams| head_loss(kind, &model_forward(p, &x, Some(&book)).unwrap().0, &target).0;
    let (y, cache) = model_forward(&params, &x, Some(&book)).unwrap();
    let grads = backward(&params, &cache, &head_loss(kind, &y, &target).1).unwrap();
    let analytic: Vec<f64> = grads.tensors().iter().flat_map(|(_, t)| t.iter().copied()).collect();
    let mut idx: Vec<usize> = (0..analytic.len()).collect();
    idx.shuffle(&mut rng);
    let eps = 1e-4;
    let mut worst = 0.0f64;
    for &flat in idx.iter().take(200) {
        let bump = |delta: f64| {
            let mut p = params.clone();
            let mut k = flat;
            for t in p.tensors_mut() {
                if k < t.len() {
                    t[k] += delta;
                    break;
                }
                k -= t.len();
            }
            loss_at(&p)
        };
        let numeric = (bump(eps) - bump(-eps)) / (2.0 * eps);
        let scale = analytic[flat].abs().max(numeric.abs());
        if scale > 1e-8 {
            worst = worst.max((analytic[flat] - numeric).abs() / scale);
        }
    }
    worst
}

// 5
fn gradient_correctness() -> Outcome {
    let errs = [
        ("forecast", gradient_error(HeadKind::Forecast { horizon: 4 }, 11)),
        ("impute", gradient_error(HeadKind::Impute, 12)),
        ("classify", gradient_error(HeadKind::Classify { classes: 3 }, 13)),
    ];
    let parts: Vec<String> = errs.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect();
    outcome(
        errs.iter().all(|(_, e)| *e < 1e-4),
        format!("max relative error over 200 parameters: {} (< 1e-4)", parts.join(", ")),
    )
}

const SMOKE_LEN: usize = 3000;
const SMOKE_L: usize = 96;
const SMOKE_C: usize = 24;

fn smoke_series(seed: u64) -> Vec<f64> {
    sum_of_waves(SMOKE_LEN, &[Wave::new(24.0, 1.0), Wave::new(7.0, 0.5)], 0.05, seed)
}

fn write_csv(path: &Path, values: &[f64]) {
    let mut s = String::from("date,value\n");
    for (t, v) in values.iter().enumerate() {
        writeln!(s, "t{t},{v}").unwrap();
    }
    fs::write(path, s).unwrap();
}

/// Repeat-last-value MSE on the test windows, from the raw series.
fn last_value_baseline(values: &[f64]) -> f64 {
    let n = values.len();
    let train_end = (n as f64 * 0.7).floor() as usize;
    let val_end = train_end + (n as f64 * 0.1).floor() as usize;
    let train = &values[..train_end];
    let mean = train.iter().sum::<f64>() / train_end as f64;
    let std = (train.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / train_end as f64).sqrt();
    let z: Vec<f64> = values.iter().map(|v| (v - mean) / std).collect();
    let (mut se, mut count) = (0.0, 0usize);
    for start in val_end..=n - SMOKE_L - SMOKE_C {
        let last = z[start + SMOKE_L - 1];
        for v in &z[start + SMOKE_L..start + SMOKE_L + SMOKE_C] {
            se += (v - last).powi(2);
            count += 1;
        }
    }
    se / count as f64
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    p
}

fn cli(args: &[&str]) -> Result<(), String> {
    let mut full = vec!["wavequant"];
    full.extend_from_slice(args);
    wavequant_cli::run_args(full).map(|_| ()).map_err(|e| e.to_string())
}

fn test_metric(metrics_path: &Path, key: &str) -> Option<f64> {
    let doc: Value = serde_json::from_slice(&fs::read(metrics_path).ok()?).ok()?;
    doc["results"][0]["metrics"][key].as_f64()
}

struct SmokeRun {
    config: PathBuf,
    metrics: PathBuf,
}

fn smoke_setup(dir: &Path) -> SmokeRun {
    let csv = dir.join("two_sines.csv");
    write_csv(&csv, &smoke_series(0));
    let out = dir.join("smoke");
    let cfg = json!({
        "task": "forecast",
        "regime": "supervised",
        "wavebook": { "filter": "db2", "m": 8, "lambda": 16 },
        "model": { "L": 2, "n_heads": 4 },
        "train": {
            "lr": 1e-3, "batch_size": 32, "max_epochs": 100, "patience": 100,
            "seed": 0, "max_steps": 500
        },
        "data": { "paths": [csv], "lookback": SMOKE_L, "horizon": SMOKE_C, "max_val_windows": 256 },
        "output_dir": out,
    });
    SmokeRun { config: write_config(dir, "smoke.json", &cfg), metrics: out.join("metrics.json") }
}

// 6
fn learning_smoke(run: &SmokeRun) -> Outcome {
    if let Err(e) = cli(&["pretrain", "--config", run.config.to_str().unwrap()]) {
        return outcome(false, format!("pipeline failed: {e}"));
    }
    let base = last_value_baseline(&smoke_series(0));
    let Some(mse) = test_metric(&run.metrics, "mse") else {
        return outcome(false, "metrics.json has no test MSE".into());
    };
    outcome(
        mse < 0.25 * base,
        format!(
            "test MSE {mse:.4} vs repeat-last {base:.4}, ratio {:.4} (< 0.25) after 500 steps",
            mse / base
        ),
    )
}

fn tri_domain(name: &str, amp: f64, noise: f64, seed: u64) -> DomainWindows {
    let ds = standardize(series_dataset(name, sum_of_waves(1200, &[Wave::new(24.0, amp)], noise, seed)))
        .unwrap();
    DomainWindows::new(name, make_forecast_windows(&ds, 48, 12).unwrap())
}

struct TriSeed {
    random: f64,
    multi: f64,
    single_a: f64,
    single_b: f64,
}

struct TriResults {
    seeds: Vec<TriSeed>,
    t_random: Duration,
    t_multi: Duration,
    t_single: Duration,
}

/// Sources A and B, unseen target C; every model starts from the same
/// seeded initialisation and zero-shot MSE is measured on C's test split.
fn run_tri_domain() -> TriResults {
    let book = db2_book(8, 16);
    let mut r = TriResults {
        seeds: Vec::new(),
        t_random: Duration::ZERO,
        t_multi: Duration::ZERO,
        t_single: Duration::ZERO,
    };
    for seed in 0..10u64 {
        let a = tri_domain("A", 1.0, 0.0, 100 + seed);
        let b = tri_domain("B", 3.0, 0.1, 200 + seed);
        let c = tri_domain("C", 2.0, 0.05, 300 + seed);
        let cfg = ModelConfig { n_heads: 4, ..ModelConfig::new(16, 48, HeadKind::Forecast { horizon: 12 }) };
        let init = || ModelParams::init(cfg.clone(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let tc = TrainConfig {
            lr: 1e-3,
            batch_size: 32,
            max_epochs: 6,
            patience: 3,
            seed,
            max_steps: None,
            fewshot_fraction: 1.0,
        };
        let zero_shot = |p: &ModelParams| evaluate(p, Some(&book), &c.windows.test).unwrap().mse().unwrap();

        let t = Instant::now();
        let random = zero_shot(&init());
        r.t_random += t.elapsed();

        let t = Instant::now();
        let (pm, _) = pretrain_multi_domain(init(), Some(&book), &[a.clone(), b.clone()], &tc).unwrap();
        let multi = zero_shot(&pm);
        r.t_multi += t.elapsed();

        let t = Instant::now();
        let (pa, _) = train_supervised(init(), Some(&book), &a, &tc).unwrap();
        let (pb, _) = train_supervised(init(), Some(&book), &b, &tc).unwrap();
        let (single_a, single_b) = (zero_shot(&pa), zero_shot(&pb));
        r.t_single += t.elapsed();
        r.seeds.push(TriSeed { random, multi, single_a, single_b });
    }
    r
}

// 7
fn cross_domain(r: &TriResults) -> Outcome {
    let wins = r.seeds.iter().filter(|s| s.multi < s.random).count();
    let mean = |f: fn(&TriSeed) -> f64| r.seeds.iter().map(f).sum::<f64>() / r.seeds.len() as f64;
    Outcome {
        pass: wins >= 9,
        detail: format!(
            "pretrained beats random init on unseen domain in {wins}/10 seeds (≥ 9); \
             mean zero-shot MSE {:.4} vs {:.4}",
            mean(|s| s.multi),
            mean(|s| s.random)
        ),
        elapsed: Some(r.t_multi + r.t_random),
    }
}

// 8
fn multi_vs_single(r: &TriResults) -> Outcome {
    let wins = r.seeds.iter().filter(|s| s.multi <= s.single_a.min(s.single_b)).count();
    let mean = |f: fn(&TriSeed) -> f64| r.seeds.iter().map(f).sum::<f64>() / r.seeds.len() as f64;
    Outcome {
        pass: wins >= 7,
        detail: format!(
            "multi-domain ≤ best single-domain zero-shot MSE in {wins}/10 seeds (≥ 7); \
             means multi {:.5}, A {:.5}, B {:.5}",
            mean(|s| s.multi),
            mean(|s| s.single_a),
            mean(|s| s.single_b)
        ),
        elapsed: Some(r.t_multi + r.t_single),
    }
}

// 9
fn ablation_direction() -> Outcome {
    let book = db2_book(8, 16);
    let mut wins = 0;
    let mut counts = (0, 0);
    let mut parts = Vec::new();
    for seed in 0..10u64 {
        let ds = standardize(series_dataset("two_sines", smoke_series(seed))).unwrap();
        let w = make_forecast_windows(&ds, SMOKE_L, SMOKE_C).unwrap();
        let mut dw = DomainWindows::new("two_sines", w.clone());
        dw.windows.val.truncate(128);
        let tc = TrainConfig {
            lr: 1e-3,
            batch_size: 32,
            max_epochs: 100,
            patience: 100,
            seed,
            max_steps: Some(150),
            fewshot_fraction: 1.0,
        };
        let wave_cfg = ModelConfig {
            n_heads: 4,
            ..ModelConfig::new(16, SMOKE_L, HeadKind::Forecast { horizon: SMOKE_C })
        };
        let window_cfg = ModelConfig { d_ff: 56, window_embed: Some(33), ..wave_cfg.clone() };
        let pw = ModelParams::init(wave_cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let pa = ModelParams::init(window_cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        counts = (pw.num_params(), pa.num_params());
        if counts.0 != counts.1 {
            return outcome(false, format!("parameter counts differ: {} vs {}", counts.0, counts.1));
        }
        let (pw, hw) = train_supervised(pw, Some(&book), &dw, &tc).unwrap();
        let (pa, ha) = train_supervised(pa, None, &dw, &tc).unwrap();
        assert_eq!(hw.total_steps, ha.total_steps);
        let mw = evaluate(&pw, Some(&book), &w.test).unwrap().mse().unwrap();
        let ma = evaluate(&pa, None, &w.test).unwrap().mse().unwrap();
        if mw <= ma {
            wins += 1;
        }
        parts.push(format!("{mw:.3}/{ma:.3}"));
    }
    outcome(
        wins >= 7,
        format!(
            "wave ≤ window-embed test MSE in {wins}/10 seeds (≥ 7); {} parameters each, \
             150 steps; wave/window per seed {}",
            counts.0,
            parts.join(" ")
        ),
    )
}

/// Full UCR Chinatown files, if present.
fn chinatown_files() -> Option<(PathBuf, PathBuf)> {
    let mut roots = Vec::new();
    if let Ok(d) = std::env::var("WAVEQUANT_UCR_DIR") {
        roots.push(PathBuf::from(d));
    }
    roots.push(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/ucr"));
    for root in roots {
        for dir in [root.join("Chinatown"), root.clone()] {
            let (tr, te) = (dir.join("Chinatown_TRAIN.tsv"), dir.join("Chinatown_TEST.tsv"));
            if tr.is_file() && te.is_file() {
                return Some((tr, te));
            }
        }
    }
    None
}

fn fragment_files() -> (PathBuf, PathBuf) {
    let d = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data");
    (d.join("ChinatownFragment_TRAIN.tsv"), d.join("ChinatownFragment_TEST.tsv"))
}

fn classify_config(dir: &Path, name: &str, files: &(PathBuf, PathBuf)) -> (PathBuf, PathBuf) {
    let out = dir.join(name);
    let cfg = json!({
        "task": "classify",
        "regime": "supervised",
        "wavebook": { "filter": "db2", "m": 6, "lambda": 16 },
        "model": { "L": 3, "n_heads": 4 },
        "train": { "lr": 1e-3, "batch_size": 16, "max_epochs": 200, "patience": 30, "seed": 0 },
        "data": { "paths": [files.0, files.1] },
        "output_dir": out,
    });
    (write_config(dir, &format!("{name}.json"), &cfg), out.join("metrics.json"))
}

fn line_count(p: &Path) -> usize {
    fs::read_to_string(p).map(|t| t.lines().filter(|l| !l.trim().is_empty()).count()).unwrap_or(0)
}

// 10
fn chinatown(dir: &Path) -> (Outcome, Option<(PathBuf, PathBuf)>) {
    let Some(files) = chinatown_files() else {
        return (
            outcome(
                false,
                "UCR Chinatown not found (set WAVEQUANT_UCR_DIR or add data/ucr/Chinatown/\
                 Chinatown_{TRAIN,TEST}.tsv); criterion not evaluated"
                    .into(),
            ),
            None,
        );
    };
    let sizes = (line_count(&files.0), line_count(&files.1));
    if sizes != (20, 343) {
        return (outcome(false, format!("expected 20/343 series, found {}/{}", sizes.0, sizes.1)), None);
    }
    let (cfg, metrics) = classify_config(dir, "chinatown", &files);
    if let Err(e) = cli(&["pretrain", "--config", cfg.to_str().unwrap()]) {
        return (outcome(false, format!("pipeline failed: {e}")), None);
    }
    let acc = test_metric(&metrics, "accuracy").unwrap_or(f64::NAN);
    (
        outcome(acc > 0.80, format!("test accuracy {acc:.4} on 343 series (> 0.80), λ=16, L=3")),
        Some((cfg, metrics)),
    )
}

fn fragment_proxy(dir: &Path) -> Option<(f64, PathBuf, PathBuf)> {
    let (cfg, metrics) = classify_config(dir, "fragment", &fragment_files());
    cli(&["pretrain", "--config", cfg.to_str().unwrap()]).ok()?;
    Some((test_metric(&metrics, "accuracy")?, cfg, metrics))
}

fn rerun_identical(cfg: &Path, metrics: &Path) -> Result<bool, String> {
    let first = fs::read(metrics).map_err(|e| e.to_string())?;
    cli(&["pretrain", "--config", cfg.to_str().unwrap()])?;
    Ok(fs::read(metrics).map_err(|e| e.to_string())? == first)
}

fn main() {
    // the harness passes flags such as --nocapture; none apply here
    let filter_arg = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    if filter_arg.is_some_and(|f| !"acceptance".contains(&f)) {
        return;
    }
    let tmp = TempDir::new().expect("temporary directory");
    let dir = tmp.path();
    let mut r = Report { passed: 0, total: 0 };
    r.check(1, "filter unitarity", secs(1), filter_unitarity);
    r.check(2, "mother-wavelet admissibility", secs(1), mother_admissibility);
    r.check(3, "tokenizer algebra", secs(30), tokenizer_algebra);
    r.check(4, "worked recode example", None, worked_example);
    r.check(5, "gradient correctness", secs(60), gradient_correctness);
    let smoke = smoke_setup(dir);
    r.check(6, "learning smoke", secs(180), || learning_smoke(&smoke));
    let tri = run_tri_domain();
    r.check(7, "cross-domain zero-shot", secs(600), || cross_domain(&tri));
    r.check(8, "multi-domain vs single-domain", secs(900), || multi_vs_single(&tri));
    r.check(9, "tokenizer ablation direction", secs(600), ablation_direction);
    let mut real = None;
    r.check(10, "Chinatown classification", secs(120), || {
        let (o, run) = chinatown(dir);
        real = run;
        o
    });
    let proxy = fragment_proxy(dir);
    if let Some((acc, _, _)) = &proxy {
        println!(
            "INFO   vendored 41-series Chinatown fragment (not criterion 10): test accuracy {acc:.4} on 21 series"
        );
    }
    r.check(11, "determinism", None, || {
        let smoke_same = rerun_identical(&smoke.config, &smoke.metrics);
        let smoke_txt = match &smoke_same {
            Ok(true) => "criterion-6 metrics.json byte-identical".to_string(),
            Ok(false) => "criterion-6 metrics.json differs".to_string(),
            Err(e) => format!("criterion-6 rerun failed: {e}"),
        };
        match &real {
            Some((cfg, metrics)) => {
                let same = rerun_identical(cfg, metrics);
                let pass = matches!(smoke_same, Ok(true)) && matches!(same, Ok(true));
                outcome(pass, format!("{smoke_txt}; criterion-10 metrics.json identical: {same:?}"))
            }
            None => {
                let proxy_txt = match &proxy {
                    Some((_, cfg, metrics)) => match rerun_identical(cfg, metrics) {
                        Ok(true) => "fragment proxy byte-identical",
                        _ => "fragment proxy differs",
                    },
                    None => "fragment proxy did not run",
                };
                outcome(
                    false,
                    format!("{smoke_txt}; criterion 10 could not run, so its rerun is unverified ({proxy_txt})"),
                )
            }
        }
    });
    println!("acceptance: {}/{} criteria passed", r.passed, r.total);
    if r.passed != r.total {
        std::process::exit(1);
    }
}
