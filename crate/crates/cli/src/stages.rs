//! One function per subcommand. Stages talk to each other only through files.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use rugguard_core::dataset::{parse_manifest, LabeledDataset, Provenance, SplitPolicy};
use rugguard_core::features::{
    extract, read_feature_records, write_feature_records, CausalCutoff, CutoffMode, Encoding, FeatureConfig,
    FeatureRecord,
};
use rugguard_core::harness::{
    comparison_table, curve_csvs, evaluate, load_external_predictions, load_model, predict_dataset, save_model,
    train_on_dataset, MetricsReport, TrainConfig,
};
use rugguard_core::ingest::{parse_trace_with, serialize_trace, IngestOptions, TRACE_EXTENSION};
use rugguard_core::labeler::{classify, read_labels_csv, write_labels_csv, DeadTokenCriteria, LabelRecord};
use rugguard_core::model::TokenTrace;
use rugguard_core::synthgen::{self, agreement, read_ground_truth, write_ground_truth, GeneratorConfig};
use rugguard_core::util::write_atomic;

use crate::args::*;
use crate::config::load_criteria;
use crate::manifest::{list_files, manifest_path, RunManifest};

pub const GROUND_TRUTH_FILE: &str = "ground_truth.csv";
const METRICS_SUFFIX: &str = ".metrics.txt";

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn trace_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let ext = format!(".{TRACE_EXTENSION}");
    let files: Vec<PathBuf> =
        list_files(dir)?.into_iter().filter(|n| n.ends_with(&ext)).map(|n| dir.join(n)).collect();
    if files.is_empty() {
        bail!("no .{TRACE_EXTENSION} files in {}", dir.display());
    }
    Ok(files)
}

/// Parses every trace in `dir`, in file-name order.
fn load_traces(dir: &Path, opts: IngestOptions) -> Result<Vec<TokenTrace>> {
    let traces = trace_files(dir)?
        .par_iter()
        .map(|p| parse_trace_with(p, opts).with_context(|| format!("ingesting {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let mut seen = BTreeSet::new();
    for t in &traces {
        if !seen.insert(t.project_id()) {
            bail!("project id {} appears in more than one trace file", t.project_id());
        }
    }
    Ok(traces)
}

fn generator_config(g: &GenArgs) -> GeneratorConfig {
    GeneratorConfig {
        seed: g.seed,
        n_projects: g.n,
        rug_fraction: g.rug_fraction,
        base_tx_rate: g.base_tx_rate,
        pump_intensity: g.pump_intensity,
        hard_mode: g.hard_mode,
        ..Default::default()
    }
}

fn record_gen(m: &mut RunManifest, g: &GenArgs) {
    m.set("seed", g.seed);
    m.set("n", g.n);
    m.set("rug_fraction", g.rug_fraction);
    m.set("base_tx_rate", g.base_tx_rate);
    m.set("pump_intensity", g.pump_intensity);
    m.set("hard_mode", g.hard_mode);
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let cfg = generator_config(&a.gen);
    cfg.validate()?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut m = RunManifest::new("simulate");
    record_gen(&mut m, &a.gen);
    let written = (0..cfg.n_projects)
        .into_par_iter()
        .map(|i| {
            let p = synthgen::generate_project(&cfg, i);
            let text = serialize_trace(&p.trace);
            let name = format!("{}.{TRACE_EXTENSION}", p.truth.project_id);
            write(&a.out.join(&name), text.as_bytes())?;
            Ok((name, text, p.truth))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut truths = Vec::with_capacity(written.len());
    for (name, text, truth) in written {
        m.output(&name, text.as_bytes());
        truths.push(truth);
    }
    let gt = write_ground_truth(&truths)?;
    write(&a.out.join(GROUND_TRUTH_FILE), &gt)?;
    m.output(GROUND_TRUTH_FILE, &gt);
    m.write(&manifest_path(&a.out, true))?;
    log::info!("simulated {} projects into {}", truths.len(), a.out.display());
    Ok(())
}

pub fn ingest(a: &IngestArgs) -> Result<()> {
    let opts = IngestOptions { order_tolerance_secs: a.order_tolerance_secs };
    let traces = load_traces(&a.input, opts)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut m = RunManifest::new("ingest");
    m.set("order_tolerance_secs", a.order_tolerance_secs);
    m.input_dir("traces", &a.input)?;
    for t in &traces {
        let name = format!("{}.{TRACE_EXTENSION}", t.project_id());
        let text = serialize_trace(t);
        write(&a.out.join(&name), text.as_bytes())?;
        m.output(&name, text.as_bytes());
    }
    m.set("traces", traces.len());
    m.write(&manifest_path(&a.out, true))?;
    log::info!("ingested {} traces", traces.len());
    Ok(())
}

fn label_traces(traces: &[TokenTrace], criteria: &DeadTokenCriteria) -> Result<Vec<LabelRecord>> {
    let mut records = traces
        .par_iter()
        .map(|t| {
            let v = classify(t, criteria).with_context(|| format!("labeling {}", t.project_id()))?;
            Ok(LabelRecord::from_verdict(t.project_id(), &v))
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| a.project_id.cmp(&b.project_id));
    Ok(records)
}

pub fn label(a: &LabelArgs) -> Result<()> {
    let criteria = load_criteria(a.criteria.as_deref())?;
    let traces = load_traces(&a.traces, IngestOptions::default())?;
    let records = label_traces(&traces, &criteria)?;
    let bytes = write_labels_csv(&records)?;
    write(&a.out, &bytes)?;
    let mut m = RunManifest::new("label");
    m.input_dir("traces", &a.traces)?;
    m.set("criteria_digest", criteria.digest());
    for line in criteria.canonical().lines() {
        if let Some((k, v)) = line.split_once('=') {
            m.set(&format!("criteria.{k}"), v);
        }
    }
    m.set("dead", records.iter().filter(|r| r.label.is_dead()).count());
    m.set("projects", records.len());
    m.output(&file_name(&a.out), &bytes);
    m.write(&manifest_path(&a.out, false))?;
    log::info!("labeled {} projects", records.len());
    Ok(())
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn cutoff_mode(c: &CutoffArgs) -> CutoffMode {
    match c.cutoff {
        CutoffKind::Prerug => CutoffMode::PreRugpull { safety_margin_hours: c.margin_hours },
        CutoffKind::FixedAge => CutoffMode::FixedAge { days: c.age_days },
    }
}

fn feature_config(c: &CutoffArgs) -> FeatureConfig {
    FeatureConfig {
        early_tweet_days: c.early_tweet_days,
        liquidity_window_days: c.liquidity_window_days,
        top_holders: c.top_holders,
        ..Default::default()
    }
}

pub fn extract_features(a: &ExtractArgs) -> Result<()> {
    let traces = load_traces(&a.traces, IngestOptions::default())?;
    let labels = read_labels_csv(&read(&a.labels)?).map_err(|e| anyhow!("{}: {e}", a.labels.display()))?;
    let by_id: BTreeMap<&str, &LabelRecord> = labels.iter().map(|l| (l.project_id.as_str(), l)).collect();
    let mode = cutoff_mode(&a.cutoff);
    let config = feature_config(&a.cutoff);
    let mut records = traces
        .par_iter()
        .map(|t| {
            let id = t.project_id();
            let label = by_id.get(id).ok_or_else(|| anyhow!("no label for project {id}"))?;
            let cutoff = CausalCutoff::resolve(t, mode, label).with_context(|| format!("cutoff for {id}"))?;
            let features = extract(t, &cutoff, &config).with_context(|| format!("extracting {id}"))?;
            Ok(FeatureRecord {
                project_id: id.to_string(),
                start_time: t.start_time(),
                cutoff_time: cutoff.cutoff_time,
                features,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| a.project_id.cmp(&b.project_id));
    if labels.len() > records.len() {
        log::warn!("{} labels have no trace", labels.len() - records.len());
    }
    let bytes = write_feature_records(&records)?;
    write(&a.out, &bytes)?;
    let mut m = RunManifest::new("extract");
    m.input_dir("traces", &a.traces)?;
    m.input_file("labels", &a.labels)?;
    m.set("cutoff", mode);
    m.set("early_tweet_days", config.early_tweet_days);
    m.set("liquidity_window_days", config.liquidity_window_days);
    m.set("top_holders", config.top_holders);
    m.set("projects", records.len());
    m.output(&file_name(&a.out), &bytes);
    m.write(&manifest_path(&a.out, false))?;
    log::info!("extracted features for {} projects", records.len());
    Ok(())
}

/// A key from the run manifest written next to `artifact`, if there is one.
fn upstream(artifact: &Path, key: &str) -> Option<String> {
    let text = fs::read_to_string(manifest_path(artifact, false)).ok()?;
    parse_manifest(&text).ok()?.remove(key)
}

pub fn split(a: &SplitArgs) -> Result<()> {
    let features = read_feature_records(&read(&a.features)?).map_err(|e| anyhow!("{}: {e}", a.features.display()))?;
    let labels = read_labels_csv(&read(&a.labels)?).map_err(|e| anyhow!("{}: {e}", a.labels.display()))?;
    let policy = match a.policy {
        PolicyKind::Temporal => SplitPolicy::TemporalByStart(a.fraction),
        PolicyKind::Explicit => {
            let path = a.test_ids.as_ref().ok_or_else(|| anyhow!("--policy explicit needs --test-ids"))?;
            let text = String::from_utf8(read(path)?).with_context(|| format!("{} is not UTF-8", path.display()))?;
            SplitPolicy::Explicit(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
        }
    };
    let provenance = Provenance {
        criteria_digest: upstream(&a.labels, "criteria_digest").unwrap_or_else(|| "unknown".into()),
        cutoff: upstream(&a.features, "cutoff").unwrap_or_else(|| "unknown".into()),
    };
    let ds = LabeledDataset::build(features, labels, policy, provenance)?;
    ds.export(&a.out)?;
    let mut m = RunManifest::new("split");
    m.input_file("features", &a.features)?;
    m.input_file("labels", &a.labels)?;
    if let Some(p) = &a.test_ids {
        m.input_file("test_ids", p)?;
    }
    m.set("split_policy", ds.policy());
    m.input_dir("dataset", &a.out)?;
    m.write(&manifest_path(&a.out, true))?;
    let b = ds.class_balance();
    log::info!("dataset written: {b}");
    Ok(())
}

fn train_config(f: &FitArgs) -> Result<(TrainConfig, Encoding)> {
    let encoding: Encoding = f.encoding.parse().map_err(|e: String| anyhow!(e))?;
    Ok((TrainConfig { l2_lambda: f.l2, tol: f.tol, max_iters: f.max_iters }, encoding))
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let (cfg, encoding) = train_config(&a.fit)?;
    let ds = LabeledDataset::import(&a.dataset)?;
    let (model, report) = train_on_dataset(&ds, encoding, &cfg)?;
    if !report.converged {
        log::warn!("training stopped after {} iterations without converging", report.iterations);
    }
    let text = save_model(&model, encoding);
    write(&a.out, text.as_bytes())?;
    let mut m = RunManifest::new("train");
    m.input_dir("dataset", &a.dataset)?;
    m.set("encoding", encoding.as_str());
    m.set("l2_lambda", cfg.l2_lambda);
    m.set("tol", cfg.tol);
    m.set("max_iters", cfg.max_iters);
    m.set("iterations", report.iterations);
    m.set("converged", report.converged);
    if let Some(loss) = report.loss_history.last() {
        m.set("final_loss", loss);
    }
    m.output(&file_name(&a.out), text.as_bytes());
    m.write(&manifest_path(&a.out, false))?;
    Ok(())
}

fn check_name(name: &str) -> Result<()> {
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.')) {
        bail!("report name {name:?} must use only letters, digits, '-', '_' and '.'");
    }
    Ok(())
}

pub fn evaluate_model(a: &EvaluateArgs) -> Result<()> {
    let ds = LabeledDataset::import(&a.dataset)?;
    let mut m = RunManifest::new("evaluate");
    m.input_dir("dataset", &a.dataset)?;
    let (mut preds, name) = match (&a.model, &a.predictions) {
        (Some(path), _) => {
            let text = String::from_utf8(read(path)?).with_context(|| format!("{} is not UTF-8", path.display()))?;
            let (model, encoding) = load_model(&text)?;
            let name = a.name.clone().unwrap_or_else(|| "logreg".into());
            m.input_file("model", path)?;
            (predict_dataset(&model, &ds, encoding, &name)?, name)
        }
        (None, Some(path)) => {
            let name = a.name.clone().unwrap_or_else(|| {
                path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
            });
            m.input_file("predictions", path)?;
            (load_external_predictions(path, &name, &ds)?, name)
        }
        (None, None) => bail!("one of --model or --predictions is required"),
    };
    check_name(&name)?;
    preds.threshold = a.threshold;
    let report = evaluate(&preds, &ds)?;
    let (roc, pr) = curve_csvs(&preds, &ds)?;
    fs::create_dir_all(&a.report).with_context(|| format!("creating {}", a.report.display()))?;
    let mut outputs = vec![
        (format!("{name}{METRICS_SUFFIX}"), report.to_text()),
        (format!("{name}.roc.csv"), roc),
        (format!("{name}.pr.csv"), pr),
    ];
    if a.model.is_some() {
        outputs.push((format!("{name}.predictions.csv"), preds.to_csv()));
    }
    for (file, text) in &outputs {
        write(&a.report.join(file), text.as_bytes())?;
        m.output(file, text.as_bytes());
    }
    m.set("model", &name);
    m.set("threshold", a.threshold);
    m.write(&a.report.join(format!("{name}.manifest")))?;
    log::info!("{name}: roc_auc={} brier={}", report.roc_auc, report.brier);
    Ok(())
}

pub fn report(a: &ReportArgs) -> Result<String> {
    let mut reports = Vec::new();
    for name in list_files(&a.reports)?.into_iter().filter(|n| n.ends_with(METRICS_SUFFIX)) {
        let path = a.reports.join(&name);
        let text = String::from_utf8(read(&path)?).with_context(|| format!("{} is not UTF-8", path.display()))?;
        reports.push(MetricsReport::from_text(&text).with_context(|| format!("parsing {}", path.display()))?);
    }
    if reports.is_empty() {
        bail!("no *{METRICS_SUFFIX} files in {}", a.reports.display());
    }
    let table = comparison_table(&reports);
    if let Some(out) = &a.out {
        write(out, table.as_bytes())?;
        let mut m = RunManifest::new("report");
        m.input_dir("reports", &a.reports)?;
        m.output(&file_name(out), table.as_bytes());
        m.write(&manifest_path(out, false))?;
    }
    Ok(table)
}

/// Compares `labels.csv` against the generator's ground truth.
fn agreement_text(labels: &Path, ground_truth: &Path) -> Result<String> {
    let labels = read_labels_csv(&read(labels)?).map_err(|e| anyhow!("{}: {e}", labels.display()))?;
    let truth = read_ground_truth(&read(ground_truth)?).map_err(|e| anyhow!("{}: {e}", ground_truth.display()))?;
    let by_id: BTreeMap<&str, &LabelRecord> = labels.iter().map(|l| (l.project_id.as_str(), l)).collect();
    let pairs = truth
        .iter()
        .map(|t| {
            let l = by_id.get(t.project_id.as_str()).ok_or_else(|| anyhow!("no label for {}", t.project_id))?;
            Ok((t, (l.label, l.rugpull_block)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(agreement(pairs.into_iter()).to_string())
}

pub fn pipeline(a: &PipelineArgs) -> Result<()> {
    let out = &a.out;
    let corpus = out.join("corpus");
    let traces = out.join("traces");
    let labels = out.join("labels.csv");
    let features = out.join("features.csv");
    let dataset = out.join("dataset");
    let model = out.join("model.txt");
    let reports = out.join("reports");
    let table = out.join("comparison.csv");

    simulate(&SimulateArgs { gen: a.gen.clone(), out: corpus.clone() })?;
    ingest(&IngestArgs { input: corpus.clone(), out: traces.clone(), order_tolerance_secs: 0 })?;
    label(&LabelArgs { traces: traces.clone(), criteria: a.criteria.clone(), out: labels.clone() })?;
    let agreement = agreement_text(&labels, &corpus.join(GROUND_TRUTH_FILE))?;
    write(&out.join("agreement.txt"), agreement.as_bytes())?;
    extract_features(&ExtractArgs {
        traces: traces.clone(),
        labels: labels.clone(),
        cutoff: a.cutoff.clone(),
        out: features.clone(),
    })?;
    split(&SplitArgs {
        features: features.clone(),
        labels: labels.clone(),
        policy: PolicyKind::Temporal,
        fraction: a.fraction,
        test_ids: None,
        out: dataset.clone(),
    })?;
    train(&TrainArgs { dataset: dataset.clone(), fit: a.fit.clone(), out: model.clone() })?;
    evaluate_model(&EvaluateArgs {
        dataset: dataset.clone(),
        model: Some(model.clone()),
        predictions: None,
        name: None,
        threshold: 0.5,
        report: reports.clone(),
    })?;
    report(&ReportArgs { reports: reports.clone(), out: Some(table.clone()) })?;

    let mut m = RunManifest::new("pipeline");
    record_gen(&mut m, &a.gen);
    m.set("fraction", a.fraction);
    m.set("cutoff", cutoff_mode(&a.cutoff));
    m.set("encoding", &a.fit.encoding);
    m.set("l2_lambda", a.fit.l2);
    for (name, dir) in [("corpus", &corpus), ("traces", &traces), ("dataset", &dataset), ("reports", &reports)] {
        m.set(&format!("output.{name}.sha256"), crate::manifest::dir_digest(dir)?);
    }
    for (name, file) in [
        ("labels.csv", &labels),
        ("features.csv", &features),
        ("model.txt", &model),
        ("comparison.csv", &table),
        ("agreement.txt", &out.join("agreement.txt")),
    ] {
        m.set(&format!("output.{name}.sha256"), crate::manifest::file_digest(file)?);
    }
    m.write(&manifest_path(out, true))?;
    Ok(())
}
