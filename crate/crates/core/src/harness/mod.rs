//! Model training and evaluation on the temporal test split.
//!
//! The built-in learner is logistic regression. Other models are scored
//! elsewhere and brought in as `project_id,score` files.

mod logreg;
mod metrics;

pub use logreg::{gradient, objective, sigmoid, train_logreg, LogisticModel, TrainConfig, TrainReport};
pub use metrics::{
    classification_metrics, error_metrics, pr_auc, pr_curve, roc_auc, roc_curve, ClassificationMetrics, Confusion,
    ErrorMetrics, LOGLOSS_EPSILON,
};

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dataset::{DatasetRow, LabeledDataset, Split};
use crate::features::{design_columns, encode, Encoding};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("both classes must be present")]
    SingleClass,
    #[error("no positive labels")]
    NoPositives,
    #[error("no rows")]
    Empty,
    #[error("need at least two training rows, got {0}")]
    TooFewRows(usize),
    #[error("length mismatch: {0} scores vs {1} labels")]
    LengthMismatch(usize, usize),
    #[error("non-finite value in model input")]
    NonFinite,
    #[error("schema mismatch: expected {expected} columns, found {found}")]
    SchemaMismatch { expected: usize, found: usize },
    #[error("predictions do not cover the test split: missing {missing:?}, unexpected {extra:?}")]
    Coverage { missing: Vec<String>, extra: Vec<String> },
    #[error("score {score} for {project_id} is outside [0, 1]")]
    Range { project_id: String, score: f64 },
    #[error("duplicate prediction for {0}")]
    Duplicate(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{file}: {reason}")]
    Format { file: &'static str, reason: String },
}

/// Scores for the Test split, keyed by project id.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub model_name: String,
    pub scores: BTreeMap<String, f64>,
    pub threshold: f64,
}

impl Predictions {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("project_id,score\n");
        for (id, s) in &self.scores {
            writeln!(out, "{id},{s}").unwrap();
        }
        out
    }

    /// Parses `project_id,score` rows and checks they cover exactly the Test
    /// split of `dataset`.
    pub fn from_csv(bytes: &[u8], model_name: &str, dataset: &LabeledDataset) -> Result<Self, HarnessError> {
        let fmt = |reason: String| HarnessError::Format { file: "predictions", reason };
        let mut r = csv::Reader::from_reader(bytes);
        let header = r.headers().map_err(|e| fmt(e.to_string()))?;
        if header.iter().collect::<Vec<_>>() != ["project_id", "score"] {
            return Err(fmt(format!("expected header project_id,score, found {header:?}")));
        }
        let mut scores = BTreeMap::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| fmt(e.to_string()))?;
            let id = rec[0].to_string();
            let score: f64 = rec[1].trim().parse().map_err(|e| fmt(format!("line {}: {e}", i + 2)))?;
            if !(0.0..=1.0).contains(&score) {
                return Err(HarnessError::Range { project_id: id, score });
            }
            if scores.insert(id.clone(), score).is_some() {
                return Err(HarnessError::Duplicate(id));
            }
        }
        let missing: Vec<String> = dataset
            .rows_in(Split::Test)
            .filter(|r| !scores.contains_key(&r.project_id))
            .map(|r| r.project_id.clone())
            .collect();
        let extra: Vec<String> =
            scores.keys().filter(|id| dataset.split_of(id) != Some(Split::Test)).cloned().collect();
        if !missing.is_empty() || !extra.is_empty() {
            return Err(HarnessError::Coverage { missing, extra });
        }
        Ok(Predictions { model_name: model_name.to_string(), scores, threshold: DEFAULT_THRESHOLD })
    }
}

pub fn load_external_predictions(path: &Path, model_name: &str, dataset: &LabeledDataset) -> Result<Predictions, HarnessError> {
    let bytes = fs::read(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
    Predictions::from_csv(&bytes, model_name, dataset)
}

/// Encoded rows and 0/1 targets.
pub fn design_matrix<'a>(rows: impl Iterator<Item = &'a DatasetRow>, encoding: Encoding) -> (Vec<Vec<f64>>, Vec<u8>) {
    rows.map(|r| (encode(&r.features, encoding), r.target())).unzip()
}

/// Fits logistic regression on the Train split only.
pub fn train_on_dataset(
    dataset: &LabeledDataset,
    encoding: Encoding,
    config: &TrainConfig,
) -> Result<(LogisticModel, TrainReport), HarnessError> {
    let (x, y) = design_matrix(dataset.rows_in(Split::Train), encoding);
    train_logreg(&design_columns(), &x, &y, config)
}

/// Scores every Test row.
pub fn predict_dataset(
    model: &LogisticModel,
    dataset: &LabeledDataset,
    encoding: Encoding,
    model_name: &str,
) -> Result<Predictions, HarnessError> {
    let test: Vec<&DatasetRow> = dataset.rows_in(Split::Test).collect();
    let (x, _) = design_matrix(test.iter().copied(), encoding);
    let p = model.predict(&design_columns(), &x)?;
    Ok(Predictions {
        model_name: model_name.to_string(),
        scores: test.iter().map(|r| r.project_id.clone()).zip(p).collect(),
        threshold: DEFAULT_THRESHOLD,
    })
}

/// Model file: an `encoding` line followed by the model's text form.
pub fn save_model(model: &LogisticModel, encoding: Encoding) -> String {
    format!("encoding {}\n{}", encoding.as_str(), model.to_text())
}

pub fn load_model(text: &str) -> Result<(LogisticModel, Encoding), HarnessError> {
    let fmt = |reason: String| HarnessError::Format { file: "model", reason };
    let (first, rest) = text.split_once('\n').ok_or_else(|| fmt("empty model file".into()))?;
    let encoding = first
        .strip_prefix("encoding ")
        .ok_or_else(|| fmt("first line must be `encoding <name>`".into()))?
        .parse()
        .map_err(fmt)?;
    Ok((LogisticModel::from_text(rest)?, encoding))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub model: String,
    pub n: usize,
    pub threshold: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub roc_auc: f64,
    pub pr_auc: f64,
    pub mse: f64,
    pub mae: f64,
    pub brier: f64,
    pub logloss: f64,
    pub confusion: Confusion,
}

/// Aligned `(scores, labels)` over the Test split in id order.
fn aligned(preds: &Predictions, dataset: &LabeledDataset) -> Result<(Vec<f64>, Vec<u8>), HarnessError> {
    let mut s = Vec::new();
    let mut y = Vec::new();
    let mut missing = Vec::new();
    let mut test: Vec<&DatasetRow> = dataset.rows_in(Split::Test).collect();
    test.sort_by(|a, b| a.project_id.cmp(&b.project_id));
    for r in test {
        match preds.scores.get(&r.project_id) {
            Some(&v) => {
                s.push(v);
                y.push(r.target());
            }
            None => missing.push(r.project_id.clone()),
        }
    }
    let extra: Vec<String> =
        preds.scores.keys().filter(|id| dataset.split_of(id) != Some(Split::Test)).cloned().collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(HarnessError::Coverage { missing, extra });
    }
    Ok((s, y))
}

pub fn evaluate(preds: &Predictions, dataset: &LabeledDataset) -> Result<MetricsReport, HarnessError> {
    let (s, y) = aligned(preds, dataset)?;
    let err = error_metrics(&s, &y)?;
    let cls = classification_metrics(&s, &y, preds.threshold)?;
    Ok(MetricsReport {
        model: preds.model_name.clone(),
        n: s.len(),
        threshold: preds.threshold,
        accuracy: cls.accuracy,
        f1: cls.f1,
        roc_auc: roc_auc(&s, &y)?,
        pr_auc: pr_auc(&s, &y)?,
        mse: err.mse,
        mae: err.mae,
        brier: err.brier,
        logloss: err.logloss,
        confusion: cls.confusion,
    })
}

pub const COMPARISON_HEADER: &str = "model,n,accuracy,f1,roc_auc,pr_auc,mse,mae,brier,logloss,tn,fp,fn,tp";

impl MetricsReport {
    pub fn to_text(&self) -> String {
        let c = &self.confusion;
        [
            format!("model={}", self.model),
            format!("n={}", self.n),
            format!("threshold={}", self.threshold),
            format!("accuracy={}", self.accuracy),
            format!("f1={}", self.f1),
            format!("roc_auc={}", self.roc_auc),
            format!("pr_auc={}", self.pr_auc),
            format!("mse={}", self.mse),
            format!("mae={}", self.mae),
            format!("brier={}", self.brier),
            format!("logloss={}", self.logloss),
            format!("tn={}", c.tn),
            format!("fp={}", c.fp),
            format!("fn={}", c.r#fn),
            format!("tp={}", c.tp),
        ]
        .join("\n")
            + "\n"
    }

    /// Inverse of [`to_text`](Self::to_text).
    pub fn from_text(text: &str) -> Result<Self, HarnessError> {
        let fmt = |reason: String| HarnessError::Format { file: "metrics report", reason };
        let kv = crate::dataset::parse_manifest(text).map_err(fmt)?;
        let get = |k: &str| kv.get(k).ok_or_else(|| fmt(format!("missing key {k}")));
        let num = |k: &str| get(k)?.parse::<f64>().map_err(|e| fmt(format!("{k}: {e}")));
        let count = |k: &str| get(k)?.parse::<u64>().map_err(|e| fmt(format!("{k}: {e}")));
        Ok(MetricsReport {
            model: get("model")?.clone(),
            n: count("n")? as usize,
            threshold: num("threshold")?,
            accuracy: num("accuracy")?,
            f1: num("f1")?,
            roc_auc: num("roc_auc")?,
            pr_auc: num("pr_auc")?,
            mse: num("mse")?,
            mae: num("mae")?,
            brier: num("brier")?,
            logloss: num("logloss")?,
            confusion: Confusion { tn: count("tn")?, fp: count("fp")?, r#fn: count("fn")?, tp: count("tp")? },
        })
    }

    pub fn comparison_row(&self) -> String {
        let c = &self.confusion;
        format!(
            "{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{},{},{},{}",
            self.model, self.n, self.accuracy, self.f1, self.roc_auc, self.pr_auc, self.mse, self.mae, self.brier,
            self.logloss, c.tn, c.fp, c.r#fn, c.tp
        )
    }
}

pub fn comparison_table(reports: &[MetricsReport]) -> String {
    let mut out = format!("{COMPARISON_HEADER}\n");
    for r in reports {
        out.push_str(&r.comparison_row());
        out.push('\n');
    }
    out
}

/// `(roc.csv, pr.csv)` curve points for plotting elsewhere.
pub fn curve_csvs(preds: &Predictions, dataset: &LabeledDataset) -> Result<(String, String), HarnessError> {
    let (s, y) = aligned(preds, dataset)?;
    let mut roc = String::from("threshold,fpr,tpr\n");
    for (t, fpr, tpr) in roc_curve(&s, &y)? {
        writeln!(roc, "{t},{fpr},{tpr}").unwrap();
    }
    let mut pr = String::from("threshold,recall,precision\n");
    for (t, r, p) in pr_curve(&s, &y)? {
        writeln!(pr, "{t},{r},{p}").unwrap();
    }
    Ok((roc, pr))
}
