//! Labeled dataset assembly, temporal train/test split and file export.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::features::{read_feature_records, write_feature_records, FeatureRecord, FeatureVector};
use crate::labeler::{read_labels_csv, write_labels_csv, Label, LabelRecord};
use crate::time::Timestamp;
use crate::util::{sha256_hex, write_atomic};

pub const SCHEMA_VERSION: &str = "1";

pub const FEATURES_FILE: &str = "features.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const SPLIT_FILE: &str = "split.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("feature and label ids differ: without labels {without_labels:?}, without features {without_features:?}")]
    KeyMismatch { without_labels: Vec<String>, without_features: Vec<String> },
    #[error("duplicate project id {0:?}")]
    DuplicateId(String),
    #[error("test fraction {0} is outside [0, 1]")]
    InvalidFraction(f64),
    #[error("explicit test ids not in the dataset: {0:?}")]
    UnknownTestIds(Vec<String>),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{file}: {reason}")]
    Format { file: &'static str, reason: String },
    #[error("{file}: digest {actual} does not match manifest {expected}")]
    DigestMismatch { file: &'static str, expected: String, actual: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SplitPolicy {
    /// The `fraction` of projects with the latest start times go to Test;
    /// ties on start time are broken by project id.
    TemporalByStart(f64),
    /// Exactly these project ids go to Test.
    Explicit(BTreeSet<String>),
}

impl fmt::Display for SplitPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitPolicy::TemporalByStart(frac) => write!(f, "temporal:fraction={frac}"),
            SplitPolicy::Explicit(ids) => write!(f, "explicit:count={}", ids.len()),
        }
    }
}

/// Where the labels and features came from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Provenance {
    pub criteria_digest: String,
    pub cutoff: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetRow {
    pub project_id: String,
    pub start_time: Timestamp,
    pub cutoff_time: Timestamp,
    pub features: FeatureVector,
    pub label: LabelRecord,
}

impl DatasetRow {
    /// 1 for Dead, 0 for Alive.
    pub fn target(&self) -> u8 {
        u8::from(self.label.label == Label::Dead)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassBalance {
    pub train_positive: usize,
    pub train_negative: usize,
    pub test_positive: usize,
    pub test_negative: usize,
}

impl fmt::Display for ClassBalance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "train: {} dead / {} alive, test: {} dead / {} alive",
            self.train_positive, self.train_negative, self.test_positive, self.test_negative
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    rows: Vec<DatasetRow>,
    split: BTreeMap<String, Split>,
    policy: SplitPolicy,
    schema_version: String,
    provenance: Provenance,
}

impl LabeledDataset {
    /// Joins features with labels by project id and assigns the split.
    pub fn build(
        features: Vec<FeatureRecord>,
        labels: Vec<LabelRecord>,
        policy: SplitPolicy,
        provenance: Provenance,
    ) -> Result<Self, DatasetError> {
        let mut by_id: HashMap<String, LabelRecord> = HashMap::new();
        for l in labels {
            if let Some(dup) = by_id.insert(l.project_id.clone(), l) {
                return Err(DatasetError::DuplicateId(dup.project_id));
            }
        }
        let mut rows = Vec::with_capacity(features.len());
        let mut without_labels = Vec::new();
        for f in features {
            match by_id.remove(&f.project_id) {
                Some(label) => rows.push(DatasetRow {
                    project_id: f.project_id,
                    start_time: f.start_time,
                    cutoff_time: f.cutoff_time,
                    features: f.features,
                    label,
                }),
                None => without_labels.push(f.project_id),
            }
        }
        let mut without_features: Vec<String> = by_id.into_keys().collect();
        if !without_labels.is_empty() || !without_features.is_empty() {
            without_labels.sort();
            without_features.sort();
            return Err(DatasetError::KeyMismatch { without_labels, without_features });
        }
        rows.sort_by(|a, b| (a.start_time, &a.project_id).cmp(&(b.start_time, &b.project_id)));
        if let Some(w) = rows.windows(2).find(|w| w[0].project_id == w[1].project_id) {
            return Err(DatasetError::DuplicateId(w[0].project_id.clone()));
        }

        let test: BTreeSet<&str> = match &policy {
            SplitPolicy::TemporalByStart(frac) => {
                if !(0.0..=1.0).contains(frac) {
                    return Err(DatasetError::InvalidFraction(*frac));
                }
                let n_test = (frac * rows.len() as f64).round() as usize;
                rows[rows.len() - n_test..].iter().map(|r| r.project_id.as_str()).collect()
            }
            SplitPolicy::Explicit(ids) => {
                let known: BTreeSet<&str> = rows.iter().map(|r| r.project_id.as_str()).collect();
                let unknown: Vec<String> = ids.iter().filter(|i| !known.contains(i.as_str())).cloned().collect();
                if !unknown.is_empty() {
                    return Err(DatasetError::UnknownTestIds(unknown));
                }
                ids.iter().map(String::as_str).collect()
            }
        };
        let split = rows
            .iter()
            .map(|r| {
                let s = if test.contains(r.project_id.as_str()) { Split::Test } else { Split::Train };
                (r.project_id.clone(), s)
            })
            .collect();
        Ok(LabeledDataset { rows, split, policy, schema_version: SCHEMA_VERSION.to_string(), provenance })
    }

    /// Rows ordered by `(start_time, project_id)`.
    pub fn rows(&self) -> &[DatasetRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn split_of(&self, project_id: &str) -> Option<Split> {
        self.split.get(project_id).copied()
    }

    pub fn rows_in(&self, split: Split) -> impl Iterator<Item = &DatasetRow> {
        self.rows.iter().filter(move |r| self.split[&r.project_id] == split)
    }

    pub fn policy(&self) -> &SplitPolicy {
        &self.policy
    }

    pub fn schema_version(&self) -> &str {
        &self.schema_version
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn class_balance(&self) -> ClassBalance {
        let mut b = ClassBalance::default();
        for r in &self.rows {
            let dead = r.target() == 1;
            match (self.split[&r.project_id], dead) {
                (Split::Train, true) => b.train_positive += 1,
                (Split::Train, false) => b.train_negative += 1,
                (Split::Test, true) => b.test_positive += 1,
                (Split::Test, false) => b.test_negative += 1,
            }
        }
        b
    }

    /// Latest Train start and earliest Test start, if both splits are non-empty.
    pub fn split_boundary(&self) -> Option<(Timestamp, Timestamp)> {
        let train = self.rows_in(Split::Train).map(|r| r.start_time).max()?;
        let test = self.rows_in(Split::Test).map(|r| r.start_time).min()?;
        Some((train, test))
    }

    fn file_bytes(&self) -> Result<[(&'static str, Vec<u8>); 3], DatasetError> {
        let csv_err = |file| move |e: csv::Error| DatasetError::Format { file, reason: e.to_string() };
        let features: Vec<FeatureRecord> = self
            .rows
            .iter()
            .map(|r| FeatureRecord {
                project_id: r.project_id.clone(),
                start_time: r.start_time,
                cutoff_time: r.cutoff_time,
                features: r.features.clone(),
            })
            .collect();
        let labels: Vec<LabelRecord> = self.rows.iter().map(|r| r.label.clone()).collect();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["project_id", "split"]).map_err(csv_err(SPLIT_FILE))?;
        for r in &self.rows {
            w.write_record([r.project_id.as_str(), self.split[&r.project_id].as_str()])
                .map_err(csv_err(SPLIT_FILE))?;
        }
        let split = w.into_inner().map_err(|e| csv_err(SPLIT_FILE)(e.into_error().into()))?;
        Ok([
            (FEATURES_FILE, write_feature_records(&features).map_err(csv_err(FEATURES_FILE))?),
            (LABELS_FILE, write_labels_csv(&labels).map_err(csv_err(LABELS_FILE))?),
            (SPLIT_FILE, split),
        ])
    }

    /// The manifest text for this dataset, as written by [`export`](Self::export).
    pub fn manifest(&self) -> Result<String, DatasetError> {
        let files = self.file_bytes()?;
        Ok(render_manifest(self, &files))
    }

    /// Writes the three CSV files and `manifest.txt` into `dir`, each atomically.
    pub fn export(&self, dir: &Path) -> Result<(), DatasetError> {
        if self.is_empty() {
            return Err(DatasetError::EmptyDataset);
        }
        let files = self.file_bytes()?;
        let manifest = render_manifest(self, &files);
        for (name, bytes) in files.iter().map(|(n, b)| (*n, b.as_slice())).chain([(MANIFEST_FILE, manifest.as_bytes())]) {
            let path = dir.join(name);
            write_atomic(&path, bytes).map_err(|source| DatasetError::Io { path, source })?;
        }
        Ok(())
    }

    /// Reads a directory written by [`export`](Self::export), verifying digests.
    pub fn import(dir: &Path) -> Result<Self, DatasetError> {
        let read = |name: &'static str| {
            let path = dir.join(name);
            fs::read(&path).map_err(|source| DatasetError::Io { path, source })
        };
        let manifest_text = String::from_utf8(read(MANIFEST_FILE)?)
            .map_err(|e| DatasetError::Format { file: MANIFEST_FILE, reason: e.to_string() })?;
        let manifest = parse_manifest(&manifest_text)
            .map_err(|reason| DatasetError::Format { file: MANIFEST_FILE, reason })?;
        let field = |key: &str| {
            manifest.get(key).cloned().ok_or_else(|| DatasetError::Format {
                file: MANIFEST_FILE,
                reason: format!("missing key {key}"),
            })
        };

        let mut contents = Vec::new();
        for name in [FEATURES_FILE, LABELS_FILE, SPLIT_FILE] {
            let bytes = read(name)?;
            let expected = field(&format!("{name}.sha256"))?;
            let actual = sha256_hex(&bytes);
            if actual != expected {
                return Err(DatasetError::DigestMismatch { file: name, expected, actual });
            }
            contents.push(bytes);
        }
        let fmt_err = |file| move |reason: String| DatasetError::Format { file, reason };
        let features = read_feature_records(&contents[0]).map_err(fmt_err(FEATURES_FILE))?;
        let labels = read_labels_csv(&contents[1]).map_err(fmt_err(LABELS_FILE))?;
        let split = read_split_csv(&contents[2]).map_err(fmt_err(SPLIT_FILE))?;

        let policy = match field("split_policy")?.as_str() {
            s if s.starts_with("temporal:fraction=") => {
                let frac = s["temporal:fraction=".len()..]
                    .parse()
                    .map_err(|e| DatasetError::Format { file: MANIFEST_FILE, reason: format!("bad fraction: {e}") })?;
                SplitPolicy::TemporalByStart(frac)
            }
            s if s.starts_with("explicit:") => SplitPolicy::Explicit(
                split.iter().filter(|(_, s)| **s == Split::Test).map(|(id, _)| id.clone()).collect(),
            ),
            other => return Err(DatasetError::Format { file: MANIFEST_FILE, reason: format!("unknown split policy {other}") }),
        };
        let provenance = Provenance { criteria_digest: field("criteria_digest")?, cutoff: field("cutoff")? };
        let mut ds = LabeledDataset::build(features, labels, policy, provenance)?;
        if ds.split != split {
            return Err(DatasetError::Format { file: SPLIT_FILE, reason: "split does not follow the recorded policy".into() });
        }
        ds.schema_version = field("schema_version")?;
        Ok(ds)
    }
}

fn render_manifest(ds: &LabeledDataset, files: &[(&'static str, Vec<u8>)]) -> String {
    let balance = ds.class_balance();
    let mut lines = vec![
        format!("schema_version={}", ds.schema_version),
        format!("row_count={}", ds.rows.len()),
        format!("train_count={}", balance.train_positive + balance.train_negative),
        format!("test_count={}", balance.test_positive + balance.test_negative),
        format!("train_dead={}", balance.train_positive),
        format!("test_dead={}", balance.test_positive),
        format!("split_policy={}", ds.policy),
        format!("criteria_digest={}", ds.provenance.criteria_digest),
        format!("cutoff={}", ds.provenance.cutoff),
    ];
    let mut all = String::new();
    for (name, bytes) in files {
        let d = sha256_hex(bytes);
        all.push_str(&d);
        lines.push(format!("{name}.sha256={d}"));
    }
    lines.push(format!("content_digest={}", sha256_hex(all.as_bytes())));
    lines.join("\n") + "\n"
}

/// Parses a flat `key=value` file; blank lines and `#` comments are skipped.
pub fn parse_manifest(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key=value", i + 1))?;
        if out.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(format!("line {}: duplicate key {}", i + 1, k.trim()));
        }
    }
    Ok(out)
}

fn read_split_csv(bytes: &[u8]) -> Result<BTreeMap<String, Split>, String> {
    let mut r = csv::Reader::from_reader(bytes);
    let mut out = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let split = match &rec[1] {
            "train" => Split::Train,
            "test" => Split::Test,
            other => return Err(format!("line {}: unknown split {other:?}", i + 2)),
        };
        if out.insert(rec[0].to_string(), split).is_some() {
            return Err(format!("line {}: duplicate id {}", i + 2, &rec[0]));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decimal::Decimal;
    use crate::model::{Network, TokenType};
    use proptest::prelude::*;

    fn fv(n: u64) -> FeatureVector {
        FeatureVector {
            transaction_count: n,
            holder_variance_top1: Decimal::ZERO,
            token_concentration: Decimal::ONE,
            liquidity_change: Decimal::from_parts(-5, 1),
            lp_supply: Decimal::from_int(10),
            max_price_q: [Decimal::from_parts(1, 3); 4],
            volume_total: Decimal::from_int(n as i64),
            volume_q4_share: Decimal::from_parts(25, 2),
            tweet_volume_early: 1,
            tweet_volume_total: 2,
            google_hits: 3,
            network: Network::Bsc,
            token_type: TokenType::Utility,
            project_age_days: Decimal::from_int(4),
        }
    }

    fn inputs(starts: &[i64]) -> (Vec<FeatureRecord>, Vec<LabelRecord>) {
        let mut f = Vec::new();
        let mut l = Vec::new();
        for (i, &s) in starts.iter().enumerate() {
            let id = format!("p{i:03}");
            let dead = i % 3 == 0;
            f.push(FeatureRecord {
                project_id: id.clone(),
                start_time: Timestamp::from_secs(s),
                cutoff_time: Timestamp::from_secs(s + 100),
                features: fv(i as u64),
            });
            l.push(LabelRecord {
                project_id: id,
                label: if dead { Label::Dead } else { Label::Alive },
                rugpull_time: dead.then(|| Timestamp::from_secs(s + 500)),
                rugpull_block: dead.then_some(42),
                death_onset: dead.then(|| Timestamp::from_secs(s + 600)),
            });
        }
        (f, l)
    }

    fn temporal(starts: &[i64], frac: f64) -> LabeledDataset {
        let (f, l) = inputs(starts);
        LabeledDataset::build(f, l, SplitPolicy::TemporalByStart(frac), Provenance::default()).unwrap()
    }

    #[test]
    fn latest_starts_go_to_test() {
        let starts = [50, 10, 90, 30, 70, 20, 100, 60, 40, 80];
        let ds = temporal(&starts, 0.2);
        let test: Vec<_> = ds.rows_in(Split::Test).map(|r| r.start_time.secs()).collect();
        assert_eq!(test, vec![90, 100]);
        assert_eq!(ds.rows_in(Split::Train).count(), 8);
    }

    #[test]
    fn equal_starts_break_ties_by_id() {
        let ds = temporal(&[7; 10], 0.2);
        let test: Vec<_> = ds.rows_in(Split::Test).map(|r| r.project_id.as_str()).collect();
        assert_eq!(test, ["p008", "p009"]);
    }

    #[test]
    fn mismatched_ids_are_listed() {
        let (f, mut l) = inputs(&[1, 2, 3]);
        l[1].project_id = "zzz".into();
        let err = LabeledDataset::build(f, l, SplitPolicy::TemporalByStart(0.2), Provenance::default()).unwrap_err();
        match err {
            DatasetError::KeyMismatch { without_labels, without_features } => {
                assert_eq!(without_labels, ["p001"]);
                assert_eq!(without_features, ["zzz"]);
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn explicit_policy_and_unknown_ids() {
        let (f, l) = inputs(&[1, 2, 3]);
        let ids: BTreeSet<String> = ["p000".to_string()].into();
        let ds = LabeledDataset::build(f.clone(), l.clone(), SplitPolicy::Explicit(ids), Provenance::default()).unwrap();
        assert_eq!(ds.split_of("p000"), Some(Split::Test));
        assert_eq!(ds.split_of("p002"), Some(Split::Train));
        let bad: BTreeSet<String> = ["nope".to_string()].into();
        assert!(matches!(
            LabeledDataset::build(f, l, SplitPolicy::Explicit(bad), Provenance::default()),
            Err(DatasetError::UnknownTestIds(_))
        ));
    }

    #[test]
    fn export_import_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (f, l) = inputs(&[5, 4, 3, 2, 1, 9, 8]);
        let prov = Provenance { criteria_digest: "abc".into(), cutoff: "prerug:margin_hours=0".into() };
        let ds = LabeledDataset::build(f, l, SplitPolicy::TemporalByStart(0.3), prov).unwrap();
        ds.export(dir.path()).unwrap();
        assert_eq!(LabeledDataset::import(dir.path()).unwrap(), ds);

        let ids: BTreeSet<String> = ["p001".to_string(), "p004".to_string()].into();
        let (f, l) = inputs(&[5, 4, 3, 2, 1]);
        let ds = LabeledDataset::build(f, l, SplitPolicy::Explicit(ids), Provenance::default()).unwrap();
        ds.export(dir.path()).unwrap();
        assert_eq!(LabeledDataset::import(dir.path()).unwrap(), ds);
    }

    #[test]
    fn digest_tracks_every_row() {
        let base = temporal(&[1, 2, 3, 4], 0.25);
        let digest = |ds: &LabeledDataset| parse_manifest(&ds.manifest().unwrap()).unwrap()["content_digest"].clone();
        let d0 = digest(&base);
        assert_eq!(digest(&base.clone()), d0);
        for i in 0..base.len() {
            let mut changed = base.clone();
            changed.rows[i].features.google_hits += 1;
            assert_ne!(digest(&changed), d0, "row {i}");
        }
    }

    #[test]
    fn tampered_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        temporal(&[1, 2, 3, 4], 0.25).export(dir.path()).unwrap();
        let path = dir.path().join(FEATURES_FILE);
        let mut bytes = fs::read(&path).unwrap();
        let last = bytes.len() - 2;
        bytes[last] ^= 1;
        fs::write(&path, bytes).unwrap();
        assert!(matches!(LabeledDataset::import(dir.path()), Err(DatasetError::DigestMismatch { .. })));
    }

    #[test]
    fn empty_dataset_is_refused() {
        let ds = LabeledDataset::build(vec![], vec![], SplitPolicy::TemporalByStart(0.2), Provenance::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(ds.export(dir.path()), Err(DatasetError::EmptyDataset)));
    }

    proptest! {
        #[test]
        fn temporal_split_invariants(starts in prop::collection::vec(0i64..50, 1..120), frac in 0.0f64..=1.0) {
            let ds = temporal(&starts, frac);
            let n = starts.len() as f64;
            let n_test = ds.rows_in(Split::Test).count() as f64;
            prop_assert!((n_test - frac * n).abs() <= 1.0);
            prop_assert_eq!(ds.rows_in(Split::Train).count() + n_test as usize, starts.len());
            // Train rows strictly precede Test rows in (start, id) order.
            let keys: Vec<_> = ds.rows().iter().map(|r| (r.start_time, r.project_id.clone(), ds.split_of(&r.project_id).unwrap())).collect();
            for w in keys.windows(2) {
                prop_assert!(w[0].2 <= w[1].2);
            }
            if let Some((train, test)) = ds.split_boundary() {
                prop_assert!(train <= test);
            }
        }
    }
}
