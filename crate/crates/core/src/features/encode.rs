use std::collections::HashSet;

use super::FeatureVector;
use crate::decimal::Decimal;
use crate::model::{is_valid_identifier, Network, TokenType};
use crate::time::Timestamp;

/// Canonical feature column order.
pub const FEATURE_NAMES: [&str; 17] = [
    "transaction_count",
    "holder_variance_top1",
    "token_concentration",
    "liquidity_change",
    "lp_supply",
    "max_price_q1",
    "max_price_q2",
    "max_price_q3",
    "max_price_q4",
    "volume_total",
    "volume_q4_share",
    "tweet_volume_early",
    "tweet_volume_total",
    "google_hits",
    "project_age_days",
    "network",
    "token_type",
];

pub const NUMERIC_FEATURES: usize = 15;

// Indices into the numeric block that get a log transform.
const HEAVY_TAILED: [bool; NUMERIC_FEATURES] = [
    true, true, false, true, true, true, true, true, true, true, false, true, true, true, false,
];

const NETWORK_LEVELS: [&str; 3] = ["ethereum", "bsc", "other"];
const TOKEN_TYPE_LEVELS: [&str; 4] = ["utility", "meme", "governance", "other"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Encoding {
    /// Untransformed numeric values.
    Raw,
    /// `sign(x) * ln(1 + |x|)` on heavy-tailed columns.
    #[default]
    Log1p,
}

impl Encoding {
    pub fn as_str(self) -> &'static str {
        match self {
            Encoding::Raw => "raw",
            Encoding::Log1p => "log1p",
        }
    }
}

impl std::str::FromStr for Encoding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw" => Ok(Encoding::Raw),
            "log1p" => Ok(Encoding::Log1p),
            other => Err(format!("unknown encoding {other:?} (expected raw or log1p)")),
        }
    }
}

/// Column names of the model design matrix: numeric features, then one-hot
/// indicators for network and token type.
pub fn design_columns() -> Vec<String> {
    let mut cols: Vec<String> = FEATURE_NAMES[..NUMERIC_FEATURES].iter().map(|s| s.to_string()).collect();
    cols.extend(NETWORK_LEVELS.iter().map(|l| format!("network={l}")));
    cols.extend(TOKEN_TYPE_LEVELS.iter().map(|l| format!("token_type={l}")));
    cols
}

fn signed_log1p(x: f64) -> f64 {
    x.signum() * x.abs().ln_1p()
}

pub fn encode(fv: &FeatureVector, encoding: Encoding) -> Vec<f64> {
    let mut row: Vec<f64> = fv
        .numeric_values()
        .into_iter()
        .zip(HEAVY_TAILED)
        .map(|(x, heavy)| if heavy && encoding == Encoding::Log1p { signed_log1p(x) } else { x })
        .collect();
    let net = match fv.network {
        Network::Ethereum => 0,
        Network::Bsc => 1,
        Network::Other(_) => 2,
    };
    let tt = match fv.token_type {
        TokenType::Utility => 0,
        TokenType::Meme => 1,
        TokenType::Governance => 2,
        TokenType::Other(_) => 3,
    };
    row.extend((0..NETWORK_LEVELS.len()).map(|i| if i == net { 1.0 } else { 0.0 }));
    row.extend((0..TOKEN_TYPE_LEVELS.len()).map(|i| if i == tt { 1.0 } else { 0.0 }));
    row
}

/// One row of `features.csv`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureRecord {
    pub project_id: String,
    pub start_time: Timestamp,
    pub cutoff_time: Timestamp,
    pub features: FeatureVector,
}

pub fn write_feature_records(records: &[FeatureRecord]) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["project_id", "start_time", "cutoff_time"];
    header.extend(FEATURE_NAMES);
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![r.project_id.clone(), r.start_time.to_string(), r.cutoff_time.to_string()];
        row.extend(r.features.values().iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

pub fn read_feature_records(bytes: &[u8]) -> Result<Vec<FeatureRecord>, String> {
    let mut r = csv::Reader::from_reader(bytes);
    let headers = r.headers().map_err(|e| e.to_string())?.clone();
    let expected: Vec<&str> = ["project_id", "start_time", "cutoff_time"].into_iter().chain(FEATURE_NAMES).collect();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err("unexpected features.csv header".into());
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| e.to_string())?;
        let err = |col: usize, e: String| format!("line {line}, column {}: {e}", expected[col]);
        let dec = |col: usize| rec[col].parse::<Decimal>().map_err(|e| err(col, e.to_string()));
        let int = |col: usize| rec[col].parse::<u64>().map_err(|e| err(col, e.to_string()));
        let ts = |col: usize| rec[col].parse::<Timestamp>().map_err(|e| err(col, e.to_string()));
        let project_id = rec[0].to_string();
        if !is_valid_identifier(&project_id) || !seen.insert(project_id.clone()) {
            return Err(err(0, format!("invalid or duplicate project id {project_id:?}")));
        }
        out.push(FeatureRecord {
            project_id,
            start_time: ts(1)?,
            cutoff_time: ts(2)?,
            features: FeatureVector {
                transaction_count: int(3)?,
                holder_variance_top1: dec(4)?,
                token_concentration: dec(5)?,
                liquidity_change: dec(6)?,
                lp_supply: dec(7)?,
                max_price_q: [dec(8)?, dec(9)?, dec(10)?, dec(11)?],
                volume_total: dec(12)?,
                volume_q4_share: dec(13)?,
                tweet_volume_early: int(14)?,
                tweet_volume_total: int(15)?,
                google_hits: int(16)?,
                project_age_days: dec(17)?,
                network: Network::from_name(&rec[18]),
                token_type: TokenType::from_name(&rec[19]),
            },
        });
    }
    Ok(out)
}
