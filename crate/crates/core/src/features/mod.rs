//! Multimodal feature extraction at a causal cutoff.
//!
//! Every feature is a function of the events strictly before the cutoff
//! instant. [`leakage_audit`] checks that contract by mutating the
//! post-cutoff part of a trace and asserting bit-identical output.

mod audit;
mod encode;
mod stats;

pub use audit::{leakage_audit, AuditError, AuditReport, Violation};
pub use encode::{
    design_columns, encode, read_feature_records, write_feature_records, Encoding, FeatureRecord, FEATURE_NAMES,
    NUMERIC_FEATURES,
};
pub use stats::{correlation_matrix, descriptive_stats, pearson_correlation, FeatureStats, NeumaierSum, StatsError};

use std::fmt;

use ethnum::I256;
use thiserror::Error;

use crate::decimal::Decimal;
use crate::ingest::{derive_holder_snapshot, HolderError};
use crate::labeler::{Label, LabelRecord};
use crate::model::{is_burn_address, Network, OnChainKind, OsintKind, PoolReplayer, ReplayError, TokenTrace, TokenType};
use crate::time::{Timestamp, SECS_PER_DAY, SECS_PER_HOUR};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeatureError {
    #[error("cutoff {cutoff} does not follow project start {start}")]
    EmptyWindow { cutoff: Timestamp, start: Timestamp },
    #[error("cutoff {cutoff} lies after observation end {end}")]
    BeyondObservation { cutoff: Timestamp, end: Timestamp },
    #[error(transparent)]
    Holder(#[from] HolderError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("overflow computing {0}")]
    Overflow(&'static str),
}

/// How the cutoff instant is chosen for a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffMode {
    /// Dead projects: one second before `min(rugpull_time, death_onset)`
    /// less the margin. Alive projects: the observation end.
    PreRugpull { safety_margin_hours: u32 },
    /// Fixed project age, capped at the observation end.
    FixedAge { days: u32 },
    Explicit(Timestamp),
}

impl Default for CutoffMode {
    fn default() -> Self {
        CutoffMode::PreRugpull { safety_margin_hours: 0 }
    }
}

impl fmt::Display for CutoffMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CutoffMode::PreRugpull { safety_margin_hours } => write!(f, "prerug:margin_hours={safety_margin_hours}"),
            CutoffMode::FixedAge { days } => write!(f, "fixed_age:days={days}"),
            CutoffMode::Explicit(t) => write!(f, "explicit:{t}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CausalCutoff {
    pub cutoff_time: Timestamp,
    pub mode: CutoffMode,
}

impl CausalCutoff {
    pub fn resolve(trace: &TokenTrace, mode: CutoffMode, label: &LabelRecord) -> Result<Self, FeatureError> {
        let end = trace.observation_end();
        let cutoff_time = match mode {
            CutoffMode::PreRugpull { safety_margin_hours } => {
                let anchor = match label.label {
                    Label::Alive => None,
                    Label::Dead => [label.rugpull_time, label.death_onset].into_iter().flatten().min(),
                };
                match anchor {
                    Some(a) => a - safety_margin_hours as i64 * SECS_PER_HOUR - 1,
                    None => end,
                }
            }
            CutoffMode::FixedAge { days } => (trace.start_time() + days as i64 * SECS_PER_DAY).min(end),
            CutoffMode::Explicit(t) => t,
        };
        let cutoff = CausalCutoff { cutoff_time, mode };
        cutoff.check(trace)?;
        Ok(cutoff)
    }

    pub fn explicit(t: Timestamp) -> Self {
        CausalCutoff { cutoff_time: t, mode: CutoffMode::Explicit(t) }
    }

    fn check(&self, trace: &TokenTrace) -> Result<(), FeatureError> {
        if self.cutoff_time <= trace.start_time() {
            return Err(FeatureError::EmptyWindow { cutoff: self.cutoff_time, start: trace.start_time() });
        }
        if self.cutoff_time > trace.observation_end() {
            return Err(FeatureError::BeyondObservation { cutoff: self.cutoff_time, end: trace.observation_end() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureConfig {
    /// Length of the "early" tweet window from project start.
    pub early_tweet_days: u32,
    /// Horizon of the trailing liquidity change.
    pub liquidity_window_days: u32,
    /// Denominator floor (quote units) for the relative liquidity change.
    pub liquidity_change_floor: Decimal,
    pub top_holders: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            early_tweet_days: 7,
            liquidity_window_days: 7,
            liquidity_change_floor: Decimal::ONE,
            top_holders: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureVector {
    pub transaction_count: u64,
    pub holder_variance_top1: Decimal,
    pub token_concentration: Decimal,
    pub liquidity_change: Decimal,
    pub lp_supply: Decimal,
    pub max_price_q: [Decimal; 4],
    pub volume_total: Decimal,
    pub volume_q4_share: Decimal,
    pub tweet_volume_early: u64,
    pub tweet_volume_total: u64,
    pub google_hits: u64,
    pub network: Network,
    pub token_type: TokenType,
    pub project_age_days: Decimal,
}

/// Typed value of one named feature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureValue {
    Count(u64),
    Amount(Decimal),
    Category(String),
}

impl FeatureValue {
    pub fn to_f64(&self) -> Option<f64> {
        match self {
            FeatureValue::Count(n) => Some(*n as f64),
            FeatureValue::Amount(d) => Some(d.to_f64()),
            FeatureValue::Category(_) => None,
        }
    }
}

impl fmt::Display for FeatureValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureValue::Count(n) => write!(f, "{n}"),
            FeatureValue::Amount(d) => write!(f, "{d}"),
            FeatureValue::Category(c) => f.write_str(c),
        }
    }
}

impl FeatureVector {
    /// All features in canonical column order (see [`FEATURE_NAMES`]).
    pub fn values(&self) -> [FeatureValue; 17] {
        use FeatureValue::{Amount, Category, Count};
        let [q1, q2, q3, q4] = self.max_price_q;
        [
            Count(self.transaction_count),
            Amount(self.holder_variance_top1),
            Amount(self.token_concentration),
            Amount(self.liquidity_change),
            Amount(self.lp_supply),
            Amount(q1),
            Amount(q2),
            Amount(q3),
            Amount(q4),
            Amount(self.volume_total),
            Amount(self.volume_q4_share),
            Count(self.tweet_volume_early),
            Count(self.tweet_volume_total),
            Count(self.google_hits),
            Amount(self.project_age_days),
            Category(self.network.name().to_string()),
            Category(self.token_type.name().to_string()),
        ]
    }

    pub fn numeric_values(&self) -> Vec<f64> {
        self.values().iter().filter_map(FeatureValue::to_f64).collect()
    }

    /// Names of the features whose values differ.
    pub fn diff(&self, other: &FeatureVector) -> Vec<&'static str> {
        FEATURE_NAMES
            .iter()
            .zip(self.values().iter().zip(other.values().iter()))
            .filter(|(_, (a, b))| a != b)
            .map(|(n, _)| *n)
            .collect()
    }
}

/// Computes the feature vector from events strictly before `cutoff`.
pub fn extract(trace: &TokenTrace, cutoff: &CausalCutoff, config: &FeatureConfig) -> Result<FeatureVector, FeatureError> {
    cutoff.check(trace)?;
    let c = cutoff.cutoff_time;
    let start = trace.start_time();
    let pre: Vec<_> = trace.onchain_events().iter().take_while(|e| e.timestamp < c).collect();

    let transaction_count = pre.iter().filter(|e| e.kind.is_transaction()).count() as u64;

    // Holder distribution, ignoring the pool contract and burn sinks.
    let snapshot = derive_holder_snapshot(trace, c - 1)?;
    let pool = &trace.meta().pool;
    let mut holdings: Vec<Decimal> = snapshot
        .balances
        .iter()
        .filter(|(a, _)| *a != pool && !is_burn_address(a))
        .map(|(_, b)| *b)
        .collect();
    holdings.sort_unstable_by(|a, b| b.cmp(a));
    let circulating: Decimal = holdings.iter().sum();
    let top: Decimal = holdings.iter().take(config.top_holders).sum();
    let token_concentration = if circulating.is_zero() {
        Decimal::ZERO
    } else {
        top.checked_div(circulating).ok_or(FeatureError::Overflow("token_concentration"))?
    };
    let top_pct = holdings.len().div_ceil(100);
    let holder_variance_top1 = population_variance(&holdings[..top_pct]).ok_or(FeatureError::Overflow("holder_variance_top1"))?;

    // Pool state now and one liquidity window earlier.
    let mut replay = PoolReplayer::new(trace);
    replay.advance_before(c - config.liquidity_window_days as i64 * SECS_PER_DAY)?;
    let reserve_before = replay.quote_reserve();
    replay.advance_before(c)?;
    let state = replay.state(c);
    let liquidity_change = (state.quote_reserve - reserve_before)
        .checked_div(reserve_before.max(config.liquidity_change_floor))
        .ok_or(FeatureError::Overflow("liquidity_change"))?;

    // Lifetime quartiles of [start, cutoff).
    let span = c - start;
    // Quartile k starts once 4 * (t - start) >= k * span, without rounding.
    let quartile = |t: Timestamp| (1..4).take_while(|k| 4 * (t - start) >= k * span).count();
    let mut max_price_q = [Decimal::ZERO; 4];
    let mut volume_total = Decimal::ZERO;
    let mut volume_q4 = Decimal::ZERO;
    for e in &pre {
        if let OnChainKind::Swap { quote_amount, price, .. } = e.kind {
            let q = quartile(e.timestamp);
            max_price_q[q] = max_price_q[q].max(price);
            volume_total = volume_total.checked_add(quote_amount).ok_or(FeatureError::Overflow("volume_total"))?;
            if q == 3 {
                volume_q4 += quote_amount;
            }
        }
    }
    let volume_q4_share = if volume_total.is_zero() {
        Decimal::ZERO
    } else {
        volume_q4.checked_div(volume_total).ok_or(FeatureError::Overflow("volume_q4_share"))?
    };

    let early_end = (start + config.early_tweet_days as i64 * SECS_PER_DAY).min(c);
    let (mut tweet_volume_early, mut tweet_volume_total, mut google_hits) = (0u64, 0u64, 0u64);
    for e in trace.osint_events().iter().take_while(|e| e.timestamp < c) {
        let n = e.count as u64;
        match e.kind {
            OsintKind::Tweet => {
                tweet_volume_total += n;
                if e.timestamp < early_end {
                    tweet_volume_early += n;
                }
            }
            OsintKind::GoogleHit => google_hits += n,
        }
    }

    Ok(FeatureVector {
        transaction_count,
        holder_variance_top1,
        token_concentration,
        liquidity_change,
        lp_supply: state.lp_supply,
        max_price_q,
        volume_total,
        volume_q4_share,
        tweet_volume_early,
        tweet_volume_total,
        google_hits,
        network: trace.meta().network.clone(),
        token_type: trace.meta().token_type.clone(),
        project_age_days: Decimal::from_int(span)
            .checked_div_int(SECS_PER_DAY)
            .ok_or(FeatureError::Overflow("project_age_days"))?,
    })
}

/// Exact population variance, `(k * sum(b^2) - sum(b)^2) / k^2`, computed on
/// raw 10^-18 units and truncated to 18 fractional digits.
fn population_variance(values: &[Decimal]) -> Option<Decimal> {
    if values.len() < 2 {
        return Some(Decimal::ZERO);
    }
    let k = I256::from(values.len() as u64);
    let mut s1 = I256::ZERO;
    let mut s2 = I256::ZERO;
    for v in values {
        let r = v.raw();
        s1 = s1.checked_add(r)?;
        s2 = s2.checked_add(r.checked_mul(r)?)?;
    }
    let num = k.checked_mul(s2)?.checked_sub(s1.checked_mul(s1)?)?;
    let den = k.checked_mul(k)?.checked_mul(I256::new(1_000_000_000_000_000_000))?;
    Some(Decimal::from_raw(num / den))
}
