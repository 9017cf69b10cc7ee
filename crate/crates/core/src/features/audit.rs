use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{extract, CausalCutoff, FeatureConfig, FeatureError};
use crate::decimal::Decimal;
use crate::model::{Address, OnChainEvent, OnChainKind, OsintEvent, OsintKind, SwapDirection, TokenTrace};
use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub trial: usize,
    pub field: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditReport {
    pub trials: usize,
    pub mutations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuditError {
    #[error("trace has no events at or after the cutoff")]
    NoPostCutoffEvents,
    #[error("feature extraction failed: {0}")]
    Extract(#[from] FeatureError),
    #[error("post-cutoff mutation changed {} (first at trial {})", .0[0].field, .0[0].trial)]
    Failure(Vec<Violation>),
}

/// Mutates only events at or after the cutoff and checks that [`extract`]
/// returns the same vector every time.
pub fn leakage_audit(
    trace: &TokenTrace,
    cutoff: &CausalCutoff,
    config: &FeatureConfig,
    n_trials: usize,
    seed: u64,
) -> Result<AuditReport, AuditError> {
    let c = cutoff.cutoff_time;
    let post_onchain = trace.onchain_events().iter().any(|e| e.timestamp >= c);
    let post_osint = trace.osint_events().iter().any(|e| e.timestamp >= c);
    if !post_onchain && !post_osint {
        return Err(AuditError::NoPostCutoffEvents);
    }
    let reference = extract(trace, cutoff, config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = Vec::new();
    let mut mutations = 0;
    for trial in 0..n_trials {
        let (meta, mut onchain, mut osint) = trace.clone().into_parts();
        let window = (c, meta.observation_end);
        let addrs = [meta.deployer.clone(), meta.pool.clone(), Address::new(format!("audit{trial}")).unwrap()];
        for _ in 0..rng.random_range(1..=3) {
            if rng.random_bool(0.5) {
                mutate_onchain(&mut rng, &mut onchain, window, &addrs);
            } else {
                mutate_osint(&mut rng, &mut osint, window);
            }
            mutations += 1;
        }
        let mutated = TokenTrace::new(meta, onchain, osint).expect("post-cutoff mutation keeps the trace valid");
        let fv = extract(&mutated, cutoff, config)?;
        violations.extend(reference.diff(&fv).into_iter().map(|field| Violation { trial, field }));
    }
    if violations.is_empty() {
        Ok(AuditReport { trials: n_trials, mutations })
    } else {
        Err(AuditError::Failure(violations))
    }
}

/// Removes every event at or after `cutoff` from both streams.
#[cfg(test)]
pub(crate) fn truncate_at(trace: &TokenTrace, cutoff: Timestamp) -> TokenTrace {
    let (meta, mut onchain, mut osint) = trace.clone().into_parts();
    onchain.retain(|e| e.timestamp < cutoff);
    osint.retain(|e| e.timestamp < cutoff);
    TokenTrace::new(meta, onchain, osint).expect("subset of a valid trace")
}

#[derive(Clone, Copy)]
enum Op {
    Insert,
    Delete,
    Perturb,
}

fn pick_op(rng: &mut ChaCha8Rng, has_post: bool) -> Op {
    if !has_post {
        return Op::Insert;
    }
    *[Op::Insert, Op::Delete, Op::Perturb].choose(rng).unwrap()
}

fn amount(rng: &mut ChaCha8Rng) -> Decimal {
    Decimal::from_parts(rng.random_range(1..1_000_000_000), rng.random_range(0..12))
}

fn random_kind(rng: &mut ChaCha8Rng, addrs: &[Address]) -> OnChainKind {
    match rng.random_range(0..6) {
        0 => OnChainKind::Transfer {
            from: addrs.choose(rng).unwrap().clone(),
            to: addrs.choose(rng).unwrap().clone(),
            amount: amount(rng),
        },
        1 => OnChainKind::Swap {
            direction: if rng.random_bool(0.5) { SwapDirection::Buy } else { SwapDirection::Sell },
            token_amount: amount(rng),
            quote_amount: amount(rng),
            price: amount(rng),
        },
        2 => OnChainKind::LiquidityAdd { token_amount: amount(rng), quote_amount: amount(rng) },
        3 => OnChainKind::LiquidityRemove { token_amount: amount(rng), quote_amount: amount(rng) },
        4 => OnChainKind::LpMint { amount: amount(rng) },
        _ => OnChainKind::LpBurn { amount: amount(rng) },
    }
}

fn perturb_kind(rng: &mut ChaCha8Rng, kind: &mut OnChainKind, addrs: &[Address]) {
    match kind {
        OnChainKind::Transfer { to, amount: a, .. } => {
            *a = amount(rng);
            *to = addrs.choose(rng).unwrap().clone();
        }
        OnChainKind::Swap { token_amount, quote_amount, price, .. } => {
            *token_amount = amount(rng);
            *quote_amount = amount(rng);
            *price = amount(rng);
        }
        OnChainKind::LiquidityAdd { token_amount, quote_amount }
        | OnChainKind::LiquidityRemove { token_amount, quote_amount } => {
            *token_amount = amount(rng);
            *quote_amount = amount(rng);
        }
        OnChainKind::LpMint { amount: a } | OnChainKind::LpBurn { amount: a } => *a = amount(rng),
    }
}

fn mutate_onchain(
    rng: &mut ChaCha8Rng,
    events: &mut Vec<OnChainEvent>,
    (cutoff, end): (Timestamp, Timestamp),
    addrs: &[Address],
) {
    let first_post = events.partition_point(|e| e.timestamp < cutoff);
    let n_post = events.len() - first_post;
    match pick_op(rng, n_post > 0) {
        Op::Insert => {
            let t = Timestamp::from_secs(rng.random_range(cutoff.secs()..=end.secs()));
            let at = events.partition_point(|e| e.timestamp <= t);
            // Reuse a neighbour's block so heights stay non-decreasing.
            let block = if at > 0 {
                events[at - 1].block_height
            } else {
                events.get(at).map_or(0, |e| e.block_height)
            };
            events.insert(at, OnChainEvent { timestamp: t, block_height: block, kind: random_kind(rng, addrs) });
        }
        Op::Delete => {
            events.remove(first_post + rng.random_range(0..n_post));
        }
        Op::Perturb => {
            let i = first_post + rng.random_range(0..n_post);
            if rng.random_bool(0.2) {
                events[i].kind = random_kind(rng, addrs);
            } else {
                perturb_kind(rng, &mut events[i].kind, addrs);
            }
        }
    }
}

fn mutate_osint(rng: &mut ChaCha8Rng, events: &mut Vec<OsintEvent>, (cutoff, end): (Timestamp, Timestamp)) {
    let first_post = events.partition_point(|e| e.timestamp < cutoff);
    let n_post = events.len() - first_post;
    let kind = |rng: &mut ChaCha8Rng| if rng.random_bool(0.5) { OsintKind::Tweet } else { OsintKind::GoogleHit };
    match pick_op(rng, n_post > 0) {
        Op::Insert => {
            let t = Timestamp::from_secs(rng.random_range(cutoff.secs()..=end.secs()));
            let at = events.partition_point(|e| e.timestamp <= t);
            let ev = OsintEvent { timestamp: t, kind: kind(rng), count: rng.random_range(1..10_000) };
            events.insert(at, ev);
        }
        Op::Delete => {
            events.remove(first_post + rng.random_range(0..n_post));
        }
        Op::Perturb => {
            let i = first_post + rng.random_range(0..n_post);
            events[i].count = rng.random_range(1..10_000);
            events[i].kind = kind(rng);
        }
    }
}
