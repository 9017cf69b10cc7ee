//! Line-delimited trace interchange format.
//!
//! One record per line, fields separated by `|`, timestamps in ISO-8601
//! UTC, amounts as plain decimal strings with at most 18 fractional digits.
//! Blank lines and lines starting with `#` are ignored.
//!
//! ```text
//! META|<project_id>|<network>|<token_type>|<start_time>|<observation_end>|<total_supply>|<deployer>|<pool>
//! XFER|<ts>|<block>|<from>|<to>|<amount>
//! SWAP|<ts>|<block>|BUY|SELL|<token_amount>|<quote_amount>|<price>
//! LADD|<ts>|<block>|<token_amount>|<quote_amount>
//! LREM|<ts>|<block>|<token_amount>|<quote_amount>
//! LPMINT|<ts>|<block>|<amount>
//! LPBURN|<ts>|<block>|<amount>
//! TWEET|<ts>|<count>
//! GHIT|<ts>|<count>
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::IngestError;
use crate::model::{
    Address, Network, OnChainEvent, OnChainKind, OsintEvent, OsintKind, SwapDirection, TokenTrace, TokenType,
    TraceMeta,
};
use crate::time::Timestamp;
use crate::util::write_atomic;

/// File extension used for normalized trace files.
pub const TRACE_EXTENSION: &str = "trace";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IngestOptions {
    /// Largest tolerated backwards jump (seconds) within one event stream.
    /// Regressions up to this size are re-sorted with a warning; larger
    /// ones are rejected.
    pub order_tolerance_secs: i64,
}

pub fn parse_trace(path: &Path) -> Result<TokenTrace, IngestError> {
    parse_trace_with(path, IngestOptions::default())
}

pub fn parse_trace_with(path: &Path, opts: IngestOptions) -> Result<TokenTrace, IngestError> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
    parse_trace_str(&text, opts)
}

struct LineFields<'a> {
    line: usize,
    fields: Vec<&'a str>,
}

impl<'a> LineFields<'a> {
    fn err(&self, reason: impl Into<String>) -> IngestError {
        IngestError::Parse { line: self.line, reason: reason.into() }
    }

    fn expect_len(&self, n: usize) -> Result<(), IngestError> {
        if self.fields.len() == n {
            Ok(())
        } else {
            Err(self.err(format!("{} record expects {} fields, found {}", self.fields[0], n, self.fields.len())))
        }
    }

    fn get<T: FromStr>(&self, idx: usize, what: &str) -> Result<T, IngestError>
    where
        T::Err: std::fmt::Display,
    {
        self.fields[idx].parse::<T>().map_err(|e| self.err(format!("bad {what}: {e}")))
    }

    fn address(&self, idx: usize) -> Result<Address, IngestError> {
        Address::new(self.fields[idx]).map_err(|e| self.err(e.to_string()))
    }
}

pub fn parse_trace_str(text: &str, opts: IngestOptions) -> Result<TokenTrace, IngestError> {
    let mut meta: Option<TraceMeta> = None;
    let mut onchain: Vec<(usize, OnChainEvent)> = Vec::new();
    let mut osint: Vec<(usize, OsintEvent)> = Vec::new();
    let mut onchain_max: Option<Timestamp> = None;
    let mut osint_max: Option<Timestamp> = None;
    let mut resort = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let rec = LineFields { line, fields: raw.split('|').collect() };
        match rec.fields[0] {
            "META" => {
                rec.expect_len(9)?;
                if meta.is_some() {
                    return Err(IngestError::Schema(format!("duplicate META record on line {line}")));
                }
                meta = Some(TraceMeta {
                    project_id: rec.fields[1].to_string(),
                    network: Network::from_name(rec.fields[2]),
                    token_type: TokenType::from_name(rec.fields[3]),
                    start_time: rec.get(4, "start_time")?,
                    observation_end: rec.get(5, "observation_end")?,
                    total_supply: rec.get(6, "total_supply")?,
                    deployer: rec.address(7)?,
                    pool: rec.address(8)?,
                });
            }
            tag @ ("XFER" | "SWAP" | "LADD" | "LREM" | "LPMINT" | "LPBURN") => {
                let kind = match tag {
                    "XFER" => {
                        rec.expect_len(6)?;
                        OnChainKind::Transfer { from: rec.address(3)?, to: rec.address(4)?, amount: rec.get(5, "amount")? }
                    }
                    "SWAP" => {
                        rec.expect_len(7)?;
                        let direction = match rec.fields[3] {
                            "BUY" => SwapDirection::Buy,
                            "SELL" => SwapDirection::Sell,
                            other => return Err(rec.err(format!("bad swap direction {other:?}"))),
                        };
                        OnChainKind::Swap {
                            direction,
                            token_amount: rec.get(4, "token_amount")?,
                            quote_amount: rec.get(5, "quote_amount")?,
                            price: rec.get(6, "price")?,
                        }
                    }
                    "LADD" | "LREM" => {
                        rec.expect_len(5)?;
                        let token_amount = rec.get(3, "token_amount")?;
                        let quote_amount = rec.get(4, "quote_amount")?;
                        if tag == "LADD" {
                            OnChainKind::LiquidityAdd { token_amount, quote_amount }
                        } else {
                            OnChainKind::LiquidityRemove { token_amount, quote_amount }
                        }
                    }
                    _ => {
                        rec.expect_len(4)?;
                        let amount = rec.get(3, "amount")?;
                        if tag == "LPMINT" {
                            OnChainKind::LpMint { amount }
                        } else {
                            OnChainKind::LpBurn { amount }
                        }
                    }
                };
                let ev = OnChainEvent { timestamp: rec.get(1, "timestamp")?, block_height: rec.get(2, "block")?, kind };
                resort |= check_order(&mut onchain_max, ev.timestamp, line, opts)?;
                onchain.push((line, ev));
            }
            tag @ ("TWEET" | "GHIT") => {
                rec.expect_len(3)?;
                let kind = if tag == "TWEET" { OsintKind::Tweet } else { OsintKind::GoogleHit };
                let ev = OsintEvent { timestamp: rec.get(1, "timestamp")?, kind, count: rec.get(2, "count")? };
                if ev.count == 0 {
                    return Err(rec.err("count must be at least 1"));
                }
                resort |= check_order(&mut osint_max, ev.timestamp, line, opts)?;
                osint.push((line, ev));
            }
            other => return Err(rec.err(format!("unknown record tag {other:?}"))),
        }
    }

    let meta = meta.ok_or_else(|| IngestError::Schema("missing META record".into()))?;
    if resort {
        onchain.sort_by_key(|(_, e)| (e.timestamp, e.block_height));
        osint.sort_by_key(|(_, e)| e.timestamp);
    }
    let onchain = onchain.into_iter().map(|(_, e)| e).collect();
    let osint = osint.into_iter().map(|(_, e)| e).collect();
    Ok(TokenTrace::new(meta, onchain, osint)?)
}

fn check_order(
    max_seen: &mut Option<Timestamp>,
    t: Timestamp,
    line: usize,
    opts: IngestOptions,
) -> Result<bool, IngestError> {
    match *max_seen {
        Some(m) if t < m => {
            let regression_secs = m - t;
            if regression_secs > opts.order_tolerance_secs {
                return Err(IngestError::Order { line, regression_secs });
            }
            log::warn!("line {line}: timestamp regresses by {regression_secs}s; re-sorting");
            Ok(true)
        }
        _ => {
            *max_seen = Some(t);
            Ok(false)
        }
    }
}

/// Canonical serialization; `parse_trace_str` inverts it exactly.
///
/// Events from both streams are merged by timestamp, on-chain first on ties.
pub fn serialize_trace(trace: &TokenTrace) -> String {
    let m = trace.meta();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "META|{}|{}|{}|{}|{}|{}|{}|{}",
        m.project_id, m.network, m.token_type, m.start_time, m.observation_end, m.total_supply, m.deployer, m.pool
    );
    let onchain = trace.onchain_events();
    let osint = trace.osint_events();
    let (mut i, mut j) = (0, 0);
    while i < onchain.len() || j < osint.len() {
        let take_onchain = match (onchain.get(i), osint.get(j)) {
            (Some(a), Some(b)) => a.timestamp <= b.timestamp,
            (Some(_), None) => true,
            _ => false,
        };
        if take_onchain {
            write_onchain(&mut out, &onchain[i]);
            i += 1;
        } else {
            let e = &osint[j];
            let tag = match e.kind {
                OsintKind::Tweet => "TWEET",
                OsintKind::GoogleHit => "GHIT",
            };
            let _ = writeln!(out, "{tag}|{}|{}", e.timestamp, e.count);
            j += 1;
        }
    }
    out
}

fn write_onchain(out: &mut String, e: &OnChainEvent) {
    let (ts, b) = (e.timestamp, e.block_height);
    let _ = match &e.kind {
        OnChainKind::Transfer { from, to, amount } => writeln!(out, "XFER|{ts}|{b}|{from}|{to}|{amount}"),
        OnChainKind::Swap { direction, token_amount, quote_amount, price } => {
            let dir = match direction {
                SwapDirection::Buy => "BUY",
                SwapDirection::Sell => "SELL",
            };
            writeln!(out, "SWAP|{ts}|{b}|{dir}|{token_amount}|{quote_amount}|{price}")
        }
        OnChainKind::LiquidityAdd { token_amount, quote_amount } => {
            writeln!(out, "LADD|{ts}|{b}|{token_amount}|{quote_amount}")
        }
        OnChainKind::LiquidityRemove { token_amount, quote_amount } => {
            writeln!(out, "LREM|{ts}|{b}|{token_amount}|{quote_amount}")
        }
        OnChainKind::LpMint { amount } => writeln!(out, "LPMINT|{ts}|{b}|{amount}"),
        OnChainKind::LpBurn { amount } => writeln!(out, "LPBURN|{ts}|{b}|{amount}"),
    };
}

pub fn write_trace(path: &Path, trace: &TokenTrace) -> Result<(), IngestError> {
    write_atomic(path, serialize_trace(trace).as_bytes())
        .map_err(|source| IngestError::Io { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelError;

    const HEADER: &str = "META|tok-1|ethereum|meme|2024-01-01T00:00:00Z|2024-01-10T00:00:00Z|1000000|0xdep|0xpool\n";

    #[test]
    fn metadata_only_file_parses_with_empty_streams() {
        let t = parse_trace_str(HEADER, IngestOptions::default()).unwrap();
        assert_eq!(t.project_id(), "tok-1");
        assert_eq!(t.meta().network, Network::Ethereum);
        assert!(t.onchain_events().is_empty());
        assert!(t.osint_events().is_empty());
        assert_eq!(serialize_trace(&t), HEADER);
    }

    #[test]
    fn malformed_line_is_reported_by_number() {
        let text = format!(
            "{HEADER}# comment\nLADD|2024-01-01T01:00:00Z|10|100|50\nSWAP|2024-01-01T02:00:00Z|20|BUY|1|oops|0.5\n"
        );
        match parse_trace_str(&text, IngestOptions::default()) {
            Err(IngestError::Parse { line, reason }) => {
                assert_eq!(line, 4);
                assert!(reason.contains("quote_amount"), "{reason}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        let text = format!("{HEADER}BOGUS|x\n");
        assert!(matches!(parse_trace_str(&text, IngestOptions::default()), Err(IngestError::Parse { line: 2, .. })));
        let text = format!("{HEADER}GHIT|2024-01-01T00:00:00Z|0\n");
        assert!(matches!(parse_trace_str(&text, IngestOptions::default()), Err(IngestError::Parse { line: 2, .. })));
    }

    #[test]
    fn missing_or_duplicate_meta_is_a_schema_error() {
        let text = "LADD|2024-01-01T01:00:00Z|10|100|50\n";
        assert!(matches!(parse_trace_str(text, IngestOptions::default()), Err(IngestError::Schema(_))));
        let text = format!("{HEADER}{HEADER}");
        assert!(matches!(parse_trace_str(&text, IngestOptions::default()), Err(IngestError::Schema(_))));
    }

    #[test]
    fn regressions_within_tolerance_are_sorted() {
        let text = format!(
            "{HEADER}LADD|2024-01-01T01:00:30Z|10|100|50\nLPMINT|2024-01-01T01:00:00Z|10|5\nTWEET|2024-01-02T00:00:00Z|3\n"
        );
        assert!(matches!(
            parse_trace_str(&text, IngestOptions::default()),
            Err(IngestError::Order { line: 3, regression_secs: 30 })
        ));
        let t = parse_trace_str(&text, IngestOptions { order_tolerance_secs: 60 }).unwrap();
        assert!(matches!(t.onchain_events()[0].kind, OnChainKind::LpMint { .. }));
        assert_eq!(t.osint_events().len(), 1);
    }

    #[test]
    fn validation_failures_surface_as_model_errors() {
        let text = format!("{HEADER}LADD|2025-01-01T01:00:00Z|10|100|50\n");
        assert!(matches!(
            parse_trace_str(&text, IngestOptions::default()),
            Err(IngestError::Invalid(ModelError::EventOutOfWindow { .. }))
        ));
    }
}
