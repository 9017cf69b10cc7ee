//! Shared domain types: token traces, on-chain and OSINT events, pool state.

mod pool;

pub use pool::{replay_pool_state, PoolReplayer, PoolState, ReplayError};

use std::fmt;

use thiserror::Error;

use crate::decimal::Decimal;
use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid identifier {0:?}: must be non-empty and free of whitespace, '|', ',' and '/'")]
    InvalidIdentifier(String),
    #[error("observation_end {end} precedes start_time {start}")]
    InvalidWindow { start: Timestamp, end: Timestamp },
    #[error("total_supply must be positive, got {0}")]
    NonPositiveSupply(Decimal),
    #[error("{stream} event {index} at {at} lies outside the observation window")]
    EventOutOfWindow { stream: &'static str, index: usize, at: Timestamp },
    #[error("{stream} event {index} at {at} is earlier than its predecessor")]
    UnsortedEvents { stream: &'static str, index: usize, at: Timestamp },
    #[error("on-chain event {index} has block height lower than its predecessor")]
    BlockRegression { index: usize },
    #[error("on-chain event {index} carries a negative amount")]
    NegativeAmount { index: usize },
    #[error("swap event {index} has non-positive price")]
    NonPositivePrice { index: usize },
    #[error("OSINT event {index} has zero count")]
    ZeroCount { index: usize },
}

pub(crate) fn is_valid_identifier(s: &str) -> bool {
    !s.is_empty()
        && !s
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '|' | ',' | '/' | '\\'))
}

/// Opaque wallet or contract address.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Address(String);

impl Address {
    pub fn new(s: impl Into<String>) -> Result<Self, ModelError> {
        let s = s.into();
        if is_valid_identifier(&s) {
            Ok(Address(s))
        } else {
            Err(ModelError::InvalidIdentifier(s))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Addresses whose balance is treated as destroyed supply.
pub const BURN_ADDRESSES: [&str; 2] = [
    "0x0000000000000000000000000000000000000000",
    "0x000000000000000000000000000000000000dead",
];

pub fn is_burn_address(addr: &Address) -> bool {
    BURN_ADDRESSES.iter().any(|b| b.eq_ignore_ascii_case(addr.as_str()))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Network {
    Ethereum,
    Bsc,
    Other(String),
}

impl Network {
    pub fn name(&self) -> &str {
        match self {
            Network::Ethereum => "ethereum",
            Network::Bsc => "bsc",
            Network::Other(n) => n,
        }
    }

    /// Inverse of [`Network::name`]; unknown names become `Other`.
    pub fn from_name(s: &str) -> Self {
        match s {
            "ethereum" => Network::Ethereum,
            "bsc" => Network::Bsc,
            other => Network::Other(other.to_string()),
        }
    }
}

impl fmt::Display for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TokenType {
    Utility,
    Meme,
    Governance,
    Other(String),
}

impl TokenType {
    pub fn name(&self) -> &str {
        match self {
            TokenType::Utility => "utility",
            TokenType::Meme => "meme",
            TokenType::Governance => "governance",
            TokenType::Other(n) => n,
        }
    }

    pub fn from_name(s: &str) -> Self {
        match s {
            "utility" => TokenType::Utility,
            "meme" => TokenType::Meme,
            "governance" => TokenType::Governance,
            other => TokenType::Other(other.to_string()),
        }
    }
}

impl fmt::Display for TokenType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Buy: quote flows into the pool and tokens flow out. Sell: the reverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SwapDirection {
    Buy,
    Sell,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OnChainKind {
    Transfer { from: Address, to: Address, amount: Decimal },
    Swap { direction: SwapDirection, token_amount: Decimal, quote_amount: Decimal, price: Decimal },
    LiquidityAdd { token_amount: Decimal, quote_amount: Decimal },
    LiquidityRemove { token_amount: Decimal, quote_amount: Decimal },
    LpMint { amount: Decimal },
    LpBurn { amount: Decimal },
}

impl OnChainKind {
    /// Counted toward transaction activity (transfers and swaps).
    pub fn is_transaction(&self) -> bool {
        matches!(self, OnChainKind::Transfer { .. } | OnChainKind::Swap { .. })
    }

    pub fn is_swap(&self) -> bool {
        matches!(self, OnChainKind::Swap { .. })
    }

    fn amounts(&self) -> Vec<Decimal> {
        match self {
            OnChainKind::Transfer { amount, .. } => vec![*amount],
            OnChainKind::Swap { token_amount, quote_amount, price, .. } => {
                vec![*token_amount, *quote_amount, *price]
            }
            OnChainKind::LiquidityAdd { token_amount, quote_amount }
            | OnChainKind::LiquidityRemove { token_amount, quote_amount } => {
                vec![*token_amount, *quote_amount]
            }
            OnChainKind::LpMint { amount } | OnChainKind::LpBurn { amount } => vec![*amount],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OnChainEvent {
    pub timestamp: Timestamp,
    pub block_height: u64,
    pub kind: OnChainKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OsintKind {
    Tweet,
    GoogleHit,
}

/// Possibly pre-aggregated attention signal (e.g. one record per day).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OsintEvent {
    pub timestamp: Timestamp,
    pub kind: OsintKind,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceMeta {
    pub project_id: String,
    pub network: Network,
    pub token_type: TokenType,
    pub start_time: Timestamp,
    pub observation_end: Timestamp,
    pub total_supply: Decimal,
    /// Receives the full supply at deployment.
    pub deployer: Address,
    /// The token's single liquidity pool contract.
    pub pool: Address,
}

/// Complete, validated event history of one token project.
///
/// Immutable once built; both event streams are sorted by timestamp and lie
/// inside `[start_time, observation_end]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenTrace {
    meta: TraceMeta,
    onchain: Vec<OnChainEvent>,
    osint: Vec<OsintEvent>,
}

impl TokenTrace {
    pub fn new(
        meta: TraceMeta,
        onchain: Vec<OnChainEvent>,
        osint: Vec<OsintEvent>,
    ) -> Result<Self, ModelError> {
        if !is_valid_identifier(&meta.project_id) {
            return Err(ModelError::InvalidIdentifier(meta.project_id));
        }
        for name in [meta.network.name(), meta.token_type.name()] {
            if !is_valid_identifier(name) {
                return Err(ModelError::InvalidIdentifier(name.to_string()));
            }
        }
        if meta.observation_end < meta.start_time {
            return Err(ModelError::InvalidWindow { start: meta.start_time, end: meta.observation_end });
        }
        if !meta.total_supply.is_positive() {
            return Err(ModelError::NonPositiveSupply(meta.total_supply));
        }
        let in_window = |t: Timestamp| t >= meta.start_time && t <= meta.observation_end;

        for (index, ev) in onchain.iter().enumerate() {
            if !in_window(ev.timestamp) {
                return Err(ModelError::EventOutOfWindow { stream: "on-chain", index, at: ev.timestamp });
            }
            if index > 0 {
                let prev = &onchain[index - 1];
                if ev.timestamp < prev.timestamp {
                    return Err(ModelError::UnsortedEvents { stream: "on-chain", index, at: ev.timestamp });
                }
                if ev.block_height < prev.block_height {
                    return Err(ModelError::BlockRegression { index });
                }
            }
            if ev.kind.amounts().iter().any(|a| a.is_negative()) {
                return Err(ModelError::NegativeAmount { index });
            }
            if let OnChainKind::Swap { price, .. } = ev.kind {
                if !price.is_positive() {
                    return Err(ModelError::NonPositivePrice { index });
                }
            }
        }
        for (index, ev) in osint.iter().enumerate() {
            if !in_window(ev.timestamp) {
                return Err(ModelError::EventOutOfWindow { stream: "OSINT", index, at: ev.timestamp });
            }
            if index > 0 && ev.timestamp < osint[index - 1].timestamp {
                return Err(ModelError::UnsortedEvents { stream: "OSINT", index, at: ev.timestamp });
            }
            if ev.count == 0 {
                return Err(ModelError::ZeroCount { index });
            }
        }
        Ok(TokenTrace { meta, onchain, osint })
    }

    pub fn meta(&self) -> &TraceMeta {
        &self.meta
    }

    pub fn project_id(&self) -> &str {
        &self.meta.project_id
    }

    pub fn start_time(&self) -> Timestamp {
        self.meta.start_time
    }

    pub fn observation_end(&self) -> Timestamp {
        self.meta.observation_end
    }

    pub fn total_supply(&self) -> Decimal {
        self.meta.total_supply
    }

    pub fn onchain_events(&self) -> &[OnChainEvent] {
        &self.onchain
    }

    pub fn osint_events(&self) -> &[OsintEvent] {
        &self.osint
    }

    pub fn into_parts(self) -> (TraceMeta, Vec<OnChainEvent>, Vec<OsintEvent>) {
        (self.meta, self.onchain, self.osint)
    }

    pub fn contains(&self, t: Timestamp) -> bool {
        t >= self.meta.start_time && t <= self.meta.observation_end
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn rejects_out_of_window_and_unsorted_events() {
        let err = TokenTrace::new(meta(10), vec![ev(11 * 3600, 1, ladd("1", "1"))], vec![]).unwrap_err();
        assert!(matches!(err, ModelError::EventOutOfWindow { .. }));

        let err = TokenTrace::new(meta(10), vec![ev(20, 1, ladd("1", "1")), ev(10, 1, ladd("1", "1"))], vec![])
            .unwrap_err();
        assert!(matches!(err, ModelError::UnsortedEvents { index: 1, .. }));

        let err = TokenTrace::new(meta(10), vec![ev(10, 5, ladd("1", "1")), ev(20, 4, ladd("1", "1"))], vec![])
            .unwrap_err();
        assert_eq!(err, ModelError::BlockRegression { index: 1 });
    }

    #[test]
    fn rejects_bad_amounts_and_supply() {
        let err = TokenTrace::new(meta(10), vec![ev(1, 1, swap(SwapDirection::Buy, "1", "1", "0"))], vec![])
            .unwrap_err();
        assert_eq!(err, ModelError::NonPositivePrice { index: 0 });

        let err = TokenTrace::new(meta(10), vec![ev(1, 1, ladd("-1", "1"))], vec![]).unwrap_err();
        assert_eq!(err, ModelError::NegativeAmount { index: 0 });

        let mut m = meta(10);
        m.total_supply = Decimal::ZERO;
        assert!(matches!(TokenTrace::new(m, vec![], vec![]), Err(ModelError::NonPositiveSupply(_))));

        let zero = OsintEvent { timestamp: Timestamp::from_secs(T0), kind: OsintKind::Tweet, count: 0 };
        assert_eq!(TokenTrace::new(meta(10), vec![], vec![zero]).unwrap_err(), ModelError::ZeroCount { index: 0 });
    }

    #[test]
    fn identifiers_are_validated() {
        assert!(Address::new("0xabc").is_ok());
        for bad in ["", "a b", "a|b", "a,b", "a/b"] {
            assert!(Address::new(bad).is_err());
        }
        assert!(is_burn_address(&addr("0x000000000000000000000000000000000000dEaD")));
    }

    #[test]
    fn category_names_round_trip() {
        for n in [Network::Ethereum, Network::Bsc, Network::Other("polygon".into())] {
            assert_eq!(Network::from_name(n.name()), n);
        }
        for t in [TokenType::Utility, TokenType::Meme, TokenType::Governance, TokenType::Other("rwa".into())] {
            assert_eq!(TokenType::from_name(t.name()), t);
        }
    }
}
