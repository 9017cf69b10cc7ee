use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::decimal::Decimal;
use crate::model::{Address, OnChainKind, TokenTrace};
use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HolderError {
    #[error("snapshot time {at} outside observation window")]
    OutOfRange { at: Timestamp },
    #[error("transfer {index} at {at} moves {amount} from {from}, which holds only {balance}")]
    NegativeBalance { index: usize, at: Timestamp, from: Address, amount: Decimal, balance: Decimal },
    #[error("transfer {index} overflows balance accounting")]
    Overflow { index: usize },
}

/// Token balances per address at an instant. Zero balances are omitted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HolderSnapshot {
    pub timestamp: Timestamp,
    pub balances: BTreeMap<Address, Decimal>,
}

impl HolderSnapshot {
    pub fn total(&self) -> Decimal {
        self.balances.values().sum()
    }

    pub fn balance(&self, addr: &Address) -> Decimal {
        self.balances.get(addr).copied().unwrap_or(Decimal::ZERO)
    }
}

/// Folds every Transfer with timestamp `<= at`, starting from the deployer
/// holding the whole supply.
pub fn derive_holder_snapshot(trace: &TokenTrace, at: Timestamp) -> Result<HolderSnapshot, HolderError> {
    if !trace.contains(at) {
        return Err(HolderError::OutOfRange { at });
    }
    let mut balances: HashMap<&Address, Decimal> = HashMap::new();
    balances.insert(&trace.meta().deployer, trace.total_supply());

    for (index, ev) in trace.onchain_events().iter().enumerate() {
        if ev.timestamp > at {
            break;
        }
        let OnChainKind::Transfer { from, to, amount } = &ev.kind else { continue };
        let balance = balances.get(from).copied().unwrap_or(Decimal::ZERO);
        if balance < *amount {
            return Err(HolderError::NegativeBalance {
                index,
                at: ev.timestamp,
                from: from.clone(),
                amount: *amount,
                balance,
            });
        }
        balances.insert(from, balance - *amount);
        let dest = balances.entry(to).or_insert(Decimal::ZERO);
        *dest = dest.checked_add(*amount).ok_or(HolderError::Overflow { index })?;
    }

    Ok(HolderSnapshot {
        timestamp: at,
        balances: balances
            .into_iter()
            .filter(|(_, b)| !b.is_zero())
            .map(|(a, b)| (a.clone(), b))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::model::OnChainEvent;
    use proptest::prelude::*;

    #[test]
    fn deployer_holds_everything_without_transfers() {
        let trace = TokenTrace::new(meta(24), vec![ev(5, 1, ladd("10", "10"))], vec![]).unwrap();
        let snap = derive_holder_snapshot(&trace, trace.observation_end()).unwrap();
        assert_eq!(snap.balances.len(), 1);
        assert_eq!(snap.balance(&addr("deployer")), trace.total_supply());
    }

    #[test]
    fn forty_percent_transfer() {
        let trace = TokenTrace::new(meta(24), vec![ev(5, 1, xfer("deployer", "A", "400000"))], vec![]).unwrap();
        let snap = derive_holder_snapshot(&trace, trace.observation_end()).unwrap();
        assert_eq!(snap.balance(&addr("deployer")), dec("600000"));
        assert_eq!(snap.balance(&addr("A")), dec("400000"));
        // Before the transfer nothing has moved.
        let before = derive_holder_snapshot(&trace, trace.start_time() + 4).unwrap();
        assert_eq!(before.balance(&addr("A")), Decimal::ZERO);
    }

    #[test]
    fn zero_balances_are_dropped_and_overdraws_rejected() {
        let trace = TokenTrace::new(
            meta(24),
            vec![ev(5, 1, xfer("deployer", "A", "1000000")), ev(6, 1, xfer("A", "B", "1000001"))],
            vec![],
        )
        .unwrap();
        let snap = derive_holder_snapshot(&trace, trace.start_time() + 5).unwrap();
        assert_eq!(snap.balances.keys().collect::<Vec<_>>(), vec![&addr("A")]);
        assert!(matches!(
            derive_holder_snapshot(&trace, trace.observation_end()),
            Err(HolderError::NegativeBalance { index: 1, .. })
        ));
        assert!(matches!(
            derive_holder_snapshot(&trace, trace.start_time() - 1),
            Err(HolderError::OutOfRange { .. })
        ));
    }

    /// Builds valid transfers: each picks a current holder and moves a
    /// fraction (in millionths) of its balance.
    fn random_transfers(picks: &[(u8, u8, u32)]) -> Vec<OnChainEvent> {
        let names: Vec<String> = (0..8).map(|i| format!("w{i}")).collect();
        let mut bal: HashMap<String, Decimal> = HashMap::new();
        bal.insert("deployer".into(), dec("1000000"));
        let mut out = Vec::new();
        for (i, &(src, dst, frac)) in picks.iter().enumerate() {
            let mut holders: Vec<&String> = bal.iter().filter(|(_, b)| b.is_positive()).map(|(a, _)| a).collect();
            holders.sort();
            let from = holders[src as usize % holders.len()].clone();
            let to = names[dst as usize % names.len()].clone();
            let amount = bal[&from].checked_mul(Decimal::from_parts(frac as i64, 6)).unwrap();
            *bal.get_mut(&from).unwrap() -= amount;
            *bal.entry(to.clone()).or_insert(Decimal::ZERO) += amount;
            out.push(ev(i as i64, i as u64, xfer(&from, &to, &amount.to_string())));
        }
        out
    }

    #[test]
    fn twenty_transfers_match_hashmap_oracle() {
        let picks: Vec<(u8, u8, u32)> = (0..20u32).map(|i| ((i * 7 % 5) as u8, (i * 3 % 8) as u8, 1 + i * 49_999)).collect();
        let events = random_transfers(&picks);
        let trace = TokenTrace::new(meta(24), events.clone(), vec![]).unwrap();
        let snap = derive_holder_snapshot(&trace, trace.observation_end()).unwrap();

        let mut oracle: HashMap<String, Decimal> = HashMap::new();
        oracle.insert("deployer".into(), dec("1000000"));
        for e in &events {
            if let OnChainKind::Transfer { from, to, amount } = &e.kind {
                *oracle.get_mut(from.as_str()).unwrap() -= *amount;
                *oracle.entry(to.as_str().to_string()).or_insert(Decimal::ZERO) += *amount;
            }
        }
        oracle.retain(|_, b| !b.is_zero());
        assert_eq!(snap.balances.len(), oracle.len());
        for (a, b) in &snap.balances {
            assert_eq!(oracle[a.as_str()], *b, "balance of {a}");
        }
    }

    proptest! {
        #[test]
        fn snapshots_conserve_supply(picks in prop::collection::vec((any::<u8>(), any::<u8>(), 0u32..=1_000_000), 0..40)) {
            let events = random_transfers(&picks);
            let trace = TokenTrace::new(meta(24), events, vec![]).unwrap();
            let snap = derive_holder_snapshot(&trace, trace.observation_end()).unwrap();
            prop_assert_eq!(snap.total(), trace.total_supply());
        }
    }
}
