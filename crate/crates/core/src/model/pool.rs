use thiserror::Error;

use super::{OnChainEvent, OnChainKind, SwapDirection, TokenTrace};
use crate::decimal::Decimal;
use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("query time {at} outside observation window [{start}, {end}]")]
    OutOfRange { at: Timestamp, start: Timestamp, end: Timestamp },
    #[error("event {index} at {at} drives {field} negative")]
    NegativeReserve { index: usize, at: Timestamp, field: &'static str },
    #[error("event {index} overflows pool accounting")]
    Overflow { index: usize },
}

/// Reserves, LP supply and last traded price at an instant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolState {
    pub timestamp: Timestamp,
    pub token_reserve: Decimal,
    pub quote_reserve: Decimal,
    pub lp_supply: Decimal,
    /// Price of the most recent swap; `None` until the first swap.
    pub last_price: Option<Decimal>,
}

/// Incremental fold over a trace's on-chain events.
///
/// Consumes events in log order; each `advance_*` call only moves forward.
#[derive(Debug, Clone)]
pub struct PoolReplayer<'a> {
    events: &'a [OnChainEvent],
    next: usize,
    token_reserve: Decimal,
    quote_reserve: Decimal,
    lp_supply: Decimal,
    last_price: Option<Decimal>,
    last_swap_at: Option<Timestamp>,
}

impl<'a> PoolReplayer<'a> {
    pub fn new(trace: &'a TokenTrace) -> Self {
        Self::over(trace.onchain_events())
    }

    pub fn over(events: &'a [OnChainEvent]) -> Self {
        PoolReplayer {
            events,
            next: 0,
            token_reserve: Decimal::ZERO,
            quote_reserve: Decimal::ZERO,
            lp_supply: Decimal::ZERO,
            last_price: None,
            last_swap_at: None,
        }
    }

    /// Applies every pending event with timestamp `<= t`.
    pub fn advance_through(&mut self, t: Timestamp) -> Result<(), ReplayError> {
        while self.next < self.events.len() && self.events[self.next].timestamp <= t {
            self.step()?;
        }
        Ok(())
    }

    /// Applies every pending event with timestamp `< t`.
    pub fn advance_before(&mut self, t: Timestamp) -> Result<(), ReplayError> {
        while self.next < self.events.len() && self.events[self.next].timestamp < t {
            self.step()?;
        }
        Ok(())
    }

    /// Applies the next pending event, returning it.
    pub fn step(&mut self) -> Result<&'a OnChainEvent, ReplayError> {
        let index = self.next;
        let ev = &self.events[index];
        let at = ev.timestamp;
        let overflow = || ReplayError::Overflow { index };
        let negative = |field| ReplayError::NegativeReserve { index, at, field };

        let add = |a: Decimal, b: Decimal| a.checked_add(b).ok_or_else(overflow);
        let sub = |a: Decimal, b: Decimal, field: &'static str| {
            let v = a.checked_sub(b).ok_or_else(overflow)?;
            if v.is_negative() {
                Err(negative(field))
            } else {
                Ok(v)
            }
        };

        match &ev.kind {
            OnChainKind::Transfer { .. } => {}
            OnChainKind::Swap { direction, token_amount, quote_amount, price } => {
                match direction {
                    SwapDirection::Buy => {
                        self.quote_reserve = add(self.quote_reserve, *quote_amount)?;
                        self.token_reserve = sub(self.token_reserve, *token_amount, "token_reserve")?;
                    }
                    SwapDirection::Sell => {
                        self.token_reserve = add(self.token_reserve, *token_amount)?;
                        self.quote_reserve = sub(self.quote_reserve, *quote_amount, "quote_reserve")?;
                    }
                }
                self.last_price = Some(*price);
                self.last_swap_at = Some(at);
            }
            OnChainKind::LiquidityAdd { token_amount, quote_amount } => {
                self.token_reserve = add(self.token_reserve, *token_amount)?;
                self.quote_reserve = add(self.quote_reserve, *quote_amount)?;
            }
            OnChainKind::LiquidityRemove { token_amount, quote_amount } => {
                self.token_reserve = sub(self.token_reserve, *token_amount, "token_reserve")?;
                self.quote_reserve = sub(self.quote_reserve, *quote_amount, "quote_reserve")?;
            }
            OnChainKind::LpMint { amount } => self.lp_supply = add(self.lp_supply, *amount)?,
            OnChainKind::LpBurn { amount } => self.lp_supply = sub(self.lp_supply, *amount, "lp_supply")?,
        }
        self.next += 1;
        Ok(ev)
    }

    pub fn has_pending(&self) -> bool {
        self.next < self.events.len()
    }

    /// Timestamp of the next unconsumed event.
    pub fn peek_time(&self) -> Option<Timestamp> {
        self.events.get(self.next).map(|e| e.timestamp)
    }

    pub fn consumed(&self) -> usize {
        self.next
    }

    pub fn quote_reserve(&self) -> Decimal {
        self.quote_reserve
    }

    pub fn last_swap_at(&self) -> Option<Timestamp> {
        self.last_swap_at
    }

    pub fn state(&self, timestamp: Timestamp) -> PoolState {
        PoolState {
            timestamp,
            token_reserve: self.token_reserve,
            quote_reserve: self.quote_reserve,
            lp_supply: self.lp_supply,
            last_price: self.last_price,
        }
    }
}

/// Pool state after every on-chain event with timestamp `<= at`.
pub fn replay_pool_state(trace: &TokenTrace, at: Timestamp) -> Result<PoolState, ReplayError> {
    if !trace.contains(at) {
        return Err(ReplayError::OutOfRange { at, start: trace.start_time(), end: trace.observation_end() });
    }
    let mut replayer = PoolReplayer::new(trace);
    replayer.advance_through(at)?;
    Ok(replayer.state(at))
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::SwapDirection::{Buy, Sell};
    use super::*;
    use proptest::prelude::*;

    fn at(offset: i64) -> Timestamp {
        Timestamp::from_secs(T0 + offset)
    }

    #[test]
    fn empty_trace_has_empty_pool() {
        let trace = TokenTrace::new(meta(24), vec![], vec![]).unwrap();
        let s = replay_pool_state(&trace, trace.start_time()).unwrap();
        assert_eq!(s.token_reserve, Decimal::ZERO);
        assert_eq!(s.quote_reserve, Decimal::ZERO);
        assert_eq!(s.lp_supply, Decimal::ZERO);
        assert_eq!(s.last_price, None);
    }

    #[test]
    fn single_add_sets_reserves_without_price() {
        let trace = TokenTrace::new(meta(24), vec![ev(60, 1, ladd("100", "50"))], vec![]).unwrap();
        let s = replay_pool_state(&trace, at(120)).unwrap();
        assert_eq!(s.token_reserve, dec("100"));
        assert_eq!(s.quote_reserve, dec("50"));
        assert_eq!(s.last_price, None);
        // Events at exactly `at` are included.
        assert_eq!(replay_pool_state(&trace, at(60)).unwrap().quote_reserve, dec("50"));
        assert_eq!(replay_pool_state(&trace, at(59)).unwrap().quote_reserve, Decimal::ZERO);
    }

    #[test]
    fn six_event_trace_matches_hand_fold() {
        // Hand fold (token, quote, lp, price):
        //   LADD 1000/10        -> 1000, 10, 0, -
        //   LPMINT 100          -> 1000, 10, 100, -
        //   BUY 90 for 1        -> 910, 11, 100, 0.0121
        //   SELL 10 for 0.12    -> 920, 10.88, 100, 0.0118
        //   LREM 460/5.44       -> 460, 5.44, 100, 0.0118
        //   LPBURN 50           -> 460, 5.44, 50, 0.0118
        let events = vec![
            ev(0, 1, ladd("1000", "10")),
            ev(0, 1, OnChainKind::LpMint { amount: dec("100") }),
            ev(600, 51, swap(Buy, "90", "1", "0.0121")),
            ev(1200, 101, swap(Sell, "10", "0.12", "0.0118")),
            ev(1800, 151, lrem("460", "5.44")),
            ev(1800, 151, OnChainKind::LpBurn { amount: dec("50") }),
        ];
        let trace = TokenTrace::new(meta(24), events, vec![]).unwrap();

        let expect = [
            (0, "1000", "10", "100", None),
            (600, "910", "11", "100", Some("0.0121")),
            (1200, "920", "10.88", "100", Some("0.0118")),
            (1800, "460", "5.44", "50", Some("0.0118")),
        ];
        for (offset, token, quote, lp, price) in expect {
            let s = replay_pool_state(&trace, at(offset)).unwrap();
            assert_eq!(s.token_reserve, dec(token), "token at {offset}");
            assert_eq!(s.quote_reserve, dec(quote), "quote at {offset}");
            assert_eq!(s.lp_supply, dec(lp), "lp at {offset}");
            assert_eq!(s.last_price, price.map(dec), "price at {offset}");
        }
    }

    #[test]
    fn errors_on_out_of_range_and_overdraw() {
        let trace = TokenTrace::new(meta(1), vec![ev(10, 1, ladd("1", "1")), ev(20, 2, lrem("1", "2"))], vec![])
            .unwrap();
        assert!(matches!(replay_pool_state(&trace, at(-1)), Err(ReplayError::OutOfRange { .. })));
        assert!(matches!(replay_pool_state(&trace, at(3601)), Err(ReplayError::OutOfRange { .. })));
        assert_eq!(
            replay_pool_state(&trace, at(30)).unwrap_err(),
            ReplayError::NegativeReserve { index: 1, at: at(20), field: "quote_reserve" }
        );
    }

    fn arb_events() -> impl Strategy<Value = Vec<OnChainEvent>> {
        let kind = prop_oneof![
            (1u32..1000, 1u32..1000).prop_map(|(t, q)| ladd(&t.to_string(), &q.to_string())),
            (0u32..50, 0u32..50).prop_map(|(t, q)| lrem(&t.to_string(), &q.to_string())),
            (0u32..50, 1u32..50, 1u32..99).prop_map(|(t, q, p)| swap(Buy, &t.to_string(), &q.to_string(), &format!("0.{p}"))),
            (1u32..50, 0u32..50, 1u32..99).prop_map(|(t, q, p)| swap(Sell, &t.to_string(), &q.to_string(), &format!("0.{p}"))),
            (1u32..100).prop_map(|a| OnChainKind::LpMint { amount: Decimal::from_int(a as i64) }),
        ];
        prop::collection::vec((0i64..3600, kind), 0..30).prop_map(|mut v| {
            v.sort_by_key(|(t, _)| *t);
            v.into_iter().map(|(t, k)| ev(t, t as u64 / 12, k)).collect()
        })
    }

    /// Naive oracle: apply every event in a single pass with plain arithmetic.
    fn naive_fold(events: &[OnChainEvent], until: Timestamp) -> Option<(Decimal, Decimal, Decimal, Option<Decimal>)> {
        let (mut tok, mut quo, mut lp, mut price) = (Decimal::ZERO, Decimal::ZERO, Decimal::ZERO, None);
        for e in events.iter().filter(|e| e.timestamp <= until) {
            match &e.kind {
                OnChainKind::LiquidityAdd { token_amount, quote_amount } => {
                    tok += *token_amount;
                    quo += *quote_amount;
                }
                OnChainKind::LiquidityRemove { token_amount, quote_amount } => {
                    tok -= *token_amount;
                    quo -= *quote_amount;
                }
                OnChainKind::Swap { direction: Buy, token_amount, quote_amount, price: p } => {
                    tok -= *token_amount;
                    quo += *quote_amount;
                    price = Some(*p);
                }
                OnChainKind::Swap { direction: Sell, token_amount, quote_amount, price: p } => {
                    tok += *token_amount;
                    quo -= *quote_amount;
                    price = Some(*p);
                }
                OnChainKind::LpMint { amount } => lp += *amount,
                OnChainKind::LpBurn { amount } => lp -= *amount,
                OnChainKind::Transfer { .. } => {}
            }
            if tok.is_negative() || quo.is_negative() || lp.is_negative() {
                return None;
            }
        }
        Some((tok, quo, lp, price))
    }

    proptest! {
        #[test]
        fn replay_matches_naive_fold(events in arb_events(), q in 0i64..3600) {
            let trace = TokenTrace::new(meta(1), events.clone(), vec![]).unwrap();
            let end = trace.observation_end();
            let oracle_end = naive_fold(&events, end);
            match (replay_pool_state(&trace, end), oracle_end) {
                (Ok(s), Some((t, qr, lp, p))) => {
                    prop_assert_eq!(s.token_reserve, t);
                    prop_assert_eq!(s.quote_reserve, qr);
                    prop_assert_eq!(s.lp_supply, lp);
                    prop_assert_eq!(s.last_price, p);
                    // Monotone consumption: an earlier query sees a prefix.
                    let early = PoolReplayer::new(&trace);
                    let mut early = early;
                    early.advance_through(at(q)).unwrap();
                    let mut late = PoolReplayer::new(&trace);
                    late.advance_through(end).unwrap();
                    prop_assert!(early.consumed() <= late.consumed());
                    let (t2, q2, lp2, p2) = naive_fold(&events, at(q)).unwrap();
                    let s2 = replay_pool_state(&trace, at(q)).unwrap();
                    prop_assert_eq!((s2.token_reserve, s2.quote_reserve, s2.lp_supply, s2.last_price), (t2, q2, lp2, p2));
                }
                (Err(ReplayError::NegativeReserve { .. }), None) => {}
                (got, want) => prop_assert!(false, "replay {:?} vs oracle {:?}", got, want),
            }
        }
    }
}
