//! Seeded synthetic token lifecycles, legitimate and rug-pulled.
//!
//! Every project draws from its own generator, seeded from a hash of the run
//! seed and the project index, so projects can be built in any order or in
//! parallel with identical results.
//!
//! A rug-pull lifecycle: the deployer seeds a constant-product pool, trading
//! runs at a steady rate, buying pressure and a social-media burst build up
//! before the pull, the deployer dumps part of its holdings at the rug-pull
//! block and removes all liquidity zero to two blocks later. Stranded holders
//! keep moving tokens for a day or so, then everything stops.
//!
//! Legitimate projects keep liquidity in the pool and trade until the end of
//! observation. Token flows between pool and wallets are mirrored by
//! transfers, so holder balances and pool reserves stay consistent.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::decimal::Decimal;
use crate::labeler::{classify, DeadTokenCriteria, Label, LabelError};
use crate::model::{
    Address, Network, OnChainEvent, OnChainKind, OsintEvent, OsintKind, SwapDirection, TokenTrace, TokenType, TraceMeta,
};
use crate::time::{Timestamp, SECS_PER_DAY, SECS_PER_HOUR};

/// 2021-01-01T00:00:00Z; synthetic projects start on or after this.
const EPOCH: i64 = 1_609_459_200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{0} must lie in [0, 1], got {1}")]
    Fraction(&'static str, f64),
    #[error("range {0} is empty or invalid: {1}..={2}")]
    Range(&'static str, f64, f64),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub n_projects: usize,
    /// Probability that a project is a rug pull.
    pub rug_fraction: f64,
    /// Days from launch to the rug pull, or to the end of observation for
    /// legitimate projects.
    pub lifetime_range_days: (u32, u32),
    /// Mean market events per hour.
    pub base_tx_rate: f64,
    /// 0 disables the pre-rug buying spree, 1 makes it aggressive.
    pub pump_intensity: f64,
    /// Blocks between the rug-pull transaction and the liquidity removal.
    pub drain_delay_blocks: (u32, u32),
    /// Share of post-drain activity falling within the first 24 hours.
    pub tx_collapse_24h_fraction: f64,
    /// Hours after the drain by which the price is undefined. Swaps stop at
    /// the drain itself, so any value in range is met.
    pub price_undefined_onset_hours: (u32, u32),
    /// Days after the drain until the last on-chain event.
    pub full_inactivity_days: (u32, u32),
    /// How long before the rug pull the social-media burst begins.
    pub osint_burst_lead_days: (u32, u32),
    /// Launch dates spread uniformly over this many days.
    pub start_span_days: u32,
    /// Overlap the two classes' feature distributions.
    pub hard_mode: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 0,
            n_projects: 1000,
            rug_fraction: 0.59,
            lifetime_range_days: (7, 30),
            base_tx_rate: 1.5,
            pump_intensity: 0.8,
            drain_delay_blocks: (0, 2),
            tx_collapse_24h_fraction: 0.90,
            price_undefined_onset_hours: (24, 48),
            full_inactivity_days: (1, 3),
            osint_burst_lead_days: (2, 14),
            start_span_days: 720,
            hard_mode: false,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [
            ("rug_fraction", self.rug_fraction),
            ("pump_intensity", self.pump_intensity),
            ("tx_collapse_24h_fraction", self.tx_collapse_24h_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ConfigError::Fraction(name, v));
            }
        }
        for (name, (lo, hi), min) in [
            ("lifetime_range_days", self.lifetime_range_days, 1),
            ("drain_delay_blocks", self.drain_delay_blocks, 0),
            ("price_undefined_onset_hours", self.price_undefined_onset_hours, 0),
            ("full_inactivity_days", self.full_inactivity_days, 1),
            ("osint_burst_lead_days", self.osint_burst_lead_days, 1),
        ] {
            if lo > hi || lo < min {
                return Err(ConfigError::Range(name, lo as f64, hi as f64));
            }
        }
        if !(self.base_tx_rate > 0.0 && self.base_tx_rate.is_finite()) {
            return Err(ConfigError::NonPositive("base_tx_rate"));
        }
        if self.start_span_days == 0 {
            return Err(ConfigError::NonPositive("start_span_days"));
        }
        Ok(())
    }
}

/// What the generator knows about a project.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub project_id: String,
    pub label: Label,
    /// The rug-pull transaction (the deployer's dump).
    pub rugpull_time: Option<Timestamp>,
    pub rugpull_block: Option<u64>,
    /// Blocks between the rug-pull transaction and the liquidity removal.
    pub drain_delay_blocks: Option<u32>,
    /// Time of the last on-chain event after the drain.
    pub inactivity_end: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedProject {
    pub trace: TokenTrace,
    pub truth: GroundTruth,
}

pub fn block_time_secs(network: &Network) -> i64 {
    match network {
        Network::Ethereum => 12,
        Network::Bsc => 3,
        Network::Other(_) => 2,
    }
}

fn genesis(network: &Network) -> i64 {
    match network {
        Network::Ethereum => 1_438_269_973,
        Network::Bsc => 1_598_671_449,
        Network::Other(_) => 1_590_824_836,
    }
}

/// Per-project seed: the first eight bytes of `sha256(seed || index)`.
pub fn project_seed(seed: u64, index: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((index as u64).to_le_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().unwrap())
}

pub fn project_id(index: usize) -> String {
    format!("tok{index:05}")
}

pub fn generate(config: &GeneratorConfig) -> Result<Vec<GeneratedProject>, ConfigError> {
    config.validate()?;
    Ok((0..config.n_projects).map(|i| generate_project(config, i)).collect())
}

/// Builds project `index` alone. The config must already be valid.
pub fn generate_project(config: &GeneratorConfig, index: usize) -> GeneratedProject {
    let mut rng = ChaCha8Rng::seed_from_u64(project_seed(config.seed, index));
    let is_rug = rng.random_bool(config.rug_fraction);
    Sim::new(config, index, is_rug, &mut rng).run(&mut rng)
}

fn range(rng: &mut ChaCha8Rng, (lo, hi): (u32, u32)) -> i64 {
    rng.random_range(lo..=hi) as i64
}

fn random_address(rng: &mut ChaCha8Rng) -> Address {
    let bytes: [u8; 20] = rng.random();
    Address::new(format!("0x{}", hex::encode(bytes))).unwrap()
}

/// `x` rounded to `digits` decimal places.
fn quantize(x: f64, digits: u32) -> Decimal {
    Decimal::from_parts((x * 10f64.powi(digits as i32)).round() as i64, digits)
}

/// Fraction in `[lo, hi]` with three decimal digits.
fn fraction(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Decimal {
    quantize(rng.random_range(lo..=hi), 3)
}

struct Sim<'a> {
    cfg: &'a GeneratorConfig,
    id: String,
    is_rug: bool,
    start: i64,
    network: Network,
    token_type: TokenType,
    block_secs: i64,
    base_block: u64,
    supply: Decimal,
    deployer: Address,
    pool: Address,
    events: Vec<OnChainEvent>,
    token_reserve: Decimal,
    quote_reserve: Decimal,
    lp_supply: Decimal,
    balances: HashMap<Address, Decimal>,
    traders: Vec<Address>,
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a GeneratorConfig, index: usize, is_rug: bool, rng: &mut ChaCha8Rng) -> Self {
        let network = match rng.random_range(0..10) {
            0..=4 => Network::Ethereum,
            5..=8 => Network::Bsc,
            _ => Network::Other("polygon".into()),
        };
        let token_type = [TokenType::Utility, TokenType::Meme, TokenType::Governance, TokenType::Other("defi".into())]
            .choose(rng)
            .unwrap()
            .clone();
        let block_secs = block_time_secs(&network);
        let start = EPOCH + rng.random_range(0..cfg.start_span_days as i64 * SECS_PER_DAY);
        let supply = Decimal::from_int(10i64.pow(rng.random_range(6..=12)));
        let deployer = random_address(rng);
        let pool = random_address(rng);
        let mut balances = HashMap::new();
        balances.insert(deployer.clone(), supply);
        Sim {
            cfg,
            id: project_id(index),
            is_rug,
            start,
            base_block: ((start - genesis(&network)) / block_secs) as u64,
            network,
            token_type,
            block_secs,
            supply,
            deployer,
            pool,
            events: Vec::new(),
            token_reserve: Decimal::ZERO,
            quote_reserve: Decimal::ZERO,
            lp_supply: Decimal::ZERO,
            balances,
            traders: Vec::new(),
        }
    }

    fn block(&self, t: i64) -> u64 {
        self.base_block + ((t - self.start) / self.block_secs) as u64
    }

    fn push(&mut self, t: i64, kind: OnChainKind) {
        let block_height = self.block(t);
        self.events.push(OnChainEvent { timestamp: Timestamp::from_secs(t), block_height, kind });
    }

    fn balance(&self, a: &Address) -> Decimal {
        self.balances.get(a).copied().unwrap_or(Decimal::ZERO)
    }

    fn transfer(&mut self, t: i64, from: &Address, to: &Address, amount: Decimal) {
        let b = self.balance(from);
        debug_assert!(amount <= b);
        self.balances.insert(from.clone(), b - amount);
        *self.balances.entry(to.clone()).or_insert(Decimal::ZERO) += amount;
        self.push(t, OnChainKind::Transfer { from: from.clone(), to: to.clone(), amount });
    }

    fn add_liquidity(&mut self, t: i64, tokens: Decimal, quote: Decimal) {
        let (deployer, pool) = (self.deployer.clone(), self.pool.clone());
        self.transfer(t, &deployer, &pool, tokens);
        self.push(t, OnChainKind::LiquidityAdd { token_amount: tokens, quote_amount: quote });
        let minted = quote.checked_mul_int(100).unwrap();
        self.push(t, OnChainKind::LpMint { amount: minted });
        self.token_reserve += tokens;
        self.quote_reserve += quote;
        self.lp_supply += minted;
    }

    /// Withdraws `share` of the pool (all of it when `share` is one).
    fn remove_liquidity(&mut self, t: i64, share: Decimal) {
        let (tokens, quote, lp) = if share == Decimal::ONE {
            (self.token_reserve, self.quote_reserve, self.lp_supply)
        } else {
            let part = |d: Decimal| d.checked_mul(share).unwrap();
            (part(self.token_reserve), part(self.quote_reserve), part(self.lp_supply))
        };
        self.push(t, OnChainKind::LiquidityRemove { token_amount: tokens, quote_amount: quote });
        self.push(t, OnChainKind::LpBurn { amount: lp });
        let (deployer, pool) = (self.deployer.clone(), self.pool.clone());
        self.transfer(t, &pool, &deployer, tokens);
        self.token_reserve -= tokens;
        self.quote_reserve -= quote;
        self.lp_supply -= lp;
    }

    fn buy(&mut self, t: i64, trader: &Address, quote_in: Decimal) {
        // Constant product: tokens_out = R_t * dq / (R_q + dq).
        let tokens = self
            .token_reserve
            .checked_mul(quote_in)
            .and_then(|n| n.checked_div(self.quote_reserve + quote_in))
            .unwrap();
        if !tokens.is_positive() || !quote_in.is_positive() {
            return;
        }
        let price = quote_in.checked_div(tokens).unwrap();
        if !price.is_positive() {
            return;
        }
        self.push(
            t,
            OnChainKind::Swap { direction: SwapDirection::Buy, token_amount: tokens, quote_amount: quote_in, price },
        );
        let pool = self.pool.clone();
        self.transfer(t, &pool, trader, tokens);
        self.token_reserve -= tokens;
        self.quote_reserve += quote_in;
    }

    fn sell(&mut self, t: i64, trader: &Address, tokens: Decimal) {
        let quote = self
            .quote_reserve
            .checked_mul(tokens)
            .and_then(|n| n.checked_div(self.token_reserve + tokens))
            .unwrap();
        if !quote.is_positive() || !tokens.is_positive() {
            return;
        }
        let price = quote.checked_div(tokens).unwrap();
        if !price.is_positive() {
            return;
        }
        self.push(
            t,
            OnChainKind::Swap { direction: SwapDirection::Sell, token_amount: tokens, quote_amount: quote, price },
        );
        let pool = self.pool.clone();
        self.transfer(t, trader, &pool, tokens);
        self.token_reserve += tokens;
        self.quote_reserve -= quote;
    }

    fn holder_with_balance(&self, rng: &mut ChaCha8Rng) -> Option<Address> {
        for _ in 0..8 {
            let a = self.traders.choose(rng)?;
            if self.balance(a).is_positive() {
                return Some(a.clone());
            }
        }
        None
    }

    fn new_trader(&mut self, rng: &mut ChaCha8Rng) -> Address {
        let a = random_address(rng);
        self.traders.push(a.clone());
        a
    }

    /// Poisson market activity over `[from, to)`.
    fn trade(&mut self, rng: &mut ChaCha8Rng, from: i64, to: i64, rate_per_hour: f64, buy_prob: f64, size: (f64, f64)) {
        let gap = Exp::new(rate_per_hour / SECS_PER_HOUR as f64).unwrap();
        let mut t = from as f64;
        loop {
            t += gap.sample(rng);
            let ts = t.ceil() as i64;
            if ts >= to {
                break;
            }
            let roll: f64 = rng.random();
            if roll < 0.15 {
                if let Some(from_a) = self.holder_with_balance(rng) {
                    let to_a = if rng.random_bool(0.5) { self.new_trader(rng) } else { self.traders.choose(rng).unwrap().clone() };
                    let amount = self.balance(&from_a).checked_mul(fraction(rng, 0.1, 0.9)).unwrap();
                    if amount.is_positive() && from_a != to_a {
                        self.transfer(ts, &from_a, &to_a, amount);
                    }
                }
                continue;
            }
            let seller = if rng.random_bool(1.0 - buy_prob) { self.holder_with_balance(rng) } else { None };
            match seller {
                Some(s) => {
                    let amount = self.balance(&s).checked_mul(fraction(rng, 0.2, 1.0)).unwrap();
                    self.sell(ts, &s, amount);
                }
                None => {
                    let trader = if self.traders.is_empty() || rng.random_bool(0.35) {
                        self.new_trader(rng)
                    } else {
                        self.traders.choose(rng).unwrap().clone()
                    };
                    let dq = self.quote_reserve.to_f64() * rng.random_range(size.0..=size.1);
                    self.buy(ts, &trader, quantize(dq, 9));
                }
            }
        }
    }

    /// Deployer hands `share` of supply to `n` wallets right after launch.
    fn distribute(&mut self, rng: &mut ChaCha8Rng, n: usize, share: f64, at: i64) {
        let total = self.supply.checked_mul(quantize(share, 3)).unwrap();
        let each = total.checked_div_int(n as i64).unwrap();
        let deployer = self.deployer.clone();
        for k in 0..n {
            let to = self.new_trader(rng);
            self.transfer(at + k as i64 * 30, &deployer, &to, each);
        }
    }

    fn run(mut self, rng: &mut ChaCha8Rng) -> GeneratedProject {
        let cfg = self.cfg;
        let hard = cfg.hard_mode;
        let day = SECS_PER_DAY;
        let life = range(rng, cfg.lifetime_range_days) * day + rng.random_range(0..day);
        // Rug time sits on a block boundary so the drain lands a whole
        // number of blocks later.
        let t_rug = self.start + (life + self.block_secs - 1) / self.block_secs * self.block_secs;

        // Launch: seed the pool, then distribute some supply.
        let pool_share = fraction(rng, 0.2, 0.5);
        let quote = quantize(rng.random_range(5.0..200.0), 6);
        let launch = self.start;
        self.add_liquidity(launch, self.supply.checked_mul(pool_share).unwrap(), quote);
        let insider_like = self.is_rug && !(hard && rng.random_bool(0.4));
        let (holders, share) = if insider_like {
            (rng.random_range(3..15), rng.random_range(0.02..0.10))
        } else {
            (rng.random_range(40..200), rng.random_range(0.25..0.45))
        };
        self.distribute(rng, holders, share, launch + 60);
        let trading_from = launch + 60 + holders as i64 * 30;

        let rate = cfg.base_tx_rate * rng.random_range(0.6..1.4);
        let normal = (0.002, 0.03);
        let end_of_trading = if self.is_rug { t_rug } else { self.start + life };

        // Pre-rug buying spree; some legit projects rally too.
        let pumps = if self.is_rug {
            cfg.pump_intensity > 0.0 && !(hard && rng.random_bool(0.4))
        } else {
            rng.random_bool(if hard { 0.35 } else { 0.04 })
        };
        let pump_len = rng.random_range(1..=4) * day;
        let pump_from = if self.is_rug {
            (end_of_trading - pump_len).max(trading_from)
        } else {
            // A legit rally at a random point of the lifetime.
            rng.random_range(trading_from..end_of_trading.max(trading_from + 1))
        };
        let pump_to = (pump_from + pump_len).min(end_of_trading);
        if pumps {
            let k = cfg.pump_intensity;
            self.trade(rng, trading_from, pump_from, rate, 0.5, normal);
            self.trade(rng, pump_from, pump_to, rate * (1.0 + 2.0 * k), 0.5 + 0.4 * k, (0.01, 0.05));
            self.trade(rng, pump_to, end_of_trading, rate, 0.5, normal);
        } else {
            self.trade(rng, trading_from, end_of_trading, rate, 0.5, normal);
        }

        // Legit projects sometimes trim liquidity without emptying the pool.
        if !self.is_rug && rng.random_bool(0.3) {
            let t = end_of_trading - rng.random_range(1..day);
            if t > trading_from && self.events.last().is_none_or(|e| e.timestamp.secs() <= t) {
                let share = fraction(rng, 0.1, 0.3);
                self.remove_liquidity(t, share);
            }
        }

        let mut truth = GroundTruth {
            project_id: self.id.clone(),
            label: Label::Alive,
            rugpull_time: None,
            rugpull_block: None,
            drain_delay_blocks: None,
            inactivity_end: None,
        };
        let observation_end;
        if self.is_rug {
            let deployer = self.deployer.clone();
            let dump = self.balance(&deployer).checked_mul(fraction(rng, 0.05, 0.3)).unwrap();
            self.sell(t_rug, &deployer, dump);
            let delay = range(rng, cfg.drain_delay_blocks);
            let t_drain = t_rug + delay * self.block_secs;
            self.remove_liquidity(t_drain, Decimal::ONE);

            let inactive = range(rng, cfg.full_inactivity_days) * day - rng.random_range(0..SECS_PER_HOUR);
            let inactivity_end = t_drain + inactive.max(day);
            let n_post = rng.random_range(5..40);
            let mut times: Vec<i64> = (0..n_post)
                .map(|_| {
                    if rng.random_bool(cfg.tx_collapse_24h_fraction) {
                        t_drain + rng.random_range(1..=day)
                    } else {
                        rng.random_range(t_drain + day..=inactivity_end)
                    }
                })
                .collect();
            times.sort_unstable();
            *times.last_mut().unwrap() = inactivity_end;
            for t in times {
                let from = self.holder_with_balance(rng).unwrap_or_else(|| deployer.clone());
                let to = random_address(rng);
                let amount = self.balance(&from).checked_mul(fraction(rng, 0.1, 1.0)).unwrap();
                if amount.is_positive() {
                    self.transfer(t, &from, &to, amount);
                }
            }
            observation_end = inactivity_end + range(rng, (4, 10)) * day;
            truth = GroundTruth {
                label: Label::Dead,
                rugpull_time: Some(Timestamp::from_secs(t_rug)),
                rugpull_block: Some(self.block(t_rug)),
                drain_delay_blocks: Some(delay as u32),
                inactivity_end: Some(Timestamp::from_secs(inactivity_end)),
                ..truth
            };
        } else {
            observation_end = self.start + life;
        }

        let osint = self.osint(rng, t_rug, observation_end);
        let meta = TraceMeta {
            project_id: self.id.clone(),
            network: self.network.clone(),
            token_type: self.token_type.clone(),
            start_time: Timestamp::from_secs(self.start),
            observation_end: Timestamp::from_secs(observation_end),
            total_supply: self.supply,
            deployer: self.deployer.clone(),
            pool: self.pool.clone(),
        };
        let trace = TokenTrace::new(meta, self.events, osint).expect("generator emits valid traces");
        GeneratedProject { trace, truth }
    }

    /// Daily tweet tallies and weekly search-hit tallies.
    fn osint(&self, rng: &mut ChaCha8Rng, t_rug: i64, end: i64) -> Vec<OsintEvent> {
        let cfg = self.cfg;
        let day = SECS_PER_DAY;
        let base = rng.random_range(2.0..15.0);
        let lead = range(rng, cfg.osint_burst_lead_days) * day;
        let burst_mult = if self.is_rug && !(cfg.hard_mode && rng.random_bool(0.4)) {
            rng.random_range(4.0..12.0)
        } else {
            1.0
        };
        // Legit projects occasionally go viral as well.
        let legit_burst = !self.is_rug && rng.random_bool(if cfg.hard_mode { 0.35 } else { 0.04 });
        let legit_burst_at = self.start + rng.random_range(0..(end - self.start).max(1));

        let mut out = Vec::new();
        let mut d = 0;
        while self.start + d * day <= end {
            let day_start = self.start + d * day;
            let mut t = day_start + rng.random_range(0..day);
            let mut mean = base;
            if self.is_rug {
                if day_start >= t_rug {
                    mean = base * 0.1;
                } else if day_start + day > t_rug - lead {
                    mean = base * burst_mult;
                    // Burst tallies always land before the rug pull.
                    t = t.min(t_rug - SECS_PER_HOUR);
                }
            } else if legit_burst && (legit_burst_at..legit_burst_at + lead).contains(&day_start) {
                mean = base * rng.random_range(4.0..12.0);
            }
            if t <= end && t >= self.start {
                let n = Poisson::new(mean).unwrap().sample(rng) as u32 + 1;
                out.push(OsintEvent { timestamp: Timestamp::from_secs(t), kind: OsintKind::Tweet, count: n });
            }
            if d % 7 == 6 {
                let t = (day_start + rng.random_range(0..day)).min(end);
                let mean = if self.is_rug && day_start >= t_rug { 40.0 } else { 3.0 };
                let n = Poisson::new(mean).unwrap().sample(rng) as u32 + 1;
                out.push(OsintEvent { timestamp: Timestamp::from_secs(t), kind: OsintKind::GoogleHit, count: n });
            }
            d += 1;
        }
        out.sort_by_key(|e| e.timestamp);
        out
    }
}

pub const GROUND_TRUTH_HEADER: [&str; 6] =
    ["project_id", "label", "rugpull_time", "rugpull_block", "drain_delay_blocks", "inactivity_end"];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_ground_truth(truths: &[GroundTruth]) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(GROUND_TRUTH_HEADER)?;
    for t in truths {
        w.write_record([
            t.project_id.clone(),
            t.label.to_string(),
            opt(t.rugpull_time),
            opt(t.rugpull_block),
            opt(t.drain_delay_blocks),
            opt(t.inactivity_end),
        ])?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

pub fn read_ground_truth(bytes: &[u8]) -> Result<Vec<GroundTruth>, String> {
    fn field<T: std::str::FromStr>(s: &str, line: usize) -> Result<Option<T>, String>
    where
        T::Err: fmt::Display,
    {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|e| format!("line {line}: {e}"))
        }
    }
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().collect::<Vec<_>>() != GROUND_TRUTH_HEADER {
        return Err(format!("unexpected ground truth header {header:?}"));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let line = i + 2;
        out.push(GroundTruth {
            project_id: rec[0].to_string(),
            label: rec[1].parse().map_err(|e| format!("line {line}: {e}"))?,
            rugpull_time: field(&rec[2], line)?,
            rugpull_block: field(&rec[3], line)?,
            drain_delay_blocks: field(&rec[4], line)?,
            inactivity_end: field(&rec[5], line)?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AgreementReport {
    pub n: usize,
    /// `(truth, verdict)` counts.
    pub confusion: BTreeMap<(Label, Label), usize>,
    /// Histogram of `|located block - true block|` over rugs labeled Dead.
    pub block_errors: BTreeMap<u64, usize>,
    /// Dead verdicts for which no draining removal was found.
    pub unlocated: usize,
}

impl AgreementReport {
    pub fn agreement(&self) -> f64 {
        let agree: usize = self.confusion.iter().filter(|((a, b), _)| a == b).map(|(_, n)| n).sum();
        agree as f64 / self.n as f64
    }

    pub fn max_block_error(&self) -> Option<u64> {
        self.block_errors.keys().next_back().copied()
    }
}

impl fmt::Display for AgreementReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "projects={}", self.n)?;
        writeln!(f, "agreement={}", self.agreement())?;
        for ((t, v), n) in &self.confusion {
            writeln!(f, "truth={t} verdict={v} count={n}")?;
        }
        for (e, n) in &self.block_errors {
            writeln!(f, "block_error={e} count={n}")?;
        }
        writeln!(f, "unlocated={}", self.unlocated)
    }
}

/// Labels every generated trace and compares with the ground truth.
pub fn validate_against_labeler(
    projects: &[GeneratedProject],
    criteria: &DeadTokenCriteria,
) -> Result<AgreementReport, LabelError> {
    let verdicts = projects.iter().map(|p| classify(&p.trace, criteria)).collect::<Result<Vec<_>, _>>()?;
    Ok(agreement(projects.iter().map(|p| &p.truth).zip(verdicts.iter().map(|v| (v.label, v.rugpull_block)))))
}

/// Folds `(truth, (verdict label, located block))` pairs into a report.
pub fn agreement<'a>(pairs: impl Iterator<Item = (&'a GroundTruth, (Label, Option<u64>))>) -> AgreementReport {
    let mut r = AgreementReport::default();
    for (truth, (label, block)) in pairs {
        r.n += 1;
        *r.confusion.entry((truth.label, label)).or_default() += 1;
        if label == Label::Dead {
            match (truth.rugpull_block, block) {
                (Some(t), Some(b)) => *r.block_errors.entry(t.abs_diff(b)).or_default() += 1,
                (_, None) => r.unlocated += 1,
                _ => {}
            }
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{derive_holder_snapshot, serialize_trace};
    use crate::model::replay_pool_state;

    fn small(seed: u64, n: usize, rug_fraction: f64) -> GeneratorConfig {
        GeneratorConfig { seed, n_projects: n, rug_fraction, ..Default::default() }
    }

    #[test]
    fn all_legit_is_all_alive() {
        let projects = generate(&small(1, 40, 0.0)).unwrap();
        let r = validate_against_labeler(&projects, &DeadTokenCriteria::default()).unwrap();
        assert_eq!(r.confusion.get(&(Label::Alive, Label::Alive)), Some(&40));
    }

    #[test]
    fn all_rug_is_all_dead_and_located() {
        let projects = generate(&small(2, 40, 1.0)).unwrap();
        let r = validate_against_labeler(&projects, &DeadTokenCriteria::default()).unwrap();
        assert_eq!(r.confusion.get(&(Label::Dead, Label::Dead)), Some(&40), "{r}");
        assert!(r.max_block_error().unwrap() <= 2);
        assert_eq!(r.unlocated, 0);
    }

    #[test]
    fn zero_delay_locates_the_exact_block() {
        let cfg = GeneratorConfig { drain_delay_blocks: (0, 0), ..small(3, 30, 1.0) };
        let r = validate_against_labeler(&generate(&cfg).unwrap(), &DeadTokenCriteria::default()).unwrap();
        assert_eq!(r.block_errors.keys().copied().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn unreachable_persistence_means_all_alive() {
        let projects = generate(&small(4, 30, 0.5)).unwrap();
        let criteria = DeadTokenCriteria { persistence_hours: 24 * 400, ..Default::default() };
        let r = validate_against_labeler(&projects, &criteria).unwrap();
        let legit = projects.iter().filter(|p| p.truth.label == Label::Alive).count();
        assert_eq!(r.agreement(), legit as f64 / 30.0);
    }

    #[test]
    fn same_seed_same_bytes() {
        let a: Vec<String> = generate(&small(9, 10, 0.5)).unwrap().iter().map(|p| serialize_trace(&p.trace)).collect();
        let b: Vec<String> = generate(&small(9, 10, 0.5)).unwrap().iter().map(|p| serialize_trace(&p.trace)).collect();
        assert_eq!(a, b);
        let c: Vec<String> = generate(&small(10, 10, 0.5)).unwrap().iter().map(|p| serialize_trace(&p.trace)).collect();
        assert_ne!(a, c);
        // A project does not depend on how many others are generated.
        assert_eq!(generate_project(&small(9, 1, 0.5), 7).trace, generate(&small(9, 10, 0.5)).unwrap()[7].trace);
    }

    #[test]
    fn rug_traces_follow_the_lifecycle() {
        let cfg = small(5, 60, 1.0);
        for p in generate(&cfg).unwrap() {
            let t = &p.trace;
            let rug = p.truth.rugpull_time.unwrap();
            // Social burst strictly before the pull.
            let burst_max = t.osint_events().iter().filter(|e| e.timestamp < rug).map(|e| e.count).max().unwrap();
            assert!(t.osint_events().iter().filter(|e| e.timestamp >= rug && e.kind == OsintKind::Tweet).all(|e| e.count < burst_max));
            // No swaps after the drain, nothing on-chain after inactivity end.
            let drain = t.onchain_events().iter().rfind(|e| matches!(e.kind, OnChainKind::LiquidityRemove { .. })).unwrap();
            assert!(t.onchain_events().iter().filter(|e| e.kind.is_swap()).all(|e| e.timestamp <= drain.timestamp));
            assert_eq!(t.onchain_events().last().unwrap().timestamp, p.truth.inactivity_end.unwrap());
            assert_eq!(replay_pool_state(t, t.observation_end()).unwrap().quote_reserve, Decimal::ZERO);
            assert!(t.observation_end() - p.truth.inactivity_end.unwrap() > 72 * SECS_PER_HOUR);
            // Pool tokens held as a wallet balance match the pool reserve.
            let snap = derive_holder_snapshot(t, drain.timestamp).unwrap();
            assert_eq!(snap.balance(&t.meta().pool), Decimal::ZERO);
            assert_eq!(snap.total(), t.total_supply());
        }
    }

    #[test]
    fn collapse_fraction_within_three_sigma() {
        let cfg = small(6, 200, 1.0);
        let (mut early, mut total) = (0usize, 0usize);
        for p in generate(&cfg).unwrap() {
            let t = &p.trace;
            let drain = t.onchain_events().iter().rfind(|e| matches!(e.kind, OnChainKind::LiquidityRemove { .. })).unwrap().timestamp;
            for e in t.onchain_events().iter().filter(|e| e.timestamp > drain) {
                total += 1;
                if e.timestamp - drain <= SECS_PER_DAY {
                    early += 1;
                }
            }
        }
        let p = cfg.tx_collapse_24h_fraction;
        let n = total as f64;
        let sigma = (n * p * (1.0 - p)).sqrt();
        // The last event is pinned to the inactivity end, which is at
        // least a day out; allow for those 200 forced events.
        assert!((early as f64 - n * p).abs() <= 3.0 * sigma + 200.0 * p, "early {early} of {total}");
    }

    #[test]
    fn legit_pool_and_holders_stay_consistent() {
        for p in generate(&small(7, 30, 0.0)).unwrap() {
            let t = &p.trace;
            let state = replay_pool_state(t, t.observation_end()).unwrap();
            assert!(state.quote_reserve.is_positive());
            let snap = derive_holder_snapshot(t, t.observation_end()).unwrap();
            assert_eq!(snap.balance(&t.meta().pool), state.token_reserve);
            assert_eq!(snap.total(), t.total_supply());
        }
    }

    #[test]
    fn ground_truth_round_trip() {
        let truths: Vec<GroundTruth> = generate(&small(8, 12, 0.5)).unwrap().into_iter().map(|p| p.truth).collect();
        assert_eq!(read_ground_truth(&write_ground_truth(&truths).unwrap()).unwrap(), truths);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(GeneratorConfig { rug_fraction: 1.5, ..Default::default() }.validate().is_err());
        assert!(GeneratorConfig { drain_delay_blocks: (3, 1), ..Default::default() }.validate().is_err());
        assert!(GeneratorConfig { base_tx_rate: 0.0, ..Default::default() }.validate().is_err());
        assert!(GeneratorConfig::default().validate().is_ok());
    }
}
