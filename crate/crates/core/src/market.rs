//! Tick loop and price-impact equation.
//!
//! Each tick every trader decides on information through the previous tick:
//! the fundamental value advances first, then noise groups (in memory order
//! 1, 5, 21), chartists and fundamentalists submit demand, the price moves by
//! `(1 + m D / N)`, and finally all EMAs and the MACD absorb the new price.
//!
//! Randomness comes from a single `ChaCha8` stream seeded from `seed`. Per
//! tick the draw order is: one standard normal for the fundamental value
//! (varying mode only), then one uniform per active noise trader in group
//! order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::num::Real;
use crate::traders::{
    fundamental_demand, noise_group_demand, technical_demand, FundamentalMode,
    FundamentalState, MacdState, NoiseGroupState, NoiseRule,
};

/// Memory lengths of the three noise-trader groups, in draw order.
pub const NOISE_MEMORIES: [usize; 3] = [1, 5, 21];

/// Largest supported trader population.
pub const MAX_TRADERS: usize = i32::MAX as usize;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    /// Price-impact factor `m`, `0 < m < 1`.
    pub m: T,
    /// Herding strength `u` of the buy probability.
    pub u: T,
    /// Steepness `a` of the activity function.
    pub a: T,
    /// Threshold width `b` of the activity function.
    pub b: T,
    /// Minimum active fraction `d`.
    pub d: T,
    pub macd_fast: usize,
    pub macd_slow: usize,
    pub macd_signal: usize,
    /// Per-tick drift of the fundamental value.
    pub mu_f: T,
    /// Per-tick volatility of the fundamental value.
    pub sigma_f: T,
    pub n1: usize,
    pub n5: usize,
    pub n21: usize,
    pub n_technical: usize,
    pub n_fundamental: usize,
    /// Number of ticks to simulate.
    pub ticks: usize,
    pub s0: T,
    pub f0: T,
    pub f_mode: FundamentalMode,
    pub seed: u64,
}

impl<T: Real> ModelParams<T> {
    /// Trader Set A with the reference parameter values.
    pub fn trader_set_a() -> Self {
        Self {
            m: T::lit(0.4),
            u: T::lit(5.0),
            a: T::lit(4000.0),
            b: T::lit(0.02),
            d: T::lit(0.05),
            macd_fast: 12,
            macd_slow: 26,
            macd_signal: 9,
            mu_f: T::lit(3e-4),
            sigma_f: T::lit(0.025),
            n1: 4,
            n5: 4,
            n21: 8,
            n_technical: 2,
            n_fundamental: 2,
            ticks: 1_000_000,
            s0: T::lit(100.0),
            f0: T::lit(100.0),
            f_mode: FundamentalMode::Varying,
            seed: 1,
        }
    }

    /// Trader Set B: all noise traders remember 21 ticks.
    pub fn trader_set_b() -> Self {
        Self { n1: 0, n5: 0, n21: 16, ..Self::trader_set_a() }
    }

    pub fn noise_counts(&self) -> [usize; 3] {
        [self.n1, self.n5, self.n21]
    }

    pub fn total_noise(&self) -> usize {
        self.n1 + self.n5 + self.n21
    }

    /// Total trader count `N`, fixed for the whole run.
    pub fn total_traders(&self) -> usize {
        self.total_noise() + self.n_technical + self.n_fundamental
    }

    pub fn noise_rule(&self) -> NoiseRule<T> {
        NoiseRule { herding: self.u, steepness: self.a, width: self.b, min_active: self.d }
    }

    /// Checks every parameter constraint, naming the first offending key.
    pub fn validate(&self) -> Result<()> {
        let zero = T::zero();
        let one = T::one();
        let finite = |x: T| x.is_finite();
        let checks: [(bool, &'static str, &'static str); 14] = [
            (finite(self.m) && self.m > zero && self.m < one, "m", "0 < m < 1"),
            (finite(self.u) && self.u >= zero, "u", "u >= 0"),
            (finite(self.a) && self.a > zero, "a", "a > 0"),
            (finite(self.b) && self.b >= zero, "b", "b >= 0"),
            (finite(self.d) && self.d > zero && self.d <= one, "d", "0 < d <= 1"),
            (self.macd_fast >= 1, "l_A", "l_A >= 1"),
            (self.macd_slow >= 1, "l_B", "l_B >= 1"),
            (self.macd_signal >= 1, "l", "l >= 1"),
            (finite(self.mu_f), "mu_f", "a finite value"),
            (finite(self.sigma_f) && self.sigma_f >= zero, "sigma_f", "sigma_f >= 0"),
            (self.ticks >= 1, "T", "T >= 1"),
            (finite(self.s0) && self.s0 > zero, "S0", "S0 > 0"),
            (finite(self.f0) && self.f0 > zero, "f0", "f0 > 0"),
            (
                (1..=MAX_TRADERS).contains(&self.total_traders()),
                "N1",
                "1 <= N1 + N5 + N21 + N_T + N_F <= 2^31 - 1",
            ),
        ];
        match checks.iter().find(|(ok, _, _)| !ok) {
            Some(&(_, key, constraint)) => Err(Error::InvalidParam { key, constraint }),
            None => Ok(()),
        }
    }
}

/// `(1 + m D / N) * S_prev`.
pub fn price_update<T: Real>(prev: T, demand: i64, total: usize, m: T) -> Result<T> {
    if !(prev > T::zero()) {
        return Err(Error::Precondition(format!("price must be positive, got {prev}")));
    }
    if demand.unsigned_abs() as u128 > total as u128 {
        return Err(Error::Precondition(format!(
            "excess demand {demand} exceeds trader count {total}"
        )));
    }
    Ok(price_multiplier(demand, total, m) * prev)
}

#[inline]
fn price_multiplier<T: Real>(demand: i64, total: usize, m: T) -> T {
    T::one() + m * T::from_int(demand) / T::from_count(total)
}

/// `(S - S_prev) / S_prev`.
pub fn proportional_return<T: Real>(price: T, prev: T) -> Result<T> {
    if !(prev > T::zero()) {
        return Err(Error::Precondition(format!("previous price must be positive, got {prev}")));
    }
    Ok((price - prev) / prev)
}

/// Demand submitted in one tick, split by trader type.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DemandBreakdown {
    pub noise: i32,
    pub technical: i32,
    pub fundamental: i32,
    /// Excess demand `D_t`.
    pub total: i32,
    pub active_noise: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketState<T> {
    pub tick: usize,
    pub price: T,
    pub prev_price: T,
    pub last_return: T,
    pub fundamental: FundamentalState<T>,
    pub noise_groups: Vec<NoiseGroupState<T>>,
    pub macd: MacdState<T>,
}

/// A market that can be stepped one tick at a time.
#[derive(Debug, Clone)]
pub struct Market<T> {
    params: ModelParams<T>,
    rule: NoiseRule<T>,
    total: usize,
    state: MarketState<T>,
    rng: ChaCha8Rng,
}

impl<T: Real> Market<T> {
    pub fn new(params: ModelParams<T>) -> Result<Self> {
        params.validate()?;
        let noise_groups = NOISE_MEMORIES
            .iter()
            .zip(params.noise_counts())
            .map(|(&memory, size)| NoiseGroupState::new(memory, size))
            .collect::<Result<Vec<_>>>()?;
        let state = MarketState {
            tick: 0,
            price: params.s0,
            prev_price: params.s0,
            last_return: T::zero(),
            fundamental: FundamentalState::new(params.f0, params.f_mode),
            noise_groups,
            macd: MacdState::new(
                params.s0,
                params.macd_fast,
                params.macd_slow,
                params.macd_signal,
            )?,
        };
        Ok(Self {
            rule: params.noise_rule(),
            total: params.total_traders(),
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            params,
            state,
        })
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    pub fn state(&self) -> &MarketState<T> {
        &self.state
    }

    /// Advances one tick and returns the demand that moved the price.
    pub fn step(&mut self) -> DemandBreakdown {
        let p = &self.params;
        let st = &mut self.state;
        let prev = st.price;

        let f = st.fundamental.advance(p.mu_f, p.sigma_f, &mut self.rng);

        let mut noise = 0i64;
        let mut active = 0usize;
        for group in &st.noise_groups {
            let (dem, act) = noise_group_demand(group, &self.rule, &mut self.rng);
            noise += dem;
            active += act;
        }
        let technical = technical_demand(&st.macd, p.n_technical);
        let fundamental = fundamental_demand(f, prev, p.n_fundamental);
        let total = noise + technical + fundamental;
        debug_assert!(total.unsigned_abs() as usize <= self.total);

        let price = price_multiplier(total, self.total, p.m) * prev;
        let r = (price - prev) / prev;

        st.tick += 1;
        st.prev_price = prev;
        st.price = price;
        st.last_return = r;
        for group in &mut st.noise_groups {
            group.observe(r);
        }
        st.macd.update(price);

        DemandBreakdown {
            noise: noise as i32,
            technical: technical as i32,
            fundamental: fundamental as i32,
            total: total as i32,
            active_noise: active as u32,
        }
    }
}

/// Full record of one run: `ticks + 1` prices and fundamentals (index 0 is
/// the initial state) and one demand record per tick.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput<T> {
    pub prices: Vec<T>,
    pub fundamentals: Vec<T>,
    pub demands: Vec<DemandBreakdown>,
}

/// Runs the model for `params.ticks` ticks.
pub fn run_simulation<T: Real>(params: &ModelParams<T>) -> Result<SimulationOutput<T>> {
    let mut market = Market::new(params.clone())?;
    let n = params.ticks;
    let mut prices = Vec::with_capacity(n + 1);
    let mut fundamentals = Vec::with_capacity(n + 1);
    let mut demands = Vec::with_capacity(n);
    prices.push(params.s0);
    fundamentals.push(params.f0);
    for _ in 0..n {
        demands.push(market.step());
        prices.push(market.state.price);
        fundamentals.push(market.state.fundamental.value());
    }
    Ok(SimulationOutput { prices, fundamentals, demands })
}

/// Same path as [`run_simulation`] but keeps only the prices.
pub fn simulate_prices<T: Real>(params: &ModelParams<T>) -> Result<Vec<T>> {
    let mut market = Market::new(params.clone())?;
    let mut prices = Vec::with_capacity(params.ticks + 1);
    prices.push(params.s0);
    for _ in 0..params.ticks {
        market.step();
        prices.push(market.state.price);
    }
    Ok(prices)
}
