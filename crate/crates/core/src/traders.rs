//! The three trader populations: noise traders gated by an activity function
//! of their remembered return, MACD chartists, and fundamentalists chasing a
//! random-walk fundamental value.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::num::{nearest_int, sgn, Real};

/// EMA weight `2 / (length + 1)`.
#[inline]
pub fn ema_weight<T: Real>(length: usize) -> T {
    T::lit(2.0) / T::from_count(length + 1)
}

/// One step of an exponential moving average of the given length.
pub fn ema_update<T: Real>(prev: T, x: T, length: usize) -> Result<T> {
    if length < 1 {
        return Err(Error::Precondition("EMA length must be at least 1".into()));
    }
    Ok(ema_step(prev, x, ema_weight(length)))
}

#[inline]
fn ema_step<T: Real>(prev: T, x: T, w: T) -> T {
    w * x + (T::one() - w) * prev
}

/// Fraction of a noise group that trades after remembering return `r`:
/// `(1 + d e^{-a(|r|-b)}) / (1 + e^{-a(|r|-b)})`.
///
/// Evaluated so that only `e^{-|x|}` is ever formed, which keeps `a = 4000`
/// finite for any `r`.
pub fn omega<T: Real>(r: T, a: T, b: T, d: T) -> T {
    let x = a * (r.abs() - b);
    if x >= T::zero() {
        let e = (-x).exp();
        (T::one() + d * e) / (T::one() + e)
    } else {
        // Multiply through by e^{x}.
        let e = x.exp();
        (e + d) / (e + T::one())
    }
}

/// `[n * omega]` with halves away from zero, kept inside `[0, n]`.
pub fn active_noise_count<T: Real>(group_size: usize, omega: T) -> usize {
    let raw = nearest_int(T::from_count(group_size) * omega);
    raw.clamp(0, group_size as i64) as usize
}

/// Logistic buy probability `1 / (1 + e^{-u r})`.
pub fn buy_probability<T: Real>(r: T, u: T) -> T {
    let z = u * r;
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// Parameters of the two-stage noise-trader decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseRule<T> {
    /// Herding strength `u`.
    pub herding: T,
    /// Steepness `a` of the activity function.
    pub steepness: T,
    /// Threshold width `b` of the activity function.
    pub width: T,
    /// Minimum active fraction `d`.
    pub min_active: T,
}

/// A pool of exchangeable noise traders sharing one memory length.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseGroupState<T> {
    memory: usize,
    size: usize,
    weight: T,
    ema: T,
}

impl<T: Real> NoiseGroupState<T> {
    pub fn new(memory: usize, size: usize) -> Result<Self> {
        if memory < 1 {
            return Err(Error::Precondition("noise memory length must be at least 1".into()));
        }
        Ok(Self { memory, size, weight: ema_weight(memory), ema: T::zero() })
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Remembered proportional return `R_{t,n}`.
    pub fn ema(&self) -> T {
        self.ema
    }

    pub fn set_ema(&mut self, value: T) {
        self.ema = value;
    }

    /// Absorbs the latest proportional return into the group's memory.
    pub fn observe(&mut self, r: T) {
        self.ema = ema_step(self.ema, r, self.weight);
    }
}

/// Excess demand and active count for one noise group in one tick.
///
/// Draws exactly one uniform per active trader, in trader order.
pub fn noise_group_demand<T: Real, R: Rng + ?Sized>(
    group: &NoiseGroupState<T>,
    rule: &NoiseRule<T>,
    rng: &mut R,
) -> (i64, usize) {
    if group.size == 0 {
        return (0, 0);
    }
    let r = group.ema;
    let active =
        active_noise_count(group.size, omega(r, rule.steepness, rule.width, rule.min_active));
    let p_buy = buy_probability(r, rule.herding).as_f64();
    let buyers = (0..active).filter(|_| rng.random::<f64>() < p_buy).count();
    (2 * buyers as i64 - active as i64, active)
}

/// MACD indicator state: fast and slow price EMAs, their difference and the
/// signal line (EMA of the difference).
#[derive(Debug, Clone, PartialEq)]
pub struct MacdState<T> {
    fast: T,
    slow: T,
    macd: T,
    signal: T,
    fast_w: T,
    slow_w: T,
    signal_w: T,
}

impl<T: Real> MacdState<T> {
    /// Starts with both price EMAs at `price` and a zero signal line.
    pub fn new(price: T, fast_len: usize, slow_len: usize, signal_len: usize) -> Result<Self> {
        if fast_len < 1 || slow_len < 1 || signal_len < 1 {
            return Err(Error::Precondition("MACD lengths must be at least 1".into()));
        }
        Ok(Self {
            fast: price,
            slow: price,
            macd: T::zero(),
            signal: T::zero(),
            fast_w: ema_weight(fast_len),
            slow_w: ema_weight(slow_len),
            signal_w: ema_weight(signal_len),
        })
    }

    pub fn update(&mut self, price: T) {
        self.fast = ema_step(self.fast, price, self.fast_w);
        self.slow = ema_step(self.slow, price, self.slow_w);
        self.macd = self.fast - self.slow;
        self.signal = ema_step(self.signal, self.macd, self.signal_w);
    }

    pub fn fast(&self) -> T {
        self.fast
    }

    pub fn slow(&self) -> T {
        self.slow
    }

    pub fn macd(&self) -> T {
        self.macd
    }

    pub fn signal(&self) -> T {
        self.signal
    }
}

/// All chartists act as one block: `N_T * sgn(M - s)`.
pub fn technical_demand<T: Real>(macd: &MacdState<T>, count: usize) -> i64 {
    count as i64 * sgn(macd.macd - macd.signal)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FundamentalMode {
    Varying,
    Constant,
}

impl FundamentalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FundamentalMode::Varying => "varying",
            FundamentalMode::Constant => "constant",
        }
    }
}

impl std::str::FromStr for FundamentalMode {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "varying" => Ok(FundamentalMode::Varying),
            "constant" => Ok(FundamentalMode::Constant),
            _ => Err(()),
        }
    }
}

/// Smallest multiplier allowed in the fundamental random walk.
pub const FUNDAMENTAL_FLOOR: f64 = 1e-6;

/// `f_prev * (1 + drift + vol * eps)`, with the multiplier floored at
/// [`FUNDAMENTAL_FLOOR`] so the value stays positive.
pub fn fundamental_value_step<T: Real>(f_prev: T, drift: T, vol: T, eps: T) -> T {
    let mut mult = T::one() + drift + vol * eps;
    if mult <= T::zero() {
        log::warn!("fundamental multiplier {mult} clamped to {FUNDAMENTAL_FLOOR}");
        mult = T::lit(FUNDAMENTAL_FLOOR);
    }
    f_prev * mult
}

#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalState<T> {
    value: T,
    mode: FundamentalMode,
}

impl<T: Real> FundamentalState<T> {
    pub fn new(value: T, mode: FundamentalMode) -> Self {
        Self { value, mode }
    }

    pub fn value(&self) -> T {
        self.value
    }

    pub fn mode(&self) -> FundamentalMode {
        self.mode
    }

    /// Advances one tick. Constant mode neither moves nor consumes randomness.
    pub fn advance<R: Rng + ?Sized>(&mut self, drift: T, vol: T, rng: &mut R) -> T {
        if self.mode == FundamentalMode::Varying {
            let eps: f64 = rng.sample(StandardNormal);
            self.value = fundamental_value_step(self.value, drift, vol, T::lit(eps));
        }
        self.value
    }
}

/// `N_F * sgn(f - S)`: buy below value, sell above.
pub fn fundamental_demand<T: Real>(fundamental: T, price: T, count: usize) -> i64 {
    count as i64 * sgn(fundamental - price)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const A: f64 = 4000.0;
    const B: f64 = 0.02;
    const D: f64 = 0.05;

    #[test]
    fn ema_examples() {
        assert_eq!(ema_update(123.0, 0.7, 1).unwrap(), 0.7);
        assert_abs_diff_eq!(ema_update(0.0, 0.3, 5).unwrap(), 0.1, epsilon = 1e-15);
        assert!(ema_update(0.0, 1.0_f64, 0).is_err());
    }

    #[test]
    fn ema_converges_monotonically_to_constant_input() {
        let mut v = 0.0_f64;
        let mut last_gap = f64::INFINITY;
        for _ in 0..500 {
            v = ema_update(v, 2.5, 9).unwrap();
            let gap = (2.5 - v).abs();
            assert!(gap <= last_gap);
            assert!(v <= 2.5);
            last_gap = gap;
        }
        assert_abs_diff_eq!(v, 2.5, epsilon = 1e-12);
    }

    #[test]
    fn omega_examples() {
        for &a in &[1.0, 50.0, A] {
            for &d in &[0.05, 0.5] {
                assert_abs_diff_eq!(omega(B, a, B, d), (1.0 + d) / 2.0, epsilon = 1e-15);
                assert_abs_diff_eq!(omega(-B, a, B, d), (1.0 + d) / 2.0, epsilon = 1e-15);
            }
        }
        for &r in &[0.0, 0.01, -0.3, 5.0, 1e6] {
            assert_eq!(omega(r, A, B, 1.0), 1.0);
        }
        assert_abs_diff_eq!(omega(0.0, A, B, D), 0.05, epsilon = 1e-15);
    }

    #[test]
    fn omega_stays_finite_at_extremes() {
        for &r in &[0.0, 1e-300, 0.5, 1e3, f64::MAX / 1e10] {
            let w = omega(r, 1e6, B, D);
            assert!(w.is_finite() && (D..=1.0).contains(&w), "omega({r}) = {w}");
        }
        assert_eq!(omega(10.0, A, B, D), 1.0);
    }

    #[test]
    fn active_count_examples() {
        assert_eq!(active_noise_count(8, 1.0), 8);
        assert_eq!(active_noise_count(16, 0.05), 1);
        assert_eq!(active_noise_count(4, 0.05), 0);
        assert_eq!(active_noise_count(4, 0.625), 3); // 2.5 rounds up
        assert_eq!(active_noise_count(0, 0.9), 0);
    }

    #[test]
    fn active_count_lower_bound_matches_min_fraction() {
        // Lower bound [(1 + d e^{ab}) / (1 + e^{ab}) N_n] ~ [d N_n] for these values.
        let lo = omega(0.0, A, B, D);
        for n in [4usize, 8, 16, 100] {
            assert_eq!(active_noise_count(n, lo), nearest_int(D * n as f64) as usize);
        }
    }

    #[test]
    fn buy_probability_examples() {
        assert_eq!(buy_probability(0.0, 5.0), 0.5);
        for &r in &[-3.0, 0.0, 0.4, 100.0] {
            assert_eq!(buy_probability(r, 0.0), 0.5);
        }
        let expected = 1.0 / (1.0 + (-1.0_f64).exp());
        assert_abs_diff_eq!(buy_probability(0.2, 5.0), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(expected, 0.731059, epsilon = 1e-6);
        assert!(buy_probability(-1e6, 5.0) >= 0.0);
    }

    fn rule(u: f64, d: f64) -> NoiseRule<f64> {
        NoiseRule { herding: u, steepness: A, width: B, min_active: d }
    }

    #[test]
    fn coin_toss_group_is_unbiased() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let group = NoiseGroupState::<f64>::new(5, 16).unwrap();
        let ticks = 100_000;
        let sum: i64 = (0..ticks)
            .map(|_| {
                let (dem, act) = noise_group_demand(&group, &rule(0.0, 1.0), &mut rng);
                assert_eq!(act, 16);
                assert!(dem.abs() <= 16 && (dem + 16) % 2 == 0);
                dem
            })
            .sum();
        let mean = sum as f64 / ticks as f64;
        let sigma = 4.0; // sqrt(16)
        assert!(mean.abs() < 4.0 * sigma / (ticks as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn saturated_buy_probability_makes_everyone_buy() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut group = NoiseGroupState::<f64>::new(1, 8).unwrap();
        group.set_ema(10.0);
        // P = 1/(1+e^{-50}): the chance of any seller in 10^4 draws of 8 is ~1e-17.
        for _ in 0..10_000 {
            let (dem, act) = noise_group_demand(&group, &rule(5.0, D), &mut rng);
            assert_eq!(act, 8);
            assert_eq!(dem, 8);
        }
    }

    #[test]
    fn inactive_group_has_no_demand_and_draws_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let reference = rng.clone();
        let group = NoiseGroupState::<f64>::new(21, 4).unwrap(); // [4 * 0.05] = 0
        assert_eq!(noise_group_demand(&group, &rule(5.0, D), &mut rng), (0, 0));
        assert_eq!(rng, reference);
    }

    #[test]
    fn equal_macd_lengths_never_signal() {
        let mut macd = MacdState::new(100.0, 12, 12, 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut price = 100.0;
        for _ in 0..2000 {
            price *= 1.0 + 0.02 * (rng.random::<f64>() - 0.5);
            macd.update(price);
            assert_eq!(macd.macd(), 0.0);
            assert_eq!(macd.signal(), 0.0);
            assert_eq!(technical_demand(&macd, 2), 0);
        }
    }

    /// Independent MACD recurrences over a full price history.
    fn macd_oracle(prices: &[f64], la: f64, lb: f64, l: f64) -> (f64, f64) {
        let (wa, wb, ws) = (2.0 / (la + 1.0), 2.0 / (lb + 1.0), 2.0 / (l + 1.0));
        let (mut a, mut b, mut s) = (prices[0], prices[0], 0.0);
        for &p in &prices[1..] {
            a = wa * p + (1.0 - wa) * a;
            b = wb * p + (1.0 - wb) * b;
            s = ws * (a - b) + (1.0 - ws) * s;
        }
        (a - b, s)
    }

    #[test]
    fn ramp_up_and_down_drive_chartists() {
        let up: Vec<f64> = (0..=200).map(|t| 100.0 + t as f64).collect();
        let (m, s) = macd_oracle(&up, 12.0, 26.0, 9.0);
        assert!(m > s);

        let mut macd = MacdState::new(up[0], 12, 26, 9).unwrap();
        up[1..].iter().for_each(|&p| macd.update(p));
        assert_abs_diff_eq!(macd.macd(), m, epsilon = 1e-9);
        assert_abs_diff_eq!(macd.signal(), s, epsilon = 1e-9);
        assert_eq!(technical_demand(&macd, 2), 2);

        let down: Vec<f64> = (0..=200).map(|t| 300.0 - t as f64).collect();
        let (m, s) = macd_oracle(&down, 12.0, 26.0, 9.0);
        assert!(m < s);
        let mut macd = MacdState::new(down[0], 12, 26, 9).unwrap();
        down[1..].iter().for_each(|&p| macd.update(p));
        assert_eq!(technical_demand(&macd, 2), -2);
    }

    #[test]
    fn fundamental_examples() {
        assert_eq!(fundamental_value_step(100.0, 0.0, 0.0, 1.7), 100.0);
        assert_abs_diff_eq!(fundamental_value_step(100.0, 3e-4, 0.025, 0.0), 100.03, epsilon = 1e-12);
        assert_abs_diff_eq!(fundamental_value_step(100.0, 0.0, 0.025, 1.0), 102.5, epsilon = 1e-12);
        assert_abs_diff_eq!(
            fundamental_value_step(100.0, 0.0, 0.025, -50.0),
            100.0 * FUNDAMENTAL_FLOOR,
            epsilon = 1e-18
        );

        assert_eq!(fundamental_demand(100.0, 100.0, 2), 0);
        assert_eq!(fundamental_demand(110.0, 100.0, 2), 2);
        assert_eq!(fundamental_demand(90.0, 100.0, 2), -2);
    }

    #[test]
    fn constant_fundamental_consumes_no_randomness() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let reference = rng.clone();
        let mut f = FundamentalState::new(100.0, FundamentalMode::Constant);
        for _ in 0..10 {
            assert_eq!(f.advance(3e-4, 0.025, &mut rng), 100.0);
        }
        assert_eq!(rng, reference);
    }

    proptest! {
        #[test]
        fn omega_is_even_bounded_and_monotone(
            r in -1.0f64..1.0, dr in 0.0f64..0.1,
            a in 1.0f64..5000.0, b in 0.0f64..0.1, d in 0.001f64..1.0,
        ) {
            let w = omega(r, a, b, d);
            prop_assert_eq!(w, omega(-r, a, b, d));
            prop_assert!(w >= d - 1e-15 && w <= 1.0 + 1e-15);
            prop_assert!(omega(r.abs() + dr, a, b, d) >= w - 1e-15);
        }

        #[test]
        fn buy_probability_complement_and_monotone(
            r in -2.0f64..2.0, dr in 1e-6f64..1.0, u in 0.0f64..50.0,
        ) {
            let p = buy_probability(r, u);
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!((p + buy_probability(-r, u) - 1.0).abs() <= 2.0 * f64::EPSILON);
            let q = buy_probability(r + dr, u);
            prop_assert!(q >= p);
            if u > 1.0 && (r * u).abs() < 5.0 {
                prop_assert!(q > p);
            }
        }

        #[test]
        fn ema_contracts_toward_input(
            p in -1e3f64..1e3, x in -1e3f64..1e3, n in 1usize..100,
        ) {
            let next = ema_update(p, x, n).unwrap();
            let w = 2.0 / (n as f64 + 1.0);
            prop_assert!(((next - x).abs() - (1.0 - w) * (p - x).abs()).abs() <= 1e-9);
            prop_assert!((next - x).abs() <= (p - x).abs() + 1e-9);
        }

        #[test]
        fn macd_signal_is_scale_invariant(
            steps in proptest::collection::vec(-0.05f64..0.05, 30..200),
            c in 0.01f64..100.0,
        ) {
            let mut base = MacdState::new(100.0, 12, 26, 9).unwrap();
            let mut scaled = MacdState::new(100.0 * c, 12, 26, 9).unwrap();
            let mut price = 100.0;
            for s in steps {
                price *= 1.0 + s;
                base.update(price);
                scaled.update(price * c);
                let rel = (scaled.macd() - c * base.macd()).abs();
                prop_assert!(rel <= 1e-9 * c * price);
                let gap = base.macd() - base.signal();
                // Signs agree unless the gap is within rounding of zero.
                if gap.abs() > 1e-9 * price {
                    prop_assert_eq!(technical_demand(&base, 3), technical_demand(&scaled, 3));
                }
            }
        }
    }
}
