//! Synthetic market generator: geometric Brownian stock paths priced with
//! the analytic call formula, replacing a proprietary quote feed.

use super::{MarketError, OptionQuoteRow};
use crate::bs::{bs_call, BsParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticMarketConfig {
    pub n_options: usize,
    pub seed: u64,
    /// Drift per year.
    pub drift: f64,
    /// Volatility per sqrt(year), > 0.
    pub true_vol: f64,
    /// Half-spread as a fraction of mid, in [0, 0.5).
    pub spread_frac: f64,
    /// Strike band as multipliers of the day-0 spot, low <= high.
    pub strike_band: (f64, f64),
    /// Days to expiry counted from day 0; must exceed the +2 quote day.
    pub maturity_days: u32,
    /// Risk-free rate per year, >= 0.
    pub rate: f64,
}

impl Default for SyntheticMarketConfig {
    fn default() -> Self {
        SyntheticMarketConfig {
            n_options: 100,
            seed: 1,
            drift: 0.0,
            true_vol: 0.2,
            spread_frac: 0.02,
            strike_band: (0.9, 1.1),
            maturity_days: 30,
            rate: 0.0,
        }
    }
}

impl SyntheticMarketConfig {
    pub fn validate(&self) -> Result<(), MarketError> {
        if self.true_vol.is_nan() || self.true_vol <= 0.0 {
            return Err(MarketError::InvalidConfig(format!(
                "true_vol must be positive, got {}",
                self.true_vol
            )));
        }
        if !(0.0..0.5).contains(&self.spread_frac) {
            return Err(MarketError::InvalidConfig(format!(
                "spread_frac must lie in [0, 0.5), got {}",
                self.spread_frac
            )));
        }
        if !(self.strike_band.0 > 0.0 && self.strike_band.0 <= self.strike_band.1) {
            return Err(MarketError::InvalidConfig(format!(
                "strike_band must satisfy 0 < low <= high, got {:?}",
                self.strike_band
            )));
        }
        if self.maturity_days < 3 {
            return Err(MarketError::InvalidConfig(format!(
                "maturity_days must be >= 3, got {}",
                self.maturity_days
            )));
        }
        if self.rate.is_nan() || self.rate < 0.0 {
            return Err(MarketError::InvalidConfig(format!(
                "rate must be nonnegative, got {}",
                self.rate
            )));
        }
        if !self.drift.is_finite() {
            return Err(MarketError::InvalidConfig("drift must be finite".to_string()));
        }
        Ok(())
    }
}

fn spread(mid: f64, frac: f64) -> (f64, f64) {
    (mid * (1.0 - frac), mid * (1.0 + frac))
}

/// One option-day built from its own RNG stream, so generation is
/// order-independent across workers.
fn generate_one(config: &SyntheticMarketConfig, idx: u64) -> OptionQuoteRow {
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    rng.set_stream(idx + 1);

    // stock path over quote days -2..=+2
    let dt = 1.0 / TRADING_DAYS_PER_YEAR;
    let step_mu = (config.drift - config.true_vol * config.true_vol / 2.0) * dt;
    let step_sd = config.true_vol * dt.sqrt();
    let mut stock = [0.0f64; 5];
    stock[0] = rng.gen_range(20.0..200.0);
    for d in 1..5 {
        let z: f64 = rng.sample(StandardNormal);
        stock[d] = stock[d - 1] * (step_mu + step_sd * z).exp();
    }

    let strike = stock[2] * rng.gen_range(config.strike_band.0..=config.strike_band.1);
    let mut row =
        OptionQuoteRow::empty(&format!("SYN{idx:06}_K{strike}"), "2020-06-15");

    let price = |day: i32, spot: f64| {
        bs_call(&BsParams {
            s: spot,
            strike,
            sigma: config.true_vol,
            tau: (config.maturity_days as f64 - day as f64) / TRADING_DAYS_PER_YEAR,
            rate: config.rate,
        })
    };

    let mut option_bid = [0.0f64; 5];
    let mut option_ask = [0.0f64; 5];
    let mut stock_bid = [0.0f64; 5];
    let mut stock_ask = [0.0f64; 5];
    for (i, day) in (-2i32..=2).enumerate() {
        let mid = price(day, stock[i]);
        (option_bid[i], option_ask[i]) = spread(mid, config.spread_frac);
        (stock_bid[i], stock_ask[i]) = spread(stock[i], config.spread_frac);
    }

    row.option_bid_m2 = Some(option_bid[0]);
    row.option_bid_m1 = Some(option_bid[1]);
    row.option_bid_0 = Some(option_bid[2]);
    row.option_bid_p1 = Some(option_bid[3]);
    row.option_bid_p2 = Some(option_bid[4]);
    row.option_ask_m2 = Some(option_ask[0]);
    row.option_ask_m1 = Some(option_ask[1]);
    row.option_ask_0 = Some(option_ask[2]);
    row.option_ask_p1 = Some(option_ask[3]);
    row.option_ask_p2 = Some(option_ask[4]);
    row.stock_bid_m2 = Some(stock_bid[0]);
    row.stock_bid_m1 = Some(stock_bid[1]);
    row.stock_bid_0 = Some(stock_bid[2]);
    row.stock_bid_p1 = Some(stock_bid[3]);
    row.stock_ask_m2 = Some(stock_ask[0]);
    row.stock_ask_m1 = Some(stock_ask[1]);
    row.stock_ask_0 = Some(stock_ask[2]);
    row.stock_ask_p1 = Some(stock_ask[3]);
    row.ivol_m2 = Some(config.true_vol);
    row.ivol_m1 = Some(config.true_vol);
    row.ivol_0 = Some(config.true_vol);
    row.ivol_p1 = Some(config.true_vol);
    row.ivol_p2 = Some(config.true_vol);
    row.option_mean_p1 = Some((option_bid[3] + option_ask[3]) / 2.0);
    row.option_mean_p2 = Some((option_bid[4] + option_ask[4]) / 2.0);
    row
}

/// Deterministic synthetic market: same config and seed produce the same
/// row sequence. The est / minimizer-error columns are left for the solver.
pub fn generate_synthetic(
    config: &SyntheticMarketConfig,
) -> Result<Vec<OptionQuoteRow>, MarketError> {
    config.validate()?;
    Ok((0..config.n_options as u64).map(|i| generate_one(config, i)).collect())
}
