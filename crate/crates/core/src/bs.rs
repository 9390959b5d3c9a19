//! Analytic Black-Scholes machinery: call payoff, normal CDF, and the
//! closed-form European call price. Used both as the synthetic-data pricer
//! and as the reference surface for the regularized PDE solver.

/// Parameters of a European call under Black-Scholes dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsParams {
    /// Current stock price, > 0.
    pub s: f64,
    /// Strike price, > 0.
    pub strike: f64,
    /// Volatility per sqrt(year), > 0.
    pub sigma: f64,
    /// Time to maturity in years, >= 0.
    pub tau: f64,
    /// Risk-free rate per year, >= 0.
    pub rate: f64,
}

impl BsParams {
    pub fn is_valid(&self) -> bool {
        self.s > 0.0 && self.strike > 0.0 && self.sigma > 0.0 && self.tau >= 0.0 && self.rate >= 0.0
    }
}

/// Call payoff max(s - k, 0).
pub fn payoff(s: f64, strike: f64) -> f64 {
    (s - strike).max(0.0)
}

/// Standard normal cumulative distribution function.
///
/// Hart's rational approximation (double-precision form), absolute error
/// well below 1e-15 over the whole real line.
pub fn norm_cdf(x: f64) -> f64 {
    let xabs = x.abs();
    let tail = if xabs > 37.0 {
        0.0
    } else {
        let e = (-xabs * xabs / 2.0).exp();
        if xabs < 7.071_067_811_865_47 {
            let mut n = 3.526_249_659_989_11e-2 * xabs + 0.700_383_064_443_688;
            n = n * xabs + 6.373_962_203_531_65;
            n = n * xabs + 33.912_866_078_383;
            n = n * xabs + 112.079_291_497_871;
            n = n * xabs + 221.213_596_169_931;
            n = n * xabs + 220.206_867_912_376;
            let mut d = 8.838_834_764_831_84e-2 * xabs + 1.755_667_163_182_64;
            d = d * xabs + 16.064_177_579_207;
            d = d * xabs + 86.780_732_202_946_1;
            d = d * xabs + 296.564_248_779_674;
            d = d * xabs + 637.333_633_378_831;
            d = d * xabs + 793.826_512_519_948;
            d = d * xabs + 440.413_735_824_752;
            e * n / d
        } else {
            let mut b = xabs + 0.65;
            b = xabs + 4.0 / b;
            b = xabs + 3.0 / b;
            b = xabs + 2.0 / b;
            b = xabs + 1.0 / b;
            e / b / 2.506_628_274_631_000_5
        }
    };
    if x > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Black-Scholes price of a European call.
///
/// `tau = 0` returns the payoff exactly (the expiry limit), never a
/// division by zero.
pub fn bs_call(p: &BsParams) -> f64 {
    debug_assert!(p.is_valid());
    if p.tau == 0.0 {
        return payoff(p.s, p.strike);
    }
    let sig_sqrt_t = p.sigma * p.tau.sqrt();
    let theta_plus =
        ((p.s / p.strike).ln() + (p.rate + p.sigma * p.sigma / 2.0) * p.tau) / sig_sqrt_t;
    let theta_minus = theta_plus - sig_sqrt_t;
    p.s * norm_cdf(theta_plus) - (-p.rate * p.tau).exp() * p.strike * norm_cdf(theta_minus)
}
