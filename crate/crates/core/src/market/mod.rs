//! Raw market-data schema: one row per option per trading day, plus a
//! synthetic-market generator so the pipeline runs without a proprietary
//! data feed.

mod csv_io;
mod synth;

pub use csv_io::{parse_quotes, write_quotes, write_quotes_extended, ParseOutcome, RejectedRow};
pub use synth::{generate_synthetic, SyntheticMarketConfig};

use thiserror::Error;

/// Day offsets relative to the present row's date.
pub const OPTION_DAYS: [i32; 5] = [-2, -1, 0, 1, 2];
pub const STOCK_DAYS: [i32; 4] = [-2, -1, 0, 1];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptionType {
    Call,
    Put,
}

impl OptionType {
    pub fn as_str(&self) -> &'static str {
        match self {
            OptionType::Call => "call",
            OptionType::Put => "put",
        }
    }
}

impl std::str::FromStr for OptionType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "call" | "c" => Ok(OptionType::Call),
            "put" | "p" => Ok(OptionType::Put),
            other => Err(format!("unknown option type {other:?}")),
        }
    }
}

/// One option on one trading day. Day-indexed quotes are stored as explicit
/// fields; unpopulated cells are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptionQuoteRow {
    pub option_name: String,
    pub grid_count: u32,
    pub beta: f64,
    /// ISO-8601 calendar date.
    pub date: String,

    pub option_ask_m2: Option<f64>,
    pub option_ask_m1: Option<f64>,
    pub option_ask_0: Option<f64>,
    pub option_ask_p1: Option<f64>,
    pub option_ask_p2: Option<f64>,
    pub option_bid_m2: Option<f64>,
    pub option_bid_m1: Option<f64>,
    pub option_bid_0: Option<f64>,
    pub option_bid_p1: Option<f64>,
    pub option_bid_p2: Option<f64>,

    pub stock_ask_m2: Option<f64>,
    pub stock_ask_m1: Option<f64>,
    pub stock_ask_0: Option<f64>,
    pub stock_ask_p1: Option<f64>,
    pub stock_bid_m2: Option<f64>,
    pub stock_bid_m1: Option<f64>,
    pub stock_bid_0: Option<f64>,
    pub stock_bid_p1: Option<f64>,

    pub ivol_m2: Option<f64>,
    pub ivol_m1: Option<f64>,
    pub ivol_0: Option<f64>,
    pub ivol_p1: Option<f64>,
    pub ivol_p2: Option<f64>,

    /// Minimizer estimates one and two days ahead, filled by the solver
    /// stage or read back from file.
    pub est_p1: Option<f64>,
    pub est_p2: Option<f64>,

    pub option_mean_p1: Option<f64>,
    pub option_mean_p2: Option<f64>,

    pub option_type: OptionType,

    // Solver-stage outputs, present only in extended files.
    pub minimizer_error_p1: Option<f64>,
    pub minimizer_error_p2: Option<f64>,
    pub residual_norm: Option<f64>,
}

impl OptionQuoteRow {
    /// Empty call row with solver defaults; used by the generator and tests.
    pub fn empty(name: &str, date: &str) -> Self {
        OptionQuoteRow {
            option_name: name.to_string(),
            grid_count: 20,
            beta: 0.01,
            date: date.to_string(),
            option_ask_m2: None,
            option_ask_m1: None,
            option_ask_0: None,
            option_ask_p1: None,
            option_ask_p2: None,
            option_bid_m2: None,
            option_bid_m1: None,
            option_bid_0: None,
            option_bid_p1: None,
            option_bid_p2: None,
            stock_ask_m2: None,
            stock_ask_m1: None,
            stock_ask_0: None,
            stock_ask_p1: None,
            stock_bid_m2: None,
            stock_bid_m1: None,
            stock_bid_0: None,
            stock_bid_p1: None,
            ivol_m2: None,
            ivol_m1: None,
            ivol_0: None,
            ivol_p1: None,
            ivol_p2: None,
            est_p1: None,
            est_p2: None,
            option_mean_p1: None,
            option_mean_p2: None,
            option_type: OptionType::Call,
            minimizer_error_p1: None,
            minimizer_error_p2: None,
            residual_norm: None,
        }
    }

    /// Today's option mid-price, when both quotes are populated.
    pub fn option_mean_0(&self) -> Option<f64> {
        match (self.option_bid_0, self.option_ask_0) {
            (Some(b), Some(a)) => Some((b + a) / 2.0),
            _ => None,
        }
    }

    /// Checks every schema invariant; `Err` carries the first violation.
    pub fn validate(&self) -> Result<(), String> {
        if self.grid_count < 4 {
            return Err(format!("grid_count {} < 4", self.grid_count));
        }
        if self.beta.is_nan() || self.beta < 0.0 {
            return Err(format!("beta {} negative or NaN", self.beta));
        }
        let quote_pairs: [(&str, Option<f64>, Option<f64>); 9] = [
            ("option -2", self.option_bid_m2, self.option_ask_m2),
            ("option -1", self.option_bid_m1, self.option_ask_m1),
            ("option 0", self.option_bid_0, self.option_ask_0),
            ("option +1", self.option_bid_p1, self.option_ask_p1),
            ("option +2", self.option_bid_p2, self.option_ask_p2),
            ("stock -2", self.stock_bid_m2, self.stock_ask_m2),
            ("stock -1", self.stock_bid_m1, self.stock_ask_m1),
            ("stock 0", self.stock_bid_0, self.stock_ask_0),
            ("stock +1", self.stock_bid_p1, self.stock_ask_p1),
        ];
        for (name, bid, ask) in quote_pairs {
            if let (Some(b), Some(a)) = (bid, ask) {
                if b > a {
                    return Err(format!("bid exceeds ask ({name})"));
                }
            }
        }
        for (name, v) in [
            ("ivol -2", self.ivol_m2),
            ("ivol -1", self.ivol_m1),
            ("ivol 0", self.ivol_0),
            ("ivol +1", self.ivol_p1),
            ("ivol +2", self.ivol_p2),
        ] {
            if let Some(v) = v {
                if v.is_nan() || v <= 0.0 {
                    return Err(format!("{name} not positive: {v}"));
                }
            }
        }
        for (name, mean, bid, ask) in [
            ("option_mean_p1", self.option_mean_p1, self.option_bid_p1, self.option_ask_p1),
            ("option_mean_p2", self.option_mean_p2, self.option_bid_p2, self.option_ask_p2),
        ] {
            if let (Some(m), Some(b), Some(a)) = (mean, bid, ask) {
                let mid = (b + a) / 2.0;
                let tol = 1e-9 * (1.0 + mid.abs());
                if (m - mid).abs() > tol {
                    return Err(format!("{name} {m} differs from mid {mid}"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum MarketError {
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("non-numeric field in data row {row}, column {column:?}: {value:?}")]
    NonNumericField { row: usize, column: String, value: String },
    #[error("empty input: no header row")]
    EmptyInput,
    #[error("invalid synthetic-market config: {0}")]
    InvalidConfig(String),
    #[error("io failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv failure: {0}")]
    Csv(#[from] csv::Error),
}
