//! Builds the 13-element normalized input vector per option-day, assigns
//! the next-day direction label, and splits the dataset into train /
//! validation / test partitions.

use crate::market::OptionQuoteRow;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::io::{Read, Write};
use thiserror::Error;

pub const N_FEATURES: usize = 13;

/// Partition ratios matching the published dataset split
/// (70,322 / 9,875 / 12,649 of 92,846).
const VAL_FRACTION: f64 = 9_875.0 / 92_846.0;
const TEST_FRACTION: f64 = 12_649.0 / 92_846.0;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("missing option quotes for normalization window")]
    MissingQuotes,
    #[error("missing field {0:?}")]
    MissingField(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("io failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv failure: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad features file: {0}")]
    BadFile(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partition {
    Train,
    Validation,
    Test,
}

impl Partition {
    pub fn as_str(&self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Validation => "validation",
            Partition::Test => "test",
        }
    }
}

impl std::str::FromStr for Partition {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Partition::Train),
            "validation" => Ok(Partition::Validation),
            "test" => Ok(Partition::Test),
            other => Err(format!("unknown partition {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    Random,
    Chronological,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: [f64; N_FEATURES],
    /// Normalization mean over the six-quote window.
    pub mu: f64,
    /// Normalization scale (population standard deviation, clamped).
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub features: FeatureVector,
    /// 1 when the option mean rises the next day.
    pub label: u8,
    pub group: Partition,
    pub row_id: String,
}

/// Mean and population standard deviation of the six option quotes
/// (bid and ask at days -2, -1, 0). A degenerate spread clamps sd to 1e-9.
pub fn normalization_stats(row: &OptionQuoteRow) -> Result<(f64, f64), FeatureError> {
    let quotes = [
        row.option_ask_0,
        row.option_ask_m1,
        row.option_ask_m2,
        row.option_bid_0,
        row.option_bid_m1,
        row.option_bid_m2,
    ];
    let mut values = [0.0; 6];
    for (v, q) in values.iter_mut().zip(quotes) {
        *v = q.ok_or(FeatureError::MissingQuotes)?;
    }
    let mu = values.iter().sum::<f64>() / 6.0;
    let var = values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / 6.0;
    Ok((mu, var.sqrt().max(1e-9)))
}

pub fn normalize_option(u: f64, mu: f64, sd: f64) -> f64 {
    (u - mu) / sd
}

pub fn normalize_stock(s: f64, strike: f64, mu: f64, sd: f64) -> f64 {
    ((s - strike) - mu) / sd
}

/// The strike is carried in the option name as a `_K<value>` suffix
/// (the raw schema has no strike column).
pub fn strike_from_name(name: &str) -> Option<f64> {
    let (_, tail) = name.rsplit_once("_K")?;
    tail.parse::<f64>().ok().filter(|v| v.is_finite() && *v > 0.0)
}

/// Assembles the 13 inputs in their fixed order:
/// normalized stock ask/bid for today, normalized option ask/bid for today
/// and the past two days, raw implied volatility for the same three days,
/// and the normalized solver estimates for the next two days.
pub fn build_example(row: &OptionQuoteRow) -> Result<LabeledExample, FeatureError> {
    let field = |v: Option<f64>, name: &str| v.ok_or_else(|| FeatureError::MissingField(name.to_string()));
    let (mu, sd) = normalization_stats(row)?;
    let strike = strike_from_name(&row.option_name)
        .ok_or_else(|| FeatureError::MissingField("strike".to_string()))?;

    let stock_ask_0 = field(row.stock_ask_0, "stock_ask_0")?;
    let stock_bid_0 = field(row.stock_bid_0, "stock_bid_0")?;
    let est_p1 = field(row.est_p1, "est_p1")?;
    let est_p2 = field(row.est_p2, "est_p2")?;
    let mean_p1 = field(row.option_mean_p1, "option_mean_p1")?;
    let mean_0 = row
        .option_mean_0()
        .ok_or_else(|| FeatureError::MissingField("option quotes day 0".to_string()))?;

    let values = [
        normalize_stock(stock_ask_0, strike, mu, sd),
        normalize_stock(stock_bid_0, strike, mu, sd),
        normalize_option(field(row.option_ask_0, "option_ask_0")?, mu, sd),
        normalize_option(field(row.option_ask_m1, "option_ask_m1")?, mu, sd),
        normalize_option(field(row.option_ask_m2, "option_ask_m2")?, mu, sd),
        normalize_option(field(row.option_bid_0, "option_bid_0")?, mu, sd),
        normalize_option(field(row.option_bid_m1, "option_bid_m1")?, mu, sd),
        normalize_option(field(row.option_bid_m2, "option_bid_m2")?, mu, sd),
        field(row.ivol_0, "ivol_0")?,
        field(row.ivol_m1, "ivol_m1")?,
        field(row.ivol_m2, "ivol_m2")?,
        normalize_option(est_p1, mu, sd),
        normalize_option(est_p2, mu, sd),
    ];
    if values.iter().any(|v| !v.is_finite()) {
        return Err(FeatureError::BadFile(format!(
            "non-finite feature for row {}",
            row.option_name
        )));
    }
    Ok(LabeledExample {
        features: FeatureVector { values, mu, sd },
        label: u8::from(mean_p1 > mean_0),
        group: Partition::Train,
        row_id: row.option_name.clone(),
    })
}

/// Partition sizes for n examples: validation and test round the published
/// ratios, training takes the remainder.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let n_val = (n as f64 * VAL_FRACTION).round() as usize;
    let n_test = (n as f64 * TEST_FRACTION).round() as usize;
    let n_train = n - n_val - n_test;
    (n_train, n_val, n_test)
}

/// Assigns partitions after a seeded shuffle (or in input order for the
/// chronological mode). Deterministic given (seed, mode, input order).
pub fn split(
    mut examples: Vec<LabeledExample>,
    seed: u64,
    mode: SplitMode,
) -> Result<Vec<LabeledExample>, FeatureError> {
    if examples.is_empty() {
        return Err(FeatureError::EmptyDataset);
    }
    if mode == SplitMode::Random {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        examples.shuffle(&mut rng);
    }
    let (n_train, n_val, _) = split_sizes(examples.len());
    for (i, ex) in examples.iter_mut().enumerate() {
        ex.group = if i < n_train {
            Partition::Train
        } else if i < n_train + n_val {
            Partition::Validation
        } else {
            Partition::Test
        };
    }
    Ok(examples)
}

/// Features CSV: row_id, f01..f13, label, group.
pub fn write_features<W: Write>(examples: &[LabeledExample], writer: W) -> Result<(), FeatureError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["row_id".to_string()];
    header.extend((1..=N_FEATURES).map(|i| format!("f{i:02}")));
    header.push("label".to_string());
    header.push("group".to_string());
    w.write_record(&header)?;
    for ex in examples {
        let mut rec = vec![ex.row_id.clone()];
        rec.extend(ex.features.values.iter().map(|v| format!("{v}")));
        rec.push(format!("{}", ex.label));
        rec.push(ex.group.as_str().to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_features<R: Read>(reader: R) -> Result<Vec<LabeledExample>, FeatureError> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for record in r.records() {
        let record = record?;
        if record.len() != N_FEATURES + 3 {
            return Err(FeatureError::BadFile(format!(
                "expected {} columns, got {}",
                N_FEATURES + 3,
                record.len()
            )));
        }
        let mut values = [0.0; N_FEATURES];
        for (k, v) in values.iter_mut().enumerate() {
            *v = record[k + 1]
                .parse::<f64>()
                .map_err(|e| FeatureError::BadFile(format!("feature parse: {e}")))?;
        }
        let label: u8 = record[N_FEATURES + 1]
            .parse()
            .map_err(|e| FeatureError::BadFile(format!("label parse: {e}")))?;
        if label > 1 {
            return Err(FeatureError::BadFile(format!("label {label} not binary")));
        }
        let group: Partition =
            record[N_FEATURES + 2].parse().map_err(FeatureError::BadFile)?;
        out.push(LabeledExample {
            // mu/sd are not persisted; downstream consumers only need values
            features: FeatureVector { values, mu: 0.0, sd: 1.0 },
            label,
            group,
            row_id: record[0].to_string(),
        });
    }
    Ok(out)
}
