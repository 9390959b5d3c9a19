//! CSV reading and writing for the quote schema. Columns are matched by
//! header name, so files with extra columns (the solver stage appends three)
//! parse with the same code path.

use super::{MarketError, OptionQuoteRow, OptionType};
use std::collections::HashMap;
use std::io::{Read, Write};

/// Base schema column order, as written by `write_quotes`.
pub const BASE_COLUMNS: [&str; 32] = [
    "option_name",
    "grid_count",
    "beta",
    "date",
    "option_ask_m2",
    "option_ask_m1",
    "option_ask_0",
    "option_bid_m2",
    "option_bid_m1",
    "option_bid_0",
    "stock_ask_0",
    "stock_bid_0",
    "stock_ask_m1",
    "stock_bid_m1",
    "stock_ask_m2",
    "stock_bid_m2",
    "stock_ask_p1",
    "stock_bid_p1",
    "ivol_m2",
    "ivol_m1",
    "ivol_0",
    "ivol_p1",
    "ivol_p2",
    "est_p1",
    "est_p2",
    "option_mean_p1",
    "option_mean_p2",
    "option_ask_p1",
    "option_ask_p2",
    "option_bid_p1",
    "option_bid_p2",
    "option_type",
];

/// Columns appended by the solver stage.
pub const QRM_COLUMNS: [&str; 3] = ["minimizer_error_p1", "minimizer_error_p2", "residual_norm"];

#[derive(Debug, Clone, PartialEq)]
pub struct RejectedRow {
    /// 1-based data-row index (header not counted).
    pub row: usize,
    pub option_name: String,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct ParseOutcome {
    pub accepted: Vec<OptionQuoteRow>,
    pub rejected: Vec<RejectedRow>,
}

struct FieldReader<'a> {
    index: HashMap<String, usize>,
    record: &'a csv::StringRecord,
    row: usize,
}

impl<'a> FieldReader<'a> {
    fn raw(&self, column: &str) -> &str {
        match self.index.get(column) {
            Some(&i) => self.record.get(i).unwrap_or("").trim(),
            None => "",
        }
    }

    fn opt_f64(&self, column: &str) -> Result<Option<f64>, MarketError> {
        let raw = self.raw(column);
        if raw.is_empty() {
            return Ok(None);
        }
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            _ => Err(MarketError::NonNumericField {
                row: self.row,
                column: column.to_string(),
                value: raw.to_string(),
            }),
        }
    }
}

/// Parses a quote CSV. Structurally bad fields are hard errors; rows that
/// parse but violate a schema invariant go to the rejected list with the
/// reason, never silently dropped.
pub fn parse_quotes<R: Read>(reader: R) -> Result<ParseOutcome, MarketError> {
    let mut buf = String::new();
    let mut reader = reader;
    reader.read_to_string(&mut buf)?;
    if buf.trim().is_empty() {
        return Err(MarketError::EmptyInput);
    }

    let mut csv_reader = csv::ReaderBuilder::new().flexible(true).from_reader(buf.as_bytes());
    let headers = csv_reader.headers()?.clone();
    let mut index = HashMap::new();
    for (i, name) in headers.iter().enumerate() {
        index.insert(name.trim().to_string(), i);
    }
    for name in BASE_COLUMNS {
        if !index.contains_key(name) {
            return Err(MarketError::MissingColumn(name.to_string()));
        }
    }

    let mut outcome = ParseOutcome::default();
    for (i, record) in csv_reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let fields = FieldReader { index: index.clone(), record: &record, row };

        let option_name = fields.raw("option_name").to_string();
        let option_type = match fields.raw("option_type").parse::<OptionType>() {
            Ok(t) => t,
            Err(reason) => {
                outcome.rejected.push(RejectedRow { row, option_name, reason });
                continue;
            }
        };
        // Solver hints default when unpopulated.
        let grid_count = match fields.raw("grid_count") {
            "" => 20,
            raw => raw.parse::<u32>().map_err(|_| MarketError::NonNumericField {
                row,
                column: "grid_count".to_string(),
                value: raw.to_string(),
            })?,
        };
        let beta = fields.opt_f64("beta")?.unwrap_or(0.01);

        let parsed = OptionQuoteRow {
            option_name,
            grid_count,
            beta,
            date: fields.raw("date").to_string(),
            option_ask_m2: fields.opt_f64("option_ask_m2")?,
            option_ask_m1: fields.opt_f64("option_ask_m1")?,
            option_ask_0: fields.opt_f64("option_ask_0")?,
            option_ask_p1: fields.opt_f64("option_ask_p1")?,
            option_ask_p2: fields.opt_f64("option_ask_p2")?,
            option_bid_m2: fields.opt_f64("option_bid_m2")?,
            option_bid_m1: fields.opt_f64("option_bid_m1")?,
            option_bid_0: fields.opt_f64("option_bid_0")?,
            option_bid_p1: fields.opt_f64("option_bid_p1")?,
            option_bid_p2: fields.opt_f64("option_bid_p2")?,
            stock_ask_m2: fields.opt_f64("stock_ask_m2")?,
            stock_ask_m1: fields.opt_f64("stock_ask_m1")?,
            stock_ask_0: fields.opt_f64("stock_ask_0")?,
            stock_ask_p1: fields.opt_f64("stock_ask_p1")?,
            stock_bid_m2: fields.opt_f64("stock_bid_m2")?,
            stock_bid_m1: fields.opt_f64("stock_bid_m1")?,
            stock_bid_0: fields.opt_f64("stock_bid_0")?,
            stock_bid_p1: fields.opt_f64("stock_bid_p1")?,
            ivol_m2: fields.opt_f64("ivol_m2")?,
            ivol_m1: fields.opt_f64("ivol_m1")?,
            ivol_0: fields.opt_f64("ivol_0")?,
            ivol_p1: fields.opt_f64("ivol_p1")?,
            ivol_p2: fields.opt_f64("ivol_p2")?,
            est_p1: fields.opt_f64("est_p1")?,
            est_p2: fields.opt_f64("est_p2")?,
            option_mean_p1: fields.opt_f64("option_mean_p1")?,
            option_mean_p2: fields.opt_f64("option_mean_p2")?,
            option_type,
            minimizer_error_p1: if index.contains_key("minimizer_error_p1") {
                fields.opt_f64("minimizer_error_p1")?
            } else {
                None
            },
            minimizer_error_p2: if index.contains_key("minimizer_error_p2") {
                fields.opt_f64("minimizer_error_p2")?
            } else {
                None
            },
            residual_norm: if index.contains_key("residual_norm") {
                fields.opt_f64("residual_norm")?
            } else {
                None
            },
        };

        match parsed.validate() {
            Ok(()) => outcome.accepted.push(parsed),
            Err(reason) => outcome.rejected.push(RejectedRow {
                row,
                option_name: parsed.option_name,
                reason,
            }),
        }
    }
    Ok(outcome)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn base_fields(row: &OptionQuoteRow) -> Vec<String> {
    vec![
        row.option_name.clone(),
        format!("{}", row.grid_count),
        format!("{}", row.beta),
        row.date.clone(),
        fmt_opt(row.option_ask_m2),
        fmt_opt(row.option_ask_m1),
        fmt_opt(row.option_ask_0),
        fmt_opt(row.option_bid_m2),
        fmt_opt(row.option_bid_m1),
        fmt_opt(row.option_bid_0),
        fmt_opt(row.stock_ask_0),
        fmt_opt(row.stock_bid_0),
        fmt_opt(row.stock_ask_m1),
        fmt_opt(row.stock_bid_m1),
        fmt_opt(row.stock_ask_m2),
        fmt_opt(row.stock_bid_m2),
        fmt_opt(row.stock_ask_p1),
        fmt_opt(row.stock_bid_p1),
        fmt_opt(row.ivol_m2),
        fmt_opt(row.ivol_m1),
        fmt_opt(row.ivol_0),
        fmt_opt(row.ivol_p1),
        fmt_opt(row.ivol_p2),
        fmt_opt(row.est_p1),
        fmt_opt(row.est_p2),
        fmt_opt(row.option_mean_p1),
        fmt_opt(row.option_mean_p2),
        fmt_opt(row.option_ask_p1),
        fmt_opt(row.option_ask_p2),
        fmt_opt(row.option_bid_p1),
        fmt_opt(row.option_bid_p2),
        row.option_type.as_str().to_string(),
    ]
}

/// Writes the base 32-column schema. `parse_quotes` of the output equals
/// the input on accepted rows.
pub fn write_quotes<W: Write>(rows: &[OptionQuoteRow], writer: W) -> Result<(), MarketError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(BASE_COLUMNS)?;
    for row in rows {
        w.write_record(base_fields(row))?;
    }
    w.flush()?;
    Ok(())
}

/// Base schema plus the solver's minimizer-error and residual columns.
pub fn write_quotes_extended<W: Write>(
    rows: &[OptionQuoteRow],
    writer: W,
) -> Result<(), MarketError> {
    let mut w = csv::Writer::from_writer(writer);
    let header: Vec<&str> = BASE_COLUMNS.iter().chain(QRM_COLUMNS.iter()).copied().collect();
    w.write_record(header)?;
    for row in rows {
        let mut fields = base_fields(row);
        fields.push(fmt_opt(row.minimizer_error_p1));
        fields.push(fmt_opt(row.minimizer_error_p2));
        fields.push(fmt_opt(row.residual_norm));
        w.write_record(fields)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header_line() -> String {
        BASE_COLUMNS.join(",")
    }

    #[test]
    fn header_only_file_is_empty_outcome() {
        let outcome = parse_quotes(header_line().as_bytes()).unwrap();
        assert!(outcome.accepted.is_empty());
        assert!(outcome.rejected.is_empty());
    }

    #[test]
    fn empty_stream_errors() {
        match parse_quotes("".as_bytes()) {
            Err(MarketError::EmptyInput) => {}
            other => panic!("expected EmptyInput, got {other:?}"),
        }
    }

    #[test]
    fn missing_column_errors() {
        let input = "option_name,date\nA,2020-01-01\n";
        match parse_quotes(input.as_bytes()) {
            Err(MarketError::MissingColumn(_)) => {}
            other => panic!("expected MissingColumn, got {other:?}"),
        }
    }

    #[test]
    fn crossed_quote_rejected_with_reason() {
        let mut row = OptionQuoteRow::empty("X", "2020-01-01");
        row.option_bid_0 = Some(5.0);
        row.option_ask_0 = Some(4.0);
        let mut buf = Vec::new();
        write_quotes(std::slice::from_ref(&row), &mut buf).unwrap();
        let outcome = parse_quotes(buf.as_slice()).unwrap();
        assert!(outcome.accepted.is_empty());
        assert_eq!(outcome.rejected.len(), 1);
        assert!(outcome.rejected[0].reason.contains("bid exceeds ask"));
    }

    #[test]
    fn non_numeric_field_is_hard_error() {
        let mut line = vec!["A"; 32];
        line[1] = "20";
        line[2] = "0.01";
        line[4] = "not-a-number";
        line[31] = "call";
        let input = format!("{}\n{}\n", header_line(), line.join(","));
        match parse_quotes(input.as_bytes()) {
            Err(MarketError::NonNumericField { column, .. }) => {
                assert_eq!(column, "option_ask_m2");
            }
            other => panic!("expected NonNumericField, got {other:?}"),
        }
    }

    #[test]
    fn fixture_roundtrip_field_by_field() {
        let mut rows = Vec::new();
        for (i, base) in [(0usize, 3.0f64), (1, 5.5), (2, 12.25)] {
            let mut row = OptionQuoteRow::empty(&format!("FIX{i}_K{base}"), "2020-06-15");
            row.option_bid_m2 = Some(base - 0.10);
            row.option_ask_m2 = Some(base + 0.10);
            row.option_bid_m1 = Some(base - 0.05);
            row.option_ask_m1 = Some(base + 0.05);
            row.option_bid_0 = Some(base - 0.02);
            row.option_ask_0 = Some(base + 0.02);
            row.option_bid_p1 = Some(base);
            row.option_ask_p1 = Some(base + 0.04);
            row.option_mean_p1 = Some(base + 0.02);
            row.stock_bid_0 = Some(10.0 * base - 0.1);
            row.stock_ask_0 = Some(10.0 * base + 0.1);
            row.ivol_m2 = Some(0.21);
            row.ivol_m1 = Some(0.22);
            row.ivol_0 = Some(0.23);
            rows.push(row);
        }
        let mut buf = Vec::new();
        write_quotes(&rows, &mut buf).unwrap();
        let outcome = parse_quotes(buf.as_slice()).unwrap();
        assert!(outcome.rejected.is_empty());
        assert_eq!(outcome.accepted, rows);
    }

    #[test]
    fn extended_columns_roundtrip() {
        let mut row = OptionQuoteRow::empty("X", "2020-01-01");
        row.est_p1 = Some(3.25);
        row.est_p2 = Some(3.5);
        row.minimizer_error_p1 = Some(0.01);
        row.minimizer_error_p2 = Some(0.02);
        row.residual_norm = Some(1e-9);
        let mut buf = Vec::new();
        write_quotes_extended(std::slice::from_ref(&row), &mut buf).unwrap();
        let outcome = parse_quotes(buf.as_slice()).unwrap();
        assert_eq!(outcome.accepted, vec![row]);
    }
}
