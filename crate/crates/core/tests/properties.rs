//! Randomized round-trip and invariant properties.

use optcast_core::features::{build_example, split, split_sizes, strike_from_name, SplitMode};
use optcast_core::market::{parse_quotes, write_quotes_extended, OptionQuoteRow};
use proptest::prelude::*;

/// A bid/ask pair that honors bid <= ask, with each side independently
/// possibly absent.
fn quote_pair() -> impl Strategy<Value = (Option<f64>, Option<f64>)> {
    (0.01f64..500.0, 0.0f64..0.2, any::<bool>(), any::<bool>()).prop_map(
        |(mid, spread, has_bid, has_ask)| {
            (
                has_bid.then_some(mid * (1.0 - spread)),
                has_ask.then_some(mid * (1.0 + spread)),
            )
        },
    )
}

fn ivol() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![
        3 => (0.01f64..3.0).prop_map(Some),
        1 => Just(None),
    ]
}

fn free() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![
        3 => (0.0f64..500.0).prop_map(Some),
        1 => Just(None),
    ]
}

fn row_strategy() -> impl Strategy<Value = OptionQuoteRow> {
    (
        (1u32..=9999, 1u32..=500, 4u32..60, 0.0f64..1.0),
        proptest::collection::vec(quote_pair(), 9),
        proptest::collection::vec(ivol(), 5),
        (free(), free(), free()),
    )
        .prop_map(|((strike, id, grid_count, beta), pairs, ivols, extra)| {
            let mut row =
                OptionQuoteRow::empty(&format!("PROP{id}_K{strike}"), "2021-03-05");
            row.grid_count = grid_count;
            row.beta = beta;
            // 5 option days, then 4 stock days
            let bid_ask: [(&mut Option<f64>, &mut Option<f64>); 9] = [
                (&mut row.option_bid_m2, &mut row.option_ask_m2),
                (&mut row.option_bid_m1, &mut row.option_ask_m1),
                (&mut row.option_bid_0, &mut row.option_ask_0),
                (&mut row.option_bid_p1, &mut row.option_ask_p1),
                (&mut row.option_bid_p2, &mut row.option_ask_p2),
                (&mut row.stock_bid_m2, &mut row.stock_ask_m2),
                (&mut row.stock_bid_m1, &mut row.stock_ask_m1),
                (&mut row.stock_bid_0, &mut row.stock_ask_0),
                (&mut row.stock_bid_p1, &mut row.stock_ask_p1),
            ];
            for ((bid, ask), (b, a)) in bid_ask.into_iter().zip(pairs) {
                *bid = b;
                *ask = a;
            }
            let vols: [&mut Option<f64>; 5] =
                [&mut row.ivol_m2, &mut row.ivol_m1, &mut row.ivol_0, &mut row.ivol_p1, &mut row.ivol_p2];
            for (field, v) in vols.into_iter().zip(ivols) {
                *field = v;
            }
            // future means must equal the quoted mid when both sides exist
            row.option_mean_p1 = match (row.option_bid_p1, row.option_ask_p1) {
                (Some(b), Some(a)) => Some((b + a) / 2.0),
                _ => None,
            };
            row.option_mean_p2 = match (row.option_bid_p2, row.option_ask_p2) {
                (Some(b), Some(a)) => Some((b + a) / 2.0),
                _ => None,
            };
            (row.est_p1, row.est_p2, row.residual_norm) = extra;
            row
        })
}

proptest! {
    /// Writing then parsing a quotes file reproduces every row bit for bit;
    /// the shortest-round-trip float formatting carries no loss.
    #[test]
    fn quotes_roundtrip_identity(rows in proptest::collection::vec(row_strategy(), 1..12)) {
        let mut buf = Vec::new();
        write_quotes_extended(&rows, &mut buf).unwrap();
        let outcome = parse_quotes(buf.as_slice()).unwrap();
        prop_assert!(outcome.rejected.is_empty());
        prop_assert_eq!(outcome.accepted, rows);
    }

    /// The strike encoded in the option name always parses back.
    #[test]
    fn strike_suffix_parses(prefix in "[A-Z]{1,6}", strike in 0.5f64..5000.0) {
        let name = format!("{prefix}_K{strike}");
        prop_assert_eq!(strike_from_name(&name), Some(strike));
    }

    /// Features are finite and the label matches the strict-increase rule
    /// whenever a full row builds at all.
    #[test]
    fn built_features_are_finite(
        quotes in proptest::collection::vec(0.5f64..50.0, 6),
        ests in proptest::collection::vec(0.5f64..50.0, 2),
        mean_p1 in 0.5f64..50.0,
    ) {
        let mut row = OptionQuoteRow::empty("P_K30", "2021-03-05");
        row.option_ask_0 = Some(quotes[0]);
        row.option_ask_m1 = Some(quotes[1]);
        row.option_ask_m2 = Some(quotes[2]);
        row.option_bid_0 = Some(quotes[3]);
        row.option_bid_m1 = Some(quotes[4]);
        row.option_bid_m2 = Some(quotes[5]);
        row.stock_ask_0 = Some(31.0);
        row.stock_bid_0 = Some(29.0);
        row.ivol_0 = Some(0.2);
        row.ivol_m1 = Some(0.2);
        row.ivol_m2 = Some(0.2);
        row.est_p1 = Some(ests[0]);
        row.est_p2 = Some(ests[1]);
        row.option_mean_p1 = Some(mean_p1);
        let ex = build_example(&row).unwrap();
        prop_assert!(ex.features.values.iter().all(|v| v.is_finite()));
        let mean_0 = (quotes[0] + quotes[3]) / 2.0;
        prop_assert_eq!(ex.label, u8::from(mean_p1 > mean_0));
    }

    /// Partition sizes always sum to the input size and respect the
    /// published proportions.
    #[test]
    fn split_sizes_sum_and_order(n in 1usize..200_000) {
        let (tr, va, te) = split_sizes(n);
        prop_assert_eq!(tr + va + te, n);
        if n > 100 {
            prop_assert!(tr > va + te);
            prop_assert!(te > va);
        }
    }

    /// A split never loses or duplicates a row, for any seed and mode.
    #[test]
    fn split_preserves_rows(n in 1usize..400, seed in any::<u64>(), random in any::<bool>()) {
        let examples: Vec<_> = (0..n)
            .map(|i| {
                let mut row = OptionQuoteRow::empty(&format!("S{i}_K5"), "2021-03-05");
                row.option_ask_0 = Some(5.0 + i as f64);
                row.option_ask_m1 = Some(5.0);
                row.option_ask_m2 = Some(5.0);
                row.option_bid_0 = Some(4.0);
                row.option_bid_m1 = Some(4.0);
                row.option_bid_m2 = Some(4.0);
                row.stock_ask_0 = Some(51.0);
                row.stock_bid_0 = Some(49.0);
                row.ivol_0 = Some(0.2);
                row.ivol_m1 = Some(0.2);
                row.ivol_m2 = Some(0.2);
                row.est_p1 = Some(4.5);
                row.est_p2 = Some(4.5);
                row.option_mean_p1 = Some(4.6);
                build_example(&row).unwrap()
            })
            .collect();
        let mode = if random { SplitMode::Random } else { SplitMode::Chronological };
        let out = split(examples, seed, mode).unwrap();
        prop_assert_eq!(out.len(), n);
        let mut ids: Vec<&str> = out.iter().map(|e| e.row_id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        prop_assert_eq!(ids.len(), n);
    }
}
