//! Stage plumbing shared by the CLI: fans per-option solves across a worker
//! pool while keeping output order equal to input order.

use crate::market::{OptionQuoteRow, OptionType};
use crate::qrm::{self, QrmConfig};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Why a row was left without estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedRow {
    pub option_name: String,
    pub reason: String,
}

/// Runs the regularized solve for every call row, filling est_p1 / est_p2,
/// the minimizer errors (when ground truth is present), and the residual
/// norm. Puts and rows without usable history are skipped with a reason.
/// Output order equals input order for any worker count.
pub fn fill_estimates(
    rows: Vec<OptionQuoteRow>,
    config: &QrmConfig,
    workers: usize,
) -> Result<(Vec<OptionQuoteRow>, Vec<SkippedRow>), PipelineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))?;

    let results: Vec<(OptionQuoteRow, Option<SkippedRow>)> = pool.install(|| {
        rows.into_par_iter()
            .map(|mut row| {
                if row.option_type == OptionType::Put {
                    let skip = SkippedRow {
                        option_name: row.option_name.clone(),
                        reason: "put option: forward solve supports calls only".to_string(),
                    };
                    return (row, Some(skip));
                }
                let solved = qrm::build_problem(&row, config)
                    .and_then(|problem| qrm::solve(&problem, config));
                match solved {
                    Ok(sol) => {
                        row.est_p1 = Some(sol.est_1);
                        row.est_p2 = Some(sol.est_2);
                        row.residual_norm = Some(sol.residual_norm);
                        if let Ok((e1, e2)) = qrm::minimizer_error(&sol, &row) {
                            row.minimizer_error_p1 = Some(e1);
                            row.minimizer_error_p2 = Some(e2);
                        }
                        (row, None)
                    }
                    Err(e) => {
                        let skip = SkippedRow {
                            option_name: row.option_name.clone(),
                            reason: e.to_string(),
                        };
                        (row, Some(skip))
                    }
                }
            })
            .collect()
    });

    let mut rows = Vec::with_capacity(results.len());
    let mut skipped = Vec::new();
    for (row, skip) in results {
        if let Some(s) = skip {
            skipped.push(s);
        }
        rows.push(row);
    }
    Ok((rows, skipped))
}
