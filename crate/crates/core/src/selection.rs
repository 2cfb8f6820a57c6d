//! Greedy forward selection of predictors by the estimated T.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{r2_n, t_n};
use crate::model::{Dataset, SeedSpec};
use crate::nn::nn_index;
use crate::ranks::rank_profile;

pub const DEFAULT_IMPROVEMENT_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    /// Zero-based predictor column.
    pub column: usize,
    pub name: Option<String>,
    /// T_n of Y on all columns selected so far, this one included.
    pub t: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StopReason {
    /// Every column was selected or `max_steps` was reached.
    Exhausted,
    /// The best remaining candidate raised T by less than `threshold`.
    NoImprovement {
        threshold: f64,
        best_column: usize,
        best_t: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub steps: Vec<SelectionStep>,
    pub stop_reason: StopReason,
}

impl SelectionTrace {
    pub fn columns(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.column).collect()
    }
}

/// Plain-text table with one line per selected variable.
impl fmt::Display for SelectionTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>8}  {:<20}  {:>10}  {:>10}",
            "position", "variable", "T", "R2"
        )?;
        for (k, step) in self.steps.iter().enumerate() {
            let label = step
                .name
                .clone()
                .unwrap_or_else(|| format!("x{}", step.column + 1));
            writeln!(
                f,
                "{:>8}  {:<20}  {:>10.4}  {:>10.4}",
                k + 1,
                label,
                step.t,
                step.r2
            )?;
        }
        Ok(())
    }
}

/// Forward selection. The first step is always taken; afterwards a step is
/// taken only if it raises T_n by at least `improvement_threshold`. Among
/// candidates with equal T_n the lowest column index wins.
pub fn select_features(
    ds: &Dataset,
    seed: SeedSpec,
    improvement_threshold: f64,
    max_steps: usize,
) -> Result<SelectionTrace> {
    if improvement_threshold.is_nan() || improvement_threshold < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "improvement threshold {improvement_threshold} must be nonnegative"
        )));
    }
    let rp = rank_profile(ds.y(), seed)?;
    let names = ds.column_names();
    let mut selected: Vec<usize> = Vec::new();
    let mut steps: Vec<SelectionStep> = Vec::new();
    let limit = max_steps.min(ds.d());

    while selected.len() < limit {
        let candidates: Vec<usize> = (0..ds.d()).filter(|c| !selected.contains(c)).collect();
        let scores: Vec<(usize, f64, f64)> = candidates
            .par_iter()
            .map(|&c| {
                let mut columns = selected.clone();
                columns.push(c);
                let nn = nn_index(&ds.select_columns(&columns)?, seed)?;
                Ok((c, t_n(&rp, &nn)?, r2_n(&rp, &nn)?))
            })
            .collect::<Result<_>>()?;
        let (column, t, r2) = scores
            .into_iter()
            .fold(None, |best: Option<(usize, f64, f64)>, cur| match best {
                Some(b) if b.1 >= cur.1 => Some(b),
                _ => Some(cur),
            })
            .expect("at least one candidate");
        if let Some(last) = steps.last() {
            if t - last.t < improvement_threshold {
                return Ok(SelectionTrace {
                    steps,
                    stop_reason: StopReason::NoImprovement {
                        threshold: improvement_threshold,
                        best_column: column,
                        best_t: t,
                    },
                });
            }
        }
        selected.push(column);
        steps.push(SelectionStep {
            column,
            name: names.map(|n| n[column].clone()),
            t,
            r2,
        });
    }
    Ok(SelectionTrace {
        steps,
        stop_reason: StopReason::Exhausted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::measure_report;

    fn dataset(n: usize) -> Dataset {
        // y depends on column 1 only; column 0 is a shuffled copy of the index
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![((i * 7919) % n) as f64, i as f64])
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|i| (i as f64 * 0.37).sin() + i as f64 * 0.01)
            .collect();
        Dataset::new(rows, y).unwrap()
    }

    #[test]
    fn picks_the_argmax_and_records_the_same_estimates() {
        let ds = dataset(200);
        let seed = SeedSpec::new(3);
        let trace = select_features(&ds, seed, 0.0, 1).unwrap();
        assert_eq!(trace.columns(), vec![1]);
        assert_eq!(trace.stop_reason, StopReason::Exhausted);
        let direct = measure_report(&ds.select_columns(&[1]).unwrap(), seed).unwrap();
        assert_eq!(trace.steps[0].t, direct.t);
        assert_eq!(trace.steps[0].r2, direct.r2);
        let other = measure_report(&ds.select_columns(&[0]).unwrap(), seed).unwrap();
        assert!(trace.steps[0].t >= other.t);
    }

    #[test]
    fn rejects_negative_threshold() {
        assert!(select_features(&dataset(20), SeedSpec::new(0), -0.1, 3).is_err());
    }

    #[test]
    fn table_layout() {
        let trace = SelectionTrace {
            steps: vec![SelectionStep {
                column: 0,
                name: Some("tmax".into()),
                t: 0.5,
                r2: 0.25,
            }],
            stop_reason: StopReason::Exhausted,
        };
        let text = trace.to_string();
        assert!(text.lines().nth(1).unwrap().contains("tmax"));
        assert!(text.contains("0.5000"));
    }
}
