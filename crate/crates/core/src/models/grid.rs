//! Exhaustive hyperparameter search scored by k-fold cross-validation.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::{Activation, BoostParams, MlpParams, ModelKind, ModelParams, TreeParams};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::eval::{self, MetricsReport};

#[derive(Clone, Debug, PartialEq)]
pub struct ParamGrid {
    pub points: Vec<ModelParams>,
}

impl ParamGrid {
    pub fn single(p: ModelParams) -> Self {
        Self { points: vec![p] }
    }

    /// The default lattice for `kind`. MLP points share `seed`.
    pub fn default_for(kind: ModelKind, seed: u64) -> Self {
        let points = match kind {
            ModelKind::Tree => [6, 9, 12, 15]
                .into_iter()
                .map(|d| ModelParams::Tree(TreeParams { max_depth: d, ..Default::default() }))
                .collect(),
            ModelKind::LsBoost => {
                let mut v = Vec::new();
                for n in [100, 300, 500] {
                    for lr in [0.05, 0.1, 0.2] {
                        for d in [3, 4, 6] {
                            let mut p = BoostParams { n_estimators: n, learning_rate: lr, ..Default::default() };
                            p.base.max_depth = d;
                            v.push(ModelParams::LsBoost(p));
                        }
                    }
                }
                v
            }
            ModelKind::Mlp => {
                let mut v = Vec::new();
                for widths in [vec![32, 32], vec![64, 64]] {
                    for step in [1e-3, 3e-4] {
                        v.push(ModelParams::Mlp(MlpParams {
                            hidden_layers: widths.clone(),
                            activation: Activation::Relu,
                            step_size: step,
                            seed,
                            ..Default::default()
                        }));
                    }
                }
                v
            }
        };
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// One evaluated lattice point; `outcome` holds the error text for failed points.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub params: ModelParams,
    pub outcome: std::result::Result<MetricsReport, String>,
}

impl GridPoint {
    pub fn mean_rmse(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(MetricsReport::mean_fold_rmse)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSearchResult {
    pub best: usize,
    pub points: Vec<GridPoint>,
}

impl GridSearchResult {
    pub fn best_params(&self) -> &ModelParams {
        &self.points[self.best].params
    }

    pub fn best_report(&self) -> &MetricsReport {
        self.points[self.best].outcome.as_ref().expect("best point succeeded")
    }

    /// Table rows: params, mean fold RMSE, pooled metrics or the failure, and a
    /// marker on the selected point.
    pub fn table_rows(&self) -> Vec<Vec<String>> {
        self.points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut row = vec![if i == self.best { "*".into() } else { String::new() }, p.params.describe()];
                match &p.outcome {
                    Ok(r) => {
                        row.push(format!("{:.4}", r.mean_fold_rmse()));
                        row.extend(r.pooled.row());
                        row.push("ok".into());
                    }
                    Err(e) => {
                        row.extend(std::iter::repeat_n("-".to_string(), 5));
                        row.push(format!("failed: {e}"));
                    }
                }
                row
            })
            .collect()
    }

    pub const TABLE_HEADER: [&'static str; 8] = ["best", "params", "mean_fold_RMSE", "RMSE", "MAE", "R", "R2", "status"];
}

/// Lower mean fold RMSE wins; ties go to the lower complexity, then to the
/// lexicographically smaller parameter string.
fn better(a: &GridPoint, b: &GridPoint) -> bool {
    let (ra, rb) = (a.mean_rmse().unwrap(), b.mean_rmse().unwrap());
    match ra.total_cmp(&rb) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => match a.params.complexity().total_cmp(&b.params.complexity()) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => a.params.describe() < b.params.describe(),
        },
    }
}

/// Cross-validate every grid point. Failed points are recorded and skipped.
///
/// LS-Boost points differing only in ensemble size are evaluated from a single
/// fit per fold; the reports are identical to separate runs.
pub fn grid_search(grid: &ParamGrid, ds: &LabeledDataset, k: usize, seed: u64, workers: usize) -> Result<GridSearchResult> {
    if grid.is_empty() {
        return Err(Error::Domain("empty parameter grid".into()));
    }
    let mut outcomes: Vec<Option<std::result::Result<MetricsReport, String>>> = vec![None; grid.len()];

    // Group boosting points by everything except n_estimators.
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, p) in grid.points.iter().enumerate() {
        if let ModelParams::LsBoost(b) = p {
            if b.validate().is_ok() {
                let mut key = b.clone();
                key.n_estimators = 1;
                groups.entry(ModelParams::LsBoost(key).describe()).or_default().push(i);
            }
        }
    }
    for idx in groups.values() {
        let mut stages: Vec<usize> = idx
            .iter()
            .map(|&i| match &grid.points[i] {
                ModelParams::LsBoost(b) => b.n_estimators,
                _ => unreachable!(),
            })
            .collect();
        stages.sort_unstable();
        stages.dedup();
        let ModelParams::LsBoost(base) = &grid.points[idx[0]] else { unreachable!() };
        match eval::cross_validate_boost_stages(base, &stages, ds, k, seed, workers) {
            Ok(reports) => {
                for &i in idx {
                    let ModelParams::LsBoost(b) = &grid.points[i] else { unreachable!() };
                    let j = stages.binary_search(&b.n_estimators).unwrap();
                    outcomes[i] = Some(Ok(reports[j].clone()));
                }
            }
            Err(e) => {
                for &i in idx {
                    outcomes[i] = Some(Err(e.to_string()));
                }
            }
        }
    }

    let points: Vec<GridPoint> = grid
        .points
        .iter()
        .zip(outcomes)
        .map(|(p, o)| GridPoint {
            params: p.clone(),
            outcome: o.unwrap_or_else(|| eval::cross_validate(p, ds, k, seed, workers).map_err(|e| e.to_string())),
        })
        .collect();

    let mut best: Option<usize> = None;
    for (i, p) in points.iter().enumerate() {
        if p.outcome.is_ok() && best.is_none_or(|b| better(p, &points[b])) {
            best = Some(i);
        }
    }
    let best = best.ok_or_else(|| {
        let reasons: Vec<String> = points.iter().filter_map(|p| p.outcome.as_ref().err().cloned()).collect();
        Error::Training(format!("every grid point failed: {}", reasons.join("; ")))
    })?;
    Ok(GridSearchResult { best, points })
}
