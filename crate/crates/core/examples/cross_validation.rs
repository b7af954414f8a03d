//! Five-fold cross-validation of LS-Boost with the per-fold breakdown.

use entq::dataset::{build_dataset, DatasetSpec};
use entq::eval::{comparison_rows, cross_validate, fold_rows, Report, METRIC_COLUMNS};
use entq::models::{BoostParams, ModelParams};

fn main() -> entq::Result<()> {
    let ds = build_dataset(&DatasetSpec::new(2, 500, 450, 3), 0)?;
    let params = ModelParams::LsBoost(BoostParams { n_estimators: 200, ..Default::default() });
    let cv = cross_validate(&params, &ds, 5, 7, 0)?;

    let mut report = Report::new("cross-validation");
    let mut header = vec!["fold", "n"];
    header.extend(METRIC_COLUMNS);
    report.table("folds", &header, &fold_rows(&cv));
    let mut header = vec!["Model"];
    header.extend(METRIC_COLUMNS);
    report.table("pooled", &header, &comparison_rows(&[("LS-ENS", &cv.pooled)]));
    print!("{}", report.as_str());
    Ok(())
}
