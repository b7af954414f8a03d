//! Write true-vs-predicted pairs with the fitted line, ready for plotting.

use entq::dataset::{build_dataset, DatasetSpec};
use entq::eval::{cross_validate, scatter_report};
use entq::models::ModelKind;

fn main() -> entq::Result<()> {
    let ds = build_dataset(&DatasetSpec::new(2, 300, 270, 5), 0)?;
    let cv = cross_validate(&ModelKind::Tree.default_params(), &ds, 5, 7, 0)?;
    let path = std::env::temp_dir().join("entq_scatter.csv");
    let s = scatter_report(&cv.labels, &cv.predictions, &path)?;
    println!(
        "{}: {} points, predicted = {:.4} * true + {:.4}, R = {:.4}",
        path.display(),
        s.n,
        s.slope,
        s.intercept,
        s.r.unwrap_or(f64::NAN)
    );
    Ok(())
}
