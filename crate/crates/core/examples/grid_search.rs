//! Tune the tree depth with the default grid and print the lattice table.

use entq::dataset::{build_dataset, DatasetSpec};
use entq::eval::Report;
use entq::models::{grid_search, GridSearchResult, ModelKind, ParamGrid};

fn main() -> entq::Result<()> {
    let ds = build_dataset(&DatasetSpec::new(2, 500, 450, 11), 0)?;
    let grid = ParamGrid::default_for(ModelKind::Tree, 0);
    let result = grid_search(&grid, &ds, 5, 7, 0)?;
    let mut report = Report::new("tree depth search");
    report.table("grid", &GridSearchResult::TABLE_HEADER, &result.table_rows());
    print!("{}", report.as_str());
    println!("\nselected: {}", result.best_params());
    Ok(())
}
