//! Model comparison on the desk-scale datasets, in the layout of a results table.
//!
//! `cargo run --release --example desk_reproduction -- [per_bin] [mlp_epochs]`
//!
//! Defaults to 1,800 rows per bin (20,000 rows per dataset). Trees and
//! LS-Boost are tuned over their default grids; the network uses fixed
//! parameters because its grid is slow on one core.

use std::time::Instant;

use entq::dataset::{build_dataset, DatasetSpec};
use entq::eval::{comparison_rows, cross_validate, Report, METRIC_COLUMNS};
use entq::models::{grid_search, MlpParams, ModelKind, ModelParams, ParamGrid};

fn main() -> entq::Result<()> {
    let mut args = std::env::args().skip(1);
    let per_bin: usize = args.next().map_or(1800, |a| a.parse().expect("per_bin"));
    let epochs: usize = args.next().map_or(60, |a| a.parse().expect("mlp_epochs"));
    let (folds, seed) = (5, 7);

    let mut report = Report::new("desk-scale comparison");
    for qubits in [2u8, 3] {
        let t = Instant::now();
        let spec = DatasetSpec::new(qubits, per_bin * 10 / 9, per_bin, 42);
        let ds = build_dataset(&spec, 0)?;
        eprintln!("{qubits}-qubit dataset: {} rows in {:.1}s", ds.len(), t.elapsed().as_secs_f64());

        let mut rows = Vec::new();
        for kind in [ModelKind::Tree, ModelKind::LsBoost] {
            let t = Instant::now();
            let g = grid_search(&ParamGrid::default_for(kind, seed), &ds, folds, seed, 0)?;
            eprintln!("  {} tuned to {} in {:.1}s", kind.label(), g.best_params().describe(), t.elapsed().as_secs_f64());
            rows.push((kind.label(), g.best_report().pooled.clone()));
        }
        let t = Instant::now();
        let mlp = ModelParams::Mlp(MlpParams { epochs, seed, ..Default::default() });
        let cv = cross_validate(&mlp, &ds, folds, seed, 0)?;
        eprintln!("  MLP in {:.1}s", t.elapsed().as_secs_f64());
        rows.push(("MLP", cv.pooled));

        let mut header = vec!["Model"];
        header.extend(METRIC_COLUMNS);
        let entries: Vec<_> = rows.iter().map(|(l, m)| (*l, m)).collect();
        report.table(&format!("{qubits}-qubit"), &header, &comparison_rows(&entries));
    }
    print!("{}", report.as_str());
    Ok(())
}
