//! Build small two- and three-qubit datasets and write them as CSV.
//!
//! `cargo run --release --example generate_dataset -- [out_dir]`

use std::path::PathBuf;

use entq::dataset::{build_dataset, read_csv, write_csv, DatasetSpec};

fn main() -> entq::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    for qubits in [2, 3] {
        let spec = DatasetSpec::new(qubits, 100, 90, 42);
        let ds = build_dataset(&spec, 0)?;
        let path = dir.join(format!("demo_{qubits}q.csv"));
        write_csv(&ds, &path)?;
        assert_eq!(read_csv(&path)?, ds);
        println!("{} rows -> {}", ds.len(), path.display());
        println!("{}", ds.composition_summary());
    }
    Ok(())
}
