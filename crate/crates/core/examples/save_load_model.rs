//! Save a boosted model as text, reload it and check predictions agree bit for bit.

use entq::dataset::{build_dataset, DatasetSpec};
use entq::models::{fit, load_model_of_kind, save_model, BoostParams, ModelKind, ModelParams};

fn main() -> entq::Result<()> {
    let ds = build_dataset(&DatasetSpec::new(3, 100, 90, 8), 0)?;
    let (x, y) = (ds.features(), ds.labels());
    let model = fit(&ModelParams::LsBoost(BoostParams { n_estimators: 50, ..Default::default() }), &x, &y)?;

    let path = std::env::temp_dir().join("entq_example.model");
    save_model(&model, &path)?;
    let back = load_model_of_kind(&path, ModelKind::LsBoost)?;
    let same = x.iter().all(|r| model.predict(r).unwrap().to_bits() == back.predict(r).unwrap().to_bits());
    println!("saved {} ({} bytes), identical predictions: {same}", path.display(), std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0));

    match load_model_of_kind(&path, ModelKind::Tree) {
        Err(e) => println!("loading as a tree fails: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
