//! Fit each model kind on a two-qubit dataset and compare training fit.

use std::time::Instant;

use entq::dataset::{build_dataset, DatasetSpec};
use entq::eval::{clamp_unit, Metrics};
use entq::models::{fit, ModelKind, ModelParams};

fn main() -> entq::Result<()> {
    let ds = build_dataset(&DatasetSpec::new(2, 300, 270, 1), 0)?;
    let (x, y) = (ds.features(), ds.labels());
    for kind in ModelKind::ALL {
        let mut params = kind.default_params();
        if let ModelParams::Mlp(m) = &mut params {
            m.epochs = 50;
        }
        let t = Instant::now();
        let model = fit(&params, &x, &y)?;
        let pred: Vec<f64> = model.predict_batch(&x)?.into_iter().map(clamp_unit).collect();
        let m = Metrics::compute(&y, &pred)?;
        println!(
            "{:<7} train RMSE {:.4}  R {:.4}  ({:.2}s)  {}",
            kind.label(),
            m.rmse,
            m.r.unwrap_or(f64::NAN),
            t.elapsed().as_secs_f64(),
            params.describe()
        );
    }
    Ok(())
}
