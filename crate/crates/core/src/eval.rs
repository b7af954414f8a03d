//! Regression metrics, k-fold cross-validation and report files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::dataset::{kfold, with_workers, DatasetDescriptor, FoldAssignment, LabeledDataset};
use crate::error::{Error, Result};
use crate::models::{self, BoostParams, ModelParams};

fn check_pair(y: &[f64], yhat: &[f64]) -> Result<()> {
    if y.is_empty() {
        return Err(Error::Domain("metric of an empty vector".into()));
    }
    if y.len() != yhat.len() {
        return Err(Error::Domain(format!("length mismatch: {} vs {}", y.len(), yhat.len())));
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&a| a == v[0])
}

pub fn rmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat)?;
    Ok((y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64).sqrt())
}

pub fn mae(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat)?;
    Ok(y.iter().zip(yhat).map(|(a, b)| (a - b).abs()).sum::<f64>() / y.len() as f64)
}

/// Pearson correlation. Undefined when either vector is constant.
pub fn corrcoef(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat)?;
    if is_constant(y) || is_constant(yhat) {
        return Err(Error::UndefinedMetric("correlation of a constant vector"));
    }
    let (my, mp) = (mean(y), mean(yhat));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in y.iter().zip(yhat) {
        let (da, db) = (a - my, b - mp);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Coefficient of determination `1 - SS_res / SS_tot`.
pub fn r2(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat)?;
    if is_constant(y) {
        return Err(Error::UndefinedMetric("R^2 of constant labels"));
    }
    let my = mean(y);
    let ss_tot: f64 = y.iter().map(|a| (a - my).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

fn optional(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedMetric(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// The four reported metrics. Undefined correlations are `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    pub n: usize,
    pub rmse: f64,
    pub mae: f64,
    pub r: Option<f64>,
    pub r2: Option<f64>,
}

impl Metrics {
    pub fn compute(y: &[f64], yhat: &[f64]) -> Result<Self> {
        Ok(Self {
            n: y.len(),
            rmse: rmse(y, yhat)?,
            mae: mae(y, yhat)?,
            r: optional(corrcoef(y, yhat))?,
            r2: optional(r2(y, yhat))?,
        })
    }

    /// `(name, value)` with full precision and `NA` for undefined values.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("n", self.n.to_string()),
            ("rmse", format!("{:?}", self.rmse)),
            ("mae", format!("{:?}", self.mae)),
            ("r", opt_full(self.r)),
            ("r2", opt_full(self.r2)),
        ]
    }

    /// RMSE, MAE, R, R^2 rounded to four places.
    pub fn row(&self) -> Vec<String> {
        vec![fixed(Some(self.rmse)), fixed(Some(self.mae)), fixed(self.r), fixed(self.r2)]
    }
}

fn opt_full(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |v| format!("{v:?}"))
}

fn fixed(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |v| format!("{v:.4}"))
}

pub fn clamp_unit(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Result of k-fold cross-validation for one parameter set.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub params: ModelParams,
    pub dataset: DatasetDescriptor,
    pub k: usize,
    pub seed: u64,
    /// Metrics over all held-out predictions together.
    pub pooled: Metrics,
    pub per_fold: Vec<Metrics>,
    /// Clamped held-out prediction for every row, in dataset order.
    pub predictions: Vec<f64>,
    pub labels: Vec<f64>,
}

impl MetricsReport {
    pub fn mean_fold_rmse(&self) -> f64 {
        self.per_fold.iter().map(|m| m.rmse).sum::<f64>() / self.per_fold.len() as f64
    }
}

struct Prepared {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    folds: FoldAssignment,
}

impl Prepared {
    fn new(ds: &LabeledDataset, k: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            x: ds.features(),
            y: ds.labels(),
            folds: kfold(ds, k, seed)?,
        })
    }

    fn train_set(&self, fold: usize) -> (Vec<Vec<f64>>, Vec<f64>, Vec<usize>) {
        let (train, test) = self.folds.split(fold);
        let x = train.iter().map(|&i| self.x[i].clone()).collect();
        let y = train.iter().map(|&i| self.y[i]).collect();
        (x, y, test)
    }

    /// Runs `per_fold` on every fold and returns, for each of `m` outputs, the
    /// held-out predictions scattered back to dataset order.
    fn run<F>(&self, workers: usize, m: usize, per_fold: F) -> Result<Vec<Vec<f64>>>
    where
        F: Fn(&[Vec<f64>], &[f64], &[Vec<f64>]) -> Result<Vec<Vec<f64>>> + Sync,
    {
        let k = self.folds.k;
        let results = with_workers(workers, || {
            (0..k)
                .into_par_iter()
                .map(|f| {
                    let (x, y, test) = self.train_set(f);
                    let held: Vec<Vec<f64>> = test.iter().map(|&i| self.x[i].clone()).collect();
                    per_fold(&x, &y, &held)
                        .map(|p| (test, p))
                        .map_err(|e| Error::Training(format!("fold {}: {e}", f + 1)))
                })
                .collect::<Result<Vec<_>>>()
        })??;
        let mut out = vec![vec![0.0; self.y.len()]; m];
        for (test, preds) in results {
            for (j, p) in preds.into_iter().enumerate() {
                for (&i, v) in test.iter().zip(p) {
                    out[j][i] = clamp_unit(v);
                }
            }
        }
        Ok(out)
    }

    fn report(&self, params: ModelParams, ds: &LabeledDataset, seed: u64, predictions: Vec<f64>) -> Result<MetricsReport> {
        let per_fold = (0..self.folds.k)
            .map(|f| {
                let (_, test) = self.folds.split(f);
                let y: Vec<f64> = test.iter().map(|&i| self.y[i]).collect();
                let p: Vec<f64> = test.iter().map(|&i| predictions[i]).collect();
                Metrics::compute(&y, &p)
            })
            .collect::<Result<_>>()?;
        Ok(MetricsReport {
            params,
            dataset: ds.descriptor(None),
            k: self.folds.k,
            seed,
            pooled: Metrics::compute(&self.y, &predictions)?,
            per_fold,
            predictions,
            labels: self.y.clone(),
        })
    }
}

/// Stratified k-fold cross-validation with held-out predictions clamped to `[0, 1]`.
pub fn cross_validate(
    params: &ModelParams,
    ds: &LabeledDataset,
    k: usize,
    seed: u64,
    workers: usize,
) -> Result<MetricsReport> {
    params.validate()?;
    let prep = Prepared::new(ds, k, seed)?;
    let mut preds = prep.run(workers, 1, |x, y, held| {
        let m = models::fit(params, x, y)?;
        Ok(vec![m.predict_batch(held)?])
    })?;
    prep.report(params.clone(), ds, seed, preds.remove(0))
}

/// Cross-validate LS-Boost at several ensemble sizes from one fit per fold.
///
/// Report `j` is identical to `cross_validate` with `n_estimators = stages[j]`.
pub fn cross_validate_boost_stages(
    params: &BoostParams,
    stages: &[usize],
    ds: &LabeledDataset,
    k: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<MetricsReport>> {
    if stages.is_empty() || stages.contains(&0) || stages.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("stages must be positive and strictly ascending".into()));
    }
    let mut full = params.clone();
    full.n_estimators = *stages.last().unwrap();
    full.validate()?;
    let prep = Prepared::new(ds, k, seed)?;
    let preds = prep.run(workers, stages.len(), |x, y, held| {
        let m = models::fit_lsboost(x, y, &full)?;
        let mut out = vec![Vec::with_capacity(held.len()); stages.len()];
        for row in held {
            for (j, v) in m.staged_predict(row, stages)?.into_iter().enumerate() {
                out[j].push(v);
            }
        }
        Ok(out)
    })?;
    stages
        .iter()
        .zip(preds)
        .map(|(&m, p)| {
            let mut sp = params.clone();
            sp.n_estimators = m;
            prep.report(ModelParams::LsBoost(sp), ds, seed, p)
        })
        .collect()
}

/// Least-squares line through `(y, yhat)` and the correlation.
#[derive(Clone, Debug, PartialEq)]
pub struct ScatterSummary {
    pub n: usize,
    pub slope: f64,
    pub intercept: f64,
    pub r: Option<f64>,
}

/// Fit `yhat ~ slope * y + intercept`. A constant `y` gives slope 0 through the mean.
pub fn scatter_summary(y: &[f64], yhat: &[f64]) -> Result<ScatterSummary> {
    check_pair(y, yhat)?;
    let (my, mp) = (mean(y), mean(yhat));
    let sxx: f64 = y.iter().map(|a| (a - my).powi(2)).sum();
    let sxy: f64 = y.iter().zip(yhat).map(|(a, b)| (a - my) * (b - mp)).sum();
    let slope = if is_constant(y) { 0.0 } else { sxy / sxx };
    Ok(ScatterSummary {
        n: y.len(),
        slope,
        intercept: mp - slope * my,
        r: optional(corrcoef(y, yhat))?,
    })
}

/// CSV of `true,predicted` pairs under `# key=value` summary lines.
pub fn scatter_csv(y: &[f64], yhat: &[f64], header: &[(String, String)]) -> Result<(String, ScatterSummary)> {
    let s = scatter_summary(y, yhat)?;
    let mut out = String::new();
    for (k, v) in header {
        writeln!(out, "# {k}={v}").unwrap();
    }
    writeln!(out, "# n={}", s.n).unwrap();
    writeln!(out, "# slope={:?}", s.slope).unwrap();
    writeln!(out, "# intercept={:?}", s.intercept).unwrap();
    writeln!(out, "# r={}", opt_full(s.r)).unwrap();
    out.push_str("true,predicted\n");
    for (a, b) in y.iter().zip(yhat) {
        writeln!(out, "{a:?},{b:?}").unwrap();
    }
    Ok((out, s))
}

pub fn scatter_report(y: &[f64], yhat: &[f64], path: impl AsRef<Path>) -> Result<ScatterSummary> {
    let path = path.as_ref();
    let (text, s) = scatter_csv(y, yhat, &[])?;
    fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(s)
}

/// Sectioned text report: `[name]` headers followed by `key = value` lines or
/// whitespace-aligned tables.
#[derive(Clone, Debug, Default)]
pub struct Report {
    text: String,
}

impl Report {
    pub fn new(title: &str) -> Self {
        Self {
            text: format!("# {title}\n"),
        }
    }

    pub fn section<K: AsRef<str>, V: AsRef<str>>(&mut self, name: &str, pairs: impl IntoIterator<Item = (K, V)>) -> &mut Self {
        writeln!(self.text, "\n[{name}]").unwrap();
        for (k, v) in pairs {
            writeln!(self.text, "{} = {}", k.as_ref(), v.as_ref()).unwrap();
        }
        self
    }

    pub fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> &mut Self {
        writeln!(self.text, "\n[{name}]").unwrap();
        let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
        for r in rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let line = |cells: Vec<&str>| {
            let mut l = String::new();
            for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
                if i + 1 == cells.len() {
                    l.push_str(c);
                } else {
                    write!(l, "{c:<w$}  ").unwrap();
                }
            }
            l
        };
        writeln!(self.text, "{}", line(header.to_vec())).unwrap();
        for r in rows {
            writeln!(self.text, "{}", line(r.iter().map(String::as_str).collect())).unwrap();
        }
        self
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, &self.text).map_err(|e| Error::io(path, e))
    }
}

pub const METRIC_COLUMNS: [&str; 4] = ["RMSE", "MAE", "R", "R2"];

/// Model comparison table with one row per `(label, metrics)`.
pub fn comparison_rows(entries: &[(&str, &Metrics)]) -> Vec<Vec<String>> {
    entries
        .iter()
        .map(|(label, m)| {
            let mut r = vec![label.to_string()];
            r.extend(m.row());
            r
        })
        .collect()
}

/// Per-fold breakdown rows: fold, n and the four metrics.
pub fn fold_rows(report: &MetricsReport) -> Vec<Vec<String>> {
    report
        .per_fold
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let mut r = vec![(i + 1).to_string(), m.n.to_string()];
            r.extend(m.row());
            r
        })
        .collect()
}

pub fn descriptor_pairs(d: &DatasetDescriptor) -> Vec<(&'static str, String)> {
    vec![
        ("path", d.path.as_ref().map_or_else(|| "-".into(), |p| p.display().to_string())),
        ("qubits", d.qubits.to_string()),
        ("rows", d.rows.to_string()),
        ("seed", d.seed.to_string()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{DatasetSpec, Row, RowClass};
    use crate::models::{ModelKind, TreeParams};
    use crate::states::RngStream;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn hand_computed_metrics() {
        let y = [0.0, 1.0, 2.0];
        let z = [0.0, 0.0, 0.0];
        assert!(close(rmse(&y, &z).unwrap(), (5.0f64 / 3.0).sqrt()));
        assert!(close(mae(&y, &z).unwrap(), 1.0));
        assert!(close(r2(&y, &z).unwrap(), -1.5));
        assert_eq!(rmse(&y, &y).unwrap(), 0.0);
        assert_eq!(rmse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(mae(&[0.0, 0.0], &[1.0, -1.0]).unwrap(), 1.0);
        assert!(close(corrcoef(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap(), 0.5));
        assert!(close(corrcoef(&y, &[3.0, 5.0, 7.0]).unwrap(), 1.0));
        assert!(close(corrcoef(&y, &[0.0, -1.0, -2.0]).unwrap(), -1.0));
        assert_eq!(r2(&y, &y).unwrap(), 1.0);
        assert!(close(r2(&y, &[1.0, 1.0, 1.0]).unwrap(), 0.0));
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(rmse(&[], &[]), Err(Error::Domain(_))));
        assert!(matches!(mae(&[1.0], &[1.0, 2.0]), Err(Error::Domain(_))));
        assert!(matches!(corrcoef(&[1.0, 1.0], &[0.0, 1.0]), Err(Error::UndefinedMetric(_))));
        assert!(matches!(r2(&[1.0, 1.0], &[0.0, 1.0]), Err(Error::UndefinedMetric(_))));
        let m = Metrics::compute(&[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert_eq!((m.rmse, m.r, m.r2), (0.0, None, None));
        assert_eq!(m.row()[2], "NA");
    }

    proptest! {
        #[test]
        fn metric_symmetries(y in prop::collection::vec(-5.0f64..5.0, 3..30), seed in any::<u64>(), a in 0.1f64..10.0, b in -5.0f64..5.0) {
            let mut rng = RngStream::new(seed, 0);
            let p: Vec<f64> = y.iter().map(|v| v + rng.gaussian()).collect();
            prop_assert_eq!(rmse(&y, &p).unwrap(), rmse(&p, &y).unwrap());
            if let (Ok(r1), Ok(r2v)) = (corrcoef(&y, &p), corrcoef(&p, &y)) {
                prop_assert!((r1 - r2v).abs() < 1e-12);
                let q: Vec<f64> = p.iter().map(|v| a * v + b).collect();
                prop_assert!((corrcoef(&y, &q).unwrap() - r1).abs() < 1e-12);
            }
        }

        #[test]
        fn clamping_never_hurts(y in prop::collection::vec(0.0f64..=1.0, 1..40), seed in any::<u64>()) {
            let mut rng = RngStream::new(seed, 0);
            let p: Vec<f64> = y.iter().map(|v| v + 0.5 * rng.gaussian()).collect();
            let c: Vec<f64> = p.iter().copied().map(clamp_unit).collect();
            prop_assert!(rmse(&y, &c).unwrap() <= rmse(&y, &p).unwrap());
        }
    }

    #[test]
    fn scatter_fit_is_least_squares() {
        let s = scatter_summary(&[0.0, 0.5, 1.0], &[0.0, 0.5, 1.0]).unwrap();
        assert!(close(s.slope, 1.0) && close(s.intercept, 0.0));
        let y = [0.1, 0.4, 0.5, 0.9, 0.7];
        let p = [0.2, 0.35, 0.6, 0.8, 0.75];
        let s = scatter_summary(&y, &p).unwrap();
        assert_eq!(s.r, Some(corrcoef(&y, &p).unwrap()));
        let sse = |a: f64, b: f64| y.iter().zip(&p).map(|(x, v)| (v - a * x - b).powi(2)).sum::<f64>();
        let best = sse(s.slope, s.intercept);
        for i in -50..=50 {
            for j in -50..=50 {
                let (a, b) = (s.slope + i as f64 * 0.01, s.intercept + j as f64 * 0.01);
                assert!(sse(a, b) >= best - 1e-15);
            }
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        scatter_report(&y, &p, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains(&format!("# r={:?}", s.r.unwrap())));
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 6);
    }

    fn toy(n: usize, label: impl Fn(f64) -> f64) -> LabeledDataset {
        let mut rng = RngStream::new(4, 0);
        let rows = (0..n)
            .map(|_| {
                let x = rng.uniform();
                let l = label(x);
                Row { features: vec![x, rng.uniform()], label: l, bin: crate::dataset::bin_of(l).unwrap(), class: RowClass::Pure }
            })
            .collect();
        LabeledDataset {
            qubits: 2,
            feature_names: vec!["a".into(), "b".into()],
            rows,
            spec: DatasetSpec::new(2, 0, 0, 4),
        }
    }

    #[test]
    fn constant_labels_give_zero_error_and_undefined_r() {
        let ds = toy(60, |_| 0.3);
        for kind in [ModelKind::Tree, ModelKind::LsBoost] {
            let rep = cross_validate(&kind.default_params(), &ds, 5, 1, 1).unwrap();
            assert_eq!(rep.pooled.rmse, 0.0);
            assert_eq!(rep.pooled.r, None);
        }
    }

    #[test]
    fn pooled_metrics_recompute_from_folds() {
        let ds = toy(200, |x| x * x);
        let rep = cross_validate(&ModelParams::Tree(TreeParams::default()), &ds, 5, 3, 1).unwrap();
        let folds = kfold(&ds, 5, 3).unwrap();
        assert_eq!(folds.sizes().iter().sum::<usize>(), 200);
        let mut sq = 0.0;
        for f in 0..5 {
            let (_, test) = folds.split(f);
            let y: Vec<f64> = test.iter().map(|&i| ds.rows[i].label).collect();
            let p: Vec<f64> = test.iter().map(|&i| rep.predictions[i]).collect();
            assert_eq!(rep.per_fold[f], Metrics::compute(&y, &p).unwrap());
            sq += y.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        }
        assert!(close(rep.pooled.rmse, (sq / 200.0).sqrt()));
        assert!(rep.predictions.iter().all(|p| (0.0..=1.0).contains(p)));
        assert_eq!(rep, cross_validate(&rep.params, &ds, 5, 3, 2).unwrap());
    }

    #[test]
    fn staged_cv_matches_individual_runs() {
        let ds = toy(150, |x| (3.0 * x).sin().abs());
        let base = BoostParams { n_estimators: 1, learning_rate: 0.2, ..Default::default() };
        let staged = cross_validate_boost_stages(&base, &[5, 12], &ds, 3, 9, 1).unwrap();
        for rep in &staged {
            assert_eq!(rep, &cross_validate(&rep.params, &ds, 3, 9, 1).unwrap());
        }
        assert!(cross_validate_boost_stages(&base, &[12, 5], &ds, 3, 9, 1).is_err());
    }

    #[test]
    fn training_failure_names_the_fold() {
        let mut ds = toy(40, |x| x);
        for r in &mut ds.rows {
            r.features[0] *= 1e200;
        }
        let p = ModelParams::Mlp(crate::models::MlpParams { hidden_layers: vec![3], epochs: 2, step_size: 1e3, ..Default::default() });
        let err = cross_validate(&p, &ds, 2, 1, 1).unwrap_err().to_string();
        assert!(err.contains("fold 1"), "{err}");
    }

    #[test]
    fn report_layout() {
        let m = Metrics::compute(&[0.0, 1.0], &[0.1, 0.8]).unwrap();
        let mut r = Report::new("test");
        r.section("a", [("k", "v")]).table("t", &["Model", "RMSE", "MAE", "R", "R2"], &comparison_rows(&[("DT-R", &m)]));
        let text = r.as_str();
        assert!(text.starts_with("# test\n\n[a]\nk = v\n\n[t]\nModel"));
        assert!(text.contains("DT-R   0.1581"));
    }
}
