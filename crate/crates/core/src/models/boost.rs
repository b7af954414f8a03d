//! Least-squares gradient boosting over shallow CART trees.

use super::tree::{self, check_xy, Presorted, RegressionTree, TreeParams};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct BoostParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub base: TreeParams,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self {
            n_estimators: 300,
            learning_rate: 0.1,
            base: TreeParams {
                max_depth: 4,
                min_leaf: 5,
                min_split: 10,
            },
        }
    }
}

impl BoostParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::Domain("n_estimators must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Domain(format!(
                "learning_rate must be in (0, 1], got {}",
                self.learning_rate
            )));
        }
        self.base.validate()
    }
}

/// `F(x) = init + learning_rate * sum_m tree_m(x)`
#[derive(Clone, Debug, PartialEq)]
pub struct BoostedTrees {
    pub params: BoostParams,
    pub n_features: usize,
    pub init: f64,
    pub trees: Vec<RegressionTree>,
}

impl BoostedTrees {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.check_width(x)?;
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_unchecked(x)).sum();
        self.init + self.params.learning_rate * sum
    }

    /// Predictions of the first `m` stages for each `m` in `stages` (ascending, each
    /// at most the number of trees). Equal to predicting with a model truncated to
    /// `m` trees.
    pub fn staged_predict(&self, x: &[f64], stages: &[usize]) -> Result<Vec<f64>> {
        self.check_width(x)?;
        if stages.windows(2).any(|w| w[0] > w[1]) || stages.last().is_some_and(|&m| m > self.trees.len()) {
            return Err(Error::Domain(format!(
                "stages must be ascending and at most {}",
                self.trees.len()
            )));
        }
        let mut out = Vec::with_capacity(stages.len());
        let mut sum = 0.0;
        let mut done = 0;
        for &m in stages {
            for t in &self.trees[done..m] {
                sum += t.predict_unchecked(x);
            }
            done = m;
            out.push(self.init + self.params.learning_rate * sum);
        }
        Ok(out)
    }

    /// The same model with only the first `m` trees.
    pub fn truncated(&self, m: usize) -> BoostedTrees {
        let mut t = self.clone();
        t.trees.truncate(m);
        t.params.n_estimators = t.trees.len();
        t
    }

    fn check_width(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::Domain(format!(
                "model expects {} features, got {}",
                self.n_features,
                x.len()
            )));
        }
        Ok(())
    }
}

pub(crate) fn mean(y: &[f64]) -> f64 {
    if y.iter().all(|&v| v == y[0]) {
        return y[0];
    }
    y.iter().sum::<f64>() / y.len() as f64
}

/// Fit an LS-Boost ensemble.
pub fn fit_lsboost(x: &[Vec<f64>], y: &[f64], params: &BoostParams) -> Result<BoostedTrees> {
    fit_lsboost_traced(x, y, params).map(|(m, _)| m)
}

/// Fit and also return the training MSE after each stage, starting with the
/// constant model (`n_estimators + 1` entries).
pub fn fit_lsboost_traced(
    x: &[Vec<f64>],
    y: &[f64],
    params: &BoostParams,
) -> Result<(BoostedTrees, Vec<f64>)> {
    params.validate()?;
    let width = check_xy(x, y)?;
    let n = y.len();
    let init = mean(y);
    let lr = params.learning_rate;
    // Grown trees only see residuals, so presort once with row-index ties.
    let pre = Presorted::new(x, None);
    let mut tree_sum = vec![0.0; n];
    let mut residual = vec![0.0; n];
    let mut history = Vec::with_capacity(params.n_estimators + 1);
    let mut trees = Vec::with_capacity(params.n_estimators);
    let mse = |ts: &[f64]| {
        ts.iter()
            .zip(y)
            .map(|(s, v)| (v - (init + lr * s)).powi(2))
            .sum::<f64>()
            / n as f64
    };
    history.push(mse(&tree_sum));
    for _ in 0..params.n_estimators {
        for i in 0..n {
            residual[i] = y[i] - (init + lr * tree_sum[i]);
        }
        let t = tree::grow(&pre, &residual, &params.base);
        for (i, row) in x.iter().enumerate() {
            tree_sum[i] += t.predict_unchecked(row);
        }
        trees.push(t);
        history.push(mse(&tree_sum));
    }
    Ok((
        BoostedTrees {
            params: params.clone(),
            n_features: width,
            init,
            trees,
        },
        history,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::tree::{fit_tree, Node};
    use crate::states::RngStream;

    fn data(seed: u64, n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = RngStream::new(seed, 0);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.uniform()).collect()).collect();
        let y = x.iter().map(|r| (3.0 * r[0]).sin() + r[1] * r[2]).collect();
        (x, y)
    }

    #[test]
    fn single_full_step_equals_tree_on_centered_labels() {
        let (x, y) = data(1, 300);
        let base = TreeParams { max_depth: 3, min_leaf: 5, min_split: 10 };
        let p = BoostParams { n_estimators: 1, learning_rate: 1.0, base: base.clone() };
        let m = fit_lsboost(&x, &y, &p).unwrap();
        let f0 = mean(&y);
        let centered: Vec<f64> = y.iter().map(|v| v - f0).collect();
        let t = fit_tree(&x, &centered, &base).unwrap();
        for r in &x {
            let diff = m.predict(r).unwrap() - (f0 + t.predict(r).unwrap());
            assert!(diff.abs() < 1e-12);
        }
    }

    #[test]
    fn training_mse_never_increases() {
        let (x, y) = data(2, 400);
        let p = BoostParams { n_estimators: 120, learning_rate: 0.3, ..Default::default() };
        let (_, hist) = fit_lsboost_traced(&x, &y, &p).unwrap();
        assert_eq!(hist.len(), 121);
        for w in hist.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
        assert!(hist[120] < 0.1 * hist[0]);
    }

    #[test]
    fn constant_labels_leave_only_the_intercept() {
        let (x, _) = data(3, 50);
        let y = vec![0.1; 50];
        let m = fit_lsboost(&x, &y, &BoostParams { n_estimators: 5, ..Default::default() }).unwrap();
        assert_eq!(m.init, 0.1);
        for t in &m.trees {
            assert_eq!(t.nodes, vec![Node::Leaf { value: 0.0 }]);
        }
        assert_eq!(m.predict(&x[0]).unwrap(), 0.1);
    }

    #[test]
    fn staged_predictions_match_truncated_models() {
        let (x, y) = data(4, 200);
        let m = fit_lsboost(&x, &y, &BoostParams { n_estimators: 40, ..Default::default() }).unwrap();
        let (short, _) = fit_lsboost_traced(&x, &y, &BoostParams { n_estimators: 15, ..Default::default() }).unwrap();
        for r in x.iter().take(20) {
            let s = m.staged_predict(r, &[0, 15, 40]).unwrap();
            assert_eq!(s[0], m.init);
            assert_eq!(s[1], short.predict(r).unwrap());
            assert_eq!(s[1], m.truncated(15).predict(r).unwrap());
            assert_eq!(s[2], m.predict(r).unwrap());
        }
        assert!(m.staged_predict(&x[0], &[41]).is_err());
        assert!(m.staged_predict(&x[0], &[10, 5]).is_err());
    }

    #[test]
    fn parameter_validation() {
        let (x, y) = data(5, 20);
        for p in [
            BoostParams { n_estimators: 0, ..Default::default() },
            BoostParams { learning_rate: 0.0, ..Default::default() },
            BoostParams { learning_rate: 1.5, ..Default::default() },
        ] {
            assert!(fit_lsboost(&x, &y, &p).is_err());
        }
    }
}
