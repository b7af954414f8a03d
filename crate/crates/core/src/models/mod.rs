//! Regressors: CART tree, LS-Boost ensemble and a feed-forward network,
//! behind a common [`ModelParams`] / [`RegressionModel`] pair.

pub mod boost;
pub mod grid;
pub mod io;
pub mod mlp;
pub mod tree;

use std::fmt;
use std::str::FromStr;

pub use boost::{fit_lsboost, fit_lsboost_traced, BoostParams, BoostedTrees};
pub use grid::{grid_search, GridPoint, GridSearchResult, ParamGrid};
pub use io::{load_model, load_model_of_kind, save_model};
pub use mlp::{fit_mlp, Activation, Mlp, MlpParams};
pub use tree::{fit_tree, RegressionTree, TreeParams};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Tree,
    LsBoost,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Tree, ModelKind::LsBoost, ModelKind::Mlp];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Tree => "tree",
            ModelKind::LsBoost => "lsboost",
            ModelKind::Mlp => "mlp",
        }
    }

    /// Short name used in result tables.
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Tree => "DT-R",
            ModelKind::LsBoost => "LS-ENS",
            ModelKind::Mlp => "MLP",
        }
    }

    pub fn default_params(self) -> ModelParams {
        match self {
            ModelKind::Tree => ModelParams::Tree(TreeParams::default()),
            ModelKind::LsBoost => ModelParams::LsBoost(BoostParams::default()),
            ModelKind::Mlp => ModelParams::Mlp(MlpParams::default()),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Domain(format!("unknown model {s:?} (supported: tree, lsboost, mlp)")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelParams {
    Tree(TreeParams),
    LsBoost(BoostParams),
    Mlp(MlpParams),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Tree(_) => ModelKind::Tree,
            ModelParams::LsBoost(_) => ModelKind::LsBoost,
            ModelParams::Mlp(_) => ModelKind::Mlp,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelParams::Tree(p) => p.validate(),
            ModelParams::LsBoost(p) => p.validate(),
            ModelParams::Mlp(p) => p.validate(),
        }
    }

    /// `key=value` pairs in a fixed order. The same pairs are accepted by [`ModelParams::parse_pairs`].
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        fn depth(d: usize) -> String {
            if d == usize::MAX { "none".into() } else { d.to_string() }
        }
        match self {
            ModelParams::Tree(p) => vec![
                ("max_depth", depth(p.max_depth)),
                ("min_leaf", p.min_leaf.to_string()),
                ("min_split", p.min_split.to_string()),
            ],
            ModelParams::LsBoost(p) => vec![
                ("n_estimators", p.n_estimators.to_string()),
                ("learning_rate", format!("{:?}", p.learning_rate)),
                ("max_depth", depth(p.base.max_depth)),
                ("min_leaf", p.base.min_leaf.to_string()),
                ("min_split", p.base.min_split.to_string()),
            ],
            ModelParams::Mlp(p) => vec![
                (
                    "hidden_layers",
                    p.hidden_layers.iter().map(|w| w.to_string()).collect::<Vec<_>>().join("x"),
                ),
                ("activation", p.activation.to_string()),
                ("epochs", p.epochs.to_string()),
                ("batch_size", p.batch_size.to_string()),
                ("step_size", format!("{:?}", p.step_size)),
                ("seed", p.seed.to_string()),
            ],
        }
    }

    /// Space-separated `key=value` rendering.
    pub fn describe(&self) -> String {
        self.pairs()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Start from the defaults of `kind` and override with `pairs`.
    pub fn parse_pairs<'a>(kind: ModelKind, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Domain(format!("invalid value {v:?} for {key}")))
        }
        fn depth(key: &str, v: &str) -> Result<usize> {
            if v == "none" { Ok(usize::MAX) } else { num(key, v) }
        }
        let mut p = kind.default_params();
        for (k, v) in pairs {
            match (&mut p, k) {
                (ModelParams::Tree(t), "max_depth") => t.max_depth = depth(k, v)?,
                (ModelParams::Tree(t), "min_leaf") => t.min_leaf = num(k, v)?,
                (ModelParams::Tree(t), "min_split") => t.min_split = num(k, v)?,
                (ModelParams::LsBoost(b), "n_estimators") => b.n_estimators = num(k, v)?,
                (ModelParams::LsBoost(b), "learning_rate") => b.learning_rate = num(k, v)?,
                (ModelParams::LsBoost(b), "max_depth") => b.base.max_depth = depth(k, v)?,
                (ModelParams::LsBoost(b), "min_leaf") => b.base.min_leaf = num(k, v)?,
                (ModelParams::LsBoost(b), "min_split") => b.base.min_split = num(k, v)?,
                (ModelParams::Mlp(m), "hidden_layers") => {
                    m.hidden_layers = if v.is_empty() {
                        Vec::new()
                    } else {
                        v.split('x').map(|w| num(k, w)).collect::<Result<_>>()?
                    }
                }
                (ModelParams::Mlp(m), "activation") => m.activation = v.parse()?,
                (ModelParams::Mlp(m), "epochs") => m.epochs = num(k, v)?,
                (ModelParams::Mlp(m), "batch_size") => m.batch_size = num(k, v)?,
                (ModelParams::Mlp(m), "step_size") => m.step_size = num(k, v)?,
                (ModelParams::Mlp(m), "seed") => m.seed = num(k, v)?,
                _ => return Err(Error::Domain(format!("unknown parameter {k:?} for {kind}"))),
            }
        }
        p.validate()?;
        Ok(p)
    }

    /// Rough capacity measure used to break ties between equally scored grid points:
    /// leaf budget for trees, total leaf budget for ensembles, weight count for networks.
    pub fn complexity(&self) -> f64 {
        let leaves = |d: usize| 2f64.powi(d.min(1000) as i32);
        match self {
            ModelParams::Tree(p) => leaves(p.max_depth),
            ModelParams::LsBoost(p) => p.n_estimators as f64 * leaves(p.base.max_depth),
            ModelParams::Mlp(p) => {
                // Input width is unknown here; count hidden-to-hidden and output weights.
                let mut total = 0usize;
                let mut prev = 1usize;
                for &w in p.hidden_layers.iter().chain(std::iter::once(&1)) {
                    total += prev * w + w;
                    prev = w;
                }
                total as f64
            }
        }
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind(), self.describe())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RegressionModel {
    Tree(RegressionTree),
    LsBoost(BoostedTrees),
    Mlp(Mlp),
}

impl RegressionModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            RegressionModel::Tree(_) => ModelKind::Tree,
            RegressionModel::LsBoost(_) => ModelKind::LsBoost,
            RegressionModel::Mlp(_) => ModelKind::Mlp,
        }
    }

    pub fn params(&self) -> ModelParams {
        match self {
            RegressionModel::Tree(m) => ModelParams::Tree(m.params.clone()),
            RegressionModel::LsBoost(m) => ModelParams::LsBoost(m.params.clone()),
            RegressionModel::Mlp(m) => ModelParams::Mlp(m.params.clone()),
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            RegressionModel::Tree(m) => m.n_features,
            RegressionModel::LsBoost(m) => m.n_features,
            RegressionModel::Mlp(m) => m.n_features(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        match self {
            RegressionModel::Tree(m) => m.predict(x),
            RegressionModel::LsBoost(m) => m.predict(x),
            RegressionModel::Mlp(m) => m.predict(x),
        }
    }

    pub fn predict_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter().map(|r| self.predict(r)).collect()
    }
}

/// Fit the model described by `params`.
pub fn fit(params: &ModelParams, x: &[Vec<f64>], y: &[f64]) -> Result<RegressionModel> {
    Ok(match params {
        ModelParams::Tree(p) => RegressionModel::Tree(fit_tree(x, y, p)?),
        ModelParams::LsBoost(p) => RegressionModel::LsBoost(fit_lsboost(x, y, p)?),
        ModelParams::Mlp(p) => RegressionModel::Mlp(fit_mlp(x, y, p)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_parse() {
        for k in ModelKind::ALL {
            assert_eq!(k.as_str().parse::<ModelKind>().unwrap(), k);
        }
        let err = "svm".parse::<ModelKind>().unwrap_err().to_string();
        assert!(err.contains("tree, lsboost, mlp"));
    }

    #[test]
    fn pairs_round_trip() {
        let cases = [
            ModelParams::Tree(TreeParams::fully_grown()),
            ModelParams::LsBoost(BoostParams { learning_rate: 0.05, ..Default::default() }),
            ModelParams::Mlp(MlpParams { hidden_layers: vec![32, 16], activation: Activation::Tanh, step_size: 3e-4, ..Default::default() }),
        ];
        for p in cases {
            let pairs = p.pairs();
            let back = ModelParams::parse_pairs(p.kind(), pairs.iter().map(|(k, v)| (*k, v.as_str()))).unwrap();
            assert_eq!(back, p);
        }
        assert!(ModelParams::parse_pairs(ModelKind::Tree, [("n_estimators", "3")]).is_err());
        assert!(ModelParams::parse_pairs(ModelKind::Tree, [("max_depth", "x")]).is_err());
    }

    #[test]
    fn predict_checks_width() {
        let x = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.5, 0.5]];
        let y = vec![0.0, 1.0, 0.5];
        for k in ModelKind::ALL {
            let mut p = k.default_params();
            if let ModelParams::Mlp(m) = &mut p {
                m.epochs = 2;
            }
            let m = fit(&p, &x, &y).unwrap();
            assert_eq!(m.kind(), k);
            assert_eq!(m.params(), p);
            assert!(m.predict(&[0.0]).is_err());
            assert!(m.predict(&[0.0, 0.0]).unwrap().is_finite());
        }
    }
}
