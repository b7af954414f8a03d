//! CART regression tree with exhaustive SSE splitting.
//!
//! Each feature is sorted once; nodes own a contiguous range of every
//! feature's ordering, and splitting stably partitions those ranges so the
//! children stay sorted. Candidate thresholds are midpoints between
//! consecutive distinct values, and a row goes left iff `x[f] < threshold`.
//! Equal-SSE candidates resolve to the lowest feature index, then the
//! smallest threshold.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub min_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 12,
            min_leaf: 5,
            min_split: 10,
        }
    }
}

impl TreeParams {
    /// No depth limit and single-row leaves.
    pub fn fully_grown() -> Self {
        Self {
            max_depth: usize::MAX,
            min_leaf: 1,
            min_split: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 || self.min_leaf == 0 {
            return Err(Error::Domain("max_depth and min_leaf must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegressionTree {
    pub params: TreeParams,
    pub n_features: usize,
    /// Root at index 0.
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::Domain(format!(
                "tree expects {} features, got {}",
                self.n_features,
                x.len()
            )));
        }
        Ok(self.predict_unchecked(x))
    }

    #[inline]
    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] < threshold { left } else { right },
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    /// `(feature, threshold)` of every split node.
    pub fn splits(&self) -> Vec<(usize, f64)> {
        self.nodes
            .iter()
            .filter_map(|n| match *n {
                Node::Split { feature, threshold, .. } => Some((feature, threshold)),
                Node::Leaf { .. } => None,
            })
            .collect()
    }
}

pub(crate) fn check_xy(x: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::Domain("cannot fit on an empty training set".into()));
    }
    if x.len() != y.len() {
        return Err(Error::Dimension(format!("{} feature rows but {} labels", x.len(), y.len())));
    }
    let width = x[0].len();
    if width == 0 {
        return Err(Error::Domain("feature rows are empty".into()));
    }
    if x.iter().any(|r| r.len() != width) {
        return Err(Error::Dimension("inconsistent feature width".into()));
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Domain("training data contains non-finite values".into()));
    }
    Ok(width)
}

/// Per-feature row orderings, reusable across fits on the same features.
pub(crate) struct Presorted {
    cols: Vec<Vec<f64>>,
    order: Vec<Vec<u32>>,
}

impl Presorted {
    /// Orders rows by feature value; ties by `tie_key` when given, else by row index.
    pub(crate) fn new(x: &[Vec<f64>], tie_key: Option<&[f64]>) -> Self {
        let width = x[0].len();
        let n = x.len();
        let cols: Vec<Vec<f64>> = (0..width).map(|f| x.iter().map(|r| r[f]).collect()).collect();
        let order = cols
            .iter()
            .map(|col| {
                let mut idx: Vec<u32> = (0..n as u32).collect();
                idx.sort_by(|&a, &b| {
                    let (a, b) = (a as usize, b as usize);
                    col[a].total_cmp(&col[b]).then_with(|| match tie_key {
                        Some(k) => k[a].total_cmp(&k[b]),
                        None => a.cmp(&b),
                    })
                });
                idx
            })
            .collect();
        Self { cols, order }
    }

    pub(crate) fn n_features(&self) -> usize {
        self.cols.len()
    }
}

struct Grower<'a> {
    pre: &'a Presorted,
    y: &'a [f64],
    params: &'a TreeParams,
    order: Vec<Vec<u32>>,
    go_left: Vec<bool>,
    scratch: Vec<u32>,
    nodes: Vec<Node>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Grower<'_> {
    fn build(&mut self, start: usize, end: usize, depth: usize) -> usize {
        let id = self.nodes.len();
        let n = end - start;
        let (mut sum, mut lo, mut hi) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
        for &i in &self.order[0][start..end] {
            let v = self.y[i as usize];
            sum += v;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let value = if lo == hi { lo } else { sum / n as f64 };
        self.nodes.push(Node::Leaf { value });

        let p = self.params;
        if depth >= p.max_depth || n < p.min_split || n < 2 * p.min_leaf || lo == hi {
            return id;
        }
        let Some(best) = self.best_split(start, end, sum) else {
            return id;
        };

        let col = &self.pre.cols[best.feature];
        let mut n_left = 0;
        for &i in &self.order[0][start..end] {
            let left = col[i as usize] < best.threshold;
            self.go_left[i as usize] = left;
            n_left += left as usize;
        }
        for f in 0..self.order.len() {
            self.scratch.clear();
            let range = &mut self.order[f][start..end];
            let mut w = 0;
            for k in 0..range.len() {
                let i = range[k];
                if self.go_left[i as usize] {
                    range[w] = i;
                    w += 1;
                } else {
                    self.scratch.push(i);
                }
            }
            range[w..].copy_from_slice(&self.scratch);
        }

        let mid = start + n_left;
        let left = self.build(start, mid, depth + 1);
        let right = self.build(mid, end, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    /// Maximizes `S_L^2/n_L + S_R^2/n_R`, which minimizes the children's SSE.
    fn best_split(&self, start: usize, end: usize, total: f64) -> Option<Candidate> {
        let n = end - start;
        let min_leaf = self.params.min_leaf;
        let mut best: Option<Candidate> = None;
        for f in 0..self.pre.n_features() {
            let col = &self.pre.cols[f];
            let ord = &self.order[f][start..end];
            let mut left_sum = 0.0;
            for k in 0..n - 1 {
                let i = ord[k] as usize;
                left_sum += self.y[i];
                let n_left = k + 1;
                if n_left < min_leaf {
                    continue;
                }
                if n - n_left < min_leaf {
                    break;
                }
                let (a, b) = (col[i], col[ord[k + 1] as usize]);
                if a == b {
                    continue;
                }
                let right_sum = total - left_sum;
                let score = left_sum * left_sum / n_left as f64
                    + right_sum * right_sum / (n - n_left) as f64;
                if best.as_ref().is_none_or(|c| score > c.score) {
                    let mut threshold = 0.5 * (a + b);
                    if threshold <= a {
                        threshold = b;
                    }
                    best = Some(Candidate {
                        feature: f,
                        threshold,
                        score,
                    });
                }
            }
        }
        best
    }
}

pub(crate) fn grow(pre: &Presorted, y: &[f64], params: &TreeParams) -> RegressionTree {
    let n = y.len();
    let mut g = Grower {
        pre,
        y,
        params,
        order: pre.order.clone(),
        go_left: vec![false; n],
        scratch: Vec::with_capacity(n),
        nodes: Vec::new(),
    };
    g.build(0, n, 0);
    RegressionTree {
        params: params.clone(),
        n_features: pre.n_features(),
        nodes: g.nodes,
    }
}

/// Fit a CART regression tree.
///
/// Ties in feature values are ordered by label, which makes the fitted tree
/// independent of the order of the training rows.
pub fn fit_tree(x: &[Vec<f64>], y: &[f64], params: &TreeParams) -> Result<RegressionTree> {
    params.validate()?;
    check_xy(x, y)?;
    let pre = Presorted::new(x, Some(y));
    Ok(grow(&pre, y, params))
}
