//! Plain-text model files.
//!
//! ```text
//! entq-model-v1
//! kind lsboost
//! params n_estimators=300 learning_rate=0.1 max_depth=4 min_leaf=5 min_split=10
//! n_features 9
//! init 0.4213
//! tree 3
//! S 0 0.25 1 2
//! L -0.1
//! L 0.2
//! ```
//!
//! Networks store `layer <n_in> <n_out>` followed by one `w` line per output
//! unit and a single `b` line. Floats use shortest round-trip formatting, so
//! a reloaded model predicts bit-identically. Lines starting with `#` and
//! blank lines are ignored.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::boost::BoostedTrees;
use super::mlp::{DenseLayer, Mlp};
use super::tree::{Node, RegressionTree};
use super::{ModelKind, ModelParams, RegressionModel};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "entq-model-v1";

pub fn to_text(model: &RegressionModel) -> String {
    let mut s = String::new();
    writeln!(s, "{MODEL_FORMAT}").unwrap();
    writeln!(s, "kind {}", model.kind()).unwrap();
    writeln!(s, "params {}", model.params().describe()).unwrap();
    writeln!(s, "n_features {}", model.n_features()).unwrap();
    fn tree(s: &mut String, t: &RegressionTree) {
        writeln!(s, "tree {}", t.nodes.len()).unwrap();
        for n in &t.nodes {
            match *n {
                Node::Leaf { value } => writeln!(s, "L {value:?}").unwrap(),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => writeln!(s, "S {feature} {threshold:?} {left} {right}").unwrap(),
            }
        }
    }
    match model {
        RegressionModel::Tree(t) => tree(&mut s, t),
        RegressionModel::LsBoost(b) => {
            writeln!(s, "init {:?}", b.init).unwrap();
            for t in &b.trees {
                tree(&mut s, t);
            }
        }
        RegressionModel::Mlp(m) => {
            for l in &m.layers {
                writeln!(s, "layer {} {}", l.n_in, l.n_out).unwrap();
                for row in l.weights.chunks(l.n_in) {
                    s.push('w');
                    for v in row {
                        write!(s, " {v:?}").unwrap();
                    }
                    s.push('\n');
                }
                s.push('b');
                for v in &l.biases {
                    write!(s, " {v:?}").unwrap();
                }
                s.push('\n');
            }
        }
    }
    s
}

pub fn save_model(model: &RegressionModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_text(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<RegressionModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_text(&text, path)
}

/// Load and require a particular kind.
pub fn load_model_of_kind(path: impl AsRef<Path>, expected: ModelKind) -> Result<RegressionModel> {
    let m = load_model(path)?;
    if m.kind() != expected {
        return Err(Error::KindMismatch {
            expected: expected.to_string(),
            found: m.kind().to_string(),
        });
    }
    Ok(m)
}

struct Lines<'a> {
    path: PathBuf,
    inner: Box<dyn Iterator<Item = (usize, &'a str)> + 'a>,
    peeked: Option<(usize, &'a str)>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str, path: &Path) -> Self {
        let inner = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        Self {
            path: path.to_path_buf(),
            inner: Box::new(inner),
            peeked: None,
            last: 0,
        }
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            msg: msg.into(),
        }
    }

    fn peek(&mut self) -> Option<(usize, &'a str)> {
        if self.peeked.is_none() {
            self.peeked = self.inner.next();
        }
        self.peeked
    }

    fn next(&mut self) -> Result<(usize, &'a str)> {
        let item = self.peek().ok_or_else(|| self.err(self.last + 1, "unexpected end of file"))?;
        self.peeked = None;
        self.last = item.0;
        Ok(item)
    }

    /// Next line, which must start with `tag`; returns its remaining fields.
    fn tagged(&mut self, tag: &str) -> Result<(usize, Vec<&'a str>)> {
        let (n, l) = self.next()?;
        let mut parts = l.split_whitespace();
        if parts.next() != Some(tag) {
            return Err(self.err(n, format!("expected `{tag}` line")));
        }
        Ok((n, parts.collect()))
    }

    fn num<T: std::str::FromStr>(&self, n: usize, v: &str) -> Result<T> {
        v.parse().map_err(|_| self.err(n, format!("invalid number {v:?}")))
    }

    fn single<T: std::str::FromStr>(&mut self, tag: &str) -> Result<T> {
        let (n, f) = self.tagged(tag)?;
        if f.len() != 1 {
            return Err(self.err(n, format!("`{tag}` takes one value")));
        }
        self.num(n, f[0])
    }
}

fn read_tree(lines: &mut Lines, params: &ModelParams, n_features: usize) -> Result<RegressionTree> {
    let tree_params = match params {
        ModelParams::Tree(p) => p.clone(),
        ModelParams::LsBoost(b) => b.base.clone(),
        ModelParams::Mlp(_) => unreachable!(),
    };
    let (n, f) = lines.tagged("tree")?;
    let count: usize = match f.as_slice() {
        [c] => lines.num(n, c)?,
        _ => return Err(lines.err(n, "`tree` takes a node count")),
    };
    if count == 0 {
        return Err(lines.err(n, "tree has no nodes"));
    }
    let mut nodes = Vec::with_capacity(count);
    for _ in 0..count {
        let (n, l) = lines.next()?;
        let f: Vec<&str> = l.split_whitespace().collect();
        let node = match f.as_slice() {
            ["L", v] => Node::Leaf { value: lines.num(n, v)? },
            ["S", feat, thr, l, r] => {
                let feature: usize = lines.num(n, feat)?;
                let (left, right): (usize, usize) = (lines.num(n, l)?, lines.num(n, r)?);
                if feature >= n_features || left >= count || right >= count || left <= nodes.len() || right <= nodes.len() {
                    return Err(lines.err(n, "split refers to an invalid feature or node"));
                }
                Node::Split {
                    feature,
                    threshold: lines.num(n, thr)?,
                    left,
                    right,
                }
            }
            _ => return Err(lines.err(n, "expected `L <value>` or `S <feature> <threshold> <left> <right>`")),
        };
        nodes.push(node);
    }
    Ok(RegressionTree {
        params: tree_params,
        n_features,
        nodes,
    })
}

pub fn from_text(text: &str, path: &Path) -> Result<RegressionModel> {
    let mut lines = Lines::new(text, path);
    let (n, magic) = lines.next()?;
    if magic != MODEL_FORMAT {
        return Err(lines.err(n, format!("expected `{MODEL_FORMAT}`")));
    }
    let kind: ModelKind = {
        let (n, f) = lines.tagged("kind")?;
        match f.as_slice() {
            [k] => k.parse().map_err(|e: Error| lines.err(n, e.to_string()))?,
            _ => return Err(lines.err(n, "`kind` takes one value")),
        }
    };
    let params = {
        let (n, f) = lines.tagged("params")?;
        let pairs = f
            .iter()
            .map(|p| p.split_once('=').ok_or_else(|| lines.err(n, format!("malformed pair {p:?}"))))
            .collect::<Result<Vec<_>>>()?;
        ModelParams::parse_pairs(kind, pairs).map_err(|e| lines.err(n, e.to_string()))?
    };
    let n_features: usize = lines.single("n_features")?;
    if n_features == 0 {
        return Err(lines.err(lines.last, "n_features must be positive"));
    }

    let model = match &params {
        ModelParams::Tree(_) => RegressionModel::Tree(read_tree(&mut lines, &params, n_features)?),
        ModelParams::LsBoost(p) => {
            let init: f64 = lines.single("init")?;
            let mut trees = Vec::with_capacity(p.n_estimators);
            for _ in 0..p.n_estimators {
                trees.push(read_tree(&mut lines, &params, n_features)?);
            }
            RegressionModel::LsBoost(BoostedTrees {
                params: p.clone(),
                n_features,
                init,
                trees,
            })
        }
        ModelParams::Mlp(p) => {
            let mut widths = vec![n_features];
            widths.extend(&p.hidden_layers);
            widths.push(1);
            let mut layers = Vec::new();
            for w in widths.windows(2) {
                let (n, f) = lines.tagged("layer")?;
                let dims: Vec<usize> = f.iter().map(|v| lines.num(n, v)).collect::<Result<_>>()?;
                if dims != [w[0], w[1]] {
                    return Err(lines.err(n, format!("expected `layer {} {}`", w[0], w[1])));
                }
                let mut weights = Vec::with_capacity(w[0] * w[1]);
                for _ in 0..w[1] {
                    let (n, f) = lines.tagged("w")?;
                    if f.len() != w[0] {
                        return Err(lines.err(n, format!("expected {} weights", w[0])));
                    }
                    for v in f {
                        weights.push(lines.num(n, v)?);
                    }
                }
                let (n, f) = lines.tagged("b")?;
                if f.len() != w[1] {
                    return Err(lines.err(n, format!("expected {} biases", w[1])));
                }
                let biases = f.iter().map(|v| lines.num(n, v)).collect::<Result<_>>()?;
                layers.push(DenseLayer {
                    n_in: w[0],
                    n_out: w[1],
                    weights,
                    biases,
                });
            }
            RegressionModel::Mlp(Mlp {
                params: p.clone(),
                layers,
            })
        }
    };
    if let Some((n, _)) = lines.peek() {
        return Err(lines.err(n, "trailing content after model"));
    }
    Ok(model)
}
