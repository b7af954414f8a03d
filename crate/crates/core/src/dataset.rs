//! Bin-stratified labeled datasets.
//!
//! A dataset is features plus labels only; states are not stored. Rows are
//! generated independently, row `i` drawing from `RngStream::new(seed, i)`,
//! so the written file is identical for any worker count.
//!
//! File layout (`entq-dataset-v1`):
//!
//! ```text
//! # format=entq-dataset-v1
//! # qubits=2
//! # feature_names=t_xx,t_xy,...
//! # separable_count=10
//! # ...            (remaining spec fields)
//! # rows=100
//! f1,f2,...,f9,label,bin,class
//! 0.1,...,0.42,5,pure
//! ```
//!
//! Floats are written with Rust's shortest round-trip formatting.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{self, PAULI_FEATURE_NAMES, SVETLICHNY_FEATURE_NAMES};
use crate::measures::{self, LABEL_CLAMP_TOL};
use crate::states::{self, randomize_locally, RngStream};

pub const FORMAT_VERSION: &str = "entq-dataset-v1";
pub const N_BINS: u8 = 10;
pub const DEFAULT_MAX_ATTEMPTS_PER_BIN: u64 = 1_000_000;

/// Separable rows must have a computed label below this before being stored as 0.
const SEPARABLE_TOL: f64 = 1e-9;

/// Open lower and closed upper edge of bin `b` in `1..=10`.
pub fn bin_bounds(bin: u8) -> (f64, f64) {
    (f64::from(bin - 1) / 10.0, f64::from(bin) / 10.0)
}

/// Bin of a label: 0 for exactly zero, otherwise the `b` with `lo < label <= hi`.
pub fn bin_of(label: f64) -> Option<u8> {
    if label == 0.0 {
        return Some(0);
    }
    (1..=N_BINS).find(|&b| {
        let (lo, hi) = bin_bounds(b);
        label > lo && label <= hi
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub qubits: u8,
    pub separable_count: usize,
    /// Entangled rows in each of the ten bins.
    pub per_bin_count: usize,
    /// Two qubits only: share of pure rows in each bin (and among separable rows).
    pub pure_fraction: f64,
    /// Three qubits only: share of GHZ-class rows in each bin.
    pub ghz_fraction: f64,
    pub seed: u64,
    /// Three qubits only: rejection draws allowed for a single row slot.
    pub max_attempts_per_bin: u64,
}

impl DatasetSpec {
    pub fn new(qubits: u8, separable_count: usize, per_bin_count: usize, seed: u64) -> Self {
        Self {
            qubits,
            separable_count,
            per_bin_count,
            pure_fraction: 0.5,
            ghz_fraction: 0.5,
            seed,
            max_attempts_per_bin: DEFAULT_MAX_ATTEMPTS_PER_BIN,
        }
    }

    /// 10,000 separable rows plus 9,000 per bin: 100,000 rows.
    pub fn full_scale(qubits: u8, seed: u64) -> Self {
        Self::new(qubits, 10_000, 9_000, seed)
    }

    /// 2,000 separable rows plus 1,800 per bin: 20,000 rows.
    pub fn desk_scale(qubits: u8, seed: u64) -> Self {
        Self::new(qubits, 2_000, 1_800, seed)
    }

    pub fn total_rows(&self) -> usize {
        self.separable_count + usize::from(N_BINS) * self.per_bin_count
    }

    pub fn validate(&self) -> Result<()> {
        if self.qubits != 2 && self.qubits != 3 {
            return Err(Error::Domain(format!("qubits must be 2 or 3, got {}", self.qubits)));
        }
        for (name, v) in [("pure_fraction", self.pure_fraction), ("ghz_fraction", self.ghz_fraction)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("{name} {v} outside [0, 1]")));
            }
        }
        if self.max_attempts_per_bin == 0 {
            return Err(Error::Domain("max_attempts_per_bin must be positive".into()));
        }
        Ok(())
    }

    pub fn feature_names(&self) -> Vec<String> {
        feature_names(self.qubits)
    }

    /// Rows of the first kind in a split of `n` by `fraction`.
    fn split(n: usize, fraction: f64) -> usize {
        ((n as f64) * fraction).round() as usize
    }

    fn jobs(&self) -> Vec<Job> {
        let mut jobs = Vec::with_capacity(self.total_rows());
        if self.qubits == 2 {
            let pure = Self::split(self.separable_count, self.pure_fraction);
            jobs.extend(std::iter::repeat_n(Job::SeparablePure, pure));
            jobs.extend(std::iter::repeat_n(Job::SeparableMixed, self.separable_count - pure));
            for bin in 1..=N_BINS {
                let pure = Self::split(self.per_bin_count, self.pure_fraction);
                jobs.extend(std::iter::repeat_n(Job::Pure(bin), pure));
                jobs.extend(std::iter::repeat_n(Job::Mixed(bin), self.per_bin_count - pure));
            }
        } else {
            jobs.extend(std::iter::repeat_n(Job::Biseparable, self.separable_count));
            for bin in 1..=N_BINS {
                let ghz = Self::split(self.per_bin_count, self.ghz_fraction);
                jobs.extend(std::iter::repeat_n(Job::Ghz(bin), ghz));
                jobs.extend(std::iter::repeat_n(Job::W(bin), self.per_bin_count - ghz));
            }
        }
        jobs
    }
}

pub fn feature_names(qubits: u8) -> Vec<String> {
    let names: &[&str] = if qubits == 2 {
        &PAULI_FEATURE_NAMES
    } else {
        &SVETLICHNY_FEATURE_NAMES
    };
    names.iter().map(|s| s.to_string()).collect()
}

pub fn feature_width(qubits: u8) -> usize {
    if qubits == 2 { 9 } else { 8 }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RowClass {
    SeparablePure,
    SeparableMixed,
    Pure,
    Mixed,
    Biseparable,
    Ghz,
    W,
}

impl RowClass {
    pub fn as_str(self) -> &'static str {
        match self {
            RowClass::SeparablePure => "sep_pure",
            RowClass::SeparableMixed => "sep_mixed",
            RowClass::Pure => "pure",
            RowClass::Mixed => "mixed",
            RowClass::Biseparable => "bisep",
            RowClass::Ghz => "ghz",
            RowClass::W => "w",
        }
    }
}

impl fmt::Display for RowClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RowClass {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "sep_pure" => RowClass::SeparablePure,
            "sep_mixed" => RowClass::SeparableMixed,
            "pure" => RowClass::Pure,
            "mixed" => RowClass::Mixed,
            "bisep" => RowClass::Biseparable,
            "ghz" => RowClass::Ghz,
            "w" => RowClass::W,
            other => return Err(format!("unknown row class `{other}`")),
        })
    }
}

#[derive(Clone, Copy, Debug)]
enum Job {
    SeparablePure,
    SeparableMixed,
    Pure(u8),
    Mixed(u8),
    Biseparable,
    Ghz(u8),
    W(u8),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub features: Vec<f64>,
    pub label: f64,
    pub bin: u8,
    pub class: RowClass,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub qubits: u8,
    pub feature_names: Vec<String>,
    pub rows: Vec<Row>,
    pub spec: DatasetSpec,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn features(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.features.clone()).collect()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.label).collect()
    }

    /// Row counts keyed by `(bin, class)`.
    pub fn composition(&self) -> BTreeMap<(u8, RowClass), usize> {
        let mut m = BTreeMap::new();
        for r in &self.rows {
            *m.entry((r.bin, r.class)).or_insert(0) += 1;
        }
        m
    }

    /// Row feature widths, label ranges, recorded bins and feature ranges.
    pub fn validate(&self) -> Result<()> {
        let width = feature_width(self.qubits);
        if self.feature_names.len() != width {
            return Err(Error::Dimension(format!(
                "{} feature names for a {}-qubit dataset",
                self.feature_names.len(),
                self.qubits
            )));
        }
        for (i, r) in self.rows.iter().enumerate() {
            if r.features.len() != width {
                return Err(Error::Dimension(format!("row {i} has {} features", r.features.len())));
            }
            if r.features.iter().any(|v| !v.is_finite() || v.abs() > 1.0 + 1e-9) {
                return Err(Error::Domain(format!("row {i} has a feature outside [-1, 1]")));
            }
            if bin_of(r.label) != Some(r.bin) {
                return Err(Error::Domain(format!(
                    "row {i}: label {} does not fall in bin {}",
                    r.label, r.bin
                )));
            }
        }
        Ok(())
    }

    /// Human-readable rows-per-bin-and-class table.
    pub fn composition_summary(&self) -> String {
        let comp = self.composition();
        let mut classes: Vec<RowClass> = comp.keys().map(|k| k.1).collect();
        classes.sort();
        classes.dedup();
        let mut out = String::new();
        let _ = write!(out, "{:>4}", "bin");
        for c in &classes {
            let _ = write!(out, " {:>10}", c.as_str());
        }
        let _ = writeln!(out, " {:>8}", "total");
        for bin in 0..=N_BINS {
            let counts: Vec<usize> = classes
                .iter()
                .map(|c| comp.get(&(bin, *c)).copied().unwrap_or(0))
                .collect();
            let total: usize = counts.iter().sum();
            if total == 0 {
                continue;
            }
            let _ = write!(out, "{bin:>4}");
            for n in counts {
                let _ = write!(out, " {n:>10}");
            }
            let _ = writeln!(out, " {total:>8}");
        }
        let _ = write!(out, "rows: {}", self.len());
        out
    }
}

fn separable_row(label: f64, features: Vec<f64>, class: RowClass) -> Result<Row> {
    if label >= SEPARABLE_TOL {
        return Err(Error::Numeric(format!(
            "separable sample has entanglement label {label:e}"
        )));
    }
    Ok(Row {
        features,
        label: 0.0,
        bin: 0,
        class,
    })
}

fn in_bin(label: f64, bin: u8) -> bool {
    let (lo, hi) = bin_bounds(bin);
    label > lo && label <= hi
}

fn generate_row(spec: &DatasetSpec, job: Job, row_index: usize) -> Result<Row> {
    let mut rng = RngStream::new(spec.seed, row_index as u64);
    match job {
        Job::SeparablePure | Job::SeparableMixed => {
            let pure = matches!(job, Job::SeparablePure);
            let rho = states::sample_separable_2q(pure, &mut rng)?;
            let label = measures::concurrence_mixed(&rho)?.value;
            let f = features::pauli_correlations(&rho)?;
            let class = if pure { RowClass::SeparablePure } else { RowClass::SeparableMixed };
            separable_row(label, f.t.to_vec(), class)
        }
        Job::Pure(bin) => loop {
            let (_, hi) = bin_bounds(bin);
            // Uniform in (lo, hi].
            let target = hi - 0.1 * rng.uniform();
            let psi = states::make_pure_2q_with_concurrence(target, &mut rng)?;
            let label = measures::concurrence_pure(&psi)?.value;
            if in_bin(label, bin) {
                let f = features::pauli_correlations_pure(&psi)?;
                return Ok(Row {
                    features: f.t.to_vec(),
                    label,
                    bin,
                    class: RowClass::Pure,
                });
            }
        },
        Job::Mixed(bin) => {
            let (lo, hi) = bin_bounds(bin);
            let rho = states::make_mixed_2q_in_bin(lo, hi, &mut rng).map_err(|e| {
                Error::Exhausted(format!("2-qubit mixed bin {bin} ({lo}, {hi}]: {e}"))
            })?;
            let label = measures::concurrence_mixed(&rho)?.value;
            let f = features::pauli_correlations(&rho)?;
            Ok(Row {
                features: f.t.to_vec(),
                label,
                bin,
                class: RowClass::Mixed,
            })
        }
        Job::Biseparable => {
            let psi = states::sample_biseparable_3q(&mut rng)?;
            let label = measures::gme_concurrence_pure(&psi)?.value;
            let f = features::svetlichny_features_default(&psi)?;
            separable_row(label, f.f.to_vec(), RowClass::Biseparable)
        }
        Job::Ghz(bin) | Job::W(bin) => {
            let ghz = matches!(job, Job::Ghz(_));
            let class = if ghz { RowClass::Ghz } else { RowClass::W };
            for _ in 0..spec.max_attempts_per_bin {
                let canonical = if ghz {
                    states::sample_ghz_canonical(&mut rng)
                } else {
                    states::sample_w_canonical(&mut rng)
                };
                // GME is invariant under the local frame, so reject before paying for it.
                if !in_bin(measures::gme_concurrence_pure(&canonical)?.value, bin) {
                    continue;
                }
                let psi = randomize_locally(&canonical, &mut rng)?;
                let label = measures::gme_concurrence_pure(&psi)?.value;
                if !in_bin(label, bin) {
                    continue;
                }
                let f = features::svetlichny_features_default(&psi)?;
                return Ok(Row {
                    features: f.f.to_vec(),
                    label,
                    bin,
                    class,
                });
            }
            let (lo, hi) = bin_bounds(bin);
            Err(Error::Exhausted(format!(
                "3-qubit bin {bin} ({lo}, {hi}] starved for class {class} after {} draws",
                spec.max_attempts_per_bin
            )))
        }
    }
}

/// Run `f` on a rayon pool with `workers` threads (0 means the global pool).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Domain(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn build(spec: &DatasetSpec, workers: usize) -> Result<LabeledDataset> {
    spec.validate()?;
    let jobs = spec.jobs();
    let rows = with_workers(workers, || {
        jobs.par_iter()
            .enumerate()
            .map(|(i, &job)| generate_row(spec, job, i))
            .collect::<Result<Vec<Row>>>()
    })??;
    Ok(LabeledDataset {
        qubits: spec.qubits,
        feature_names: spec.feature_names(),
        rows,
        spec: spec.clone(),
    })
}

/// Two-qubit dataset: Pauli-correlation features, concurrence labels.
pub fn build_2q_dataset(spec: &DatasetSpec, workers: usize) -> Result<LabeledDataset> {
    if spec.qubits != 2 {
        return Err(Error::Domain("build_2q_dataset needs qubits = 2".into()));
    }
    build(spec, workers)
}

/// Three-qubit dataset: Svetlichny features, GME concurrence labels.
pub fn build_3q_dataset(spec: &DatasetSpec, workers: usize) -> Result<LabeledDataset> {
    if spec.qubits != 3 {
        return Err(Error::Domain("build_3q_dataset needs qubits = 3".into()));
    }
    build(spec, workers)
}

pub fn build_dataset(spec: &DatasetSpec, workers: usize) -> Result<LabeledDataset> {
    build(spec, workers)
}

fn header_lines(ds: &LabeledDataset) -> Vec<(String, String)> {
    let s = &ds.spec;
    vec![
        ("format".into(), FORMAT_VERSION.into()),
        ("qubits".into(), ds.qubits.to_string()),
        ("feature_names".into(), ds.feature_names.join(",")),
        ("separable_count".into(), s.separable_count.to_string()),
        ("per_bin_count".into(), s.per_bin_count.to_string()),
        ("pure_fraction".into(), s.pure_fraction.to_string()),
        ("ghz_fraction".into(), s.ghz_fraction.to_string()),
        ("seed".into(), s.seed.to_string()),
        ("max_attempts_per_bin".into(), s.max_attempts_per_bin.to_string()),
        ("rows".into(), ds.rows.len().to_string()),
    ]
}

pub fn column_names(n_features: usize, with_label: bool) -> Vec<String> {
    let mut cols: Vec<String> = (1..=n_features).map(|i| format!("f{i}")).collect();
    if with_label {
        cols.extend(["label", "bin", "class"].map(String::from));
    }
    cols
}

/// Serialize to the `entq-dataset-v1` text format.
pub fn to_csv_string(ds: &LabeledDataset) -> String {
    let mut out = String::with_capacity(ds.rows.len() * 200);
    for (k, v) in header_lines(ds) {
        let _ = writeln!(out, "# {k}={v}");
    }
    let _ = writeln!(out, "{}", column_names(ds.n_features(), true).join(","));
    for r in &ds.rows {
        for v in &r.features {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{},{},{}", r.label, r.bin, r.class);
    }
    out
}

pub fn write_csv(ds: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_csv_string(ds)).map_err(|e| Error::io(path, e))
}

struct LineErr<'a> {
    path: &'a Path,
}

impl LineErr<'_> {
    fn at(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }
}

fn parse_field<T: FromStr>(err: &LineErr, line: usize, key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| err.at(line, format!("bad value `{v}` for header `{key}`")))
}

fn parse_finite(err: &LineErr, line: usize, v: &str) -> Result<f64> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| err.at(line, format!("bad number `{v}`")))?;
    if !x.is_finite() {
        return Err(err.at(line, format!("non-finite value `{v}`")));
    }
    Ok(x)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, path)
}

/// Parse the `entq-dataset-v1` text format; `path` is only used in errors.
pub fn parse_csv(text: &str, path: &Path) -> Result<LabeledDataset> {
    let err = LineErr { path };
    let mut header: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).peekable();

    while let Some(&(n, l)) = lines.peek() {
        let Some(rest) = l.strip_prefix('#') else { break };
        let (k, v) = rest
            .trim()
            .split_once('=')
            .ok_or_else(|| err.at(n, "header line is not `# key=value`"))?;
        header.insert(k.trim().to_string(), (n, v.trim().to_string()));
        lines.next();
    }

    let get = |key: &str| -> Result<(usize, &str)> {
        header
            .get(key)
            .map(|(n, v)| (*n, v.as_str()))
            .ok_or_else(|| err.at(1, format!("missing header `{key}`")))
    };

    let (n, version) = get("format")?;
    if version != FORMAT_VERSION {
        return Err(err.at(n, format!("unsupported format `{version}`, expected `{FORMAT_VERSION}`")));
    }
    let (n, q) = get("qubits")?;
    let qubits: u8 = parse_field(&err, n, "qubits", q)?;
    if qubits != 2 && qubits != 3 {
        return Err(err.at(n, format!("qubits must be 2 or 3, got {qubits}")));
    }
    let (n, names) = get("feature_names")?;
    let feature_names: Vec<String> = names.split(',').map(|s| s.to_string()).collect();
    let width = feature_width(qubits);
    if feature_names.len() != width {
        return Err(err.at(
            n,
            format!("qubits={qubits} needs {width} features, header lists {}", feature_names.len()),
        ));
    }
    let field = |key: &str| -> Result<(usize, &str)> { get(key) };
    let (n, v) = field("separable_count")?;
    let separable_count = parse_field(&err, n, "separable_count", v)?;
    let (n, v) = field("per_bin_count")?;
    let per_bin_count = parse_field(&err, n, "per_bin_count", v)?;
    let (n, v) = field("pure_fraction")?;
    let pure_fraction = parse_field(&err, n, "pure_fraction", v)?;
    let (n, v) = field("ghz_fraction")?;
    let ghz_fraction = parse_field(&err, n, "ghz_fraction", v)?;
    let (n, v) = field("seed")?;
    let seed = parse_field(&err, n, "seed", v)?;
    let (n, v) = field("max_attempts_per_bin")?;
    let max_attempts_per_bin = parse_field(&err, n, "max_attempts_per_bin", v)?;
    let (rows_line, v) = field("rows")?;
    let expected_rows: usize = parse_field(&err, rows_line, "rows", v)?;

    let (n, cols) = lines.next().ok_or_else(|| err.at(rows_line + 1, "missing column row"))?;
    let expected_cols = column_names(width, true);
    let got_cols: Vec<&str> = cols.split(',').map(str::trim).collect();
    if got_cols != expected_cols {
        return Err(err.at(
            n,
            format!(
                "column row has {} columns `{cols}`, expected `{}`",
                got_cols.len(),
                expected_cols.join(",")
            ),
        ));
    }

    let mut rows = Vec::with_capacity(expected_rows);
    let mut last_line = n;
    for (n, l) in lines {
        last_line = n;
        if l.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = l.split(',').collect();
        if cells.len() != width + 3 {
            return Err(err.at(n, format!("expected {} columns, found {}", width + 3, cells.len())));
        }
        let features = cells[..width]
            .iter()
            .map(|c| parse_finite(&err, n, c))
            .collect::<Result<Vec<f64>>>()?;
        let label = parse_finite(&err, n, cells[width])?;
        let bin: u8 = cells[width + 1]
            .trim()
            .parse()
            .map_err(|_| err.at(n, format!("bad bin `{}`", cells[width + 1])))?;
        let class: RowClass = cells[width + 2].trim().parse().map_err(|e: String| err.at(n, e))?;
        if !(0.0..=1.0 + LABEL_CLAMP_TOL).contains(&label) || bin_of(label) != Some(bin) {
            return Err(err.at(n, format!("label {label} inconsistent with bin {bin}")));
        }
        rows.push(Row {
            features,
            label,
            bin,
            class,
        });
    }
    if rows.len() != expected_rows {
        return Err(err.at(
            last_line,
            format!("file truncated: header declares {expected_rows} rows, found {}", rows.len()),
        ));
    }

    Ok(LabeledDataset {
        qubits,
        feature_names,
        rows,
        spec: DatasetSpec {
            qubits,
            separable_count,
            per_bin_count,
            pure_fraction,
            ghz_fraction,
            seed,
            max_attempts_per_bin,
        },
    })
}

/// Features with optional labels, as accepted by prediction.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    pub features: Vec<Vec<f64>>,
    pub labels: Option<Vec<f64>>,
}

impl FeatureTable {
    pub fn n_features(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }
}

/// Read a feature file: optional `#` header lines, a column row
/// `f1..fN[,label[,bin,class]]`, then data rows.
pub fn read_feature_table(path: impl AsRef<Path>) -> Result<FeatureTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let err = LineErr { path };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    let (n, cols) = lines.next().ok_or_else(|| err.at(1, "missing column row"))?;
    let cols: Vec<&str> = cols.split(',').map(str::trim).collect();
    let n_features = cols.iter().take_while(|c| c.starts_with('f')).count();
    if n_features == 0 || cols[..n_features] != column_names(n_features, false) {
        return Err(err.at(n, "column row must start with f1..fN"));
    }
    let rest = &cols[n_features..];
    let has_label = match rest {
        [] => false,
        ["label"] | ["label", "bin", "class"] => true,
        _ => return Err(err.at(n, format!("unexpected trailing columns {rest:?}"))),
    };
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (n, l) in lines {
        let cells: Vec<&str> = l.split(',').collect();
        if cells.len() != cols.len() {
            return Err(err.at(n, format!("expected {} columns, found {}", cols.len(), cells.len())));
        }
        features.push(
            cells[..n_features]
                .iter()
                .map(|c| parse_finite(&err, n, c))
                .collect::<Result<Vec<f64>>>()?,
        );
        if has_label {
            labels.push(parse_finite(&err, n, cells[n_features])?);
        }
    }
    Ok(FeatureTable {
        features,
        labels: has_label.then_some(labels),
    })
}

/// Fold index for every row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldAssignment {
    pub k: usize,
    pub assignment: Vec<usize>,
}

impl FoldAssignment {
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &f in &self.assignment {
            s[f] += 1;
        }
        s
    }

    /// `(train rows, held-out rows)` for `fold`.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let (test, train): (Vec<usize>, Vec<usize>) =
            (0..self.assignment.len()).partition(|&i| self.assignment[i] == fold);
        (train, test)
    }
}

const FOLD_STREAM_BASE: u64 = 0xF01D_0000_0000_0000;

/// Bin-stratified k-fold assignment.
///
/// Each bin's rows are shuffled and dealt round-robin, continuing the deal
/// across bins, so both per-bin and total fold sizes differ by at most one.
pub fn kfold(ds: &LabeledDataset, k: usize, seed: u64) -> Result<FoldAssignment> {
    let bins: Vec<u8> = ds.rows.iter().map(|r| r.bin).collect();
    kfold_by_strata(&bins, k, seed)
}

pub fn kfold_by_strata(strata: &[u8], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::Domain(format!("k must be at least 2, got {k}")));
    }
    if k > strata.len() {
        return Err(Error::Domain(format!("k = {k} exceeds {} rows", strata.len())));
    }
    let mut by_bin: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    for (i, &b) in strata.iter().enumerate() {
        by_bin.entry(b).or_default().push(i);
    }
    let mut assignment = vec![0; strata.len()];
    let mut dealt = 0usize;
    for (bin, mut idx) in by_bin {
        let mut rng = RngStream::new(seed, FOLD_STREAM_BASE + u64::from(bin));
        rng.shuffle(&mut idx);
        for i in idx {
            assignment[i] = dealt % k;
            dealt += 1;
        }
    }
    Ok(FoldAssignment { k, assignment })
}

/// Where a dataset came from, for reports.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetDescriptor {
    pub path: Option<PathBuf>,
    pub qubits: u8,
    pub rows: usize,
    pub seed: u64,
}

impl LabeledDataset {
    pub fn descriptor(&self, path: Option<&Path>) -> DatasetDescriptor {
        DatasetDescriptor {
            path: path.map(Path::to_path_buf),
            qubits: self.qubits,
            rows: self.rows.len(),
            seed: self.spec.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(qubits: u8) -> LabeledDataset {
        build_dataset(&DatasetSpec::new(qubits, 10, 9, 5), 1).unwrap()
    }

    #[test]
    fn bin_edges() {
        assert_eq!(bin_of(0.0), Some(0));
        assert_eq!(bin_of(1e-12), Some(1));
        assert_eq!(bin_of(0.1), Some(1));
        assert_eq!(bin_of(0.3), Some(3));
        assert_eq!(bin_of(0.30000001), Some(4));
        assert_eq!(bin_of(1.0), Some(10));
        assert_eq!(bin_of(1.01), None);
        assert_eq!(bin_of(-0.1), None);
    }

    #[test]
    fn two_qubit_composition() {
        let ds = small(2);
        assert_eq!(ds.len(), 100);
        assert_eq!(ds.rows.iter().filter(|r| r.label == 0.0).count(), 10);
        ds.validate().unwrap();
        let comp = ds.composition();
        assert_eq!(comp[&(0, RowClass::SeparablePure)], 5);
        assert_eq!(comp[&(0, RowClass::SeparableMixed)], 5);
        for b in 1..=N_BINS {
            assert_eq!(comp[&(b, RowClass::Pure)], 5);
            assert_eq!(comp[&(b, RowClass::Mixed)], 4);
        }
    }

    #[test]
    fn three_qubit_composition() {
        let ds = small(3);
        assert_eq!(ds.len(), 100);
        ds.validate().unwrap();
        let comp = ds.composition();
        assert_eq!(comp[&(0, RowClass::Biseparable)], 10);
        for b in 1..=N_BINS {
            let g = comp[&(b, RowClass::Ghz)] as i64;
            let w = comp[&(b, RowClass::W)] as i64;
            assert_eq!(g + w, 9);
            assert!((g - w).abs() <= 1);
        }
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let spec = DatasetSpec::new(2, 6, 4, 11);
        let a = to_csv_string(&build_dataset(&spec, 1).unwrap());
        let b = to_csv_string(&build_dataset(&spec, 3).unwrap());
        assert_eq!(a, b);
        let spec = DatasetSpec::new(3, 6, 4, 11);
        let a = to_csv_string(&build_dataset(&spec, 1).unwrap());
        let b = to_csv_string(&build_dataset(&spec, 2).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn starvation_is_reported() {
        let mut spec = DatasetSpec::new(3, 0, 1, 3);
        spec.max_attempts_per_bin = 1;
        spec.ghz_fraction = 0.0;
        let err = build_dataset(&spec, 1).unwrap_err();
        assert!(matches!(err, Error::Exhausted(ref m) if m.contains("bin")), "{err}");
    }

    #[test]
    fn spec_validation() {
        assert!(DatasetSpec::new(4, 1, 1, 0).validate().is_err());
        let mut s = DatasetSpec::new(2, 1, 1, 0);
        s.pure_fraction = 1.5;
        assert!(s.validate().is_err());
        assert!(build_2q_dataset(&DatasetSpec::new(3, 1, 1, 0), 1).is_err());
        assert_eq!(DatasetSpec::full_scale(2, 0).total_rows(), 100_000);
        assert_eq!(DatasetSpec::desk_scale(3, 0).total_rows(), 20_000);
    }

    #[test]
    fn csv_round_trip() {
        for q in [2, 3] {
            let ds = small(q);
            let path = Path::new("mem.csv");
            let text = to_csv_string(&ds);
            assert_eq!(parse_csv(&text, path).unwrap(), ds);
        }
    }

    #[test]
    fn csv_errors_name_lines() {
        let ds = small(2);
        let text = to_csv_string(&ds);
        let path = Path::new("d.csv");

        // Truncated mid-row.
        let cut = &text[..text.len() - 30];
        match parse_csv(cut, path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, cut.lines().count()),
            other => panic!("{other:?}"),
        }
        // Truncated at a row boundary: caught by the row count.
        let whole_rows: String = text.lines().take(50).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse_csv(&whole_rows, path), Err(Error::Parse { .. })));

        let bad_version = text.replace(FORMAT_VERSION, "entq-dataset-v0");
        assert!(matches!(parse_csv(&bad_version, path), Err(Error::Parse { line: 1, .. })));

        let wrong_qubits = text.replacen("# qubits=2", "# qubits=3", 1);
        match parse_csv(&wrong_qubits, path) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("qubits=3"), "{msg}");
            }
            other => panic!("{other:?}"),
        }

        let mut lines: Vec<&str> = text.lines().collect();
        let nan_row = lines[12].replacen(&lines[12][..lines[12].find(',').unwrap()], "NaN", 1);
        lines[12] = &nan_row;
        match parse_csv(&lines.join("\n"), path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 13),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn kfold_is_a_stratified_partition() {
        let ds = small(2);
        let folds = kfold(&ds, 5, 1).unwrap();
        assert_eq!(folds.sizes(), vec![20; 5]);
        let mut seen = vec![false; ds.len()];
        for f in 0..5 {
            let (train, test) = folds.split(f);
            assert_eq!(train.len() + test.len(), ds.len());
            for i in test {
                assert!(!seen[i]);
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
        for bin in 0..=N_BINS {
            let mut counts = vec![0; 5];
            for (r, &f) in ds.rows.iter().zip(&folds.assignment) {
                if r.bin == bin {
                    counts[f] += 1;
                }
            }
            let (mn, mx) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            assert!(mx - mn <= 1, "bin {bin}: {counts:?}");
        }
        assert_eq!(folds, kfold(&ds, 5, 1).unwrap());
        assert_ne!(folds, kfold(&ds, 5, 2).unwrap());
    }

    #[test]
    fn kfold_rejects_bad_k() {
        let ds = small(2);
        assert!(kfold(&ds, 1, 0).is_err());
        assert!(kfold(&ds, 101, 0).is_err());
    }
}
