//! `entq generate | train | predict`.
//!
//! Every artifact records the resolved configuration as `#` header lines.
//! The worker count is left out so that outputs do not depend on it.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dataset::{self, DatasetSpec, DEFAULT_MAX_ATTEMPTS_PER_BIN};
use crate::error::{Error, Result};
use crate::eval::{self, Metrics, Report, METRIC_COLUMNS};
use crate::models::{self, io as model_io, GridSearchResult, ModelKind, ModelParams, ParamGrid};

#[derive(Debug, Parser)]
#[command(name = "entq", version, about = "Entanglement datasets and regression models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled dataset CSV.
    Generate(GenerateArgs),
    /// Cross-validate, fit on all rows and save the model.
    Train(TrainArgs),
    /// Predict labels for a feature CSV.
    Predict(PredictArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
    pub qubits: u8,
    /// Rows with zero label.
    #[arg(long, default_value_t = 2000)]
    pub separable: usize,
    /// Entangled rows in each of the ten label bins.
    #[arg(long, default_value_t = 1800)]
    pub per_bin: usize,
    /// Share of pure rows (two qubits).
    #[arg(long, default_value_t = 0.5)]
    pub pure_fraction: f64,
    /// Share of GHZ-class rows (three qubits).
    #[arg(long, default_value_t = 0.5)]
    pub ghz_fraction: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Rejection draws allowed per three-qubit row.
    #[arg(long, default_value_t = DEFAULT_MAX_ATTEMPTS_PER_BIN)]
    pub max_attempts: u64,
    /// Worker threads (0 uses all cores).
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Tree,
    Lsboost,
    Mlp,
}

impl From<KindArg> for ModelKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Tree => ModelKind::Tree,
            KindArg::Lsboost => ModelKind::LsBoost,
            KindArg::Mlp => ModelKind::Mlp,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub model: KindArg,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Fold assignment seed; also seeds network initialization unless overridden.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Search the default parameter grid for the model.
    #[arg(long, conflicts_with = "param")]
    pub grid: bool,
    /// Parameter override `key=value`, repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub param: Vec<String>,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
    /// True-vs-predicted CSV of the held-out predictions; defaults next to the report.
    #[arg(long)]
    pub scatter: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model_file: PathBuf,
    /// Feature CSV: `f1..fN`, optionally followed by `label` (and `bin,class`).
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn header_block(pairs: &[(String, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("# {k}={v}\n")).collect()
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<String> {
    let spec = DatasetSpec {
        qubits: a.qubits,
        separable_count: a.separable,
        per_bin_count: a.per_bin,
        pure_fraction: a.pure_fraction,
        ghz_fraction: a.ghz_fraction,
        seed: a.seed,
        max_attempts_per_bin: a.max_attempts,
    };
    let ds = dataset::build_dataset(&spec, a.workers)?;
    dataset::write_csv(&ds, &a.out)?;
    Ok(format!(
        "wrote {} rows to {}\n{}",
        ds.len(),
        a.out.display(),
        ds.composition_summary()
    ))
}

/// Parameters for a non-grid run: kind defaults, the network seed, then overrides.
pub fn resolve_params(kind: ModelKind, seed: u64, overrides: &[String]) -> Result<ModelParams> {
    let mut pairs: Vec<(&str, &str)> = Vec::new();
    let seed_text = seed.to_string();
    if kind == ModelKind::Mlp {
        pairs.push(("seed", &seed_text));
    }
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::Domain(format!("parameter {o:?} is not key=value")))?;
        pairs.push((k.trim(), v.trim()));
    }
    ModelParams::parse_pairs(kind, pairs)
}

fn display_path(p: &Path) -> String {
    p.display().to_string()
}

pub fn default_scatter_path(report: &Path) -> PathBuf {
    report.with_extension("scatter.csv")
}

pub fn cmd_train(a: &TrainArgs) -> Result<String> {
    let kind: ModelKind = a.model.into();
    let ds = dataset::read_csv(&a.data)?;
    let scatter_path = a.scatter.clone().unwrap_or_else(|| default_scatter_path(&a.report));

    let (cv, grid): (eval::MetricsReport, Option<GridSearchResult>) = if a.grid {
        let g = models::grid_search(&ParamGrid::default_for(kind, a.seed), &ds, a.folds, a.seed, a.workers)?;
        (g.best_report().clone(), Some(g))
    } else {
        let p = resolve_params(kind, a.seed, &a.param)?;
        (eval::cross_validate(&p, &ds, a.folds, a.seed, a.workers)?, None)
    };
    let params = cv.params.clone();
    let x = ds.features();
    let y = ds.labels();
    let model = models::fit(&params, &x, &y)?;
    let fitted: Vec<f64> = model.predict_batch(&x)?.into_iter().map(eval::clamp_unit).collect();
    let train = Metrics::compute(&y, &fitted)?;

    let config = vec![
        kv("command", "train"),
        kv("model", kind),
        kv("data", display_path(&a.data)),
        kv("folds", a.folds),
        kv("seed", a.seed),
        kv("grid", if a.grid { "default" } else { "off" }),
        kv("params", params.describe()),
        kv("out", display_path(&a.out)),
        kv("report", display_path(&a.report)),
        kv("scatter", display_path(&scatter_path)),
    ];

    let mut model_text = header_block(&config);
    model_text.push_str(&model_io::to_text(&model));
    write(&a.out, &model_text)?;

    let mut descriptor = cv.dataset.clone();
    descriptor.path = Some(a.data.clone());
    let mut report = Report::new("entq training report");
    report
        .section("config", config.clone())
        .section("dataset", eval::descriptor_pairs(&descriptor))
        .section("model", [kv("kind", kind), kv("label", kind.label()), kv("params", params.describe())])
        .section(
            "cv",
            [kv("folds", cv.k), kv("seed", cv.seed)]
                .into_iter()
                .chain(cv.pooled.pairs().into_iter().map(|(k, v)| kv(k, v)))
                .chain([kv("mean_fold_rmse", format!("{:?}", cv.mean_fold_rmse()))]),
        );
    let mut fold_header = vec!["fold", "n"];
    fold_header.extend(METRIC_COLUMNS);
    report.table("folds", &fold_header, &eval::fold_rows(&cv));
    report.section("train", train.pairs());
    let mut table_header = vec!["Model"];
    table_header.extend(METRIC_COLUMNS);
    report.table("table", &table_header, &eval::comparison_rows(&[(kind.label(), &cv.pooled)]));
    if let Some(g) = &grid {
        report.table("grid", &GridSearchResult::TABLE_HEADER, &g.table_rows());
    }
    report.write(&a.report)?;

    let (scatter, _) = eval::scatter_csv(&cv.labels, &cv.predictions, &config)?;
    write(&scatter_path, &scatter)?;

    let mut msg = String::new();
    writeln!(msg, "{} {}", kind.label(), params.describe()).unwrap();
    writeln!(
        msg,
        "cv: rmse={:.4} mae={:.4} r={} r2={}",
        cv.pooled.rmse,
        cv.pooled.mae,
        cv.pooled.row()[2],
        cv.pooled.row()[3]
    )
    .unwrap();
    write!(msg, "wrote {}, {}, {}", a.out.display(), a.report.display(), scatter_path.display()).unwrap();
    Ok(msg)
}

pub fn cmd_predict(a: &PredictArgs) -> Result<String> {
    let model = model_io::load_model(&a.model_file)?;
    let table = dataset::read_feature_table(&a.data)?;
    if table.n_features() != model.n_features() {
        return Err(Error::Dimension(format!(
            "{} has {} features but the model expects {}",
            a.data.display(),
            table.n_features(),
            model.n_features()
        )));
    }
    let preds: Vec<f64> = model
        .predict_batch(&table.features)?
        .into_iter()
        .map(eval::clamp_unit)
        .collect();
    let config = vec![
        kv("command", "predict"),
        kv("model_file", display_path(&a.model_file)),
        kv("model", model.kind()),
        kv("params", model.params().describe()),
        kv("data", display_path(&a.data)),
        kv("out", display_path(&a.out)),
    ];
    let mut out = header_block(&config);
    out.push_str("prediction\n");
    for p in &preds {
        writeln!(out, "{p:?}").unwrap();
    }
    let mut msg = format!("wrote {} predictions to {}", preds.len(), a.out.display());
    if let Some(labels) = &table.labels {
        let m = Metrics::compute(labels, &preds)?;
        out.push_str(&header_block(
            &m.pairs().into_iter().map(|(k, v)| kv(k, v)).collect::<Vec<_>>(),
        ));
        write!(
            msg,
            "\nrmse={:.4} mae={:.4} r={} r2={}",
            m.rmse,
            m.mae,
            m.row()[2],
            m.row()[3]
        )
        .unwrap();
    }
    write(&a.out, &out)?;
    Ok(msg)
}

pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
    }
}

/// Parse, run and print; returns the process exit code (2 for usage errors).
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(msg) => {
            println!("{msg}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> std::result::Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("entq").chain(args.iter().copied()))
    }

    #[test]
    fn usage_errors() {
        let e = parse(&["generate", "--qubits", "4", "--out", "x.csv"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = parse(&["train", "--model", "svm", "--data", "d", "--out", "m", "--report", "r"]).unwrap_err();
        let text = e.to_string();
        assert!(text.contains("tree") && text.contains("lsboost") && text.contains("mlp"), "{text}");
        assert!(parse(&["train", "--model", "tree", "--data", "d", "--out", "m", "--report", "r", "--grid", "--param", "max_depth=3"]).is_err());
    }

    #[test]
    fn params_resolution() {
        let p = resolve_params(ModelKind::Mlp, 9, &["epochs=3".into()]).unwrap();
        match p {
            ModelParams::Mlp(m) => assert_eq!((m.seed, m.epochs), (9, 3)),
            _ => unreachable!(),
        }
        assert!(resolve_params(ModelKind::Tree, 0, &["depth".into()]).is_err());
        assert!(resolve_params(ModelKind::Tree, 0, &["learning_rate=0.1".into()]).is_err());
    }

    #[test]
    fn generate_train_predict() {
        let dir = tempfile::tempdir().unwrap();
        let p = |n: &str| dir.path().join(n).display().to_string();
        let run_args = |args: &[&str]| run(&parse(args).unwrap());
        run_args(&["generate", "--qubits", "2", "--separable", "20", "--per-bin", "6", "--seed", "3", "--out", &p("d.csv")]).unwrap();
        run_args(&[
            "train", "--model", "tree", "--data", &p("d.csv"), "--folds", "3", "--out", &p("m.model"), "--report", &p("r.txt"),
        ])
        .unwrap();
        let report = fs::read_to_string(p("r.txt")).unwrap();
        for key in ["rmse = ", "mae = ", "r = ", "r2 = ", "[train]", "[table]"] {
            assert!(report.contains(key), "{key}");
        }
        assert!(Path::new(&p("r.scatter.csv")).exists());
        let msg = run_args(&["predict", "--model-file", &p("m.model"), "--data", &p("d.csv"), "--out", &p("pred.csv")]).unwrap();
        assert!(msg.contains("rmse="));
        // The replayed metrics equal the report's train section.
        let train: Vec<&str> = report.split("[train]\n").nth(1).unwrap().lines().take(5).collect();
        let preds = fs::read_to_string(p("pred.csv")).unwrap();
        for line in train {
            let (k, v) = line.split_once(" = ").unwrap();
            assert!(preds.contains(&format!("# {k}={v}\n")), "{line}");
        }
    }
}
