use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use clap::Args;
use swreg::experiments::{
    self, accuracy, knn_classify, pairwise_matrix, sample_gaussian_mixture, CloudTemplate, GaussianMixtureSpec,
    Scorer, SweepPlan,
};
use swreg::measures::{
    format_pair_values, format_pairs, load_dataset, measures_in, read_pair_values, read_pairs, sample_pairs,
    write_dataset, DiscreteMeasure, MeasureDataset, PairIndex, PairMode,
};
use swreg::regression::{build_design, exact_labels, fit};
use swreg::sampling::SeedSpec;
use swreg::sliced::{PredictorConfig, PredictorKind, Preset, DEFAULT_L, DEFAULT_TEMPERATURE};
use swreg::RegressionModel;

use crate::settings::Settings;
use crate::{Cli, CliError, Cmd, Common};

#[derive(Debug, Args)]
pub struct PairsArgs {
    /// Number of measures, when no dataset is given.
    #[arg(long)]
    n: Option<usize>,
    /// Pairs to draw (measures to draw in all-unordered mode).
    #[arg(long)]
    m: Option<usize>,
    /// uniform-random or all-unordered.
    #[arg(long)]
    mode: Option<String>,
    /// Also draw this many evaluation pairs into --test-out.
    #[arg(long = "test-m")]
    test_m: Option<usize>,
    #[arg(long = "test-out")]
    test_out: Option<PathBuf>,
    /// Let evaluation pairs reuse measures of the fitting pairs.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    overlap: Option<bool>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Labels CSV (`i,j,wasserstein`) from `label`; computed when absent.
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predictions CSV (`i,j,prediction`).
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Labels CSV (`i,j,wasserstein`).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Fitting pairs, to report whether evaluation shares measures with them.
    #[arg(long = "train-pairs")]
    train_pairs: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    d: Option<usize>,
    /// Measures to write.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    components: Option<usize>,
    /// Points per mixture component.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long = "mean-scale")]
    mean_scale: Option<f64>,
    #[arg(long = "cov-scale")]
    cov_scale: Option<f64>,
    /// Write a labeled dataset with this many classes; each class jitters
    /// its own mixture template.
    #[arg(long)]
    classes: Option<usize>,
    /// Standard deviation of the per-cloud mean jitter in class mode.
    #[arg(long)]
    jitter: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated dimensions.
    #[arg(long)]
    dims: Option<String>,
    #[arg(long)]
    components: Option<usize>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long = "mean-scale")]
    mean_scale: Option<f64>,
    #[arg(long = "cov-scale")]
    cov_scale: Option<f64>,
    #[arg(long = "fit-pairs")]
    fit_pairs: Option<usize>,
    #[arg(long = "test-pairs")]
    test_pairs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct KnnArgs {
    /// Test dataset manifest; defaults to the training dataset.
    #[arg(long)]
    test: Option<PathBuf>,
    /// exact, model, or a predictor name (SW, EBSW, ...).
    #[arg(long)]
    scorer: Option<String>,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Comma-separated neighbor counts.
    #[arg(long)]
    k: Option<String>,
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    /// Column dataset; defaults to --dataset.
    #[arg(long = "dataset-b")]
    dataset_b: Option<PathBuf>,
    #[arg(long)]
    scorer: Option<String>,
    #[arg(long)]
    model: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let c = cli.common;
    let name = match &cli.command {
        Cmd::Pairs(_) => "pairs",
        Cmd::Label => "label",
        Cmd::Fit(_) => "fit",
        Cmd::Predict(_) => "predict",
        Cmd::Eval(_) => "eval",
        Cmd::Simulate(_) => "simulate",
        Cmd::Sweep(_) => "sweep",
        Cmd::Knn(_) => "knn",
        Cmd::Matrix(_) => "matrix",
    };
    let mut s = Settings::new(name, c.config.as_deref())?;
    let threads = s.opt("threads", c.threads)?;
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    match cli.command {
        Cmd::Pairs(a) => pairs(&mut s, &c, a),
        Cmd::Label => label(&mut s, &c),
        Cmd::Fit(a) => fit_cmd(&mut s, &c, a),
        Cmd::Predict(a) => predict(&mut s, &c, a),
        Cmd::Eval(a) => eval(&mut s, &c, a),
        Cmd::Simulate(a) => simulate(&mut s, &c, a),
        Cmd::Sweep(a) => sweep(&mut s, &c, a),
        Cmd::Knn(a) => knn(&mut s, &c, a),
        Cmd::Matrix(a) => matrix(&mut s, &c, a),
    }
}

fn dataset(s: &mut Settings, c: &Common) -> Result<MeasureDataset, CliError> {
    let path = s.path("dataset", c.dataset.clone())?;
    Ok(load_dataset(&path)?)
}

fn pair_file(s: &mut Settings, c: &Common) -> Result<Vec<PairIndex>, CliError> {
    let path = s.path("pairs", c.pairs.clone())?;
    Ok(read_pairs(&path)?)
}

fn seed(s: &mut Settings, c: &Common) -> Result<u64, CliError> {
    s.or("seed", c.seed, 0)
}

fn order(s: &mut Settings, c: &Common) -> Result<f64, CliError> {
    s.or("p", c.p, 2.0)
}

/// Parses a named setting; failures are usage errors.
fn choice<T: std::str::FromStr<Err = swreg::Error>>(key: &str, raw: &str) -> Result<T, CliError> {
    raw.parse().map_err(|e: swreg::Error| CliError::Usage(format!("--{key}: {e}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, raw: &str) -> Result<Vec<T>, CliError> {
    raw.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("--{key}: bad list entry '{x}'")))
        })
        .collect()
}

/// Predictor configs of `kinds` with the L/T/temperature overrides applied.
fn predictor_configs(s: &mut Settings, c: &Common, kinds: &[PredictorKind], p: f64) -> Result<Vec<PredictorConfig>, CliError> {
    let l = s.opt("L", c.l)?;
    let t = s.opt("T", c.t)?;
    let temperature = s.or("temperature", c.temperature, DEFAULT_TEMPERATURE)?;
    kinds
        .iter()
        .map(|&k| {
            let mut cfg = PredictorConfig::new(k, p);
            // the restart count of Max-SW has its own default
            if let Some(l) = l.filter(|_| cfg.l == DEFAULT_L) {
                cfg = cfg.with_l(l);
            }
            if let Some(t) = t.filter(|_| !k.is_monte_carlo()) {
                cfg = cfg.with_t(t);
            }
            if matches!(k, PredictorKind::Ebsw | PredictorKind::Est) {
                cfg = cfg.with_temperature(temperature);
            }
            cfg.validate()?;
            Ok(cfg)
        })
        .collect()
}

fn share(s: &mut Settings, c: &Common) -> Result<bool, CliError> {
    s.or("share-directions", c.share_directions, true)
}

fn pairs(s: &mut Settings, c: &Common, a: PairsArgs) -> Result<(), CliError> {
    let n = match s.opt_path("dataset", c.dataset.clone())? {
        Some(path) => load_dataset(&path)?.len(),
        None => s.required("n", a.n)?,
    };
    let m = s.required("m", a.m)?;
    let mode: PairMode = choice("mode", &s.or("mode", a.mode, "uniform-random".to_string())?)?;
    let seed = seed(s, c)?;
    let out = s.path("out", c.out.clone())?;
    let train = sample_pairs(n, m, &SeedSpec::new(seed, 0), mode)?;
    s.write_csv(&out, seed, &format_pairs(&train))?;

    let test_m = s.opt("test-m", a.test_m)?;
    let test_out = s.opt_path("test-out", a.test_out)?;
    match (test_m, test_out) {
        (Some(k), Some(path)) => {
            let overlap = s.or("overlap", a.overlap, false)?;
            let test = evaluation_pairs(n, &train, k, overlap, &SeedSpec::new(seed, 1))?;
            s.write_csv(&path, seed, &format_pairs(&test))?;
            println!(
                "{} fitting pairs, {} evaluation pairs ({})",
                train.len(),
                test.len(),
                if overlap { "overlapping" } else { "disjoint" }
            );
        }
        (None, None) => println!("{} pairs", train.len()),
        _ => return Err(CliError::Usage("--test-m and --test-out go together".into())),
    }
    Ok(())
}

/// Evaluation pairs distinct from `train`. Disjoint mode only uses
/// measures that no fitting pair touches.
fn evaluation_pairs(n: usize, train: &[PairIndex], k: usize, overlap: bool, seed: &SeedSpec) -> Result<Vec<PairIndex>, CliError> {
    if overlap {
        let taken: HashSet<PairIndex> = train.iter().copied().collect();
        let drawn = sample_pairs(n, k + taken.len(), seed, PairMode::UniformRandom)?;
        Ok(drawn.into_iter().filter(|p| !taken.contains(p)).take(k).collect())
    } else {
        let used = measures_in(train);
        let free: Vec<usize> = (0..n).filter(|i| !used.contains(i)).collect();
        let drawn = sample_pairs(free.len(), k, seed, PairMode::UniformRandom)?;
        Ok(drawn.iter().map(|p| PairIndex::new(free[p.i], free[p.j])).collect())
    }
}

fn label(s: &mut Settings, c: &Common) -> Result<(), CliError> {
    let ds = dataset(s, c)?;
    let pairs = pair_file(s, c)?;
    let p = order(s, c)?;
    let out = s.path("out", c.out.clone())?;
    let labels = exact_labels(&ds, &pairs, p)?;
    s.write_csv(&out, 0, &format_pair_values(&pairs, &labels, "wasserstein"))?;
    println!("labeled {} pairs", pairs.len());
    Ok(())
}

/// Label values aligned with `pairs`, joined on `(i, j)`.
fn aligned_labels(path: &Path, pairs: &[PairIndex]) -> Result<Vec<f64>, CliError> {
    let table: HashMap<PairIndex, f64> = read_pair_values(path, "wasserstein")?.into_iter().collect();
    pairs
        .iter()
        .map(|p| {
            table
                .get(p)
                .copied()
                .ok_or_else(|| CliError::Data(format!("{}: no label for pair ({}, {})", path.display(), p.i, p.j)))
        })
        .collect()
}

fn fit_cmd(s: &mut Settings, c: &Common, a: FitArgs) -> Result<(), CliError> {
    let ds = dataset(s, c)?;
    let pairs = pair_file(s, c)?;
    let preset: Preset = choice("preset", &s.or("preset", c.preset.clone(), "rg-s".to_string())?)?;
    let constrained = s.or("constrained", c.constrained, false)?;
    let p = order(s, c)?;
    let seed = seed(s, c)?;
    let share = share(s, c)?;
    let configs = predictor_configs(s, c, preset.kinds(), p)?;
    let labels = match s.opt_path("labels", a.labels)? {
        Some(path) => Some(aligned_labels(&path, &pairs)?),
        None => None,
    };
    let out = s.path("out", c.out.clone())?;
    let design = build_design(&ds, &pairs, &configs, seed, share, labels.as_deref())?;
    let model = fit(&design, constrained)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    }
    model.save(&out)?;
    s.write_manifest(&crate::settings::manifest_path(&out))?;

    let r = &model.fit_report;
    let weights: Vec<String> = model.weights.iter().map(|w| format!("{w:.6}")).collect();
    println!(
        "{} {}: weights [{}], training rmse {:.6}, r2 {}",
        preset.name(),
        if constrained { "constrained" } else { "unconstrained" },
        weights.join(", "),
        r.rmse,
        r.r2.map_or_else(|| "undefined".to_string(), |v| format!("{v:.6}"))
    );
    if r.degenerate {
        println!("degenerate fit: lower and upper bounds coincide");
    }
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn load_model(s: &mut Settings, flag: Option<PathBuf>) -> Result<RegressionModel, CliError> {
    let path = s.path("model", flag)?;
    Ok(RegressionModel::load(&path)?)
}

fn predict(s: &mut Settings, c: &Common, a: PredictArgs) -> Result<(), CliError> {
    let model = load_model(s, a.model)?;
    let ds = dataset(s, c)?;
    let pairs = pair_file(s, c)?;
    let out = s.path("out", c.out.clone())?;
    let pred = model.predict_pairs(&ds, &pairs)?;
    s.write_csv(&out, model.seed, &format_pair_values(&pairs, &pred, "prediction"))?;
    println!("predicted {} pairs", pairs.len());
    Ok(())
}

fn eval(s: &mut Settings, c: &Common, a: EvalArgs) -> Result<(), CliError> {
    let pred_path = s.path("predictions", a.predictions)?;
    let label_path = s.path("labels", a.labels)?;
    let preds = read_pair_values(&pred_path, "prediction")?;
    let labels: BTreeMap<PairIndex, f64> = read_pair_values(&label_path, "wasserstein")?.into_iter().collect();
    let mut joined: Vec<(PairIndex, f64, f64)> = preds
        .iter()
        .filter_map(|(p, v)| labels.get(p).map(|w| (*p, *v, *w)))
        .collect();
    if joined.is_empty() {
        return Err(CliError::Data("prediction and label files share no pairs".into()));
    }
    joined.sort_by_key(|x| x.0);
    let skipped = preds.len() - joined.len();
    let predicted: Vec<f64> = joined.iter().map(|x| x.1).collect();
    let actual: Vec<f64> = joined.iter().map(|x| x.2).collect();
    let report = experiments::metrics(&predicted, &actual)?;

    let evaluation = match s.opt_path("train-pairs", a.train_pairs)? {
        Some(path) => {
            let train = read_pairs(&path)?;
            let used = measures_in(&train);
            let shared = measures_in(&joined.iter().map(|x| x.0).collect::<Vec<_>>())
                .intersection(&used)
                .count();
            if shared == 0 {
                "disjoint".to_string()
            } else {
                format!("overlapping ({shared} shared measures)")
            }
        }
        None => "unspecified".to_string(),
    };
    let r2 = report.r2.map_or_else(|| "undefined".to_string(), |v| format!("{v:?}"));
    let body = format!(
        "n_pairs,r2,mse,mae,evaluation\n{},{r2},{:?},{:?},{evaluation}\n",
        report.n_pairs, report.mse, report.mae
    );
    let seed = seed(s, c)?;
    if let Some(out) = s.opt_path("out", c.out.clone())? {
        s.write_csv(&out, seed, &body)?;
    }
    println!(
        "pairs {}  r2 {r2}  mse {:.6}  mae {:.6}  evaluation {evaluation}",
        report.n_pairs, report.mse, report.mae
    );
    if report.r2.is_none() {
        println!("r2 undefined: the labels are constant");
    }
    if skipped > 0 {
        eprintln!("warning: {skipped} predicted pairs have no label and were skipped");
    }
    Ok(())
}

fn mixture_template(
    s: &mut Settings,
    d: usize,
    components: Option<usize>,
    points: Option<usize>,
    mean_scale: Option<f64>,
    cov_scale: Option<f64>,
) -> Result<GaussianMixtureSpec, CliError> {
    let base = GaussianMixtureSpec::new(d, SeedSpec::new(0, 0));
    let spec = GaussianMixtureSpec {
        components: s.or("components", components, base.components)?,
        points_per_component: s.or("points", points, base.points_per_component)?,
        mean_scale: s.or("mean-scale", mean_scale, base.mean_scale)?,
        cov_scale: s.or("cov-scale", cov_scale, base.cov_scale)?,
        ..base
    };
    spec.validate()?;
    Ok(spec)
}

fn simulate(s: &mut Settings, c: &Common, a: SimulateArgs) -> Result<(), CliError> {
    use rayon::prelude::*;
    let d = s.or("d", a.d, 2)?;
    let count = s.required("count", a.count)?;
    let spec = mixture_template(s, d, a.components, a.points, a.mean_scale, a.cov_scale)?;
    let classes = s.opt("classes", a.classes)?;
    let seed = seed(s, c)?;
    let out = s.path("out", c.out.clone())?;
    let dataset = match classes {
        None => {
            let ms = (0..count as u64)
                .into_par_iter()
                .map(|k| sample_gaussian_mixture(&GaussianMixtureSpec { seed: SeedSpec::new(seed, k), ..spec }))
                .collect::<Result<Vec<_>, _>>()?;
            MeasureDataset::new(ms, None)?
        }
        Some(0) => return Err(CliError::Usage("--classes must be positive".into())),
        Some(nc) => {
            let jitter = s.or("jitter", a.jitter, 1.0)?;
            let templates: Vec<CloudTemplate> = (0..nc as u64)
                .map(|k| {
                    let anchor = sample_gaussian_mixture(&GaussianMixtureSpec {
                        points_per_component: 1,
                        cov_scale: 0.0,
                        seed: SeedSpec::new(seed, k).child(1),
                        ..spec
                    })?;
                    Ok(CloudTemplate {
                        means: anchor.points().map(<[f64]>::to_vec).collect(),
                        points_per_component: spec.points_per_component,
                        cov_scale: spec.cov_scale,
                        jitter,
                    })
                })
                .collect::<Result<_, swreg::Error>>()?;
            let ms: Vec<DiscreteMeasure> = (0..count)
                .into_par_iter()
                .map(|k| templates[k % nc].sample(&SeedSpec::new(seed, k as u64).child(2)))
                .collect::<Result<_, _>>()?;
            let labels = (0..count).map(|k| format!("class{}", k % nc)).collect();
            MeasureDataset::new(ms, Some(labels))?
        }
    };
    let manifest = write_dataset(&out, &dataset)?;
    s.write_manifest(&out.join("run.manifest"))?;
    println!("wrote {} measures to {}", dataset.len(), manifest.display());
    Ok(())
}

fn sweep(s: &mut Settings, c: &Common, a: SweepArgs) -> Result<(), CliError> {
    let dims: Vec<usize> = parse_list("dims", &s.or("dims", a.dims, "1,2,5,10,20,50,100".to_string())?)?;
    let preset: Preset = choice("preset", &s.or("preset", c.preset.clone(), "rg-s".to_string())?)?;
    let template = mixture_template(s, 1, a.components, a.points, a.mean_scale, a.cov_scale)?;
    let plan = SweepPlan {
        fit_pairs: s.or("fit-pairs", a.fit_pairs, 60)?,
        test_pairs: s.or("test-pairs", a.test_pairs, 60)?,
        p: order(s, c)?,
    };
    let seed = seed(s, c)?;
    let out = s.path("out", c.out.clone())?;
    let rows = experiments::dimension_sweep(&dims, &template, preset, &plan, seed)?;
    s.write_csv(&out, seed, &experiments::format_sweep(&rows))?;
    for r in &rows {
        let r2 = r.r2.map_or_else(|| "undefined".to_string(), |v| format!("{v:.4}"));
        let flag = if r.degenerate { " (degenerate)" } else { "" };
        println!("d={:<4} omega={:.4} r2={r2}{flag}", r.d, r.omega);
    }
    Ok(())
}

enum ScorerChoice {
    Exact(f64),
    Model(RegressionModel),
    Single(PredictorConfig, bool),
}

impl ScorerChoice {
    fn scorer(&self) -> Scorer<'_> {
        match self {
            ScorerChoice::Exact(p) => Scorer::Exact { p: *p },
            ScorerChoice::Model(m) => Scorer::Model(m),
            ScorerChoice::Single(cfg, share) => Scorer::Single {
                config: cfg,
                share_directions: *share,
            },
        }
    }
}

fn scorer_choice(s: &mut Settings, c: &Common, raw: Option<String>, model: Option<PathBuf>) -> Result<ScorerChoice, CliError> {
    let name = s.or("scorer", raw, "exact".to_string())?;
    match name.as_str() {
        "exact" => Ok(ScorerChoice::Exact(order(s, c)?)),
        "model" => Ok(ScorerChoice::Model(load_model(s, model)?)),
        other => {
            let kind: PredictorKind = other
                .parse()
                .map_err(|_| CliError::Usage(format!("unknown scorer '{other}'")))?;
            let p = order(s, c)?;
            let cfg = predictor_configs(s, c, &[kind], p)?.remove(0);
            Ok(ScorerChoice::Single(cfg, share(s, c)?))
        }
    }
}

fn class_ids(ds: &MeasureDataset, what: &str, names: &mut Vec<String>) -> Result<Vec<usize>, CliError> {
    let labels = ds
        .labels()
        .ok_or_else(|| CliError::Data(format!("{what} dataset has no labels")))?;
    Ok(labels
        .iter()
        .map(|l| match names.iter().position(|n| n == l) {
            Some(i) => i,
            None => {
                names.push(l.clone());
                names.len() - 1
            }
        })
        .collect())
}

fn knn(s: &mut Settings, c: &Common, a: KnnArgs) -> Result<(), CliError> {
    let train = dataset(s, c)?;
    let test = match s.opt_path("test", a.test)? {
        Some(path) => load_dataset(&path)?,
        None => train.clone(),
    };
    let ks: Vec<usize> = parse_list("k", &s.or("k", a.k, "1,3,5,10,15".to_string())?)?;
    let choice = scorer_choice(s, c, a.scorer, a.model)?;
    let seed = seed(s, c)?;
    let out = s.path("out", c.out.clone())?;

    // class ids follow sorted label names so they do not depend on file order
    let mut names: Vec<String> = train.labels().map(<[String]>::to_vec).unwrap_or_default();
    names.sort();
    names.dedup();
    let ytrain = class_ids(&train, "training", &mut names)?;
    let ytest = class_ids(&test, "test", &mut names)?;

    let dist = pairwise_matrix(test.measures(), train.measures(), choice.scorer(), seed)?;
    let mut body = String::from("k,accuracy\n");
    for k in ks {
        let acc = accuracy(&knn_classify(&dist, &ytrain, k)?, &ytest);
        body.push_str(&format!("{k},{acc:?}\n"));
        println!("k={k:<3} accuracy {:.2}%", 100.0 * acc);
    }
    s.write_csv(&out, seed, &body)
}

fn matrix(s: &mut Settings, c: &Common, a: MatrixArgs) -> Result<(), CliError> {
    let rows = dataset(s, c)?;
    let cols = match s.opt_path("dataset-b", a.dataset_b)? {
        Some(path) => Some(load_dataset(&path)?),
        None => None,
    };
    let choice = scorer_choice(s, c, a.scorer, a.model)?;
    let seed = seed(s, c)?;
    let out = s.path("out", c.out.clone())?;
    let b = cols.as_ref().map_or(rows.measures(), MeasureDataset::measures);
    let m = pairwise_matrix(rows.measures(), b, choice.scorer(), seed)?;
    let mut body = String::new();
    for row in &m {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        body.push_str(&cells.join(","));
        body.push('\n');
    }
    s.write_csv(&out, seed, &body)?;
    println!("{}x{} matrix", m.len(), b.len());
    Ok(())
}
