//! Linear regression of exact Wasserstein distances on sliced features.
//!
//! Two model families:
//!
//! - **unconstrained**: `W ≈ Σ_k ω_k S^(k)`, fitted by least squares (SVD,
//!   minimum-norm when the design is rank deficient);
//! - **constrained**: every upper bound `SU^(k)` is paired with a lower
//!   bound `SL^(k)` and `W ≈ (1/K) Σ_k [ω_k SL^(k) + (1 − ω_k) SU^(k)]` with
//!   `ω ∈ [0,1]^K`. For one pair the optimum has a closed form; otherwise a
//!   projected gradient method solves the box-constrained quadratic.
//!
//! Neither model has an intercept, so identical measures (all features
//! zero) are always predicted at distance zero.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::exact_wasserstein;
use crate::experiments::metrics;
use crate::measures::{MeasureDataset, PairIndex};
use crate::sampling::SeedSpec;
use crate::sliced::{bound_pairing, evaluate_features, FeatureVector, PredictorConfig, PredictorKind};

pub const MODEL_FORMAT: &str = "swreg-model";
pub const MODEL_VERSION: u32 = 1;

const PGD_MAX_ITER: usize = 10_000;
const PGD_TOL: f64 = 1e-12;

/// Stacked features `Ŝ` (M × K) and exact distances `Ŵ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub pair_ids: Vec<PairIndex>,
    /// Predictors behind the columns; empty for synthetic designs.
    pub configs: Vec<PredictorConfig>,
    pub master_seed: u64,
    pub share_directions: bool,
}

impl DesignMatrix {
    /// Synthetic design with no predictor metadata.
    pub fn from_rows(features: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        let pair_ids = (0..targets.len()).map(|k| PairIndex::new(k, k)).collect();
        let d = Self {
            features,
            targets,
            pair_ids,
            configs: Vec::new(),
            master_seed: 0,
            share_directions: true,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn rows(&self) -> usize {
        self.targets.len()
    }

    pub fn cols(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let (m, k) = (self.rows(), self.cols());
        if m == 0 || k == 0 {
            return Err(Error::InvalidArgument("design matrix is empty".into()));
        }
        if self.features.len() != m || self.pair_ids.len() != m {
            return Err(Error::InvalidArgument("design rows disagree in count".into()));
        }
        if self.features.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidArgument("ragged design matrix".into()));
        }
        if !self.configs.is_empty() && self.configs.len() != k {
            return Err(Error::InvalidArgument(format!(
                "{} configs for {k} columns",
                self.configs.len()
            )));
        }
        if self.features.iter().flatten().chain(&self.targets).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("design contains non-finite values".into()));
        }
        if self.targets.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidArgument("negative Wasserstein label".into()));
        }
        Ok(())
    }

    /// Sum of squared residuals of `predict` over the rows.
    pub fn loss(&self, predict: impl Fn(&[f64]) -> f64) -> f64 {
        self.features
            .iter()
            .zip(&self.targets)
            .map(|(s, w)| (predict(s) - w).powi(2))
            .sum()
    }
}

/// Per-pair feature evaluation with the pair's own seed stream. Runs in
/// parallel; results do not depend on the schedule.
pub fn pair_features(
    dataset: &MeasureDataset,
    pairs: &[PairIndex],
    configs: &[PredictorConfig],
    master_seed: u64,
    share_directions: bool,
) -> Result<Vec<FeatureVector>> {
    dataset.check_pairs(pairs)?;
    pairs
        .par_iter()
        .map(|pair| {
            let seed = SeedSpec::new(master_seed, pair.stream());
            evaluate_features(
                &dataset.measures()[pair.i],
                &dataset.measures()[pair.j],
                configs,
                &seed,
                share_directions,
            )
        })
        .collect()
}

/// Exact `W_p` for every pair, in parallel.
pub fn exact_labels(dataset: &MeasureDataset, pairs: &[PairIndex], p: f64) -> Result<Vec<f64>> {
    dataset.check_pairs(pairs)?;
    pairs
        .par_iter()
        .map(|pair| {
            let r = exact_wasserstein(&dataset.measures()[pair.i], &dataset.measures()[pair.j], p)?;
            Ok(r.distance(p))
        })
        .collect()
}

/// Features and exact labels for `pairs`. Precomputed `labels` (aligned
/// with `pairs`) skip the exact solver.
pub fn build_design(
    dataset: &MeasureDataset,
    pairs: &[PairIndex],
    configs: &[PredictorConfig],
    master_seed: u64,
    share_directions: bool,
    labels: Option<&[f64]>,
) -> Result<DesignMatrix> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("no pairs to fit on".into()));
    }
    let p = configs
        .first()
        .ok_or_else(|| Error::InvalidArgument("no predictors configured".into()))?
        .p;
    let features = pair_features(dataset, pairs, configs, master_seed, share_directions)?;
    let targets = match labels {
        Some(l) if l.len() == pairs.len() => l.to_vec(),
        Some(l) => {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} pairs",
                l.len(),
                pairs.len()
            )))
        }
        None => exact_labels(dataset, pairs, p)?,
    };
    let design = DesignMatrix {
        features: features.into_iter().map(|f| f.values).collect(),
        targets,
        pair_ids: pairs.to_vec(),
        configs: configs.to_vec(),
        master_seed,
        share_directions,
    };
    design.validate()?;
    Ok(design)
}

/// Training-set diagnostics stored with a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub rmse: f64,
    pub mae: f64,
    /// `None` when the training labels are constant.
    pub r2: Option<f64>,
    pub rank: usize,
    pub rank_deficient: bool,
    pub degenerate: bool,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

/// A fitted, deployable model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub weights: Vec<f64>,
    pub configs: Vec<PredictorConfig>,
    pub constrained: bool,
    pub lower_idx: Vec<usize>,
    pub upper_idx: Vec<usize>,
    pub p: f64,
    pub share_directions: bool,
    pub seed: u64,
    #[serde(rename = "M")]
    pub m: usize,
    pub fit_report: FitReport,
}

impl RegressionModel {
    /// Prediction from raw feature values, clamped at zero.
    pub fn predict_values(&self, s: &[f64]) -> f64 {
        let raw = if self.constrained {
            constrained_value(&self.weights, &self.lower_idx, &self.upper_idx, s)
        } else {
            self.weights.iter().zip(s).map(|(w, x)| w * x).sum()
        };
        raw.max(0.0)
    }

    /// Prediction for features evaluated with this model's configs.
    pub fn predict(&self, features: &FeatureVector) -> Result<f64> {
        if features.configs != self.configs {
            return Err(Error::ConfigMismatch(format!(
                "model uses [{}], features use [{}]",
                kinds(&self.configs),
                kinds(&features.configs)
            )));
        }
        Ok(self.predict_values(&features.values))
    }

    /// Evaluates features for `pairs` and predicts them.
    pub fn predict_pairs(&self, dataset: &MeasureDataset, pairs: &[PairIndex]) -> Result<Vec<f64>> {
        let feats = pair_features(dataset, pairs, &self.configs, self.seed, self.share_directions)?;
        feats.iter().map(|f| self.predict(f)).collect()
    }

    fn validate(&self) -> Result<()> {
        let k = self.configs.len();
        if self.constrained {
            if self.lower_idx.len() != self.upper_idx.len()
                || self.weights.len() != self.lower_idx.len()
                || self.lower_idx.iter().chain(&self.upper_idx).any(|&i| i >= k)
            {
                return Err(Error::InvalidArgument("inconsistent constrained pairing".into()));
            }
            if self.weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
                return Err(Error::InvalidArgument("constrained weight outside [0,1]".into()));
            }
        } else if self.weights.len() != k {
            return Err(Error::InvalidArgument(format!(
                "{} weights for {k} predictors",
                self.weights.len()
            )));
        }
        if self.configs.iter().any(|c| c.p != self.p) {
            return Err(Error::InvalidArgument("config order differs from model order".into()));
        }
        Ok(())
    }

    /// Writes the model as a versioned JSON document.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut doc = serde_json::to_value(self).map_err(|e| Error::parse(path, e.to_string()))?;
        let obj = doc.as_object_mut().expect("model serializes to an object");
        obj.insert("format".into(), MODEL_FORMAT.into());
        obj.insert("version".into(), MODEL_VERSION.into());
        let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::parse(path, e.to_string()))?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Parse { msg, .. } => Error::parse(path, msg),
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let here = Path::new("<model>");
        let doc: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::parse(here, e.to_string()))?;
        if doc.get("format").and_then(|v| v.as_str()) != Some(MODEL_FORMAT) {
            return Err(Error::Version("not a swreg model file".into()));
        }
        match doc.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(MODEL_VERSION) => {}
            other => {
                return Err(Error::Version(format!(
                    "model version {other:?}, this build reads {MODEL_VERSION}"
                )))
            }
        }
        if let Some(cfgs) = doc.get("configs").and_then(|v| v.as_array()) {
            for c in cfgs {
                let kind = c.get("kind").and_then(|k| k.as_str()).unwrap_or("");
                if kind.parse::<PredictorKind>().is_err() {
                    return Err(Error::Version(format!("unknown predictor kind '{kind}'")));
                }
            }
        }
        let model: RegressionModel =
            serde_json::from_value(doc).map_err(|e| Error::parse(here, e.to_string()))?;
        model.validate()?;
        Ok(model)
    }
}

fn kinds(configs: &[PredictorConfig]) -> String {
    configs.iter().map(|c| c.kind.name()).collect::<Vec<_>>().join(",")
}

fn constrained_value(weights: &[f64], lower: &[usize], upper: &[usize], s: &[f64]) -> f64 {
    let k = weights.len() as f64;
    weights
        .iter()
        .zip(lower.iter().zip(upper))
        .map(|(w, (&l, &u))| w * s[l] + (1.0 - w) * s[u])
        .sum::<f64>()
        / k
}

fn report(design: &DesignMatrix, model: &RegressionModel, rank: usize, degenerate: bool, iterations: usize, warnings: Vec<String>) -> FitReport {
    let pred: Vec<f64> = design.features.iter().map(|s| model.predict_values(s)).collect();
    let (rmse, mae, r2) = match metrics(&pred, &design.targets) {
        Ok(m) => (m.mse.sqrt(), m.mae, m.r2),
        Err(_) => {
            // single row: metrics needs two, report the residual directly
            let e = (pred[0] - design.targets[0]).abs();
            (e, e, None)
        }
    };
    FitReport {
        rmse,
        mae,
        r2,
        rank,
        rank_deficient: rank < design.cols(),
        degenerate,
        iterations,
        warnings,
    }
}

fn shell(design: &DesignMatrix, weights: Vec<f64>, constrained: bool, lower: Vec<usize>, upper: Vec<usize>) -> RegressionModel {
    RegressionModel {
        weights,
        configs: design.configs.clone(),
        constrained,
        lower_idx: lower,
        upper_idx: upper,
        p: design.configs.first().map_or(2.0, |c| c.p),
        share_directions: design.share_directions,
        seed: design.master_seed,
        m: design.rows(),
        fit_report: FitReport {
            rmse: 0.0,
            mae: 0.0,
            r2: None,
            rank: 0,
            rank_deficient: false,
            degenerate: false,
            iterations: 0,
            warnings: Vec::new(),
        },
    }
}

/// Least-squares `ω̂ = argmin ‖Ŝω − Ŵ‖²` via SVD. Rank-deficient designs
/// get the minimum-norm solution and a flag in the report.
pub fn fit_unconstrained(design: &DesignMatrix) -> Result<RegressionModel> {
    design.validate()?;
    let (m, k) = (design.rows(), design.cols());
    let s = DMatrix::from_fn(m, k, |i, j| design.features[i][j]);
    let w = DVector::from_column_slice(&design.targets);
    let svd = s.svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
    let tol = m.max(k) as f64 * f64::EPSILON * smax;
    let rank = svd.singular_values.iter().filter(|&&x| x > tol).count();
    let weights = if rank == 0 {
        vec![0.0; k]
    } else {
        svd.solve(&w, tol)
            .map_err(|e| Error::Numerical(format!("least squares failed: {e}")))?
            .iter()
            .copied()
            .collect()
    };
    let mut warnings = Vec::new();
    if m < k {
        warnings.push(format!("fewer pairs ({m}) than predictors ({k})"));
    }
    if rank < k {
        warnings.push(format!("design has rank {rank} < {k}; minimum-norm solution"));
    }
    let mut model = shell(design, weights, false, Vec::new(), Vec::new());
    model.fit_report = report(design, &model, rank, false, 0, warnings);
    Ok(model)
}

/// Column indices of the single lower/upper pair of a two-column design.
fn k1_columns(design: &DesignMatrix) -> Result<(usize, usize)> {
    if design.cols() != 2 {
        return Err(Error::InvalidArgument(format!(
            "closed-form constrained fit needs 2 columns, got {}",
            design.cols()
        )));
    }
    if design.configs.is_empty() {
        return Ok((0, 1));
    }
    let (l, u) = bound_pairing(&design.configs)?;
    Ok((l[0], u[0]))
}

/// Closed-form constrained fit for one lower/upper pair:
/// `ω̂ = Σ(SU−SL)(SU−W) / Σ(SU−SL)²`, projected onto `[0,1]`.
pub fn fit_constrained_k1(design: &DesignMatrix) -> Result<RegressionModel> {
    design.validate()?;
    let (lo, up) = k1_columns(design)?;
    let mut num = 0.0;
    let mut den = 0.0;
    let mut scale = 0.0;
    let mut violations = 0;
    for (s, w) in design.features.iter().zip(&design.targets) {
        let gap = s[up] - s[lo];
        if gap < 0.0 {
            violations += 1;
        }
        num += gap * (s[up] - w);
        den += gap * gap;
        scale += s[up] * s[up];
    }
    let mut warnings = Vec::new();
    if violations > 0 {
        warnings.push(format!("{violations} rows have upper < lower bound"));
    }
    let degenerate = den <= 1e-24 * scale || den == 0.0;
    let omega = if degenerate {
        warnings.push("upper and lower bounds coincide on every pair; weight set to 0.5".into());
        0.5
    } else {
        (num / den).clamp(0.0, 1.0)
    };
    let mut model = shell(design, vec![omega], true, vec![lo], vec![up]);
    model.fit_report = report(design, &model, 1, degenerate, 0, warnings);
    Ok(model)
}

/// Result of the box-constrained quadratic solve.
#[derive(Debug, Clone)]
pub struct BoxQpTrace {
    pub omega: Vec<f64>,
    /// Loss after each iteration, starting with the initial point.
    pub losses: Vec<f64>,
}

/// Minimizes `ωᵀGω − 2hᵀω + c` over `[0,1]^K` by projected gradient
/// descent with step `1/Λ`, `Λ = 2‖G‖_F ≥ 2λ_max(G)`.
pub fn box_qp(g: &DMatrix<f64>, h: &DVector<f64>, c: f64) -> BoxQpTrace {
    let k = h.len();
    let loss = |w: &DVector<f64>| (w.transpose() * g * w)[(0, 0)] - 2.0 * h.dot(w) + c;
    let lambda = 2.0 * g.norm();
    let mut omega = DVector::from_element(k, 0.5);
    let mut current = loss(&omega);
    let mut losses = vec![current];
    if lambda == 0.0 {
        return BoxQpTrace {
            omega: omega.iter().copied().collect(),
            losses,
        };
    }
    let scale = current.abs().max(f64::MIN_POSITIVE);
    for _ in 0..PGD_MAX_ITER {
        let grad = 2.0 * (g * &omega - h);
        let next = (&omega - grad / lambda).map(|x| x.clamp(0.0, 1.0));
        let next_loss = loss(&next);
        let moved = (&next - &omega).amax();
        // rounding can make a converged step look like a tiny increase
        if next_loss > current {
            break;
        }
        let improvement = current - next_loss;
        omega = next;
        current = next_loss;
        losses.push(current);
        if improvement < PGD_TOL * scale && moved < PGD_TOL {
            break;
        }
    }
    BoxQpTrace {
        omega: omega.iter().copied().collect(),
        losses,
    }
}

/// Constrained fit for `K` lower/upper pairs (`lower_idx[k]` pairs with
/// `upper_idx[k]`).
pub fn fit_constrained_general(design: &DesignMatrix, lower_idx: &[usize], upper_idx: &[usize]) -> Result<RegressionModel> {
    design.validate()?;
    if lower_idx.len() != upper_idx.len() || lower_idx.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "pairing lengths differ: {} lower vs {} upper",
            lower_idx.len(),
            upper_idx.len()
        )));
    }
    let cols = design.cols();
    if lower_idx.iter().chain(upper_idx).any(|&i| i >= cols) {
        return Err(Error::InvalidArgument("pairing index out of range".into()));
    }
    let (g, h, c) = constrained_quadratic(design, lower_idx, upper_idx);
    let trace = box_qp(&g, &h, c);
    let degenerate = g.norm() == 0.0;
    let mut warnings = Vec::new();
    if degenerate {
        warnings.push("upper and lower bounds coincide on every pair".into());
    }
    let iterations = trace.losses.len() - 1;
    let mut model = shell(design, trace.omega, true, lower_idx.to_vec(), upper_idx.to_vec());
    model.fit_report = report(design, &model, lower_idx.len(), degenerate, iterations, warnings);
    Ok(model)
}

/// Gram form of the constrained loss: with `D_ik = (SU−SL)_ik / K` and
/// `y_i = mean_k SU_ik − W_i`, the loss is `‖Dω − y‖²`.
fn constrained_quadratic(design: &DesignMatrix, lower: &[usize], upper: &[usize]) -> (DMatrix<f64>, DVector<f64>, f64) {
    let k = lower.len();
    let kf = k as f64;
    let m = design.rows();
    let d = DMatrix::from_fn(m, k, |i, j| {
        let s = &design.features[i];
        (s[upper[j]] - s[lower[j]]) / kf
    });
    let y = DVector::from_fn(m, |i, _| {
        let s = &design.features[i];
        upper.iter().map(|&u| s[u]).sum::<f64>() / kf - design.targets[i]
    });
    (d.transpose() * &d, d.transpose() * &y, y.dot(&y))
}

/// Fits the model requested by `constrained`, pairing bounds from the
/// design's predictor kinds.
pub fn fit(design: &DesignMatrix, constrained: bool) -> Result<RegressionModel> {
    if !constrained {
        return fit_unconstrained(design);
    }
    let (lower, upper) = if design.configs.is_empty() {
        if design.cols() != 2 {
            return Err(Error::InvalidArgument(
                "synthetic constrained designs must have exactly 2 columns".into(),
            ));
        }
        (vec![0], vec![1])
    } else {
        bound_pairing(&design.configs)?
    };
    if lower.len() == 1 {
        fit_constrained_k1(design)
    } else {
        fit_constrained_general(design, &lower, &upper)
    }
}
