//! Reproducible experiment harnesses: Gaussian-mixture simulation,
//! evaluation metrics, k-NN classification, pairwise distance matrices and
//! the dimension sweep.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::exact_wasserstein;
use crate::measures::{DiscreteMeasure, MeasureDataset, PairIndex};
use crate::regression::{build_design, fit_constrained_k1, DesignMatrix, RegressionModel};
use crate::sampling::{pair_stream, SeedSpec};
use crate::sliced::{evaluate_features, PredictorConfig, PredictorKind, Preset};

pub const DEFAULT_COMPONENTS: usize = 3;
pub const DEFAULT_POINTS_PER_COMPONENT: usize = 200;
pub const DEFAULT_MEAN_SCALE: f64 = 5.0;
pub const DEFAULT_COV_SCALE: f64 = 1.0;

/// Isotropic Gaussian mixture with equal-size components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMixtureSpec {
    pub d: usize,
    pub components: usize,
    pub points_per_component: usize,
    pub mean_scale: f64,
    pub cov_scale: f64,
    pub seed: SeedSpec,
}

impl GaussianMixtureSpec {
    pub fn new(d: usize, seed: SeedSpec) -> Self {
        Self {
            d,
            components: DEFAULT_COMPONENTS,
            points_per_component: DEFAULT_POINTS_PER_COMPONENT,
            mean_scale: DEFAULT_MEAN_SCALE,
            cov_scale: DEFAULT_COV_SCALE,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.components == 0 || self.points_per_component == 0 {
            return Err(Error::InvalidArgument(
                "mixture needs d, components and points per component ≥ 1".into(),
            ));
        }
        if !(self.mean_scale.is_finite() && self.mean_scale >= 0.0) {
            return Err(Error::InvalidArgument(format!("bad mean scale {}", self.mean_scale)));
        }
        if !(self.cov_scale.is_finite() && self.cov_scale >= 0.0) {
            return Err(Error::InvalidArgument(format!("bad covariance scale {}", self.cov_scale)));
        }
        Ok(())
    }
}

/// Means uniform in `[−mean_scale, mean_scale]^d`, points `mean + cov_scale·N(0, I)`.
pub fn sample_gaussian_mixture(spec: &GaussianMixtureSpec) -> Result<DiscreteMeasure> {
    spec.validate()?;
    let mut rng = spec.seed.rng();
    let means: Vec<Vec<f64>> = (0..spec.components)
        .map(|_| {
            (0..spec.d)
                .map(|_| {
                    if spec.mean_scale == 0.0 {
                        0.0
                    } else {
                        rng.random_range(-spec.mean_scale..=spec.mean_scale)
                    }
                })
                .collect()
        })
        .collect();
    sample_around(&means, spec.points_per_component, spec.cov_scale, &mut rng)
}

fn sample_around(
    means: &[Vec<f64>],
    per_component: usize,
    cov_scale: f64,
    rng: &mut crate::sampling::Rng,
) -> Result<DiscreteMeasure> {
    let d = means[0].len();
    let mut supports = Vec::with_capacity(means.len() * per_component * d);
    for m in means {
        for _ in 0..per_component {
            for &c in m {
                let z: f64 = StandardNormal.sample(rng);
                supports.push(c + cov_scale * z);
            }
        }
    }
    DiscreteMeasure::new(supports, d, None)
}

/// Class template for synthetic point-cloud classification: each cloud of
/// the class jitters the template means by `jitter·N(0, I)` and samples
/// around them.
#[derive(Debug, Clone, PartialEq)]
pub struct CloudTemplate {
    pub means: Vec<Vec<f64>>,
    pub points_per_component: usize,
    pub cov_scale: f64,
    pub jitter: f64,
}

impl CloudTemplate {
    pub fn sample(&self, seed: &SeedSpec) -> Result<DiscreteMeasure> {
        let mut rng = seed.rng();
        let means: Vec<Vec<f64>> = self
            .means
            .iter()
            .map(|m| {
                m.iter()
                    .map(|&c| c + self.jitter * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                    .collect()
            })
            .collect();
        sample_around(&means, self.points_per_component, self.cov_scale, &mut rng)
    }
}

/// Labeled synthetic clouds: `per_class` clouds from each template, in
/// class order. Cloud `k` uses stream `k` of `seed`.
pub fn sample_labeled_clouds(
    templates: &[CloudTemplate],
    per_class: usize,
    seed: &SeedSpec,
) -> Result<(Vec<DiscreteMeasure>, Vec<usize>)> {
    let jobs: Vec<(usize, usize)> = (0..templates.len())
        .flat_map(|c| (0..per_class).map(move |r| (c, r)))
        .collect();
    let clouds = jobs
        .par_iter()
        .enumerate()
        .map(|(k, &(c, _))| templates[c].sample(&seed.with_stream(k as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok((clouds, jobs.iter().map(|&(c, _)| c).collect()))
}

/// Agreement between predictions and exact distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    /// `None` when the actual values are constant.
    pub r2: Option<f64>,
    pub mse: f64,
    pub mae: f64,
    pub n_pairs: usize,
}

pub fn metrics(predicted: &[f64], actual: &[f64]) -> Result<MetricReport> {
    if predicted.len() != actual.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions for {} actual values",
            predicted.len(),
            actual.len()
        )));
    }
    if actual.len() < 2 {
        return Err(Error::InvalidArgument("metrics need at least 2 values".into()));
    }
    let n = actual.len() as f64;
    let mean = actual.iter().sum::<f64>() / n;
    let ss_res: f64 = predicted.iter().zip(actual).map(|(p, a)| (p - a).powi(2)).sum();
    let ss_tot: f64 = actual.iter().map(|a| (a - mean).powi(2)).sum();
    let mae = predicted.iter().zip(actual).map(|(p, a)| (p - a).abs()).sum::<f64>() / n;
    Ok(MetricReport {
        r2: (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot),
        mse: ss_res / n,
        mae,
        n_pairs: actual.len(),
    })
}

/// k-NN vote. `distances[t][r]` is the distance from test item `t` to
/// train item `r`. Neighbors at equal distance are taken in train order;
/// classes tied on votes are split by smaller summed distance, then by
/// lower class id.
pub fn knn_classify(distances: &[Vec<f64>], train_labels: &[usize], k: usize) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    if k > train_labels.len() {
        return Err(Error::InvalidArgument(format!(
            "k={k} exceeds the {} training items",
            train_labels.len()
        )));
    }
    let classes = train_labels.iter().max().map_or(0, |m| m + 1);
    distances
        .iter()
        .map(|row| {
            if row.len() != train_labels.len() {
                return Err(Error::InvalidArgument(format!(
                    "distance row has {} entries for {} training items",
                    row.len(),
                    train_labels.len()
                )));
            }
            if row.iter().any(|x| x.is_nan()) {
                return Err(Error::InvalidArgument("NaN distance".into()));
            }
            let mut order: Vec<usize> = (0..row.len()).collect();
            order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
            let mut votes = vec![0usize; classes];
            let mut total = vec![0.0f64; classes];
            for &r in &order[..k] {
                votes[train_labels[r]] += 1;
                total[train_labels[r]] += row[r];
            }
            let best = (0..classes)
                .filter(|&c| votes[c] > 0)
                .min_by(|&a, &b| {
                    votes[b]
                        .cmp(&votes[a])
                        .then(total[a].total_cmp(&total[b]))
                        .then(a.cmp(&b))
                })
                .expect("k ≥ 1 gives at least one vote");
            Ok(best)
        })
        .collect()
}

/// Fraction of matching labels.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len().max(1) as f64
}

/// How a pairwise matrix cell is scored.
#[derive(Debug, Clone, Copy)]
pub enum Scorer<'a> {
    Exact { p: f64 },
    Model(&'a RegressionModel),
    Single { config: &'a PredictorConfig, share_directions: bool },
}

impl Scorer<'_> {
    fn score(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure, seed: &SeedSpec) -> Result<f64> {
        match self {
            Scorer::Exact { p } => Ok(exact_wasserstein(mu, nu, *p)?.distance(*p)),
            Scorer::Model(m) => {
                let f = evaluate_features(mu, nu, &m.configs, seed, m.share_directions)?;
                m.predict(&f)
            }
            Scorer::Single { config, share_directions } => {
                let f = evaluate_features(mu, nu, std::slice::from_ref(*config), seed, *share_directions)?;
                Ok(f.values[0])
            }
        }
    }
}

/// Distances between every measure of `a` (rows) and of `b` (columns).
/// Cell `(i, j)` draws its randomness from stream `(i, j)` of `seed`; when
/// `a` and `b` are the same slice only the upper triangle is computed and
/// mirrored, with a zero diagonal.
pub fn pairwise_matrix(
    a: &[DiscreteMeasure],
    b: &[DiscreteMeasure],
    scorer: Scorer<'_>,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if let Some(x) = a.first().or(b.first()) {
        if let Some(bad) = a.iter().chain(b).find(|m| m.dim() != x.dim()) {
            return Err(Error::DimensionMismatch {
                expected: x.dim(),
                got: bad.dim(),
            });
        }
    }
    let same = std::ptr::eq(a, b);
    let cells: Vec<(usize, usize)> = (0..a.len())
        .flat_map(|i| (0..b.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| !same || i < j)
        .collect();
    let values = cells
        .par_iter()
        .map(|&(i, j)| scorer.score(&a[i], &b[j], &SeedSpec::new(seed, pair_stream(i, j))))
        .collect::<Result<Vec<f64>>>()?;
    let mut out = vec![vec![0.0; b.len()]; a.len()];
    for (&(i, j), v) in cells.iter().zip(values) {
        out[i][j] = v;
        if same {
            out[j][i] = v;
        }
    }
    Ok(out)
}

/// One line of the dimension sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub d: usize,
    pub omega: f64,
    /// Held-out R²; `None` when the held-out distances are constant.
    pub r2: Option<f64>,
    pub degenerate: bool,
}

/// Sizes of the simulated pair sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPlan {
    pub fit_pairs: usize,
    pub test_pairs: usize,
    pub p: f64,
}

/// Fitting and held-out designs for one dimension. Every pair compares two
/// freshly simulated mixtures, so the held-out pairs share no measure with
/// the fitting pairs.
pub fn simulate_designs(
    template: &GaussianMixtureSpec,
    configs: &[PredictorConfig],
    plan: &SweepPlan,
    seed: u64,
) -> Result<(DesignMatrix, DesignMatrix)> {
    if plan.fit_pairs == 0 || plan.test_pairs < 2 {
        return Err(Error::InvalidArgument(
            "sweep needs ≥ 1 fitting pair and ≥ 2 held-out pairs".into(),
        ));
    }
    let base = SeedSpec::new(seed, 0).child(template.d as u64);
    let total = 2 * (plan.fit_pairs + plan.test_pairs);
    let measures = (0..total)
        .into_par_iter()
        .map(|k| {
            let spec = GaussianMixtureSpec {
                seed: base.with_stream(k as u64),
                ..*template
            };
            sample_gaussian_mixture(&spec)
        })
        .collect::<Result<Vec<_>>>()?;
    let dataset = MeasureDataset::new(measures, None)?;
    let pairs: Vec<PairIndex> = (0..total / 2).map(|k| PairIndex::new(2 * k, 2 * k + 1)).collect();
    let (fit, test) = pairs.split_at(plan.fit_pairs);
    let feature_seed = base.child(u64::MAX).master_seed;
    let fit = build_design(&dataset, fit, configs, feature_seed, true, None)?;
    let test = build_design(&dataset, test, configs, feature_seed, true, None)?;
    Ok((fit, test))
}

/// Keeps the columns of `design` whose kinds appear in `kinds`, in that order.
pub fn select_columns(design: &DesignMatrix, kinds: &[PredictorKind]) -> Result<DesignMatrix> {
    let idx = kinds
        .iter()
        .map(|k| {
            design
                .configs
                .iter()
                .position(|c| c.kind == *k)
                .ok_or_else(|| Error::InvalidArgument(format!("design has no {k} column")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DesignMatrix {
        features: design.features.iter().map(|r| idx.iter().map(|&i| r[i]).collect()).collect(),
        targets: design.targets.clone(),
        pair_ids: design.pair_ids.clone(),
        configs: idx.iter().map(|&i| design.configs[i].clone()).collect(),
        master_seed: design.master_seed,
        share_directions: design.share_directions,
    })
}

/// Constrained single-pair fit on `fit`, scored on `test`.
pub fn fit_and_score(fit: &DesignMatrix, test: &DesignMatrix, preset: Preset) -> Result<SweepRow> {
    check_sweep_preset(preset)?;
    let fit = select_columns(fit, preset.kinds())?;
    let test = select_columns(test, preset.kinds())?;
    let model = fit_constrained_k1(&fit)?;
    let pred: Vec<f64> = test.features.iter().map(|s| model.predict_values(s)).collect();
    let report = metrics(&pred, &test.targets)?;
    Ok(SweepRow {
        d: 0,
        omega: model.weights[0],
        r2: report.r2,
        degenerate: model.fit_report.degenerate,
    })
}

fn check_sweep_preset(preset: Preset) -> Result<()> {
    match preset {
        Preset::RgS | Preset::RgE | Preset::RgO => Ok(()),
        other => Err(Error::InvalidArgument(format!(
            "sweep needs one lower/upper pair (rg-s, rg-e or rg-o), got {}",
            other.name()
        ))),
    }
}

/// Dimension sweep for several single-pair presets at once; the features
/// of all presets are computed together. Returns one row list per preset.
pub fn dimension_sweep_many(
    d_list: &[usize],
    template: &GaussianMixtureSpec,
    presets: &[Preset],
    plan: &SweepPlan,
    seed: u64,
) -> Result<Vec<Vec<SweepRow>>> {
    for &p in presets {
        check_sweep_preset(p)?;
    }
    let mut configs: Vec<PredictorConfig> = Vec::new();
    for &preset in presets {
        for c in preset.configs(plan.p) {
            if !configs.iter().any(|x| x.kind == c.kind) {
                configs.push(c);
            }
        }
    }
    let mut out = vec![Vec::with_capacity(d_list.len()); presets.len()];
    for &d in d_list {
        let spec = GaussianMixtureSpec { d, ..*template };
        let (fit, test) = simulate_designs(&spec, &configs, plan, seed)?;
        for (rows, &preset) in out.iter_mut().zip(presets) {
            let row = fit_and_score(&fit, &test, preset)?;
            rows.push(SweepRow { d, ..row });
        }
    }
    Ok(out)
}

/// Per-dimension constrained fit of one lower/upper pair with held-out R².
pub fn dimension_sweep(
    d_list: &[usize],
    template: &GaussianMixtureSpec,
    preset: Preset,
    plan: &SweepPlan,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    Ok(dimension_sweep_many(d_list, template, &[preset], plan, seed)?.remove(0))
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut s = 0;
    while s < idx.len() {
        let mut e = s;
        while e + 1 < idx.len() && v[idx[e + 1]] == v[idx[s]] {
            e += 1;
        }
        let avg = (s + e) as f64 / 2.0 + 1.0;
        for &i in &idx[s..=e] {
            r[i] = avg;
        }
        s = e + 1;
    }
    r
}

/// CSV body of a sweep table (`d,omega,r2`; undefined R² is written as `nan`).
pub fn format_sweep(rows: &[SweepRow]) -> String {
    let mut out = String::from("d,omega,r2\n");
    for r in rows {
        let r2 = r.r2.map_or_else(|| "nan".to_string(), |v| format!("{v:?}"));
        out.push_str(&format!("{},{:?},{r2}\n", r.d, r.omega));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sliced::Preset;

    fn spec(d: usize, seed: u64) -> GaussianMixtureSpec {
        GaussianMixtureSpec::new(d, SeedSpec::new(seed, 0))
    }

    #[test]
    fn mixture_shapes_and_determinism() {
        let m = sample_gaussian_mixture(&spec(4, 1)).unwrap();
        assert_eq!(m.len(), 600);
        assert_eq!(m.dim(), 4);
        assert!(m.is_uniform());
        assert!(m.bit_identical(&sample_gaussian_mixture(&spec(4, 1)).unwrap()));
        assert!(!m.bit_identical(&sample_gaussian_mixture(&spec(4, 2)).unwrap()));

        let point = GaussianMixtureSpec {
            components: 1,
            cov_scale: 0.0,
            ..spec(3, 5)
        };
        let m = sample_gaussian_mixture(&point).unwrap();
        let first = m.point(0).to_vec();
        assert!(m.points().all(|x| x == first.as_slice()));
        assert!(first.iter().all(|c| c.abs() <= 5.0));

        let bad = GaussianMixtureSpec { components: 0, ..spec(2, 0) };
        assert!(sample_gaussian_mixture(&bad).is_err());
    }

    #[test]
    fn metric_examples() {
        let a = [1.0, 2.0, 4.0];
        let r = metrics(&a, &a).unwrap();
        assert_eq!((r.r2, r.mse, r.mae), (Some(1.0), 0.0, 0.0));
        let mean = [7.0 / 3.0; 3];
        assert!(metrics(&mean, &a).unwrap().r2.unwrap().abs() < 1e-12);
        let r = metrics(&[1.0, 1.0], &[0.0, 2.0]).unwrap();
        assert_eq!((r.mse, r.mae, r.r2), (1.0, 1.0, Some(0.0)));
        assert_eq!(metrics(&[1.0, 2.0], &[3.0, 3.0]).unwrap().r2, None);
        assert!(metrics(&[1.0], &[1.0, 2.0]).is_err());
        assert!(metrics(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn knn_examples() {
        let d = vec![vec![3.0, 0.5, 2.0], vec![0.1, 5.0, 4.0]];
        assert_eq!(knn_classify(&d, &[0, 1, 2], 1).unwrap(), vec![1, 0]);
        assert_eq!(knn_classify(&d, &[4, 4, 4], 2).unwrap(), vec![4, 4]);
        // 2-vs-2 tie: class 1 sums 0.6+0.7, class 0 sums 0.5+0.9
        let tie = vec![vec![0.5, 0.9, 0.6, 0.7, 9.0]];
        assert_eq!(knn_classify(&tie, &[0, 0, 1, 1, 0], 4).unwrap(), vec![1]);
        // identical sums fall back to the lower class id
        let even = vec![vec![1.0, 2.0, 2.0, 1.0]];
        assert_eq!(knn_classify(&even, &[1, 1, 0, 0], 4).unwrap(), vec![0]);
        assert!(knn_classify(&d, &[0, 1, 2], 0).is_err());
        assert!(knn_classify(&d, &[0, 1, 2], 4).is_err());
    }

    #[test]
    fn knn_affine_invariance() {
        let mut rng = SeedSpec::new(8, 0).rng();
        let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let d: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..30).map(|_| rng.random_range(0.0..10.0f64).round()).collect())
            .collect();
        for k in [1, 3, 5, 10, 15] {
            let base = knn_classify(&d, &labels, k).unwrap();
            let affine: Vec<Vec<f64>> = d.iter().map(|r| r.iter().map(|x| 2.0 * x + 4.0).collect()).collect();
            assert_eq!(knn_classify(&affine, &labels, k).unwrap(), base);
        }
    }

    #[test]
    fn pairwise_matrix_properties() {
        let ms: Vec<DiscreteMeasure> = (0..5)
            .map(|k| {
                let s = GaussianMixtureSpec {
                    points_per_component: 5,
                    ..spec(2, 20 + k)
                };
                sample_gaussian_mixture(&s).unwrap()
            })
            .collect();
        let m = pairwise_matrix(&ms, &ms, Scorer::Exact { p: 2.0 }, 1).unwrap();
        for i in 0..5 {
            assert_eq!(m[i][i], 0.0);
            for j in 0..5 {
                assert_eq!(m[i][j], m[j][i]);
            }
        }

        let atoms: Vec<DiscreteMeasure> = [[0.0, 0.0], [3.0, 4.0], [1.0, -1.0]]
            .iter()
            .map(|x| DiscreteMeasure::dirac(x).unwrap())
            .collect();
        let b = atoms.clone();
        let m = pairwise_matrix(&atoms, &b, Scorer::Exact { p: 2.0 }, 1).unwrap();
        assert!((m[0][1] - 5.0).abs() < 1e-12 && (m[1][2] - 29f64.sqrt()).abs() < 1e-12);
        let m1 = pairwise_matrix(&atoms, &b, Scorer::Exact { p: 1.0 }, 1).unwrap();
        assert!((m1[0][1] - 7.0).abs() < 1e-12);

        let cfg = PredictorConfig::new(PredictorKind::Sw, 2.0);
        let single = Scorer::Single { config: &cfg, share_directions: true };
        assert_eq!(
            pairwise_matrix(&ms, &ms, single, 3).unwrap(),
            pairwise_matrix(&ms, &ms, single, 3).unwrap()
        );
        let three = vec![DiscreteMeasure::dirac(&[0.0, 0.0, 0.0]).unwrap()];
        assert!(matches!(
            pairwise_matrix(&ms, &three, Scorer::Exact { p: 2.0 }, 1),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn model_matrix_tracks_exact() {
        let ms: Vec<DiscreteMeasure> = (0..20)
            .map(|k| {
                let s = GaussianMixtureSpec {
                    points_per_component: 10,
                    ..spec(3, 100 + k)
                };
                sample_gaussian_mixture(&s).unwrap()
            })
            .collect();
        let exact = pairwise_matrix(&ms, &ms, Scorer::Exact { p: 2.0 }, 4).unwrap();
        let ds = MeasureDataset::new(ms.clone(), None).unwrap();
        let pairs: Vec<PairIndex> = (0..10).map(|k| PairIndex::new(k, 19 - k)).collect();
        let labels: Vec<f64> = pairs.iter().map(|p| exact[p.i][p.j]).collect();
        let design = build_design(&ds, &pairs, &Preset::RgS.configs(2.0), 4, true, Some(&labels)).unwrap();
        let model = crate::regression::fit(&design, true).unwrap();
        let approx = pairwise_matrix(&ms, &ms, Scorer::Model(&model), 4).unwrap();
        let (mut p, mut a) = (Vec::new(), Vec::new());
        for i in 0..20 {
            for j in i + 1..20 {
                p.push(approx[i][j]);
                a.push(exact[i][j]);
            }
        }
        assert!(metrics(&p, &a).unwrap().r2.unwrap() >= 0.8);
    }

    #[test]
    fn sweep_smoke() {
        let template = GaussianMixtureSpec {
            points_per_component: 10,
            ..spec(1, 0)
        };
        let plan = SweepPlan { fit_pairs: 6, test_pairs: 6, p: 2.0 };
        let rows = dimension_sweep(&[1, 2, 5], &template, Preset::RgS, &plan, 3).unwrap();
        assert_eq!(rows.iter().map(|r| r.d).collect::<Vec<_>>(), vec![1, 2, 5]);
        // in 1D both bounds equal W, so the fit is flagged and still exact
        assert!(rows[0].degenerate);
        assert!(rows[0].r2.unwrap() > 1.0 - 1e-9);
        assert!(!rows[2].degenerate);
        assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.omega)));
        assert_eq!(rows, dimension_sweep(&[1, 2, 5], &template, Preset::RgS, &plan, 3).unwrap());
        assert!(format_sweep(&rows).starts_with("d,omega,r2\n1,"));
        assert!(dimension_sweep(&[1], &template, Preset::RgSe, &plan, 3).is_err());
    }

    #[test]
    fn spearman_values() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[1.0, 5.0, 9.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0], &[1.0, 1.0]), None);
    }
}
