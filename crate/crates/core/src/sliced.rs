//! Sliced predictors of the Wasserstein distance.
//!
//! Lower bounds come from projected 1D costs: SW (uniform average), EBSW
//! (importance weights favoring costly directions) and Max-SW (ascent to
//! the most discriminative direction). Upper bounds come from lifted costs:
//! PW (uniform average), EST (weights favoring cheap directions) and
//! Min-SWGG (search for the cheapest direction).
//!
//! All `*_hat` functions return p-power estimates. [`evaluate_features`]
//! takes p-th roots so that features are distances.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_order, Error, Result};
use crate::measures::DiscreteMeasure;
use crate::ot1d::{lifted_plan, pow_abs, slice_cost};
use crate::sampling::{sample_directions_with, Direction, SeedSpec};

/// Default number of Monte Carlo directions.
pub const DEFAULT_L: usize = 100;
/// Default random restarts for Max-SW.
pub const DEFAULT_MAXSW_L: usize = 10;
/// Default optimization steps for Max-SW and Min-SWGG.
pub const DEFAULT_T: usize = 50;
pub const DEFAULT_STEP: f64 = 0.1;
pub const DEFAULT_TEMPERATURE: f64 = 1.0;
/// Initial perturbation scale of the Min-SWGG annealing.
pub const ANNEAL_SCALE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PredictorKind {
    Sw,
    MaxSw,
    Ebsw,
    Pw,
    MinSwgg,
    Est,
}

impl PredictorKind {
    pub const ALL: [PredictorKind; 6] = [
        PredictorKind::Sw,
        PredictorKind::Ebsw,
        PredictorKind::MaxSw,
        PredictorKind::Pw,
        PredictorKind::Est,
        PredictorKind::MinSwgg,
    ];

    /// Lower bound of `W_p` (otherwise an upper bound).
    pub fn is_lower(self) -> bool {
        matches!(self, Self::Sw | Self::MaxSw | Self::Ebsw)
    }

    /// Estimated from a plain set of directions.
    pub fn is_monte_carlo(self) -> bool {
        matches!(self, Self::Sw | Self::Ebsw | Self::Pw | Self::Est)
    }

    pub fn uses_lifted(self) -> bool {
        !self.is_lower()
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Sw => "SW",
            Self::MaxSw => "MaxSW",
            Self::Ebsw => "EBSW",
            Self::Pw => "PW",
            Self::MinSwgg => "MinSWGG",
            Self::Est => "EST",
        }
    }

    fn ordinal(self) -> u64 {
        match self {
            Self::Sw => 0,
            Self::Ebsw => 1,
            Self::MaxSw => 2,
            Self::Pw => 3,
            Self::Est => 4,
            Self::MinSwgg => 5,
        }
    }
}

impl fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PredictorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown predictor '{s}'")))
    }
}

impl Serialize for PredictorKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for PredictorKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One sliced predictor with everything needed to reproduce it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictorConfig {
    pub kind: PredictorKind,
    /// Directions (Monte Carlo kinds) or random candidates (optimized kinds).
    #[serde(rename = "L")]
    pub l: usize,
    /// Optimization steps; ignored by Monte Carlo kinds.
    #[serde(rename = "T")]
    pub t: usize,
    pub step_size: f64,
    pub temperature: f64,
    pub p: f64,
    pub seed_stream: u64,
}

impl PredictorConfig {
    pub fn new(kind: PredictorKind, p: f64) -> Self {
        let (l, t) = match kind {
            PredictorKind::MaxSw => (DEFAULT_MAXSW_L, DEFAULT_T),
            PredictorKind::MinSwgg => (DEFAULT_L, DEFAULT_T),
            _ => (DEFAULT_L, 0),
        };
        Self {
            kind,
            l,
            t,
            step_size: DEFAULT_STEP,
            temperature: DEFAULT_TEMPERATURE,
            p,
            seed_stream: kind.ordinal(),
        }
    }

    pub fn with_l(mut self, l: usize) -> Self {
        self.l = l;
        self
    }

    pub fn with_t(mut self, t: usize) -> Self {
        self.t = t;
        self
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_order(self.p)?;
        if self.l == 0 {
            return Err(Error::InvalidArgument(format!("{}: L must be >= 1", self.kind)));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{}: temperature must be positive",
                self.kind
            )));
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{}: step size must be positive",
                self.kind
            )));
        }
        Ok(())
    }
}

/// Predictor sets used by the regression models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// SW and PW.
    RgS,
    /// EBSW and EST.
    RgE,
    /// Max-SW and Min-SWGG.
    RgO,
    /// SW, EBSW, PW, EST.
    RgSe,
    /// All six.
    RgSeo,
}

impl Preset {
    pub const ALL: [Preset; 5] = [Preset::RgS, Preset::RgE, Preset::RgO, Preset::RgSe, Preset::RgSeo];

    pub fn kinds(self) -> &'static [PredictorKind] {
        use PredictorKind::*;
        match self {
            Preset::RgS => &[Sw, Pw],
            Preset::RgE => &[Ebsw, Est],
            Preset::RgO => &[MaxSw, MinSwgg],
            Preset::RgSe => &[Sw, Ebsw, Pw, Est],
            Preset::RgSeo => &[Sw, Ebsw, MaxSw, Pw, Est, MinSwgg],
        }
    }

    /// Default configs for order `p`.
    pub fn configs(self, p: f64) -> Vec<PredictorConfig> {
        self.kinds().iter().map(|&k| PredictorConfig::new(k, p)).collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::RgS => "rg-s",
            Preset::RgE => "rg-e",
            Preset::RgO => "rg-o",
            Preset::RgSe => "rg-se",
            Preset::RgSeo => "rg-seo",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown preset '{s}'")))
    }
}

/// The lower bound each upper bound is paired with in constrained models.
pub fn lower_partner(kind: PredictorKind) -> Option<PredictorKind> {
    match kind {
        PredictorKind::Pw => Some(PredictorKind::Sw),
        PredictorKind::Est => Some(PredictorKind::Ebsw),
        PredictorKind::MinSwgg => Some(PredictorKind::MaxSw),
        _ => None,
    }
}

/// Pairs every upper-bound config with its lower-bound partner. Returns
/// `(lower_idx, upper_idx)` aligned by position.
pub fn bound_pairing(configs: &[PredictorConfig]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for (u, c) in configs.iter().enumerate() {
        if let Some(partner) = lower_partner(c.kind) {
            let l = configs
                .iter()
                .position(|x| x.kind == partner)
                .ok_or_else(|| {
                    Error::InvalidArgument(format!("{} has no {} partner", c.kind, partner))
                })?;
            lower.push(l);
            upper.push(u);
        }
    }
    if lower.len() * 2 != configs.len() {
        return Err(Error::InvalidArgument(
            "constrained models need every predictor in a lower/upper pair".into(),
        ));
    }
    Ok((lower, upper))
}

/// Feature distances `S_p^(k)(µ, ν)`, ordered like `configs`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub configs: Vec<PredictorConfig>,
}

fn nonempty(directions: &[Direction]) -> Result<()> {
    if directions.is_empty() {
        return Err(Error::InvalidArgument("direction list is empty".into()));
    }
    Ok(())
}

fn projected_costs(mu: &DiscreteMeasure, nu: &DiscreteMeasure, dirs: &[Direction], p: f64) -> Result<Vec<f64>> {
    dirs.iter()
        .map(|th| Ok(slice_cost(mu, nu, th, p, false)?.projected))
        .collect()
}

fn lifted_costs(mu: &DiscreteMeasure, nu: &DiscreteMeasure, dirs: &[Direction], p: f64) -> Result<Vec<f64>> {
    dirs.iter()
        .map(|th| Ok(slice_cost(mu, nu, th, p, true)?.lifted.unwrap_or(0.0)))
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// `Σ w_l x_l` with `w ∝ exp(sign · x_l / temperature)`, stabilized by
/// subtracting the largest exponent.
fn softmax_mean(xs: &[f64], temperature: f64, sign: f64) -> f64 {
    let top = xs
        .iter()
        .map(|x| sign * x / temperature)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut num = 0.0;
    let mut den = 0.0;
    for &x in xs {
        let w = (sign * x / temperature - top).exp();
        num += w * x;
        den += w;
    }
    num / den
}

fn check_temperature(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("temperature must be positive, got {t}")))
    }
}

/// Monte Carlo SW: mean projected cost over `directions`.
pub fn sw_hat(mu: &DiscreteMeasure, nu: &DiscreteMeasure, directions: &[Direction], p: f64) -> Result<f64> {
    nonempty(directions)?;
    Ok(mean(&projected_costs(mu, nu, directions, p)?))
}

/// Importance-sampled EBSW with `f(x) = exp(x / temperature)`.
pub fn ebsw_hat(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    directions: &[Direction],
    p: f64,
    temperature: f64,
) -> Result<f64> {
    nonempty(directions)?;
    check_temperature(temperature)?;
    Ok(softmax_mean(&projected_costs(mu, nu, directions, p)?, temperature, 1.0))
}

/// Monte Carlo PW: mean lifted cost over `directions`.
pub fn pw_hat(mu: &DiscreteMeasure, nu: &DiscreteMeasure, directions: &[Direction], p: f64) -> Result<f64> {
    nonempty(directions)?;
    Ok(mean(&lifted_costs(mu, nu, directions, p)?))
}

/// Importance-sampled EST with `f(x) = exp(−x / temperature)` on lifted costs.
pub fn est_hat(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    directions: &[Direction],
    p: f64,
    temperature: f64,
) -> Result<f64> {
    nonempty(directions)?;
    check_temperature(temperature)?;
    Ok(softmax_mean(&lifted_costs(mu, nu, directions, p)?, temperature, -1.0))
}

/// Projected cost at `theta` and its gradient with the assignment frozen.
fn cost_and_gradient(mu: &DiscreteMeasure, nu: &DiscreteMeasure, theta: &Direction, p: f64) -> Result<(f64, Vec<f64>)> {
    let (plan, pm, pn) = lifted_plan(mu, nu, theta)?;
    let mut cost = 0.0;
    let mut grad = vec![0.0; mu.dim()];
    for &(i, j, m) in &plan.entries {
        let gap = pm.positions[i] - pn.positions[j];
        cost += m * pow_abs(gap, p);
        if gap != 0.0 {
            let g = m * p * gap.abs().powf(p - 1.0) * gap.signum();
            for ((gk, x), y) in grad.iter_mut().zip(mu.point(i)).zip(nu.point(j)) {
                *gk += g * (x - y);
            }
        }
    }
    Ok((cost, grad))
}

/// Max-SW estimate: best of `L` random directions, then `T` steps of
/// projected gradient ascent with normalized steps. Returns the largest
/// projected cost met and its direction.
pub fn maxsw_hat(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    config: &PredictorConfig,
    seed: &SeedSpec,
) -> Result<(f64, Direction)> {
    config.validate()?;
    let p = config.p;
    let mut rng = seed.rng();
    let candidates = sample_directions_with(mu.dim(), config.l, &mut rng);
    let costs = projected_costs(mu, nu, &candidates, p)?;
    let start = argbest(&costs, |a, b| a > b);
    let mut best = (costs[start], candidates[start].clone());

    let mut theta = best.1.clone();
    for _ in 0..config.t {
        let (cost, grad) = cost_and_gradient(mu, nu, &theta, p)?;
        if cost > best.0 {
            best = (cost, theta.clone());
        }
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            break;
        }
        let next: Vec<f64> = theta
            .as_slice()
            .iter()
            .zip(&grad)
            .map(|(t, g)| t + config.step_size * g / norm)
            .collect();
        match Direction::new(next) {
            Ok(d) => theta = d,
            Err(_) => break,
        }
    }
    if config.t > 0 {
        let cost = slice_cost(mu, nu, &theta, p, false)?.projected;
        if cost > best.0 {
            best = (cost, theta);
        }
    }
    Ok(best)
}

/// Min-SWGG estimate: best of `L` random directions by lifted cost, then `T`
/// annealing proposals (Gaussian perturbation, renormalized) accepted only
/// when they lower the lifted cost. The perturbation scale halves every
/// `T/4` steps.
pub fn minswgg_hat(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    config: &PredictorConfig,
    seed: &SeedSpec,
) -> Result<(f64, Direction)> {
    config.validate()?;
    let p = config.p;
    let mut rng = seed.rng();
    let candidates = sample_directions_with(mu.dim(), config.l, &mut rng);
    let costs = lifted_costs(mu, nu, &candidates, p)?;
    let start = argbest(&costs, |a, b| a < b);
    let mut best = (costs[start], candidates[start].clone());

    let period = (config.t / 4).max(1);
    let mut scale = ANNEAL_SCALE;
    for step in 0..config.t {
        if step > 0 && step % period == 0 {
            scale *= 0.5;
        }
        let proposal: Vec<f64> = best
            .1
            .as_slice()
            .iter()
            .map(|t| t + scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        let Ok(theta) = Direction::new(proposal) else {
            continue;
        };
        let cost = slice_cost(mu, nu, &theta, p, true)?.lifted.unwrap_or(f64::INFINITY);
        if cost < best.0 {
            best = (cost, theta);
        }
    }
    Ok(best)
}

/// First index whose value beats all others under `better`.
fn argbest(xs: &[f64], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut k = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if better(x, xs[k]) {
            k = i;
        }
    }
    k
}

/// Seed tag of the shared direction set.
const SHARED_TAG: u64 = 0;

fn private_seed(seed: &SeedSpec, config: &PredictorConfig) -> SeedSpec {
    seed.child(1 + config.seed_stream)
}

/// Evaluates every predictor for one pair and returns distances.
///
/// With `share_directions`, all Monte Carlo predictors read prefixes of one
/// direction set drawn from `seed`, so their estimates obey the empirical
/// bound chains pointwise.
pub fn evaluate_features(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    configs: &[PredictorConfig],
    seed: &SeedSpec,
    share_directions: bool,
) -> Result<FeatureVector> {
    let p = configs
        .first()
        .ok_or_else(|| Error::InvalidArgument("no predictors configured".into()))?
        .p;
    for c in configs {
        c.validate()?;
        if c.p != p {
            return Err(Error::InvalidArgument(format!(
                "inconsistent orders: {} and {}",
                p, c.p
            )));
        }
    }
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            got: nu.dim(),
        });
    }

    let mc: Vec<&PredictorConfig> = configs.iter().filter(|c| c.kind.is_monte_carlo()).collect();
    let mut shared: Vec<(f64, f64)> = Vec::new();
    if share_directions && !mc.is_empty() {
        let count = mc.iter().map(|c| c.l).max().unwrap_or(1);
        let with_lifted = mc.iter().any(|c| c.kind.uses_lifted());
        let dirs = sample_directions_with(mu.dim(), count, &mut seed.child(SHARED_TAG).rng());
        shared = dirs
            .iter()
            .map(|th| {
                let s = slice_cost(mu, nu, th, p, with_lifted)?;
                Ok((s.projected, s.lifted.unwrap_or(0.0)))
            })
            .collect::<Result<_>>()?;
    }

    let mut values = Vec::with_capacity(configs.len());
    for c in configs {
        let estimate = if c.kind.is_monte_carlo() {
            let costs: Vec<f64> = if share_directions {
                shared[..c.l]
                    .iter()
                    .map(|&(proj, lift)| if c.kind.uses_lifted() { lift } else { proj })
                    .collect()
            } else {
                let dirs = sample_directions_with(mu.dim(), c.l, &mut private_seed(seed, c).rng());
                if c.kind.uses_lifted() {
                    lifted_costs(mu, nu, &dirs, p)?
                } else {
                    projected_costs(mu, nu, &dirs, p)?
                }
            };
            match c.kind {
                PredictorKind::Sw | PredictorKind::Pw => mean(&costs),
                PredictorKind::Ebsw => softmax_mean(&costs, c.temperature, 1.0),
                _ => softmax_mean(&costs, c.temperature, -1.0),
            }
        } else if c.kind == PredictorKind::MaxSw {
            maxsw_hat(mu, nu, c, &private_seed(seed, c))?.0
        } else {
            minswgg_hat(mu, nu, c, &private_seed(seed, c))?.0
        };
        values.push(estimate.max(0.0).powf(1.0 / p));
    }
    Ok(FeatureVector {
        values,
        configs: configs.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{brute_force_wasserstein, exact_wasserstein};
    use crate::ot1d::{lifted_cost, project, w1d_cost};
    use crate::sampling::sample_directions;
    use rand::Rng;

    fn cloud(rng: &mut impl Rng, n: usize, d: usize, shift: &[f64]) -> DiscreteMeasure {
        let x: Vec<f64> = (0..n)
            .flat_map(|_| (0..d).map(|k| rng.random_range(-1.0..1.0) + shift[k]).collect::<Vec<_>>())
            .collect();
        DiscreteMeasure::new(x, d, None).unwrap()
    }

    fn pair(seed: u64, d: usize) -> (DiscreteMeasure, DiscreteMeasure) {
        let mut rng = SeedSpec::new(seed, 0).rng();
        let a = cloud(&mut rng, 15, d, &vec![0.0; d]);
        let b = cloud(&mut rng, 12, d, &vec![0.7; d]);
        (a, b)
    }

    #[test]
    fn identical_measures_give_zero() {
        let (a, _) = pair(1, 3);
        let dirs = sample_directions(3, 20, &SeedSpec::new(2, 0)).unwrap();
        assert_eq!(sw_hat(&a, &a, &dirs, 2.0).unwrap(), 0.0);
        assert_eq!(ebsw_hat(&a, &a, &dirs, 2.0, 1.0).unwrap(), 0.0);
        assert_eq!(pw_hat(&a, &a, &dirs, 2.0).unwrap(), 0.0);
        assert_eq!(est_hat(&a, &a, &dirs, 2.0, 1.0).unwrap(), 0.0);
        let s = SeedSpec::new(3, 0);
        assert_eq!(maxsw_hat(&a, &a, &PredictorConfig::new(PredictorKind::MaxSw, 2.0), &s).unwrap().0, 0.0);
        assert_eq!(minswgg_hat(&a, &a, &PredictorConfig::new(PredictorKind::MinSwgg, 2.0), &s).unwrap().0, 0.0);
        for preset in Preset::ALL {
            let f = evaluate_features(&a, &a, &preset.configs(2.0), &s, true).unwrap();
            assert!(f.values.iter().all(|&v| v == 0.0), "{preset:?}");
        }
    }

    #[test]
    fn sw_of_diracs_converges_to_sphere_moment() {
        // E⟨θ, v⟩² = ‖v‖²/d for θ uniform on the sphere
        let x = DiscreteMeasure::dirac(&[1.0, 2.0]).unwrap();
        let y = DiscreteMeasure::dirac(&[-2.0, 0.5]).unwrap();
        let v2 = 9.0 + 2.25;
        let dirs = sample_directions(2, 100_000, &SeedSpec::new(4, 0)).unwrap();
        let est = sw_hat(&x, &y, &dirs, 2.0).unwrap();
        assert!((est - v2 / 2.0).abs() <= 0.02 * v2 / 2.0, "{est}");
        // lifting a single atom pair is forced
        assert!((pw_hat(&x, &y, &dirs[..7], 2.0).unwrap() - v2).abs() < 1e-12);
    }

    #[test]
    fn single_direction_mean_is_that_slice() {
        let (a, b) = pair(5, 2);
        let th = Direction::new(vec![0.3, -0.8]).unwrap();
        let direct = w1d_cost(&project(&a, &th).unwrap(), &project(&b, &th).unwrap(), 2.0).unwrap();
        assert_eq!(sw_hat(&a, &b, std::slice::from_ref(&th), 2.0).unwrap(), direct);
    }

    #[test]
    fn softmax_weights_examples() {
        let e1 = 1f64.exp();
        let e3 = 3f64.exp();
        let want = (e1 + 3.0 * e3) / (e1 + e3);
        assert!((softmax_mean(&[1.0, 3.0], 1.0, 1.0) - want).abs() < 1e-12);
        assert!((want - 2.7616).abs() < 1e-4);
        let want = ((-1f64).exp() + 3.0 * (-3f64).exp()) / ((-1f64).exp() + (-3f64).exp());
        assert!((softmax_mean(&[1.0, 3.0], 1.0, -1.0) - want).abs() < 1e-12);
        assert!((want - 1.2384).abs() < 1e-4);
        // huge costs do not overflow
        assert!((softmax_mean(&[1e6, 1e6 + 1.0], 1.0, 1.0) - (1e6 + 1.0 / (1.0 + (-1f64).exp()))).abs() < 1e-6);
    }

    #[test]
    fn high_temperature_recovers_plain_means() {
        let (a, b) = pair(6, 3);
        let dirs = sample_directions(3, 30, &SeedSpec::new(7, 0)).unwrap();
        let sw = sw_hat(&a, &b, &dirs, 2.0).unwrap();
        let pw = pw_hat(&a, &b, &dirs, 2.0).unwrap();
        assert!((ebsw_hat(&a, &b, &dirs, 2.0, 1e9).unwrap() - sw).abs() < 1e-6);
        assert!((est_hat(&a, &b, &dirs, 2.0, 1e9).unwrap() - pw).abs() < 1e-6);
        assert!(ebsw_hat(&a, &b, &dirs, 2.0, 0.1).unwrap() >= sw);
        assert!(est_hat(&a, &b, &dirs, 2.0, 0.1).unwrap() <= pw);
    }

    #[test]
    fn empty_directions_rejected() {
        let (a, b) = pair(8, 2);
        assert!(sw_hat(&a, &b, &[], 2.0).is_err());
        assert!(ebsw_hat(&a, &b, &[], 2.0, 1.0).is_err());
        assert!(pw_hat(&a, &b, &[], 2.0).is_err());
        assert!(est_hat(&a, &b, &[], 2.0, 1.0).is_err());
    }

    #[test]
    fn maxsw_without_steps_is_the_sampled_slice() {
        let (a, b) = pair(9, 3);
        let c = PredictorConfig::new(PredictorKind::MaxSw, 2.0).with_l(1).with_t(0);
        let s = SeedSpec::new(10, 3);
        let (cost, theta) = maxsw_hat(&a, &b, &c, &s).unwrap();
        let th = sample_directions(3, 1, &s).unwrap();
        assert_eq!(theta, th[0]);
        assert_eq!(cost, sw_hat(&a, &b, &th, 2.0).unwrap());
    }

    #[test]
    fn maxsw_ascent_improves_on_start() {
        let (a, b) = pair(11, 4);
        let s = SeedSpec::new(12, 0);
        let base = PredictorConfig::new(PredictorKind::MaxSw, 2.0);
        let start = maxsw_hat(&a, &b, &base.with_t(0), &s).unwrap().0;
        let tuned = maxsw_hat(&a, &b, &base, &s).unwrap().0;
        assert!(tuned >= start);
        let w = exact_wasserstein(&a, &b, 2.0).unwrap().cost_p;
        assert!(tuned <= w + 1e-9);
    }

    #[test]
    fn maxsw_finds_separating_axis() {
        // oracle: dense grid over angles
        let mut rng = SeedSpec::new(13, 0).rng();
        let a = cloud(&mut rng, 40, 2, &[-4.0, 0.0]);
        let b = cloud(&mut rng, 40, 2, &[4.0, 0.0]);
        let grid_best = (0..720)
            .map(|k| {
                let t = k as f64 * std::f64::consts::PI / 360.0;
                let th = Direction::new(vec![t.cos(), t.sin()]).unwrap();
                (sw_hat(&a, &b, std::slice::from_ref(&th), 2.0).unwrap(), th)
            })
            .max_by(|x, y| x.0.total_cmp(&y.0))
            .unwrap();
        assert!(grid_best.1.as_slice()[0].abs() >= 0.95);
        let (cost, theta) =
            maxsw_hat(&a, &b, &PredictorConfig::new(PredictorKind::MaxSw, 2.0), &SeedSpec::new(14, 0)).unwrap();
        assert!(theta.as_slice()[0].abs() >= 0.95, "{theta:?}");
        assert!(cost >= grid_best.0 * (1.0 - 1e-3));
    }

    #[test]
    fn minswgg_in_1d_is_exact() {
        let a = DiscreteMeasure::new(vec![0.0, 2.0, 5.0], 1, None).unwrap();
        let b = DiscreteMeasure::from_masses(vec![1.0, -1.0], 1, vec![1.0, 3.0]).unwrap();
        let w = exact_wasserstein(&a, &b, 2.0).unwrap().cost_p;
        let c = PredictorConfig::new(PredictorKind::MinSwgg, 2.0).with_l(3).with_t(5);
        let got = minswgg_hat(&a, &b, &c, &SeedSpec::new(1, 1)).unwrap().0;
        assert!((got - w).abs() < 1e-12);
    }

    #[test]
    fn minswgg_on_square_corners() {
        let a = DiscreteMeasure::from_points(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let b = DiscreteMeasure::from_points(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let exact = brute_force_wasserstein(&a, &b, 2.0).unwrap();
        assert_eq!(exact, 1.0);
        let c = PredictorConfig::new(PredictorKind::MinSwgg, 2.0).with_l(10).with_t(8);
        let s = SeedSpec::new(15, 0);
        let (got, theta) = minswgg_hat(&a, &b, &c, &s).unwrap();
        assert!(got >= exact - 1e-12);
        assert_eq!(got, lifted_cost(&a, &b, &theta, 2.0).unwrap());
        let dirs = sample_directions(2, 10, &s).unwrap();
        assert!(got <= pw_hat(&a, &b, &dirs, 2.0).unwrap() + 1e-12);
    }

    #[test]
    fn minswgg_never_worse_than_random_search() {
        let (a, b) = pair(16, 3);
        let s = SeedSpec::new(17, 0);
        let c = PredictorConfig::new(PredictorKind::MinSwgg, 2.0).with_l(20);
        let random_only = minswgg_hat(&a, &b, &c.with_t(0), &s).unwrap().0;
        let annealed = minswgg_hat(&a, &b, &c, &s).unwrap().0;
        assert!(annealed <= random_only);
        let dirs = sample_directions(3, 20, &s).unwrap();
        let best_random = lifted_costs(&a, &b, &dirs, 2.0).unwrap().into_iter().fold(f64::INFINITY, f64::min);
        assert_eq!(random_only, best_random);
    }

    #[test]
    fn preset_layouts() {
        use PredictorKind::*;
        let s = SeedSpec::new(18, 0);
        let (a, b) = pair(19, 2);
        let f = evaluate_features(&a, &b, &Preset::RgS.configs(2.0), &s, true).unwrap();
        assert_eq!(f.values.len(), 2);
        assert_eq!(f.configs.iter().map(|c| c.kind).collect::<Vec<_>>(), vec![Sw, Pw]);
        let f = evaluate_features(&a, &b, &Preset::RgSeo.configs(2.0), &s, true).unwrap();
        assert_eq!(
            f.configs.iter().map(|c| c.kind).collect::<Vec<_>>(),
            vec![Sw, Ebsw, MaxSw, Pw, Est, MinSwgg]
        );
        let (lo, up) = bound_pairing(&f.configs).unwrap();
        assert_eq!((lo, up), (vec![0, 1, 2], vec![3, 4, 5]));
        assert!(bound_pairing(&[PredictorConfig::new(Sw, 2.0)]).is_err());
    }

    #[test]
    fn features_reject_mixed_orders() {
        let (a, b) = pair(20, 2);
        let mut cfg = Preset::RgS.configs(2.0);
        cfg[1].p = 1.0;
        assert!(evaluate_features(&a, &b, &cfg, &SeedSpec::new(0, 0), true).is_err());
        assert!(evaluate_features(&a, &b, &[], &SeedSpec::new(0, 0), true).is_err());
    }

    #[test]
    fn shared_features_match_direct_estimators() {
        let (a, b) = pair(21, 3);
        let s = SeedSpec::new(22, 5);
        let cfg = Preset::RgSe.configs(2.0);
        let f = evaluate_features(&a, &b, &cfg, &s, true).unwrap();
        let dirs = sample_directions(3, DEFAULT_L, &s.child(SHARED_TAG)).unwrap();
        let want = [
            sw_hat(&a, &b, &dirs, 2.0).unwrap(),
            ebsw_hat(&a, &b, &dirs, 2.0, 1.0).unwrap(),
            pw_hat(&a, &b, &dirs, 2.0).unwrap(),
            est_hat(&a, &b, &dirs, 2.0, 1.0).unwrap(),
        ];
        for (got, w) in f.values.iter().zip(want) {
            assert!((got - w.sqrt()).abs() < 1e-12);
        }
        let g = evaluate_features(&a, &b, &cfg, &s, true).unwrap();
        assert_eq!(f, g);
        let h = evaluate_features(&a, &b, &cfg, &s, false).unwrap();
        assert_ne!(f.values, h.values);
    }

    fn rotate(theta: f64, x: &[f64]) -> Vec<f64> {
        let (c, s) = (theta.cos(), theta.sin());
        let mut y = x.to_vec();
        y[0] = c * x[0] - s * x[1];
        y[1] = s * x[0] + c * x[1];
        y
    }

    #[test]
    fn rotation_invariance_with_rotated_directions() {
        let (a, b) = pair(23, 3);
        let ang = 0.83;
        let ra = a.map_points(|x| rotate(ang, x)).unwrap();
        let rb = b.map_points(|x| rotate(ang, x)).unwrap();
        let dirs = sample_directions(3, 40, &SeedSpec::new(24, 0)).unwrap();
        let rdirs: Vec<Direction> = dirs
            .iter()
            .map(|d| Direction::new(rotate(ang, d.as_slice())).unwrap())
            .collect();
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * (1.0 + x.abs());
        assert!(close(sw_hat(&a, &b, &dirs, 2.0).unwrap(), sw_hat(&ra, &rb, &rdirs, 2.0).unwrap()));
        assert!(close(pw_hat(&a, &b, &dirs, 2.0).unwrap(), pw_hat(&ra, &rb, &rdirs, 2.0).unwrap()));
        assert!(close(
            ebsw_hat(&a, &b, &dirs, 2.0, 1.0).unwrap(),
            ebsw_hat(&ra, &rb, &rdirs, 2.0, 1.0).unwrap()
        ));
        assert!(close(
            est_hat(&a, &b, &dirs, 2.0, 1.0).unwrap(),
            est_hat(&ra, &rb, &rdirs, 2.0, 1.0).unwrap()
        ));
    }

    #[test]
    fn empirical_bound_chains() {
        let s = SeedSpec::new(25, 0);
        for inst in 0..20 {
            let d = [1, 2, 5][inst % 3];
            let (a, b) = pair(100 + inst as u64, d);
            let dirs = sample_directions(d, 50, &s.with_stream(inst as u64)).unwrap();
            let w = exact_wasserstein(&a, &b, 2.0).unwrap().cost_p;
            let sw = sw_hat(&a, &b, &dirs, 2.0).unwrap();
            let eb = ebsw_hat(&a, &b, &dirs, 2.0, 1.0).unwrap();
            let pw = pw_hat(&a, &b, &dirs, 2.0).unwrap();
            let est = est_hat(&a, &b, &dirs, 2.0, 1.0).unwrap();
            assert!(sw <= eb + 1e-9 && eb <= w + 1e-9 && w <= est + 1e-9 && est <= pw + 1e-9);
            let mx = maxsw_hat(&a, &b, &PredictorConfig::new(PredictorKind::MaxSw, 2.0), &s).unwrap().0;
            let mn = minswgg_hat(&a, &b, &PredictorConfig::new(PredictorKind::MinSwgg, 2.0), &s).unwrap().0;
            assert!(mx <= w + 1e-9 && w <= mn + 1e-9);
        }
    }
}
