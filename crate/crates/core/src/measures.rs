//! Discrete measures, datasets of measures and their on-disk layout.
//!
//! A dataset on disk is a manifest CSV with header `path,label`. Each `path`
//! (relative to the manifest's directory) is a headerless CSV holding one
//! point per row. An optional sibling file `<path>.w` gives one weight per
//! line; without it the measure is uniform.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::SeedSpec;

const WEIGHT_SUM_TOL: f64 = 1e-6;

/// A weighted point set `Σ α_i δ_{x_i}` in `d` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    /// Row-major `n × d`.
    supports: Vec<f64>,
    weights: Vec<f64>,
    dim: usize,
}

impl DiscreteMeasure {
    /// Builds a measure from row-major supports. `weights = None` means
    /// uniform. Explicit weights must already sum to 1 up to `1e-6`; they
    /// are renormalized exactly.
    pub fn new(supports: Vec<f64>, dim: usize, weights: Option<Vec<f64>>) -> Result<Self> {
        if let Some(w) = &weights {
            let s: f64 = w.iter().sum();
            if (s - 1.0).abs() > WEIGHT_SUM_TOL {
                return Err(Error::InvalidMeasure(format!(
                    "weights sum to {s}, expected 1"
                )));
            }
        }
        Self::build(supports, dim, weights)
    }

    /// Like [`DiscreteMeasure::new`] but accepts any positive total mass and
    /// rescales it to 1.
    pub fn from_masses(supports: Vec<f64>, dim: usize, masses: Vec<f64>) -> Result<Self> {
        Self::build(supports, dim, Some(masses))
    }

    /// Uniform measure on the given points.
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidMeasure("ragged point list".into()));
        }
        Self::build(points.concat(), dim, None)
    }

    /// Dirac mass at `x`.
    pub fn dirac(x: &[f64]) -> Result<Self> {
        Self::build(x.to_vec(), x.len(), None)
    }

    fn build(supports: Vec<f64>, dim: usize, weights: Option<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMeasure("dimension must be >= 1".into()));
        }
        if supports.is_empty() || supports.len() % dim != 0 {
            return Err(Error::InvalidMeasure(format!(
                "{} coordinates do not form rows of length {dim}",
                supports.len()
            )));
        }
        if supports.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMeasure("non-finite coordinate".into()));
        }
        let n = supports.len() / dim;
        let weights = match weights {
            None => vec![1.0 / n as f64; n],
            Some(w) => {
                if w.len() != n {
                    return Err(Error::InvalidMeasure(format!(
                        "{} weights for {n} points",
                        w.len()
                    )));
                }
                if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    return Err(Error::InvalidMeasure(
                        "weights must be finite and nonnegative".into(),
                    ));
                }
                let s: f64 = w.iter().sum();
                if s <= 0.0 {
                    return Err(Error::InvalidMeasure(format!(
                        "weights sum to {s}, must be positive"
                    )));
                }
                w.into_iter().map(|x| x / s).collect()
            }
        };
        Ok(Self {
            supports,
            weights,
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Row-major `n × d` coordinates.
    pub fn supports(&self) -> &[f64] {
        &self.supports
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.supports[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.supports.chunks_exact(self.dim)
    }

    pub fn is_uniform(&self) -> bool {
        let u = 1.0 / self.len() as f64;
        self.weights.iter().all(|w| (w - u).abs() <= 1e-12)
    }

    /// Applies `f` to every support point; weights are kept.
    pub fn map_points(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let mut supports = Vec::with_capacity(self.supports.len());
        let mut dim = None;
        for x in self.points() {
            let y = f(x);
            match dim {
                None => dim = Some(y.len()),
                Some(d) if d != y.len() => {
                    return Err(Error::InvalidMeasure("map changed dimension".into()))
                }
                _ => {}
            }
            supports.extend(y);
        }
        Self::build(supports, dim.unwrap_or(0), Some(self.weights.clone()))
    }

    /// Supports multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        self.map_points(|x| x.iter().map(|v| v * c).collect())
    }

    /// Same supports and weights, bit for bit.
    pub fn bit_identical(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.supports.len() == other.supports.len()
            && self.weights.len() == other.weights.len()
            && self
                .supports
                .iter()
                .zip(&other.supports)
                .all(|(a, b)| a.to_bits() == b.to_bits())
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Ordered collection of measures sharing one dimension, with optional
/// class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureDataset {
    measures: Vec<DiscreteMeasure>,
    labels: Option<Vec<String>>,
    dim: usize,
}

impl MeasureDataset {
    pub fn new(measures: Vec<DiscreteMeasure>, labels: Option<Vec<String>>) -> Result<Self> {
        let dim = measures
            .first()
            .map(DiscreteMeasure::dim)
            .ok_or_else(|| Error::InvalidMeasure("dataset has no measures".into()))?;
        if let Some(bad) = measures.iter().find(|m| m.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.dim(),
            });
        }
        if let Some(l) = &labels {
            if l.len() != measures.len() {
                return Err(Error::InvalidMeasure(format!(
                    "{} labels for {} measures",
                    l.len(),
                    measures.len()
                )));
            }
        }
        Ok(Self {
            measures,
            labels,
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn measures(&self) -> &[DiscreteMeasure] {
        &self.measures
    }

    pub fn get(&self, i: usize) -> Option<&DiscreteMeasure> {
        self.measures.get(i)
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Checks that every pair indexes into this dataset.
    pub fn check_pairs(&self, pairs: &[PairIndex]) -> Result<()> {
        match pairs.iter().find(|p| p.i >= self.len() || p.j >= self.len()) {
            Some(p) => Err(Error::InvalidArgument(format!(
                "pair ({}, {}) out of range for {} measures",
                p.i,
                p.j,
                self.len()
            ))),
            None => Ok(()),
        }
    }
}

/// Indices of two measures in a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairIndex {
    pub i: usize,
    pub j: usize,
}

impl PairIndex {
    pub fn new(i: usize, j: usize) -> Self {
        Self { i, j }
    }

    /// Seed stream of this pair.
    pub fn stream(&self) -> u64 {
        crate::sampling::pair_stream(self.i, self.j)
    }
}

/// How [`sample_pairs`] draws pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairMode {
    /// Draw `m` measures, return every unordered pair among them.
    AllUnordered,
    /// Draw `m` distinct unordered pairs uniformly.
    UniformRandom,
}

impl std::str::FromStr for PairMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all-unordered" => Ok(Self::AllUnordered),
            "uniform-random" => Ok(Self::UniformRandom),
            other => Err(Error::InvalidArgument(format!("unknown pair mode '{other}'"))),
        }
    }
}

/// Samples pairs of measure indices from a dataset of `n` measures.
///
/// In [`PairMode::AllUnordered`] mode `m` plays the role of `M₀` and the
/// result has `M₀(M₀−1)/2` pairs.
pub fn sample_pairs(n: usize, m: usize, seed: &SeedSpec, mode: PairMode) -> Result<Vec<PairIndex>> {
    if m == 0 {
        return Err(Error::InvalidArgument("pair count must be >= 1".into()));
    }
    let mut rng = seed.rng();
    match mode {
        PairMode::AllUnordered => {
            if m > n {
                return Err(Error::InvalidArgument(format!(
                    "cannot draw {m} measures from {n}"
                )));
            }
            let mut chosen = index::sample(&mut rng, n, m).into_vec();
            chosen.sort_unstable();
            let mut pairs = Vec::with_capacity(m * (m - 1) / 2);
            for (a, &i) in chosen.iter().enumerate() {
                for &j in &chosen[a + 1..] {
                    pairs.push(PairIndex::new(i, j));
                }
            }
            Ok(pairs)
        }
        PairMode::UniformRandom => {
            let total = n * n.saturating_sub(1) / 2;
            if m > total {
                return Err(Error::InvalidArgument(format!(
                    "cannot draw {m} distinct pairs from {n} measures"
                )));
            }
            let mut seen = HashSet::with_capacity(m);
            let mut pairs = Vec::with_capacity(m);
            while pairs.len() < m {
                let i = rng.random_range(0..n);
                let j = rng.random_range(0..n);
                if i == j {
                    continue;
                }
                let key = (i.min(j), i.max(j));
                if seen.insert(key) {
                    pairs.push(PairIndex::new(key.0, key.1));
                }
            }
            Ok(pairs)
        }
    }
}

/// Measures referenced by any pair.
pub fn measures_in(pairs: &[PairIndex]) -> HashSet<usize> {
    pairs.iter().flat_map(|p| [p.i, p.j]).collect()
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Data rows of a CSV-like file: blank lines and `#` comments dropped.
pub(crate) fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub(crate) fn parse_f64(path: &Path, line: usize, cell: &str) -> Result<f64> {
    let v: f64 = cell
        .trim()
        .parse()
        .map_err(|_| Error::parse(path, format!("line {line}: non-numeric cell '{cell}'")))?;
    if !v.is_finite() {
        return Err(Error::parse(path, format!("line {line}: non-finite value")));
    }
    Ok(v)
}

/// Reads a headerless point CSV. Returns row-major coordinates and `d`.
pub fn read_cloud(path: &Path) -> Result<(Vec<f64>, usize)> {
    let text = read_text(path)?;
    let mut coords = Vec::new();
    let mut dim = None;
    for (line, row) in data_lines(&text) {
        let before = coords.len();
        for cell in row.split(',') {
            coords.push(parse_f64(path, line, cell)?);
        }
        let width = coords.len() - before;
        match dim {
            None => dim = Some(width),
            Some(d) if d != width => {
                return Err(Error::parse(
                    path,
                    format!("line {line}: {width} columns, expected {d}"),
                ))
            }
            _ => {}
        }
    }
    let dim = dim.ok_or_else(|| Error::parse(path, "no points"))?;
    Ok((coords, dim))
}

fn weights_path(cloud: &Path) -> PathBuf {
    let mut s = cloud.as_os_str().to_owned();
    s.push(".w");
    PathBuf::from(s)
}

/// Loads one measure from a cloud file and its optional `.w` sibling.
pub fn load_measure(path: &Path) -> Result<DiscreteMeasure> {
    let (coords, dim) = read_cloud(path)?;
    let wpath = weights_path(path);
    let measure = if wpath.exists() {
        let text = read_text(&wpath)?;
        let masses = data_lines(&text)
            .map(|(line, cell)| parse_f64(&wpath, line, cell))
            .collect::<Result<Vec<_>>>()?;
        if masses.len() * dim != coords.len() {
            return Err(Error::parse(
                &wpath,
                format!("{} weights for {} points", masses.len(), coords.len() / dim),
            ));
        }
        DiscreteMeasure::from_masses(coords, dim, masses)
    } else {
        DiscreteMeasure::new(coords, dim, None)
    };
    measure.map_err(|e| Error::parse(path, e.to_string()))
}

/// Loads a dataset from a `path,label` manifest.
pub fn load_dataset(manifest: &Path) -> Result<MeasureDataset> {
    let text = read_text(manifest)?;
    let base = manifest.parent().unwrap_or_else(|| Path::new(""));
    let mut rows = data_lines(&text);
    match rows.next() {
        Some((_, header)) if header.replace(' ', "") == "path,label" => {}
        _ => return Err(Error::parse(manifest, "expected header 'path,label'")),
    }
    let mut measures = Vec::new();
    let mut labels = Vec::new();
    for (line, row) in rows {
        let (path, label) = match row.split_once(',') {
            Some((p, l)) => (p.trim(), l.trim()),
            None => (row, ""),
        };
        if path.is_empty() {
            return Err(Error::parse(manifest, format!("line {line}: empty path")));
        }
        let measure = load_measure(&base.join(path))?;
        if let Some(first) = measures.first().map(DiscreteMeasure::dim) {
            if measure.dim() != first {
                return Err(Error::DimensionMismatch {
                    expected: first,
                    got: measure.dim(),
                });
            }
        }
        measures.push(measure);
        labels.push(label.to_string());
    }
    let labels = if labels.iter().all(String::is_empty) {
        None
    } else {
        Some(labels)
    };
    MeasureDataset::new(measures, labels)
}

/// Writes a cloud CSV (and a `.w` file when the weights are not uniform).
pub fn write_measure(path: &Path, measure: &DiscreteMeasure) -> Result<()> {
    let mut out = String::new();
    for x in measure.points() {
        let row: Vec<String> = x.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))?;
    if !measure.is_uniform() {
        let w: String = measure.weights().iter().map(|v| format!("{v:?}\n")).collect();
        let wpath = weights_path(path);
        fs::write(&wpath, w).map_err(|e| Error::io(&wpath, e))?;
    }
    Ok(())
}

/// Writes a dataset as `<dir>/cloud_<k>.csv` files plus `<dir>/manifest.csv`.
pub fn write_dataset(dir: &Path, dataset: &MeasureDataset) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = String::from("path,label\n");
    for (k, m) in dataset.measures().iter().enumerate() {
        let name = format!("cloud_{k:05}.csv");
        write_measure(&dir.join(&name), m)?;
        let label = dataset.labels().map_or("", |l| l[k].as_str());
        manifest.push_str(&format!("{name},{label}\n"));
    }
    let path = dir.join("manifest.csv");
    fs::write(&path, manifest).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Reads a pairs CSV with header `i,j` (extra columns ignored).
pub fn read_pairs(path: &Path) -> Result<Vec<PairIndex>> {
    let text = read_text(path)?;
    let mut rows = data_lines(&text);
    match rows.next() {
        Some((_, h)) if h.replace(' ', "").starts_with("i,j") => {}
        _ => return Err(Error::parse(path, "expected header starting with 'i,j'")),
    }
    rows.map(|(line, row)| {
        let mut cells = row.split(',').map(str::trim);
        let mut next = || -> Result<usize> {
            cells
                .next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| Error::parse(path, format!("line {line}: bad pair index")))
        };
        Ok(PairIndex::new(next()?, next()?))
    })
    .collect()
}

/// Reads an `i,j,<column>` CSV such as a labels or predictions file.
pub fn read_pair_values(path: &Path, column: &str) -> Result<Vec<(PairIndex, f64)>> {
    let text = read_text(path)?;
    let mut rows = data_lines(&text);
    let want = format!("i,j,{column}");
    match rows.next() {
        Some((_, h)) if h.replace(' ', "") == want => {}
        _ => return Err(Error::parse(path, format!("expected header '{want}'"))),
    }
    rows.map(|(line, row)| {
        let cells: Vec<&str> = row.split(',').map(str::trim).collect();
        if cells.len() != 3 {
            return Err(Error::parse(path, format!("line {line}: expected 3 columns")));
        }
        let index = |c: &str| {
            c.parse::<usize>()
                .map_err(|_| Error::parse(path, format!("line {line}: bad pair index '{c}'")))
        };
        let pair = PairIndex::new(index(cells[0])?, index(cells[1])?);
        Ok((pair, parse_f64(path, line, cells[2])?))
    })
    .collect()
}

/// `i,j,<column>` CSV body with shortest round-trip values.
pub fn format_pair_values(pairs: &[PairIndex], values: &[f64], column: &str) -> String {
    let mut out = format!("i,j,{column}\n");
    for (p, v) in pairs.iter().zip(values) {
        out.push_str(&format!("{},{},{v:?}\n", p.i, p.j));
    }
    out
}

pub fn format_pairs(pairs: &[PairIndex]) -> String {
    let mut out = String::from("i,j\n");
    for p in pairs {
        out.push_str(&format!("{},{}\n", p.i, p.j));
    }
    out
}
