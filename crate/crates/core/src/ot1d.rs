//! One-dimensional optimal transport along a direction.
//!
//! Projecting both measures onto `θ` and matching quantiles gives the
//! monotone plan between the projections (north-west-corner rule on the
//! sorted supports). Its cost on the line is the projected cost
//! `W_p^p(P_θ♯µ, P_θ♯ν)`, a lower bound of `W_p^p(µ, ν)`. Reading the same
//! plan back in the ambient space gives the lifted cost, an upper bound.

use crate::error::{check_order, Error, Result};
use crate::measures::DiscreteMeasure;
use crate::sampling::Direction;

/// `P_θ♯µ`: projected positions with the source weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedMeasure {
    pub positions: Vec<f64>,
    pub weights: Vec<f64>,
    /// Indices ordering `positions` ascending; ties by original index.
    pub sort_permutation: Vec<usize>,
}

impl ProjectedMeasure {
    /// Projection of an already-1D set of positions.
    pub fn from_positions(positions: Vec<f64>, weights: Vec<f64>) -> Self {
        let mut keyed: Vec<(f64, usize)> = positions.iter().copied().zip(0..).collect();
        keyed.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Self {
            positions,
            weights,
            sort_permutation: keyed.into_iter().map(|(_, i)| i).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Transport plan stored as `(source, target, mass)` triples.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparsePlan {
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparsePlan {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn row_sums(&self, n: usize) -> Vec<f64> {
        let mut s = vec![0.0; n];
        for &(i, _, m) in &self.entries {
            s[i] += m;
        }
        s
    }

    pub fn col_sums(&self, m: usize) -> Vec<f64> {
        let mut s = vec![0.0; m];
        for &(_, j, w) in &self.entries {
            s[j] += w;
        }
        s
    }

    /// `Σ mass · cost(i, j)`.
    pub fn cost(&self, cost: impl Fn(usize, usize) -> f64) -> f64 {
        self.entries.iter().map(|&(i, j, m)| m * cost(i, j)).sum()
    }

    /// Largest marginal violation against the given weights.
    pub fn marginal_error(&self, a: &[f64], b: &[f64]) -> f64 {
        let rows = self.row_sums(a.len());
        let cols = self.col_sums(b.len());
        rows.iter()
            .zip(a)
            .chain(cols.iter().zip(b))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}

/// `|x|^p` with fast paths for the common orders.
#[inline]
pub(crate) fn pow_abs(x: f64, p: f64) -> f64 {
    if p == 2.0 {
        x * x
    } else if p == 1.0 {
        x.abs()
    } else {
        x.abs().powf(p)
    }
}

/// Ground cost `‖x − y‖_p^p`.
#[inline]
pub fn ground_cost(x: &[f64], y: &[f64], p: f64) -> f64 {
    if p == 2.0 {
        x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
    } else {
        x.iter().zip(y).map(|(a, b)| pow_abs(a - b, p)).sum()
    }
}

fn check_dims(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            got: nu.dim(),
        });
    }
    Ok(())
}

/// `P_θ♯µ` with positions `⟨θ, x_i⟩`.
pub fn project(measure: &DiscreteMeasure, theta: &Direction) -> Result<ProjectedMeasure> {
    if theta.dim() != measure.dim() {
        return Err(Error::DimensionMismatch {
            expected: measure.dim(),
            got: theta.dim(),
        });
    }
    let positions = measure.points().map(|x| theta.dot(x)).collect();
    Ok(ProjectedMeasure::from_positions(
        positions,
        measure.weights().to_vec(),
    ))
}

/// North-west-corner walk over the sorted weight profiles, calling `emit`
/// for every positive-mass block in quantile order.
fn quantile_walk(mu: &ProjectedMeasure, nu: &ProjectedMeasure, mut emit: impl FnMut(usize, usize, f64)) {
    let (sa, sb) = (&mu.sort_permutation, &nu.sort_permutation);
    if sa.is_empty() || sb.is_empty() {
        return;
    }
    let (mut a, mut b) = (0, 0);
    let mut ra = mu.weights[sa[0]];
    let mut rb = nu.weights[sb[0]];
    loop {
        if ra <= rb {
            if ra > 0.0 {
                emit(sa[a], sb[b], ra);
            }
            rb -= ra;
            a += 1;
            if a == sa.len() {
                break;
            }
            ra = mu.weights[sa[a]];
        } else {
            if rb > 0.0 {
                emit(sa[a], sb[b], rb);
            }
            ra -= rb;
            b += 1;
            if b == sb.len() {
                break;
            }
            rb = nu.weights[sb[b]];
        }
    }
}

/// `W_p^p` between two projected measures.
pub fn w1d_cost(mu: &ProjectedMeasure, nu: &ProjectedMeasure, p: f64) -> Result<f64> {
    check_order(p)?;
    let mut cost = 0.0;
    quantile_walk(mu, nu, |i, j, m| {
        cost += m * pow_abs(mu.positions[i] - nu.positions[j], p)
    });
    Ok(cost)
}

/// The monotone optimal plan between two projected measures, in original
/// index space.
pub fn w1d_plan(mu: &ProjectedMeasure, nu: &ProjectedMeasure) -> SparsePlan {
    let mut entries = Vec::with_capacity(mu.len() + nu.len());
    quantile_walk(mu, nu, |i, j, m| entries.push((i, j, m)));
    SparsePlan { entries }
}

/// Projected and lifted costs along one direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceCost {
    /// `W_p^p(P_θ♯µ, P_θ♯ν)`.
    pub projected: f64,
    /// Cost of the lifted plan in the ambient space; `None` when not asked.
    pub lifted: Option<f64>,
}

/// Projections of `measure` onto `theta` as `(position, index)`, ascending,
/// ties by index.
fn sorted_projection(measure: &DiscreteMeasure, theta: &Direction) -> Vec<(f64, usize)> {
    let mut keyed: Vec<(f64, usize)> = measure.points().map(|x| theta.dot(x)).zip(0..).collect();
    keyed.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keyed
}

/// Same walk as [`quantile_walk`] on pre-sorted projections; `emit`
/// receives the original indices, the block mass and the projected gap.
fn sorted_walk(
    sa: &[(f64, usize)],
    wa: &[f64],
    sb: &[(f64, usize)],
    wb: &[f64],
    mut emit: impl FnMut(usize, usize, f64, f64),
) {
    if sa.is_empty() || sb.is_empty() {
        return;
    }
    let (mut a, mut b) = (0, 0);
    let mut ra = wa[sa[0].1];
    let mut rb = wb[sb[0].1];
    loop {
        let gap = sa[a].0 - sb[b].0;
        if ra <= rb {
            if ra > 0.0 {
                emit(sa[a].1, sb[b].1, ra, gap);
            }
            rb -= ra;
            a += 1;
            if a == sa.len() {
                break;
            }
            ra = wa[sa[a].1];
        } else {
            if rb > 0.0 {
                emit(sa[a].1, sb[b].1, rb, gap);
            }
            ra -= rb;
            b += 1;
            if b == sb.len() {
                break;
            }
            rb = wb[sb[b].1];
        }
    }
}

/// Evaluates one slice with a single sort per measure and a single plan walk.
pub fn slice_cost(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    theta: &Direction,
    p: f64,
    with_lifted: bool,
) -> Result<SliceCost> {
    check_order(p)?;
    check_dims(mu, nu)?;
    if theta.dim() != mu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            got: theta.dim(),
        });
    }
    let sa = sorted_projection(mu, theta);
    let sb = sorted_projection(nu, theta);
    let mut projected = 0.0;
    let mut lifted = 0.0;
    sorted_walk(&sa, mu.weights(), &sb, nu.weights(), |i, j, m, gap| {
        projected += m * pow_abs(gap, p);
        if with_lifted {
            lifted += m * ground_cost(mu.point(i), nu.point(j), p);
        }
    });
    Ok(SliceCost {
        projected,
        lifted: with_lifted.then_some(lifted),
    })
}

/// Lifted cost `Σ π^θ_ij ‖x_i − y_j‖_p^p` of the plan induced by `θ`.
pub fn lifted_cost(mu: &DiscreteMeasure, nu: &DiscreteMeasure, theta: &Direction, p: f64) -> Result<f64> {
    Ok(slice_cost(mu, nu, theta, p, true)?
        .lifted
        .expect("lifted cost requested"))
}

/// Lifted plan `π^θ` together with the projections it came from.
pub fn lifted_plan(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    theta: &Direction,
) -> Result<(SparsePlan, ProjectedMeasure, ProjectedMeasure)> {
    check_dims(mu, nu)?;
    let pm = project(mu, theta)?;
    let pn = project(nu, theta)?;
    Ok((w1d_plan(&pm, &pn), pm, pn))
}
