//! Exact Wasserstein distances between discrete measures.

mod network_simplex;

use crate::error::{check_order, Error, Result};
use crate::measures::DiscreteMeasure;
use crate::ot1d::{ground_cost, SparsePlan};

/// Largest dense cost matrix the exact solver accepts.
pub const MAX_COST_ENTRIES: usize = 50_000_000;

/// Optimal plan and its cost `W_p^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactOtResult {
    pub cost_p: f64,
    pub plan: SparsePlan,
    /// Simplex pivots performed.
    pub iterations: usize,
}

impl ExactOtResult {
    /// `W_p = (W_p^p)^{1/p}`.
    pub fn distance(&self, p: f64) -> f64 {
        self.cost_p.max(0.0).powf(1.0 / p)
    }
}

fn check_pair(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<()> {
    check_order(p)?;
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            got: nu.dim(),
        });
    }
    Ok(())
}

/// Dense row-major cost matrix `C_ij = ‖x_i − y_j‖_p^p`.
pub fn cost_matrix(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Vec<f64> {
    let mut c = Vec::with_capacity(mu.len() * nu.len());
    for x in mu.points() {
        c.extend(nu.points().map(|y| ground_cost(x, y, p)));
    }
    c
}

/// Optimal transport between `mu` and `nu` for the ground cost
/// `‖x − y‖_p^p`, solved exactly with the network simplex.
pub fn exact_wasserstein(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<ExactOtResult> {
    check_pair(mu, nu, p)?;
    let (n, m) = (mu.len(), nu.len());
    if n.saturating_mul(m) > MAX_COST_ENTRIES {
        return Err(Error::TooLarge {
            n,
            m,
            limit: MAX_COST_ENTRIES,
        });
    }
    if mu.bit_identical(nu) {
        let entries = mu
            .weights()
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(i, &w)| (i, i, w))
            .collect();
        return Ok(ExactOtResult {
            cost_p: 0.0,
            plan: SparsePlan { entries },
            iterations: 0,
        });
    }

    let cost = cost_matrix(mu, nu, p);
    let solution = network_simplex::solve(mu.weights(), nu.weights(), &cost)?;
    let plan = SparsePlan {
        entries: solution.entries,
    };
    let err = plan.marginal_error(mu.weights(), nu.weights());
    if err > 1e-9 {
        return Err(Error::Numerical(format!(
            "exact plan violates marginals by {err:e}"
        )));
    }
    let cost_p = plan.cost(|i, j| cost[i * m + j]);
    Ok(ExactOtResult {
        cost_p,
        plan,
        iterations: solution.iterations,
    })
}

/// `W_p^p` by enumerating all `n!` permutations. Only for uniform measures
/// of equal size `n ≤ 8`, where some permutation is an optimal coupling.
pub fn brute_force_wasserstein(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<f64> {
    check_pair(mu, nu, p)?;
    let n = mu.len();
    if n != nu.len() || n > 8 || !mu.is_uniform() || !nu.is_uniform() {
        return Err(Error::InvalidArgument(
            "brute force needs uniform measures of equal size n <= 8".into(),
        ));
    }
    let cost = cost_matrix(mu, nu, p);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, &mut |pi| {
        let c: f64 = pi.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
        best = best.min(c);
    });
    Ok(best / n as f64)
}

fn permute(v: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        visit(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, visit);
        v.swap(k, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ot1d::{slice_cost, w1d_cost, ProjectedMeasure};
    use crate::sampling::{sample_directions, SeedSpec};
    use rand::Rng;

    fn random_cloud(rng: &mut impl Rng, n: usize, d: usize, uniform: bool) -> DiscreteMeasure {
        let x: Vec<f64> = (0..n * d).map(|_| rng.random_range(-3.0..3.0)).collect();
        if uniform {
            DiscreteMeasure::new(x, d, None).unwrap()
        } else {
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
            DiscreteMeasure::from_masses(x, d, w).unwrap()
        }
    }

    #[test]
    fn identical_measures_cost_nothing() {
        let mut rng = SeedSpec::new(1, 0).rng();
        let a = random_cloud(&mut rng, 7, 3, false);
        let r = exact_wasserstein(&a, &a.clone(), 2.0).unwrap();
        assert_eq!(r.cost_p, 0.0);
        assert!(r.plan.marginal_error(a.weights(), a.weights()) < 1e-12);
        // same points in another order still go through the solver
        let b = a.map_points(|x| x.to_vec()).unwrap();
        assert_eq!(exact_wasserstein(&a, &b, 2.0).unwrap().cost_p, 0.0);
    }

    #[test]
    fn square_corners_example() {
        let a = DiscreteMeasure::from_points(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let b = DiscreteMeasure::from_points(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((exact_wasserstein(&a, &b, 2.0).unwrap().cost_p - 1.0).abs() < 1e-12);
        assert!((brute_force_wasserstein(&a, &b, 2.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_atoms() {
        let a = DiscreteMeasure::dirac(&[0.0, 0.0]).unwrap();
        let b = DiscreteMeasure::dirac(&[3.0, 4.0]).unwrap();
        let r = exact_wasserstein(&a, &b, 2.0).unwrap();
        assert!((r.cost_p - 25.0).abs() < 1e-12);
        assert!((r.distance(2.0) - 5.0).abs() < 1e-12);
        assert_eq!(brute_force_wasserstein(&a, &b, 1.0).unwrap(), 7.0);
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = SeedSpec::new(2, 0).rng();
        for trial in 0..200 {
            let n = 1 + trial % 6;
            let d = 1 + trial % 4;
            let p = [1.0, 2.0, 1.5][trial % 3];
            let a = random_cloud(&mut rng, n, d, true);
            let b = random_cloud(&mut rng, n, d, true);
            let exact = exact_wasserstein(&a, &b, p).unwrap().cost_p;
            let brute = brute_force_wasserstein(&a, &b, p).unwrap();
            assert!((exact - brute).abs() <= 1e-9, "trial {trial}: {exact} vs {brute}");
        }
    }

    #[test]
    fn matches_quantile_formula_in_1d() {
        let mut rng = SeedSpec::new(3, 0).rng();
        for trial in 0..100 {
            let a = random_cloud(&mut rng, 1 + trial % 17, 1, trial % 2 == 0);
            let b = random_cloud(&mut rng, 1 + trial % 11, 1, false);
            let pa = ProjectedMeasure::from_positions(a.supports().to_vec(), a.weights().to_vec());
            let pb = ProjectedMeasure::from_positions(b.supports().to_vec(), b.weights().to_vec());
            let q = w1d_cost(&pa, &pb, 2.0).unwrap();
            let exact = exact_wasserstein(&a, &b, 2.0).unwrap().cost_p;
            assert!((exact - q).abs() <= 1e-9, "trial {trial}: {exact} vs {q}");
        }
    }

    #[test]
    fn symmetric_and_metric() {
        let mut rng = SeedSpec::new(4, 0).rng();
        for _ in 0..30 {
            let a = random_cloud(&mut rng, 9, 2, false);
            let b = random_cloud(&mut rng, 6, 2, false);
            let c = random_cloud(&mut rng, 8, 2, true);
            let ab = exact_wasserstein(&a, &b, 2.0).unwrap();
            let ba = exact_wasserstein(&b, &a, 2.0).unwrap();
            assert!((ab.cost_p - ba.cost_p).abs() <= 1e-9);
            let bc = exact_wasserstein(&b, &c, 2.0).unwrap().distance(2.0);
            let ac = exact_wasserstein(&a, &c, 2.0).unwrap().distance(2.0);
            assert!(ac <= ab.distance(2.0) + bc + 1e-7);
        }
    }

    #[test]
    fn plan_is_consistent() {
        let mut rng = SeedSpec::new(5, 0).rng();
        for _ in 0..20 {
            let a = random_cloud(&mut rng, 25, 3, false);
            let b = random_cloud(&mut rng, 40, 3, false);
            let r = exact_wasserstein(&a, &b, 2.0).unwrap();
            assert!(r.plan.marginal_error(a.weights(), b.weights()) <= 1e-9);
            assert!(r.plan.len() <= a.len() + b.len() - 1);
            let c = cost_matrix(&a, &b, 2.0);
            let again = r.plan.cost(|i, j| c[i * b.len() + j]);
            assert!((again - r.cost_p).abs() <= 1e-9 * r.cost_p.max(1.0));
        }
    }

    #[test]
    fn sandwiched_by_slices() {
        let mut rng = SeedSpec::new(6, 0).rng();
        for inst in 0..10 {
            let a = random_cloud(&mut rng, 12, 3, inst % 2 == 0);
            let b = random_cloud(&mut rng, 15, 3, false);
            let w = exact_wasserstein(&a, &b, 2.0).unwrap().cost_p;
            for th in sample_directions(3, 100, &SeedSpec::new(7, inst)).unwrap() {
                let s = slice_cost(&a, &b, &th, 2.0, true).unwrap();
                assert!(s.projected <= w + 1e-9);
                assert!(w <= s.lifted.unwrap() + 1e-9);
            }
        }
    }

    #[test]
    fn moderately_sized_problem() {
        let mut rng = SeedSpec::new(8, 0).rng();
        let a = random_cloud(&mut rng, 300, 5, true);
        let b = random_cloud(&mut rng, 280, 5, false);
        let r = exact_wasserstein(&a, &b, 2.0).unwrap();
        assert!(r.plan.marginal_error(a.weights(), b.weights()) <= 1e-9);
        let th = sample_directions(5, 20, &SeedSpec::new(9, 0)).unwrap();
        for t in &th {
            let s = slice_cost(&a, &b, t, 2.0, true).unwrap();
            assert!(s.projected <= r.cost_p + 1e-9 && r.cost_p <= s.lifted.unwrap() + 1e-9);
        }
    }

    #[test]
    fn argument_checks() {
        let a = DiscreteMeasure::dirac(&[0.0]).unwrap();
        let b = DiscreteMeasure::dirac(&[0.0, 1.0]).unwrap();
        assert!(matches!(
            exact_wasserstein(&a, &b, 2.0),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(exact_wasserstein(&a, &a, 0.5), Err(Error::InvalidOrder(_))));
        let c = DiscreteMeasure::new(vec![0.0, 1.0], 1, Some(vec![0.25, 0.75])).unwrap();
        assert!(brute_force_wasserstein(&c, &c, 2.0).is_err());
        let nine = DiscreteMeasure::new((0..9).map(f64::from).collect(), 1, None).unwrap();
        assert!(brute_force_wasserstein(&nine, &nine, 2.0).is_err());
    }
}
