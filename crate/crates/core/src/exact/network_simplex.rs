//! Primal network simplex for the dense transportation problem.
//!
//! Spanning-tree representation with parent/thread/successor-count lists and
//! a block-search pivot rule. Every node starts attached to an artificial
//! root: sources through zero-cost arcs, sinks through arcs of prohibitive
//! cost, so the initial tree is feasible and the artificial arcs are driven
//! out by optimality. Arcs are uncapacitated, so non-tree arcs always sit at
//! their lower bound.

use crate::error::{Error, Result};

const NONE: usize = usize::MAX;
const STATE_TREE: i8 = 0;
const STATE_LOWER: i8 = 1;
const DIR_UP: i8 = 1;
const DIR_DOWN: i8 = -1;

/// Optimal basic flows: `(source, sink, mass)` for every positive tree arc.
pub(crate) struct Solution {
    pub entries: Vec<(usize, usize, f64)>,
    pub iterations: usize,
}

struct Simplex<'a> {
    n: usize,
    m: usize,
    arc_num: usize,
    root: usize,

    cost: &'a [f64],
    art_cost: Vec<f64>,
    art_source: Vec<usize>,
    art_target: Vec<usize>,
    flow: Vec<f64>,
    state: Vec<i8>,

    parent: Vec<usize>,
    pred: Vec<usize>,
    thread: Vec<usize>,
    rev_thread: Vec<usize>,
    succ_num: Vec<usize>,
    last_succ: Vec<usize>,
    pred_dir: Vec<i8>,
    pi: Vec<f64>,
    dirty_revs: Vec<usize>,

    in_arc: usize,
    join: usize,
    u_in: usize,
    v_in: usize,
    u_out: usize,
    delta: f64,

    next_arc: usize,
    block_size: usize,
    eps: f64,
}

impl<'a> Simplex<'a> {
    fn new(a: &[f64], b: &[f64], cost: &'a [f64]) -> Self {
        let (n, m) = (a.len(), b.len());
        let node_num = n + m;
        let arc_num = n * m;
        let root = node_num;
        let cmax = cost.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
        let big = (cmax + 1.0) * node_num as f64;

        let mut s = Simplex {
            n,
            m,
            arc_num,
            root,
            cost,
            art_cost: vec![0.0; node_num],
            art_source: vec![0; node_num],
            art_target: vec![0; node_num],
            flow: vec![0.0; arc_num + node_num],
            state: vec![STATE_LOWER; arc_num + node_num],
            parent: vec![NONE; node_num + 1],
            pred: vec![NONE; node_num + 1],
            thread: vec![0; node_num + 1],
            rev_thread: vec![0; node_num + 1],
            succ_num: vec![1; node_num + 1],
            last_succ: vec![0; node_num + 1],
            pred_dir: vec![DIR_UP; node_num + 1],
            pi: vec![0.0; node_num + 1],
            dirty_revs: Vec::new(),
            in_arc: 0,
            join: 0,
            u_in: 0,
            v_in: 0,
            u_out: 0,
            delta: 0.0,
            next_arc: 0,
            block_size: ((arc_num as f64).sqrt() as usize).max(10),
            eps: 1e-13 * cmax.max(f64::MIN_POSITIVE),
        };

        s.thread[root] = 0;
        s.rev_thread[0] = root;
        s.succ_num[root] = node_num + 1;
        s.last_succ[root] = root - 1;
        for u in 0..node_num {
            let e = arc_num + u;
            s.parent[u] = root;
            s.pred[u] = e;
            s.thread[u] = u + 1;
            s.rev_thread[u + 1] = u;
            s.succ_num[u] = 1;
            s.last_succ[u] = u;
            s.state[e] = STATE_TREE;
            let supply = if u < n { a[u] } else { -b[u - n] };
            if supply >= 0.0 {
                s.pred_dir[u] = DIR_UP;
                s.pi[u] = 0.0;
                s.art_source[u] = u;
                s.art_target[u] = root;
                s.flow[e] = supply;
                s.art_cost[u] = 0.0;
            } else {
                s.pred_dir[u] = DIR_DOWN;
                s.pi[u] = big;
                s.art_source[u] = root;
                s.art_target[u] = u;
                s.flow[e] = -supply;
                s.art_cost[u] = big;
            }
        }
        s
    }

    #[inline]
    fn source(&self, e: usize) -> usize {
        if e < self.arc_num {
            e / self.m
        } else {
            self.art_source[e - self.arc_num]
        }
    }

    #[inline]
    fn target(&self, e: usize) -> usize {
        if e < self.arc_num {
            self.n + e % self.m
        } else {
            self.art_target[e - self.arc_num]
        }
    }

    #[inline]
    fn arc_cost(&self, e: usize) -> f64 {
        if e < self.arc_num {
            self.cost[e]
        } else {
            self.art_cost[e - self.arc_num]
        }
    }

    /// Block search over the original arcs for the most negative reduced
    /// cost within the first block that contains one.
    fn find_entering_arc(&mut self) -> bool {
        let (m, n) = (self.m, self.n);
        let mut min = -self.eps;
        let mut found = NONE;
        let mut cnt = self.block_size;
        let total = self.arc_num;
        let start = self.next_arc;
        let mut e = start;
        for _ in 0..total {
            let i = e / m;
            let j = n + e % m;
            let c = self.state[e] as f64 * (self.cost[e] + self.pi[i] - self.pi[j]);
            if c < min {
                min = c;
                found = e;
            }
            e += 1;
            if e == total {
                e = 0;
            }
            cnt -= 1;
            if cnt == 0 {
                if found != NONE {
                    break;
                }
                cnt = self.block_size;
            }
        }
        if found == NONE {
            return false;
        }
        self.in_arc = found;
        self.next_arc = e;
        true
    }

    fn find_join_node(&mut self) {
        let mut u = self.source(self.in_arc);
        let mut v = self.target(self.in_arc);
        while u != v {
            if self.succ_num[u] < self.succ_num[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        self.join = u;
    }

    /// Finds the blocking arc of the cycle closed by the entering arc.
    /// Returns false when the cycle is unbounded.
    fn find_leaving_arc(&mut self) -> bool {
        // non-tree arcs are always at their lower bound
        let first = self.source(self.in_arc);
        let second = self.target(self.in_arc);
        self.delta = f64::INFINITY;
        let mut result = 0;

        let mut u = first;
        while u != self.join {
            if self.pred_dir[u] == DIR_UP {
                let d = self.flow[self.pred[u]].max(0.0);
                if d < self.delta {
                    self.delta = d;
                    self.u_out = u;
                    result = 1;
                }
            }
            u = self.parent[u];
        }
        let mut u = second;
        while u != self.join {
            if self.pred_dir[u] == DIR_DOWN {
                let d = self.flow[self.pred[u]].max(0.0);
                if d <= self.delta {
                    self.delta = d;
                    self.u_out = u;
                    result = 2;
                }
            }
            u = self.parent[u];
        }
        if result == 1 {
            self.u_in = first;
            self.v_in = second;
        } else {
            self.u_in = second;
            self.v_in = first;
        }
        result != 0
    }

    fn change_flow(&mut self) {
        let val = self.delta;
        if val > 0.0 {
            self.flow[self.in_arc] += val;
            let mut u = self.source(self.in_arc);
            while u != self.join {
                self.flow[self.pred[u]] -= self.pred_dir[u] as f64 * val;
                u = self.parent[u];
            }
            let mut u = self.target(self.in_arc);
            while u != self.join {
                self.flow[self.pred[u]] += self.pred_dir[u] as f64 * val;
                u = self.parent[u];
            }
        }
        self.state[self.in_arc] = STATE_TREE;
        let out = self.pred[self.u_out];
        self.state[out] = STATE_LOWER;
        self.flow[out] = 0.0;
    }

    fn update_tree_structure(&mut self) {
        let u_in = self.u_in;
        let v_in = self.v_in;
        let u_out = self.u_out;
        let join = self.join;

        let old_rev_thread = self.rev_thread[u_out];
        let old_succ_num = self.succ_num[u_out];
        let old_last_succ = self.last_succ[u_out];
        let v_out = self.parent[u_out];

        if u_in == u_out {
            self.parent[u_in] = v_in;
            self.pred[u_in] = self.in_arc;
            self.pred_dir[u_in] = if u_in == self.source(self.in_arc) {
                DIR_UP
            } else {
                DIR_DOWN
            };

            if self.thread[v_in] != u_out {
                let mut after = self.thread[old_last_succ];
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
                after = self.thread[v_in];
                self.thread[v_in] = u_out;
                self.rev_thread[u_out] = v_in;
                self.thread[old_last_succ] = after;
                self.rev_thread[after] = old_last_succ;
            }
        } else {
            let thread_continue = if old_rev_thread == v_in {
                self.thread[old_last_succ]
            } else {
                self.thread[v_in]
            };

            // Re-hang the stem nodes between u_in and u_out.
            let mut stem = u_in;
            let mut par_stem = v_in;
            let mut last = self.last_succ[u_in];
            let mut after = self.thread[last];
            self.thread[v_in] = u_in;
            self.dirty_revs.clear();
            self.dirty_revs.push(v_in);
            while stem != u_out {
                let next_stem = self.parent[stem];
                self.thread[last] = next_stem;
                self.dirty_revs.push(last);

                let before = self.rev_thread[stem];
                self.thread[before] = after;
                self.rev_thread[after] = before;

                self.parent[stem] = par_stem;
                par_stem = stem;
                stem = next_stem;

                last = if self.last_succ[stem] == self.last_succ[par_stem] {
                    self.rev_thread[par_stem]
                } else {
                    self.last_succ[stem]
                };
                after = self.thread[last];
            }
            self.parent[u_out] = par_stem;
            self.thread[last] = thread_continue;
            self.rev_thread[thread_continue] = last;
            self.last_succ[u_out] = last;

            if old_rev_thread != v_in {
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
            }

            for k in 0..self.dirty_revs.len() {
                let u = self.dirty_revs[k];
                let t = self.thread[u];
                self.rev_thread[t] = u;
            }

            // Reverse pred/pred_dir and fix succ_num/last_succ along the stem.
            let mut tmp_sc = 0usize;
            let tmp_ls = self.last_succ[u_out];
            let mut u = u_out;
            let mut p = self.parent[u];
            while u != u_in {
                self.pred[u] = self.pred[p];
                self.pred_dir[u] = -self.pred_dir[p];
                tmp_sc = tmp_sc + self.succ_num[u] - self.succ_num[p];
                self.succ_num[u] = tmp_sc;
                self.last_succ[p] = tmp_ls;
                u = p;
                p = self.parent[u];
            }
            self.pred[u_in] = self.in_arc;
            self.pred_dir[u_in] = if u_in == self.source(self.in_arc) {
                DIR_UP
            } else {
                DIR_DOWN
            };
            self.succ_num[u_in] = old_succ_num;
        }

        let up_limit_out = if self.last_succ[join] == v_in { join } else { NONE };
        let last_succ_out = self.last_succ[u_out];
        let mut u = v_in;
        while u != NONE && self.last_succ[u] == v_in {
            self.last_succ[u] = last_succ_out;
            u = self.parent[u];
        }

        if join != old_rev_thread && v_in != old_rev_thread {
            let mut u = v_out;
            while u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = old_rev_thread;
                u = self.parent[u];
            }
        } else if last_succ_out != old_last_succ {
            let mut u = v_out;
            while u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = last_succ_out;
                u = self.parent[u];
            }
        }

        let mut u = v_in;
        while u != join {
            self.succ_num[u] += old_succ_num;
            u = self.parent[u];
        }
        let mut u = v_out;
        while u != join {
            self.succ_num[u] -= old_succ_num;
            u = self.parent[u];
        }
    }

    fn update_potential(&mut self) {
        let sigma = self.pi[self.v_in]
            - self.pi[self.u_in]
            - self.pred_dir[self.u_in] as f64 * self.arc_cost(self.in_arc);
        let end = self.thread[self.last_succ[self.u_in]];
        let mut u = self.u_in;
        while u != end {
            self.pi[u] += sigma;
            u = self.thread[u];
        }
    }

    /// Recomputes every potential from the tree, discarding the rounding
    /// drift accumulated by incremental updates.
    fn refresh_potentials(&mut self) {
        self.pi[self.root] = 0.0;
        let mut u = self.thread[self.root];
        while u != self.root {
            let e = self.pred[u];
            let p = self.parent[u];
            // tree arcs have zero reduced cost: pi[target] = pi[source] + cost
            self.pi[u] = self.pi[p] - self.pred_dir[u] as f64 * self.arc_cost(e);
            u = self.thread[u];
        }
    }

    fn run(&mut self, max_iter: usize) -> Result<usize> {
        let refresh_every = (self.n + self.m).max(64);
        let mut iterations = 0;
        loop {
            if !self.find_entering_arc() {
                self.refresh_potentials();
                if !self.find_entering_arc() {
                    return Ok(iterations);
                }
            }
            self.find_join_node();
            if !self.find_leaving_arc() {
                return Err(Error::Numerical(
                    "network simplex found an unbounded cycle".into(),
                ));
            }
            self.change_flow();
            self.update_tree_structure();
            self.update_potential();
            iterations += 1;
            if iterations % refresh_every == 0 {
                self.refresh_potentials();
            }
            if iterations >= max_iter {
                return Err(Error::Numerical(format!(
                    "network simplex did not converge in {max_iter} pivots"
                )));
            }
        }
    }
}

/// Solves `min Σ c_ij γ_ij` over couplings of `a` and `b`; `cost` is
/// row-major `a.len() × b.len()`. Both marginals must carry equal mass.
pub(crate) fn solve(a: &[f64], b: &[f64], cost: &[f64]) -> Result<Solution> {
    debug_assert_eq!(cost.len(), a.len() * b.len());
    let mut s = Simplex::new(a, b, cost);
    let max_iter = (50 * s.arc_num).max(1_000_000);
    let iterations = s.run(max_iter)?;

    let residual = (s.arc_num..s.arc_num + s.n + s.m)
        .map(|e| s.flow[e].abs())
        .fold(0.0, f64::max);
    if residual > 1e-9 {
        return Err(Error::Numerical(format!(
            "artificial flow {residual:e} left after network simplex"
        )));
    }

    let mut entries: Vec<(usize, usize, f64)> = (0..s.n + s.m)
        .map(|u| s.pred[u])
        .filter(|&e| e < s.arc_num && s.flow[e] > 0.0)
        .map(|e| (e / s.m, e % s.m, s.flow[e]))
        .collect();
    entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
    Ok(Solution {
        entries,
        iterations,
    })
}
