//! Random left-regular bipartite expanders (people on the left, tests on the
//! right), exhaustive expansion checks and the binary design matrix.

use std::sync::atomic::{AtomicBool, Ordering};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TestMatrix;

/// Default number of resampling attempts when looking for a verified graph.
pub const DEFAULT_MAX_ATTEMPTS: usize = 100;

/// Left-regular bipartite graph. `adjacency[p]` holds the sorted, distinct
/// right neighbors of left vertex `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    n_left: usize,
    m_right: usize,
    k: usize,
    adjacency: Vec<Vec<usize>>,
}

impl BipartiteGraph {
    pub fn new(m_right: usize, k: usize, adjacency: Vec<Vec<usize>>) -> Result<Self> {
        if k == 0 || k > m_right {
            return Err(Error::parameter(format!(
                "degree k={k} must lie in [1, {m_right}]"
            )));
        }
        if adjacency.is_empty() {
            return Err(Error::parameter("graph needs at least one left vertex"));
        }
        let mut adjacency = adjacency;
        for (p, nbrs) in adjacency.iter_mut().enumerate() {
            nbrs.sort_unstable();
            nbrs.dedup();
            if nbrs.len() != k {
                return Err(Error::instance(format!(
                    "left vertex {} has {} distinct neighbors, expected {k}",
                    p + 1,
                    nbrs.len()
                )));
            }
            if nbrs.last().is_some_and(|&t| t >= m_right) {
                return Err(Error::instance(format!(
                    "left vertex {} has a neighbor outside [1, {m_right}]",
                    p + 1
                )));
            }
        }
        Ok(Self {
            n_left: adjacency.len(),
            m_right,
            k,
            adjacency,
        })
    }

    /// Reads a graph back from its incidence matrix (tests x people).
    pub fn from_binary_matrix(matrix: &TestMatrix) -> Result<Self> {
        matrix.require_binary()?;
        let adjacency: Vec<Vec<usize>> = (0..matrix.cols())
            .map(|j| matrix.column_support(j))
            .collect();
        let k = adjacency[0].len();
        Self::new(matrix.rows(), k, adjacency)
    }

    pub fn n_left(&self) -> usize {
        self.n_left
    }

    pub fn m_right(&self) -> usize {
        self.m_right
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    pub fn neighbors_of(&self, p: usize) -> &[usize] {
        &self.adjacency[p]
    }
}

/// Expansion parameters of an `(alpha, beta)`-expander with left degree `k`
/// and `m` right vertices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpanderParams {
    pub alpha: f64,
    pub beta: f64,
    pub k: usize,
    pub m: usize,
    /// Largest left-set size covered by the expansion guarantee, `floor(alpha * n)`.
    pub max_set: usize,
}

impl ExpanderParams {
    /// Concrete constants for population `n` and at most `d` defectives:
    /// `alpha = (2d+2)/n`, `k = ceil(log2(1/alpha))` (at least 1) and
    /// `m = ceil(8 e^2 k (2d+2))`.
    ///
    /// `beta` is set just above `3k/4`: any integer neighbor count meeting
    /// `beta * |P|` for `|P| <= max_set` is strictly greater than `3k|P|/4`.
    pub fn for_instance(n: usize, d: usize) -> Result<Self> {
        let max_set = 2 * d + 2;
        if d == 0 {
            return Err(Error::parameter("d must be at least 1"));
        }
        if n < max_set {
            return Err(Error::parameter(format!(
                "expander needs n >= 2d+2 = {max_set}, got n={n}"
            )));
        }
        // smallest k >= 1 with 2^k * (2d+2) >= n
        let mut k = 1usize;
        while (max_set as u128) << k < n as u128 {
            k += 1;
        }
        let m = (8.0 * std::f64::consts::E.powi(2) * (k * max_set) as f64).ceil() as usize;
        if m < k {
            return Err(Error::parameter(format!("m={m} is smaller than k={k}")));
        }
        Ok(Self {
            alpha: max_set as f64 / n as f64,
            beta: Self::strict_beta(k, max_set),
            k,
            m,
            max_set,
        })
    }

    pub(crate) fn strict_beta(k: usize, max_set: usize) -> f64 {
        0.75 * k as f64 + 1.0 / (8.0 * max_set as f64)
    }
}

/// Draws each left vertex's `k` neighbors uniformly without replacement.
pub fn sample_graph<R: Rng + ?Sized>(
    n: usize,
    params: &ExpanderParams,
    rng: &mut R,
) -> Result<BipartiteGraph> {
    let adjacency = (0..n)
        .map(|_| {
            let mut nbrs = index::sample(rng, params.m, params.k).into_vec();
            nbrs.sort_unstable();
            nbrs
        })
        .collect();
    BipartiteGraph::new(params.m, params.k, adjacency)
}

/// One random left-regular graph for `(n, d)`, reproducible from `seed`.
pub fn random_expander(n: usize, d: usize, seed: u64) -> Result<(BipartiteGraph, ExpanderParams)> {
    let params = ExpanderParams::for_instance(n, d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = sample_graph(n, &params, &mut rng)?;
    Ok((graph, params))
}

/// Result of [`verified_expander`].
#[derive(Debug, Clone)]
pub struct ExpanderSample {
    pub graph: BipartiteGraph,
    pub params: ExpanderParams,
    /// `true` when the expansion property was checked exhaustively;
    /// `false` means the graph is only expanding with high probability.
    pub verified: bool,
    pub attempts: usize,
}

/// Resamples from a single seeded stream until a graph passes
/// [`verify_expansion`]. If exhaustive verification does not fit in
/// `budget`, the first sample is returned unverified.
pub fn verified_expander(
    n: usize,
    d: usize,
    seed: u64,
    budget: u64,
    max_attempts: usize,
) -> Result<ExpanderSample> {
    let params = ExpanderParams::for_instance(n, d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let feasible = expansion_work(n, params.max_set) <= u128::from(budget);
    for attempt in 1..=max_attempts.max(1) {
        let graph = sample_graph(n, &params, &mut rng)?;
        if !feasible {
            return Ok(ExpanderSample {
                graph,
                params,
                verified: false,
                attempts: attempt,
            });
        }
        if verify_expansion(&graph, params.alpha, params.beta, budget)? {
            return Ok(ExpanderSample {
                graph,
                params,
                verified: true,
                attempts: attempt,
            });
        }
    }
    Err(Error::parameter(format!(
        "no graph passed the expansion check in {max_attempts} attempts (n={n}, d={d})"
    )))
}

/// Union of the neighbor lists of `left`, sorted.
pub fn neighbors(g: &BipartiteGraph, left: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = left
        .iter()
        .flat_map(|&p| g.neighbors_of(p).iter().copied())
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Right vertices adjacent to exactly one member of `left`, sorted.
pub fn unique_neighbors(g: &BipartiteGraph, left: &[usize]) -> Vec<usize> {
    let mut all: Vec<usize> = left
        .iter()
        .flat_map(|&p| g.neighbors_of(p).iter().copied())
        .collect();
    all.sort_unstable();
    let mut out = Vec::new();
    let mut i = 0;
    while i < all.len() {
        let mut j = i + 1;
        while j < all.len() && all[j] == all[i] {
            j += 1;
        }
        if j - i == 1 {
            out.push(all[i]);
        }
        i = j;
    }
    out
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Number of left subsets of size `1..=max_set`.
pub fn expansion_work(n: usize, max_set: usize) -> u128 {
    (1..=max_set.min(n)).map(|s| binomial(n, s)).sum()
}

pub(crate) fn max_set_size(alpha: f64, n: usize) -> usize {
    ((alpha * n as f64) + 1e-9).floor() as usize
}

/// Incremental neighbor multiset over the right side.
struct Cover {
    counts: Vec<u32>,
    distinct: usize,
}

impl Cover {
    fn new(m: usize) -> Self {
        Self {
            counts: vec![0; m],
            distinct: 0,
        }
    }

    fn add(&mut self, nbrs: &[usize]) {
        for &t in nbrs {
            if self.counts[t] == 0 {
                self.distinct += 1;
            }
            self.counts[t] += 1;
        }
    }

    fn remove(&mut self, nbrs: &[usize]) {
        for &t in nbrs {
            self.counts[t] -= 1;
            if self.counts[t] == 0 {
                self.distinct -= 1;
            }
        }
    }
}

/// Exhaustively checks that every left set `P` with `|P| <= alpha * n_left`
/// has at least `beta * |P|` neighbors.
///
/// Sizes are enumerated in increasing order and the search stops on the
/// first violation. Returns [`Error::BudgetExceeded`] instead of a verdict
/// when the number of subsets exceeds `budget`.
pub fn verify_expansion(g: &BipartiteGraph, alpha: f64, beta: f64, budget: u64) -> Result<bool> {
    let n = g.n_left();
    let max_set = max_set_size(alpha, n).min(n);
    let work = expansion_work(n, max_set);
    if work > u128::from(budget) {
        return Err(Error::BudgetExceeded {
            required: work,
            budget,
        });
    }
    for size in 1..=max_set {
        let need = beta * size as f64;
        let failed = AtomicBool::new(false);
        // Each worker owns the subsets whose smallest member is `first`.
        (0..=n - size).into_par_iter().for_each(|first| {
            if failed.load(Ordering::Relaxed) {
                return;
            }
            let mut cover = Cover::new(g.m_right());
            cover.add(g.neighbors_of(first));
            if !expansion_dfs(g, first + 1, size - 1, need, &mut cover, &failed) {
                failed.store(true, Ordering::Relaxed);
            }
        });
        if failed.load(Ordering::Relaxed) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn expansion_dfs(
    g: &BipartiteGraph,
    start: usize,
    remaining: usize,
    need: f64,
    cover: &mut Cover,
    failed: &AtomicBool,
) -> bool {
    if remaining == 0 {
        return cover.distinct as f64 >= need;
    }
    let n = g.n_left();
    for next in start..=n - remaining {
        if failed.load(Ordering::Relaxed) {
            return true;
        }
        let nbrs = g.neighbors_of(next);
        cover.add(nbrs);
        let ok = expansion_dfs(g, next + 1, remaining - 1, need, cover, failed);
        cover.remove(nbrs);
        if !ok {
            return false;
        }
    }
    true
}

/// Checks `|N_u(P ∪ I) \ N(I)| >= k` for one admissible pair.
///
/// Admissible means `P ∩ I = ∅`, `|P| >= |I| + 2` and
/// `|P ∪ I| <= max_set`; anything else is a parameter error.
pub fn check_unique_neighbor_bound(
    g: &BipartiteGraph,
    defectives: &[usize],
    others: &[usize],
    max_set: usize,
) -> Result<bool> {
    if others.iter().any(|p| defectives.contains(p)) {
        return Err(Error::parameter("P and I must be disjoint"));
    }
    if others.len() < defectives.len() + 2 {
        return Err(Error::parameter(format!(
            "need |P| >= |I| + 2, got |P|={} and |I|={}",
            others.len(),
            defectives.len()
        )));
    }
    if others.len() + defectives.len() > max_set {
        return Err(Error::parameter(format!(
            "|P ∪ I| = {} exceeds the expansion range {max_set}",
            others.len() + defectives.len()
        )));
    }
    let union: Vec<usize> = defectives.iter().chain(others).copied().collect();
    let covered_by_i = neighbors(g, defectives);
    let fresh = unique_neighbors(g, &union)
        .into_iter()
        .filter(|t| covered_by_i.binary_search(t).is_err())
        .count();
    Ok(fresh >= g.k())
}

/// Incidence matrix: entry `(t, p)` is 1 iff test `t` is adjacent to person `p`.
pub fn to_binary_matrix(g: &BipartiteGraph) -> TestMatrix {
    let mut matrix =
        TestMatrix::zeros(g.m_right(), g.n_left()).expect("graph dimensions are positive");
    for (p, nbrs) in g.adjacency().iter().enumerate() {
        for &t in nbrs {
            matrix.set(t, p, 1);
        }
    }
    matrix
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(m: usize, k: usize, adj: &[&[usize]]) -> BipartiteGraph {
        BipartiteGraph::new(m, k, adj.iter().map(|a| a.to_vec()).collect()).unwrap()
    }

    #[test]
    fn instance_constants_n60_d2() {
        // 8 e^2 * 4 * 6, computed offline
        let right_size: f64 = 1418.698770994685;
        let p = ExpanderParams::for_instance(60, 2).unwrap();
        assert_eq!(p.k, 4);
        assert_eq!(p.m, 1419);
        assert_eq!(p.m, right_size.ceil() as usize);
        assert_eq!(p.max_set, 6);
        assert!((p.alpha - 0.1).abs() < 1e-15);
        assert!(p.beta > 3.0);
    }

    #[test]
    fn degenerate_alpha_one() {
        let p = ExpanderParams::for_instance(6, 2).unwrap();
        assert_eq!(p.alpha, 1.0);
        assert_eq!(p.k, 1);
        let (g, _) = random_expander(6, 2, 3).unwrap();
        assert_eq!(g.n_left(), 6);
        assert!(matches!(random_expander(5, 2, 3), Err(Error::Parameter(_))));
    }

    #[test]
    fn seeded_construction_is_reproducible() {
        let (a, _) = random_expander(60, 2, 17).unwrap();
        let (b, _) = random_expander(60, 2, 17).unwrap();
        let (c, _) = random_expander(60, 2, 18).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a
            .adjacency()
            .iter()
            .all(|n| n.len() == 4 && n.windows(2).all(|w| w[0] < w[1])));
    }

    #[test]
    fn neighbor_sets() {
        let g = graph(6, 2, &[&[0, 1], &[0, 1], &[2, 3], &[1, 4]]);
        assert!(neighbors(&g, &[]).is_empty());
        assert_eq!(neighbors(&g, &[3]), vec![1, 4]);
        assert_eq!(unique_neighbors(&g, &[3]), vec![1, 4]);
        assert!(unique_neighbors(&g, &[0, 1]).is_empty());
        assert_eq!(unique_neighbors(&g, &[0, 2]), vec![0, 1, 2, 3]);
        assert_eq!(unique_neighbors(&g, &[0, 3]), vec![0, 4]);
        assert!(neighbors(&g, &[0, 1, 2, 3]).len() <= 2 * 4);
    }

    #[test]
    fn complete_graph_expansion() {
        // k = m = 3 and four left vertices: N(P) is always all 3 tests.
        let g = graph(3, 3, &[&[0usize, 1, 2][..]; 4]);
        assert!(verify_expansion(&g, 0.5, 1.5, 1 << 20).unwrap());
        assert!(!verify_expansion(&g, 0.5, 1.6, 1 << 20).unwrap());
        assert!(verify_expansion(&g, 1.0, 0.75, 1 << 20).unwrap());
    }

    #[test]
    fn duplicate_columns_break_expansion() {
        let g = graph(8, 3, &[&[0, 1, 2], &[0, 1, 2], &[3, 4, 5], &[5, 6, 7]]);
        assert!(!verify_expansion(&g, 0.5, 1.6, 1 << 20).unwrap());
    }

    #[test]
    fn budget_refusal_is_not_a_verdict() {
        let (g, p) = random_expander(60, 2, 1).unwrap();
        let err = verify_expansion(&g, p.alpha, p.beta, 1000).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }

    #[test]
    fn work_count() {
        assert_eq!(
            expansion_work(60, 6),
            60 + 1770 + 34220 + 487635 + 5461512 + 50063860
        );
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(3, 5), 0);
    }

    #[test]
    fn unique_neighbor_bound_preconditions() {
        let g = graph(8, 2, &[&[0, 1], &[2, 3], &[4, 5], &[6, 7]]);
        assert!(check_unique_neighbor_bound(&g, &[], &[0], 4).is_err());
        assert!(check_unique_neighbor_bound(&g, &[0], &[0, 1, 2], 4).is_err());
        assert!(check_unique_neighbor_bound(&g, &[0], &[1, 2, 3], 3).is_err());
        assert!(check_unique_neighbor_bound(&g, &[0], &[1, 2, 3], 4).unwrap());
    }

    #[test]
    fn unique_neighbor_bound_fails_on_non_expander() {
        // vertices 1..=3 duplicate vertex 0's neighborhood, all inside N(I)
        let g = graph(6, 2, &[&[0, 1], &[0, 1], &[0, 1], &[0, 1], &[2, 3]]);
        assert!(!check_unique_neighbor_bound(&g, &[0], &[1, 2, 3], 4).unwrap());
        assert!(!check_unique_neighbor_bound(&g, &[], &[1, 2], 4).unwrap());
    }

    #[test]
    fn matrix_round_trip() {
        let (g, p) = random_expander(30, 1, 5).unwrap();
        let b = to_binary_matrix(&g);
        assert_eq!((b.rows(), b.cols()), (p.m, 30));
        assert!(b.is_binary());
        for j in 0..30 {
            assert_eq!(b.column(j).sum::<u64>(), p.k as u64);
        }
        assert_eq!(BipartiteGraph::from_binary_matrix(&b).unwrap(), g);
    }

    #[test]
    fn rejects_bad_adjacency() {
        assert!(BipartiteGraph::new(4, 2, vec![vec![0, 0]]).is_err());
        assert!(BipartiteGraph::new(4, 2, vec![vec![0, 4]]).is_err());
        assert!(BipartiteGraph::new(4, 0, vec![vec![]]).is_err());
    }
}
