//! Identifiability by collapse.
//!
//! A patched vertex is identified; once every vertex but one of an edge has
//! been deleted, the survivor is identified too. Instead of rewriting edges
//! as they shrink, each edge keeps a counter of its not-yet-deleted vertices
//! and the XOR of their ids, so the last survivor is read off in O(1) when the
//! counter reaches one. The closure is computed in time linear in `Σ_e |e|`.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::hypergraph::Hypergraph;

/// Vertex to incident-edge lists in compressed form.
#[derive(Clone, Debug)]
pub struct Incidence {
    offsets: Vec<usize>,
    edges: Vec<u32>,
}

impl Incidence {
    pub fn new(h: &Hypergraph) -> Self {
        let n = h.n_vertices();
        let mut offsets = vec![0usize; n + 1];
        for e in h.edges() {
            for &v in e {
                offsets[v as usize + 1] += 1;
            }
        }
        for v in 0..n {
            offsets[v + 1] += offsets[v];
        }
        let mut fill = offsets.clone();
        let mut edges = vec![0u32; h.total_size()];
        for (id, e) in h.edges().enumerate() {
            for &v in e {
                edges[fill[v as usize]] = id as u32;
                fill[v as usize] += 1;
            }
        }
        Self { offsets, edges }
    }

    pub fn of(&self, v: usize) -> &[u32] {
        &self.edges[self.offsets[v]..self.offsets[v + 1]]
    }
}

/// Per-edge counters shared by the collapse engine and the breadth-first walk.
///
/// `remaining(e)` is the number of vertices of `e` that have not been deleted
/// yet and `residue(e)` is the XOR of their ids, so an edge with one
/// survivor names it directly.
#[derive(Clone, Debug)]
pub struct EdgeCounters {
    remaining: Vec<u32>,
    residue: Vec<u32>,
    decrements: usize,
}

impl EdgeCounters {
    pub fn new(h: &Hypergraph) -> Self {
        let remaining = h.edges().map(|e| e.len() as u32).collect();
        let residue = h.edges().map(|e| e.iter().fold(0, |acc, &v| acc ^ v)).collect();
        Self {
            remaining,
            residue,
            decrements: 0,
        }
    }

    pub fn remaining(&self, e: usize) -> u32 {
        self.remaining[e]
    }

    /// XOR of the undeleted vertices of `e`.
    pub fn residue(&self, e: usize) -> u32 {
        self.residue[e]
    }

    /// Removes `v` from edge `e` and returns the new remaining count.
    pub fn delete_from(&mut self, e: usize, v: u32) -> u32 {
        self.remaining[e] -= 1;
        self.residue[e] ^= v;
        self.decrements += 1;
        self.remaining[e]
    }

    /// Total counter decrements so far.
    pub fn decrements(&self) -> usize {
        self.decrements
    }
}

/// Mutable state of one collapse run over a fixed hypergraph.
#[derive(Clone, Debug)]
pub struct CollapseState {
    n: usize,
    incidence: Incidence,
    counters: EdgeCounters,
    identified: Vec<bool>,
    identified_count: usize,
    frontier: VecDeque<u32>,
}

impl CollapseState {
    pub fn new(h: &Hypergraph) -> Self {
        Self {
            n: h.n_vertices(),
            incidence: Incidence::new(h),
            counters: EdgeCounters::new(h),
            identified: vec![false; h.n_vertices()],
            identified_count: 0,
            frontier: VecDeque::new(),
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn is_identified(&self, v: usize) -> bool {
        self.identified[v]
    }

    pub fn identified_count(&self) -> usize {
        self.identified_count
    }

    pub fn counters(&self) -> &EdgeCounters {
        &self.counters
    }

    /// Identified vertices in increasing order.
    pub fn identified_set(&self) -> Vec<usize> {
        (0..self.n).filter(|&v| self.identified[v]).collect()
    }

    /// Puts a patch on `v`. Returns whether `v` was newly identified.
    pub fn patch(&mut self, v: usize) -> Result<bool> {
        if v >= self.n {
            return domain(format!("vertex {v} out of range for N = {}", self.n));
        }
        Ok(self.mark(v as u32))
    }

    fn mark(&mut self, v: u32) -> bool {
        let slot = &mut self.identified[v as usize];
        if *slot {
            return false;
        }
        *slot = true;
        self.identified_count += 1;
        self.frontier.push_back(v);
        true
    }

    /// Deletes `v`, collapsing its edges; survivors of edges that shrink to a
    /// single vertex are identified.
    fn delete(&mut self, v: u32) {
        for i in 0..self.incidence.of(v as usize).len() {
            let e = self.incidence.of(v as usize)[i] as usize;
            if self.counters.delete_from(e, v) == 1 {
                let survivor = self.counters.residue(e);
                self.mark(survivor);
            }
        }
    }

    /// Collapses until no patches remain; returns how many vertices were
    /// identified during this call (including pending patches).
    pub fn collapse(&mut self) -> usize {
        let before = self.identified_count - self.frontier.len();
        while let Some(v) = self.frontier.pop_front() {
            self.delete(v);
        }
        self.identified_count - before
    }

    /// Like [`collapse`](Self::collapse) but deletes pending vertices in a
    /// random order.
    pub fn collapse_shuffled<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        let before = self.identified_count - self.frontier.len();
        while !self.frontier.is_empty() {
            let i = rng.random_range(0..self.frontier.len());
            let v = self.frontier.swap_remove_back(i).expect("index in range");
            self.delete(v);
        }
        self.identified_count - before
    }
}

/// The identifiable set generated by `patches`, in increasing order.
pub fn identify(h: &Hypergraph, patches: &[usize]) -> Result<Vec<usize>> {
    let mut state = CollapseState::new(h);
    for &v in patches {
        state.patch(v)?;
    }
    state.collapse();
    Ok(state.identified_set())
}

/// The domain of `v`: everything identifiable from a single patch at `v`.
pub fn domain_of(h: &Hypergraph, v: usize) -> Result<Vec<usize>> {
    identify(h, &[v])
}

/// How the next patch location is drawn among unidentified vertices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// Uniform over all vertices, redrawn while the draw is already
    /// identified.
    #[default]
    Rejection,
    /// Uniform over the unidentified vertices directly.
    Direct,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// More than `N δ` vertices were identified.
    DeltaExceeded,
    /// The patch budget ran out first.
    BudgetExhausted,
    /// Every vertex was identified before either limit triggered.
    AllIdentified,
}

/// Outcome of one sequential patching run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialReport {
    /// `X_N`
    pub identified_count: usize,
    /// Patches placed (`A_N^δ` when the run stopped on `δ`).
    pub patches_used: usize,
    /// Size of the domain of the first, uniformly placed patch (`D_N`).
    pub domain_size: Option<usize>,
    pub stop_reason: StopReason,
}

/// Sequential patching limits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchLimits {
    pub delta: f64,
    pub patch_budget: usize,
}

impl PatchLimits {
    pub fn new(delta: f64, patch_budget: usize) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return domain(format!("delta = {delta} must lie in (0, 1)"));
        }
        if patch_budget == 0 {
            return domain("patch budget must be at least 1");
        }
        Ok(Self {
            delta,
            patch_budget,
        })
    }
}

/// Adds patches one at a time on uniformly chosen unidentified vertices,
/// collapsing fully after each, until more than `N δ` vertices are
/// identified or the budget is spent.
pub fn sequential_patch_experiment<R: Rng + ?Sized>(
    h: &Hypergraph,
    rng: &mut R,
    limits: PatchLimits,
    placement: Placement,
) -> TrialReport {
    let n = h.n_vertices();
    let mut state = CollapseState::new(h);
    let threshold = n as f64 * limits.delta;
    let mut candidates: Vec<u32> = match placement {
        Placement::Direct => (0..n as u32).collect(),
        Placement::Rejection => Vec::new(),
    };
    let mut patches = 0usize;
    let mut first_domain = None;
    loop {
        if state.identified_count() == n {
            return report(&state, patches, first_domain, StopReason::AllIdentified);
        }
        let v = match placement {
            Placement::Rejection => loop {
                let v = rng.random_range(0..n);
                if !state.is_identified(v) {
                    break v;
                }
            },
            Placement::Direct => loop {
                let i = rng.random_range(0..candidates.len());
                let v = candidates[i] as usize;
                if state.is_identified(v) {
                    candidates.swap_remove(i);
                } else {
                    break v;
                }
            },
        };
        state.patch(v).expect("vertex drawn in range");
        let gained = state.collapse();
        patches += 1;
        first_domain.get_or_insert(gained);
        if state.identified_count() == n {
            return report(&state, patches, first_domain, StopReason::AllIdentified);
        }
        if state.identified_count() as f64 > threshold {
            return report(&state, patches, first_domain, StopReason::DeltaExceeded);
        }
        if patches >= limits.patch_budget {
            return report(&state, patches, first_domain, StopReason::BudgetExhausted);
        }
    }
}

fn report(
    state: &CollapseState,
    patches_used: usize,
    domain_size: Option<usize>,
    stop_reason: StopReason,
) -> TrialReport {
    TrialReport {
        identified_count: state.identified_count(),
        patches_used,
        domain_size,
        stop_reason,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::beta::BetaParams;
    use crate::rng::trial_rng;
    use rand::seq::SliceRandom;
    use std::collections::BTreeSet;

    /// Least fixed point of the recursive definition, by plain iteration.
    pub(crate) fn brute_force_identify(h: &Hypergraph, patches: &[usize]) -> Vec<usize> {
        let mut set: BTreeSet<usize> = patches.iter().copied().collect();
        loop {
            let mut changed = false;
            for e in h.edges() {
                let missing: Vec<usize> =
                    e.iter().map(|&v| v as usize).filter(|v| !set.contains(v)).collect();
                if missing.len() == 1 {
                    set.insert(missing[0]);
                    changed = true;
                }
            }
            if !changed {
                return set.into_iter().collect();
            }
        }
    }

    fn graph(n: usize, edges: &[&[usize]]) -> Hypergraph {
        Hypergraph::from_edges(n, edges.iter().copied()).unwrap()
    }

    #[test]
    fn no_patches_identify_nothing() {
        let h = graph(3, &[&[0, 1], &[1, 2]]);
        assert!(identify(&h, &[]).unwrap().is_empty());
    }

    #[test]
    fn chain_collapses_completely() {
        let h = graph(3, &[&[0, 1], &[1, 2]]);
        assert_eq!(identify(&h, &[0]).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn identifiability_is_asymmetric() {
        let h = graph(3, &[&[0, 1, 2], &[0, 1]]);
        assert_eq!(identify(&h, &[2]).unwrap(), vec![2]);
        assert_eq!(identify(&h, &[0]).unwrap(), vec![0, 1, 2]);
        assert_eq!(domain_of(&h, 2).unwrap(), vec![2]);
        assert_eq!(domain_of(&h, 0).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn isolated_vertex_domain() {
        let h = graph(4, &[&[0, 1]]);
        assert_eq!(domain_of(&h, 3).unwrap(), vec![3]);
        assert!(domain_of(&h, 4).is_err());
    }

    #[test]
    fn repeated_edges_identify_once() {
        let h = graph(3, &[&[0, 1], &[0, 1], &[0, 1]]);
        let mut s = CollapseState::new(&h);
        s.patch(0).unwrap();
        assert_eq!(s.collapse(), 2);
        assert_eq!(s.identified_count(), 2);
    }

    /// Union-find oracle for the graph case: domain equals component.
    fn components(h: &Hypergraph) -> Vec<usize> {
        let mut parent: Vec<usize> = (0..h.n_vertices()).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        for e in h.edges() {
            let (a, b) = (find(&mut parent, e[0] as usize), find(&mut parent, e[1] as usize));
            parent[a] = b;
        }
        (0..h.n_vertices()).map(|v| find(&mut parent, v)).collect()
    }

    #[test]
    fn graph_domains_are_components() {
        let params = BetaParams::graph(0.7).unwrap();
        for t in 0..10 {
            let h = Hypergraph::sample(60, &params, &mut trial_rng(5, t)).unwrap();
            let comp = components(&h);
            for v in 0..60 {
                let want: Vec<usize> = (0..60).filter(|&w| comp[w] == comp[v]).collect();
                assert_eq!(domain_of(&h, v).unwrap(), want);
            }
        }
    }

    #[test]
    fn order_invariance() {
        let params = BetaParams::new(vec![0.4, 0.3, 0.2]).unwrap();
        for t in 0..10 {
            let mut rng = trial_rng(6, t);
            let h = Hypergraph::sample(50, &params, &mut rng).unwrap();
            let patches: Vec<usize> = (0..5).map(|_| rng.random_range(0..50)).collect();
            let reference = identify(&h, &patches).unwrap();
            for _ in 0..100 {
                let mut order = patches.clone();
                order.shuffle(&mut rng);
                let mut s = CollapseState::new(&h);
                for &v in &order {
                    s.patch(v).unwrap();
                }
                s.collapse_shuffled(&mut rng);
                assert_eq!(s.identified_set(), reference);
            }
        }
    }

    #[test]
    fn monotone_in_patches() {
        let params = BetaParams::new(vec![0.45, 0.2]).unwrap();
        for t in 0..30 {
            let mut rng = trial_rng(7, t);
            let h = Hypergraph::sample(40, &params, &mut rng).unwrap();
            let small: Vec<usize> = (0..3).map(|_| rng.random_range(0..40)).collect();
            let mut big = small.clone();
            big.extend((0..3).map(|_| rng.random_range(0..40)));
            let a: BTreeSet<_> = identify(&h, &small).unwrap().into_iter().collect();
            let b: BTreeSet<_> = identify(&h, &big).unwrap().into_iter().collect();
            assert!(a.is_subset(&b));
        }
    }

    #[test]
    fn two_edge_components_share_domains() {
        let params = BetaParams::new(vec![0.4, 0.25]).unwrap();
        for t in 0..10 {
            let h = Hypergraph::sample(40, &params, &mut trial_rng(8, t)).unwrap();
            for e in h.edges().filter(|e| e.len() == 2) {
                assert_eq!(
                    domain_of(&h, e[0] as usize).unwrap(),
                    domain_of(&h, e[1] as usize).unwrap()
                );
            }
        }
    }

    #[test]
    fn matches_brute_force_on_random_small_graphs() {
        let params = BetaParams::new(vec![0.5, 0.4, 0.3]).unwrap();
        for t in 0..300 {
            let mut rng = trial_rng(9, t);
            let h = Hypergraph::sample(8, &params, &mut rng).unwrap();
            let patches: Vec<usize> = (0..rng.random_range(0..4)).map(|_| rng.random_range(0..8)).collect();
            assert_eq!(identify(&h, &patches).unwrap(), brute_force_identify(&h, &patches));
        }
    }

    #[test]
    fn decrements_bounded_by_total_size() {
        let params = BetaParams::new(vec![0.6, 0.3, 0.2]).unwrap();
        let h = Hypergraph::sample(2000, &params, &mut trial_rng(10, 0)).unwrap();
        let mut s = CollapseState::new(&h);
        for v in 0..2000 {
            s.patch(v).unwrap();
        }
        s.collapse();
        assert_eq!(s.identified_count(), 2000);
        assert_eq!(s.counters().decrements(), h.total_size());
    }

    #[test]
    fn remaining_tracks_deleted_vertices() {
        let h = graph(5, &[&[0, 1, 2], &[2, 3], &[1, 3, 4]]);
        let mut s = CollapseState::new(&h);
        s.patch(0).unwrap();
        s.patch(1).unwrap();
        s.collapse();
        for (e, verts) in h.edges().enumerate() {
            let alive = verts.iter().filter(|&&v| !s.is_identified(v as usize)).count();
            assert_eq!(s.counters().remaining(e) as usize, alive);
        }
    }

    #[test]
    fn edgeless_budget_run() {
        let h = Hypergraph::empty(100);
        let limits = PatchLimits::new(0.9, 7).unwrap();
        for placement in [Placement::Rejection, Placement::Direct] {
            let r = sequential_patch_experiment(&h, &mut trial_rng(11, 0), limits, placement);
            assert_eq!(r.identified_count, 7);
            assert_eq!(r.patches_used, 7);
            assert_eq!(r.domain_size, Some(1));
            assert_eq!(r.stop_reason, StopReason::BudgetExhausted);
        }
    }

    #[test]
    fn chain_needs_one_patch() {
        let n = 50;
        let edges: Vec<Vec<usize>> = (0..n - 1).map(|i| vec![i, i + 1]).collect();
        let h = Hypergraph::from_edges(n, edges).unwrap();
        let limits = PatchLimits::new(0.5, 10).unwrap();
        let r = sequential_patch_experiment(&h, &mut trial_rng(12, 0), limits, Placement::Rejection);
        assert_eq!((r.patches_used, r.identified_count), (1, n));
        assert_eq!(r.stop_reason, StopReason::AllIdentified);
    }

    #[test]
    fn all_identified_stop() {
        let h = Hypergraph::empty(3);
        let limits = PatchLimits::new(0.99, 100).unwrap();
        let r = sequential_patch_experiment(&h, &mut trial_rng(13, 0), limits, Placement::Direct);
        assert_eq!(r.stop_reason, StopReason::AllIdentified);
        assert_eq!(r.identified_count, 3);
    }

    #[test]
    fn limits_validation() {
        assert!(PatchLimits::new(0.0, 1).is_err());
        assert!(PatchLimits::new(1.0, 1).is_err());
        assert!(PatchLimits::new(0.5, 0).is_err());
    }
}
