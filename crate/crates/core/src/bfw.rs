//! The breadth-first walk read off a materialized hypergraph.
//!
//! Vertices are deleted in breadth-first order. The children of `v(i)` are
//! the vertices not reached yet that share with `v(i)` an edge whose other
//! vertices have all been deleted, i.e. an edge that has collapsed onto the
//! pair `{v(i), w}`. Children are queued in label order. When the queue runs
//! dry a fresh root is patched.

use std::collections::VecDeque;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::collapse::{EdgeCounters, Incidence};
use crate::error::Error;
use crate::hypergraph::Hypergraph;
use crate::trace::{TraceBuilder, WalkTrace};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootPolicy {
    /// A uniformly random unreached vertex.
    #[default]
    UniformRandom,
    /// The lowest-numbered unreached vertex.
    LowestIndex,
}

impl FromStr for RootPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "uniform-random" | "uniform" => Ok(Self::UniformRandom),
            "lowest-index" | "lowest" => Ok(Self::LowestIndex),
            other => Err(Error::Domain(format!("unknown root policy {other:?}"))),
        }
    }
}

/// Unreached vertices, supporting lowest-index and uniform removal.
struct RootPicker {
    policy: RootPolicy,
    next_low: usize,
    pool: Vec<u32>,
}

impl RootPicker {
    fn new(n: usize, policy: RootPolicy) -> Self {
        let pool = match policy {
            RootPolicy::UniformRandom => (0..n as u32).collect(),
            RootPolicy::LowestIndex => Vec::new(),
        };
        Self {
            policy,
            next_low: 0,
            pool,
        }
    }

    fn pick<R: Rng + ?Sized>(&mut self, reached: &[bool], rng: &mut R) -> usize {
        match self.policy {
            RootPolicy::LowestIndex => {
                while reached[self.next_low] {
                    self.next_low += 1;
                }
                self.next_low
            }
            // Stale (already reached) entries are dropped as they are hit,
            // which keeps the draw uniform over the unreached ones.
            RootPolicy::UniformRandom => loop {
                let i = rng.random_range(0..self.pool.len());
                let v = self.pool[i] as usize;
                self.pool.swap_remove(i);
                if !reached[v] {
                    break v;
                }
            },
        }
    }
}

/// Breadth-first walk together with the vertex deletion order.
#[derive(Clone, Debug)]
pub struct BreadthFirstWalk {
    pub trace: WalkTrace,
    /// `order[i - 1]` is the vertex `v(i)`.
    pub order: Vec<usize>,
}

/// Runs the breadth-first walk on `h`.
pub fn breadth_first_walk<R: Rng + ?Sized>(h: &Hypergraph, rng: &mut R, policy: RootPolicy) -> WalkTrace {
    breadth_first_walk_with_order(h, rng, policy).trace
}

pub fn breadth_first_walk_with_order<R: Rng + ?Sized>(
    h: &Hypergraph,
    rng: &mut R,
    policy: RootPolicy,
) -> BreadthFirstWalk {
    let n = h.n_vertices();
    let incidence = Incidence::new(h);
    let mut counters = EdgeCounters::new(h);
    let mut reached = vec![false; n];
    let mut queue: VecDeque<u32> = VecDeque::new();
    let mut picker = RootPicker::new(n, policy);
    let mut builder = TraceBuilder::new(n);
    let mut order = Vec::with_capacity(n);
    let mut children: Vec<u32> = Vec::new();

    while order.len() < n {
        if queue.is_empty() {
            let root = picker.pick(&reached, rng);
            reached[root] = true;
            queue.push_back(root as u32);
        }
        let v = queue.pop_front().expect("queue refilled above");
        children.clear();
        let edges = incidence.of(v as usize);
        for &e in edges {
            let e = e as usize;
            if counters.remaining(e) == 2 {
                let w = counters.residue(e) ^ v;
                if !reached[w as usize] {
                    children.push(w);
                }
            }
        }
        for &e in edges {
            counters.delete_from(e as usize, v);
        }
        children.sort_unstable();
        children.dedup();
        for &w in &children {
            reached[w as usize] = true;
            queue.push_back(w);
        }
        order.push(v as usize);
        let step = builder.push(children.len() as u32);
        debug_assert_eq!(queue.is_empty(), step.excursion_end.is_some());
    }
    BreadthFirstWalk {
        trace: builder.finish(),
        order,
    }
}
