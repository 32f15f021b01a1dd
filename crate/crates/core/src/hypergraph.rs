//! Poisson random hypergraphs and their edge-list file format.
//!
//! The file format is line oriented: a header `N=<integer>`, then one edge per
//! line as space-separated ascending vertex ids. Blank lines and lines
//! starting with `#` are ignored.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::beta::BetaParams;
use crate::error::{domain, Error, Result};

/// A multiset of hyperedges over the vertices `0..n`.
///
/// Edges are stored flat; each edge is a strictly increasing run of vertex
/// ids of length at least two. Repeated edges are kept as multiplicity.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Hypergraph {
    n: usize,
    offsets: Vec<usize>,
    vertices: Vec<u32>,
}

impl Hypergraph {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            offsets: vec![0],
            vertices: Vec::new(),
        }
    }

    /// Builds a hypergraph from edges given in any vertex order.
    pub fn from_edges<E, I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = E>,
        E: AsRef<[usize]>,
    {
        let mut h = Self::empty(n);
        for e in edges {
            h.push_edge(e.as_ref())?;
        }
        Ok(h)
    }

    pub fn push_edge(&mut self, edge: &[usize]) -> Result<()> {
        if edge.len() < 2 {
            return domain(format!("edge {edge:?} has fewer than two vertices"));
        }
        let mut sorted = edge.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return domain(format!("edge {edge:?} repeats a vertex"));
        }
        if let Some(&v) = sorted.last().filter(|&&v| v >= self.n) {
            return domain(format!("vertex {v} out of range for N = {}", self.n));
        }
        self.vertices.extend(sorted.iter().map(|&v| v as u32));
        self.offsets.push(self.vertices.len());
        Ok(())
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn n_edges(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge(&self, e: usize) -> &[u32] {
        &self.vertices[self.offsets[e]..self.offsets[e + 1]]
    }

    pub fn edges(&self) -> impl ExactSizeIterator<Item = &[u32]> + '_ {
        (0..self.n_edges()).map(move |e| self.edge(e))
    }

    /// `Σ_e |e|`
    pub fn total_size(&self) -> usize {
        self.vertices.len()
    }

    /// Number of edges of each size, indexed by size.
    pub fn size_counts(&self) -> Vec<usize> {
        let mut counts = Vec::new();
        for e in self.edges() {
            if counts.len() <= e.len() {
                counts.resize(e.len() + 1, 0);
            }
            counts[e.len()] += 1;
        }
        counts
    }

    /// Samples a Poisson random hypergraph on `n` vertices.
    ///
    /// For each size `k` a total count `M_k ~ Poisson(n β_k)` is drawn and
    /// that many independent uniform `k`-subsets are placed; by Poisson
    /// splitting every `k`-subset then carries an independent
    /// `Poisson(n β_k / C(n, k))` number of edges.
    pub fn sample<R: Rng + ?Sized>(n: usize, params: &BetaParams, rng: &mut R) -> Result<Self> {
        let big_k = params.max_size();
        if n < big_k {
            return domain(format!("N = {n} is smaller than the largest edge size {big_k}"));
        }
        let mut h = Self::empty(n);
        let mut subset = Vec::with_capacity(big_k);
        for (k, beta) in params.iter() {
            let mean = n as f64 * beta;
            if mean <= 0.0 {
                continue;
            }
            let count = Poisson::new(mean)
                .map_err(|e| Error::Numerical(format!("Poisson({mean}): {e}")))?
                .sample(rng) as u64;
            for _ in 0..count {
                uniform_subset(n, k, rng, &mut subset);
                h.vertices.extend(subset.iter().map(|&v| v as u32));
                h.offsets.push(h.vertices.len());
            }
        }
        Ok(h)
    }

    /// Writes the edge-list format.
    pub fn save<W: Write>(&self, mut sink: W) -> Result<()> {
        writeln!(sink, "N={}", self.n)?;
        let mut line = String::new();
        for e in self.edges() {
            line.clear();
            for (i, v) in e.iter().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                line.push_str(&v.to_string());
            }
            writeln!(sink, "{line}")?;
        }
        sink.flush()?;
        Ok(())
    }

    /// Reads the edge-list format.
    pub fn load<R: BufRead>(source: R) -> Result<Self> {
        let mut graph: Option<Self> = None;
        for (idx, line) in source.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let text = line.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            match graph.as_mut() {
                None => {
                    let n = text
                        .strip_prefix("N=")
                        .ok_or_else(|| parse_err(format!("expected header N=<integer>, found {text:?}")))?
                        .trim()
                        .parse::<usize>()
                        .map_err(|e| parse_err(format!("bad vertex count: {e}")))?;
                    graph = Some(Self::empty(n));
                }
                Some(h) => {
                    let edge = text
                        .split_whitespace()
                        .map(|tok| {
                            tok.parse::<usize>()
                                .map_err(|e| parse_err(format!("bad vertex id {tok:?}: {e}")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    h.push_edge(&edge).map_err(|e| match e {
                        Error::Domain(m) => parse_err(m),
                        other => other,
                    })?;
                }
            }
        }
        graph.ok_or(Error::Parse {
            line: 0,
            message: "missing header N=<integer>".into(),
        })
    }
}

/// Uniform `k`-subset of `0..n` in increasing order (Floyd's algorithm).
fn uniform_subset<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R, out: &mut Vec<usize>) {
    out.clear();
    for j in n - k..n {
        let t = rng.random_range(0..=j);
        if out.contains(&t) {
            out.push(j);
        } else {
            out.push(t);
        }
    }
    out.sort_unstable();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_rng;

    #[test]
    fn empty_graph_file_is_header_only() {
        let mut buf = Vec::new();
        Hypergraph::empty(5).save(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "N=5\n");
    }

    #[test]
    fn round_trip() {
        let h = Hypergraph::from_edges(4, [vec![0, 1], vec![3, 2, 1]]).unwrap();
        let mut buf = Vec::new();
        h.save(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "N=4\n0 1\n1 2 3\n");
        assert_eq!(Hypergraph::load(&buf[..]).unwrap(), h);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# generated\nN=3\n\n0 2\n# note\n1 2\n";
        let h = Hypergraph::load(text.as_bytes()).unwrap();
        assert_eq!(h.n_edges(), 2);
        assert_eq!(h.edge(0), &[0, 2]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("N=5\n0 1\n7\n", 3),
            ("N=5\n0 7\n", 2),
            ("N=5\n0 1\n2 x\n", 3),
            ("N=5\n1 1\n", 2),
            ("5\n", 1),
        ];
        for (text, want) in cases {
            match Hypergraph::load(text.as_bytes()) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, want, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(Hypergraph::load("".as_bytes()).is_err());
    }

    #[test]
    fn sample_rejects_small_n() {
        let params = BetaParams::new(vec![0.5, 0.1, 0.1]).unwrap();
        assert!(Hypergraph::sample(3, &params, &mut trial_rng(0, 0)).is_err());
    }

    #[test]
    fn zero_intensity_gives_no_edges() {
        let params = BetaParams::new(vec![0.0, 0.0]).unwrap();
        for t in 0..20 {
            let h = Hypergraph::sample(50, &params, &mut trial_rng(1, t)).unwrap();
            assert_eq!(h.n_edges(), 0);
        }
    }

    #[test]
    fn sampled_edges_are_well_formed() {
        let params = BetaParams::new(vec![0.5, 0.3, 0.2]).unwrap();
        let h = Hypergraph::sample(30, &params, &mut trial_rng(2, 0)).unwrap();
        for e in h.edges() {
            assert!((2..=4).contains(&e.len()));
            assert!(e.windows(2).all(|w| w[0] < w[1]));
            assert!(e.iter().all(|&v| (v as usize) < 30));
        }
    }

    #[test]
    fn floyd_subsets_are_uniform() {
        // All 10 subsets of size 2 from 5 elements, 20k draws each ~2000.
        let mut rng = trial_rng(3, 0);
        let mut counts = std::collections::HashMap::new();
        let mut out = Vec::new();
        for _ in 0..20_000 {
            uniform_subset(5, 2, &mut rng, &mut out);
            *counts.entry(out.clone()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 10);
        for c in counts.values() {
            assert!((*c as f64 - 2000.0).abs() < 4.0 * 2000f64.sqrt(), "{counts:?}");
        }
    }
}
