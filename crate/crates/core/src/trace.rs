//! Breadth-first walk traces: the step recurrence, excursion decomposition and
//! CSV output shared by the hypergraph walk and the direct sampler.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// One step of the walk as reported by [`WalkState::advance`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Step {
    /// 1-based step index.
    pub i: usize,
    pub children: u32,
    pub z: i64,
    pub p: i64,
    /// The excursion containing step `i` ended here; carries its start step.
    pub excursion_end: Option<usize>,
}

/// Running `(i, Z(i), P(i))` of a breadth-first walk on `n` vertices.
#[derive(Clone, Debug)]
pub struct WalkState {
    n: usize,
    step: usize,
    z: i64,
    p: i64,
    excursion_start: usize,
}

impl WalkState {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            step: 0,
            z: 0,
            p: 1,
            excursion_start: 1,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn z(&self) -> i64 {
        self.z
    }

    pub fn p(&self) -> i64 {
        self.p
    }

    pub fn is_done(&self) -> bool {
        self.step >= self.n
    }

    /// Vertices not yet reached before the next deletion,
    /// `N − i − Z(i) − P(i)`: the possible children of `v(i + 1)`.
    pub fn eligible(&self) -> u64 {
        (self.n as i64 - self.step as i64 - self.z - self.p) as u64
    }

    /// Patched vertices waiting to be deleted.
    pub fn pending(&self) -> i64 {
        self.z + self.p
    }

    /// Records the children of the next vertex. When the last patch is used
    /// up and vertices remain, a fresh patch is added, which becomes the root
    /// of the next step.
    pub fn advance(&mut self, children: u32) -> Step {
        self.advance_with(children, true)
    }

    /// As [`advance`](Self::advance); with `allow_patch == false` an
    /// exhausted walk is left without a fresh patch.
    pub fn advance_with(&mut self, children: u32, allow_patch: bool) -> Step {
        debug_assert!(!self.is_done());
        self.step += 1;
        self.z += children as i64 - 1;
        let mut excursion_end = None;
        if self.z + self.p == 0 {
            excursion_end = Some(self.excursion_start);
            if self.step < self.n && allow_patch {
                self.p += 1;
                self.excursion_start = self.step + 1;
            }
        } else if self.step == self.n {
            excursion_end = Some(self.excursion_start);
        }
        Step {
            i: self.step,
            children,
            z: self.z,
            p: self.p,
            excursion_end,
        }
    }
}

/// A breadth-first walk `C(1..n)`, `Z(0..n)`, `P(0..n)` with its root steps.
///
/// `P(i)` follows `1 − min_{j ≤ i} Z(j)` except at the final step, after
/// which no further patch is needed, so `P(n) = P(n − 1)` and `P(n)` equals
/// the number of roots.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkTrace {
    /// Vertex count `N`.
    pub n: usize,
    pub children: Vec<u32>,
    pub z: Vec<i64>,
    pub p: Vec<i64>,
    /// Steps at which a fresh patch was placed, increasing.
    pub roots: Vec<usize>,
    /// Step after which the modified walk stopped evolving.
    pub frozen_at: Option<usize>,
}

/// Accumulates a [`WalkTrace`] step by step.
#[derive(Clone, Debug)]
pub struct TraceBuilder {
    state: WalkState,
    trace: WalkTrace,
}

impl TraceBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            state: WalkState::new(n),
            trace: WalkTrace {
                n,
                children: Vec::new(),
                z: vec![0],
                p: vec![1],
                roots: Vec::new(),
                frozen_at: None,
            },
        }
    }

    pub fn state(&self) -> &WalkState {
        &self.state
    }

    pub fn push(&mut self, children: u32) -> Step {
        self.push_with(children, true)
    }

    pub fn push_with(&mut self, children: u32, allow_patch: bool) -> Step {
        if self.state.step() == 0 {
            self.trace.roots.push(1);
        }
        let before = self.state.p();
        let step = self.state.advance_with(children, allow_patch);
        if step.p > before {
            self.trace.roots.push(step.i + 1);
        }
        self.trace.children.push(children);
        self.trace.z.push(step.z);
        self.trace.p.push(step.p);
        step
    }

    pub fn freeze(&mut self) {
        self.trace.frozen_at = Some(self.state.step());
    }

    pub fn finish(self) -> WalkTrace {
        self.trace
    }
}

/// One domain of the walk: the vertices identified from a single patch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcursionRecord {
    pub start_step: usize,
    pub length: usize,
    pub is_giant_candidate: bool,
}

/// Longest excursion and the first return after a warm-up period.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GiantStats {
    pub start: usize,
    pub length: usize,
    /// First step `i ≥ warmup` with `Z(i) ≤` the reference level.
    pub first_return_after_warmup: Option<usize>,
}

impl WalkTrace {
    /// Number of recorded steps.
    pub fn steps(&self) -> usize {
        self.children.len()
    }

    /// Every vertex was processed and the walk was never frozen.
    pub fn is_complete(&self) -> bool {
        self.steps() == self.n && self.frozen_at.is_none()
    }

    /// `Z(i)`, held constant past the last recorded step of a frozen walk.
    pub fn z_at(&self, i: usize) -> Option<i64> {
        match self.z.get(i) {
            Some(&z) => Some(z),
            None if self.frozen_at.is_some() && i <= self.n => self.z.last().copied(),
            None => None,
        }
    }

    pub fn is_root(&self, i: usize) -> bool {
        self.roots.binary_search(&i).is_ok()
    }

    /// Checks the recurrence, both representations of `P`, positivity of
    /// pending patches and the vertex count identity.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let steps = self.steps();
        if self.z.len() != steps + 1 || self.p.len() != steps + 1 {
            return Err("array lengths disagree".into());
        }
        if self.z[0] != 0 || self.p[0] != 1 {
            return Err("walk must start at Z = 0, P = 1".into());
        }
        let mut running_min = 0i64;
        let mut p_indicator = 1i64;
        for i in 1..=steps {
            let c = self.children[i - 1] as i64;
            if self.z[i] != self.z[i - 1] + c - 1 {
                return Err(format!("recurrence broken at step {i}"));
            }
            running_min = running_min.min(self.z[i]);
            // No patch follows the final step, nor the step at which a
            // modified walk froze.
            let patchable = i < self.n && self.frozen_at != Some(i);
            if self.z[i - 1] + self.p[i - 1] == 1 && c == 0 && patchable {
                p_indicator += 1;
            }
            let expected = if patchable {
                1 - running_min
            } else {
                self.p[i - 1]
            };
            if self.p[i] != expected || self.p[i] != p_indicator {
                return Err(format!("P({i}) = {} disagrees with {expected}/{p_indicator}", self.p[i]));
            }
            if patchable && self.z[i] + self.p[i] < 1 {
                return Err(format!("no patches left after step {i}"));
            }
        }
        if steps > 0 && self.roots.len() as i64 != self.p[steps] {
            return Err("root count disagrees with P".into());
        }
        if self.is_complete() {
            let total: u64 = self.children.iter().map(|&c| c as u64).sum();
            if total as usize + self.roots.len() != self.n {
                return Err("children plus roots must equal N".into());
            }
        }
        Ok(())
    }

    /// Excursion decomposition of a complete trace.
    pub fn excursions(&self) -> Result<Vec<ExcursionRecord>> {
        if !self.is_complete() {
            return domain(format!(
                "excursions need a complete trace, have {} of {} steps",
                self.steps(),
                self.n
            ));
        }
        Ok(self.segments(self.n))
    }

    /// Excursions cut at root steps; the last one is truncated at `end`.
    fn segments(&self, end: usize) -> Vec<ExcursionRecord> {
        let mut out: Vec<ExcursionRecord> = self
            .roots
            .iter()
            .enumerate()
            .map(|(j, &start)| {
                let stop = self.roots.get(j + 1).copied().unwrap_or(end + 1);
                ExcursionRecord {
                    start_step: start,
                    length: stop - start,
                    is_giant_candidate: false,
                }
            })
            .filter(|e| e.length > 0)
            .collect();
        if let Some(best) = longest(&out) {
            out[best].is_giant_candidate = true;
        }
        out
    }

    /// Longest excursion (ties to the earlier one) and the first step at or
    /// after `warmup` where `Z` is at or below `level`, which defaults to the
    /// running minimum of `Z` up to `warmup`.
    pub fn giant_excursion_stats(&self, warmup: usize, level: Option<i64>) -> Result<GiantStats> {
        let steps = self.steps();
        if warmup >= steps.max(1) && !(steps == 0 && warmup == 0) {
            return domain(format!("warmup {warmup} must be below the trace length {steps}"));
        }
        let segments = self.segments(steps);
        let best = longest(&segments).map(|b| segments[b]).unwrap_or(ExcursionRecord {
            start_step: 0,
            length: 0,
            is_giant_candidate: false,
        });
        let level = level.unwrap_or_else(|| self.z[..=warmup].iter().copied().min().unwrap_or(0));
        let first_return = (warmup..=steps).find(|&i| self.z[i] <= level);
        Ok(GiantStats {
            start: best.start_step,
            length: best.length,
            first_return_after_warmup: first_return,
        })
    }

    /// Writes `i,C,Z,P,is_root`; row 0 has an empty `C`.
    pub fn write_csv<W: Write>(&self, mut sink: W) -> Result<()> {
        writeln!(sink, "i,C,Z,P,is_root")?;
        writeln!(sink, "0,,{},{},0", self.z[0], self.p[0])?;
        for i in 1..=self.steps() {
            writeln!(
                sink,
                "{i},{},{},{},{}",
                self.children[i - 1],
                self.z[i],
                self.p[i],
                u8::from(self.is_root(i))
            )?;
        }
        sink.flush()?;
        Ok(())
    }
}

fn longest(segments: &[ExcursionRecord]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (j, e) in segments.iter().enumerate() {
        if best.is_none_or(|b| e.length > segments[b].length) {
            best = Some(j);
        }
    }
    best
}

/// Writes excursions as `start,length`.
pub fn write_excursions_csv<W: Write>(excursions: &[ExcursionRecord], mut sink: W) -> Result<()> {
    writeln!(sink, "start,length")?;
    for e in excursions {
        writeln!(sink, "{},{}", e.start_step, e.length)?;
    }
    sink.flush()?;
    Ok(())
}
