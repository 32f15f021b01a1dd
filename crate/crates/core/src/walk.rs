//! Direct simulation of the breadth-first walk from its sequential law.
//!
//! Given the past, the number of children of `v(i)` is
//! `Bin(N − (i−1) − Z(i−1) − P(i−1), ρ(N, i−1))`, where `ρ(N, i) =
//! 1 − exp(−λ_2(N, i))` is the presence probability of a collapsed 2-edge
//! after `i` deletions. No hypergraph is materialized; a step costs `O(K)`.

use std::ops::ControlFlow;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::beta::{two_edge_intensity, BetaParams};
use crate::collapse::{PatchLimits, StopReason, TrialReport};
use crate::error::{domain, Error, Result};
use crate::trace::{ExcursionRecord, Step, TraceBuilder, WalkState, WalkTrace};

/// Draws the children count of the next vertex.
fn draw_children<R: Rng + ?Sized>(
    params: &BetaParams,
    state: &WalkState,
    rng: &mut R,
) -> Result<u32> {
    let eligible = state.eligible();
    if eligible == 0 {
        return Ok(0);
    }
    let rho = two_edge_intensity(params, state.n() as u64, state.step() as u64)?.rho;
    let dist = Binomial::new(eligible, rho)
        .map_err(|e| Error::Numerical(format!("Bin({eligible}, {rho}): {e}")))?;
    Ok(dist.sample(rng) as u32)
}

/// Runs the walk step by step, handing each step to `on_step` until it
/// breaks, the horizon is reached or every vertex has been processed.
pub fn drive_walk<R, F>(
    n: usize,
    params: &BetaParams,
    rng: &mut R,
    horizon: usize,
    mut on_step: F,
) -> Result<WalkState>
where
    R: Rng + ?Sized,
    F: FnMut(&Step) -> ControlFlow<()>,
{
    let mut state = WalkState::new(n);
    while state.step() < horizon.min(n) {
        let c = draw_children(params, &state, rng)?;
        let step = state.advance(c);
        if on_step(&step).is_break() {
            break;
        }
    }
    Ok(state)
}

/// Samples `Z`, `P` and `C` up to `horizon` steps.
pub fn sample_walk<R: Rng + ?Sized>(
    n: usize,
    params: &BetaParams,
    rng: &mut R,
    horizon: usize,
) -> Result<WalkTrace> {
    if horizon > n {
        return domain(format!("horizon {horizon} exceeds N = {n}"));
    }
    let mut builder = TraceBuilder::new(n);
    while builder.state().step() < horizon {
        let c = draw_children(params, builder.state(), rng)?;
        builder.push(c);
    }
    Ok(builder.finish())
}

/// The modified walk `Z̃`: no patches after step `⌊Nδ⌋`, and the trace
/// freezes the first time it then drops below its past minimum.
pub fn sample_modified_walk<R: Rng + ?Sized>(
    n: usize,
    params: &BetaParams,
    rng: &mut R,
    delta: f64,
) -> Result<WalkTrace> {
    if !(delta > 0.0 && delta <= 1.0) {
        return domain(format!("delta = {delta} must lie in (0, 1]"));
    }
    let cutoff = (n as f64 * delta).floor() as usize;
    let mut builder = TraceBuilder::new(n);
    while builder.state().step() < n {
        let c = draw_children(params, builder.state(), rng)?;
        let allow_patch = builder.state().step() < cutoff;
        let step = builder.push_with(c, allow_patch);
        if !allow_patch && step.z + step.p == 0 && step.i < n {
            builder.freeze();
            break;
        }
    }
    Ok(builder.finish())
}

/// Streams a walk, reporting only excursion boundaries. Returns the
/// completed excursions and the final state.
pub fn sample_excursions<R: Rng + ?Sized>(
    n: usize,
    params: &BetaParams,
    rng: &mut R,
    horizon: usize,
) -> Result<(Vec<ExcursionRecord>, WalkState)> {
    let mut out = Vec::new();
    let state = drive_walk(n, params, rng, horizon, |step| {
        if let Some(start) = step.excursion_end {
            out.push(ExcursionRecord {
                start_step: start,
                length: step.i + 1 - start,
                is_giant_candidate: false,
            });
        }
        ControlFlow::Continue(())
    })?;
    let best = out
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, usize)>, (j, e)| match best {
            Some((_, len)) if len >= e.length => best,
            _ => Some((j, e.length)),
        });
    if let Some((j, _)) = best {
        out[j].is_giant_candidate = true;
    }
    Ok((out, state))
}

/// Size of the domain of a uniformly chosen vertex: the length of the first
/// excursion.
pub fn first_domain_size<R: Rng + ?Sized>(n: usize, params: &BetaParams, rng: &mut R) -> Result<usize> {
    let mut size = n;
    drive_walk(n, params, rng, n, |step| match step.excursion_end {
        Some(_) => {
            size = step.i;
            ControlFlow::Break(())
        }
        None => ControlFlow::Continue(()),
    })?;
    Ok(size)
}

/// Sequential patching run on the walk: each excursion is one patch's worth
/// of identified vertices. Stops once more than `N δ` are identified at the
/// end of an excursion, or after `patch_budget` excursions.
pub fn sequential_patch_walk<R: Rng + ?Sized>(
    n: usize,
    params: &BetaParams,
    rng: &mut R,
    limits: PatchLimits,
) -> Result<TrialReport> {
    let threshold = n as f64 * limits.delta;
    let mut patches = 0usize;
    let mut first = None;
    let mut outcome = None;
    drive_walk(n, params, rng, n, |step| {
        let Some(start) = step.excursion_end else {
            return ControlFlow::Continue(());
        };
        patches += 1;
        first.get_or_insert(step.i + 1 - start);
        let reason = if step.i == n {
            Some(StopReason::AllIdentified)
        } else if step.i as f64 > threshold {
            Some(StopReason::DeltaExceeded)
        } else if patches >= limits.patch_budget {
            Some(StopReason::BudgetExhausted)
        } else {
            None
        };
        match reason {
            Some(r) => {
                outcome = Some((step.i, r));
                ControlFlow::Break(())
            }
            None => ControlFlow::Continue(()),
        }
    })?;
    let (identified_count, stop_reason) =
        outcome.ok_or_else(|| Error::Numerical("walk ended without closing an excursion".into()))?;
    Ok(TrialReport {
        identified_count,
        patches_used: patches,
        domain_size: first,
        stop_reason,
    })
}

/// `A_N^δ = P(⌊Nδ⌋)`, the patches used before step `⌊Nδ⌋ + 1`.
pub fn patches_at<R: Rng + ?Sized>(n: usize, params: &BetaParams, rng: &mut R, delta: f64) -> Result<i64> {
    let cutoff = (n as f64 * delta).floor() as usize;
    Ok(drive_walk(n, params, rng, cutoff, |_| ControlFlow::Continue(()))?.p())
}
