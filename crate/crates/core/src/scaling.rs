//! Limit objects and the maps that compare finite-N walks to them.
//!
//! `W^k(t) = B(t) + μ_k t^{k−1}/(k−1)` is simulated on a grid; its running
//! minimum is refined between grid points by sampling the Brownian-bridge
//! minimum, so `−inf W^k` is not biased upward by the discretization.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::beta::{fluctuation_variance, t_star, z_curve, z_tilde, BetaParams};
use crate::error::{domain, Result};
use crate::stats;
use crate::trace::WalkTrace;

/// Default stopping window at `μ_k = 1`.
pub const DEFAULT_MIN_WINDOW: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WkHorizon {
    /// Simulate on `[0, T]`.
    Fixed(f64),
    /// Run until the minimum has not moved for `min_window` time units.
    Adaptive { min_window: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WkConfig {
    pub dt: f64,
    pub horizon: WkHorizon,
    /// Refine the minimum between grid points.
    pub bridge_min: bool,
    /// Keep the sampled path; otherwise only summary values are kept.
    pub record: bool,
}

impl WkConfig {
    pub fn fixed(dt: f64, t: f64) -> Self {
        Self {
            dt,
            horizon: WkHorizon::Fixed(t),
            bridge_min: true,
            record: false,
        }
    }

    /// Adaptive stopping with the default window, rescaled so that it covers
    /// the same multiple of the natural time scale `μ^{−2/(2k−3)}`.
    pub fn adaptive(dt: f64, k: usize, mu_k: f64) -> Self {
        let scale = mu_k.powf(-2.0 / (2.0 * k as f64 - 3.0));
        Self {
            dt,
            horizon: WkHorizon::Adaptive {
                min_window: DEFAULT_MIN_WINDOW * scale,
            },
            bridge_min: true,
            record: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WkPath {
    pub k: usize,
    pub mu_k: f64,
    pub dt: f64,
    /// `values[j] = W^k(j dt)`; empty unless recorded.
    pub values: Vec<f64>,
    /// Value at the end of the horizon.
    pub end_value: f64,
    pub end_time: f64,
    pub running_min: f64,
    pub argmin_time: f64,
}

impl WkPath {
    /// Sample of `−inf W^k`.
    pub fn neg_infimum(&self) -> f64 {
        -self.running_min
    }
}

pub fn wk_drift(k: usize, mu_k: f64, t: f64) -> f64 {
    mu_k * t.powi(k as i32 - 1) / (k as f64 - 1.0)
}

pub fn simulate_wk<R: Rng + ?Sized>(k: usize, mu_k: f64, cfg: &WkConfig, rng: &mut R) -> Result<WkPath> {
    if k < 2 {
        return domain(format!("k = {k} must be at least 2"));
    }
    if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
        return domain(format!("dt = {} must be positive", cfg.dt));
    }
    let (fixed_steps, window) = match cfg.horizon {
        WkHorizon::Fixed(t) if t >= 0.0 => (Some((t / cfg.dt).round() as u64), f64::INFINITY),
        WkHorizon::Fixed(t) => return domain(format!("horizon {t} is negative")),
        WkHorizon::Adaptive { .. } if mu_k <= 0.0 => {
            return domain(format!("adaptive stopping needs mu_k > 0, got {mu_k}: the infimum is -inf"))
        }
        WkHorizon::Adaptive { min_window } if min_window > 0.0 => (None, min_window),
        WkHorizon::Adaptive { min_window } => return domain(format!("min_window = {min_window} must be positive")),
    };
    let sd = cfg.dt.sqrt();
    // Below this distance the bridge can dip under the running minimum with
    // probability above e^{-72}.
    let near = 6.0 * sd;
    let mut values = Vec::new();
    if cfg.record {
        values.push(0.0);
    }
    let (mut brown, mut w) = (0.0f64, 0.0f64);
    let (mut min, mut argmin) = (0.0f64, 0.0f64);
    let mut j = 0u64;
    loop {
        let t = j as f64 * cfg.dt;
        match fixed_steps {
            Some(steps) if j >= steps => break,
            None if t - argmin >= window => break,
            _ => {}
        }
        j += 1;
        let t_next = j as f64 * cfg.dt;
        let z: f64 = StandardNormal.sample(rng);
        brown += sd * z;
        let next = brown + wk_drift(k, mu_k, t_next);
        if cfg.bridge_min && w.min(next) < min + near {
            let u: f64 = 1.0 - rng.random::<f64>();
            let bridge = 0.5 * (w + next - ((next - w).powi(2) - 2.0 * cfg.dt * u.ln()).sqrt());
            if bridge < min {
                min = bridge;
                argmin = t + 0.5 * cfg.dt;
            }
        }
        if next < min {
            min = next;
            argmin = t_next;
        }
        w = next;
        if cfg.record {
            values.push(w);
        }
    }
    Ok(WkPath {
        k,
        mu_k,
        dt: cfg.dt,
        values,
        end_value: w,
        end_time: j as f64 * cfg.dt,
        running_min: min,
        argmin_time: argmin,
    })
}

/// `P(W^k(R²) > R) = 1 − Φ(1 − μ_k R^{2k−3}/(k−1))`.
pub fn wk_exceedance_probability(k: usize, mu_k: f64, r: f64) -> f64 {
    1.0 - stats::normal_cdf(0.0, 1.0, 1.0 - mu_k / (k as f64 - 1.0) * r.powi(2 * k as i32 - 3))
}

/// The walk under `t ↦ N^{−α/2} Z(⌊N^α t⌋)`.
#[derive(Clone, Copy, Debug)]
pub struct Rescaled<'a> {
    trace: &'a WalkTrace,
    time_scale: f64,
    space_scale: f64,
}

pub fn rescale_trace(trace: &WalkTrace, alpha: f64) -> Result<Rescaled<'_>> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return domain(format!("alpha = {alpha} must lie in (0, 1]"));
    }
    let n = trace.n as f64;
    Ok(Rescaled {
        trace,
        time_scale: n.powf(alpha),
        space_scale: n.powf(-alpha / 2.0),
    })
}

impl Rescaled<'_> {
    pub fn index(&self, t: f64) -> usize {
        // guard against N^α landing a hair below an exact integer
        (self.time_scale * t + 1e-9).floor() as usize
    }

    pub fn at(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return domain(format!("t = {t} is negative"));
        }
        let i = self.index(t);
        match self.trace.z_at(i) {
            Some(z) => Ok(z as f64 * self.space_scale),
            None => domain(format!(
                "t = {t} maps to step {i}, beyond the {} recorded steps",
                self.trace.steps()
            )),
        }
    }
}

/// `sup_{i ≤ N t_max} |Z(i)/N − z̃(i/N)|`.
pub fn fluid_deviation(trace: &WalkTrace, params: &BetaParams, t_max: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t_max) {
        return domain(format!("t_max = {t_max} outside [0, 1]"));
    }
    let star = t_star(params, 0.0).value;
    let n = trace.n as f64;
    let last = (n * t_max).floor() as usize;
    let mut sup = 0.0f64;
    for i in 0..=last {
        let z = trace
            .z_at(i)
            .ok_or_else(|| crate::Error::Domain(format!("trace has no value at step {i}")))?;
        sup = sup.max((z as f64 / n - z_tilde(params, star, i as f64 / n)?).abs());
    }
    Ok(sup)
}

/// Fluctuations `(Z(⌊Nt⌋) − N z(t))/√N` across an ensemble of traces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluctuationEnsemble {
    pub grid: Vec<f64>,
    /// `paths[trial][j]` is the fluctuation at `grid[j]`.
    pub paths: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub count: usize,
    pub oracle_variance: Vec<f64>,
}

fn check_grid(params: &BetaParams, grid: &[f64]) -> Result<()> {
    let star = t_star(params, 0.0).value;
    match grid.iter().find(|&&t| !(0.0..star).contains(&t)) {
        Some(&t) => domain(format!("grid point {t} outside [0, t* = {star})")),
        None => Ok(()),
    }
}

/// Fluctuation of one trace at each grid point.
pub fn fluctuations(trace: &WalkTrace, params: &BetaParams, grid: &[f64]) -> Result<Vec<f64>> {
    check_grid(params, grid)?;
    let n = trace.n as f64;
    grid.iter()
        .map(|&t| {
            let i = (n * t).floor() as usize;
            let z = trace
                .z_at(i)
                .ok_or_else(|| crate::Error::Domain(format!("trace has no value at step {i}")))?;
            Ok((z as f64 - n * z_curve(params, t)?) / n.sqrt())
        })
        .collect()
}

pub fn fluctuation_extract(traces: &[WalkTrace], params: &BetaParams, grid: &[f64]) -> Result<FluctuationEnsemble> {
    let paths = traces
        .iter()
        .map(|trace| fluctuations(trace, params, grid))
        .collect::<Result<Vec<_>>>()?;
    FluctuationEnsemble::from_paths(params, grid, paths)
}

impl FluctuationEnsemble {
    /// Summarizes per-trial fluctuation paths taken on `grid`.
    pub fn from_paths(params: &BetaParams, grid: &[f64], paths: Vec<Vec<f64>>) -> Result<Self> {
        check_grid(params, grid)?;
        if paths.len() < 2 {
            return domain("need at least two paths");
        }
        if paths.iter().any(|p| p.len() != grid.len()) {
            return domain("path length does not match the grid");
        }
        let column = |j: usize| paths.iter().map(|p| p[j]).collect::<Vec<f64>>();
        let mean = (0..grid.len()).map(|j| stats::mean(&column(j))).collect::<Result<_>>()?;
        let variance = (0..grid.len()).map(|j| stats::variance(&column(j))).collect::<Result<_>>()?;
        let oracle_variance = grid
            .iter()
            .map(|&t| fluctuation_variance(params, t))
            .collect::<Result<_>>()?;
        Ok(Self {
            grid: grid.to_vec(),
            count: paths.len(),
            paths,
            mean,
            variance,
            oracle_variance,
        })
    }

    pub fn write_csv<W: Write>(&self, mut sink: W) -> Result<()> {
        writeln!(sink, "t,mean,variance,count,oracle_variance")?;
        for j in 0..self.grid.len() {
            writeln!(
                sink,
                "{},{},{},{},{}",
                self.grid[j], self.mean[j], self.variance[j], self.count, self.oracle_variance[j]
            )?;
        }
        Ok(())
    }
}

/// Writes `t,value` rows.
pub fn write_curve_csv<W: Write>(points: &[(f64, f64)], mut sink: W) -> Result<()> {
    writeln!(sink, "t,value")?;
    for (t, v) in points {
        writeln!(sink, "{t},{v}")?;
    }
    Ok(())
}
