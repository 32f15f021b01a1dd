//! The hyperedge intensity vector `β = (β_2, …, β_K)` and everything that can
//! be computed from it in closed form: the generating function and its first
//! two derivatives, the criticality classification, `t*`, the fluid curve
//! `z(t)`, the Borel law of small domains and the collapsed-edge intensities
//! `λ_k(N, i)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Error, Result};

/// Default tolerance for deciding that `β_j` sits at its critical value.
pub const CRITICAL_TOL: f64 = 1e-12;

const T_STAR_GRID_STEP: f64 = 1e-4;
const T_STAR_UPPER: f64 = 1.0 - 1e-9;
const T_STAR_BISECT_WIDTH: f64 = 1e-12;
/// Below this `t` the root function is evaluated through its power series.
const SERIES_CUTOFF: f64 = 0.05;
const SIMPSON_PANELS: usize = 10_000;

/// The critical value `1 / (j (j − 1))` of `β_j`.
pub fn critical_value(j: usize) -> f64 {
    1.0 / (j * (j - 1)) as f64
}

/// Finitely supported intensity coefficients `β_2, …, β_K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BetaParams {
    /// `coefficients[0]` is `β_2`.
    coefficients: Vec<f64>,
}

impl BetaParams {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return domain("at least one coefficient (beta_2) is required");
        }
        if let Some((i, b)) = coefficients
            .iter()
            .enumerate()
            .find(|(_, b)| !b.is_finite() || **b < 0.0)
        {
            return domain(format!("beta_{} = {b} must be finite and nonnegative", i + 2));
        }
        Ok(Self { coefficients })
    }

    /// Pure graph with only 2-edges.
    pub fn graph(beta2: f64) -> Result<Self> {
        Self::new(vec![beta2])
    }

    /// Largest edge size `K`.
    pub fn max_size(&self) -> usize {
        self.coefficients.len() + 1
    }

    /// `β_k`, zero outside `2..=K`.
    pub fn get(&self, k: usize) -> f64 {
        if k < 2 {
            0.0
        } else {
            self.coefficients.get(k - 2).copied().unwrap_or(0.0)
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Iterator over `(k, β_k)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.coefficients.iter().enumerate().map(|(i, &b)| (i + 2, b))
    }

    /// `β′(1) = Σ k β_k`, the mean number of edges through a vertex.
    pub fn mean_degree(&self) -> f64 {
        self.iter().map(|(k, b)| k as f64 * b).sum()
    }
}

impl TryFrom<Vec<f64>> for BetaParams {
    type Error = Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<BetaParams> for Vec<f64> {
    fn from(value: BetaParams) -> Self {
        value.coefficients
    }
}

/// Parses the comma-separated form `"beta2,beta3,..."`.
impl FromStr for BetaParams {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let coefficients = s
            .split(',')
            .map(|part| {
                part.trim().parse::<f64>().map_err(|e| {
                    Error::Domain(format!("invalid coefficient {:?}: {e}", part.trim()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(coefficients)
    }
}

impl fmt::Display for BetaParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.coefficients.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// `β(t)`, `β′(t)` and `β″(t)` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaEval {
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

fn check_unit(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        domain(format!("t = {t} must lie in [0, 1]"))
    }
}

/// Exact polynomial evaluation of `β`, `β′`, `β″` at `t ∈ [0, 1]`.
pub fn eval_beta(params: &BetaParams, t: f64) -> Result<BetaEval> {
    check_unit(t)?;
    Ok(eval_unchecked(params, t))
}

fn eval_unchecked(params: &BetaParams, t: f64) -> BetaEval {
    // Horner on the coefficient list, highest degree first.
    let (mut value, mut first, mut second) = (0.0, 0.0, 0.0);
    for (idx, &b) in params.coefficients.iter().enumerate().rev() {
        let kf = (idx + 2) as f64;
        value = value * t + b;
        first = first * t + kf * b;
        second = second * t + kf * (kf - 1.0) * b;
    }
    // value currently holds Σ β_k t^{k-2}, first Σ kβ_k t^{k-2}, second Σ k(k-1)β_k t^{k-2}
    BetaEval {
        value: value * t * t,
        first: first * t,
        second,
    }
}

fn beta_prime(params: &BetaParams, t: f64) -> f64 {
    eval_unchecked(params, t).first
}

/// The profile `β_j = 1/(j(j−1))` for `j < k`, `β_k = beta_k`, zero above.
pub fn critical_profile(k: usize, beta_k: f64) -> Result<BetaParams> {
    if k < 3 {
        return domain(format!("critical profile needs k >= 3, got {k}"));
    }
    let mut coefficients: Vec<f64> = (2..k).map(critical_value).collect();
    coefficients.push(beta_k);
    BetaParams::new(coefficients)
}

/// The scaling exponent `α(k) = (2k − 4)/(2k − 3)` as an exact fraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alpha {
    pub num: u32,
    pub den: u32,
}

impl Alpha {
    pub fn for_k(k: usize) -> Self {
        let k = k as u32;
        Self {
            num: 2 * k - 4,
            den: 2 * k - 3,
        }
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Subcritical,
    Supercritical,
    /// Every supplied coefficient sits at its critical value.
    GraphCritical,
}

/// Where the profile first leaves the critical sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FirstNoncritical {
    Index(usize),
    AllCriticalUpTo(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalityReport {
    pub first_noncritical: FirstNoncritical,
    /// Index governing the scaling: the first non-critical `k`, or `K + 1`
    /// (where `β_{K+1} = 0`) for an all-critical profile.
    pub k: usize,
    pub mu_k: f64,
    pub alpha_k: Alpha,
    pub t_star: f64,
    pub regime: Regime,
}

/// Finds the first index where `β` leaves the critical sequence and fills in
/// `μ_k`, `α(k)`, `t*` and the regime.
pub fn classify(params: &BetaParams, tol: f64) -> CriticalityReport {
    let big_k = params.max_size();
    let first = (2..=big_k).find(|&j| (params.get(j) - critical_value(j)).abs() > tol);
    let (first_noncritical, k) = match first {
        Some(j) => (FirstNoncritical::Index(j), j),
        None => (FirstNoncritical::AllCriticalUpTo(big_k), big_k + 1),
    };
    let mu_k = (k * (k - 1)) as f64 * params.get(k) - 1.0;
    let regime = match first_noncritical {
        FirstNoncritical::AllCriticalUpTo(_) => Regime::GraphCritical,
        FirstNoncritical::Index(_) if mu_k > 0.0 => Regime::Supercritical,
        FirstNoncritical::Index(_) => Regime::Subcritical,
    };
    let t_star = match regime {
        Regime::Supercritical => t_star_with_tol(params, 0.0, tol).value,
        _ => 0.0,
    };
    CriticalityReport {
        first_noncritical,
        k,
        mu_k,
        alpha_k: Alpha::for_k(k),
        t_star,
        regime,
    }
}

/// Result of the `t*` root search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TStar {
    pub value: f64,
    /// The root function never went negative on `(0, 1)`.
    pub saturated: bool,
    /// The root function touched zero somewhere in `(0, t*)` without
    /// crossing, violating the no-interior-zeros assumption.
    pub interior_zero: bool,
}

/// `t*_{β1} = inf{t ≥ 0 : β1 + β′(t) + log(1 − t) < 0}`; `beta1 = 0` gives
/// the plain `t*`.
pub fn t_star(params: &BetaParams, beta1: f64) -> TStar {
    t_star_with_tol(params, beta1, CRITICAL_TOL)
}

/// Power-series coefficients `c_m` of `β′(t) + log(1 − t) = Σ_{m≥1} c_m t^m`,
/// with `c_m = (m+1)(β_{m+1} − 1/(m(m+1)))` snapped to zero when `β_{m+1}` is
/// critical within `tol`.
fn root_series(params: &BetaParams, tol: f64, terms: usize) -> Vec<f64> {
    (1..=terms)
        .map(|m| {
            let gap = params.get(m + 1) - critical_value(m + 1);
            if gap.abs() <= tol {
                0.0
            } else {
                (m + 1) as f64 * gap
            }
        })
        .collect()
}

pub fn t_star_with_tol(params: &BetaParams, beta1: f64, tol: f64) -> TStar {
    let series = root_series(params, tol, 400);
    let f = |t: f64| -> f64 {
        if beta1 == 0.0 && t < SERIES_CUTOFF {
            let mut acc = 0.0;
            let mut power = t;
            for c in &series {
                acc += c * power;
                power *= t;
                if power < 1e-300 {
                    break;
                }
            }
            acc
        } else {
            beta1 + beta_prime(params, t) + (-t).ln_1p()
        }
    };

    if beta1 == 0.0 {
        // f(0) = 0; the sign just right of zero is the sign of the first
        // nonzero series coefficient.
        let leading = series.iter().copied().find(|c| *c != 0.0).unwrap_or(-1.0);
        if leading < 0.0 {
            return TStar {
                value: 0.0,
                saturated: false,
                interior_zero: false,
            };
        }
    } else if beta1 < 0.0 {
        return TStar {
            value: 0.0,
            saturated: false,
            interior_zero: false,
        };
    }

    let mut prev_t = 0.0;
    let mut prev_f = f(0.0);
    let mut before_prev_f = f64::INFINITY;
    let mut interior_zero = false;
    let mut j = 1usize;
    loop {
        let t = (j as f64 * T_STAR_GRID_STEP).min(T_STAR_UPPER);
        let ft = f(t);
        if ft < 0.0 {
            let (mut lo, mut hi) = (prev_t, t);
            while hi - lo > T_STAR_BISECT_WIDTH {
                let mid = 0.5 * (lo + hi);
                if f(mid) < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return TStar {
                value: 0.5 * (lo + hi),
                saturated: false,
                interior_zero,
            };
        }
        // A local minimum that reaches zero away from the origin.
        if j >= 2 && prev_f <= before_prev_f && prev_f <= ft && prev_f.abs() < 1e-9 {
            interior_zero = true;
        }
        if t >= T_STAR_UPPER {
            return TStar {
                value: 1.0,
                saturated: true,
                interior_zero,
            };
        }
        before_prev_f = prev_f;
        prev_t = t;
        prev_f = ft;
        j += 1;
    }
}

/// The fluid curve `z(t) = 1 − t − exp(−β′(t))`.
pub fn z_curve(params: &BetaParams, t: f64) -> Result<f64> {
    check_unit(t)?;
    Ok(1.0 - t - (-beta_prime(params, t)).exp())
}

/// `z(t ∧ t*)`, the fluid limit of the walk with patching switched off.
pub fn z_tilde(params: &BetaParams, t_star: f64, t: f64) -> Result<f64> {
    check_unit(t)?;
    z_curve(params, t.min(t_star))
}

/// Total progeny law of a Galton–Watson tree with Poisson(`mu`) offspring.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BorelModel {
    pub mu: f64,
}

impl BorelModel {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu.is_finite() && mu >= 0.0) {
            return domain(format!("Borel mean {mu} must be finite and nonnegative"));
        }
        Ok(Self { mu })
    }

    /// `P(M = n) = e^{−μn} (μn)^{n−1} / n!` for `n ≥ 1`.
    pub fn pmf(&self, n: u64) -> f64 {
        if n == 0 {
            return 0.0;
        }
        if self.mu == 0.0 {
            return if n == 1 { 1.0 } else { 0.0 };
        }
        let nf = n as f64;
        (-self.mu * nf + (nf - 1.0) * (self.mu * nf).ln() - ln_gamma(nf + 1.0)).exp()
    }

    /// `P(M = ∞) = 1 − q`, `q` the least root of `q = exp(μ(q − 1))`.
    pub fn survival(&self) -> f64 {
        if self.mu <= 1.0 {
            return 0.0;
        }
        // Newton on g(s) = s − 1 + e^{−μs} from s = 1; g is convex and
        // increasing right of the positive root, so the iterates decrease
        // monotonically onto it.
        let mut s = 1.0_f64;
        for _ in 0..200 {
            let e = (-self.mu * s).exp();
            let step = (s - 1.0 + e) / (1.0 - self.mu * e);
            s -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        s
    }
}

/// Collapsed `k`-edge intensity after `i` deletions,
/// `λ_k(N, i) = N Σ_j β_{k+j} C(i, j) / C(N, j + k)`.
///
/// The binomial ratios are telescoped multiplicatively. Terms with
/// `j + k > N` describe subsets that do not exist and are omitted.
pub fn collapsed_intensity(params: &BetaParams, n: u64, i: u64, k: usize) -> Result<f64> {
    if i >= n {
        return domain(format!("i = {i} must be below N = {n}"));
    }
    if k < 2 {
        return domain(format!("edge size k = {k} must be at least 2"));
    }
    let big_k = params.max_size();
    if k > big_k || k as u64 > n {
        return Ok(0.0);
    }
    let nf = n as f64;
    let kf = k as f64;
    // ratio_j = C(i, j) / C(N, j + k); ratio_0 = 1 / C(N, k)
    let mut ratio = (0..k).fold(1.0, |acc, m| acc * (m as f64 + 1.0) / (nf - m as f64));
    let mut sum = params.get(k) * ratio;
    let max_j = (big_k - k).min(i as usize).min((n - k as u64) as usize);
    for j in 0..max_j {
        let jf = j as f64;
        ratio *= (i as f64 - jf) / (jf + 1.0) * (jf + kf + 1.0) / (nf - jf - kf);
        sum += params.get(k + j + 1) * ratio;
    }
    Ok(nf * sum)
}

/// Rate and presence probability of a collapsed 2-edge over a given pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeIntensity {
    pub lambda: f64,
    /// `1 − exp(−λ)`
    pub rho: f64,
}

impl EdgeIntensity {
    pub fn from_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            rho: -(-lambda).exp_m1(),
        }
    }
}

pub fn two_edge_intensity(params: &BetaParams, n: u64, i: u64) -> Result<EdgeIntensity> {
    collapsed_intensity(params, n, i, 2).map(EdgeIntensity::from_lambda)
}

fn check_fluctuation_domain(params: &BetaParams, t: f64) -> Result<()> {
    let ts = t_star(params, 0.0).value;
    if !(t >= 0.0 && t < ts) {
        return domain(format!("fluctuation variance needs 0 <= t < t* = {ts}, got t = {t}"));
    }
    Ok(())
}

/// Variance of the Gaussian fluctuation limit at `t`, by composite Simpson
/// quadrature of `e^{−2β′(t)} ∫_0^t e^{2β′(s)} d(z(s) + s)`.
pub fn fluctuation_variance(params: &BetaParams, t: f64) -> Result<f64> {
    check_fluctuation_domain(params, t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    // d(z(s) + s)/ds = β″(s) e^{−β′(s)}
    let integrand = |s: f64| {
        let e = eval_unchecked(params, s);
        (2.0 * e.first).exp() * e.second * (-e.first).exp()
    };
    let h = t / SIMPSON_PANELS as f64;
    let mut acc = integrand(0.0) + integrand(t);
    for p in 1..SIMPSON_PANELS {
        let w = if p % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * integrand(p as f64 * h);
    }
    let integral = acc * h / 3.0;
    let value = (-2.0 * beta_prime(params, t)).exp() * integral;
    if !value.is_finite() {
        return Err(Error::Numerical(format!("variance quadrature at t = {t} is {value}")));
    }
    Ok(value)
}

/// Closed form `e^{−β′(t)} − e^{−2β′(t)}` of [`fluctuation_variance`].
pub fn fluctuation_variance_closed_form(params: &BetaParams, t: f64) -> Result<f64> {
    check_fluctuation_domain(params, t)?;
    let e = (-beta_prime(params, t)).exp();
    Ok(e - e * e)
}
