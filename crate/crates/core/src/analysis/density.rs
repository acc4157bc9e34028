//! Density evolution for SIC with multi-packet slot resolution and the
//! resulting decoding thresholds.

use serde::{Deserialize, Serialize};

use super::asymptotic::{asymptotic_profile, AsymptoticRegime};
use crate::error::{invalid, Result};
use crate::protocol::{DegreeDistribution, EdgeDistribution};

pub const GRID_POINTS: usize = 2000;
pub const GRID_MIN: f64 = 1e-7;
pub const REFINE_FACTOR: usize = 10;
/// Relative margin `(p − RHS)/p` below which a grid point is refined.
pub const REFINE_MARGIN: f64 = 1e-4;
pub const DEFAULT_TOL: f64 = 1e-4;
/// Upper end of the load search interval.
pub const MAX_LOAD: f64 = 64.0;

/// Probability that a slot of degree `u` is resolved, for `u = 1..=T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MprProfile {
    probs: Vec<f64>,
}

impl MprProfile {
    /// Trailing zeros are trimmed so that `capability()` is the largest `u`
    /// with a positive probability.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(invalid("profile probabilities must lie in [0, 1]"));
        }
        while probs.last() == Some(&0.0) {
            probs.pop();
        }
        Ok(Self { probs })
    }

    /// Classical SIC: only singleton slots are resolved.
    pub fn singleton() -> Self {
        Self { probs: vec![1.0] }
    }

    /// Every slot of degree at most `t` is resolved.
    pub fn up_to(t: u32) -> Self {
        Self { probs: vec![1.0; t as usize] }
    }

    pub fn capability(&self) -> u32 {
        self.probs.len() as u32
    }

    /// `π̃_u`, zero outside the support.
    pub fn get(&self, u: u32) -> f64 {
        if u == 0 {
            return 0.0;
        }
        self.probs.get(u as usize - 1).copied().unwrap_or(0.0)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Pointwise `self ≥ other`.
    pub fn dominates(&self, other: &Self) -> bool {
        let t = self.capability().max(other.capability());
        (1..=t).all(|u| self.get(u) >= other.get(u))
    }
}

/// Probability that a slot seen along an edge stays unresolved when its
/// other edges are each still unresolved with probability `p`, for Poisson
/// slot degrees of mean `x = p G Λ'(1)`:
/// `1 − e^{−x} Σ_{u<T} π̃_{u+1} x^u / u!`.
fn slot_failure(profile: &MprProfile, x: f64) -> f64 {
    let t = profile.capability() as usize;
    if t == 0 {
        return 1.0;
    }
    // Split as P(Poisson ≥ T) + Σ_{u<T} (1 − π̃_{u+1}) P(Poisson = u)
    // so that the tail never comes from cancellation.
    let mut head = 0.0;
    for u in 0..t {
        let miss = 1.0 - profile.probs[u];
        if miss > 0.0 {
            head += miss * poisson_pmf(u, x);
        }
    }
    (poisson_tail(t, x) + head).min(1.0)
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|i| (i as f64).ln()).sum()
}

fn poisson_pmf(u: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if u == 0 { 1.0 } else { 0.0 };
    }
    (u as f64 * x.ln() - x - ln_factorial(u)).exp()
}

/// `P(Poisson(x) ≥ t)` for `t ≥ 1`.
fn poisson_tail(t: usize, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x > t as f64 {
        let below: f64 = (0..t).map(|u| poisson_pmf(u, x)).sum();
        return (1.0 - below).max(0.0);
    }
    let mut term = poisson_pmf(t, x);
    let mut sum = 0.0;
    let mut u = t;
    while term > 0.0 && term > sum * 1e-17 {
        sum += term;
        u += 1;
        term *= x / u as f64;
    }
    sum
}

/// Right-hand side of one density-evolution step.
pub fn de_step(edge: &EdgeDistribution, avg_degree: f64, profile: &MprProfile, load: f64, p: f64) -> f64 {
    edge.eval(slot_failure(profile, p * load * avg_degree))
}

/// `p_0, p_1, ..., p_iterations` of the density-evolution recursion.
pub fn de_evolve(degrees: &DegreeDistribution, profile: &MprProfile, load: f64, p0: f64, iterations: usize) -> Result<Vec<f64>> {
    if !(p0 > 0.0 && p0 <= 1.0) {
        return Err(invalid("p0 must lie in (0, 1]"));
    }
    if !(load >= 0.0 && load.is_finite()) {
        return Err(invalid("G must be nonnegative"));
    }
    let edge = degrees.edge_perspective();
    let avg = degrees.average_degree();
    let mut out = Vec::with_capacity(iterations + 1);
    let mut p = p0;
    out.push(p);
    for _ in 0..iterations {
        p = de_step(&edge, avg, profile, load, p);
        out.push(p);
    }
    Ok(out)
}

fn grid_point(i: usize) -> f64 {
    if i + 1 == GRID_POINTS {
        return 1.0;
    }
    GRID_MIN * (1.0 / GRID_MIN).powf(i as f64 / (GRID_POINTS - 1) as f64)
}

/// Whether `p > RHS(p)` holds on the evaluation grid.
pub fn converges_at(degrees: &DegreeDistribution, profile: &MprProfile, load: f64) -> bool {
    let edge = degrees.edge_perspective();
    let avg = degrees.average_degree();
    let ok = |p: f64| p > de_step(&edge, avg, profile, load, p);
    for i in 0..GRID_POINTS {
        let p = grid_point(i);
        let rhs = de_step(&edge, avg, profile, load, p);
        if p <= rhs {
            return false;
        }
        if (p - rhs) / p < REFINE_MARGIN {
            let lo = grid_point(i.saturating_sub(1));
            let hi = grid_point((i + 1).min(GRID_POINTS - 1));
            let ratio = hi / lo;
            let steps = 2 * REFINE_FACTOR;
            if (1..steps).any(|k| !ok(lo * ratio.powf(k as f64 / steps as f64))) {
                return false;
            }
        }
    }
    true
}

/// Threshold for a load-dependent profile. The predicate is assumed to hold
/// on `[0, G*)` and fail above.
pub fn de_threshold_with<F>(degrees: &DegreeDistribution, profile_at: F, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<MprProfile>,
{
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(invalid("tolerance must be positive"));
    }
    let holds = |g: f64| -> Result<bool> { Ok(converges_at(degrees, &profile_at(g)?, g)) };
    if !holds(tol)? {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (tol, MAX_LOAD);
    if holds(hi)? {
        return Ok(hi);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if holds(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Largest load for which density evolution drives the erasure probability
/// to zero, within `tol`.
pub fn de_threshold(degrees: &DegreeDistribution, profile: &MprProfile, tol: f64) -> Result<f64> {
    de_threshold_with(degrees, |_| Ok(profile.clone()), tol)
}

/// Lower bound on the discarding decoder's threshold in the asymptotic regime.
/// The regime's load only matters through the boundary case, so it is
/// replaced by the candidate load at every bisection step.
pub fn threshold_ed_mpr(degrees: &DegreeDistribution, regime: &AsymptoticRegime, tol: f64) -> Result<f64> {
    regime.validate()?;
    let avg = degrees.average_degree();
    de_threshold_with(degrees, |g| asymptotic_profile(&regime.with_load(g.max(f64::MIN_POSITIVE)), avg), tol)
}
