//! Limits of the resolution probability as `K → ∞` with `N = μK/G`,
//! `M = D K^{1/δ}` and `n0 = β log2 M`.

use serde::{Deserialize, Serialize};

use super::density::MprProfile;
use crate::error::{invalid, Result};

/// Absolute tolerance for deciding that `U` sits exactly on the critical value.
pub const CRITICAL_TOLERANCE: f64 = 1e-12;

/// Returned by [`t_ed_mpr`] when the critical value is not finite or exceeds
/// this cap (`δ` close to 1).
pub const T_CAP: u32 = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRegime {
    /// Channel load `G = μK/N`.
    pub load: f64,
    /// Payload offset factor `D` in `M = D K^{1/δ}`.
    pub offset: f64,
    pub beta: f64,
    pub delta: f64,
    /// Activation probability `μ`.
    pub activation: f64,
}

impl AsymptoticRegime {
    pub fn new(load: f64, offset: f64, beta: f64, delta: f64, activation: f64) -> Result<Self> {
        let r = Self { load, offset, beta, delta, activation };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        check_beta_delta(self.beta, self.delta)?;
        if !(self.offset > 0.0 && self.offset.is_finite()) {
            return Err(invalid("D must be positive"));
        }
        if !(self.load > 0.0 && self.load.is_finite()) {
            return Err(invalid("G must be positive"));
        }
        if !(self.activation > 0.0 && self.activation <= 1.0) {
            return Err(invalid("μ must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn with_load(mut self, load: f64) -> Self {
        self.load = load;
        self
    }

    /// Instantiates the regime at a finite number of users.
    pub fn finite_point(&self, users: f64, rounding: PayloadRounding) -> FinitePoint {
        let slots = (self.activation * users / self.load).round().max(1.0) as u64;
        let codewords = (self.offset * users.powf(1.0 / self.delta)).round().max(users) as u64;
        let n0 = rounding.apply(self.beta * (codewords as f64).log2());
        FinitePoint { users: users.round() as u64, slots, codewords, n0 }
    }
}

fn check_beta_delta(beta: f64, delta: f64) -> Result<()> {
    if !(beta >= 1.0 && beta.is_finite()) {
        return Err(invalid("β must be at least 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("δ must lie in (0, 1)"));
    }
    Ok(())
}

/// Rule turning the real-valued `β log2 M` into an integer payload length.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PayloadRounding {
    #[default]
    Round,
    Ceil,
}

impl PayloadRounding {
    pub fn apply(self, x: f64) -> usize {
        let v = match self {
            Self::Round => x.round(),
            Self::Ceil => (x - 1e-9).ceil(),
        };
        v.max(1.0) as usize
    }
}

impl std::str::FromStr for PayloadRounding {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "round" => Ok(Self::Round),
            "ceil" => Ok(Self::Ceil),
            other => Err(invalid(format!("unknown n0 rounding `{other}`"))),
        }
    }
}

/// Finite-size parameters of one regime point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinitePoint {
    pub users: u64,
    pub slots: u64,
    pub codewords: u64,
    pub n0: usize,
}

impl FinitePoint {
    /// `Λ'(1)/N`.
    pub fn rate(&self, avg_degree: f64) -> f64 {
        avg_degree / self.slots as f64
    }
}

/// `−log2(1 − 2^{−(1−δ)/β})`, the real-valued slot degree at which the
/// limiting resolution probability switches from 1 to 0.
pub fn critical_degree(beta: f64, delta: f64) -> f64 {
    let e = (1.0 - delta) / beta;
    let one_minus = -(-e * std::f64::consts::LN_2).exp_m1();
    -one_minus.log2()
}

/// Limiting resolution probability of a degree-`u` slot.
pub fn pi_u_asymptotic(u: u32, regime: &AsymptoticRegime, avg_degree: f64) -> f64 {
    let c = critical_degree(regime.beta, regime.delta);
    let uf = u as f64;
    if (uf - c).abs() <= CRITICAL_TOLERANCE {
        let base = -(-uf * std::f64::consts::LN_2).exp_m1();
        let num = (regime.beta * regime.offset.log2() * base.ln()).exp();
        let den = (regime.offset * regime.load * avg_degree / regime.activation).exp();
        (num / den).clamp(0.0, 1.0)
    } else if uf < c {
        1.0
    } else {
        0.0
    }
}

/// Largest slot degree resolved with probability 1 in the limit. Integer
/// critical values count as resolvable. Returns [`T_CAP`] once the critical
/// value exceeds it.
pub fn t_ed_mpr(beta: f64, delta: f64) -> Result<u32> {
    check_beta_delta(beta, delta)?;
    let c = critical_degree(beta, delta);
    if !c.is_finite() || c >= T_CAP as f64 {
        return Ok(T_CAP);
    }
    let nearest = c.round();
    if (c - nearest).abs() <= CRITICAL_TOLERANCE {
        return Ok(nearest as u32);
    }
    Ok(c.floor() as u32)
}

/// Number of colliding users the BCH scheme resolves, `⌊β⌋`.
pub fn pvtc_capability(beta: f64) -> u32 {
    beta.floor() as u32
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RegimeOrdering {
    EdMprGreater,
    PvtcGreater,
    Equal,
}

impl RegimeOrdering {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::EdMprGreater => "ED_MPR_GREATER",
            Self::PvtcGreater => "PVTC_GREATER",
            Self::Equal => "EQUAL",
        }
    }
}

impl std::fmt::Display for RegimeOrdering {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `(lower, upper)` values of `δ` bounding the region where both schemes
/// resolve the same number of users at this `β`.
pub fn region_boundaries(beta: f64) -> (f64, f64) {
    let t = beta.floor() as i32;
    let lower = 1.0 + beta * (1.0 - 2f64.powi(-t)).log2();
    let upper = 1.0 + beta * (1.0 - 2f64.powi(-t - 1)).log2();
    (lower, upper)
}

pub fn compare_regimes(beta: f64, delta: f64) -> Result<RegimeOrdering> {
    check_beta_delta(beta, delta)?;
    let (lower, upper) = region_boundaries(beta);
    Ok(if delta > upper {
        RegimeOrdering::EdMprGreater
    } else if delta < lower {
        RegimeOrdering::PvtcGreater
    } else {
        RegimeOrdering::Equal
    })
}

/// `π̄_1 .. π̄_{T̄}`, including the boundary value when the critical degree
/// is an integer.
pub fn asymptotic_profile(regime: &AsymptoticRegime, avg_degree: f64) -> Result<MprProfile> {
    regime.validate()?;
    let t = t_ed_mpr(regime.beta, regime.delta)?;
    MprProfile::new((1..=t).map(|u| pi_u_asymptotic(u, regime, avg_degree)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn regime(beta: f64, delta: f64) -> AsymptoticRegime {
        AsymptoticRegime::new(1.0, 1.0, beta, delta, 0.2).unwrap()
    }

    #[test]
    fn operating_point_allows_four() {
        let c = critical_degree(2.0, 0.9);
        assert!(c > 4.8 && c < 4.9, "{c}");
        assert_eq!(t_ed_mpr(2.0, 0.9).unwrap(), 4);
        let r = regime(2.0, 0.9);
        assert_eq!(pi_u_asymptotic(4, &r, 2.0), 1.0);
        assert_eq!(pi_u_asymptotic(5, &r, 2.0), 0.0);
    }

    #[test]
    fn unit_beta_half_delta() {
        assert_relative_eq!(critical_degree(1.0, 0.5), 1.7715533, epsilon = 1e-6);
        assert_eq!(t_ed_mpr(1.0, 0.5).unwrap(), 1);
    }

    #[test]
    fn delta_near_one_is_capped() {
        assert_eq!(t_ed_mpr(f64::MAX, 0.9).unwrap(), T_CAP);
        assert!(t_ed_mpr(1.0, 1.0 - f64::EPSILON).unwrap() < T_CAP);
        let t = t_ed_mpr(2.0, 0.999_999_999).unwrap();
        assert!(t > 20 && t < T_CAP);
        assert!(t_ed_mpr(1.0, 1.0).is_err());
    }

    #[test]
    fn integer_critical_value_uses_boundary_case() {
        let (beta, u) = (2.0, 3u32);
        let delta = 1.0 + beta * (1.0 - 2f64.powi(-(u as i32))).log2();
        let r = AsymptoticRegime::new(0.7, 1.0, beta, delta, 0.2).unwrap();
        assert!((critical_degree(beta, delta) - 3.0).abs() <= CRITICAL_TOLERANCE);
        assert_eq!(t_ed_mpr(beta, delta).unwrap(), 3);
        let want = (-(0.7 * 2.0 / 0.2f64)).exp();
        assert_relative_eq!(pi_u_asymptotic(3, &r, 2.0), want, max_relative = 1e-12);
        let p = asymptotic_profile(&r, 2.0).unwrap();
        assert_eq!(p.capability(), 3);
        assert!(p.get(3) < 1.0 && p.get(3) > 0.0);
    }

    #[test]
    fn orderings() {
        assert_eq!(compare_regimes(2.0, 0.9).unwrap(), RegimeOrdering::EdMprGreater);
        assert_eq!(compare_regimes(7.0, 0.43).unwrap(), RegimeOrdering::PvtcGreater);
        let (lower, upper) = region_boundaries(2.0);
        assert_relative_eq!(lower, 0.169925, epsilon = 1e-6);
        assert_eq!(compare_regimes(2.0, lower).unwrap(), RegimeOrdering::Equal);
        assert_eq!(compare_regimes(2.0, upper).unwrap(), RegimeOrdering::Equal);
        assert_relative_eq!(region_boundaries(1.0).1, 0.5849625, epsilon = 1e-6);
    }

    #[test]
    fn finite_point_sizes() {
        let r = AsymptoticRegime::new(2.5, 1.0, 2.0, 0.9, 1.0).unwrap();
        let p = r.finite_point(1e9, PayloadRounding::Ceil);
        assert_eq!(p.slots, 400_000_000);
        assert_eq!(p.n0, 67);
        assert_eq!(r.finite_point(1e9, PayloadRounding::Round).n0, 66);
    }

    #[test]
    fn rounding_parses() {
        assert_eq!("ceil".parse::<PayloadRounding>().unwrap(), PayloadRounding::Ceil);
        assert_eq!("Round".parse::<PayloadRounding>().unwrap(), PayloadRounding::Round);
        assert!("floor".parse::<PayloadRounding>().is_err());
        assert_eq!(PayloadRounding::Ceil.apply(4.0), 4);
    }
}
