//! Frame-level transmission over the binary adder channel.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codebook::{Codebook, FrameGraph};
use crate::error::{invalid, Error, Result};

const NORMALIZATION_TOL: f64 = 1e-12;

/// Node-perspective replica-count distribution `Λ(x) = Σ Λ_L x^L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct DegreeDistribution {
    /// `(L, Λ_L)` pairs, strictly increasing in `L`, all `Λ_L > 0`.
    coeffs: Vec<(u32, f64)>,
}

impl DegreeDistribution {
    pub fn new(coeffs: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        let mut coeffs: Vec<(u32, f64)> = coeffs.into_iter().collect();
        coeffs.sort_by_key(|&(l, _)| l);
        for w in coeffs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(invalid(format!("degree {} listed twice", w[0].0)));
            }
        }
        for &(l, p) in &coeffs {
            if l == 0 {
                return Err(invalid("degree 0 is not allowed"));
            }
            if !(p >= 0.0 && p.is_finite()) {
                return Err(invalid(format!("coefficient of x^{l} must be a finite nonnegative number")));
            }
        }
        coeffs.retain(|&(_, p)| p > 0.0);
        let total: f64 = coeffs.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(invalid(format!("coefficients sum to {total}, expected 1")));
        }
        Ok(Self { coeffs })
    }

    /// `Λ(x) = x^degree`.
    pub fn regular(degree: u32) -> Self {
        assert!(degree >= 1);
        Self { coeffs: vec![(degree, 1.0)] }
    }

    pub fn coeffs(&self) -> &[(u32, f64)] {
        &self.coeffs
    }

    pub fn max_degree(&self) -> u32 {
        self.coeffs.last().map_or(0, |&(l, _)| l)
    }

    /// `Λ'(1)`, the average number of replicas.
    pub fn average_degree(&self) -> f64 {
        self.coeffs.iter().map(|&(l, p)| l as f64 * p).sum()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().map(|&(l, p)| p * x.powi(l as i32)).sum()
    }

    /// Samples a degree from a uniform variate in `[0, 1)`.
    pub fn sample_with(&self, u: f64) -> u32 {
        let mut acc = 0.0;
        for &(l, p) in &self.coeffs {
            acc += p;
            if u < acc {
                return l;
            }
        }
        self.max_degree()
    }

    pub fn edge_perspective(&self) -> EdgeDistribution {
        edge_perspective(self)
    }
}

impl fmt::Display for DegreeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &(l, p)) in self.coeffs.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            if p != 1.0 {
                write!(f, "{p}")?;
            }
            match l {
                1 => f.write_str("x")?,
                _ => write!(f, "x^{l}")?,
            }
        }
        Ok(())
    }
}

/// Parses polynomials such as `x^2`, `0.5x^2 + 0.5x^3` or `0.25*x + 0.75*x^3`.
impl FromStr for DegreeDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(invalid("empty degree distribution"));
        }
        let mut coeffs = Vec::new();
        for term in compact.split('+') {
            let bad = || invalid(format!("cannot parse term `{term}` of `{s}`"));
            let x = term.find('x').ok_or_else(bad)?;
            let coef = term[..x].trim_end_matches('*');
            let coef = if coef.is_empty() { 1.0 } else { coef.parse::<f64>().map_err(|_| bad())? };
            let rest = &term[x + 1..];
            let degree = if rest.is_empty() {
                1
            } else {
                rest.strip_prefix('^').ok_or_else(bad)?.parse::<u32>().map_err(|_| bad())?
            };
            coeffs.push((degree, coef));
        }
        Self::new(coeffs)
    }
}

impl TryFrom<String> for DegreeDistribution {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DegreeDistribution> for String {
    fn from(d: DegreeDistribution) -> String {
        d.to_string()
    }
}

/// Edge-perspective distribution `λ(x) = Σ λ_L x^{L-1} = Λ'(x)/Λ'(1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeDistribution {
    coeffs: Vec<(u32, f64)>,
}

impl EdgeDistribution {
    /// `(L, λ_L)` pairs.
    pub fn coeffs(&self) -> &[(u32, f64)] {
        &self.coeffs
    }

    /// `λ(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().map(|&(l, c)| c * x.powi(l as i32 - 1)).sum()
    }
}

pub fn edge_perspective(lambda: &DegreeDistribution) -> EdgeDistribution {
    let avg = lambda.average_degree();
    EdgeDistribution {
        coeffs: lambda.coeffs.iter().map(|&(l, p)| (l, l as f64 * p / avg)).collect(),
    }
}

/// User population and frame geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub users: usize,
    pub activation: f64,
    pub slots: usize,
    pub degrees: DegreeDistribution,
}

impl ScenarioConfig {
    pub fn new(users: usize, activation: f64, slots: usize, degrees: DegreeDistribution) -> Result<Self> {
        let cfg = Self { users, activation, slots, degrees };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.users == 0 {
            return Err(invalid("user population K must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.activation) {
            return Err(invalid("activation probability must lie in [0, 1]"));
        }
        if self.slots == 0 {
            return Err(invalid("frame must contain at least one slot"));
        }
        if (self.degrees.max_degree() as usize) > self.slots {
            return Err(invalid("largest replica degree exceeds the number of slots"));
        }
        Ok(())
    }

    /// Channel load `G = μK/N`.
    pub fn load(&self) -> f64 {
        self.activation * self.users as f64 / self.slots as f64
    }
}

/// Each of the `K` users is active independently with probability `μ`.
pub fn sample_active_set<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Vec<usize> {
    (0..config.users).filter(|_| rng.random_bool(config.activation)).collect()
}

/// Uniform sample of `active` distinct codeword indices out of `codewords`.
pub fn assign_codewords<R: Rng + ?Sized>(active: usize, codewords: usize, rng: &mut R) -> Result<Vec<usize>> {
    if active > codewords {
        return Err(Error::FrameOverload { active, codewords });
    }
    Ok(rand::seq::index::sample(rng, codewords, active).into_vec())
}

/// Channel output of one frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReceivedFrame {
    slots: usize,
    width: usize,
    y: Vec<u32>,
    truth: Vec<usize>,
}

impl ReceivedFrame {
    pub fn from_parts(slots: usize, width: usize, y: Vec<u32>, mut truth: Vec<usize>) -> Result<Self> {
        if y.len() != slots * width {
            return Err(invalid("frame buffer does not match slots x width"));
        }
        truth.sort_unstable();
        Ok(Self { slots, width, y, truth })
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    /// Channel uses per slot, `1 + n0`.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Channel outputs of slot `s`, pilot first.
    pub fn slot(&self, s: usize) -> &[u32] {
        &self.y[s * self.width..(s + 1) * self.width]
    }

    pub fn as_flat(&self) -> &[u32] {
        &self.y
    }

    /// Transmitted codeword indices, sorted. Used for scoring only.
    pub fn truth(&self) -> &[usize] {
        &self.truth
    }
}

/// Superimposes every replica of the assigned codewords.
pub fn transmit(codebook: &Codebook, graph: &FrameGraph, assigned: &[usize]) -> ReceivedFrame {
    let width = codebook.width();
    let mut y = vec![0u32; graph.slots() * width];
    for &i in assigned {
        for &s in graph.slots_of(i) {
            let row = &mut y[s as usize * width..(s as usize + 1) * width];
            codebook.add_to(i, row);
        }
    }
    let mut truth = assigned.to_vec();
    truth.sort_unstable();
    ReceivedFrame { slots: graph.slots(), width, y, truth }
}
