//! Finite-length probability that the discarding decoder resolves a slot of
//! degree `U`.
//!
//! In a degree-`U` slot let `A_0` be the number of payload positions where
//! every transmitter sent 0 and `A_U` where every transmitter sent 1. A
//! competing codeword associated with the slot survives with probability
//! `ν^{A_U} (1-ν)^{A_0}`, and each of the `M - U` non-transmitted codewords
//! is associated with the slot with probability `Λ'(1)/N`. Averaging over the
//! number of competitors gives
//!
//! ```text
//! π_U = E[(1 - (Λ'(1)/N) ν^{A_U} (1-ν)^{A_0})^{M-U}]
//! ```
//!
//! Codewords are modelled as independent here, so `π_1` comes out slightly
//! below one; the simulator enforces distinct codewords and has `π_1 = 1`.
//!
//! Every large power is evaluated as `exp((M-U) log1p(-x))` and every sum of
//! weighted terms is accumulated in the log domain.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..=n {
        acc += (i as f64).ln();
        out.push(acc);
    }
    out
}

/// `a * ln(p)` with the convention `0 * ln 0 = 0`.
fn xlogy(a: usize, p: f64) -> f64 {
    if a == 0 {
        0.0
    } else {
        a as f64 * p.ln()
    }
}

/// Streaming log-sum-exp.
#[derive(Clone, Copy, Debug)]
struct LogSum {
    max: f64,
    scaled: f64,
}

impl LogSum {
    fn new() -> Self {
        Self { max: f64::NEG_INFINITY, scaled: 0.0 }
    }

    fn add(&mut self, ln_term: f64) {
        if ln_term == f64::NEG_INFINITY {
            return;
        }
        if ln_term > self.max {
            self.scaled = self.scaled * (self.max - ln_term).exp() + 1.0;
            self.max = ln_term;
        } else {
            self.scaled += (ln_term - self.max).exp();
        }
    }

    fn ln(self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PmfEntry {
    pub a0: usize,
    pub au: usize,
    pub prob: f64,
    /// Natural log of `prob`, kept because `prob` underflows for large `n0`.
    pub ln_prob: f64,
}

/// Joint pmf of `(A_0, A_U)` over `A_0 + A_U ≤ n0`. Cells of zero probability
/// are omitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PmfTable {
    pub n0: usize,
    pub entries: Vec<PmfEntry>,
}

impl PmfTable {
    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.prob).sum()
    }

    pub fn get(&self, a0: usize, au: usize) -> f64 {
        self.entries.iter().find(|e| e.a0 == a0 && e.au == au).map_or(0.0, |e| e.prob)
    }
}

fn check_common(u: u32, codewords: u64, rate: f64) -> Result<()> {
    if u == 0 {
        return Err(invalid("slot degree U must be at least 1"));
    }
    if codewords < u as u64 {
        return Err(invalid("codebook size M must be at least U"));
    }
    if !(rate > 0.0 && rate < 1.0) {
        return Err(invalid("Λ'(1)/N must lie strictly between 0 and 1"));
    }
    Ok(())
}

/// Multinomial pmf of the all-zero and all-one position counts in a slot of
/// `u` independent Bernoulli(`nu`) payloads of length `n0`.
pub fn joint_pmf_a0_au(n0: usize, nu: f64, u: u32) -> Result<PmfTable> {
    if u == 0 {
        return Err(invalid("slot degree U must be at least 1"));
    }
    if !(nu > 0.0 && nu < 1.0) {
        return Err(invalid("Bernoulli parameter must lie strictly between 0 and 1"));
    }
    let p_zero = (1.0 - nu).powi(u as i32);
    let p_one = nu.powi(u as i32);
    // A single transmitter never produces a mixed position.
    let p_mixed = if u == 1 { 0.0 } else { (1.0 - p_zero - p_one).max(0.0) };
    let lf = ln_factorials(n0);
    let mut entries = Vec::new();
    for a0 in 0..=n0 {
        for au in 0..=n0 - a0 {
            let rest = n0 - a0 - au;
            if rest > 0 && p_mixed == 0.0 {
                continue;
            }
            let ln_prob = lf[n0] - lf[a0] - lf[au] - lf[rest] + xlogy(a0, p_zero) + xlogy(au, p_one) + xlogy(rest, p_mixed);
            entries.push(PmfEntry { a0, au, prob: ln_prob.exp(), ln_prob });
        }
    }
    Ok(PmfTable { n0, entries })
}

/// `ln π_U` for general `ν`.
pub fn ln_pi_u_exact(u: u32, n0: usize, nu: f64, codewords: u64, rate: f64) -> Result<f64> {
    check_common(u, codewords, rate)?;
    let competitors = (codewords - u as u64) as f64;
    if competitors == 0.0 {
        return Ok(0.0);
    }
    let table = joint_pmf_a0_au(n0, nu, u)?;
    let (ln_nu, ln_not) = (nu.ln(), (1.0 - nu).ln());
    let mut sum = LogSum::new();
    for e in &table.entries {
        let survive = (e.au as f64 * ln_nu + e.a0 as f64 * ln_not).exp();
        sum.add(e.ln_prob + competitors * (-rate * survive).ln_1p());
    }
    Ok(sum.ln())
}

/// Probability that a degree-`u` slot is resolved, averaged over the joint
/// pmf of `(A_0, A_U)`.
pub fn pi_u_exact(u: u32, n0: usize, nu: f64, codewords: u64, rate: f64) -> Result<f64> {
    ln_pi_u_exact(u, n0, nu, codewords, rate).map(f64::exp)
}

/// `ln π_U` at `ν = 1/2`, where `A = A_0 + A_U ~ Bino(n0, 2^{1-U})`.
pub fn ln_pi_u_half(u: u32, n0: usize, codewords: u64, rate: f64) -> Result<f64> {
    check_common(u, codewords, rate)?;
    let competitors = (codewords - u as u64) as f64;
    if competitors == 0.0 {
        return Ok(0.0);
    }
    let q = 0.5f64.powi(u as i32 - 1);
    let lf = ln_factorials(n0);
    let mut sum = LogSum::new();
    for a in 0..=n0 {
        if u == 1 && a < n0 {
            continue;
        }
        let ln_prob = lf[n0] - lf[a] - lf[n0 - a] + xlogy(a, q) + xlogy(n0 - a, 1.0 - q);
        let survive = 0.5f64.powi(a as i32);
        sum.add(ln_prob + competitors * (-rate * survive).ln_1p());
    }
    Ok(sum.ln())
}

pub fn pi_u_half(u: u32, n0: usize, codewords: u64, rate: f64) -> Result<f64> {
    ln_pi_u_half(u, n0, codewords, rate).map(f64::exp)
}

/// Jensen lower bound `π'_U = (1 - (Λ'(1)/N)(1 - 2^{-U})^{n0})^{M-U}` at
/// `ν = 1/2`.
pub fn pi_u_lower_bound(u: u32, n0: usize, codewords: u64, rate: f64) -> Result<f64> {
    check_common(u, codewords, rate)?;
    let competitors = (codewords - u as u64) as f64;
    let x = mean_survival(u, n0);
    Ok((competitors * (-rate * x).ln_1p()).exp())
}

/// `E[2^{-A}] = (1 - 2^{-U})^{n0}`.
fn mean_survival(u: u32, n0: usize) -> f64 {
    let one_minus = -(-(u as f64) * std::f64::consts::LN_2).exp_m1();
    (n0 as f64 * one_minus.ln()).exp()
}

/// Exponential bounds around `π'_U`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
}

impl Sandwich {
    pub fn is_ordered(&self) -> bool {
        self.lower <= self.value && self.value <= self.upper
    }
}

/// Evaluates `exp(-(M-U) z / (1 - z)) ≤ π'_U ≤ exp(-(M-U) z)` with
/// `z = (Λ'(1)/N)(1 - 2^{-U})^{n0}`, from `z/(1+z) ≤ ln(1+z) ≤ z`.
pub fn sandwich_check(u: u32, n0: usize, codewords: u64, rate: f64) -> Result<Sandwich> {
    check_common(u, codewords, rate)?;
    let competitors = (codewords - u as u64) as f64;
    let z = rate * mean_survival(u, n0);
    let s = Sandwich {
        lower: (-competitors * z / (1.0 - z)).exp(),
        value: pi_u_lower_bound(u, n0, codewords, rate)?,
        upper: (-competitors * z).exp(),
    };
    if !s.is_ordered() {
        return Err(crate::error::Error::Inconsistent(format!("sandwich ordering violated: {s:?}")));
    }
    Ok(s)
}
