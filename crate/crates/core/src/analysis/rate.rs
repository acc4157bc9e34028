//! Sum rates in bits per channel use.

use super::asymptotic::AsymptoticRegime;

/// `(μK/N) log2(M/K) / (1 + n0)` for a finite frame.
pub fn sum_rate(activation: f64, users: f64, slots: f64, codewords: f64, n0: usize) -> f64 {
    activation * users / slots * (codewords / users).log2() / (1.0 + n0 as f64)
}

/// `(1 − δ) G / β`.
pub fn asymptotic_sum_rate(regime: &AsymptoticRegime) -> f64 {
    (1.0 - regime.delta) / regime.beta * regime.load
}
