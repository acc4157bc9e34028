//! Codebooks and the replica-placement graph shared by users and receiver.
//!
//! Codewords are stored bit-packed, pilot at bit 0 of the first limb and
//! payload symbol `j` (1-based) at bit `j`. Slot and codeword indices are
//! 0-based throughout the crate.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::protocol::DegreeDistribution;
use crate::rng::{stream, Purpose};

/// Retries allowed when an i.i.d. draw duplicates an earlier codeword.
pub const MAX_DUPLICATE_RETRIES: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CodebookKind {
    /// Payload bits i.i.d. Bernoulli(`nu`).
    Iid { nu: f64, seed: u64 },
    /// Columns of the parity-check matrix of a `t`-error-correcting binary
    /// BCH code over GF(2^`m`).
    Bch { m: u32, t: u32 },
    /// Words supplied verbatim.
    Explicit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    n0: usize,
    limbs: usize,
    words: Vec<u64>,
    kind: CodebookKind,
}

fn limbs_for(width: usize) -> usize {
    width.div_ceil(64)
}

impl Codebook {
    /// Builds a codebook from `'0'`/`'1'` strings, pilot first.
    pub fn from_bit_strings<S: AsRef<str>>(words: &[S]) -> Result<Self> {
        let first = words.first().ok_or_else(|| invalid("codebook needs at least one word"))?;
        let width = first.as_ref().len();
        if width < 1 {
            return Err(invalid("codewords must contain the pilot"));
        }
        let limbs = limbs_for(width);
        let mut packed = vec![0u64; limbs * words.len()];
        for (i, w) in words.iter().enumerate() {
            let w = w.as_ref();
            if w.len() != width {
                return Err(invalid(format!("word {i} has length {}, expected {width}", w.len())));
            }
            for (j, ch) in w.chars().enumerate() {
                match ch {
                    '1' => packed[i * limbs + j / 64] |= 1 << (j % 64),
                    '0' => {}
                    _ => return Err(invalid(format!("word {i} contains `{ch}`"))),
                }
            }
        }
        let book = Self { n0: width - 1, limbs, words: packed, kind: CodebookKind::Explicit };
        book.check_invariants()?;
        Ok(book)
    }

    fn check_invariants(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.len());
        for i in 0..self.len() {
            if !self.bit(i, 0) {
                return Err(invalid(format!("word {i} lacks the unit pilot")));
            }
            if !seen.insert(self.word(i)) {
                return Err(invalid(format!("word {i} duplicates an earlier word")));
            }
        }
        Ok(())
    }

    /// Number of codewords `M`.
    pub fn len(&self) -> usize {
        self.words.len() / self.limbs
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Payload length `n0`.
    pub fn n0(&self) -> usize {
        self.n0
    }

    /// Slot length `1 + n0`.
    pub fn width(&self) -> usize {
        self.n0 + 1
    }

    pub fn limbs(&self) -> usize {
        self.limbs
    }

    pub fn kind(&self) -> &CodebookKind {
        &self.kind
    }

    /// Packed bits of word `i`.
    pub fn word(&self, i: usize) -> &[u64] {
        &self.words[i * self.limbs..(i + 1) * self.limbs]
    }

    /// Channel-use `j` (0 = pilot) of word `i`.
    pub fn bit(&self, i: usize, j: usize) -> bool {
        self.word(i)[j / 64] >> (j % 64) & 1 == 1
    }

    /// Number of ones in the payload of word `i`.
    pub fn payload_weight(&self, i: usize) -> usize {
        self.word(i).iter().map(|l| l.count_ones() as usize).sum::<usize>() - 1
    }

    /// Adds word `i` to an integer row of length `1 + n0`.
    pub fn add_to(&self, i: usize, row: &mut [u32]) {
        for_each_one(self.word(i), |j| row[j] += 1);
    }

    /// Subtracts word `i` from an integer row of length `1 + n0`.
    pub fn subtract_from(&self, i: usize, row: &mut [u32]) {
        for_each_one(self.word(i), |j| row[j] -= 1);
    }

    pub fn to_bit_string(&self, i: usize) -> String {
        (0..self.width()).map(|j| if self.bit(i, j) { '1' } else { '0' }).collect()
    }

    /// One word per line, pilot first.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.len() * (self.width() + 1));
        for i in 0..self.len() {
            out.push_str(&self.to_bit_string(i));
            out.push('\n');
        }
        out
    }

    /// Inverse of [`Codebook::to_text`]; the kind is lost.
    pub fn from_text(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        Self::from_bit_strings(&lines)
    }
}

fn for_each_one(limbs: &[u64], mut f: impl FnMut(usize)) {
    for (l, &limb) in limbs.iter().enumerate() {
        let mut bits = limb;
        while bits != 0 {
            let b = bits.trailing_zeros() as usize;
            f(l * 64 + b);
            bits &= bits - 1;
        }
    }
}

/// `M` pilot-prefixed words with i.i.d. Bernoulli(`nu`) payloads. A draw that
/// duplicates an earlier word is redrawn.
pub fn gen_iid_codebook(count: usize, n0: usize, nu: f64, seed: u64) -> Result<Codebook> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(invalid("Bernoulli parameter must lie strictly between 0 and 1"));
    }
    if count == 0 {
        return Err(invalid("codebook needs at least one word"));
    }
    if n0 < 64 && count as u128 > 1u128 << n0 {
        return Err(invalid(format!("{count} distinct words do not fit in {n0} payload bits")));
    }
    let width = n0 + 1;
    let limbs = limbs_for(width);
    let mut rng = stream(seed, Purpose::Codebook, 0);
    let mut words = Vec::with_capacity(count * limbs);
    let mut seen: HashSet<Vec<u64>> = HashSet::with_capacity(count);
    let mut buf = vec![0u64; limbs];
    for index in 0..count {
        let mut retries = 0;
        loop {
            buf.fill(0);
            buf[0] = 1;
            for j in 1..width {
                if rng.random_bool(nu) {
                    buf[j / 64] |= 1 << (j % 64);
                }
            }
            if seen.insert(buf.clone()) {
                break;
            }
            retries += 1;
            if retries >= MAX_DUPLICATE_RETRIES {
                return Err(Error::DuplicateCodeword { index, retries });
            }
        }
        words.extend_from_slice(&buf);
    }
    Ok(Codebook { n0, limbs, words, kind: CodebookKind::Iid { nu, seed } })
}

/// Primitive polynomials over GF(2), bit `k` = coefficient of `x^k`.
///
/// | m  | polynomial                  |
/// |----|-----------------------------|
/// | 2  | x^2 + x + 1                 |
/// | 3  | x^3 + x + 1                 |
/// | 4  | x^4 + x + 1                 |
/// | 5  | x^5 + x^2 + 1               |
/// | 6  | x^6 + x + 1                 |
/// | 7  | x^7 + x + 1                 |
/// | 8  | x^8 + x^4 + x^3 + x^2 + 1   |
/// | 9  | x^9 + x^4 + 1               |
/// | 10 | x^10 + x^3 + 1              |
/// | 11 | x^11 + x^2 + 1              |
/// | 12 | x^12 + x^6 + x^4 + x + 1    |
/// | 13 | x^13 + x^4 + x^3 + x + 1    |
/// | 14 | x^14 + x^10 + x^6 + x + 1   |
/// | 15 | x^15 + x + 1                |
/// | 16 | x^16 + x^12 + x^3 + x + 1   |
pub const PRIMITIVE_POLYNOMIALS: [(u32, u32); 15] = [
    (2, 0x7),
    (3, 0xb),
    (4, 0x13),
    (5, 0x25),
    (6, 0x43),
    (7, 0x83),
    (8, 0x11d),
    (9, 0x211),
    (10, 0x409),
    (11, 0x805),
    (12, 0x1053),
    (13, 0x201b),
    (14, 0x4443),
    (15, 0x8003),
    (16, 0x1100b),
];

pub fn primitive_polynomial(m: u32) -> Option<u32> {
    PRIMITIVE_POLYNOMIALS.iter().find(|&&(d, _)| d == m).map(|&(_, p)| p)
}

/// Antilog table of GF(2^m): `powers[e] = α^e` for `e < 2^m - 1`.
#[derive(Clone, Debug)]
pub struct GaloisField {
    m: u32,
    powers: Vec<u32>,
}

impl GaloisField {
    pub fn new(m: u32) -> Result<Self> {
        let poly = primitive_polynomial(m)
            .ok_or_else(|| invalid(format!("no primitive polynomial tabulated for m = {m}")))?;
        let order = (1usize << m) - 1;
        let mut powers = Vec::with_capacity(order);
        let mut x = 1u32;
        for _ in 0..order {
            powers.push(x);
            x <<= 1;
            if x >> m & 1 == 1 {
                x ^= poly;
            }
        }
        Ok(Self { m, powers })
    }

    pub fn degree(&self) -> u32 {
        self.m
    }

    /// Multiplicative order `2^m - 1`.
    pub fn order(&self) -> usize {
        self.powers.len()
    }

    /// `α^e`.
    pub fn alpha_pow(&self, e: u64) -> u32 {
        self.powers[(e % self.powers.len() as u64) as usize]
    }
}

/// Word `i` (1-based) is `1 ‖ α^i ‖ α^{3i} ‖ … ‖ α^{(2T-1)i}`, each field
/// element written as `m` bits, coefficient of `x^0` first.
pub fn gen_bch_codebook(m: u32, t: u32, count: usize) -> Result<Codebook> {
    if !(2..=16).contains(&m) {
        return Err(invalid(format!("field degree m = {m} outside [2, 16]")));
    }
    if t == 0 {
        return Err(invalid("BCH capability T must be at least 1"));
    }
    let field = GaloisField::new(m)?;
    if count == 0 || count > field.order() {
        return Err(invalid(format!("BCH codebook holds between 1 and {} words", field.order())));
    }
    let n0 = (t * m) as usize;
    let limbs = limbs_for(n0 + 1);
    let mut words = vec![0u64; count * limbs];
    for i in 0..count {
        let word = &mut words[i * limbs..(i + 1) * limbs];
        word[0] = 1;
        let exponent = (i + 1) as u64;
        for r in 0..t as u64 {
            let element = field.alpha_pow((2 * r + 1) * exponent);
            for b in 0..m as usize {
                if element >> b & 1 == 1 {
                    let j = 1 + r as usize * m as usize + b;
                    word[j / 64] |= 1 << (j % 64);
                }
            }
        }
    }
    Ok(Codebook { n0, limbs, words, kind: CodebookKind::Bch { m, t } })
}

/// Degree and slot set of codeword `index`. The stream is keyed by
/// `(master_seed, index)` so transmitter and receiver agree without
/// coordination. Slots are drawn by a partial Fisher-Yates shuffle and
/// returned sorted.
pub fn replica_profile(index: usize, degrees: &DegreeDistribution, slots: usize, master_seed: u64) -> (u32, Vec<u32>) {
    debug_assert!(degrees.max_degree() as usize <= slots);
    let mut rng = stream(master_seed, Purpose::Graph, index as u64);
    let degree = degrees.sample_with(rng.random::<f64>());
    // Sparse view of the shuffled array [0, slots): only touched positions
    // are stored.
    let mut swapped: Vec<(u32, u32)> = Vec::with_capacity(degree as usize);
    let lookup = |swapped: &[(u32, u32)], pos: u32| {
        swapped.iter().rev().find(|&&(p, _)| p == pos).map_or(pos, |&(_, v)| v)
    };
    let mut chosen = Vec::with_capacity(degree as usize);
    for k in 0..degree {
        let pick = rng.random_range(k..slots as u32);
        let at_pick = lookup(&swapped, pick);
        let at_k = lookup(&swapped, k);
        chosen.push(at_pick);
        swapped.push((pick, at_k));
    }
    chosen.sort_unstable();
    (degree, chosen)
}

/// Bipartite codeword/slot graph over the whole codebook.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameGraph {
    slots: usize,
    offsets: Vec<usize>,
    edges: Vec<u32>,
    candidates: Vec<Vec<u32>>,
}

impl FrameGraph {
    /// Applies [`replica_profile`] to every codeword index.
    pub fn build(codewords: usize, degrees: &DegreeDistribution, slots: usize, master_seed: u64) -> Result<Self> {
        Self::build_with(codewords, degrees, slots, master_seed, Execution::default())
    }

    pub fn build_with(
        codewords: usize,
        degrees: &DegreeDistribution,
        slots: usize,
        master_seed: u64,
        exec: Execution,
    ) -> Result<Self> {
        if degrees.max_degree() as usize > slots {
            return Err(invalid("largest replica degree exceeds the number of slots"));
        }
        let profiles = exec.map(0..codewords, |i| replica_profile(i, degrees, slots, master_seed).1);
        Self::from_slot_sets(slots, profiles)
    }

    /// Builds a graph from explicit slot sets, one per codeword.
    pub fn from_slot_sets(slots: usize, sets: Vec<Vec<u32>>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(sets.len() + 1);
        let mut edges = Vec::with_capacity(sets.iter().map(Vec::len).sum());
        let mut candidates = vec![Vec::new(); slots];
        offsets.push(0);
        for (i, mut set) in sets.into_iter().enumerate() {
            set.sort_unstable();
            if set.windows(2).any(|w| w[0] == w[1]) {
                return Err(invalid(format!("codeword {i} repeats a slot")));
            }
            for &s in &set {
                let list: &mut Vec<u32> =
                    candidates.get_mut(s as usize).ok_or_else(|| invalid(format!("slot {s} out of range")))?;
                list.push(i as u32);
            }
            edges.extend_from_slice(&set);
            offsets.push(edges.len());
        }
        Ok(Self { slots, offsets, edges, candidates })
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn codewords(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn degree(&self, i: usize) -> u32 {
        (self.offsets[i + 1] - self.offsets[i]) as u32
    }

    /// Sorted slot set of codeword `i`.
    pub fn slots_of(&self, i: usize) -> &[u32] {
        &self.edges[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Candidate list `S_s`, ascending codeword index.
    pub fn candidates(&self, s: usize) -> &[u32] {
        &self.candidates[s]
    }

    pub fn all_candidates(&self) -> &[Vec<u32>] {
        &self.candidates
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// `index,degree,slots` rows; the slot list is quoted and comma-joined.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,degree,slots\n");
        for i in 0..self.codewords() {
            let list: Vec<String> = self.slots_of(i).iter().map(u32::to_string).collect();
            let _ = writeln!(out, "{},{},\"{}\"", i, self.degree(i), list.join(","));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iid_single_word_has_pilot() {
        let book = gen_iid_codebook(1, 3, 0.5, 11).unwrap();
        assert_eq!(book.len(), 1);
        assert_eq!(book.width(), 4);
        assert!(book.bit(0, 0));
    }

    #[test]
    fn iid_full_enumeration() {
        for seed in 0..20 {
            let book = gen_iid_codebook(4, 2, 0.5, seed).unwrap();
            let mut words: Vec<String> = (0..4).map(|i| book.to_bit_string(i)).collect();
            words.sort();
            assert_eq!(words, ["100", "101", "110", "111"]);
        }
    }

    #[test]
    fn iid_too_many_words() {
        assert!(matches!(gen_iid_codebook(5, 2, 0.5, 0), Err(Error::InvalidParameters(_))));
        assert!(gen_iid_codebook(3, 2, 0.0, 0).is_err());
        assert!(gen_iid_codebook(3, 2, 1.0, 0).is_err());
    }

    #[test]
    fn iid_duplicate_retry_exhaustion() {
        // With nu tiny, every payload is almost surely all-zero.
        assert!(matches!(
            gen_iid_codebook(2, 4, 1e-9, 0),
            Err(Error::DuplicateCodeword { index: 1, .. })
        ));
    }

    #[test]
    fn iid_weight_matches_nu() {
        // Long payloads so that redraws of duplicates do not bias the weight.
        let book = gen_iid_codebook(1000, 200, 0.1, 7).unwrap();
        let ones: usize = (0..book.len()).map(|i| book.payload_weight(i)).sum();
        let mean = ones as f64 / (1000.0 * 200.0);
        assert!((mean - 0.1).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn iid_is_deterministic() {
        assert_eq!(gen_iid_codebook(50, 12, 0.5, 3).unwrap(), gen_iid_codebook(50, 12, 0.5, 3).unwrap());
        assert_ne!(gen_iid_codebook(50, 12, 0.5, 3).unwrap(), gen_iid_codebook(50, 12, 0.5, 4).unwrap());
    }

    #[test]
    fn tabulated_polynomials_are_primitive() {
        for &(m, _) in &PRIMITIVE_POLYNOMIALS {
            let field = GaloisField::new(m).unwrap();
            let mut seen = vec![false; 1 << m];
            for e in 0..field.order() as u64 {
                let x = field.alpha_pow(e) as usize;
                assert!(x != 0 && !seen[x], "m = {m}: α has order below 2^m - 1");
                seen[x] = true;
            }
        }
        assert!(GaloisField::new(17).is_err());
    }

    #[test]
    fn bch_t1_is_all_nonzero_elements() {
        let book = gen_bch_codebook(4, 1, 15).unwrap();
        assert_eq!(book.n0(), 4);
        let mut payloads: Vec<u32> = (0..15)
            .map(|i| (1..=4).map(|j| (book.bit(i, j) as u32) << (j - 1)).sum())
            .collect();
        payloads.sort_unstable();
        assert_eq!(payloads, (1..=15).collect::<Vec<_>>());
    }

    #[test]
    fn bch_sizes() {
        let book = gen_bch_codebook(5, 2, 31).unwrap();
        assert_eq!((book.n0(), book.len()), (10, 31));
        assert!(gen_bch_codebook(4, 2, 16).is_err());
        assert!(gen_bch_codebook(1, 2, 1).is_err());
        assert!(gen_bch_codebook(17, 2, 1).is_err());
        assert!(gen_bch_codebook(4, 0, 1).is_err());
    }

    fn xor_payload(book: &Codebook, subset: &[usize]) -> Vec<u64> {
        let mut acc = vec![0u64; book.limbs()];
        for &i in subset {
            for (a, w) in acc.iter_mut().zip(book.word(i)) {
                *a ^= w;
            }
        }
        acc[0] &= !1;
        acc
    }

    /// Sums mod 2 of at most `t` distinct columns are pairwise distinct.
    fn assert_bch_property(m: u32, t: u32) {
        let book = gen_bch_codebook(m, t, (1 << m) - 1).unwrap();
        let n = book.len();
        let mut seen: HashSet<Vec<u64>> = HashSet::new();
        let mut subset = Vec::new();
        fn rec(start: usize, n: usize, left: u32, subset: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
            f(subset);
            if left == 0 {
                return;
            }
            for i in start..n {
                subset.push(i);
                rec(i + 1, n, left - 1, subset, f);
                subset.pop();
            }
        }
        rec(0, n, t, &mut subset, &mut |s: &[usize]| {
            assert!(seen.insert(xor_payload(&book, s)), "m={m} t={t}: collision at {s:?}");
        });
    }

    #[test]
    fn bch_sums_are_unique() {
        assert_bch_property(4, 2);
        for m in 2..=6 {
            for t in 1..=3 {
                assert_bch_property(m, t);
            }
        }
    }

    #[test]
    fn text_roundtrip() {
        let book = gen_iid_codebook(20, 9, 0.4, 2).unwrap();
        let back = Codebook::from_text(&book.to_text()).unwrap();
        assert_eq!(back.to_text(), book.to_text());
        assert!(Codebook::from_bit_strings(&["011"]).is_err());
        assert!(Codebook::from_bit_strings(&["101", "101"]).is_err());
    }

    #[test]
    fn regular_profiles() {
        let d = DegreeDistribution::regular(2);
        for i in 0..500 {
            let (l, set) = replica_profile(i, &d, 200, 9);
            assert_eq!(l, 2);
            assert_eq!(set.len(), 2);
            assert!(set[0] < set[1] && set[1] < 200);
            assert_eq!(replica_profile(i, &d, 200, 9), (l, set));
        }
    }

    #[test]
    fn full_degree_uses_every_slot() {
        let (_, set) = replica_profile(3, &DegreeDistribution::regular(7), 7, 1);
        assert_eq!(set, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn irregular_degree_frequency() {
        let d: DegreeDistribution = "0.5x^2 + 0.5x^3".parse().unwrap();
        let n = 100_000;
        let threes = (0..n).filter(|&i| replica_profile(i, &d, 100, 4).0 == 3).count();
        let f = threes as f64 / n as f64;
        assert!((f - 0.5).abs() < 0.01, "{f}");
    }

    #[test]
    fn slot_choice_is_uniform() {
        let d = DegreeDistribution::regular(3);
        let n = 60_000;
        let mut hits = [0usize; 10];
        for i in 0..n {
            for s in replica_profile(i, &d, 10, 5).1 {
                hits[s as usize] += 1;
            }
        }
        for h in hits {
            let f = h as f64 / n as f64;
            assert!((f - 0.3).abs() < 0.01, "{f}");
        }
    }

    #[test]
    fn graph_single_codeword() {
        let g = FrameGraph::build(1, &DegreeDistribution::regular(2), 2, 0).unwrap();
        assert_eq!(g.candidates(0), &[0]);
        assert_eq!(g.candidates(1), &[0]);
    }

    #[test]
    fn graph_inverse_maps_and_conservation() {
        let d: DegreeDistribution = "0.3x^2 + 0.7x^4".parse().unwrap();
        let g = FrameGraph::build(700, &d, 50, 21).unwrap();
        let total: usize = (0..50).map(|s| g.candidates(s).len()).sum();
        assert_eq!(total, (0..700).map(|i| g.degree(i) as usize).sum::<usize>());
        for i in 0..700 {
            for s in 0..50u32 {
                assert_eq!(g.slots_of(i).contains(&s), g.candidates(s as usize).contains(&(i as u32)));
            }
        }
    }

    #[test]
    fn graph_mean_list_length() {
        let g = FrameGraph::build(4657, &DegreeDistribution::regular(2), 200, 1).unwrap();
        let mean = g.edge_count() as f64 / 200.0;
        assert!((mean - 46.57).abs() < 1.5);
    }

    #[test]
    fn graph_is_referentially_transparent() {
        let d = DegreeDistribution::regular(3);
        let a = FrameGraph::build_with(300, &d, 40, 8, Execution::Sequential).unwrap();
        let b = FrameGraph::build_with(300, &d, 40, 8, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn graph_csv_export() {
        let g = FrameGraph::from_slot_sets(4, vec![vec![3, 1], vec![0, 2]]).unwrap();
        assert_eq!(g.to_csv(), "index,degree,slots\n0,2,\"1,3\"\n1,2,\"0,2\"\n");
        assert!(FrameGraph::from_slot_sets(4, vec![vec![1, 1]]).is_err());
        assert!(FrameGraph::from_slot_sets(4, vec![vec![4]]).is_err());
    }
}
