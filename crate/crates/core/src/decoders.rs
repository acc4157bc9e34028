//! Successive-interference-cancellation receivers.
//!
//! All receivers share one peeling loop over [`DecoderState`]: sweep the slots
//! in ascending order, try to resolve each slot with the receiver's per-slot
//! rule, and cancel every resolved codeword from all of its slots at once.
//! The loop stops after a sweep that changes nothing.
//!
//! * [`DecoderKind::Singleton`]: classic IRSA, only slots whose residual
//!   degree is one are read.
//! * [`DecoderKind::EdMpr`]: per-slot discarding. Each slot keeps its own
//!   survivor list, which only shrinks because the discard constraints only
//!   tighten as replicas are cancelled.
//! * [`DecoderKind::EdFg`]: ED-MPR plus global propagation. A codeword
//!   discarded in any slot cannot have been sent, so it is struck from the
//!   candidate list of every slot it maps to.
//! * [`DecoderKind::Pvtc`]: BCH parity-column codebook, slots of residual
//!   degree at most `T` resolved by exact subset search.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codebook::{Codebook, CodebookKind, FrameGraph};
use crate::error::{invalid, Error, Result};
use crate::protocol::ReceivedFrame;

/// Upper bound on subsets enumerated by [`oracle_slot_decode`].
pub const ORACLE_LIMIT: u128 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecoderKind {
    Singleton,
    EdMpr,
    EdFg,
    Pvtc,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 4] = [DecoderKind::Singleton, DecoderKind::EdMpr, DecoderKind::EdFg, DecoderKind::Pvtc];

    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::Singleton => "original",
            DecoderKind::EdMpr => "ed-mpr",
            DecoderKind::EdFg => "ed-fg",
            DecoderKind::Pvtc => "pvtc",
        }
    }

    /// Whether the receiver expects the BCH parity-column codebook.
    pub fn needs_bch(self) -> bool {
        self == DecoderKind::Pvtc
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DecoderKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "original" | "singleton" | "irsa" => Ok(DecoderKind::Singleton),
            "ed-mpr" | "edmpr" | "mpr" => Ok(DecoderKind::EdMpr),
            "ed-fg" | "edfg" | "fg" => Ok(DecoderKind::EdFg),
            "pvtc" | "bpr" => Ok(DecoderKind::Pvtc),
            other => Err(invalid(format!("unknown decoder `{other}`"))),
        }
    }
}

/// One slot resolution: the sweep it happened in, the slot, and how many
/// codewords it released.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotEvent {
    pub iteration: usize,
    pub slot: usize,
    pub degree: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeOutcome {
    /// Decoded codeword indices, sorted.
    pub decoded: Vec<usize>,
    pub undecoded: usize,
    pub iterations: usize,
    pub per_slot_log: Vec<SlotEvent>,
}

impl DecodeOutcome {
    /// `decoded ⊆ truth`; both slices sorted.
    pub fn is_sound(&self, truth: &[usize]) -> bool {
        is_sorted_subset(&self.decoded, truth)
    }
}

pub(crate) fn is_sorted_subset(a: &[usize], b: &[usize]) -> bool {
    let mut it = b.iter();
    a.iter().all(|x| it.any(|y| y == x))
}

/// CSV record of one decoded frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeRecord {
    pub frame: u64,
    pub decoder: String,
    pub decoded: usize,
    pub truth: usize,
    pub iterations: usize,
}

impl DecodeRecord {
    pub fn new(frame: u64, decoder: DecoderKind, outcome: &DecodeOutcome) -> Self {
        Self {
            frame,
            decoder: decoder.name().to_owned(),
            decoded: outcome.decoded.len(),
            truth: outcome.decoded.len() + outcome.undecoded,
            iterations: outcome.iterations,
        }
    }
}

/// Discard constraints of one slot: payload positions where every residual
/// transmitter sent a one, and where every one sent a zero.
#[derive(Clone, Debug, Default)]
struct SlotMasks {
    ones: Vec<u64>,
    zeros: Vec<u64>,
}

impl SlotMasks {
    fn fill(&mut self, residual: &[u32], k: u32, limbs: usize) {
        self.ones.clear();
        self.ones.resize(limbs, 0);
        self.zeros.clear();
        self.zeros.resize(limbs, 0);
        for (j, &y) in residual.iter().enumerate().skip(1) {
            if y == k {
                self.ones[j / 64] |= 1 << (j % 64);
            } else if y == 0 {
                self.zeros[j / 64] |= 1 << (j % 64);
            }
        }
    }

    fn compatible(&self, word: &[u64]) -> bool {
        word.iter()
            .zip(self.ones.iter().zip(&self.zeros))
            .all(|(&w, (&one, &zero))| w & one == one && w & zero == 0)
    }
}

/// Keeps the candidates compatible with a slot of residual degree `k`:
/// a position equal to `k` rules out a zero there, a position equal to `0`
/// rules out a one. Order is preserved.
pub fn discard_pass(slot_residual: &[u32], k: u32, candidates: &[u32], codebook: &Codebook) -> Vec<u32> {
    let mut masks = SlotMasks::default();
    masks.fill(slot_residual, k, codebook.limbs());
    candidates.iter().copied().filter(|&c| masks.compatible(codebook.word(c as usize))).collect()
}

/// Exact-sum subset search for the BCH baseline. Returns `None` when `k`
/// exceeds the capability `t`.
pub fn pvtc_slot_decode(
    slot_residual: &[u32],
    k: u32,
    candidates: &[u32],
    codebook: &Codebook,
    t: u32,
) -> Result<Option<Vec<u32>>> {
    if k > t {
        return Ok(None);
    }
    // Members of a matching subset are necessarily compatible, so searching
    // the survivors is exhaustive.
    let pool = discard_pass(slot_residual, k, candidates, codebook);
    let mut matches = Vec::new();
    let mut acc = vec![0u32; slot_residual.len()];
    let mut chosen = Vec::with_capacity(k as usize);
    subset_search(&pool, 0, k as usize, codebook, slot_residual, &mut acc, &mut chosen, &mut matches, 2);
    match matches.len() {
        1 => Ok(matches.pop()),
        0 => Err(Error::CodebookProperty(format!("no {k}-subset of the candidates matches the slot"))),
        _ => Err(Error::CodebookProperty(format!("several {k}-subsets match the slot"))),
    }
}

/// Every `k`-subset of `candidates` whose integer sum equals the residual,
/// by plain enumeration.
pub fn oracle_slot_decode(slot_residual: &[u32], k: u32, candidates: &[u32], codebook: &Codebook) -> Result<Vec<Vec<u32>>> {
    let subsets = binomial(candidates.len() as u128, k as u128);
    if subsets > ORACLE_LIMIT {
        return Err(Error::OracleTooLarge { subsets, limit: ORACLE_LIMIT });
    }
    let mut matches = Vec::new();
    let mut acc = vec![0u32; slot_residual.len()];
    let mut chosen = Vec::with_capacity(k as usize);
    subset_search(candidates, 0, k as usize, codebook, slot_residual, &mut acc, &mut chosen, &mut matches, usize::MAX);
    Ok(matches)
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

#[allow(clippy::too_many_arguments)]
fn subset_search(
    pool: &[u32],
    start: usize,
    left: usize,
    codebook: &Codebook,
    target: &[u32],
    acc: &mut Vec<u32>,
    chosen: &mut Vec<u32>,
    out: &mut Vec<Vec<u32>>,
    stop_after: usize,
) {
    if out.len() >= stop_after {
        return;
    }
    if left == 0 {
        if acc.as_slice() == target {
            out.push(chosen.clone());
        }
        return;
    }
    for idx in start..pool.len().saturating_sub(left - 1) {
        let c = pool[idx];
        codebook.add_to(c as usize, acc);
        chosen.push(c);
        subset_search(pool, idx + 1, left - 1, codebook, target, acc, chosen, out, stop_after);
        chosen.pop();
        codebook.subtract_from(c as usize, acc);
    }
}

/// Mutable receiver state for one frame.
#[derive(Clone, Debug)]
pub struct DecoderState<'a> {
    codebook: &'a Codebook,
    graph: &'a FrameGraph,
    width: usize,
    residual: Vec<u32>,
    resolved: Vec<bool>,
    resolved_list: Vec<usize>,
    eliminated: Vec<bool>,
    live: Vec<Vec<u32>>,
    dirty: Vec<bool>,
    iteration: usize,
    log: Vec<SlotEvent>,
    transmitted: Option<Vec<bool>>,
    masks: SlotMasks,
}

impl<'a> DecoderState<'a> {
    pub fn new(frame: &ReceivedFrame, graph: &'a FrameGraph, codebook: &'a Codebook) -> Result<Self> {
        if frame.width() != codebook.width() || frame.slots() != graph.slots() {
            return Err(invalid("frame, graph and codebook dimensions disagree"));
        }
        if graph.codewords() != codebook.len() {
            return Err(invalid("graph and codebook cover different numbers of codewords"));
        }
        Ok(Self {
            codebook,
            graph,
            width: frame.width(),
            residual: frame.as_flat().to_vec(),
            resolved: vec![false; codebook.len()],
            resolved_list: Vec::new(),
            eliminated: vec![false; codebook.len()],
            live: graph.all_candidates().to_vec(),
            dirty: vec![true; graph.slots()],
            iteration: 0,
            log: Vec::new(),
            transmitted: None,
            masks: SlotMasks::default(),
        })
    }

    /// Enables per-pass safety checks against the transmitted set: any
    /// transmitted codeword that is discarded, or any non-transmitted one that
    /// is resolved, aborts decoding with an error.
    pub fn with_audit(mut self, truth: &[usize]) -> Self {
        let mut sent = vec![false; self.codebook.len()];
        for &i in truth {
            sent[i] = true;
        }
        self.transmitted = Some(sent);
        self
    }

    pub fn residual(&self, s: usize) -> &[u32] {
        &self.residual[s * self.width..(s + 1) * self.width]
    }

    /// Residual slot degree, read from the pilot.
    pub fn residual_degree(&self, s: usize) -> u32 {
        self.residual[s * self.width]
    }

    pub fn live_candidates(&self, s: usize) -> &[u32] {
        &self.live[s]
    }

    pub fn is_resolved(&self, i: usize) -> bool {
        self.resolved[i]
    }

    pub fn iterations(&self) -> usize {
        self.iteration
    }

    fn audit_discards(&self, discarded: &[u32]) -> Result<()> {
        if let Some(sent) = &self.transmitted {
            if let Some(&c) = discarded.iter().find(|&&c| sent[c as usize]) {
                return Err(Error::Inconsistent(format!("transmitted codeword {c} was discarded")));
            }
        }
        Ok(())
    }

    fn audit_resolution(&self, set: &[u32]) -> Result<()> {
        if let Some(sent) = &self.transmitted {
            if let Some(&c) = set.iter().find(|&&c| !sent[c as usize]) {
                return Err(Error::Unsound(format!("codeword {c} resolved but never sent")));
            }
        }
        Ok(())
    }

    /// Splits the live list of slot `s` into survivors (kept) and discards
    /// (returned).
    fn discard_in_place(&mut self, s: usize) -> Vec<u32> {
        let k = self.residual_degree(s);
        let limbs = self.codebook.limbs();
        let start = s * self.width;
        self.masks.fill(&self.residual[start..start + self.width], k, limbs);
        let mut discarded = Vec::new();
        let (masks, codebook) = (&self.masks, self.codebook);
        self.live[s].retain(|&c| {
            let keep = masks.compatible(codebook.word(c as usize));
            if !keep {
                discarded.push(c);
            }
            keep
        });
        discarded
    }

    /// Per-slot discarding on slot `s`. The survivor list replaces the live
    /// list; the survivors are returned when their number equals the residual
    /// degree.
    pub fn resolve_slot(&mut self, s: usize) -> Result<Option<Vec<u32>>> {
        let k = self.residual_degree(s);
        if k == 0 {
            return Ok(None);
        }
        let discarded = self.discard_in_place(s);
        self.audit_discards(&discarded)?;
        self.settle(s, k)
    }

    fn settle(&self, s: usize, k: u32) -> Result<Option<Vec<u32>>> {
        let survivors = self.live[s].len();
        match survivors.cmp(&(k as usize)) {
            std::cmp::Ordering::Equal => Ok(Some(self.live[s].clone())),
            std::cmp::Ordering::Greater => Ok(None),
            std::cmp::Ordering::Less => Err(Error::Inconsistent(format!(
                "slot {s} has residual degree {k} but only {survivors} compatible candidates"
            ))),
        }
    }

    fn singleton_match(&mut self, s: usize) -> Result<Option<Vec<u32>>> {
        let start = s * self.width;
        self.masks.fill(&self.residual[start..start + self.width], 1, self.codebook.limbs());
        let mut hits = self.live[s].iter().copied().filter(|&c| self.masks.compatible(self.codebook.word(c as usize)));
        match (hits.next(), hits.next()) {
            (Some(c), None) => Ok(Some(vec![c])),
            (None, _) => Err(Error::Inconsistent(format!("singleton slot {s} matches no candidate"))),
            (Some(_), Some(_)) => Err(Error::CodebookProperty(format!("singleton slot {s} matches two codewords"))),
        }
    }

    /// Removes `c` from every list it still sits in and marks those slots for
    /// another look. Returns whether any list other than `except` changed.
    fn eliminate(&mut self, c: u32, except: usize) -> bool {
        if self.eliminated[c as usize] {
            return false;
        }
        self.eliminated[c as usize] = true;
        let mut changed = false;
        for &t in self.graph.slots_of(c as usize) {
            let t = t as usize;
            if t == except {
                continue;
            }
            let list = &mut self.live[t];
            if let Some(pos) = list.iter().position(|&x| x == c) {
                list.remove(pos);
                self.dirty[t] = true;
                changed = true;
            }
        }
        changed
    }

    fn cancel(&mut self, c: u32) {
        let i = c as usize;
        self.resolved[i] = true;
        self.resolved_list.push(i);
        self.eliminated[i] = true;
        for &t in self.graph.slots_of(i) {
            let t = t as usize;
            let row = &mut self.residual[t * self.width..(t + 1) * self.width];
            self.codebook.subtract_from(i, row);
            if let Some(pos) = self.live[t].iter().position(|&x| x == c) {
                self.live[t].remove(pos);
            }
            self.dirty[t] = true;
        }
    }

    fn try_slot(&mut self, kind: DecoderKind, s: usize, k: u32) -> Result<(Option<Vec<u32>>, bool)> {
        match kind {
            DecoderKind::Singleton => Ok((if k == 1 { self.singleton_match(s)? } else { None }, false)),
            DecoderKind::EdMpr => Ok((self.resolve_slot(s)?, false)),
            DecoderKind::EdFg => {
                let discarded = self.discard_in_place(s);
                self.audit_discards(&discarded)?;
                let mut spread = false;
                for c in discarded {
                    spread |= self.eliminate(c, s);
                }
                Ok((self.settle(s, k)?, spread))
            }
            DecoderKind::Pvtc => {
                let t = match self.codebook.kind() {
                    CodebookKind::Bch { t, .. } => *t,
                    _ => return Err(invalid("the BCH baseline needs a BCH parity-column codebook")),
                };
                Ok((pvtc_slot_decode(self.residual(s), k, &self.live[s], self.codebook, t)?, false))
            }
        }
    }

    /// Runs the peeling loop for `kind` until a sweep changes nothing.
    pub fn run(&mut self, kind: DecoderKind) -> Result<()> {
        loop {
            self.iteration += 1;
            let mut changed = false;
            for s in 0..self.graph.slots() {
                if !self.dirty[s] {
                    continue;
                }
                self.dirty[s] = false;
                let k = self.residual_degree(s);
                if k == 0 {
                    continue;
                }
                let (found, spread) = self.try_slot(kind, s, k)?;
                changed |= spread;
                if let Some(set) = found {
                    self.audit_resolution(&set)?;
                    self.log.push(SlotEvent { iteration: self.iteration, slot: s, degree: k });
                    for c in set {
                        self.cancel(c);
                    }
                    changed = true;
                }
            }
            if !changed {
                return Ok(());
            }
        }
    }

    pub fn outcome(&self) -> DecodeOutcome {
        let mut decoded = self.resolved_list.clone();
        decoded.sort_unstable();
        let undecoded = match &self.transmitted {
            Some(sent) => sent.iter().filter(|&&x| x).count() - decoded.len(),
            None => 0,
        };
        DecodeOutcome { decoded, undecoded, iterations: self.iteration, per_slot_log: self.log.clone() }
    }
}

/// Decodes one frame with `kind`, auditing every pass against the frame's
/// recorded transmit set.
pub fn decode(kind: DecoderKind, frame: &ReceivedFrame, graph: &FrameGraph, codebook: &Codebook) -> Result<DecodeOutcome> {
    let mut state = DecoderState::new(frame, graph, codebook)?.with_audit(frame.truth());
    state.run(kind)?;
    Ok(state.outcome())
}

pub fn ed_mpr_decode(frame: &ReceivedFrame, graph: &FrameGraph, codebook: &Codebook) -> Result<DecodeOutcome> {
    decode(DecoderKind::EdMpr, frame, graph, codebook)
}

pub fn ed_fg_decode(frame: &ReceivedFrame, graph: &FrameGraph, codebook: &Codebook) -> Result<DecodeOutcome> {
    decode(DecoderKind::EdFg, frame, graph, codebook)
}

pub fn singleton_decode(frame: &ReceivedFrame, graph: &FrameGraph, codebook: &Codebook) -> Result<DecodeOutcome> {
    decode(DecoderKind::Singleton, frame, graph, codebook)
}

pub fn pvtc_decode(frame: &ReceivedFrame, graph: &FrameGraph, codebook: &Codebook) -> Result<DecodeOutcome> {
    decode(DecoderKind::Pvtc, frame, graph, codebook)
}
