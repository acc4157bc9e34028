//! Monte-Carlo estimation of packet loss rates and per-slot resolution
//! probabilities.
//!
//! Every frame draws its randomness from streams addressed by the frame
//! index, so a point gives bit-identical results for any worker count.
//! Frames run in fixed-size batches; the optional early stop is checked only
//! at batch boundaries.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::analysis::{pvtc_capability, AsymptoticRegime, PayloadRounding};
use crate::codebook::{gen_bch_codebook, gen_iid_codebook, Codebook, FrameGraph};
use crate::decoders::{decode, is_sorted_subset, DecodeOutcome, DecoderKind};
use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::protocol::{assign_codewords, sample_active_set, transmit, DegreeDistribution, ScenarioConfig};
use crate::rng::{stream, Purpose};

pub const DEFAULT_FRAMES: u64 = 10_000;
pub const DEFAULT_BATCH: u64 = 1_000;
/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.959_963_984_540_054;

/// 95% Wilson score interval for `hits` out of `trials`. Zero trials give the
/// degenerate interval `[0, 0]`.
pub fn wilson_interval(hits: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 0.0);
    }
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0).min(p), (centre + half).min(1.0).max(p))
}

/// Parameters of one simulated operating point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointParams {
    pub load: f64,
    pub users: usize,
    pub slots: usize,
    pub codewords: usize,
    pub n0: usize,
    pub activation: f64,
    pub nu: f64,
    pub degrees: DegreeDistribution,
    /// Collision capability of the BCH book used by the PVTC decoder.
    pub pvtc_capability: u32,
}

impl PointParams {
    /// Instantiates `K = G N / μ`, `M = K^{1/δ}` and `n0 = β log2 M`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_load(
        load: f64,
        slots: usize,
        activation: f64,
        beta: f64,
        delta: f64,
        degrees: DegreeDistribution,
        nu: f64,
        rounding: PayloadRounding,
    ) -> Result<Self> {
        let regime = AsymptoticRegime::new(load, 1.0, beta, delta, activation)?;
        Self::from_regime(&regime, slots, degrees, nu, rounding)
    }

    /// Instantiates `K = G N / μ`, `M = D K^{1/δ}` and `n0 = β log2 M`.
    pub fn from_regime(
        regime: &AsymptoticRegime,
        slots: usize,
        degrees: DegreeDistribution,
        nu: f64,
        rounding: PayloadRounding,
    ) -> Result<Self> {
        regime.validate()?;
        let users = (regime.load * slots as f64 / regime.activation).round().max(1.0);
        let codewords = (regime.offset * users.powf(1.0 / regime.delta)).round().max(users);
        let p = Self {
            load: regime.load,
            users: users as usize,
            slots,
            codewords: codewords as usize,
            n0: rounding.apply(regime.beta * codewords.log2()),
            activation: regime.activation,
            nu,
            degrees,
            pvtc_capability: pvtc_capability(regime.beta).max(1),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario()?;
        if self.codewords == 0 || self.n0 == 0 {
            return Err(invalid("codebook needs M ≥ 1 and n0 ≥ 1"));
        }
        if !(self.nu > 0.0 && self.nu < 1.0) {
            return Err(invalid("ν must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn scenario(&self) -> Result<ScenarioConfig> {
        ScenarioConfig::new(self.users, self.activation, self.slots, self.degrees.clone())
    }

    /// Smallest field degree `m` with `2^m − 1 ≥ M`.
    pub fn bch_degree(&self) -> u32 {
        let mut m = 2;
        while ((1u64 << m) - 1) < self.codewords as u64 {
            m += 1;
        }
        m
    }

    /// Payload length of the decoder's codebook.
    pub fn n0_for(&self, decoder: DecoderKind) -> usize {
        if decoder.needs_bch() {
            (self.pvtc_capability * self.bch_degree()) as usize
        } else {
            self.n0
        }
    }
}

/// A point with its codebooks and frame graph built once.
#[derive(Clone, Debug)]
pub struct PreparedPoint {
    pub params: PointParams,
    pub scenario: ScenarioConfig,
    pub graph: FrameGraph,
    iid: Option<Codebook>,
    bch: Option<Codebook>,
}

impl PreparedPoint {
    /// Builds only the codebooks the listed decoders need. All decoders share
    /// the graph, so they see the same replica placement.
    pub fn build(params: PointParams, decoders: &[DecoderKind], master_seed: u64, exec: Execution) -> Result<Self> {
        params.validate()?;
        let scenario = params.scenario()?;
        let graph = FrameGraph::build_with(params.codewords, &params.degrees, params.slots, master_seed, exec)?;
        let iid = if decoders.iter().any(|d| !d.needs_bch()) {
            Some(gen_iid_codebook(params.codewords, params.n0, params.nu, master_seed)?)
        } else {
            None
        };
        let bch = if decoders.iter().any(|d| d.needs_bch()) {
            Some(gen_bch_codebook(params.bch_degree(), params.pvtc_capability, params.codewords)?)
        } else {
            None
        };
        Ok(Self { params, scenario, graph, iid, bch })
    }

    pub fn codebook(&self, decoder: DecoderKind) -> Result<&Codebook> {
        let book = if decoder.needs_bch() { &self.bch } else { &self.iid };
        book.as_ref().ok_or_else(|| invalid(format!("point was not prepared for decoder {decoder}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlrEstimate {
    pub point_id: usize,
    pub load: f64,
    pub users: usize,
    pub slots: usize,
    pub codewords: usize,
    pub n0: usize,
    pub decoder: DecoderKind,
    pub frames: u64,
    pub packets: u64,
    pub lost: u64,
    pub plr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl PlrEstimate {
    fn new(point_id: usize, params: &PointParams, decoder: DecoderKind, counts: Counts) -> Self {
        let plr = if counts.packets == 0 { 0.0 } else { counts.lost as f64 / counts.packets as f64 };
        let (ci_low, ci_high) = wilson_interval(counts.lost, counts.packets);
        Self {
            point_id,
            load: params.load,
            users: params.users,
            slots: params.slots,
            codewords: params.codewords,
            n0: params.n0_for(decoder),
            decoder,
            frames: counts.frames,
            packets: counts.packets,
            lost: counts.lost,
            plr,
            ci_low,
            ci_high,
        }
    }

    /// `(ci_high − ci_low) / plr`, infinite while no loss has been seen.
    pub fn relative_ci_width(&self) -> f64 {
        if self.lost == 0 {
            f64::INFINITY
        } else {
            (self.ci_high - self.ci_low) / self.plr
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Counts {
    frames: u64,
    packets: u64,
    lost: u64,
}

impl Counts {
    fn add(self, o: Self) -> Self {
        Self { frames: self.frames + o.frames, packets: self.packets + o.packets, lost: self.lost + o.lost }
    }
}

/// Aggregate of one point run with several decoders on the same frames.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharedRun {
    pub estimates: Vec<PlrEstimate>,
    /// Frames where a weaker decoder recovered a packet a stronger one missed.
    pub dominance_violations: u64,
    /// Frames where some decoder output a codeword that was not sent.
    pub soundness_violations: u64,
}

/// Frame budget and optional stopping rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameBudget {
    pub frames: u64,
    pub batch: u64,
    /// Stop once every decoder's relative CI width is at most this.
    pub target_rel_width: Option<f64>,
}

impl FrameBudget {
    pub fn fixed(frames: u64) -> Self {
        Self { frames, batch: DEFAULT_BATCH, target_rel_width: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return Err(invalid("frame budget must be at least 1"));
        }
        if self.batch == 0 {
            return Err(invalid("batch size must be at least 1"));
        }
        if let Some(w) = self.target_rel_width {
            if w.is_nan() || w <= 0.0 {
                return Err(invalid("target CI width must be positive"));
            }
        }
        Ok(())
    }
}

impl Default for FrameBudget {
    fn default() -> Self {
        Self::fixed(DEFAULT_FRAMES)
    }
}

/// Ordered pairs `(weaker, stronger)` whose decoded sets must nest.
const DOMINANCE: [(DecoderKind, DecoderKind); 2] =
    [(DecoderKind::Singleton, DecoderKind::EdMpr), (DecoderKind::EdMpr, DecoderKind::EdFg)];

#[derive(Clone, Debug, Default)]
struct FrameTally {
    per_decoder: Vec<Counts>,
    dominance: u64,
    soundness: u64,
}

impl FrameTally {
    fn zeros(n: usize) -> Self {
        Self { per_decoder: vec![Counts::default(); n], dominance: 0, soundness: 0 }
    }

    fn merge(mut self, o: Self) -> Self {
        for (a, b) in self.per_decoder.iter_mut().zip(o.per_decoder) {
            *a = a.add(b);
        }
        self.dominance += o.dominance;
        self.soundness += o.soundness;
        self
    }
}

/// One frame scored by several decoders.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimulatedFrame {
    pub active: usize,
    /// Transmitted codeword indices, sorted. `None` when more users were
    /// active than there are codewords.
    pub truth: Option<Vec<usize>>,
    /// One outcome per decoder, empty for overloaded frames.
    pub outcomes: Vec<DecodeOutcome>,
}

/// Draws frame `frame` and decodes it with every decoder in `decoders`.
pub fn simulate_frame(point: &PreparedPoint, decoders: &[DecoderKind], master_seed: u64, frame: u64) -> Result<SimulatedFrame> {
    let active = sample_active_set(&point.scenario, &mut stream(master_seed, Purpose::Activation, frame)).len();
    let mut assigned = match assign_codewords(active, point.params.codewords, &mut stream(master_seed, Purpose::Assignment, frame)) {
        Ok(a) => a,
        Err(Error::FrameOverload { .. }) => return Ok(SimulatedFrame { active, truth: None, outcomes: Vec::new() }),
        Err(e) => return Err(e),
    };
    let mut outcomes = Vec::with_capacity(decoders.len());
    for &kind in decoders {
        let book = point.codebook(kind)?;
        let received = transmit(book, &point.graph, &assigned);
        outcomes.push(decode(kind, &received, &point.graph, book)?);
    }
    assigned.sort_unstable();
    Ok(SimulatedFrame { active, truth: Some(assigned), outcomes })
}

fn tally_frame(point: &PreparedPoint, decoders: &[DecoderKind], master_seed: u64, frame: u64) -> Result<FrameTally> {
    let sim = simulate_frame(point, decoders, master_seed, frame)?;
    let mut t = FrameTally::zeros(decoders.len());
    let packets = sim.active as u64;
    let Some(truth) = sim.truth else {
        for c in &mut t.per_decoder {
            *c = Counts { frames: 1, packets, lost: packets };
        }
        return Ok(t);
    };
    for (c, o) in t.per_decoder.iter_mut().zip(&sim.outcomes) {
        *c = Counts { frames: 1, packets, lost: packets - o.decoded.len() as u64 };
    }
    if sim.outcomes.iter().any(|o| !o.is_sound(&truth)) {
        t.soundness += 1;
    }
    let find = |k: DecoderKind| decoders.iter().position(|&d| d == k).map(|i| &sim.outcomes[i].decoded);
    if DOMINANCE.iter().any(|&(weak, strong)| match (find(weak), find(strong)) {
        (Some(w), Some(s)) => !is_sorted_subset(w, s),
        _ => false,
    }) {
        t.dominance += 1;
    }
    Ok(t)
}

/// Runs `decoders` on a shared frame stream.
pub fn run_shared(
    point_id: usize,
    point: &PreparedPoint,
    decoders: &[DecoderKind],
    budget: FrameBudget,
    master_seed: u64,
    exec: Execution,
) -> Result<SharedRun> {
    budget.validate()?;
    if decoders.is_empty() {
        return Err(invalid("no decoder selected"));
    }
    let mut total = FrameTally::zeros(decoders.len());
    let mut done = 0u64;
    while done < budget.frames {
        let n = budget.batch.min(budget.frames - done);
        let batch = exec.map_reduce(
            0..n as usize,
            Ok(FrameTally::zeros(decoders.len())),
            |i| tally_frame(point, decoders, master_seed, done + i as u64),
            |a, b| match (a, b) {
                (Ok(a), Ok(b)) => Ok(a.merge(b)),
                (Err(e), _) | (_, Err(e)) => Err(e),
            },
        )?;
        total = total.merge(batch);
        done += n;
        if let Some(target) = budget.target_rel_width {
            let met = total
                .per_decoder
                .iter()
                .zip(decoders)
                .all(|(c, &d)| PlrEstimate::new(point_id, &point.params, d, *c).relative_ci_width() <= target);
            if met {
                break;
            }
        }
    }
    Ok(SharedRun {
        estimates: total
            .per_decoder
            .iter()
            .zip(decoders)
            .map(|(c, &d)| PlrEstimate::new(point_id, &point.params, d, *c))
            .collect(),
        dominance_violations: total.dominance,
        soundness_violations: total.soundness,
    })
}

/// Packet loss rate of one decoder at one point over `frames` frames.
pub fn run_plr_point(point: &PreparedPoint, decoder: DecoderKind, frames: u64, master_seed: u64, exec: Execution) -> Result<PlrEstimate> {
    let mut run = run_shared(0, point, &[decoder], FrameBudget::fixed(frames), master_seed, exec)?;
    Ok(run.estimates.remove(0))
}

/// A grid of points simulated with the same decoders and budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub points: Vec<PointParams>,
    pub decoders: Vec<DecoderKind>,
    pub budget: FrameBudget,
    pub master_seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.budget.validate()?;
        if self.decoders.is_empty() {
            return Err(invalid("no decoder selected"));
        }
        self.points.iter().try_for_each(PointParams::validate)
    }
}

/// Runs every point in grid order. A failing point yields an `Err` entry and
/// the sweep continues.
pub fn sweep(spec: &ExperimentSpec, exec: Execution) -> Vec<Result<SharedRun>> {
    spec.points
        .iter()
        .enumerate()
        .map(|(id, params)| {
            let point = PreparedPoint::build(params.clone(), &spec.decoders, spec.master_seed, exec)?;
            run_shared(id, &point, &spec.decoders, spec.budget, spec.master_seed, exec)
        })
        .collect()
}

/// Estimate of a single-slot resolution probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiEstimate {
    pub trials: u64,
    pub resolved: u64,
    pub estimate: f64,
    /// Binomial standard error at the Wilson centre.
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl PiEstimate {
    fn new(trials: u64, resolved: u64) -> Self {
        let estimate = resolved as f64 / trials as f64;
        let (ci_low, ci_high) = wilson_interval(resolved, trials);
        let centre = 0.5 * (ci_low + ci_high);
        Self { trials, resolved, estimate, std_error: (centre * (1.0 - centre) / trials as f64).sqrt(), ci_low, ci_high }
    }
}

/// Fraction of isolated degree-`u` slots in which no competing codeword
/// survives discarding, with `u` transmitted payloads and
/// `Bino(M − u, rate)` competitors all drawn i.i.d. Bernoulli(`nu`).
#[allow(clippy::too_many_arguments)]
pub fn run_pi_u_point(
    u: u32,
    n0: usize,
    nu: f64,
    codewords: u64,
    rate: f64,
    trials: u64,
    seed: u64,
    exec: Execution,
) -> Result<PiEstimate> {
    if u == 0 || codewords < u as u64 {
        return Err(invalid("need 1 ≤ U ≤ M"));
    }
    if !(nu > 0.0 && nu < 1.0) || !(rate > 0.0 && rate < 1.0) {
        return Err(invalid("ν and Λ'(1)/N must lie in (0, 1)"));
    }
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    let competitors = Binomial::new(codewords - u as u64, rate).map_err(|e| invalid(e.to_string()))?;
    let resolved = exec.map_reduce(
        0..trials as usize,
        0u64,
        |t| {
            let mut rng = stream(seed, Purpose::SlotTrial, t as u64);
            let mut sums = vec![0u32; n0];
            for _ in 0..u {
                for s in sums.iter_mut() {
                    *s += rng.random_bool(nu) as u32;
                }
            }
            let constrained: Vec<bool> = sums.iter().filter(|&&s| s == 0 || s == u).map(|&s| s == u).collect();
            let l0 = competitors.sample(&mut rng);
            let survives = |rng: &mut crate::rng::StreamRng| constrained.iter().all(|&one| rng.random_bool(nu) == one);
            u64::from((0..l0).all(|_| !survives(&mut rng)))
        },
        |a, b| a + b,
    );
    Ok(PiEstimate::new(trials, resolved))
}
