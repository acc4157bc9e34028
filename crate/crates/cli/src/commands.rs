//! Subcommand implementations. Each validates the whole configuration before
//! doing any work and returns a [`Table`].

use irsa_bac::analysis::{
    asymptotic_profile, asymptotic_sum_rate, de_evolve, de_threshold, joint_pmf_a0_au, pi_u_asymptotic, pi_u_exact,
    pi_u_half, pi_u_lower_bound, pvtc_capability, region_boundaries, sum_rate, threshold_ed_mpr, AsymptoticRegime,
    MprProfile, DEFAULT_TOL,
};
use irsa_bac::montecarlo::{sweep, ExperimentSpec, FrameBudget, PointParams, DEFAULT_BATCH, DEFAULT_FRAMES};
use irsa_bac::{DecoderKind, Execution};

use crate::config::RunConfig;
use crate::row;
use crate::table::Table;
use crate::CliError;

pub const SIMULATE_SCHEMA: &str = "simulate/v1";
pub const THRESHOLD_SCHEMA: &str = "threshold/v1";

/// Command-line values that take precedence over the file.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub frames: Option<u64>,
    pub tol: Option<f64>,
}

/// A finished table plus per-point failures that did not stop the run.
#[derive(Debug)]
pub struct Outcome {
    pub table: Table,
    pub failures: Vec<String>,
}

impl From<Table> for Outcome {
    fn from(table: Table) -> Self {
        Self { table, failures: Vec::new() }
    }
}

fn cfg_err(e: impl ToString) -> CliError {
    CliError::Config(e.to_string())
}

fn run_err(e: impl ToString) -> CliError {
    CliError::Runtime(e.to_string())
}

fn positive(x: f64, key: &str) -> Result<f64, CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(cfg_err(format!("`{key}` must be positive, got {x}")))
    }
}

fn tolerance(cfg: &RunConfig, o: &Overrides) -> Result<f64, CliError> {
    positive(o.tol.or(cfg.tol).unwrap_or(DEFAULT_TOL), "tol")
}

fn loads(cfg: &RunConfig, slots: usize, mu: f64) -> Result<Vec<f64>, CliError> {
    if let Some(g) = RunConfig::grid(&cfg.load_grid, "G_grid").map_err(cfg_err)? {
        return Ok(g);
    }
    let users = match RunConfig::grid(&cfg.users_grid, "K_grid").map_err(cfg_err)? {
        Some(k) => k,
        None => vec![RunConfig::require(cfg.users, "G_grid").map_err(cfg_err)?],
    };
    Ok(users.iter().map(|k| mu * k / slots as f64).collect())
}

fn regime(cfg: &RunConfig, load: f64) -> Result<AsymptoticRegime, CliError> {
    let beta = RunConfig::require(cfg.beta, "beta").map_err(cfg_err)?;
    let delta = RunConfig::require(cfg.delta, "delta").map_err(cfg_err)?;
    AsymptoticRegime::new(load, cfg.offset.unwrap_or(1.0), beta, delta, cfg.mu.unwrap_or(1.0)).map_err(cfg_err)
}

fn threshold_schemes(cfg: &RunConfig) -> Result<Vec<DecoderKind>, CliError> {
    let names = cfg.decoders.clone().unwrap_or_else(|| vec!["original".into(), "pvtc".into(), "ed-mpr".into()]);
    names
        .iter()
        .map(|n| match n.parse::<DecoderKind>().map_err(cfg_err)? {
            DecoderKind::EdFg => Err(cfg_err("ed-fg has no density-evolution profile")),
            k => Ok(k),
        })
        .collect()
}

/// Monte Carlo packet loss over a load grid.
pub fn simulate(cfg: &RunConfig, o: &Overrides, exec: Execution) -> Result<Outcome, CliError> {
    let slots = RunConfig::require(cfg.slots, "N").map_err(cfg_err)?;
    let mu = cfg.mu.unwrap_or(1.0);
    let degrees = cfg.degrees().map_err(cfg_err)?;
    let rounding = cfg.rounding().map_err(cfg_err)?;
    let nu = cfg.nu.unwrap_or(0.5);
    let decoders = match &cfg.decoders {
        Some(names) => names.iter().map(|n| n.parse::<DecoderKind>()).collect::<Result<Vec<_>, _>>().map_err(cfg_err)?,
        None => DecoderKind::ALL.to_vec(),
    };
    let mut points = Vec::new();
    for g in loads(cfg, slots, mu)? {
        let r = regime(cfg, positive(g, "G")?)?;
        points.push(PointParams::from_regime(&r, slots, degrees.clone(), nu, rounding).map_err(cfg_err)?);
    }
    let frames = o.frames.or(cfg.frames).unwrap_or(DEFAULT_FRAMES);
    let budget = FrameBudget {
        frames,
        batch: cfg.batch.unwrap_or(DEFAULT_BATCH).min(frames.max(1)),
        target_rel_width: cfg.target_rel_width,
    };
    let spec = ExperimentSpec { points, decoders, budget, master_seed: o.seed.or(cfg.seed).unwrap_or(1) };
    spec.validate().map_err(cfg_err)?;

    let header = ["point_id", "G", "K", "N", "M", "n0", "decoder", "frames", "packets", "lost", "plr", "ci_low", "ci_high"];
    let mut table = Table::new(SIMULATE_SCHEMA, &header);
    let mut failures = Vec::new();
    for (id, run) in sweep(&spec, exec).into_iter().enumerate() {
        match run {
            Ok(run) => {
                for e in run.estimates {
                    table.push(row![
                        e.point_id, e.load, e.users, e.slots, e.codewords, e.n0, e.decoder, e.frames, e.packets, e.lost,
                        e.plr, e.ci_low, e.ci_high
                    ]);
                }
                if run.soundness_violations + run.dominance_violations > 0 {
                    failures.push(format!(
                        "point {id}: {} soundness and {} dominance violations",
                        run.soundness_violations, run.dominance_violations
                    ));
                }
            }
            Err(e) => failures.push(format!("point {id} (G = {}): {e}", spec.points[id].load)),
        }
    }
    Ok(Outcome { table, failures })
}

/// Analytical curves selected by `mode`.
pub fn analyze(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.mode.as_deref() {
        Some("pmf") => pmf(cfg),
        Some("pi-u") => pi_u(cfg),
        Some("regions") => regions(cfg),
        Some("de") => density(cfg),
        Some("sum-rate") => rates(cfg),
        Some(m) => Err(cfg_err(format!("unknown mode `{m}`; expected pmf, pi-u, regions, de or sum-rate"))),
        None => Err(cfg_err("missing key `mode`")),
    }
    .map(Outcome::from)
}

fn nu_of(cfg: &RunConfig) -> Result<f64, CliError> {
    let nu = cfg.nu.unwrap_or(0.5);
    if nu > 0.0 && nu < 1.0 {
        Ok(nu)
    } else {
        Err(cfg_err(format!("`nu` must lie in (0, 1), got {nu}")))
    }
}

fn max_degree(cfg: &RunConfig, default: u32) -> Result<u32, CliError> {
    match cfg.max_degree.unwrap_or(default) {
        0 => Err(cfg_err("`U_max` must be at least 1")),
        u => Ok(u),
    }
}

/// Joint law of (A_0, A_U) for U = 1..=U_max.
fn pmf(cfg: &RunConfig) -> Result<Table, CliError> {
    let n0 = RunConfig::require(cfg.n0, "n0").map_err(cfg_err)?;
    let nu = nu_of(cfg)?;
    let u_max = max_degree(cfg, 2)?;
    let mut table = Table::new("pmf/v1", &["n0", "nu", "U", "A0", "AU", "prob"]);
    for u in 1..=u_max {
        for e in joint_pmf_a0_au(n0, nu, u).map_err(run_err)?.entries {
            table.push(row![n0, nu, u, e.a0, e.au, e.prob]);
        }
    }
    Ok(table)
}

/// Resolution probability per slot degree over a user grid.
fn pi_u(cfg: &RunConfig) -> Result<Table, CliError> {
    let load = positive(RunConfig::require(cfg.load, "G").map_err(cfg_err)?, "G")?;
    let reg = regime(cfg, load)?;
    let nu = nu_of(cfg)?;
    let u_max = max_degree(cfg, 10)?;
    let degrees = cfg.degrees().map_err(cfg_err)?;
    let rounding = cfg.rounding().map_err(cfg_err)?;
    let users = match RunConfig::grid(&cfg.users_grid, "K_grid").map_err(cfg_err)? {
        Some(k) => k,
        None => vec![RunConfig::require(cfg.users, "K_grid").map_err(cfg_err)?],
    };
    let mut points = Vec::new();
    for k in users {
        let p = reg.finite_point(positive(k, "K")?, rounding);
        if p.codewords < u_max as u64 {
            return Err(cfg_err(format!("K = {k} gives M = {} < U_max", p.codewords)));
        }
        if degrees.average_degree() >= p.slots as f64 {
            return Err(cfg_err(format!("K = {k} gives only {} slots", p.slots)));
        }
        points.push(p);
    }
    let avg = degrees.average_degree();
    let header = ["K", "N", "M", "n0", "U", "pi_exact", "pi_half", "pi_lower", "pi_asymptotic"];
    let mut table = Table::new("pi-u/v1", &header);
    for p in points {
        let rate = p.rate(avg);
        for u in 1..=u_max {
            let exact = pi_u_exact(u, p.n0, nu, p.codewords, rate).map_err(run_err)?;
            let half = pi_u_half(u, p.n0, p.codewords, rate).map_err(run_err)?;
            let lower = pi_u_lower_bound(u, p.n0, p.codewords, rate).map_err(run_err)?;
            let asym = pi_u_asymptotic(u, &reg, avg);
            table.push(row![p.users, p.slots, p.codewords, p.n0, u, exact, half, lower, asym]);
        }
    }
    Ok(table)
}

/// Boundaries of the (β, δ) regions.
fn regions(cfg: &RunConfig) -> Result<Table, CliError> {
    let betas = RunConfig::grid(&cfg.beta_grid, "beta_grid").map_err(cfg_err)?.unwrap_or_default();
    for &b in &betas {
        if b < 1.0 {
            return Err(cfg_err(format!("beta_grid values must be at least 1, got {b}")));
        }
    }
    let mut table = Table::new("regions/v1", &["beta", "T_pvtc", "delta_lower", "delta_upper"]);
    for b in betas {
        let (lo, hi) = region_boundaries(b);
        table.push(row![b, pvtc_capability(b), lo, hi]);
    }
    Ok(table)
}

fn profile_for(kind: DecoderKind, reg: &AsymptoticRegime, avg: f64) -> Result<MprProfile, CliError> {
    match kind {
        DecoderKind::Singleton => Ok(MprProfile::singleton()),
        DecoderKind::Pvtc => Ok(MprProfile::up_to(pvtc_capability(reg.beta))),
        DecoderKind::EdMpr => asymptotic_profile(reg, avg).map_err(run_err),
        DecoderKind::EdFg => unreachable!("rejected during validation"),
    }
}

/// Density-evolution trajectories for each scheme and load.
fn density(cfg: &RunConfig) -> Result<Table, CliError> {
    let degrees = cfg.degrees().map_err(cfg_err)?;
    let schemes = threshold_schemes(cfg)?;
    let iterations = cfg.iterations.unwrap_or(100);
    let loads = RunConfig::grid(&cfg.load_grid, "G_grid").map_err(cfg_err)?.unwrap_or_default();
    let mut regimes = Vec::new();
    for &g in &loads {
        regimes.push(regime(cfg, positive(g, "G")?)?);
    }
    let avg = degrees.average_degree();
    let mut table = Table::new("de/v1", &["scheme", "G", "iteration", "p"]);
    for &kind in &schemes {
        for reg in &regimes {
            let profile = profile_for(kind, reg, avg)?;
            let path = de_evolve(&degrees, &profile, reg.load, 1.0, iterations).map_err(run_err)?;
            for (i, p) in path.into_iter().enumerate() {
                table.push(row![kind, reg.load, i, p]);
            }
        }
    }
    Ok(table)
}

/// Finite-frame and limiting sum rates over a load grid.
fn rates(cfg: &RunConfig) -> Result<Table, CliError> {
    let slots = RunConfig::require(cfg.slots, "N").map_err(cfg_err)?;
    let mu = cfg.mu.unwrap_or(1.0);
    let rounding = cfg.rounding().map_err(cfg_err)?;
    let mut table = Table::new("sum-rate/v1", &["G", "K", "N", "M", "n0", "R_sum", "R_asymptotic"]);
    for g in loads(cfg, slots, mu)? {
        let reg = regime(cfg, positive(g, "G")?)?;
        let users = (g * slots as f64 / mu).round().max(1.0);
        let p = reg.finite_point(users, rounding);
        let r = sum_rate(mu, users, slots as f64, p.codewords as f64, p.n0);
        table.push(row![g, p.users, slots, p.codewords, p.n0, r, asymptotic_sum_rate(&reg)]);
    }
    Ok(table)
}

/// Decoding thresholds and achievable sum rates over a β grid.
pub fn threshold(cfg: &RunConfig, o: &Overrides) -> Result<Outcome, CliError> {
    let degrees = cfg.degrees().map_err(cfg_err)?;
    let schemes = threshold_schemes(cfg)?;
    let tol = tolerance(cfg, o)?;
    let betas = RunConfig::grid(&cfg.beta_grid, "beta_grid").map_err(cfg_err)?.unwrap_or_default();
    let mut regimes = Vec::new();
    for &b in &betas {
        let mut c = cfg.clone();
        c.beta = Some(b);
        regimes.push(regime(&c, 1.0)?);
    }
    let mut table = Table::new(THRESHOLD_SCHEMA, &["beta", "scheme", "G_star", "R_sum"]);
    for reg in &regimes {
        for &kind in &schemes {
            let g = match kind {
                DecoderKind::EdMpr => threshold_ed_mpr(&degrees, reg, tol),
                _ => de_threshold(&degrees, &profile_for(kind, reg, degrees.average_degree())?, tol),
            }
            .map_err(run_err)?;
            table.push(row![reg.beta, kind, g, asymptotic_sum_rate(&reg.with_load(g))]);
        }
    }
    Ok(table.into())
}
