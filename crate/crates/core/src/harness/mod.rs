//! Seed ensembles, verdicts and reports.
//!
//! Every seed owns its own rng substream derived from `(master seed, index)`,
//! so per-seed records do not depend on how the ensemble is scheduled.

mod config;
mod export;
mod studies;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{
    parse_json, read_json, ConditionsConfig, CorrelationConfig, ExperimentConfig, ExperimentKind, ModeName, OutputSpec,
    ReportFormat, Tolerances,
};
pub use export::{export_report, report_to_csv, report_to_json, write_bytes};
pub use studies::{run_conditions, run_correlation_study, ConditionsReport, CorrelationReport};

use crate::error::{Error, Result};
use crate::recurrence::{checkpoint_grid, run_series, Checkpoint, HitSeries, TargetKind};
use crate::schedule::{partial_normalizer, ScheduleTable};
use crate::systems::{random_prime, OrbitMode, Seed, SystemDescriptor};

pub const REPORT_VERSION: &str = concat!("reclab ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub status: VerdictStatus,
    pub detail: String,
}

impl Verdict {
    fn new(name: &str, status: VerdictStatus, detail: String) -> Self {
        Self {
            name: name.to_string(),
            status,
            detail,
        }
    }

    fn check(name: &str, ok: bool, detail: String) -> Self {
        let status = if ok { VerdictStatus::Pass } else { VerdictStatus::Fail };
        Self::new(name, status, detail)
    }
}

/// True when every verdict passes (and there is at least one).
pub fn all_pass(verdicts: &[Verdict]) -> bool {
    !verdicts.is_empty() && verdicts.iter().all(|v| v.status == VerdictStatus::Pass)
}

/// Envelope outcome for one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeCheck {
    /// Checkpoints where the envelope was evaluated.
    pub checked: usize,
    /// Per evaluated checkpoint: `(N_j, passes)`.
    pub points: Vec<(u64, bool)>,
    /// Largest `|S - h Phi| / bound` seen.
    pub worst: f64,
    pub pass: bool,
}

/// Checks `|S_j - h Phi_j| <= C (h Phi_j)^(1/2) (ln h Phi_j)^(3/2 + eps)`
/// at every checkpoint with `h Phi_j > e`.
pub fn sprindzuk_envelope(series: &HitSeries, h: f64, c_env: f64, eps_env: f64) -> EnvelopeCheck {
    envelope_from(&series.checkpoints, h, c_env, eps_env, 0)
}

/// As [`sprindzuk_envelope`], restricted to checkpoints `N_j >= min_n`.
pub fn envelope_from(checkpoints: &[Checkpoint], h: f64, c_env: f64, eps_env: f64, min_n: u64) -> EnvelopeCheck {
    let mut points = Vec::new();
    let mut worst = 0.0f64;
    for cp in checkpoints.iter().filter(|c| c.n >= min_n) {
        let expected = h * cp.normalizer;
        if !(expected > std::f64::consts::E) {
            continue;
        }
        let bound = c_env * expected.sqrt() * expected.ln().powf(1.5 + eps_env);
        let dev = (cp.hits as f64 - expected).abs();
        worst = worst.max(dev / bound);
        points.push((cp.n, dev <= bound));
    }
    EnvelopeCheck {
        checked: points.len(),
        pass: points.iter().all(|p| p.1),
        points,
        worst,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub index: usize,
    pub x0: Vec<f64>,
    /// The seed as given, for exact seeds (`"a/q"` per axis).
    pub x0_exact: Option<String>,
    pub h_x0: f64,
    pub final_hits: u64,
    pub final_normalizer: f64,
    /// `S_N / Phi_N`.
    pub ratio: Option<f64>,
    /// `|ratio - target| / target`, target `h(x0)` or 1 for hat series.
    pub relative_error: Option<f64>,
    pub within_tolerance: bool,
    pub envelope: Option<EnvelopeCheck>,
    pub tail_hits: u64,
    pub last_hit: Option<u64>,
    pub checkpoints: Vec<Checkpoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub p5: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
}

impl Quantiles {
    /// Linear-interpolation quantiles; `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let i = pos.floor() as usize;
            let j = (i + 1).min(v.len() - 1);
            v[i] + (v[j] - v[i]) * (pos - i as f64)
        };
        Some(Self {
            p5: q(0.05),
            p25: q(0.25),
            p50: q(0.5),
            p75: q(0.75),
            p95: q(0.95),
        })
    }

    pub fn iqr(&self) -> f64 {
        self.p75 - self.p25
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub seeds: usize,
    /// Quantiles of `S_N / Phi_N`.
    pub ratio: Option<Quantiles>,
    /// Quantiles of `ratio / target`.
    pub normalized_ratio: Option<Quantiles>,
    pub relative_error: Option<Quantiles>,
    pub within_tolerance: usize,
    pub within_tolerance_rate: Option<f64>,
    pub envelope_checked: usize,
    pub envelope_pass_rate: Option<f64>,
    pub zero_tail_seeds: usize,
    pub zero_tail_rate: Option<f64>,
    pub max_total_hits: u64,
    pub final_normalizer: f64,
    /// Map steps taken over the whole ensemble.
    pub iterations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub mode: String,
    pub per_seed: Vec<SeedRecord>,
    pub aggregates: Aggregates,
    pub verdicts: Vec<Verdict>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        all_pass(&self.verdicts)
    }
}

/// What a config resolves to, without running it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub config_hash: String,
    pub experiment: ExperimentKind,
    pub system: String,
    pub mode: String,
    pub seeds: usize,
    pub n: u64,
    pub iterations: u64,
    pub checkpoints: Vec<u64>,
    pub schedule_divergent: bool,
    /// `Phi_N` for plain targets.
    pub final_normalizer: f64,
}

pub fn plan(config: &ExperimentConfig) -> Result<Plan> {
    config.validate()?;
    check_schedule_kind(config)?;
    let sys = config.system();
    let seeds = config.seed_count();
    Ok(Plan {
        config_hash: config.content_hash(),
        experiment: config.experiment,
        system: sys.name().to_string(),
        mode: config.orbit_mode().to_string(),
        seeds,
        n: config.n,
        iterations: config.n.saturating_mul(seeds as u64),
        checkpoints: checkpoints(config),
        schedule_divergent: config.schedule.is_divergent(),
        final_normalizer: partial_normalizer(&config.schedule, config.n, sys.dim())?,
    })
}

fn checkpoints(config: &ExperimentConfig) -> Vec<u64> {
    let mut cps = config.checkpoints.clone().unwrap_or_else(|| checkpoint_grid(config.n));
    cps.retain(|c| *c >= 1 && *c <= config.n);
    cps.sort_unstable();
    cps.dedup();
    if cps.last() != Some(&config.n) {
        cps.push(config.n);
    }
    cps
}

fn check_schedule_kind(config: &ExperimentConfig) -> Result<()> {
    let divergent = config.schedule.is_divergent();
    match config.experiment {
        ExperimentKind::Sbc | ExperimentKind::Hat if !divergent => Err(Error::InvalidArgument(
            "schedule is not divergent; run it as a convergence experiment".into(),
        )),
        ExperimentKind::Convergence if divergent => Err(Error::InvalidArgument(
            "schedule is divergent; run it as an sbc experiment".into(),
        )),
        _ => Ok(()),
    }
}

/// The seed used for ensemble member `index`.
pub fn seed_for(config: &ExperimentConfig, index: usize) -> Result<Seed> {
    let sys = config.system();
    if let Some(list) = &config.x0 {
        let text = list.get(index).ok_or(Error::OutOfRange { index, len: list.len() })?;
        let seed: Seed = text.parse()?;
        if seed.dim() != sys.dim() {
            return Err(Error::Config(format!(
                "seed '{text}' has dimension {} but {} has dimension {}",
                seed.dim(),
                sys.name(),
                sys.dim()
            )));
        }
        return Ok(seed);
    }
    let mode = config.orbit_mode();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64);
    let modulus = match mode {
        OrbitMode::ExactModular => random_prime(&mut rng, config.modulus_bits)?,
        _ => 0,
    };
    sys.sample_seed(&mode, &mut rng, modulus)
}

/// Runs a validated experiment. Parallelism follows the ambient rayon pool;
/// the report does not depend on it.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    check_schedule_kind(config)?;
    let sys = config.system();
    let mode = config.orbit_mode();
    let cps = checkpoints(config);
    let table = ScheduleTable::new(&config.schedule, config.n);
    let target = match config.experiment {
        ExperimentKind::Hat => TargetKind::Hat,
        _ => TargetKind::Plain,
    };
    let per_seed = (0..config.seed_count())
        .into_par_iter()
        .map(|i| run_one(config, &sys, mode, &table, &cps, target, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(config, mode, per_seed))
}

/// Plain-target experiment; refuses convergent schedules.
pub fn run_sbc_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    if config.experiment == ExperimentKind::Convergence {
        return Err(Error::InvalidArgument(
            "config describes a convergence experiment".into(),
        ));
    }
    run_experiment(config)
}

/// Convergent-schedule experiment; refuses divergent schedules.
pub fn run_convergence_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    if config.experiment != ExperimentKind::Convergence {
        let mut c = config.clone();
        c.experiment = ExperimentKind::Convergence;
        return run_experiment(&c);
    }
    run_experiment(config)
}

fn run_one(
    config: &ExperimentConfig,
    sys: &SystemDescriptor,
    mode: OrbitMode,
    table: &ScheduleTable,
    cps: &[u64],
    target: TargetKind,
    index: usize,
) -> Result<SeedRecord> {
    let seed = seed_for(config, index)?;
    let series = run_series(sys, &seed, table, config.n, mode, cps, target)?;
    let tol = &config.tolerances;
    let x0 = series.seed.clone();
    let h_x0 = sys.density_coords(&x0);
    let target_value = match target {
        TargetKind::Plain => h_x0,
        TargetKind::Hat => 1.0,
    };
    let ratio = series.final_ratio();
    let relative_error = ratio.map(|r| (r - target_value).abs() / target_value);
    let envelope = (config.experiment != ExperimentKind::Convergence).then(|| {
        envelope_from(
            &series.checkpoints,
            target_value,
            tol.envelope_c,
            tol.envelope_eps,
            tol.envelope_min_n,
        )
    });
    Ok(SeedRecord {
        index,
        x0,
        x0_exact: match &seed {
            Seed::Modular(m) => Some(m.to_string()),
            _ => None,
        },
        h_x0,
        final_hits: series.total_hits,
        final_normalizer: series.final_normalizer(),
        ratio,
        within_tolerance: relative_error.is_some_and(|e| e <= tol.ratio_tolerance),
        relative_error,
        envelope,
        tail_hits: series.hits_after(tol.tail_start),
        last_hit: series.last_hit,
        checkpoints: series.checkpoints,
    })
}

fn rate(count: usize, of: usize) -> Option<f64> {
    (of > 0).then(|| count as f64 / of as f64)
}

fn assemble(config: &ExperimentConfig, mode: OrbitMode, per_seed: Vec<SeedRecord>) -> ExperimentReport {
    let m = per_seed.len();
    let ratios: Vec<f64> = per_seed.iter().filter_map(|s| s.ratio).collect();
    let normalized: Vec<f64> = per_seed
        .iter()
        .filter_map(|s| {
            let target = if config.experiment == ExperimentKind::Hat {
                1.0
            } else {
                s.h_x0
            };
            s.ratio.map(|r| r / target)
        })
        .collect();
    let errors: Vec<f64> = per_seed.iter().filter_map(|s| s.relative_error).collect();
    let within = per_seed.iter().filter(|s| s.within_tolerance).count();
    let envelopes: Vec<&EnvelopeCheck> = per_seed
        .iter()
        .filter_map(|s| s.envelope.as_ref())
        .filter(|e| e.checked > 0)
        .collect();
    let envelope_pass = envelopes.iter().filter(|e| e.pass).count();
    let zero_tail = per_seed.iter().filter(|s| s.tail_hits == 0).count();
    let final_normalizer = per_seed
        .iter()
        .map(|s| s.final_normalizer)
        .fold(f64::INFINITY, f64::min);
    let aggregates = Aggregates {
        seeds: m,
        ratio: Quantiles::of(&ratios),
        normalized_ratio: Quantiles::of(&normalized),
        relative_error: Quantiles::of(&errors),
        within_tolerance: within,
        within_tolerance_rate: rate(within, m),
        envelope_checked: envelopes.len(),
        envelope_pass_rate: rate(envelope_pass, envelopes.len()),
        zero_tail_seeds: zero_tail,
        zero_tail_rate: rate(zero_tail, m),
        max_total_hits: per_seed.iter().map(|s| s.final_hits).max().unwrap_or(0),
        final_normalizer: if m == 0 { 0.0 } else { final_normalizer },
        iterations: config.n.saturating_mul(m as u64),
    };
    let verdicts = verdicts(config, &aggregates);
    ExperimentReport {
        version: REPORT_VERSION.to_string(),
        config_hash: config.content_hash(),
        config: config.canonical(),
        mode: mode.to_string(),
        per_seed,
        aggregates,
        verdicts,
    }
}

fn verdicts(config: &ExperimentConfig, a: &Aggregates) -> Vec<Verdict> {
    use VerdictStatus::Inconclusive;
    let tol = &config.tolerances;
    if config.experiment == ExperimentKind::Convergence {
        let mut out = Vec::new();
        if tol.tail_start >= config.n {
            out.push(Verdict::new(
                "tail_free",
                Inconclusive,
                format!("tail_start {} is not below N = {}", tol.tail_start, config.n),
            ));
        } else {
            let r = a.zero_tail_rate.unwrap_or(0.0);
            out.push(Verdict::check(
                "tail_free",
                r >= tol.tail_fraction,
                format!(
                    "{}/{} seeds without hits in ({}, {}]; required fraction {}",
                    a.zero_tail_seeds, a.seeds, tol.tail_start, config.n, tol.tail_fraction
                ),
            ));
        }
        if let Some(bound) = tol.max_total_hits {
            out.push(Verdict::check(
                "bounded_hits",
                a.max_total_hits <= bound,
                format!("largest per-seed hit count {} against bound {bound}", a.max_total_hits),
            ));
        }
        return out;
    }

    if !(a.final_normalizer >= tol.min_normalizer) {
        let detail = format!(
            "final normalizer {:.3} is below min_normalizer {}; ratios are not informative",
            a.final_normalizer, tol.min_normalizer
        );
        return ["ratio_tolerance", "median_ratio", "envelope"]
            .iter()
            .map(|n| Verdict::new(n, Inconclusive, detail.clone()))
            .collect();
    }
    let mut out = vec![Verdict::check(
        "ratio_tolerance",
        a.within_tolerance_rate.unwrap_or(0.0) >= tol.pass_fraction,
        format!(
            "{}/{} seeds with relative error <= {}; required fraction {}",
            a.within_tolerance, a.seeds, tol.ratio_tolerance, tol.pass_fraction
        ),
    )];
    out.push(match a.normalized_ratio {
        Some(q) => Verdict::check(
            "median_ratio",
            (q.p50 - 1.0).abs() <= tol.median_tolerance,
            format!(
                "median normalized ratio {:.6}; tolerance {}",
                q.p50, tol.median_tolerance
            ),
        ),
        None => Verdict::new("median_ratio", Inconclusive, "no finite ratios".into()),
    });
    out.push(match a.envelope_pass_rate {
        Some(r) => Verdict::check(
            "envelope",
            r >= tol.envelope_pass_fraction,
            format!(
                "{:.4} of {} seeds inside the envelope (C = {}, eps = {}) at N_j >= {}; required {}",
                r, a.envelope_checked, tol.envelope_c, tol.envelope_eps, tol.envelope_min_n, tol.envelope_pass_fraction
            ),
        ),
        None => Verdict::new(
            "envelope",
            Inconclusive,
            format!("no checkpoint with N_j >= {} and h Phi > e", tol.envelope_min_n),
        ),
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::RadiusSchedule;
    use crate::systems::SystemKind;

    fn cp(n: u64, hits: u64, normalizer: f64) -> Checkpoint {
        Checkpoint {
            n,
            hits,
            normalizer,
            ratio: Some(hits as f64 / normalizer),
        }
    }

    #[test]
    fn envelope_examples() {
        let exact = [cp(10, 100, 100.0), cp(100, 5000, 5000.0)];
        assert!(envelope_from(&exact, 1.0, 1e-6, 0.5, 0).pass);
        // 100 < 3 * 10 * ln(100)^2
        assert!(envelope_from(&[cp(1, 0, 100.0)], 1.0, 3.0, 0.5, 0).pass);
        assert!(!envelope_from(&[cp(1, 0, 1e6)], 1.0, 3.0, 0.5, 0).pass);
        // h Phi <= e is skipped
        let small = envelope_from(&[cp(1, 0, 2.0)], 1.0, 3.0, 0.5, 0);
        assert_eq!(small.checked, 0);
        assert!(small.pass);
        assert_eq!(envelope_from(&[cp(10, 0, 1e6)], 1.0, 3.0, 0.5, 100).checked, 0);
    }

    #[test]
    fn quantiles_interpolate() {
        let q = Quantiles::of(&[4.0, 1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!(q.p50, 3.0);
        assert_eq!(q.p25, 2.0);
        assert!((q.p5 - 1.2).abs() < 1e-12);
        assert_eq!(q.iqr(), 2.0);
        assert!(Quantiles::of(&[]).is_none());
    }

    fn config(json: &str) -> ExperimentConfig {
        ExperimentConfig::from_json_str(json).unwrap()
    }

    #[test]
    fn tiny_run_is_inconclusive() {
        let c = config(
            r#"{"system": "gauss", "schedule": {"family": "power_law", "exponents": [0.5], "scales": [1]},
                "n": 10, "ensemble": 1, "seed": 3}"#,
        );
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.per_seed.len(), 1);
        assert!(r.verdicts.iter().all(|v| v.status == VerdictStatus::Inconclusive));
        assert!(!r.passed());
    }

    #[test]
    fn refuses_wrong_schedule_kind() {
        let mut c = config(
            r#"{"system": "gauss", "schedule": {"family": "power_law", "exponents": [2], "scales": [1]},
                "n": 100, "ensemble": 2}"#,
        );
        assert!(matches!(run_sbc_experiment(&c), Err(Error::InvalidArgument(_))));
        assert!(run_convergence_experiment(&c).is_ok());
        c.schedule = RadiusSchedule::power(&[0.5]).unwrap();
        c.experiment = ExperimentKind::Convergence;
        assert!(run_experiment(&c).is_err());
    }

    #[test]
    fn zero_schedule_never_hits() {
        let c = config(
            r#"{"experiment": "convergence", "system": "beta_golden",
                "schedule": {"family": "power_law", "exponents": [0], "scales": [0]},
                "n": 2000, "ensemble": 5, "tolerances": {"max_total_hits": 0}}"#,
        );
        let r = run_experiment(&c).unwrap();
        assert!(r.per_seed.iter().all(|s| s.final_hits == 0));
        assert!(r.passed(), "{:?}", r.verdicts);
    }

    #[test]
    fn periodic_seed_returns_exactly() {
        let c = config(
            r#"{"experiment": "convergence", "system": "doubling", "mode": "exact_modular",
                "schedule": {"family": "power_law", "exponents": [2], "scales": [1]},
                "n": 1000, "x0": ["1/3"], "tolerances": {"tail_start": 10}}"#,
        );
        let r = run_experiment(&c).unwrap();
        let s = &r.per_seed[0];
        // k = 1 hits at distance 1/3 <= r_1; 1/3 has period 2, so every
        // even k is an exact return
        assert_eq!(s.final_hits, 501);
        assert_eq!(s.last_hit, Some(1000));
        assert_eq!(s.tail_hits, 495);
        assert_eq!(s.x0_exact.as_deref(), Some("1/3"));
    }

    #[test]
    fn seeds_are_independent_of_ensemble_size() {
        let base = r#"{"system": "toral_diag23",
            "schedule": {"family": "power_law", "exponents": [0.2, 0.3], "scales": [1, 1]},
            "n": 500, "ensemble": ENS, "seed": 11}"#;
        let small = run_experiment(&config(&base.replace("ENS", "2"))).unwrap();
        let large = run_experiment(&config(&base.replace("ENS", "4"))).unwrap();
        assert_eq!(small.per_seed[..], large.per_seed[..2]);
        assert_ne!(large.per_seed[0].x0, large.per_seed[1].x0);
    }

    #[test]
    fn report_is_identical_across_pool_sizes() {
        let c = config(
            r#"{"system": "gauss", "schedule": {"family": "power_law", "exponents": [0.5], "scales": [1]},
                "n": 3000, "ensemble": 6, "seed": 5}"#,
        );
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            report_to_json(&pool.install(|| run_experiment(&c)).unwrap()).unwrap()
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn hat_uses_unit_target() {
        let c = config(
            r#"{"experiment": "hat", "system": "gauss",
                "schedule": {"family": "power_law", "exponents": [0.5], "scales": [1]},
                "n": 5000, "ensemble": 3, "seed": 2}"#,
        );
        let r = run_experiment(&c).unwrap();
        for s in &r.per_seed {
            let e = (s.ratio.unwrap() - 1.0).abs();
            assert!((s.relative_error.unwrap() - e).abs() < 1e-15);
        }
        assert_eq!(c.system, SystemKind::Gauss);
    }
}
