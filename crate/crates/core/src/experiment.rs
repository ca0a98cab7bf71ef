//! Reproducible Monte Carlo experiments: truncation-level schedules, seeded
//! trial execution, Wilson aggregation, and the empirical low-degree and
//! rarefaction studies with their CSV/manifest outputs.
//!
//! Determinism contract: a run is a pure function of its configuration.
//! Per-trial randomness comes from [`crate::stream::substream`], results are
//! committed in trial order, and aggregation is single threaded, so the CSV
//! bytes do not depend on the worker count.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::harmonic::{decompose, sobolev_norm, truncate, SphereFunction};
use crate::jet::{cr_norm_estimate, stability_margin, SingularityType, StabilityMargin};
use crate::mesh::SphereMesh;
use crate::poly::{l2_inner, sample_kostlan, sample_kostlan_system, PolySystem};
use crate::stream::{substream, substream_seed};
use crate::topology::{
    compare_loci, critical_points_s2, curve_components_s2, zeros_on_circle, CompareConfig,
    IsotopyVerdict, Verdict,
};

/// Maps a degree to a truncation level.
///
/// The three parametric regimes follow `b sqrt(d log d)`, `d^b`, and `b d`;
/// every level is rounded, clamped to `[0, d]`, and stepped down by one when
/// `d - L` is odd (an off-parity level retains exactly the same harmonic
/// parts as `L - 1`, so the adjustment is free).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegimeSchedule {
    SqrtLog { b: f64 },
    Power { b: f64 },
    Linear { b: f64 },
    Fixed { level: usize },
}

impl RegimeSchedule {
    pub fn level_for(&self, d: usize) -> usize {
        let raw = match *self {
            RegimeSchedule::SqrtLog { b } => {
                let df = d as f64;
                b * (df * df.ln().max(0.0)).sqrt()
            }
            RegimeSchedule::Power { b } => (d as f64).powf(b),
            RegimeSchedule::Linear { b } => b * d as f64,
            RegimeSchedule::Fixed { level } => level as f64,
        };
        let mut level = raw.round().max(0.0) as usize;
        level = level.min(d);
        if (d - level) % 2 == 1 {
            if level >= 1 {
                level -= 1;
            } else {
                level += 1;
            }
        }
        level
    }

    pub fn b(&self) -> Option<f64> {
        match *self {
            RegimeSchedule::SqrtLog { b }
            | RegimeSchedule::Power { b }
            | RegimeSchedule::Linear { b } => Some(b),
            RegimeSchedule::Fixed { .. } => None,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            RegimeSchedule::SqrtLog { b } => format!("sqrtlog({b})"),
            RegimeSchedule::Power { b } => format!("power({b})"),
            RegimeSchedule::Linear { b } => format!("linear({b})"),
            RegimeSchedule::Fixed { level } => format!("fixed({level})"),
        }
    }
}

/// Success frequency with its 95% Wilson interval.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TailEstimate {
    pub successes: usize,
    pub trials: usize,
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
}

impl TailEstimate {
    pub fn wilson(successes: usize, trials: usize) -> TailEstimate {
        assert!(successes <= trials);
        if trials == 0 {
            return TailEstimate { successes, trials, estimate: f64::NAN, lo: 0.0, hi: 1.0 };
        }
        let z = 1.959963984540054_f64; // 97.5% normal quantile
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = z * z;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        // the interval contains p mathematically; enforce it under rounding
        TailEstimate {
            successes,
            trials,
            estimate: p,
            lo: (center - half).max(0.0).min(p),
            hi: (center + half).min(1.0).max(p),
        }
    }
}

/// Full configuration of a truncation experiment; echoed into the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Sphere dimension.
    pub n: usize,
    /// Number of system components (the catalogued verdicts need m = 1).
    pub m: usize,
    pub degrees: Vec<usize>,
    pub w: SingularityType,
    pub schedules: Vec<RegimeSchedule>,
    pub trials: usize,
    pub master_seed: u64,
    /// Icosphere level for the S^2 comparison certificate (ignored on S^1).
    pub mesh_level: usize,
    /// Stability comparison constant.
    pub c1: f64,
    /// Additional c1 values reported side by side (calibration sweeps).
    pub c1_sweep: Vec<f64>,
    /// Whether to evaluate the stability margin per trial.
    pub compute_margin: bool,
    /// Worker threads (0 = library default).
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.degrees.is_empty() {
            return Err(Error::InvalidArgument("need at least one degree".into()));
        }
        if self.schedules.is_empty() {
            return Err(Error::InvalidArgument("need at least one schedule".into()));
        }
        if self.c1 <= 0.0 {
            return Err(Error::InvalidArgument("c1 must be positive".into()));
        }
        self.w.check_target_dim(self.m, self.n)?;
        Ok(())
    }

    fn c1_values(&self) -> Vec<f64> {
        let mut values = vec![self.c1];
        for &c in &self.c1_sweep {
            if !values.iter().any(|v| (v - c).abs() <= f64::EPSILON * c.abs()) {
                values.push(c);
            }
        }
        values
    }
}

/// One executed trial.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub d: usize,
    pub level: usize,
    pub verdict: Verdict,
    pub detail: String,
    /// Invariants of the sampled function and of its truncation.
    pub left: Option<crate::topology::LocusInvariants>,
    pub right: Option<crate::topology::LocusInvariants>,
    pub margin: Option<StabilityMargin>,
    pub wall_time_ms: f64,
}

/// Aggregated results of one (degree, level) cell.
#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub d: usize,
    pub level: usize,
    pub b: Option<f64>,
    pub schedule: String,
    pub trials: usize,
    pub consistent: usize,
    pub inconsistent: usize,
    pub unresolved: usize,
    pub consistent_rate: TailEstimate,
    /// Stability-event frequency per configured c1 value.
    pub event_rates: Vec<(f64, TailEstimate)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LowDegreeReport {
    pub config: ExperimentConfig,
    pub cells: Vec<CellSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trial_records: Vec<TrialRecord>,
}

impl LowDegreeReport {
    /// One CSV row per (cell, c1 value), stable formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "n,m,w,d,level,b,schedule,c1,trials,consistent,inconsistent,unresolved,\
             p_consistent,consistent_lo,consistent_hi,event_true,p_event,event_lo,event_hi\n",
        );
        for cell in &self.cells {
            let b = cell.b.map(|b| b.to_string()).unwrap_or_default();
            if cell.event_rates.is_empty() {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},,{},{},{},{},{},{},{},,,,\n",
                    self.config.n,
                    self.config.m,
                    self.config.w.name(),
                    cell.d,
                    cell.level,
                    b,
                    cell.schedule,
                    cell.trials,
                    cell.consistent,
                    cell.inconsistent,
                    cell.unresolved,
                    cell.consistent_rate.estimate,
                    cell.consistent_rate.lo,
                    cell.consistent_rate.hi,
                ));
            }
            for (c1, rate) in &cell.event_rates {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    self.config.n,
                    self.config.m,
                    self.config.w.name(),
                    cell.d,
                    cell.level,
                    b,
                    cell.schedule,
                    c1,
                    cell.trials,
                    cell.consistent,
                    cell.inconsistent,
                    cell.unresolved,
                    cell.consistent_rate.estimate,
                    cell.consistent_rate.lo,
                    cell.consistent_rate.hi,
                    rate.successes,
                    rate.estimate,
                    rate.lo,
                    rate.hi,
                ));
            }
        }
        out
    }
}

fn run_in_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        Ok(job())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Internal(format!("worker pool: {e}")))?;
        Ok(pool.install(job))
    }
}

/// Samples Kostlan systems, truncates at the scheduled level, compares the
/// type-W loci, and (optionally) evaluates the stability margin, for every
/// (degree, schedule) cell.
///
/// Unresolved trials are counted and reported, never dropped. Identical
/// configurations produce identical reports regardless of `workers`.
pub fn run_low_degree_experiment(cfg: &ExperimentConfig) -> Result<LowDegreeReport> {
    cfg.validate()?;
    let c1_values = cfg.c1_values();
    let compare_cfg = CompareConfig { ico_level: cfg.mesh_level.max(2) };
    let mut cells = Vec::new();
    let mut all_records: Vec<TrialRecord> = Vec::new();
    let mut cell_index: u64 = 0;
    for &d in &cfg.degrees {
        for schedule in &cfg.schedules {
            let level = schedule.level_for(d);
            let mesh = if cfg.compute_margin {
                Some(SphereMesh::for_degree(cfg.n, d)?)
            } else {
                None
            };
            let trials: Vec<(usize, Result<TrialOutcome>)> = run_in_pool(cfg.workers, || {
                (0..cfg.trials)
                    .into_par_iter()
                    .map(|t| (t, run_trial(cfg, d, level, cell_index, t, &compare_cfg, mesh.as_ref())))
                    .collect()
            })?;
            let mut consistent = 0usize;
            let mut inconsistent = 0usize;
            let mut unresolved = 0usize;
            let mut event_true = vec![0usize; c1_values.len()];
            let mut records = Vec::with_capacity(trials.len());
            for (t, outcome) in trials {
                let outcome = outcome?;
                match outcome.verdict.verdict {
                    Verdict::Consistent => consistent += 1,
                    Verdict::Inconsistent => inconsistent += 1,
                    Verdict::Unresolved => unresolved += 1,
                }
                if let Some(margin) = &outcome.margin {
                    for (slot, c1) in c1_values.iter().enumerate() {
                        if margin.lhs < c1 * margin.distance {
                            event_true[slot] += 1;
                        }
                    }
                }
                records.push(TrialRecord {
                    trial: t,
                    seed: substream_seed(cfg.master_seed, cell_index, t as u64),
                    d,
                    level,
                    verdict: outcome.verdict.verdict,
                    detail: outcome.verdict.detail,
                    left: outcome.verdict.left,
                    right: outcome.verdict.right,
                    margin: outcome.margin,
                    wall_time_ms: outcome.wall_time_ms,
                });
            }
            if consistent + inconsistent + unresolved != cfg.trials {
                return Err(Error::Internal("verdict counts do not sum to trials".into()));
            }
            let event_rates = if cfg.compute_margin {
                c1_values
                    .iter()
                    .zip(&event_true)
                    .map(|(&c1, &k)| (c1, TailEstimate::wilson(k, cfg.trials)))
                    .collect()
            } else {
                Vec::new()
            };
            cells.push(CellSummary {
                d,
                level,
                b: schedule.b(),
                schedule: schedule.label(),
                trials: cfg.trials,
                consistent,
                inconsistent,
                unresolved,
                consistent_rate: TailEstimate::wilson(consistent, cfg.trials),
                event_rates,
            });
            all_records.extend(records);
            cell_index += 1;
        }
    }
    Ok(LowDegreeReport { config: cfg.clone(), cells, trial_records: all_records })
}

struct TrialOutcome {
    verdict: IsotopyVerdict,
    margin: Option<StabilityMargin>,
    wall_time_ms: f64,
}

fn run_trial(
    cfg: &ExperimentConfig,
    d: usize,
    level: usize,
    cell: u64,
    trial: usize,
    compare_cfg: &CompareConfig,
    mesh: Option<&SphereMesh>,
) -> Result<TrialOutcome> {
    let started = Instant::now();
    let mut rng = substream(cfg.master_seed, cell, trial as u64);
    let system = sample_kostlan_system(cfg.n, &vec![d; cfg.m], &mut rng);
    let f = SphereFunction::from_system(&system)?;
    let truncated = truncate(&f, level)?;
    let verdict = compare_loci(&f, &truncated, cfg.w, compare_cfg)?;
    let margin = match mesh {
        Some(mesh) => Some(stability_margin(&system, level, cfg.w, cfg.c1, mesh)?),
        None => None,
    };
    Ok(TrialOutcome {
        verdict,
        margin,
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

/// Per-degree exceedance of the topological size statistic.
#[derive(Debug, Clone, Serialize)]
pub struct BettiCell {
    pub d: usize,
    pub threshold: f64,
    pub trials: usize,
    pub resolved: usize,
    pub unresolved: usize,
    pub exceed: usize,
    pub rate: TailEstimate,
    pub mean_stat: f64,
    pub max_stat: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BettiReport {
    pub config: ExperimentConfig,
    pub threshold_c: f64,
    pub cells: Vec<BettiCell>,
}

impl BettiReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "n,m,w,d,threshold,trials,resolved,unresolved,exceed,p_exceed,lo,hi,mean_stat,max_stat\n",
        );
        for cell in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                self.config.n,
                self.config.m,
                self.config.w.name(),
                cell.d,
                cell.threshold,
                cell.trials,
                cell.resolved,
                cell.unresolved,
                cell.exceed,
                cell.rate.estimate,
                cell.rate.lo,
                cell.rate.hi,
                cell.mean_stat,
                cell.max_stat,
            ));
        }
        out
    }
}

/// Size statistic `b` of the type-W locus of one sample: the zero count on
/// S^1, twice the certified component count on S^2, or the critical/minima
/// count.
fn betti_statistic(
    f: &SphereFunction,
    w: SingularityType,
    compare_cfg: &CompareConfig,
) -> Result<Option<usize>> {
    match (w, f.sphere_dim()) {
        (SingularityType::ZeroSet, 1) => match zeros_on_circle(f) {
            Ok(zeros) => Ok(Some(zeros.len())),
            Err(Error::Unresolved(_)) => Ok(None),
            Err(e) => Err(e),
        },
        (SingularityType::ZeroSet, 2) => {
            let curve = curve_components_s2(f, compare_cfg.ico_level)?;
            if curve.certified {
                Ok(Some(2 * curve.components))
            } else {
                Ok(None)
            }
        }
        (SingularityType::CriticalPoints, 2) => {
            let set = critical_points_s2(f)?;
            if set.is_clean() {
                Ok(Some(set.len()))
            } else {
                Ok(None)
            }
        }
        (SingularityType::NondegenerateMinima, 2) => {
            let set = critical_points_s2(f)?;
            if set.is_clean() {
                Ok(Some(set.counts_by_index[0]))
            } else {
                Ok(None)
            }
        }
        (w, n) => Err(Error::InvalidArgument(format!("no b statistic for {w:?} on S^{n}"))),
    }
}

/// Estimates `P(b >= C d^n)` per degree over seeded Kostlan samples.
pub fn run_betti_tail(cfg: &ExperimentConfig, threshold_c: f64) -> Result<BettiReport> {
    cfg.validate()?;
    let compare_cfg = CompareConfig { ico_level: cfg.mesh_level.max(2) };
    let mut cells = Vec::new();
    for (cell_index, &d) in cfg.degrees.iter().enumerate() {
        let threshold = threshold_c * (d as f64).powi(cfg.n as i32);
        let stats: Vec<Option<usize>> = run_in_pool(cfg.workers, || {
            (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = substream(cfg.master_seed, cell_index as u64, t as u64);
                    let system = sample_kostlan_system(cfg.n, &vec![d; cfg.m], &mut rng);
                    let f = SphereFunction::from_system(&system)?;
                    betti_statistic(&f, cfg.w, &compare_cfg)
                })
                .collect::<Result<Vec<_>>>()
        })??;
        let resolved: Vec<usize> = stats.iter().flatten().copied().collect();
        let unresolved = cfg.trials - resolved.len();
        let exceed = resolved.iter().filter(|&&b| b as f64 >= threshold).count();
        let mean =
            if resolved.is_empty() { f64::NAN } else { resolved.iter().sum::<usize>() as f64 / resolved.len() as f64 };
        cells.push(BettiCell {
            d,
            threshold,
            trials: cfg.trials,
            resolved: resolved.len(),
            unresolved,
            exceed,
            rate: TailEstimate::wilson(exceed, resolved.len()),
            mean_stat: mean,
            max_stat: resolved.iter().max().copied().unwrap_or(0),
        });
    }
    Ok(BettiReport { config: cfg.clone(), threshold_c, cells })
}

/// Configuration of the derivative/Sobolev inequality study.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InequalityConfig {
    pub n: usize,
    pub r: usize,
    pub q: f64,
    /// Kostlan degrees for the C^r vs Sobolev ratio.
    pub degrees: Vec<usize>,
    /// Harmonic degrees for the derivative ratios.
    pub ells: Vec<usize>,
    /// Derivative multi-indices (length n+1 each).
    pub alphas: Vec<Vec<u32>>,
    pub samples: usize,
    pub master_seed: u64,
    /// Mesh resolution for the C^r sup estimates: icosphere level on S^2,
    /// point count on S^1; `None` scales with the degree.
    pub cr_mesh_level: Option<usize>,
    pub workers: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeeleyRow {
    pub alpha: Vec<u32>,
    /// (ell, max ratio over samples) pairs.
    pub ratios: Vec<(usize, f64)>,
    pub beta_hat: f64,
    /// Max over the upper half of the ell range <= 2x max over the lower half.
    pub bounded: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrSobolevRow {
    pub d: usize,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    pub config: InequalityConfig,
    pub seeley: Vec<SeeleyRow>,
    pub alpha_zero_exact: bool,
    pub cr_rows: Vec<CrSobolevRow>,
    pub cr_constant_hat: f64,
    pub cr_bounded: bool,
}

impl InequalityReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,alpha,ell_or_d,max_ratio\n");
        for row in &self.seeley {
            let alpha = row
                .alpha
                .iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
                .join("|");
            for (ell, ratio) in &row.ratios {
                out.push_str(&format!("derivative,{alpha},{ell},{ratio}\n"));
            }
        }
        for row in &self.cr_rows {
            out.push_str(&format!("cr_sobolev,,{},{}\n", row.d, row.max_ratio));
        }
        out
    }
}

fn half_max(values: &[(usize, f64)]) -> (f64, f64) {
    let mid = values.len() / 2;
    let lower = values[..mid].iter().map(|v| v.1).fold(0.0f64, f64::max);
    let upper = values[mid..].iter().map(|v| v.1).fold(0.0f64, f64::max);
    (lower, upper)
}

/// Empirical study of the derivative inequality on harmonics (ratios
/// `int |d^a H|^2 / (l^{2|a|} int |H|^2)` stay bounded in `l`) and of the
/// `C^r <= c sqrt(d) ||.||_{H^q}` comparison on Kostlan samples.
///
/// Requires `q >= r + (n-1)/2`.
pub fn run_inequality_suite(cfg: &InequalityConfig) -> Result<InequalityReport> {
    if cfg.q < cfg.r as f64 + (cfg.n as f64 - 1.0) / 2.0 {
        return Err(Error::InvalidArgument(format!(
            "q = {} violates q >= r + (n-1)/2 = {}",
            cfg.q,
            cfg.r as f64 + (cfg.n as f64 - 1.0) / 2.0
        )));
    }
    if cfg.samples == 0 || cfg.ells.is_empty() || cfg.degrees.is_empty() {
        return Err(Error::InvalidArgument("empty inequality configuration".into()));
    }
    for alpha in &cfg.alphas {
        if alpha.len() != cfg.n + 1 {
            return Err(Error::InvalidArgument("alpha length must be n+1".into()));
        }
    }
    // derivative ratios on sampled harmonics: one decomposition per sample,
    // every alpha measured on it
    let per_ell: Vec<Vec<f64>> = run_in_pool(cfg.workers, || {
        cfg.ells
            .par_iter()
            .enumerate()
            .map(|(cell, &ell)| {
                let mut worst = vec![0.0f64; cfg.alphas.len()];
                for s in 0..cfg.samples {
                    let mut rng = substream(cfg.master_seed, (1000 + cell) as u64, s as u64);
                    let p = sample_kostlan(cfg.n, ell, &mut rng);
                    let dec = decompose(&p)?;
                    let Some(h) = dec.part(ell) else { continue };
                    let h_norm_sq = l2_inner(h, h)?;
                    for (slot, alpha) in cfg.alphas.iter().enumerate() {
                        let weight: u32 = alpha.iter().sum();
                        let mut deriv = h.clone();
                        for (i, &count) in alpha.iter().enumerate() {
                            for _ in 0..count {
                                deriv = deriv.partial_derivative(i)?;
                            }
                        }
                        let num = l2_inner(&deriv, &deriv)?;
                        let den = (ell as f64).powi(2 * weight as i32) * h_norm_sq;
                        if den > 0.0 {
                            worst[slot] = worst[slot].max(num / den);
                        }
                    }
                }
                Ok(worst)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let mut seeley = Vec::new();
    let mut alpha_zero_exact = true;
    for (slot, alpha) in cfg.alphas.iter().enumerate() {
        let weight: u32 = alpha.iter().sum();
        let ratios: Vec<(usize, f64)> = cfg
            .ells
            .iter()
            .enumerate()
            .map(|(i, &ell)| (ell, per_ell[i][slot]))
            .collect();
        if weight == 0 {
            for &(_, ratio) in &ratios {
                if ratio != 1.0 {
                    alpha_zero_exact = false;
                }
            }
        }
        let beta_hat = ratios.iter().map(|r| r.1).fold(0.0f64, f64::max);
        let (lower, upper) = half_max(&ratios);
        seeley.push(SeeleyRow {
            alpha: alpha.clone(),
            ratios,
            beta_hat,
            bounded: upper <= 2.0 * lower.max(f64::MIN_POSITIVE),
        });
    }
    // C^r norm versus sqrt(d) Sobolev-q norm on Kostlan samples
    let cr_rows: Vec<CrSobolevRow> = run_in_pool(cfg.workers, || {
        cfg.degrees
            .par_iter()
            .enumerate()
            .map(|(cell, &d)| {
                let mesh = match (cfg.cr_mesh_level, cfg.n) {
                    (Some(level), 2) => SphereMesh::icosphere(level)?,
                    (Some(k), 1) => SphereMesh::circle(k.max(3))?,
                    _ => SphereMesh::for_degree(cfg.n, d)?,
                };
                let mut worst = 0.0f64;
                for s in 0..cfg.samples {
                    let mut rng = substream(cfg.master_seed, (2000 + cell) as u64, s as u64);
                    let system = PolySystem::single(sample_kostlan(cfg.n, d, &mut rng));
                    let f = SphereFunction::from_system(&system)?;
                    let cr = cr_norm_estimate(&system, cfg.r, &mesh)?.value;
                    let hq = sobolev_norm(&f, cfg.q);
                    if hq > 0.0 {
                        worst = worst.max(cr / ((d as f64).sqrt() * hq));
                    }
                }
                Ok(CrSobolevRow { d, max_ratio: worst })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let pairs: Vec<(usize, f64)> = cr_rows.iter().map(|r| (r.d, r.max_ratio)).collect();
    let (lower, upper) = half_max(&pairs);
    let cr_bounded = upper <= 2.0 * lower.max(f64::MIN_POSITIVE);
    let cr_constant_hat = pairs.iter().map(|p| p.1).fold(0.0f64, f64::max);
    Ok(InequalityReport {
        config: cfg.clone(),
        seeley,
        alpha_zero_exact,
        cr_rows,
        cr_constant_hat,
        cr_bounded,
    })
}

/// SHA-256 of the canonical JSON encoding of a configuration.
pub fn content_hash<T: Serialize>(value: &T) -> Result<String> {
    let canonical = serde_json::to_string(value)?;
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    let digest = hasher.finalize();
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Run manifest: everything needed to reproduce an output exactly.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub kind: String,
    pub content_hash: String,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
    pub elapsed_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trial_records: Option<serde_json::Value>,
}

impl Manifest {
    pub fn new<C: Serialize>(kind: &str, config: &C) -> Result<Manifest> {
        Ok(Manifest {
            tool: "kostlan",
            version: env!("CARGO_PKG_VERSION"),
            kind: kind.to_string(),
            content_hash: content_hash(config)?,
            config: serde_json::to_value(config)?,
            outputs: Vec::new(),
            elapsed_seconds: 0.0,
            trial_records: None,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join("manifest.json");
        let mut file = std::fs::File::create(&path)?;
        file.write_all(serde_json::to_string_pretty(self)?.as_bytes())?;
        file.write_all(b"\n")?;
        Ok(path)
    }
}

/// Writes a CSV report plus its manifest into `dir`.
pub fn write_output(
    dir: &Path,
    csv_name: &str,
    csv: &str,
    mut manifest: Manifest,
    elapsed_seconds: f64,
) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(csv_name);
    std::fs::write(&csv_path, csv.as_bytes())?;
    manifest.outputs = vec![csv_name.to_string()];
    manifest.elapsed_seconds = elapsed_seconds;
    manifest.write(dir)?;
    Ok(csv_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::HomogeneousPoly;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            n: 1,
            m: 1,
            degrees: vec![12, 16],
            w: SingularityType::ZeroSet,
            schedules: vec![RegimeSchedule::Linear { b: 0.5 }],
            trials: 20,
            master_seed: 99,
            mesh_level: 3,
            c1: 1.0,
            c1_sweep: vec![],
            compute_margin: true,
            workers: 0,
        }
    }

    #[test]
    fn schedule_levels() {
        let s = RegimeSchedule::SqrtLog { b: 2.0 };
        let level = s.level_for(100);
        // 2 sqrt(100 ln 100) = 42.9 -> 43, parity adjusted to 42
        assert_eq!(level, 42);
        assert_eq!((100 - level) % 2, 0);

        let linear = RegimeSchedule::Linear { b: 0.5 };
        assert_eq!(linear.level_for(80), 40);
        assert_eq!(linear.level_for(30), 14); // 15 has odd gap, steps down

        let id = RegimeSchedule::Linear { b: 1.0 };
        assert_eq!(id.level_for(7), 7);

        // clamping and the L=0 parity bump
        let zero = RegimeSchedule::Fixed { level: 0 };
        assert_eq!(zero.level_for(9), 1);
        let big = RegimeSchedule::Fixed { level: 1000 };
        assert_eq!(big.level_for(10), 10);

        let pow = RegimeSchedule::Power { b: 0.75 };
        let l = pow.level_for(64);
        assert_eq!((64 - l) % 2, 0);
        assert!((l as f64 - 64f64.powf(0.75)).abs() <= 2.0);
    }

    #[test]
    fn wilson_interval_known_value() {
        let t = TailEstimate::wilson(5, 10);
        assert!((t.estimate - 0.5).abs() <= 1e-12);
        assert!((t.lo - 0.2365).abs() <= 5e-4, "lo = {}", t.lo);
        assert!((t.hi - 0.7635).abs() <= 5e-4, "hi = {}", t.hi);
        // contains the point estimate, inside [0, 1]
        for (k, n) in [(0usize, 7usize), (7, 7), (3, 9)] {
            let t = TailEstimate::wilson(k, n);
            assert!(t.lo >= 0.0 && t.hi <= 1.0);
            assert!(t.lo <= t.estimate && t.estimate <= t.hi);
        }
    }

    #[test]
    fn full_truncation_is_always_consistent() {
        let mut cfg = small_config();
        cfg.schedules = vec![RegimeSchedule::Linear { b: 1.0 }];
        cfg.trials = 10;
        cfg.compute_margin = true;
        let report = run_low_degree_experiment(&cfg).unwrap();
        for cell in &report.cells {
            assert_eq!(cell.consistent, cell.trials);
            // lhs = 0 < rhs almost surely
            let (_, rate) = &cell.event_rates[0];
            assert_eq!(rate.successes, cell.trials);
        }
    }

    #[test]
    fn aggregation_conserves_trials() {
        let report = run_low_degree_experiment(&small_config()).unwrap();
        for cell in &report.cells {
            assert_eq!(cell.consistent + cell.inconsistent + cell.unresolved, cell.trials);
        }
        assert_eq!(report.trial_records.len(), 2 * small_config().trials);
    }

    #[test]
    fn reports_are_deterministic_across_worker_counts() {
        let mut cfg = small_config();
        let mut outputs = Vec::new();
        for workers in [1usize, 3, 7] {
            cfg.workers = workers;
            let report = run_low_degree_experiment(&cfg).unwrap();
            outputs.push(report.to_csv());
        }
        assert_eq!(outputs[0], outputs[1]);
        assert_eq!(outputs[1], outputs[2]);
    }

    #[test]
    fn betti_tail_impossible_threshold_is_zero() {
        let mut cfg = small_config();
        cfg.trials = 30;
        cfg.compute_margin = false;
        // threshold above the deterministic ceiling 2d
        let report = run_betti_tail(&cfg, 3.0).unwrap();
        for cell in &report.cells {
            assert_eq!(cell.exceed, 0);
            assert_eq!(cell.rate.estimate, 0.0);
        }
    }

    #[test]
    fn inequality_alpha_zero_is_exact() {
        let cfg = InequalityConfig {
            n: 2,
            r: 1,
            q: 1.5,
            degrees: vec![4, 6],
            ells: vec![2, 3, 4, 5],
            alphas: vec![vec![0, 0, 0], vec![1, 0, 0]],
            samples: 5,
            master_seed: 3,
            cr_mesh_level: None,
            workers: 0,
        };
        let report = run_inequality_suite(&cfg).unwrap();
        assert!(report.alpha_zero_exact);
        assert!(report.seeley[0].beta_hat == 1.0);
        assert!(report.seeley[1].beta_hat.is_finite());
        assert!(report.cr_constant_hat.is_finite());
    }

    #[test]
    fn inequality_hypothesis_is_enforced() {
        let cfg = InequalityConfig {
            n: 2,
            r: 1,
            q: 1.0,
            degrees: vec![4],
            ells: vec![2],
            alphas: vec![vec![0, 0, 0]],
            samples: 2,
            master_seed: 3,
            cr_mesh_level: None,
            workers: 0,
        };
        assert!(run_inequality_suite(&cfg).is_err());
    }

    #[test]
    fn monomial_family_inequality_closed_form() {
        // For P = x0^d the C^1 norm has the closed form
        // sqrt(d) (d/(d+1))^{(d-1)/2}, maximizing f^2 + |grad_T f|^2 along a
        // meridian; the mesh estimate must match it from below.
        for d in [3usize, 6, 10] {
            let mut e = vec![0u32; 3];
            e[0] = d as u32;
            let p = PolySystem::single(HomogeneousPoly::monomial(3, &e, 1.0).unwrap());
            let mesh = SphereMesh::for_degree(2, d).unwrap();
            let est = cr_norm_estimate(&p, 1, &mesh).unwrap().value;
            let u = d as f64 / (d as f64 + 1.0);
            let exact = (d as f64).sqrt() * u.powf((d as f64 - 1.0) / 2.0);
            assert!(est <= exact + 1e-9, "estimate {est} above exact sup {exact}");
            assert!(est >= exact * (1.0 - 1e-6), "estimate {est} too far below {exact}");
            // the inequality against sqrt(d) ||p||_{H^q} holds with a modest constant
            let f = SphereFunction::from_system(&p).unwrap();
            let hq = sobolev_norm(&f, 1.5);
            assert!(est <= 3.0 * (d as f64).sqrt() * hq);
        }
    }

    #[test]
    fn content_hash_is_stable_and_sensitive() {
        let cfg = small_config();
        let a = content_hash(&cfg).unwrap();
        let b = content_hash(&cfg).unwrap();
        assert_eq!(a, b);
        let mut cfg2 = cfg.clone();
        cfg2.master_seed += 1;
        assert_ne!(a, content_hash(&cfg2).unwrap());
    }
}
