//! Monte-Carlo experiments.
//!
//! A trial draws one projection `Z` and checks, for every edge `(u, v)` of the
//! decomposition, whether `|Z y_hat|^2 / k` lands in the squared band
//! `[1 - e-, 1 + e+]`. By the epsilon adjustment that is the same as
//! `(1 - eps)|y| <= sqrt(gamma/k)|Zy| <= (1 + eps)|y|`. Per batch the sorted
//! values also give the order statistics at `eta*M - 1` and `m - eta*M`.
//!
//! Trials are independent: trial `t` uses seed `splitmix64(master ^
//! splitmix64(t))` and nothing else, so they run in parallel and the
//! aggregate does not depend on scheduling.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::batching::{build_batches, cycle_batches, BatchPlan};
use crate::bounds::{
    hw_tail_rate, target_dim_iid_coords, target_dim_simplex, target_dim_unit, target_dim_unit_sphere, EpsilonSplit,
    TailVariant, TargetDimResult, UnitSphereParams, ZDist,
};
use crate::error::{Error, Result};
use crate::estimation::{estimate_rhat, rhat_sample_size, RhatEstimate};
use crate::io::{self, DataFormat, Dataset};
use crate::matrix::{cholesky_upper, stable_ranks, DenseMatrix, StableRanks};
use crate::projection::{generate, EntryDist, ProjectionMatrix, ProjectionSpec};
use crate::rng::{block_at, splitmix64, trial_seed, PhiloxStream};
use crate::walecki::decompose;

/// Standard deviations of slack used for statistical acceptance.
pub const SIGMA_SLACK: f64 = 5.0;

/// Minimum trial count for [`empirical_tail`].
pub const MIN_TAIL_TRIALS: usize = 10_000;

/// Wilson score interval for `count` successes out of `n` at `z` standard deviations.
pub fn wilson_interval(count: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = count as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub count: usize,
    pub trials: usize,
    pub rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

impl RateEstimate {
    pub fn new(count: usize, trials: usize) -> Self {
        let (wilson_low, wilson_high) = wilson_interval(count, trials, SIGMA_SLACK);
        Self { count, trials, rate: count as f64 / trials.max(1) as f64, wilson_low, wilson_high }
    }

    /// True unless the data rule out `rate <= bound` at the configured slack.
    pub fn consistent_with_at_most(&self, bound: f64) -> bool {
        self.wilson_low <= bound
    }
}

// ---------------------------------------------------------------------------
// Synthetic data

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    /// `e_1, ..., e_D`.
    Simplex,
    IidGaussian,
    IidRademacher,
    IidCauchy,
    /// `U g + noise * h` with a fixed random `D x rank` matrix `U`.
    LowRankPlusNoise,
    /// Uniform on the sphere, plus a fraction of tiny vectors near `e_1`.
    ClusterSmallball,
}

impl std::str::FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.replace('-', "_")))
            .map_err(|_| Error::Input(format!("unknown synthetic kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub n: usize,
    pub d: usize,
    #[serde(default = "default_rank")]
    pub rank: usize,
    #[serde(default = "default_noise")]
    pub noise: f64,
    #[serde(default = "default_cluster_fraction")]
    pub cluster_fraction: f64,
    #[serde(default = "default_cluster_scale")]
    pub cluster_scale: f64,
    #[serde(default = "default_cluster_spread")]
    pub cluster_spread: f64,
}

fn default_rank() -> usize {
    4
}
fn default_noise() -> f64 {
    0.1
}
fn default_cluster_fraction() -> f64 {
    0.5
}
fn default_cluster_scale() -> f64 {
    1e-3
}
fn default_cluster_spread() -> f64 {
    0.05
}

impl SynthParams {
    pub fn new(n: usize, d: usize) -> Self {
        Self {
            n,
            d,
            rank: default_rank(),
            noise: default_noise(),
            cluster_fraction: default_cluster_fraction(),
            cluster_scale: default_cluster_scale(),
            cluster_spread: default_cluster_spread(),
        }
    }
}

/// Deterministic synthetic datasets. Row `i` depends only on `(seed, i)`.
/// For `Simplex` the point count is `D` and `params.n` is ignored.
pub fn synth(kind: SynthKind, params: &SynthParams, seed: u64) -> Result<Dataset<f64>> {
    let d = params.d;
    if d == 0 {
        return Err(Error::Input("D must be positive".into()));
    }
    let n = if kind == SynthKind::Simplex { d } else { params.n };
    if n < 2 {
        return Err(Error::Input(format!("need at least 2 points, got {n}")));
    }
    let basis = if kind == SynthKind::LowRankPlusNoise {
        if params.rank == 0 || params.rank > d {
            return Err(Error::Input(format!("rank must lie in 1..={d}, got {}", params.rank)));
        }
        // Stream u64::MAX is reserved for the basis; rows use streams 0..n.
        let mut s = PhiloxStream::new(seed, u64::MAX);
        let scale = 1.0 / (params.rank as f64).sqrt();
        Some((0..d * params.rank).map(|_| s.next_gaussian() * scale).collect::<Vec<f64>>())
    } else {
        None
    };
    if kind == SynthKind::ClusterSmallball && !(0.0..=1.0).contains(&params.cluster_fraction) {
        return Err(Error::Input(format!("cluster_fraction must lie in [0, 1], got {}", params.cluster_fraction)));
    }

    let mut data = vec![0.0; n * d];
    data.par_chunks_mut(d).enumerate().for_each(|(i, row)| {
        let mut s = PhiloxStream::new(seed, i as u64);
        match kind {
            SynthKind::Simplex => row[i] = 1.0,
            SynthKind::IidGaussian => row.iter_mut().for_each(|x| *x = s.next_gaussian()),
            SynthKind::IidRademacher => row.iter_mut().for_each(|x| *x = s.next_sign()),
            SynthKind::IidCauchy => row.iter_mut().for_each(|x| *x = s.next_cauchy()),
            SynthKind::LowRankPlusNoise => {
                let u = basis.as_ref().expect("basis drawn above");
                let g: Vec<f64> = (0..params.rank).map(|_| s.next_gaussian()).collect();
                for (r, x) in row.iter_mut().enumerate() {
                    let signal: f64 = (0..params.rank).map(|c| u[r * params.rank + c] * g[c]).sum();
                    *x = signal + params.noise * s.next_gaussian();
                }
            }
            SynthKind::ClusterSmallball => {
                if s.next_f64() < params.cluster_fraction {
                    let spread = params.cluster_spread / (d as f64).sqrt();
                    for (r, x) in row.iter_mut().enumerate() {
                        let base = if r == 0 { 1.0 } else { 0.0 };
                        *x = params.cluster_scale * (base + spread * s.next_gaussian());
                    }
                } else {
                    row.iter_mut().for_each(|x| *x = s.next_gaussian());
                    let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
                    row.iter_mut().for_each(|x| *x /= norm);
                }
            }
        }
    });
    Dataset::new(DenseMatrix::new(n, d, data)?, format!("synth:{kind:?}:seed={seed}"))
}

// ---------------------------------------------------------------------------
// Per-batch measurement

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub batch_id: usize,
    pub subgraph_index: usize,
    pub m: usize,
    pub eta_m: usize,
    /// Columns with `|Z y_hat|^2/k` inside the band.
    pub count_within: usize,
    /// Columns above `1 + e+`.
    pub above: usize,
    /// Columns below `1 - e-`.
    pub below: usize,
    /// The `m - eta*M` order statistic exceeds `1 + e+`.
    pub upper_event: bool,
    /// The `eta*M - 1` order statistic is below `1 - e-`.
    pub lower_event: bool,
    /// Order statistic at index `eta*M - 1`.
    pub lower_stat: f64,
    /// Order statistic at index `m - eta*M`.
    pub upper_stat: f64,
}

/// Builds a record from the unsorted values `|Z y_hat_i|^2/k` of one batch.
fn record_from_ratios(
    batch_id: usize,
    subgraph_index: usize,
    eta_m: usize,
    mut ratios: Vec<f64>,
    split: &EpsilonSplit,
) -> BatchRecord {
    let (lo, hi) = split.band();
    let m = ratios.len();
    ratios.sort_by(|a, b| a.total_cmp(b));
    let above = ratios.iter().filter(|&&r| r > hi).count();
    let below = ratios.iter().filter(|&&r| r < lo).count();
    let lower_stat = ratios[eta_m - 1];
    let upper_stat = ratios[m - eta_m];
    BatchRecord {
        batch_id,
        subgraph_index,
        m,
        eta_m,
        count_within: m - above - below,
        above,
        below,
        upper_event: upper_stat > hi,
        lower_event: lower_stat < lo,
        lower_stat,
        upper_stat,
    }
}

/// Measures one batch directly from its unit columns.
pub fn measure_batch(z: &ProjectionMatrix<f64>, batch: &crate::Batch, split: &EpsilonSplit) -> Result<BatchRecord> {
    let projected = z.matrix.matmul(&batch.unit_matrix)?;
    let k = z.k() as f64;
    let ratios: Vec<f64> = projected.column_norms().into_iter().map(|n| n * n / k).collect();
    Ok(record_from_ratios(batch.id, batch.subgraph_index, batch.eta_m, ratios, split))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundComparison {
    pub name: String,
    /// `None` when no closed-form bound applies.
    pub theoretical: Option<f64>,
    pub empirical: f64,
}

/// Outcome of a single projection draw over a whole batch plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub trial: usize,
    pub seed: u64,
    pub k_used: usize,
    pub per_batch: Vec<BatchRecord>,
    /// Preserved pairs over `C(N, 2)`.
    pub global_fraction: f64,
    pub upper_events: usize,
    pub lower_events: usize,
}

/// `(batch id, subgraph index, eta*M, [(u, v, |x_u - x_v|^2)])`.
type BatchGeometry = (usize, usize, usize, Vec<(usize, usize, f64)>);

/// Edge endpoints and squared lengths, fixed across trials.
struct PlanGeometry {
    batches: Vec<BatchGeometry>,
    pairs: usize,
}

impl PlanGeometry {
    fn new(plan: &BatchPlan<f64>) -> Self {
        let batches = plan
            .batches
            .iter()
            .map(|b| {
                let norms = b.matrix.column_norms();
                let edges = b.edges.iter().zip(norms).map(|(e, n)| (e.u, e.v, n * n)).collect();
                (b.id, b.subgraph_index, b.eta_m, edges)
            })
            .collect();
        Self { batches, pairs: plan.total_columns() }
    }
}

/// Rows are images of the data points under a map `L` with `|Ly| = |Zy|`:
/// `L = Z` itself when `k <= D`, else the Cholesky factor of `Z^T Z`.
fn project_points(z: &ProjectionMatrix<f64>, points: &DenseMatrix<f64>) -> Result<DenseMatrix<f64>> {
    if z.k() > z.d() {
        if let Ok(r) = cholesky_upper(&z.matrix.gram_cols()) {
            return points.matmul(&r.transpose());
        }
    }
    points.matmul(&z.matrix.transpose())
}

fn measure_plan(
    z: &ProjectionMatrix<f64>,
    dataset: &Dataset<f64>,
    geometry: &PlanGeometry,
    split: &EpsilonSplit,
    trial: usize,
    seed: u64,
) -> Result<DistortionReport> {
    let images = project_points(z, &dataset.points)?;
    let k = z.k() as f64;
    let per_batch: Vec<BatchRecord> = geometry
        .batches
        .iter()
        .map(|(id, sub, eta_m, edges)| {
            let ratios = edges
                .iter()
                .map(|&(u, v, sq)| {
                    let d: f64 = images.row(u).iter().zip(images.row(v)).map(|(a, b)| (a - b) * (a - b)).sum();
                    d / (sq * k)
                })
                .collect();
            record_from_ratios(*id, *sub, *eta_m, ratios, split)
        })
        .collect();
    let within: usize = per_batch.iter().map(|r| r.count_within).sum();
    Ok(DistortionReport {
        trial,
        seed,
        k_used: z.k(),
        upper_events: per_batch.iter().filter(|r| r.upper_event).count(),
        lower_events: per_batch.iter().filter(|r| r.lower_event).count(),
        global_fraction: within as f64 / geometry.pairs as f64,
        per_batch,
    })
}

/// Runs `trials` projections produced by `make_z(seed)` over a fixed plan.
pub fn run_trials<F>(
    dataset: &Dataset<f64>,
    plan: &BatchPlan<f64>,
    split: &EpsilonSplit,
    trials: usize,
    master_seed: u64,
    make_z: F,
) -> Result<Vec<DistortionReport>>
where
    F: Fn(u64) -> Result<ProjectionMatrix<f64>> + Sync,
{
    let geometry = PlanGeometry::new(plan);
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(master_seed, t as u64);
            measure_plan(&make_z(seed)?, dataset, &geometry, split, t, seed)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Experiments

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    Synthetic { kind: SynthKind, params: SynthParams, seed: u64 },
    File { path: String, format: Option<DataFormat> },
}

impl DataSource {
    pub fn load(&self) -> Result<Dataset<f64>> {
        match self {
            DataSource::Synthetic { kind, params, seed } => synth(*kind, params, *seed),
            DataSource::File { path, format } => {
                let fmt = format.unwrap_or_else(|| DataFormat::from_path(Path::new(path)));
                io::load(path, fmt)
            }
        }
    }
}

/// How `k` and the batches are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "theorem", rename_all = "kebab-case")]
pub enum TheoremChoice {
    /// Cycle batches, `k` from the simplex bound.
    Simplex,
    /// Batches of size `m`; `k` from the unit-normalized bound with the
    /// measured minimum batch stable rank.
    Unit { m: usize },
    /// `k`, `M`, `eta`, `zeta` from the unit-sphere bound. Without `r_hat`, it
    /// is estimated from an independent sample (synthetic data) or from the
    /// data itself.
    UnitSphere { alpha: f64, r_hat: Option<f64> },
    /// The unit-sphere bound with `r_hat = D`.
    IidCoords { alpha: f64 },
    /// A fixed `k`; batches of size `m`, or cycle batches when `m` is absent.
    FixedK { k: usize, m: Option<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: DataSource,
    #[serde(flatten)]
    pub theorem: TheoremChoice,
    pub eta: f64,
    #[serde(default)]
    pub zeta: Option<f64>,
    pub eps: f64,
    pub delta: f64,
    #[serde(default = "default_dist")]
    pub dist: EntryDist,
    pub trials: usize,
    pub master_seed: u64,
}

fn default_dist() -> EntryDist {
    EntryDist::Gaussian
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub n_points: usize,
    pub dim: usize,
    pub k_used: usize,
    pub gamma: f64,
    pub split: EpsilonSplit,
    pub target_dim: Option<TargetDimResult>,
    pub rhat: Option<RhatEstimate>,
    /// Fraction of pairs the guarantee promises.
    pub target_fraction: f64,
    /// Probability the guarantee allows for falling short.
    pub allowed_failure: f64,
    pub fractions: Vec<f64>,
    pub failure: RateEstimate,
    pub min_fraction: f64,
    pub mean_fraction: f64,
    pub bound_comparisons: Vec<BoundComparison>,
    /// Full per-batch detail of trial 0.
    pub first_trial: DistortionReport,
}

fn entry_zdist(dist: EntryDist) -> ZDist {
    match dist {
        EntryDist::Gaussian => ZDist::Gaussian,
        other => ZDist::SubGaussian { k_psi2: other.psi2_norm(), c: crate::bounds::DEFAULT_ABS_CONST },
    }
}

/// `min` over batches of `r_inf` of the unit-normalized batch matrix.
pub fn min_unit_stable_rank(plan: &BatchPlan<f64>) -> Result<f64> {
    let ranks: Vec<f64> =
        plan.batches.par_iter().map(|b| stable_ranks(&b.unit_matrix).map(|r| r.r_inf)).collect::<Result<_>>()?;
    Ok(ranks.into_iter().fold(f64::INFINITY, f64::min))
}

fn estimate_rhat_for(cfg: &ExperimentConfig, dataset: &Dataset<f64>) -> Result<RhatEstimate> {
    match &cfg.data {
        DataSource::Synthetic { kind, params, seed } => {
            let m = rhat_sample_size(params.d, cfg.delta);
            let sample_params = SynthParams { n: 2 * m + 1, ..*params };
            let sample = synth(*kind, &sample_params, splitmix64(*seed ^ 0x5248_4154))?;
            estimate_rhat(&sample, cfg.delta)
        }
        DataSource::File { .. } => estimate_rhat(dataset, cfg.delta),
    }
}

/// Builds the decomposition, batches and `k` for `cfg`, then runs the trials.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if cfg.trials == 0 {
        return Err(Error::Input("trials must be positive".into()));
    }
    let dataset = cfg.data.load()?;
    let decomp = decompose(dataset.n())?;
    let zdist = entry_zdist(cfg.dist);
    let split = match zdist {
        ZDist::Gaussian => EpsilonSplit::gaussian(cfg.eps)?,
        ZDist::SubGaussian { .. } => EpsilonSplit::symmetric(cfg.eps)?,
    };
    let n = dataset.n();
    let d = dataset.d();

    let mut rhat = None;
    let mut zeta_used = None;
    let (k, plan, target_dim) = match &cfg.theorem {
        TheoremChoice::Simplex => {
            let td = target_dim_simplex(d, cfg.eta, cfg.eps, cfg.delta, zdist)?.require_satisfied()?;
            (td.k as usize, cycle_batches(&dataset, &decomp, cfg.eta)?, Some(td))
        }
        TheoremChoice::Unit { m } => {
            let plan = build_batches(&dataset, &decomp, *m, cfg.eta)?;
            let r_hat = min_unit_stable_rank(&plan)?;
            let td = target_dim_unit(n, *m, cfg.eta, cfg.eps, cfg.delta, r_hat, zdist)?.require_satisfied()?;
            (td.k as usize, plan, Some(td))
        }
        TheoremChoice::UnitSphere { .. } | TheoremChoice::IidCoords { .. } => {
            let zeta = cfg.zeta.ok_or_else(|| Error::Input("this theorem needs zeta".into()))?;
            let mut p = UnitSphereParams {
                n,
                d,
                eta: cfg.eta,
                zeta,
                eps: cfg.eps,
                delta: cfg.delta,
                alpha: 0.0,
                r_hat: d as f64,
                dist: zdist,
            };
            let td = match &cfg.theorem {
                TheoremChoice::UnitSphere { alpha, r_hat } => {
                    p.alpha = *alpha;
                    p.r_hat = match r_hat {
                        Some(r) => *r,
                        None => {
                            let est = estimate_rhat_for(cfg, &dataset)?;
                            let r = est.rhat_lower;
                            rhat = Some(est);
                            r
                        }
                    };
                    target_dim_unit_sphere(p)?
                }
                TheoremChoice::IidCoords { alpha } => {
                    p.alpha = *alpha;
                    target_dim_iid_coords(p)?
                }
                _ => unreachable!(),
            }
            .require_satisfied()?;
            let m = td.derived["M"] as usize;
            let eta = td.derived["eta_used"];
            let z = td.derived["zeta_used"];
            zeta_used = Some(z);
            let plan = build_batches(&dataset, &decomp, m, eta)?.with_zeta(z)?;
            (td.k as usize, plan, Some(td))
        }
        TheoremChoice::FixedK { k, m } => {
            let plan = match m {
                Some(m) => build_batches(&dataset, &decomp, *m, cfg.eta)?,
                None => cycle_batches(&dataset, &decomp, cfg.eta)?,
            };
            zeta_used = cfg.zeta;
            (*k, plan, None)
        }
    };
    if k == 0 {
        return Err(Error::Input("k must be positive".into()));
    }

    let dist = cfg.dist;
    let reports = run_trials(&dataset, &plan, &split, cfg.trials, cfg.master_seed, |seed| {
        generate(ProjectionSpec { k, d, dist, seed })
    })?;

    let eta_used = target_dim.as_ref().and_then(|t| t.derived.get("eta_used").copied()).unwrap_or(cfg.eta);
    let target_fraction = (1.0 - 2.0 * eta_used) * (1.0 - zeta_used.unwrap_or(0.0));
    let allowed_failure = if zeta_used.is_some() { 2.0 * cfg.delta } else { cfg.delta };
    let fractions: Vec<f64> = reports.iter().map(|r| r.global_fraction).collect();
    let failures = fractions.iter().filter(|&&f| f < target_fraction).count();
    let failure = RateEstimate::new(failures, cfg.trials);
    let batch_count = plan.batches.len() * cfg.trials;
    let upper: usize = reports.iter().map(|r| r.upper_events).sum();
    let lower: usize = reports.iter().map(|r| r.lower_events).sum();

    Ok(ExperimentReport {
        config: cfg.clone(),
        n_points: n,
        dim: d,
        k_used: k,
        gamma: split.gamma,
        split,
        target_dim,
        rhat,
        target_fraction,
        allowed_failure,
        min_fraction: fractions.iter().copied().fold(f64::INFINITY, f64::min),
        mean_fraction: fractions.iter().sum::<f64>() / fractions.len() as f64,
        fractions,
        failure,
        bound_comparisons: vec![
            BoundComparison {
                name: "failure_probability".into(),
                theoretical: Some(allowed_failure),
                empirical: failure.rate,
            },
            BoundComparison {
                name: "batch_upper_event_rate".into(),
                theoretical: None,
                empirical: upper as f64 / batch_count as f64,
            },
            BoundComparison {
                name: "batch_lower_event_rate".into(),
                theoretical: None,
                empirical: lower as f64 / batch_count as f64,
            },
        ],
        first_trial: reports.into_iter().next().expect("at least one trial"),
    })
}

/// Writes the per-batch order statistics of `report` as CSV.
pub fn write_batch_csv(report: &DistortionReport, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    let to_io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record([
        "batch_id",
        "subgraph_index",
        "m",
        "eta_m",
        "count_within",
        "above",
        "below",
        "upper_event",
        "lower_event",
        "order_stat_eta_m_minus_1",
        "order_stat_1_minus_eta_m",
    ])
    .map_err(to_io)?;
    for r in &report.per_batch {
        w.write_record([
            r.batch_id.to_string(),
            r.subgraph_index.to_string(),
            r.m.to_string(),
            r.eta_m.to_string(),
            r.count_within.to_string(),
            r.above.to_string(),
            r.below.to_string(),
            r.upper_event.to_string(),
            r.lower_event.to_string(),
            format!("{:.16e}", r.lower_stat),
            format!("{:.16e}", r.upper_stat),
        ])
        .map_err(to_io)?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Tail probabilities of |ZA|_F^2

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub k: usize,
    pub eps: f64,
    pub dist: EntryDist,
    pub ranks: StableRanks,
    pub upper: RateEstimate,
    pub lower: RateEstimate,
    /// Gaussian bounds; `None` for other entry laws, whose constants are unknown.
    pub upper_bound: Option<f64>,
    pub lower_bound: Option<f64>,
}

/// Frequencies of `|ZA|_F^2 > (1+eps) k |A|_F^2` and `< (1-eps) k |A|_F^2`
/// over independent draws of `Z`.
pub fn empirical_tail(
    a: &DenseMatrix<f64>,
    k: usize,
    eps: f64,
    trials: usize,
    seed: u64,
    dist: EntryDist,
) -> Result<TailReport> {
    if trials < MIN_TAIL_TRIALS {
        return Err(Error::Input(format!("need at least {MIN_TAIL_TRIALS} trials, got {trials}")));
    }
    if k == 0 || !(eps > 0.0) {
        return Err(Error::Input(format!("need k >= 1 and eps > 0, got k={k}, eps={eps}")));
    }
    let ranks = stable_ranks(a)?;
    let d = a.rows();
    let at = a.transpose();
    let frob = a.frobenius_sq();
    let (hi, lo) = ((1.0 + eps) * k as f64 * frob, (1.0 - eps) * k as f64 * frob);
    let (up, down) = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = trial_seed(seed, t as u64);
            let mut z = vec![0.0; d];
            let mut total = 0.0;
            for i in 0..k {
                for (j, x) in z.iter_mut().enumerate() {
                    *x = dist.sample(block_at(s, i as u64, j as u64));
                }
                // |A^T z_i|^2
                total += (0..at.rows())
                    .map(|r| at.row(r).iter().zip(&z).map(|(p, q)| p * q).sum::<f64>().powi(2))
                    .sum::<f64>();
            }
            (usize::from(total > hi), usize::from(total < lo))
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let gaussian = dist == EntryDist::Gaussian;
    Ok(TailReport {
        k,
        eps,
        dist,
        ranks,
        upper: RateEstimate::new(up, trials),
        lower: RateEstimate::new(down, trials),
        upper_bound: gaussian.then(|| hw_tail_rate(&ranks, k, eps, TailVariant::GaussianUpper)).transpose()?,
        lower_bound: if gaussian && eps < 1.0 {
            Some(hw_tail_rate(&ranks, k, eps, TailVariant::GaussianLower)?)
        } else {
            None
        },
    })
}
