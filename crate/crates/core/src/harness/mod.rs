//! Replica farms, estimators, configuration and validation reports.

mod criteria;

pub use criteria::{criterion, validate_all, Budget, CriterionReport, ReportRow, TargetSource, ValidationReport, CRITERIA};

use crate::asymptotics::{covariance, AsymptoticsError, Branch};
use crate::correlation::{corr_fn, KernelConfig, KernelError, SpaceTimePoint};
use crate::enveloping::shifted_moment;
use crate::exact::Q;
use crate::growth_sim::{gibbs_sweeps_below, LevelIndex, ParticleSystem, SimError, Snapshot};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("replica {id}: {source}")]
    Replica { id: usize, source: SimError },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Asymptotics(#[from] AsymptoticsError),
    #[error("level budget exceeded: need {need} levels, budget {budget}")]
    Budget { need: usize, budget: usize },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("no replicas requested")]
    NoReplicas,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Simulate,
    Kernel,
    Corr,
    Covariance,
    Coeffs,
    Limitshape,
    State,
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
    Jsonl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default)]
    pub params: toml::Table,
    #[serde(default = "one_replica")]
    pub replicas: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub output_path: String,
    #[serde(default)]
    pub format: Format,
}

fn one_replica() -> usize {
    1
}

impl ExperimentConfig {
    pub fn new(kind: Kind) -> Self {
        ExperimentConfig {
            kind,
            params: toml::Table::new(),
            replicas: 1,
            master_seed: 0,
            output_path: String::new(),
            format: Format::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.replicas == 0 {
            return Err(HarnessError::NoReplicas);
        }
        Ok(())
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, HarnessError> {
        match self.params.get(key) {
            None => Ok(None),
            Some(toml::Value::Float(x)) => Ok(Some(*x)),
            Some(toml::Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(toml::Value::String(s)) => {
                crate::exact::parse_q(s).map(|q| Some(crate::exact::to_f64(&q))).ok_or_else(|| bad(key))
            }
            Some(_) => Err(bad(key)),
        }
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>, HarnessError> {
        match self.params.get(key) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
            Some(_) => Err(bad(key)),
        }
    }

    pub fn get_q(&self, key: &str) -> Result<Option<Q>, HarnessError> {
        self.params.get(key).map(|v| value_to_q(v).ok_or_else(|| bad(key))).transpose()
    }

    pub fn get_str(&self, key: &str) -> Result<Option<&str>, HarnessError> {
        match self.params.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(bad(key)),
        }
    }

    pub fn get_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, HarnessError> {
        match self.params.get(key) {
            None => Ok(None),
            Some(toml::Value::Array(a)) => a
                .iter()
                .map(|v| match v {
                    toml::Value::Float(x) => Ok(*x),
                    toml::Value::Integer(i) => Ok(*i as f64),
                    _ => Err(bad(key)),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(toml::Value::Float(x)) => Ok(Some(vec![*x])),
            Some(toml::Value::Integer(i)) => Ok(Some(vec![*i as f64])),
            Some(_) => Err(bad(key)),
        }
    }
}

fn bad(key: &str) -> HarnessError {
    HarnessError::Config(format!("bad value for `{key}`"))
}

/// Rationals may be given as integers, decimal floats or `"p/q"` strings.
pub fn value_to_q(v: &toml::Value) -> Option<Q> {
    match v {
        toml::Value::Integer(i) => Some(crate::exact::q(*i)),
        toml::Value::String(s) => crate::exact::parse_q(s),
        toml::Value::Float(x) => crate::exact::parse_q(&x.to_string()),
        _ => None,
    }
}

/// Mean with standard error, optionally against an analytic or oracle target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResult {
    pub mean: f64,
    pub std_error: f64,
    pub replicas: usize,
    pub target: Option<f64>,
    pub z_score: Option<f64>,
}

impl EstimatorResult {
    pub fn from_samples(xs: &[f64]) -> Self {
        let r = xs.len();
        let mean = xs.iter().sum::<f64>() / r as f64;
        let var = if r > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1) as f64 } else { 0.0 };
        EstimatorResult { mean, std_error: (var / r as f64).sqrt(), replicas: r, target: None, z_score: None }
    }

    pub fn with_target(mut self, target: f64) -> Self {
        self.target = Some(target);
        self.z_score = Some(if self.std_error > 0.0 {
            (self.mean - target) / self.std_error
        } else if self.mean == target {
            0.0
        } else {
            f64::INFINITY.copysign(self.mean - target)
        });
        self
    }

    pub fn relative_error(&self) -> Option<f64> {
        self.target.map(|t| ((self.mean - t) / t).abs())
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-replica seed, a deterministic function of the master seed and replica id.
pub fn derive_seed(master: u64, replica: u64) -> u64 {
    splitmix64(splitmix64(master) ^ replica.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// What every replica simulates: `n_max` levels observed at increasing `times`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimPlan {
    pub n_max: usize,
    pub times: Vec<f64>,
    pub replicas: usize,
    pub master_seed: u64,
}

impl SimPlan {
    pub fn new(n_max: usize, times: &[f64], replicas: usize, master_seed: u64) -> Self {
        let mut times = times.to_vec();
        times.sort_by(f64::total_cmp);
        times.dedup();
        SimPlan { n_max, times, replicas, master_seed }
    }

    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self, HarnessError> {
        let n_max = cfg.get_usize("n_max")?.unwrap_or(2);
        let times = cfg.get_f64_list("times")?.unwrap_or_else(|| vec![1.0]);
        Ok(SimPlan::new(n_max, &times, cfg.replicas, cfg.master_seed))
    }

    /// Index of time `t` in the snapshot list.
    pub fn time_index(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| s == t)
    }
}

/// One trajectory, snapshotted at each planned time.
pub fn simulate_replica(plan: &SimPlan, replica: usize) -> Result<Vec<Snapshot>, HarnessError> {
    let wrap = |source| HarnessError::Replica { id: replica, source };
    let mut sys = ParticleSystem::new_densely_packed(plan.n_max, derive_seed(plan.master_seed, replica as u64)).map_err(wrap)?;
    let mut out = Vec::with_capacity(plan.times.len());
    for &t in &plan.times {
        sys.advance_to(t).map_err(wrap)?;
        out.push(sys.snapshot());
    }
    Ok(out)
}

/// Apply `f` to every replica trajectory, in parallel, keeping replica order.
pub fn sample_replicas<T, F>(plan: &SimPlan, f: F) -> Result<Vec<T>, HarnessError>
where
    T: Send,
    F: Fn(&[Snapshot]) -> T + Sync,
{
    sample_replicas_indexed(plan, |_, s| f(s))
}

/// As [`sample_replicas`], also passing the replica id to `f`.
pub fn sample_replicas_indexed<T, F>(plan: &SimPlan, f: F) -> Result<Vec<T>, HarnessError>
where
    T: Send,
    F: Fn(usize, &[Snapshot]) -> T + Sync,
{
    if plan.replicas == 0 {
        return Err(HarnessError::NoReplicas);
    }
    (0..plan.replicas).into_par_iter().map(|r| simulate_replica(plan, r).map(|s| f(r, &s))).collect()
}

pub fn run_replicas<F>(plan: &SimPlan, observable: F) -> Result<EstimatorResult, HarnessError>
where
    F: Fn(&[Snapshot]) -> f64 + Sync,
{
    Ok(EstimatorResult::from_samples(&sample_replicas(plan, observable)?))
}

/// Column-wise estimators over vector-valued replica samples.
pub fn summarize_columns(samples: &[Vec<f64>]) -> Vec<EstimatorResult> {
    let width = samples.first().map_or(0, |s| s.len());
    (0..width)
        .map(|c| EstimatorResult::from_samples(&samples.iter().map(|s| s[c]).collect::<Vec<_>>()))
        .collect()
}

/// Joint occupation frequency of `points`, against the determinant.
pub fn estimate_corr(
    points: &[SpaceTimePoint],
    replicas: usize,
    master_seed: u64,
    kcfg: &KernelConfig,
) -> Result<EstimatorResult, HarnessError> {
    let target = corr_fn(points, kcfg)?;
    let n_max = points.iter().map(|p| p.flat()).max().unwrap_or(1);
    let times: Vec<f64> = points.iter().map(|p| p.t).collect();
    let plan = SimPlan::new(n_max, &times, replicas, master_seed);
    let est = run_replicas(&plan, |snaps| occupation_indicator(&plan, points, snaps))?;
    Ok(est.with_target(target))
}

pub fn occupation_indicator(plan: &SimPlan, points: &[SpaceTimePoint], snaps: &[Snapshot]) -> f64 {
    let all = points.iter().all(|p| {
        let snap = &snaps[plan.time_index(p.t).expect("time in plan")];
        snap.is_occupied(LevelIndex::new(p.n, p.a), p.s as i64)
    });
    if all {
        1.0
    } else {
        0.0
    }
}

/// `(k, η, τ)` describing the observable `p_{2k}` on level `⌊ηL⌋` at time `τL`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluctSpec {
    pub k: u32,
    pub eta: Q,
    pub tau: Q,
}

impl FluctSpec {
    pub fn new(k: u32, eta: Q, tau: Q) -> Self {
        FluctSpec { k, eta, tau }
    }

    pub fn level(&self, l: usize) -> usize {
        let x = &self.eta * Q::from_integer((l as i64).into());
        x.floor().to_integer().try_into().unwrap_or(0)
    }

    pub fn time(&self, l: usize) -> f64 {
        crate::exact::to_f64(&self.tau) * l as f64
    }
}

/// How the earlier observable of a pair is read off a replica.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observation {
    /// Both observables from the same trajectory.
    Trajectory,
    /// The earlier, lower observable is redrawn from its conditional law given the later level at
    /// the earlier time, by `sweeps` heat-bath sweeps.
    LevelProjected { sweeps: usize },
}

/// Heat-bath sweeps per `L²` used for projected observations.
pub const SWEEPS_PER_L2: f64 = 1.25;

impl Observation {
    /// Trajectory observation for space-like pairs, level projection for time-like ones.
    pub fn for_branch(branch: Branch, l: usize) -> Self {
        match branch {
            Branch::SpaceLike => Observation::Trajectory,
            Branch::TimeLike => Observation::LevelProjected { sweeps: (SWEEPS_PER_L2 * (l * l) as f64).ceil() as usize },
        }
    }
}

/// Outcome of a fluctuation covariance run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctResult {
    pub estimate: EstimatorResult,
    pub branch: Branch,
    pub observation: Observation,
    pub target_exact: String,
    /// Same replicas read with [`Observation::Trajectory`], when a projection was used.
    pub trajectory_estimate: Option<EstimatorResult>,
}

fn covariance_samples(xs: &[f64], ys: &[f64], scale: f64) -> EstimatorResult {
    let r = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / r, ys.iter().sum::<f64>() / r);
    // Per-replica centered products have the covariance as their mean.
    let prods: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my) * r / (r - 1.0) / scale).collect();
    EstimatorResult::from_samples(&prods)
}

/// `Cov(p_{2k_i}, p_{2k_j}) / L^{2k_i+2k_j}` against the Gaussian limit.
pub fn estimate_fluct_cov(
    pair: (&FluctSpec, &FluctSpec),
    l: usize,
    level_budget: usize,
    replicas: usize,
    master_seed: u64,
    observation: Option<Observation>,
) -> Result<FluctResult, HarnessError> {
    let (fi, fj) = pair;
    let (target, branch) = covariance(fi.k, fj.k, &fi.eta, &fi.tau, &fj.eta, &fj.tau)?;
    let observation = observation.unwrap_or_else(|| Observation::for_branch(branch, l));
    let (ni, nj) = (fi.level(l), fj.level(l));
    if ni == 0 || nj == 0 {
        return Err(HarnessError::Config("scaled level is zero".into()));
    }
    let need = ni.max(nj);
    if need > level_budget {
        return Err(HarnessError::Budget { need, budget: level_budget });
    }
    let (ti, tj) = (fi.time(l), fj.time(l));
    if let Observation::LevelProjected { .. } = observation {
        if ni >= nj || ti > tj {
            return Err(HarnessError::Config("level projection needs the earlier observable on a lower level".into()));
        }
    }
    let plan = SimPlan::new(need, &[ti, tj], replicas, master_seed);
    let (ii, ij) = (plan.time_index(ti).unwrap(), plan.time_index(tj).unwrap());
    let (li, lj) = (LevelIndex::from_flat(ni), LevelIndex::from_flat(nj));
    let raw = sample_replicas_indexed(&plan, |r, s| {
        let direct = shifted_moment(&s[ii], li, fi.k).unwrap();
        let later = shifted_moment(&s[ij], lj, fj.k).unwrap();
        let projected = match observation {
            Observation::Trajectory => direct,
            Observation::LevelProjected { sweeps } => {
                let mut levels = s[ii].levels.clone();
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(derive_seed(master_seed, r as u64), 1));
                gibbs_sweeps_below(&mut levels, nj - 1, sweeps, &mut rng);
                let snap = Snapshot { time: ti, levels };
                shifted_moment(&snap, li, fi.k).unwrap()
            }
        };
        (direct, projected, later)
    })?;
    let scale = (l as f64).powi(2 * (fi.k + fj.k) as i32);
    let direct: Vec<f64> = raw.iter().map(|p| p.0).collect();
    let projected: Vec<f64> = raw.iter().map(|p| p.1).collect();
    let later: Vec<f64> = raw.iter().map(|p| p.2).collect();
    let t = crate::exact::to_f64(&target);
    let estimate = covariance_samples(&projected, &later, scale).with_target(t);
    let trajectory_estimate = match observation {
        Observation::Trajectory => None,
        Observation::LevelProjected { .. } => Some(covariance_samples(&direct, &later, scale).with_target(t)),
    };
    Ok(FluctResult { estimate, branch, observation, target_exact: target.to_string(), trajectory_estimate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q_frac;
    use crate::special_fn::Parity;

    #[test]
    fn constant_and_packed_observables() {
        let plan = SimPlan::new(2, &[0.0], 50, 3);
        let e = run_replicas(&plan, |_| 1.0).unwrap();
        assert_eq!((e.mean, e.std_error, e.replicas), (1.0, 0.0, 50));
        let e = run_replicas(&plan, |s| if s[0].is_occupied(LevelIndex::new(1, Parity::Minus), 0) { 1.0 } else { 0.0 })
            .unwrap();
        assert_eq!(e.mean, 1.0);
        let e = estimate_corr(&[SpaceTimePoint::new(1, Parity::Minus, 0.0, 0)], 20, 1, &KernelConfig::default()).unwrap();
        assert_eq!(e.mean, 1.0);
        assert!((e.target.unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn second_moment_of_one_particle() {
        let plan = SimPlan::new(1, &[1.0], 100_000, 17);
        let lv = LevelIndex::new(1, Parity::Minus);
        let e = run_replicas(&plan, |s| shifted_moment(&s[0], lv, 1).unwrap()).unwrap().with_target(1.0);
        assert!(e.z_score.unwrap().abs() < 3.0, "{e:?}");
    }

    #[test]
    fn reproducible_and_seed_sensitive() {
        let plan = SimPlan::new(3, &[0.5, 2.0], 200, 42);
        let obs = |s: &[Snapshot]| s[1].levels[2][0] as f64 + 0.1 * s[0].levels[1][0] as f64;
        let a = sample_replicas(&plan, obs).unwrap();
        let b = sample_replicas(&plan, obs).unwrap();
        assert_eq!(a, b);
        let other = SimPlan { master_seed: 43, ..plan.clone() };
        assert_ne!(a, sample_replicas(&other, obs).unwrap());
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }

    #[test]
    fn standard_error_scaling() {
        let lv = LevelIndex::new(2, Parity::Minus);
        let obs = |s: &[Snapshot]| shifted_moment(&s[0], lv, 1).unwrap();
        let small = run_replicas(&SimPlan::new(3, &[1.0], 4_000, 9), obs).unwrap();
        let big = run_replicas(&SimPlan::new(3, &[1.0], 16_000, 10), obs).unwrap();
        let ratio = small.std_error / big.std_error;
        assert!((ratio / 2.0 - 1.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn fluct_budget_and_levels() {
        let f = FluctSpec::new(1, q_frac(1, 2), q(1));
        assert_eq!(f.level(40), 20);
        assert_eq!(f.time(40), 40.0);
        let g = FluctSpec::new(1, q(1), q(1));
        let err = estimate_fluct_cov((&g, &f), 40, 30, 10, 0, None).unwrap_err();
        assert!(matches!(err, HarnessError::Budget { need: 40, budget: 30 }));
    }

    fn q(n: i64) -> Q {
        crate::exact::q(n)
    }

    #[test]
    fn config_parsing() {
        let cfg = ExperimentConfig::from_toml(
            "kind = \"simulate\"\nreplicas = 3\nmaster_seed = 7\nformat = \"jsonl\"\n[params]\nn_max = 4\ntimes = [0.5, 1]\neta = \"1/3\"\n",
        )
        .unwrap();
        assert_eq!(cfg.kind, Kind::Simulate);
        assert_eq!(cfg.format, Format::Jsonl);
        assert_eq!(cfg.get_q("eta").unwrap(), Some(q_frac(1, 3)));
        let plan = SimPlan::from_config(&cfg).unwrap();
        assert_eq!((plan.n_max, plan.times.clone(), plan.replicas), (4, vec![0.5, 1.0], 3));
        assert!(ExperimentConfig::from_toml("kind = \"corr\"\nreplicas = 0\n").is_err());
        assert!(ExperimentConfig::from_toml("kind = \"nope\"\n").is_err());
        let back = ExperimentConfig::from_toml(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
