use anyhow::{anyhow, bail, Context, Result};
use clap::Parser;
use serde::Serialize;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use wallgrowth::asymptotics::{covariance, critical_point, limit_profile, region_bounds, solve_ckl};
use wallgrowth::correlation::{corr_fn, kernel_checked, KernelConfig, SpaceTimePoint};
use wallgrowth::enveloping::{build_phi, build_phi_central, markov_apply, state};
use wallgrowth::exact::{q, to_f64, Q};
use wallgrowth::growth_sim::TrajectoryRecord;
use wallgrowth::harness::{
    derive_seed, estimate_corr, sample_replicas, validate_all, value_to_q, Budget, ExperimentConfig, Format, Kind,
    SimPlan,
};
use wallgrowth::special_fn::{CharacterParam, Parity};

/// Random surface growth with a reflecting wall: simulation, kernels, covariances and validation.
#[derive(Parser, Debug)]
#[command(name = "wallgrowth", version)]
struct Cli {
    #[arg(value_enum)]
    kind: Kind,
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Monte Carlo budget for `validate`.
    #[arg(long, value_enum, default_value = "quick")]
    budget: Budget,
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run() -> Result<bool> {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ExperimentConfig::new(cli.kind),
    };
    if cfg.kind != cli.kind {
        bail!("config kind {:?} does not match subcommand {:?}", cfg.kind, cli.kind);
    }
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    if let Some(o) = &cli.out {
        cfg.output_path = o.display().to_string();
    }
    let mut out: Box<dyn Write> = if cfg.output_path.is_empty() {
        Box::new(std::io::stdout().lock())
    } else {
        Box::new(std::io::BufWriter::new(std::fs::File::create(&cfg.output_path)?))
    };
    let ok = match cfg.kind {
        Kind::Simulate => simulate(&cfg, &mut out)?,
        Kind::Kernel => kernel_cmd(&cfg, &mut out)?,
        Kind::Corr => corr_cmd(&cfg, &mut out)?,
        Kind::Covariance => covariance_cmd(&cfg, &mut out)?,
        Kind::Coeffs => coeffs_cmd(&cfg, &mut out)?,
        Kind::Limitshape => limitshape_cmd(&cfg, &mut out)?,
        Kind::State => state_cmd(&cfg, &mut out)?,
        Kind::Validate => {
            let budget = match cfg.get_str("budget")? {
                Some("full") => Budget::Full,
                Some("quick") => Budget::Quick,
                Some(other) => bail!("unknown budget {other}"),
                None => cli.budget,
            };
            let report = validate_all(budget, cfg.master_seed);
            writeln!(out, "{}", report.to_json())?;
            report.passed
        }
    };
    out.flush()?;
    Ok(ok)
}

fn emit<T: Serialize>(cfg: &ExperimentConfig, out: &mut dyn Write, rows: &[T]) -> Result<()> {
    match cfg.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(rows)?)?,
        Format::Jsonl => {
            for r in rows {
                writeln!(out, "{}", serde_json::to_string(r)?)?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct ReplicaRecord {
    replica: usize,
    seed: u64,
    #[serde(flatten)]
    record: TrajectoryRecord,
}

#[derive(Serialize)]
struct ParticleRow {
    replica: usize,
    t: f64,
    n: usize,
    a: Parity,
    k: usize,
    x: i64,
}

fn simulate(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<bool> {
    let plan = SimPlan::from_config(cfg)?;
    let trajectories = sample_replicas(&plan, |s| s.iter().map(|snap| snap.to_record()).collect::<Vec<_>>())?;
    if cfg.format == Format::Csv {
        let mut rows = Vec::new();
        for (replica, recs) in trajectories.iter().enumerate() {
            for rec in recs {
                for lv in &rec.levels {
                    for (i, &x) in lv.x.iter().enumerate() {
                        rows.push(ParticleRow { replica, t: rec.t, n: lv.n, a: lv.a, k: i + 1, x });
                    }
                }
            }
        }
        emit(cfg, out, &rows)?;
    } else {
        let rows: Vec<ReplicaRecord> = trajectories
            .into_iter()
            .enumerate()
            .flat_map(|(replica, recs)| {
                let seed = derive_seed(plan.master_seed, replica as u64);
                recs.into_iter().map(move |record| ReplicaRecord { replica, seed, record })
            })
            .collect();
        emit(cfg, out, &rows)?;
    }
    Ok(true)
}

fn kernel_config(cfg: &ExperimentConfig) -> Result<KernelConfig> {
    let d = KernelConfig::default();
    let alpha = cfg.get_f64_list("alpha")?.unwrap_or_default();
    let beta = cfg.get_f64_list("beta")?.unwrap_or_default();
    let delta = cfg.get_f64("delta")?.unwrap_or(0.0);
    let omega = if alpha.is_empty() && beta.is_empty() && delta == 0.0 {
        CharacterParam::zero()
    } else {
        CharacterParam::new(alpha, beta, delta)?
    };
    Ok(KernelConfig::new(
        omega,
        cfg.get_usize("quad_size")?.unwrap_or(d.quad_size),
        cfg.get_f64("contour_radius")?.unwrap_or(d.contour_radius),
        cfg.get_usize("contour_points")?.unwrap_or(d.contour_points),
    )?)
}

/// `points = [[n, "-", t, s], ...]`.
fn points(cfg: &ExperimentConfig) -> Result<Vec<SpaceTimePoint>> {
    let arr = cfg.params.get("points").and_then(|v| v.as_array()).ok_or_else(|| anyhow!("missing `points`"))?;
    arr.iter()
        .map(|p| {
            let p = p.as_array().filter(|p| p.len() == 4).ok_or_else(|| anyhow!("point must be [n, a, t, s]"))?;
            let n = p[0].as_integer().filter(|&n| n >= 1).ok_or_else(|| anyhow!("bad n"))? as usize;
            let a = p[1].as_str().and_then(Parity::parse).ok_or_else(|| anyhow!("a must be \"-\" or \"+\""))?;
            let t = p[2].as_float().or_else(|| p[2].as_integer().map(|i| i as f64)).ok_or_else(|| anyhow!("bad t"))?;
            let s = p[3].as_integer().filter(|&s| s >= 0).ok_or_else(|| anyhow!("bad s"))? as usize;
            Ok(SpaceTimePoint::new(n, a, t, s))
        })
        .collect()
}

#[derive(Serialize)]
struct KernelRow {
    i: usize,
    j: usize,
    value: f64,
}

fn kernel_cmd(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<bool> {
    let kc = kernel_config(cfg)?;
    let pts = points(cfg)?;
    let mut rows = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        for (j, r) in pts.iter().enumerate() {
            rows.push(KernelRow { i, j, value: kernel_checked(p, r, &kc)? });
        }
    }
    emit(cfg, out, &rows)?;
    Ok(true)
}

#[derive(Serialize)]
struct CorrRow {
    determinant: f64,
    mean: Option<f64>,
    std_error: Option<f64>,
    replicas: usize,
    z_score: Option<f64>,
}

fn corr_cmd(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<bool> {
    let kc = kernel_config(cfg)?;
    let pts = points(cfg)?;
    let row = if cfg.replicas > 1 {
        let e = estimate_corr(&pts, cfg.replicas, cfg.master_seed, &kc)?;
        CorrRow {
            determinant: e.target.unwrap_or(f64::NAN),
            mean: Some(e.mean),
            std_error: Some(e.std_error),
            replicas: e.replicas,
            z_score: e.z_score,
        }
    } else {
        CorrRow { determinant: corr_fn(&pts, &kc)?, mean: None, std_error: None, replicas: 0, z_score: None }
    };
    emit(cfg, out, &[row])?;
    Ok(true)
}

#[derive(Serialize)]
struct CovRow {
    k_i: u32,
    k_j: u32,
    eta_i: String,
    tau_i: String,
    eta_j: String,
    tau_j: String,
    branch: &'static str,
    value: String,
    value_float: f64,
}

fn q_list(v: &toml::Value) -> Result<Vec<Q>> {
    v.as_array()
        .ok_or_else(|| anyhow!("expected an array"))?
        .iter()
        .map(|x| value_to_q(x).ok_or_else(|| anyhow!("bad rational {x}")))
        .collect()
}

/// `tuples = [[eta_i, tau_i, eta_j, tau_j], ...]`, `ks = [[k_i, k_j], ...]`.
fn covariance_cmd(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<bool> {
    let tuples = match cfg.params.get("tuples") {
        Some(toml::Value::Array(a)) => a.iter().map(q_list).collect::<Result<Vec<_>>>()?,
        _ => vec![vec![q(1), q(1), q(1), q(1)]],
    };
    let ks: Vec<(u32, u32)> = match cfg.params.get("ks") {
        Some(toml::Value::Array(a)) => a
            .iter()
            .map(|p| {
                let p = p.as_array().filter(|p| p.len() == 2).ok_or_else(|| anyhow!("ks entries are [k_i, k_j]"))?;
                let k = |v: &toml::Value| v.as_integer().filter(|&k| k >= 1).map(|k| k as u32).ok_or_else(|| anyhow!("bad k"));
                Ok((k(&p[0])?, k(&p[1])?))
            })
            .collect::<Result<_>>()?,
        _ => vec![(1, 1)],
    };
    let mut rows = Vec::new();
    for t in &tuples {
        if t.len() != 4 {
            bail!("tuples entries are [eta_i, tau_i, eta_j, tau_j]");
        }
        for &(ki, kj) in &ks {
            let (v, branch) = covariance(ki, kj, &t[0], &t[1], &t[2], &t[3])?;
            rows.push(CovRow {
                k_i: ki,
                k_j: kj,
                eta_i: t[0].to_string(),
                tau_i: t[1].to_string(),
                eta_j: t[2].to_string(),
                tau_j: t[3].to_string(),
                branch: branch.name(),
                value_float: to_f64(&v),
                value: v.to_string(),
            });
        }
    }
    emit(cfg, out, &rows)?;
    Ok(true)
}

#[derive(Serialize)]
struct CoeffRow {
    k: u32,
    l: u32,
    value: String,
    value_float: f64,
}

fn coeffs_cmd(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<bool> {
    let k_max = cfg.get_usize("k_max")?.unwrap_or(4) as u32;
    let tau2 = cfg.get_q("tau2")?.unwrap_or_else(|| q(2));
    let tau1 = cfg.get_q("tau1")?.unwrap_or_else(|| q(1));
    let eta2 = cfg.get_q("eta2")?.unwrap_or_else(|| q(1));
    let mut rows = Vec::new();
    for k in 1..=k_max {
        for (l, c) in solve_ckl(k, &tau2, &tau1, &eta2)?.into_iter().enumerate() {
            rows.push(CoeffRow { k, l: l as u32 + 1, value_float: to_f64(&c), value: c.to_string() });
        }
    }
    emit(cfg, out, &rows)?;
    Ok(true)
}

#[derive(Serialize)]
struct ShapeRow {
    nu: f64,
    eta: f64,
    tau: f64,
    re_z0: f64,
    im_z0: f64,
    h: f64,
}

fn limitshape_cmd(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<bool> {
    let etas = cfg.get_f64_list("eta")?.unwrap_or_else(|| vec![1.0]);
    let taus = cfg.get_f64_list("tau")?.unwrap_or_else(|| vec![1.0]);
    let steps = cfg.get_usize("steps")?.unwrap_or(50).max(1);
    let mut rows = Vec::new();
    for &eta in &etas {
        for &tau in &taus {
            let (_, r) = region_bounds(eta / 2.0, tau);
            let nu_max = cfg.get_f64("nu_max")?.unwrap_or(1.1 * r);
            for i in 1..=steps {
                let nu = nu_max * i as f64 / steps as f64;
                let p = critical_point(nu, eta / 2.0, tau)?;
                rows.push(ShapeRow { nu, eta, tau, re_z0: p.z0.re, im_z0: p.z0.im, h: limit_profile(nu, eta, tau) });
            }
        }
    }
    emit(cfg, out, &rows)?;
    Ok(true)
}

#[derive(Serialize)]
struct StateRow {
    element: String,
    n_plus_1: usize,
    s: String,
    t: String,
    value: String,
    value_float: f64,
}

/// `⟨P_t Φ_{2k}⟩_s`; `t = 0` gives the plain state.
fn state_cmd(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<bool> {
    let k = cfg.get_usize("k")?.unwrap_or(1);
    let d = cfg.get_usize("n_plus_1")?.unwrap_or(3);
    let central = matches!(cfg.params.get("central"), Some(toml::Value::Boolean(true)));
    let s = cfg.get_q("s")?.unwrap_or_else(|| q(1));
    let t = cfg.get_q("t")?.unwrap_or_else(|| q(0));
    let phi = if central { build_phi_central(k, d)? } else { build_phi(k, d)? };
    let moved = markov_apply(&phi.expansion, &t, d)?;
    let v = state(&moved, &s, d)?;
    let row = StateRow {
        element: format!("{:?}", phi.kind),
        n_plus_1: d,
        s: s.to_string(),
        t: t.to_string(),
        value_float: to_f64(&v),
        value: v.to_string(),
    };
    emit(cfg, out, &[row])?;
    Ok(true)
}
