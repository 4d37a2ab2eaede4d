//! Interlaced particle dynamics with a reflecting wall at 0.
//!
//! Positions are stored in x-coordinates; `y = 2x + a + 1/2`.

use crate::special_fn::Parity;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("N_max must be at least 1")]
    EmptySystem,
    #[error("target time {target} is before the current clock {clock}")]
    TimeReversal { target: f64, clock: f64 },
    #[error("level N={0} is not simulated")]
    MissingLevel(usize),
    #[error("state space exceeds the enumeration cap of {cap} states")]
    StateSpaceTooLarge { cap: usize },
    #[error("generator oracle supports N_max <= {max}, got {got}")]
    OracleLevels { max: usize, got: usize },
    #[error("configuration violates ordering, wall or interlacing constraints")]
    NotInterlaced,
}

/// Level `(n, a)`; its flat index is `N = 2n − 1/2 + a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LevelIndex {
    pub n: usize,
    pub a: Parity,
}

impl LevelIndex {
    pub fn new(n: usize, a: Parity) -> Self {
        assert!(n >= 1, "levels start at n = 1");
        LevelIndex { n, a }
    }

    pub fn flat(&self) -> usize {
        match self.a {
            Parity::Minus => 2 * self.n - 1,
            Parity::Plus => 2 * self.n,
        }
    }

    pub fn from_flat(big_n: usize) -> Self {
        assert!(big_n >= 1, "flat levels start at 1");
        let a = if big_n % 2 == 1 { Parity::Minus } else { Parity::Plus };
        LevelIndex { n: big_n.div_ceil(2), a }
    }

    /// `y = 2x + a + 1/2`.
    pub fn y_of(&self, x: i64) -> i64 {
        match self.a {
            Parity::Minus => 2 * x,
            Parity::Plus => 2 * x + 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Left,
    Right,
}

fn level_of(l: usize) -> LevelIndex {
    LevelIndex::from_flat(l + 1)
}

/// Packed configuration `x_k = n − k` for levels `1..=n_max`.
pub fn packed_levels(n_max: usize) -> Vec<Vec<i64>> {
    (0..n_max)
        .map(|l| {
            let n = level_of(l).n as i64;
            (1..=n).map(|k| n - k).collect()
        })
        .collect()
}

/// Both interlacing inequalities between particle `j` (1-based) of level `up` and the level below.
fn pair_ok(levels: &[Vec<i64>], up: usize, j: usize) -> bool {
    let x = levels[up][j - 1];
    let lower = &levels[up - 1];
    match level_of(up).a {
        Parity::Plus => x >= lower[j - 1] && (j < 2 || x < lower[j - 2]),
        Parity::Minus => (j > lower.len() || x > lower[j - 1]) && (j < 2 || x <= lower[j - 2]),
    }
}

/// Full check of ordering, wall and interlacing constraints.
pub fn check_interlacing(levels: &[Vec<i64>]) -> bool {
    for (l, xs) in levels.iter().enumerate() {
        if xs.len() != level_of(l).n {
            return false;
        }
        if xs.windows(2).any(|w| w[0] <= w[1]) || xs.last().is_some_and(|&x| x < 0) {
            return false;
        }
        if l > 0 && !(1..=xs.len()).all(|j| pair_ok(levels, l, j)) {
            return false;
        }
    }
    true
}

fn local_ok(levels: &[Vec<i64>], l: usize, k: usize) -> bool {
    let xs = &levels[l];
    let x = xs[k - 1];
    if x < 0 || (k >= 2 && xs[k - 2] <= x) || (k < xs.len() && x <= xs[k]) {
        return false;
    }
    if l > 0 && !pair_ok(levels, l, k) {
        return false;
    }
    if l + 1 < levels.len() {
        let up = &levels[l + 1];
        if k <= up.len() && !pair_ok(levels, l + 1, k) {
            return false;
        }
        if k < up.len() && !pair_ok(levels, l + 1, k + 1) {
            return false;
        }
    }
    true
}

/// Apply one clock ring to `levels` in place. Returns whether anything moved.
///
/// `l` is the 0-based level (flat index minus one), `k` the 1-based particle index.
pub fn apply_event(levels: &mut [Vec<i64>], l: usize, k: usize, dir: Direction) -> bool {
    let lv = level_of(l);
    let x = levels[l][k - 1];
    let dir = if dir == Direction::Left && lv.a == Parity::Minus && k == lv.n && x == 0 {
        Direction::Right
    } else {
        dir
    };
    match dir {
        Direction::Right => {
            if l > 0 && k >= 2 {
                let b = levels[l - 1][k - 2];
                let blocked = match lv.a {
                    Parity::Plus => x + 1 == b,
                    Parity::Minus => x == b,
                };
                if blocked {
                    return false;
                }
            }
            levels[l][k - 1] += 1;
            let mut cur = l;
            while cur + 1 < levels.len() {
                let old = levels[cur][k - 1] - 1;
                let gap = match level_of(cur).a {
                    Parity::Minus => 0,
                    Parity::Plus => 1,
                };
                if levels[cur + 1][k - 1] - old != gap {
                    break;
                }
                levels[cur + 1][k - 1] += 1;
                cur += 1;
            }
            debug_assert!((l..=cur).all(|c| local_ok(levels, c, k)));
        }
        Direction::Left => {
            if l > 0 {
                let lower = &levels[l - 1];
                let blocked = match lv.a {
                    Parity::Plus => x == lower[k - 1],
                    Parity::Minus => k <= lower.len() && x == lower[k - 1] + 1,
                };
                if blocked {
                    return false;
                }
            }
            levels[l][k - 1] -= 1;
            let (mut cur, mut kk) = (l, k);
            while cur + 1 < levels.len() && kk < levels[cur + 1].len() {
                let old = levels[cur][kk - 1] + 1;
                let want = match level_of(cur).a {
                    Parity::Minus => old - 1,
                    Parity::Plus => old,
                };
                if levels[cur + 1][kk] != want {
                    break;
                }
                levels[cur + 1][kk] -= 1;
                cur += 1;
                kk += 1;
            }
            debug_assert!((0..=cur - l).all(|d| local_ok(levels, l + d, k + d)));
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: f64,
    pub levels: Vec<Vec<i64>>,
}

impl Snapshot {
    pub fn n_max(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, lv: LevelIndex) -> Option<&[i64]> {
        self.levels.get(lv.flat().checked_sub(1)?).map(|v| v.as_slice())
    }

    pub fn is_occupied(&self, lv: LevelIndex, x: i64) -> bool {
        self.level(lv).is_some_and(|xs| xs.contains(&x))
    }

    pub fn to_record(&self) -> TrajectoryRecord {
        TrajectoryRecord {
            t: self.time,
            levels: self
                .levels
                .iter()
                .enumerate()
                .map(|(l, x)| {
                    let li = level_of(l);
                    LevelRecord { n: li.n, a: li.a, x: x.clone() }
                })
                .collect(),
        }
    }
}

/// One JSON-lines record of a trajectory dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub levels: Vec<LevelRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub n: usize,
    pub a: Parity,
    pub x: Vec<i64>,
}

#[derive(Debug, Clone)]
pub struct ParticleSystem {
    levels: Vec<Vec<i64>>,
    clock: f64,
    rng: ChaCha8Rng,
    slots: Vec<(u32, u32)>,
}

impl ParticleSystem {
    pub fn new_densely_packed(n_max: usize, seed: u64) -> Result<Self, SimError> {
        if n_max == 0 {
            return Err(SimError::EmptySystem);
        }
        let levels = packed_levels(n_max);
        let slots = levels
            .iter()
            .enumerate()
            .flat_map(|(l, xs)| (1..=xs.len()).map(move |k| (l as u32, k as u32)))
            .collect();
        Ok(ParticleSystem { levels, clock: 0.0, rng: ChaCha8Rng::seed_from_u64(seed), slots })
    }

    /// Resume from an arbitrary valid configuration at time `clock`.
    pub fn from_levels(levels: Vec<Vec<i64>>, clock: f64, seed: u64) -> Result<Self, SimError> {
        if levels.is_empty() {
            return Err(SimError::EmptySystem);
        }
        if !check_interlacing(&levels) {
            return Err(SimError::NotInterlaced);
        }
        let mut sys = Self::new_densely_packed(levels.len(), seed)?;
        sys.levels = levels;
        sys.clock = clock;
        Ok(sys)
    }

    pub fn n_max(&self) -> usize {
        self.levels.len()
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn particle_count(&self) -> usize {
        self.slots.len()
    }

    /// Total attempt rate: two rate-1/2 clocks per particle.
    pub fn total_rate(&self) -> f64 {
        self.slots.len() as f64
    }

    pub fn levels(&self) -> &[Vec<i64>] {
        &self.levels
    }

    pub fn apply_event(&mut self, l: usize, k: usize, dir: Direction) -> bool {
        apply_event(&mut self.levels, l, k, dir)
    }

    pub fn advance_to(&mut self, t_target: f64) -> Result<(), SimError> {
        if !(t_target >= self.clock) {
            return Err(SimError::TimeReversal { target: t_target, clock: self.clock });
        }
        let rate = self.total_rate();
        loop {
            let u: f64 = self.rng.gen();
            let dt = -(1.0 - u).ln() / rate;
            if self.clock + dt > t_target {
                self.clock = t_target;
                return Ok(());
            }
            self.clock += dt;
            let pick = self.rng.gen_range(0..self.slots.len());
            let (l, k) = self.slots[pick];
            let dir = if self.rng.gen::<bool>() { Direction::Right } else { Direction::Left };
            apply_event(&mut self.levels, l as usize, k as usize, dir);
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot { time: self.clock, levels: self.levels.clone() }
    }
}

/// Positions `lo..=hi` that particle `(l, k)` may take with every other particle held fixed.
pub fn allowed_range(levels: &[Vec<i64>], l: usize, k: usize) -> (i64, i64) {
    let mut lo = 0;
    let mut hi = i64::MAX;
    if l > 0 {
        let lower = &levels[l - 1];
        match level_of(l).a {
            Parity::Plus => {
                lo = lo.max(lower[k - 1]);
                if k >= 2 {
                    hi = hi.min(lower[k - 2] - 1);
                }
            }
            Parity::Minus => {
                if k <= lower.len() {
                    lo = lo.max(lower[k - 1] + 1);
                }
                if k >= 2 {
                    hi = hi.min(lower[k - 2]);
                }
            }
        }
    }
    if l + 1 < levels.len() {
        let up = &levels[l + 1];
        match level_of(l + 1).a {
            Parity::Plus => {
                if k <= up.len() {
                    hi = hi.min(up[k - 1]);
                }
                if k < up.len() {
                    lo = lo.max(up[k] + 1);
                }
            }
            Parity::Minus => {
                if k <= up.len() {
                    hi = hi.min(up[k - 1] - 1);
                }
                if k < up.len() {
                    lo = lo.max(up[k]);
                }
            }
        }
    }
    (lo, hi)
}

/// Systematic heat-bath sweeps over levels `0..top` (0-based), holding level `top` and above fixed.
///
/// Each update redraws one particle from its allowed range, all positions equally likely except
/// the wall position on an `(n,−)` level, which has half weight.
pub fn gibbs_sweeps_below(levels: &mut [Vec<i64>], top: usize, sweeps: usize, rng: &mut impl Rng) {
    let top = top.min(levels.len());
    for _ in 0..sweeps {
        for l in 0..top {
            let half = level_of(l).a == Parity::Minus;
            for k in 1..=levels[l].len() {
                let (lo, hi) = allowed_range(levels, l, k);
                debug_assert!(lo <= hi && hi < i64::MAX);
                let x = if half && lo == 0 {
                    let u = rng.gen::<f64>() * (hi as f64 + 0.5);
                    if u < 0.5 {
                        0
                    } else {
                        (1 + (u - 0.5) as i64).min(hi)
                    }
                } else if lo == hi {
                    lo
                } else {
                    rng.gen_range(lo..=hi)
                };
                levels[l][k - 1] = x;
            }
        }
    }
}

/// Height query on flat level `big_n` at y-threshold `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeightQuery {
    pub u: i64,
    pub big_n: usize,
    pub t: f64,
}

/// `#{k : y_k ≥ u}` on the queried level.
pub fn height(snap: &Snapshot, q: HeightQuery) -> Result<usize, SimError> {
    let lv = LevelIndex::from_flat(q.big_n);
    let xs = snap.level(lv).ok_or(SimError::MissingLevel(q.big_n))?;
    Ok(xs.iter().filter(|&&x| lv.y_of(x) >= q.u).count())
}

/// Law of the truncated chain at time `t`, started from the packed configuration.
#[derive(Debug, Clone)]
pub struct OracleLaw {
    pub states: Vec<Vec<Vec<i64>>>,
    pub probs: Vec<f64>,
}

impl OracleLaw {
    pub fn expectation(&self, f: impl Fn(&[Vec<i64>]) -> f64) -> f64 {
        self.states.iter().zip(&self.probs).map(|(s, p)| p * f(s)).sum()
    }
}

pub const ORACLE_STATE_CAP: usize = 10_000;
pub const ORACLE_MAX_LEVELS: usize = 5;

/// Sparse rate matrix of the chain restricted to configurations with every `x ≤ x_cap`.
#[derive(Debug, Clone)]
pub struct Generator {
    pub states: Vec<Vec<Vec<i64>>>,
    /// `(from, to, rate)` off-diagonal entries; diagonals are minus the row sums.
    pub rates: Vec<(usize, usize, f64)>,
}

impl Generator {
    pub fn exit_rates(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.states.len()];
        for &(i, _, r) in &self.rates {
            out[i] += r;
        }
        out
    }
}

/// Move `(l, k)` by one step in `d`, re-resolving interlacing violations level by level.
fn constraint_move(s: &[Vec<i64>], l: usize, k: usize, d: i64) -> Option<Vec<Vec<i64>>> {
    let lv = level_of(l);
    let mut d = d;
    if d < 0 && lv.a == Parity::Minus && k == lv.n && s[l][k - 1] == 0 {
        d = 1;
    }
    let mut t = s.to_vec();
    t[l][k - 1] += d;
    let prefix_ok = |t: &[Vec<i64>], upto: usize| check_interlacing(&t[..=upto]);
    if !prefix_ok(&t, l) {
        return None;
    }
    for up in l + 1..t.len() {
        let bad: Vec<usize> = (1..=t[up].len()).filter(|&j| !pair_ok(&t, up, j)).collect();
        for j in bad {
            t[up][j - 1] += d;
        }
        if !prefix_ok(&t, up) {
            return None;
        }
    }
    Some(t)
}

pub fn build_generator(n_max: usize, x_cap: i64) -> Result<Generator, SimError> {
    if n_max == 0 {
        return Err(SimError::EmptySystem);
    }
    if n_max > ORACLE_MAX_LEVELS {
        return Err(SimError::OracleLevels { max: ORACLE_MAX_LEVELS, got: n_max });
    }
    let start = packed_levels(n_max);
    let mut index: HashMap<Vec<Vec<i64>>, usize> = HashMap::new();
    index.insert(start.clone(), 0);
    let mut states = vec![start];
    let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
    let mut i = 0;
    while i < states.len() {
        let s = states[i].clone();
        for l in 0..n_max {
            for k in 1..=s[l].len() {
                for d in [1, -1] {
                    let Some(t) = constraint_move(&s, l, k, d) else { continue };
                    if t.iter().flatten().any(|&x| x > x_cap) {
                        continue;
                    }
                    let j = match index.get(&t) {
                        Some(&j) => j,
                        None => {
                            if states.len() >= ORACLE_STATE_CAP {
                                return Err(SimError::StateSpaceTooLarge { cap: ORACLE_STATE_CAP });
                            }
                            index.insert(t.clone(), states.len());
                            states.push(t);
                            states.len() - 1
                        }
                    };
                    *acc.entry((i, j)).or_insert(0.0) += 0.5;
                }
            }
        }
        i += 1;
    }
    let mut rates: Vec<(usize, usize, f64)> = acc.into_iter().map(|((i, j), r)| (i, j, r)).collect();
    rates.sort_by_key(|r| (r.0, r.1));
    Ok(Generator { states, rates })
}

/// `δ_packed · exp(tQ)` by uniformization.
pub fn generator_oracle(n_max: usize, x_cap: i64, t: f64) -> Result<OracleLaw, SimError> {
    let g = build_generator(n_max, x_cap)?;
    let m = g.states.len();
    let exits = g.exit_rates();
    let lambda = exits.iter().cloned().fold(0.0, f64::max).max(1e-300);
    let mut v = vec![0.0; m];
    v[0] = 1.0;
    let mut out = vec![0.0; m];
    let lt = lambda * t;
    let mut term = (-lt).exp();
    let mut j = 0usize;
    let mut cum = 0.0;
    loop {
        for (o, x) in out.iter_mut().zip(&v) {
            *o += term * x;
        }
        cum += term;
        if 1.0 - cum < 1e-15 || j > 100_000 || (j as f64 > lt && term < 1e-300) {
            break;
        }
        let mut next: Vec<f64> = v.iter().zip(&exits).map(|(x, e)| x * (1.0 - e / lambda)).collect();
        for &(a, b, r) in &g.rates {
            next[b] += v[a] * r / lambda;
        }
        v = next;
        j += 1;
        term *= lt / j as f64;
    }
    Ok(OracleLaw { states: g.states, probs: out })
}
