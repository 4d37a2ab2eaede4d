//! States, coproduct and central elements on the enveloping algebra of `so_{N+1}`.
//!
//! All arithmetic is exact. A state `⟨X⟩_t` is returned as a polynomial in `t`.

use crate::growth_sim::{LevelIndex, Snapshot};
use crate::special_fn::Parity;
use num::{BigInt, One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

pub use crate::exact::{q, q_frac, Q};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvelopingError {
    #[error("monomial degree {0} exceeds the cap of {MAX_DEGREE}")]
    DegreeCap(usize),
    #[error("unsupported central element Phi_{0}")]
    UnsupportedK(usize),
    #[error("matrix size N+1 must be at least 2, got {0}")]
    BadSize(usize),
    #[error("index {0} is not valid for N+1 = {1}")]
    BadIndex(i32, usize),
}

pub const MAX_DEGREE: usize = 12;

/// Rows and columns of `so_{N+1}` numbered `−n..n`, with `0` present iff `N+1` is odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SoIndex {
    pub n_plus_1: usize,
}

impl SoIndex {
    pub fn new(n_plus_1: usize) -> Result<Self, EnvelopingError> {
        if n_plus_1 < 2 {
            return Err(EnvelopingError::BadSize(n_plus_1));
        }
        Ok(SoIndex { n_plus_1 })
    }

    pub fn rank(&self) -> usize {
        self.n_plus_1 / 2
    }

    pub fn odd(&self) -> bool {
        self.n_plus_1 % 2 == 1
    }

    pub fn indices(&self) -> Vec<i32> {
        let n = self.rank() as i32;
        (-n..=n).filter(|&i| i != 0 || self.odd()).collect()
    }

    pub fn contains(&self, i: i32) -> bool {
        let n = self.rank() as i32;
        i.abs() <= n && (i != 0 || self.odd())
    }

    /// Matrix row of index `i`.
    pub fn position(&self, i: i32) -> usize {
        let n = self.rank() as i32;
        let p = i + n;
        if !self.odd() && i > 0 {
            (p - 1) as usize
        } else {
            p as usize
        }
    }

    /// `ρ_i = −i + 1` (even) or `−i + 1/2` (odd) for `i > 0`, and `ρ_{−i} = −ρ_i`.
    pub fn rho(&self, i: i32) -> Q {
        let base = if self.odd() { q_frac(1 - 2 * i.abs() as i64, 2) } else { q(1 - i.abs() as i64) };
        if i > 0 {
            base
        } else {
            -base
        }
    }
}

pub type Generator = (i32, i32);
pub type NCMonomial = Vec<Generator>;

/// Dense integer matrix of `F_ij = E_ij − E_{−j,−i}`.
pub fn generator_matrix(idx: SoIndex, g: Generator) -> Vec<Vec<i64>> {
    let d = idx.n_plus_1;
    let mut m = vec![vec![0i64; d]; d];
    let (i, j) = g;
    m[idx.position(i)][idx.position(j)] += 1;
    m[idx.position(-j)][idx.position(-i)] -= 1;
    m
}

fn matmul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let d = a.len();
    let mut c = vec![vec![0i64; d]; d];
    for i in 0..d {
        for k in 0..d {
            if a[i][k] != 0 {
                for j in 0..d {
                    c[i][j] += a[i][k] * b[k][j];
                }
            }
        }
    }
    c
}

fn trace(a: &[Vec<i64>]) -> i64 {
    (0..a.len()).map(|i| a[i][i]).sum()
}

pub fn trace_product(mono: &[Generator], n_plus_1: usize) -> Result<i64, EnvelopingError> {
    let idx = SoIndex::new(n_plus_1)?;
    check_mono(idx, mono)?;
    let d = idx.n_plus_1;
    let mut acc: Vec<Vec<i64>> = (0..d).map(|i| (0..d).map(|j| (i == j) as i64).collect()).collect();
    for &g in mono {
        acc = matmul(&acc, &generator_matrix(idx, g));
    }
    Ok(trace(&acc))
}

fn check_mono(idx: SoIndex, mono: &[Generator]) -> Result<(), EnvelopingError> {
    for &(i, j) in mono {
        for x in [i, j] {
            if !idx.contains(x) {
                return Err(EnvelopingError::BadIndex(x, idx.n_plus_1));
            }
        }
    }
    Ok(())
}

/// Polynomial in one variable with rational coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TPoly(pub Vec<Q>);

impl TPoly {
    pub fn constant(c: Q) -> Self {
        TPoly(vec![c]).trimmed()
    }

    fn trimmed(mut self) -> Self {
        while self.0.last().is_some_and(|c| c.is_zero()) {
            self.0.pop();
        }
        self
    }

    pub fn eval(&self, t: &Q) -> Q {
        self.0.iter().rev().fold(Q::zero(), |acc, c| acc * t + c)
    }

    pub fn eval_f64(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * t + c.to_f64().unwrap_or(f64::NAN))
    }

    pub fn coeff(&self, k: usize) -> Q {
        self.0.get(k).cloned().unwrap_or_else(Q::zero)
    }

    pub fn add_scaled(&mut self, other: &TPoly, c: &Q) {
        if self.0.len() < other.0.len() {
            self.0.resize(other.0.len(), Q::zero());
        }
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b * c;
        }
        let t = std::mem::take(self).trimmed();
        *self = t;
    }
}

/// Linear combination of ordered monomials; the empty monomial is the constant term.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NCPolynomial {
    pub terms: BTreeMap<NCMonomial, Q>,
}

impl NCPolynomial {
    pub fn zero() -> Self {
        NCPolynomial::default()
    }

    pub fn constant(c: Q) -> Self {
        let mut p = NCPolynomial::zero();
        p.add_term(vec![], c);
        p
    }

    /// `F_ij`, which vanishes when `i = −j`.
    pub fn generator(i: i32, j: i32) -> Self {
        let mut p = NCPolynomial::zero();
        if i != -j {
            p.add_term(vec![(i, j)], Q::one());
        }
        p
    }

    pub fn add_term(&mut self, m: NCMonomial, c: Q) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(m).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            let key: Vec<_> = self.terms.iter().find(|(_, v)| v.is_zero()).map(|(k, _)| k.clone()).into_iter().collect();
            for k in key {
                self.terms.remove(&k);
            }
        }
    }

    pub fn add(&self, o: &NCPolynomial) -> NCPolynomial {
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.add_term(m.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, o: &NCPolynomial) -> NCPolynomial {
        self.add(&o.scale(&-Q::one()))
    }

    pub fn scale(&self, c: &Q) -> NCPolynomial {
        let mut r = NCPolynomial::zero();
        for (m, v) in &self.terms {
            r.add_term(m.clone(), v * c);
        }
        r
    }

    pub fn mul(&self, o: &NCPolynomial) -> NCPolynomial {
        let mut r = NCPolynomial::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &o.terms {
                let mut m = a.clone();
                m.extend_from_slice(b);
                r.add_term(m, ca * cb);
            }
        }
        r
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|m| m.len()).max().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn constant_term(&self) -> Q {
        self.terms.get(&Vec::new()).cloned().unwrap_or_else(Q::zero)
    }
}

/// `⟨F_{i₁j₁}⋯F_{i_mj_m}⟩_t = Σ_π t^{|π|} Π_B Tr(Π_{b∈B} F_{i_bj_b})` as a polynomial in `t`.
pub fn monomial_state(mono: &[Generator], n_plus_1: usize) -> Result<TPoly, EnvelopingError> {
    let m = mono.len();
    if m > MAX_DEGREE {
        return Err(EnvelopingError::DegreeCap(m));
    }
    let idx = SoIndex::new(n_plus_1)?;
    check_mono(idx, mono)?;
    if m == 0 {
        return Ok(TPoly::constant(Q::one()));
    }
    let mats: Vec<_> = mono.iter().map(|&g| generator_matrix(idx, g)).collect();
    let full = 1usize << m;
    // Ordered products over every subset of positions.
    let mut prod: Vec<Vec<Vec<i64>>> = Vec::with_capacity(full);
    let mut tr = vec![0i64; full];
    prod.push(Vec::new());
    for mask in 1..full {
        let hi = usize::BITS - 1 - mask.leading_zeros();
        let rest = mask & !(1 << hi);
        let p = if rest == 0 { mats[hi as usize].clone() } else { matmul(&prod[rest], &mats[hi as usize]) };
        tr[mask] = trace(&p);
        prod.push(p);
    }
    // f[mask][k] = Σ over partitions of mask into k blocks of the trace products.
    let mut f: Vec<Vec<i128>> = vec![Vec::new(); full];
    f[0] = vec![1];
    for mask in 1..full {
        let low = mask & mask.wrapping_neg();
        let others = mask & !low;
        let mut acc = vec![0i128; mask.count_ones() as usize + 1];
        let mut sub = others;
        loop {
            let block = sub | low;
            let tb = tr[block] as i128;
            if tb != 0 {
                for (k, v) in f[mask & !block].iter().enumerate() {
                    acc[k + 1] += tb * v;
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & others;
        }
        f[mask] = acc;
    }
    Ok(TPoly(f[full - 1].iter().map(|&v| Q::from_integer(BigInt::from(v))).collect()).trimmed())
}

pub fn state_poly(p: &NCPolynomial, n_plus_1: usize) -> Result<TPoly, EnvelopingError> {
    let mut out = TPoly::default();
    for (m, c) in &p.terms {
        out.add_scaled(&monomial_state(m, n_plus_1)?, c);
    }
    Ok(out)
}

pub fn state(p: &NCPolynomial, t: &Q, n_plus_1: usize) -> Result<Q, EnvelopingError> {
    Ok(state_poly(p, n_plus_1)?.eval(t))
}

pub fn state_f64(p: &NCPolynomial, t: f64, n_plus_1: usize) -> Result<f64, EnvelopingError> {
    Ok(state_poly(p, n_plus_1)?.eval_f64(t))
}

/// `P_t = (id ⊗ ⟨·⟩_t) ∘ Δ` on one monomial, with `Δ(F) = F ⊗ 1 + 1 ⊗ F`.
pub fn coproduct_state(mono: &[Generator], t: &Q, n_plus_1: usize) -> Result<NCPolynomial, EnvelopingError> {
    let m = mono.len();
    if m > MAX_DEGREE {
        return Err(EnvelopingError::DegreeCap(m));
    }
    let mut out = NCPolynomial::zero();
    for mask in 0..(1usize << m) {
        let kept: NCMonomial = (0..m).filter(|b| mask >> b & 1 == 1).map(|b| mono[b]).collect();
        let rest: NCMonomial = (0..m).filter(|b| mask >> b & 1 == 0).map(|b| mono[b]).collect();
        let c = monomial_state(&rest, n_plus_1)?.eval(t);
        out.add_term(kept, c);
    }
    Ok(out)
}

pub fn markov_apply(p: &NCPolynomial, t: &Q, n_plus_1: usize) -> Result<NCPolynomial, EnvelopingError> {
    let mut out = NCPolynomial::zero();
    for (m, c) in &p.terms {
        out = out.add(&coproduct_state(m, t, n_plus_1)?.scale(c));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CentralKind {
    Phi2,
    /// The fourth-order expansion in the hardcoded table.
    Phi4,
    /// `Tr F⁴ + ((N−1)/2) Tr F² + 2Σρ_m⁴`, central in every rank.
    Phi4Central,
}

#[derive(Debug, Clone)]
pub struct CentralElement {
    pub kind: CentralKind,
    pub n_plus_1: usize,
    pub expansion: NCPolynomial,
    /// `Φ_{2k}/2 ↦ Σ l_i^{hc_power}`.
    pub hc_power: u32,
}

impl CentralElement {
    /// `2 Σ l_i^{2k}` on the irreducible representation with highest weight `lambda`.
    pub fn hc_value(&self, lambda: &[i64]) -> Q {
        let l = hc_shift(self.n_plus_1, lambda);
        let s: Q = l.iter().map(|x| num::pow::pow(x.clone(), self.hc_power as usize)).sum();
        s * q(2)
    }
}

/// `l_i = λ_i + n − i (+1/2 when N+1 is odd)`.
pub fn hc_shift(n_plus_1: usize, lambda: &[i64]) -> Vec<Q> {
    let n = n_plus_1 / 2;
    let half = if n_plus_1 % 2 == 1 { q_frac(1, 2) } else { Q::zero() };
    (0..n)
        .map(|i| q(lambda.get(i).copied().unwrap_or(0) + (n - 1 - i) as i64) + &half)
        .collect()
}

fn gen(i: i32, j: i32) -> NCPolynomial {
    NCPolynomial::generator(i, j)
}

fn shifted(i: i32, j: i32, r: &Q) -> NCPolynomial {
    let mut p = gen(i, j);
    if i == j {
        p = p.add(&NCPolynomial::constant(r.clone()));
    }
    p
}

fn phi2(idx: SoIndex) -> NCPolynomial {
    let mut r = NCPolynomial::zero();
    let ind = idx.indices();
    for m in 1..=idx.rank() as i32 {
        let a = shifted(m, m, &idx.rho(m));
        r = r.add(&a.mul(&a));
        for &i in ind.iter().filter(|&&i| -m < i && i < m) {
            r = r.add(&gen(m, i).mul(&gen(i, m)).scale(&q(2)));
        }
    }
    r.scale(&q(2))
}

fn phi4_table(idx: SoIndex) -> NCPolynomial {
    let mut total = NCPolynomial::zero();
    let ind = idx.indices();
    let (two, four, four_thirds) = (q(2), q(4), q_frac(4, 3));
    for m in 1..=idx.rank() as i32 {
        let r = idx.rho(m);
        let a = shifted(m, m, &r);
        let a2 = a.mul(&a);
        let inner: Vec<i32> = ind.iter().copied().filter(|&i| -m < i && i < m).collect();
        let mut t = a2.mul(&a2);
        for &i in &inner {
            let (fmi, fim) = (gen(m, i), gen(i, m));
            for &j in &inner {
                let (fmj, fjm) = (gen(m, j), gen(j, m));
                let fij = shifted(i, j, &r);
                let fji = shifted(j, i, &r);
                t = t.add(&fmi.mul(&fim).mul(&fmj).mul(&fjm).scale(&two));
                t = t.add(&a.mul(&fmi).mul(&fij).mul(&fjm).scale(&two));
                t = t.add(&fmi.mul(&fij).mul(&fjm).mul(&a).scale(&two));
                t = t.add(&fmi.mul(&fij).mul(&fji).mul(&fim).scale(&four));
            }
            t = t.add(&fmi.mul(&gen(i, -m)).mul(&gen(-m, i)).mul(&fim).scale(&two));
            let b = fmi.mul(&fim);
            let sym = b.mul(&a2).add(&a2.mul(&b)).add(&a.mul(&fmi).mul(&fim).mul(&a));
            t = t.add(&sym.scale(&four_thirds));
        }
        total = total.add(&t);
    }
    total.scale(&two)
}

/// `Tr F^k = Σ F_{i₁i₂} F_{i₂i₃} ⋯ F_{i_ki₁}`.
pub fn trace_power(idx: SoIndex, k: usize) -> NCPolynomial {
    let ind = idx.indices();
    let mut out = NCPolynomial::zero();
    let mut word = vec![0usize; k];
    loop {
        let cyc: Vec<i32> = word.iter().map(|&w| ind[w]).collect();
        let mono: NCMonomial = (0..k).map(|p| (cyc[p], cyc[(p + 1) % k])).collect();
        if mono.iter().all(|&(i, j)| i != -j) {
            out.add_term(mono, Q::one());
        }
        let mut p = 0;
        while p < k {
            word[p] += 1;
            if word[p] < ind.len() {
                break;
            }
            word[p] = 0;
            p += 1;
        }
        if p == k {
            break;
        }
    }
    out
}

fn phi4_central(idx: SoIndex) -> NCPolynomial {
    let d = idx.n_plus_1 as i64;
    let rho4: Q = (1..=idx.rank() as i32).map(|m| num::pow::pow(idx.rho(m), 4)).sum();
    trace_power(idx, 4)
        .add(&trace_power(idx, 2).scale(&q_frac(d - 2, 2)))
        .add(&NCPolynomial::constant(rho4 * q(2)))
}

/// `Φ_2` (k = 1) or the tabulated `Φ_4` (k = 2).
pub fn build_phi(k: usize, n_plus_1: usize) -> Result<CentralElement, EnvelopingError> {
    let idx = SoIndex::new(n_plus_1)?;
    let (kind, expansion) = match k {
        1 => (CentralKind::Phi2, phi2(idx)),
        2 => (CentralKind::Phi4, phi4_table(idx)),
        _ => return Err(EnvelopingError::UnsupportedK(2 * k)),
    };
    Ok(CentralElement { kind, n_plus_1, expansion, hc_power: 2 * k as u32 })
}

/// `Φ_2` (k = 1) or the central fourth-order element (k = 2).
pub fn build_phi_central(k: usize, n_plus_1: usize) -> Result<CentralElement, EnvelopingError> {
    match k {
        1 => build_phi(1, n_plus_1),
        2 => {
            let idx = SoIndex::new(n_plus_1)?;
            Ok(CentralElement { kind: CentralKind::Phi4Central, n_plus_1, expansion: phi4_central(idx), hc_power: 4 })
        }
        _ => Err(EnvelopingError::UnsupportedK(2 * k)),
    }
}

/// The state parameter paired with process time `t`.
pub fn state_time(process_time: f64) -> f64 {
    process_time / 2.0
}

pub fn state_time_exact(process_time: &Q) -> Q {
    process_time / q(2)
}

/// `l = x + a/2 + 1/4`: `x` on `(n,−)` levels and `x + 1/2` on `(n,+)` levels.
pub fn shifted_coordinate(level: LevelIndex, x: i64) -> f64 {
    match level.a {
        Parity::Minus => x as f64,
        Parity::Plus => x as f64 + 0.5,
    }
}

/// `Σ_s l_s^{2k}` on one level of a snapshot.
pub fn shifted_moment(snap: &Snapshot, level: LevelIndex, k: u32) -> Option<f64> {
    let xs = snap.level(level)?;
    Some(xs.iter().map(|&x| shifted_coordinate(level, x).powi(2 * k as i32)).sum())
}

/// `⟨Φ_{2k}/2⟩_{t/2}` for the matrix size attached to `level`, at process time `t`.
pub fn expected_shifted_moment(k: usize, level: LevelIndex, process_time: f64) -> Result<f64, EnvelopingError> {
    let phi = build_phi_central(k, level.flat() + 1)?;
    Ok(state_f64(&phi.expansion, state_time(process_time), phi.n_plus_1)? / 2.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemigroupReport {
    pub lhs: Q,
    pub rhs: Q,
    pub difference: Q,
}

/// `⟨P_t Φ_{2k}⟩_s` against `⟨Φ_{2k}⟩_{s+t}`.
pub fn semigroup_check(k: usize, s: &Q, t: &Q, n_plus_1: usize, central: bool) -> Result<SemigroupReport, EnvelopingError> {
    let phi = if central { build_phi_central(k, n_plus_1)? } else { build_phi(k, n_plus_1)? };
    let lhs = state(&markov_apply(&phi.expansion, t, n_plus_1)?, s, n_plus_1)?;
    let rhs = state(&phi.expansion, &(s + t), n_plus_1)?;
    let difference = (&lhs - &rhs).abs();
    Ok(SemigroupReport { lhs, rhs, difference })
}

/// `⟨P_t Φ_{2k} − Φ_{2k} − c Φ_2⟩_s` at each `s`; a central increment gives a constant list.
pub fn increment_profile(
    k: usize,
    n_plus_1: usize,
    t: &Q,
    c: &Q,
    central: bool,
    s_values: &[Q],
) -> Result<Vec<Q>, EnvelopingError> {
    let build = |k| if central { build_phi_central(k, n_plus_1) } else { build_phi(k, n_plus_1) };
    let phi = build(k)?;
    let phi2 = build(1)?;
    let inc = markov_apply(&phi.expansion, t, n_plus_1)?.sub(&phi.expansion).sub(&phi2.expansion.scale(c));
    let poly = state_poly(&inc, n_plus_1)?;
    Ok(s_values.iter().map(|s| poly.eval(s)).collect())
}
