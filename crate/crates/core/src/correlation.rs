//! Multi-time correlation kernel and determinantal correlation functions.

use crate::special_fn::{
    self, c_k, e_omega, gauss_jacobi_rule, normalized_jacobi, weight_w, CharacterParam, JacobiParams, Parity,
    QuadratureRule, SpecialFnError,
};
use nalgebra::DMatrix;
use num::complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("contour radius must exceed 1, got {0}")]
    BadRadius(f64),
    #[error("quad_size and contour_points must be positive")]
    BadSize,
    #[error("E^omega is too small on the contour (|E| = {0:e})")]
    ContourTooClose(f64),
    #[error("a zero of E^omega lies inside the contour at x = {0}")]
    ZeroInside(f64),
    #[error("E^omega has a pole on [-1, 1]")]
    PoleOnInterval,
    #[error("kernel is not real: {re} + {im}i")]
    NotReal { re: f64, im: f64 },
    #[error("quadrature did not converge: doubling changed the kernel by {0:e}")]
    NoConvergence(f64),
    #[error("points {0} and {1} are not comparable")]
    NotComparable(usize, usize),
    #[error("at most {max} points are supported, got {got}")]
    TooManyPoints { max: usize, got: usize },
    #[error("single-time kernel needs equal times, got {0} and {1}")]
    TimesDiffer(f64, f64),
    #[error(transparent)]
    Special(#[from] SpecialFnError),
}

/// `ϰ = (n, a, t, s)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpaceTimePoint {
    pub n: usize,
    pub a: Parity,
    pub t: f64,
    pub s: usize,
}

impl SpaceTimePoint {
    pub fn new(n: usize, a: Parity, t: f64, s: usize) -> Self {
        SpaceTimePoint { n, a, t, s }
    }

    /// Flat level `2n − 1/2 + a`.
    pub fn flat(&self) -> usize {
        match self.a {
            Parity::Minus => 2 * self.n - 1,
            Parity::Plus => 2 * self.n,
        }
    }

    fn triple_eq(&self, o: &SpaceTimePoint) -> bool {
        self.n == o.n && self.a == o.a && self.t == o.t
    }
}

/// `p ≺ q`: level weakly increases, time weakly decreases, triples differ.
pub fn precedes(p: &SpaceTimePoint, q: &SpaceTimePoint) -> bool {
    p.flat() <= q.flat() && p.t >= q.t && !p.triple_eq(q)
}

#[derive(Debug, Clone)]
pub struct KernelConfig {
    pub omega: CharacterParam,
    pub quad_size: usize,
    pub contour_radius: f64,
    pub contour_points: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig { omega: CharacterParam::zero(), quad_size: 64, contour_radius: 2.0, contour_points: 256 }
    }
}

fn factor_rate(c: f64) -> f64 {
    c - c * c / 2.0
}

impl KernelConfig {
    pub fn new(
        omega: CharacterParam,
        quad_size: usize,
        contour_radius: f64,
        contour_points: usize,
    ) -> Result<Self, KernelError> {
        let cfg = KernelConfig { omega, quad_size, contour_radius, contour_points };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        self.omega.validate()?;
        if !(self.contour_radius > 1.0) || !self.contour_radius.is_finite() {
            return Err(KernelError::BadRadius(self.contour_radius));
        }
        if self.quad_size == 0 || self.contour_points == 0 {
            return Err(KernelError::BadSize);
        }
        // Each factor 1 − c(1 − x) vanishes at x = 1 − 1/c, which is ≤ −1 for c ∈ (0, 1/2].
        for &b in &self.omega.beta {
            let c = factor_rate(b);
            if c > 0.0 {
                let x = 1.0 - 1.0 / c;
                if x.abs() <= self.contour_radius {
                    return Err(KernelError::ZeroInside(x));
                }
            }
        }
        for &a in &self.omega.alpha {
            let c = factor_rate(a);
            if c > 0.0 && 1.0 - 1.0 / c >= -1.0 {
                return Err(KernelError::PoleOnInterval);
            }
        }
        let rho = self.contour_radius + (self.contour_radius.powi(2) - 1.0).sqrt();
        let mut min_e = f64::INFINITY;
        for m in 0..self.contour_points {
            let z = Complex64::from_polar(rho, 2.0 * PI * m as f64 / self.contour_points as f64);
            let u = (z + z.inv()) * 0.5;
            min_e = min_e.min(e_omega(&self.omega, u)?.norm());
        }
        if min_e <= 1e-8 {
            return Err(KernelError::ContourTooClose(min_e));
        }
        Ok(())
    }

    /// Gauss-Jacobi size used for a pair of sites.
    pub fn rule_size(&self, s1: usize, s2: usize) -> usize {
        self.quad_size.max((s1 + s2) / 2 + 40)
    }

    fn doubled(&self) -> KernelConfig {
        KernelConfig { quad_size: 2 * self.quad_size, contour_points: 2 * self.contour_points, ..self.clone() }
    }
}

fn cached_rule(n: usize, a: Parity) -> Result<Arc<QuadratureRule>, SpecialFnError> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, Parity), Arc<QuadratureRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(r) = cache.lock().unwrap().get(&(n, a)) {
        return Ok(r.clone());
    }
    let rule = Arc::new(gauss_jacobi_rule(n, a.value(), -0.5)?);
    cache.lock().unwrap().insert((n, a), rule.clone());
    Ok(rule)
}

/// Bernstein ellipse `u = (z + 1/z)/2`, `|z| = ρ`, with nodes `u_m` and weights `du_m`.
struct Contour {
    u: Vec<Complex64>,
    du: Vec<Complex64>,
}

impl Contour {
    fn new(cfg: &KernelConfig, s2: usize) -> Self {
        let r = cfg.contour_radius;
        let rho_max = r + (r * r - 1.0).sqrt();
        // Keep |𝒥_s(u)| ~ ρ^s bounded so the trapezoid sum does not lose digits.
        let rho = rho_max.min((1e4f64.ln() / s2.max(1) as f64).exp());
        let mut m = cfg.contour_points;
        while (m as f64) * rho.ln() < 1e17f64.ln() {
            m *= 2;
        }
        let h = 2.0 * PI / m as f64;
        let (mut u, mut du) = (Vec::with_capacity(m), Vec::with_capacity(m));
        for j in 0..m {
            let z = Complex64::from_polar(rho, h * j as f64);
            let zi = z.inv();
            u.push((z + zi) * 0.5);
            du.push((Complex64::new(1.0, 0.0) - zi * zi) * 0.5 * Complex64::i() * z * h);
        }
        Contour { u, du }
    }
}

/// Whether the single-integral term is attached: `ϰ₁` weakly after `ϰ₂` in the order.
fn indicator(p1: &SpaceTimePoint, p2: &SpaceTimePoint) -> bool {
    p1.flat() >= p2.flat() && p1.t <= p2.t
}

fn params(a: Parity) -> JacobiParams {
    JacobiParams { a }
}

fn ipow<T: special_fn::Scalar>(x: T, n: i64) -> T {
    let mut r = T::from(1.0);
    for _ in 0..n.unsigned_abs() {
        r = r * x;
    }
    if n < 0 {
        T::from(1.0) / r
    } else {
        r
    }
}

fn kernel_complex(p1: &SpaceTimePoint, p2: &SpaceTimePoint, cfg: &KernelConfig) -> Result<Complex64, KernelError> {
    let rule = cached_rule(cfg.rule_size(p1.s, p2.s), p1.a)?;
    let contour = Contour::new(cfg, p2.s);
    let j1 = params(p1.a);
    let j2 = params(p2.a);
    let one = Complex64::new(1.0, 0.0);
    let inv_2pi_i = Complex64::new(0.0, -1.0 / (2.0 * PI));
    let mut g = Vec::with_capacity(contour.u.len());
    for (&u, &du) in contour.u.iter().zip(&contour.du) {
        let val = normalized_jacobi(p2.s, j2, u) * (-(u - one) * p2.t).exp()
            / (e_omega(&cfg.omega, u)? * ipow(u - one, p2.n as i64));
        g.push(val * du * inv_2pi_i);
    }
    let pref = weight_w(p1.s, j1) as f64 / PI;
    let ind = indicator(p1, p2);
    let mut total = Complex64::new(0.0, 0.0);
    for (&y, &w) in rule.nodes.iter().zip(&rule.weights) {
        let inner: Complex64 = g.iter().zip(&contour.u).map(|(&gm, &um)| gm / (y - um)).sum();
        let ey = e_omega(&cfg.omega, y)?;
        let js1 = normalized_jacobi(p1.s, j1, y);
        let mut term = inner * (js1 * ey * (p1.t * (y - 1.0)).exp() * ipow(y - 1.0, p1.n as i64));
        if ind {
            term += js1
                * normalized_jacobi(p2.s, j2, y)
                * ((p1.t - p2.t) * (y - 1.0)).exp()
                * ipow(y - 1.0, p1.n as i64 - p2.n as i64);
        }
        total += term * w;
    }
    Ok(total * pref)
}

/// `K(ϰ₁, ϰ₂)`; returns the real part after checking the imaginary part is negligible.
pub fn kernel(p1: &SpaceTimePoint, p2: &SpaceTimePoint, cfg: &KernelConfig) -> Result<f64, KernelError> {
    let v = kernel_complex(p1, p2, cfg)?;
    if v.im.abs() >= 1e-8 * (1.0 + v.re.abs()) {
        return Err(KernelError::NotReal { re: v.re, im: v.im });
    }
    Ok(v.re)
}

/// Like [`kernel`], but also evaluates with doubled rule sizes and fails if the two differ by > 1e−7.
pub fn kernel_checked(p1: &SpaceTimePoint, p2: &SpaceTimePoint, cfg: &KernelConfig) -> Result<f64, KernelError> {
    let a = kernel(p1, p2, cfg)?;
    let b = kernel(p1, p2, &cfg.doubled())?;
    if (a - b).abs() > 1e-7 {
        return Err(KernelError::NoConvergence((a - b).abs()));
    }
    Ok(a)
}

/// Taylor coefficients at `u = 1` of `𝒥_s(u) / (E^ω(u) e^{t(u−1)})`, truncated to `len` terms.
fn quotient_series(s: usize, a: Parity, omega: &CharacterParam, len: usize) -> Vec<f64> {
    let (af, bf) = (a.value(), -0.5);
    let sf = s as f64;
    // J_s = Σ_m c_m ((u−1)/2)^m with c_0 = binom(s+a, s).
    let mut poly = vec![0.0; len.max(s + 1)];
    let mut c = (1..=s).fold(1.0, |acc, j| acc * (af + j as f64) / j as f64);
    for m in 0..=s {
        poly[m] = c / 2f64.powi(m as i32) / c_k(s);
        let mf = m as f64;
        c *= (sf - mf) * (af + bf + sf + mf + 1.0) / ((mf + 1.0) * (af + mf + 1.0));
    }
    poly.truncate(len);
    let mul_linear = |v: &mut Vec<f64>, c: f64| {
        for i in (1..v.len()).rev() {
            v[i] += c * v[i - 1];
        }
    };
    let div_linear = |v: &mut Vec<f64>, c: f64| {
        for i in 1..v.len() {
            v[i] -= c * v[i - 1];
        }
    };
    // 1/E^ω = e^{−γ(u−1)} Π_α (1 + c_α(u−1)) / Π_β (1 + c_β(u−1)).
    let gamma = omega.gamma();
    let mut e = vec![0.0; len];
    let mut term = 1.0;
    for (j, slot) in e.iter_mut().enumerate() {
        *slot = term;
        term *= -gamma / (j + 1) as f64;
    }
    for &al in &omega.alpha {
        mul_linear(&mut e, factor_rate(al));
    }
    for &be in &omega.beta {
        div_linear(&mut e, factor_rate(be));
    }
    let mut out = vec![0.0; len];
    for (i, p) in poly.iter().enumerate() {
        if *p == 0.0 {
            continue;
        }
        for (j, ej) in e.iter().enumerate().take(len - i) {
            out[i + j] += p * ej;
        }
    }
    out
}

/// Equal-time kernel by residues at `u = y` and `u = 1`, with time folded into the character.
pub fn single_time_kernel(p1: &SpaceTimePoint, p2: &SpaceTimePoint, cfg: &KernelConfig) -> Result<f64, KernelError> {
    if p1.t != p2.t {
        return Err(KernelError::TimesDiffer(p1.t, p2.t));
    }
    let omega = cfg.omega.shifted(p1.t);
    let rule = cached_rule(cfg.rule_size(p1.s, p2.s), p1.a)?;
    let extra = if omega.beta.is_empty() { 0 } else { 600 };
    let len = p2.s + p2.n + 80 + (8.0 * omega.gamma().abs()).ceil() as usize + extra;
    let g = quotient_series(p2.s, p2.a, &omega, len);
    let (n1, n2) = (p1.n as i32, p2.n as i32);
    let j1 = params(p1.a);
    let pref = weight_w(p1.s, j1) as f64 / PI;
    let above = p1.flat() >= p2.flat();
    let mut total = 0.0;
    for (&y, &w) in rule.nodes.iter().zip(&rule.weights) {
        let d = y - 1.0;
        let series: f64 = if above {
            (0..p2.n).map(|j| g[j] * d.powi(n1 - n2 + j as i32)).sum()
        } else {
            // Horner on the tail Σ_{j≥n₂} g_j d^{j−n₂}.
            -g[p2.n..].iter().rev().fold(0.0, |acc, &gj| acc * d + gj) * d.powi(n1)
        };
        total += w * normalized_jacobi(p1.s, j1, y) * e_omega(&omega, y)? * series;
    }
    Ok(pref * total)
}

pub const MAX_CORR_POINTS: usize = 12;

/// `ρ(ϰ₁, …, ϰ_M) = det[K(ϰ_i, ϰ_j)]` for a space-like family.
pub fn corr_fn(points: &[SpaceTimePoint], cfg: &KernelConfig) -> Result<f64, KernelError> {
    if points.len() > MAX_CORR_POINTS {
        return Err(KernelError::TooManyPoints { max: MAX_CORR_POINTS, got: points.len() });
    }
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let (p, q) = (&points[i], &points[j]);
            if !p.triple_eq(q) && !precedes(p, q) && !precedes(q, p) {
                return Err(KernelError::NotComparable(i, j));
            }
        }
    }
    let m = points.len();
    let mut k = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            k[(i, j)] = kernel(&points[i], &points[j], cfg)?;
        }
    }
    Ok(k.lu().determinant())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(n: usize, a: Parity, t: f64, s: usize) -> SpaceTimePoint {
        SpaceTimePoint::new(n, a, t, s)
    }
    use Parity::{Minus as M, Plus as P};

    #[test]
    fn order_examples() {
        let p = pt(1, M, 1.0, 0);
        let q = pt(2, M, 0.5, 0);
        assert!(precedes(&p, &q));
        assert!(!precedes(&q, &p));
        assert!(!precedes(&p, &p));
        // the site does not enter the order
        assert!(!precedes(&p, &pt(1, M, 1.0, 3)));
    }

    #[test]
    fn config_validation() {
        assert!(KernelConfig::new(CharacterParam::zero(), 64, 1.0, 256).is_err());
        assert!(KernelConfig::new(CharacterParam::zero(), 0, 2.0, 256).is_err());
        assert!(KernelConfig::new(CharacterParam::zero(), 64, 2.0, 256).is_ok());
        // β = 1 puts a zero of E at x = −1.
        let w = CharacterParam::new(vec![], vec![1.0], 1.0).unwrap();
        assert!(matches!(KernelConfig::new(w, 64, 2.0, 256), Err(KernelError::ZeroInside(_))));
        let w = CharacterParam::new(vec![], vec![0.2], 1.0).unwrap();
        assert!(KernelConfig::new(w, 64, 2.0, 256).is_ok());
    }

    #[test]
    fn packed_at_time_zero() {
        let cfg = KernelConfig::default();
        for (n, a) in [(1, M), (1, P), (2, M), (2, P), (3, M)] {
            for s in 0..8 {
                let p = pt(n, a, 0.0, s);
                let r = kernel(&p, &p, &cfg).unwrap();
                let expect = if s < n { 1.0 } else { 0.0 };
                assert!((r - expect).abs() < 1e-8, "{n} {a:?} {s}: {r}");
            }
        }
        let pts = [pt(2, M, 0.0, 0), pt(2, M, 0.0, 1)];
        assert!((corr_fn(&pts, &cfg).unwrap() - 1.0).abs() < 1e-8);
        assert!((corr_fn(&pts[..1], &cfg).unwrap() - kernel(&pts[0], &pts[0], &cfg).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn single_time_agrees() {
        let cfg = KernelConfig::default();
        let mut worst: f64 = 0.0;
        for t in [0.5, 1.0, 2.0] {
            for (n1, a1) in [(1, M), (2, P), (3, M)] {
                for (n2, a2) in [(1, P), (2, M), (3, P)] {
                    for (s1, s2) in [(0, 0), (3, 5), (8, 1), (6, 8)] {
                        let p = pt(n1, a1, t, s1);
                        let q = pt(n2, a2, t, s2);
                        let d = (kernel(&p, &q, &cfg).unwrap() - single_time_kernel(&p, &q, &cfg).unwrap()).abs();
                        worst = worst.max(d);
                    }
                }
            }
        }
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn single_time_with_character() {
        let w = CharacterParam::new(vec![0.4], vec![0.3], 1.5).unwrap();
        let cfg = KernelConfig::new(w, 64, 2.0, 256).unwrap();
        for (p, q) in [(pt(1, M, 0.5, 2), pt(1, M, 0.5, 2)), (pt(2, P, 1.0, 1), pt(1, M, 1.0, 3))] {
            let a = kernel(&p, &q, &cfg).unwrap();
            let b = single_time_kernel(&p, &q, &cfg).unwrap();
            assert!((a - b).abs() < 1e-9, "{a} {b}");
        }
    }

    #[test]
    fn sum_rule_small() {
        let cfg = KernelConfig::default();
        let total: f64 = (0..=120).map(|s| kernel(&pt(2, P, 0.7, s), &pt(2, P, 0.7, s), &cfg).unwrap()).sum();
        assert!((total - 2.0).abs() < 1e-6, "{total}");
    }

    #[test]
    fn doubling_is_stable() {
        let cfg = KernelConfig::default();
        for (p, q) in [(pt(1, M, 1.0, 2), pt(2, M, 0.5, 3)), (pt(2, P, 0.4, 0), pt(2, P, 0.4, 5))] {
            kernel_checked(&p, &q, &cfg).unwrap();
        }
    }

    #[test]
    fn rejects_non_comparable() {
        let cfg = KernelConfig::default();
        // higher level at the later time is time-like
        let pts = [pt(1, M, 0.5, 0), pt(2, M, 1.0, 0)];
        assert_eq!(corr_fn(&pts, &cfg), Err(KernelError::NotComparable(0, 1)));
        let many = vec![pt(1, M, 0.5, 0); 13];
        assert!(matches!(corr_fn(&many, &cfg), Err(KernelError::TooManyPoints { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn probabilities_bounded(n in 1usize..3, plus in any::<bool>(), t in 0.1f64..1.5, s in 0usize..6, s2 in 0usize..6, dt in 0.0f64..1.0) {
            let cfg = KernelConfig::default();
            let a = if plus { P } else { M };
            let p = pt(n, a, t, s);
            let q = pt(n + 1, M, (t - dt).max(0.0), s2);
            let r1 = corr_fn(&[p], &cfg).unwrap();
            let r1q = corr_fn(&[q], &cfg).unwrap();
            let r2 = corr_fn(&[p, q], &cfg).unwrap();
            prop_assert!((-1e-6..=1.0 + 1e-6).contains(&r1));
            prop_assert!((-1e-6..=1.0 + 1e-6).contains(&r2));
            prop_assert!(r2 <= r1.min(r1q) + 1e-6);
        }
    }
}
