//! Gaussian covariances by Laurent residues, the `c_{k,l}` system, and the limit shape.

use crate::exact::{q, q_frac, Q};
use crate::special_fn::gauss_jacobi_rule;
use num::complex::Complex64;
use num::Zero;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AsymptoticsError {
    #[error("precondition violated: {0}")]
    Precondition(&'static str),
    #[error("coefficient system is singular (eta2 = 0)")]
    Singular,
    #[error("root finding did not converge")]
    RootFinding,
    #[error("(nu, eta, tau) = ({0}, {1}, {2}) is outside the liquid region")]
    OutsideRegion(f64, f64, f64),
    #[error("Green function is singular on the diagonal")]
    Diagonal,
}

/// Finite Laurent polynomial with exact coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LaurentPoly {
    pub coeffs: BTreeMap<i32, Q>,
}

impl LaurentPoly {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (i32, Q)>) -> Self {
        let mut p = LaurentPoly::default();
        for (e, c) in pairs {
            p.add_term(e, c);
        }
        p
    }

    pub fn one() -> Self {
        LaurentPoly::from_pairs([(0, q(1))])
    }

    pub fn add_term(&mut self, e: i32, c: Q) {
        if c.is_zero() {
            return;
        }
        let slot = self.coeffs.entry(e).or_insert_with(Q::zero);
        *slot += c;
        if slot.is_zero() {
            self.coeffs.remove(&e);
        }
    }

    /// `p[v^e]`.
    pub fn coeff(&self, e: i32) -> Q {
        self.coeffs.get(&e).cloned().unwrap_or_else(Q::zero)
    }

    pub fn add(&self, o: &LaurentPoly) -> LaurentPoly {
        let mut r = self.clone();
        for (&e, c) in &o.coeffs {
            r.add_term(e, c.clone());
        }
        r
    }

    pub fn mul(&self, o: &LaurentPoly) -> LaurentPoly {
        let mut r = LaurentPoly::default();
        for (&a, ca) in &self.coeffs {
            for (&b, cb) in &o.coeffs {
                r.add_term(a + b, ca * cb);
            }
        }
        r
    }

    pub fn pow(&self, k: u32) -> LaurentPoly {
        let mut out = LaurentPoly::one();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                out = out.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        out
    }

    pub fn min_exp(&self) -> Option<i32> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_exp(&self) -> Option<i32> {
        self.coeffs.keys().next_back().copied()
    }
}

/// `((v+2)(η/2+τv)²/v)^k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowthSymbol {
    pub eta: Q,
    pub tau: Q,
    pub k: u32,
}

impl GrowthSymbol {
    pub fn expand(&self) -> LaurentPoly {
        growth_expand(&self.eta, &self.tau, self.k)
    }
}

pub fn growth_expand(eta: &Q, tau: &Q, k: u32) -> LaurentPoly {
    let e2 = eta * eta;
    let base = LaurentPoly::from_pairs([
        (-1, &e2 / q(2)),
        (0, &e2 / q(4) + q(2) * eta * tau),
        (1, q(2) * tau * tau + eta * tau),
        (2, tau * tau),
    ]);
    base.pow(k)
}

/// `(2πi)^{−2} ∬_{|v|>|u|} f(v) g(u) (v−u)^{−2} = Σ_{m≥1} m f[v^m] g[u^{−m}]`.
pub fn residue_outer(f: &LaurentPoly, g: &LaurentPoly) -> Q {
    let top = f.max_exp().unwrap_or(0);
    (1..=top.max(0)).map(|m| q(m as i64) * f.coeff(m) * g.coeff(-m)).sum()
}

/// `(2πi)^{−2} ∬_{|v|<|u|} f(v) g(u) (v−u)^{−2} = Σ_{m≥1} m f[v^{−m}] g[u^m]`.
pub fn residue_inner(f: &LaurentPoly, g: &LaurentPoly) -> Q {
    let bottom = f.min_exp().unwrap_or(0);
    (1..=(-bottom).max(0)).map(|m| q(m as i64) * f.coeff(-m) * g.coeff(m)).sum()
}

pub fn cov_spacelike(ki: u32, kj: u32, eta_i: &Q, tau_i: &Q, eta_j: &Q, tau_j: &Q) -> Result<Q, AsymptoticsError> {
    if eta_i < eta_j || tau_i > tau_j {
        return Err(AsymptoticsError::Precondition("space-like branch needs eta_i >= eta_j and tau_i <= tau_j"));
    }
    let f = growth_expand(eta_i, tau_i, ki);
    let g = growth_expand(eta_j, tau_j, kj);
    Ok(residue_outer(&f, &g))
}

/// `c_{k,1..k}` solving `Σ_l c_{k,l} h_{τ1}^l[v^r] = h_{τ2}^k[v^r]` for `r = −1..−k`.
pub fn solve_ckl(k: u32, tau2: &Q, tau1: &Q, eta2: &Q) -> Result<Vec<Q>, AsymptoticsError> {
    if k == 0 {
        return Err(AsymptoticsError::Precondition("k >= 1"));
    }
    if eta2.is_zero() {
        return Err(AsymptoticsError::Singular);
    }
    let powers: Vec<LaurentPoly> = (1..=k).map(|l| growth_expand(eta2, tau1, l)).collect();
    let rhs = growth_expand(eta2, tau2, k);
    let mut c = vec![Q::zero(); k as usize];
    for j in (1..=k as i32).rev() {
        let mut acc = rhs.coeff(-j);
        for l in (j + 1)..=k as i32 {
            acc -= &c[l as usize - 1] * powers[l as usize - 1].coeff(-j);
        }
        let diag = powers[j as usize - 1].coeff(-j);
        if diag.is_zero() {
            return Err(AsymptoticsError::Singular);
        }
        c[j as usize - 1] = acc / diag;
    }
    Ok(c)
}

pub fn cov_timelike(ki: u32, kj: u32, eta_i: &Q, tau_i: &Q, eta_j: &Q, tau_j: &Q) -> Result<Q, AsymptoticsError> {
    if eta_i >= eta_j || tau_i > tau_j {
        return Err(AsymptoticsError::Precondition("time-like branch needs eta_i < eta_j and tau_i <= tau_j"));
    }
    let c = solve_ckl(kj, tau_j, tau_i, eta_j)?;
    let f = growth_expand(eta_i, tau_i, ki);
    Ok(c.iter()
        .enumerate()
        .map(|(l, cl)| cl * residue_inner(&f, &growth_expand(eta_j, tau_i, l as u32 + 1)))
        .sum())
}

/// Either branch, chosen from the `η` ordering.
pub fn covariance(ki: u32, kj: u32, eta_i: &Q, tau_i: &Q, eta_j: &Q, tau_j: &Q) -> Result<(Q, Branch), AsymptoticsError> {
    if eta_i >= eta_j {
        Ok((cov_spacelike(ki, kj, eta_i, tau_i, eta_j, tau_j)?, Branch::SpaceLike))
    } else {
        Ok((cov_timelike(ki, kj, eta_i, tau_i, eta_j, tau_j)?, Branch::TimeLike))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    SpaceLike,
    TimeLike,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::SpaceLike => "spacelike",
            Branch::TimeLike => "timelike",
        }
    }
}

/// Result of fitting `cov_timelike(k_i,k_j) ≈ C₁ I(k_i,k_j) + C₂ R(k_i) R(k_j)` on `(1,1)` and `(2,1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WishartFit {
    pub c1: Q,
    pub c2: Q,
    /// `(k_i, k_j, cov − fit)` on pairs outside the fitting set.
    pub misfits: Vec<(u32, u32, Q)>,
}

fn wishart_model_terms(ki: u32, kj: u32, eta_i: &Q, tau_i: &Q, eta_j: &Q, tau_j: &Q) -> (Q, Q) {
    let f = growth_expand(eta_i, tau_i, ki);
    let g = growth_expand(eta_j, tau_j, kj);
    (residue_inner(&f, &g), f.coeff(-1) * g.coeff(-1))
}

pub fn wishart_fit(eta_i: &Q, tau_i: &Q, eta_j: &Q, tau_j: &Q, probes: &[(u32, u32)]) -> Result<WishartFit, AsymptoticsError> {
    let row = |ki: u32, kj: u32| -> Result<(Q, Q, Q), AsymptoticsError> {
        let (a, b) = wishart_model_terms(ki, kj, eta_i, tau_i, eta_j, tau_j);
        Ok((a, b, cov_timelike(ki, kj, eta_i, tau_i, eta_j, tau_j)?))
    };
    let (a1, b1, y1) = row(1, 1)?;
    let (a2, b2, y2) = row(2, 1)?;
    let det = &a1 * &b2 - &a2 * &b1;
    if det.is_zero() {
        return Err(AsymptoticsError::Singular);
    }
    let c1 = (&y1 * &b2 - &y2 * &b1) / &det;
    let c2 = (&a1 * &y2 - &a2 * &y1) / &det;
    let mut misfits = Vec::new();
    for &(ki, kj) in probes {
        let (a, b, y) = row(ki, kj)?;
        misfits.push((ki, kj, y - &c1 * a - &c2 * b));
    }
    Ok(WishartFit { c1, c2, misfits })
}

/// Critical point of `G(ν, η, τ; z)` with its residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitShapePoint {
    pub nu: f64,
    pub eta: f64,
    pub tau: f64,
    pub z0: Complex64,
    pub residual: f64,
    pub valid: bool,
}

/// `G(ν, η, τ; z) = τ(z + 1/z)/2 + η log((z + 1/z)/2 − 1) − ν log z`.
pub fn g_fn(nu: f64, eta: f64, tau: f64, z: Complex64) -> Complex64 {
    let j = (z + z.inv()) * 0.5;
    j * tau + (j - 1.0).ln() * eta - z.ln() * nu
}

pub fn g_prime(nu: f64, eta: f64, tau: f64, z: Complex64) -> Complex64 {
    let w = Complex64::new(1.0, 0.0) - z.inv() * z.inv();
    w * (tau / 2.0) + w * eta / (z + z.inv() - 2.0) - z.inv() * nu
}

fn poly_eval(c: &[f64], z: Complex64) -> Complex64 {
    c.iter().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

/// All roots of a real polynomial (leading coefficient first) by Durand–Kerner.
pub fn poly_roots(coeffs: &[f64]) -> Result<Vec<Complex64>, AsymptoticsError> {
    let deg = coeffs.len() - 1;
    let lead = coeffs[0];
    let c: Vec<f64> = coeffs.iter().map(|x| x / lead).collect();
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..deg).map(|i| seed.powu(i as u32)).collect();
    for _ in 0..2000 {
        let mut shift: f64 = 0.0;
        for i in 0..deg {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..deg {
                if i != j {
                    den *= z[i] - z[j];
                }
            }
            let step = poly_eval(&c, z[i]) / den;
            z[i] -= step;
            shift = shift.max(step.norm() / z[i].norm().max(1.0));
        }
        if shift < 1e-15 {
            return Ok(z);
        }
    }
    let converged = z.iter().all(|&r| poly_eval(&c, r).norm() < 1e-12 * (1.0 + r.norm().powi(deg as i32)));
    if converged {
        Ok(z)
    } else {
        Err(AsymptoticsError::RootFinding)
    }
}

/// The numerator of `G′(z) = 0` after clearing denominators.
pub fn critical_polynomial(nu: f64, eta: f64, tau: f64) -> [f64; 4] {
    [tau, -tau + 2.0 * eta - 2.0 * nu, -tau + 2.0 * eta + 2.0 * nu, tau]
}

pub fn critical_point(nu: f64, eta: f64, tau: f64) -> Result<LimitShapePoint, AsymptoticsError> {
    if !(nu > 0.0 && eta > 0.0 && tau > 0.0) {
        return Err(AsymptoticsError::Precondition("nu, eta, tau > 0"));
    }
    let roots = poly_roots(&critical_polynomial(nu, eta, tau))?;
    let picks: Vec<Complex64> = roots.into_iter().filter(|z| z.im > 1e-9 && z.norm() > 1.0 + 1e-9).collect();
    let (z0, valid) = match picks.as_slice() {
        [z] => {
            // Newton polish on G′.
            let mut z = *z;
            for _ in 0..3 {
                let p = critical_polynomial(nu, eta, tau);
                let d = [3.0 * p[0], 2.0 * p[1], p[2]];
                let dz = poly_eval(&d, z);
                if dz.norm() > 0.0 {
                    z -= poly_eval(&p, z) / dz;
                }
            }
            (z, true)
        }
        _ => (Complex64::new(f64::NAN, f64::NAN), false),
    };
    let residual = if valid { g_prime(nu, eta, tau, z0).norm() } else { f64::NAN };
    Ok(LimitShapePoint { nu, eta, tau, z0, residual, valid })
}

/// `(l, r)` bounding the liquid region in `ν` for level parameter `η`.
pub fn region_bounds(eta: f64, tau: f64) -> (f64, f64) {
    let s = (1.0 + 4.0 * eta / tau).powf(1.5);
    let base = eta * eta + 5.0 * eta * tau - tau * tau / 2.0;
    let r = (base + tau * tau / 2.0 * s).sqrt();
    let l = if eta / tau <= 2.0 { 0.0 } else { (base - tau * tau / 2.0 * s).max(0.0).sqrt() };
    (l, r)
}

/// `h = Im G(ν, η/2, τ; z₀)/π` inside the liquid region.
pub fn limit_height(nu: f64, eta: f64, tau: f64) -> Result<f64, AsymptoticsError> {
    let e = eta / 2.0;
    let cp = critical_point(nu, e, tau)?;
    if !cp.valid {
        return Err(AsymptoticsError::OutsideRegion(nu, eta, tau));
    }
    Ok(g_fn(nu, e, tau, cp.z0).im / PI)
}

/// Height profile for all `ν ≥ 0`: packed `η/2 − ν` below `l`, tilted inside, `0` beyond `r`.
pub fn limit_profile(nu: f64, eta: f64, tau: f64) -> f64 {
    let e = eta / 2.0;
    let (l, r) = region_bounds(e, tau);
    if nu >= r {
        return 0.0;
    }
    if nu <= l {
        return (e - nu).max(0.0);
    }
    match limit_height(nu, eta, tau) {
        Ok(h) => h,
        Err(_) if nu - l < r - nu => (e - nu).max(0.0),
        Err(_) => 0.0,
    }
}

/// `(1/√π)(2k∫_l^r (x−η/2)^{2k−1} h dx − 2k∫_0^l (x−η/2)^{2k} dx + (η/2)^{2k+1})`.
pub fn mean_moment_limit(k: u32, eta: f64, tau: f64) -> Result<f64, AsymptoticsError> {
    if !(eta > 0.0 && tau > 0.0) || k == 0 {
        return Err(AsymptoticsError::Precondition("k >= 1 and eta, tau > 0"));
    }
    let e = eta / 2.0;
    let (l, r) = region_bounds(e, tau);
    let kk = 2 * k as i32;
    // x = l + (r−l)(1 − cos φ)/2 grades the mesh toward both square-root edges.
    let rule = gauss_jacobi_rule(400, 0.0, 0.0).map_err(|_| AsymptoticsError::RootFinding)?;
    let liquid = rule.integrate(|s| {
        let phi = (s + 1.0) * PI / 2.0;
        let x = l + (r - l) * (1.0 - phi.cos()) / 2.0;
        let jac = (r - l) * phi.sin() / 2.0 * PI / 2.0;
        (x - e).powi(kk - 1) * limit_profile(x, eta, tau) * jac
    });
    let frozen = ((l - e).powi(kk + 1) + e.powi(kk + 1)) / (kk + 1) as f64;
    Ok((kk as f64 * liquid - kk as f64 * frozen + e.powi(kk + 1)) / PI.sqrt())
}

/// `𝒢(z, w) = (1/2π) log|(J(z) − J(w̄)) / (J(z) − J(w))|` with `J(z) = z + 1/z`.
pub fn gff_green(z: Complex64, w: Complex64) -> Result<f64, AsymptoticsError> {
    if !(z.im > 0.0 && w.im > 0.0) {
        return Err(AsymptoticsError::Precondition("Im z, Im w > 0"));
    }
    if (z - w).norm() < 1e-12 {
        return Err(AsymptoticsError::Diagonal);
    }
    let j = |x: Complex64| x + x.inv();
    Ok(((j(z) - j(w.conj())) / (j(z) - j(w))).norm().ln() / (2.0 * PI))
}

/// Rational sample in `[lo, hi]` with denominators up to `den`.
pub fn rational_in(rng: &mut impl rand::Rng, lo: i64, hi: i64, den: i64) -> Q {
    let d = rng.gen_range(1..=den);
    let n = rng.gen_range(lo * d..=hi * d);
    q_frac(n, d)
}



#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn rq(n: i64, d: i64) -> Q {
        q_frac(n, d)
    }

    // Naive dense convolution on shifted coefficient vectors.
    fn naive_pow(base: &[(i32, Q)], k: u32) -> BTreeMap<i32, Q> {
        let mut out: BTreeMap<i32, Q> = BTreeMap::from([(0, q(1))]);
        for _ in 0..k {
            let mut next: BTreeMap<i32, Q> = BTreeMap::new();
            for (a, ca) in &out {
                for (b, cb) in base {
                    *next.entry(a + b).or_insert_with(Q::zero) += ca * cb;
                }
            }
            out = next.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        }
        out
    }

    #[test]
    fn base_expansion() {
        let (eta, tau) = (rq(3, 2), rq(2, 5));
        let p = growth_expand(&eta, &tau, 1);
        assert_eq!(p.coeff(-1), &eta * &eta / q(2));
        assert_eq!(p.coeff(0), &eta * &eta / q(4) + q(2) * &eta * &tau);
        assert_eq!(p.coeff(1), q(2) * &tau * &tau + &eta * &tau);
        assert_eq!(p.coeff(2), &tau * &tau);
        assert_eq!(growth_expand(&q(0), &tau, 1).coeff(2), &tau * &tau);
        let base: Vec<(i32, Q)> = p.coeffs.iter().map(|(e, c)| (*e, c.clone())).collect();
        for k in 2..5 {
            let got = growth_expand(&eta, &tau, k);
            assert_eq!(got.coeffs, naive_pow(&base, k));
            assert!(got.min_exp().unwrap() >= -(k as i32) && got.max_exp().unwrap() <= 2 * k as i32);
        }
    }

    #[test]
    fn spacelike_closed_form() {
        let (ei, ti, ej, tj) = (rq(3, 1), rq(1, 2), rq(2, 1), rq(3, 4));
        let v = cov_spacelike(1, 1, &ei, &ti, &ej, &tj).unwrap();
        assert_eq!(v, &ti * &ti * &ej * &ej + q_frac(1, 2) * &ti * &ei * &ej * &ej);
        assert_eq!(cov_spacelike(1, 1, &ei, &ti, &q(0), &tj).unwrap(), Q::zero());
        // k_i = 2, k_j = 1: only m = 1 survives
        let f2 = growth_expand(&ei, &ti, 2);
        let expect = f2.coeff(1) * (&ej * &ej / q(2));
        assert_eq!(cov_spacelike(2, 1, &ei, &ti, &ej, &tj).unwrap(), expect);
        assert!(cov_spacelike(1, 1, &ej, &ti, &ei, &tj).is_err());
    }

    #[test]
    fn ckl_examples() {
        let (t2, t1, e2) = (rq(5, 3), rq(1, 2), rq(7, 4));
        let c2 = solve_ckl(2, &t2, &t1, &e2).unwrap();
        assert_eq!(c2[1], q(1));
        assert_eq!(c2[0], q(4) * &e2 * (&t2 - &t1));
        let c3 = solve_ckl(3, &t2, &t1, &e2).unwrap();
        let e = &e2;
        let printed = -q_frac(3, 2)
            * (e * e * e * &t1 - q(6) * e * e * &t1 * &t1 - e * e * e * &t2 + q(16) * e * e * &t1 * &t2
                - q(10) * e * e * &t2 * &t2);
        assert_eq!(c3[0], printed);
        assert_eq!(c3[2], q(1));
        for k in 1..=6 {
            let c = solve_ckl(k, &t1, &t1, &e2).unwrap();
            for (l, v) in c.iter().enumerate() {
                assert_eq!(*v, if l + 1 == k as usize { q(1) } else { q(0) });
            }
            assert_eq!(*solve_ckl(k, &t2, &t1, &e2).unwrap().last().unwrap(), q(1));
        }
        assert_eq!(solve_ckl(2, &t2, &t1, &q(0)), Err(AsymptoticsError::Singular));
    }

    #[test]
    fn timelike_examples() {
        let (ei, ej, tau) = (rq(1, 3), rq(5, 4), rq(2, 3));
        let v = cov_timelike(1, 1, &ei, &tau, &ej, &tau).unwrap();
        assert_eq!(v, &tau * &tau * &ei * &ei + q_frac(1, 2) * &tau * &ej * &ei * &ei);
        assert_eq!(cov_timelike(2, 3, &q(0), &tau, &ej, &q(1)).unwrap(), Q::zero());
        assert!(cov_timelike(1, 1, &ej, &tau, &ei, &tau).is_err());
    }

    #[test]
    fn equal_time_symmetry() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let ei = rational_in(&mut rng, 0, 2, 7);
            let ej = &ei + rational_in(&mut rng, 0, 2, 7) + q_frac(1, 9);
            let tau = rational_in(&mut rng, 0, 2, 5) + q_frac(1, 11);
            for (ki, kj) in [(1, 1), (2, 1), (1, 2), (3, 2), (2, 3)] {
                let tl = cov_timelike(ki, kj, &ei, &tau, &ej, &tau).unwrap();
                let sl = cov_spacelike(kj, ki, &ej, &tau, &ei, &tau).unwrap();
                assert_eq!(tl, sl, "{ki} {kj}");
            }
        }
    }

    #[test]
    fn wishart_constants() {
        let (ei, ti, ej, tj) = (rq(1, 2), rq(1, 3), rq(3, 2), rq(5, 4));
        let fit = wishart_fit(&ei, &ti, &ej, &tj, &[(2, 2)]).unwrap();
        assert_eq!(fit.c1, &ti * &ti / (&tj * &tj));
        assert_eq!(fit.c2, q(2) * &ti * (&tj - &ti) / (&ej * &tj));
        assert!(!fit.misfits[0].2.is_zero());
    }

    #[test]
    fn critical_points_and_bounds() {
        let (eta, tau) = (0.5, 1.0);
        let (l, r) = region_bounds(eta, tau);
        assert_eq!(l, 0.0);
        for frac in [0.1, 0.4, 0.7, 0.95] {
            let p = critical_point(frac * r, eta, tau).unwrap();
            assert!(p.valid && p.residual < 1e-10 && p.z0.im > 0.0 && p.z0.norm() > 1.0);
        }
        assert!(!critical_point(1.01 * r, eta, tau).unwrap().valid);
        assert!(!critical_point(r * 1.5, eta, tau).unwrap().valid);
        // l > 0 once η/τ > 2, with a frozen interval below.
        let (l, r) = region_bounds(3.0, 1.0);
        assert!(l > 0.0 && r > l);
        assert!(!critical_point(0.9 * l, 3.0, 1.0).unwrap().valid);
        assert!(critical_point(0.5 * (l + r), 3.0, 1.0).unwrap().valid);
        assert_eq!(region_bounds(2.0, 1.0).0, 0.0);
        let near = region_bounds(2.0 + 1e-12, 1.0).0;
        assert!(near < 1e-5);
        for &(e, t) in &[(0.1, 1.0), (1.0, 1.0), (2.5, 1.0), (4.0, 0.5), (0.3, 2.0)] {
            let (l, r) = region_bounds(e, t);
            assert!(r > l);
        }
    }

    #[test]
    fn bounds_match_root_classification() {
        // Scan ν and find where a qualifying root exists.
        for &(e, t) in &[(0.5, 1.0), (1.0, 1.0), (3.0, 1.0)] {
            let (l, r) = region_bounds(e, t);
            let inside = |nu: f64| critical_point(nu, e, t).map(|p| p.valid).unwrap_or(false);
            assert!(inside(r * (1.0 - 1e-4)) && !inside(r * (1.0 + 1e-4)));
            if l > 0.0 {
                assert!(inside(l * (1.0 + 1e-4)) && !inside(l * (1.0 - 1e-4)));
            }
        }
    }

    #[test]
    fn heights() {
        let (eta, tau) = (1.0, 1.0);
        let (_, r) = region_bounds(eta / 2.0, tau);
        let h_edge = limit_height(r * (1.0 - 1e-7), eta, tau).unwrap();
        assert!(h_edge.abs() < 1e-3, "{h_edge}");
        for frac in [0.05, 0.3, 0.6, 0.9] {
            let h = limit_height(frac * r, eta, tau).unwrap();
            assert!(h > 0.0 && h < eta / 2.0);
        }
        // continuity with the frozen region at l > 0
        let (eta, tau) = (6.0, 1.0);
        let (l, _) = region_bounds(eta / 2.0, tau);
        let h = limit_height(l * (1.0 + 1e-7), eta, tau).unwrap();
        assert!((h - (eta / 2.0 - l)).abs() < 1e-3, "{h} vs {}", eta / 2.0 - l);
        assert!(limit_height(0.5 * l, eta, tau).is_err());
    }

    #[test]
    fn mean_moments_bounded_below() {
        for &(k, eta, tau) in &[(1, 1.0, 1.0), (2, 1.0, 0.5), (1, 6.0, 1.0), (2, 6.0, 1.0), (3, 2.0, 1.0)] {
            let v = mean_moment_limit(k, eta, tau).unwrap();
            let e = eta / 2.0;
            let (l, _) = region_bounds(e, tau);
            let kk = 2 * k as i32;
            let lower = (e.powi(kk + 1) - (e - l).powi(kk + 1)) / (PI.sqrt() * (kk + 1) as f64);
            assert!(v > 0.0 && v.is_finite() && v > lower, "{k} {eta} {tau}: {v} vs {lower}");
        }
    }

    #[test]
    fn green_function() {
        let z = Complex64::new(0.7, 1.3);
        assert_eq!(gff_green(z, z), Err(AsymptoticsError::Diagonal));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        use rand::Rng;
        for _ in 0..200 {
            let mut pick = || loop {
                let c = Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(0.01..3.0));
                if c.norm() > 1.0 {
                    return c;
                }
            };
            let (a, b) = (pick(), pick());
            let g = gff_green(a, b).unwrap();
            assert!((g - gff_green(b, a).unwrap()).abs() < 1e-12);
            assert!(g > 0.0);
        }
    }

    fn arb_laurent() -> impl Strategy<Value = LaurentPoly> {
        proptest::collection::vec((-4i32..5, -9i64..10, 1i64..5), 0..6)
            .prop_map(|v| LaurentPoly::from_pairs(v.into_iter().map(|(e, n, d)| (e, q_frac(n, d)))))
    }

    proptest! {
        #[test]
        fn residue_identity(f in arb_laurent(), g in arb_laurent()) {
            // Direct coefficient of (uv)^{-1} in f(v) g(u) Σ_m m u^{m−1} v^{−m−1}, via explicit double loop.
            let mut direct = Q::zero();
            for (&a, ca) in &f.coeffs {
                for (&b, cb) in &g.coeffs {
                    if a >= 1 && b == -a {
                        direct += q(a as i64) * ca * cb;
                    }
                }
            }
            prop_assert_eq!(residue_outer(&f, &g), direct.clone());
            prop_assert_eq!(residue_inner(&g, &f), direct);
        }

        #[test]
        fn variances_positive(en in 1i64..20, ed in 1i64..6, tn in 1i64..20, td in 1i64..6, k in 1u32..4) {
            let (e, t) = (q_frac(en, ed), q_frac(tn, td));
            prop_assert!(cov_spacelike(k, k, &e, &t, &e, &t).unwrap() > Q::zero());
        }

        #[test]
        fn critical_residual(nu_frac in 0.02f64..0.98, e in 0.1f64..4.0, t in 0.2f64..3.0) {
            let (l, r) = region_bounds(e, t);
            let p = critical_point(l + nu_frac * (r - l), e, t).unwrap();
            if p.valid {
                prop_assert!(p.residual < 1e-10);
            }
        }
    }
}
