//! Jacobi polynomials, Gauss-Jacobi rules and the character function `E^ω`.

use num::complex::Complex64;
use num::traits::NumOps;
use statrs::function::gamma::gamma;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecialFnError {
    #[error("unsupported Jacobi parameters a={a}, b={b}")]
    UnsupportedParams { a: f64, b: f64 },
    #[error("invalid character parameter: {0}")]
    InvalidCharacter(String),
    #[error("E^omega has a pole at x: denominator of alpha[{index}] vanishes")]
    Pole { index: usize },
    #[error("Gauss-Jacobi node {node} did not converge (n={n}, a={a}, b={b})")]
    NoConvergence { n: usize, a: f64, b: f64, node: usize },
    #[error("quadrature parameters must satisfy a, b > -1 and n >= 1")]
    BadRule,
}

/// Field operations shared by the real and complex evaluation paths.
pub trait Scalar: Copy + NumOps + From<f64> {
    fn exp(self) -> Self;
    fn abs(self) -> f64;
}

impl Scalar for f64 {
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
}

impl Scalar for Complex64 {
    fn exp(self) -> Self {
        Complex64::exp(self)
    }
    fn abs(self) -> f64 {
        self.norm()
    }
}

/// The half-integer tag `a ∈ {−1/2, +1/2}` carried by levels and Jacobi parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Parity {
    #[serde(rename = "-")]
    Minus,
    #[serde(rename = "+")]
    Plus,
}

impl Parity {
    pub fn value(self) -> f64 {
        match self {
            Parity::Minus => -0.5,
            Parity::Plus => 0.5,
        }
    }

    /// Twice the value, as an integer (−1 or +1).
    pub fn twice(self) -> i64 {
        match self {
            Parity::Minus => -1,
            Parity::Plus => 1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Parity::Minus => '-',
            Parity::Plus => '+',
        }
    }

    pub fn parse(s: &str) -> Option<Parity> {
        match s.trim() {
            "-" | "-1/2" | "-0.5" | "minus" => Some(Parity::Minus),
            "+" | "1/2" | "+1/2" | "0.5" | "plus" => Some(Parity::Plus),
            _ => None,
        }
    }
}

/// Jacobi exponents `(a, b)` with `a ∈ {±1/2}` and `b = −1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JacobiParams {
    pub a: Parity,
}

impl JacobiParams {
    pub fn new(a: f64, b: f64) -> Result<Self, SpecialFnError> {
        if b != -0.5 {
            return Err(SpecialFnError::UnsupportedParams { a, b });
        }
        if a == -0.5 {
            Ok(JacobiParams { a: Parity::Minus })
        } else if a == 0.5 {
            Ok(JacobiParams { a: Parity::Plus })
        } else {
            Err(SpecialFnError::UnsupportedParams { a, b })
        }
    }

    pub fn a(&self) -> f64 {
        self.a.value()
    }

    pub fn b(&self) -> f64 {
        -0.5
    }
}

/// `J_k^{(a,b)}(x)` for arbitrary real exponents, by the three-term recurrence.
pub fn jacobi_ab<T: Scalar>(k: usize, a: f64, b: f64, x: T) -> T {
    let one = T::from(1.0);
    if k == 0 {
        return one;
    }
    let mut p0 = one;
    let mut p1 = T::from((a - b) / 2.0) + T::from((a + b + 2.0) / 2.0) * x;
    for m in 2..=k {
        let m = m as f64;
        let c = 2.0 * m + a + b;
        let a1 = 2.0 * m * (m + a + b) * (c - 2.0);
        let a2 = (c - 1.0) * (a * a - b * b);
        let a3 = (c - 2.0) * (c - 1.0) * c;
        let a4 = 2.0 * (m + a - 1.0) * (m + b - 1.0) * c;
        let p2 = ((T::from(a2) + T::from(a3) * x) * p1 - T::from(a4) * p0) / T::from(a1);
        p0 = p1;
        p1 = p2;
    }
    p1
}

pub fn jacobi_eval<T: Scalar>(k: usize, p: JacobiParams, x: T) -> T {
    jacobi_ab(k, p.a(), p.b(), x)
}

/// `c_k = (1·3·…·(2k−1)) / (2·4·…·2k)`.
pub fn c_k(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, j| acc * (2 * j - 1) as f64 / (2 * j) as f64)
}

pub fn normalized_jacobi<T: Scalar>(k: usize, p: JacobiParams, x: T) -> T {
    jacobi_eval(k, p, x) / T::from(c_k(k))
}

pub fn weight_w(k: usize, p: JacobiParams) -> i32 {
    match p.a {
        Parity::Minus if k > 0 => 2,
        Parity::Minus => 1,
        Parity::Plus => 1,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub a: f64,
    pub b: f64,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Gauss rule for `∫ f(x) (1−x)^a (1+x)^b dx` on `[−1, 1]`.
pub fn gauss_jacobi_rule(n: usize, a: f64, b: f64) -> Result<QuadratureRule, SpecialFnError> {
    if n == 0 || a <= -1.0 || b <= -1.0 {
        return Err(SpecialFnError::BadRule);
    }
    let nf = n as f64;
    let deriv = |x: f64| 0.5 * (nf + a + b + 1.0) * jacobi_ab(n - 1, a + 1.0, b + 1.0, x);

    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 1..=n {
        let theta = std::f64::consts::PI * (i as f64 - 0.25 + a / 2.0) / (nf + (a + b + 1.0) / 2.0);
        let mut x = theta.cos();
        let mut converged = false;
        for _ in 0..100 {
            let step = jacobi_ab(n, a, b, x) / deriv(x);
            x -= step;
            if step.abs() <= 1e-14 * x.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged || !(x > -1.0 && x < 1.0) {
            return Err(SpecialFnError::NoConvergence { n, a, b, node: i });
        }
        let d = deriv(x);
        nodes.push(x);
        weights.push(1.0 / ((1.0 - x * x) * d * d));
    }
    // Rescale to the exact mass 2^{a+b+1} B(a+1, b+1).
    let mass = 2f64.powf(a + b + 1.0) * gamma(a + 1.0) * gamma(b + 1.0) / gamma(a + b + 2.0);
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w *= mass / total);
    // Guesses run from the right end; reverse to get increasing nodes.
    nodes.reverse();
    weights.reverse();
    if nodes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SpecialFnError::NoConvergence { n, a, b, node: 0 });
    }
    Ok(QuadratureRule { nodes, weights, a, b })
}

/// `ω = (α, β, δ)` restricted to finitely many nonzero entries.
#[derive(Debug, Clone, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct CharacterParam {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub delta: f64,
}

impl CharacterParam {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>, delta: f64) -> Result<Self, SpecialFnError> {
        let w = CharacterParam { alpha, beta, delta };
        w.validate()?;
        Ok(w)
    }

    pub fn zero() -> Self {
        CharacterParam::default()
    }

    pub fn validate(&self) -> Result<(), SpecialFnError> {
        for (name, v) in [("alpha", &self.alpha), ("beta", &self.beta)] {
            if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(SpecialFnError::InvalidCharacter(format!("{name} has a negative entry")));
            }
            if v.windows(2).any(|w| w[0] < w[1]) {
                return Err(SpecialFnError::InvalidCharacter(format!("{name} is not nonincreasing")));
            }
        }
        let total: f64 = self.alpha.iter().chain(&self.beta).sum();
        if !self.delta.is_finite() || total > self.delta + 1e-12 {
            return Err(SpecialFnError::InvalidCharacter(
                "sum(alpha) + sum(beta) exceeds delta".into(),
            ));
        }
        Ok(())
    }

    /// Exponent rate `δ − Σ(α_i + β_i)`.
    pub fn gamma(&self) -> f64 {
        self.delta - self.alpha.iter().chain(&self.beta).sum::<f64>()
    }

    /// The same `ω` with `δ` increased by `t`; `E^ω(x) e^{t(x−1)}` is its character.
    pub fn shifted(&self, t: f64) -> Self {
        CharacterParam { delta: self.delta + t, ..self.clone() }
    }
}

pub fn e_omega<T: Scalar>(w: &CharacterParam, x: T) -> Result<T, SpecialFnError> {
    let one = T::from(1.0);
    let d = one - x;
    let mut val = (T::from(w.gamma()) * (x - one)).exp();
    for &b in &w.beta {
        val = val * (one - T::from(b - b * b / 2.0) * d);
    }
    for (index, &a) in w.alpha.iter().enumerate() {
        let den = one - T::from(a - a * a / 2.0) * d;
        if den.abs() < 1e-12 {
            return Err(SpecialFnError::Pole { index });
        }
        val = val / den;
    }
    Ok(val)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn minus() -> JacobiParams {
        JacobiParams { a: Parity::Minus }
    }
    fn plus() -> JacobiParams {
        JacobiParams { a: Parity::Plus }
    }

    // J_n = Σ_s C(n+a, n−s) C(n+b, s) ((x−1)/2)^s ((x+1)/2)^{n−s}
    fn jacobi_explicit(n: usize, a: f64, b: f64, x: f64) -> f64 {
        let binom = |top: f64, k: usize| (0..k).fold(1.0, |acc, i| acc * (top - i as f64) / (i + 1) as f64);
        (0..=n)
            .map(|s| {
                binom(n as f64 + a, n - s)
                    * binom(n as f64 + b, s)
                    * ((x - 1.0) / 2.0).powi(s as i32)
                    * ((x + 1.0) / 2.0).powi((n - s) as i32)
            })
            .sum()
    }

    // Moments from (a+b+d+2) μ_{d+1} = d μ_{d−1} + (b−a) μ_d, with μ_0 the Beta mass.
    fn beta_moments(count: usize, a: f64, b: f64) -> Vec<f64> {
        let mass = 2f64.powf(a + b + 1.0) * gamma(a + 1.0) * gamma(b + 1.0) / gamma(a + b + 2.0);
        let mut mu = vec![mass, (b - a) / (a + b + 2.0) * mass];
        for d in 1..count {
            let df = d as f64;
            mu.push((df * mu[d - 1] + (b - a) * mu[d]) / (a + b + df + 2.0));
        }
        mu.truncate(count);
        mu
    }

    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let fa = f(lo);
        let fb = f(hi);
        let fm = f(0.5 * (lo + hi));
        let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, lo, hi, fa, fm, fb, whole, tol, 50)
    }

    #[test]
    fn jacobi_low_degree() {
        assert_eq!(jacobi_eval(0, plus(), 0.3), 1.0);
        assert_eq!(jacobi_eval(0, minus(), 0.3), 1.0);
        for x in [-0.9, 0.0, 0.4, 2.5] {
            assert_relative_eq!(jacobi_eval(1, plus(), x), x + 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn jacobi_matches_explicit_sum() {
        for n in 0..12 {
            for &x in &[-0.95, -0.3, 0.1, 0.77, 1.8] {
                for p in [plus(), minus()] {
                    let r = jacobi_eval(n, p, x);
                    let e = jacobi_explicit(n, p.a(), p.b(), x);
                    assert!((r - e).abs() <= 1e-11 * r.abs().max(1.0), "n={n} x={x} a={} {r} {e}", p.a());
                }
            }
        }
    }

    #[test]
    fn chebyshev_identity() {
        let x: f64 = 0.7;
        let theta = x.acos();
        for k in 0..12 {
            let via_norm = normalized_jacobi(k, minus(), x);
            assert_relative_eq!(via_norm, (k as f64 * theta).cos(), epsilon = 1e-12);
        }
        let k5 = jacobi_eval(5, minus(), x);
        assert_relative_eq!(k5, c_k(5) * (5.0 * theta).cos(), epsilon = 1e-12);
    }

    #[test]
    fn normalized_values() {
        assert_eq!(normalized_jacobi(0, plus(), 0.4), 1.0);
        assert_relative_eq!(normalized_jacobi(1, plus(), 0.4), 2.0 * jacobi_eval(1, plus(), 0.4));
        let direct = jacobi_eval(3, plus(), 0.2) * 16.0 / 5.0;
        assert_relative_eq!(normalized_jacobi(3, plus(), 0.2), direct, max_relative = 1e-14);
        // 𝒥_s^{(1/2,−1/2)}(1) = 2s + 1
        for s in 0..20 {
            assert_relative_eq!(normalized_jacobi(s, plus(), 1.0), (2 * s + 1) as f64, max_relative = 1e-12);
        }
    }

    #[test]
    fn complex_matches_real_on_axis() {
        for k in 0..10 {
            let r = normalized_jacobi(k, plus(), 0.35);
            let c = normalized_jacobi(k, plus(), Complex64::new(0.35, 0.0));
            assert_relative_eq!(c.re, r, max_relative = 1e-14);
            assert_eq!(c.im, 0.0);
        }
    }

    #[test]
    fn weight_table() {
        assert_eq!(weight_w(3, minus()), 2);
        assert_eq!(weight_w(0, minus()), 1);
        assert_eq!(weight_w(7, plus()), 1);
        assert!(JacobiParams::new(0.0, -0.5).is_err());
        assert!(JacobiParams::new(0.5, 0.5).is_err());
    }

    #[test]
    fn small_rules() {
        let r = gauss_jacobi_rule(1, 0.0, 0.0).unwrap();
        assert!(r.nodes[0].abs() < 1e-15);
        assert_relative_eq!(r.weights[0], 2.0, epsilon = 1e-14);
        let r = gauss_jacobi_rule(8, -0.5, -0.5).unwrap();
        assert_relative_eq!(r.integrate(|_| 1.0), PI, epsilon = 1e-13);
        for (i, (x, w)) in r.nodes.iter().rev().zip(&r.weights).enumerate() {
            let expected = ((2 * i + 1) as f64 * PI / 16.0).cos();
            assert_relative_eq!(*x, expected, epsilon = 1e-14);
            assert_relative_eq!(*w, PI / 8.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn high_moment_against_adaptive() {
        let r = gauss_jacobi_rule(16, 0.5, -0.5).unwrap();
        let got = r.integrate(|x| x.powi(20));
        // x = cos θ turns (1−x)^{1/2}(1+x)^{−1/2} dx into 2 sin²(θ/2) dθ.
        let f = |th: f64| th.cos().powi(20) * 2.0 * (th / 2.0).sin().powi(2);
        let oracle = adaptive_simpson(&f, 0.0, PI, 1e-14);
        assert_relative_eq!(got, oracle, epsilon = 1e-10);
    }

    #[test]
    fn exactness_against_beta_moments() {
        for &(a, b) in &[(0.5, -0.5), (-0.5, -0.5), (0.0, 0.0), (1.5, -0.5)] {
            for n in [1usize, 3, 8, 20] {
                let r = gauss_jacobi_rule(n, a, b).unwrap();
                let mu = beta_moments(2 * n, a, b);
                for d in 0..2 * n {
                    let exact = mu[d];
                    let got = r.integrate(|x| x.powi(d as i32));
                    let scale = mu[0];
                    assert!((got - exact).abs() <= 1e-12 * scale, "n={n} a={a} d={d}: {got} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn large_rules_converge() {
        for n in [64, 150, 260] {
            for a in [0.5, -0.5] {
                let r = gauss_jacobi_rule(n, a, -0.5).unwrap();
                assert!(r.weights.iter().all(|&w| w > 0.0));
                assert_relative_eq!(r.integrate(|_| 1.0), PI, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn orthogonality() {
        for p in [plus(), minus()] {
            let r = gauss_jacobi_rule(64, p.a(), -0.5).unwrap();
            for k in 0..=20 {
                for l in 0..=20 {
                    let v = weight_w(k, p) as f64 / PI
                        * r.integrate(|x| normalized_jacobi(k, p, x) * normalized_jacobi(l, p, x));
                    let expect = if k == l { 1.0 } else { 0.0 };
                    assert!((v - expect).abs() < 1e-10, "k={k} l={l} v={v}");
                }
            }
        }
    }

    #[test]
    fn e_omega_values() {
        let zero = CharacterParam::zero();
        assert_eq!(e_omega(&zero, 0.37).unwrap(), 1.0);
        let w = CharacterParam::new(vec![1.0], vec![], 2.0).unwrap();
        assert_relative_eq!(e_omega(&w, 1.0).unwrap(), 1.0);
        // independent substitution: exponent (2−1)(0−1), factor 1/(1−1+1/2)
        let expected = (-1.0f64).exp() / (1.0 - 1.0 * (1.0 - 0.0) + 0.5 * (1.0 - 0.0));
        assert_relative_eq!(e_omega(&w, 0.0).unwrap(), expected, max_relative = 1e-15);
        assert_relative_eq!(expected, 2.0 * (-1.0f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn e_omega_pole_reports_index() {
        // 1 − (α − α²/2)(1 − x) = 0 at x = 1 − 1/(α − α²/2)
        let w = CharacterParam::new(vec![1.0, 0.5], vec![], 3.0).unwrap();
        let x = 1.0 - 1.0 / (0.5 - 0.125);
        assert_eq!(e_omega(&w, x), Err(SpecialFnError::Pole { index: 1 }));
    }

    #[test]
    fn character_validation() {
        assert!(CharacterParam::new(vec![0.5, 1.0], vec![], 3.0).is_err());
        assert!(CharacterParam::new(vec![1.0], vec![1.0], 1.5).is_err());
        assert!(CharacterParam::new(vec![-0.1], vec![], 1.0).is_err());
        assert!(CharacterParam::new(vec![1.0], vec![0.5], 1.5).is_ok());
    }

    proptest! {
        #[test]
        fn normalization_consistent(k in 0usize..40, x in -3.0f64..3.0, plus_tag in any::<bool>()) {
            let p = if plus_tag { plus() } else { minus() };
            let lhs = normalized_jacobi(k, p, x) * c_k(k);
            let rhs = jacobi_eval(k, p, x);
            prop_assert!((lhs - rhs).abs() <= 1e-14 * rhs.abs().max(1e-300) + 1e-300);
        }

        #[test]
        fn e_omega_is_one_at_one(alpha in proptest::collection::vec(0.0f64..2.0, 0..4),
                                 beta in proptest::collection::vec(0.0f64..2.0, 0..4),
                                 extra in 0.0f64..3.0) {
            let mut alpha = alpha;
            let mut beta = beta;
            alpha.sort_by(|a, b| b.partial_cmp(a).unwrap());
            beta.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let delta = alpha.iter().chain(&beta).sum::<f64>() + extra;
            let w = CharacterParam::new(alpha, beta, delta).unwrap();
            prop_assert_eq!(e_omega(&w, 1.0).unwrap(), 1.0);
        }
    }
}
