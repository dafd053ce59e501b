//! The entire map F(z) = ∫₀^z Q(t) e^{P(t)} dt: evaluation, derivative,
//! nonlinearity, and the asymptotic values along the rays ρ_j·∞.

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{ComplexPolynomial, Root};
use crate::quad;

/// Re P beyond this makes exp(P) leave double-precision range.
pub const OVERFLOW_THRESHOLD: f64 = 700.0;

/// Maximal variation of Re P across a quadrature panel before it is split.
const RE_P_PANEL_BUDGET: f64 = 20.0;

/// Wire format for an entire map: `{ "P": [...], "Q": [...], "quad_tol": t }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapSpec {
    #[serde(rename = "P")]
    pub p: ComplexPolynomial,
    #[serde(rename = "Q")]
    pub q: ComplexPolynomial,
    #[serde(default = "default_quad_tol")]
    pub quad_tol: f64,
}

fn default_quad_tol() -> f64 {
    1e-12
}

impl MapSpec {
    pub fn build(self) -> Result<EntireMap> {
        EntireMap::with_tol(self.p, self.q, self.quad_tol)
    }
}

/// An asymptotic value w'_j of F along the ray ρ_j·∞, with the certified
/// bound on the truncated tail of the defining integral.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymptoticValue {
    pub j: usize,
    #[serde(with = "crate::complex_serde")]
    pub rho: Complex64,
    #[serde(with = "crate::complex_serde")]
    pub w: Complex64,
    pub tail_bound: f64,
}

/// The pair (P, Q) with a quadrature policy. Immutable after construction
/// apart from the idempotent asymptotic-value cache; all evaluation
/// operations are pure and thread-safe.
#[derive(Debug)]
pub struct EntireMap {
    p: ComplexPolynomial,
    q: ComplexPolynomial,
    p_prime: ComplexPolynomial,
    q_prime: ComplexPolynomial,
    quad_tol: f64,
    q_roots: Vec<Root>,
    asym_cache: OnceLock<Result<Vec<AsymptoticValue>>>,
}

impl EntireMap {
    pub fn new(p: ComplexPolynomial, q: ComplexPolynomial) -> Result<Self> {
        Self::with_tol(p, q, default_quad_tol())
    }

    pub fn with_tol(p: ComplexPolynomial, q: ComplexPolynomial, quad_tol: f64) -> Result<Self> {
        if q.is_zero() {
            return Err(Error::InvalidInput("Q must not be the zero polynomial".into()));
        }
        if !(quad_tol > 0.0 && quad_tol.is_finite()) {
            return Err(Error::InvalidInput("quad_tol must be a positive finite number".into()));
        }
        let q_roots = if q.degree() >= 1 {
            q.find_roots(1e-10)?.roots
        } else {
            Vec::new()
        };
        Ok(Self {
            p_prime: p.derivative(),
            q_prime: q.derivative(),
            p,
            q,
            quad_tol,
            q_roots,
            asym_cache: OnceLock::new(),
        })
    }

    /// The Gauss map P = z^d, Q = 1.
    pub fn gauss(d: usize) -> Self {
        Self::new(ComplexPolynomial::monomial(d), ComplexPolynomial::from_real(&[1.0])).unwrap()
    }

    pub fn p(&self) -> &ComplexPolynomial {
        &self.p
    }

    pub fn q(&self) -> &ComplexPolynomial {
        &self.q
    }

    pub fn p_prime(&self) -> &ComplexPolynomial {
        &self.p_prime
    }

    pub fn q_prime(&self) -> &ComplexPolynomial {
        &self.q_prime
    }

    /// deg P.
    pub fn d(&self) -> usize {
        if self.p.is_zero() {
            0
        } else {
            self.p.degree()
        }
    }

    /// deg Q.
    pub fn m(&self) -> usize {
        if self.q.is_zero() {
            0
        } else {
            self.q.degree()
        }
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    /// Roots of Q with multiplicities (the finite singularities of the flow).
    pub fn q_roots(&self) -> &[Root] {
        &self.q_roots
    }

    /// F' = Q e^P, evaluated directly.
    pub fn eval_f_prime(&self, z: Complex64) -> Result<Complex64> {
        let re_p = self.p.eval(z).re;
        if re_p > OVERFLOW_THRESHOLD {
            return Err(Error::Overflow { z, re_p });
        }
        Ok(self.q.eval(z) * self.p.eval(z).exp())
    }

    fn integrand(&self, t: Complex64) -> Complex64 {
        self.q.eval(t) * self.p.eval(t).exp()
    }

    /// F(b) - F(a): the integral of Q e^P along the straight segment [a, b].
    pub fn eval_f_between(&self, a: Complex64, b: Complex64) -> Result<Complex64> {
        if a == b {
            return Ok(Complex64::new(0.0, 0.0));
        }
        // crude magnitude estimate to turn the absolute panel tolerance
        // into a relative one on segments where F is large
        let len = (b - a).norm();
        let mut mag: f64 = 0.0;
        for i in 0..=8 {
            let t = a + (b - a) * (i as f64 / 8.0);
            let re_p = self.p.eval(t).re.min(OVERFLOW_THRESHOLD);
            mag = mag.max(self.q.eval(t).norm() * re_p.exp());
        }
        let tol = self.quad_tol * (1.0 + mag * len).min(1e12);
        let f = |t: Complex64| self.integrand(t);
        let split = |u: Complex64, v: Complex64| {
            let ru = self.p.eval(u).re;
            let rv = self.p.eval(v).re;
            let rm = self.p.eval(0.5 * (u + v)).re;
            let lo = ru.min(rv).min(rm);
            let hi = ru.max(rv).max(rm);
            hi - lo > RE_P_PANEL_BUDGET
        };
        quad::integrate_segment(&f, a, b, tol, &split)
    }

    /// F(z), integrating along the straight segment from the origin.
    pub fn eval_f(&self, z: Complex64) -> Result<Complex64> {
        self.eval_f_between(Complex64::new(0.0, 0.0), z)
    }

    /// The nonlinearity F''/F' = P'(z) + Q'(z)/Q(z), in closed form.
    pub fn nonlinearity(&self, z: Complex64) -> Result<Complex64> {
        let qz = self.q.eval(z);
        let pole_tol =
            1e-9 * self.q.max_coeff_norm() * (1.0_f64.max(z.norm())).powi(self.m() as i32);
        if qz.norm() <= pole_tol {
            return Err(Error::PoleAtZero { z, abs_q: qz.norm() });
        }
        Ok(self.p_prime.eval(z) + self.q_prime.eval(z) / qz)
    }

    /// All d asymptotic values, in the order of `asymptotic_directions`.
    /// The result is cached; concurrent duplicate computation is harmless.
    pub fn asymptotic_values(&self) -> Result<Vec<AsymptoticValue>> {
        self.asym_cache
            .get_or_init(|| self.compute_asymptotic_values())
            .clone()
    }

    /// The j-th asymptotic value, 1 <= j <= d.
    pub fn asymptotic_value(&self, j: usize) -> Result<AsymptoticValue> {
        let values = self.asymptotic_values()?;
        values
            .get(j.wrapping_sub(1))
            .cloned()
            .ok_or_else(|| Error::InvalidInput(format!("index j = {j} out of range 1..={}", values.len())))
    }

    fn compute_asymptotic_values(&self) -> Result<Vec<AsymptoticValue>> {
        let d = self.d();
        let mut out = Vec::new();
        for (idx, rho) in self.p.asymptotic_directions().into_iter().enumerate() {
            let j = idx + 1;
            let (t_trunc, tail) = self.certified_truncation(rho, j)?;
            let w = self.eval_f_between(Complex64::new(0.0, 0.0), rho * t_trunc)?;
            out.push(AsymptoticValue { j, rho, w, tail_bound: tail });
        }
        debug_assert_eq!(out.len(), d);
        Ok(out)
    }

    /// Finds T with a certified bound on |∫_T^∞ Q(ρt) e^{P(ρt)} ρ dt|
    /// below quad_tol / 10. Along the ray the leading term of P(ρt) is
    /// exactly -t^d (since ρ^d = -1/a_d); once the lower-order terms are
    /// dominated by t^d / 2 the tail decays at least like e^{-t^d / 2}.
    fn certified_truncation(&self, rho: Complex64, j: usize) -> Result<(f64, f64)> {
        let d = self.d() as i32;
        let rho_n = rho.norm();
        // lower-order coefficient bounds of P along the ray
        let p_lower: Vec<f64> = (0..d as usize)
            .map(|k| self.p.coeff(k).norm() * rho_n.powi(k as i32))
            .collect();
        let q_terms: Vec<f64> = (0..=self.m())
            .map(|k| self.q.coeff(k).norm() * rho_n.powi(k as i32) * rho_n)
            .collect();

        let mut t: f64 = 2.0;
        for _ in 0..60 {
            let dominated = p_lower
                .iter()
                .enumerate()
                .map(|(k, &c)| c * t.powi(k as i32))
                .sum::<f64>()
                <= 0.5 * t.powi(d);
            if dominated {
                let lambda = 0.5 * t.powi(d - 1);
                let tail: f64 = q_terms
                    .iter()
                    .enumerate()
                    .map(|(k, &c)| c * upper_incomplete_moment(k, lambda, t))
                    .sum();
                if tail.is_finite() && tail < self.quad_tol / 10.0 {
                    return Ok((t, tail));
                }
            }
            t *= 1.5;
        }
        Err(Error::TailBoundFailure { j })
    }
}

/// ∫_T^∞ t^k e^{-λ t} dt = (k! / λ^{k+1}) e^{-λT} Σ_{i=0}^{k} (λT)^i / i!
fn upper_incomplete_moment(k: usize, lambda: f64, t: f64) -> f64 {
    let x = lambda * t;
    let mut series = 0.0;
    let mut term = 1.0;
    for i in 0..=k {
        if i > 0 {
            term *= x / i as f64;
        }
        series += term;
    }
    let mut factor = (-x).exp();
    for _ in 0..=k {
        factor /= lambda;
    }
    let mut kfact = 1.0;
    for i in 2..=k {
        kfact *= i as f64;
    }
    kfact * factor * series
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_zero_q() {
        assert!(EntireMap::new(ComplexPolynomial::monomial(1), ComplexPolynomial::zero()).is_err());
    }

    #[test]
    fn closed_form_exponential() {
        // P = z, Q = 1: F = e^z - 1
        let map = EntireMap::gauss(1);
        let v = map.eval_f(c(1.0, 0.0)).unwrap();
        assert!((v - c(std::f64::consts::E - 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn series_oracle_gauss_d2() {
        // F(1) for P = z^2, Q = 1 equals sum 1/(n! (2n+1))
        let mut oracle = 0.0;
        let mut nfact = 1.0;
        for n in 0..30 {
            if n > 0 {
                nfact *= n as f64;
            }
            oracle += 1.0 / (nfact * (2 * n + 1) as f64);
        }
        let map = EntireMap::gauss(2);
        let v = map.eval_f(c(1.0, 0.0)).unwrap();
        assert!((v.re - oracle).abs() < 1e-11, "{} vs {}", v.re, oracle);
        assert!(v.im.abs() < 1e-12);
        assert!((v.re - 1.462651745907).abs() < 1e-9);
    }

    #[test]
    fn f_at_origin_is_zero() {
        let map = EntireMap::new(
            ComplexPolynomial::from_real(&[0.5, 0.0, 1.0]),
            ComplexPolynomial::from_real(&[1.0, 2.0]),
        )
        .unwrap();
        assert_eq!(map.eval_f(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn f_prime_examples() {
        let map = EntireMap::gauss(2);
        assert!((map.eval_f_prime(c(0.0, 0.0)).unwrap() - c(1.0, 0.0)).norm() < 1e-15);

        let m2 = EntireMap::new(ComplexPolynomial::zero(), ComplexPolynomial::monomial(1)).unwrap();
        assert!((m2.eval_f_prime(c(0.0, 3.0)).unwrap() - c(0.0, 3.0)).norm() < 1e-15);
    }

    #[test]
    fn f_prime_overflow_flagged() {
        let map = EntireMap::gauss(1);
        assert!(matches!(map.eval_f_prime(c(800.0, 0.0)), Err(Error::Overflow { .. })));
    }

    #[test]
    fn f_prime_matches_central_difference() {
        let map = EntireMap::new(
            ComplexPolynomial::from_real(&[0.1, -0.3, 1.0]),
            ComplexPolynomial::from_real(&[1.0, 1.0]),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = 1e-5;
        for _ in 0..50 {
            let z = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let fd = (map.eval_f(z + c(h, 0.0)).unwrap() - map.eval_f(z - c(h, 0.0)).unwrap())
                / (2.0 * h);
            let fp = map.eval_f_prime(z).unwrap();
            assert!((fd - fp).norm() <= 1e-6 * (1.0 + fp.norm()));
        }
    }

    #[test]
    fn nonlinearity_closed_form() {
        let map = EntireMap::gauss(2);
        for z in [c(0.3, -0.2), c(1.0, 1.0), c(-2.0, 0.5)] {
            assert!((map.nonlinearity(z).unwrap() - 2.0 * z).norm() < 1e-14);
        }
        let m2 = EntireMap::new(ComplexPolynomial::zero(), ComplexPolynomial::monomial(1)).unwrap();
        assert!((m2.nonlinearity(c(2.0, 0.0)).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
        assert!(matches!(m2.nonlinearity(c(0.0, 0.0)), Err(Error::PoleAtZero { .. })));
    }

    #[test]
    fn nonlinearity_matches_log_derivative() {
        let map = EntireMap::new(
            ComplexPolynomial::from_real(&[0.0, 0.5, 1.0]),
            ComplexPolynomial::from_real(&[-1.0, 0.0, 1.0]),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-5;
        let mut checked = 0;
        while checked < 50 {
            let z = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            if map.q_roots().iter().any(|r| (z - r.location).norm() < 0.1) {
                continue;
            }
            let fp = |w: Complex64| map.eval_f_prime(w).unwrap();
            let fd = (fp(z + c(h, 0.0)) - fp(z - c(h, 0.0))) / (2.0 * h);
            let nl = map.nonlinearity(z).unwrap();
            assert!((fd / fp(z) - nl).norm() <= 1e-6 * (1.0 + nl.norm()));
            checked += 1;
        }
    }

    #[test]
    fn asymptotic_value_d1() {
        let map = EntireMap::gauss(1);
        let vals = map.asymptotic_values().unwrap();
        assert_eq!(vals.len(), 1);
        assert!((vals[0].rho - c(-1.0, 0.0)).norm() < 1e-12);
        assert!((vals[0].w - c(-1.0, 0.0)).norm() < 1e-10);
        assert!(vals[0].tail_bound <= map.quad_tol());
    }

    #[test]
    fn asymptotic_values_d2_gaussian_integral() {
        // ∫_0^∞ e^{-t^2} dt = sqrt(pi)/2
        let map = EntireMap::gauss(2);
        let vals = map.asymptotic_values().unwrap();
        assert_eq!(vals.len(), 2);
        let half_sqrt_pi = std::f64::consts::PI.sqrt() / 2.0;
        assert!((vals[0].w - c(0.0, half_sqrt_pi)).norm() < 1e-10);
        assert!((vals[1].w - c(0.0, -half_sqrt_pi)).norm() < 1e-10);
    }

    #[test]
    fn gauss_asymptotic_rotation() {
        // w'_{j+1} = omega w'_j for the Gauss map
        for d in [2usize, 3, 4] {
            let map = EntireMap::gauss(d);
            let vals = map.asymptotic_values().unwrap();
            let th = 2.0 * std::f64::consts::PI / d as f64;
            let omega = c(th.cos(), th.sin());
            for j in 0..d {
                let next = vals[(j + 1) % d].w;
                assert!((next - omega * vals[j].w).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn rotation_equivariance_gauss() {
        for d in [2usize, 3] {
            let map = EntireMap::gauss(d);
            let th = 2.0 * std::f64::consts::PI / d as f64;
            let omega = c(th.cos(), th.sin());
            let mut rng = ChaCha8Rng::seed_from_u64(13);
            for _ in 0..30 {
                let z = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                let lhs = map.eval_f(omega * z).unwrap();
                let rhs = omega * map.eval_f(z).unwrap();
                assert!((lhs - rhs).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn conjugation_symmetry_real_coefficients() {
        let map = EntireMap::new(
            ComplexPolynomial::from_real(&[0.2, -1.0, 0.0, 1.0]),
            ComplexPolynomial::from_real(&[1.0, 0.5]),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..30 {
            let z = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let lhs = map.eval_f(z.conj()).unwrap();
            let rhs = map.eval_f(z).unwrap().conj();
            assert!((lhs - rhs).norm() <= 1e-10);
        }
    }

    #[test]
    fn two_segment_path_additivity() {
        let map = EntireMap::gauss(3);
        let w = c(0.7, 0.4);
        let z = c(-0.9, 1.1);
        let direct = map.eval_f(z).unwrap();
        let via = map.eval_f(w).unwrap() + map.eval_f_between(w, z).unwrap();
        assert!((direct - via).norm() <= 2.0 * map.quad_tol() * 1e3);
    }

    #[test]
    fn map_spec_round_trip() {
        let spec: MapSpec =
            serde_json::from_str(r#"{ "P": [[0,0],[0,0],[1,0]], "Q": [[1,0]], "quad_tol": 1e-12 }"#)
                .unwrap();
        let map = spec.build().unwrap();
        assert_eq!(map.d(), 2);
        assert_eq!(map.m(), 0);
    }
}
