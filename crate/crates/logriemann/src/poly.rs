//! Complex polynomial arithmetic, simultaneous-iteration root finding and
//! asymptotic direction extraction.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Polynomial over ℂ with coefficients stored in ascending degree order.
/// The leading coefficient is nonzero unless the polynomial is zero, in
/// which case `coeffs` is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPolynomial {
    coeffs: Vec<Complex64>,
}

impl ComplexPolynomial {
    /// Builds a polynomial from ascending coefficients, trimming trailing
    /// (near-)zero coefficients. Coefficients must be finite.
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while let Some(c) = coeffs.last() {
            if c.re == 0.0 && c.im == 0.0 {
                coeffs.pop();
            } else {
                break;
            }
        }
        for c in &coeffs {
            assert!(c.re.is_finite() && c.im.is_finite(), "non-finite coefficient");
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// The monomial z^n.
    pub fn monomial(n: usize) -> Self {
        let mut c = vec![Complex64::new(0.0, 0.0); n + 1];
        c[n] = Complex64::new(1.0, 0.0);
        Self { coeffs: c }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn leading_coeff(&self) -> Complex64 {
        self.coeffs.last().copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// True when every coefficient is real (exactly).
    pub fn is_real(&self) -> bool {
        self.coeffs.iter().all(|c| c.im == 0.0)
    }

    /// Horner evaluation.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// Coefficient-wise derivative; constants map to the zero polynomial.
    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        let c = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &a)| a * k as f64)
            .collect();
        Self::new(c)
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut c = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Self::new(c)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let c = (0..n).map(|k| self.coeff(k) + other.coeff(k)).collect();
        Self::new(c)
    }

    /// Fujiwara bound on the modulus of the roots.
    pub fn root_bound(&self) -> f64 {
        let n = self.degree();
        if n == 0 {
            return 0.0;
        }
        let an = self.leading_coeff().norm();
        let mut bound: f64 = 0.0;
        for k in 0..n {
            let ratio = self.coeff(k).norm() / an;
            let r = if k == 0 { ratio / 2.0 } else { ratio };
            bound = bound.max(r.powf(1.0 / (n - k) as f64));
        }
        2.0 * bound
    }

    /// All roots with multiplicities via Aberth-Ehrlich simultaneous
    /// iteration, followed by multiplicity clustering.
    pub fn find_roots(&self, tol: f64) -> Result<RootSet> {
        let n = self.degree();
        if self.is_zero() || n == 0 {
            return Err(Error::InvalidInput("find_roots requires degree >= 1".into()));
        }
        let deriv = self.derivative();
        let radius = (self.root_bound() * 0.5).max(0.5);
        let mut z: Vec<Complex64> = (0..n)
            .map(|k| {
                // offset angle breaks symmetry with real-coefficient inputs
                let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
                radius * Complex64::new(th.cos(), th.sin())
            })
            .collect();

        let scale = self.max_coeff_norm();
        let max_iter = 400;
        let mut converged = false;
        for _ in 0..max_iter {
            let mut max_step: f64 = 0.0;
            for i in 0..n {
                let p = self.eval(z[i]);
                let dp = deriv.eval(z[i]);
                let newton = if dp.norm() > 0.0 { p / dp } else { p };
                let mut sum = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    if j != i {
                        let diff = z[i] - z[j];
                        if diff.norm() > 1e-300 {
                            sum += diff.inv();
                        }
                    }
                }
                let denom = Complex64::new(1.0, 0.0) - newton * sum;
                let step = if denom.norm() > 1e-300 { newton / denom } else { newton };
                z[i] -= step;
                max_step = max_step.max(step.norm());
            }
            if max_step < 1e-14 * (1.0 + radius) {
                converged = true;
                break;
            }
        }
        // residual check on the raw iterates
        let ok = z.iter().all(|&r| {
            self.eval(r).norm() <= tol.max(1e-12) * scale * (1.0 + r.norm()).powi(n as i32) * 1e3
        });
        if !converged && !ok {
            return Err(Error::NonConvergence { iterations: max_iter });
        }
        Ok(cluster_roots(&z, tol))
    }

    /// The d directions ρ_j: the d-th roots of -1/a_d, ordered by ascending
    /// principal argument. Along the rays ρ_j·∞ the leading term of P tends
    /// to -∞ on the real axis, which is what makes the ray integrals of
    /// Q e^P converge.
    pub fn asymptotic_directions(&self) -> Vec<Complex64> {
        let d = self.degree();
        if self.is_zero() || d == 0 {
            return Vec::new();
        }
        let w = -self.leading_coeff().inv();
        let r = w.norm().powf(1.0 / d as f64);
        let theta0 = w.arg() / d as f64;
        let mut dirs: Vec<Complex64> = (0..d)
            .map(|k| {
                let th = theta0 + 2.0 * std::f64::consts::PI * k as f64 / d as f64;
                r * Complex64::new(th.cos(), th.sin())
            })
            .collect();
        dirs.sort_by(|a, b| principal_arg(*a).partial_cmp(&principal_arg(*b)).unwrap());
        dirs
    }
}

fn principal_arg(z: Complex64) -> f64 {
    let a = z.arg();
    if a < 0.0 {
        a + 2.0 * std::f64::consts::PI
    } else {
        a
    }
}

/// Roots of a polynomial with multiplicities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RootSet {
    pub roots: Vec<Root>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Root {
    #[serde(with = "crate::complex_serde")]
    pub location: Complex64,
    pub multiplicity: usize,
}

impl RootSet {
    pub fn total_multiplicity(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }
}

/// Single-linkage clustering with the multiplicity-aware radius tol^(1/k):
/// a k-fold root perturbed by O(tol) splits into simple roots spread over
/// a disk of radius O(tol^(1/k)).
fn cluster_roots(raw: &[Complex64], tol: f64) -> RootSet {
    let tol = tol.clamp(1e-15, 1e-2);
    let mut clusters: Vec<Vec<Complex64>> = raw.iter().map(|&z| vec![z]).collect();
    loop {
        let mut merged = false;
        'outer: for i in 0..clusters.len() {
            for j in (i + 1)..clusters.len() {
                let k = clusters[i].len() + clusters[j].len();
                let radius = tol.powf(1.0 / k as f64);
                let ci = centroid(&clusters[i]);
                let cj = centroid(&clusters[j]);
                if (ci - cj).norm() < radius {
                    let moved = clusters.remove(j);
                    clusters[i].extend(moved);
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            break;
        }
    }
    let mut roots: Vec<Root> = clusters
        .iter()
        .map(|c| Root { location: centroid(c), multiplicity: c.len() })
        .collect();
    roots.sort_by(|a, b| {
        (a.location.re, a.location.im)
            .partial_cmp(&(b.location.re, b.location.im))
            .unwrap()
    });
    RootSet { roots }
}

fn centroid(pts: &[Complex64]) -> Complex64 {
    pts.iter().sum::<Complex64>() / pts.len() as f64
}

// Wire format: JSON array of [re, im] pairs, ascending degree.
impl Serialize for ComplexPolynomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.coeffs.iter().map(|c| [c.re, c.im]).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexPolynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(ComplexPolynomial::new(
            pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect(),
        ))
    }
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
    fn eval_square() {
        let p = ComplexPolynomial::monomial(2);
        let v = p.eval(c(1.0, 1.0));
        assert!((v - c(0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn eval_zero_poly() {
        let p = ComplexPolynomial::zero();
        assert_eq!(p.eval(c(5.0, 0.0)), c(0.0, 0.0));
    }

    #[test]
    fn eval_matches_term_summation_oracle() {
        // z^3 - 2z + 1 against naive term-by-term summation
        let p = ComplexPolynomial::from_real(&[1.0, -2.0, 0.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let z = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let mut oracle = c(0.0, 0.0);
            for (k, &a) in p.coeffs().iter().enumerate() {
                oracle += a * z.powu(k as u32);
            }
            let v = p.eval(z);
            assert!((v - oracle).norm() <= 1e-12 * (1.0 + oracle.norm()));
        }
    }

    #[test]
    fn derivative_basics() {
        let p = ComplexPolynomial::monomial(2);
        assert_eq!(p.derivative(), ComplexPolynomial::from_real(&[0.0, 2.0]));
        let k = ComplexPolynomial::constant(c(3.0, 1.0));
        assert!(k.derivative().is_zero());
    }

    #[test]
    fn derivative_leibniz_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let p = ComplexPolynomial::new(
                (0..4).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect(),
            );
            let q = ComplexPolynomial::new(
                (0..3).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect(),
            );
            let lhs = p.mul(&q).derivative();
            let rhs = p.derivative().mul(&q).add(&p.mul(&q.derivative()));
            let n = lhs.coeffs().len().max(rhs.coeffs().len());
            for k in 0..n {
                assert!((lhs.coeff(k) - rhs.coeff(k)).norm() <= 1e-12 * (1.0 + rhs.coeff(k).norm()));
            }
        }
    }

    #[test]
    fn roots_of_z2_plus_1() {
        let p = ComplexPolynomial::from_real(&[1.0, 0.0, 1.0]);
        let rs = p.find_roots(1e-10).unwrap();
        assert_eq!(rs.roots.len(), 2);
        assert_eq!(rs.total_multiplicity(), 2);
        let mut locs: Vec<Complex64> = rs.roots.iter().map(|r| r.location).collect();
        locs.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!((locs[0] - c(0.0, -1.0)).norm() < 1e-9);
        assert!((locs[1] - c(0.0, 1.0)).norm() < 1e-9);
    }

    #[test]
    fn double_root_clusters() {
        // (z-1)^2
        let p = ComplexPolynomial::from_real(&[1.0, -2.0, 1.0]);
        let rs = p.find_roots(1e-10).unwrap();
        assert_eq!(rs.roots.len(), 1);
        assert_eq!(rs.roots[0].multiplicity, 2);
        assert!((rs.roots[0].location - c(1.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn cube_roots_of_unity() {
        let p = ComplexPolynomial::from_real(&[-1.0, 0.0, 0.0, 1.0]);
        let rs = p.find_roots(1e-12).unwrap();
        assert_eq!(rs.total_multiplicity(), 3);
        for r in &rs.roots {
            let th = r.location.arg();
            let expected = c(th.cos(), th.sin());
            assert!((r.location - expected).norm() < 1e-10);
            assert!((r.location.powu(3) - c(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn multiplicities_sum_to_degree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for deg in 1..=6 {
            let p = ComplexPolynomial::new(
                (0..=deg)
                    .map(|k| {
                        if k == deg {
                            c(1.0, 0.0)
                        } else {
                            c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))
                        }
                    })
                    .collect(),
            );
            let rs = p.find_roots(1e-10).unwrap();
            assert_eq!(rs.total_multiplicity(), deg);
            for r in &rs.roots {
                let res = p.eval(r.location).norm();
                let bound = 1e-10 * p.max_coeff_norm() * (1.0_f64.max(r.location.norm())).powi(deg as i32);
                assert!(res <= bound.max(1e-8), "residual {res} vs bound {bound}");
            }
        }
    }

    #[test]
    fn directions_square() {
        // P = z^2: square roots of -1
        let p = ComplexPolynomial::monomial(2);
        let d = p.asymptotic_directions();
        assert_eq!(d.len(), 2);
        assert!((d[0] - c(0.0, 1.0)).norm() < 1e-12);
        assert!((d[1] - c(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn directions_linear() {
        let p = ComplexPolynomial::monomial(1);
        let d = p.asymptotic_directions();
        assert_eq!(d.len(), 1);
        assert!((d[0] - c(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn directions_scaled_cubic() {
        // P = 2 z^3: all |rho| = 2^(-1/3), arguments pi/3 + 2pi k/3
        let p = ComplexPolynomial::new(vec![c(0.0, 0.0); 3].into_iter().chain([c(2.0, 0.0)]).collect());
        let d = p.asymptotic_directions();
        assert_eq!(d.len(), 3);
        let r = 2.0_f64.powf(-1.0 / 3.0);
        for (k, rho) in d.iter().enumerate() {
            assert!((rho.norm() - r).abs() < 1e-12);
            let th = std::f64::consts::PI / 3.0 + 2.0 * std::f64::consts::PI * k as f64 / 3.0;
            let expected = r * c(th.cos(), th.sin());
            assert!((rho - expected).norm() < 1e-12);
        }
        // d-th power times (-a_d) equals 1
        for rho in &d {
            assert!((rho.powu(3) * c(-2.0, 0.0) - c(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn serde_round_trip() {
        let p = ComplexPolynomial::from_real(&[-1.0, 0.0, 1.0]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, "[[-1.0,0.0],[0.0,0.0],[1.0,0.0]]");
        let q: ComplexPolynomial = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
    }
}
