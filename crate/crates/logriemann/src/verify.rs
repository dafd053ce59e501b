//! The acceptance suite: every check pairs a library result with an
//! independent oracle (closed forms, the Gamma function, finite
//! differences, symmetry identities) and reports a measured value against
//! its tolerance.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::flow::{self, BBox, FlowOptions, integrate_flow_with};
use crate::foliation::{self, Landing, trace_separatrices};
use crate::map::EntireMap;
use crate::poly::ComplexPolynomial;
use crate::sc;

const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    /// What ties the check to the underlying mathematics, in words.
    pub anchor: String,
    pub pass: bool,
    pub measured: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub const CHECK_IDS: [&str; 12] = [
    "asymptotic-values",
    "closed-form-exponential",
    "rotation-reflection-symmetry",
    "flow-invariants",
    "trapping-regions",
    "separatrix-landing",
    "singularity-rays",
    "skeleton-counts",
    "nonlinearity-identity",
    "sc-wedge-oracle",
    "dn-solver",
    "beyond-desk-scale",
];

pub fn run_all() -> VerificationReport {
    VerificationReport { checks: CHECK_IDS.iter().map(|id| run_check(id).unwrap()).collect() }
}

pub fn run_check(id: &str) -> Option<Check> {
    match id {
        "asymptotic-values" => Some(check_asymptotic_values()),
        "closed-form-exponential" => Some(check_closed_form_exponential()),
        "rotation-reflection-symmetry" => Some(check_symmetries()),
        "flow-invariants" => Some(check_flow_invariants()),
        "trapping-regions" => Some(check_trapping()),
        "separatrix-landing" => Some(check_separatrix_landing()),
        "singularity-rays" => Some(check_singularity_rays()),
        "skeleton-counts" => Some(check_skeleton_counts()),
        "nonlinearity-identity" => Some(check_nonlinearity_identity()),
        "sc-wedge-oracle" => Some(check_sc_wedge()),
        "dn-solver" => Some(check_dn_solver()),
        "beyond-desk-scale" => Some(check_beyond_desk_scale()),
        _ => None,
    }
}

/// Runs the suite in the context of a user config (the config selects
/// the quadrature tolerance used by the asymptotic-value check, so a
/// deliberately loosened tolerance is caught).
pub fn run_all_with_config(config: &RunConfig) -> VerificationReport {
    let mut report = run_all();
    if let Ok(map) = EntireMap::with_tol(
        ComplexPolynomial::monomial(2),
        ComplexPolynomial::from_real(&[1.0]),
        config.map.quad_tol,
    ) {
        if let Ok(values) = map.asymptotic_values() {
            let oracle = PI.sqrt() / 2.0;
            let measured = values
                .iter()
                .map(|v| (v.w.norm() - oracle).abs().max(v.tail_bound))
                .fold(0.0_f64, f64::max);
            let tolerance = 1e-8;
            if let Some(check) = report.checks.iter_mut().find(|c| c.id == "asymptotic-values") {
                if measured > tolerance {
                    check.pass = false;
                    check.measured = measured;
                    check.note =
                        Some("config quadrature tolerance too loose for the target".into());
                }
            }
        }
    }
    report
}

// ---------------------------------------------------------------------
// deterministic sampling (splitmix64)

struct Sampler(u64);

impl Sampler {
    fn new(seed: u64) -> Self {
        Self(seed)
    }

    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    fn f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in a disk of the given radius.
    fn in_disk(&mut self, radius: f64) -> Complex64 {
        let r = radius * self.f64().sqrt();
        let phi = 2.0 * PI * self.f64();
        Complex64::from_polar(r, phi)
    }
}

/// Lanczos approximation of Gamma on the positive reals; the independent
/// oracle for the ray-integral values.
pub fn gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = G[0];
    for (i, &g) in G.iter().enumerate().skip(1) {
        acc += g / (x + i as f64);
    }
    let t = x + 7.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

fn check(id: &str, anchor: &str, measured: f64, tolerance: f64) -> Check {
    Check {
        id: id.into(),
        anchor: anchor.into(),
        pass: measured.is_finite() && measured <= tolerance,
        measured,
        tolerance,
        note: None,
    }
}

fn failed(id: &str, anchor: &str, tolerance: f64, note: String) -> Check {
    Check {
        id: id.into(),
        anchor: anchor.into(),
        pass: false,
        measured: f64::INFINITY,
        tolerance,
        note: Some(note),
    }
}

// ---------------------------------------------------------------------
// the twelve checks

fn check_asymptotic_values() -> Check {
    let id = "asymptotic-values";
    let anchor = "ray integrals of exp(z^d) against the Gamma-function oracle";
    let tol = 1e-8;
    let mut worst = 0.0_f64;

    // d = 2: values +-i sqrt(pi)/2
    let map = EntireMap::gauss(2);
    let values = match map.asymptotic_values() {
        Ok(v) => v,
        Err(e) => return failed(id, anchor, tol, e.to_string()),
    };
    let target = Complex64::new(0.0, PI.sqrt() / 2.0);
    worst = worst
        .max((values[0].w - target).norm())
        .max((values[1].w + target).norm());

    // d = 3: moduli Gamma(4/3), arguments pi/3, pi, 5pi/3
    let map = EntireMap::gauss(3);
    let values = match map.asymptotic_values() {
        Ok(v) => v,
        Err(e) => return failed(id, anchor, tol, e.to_string()),
    };
    let modulus = gamma(4.0 / 3.0);
    for (i, v) in values.iter().enumerate() {
        let arg = PI / 3.0 + 2.0 * PI * i as f64 / 3.0;
        let target = Complex64::from_polar(modulus, arg);
        worst = worst.max((v.w - target).norm());
    }
    check(id, anchor, worst, tol)
}

fn check_closed_form_exponential() -> Check {
    let id = "closed-form-exponential";
    let anchor = "F for P=z, Q=1 against the closed form exp(z)-1";
    let tol = 1e-10;
    let map = EntireMap::gauss(1);
    let mut sampler = Sampler::new(1);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let z = sampler.in_disk(3.0);
        match map.eval_f(z) {
            Ok(f) => worst = worst.max((f - (z.exp() - 1.0)).norm()),
            Err(e) => return failed(id, anchor, tol, e.to_string()),
        }
    }
    check(id, anchor, worst, tol)
}

fn check_symmetries() -> Check {
    let id = "rotation-reflection-symmetry";
    let anchor = "rotation equivariance and reflection symmetry of the degree-d maps";
    let tol = 1e-10;
    let mut worst = 0.0_f64;
    for d in [2usize, 3] {
        let map = EntireMap::gauss(d);
        let omega = Complex64::from_polar(1.0, 2.0 * PI / d as f64);
        let mut sampler = Sampler::new(d as u64);
        for _ in 0..100 {
            let z = sampler.in_disk(2.0);
            let f = match map.eval_f(z) {
                Ok(f) => f,
                Err(e) => return failed(id, anchor, tol, e.to_string()),
            };
            let rotated = match map.eval_f(omega * z) {
                Ok(f) => f,
                Err(e) => return failed(id, anchor, tol, e.to_string()),
            };
            let reflected = match map.eval_f(z.conj()) {
                Ok(f) => f,
                Err(e) => return failed(id, anchor, tol, e.to_string()),
            };
            worst = worst.max((rotated - omega * f).norm());
            worst = worst.max((reflected - f.conj()).norm());
        }
    }
    check(id, anchor, worst, tol)
}

fn check_flow_invariants() -> Check {
    let id = "flow-invariants";
    let anchor = "constant Im F, increasing Re F and unit speed along traced level curves";
    let tol = 1e-6;
    let map = EntireMap::gauss(3);
    let opts = FlowOptions { tol: 1e-11, f_prime_cap: 1e3, ..FlowOptions::default() };
    let mut sampler = Sampler::new(4);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let z0 = sampler.in_disk(1.0);
        let curve = match integrate_flow_with(&map, z0, (-20.0, 20.0), opts) {
            Ok(c) => c,
            Err(e) => return failed(id, anchor, tol, e.to_string()),
        };
        worst = worst.max(curve.im_drift());
        let fs = curve.f_values.as_ref().unwrap();
        for w in fs.windows(2) {
            if w[1].re <= w[0].re {
                return failed(id, anchor, tol, format!("Re F not increasing near {}", w[0]));
            }
        }
        for w in curve.samples.windows(2) {
            let dt = w[1].t - w[0].t;
            if dt > 1e-12 {
                worst = worst.max(((w[1].z - w[0].z).norm() / dt - 1.0).abs());
            }
        }
    }
    check(id, anchor, worst, tol)
}

fn check_trapping() -> Check {
    let id = "trapping-regions";
    let anchor = "forward/backward invariance of the hyperbolic bands of Im z^2";
    let map = EntireMap::gauss(2);
    let opts = FlowOptions { carry_f: false, ..FlowOptions::default() };
    let mut sampler = Sampler::new(5);
    let mut violations = 0usize;
    for mirrored in [false, true] {
        for _ in 0..50 {
            let level = 2.0 * PI + 0.1 + (PI - 0.2) * sampler.f64();
            let x = 1.0 + 2.0 * sampler.f64();
            let mut z0 = Complex64::new(x, level / (2.0 * x));
            let mut span = (0.0, 50.0);
            if mirrored {
                z0 = z0.conj();
                span = (-50.0, 0.0);
            }
            let curve = match integrate_flow_with(&map, z0, span, opts) {
                Ok(c) => c,
                Err(_) => {
                    violations += 1;
                    continue;
                }
            };
            for s in &curve.samples {
                let band = (s.z * s.z).im * if mirrored { -1.0 } else { 1.0 };
                if !(2.0 * PI..3.0 * PI).contains(&band) {
                    violations += 1;
                    break;
                }
            }
        }
    }
    check(id, anchor, violations as f64, 0.0)
}

fn check_separatrix_landing() -> Check {
    let id = "separatrix-landing";
    let anchor = "first boundary curve lands at the first ray value; sides map to opposite half-planes";
    let tol = 1e-6;
    let map = EntireMap::gauss(2);
    let bbox = BBox::square(4.0);
    let set = match trace_separatrices(&map, 1, bbox) {
        Ok(s) => s,
        Err(e) => return failed(id, anchor, tol, e.to_string()),
    };
    let a1 = Complex64::new(0.0, PI.sqrt() / 2.0);
    let Some((sep, positive)) = set.separatrices.iter().find_map(|sep| {
        for (end, positive) in [(sep.neg, false), (sep.pos, true)] {
            if matches!(end, Landing::Asymptotic { p: 1, .. }) {
                return Some((sep, positive));
            }
        }
        None
    }) else {
        return failed(id, anchor, tol, "no separatrix landing at ray 1".into());
    };
    let f_end = sep.end_f(positive).unwrap();
    // independent oracle: direct quadrature of F at the end point
    let z_end = if positive { sep.curve.last().z } else { sep.curve.first().z };
    let f_direct = match map.eval_f(z_end) {
        Ok(f) => f,
        Err(e) => return failed(id, anchor, tol, e.to_string()),
    };
    let landing_err = (f_end - a1).norm().max((f_direct - a1).norm());

    // the two sides of the curve carry Im F above and below Im a1
    let samples = &sep.curve.samples;
    let mut left_signs = Vec::new();
    let mut right_signs = Vec::new();
    let stride = (samples.len() / 24).max(1);
    for i in (stride..samples.len() - stride).step_by(stride) {
        let tangent = samples[i + 1].z - samples[i - 1].z;
        if tangent.norm() < 1e-12 || samples[i].z.norm() > 3.5 {
            continue;
        }
        let normal = Complex64::new(0.0, 1.0) * tangent / tangent.norm();
        for (side, signs) in
            [(0.15, &mut left_signs), (-0.15, &mut right_signs)]
        {
            if let Ok(f) = map.eval_f(samples[i].z + side * normal) {
                signs.push((f.im - a1.im).signum());
            }
        }
    }
    let consistent = |signs: &[f64]| !signs.is_empty() && signs.windows(2).all(|w| w[0] == w[1]);
    if !consistent(&left_signs)
        || !consistent(&right_signs)
        || left_signs[0] == right_signs[0]
    {
        return failed(id, anchor, tol, "half-plane sign pattern violated".into());
    }
    check(id, anchor, landing_err, tol)
}

fn check_singularity_rays() -> Check {
    let id = "singularity-rays";
    let anchor = "local ray counts 2(r+1) at zeros of Q, stable in the probe radius, with analytic axis angles";
    let tol = 1e-6;
    let mut worst = 0.0_f64;
    let ps = [ComplexPolynomial::zero(), ComplexPolynomial::monomial(1)];
    let qs: [(ComplexPolynomial, Vec<(Complex64, usize)>); 3] = [
        (ComplexPolynomial::monomial(1), vec![(Complex64::new(0.0, 0.0), 1)]),
        (ComplexPolynomial::monomial(2), vec![(Complex64::new(0.0, 0.0), 2)]),
        (
            ComplexPolynomial::from_real(&[-1.0, 0.0, 1.0]),
            vec![(Complex64::new(-1.0, 0.0), 1), (Complex64::new(1.0, 0.0), 1)],
        ),
    ];
    for p in &ps {
        for (q, roots) in &qs {
            let map = match EntireMap::new(p.clone(), q.clone()) {
                Ok(m) => m,
                Err(e) => return failed(id, anchor, tol, e.to_string()),
            };
            for &(root, mult) in roots {
                let rays = match flow::singularity_rays(&map, root) {
                    Ok(r) => r,
                    Err(e) => return failed(id, anchor, tol, e.to_string()),
                };
                if rays.directions.len() != 2 * (mult + 1) {
                    return failed(
                        id,
                        anchor,
                        tol,
                        format!("{} rays at {root}", rays.directions.len()),
                    );
                }
                let halved = match flow::singularity_rays_with_epsilon(
                    &map,
                    root,
                    0.5 * 1e-3 * (1.0 + root.norm()),
                ) {
                    Ok(r) => r,
                    Err(e) => return failed(id, anchor, tol, e.to_string()),
                };
                // analytic angles: local form c (z-root)^{mult+1} with
                // c > 0 in every case here, so rays sit at k*pi/(mult+1)
                for rays in [&rays, &halved] {
                    for i in 0..2 * (mult + 1) {
                        let target = i as f64 * PI / (mult + 1) as f64;
                        worst = worst.max(rays.nearest_angle_error(target));
                    }
                }
            }
        }
    }
    check(id, anchor, worst, tol)
}

fn check_skeleton_counts() -> Check {
    let id = "skeleton-counts";
    let anchor = "infinite-node count = deg P and total finite branching = deg Q over a 12-map grid";
    let ps = [
        ComplexPolynomial::monomial(1),
        ComplexPolynomial::monomial(2),
        ComplexPolynomial::monomial(3),
        ComplexPolynomial::from_real(&[0.0, -1.0, 0.0, 1.0]),
    ];
    let qs = [
        ComplexPolynomial::from_real(&[1.0]),
        ComplexPolynomial::monomial(1),
        ComplexPolynomial::from_real(&[-1.0, 0.0, 1.0]),
    ];
    for p in &ps {
        for q in &qs {
            let map = match EntireMap::new(p.clone(), q.clone()) {
                Ok(m) => m,
                Err(e) => return failed(id, anchor, 0.0, e.to_string()),
            };
            let bbox = BBox::square(4.0);
            let result = trace_separatrices(&map, 2, bbox).and_then(|set| {
                let partition =
                    foliation::partition_window(&map, &set.separatrices, bbox, 100)?;
                foliation::build_skeleton(&map, &partition, &set.separatrices, 2)
            });
            let skeleton = match result {
                Ok(s) => s,
                Err(e) => {
                    return failed(
                        id,
                        anchor,
                        0.0,
                        format!("P deg {} Q deg {}: {e}", p.degree(), q.degree()),
                    );
                }
            };
            let infinite = skeleton.infinite_node_count();
            let branching = skeleton.finite_order_sum();
            if infinite != p.degree() || branching != q.degree() {
                return failed(
                    id,
                    anchor,
                    0.0,
                    format!(
                        "P deg {} Q deg {}: {infinite} infinite nodes, branching {branching}",
                        p.degree(),
                        q.degree()
                    ),
                );
            }
        }
    }
    check(id, anchor, 0.0, 0.0)
}

fn check_nonlinearity_identity() -> Check {
    let id = "nonlinearity-identity";
    let anchor = "closed-form P' + Q'/Q against central differences of log F'";
    let tol = 1e-6;
    let h = 1e-5;
    let ps = [
        ComplexPolynomial::monomial(1),
        ComplexPolynomial::monomial(3),
        ComplexPolynomial::from_real(&[0.0, -1.0, 0.0, 1.0]),
    ];
    let qs = [
        ComplexPolynomial::from_real(&[1.0]),
        ComplexPolynomial::monomial(1),
        ComplexPolynomial::from_real(&[-1.0, 0.0, 1.0]),
    ];
    let mut worst = 0.0_f64;
    let mut sampler = Sampler::new(9);
    for p in &ps {
        for q in &qs {
            let map = match EntireMap::new(p.clone(), q.clone()) {
                Ok(m) => m,
                Err(e) => return failed(id, anchor, tol, e.to_string()),
            };
            let mut taken = 0usize;
            while taken < 50 {
                let z = sampler.in_disk(2.0);
                if map.q_roots().iter().any(|r| (z - r.location).norm() <= 0.1) {
                    continue;
                }
                taken += 1;
                let exact = match map.nonlinearity(z) {
                    Ok(v) => v,
                    Err(e) => return failed(id, anchor, tol, e.to_string()),
                };
                // log F' = P + log Q; the ratio form keeps the branch safe
                let dp = map.p().eval(z + h) - map.p().eval(z - h);
                let dq = (map.q().eval(z + h) / map.q().eval(z - h)).ln();
                let numeric = (dp + dq) / (2.0 * h);
                worst = worst.max((numeric - exact).norm());
            }
        }
    }
    check(id, anchor, worst, tol)
}

fn check_sc_wedge() -> Check {
    let id = "sc-wedge-oracle";
    let anchor = "integral-form evaluation against the closed wedge map and its Schwarzian data";
    let tol = 1e-8;
    let mut worst = 0.0_f64;
    for alpha in [3.0, 0.5] {
        let spec = match sc::wedge_spec(alpha) {
            Ok(s) => s,
            Err(e) => return failed(id, anchor, tol, e.to_string()),
        };
        let mut sampler = Sampler::new(10 + alpha as u64);
        for _ in 0..100 {
            let z = sampler.in_disk(0.9);
            match sc::sc_eval(&spec, z) {
                Ok(f) => worst = worst.max((f - sc::wedge_closed_form(alpha, z)).norm()),
                Err(e) => return failed(id, anchor, tol, e.to_string()),
            }
        }
        // nonlinearity against the numeric log-derivative of the integrand
        let h = 1e-5;
        for i in 0..20 {
            let z = Complex64::from_polar(0.5, 2.0 * PI * i as f64 / 20.0);
            let numeric = ((sc::sc_integrand(&spec, z + h) / sc::sc_integrand(&spec, z - h)).ln())
                / (2.0 * h);
            let exact = match sc::sc_nonlinearity(&spec, z) {
                Ok(v) => v,
                Err(e) => return failed(id, anchor, tol, e.to_string()),
            };
            if (numeric - exact).norm() > 1e-6 {
                return failed(id, anchor, tol, "nonlinearity mismatch".into());
            }
        }
        let (r1, r2, r3) = sc::sc_schwarzian_residuals(&sc::wedge_schwarzian_spec(alpha));
        if r1.max(r2).max(r3) > 1e-9 {
            return failed(id, anchor, tol, "Schwarzian residuals too large".into());
        }
    }
    check(id, anchor, worst, tol)
}

fn check_dn_solver() -> Check {
    let id = "dn-solver";
    let anchor = "symmetric accessory solve for the degree-2 approximating polygon";
    let tol = 1e-6;
    let map = EntireMap::gauss(2);
    let solve = match sc::solve_symmetric_parameters(&map, 1) {
        Ok(s) => s,
        Err(e) => return failed(id, anchor, tol, e.to_string()),
    };
    let a1 = Complex64::new(0.0, PI.sqrt() / 2.0);
    for (i, target) in [a1, -a1].iter().enumerate() {
        let image = match sc::sc_eval(&solve.spec, solve.spec.vertices[i].z) {
            Ok(v) => v,
            Err(e) => return failed(id, anchor, tol, e.to_string()),
        };
        if (image - target).norm() > 1e-5 {
            return failed(id, anchor, tol, format!("vertex {i} image off by {:.2e}", (image - target).norm()));
        }
    }
    let poles = solve.spec.vertices.len() + solve.spec.ends.len();
    if poles != 4 {
        return failed(id, anchor, tol, format!("{poles} poles, expected 4"));
    }
    check(id, anchor, solve.residual, tol)
}

fn check_beyond_desk_scale() -> Check {
    Check {
        id: "beyond-desk-scale".into(),
        anchor: "limit statements with no finite certificate".into(),
        pass: true,
        measured: 0.0,
        tolerance: 0.0,
        note: Some(
            "The growth of the conformal radius of the approximating polygons, their kernel \
             convergence to the full surface, and the quasi-conformal classification of the \
             maps are existence/limit statements; no finite computation certifies them. They \
             are covered only structurally, through the nonlinearity identity and the \
             approximating-polygon solve."
                .into(),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_oracle_matches_known_values() {
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-12);
        assert!((gamma(1.0) - 1.0).abs() < 1e-12);
        assert!((gamma(5.0) - 24.0).abs() < 1e-10);
        assert!((gamma(4.0 / 3.0) - 0.8929795116).abs() < 1e-9);
    }

    #[test]
    fn unknown_check_id_is_none() {
        assert!(run_check("no-such-check").is_none());
    }

    #[test]
    fn fast_checks_pass() {
        for id in ["asymptotic-values", "closed-form-exponential", "sc-wedge-oracle"] {
            let c = run_check(id).unwrap();
            assert!(c.pass, "{id}: measured {} > {}", c.measured, c.tolerance);
        }
    }
}
