//! Generalized Schwarz-Christoffel maps for log-polygons with ends at
//! infinity: evaluation of the integral form, the rational nonlinearity
//! and Schwarzian validators, approximating-polygon specs with large
//! vertex angles, and a symmetric accessory-parameter solver.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::EntireMap;
use crate::quad;

const PI: f64 = std::f64::consts::PI;

/// Prevertex on the unit circle mapped to a finite vertex with interior
/// angle pi*alpha.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SCVertex {
    #[serde(with = "crate::complex_serde")]
    pub z: Complex64,
    pub alpha: f64,
}

/// Prevertex on the unit circle mapped to an end at infinity with angle
/// datum beta.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SCEnd {
    #[serde(with = "crate::complex_serde")]
    pub z: Complex64,
    pub beta: f64,
}

/// Integral-form spec: F(z) = A * int_0^z prod (t-z_k)^{alpha_k-1}
/// prod (t-z'_j)^{-beta_j-1} dt + B, with nonlinearity constant C.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SCMapSpec {
    pub vertices: Vec<SCVertex>,
    pub ends: Vec<SCEnd>,
    #[serde(rename = "A", with = "crate::complex_serde")]
    pub a: Complex64,
    #[serde(rename = "B", with = "crate::complex_serde")]
    pub b: Complex64,
    #[serde(rename = "C", with = "crate::complex_serde")]
    pub c: Complex64,
}

impl SCMapSpec {
    pub fn new(
        vertices: Vec<SCVertex>,
        ends: Vec<SCEnd>,
        a: Complex64,
        b: Complex64,
        c: Complex64,
    ) -> Result<Self> {
        if a.norm() == 0.0 {
            return Err(Error::InvalidInput("A must be nonzero".into()));
        }
        let mut all: Vec<Complex64> = Vec::new();
        for v in &vertices {
            if v.alpha <= 0.0 {
                return Err(Error::InvalidInput(format!("alpha = {} must be > 0", v.alpha)));
            }
            all.push(v.z);
        }
        for e in &ends {
            if e.beta < 0.0 {
                return Err(Error::InvalidInput(format!("beta = {} must be >= 0", e.beta)));
            }
            all.push(e.z);
        }
        for z in &all {
            if (z.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!("prevertex {z} is off the unit circle")));
            }
        }
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                if (all[i] - all[j]).norm() < 1e-9 {
                    return Err(Error::PrevertexCollision { z: all[i] });
                }
            }
        }
        Ok(Self { vertices, ends, a, b, c })
    }
}

/// Target-side description of a log-polygon: finite vertices with their
/// interior angles (possibly above 2 pi at ramification points) plus the
/// angle data of the ends at infinity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogPolygonSpec {
    pub vertices: Vec<LogPolygonVertex>,
    /// Interior angle datum of each end at infinity.
    pub end_angles: Vec<f64>,
    pub symmetry_order: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LogPolygonVertex {
    #[serde(with = "crate::complex_serde")]
    pub w: Complex64,
    pub angle: f64,
}

impl LogPolygonSpec {
    pub fn new(
        vertices: Vec<LogPolygonVertex>,
        end_angles: Vec<f64>,
        symmetry_order: usize,
    ) -> Result<Self> {
        if vertices.is_empty() && end_angles.is_empty() {
            return Err(Error::InvalidInput("log-polygon needs at least one angle datum".into()));
        }
        if symmetry_order < 1 {
            return Err(Error::InvalidInput("symmetry order must be >= 1".into()));
        }
        if vertices.iter().any(|v| v.angle <= 0.0) || end_angles.iter().any(|&a| a < 0.0) {
            return Err(Error::InvalidInput("angles must be positive (ends: nonnegative)".into()));
        }
        Ok(Self { vertices, end_angles, symmetry_order })
    }
}

/// Rational-Schwarzian data: prevertices z_k with angles 2*pi*alpha_k and
/// accessory constants beta_k. This type is a validator input only; note
/// the angle convention differs from SCMapSpec's pi*alpha_k.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchwarzianSpec {
    pub prevertices: Vec<SchwarzianPrevertex>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SchwarzianPrevertex {
    #[serde(with = "crate::complex_serde")]
    pub z: Complex64,
    pub alpha: f64,
    #[serde(with = "crate::complex_serde")]
    pub beta: Complex64,
}

/// The three accessory relations of the rational Schwarzian: vanishing of
/// the 1/z, 1/z^2 and 1/z^3 coefficients of the expansion at infinity.
pub fn sc_schwarzian_residuals(spec: &SchwarzianSpec) -> (f64, f64, f64) {
    let mut s1 = Complex64::new(0.0, 0.0);
    let mut s2 = Complex64::new(0.0, 0.0);
    let mut s3 = Complex64::new(0.0, 0.0);
    for p in &spec.prevertices {
        let one_minus_a2 = 1.0 - p.alpha * p.alpha;
        s1 += p.beta;
        s2 += 2.0 * p.beta * p.z + one_minus_a2;
        s3 += p.beta * p.z * p.z + one_minus_a2 * p.z;
    }
    (s1.norm(), s2.norm(), s3.norm())
}

/// log of the SC integrand at t, branch-safe inside the disk: each factor
/// (t - c) with |c| = 1 is written c'*(1 - t/c) so the principal log of
/// (1 - t/c) stays in the right half plane for |t| < 1. `skip` drops the
/// (1 - t/z_k) part of one vertex factor (used for endpoint
/// desingularization).
fn log_integrand(spec: &SCMapSpec, t: Complex64, skip: Option<usize>) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, v) in spec.vertices.iter().enumerate() {
        let e = v.alpha - 1.0;
        acc += e * neg_ln(v.z);
        if skip != Some(k) {
            acc += e * (Complex64::new(1.0, 0.0) - t / v.z).ln();
        }
    }
    for end in &spec.ends {
        let e = -end.beta - 1.0;
        acc += e * neg_ln(end.z);
        acc += e * (Complex64::new(1.0, 0.0) - t / end.z).ln();
    }
    acc
}

/// Log(-z) with the arg of a negative real normalized to +pi (negating
/// z = 1 + 0i yields -1 - 0i, whose principal arg would flip to -pi).
fn neg_ln(z: Complex64) -> Complex64 {
    let w = Complex64::new(-z.re, if z.im == 0.0 { 0.0 } else { -z.im });
    w.ln()
}

/// The SC integrand A-free: prod (t-z_k)^{alpha_k-1} prod (t-z'_j)^{-beta_j-1}.
pub fn sc_integrand(spec: &SCMapSpec, t: Complex64) -> Complex64 {
    log_integrand(spec, t, None).exp()
}

pub fn sc_eval(spec: &SCMapSpec, z: Complex64) -> Result<Complex64> {
    sc_eval_tol(spec, z, 1e-12)
}

/// Evaluates the integral form along the radial path [0, z]. A vertex
/// endpoint is handled by the substitution u = (1-tau)^alpha on the last
/// stretch, which absorbs the power-law factor exactly.
pub fn sc_eval_tol(spec: &SCMapSpec, z: Complex64, tol: f64) -> Result<Complex64> {
    if z.norm() > 1.0 + 1e-9 {
        return Err(Error::InvalidInput(format!("z = {z} is outside the closed unit disk")));
    }
    for end in &spec.ends {
        if (z - end.z).norm() < 1e-9 {
            return Err(Error::EndpointDivergence { z: end.z });
        }
    }
    let at_vertex = spec.vertices.iter().position(|v| (z - v.z).norm() < 1e-9);

    // floor the absolute tolerance at the roundoff scale of the integrand,
    // probing both uniformly and geometrically toward the endpoint
    let probes = (1..=7)
        .map(|i| i as f64 / 8.0)
        .chain((3..=12).map(|i| 1.0 - 0.5_f64.powi(i)));
    let scale = probes
        .map(|s| sc_integrand(spec, z * s).norm())
        .fold(1.0_f64, f64::max)
        * z.norm();
    let tol = tol.max(5e-14 * scale);

    let integral = match at_vertex {
        None => quad::integrate_plain(
            &|t| sc_integrand(spec, t),
            Complex64::new(0.0, 0.0),
            z,
            tol,
        )?,
        Some(k) => {
            // snap to the prevertex; split the path at tau = 1 - eta
            let zk = spec.vertices[k].z;
            let alpha = spec.vertices[k].alpha;
            let eta = 0.5_f64;
            let main = quad::integrate_plain(
                &|t| sc_integrand(spec, t),
                Complex64::new(0.0, 0.0),
                (1.0 - eta) * zk,
                tol,
            )?;
            // int_{1-eta}^1 s(tau)(1-tau)^{alpha-1} dtau with
            // s(tau) = g(tau z_k)/(1-tau)^{alpha-1}; substituting
            // 1-tau = sigma^p gives p sigma^{p alpha - 1} s(1-sigma^p),
            // with p chosen so the exponent is a nonnegative integer
            // (or at least >= 2) and the integrand stays smooth at 0
            let p = if (alpha - alpha.round()).abs() < 1e-12 {
                1u32
            } else if (2.0 * alpha - (2.0 * alpha).round()).abs() < 1e-12 {
                2u32
            } else {
                ((3.0 / alpha).ceil() as u32).max(1)
            };
            let pf = f64::from(p);
            let expo = pf * alpha - 1.0;
            let smooth = |sigma: Complex64| -> Complex64 {
                let tau = 1.0 - sigma.powu(p);
                pf * sigma.powf(expo) * zk * log_integrand(spec, tau * zk, Some(k)).exp()
            };
            let tail = quad::integrate_plain(
                &smooth,
                Complex64::new(0.0, 0.0),
                Complex64::new(eta.powf(1.0 / pf), 0.0),
                tol,
            )?;
            main + tail
        }
    };
    Ok(spec.a * integral + spec.b)
}

/// Exact logarithmic derivative of the SC integrand plus the constant C.
pub fn sc_nonlinearity(spec: &SCMapSpec, z: Complex64) -> Result<Complex64> {
    let mut acc = spec.c;
    for v in &spec.vertices {
        if (z - v.z).norm() < 1e-12 {
            return Err(Error::PoleAtPrevertex { z: v.z });
        }
        acc += (v.alpha - 1.0) / (z - v.z);
    }
    for end in &spec.ends {
        if (z - end.z).norm() < 1e-12 {
            return Err(Error::PoleAtPrevertex { z: end.z });
        }
        acc += (-end.beta - 1.0) / (z - end.z);
    }
    Ok(acc)
}

/// The approximating log-polygon D_N for the degree-d Gauss surface: d
/// finite prevertices u*omega^k and d end prevertices v*omega^j, all with
/// angle 2*pi*(2N+1), i.e. alpha_k = beta_j = 2(2N+1).
pub fn build_dn_spec(d: usize, n: usize, u: Complex64, v: Complex64) -> Result<SCMapSpec> {
    if d < 1 || n < 1 {
        return Err(Error::InvalidInput("need d >= 1 and N >= 1".into()));
    }
    let exponent = 2.0 * (2 * n + 1) as f64;
    let omega = Complex64::from_polar(1.0, 2.0 * PI / d as f64);
    let mut vertices = Vec::with_capacity(d);
    let mut ends = Vec::with_capacity(d);
    let mut wk = Complex64::new(1.0, 0.0);
    for _ in 0..d {
        vertices.push(SCVertex { z: u * wk, alpha: exponent });
        ends.push(SCEnd { z: v * wk, beta: exponent });
        wk *= omega;
    }
    SCMapSpec::new(vertices, ends, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
}

/// Result of the symmetric accessory-parameter solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymmetricSolve {
    pub spec: SCMapSpec,
    pub residual: f64,
    /// Solved relative phase arg(v/u) between end and vertex prevertices.
    pub theta: f64,
    pub iterations: usize,
}

pub fn solve_symmetric_parameters(map: &EntireMap, n: usize) -> Result<SymmetricSolve> {
    solve_symmetric_parameters_tol(map, n, 1e-10)
}

/// Solves for (arg(v/u), A) of the D_N spec so that the vertex image
/// matches the first asymptotic value of the Gauss map and the map
/// commutes with conjugation. B = 0 is forced by F(0) = 0; the vertex
/// phase is fixed at u = e^{i pi / d} so that the prevertex set is closed
/// under conjugation.
pub fn solve_symmetric_parameters_tol(
    map: &EntireMap,
    n: usize,
    quad_tol: f64,
) -> Result<SymmetricSolve> {
    let d = map.d();
    let gauss_like = d >= 1
        && map.q().degree() == 0
        && (map.q().coeff(0) - Complex64::new(1.0, 0.0)).norm() < 1e-12
        && (map.p().leading_coeff() - Complex64::new(1.0, 0.0)).norm() < 1e-12
        && map.p().coeffs()[..d].iter().all(|c| c.norm() < 1e-12);
    if !gauss_like {
        return Err(Error::InvalidInput("symmetric solver requires P = z^d, Q = 1".into()));
    }
    let a1 = map.asymptotic_value(1)?.w;
    let u = Complex64::from_polar(1.0, PI / d as f64);
    let test_point = Complex64::new(0.37, 0.41);

    // residual vector of the three conditions: vertex image, reflection
    // symmetry at a generic interior point (F(0) = 0 holds identically)
    let residuals = |theta: f64, a: Complex64| -> Result<[f64; 4]> {
        let v = u * Complex64::from_polar(1.0, theta);
        let mut spec = build_dn_spec(d, n, u, v)?;
        spec.a = a;
        let at_vertex = sc_eval_tol(&spec, u, quad_tol)?;
        let fw = sc_eval_tol(&spec, test_point, quad_tol)?;
        let fc = sc_eval_tol(&spec, test_point.conj(), quad_tol)?;
        let r1 = at_vertex - a1;
        let r2 = fc - fw.conj();
        Ok([r1.re, r1.im, r2.re, r2.im])
    };
    let norm = |r: &[f64; 4]| r.iter().map(|x| x * x).sum::<f64>().sqrt();
    let max_abs = |r: &[f64; 4]| r.iter().fold(0.0_f64, |m, x| m.max(x.abs()));

    // initial phase from the d-fold geometry (ends bisect vertices);
    // initial A scales the unit-A vertex image onto a1
    let mut theta = PI / d as f64;
    let unit_spec = build_dn_spec(d, n, u, u * Complex64::from_polar(1.0, theta))?;
    let image = sc_eval_tol(&unit_spec, u, quad_tol)?;
    if image.norm() < 1e-280 {
        return Err(Error::SolverDivergence { residual: f64::INFINITY });
    }
    let mut a = a1 / image;

    let mut r = residuals(theta, a)?;
    let mut best = (theta, a, r);
    let mut iterations = 0usize;
    for iter in 0..40 {
        iterations = iter + 1;
        if max_abs(&best.2) < 1e-9 {
            break;
        }
        let (theta0, a0, r0) = (best.0, best.1, best.2);
        // forward-difference Jacobian in (theta, Re A, Im A)
        let h = 1e-6;
        let jt = residuals(theta0 + h, a0)?;
        let jr = residuals(theta0, a0 + Complex64::new(h, 0.0))?;
        let ji = residuals(theta0, a0 + Complex64::new(0.0, h))?;
        let mut jac = [[0.0_f64; 3]; 4];
        for i in 0..4 {
            jac[i][0] = (jt[i] - r0[i]) / h;
            jac[i][1] = (jr[i] - r0[i]) / h;
            jac[i][2] = (ji[i] - r0[i]) / h;
        }
        let step = least_squares_step(&jac, &r0)
            .ok_or(Error::SolverDivergence { residual: norm(&r0) })?;
        // damped update
        let mut lambda = 1.0_f64;
        let mut improved = false;
        for _ in 0..12 {
            let theta_try = theta0 - lambda * step[0];
            let a_try = a0 - lambda * Complex64::new(step[1], step[2]);
            if let Ok(r_try) = residuals(theta_try, a_try) {
                if norm(&r_try) < norm(&r0) {
                    theta = theta_try;
                    a = a_try;
                    r = r_try;
                    best = (theta, a, r);
                    improved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }

    let residual = max_abs(&best.2);
    if residual > 1e-4 {
        return Err(Error::SolverDivergence { residual });
    }
    let v = u * Complex64::from_polar(1.0, best.0);
    let mut spec = build_dn_spec(d, n, u, v)?;
    spec.a = best.1;
    Ok(SymmetricSolve { spec, residual, theta: best.0, iterations })
}

/// Solves J^T J x = J^T r for the 4x3 system by Cramer on the normal
/// equations.
fn least_squares_step(jac: &[[f64; 3]; 4], r: &[f64; 4]) -> Option<[f64; 3]> {
    let mut jtj = [[0.0_f64; 3]; 3];
    let mut jtr = [0.0_f64; 3];
    for c in 0..3 {
        for c2 in 0..3 {
            jtj[c][c2] = (0..4).map(|i| jac[i][c] * jac[i][c2]).sum();
        }
        jtr[c] = (0..4).map(|i| jac[i][c] * r[i]).sum();
    }
    let det3 = |m: &[[f64; 3]; 3]| -> f64 {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let den = det3(&jtj);
    if den.abs() < 1e-300 {
        return None;
    }
    let mut x = [0.0_f64; 3];
    for c in 0..3 {
        let mut m = jtj;
        for row in 0..3 {
            m[row][c] = jtr[row];
        }
        x[c] = det3(&m) / den;
    }
    Some(x)
}

/// The wedge map ((1+z)/(1-z))^alpha as an SC spec: one finite prevertex
/// at -1 (angle pi*alpha), one end prevertex at +1, A = 2 alpha e^{i pi
/// (alpha+1)} from the derivative identity and B = 1 from F(0) = 1, so
/// the spec reproduces the closed form exactly.
pub fn wedge_spec(alpha: f64) -> Result<SCMapSpec> {
    let a = 2.0 * alpha * Complex64::from_polar(1.0, PI * (alpha + 1.0));
    SCMapSpec::new(
        vec![SCVertex { z: Complex64::new(-1.0, 0.0), alpha }],
        vec![SCEnd { z: Complex64::new(1.0, 0.0), beta: alpha }],
        a,
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
    )
}

/// Closed form matched by `wedge_spec`.
pub fn wedge_closed_form(alpha: f64, z: Complex64) -> Complex64 {
    ((Complex64::new(1.0, 0.0) + z) / (Complex64::new(1.0, 0.0) - z)).powc(Complex64::new(alpha, 0.0))
}

/// Straightness report for one boundary arc between consecutive
/// prevertices: the image of the arc is a straight segment/half-line iff
/// arg(F'(e^{i th}) i e^{i th}) is constant along it.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SideStraightness {
    pub from_arg: f64,
    pub to_arg: f64,
    /// Largest wrapped change of the image direction along the side.
    pub max_bend: f64,
    pub pass: bool,
}

/// Checks every boundary side of an SC spec for straightness, sampling
/// interior points of each prevertex-to-prevertex arc with a margin so
/// the integrand poles/zeros at the prevertices are avoided.
pub fn boundary_straightness(spec: &SCMapSpec, tol: f64) -> Result<Vec<SideStraightness>> {
    let mut angles: Vec<f64> = spec
        .vertices
        .iter()
        .map(|v| v.z.arg())
        .chain(spec.ends.iter().map(|e| e.z.arg()))
        .collect();
    if angles.is_empty() {
        return Ok(Vec::new());
    }
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = angles.len();
    let mut sides = Vec::with_capacity(n);
    for i in 0..n {
        let from = angles[i];
        let to = if i + 1 < n { angles[i + 1] } else { angles[0] + 2.0 * PI };
        let span = to - from;
        let mut max_bend = 0.0_f64;
        let mut prev: Option<f64> = None;
        for j in 1..24 {
            let th = from + span * (0.06 + 0.88 * j as f64 / 24.0);
            let z = Complex64::from_polar(1.0, th);
            let fp = spec.a * sc_integrand(spec, z);
            if !fp.is_finite() || fp.norm() < 1e-300 {
                continue;
            }
            let dir = (fp * Complex64::new(0.0, 1.0) * z).arg();
            if let Some(p) = prev {
                let mut diff = (dir - p).abs();
                if diff > PI {
                    diff = 2.0 * PI - diff;
                }
                max_bend = max_bend.max(diff);
            }
            prev = Some(dir);
        }
        sides.push(SideStraightness {
            from_arg: from,
            to_arg: if to > PI { to - 2.0 * PI } else { to },
            max_bend,
            pass: max_bend <= tol,
        });
    }
    Ok(sides)
}

/// Analytically derived Schwarzian data of the wedge map: {F, z} =
/// 2(1-alpha^2)/(1-z^2)^2, whose partial fractions give accessory
/// constants +-(1-alpha^2)/2 at -+1.
pub fn wedge_schwarzian_spec(alpha: f64) -> SchwarzianSpec {
    let beta = (1.0 - alpha * alpha) / 2.0;
    SchwarzianSpec {
        prevertices: vec![
            SchwarzianPrevertex {
                z: Complex64::new(-1.0, 0.0),
                alpha,
                beta: Complex64::new(beta, 0.0),
            },
            SchwarzianPrevertex {
                z: Complex64::new(1.0, 0.0),
                alpha,
                beta: Complex64::new(-beta, 0.0),
            },
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn empty_spec_is_identity() {
        let spec = SCMapSpec::new(vec![], vec![], c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)).unwrap();
        for z in [c(0.3, 0.1), c(-0.5, 0.6), c(0.0, 0.9)] {
            let f = sc_eval(&spec, z).unwrap();
            assert!((f - z).norm() < 1e-12);
        }
    }

    #[test]
    fn unit_alpha_gives_affine_map() {
        let spec = SCMapSpec::new(
            vec![
                SCVertex { z: c(0.0, 1.0), alpha: 1.0 },
                SCVertex { z: c(0.0, -1.0), alpha: 1.0 },
            ],
            vec![],
            c(2.0, 1.0),
            c(0.5, -0.25),
            c(0.0, 0.0),
        )
        .unwrap();
        for z in [c(0.4, 0.2), c(-0.7, 0.1)] {
            let f = sc_eval(&spec, z).unwrap();
            assert!((f - (c(2.0, 1.0) * z + c(0.5, -0.25))).norm() < 1e-11);
        }
    }

    #[test]
    fn wedge_matches_closed_form() {
        for alpha in [3.0, 0.5] {
            let spec = wedge_spec(alpha).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let mut worst = 0.0_f64;
            for _ in 0..60 {
                let r = 0.9 * rng.gen::<f64>().sqrt();
                let phi = 2.0 * PI * rng.gen::<f64>();
                let z = Complex64::from_polar(r, phi);
                let err = (sc_eval(&spec, z).unwrap() - wedge_closed_form(alpha, z)).norm();
                worst = worst.max(err);
            }
            assert!(worst < 1e-8, "alpha {alpha}: sup error {worst:.3e}");
        }
    }

    #[test]
    fn nonlinearity_formula_and_numeric_log_derivative() {
        let spec = wedge_spec(3.0).unwrap();
        // closed value at 0: (3-1)/(0+1) + (-3-1)/(0-1) = 6
        let at0 = sc_nonlinearity(&spec, c(0.0, 0.0)).unwrap();
        assert!((at0 - c(6.0, 0.0)).norm() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = 1e-5;
        for _ in 0..20 {
            let z = Complex64::from_polar(0.6 * rng.gen::<f64>(), 2.0 * PI * rng.gen::<f64>());
            let numeric =
                (log_integrand(&spec, z + h, None) - log_integrand(&spec, z - h, None)) / (2.0 * h);
            let exact = sc_nonlinearity(&spec, z).unwrap();
            assert!((numeric - exact).norm() < 1e-6, "at {z}");
        }
    }

    #[test]
    fn nonlinearity_pole_and_empty_cases() {
        let spec = wedge_spec(2.0).unwrap();
        assert!(matches!(
            sc_nonlinearity(&spec, c(-1.0, 0.0)),
            Err(Error::PoleAtPrevertex { .. })
        ));
        let empty =
            SCMapSpec::new(vec![], vec![], c(1.0, 0.0), c(0.0, 0.0), c(0.25, -1.5)).unwrap();
        assert_eq!(sc_nonlinearity(&empty, c(0.1, 0.2)).unwrap(), c(0.25, -1.5));
    }

    #[test]
    fn eval_at_end_prevertex_diverges() {
        let spec = wedge_spec(3.0).unwrap();
        assert!(matches!(
            sc_eval(&spec, c(1.0, 0.0)),
            Err(Error::EndpointDivergence { .. })
        ));
        // approaching the end radially the image blows up
        let f = sc_eval(&spec, c(0.999, 0.0)).unwrap();
        assert!(f.norm() > 1e3);
    }

    #[test]
    fn vertex_endpoint_evaluation_is_finite() {
        // F(-1) = ((1+z)/(1-z))^3 at z=-1 is 0
        let spec = wedge_spec(3.0).unwrap();
        let f = sc_eval(&spec, c(-1.0, 0.0)).unwrap();
        assert!(f.norm() < 1e-9, "vertex image {f}");
        // fractional exponent endpoint too
        let spec = wedge_spec(0.5).unwrap();
        let f = sc_eval(&spec, c(-1.0, 0.0)).unwrap();
        assert!(f.norm() < 1e-9, "vertex image {f}");
    }

    #[test]
    fn schwarzian_residuals_of_wedge_vanish() {
        for alpha in [3.0, 0.5, 2.0] {
            let (r1, r2, r3) = sc_schwarzian_residuals(&wedge_schwarzian_spec(alpha));
            assert!(r1 < 1e-12 && r2 < 1e-12 && r3 < 1e-12, "alpha {alpha}: {r1} {r2} {r3}");
        }
    }

    #[test]
    fn schwarzian_residuals_detect_perturbation() {
        let single = SchwarzianSpec {
            prevertices: vec![SchwarzianPrevertex {
                z: c(1.0, 0.0),
                alpha: 1.0,
                beta: c(0.0, 0.0),
            }],
        };
        let (r1, r2, r3) = sc_schwarzian_residuals(&single);
        assert_eq!((r1, r2, r3), (0.0, 0.0, 0.0));

        let mut perturbed = wedge_schwarzian_spec(2.0);
        perturbed.prevertices[0].beta += c(1e-3, 0.0);
        let (r1, _, _) = sc_schwarzian_residuals(&perturbed);
        assert!((r1 - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn dn_spec_geometry() {
        let u = Complex64::from_polar(1.0, PI / 2.0);
        let v = Complex64::from_polar(1.0, PI);
        let spec = build_dn_spec(2, 1, u, v).unwrap();
        assert_eq!(spec.vertices.len(), 2);
        assert_eq!(spec.ends.len(), 2);
        assert_eq!(spec.vertices[0].alpha, 6.0);
        assert_eq!(spec.ends[0].beta, 6.0);
        // exponents alpha-1 = 5 and -beta-1 = -7
        assert!(matches!(build_dn_spec(1, 1, u, u), Err(Error::PrevertexCollision { .. })));
    }

    #[test]
    fn straight_sides_between_prevertices() {
        // the boundary arc between prevertices maps to a straight
        // segment: arg(F'(e^{i th}) i e^{i th}) is constant along it
        let spec = wedge_spec(3.0).unwrap();
        let mut args = Vec::new();
        for i in 1..20 {
            let th = PI * 0.2 + (PI * 0.6) * i as f64 / 20.0;
            let z = Complex64::from_polar(1.0, th);
            let fp = spec.a * sc_integrand(&spec, z);
            args.push((fp * c(0.0, 1.0) * z).arg());
        }
        for w in args.windows(2) {
            let mut diff = (w[1] - w[0]).abs();
            if diff > PI {
                diff = 2.0 * PI - diff;
            }
            assert!(diff < 1e-6, "side bends by {diff}");
        }
    }

    #[test]
    fn symmetric_solver_exponential_case() {
        // d=1: the e^z - 1 surface, vertex image -1
        let map = EntireMap::gauss(1);
        let solve = solve_symmetric_parameters(&map, 1).unwrap();
        assert!(solve.residual <= 1e-6, "residual {}", solve.residual);
        let vertex = sc_eval(&solve.spec, solve.spec.vertices[0].z).unwrap();
        assert!((vertex - c(-1.0, 0.0)).norm() < 1e-5, "vertex image {vertex}");
        assert!((solve.theta - PI).abs() < 1e-6, "theta {}", solve.theta);
    }

    #[test]
    fn symmetric_solver_gauss_d2() {
        let map = EntireMap::gauss(2);
        let solve = solve_symmetric_parameters(&map, 1).unwrap();
        assert!(solve.residual <= 1e-6, "residual {}", solve.residual);
        let a1 = c(0.0, 0.886226925452758);
        let v1 = sc_eval(&solve.spec, solve.spec.vertices[0].z).unwrap();
        let v2 = sc_eval(&solve.spec, solve.spec.vertices[1].z).unwrap();
        assert!((v1 - a1).norm() < 1e-5, "first vertex {v1}");
        assert!((v2 + a1).norm() < 1e-5, "second vertex {v2}");
        // nonlinearity has exactly 2d simple poles, all on the circle
        let poles: Vec<Complex64> = solve
            .spec
            .vertices
            .iter()
            .map(|v| v.z)
            .chain(solve.spec.ends.iter().map(|e| e.z))
            .collect();
        assert_eq!(poles.len(), 4);
        for p in poles {
            assert!((p.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn solver_phase_stable_under_quadrature_refinement() {
        let map = EntireMap::gauss(2);
        let coarse = solve_symmetric_parameters_tol(&map, 1, 1e-9).unwrap();
        let fine = solve_symmetric_parameters_tol(&map, 1, 1e-12).unwrap();
        assert!((coarse.theta - fine.theta).abs() <= 1e-7);
    }
}
