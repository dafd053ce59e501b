//! The unit vector field X whose integral curves are the horizontal
//! foliation { Im F = const }, adaptive trajectory integration, transversal
//! level curves, and the local ray structure at zeros of Q.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::EntireMap;
use crate::quad;

const PI: f64 = std::f64::consts::PI;

/// Exclusion radius around a root of Q, where the field is undefined.
pub fn exclusion_radius(root: Complex64) -> f64 {
    1e-4 * (1.0 + root.norm())
}

fn nearest_q_root(map: &EntireMap, z: Complex64) -> Option<(Complex64, usize, f64)> {
    map.q_roots()
        .iter()
        .map(|r| (r.location, r.multiplicity, (z - r.location).norm()))
        .min_by(|a, b| a.2.partial_cmp(&b.2).unwrap())
}

/// The unit field X(z) = e^{-i Im P(z)} conj(Q(z)) / |Q(z)|. The conj(Q)/|Q|
/// factor is the branch-free form of e^{-i arg Q}.
pub fn field(map: &EntireMap, z: Complex64) -> Result<Complex64> {
    if let Some((root, _, dist)) = nearest_q_root(map, z) {
        if dist <= exclusion_radius(root) {
            return Err(Error::AtSingularity { root, z });
        }
    }
    let qz = map.q().eval(z);
    let im_p = map.p().eval(z).im;
    let phase = Complex64::new(0.0, -im_p).exp();
    Ok(phase * qz.conj() / qz.norm())
}

/// Curvature of the integral curve through z: |d/ds arg X| = |Im(G'(z) X(z))|
/// with G = P + log Q.
fn curvature(map: &EntireMap, z: Complex64, x: Complex64) -> f64 {
    let qz = map.q().eval(z);
    let g = map.p_prime().eval(z) + map.q_prime().eval(z) / qz;
    (g * x).im.abs()
}

/// Axis-aligned rectangle in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    #[serde(with = "crate::complex_serde")]
    pub min: Complex64,
    #[serde(with = "crate::complex_serde")]
    pub max: Complex64,
}

impl BBox {
    pub fn new(min: Complex64, max: Complex64) -> Self {
        Self { min, max }
    }

    pub fn square(half_side: f64) -> Self {
        Self {
            min: Complex64::new(-half_side, -half_side),
            max: Complex64::new(half_side, half_side),
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.min.re && z.re <= self.max.re && z.im >= self.min.im && z.im <= self.max.im
    }

    pub fn width(&self) -> f64 {
        self.max.re - self.min.re
    }

    pub fn height(&self) -> f64 {
        self.max.im - self.min.im
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }

    pub fn is_empty(&self) -> bool {
        self.width() <= 0.0 || self.height() <= 0.0
    }

    /// Grown by `pad` on every side.
    pub fn padded(&self, pad: f64) -> Self {
        Self {
            min: self.min - Complex64::new(pad, pad),
            max: self.max + Complex64::new(pad, pad),
        }
    }
}

/// Why a trajectory stopped before exhausting its arc-length budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Termination {
    /// The full requested arc length was integrated.
    BudgetReached,
    /// The step budget ran out first.
    StepBudget,
    /// The trajectory entered the exclusion ball of a root of Q.
    AtSingularity(#[serde(with = "crate::complex_serde")] Complex64),
    /// |F'| exceeded the carry cap; beyond this point the carried value of
    /// F moves too fast for the drift certificate to mean anything.
    FPrimeOverflow,
    /// The trajectory left the configured window.
    LeftWindow,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FlowSample {
    pub t: f64,
    #[serde(with = "crate::complex_serde")]
    pub z: Complex64,
}

/// A sampled integral curve of X through a seed point. `samples` are
/// (arc-length t, z) pairs in ascending t with t = 0 at the seed;
/// `f_values` carries F(z(t)) accumulated by chord quadrature when the
/// curve was integrated with `carry_f`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowCurve {
    #[serde(with = "crate::complex_serde")]
    pub seed: Complex64,
    pub samples: Vec<FlowSample>,
    pub f_values: Option<Vec<Complex64>>,
    pub t_span: (f64, f64),
    pub im_level: f64,
    pub end_neg: Termination,
    pub end_pos: Termination,
}

impl FlowCurve {
    pub fn first(&self) -> &FlowSample {
        self.samples.first().expect("flow curve has samples")
    }

    pub fn last(&self) -> &FlowSample {
        self.samples.last().expect("flow curve has samples")
    }

    /// Maximal |Im F - im_level| over the carried values.
    pub fn im_drift(&self) -> f64 {
        match &self.f_values {
            Some(fs) => fs.iter().map(|f| (f.im - self.im_level).abs()).fold(0.0, f64::max),
            None => f64::NAN,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FlowOptions {
    /// Per-step local error tolerance of the embedded RK pair.
    pub tol: f64,
    pub max_steps: usize,
    /// Stop once |F'(z)| exceeds this (only when carrying F). The drift of
    /// the carried Im F scales like |F'|·tol·renorm_every, so the cap and
    /// the tolerance together set the achievable drift bound.
    pub f_prime_cap: f64,
    /// A Newton projection back onto { Im F = im_level } every this many
    /// accepted steps.
    pub renorm_every: usize,
    /// Accumulate F along the curve by chord quadrature. Disable for long
    /// runs through regions where Re P grows without bound.
    pub carry_f: bool,
    /// Per-sample |Δz|/|Δt| stays within this of 1; enforced by capping
    /// the step at sqrt(2.4·speed_tol)/curvature (chord-versus-arc bound).
    pub speed_tol: f64,
    /// Stop (per end) once the trajectory leaves this box.
    pub window: Option<BBox>,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_steps: 2_000_000,
            f_prime_cap: 1e4,
            renorm_every: 1,
            carry_f: true,
            speed_tol: 1e-6,
            window: None,
        }
    }
}

// Dormand-Prince 5(4) coefficients (the field is autonomous, so the stage
// abscissae are not needed).
const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates the flow through `z0` over `t_span` (which must contain 0)
/// with the default options at the given step tolerance.
pub fn integrate_flow(
    map: &EntireMap,
    z0: Complex64,
    t_span: (f64, f64),
    tol: f64,
) -> Result<FlowCurve> {
    integrate_flow_with(map, z0, t_span, FlowOptions { tol, ..FlowOptions::default() })
}

pub fn integrate_flow_with(
    map: &EntireMap,
    z0: Complex64,
    t_span: (f64, f64),
    opts: FlowOptions,
) -> Result<FlowCurve> {
    if !(t_span.0 <= 0.0 && t_span.1 >= 0.0) {
        return Err(Error::InvalidInput("t_span must contain 0".into()));
    }
    // seed must be outside every exclusion ball
    field(map, z0)?;
    let f0 = map.eval_f(z0)?;
    let im_level = f0.im;

    let (pos, end_pos) = half_trajectory(map, z0, f0, im_level, t_span.1, 1.0, opts)?;
    let (neg, end_neg) = half_trajectory(map, z0, f0, im_level, -t_span.0, -1.0, opts)?;

    let total = neg.0.len() + pos.0.len() + 1;
    let mut samples = Vec::with_capacity(total);
    let mut f_values = opts.carry_f.then(|| Vec::with_capacity(total));
    for (s, f) in neg.0.iter().rev().zip(neg.1.iter().rev()) {
        samples.push(*s);
        if let Some(fs) = f_values.as_mut() {
            fs.push(*f);
        }
    }
    samples.push(FlowSample { t: 0.0, z: z0 });
    if let Some(fs) = f_values.as_mut() {
        fs.push(f0);
    }
    for (s, f) in pos.0.iter().zip(pos.1.iter()) {
        samples.push(*s);
        if let Some(fs) = f_values.as_mut() {
            fs.push(*f);
        }
    }
    Ok(FlowCurve { seed: z0, samples, f_values, t_span, im_level, end_neg, end_pos })
}

/// One direction of the trajectory; `dir` is +1 or -1 and samples are
/// returned with signed t values, excluding the seed itself. The returned
/// f vector parallels the samples (empty when not carrying F).
#[allow(clippy::type_complexity)]
fn half_trajectory(
    map: &EntireMap,
    z0: Complex64,
    f0: Complex64,
    im_level: f64,
    budget: f64,
    dir: f64,
    opts: FlowOptions,
) -> Result<((Vec<FlowSample>, Vec<Complex64>), Termination)> {
    let mut samples = Vec::new();
    let mut f_values = Vec::new();
    if budget <= 0.0 {
        return Ok(((samples, f_values), Termination::BudgetReached));
    }
    let f_prime = |z: Complex64| map.q().eval(z) * map.p().eval(z).exp();
    let rhs = |z: Complex64| field(map, z).map(|x| x * dir);

    if opts.carry_f && !f_prime_under_cap(map, z0, opts.f_prime_cap) {
        return Ok(((samples, f_values), Termination::FPrimeOverflow));
    }

    let mut z = z0;
    let mut f = f0;
    let mut t = 0.0_f64;
    let mut h = 0.01_f64;
    let h_speed_coeff = (24.0 * 0.1 * opts.speed_tol).sqrt();
    let mut accepted: usize = 0;
    let termination;

    'outer: loop {
        if t >= budget * (1.0 - 1e-12) {
            termination = Termination::BudgetReached;
            break;
        }
        if accepted >= opts.max_steps {
            termination = Termination::StepBudget;
            break;
        }

        let k0 = match rhs(z) {
            Ok(v) => v,
            Err(Error::AtSingularity { root, .. }) => {
                termination = Termination::AtSingularity(root);
                break;
            }
            Err(e) => return Err(e),
        };
        // chord-versus-arc: |chord| ≈ h(1 - κ²h²/24), so cap h by curvature
        let kappa = curvature(map, z, k0);
        if kappa > 0.0 {
            h = h.min(h_speed_coeff / kappa);
        }
        h = h.min(0.2).min(budget - t);
        if h < 1e-13 {
            return Err(Error::StepCollapse { t: dir * t });
        }

        let mut k = [Complex64::new(0.0, 0.0); 7];
        k[0] = k0;
        for i in 0..6 {
            let mut zi = z;
            for (j, kj) in k.iter().enumerate().take(i + 1) {
                zi += h * DP_A[i][j] * *kj;
            }
            k[i + 1] = match rhs(zi) {
                Ok(v) => v,
                Err(Error::AtSingularity { root, .. }) => {
                    termination = Termination::AtSingularity(root);
                    break 'outer;
                }
                Err(e) => return Err(e),
            };
        }
        let mut z5 = z;
        let mut z4 = z;
        for i in 0..7 {
            z5 += h * DP_B5[i] * k[i];
            z4 += h * DP_B4[i] * k[i];
        }
        let err = (z5 - z4).norm();
        if err > opts.tol {
            h *= (0.9 * (opts.tol / err).powf(0.2)).clamp(0.2, 1.0);
            continue;
        }
        // curvature at the far end may exceed the cap used at the near end
        let kappa_end = match rhs(z5) {
            Ok(x_end) => curvature(map, z5, x_end),
            Err(_) => kappa,
        };
        if kappa_end * h > 2.0 * h_speed_coeff {
            h = 0.8 * h_speed_coeff / kappa_end;
            continue;
        }

        if opts.carry_f {
            f += quad::gauss15_segment(&f_prime, z, z5);
        }
        z = z5;
        t += h;
        accepted += 1;
        if err > 0.0 {
            h *= (0.9 * (opts.tol / err).powf(0.2)).clamp(0.2, 5.0);
        } else {
            h *= 2.0;
        }

        // projection back onto the level set using the carried value
        if opts.carry_f && accepted % opts.renorm_every == 0 {
            if let Ok(fp) = map.eval_f_prime(z) {
                let n2 = fp.norm_sqr();
                if n2 > 1e-280 {
                    let eps = f.im - im_level;
                    let delta = Complex64::new(0.0, -eps) * fp.conj() / n2;
                    if delta.norm() < 1e-3 * (1.0 + z.norm()) {
                        if delta.norm() > 1e-12 * (1.0 + z.norm()) {
                            f += quad::gauss15_segment(&f_prime, z, z + delta);
                        } else {
                            f += fp * delta;
                        }
                        z += delta;
                    }
                }
            }
        }

        samples.push(FlowSample { t: dir * t, z });
        if opts.carry_f {
            f_values.push(f);
        }

        if let Some((root, _, dist)) = nearest_q_root(map, z) {
            if dist <= exclusion_radius(root) {
                termination = Termination::AtSingularity(root);
                break;
            }
        }
        if opts.carry_f && !f_prime_under_cap(map, z, opts.f_prime_cap) {
            termination = Termination::FPrimeOverflow;
            break;
        }
        if let Some(window) = opts.window {
            if !window.contains(z) {
                termination = Termination::LeftWindow;
                break;
            }
        }
    }
    Ok(((samples, f_values), termination))
}

fn f_prime_under_cap(map: &EntireMap, z: Complex64, cap: f64) -> bool {
    match map.eval_f_prime(z) {
        Ok(fp) => fp.norm() <= cap,
        Err(_) => false,
    }
}

/// Which coordinate frame a transversal was described in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    ZPlane,
    XiPlane,
}

/// A polyline on the level set Im(P(z) + log Q(z)) = kπ - α, transverse to
/// the flow.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransversalCurve {
    pub j: usize,
    pub k: i64,
    pub alpha: f64,
    pub samples: Vec<FlowSample>,
    pub frame: Frame,
}

/// R₀: the radius beyond which P + log Q is dominated by its leading term
/// a_d z^d (relative error < 0.2 on the sampled circle). For d = 0 the far
/// field is governed by Q alone and R₀ just clears the roots of Q.
pub fn scaling_radius(map: &EntireMap) -> f64 {
    let max_root = map.q_roots().iter().map(|r| r.location.norm()).fold(0.0, f64::max);
    let d = map.d();
    if d == 0 {
        return 2.0 * (1.0 + max_root);
    }
    let a_d = map.p().leading_coeff();
    let mut radius = 1.0_f64.max(2.0 * max_root);
    for _ in 0..40 {
        let mut worst: f64 = 0.0;
        for i in 0..64 {
            let th = 2.0 * PI * i as f64 / 64.0;
            let z = radius * Complex64::new(th.cos(), th.sin());
            let lead = a_d * z.powu(d as u32);
            let g = map.p().eval(z) + map.q().eval(z).ln();
            worst = worst.max((g - lead).norm() / lead.norm());
        }
        if worst < 0.2 {
            return radius;
        }
        radius *= 1.5;
    }
    radius
}

/// Traces the transversal at level kπ - α in sector j with the default
/// certificate angle δ = π/(4d). The phase α must stay δ away from the
/// sector boundary angles (j-1)π/d and jπ/d; on the level curve the field
/// is ±e^{iα} while the tangent avoids the open sector, which is what
/// makes the certificate hold.
pub fn trace_transversal(
    map: &EntireMap,
    j: usize,
    k: i64,
    alpha: f64,
    arclen_budget: f64,
) -> Result<TransversalCurve> {
    let d = map.d();
    if d == 0 {
        return Err(Error::InvalidInput("transversals require deg P >= 1".into()));
    }
    trace_transversal_with(map, j, k, alpha, arclen_budget, PI / (4.0 * d as f64))
}

pub fn trace_transversal_with(
    map: &EntireMap,
    j: usize,
    k: i64,
    alpha: f64,
    arclen_budget: f64,
    delta: f64,
) -> Result<TransversalCurve> {
    let d = map.d();
    if d == 0 || j == 0 || j > 2 * d {
        return Err(Error::InvalidInput(format!("sector index j = {j} out of range 1..={}", 2 * d)));
    }
    if !(delta > 0.0 && delta < PI / (2.0 * d as f64)) {
        return Err(Error::InvalidInput("delta must lie in (0, π/2d)".into()));
    }
    let lo = (j as f64 - 1.0) * PI / d as f64 + delta;
    let hi = j as f64 * PI / d as f64 - delta;
    if !(alpha > lo && alpha < hi) {
        return Err(Error::InvalidInput(format!(
            "alpha = {alpha:.4} must lie in ({lo:.4}, {hi:.4}) for sector {j} at delta {delta:.4}"
        )));
    }
    let level = k as f64 * PI - alpha;
    let odd = j % 2 == 1;
    if odd && level <= 0.0 || !odd && level >= 0.0 {
        return Err(Error::InvalidInput(
            "k must be positive for odd j and negative for even j".into(),
        ));
    }
    let r0 = scaling_radius(map);
    if level.abs() <= r0.powi(d as i32) {
        return Err(Error::InvalidInput(format!(
            "|kπ - α| = {:.3} does not clear R0^d = {:.3}; increase |k|",
            level.abs(),
            r0.powi(d as i32)
        )));
    }

    // seed on the sector bisector, where |Im ξ^d| = |ξ|^d
    let theta = (j as f64 - 0.5) * PI / d as f64;
    let s = level.abs().powf(1.0 / d as f64);
    let mut z = s * Complex64::new(theta.cos(), theta.sin());
    let mut arg_q = map.q().eval(z).arg();
    let grad = |z: Complex64| -> Result<Complex64> {
        let qz = map.q().eval(z);
        if qz.norm() < 1e-280 {
            return Err(Error::NewtonDivergence);
        }
        Ok(map.p_prime().eval(z) + map.q_prime().eval(z) / qz)
    };

    newton_to_level(map, &mut z, &mut arg_q, level, 40)?;

    let sin_delta = delta.sin();
    let check_sample = |z: Complex64| -> Result<FlowSample> {
        let x = field(map, z)?;
        let g = grad(z)?;
        let tangent = -g.conj() / g.norm();
        let transversality = (x.conj() * tangent).im.abs();
        if transversality < sin_delta {
            return Err(Error::TransversalityLoss { measured: transversality, required: sin_delta });
        }
        Ok(FlowSample { t: 0.0, z })
    };

    let seed_sample = check_sample(z)?;
    let mut halves: [Vec<FlowSample>; 2] = [Vec::new(), Vec::new()];
    for (side, half) in halves.iter_mut().enumerate() {
        let sign = if side == 0 { -1.0 } else { 1.0 };
        let mut zc = z;
        let mut aq = arg_q;
        let mut arc = 0.0_f64;
        while arc < arclen_budget / 2.0 {
            let g = grad(zc)?;
            let h = 0.05 * (1.0 + zc.norm() / 10.0);
            let tangent = sign * -g.conj() / g.norm();
            let mut znext = zc + h * tangent;
            let mut aq_next = continue_arg(map, zc, znext, aq);
            newton_to_level(map, &mut znext, &mut aq_next, level, 20)?;
            arc += (znext - zc).norm();
            let mut sample = check_sample(znext)?;
            sample.t = sign * arc;
            half.push(sample);
            zc = znext;
            aq = aq_next;
        }
    }
    let mut samples = Vec::with_capacity(halves[0].len() + halves[1].len() + 1);
    samples.extend(halves[0].iter().rev().copied());
    samples.push(seed_sample);
    samples.extend(halves[1].iter().copied());
    Ok(TransversalCurve { j, k, alpha, samples, frame: Frame::ZPlane })
}

/// Continues arg Q(z) along the hop from `from` to `to` without branch jumps.
fn continue_arg(map: &EntireMap, from: Complex64, to: Complex64, arg_from: f64) -> f64 {
    let q0 = map.q().eval(from);
    let q1 = map.q().eval(to);
    arg_from + (q1 / q0).arg()
}

fn newton_to_level(
    map: &EntireMap,
    z: &mut Complex64,
    arg_q: &mut f64,
    level: f64,
    max_iter: usize,
) -> Result<()> {
    for _ in 0..max_iter {
        let phi = map.p().eval(*z).im + *arg_q;
        let err = level - phi;
        if err.abs() < 1e-11 * (1.0 + level.abs()) {
            return Ok(());
        }
        let qz = map.q().eval(*z);
        if qz.norm() < 1e-280 {
            return Err(Error::NewtonDivergence);
        }
        let g = map.p_prime().eval(*z) + map.q_prime().eval(*z) / qz;
        if g.norm() < 1e-280 {
            return Err(Error::NewtonDivergence);
        }
        // grad(Im G) = i conj(G'); move along it
        let delta = err * Complex64::new(0.0, 1.0) * g.conj() / g.norm_sqr();
        let znext = *z + delta;
        *arg_q = continue_arg(map, *z, znext, *arg_q);
        *z = znext;
    }
    let phi = map.p().eval(*z).im + *arg_q;
    if (level - phi).abs() < 1e-9 * (1.0 + level.abs()) {
        Ok(())
    } else {
        Err(Error::NewtonDivergence)
    }
}

/// The 2(r+1) local ray directions of the foliation at a zero of Q of
/// order r, located by an angular sign scan of Im(F - F(z0)) on small
/// circles with Richardson extrapolation of the crossing angles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingularityRays {
    #[serde(with = "crate::complex_serde")]
    pub center: Complex64,
    pub order: usize,
    pub directions: Vec<RayDirection>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RayDirection {
    pub angle: f64,
    #[serde(with = "crate::complex_serde")]
    pub unit: Complex64,
}

impl SingularityRays {
    /// Smallest wrapped distance from `angle` to any ray.
    pub fn nearest_angle_error(&self, angle: f64) -> f64 {
        self.directions
            .iter()
            .map(|d| wrap_diff(d.angle, angle).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn singularity_rays(map: &EntireMap, z0: Complex64) -> Result<SingularityRays> {
    singularity_rays_with_epsilon(map, z0, 1e-3 * (1.0 + z0.norm()))
}

/// Same scan with an explicit starting probe radius; exposes the
/// stability of the extrapolated angles under radius refinement.
pub fn singularity_rays_with_epsilon(
    map: &EntireMap,
    z0: Complex64,
    eps0: f64,
) -> Result<SingularityRays> {
    let (root, mult, dist) =
        nearest_q_root(map, z0).ok_or_else(|| Error::InvalidInput("Q has no roots".into()))?;
    if dist > 1e-6 * (1.0 + root.norm()) {
        return Err(Error::InvalidInput(format!("z0 = {z0} is not a root of Q")));
    }
    if !(eps0 > 0.0) {
        return Err(Error::InvalidInput("probe radius must be positive".into()));
    }
    let expected = 2 * (mult + 1);

    let mut eps = eps0;
    let mut last_found = 0;
    for _ in 0..8 {
        let coarse = crossing_angles(map, root, eps, expected)?;
        let fine = crossing_angles(map, root, eps / 2.0, expected)?;
        match (coarse, fine) {
            (Some(coarse), Some(fine)) => {
                // crossings drift O(eps); extrapolate to eps -> 0
                let mut directions: Vec<RayDirection> = coarse
                    .iter()
                    .zip(fine.iter())
                    .map(|(&c, &f)| {
                        let angle = normalize_angle(f + wrap_diff(f, c));
                        RayDirection { angle, unit: Complex64::new(angle.cos(), angle.sin()) }
                    })
                    .collect();
                directions.sort_by(|a, b| a.angle.partial_cmp(&b.angle).unwrap());
                return Ok(SingularityRays { center: root, order: mult, directions });
            }
            (a, b) => {
                last_found = a.map(|v| v.len()).or(b.map(|v| v.len())).unwrap_or(last_found);
                eps /= 2.0;
            }
        }
    }
    Err(Error::RayCountMismatch { expected, found: last_found })
}

fn normalize_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a < 0.0 {
        a += 2.0 * PI;
    }
    a
}

/// Signed difference f - c wrapped into (-π, π].
pub(crate) fn wrap_diff(f: f64, c: f64) -> f64 {
    let mut d = (f - c) % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    }
    if d <= -PI {
        d += 2.0 * PI;
    }
    d
}

/// Bisected crossing angles of Im(F(z0 + eps e^{iθ}) - F(z0)) over a full
/// turn, or None when the count disagrees with `expected`. The scan starts
/// at a small irrational offset so symmetry axes do not put exact zeros on
/// the sample grid.
fn crossing_angles(
    map: &EntireMap,
    z0: Complex64,
    eps: f64,
    expected: usize,
) -> Result<Option<Vec<f64>>> {
    let n = 1440;
    let offset = 1e-4 * std::f64::consts::SQRT_2;
    let g = |theta: f64| -> Result<f64> {
        let z = z0 + eps * Complex64::new(theta.cos(), theta.sin());
        Ok(map.eval_f_between(z0, z)?.im)
    };
    let node = |i: usize| offset + 2.0 * PI * i as f64 / n as f64;
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        values.push(g(node(i))?);
    }
    let mut crossings = Vec::new();
    for i in 0..n {
        let a = values[i];
        let b = values[(i + 1) % n];
        if !(a.signum() * b.signum() < 0.0) {
            continue;
        }
        let mut lo = node(i);
        let mut hi = node(i + 1);
        let mut glo = a;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let gm = g(mid)?;
            if gm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if gm.signum() == glo.signum() {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
            }
        }
        crossings.push(0.5 * (lo + hi));
    }
    if crossings.len() == expected {
        Ok(Some(crossings))
    } else {
        Ok(None)
    }
}

/// Per-end classification of a traced trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EndState {
    /// |F| -> ∞ along this end; the curve contributes a full horizontal
    /// line together with a diverging opposite end.
    Diverges,
    /// The end enters the convergence sector of ray j; F -> w'_j.
    LandsAtAsymptotic(usize),
    /// The end runs into a zero of Q; F tends to the critical value there.
    LandsAtFiniteCritical(#[serde(with = "crate::complex_serde")] Complex64),
    /// Arc-length budget exhausted before any criterion fired.
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub neg: EndState,
    pub pos: EndState,
}

impl Classification {
    pub fn is_full_horizontal_line(&self) -> bool {
        self.neg == EndState::Diverges && self.pos == EndState::Diverges
    }
}

/// Classifies both ends of a traced curve using the sector geometry of the
/// asymptotic directions and the recorded termination reasons. An |F'| cap
/// termination is read as divergence: Re F was growing at at least the cap
/// rate when the trace stopped.
pub fn classify_trajectory(map: &EntireMap, curve: &FlowCurve) -> Result<Classification> {
    let r0 = scaling_radius(map);
    let escape = 3.0 * r0;
    let dirs = map.p().asymptotic_directions();
    let d = map.d();
    let margin = if d > 0 { PI / (8.0 * d as f64) } else { 0.0 };

    let classify_end = |z: Complex64, term: Termination| -> EndState {
        match term {
            Termination::AtSingularity(root) => EndState::LandsAtFiniteCritical(root),
            Termination::FPrimeOverflow => EndState::Diverges,
            Termination::BudgetReached | Termination::StepBudget | Termination::LeftWindow => {
                if z.norm() <= escape {
                    return EndState::Inconclusive;
                }
                for (idx, rho) in dirs.iter().enumerate() {
                    let half_width = PI / (2.0 * d as f64) - margin;
                    if wrap_diff(z.arg(), rho.arg()).abs() < half_width {
                        return EndState::LandsAtAsymptotic(idx + 1);
                    }
                }
                EndState::Diverges
            }
        }
    };

    Ok(Classification {
        neg: classify_end(curve.first().z, curve.end_neg),
        pos: classify_end(curve.last().z, curve.end_pos),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::ComplexPolynomial;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn field_on_real_axis_gauss() {
        let map = EntireMap::gauss(2);
        let x = field(&map, c(0.7, 0.0)).unwrap();
        assert!((x - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn field_conjugate_q() {
        let map =
            EntireMap::new(ComplexPolynomial::zero(), ComplexPolynomial::monomial(1)).unwrap();
        let x = field(&map, c(0.0, 1.0)).unwrap();
        assert!((x - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn field_unit_modulus_everywhere() {
        let map = EntireMap::new(
            ComplexPolynomial::from_real(&[0.3, -1.0, 1.0]),
            ComplexPolynomial::from_real(&[-1.0, 0.0, 1.0]),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        while checked < 1000 {
            let z = c(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            match field(&map, z) {
                Ok(x) => {
                    assert!((x.norm() - 1.0).abs() <= 1e-15);
                    checked += 1;
                }
                Err(Error::AtSingularity { .. }) => continue,
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn field_at_singularity_rejected() {
        let map =
            EntireMap::new(ComplexPolynomial::zero(), ComplexPolynomial::monomial(1)).unwrap();
        assert!(matches!(field(&map, c(1e-6, 0.0)), Err(Error::AtSingularity { .. })));
    }

    #[test]
    fn real_axis_is_invariant_for_gauss() {
        // P = z^d, Q = 1: X = 1 on the reals, so Z(t) = z0 + t
        for d in [2usize, 3] {
            let map = EntireMap::gauss(d);
            let curve = integrate_flow(&map, c(0.5, 0.0), (0.0, 1.0), 1e-10).unwrap();
            for s in &curve.samples {
                assert!((s.z - c(0.5 + s.t, 0.0)).norm() < 1e-8, "t={} z={}", s.t, s.z);
            }
        }
    }

    #[test]
    fn unit_speed_and_monotone_re_f() {
        let map = EntireMap::gauss(3);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..5 {
            let z0 = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let opts = FlowOptions { tol: 1e-11, f_prime_cap: 1e3, ..FlowOptions::default() };
            let curve = integrate_flow_with(&map, z0, (-5.0, 5.0), opts).unwrap();
            let fs = curve.f_values.as_ref().unwrap();
            for (i, w) in curve.samples.windows(2).enumerate() {
                let dt = w[1].t - w[0].t;
                let dz = (w[1].z - w[0].z).norm();
                assert!((dz / dt - 1.0).abs() < 1e-6, "speed {}", dz / dt);
                assert!(fs[i + 1].re > fs[i].re, "Re F not increasing at {i}");
            }
        }
    }

    #[test]
    fn im_f_drift_small() {
        let map = EntireMap::gauss(2);
        let opts = FlowOptions { tol: 1e-11, f_prime_cap: 400.0, ..FlowOptions::default() };
        let curve = integrate_flow_with(&map, c(0.8, 0.9), (-8.0, 8.0), opts).unwrap();
        assert!(curve.im_drift() < 1e-7, "carried drift {}", curve.im_drift());
        // drift of the true Im F, measured independently at a few samples
        let stride = (curve.samples.len() / 12).max(1);
        for s in curve.samples.iter().step_by(stride) {
            let f = map.eval_f(s.z).unwrap();
            assert!(
                (f.im - curve.im_level).abs() < 1e-7,
                "true drift {}",
                (f.im - curve.im_level).abs()
            );
        }
    }

    #[test]
    fn trapping_region_e2() {
        // seeds with Im z^2 in (2π, 3π) stay there in positive time
        let map = EntireMap::gauss(2);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let opts = FlowOptions { carry_f: false, ..FlowOptions::default() };
        for _ in 0..10 {
            let im_level = rng.gen_range(2.0 * PI + 0.3..3.0 * PI - 0.3);
            let x = rng.gen_range(1.0..3.0);
            // z = x + iy with 2xy = im_level
            let z0 = c(x, im_level / (2.0 * x));
            let curve = integrate_flow_with(&map, z0, (0.0, 30.0), opts).unwrap();
            assert_eq!(curve.end_pos, Termination::BudgetReached);
            for s in &curve.samples {
                let im = (s.z * s.z).im;
                assert!(im > 2.0 * PI && im < 3.0 * PI, "left E2 at {} (Im z^2 = {im})", s.z);
            }
        }
    }

    #[test]
    fn transversal_level_is_maintained() {
        // P = z^2, Q = 1, j = 1, k = 2, alpha = π/4: Im z^2 = 2π - π/4
        let map = EntireMap::gauss(2);
        let curve = trace_transversal(&map, 1, 2, PI / 4.0, 6.0).unwrap();
        assert!(curve.samples.len() > 20);
        for s in &curve.samples {
            let im = (s.z * s.z).im;
            assert!((im - (2.0 * PI - PI / 4.0)).abs() < 1e-9, "level {im}");
        }
    }

    #[test]
    fn transversal_certificate_with_wide_angle() {
        let map = EntireMap::gauss(2);
        // δ = π/8 < π/(2d) = π/4, α = π/4 inside (π/8, 3π/8)
        let curve = trace_transversal_with(&map, 1, 2, PI / 4.0, 8.0, PI / 8.0).unwrap();
        let sin_delta = (PI / 8.0_f64).sin();
        for s in &curve.samples {
            let x = field(&map, s.z).unwrap();
            let g = 2.0 * s.z; // G' for P = z^2
            let tangent = -g.conj() / g.norm();
            assert!((x.conj() * tangent).im.abs() >= sin_delta - 1e-9);
        }
    }

    #[test]
    fn transversal_alpha_near_sector_edge_rejected() {
        // the certificate needs α at least δ away from the sector boundary
        let map = EntireMap::gauss(2);
        assert!(matches!(
            trace_transversal_with(&map, 1, 2, PI / 2.0, 6.0, PI / 8.0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn transversal_nonmonomial_p() {
        let map = EntireMap::new(
            ComplexPolynomial::from_real(&[0.0, 1.0, 1.0]),
            ComplexPolynomial::from_real(&[1.0]),
        )
        .unwrap();
        let delta = PI / 4.0 - 0.1;
        let curve = trace_transversal_with(&map, 1, 14, 0.8, 6.0, delta).unwrap();
        assert!(curve.samples.len() > 10);
    }

    #[test]
    fn rays_of_simple_zero() {
        // P = 0, Q = z: F = z^2/2, rays on the four half-axes
        let map =
            EntireMap::new(ComplexPolynomial::zero(), ComplexPolynomial::monomial(1)).unwrap();
        let rays = singularity_rays(&map, c(0.0, 0.0)).unwrap();
        assert_eq!(rays.order, 1);
        assert_eq!(rays.directions.len(), 4);
        for i in 0..4 {
            let err = rays.nearest_angle_error(i as f64 * PI / 2.0);
            assert!(err < 1e-8, "axis {i} error {err}");
        }
    }

    #[test]
    fn rays_of_double_zero() {
        // P = 0, Q = z^2: F = z^3/3, six rays at kπ/3
        let map =
            EntireMap::new(ComplexPolynomial::zero(), ComplexPolynomial::monomial(2)).unwrap();
        let rays = singularity_rays(&map, c(0.0, 0.0)).unwrap();
        assert_eq!(rays.order, 2);
        assert_eq!(rays.directions.len(), 6);
        for i in 0..6 {
            let err = rays.nearest_angle_error(i as f64 * PI / 3.0);
            assert!(err < 1e-8, "axis {i} error {err}");
        }
    }

    #[test]
    fn rays_shifted_zero_with_exponential_factor() {
        // P = z, Q = z - 1: F''(1) = e is real, so the local model ζ² is
        // unrotated and the four rays sit on the half-axes through 1
        let map = EntireMap::new(
            ComplexPolynomial::monomial(1),
            ComplexPolynomial::from_real(&[-1.0, 1.0]),
        )
        .unwrap();
        let rays = singularity_rays(&map, c(1.0, 0.0)).unwrap();
        assert_eq!(rays.directions.len(), 4);
        for i in 0..4 {
            let err = rays.nearest_angle_error(i as f64 * PI / 2.0);
            assert!(err < 1e-6, "axis {i} error {err}");
        }
    }

    #[test]
    fn classify_real_seed_full_line() {
        let map = EntireMap::gauss(2);
        let curve = integrate_flow(&map, c(0.5, 0.0), (-40.0, 40.0), 1e-9).unwrap();
        let cls = classify_trajectory(&map, &curve).unwrap();
        assert!(cls.is_full_horizontal_line(), "{cls:?}");
    }

    #[test]
    fn classify_landing_at_critical_point() {
        // P = 0, Q = z, seed on the positive real axis: backward end hits 0
        let map =
            EntireMap::new(ComplexPolynomial::zero(), ComplexPolynomial::monomial(1)).unwrap();
        let curve = integrate_flow(&map, c(1.0, 0.0), (-20.0, 20.0), 1e-9).unwrap();
        let cls = classify_trajectory(&map, &curve).unwrap();
        assert_eq!(cls.neg, EndState::LandsAtFiniteCritical(c(0.0, 0.0)));
    }
}
