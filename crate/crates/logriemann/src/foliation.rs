//! Separatrices of the horizontal foliation, the induced partition of a
//! plane window into univalent domains, and the combinatorial sheet
//! skeleton of the log-Riemann surface of F.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{
    self, BBox, FlowCurve, FlowOptions, FlowSample, Termination, integrate_flow_with,
    scaling_radius, singularity_rays, wrap_diff,
};
use crate::map::EntireMap;

const PI: f64 = std::f64::consts::PI;

/// Where one end of a separatrix goes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Landing {
    /// F tends to the asymptotic value w'_p along this end.
    Asymptotic {
        p: usize,
        #[serde(with = "crate::complex_serde")]
        w: Complex64,
    },
    /// The end runs into a zero of Q with critical value f.
    FiniteCritical {
        #[serde(with = "crate::complex_serde")]
        z0: Complex64,
        #[serde(with = "crate::complex_serde")]
        f: Complex64,
    },
    /// |F| grows without bound along this end.
    Divergent,
    /// Budget ran out before any criterion fired.
    Open,
}

/// How a separatrix was found.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SeparatrixOrigin {
    /// Seeded far out in the sector of ray p on the slit-bank level curve
    /// with signed index k (levels ±(2|k|-1)π of Im P + arg(Q/P')).
    AsymptoticSeed { p: usize, k: i64 },
    /// Continued from a local ray at a zero of Q.
    RootGerm {
        #[serde(with = "crate::complex_serde")]
        root: Complex64,
        ray_angle: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Separatrix {
    pub curve: FlowCurve,
    pub neg: Landing,
    pub pos: Landing,
    /// Im F along the curve (= Im w'_p or Im of the critical value).
    pub level: f64,
    pub origin: SeparatrixOrigin,
}

impl Separatrix {
    /// The landing value of an end that lands, if any (asymptotic ends
    /// preferred).
    pub fn landing_value(&self) -> Option<Complex64> {
        for end in [self.neg, self.pos] {
            if let Landing::Asymptotic { w, .. } = end {
                return Some(w);
            }
        }
        for end in [self.neg, self.pos] {
            if let Landing::FiniteCritical { f, .. } = end {
                return Some(f);
            }
        }
        None
    }

    /// Carried F at the sample furthest along the given landing end.
    pub fn end_f(&self, positive: bool) -> Option<Complex64> {
        let fs = self.curve.f_values.as_ref()?;
        if positive { fs.last().copied() } else { fs.first().copied() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SeparatrixOptions {
    /// Arc length traced per direction from the seed.
    pub arc_budget: f64,
    /// Step tolerance of the underlying trajectory integration.
    pub tol: f64,
    /// Curves closer than this in Hausdorff distance are duplicates.
    pub merge_tol: f64,
}

impl Default for SeparatrixOptions {
    fn default() -> Self {
        Self { arc_budget: 60.0, tol: 1e-9, merge_tol: 1e-2 }
    }
}

/// Traced separatrices plus per-seed failures (reported, not fatal).
#[derive(Debug)]
pub struct SeparatrixSet {
    pub separatrices: Vec<Separatrix>,
    pub seed_failures: Vec<Error>,
}

/// Traces the separatrices of the foliation visible in `bbox` at sheet
/// truncation depth K: for each asymptotic ray p the 2K slit-bank curves
/// (signed index k, levels ±(2|k|-1)π), and for each zero of Q its local
/// rays continued into full trajectories.
pub fn trace_separatrices(map: &EntireMap, k_window: i64, bbox: BBox) -> Result<SeparatrixSet> {
    trace_separatrices_with(map, k_window, bbox, SeparatrixOptions::default())
}

pub fn trace_separatrices_with(
    map: &EntireMap,
    k_window: i64,
    bbox: BBox,
    opts: SeparatrixOptions,
) -> Result<SeparatrixSet> {
    if k_window < 1 {
        return Err(Error::InvalidInput("truncation depth K must be >= 1".into()));
    }
    if bbox.is_empty() {
        return Err(Error::InvalidInput("window is empty".into()));
    }
    let r0 = scaling_radius(map);
    for root in map.q_roots() {
        if !bbox.contains(root.location) {
            return Err(Error::InvalidInput(format!(
                "window must contain all roots of Q (missing {})",
                root.location
            )));
        }
    }

    // trace beyond the window so landing tails are captured
    let flow_opts = FlowOptions {
        tol: opts.tol,
        f_prime_cap: 1e250,
        carry_f: true,
        window: Some(trace_window(bbox, r0, opts.arc_budget)),
        ..FlowOptions::default()
    };

    let mut separatrices: Vec<Separatrix> = Vec::new();
    let mut seed_failures = Vec::new();

    let d = map.d();
    if d > 0 {
        let asym = map.asymptotic_values()?;
        for value in &asym {
            for signed in signed_indices(k_window) {
                match seed_asymptotic(map, value.rho, signed, r0) {
                    Ok((walk, r_seed)) => {
                        match trace_one_asymptotic(
                            map,
                            walk,
                            r_seed,
                            flow_opts,
                            value.j,
                            signed,
                            value.w,
                            opts.arc_budget,
                            r0,
                        ) {
                            Ok(sep) => separatrices.push(sep),
                            Err(e) => seed_failures.push(e),
                        }
                    }
                    Err(_) => {
                        seed_failures.push(Error::SeedFailure { p: value.j, k: signed });
                    }
                }
            }
        }
    }

    for root in map.q_roots() {
        let rays = match singularity_rays(map, root.location) {
            Ok(r) => r,
            Err(e) => {
                seed_failures.push(e);
                continue;
            }
        };
        for dir in &rays.directions {
            let seed = root.location + 5.0 * flow::exclusion_radius(root.location) * dir.unit;
            match trace_one(
                map,
                seed,
                flow_opts,
                SeparatrixOrigin::RootGerm { root: root.location, ray_angle: dir.angle },
                opts.arc_budget,
                r0,
            ) {
                Ok(sep) => separatrices.push(sep),
                Err(e) => seed_failures.push(e),
            }
        }
    }

    dedup_separatrices(&mut separatrices, opts.merge_tol);
    Ok(SeparatrixSet { separatrices, seed_failures })
}

fn trace_window(bbox: BBox, r0: f64, arc_budget: f64) -> BBox {
    let reach = arc_budget + 4.0 * r0 + bbox.diagonal();
    let big = BBox::square(reach);
    BBox::new(
        Complex64::new(big.min.re.min(bbox.min.re), big.min.im.min(bbox.min.im)),
        Complex64::new(big.max.re.max(bbox.max.re), big.max.im.max(bbox.max.im)),
    )
}

/// k = -K..-1, 1..K.
fn signed_indices(k_window: i64) -> Vec<i64> {
    let mut v: Vec<i64> = (1..=k_window).flat_map(|k| [-k, k]).collect();
    v.sort_unstable();
    v
}

/// A point on the level curve Phi := Im P + arg(Q/P') = target, with the
/// phase continued along the walk (arg is tracked by increments, so the
/// target may sit on any branch).
#[derive(Debug, Clone, Copy)]
struct LevelWalk {
    theta: f64,
    z: Complex64,
    phi: f64,
    target: f64,
}

fn phase_ratio(map: &EntireMap, z: Complex64) -> Result<Complex64> {
    let qp = map.q().eval(z) / map.p_prime().eval(z);
    if !qp.is_finite() || qp.norm() < 1e-280 {
        return Err(Error::NewtonDivergence);
    }
    Ok(qp)
}

/// Increment of the continued phase Phi across a short hop.
fn phi_increment(map: &EntireMap, from: Complex64, to: Complex64) -> Result<f64> {
    let a = phase_ratio(map, from)?;
    let b = phase_ratio(map, to)?;
    Ok(map.p().eval(to).im - map.p().eval(from).im + (b / a).arg())
}

/// d/dθ of the continued phase on the circle through z.
fn phi_dot(map: &EntireMap, z: Complex64) -> Result<f64> {
    let q = map.q().eval(z);
    let pp = map.p_prime().eval(z);
    if q.norm() < 1e-280 || pp.norm() < 1e-280 {
        return Err(Error::NewtonDivergence);
    }
    let g = pp + map.q_prime().eval(z) / q - map.p().derivative().derivative().eval(z) / pp;
    Ok((g * Complex64::new(0.0, 1.0) * z).im)
}

/// Newton in angle at fixed radius r, keeping the continued phase.
fn newton_at_radius(map: &EntireMap, r: f64, walk: &mut LevelWalk, d: f64) -> Result<()> {
    for _ in 0..60 {
        let err = walk.target - walk.phi;
        let slope = phi_dot(map, walk.z)?;
        // dPhi/dtheta ~ d r^d, so machine precision in theta leaves a
        // phase residual of |slope| eps; the tolerance must absorb it
        let tol = 1e-12 * (1.0 + walk.target.abs()) + 8.0 * f64::EPSILON * slope.abs();
        if err.abs() < tol {
            return Ok(());
        }
        if slope.abs() < 1e-12 {
            return Err(Error::NewtonDivergence);
        }
        let step = (err / slope).clamp(-0.5 / d, 0.5 / d);
        let theta_next = walk.theta + step;
        let z_next = r * Complex64::new(theta_next.cos(), theta_next.sin());
        walk.phi += phi_increment(map, walk.z, z_next)?;
        walk.theta = theta_next;
        walk.z = z_next;
    }
    Err(Error::NewtonDivergence)
}

/// Seeds the slit-bank level curve Phi = sign(k)·(2|k|-1)π in the sector
/// of `rho`. On these curves F - w' is negative real to leading order,
/// which is what puts them on the slit side of the asymptotic value.
fn seed_asymptotic(map: &EntireMap, rho: Complex64, k: i64, r0: f64) -> Result<(LevelWalk, f64)> {
    let d = map.d() as f64;
    let level = (k.signum() * (2 * k.abs() - 1)) as f64 * PI;
    // the circle |z| = r must intersect {Im(a_d z^d) = level}
    let r = (4.0 * r0).max((level.abs() / 0.8).powf(1.0 / d));

    // leading-order guess: Im(a_d z^d) = level with a_d rho^d = -1
    let ratio = (level / r.powf(d)).clamp(-1.0, 1.0);
    let theta = rho.arg() - ratio.asin() / d;
    let z = r * Complex64::new(theta.cos(), theta.sin());
    let phi = map.p().eval(z).im + phase_ratio(map, z)?.arg();
    // shift target to the branch nearest the initial phase
    let target = phi + wrap_diff(level, phi);
    let mut walk = LevelWalk { theta, z, phi, target };
    newton_at_radius(map, r, &mut walk, d)?;
    Ok((walk, r))
}

/// F on the far part of the level curve: w' plus the leading remainder.
fn far_field_f(map: &EntireMap, w: Complex64, z: Complex64) -> Complex64 {
    let p = map.p().eval(z);
    if p.re < -745.0 {
        return w;
    }
    w + p.exp() * map.q().eval(z) / map.p_prime().eval(z)
}

/// Continues the level curve outward from the seed by radial stepping.
/// Tracing the flow toward an asymptotic value is unstable (any transverse
/// error grows like 1/|F'|), so this side of the separatrix is constructed
/// geometrically; it matches the true curve to O(1/|z|^{d+1}).
fn level_tail(
    map: &EntireMap,
    walk: LevelWalk,
    r_seed: f64,
    w: Complex64,
    arc_budget: f64,
) -> Result<(Vec<FlowSample>, Vec<Complex64>)> {
    let d = map.d() as f64;
    let mut walk = walk;
    let mut r = r_seed;
    let mut t = 0.0_f64;
    let mut samples = Vec::new();
    let mut f_values = Vec::new();
    for _ in 0..1_000_000 {
        if t >= arc_budget {
            break;
        }
        let dr = 0.05 * (1.0 + r / 10.0);
        r += dr;
        let z_prev = walk.z;
        // radial hop at fixed angle, then corrector back onto the level
        let z_radial = r * Complex64::new(walk.theta.cos(), walk.theta.sin());
        walk.phi += phi_increment(map, z_prev, z_radial)?;
        walk.z = z_radial;
        newton_at_radius(map, r, &mut walk, d)?;
        t += (walk.z - z_prev).norm();
        samples.push(FlowSample { t, z: walk.z });
        f_values.push(far_field_f(map, w, walk.z));
    }
    Ok((samples, f_values))
}

/// Assembles a slit-bank separatrix: the interior side is traced with the
/// flow (the stable direction), the ray side is the geometric tail.
#[allow(clippy::too_many_arguments)]
fn trace_one_asymptotic(
    map: &EntireMap,
    walk: LevelWalk,
    r_seed: f64,
    flow_opts: FlowOptions,
    p: usize,
    k: i64,
    w: Complex64,
    arc_budget: f64,
    r0: f64,
) -> Result<Separatrix> {
    let inner = integrate_flow_with(map, walk.z, (-arc_budget, 0.0), flow_opts)?;
    let (tail, tail_f) = level_tail(map, walk, r_seed, w, arc_budget)?;

    let mut samples = inner.samples.clone();
    let mut f_values = inner.f_values.clone().unwrap_or_default();
    let t_end = tail.last().map_or(0.0, |s| s.t);
    samples.extend_from_slice(&tail);
    f_values.extend_from_slice(&tail_f);

    let curve = FlowCurve {
        seed: walk.z,
        samples,
        f_values: Some(f_values),
        t_span: (-arc_budget, t_end),
        im_level: inner.im_level,
        end_neg: inner.end_neg,
        end_pos: Termination::BudgetReached,
    };
    let neg = landing_of_end(map, &curve, false, r0)?;
    let level = curve.im_level;
    Ok(Separatrix {
        curve,
        neg,
        pos: Landing::Asymptotic { p, w },
        level,
        origin: SeparatrixOrigin::AsymptoticSeed { p, k },
    })
}

fn trace_one(
    map: &EntireMap,
    seed: Complex64,
    flow_opts: FlowOptions,
    origin: SeparatrixOrigin,
    arc_budget: f64,
    r0: f64,
) -> Result<Separatrix> {
    let curve = integrate_flow_with(map, seed, (-arc_budget, arc_budget), flow_opts)?;
    let neg = landing_of_end(map, &curve, false, r0)?;
    let pos = landing_of_end(map, &curve, true, r0)?;
    let level = curve.im_level;
    Ok(Separatrix { curve, neg, pos, level, origin })
}

fn landing_of_end(map: &EntireMap, curve: &FlowCurve, positive: bool, r0: f64) -> Result<Landing> {
    let (term, sample) = if positive {
        (curve.end_pos, curve.last())
    } else {
        (curve.end_neg, curve.first())
    };
    match term {
        Termination::AtSingularity(root) => {
            Ok(Landing::FiniteCritical { z0: root, f: map.eval_f(root)? })
        }
        Termination::FPrimeOverflow => Ok(Landing::Divergent),
        Termination::BudgetReached | Termination::StepBudget | Termination::LeftWindow => {
            let z = sample.z;
            let d = map.d();
            if d == 0 || z.norm() <= 3.0 * r0 {
                return Ok(Landing::Open);
            }
            let margin = PI / (8.0 * d as f64);
            for value in map.asymptotic_values()? {
                let half_width = PI / (2.0 * d as f64) - margin;
                if wrap_diff(z.arg(), value.rho.arg()).abs() < half_width {
                    return Ok(Landing::Asymptotic { p: value.j, w: value.w });
                }
            }
            Ok(Landing::Divergent)
        }
    }
}

/// Symmetric Hausdorff distance between decimated sample polylines.
fn hausdorff(a: &FlowCurve, b: &FlowCurve) -> f64 {
    let pick = |c: &FlowCurve| -> Vec<Complex64> {
        let stride = (c.samples.len() / 120).max(1);
        c.samples.iter().step_by(stride).map(|s| s.z).collect()
    };
    let pa = pick(a);
    let pb = pick(b);
    let one_sided = |from: &[Complex64], to: &[Complex64]| -> f64 {
        from.iter()
            .map(|&p| to.iter().map(|&q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_sided(&pa, &pb).max(one_sided(&pb, &pa))
}

fn dedup_separatrices(separatrices: &mut Vec<Separatrix>, merge_tol: f64) {
    let mut keep: Vec<Separatrix> = Vec::new();
    for sep in separatrices.drain(..) {
        if keep.iter().all(|k| hausdorff(&k.curve, &sep.curve) > merge_tol) {
            keep.push(sep);
        }
    }
    *separatrices = keep;
}

/// Label of a connected component of the window minus separatrix tubes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomainLabel {
    /// The base-sheet component (contains the origin).
    D0,
    /// A component of full horizontal lines; j is the escape sector of the
    /// positive ends, l a deterministic sequence number within j.
    C { j: usize, l: i64 },
    /// A component whose trajectories land (at a critical point or an
    /// asymptotic value) or stay inconclusive.
    Exceptional { index: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Component {
    pub id: usize,
    pub label: DomainLabel,
    pub cell_count: usize,
    /// Representative cell centers used for classification.
    pub reps: Vec<Complex64>,
    pub contains_origin: bool,
    /// Set when the representatives disagreed about the classification.
    pub unresolved: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Partition {
    pub bbox: BBox,
    pub grid_n: usize,
    /// Row-major component id per cell; -1 marks separatrix tubes.
    pub cell_component: Vec<i32>,
    pub components: Vec<Component>,
}

impl Partition {
    pub fn cell_size(&self) -> (f64, f64) {
        (self.bbox.width() / self.grid_n as f64, self.bbox.height() / self.grid_n as f64)
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Complex64 {
        let (w, h) = self.cell_size();
        Complex64::new(
            self.bbox.min.re + (ix as f64 + 0.5) * w,
            self.bbox.min.im + (iy as f64 + 0.5) * h,
        )
    }

    pub fn cell_of(&self, z: Complex64) -> Option<(usize, usize)> {
        if !self.bbox.contains(z) {
            return None;
        }
        let (w, h) = self.cell_size();
        let ix = (((z.re - self.bbox.min.re) / w) as usize).min(self.grid_n - 1);
        let iy = (((z.im - self.bbox.min.im) / h) as usize).min(self.grid_n - 1);
        Some((ix, iy))
    }

    pub fn component_at(&self, z: Complex64) -> Option<&Component> {
        let (ix, iy) = self.cell_of(z)?;
        let id = self.cell_component[iy * self.grid_n + ix];
        if id < 0 { None } else { self.components.get(id as usize) }
    }

    /// Cell centers belonging to the component, row-major order.
    pub fn component_cells(&self, id: usize) -> Vec<Complex64> {
        let mut out = Vec::new();
        for iy in 0..self.grid_n {
            for ix in 0..self.grid_n {
                if self.cell_component[iy * self.grid_n + ix] == id as i32 {
                    out.push(self.cell_center(ix, iy));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PartitionOptions {
    /// Tube radius around separatrices, in cell diagonals.
    pub tube_radius_cells: f64,
    /// Step tolerance for the classification trajectories.
    pub classify_tol: f64,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        Self { tube_radius_cells: 2.0, classify_tol: 1e-7 }
    }
}

pub fn partition_window(
    map: &EntireMap,
    separatrices: &[Separatrix],
    bbox: BBox,
    grid_n: usize,
) -> Result<Partition> {
    partition_window_with(map, separatrices, bbox, grid_n, PartitionOptions::default())
}

pub fn partition_window_with(
    map: &EntireMap,
    separatrices: &[Separatrix],
    bbox: BBox,
    grid_n: usize,
    opts: PartitionOptions,
) -> Result<Partition> {
    if grid_n < 10 {
        return Err(Error::InvalidInput("grid_n must be at least 10".into()));
    }
    if bbox.is_empty() {
        return Err(Error::InvalidInput("window is empty".into()));
    }
    let n = grid_n;
    let cw = bbox.width() / n as f64;
    let ch = bbox.height() / n as f64;
    let cell_diag = (cw * cw + ch * ch).sqrt();
    let tube = opts.tube_radius_cells * cell_diag;

    // -2 unvisited, -1 blocked
    let mut cells: Vec<i32> = vec![-2; n * n];
    for sep in separatrices {
        block_tube(&mut cells, &sep.curve, bbox, n, cw, ch, tube);
    }
    // the singular balls are not part of any domain either
    for root in map.q_roots() {
        let radius = flow::exclusion_radius(root.location) + tube;
        block_disk(&mut cells, root.location, radius, bbox, n, cw, ch);
    }

    // 4-connected flood fill over unblocked cells
    let mut components: Vec<Component> = Vec::new();
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for start in 0..n * n {
        if cells[start] != -2 {
            continue;
        }
        let id = components.len() as i32;
        let mut cell_count = 0usize;
        let mut member_cells: Vec<usize> = Vec::new();
        cells[start] = id;
        stack.push((start % n, start / n));
        while let Some((ix, iy)) = stack.pop() {
            cell_count += 1;
            member_cells.push(iy * n + ix);
            let mut visit = |jx: usize, jy: usize, cells: &mut Vec<i32>| {
                let idx = jy * n + jx;
                if cells[idx] == -2 {
                    cells[idx] = id;
                    stack.push((jx, jy));
                }
            };
            if ix > 0 {
                visit(ix - 1, iy, &mut cells);
            }
            if ix + 1 < n {
                visit(ix + 1, iy, &mut cells);
            }
            if iy > 0 {
                visit(ix, iy - 1, &mut cells);
            }
            if iy + 1 < n {
                visit(ix, iy + 1, &mut cells);
            }
        }
        components.push(Component {
            id: id as usize,
            label: DomainLabel::Exceptional { index: 0 },
            cell_count,
            reps: representative_cells(&member_cells, n, bbox, cw, ch),
            contains_origin: false,
            unresolved: false,
        });
    }

    // classification of each component through its representatives
    let r0 = scaling_radius(map);
    let budget = 2.0 * bbox.diagonal() + 12.0 * r0;
    let classify_window = bbox.padded(4.0 * r0 + 1.0);
    let flow_opts = FlowOptions {
        tol: opts.classify_tol,
        carry_f: false,
        window: Some(classify_window),
        ..FlowOptions::default()
    };

    let origin_component = Complex64::new(0.0, 0.0);
    let origin_id = nearest_component_cell(&cells, n, bbox, cw, ch, origin_component);

    let mut next_l: std::collections::BTreeMap<usize, i64> = Default::default();
    let mut exceptional_index = 0usize;
    for comp in components.iter_mut() {
        comp.contains_origin = origin_id == Some(comp.id as i32);
        let mut full_line_sectors: Vec<usize> = Vec::new();
        let mut landing_votes = 0usize;
        let mut votes = 0usize;
        for &rep in &comp.reps {
            let curve = match integrate_flow_with(map, rep, (-budget, budget), flow_opts) {
                Ok(c) => c,
                Err(_) => continue,
            };
            let cls = match flow::classify_trajectory(map, &curve) {
                Ok(c) => c,
                Err(_) => continue,
            };
            votes += 1;
            if cls.is_full_horizontal_line() {
                full_line_sectors.push(sector_of(map, curve.last().z, r0));
            } else {
                landing_votes += 1;
            }
        }
        let full = full_line_sectors.len();
        comp.unresolved = votes == 0 || (full > 0 && landing_votes > 0);
        comp.label = if comp.contains_origin {
            DomainLabel::D0
        } else if full > landing_votes && votes > 0 {
            let j = majority(&full_line_sectors);
            let l = next_l.entry(j).or_insert(0);
            let label = DomainLabel::C { j, l: *l };
            *l += 1;
            label
        } else {
            let label = DomainLabel::Exceptional { index: exceptional_index };
            exceptional_index += 1;
            label
        };
    }

    Ok(Partition { bbox, grid_n: n, cell_component: cells, components })
}

/// Sector index 1..2d of a far point, in the frame where sector 1 starts
/// at the first asymptotic direction rotated by -π/(2d).
fn sector_of(map: &EntireMap, z: Complex64, _r0: f64) -> usize {
    let d = map.d();
    if d == 0 {
        return 1;
    }
    let dirs = map.p().asymptotic_directions();
    let base = dirs[0].arg() - PI / (2.0 * d as f64);
    let mut rel = (z.arg() - base) % (2.0 * PI);
    if rel < 0.0 {
        rel += 2.0 * PI;
    }
    ((rel / (PI / d as f64)) as usize % (2 * d)) + 1
}

fn majority(values: &[usize]) -> usize {
    let mut best = (0usize, 0usize);
    for &v in values {
        let count = values.iter().filter(|&&x| x == v).count();
        if count > best.1 {
            best = (v, count);
        }
    }
    best.0
}

fn representative_cells(
    member_cells: &[usize],
    n: usize,
    bbox: BBox,
    cw: f64,
    ch: f64,
) -> Vec<Complex64> {
    let mut sorted: Vec<usize> = member_cells.to_vec();
    sorted.sort_unstable();
    let picks = [0, sorted.len() / 2, sorted.len() - 1];
    let mut reps = Vec::new();
    for &i in &picks {
        let idx = sorted[i];
        let z = Complex64::new(
            bbox.min.re + ((idx % n) as f64 + 0.5) * cw,
            bbox.min.im + ((idx / n) as f64 + 0.5) * ch,
        );
        if !reps.contains(&z) {
            reps.push(z);
        }
    }
    reps
}

fn nearest_component_cell(
    cells: &[i32],
    n: usize,
    bbox: BBox,
    cw: f64,
    ch: f64,
    z: Complex64,
) -> Option<i32> {
    if !bbox.contains(z) {
        return None;
    }
    let ix = (((z.re - bbox.min.re) / cw) as usize).min(n - 1);
    let iy = (((z.im - bbox.min.im) / ch) as usize).min(n - 1);
    for ring in 0..4usize {
        for dy in -(ring as i32)..=ring as i32 {
            for dx in -(ring as i32)..=ring as i32 {
                let jx = ix as i32 + dx;
                let jy = iy as i32 + dy;
                if jx < 0 || jy < 0 || jx >= n as i32 || jy >= n as i32 {
                    continue;
                }
                let v = cells[jy as usize * n + jx as usize];
                if v >= 0 {
                    return Some(v);
                }
            }
        }
    }
    None
}

fn block_tube(
    cells: &mut [i32],
    curve: &FlowCurve,
    bbox: BBox,
    n: usize,
    cw: f64,
    ch: f64,
    tube: f64,
) {
    let step = 0.5 * cw.min(ch);
    let mut mark_near = |p: Complex64| {
        let ix_lo = ((p.re - tube - bbox.min.re) / cw).floor() as i64;
        let ix_hi = ((p.re + tube - bbox.min.re) / cw).ceil() as i64;
        let iy_lo = ((p.im - tube - bbox.min.im) / ch).floor() as i64;
        let iy_hi = ((p.im + tube - bbox.min.im) / ch).ceil() as i64;
        for iy in iy_lo.max(0)..=iy_hi.min(n as i64 - 1) {
            for ix in ix_lo.max(0)..=ix_hi.min(n as i64 - 1) {
                let center = Complex64::new(
                    bbox.min.re + (ix as f64 + 0.5) * cw,
                    bbox.min.im + (iy as f64 + 0.5) * ch,
                );
                if (center - p).norm() <= tube {
                    cells[iy as usize * n + ix as usize] = -1;
                }
            }
        }
    };
    for w in curve.samples.windows(2) {
        let (a, b) = (w[0].z, w[1].z);
        let pad = bbox.padded(tube);
        if !pad.contains(a) && !pad.contains(b) {
            continue;
        }
        let len = (b - a).norm();
        let steps = (len / step).ceil() as usize;
        for i in 0..=steps {
            let t = i as f64 / steps.max(1) as f64;
            mark_near(a + t * (b - a));
        }
    }
}

fn block_disk(
    cells: &mut [i32],
    center: Complex64,
    radius: f64,
    bbox: BBox,
    n: usize,
    cw: f64,
    ch: f64,
) {
    let ix_lo = ((center.re - radius - bbox.min.re) / cw).floor() as i64;
    let ix_hi = ((center.re + radius - bbox.min.re) / cw).ceil() as i64;
    let iy_lo = ((center.im - radius - bbox.min.im) / ch).floor() as i64;
    let iy_hi = ((center.im + radius - bbox.min.im) / ch).ceil() as i64;
    for iy in iy_lo.max(0)..=iy_hi.min(n as i64 - 1) {
        for ix in ix_lo.max(0)..=ix_hi.min(n as i64 - 1) {
            let c = Complex64::new(
                bbox.min.re + (ix as f64 + 0.5) * cw,
                bbox.min.im + (iy as f64 + 0.5) * ch,
            );
            if (c - center).norm() <= radius {
                cells[iy as usize * n + ix as usize] = -1;
            }
        }
    }
}

/// Injectivity probe for one component: F at up to `n_samples` cell
/// centers, flagging any pair that collides in the w-plane while being
/// far apart in the z-plane.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnivalenceReport {
    pub component: usize,
    pub pass: bool,
    pub samples_used: usize,
    pub witness: Option<UnivalenceWitness>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct UnivalenceWitness {
    #[serde(with = "crate::complex_serde")]
    pub z_a: Complex64,
    #[serde(with = "crate::complex_serde")]
    pub z_b: Complex64,
    #[serde(with = "crate::complex_serde")]
    pub w_a: Complex64,
    #[serde(with = "crate::complex_serde")]
    pub w_b: Complex64,
}

pub fn check_univalence(
    map: &EntireMap,
    partition: &Partition,
    component: usize,
    n_samples: usize,
) -> Result<UnivalenceReport> {
    if component >= partition.components.len() {
        return Err(Error::InvalidInput(format!("no component {component}")));
    }
    let cells = partition.component_cells(component);
    let stride = (cells.len() / n_samples.max(1)).max(1);
    let (cw, ch) = partition.cell_size();
    let min_sep = 2.0 * (cw * cw + ch * ch).sqrt();

    let mut points: Vec<(Complex64, Complex64)> = Vec::new();
    for z in cells.iter().step_by(stride) {
        if let Ok(f) = map.eval_f(*z) {
            points.push((*z, f));
        }
    }
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let (za, wa) = points[i];
            let (zb, wb) = points[j];
            if (za - zb).norm() <= min_sep {
                continue;
            }
            let scale = 1.0 + wa.norm() + wb.norm();
            if (wa - wb).norm() < 1e-9 * scale {
                return Ok(UnivalenceReport {
                    component,
                    pass: false,
                    samples_used: points.len(),
                    witness: Some(UnivalenceWitness { z_a: za, z_b: zb, w_a: wa, w_b: wb }),
                });
            }
        }
    }
    Ok(UnivalenceReport { component, pass: true, samples_used: points.len(), witness: None })
}

/// Ramification order of a node: finite n >= 2, or infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeOrder {
    Finite(usize),
    Infinite,
}

impl Serialize for NodeOrder {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            NodeOrder::Finite(n) => s.serialize_u64(*n as u64),
            NodeOrder::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for NodeOrder {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) => Ok(NodeOrder::Finite(n as usize)),
            Raw::S(s) if s == "inf" => Ok(NodeOrder::Infinite),
            Raw::S(s) => Err(serde::de::Error::custom(format!("bad order {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sheet {
    pub id: usize,
    pub label: DomainLabel,
    pub cuts: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cut {
    pub id: usize,
    pub separatrix: usize,
    #[serde(with = "crate::complex_serde")]
    pub w: Complex64,
    pub sheets: (usize, usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RamificationNode {
    #[serde(with = "crate::complex_serde")]
    pub w: Complex64,
    pub order: NodeOrder,
    pub cuts: Vec<usize>,
    pub truncated: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowInfo {
    pub bbox: BBox,
    pub truncation_depth: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfaceSkeleton {
    pub sheets: Vec<Sheet>,
    pub cuts: Vec<Cut>,
    pub nodes: Vec<RamificationNode>,
    pub window: WindowInfo,
}

impl SurfaceSkeleton {
    pub fn infinite_node_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.order == NodeOrder::Infinite).count()
    }

    /// Σ(order - 1) over finite nodes.
    pub fn finite_order_sum(&self) -> usize {
        self.nodes
            .iter()
            .filter_map(|n| match n.order {
                NodeOrder::Finite(k) => Some(k - 1),
                NodeOrder::Infinite => None,
            })
            .sum()
    }
}

/// Assembles the truncated sheet/cut/node skeleton from a traced
/// separatrix family and a window partition. Cuts are separatrices whose
/// two sides lie in distinct components; nodes group cuts by landing
/// value, with one infinite node per asymptotic ray and one finite node
/// of order r+1 per zero of Q (order read off the local ray count).
pub fn build_skeleton(
    map: &EntireMap,
    partition: &Partition,
    separatrices: &[Separatrix],
    truncation_depth: i64,
) -> Result<SurfaceSkeleton> {
    let (cw, ch) = partition.cell_size();
    let offset = 3.5 * (cw * cw + ch * ch).sqrt();

    let mut cuts: Vec<Cut> = Vec::new();
    for (i, sep) in separatrices.iter().enumerate() {
        let Some(w) = sep.landing_value() else { continue };
        let sides = side_components(partition, &sep.curve, offset);
        let Some((a, b)) = sides else { continue };
        if a == b {
            // slit-bank curves from asymptotic seeds must separate sheets
            if matches!(sep.origin, SeparatrixOrigin::AsymptoticSeed { .. }) {
                return Err(Error::InconsistentGluing { cut: i });
            }
            continue;
        }
        cuts.push(Cut { id: cuts.len(), separatrix: i, w, sheets: (a, b) });
    }

    let mut sheets: Vec<Sheet> = partition
        .components
        .iter()
        .map(|c| Sheet { id: c.id, label: c.label, cuts: Vec::new() })
        .collect();
    for cut in &cuts {
        sheets[cut.sheets.0].cuts.push(cut.id);
        sheets[cut.sheets.1].cuts.push(cut.id);
    }

    let mut nodes: Vec<RamificationNode> = Vec::new();
    for value in map.asymptotic_values()? {
        let members: Vec<usize> = cuts
            .iter()
            .filter(|c| {
                matches!(separatrices[c.separatrix].origin,
                    SeparatrixOrigin::AsymptoticSeed { p, .. } if p == value.j)
            })
            .map(|c| c.id)
            .collect();
        nodes.push(RamificationNode {
            w: value.w,
            order: NodeOrder::Infinite,
            cuts: members,
            truncated: true,
        });
    }
    for root in map.q_roots() {
        let rays = singularity_rays(map, root.location)?;
        let order = rays.directions.len() / 2;
        let members: Vec<usize> = cuts
            .iter()
            .filter(|c| {
                matches!(separatrices[c.separatrix].origin,
                    SeparatrixOrigin::RootGerm { root: r, .. } if (r - root.location).norm() < 1e-9)
            })
            .map(|c| c.id)
            .collect();
        nodes.push(RamificationNode {
            w: map.eval_f(root.location)?,
            order: NodeOrder::Finite(order),
            cuts: members,
            truncated: false,
        });
    }
    nodes.sort_by(|a, b| {
        let ka = (normalize_arg(a.w), a.w.norm());
        let kb = (normalize_arg(b.w), b.w.norm());
        ka.partial_cmp(&kb).unwrap()
    });

    Ok(SurfaceSkeleton {
        sheets,
        cuts,
        nodes,
        window: WindowInfo { bbox: partition.bbox, truncation_depth },
    })
}

fn normalize_arg(w: Complex64) -> f64 {
    let mut a = w.arg();
    if a < 0.0 {
        a += 2.0 * PI;
    }
    a
}

/// The component ids seen on the two sides of a curve, by majority vote
/// over normal offsets at interior samples.
fn side_components(partition: &Partition, curve: &FlowCurve, offset: f64) -> Option<(usize, usize)> {
    let mut left: Vec<usize> = Vec::new();
    let mut right: Vec<usize> = Vec::new();
    let samples = &curve.samples;
    let stride = (samples.len() / 60).max(1);
    for i in (stride..samples.len().saturating_sub(stride)).step_by(stride) {
        let tangent = samples[i + 1].z - samples[i - 1].z;
        let n = tangent.norm();
        if n < 1e-14 {
            continue;
        }
        let normal = Complex64::new(0.0, 1.0) * tangent / n;
        if let Some(c) = partition.component_at(samples[i].z + offset * normal) {
            left.push(c.id);
        }
        if let Some(c) = partition.component_at(samples[i].z - offset * normal) {
            right.push(c.id);
        }
    }
    if left.is_empty() || right.is_empty() {
        return None;
    }
    Some((majority(&left), majority(&right)))
}
