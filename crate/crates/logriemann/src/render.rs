//! Deterministic SVG rendering of foliations: domain fills, separatrices,
//! streamlines and ramification-node markers as separate layers. All
//! coordinates are written with fixed precision so identical inputs yield
//! byte-identical files.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::config::RenderConfig;
use crate::flow::{BBox, FlowCurve};
use crate::foliation::{DomainLabel, Partition, Separatrix, SurfaceSkeleton};

const CANVAS: f64 = 800.0;

/// Everything the renderer consumes; all fields optional so partial
/// pipelines can still produce a picture.
#[derive(Default)]
pub struct Scene<'a> {
    pub partition: Option<&'a Partition>,
    pub separatrices: &'a [Separatrix],
    pub streamlines: &'a [FlowCurve],
    pub skeleton: Option<&'a SurfaceSkeleton>,
}

struct Frame {
    bbox: BBox,
    scale: f64,
    height: f64,
}

impl Frame {
    fn new(bbox: BBox) -> Self {
        let w = bbox.width().max(1e-12);
        let h = bbox.height().max(1e-12);
        let scale = CANVAS / w;
        Self { bbox, scale, height: h * scale }
    }

    fn to_px(&self, z: Complex64) -> (f64, f64) {
        (
            (z.re - self.bbox.min.re) * self.scale,
            // SVG y grows downward
            self.height - (z.im - self.bbox.min.im) * self.scale,
        )
    }
}

fn fmt_px(v: f64) -> String {
    format!("{:.3}", v)
}

fn polyline_path(frame: &Frame, points: impl Iterator<Item = Complex64>) -> String {
    let mut d = String::new();
    for (i, z) in points.enumerate() {
        let (x, y) = frame.to_px(z);
        let cmd = if i == 0 { 'M' } else { 'L' };
        let _ = write!(d, "{}{} {} ", cmd, fmt_px(x), fmt_px(y));
    }
    d.trim_end().to_string()
}

fn curve_points<'a>(
    curve: &'a FlowCurve,
    stride: usize,
    clip: BBox,
) -> impl Iterator<Item = Complex64> + 'a {
    let pad = clip.padded(0.05 * clip.diagonal());
    curve
        .samples
        .iter()
        .step_by(stride.max(1))
        .map(|s| s.z)
        .filter(move |z| pad.contains(*z))
}

/// Renders the scene over `bbox` into a standalone SVG document.
pub fn render_svg(bbox: BBox, scene: &Scene, options: &RenderConfig) -> String {
    let frame = Frame::new(bbox);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {} {}" width="{}" height="{}">"#,
        fmt_px(CANVAS),
        fmt_px(frame.height),
        fmt_px(CANVAS),
        fmt_px(frame.height)
    );

    // layer 1: domain fills, one rect per horizontal run of same-component cells
    let _ = writeln!(svg, r#"<g id="domains">"#);
    if let Some(partition) = scene.partition {
        let n = partition.grid_n;
        let (cw, ch) = partition.cell_size();
        for iy in 0..n {
            let mut ix = 0usize;
            while ix < n {
                let id = partition.cell_component[iy * n + ix];
                if id < 0 {
                    ix += 1;
                    continue;
                }
                let mut run = 1usize;
                while ix + run < n && partition.cell_component[iy * n + ix + run] == id {
                    run += 1;
                }
                let color = match partition.components[id as usize].label {
                    DomainLabel::D0 => &options.color_base,
                    DomainLabel::C { .. } => &options.color_line_domain,
                    DomainLabel::Exceptional { .. } => &options.color_exceptional,
                };
                let lo = Complex64::new(
                    partition.bbox.min.re + ix as f64 * cw,
                    partition.bbox.min.im + (iy + 1) as f64 * ch,
                );
                let (x, y) = frame.to_px(lo);
                let _ = writeln!(
                    svg,
                    r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
                    fmt_px(x),
                    fmt_px(y),
                    fmt_px(run as f64 * cw * frame.scale),
                    fmt_px(ch * frame.scale),
                    color
                );
                ix += run;
            }
        }
    }
    let _ = writeln!(svg, "</g>");

    // layer 2: streamlines
    let _ = writeln!(svg, r#"<g id="streamlines">"#);
    for curve in scene.streamlines {
        let d = polyline_path(&frame, curve_points(curve, options.stride, bbox));
        if !d.is_empty() {
            let _ = writeln!(
                svg,
                r#"<path d="{}" fill="none" stroke="{}" stroke-width="1"/>"#,
                d, options.color_streamline
            );
        }
    }
    let _ = writeln!(svg, "</g>");

    // layer 3: separatrices
    let _ = writeln!(svg, r#"<g id="separatrices">"#);
    for sep in scene.separatrices {
        let d = polyline_path(&frame, curve_points(&sep.curve, options.stride, bbox));
        if !d.is_empty() {
            let _ = writeln!(
                svg,
                r#"<path d="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
                d, options.color_separatrix
            );
        }
    }
    let _ = writeln!(svg, "</g>");

    // layer 4: ramification nodes projected to the w-plane are annotated
    // at the landing points of their cuts in the z-plane; finite nodes sit
    // at the corresponding zero of Q
    let _ = writeln!(svg, r#"<g id="nodes">"#);
    if let Some(skeleton) = scene.skeleton {
        for node in &skeleton.nodes {
            let (x, y) = frame.to_px(node.w);
            let shape = match node.order {
                crate::foliation::NodeOrder::Infinite => "6",
                crate::foliation::NodeOrder::Finite(_) => "4",
            };
            let _ = writeln!(
                svg,
                r#"<circle cx="{}" cy="{}" r="{}" fill="{}"/>"#,
                fmt_px(x),
                fmt_px(y),
                shape,
                options.color_node
            );
        }
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, "</svg>");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{integrate_flow, trace_transversal};
    use crate::foliation::{partition_window, trace_separatrices};
    use crate::map::EntireMap;

    #[test]
    fn empty_scene_renders_valid_svg() {
        let svg = render_svg(BBox::square(2.0), &Scene::default(), &RenderConfig::default());
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains(r#"<g id="separatrices">"#));
    }

    #[test]
    fn separatrix_layer_has_one_path_per_curve() {
        let map = EntireMap::gauss(2);
        let bbox = BBox::square(4.0);
        let set = trace_separatrices(&map, 1, bbox).unwrap();
        let scene = Scene { separatrices: &set.separatrices, ..Scene::default() };
        let svg = render_svg(bbox, &scene, &RenderConfig::default());
        let layer = svg.split(r#"<g id="separatrices">"#).nth(1).unwrap();
        let layer = layer.split("</g>").next().unwrap();
        let paths = layer.matches("<path").count();
        assert_eq!(paths, set.separatrices.len());
    }

    #[test]
    fn rendering_is_deterministic() {
        let map = EntireMap::gauss(1);
        let bbox = BBox::square(5.0);
        let set = trace_separatrices(&map, 1, bbox).unwrap();
        let partition = partition_window(&map, &set.separatrices, bbox, 60).unwrap();
        let streams =
            vec![integrate_flow(&map, Complex64::new(0.5, 0.5), (-3.0, 3.0), 1e-9).unwrap()];
        let scene = Scene {
            partition: Some(&partition),
            separatrices: &set.separatrices,
            streamlines: &streams,
            skeleton: None,
        };
        let one = render_svg(bbox, &scene, &RenderConfig::default());
        let two = render_svg(bbox, &scene, &RenderConfig::default());
        assert_eq!(one, two);
        assert!(one.contains("<rect"));
    }

    #[test]
    fn transversal_curves_can_be_rendered_as_streamlines() {
        let map = EntireMap::gauss(2);
        let curve = trace_transversal(&map, 1, 3, 0.8, 40.0).unwrap();
        let fake = FlowCurve {
            seed: curve.samples[0].z,
            samples: curve.samples.clone(),
            f_values: None,
            t_span: (0.0, 0.0),
            im_level: 0.0,
            end_neg: crate::flow::Termination::BudgetReached,
            end_pos: crate::flow::Termination::BudgetReached,
        };
        let scene = Scene { streamlines: std::slice::from_ref(&fake), ..Scene::default() };
        let svg = render_svg(BBox::square(8.0), &scene, &RenderConfig::default());
        assert!(svg.contains(r#"<g id="streamlines">"#));
    }
}
