//! Full rendering pipeline for the error-function map: separatrices,
//! window partition, skeleton nodes and a few streamlines, written to
//! foliation.svg in the current directory.

use logriemann::EntireMap;
use logriemann::config::RenderConfig;
use logriemann::flow::{BBox, integrate_flow};
use logriemann::foliation::{build_skeleton, partition_window, trace_separatrices};
use logriemann::render::{Scene, render_svg};
use num_complex::Complex64;

fn main() {
    let map = EntireMap::gauss(2);
    let bbox = BBox::square(4.0);
    let set = trace_separatrices(&map, 2, bbox).unwrap();
    let partition = partition_window(&map, &set.separatrices, bbox, 120).unwrap();
    let skeleton = build_skeleton(&map, &partition, &set.separatrices, 2).unwrap();
    let mut streamlines = Vec::new();
    for i in 0..8 {
        let z0 = Complex64::new(-1.5 + 0.4 * i as f64, 0.3);
        if let Ok(curve) = integrate_flow(&map, z0, (-6.0, 6.0), 1e-9) {
            streamlines.push(curve);
        }
    }
    let scene = Scene {
        partition: Some(&partition),
        separatrices: &set.separatrices,
        streamlines: &streamlines,
        skeleton: Some(&skeleton),
    };
    let svg = render_svg(bbox, &scene, &RenderConfig::default());
    std::fs::write("foliation.svg", &svg).unwrap();
    println!("wrote foliation.svg ({} bytes)", svg.len());
}
