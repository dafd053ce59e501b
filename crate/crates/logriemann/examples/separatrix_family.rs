//! The separatrix family of the error-function map (P = z^2): for each
//! asymptotic value w'_p and index k, the boundary curve at level
//! Im F = Im w'_p + offset(k), plus the local rays at zeros of Q.

use logriemann::EntireMap;
use logriemann::flow::BBox;
use logriemann::foliation::{Landing, SeparatrixOrigin, trace_separatrices};

fn main() {
    let map = EntireMap::gauss(2);
    let set = trace_separatrices(&map, 2, BBox::square(5.0)).unwrap();
    println!("{} separatrices:", set.separatrices.len());
    for sep in &set.separatrices {
        let origin = match sep.origin {
            SeparatrixOrigin::AsymptoticSeed { p, k } => format!("value {p}, k = {k:+}"),
            SeparatrixOrigin::RootGerm { root, .. } => format!("germ at {root}"),
        };
        let landing = match sep.neg {
            Landing::Asymptotic { p, .. } => format!("lands at value {p}"),
            Landing::FiniteCritical { z0, .. } => format!("hits the critical point {z0:.3}"),
            Landing::Divergent => "divergent".into(),
            Landing::Open => "open in window".into(),
        };
        println!(
            "  {origin:>16}: level Im F = {:+.6}, inner end {landing}",
            sep.level
        );
    }
}
