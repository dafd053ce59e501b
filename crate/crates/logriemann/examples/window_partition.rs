//! Cutting a window along the separatrices of P = z decomposes it into
//! the base domain containing 0, line domains and exceptional pieces.
//! Each line domain is checked for univalence of F by pairwise collision
//! sampling.

use logriemann::EntireMap;
use logriemann::flow::BBox;
use logriemann::foliation::{check_univalence, partition_window, trace_separatrices};

fn main() {
    let map = EntireMap::gauss(1);
    let bbox = BBox::square(7.0);
    let set = trace_separatrices(&map, 2, bbox).unwrap();
    let partition = partition_window(&map, &set.separatrices, bbox, 120).unwrap();
    for component in &partition.components {
        let report = check_univalence(&map, &partition, component.id, 800).unwrap();
        println!(
            "component {} ({:?}): {} cells, origin: {}, univalent on sample: {}",
            component.id,
            component.label,
            component.cell_count,
            component.contains_origin,
            report.pass
        );
    }
}
