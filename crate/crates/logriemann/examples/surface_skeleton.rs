//! The combinatorial skeleton of the log-Riemann surface of
//! F' = (z^2 - 1) e^{z^3 - z}: sheets from the window partition, cuts from
//! the separatrices, one infinite ramification node per asymptotic value
//! and one finite node per zero of Q.

use logriemann::flow::BBox;
use logriemann::foliation::{build_skeleton, partition_window, trace_separatrices};
use logriemann::{ComplexPolynomial, EntireMap};

fn main() {
    let p = ComplexPolynomial::from_real(&[0.0, -1.0, 0.0, 1.0]);
    let q = ComplexPolynomial::from_real(&[-1.0, 0.0, 1.0]);
    let map = EntireMap::new(p, q).unwrap();
    let bbox = BBox::square(4.0);
    let set = trace_separatrices(&map, 2, bbox).unwrap();
    let partition = partition_window(&map, &set.separatrices, bbox, 100).unwrap();
    let skeleton = build_skeleton(&map, &partition, &set.separatrices, 2).unwrap();
    println!("{} sheets, {} cuts", skeleton.sheets.len(), skeleton.cuts.len());
    for node in &skeleton.nodes {
        println!(
            "node at w = {:+.4}{:+.4}i, order {:?}, {} cuts{}",
            node.w.re,
            node.w.im,
            node.order,
            node.cuts.len(),
            if node.truncated { " (truncated at |k| <= K)" } else { "" }
        );
    }
}
