//! Symmetric accessory-parameter solve for the polygon approximating the
//! error-function surface: prevertices on the unit circle with dihedral
//! symmetry, unknown rotation theta and prefactor A, matched so the
//! vertex images hit the asymptotic values.

use logriemann::EntireMap;
use logriemann::sc::{sc_eval, solve_symmetric_parameters};

fn main() {
    let map = EntireMap::gauss(2);
    let solve = solve_symmetric_parameters(&map, 1).unwrap();
    println!(
        "theta = {:.9} (pi/2 = {:.9}), residual {:.2e}, {} iterations",
        solve.theta,
        std::f64::consts::FRAC_PI_2,
        solve.residual,
        solve.iterations
    );
    for (i, v) in solve.spec.vertices.iter().enumerate() {
        let image = sc_eval(&solve.spec, v.z).unwrap();
        println!("vertex {i} at {:+.6}{:+.6}i maps to {:+.9}{:+.9}i", v.z.re, v.z.im, image.re, image.im);
    }
}
