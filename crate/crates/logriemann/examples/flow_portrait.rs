//! Level curves of Im F for P = z^3: the unit-speed flow keeps Im F
//! constant and moves Re F forward at unit rate. Prints the drift of the
//! conserved quantity along each trajectory.

use logriemann::EntireMap;
use logriemann::flow::integrate_flow;
use num_complex::Complex64;

fn main() {
    let map = EntireMap::gauss(3);
    for i in 0..6 {
        let z0 = Complex64::new(0.3, -0.5 + 0.2 * i as f64);
        let curve = integrate_flow(&map, z0, (-8.0, 8.0), 1e-10).unwrap();
        let fs = curve.f_values.as_ref().unwrap();
        println!(
            "seed {:+.2}{:+.2}i: {} samples, Im F = {:+.6}, drift {:.2e}, Re F {:+.4} -> {:+.4}",
            z0.re,
            z0.im,
            curve.samples.len(),
            curve.im_level,
            curve.im_drift(),
            fs.first().unwrap().re,
            fs.last().unwrap().re
        );
    }
}
