//! Certified asymptotic values of F(z) = ∫₀^z e^{t^d} dt along the rays
//! where Re P -> -inf, for d = 1, 2, 3.

use logriemann::EntireMap;

fn main() {
    for d in 1..=3 {
        let map = EntireMap::gauss(d);
        println!("d = {d}:");
        for v in map.asymptotic_values().unwrap() {
            println!(
                "  ray {} at arg {:+.6}: w' = {:+.12} {:+.12}i  (tail bound {:.2e})",
                v.j,
                v.rho.arg(),
                v.w.re,
                v.w.im,
                v.tail_bound
            );
        }
    }
}
