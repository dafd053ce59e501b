//! Property tests over random maps and seeds.

use logriemann::flow::integrate_flow;
use logriemann::{ComplexPolynomial, EntireMap};
use num_complex::Complex64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    /// Real-coefficient maps commute with conjugation: F(conj z) = conj F(z).
    #[test]
    fn real_maps_commute_with_conjugation(
        c0 in -1.0f64..1.0,
        c1 in -1.0f64..1.0,
        lead in 0.5f64..1.5,
        re in -1.5f64..1.5,
        im in -1.5f64..1.5,
    ) {
        let p = ComplexPolynomial::from_real(&[c0, c1, 0.0, lead]);
        let q = ComplexPolynomial::from_real(&[1.0]);
        let map = EntireMap::new(p, q).unwrap();
        let z = Complex64::new(re, im);
        let f = map.eval_f(z).unwrap();
        let f_conj = map.eval_f(z.conj()).unwrap();
        prop_assert!((f_conj - f.conj()).norm() < 1e-9 * (1.0 + f.norm()));
    }

    /// The level-curve flow conserves Im F from any seed.
    #[test]
    fn flow_conserves_im_f_from_random_seeds(
        re in -1.5f64..1.5,
        im in -1.5f64..1.5,
    ) {
        let map = EntireMap::gauss(2);
        let curve = integrate_flow(&map, Complex64::new(re, im), (-5.0, 5.0), 1e-9).unwrap();
        prop_assert!(curve.im_drift() < 1e-6);
    }
}
