//! Numerical study of entire functions of the form
//!
//! ```text
//! F(z) = ∫₀^z Q(t) e^{P(t)} dt
//! ```
//!
//! for polynomial pairs (P, Q): evaluation of F and its derivative, the
//! asymptotic values of F along the distinguished rays, the horizontal
//! foliation { Im F = const } and its separatrices, the induced sheet
//! decomposition of the associated log-Riemann surface, and generalized
//! Schwarz-Christoffel maps for log-polygons with ends at infinity.
//!
//! The crate is organized as a library with runnable examples (see
//! `examples/`) plus a thin `logriemann` CLI binary exposing the same
//! capabilities as subcommands.

pub mod config;
pub mod error;
pub mod flow;
pub mod foliation;
pub mod map;
pub mod poly;
pub mod quad;
pub mod render;
pub mod sc;
pub mod verify;

pub use error::{Error, Result};
pub use map::{AsymptoticValue, EntireMap, MapSpec};
pub use poly::{ComplexPolynomial, Root, RootSet};

/// serde adapter: Complex64 as a `[re, im]` pair.
pub mod complex_serde {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let pair: [f64; 2] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(pair[0], pair[1]))
    }
}
