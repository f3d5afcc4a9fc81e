//! Complex numbers in JSON as objects `{"re": .., "im": ..}`; a bare number
//! is read as a real value. The submodules plug into `#[serde(with = ..)]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A complex number as it appears in JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JsonComplex {
    Object { re: f64, #[serde(default)] im: f64 },
    Real(f64),
}

impl From<JsonComplex> for Complex64 {
    fn from(z: JsonComplex) -> Self {
        match z {
            JsonComplex::Object { re, im } => Complex64::new(re, im),
            JsonComplex::Real(re) => Complex64::new(re, 0.0),
        }
    }
}

impl From<Complex64> for JsonComplex {
    fn from(z: Complex64) -> Self {
        JsonComplex::Object { re: z.re, im: z.im }
    }
}

pub mod complex {
    use super::JsonComplex;
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        JsonComplex::from(*z).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        JsonComplex::deserialize(d).map(Complex64::from)
    }
}

pub mod complex_vec {
    use super::JsonComplex;
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|&z| JsonComplex::from(z)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        Vec::<JsonComplex>::deserialize(d).map(|v| v.into_iter().map(Complex64::from).collect())
    }
}
