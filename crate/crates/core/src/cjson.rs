//! Serde adapters writing complex numbers as `{"re": .., "im": ..}`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::numerics::C64;

#[derive(Serialize, Deserialize, Clone, Copy)]
struct ReIm {
    re: f64,
    im: f64,
}

impl From<C64> for ReIm {
    fn from(z: C64) -> Self {
        ReIm { re: z.re, im: z.im }
    }
}

pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
    ReIm::from(*z).serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
    let v = ReIm::deserialize(d)?;
    Ok(C64::new(v.re, v.im))
}

pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        let w: Vec<ReIm> = v.iter().map(|z| ReIm::from(*z)).collect();
        w.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        let w = Vec::<ReIm>::deserialize(d)?;
        Ok(w.into_iter().map(|v| C64::new(v.re, v.im)).collect())
    }
}
