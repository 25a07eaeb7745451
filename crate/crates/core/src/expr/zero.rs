//! Zero testing: exact normalization first, seeded sampling second.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{eval_guarded, try_normalize, Expr, ExprError, Point, C64};

/// Sampling configuration for [`is_zero_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct Sampler {
    pub seed: u64,
    pub count: usize,
    pub tol: f64,
    /// Sample moduli are drawn from `[r_min, r_max]`.
    pub r_min: f64,
    pub r_max: f64,
    /// Points where a divisor is below `margin` times its scale are skipped.
    pub margin: f64,
}

impl Default for Sampler {
    fn default() -> Self {
        Sampler { seed: 0xDA2B0, count: 64, tol: 1e-9, r_min: 0.3, r_max: 3.0, margin: 1e-3 }
    }
}

impl Sampler {
    pub fn with_seed(seed: u64) -> Self {
        Sampler { seed, ..Sampler::default() }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Deterministic sample points for the given names.
    pub fn points(&self, names: &[String]) -> impl Iterator<Item = Point> + '_ {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let names = names.to_vec();
        (0..self.count).map(move |_| {
            names
                .iter()
                .map(|n| {
                    let r = rng.gen_range(self.r_min..=self.r_max);
                    let theta = rng.gen_range(-0.95 * PI..=0.95 * PI);
                    (n.clone(), C64::from_polar(r, theta))
                })
                .collect()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ZeroVerdict {
    /// `exact` means the normal form is the literal zero and no sampling ran.
    Zero { samples_used: usize, exact: bool, max_residual: f64 },
    NonZero {
        #[serde(serialize_with = "serialize_point")]
        witness: Point,
        #[serde(serialize_with = "serialize_c64")]
        value: C64,
        scale: f64,
        samples_used: usize,
    },
}

fn serialize_c64<S: serde::Serializer>(v: &C64, s: S) -> Result<S::Ok, S::Error> {
    [v.re, v.im].serialize(s)
}

fn serialize_point<S: serde::Serializer>(p: &Point, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut m = s.serialize_map(Some(p.len()))?;
    for (k, v) in p {
        m.serialize_entry(k, &[v.re, v.im])?;
    }
    m.end()
}

impl ZeroVerdict {
    pub fn is_zero(&self) -> bool {
        matches!(self, ZeroVerdict::Zero { .. })
    }

    /// Largest scaled residual `|v| / (1 + scale)` observed.
    pub fn residual(&self) -> f64 {
        match self {
            ZeroVerdict::Zero { max_residual, .. } => *max_residual,
            ZeroVerdict::NonZero { value, scale, .. } => value.norm() / (1.0 + scale),
        }
    }

    pub fn samples_used(&self) -> usize {
        match self {
            ZeroVerdict::Zero { samples_used, .. } | ZeroVerdict::NonZero { samples_used, .. } => *samples_used,
        }
    }
}

/// Zero test with the default sampler (seed `0xDA2B0`, 64 points, tol `1e-9`).
pub fn is_zero(e: &Expr) -> Result<ZeroVerdict, ExprError> {
    is_zero_with(e, &Sampler::default())
}

/// Zero test. A literal zero normal form answers exactly. Otherwise the normal
/// form is sampled; a point counts as zero when `|v| <= tol * (1 + scale)`.
pub fn is_zero_with(e: &Expr, sampler: &Sampler) -> Result<ZeroVerdict, ExprError> {
    let n = try_normalize(e)?;
    if n.is_zero_literal() {
        return Ok(ZeroVerdict::Zero { samples_used: 0, exact: true, max_residual: 0.0 });
    }
    let names: Vec<String> = n.free_names().into_iter().collect();
    let mut used = 0;
    let mut rejected = 0;
    let mut max_residual: f64 = 0.0;
    let count = if names.is_empty() { 1 } else { sampler.count };
    let probe = Sampler { count, ..sampler.clone() };
    for point in probe.points(&names) {
        match eval_guarded(&n, &point, sampler.margin) {
            Ok((v, scale)) => {
                used += 1;
                let residual = v.norm() / (1.0 + scale);
                if v.norm() > sampler.tol * (1.0 + scale) {
                    return Ok(ZeroVerdict::NonZero { witness: point, value: v, scale, samples_used: used });
                }
                max_residual = max_residual.max(residual);
            }
            Err(ExprError::UnboundName(name)) => return Err(ExprError::UnboundName(name)),
            Err(_) => rejected += 1,
        }
    }
    if used == 0 {
        return Err(ExprError::AllSamplesRejected(rejected));
    }
    Ok(ZeroVerdict::Zero { samples_used: used, exact: false, max_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn exact_zero_uses_no_samples() {
        let v = is_zero(&parse("(x+1)^2 - x^2 - 2*x - 1").unwrap()).unwrap();
        assert_eq!(v, ZeroVerdict::Zero { samples_used: 0, exact: true, max_residual: 0.0 });
    }

    #[test]
    fn trig_identity_is_found_by_sampling() {
        let v = is_zero(&parse("sin(x)^2 + cos(x)^2 - 1").unwrap()).unwrap();
        assert!(v.is_zero());
        assert!(v.samples_used() > 0);
        let t = is_zero(&parse("tan(x) - sin(x)/cos(x)").unwrap()).unwrap();
        assert!(t.is_zero());
    }

    #[test]
    fn nonzero_has_witness() {
        let v = is_zero(&parse("sin(x)^2 - cos(x)^2").unwrap()).unwrap();
        match v {
            ZeroVerdict::NonZero { witness, .. } => assert!(witness.contains_key("x")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let e = parse("exp(a*x) - exp(a)*exp(x)").unwrap();
        assert_eq!(is_zero(&e).unwrap(), is_zero(&e).unwrap());
    }
}
