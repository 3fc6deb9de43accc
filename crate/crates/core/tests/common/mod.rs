#![allow(dead_code)]

use ksafe::coefficient::{Coefficient, Scalar};
use ksafe::operator::DiffOp;
use ksafe::sobolev::MultiIndex;
use rand::Rng;

pub fn d(k: u32) -> MultiIndex {
    MultiIndex::new(vec![k])
}

/// Real trigonometric polynomial with `terms` modes of frequency at most `max_freq`.
pub fn trig_scalar<R: Rng>(rng: &mut R, terms: usize, max_freq: i64) -> Scalar {
    let freqs = (0..terms).map(|_| vec![rng.random_range(1..=max_freq)]).collect();
    let amps = (0..terms).map(|_| rng.random_range(-1.0..1.0)).collect();
    let phases = (0..terms).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    Scalar::constant(rng.random_range(-1.0..1.0)).add(&Scalar::trig(freqs, amps, phases))
}

/// Order-`s` scalar operator on the circle with trig coefficients; the top
/// coefficient is bounded away from zero.
pub fn trig_operator<R: Rng>(rng: &mut R, s: u32, max_freq: i64) -> DiffOp {
    let mut coeffs = Vec::new();
    for k in 0..=s {
        let mut c = trig_scalar(rng, 2, max_freq).scaled(0.3);
        if k == s {
            c = c.add(&Scalar::constant(1.5));
        }
        coeffs.push((d(k), Coefficient::scalar(1, c).unwrap()));
    }
    DiffOp::new(1, 1, coeffs).unwrap()
}

/// Power-law scalar of exact grade `g` on the circle.
pub fn graded_scalar(g: u32, seed: u64) -> Scalar {
    Scalar::power_law(1, g as f64 + 1.25, 64, seed, 0.3)
}
