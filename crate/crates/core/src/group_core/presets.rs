//! Generator sets used throughout the experiments.

use alloc::vec;
use num_traits::Float;

use super::{Freeness, GeneratorSet, GroupElement, RationalMat2, C64};
use crate::error::Result;

/// The three p = 5 quaternion generators of norm 5, scaled into SU(2).
/// They generate a free group.
pub fn lps_p5() -> Result<GeneratorSet> {
    let s = 1.0 / 5f64.sqrt();
    let c = |re: f64, im: f64| C64::new(re * s, im * s);
    Ok(GeneratorSet::new(vec![
        GroupElement::su2(c(1.0, 2.0), c(0.0, 0.0))?,
        GroupElement::su2(c(1.0, 0.0), c(-2.0, 0.0))?,
        GroupElement::su2(c(1.0, 0.0), c(0.0, 2.0))?,
    ])?
    .with_freeness(Freeness::Assumed))
}

/// `[[1, 2], [0, 1]]` and `[[1, 0], [2, 1]]` with exact entries. Free by
/// ping-pong on the slopes `|u| > 1`, `|u| < 1`.
pub fn sanov() -> Result<GeneratorSet> {
    Ok(GeneratorSet::new(vec![
        GroupElement::sl2q(RationalMat2::from_ints(1, 2, 0, 1))?,
        GroupElement::sl2q(RationalMat2::from_ints(1, 0, 2, 1))?,
    ])?
    .with_freeness(Freeness::Assumed))
}

/// `[[1, s], [0, 1]]` and `[[1, 0], [s, 1]]`: the Sanov pair with `2`
/// replaced by `s`, at HS distance `|s|` from the identity. Free for
/// `|s| >= 2`; for smaller `s` freeness is assumed, not certified.
pub fn sanov_scaled(s: f64) -> Result<GeneratorSet> {
    Ok(GeneratorSet::new(vec![
        GroupElement::sl2r(1.0, s, 0.0, 1.0)?,
        GroupElement::sl2r(1.0, 0.0, s, 1.0)?,
    ])?
    .with_freeness(Freeness::Assumed))
}

/// Rotations by `arccos(1/3)` about two orthogonal axes, lifted to SU(2).
pub fn free_rotations() -> Result<GeneratorSet> {
    let c = (2.0f64 / 3.0).sqrt();
    let s = (1.0f64 / 3.0).sqrt();
    Ok(GeneratorSet::new(vec![
        GroupElement::su2(C64::new(c, 0.0), C64::new(0.0, s))?,
        GroupElement::su2(C64::new(c, s), C64::new(0.0, 0.0))?,
    ])?
    .with_freeness(Freeness::Assumed))
}

/// The scaled Sanov pair together with `diag(e^t, e^-t)`, `t = s / sqrt 2`,
/// so all three chart directions move at first order by about `s`.
pub fn sanov_local(s: f64) -> Result<GeneratorSet> {
    let t = s / core::f64::consts::SQRT_2;
    Ok(GeneratorSet::new(vec![
        GroupElement::sl2r(1.0, s, 0.0, 1.0)?,
        GroupElement::sl2r(1.0, 0.0, s, 1.0)?,
        GroupElement::sl2r(t.exp(), 0.0, 0.0, (-t).exp())?,
    ])?
    .with_freeness(Freeness::Unknown))
}
