//! The Möbius action of SL2(R) on the real projective line, ping-pong
//! certificates of free generation, and the quasi-regular representation on
//! L2 of the line chart.

mod pingpong;

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

pub use pingpong::{
    certify_free, reverify_by_sampling, verify_certificate, Arc, CertifyOptions, ExactPoint,
    PingPongCertificate, SamplingReport,
};

use crate::error::{Error, Result};
use crate::group_core::{GroupElement, GroupKind};

/// A line through the origin of R^2, by its angle in `[0, pi)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct ProjectivePoint {
    angle: f64,
}

/// `t mod pi` in `[0, pi]`.
pub(crate) fn rem_pi(t: f64) -> f64 {
    let r = t - PI * (t / PI).floor();
    if r < 0.0 {
        r + PI
    } else {
        r
    }
}

pub(crate) fn wrap_angle(t: f64) -> f64 {
    let r = rem_pi(t);
    if r >= PI {
        0.0
    } else {
        r
    }
}

impl ProjectivePoint {
    pub fn new(angle: f64) -> Self {
        ProjectivePoint {
            angle: wrap_angle(angle),
        }
    }

    pub fn from_vector(x: f64, y: f64) -> Self {
        Self::new(y.atan2(x))
    }

    pub fn angle(self) -> f64 {
        self.angle
    }

    pub fn vector(self) -> [f64; 2] {
        let (s, c) = self.angle.sin_cos();
        [c, s]
    }

    /// Distance on `R / pi Z`.
    pub fn distance(self, o: ProjectivePoint) -> f64 {
        let d = (self.angle - o.angle).abs();
        d.min(PI - d)
    }
}

pub(crate) fn real_entries(g: &GroupElement) -> Result<[f64; 4]> {
    if g.kind() != GroupKind::Sl2R {
        return Err(Error::KindMismatch);
    }
    let m = &g.matrix().0;
    Ok([m[0][0].re, m[0][1].re, m[1][0].re, m[1][1].re])
}

pub fn moebius_apply(g: &GroupElement, p: ProjectivePoint) -> Result<ProjectivePoint> {
    let [a, b, c, d] = real_entries(g)?;
    let [x, y] = p.vector();
    Ok(ProjectivePoint::from_vector(a * x + b * y, c * x + d * y))
}

/// A uniform cell net of a bounded interval of the line chart, sampled at
/// cell centres.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalNet {
    lo: f64,
    hi: f64,
    cells: usize,
}

impl IntervalNet {
    pub fn new(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        if !(hi > lo) || cells == 0 {
            return Err(Error::invalid("interval net needs lo < hi and at least one cell"));
        }
        Ok(IntervalNet { lo, hi, cells })
    }

    pub fn len(&self) -> usize {
        self.cells
    }

    pub fn is_empty(&self) -> bool {
        self.cells == 0
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / self.cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.spacing()
    }

    /// Cell containing `x`, if inside the interval.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        if !(x >= self.lo && x < self.hi) {
            return None;
        }
        let i = ((x - self.lo) / self.spacing()) as usize;
        Some(i.min(self.cells - 1))
    }

    pub fn l2_norm(&self, f: &[f64]) -> f64 {
        (f.iter().map(|v| v * v).sum::<f64>() * self.spacing()).sqrt()
    }
}

/// Result of the quasi-regular action on a net function.
#[derive(Clone, Debug)]
pub struct QuasiRegular {
    pub values: Vec<f64>,
    /// Cells whose preimage leaves the interval.
    pub outside_cells: usize,
    /// Cells containing the pole of the inverse Möbius map.
    pub pole_cells: usize,
    /// Mass `sum f^2 h` of the input on cells not reached by the map.
    pub clipped_mass: f64,
}

/// `(pi(g) f)(x) = |c x + d|^-1 f(g^-1 x)` with `g^-1 = [[a, b], [c, d]]`,
/// evaluated by nearest-cell lookup; `f` vanishes off the net.
pub fn quasi_regular_apply(g: &GroupElement, net: &IntervalNet, f: &[f64]) -> Result<QuasiRegular> {
    if f.len() != net.len() {
        return Err(Error::invalid("function length differs from the net size"));
    }
    let [a, b, c, d] = real_entries(&g.inverse())?;
    let h = net.spacing();
    let mut values = vec![0.0; net.len()];
    let mut hit = vec![false; net.len()];
    let mut outside_cells = 0;
    let mut pole_cells = 0;
    let pole = if c != 0.0 { net.cell_of(-d / c) } else { None };
    for (i, v) in values.iter_mut().enumerate() {
        let x = net.center(i);
        let den = c * x + d;
        if pole == Some(i) {
            pole_cells += 1;
            continue;
        }
        let y = (a * x + b) / den;
        match net.cell_of(y) {
            Some(j) => {
                *v = f[j] / den.abs();
                hit[j] = true;
            }
            None => outside_cells += 1,
        }
    }
    let clipped_mass = f
        .iter()
        .zip(&hit)
        .filter(|(_, &h)| !h)
        .map(|(v, _)| v * v * h)
        .sum();
    Ok(QuasiRegular {
        values,
        outside_cells,
        pole_cells,
        clipped_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sl2(a: f64, b: f64, c: f64) -> GroupElement {
        GroupElement::sl2r(a, b, c, (1.0 + b * c) / a).unwrap()
    }

    #[test]
    fn fixed_lines() {
        let e = GroupElement::identity(GroupKind::Sl2R);
        let p = ProjectivePoint::new(0.7);
        assert!((moebius_apply(&e, p).unwrap().angle() - 0.7).abs() < 1e-15);
        let d = GroupElement::sl2r(2.0, 0.0, 0.0, 0.5).unwrap();
        let y = moebius_apply(&d, ProjectivePoint::new(PI / 2.0)).unwrap();
        assert!((y.angle() - PI / 2.0).abs() < 1e-15);
        let u = GroupElement::sl2r(1.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(moebius_apply(&u, ProjectivePoint::new(0.0)).unwrap().angle(), 0.0);
        let su = GroupElement::identity(GroupKind::Su2);
        assert!(moebius_apply(&su, p).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]
        #[test]
        fn left_action(a in 0.3f64..3.0, b in -2.0f64..2.0, c in -2.0f64..2.0,
                       a2 in 0.3f64..3.0, b2 in -2.0f64..2.0, c2 in -2.0f64..2.0, t in 0.0f64..PI) {
            let g = sl2(a, b, c);
            let h = sl2(a2, b2, c2);
            let gh = g.multiply(&h).unwrap();
            let p = ProjectivePoint::new(t);
            let lhs = moebius_apply(&gh, p).unwrap();
            let rhs = moebius_apply(&g, moebius_apply(&h, p).unwrap()).unwrap();
            prop_assert!(lhs.distance(rhs) < 1e-8);
        }
    }

    #[test]
    fn quasi_regular_identity_and_diagonal() {
        let net = IntervalNet::new(0.0, 1.0, 1000).unwrap();
        let f: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let e = GroupElement::identity(GroupKind::Sl2R);
        let r = quasi_regular_apply(&e, &net, &f).unwrap();
        assert_eq!(r.values, f);
        let t: f64 = 1.1;
        let net = IntervalNet::new(0.0, 4.0, 4000).unwrap();
        let smooth = |x: f64| (-(x - 1.0) * (x - 1.0) * 8.0).exp();
        let f: Vec<f64> = (0..4000).map(|i| smooth(net.center(i))).collect();
        let g = GroupElement::sl2r(t, 0.0, 0.0, 1.0 / t).unwrap();
        let r = quasi_regular_apply(&g, &net, &f).unwrap();
        for i in (0..4000).step_by(37) {
            let x = net.center(i);
            let want = smooth(x / (t * t)) / t;
            assert!((r.values[i] - want).abs() < 2e-2, "{x}");
        }
    }

    #[test]
    fn quasi_regular_is_nearly_unitary() {
        let net = IntervalNet::new(0.0, 1.0, 4096).unwrap();
        let bump = |x: f64| if (0.2..0.8).contains(&x) { (PI * (x - 0.2) / 0.6).sin().powi(2) } else { 0.0 };
        let f: Vec<f64> = (0..4096).map(|i| bump(net.center(i))).collect();
        for (a, b, c) in [(1.03, 0.02, -0.03), (0.97, -0.04, 0.05), (1.0, 0.06, 0.0)] {
            let g = sl2(a, b, c);
            assert!(g.norm_to_identity() <= 0.1);
            let r = quasi_regular_apply(&g, &net, &f).unwrap();
            let ratio = net.l2_norm(&r.values) / net.l2_norm(&f);
            assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
        }
        // a pole inside the net is flagged
        let g = sl2(1.0, 0.0, 2.0);
        let r = quasi_regular_apply(&g, &net, &f).unwrap();
        assert_eq!(r.pole_cells, 1);
        assert_eq!(r.values[2048], 0.0);
    }
}
