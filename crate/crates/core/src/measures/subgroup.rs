//! Distance from a group element to a closed connected subgroup, by explicit
//! charts and multistart golden-section search.

use num_traits::Float;

use crate::error::{Error, Result};
use crate::group_core::{GroupElement, GroupKind, Mat2, C64};

const STARTS: usize = 32;
const TOL: f64 = 1e-8;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SubgroupFamily {
    /// SO(2).
    Rotation,
    /// `diag(e^t, e^-t)` in SL2(R); the maximal torus `diag(e^it, e^-it)` in SU(2).
    Diagonal,
    /// The connected Borel subgroup. In SU(2) it coincides with the torus.
    UpperTriangular,
    /// `[[1, t], [0, 1]]`. In SU(2) only the identity is unipotent.
    Unipotent,
}

impl SubgroupFamily {
    pub fn name(self) -> &'static str {
        match self {
            SubgroupFamily::Rotation => "SO2",
            SubgroupFamily::Diagonal => "diagonal",
            SubgroupFamily::UpperTriangular => "upper_triangular",
            SubgroupFamily::Unipotent => "unipotent",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "SO2" | "rotation" => SubgroupFamily::Rotation,
            "diagonal" | "cartan" => SubgroupFamily::Diagonal,
            "upper_triangular" | "borel" => SubgroupFamily::UpperTriangular,
            "unipotent" => SubgroupFamily::Unipotent,
            _ => return None,
        })
    }
}

/// `h H h^-1` for a standard family `H`.
#[derive(Clone, Debug)]
pub struct SubgroupSpec {
    family: SubgroupFamily,
    conjugator: Option<GroupElement>,
}

impl SubgroupSpec {
    pub fn new(family: SubgroupFamily) -> Self {
        SubgroupSpec {
            family,
            conjugator: None,
        }
    }

    pub fn conjugate(family: SubgroupFamily, h: GroupElement) -> Result<Self> {
        let d = (h.matrix().det() - C64::new(1.0, 0.0)).norm();
        if d > crate::group_core::IDENTITY_TOL {
            return Err(Error::NotInGroup { defect: d });
        }
        Ok(SubgroupSpec {
            family,
            conjugator: Some(h),
        })
    }

    pub fn family(&self) -> SubgroupFamily {
        self.family
    }

    pub fn conjugator(&self) -> Option<&GroupElement> {
        self.conjugator.as_ref()
    }

    pub fn name(&self) -> alloc::string::String {
        match &self.conjugator {
            None => self.family.name().into(),
            Some(_) => alloc::format!("conj_{}", self.family.name()),
        }
    }

    /// `min_{x in H} |g - x|_HS` in the defining realisation.
    pub fn distance(&self, g: &GroupElement) -> Result<f64> {
        if let Some(h) = &self.conjugator {
            if h.kind() != g.kind() {
                return Err(Error::KindMismatch);
            }
        }
        Ok(self.distance_matrix(g.kind(), g.matrix()))
    }

    /// As [`SubgroupSpec::distance`] on a bare matrix of the given kind.
    pub fn distance_matrix(&self, kind: GroupKind, g: &Mat2) -> f64 {
        match kind {
            GroupKind::Su2 => self.distance_su2(g),
            GroupKind::Sl2R => self.distance_sl2r(g),
        }
    }

    fn distance_su2(&self, g: &Mat2) -> f64 {
        // the HS norm is invariant under unitary conjugation
        let g = match &self.conjugator {
            Some(h) => h.matrix().conj_transpose() * *g * *h.matrix(),
            None => *g,
        };
        let (a, b) = (g.0[0][0], g.0[0][1]);
        match self.family {
            SubgroupFamily::Unipotent => g.dist(&Mat2::IDENTITY),
            // |g - diag(u, conj u)|^2 = 2|a - u|^2 + 2|b|^2
            SubgroupFamily::Diagonal | SubgroupFamily::UpperTriangular => 2.0 * (1.0 - a.norm()).max(0.0).sqrt(),
            // |g - R_t|^2 = 4 - 4 (cos t Re a - sin t Re b)
            SubgroupFamily::Rotation => 2.0 * (1.0 - a.re.hypot(b.re)).max(0.0).sqrt(),
        }
    }

    fn distance_sl2r(&self, g: &Mat2) -> f64 {
        let (h, hinv) = match &self.conjugator {
            Some(h) => (*h.matrix(), h.matrix().adjugate()),
            None => (Mat2::IDENTITY, Mat2::IDENTITY),
        };
        let conj = |x: Mat2| h * x * hinv;
        let e = conj(Mat2::real(0.0, 1.0, 0.0, 0.0));
        // unipotent and Borel charts are affine in the nilpotent coordinate
        let affine = |base: Mat2| -> f64 {
            let r = *g - base;
            let t = inner(&r, &e) / inner(&e, &e);
            (r - e.scale(C64::new(t, 0.0))).frobenius()
        };
        let bound = cartan_bound(g, &h);
        match self.family {
            SubgroupFamily::Rotation => {
                minimize_periodic(|t| g.dist(&conj(rotation(t))), core::f64::consts::TAU)
            }
            SubgroupFamily::Diagonal => minimize_interval(|t| g.dist(&conj(cartan(t))), -bound, bound),
            SubgroupFamily::Unipotent => affine(Mat2::IDENTITY),
            SubgroupFamily::UpperTriangular => {
                minimize_interval(|s| affine(conj(cartan(s))), -bound, bound)
            }
        }
    }
}

fn inner(a: &Mat2, b: &Mat2) -> f64 {
    let mut s = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            s += (a.0[i][j].conj() * b.0[i][j]).re;
        }
    }
    s
}

pub(crate) fn rotation(t: f64) -> Mat2 {
    let (s, c) = t.sin_cos();
    Mat2::real(c, -s, s, c)
}

#[cfg(test)]
pub(crate) fn torus(t: f64) -> Mat2 {
    let z = C64::new(0.0, 0.0);
    let u = C64::from_polar(1.0, t);
    Mat2::new(u, z, z, u.conj())
}

fn cartan(t: f64) -> Mat2 {
    Mat2::real(t.exp(), 0.0, 0.0, (-t).exp())
}

/// Beyond `|t| > bound`, `|h diag(e^t, e^-t) h^-1|` exceeds `|g| + 2`.
fn cartan_bound(g: &Mat2, h: &Mat2) -> f64 {
    let cond = h.frobenius() * h.adjugate().frobenius();
    (2.0 * g.frobenius() * cond.max(1.0) + 2.0).ln() + 1.0
}

fn golden(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .fold((x, fx), |best, p| if p.1 < best.1 { p } else { best })
}

/// Samples `STARTS` points, then refines around the two best samples.
fn refine(f: &impl Fn(f64) -> f64, samples: &[(f64, f64)], step: f64) -> f64 {
    let mut order: alloc::vec::Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&i, &j| samples[i].1.total_cmp(&samples[j].1));
    let mut best = samples[order[0]].1;
    for &i in order.iter().take(2) {
        let x = samples[i].0;
        let (_, v) = golden(f, x - step, x + step);
        best = best.min(v);
    }
    best
}

fn minimize_periodic(f: impl Fn(f64) -> f64, period: f64) -> f64 {
    let step = period / STARTS as f64;
    let samples: alloc::vec::Vec<(f64, f64)> = (0..STARTS)
        .map(|i| {
            let t = i as f64 * step;
            (t, f(t))
        })
        .collect();
    refine(&f, &samples, step)
}

fn minimize_interval(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let step = (hi - lo) / (STARTS - 1) as f64;
    let samples: alloc::vec::Vec<(f64, f64)> = (0..STARTS)
        .map(|i| {
            let t = lo + i as f64 * step;
            (t, f(t))
        })
        .collect();
    let clamped = |t: f64| f(t.clamp(lo, hi));
    refine(&clamped, &samples, step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn su2(a: C64, b: C64) -> GroupElement {
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        GroupElement::su2(a / n, b / n).unwrap()
    }

    fn grid_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        (0..=n)
            .map(|i| f(lo + (hi - lo) * i as f64 / n as f64))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn members_have_zero_distance() {
        let d = GroupElement::sl2r(2.0, 0.0, 0.0, 0.5).unwrap();
        assert!(SubgroupSpec::new(SubgroupFamily::Diagonal).distance(&d).unwrap() < 1e-7);
        let u = GroupElement::sl2r(1.0, 3.0, 0.0, 1.0).unwrap();
        assert!(SubgroupSpec::new(SubgroupFamily::Unipotent).distance(&u).unwrap() < 1e-12);
        let b = GroupElement::sl2r(0.5, -1.0, 0.0, 2.0).unwrap();
        assert!(SubgroupSpec::new(SubgroupFamily::UpperTriangular).distance(&b).unwrap() < 1e-7);
        let (s, c) = 1.1f64.sin_cos();
        let r = GroupElement::sl2r(c, -s, s, c).unwrap();
        assert!(SubgroupSpec::new(SubgroupFamily::Rotation).distance(&r).unwrap() < 1e-7);
        let h = GroupElement::sl2r(1.0, 1.0, 1.0, 2.0).unwrap();
        let x = h.multiply(&d).unwrap().multiply(&h.inverse()).unwrap();
        let conj = SubgroupSpec::conjugate(SubgroupFamily::Diagonal, h).unwrap();
        assert!(conj.distance(&x).unwrap() < 1e-7);
    }

    #[test]
    fn rotation_is_far_from_cartan() {
        let (s, c) = (core::f64::consts::FRAC_PI_4).sin_cos();
        let r = GroupElement::sl2r(c, -s, s, c).unwrap();
        let d = SubgroupSpec::new(SubgroupFamily::Diagonal).distance(&r).unwrap();
        let oracle = grid_min(|t| r.matrix().dist(&cartan(t)), -5.0, 5.0, 200_000);
        assert!((d - oracle).abs() < 1e-6);
        assert!(d > 0.1);
    }

    #[test]
    fn su2_torus_closed_form() {
        let g = su2(C64::new(0.3, -0.5), C64::new(0.4, 0.2));
        let a = g.matrix().0[0][0];
        let b = g.matrix().0[1][0];
        let want = (2.0 * ((a.norm() - 1.0).powi(2) + b.norm_sqr())).sqrt();
        for fam in [SubgroupFamily::Diagonal, SubgroupFamily::UpperTriangular] {
            let got = SubgroupSpec::new(fam).distance(&g).unwrap();
            assert!((got - want).abs() < 1e-9);
        }
        let got = SubgroupSpec::new(SubgroupFamily::Unipotent).distance(&g).unwrap();
        assert!((got - g.norm_to_identity()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn matches_dense_grid(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0) {
            let d = (1.0 + b * c) / a;
            prop_assume!(a.abs() > 0.3 && d.abs() < 4.0);
            let g = GroupElement::sl2r(a, b, c, d).unwrap();
            let m = *g.matrix();
            let bound = cartan_bound(&m, &Mat2::IDENTITY);
            let spec = SubgroupSpec::new(SubgroupFamily::Diagonal);
            let oracle = grid_min(|t| m.dist(&cartan(t)), -bound, bound, 20_000);
            let got = spec.distance(&g).unwrap();
            prop_assert!(got <= oracle + 1e-9);
            prop_assert!(got >= oracle - 1e-3);
            let rot = SubgroupSpec::new(SubgroupFamily::Rotation).distance(&g).unwrap();
            let oracle = grid_min(|t| m.dist(&rotation(t)), 0.0, core::f64::consts::TAU, 20_000);
            prop_assert!(rot <= oracle + 1e-9 && rot >= oracle - 1e-3);
            let borel = SubgroupSpec::new(SubgroupFamily::UpperTriangular).distance(&g).unwrap();
            // Borel contains both Cartan and unipotent subgroups
            let uni = SubgroupSpec::new(SubgroupFamily::Unipotent).distance(&g).unwrap();
            prop_assert!(borel <= got + 1e-9 && borel <= uni + 1e-9);
        }
    }
}
