use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::mat::{Mat2, Mat3, C64};
use super::word::{reduced_word_count, Letter, Word, WordStream};
use crate::error::{Error, Result};

pub const GROUP_TOL: f64 = 1e-12;
pub const IDENTITY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupKind {
    Su2,
    Sl2R,
}

/// Which matrix realisation a Hilbert-Schmidt distance is taken in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    Defining,
    Adjoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Freeness {
    Certified,
    Assumed,
    Unknown,
}

impl Freeness {
    /// Whether reduced words may stand in for group elements.
    pub fn trusted(self) -> bool {
        !matches!(self, Freeness::Unknown)
    }
}

/// Exact SL2(Q) entries, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RationalMat2(pub [[BigRational; 2]; 2]);

impl RationalMat2 {
    pub fn identity() -> Self {
        let o = BigRational::one();
        let z = BigRational::zero();
        RationalMat2([[o.clone(), z.clone()], [z, o]])
    }

    pub fn from_ints(a: i64, b: i64, c: i64, d: i64) -> Self {
        let r = |x: i64| BigRational::from_integer(BigInt::from(x));
        RationalMat2([[r(a), r(b)], [r(c), r(d)]])
    }

    pub fn det(&self) -> BigRational {
        let m = &self.0;
        &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0]
    }

    pub fn mul(&self, o: &RationalMat2) -> RationalMat2 {
        let a = &self.0;
        let b = &o.0;
        RationalMat2([
            [
                &a[0][0] * &b[0][0] + &a[0][1] * &b[1][0],
                &a[0][0] * &b[0][1] + &a[0][1] * &b[1][1],
            ],
            [
                &a[1][0] * &b[0][0] + &a[1][1] * &b[1][0],
                &a[1][0] * &b[0][1] + &a[1][1] * &b[1][1],
            ],
        ])
    }

    /// Inverse for unit determinant.
    pub fn adjugate(&self) -> RationalMat2 {
        let m = &self.0;
        RationalMat2([
            [m[1][1].clone(), -m[0][1].clone()],
            [-m[1][0].clone(), m[0][0].clone()],
        ])
    }

    pub fn to_mat2(&self) -> Mat2 {
        let f = |x: &BigRational| x.to_f64().unwrap_or(f64::NAN);
        let m = &self.0;
        Mat2::real(f(&m[0][0]), f(&m[0][1]), f(&m[1][0]), f(&m[1][1]))
    }
}

/// A point of SU(2) or SL2(R), optionally labelled by a reduced word and,
/// for SL2(Q), carrying exact entries.
#[derive(Clone, Debug)]
pub struct GroupElement {
    kind: GroupKind,
    matrix: Mat2,
    word: Option<Word>,
    exact: Option<RationalMat2>,
}

impl GroupElement {
    pub fn identity(kind: GroupKind) -> Self {
        GroupElement {
            kind,
            matrix: Mat2::IDENTITY,
            word: Some(Word::empty()),
            exact: (kind == GroupKind::Sl2R).then(RationalMat2::identity),
        }
    }

    /// Checked constructor from a matrix.
    pub fn new(kind: GroupKind, matrix: Mat2) -> Result<Self> {
        let det_defect = (matrix.det() - C64::new(1.0, 0.0)).norm();
        let defect = match kind {
            GroupKind::Su2 => {
                let u = (matrix * matrix.conj_transpose() - Mat2::IDENTITY).frobenius();
                det_defect.max(u)
            }
            GroupKind::Sl2R => det_defect.max(matrix.max_imag()),
        };
        if !(defect <= GROUP_TOL) {
            return Err(Error::NotInGroup { defect });
        }
        Ok(GroupElement {
            kind,
            matrix,
            word: None,
            exact: None,
        })
    }

    pub fn su2(a: C64, b: C64) -> Result<Self> {
        Self::new(GroupKind::Su2, Mat2::su2(a, b))
    }

    pub fn sl2r(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        Self::new(GroupKind::Sl2R, Mat2::real(a, b, c, d))
    }

    pub fn sl2q(exact: RationalMat2) -> Result<Self> {
        if !exact.det().is_one() {
            let defect = (exact.det() - BigRational::one()).to_f64().unwrap_or(f64::INFINITY);
            return Err(Error::NotInGroup { defect: defect.abs() });
        }
        let mut g = Self::new(GroupKind::Sl2R, exact.to_mat2())?;
        g.exact = Some(exact);
        Ok(g)
    }

    /// Unchecked constructor for matrices produced by group operations.
    pub(crate) fn from_parts(kind: GroupKind, matrix: Mat2) -> Self {
        GroupElement {
            kind,
            matrix,
            word: None,
            exact: None,
        }
    }

    pub fn with_word(mut self, w: Word) -> Self {
        self.word = Some(w);
        self
    }

    pub fn without_word(mut self) -> Self {
        self.word = None;
        self
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.matrix
    }

    pub fn word(&self) -> Option<&Word> {
        self.word.as_ref()
    }

    pub fn exact(&self) -> Option<&RationalMat2> {
        self.exact.as_ref()
    }

    pub fn inverse(&self) -> GroupElement {
        let matrix = match self.kind {
            GroupKind::Su2 => self.matrix.conj_transpose(),
            GroupKind::Sl2R => self.matrix.adjugate(),
        };
        GroupElement {
            kind: self.kind,
            matrix,
            word: self.word.as_ref().map(Word::inverse),
            exact: self.exact.as_ref().map(RationalMat2::adjugate),
        }
    }

    pub fn multiply(&self, other: &GroupElement) -> Result<GroupElement> {
        if self.kind != other.kind {
            return Err(Error::KindMismatch);
        }
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &GroupElement) -> GroupElement {
        let word = match (&self.word, &other.word) {
            (Some(a), Some(b)) => Some(a.mul(b)),
            _ => None,
        };
        let exact = match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => Some(a.mul(b)),
            _ => None,
        };
        GroupElement {
            kind: self.kind,
            matrix: self.matrix * other.matrix,
            word,
            exact,
        }
    }

    pub fn hs_distance(&self, other: &GroupElement, metric: Metric) -> Result<f64> {
        if self.kind != other.kind {
            return Err(Error::KindMismatch);
        }
        Ok(match metric {
            Metric::Defining => self.matrix.dist(&other.matrix),
            Metric::Adjoint => self.adjoint_matrix().dist(&other.adjoint_matrix()),
        })
    }

    /// Distance to the identity in the defining realisation.
    pub fn norm_to_identity(&self) -> f64 {
        self.matrix.dist(&Mat2::IDENTITY)
    }

    /// `X -> g X g^-1` on trace-zero matrices. SL2(R) uses the ordered basis
    /// (E, H, F); SU(2) uses (i sigma_1, i sigma_2, i sigma_3).
    pub fn adjoint_matrix(&self) -> Mat3 {
        adjoint_of(self.kind, &self.matrix)
    }

    /// Identity test: the empty word when freeness is trusted, else the
    /// matrix tolerance.
    pub fn is_identity(&self, freeness: Freeness) -> bool {
        match (&self.word, freeness.trusted()) {
            (Some(w), true) => w.is_empty(),
            _ => self.norm_to_identity() < IDENTITY_TOL,
        }
    }
}

pub(crate) fn adjoint_of(kind: GroupKind, g: &Mat2) -> Mat3 {
    let ginv = match kind {
        GroupKind::Su2 => g.conj_transpose(),
        GroupKind::Sl2R => g.adjugate(),
    };
    let z = C64::new(0.0, 0.0);
    let mut out = [[0.0; 3]; 3];
    match kind {
        GroupKind::Sl2R => {
            let one = C64::new(1.0, 0.0);
            let basis = [
                Mat2::new(z, one, z, z),
                Mat2::new(one, z, z, -one),
                Mat2::new(z, z, one, z),
            ];
            for (j, b) in basis.iter().enumerate() {
                let y = *g * *b * ginv;
                let coords = [y.0[0][1].re, y.0[0][0].re, y.0[1][0].re];
                for i in 0..3 {
                    out[i][j] = coords[i];
                }
            }
        }
        GroupKind::Su2 => {
            let i1 = C64::new(0.0, 1.0);
            let one = C64::new(1.0, 0.0);
            let basis = [
                Mat2::new(z, i1, i1, z),
                Mat2::new(z, one, -one, z),
                Mat2::new(i1, z, z, -i1),
            ];
            for (j, b) in basis.iter().enumerate() {
                let y = *g * *b * ginv;
                let coords = [y.0[0][1].im, y.0[0][1].re, y.0[0][0].im];
                for i in 0..3 {
                    out[i][j] = coords[i];
                }
            }
        }
    }
    Mat3(out)
}

/// A finite generating set together with its inverses.
#[derive(Clone, Debug)]
pub struct GeneratorSet {
    kind: GroupKind,
    elements: Vec<GroupElement>,
    inverses: Vec<GroupElement>,
    radius_eps: Option<f64>,
    freeness: Freeness,
}

impl GeneratorSet {
    pub fn new(elements: Vec<GroupElement>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::invalid("generator set is empty"));
        };
        let kind = first.kind;
        for (i, g) in elements.iter().enumerate() {
            if g.kind != kind {
                return Err(Error::KindMismatch);
            }
            if g.norm_to_identity() < IDENTITY_TOL {
                return Err(Error::invalid(alloc::format!("generator {i} is the identity")));
            }
            for (j, h) in elements[..i].iter().enumerate() {
                if g.matrix.dist(&h.matrix) < IDENTITY_TOL {
                    return Err(Error::invalid(alloc::format!(
                        "generators {j} and {i} coincide"
                    )));
                }
            }
        }
        let inverses = elements.iter().map(GroupElement::inverse).collect();
        Ok(GeneratorSet {
            kind,
            elements,
            inverses,
            radius_eps: None,
            freeness: Freeness::Unknown,
        })
    }

    pub fn with_freeness(mut self, freeness: Freeness) -> Self {
        self.freeness = freeness;
        self
    }

    pub fn set_freeness(&mut self, freeness: Freeness) {
        self.freeness = freeness;
    }

    /// Records the radius after checking every generator lies within it.
    pub fn with_radius(mut self, eps: f64) -> Result<Self> {
        if !(eps >= 0.0) {
            return Err(Error::invalid("radius must be nonnegative"));
        }
        let r = self.measured_radius();
        if r > eps + IDENTITY_TOL {
            return Err(Error::invalid(alloc::format!(
                "generator at distance {r} exceeds radius {eps}"
            )));
        }
        self.radius_eps = Some(eps);
        Ok(self)
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn freeness(&self) -> Freeness {
        self.freeness
    }

    pub fn radius_eps(&self) -> Option<f64> {
        self.radius_eps
    }

    pub fn measured_radius(&self) -> f64 {
        self.elements
            .iter()
            .map(GroupElement::norm_to_identity)
            .fold(0.0, f64::max)
    }

    pub fn letter(&self, l: Letter) -> Result<&GroupElement> {
        let g = l.generator();
        if g >= self.elements.len() {
            return Err(Error::LetterOutOfRange {
                generator: g,
                available: self.elements.len(),
            });
        }
        Ok(if l.is_inverse() {
            &self.inverses[g]
        } else {
            &self.elements[g]
        })
    }

    /// The 2k elements of the symmetric closure, indexed by letter code.
    pub fn symmetric_closure(&self) -> Vec<GroupElement> {
        let mut out = Vec::with_capacity(2 * self.len());
        for (g, ginv) in self.elements.iter().zip(&self.inverses) {
            out.push(g.clone());
            out.push(ginv.clone());
        }
        out
    }

    /// Left-to-right product; the result is labelled by the reduced word.
    pub fn evaluate(&self, w: &Word) -> Result<GroupElement> {
        let mut m = Mat2::IDENTITY;
        let mut exact = self
            .elements
            .iter()
            .all(|g| g.exact.is_some())
            .then(RationalMat2::identity);
        for &l in w.letters() {
            let g = self.letter(l)?;
            m = m * g.matrix;
            if let (Some(e), Some(ge)) = (exact.as_mut(), g.exact.as_ref()) {
                *e = e.mul(ge);
            }
        }
        Ok(GroupElement {
            kind: self.kind,
            matrix: m,
            word: Some(w.reduced()),
            exact,
        })
    }

    /// Product of the generators' own labels, when they all carry one.
    pub fn label_of(&self, w: &Word) -> Result<Option<Word>> {
        let mut out = Word::empty();
        for &l in w.letters() {
            match self.letter(l)?.word() {
                Some(lab) => out = out.mul(lab),
                None => return Ok(None),
            }
        }
        Ok(Some(out))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnumerationMode {
    ExactLength,
    UpToLength,
}

/// Streams reduced words over the generators, guarded by `cap` on the total count.
pub fn enumerate_words(
    gens: &GeneratorSet,
    n: usize,
    mode: EnumerationMode,
    cap: u128,
) -> Result<WordStream> {
    let k = gens.len();
    let needed = match mode {
        EnumerationMode::ExactLength => reduced_word_count(k, n),
        EnumerationMode::UpToLength => (0..=n).try_fold(0u128, |acc, m| {
            reduced_word_count(k, m).and_then(|c| acc.checked_add(c))
        }),
    }
    .unwrap_or(u128::MAX);
    if needed > cap {
        return Err(Error::CapExceeded {
            what: "word enumeration",
            needed,
            cap,
        });
    }
    let lo = match mode {
        EnumerationMode::ExactLength => n,
        EnumerationMode::UpToLength => 0,
    };
    Ok(WordStream::new(k, lo, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn sanov() -> GeneratorSet {
        GeneratorSet::new(alloc::vec![
            GroupElement::sl2q(RationalMat2::from_ints(1, 2, 0, 1)).unwrap(),
            GroupElement::sl2q(RationalMat2::from_ints(1, 0, 2, 1)).unwrap(),
        ])
        .unwrap()
        .with_freeness(Freeness::Certified)
    }

    #[test]
    fn sanov_product() {
        let s = sanov();
        let ab = s.evaluate(&Word::parse("ab").unwrap()).unwrap();
        assert_eq!(ab.exact().unwrap(), &RationalMat2::from_ints(5, 2, 2, 1));
        let direct = s.elements()[0].multiply(&s.elements()[1]).unwrap();
        assert!(direct.matrix().dist(&Mat2::real(5.0, 2.0, 2.0, 1.0)) < 1e-15);
        let e = s.evaluate(&Word::parse("aA").unwrap()).unwrap();
        assert!(e.word().unwrap().is_empty());
        assert!(e.is_identity(Freeness::Certified));
        assert!(s.evaluate(&Word::empty()).unwrap().norm_to_identity() == 0.0);
    }

    #[test]
    fn inverse_cancels_label() {
        let s = sanov();
        let g = s.evaluate(&Word::parse("abA").unwrap()).unwrap();
        let p = g.multiply(&g.inverse()).unwrap();
        assert!(p.word().unwrap().is_empty());
        assert!(p.norm_to_identity() < 1e-12);
    }

    #[test]
    fn rotation_distance() {
        for k in 0..20 {
            let t = -3.0 + 0.3 * k as f64;
            let r = GroupElement::sl2r(t.cos(), -t.sin(), t.sin(), t.cos()).unwrap();
            let d = r
                .hs_distance(&GroupElement::identity(GroupKind::Sl2R), Metric::Defining)
                .unwrap();
            assert!(close(d, 2.0 * 2f64.sqrt() * (t / 2.0).sin().abs(), 1e-12));
        }
    }

    #[test]
    fn adjoint_of_diagonal() {
        let t: f64 = 1.7;
        let g = GroupElement::sl2r(t, 0.0, 0.0, 1.0 / t).unwrap();
        let ad = g.adjoint_matrix();
        let want = Mat3([[t * t, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0 / (t * t)]]);
        assert!(ad.dist(&want) < 1e-12);
        let d = g
            .hs_distance(&GroupElement::identity(GroupKind::Sl2R), Metric::Adjoint)
            .unwrap();
        let expect = ((t * t - 1.0).powi(2) + (1.0 / (t * t) - 1.0).powi(2)).sqrt();
        assert!(close(d, expect, 1e-12));
        assert!(GroupElement::identity(GroupKind::Sl2R)
            .adjoint_matrix()
            .dist(&Mat3::IDENTITY)
            < 1e-15);
    }

    #[test]
    fn su2_adjoint_is_rotation() {
        let g = GroupElement::su2(C64::new(0.6, 0.0), C64::new(0.0, 0.8)).unwrap();
        let r = g.adjoint_matrix();
        assert!(close(r.det(), 1.0, 1e-12));
        let rt = Mat3([
            [r.0[0][0], r.0[1][0], r.0[2][0]],
            [r.0[0][1], r.0[1][1], r.0[2][1]],
            [r.0[0][2], r.0[1][2], r.0[2][2]],
        ]);
        assert!((r * rt).dist(&Mat3::IDENTITY) < 1e-12);
        // -g has the same adjoint image
        let mg = GroupElement::su2(C64::new(-0.6, 0.0), C64::new(0.0, -0.8)).unwrap();
        assert!(g.hs_distance(&mg, Metric::Adjoint).unwrap() < 1e-12);
    }

    #[test]
    fn constructor_errors() {
        assert!(matches!(
            GroupElement::sl2r(1.0, 1.0, 1.0, 1.0),
            Err(Error::NotInGroup { .. })
        ));
        assert!(matches!(
            GroupElement::su2(C64::new(2.0, 0.0), C64::new(0.0, 0.0)),
            Err(Error::NotInGroup { .. })
        ));
        let s = sanov();
        assert!(matches!(
            s.evaluate(&Word::parse("c").unwrap()),
            Err(Error::LetterOutOfRange { .. })
        ));
        let g = s.elements()[0].clone();
        assert!(GeneratorSet::new(alloc::vec![g.clone(), g]).is_err());
        assert!(GeneratorSet::new(alloc::vec![GroupElement::identity(GroupKind::Su2)]).is_err());
        let u = GroupElement::identity(GroupKind::Su2);
        assert_eq!(
            s.elements()[0].multiply(&u).unwrap_err(),
            Error::KindMismatch
        );
    }

    #[test]
    fn enumeration_guard() {
        let s = sanov();
        assert_eq!(
            enumerate_words(&s, 3, EnumerationMode::ExactLength, 1000)
                .unwrap()
                .count(),
            36
        );
        assert!(matches!(
            enumerate_words(&s, 3, EnumerationMode::ExactLength, 35),
            Err(Error::CapExceeded { .. })
        ));
        assert_eq!(
            enumerate_words(&s, 2, EnumerationMode::UpToLength, 1000)
                .unwrap()
                .count(),
            17
        );
    }
}
