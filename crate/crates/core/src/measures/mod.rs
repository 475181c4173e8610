//! Finitely supported probability measures on SU(2) and SL2(R).
//!
//! Atoms are keyed either exactly (reduced words over a trusted-free
//! alphabet, or exact SL2(Q) matrices) or by matrix entries rounded to a
//! resolution `q`. Exact keys carry exact weights: natural-number numerators
//! over one common denominator. Atoms are stored sorted by key, so every
//! result is independent of evaluation order.

mod subgroup;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Float, One, ToPrimitive, Zero};

pub use subgroup::{SubgroupFamily, SubgroupSpec};

use crate::error::{Error, Result};
use crate::group_core::{
    GeneratorSet, GroupElement, GroupKind, Letter, Mat2, RationalMat2, Word,
};

pub const DEFAULT_RESOLUTION: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KeyMode {
    /// Reduced words over the measure's own generator alphabet.
    Word,
    /// The elements' own word labels, over a base alphabet whose freeness is
    /// vouched for by the caller.
    Label,
    /// Exact SL2(Q) entries.
    ExactMatrix,
    /// Matrix entries rounded to `resolution`; distinct elements closer than
    /// that may merge.
    Quantized { resolution: f64 },
}

impl KeyMode {
    pub fn is_exact(self) -> bool {
        !matches!(self, KeyMode::Quantized { .. })
    }

    pub fn name(self) -> &'static str {
        match self {
            KeyMode::Word => "word",
            KeyMode::Label => "label",
            KeyMode::ExactMatrix => "exact_matrix",
            KeyMode::Quantized { .. } => "quantized_matrix",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AtomKey {
    Word(Word),
    Exact(RationalMat2),
    Quantized([i64; 8]),
}

fn quantize(m: &Mat2, q: f64) -> [i64; 8] {
    let mut out = [0i64; 8];
    for (o, x) in out.iter_mut().zip(m.entries()) {
        // adding 0.0 folds -0.0 into 0.0
        *o = ((x / q).round() + 0.0) as i64;
    }
    out
}

#[derive(Clone, Copy, Debug)]
pub struct MeasureCaps {
    /// Largest support allowed for any intermediate measure.
    pub atoms: usize,
    /// Largest number of atom pairs one repeated-squaring product may visit.
    pub pairs: u128,
}

impl Default for MeasureCaps {
    fn default() -> Self {
        MeasureCaps {
            atoms: 10_000_000,
            pairs: 200_000_000,
        }
    }
}

#[derive(Clone, Debug)]
struct Exact {
    den: BigUint,
    nums: Vec<BigUint>,
}

#[derive(Clone, Debug)]
pub struct AtomicMeasure {
    kind: GroupKind,
    mode: KeyMode,
    keys: Vec<AtomKey>,
    matrices: Vec<Mat2>,
    weights: Vec<f64>,
    exact: Option<Exact>,
}

pub fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    BigRational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
        .to_f64()
        .unwrap_or(f64::NAN)
}

struct Acc {
    matrix: Mat2,
    num: BigUint,
    w: f64,
}

impl AtomicMeasure {
    fn key_of(mode: KeyMode, g: &GroupElement) -> Result<AtomKey> {
        match mode {
            KeyMode::Word | KeyMode::Label => g
                .word()
                .cloned()
                .map(AtomKey::Word)
                .ok_or_else(|| Error::invalid("word-keyed measures need labelled elements")),
            KeyMode::ExactMatrix => g
                .exact()
                .cloned()
                .map(AtomKey::Exact)
                .ok_or_else(|| Error::invalid("exact-matrix keys need SL2(Q) entries")),
            KeyMode::Quantized { resolution } => Ok(AtomKey::Quantized(quantize(g.matrix(), resolution))),
        }
    }

    fn check_mode(mode: KeyMode) -> Result<()> {
        if let KeyMode::Quantized { resolution } = mode {
            if !(resolution > 0.0) {
                return Err(Error::invalid("quantization resolution must be positive"));
            }
        }
        Ok(())
    }

    fn assemble(kind: GroupKind, mode: KeyMode, map: BTreeMap<AtomKey, Acc>, den: Option<BigUint>) -> Self {
        let n = map.len();
        let mut keys = Vec::with_capacity(n);
        let mut matrices = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let mut nums = Vec::with_capacity(if den.is_some() { n } else { 0 });
        for (k, a) in map {
            keys.push(k);
            matrices.push(a.matrix);
            match &den {
                Some(d) => {
                    weights.push(ratio_to_f64(&a.num, d));
                    nums.push(a.num);
                }
                None => weights.push(a.w),
            }
        }
        AtomicMeasure {
            kind,
            mode,
            keys,
            matrices,
            weights,
            exact: den.map(|den| Exact { den, nums }),
        }
    }

    /// `delta_e`.
    pub fn dirac_identity(kind: GroupKind, mode: KeyMode) -> Result<Self> {
        Self::dirac(&GroupElement::identity(kind), mode)
    }

    pub fn dirac(g: &GroupElement, mode: KeyMode) -> Result<Self> {
        Self::check_mode(mode)?;
        let key = Self::key_of(mode, g)?;
        Ok(AtomicMeasure {
            kind: g.kind(),
            mode,
            keys: alloc::vec![key],
            matrices: alloc::vec![*g.matrix()],
            weights: alloc::vec![1.0],
            exact: mode.is_exact().then(|| Exact {
                den: BigUint::one(),
                nums: alloc::vec![BigUint::one()],
            }),
        })
    }

    /// Uniform measure on `T ∪ T^-1`. Coinciding keys (an involution, or
    /// a quantization merge) pool their mass.
    pub fn symmetrize(gens: &GeneratorSet, mode: KeyMode) -> Result<Self> {
        Self::check_mode(mode)?;
        if gens.is_empty() {
            return Err(Error::invalid("generator set is empty"));
        }
        if mode == KeyMode::Word && !gens.freeness().trusted() {
            return Err(Error::invalid(
                "word keys need a generator set certified or assumed free",
            ));
        }
        let k = gens.len();
        let mut map: BTreeMap<AtomKey, Acc> = BTreeMap::new();
        let w = 1.0 / (2 * k) as f64;
        for i in 0..k {
            for inv in [false, true] {
                let l = Letter::new(i, inv);
                let g = gens.letter(l)?;
                let key = match mode {
                    KeyMode::Word => AtomKey::Word(Word::letter(l)),
                    _ => Self::key_of(mode, g)?,
                };
                let e = map.entry(key).or_insert(Acc {
                    matrix: *g.matrix(),
                    num: BigUint::zero(),
                    w: 0.0,
                });
                e.num += 1u32;
                e.w += w;
            }
        }
        let den = mode.is_exact().then(|| BigUint::from(2 * k));
        Ok(Self::assemble(gens.kind(), mode, map, den))
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn mode(&self) -> KeyMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[AtomKey] {
        &self.keys
    }

    pub fn matrices(&self) -> &[Mat2] {
        &self.matrices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Common denominator and numerators, in exact modes.
    pub fn exact_weights(&self) -> Option<(&BigUint, &[BigUint])> {
        self.exact.as_ref().map(|e| (&e.den, e.nums.as_slice()))
    }

    pub fn element(&self, i: usize) -> GroupElement {
        let g = GroupElement::from_parts(self.kind, self.matrices[i]);
        match &self.keys[i] {
            AtomKey::Word(w) => g.with_word(w.clone()),
            _ => g,
        }
    }

    pub fn find(&self, key: &AtomKey) -> Option<usize> {
        self.keys.binary_search(key).ok()
    }

    pub fn weight(&self, key: &AtomKey) -> f64 {
        self.find(key).map_or(0.0, |i| self.weights[i])
    }

    pub fn exact_weight(&self, key: &AtomKey) -> Option<BigRational> {
        let e = self.exact.as_ref()?;
        let num = self.find(key).map_or(BigUint::zero(), |i| e.nums[i].clone());
        Some(BigRational::new(num.into(), e.den.clone().into()))
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Exact total mass in exact modes.
    pub fn exact_total(&self) -> Option<BigRational> {
        let e = self.exact.as_ref()?;
        let s: BigUint = e.nums.iter().sum();
        Some(BigRational::new(s.into(), e.den.clone().into()))
    }

    pub fn identity_key(&self) -> AtomKey {
        match self.mode {
            KeyMode::Word | KeyMode::Label => AtomKey::Word(Word::empty()),
            KeyMode::ExactMatrix => AtomKey::Exact(RationalMat2::identity()),
            KeyMode::Quantized { resolution } => AtomKey::Quantized(quantize(&Mat2::IDENTITY, resolution)),
        }
    }

    /// Index of the atom at the inverse of atom `i`, if present.
    pub fn inverse_index(&self, i: usize) -> Option<usize> {
        self.find(&self.key_inverse(i))
    }

    fn key_inverse(&self, i: usize) -> AtomKey {
        match &self.keys[i] {
            AtomKey::Word(w) => AtomKey::Word(w.inverse()),
            AtomKey::Exact(m) => AtomKey::Exact(m.adjugate()),
            AtomKey::Quantized(_) => {
                let KeyMode::Quantized { resolution } = self.mode else {
                    unreachable!()
                };
                AtomKey::Quantized(quantize(self.element(i).inverse().matrix(), resolution))
            }
        }
    }

    fn key_product(&self, i: usize, other: &AtomicMeasure, j: usize, m: &Mat2) -> AtomKey {
        match (&self.keys[i], &other.keys[j]) {
            (AtomKey::Word(a), AtomKey::Word(b)) => AtomKey::Word(a.mul(b)),
            (AtomKey::Exact(a), AtomKey::Exact(b)) => AtomKey::Exact(a.mul(b)),
            _ => {
                let KeyMode::Quantized { resolution } = self.mode else {
                    unreachable!()
                };
                AtomKey::Quantized(quantize(m, resolution))
            }
        }
    }

    /// `weight(x) = weight(x^-1)`: exactly in exact modes, to `1e-12` otherwise.
    pub fn is_symmetric(&self) -> bool {
        (0..self.len()).all(|i| {
            let inv = self.key_inverse(i);
            match (self.find(&inv), &self.exact) {
                (Some(j), Some(e)) => e.nums[i] == e.nums[j],
                (Some(j), None) => (self.weights[i] - self.weights[j]).abs() <= 1e-12,
                (None, _) => false,
            }
        })
    }

    /// `(mu * nu)({x}) = sum_y mu({y}) nu({y^-1 x})`.
    pub fn convolve(&self, other: &AtomicMeasure, caps: &MeasureCaps) -> Result<AtomicMeasure> {
        if self.kind != other.kind {
            return Err(Error::KindMismatch);
        }
        if self.mode != other.mode {
            return Err(Error::invalid("convolution needs matching key modes"));
        }
        let mut map: BTreeMap<AtomKey, Acc> = BTreeMap::new();
        for i in 0..self.len() {
            for j in 0..other.len() {
                let m = self.matrices[i] * other.matrices[j];
                let key = self.key_product(i, other, j, &m);
                let e = map.entry(key);
                let acc = match e {
                    alloc::collections::btree_map::Entry::Occupied(o) => o.into_mut(),
                    alloc::collections::btree_map::Entry::Vacant(v) => v.insert(Acc {
                        matrix: m,
                        num: BigUint::zero(),
                        w: 0.0,
                    }),
                };
                match (&self.exact, &other.exact) {
                    (Some(a), Some(b)) => acc.num += &a.nums[i] * &b.nums[j],
                    _ => acc.w += self.weights[i] * other.weights[j],
                }
            }
            if map.len() > caps.atoms {
                return Err(Error::CapExceeded {
                    what: "measure support",
                    needed: map.len() as u128,
                    cap: caps.atoms as u128,
                });
            }
        }
        let den = match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => Some(&a.den * &b.den),
            _ => None,
        };
        Ok(Self::assemble(self.kind, self.mode, map, den))
    }

    /// `mu^{*0}, ..., mu^{*n}` by successive right multiplication.
    pub fn powers(&self, n: usize, caps: &MeasureCaps) -> Result<Vec<AtomicMeasure>> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(self.unit()?);
        for i in 0..n {
            let next = out[i].convolve(self, caps)?;
            out.push(next);
        }
        Ok(out)
    }

    fn unit(&self) -> Result<AtomicMeasure> {
        let mut e = Self::dirac_identity(self.kind, self.mode)?;
        e.matrices[0] = Mat2::IDENTITY;
        Ok(e)
    }

    /// Binary exponentiation; every product is held to `caps.pairs`.
    pub fn power_by_squaring(&self, n: usize, caps: &MeasureCaps) -> Result<AtomicMeasure> {
        let guard = |a: &AtomicMeasure, b: &AtomicMeasure| -> Result<()> {
            let pairs = a.len() as u128 * b.len() as u128;
            if pairs > caps.pairs {
                return Err(Error::CapExceeded {
                    what: "convolution pairs",
                    needed: pairs,
                    cap: caps.pairs,
                });
            }
            Ok(())
        };
        let mut result: Option<AtomicMeasure> = None;
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = Some(match result {
                    None => base.clone(),
                    Some(r) => {
                        guard(&r, &base)?;
                        r.convolve(&base, caps)?
                    }
                });
            }
            e >>= 1;
            if e > 0 {
                guard(&base, &base)?;
                base = base.convolve(&base, caps)?;
            }
        }
        match result {
            Some(r) => Ok(r),
            None => self.unit(),
        }
    }

    /// `mu^{*n}`: repeated squaring while its products stay within
    /// `caps.pairs`, otherwise successive multiplication.
    pub fn power(&self, n: usize, caps: &MeasureCaps) -> Result<AtomicMeasure> {
        match self.power_by_squaring(n, caps) {
            Err(Error::CapExceeded {
                what: "convolution pairs",
                ..
            }) => {
                let mut acc = self.unit()?;
                for _ in 0..n {
                    acc = acc.convolve(self, caps)?;
                }
                Ok(acc)
            }
            r => r,
        }
    }

    /// `sum_x a({x}) b({x^-1})`, the mass of `a * b` at the identity.
    pub fn pairing_at_identity(a: &AtomicMeasure, b: &AtomicMeasure) -> Result<ReturnValue> {
        if a.mode != b.mode || !a.mode.is_exact() {
            return Err(Error::invalid("identity pairing needs matching exact key modes"));
        }
        let (ea, eb) = (a.exact.as_ref().unwrap(), b.exact.as_ref().unwrap());
        let mut num = BigUint::zero();
        for i in 0..a.len() {
            if let Some(j) = b.find(&a.key_inverse(i)) {
                num += &ea.nums[i] * &eb.nums[j];
            }
        }
        let den = &ea.den * &eb.den;
        Ok(ReturnValue::new(num, den))
    }

    /// `mu^{*m}({e})` for `m = 0..=n_max`, exact. Each value splits as
    /// `mu^{*ceil(m/2)}` paired against `mu^{*floor(m/2)}`.
    pub fn return_probability_curve(&self, n_max: usize, caps: &MeasureCaps) -> Result<Vec<(usize, ReturnValue)>> {
        if !self.mode.is_exact() {
            return Err(Error::invalid("return probabilities need exact keys"));
        }
        let half = n_max.div_ceil(2);
        let pw = self.powers(half, caps)?;
        (0..=n_max)
            .map(|m| {
                let a = m.div_ceil(2);
                Ok((m, Self::pairing_at_identity(&pw[a], &pw[m - a])?))
            })
            .collect()
    }

    /// Mass of the atoms within `delta` of `H`.
    pub fn mass_near_subgroup(&self, h: &SubgroupSpec, delta: f64) -> Result<f64> {
        let mut s = 0.0;
        for i in 0..self.len() {
            if h.distance(&self.element(i))? <= delta {
                s += self.weights[i];
            }
        }
        Ok(s)
    }

    /// Largest distance from an atom to the identity.
    pub fn support_radius(&self) -> f64 {
        self.matrices
            .iter()
            .map(|m| m.dist(&Mat2::IDENTITY))
            .fold(0.0, f64::max)
    }

    /// `mu(A)^2` against `mu^{*2}(A^-1 A)` for `A` the atoms at `subset`,
    /// with `twofold` the square of `self`.
    pub fn powers_inequality(
        &self,
        twofold: &AtomicMeasure,
        subset: &[usize],
    ) -> Result<(BigRational, BigRational)> {
        let (Some(e), Some(e2)) = (&self.exact, &twofold.exact) else {
            return Err(Error::invalid("the powers inequality is checked in exact modes"));
        };
        let mut idx: Vec<usize> = subset.to_vec();
        idx.sort_unstable();
        idx.dedup();
        let mass: BigUint = idx.iter().map(|&i| &e.nums[i]).sum();
        let lhs = BigRational::new(BigInt::from(&mass * &mass), BigInt::from(&e.den * &e.den));
        let mut quotient: BTreeMap<AtomKey, ()> = BTreeMap::new();
        for &i in &idx {
            let inv = self.key_inverse(i);
            for &j in &idx {
                let key = match (&inv, &self.keys[j]) {
                    (AtomKey::Word(a), AtomKey::Word(b)) => AtomKey::Word(a.mul(b)),
                    (AtomKey::Exact(a), AtomKey::Exact(b)) => AtomKey::Exact(a.mul(b)),
                    _ => unreachable!("exact modes"),
                };
                quotient.insert(key, ());
            }
        }
        let num: BigUint = quotient
            .keys()
            .filter_map(|k| twofold.find(k).map(|p| e2.nums[p].clone()))
            .sum();
        let rhs = BigRational::new(num.into(), e2.den.clone().into());
        Ok((lhs, rhs))
    }
}

/// An exact probability together with its float value.
#[derive(Clone, Debug, PartialEq)]
pub struct ReturnValue {
    pub exact: BigRational,
    pub value: f64,
}

impl ReturnValue {
    fn new(num: BigUint, den: BigUint) -> Self {
        let value = ratio_to_f64(&num, &den);
        ReturnValue {
            exact: BigRational::new(num.into(), den.into()),
            value,
        }
    }
}

/// Kesten's spectral radius `sqrt(2k - 1) / k` for `k` free generators.
pub fn kesten_radius(k: usize) -> f64 {
    ((2 * k - 1) as f64).sqrt() / k as f64
}

#[cfg(test)]
mod tests;
