//! The near-identity set `T`: words `w = a s_2 .. s_{l-1} b` over a free base
//! `S`, their cubes `Z`, pigeonholed into entry buckets, and
//! `T = g0^-1 (bucket) \ {1}`. Plus brute-force checks of the word-length
//! bounds, stabilizer counts and escape curves.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::group_core::{
    enumerate_words, EnumerationMode, Freeness, GeneratorSet, GroupElement, Letter, Mat2, Word,
};
use crate::measures::{AtomicMeasure, KeyMode, MeasureCaps, SubgroupSpec};
use crate::rng;

use num_traits::Float;

#[derive(Clone, Debug)]
pub struct EscapeConfig {
    pub base: GeneratorSet,
    /// Generator indices of the first and last letters.
    pub a: usize,
    pub b: usize,
    pub ell: usize,
    pub eta: f64,
    /// Bucket side; defaults to `eps / 10`.
    pub bucket_resolution: Option<f64>,
    pub seed: u64,
    /// Largest `|Y|` enumerated in full; beyond it `Y` is sampled.
    pub word_cap: usize,
    /// Keep only the first `max_size` elements of `T` (closest to the identity).
    pub max_size: Option<usize>,
}

impl EscapeConfig {
    pub fn new(base: GeneratorSet, ell: usize, eta: f64) -> Self {
        EscapeConfig {
            base,
            a: 0,
            b: 1,
            ell,
            eta,
            bucket_resolution: None,
            seed: 0,
            word_cap: 2_000_000,
            max_size: None,
        }
    }

    /// `(1 + eta)^-ell`.
    pub fn eps(&self) -> f64 {
        (1.0 + self.eta).powi(-(self.ell as i32))
    }

    pub fn resolution(&self) -> f64 {
        self.bucket_resolution.unwrap_or(self.eps() / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ell < 4 {
            return Err(Error::invalid("ell must be at least 4"));
        }
        if !(self.eta > 0.0) {
            return Err(Error::invalid("eta must be positive"));
        }
        if !(self.resolution() > 0.0) {
            return Err(Error::invalid("bucket resolution must be positive"));
        }
        if self.word_cap == 0 {
            return Err(Error::invalid("word cap must be positive"));
        }
        check_endpoints(&self.base, self.a, self.b)
    }
}

fn check_endpoints(base: &GeneratorSet, a: usize, b: usize) -> Result<()> {
    if a == b {
        return Err(Error::invalid("a and b must be distinct generators"));
    }
    let m = base.len();
    if a >= m || b >= m {
        return Err(Error::LetterOutOfRange {
            generator: a.max(b),
            available: m,
        });
    }
    Ok(())
}

/// Reduced words of length `ell` over `2m` letters with fixed end letters,
/// ranked in shortlex order.
#[derive(Clone, Debug)]
pub struct YCounter {
    letters: usize,
    ell: usize,
    first: Letter,
    last: Letter,
    /// `tail[p][c]`: completions from letter code `c` at position `p`.
    tail: Vec<Vec<u128>>,
}

impl YCounter {
    pub fn new(m: usize, first: Letter, last: Letter, ell: usize) -> Result<Self> {
        if ell < 2 {
            return Err(Error::invalid("words need at least two letters"));
        }
        let letters = 2 * m;
        let mut tail = vec![vec![0u128; letters]; ell];
        tail[ell - 1][last.0 as usize] = 1;
        for p in (0..ell - 1).rev() {
            for c in 0..letters {
                let mut t = 0u128;
                for d in 0..letters {
                    if d != (c ^ 1) {
                        t = t.saturating_add(tail[p + 1][d]);
                    }
                }
                tail[p][c] = t;
            }
        }
        Ok(YCounter {
            letters,
            ell,
            first,
            last,
            tail,
        })
    }

    pub fn count(&self) -> u128 {
        self.tail[0][self.first.0 as usize]
    }

    pub fn unrank(&self, mut r: u128) -> Word {
        let mut out = Vec::with_capacity(self.ell);
        let mut c = self.first.0 as usize;
        out.push(Letter(c as u16));
        for p in 1..self.ell {
            for d in 0..self.letters {
                if d == (c ^ 1) {
                    continue;
                }
                let t = self.tail[p][d];
                if r < t {
                    c = d;
                    break;
                }
                r -= t;
            }
            out.push(Letter(c as u16));
        }
        debug_assert_eq!(*out.last().unwrap(), self.last);
        Word::from_letters_unreduced(out)
    }
}

#[derive(Clone, Debug)]
pub struct YWords {
    /// `|Y|`.
    pub total: u128,
    pub words: Vec<Word>,
    pub sampled: bool,
}

/// `Y`, in full when `|Y| <= cap`, else a uniform sample of `cap` distinct
/// words drawn with `seed`.
pub fn build_y(m: usize, a: usize, b: usize, ell: usize, cap: usize, seed: u64) -> Result<YWords> {
    if a == b {
        return Err(Error::invalid("a and b must be distinct generators"));
    }
    let counter = YCounter::new(m, Letter::new(a, false), Letter::new(b, false), ell)?;
    let total = counter.count();
    if total <= cap as u128 {
        let words = (0..total).map(|r| counter.unrank(r)).collect();
        return Ok(YWords {
            total,
            words,
            sampled: false,
        });
    }
    // Floyd's sampling of distinct ranks, then shortlex order
    let mut rng = rng::stream(seed, "escape/y-sample");
    let mut chosen = alloc::collections::BTreeSet::new();
    for j in (total - cap as u128)..total {
        let t = rng.gen_range(0..=j);
        if !chosen.insert(t) {
            chosen.insert(j);
        }
    }
    Ok(YWords {
        total,
        words: chosen.into_iter().map(|r| counter.unrank(r)).collect(),
        sampled: true,
    })
}

#[derive(Clone, Debug)]
pub struct EscapeSet {
    /// Elements labelled by reduced words over the base.
    pub t: GeneratorSet,
    /// Measured `max dist(t, 1)`.
    pub eps_measured: f64,
    pub eps_nominal: f64,
    pub resolution: f64,
    pub y_total: u128,
    pub y_used: usize,
    pub sampled: bool,
    pub buckets: usize,
    pub bucket_size: usize,
    /// Label of `g0`.
    pub g0: Word,
    /// `|T|` before truncation.
    pub full_size: usize,
}

fn bucket_key(m: &Mat2, r: f64) -> [i64; 8] {
    let e = m.entries();
    core::array::from_fn(|i| (e[i] / r).floor() as i64)
}

/// Builds `T`; every element carries its word over the base.
pub fn build_t(cfg: &EscapeConfig) -> Result<EscapeSet> {
    cfg.validate()?;
    let y = build_y(cfg.base.len(), cfg.a, cfg.b, cfg.ell, cfg.word_cap, cfg.seed)?;
    let r = cfg.resolution();
    let mut z: Vec<(Word, Mat2)> = Vec::with_capacity(y.words.len());
    for w in &y.words {
        let g = cfg.base.evaluate(w)?;
        let m = *g.matrix();
        z.push((w.pow(3), m * m * m));
    }
    let mut buckets: BTreeMap<[i64; 8], Vec<usize>> = BTreeMap::new();
    for (i, (_, m)) in z.iter().enumerate() {
        buckets.entry(bucket_key(m, r)).or_default().push(i);
    }
    let n_buckets = buckets.len();
    let (_, members) = buckets
        .into_iter()
        .fold((None::<[i64; 8]>, Vec::new()), |best, (k, v)| {
            if v.len() > best.1.len() {
                (Some(k), v)
            } else {
                best
            }
        });
    if members.len() < 2 {
        return Err(Error::SingletonBucket { buckets: n_buckets });
    }
    let (g0_word, g0) = z[members[0]].clone();
    let g0_inv = GroupElement::from_parts(cfg.base.kind(), g0).inverse();
    let mut elems: Vec<(f64, GroupElement)> = members[1..]
        .iter()
        .map(|&i| {
            let (w, m) = &z[i];
            let g = GroupElement::from_parts(cfg.base.kind(), *g0_inv.matrix() * *m)
                .with_word(g0_word.inverse().mul(w));
            (g.norm_to_identity(), g)
        })
        .collect();
    let full_size = elems.len();
    elems.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.word().cmp(&b.1.word())));
    if let Some(k) = cfg.max_size {
        elems.truncate(k.max(1));
    }
    let eps_measured = elems.iter().map(|e| e.0).fold(0.0, f64::max);
    let freeness = if cfg.base.freeness().trusted() { Freeness::Assumed } else { Freeness::Unknown };
    let t = GeneratorSet::new(elems.into_iter().map(|e| e.1).collect())?
        .with_freeness(freeness)
        .with_radius(eps_measured)?;
    Ok(EscapeSet {
        t,
        eps_measured,
        eps_nominal: cfg.eps(),
        resolution: r,
        y_total: y.total,
        y_used: y.words.len(),
        sampled: y.sampled,
        buckets: n_buckets,
        bucket_size: members.len(),
        g0: g0_word,
        full_size,
    })
}

#[derive(Clone, Debug, Default)]
pub struct Claim1Report {
    pub checked: usize,
    pub min_len: Option<usize>,
    pub max_len: Option<usize>,
    /// `(word over T, length over S)`.
    pub violations: Vec<(Word, usize)>,
}

/// Checks `n l <= |g|_S <= 6 n l` on every reduced word of length exactly `n`.
pub fn verify_claim1(t: &GeneratorSet, ell: usize, n: usize, cap: u128) -> Result<Claim1Report> {
    let mut rep = Claim1Report::default();
    if n == 0 {
        return Ok(rep);
    }
    for w in enumerate_words(t, n, EnumerationMode::ExactLength, cap)? {
        let label = t
            .label_of(&w)?
            .ok_or_else(|| Error::invalid("elements of T must carry words over the base"))?;
        let len = label.len();
        rep.checked += 1;
        rep.min_len = Some(rep.min_len.map_or(len, |m| m.min(len)));
        rep.max_len = Some(rep.max_len.map_or(len, |m| m.max(len)));
        if len < n * ell || len > 6 * n * ell {
            rep.violations.push((w, len));
        }
    }
    Ok(rep)
}

pub const FIX_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StabilizerCount {
    pub fixing: u128,
    pub total: u128,
}

/// Reduced words of length `n` whose adjoint action fixes the line `[v]`.
pub fn stabilizer_count(t: &GeneratorSet, v: [f64; 3], n: usize, cap: u128) -> Result<StabilizerCount> {
    let nv = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if !(nv > 0.0) {
        return Err(Error::invalid("v must be nonzero"));
    }
    let v = [v[0] / nv, v[1] / nv, v[2] / nv];
    let mut out = StabilizerCount { fixing: 0, total: 0 };
    for w in enumerate_words(t, n, EnumerationMode::ExactLength, cap)? {
        let g = t.evaluate(&w)?;
        let u = g.adjoint_matrix().apply(v);
        let nu = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        let cross = [
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        ];
        let sin = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt() / nu;
        out.total += 1;
        if sin < FIX_TOL {
            out.fixing += 1;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EscapeRow {
    pub n: usize,
    pub delta: f64,
    pub subgroup: String,
    pub mass: f64,
}

/// `mu^{*2n}(H^(delta))` for `n = 0..=n_max`, every `H` and `delta`, as the
/// pair sum `sum_{a, b} mu^{*n}(a) mu^{*n}(b) 1[dist(ab, H) <= delta]`.
/// `caps.pairs` bounds `|supp mu^{*n}|^2`.
pub fn escape_curve(
    t: &GeneratorSet,
    subgroups: &[SubgroupSpec],
    deltas: &[f64],
    n_max: usize,
    mode: KeyMode,
    caps: &MeasureCaps,
) -> Result<Vec<EscapeRow>> {
    let kind = t.kind();
    let mu = AtomicMeasure::symmetrize(t, mode)?;
    let mut half = AtomicMeasure::dirac_identity(kind, mode)?;
    let mut rows = Vec::new();
    for n in 0..=n_max {
        if n > 0 {
            half = half.convolve(&mu, caps)?;
        }
        let len = half.len() as u128;
        if len * len > caps.pairs {
            return Err(Error::CapExceeded {
                what: "escape pair sum",
                needed: len * len,
                cap: caps.pairs,
            });
        }
        let mut mass = vec![vec![0.0f64; deltas.len()]; subgroups.len()];
        let (ms, ws) = (half.matrices(), half.weights());
        for (a, wa) in ms.iter().zip(ws) {
            let mut row = vec![vec![0.0f64; deltas.len()]; subgroups.len()];
            for (b, wb) in ms.iter().zip(ws) {
                let g = *a * *b;
                for (h, acc) in subgroups.iter().zip(row.iter_mut()) {
                    let d = h.distance_matrix(kind, &g);
                    for (&delta, m) in deltas.iter().zip(acc.iter_mut()) {
                        if d <= delta {
                            *m += wb;
                        }
                    }
                }
            }
            for (acc, r) in mass.iter_mut().zip(&row) {
                for (m, v) in acc.iter_mut().zip(r) {
                    *m += wa * v;
                }
            }
        }
        for (h, acc) in subgroups.iter().zip(&mass) {
            for (&delta, &m) in deltas.iter().zip(acc) {
                rows.push(EscapeRow {
                    n,
                    delta,
                    subgroup: h.name(),
                    mass: m,
                });
            }
        }
    }
    Ok(rows)
}

/// Least-squares slope of `log mass` against `log delta` over rows with
/// positive mass; `None` with fewer than two such rows.
pub fn fit_exponent(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(d, m)| *d > 0.0 && *m > 0.0)
        .map(|(d, m)| (d.ln(), m.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_core::presets::lps_p5;
    use crate::group_core::C64;
    use crate::measures::SubgroupFamily;

    fn brute_y(m: usize, a: usize, b: usize, ell: usize) -> Vec<Word> {
        let letters = 2 * m;
        let mut out = Vec::new();
        let total = letters.pow((ell - 2) as u32);
        for mut code in 0..total {
            let mut ls = vec![Letter::new(a, false)];
            for _ in 0..ell - 2 {
                ls.push(Letter((code % letters) as u16));
                code /= letters;
            }
            ls.push(Letter::new(b, false));
            let w = Word::from_letters_unreduced(ls);
            if w.is_reduced() {
                out.push(w);
            }
        }
        out.sort();
        out
    }

    #[test]
    fn y_matches_brute_force() {
        for (m, ell) in [(2, 3), (2, 4), (2, 6), (3, 5)] {
            let y = build_y(m, 0, 1, ell, 1 << 20, 0).unwrap();
            let want = brute_y(m, 0, 1, ell);
            assert_eq!(y.total as usize, want.len());
            assert_eq!(y.words, want);
            assert!(y.total >= ((2 * m - 1) as u128).pow((ell - 3) as u32));
        }
        assert!(!build_y(2, 0, 1, 3, 10, 0).unwrap().words.is_empty());
        assert!(build_y(2, 1, 1, 4, 10, 0).is_err());
    }

    #[test]
    fn y_sampling_is_deterministic_and_distinct() {
        let a = build_y(2, 0, 1, 10, 100, 5).unwrap();
        let b = build_y(2, 0, 1, 10, 100, 5).unwrap();
        assert!(a.sampled);
        assert_eq!(a.words, b.words);
        assert_eq!(a.words.len(), 100);
        let mut d = a.words.clone();
        d.dedup();
        assert_eq!(d.len(), 100);
        assert!(a.words.iter().all(|w| w.is_reduced() && w.len() == 10));
    }

    fn lps_config(ell: usize, r: f64) -> EscapeConfig {
        let mut c = EscapeConfig::new(lps_p5().unwrap(), ell, 0.2);
        c.bucket_resolution = Some(r);
        c
    }

    #[test]
    fn t_is_near_identity_and_labelled() {
        let set = build_t(&lps_config(7, 0.15)).unwrap();
        assert!(set.t.len() >= 1);
        let base = lps_p5().unwrap();
        for g in set.t.elements() {
            assert!(g.norm_to_identity() <= set.eps_measured + 1e-12);
            let w = g.word().unwrap();
            assert!(base.evaluate(w).unwrap().matrix().dist(g.matrix()) < 1e-9);
            assert!(w.len() >= 7 && w.len() <= 6 * 7);
        }
        let again = build_t(&lps_config(7, 0.15)).unwrap();
        assert_eq!(again.g0, set.g0);
        assert_eq!(again.t.len(), set.t.len());
        let rep = verify_claim1(&set.t, 7, 1, 1 << 20).unwrap();
        assert!(rep.violations.is_empty(), "{:?}", rep.violations);
        assert_eq!(verify_claim1(&set.t, 7, 0, 1).unwrap().checked, 0);
    }

    #[test]
    fn singleton_bucket_and_bad_configs() {
        let c = lps_config(4, 1e-6);
        assert!(matches!(build_t(&c), Err(Error::SingletonBucket { .. })));
        let mut c = lps_config(6, 0.1);
        c.b = 0;
        assert!(build_t(&c).is_err());
        assert!(build_t(&lps_config(3, 0.1)).is_err());
    }

    #[test]
    fn claim1_on_pairs() {
        let mut c = lps_config(7, 0.15);
        c.max_size = Some(2);
        let set = build_t(&c).unwrap();
        assert_eq!(set.t.len(), 2);
        let rep = verify_claim1(&set.t, 7, 2, 1 << 20).unwrap();
        assert_eq!(rep.checked, 12);
        assert!(rep.violations.is_empty());
    }

    #[test]
    fn stabilizer_counts() {
        let gens = lps_p5().unwrap();
        // g1 is diagonal, so it fixes the i sigma_3 axis
        let c = stabilizer_count(&gens, [0.0, 0.0, 1.0], 1, 1 << 10).unwrap();
        assert_eq!(c.total, 6);
        assert_eq!(c.fixing, 2);
        let c = stabilizer_count(&gens, [0.3, 0.5, 0.7], 1, 1 << 10).unwrap();
        assert_eq!(c.fixing, 0);
        let c = stabilizer_count(&gens, [0.0, 0.0, 1.0], 3, 1 << 10).unwrap();
        assert!(c.fixing < c.total);
    }

    #[test]
    fn escape_curve_basics() {
        let r = GroupElement::su2(C64::new(0.9f64.cos(), 0.0), C64::new(0.9f64.sin(), 0.0)).unwrap();
        let s = GroupElement::su2(C64::new(0.8, 0.0), C64::new(0.0, 0.6)).unwrap();
        let t = GeneratorSet::new(vec![
            r.with_word(Word::parse("a").unwrap()),
            s.with_word(Word::parse("b").unwrap()),
        ])
        .unwrap()
        .with_freeness(Freeness::Assumed);
        let hs = [SubgroupSpec::new(SubgroupFamily::Rotation), SubgroupSpec::new(SubgroupFamily::Diagonal)];
        let rows = escape_curve(&t, &hs, &[0.05, 10.0], 2, KeyMode::Label, &MeasureCaps::default()).unwrap();
        assert_eq!(rows.len(), 3 * 2 * 2);
        for row in &rows {
            if row.n == 0 || row.delta == 10.0 {
                assert!((row.mass - 1.0).abs() < 1e-12);
            }
            assert!(row.mass <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn exponent_fit() {
        let pts: Vec<(f64, f64)> = [0.01, 0.02, 0.05, 0.1].iter().map(|&d: &f64| (d, 3.0 * d.powf(1.5))).collect();
        assert!((fit_exponent(&pts).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(fit_exponent(&[(0.1, 0.0), (0.2, 0.5)]), None);
    }
}
