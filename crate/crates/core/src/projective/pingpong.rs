//! Ping-pong tables on P1(R).
//!
//! A table assigns to every letter `g` of the symmetric alphabet two finite
//! unions of arcs `K_g`, `U_g` with
//!   (a) `g(U_g) ⊂ K_g`,
//!   (b) every point lies in at least two of the `U_g`,
//!   (c) `K_g ⊂ U_h` unless `g h = 1`,
//!   (d) `K_g ∩ K_h = ∅` unless `g = h`,
//! which forces free generation. Tables over exact SL2(Q) generators are
//! verified in exact integer arithmetic; float tables are verified with a
//! positive margin.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::PI;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Float, ToPrimitive};

use super::{real_entries, rem_pi, wrap_angle};
use crate::error::{Error, Result};
use crate::group_core::{Freeness, GeneratorSet, GroupElement, GroupKind, Letter};

const COORD_LIMIT: i128 = 1 << 60;

/// A rational line `[x : y]`, reduced, with `y > 0` or `y = 0 < x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ExactPoint {
    x: i128,
    y: i128,
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl ExactPoint {
    pub fn new(x: i128, y: i128) -> Option<Self> {
        if x == 0 && y == 0 {
            return None;
        }
        let g = gcd(x, y);
        let (mut x, mut y) = (x / g, y / g);
        if y < 0 || (y == 0 && x < 0) {
            x = -x;
            y = -y;
        }
        if x.abs() >= COORD_LIMIT || y >= COORD_LIMIT {
            return None;
        }
        Some(ExactPoint { x, y })
    }

    pub fn x(self) -> i128 {
        self.x
    }

    pub fn y(self) -> i128 {
        self.y
    }

    pub fn angle(self) -> f64 {
        wrap_angle((self.y as f64).atan2(self.x as f64))
    }

    fn cross(self, o: ExactPoint) -> i128 {
        self.x * o.y - self.y * o.x
    }

    /// Angle order on `[0, pi)`.
    fn before(self, o: ExactPoint) -> bool {
        self.cross(o) > 0
    }

    fn order(self, o: ExactPoint) -> Ordering {
        0.cmp(&self.cross(o))
    }

    /// A point strictly between `self` and `o` going counterclockwise,
    /// for `self` before `o`.
    fn between(self, o: ExactPoint) -> Option<ExactPoint> {
        ExactPoint::new(self.x.checked_add(o.x)?, self.y.checked_add(o.y)?)
    }

    /// A point strictly between `self` and `o + pi`, for `o` before `self`.
    fn between_wrapped(self, o: ExactPoint) -> Option<ExactPoint> {
        ExactPoint::new(self.x.checked_sub(o.x)?, self.y.checked_sub(o.y)?)
    }
}

type IntMat = [[i128; 2]; 2];

fn apply(m: &IntMat, p: ExactPoint) -> Option<ExactPoint> {
    let x = m[0][0].checked_mul(p.x)?.checked_add(m[0][1].checked_mul(p.y)?)?;
    let y = m[1][0].checked_mul(p.x)?.checked_add(m[1][1].checked_mul(p.y)?)?;
    ExactPoint::new(x, y)
}

/// A projectively equivalent integer matrix, if the element has exact entries.
fn integer_matrix(g: &GroupElement) -> Option<IntMat> {
    let e = g.exact()?;
    let mut l = BigInt::from(1);
    for row in &e.0 {
        for v in row {
            l = l.lcm(v.denom());
        }
    }
    let mut out = [[0i128; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let v = &e.0[i][j];
            let n = v.numer() * (&l / v.denom());
            out[i][j] = n.to_i128()?;
            if out[i][j].abs() >= 1 << 40 {
                return None;
            }
        }
    }
    Some(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct ExactArc {
    s: ExactPoint,
    e: ExactPoint,
    cs: bool,
    ce: bool,
}

impl ExactArc {
    fn contains(&self, p: ExactPoint) -> bool {
        if p == self.s {
            return self.cs;
        }
        if p == self.e {
            return self.ce;
        }
        if self.s.before(self.e) {
            self.s.before(p) && p.before(self.e)
        } else {
            self.s.before(p) || p.before(self.e)
        }
    }

    fn complement(&self) -> ExactArc {
        ExactArc {
            s: self.e,
            e: self.s,
            cs: !self.ce,
            ce: !self.cs,
        }
    }

    fn image(&self, m: &IntMat) -> Option<ExactArc> {
        Some(ExactArc {
            s: apply(m, self.s)?,
            e: apply(m, self.e)?,
            cs: self.cs,
            ce: self.ce,
        })
    }

    /// Position going counterclockwise from `s`: `(lap, point)`.
    fn pos_cmp(&self, a: ExactPoint, b: ExactPoint) -> Ordering {
        let lap = |x: ExactPoint| (x != self.s && !self.s.before(x)) as u8;
        lap(a).cmp(&lap(b)).then_with(|| if a == b { Ordering::Equal } else { a.order(b) })
    }

    fn within(&self, outer: &ExactArc) -> bool {
        let le = |a, b| outer.pos_cmp(a, b) != Ordering::Greater;
        if !(le(self.s, outer.e) && le(self.e, outer.e)) {
            return false;
        }
        if outer.pos_cmp(self.s, self.e) != Ordering::Less {
            return false;
        }
        if self.cs && self.s == outer.s && !outer.cs {
            return false;
        }
        if self.ce && self.e == outer.e && !outer.ce {
            return false;
        }
        true
    }

    fn disjoint(&self, o: &ExactArc) -> bool {
        o.within(&self.complement())
    }
}

/// An arc of P1 traversed counterclockwise from `lo` to `hi` (angles in
/// `[0, pi)`; `hi < lo` wraps through `0`).
#[derive(Clone, Debug, PartialEq)]
pub struct Arc {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
    /// Rational endpoints, for exactly verified tables.
    pub exact: Option<(ExactPoint, ExactPoint)>,
}

impl Arc {
    fn from_exact(a: &ExactArc) -> Arc {
        Arc {
            lo: a.s.angle(),
            hi: a.e.angle(),
            lo_closed: a.cs,
            hi_closed: a.ce,
            exact: Some((a.s, a.e)),
        }
    }

    fn to_exact(&self) -> Option<ExactArc> {
        let (s, e) = self.exact?;
        Some(ExactArc {
            s,
            e,
            cs: self.lo_closed,
            ce: self.hi_closed,
        })
    }

    pub fn length(&self) -> f64 {
        let l = rem_pi(self.hi - self.lo);
        if l == 0.0 {
            PI
        } else {
            l
        }
    }

    /// Closed membership with the arc grown by `pad` at both ends (shrunk
    /// for negative `pad`).
    pub fn contains_angle(&self, t: f64, pad: f64) -> bool {
        let len = self.length() + 2.0 * pad;
        if len < 0.0 {
            return false;
        }
        rem_pi(t - (self.lo - pad)) <= len
    }
}

/// `K` and `U` for every letter, indexed by letter code.
#[derive(Clone, Debug, PartialEq)]
pub struct PingPongCertificate {
    pub k: Vec<Vec<Arc>>,
    pub u: Vec<Vec<Arc>>,
    /// Whether the table was verified in exact arithmetic.
    pub exact: bool,
    /// Margin the float verification used; zero for exact tables.
    pub margin: f64,
    /// Search nodes visited before success.
    pub explored: usize,
}

#[derive(Clone, Debug)]
pub struct CertifyOptions {
    /// Search nodes allowed across both phases.
    pub budget: usize,
    /// Float verification margin.
    pub margin: f64,
    /// Candidate rational endpoints `[x : y]` with `|x|, |y| <= height`.
    pub height: i128,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            budget: 2_000_000,
            margin: 1e-9,
            height: 2,
        }
    }
}

fn letter_count(gens: &GeneratorSet) -> usize {
    2 * gens.len()
}

fn letter_matrix(gens: &GeneratorSet, code: usize) -> Result<[f64; 4]> {
    real_entries(gens.letter(Letter(code as u16))?)
}

fn float_image(m: &[f64; 4], t: f64) -> f64 {
    let (s, c) = t.sin_cos();
    wrap_angle((m[2] * c + m[3] * s).atan2(m[0] * c + m[1] * s))
}

fn exact_sample_points(arcs: &[&ExactArc]) -> Option<Vec<ExactPoint>> {
    let mut pts: Vec<ExactPoint> = Vec::with_capacity(2 * arcs.len());
    for a in arcs {
        pts.push(a.s);
        pts.push(a.e);
    }
    pts.sort_by(|a, b| if a == b { Ordering::Equal } else { a.order(*b) });
    pts.dedup();
    let mut out = pts.clone();
    match pts.len() {
        0 => out.push(ExactPoint::new(1, 0)?),
        1 => out.push(ExactPoint::new(-pts[0].y, pts[0].x)?),
        n => {
            for i in 0..n - 1 {
                out.push(pts[i].between(pts[i + 1])?);
            }
            out.push(pts[n - 1].between_wrapped(pts[0])?);
        }
    }
    Some(out)
}

fn any_contains(arcs: &[ExactArc], p: ExactPoint) -> bool {
    arcs.iter().any(|a| a.contains(p))
}

fn verify_exact(k: &[Vec<ExactArc>], u: &[Vec<ExactArc>], mats: &[IntMat]) -> core::result::Result<(), String> {
    let n = k.len();
    let mut images: Vec<Vec<ExactArc>> = Vec::with_capacity(n);
    for g in 0..n {
        let mut im = Vec::new();
        for a in &u[g] {
            im.push(a.image(&mats[g]).ok_or("coordinate overflow")?);
        }
        images.push(im);
    }
    let all: Vec<&ExactArc> = k.iter().chain(u.iter()).chain(images.iter()).flatten().collect();
    let pts = exact_sample_points(&all).ok_or("coordinate overflow")?;
    for &p in &pts {
        for g in 0..n {
            if any_contains(&images[g], p) && !any_contains(&k[g], p) {
                return Err(format!("(a) fails for letter {g} at [{}:{}]", p.x, p.y));
            }
        }
        let cover = (0..n).filter(|&g| any_contains(&u[g], p)).count();
        if cover < 2 {
            return Err(format!("(b) fails at [{}:{}] (covered {cover} times)", p.x, p.y));
        }
        for g in 0..n {
            if !any_contains(&k[g], p) {
                continue;
            }
            for h in 0..n {
                if h != (g ^ 1) && !any_contains(&u[h], p) {
                    return Err(format!("(c) fails for K_{g} in U_{h} at [{}:{}]", p.x, p.y));
                }
                if h != g && any_contains(&k[h], p) {
                    return Err(format!("(d) fails for K_{g}, K_{h} at [{}:{}]", p.x, p.y));
                }
            }
        }
    }
    Ok(())
}

fn float_sample_points(arcs: &[(f64, f64)]) -> Vec<f64> {
    let mut pts: Vec<f64> = Vec::with_capacity(4 * arcs.len() + 1);
    for &(lo, len) in arcs {
        pts.push(wrap_angle(lo));
        pts.push(wrap_angle(lo + len));
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let n = pts.len();
    if n == 0 {
        return vec![0.0];
    }
    let mut out = pts.clone();
    for i in 0..n {
        let next = if i + 1 < n { pts[i + 1] } else { pts[0] + PI };
        out.push(wrap_angle(0.5 * (pts[i] + next)));
    }
    out
}

struct FloatArc {
    lo: f64,
    len: f64,
}

impl FloatArc {
    fn of(a: &Arc, pad: f64) -> Option<FloatArc> {
        let len = a.length() + 2.0 * pad;
        (len > 0.0).then(|| FloatArc { lo: a.lo - pad, len })
    }

    fn contains(&self, t: f64) -> bool {
        rem_pi(t - self.lo) <= self.len
    }

    fn image(&self, m: &[f64; 4]) -> FloatArc {
        let lo = float_image(m, self.lo);
        let hi = float_image(m, self.lo + self.len);
        let mut len = rem_pi(hi - lo);
        if len == 0.0 && self.len > PI / 2.0 {
            len = PI;
        }
        FloatArc { lo, len }
    }
}

fn verify_float(cert: &PingPongCertificate, mats: &[[f64; 4]], m: f64) -> core::result::Result<(), String> {
    let n = cert.k.len();
    let pad = |arcs: &[Arc], p: f64| -> Vec<FloatArc> { arcs.iter().filter_map(|a| FloatArc::of(a, p)).collect() };
    let k_in: Vec<Vec<FloatArc>> = cert.k.iter().map(|a| pad(a, -m)).collect();
    let k_out: Vec<Vec<FloatArc>> = cert.k.iter().map(|a| pad(a, m)).collect();
    let u_in: Vec<Vec<FloatArc>> = cert.u.iter().map(|a| pad(a, -m)).collect();
    let images: Vec<Vec<FloatArc>> = (0..n)
        .map(|g| pad(&cert.u[g], 0.0).iter().map(|a| a.image(&mats[g])).collect())
        .collect();
    let mut spans = Vec::new();
    for set in [&k_in, &k_out, &u_in, &images] {
        for arcs in set.iter() {
            spans.extend(arcs.iter().map(|a| (a.lo, a.len)));
        }
    }
    let hit = |arcs: &[FloatArc], t: f64| arcs.iter().any(|a| a.contains(t));
    for t in float_sample_points(&spans) {
        for g in 0..n {
            if hit(&images[g], t) && !hit(&k_in[g], t) {
                return Err(format!("(a) fails for letter {g} at angle {t}"));
            }
        }
        let cover = (0..n).filter(|&g| hit(&u_in[g], t)).count();
        if cover < 2 {
            return Err(format!("(b) fails at angle {t} (covered {cover} times)"));
        }
        for g in 0..n {
            if !hit(&k_out[g], t) {
                continue;
            }
            for h in 0..n {
                if h != g && hit(&k_out[h], t) {
                    return Err(format!("(d) fails for K_{g}, K_{h} at angle {t}"));
                }
            }
        }
        for g in 0..n {
            if !hit(&pad(&cert.k[g], 0.0), t) {
                continue;
            }
            for h in 0..n {
                if h != (g ^ 1) && !hit(&u_in[h], t) {
                    return Err(format!("(c) fails for K_{g} in U_{h} at angle {t}"));
                }
            }
        }
    }
    Ok(())
}

fn exact_tables(cert: &PingPongCertificate) -> Option<(Vec<Vec<ExactArc>>, Vec<Vec<ExactArc>>)> {
    let conv = |sets: &Vec<Vec<Arc>>| -> Option<Vec<Vec<ExactArc>>> {
        sets.iter().map(|arcs| arcs.iter().map(Arc::to_exact).collect()).collect()
    };
    Some((conv(&cert.k)?, conv(&cert.u)?))
}

/// Checks (a)-(d). Exact tables over exact generators are checked exactly;
/// anything else in floats with the certificate's margin.
pub fn verify_certificate(cert: &PingPongCertificate, gens: &GeneratorSet) -> Result<()> {
    let n = letter_count(gens);
    if cert.k.len() != n || cert.u.len() != n {
        return Err(Error::invalid("certificate does not match the generator count"));
    }
    let mats: Option<Vec<IntMat>> = (0..n)
        .map(|c| gens.letter(Letter(c as u16)).ok().and_then(integer_matrix))
        .collect();
    let outcome = match (cert.exact, mats, exact_tables(cert)) {
        (true, Some(m), Some((k, u))) => verify_exact(&k, &u, &m),
        (true, _, _) => return Err(Error::invalid("exact certificate needs exact generators and endpoints")),
        (false, _, _) => {
            let fm: Vec<[f64; 4]> = (0..n).map(|c| letter_matrix(gens, c)).collect::<Result<_>>()?;
            verify_float(cert, &fm, cert.margin.max(1e-9))
        }
    };
    outcome.map_err(Error::InvalidInput)
}

#[derive(Clone, Debug, Default)]
pub struct SamplingReport {
    pub samples: usize,
    pub violations: Vec<String>,
}

/// Independent float re-check of (a)-(d) on `per_interval` interior points
/// of every arc.
pub fn reverify_by_sampling(cert: &PingPongCertificate, gens: &GeneratorSet, per_interval: usize) -> Result<SamplingReport> {
    let n = letter_count(gens);
    let mats: Vec<[f64; 4]> = (0..n).map(|c| letter_matrix(gens, c)).collect::<Result<_>>()?;
    let strict = |arcs: &[Arc], t: f64| arcs.iter().any(|a| arc_holds(a, t));
    let interior = |a: &Arc| -> Vec<f64> {
        let len = a.length();
        (0..per_interval)
            .map(|i| wrap_angle(a.lo + len * (i as f64 + 0.5) / per_interval as f64))
            .collect()
    };
    let mut rep = SamplingReport::default();
    for g in 0..n {
        for a in &cert.u[g] {
            for t in interior(a) {
                rep.samples += 1;
                let y = float_image(&mats[g], t);
                if !strict(&cert.k[g], y) {
                    rep.violations.push(format!("(a) letter {g} angle {t}"));
                }
            }
        }
        for a in &cert.k[g] {
            for t in interior(a) {
                rep.samples += 1;
                for h in 0..n {
                    if h != (g ^ 1) && !strict(&cert.u[h], t) {
                        rep.violations.push(format!("(c) K_{g} in U_{h} angle {t}"));
                    }
                    if h != g && strict(&cert.k[h], t) {
                        rep.violations.push(format!("(d) K_{g}, K_{h} angle {t}"));
                    }
                }
            }
        }
    }
    for i in 0..per_interval {
        let t = PI * (i as f64 + 0.5) / per_interval as f64;
        rep.samples += 1;
        let cover = (0..n).filter(|&g| strict(&cert.u[g], t)).count();
        if cover < 2 {
            rep.violations.push(format!("(b) angle {t} covered {cover} times"));
        }
    }
    Ok(rep)
}

fn arc_holds(a: &Arc, t: f64) -> bool {
    let d = rem_pi(t - a.lo);
    let len = a.length();
    (d > 0.0 && d < len) || (d == 0.0 && a.lo_closed) || (d == len && a.hi_closed)
}

/// Dominant eigenline of a hyperbolic letter.
fn attracting_angle(m: &[f64; 4]) -> Option<f64> {
    let t = m[0] + m[3];
    let disc = t * t - 4.0;
    if disc <= 0.0 {
        return None;
    }
    let l = if t > 0.0 { 0.5 * (t + disc.sqrt()) } else { 0.5 * (t - disc.sqrt()) };
    let (u, v) = ((m[1], l - m[0]), (l - m[3], m[2]));
    let (x, y) = if u.0.hypot(u.1) >= v.0.hypot(v.1) { u } else { v };
    Some(wrap_angle(y.atan2(x)))
}

/// Float phase: `K_g` is a symmetric arc about the attracting eigenline and
/// `U_g` the complement of `K_{g^-1}`.
fn float_search(gens: &GeneratorSet, opts: &CertifyOptions, explored: &mut usize) -> Result<Option<PingPongCertificate>> {
    let n = letter_count(gens);
    let mats: Vec<[f64; 4]> = (0..n).map(|c| letter_matrix(gens, c)).collect::<Result<_>>()?;
    let Some(centres) = mats.iter().map(attracting_angle).collect::<Option<Vec<f64>>>() else {
        return Ok(None);
    };
    let mut w = PI / 4.0;
    while w > 1e-7 && *explored < opts.budget {
        *explored += 1;
        let arc = |lo: f64, len: f64| Arc {
            lo: wrap_angle(lo),
            hi: wrap_angle(lo + len),
            lo_closed: true,
            hi_closed: true,
            exact: None,
        };
        let k: Vec<Vec<Arc>> = centres.iter().map(|&c| vec![arc(c - w, 2.0 * w)]).collect();
        let u: Vec<Vec<Arc>> = (0..n).map(|g| vec![arc(centres[g ^ 1] + w, PI - 2.0 * w)]).collect();
        let cert = PingPongCertificate {
            k,
            u,
            exact: false,
            margin: opts.margin,
            explored: *explored,
        };
        if verify_float(&cert, &mats, opts.margin).is_ok() {
            return Ok(Some(cert));
        }
        w *= 0.9;
    }
    Ok(None)
}

fn rational_fixed_points(m: &IntMat) -> Vec<ExactPoint> {
    let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
    let t = a + d;
    let det = a * d - b * c;
    let disc = t * t - 4 * det;
    if disc < 0 {
        return Vec::new();
    }
    let r = isqrt(disc);
    if r * r != disc {
        return Vec::new();
    }
    let mut out = Vec::new();
    // eigenvalue (t +- r) / 2 scaled by 2: (2a - t -+ r) x + 2b y = 0
    for s in [r, -r] {
        let l2 = t + s;
        let cands = [(2 * b, l2 - 2 * a), (l2 - 2 * d, 2 * c)];
        for (x, y) in cands {
            if let Some(p) = ExactPoint::new(x, y) {
                out.push(p);
            }
        }
    }
    out.retain(|p| {
        let q = apply(m, *p);
        q == Some(*p)
    });
    out
}

fn isqrt(n: i128) -> i128 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as i128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

fn mat_mul(a: &IntMat, b: &IntMat) -> Option<IntMat> {
    let mut out = [[0i128; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0].checked_mul(b[0][j])?.checked_add(a[i][1].checked_mul(b[1][j])?)?;
        }
    }
    Some(out)
}

fn candidate_points(mats: &[IntMat], height: i128) -> Vec<ExactPoint> {
    let mut pts = Vec::new();
    for x in -height..=height {
        for y in 0..=height {
            if let Some(p) = ExactPoint::new(x, y) {
                pts.push(p);
            }
        }
    }
    for a in mats {
        pts.extend(rational_fixed_points(a));
        for b in mats {
            if let Some(ab) = mat_mul(a, b) {
                pts.extend(rational_fixed_points(&ab));
            }
        }
    }
    let base = pts.clone();
    for m in mats {
        pts.extend(base.iter().filter_map(|&p| apply(m, p)));
    }
    pts.sort_by(|a, b| if a == b { Ordering::Equal } else { a.order(*b) });
    pts.dedup();
    pts
}

struct ExactSearch<'a> {
    mats: &'a [IntMat],
    candidates: Vec<Vec<ExactArc>>,
    order: Vec<usize>,
    chosen: Vec<Option<ExactArc>>,
    explored: usize,
    budget: usize,
}

impl ExactSearch<'_> {
    fn compatible(&self, g: usize, a: &ExactArc) -> bool {
        for (h, b) in self.chosen.iter().enumerate() {
            let Some(b) = b else { continue };
            if !a.disjoint(b) {
                return false;
            }
            // K_g ⊂ U_h = h^-1 K_h, i.e. h K_g ⊂ K_h, and symmetrically
            if h != (g ^ 1) {
                match (a.image(&self.mats[h]), b.image(&self.mats[g])) {
                    (Some(ha), Some(gb)) if ha.within(b) && gb.within(a) => {}
                    _ => return false,
                }
            }
        }
        true
    }

    fn run(&mut self, depth: usize) -> Option<bool> {
        if depth == self.order.len() {
            let k: Vec<Vec<ExactArc>> = self.chosen.iter().map(|a| vec![a.unwrap()]).collect();
            let u = self.u_tables(&k)?;
            return Some(verify_exact(&k, &u, self.mats).is_ok());
        }
        let g = self.order[depth];
        for i in 0..self.candidates[g].len() {
            if self.explored >= self.budget {
                return None;
            }
            self.explored += 1;
            let a = self.candidates[g][i];
            if !self.compatible(g, &a) {
                continue;
            }
            self.chosen[g] = Some(a);
            match self.run(depth + 1) {
                Some(true) => return Some(true),
                None => {
                    self.chosen[g] = None;
                    return None;
                }
                Some(false) => {}
            }
            self.chosen[g] = None;
        }
        Some(false)
    }

    /// `U_g = g^-1 K_g`, so that (a) holds with equality.
    fn u_tables(&self, k: &[Vec<ExactArc>]) -> Option<Vec<Vec<ExactArc>>> {
        (0..k.len())
            .map(|g| k[g].iter().map(|a| a.image(&self.mats[g ^ 1])).collect())
            .collect()
    }
}

/// Exact phase: backtracking over open arcs with rational endpoints drawn
/// from small-height points, rational fixed points of letters and their
/// pairwise products, and one-step images of those.
fn exact_search(gens: &GeneratorSet, opts: &CertifyOptions, explored: &mut usize) -> Option<PingPongCertificate> {
    let n = letter_count(gens);
    let mats: Vec<IntMat> = (0..n)
        .map(|c| gens.letter(Letter(c as u16)).ok().and_then(integer_matrix))
        .collect::<Option<_>>()?;
    let pts = candidate_points(&mats, opts.height);
    let mut candidates = Vec::with_capacity(n);
    for m in &mats {
        let mut arcs = Vec::new();
        for &s in &pts {
            for &e in &pts {
                if s == e {
                    continue;
                }
                let a = ExactArc { s, e, cs: false, ce: false };
                // K_g is forward invariant under g
                if a.image(m).is_some_and(|ga| ga.within(&a)) {
                    arcs.push(a);
                }
            }
        }
        candidates.push(arcs);
    }
    let order: Vec<usize> = (0..n).step_by(2).chain((1..n).step_by(2)).collect();
    let mut search = ExactSearch {
        mats: &mats,
        candidates,
        order,
        chosen: vec![None; n],
        explored: 0,
        budget: opts.budget.saturating_sub(*explored),
    };
    let found = search.run(0);
    *explored += search.explored;
    if found != Some(true) {
        return None;
    }
    let k: Vec<Vec<ExactArc>> = search.chosen.iter().map(|a| vec![a.unwrap()]).collect();
    let u = search.u_tables(&k)?;
    let conv = |t: &Vec<Vec<ExactArc>>| t.iter().map(|arcs| arcs.iter().map(Arc::from_exact).collect()).collect();
    Some(PingPongCertificate {
        k: conv(&k),
        u: conv(&u),
        exact: true,
        margin: 0.0,
        explored: *explored,
    })
}

/// Searches for a ping-pong table; on success marks `gens` certified.
/// Failure within the budget says nothing about freeness.
pub fn certify_free(gens: &mut GeneratorSet, opts: &CertifyOptions) -> Result<PingPongCertificate> {
    if gens.kind() != GroupKind::Sl2R {
        return Err(Error::KindMismatch);
    }
    if gens.len() < 2 {
        return Err(Error::invalid("ping-pong certification needs at least two generators"));
    }
    let mut explored = 0;
    let found = match float_search(gens, opts, &mut explored)? {
        Some(c) => Some(c),
        None => exact_search(gens, opts, &mut explored),
    };
    match found {
        Some(cert) => {
            verify_certificate(&cert, gens)?;
            gens.set_freeness(Freeness::Certified);
            Ok(cert)
        }
        None => Err(Error::NoCertificate { explored }),
    }
}
