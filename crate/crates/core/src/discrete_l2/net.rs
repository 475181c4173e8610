use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::group_core::{GroupElement, GroupKind, Mat2, C64};
use crate::rng;

/// Hilbert-Schmidt diameter of SU(2).
pub const FULL_SU2_RADIUS: f64 = 2.0 * SQRT_2;
pub const DEFAULT_NET_CAP: usize = 2_000_000;

/// A bounded window of the group.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region {
    /// `{g : |g - 1|_HS <= radius}`; radius `>= FULL_SU2_RADIUS` is all of SU(2).
    Su2Ball { radius: f64 },
    /// `exp` of the box `|x|, |y|, |z| <= half_width` for `X = [[x, y], [z, -x]]`.
    Sl2rBox { half_width: f64 },
}

impl Region {
    pub fn full_su2() -> Self {
        Region::Su2Ball {
            radius: FULL_SU2_RADIUS,
        }
    }

    pub fn kind(&self) -> GroupKind {
        match self {
            Region::Su2Ball { .. } => GroupKind::Su2,
            Region::Sl2rBox { .. } => GroupKind::Sl2R,
        }
    }

    pub fn is_full(&self) -> bool {
        matches!(self, Region::Su2Ball { radius } if *radius >= FULL_SU2_RADIUS - 1e-12)
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Region::Su2Ball { radius } => radius > 0.0 && radius.is_finite(),
            Region::Sl2rBox { half_width } => half_width > 0.0 && half_width < PI / 2.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("bad region {self:?}")))
        }
    }

    /// Haar measure, normalised so SU(2) has mass `2 pi^2` and the SL2(R)
    /// density is 1 at the identity of the exponential chart.
    pub fn volume(&self) -> f64 {
        match *self {
            Region::Su2Ball { radius } => su2_ball_volume(radius),
            Region::Sl2rBox { half_width } => box_volume(half_width),
        }
    }

    pub fn contains(&self, m: &Mat2) -> bool {
        self.depth(m) >= 0.0
    }

    /// Signed distance to the boundary, in HS units for balls and chart
    /// units for boxes; negative outside.
    pub fn depth(&self, m: &Mat2) -> f64 {
        match *self {
            Region::Su2Ball { radius } => {
                if self.is_full() {
                    f64::INFINITY
                } else {
                    radius - m.dist(&Mat2::IDENTITY)
                }
            }
            Region::Sl2rBox { half_width } => match sl2r_log(m) {
                Some(x) => half_width - x.iter().fold(0.0f64, |a, v| a.max(v.abs())),
                None => f64::NEG_INFINITY,
            },
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            Region::Su2Ball { radius } => (2.0 * radius).min(FULL_SU2_RADIUS),
            Region::Sl2rBox { half_width } => {
                let mut r = 0.0f64;
                for s in 0..8u32 {
                    let c = |b: u32| if s >> b & 1 == 1 { half_width } else { -half_width };
                    r = r.max(sl2r_exp([c(0), c(1), c(2)]).dist(&Mat2::IDENTITY));
                }
                2.0 * r
            }
        }
    }

    pub fn descriptor(&self) -> String {
        match *self {
            Region::Su2Ball { .. } if self.is_full() => String::from("su2_full"),
            Region::Su2Ball { radius } => format!("su2_ball(r={radius})"),
            Region::Sl2rBox { half_width } => format!("sl2r_box(l={half_width})"),
        }
    }
}

/// Haar volume of the HS ball of radius `delta` about the identity of SU(2).
pub fn su2_ball_volume(delta: f64) -> f64 {
    let t = (delta / FULL_SU2_RADIUS).min(1.0);
    let alpha = 2.0 * t.asin();
    PI * (2.0 * alpha - (2.0 * alpha).sin())
}

/// Haar volume of `{g : |g - 1|_HS <= delta}`, by radial quadrature in the
/// exponential chart for SL2(R).
pub fn haar_ball_volume(kind: GroupKind, delta: f64) -> f64 {
    match kind {
        GroupKind::Su2 => su2_ball_volume(delta),
        GroupKind::Sl2R => radial_volume(kind, delta),
    }
}

pub(crate) fn radial_volume(kind: GroupKind, delta: f64) -> f64 {
    const NT: usize = 48;
    const NP: usize = 96;
    const NR: usize = 24;
    let (gx, gw) = gauss_legendre(NR);
    let mut total = 0.0;
    for it in 0..NT {
        let ct = -1.0 + (2.0 * it as f64 + 1.0) / NT as f64;
        let st = (1.0 - ct * ct).max(0.0).sqrt();
        for ip in 0..NP {
            let ph = (2.0 * ip as f64 + 1.0) * PI / NP as f64;
            let n = [st * ph.cos(), st * ph.sin(), ct];
            let rho = boundary_radius(kind, n, delta);
            let mut s = 0.0;
            for (x, w) in gx.iter().zip(&gw) {
                let r = 0.5 * rho * (x + 1.0);
                s += w * haar_density(kind, [r * n[0], r * n[1], r * n[2]]) * r * r;
            }
            total += 0.5 * rho * s * (2.0 / NT as f64) * (2.0 * PI / NP as f64);
        }
    }
    total
}

/// First chart radius along `n` at which `|exp - 1|_HS` reaches `delta`.
fn boundary_radius(kind: GroupKind, n: [f64; 3], delta: f64) -> f64 {
    let f = |r: f64| chart_exp(kind, [r * n[0], r * n[1], r * n[2]]).dist(&Mat2::IDENTITY) - delta;
    let mut hi = delta;
    while f(hi) < 0.0 {
        hi *= 1.5;
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

fn box_volume(l: f64) -> f64 {
    let (gx, gw) = gauss_legendre(24);
    let mut s = 0.0;
    for (a, wa) in gx.iter().zip(&gw) {
        for (b, wb) in gx.iter().zip(&gw) {
            for (c, wc) in gx.iter().zip(&gw) {
                s += wa * wb * wc * haar_density(GroupKind::Sl2R, [a * l, b * l, c * l]);
            }
        }
    }
    s * l * l * l
}

/// `(sinh l / l)^2` as a function of `s = l^2`, continued to `s < 0`.
fn sinhc_sq(s: f64) -> f64 {
    if s.abs() < 1e-8 {
        1.0 + s / 3.0
    } else if s > 0.0 {
        let l = s.sqrt();
        (l.sinh() / l).powi(2)
    } else {
        let l = (-s).sqrt();
        (l.sin() / l).powi(2)
    }
}

/// Haar density `|det((1 - e^{-ad X}) / ad X)|` in chart coordinates.
pub fn haar_density(kind: GroupKind, x: [f64; 3]) -> f64 {
    match kind {
        GroupKind::Su2 => sinhc_sq(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])),
        GroupKind::Sl2R => sinhc_sq(x[0] * x[0] + x[1] * x[2]),
    }
}

/// `cos|v| + sin|v|/|v| (v1 i s1 + v2 i s2 + v3 i s3)`.
pub fn su2_exp(v: [f64; 3]) -> Mat2 {
    let t = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let s = if t < 1e-8 { 1.0 - t * t / 6.0 } else { t.sin() / t };
    Mat2::su2(C64::new(t.cos(), s * v[2]), C64::new(-s * v[1], s * v[0]))
}

/// Inverse of [`su2_exp`] on `|v| < pi`.
pub fn su2_log(m: &Mat2) -> [f64; 3] {
    let a = m.0[0][0];
    let b = m.0[1][0];
    let u = [b.im, -b.re, a.im];
    let sn = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    let t = sn.atan2(a.re);
    let f = if sn < 1e-12 { 1.0 } else { t / sn };
    [f * u[0], f * u[1], f * u[2]]
}

/// `exp [[x, y], [z, -x]]`.
pub fn sl2r_exp(x: [f64; 3]) -> Mat2 {
    let s = x[0] * x[0] + x[1] * x[2];
    let (c, k) = if s.abs() < 1e-10 {
        (1.0 + s / 2.0, 1.0 + s / 6.0)
    } else if s > 0.0 {
        let l = s.sqrt();
        (l.cosh(), l.sinh() / l)
    } else {
        let l = (-s).sqrt();
        (l.cos(), l.sin() / l)
    };
    Mat2::real(c + k * x[0], k * x[1], k * x[2], c - k * x[0])
}

/// Principal logarithm in chart coordinates; `None` when the trace is at
/// most `-2`.
pub fn sl2r_log(m: &Mat2) -> Option<[f64; 3]> {
    let a = m.0[0][0].re;
    let d = m.0[1][1].re;
    let c = 0.5 * (a + d);
    let f = if (c - 1.0).abs() < 1e-10 {
        1.0 - (c - 1.0) / 3.0
    } else if c > 1.0 {
        let l = c.acosh();
        l / l.sinh()
    } else if c > -1.0 {
        let l = c.acos();
        l / l.sin()
    } else {
        return None;
    };
    Some([f * 0.5 * (a - d), f * m.0[0][1].re, f * m.0[1][0].re])
}

pub fn chart_exp(kind: GroupKind, x: [f64; 3]) -> Mat2 {
    match kind {
        GroupKind::Su2 => su2_exp(x),
        GroupKind::Sl2R => sl2r_exp(x),
    }
}

/// Real coordinates whose Euclidean distance is the HS distance.
pub fn embed(kind: GroupKind, m: &Mat2) -> [f64; 4] {
    match kind {
        GroupKind::Su2 => {
            let (a, b) = (m.0[0][0], m.0[1][0]);
            [SQRT_2 * a.re, SQRT_2 * a.im, SQRT_2 * b.re, SQRT_2 * b.im]
        }
        GroupKind::Sl2R => [m.0[0][0].re, m.0[0][1].re, m.0[1][0].re, m.0[1][1].re],
    }
}

fn dist4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2) + (a[3] - b[3]).powi(2)).sqrt()
}

/// Operator norm of a real 2x2 matrix.
pub(crate) fn op_norm(m: &Mat2) -> f64 {
    let f2 = m.frobenius_sq();
    let d = m.det().norm();
    (0.5 * (f2 + (f2 * f2 - 4.0 * d * d).max(0.0).sqrt())).sqrt()
}

/// Buckets of side `cell` over embedded points, sorted lexicographically.
#[derive(Clone, Debug)]
pub(crate) struct PointIndex {
    cell: f64,
    keys: Vec<[i32; 4]>,
    starts: Vec<u32>,
    order: Vec<u32>,
}

impl PointIndex {
    pub(crate) fn new(emb: &[[f64; 4]], cell: f64) -> Self {
        let mut order: Vec<u32> = (0..emb.len() as u32).collect();
        let key = |p: &[f64; 4]| Self::key_of(cell, p);
        order.sort_by_key(|&i| (key(&emb[i as usize]), i));
        let mut keys = Vec::new();
        let mut starts = Vec::new();
        for (pos, &i) in order.iter().enumerate() {
            let k = key(&emb[i as usize]);
            if keys.last() != Some(&k) {
                keys.push(k);
                starts.push(pos as u32);
            }
        }
        starts.push(order.len() as u32);
        PointIndex {
            cell,
            keys,
            starts,
            order,
        }
    }

    fn key_of(cell: f64, p: &[f64; 4]) -> [i32; 4] {
        [
            (p[0] / cell).floor() as i32,
            (p[1] / cell).floor() as i32,
            (p[2] / cell).floor() as i32,
            (p[3] / cell).floor() as i32,
        ]
    }

    /// Calls `f(index, distance)` for every point within `r` of `c`.
    pub(crate) fn within(&self, emb: &[[f64; 4]], c: &[f64; 4], r: f64, mut f: impl FnMut(usize, f64)) {
        let k = Self::key_of(self.cell, c);
        let m = (r / self.cell).ceil() as i32;
        for a in k[0] - m..=k[0] + m {
            for b in k[1] - m..=k[1] + m {
                let lo = self.keys.partition_point(|q| *q < [a, b, k[2] - m, i32::MIN]);
                let hi = self.keys.partition_point(|q| *q <= [a, b, k[2] + m, i32::MAX]);
                for bucket in lo..hi {
                    if (self.keys[bucket][3] - k[3]).abs() > m {
                        continue;
                    }
                    let (s, e) = (self.starts[bucket] as usize, self.starts[bucket + 1] as usize);
                    for &i in &self.order[s..e] {
                        let d = dist4(&emb[i as usize], c);
                        if d <= r {
                            f(i as usize, d);
                        }
                    }
                }
            }
        }
    }
}

/// Sample points with Haar quadrature weights covering a region.
#[derive(Clone, Debug)]
pub struct Net {
    region: Region,
    spacing: f64,
    points: Vec<Mat2>,
    weights: Vec<f64>,
    emb: Vec<[f64; 4]>,
    index: PointIndex,
    op_bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetReport {
    pub points: usize,
    pub weight_sum: f64,
    pub volume: f64,
    /// Smallest sampled nearest-neighbour distance over `spacing`.
    pub separation: f64,
    /// Largest sampled distance from a region point to the net, over `spacing`.
    pub covering: f64,
}

impl Net {
    pub fn build(region: Region, delta_net: f64) -> Result<Net> {
        Self::build_capped(region, delta_net, DEFAULT_NET_CAP)
    }

    /// SU(2) uses an equal-mass Hopf grid on the full group and an
    /// exponential-chart lattice on balls; SL2(R) uses the chart lattice.
    /// Chart weights are `h^3` times the Haar density, rescaled to the
    /// region's volume.
    pub fn build_capped(region: Region, delta_net: f64, cap: usize) -> Result<Net> {
        region.validate()?;
        if !(delta_net > 0.0) {
            return Err(Error::invalid("net spacing must be positive"));
        }
        let kind = region.kind();
        let volume = region.volume();
        if delta_net >= region.diameter() {
            let pts = vec![Mat2::IDENTITY];
            return Self::from_points(region, delta_net, pts, vec![volume]);
        }
        let h = delta_net / SQRT_2;
        let estimate = 1.3 * volume / (h * h * h) + 64.0;
        if estimate > cap as f64 {
            return Err(Error::CapExceeded {
                what: "net points",
                needed: estimate as u128,
                cap: cap as u128,
            });
        }
        let (points, weights) = if region.is_full() {
            hopf_grid(h)
        } else {
            let bound = match region {
                Region::Su2Ball { radius } => 2.0 * (radius / FULL_SU2_RADIUS).min(1.0).asin(),
                Region::Sl2rBox { half_width } => half_width,
            };
            let m = (bound / h).floor() as i64;
            let mut pts = Vec::new();
            let mut w = Vec::new();
            for i in -m..=m {
                for j in -m..=m {
                    for k in -m..=m {
                        let x = [i as f64 * h, j as f64 * h, k as f64 * h];
                        let g = chart_exp(kind, x);
                        if region.contains(&g) {
                            pts.push(g);
                            w.push(haar_density(kind, x));
                        }
                    }
                }
            }
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v *= volume / s);
            (pts, w)
        };
        if points.len() > cap {
            return Err(Error::CapExceeded {
                what: "net points",
                needed: points.len() as u128,
                cap: cap as u128,
            });
        }
        Self::from_points(region, delta_net, points, weights)
    }

    /// Net from explicit points and masses.
    pub fn from_points(region: Region, spacing: f64, points: Vec<Mat2>, weights: Vec<f64>) -> Result<Net> {
        if points.is_empty() || points.len() != weights.len() || points.len() > u32::MAX as usize {
            return Err(Error::invalid("net needs matching nonempty points and weights"));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::invalid("net weights must be positive"));
        }
        let kind = region.kind();
        let emb: Vec<[f64; 4]> = points.iter().map(|m| embed(kind, m)).collect();
        let index = PointIndex::new(&emb, spacing);
        let op_bound = match kind {
            GroupKind::Su2 => 1.0,
            GroupKind::Sl2R => points.iter().map(op_norm).fold(1.0, f64::max),
        };
        Ok(Net {
            region,
            spacing,
            points,
            weights,
            emb,
            index,
            op_bound,
        })
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn kind(&self) -> GroupKind {
        self.region.kind()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn matrices(&self) -> &[Mat2] {
        &self.points
    }

    pub fn point(&self, i: usize) -> GroupElement {
        GroupElement::from_parts(self.kind(), self.points[i])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Largest operator norm of a net point (1 on SU(2)).
    pub fn op_bound(&self) -> f64 {
        self.op_bound
    }

    /// Calls `f(index, hs_distance)` for net points within HS distance `r` of `m`.
    pub fn within(&self, m: &Mat2, r: f64, f: impl FnMut(usize, f64)) {
        let c = embed(self.kind(), m);
        self.index.within(&self.emb, &c, r, f);
    }

    /// Closest net point within HS distance `r`, ties to the lower index.
    pub fn nearest(&self, m: &Mat2, r: f64) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        self.within(m, r, |i, d| {
            if best.map_or(true, |(j, e)| d < e || (d == e && i < j)) {
                best = Some((i, d));
            }
        });
        best
    }

    /// Smallest kernel radius the net resolves.
    pub fn min_delta(&self) -> f64 {
        2.0 * self.spacing
    }

    pub fn check_resolvable(&self, delta: f64) -> Result<()> {
        if delta + 1e-12 < self.min_delta() {
            return Err(Error::Unresolvable {
                delta,
                min_delta: self.min_delta(),
            });
        }
        Ok(())
    }

    /// Depth of point `i` below the region boundary.
    pub fn depth(&self, i: usize) -> f64 {
        self.region.depth(&self.points[i])
    }

    /// Weight total plus separation and covering ratios on `samples`
    /// random net points and Haar-random region points.
    pub fn report(&self, samples: usize, seed: u64) -> NetReport {
        let mut rng = rng::stream(seed, "net-report");
        let n = self.len();
        let mut separation = f64::INFINITY;
        let mut covering = 0.0f64;
        if n > 1 {
            for _ in 0..samples {
                let i = rng.gen_range(0..n);
                let mut best = f64::INFINITY;
                self.within(&self.points[i], 4.0 * self.spacing * self.op_bound, |j, d| {
                    if j != i {
                        best = best.min(d);
                    }
                });
                separation = separation.min(best / self.spacing);
            }
            for _ in 0..samples {
                let g = sample_region(&self.region, &mut rng);
                let d = self
                    .nearest(&g, 4.0 * self.spacing * self.op_bound)
                    .map_or(f64::INFINITY, |(_, d)| d);
                covering = covering.max(d / self.spacing);
            }
        }
        NetReport {
            points: n,
            weight_sum: self.total_weight(),
            volume: self.region.volume(),
            separation,
            covering,
        }
    }
}

/// Haar-random point of a region, by rejection in the chart.
pub fn sample_region(region: &Region, rng: &mut rng::LabRng) -> Mat2 {
    let kind = region.kind();
    if region.is_full() {
        let q: [f64; 4] = core::array::from_fn(|_| rng::normal(rng));
        let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
        return Mat2::su2(C64::new(q[0] / n, q[1] / n), C64::new(q[2] / n, q[3] / n));
    }
    let (bound, top) = match *region {
        Region::Su2Ball { radius } => (2.0 * (radius / FULL_SU2_RADIUS).min(1.0).asin(), 1.0),
        Region::Sl2rBox { half_width } => {
            let l = half_width;
            (l, haar_density(kind, [l, l, l]).max(1.0))
        }
    };
    loop {
        let x: [f64; 3] = core::array::from_fn(|_| rng.gen_range(-bound..=bound));
        let g = chart_exp(kind, x);
        if region.contains(&g) && rng.gen::<f64>() * top <= haar_density(kind, x) {
            return g;
        }
    }
}

/// Rows of constant `u = sin^2 eta`-mass in Hopf coordinates
/// `a = cos eta e^{i xi1}`, `b = sin eta e^{i xi2}`; every cell has Haar mass
/// `2 pi^2 / N`.
fn hopf_grid(h: f64) -> (Vec<Mat2>, Vec<f64>) {
    let rows = ((PI / 2.0) / h).round().max(1.0) as usize;
    let mut shape = Vec::with_capacity(rows);
    for k in 0..rows {
        let eta = (k as f64 + 0.5) * (PI / 2.0) / rows as f64;
        let n1 = ((2.0 * PI * eta.cos()) / h).round().max(1.0) as usize;
        let n2 = ((2.0 * PI * eta.sin()) / h).round().max(1.0) as usize;
        shape.push((n1, n2));
    }
    let total: usize = shape.iter().map(|(a, b)| a * b).sum();
    let mut points = Vec::with_capacity(total);
    let mut u0 = 0.0;
    for &(n1, n2) in &shape {
        let du = (n1 * n2) as f64 / total as f64;
        let eta = (u0 + 0.5 * du).sqrt().asin();
        u0 += du;
        let (ce, se) = (eta.cos(), eta.sin());
        for c1 in 0..n1 {
            let x1 = 2.0 * PI * (c1 as f64 + 0.5) / n1 as f64;
            for c2 in 0..n2 {
                let x2 = 2.0 * PI * (c2 as f64 + 0.5) / n2 as f64;
                points.push(Mat2::su2(
                    C64::new(ce * x1.cos(), ce * x1.sin()),
                    C64::new(se * x2.cos(), se * x2.sin()),
                ));
            }
        }
    }
    let w = 2.0 * PI * PI / total as f64;
    (points, vec![w; total])
}
