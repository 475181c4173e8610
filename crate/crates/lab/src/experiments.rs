//! One runner per experiment kind. Each returns its tables; independent grid
//! cells run on the worker pool and are collected in grid order.

use std::path::{Path, PathBuf};
use std::time::Instant;

use gaplab_core::discrete_l2::{
    ao_table, cotlar_stein_probe, dyadic_decompose, flattening_curve, littlewood_paley_check, mixing_probe,
    op_measure, random_unit, smoothed_density, LittlewoodPaley, Net, PairNorms, Region,
};
use gaplab_core::escape::{build_t, escape_curve, fit_exponent, verify_claim1, EscapeConfig, EscapeSet};
use gaplab_core::gap_lab::{
    delayed_walk_operator, expansion_test, local_gap_estimate, restricted_gap, walk_gap, ExpansionConfig,
};
use gaplab_core::group_core::{GeneratorSet, GroupElement};
use gaplab_core::linalg::{Composed, LinearOp};
use gaplab_core::measures::{AtomicMeasure, KeyMode, MeasureCaps, SubgroupFamily, SubgroupSpec, DEFAULT_RESOLUTION};
use gaplab_core::projective::{certify_free, CertifyOptions, IntervalNet};
use gaplab_core::measures::kesten_radius;
use gaplab_core::spectra::{averaging_spectrum, exceptional_count, second_gap_census, EXCEPTIONAL_TOL};
use rayon::prelude::*;

use crate::cache::NetCache;
use crate::config::{EscapeSection, Experiment, ExperimentConfig, LoadedConfig, RegionKind};
use crate::output::{num, opt, write_outputs, RunOptions, RunSummary, Table};
use crate::{generators, LabError, Result};

/// Everything an experiment reads besides its own parameters.
pub struct Context<'a> {
    pub cfg: &'a ExperimentConfig,
    pub seed: u64,
    pub base_dir: PathBuf,
    cache: Option<NetCache>,
}

impl<'a> Context<'a> {
    pub fn new(cfg: &'a ExperimentConfig, seed: u64, base_dir: &Path) -> Result<Self> {
        let cache = match &cfg.cache {
            Some(d) => Some(NetCache::open(&base_dir.join(d))?),
            None => None,
        };
        Ok(Context {
            cfg,
            seed,
            base_dir: base_dir.to_path_buf(),
            cache,
        })
    }

    fn caps(&self) -> MeasureCaps {
        MeasureCaps {
            atoms: self.cfg.caps.atoms,
            pairs: self.cfg.caps.pairs,
        }
    }

    fn generators(&self) -> Result<GeneratorSet> {
        generators::load(self.cfg, &self.base_dir)
    }

    fn region(&self) -> Region {
        let n = self.cfg.net.as_ref().expect("validated");
        match n.region {
            RegionKind::FullSu2 => Region::full_su2(),
            RegionKind::Su2Ball => Region::Su2Ball {
                radius: n.size.expect("validated"),
            },
            RegionKind::Sl2rBox => Region::Sl2rBox {
                half_width: n.size.expect("validated"),
            },
        }
    }

    fn delta_nets(&self) -> Vec<f64> {
        self.cfg.net.as_ref().map(|n| n.delta_net.clone()).unwrap_or_default()
    }

    fn net(&self, delta_net: f64) -> Result<Net> {
        let cap = self.cfg.caps.net_cells;
        match &self.cache {
            Some(c) => c.get(self.region(), delta_net, cap),
            None => Ok(Net::build_capped(self.region(), delta_net, cap)?),
        }
    }

    fn escape_set(&self, sec: &EscapeSection, bucket: Option<f64>) -> Result<EscapeSet> {
        let mut c = EscapeConfig::new(self.generators()?, sec.ell, sec.eta);
        c.bucket_resolution = bucket.or(sec.bucket_resolution);
        c.seed = self.seed;
        if let Some(a) = sec.a {
            c.a = a;
        }
        if let Some(b) = sec.b {
            c.b = b;
        }
        if let Some(w) = sec.word_cap {
            c.word_cap = w;
        }
        c.max_size = sec.max_size;
        Ok(build_t(&c)?)
    }

    /// `T` when an `[escape]` section is present, else the configured generators.
    fn working_set(&self) -> Result<GeneratorSet> {
        match &self.cfg.escape {
            Some(sec) => Ok(self.escape_set(sec, None)?.t),
            None => self.generators(),
        }
    }

    /// Uniform measure on the working set and its inverses, raised to `power`.
    fn measure(&self) -> Result<AtomicMeasure> {
        let set = self.working_set()?;
        let mu = AtomicMeasure::symmetrize(&set, key_mode(self.cfg, &set))?;
        match self.cfg.params.power {
            1 => Ok(mu),
            p => Ok(mu.power(p, &self.caps())?),
        }
    }

    fn moves(&self) -> Result<Vec<GroupElement>> {
        let set = self.working_set()?;
        Ok(if self.cfg.params.symmetric {
            set.symmetric_closure()
        } else {
            set.elements().to_vec()
        })
    }
}

/// Labels for escape sets, words for trusted free sets, exact entries when
/// every element has them, quantized entries otherwise.
fn key_mode(cfg: &ExperimentConfig, set: &GeneratorSet) -> KeyMode {
    if cfg.escape.is_some() {
        KeyMode::Label
    } else if set.freeness().trusted() {
        KeyMode::Word
    } else if set.elements().iter().all(|g| g.exact().is_some()) {
        KeyMode::ExactMatrix
    } else {
        KeyMode::Quantized {
            resolution: DEFAULT_RESOLUTION,
        }
    }
}

/// Runs `f` on every grid cell on the current pool, keeping order.
fn grid<I, T, F>(items: Vec<I>, f: F) -> Result<Vec<T>>
where
    I: Send,
    T: Send,
    F: Fn(I) -> Result<T> + Sync + Send,
{
    items.into_par_iter().map(f).collect()
}

pub fn run_experiment(ctx: &Context<'_>) -> Result<Vec<Table>> {
    match ctx.cfg.experiment {
        Experiment::Spectrum => spectrum(ctx),
        Experiment::Census => census(ctx),
        Experiment::Escape => escape(ctx),
        Experiment::Flatten => flatten(ctx),
        Experiment::Lp => lp(ctx),
        Experiment::Dyadic => dyadic(ctx),
        Experiment::Mixing => mixing(ctx),
        Experiment::Gap => gap(ctx),
        Experiment::Walk => walk(ctx),
        Experiment::Expand => expand(ctx),
        Experiment::Pingpong => pingpong(ctx),
    }
}

/// Computes the tables of a loaded config without writing anything.
pub fn compute(loaded: &LoadedConfig, seed: u64, threads: usize) -> Result<Vec<Table>> {
    let base = config_dir(&loaded.path);
    let ctx = Context::new(&loaded.config, seed, &base)?;
    pool(threads)?.install(|| run_experiment(&ctx))
}

pub fn run(loaded: &LoadedConfig, opts: &RunOptions) -> Result<RunSummary> {
    let start = Instant::now();
    let seed = opts.seed.unwrap_or(loaded.config.seed);
    let threads = opts.threads.unwrap_or_else(rayon::current_num_threads);
    let tables = compute(loaded, seed, threads)?;
    let base = config_dir(&loaded.path);
    let out = match (&opts.out, &loaded.config.output) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => base.join(o),
        (None, None) => {
            let stem = loaded.path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            base.join("out").join(stem)
        }
    };
    write_outputs(loaded, seed, threads, &out, &tables, start.elapsed().as_secs_f64())
}

fn config_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| LabError::Config(format!("thread pool: {e}")))
}

fn spectrum(ctx: &Context<'_>) -> Result<Vec<Table>> {
    let set = ctx.working_set()?;
    let mu = AtomicMeasure::symmetrize(&set, key_mode(ctx.cfg, &set))?;
    let k = set.len();
    let spectra = grid((0..=ctx.cfg.params.n_max).collect(), |n| Ok(averaging_spectrum(&mu, n)?))?;
    let mut eig = Table::new("spectrum", &["n", "eig_index", "eigenvalue"]);
    let mut exc = Table::new("exceptional", &["n", "k", "kesten_radius", "exceptional_count"]);
    for (n, s) in spectra.iter().enumerate() {
        for (i, l) in s.iter().enumerate() {
            eig.push(vec![n.to_string(), i.to_string(), num(*l)]);
        }
        exc.push(vec![
            n.to_string(),
            k.to_string(),
            num(kesten_radius(k)),
            exceptional_count(s, k, EXCEPTIONAL_TOL).to_string(),
        ]);
    }
    Ok(vec![eig, exc])
}

fn census(ctx: &Context<'_>) -> Result<Vec<Table>> {
    let sec = ctx.cfg.escape.as_ref().expect("validated");
    let n_max = ctx.cfg.params.n_max;
    let runs = grid(ctx.cfg.params.eps.clone(), |eps| {
        let set = ctx.escape_set(sec, Some(eps / 2.0))?;
        let rows = second_gap_census(&set.t, n_max)?;
        Ok((eps, set, rows))
    })?;
    let mut census = Table::new("census", &["eps", "n", "count_in_half_one", "cumulative"]);
    let mut sets = Table::new(
        "t_sets",
        &["eps", "size", "full_size", "eps_measured", "eps_nominal", "bucket_resolution"],
    );
    for (eps, set, rows) in &runs {
        for r in rows {
            census.push(vec![num(*eps), r.n.to_string(), r.count.to_string(), r.cumulative.to_string()]);
        }
        sets.push(vec![
            num(*eps),
            set.t.len().to_string(),
            set.full_size.to_string(),
            num(set.eps_measured),
            num(set.eps_nominal),
            num(set.resolution),
        ]);
    }
    Ok(vec![census, sets])
}

fn escape(ctx: &Context<'_>) -> Result<Vec<Table>> {
    let sec = ctx.cfg.escape.as_ref().expect("validated");
    let set = ctx.escape_set(sec, None)?;
    let subgroups: Vec<SubgroupSpec> = sec
        .subgroups
        .iter()
        .map(|s| SubgroupSpec::new(SubgroupFamily::parse(s).expect("validated")))
        .collect();
    let n_max = sec.n_max.expect("validated");
    let rows = escape_curve(&set.t, &subgroups, &sec.deltas, n_max, KeyMode::Label, &ctx.caps())?;
    let mut out = Table::new("escape", &["n", "delta", "subgroup", "mass", "fitted_exponent"]);
    for (i, r) in rows.iter().enumerate() {
        let last_of_subgroup = r.n == n_max && !rows[i + 1..].iter().any(|o| o.subgroup == r.subgroup);
        let fit = if last_of_subgroup {
            let pts: Vec<(f64, f64)> =
                rows.iter().filter(|o| o.n == n_max && o.subgroup == r.subgroup).map(|o| (o.delta, o.mass)).collect();
            opt(fit_exponent(&pts))
        } else {
            String::new()
        };
        out.push(vec![r.n.to_string(), num(r.delta), r.subgroup.clone(), num(r.mass), fit]);
    }
    let mut tset = Table::new("t_set", &["index", "word", "distance_to_identity"]);
    for (i, g) in set.t.elements().iter().enumerate() {
        let w = g.word().map(|w| w.to_compact()).unwrap_or_default();
        tset.push(vec![i.to_string(), w, num(g.norm_to_identity())]);
    }
    let mut tables = vec![out, tset];
    if let Some(nc) = sec.claim1_n {
        let reports = grid((1..=nc).collect(), |n| Ok((n, verify_claim1(&set.t, sec.ell, n, ctx.cfg.caps.words)?)))?;
        let mut c1 = Table::new("claim1", &["n", "checked", "min_len", "max_len", "lower", "upper", "violations"]);
        for (n, r) in &reports {
            let len = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
            c1.push(vec![
                n.to_string(),
                r.checked.to_string(),
                len(r.min_len),
                len(r.max_len),
                (n * sec.ell).to_string(),
                (6 * n * sec.ell).to_string(),
                r.violations.len().to_string(),
            ]);
        }
        tables.push(c1);
    }
    Ok(tables)
}

fn flatten(ctx: &Context<'_>) -> Result<Vec<Table>> {
    let mu = ctx.measure()?;
    let net = ctx.net(ctx.delta_nets()[0])?;
    let n_max = ctx.cfg.params.n_max;
    let curves = grid(ctx.cfg.params.delta_grid(), |d| Ok(flattening_curve(&mu, &net, d, n_max, &ctx.caps())?))?;
    let mut t = Table::new("flatten", &["n", "delta", "l2_norm"]);
    let mut fit = Table::new("flatten_fit", &["delta", "decay_rate", "monotone"]);
    for c in &curves {
        for (n, v) in &c.rows {
            t.push(vec![n.to_string(), num(c.delta), num(*v)]);
        }
        fit.push(vec![num(c.delta), opt(c.decay_rate), c.monotone.to_string()]);
    }
    Ok(vec![t, fit])
}

fn lp(ctx: &Context<'_>) -> Result<Vec<Table>> {
    let mu = ctx.measure()?;
    let net = ctx.net(ctx.delta_nets()[0])?;
    let p = &ctx.cfg.params;
    let lp = LittlewoodPaley::new(&net, p.i_max)?;
    let t = op_measure(&mu, &net)?;
    let tab = ao_table(&lp, &t, ctx.seed)?;
    let scaled = tab.scaled();
    let mut out = Table::new("lp", &["i", "j", "norm", "scaled_norm", "companion"]);
    for (i, row) in tab.norms.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            out.push(vec![i.to_string(), j.to_string(), num(*v), num(scaled[i][j]), num(tab.companion[i][j])]);
        }
    }
    let check = littlewood_paley_check(&lp, &t, p.trials, ctx.seed)?;
    let views: Vec<_> = (0..=p.i_max).map(|i| lp.view(i)).collect();
    let family: Vec<Composed> = views.iter().map(|v| Composed::new(vec![&t as &dyn LinearOp, v])).collect();
    let ops: Vec<&dyn LinearOp> = family.iter().map(|o| o as &dyn LinearOp).collect();
    let norms = PairNorms::from(&tab);
    let phi = tab.phi();
    let mut summary = Table::new("lp_summary", &["quantity", "value"]);
    let mut put = |k: &str, v: String| summary.push(vec![k.into(), v]);
    put("cells", net.len().to_string());
    put("ao_c0", num(tab.c0()));
    put("ao_c_hat", num(tab.c_hat()));
    put("square_function_upper", num(check.worst[0]));
    put("square_function_lower", num(check.worst[1]));
    put("mu_weighted_upper", num(check.worst[2]));
    put("lp_c_hat", num(check.c_hat));
    put("telescoping_defect", num(lp.telescoping_defect(p.i_max)?));
    for k in 0..=p.i_max {
        let r = cotlar_stein_probe(&ops, net.weights(), &norms, &phi, k, p.trials, ctx.seed)?;
        put(&format!("cotlar_tail_ratio_k{k}"), num(r.tail_ratio));
        put(&format!("cotlar_sum_ratio_k{k}"), num(r.sum_ratio));
        put(&format!("cotlar_holds_k{k}"), r.holds.to_string());
    }
    Ok(vec![out, summary])
}

fn dyadic(ctx: &Context<'_>) -> Result<Vec<Table>> {
    let mu = ctx.measure()?;
    let delta = ctx.cfg.params.delta;
    let runs = grid(ctx.delta_nets(), |dn| {
        let net = ctx.net(dn)?;
        Ok((dn, net.len(), dyadic_decompose(&mu, &net, delta)?))
    })?;
    let mut t = Table::new(
        "dyadic",
        &[
            "delta_net",
            "cells",
            "delta",
            "nonempty_levels",
            "level_bound",
            "log_constant",
            "multiplicity",
            "lower_constant",
            "upper_constant",
            "sandwich_constant",
        ],
    );
    let mut levels = Table::new("dyadic_levels", &["delta_net", "level", "cells"]);
    for (dn, cells, d) in &runs {
        let r = &d.report;
        t.push(vec![
            num(*dn),
            cells.to_string(),
            num(delta),
            r.nonempty_levels.to_string(),
            r.level_bound.to_string(),
            num(r.log_constant),
            r.multiplicity.to_string(),
            num(r.lower_constant),
            num(r.upper_constant),
            num(r.sandwich_constant()),
        ]);
        for (i, c) in &d.levels {
            levels.push(vec![num(*dn), i.to_string(), c.len().to_string()]);
        }
    }
    Ok(vec![t, levels])
}

fn mixing(ctx: &Context<'_>) -> Result<Vec<Table>> {
    let mu = ctx.measure()?;
    let net = ctx.net(ctx.delta_nets()[0])?;
    let p = &ctx.cfg.params;
    let mut cells = Vec::new();
    for &d in &p.delta_grid() {
        for trial in 0..p.trials {
            cells.push((d, trial));
        }
    }
    // F families: white noise, and the smoothed measure itself at the probe scale.
    let samples = grid(cells, |(d, trial)| {
        let f = smoothed_density(&mu, &net, d)?;
        let noise = random_unit(&net, ctx.seed, &format!("mixing-{trial}"));
        let a = mixing_probe(&net, &f, &noise, d)?;
        let b = if trial == 0 { Some(mixing_probe(&net, &f, &f, d)?) } else { None };
        Ok((d, trial, a, b))
    })?;
    let mut t = Table::new("mixing", &["delta", "family", "trial", "lhs", "conv_norm", "p_norm"]);
    let mut env: Vec<(f64, f64, f64)> = Vec::new();
    for (d, trial, a, b) in &samples {
        let rows = std::iter::once(("noise", a)).chain(b.iter().map(|s| ("self", s)));
        for (family, s) in rows {
            t.push(vec![num(*d), family.into(), trial.to_string(), num(s.lhs), num(s.conv_norm), num(s.p_norm)]);
            match env.last_mut() {
                Some(e) if e.0 == *d => {
                    e.1 = e.1.max(s.conv_norm);
                    e.2 = e.2.max(s.p_norm);
                }
                _ => env.push((*d, s.conv_norm, s.p_norm)),
            }
        }
    }
    let pts: Vec<(f64, f64)> = env.iter().map(|e| (e.0, e.1)).collect();
    let mut fit = Table::new("mixing_fit", &["delta", "max_conv_norm", "max_p_norm", "envelope_exponent"]);
    for (i, (d, c, pn)) in env.iter().enumerate() {
        let last = if i + 1 == env.len() { opt(fit_exponent(&pts)) } else { String::new() };
        fit.push(vec![num(*d), num(*c), num(*pn), last]);
    }
    Ok(vec![t, fit])
}

fn gap(ctx: &Context<'_>) -> Result<Vec<Table>> {
    let p = &ctx.cfg.params;
    let header = ["experiment_id", "region", "delta_net", "cells", "kappa_hat", "dim_v", "residual", "min_q", "no_gap"];
    let mut t = Table::new("gap", &header);
    let id = format!("gap_{}", p.mode);
    if p.mode == "local" {
        let moves = ctx.moves()?;
        let rows = grid(ctx.delta_nets(), |dn| {
            let net = ctx.net(dn)?;
            Ok((dn, net.len(), net.region().descriptor(), local_gap_estimate(&moves, &net, ctx.seed)?))
        })?;
        for (dn, cells, region, r) in rows {
            t.push(vec![
                id.clone(),
                region,
                num(dn),
                cells.to_string(),
                num(r.kappa_hat),
                String::new(),
                num(r.residual),
                num(r.min_q),
                r.no_gap.to_string(),
            ]);
        }
    } else {
        let mu = ctx.measure()?;
        let rows = grid(ctx.delta_nets(), |dn| {
            let net = ctx.net(dn)?;
            Ok((dn, net.len(), net.region().descriptor(), restricted_gap(&mu, &net, p.r, ctx.seed)?))
        })?;
        for (dn, cells, region, r) in rows {
            t.push(vec![
                id.clone(),
                region,
                num(dn),
                cells.to_string(),
                String::new(),
                r.dim_v.to_string(),
                num(r.residual),
                String::new(),
                r.degenerate.to_string(),
            ]);
        }
    }
    Ok(vec![t])
}

fn walk(ctx: &Context<'_>) -> Result<Vec<Table>> {
    let moves = ctx.moves()?;
    let rows = grid(ctx.delta_nets(), |dn| {
        let net = ctx.net(dn)?;
        let w = delayed_walk_operator(&moves, &net)?;
        let g = walk_gap(&w, ctx.seed)?;
        Ok((dn, net.len(), w.k, w.disjoint, g))
    })?;
    let mut t = Table::new(
        "walk",
        &["delta_net", "cells", "k", "disjoint", "top", "gap", "spectrum_min", "spectrum_max", "band_lo", "no_gap"],
    );
    for (dn, cells, k, disjoint, g) in rows {
        let band_lo = if disjoint > 0 { -1.0 + 2.0 / k as f64 } else { -1.0 };
        t.push(vec![
            num(dn),
            cells.to_string(),
            k.to_string(),
            disjoint.to_string(),
            num(g.top),
            num(g.gap),
            num(g.spectrum_min),
            num(g.spectrum_max),
            num(band_lo),
            g.no_gap.to_string(),
        ]);
    }
    Ok(vec![t])
}

fn expand(ctx: &Context<'_>) -> Result<Vec<Table>> {
    let p = &ctx.cfg.params;
    let moves = ctx.moves()?;
    let net = IntervalNet::new(p.lo, p.hi, p.cells)?;
    let cfg = ExpansionConfig {
        trials: p.trials,
        adversarial_rounds: p.rounds,
        candidates: p.candidates,
        seed: ctx.seed,
        ..ExpansionConfig::default()
    };
    let rep = expansion_test(&moves, &net, &cfg)?;
    let mut t = Table::new("expand", &["trial", "size", "image_measure", "ratio"]);
    for r in &rep.rows {
        t.push(vec![r.trial.to_string(), r.size.to_string(), num(r.image_measure), num(r.ratio)]);
    }
    let mut s = Table::new("expand_summary", &["quantity", "value"]);
    s.push(vec!["kappa_hat".into(), num(rep.kappa_hat)]);
    s.push(vec!["worst_size".into(), rep.worst.len().to_string()]);
    s.push(vec!["monotone_tested".into(), rep.monotone.tested.to_string()]);
    s.push(vec!["monotone_failures".into(), rep.monotone.failures.len().to_string()]);
    Ok(vec![t, s])
}

fn pingpong(ctx: &Context<'_>) -> Result<Vec<Table>> {
    let p = &ctx.cfg.params;
    let mut gens = ctx.generators()?;
    let opts = CertifyOptions {
        budget: p.budget,
        height: p.height,
        ..CertifyOptions::default()
    };
    let cert = certify_free(&mut gens, &opts)?;
    let mut t = Table::new("pingpong", &["letter", "set", "arc", "lo", "hi", "lo_closed", "hi_closed", "exact"]);
    for (letter, (ks, us)) in cert.k.iter().zip(&cert.u).enumerate() {
        for (name, arcs) in [("K", ks), ("U", us)] {
            for (i, a) in arcs.iter().enumerate() {
                t.push(vec![
                    letter.to_string(),
                    name.into(),
                    i.to_string(),
                    num(a.lo),
                    num(a.hi),
                    a.lo_closed.to_string(),
                    a.hi_closed.to_string(),
                    a.exact.is_some().to_string(),
                ]);
            }
        }
    }
    let mut s = Table::new("pingpong_summary", &["quantity", "value"]);
    s.push(vec!["certified".into(), "true".into()]);
    s.push(vec!["exact".into(), cert.exact.to_string()]);
    s.push(vec!["margin".into(), num(cert.margin)]);
    s.push(vec!["explored".into(), cert.explored.to_string()]);
    Ok(vec![t, s])
}
