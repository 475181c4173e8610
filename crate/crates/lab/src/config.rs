//! TOML experiment configs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::LabError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Spectrum,
    Census,
    Flatten,
    Escape,
    Walk,
    Expand,
    Pingpong,
    Gap,
    Lp,
    Dyadic,
    Mixing,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Spectrum => "spectrum",
            Experiment::Census => "census",
            Experiment::Flatten => "flatten",
            Experiment::Escape => "escape",
            Experiment::Walk => "walk",
            Experiment::Expand => "expand",
            Experiment::Pingpong => "pingpong",
            Experiment::Gap => "gap",
            Experiment::Lp => "lp",
            Experiment::Dyadic => "dyadic",
            Experiment::Mixing => "mixing",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Group {
    SU2,
    SL2R,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    /// lps_p5, sanov, sanov_scaled, sanov_local, free_rotations.
    pub preset: Option<String>,
    /// TOML file with `[[generator]]` tables, relative to the config.
    pub file: Option<PathBuf>,
    /// Parameter of the scaled presets.
    pub scale: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Caps {
    pub atoms: usize,
    pub pairs: u128,
    pub net_cells: usize,
    pub words: u128,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            atoms: 10_000_000,
            pairs: 500_000_000,
            net_cells: gaplab_core::discrete_l2::DEFAULT_NET_CAP,
            words: 100_000_000,
        }
    }
}

/// Builds `T` from the generators as base.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EscapeSection {
    pub ell: usize,
    pub eta: f64,
    pub bucket_resolution: Option<f64>,
    #[serde(default)]
    pub a: Option<usize>,
    #[serde(default)]
    pub b: Option<usize>,
    pub word_cap: Option<usize>,
    pub max_size: Option<usize>,
    /// Escape experiment: subgroup families, neighbourhood radii and `n_max`.
    #[serde(default)]
    pub subgroups: Vec<String>,
    #[serde(default)]
    pub deltas: Vec<f64>,
    pub n_max: Option<usize>,
    /// Claim 1 check up to this word length over `T`.
    pub claim1_n: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    FullSu2,
    Su2Ball,
    Sl2rBox,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetSection {
    pub region: RegionKind,
    /// Ball radius or box half-width.
    pub size: Option<f64>,
    /// One net per entry; grid experiments run each.
    pub delta_net: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    /// Spectrum and census degree bound.
    pub n_max: usize,
    /// Census radius grid; each entry builds `T` with bucket side `eps / 2`.
    pub eps: Vec<f64>,
    pub delta: f64,
    /// Scale grid for flatten and mixing; `[delta]` when empty.
    pub deltas: Vec<f64>,
    /// Convolution power of the measure for dyadic and mixing runs.
    pub power: usize,
    pub i_max: usize,
    pub trials: usize,
    pub rounds: usize,
    pub candidates: usize,
    pub cells: usize,
    pub lo: f64,
    pub hi: f64,
    /// Gap experiment: "local" or "restricted".
    pub mode: String,
    pub r: f64,
    /// Use `S u S^-1` where a list of group elements is consumed.
    pub symmetric: bool,
    pub budget: usize,
    pub height: i128,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            n_max: 20,
            eps: Vec::new(),
            delta: 0.1,
            deltas: Vec::new(),
            power: 1,
            i_max: 5,
            trials: 8,
            rounds: 200,
            candidates: 24,
            cells: 4096,
            lo: 0.0,
            hi: 1.0,
            mode: "local".into(),
            r: 0.5,
            symmetric: true,
            budget: 2_000_000,
            height: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub group: Group,
    pub seed: u64,
    pub output: Option<PathBuf>,
    /// Net cache directory; off when absent.
    pub cache: Option<PathBuf>,
    pub generators: GeneratorSpec,
    #[serde(default)]
    pub caps: Caps,
    pub escape: Option<EscapeSection>,
    pub net: Option<NetSection>,
    #[serde(default)]
    pub params: Params,
}

#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub path: PathBuf,
    /// SHA-256 of the file bytes.
    pub hash: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn load(path: &Path) -> Result<LoadedConfig, LabError> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
    let config = parse(&text).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
    Ok(LoadedConfig {
        config,
        path: path.to_path_buf(),
        hash: sha256_hex(text.as_bytes()),
    })
}

pub fn parse(text: &str) -> Result<ExperimentConfig, String> {
    let c: ExperimentConfig = toml::from_str(text).map_err(|e| e.to_string())?;
    c.validate()?;
    Ok(c)
}

impl Params {
    pub fn delta_grid(&self) -> Vec<f64> {
        if self.deltas.is_empty() {
            vec![self.delta]
        } else {
            self.deltas.clone()
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), String> {
        let caps = &self.caps;
        if caps.atoms == 0 || caps.pairs == 0 || caps.net_cells == 0 || caps.words == 0 {
            return Err("all caps must be positive".into());
        }
        let g = &self.generators;
        match (&g.preset, &g.file) {
            (Some(_), Some(_)) => return Err("generators: give either preset or file, not both".into()),
            (None, None) => return Err("generators: preset or file required".into()),
            _ => {}
        }
        if let Some(p) = &g.preset {
            let kind = match p.as_str() {
                "lps_p5" | "free_rotations" => Group::SU2,
                "sanov" | "sanov_scaled" | "sanov_local" => Group::SL2R,
                other => return Err(format!("generators: unknown preset {other:?}")),
            };
            if kind != self.group {
                return Err(format!("generators: preset {p:?} does not live in {:?}", self.group));
            }
            if p.starts_with("sanov_") && g.scale.is_none() {
                return Err(format!("generators: preset {p:?} needs scale"));
            }
        }
        let p = &self.params;
        let need_net = matches!(
            self.experiment,
            Experiment::Flatten | Experiment::Walk | Experiment::Gap | Experiment::Lp | Experiment::Dyadic | Experiment::Mixing
        );
        match &self.net {
            Some(n) => {
                if n.delta_net.is_empty() || n.delta_net.iter().any(|d| !(*d > 0.0)) {
                    return Err("net: delta_net must be a nonempty list of positive values".into());
                }
                let kind = match n.region {
                    RegionKind::FullSu2 | RegionKind::Su2Ball => Group::SU2,
                    RegionKind::Sl2rBox => Group::SL2R,
                };
                if kind != self.group {
                    return Err("net: region does not live in the configured group".into());
                }
                if n.region != RegionKind::FullSu2 && !n.size.is_some_and(|s| s > 0.0) {
                    return Err("net: size must be positive".into());
                }
            }
            None if need_net => return Err(format!("{}: [net] section required", self.experiment.name())),
            None => {}
        }
        match self.experiment {
            Experiment::Census => {
                if self.group != Group::SU2 {
                    return Err("census: irreducible representations need group SU2".into());
                }
                if self.escape.is_none() {
                    return Err("census: [escape] section required".into());
                }
                if p.eps.is_empty() || p.eps.iter().any(|e| !(*e > 0.0)) {
                    return Err("census: params.eps must be a nonempty list of positive radii".into());
                }
            }
            Experiment::Escape => {
                let e = self.escape.as_ref().ok_or("escape: [escape] section required")?;
                if e.subgroups.is_empty() || e.deltas.is_empty() || e.n_max.is_none() {
                    return Err("escape: subgroups, deltas and n_max required".into());
                }
                for s in &e.subgroups {
                    if gaplab_core::measures::SubgroupFamily::parse(s).is_none() {
                        return Err(format!("escape: unknown subgroup {s:?}"));
                    }
                }
            }
            Experiment::Expand => {
                if self.group != Group::SL2R {
                    return Err("expand: runs on the projective line, group must be SL2R".into());
                }
                if p.cells < 2 || !(p.hi > p.lo) {
                    return Err("expand: need cells >= 2 and hi > lo".into());
                }
            }
            Experiment::Gap => {
                if p.mode != "local" && p.mode != "restricted" {
                    return Err(format!("gap: unknown mode {:?}", p.mode));
                }
                if p.mode == "restricted" && !(p.r > 0.0 && p.r < 1.0) {
                    return Err("gap: r must lie in (0, 1)".into());
                }
            }
            Experiment::Pingpong => {
                if self.group != Group::SL2R {
                    return Err("pingpong: group must be SL2R".into());
                }
            }
            Experiment::Lp | Experiment::Flatten | Experiment::Dyadic | Experiment::Mixing => {
                if !(p.delta > 0.0) || p.deltas.iter().any(|d| !(*d > 0.0)) {
                    return Err("params.delta and params.deltas must be positive".into());
                }
                if matches!(self.experiment, Experiment::Lp | Experiment::Flatten)
                    && self.net.as_ref().is_some_and(|n| n.delta_net.len() != 1)
                {
                    return Err(format!("{}: exactly one net.delta_net expected", self.experiment.name()));
                }
                if p.power == 0 {
                    return Err("params.power must be at least 1".into());
                }
            }
            Experiment::Spectrum => {
                if self.group != Group::SU2 {
                    return Err("spectrum: irreducible representations need group SU2".into());
                }
            }
            Experiment::Walk => {}
        }
        if p.trials == 0 {
            return Err("params.trials must be positive".into());
        }
        Ok(())
    }
}
