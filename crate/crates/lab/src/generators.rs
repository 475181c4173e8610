//! Generator sets from presets or TOML files.
//!
//! File format:
//!
//! ```toml
//! freeness = "assumed"          # certified | assumed | unknown
//! [[generator]]
//! su2 = [0.6, 0.0, 0.0, 0.8]    # Re a, Im a, Re b, Im b of [[a, b], [-conj b, conj a]]
//! [[generator]]
//! sl2r = [1.0, 0.5, 0.0, 1.0]   # a, b, c, d
//! [[generator]]
//! exact = [1, 2, 0, 1]          # integer SL2(Z) entries, kept exact
//! ```

use std::path::Path;

use gaplab_core::group_core::{presets, Freeness, GeneratorSet, GroupElement, RationalMat2, C64};
use serde::Deserialize;

use crate::config::{ExperimentConfig, Group};
use crate::{LabError, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneratorFile {
    freeness: Option<String>,
    generator: Vec<Entry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    su2: Option<[f64; 4]>,
    sl2r: Option<[f64; 4]>,
    exact: Option<[i64; 4]>,
}

pub fn load(cfg: &ExperimentConfig, base_dir: &Path) -> Result<GeneratorSet> {
    let spec = &cfg.generators;
    if let Some(p) = &spec.preset {
        let s = spec.scale.unwrap_or(0.0);
        return Ok(match p.as_str() {
            "lps_p5" => presets::lps_p5()?,
            "sanov" => presets::sanov()?,
            "sanov_scaled" => presets::sanov_scaled(s)?,
            "sanov_local" => presets::sanov_local(s)?,
            "free_rotations" => presets::free_rotations()?,
            other => return Err(LabError::Config(format!("unknown preset {other:?}"))),
        });
    }
    let path = base_dir.join(spec.file.as_ref().expect("validated"));
    let text = std::fs::read_to_string(&path).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
    parse(&text, cfg.group).map_err(|e| match e {
        LabError::Config(m) => LabError::Config(format!("{}: {m}", path.display())),
        e => e,
    })
}

pub fn parse(text: &str, group: Group) -> Result<GeneratorSet> {
    let f: GeneratorFile = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
    let mut out = Vec::with_capacity(f.generator.len());
    for (i, e) in f.generator.iter().enumerate() {
        let g = match (e.su2, e.sl2r, e.exact, group) {
            (Some(v), None, None, Group::SU2) => GroupElement::su2(C64::new(v[0], v[1]), C64::new(v[2], v[3]))?,
            (None, Some(v), None, Group::SL2R) => GroupElement::sl2r(v[0], v[1], v[2], v[3])?,
            (None, None, Some(v), Group::SL2R) => GroupElement::sl2q(RationalMat2::from_ints(v[0], v[1], v[2], v[3]))?,
            _ => {
                return Err(LabError::Config(format!(
                    "generator {i}: give exactly one of su2, sl2r, exact matching group {group:?}"
                )))
            }
        };
        out.push(g);
    }
    let freeness = match f.freeness.as_deref() {
        None | Some("unknown") => Freeness::Unknown,
        Some("assumed") => Freeness::Assumed,
        Some("certified") => {
            return Err(LabError::Config(
                "freeness \"certified\" is granted only by the ping-pong certifier".into(),
            ))
        }
        Some(other) => return Err(LabError::Config(format!("unknown freeness {other:?}"))),
    };
    Ok(GeneratorSet::new(out)?.with_freeness(freeness))
}
