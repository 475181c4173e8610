//! Binary net cache keyed by `(region, delta_net)`.
//!
//! Each entry is `<key>.net`: the magic `GLNET1\n`, a little-endian `u64`
//! point count, then per point the eight matrix coordinates and the weight as
//! `f64`. `index.json` maps keys to region descriptors, spacings and sizes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use gaplab_core::discrete_l2::{Net, Region};
use gaplab_core::group_core::{Mat2, C64};
use serde::{Deserialize, Serialize};

use crate::config::sha256_hex;
use crate::{LabError, Result};

const MAGIC: &[u8] = b"GLNET1\n";

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
struct Index {
    nets: BTreeMap<String, Entry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Entry {
    region: String,
    delta_net: f64,
    points: usize,
    file: String,
}

pub struct NetCache {
    dir: PathBuf,
    /// Serialises index updates from concurrent grid cells.
    index_lock: Mutex<()>,
}

pub fn key(region: &Region, delta_net: f64) -> String {
    sha256_hex(format!("{}|{delta_net:?}", region.descriptor()).as_bytes())[..16].to_string()
}

impl NetCache {
    pub fn open(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(NetCache {
            dir: dir.to_path_buf(),
            index_lock: Mutex::new(()),
        })
    }

    /// Cached net, or a freshly built one which is then stored.
    pub fn get(&self, region: Region, delta_net: f64, cap: usize) -> Result<Net> {
        let k = key(&region, delta_net);
        let file = self.dir.join(format!("{k}.net"));
        if let Ok(bytes) = std::fs::read(&file) {
            if let Some((pts, w)) = decode(&bytes) {
                return Ok(Net::from_points(region, delta_net, pts, w)?);
            }
        }
        let net = Net::build_capped(region, delta_net, cap)?;
        let tmp = self.dir.join(format!("{k}.net.tmp"));
        std::fs::write(&tmp, encode(&net))?;
        std::fs::rename(&tmp, &file)?;
        let _guard = self.index_lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut idx = self.index();
        idx.nets.insert(
            k.clone(),
            Entry {
                region: region.descriptor(),
                delta_net,
                points: net.len(),
                file: format!("{k}.net"),
            },
        );
        let text = serde_json::to_string_pretty(&idx).map_err(|e| LabError::Io(e.to_string()))?;
        std::fs::write(self.dir.join("index.json"), text + "\n")?;
        Ok(net)
    }

    fn index(&self) -> Index {
        std::fs::read_to_string(self.dir.join("index.json"))
            .ok()
            .and_then(|s| serde_json::from_str(&s).ok())
            .unwrap_or_default()
    }
}

fn encode(net: &Net) -> Vec<u8> {
    let mut out = Vec::with_capacity(MAGIC.len() + 8 + net.len() * 72);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(net.len() as u64).to_le_bytes());
    for (m, w) in net.matrices().iter().zip(net.weights()) {
        for x in m.entries() {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out.extend_from_slice(&w.to_le_bytes());
    }
    out
}

fn decode(bytes: &[u8]) -> Option<(Vec<Mat2>, Vec<f64>)> {
    let rest = bytes.strip_prefix(MAGIC)?;
    let n = u64::from_le_bytes(rest.get(..8)?.try_into().ok()?) as usize;
    let body = &rest[8..];
    if body.len() != n.checked_mul(72)? {
        return None;
    }
    let mut pts = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for rec in body.chunks_exact(72) {
        let f: Vec<f64> = rec.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        pts.push(Mat2::new(
            C64::new(f[0], f[1]),
            C64::new(f[2], f[3]),
            C64::new(f[4], f[5]),
            C64::new(f[6], f[7]),
        ));
        w.push(f[8]);
    }
    Some((pts, w))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cached_net_matches_fresh_build() {
        let dir = tempfile::tempdir().unwrap();
        let cache = NetCache::open(dir.path()).unwrap();
        let region = Region::Su2Ball { radius: 0.3 };
        let a = cache.get(region, 0.1, 100_000).unwrap();
        let b = cache.get(region, 0.1, 100_000).unwrap();
        assert_eq!(a.matrices(), b.matrices());
        assert_eq!(a.weights(), b.weights());
        let idx = std::fs::read_to_string(dir.path().join("index.json")).unwrap();
        assert!(idx.contains("su2_ball(r=0.3)"));
    }

    #[test]
    fn corrupt_entry_is_rebuilt() {
        let dir = tempfile::tempdir().unwrap();
        let cache = NetCache::open(dir.path()).unwrap();
        let region = Region::Sl2rBox { half_width: 0.2 };
        let a = cache.get(region, 0.1, 100_000).unwrap();
        std::fs::write(dir.path().join(format!("{}.net", key(&region, 0.1))), b"junk").unwrap();
        let b = cache.get(region, 0.1, 100_000).unwrap();
        assert_eq!(a.matrices(), b.matrices());
    }
}
