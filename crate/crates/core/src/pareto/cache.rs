use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fem2d::{DensityField, ProblemSpec};
use crate::simp::{DesignResult, OptimizerConfig};

/// Memoizes optimizer runs in memory and, optionally, on disk.
///
/// Disk layout: `<dir>/<key[0..2]>/<key>.json`, one serialized
/// [`DesignResult`] per run. Keys hash the problem, the target volume
/// fraction, the exact starting field and the optimizer settings. Files are
/// written to a temporary name and renamed, so concurrent writers of the same
/// key never expose a partial file.
#[derive(Debug, Default)]
pub struct ResultCache {
    dir: Option<PathBuf>,
    memory: Mutex<HashMap<String, Arc<DesignResult>>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl ResultCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn on_disk(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self {
            dir: Some(dir),
            ..Self::default()
        })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// `(hits, misses)` so far.
    pub fn stats(&self) -> (u64, u64) {
        (self.hits.load(Ordering::Relaxed), self.misses.load(Ordering::Relaxed))
    }

    pub fn key(problem: &ProblemSpec, vf: f64, init: &DensityField, cfg: &OptimizerConfig) -> String {
        let mut h = Sha256::new();
        h.update(problem.fingerprint().as_bytes());
        h.update(vf.to_bits().to_le_bytes());
        for v in init.values() {
            h.update(v.to_bits().to_le_bytes());
        }
        h.update(serde_json::to_vec(cfg).expect("config serializes"));
        hex::encode(h.finalize())
    }

    /// Returns the cached run for `key` or computes, stores and returns it.
    pub fn get_or_insert_with(
        &self,
        key: &str,
        compute: impl FnOnce() -> Result<DesignResult>,
    ) -> Result<Arc<DesignResult>> {
        if let Some(hit) = self.memory.lock().expect("cache lock").get(key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(Arc::clone(hit));
        }
        if let Some(hit) = self.read_disk(key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            let hit = Arc::new(hit);
            self.memory
                .lock()
                .expect("cache lock")
                .insert(key.to_string(), Arc::clone(&hit));
            return Ok(hit);
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let result = compute()?;
        self.write_disk(key, &result)?;
        let mut mem = self.memory.lock().expect("cache lock");
        Ok(Arc::clone(
            mem.entry(key.to_string()).or_insert_with(|| Arc::new(result)),
        ))
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(&key[..2]).join(format!("{key}.json")))
    }

    fn read_disk(&self, key: &str) -> Option<DesignResult> {
        let path = self.path(key)?;
        let data = fs::read(&path).ok()?;
        match serde_json::from_slice(&data) {
            Ok(r) => Some(r),
            Err(e) => {
                log::warn!("ignoring unreadable cache entry {}: {e}", path.display());
                None
            }
        }
    }

    fn write_disk(&self, key: &str, result: &DesignResult) -> Result<()> {
        let Some(path) = self.path(key) else {
            return Ok(());
        };
        let parent = path.parent().expect("entry has a parent");
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        let tmp = parent.join(format!(
            ".{key}.{}.{}.tmp",
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        fs::write(&tmp, serde_json::to_vec(result)?).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem2d::Grid;
    use crate::simp::optimize;

    #[test]
    fn disk_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = ProblemSpec::preset_with_grid("mbb", Grid::new(12, 4).unwrap()).unwrap();
        let cfg = OptimizerConfig { max_iters: 10, ..Default::default() };
        let init = DensityField::uniform(p.grid, 0.4);
        let key = ResultCache::key(&p, 0.4, &init, &cfg);
        let fresh = {
            let cache = ResultCache::on_disk(dir.path()).unwrap();
            let r = cache.get_or_insert_with(&key, || optimize(&p, 0.4, &cfg, &init)).unwrap();
            assert_eq!(cache.stats(), (0, 1));
            r
        };
        let cache = ResultCache::on_disk(dir.path()).unwrap();
        let again = cache
            .get_or_insert_with(&key, || panic!("must not recompute"))
            .unwrap();
        assert_eq!(*again, *fresh);
        assert_eq!(cache.stats(), (1, 0));
    }

    #[test]
    fn keys_separate_inputs() {
        let p = ProblemSpec::preset_with_grid("mbb", Grid::new(6, 2).unwrap()).unwrap();
        let cfg = OptimizerConfig::default();
        let a = DensityField::uniform(p.grid, 0.4);
        let b = DensityField::uniform(p.grid, 0.41);
        let k = ResultCache::key(&p, 0.4, &a, &cfg);
        assert_ne!(k, ResultCache::key(&p, 0.4, &b, &cfg));
        assert_ne!(k, ResultCache::key(&p, 0.41, &a, &cfg));
        let cfg2 = OptimizerConfig { penal: 2.0, ..Default::default() };
        assert_ne!(k, ResultCache::key(&p, 0.4, &a, &cfg2));
        assert_eq!(k, ResultCache::key(&p, 0.4, &a, &cfg));
    }

    #[test]
    fn errors_are_not_cached() {
        let cache = ResultCache::in_memory();
        let r = cache.get_or_insert_with("abcd", || Err(Error::InvalidArgument("boom".into())));
        assert!(r.is_err());
        assert_eq!(cache.stats(), (0, 1));
    }
}
