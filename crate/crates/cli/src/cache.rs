//! Content-addressed cache of computed tables. Entries are written to a
//! temporary file and renamed into place; each carries a digest of its
//! payload so a damaged entry is detected and recomputed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

const HEADER: &str = "freerep-cache v1 sha256=";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct CacheLog {
    pub hits: Vec<String>,
    pub misses: Vec<String>,
    pub corrupt: Vec<String>,
}

#[derive(Debug)]
pub struct Cache {
    dir: Option<PathBuf>,
    pub log: CacheLog,
}

impl Cache {
    pub fn new(dir: PathBuf) -> Cache {
        Cache { dir: Some(dir), log: CacheLog::default() }
    }

    /// A cache that always recomputes and stores nothing.
    pub fn disabled() -> Cache {
        Cache { dir: None, log: CacheLog::default() }
    }

    pub fn key(kind: &str, parts: &impl Serialize) -> String {
        let body = serde_json::to_string(parts).expect("cache key serializes");
        format!("{kind}-{}", &sha256_hex(format!("{kind}\n{body}").as_bytes())[..32])
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{key}.txt")))
    }

    fn read(path: &Path) -> Option<Result<String, String>> {
        let text = fs::read_to_string(path).ok()?;
        let Some((head, body)) = text.split_once('\n') else {
            return Some(Err("missing header".into()));
        };
        let Some(digest) = head.strip_prefix(HEADER) else {
            return Some(Err("bad header".into()));
        };
        if sha256_hex(body.as_bytes()) != digest {
            return Some(Err("digest mismatch".into()));
        }
        Some(Ok(body.to_string()))
    }

    fn write(path: &Path, body: &str) -> std::io::Result<()> {
        let dir = path.parent().expect("cache entries live in a directory");
        fs::create_dir_all(dir)?;
        let tmp = dir.join(format!(".{}.{}.tmp", path.file_name().unwrap().to_string_lossy(), std::process::id()));
        {
            let mut f = fs::File::create(&tmp)?;
            write!(f, "{HEADER}{}\n{body}", sha256_hex(body.as_bytes()))?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)
    }

    /// The stored payload for `key`, or `compute()` stored under it.
    pub fn get_or_compute<E>(&mut self, key: &str, compute: impl FnOnce() -> Result<String, E>) -> Result<String, E> {
        let Some(path) = self.path(key) else {
            self.log.misses.push(key.to_string());
            return compute();
        };
        match Cache::read(&path) {
            Some(Ok(body)) => {
                self.log.hits.push(key.to_string());
                return Ok(body);
            }
            Some(Err(why)) => {
                log::warn!("cache entry {} is corrupt ({why}); recomputing", path.display());
                self.log.corrupt.push(key.to_string());
            }
            None => {}
        }
        self.log.misses.push(key.to_string());
        let body = compute()?;
        if let Err(e) = Cache::write(&path, &body) {
            log::warn!("could not store cache entry {}: {e}", path.display());
        }
        Ok(body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hit_after_miss_and_corruption_recovers() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = Cache::new(dir.path().to_path_buf());
        let key = Cache::key("xi", &(2, "word"));
        let v = c.get_or_compute::<()>(&key, || Ok("1\n2\n".into())).unwrap();
        let again = c.get_or_compute::<()>(&key, || panic!("should be cached")).unwrap();
        assert_eq!(v, again);
        assert_eq!((c.log.hits.len(), c.log.misses.len()), (1, 1));

        let path = dir.path().join(format!("{key}.txt"));
        let text = fs::read_to_string(&path).unwrap().replace("2\n", "3\n");
        fs::write(&path, text).unwrap();
        let fixed = c.get_or_compute::<()>(&key, || Ok("1\n2\n".into())).unwrap();
        assert_eq!(fixed, v);
        assert_eq!(c.log.corrupt, vec![key]);
    }

    #[test]
    fn keys_depend_on_every_part() {
        assert_ne!(Cache::key("xi", &(2, "word")), Cache::key("xi", &(2, "weighted")));
        assert_ne!(Cache::key("xi", &1), Cache::key("cover", &1));
        let mut off = Cache::disabled();
        let mut calls = 0;
        for _ in 0..2 {
            off.get_or_compute::<()>("k", || {
                calls += 1;
                Ok(String::new())
            })
            .unwrap();
        }
        assert_eq!(calls, 2);
    }
}
