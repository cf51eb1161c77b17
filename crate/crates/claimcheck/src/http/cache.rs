use std::fs;
use std::io;
use std::path::PathBuf;
use std::sync::RwLock;

use sha2::{Digest, Sha256};

/// Response bodies on disk, one file per request keyed by the SHA-256 of
/// the request text. Concurrent readers, exclusive writers; files are
/// written to a temporary name and renamed into place.
pub struct ResponseCache {
    dir: PathBuf,
    lock: RwLock<()>,
}

impl ResponseCache {
    pub fn new(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            lock: RwLock::new(()),
        })
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir
            .join(format!("{}.json", hex::encode(Sha256::digest(key.as_bytes()))))
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let _guard = self.lock.read().expect("cache lock");
        fs::read_to_string(self.path(key)).ok()
    }

    pub fn put(&self, key: &str, body: &str) -> io::Result<()> {
        let _guard = self.lock.write().expect("cache lock");
        let path = self.path(key);
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, body)?;
        fs::rename(tmp, path)
    }
}
