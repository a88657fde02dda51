use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use super::{Backend, BackendReply, ChatRequest, GatewayError, ReplayKey};

/// Directory of recorded responses: one file per key, named by the key's
/// hex digest, holding the raw response text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureStore {
    dir: PathBuf,
}

impl FixtureStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FixtureStore { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &ReplayKey) -> PathBuf {
        self.dir.join(key.hex())
    }

    /// Writes through a temporary file and rename; the last writer wins.
    pub fn record(&self, key: &ReplayKey, response: &str) -> Result<(), GatewayError> {
        let io = |source| GatewayError::Io {
            path: self.dir.display().to_string(),
            source,
        };
        std::fs::create_dir_all(&self.dir).map_err(io)?;
        let final_path = self.path_for(key);
        let tmp = self.dir.join(format!(".{}.{}.tmp", key.hex(), std::process::id()));
        std::fs::write(&tmp, response.as_bytes()).map_err(io)?;
        std::fs::rename(&tmp, &final_path).map_err(io)
    }

    pub fn load(&self, key: &ReplayKey) -> Result<String, GatewayError> {
        let path = self.path_for(key);
        match std::fs::read(&path) {
            Ok(bytes) => String::from_utf8(bytes).map_err(|e| GatewayError::Io {
                path: path.display().to_string(),
                source: std::io::Error::new(ErrorKind::InvalidData, e),
            }),
            Err(e) if e.kind() == ErrorKind::NotFound => Err(GatewayError::FixtureMissing(key.hex())),
            Err(source) => Err(GatewayError::Io {
                path: path.display().to_string(),
                source,
            }),
        }
    }

    pub fn contains(&self, key: &ReplayKey) -> bool {
        self.path_for(key).is_file()
    }
}

pub struct ReplayBackend {
    store: FixtureStore,
}

impl ReplayBackend {
    pub fn new(store: FixtureStore) -> Self {
        ReplayBackend { store }
    }
}

impl Backend for ReplayBackend {
    fn send(&self, _request: &ChatRequest, key: &ReplayKey) -> Result<BackendReply, GatewayError> {
        self.store.load(key).map(BackendReply::from)
    }
}
