//! One JSON document per user. Writes go to a temporary file in the same
//! directory, are synced, then renamed over the old document, so a reader
//! only ever sees a complete store.
//!
//! `IRF_FAULT=crash_before_rename` or `IRF_FAULT=crash_after_rename` aborts
//! the process at that point of the next write.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use irf_core::PreferenceStore;

pub const FAULT_ENV: &str = "IRF_FAULT";
const TMP_SUFFIX: &str = ".tmp";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("store I/O on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("store {path} is corrupt: {reason}")]
    Corrupt { path: PathBuf, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fault {
    BeforeRename,
    AfterRename,
}

fn fault() -> Option<Fault> {
    match std::env::var(FAULT_ENV).ok()?.as_str() {
        "crash_before_rename" => Some(Fault::BeforeRename),
        "crash_after_rename" => Some(Fault::AfterRename),
        _ => None,
    }
}

/// File name for a user. Ids made of `[A-Za-z0-9_-]` are used as they are,
/// anything else is hex-encoded.
pub fn file_name(user_id: &str) -> String {
    let plain = !user_id.is_empty()
        && user_id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
    if plain {
        format!("{user_id}.json")
    } else {
        format!("x-{}.json", hex::encode(user_id))
    }
}

#[derive(Debug)]
pub struct FileStore {
    dir: PathBuf,
    locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
}

impl FileStore {
    /// Creates the directory if needed and removes temporaries left by an
    /// interrupted write.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        let io_err = |source| StoreError::Io {
            path: dir.clone(),
            source,
        };
        fs::create_dir_all(&dir).map_err(io_err)?;
        for entry in fs::read_dir(&dir).map_err(io_err)? {
            let path = entry.map_err(io_err)?.path();
            if path.to_string_lossy().ends_with(TMP_SUFFIX) {
                tracing::warn!("removing leftover {}", path.display());
                let _ = fs::remove_file(&path);
            }
        }
        Ok(Self {
            dir,
            locks: Mutex::new(HashMap::new()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, user_id: &str) -> PathBuf {
        self.dir.join(file_name(user_id))
    }

    /// The exclusive lock for one user's store.
    pub fn user_lock(&self, user_id: &str) -> Arc<tokio::sync::Mutex<()>> {
        self.locks
            .lock()
            .unwrap()
            .entry(user_id.to_owned())
            .or_default()
            .clone()
    }

    pub fn load(&self, user_id: &str) -> Result<Option<PreferenceStore>, StoreError> {
        let path = self.path_for(user_id);
        let raw = match fs::read(&path) {
            Ok(raw) => raw,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(source) => return Err(StoreError::Io { path, source }),
        };
        let store: PreferenceStore = serde_json::from_slice(&raw).map_err(|e| StoreError::Corrupt {
            path: path.clone(),
            reason: e.to_string(),
        })?;
        store.validate().map_err(|e| StoreError::Corrupt {
            path: path.clone(),
            reason: e.to_string(),
        })?;
        if store.user_id != user_id {
            return Err(StoreError::Corrupt {
                path,
                reason: format!("belongs to `{}`", store.user_id),
            });
        }
        Ok(Some(store))
    }

    pub fn save(&self, store: &PreferenceStore) -> Result<(), StoreError> {
        let target = self.path_for(&store.user_id);
        let tmp = self.dir.join(format!(
            "{}.{}{TMP_SUFFIX}",
            file_name(&store.user_id),
            std::process::id()
        ));
        let io_err = |path: &Path| {
            let path = path.to_owned();
            move |source| StoreError::Io { path, source }
        };
        let body = serde_json::to_vec_pretty(store).expect("preference stores always serialize");
        {
            let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
            f.write_all(&body).map_err(io_err(&tmp))?;
            f.sync_all().map_err(io_err(&tmp))?;
        }
        let fault = fault();
        if fault == Some(Fault::BeforeRename) {
            std::process::abort();
        }
        fs::rename(&tmp, &target).map_err(io_err(&target))?;
        if fault == Some(Fault::AfterRename) {
            std::process::abort();
        }
        // Persist the rename itself. Not every platform can sync a directory.
        if let Ok(d) = File::open(&self.dir) {
            let _ = d.sync_all();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use irf_core::FeatureKey;

    fn store(user: &str, w: f64) -> PreferenceStore {
        PreferenceStore {
            user_id: user.into(),
            weights: [(FeatureKey::parse("genre=comedy").unwrap(), w)].into(),
            last_updated: 1_000,
        }
    }

    #[test]
    fn save_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let fs = FileStore::open(dir.path()).unwrap();
        assert_eq!(fs.load("u1").unwrap(), None);
        fs.save(&store("u1", 0.5)).unwrap();
        fs.save(&store("u1", 0.7)).unwrap();
        assert_eq!(fs.load("u1").unwrap(), Some(store("u1", 0.7)));
        let names: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        assert_eq!(names, vec!["u1.json"]);
    }

    #[test]
    fn odd_user_ids_are_encoded() {
        assert_eq!(file_name("u1"), "u1.json");
        assert_eq!(file_name("../etc"), "x-2e2e2f657463.json");
        let dir = tempfile::tempdir().unwrap();
        let fs = FileStore::open(dir.path()).unwrap();
        fs.save(&store("a/b", 0.1)).unwrap();
        assert_eq!(fs.load("a/b").unwrap(), Some(store("a/b", 0.1)));
    }

    #[test]
    fn corrupt_documents_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("u1.json"), b"{\"user_id\":\"u1\",\"wei").unwrap();
        let fs = FileStore::open(dir.path()).unwrap();
        assert!(matches!(fs.load("u1"), Err(StoreError::Corrupt { .. })));
    }

    #[test]
    fn leftovers_are_swept_on_open() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("u1.json.42.tmp"), b"{").unwrap();
        FileStore::open(dir.path()).unwrap();
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }
}
