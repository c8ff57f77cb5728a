//! Directory-backed document store.
//!
//! Layout: `<root>/<collection>/<id>.json` plus `<root>/<collection>/index.json`
//! listing entries in creation order. Every write goes to a temporary file in
//! the same directory and is renamed into place, so readers never observe a
//! partial document. One reentrant lock serializes writers, so an update may
//! insert into another collection; reads of single documents take no lock.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use parking_lot::ReentrantMutex;
use serde::{Deserialize, Serialize};
use uuid::Uuid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Collection {
    Profiles,
    Kbs,
    Sessions,
}

impl Collection {
    pub const ALL: [Collection; 3] = [Collection::Profiles, Collection::Kbs, Collection::Sessions];

    pub fn dir_name(self) -> &'static str {
        match self {
            Collection::Profiles => "profiles",
            Collection::Kbs => "kbs",
            Collection::Sessions => "sessions",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub id: String,
    pub created: DateTime<Utc>,
    /// Owner for profiles and sessions, document name for knowledge bases.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub fingerprint: String,
}

#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    write_lock: ReentrantMutex<()>,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path
        .parent()
        .expect("documents live inside a collection directory");
    let tmp = dir.join(format!(".tmp-{}", Uuid::new_v4()));
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

/// Ids are generated as UUIDs; anything else cannot name a stored document.
fn valid_id(id: &str) -> bool {
    Uuid::parse_str(id).is_ok()
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        for c in Collection::ALL {
            fs::create_dir_all(root.join(c.dir_name()))?;
        }
        Ok(Store {
            root,
            write_lock: ReentrantMutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn doc_path(&self, c: Collection, id: &str) -> PathBuf {
        self.root.join(c.dir_name()).join(format!("{id}.json"))
    }

    fn index_path(&self, c: Collection) -> PathBuf {
        self.root.join(c.dir_name()).join("index.json")
    }

    fn read_index(&self, c: Collection) -> io::Result<Vec<IndexEntry>> {
        match fs::read(self.index_path(c)) {
            Ok(bytes) => serde_json::from_slice(&bytes)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Vec::new()),
            Err(e) => Err(e),
        }
    }

    /// Entries in creation order.
    pub fn list(&self, c: Collection) -> io::Result<Vec<IndexEntry>> {
        self.read_index(c)
    }

    pub fn get(&self, c: Collection, id: &str) -> io::Result<Option<Vec<u8>>> {
        if !valid_id(id) {
            return Ok(None);
        }
        match fs::read(self.doc_path(c, id)) {
            Ok(bytes) => Ok(Some(bytes)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Stores a new document built from its freshly assigned id.
    pub fn insert(
        &self,
        c: Collection,
        label: Option<String>,
        build: impl FnOnce(&str, DateTime<Utc>) -> (Vec<u8>, String),
    ) -> io::Result<IndexEntry> {
        let _guard = self.write_lock.lock();
        let id = Uuid::new_v4().to_string();
        let created = Utc::now();
        let (bytes, fingerprint) = build(&id, created);
        write_atomic(&self.doc_path(c, &id), &bytes)?;
        let entry = IndexEntry {
            id,
            created,
            label,
            fingerprint,
        };
        let mut index = self.read_index(c)?;
        index.push(entry.clone());
        let encoded = serde_json::to_vec_pretty(&index).expect("index serializes");
        write_atomic(&self.index_path(c), &encoded)?;
        Ok(entry)
    }

    /// Read-modify-write of one document under the writer lock.
    ///
    /// Returns `Ok(None)` when the document does not exist. `E` carries both
    /// storage failures and rejections from `modify`; a rejection leaves the
    /// stored document untouched.
    pub fn update<T, E>(
        &self,
        c: Collection,
        id: &str,
        modify: impl FnOnce(&[u8]) -> Result<(Option<Vec<u8>>, T), E>,
    ) -> Result<Option<T>, E>
    where
        E: From<io::Error>,
    {
        let _guard = self.write_lock.lock();
        let Some(current) = self.get(c, id)? else {
            return Ok(None);
        };
        let (replacement, out) = modify(&current)?;
        if let Some(bytes) = replacement {
            write_atomic(&self.doc_path(c, id), &bytes)?;
        }
        Ok(Some(out))
    }
}
