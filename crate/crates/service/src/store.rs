//! File-backed object store.
//!
//! ```text
//! {root}/templates/{id}.json
//! {root}/sessions/{id}.json
//! {root}/images/{id}.png
//! ```
//!
//! Writes go to a hidden temp file in the same directory, are fsynced, then
//! renamed over the target, so readers see either the old bytes or the new
//! ones. Temp files left behind by a crash are removed by [`Store::open`].

use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Template,
    Session,
    Image,
}

impl Kind {
    pub const ALL: [Kind; 3] = [Kind::Template, Kind::Session, Kind::Image];

    fn dir(self) -> &'static str {
        match self {
            Kind::Template => "templates",
            Kind::Session => "sessions",
            Kind::Image => "images",
        }
    }

    fn ext(self) -> &'static str {
        match self {
            Kind::Image => "png",
            _ => "json",
        }
    }
}

const TEMP_PREFIX: &str = ".tmp-";

/// Called after the temp file is durable and before the rename. Returning an
/// error abandons the write as a crash at that point would.
pub type FaultHook = Arc<dyn Fn(&Path) -> io::Result<()> + Send + Sync>;

#[derive(Clone)]
pub struct Store {
    root: PathBuf,
    fault: Option<FaultHook>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store").field("root", &self.root).finish_non_exhaustive()
    }
}

/// 128 random bits as 32 lowercase hex digits.
pub fn new_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

pub fn is_valid_id(id: &str) -> bool {
    id.len() == 32 && id.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

impl Store {
    /// Creates the layout if needed and sweeps stale temp files.
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        for kind in Kind::ALL {
            let dir = root.join(kind.dir());
            fs::create_dir_all(&dir)?;
            for entry in fs::read_dir(&dir)? {
                let entry = entry?;
                if entry.file_name().to_string_lossy().starts_with(TEMP_PREFIX) {
                    fs::remove_file(entry.path())?;
                }
            }
        }
        Ok(Self { root, fault: None })
    }

    pub fn with_fault_hook(mut self, hook: FaultHook) -> Self {
        self.fault = Some(hook);
        self
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Panics on an invalid id; callers validate ids at the API boundary.
    pub fn path(&self, kind: Kind, id: &str) -> PathBuf {
        assert!(is_valid_id(id), "invalid object id {id:?}");
        self.root.join(kind.dir()).join(format!("{id}.{}", kind.ext()))
    }

    pub fn write(&self, kind: Kind, id: &str, bytes: &[u8]) -> io::Result<()> {
        let target = self.path(kind, id);
        let dir = target.parent().expect("object paths have a parent");
        let temp = dir.join(format!("{TEMP_PREFIX}{id}-{}", new_id()));
        let result = (|| {
            let mut f = File::create(&temp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
            drop(f);
            if let Some(hook) = &self.fault {
                hook(&temp)?;
            }
            fs::rename(&temp, &target)?;
            // Persist the rename itself.
            File::open(dir)?.sync_all()
        })();
        if result.is_err() && self.fault.is_none() {
            let _ = fs::remove_file(&temp);
        }
        result
    }

    /// `Ok(None)` when the object does not exist.
    pub fn read(&self, kind: Kind, id: &str) -> io::Result<Option<Vec<u8>>> {
        match fs::read(self.path(kind, id)) {
            Ok(b) => Ok(Some(b)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    pub fn ids(&self, kind: Kind) -> io::Result<Vec<String>> {
        let suffix = format!(".{}", kind.ext());
        let mut ids: Vec<String> = fs::read_dir(self.root.join(kind.dir()))?
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().to_str()?.strip_suffix(&suffix).map(str::to_string))
            .filter(|id| is_valid_id(id))
            .collect();
        ids.sort();
        Ok(ids)
    }
}
