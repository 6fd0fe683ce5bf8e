//! All-or-nothing file output.
//!
//! Commands build every output in memory first. [`Outputs::commit`] writes
//! each file to a temporary sibling, then renames them all into place; if any
//! step fails, every file and directory it created is removed again.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::io::IoError;

#[derive(Clone, Debug, Default)]
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, path: impl Into<PathBuf>, bytes: Vec<u8>) {
        self.files.push((path.into(), bytes));
    }

    /// Files of `other` placed under `dir`.
    pub fn extend_under(&mut self, dir: &Path, other: Outputs) {
        for (p, b) in other.files {
            self.files.push((dir.join(p), b));
        }
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.files.iter().map(|(p, _)| p.as_path())
    }

    /// `(relative path, bytes)` in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (&Path, &[u8])> {
        self.files.iter().map(|(p, b)| (p.as_path(), b.as_slice()))
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    /// Writes relative paths under `base`.
    pub fn commit(&self, base: &Path) -> Result<Vec<PathBuf>, IoError> {
        let targets: Vec<(PathBuf, &[u8])> = self.files.iter().map(|(p, b)| (base.join(p), b.as_slice())).collect();
        let mut undo = Undo::default();
        match write_all(&targets, &mut undo) {
            Ok(()) => Ok(targets.into_iter().map(|(p, _)| p).collect()),
            Err(e) => {
                undo.rollback();
                Err(e)
            }
        }
    }
}

#[derive(Default)]
struct Undo {
    dirs: Vec<PathBuf>,
    files: Vec<PathBuf>,
}

impl Undo {
    fn rollback(self) {
        for f in self.files.iter().rev() {
            let _ = fs::remove_file(f);
        }
        for d in self.dirs.iter().rev() {
            let _ = fs::remove_dir(d);
        }
    }

    fn create_dirs(&mut self, dir: &Path) -> std::io::Result<()> {
        let mut missing = Vec::new();
        let mut cur = Some(dir);
        while let Some(d) = cur.filter(|d| !d.as_os_str().is_empty() && !d.exists()) {
            missing.push(d.to_path_buf());
            cur = d.parent();
        }
        for d in missing.into_iter().rev() {
            fs::create_dir(&d)?;
            self.dirs.push(d);
        }
        Ok(())
    }
}

fn tmp_name(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.tmp-{}", std::process::id()))
}

fn write_all(targets: &[(PathBuf, &[u8])], undo: &mut Undo) -> Result<(), IoError> {
    let mut staged = Vec::with_capacity(targets.len());
    for (path, bytes) in targets {
        let err = |source| IoError::Write { path: path.clone(), source };
        if let Some(parent) = path.parent() {
            undo.create_dirs(parent).map_err(err)?;
        }
        let tmp = tmp_name(path);
        undo.files.push(tmp.clone());
        let mut f = fs::File::create(&tmp).map_err(err)?;
        f.write_all(bytes).and_then(|()| f.sync_all()).map_err(err)?;
        staged.push((tmp, path));
    }
    for (tmp, path) in staged {
        let existed = path.exists();
        fs::rename(&tmp, path).map_err(|source| IoError::Write { path: path.clone(), source })?;
        // Overwritten files cannot be restored; only new ones are removed.
        if !existed {
            undo.files.push(path.clone());
        }
    }
    Ok(())
}
