//! Staged outputs: every file is written under a `.partial` name and
//! renamed only when the whole command succeeds. Dropping an uncommitted
//! stage removes the partial files and any directory it created.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

#[derive(Debug, Default)]
pub struct Stage {
    files: Vec<(PathBuf, PathBuf)>,
    created: Vec<PathBuf>,
    committed: bool,
}

fn partial_name(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".partial");
    path.with_file_name(name)
}

impl Stage {
    pub fn new() -> Self {
        Self::default()
    }

    /// Creates `dir` and its missing ancestors, remembering which ones were new.
    pub fn dir(&mut self, dir: &Path) -> Result<()> {
        let mut missing = Vec::new();
        let mut cur = Some(dir);
        while let Some(d) = cur {
            if d.as_os_str().is_empty() || d.exists() {
                break;
            }
            missing.push(d.to_path_buf());
            cur = d.parent();
        }
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        missing.reverse();
        self.created.extend(missing);
        Ok(())
    }

    /// Opens the partial file standing in for `path`.
    pub fn create(&mut self, path: &Path) -> Result<BufWriter<File>> {
        if let Some(parent) = path.parent() {
            self.dir(parent)?;
        }
        let partial = partial_name(path);
        let file = File::create(&partial).with_context(|| format!("cannot create {}", partial.display()))?;
        self.files.push((partial, path.to_path_buf()));
        Ok(BufWriter::new(file))
    }

    pub fn write(&mut self, path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
        let mut out = self.create(path)?;
        out.write_all(contents.as_ref())?;
        out.flush()?;
        Ok(())
    }

    pub fn commit(mut self) -> Result<()> {
        for (partial, path) in &self.files {
            fs::rename(partial, path).with_context(|| format!("cannot write {}", path.display()))?;
        }
        self.committed = true;
        Ok(())
    }
}

impl Drop for Stage {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for (partial, _) in &self.files {
            let _ = fs::remove_file(partial);
        }
        for dir in self.created.iter().rev() {
            let _ = fs::remove_dir(dir);
        }
    }
}
