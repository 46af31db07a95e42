use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Error;

use super::manifest::MANIFEST_FILE;
use super::CliError;

pub const LOCK_FILE: &str = ".lock";

/// An exclusively held run directory; the lock file is removed on drop.
#[derive(Debug)]
pub struct RunDir {
    path: PathBuf,
}

impl RunDir {
    /// Claims `path`. An existing directory is refused unless `force`, in
    /// which case its previous contents are cleared after the lock is held.
    pub fn claim(path: PathBuf, force: bool) -> Result<Self, CliError> {
        if path.exists() && !force {
            return Err(CliError::Usage(format!(
                "run directory {} already exists (use --force to overwrite)",
                path.display()
            )));
        }
        fs::create_dir_all(&path).map_err(|e| CliError::Runtime(Error::io(&path, e)))?;
        let lock = path.join(LOCK_FILE);
        fs::OpenOptions::new().write(true).create_new(true).open(&lock).map_err(|e| {
            if e.kind() == std::io::ErrorKind::AlreadyExists {
                CliError::Runtime(Error::Config(format!(
                    "run directory {} is locked by another process ({} exists)",
                    path.display(),
                    lock.display()
                )))
            } else {
                CliError::Runtime(Error::io(&lock, e))
            }
        })?;
        let dir = Self { path };
        if force {
            dir.clear().map_err(CliError::Runtime)?;
        }
        Ok(dir)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn clear(&self) -> crate::Result<()> {
        let entries = fs::read_dir(&self.path).map_err(|e| Error::io(&self.path, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&self.path, e))?;
            if entry.file_name() == LOCK_FILE {
                continue;
            }
            let p = entry.path();
            let removed = if p.is_dir() { fs::remove_dir_all(&p) } else { fs::remove_file(&p) };
            removed.map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }

    /// Artifact paths relative to the run directory, sorted, excluding the
    /// manifest itself.
    pub fn relative(&self, files: &[PathBuf]) -> Vec<String> {
        let mut out: Vec<String> = files
            .iter()
            .map(|f| {
                f.strip_prefix(&self.path)
                    .unwrap_or(f)
                    .components()
                    .map(|c| c.as_os_str().to_string_lossy().into_owned())
                    .collect::<Vec<_>>()
                    .join("/")
            })
            .filter(|f| f != MANIFEST_FILE)
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

impl Drop for RunDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(self.path.join(LOCK_FILE));
    }
}
