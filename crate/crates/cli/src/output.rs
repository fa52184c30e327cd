//! Output directory handling: a lock file against concurrent runs, and
//! staged writes that only land when a command succeeds.

use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

pub(crate) struct Lock {
    path: PathBuf,
}

impl Lock {
    pub(crate) fn acquire(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(".dualtake.lock");
        fs::OpenOptions::new().write(true).create_new(true).open(&path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::AlreadyExists {
                CliError::Runtime(format!("{} exists; another run is using this directory", path.display()))
            } else {
                CliError::from(e)
            }
        })?;
        Ok(Self { path })
    }
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Files and directories written under temporary names, renamed into place
/// by [`Staging::commit`] and deleted if the command fails first.
pub(crate) struct Staging {
    overwrite: bool,
    pending: Vec<(PathBuf, PathBuf)>,
}

fn staged_name(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.partial"))
}

impl Staging {
    pub(crate) fn new(overwrite: bool) -> Self {
        Self { overwrite, pending: Vec::new() }
    }

    /// Fails early when `targets` exist and overwriting was not requested.
    pub(crate) fn check_targets(&self, targets: &[PathBuf]) -> Result<(), CliError> {
        if self.overwrite {
            return Ok(());
        }
        match targets.iter().find(|p| p.exists()) {
            Some(p) => {
                Err(CliError::Runtime(format!("{} already exists; pass --overwrite to replace it", p.display())))
            }
            None => Ok(()),
        }
    }

    pub(crate) fn file(&mut self, path: PathBuf, contents: &str) -> Result<(), CliError> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let tmp = staged_name(&path);
        fs::write(&tmp, contents)?;
        self.pending.push((tmp, path));
        Ok(())
    }

    /// A fresh staging directory that will replace `path` on commit.
    pub(crate) fn dir(&mut self, path: PathBuf) -> Result<PathBuf, CliError> {
        let tmp = staged_name(&path);
        if tmp.exists() {
            fs::remove_dir_all(&tmp)?;
        }
        fs::create_dir_all(&tmp)?;
        self.pending.push((tmp.clone(), path));
        Ok(tmp)
    }

    pub(crate) fn commit(mut self) -> Result<(), CliError> {
        for (tmp, target) in std::mem::take(&mut self.pending) {
            if target.is_dir() {
                fs::remove_dir_all(&target)?;
            }
            fs::rename(&tmp, &target)?;
        }
        Ok(())
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        for (tmp, _) in &self.pending {
            if tmp.is_dir() {
                let _ = fs::remove_dir_all(tmp);
            } else {
                let _ = fs::remove_file(tmp);
            }
        }
    }
}
