//! Output files are written to a temporary sibling and renamed into place,
//! so a reader never sees a partial file.

use crate::error::CliError;
use std::io::{BufWriter, Write};
use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root)
            .map_err(|e| CliError::input("IoFailure", format!("cannot create {}: {e}", root.display())))?;
        Ok(OutDir { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, bytes: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
        self.write_with(name, |w| w.write_all(bytes.as_ref()))
    }

    /// Streams into the temporary file through `fill`.
    pub fn write_with(&self, name: &str, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<PathBuf, CliError> {
        let target = self.path(name);
        let fail = |e: &dyn std::fmt::Display| CliError::input("IoFailure", format!("writing {}: {e}", target.display()));
        let tmp = tempfile::Builder::new()
            .prefix(".taippg-")
            .permissions(std::fs::Permissions::from_mode(0o644))
            .tempfile_in(&self.root)
            .map_err(|e| fail(&e))?;
        {
            let mut w = BufWriter::new(tmp.as_file());
            fill(&mut w).map_err(|e| fail(&e))?;
            w.flush().map_err(|e| fail(&e))?;
        }
        tmp.persist(&target).map_err(|e| fail(&e.error))?;
        Ok(target)
    }
}
