//! Output files that are removed again if the command fails.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

pub struct Outputs {
    dir: Option<PathBuf>,
    created_dir: bool,
    written: Vec<PathBuf>,
}

impl Outputs {
    pub fn in_dir(dir: &Path) -> Result<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Outputs { dir: Some(dir.to_path_buf()), created_dir, written: Vec::new() })
    }

    pub fn files() -> Self {
        Outputs { dir: None, created_dir: false, written: Vec::new() }
    }

    pub fn write<F>(&mut self, name: &str, body: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
    {
        let path = self.dir.as_ref().expect("directory outputs").join(name);
        self.write_path(&path, body)
    }

    pub fn write_path<F>(&mut self, path: &Path, body: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
    {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        self.written.push(path.to_path_buf());
        let mut w = BufWriter::new(file);
        body(&mut w).and_then(|_| w.flush()).with_context(|| format!("writing {}", path.display()))
    }

    /// Removes everything written so far, and the directory if this run
    /// created it.
    pub fn discard(&mut self) {
        for p in self.written.drain(..) {
            let _ = fs::remove_file(p);
        }
        if let (Some(dir), true) = (&self.dir, self.created_dir) {
            let _ = fs::remove_dir(dir);
        }
    }
}
