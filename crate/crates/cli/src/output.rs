use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ltcrank::report::{json_envelope, RunManifest, Table};
use serde::Serialize;

/// Writes report files for one command into the output directory.
pub struct Output {
    dir: PathBuf,
    pub manifest: RunManifest,
    written: Vec<PathBuf>,
}

impl Output {
    pub fn new(dir: &Path, manifest: RunManifest) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    pub fn csv(&mut self, name: &str, table: &Table) -> Result<()> {
        let text = table.to_csv(&self.manifest)?;
        self.write(name, &text)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, report: &T) -> Result<()> {
        let text = json_envelope(&self.manifest, report)?;
        self.write(name, &(text + "\n"))
    }

    /// An SVG carries the manifest minus its timestamp as a comment.
    pub fn svg(&mut self, name: &str, svg: &str) -> Result<()> {
        let comment = self.manifest.csv_preamble().replace("--", "- -");
        let text = svg.replacen('>', &format!(">\n<!--\n{comment}-->"), 1);
        self.write(name, &text)
    }

    pub fn raw(&mut self, name: &str, contents: &str) -> Result<()> {
        self.write(name, contents)
    }

    pub fn finish(self) {
        for path in self.written {
            println!("wrote {}", path.display());
        }
    }
}
