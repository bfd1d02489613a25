//! Output manifests: every pipeline ends by listing its files with sizes and
//! FNV-1a content hashes, sorted by name.

use infogame_core::io::{fnv1a64, write_csv};
use infogame_core::Result;
use std::path::{Path, PathBuf};

#[derive(Debug, Default)]
pub struct Manifest {
    files: Vec<PathBuf>,
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record<P: Into<PathBuf>>(&mut self, path: P) {
        self.files.push(path.into());
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    /// Write `manifest.csv` in `dir` covering all recorded files.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let mut rows: Vec<Vec<String>> = Vec::with_capacity(self.files.len());
        let mut sorted = self.files.clone();
        sorted.sort();
        for file in &sorted {
            let bytes = std::fs::read(file)?;
            let name = file
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            rows.push(vec![
                name,
                bytes.len().to_string(),
                format!("{:016x}", fnv1a64(&bytes)),
            ]);
        }
        let path = dir.join("manifest.csv");
        write_csv(&path, &["file", "bytes", "fnv1a64"], &rows)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_files_sorted_with_hashes() {
        let dir = std::env::temp_dir().join("infogame_manifest_test");
        std::fs::create_dir_all(&dir).unwrap();
        let b = dir.join("b.csv");
        let a = dir.join("a.csv");
        std::fs::write(&b, "x\n1\n").unwrap();
        std::fs::write(&a, "y\n2\n").unwrap();
        let mut m = Manifest::new();
        m.record(&b);
        m.record(&a);
        let path = m.write(&dir).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "file,bytes,fnv1a64");
        assert!(lines[1].starts_with("a.csv,4,"));
        assert!(lines[2].starts_with("b.csv,4,"));
        std::fs::remove_dir_all(&dir).ok();
    }
}
