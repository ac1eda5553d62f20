//! CSV output with a config digest line.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;

/// Fixed-width scientific notation so equal runs give equal bytes.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.16e}")
    }
}

pub struct Csv {
    name: &'static str,
    header: Vec<&'static str>,
    comments: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(name: &'static str, header: &[&'static str]) -> Self {
        Self { name, header: header.to_vec(), comments: Vec::new(), rows: Vec::new() }
    }

    pub fn comment(&mut self, text: impl Into<String>) {
        self.comments.push(text.into());
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn render(&self, digest: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# config-sha256: {digest}");
        for c in &self.comments {
            let _ = writeln!(s, "# {c}");
        }
        let _ = writeln!(s, "{}", self.header.join(","));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }

    pub fn write(&self, dir: &Path, digest: &str) -> anyhow::Result<PathBuf> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(format!("{}.csv", self.name));
        std::fs::write(&path, self.render(digest)).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
