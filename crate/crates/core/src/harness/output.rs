use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Files of one run, held in memory until they are committed together.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_owned(), bytes));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b.as_slice())
    }

    /// Writes every file into a fresh sibling directory and renames it to
    /// `out`, so readers never see a partly written result. `out` may be
    /// absent or an empty directory.
    pub fn commit(&self, out: &Path) -> Result<()> {
        check_target(out)?;
        let parent = match out.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent)?;
        let name = out
            .file_name()
            .ok_or_else(|| Error::config(format!("invalid output path {}", out.display())))?;
        let staging = parent.join(format!(
            ".{}.partial-{}",
            name.to_string_lossy(),
            std::process::id()
        ));
        let result = (|| {
            fs::create_dir(&staging)?;
            for (file, bytes) in &self.files {
                fs::write(staging.join(file), bytes)?;
            }
            if out.exists() {
                fs::remove_dir(out)?;
            }
            fs::rename(&staging, out)?;
            Ok(())
        })();
        if result.is_err() {
            let _ = fs::remove_dir_all(&staging);
        }
        result
    }
}

/// Refuses anything but a missing path or an empty directory.
pub fn check_target(out: &Path) -> Result<()> {
    if !out.exists() {
        return Ok(());
    }
    if !out.is_dir() || fs::read_dir(out)?.next().is_some() {
        return Err(Error::config(format!(
            "output path {} exists and is not an empty directory",
            out.display()
        )));
    }
    Ok(())
}

/// CSV text: a `#` comment line, a header row, then `rows`.
pub fn csv(comment: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut s = String::new();
    let _ = writeln!(s, "# {comment}");
    let _ = writeln!(s, "{}", header.join(","));
    for row in rows {
        let _ = writeln!(s, "{}", row.join(","));
    }
    s.into_bytes()
}

/// Shortest round-trip formatting, fixed across platforms.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "nan".to_owned()
    }
}
