//! Collect artifacts in memory, then write them all or none.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use cyclekit_core::report::{Table, STAR_NOTE};

use crate::Format;

pub enum Body {
    /// Rendered in the requested format.
    Table(Table),
    /// Regression table; Markdown output gets the significance note.
    Regression(Table),
    /// Always CSV (plot data, panels).
    Csv(Table),
    Text(String),
}

pub struct Artifact {
    pub stem: String,
    pub body: Body,
}

impl Artifact {
    pub fn table(stem: &str, t: Table) -> Self {
        Artifact { stem: stem.into(), body: Body::Table(t) }
    }

    pub fn regression(stem: &str, t: Table) -> Self {
        Artifact { stem: stem.into(), body: Body::Regression(t) }
    }

    pub fn csv(stem: &str, t: Table) -> Self {
        Artifact { stem: stem.into(), body: Body::Csv(t) }
    }

    pub fn text(stem: &str, s: String) -> Self {
        Artifact { stem: stem.into(), body: Body::Text(s) }
    }

    fn render(&self, format: Format) -> (String, &'static str) {
        match (&self.body, format) {
            (Body::Table(t), Format::Markdown) => (t.to_markdown(), "md"),
            (Body::Regression(t), Format::Markdown) => (format!("{}\n{STAR_NOTE}\n", t.to_markdown()), "md"),
            (Body::Table(t) | Body::Regression(t) | Body::Csv(t), _) => (t.to_csv_string(), "csv"),
            (Body::Text(s), _) => (s.clone(), "csv"),
        }
    }
}

/// Without a directory only the first artifact is printed. With one, every
/// artifact is written; if any write fails the files already written are
/// removed.
pub fn emit(artifacts: &[Artifact], format: Format, out_dir: Option<&Path>) -> Result<()> {
    let Some(dir) = out_dir else {
        if let Some(a) = artifacts.first() {
            let (s, _) = a.render(format);
            std::io::stdout().lock().write_all(s.as_bytes()).context("writing to stdout")?;
            if artifacts.len() > 1 {
                log::info!("{} further artifacts need --out-dir", artifacts.len() - 1);
            }
        }
        return Ok(());
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written: Vec<PathBuf> = Vec::new();
    for a in artifacts {
        let (s, ext) = a.render(format);
        let path = dir.join(format!("{}.{ext}", a.stem));
        if let Err(e) = fs::write(&path, s) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(e).with_context(|| format!("writing {}", path.display()));
        }
        written.push(path);
    }
    Ok(())
}
