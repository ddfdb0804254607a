//! Structured-text reports: nested key-value sections with arrays, rendered
//! deterministically so two runs with the same seed produce byte-identical
//! documents. Floating-point values are serialized with 17 significant
//! digits and round-trip through f64.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;

#[derive(Clone, Debug, Default)]
pub struct Section {
    items: Vec<Item>,
}

#[derive(Clone, Debug)]
enum Item {
    Entry(String, String),
    Child(String, Section),
    Records(String, Vec<Section>),
}

/// 17 significant digits; parses back to the identical f64.
pub fn fmt_f64(value: f64) -> String {
    format!("{value:.16e}")
}

impl Section {
    pub fn new() -> Section {
        Section::default()
    }

    pub fn put(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.items.push(Item::Entry(key.to_string(), value.to_string()));
        self
    }

    pub fn put_f64(&mut self, key: &str, value: f64) -> &mut Self {
        self.put(key, fmt_f64(value))
    }

    pub fn put_floats(&mut self, key: &str, values: &[f64]) -> &mut Self {
        let joined = values.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(", ");
        self.put(key, format!("[{joined}]"))
    }

    pub fn child(&mut self, key: &str) -> &mut Section {
        self.items.push(Item::Child(key.to_string(), Section::new()));
        match self.items.last_mut() {
            Some(Item::Child(_, s)) => s,
            _ => unreachable!(),
        }
    }

    /// Append a record to the named array, creating the array on first use.
    pub fn record(&mut self, key: &str) -> &mut Section {
        let needs_new = !matches!(self.items.last(), Some(Item::Records(k, _)) if k == key);
        if needs_new {
            self.items.push(Item::Records(key.to_string(), Vec::new()));
        }
        match self.items.last_mut() {
            Some(Item::Records(_, records)) => {
                records.push(Section::new());
                records.last_mut().unwrap()
            }
            _ => unreachable!(),
        }
    }

    fn render_into(&self, out: &mut String, indent: usize) {
        let pad = "  ".repeat(indent);
        for item in &self.items {
            match item {
                Item::Entry(k, v) => {
                    out.push_str(&format!("{pad}{k} = {v}\n"));
                }
                Item::Child(k, s) => {
                    out.push_str(&format!("{pad}{k}:\n"));
                    s.render_into(out, indent + 1);
                }
                Item::Records(k, records) => {
                    out.push_str(&format!("{pad}{k}:\n"));
                    for r in records {
                        out.push_str(&format!("{pad}  -\n"));
                        r.render_into(out, indent + 2);
                    }
                }
            }
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out, 0);
        out
    }
}

/// A finished run: a deterministic body plus the one line that legitimately
/// differs between repeat runs.
#[derive(Clone, Debug)]
pub struct Document {
    pub body: Section,
    pub wall_time_ms: u128,
}

impl Document {
    pub fn new(body: Section, wall_time_ms: u128) -> Document {
        Document { body, wall_time_ms }
    }

    /// Everything except the wall-time line; byte-identical across repeat
    /// runs with the same seed.
    pub fn render_deterministic(&self) -> String {
        self.body.render()
    }

    pub fn render(&self) -> String {
        format!(
            "{}wall_time_ms = {}\n",
            self.body.render(),
            self.wall_time_ms
        )
    }

    pub fn write_to(&self, dir: &Path, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(name);
        fs::write(&path, self.render())?;
        Ok(path)
    }
}
