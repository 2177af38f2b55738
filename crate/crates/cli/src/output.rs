use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use clap::ValueEnum;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

/// A rendered report: a heading line, key/value summary and an optional table.
#[derive(Default)]
pub struct Report {
    pub heading: Option<String>,
    pub fields: Vec<(String, String)>,
    pub table: Option<(Vec<String>, Vec<Vec<String>>)>,
    pub json: Value,
}

impl Report {
    pub fn field(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.fields.push((key.to_string(), value.to_string()));
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("serializable");
                s.push('\n');
                s
            }
            Format::Csv => match &self.table {
                Some((head, rows)) => {
                    let mut s = head.join(",") + "\n";
                    for r in rows {
                        s += &r.join(",");
                        s.push('\n');
                    }
                    s
                }
                None => {
                    let mut s = String::from("key,value\n");
                    for (k, v) in &self.fields {
                        let _ = writeln!(s, "{k},{v}");
                    }
                    s
                }
            },
            Format::Table => {
                let mut s = String::new();
                if let Some(h) = &self.heading {
                    s += h;
                    s.push('\n');
                }
                let w = self.fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                for (k, v) in &self.fields {
                    let _ = writeln!(s, "{k:<w$}  {v}");
                }
                if let Some((head, rows)) = &self.table {
                    if !self.fields.is_empty() {
                        s.push('\n');
                    }
                    s += &aligned(head, rows);
                }
                s
            }
        }
    }
}

fn aligned(head: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = head.iter().map(String::len).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: &[String]| {
        let mut s = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ");
        s.push('\n');
        s
    };
    let mut s = line(head);
    for r in rows {
        s += &line(r);
    }
    s
}

pub fn emit(text: &str, out: Option<&Path>) -> io::Result<()> {
    match out {
        Some(p) => fs::write(p, text),
        None => io::stdout().write_all(text.as_bytes()),
    }
}

pub fn vector(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ")
}
