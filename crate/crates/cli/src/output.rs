//! CSV tables with a `#`-prefixed metadata header.

use std::io::Write;

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// `# key: value` lines, in order.
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            meta: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of column `name` parsed as numbers; empty cells become NaN.
    pub fn numbers(&self, name: &str) -> Result<Vec<f64>> {
        let j = self
            .column(name)
            .with_context(|| format!("no column {name}"))?;
        self.rows
            .iter()
            .map(|r| {
                if r[j].is_empty() {
                    Ok(f64::NAN)
                } else {
                    r[j].parse()
                        .with_context(|| format!("bad number {:?} in {name}", r[j]))
                }
            })
            .collect()
    }

    pub fn write(&self, out: impl Write) -> Result<()> {
        let mut out = out;
        for (k, v) in &self.meta {
            writeln!(out, "# {k}: {v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn render(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(String::from_utf8(buf)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut meta = Vec::new();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            let body = line.trim_start_matches('#').trim();
            match body.split_once(':') {
                Some((k, v)) => meta.push((k.trim().to_string(), v.trim().to_string())),
                None => meta.push((body.to_string(), String::new())),
            }
        }
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let columns: Vec<String> = r.headers()?.iter().map(String::from).collect();
        if columns.is_empty() {
            bail!("table has no header row");
        }
        let rows = r
            .records()
            .map(|rec| Ok(rec?.iter().map(String::from).collect()))
            .collect::<Result<Vec<Vec<String>>>>()?;
        Ok(Self {
            meta,
            columns,
            rows,
        })
    }
}

/// Shortest representation that parses back to the same value; NaN is an
/// empty cell.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Matplotlib script that plots every numeric column of `csv` against the
/// first one.
pub fn plot_script(csv: &str, x: &str, ys: &[String], log_y: bool) -> String {
    let ys: Vec<String> = ys.iter().map(|y| format!("{y:?}")).collect();
    format!(
        r##"import csv
import matplotlib.pyplot as plt

rows = list(csv.DictReader(l for l in open({csv:?}) if not l.startswith("#")))
x = {x:?}
keys = [k for k in rows[0] if k not in (x, "detector", "prior", "error")] if rows else []
groups = sorted({{(r.get("prior", ""), r.get("detector", "")) for r in rows}})
for y in [{ys}] or keys:
    for g in groups:
        sel = [r for r in rows if (r.get("prior", ""), r.get("detector", "")) == g and r[y] != ""]
        if sel:
            plt.plot([float(r[x]) for r in sel], [float(r[y]) for r in sel], marker=".", label=" ".join(filter(None, (*g, y))))
plt.xlabel(x)
{log}plt.legend()
plt.grid(True, alpha=0.3)
plt.savefig({png:?}, dpi=150)
"##,
        ys = ys.join(", "),
        log = if log_y { "plt.yscale(\"log\")\n" } else { "" },
        png = format!("{}.png", csv.trim_end_matches(".csv")),
    )
}
