//! Tables, their CSV/JSON/gnuplot renderings, and an output directory that
//! deletes whatever it wrote unless the run completes.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::config::{ExperimentConfig, Format};

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Table {
        Table { name: name.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Everything an experiment produces before it touches the disk.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub summary: Value,
    pub tables: Vec<Table>,
    /// Whitespace-separated series for gnuplot.
    pub dat: Option<Table>,
    pub pass: bool,
    /// Human-readable summary for the terminal.
    pub lines: Vec<String>,
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn header_lines(cfg: &ExperimentConfig, hash: &str) -> Vec<String> {
    let (label, spec) = match &cfg.matrix {
        Some(m) => (m.to_string(), m.to_json()),
        None => ("none".to_string(), "null".to_string()),
    };
    vec![
        format!("# stripcs {} {}", cfg.kind, env!("CARGO_PKG_VERSION")),
        format!("# matrix: {label}"),
        format!("# spec: {spec}"),
        format!("# seed: {}", cfg.seed),
        format!("# config_hash: {hash}"),
    ]
}

/// CSV with comment header; every row starts with the config hash.
pub fn render_csv(table: &Table, cfg: &ExperimentConfig, hash: &str) -> io::Result<Vec<u8>> {
    let mut out = header_lines(cfg, hash).join("\n").into_bytes();
    out.push(b'\n');
    let mut w = csv::Writer::from_writer(out);
    let mut head = vec!["config_hash".to_string()];
    head.extend(table.columns.iter().cloned());
    w.write_record(&head)?;
    for row in &table.rows {
        let mut rec = vec![hash.to_string()];
        rec.extend(row.iter().map(cell));
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| io::Error::other(e.to_string()))
}

pub fn render_json(table: &Table, cfg: &ExperimentConfig, hash: &str) -> Vec<u8> {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|row| {
            let mut obj = Map::new();
            obj.insert("config_hash".into(), Value::String(hash.to_string()));
            for (k, v) in table.columns.iter().zip(row) {
                obj.insert(k.clone(), v.clone());
            }
            Value::Object(obj)
        })
        .collect();
    let doc = json!({
        "matrix": cfg.matrix.as_ref().map(|m| m.to_string()),
        "spec": cfg.matrix,
        "seed": cfg.seed,
        "config_hash": hash,
        "columns": table.columns,
        "rows": rows,
    });
    let mut bytes = serde_json::to_vec_pretty(&doc).expect("table serializes");
    bytes.push(b'\n');
    bytes
}

pub fn render_dat(table: &Table, cfg: &ExperimentConfig, hash: &str) -> Vec<u8> {
    let mut lines = header_lines(cfg, hash);
    lines.push(format!("# {}", table.columns.join(" ")));
    for row in &table.rows {
        lines.push(row.iter().map(|v| if v.is_null() { "nan".to_string() } else { cell(v) }).collect::<Vec<_>>().join(" "));
    }
    let mut s = lines.join("\n");
    s.push('\n');
    s.into_bytes()
}

/// Files written into an output directory; removed on drop unless committed.
pub struct OutputDir {
    dir: PathBuf,
    created: bool,
    written: Vec<PathBuf>,
    committed: bool,
}

impl OutputDir {
    pub fn open(dir: &Path) -> io::Result<OutputDir> {
        let created = !dir.exists();
        fs::create_dir_all(dir)?;
        Ok(OutputDir { dir: dir.to_path_buf(), created, written: Vec::new(), committed: false })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> io::Result<PathBuf> {
        let path = self.dir.join(name);
        self.written.push(path.clone());
        fs::write(&path, bytes)?;
        Ok(path)
    }

    pub fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
        if self.created {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

/// Writes `summary.json`, the tables in the configured format, and the `.dat` series.
pub fn write_outcome(outcome: &Outcome, cfg: &ExperimentConfig, hash: &str) -> io::Result<Vec<PathBuf>> {
    let mut dir = OutputDir::open(&cfg.out)?;
    for table in &outcome.tables {
        match cfg.format {
            Format::Csv => dir.write(&format!("{}.csv", table.name), &render_csv(table, cfg, hash)?)?,
            Format::Json => dir.write(&format!("{}.json", table.name), &render_json(table, cfg, hash))?,
        };
    }
    if let Some(dat) = &outcome.dat {
        dir.write(&format!("{}.dat", dat.name), &render_dat(dat, cfg, hash))?;
    }
    let mut summary = serde_json::to_vec_pretty(&outcome.summary).map_err(io::Error::other)?;
    summary.push(b'\n');
    dir.write("summary.json", &summary)?;
    Ok(dir.commit())
}
