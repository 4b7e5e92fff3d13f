use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::hilbert::LEAKAGE_LIMIT;
use crate::scenarios::EvolutionRecord;

/// Shortest decimal string that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// One CSV table rendered in memory.
pub struct Table {
    pub name: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> csv::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| e.into_error().into())
    }
}

#[derive(Debug, Default, Clone, Copy, Serialize)]
pub struct LeakageSummary {
    pub limit: f64,
    pub max_leakage: f64,
    pub max_boundary_weight: f64,
    pub flagged: bool,
}

impl LeakageSummary {
    pub fn none() -> Self {
        Self { limit: LEAKAGE_LIMIT, ..Self::default() }
    }

    pub fn absorb(&mut self, rec: &EvolutionRecord) {
        let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        self.max_leakage = self.max_leakage.max(max(&rec.leakage));
        self.max_boundary_weight = self.max_boundary_weight.max(max(&rec.boundary_weight));
        self.flagged |= rec.flagged();
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: serde_json::Value,
    /// sha256 of each input file.
    pub inputs: BTreeMap<String, String>,
    /// sha256 of each output file written next to this manifest.
    pub outputs: BTreeMap<String, String>,
    pub wall_clock_s: f64,
    pub leakage: LeakageSummary,
}

/// Writes every table plus `<stem>.manifest.json` into `dir`. If any write
/// fails, files already written by this call are removed.
pub fn emit(dir: &Path, stem: &str, tables: &[Table], mut manifest: RunManifest) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut rendered = Vec::with_capacity(tables.len() + 1);
    for t in tables {
        let bytes = t.render().map_err(std::io::Error::other)?;
        manifest.outputs.insert(format!("{}.csv", t.name), sha256_hex(&bytes));
        rendered.push((dir.join(format!("{}.csv", t.name)), bytes));
    }
    let mut json = serde_json::to_vec_pretty(&manifest).map_err(std::io::Error::other)?;
    json.push(b'\n');
    rendered.push((dir.join(format!("{stem}.manifest.json")), json));

    let mut written = Vec::with_capacity(rendered.len());
    for (path, bytes) in rendered {
        if let Err(e) = fs::write(&path, bytes) {
            let _ = fs::remove_file(&path);
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(e);
        }
        written.push(path);
    }
    Ok(written)
}

/// Time series table: one row per time with mean occupations and
/// bookkeeping columns. Each record's rows start with its key values.
pub fn series_table(name: &str, keys: &[&str], recs: &[(&[String], &EvolutionRecord)], extra: &[&str]) -> Table {
    let mut header: Vec<&str> = keys.to_vec();
    header.extend(["time_s", "xi_tau", "n_a", "n_b", "n_c", "norm", "leakage", "boundary_weight"]);
    header.extend(extra);
    Table::new(name, &header).with_rows(recs)
}

impl Table {
    fn with_rows(mut self, recs: &[(&[String], &EvolutionRecord)]) -> Self {
        for (prefix, rec) in recs {
            for i in 0..rec.times.len() {
                let mut row: Vec<String> = prefix.to_vec();
                row.push(fmt_f64(rec.times[i]));
                row.push(fmt_f64(rec.times[i] * rec.xi));
                row.extend(rec.means[i].iter().map(|&m| fmt_f64(m)));
                row.push(fmt_f64(rec.norms[i]));
                row.push(fmt_f64(rec.leakage[i]));
                row.push(fmt_f64(rec.boundary_weight[i]));
                self.rows.push(row);
            }
        }
        self
    }

    /// Appends `cols[i]` to row `i`; used for per-row derived columns.
    pub fn append_columns(&mut self, cols: &[Vec<String>]) {
        for (row, extra) in self.rows.iter_mut().zip(cols) {
            row.extend(extra.iter().cloned());
        }
    }
}

/// Long-format phonon-number distributions: `time_s, mode, n, p`.
pub fn populations_table(name: &str, keys: &[&str], recs: &[(&[String], &EvolutionRecord)]) -> Table {
    let mut header: Vec<&str> = keys.to_vec();
    header.extend(["time_s", "mode", "n", "p"]);
    let mut t = Table::new(name, &header);
    for (prefix, rec) in recs {
        for (i, dists) in rec.distributions.iter().enumerate() {
            for d in dists {
                for (n, &p) in d.probabilities().iter().enumerate() {
                    let mut row = prefix.to_vec();
                    row.extend([fmt_f64(rec.times[i]), d.mode().to_string(), n.to_string(), fmt_f64(p)]);
                    t.push(row);
                }
            }
        }
    }
    t
}

/// Weight of each initially occupied sector over time, long format.
pub fn sectors_table(name: &str, keys: &[&str], recs: &[(&[String], &EvolutionRecord)]) -> Table {
    let mut header: Vec<&str> = keys.to_vec();
    header.extend(["time_s", "n1", "n2", "weight"]);
    let mut t = Table::new(name, &header);
    for (prefix, rec) in recs {
        for (i, weights) in rec.sector_weights.iter().enumerate() {
            for (&(n1, n2), &w) in rec.sector_labels.iter().zip(weights) {
                let mut row = prefix.to_vec();
                row.extend([fmt_f64(rec.times[i]), n1.to_string(), n2.to_string(), fmt_f64(w)]);
                t.push(row);
            }
        }
    }
    t
}
