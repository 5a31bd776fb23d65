//! CSV rows, parameter hashing, atomic file writes and run manifests.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use d2d_core::metrics::Estimate;
use d2d_core::params::UnitStyle;
use d2d_core::{Engine, NetworkParams, Protocol, ProtocolMetrics};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Keys echoed in every row before the optional swept column.
pub const LEAD_COLUMNS: [&str; 3] = ["zeta_A", "alpha", "mu"];
pub const TAIL_COLUMNS: [&str; 12] = [
    "protocol", "engine", "B", "O", "C", "T", "O_err", "C_err", "T_err", "status", "seed",
    "param_hash",
];

/// Outcome of one engine evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    LowConfidence,
    Nonconverged,
    Failed,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::LowConfidence => "low_confidence",
            Status::Nonconverged => "nonconverged",
            Status::Failed => "failed",
        }
    }

    /// Statuses that make the run exit with the non-convergence code.
    pub fn is_numeric_failure(self) -> bool {
        matches!(self, Status::Nonconverged | Status::Failed)
    }
}

/// One output row. Metrics that were not evaluated are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub zeta_a: f64,
    pub alpha: f64,
    pub mu: f64,
    pub swept: Option<(String, f64)>,
    pub protocol: Protocol,
    pub engine: Engine,
    pub b: Option<f64>,
    pub o: Option<f64>,
    pub c: Option<f64>,
    pub t: Option<f64>,
    pub o_err: Option<f64>,
    pub c_err: Option<f64>,
    pub t_err: Option<f64>,
    pub status: Status,
    pub seed: u64,
    pub param_hash: String,
    /// Diagnostics, kept out of the CSV body.
    pub messages: Vec<String>,
    pub wall_seconds: f64,
}

impl Row {
    pub fn new(params: &NetworkParams, protocol: Protocol, engine: Engine, seed: u64) -> Self {
        Row {
            zeta_a: params.density_a,
            alpha: params.repulsion.alpha(),
            mu: params.path_loss,
            swept: None,
            protocol,
            engine,
            b: None,
            o: None,
            c: None,
            t: None,
            o_err: None,
            c_err: None,
            t_err: None,
            status: Status::Failed,
            seed,
            param_hash: param_hash(params),
            messages: Vec::new(),
            wall_seconds: 0.0,
        }
    }

    pub fn fill_outage(&mut self, b: Estimate, o: Estimate) {
        self.b = Some(b.value);
        self.o = Some(o.value);
        self.o_err = Some(o.error);
        self.status = Status::Ok;
    }

    pub fn fill(&mut self, m: &ProtocolMetrics, with_coverage: bool) {
        self.b = Some(m.b);
        self.o = Some(m.o);
        self.o_err = Some(m.errors.o);
        if with_coverage {
            self.c = Some(m.c);
            self.t = Some(m.t);
            self.c_err = Some(m.errors.c);
            self.t_err = Some(m.errors.t);
        }
        self.messages = m.issues.clone();
        self.status = if !m.converged() {
            Status::Nonconverged
        } else if m.low_confidence {
            Status::LowConfidence
        } else {
            Status::Ok
        };
    }
}

/// Header for rows whose swept key is `swept` (if not a lead column).
pub fn header(swept: Option<&str>) -> String {
    let mut cols: Vec<&str> = LEAD_COLUMNS.to_vec();
    if let Some(k) = swept.filter(|k| !LEAD_COLUMNS.contains(k)) {
        cols.push(k);
    }
    cols.extend(TAIL_COLUMNS);
    cols.join(",")
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:?}"))
}

/// Renders rows under a single header; all rows must share the swept key.
pub fn render_csv(swept: Option<&str>, rows: &[Row]) -> String {
    let mut out = header(swept);
    out.push('\n');
    for r in rows {
        let mut fields = vec![format!("{:?}", r.zeta_a), format!("{:?}", r.alpha), format!("{:?}", r.mu)];
        if let Some((_, v)) = &r.swept {
            fields.push(format!("{v:?}"));
        }
        fields.extend([
            r.protocol.as_str().to_string(),
            r.engine.as_str().to_string(),
            cell(r.b),
            cell(r.o),
            cell(r.c),
            cell(r.t),
            cell(r.o_err),
            cell(r.c_err),
            cell(r.t_err),
            r.status.as_str().to_string(),
            r.seed.to_string(),
            r.param_hash.clone(),
        ]);
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// First 16 hex digits of the SHA-256 of the canonical SI rendering.
pub fn param_hash(params: &NetworkParams) -> String {
    let digest = Sha256::digest(params.to_raw(UnitStyle::Si).render().as_bytes());
    digest[..8].iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Writes `contents` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

/// Per-row provenance kept out of the CSV body.
#[derive(Debug, Serialize)]
pub struct RowRecord {
    pub file: String,
    pub line: usize,
    pub protocol: &'static str,
    pub engine: &'static str,
    pub status: Status,
    pub wall_seconds: f64,
    pub messages: Vec<String>,
}

impl RowRecord {
    pub fn from_rows(file: &str, rows: &[Row]) -> Vec<RowRecord> {
        rows.iter()
            .enumerate()
            .map(|(i, r)| RowRecord {
                file: file.to_string(),
                line: i + 2,
                protocol: r.protocol.as_str(),
                engine: r.engine.as_str(),
                status: r.status,
                wall_seconds: r.wall_seconds,
                messages: r.messages.clone(),
            })
            .collect()
    }
}

/// One CSV written by a run.
#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub file: String,
    pub label: String,
    pub swept_key: String,
    pub grid: Vec<f64>,
    pub overrides: BTreeMap<String, f64>,
}

/// Provenance JSON written next to the CSV files.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub created_unix: u64,
    pub id: String,
    pub description: String,
    pub seed: u64,
    pub trials: u64,
    pub engines: Vec<&'static str>,
    pub strict_appendix: bool,
    pub base_parameters: BTreeMap<String, String>,
    pub base_param_hash: String,
    pub files: Vec<FileEntry>,
    pub rows: Vec<RowRecord>,
}

impl Manifest {
    pub fn new(id: &str, description: &str, base: &NetworkParams, seed: u64, trials: u64, engines: &[Engine]) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            id: id.to_string(),
            description: description.to_string(),
            seed,
            trials,
            engines: engines.iter().map(|e| e.as_str()).collect(),
            strict_appendix: base.strict_appendix,
            base_parameters: base.to_raw(UnitStyle::Si).entries,
            base_param_hash: param_hash(base),
            files: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        text.push('\n');
        write_atomic(path, text.as_bytes())
    }
}
