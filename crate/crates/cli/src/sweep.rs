//! One-dimensional parameter sweeps.

use std::path::PathBuf;

use d2d_core::{validate, Engine, NetworkParams, Protocol};

use crate::evaluate::{evaluate_tasks, EvalOptions, MetricSet, Task};
use crate::output::{render_csv, write_atomic, FileEntry, Manifest, Row, RowRecord};
use crate::CliError;

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub key: String,
    pub grid: Vec<f64>,
    pub protocols: Vec<Protocol>,
    pub engines: Vec<Engine>,
    pub n_trials: u64,
    pub seed: u64,
    /// Directory receiving `sweep_<key>.csv` and its manifest.
    pub out: Option<PathBuf>,
    pub figure: Option<String>,
}

/// Parses `KEY=START:STOP:N` into a key and `N` evenly spaced values.
pub fn parse_sweep(arg: &str) -> Result<(String, Vec<f64>), CliError> {
    let bad = |why: &str| CliError::InvalidSweep(format!("{arg:?}: {why}"));
    let (key, range) = arg.split_once('=').ok_or_else(|| bad("expected KEY=START:STOP:N"))?;
    let parts: Vec<&str> = range.split(':').collect();
    let [start, stop, n] = parts[..] else {
        return Err(bad("expected KEY=START:STOP:N"));
    };
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("START and STOP must be numbers"));
    let (start, stop) = (num(start)?, num(stop)?);
    let n: usize = n.trim().parse().map_err(|_| bad("N must be a non-negative integer"))?;
    Ok((key.trim().to_string(), linspace(start, stop, n)))
}

/// `n` evenly spaced values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    stop
                } else {
                    start + (stop - start) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

impl SweepSpec {
    /// Checks the grid and key, returning the validated parameters for each
    /// grid value.
    pub fn tasks(&self, base: &NetworkParams) -> Result<Vec<Task>, CliError> {
        if self.grid.is_empty() {
            return Err(CliError::InvalidSweep("empty grid".into()));
        }
        if self.grid.iter().any(|v| !v.is_finite()) {
            return Err(CliError::InvalidSweep("grid values must be finite".into()));
        }
        if self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::InvalidSweep("grid must be strictly increasing".into()));
        }
        if self.protocols.is_empty() || self.engines.is_empty() {
            return Err(CliError::InvalidSweep("no protocol or engine selected".into()));
        }
        base.get(&self.key)?;
        self.grid
            .iter()
            .map(|&v| {
                let mut p = base.clone();
                p.set(&self.key, v, true)?;
                Ok(Task {
                    params: validate(p)?,
                    swept: Some((self.key.clone(), v)),
                    protocols: self.protocols.clone(),
                })
            })
            .collect()
    }

    fn options(&self, metrics: MetricSet) -> EvalOptions {
        EvalOptions {
            engines: self.engines.clone(),
            n_trials: self.n_trials,
            seed: self.seed,
            metrics,
            trace_dir: None,
            node_dir: None,
        }
    }
}

/// Evaluates every (grid value, protocol, engine) combination in grid order
/// and writes the table if `spec.out` is set.
pub fn run_experiment(spec: &SweepSpec, base: &NetworkParams) -> Result<Vec<Row>, CliError> {
    run_experiment_with(spec, base, &spec.options(MetricSet::All))
}

/// [`run_experiment`] with explicit evaluation options; the engines, trials
/// and seed of `spec` take precedence.
pub fn run_experiment_with(spec: &SweepSpec, base: &NetworkParams, opts: &EvalOptions) -> Result<Vec<Row>, CliError> {
    let tasks = spec.tasks(base)?;
    let opts = EvalOptions {
        trace_dir: opts.trace_dir.clone(),
        node_dir: opts.node_dir.clone(),
        ..spec.options(opts.metrics)
    };
    let rows: Vec<Row> = evaluate_tasks(&tasks, &opts).into_iter().flatten().collect();
    if let Some(dir) = &spec.out {
        let name = format!("sweep_{}.csv", spec.key);
        let csv = render_csv(Some(&spec.key), &rows);
        let path = dir.join(&name);
        write_atomic(&path, csv.as_bytes()).map_err(|e| CliError::io(path.display().to_string(), e))?;
        let id = spec.figure.clone().unwrap_or_else(|| format!("sweep_{}", spec.key));
        let mut manifest = Manifest::new(&id, "", base, spec.seed, spec.n_trials, &spec.engines);
        manifest.files.push(FileEntry {
            file: name.clone(),
            label: spec.key.clone(),
            swept_key: spec.key.clone(),
            grid: spec.grid.clone(),
            overrides: Default::default(),
        });
        manifest.rows = RowRecord::from_rows(&name, &rows);
        let path = dir.join(format!("sweep_{}.json", spec.key));
        manifest.write(&path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    }
    Ok(rows)
}
