//! Evaluation of parameter points on the analytic and Monte Carlo engines.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use d2d_core::analytic::IncidentPowerDistribution;
use d2d_core::metrics::AnalyticEvaluator;
use d2d_core::monte_carlo::{estimate, write_trace};
use d2d_core::{Engine, Protocol, ValidatedParams};
use rayon::prelude::*;

use crate::output::{param_hash, Row, Status, LEAD_COLUMNS};

/// Which metrics the analytic engine evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricSet {
    All,
    /// `B` and `O` only; `C` and `T` are left empty for analytic rows.
    Outage,
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub engines: Vec<Engine>,
    pub n_trials: u64,
    pub seed: u64,
    pub metrics: MetricSet,
    /// Directory for per-trial Monte Carlo traces.
    pub trace_dir: Option<PathBuf>,
    /// Directory for the incident-power transform node tables.
    pub node_dir: Option<PathBuf>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            engines: vec![Engine::Analytic],
            n_trials: 100_000,
            seed: 1,
            metrics: MetricSet::All,
            trace_dir: None,
            node_dir: None,
        }
    }
}

/// One parameter point and the protocols to report at it.
#[derive(Debug, Clone)]
pub struct Task {
    pub params: ValidatedParams,
    pub swept: Option<(String, f64)>,
    pub protocols: Vec<Protocol>,
}

/// Evaluates every task; rows come back per task in protocol-then-engine
/// order. Tasks sharing a parameter set are evaluated once.
pub fn evaluate_tasks(tasks: &[Task], opts: &EvalOptions) -> Vec<Vec<Row>> {
    let mut groups: BTreeMap<String, (usize, Vec<Protocol>)> = BTreeMap::new();
    let hashes: Vec<String> = tasks.iter().map(|t| param_hash(&t.params)).collect();
    for (i, (task, hash)) in tasks.iter().zip(&hashes).enumerate() {
        let entry = groups.entry(hash.clone()).or_insert((i, Vec::new()));
        for &p in &task.protocols {
            if !entry.1.contains(&p) {
                entry.1.push(p);
            }
        }
    }
    let groups: Vec<(String, usize, Vec<Protocol>)> = groups
        .into_iter()
        .map(|(h, (i, p))| (h, i, p))
        .collect();
    let results: BTreeMap<String, Vec<Row>> = groups
        .par_iter()
        .map(|(hash, first, protocols)| {
            let task = &tasks[*first];
            (hash.clone(), evaluate_point(&task.params, protocols, opts))
        })
        .collect();
    tasks
        .iter()
        .zip(&hashes)
        .map(|(task, hash)| {
            let rows = &results[hash];
            task.protocols
                .iter()
                .flat_map(|&p| rows.iter().filter(move |r| r.protocol == p))
                .cloned()
                .map(|mut r| {
                    r.swept = task
                        .swept
                        .clone()
                        .filter(|(k, _)| !LEAD_COLUMNS.contains(&k.as_str()));
                    r
                })
                .collect()
        })
        .collect()
}

/// Evaluates `protocols` at one parameter point on every requested engine.
pub fn evaluate_point(params: &ValidatedParams, protocols: &[Protocol], opts: &EvalOptions) -> Vec<Row> {
    let mut rows = Vec::new();
    let with_coverage = opts.metrics == MetricSet::All;
    let analytic = opts.engines.contains(&Engine::Analytic);
    let dist = analytic.then(|| IncidentPowerDistribution::new(params));
    let evaluator = dist.as_ref().map(|d| AnalyticEvaluator::new(params, d));
    for &protocol in protocols {
        for &engine in &opts.engines {
            let mut row = Row::new(params, protocol, engine, opts.seed);
            let start = Instant::now();
            match engine {
                Engine::Analytic => {
                    let eval = evaluator.as_ref().expect("analytic evaluator");
                    let result = if with_coverage {
                        eval.protocol_metrics(protocol).map(|m| row.fill(&m, true))
                    } else {
                        eval.outage_metrics(protocol).map(|(b, o)| row.fill_outage(b, o))
                    };
                    if let Err(e) = result {
                        row.messages.push(e.to_string());
                    }
                }
                Engine::MonteCarlo => {
                    match estimate(params, protocol, opts.n_trials, opts.seed) {
                        Ok(m) => row.fill(&m, true),
                        Err(e) => row.messages.push(e.to_string()),
                    }
                    if let Some(dir) = &opts.trace_dir {
                        let path = dir.join(format!("trace_{}_{}.csv", row.param_hash, protocol.as_str()));
                        if let Err(e) = dump(path, |w| write_trace(params, protocol, opts.n_trials, opts.seed, w)) {
                            row.messages.push(format!("trace not written: {e}"));
                        }
                    }
                }
            }
            row.wall_seconds = start.elapsed().as_secs_f64();
            rows.push(row);
        }
    }
    if let Some(eval) = &evaluator {
        let issues: Vec<String> = eval.diagnostics().issues().iter().map(|e| e.to_string()).collect();
        for row in rows.iter_mut().filter(|r| r.engine == Engine::Analytic) {
            if !issues.is_empty() && row.status != Status::Failed {
                row.status = Status::Nonconverged;
                row.messages = issues.clone();
            }
        }
    }
    if let (Some(dir), Some(dist)) = (&opts.node_dir, &dist) {
        let path = dir.join(format!("nodes_{}.csv", param_hash(params)));
        let written = dump(path, |w| {
            writeln!(w, "s_re,s_im,L_re,L_im")?;
            for (s, l) in dist.node_table() {
                writeln!(w, "{:?},{:?},{:?},{:?}", s.re, s.im, l.re, l.im)?;
            }
            Ok(())
        });
        if let Err(e) = written {
            for row in rows.iter_mut().filter(|r| r.engine == Engine::Analytic) {
                row.messages.push(format!("node table not written: {e}"));
            }
        }
    }
    rows
}

fn dump(path: PathBuf, body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    body(&mut w)?;
    w.flush()
}
