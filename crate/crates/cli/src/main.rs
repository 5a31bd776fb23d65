use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use d2d_core::{normalize_config, validate, Engine, NetworkParams, Protocol, RawConfig};
use d2d_lab::evaluate::{evaluate_point, EvalOptions, MetricSet};
use d2d_lab::output::{render_csv, write_atomic, Manifest, RowRecord};
use d2d_lab::sweep::{parse_sweep, run_experiment_with, SweepSpec};
use d2d_lab::{emit_figure_dataset, exit_code, CliError, Row};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    Analytic,
    Mc,
    Both,
}

#[derive(Debug, Parser)]
#[command(name = "d2dlab", version, about = "Outage, coverage and throughput of hybrid backscatter/HTT D2D links")]
struct Args {
    /// `key = value` parameter file; the reference parameters are used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated protocols: ptp, stp, pure-bs, pure-htt.
    #[arg(long, value_delimiter = ',')]
    protocol: Vec<Protocol>,
    /// Engine; figures default to both, everything else to analytic.
    #[arg(long, value_enum)]
    engine: Option<EngineArg>,
    /// Sweep one parameter over KEY=START:STOP:N.
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Comma-separated figure ids (fig3..fig13).
    #[arg(long, value_delimiter = ',')]
    figure: Vec<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the literal appendix forms of the interference prefactor and the
    /// backscatter circuit threshold.
    #[arg(long)]
    strict_appendix: bool,
    /// Write per-trial Monte Carlo traces under `<out>/traces`.
    #[arg(long)]
    dump_traces: bool,
    /// Write the transform node tables under `<out>/nodes`.
    #[arg(long)]
    dump_nodes: bool,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    workers: Option<usize>,
}

fn load_base(args: &Args) -> Result<NetworkParams, CliError> {
    let mut base = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
            normalize_config(&RawConfig::parse(&text)?)?
        }
        None => NetworkParams::table_one(),
    };
    base.strict_appendix |= args.strict_appendix;
    Ok(base)
}

fn engines(arg: Option<EngineArg>, default: EngineArg) -> Vec<Engine> {
    match arg.unwrap_or(default) {
        EngineArg::Analytic => vec![Engine::Analytic],
        EngineArg::Mc => vec![Engine::MonteCarlo],
        EngineArg::Both => vec![Engine::Analytic, Engine::MonteCarlo],
    }
}

fn options(args: &Args, engines: Vec<Engine>, out: &Path) -> EvalOptions {
    EvalOptions {
        engines,
        n_trials: args.trials,
        seed: args.seed,
        metrics: MetricSet::All,
        trace_dir: args.dump_traces.then(|| out.join("traces")),
        node_dir: args.dump_nodes.then(|| out.join("nodes")),
    }
}

fn run(args: &Args) -> Result<Vec<Row>, CliError> {
    let base = load_base(args)?;
    let protocols = if args.protocol.is_empty() {
        Protocol::ALL.to_vec()
    } else {
        args.protocol.clone()
    };
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    if !args.figure.is_empty() {
        let ids: Vec<String> = args.figure.iter().map(|s| s.trim().to_string()).collect();
        for id in &ids {
            d2d_lab::preset(id)?;
        }
        validate(base.clone())?;
        let opts = options(args, engines(args.engine, EngineArg::Both), &out);
        let mut rows = Vec::new();
        for id in &ids {
            let fig = emit_figure_dataset(id, &base, &opts, &out)?;
            eprintln!("{id}: {} curves written to {}", fig.curves.len(), out.display());
            rows.extend(fig.rows().cloned());
        }
        return Ok(rows);
    }
    let opts = options(args, engines(args.engine, EngineArg::Analytic), &out);
    if let Some(arg) = &args.sweep {
        let (key, grid) = parse_sweep(arg)?;
        let spec = SweepSpec {
            key,
            grid,
            protocols,
            engines: opts.engines.clone(),
            n_trials: args.trials,
            seed: args.seed,
            out: Some(out),
            figure: None,
        };
        let rows = run_experiment_with(&spec, &base, &opts)?;
        print!("{}", render_csv(Some(&spec.key), &rows));
        return Ok(rows);
    }
    let params = validate(base.clone())?;
    let rows = evaluate_point(&params, &protocols, &opts);
    let csv = render_csv(None, &rows);
    print!("{csv}");
    if let Some(dir) = &args.out {
        let path = dir.join("point.csv");
        write_atomic(&path, csv.as_bytes()).map_err(|e| CliError::io(path.display().to_string(), e))?;
        let mut manifest = Manifest::new("point", "", &base, args.seed, args.trials, &opts.engines);
        manifest.rows = RowRecord::from_rows("point.csv", &rows);
        let path = dir.join("point.json");
        manifest.write(&path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    }
    Ok(rows)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Some(n) = args.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&args) {
        Ok(rows) => {
            for r in rows.iter().filter(|r| r.status.is_numeric_failure()) {
                eprintln!(
                    "warning: {} {} at {}: {} {}",
                    r.protocol,
                    r.engine,
                    r.param_hash,
                    r.status.as_str(),
                    r.messages.join("; ")
                );
            }
            ExitCode::from(exit_code(&rows) as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Core(d2d_core::Error::Numeric(_)) => 2,
                _ => 1,
            })
        }
    }
}
