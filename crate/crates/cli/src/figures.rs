//! Figure presets. Axis ranges and step sizes are approximations read off
//! the published plots.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use d2d_core::{validate, NetworkParams, Protocol};

use crate::evaluate::{evaluate_tasks, EvalOptions, MetricSet, Task};
use crate::output::{render_csv, write_atomic, FileEntry, Manifest, Row, RowRecord};
use crate::sweep::linspace;
use crate::CliError;

pub const FIGURE_IDS: [&str; 11] = [
    "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11", "fig12", "fig13",
];

/// One legend entry: fixed overrides applied to the base parameters.
#[derive(Debug, Clone)]
pub struct Curve {
    pub label: String,
    pub overrides: Vec<(&'static str, f64)>,
    pub protocols: Vec<Protocol>,
}

#[derive(Debug, Clone)]
pub struct Preset {
    pub id: &'static str,
    pub description: &'static str,
    pub key: &'static str,
    pub grid: Vec<f64>,
    pub metrics: MetricSet,
    pub curves: Vec<Curve>,
}

#[derive(Debug, Clone)]
pub struct CurveOutput {
    pub label: String,
    pub file: PathBuf,
    pub overrides: Vec<(&'static str, f64)>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone)]
pub struct FigureOutput {
    pub curves: Vec<CurveOutput>,
    pub manifest: PathBuf,
}

impl FigureOutput {
    pub fn rows(&self) -> impl Iterator<Item = &Row> {
        self.curves.iter().flat_map(|c| c.rows.iter())
    }

    pub fn curve(&self, label: &str) -> Option<&CurveOutput> {
        self.curves.iter().find(|c| c.label == label)
    }
}

fn steps(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize + 1;
    linspace(start, stop, n)
}

fn label(overrides: &[(&str, f64)], protocol: Option<Protocol>) -> String {
    let mut parts: Vec<String> = overrides
        .iter()
        .map(|&(k, v)| match (k, v) {
            ("alpha", 0.0) => "ppp".to_string(),
            _ => format!("{k}{v}"),
        })
        .collect();
    parts.extend(protocol.map(|p| p.as_str().to_string()));
    parts.join("_")
}

/// One curve per override set.
fn curves(sets: &[Vec<(&'static str, f64)>], protocols: &[Protocol]) -> Vec<Curve> {
    sets.iter()
        .map(|o| Curve {
            label: label(o, None),
            overrides: o.clone(),
            protocols: protocols.to_vec(),
        })
        .collect()
}

/// One curve per (override set, protocol) pair.
fn curves_by_protocol(sets: &[Vec<(&'static str, f64)>]) -> Vec<Curve> {
    sets.iter()
        .flat_map(|o| {
            Protocol::ALL.into_iter().map(move |p| Curve {
                label: label(o, Some(p)),
                overrides: o.clone(),
                protocols: vec![p],
            })
        })
        .collect()
}

fn repulsion_curves() -> Vec<Vec<(&'static str, f64)>> {
    vec![
        vec![("alpha", -1.0), ("l_A", 1.0), ("m", 1.0)],
        vec![("alpha", -0.5), ("l_A", 1.0), ("m", 1.0)],
        vec![("alpha", 0.0), ("l_A", 1.0), ("m", 1.0)],
        vec![("alpha", -1.0), ("l_A", 0.5), ("m", 1.0)],
        vec![("alpha", -1.0), ("l_A", 1.0), ("m", 4.0)],
    ]
}

/// Looks up a figure preset by id.
pub fn preset(id: &str) -> Result<Preset, CliError> {
    let unknown = || CliError::UnknownFigure { id: id.to_string() };
    let p = match id {
        "fig3" => Preset {
            id: "fig3",
            description: "PTP energy outage vs zeta_A for alpha in {-1, -0.5, PPP} and mu in {3, 4}",
            key: "zeta_A",
            grid: steps(0.0, 0.04, 0.001),
            metrics: MetricSet::Outage,
            curves: curves(
                &[-1.0, -0.5, 0.0]
                    .iter()
                    .flat_map(|&a| [3.0, 4.0].map(|mu| vec![("alpha", a), ("mu", mu)]))
                    .collect::<Vec<_>>(),
                &[Protocol::Ptp],
            ),
        },
        "fig4" => Preset {
            id: "fig4",
            description: "STP energy outage vs zeta_A for l_A in {0.5, 1} and m in {1, 4}",
            key: "zeta_A",
            grid: steps(0.0, 0.04, 0.002),
            metrics: MetricSet::Outage,
            curves: curves(
                &[0.5, 1.0]
                    .iter()
                    .flat_map(|&l| [1.0, 4.0].map(|m| vec![("l_A", l), ("m", m)]))
                    .collect::<Vec<_>>(),
                &[Protocol::Stp],
            ),
        },
        "fig5" => Preset {
            id: "fig5",
            description: "Energy outage vs zeta_A for PTP, STP and both baselines",
            key: "zeta_A",
            grid: steps(0.0, 0.04, 0.002),
            metrics: MetricSet::Outage,
            curves: curves_by_protocol(&[vec![]]),
        },
        "fig6" | "fig7" => {
            let (id, description, protocol) = if id == "fig6" {
                ("fig6", "PTP coverage vs zeta_A for several alpha, l_A and m", Protocol::Ptp)
            } else {
                ("fig7", "STP coverage vs zeta_A for several alpha, l_A and m", Protocol::Stp)
            };
            Preset {
                id,
                description,
                key: "zeta_A",
                grid: steps(0.0, 0.04, 0.005),
                metrics: MetricSet::All,
                curves: curves(&repulsion_curves(), &[protocol]),
            }
        }
        "fig8" => Preset {
            id: "fig8",
            description: "Coverage vs zeta_A for all protocols at xi in {0.2, 0.8}",
            key: "zeta_A",
            grid: steps(0.0, 0.1, 0.01),
            metrics: MetricSet::All,
            curves: curves_by_protocol(&[vec![("xi", 0.2)], vec![("xi", 0.8)]]),
        },
        "fig9" => Preset {
            id: "fig9",
            description: "Coverage vs backscatter efficiency delta at zeta_A in {0.02, 0.04}",
            key: "delta",
            grid: steps(0.1, 1.0, 0.1),
            metrics: MetricSet::All,
            curves: curves_by_protocol(&[vec![("zeta_A", 0.02)], vec![("zeta_A", 0.04)]]),
        },
        "fig10" => Preset {
            id: "fig10",
            description: "Coverage vs RF-to-DC efficiency beta at zeta_A in {0.02, 0.04}",
            key: "beta",
            grid: steps(0.1, 1.0, 0.1),
            metrics: MetricSet::All,
            curves: curves_by_protocol(&[vec![("zeta_A", 0.02)], vec![("zeta_A", 0.04)]]),
        },
        "fig11" => Preset {
            id: "fig11",
            description: "Coverage vs link distance d at (zeta_A, xi) in {(0.02, 0.1), (0.04, 0.6)}",
            key: "d",
            grid: steps(1.0, 10.0, 1.0),
            metrics: MetricSet::All,
            curves: curves_by_protocol(&[
                vec![("zeta_A", 0.02), ("xi", 0.1)],
                vec![("zeta_A", 0.04), ("xi", 0.6)],
            ]),
        },
        "fig12" => Preset {
            id: "fig12",
            description: "Throughput vs zeta_A at d = 5 for xi in {0.2, 0.8}",
            key: "zeta_A",
            grid: steps(0.0, 0.1, 0.01),
            metrics: MetricSet::All,
            curves: curves_by_protocol(&[vec![("d", 5.0), ("xi", 0.2)], vec![("d", 5.0), ("xi", 0.8)]]),
        },
        "fig13" => Preset {
            id: "fig13",
            description: "Throughput vs d at (xi, zeta_A) in {(0.2, 0.02), (0.8, 0.01)}",
            key: "d",
            grid: steps(1.0, 10.0, 1.0),
            metrics: MetricSet::All,
            curves: curves_by_protocol(&[
                vec![("zeta_A", 0.02), ("xi", 0.2)],
                vec![("zeta_A", 0.01), ("xi", 0.8)],
            ]),
        },
        _ => return Err(unknown()),
    };
    Ok(p)
}

impl Preset {
    fn tasks(&self, base: &NetworkParams, curve: &Curve) -> Result<Vec<Task>, CliError> {
        let mut fixed = base.clone();
        for &(k, v) in &curve.overrides {
            fixed.set(k, v, true)?;
        }
        self.grid
            .iter()
            .map(|&x| {
                let mut p = fixed.clone();
                p.set(self.key, x, true)?;
                Ok(Task {
                    params: validate(p)?,
                    swept: Some((self.key.to_string(), x)),
                    protocols: curve.protocols.clone(),
                })
            })
            .collect()
    }
}

/// Evaluates every curve of the preset and writes `<id>_<label>.csv` per
/// curve plus `<id>_manifest.json` into `out_dir`. The metric set of the
/// preset overrides `opts.metrics`.
pub fn emit_figure_dataset(id: &str, base: &NetworkParams, opts: &EvalOptions, out_dir: &Path) -> Result<FigureOutput, CliError> {
    let preset = preset(id)?;
    let per_curve: Vec<Vec<Task>> = preset
        .curves
        .iter()
        .map(|c| preset.tasks(base, c))
        .collect::<Result<_, _>>()?;
    let flat: Vec<Task> = per_curve.iter().flatten().cloned().collect();
    let opts = EvalOptions {
        metrics: preset.metrics,
        ..opts.clone()
    };
    let mut results = evaluate_tasks(&flat, &opts).into_iter();
    let mut manifest = Manifest::new(preset.id, preset.description, base, opts.seed, opts.n_trials, &opts.engines);
    let mut curves = Vec::new();
    for (curve, tasks) in preset.curves.iter().zip(&per_curve) {
        let rows: Vec<Row> = results.by_ref().take(tasks.len()).flatten().collect();
        let name = format!("{}_{}.csv", preset.id, curve.label);
        let file = out_dir.join(&name);
        write_atomic(&file, render_csv(Some(preset.key), &rows).as_bytes())
            .map_err(|e| CliError::io(file.display().to_string(), e))?;
        manifest.files.push(FileEntry {
            file: name.clone(),
            label: curve.label.clone(),
            swept_key: preset.key.to_string(),
            grid: preset.grid.clone(),
            overrides: curve
                .overrides
                .iter()
                .map(|&(k, v)| (k.to_string(), v))
                .collect::<BTreeMap<_, _>>(),
        });
        manifest.rows.extend(RowRecord::from_rows(&name, &rows));
        curves.push(CurveOutput {
            label: curve.label.clone(),
            file,
            overrides: curve.overrides.clone(),
            rows,
        });
    }
    let path = out_dir.join(format!("{}_manifest.json", preset.id));
    manifest.write(&path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    Ok(FigureOutput {
        curves,
        manifest: path,
    })
}
