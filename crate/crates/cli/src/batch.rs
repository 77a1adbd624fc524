//! Parallel execution of an experiment and output files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use oppsim_core::{average_runs, MetricsSeries, Simulation};
use rayon::prelude::*;
use serde::Serialize;

use crate::experiment::{ExperimentSpec, ResolvedPoint};
use crate::CliError;

#[derive(Debug, Clone)]
pub struct PointResult {
    pub point: ResolvedPoint,
    /// One series per seed, in seed order.
    pub runs: Vec<MetricsSeries>,
    pub average: MetricsSeries,
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    pub name: String,
    pub seeds: Vec<u64>,
    pub points: Vec<PointResult>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Runs every point for every seed on the rayon pool. Results are ordered
/// by point then seed regardless of scheduling. When `event_log` is given
/// the first run of the first point writes its contact log there.
pub fn run_batch(spec: &ExperimentSpec, event_log: Option<&Path>) -> Result<BatchResult, CliError> {
    let points = spec.resolve()?;
    let jobs: Vec<(usize, u64)> = (0..points.len())
        .flat_map(|p| spec.seeds.iter().map(move |&s| (p, s)))
        .collect();
    let log_file = match event_log {
        Some(path) => Some(File::create(path).map_err(io_err(path))?),
        None => None,
    };
    let log = std::sync::Mutex::new(log_file);
    let series: Vec<MetricsSeries> = jobs
        .par_iter()
        .enumerate()
        .map(|(i, &(p, seed))| {
            let mut config = points[p].config.clone();
            config.seed = seed;
            let mut sim = Simulation::new(config)?;
            if i == 0 {
                if let Some(f) = log.lock().expect("log lock").take() {
                    sim = sim.with_event_log(Box::new(BufWriter::new(f)));
                }
            }
            Ok(sim.run_to_end())
        })
        .collect::<Result<_, CliError>>()?;
    let per_point = spec.seeds.len();
    let mut results = Vec::with_capacity(points.len());
    for (point, runs) in points.into_iter().zip(series.chunks(per_point)) {
        let mut average = average_runs(runs)?;
        average.meta.label = point.label.clone();
        results.push(PointResult {
            point,
            runs: runs.to_vec(),
            average,
        });
    }
    Ok(BatchResult {
        name: spec.name.clone(),
        seeds: spec.seeds.clone(),
        points: results,
    })
}

#[derive(Serialize)]
struct PointSummary<'a> {
    label: &'a str,
    stem: &'a str,
    final_t: u64,
    final_hit_rate: f64,
    final_overhead_total: f64,
    final_overhead_data: f64,
    final_overhead_control: f64,
    config: &'a oppsim_core::SimConfig,
}

#[derive(Serialize)]
struct Summary<'a> {
    experiment: &'a str,
    seeds: &'a [u64],
    points: Vec<PointSummary<'a>>,
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

/// Writes `{stem}_seed{n}.csv` per run, `{stem}_avg.csv` per point,
/// optional `.dat` twins of the averages and `summary.json`. Returns the
/// paths written, in order.
pub fn write_outputs(result: &BatchResult, dir: &Path, dat: bool) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    for p in &result.points {
        for run in &p.runs {
            let path = dir.join(format!("{}_seed{}.csv", p.point.stem, run.meta.seeds[0]));
            write_file(&path, |w| run.write_csv(w))?;
            written.push(path);
        }
        let path = dir.join(format!("{}_avg.csv", p.point.stem));
        write_file(&path, |w| p.average.write_csv(w))?;
        written.push(path);
        if dat {
            let path = dir.join(format!("{}_avg.dat", p.point.stem));
            write_file(&path, |w| p.average.write_dat(w))?;
            written.push(path);
        }
    }
    let summary = Summary {
        experiment: &result.name,
        seeds: &result.seeds,
        points: result
            .points
            .iter()
            .map(|p| {
                let last = p.average.last().copied().unwrap_or(oppsim_core::MetricsSample {
                    t: 0,
                    hit_rate: 0.0,
                    overhead_total: 0.0,
                    overhead_data: 0.0,
                    overhead_control: 0.0,
                });
                PointSummary {
                    label: &p.point.label,
                    stem: &p.point.stem,
                    final_t: last.t,
                    final_hit_rate: last.hit_rate,
                    final_overhead_total: last.overhead_total,
                    final_overhead_data: last.overhead_data,
                    final_overhead_control: last.overhead_control,
                    config: &p.point.config,
                }
            })
            .collect(),
    };
    let path = dir.join("summary.json");
    write_file(&path, |w| {
        serde_json::to_writer_pretty(&mut *w, &summary)?;
        writeln!(w)
    })?;
    written.push(path);
    Ok(written)
}

/// Fixed-width table of final averaged values.
pub fn summary_table(result: &BatchResult) -> String {
    let width = result.points.iter().map(|p| p.point.label.len()).max().unwrap_or(5).max(5);
    let mut out = format!(
        "{:<width$}  {:>8}  {:>12}  {:>12}  {:>12}\n",
        "label", "hit_rate", "overhead", "data", "control"
    );
    for p in &result.points {
        if let Some(s) = p.average.last() {
            out.push_str(&format!(
                "{:<width$}  {:>8.4}  {:>12.1}  {:>12.1}  {:>12.1}\n",
                p.point.label, s.hit_rate, s.overhead_total, s.overhead_data, s.overhead_control
            ));
        }
    }
    out
}
