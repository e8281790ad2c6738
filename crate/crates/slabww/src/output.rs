//! CSV and manifest emission.
//!
//! Every per-cell quantity goes to its own CSV with columns
//! `step,t,cell,x_center,value`. Window files add
//! `center_raw,center_modified,floor,ceiling`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use slabww_core::driver::{RunResult, TimestepRecord};
use slabww_core::reference::{growth_law, relative_error, ReferenceTable};
use slabww_core::tally::mean_and_sigma;
use slabww_core::windows::WindowSet;
use slabww_core::ProblemSpec;

use crate::config::Config;

pub const CELL_COLUMNS: [&str; 5] = ["step", "t", "cell", "x_center", "value"];
pub const WINDOW_EXTRA_COLUMNS: [&str; 4] = ["center_raw", "center_modified", "floor", "ceiling"];

/// Relative error is reported where the reference exceeds this fraction of
/// its layer maximum.
pub const REL_ERR_THRESHOLD: f64 = 1e-6;

/// Files whose content depends on wall-clock timing.
pub const TIMING_DEPENDENT: [&str; 2] = ["fom.csv", "manifest.json"];

/// Shortest round-trip form; `nan`, `inf` and `-inf` for non-finite values.
pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:?}")
    }
}

/// Run metadata echoed into the manifest.
pub struct RunInfo<'a> {
    pub config: &'a Config,
    pub spec: &'a ProblemSpec,
    pub command: Vec<String>,
    pub workers: usize,
    pub reference_path: Option<String>,
    pub started_unix: f64,
    pub finished_unix: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    command: &'a [String],
    mode: &'a str,
    seed: u64,
    rho: f64,
    histories: usize,
    batches: usize,
    population_target: Option<usize>,
    filter_k: usize,
    workers: usize,
    reference: Option<&'a str>,
    config: &'a Config,
    started_unix: f64,
    finished_unix: f64,
    steps: Vec<StepSummary>,
    warnings: Vec<String>,
    files: Vec<String>,
}

#[derive(Serialize)]
struct StepSummary {
    step: usize,
    t: f64,
    transport_seconds: f64,
    losm_seconds: f64,
    total_seconds: f64,
    census_weight: f64,
    census_weight_sigma: Option<f64>,
    growth_law_weight: Option<f64>,
    census_particles: u64,
    splits: u64,
    roulette_kills: u64,
    roulette_survivals: u64,
    split_cap_hits: u64,
    leaked_weight: f64,
}

struct CellCsv<'a> {
    spec: &'a ProblemSpec,
    w: csv::Writer<Vec<u8>>,
    rows: usize,
}

impl<'a> CellCsv<'a> {
    fn new(spec: &'a ProblemSpec, extra: &[&str]) -> io::Result<Self> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CELL_COLUMNS.iter().chain(extra))?;
        Ok(Self { spec, w, rows: 0 })
    }

    fn layer(&mut self, rec: &TimestepRecord, values: &[f64], extra: &[&[f64]]) -> io::Result<()> {
        for (c, v) in values.iter().enumerate() {
            let mut row = vec![
                rec.step.to_string(),
                format_value(rec.t),
                c.to_string(),
                format_value(self.spec.mesh.center(c)),
                format_value(*v),
            ];
            row.extend(extra.iter().map(|col| format_value(col[c])));
            self.w.write_record(&row)?;
            self.rows += 1;
        }
        Ok(())
    }

    fn finish(self, dir: &Path, name: &str, files: &mut Vec<String>) -> io::Result<()> {
        if self.rows == 0 {
            return Ok(());
        }
        let bytes = self.w.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
        fs::write(dir.join(name), bytes)?;
        files.push(name.to_string());
        Ok(())
    }
}

fn cell_file(
    dir: &Path,
    name: &str,
    spec: &ProblemSpec,
    result: &RunResult,
    files: &mut Vec<String>,
    values: impl Fn(&TimestepRecord) -> Option<Vec<f64>>,
) -> io::Result<()> {
    let mut csv = CellCsv::new(spec, &[])?;
    for rec in &result.records {
        if let Some(v) = values(rec) {
            csv.layer(rec, &v, &[])?;
        }
    }
    csv.finish(dir, name, files)
}

fn window_file(
    dir: &Path,
    name: &str,
    spec: &ProblemSpec,
    result: &RunResult,
    files: &mut Vec<String>,
    pick: impl Fn(&TimestepRecord) -> Option<&WindowSet>,
) -> io::Result<()> {
    let mut csv = CellCsv::new(spec, &WINDOW_EXTRA_COLUMNS)?;
    for rec in &result.records {
        if let Some(ws) = pick(rec) {
            let n = ws.cells();
            let absolute = |f: fn(&WindowSet, usize) -> f64| (0..n).map(|c| f(ws, c)).collect::<Vec<_>>();
            let centers = absolute(WindowSet::center);
            let floors = absolute(WindowSet::floor);
            let ceilings = absolute(WindowSet::ceiling);
            csv.layer(rec, &centers, &[&ws.centers_raw, &ws.centers, &floors, &ceilings])?;
        }
    }
    csv.finish(dir, name, files)
}

fn rel_err(values: &[f64], reference: &[f64]) -> Vec<f64> {
    let max = reference.iter().cloned().fold(0.0, f64::max);
    relative_error(values, reference, REL_ERR_THRESHOLD * max)
        .expect("lengths checked at run start")
        .into_iter()
        .map(|e| e.unwrap_or(f64::NAN))
        .collect()
}

/// Writes all CSVs and `manifest.json` into `dir` (created if missing).
pub fn write_outputs(
    dir: &Path,
    info: &RunInfo<'_>,
    result: &RunResult,
    reference: Option<&ReferenceTable>,
) -> io::Result<Vec<PathBuf>> {
    if result.records.is_empty() {
        return Err(io::Error::other("no timestep records to write"));
    }
    fs::create_dir_all(dir)?;
    let spec = info.spec;
    let mut files = Vec::new();
    let f = &mut files;
    let v = |x: &[f64]| Some(x.to_vec());
    cell_file(dir, "flux.csv", spec, result, f, |r| v(&r.flux.mean))?;
    cell_file(dir, "sigma.csv", spec, result, f, |r| v(&r.flux.sigma))?;
    cell_file(dir, "relsigma.csv", spec, result, f, |r| v(&r.flux.rel_sigma))?;
    cell_file(dir, "fom.csv", spec, result, f, |r| v(&r.flux.fom))?;
    cell_file(dir, "particles.csv", spec, result, f, |r| Some(r.particle_counts.iter().map(|&c| c as f64).collect()))?;
    cell_file(dir, "census_phi.csv", spec, result, f, |r| v(&r.census_phi))?;
    cell_file(dir, "census_phi_filtered.csv", spec, result, f, |r| v(&r.census_phi_filtered))?;
    cell_file(dir, "census_j.csv", spec, result, f, |r| v(&r.census_j))?;
    cell_file(dir, "census_j_filtered.csv", spec, result, f, |r| v(&r.census_j_filtered))?;
    cell_file(dir, "f_raw.csv", spec, result, f, |r| v(&r.census_f))?;
    cell_file(dir, "f_filtered.csv", spec, result, f, |r| v(&r.census_f_filtered))?;
    cell_file(dir, "f_midstep_raw.csv", spec, result, f, |r| r.f_midstep.as_deref().and_then(v))?;
    cell_file(dir, "f_midstep_filtered.csv", spec, result, f, |r| r.f_midstep_filtered.as_deref().and_then(v))?;
    cell_file(dir, "aux.csv", spec, result, f, |r| r.aux.as_deref().and_then(v))?;
    cell_file(dir, "aux_midstep.csv", spec, result, f, |r| r.aux_midstep.as_deref().and_then(v))?;
    window_file(dir, "windows.csv", spec, result, f, |r| r.windows.as_ref())?;
    window_file(dir, "windows_midstep.csv", spec, result, f, |r| r.windows_midstep.as_ref())?;
    if let Some(table) = reference {
        let layer = |t: f64| table.flux_at(t).expect("coverage checked at run start");
        cell_file(dir, "relerr_census.csv", spec, result, f, |r| Some(rel_err(&r.census_phi, layer(r.t))))?;
        cell_file(dir, "relerr_aux.csv", spec, result, f, |r| {
            let aux = r.aux_midstep.as_ref().or(r.aux.as_ref())?;
            Some(rel_err(aux, layer(r.t)))
        })?;
    }

    let steps = result
        .records
        .iter()
        .map(|r| StepSummary {
            step: r.step,
            t: r.t,
            transport_seconds: r.transport_time,
            losm_seconds: r.losm_time,
            total_seconds: r.total_time,
            census_weight: r.census_weight,
            census_weight_sigma: mean_and_sigma(&r.census_weight_batches).ok().map(|(_, s)| s),
            growth_law_weight: growth_law(r.t, spec).ok().map(|g| g.weight),
            census_particles: r.particle_counts.iter().sum(),
            splits: r.counters.splits,
            roulette_kills: r.counters.roulette_kills,
            roulette_survivals: r.counters.roulette_survivals,
            split_cap_hits: r.counters.split_cap_hits,
            leaked_weight: r.counters.leaked_weight,
        })
        .collect();
    let warnings = result.warnings.iter().chain(result.records.iter().flat_map(|r| &r.warnings)).cloned().collect();
    files.push("manifest.json".into());
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        command: &info.command,
        mode: spec.mode.name(),
        seed: spec.seed,
        rho: spec.windows.rho,
        histories: spec.n_histories,
        batches: spec.n_batches,
        population_target: spec.target_count(),
        filter_k: spec.filter_k,
        workers: info.workers,
        reference: info.reference_path.as_deref(),
        config: info.config,
        started_unix: info.started_unix,
        finished_unix: info.finished_unix,
        steps,
        warnings,
        files: files.clone(),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(io::Error::other)?;
    fs::write(dir.join("manifest.json"), json + "\n")?;
    Ok(files.into_iter().map(|n| dir.join(n)).collect())
}
