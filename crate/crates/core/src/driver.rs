//! Two-phase timestep orchestration.
//!
//! Each step builds windows from the mode's auxiliary flux, transports the
//! even-indexed half of every batch's census bank, re-solves the LOSM system
//! with a mid-step closure estimate (LOSM modes), rebuilds the windows and
//! transports the odd-indexed half.
//!
//! Batches are independent replica populations that each carry `n_b / N` of
//! the source and are combed separately, so batch estimates stay independent
//! across steps. Histories are grouped into fixed-size work units that never
//! straddle a batch or a half; results are merged in unit order, so the
//! output does not depend on how units are scheduled.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::losm::{self, ClosureData, LosmProblem, Scheme};
use crate::model::{CellField, ProblemSpec, RunMode};
use crate::reference::ReferenceTable;
use crate::rng::{RngStream, StreamId, StreamPurpose};
use crate::smoothing::moving_average;
use crate::tally::{edges_from_cell_averages, statistics_from_batches, Statistics, TimeLayerTally, TrackLengthTally};
use crate::transport::{
    advance_history, comb_population, comb_population_by_importance, impulse_source, total_weight, HistoryOutput,
    Particle, StepContext, TransportCounters,
};
use crate::windows::{front_modification_is_monotone, WindowSet};
use crate::{Error, Result};

/// Histories per work unit.
pub const UNIT_SIZE: usize = 256;

/// Runs independent jobs and returns their results in index order.
pub trait Executor {
    fn map_ordered<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs jobs one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct SerialExecutor;

impl Executor for SerialExecutor {
    fn map_ordered<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

/// Monotonic seconds.
pub trait Clock {
    fn seconds(&self) -> f64;
}

/// A clock that never advances. Figures of merit come out infinite.
#[derive(Debug, Clone, Copy, Default)]
pub struct FrozenClock;

impl Clock for FrozenClock {
    fn seconds(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimestepRecord {
    pub step: usize,
    pub t: f64,
    /// Track-length flux averaged over the step.
    pub flux: Statistics,
    pub census_phi: CellField,
    pub census_f: CellField,
    pub census_j: CellField,
    pub census_phi_filtered: CellField,
    pub census_f_filtered: CellField,
    pub census_j_filtered: CellField,
    /// Mid-step closure estimate from the first half (LOSM modes).
    pub f_midstep: Option<CellField>,
    pub f_midstep_filtered: Option<CellField>,
    /// Auxiliary flux behind the first-half windows.
    pub aux: Option<CellField>,
    /// Fully implicit LOSM flux behind the second-half windows.
    pub aux_midstep: Option<CellField>,
    pub windows: Option<WindowSet>,
    pub windows_midstep: Option<WindowSet>,
    /// Census particles per cell at the end of the step, before combing.
    pub particle_counts: Vec<u64>,
    pub census_weight: f64,
    /// Per-batch estimates of the total census weight.
    pub census_weight_batches: Vec<f64>,
    pub counters: TransportCounters,
    pub transport_time: f64,
    pub losm_time: f64,
    pub total_time: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub records: Vec<TimestepRecord>,
    /// Warnings not tied to one step.
    pub warnings: Vec<String>,
}

/// Splits `total` into `parts` near-equal shares, larger shares first.
pub fn split_evenly(total: usize, parts: usize) -> Vec<usize> {
    (0..parts).map(|b| total / parts + usize::from(b < total % parts)).collect()
}

/// Filtered closure inputs from a census tally and an optional mid-step
/// closure estimate. An absent or identically zero estimate selects the
/// lagged closure.
pub fn build_closure_from_tallies(
    census: &TimeLayerTally,
    f_midstep: Option<&[f64]>,
    spec: &ProblemSpec,
) -> Result<ClosureData> {
    let k = spec.filter_k;
    let phi = moving_average(&census.phi, k);
    let f = moving_average(&census.f, k);
    let j_cells = moving_average(&census.j, k);
    let j_edges = edges_from_cell_averages(&j_cells, &spec.mesh, spec.left, spec.right)?;
    let f_curr = f_midstep.filter(|f| f.iter().any(|&v| v != 0.0)).map(|f| CellField::from(moving_average(f, k)));
    Ok(ClosureData::sourceless(phi.into(), j_edges, f.into(), f_curr))
}

fn warn(warnings: &mut Vec<String>, msg: String) {
    log::warn!("{msg}");
    warnings.push(msg);
}

struct UnitResult {
    batch: usize,
    track: TrackLengthTally,
    census: Vec<Particle>,
    counters: TransportCounters,
}

struct HalfOutput {
    census: Vec<Vec<Particle>>,
    counters: TransportCounters,
}

/// Transports bank entries `half, half + 2, ...` of every batch.
fn run_half<E: Executor>(
    exec: &E,
    spec: &ProblemSpec,
    step: usize,
    banks: &[Vec<Particle>],
    half: usize,
    windows: Option<&WindowSet>,
    track: &mut TrackLengthTally,
) -> Result<HalfOutput> {
    let mut units = Vec::new();
    for (b, bank) in banks.iter().enumerate() {
        let count = bank.len().saturating_sub(half).div_ceil(2);
        let mut k = 0;
        while k < count {
            let end = (k + UNIT_SIZE).min(count);
            units.push((b, k, end));
            k = end;
        }
    }
    let ctx = StepContext::for_step(spec, step, windows);
    let results = exec.map_ordered(units.len(), |u| -> Result<UnitResult> {
        let (b, k0, k1) = units[u];
        let mut unit = UnitResult {
            batch: b,
            track: TrackLengthTally::new(&spec.mesh, spec.time.dt(step), 1),
            census: Vec::new(),
            counters: TransportCounters::default(),
        };
        for k in k0..k1 {
            let idx = half + 2 * k;
            let id = StreamId::new(StreamPurpose::History, step as u32, b as u32, idx as u32);
            let mut stream = RngStream::new(spec.seed, id);
            let mut out =
                HistoryOutput { track: &mut unit.track, census: &mut unit.census, counters: &mut unit.counters };
            let history = ((step as u64) << 48) | ((b as u64) << 32) | idx as u64;
            advance_history(banks[b][idx], &ctx, &mut stream, &mut out, history)?;
        }
        Ok(unit)
    });
    let mut out = HalfOutput { census: vec![Vec::new(); banks.len()], counters: TransportCounters::default() };
    for r in results {
        let r = r?;
        track.absorb(r.batch, &r.track);
        out.census[r.batch].extend(r.census);
        out.counters.merge(&r.counters);
    }
    Ok(out)
}

fn clamp_nonnegative(phi: &[f64]) -> Vec<f64> {
    phi.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect()
}

fn losm_scheme(mode: RunMode) -> Scheme {
    match mode {
        RunMode::WwLosmCn => Scheme::CrankNicolson,
        _ => Scheme::BackwardEuler,
    }
}

/// Runs every step of `spec`.
pub fn run<E: Executor, C: Clock>(
    spec: &ProblemSpec,
    reference: Option<&ReferenceTable>,
    exec: &E,
    clock: &C,
) -> Result<RunResult> {
    spec.validate()?;
    if spec.mode == RunMode::WwReference {
        let table = reference.ok_or(Error::MissingReference("ww-reference"))?;
        table.check_covers(&spec.time, spec.cells())?;
    }
    if let Some(table) = reference {
        if table.cells() != spec.cells() {
            table.check_covers(&spec.time, spec.cells())?;
        }
    }
    let mut run_warnings = Vec::new();
    let wp = &spec.windows;
    if spec.mode.uses_windows()
        && wp.front_mod_enabled
        && !front_modification_is_monotone(wp.front_eps, wp.front_wmin, wp.eps_min, 4001)
    {
        warn(
            &mut run_warnings,
            format!(
                "front modification is not monotone on [{}, 1] for eps = {}, w_min = {}",
                wp.eps_min, wp.front_eps, wp.front_wmin
            ),
        );
    }

    let batches = spec.n_batches;
    let shares = split_evenly(spec.n_histories, batches);
    let target_total = spec.target_count().unwrap_or(spec.n_histories);
    let batch_targets = split_evenly(target_total, batches);
    // batch b carries shares[b] / N of the source
    let batch_scale: Vec<f64> = shares.iter().map(|&s| spec.n_histories as f64 / s as f64).collect();

    let mut banks: Vec<Vec<Particle>> = Vec::with_capacity(batches);
    for (b, &n_b) in shares.iter().enumerate() {
        let mut stream = RngStream::new(spec.seed, StreamId::new(StreamPurpose::Source, 0, b as u32, 0));
        let mut bank = impulse_source(spec, n_b, &mut stream)?.particles;
        let w = spec.source.weight / spec.n_histories as f64;
        bank.iter_mut().for_each(|p| p.w = w);
        banks.push(bank);
    }
    let mut census = TimeLayerTally::from_particles(&spec.mesh, spec.speed, banks.iter().flatten());

    let mut records = Vec::with_capacity(spec.steps());
    for step in 1..=spec.steps() {
        let t_start = clock.seconds();
        let mut warnings = Vec::new();
        let mut losm_time = 0.0;
        let t_n = spec.time.t(step);

        // Phase 1 windows
        let mut aux = None;
        let mut windows = None;
        if spec.mode.uses_windows() {
            let t0 = clock.seconds();
            let aux_phi: Vec<f64> = match spec.mode {
                RunMode::WwPrevious => moving_average(&census.phi, spec.filter_k),
                RunMode::WwReference => {
                    let table = reference.ok_or(Error::MissingReference("ww-reference"))?;
                    table
                        .flux_at(t_n)
                        .ok_or_else(|| Error::Reference(format!("t: no reference layer at t = {t_n}")))?
                        .to_vec()
                }
                _ => {
                    let closure = build_closure_from_tallies(&census, None, spec)?;
                    let problem = LosmProblem::for_step(spec, step);
                    losm::solve(&problem, &closure, losm_scheme(spec.mode))?.phi.into_inner()
                }
            };
            if spec.mode.is_losm() {
                losm_time += clock.seconds() - t0;
            }
            match WindowSet::build(&clamp_nonnegative(&aux_phi), wp) {
                Ok(ws) => windows = Some(ws),
                Err(Error::DegenerateWindow) => {
                    warn(&mut warnings, format!("step {step}: auxiliary flux has no positive entry, running analog"))
                }
                Err(e) => return Err(e),
            }
            aux = Some(CellField::from(aux_phi));
        }

        // Window scale and population control
        if let Some(ws) = windows.as_mut() {
            let u: f64 = banks.iter().flatten().map(|p| p.w / ws.centers[p.cell]).sum();
            ws.scale = u / target_total as f64;
        }
        for (b, bank) in banks.iter_mut().enumerate() {
            if bank.len() <= batch_targets[b] || bank.is_empty() {
                continue;
            }
            let mut stream = RngStream::new(spec.seed, StreamId::new(StreamPurpose::Comb, step as u32, b as u32, 0));
            *bank = match windows.as_ref() {
                Some(ws) => comb_population_by_importance(bank, batch_targets[b], &mut stream, |p| ws.centers[p.cell])?,
                None => comb_population(bank, batch_targets[b], &mut stream)?,
            };
        }
        let start_weight = total_weight(&banks.iter().flatten().copied().collect::<Vec<_>>());

        // First half
        let mut track = TrackLengthTally::new(&spec.mesh, spec.time.dt(step), batches);
        let mut transport_time = 0.0;
        let t0 = clock.seconds();
        let first = run_half(exec, spec, step, &banks, 0, windows.as_ref(), &mut track)?;
        transport_time += clock.seconds() - t0;

        // Mid-step closure and window update
        let mut f_midstep = None;
        let mut f_midstep_filtered = None;
        let mut aux_midstep = None;
        let mut windows_midstep = None;
        if spec.mode.is_losm() && windows.is_some() {
            let t0 = clock.seconds();
            let first_weight: f64 = banks.iter().flat_map(|b| b.iter().step_by(2)).map(|p| p.w).sum();
            let mut mid = TimeLayerTally::from_particles(&spec.mesh, spec.speed, first.census.iter().flatten());
            if first_weight > 0.0 {
                mid.rescale(start_weight / first_weight);
            }
            let closure = build_closure_from_tallies(&census, Some(&mid.f), spec)?;
            f_midstep_filtered = closure.f_curr.clone();
            let problem = LosmProblem::for_step(spec, step);
            let phi = losm::solve(&problem, &closure, losm_scheme(spec.mode))?.phi.into_inner();
            match WindowSet::build(&clamp_nonnegative(&phi), wp) {
                Ok(ws) => windows_midstep = Some(ws.with_scale(windows.as_ref().map_or(1.0, |w| w.scale))),
                Err(Error::DegenerateWindow) => warn(
                    &mut warnings,
                    format!("step {step}: mid-step LOSM flux has no positive entry, keeping first-half windows"),
                ),
                Err(e) => return Err(e),
            }
            f_midstep = Some(mid.f);
            aux_midstep = Some(CellField::from(phi));
            losm_time += clock.seconds() - t0;
        }

        // Second half
        let second_windows = windows_midstep.as_ref().or(windows.as_ref());
        let t0 = clock.seconds();
        let second = run_half(exec, spec, step, &banks, 1, second_windows, &mut track)?;
        transport_time += clock.seconds() - t0;

        let mut counters = first.counters;
        counters.merge(&second.counters);
        if counters.split_cap_hits > 0 {
            warn(&mut warnings, format!("step {step}: {} splits ran into the split cap", counters.split_cap_hits));
        }
        banks = first
            .census
            .into_iter()
            .zip(second.census)
            .map(|(mut a, b)| {
                a.extend(b);
                a
            })
            .collect();
        if banks.iter().all(|b| b.is_empty()) {
            return Err(Error::EmptyPopulation);
        }

        census = TimeLayerTally::from_particles(&spec.mesh, spec.speed, banks.iter().flatten());
        let flux = statistics_from_batches(
            (0..spec.cells()).map(|c| (0..batches).map(|b| track.batch_sums(b)[c] * batch_scale[b]).collect()),
            transport_time,
        )?;
        let census_weight_batches = banks.iter().zip(&batch_scale).map(|(b, s)| total_weight(b) * s).collect();
        let k = spec.filter_k;
        records.push(TimestepRecord {
            step,
            t: t_n,
            flux,
            census_phi_filtered: moving_average(&census.phi, k).into(),
            census_f_filtered: moving_average(&census.f, k).into(),
            census_j_filtered: moving_average(&census.j, k).into(),
            census_phi: census.phi.clone(),
            census_f: census.f.clone(),
            census_j: census.j.clone(),
            f_midstep,
            f_midstep_filtered,
            aux,
            aux_midstep,
            windows,
            windows_midstep,
            particle_counts: census.counts.clone(),
            census_weight: census.weight,
            census_weight_batches,
            counters,
            transport_time,
            losm_time,
            total_time: clock.seconds() - t_start,
            warnings,
        });
    }
    Ok(RunResult { records, warnings: run_warnings })
}
