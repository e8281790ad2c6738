//! Analog one-group slab transport over a single timestep.

use alloc::format;
use alloc::vec::Vec;

use crate::model::{BoundaryKind, CrossSections, Mesh1D, ProblemSpec, Side};
use crate::rng::RngStream;
use crate::tally::TrackLengthTally;
use crate::windows::{check_particle, WindowAction, WindowSet};
use crate::{Error, Result};

/// Phase-space state of one Monte Carlo particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub x: f64,
    pub mu: f64,
    pub t: f64,
    pub w: f64,
    pub cell: usize,
}

/// Particles frozen at a time layer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CensusBank {
    pub particles: Vec<Particle>,
}

impl CensusBank {
    pub fn new(particles: Vec<Particle>) -> Self {
        Self { particles }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Left-to-right sum; combing preserves exactly this number.
    pub fn total_weight(&self) -> f64 {
        total_weight(&self.particles)
    }
}

pub fn total_weight(particles: &[Particle]) -> f64 {
    particles.iter().fold(0.0, |acc, p| acc + p.w)
}

/// `n` isotropic particles at the impulse position sharing `total_weight`.
pub fn impulse_bank(
    mesh: &Mesh1D,
    position: f64,
    time: f64,
    n: usize,
    total: f64,
    stream: &mut RngStream,
) -> Result<CensusBank> {
    if n == 0 {
        return Err(Error::Parameter { name: "n", reason: "impulse needs at least one particle".into() });
    }
    let w = total / n as f64;
    let particles = (0..n)
        .map(|_| {
            let mu = stream.isotropic_mu();
            let cell = mesh.locate_directed(position, mu)?;
            Ok(Particle { x: position, mu, t: time, w, cell })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CensusBank::new(particles))
}

/// The configured point impulse, `n` particles carrying the source weight.
pub fn impulse_source(spec: &ProblemSpec, n: usize, stream: &mut RngStream) -> Result<CensusBank> {
    let s = &spec.source;
    impulse_bank(&spec.mesh, s.position, s.time, n, s.weight, stream)
}

/// Specular reflection at a slab face.
pub fn reflect(p: Particle, side: Side) -> Particle {
    debug_assert!(match side {
        Side::Left => p.mu <= 0.0,
        Side::Right => p.mu >= 0.0,
    });
    Particle { mu: -p.mu, ..p }
}

/// Counters accumulated while following histories.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TransportCounters {
    pub segments: u64,
    pub collisions: u64,
    pub fissions: u64,
    pub fission_neutrons: u64,
    pub splits: u64,
    pub roulette_kills: u64,
    pub roulette_survivals: u64,
    pub split_cap_hits: u64,
    pub leaked_weight: f64,
}

impl TransportCounters {
    pub fn merge(&mut self, o: &TransportCounters) {
        self.segments += o.segments;
        self.collisions += o.collisions;
        self.fissions += o.fissions;
        self.fission_neutrons += o.fission_neutrons;
        self.splits += o.splits;
        self.roulette_kills += o.roulette_kills;
        self.roulette_survivals += o.roulette_survivals;
        self.split_cap_hits += o.split_cap_hits;
        self.leaked_weight += o.leaked_weight;
    }
}

/// Fixed data for following histories through one step.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub mesh: &'a Mesh1D,
    pub xs: &'a [CrossSections],
    pub speed: f64,
    pub t_end: f64,
    pub left: BoundaryKind,
    pub right: BoundaryKind,
    pub windows: Option<&'a WindowSet>,
    pub split_cap: u32,
}

impl<'a> StepContext<'a> {
    /// Context for step `n` (transport uses the cross sections of layer `n`).
    pub fn for_step(spec: &'a ProblemSpec, n: usize, windows: Option<&'a WindowSet>) -> Self {
        Self {
            mesh: &spec.mesh,
            xs: spec.material.layer(n),
            speed: spec.speed,
            t_end: spec.time.t(n),
            left: spec.left,
            right: spec.right,
            windows,
            split_cap: spec.windows.split_cap,
        }
    }
}

/// Sinks a history writes into.
pub struct HistoryOutput<'o> {
    /// Single-batch track-length scratch.
    pub track: &'o mut TrackLengthTally,
    pub census: &'o mut Vec<Particle>,
    pub counters: &'o mut TransportCounters,
}

/// Follows `p` and all of its secondaries to census or death.
///
/// Each flight segment ends at the nearest of collision, cell edge or census.
/// Collisions are analog (scatter, fission with integer multiplicity, or
/// capture). Window checks fire when a particle enters a cell and when it is
/// born (the resumed census particle itself and every fission neutron).
pub fn advance_history(
    p: Particle,
    ctx: &StepContext<'_>,
    stream: &mut RngStream,
    out: &mut HistoryOutput<'_>,
    history: u64,
) -> Result<()> {
    let mut stack = Vec::new();
    born(p, ctx, stream, out.counters, &mut stack);
    while let Some(p) = stack.pop() {
        follow(p, ctx, stream, out, &mut stack, history)?;
    }
    Ok(())
}

fn born(
    p: Particle,
    ctx: &StepContext<'_>,
    stream: &mut RngStream,
    counters: &mut TransportCounters,
    stack: &mut Vec<Particle>,
) {
    let mut p = p;
    if apply_window(&mut p, ctx, stream, counters, stack) {
        stack.push(p);
    }
}

/// Applies the window of `p.cell` in place. Extra split daughters go on the
/// stack. Returns false if the particle was killed.
fn apply_window(
    p: &mut Particle,
    ctx: &StepContext<'_>,
    stream: &mut RngStream,
    counters: &mut TransportCounters,
    stack: &mut Vec<Particle>,
) -> bool {
    let Some(ws) = ctx.windows else { return true };
    match check_particle(p.w, p.cell, ws, ctx.split_cap, stream) {
        WindowAction::Pass => true,
        WindowAction::Split { copies, weight, capped } => {
            counters.splits += 1;
            counters.split_cap_hits += u64::from(capped);
            p.w = weight;
            stack.extend(core::iter::repeat_n(*p, copies as usize - 1));
            true
        }
        WindowAction::RouletteSurvive { weight } => {
            counters.roulette_survivals += 1;
            p.w = weight;
            true
        }
        WindowAction::RouletteKill => {
            counters.roulette_kills += 1;
            false
        }
    }
}

fn follow(
    mut p: Particle,
    ctx: &StepContext<'_>,
    stream: &mut RngStream,
    out: &mut HistoryOutput<'_>,
    stack: &mut Vec<Particle>,
    history: u64,
) -> Result<()> {
    let edges = ctx.mesh.edges();
    let last = ctx.mesh.cells() - 1;
    let mut tau = stream.optical_depth();
    loop {
        if !(p.x.is_finite() && p.w.is_finite() && p.mu.is_finite()) {
            return Err(Error::CorruptedHistory {
                history,
                reason: format!("non-finite state x={} mu={} w={}", p.x, p.mu, p.w),
            });
        }
        let xs = &ctx.xs[p.cell];
        let d_census = ((ctx.t_end - p.t) * ctx.speed).max(0.0);
        let d_edge = if p.mu > 0.0 {
            (edges[p.cell + 1] - p.x) / p.mu
        } else if p.mu < 0.0 {
            (edges[p.cell] - p.x) / p.mu
        } else {
            f64::INFINITY
        };
        let d_coll = if xs.sigma_t > 0.0 { tau / xs.sigma_t } else { f64::INFINITY };
        out.counters.segments += 1;

        if d_census <= d_edge && d_census <= d_coll {
            out.track.score_track(p.cell, 0, p.w, d_census);
            p.x = (p.x + p.mu * d_census).clamp(edges[p.cell], edges[p.cell + 1]);
            p.t = ctx.t_end;
            if p.mu > 0.0 && p.cell < last && p.x == edges[p.cell + 1] {
                p.cell += 1;
            } else if p.mu < 0.0 && p.cell > 0 && p.x == edges[p.cell] {
                p.cell -= 1;
            }
            out.census.push(p);
            return Ok(());
        }

        if d_coll < d_edge {
            out.track.score_track(p.cell, 0, p.w, d_coll);
            p.x = (p.x + p.mu * d_coll).clamp(edges[p.cell], edges[p.cell + 1]);
            p.t += d_coll / ctx.speed;
            out.counters.collisions += 1;
            let xi = stream.uniform() * xs.sigma_t;
            if xi < xs.sigma_s {
                p.mu = stream.isotropic_mu();
                tau = stream.optical_depth();
                continue;
            }
            if xi < xs.sigma_s + xs.sigma_f {
                out.counters.fissions += 1;
                let nu = stream.multiplicity(xs.nu_f);
                out.counters.fission_neutrons += u64::from(nu);
                for _ in 0..nu {
                    let child = Particle { mu: stream.isotropic_mu(), ..p };
                    born(child, ctx, stream, out.counters, stack);
                }
            }
            return Ok(());
        }

        out.track.score_track(p.cell, 0, p.w, d_edge);
        tau = (tau - xs.sigma_t * d_edge).max(0.0);
        p.t += d_edge / ctx.speed;
        if p.mu > 0.0 {
            p.x = edges[p.cell + 1];
            if p.cell == last {
                match ctx.right {
                    BoundaryKind::Reflective => p = reflect(p, Side::Right),
                    _ => {
                        out.counters.leaked_weight += p.w;
                        return Ok(());
                    }
                }
                continue;
            }
            p.cell += 1;
        } else {
            p.x = edges[p.cell];
            if p.cell == 0 {
                match ctx.left {
                    BoundaryKind::Reflective => p = reflect(p, Side::Left),
                    _ => {
                        out.counters.leaked_weight += p.w;
                        return Ok(());
                    }
                }
                continue;
            }
            p.cell -= 1;
        }
        if !apply_window(&mut p, ctx, stream, out.counters, stack) {
            return Ok(());
        }
    }
}

/// Systematic (comb) resampling to exactly `target` particles of equal
/// weight. The left-to-right total weight is preserved to the last bit.
pub fn comb_population(bank: &[Particle], target: usize, stream: &mut RngStream) -> Result<Vec<Particle>> {
    comb_by(bank, target, stream, |_| 1.0, true)
}

/// Comb over the line of `w / importance(p)`. Each copy of particle `p`
/// carries `importance(p) * U / target` where `U` is the total of
/// `w / importance`. Expected weight per particle is preserved; the total
/// is preserved in expectation only.
pub fn comb_population_by_importance(
    bank: &[Particle],
    target: usize,
    stream: &mut RngStream,
    importance: impl Fn(&Particle) -> f64,
) -> Result<Vec<Particle>> {
    comb_by(bank, target, stream, importance, false)
}

fn comb_by(
    bank: &[Particle],
    target: usize,
    stream: &mut RngStream,
    importance: impl Fn(&Particle) -> f64,
    exact_total: bool,
) -> Result<Vec<Particle>> {
    if bank.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    if target == 0 {
        return Err(Error::Parameter { name: "target", reason: "comb target must be at least 1".into() });
    }
    let scaled: Vec<f64> = bank.iter().map(|p| p.w / importance(p)).collect();
    let total = scaled.iter().fold(0.0, |a, v| a + v);
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::EmptyPopulation);
    }
    let spacing = total / target as f64;
    let offset = stream.uniform() * spacing;
    let mut out = Vec::with_capacity(target);
    let mut cum = 0.0;
    let mut i = 0;
    for k in 0..target {
        let tooth = offset + spacing * k as f64;
        while i + 1 < bank.len() && cum + scaled[i] <= tooth {
            cum += scaled[i];
            i += 1;
        }
        let p = &bank[i];
        out.push(Particle { w: importance(p) * spacing, ..*p });
    }
    if exact_total && target > 1 {
        let w_in = total_weight(bank);
        let head = out[..target - 1].iter().fold(0.0, |a, p| a + p.w);
        out[target - 1].w = w_in - head;
    } else if exact_total {
        out[0].w = total_weight(bank);
    }
    Ok(out)
}
