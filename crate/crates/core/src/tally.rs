//! Monte Carlo estimators.
//!
//! * [`TrackLengthTally`]: time-averaged scalar flux per cell and batch.
//! * [`TimeLayerTally`]: cell averages of phi, F and J from the particles
//!   frozen at a time layer (census).
//! * [`Statistics`]: batch mean, standard deviation of the mean, relative
//!   deviation and figure of merit.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::{BoundaryKind, CellField, EdgeField, Mesh1D};
use crate::transport::Particle;
use crate::{Error, Result};

/// Sums of `w * length / (dx * dt)` per (batch, cell).
#[derive(Debug, Clone, PartialEq)]
pub struct TrackLengthTally {
    cells: usize,
    batches: usize,
    inv_volume: Vec<f64>,
    sums: Vec<f64>,
}

impl TrackLengthTally {
    pub fn new(mesh: &Mesh1D, dt: f64, batches: usize) -> Self {
        let cells = mesh.cells();
        Self {
            cells,
            batches,
            inv_volume: mesh.widths().iter().map(|dx| 1.0 / (dx * dt)).collect(),
            sums: vec![0.0; cells * batches],
        }
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn batches(&self) -> usize {
        self.batches
    }

    #[inline]
    pub fn score_track(&mut self, cell: usize, batch: usize, w: f64, length: f64) {
        self.sums[batch * self.cells + cell] += w * length * self.inv_volume[cell];
    }

    pub fn batch_sums(&self, batch: usize) -> &[f64] {
        &self.sums[batch * self.cells..(batch + 1) * self.cells]
    }

    /// Adds a single-batch tally into `batch`.
    pub fn absorb(&mut self, batch: usize, partial: &TrackLengthTally) {
        debug_assert_eq!(partial.batches, 1);
        let dst = &mut self.sums[batch * self.cells..(batch + 1) * self.cells];
        for (d, s) in dst.iter_mut().zip(&partial.sums) {
            *d += s;
        }
    }

    /// Per-batch estimates of the full flux in `cell`. Each batch carries
    /// `1 / batches` of the source, so its sum is scaled by the batch count.
    pub fn batch_estimates(&self, cell: usize) -> Vec<f64> {
        let scale = self.batches as f64;
        (0..self.batches).map(|b| scale * self.sums[b * self.cells + cell]).collect()
    }
}

/// Census-time cell averages. `phi`, `f` and `j` are densities (divided by the
/// cell width) scaled by the particle speed.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeLayerTally {
    inv_width: Vec<f64>,
    speed: f64,
    pub phi: CellField,
    pub f: CellField,
    pub j: CellField,
    pub counts: Vec<u64>,
    pub weight: f64,
}

impl TimeLayerTally {
    pub fn new(mesh: &Mesh1D, speed: f64) -> Self {
        let cells = mesh.cells();
        Self {
            inv_width: mesh.widths().iter().map(|dx| 1.0 / dx).collect(),
            speed,
            phi: CellField::zeros(cells),
            f: CellField::zeros(cells),
            j: CellField::zeros(cells),
            counts: vec![0; cells],
            weight: 0.0,
        }
    }

    #[inline]
    pub fn score_census(&mut self, p: &Particle) {
        let c = p.cell;
        let s = self.speed * p.w * self.inv_width[c];
        self.phi[c] += s;
        self.f[c] += s * (1.0 / 3.0 - p.mu * p.mu);
        self.j[c] += s * p.mu;
        self.counts[c] += 1;
        self.weight += p.w;
    }

    pub fn from_particles<'a>(mesh: &Mesh1D, speed: f64, particles: impl IntoIterator<Item = &'a Particle>) -> Self {
        let mut t = Self::new(mesh, speed);
        for p in particles {
            t.score_census(p);
        }
        t
    }

    /// Multiplies phi, F and J by `factor` (counts untouched).
    pub fn rescale(&mut self, factor: f64) {
        for field in [&mut self.phi, &mut self.f, &mut self.j] {
            field.iter_mut().for_each(|v| *v *= factor);
        }
    }
}

/// Interpolates cell-average currents to cell edges.
///
/// Interior edges take the width-weighted linear interpolant of the two
/// neighbouring cells. Reflective faces carry zero current; vacuum and
/// incident faces get a one-sided linear extrapolation limited to lie between
/// zero and the adjacent cell value.
pub fn edges_from_cell_averages(
    j_cells: &[f64],
    mesh: &Mesh1D,
    left: BoundaryKind,
    right: BoundaryKind,
) -> Result<EdgeField> {
    let n = j_cells.len();
    if n != mesh.cells() {
        return Err(Error::FieldLength { expected: mesh.cells(), got: n });
    }
    if n < 2 {
        return Err(Error::Mesh("edge interpolation needs at least 2 cells".into()));
    }
    let dx = mesh.widths();
    let mut edges = vec![0.0; n + 1];
    for e in 1..n {
        edges[e] = (j_cells[e - 1] * dx[e] + j_cells[e] * dx[e - 1]) / (dx[e - 1] + dx[e]);
    }
    let extrapolate = |near: f64, next: f64, dx_near: f64, dx_next: f64| {
        let slope_frac = dx_near / (dx_near + dx_next);
        let v = near + (near - next) * slope_frac;
        v.clamp(near.min(0.0), near.max(0.0))
    };
    edges[0] = match left {
        BoundaryKind::Reflective => 0.0,
        _ => extrapolate(j_cells[0], j_cells[1], dx[0], dx[1]),
    };
    edges[n] = match right {
        BoundaryKind::Reflective => 0.0,
        _ => extrapolate(j_cells[n - 1], j_cells[n - 2], dx[n - 1], dx[n - 2]),
    };
    Ok(edges.into())
}

/// Batch statistics of one tally.
#[derive(Debug, Clone, PartialEq)]
pub struct Statistics {
    pub mean: Vec<f64>,
    /// Standard deviation of the mean over batches.
    pub sigma: Vec<f64>,
    /// `sigma / mean`; 0 in cells with zero mean.
    pub rel_sigma: Vec<f64>,
    /// `1 / (sigma^2 T)`; NaN in empty cells, +inf where sigma vanishes on a
    /// nonzero mean.
    pub fom: Vec<f64>,
    pub wall_time: f64,
}

impl Statistics {
    pub fn infinite_fom_cells(&self) -> usize {
        self.fom.iter().filter(|f| f.is_infinite()).count()
    }
}

/// Mean and standard deviation of the mean of independent batch estimates.
pub fn mean_and_sigma(batch_values: &[f64]) -> Result<(f64, f64)> {
    let b = batch_values.len();
    if b < 2 {
        return Err(Error::TooFewBatches(b));
    }
    let mean = batch_values.iter().sum::<f64>() / b as f64;
    let ss: f64 = batch_values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let var_of_mean = ss / ((b - 1) * b) as f64;
    Ok((mean, libm::sqrt(var_of_mean)))
}

/// Statistics from per-cell batch estimates and the transport wall time.
pub fn statistics_from_batches(per_cell: impl IntoIterator<Item = Vec<f64>>, wall_time: f64) -> Result<Statistics> {
    let mut stats =
        Statistics { mean: Vec::new(), sigma: Vec::new(), rel_sigma: Vec::new(), fom: Vec::new(), wall_time };
    for batches in per_cell {
        let (mean, sigma) = mean_and_sigma(&batches)?;
        let rel = if mean != 0.0 { sigma / libm::fabs(mean) } else { 0.0 };
        let fom = if mean == 0.0 {
            f64::NAN
        } else if sigma == 0.0 || wall_time <= 0.0 {
            f64::INFINITY
        } else {
            1.0 / (sigma * sigma * wall_time)
        };
        stats.mean.push(mean);
        stats.sigma.push(sigma);
        stats.rel_sigma.push(rel);
        stats.fom.push(fom);
    }
    Ok(stats)
}

pub fn finalize_statistics(tally: &TrackLengthTally, wall_time: f64) -> Result<Statistics> {
    statistics_from_batches((0..tally.cells()).map(|c| tally.batch_estimates(c)), wall_time)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn particle(x: f64, mu: f64, w: f64, cell: usize) -> Particle {
        Particle { x, mu, t: 1.0, w, cell }
    }

    #[test]
    fn track_unit_normalization() {
        let mesh = Mesh1D::uniform(0.0, 2.0, 4).unwrap();
        let dt = 0.25;
        let mut t = TrackLengthTally::new(&mesh, dt, 1);
        t.score_track(1, 0, 1.0, 0.5);
        assert!((t.batch_sums(0)[1] - 1.0 / dt).abs() < 1e-14);
        t.score_track(2, 0, 1.0, 0.0);
        assert_eq!(t.batch_sums(0)[2], 0.0);
    }

    #[test]
    fn track_additivity() {
        let mesh = Mesh1D::uniform(0.0, 1.0, 2).unwrap();
        let mut halves = TrackLengthTally::new(&mesh, 1.0, 1);
        halves.score_track(0, 0, 0.7, 0.25);
        halves.score_track(0, 0, 0.7, 0.25);
        let mut whole = TrackLengthTally::new(&mesh, 1.0, 1);
        whole.score_track(0, 0, 0.7, 0.5);
        assert!((halves.batch_sums(0)[0] - whole.batch_sums(0)[0]).abs() < 1e-15);
    }

    #[test]
    fn census_scores() {
        let mesh = Mesh1D::uniform(0.0, 1.0, 2).unwrap();
        let mut t = TimeLayerTally::new(&mesh, 1.0);
        t.score_census(&particle(0.2, 1.0, 1.0, 0));
        assert!((t.f[0] - (-4.0 / 3.0)).abs() < 1e-15);
        assert_eq!(t.j[0], 2.0);
        let mut t = TimeLayerTally::new(&mesh, 1.0);
        t.score_census(&particle(0.7, 0.0, 1.0, 1));
        assert_eq!(t.j[1], 0.0);
        assert!((t.f[1] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(t.phi[1], 2.0);
        assert_eq!(t.counts, vec![0, 1]);
    }

    #[test]
    fn isotropic_census_has_null_f() {
        let mesh = Mesh1D::uniform(0.0, 1.0, 1).unwrap();
        let n = 20_001;
        // midpoint rule in mu over [-1, 1]
        let ps: Vec<_> =
            (0..n).map(|k| particle(0.5, -1.0 + (2.0 * k as f64 + 1.0) / n as f64, 1.0 / n as f64, 0)).collect();
        let t = TimeLayerTally::from_particles(&mesh, 1.0, &ps);
        assert!(t.f[0].abs() < 1e-8);
        assert!(t.j[0].abs() < 1e-12);
    }

    #[test]
    fn edge_interpolation() {
        let mesh = Mesh1D::uniform(0.0, 2.0, 2).unwrap();
        let r = BoundaryKind::Reflective;
        let e = edges_from_cell_averages(&[1.0, 3.0], &mesh, r, r).unwrap();
        assert_eq!(e.0, vec![0.0, 2.0, 0.0]);
        let mesh = Mesh1D::new(vec![0.0, 1.0, 4.0, 4.5]).unwrap();
        let e = edges_from_cell_averages(&[0.7, 0.7, 0.7], &mesh, r, r).unwrap();
        assert!((e[1] - 0.7).abs() < 1e-15 && (e[2] - 0.7).abs() < 1e-15);
        assert_eq!((e[0], e[3]), (0.0, 0.0));
        // width weighting: the nearer center dominates
        let e = edges_from_cell_averages(&[0.0, 4.0, 0.0], &mesh, r, r).unwrap();
        assert!((e[1] - 4.0 * 1.0 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn vacuum_edges_extrapolate_with_limit() {
        let mesh = Mesh1D::uniform(0.0, 3.0, 3).unwrap();
        let v = BoundaryKind::Vacuum;
        let e = edges_from_cell_averages(&[-1.0, -0.5, 0.5], &mesh, v, v).unwrap();
        // left: -1 + (-1 + 0.5) / 2 = -1.25, limited to [-1, 0]
        assert_eq!(e[0], -1.0);
        // right: 0.5 + (0.5 + 0.5) / 2 = 1.0, limited to [0, 0.5]
        assert_eq!(e[3], 0.5);
        let e = edges_from_cell_averages(&[-1.0, -2.0, 0.5], &mesh, v, v).unwrap();
        assert_eq!(e[0], -0.5);
    }

    #[test]
    fn edge_interpolation_needs_two_cells() {
        let mesh = Mesh1D::uniform(0.0, 1.0, 1).unwrap();
        let r = BoundaryKind::Reflective;
        assert!(matches!(edges_from_cell_averages(&[1.0], &mesh, r, r), Err(Error::Mesh(_))));
    }

    #[test]
    fn statistics_example() {
        let s = statistics_from_batches([vec![2.0, 4.0]], 0.25).unwrap();
        assert_eq!(s.mean[0], 3.0);
        assert!((s.sigma[0] - 1.0).abs() < 1e-15);
        assert!((s.fom[0] - 4.0).abs() < 1e-12);
        assert!((s.rel_sigma[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn statistics_conventions() {
        let s = statistics_from_batches([vec![5.0; 4], vec![0.0; 4]], 1.0).unwrap();
        assert_eq!(s.sigma[0], 0.0);
        assert!(s.fom[0].is_infinite());
        assert_eq!(s.rel_sigma[1], 0.0);
        assert!(s.fom[1].is_nan());
        assert_eq!(s.infinite_fom_cells(), 1);
        assert_eq!(statistics_from_batches([vec![1.0]], 1.0), Err(Error::TooFewBatches(1)));
    }
}
