//! Reference solutions: tabulated benchmark flux, the infinite-medium growth
//! law and pointwise relative error.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::model::{effective_scattering_ratio, ProblemSpec, TimeGrid};
use crate::{Error, Result};

/// Times must agree with the run's time layers to this tolerance.
pub const TIME_TOLERANCE: f64 = 1e-9;

/// One row of a reference file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceRow {
    pub t: f64,
    pub cell_index: usize,
    pub x_center: f64,
    pub phi: f64,
}

/// Cell-averaged reference flux on a set of time layers.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTable {
    times: Vec<f64>,
    cells: usize,
    /// `flux[k * cells + i]` is the flux in cell `i` at `times[k]`.
    flux: Vec<f64>,
    pub provenance: String,
}

impl ReferenceTable {
    /// Groups rows by time. Rows of one time layer must be contiguous, every
    /// layer must list each of `cells` cells exactly once, and layers must be
    /// strictly increasing in time.
    pub fn from_rows(rows: &[ReferenceRow], cells: usize, provenance: impl Into<String>) -> Result<Self> {
        let bad = |msg: String| Error::Reference(msg);
        if rows.is_empty() {
            return Err(bad("reference has no rows".into()));
        }
        if cells == 0 || !rows.len().is_multiple_of(cells) {
            return Err(bad(format!("cell_index: {} rows do not form whole layers of {cells} cells", rows.len())));
        }
        let mut times = Vec::with_capacity(rows.len() / cells);
        let mut flux = alloc::vec![f64::NAN; rows.len()];
        for (k, layer) in rows.chunks(cells).enumerate() {
            let t = layer[0].t;
            if !t.is_finite() {
                return Err(bad(format!("t: non-finite time {t}")));
            }
            if let Some(&prev) = times.last() {
                if !(t > prev) {
                    return Err(bad(format!("t: times not increasing ({prev} then {t})")));
                }
            }
            let mut seen = alloc::vec![false; cells];
            for row in layer {
                if row.t != t {
                    return Err(bad(format!(
                        "t: layer at t = {t} has {} cells instead of {cells}",
                        layer.iter().take_while(|r| r.t == t).count()
                    )));
                }
                if row.cell_index >= cells {
                    return Err(bad(format!("cell_index: {} out of range for {cells} cells", row.cell_index)));
                }
                if core::mem::replace(&mut seen[row.cell_index], true) {
                    return Err(bad(format!("cell_index: cell {} repeated at t = {t}", row.cell_index)));
                }
                if !row.phi.is_finite() {
                    return Err(bad(format!("phi: non-finite value at t = {t}, cell {}", row.cell_index)));
                }
                flux[k * cells + row.cell_index] = row.phi;
            }
            times.push(t);
        }
        Ok(Self { times, cells, flux, provenance: provenance.into() })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    /// Flux layer at time `t`, matched to [`TIME_TOLERANCE`].
    pub fn flux_at(&self, t: f64) -> Option<&[f64]> {
        let k = self.times.iter().position(|&s| libm::fabs(s - t) <= TIME_TOLERANCE)?;
        Some(&self.flux[k * self.cells..(k + 1) * self.cells])
    }

    /// Checks that every point of `grid` has a layer and the cell count is `cells`.
    pub fn check_covers(&self, grid: &TimeGrid, cells: usize) -> Result<()> {
        if self.cells != cells {
            return Err(Error::Reference(format!("cell_index: reference has {} cells, mesh has {cells}", self.cells)));
        }
        match grid.points().iter().find(|&&t| self.flux_at(t).is_none()) {
            Some(t) => Err(Error::Reference(format!("t: no reference layer at t = {t}"))),
            None => Ok(()),
        }
    }
}

/// Total weight predicted by the infinite-medium balance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthLaw {
    pub weight: f64,
    /// False once the wavefront `v t` reaches the nearest slab face.
    pub in_regime: bool,
}

/// `W0 exp((c - 1) sigma_t v t)` with `c` and `sigma_t` from the first
/// material layer at the source cell.
pub fn growth_law(t: f64, spec: &ProblemSpec) -> Result<GrowthLaw> {
    let cell = spec.mesh.locate(spec.source.position)?;
    let xs = spec.material.xs(0, cell);
    let c = effective_scattering_ratio(xs)?;
    let elapsed = t - spec.source.time;
    let weight = spec.source.weight * libm::exp((c - 1.0) * xs.sigma_t * spec.speed * elapsed);
    let half_width = (spec.source.position - spec.mesh.lo()).min(spec.mesh.hi() - spec.source.position);
    let in_regime = spec.speed * elapsed < half_width;
    if !in_regime {
        log::warn!("growth law evaluated at t = {t} outside the infinite-medium regime");
    }
    Ok(GrowthLaw { weight, in_regime })
}

/// `|phi - ref| / ref` where `ref > threshold`, `None` elsewhere.
pub fn relative_error(phi: &[f64], reference: &[f64], threshold: f64) -> Result<Vec<Option<f64>>> {
    if phi.len() != reference.len() {
        return Err(Error::FieldLength { expected: reference.len(), got: phi.len() });
    }
    Ok(phi.iter().zip(reference).map(|(&p, &r)| (r > threshold).then(|| libm::fabs(p - r) / r)).collect())
}
