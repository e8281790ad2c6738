//! Weight windows built from an auxiliary flux, and the split / roulette
//! policy applied to particles.

use alloc::vec::Vec;

use crate::model::{CellField, WindowParams};
use crate::rng::RngStream;
use crate::{Error, Result};

/// `center_i = phi_i / max(phi) * (1 - eps_min) + eps_min`, with negative
/// auxiliary values clamped to zero first.
pub fn compute_centers(phi_aux: &[f64], eps_min: f64) -> Result<CellField> {
    let max = phi_aux.iter().map(|&v| if v.is_nan() { 0.0 } else { v.max(0.0) }).fold(0.0_f64, f64::max);
    if !(max > 0.0) || !max.is_finite() {
        return Err(Error::DegenerateWindow);
    }
    let centers = phi_aux
        .iter()
        .map(|&v| {
            let v = if v.is_nan() { 0.0 } else { v.max(0.0) };
            (v / max) * (1.0 - eps_min) + eps_min
        })
        .collect::<Vec<_>>();
    Ok(centers.into())
}

/// Raise centers that sit near `w_min`:
/// `c * (1 + (1/eps - 1) * exp(-(c - w_min) / eps))`.
pub fn apply_front_modification(centers: &[f64], eps: f64, w_min: f64) -> CellField {
    centers.iter().map(|&c| front_modified(c, eps, w_min)).collect::<Vec<_>>().into()
}

#[inline]
fn front_modified(c: f64, eps: f64, w_min: f64) -> f64 {
    c * (1.0 + (1.0 / eps - 1.0) * libm::exp(-(c - w_min) / eps))
}

/// Scans the front modification on `samples` log-spaced points of
/// `[lo, 1]` and reports whether it is nondecreasing there.
pub fn front_modification_is_monotone(eps: f64, w_min: f64, lo: f64, samples: usize) -> bool {
    let lo = lo.max(f64::MIN_POSITIVE);
    let span = libm::log(1.0 / lo);
    let mut prev = f64::NEG_INFINITY;
    for s in 0..samples {
        let c = lo * libm::exp(span * s as f64 / (samples - 1).max(1) as f64);
        let v = front_modified(c, eps, w_min);
        if v < prev {
            return false;
        }
        prev = v;
    }
    true
}

/// Windows for one phase of one timestep.
///
/// Centers, floors and ceilings are stored relative (max unmodified center is
/// 1); `scale` converts them to absolute particle weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSet {
    pub centers_raw: CellField,
    pub centers: CellField,
    pub floors: CellField,
    pub ceilings: CellField,
    pub rho: f64,
    pub front_modified: bool,
    pub scale: f64,
}

impl WindowSet {
    pub fn build(phi_aux: &[f64], params: &WindowParams) -> Result<Self> {
        let centers_raw = compute_centers(phi_aux, params.eps_min)?;
        let centers = if params.front_mod_enabled {
            apply_front_modification(&centers_raw, params.front_eps, params.front_wmin)
        } else {
            centers_raw.clone()
        };
        let rho = params.rho;
        let floors = centers.iter().map(|c| c / rho).collect::<Vec<_>>().into();
        let ceilings = centers.iter().map(|c| c * rho).collect::<Vec<_>>().into();
        Ok(Self { centers_raw, centers, floors, ceilings, rho, front_modified: params.front_mod_enabled, scale: 1.0 })
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn cells(&self) -> usize {
        self.centers.len()
    }

    #[inline]
    pub fn center(&self, cell: usize) -> f64 {
        self.centers[cell] * self.scale
    }

    #[inline]
    pub fn floor(&self, cell: usize) -> f64 {
        self.floors[cell] * self.scale
    }

    #[inline]
    pub fn ceiling(&self, cell: usize) -> f64 {
        self.ceilings[cell] * self.scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowAction {
    Pass,
    /// Replace the particle by `copies` particles of `weight` each.
    /// `capped` marks events that ran into the split cap.
    Split {
        copies: u32,
        weight: f64,
        capped: bool,
    },
    RouletteSurvive {
        weight: f64,
    },
    RouletteKill,
}

/// Compare `w` with the window of `cell`. Above the ceiling the particle is
/// split toward the center; below the floor it survives with probability
/// `w / center` at weight `center`. Expected weight is `w` in every branch.
pub fn check_particle(
    w: f64,
    cell: usize,
    windows: &WindowSet,
    split_cap: u32,
    stream: &mut RngStream,
) -> WindowAction {
    let center = windows.center(cell);
    let (floor, ceiling) = (windows.floor(cell), windows.ceiling(cell));
    if w > ceiling {
        let (copies, capped) = split_count(w, center, floor, ceiling, split_cap);
        let weight = w / copies as f64;
        debug_assert!(capped || (weight <= ceiling && weight >= floor * (1.0 - 1e-12)));
        WindowAction::Split { copies, weight, capped }
    } else if w < floor {
        if stream.uniform() * center < w {
            WindowAction::RouletteSurvive { weight: center }
        } else {
            WindowAction::RouletteKill
        }
    } else {
        WindowAction::Pass
    }
}

fn split_count(w: f64, center: f64, floor: f64, ceiling: f64, cap: u32) -> (u32, bool) {
    let ratio = w / center;
    let mut n = libm::ceil(ratio).min(u32::MAX as f64) as u32;
    // Narrow windows (rho below the golden ratio) can push ceil-split
    // daughters under the floor; one fewer daughter may fit.
    if n > 1 && w / (n as f64) < floor && w / ((n - 1) as f64) <= ceiling {
        n -= 1;
    }
    if n > cap {
        // The cap is honoured only while it still leaves daughters in the window.
        if w / cap as f64 <= ceiling {
            return (cap, true);
        }
        return (n, true);
    }
    (n.max(2), false)
}
