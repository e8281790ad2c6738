//! Finite-volume solve of the low-order second-moment (LOSM) equations over
//! one timestep.
//!
//! Unknowns are cell-average fluxes `phi_i` and edge currents `J_e`. The
//! balance equation is integrated over primal cells,
//!
//! ```text
//! J_{i+1/2} - J_{i-1/2} + (S_i - sigma_s,i - nu sigma_f,i) dx_i phi_i = B_i
//! ```
//!
//! and the first-moment equation over dual cells `[x_{i-1}, x_i]`,
//!
//! ```text
//! (phi_i - phi_{i-1}) / 3 + S_{i-1/2} dx_{i-1/2} J_{i-1/2} = R_{i-1/2}
//! ```
//!
//! with `S = sigma_t + theta / (v dt)`, `theta = 1` for backward Euler and `2`
//! for Crank-Nicolson, and `S_{i-1/2}` the width-weighted average of the two
//! neighbours. `B` and `R` hold the previous layer and the closure gradients
//! `F_i - F_{i-1}` (current layer, plus previous layer for Crank-Nicolson).
//!
//! Interior currents are eliminated into the balance equation, leaving a
//! symmetric tridiagonal system in `phi` solved directly. Reflective faces
//! carry `J = 0`. Vacuum and incident faces use the Marshak-type row
//! `J = -/+ phi_b / 2 + s` closed over the boundary half cell.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::{BoundaryKind, CellField, CrossSections, EdgeField, Mesh1D, ProblemSpec, Side};
use crate::tridiag::solve_tridiagonal;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    BackwardEuler,
    CrankNicolson,
}

impl Scheme {
    fn theta(self) -> f64 {
        match self {
            Scheme::BackwardEuler => 1.0,
            Scheme::CrankNicolson => 2.0,
        }
    }
}

/// Monte Carlo derived inputs of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosureData {
    pub phi_prev: CellField,
    pub j_prev_edges: EdgeField,
    pub f_prev: CellField,
    /// `None` lags the closure: `f_prev` stands in for the current layer.
    pub f_curr: Option<CellField>,
    pub q_prev: CellField,
    pub q_curr: CellField,
}

impl ClosureData {
    /// Closure without an external source.
    pub fn sourceless(
        phi_prev: CellField,
        j_prev_edges: EdgeField,
        f_prev: CellField,
        f_curr: Option<CellField>,
    ) -> Self {
        let cells = phi_prev.len();
        Self {
            phi_prev,
            j_prev_edges,
            f_prev,
            f_curr,
            q_prev: CellField::zeros(cells),
            q_curr: CellField::zeros(cells),
        }
    }

    pub fn is_semi_implicit(&self) -> bool {
        self.f_curr.is_none()
    }

    fn f_curr_or_lagged(&self) -> &CellField {
        self.f_curr.as_ref().unwrap_or(&self.f_prev)
    }

    fn check(&self, cells: usize) -> Result<()> {
        let mut lens = vec![
            (cells, self.phi_prev.len()),
            (cells + 1, self.j_prev_edges.len()),
            (cells, self.f_prev.len()),
            (cells, self.q_prev.len()),
            (cells, self.q_curr.len()),
        ];
        if let Some(f) = &self.f_curr {
            lens.push((cells, f.len()));
        }
        match lens.into_iter().find(|(e, g)| e != g) {
            Some((expected, got)) => Err(Error::FieldLength { expected, got }),
            None => Ok(()),
        }
    }
}

/// Geometry, data and step size of one solve.
#[derive(Debug, Clone, Copy)]
pub struct LosmProblem<'a> {
    pub mesh: &'a Mesh1D,
    pub xs_prev: &'a [CrossSections],
    pub xs_curr: &'a [CrossSections],
    pub speed: f64,
    pub dt: f64,
    pub left: BoundaryKind,
    pub right: BoundaryKind,
}

impl<'a> LosmProblem<'a> {
    /// Step `n` of `spec`: layers `n - 1` and `n`.
    pub fn for_step(spec: &'a ProblemSpec, n: usize) -> Self {
        Self {
            mesh: &spec.mesh,
            xs_prev: spec.material.layer(n - 1),
            xs_curr: spec.material.layer(n),
            speed: spec.speed,
            dt: spec.time.dt(n),
            left: spec.left,
            right: spec.right,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LosmSolution {
    pub phi: CellField,
    pub j_edges: EdgeField,
    pub scheme: Scheme,
}

/// Boundary closure `J_b = phi_coeff * phi_b + constant` or `J_b = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryRow {
    ZeroCurrent,
    Marshak { phi_coeff: f64, constant: f64 },
}

/// `J(0) = -phi(0)/2 + 2 J_L + P_L` and `J(X) = phi(X)/2 + 2 J_R - P_R`.
///
/// `current` is the signed incoming partial current (nonpositive on the right
/// face). Vacuum is the incident row with zero data.
pub fn incident_bc_coefficients(side: Side, kind: BoundaryKind) -> BoundaryRow {
    let (current, p) = match kind {
        BoundaryKind::Reflective => return BoundaryRow::ZeroCurrent,
        BoundaryKind::Vacuum => (0.0, 0.0),
        BoundaryKind::Incident { current, p } => (current, p),
    };
    match side {
        Side::Left => BoundaryRow::Marshak { phi_coeff: -0.5, constant: 2.0 * current + p },
        Side::Right => BoundaryRow::Marshak { phi_coeff: 0.5, constant: 2.0 * current - p },
    }
}

/// Incoming partial current and boundary functional of a constant incoming
/// angular flux `a`: `J_in = a / 2` (signed by side) and `P = 0`.
pub fn isotropic_incident(side: Side, a: f64) -> BoundaryKind {
    let current = match side {
        Side::Left => 0.5 * a,
        Side::Right => -0.5 * a,
    };
    BoundaryKind::Incident { current, p: 0.0 }
}

pub fn solve_be(closure: &ClosureData, spec: &ProblemSpec, n: usize) -> Result<LosmSolution> {
    solve(&LosmProblem::for_step(spec, n), closure, Scheme::BackwardEuler)
}

pub fn solve_cn(closure: &ClosureData, spec: &ProblemSpec, n: usize) -> Result<LosmSolution> {
    solve(&LosmProblem::for_step(spec, n), closure, Scheme::CrankNicolson)
}

/// Assembled coefficients of the unreduced system.
struct Assembly {
    /// Balance removal `(S_i - sigma_s - nu sigma_f) dx_i`.
    removal: Vec<f64>,
    /// Balance right-hand side (already multiplied by `dx_i`).
    balance_rhs: Vec<f64>,
    /// `S_{e} dx_{e}` on interior edges (index = edge; ends unused).
    edge_coeff: Vec<f64>,
    /// First-moment right-hand side on interior edges.
    edge_rhs: Vec<f64>,
    left: Face,
    right: Face,
}

/// Boundary face reduced to `J_b = offset + slope * phi_adjacent`, with the
/// data needed to check the unreduced half-cell equation.
#[derive(Clone, Copy)]
struct Face {
    row: BoundaryRow,
    offset: f64,
    slope: f64,
    half_coeff: f64,
    half_rhs: f64,
}

fn assemble(problem: &LosmProblem<'_>, closure: &ClosureData, scheme: Scheme) -> Result<Assembly> {
    let mesh = problem.mesh;
    let cells = mesh.cells();
    if cells < 2 {
        return Err(Error::Mesh("LOSM solve needs at least 2 cells".into()));
    }
    closure.check(cells)?;
    if problem.xs_prev.len() != cells || problem.xs_curr.len() != cells {
        return Err(Error::FieldLength { expected: cells, got: problem.xs_curr.len().min(problem.xs_prev.len()) });
    }
    if !(problem.dt > 0.0) {
        return Err(Error::Parameter { name: "dt", reason: "must be positive".into() });
    }
    let dx = mesh.widths();
    let inv_vdt = 1.0 / (problem.speed * problem.dt);
    let tau = scheme.theta() * inv_vdt;
    let (cur, prev) = (problem.xs_curr, problem.xs_prev);
    let hat: Vec<f64> = cur.iter().map(|x| x.sigma_t + tau).collect();
    let phi0 = &closure.phi_prev;
    let j0 = &closure.j_prev_edges;
    let f_now = closure.f_curr_or_lagged();
    let f0 = &closure.f_prev;

    let removal = (0..cells).map(|i| (hat[i] - cur[i].sigma_s - cur[i].nu_f * cur[i].sigma_f) * dx[i]).collect();
    let balance_rhs = (0..cells)
        .map(|i| match scheme {
            Scheme::BackwardEuler => dx[i] * (closure.q_curr[i] + phi0[i] * inv_vdt),
            Scheme::CrankNicolson => {
                let gain = prev[i].sigma_s + prev[i].nu_f * prev[i].sigma_f + 2.0 * inv_vdt - prev[i].sigma_t;
                dx[i] * (closure.q_curr[i] + closure.q_prev[i] + gain * phi0[i]) + j0[i] - j0[i + 1]
            }
        })
        .collect();

    let mut edge_coeff = vec![0.0; cells + 1];
    let mut edge_rhs = vec![0.0; cells + 1];
    for e in 1..cells {
        let (l, r) = (e - 1, e);
        let dual = mesh.dual_width(e);
        edge_coeff[e] = 0.5 * (hat[l] * dx[l] + hat[r] * dx[r]);
        let grad_f = f_now[r] - f_now[l];
        edge_rhs[e] = match scheme {
            Scheme::BackwardEuler => dual * j0[e] * inv_vdt + grad_f,
            Scheme::CrankNicolson => {
                let sigma_bar = 0.5 * (prev[l].sigma_t * dx[l] + prev[r].sigma_t * dx[r]);
                grad_f + (f0[r] - f0[l]) - (phi0[r] - phi0[l]) / 3.0 + (2.0 * dual * inv_vdt - sigma_bar) * j0[e]
            }
        };
    }

    let face = |side: Side| -> Face {
        let kind = match side {
            Side::Left => problem.left,
            Side::Right => problem.right,
        };
        let row = incident_bc_coefficients(side, kind);
        let BoundaryRow::Marshak { phi_coeff: c, constant: s } = row else {
            return Face { row, offset: 0.0, slope: 0.0, half_coeff: 0.0, half_rhs: 0.0 };
        };
        let (cell, edge, sign) = match side {
            Side::Left => (0, 0, 1.0),
            Side::Right => (cells - 1, cells, -1.0),
        };
        // Half cell between the face and the adjacent cell center. The
        // closure gradient across it is taken as zero.
        let h = 0.5 * dx[cell];
        let half_coeff = hat[cell] * h;
        let half_rhs = match scheme {
            Scheme::BackwardEuler => h * j0[edge] * inv_vdt,
            Scheme::CrankNicolson => {
                let phi_b_prev = (j0[edge] - s) / c;
                // sign * (phi_center - phi_face) is the outward-oriented difference
                -sign * (phi0[cell] - phi_b_prev) / 3.0 + h * (2.0 * inv_vdt - prev[cell].sigma_t) * j0[edge]
            }
        };
        // left:  (phi_0 - phi_b)/3 + half_coeff J = half_rhs, phi_b = (J - s)/c
        // right: (phi_b - phi_I)/3 + half_coeff J = half_rhs
        let denom = half_coeff - sign / (3.0 * c);
        let offset = (half_rhs - sign * s / (3.0 * c)) / denom;
        let slope = -sign / 3.0 / denom;
        Face { row, offset, slope, half_coeff, half_rhs }
    };

    Ok(Assembly { removal, balance_rhs, edge_coeff, edge_rhs, left: face(Side::Left), right: face(Side::Right) })
}

pub fn solve(problem: &LosmProblem<'_>, closure: &ClosureData, scheme: Scheme) -> Result<LosmSolution> {
    let a = assemble(problem, closure, scheme)?;
    let cells = problem.mesh.cells();
    let mut lower = vec![0.0; cells];
    let mut diag = a.removal.clone();
    let mut upper = vec![0.0; cells];
    let mut rhs = a.balance_rhs.clone();
    for i in 0..cells {
        // +J_{i+1/2}
        if i + 1 < cells {
            let k = 1.0 / (3.0 * a.edge_coeff[i + 1]);
            diag[i] += k;
            upper[i] -= k;
            rhs[i] -= a.edge_rhs[i + 1] / a.edge_coeff[i + 1];
        } else {
            diag[i] += a.right.slope;
            rhs[i] -= a.right.offset;
        }
        // -J_{i-1/2}
        if i > 0 {
            let k = 1.0 / (3.0 * a.edge_coeff[i]);
            diag[i] += k;
            lower[i] -= k;
            rhs[i] += a.edge_rhs[i] / a.edge_coeff[i];
        } else {
            diag[i] -= a.left.slope;
            rhs[i] += a.left.offset;
        }
    }
    let phi = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
    let mut j = vec![0.0; cells + 1];
    for e in 1..cells {
        j[e] = (a.edge_rhs[e] - (phi[e] - phi[e - 1]) / 3.0) / a.edge_coeff[e];
    }
    j[0] = a.left.offset + a.left.slope * phi[0];
    j[cells] = a.right.offset + a.right.slope * phi[cells - 1];
    if let Some(bad) = phi.iter().chain(&j).find(|v| !v.is_finite()) {
        return Err(Error::SingularSystem { row: 0, pivot: *bad });
    }
    Ok(LosmSolution { phi: phi.into(), j_edges: j.into(), scheme })
}

/// Largest residual of the unreduced finite-volume equations at `sol`,
/// relative to the largest right-hand side entry.
pub fn residual(problem: &LosmProblem<'_>, closure: &ClosureData, sol: &LosmSolution) -> Result<f64> {
    let a = assemble(problem, closure, sol.scheme)?;
    let cells = problem.mesh.cells();
    let (phi, j) = (&sol.phi, &sol.j_edges);
    let mut worst = 0.0_f64;
    let mut scale = f64::MIN_POSITIVE;
    for i in 0..cells {
        let r = j[i + 1] - j[i] + a.removal[i] * phi[i] - a.balance_rhs[i];
        worst = worst.max(r.abs());
        scale = scale.max(a.balance_rhs[i].abs()).max((a.removal[i] * phi[i]).abs());
    }
    for e in 1..cells {
        let r = (phi[e] - phi[e - 1]) / 3.0 + a.edge_coeff[e] * j[e] - a.edge_rhs[e];
        worst = worst.max(r.abs());
        scale = scale.max(a.edge_rhs[e].abs()).max((phi[e] / 3.0).abs());
    }
    for (face, edge, cell, sign) in [(a.left, 0, 0, 1.0), (a.right, cells, cells - 1, -1.0)] {
        let r = match face.row {
            BoundaryRow::ZeroCurrent => j[edge],
            BoundaryRow::Marshak { phi_coeff: c, constant: s } => {
                let phi_b = (j[edge] - s) / c;
                sign * (phi[cell] - phi_b) / 3.0 + face.half_coeff * j[edge] - face.half_rhs
            }
        };
        worst = worst.max(r.abs());
    }
    Ok(worst / scale)
}
