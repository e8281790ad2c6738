//! Problem definition shared by every other module.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Deref, DerefMut};
use core::str::FromStr;

use crate::{Error, Result};

/// Spatial mesh `x_{-1/2} < x_{1/2} < ... < x_{I-1/2}` over a slab.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    edges: Vec<f64>,
    widths: Vec<f64>,
}

impl Mesh1D {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::Mesh("need at least one cell (two edges)".into()));
        }
        if edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::Mesh("non-finite edge".into()));
        }
        let widths: Vec<f64> = edges.windows(2).map(|w| w[1] - w[0]).collect();
        if let Some(i) = widths.iter().position(|&w| w <= 0.0) {
            return Err(Error::Mesh(format!("edges not strictly increasing at cell {i}")));
        }
        Ok(Self { edges, widths })
    }

    /// `cells` equal cells over `[lo, hi]`. The last edge is exactly `hi`.
    pub fn uniform(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::Mesh("cell count must be at least 1".into()));
        }
        let h = (hi - lo) / cells as f64;
        let mut edges: Vec<f64> = (0..=cells).map(|i| lo + h * i as f64).collect();
        edges[cells] = hi;
        Self::new(edges)
    }

    pub fn cells(&self) -> usize {
        self.widths.len()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn width(&self, cell: usize) -> f64 {
        self.widths[cell]
    }

    pub fn lo(&self) -> f64 {
        self.edges[0]
    }

    pub fn hi(&self) -> f64 {
        self.edges[self.cells()]
    }

    pub fn length(&self) -> f64 {
        self.hi() - self.lo()
    }

    pub fn center(&self, cell: usize) -> f64 {
        0.5 * (self.edges[cell] + self.edges[cell + 1])
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.cells()).map(|i| self.center(i)).collect()
    }

    /// Width of the dual cell around interior edge `edge` (between cells
    /// `edge - 1` and `edge`): `(dx[edge-1] + dx[edge]) / 2`.
    pub fn dual_width(&self, edge: usize) -> f64 {
        debug_assert!(edge >= 1 && edge < self.cells());
        0.5 * (self.widths[edge - 1] + self.widths[edge])
    }

    /// Cell containing `x`. Interior edges belong to the cell on their right;
    /// the right domain boundary belongs to the last cell.
    pub fn locate(&self, x: f64) -> Result<usize> {
        let (lo, hi) = (self.lo(), self.hi());
        if !(x >= lo && x <= hi) {
            return Err(Error::OutOfDomain { x, lo, hi });
        }
        // first edge strictly greater than x
        let above = self.edges.partition_point(|&e| e <= x);
        Ok((above.max(1) - 1).min(self.cells() - 1))
    }

    /// Like [`Mesh1D::locate`], but a point exactly on an interior edge goes to
    /// the cell it is moving into.
    pub fn locate_directed(&self, x: f64, mu: f64) -> Result<usize> {
        let cell = self.locate(x)?;
        if mu < 0.0 && cell > 0 && x == self.edges[cell] {
            Ok(cell - 1)
        } else {
            Ok(cell)
        }
    }
}

/// Macroscopic data of one cell on one time layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossSections {
    pub sigma_t: f64,
    pub sigma_s: f64,
    pub sigma_f: f64,
    pub nu_f: f64,
}

impl CrossSections {
    /// `sigma_t - sigma_s - nu_f * sigma_f`; negative in a multiplying medium.
    pub fn net_removal(&self) -> f64 {
        self.sigma_t - self.sigma_s - self.nu_f * self.sigma_f
    }

    fn validate(&self) -> Result<()> {
        let all = [self.sigma_t, self.sigma_s, self.sigma_f, self.nu_f];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Material("non-finite cross section".into()));
        }
        if self.sigma_s < 0.0 || self.sigma_f < 0.0 {
            return Err(Error::Material("negative partial cross section".into()));
        }
        let partial = self.sigma_s + self.sigma_f;
        if self.sigma_t < partial * (1.0 - 4.0 * f64::EPSILON) {
            return Err(Error::Material(format!(
                "sigma_t = {} below sigma_s + sigma_f = {partial} (negative capture)",
                self.sigma_t
            )));
        }
        if self.nu_f < 0.0 {
            return Err(Error::Material("nu_f must be nonnegative".into()));
        }
        Ok(())
    }
}

/// `(sigma_s + nu_f sigma_f) / sigma_t`.
pub fn effective_scattering_ratio(xs: &CrossSections) -> Result<f64> {
    if xs.sigma_t == 0.0 {
        return Err(Error::ZeroTotalCrossSection);
    }
    Ok((xs.sigma_s + xs.nu_f * xs.sigma_f) / xs.sigma_t)
}

/// Cross sections per cell per time layer (`layers` = steps + 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    cells: usize,
    layers: usize,
    data: Vec<CrossSections>,
}

impl Material {
    /// Same data in every cell and on every layer.
    pub fn uniform(xs: CrossSections, cells: usize, layers: usize) -> Result<Self> {
        Self::from_fn(cells, layers, |_, _| xs)
    }

    pub fn from_fn(cells: usize, layers: usize, mut f: impl FnMut(usize, usize) -> CrossSections) -> Result<Self> {
        let mut data = Vec::with_capacity(cells * layers);
        for layer in 0..layers {
            for cell in 0..cells {
                let xs = f(layer, cell);
                xs.validate()?;
                data.push(xs);
            }
        }
        Ok(Self { cells, layers, data })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    #[inline]
    pub fn xs(&self, layer: usize, cell: usize) -> &CrossSections {
        &self.data[layer * self.cells + cell]
    }

    pub fn layer(&self, layer: usize) -> &[CrossSections] {
        &self.data[layer * self.cells..(layer + 1) * self.cells]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    t: Vec<f64>,
    dt: Vec<f64>,
}

impl TimeGrid {
    pub fn new(t: Vec<f64>) -> Result<Self> {
        if t.len() < 2 {
            return Err(Error::TimeGrid("need at least one step".into()));
        }
        let dt: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
        if let Some(n) = dt.iter().position(|&d| !(d > 0.0)) {
            return Err(Error::TimeGrid(format!("time points not increasing at step {n}")));
        }
        Ok(Self { t, dt })
    }

    pub fn uniform(t0: f64, t_end: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::TimeGrid("need at least one step".into()));
        }
        let h = (t_end - t0) / steps as f64;
        let mut t: Vec<f64> = (0..=steps).map(|n| t0 + h * n as f64).collect();
        t[steps] = t_end;
        Self::new(t)
    }

    pub fn steps(&self) -> usize {
        self.dt.len()
    }

    pub fn points(&self) -> &[f64] {
        &self.t
    }

    /// Time of layer `n` (`0..=steps`).
    pub fn t(&self, n: usize) -> f64 {
        self.t[n]
    }

    /// Size of step `n` (`1..=steps`), i.e. `t[n] - t[n-1]`.
    pub fn dt(&self, n: usize) -> f64 {
        self.dt[n - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Boundary condition of one slab face.
///
/// `Incident` carries the incoming partial current (signed, so it is
/// nonpositive on the right face) and the boundary functional `P`. It is
/// honoured by the LOSM solver only; Monte Carlo particles leak through it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryKind {
    Reflective,
    Vacuum,
    Incident { current: f64, p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec {
    pub position: f64,
    pub time: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunMode {
    Analog,
    WwPrevious,
    WwLosmBe,
    WwLosmCn,
    WwReference,
}

impl RunMode {
    pub const ALL: [RunMode; 5] =
        [RunMode::Analog, RunMode::WwPrevious, RunMode::WwLosmBe, RunMode::WwLosmCn, RunMode::WwReference];

    pub fn name(self) -> &'static str {
        match self {
            RunMode::Analog => "analog",
            RunMode::WwPrevious => "ww-previous",
            RunMode::WwLosmBe => "ww-losm-be",
            RunMode::WwLosmCn => "ww-losm-cn",
            RunMode::WwReference => "ww-reference",
        }
    }

    pub fn uses_windows(self) -> bool {
        self != RunMode::Analog
    }

    pub fn is_losm(self) -> bool {
        matches!(self, RunMode::WwLosmBe | RunMode::WwLosmCn)
    }
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RunMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RunMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parameter { name: "mode", reason: format!("unknown mode `{s}`") })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowParams {
    pub rho: f64,
    pub eps_min: f64,
    pub front_eps: f64,
    pub front_wmin: f64,
    pub front_mod_enabled: bool,
    pub split_cap: u32,
}

impl Default for WindowParams {
    fn default() -> Self {
        Self { rho: 2.5, eps_min: 1e-4, front_eps: 1e-4, front_wmin: 1e-4, front_mod_enabled: true, split_cap: 1000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PopulationTarget {
    None,
    Count(usize),
}

/// Everything needed to run the simulation. Immutable once validated.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub mesh: Mesh1D,
    pub material: Material,
    pub time: TimeGrid,
    pub speed: f64,
    pub source: SourceSpec,
    pub left: BoundaryKind,
    pub right: BoundaryKind,
    pub mode: RunMode,
    pub windows: WindowParams,
    pub filter_k: usize,
    pub n_histories: usize,
    pub n_batches: usize,
    pub seed: u64,
    pub population_target: PopulationTarget,
}

impl ProblemSpec {
    /// Fission-driven point impulse in a 41 cm reflected slab, c = 1.1,
    /// 201 cells, 20 steps of 0.5 s.
    pub fn azurv1_impulse(mode: RunMode, n_histories: usize, seed: u64) -> Result<Self> {
        let cells = 201;
        let steps = 20;
        let mesh = Mesh1D::uniform(-20.5, 20.5, cells)?;
        let xs = CrossSections { sigma_t: 1.0, sigma_s: 1.0 / 3.0, sigma_f: 1.0 / 3.0, nu_f: 2.3 };
        let spec = Self {
            material: Material::uniform(xs, cells, steps + 1)?,
            time: TimeGrid::uniform(0.0, 10.0, steps)?,
            mesh,
            speed: 1.0,
            source: SourceSpec { position: 0.0, time: 0.0, weight: 1.0 },
            left: BoundaryKind::Reflective,
            right: BoundaryKind::Reflective,
            mode,
            windows: WindowParams::default(),
            filter_k: 2,
            n_histories,
            n_batches: 20,
            seed,
            population_target: PopulationTarget::Count(n_histories),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn cells(&self) -> usize {
        self.mesh.cells()
    }

    pub fn steps(&self) -> usize {
        self.time.steps()
    }

    pub fn boundary(&self, side: Side) -> BoundaryKind {
        match side {
            Side::Left => self.left,
            Side::Right => self.right,
        }
    }

    /// Census count each population is combed back to, if any.
    pub fn target_count(&self) -> Option<usize> {
        match self.population_target {
            PopulationTarget::None => None,
            PopulationTarget::Count(n) => Some(n),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = |name: &'static str, reason: &str| Error::Parameter { name, reason: reason.to_string() };
        let cells = self.mesh.cells();
        if self.material.cells() != cells {
            return Err(Error::Material(format!("material has {} cells, mesh has {cells}", self.material.cells())));
        }
        if self.material.layers() != self.time.steps() + 1 {
            return Err(Error::Material(format!(
                "material has {} time layers, time grid needs {}",
                self.material.layers(),
                self.time.steps() + 1
            )));
        }
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return Err(p("speed", "must be positive"));
        }
        let w = &self.windows;
        if !(w.rho >= 1.0) {
            return Err(p("rho", "must be >= 1"));
        }
        if !(w.eps_min > 0.0 && w.eps_min < 1.0) {
            return Err(p("eps_min", "must lie in (0, 1)"));
        }
        if !(w.front_eps > 0.0) {
            return Err(p("front_eps", "must be positive"));
        }
        if !w.front_wmin.is_finite() {
            return Err(p("front_wmin", "must be finite"));
        }
        if w.split_cap == 0 {
            return Err(p("split_cap", "must be at least 1"));
        }
        if self.n_batches == 0 {
            return Err(p("n_batches", "must be at least 1"));
        }
        if self.n_histories < self.n_batches {
            return Err(p("n_histories", "must be at least n_batches"));
        }
        if self.n_batches > crate::rng::MAX_BATCHES {
            return Err(p("n_batches", "too many batches for the stream layout"));
        }
        if let PopulationTarget::Count(n) = self.population_target {
            if n < self.n_batches {
                return Err(p("population_target", "must be at least n_batches"));
            }
        }
        let src = &self.source;
        if !(src.weight > 0.0 && src.weight.is_finite()) {
            return Err(p("source.weight", "must be positive"));
        }
        if src.time != self.time.t(0) {
            return Err(p("source.time", "impulse must fire at the first time point"));
        }
        self.mesh.locate(src.position).map_err(|_| p("source.position", "outside the mesh"))?;
        Ok(())
    }
}

macro_rules! grid_field {
    ($name:ident, $what:literal) => {
        #[doc = concat!("Real values, one per ", $what, ".")]
        #[derive(Debug, Clone, PartialEq, Default)]
        pub struct $name(pub Vec<f64>);

        impl $name {
            pub fn zeros(len: usize) -> Self {
                Self(vec![0.0; len])
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }
        }

        impl Deref for $name {
            type Target = [f64];

            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut [f64] {
                &mut self.0
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                Self(v)
            }
        }
    };
}

grid_field!(CellField, "mesh cell");
grid_field!(EdgeField, "mesh edge");

#[cfg(test)]
mod tests {
    use super::*;

    fn azurv1_mesh() -> Mesh1D {
        Mesh1D::uniform(-20.5, 20.5, 201).unwrap()
    }

    #[test]
    fn locate_boundaries_and_center() {
        let mesh = azurv1_mesh();
        assert_eq!(mesh.locate(-20.5).unwrap(), 0);
        assert_eq!(mesh.locate(20.5).unwrap(), 200);
        assert_eq!(mesh.locate(0.0).unwrap(), 100);
    }

    #[test]
    fn locate_rejects_outside() {
        let mesh = azurv1_mesh();
        assert!(matches!(mesh.locate(20.6), Err(Error::OutOfDomain { .. })));
        assert!(matches!(mesh.locate(f64::NAN), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn interior_edge_tie_break() {
        let mesh = Mesh1D::new(vec![0.0, 1.0, 3.0, 4.0]).unwrap();
        assert_eq!(mesh.locate(1.0).unwrap(), 1);
        assert_eq!(mesh.locate_directed(1.0, 0.5).unwrap(), 1);
        assert_eq!(mesh.locate_directed(1.0, -0.5).unwrap(), 0);
        assert_eq!(mesh.locate_directed(0.0, -0.5).unwrap(), 0);
        assert_eq!(mesh.dual_width(1), 1.5);
        assert_eq!(mesh.dual_width(2), 1.5);
    }

    #[test]
    fn widths_sum_to_length() {
        let mesh = azurv1_mesh();
        let sum: f64 = mesh.widths().iter().sum();
        assert!((sum - 41.0).abs() <= 1e-12 * 41.0);
    }

    #[test]
    fn locate_inverts_centers() {
        let mesh = Mesh1D::new(vec![-3.0, -2.5, -0.1, 0.0, 0.7, 2.0]).unwrap();
        for i in 0..mesh.cells() {
            assert_eq!(mesh.locate(mesh.center(i)).unwrap(), i);
        }
        let mesh = azurv1_mesh();
        for i in 0..mesh.cells() {
            assert_eq!(mesh.locate(mesh.center(i)).unwrap(), i);
        }
    }

    #[test]
    fn bad_meshes() {
        assert!(Mesh1D::new(vec![0.0]).is_err());
        assert!(Mesh1D::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(Mesh1D::uniform(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn scattering_ratio() {
        let xs = CrossSections { sigma_t: 1.0, sigma_s: 1.0 / 3.0, sigma_f: 1.0 / 3.0, nu_f: 2.3 };
        assert!((effective_scattering_ratio(&xs).unwrap() - 1.1).abs() < 1e-15);
        let absorber = CrossSections { sigma_t: 1.0, sigma_s: 0.0, sigma_f: 0.0, nu_f: 2.3 };
        assert_eq!(effective_scattering_ratio(&absorber).unwrap(), 0.0);
        let scatterer = CrossSections { sigma_t: 2.0, sigma_s: 2.0, sigma_f: 0.0, nu_f: 0.0 };
        assert_eq!(effective_scattering_ratio(&scatterer).unwrap(), 1.0);
        let void = CrossSections { sigma_t: 0.0, sigma_s: 0.0, sigma_f: 0.0, nu_f: 0.0 };
        assert_eq!(effective_scattering_ratio(&void), Err(Error::ZeroTotalCrossSection));
    }

    #[test]
    fn material_rejects_negative_capture() {
        let xs = CrossSections { sigma_t: 0.5, sigma_s: 0.4, sigma_f: 0.2, nu_f: 2.0 };
        assert!(matches!(Material::uniform(xs, 3, 2), Err(Error::Material(_))));
        let xs = CrossSections { sigma_t: 1.0, sigma_s: 0.4, sigma_f: 0.2, nu_f: -1.0 };
        assert!(matches!(Material::uniform(xs, 3, 2), Err(Error::Material(_))));
    }

    #[test]
    fn time_grid() {
        let tg = TimeGrid::uniform(0.0, 10.0, 20).unwrap();
        assert_eq!(tg.steps(), 20);
        assert_eq!(tg.t(20), 10.0);
        assert!((tg.dt(1) - 0.5).abs() < 1e-15);
        assert!(TimeGrid::new(vec![0.0, 1.0, 0.5]).is_err());
    }

    #[test]
    fn run_mode_round_trip() {
        for m in RunMode::ALL {
            assert_eq!(m.name().parse::<RunMode>().unwrap(), m);
        }
        assert!("ww-magic".parse::<RunMode>().is_err());
    }

    #[test]
    fn spec_validation_names_each_violation() {
        let base = ProblemSpec::azurv1_impulse(RunMode::Analog, 1000, 1).unwrap();
        let name_of = |s: &ProblemSpec| match s.validate() {
            Err(Error::Parameter { name, .. }) => name,
            other => panic!("expected parameter error, got {other:?}"),
        };
        let mut s = base.clone();
        s.windows.rho = 0.5;
        assert_eq!(name_of(&s), "rho");
        let mut s = base.clone();
        s.windows.eps_min = 1.0;
        assert_eq!(name_of(&s), "eps_min");
        let mut s = base.clone();
        s.n_batches = 0;
        assert_eq!(name_of(&s), "n_batches");
        let mut s = base.clone();
        s.n_histories = 10;
        assert_eq!(name_of(&s), "n_histories");
        let mut s = base.clone();
        s.speed = 0.0;
        assert_eq!(name_of(&s), "speed");
        let mut s = base.clone();
        s.source.position = 30.0;
        assert_eq!(name_of(&s), "source.position");
        let mut s = base;
        s.population_target = PopulationTarget::Count(3);
        assert_eq!(name_of(&s), "population_target");
    }
}
