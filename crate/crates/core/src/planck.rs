//! Planck-cell bases and the macroscopic operators diagonal in them.

use alloc::vec::Vec;
use core::f64::consts::PI;

use faer::{Col, ColRef, Mat, MatRef};

use crate::numerics::{cis, CMatrix, CVector, C64};
use crate::{Error, Result};

const AREA_TOL: f64 = 1e-12;

/// Rectangular phase-space box cut into `q_cells × p_cells` cells of area `2πħ`.
///
/// `q_origin`/`p_origin` are the coordinates of cell `(0, 0)` as reported by
/// [`PlanckBasis::cell_coords`]; whether that is a cell edge or a cell center
/// depends on the basis kind (see [`CellLayout`]).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseSpaceGrid {
    pub q_origin: f64,
    pub p_origin: f64,
    pub q_extent: f64,
    pub p_extent: f64,
    pub q_cells: usize,
    pub p_cells: usize,
    pub hbar: f64,
    pub q_periodic: bool,
    pub p_periodic: bool,
}

impl PhaseSpaceGrid {
    pub fn new(
        (q_origin, p_origin): (f64, f64),
        (q_extent, p_extent): (f64, f64),
        (q_cells, p_cells): (usize, usize),
        hbar: f64,
    ) -> Result<Self> {
        let grid = PhaseSpaceGrid {
            q_origin,
            p_origin,
            q_extent,
            p_extent,
            q_cells,
            p_cells,
            hbar,
            q_periodic: false,
            p_periodic: false,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn periodic(mut self, q: bool, p: bool) -> Self {
        self.q_periodic = q;
        self.p_periodic = p;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.q_cells == 0 || self.p_cells == 0 {
            return Err(Error::invalid("cells", "cell counts must be positive"));
        }
        if !(self.hbar > 0.0) || !(self.q_extent > 0.0) || !(self.p_extent > 0.0) {
            return Err(Error::invalid("grid", "ħ and extents must be positive"));
        }
        let area = self.dq() * self.dp();
        let expected = 2.0 * PI * self.hbar;
        if (area - expected).abs() > AREA_TOL * expected {
            return Err(Error::CellArea { area, expected });
        }
        Ok(())
    }

    pub fn dq(&self) -> f64 {
        self.q_extent / self.q_cells as f64
    }

    pub fn dp(&self) -> f64 {
        self.p_extent / self.p_cells as f64
    }

    pub fn cell_count(&self) -> usize {
        self.q_cells * self.p_cells
    }

    /// Cells are numbered q-major: `m * p_cells + n`.
    pub fn index(&self, m: usize, n: usize) -> usize {
        m * self.p_cells + n
    }

    pub fn split(&self, cell: usize) -> (usize, usize) {
        (cell / self.p_cells, cell % self.p_cells)
    }

    /// Lattice label `(q_origin + m Δq, p_origin + n Δp)`.
    pub fn label(&self, cell: usize) -> (f64, f64) {
        let (m, n) = self.split(cell);
        (
            self.q_origin + m as f64 * self.dq(),
            self.p_origin + n as f64 * self.dp(),
        )
    }

    pub fn check_cell(&self, cell: usize) -> Result<()> {
        if cell >= self.cell_count() {
            return Err(Error::InvalidCell {
                index: cell,
                count: self.cell_count(),
            });
        }
        Ok(())
    }

    /// Signed difference `a - b` along q, wrapped to the minimal image on a periodic axis.
    pub fn q_difference(&self, a: f64, b: f64) -> f64 {
        minimal_image(a - b, self.q_extent, self.q_periodic)
    }

    pub fn p_difference(&self, a: f64, b: f64) -> f64 {
        minimal_image(a - b, self.p_extent, self.p_periodic)
    }
}

fn minimal_image(d: f64, period: f64, periodic: bool) -> f64 {
    if !periodic {
        return d;
    }
    d - period * libm::round(d / period)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasisKind {
    PositionSlice,
    MomentumSlice,
    DiscreteFock,
}

impl BasisKind {
    pub fn name(self) -> &'static str {
        match self {
            BasisKind::PositionSlice => "position_slice",
            BasisKind::MomentumSlice => "momentum_slice",
            BasisKind::DiscreteFock => "discrete_fock",
        }
    }
}

/// Grid plus the position of each cell relative to its label. Enough to map
/// classical points to cells without touching the basis matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellLayout {
    pub grid: PhaseSpaceGrid,
    pub kind: BasisKind,
}

impl CellLayout {
    /// Offset from a cell's label to its lower-left corner, in units of the cell size.
    fn corner_offset(&self) -> (f64, f64) {
        match self.kind {
            BasisKind::PositionSlice => (0.0, -0.5),
            BasisKind::MomentumSlice => (-0.5, 0.0),
            BasisKind::DiscreteFock => (-0.5, -0.5),
        }
    }

    pub fn cell_center(&self, cell: usize) -> (f64, f64) {
        let (q, p) = self.grid.label(cell);
        let (oq, op) = self.corner_offset();
        (
            q + (oq + 0.5) * self.grid.dq(),
            p + (op + 0.5) * self.grid.dp(),
        )
    }

    fn axis_index(x: f64, lower: f64, step: f64, cells: usize, periodic: bool) -> Option<usize> {
        let raw = libm::floor((x - lower) / step) as i64;
        let cells = cells as i64;
        if periodic {
            Some(raw.rem_euclid(cells) as usize)
        } else if (0..cells).contains(&raw) {
            Some(raw as usize)
        } else {
            None
        }
    }

    /// Cell containing `(q, p)`, wrapping periodic axes; `None` outside a bounded box.
    pub fn cell_containing(&self, q: f64, p: f64) -> Option<usize> {
        let g = &self.grid;
        let (oq, op) = self.corner_offset();
        let m = Self::axis_index(q, g.q_origin + oq * g.dq(), g.dq(), g.q_cells, g.q_periodic)?;
        let n = Self::axis_index(p, g.p_origin + op * g.dp(), g.dp(), g.p_cells, g.p_periodic)?;
        Some(g.index(m, n))
    }

    /// Like [`cell_containing`](Self::cell_containing) but clamps to the boundary cells.
    pub fn cell_nearest(&self, q: f64, p: f64) -> usize {
        let g = &self.grid;
        let (oq, op) = self.corner_offset();
        let clamp = |x: f64, lower: f64, step: f64, cells: usize, periodic: bool| {
            Self::axis_index(x, lower, step, cells, periodic).unwrap_or_else(|| {
                if x < lower {
                    0
                } else {
                    cells - 1
                }
            })
        };
        let m = clamp(q, g.q_origin + oq * g.dq(), g.dq(), g.q_cells, g.q_periodic);
        let n = clamp(p, g.p_origin + op * g.dp(), g.dp(), g.p_cells, g.p_periodic);
        g.index(m, n)
    }

    /// Lower-left and upper-right corners of the box.
    pub fn bounds(&self) -> ((f64, f64), (f64, f64)) {
        let g = &self.grid;
        let (oq, op) = self.corner_offset();
        let lo = (g.q_origin + oq * g.dq(), g.p_origin + op * g.dp());
        (lo, (lo.0 + g.q_extent, lo.1 + g.p_extent))
    }
}

/// Orthonormal basis with one state per cell. Column `j` of `frame` is cell
/// `j` expressed in the model's computational basis.
#[derive(Clone, Debug)]
pub struct PlanckBasis {
    pub grid: PhaseSpaceGrid,
    pub kind: BasisKind,
    pub frame: CMatrix,
    pub cell_coords: Vec<(f64, f64)>,
    /// Eigenvalue of the computational-basis operator for each row of `frame`
    /// (position samples, momentum samples, or Fock momenta `n/N`).
    pub samples: Vec<f64>,
}

impl PlanckBasis {
    pub fn dim(&self) -> usize {
        self.frame.nrows()
    }

    pub fn layout(&self) -> CellLayout {
        CellLayout {
            grid: self.grid,
            kind: self.kind,
        }
    }

    pub fn cell_center(&self, cell: usize) -> (f64, f64) {
        self.layout().cell_center(cell)
    }

    pub fn cell_containing(&self, q: f64, p: f64) -> Option<usize> {
        self.layout().cell_containing(q, p)
    }

    pub fn cell_state(&self, cell: usize) -> Result<CVector> {
        self.grid.check_cell(cell)?;
        Ok(self.frame.col(cell).to_owned())
    }

    pub fn q_values(&self) -> Vec<f64> {
        self.cell_coords.iter().map(|c| c.0).collect()
    }

    pub fn p_values(&self) -> Vec<f64> {
        self.cell_coords.iter().map(|c| c.1).collect()
    }

    /// `W† A W`: an operator from the computational frame into the cell frame.
    pub fn to_cell_frame(&self, a: MatRef<'_, C64>) -> Result<CMatrix> {
        self.check_dim(a.nrows())?;
        let aw = a * &self.frame;
        Ok(self.frame.adjoint() * &aw)
    }

    pub fn from_cell_frame(&self, a: MatRef<'_, C64>) -> Result<CMatrix> {
        self.check_dim(a.nrows())?;
        let aw = &self.frame * a;
        Ok(&aw * self.frame.adjoint())
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found,
            });
        }
        Ok(())
    }
}

fn cells_and_samples(points: usize, cells: usize) -> Result<usize> {
    if cells == 0 || points % cells != 0 {
        return Err(Error::NonDivisibleGrid { points, cells });
    }
    Ok(points / cells)
}

/// Cells are slabs `[Q, Q+Δq)` in position carrying a plane wave of momentum `P`.
///
/// The computational basis is a midpoint position grid of `q_grid_points`
/// samples spanning the q-extent, `q_j = q_origin + (j + ½) dx`.
pub fn build_position_slice_basis(
    grid: PhaseSpaceGrid,
    q_grid_points: usize,
) -> Result<PlanckBasis> {
    grid.validate()?;
    let k = cells_and_samples(q_grid_points, grid.q_cells)?;
    if k != grid.p_cells {
        return Err(Error::DimensionMismatch {
            expected: grid.cell_count(),
            found: q_grid_points,
        });
    }
    let dx = grid.q_extent / q_grid_points as f64;
    let samples: Vec<f64> = (0..q_grid_points)
        .map(|j| grid.q_origin + (j as f64 + 0.5) * dx)
        .collect();
    let norm = 1.0 / libm::sqrt(k as f64);
    let d = q_grid_points;
    let mut frame = Mat::zeros(d, d);
    let mut cell_coords = Vec::with_capacity(d);
    for cell in 0..d {
        let (m, _) = grid.split(cell);
        let (q_label, p) = grid.label(cell);
        cell_coords.push((q_label, p));
        for j in m * k..(m + 1) * k {
            frame[(j, cell)] = cis(p * samples[j] / grid.hbar) * norm;
        }
    }
    Ok(PlanckBasis {
        grid,
        kind: BasisKind::PositionSlice,
        frame,
        cell_coords,
        samples,
    })
}

/// Mirror image of the position slices: slabs `[P, P+Δp)` in momentum with
/// phase `e^{-iQp/ħ}`, over a midpoint momentum grid.
pub fn build_momentum_slice_basis(
    grid: PhaseSpaceGrid,
    p_grid_points: usize,
) -> Result<PlanckBasis> {
    grid.validate()?;
    let k = cells_and_samples(p_grid_points, grid.p_cells)?;
    if k != grid.q_cells {
        return Err(Error::DimensionMismatch {
            expected: grid.cell_count(),
            found: p_grid_points,
        });
    }
    let dp = grid.p_extent / p_grid_points as f64;
    let samples: Vec<f64> = (0..p_grid_points)
        .map(|j| grid.p_origin + (j as f64 + 0.5) * dp)
        .collect();
    let norm = 1.0 / libm::sqrt(k as f64);
    let d = p_grid_points;
    let mut frame = Mat::zeros(d, d);
    let mut cell_coords = Vec::with_capacity(d);
    for cell in 0..d {
        let (_, n) = grid.split(cell);
        let (q, p_label) = grid.label(cell);
        cell_coords.push((q, p_label));
        for j in n * k..(n + 1) * k {
            frame[(j, cell)] = cis(-q * samples[j] / grid.hbar) * norm;
        }
    }
    Ok(PlanckBasis {
        grid,
        kind: BasisKind::MomentumSlice,
        frame,
        cell_coords,
        samples,
    })
}

/// Grid of the discrete Fock-space cells for `n_bosons + 1 = L²`, `L` odd.
///
/// `q` is periodic with period `2π`; cell `(n₁, n₂)` is centered at
/// `(q_origin + 2πn₁/L, L n₂ / N)` with `n₂ ∈ [-m, m]`, `m = (L-1)/2`.
pub fn discrete_fock_grid(n_bosons: usize, q_origin: f64) -> Result<PhaseSpaceGrid> {
    let l = odd_root(n_bosons + 1)?;
    let m = (l - 1) / 2;
    let n = n_bosons as f64;
    Ok(PhaseSpaceGrid::new(
        (q_origin, -((m * l) as f64) / n),
        (2.0 * PI, (l * l) as f64 / n),
        (l, l),
        1.0 / n,
    )?
    .periodic(true, false))
}

fn odd_root(dimension: usize) -> Result<usize> {
    let l = libm::round(libm::sqrt(dimension as f64)) as usize;
    if l * l != dimension || l % 2 == 0 {
        return Err(Error::NotOddSquare { dimension });
    }
    Ok(l)
}

/// Cells for a two-mode boson system with `N` particles.
///
/// The computational basis is `|s, N-s⟩`, `s = 0..=N` (`s` particles in the
/// second mode), the eigenbasis of `p = (N - 2s)/(2N) = n/N`. Cell `(n₁, n₂)`
/// is `L^{-1/2} Σ_{n = L n₂ - m}^{L n₂ + m} e^{-i Q n} |n⟩`.
pub fn build_discrete_fock_basis(n_bosons: usize, q_origin: f64) -> Result<PlanckBasis> {
    let grid = discrete_fock_grid(n_bosons, q_origin)?;
    let l = grid.q_cells;
    let m = ((l - 1) / 2) as i64;
    let d = n_bosons + 1;
    let half = (n_bosons / 2) as i64;
    let samples: Vec<f64> = (0..d)
        .map(|s| (half - s as i64) as f64 / n_bosons as f64)
        .collect();
    let norm = 1.0 / libm::sqrt(l as f64);
    let mut frame = Mat::zeros(d, d);
    let mut cell_coords = Vec::with_capacity(d);
    for cell in 0..d {
        let (n1, n2) = grid.split(cell);
        let n2 = n2 as i64 - m;
        let q = q_origin + 2.0 * PI * n1 as f64 / l as f64;
        cell_coords.push((q, (l as i64 * n2) as f64 / n_bosons as f64));
        for n in l as i64 * n2 - m..=l as i64 * n2 + m {
            let s = (half - n) as usize;
            frame[(s, cell)] = cis(-q * n as f64) * norm;
        }
    }
    Ok(PlanckBasis {
        grid,
        kind: BasisKind::DiscreteFock,
        frame,
        cell_coords,
        samples,
    })
}

/// `Q̂` and `P̂` in the computational frame.
#[derive(Clone, Debug)]
pub struct MacroscopicOps {
    pub q: CMatrix,
    pub p: CMatrix,
}

pub fn macroscopic_operators(basis: &PlanckBasis) -> MacroscopicOps {
    let build = |values: &[f64]| {
        let w = &basis.frame;
        let scaled = Mat::from_fn(w.nrows(), w.ncols(), |i, j| w[(i, j)] * values[j]);
        let mut op = &scaled * w.adjoint();
        crate::numerics::symmetrize(&mut op);
        op
    };
    MacroscopicOps {
        q: build(&basis.q_values()),
        p: build(&basis.p_values()),
    }
}

/// `W† ψ`.
pub fn cell_amplitudes(state: ColRef<'_, C64>, basis: &PlanckBasis) -> Result<CVector> {
    basis.check_dim(state.nrows())?;
    Ok(basis.frame.adjoint() * state)
}

/// Populations `|⟨x|ψ⟩|²` over cells.
pub fn cell_populations(state: ColRef<'_, C64>, basis: &PlanckBasis) -> Result<Vec<f64>> {
    let a = cell_amplitudes(state, basis)?;
    Ok((0..a.nrows()).map(|k| a[k].norm_sqr()).collect())
}

/// `⟨q_j|p_k⟩ = e^{i q_j p_k/ħ}/√D` between two sample sets of equal length.
pub fn position_momentum_overlap(q: &[f64], p: &[f64], hbar: f64) -> CMatrix {
    let norm = 1.0 / libm::sqrt(q.len() as f64);
    Mat::from_fn(q.len(), p.len(), |j, k| cis(q[j] * p[k] / hbar) * norm)
}

/// A computational basis vector.
pub fn unit_vector(dim: usize, k: usize) -> CVector {
    Col::from_fn(dim, |i| {
        if i == k {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}
