//! Heisenberg evolution and cell-resolved out-of-time-order correlators.

use alloc::vec::Vec;

use faer::{ColRef, Mat, MatRef};

use crate::classical::CoarseMap;
use crate::numerics::{self, CMatrix, CVector, SpectralDecomp, C64};
use crate::planck::{CellLayout, PlanckBasis};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Observable {
    MacroQ,
    MacroP,
    MicroQ,
    MicroP,
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Observable::MacroQ => "Q",
            Observable::MacroP => "P",
            Observable::MicroQ => "q",
            Observable::MicroP => "p",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "Q" => Some(Observable::MacroQ),
            "P" => Some(Observable::MacroP),
            "q" => Some(Observable::MicroQ),
            "p" => Some(Observable::MicroP),
            _ => None,
        }
    }
}

/// `A` is evolved, `B` stays at time zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct OperatorPair {
    pub evolved: Observable,
    pub fixed: Observable,
}

/// Time evolution sampled on a uniform grid of steps.
#[derive(Clone, Debug)]
pub enum Evolution {
    /// Repeated one-period operator; step `k` is time `k`.
    Floquet(CMatrix),
    /// `e^{-iHt/ħ}` from an exact eigendecomposition, sampled every `dt`.
    Spectral {
        decomp: SpectralDecomp,
        hbar: f64,
        dt: f64,
    },
}

impl Evolution {
    pub fn dim(&self) -> usize {
        match self {
            Evolution::Floquet(u) => u.nrows(),
            Evolution::Spectral { decomp, .. } => decomp.dim(),
        }
    }

    pub fn time(&self, step: usize) -> f64 {
        match self {
            Evolution::Floquet(_) => step as f64,
            Evolution::Spectral { dt, .. } => step as f64 * dt,
        }
    }

    /// Propagator over one sampling interval.
    pub fn step_operator(&self) -> Result<CMatrix> {
        match self {
            Evolution::Floquet(u) => Ok(u.clone()),
            Evolution::Spectral { decomp, hbar, dt } => {
                numerics::propagator_from_spectrum(decomp, *dt, *hbar)
            }
        }
    }

    /// Propagator over `steps` intervals.
    pub fn propagator(&self, steps: usize) -> Result<CMatrix> {
        match self {
            Evolution::Floquet(u) => {
                let mut acc = Mat::identity(u.nrows(), u.ncols());
                for _ in 0..steps {
                    acc = u * &acc;
                }
                Ok(acc)
            }
            Evolution::Spectral { decomp, hbar, dt } => {
                numerics::propagator_from_spectrum(decomp, steps as f64 * dt, *hbar)
            }
        }
    }

    /// `ψ(k)` for `k = 0..=n_steps`.
    pub fn state_track(&self, psi: ColRef<'_, C64>, n_steps: usize) -> Vec<CVector> {
        let mut out = Vec::with_capacity(n_steps + 1);
        out.push(psi.to_owned());
        match self {
            Evolution::Floquet(u) => {
                for k in 0..n_steps {
                    let next = u * &out[k];
                    out.push(next);
                }
            }
            Evolution::Spectral { decomp, hbar, dt } => {
                for k in 1..=n_steps {
                    out.push(decomp.evolve(psi, k as f64 * dt, *hbar));
                }
            }
        }
        out
    }
}

/// `A(k) = U^{†k} A U^k` at every `stride`-th step.
#[derive(Clone, Debug)]
pub struct HeisenbergTrack {
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub operators: Vec<CMatrix>,
    /// Largest hermiticity drift removed by re-symmetrisation.
    pub max_drift: f64,
}

/// Streams `A(k)` for `k = 0..=n_steps` to `visit` without storing the track.
pub fn heisenberg_sweep(
    u_step: MatRef<'_, C64>,
    a: MatRef<'_, C64>,
    n_steps: usize,
    mut visit: impl FnMut(usize, &CMatrix) -> Result<()>,
) -> Result<f64> {
    if u_step.nrows() != a.nrows() || u_step.ncols() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: u_step.nrows(),
            found: a.nrows(),
        });
    }
    let mut current = a.to_owned();
    let mut drift = 0.0f64;
    visit(0, &current)?;
    for k in 1..=n_steps {
        current = numerics::heisenberg_step(u_step, current.as_ref())?;
        drift = drift.max(numerics::symmetrize(&mut current));
        visit(k, &current)?;
    }
    Ok(drift)
}

pub fn heisenberg_track(
    evolution: &Evolution,
    a: MatRef<'_, C64>,
    n_steps: usize,
    stride: usize,
) -> Result<HeisenbergTrack> {
    let stride = stride.max(1);
    let u = evolution.step_operator()?;
    let mut track = HeisenbergTrack {
        steps: Vec::new(),
        times: Vec::new(),
        operators: Vec::new(),
        max_drift: 0.0,
    };
    track.max_drift = heisenberg_sweep(u.as_ref(), a, n_steps, |k, op| {
        if k % stride == 0 {
            track.steps.push(k);
            track.times.push(evolution.time(k));
            track.operators.push(op.clone());
        }
        Ok(())
    })?;
    Ok(track)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Source {
    Cell(usize),
    InfiniteTemperature,
    Gibbs,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OtocRecord {
    pub source: Source,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// `‖[A, B] w‖² = -⟨w|[A, B]²|w⟩` by four matrix-vector products.
pub fn commutator_norm_sqr(a: MatRef<'_, C64>, b: MatRef<'_, C64>, w: ColRef<'_, C64>) -> f64 {
    let bw = b * w;
    let aw = a * w;
    let v = a * &bw - b * &aw;
    numerics::norm_sqr(v.as_ref())
}

pub fn cell_otoc(
    track: &HeisenbergTrack,
    b: MatRef<'_, C64>,
    basis: &PlanckBasis,
    cell: usize,
) -> Result<OtocRecord> {
    let w = basis.cell_state(cell)?;
    if b.nrows() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: b.nrows(),
        });
    }
    let values = track
        .operators
        .iter()
        .map(|a| commutator_norm_sqr(a.as_ref(), b, w.as_ref()))
        .collect();
    Ok(OtocRecord {
        source: Source::Cell(cell),
        times: track.times.clone(),
        values,
    })
}

#[derive(Clone, Copy, Debug)]
pub enum ThermalWeight<'a> {
    InfiniteTemperature,
    Gibbs(MatRef<'a, C64>),
}

/// `-Tr([A, B]²)/D` or `-Tr(ρ [A, B]²)`.
pub fn thermal_value(
    a: MatRef<'_, C64>,
    b: MatRef<'_, C64>,
    weight: ThermalWeight<'_>,
) -> Result<f64> {
    let k = numerics::commutator(a, b)?;
    let d = k.nrows();
    match weight {
        ThermalWeight::InfiniteTemperature => {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..d {
                for j in 0..d {
                    acc += k[(i, j)] * k[(j, i)];
                }
            }
            Ok(-acc.re / d as f64)
        }
        ThermalWeight::Gibbs(rho) => {
            if rho.nrows() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: rho.nrows(),
                });
            }
            let k2 = &k * &k;
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..d {
                for j in 0..d {
                    acc += rho[(i, j)] * k2[(j, i)];
                }
            }
            Ok(-acc.re)
        }
    }
}

pub fn thermal_otoc(
    track: &HeisenbergTrack,
    b: MatRef<'_, C64>,
    weight: ThermalWeight<'_>,
) -> Result<OtocRecord> {
    let values = track
        .operators
        .iter()
        .map(|a| thermal_value(a.as_ref(), b, weight))
        .collect::<Result<_>>()?;
    let source = match weight {
        ThermalWeight::InfiniteTemperature => Source::InfiniteTemperature,
        ThermalWeight::Gibbs(_) => Source::Gibbs,
    };
    Ok(OtocRecord {
        source,
        times: track.times.clone(),
        values,
    })
}

/// Cell OTOC for one cell by propagating states instead of operators:
/// `[A(t), B] w = U†A U B w - B U†A U w`. Costs `O(D²)` per time.
pub fn cell_otoc_direct(
    decomp: &SpectralDecomp,
    hbar: f64,
    times: &[f64],
    a: MatRef<'_, C64>,
    b: MatRef<'_, C64>,
    w: ColRef<'_, C64>,
) -> Vec<f64> {
    let bw = b * w;
    times
        .iter()
        .map(|&t| {
            let first = decomp.evolve(bw.as_ref(), t, hbar);
            let first = a * &first;
            let first = decomp.evolve(first.as_ref(), -t, hbar);
            let second = decomp.evolve(w, t, hbar);
            let second = a * &second;
            let second = decomp.evolve(second.as_ref(), -t, hbar);
            let second = b * &second;
            numerics::norm_sqr((first - second).as_ref())
        })
        .collect()
}

/// The fixed operator `B` in the cell frame.
#[derive(Clone, Debug)]
pub enum FixedOperator {
    /// Macroscopic operators are diagonal; only their eigenvalues are kept.
    Diagonal(Vec<f64>),
    Dense(CMatrix),
}

/// `C(x)` for every cell and `-Tr([A, B]²)/D`, with `A` given in the cell frame.
pub fn cell_frame_readout(a_cell: MatRef<'_, C64>, fixed: &FixedOperator) -> (Vec<f64>, f64) {
    let d = a_cell.nrows();
    let k = match fixed {
        FixedOperator::Diagonal(b) => Mat::from_fn(d, d, |y, x| a_cell[(y, x)] * (b[x] - b[y])),
        FixedOperator::Dense(b) => a_cell * b - b * a_cell,
    };
    let values = (0..d)
        .map(|x| (0..d).map(|y| k[(y, x)].norm_sqr()).sum())
        .collect();
    let mut trace = C64::new(0.0, 0.0);
    for x in 0..d {
        for y in 0..d {
            trace += k[(x, y)] * k[(y, x)];
        }
    }
    (values, -trace.re / d as f64)
}

/// Everything one cell-frame Heisenberg sweep produces.
#[derive(Clone, Debug)]
pub struct CellSweep {
    pub times: Vec<f64>,
    /// Curves for the requested cells, in request order.
    pub curves: Vec<(usize, Vec<f64>)>,
    /// Infinite-temperature trace at each step.
    pub thermal: Vec<f64>,
    /// `C(t_final, x)` for every cell.
    pub final_values: Vec<f64>,
    pub max_drift: f64,
}

/// An operator handed to the cell-frame kernels.
#[derive(Clone, Copy, Debug)]
pub enum Operand<'a> {
    /// Diagonal in the cell frame with these eigenvalues (the macroscopic operators).
    CellDiagonal(&'a [f64]),
    /// Dense, in the computational frame.
    Computational(MatRef<'a, C64>),
}

impl Operand<'_> {
    fn in_cell_frame(&self, basis: &PlanckBasis) -> Result<CMatrix> {
        match *self {
            Operand::CellDiagonal(v) => {
                if v.len() != basis.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: basis.dim(),
                        found: v.len(),
                    });
                }
                Ok(numerics::diagonal(v))
            }
            Operand::Computational(a) => basis.to_cell_frame(a),
        }
    }

    fn fixed(&self, basis: &PlanckBasis) -> Result<FixedOperator> {
        match *self {
            Operand::CellDiagonal(v) => {
                if v.len() != basis.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: basis.dim(),
                        found: v.len(),
                    });
                }
                Ok(FixedOperator::Diagonal(v.to_vec()))
            }
            Operand::Computational(b) => Ok(FixedOperator::Dense(basis.to_cell_frame(b)?)),
        }
    }
}

/// Evolve `A` in the cell frame (`U_cell = W† U W`) and read out every cell at
/// every step in `O(D²)`.
pub fn cell_frame_sweep(
    evolution: &Evolution,
    basis: &PlanckBasis,
    a: Operand<'_>,
    b: Operand<'_>,
    n_steps: usize,
    cells: &[usize],
) -> Result<CellSweep> {
    for &c in cells {
        basis.grid.check_cell(c)?;
    }
    let u_cell = basis.to_cell_frame(evolution.step_operator()?.as_ref())?;
    let a_cell = a.in_cell_frame(basis)?;
    let fixed = b.fixed(basis)?;
    let mut out = CellSweep {
        times: Vec::with_capacity(n_steps + 1),
        curves: cells
            .iter()
            .map(|&c| (c, Vec::with_capacity(n_steps + 1)))
            .collect(),
        thermal: Vec::with_capacity(n_steps + 1),
        final_values: Vec::new(),
        max_drift: 0.0,
    };
    out.max_drift = heisenberg_sweep(u_cell.as_ref(), a_cell.as_ref(), n_steps, |k, op| {
        let (values, thermal) = cell_frame_readout(op.as_ref(), &fixed);
        out.times.push(evolution.time(k));
        out.thermal.push(thermal);
        for (c, curve) in out.curves.iter_mut() {
            curve.push(values[*c]);
        }
        if k == n_steps {
            out.final_values = values;
        }
        Ok(())
    })?;
    Ok(out)
}

/// Per-cell OTOC map at a single final time.
#[derive(Clone, Debug)]
pub struct SectionImage {
    pub layout: CellLayout,
    pub values: Vec<f64>,
    pub t_final: f64,
}

pub fn quantum_section(
    evolution: &Evolution,
    basis: &PlanckBasis,
    n_steps: usize,
    a: Operand<'_>,
    b: Operand<'_>,
) -> Result<SectionImage> {
    let sweep = cell_frame_sweep(evolution, basis, a, b, n_steps, &[])?;
    Ok(SectionImage {
        layout: basis.layout(),
        values: sweep.final_values,
        t_final: evolution.time(n_steps),
    })
}

/// `W† U(steps) W`; exactly the identity at zero steps.
pub fn cell_frame_propagator(
    evolution: &Evolution,
    basis: &PlanckBasis,
    steps: usize,
) -> Result<CMatrix> {
    if evolution.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: evolution.dim(),
        });
    }
    if steps == 0 {
        return Ok(Mat::identity(basis.dim(), basis.dim()));
    }
    basis.to_cell_frame(evolution.propagator(steps)?.as_ref())
}

/// `f(x', x) = ⟨x'|U|x⟩ - e^{iφ(x)} δ_{x', g x}` from the cell-frame propagator.
pub fn spreading_function(u_cell: MatRef<'_, C64>, gmap: &CoarseMap) -> Result<CMatrix> {
    let d = gmap.target.len();
    if u_cell.nrows() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: u_cell.nrows(),
        });
    }
    let mut f = u_cell.to_owned();
    for x in 0..d {
        f[(gmap.target[x], x)] -= gmap.phase[x];
    }
    Ok(f)
}

/// Largest `|e^{iφ(x')} f*(g x, x') + e^{-iφ(x)} f(g x', x)|` over cell pairs.
/// Vanishes to first order in `f` when `g` is a bijection.
pub fn split_unitarity_residual(f: MatRef<'_, C64>, gmap: &CoarseMap) -> f64 {
    let d = gmap.target.len();
    let mut worst = 0.0f64;
    for x in 0..d {
        for xp in 0..d {
            let r = gmap.phase[xp] * f[(gmap.target[x], xp)].conj()
                + gmap.phase[x].conj() * f[(gmap.target[xp], x)];
            worst = worst.max(r.norm());
        }
    }
    worst
}

/// `|f(g z, x)|²` over `z` with the displacement of each `z` from `x`.
#[derive(Clone, Debug)]
pub struct SpreadField {
    pub base: usize,
    pub t: f64,
    pub weights: Vec<f64>,
    pub displacement: Vec<(f64, f64)>,
}

pub fn spread_field(
    f: MatRef<'_, C64>,
    gmap: &CoarseMap,
    basis: &PlanckBasis,
    cell: usize,
) -> Result<SpreadField> {
    basis.grid.check_cell(cell)?;
    let (qx, px) = basis.cell_coords[cell];
    let g = &basis.grid;
    let weights = gmap
        .target
        .iter()
        .map(|&gz| f[(gz, cell)].norm_sqr())
        .collect();
    let displacement = basis
        .cell_coords
        .iter()
        .map(|&(q, p)| (g.q_difference(q, qx), g.p_difference(p, px)))
        .collect();
    Ok(SpreadField {
        base: cell,
        t: gmap.t,
        weights,
        displacement,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MacroAxis {
    Q,
    P,
}

fn axis_difference(basis: &PlanckBasis, axis: MacroAxis, a: usize, b: usize) -> f64 {
    let (qa, pa) = basis.cell_coords[a];
    let (qb, pb) = basis.cell_coords[b];
    match axis {
        MacroAxis::Q => basis.grid.q_difference(qa, qb),
        MacroAxis::P => basis.grid.p_difference(pa, pb),
    }
}

/// Second-order expansion of `C(t, x)` in `f` for the macroscopic pair
/// (`evolved`, `fixed`): `Σ_z (B_z - B_x)² (A_{gz} - A_{gx})² |f(g z, x)|²`.
pub fn second_order_otoc(
    f: MatRef<'_, C64>,
    gmap: &CoarseMap,
    basis: &PlanckBasis,
    cell: usize,
    evolved: MacroAxis,
    fixed: MacroAxis,
) -> Result<f64> {
    basis.grid.check_cell(cell)?;
    let gx = gmap.target[cell];
    let mut acc = 0.0;
    for z in 0..gmap.target.len() {
        let gz = gmap.target[z];
        let db = axis_difference(basis, fixed, z, cell);
        let da = axis_difference(basis, evolved, gz, gx);
        acc += db * db * da * da * f[(gz, cell)].norm_sqr();
    }
    Ok(acc)
}

/// `Σ_z (A_{gz} - A_{gx})²` over cells within `radius` lattice steps of `x`
/// along both axes (wrapped on periodic axes).
pub fn early_time_approx(
    gmap: &CoarseMap,
    basis: &PlanckBasis,
    cell: usize,
    radius: usize,
    axis: MacroAxis,
) -> Result<f64> {
    basis.grid.check_cell(cell)?;
    if radius == 0 {
        return Err(Error::invalid(
            "radius",
            "neighbourhood radius must be at least one cell",
        ));
    }
    let g = &basis.grid;
    let (m, n) = g.split(cell);
    let r = radius as i64;
    let gx = gmap.target[cell];
    let mut acc = 0.0;
    for dm in -r..=r {
        for dn in -r..=r {
            let Some(mz) = neighbour(m, dm, g.q_cells, g.q_periodic) else {
                continue;
            };
            let Some(nz) = neighbour(n, dn, g.p_cells, g.p_periodic) else {
                continue;
            };
            let z = g.index(mz, nz);
            let d = axis_difference(basis, axis, gmap.target[z], gx);
            acc += d * d;
        }
    }
    Ok(acc)
}

fn neighbour(i: usize, delta: i64, cells: usize, periodic: bool) -> Option<usize> {
    let j = i as i64 + delta;
    if periodic {
        Some(j.rem_euclid(cells as i64) as usize)
    } else if (0..cells as i64).contains(&j) {
        Some(j as usize)
    } else {
        None
    }
}

/// `W²(k) = ⟨ψ(k)|(P̂ - P_x)²|ψ(k)⟩` for the evolved cell state `ψ(0) = |x⟩`.
pub fn width_track(
    evolution: &Evolution,
    basis: &PlanckBasis,
    cell: usize,
    n_steps: usize,
) -> Result<Vec<f64>> {
    let w = basis.cell_state(cell)?;
    let p0 = basis.cell_coords[cell].1;
    let ps = basis.p_values();
    evolution
        .state_track(w.as_ref(), n_steps)
        .iter()
        .map(|psi| {
            let pops = crate::planck::cell_populations(psi.as_ref(), basis)?;
            Ok(pops
                .iter()
                .zip(&ps)
                .map(|(w, p)| w * (p - p0) * (p - p0))
                .sum())
        })
        .collect()
}
