//! Wave-packet spreading diagnostics.

use alloc::vec::Vec;

use faer::ColRef;

use crate::classical::ClassicalSystem;
use crate::numerics::{self, C64};
use crate::otoc::Evolution;
use crate::planck::{self, PlanckBasis};
use crate::{Error, Result};

const NORM_TOL: f64 = 1e-8;

/// Shannon entropy of the cell populations divided by `ln D`.
pub fn gwvn_entropy(state: ColRef<'_, C64>, basis: &PlanckBasis) -> Result<f64> {
    let norm_sqr = numerics::norm_sqr(state);
    if (norm_sqr - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm_sqr });
    }
    let d = basis.dim();
    if d < 2 {
        return Ok(0.0);
    }
    let pops = planck::cell_populations(state, basis)?;
    let s: f64 = pops
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| -w * libm::log(w))
        .sum();
    Ok(s / libm::log(d as f64))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntropyTrack {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn entropy_track(
    evolution: &Evolution,
    basis: &PlanckBasis,
    cell: usize,
    n_steps: usize,
) -> Result<EntropyTrack> {
    let w = basis.cell_state(cell)?;
    let states = evolution.state_track(w.as_ref(), n_steps);
    let values = states
        .iter()
        .map(|psi| gwvn_entropy(psi.as_ref(), basis))
        .collect::<Result<_>>()?;
    Ok(EntropyTrack {
        times: (0..=n_steps).map(|k| evolution.time(k)).collect(),
        values,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EhrenfestTrack {
    pub times: Vec<f64>,
    pub delta: Vec<f64>,
    /// Classical trajectory, wrapped into the box on periodic axes.
    pub classical: Vec<(f64, f64)>,
    /// Quantum `(⟨Q̂⟩, ⟨P̂⟩)`; with [`Offset::MinimalImage`] these are unwrapped
    /// around the classical point.
    pub quantum: Vec<(f64, f64)>,
    /// Reference level that `delta` is compared against.
    pub plateau: f64,
    /// First sampled time with `delta > threshold · plateau`.
    pub t_e: Option<f64>,
}

/// How the quantum side of `Δ` treats periodic axes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Offset {
    /// `⟨Q̂⟩` and `⟨P̂⟩` as plain expectation values of the cell labels; the
    /// classical point is wrapped into the box.
    Expectation,
    /// Mean of the minimal-image displacements of the cell labels from the
    /// classical point. Removes the jump when a packet straddles the seam of
    /// a torus.
    MinimalImage,
}

/// Distance between the classical trajectory started at `start` and the
/// macroscopic expectation values of the evolved cell state.
///
/// The plateau is `Δ(0)` (or the first nonzero `Δ` if the start sits on the
/// cell's own coordinates).
#[allow(clippy::too_many_arguments)]
pub fn ehrenfest_delta(
    evolution: &Evolution,
    basis: &PlanckBasis,
    cell: usize,
    system: &ClassicalSystem,
    start: (f64, f64),
    n_steps: usize,
    threshold: f64,
    offset: Offset,
) -> Result<EhrenfestTrack> {
    let w = basis.cell_state(cell)?;
    let states = evolution.state_track(w.as_ref(), n_steps);
    let qs = basis.q_values();
    let ps = basis.p_values();
    let ((q_lo, p_lo), _) = basis.layout().bounds();
    let g = basis.grid;
    let wrap = |x: f64, lo: f64, extent: f64, periodic: bool| {
        if periodic {
            lo + crate::numerics::wrap(x - lo, extent)
        } else {
            x
        }
    };

    let mut times = Vec::with_capacity(n_steps + 1);
    let mut delta = Vec::with_capacity(n_steps + 1);
    let mut classical = Vec::with_capacity(n_steps + 1);
    let mut quantum = Vec::with_capacity(n_steps + 1);
    let mut state = start;
    for (k, psi) in states.iter().enumerate() {
        if k > 0 {
            state = system.advance(state, evolution.time(k) - evolution.time(k - 1))?;
        }
        let cq = wrap(state.0, q_lo, g.q_extent, g.q_periodic);
        let cp = wrap(state.1, p_lo, g.p_extent, g.p_periodic);
        let pops = planck::cell_populations(psi.as_ref(), basis)?;
        let (dq, dp): (f64, f64) = match offset {
            Offset::Expectation => (
                pops.iter().zip(&qs).map(|(w, q)| w * q).sum::<f64>() - cq,
                pops.iter().zip(&ps).map(|(w, p)| w * p).sum::<f64>() - cp,
            ),
            Offset::MinimalImage => (
                pops.iter()
                    .zip(&qs)
                    .map(|(w, q)| w * g.q_difference(*q, cq))
                    .sum(),
                pops.iter()
                    .zip(&ps)
                    .map(|(w, p)| w * g.p_difference(*p, cp))
                    .sum(),
            ),
        };
        times.push(evolution.time(k));
        delta.push(libm::hypot(dq, dp));
        classical.push((cq, cp));
        quantum.push((cq + dq, cp + dp));
    }
    let plateau = delta.iter().copied().find(|&d| d > 0.0).unwrap_or(0.0);
    let t_e = if plateau > 0.0 {
        times
            .iter()
            .zip(&delta)
            .find(|(_, &d)| d > threshold * plateau)
            .map(|(&t, _)| t)
    } else {
        None
    };
    Ok(EhrenfestTrack {
        times,
        delta,
        classical,
        quantum,
        plateau,
        t_e,
    })
}
