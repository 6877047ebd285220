//! Classical limits of the models and the coarse-grained cell map.

use alloc::vec::Vec;
use core::f64::consts::PI;

use faer::MatRef;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numerics::{wrap, C64};
use crate::planck::{CellLayout, PlanckBasis};
use crate::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

/// Default RK4 step.
pub const FLOW_DT: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ClassicalSystem {
    /// Stroboscopic kicked rotor on `[0, 2π)²`; time counts kicks.
    StandardMap { kick: f64 },
    /// `H = √(1/4 - p²) cos q + 2ξ p²`.
    LmgMeanField { xi: f64 },
    /// `H = p²/2 + c q²/2`; `c = -1` is the inverted oscillator.
    Oscillator { curvature: f64 },
}

impl ClassicalSystem {
    pub fn is_map(&self) -> bool {
        matches!(self, ClassicalSystem::StandardMap { .. })
    }

    /// Energy; `None` for the stroboscopic map.
    pub fn hamiltonian(&self, q: f64, p: f64) -> Option<f64> {
        match *self {
            ClassicalSystem::StandardMap { .. } => None,
            ClassicalSystem::LmgMeanField { xi } => {
                Some(libm::sqrt((0.25 - p * p).max(0.0)) * libm::cos(q) + 2.0 * xi * p * p)
            }
            ClassicalSystem::Oscillator { curvature } => {
                Some(0.5 * p * p + 0.5 * curvature * q * q)
            }
        }
    }

    /// Hamilton's equations `(∂H/∂p, -∂H/∂q)`.
    pub fn velocity(&self, q: f64, p: f64) -> Result<(f64, f64)> {
        match *self {
            ClassicalSystem::StandardMap { .. } => Err(Error::invalid(
                "system",
                "the standard map has no continuous-time flow",
            )),
            ClassicalSystem::LmgMeanField { xi } => {
                let r2 = 0.25 - p * p;
                if r2 <= 0.0 {
                    return Err(Error::FlowSingularity { t: 0.0, q, p });
                }
                let r = libm::sqrt(r2);
                Ok((-p * libm::cos(q) / r + 4.0 * xi * p, r * libm::sin(q)))
            }
            ClassicalSystem::Oscillator { curvature } => Ok((p, -curvature * q)),
        }
    }

    /// State after time `t` (kicks for the map, rounded to the nearest integer).
    pub fn advance(&self, state: (f64, f64), t: f64) -> Result<(f64, f64)> {
        match *self {
            ClassicalSystem::StandardMap { kick } => {
                let kicks = libm::round(t);
                if kicks < 0.0 {
                    return Err(Error::invalid(
                        "t",
                        "the standard map is iterated forward only",
                    ));
                }
                let mut s = state;
                for _ in 0..kicks as u64 {
                    s = standard_map_step(s.0, s.1, kick);
                }
                Ok(s)
            }
            _ => flow(self, state, t, FLOW_DT),
        }
    }
}

/// Kick, then rotate: `p' = p + K sin q`, `q' = q + p'`, both mod 2π.
pub fn standard_map_step(q: f64, p: f64, kick: f64) -> (f64, f64) {
    let p1 = wrap(p + kick * libm::sin(q), TWO_PI);
    let q1 = wrap(q + p1, TWO_PI);
    (q1, p1)
}

/// Fixed-step RK4 integration over time `t` (negative runs backward); the
/// step is `dt` shrunk so an integer number of steps spans `t`.
pub fn flow(system: &ClassicalSystem, state: (f64, f64), t: f64, dt: f64) -> Result<(f64, f64)> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", "step must be positive"));
    }
    system.velocity(state.0, state.1)?;
    let steps = libm::ceil(libm::fabs(t) / dt) as u64;
    if steps == 0 {
        return Ok(state);
    }
    let h = t / steps as f64;
    let (mut q, mut p) = state;
    for k in 0..steps {
        let at = |e: Error| match e {
            Error::FlowSingularity { q, p, .. } => Error::FlowSingularity {
                t: k as f64 * h,
                q,
                p,
            },
            other => other,
        };
        let (k1q, k1p) = system.velocity(q, p).map_err(at)?;
        let (k2q, k2p) = system
            .velocity(q + 0.5 * h * k1q, p + 0.5 * h * k1p)
            .map_err(at)?;
        let (k3q, k3p) = system
            .velocity(q + 0.5 * h * k2q, p + 0.5 * h * k2p)
            .map_err(at)?;
        let (k4q, k4p) = system.velocity(q + h * k3q, p + h * k3p).map_err(at)?;
        q += h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
        p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    }
    Ok((q, p))
}

/// Trajectory samples from random initial conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionCloud {
    pub points: Vec<(f64, f64)>,
    pub seed: u64,
    pub samples: usize,
    pub iterations: usize,
}

/// Draw `n_samples` uniform starts in the rectangle `lo..hi`, then record
/// each start and its next `n_iterations` images spaced by `stride` (kicks
/// for the map). Map points are wrapped onto the torus.
pub fn poincare_section(
    system: &ClassicalSystem,
    lo: (f64, f64),
    hi: (f64, f64),
    n_samples: usize,
    n_iterations: usize,
    stride: f64,
    seed: u64,
) -> Result<SectionCloud> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n_samples * (n_iterations + 1));
    for _ in 0..n_samples {
        let q = lo.0 + (hi.0 - lo.0) * rng.random::<f64>();
        let p = lo.1 + (hi.1 - lo.1) * rng.random::<f64>();
        let mut s = if system.is_map() {
            (wrap(q, TWO_PI), wrap(p, TWO_PI))
        } else {
            (q, p)
        };
        points.push(s);
        for _ in 0..n_iterations {
            s = system.advance(s, stride)?;
            points.push(s);
        }
    }
    Ok(SectionCloud {
        points,
        seed,
        samples: n_samples,
        iterations: n_iterations,
    })
}

/// Cell-to-cell map induced by transporting cell centers, with the phase of
/// the matching propagator element.
#[derive(Clone, Debug, PartialEq)]
pub struct CoarseMap {
    pub t: f64,
    pub target: Vec<usize>,
    pub phase: Vec<C64>,
    pub magnitude: Vec<f64>,
    /// Cells whose overlap vanished (phase set to 1) or whose trajectory failed.
    pub flagged: Vec<bool>,
}

impl CoarseMap {
    /// Number of cells that share their image with an earlier cell.
    pub fn collisions(&self) -> usize {
        let mut seen = alloc::vec![false; self.target.len()];
        let mut count = 0;
        for &t in &self.target {
            if seen[t] {
                count += 1;
            }
            seen[t] = true;
        }
        count
    }

    pub fn identity(cells: usize) -> Self {
        CoarseMap {
            t: 0.0,
            target: (0..cells).collect(),
            phase: alloc::vec![C64::new(1.0, 0.0); cells],
            magnitude: alloc::vec![1.0; cells],
            flagged: alloc::vec![false; cells],
        }
    }
}

const ZERO_OVERLAP: f64 = 1e-14;

/// Classical image cell of every cell center after time `t`. Images leaving a
/// bounded box are clamped to the nearest boundary cell; failed trajectories
/// map a cell to itself and flag it.
pub fn cell_targets(
    system: &ClassicalSystem,
    layout: &CellLayout,
    t: f64,
) -> (Vec<usize>, Vec<bool>) {
    let d = layout.grid.cell_count();
    let mut target = Vec::with_capacity(d);
    let mut failed = Vec::with_capacity(d);
    for cell in 0..d {
        match system.advance(layout.cell_center(cell), t) {
            Ok((q, p)) => {
                target.push(layout.cell_nearest(q, p));
                failed.push(false);
            }
            Err(_) => {
                target.push(cell);
                failed.push(true);
            }
        }
    }
    (target, failed)
}

/// Coarse map from a propagator already expressed in the cell frame, `W† U(t) W`.
pub fn coarse_map_in_cell_frame(
    system: &ClassicalSystem,
    layout: &CellLayout,
    t: f64,
    u_cell: MatRef<'_, C64>,
) -> Result<CoarseMap> {
    let d = layout.grid.cell_count();
    if u_cell.nrows() != d || u_cell.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: u_cell.nrows(),
        });
    }
    let (target, mut flagged) = cell_targets(system, layout, t);
    let mut phase = Vec::with_capacity(d);
    let mut magnitude = Vec::with_capacity(d);
    for x in 0..d {
        let elem = u_cell[(target[x], x)];
        let mag = elem.norm();
        magnitude.push(mag);
        if mag < ZERO_OVERLAP {
            phase.push(C64::new(1.0, 0.0));
            flagged[x] = true;
        } else {
            phase.push(elem / mag);
        }
    }
    Ok(CoarseMap {
        t,
        target,
        phase,
        magnitude,
        flagged,
    })
}

/// Coarse map for a propagator `U(t)` given in the computational frame.
pub fn coarse_map(
    system: &ClassicalSystem,
    basis: &PlanckBasis,
    t: f64,
    u_t: MatRef<'_, C64>,
) -> Result<CoarseMap> {
    let u_cell = basis.to_cell_frame(u_t)?;
    coarse_map_in_cell_frame(system, &basis.layout(), t, u_cell.as_ref())
}

const FD_STEP: f64 = 1e-5;
const STATIONARY_TOL: f64 = 1e-8;

/// Largest real part of the spectrum of the flow linearised at a fixed point.
pub fn saddle_lyapunov(system: &ClassicalSystem, point: (f64, f64)) -> Result<f64> {
    let (q, p) = point;
    let (vq, vp) = system.velocity(q, p)?;
    let gradient = libm::hypot(vq, vp);
    if gradient > STATIONARY_TOL {
        return Err(Error::NotStationary { gradient });
    }
    let h = |a: f64, b: f64| system.hamiltonian(a, b).unwrap_or(0.0);
    let e = FD_STEP;
    let hqq = (h(q + e, p) - 2.0 * h(q, p) + h(q - e, p)) / (e * e);
    let hpp = (h(q, p + e) - 2.0 * h(q, p) + h(q, p - e)) / (e * e);
    let hqp =
        (h(q + e, p + e) - h(q + e, p - e) - h(q - e, p + e) + h(q - e, p - e)) / (4.0 * e * e);
    // [[hqp, hpp], [-hqq, -hqp]] has eigenvalues ±√(hqp² - hpp·hqq)
    let disc = hqp * hqp - hpp * hqq;
    Ok(if disc > 0.0 { libm::sqrt(disc) } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_map_basics() {
        assert_eq!(standard_map_step(0.0, 0.0, 4.7), (0.0, 0.0));
        let (q, p) = standard_map_step(1.0, 0.5, 0.0);
        assert_eq!(p, 0.5);
        assert!((q - 1.5).abs() < 1e-15);
    }

    #[test]
    fn standard_map_jacobian_is_unimodular() {
        let k = 4.7;
        let e = 1e-6;
        for &(q, p) in &[(1.0, 2.0), (3.0, 0.4), (5.5, 6.0)] {
            let f = |a: f64, b: f64| {
                // unwrapped form of the same map
                let p1 = b + k * libm::sin(a);
                (a + p1, p1)
            };
            let (a1, b1) = f(q + e, p);
            let (a2, b2) = f(q - e, p);
            let (c1, d1) = f(q, p + e);
            let (c2, d2) = f(q, p - e);
            let det = ((a1 - a2) * (d1 - d2) - (b1 - b2) * (c1 - c2)) / (4.0 * e * e);
            assert!((det - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn oscillator_flow_is_cosh() {
        let sys = ClassicalSystem::Oscillator { curvature: -1.0 };
        let (q, p) = flow(&sys, (0.1, 0.0), 2.0, 1e-3).unwrap();
        assert!((q - 0.1 * libm::cosh(2.0)).abs() < 1e-10);
        assert!((p - 0.1 * libm::sinh(2.0)).abs() < 1e-10);
    }

    #[test]
    fn lmg_saddle_is_fixed_and_flow_reverses() {
        let sys = ClassicalSystem::LmgMeanField { xi: -2.0 };
        let rest = flow(&sys, (PI, 0.0), 3.0, 1e-3).unwrap();
        assert!((rest.0 - PI).abs() < 1e-12 && rest.1.abs() < 1e-12);
        let start = (2.0, 0.1);
        let fwd = flow(&sys, start, 1.5, 1e-3).unwrap();
        let back = flow(&sys, fwd, -1.5, 1e-3).unwrap();
        assert!((back.0 - start.0).abs() < 1e-6 && (back.1 - start.1).abs() < 1e-6);
        let e0 = sys.hamiltonian(start.0, start.1).unwrap();
        let e1 = sys.hamiltonian(fwd.0, fwd.1).unwrap();
        assert!((e1 - e0).abs() < 1.5e-8);
    }

    #[test]
    fn lmg_singularity_flagged() {
        let sys = ClassicalSystem::LmgMeanField { xi: -2.0 };
        assert!(matches!(
            flow(&sys, (0.0, 0.5), 1.0, 1e-3),
            Err(Error::FlowSingularity { .. })
        ));
    }

    #[test]
    fn lmg_separation_grows_at_sqrt3() {
        let sys = ClassicalSystem::LmgMeanField { xi: -2.0 };
        let d0 = 1e-7;
        let mut ts = Vec::new();
        let mut logs = Vec::new();
        for k in 1..=12 {
            let t = 0.1 * k as f64;
            // displacement along the unstable direction δp = -δq/(2√3)
            let start = (PI + d0, -d0 / (2.0 * libm::sqrt(3.0)));
            let (q, p) = flow(&sys, start, t, 1e-3).unwrap();
            ts.push(t);
            logs.push(libm::log(libm::hypot(q - PI, p)));
        }
        let n = ts.len() as f64;
        let mt = ts.iter().sum::<f64>() / n;
        let ml = logs.iter().sum::<f64>() / n;
        let slope = ts
            .iter()
            .zip(&logs)
            .map(|(t, l)| (t - mt) * (l - ml))
            .sum::<f64>()
            / ts.iter().map(|t| (t - mt) * (t - mt)).sum::<f64>();
        assert!((slope - libm::sqrt(3.0)).abs() < 1e-3, "{slope}");
    }

    #[test]
    fn saddle_exponents() {
        let lmg = saddle_lyapunov(&ClassicalSystem::LmgMeanField { xi: -2.0 }, (PI, 0.0)).unwrap();
        assert!((lmg - libm::sqrt(3.0)).abs() < 1e-4);
        let iho =
            saddle_lyapunov(&ClassicalSystem::Oscillator { curvature: -1.0 }, (0.0, 0.0)).unwrap();
        assert!((iho - 1.0).abs() < 1e-6);
        let ho =
            saddle_lyapunov(&ClassicalSystem::Oscillator { curvature: 1.0 }, (0.0, 0.0)).unwrap();
        assert_eq!(ho, 0.0);
        let err = saddle_lyapunov(&ClassicalSystem::Oscillator { curvature: -1.0 }, (0.3, 0.0));
        assert!(matches!(err, Err(Error::NotStationary { .. })));
    }

    #[test]
    fn section_is_seeded() {
        let sys = ClassicalSystem::StandardMap { kick: 4.7 };
        let a = poincare_section(&sys, (0.0, 0.0), (TWO_PI, TWO_PI), 5, 10, 1.0, 9).unwrap();
        let b = poincare_section(&sys, (0.0, 0.0), (TWO_PI, TWO_PI), 5, 10, 1.0, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.points.len(), 55);
        assert!(a
            .points
            .iter()
            .all(|&(q, p)| (0.0..TWO_PI).contains(&q) && (0.0..TWO_PI).contains(&p)));
        let bare = poincare_section(&sys, (0.0, 0.0), (TWO_PI, TWO_PI), 4, 0, 1.0, 9).unwrap();
        assert_eq!(bare.points.len(), 4);
    }

    #[test]
    fn chaotic_orbit_covers_the_sea() {
        let mut s = (0.2 * TWO_PI, 0.2 * TWO_PI);
        let bins = 20;
        let mut hist = alloc::vec![0usize; bins * bins];
        for _ in 0..10_000 {
            s = standard_map_step(s.0, s.1, 4.7);
            let m = (s.0 / TWO_PI * bins as f64) as usize;
            let n = (s.1 / TWO_PI * bins as f64) as usize;
            hist[m * bins + n] += 1;
        }
        let entropy: f64 = hist
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let x = c as f64 / 10_000.0;
                -x * libm::log(x)
            })
            .sum();
        assert!(entropy / libm::log((bins * bins) as f64) > 0.9);
    }
}
