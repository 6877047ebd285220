//! Quantum model systems and thermal states.

use alloc::vec::Vec;
use core::f64::consts::PI;

use faer::{Mat, MatRef};

use crate::numerics::{cis, diagonal, eig_hermitian, CMatrix, SpectralDecomp, Tolerances, C64};
use crate::planck::{self, PhaseSpaceGrid, PlanckBasis};
use crate::{Error, Result};

/// Kicked rotor on the torus `[0, 2π)²` cut into `cells × cells` Planck cells,
/// so `D = cells²` and `ħ = 2π / D`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KickedRotorSpec {
    pub kick: f64,
    pub cells: usize,
}

impl KickedRotorSpec {
    pub fn new(kick: f64, cells: usize) -> Result<Self> {
        let spec = KickedRotorSpec { kick, cells };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells < 2 {
            return Err(Error::invalid("cells", "need at least 2 cells per axis"));
        }
        if !(self.kick >= 0.0) || !self.kick.is_finite() {
            return Err(Error::invalid(
                "kick",
                "kicking strength must be finite and >= 0",
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.cells * self.cells
    }

    pub fn hbar(&self) -> f64 {
        2.0 * PI / self.dim() as f64
    }

    pub fn grid(&self) -> Result<PhaseSpaceGrid> {
        self.validate()?;
        Ok(PhaseSpaceGrid::new(
            (0.0, 0.0),
            (2.0 * PI, 2.0 * PI),
            (self.cells, self.cells),
            self.hbar(),
        )?
        .periodic(true, true))
    }

    pub fn basis(&self) -> Result<PlanckBasis> {
        planck::build_position_slice_basis(self.grid()?, self.dim())
    }

    /// Midpoint position samples `q_j = (j + ½) 2π / D`.
    pub fn positions(&self) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .map(|j| (j as f64 + 0.5) * 2.0 * PI / d as f64)
            .collect()
    }

    /// Momentum eigenvalues `ħk`, `k = 0..D`.
    pub fn momenta(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.hbar() * k as f64).collect()
    }

    /// `F` with `F_kj = ⟨p_k|q_j⟩`; maps position amplitudes to momentum amplitudes.
    pub fn momentum_frame(&self) -> CMatrix {
        let q = self.positions();
        let p = self.momenta();
        planck::position_momentum_overlap(&q, &p, self.hbar())
            .adjoint()
            .to_owned()
    }

    /// One period: kick `e^{-iK cos q/ħ}`, then free rotation `e^{-ip²/2ħ}`.
    ///
    /// The rotation is a circulant in the position frame, so the product is
    /// assembled entrywise in `O(D²)`.
    pub fn floquet(&self) -> Result<CMatrix> {
        self.validate()?;
        let d = self.dim();
        let hbar = self.hbar();
        let circulant: Vec<C64> = (0..d)
            .map(|shift| {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..d {
                    // phases reduced mod 2π in integer arithmetic first
                    let fourier = ((shift * k) % d) as f64 * 2.0 * PI / d as f64;
                    let kinetic = hbar * (k * k) as f64 / 2.0;
                    acc += cis(fourier - kinetic);
                }
                acc / d as f64
            })
            .collect();
        let kick: Vec<C64> = self
            .positions()
            .iter()
            .map(|&q| cis(-self.kick * libm::cos(q) / hbar))
            .collect();
        Ok(Mat::from_fn(d, d, |j, l| {
            circulant[(j + d - l) % d] * kick[l]
        }))
    }

    pub fn position_operator(&self) -> CMatrix {
        diagonal(&self.positions())
    }

    /// `p̂` with spectrum `ħk`, expressed in the position frame.
    pub fn momentum_operator(&self) -> CMatrix {
        let d = self.dim();
        let hbar = self.hbar();
        let circulant: Vec<C64> = (0..d)
            .map(|shift| {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..d {
                    acc += cis(((shift * k) % d) as f64 * 2.0 * PI / d as f64) * (hbar * k as f64);
                }
                acc / d as f64
            })
            .collect();
        Mat::from_fn(d, d, |j, l| circulant[(j + d - l) % d])
    }
}

/// Two-mode boson model with `N` particles:
/// `H = ½(a₁†a₀ + a₀†a₁) + (ξ/2N)(n₁ - n₀)²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmgSpec {
    pub n_bosons: usize,
    pub xi: f64,
}

impl LmgSpec {
    pub fn new(n_bosons: usize, xi: f64) -> Result<Self> {
        if n_bosons == 0 {
            return Err(Error::invalid("n_bosons", "need at least one boson"));
        }
        if !xi.is_finite() {
            return Err(Error::invalid("xi", "interaction must be finite"));
        }
        Ok(LmgSpec { n_bosons, xi })
    }

    pub fn dim(&self) -> usize {
        self.n_bosons + 1
    }

    pub fn hbar(&self) -> f64 {
        1.0 / self.n_bosons as f64
    }

    /// Cells per axis `L` with `N + 1 = L²`.
    pub fn cells(&self) -> Result<usize> {
        Ok(planck::discrete_fock_grid(self.n_bosons, 0.0)?.q_cells)
    }

    /// q-origin that centers a cell exactly on `q = π`.
    pub fn saddle_origin(&self) -> Result<f64> {
        Ok(PI / self.cells()? as f64)
    }

    pub fn basis(&self, q_origin: f64) -> Result<PlanckBasis> {
        planck::build_discrete_fock_basis(self.n_bosons, q_origin)
    }

    /// Hamiltonian in the Fock basis `|s, N-s⟩`, `s = 0..=N`.
    pub fn hamiltonian(&self) -> CMatrix {
        let n = self.n_bosons;
        let nf = n as f64;
        Mat::from_fn(n + 1, n + 1, |i, j| {
            if i == j {
                let imbalance = nf - 2.0 * i as f64;
                C64::new(self.xi / (2.0 * nf) * imbalance * imbalance, 0.0)
            } else if i + 1 == j || j + 1 == i {
                let s = i.min(j) as f64;
                C64::new(0.5 * libm::sqrt((s + 1.0) * (nf - s)), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// Microscopic momentum `p̂ = diag((N - 2s)/2N)`.
    pub fn momentum_operator(&self) -> CMatrix {
        let nf = self.n_bosons as f64;
        let values: Vec<f64> = (0..=self.n_bosons)
            .map(|s| (nf - 2.0 * s as f64) / (2.0 * nf))
            .collect();
        diagonal(&values)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KineticScheme {
    /// Exact sine-series Laplacian of the hard-walled box.
    Spectral,
    /// Three-point central differences.
    FiniteDifference,
}

/// `H = p²/2 + c q²/2` on `[q_min, q_max]` between hard walls; `c = -1` is the
/// inverted oscillator, `c = +1` an ordinary one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IhoSpec {
    pub hbar: f64,
    pub dx: f64,
    pub p_cutoff: f64,
    pub curvature: f64,
    pub kinetic: KineticScheme,
    pub q_min: f64,
    pub q_max: f64,
}

/// Grid actually realised for an [`IhoSpec`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IhoLayout {
    pub q_cells: usize,
    pub samples_per_cell: usize,
    pub points: usize,
    pub dx: f64,
}

impl IhoSpec {
    pub fn inverted(hbar: f64, dx: f64) -> Self {
        IhoSpec {
            hbar,
            dx,
            p_cutoff: 1.0,
            curvature: -1.0,
            kinetic: KineticScheme::Spectral,
            q_min: -0.5,
            q_max: 0.5,
        }
    }

    /// Cells of side `√(2πħ)` (rounded to fit the box), and an integer
    /// number of samples per cell as close to `dx` as possible.
    pub fn layout(&self) -> Result<IhoLayout> {
        if !(self.hbar > 0.0) || !(self.dx > 0.0) || !(self.q_max > self.q_min) {
            return Err(Error::invalid(
                "iho",
                "ħ, dx and the box length must be positive",
            ));
        }
        let len = self.q_max - self.q_min;
        let q_cells = (libm::round(len / libm::sqrt(2.0 * PI * self.hbar)) as usize).max(1);
        let dq = len / q_cells as f64;
        let samples_per_cell = (libm::round(dq / self.dx) as usize).max(1);
        let dx = dq / samples_per_cell as f64;
        let resolved = PI * self.hbar / dx;
        if resolved < self.p_cutoff {
            return Err(Error::Nyquist {
                resolved,
                cutoff: self.p_cutoff,
            });
        }
        Ok(IhoLayout {
            q_cells,
            samples_per_cell,
            points: q_cells * samples_per_cell,
            dx,
        })
    }

    pub fn grid(&self) -> Result<PhaseSpaceGrid> {
        let lay = self.layout()?;
        let dq = (self.q_max - self.q_min) / lay.q_cells as f64;
        let dp = 2.0 * PI * self.hbar / dq;
        let k = lay.samples_per_cell;
        PhaseSpaceGrid::new(
            (self.q_min, -((k / 2) as f64) * dp),
            (self.q_max - self.q_min, k as f64 * dp),
            (lay.q_cells, k),
            self.hbar,
        )
    }

    pub fn basis(&self) -> Result<PlanckBasis> {
        let lay = self.layout()?;
        planck::build_position_slice_basis(self.grid()?, lay.points)
    }

    pub fn positions(&self) -> Result<Vec<f64>> {
        let lay = self.layout()?;
        Ok((0..lay.points)
            .map(|j| self.q_min + (j as f64 + 0.5) * lay.dx)
            .collect())
    }

    pub fn hamiltonian(&self) -> Result<CMatrix> {
        let lay = self.layout()?;
        let n = lay.points;
        let mut h = match self.kinetic {
            KineticScheme::Spectral => {
                let s = sine_transform(n);
                let len = n as f64 * lay.dx;
                let energies: Vec<f64> = (1..=n)
                    .map(|k| {
                        let kappa = PI * k as f64 / len;
                        0.5 * self.hbar * self.hbar * kappa * kappa
                    })
                    .collect();
                let scaled = Mat::from_fn(n, n, |k, j| s[(k, j)] * energies[k]);
                let t = s.transpose() * &scaled;
                Mat::from_fn(n, n, |i, j| C64::new(t[(i, j)], 0.0))
            }
            KineticScheme::FiniteDifference => {
                let c = self.hbar * self.hbar / (2.0 * lay.dx * lay.dx);
                Mat::from_fn(n, n, |i, j| {
                    if i == j {
                        // antisymmetric ghost point beyond each wall
                        let edge = i == 0 || i == n - 1;
                        C64::new(if edge { 3.0 * c } else { 2.0 * c }, 0.0)
                    } else if i + 1 == j || j + 1 == i {
                        C64::new(-c, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
            }
        };
        for (j, q) in self.positions()?.into_iter().enumerate() {
            h[(j, j)] += C64::new(0.5 * self.curvature * q * q, 0.0);
        }
        crate::numerics::symmetrize(&mut h);
        Ok(h)
    }

    pub fn position_operator(&self) -> Result<CMatrix> {
        Ok(diagonal(&self.positions()?))
    }

    /// Central-difference `-iħ d/dq` with the wavefunction vanishing outside the box.
    pub fn momentum_operator(&self) -> Result<CMatrix> {
        let lay = self.layout()?;
        let c = self.hbar / (2.0 * lay.dx);
        Ok(Mat::from_fn(lay.points, lay.points, |i, j| {
            if j == i + 1 {
                C64::new(0.0, -c)
            } else if i == j + 1 {
                C64::new(0.0, c)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }
}

/// Orthonormal DST-II: row `k` is `sin(π (j+½)(k+1)/n)`, normalised.
pub fn sine_transform(n: usize) -> Mat<f64> {
    let base = libm::sqrt(2.0 / n as f64);
    Mat::from_fn(n, n, |k, j| {
        let v = base * libm::sin(PI * (j as f64 + 0.5) * (k + 1) as f64 / n as f64);
        if k + 1 == n {
            v / core::f64::consts::SQRT_2
        } else {
            v
        }
    })
}

/// Boltzmann weights `e^{-E/T}/Z`, shifted by the ground energy before exponentiating.
pub fn gibbs_weights(eigenvalues: &[f64], temperature: f64) -> Result<Vec<f64>> {
    if !(temperature > 0.0) {
        return Err(Error::invalid("temperature", "T must be positive"));
    }
    let e0 = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = eigenvalues
        .iter()
        .map(|&e| libm::exp(-(e - e0) / temperature))
        .collect();
    let z: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / z).collect())
}

pub fn gibbs_state_from_spectrum(decomp: &SpectralDecomp, temperature: f64) -> Result<CMatrix> {
    let w = gibbs_weights(&decomp.eigenvalues, temperature)?;
    let v = &decomp.eigenvectors;
    let scaled = Mat::from_fn(v.nrows(), v.ncols(), |i, k| v[(i, k)] * w[k]);
    let mut rho = &scaled * v.adjoint();
    crate::numerics::symmetrize(&mut rho);
    Ok(rho)
}

/// `e^{-H/T} / Tr e^{-H/T}`.
pub fn gibbs_state(h: MatRef<'_, C64>, temperature: f64) -> Result<CMatrix> {
    if !(temperature > 0.0) {
        return Err(Error::invalid("temperature", "T must be positive"));
    }
    let decomp = eig_hermitian(h, Tolerances::default().algebraic)?;
    gibbs_state_from_spectrum(&decomp, temperature)
}

/// Thermal probability carried by eigenstates with energy below `energy`.
pub fn population_below(eigenvalues: &[f64], temperature: f64, energy: f64) -> Result<f64> {
    let w = gibbs_weights(eigenvalues, temperature)?;
    Ok(eigenvalues
        .iter()
        .zip(&w)
        .filter(|(e, _)| **e < energy)
        .map(|(_, w)| w)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{hermitian_defect, unitary_defect};

    #[test]
    fn rotor_hbar_and_unitarity() {
        let spec = KickedRotorSpec::new(4.7, 30).unwrap();
        assert!((spec.hbar() - 0.00698).abs() < 1e-5);
        let u = spec.floquet().unwrap();
        assert!(unitary_defect(u.as_ref()) < 1e-12);
    }

    #[test]
    fn free_rotor_is_diagonal_in_momentum() {
        let spec = KickedRotorSpec::new(0.0, 4).unwrap();
        let f = spec.momentum_frame();
        let u = spec.floquet().unwrap();
        let um = &f * &u * f.adjoint();
        for i in 0..16 {
            for j in 0..16 {
                if i == j {
                    assert!((um[(i, j)].norm() - 1.0).abs() < 1e-12);
                } else {
                    assert!(um[(i, j)].norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn floquet_matches_factor_product() {
        let spec = KickedRotorSpec::new(1.3, 3).unwrap();
        let d = spec.dim();
        let f = spec.momentum_frame();
        let free = Mat::from_fn(d, d, |i, j| {
            if i == j {
                cis(-spec.momenta()[i].powi(2) / (2.0 * spec.hbar()))
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let kick = Mat::from_fn(d, d, |i, j| {
            if i == j {
                cis(-spec.kick * spec.positions()[i].cos() / spec.hbar())
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let want = f.adjoint() * &free * &f * &kick;
        let got = spec.floquet().unwrap();
        for i in 0..d {
            for j in 0..d {
                assert!((want[(i, j)] - got[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rotor_momentum_operator_spectrum() {
        let spec = KickedRotorSpec::new(0.0, 3).unwrap();
        let p = spec.momentum_operator();
        let e = eig_hermitian(p.as_ref(), 1e-10).unwrap();
        for (k, v) in e.eigenvalues.iter().enumerate() {
            assert!((v - spec.hbar() * k as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn lmg_small_cases() {
        let h = LmgSpec::new(1, -2.0).unwrap().hamiltonian();
        let want = [[-1.0, 0.5], [0.5, -1.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((h[(i, j)] - C64::new(want[i][j], 0.0)).norm() < 1e-15);
            }
        }
        let h2 = LmgSpec::new(2, -2.0).unwrap().hamiltonian();
        assert!((h2[(1, 2)].re - libm::sqrt(2.0) / 2.0).abs() < 1e-15);
        let p = LmgSpec::new(2, -2.0).unwrap().momentum_operator();
        for (s, want) in [0.5, 0.0, -0.5].iter().enumerate() {
            assert_eq!(p[(s, s)].re, *want);
        }
    }

    #[test]
    fn lmg_parity_and_bounds() {
        let spec = LmgSpec::new(8, -2.0).unwrap();
        let h = spec.hamiltonian();
        assert!(hermitian_defect(h.as_ref()) < 1e-12);
        for i in 0..9 {
            for j in 0..9 {
                assert_eq!(h[(i, j)], h[(8 - i, 8 - j)]);
            }
        }
        let e = eig_hermitian(h.as_ref(), 1e-10).unwrap();
        // Gershgorin: |diagonal| <= N, two hoppings of at most (N+1)/4 each
        assert!(e.eigenvalues.iter().all(|v| v.abs() <= 8.0 + 4.5));
        assert!(e.eigenvalues[0] < -8.0);
        // every eigenvector is even or odd under s -> N - s
        for k in 0..9 {
            let v = e.eigenvectors.col(k);
            let overlap: C64 = (0..9).map(|s| v[s].conj() * v[8 - s]).sum();
            assert!((overlap.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn iho_layouts() {
        let desk = IhoSpec::inverted(0.002, 0.003).layout().unwrap();
        assert_eq!(
            (desk.q_cells, desk.samples_per_cell, desk.points),
            (9, 37, 333)
        );
        let paper = IhoSpec::inverted(0.0005, 0.0003).layout().unwrap();
        assert_eq!((paper.q_cells, paper.points), (18, 3330));
        let coarse = IhoSpec::inverted(0.002, 0.05).layout();
        assert!(matches!(coarse, Err(Error::Nyquist { .. })));
    }

    #[test]
    fn sine_transform_is_orthogonal() {
        let s = sine_transform(17);
        let g = s.transpose() * &s;
        for i in 0..17 {
            for j in 0..17 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn harmonic_check_levels() {
        for kinetic in [KineticScheme::Spectral, KineticScheme::FiniteDifference] {
            let spec = IhoSpec {
                curvature: 1.0,
                kinetic,
                ..IhoSpec::inverted(0.002, 0.003)
            };
            let h = spec.hamiltonian().unwrap();
            let e = eig_hermitian(h.as_ref(), 1e-10).unwrap();
            for n in 0..6 {
                let want = 0.002 * (n as f64 + 0.5);
                assert!(
                    (e.eigenvalues[n] - want).abs() < 0.01 * want,
                    "{kinetic:?} {n} {}",
                    e.eigenvalues[n]
                );
            }
        }
    }

    #[test]
    fn gibbs_limits() {
        let h = diagonal(&[0.0, 1.0]);
        let rho = gibbs_state(h.as_ref(), 1.0).unwrap();
        let z = 1.0 + libm::exp(-1.0);
        assert!((rho[(0, 0)].re - 1.0 / z).abs() < 1e-14);
        assert!((rho[(1, 1)].re - libm::exp(-1.0) / z).abs() < 1e-14);
        let h = LmgSpec::new(8, -2.0).unwrap().hamiltonian();
        let rho = gibbs_state(h.as_ref(), 1e9).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                let want = if i == j { 1.0 / 9.0 } else { 0.0 };
                assert!((rho[(i, j)] - C64::new(want, 0.0)).norm() < 1e-6);
            }
        }
        assert!(gibbs_state(h.as_ref(), 0.0).is_err());
        // huge energies do not overflow
        let big = diagonal(&[1e6, 1e6 + 1.0]);
        let rho = gibbs_state(big.as_ref(), 1.0).unwrap();
        assert!((rho[(0, 0)].re + rho[(1, 1)].re - 1.0).abs() < 1e-14);
    }
}
