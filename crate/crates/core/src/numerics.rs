//! Dense complex linear algebra shared by every other module.

use alloc::vec::Vec;

use faer::{Col, ColRef, Mat, MatRef, Side};

use crate::{Error, Result};

pub type C64 = num_complex::Complex<f64>;
pub type CMatrix = Mat<C64>;
pub type CVector = Col<C64>;

/// Tolerances for exact algebraic identities and for eigensolver output.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub algebraic: f64,
    pub spectral: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            algebraic: 1e-10,
            spectral: 1e-8,
        }
    }
}

/// `x` reduced into `[0, period)`.
#[inline]
pub fn wrap(x: f64, period: f64) -> f64 {
    let r = libm::fmod(x, period);
    if r < 0.0 {
        r + period
    } else {
        r
    }
}

#[inline]
pub fn cis(theta: f64) -> C64 {
    C64::new(libm::cos(theta), libm::sin(theta))
}

fn check_square(a: MatRef<'_, C64>) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    Ok(a.nrows())
}

fn check_same(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Result<usize> {
    let n = check_square(a)?;
    let m = check_square(b)?;
    if n != m {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m,
        });
    }
    Ok(n)
}

/// `max |A_ij - conj(A_ji)|`.
pub fn hermitian_defect(a: MatRef<'_, C64>) -> f64 {
    let n = a.nrows().min(a.ncols());
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `max |(U†U - I)_ij|`.
pub fn unitary_defect(u: MatRef<'_, C64>) -> f64 {
    let g = u.adjoint() * u;
    let mut worst = 0.0f64;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let target = if i == j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}

/// Replaces `A` by `(A + A†)/2` and returns the hermitian defect it had.
pub fn symmetrize(a: &mut CMatrix) -> f64 {
    let n = a.nrows();
    let mut drift = 0.0f64;
    for j in 0..n {
        for i in 0..j {
            let x = a[(i, j)];
            let y = a[(j, i)].conj();
            drift = drift.max((x - y).norm());
            let avg = (x + y) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
        drift = drift.max(a[(j, j)].im.abs());
        a[(j, j)] = C64::new(a[(j, j)].re, 0.0);
    }
    drift
}

/// Eigendecomposition `A = V diag(λ) V†` of a hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct SpectralDecomp {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralDecomp {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V diag(f(λ)) V†`.
    pub fn map(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let v = &self.eigenvectors;
        let scaled = Mat::from_fn(v.nrows(), v.ncols(), |i, k| {
            v[(i, k)] * f(self.eigenvalues[k])
        });
        &scaled * v.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|l| C64::new(l, 0.0))
    }

    /// `exp(-i H t / ħ)` applied to a state, without forming the propagator.
    pub fn evolve(&self, psi: ColRef<'_, C64>, t: f64, hbar: f64) -> CVector {
        let v = &self.eigenvectors;
        let mut coeffs = v.adjoint() * psi;
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            coeffs[k] *= cis(-l * t / hbar);
        }
        v * &coeffs
    }
}

/// Hermitian eigendecomposition. Inputs with hermitian defect above `tol`
/// are rejected.
pub fn eig_hermitian(a: MatRef<'_, C64>, tol: f64) -> Result<SpectralDecomp> {
    check_square(a)?;
    let defect = hermitian_defect(a);
    if defect > tol {
        return Err(Error::NotHermitian {
            defect,
            tolerance: tol,
        });
    }
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::NoConvergence)?;
    let s = evd.S().column_vector();
    let eigenvalues = (0..s.nrows()).map(|k| s[k].re).collect();
    Ok(SpectralDecomp {
        eigenvalues,
        eigenvectors: evd.U().to_owned(),
    })
}

/// `exp(-i H dt / ħ)` from a hermitian generator.
pub fn propagator_from_hamiltonian(h: MatRef<'_, C64>, dt: f64, hbar: f64) -> Result<CMatrix> {
    let decomp = eig_hermitian(h, Tolerances::default().algebraic)?;
    propagator_from_spectrum(&decomp, dt, hbar)
}

pub fn propagator_from_spectrum(decomp: &SpectralDecomp, dt: f64, hbar: f64) -> Result<CMatrix> {
    if !(hbar > 0.0) || !dt.is_finite() {
        return Err(Error::invalid("hbar", "ħ must be positive and dt finite"));
    }
    Ok(decomp.map(|l| cis(-l * dt / hbar)))
}

/// `[A, B] = AB - BA`.
pub fn commutator(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Result<CMatrix> {
    check_same(a, b)?;
    Ok(a * b - b * a)
}

/// Diagonal of `-[A, B]^2` in the frame the inputs are given in.
pub fn commutator_sq_diagonal(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Result<Vec<f64>> {
    let c = commutator(a, b)?;
    let n = c.nrows();
    Ok((0..n)
        .map(|k| {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..n {
                acc += c[(k, j)] * c[(j, k)];
            }
            -acc.re
        })
        .collect())
}

/// One Heisenberg step `U† A U`.
pub fn heisenberg_step(u: MatRef<'_, C64>, a: MatRef<'_, C64>) -> Result<CMatrix> {
    check_same(u, a)?;
    let au = a * u;
    Ok(u.adjoint() * &au)
}

/// `<ψ|A|ψ>`.
pub fn expectation(a: MatRef<'_, C64>, psi: ColRef<'_, C64>) -> Result<C64> {
    if a.ncols() != psi.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            found: psi.nrows(),
        });
    }
    let apsi = a * psi;
    Ok(inner(psi, apsi.as_ref()))
}

/// `<a|b>`, conjugate-linear in the first slot.
pub fn inner(a: ColRef<'_, C64>, b: ColRef<'_, C64>) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..a.nrows() {
        acc += a[k].conj() * b[k];
    }
    acc
}

pub fn norm_sqr(v: ColRef<'_, C64>) -> f64 {
    (0..v.nrows()).map(|k| v[k].norm_sqr()).sum()
}

/// Real diagonal matrix.
pub fn diagonal(values: &[f64]) -> CMatrix {
    let n = values.len();
    Mat::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(values[i], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}
