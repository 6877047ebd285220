use cellscope_core::analysis::{self, CellLabel};
use cellscope_core::classical::{self, ClassicalSystem, SectionCloud};
use cellscope_core::models::{IhoSpec, KickedRotorSpec, LmgSpec};
use cellscope_core::numerics::{self, CMatrix, C64};
use cellscope_core::observables;
use cellscope_core::otoc::{self, Evolution, Operand};
use cellscope_core::planck::{self, PlanckBasis};
use faer::{Col, Mat};
use proptest::prelude::*;
use std::f64::consts::TAU;

fn identity_defect(a: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let e = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((a[(i, j)] - C64::new(e, 0.0)).norm());
        }
    }
    worst
}

fn assert_complete(basis: &PlanckBasis) {
    let w = &basis.frame;
    assert!(identity_defect(&(w.adjoint() * w)) < 1e-10);
    assert!(identity_defect(&(w * w.adjoint())) < 1e-10);
}

fn random_matrix(entries: &[(f64, f64)], n: usize) -> CMatrix {
    Mat::from_fn(n, n, |i, j| {
        let (re, im) = entries[i * n + j];
        C64::new(re, im)
    })
}

fn random_hermitian(entries: &[(f64, f64)], n: usize) -> CMatrix {
    let a = random_matrix(entries, n);
    Mat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rotor_basis_is_orthonormal(cells in 2usize..12, kick in 0.0f64..6.0) {
        assert_complete(&KickedRotorSpec::new(kick, cells).unwrap().basis().unwrap());
    }

    #[test]
    fn fock_basis_is_orthonormal(k in 1usize..4, origin in -3.0f64..3.0) {
        let l = 2 * k + 1;
        let n_bosons = l * l - 1;
        let basis = LmgSpec::new(n_bosons, -2.0).unwrap().basis(origin).unwrap();
        assert_complete(&basis);
    }

    #[test]
    fn position_slice_basis_is_orthonormal(hbar in 0.004f64..0.05, ratio in 0.05f64..0.3) {
        let spec = IhoSpec::inverted(hbar, ratio * hbar.sqrt());
        if let Ok(basis) = spec.basis() {
            assert_complete(&basis);
        }
    }

    #[test]
    fn commutator_diagonal_matches_brute_force(
        a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64),
        b in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64),
    ) {
        let (a, b) = (random_hermitian(&a, 8), random_hermitian(&b, 8));
        let fast = numerics::commutator_sq_diagonal(a.as_ref(), b.as_ref()).unwrap();
        let k = numerics::commutator(a.as_ref(), b.as_ref()).unwrap();
        let k2 = &k * &k;
        for (i, v) in fast.iter().enumerate() {
            prop_assert!((v + k2[(i, i)].re).abs() < 1e-10);
            prop_assert!(*v >= -1e-9);
        }
    }

    #[test]
    fn heisenberg_step_keeps_the_spectrum(
        h in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 36),
        a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 36),
        t in 0.1f64..5.0,
    ) {
        let (h, a) = (random_hermitian(&h, 6), random_hermitian(&a, 6));
        let u = numerics::propagator_from_hamiltonian(h.as_ref(), t, 1.0).unwrap();
        let at = numerics::heisenberg_step(u.as_ref(), a.as_ref()).unwrap();
        let before = numerics::eig_hermitian(a.as_ref(), 1e-10).unwrap();
        let after = numerics::eig_hermitian(at.as_ref(), 1e-8).unwrap();
        for (x, y) in before.eigenvalues.iter().zip(&after.eigenvalues) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn otoc_is_nonnegative_and_starts_at_zero(kick in 0.0f64..6.0, cells in 3usize..8) {
        let spec = KickedRotorSpec::new(kick, cells).unwrap();
        let basis = spec.basis().unwrap();
        let ev = Evolution::Floquet(spec.floquet().unwrap());
        let (q, p) = (basis.q_values(), basis.p_values());
        let all: Vec<usize> = (0..basis.dim()).collect();
        let sweep = otoc::cell_frame_sweep(
            &ev, &basis, Operand::CellDiagonal(&q), Operand::CellDiagonal(&p), 6, &all,
        ).unwrap();
        for (_, curve) in &sweep.curves {
            prop_assert_eq!(curve[0], 0.0);
            prop_assert!(curve.iter().all(|&v| v >= -1e-9));
        }
        prop_assert!(sweep.thermal.iter().all(|&v| v >= -1e-9));
        let micro = spec.momentum_operator();
        let sweep = otoc::cell_frame_sweep(
            &ev, &basis, Operand::Computational(micro.as_ref()),
            Operand::Computational(micro.as_ref()), 4, &all,
        ).unwrap();
        prop_assert!(sweep.curves.iter().all(|(_, c)| c.iter().all(|&v| v >= -1e-9)));
    }

    #[test]
    fn spreading_is_zero_at_time_zero(k in 1usize..3, xi in -3.0f64..-0.5) {
        let l = 2 * k + 1;
        let spec = LmgSpec::new(l * l - 1, xi).unwrap();
        let basis = spec.basis(spec.saddle_origin().unwrap()).unwrap();
        let decomp = numerics::eig_hermitian(spec.hamiltonian().as_ref(), 1e-10).unwrap();
        let ev = Evolution::Spectral { decomp, hbar: 1.0, dt: 0.1 };
        let u0 = otoc::cell_frame_propagator(&ev, &basis, 0).unwrap();
        let g = classical::coarse_map_in_cell_frame(
            &ClassicalSystem::LmgMeanField { xi }, &basis.layout(), 0.0, u0.as_ref(),
        ).unwrap();
        let f = otoc::spreading_function(u0.as_ref(), &g).unwrap();
        for j in 0..f.ncols() {
            for i in 0..f.nrows() {
                prop_assert_eq!(f[(i, j)], C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn fit_ignores_positive_rescaling(rate in -3.0f64..3.0, scale in 1e-6f64..1e6) {
        let t: Vec<f64> = (0..20).map(|k| 0.05 * k as f64).collect();
        let v: Vec<f64> = t.iter().map(|&t| (rate * t + (7.0 * t).sin() * 0.1).exp()).collect();
        let scaled: Vec<f64> = v.iter().map(|x| x * scale).collect();
        let a = analysis::fit_exponential(&t, &v, (0.0, 1.0)).unwrap();
        let b = analysis::fit_exponential(&t, &scaled, (0.0, 1.0)).unwrap();
        prop_assert!((a.exponent - b.exponent).abs() < 1e-9);
        prop_assert!((b.intercept - a.intercept - scale.ln()).abs() < 1e-9);
    }

    #[test]
    fn more_points_never_turn_sea_into_island(
        first in prop::collection::vec((0.0f64..TAU, 0.0f64..TAU), 0..60),
        extra in prop::collection::vec((0.0f64..TAU, 0.0f64..TAU), 0..60),
        min_hits in 1usize..4,
    ) {
        let layout = KickedRotorSpec::new(1.0, 5).unwrap().basis().unwrap().layout();
        let cloud = |points: Vec<(f64, f64)>| SectionCloud { points, seed: 0, samples: 0, iterations: 0 };
        let before = analysis::classify_cells(&cloud(first.clone()), &layout, min_hits);
        let mut more = first;
        more.extend(extra);
        let after = analysis::classify_cells(&cloud(more), &layout, min_hits);
        for (b, a) in before.labels.iter().zip(&after.labels) {
            if *b == CellLabel::Sea {
                prop_assert_eq!(*a, CellLabel::Sea);
            }
            if *a == CellLabel::Island {
                prop_assert_eq!(*b, CellLabel::Island);
            }
        }
    }

    #[test]
    fn entropy_is_bounded_and_permutation_invariant(
        amps in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16),
        shift in 1usize..16,
    ) {
        let basis = KickedRotorSpec::new(1.0, 4).unwrap().basis().unwrap();
        let norm: f64 = amps.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        let state = |order: &dyn Fn(usize) -> usize| {
            let c = Col::from_fn(16, |x| {
                let (re, im) = amps[order(x)];
                C64::new(re / norm, im / norm)
            });
            &basis.frame * &c
        };
        let s = observables::gwvn_entropy(state(&|x| x).as_ref(), &basis).unwrap();
        let permuted = observables::gwvn_entropy(state(&|x| (x + shift) % 16).as_ref(), &basis).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&s));
        prop_assert!((s - permuted).abs() < 1e-12);
    }
}

#[test]
fn macroscopic_operators_commute() {
    let basis = LmgSpec::new(24, -2.0).unwrap().basis(0.2).unwrap();
    let ops = planck::macroscopic_operators(&basis);
    let k = numerics::commutator(ops.q.as_ref(), ops.p.as_ref()).unwrap();
    let worst = (0..k.nrows())
        .flat_map(|i| (0..k.ncols()).map(move |j| (i, j)))
        .map(|(i, j)| k[(i, j)].norm())
        .fold(0.0, f64::max);
    assert!(worst < 1e-10);
}
