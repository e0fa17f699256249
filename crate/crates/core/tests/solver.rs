use std::f64::consts::PI;

use catarray::fock::{self, FockSpace};
use catarray::linalg::{self, c, cr, SparseOp, C64};
use catarray::model::{self, KerrArrayParams, Truncations, TwoPhotonArrayParams};
use catarray::solver::{self, EvolveMethod, EvolveOptions, KernelOptions};
use catarray::states::{self, Parity};
use catarray::superop::{self, liouvillian};
use faer::Mat;
use proptest::prelude::*;

const SMALL: Truncations = Truncations { m_phi: 12, m_d: 3 };

fn kerr2(g: f64, gamma: f64, kappa: f64) -> KerrArrayParams {
    KerrArrayParams {
        n: 2,
        u: 1.0,
        g,
        phi: 2.0 * PI,
        gamma,
        kappa,
    }
}

/// N = 3 at a small truncation. N = 2 conserves the cat-mode parity on its
/// own, and M_d = 2 blocks the pair channel through which parity leaks.
fn kerr3(g: f64, gamma: f64) -> (KerrArrayParams, Truncations) {
    let p = KerrArrayParams { n: 3, ..kerr2(g, gamma, 0.0) };
    (p, Truncations { m_phi: 12, m_d: 3 })
}

fn pure(k: &linalg::Ket) -> Mat<C64> {
    linalg::outer(k.as_ref(), k.as_ref())
}

#[test]
fn kerr_kernel_matches_dense_spectrum() {
    let m = model::kerr_array(&kerr2(0.5, 10.0, 0.0), SMALL).unwrap();
    let l = superop::model_liouvillian(&m).unwrap();
    let k = solver::steady_kernel(&l, KernelOptions::default()).unwrap();
    let s = solver::dissipative_gap(&l, KernelOptions::default()).unwrap();
    assert_eq!(k.dim(), 4);
    assert_eq!(s.kernel_dim, 4);
    assert_eq!(s.method, solver::SpectrumMethod::Dense);
    let res = solver::dfs_projection_residual(&k.basis, &states::dfs_basis(&m).unwrap());
    assert!(res < 1e-4, "{res}");
    for q in &k.basis {
        assert!(linalg::hermiticity_error(q.as_ref()) < 1e-12);
    }
}

#[test]
fn amplitude_damping_has_vacuum_kernel() {
    let a = fock::annihilation(6).unwrap();
    let l = liouvillian(&SparseOp::zeros(6, 6), &[(a, 1.0)]).unwrap();
    let k = solver::steady_kernel(&l, KernelOptions::default()).unwrap();
    assert_eq!(k.dim(), 1);
    let states = solver::physical_states(&k, None).unwrap();
    let rho = states[0].matrix();
    assert!((rho[(0, 0)].re - 1.0).abs() < 1e-10);
}

#[test]
fn photon_loss_collapses_the_kernel() {
    let m = model::kerr_array(&kerr2(0.5, 10.0, 0.05), SMALL).unwrap();
    let l = superop::model_liouvillian(&m).unwrap();
    assert_eq!(solver::steady_kernel(&l, KernelOptions::default()).unwrap().dim(), 1);
}

#[test]
fn conserved_quantities_are_biorthogonal() {
    let m = model::kerr_array(&kerr2(0.5, 10.0, 0.0), SMALL).unwrap();
    let dfs = states::dfs_basis(&m).unwrap();
    let cq = solver::conserved_quantities(&superop::model_adjoint(&m).unwrap(), &dfs, KernelOptions::default()).unwrap();
    assert!(cq.biorthogonality_error < 1e-8);
    for (mu, j) in cq.j.iter().enumerate() {
        for (beta, xi) in dfs.iter().enumerate() {
            let v = linalg::hs_inner(j.as_ref(), xi.as_ref());
            let want = if mu == beta { 1.0 } else { 0.0 };
            assert!((v - cr(want)).norm() < 1e-8);
        }
    }
    let plus = states::model_cat(&m, Parity::Even).unwrap();
    let (rho, co) = solver::steady_for_initial(pure(&plus.ket).as_ref(), &cq, &dfs).unwrap();
    assert!((co.c_pp - 1.0).abs() < 1e-6 && co.c_mm.abs() < 1e-6 && co.c_pm.norm() < 1e-6);
    assert!((linalg::trace(rho.matrix()).re - 1.0).abs() < 1e-10);
}

#[test]
fn vacuum_leaks_to_odd_parity_at_small_gamma() {
    let (p, t) = kerr3(0.5, 1.0);
    let m = model::kerr_array(&p, t).unwrap();
    let (_, co, _) = solver::vacuum_steady_state(&m, KernelOptions::default()).unwrap();
    assert!(co.c_pp < 1.0 - 1e-3 && co.c_mm > 1e-3, "{co:?}");
    assert!((co.c_pp + co.c_mm - 1.0).abs() < 1e-8);
}

#[test]
fn purity_dips_at_intermediate_gamma() {
    let purity = |gamma: f64| {
        let (p, t) = kerr3(0.5, gamma);
        let m = model::kerr_array(&p, t).unwrap();
        let (rho, _, _) = solver::vacuum_steady_state(&m, KernelOptions::default()).unwrap();
        states::purity(rho.as_ref())
    };
    let (mid, large) = (purity(1.0), purity(200.0));
    assert!(mid < large && large > 0.999, "{mid} {large}");
}

#[test]
fn spectrum_invariants() {
    let m = model::kerr_array(&kerr2(0.5, 5.0, 0.01), Truncations { m_phi: 8, m_d: 2 }).unwrap();
    let s = solver::dissipative_gap(&superop::model_liouvillian(&m).unwrap(), KernelOptions::default()).unwrap();
    assert!(s.kernel_dim >= 1);
    assert!(s.max_real_part <= 1e-8);
    let outside = s
        .eigenvalues
        .iter()
        .map(|l| l.re.abs())
        .filter(|&r| r >= s.kernel_tol)
        .fold(f64::INFINITY, f64::min);
    assert_eq!(outside, s.dissipative_gap);
    for l in &s.eigenvalues {
        let partner = s.eigenvalues.iter().map(|m| (m - l.conj()).norm()).fold(f64::INFINITY, f64::min);
        assert!(partner < 1e-8 * s.scale, "{l}");
    }
}

#[test]
fn gap_estimates() {
    let p = kerr2(1.0, 100.0, 0.0);
    let (rel, eps1) = solver::kerr_zeno_gap_relation(&p, 30).unwrap();
    let z = model::effective_zeno_kerr(&p, 30).unwrap();
    let gap = solver::dissipative_gap(&superop::model_liouvillian(&z).unwrap(), KernelOptions::default()).unwrap();
    assert!((gap.dissipative_gap - rel).abs() < 1e-6 * rel);
    assert!(eps1 > 0.0);
    let q = TwoPhotonArrayParams {
        n: 3,
        eta: 1.0,
        g: 2.0,
        phi: 2.0 * PI,
        gamma: 10.0,
        kappa: 0.0,
    };
    assert!((solver::twophoton_zeno_gap_estimate(&q) - 4.0).abs() < 1e-12);
}

fn zeno_trajectory(z: &model::ModelInstance, rho0: &Mat<C64>, times: &[f64], method: EvolveMethod) -> solver::Trajectory {
    let l = superop::model_liouvillian(z).unwrap();
    let opts = EvolveOptions {
        method,
        ..EvolveOptions::default()
    };
    solver::evolve(z, &l, rho0.as_ref(), times, opts).unwrap()
}

#[test]
fn cat_relaxes_to_the_mixture_under_loss() {
    let p = KerrArrayParams {
        n: 3,
        u: 1.0,
        g: 1.0,
        phi: 2.0 * PI,
        gamma: 100.0,
        kappa: 1e-2,
    };
    let z = model::effective_zeno_kerr(&p, 18).unwrap();
    let plus = states::model_cat(&z, Parity::Even).unwrap();
    let tr = zeno_trajectory(&z, &pure(&plus.ket), &solver::log_time_grid(0.1, 1e4, 20), EvolveMethod::Auto);
    assert_eq!(tr.method, EvolveMethod::Exact);
    let last = tr.records.last().unwrap();
    assert!((last.c_pp - 0.5).abs() < 0.02 && (last.c_mm - 0.5).abs() < 0.02);
    for r in &tr.records {
        assert!((r.trace - 1.0).abs() < 1e-6);
        assert!((0.0..=1.0 + 1e-8).contains(&r.c_pp) && (0.0..=1.0 + 1e-8).contains(&r.c_mm));
    }
}

#[test]
fn twophoton_zeno_fills_the_even_cat_without_leakage() {
    let q = TwoPhotonArrayParams {
        n: 3,
        eta: 1.0,
        g: 1.0,
        phi: 2.0 * PI,
        gamma: 100.0,
        kappa: 0.0,
    };
    let z = model::effective_zeno_twophoton(&q, 18).unwrap();
    let vac = pure(&z.space.vacuum());
    let tr = zeno_trajectory(&z, &vac, &solver::log_time_grid(0.01, 100.0, 20), EvolveMethod::Auto);
    let c: Vec<f64> = tr.records.iter().map(|r| r.c_pp).collect();
    assert!(c.windows(2).all(|w| w[1] >= w[0] - 1e-10));
    assert!(c.last().unwrap() > &(1.0 - 1e-6));
    assert!(tr.records.iter().all(|r| r.c_mm < 1e-8));
}

#[test]
fn runge_kutta_agrees_with_exact_propagation() {
    let q = TwoPhotonArrayParams {
        n: 3,
        eta: 1.0,
        g: 1.0,
        phi: 2.0 * PI,
        gamma: 100.0,
        kappa: 0.05,
    };
    let z = model::effective_zeno_twophoton(&q, 14).unwrap();
    let vac = pure(&z.space.vacuum());
    let times = [0.1, 0.5, 1.0, 3.0];
    let a = zeno_trajectory(&z, &vac, &times, EvolveMethod::Exact);
    let b = zeno_trajectory(&z, &vac, &times, EvolveMethod::RungeKutta);
    for (x, y) in a.records.iter().zip(&b.records) {
        assert!((x.c_pp - y.c_pp).abs() < 1e-6, "{} {}", x.c_pp, y.c_pp);
        assert!((x.purity - y.purity).abs() < 1e-6);
    }
}

#[test]
fn kernel_state_is_stationary() {
    let m = model::kerr_array(&kerr2(0.5, 10.0, 0.0), SMALL).unwrap();
    let l = superop::model_liouvillian(&m).unwrap();
    let plus = states::model_cat(&m, Parity::Even).unwrap();
    let k = solver::steady_kernel(&l, KernelOptions::default()).unwrap();
    let refs = [pure(&plus.ket)];
    let rho0 = solver::physical_states(&k, Some(&refs)).unwrap().remove(0);
    for method in [EvolveMethod::Exact, EvolveMethod::RungeKutta] {
        let opts = EvolveOptions {
            method,
            ..EvolveOptions::default()
        };
        let tr = solver::evolve(&m, &l, rho0.matrix(), &[1.0, 10.0, 50.0], opts).unwrap();
        for r in &tr.records {
            assert!(r.from_initial < 1e-8, "{method:?} {}", r.from_initial);
        }
    }
}

#[test]
fn zeno_distance_shrinks_with_gamma() {
    let d = |g: f64| {
        let (p, _) = kerr3(0.5, g);
        solver::zeno_distance(&p, Truncations { m_phi: 14, m_d: 3 }, KernelOptions::default())
            .unwrap()
            .hs_distance
    };
    let (a, b) = (d(20.0), d(80.0));
    assert!(b < a);
}

#[test]
fn loglog_slope_of_a_power_law() {
    let x = [1.0, 2.0, 5.0, 10.0];
    let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-1.7)).collect();
    assert!((solver::fit_loglog_slope(&x, &y) + 1.7).abs() < 1e-12);
}

#[test]
fn log_grid_has_requested_density() {
    let t = solver::log_time_grid(0.1, 1e5, 200);
    assert_eq!(t.len(), 1201);
    assert!((t[0] - 0.1).abs() < 1e-15 && (t[1200] / 1e5 - 1.0).abs() < 1e-12);
}

#[test]
fn rejects_decreasing_time_grid() {
    let a = fock::annihilation(4).unwrap();
    let s = FockSpace::single(4).unwrap();
    let l = liouvillian(&SparseOp::zeros(4, 4), &[(a, 1.0)]).unwrap();
    let m = model::ModelInstance {
        kind: model::ModelKind::TwoPhotonZeno,
        space: s.clone(),
        hamiltonian: SparseOp::zeros(4, 4),
        jumps: vec![],
        zeta: c(0.5, 0.0),
        n: 1,
        m_phi: 1,
        phi_mode: 0,
        unit: 1.0,
        g: 0.0,
    };
    let r = solver::evolve(&m, &l, pure(&s.vacuum()).as_ref(), &[1.0, 0.5], EvolveOptions::default());
    assert!(matches!(r, Err(catarray::Error::InvalidParameter { .. })));
}

fn random_lindbladian(seed: u64, d: usize) -> catarray::superop::Superoperator {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut op = || Mat::from_fn(d, d, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let a = op();
    let h = (&a + linalg::adjoint(a.as_ref())) * faer::Scale(cr(0.5));
    let jumps = vec![
        (SparseOp::from_dense(op().as_ref()), 0.7),
        (SparseOp::from_dense(op().as_ref()), 1.3),
    ];
    liouvillian(&SparseOp::from_dense(h.as_ref()), &jumps).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_lindbladian_spectra_are_contractive(seed in any::<u64>(), d in 2usize..6) {
        let l = random_lindbladian(seed, d);
        let s = solver::dissipative_gap(&l, KernelOptions::default()).unwrap();
        prop_assert!(s.max_real_part <= 1e-8);
        prop_assert!(s.kernel_dim >= 1);
    }

    #[test]
    fn random_steady_states_are_physical(seed in any::<u64>(), d in 2usize..6) {
        let l = random_lindbladian(seed, d);
        let k = solver::steady_kernel(&l, KernelOptions::default()).unwrap();
        prop_assert!(k.dim() >= 1);
        for rho in solver::physical_states(&k, None).unwrap() {
            let r = superop::vectorize(rho.matrix());
            let out = l.matvec(r.as_ref());
            let res = (0..out.nrows()).map(|i| out[i].norm()).fold(0.0, f64::max);
            prop_assert!(res < 1e-8 * l.norm().max(1.0));
        }
    }
}
