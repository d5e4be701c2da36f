mod common;

use cdforge::{
    build_system, enumerate_basis, exact_aux, fit, oracle_system, resource_count, residual, snapshot, solve,
    AnsatzSpec, Aux, Error, Model, OperatorBasis, Pauli, PauliString, State,
};
use common::{kron_pauli, random_state, random_string, rng};
use nalgebra::{DMatrix, DVector};
use num_bigint::BigUint;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

const CUTOFF: f64 = 1e-10;

fn ground_and_aux(n: usize, b: f64, rate: f64) -> (State, Aux) {
    let m = Model::unit(n).unwrap();
    let snap = snapshot(&m, b).unwrap();
    let aux = exact_aux(&snap, &m.field_derivative().unwrap(), rate, None).unwrap();
    let psi = snap.gauge_fixed_state(0, None, snap.default_gap_tol()).unwrap();
    (psi, aux)
}

fn random_hermitian(dim: usize, r: &mut impl Rng) -> Aux {
    let a = DMatrix::from_fn(dim, dim, |_, _| Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)));
    Aux { matrix: &a + a.adjoint(), field_rate: 1.0 }
}

/// Basis assembled from arbitrary strings through a pattern-free route:
/// each random string becomes a one-pattern spec on its own sites.
fn random_basis(n: usize, size: usize, r: &mut impl Rng) -> OperatorBasis {
    loop {
        let mut strings: Vec<PauliString> = (0..size).map(|_| random_string(n, r)).collect();
        strings.sort();
        strings.dedup();
        if strings.len() == size {
            return OperatorBasis::from_strings(strings, n).unwrap();
        }
    }
}

#[test]
fn pure_state_route_matches_trace_form() {
    let mut r = rng(31);
    for _ in 0..20 {
        let psi = random_state(3, &mut r);
        let basis = random_basis(3, 5, &mut r);
        let aux = random_hermitian(8, &mut r);
        let rho = psi.amplitudes() * psi.amplitudes().adjoint();
        let fast = build_system(&basis, &psi, &aux).unwrap();
        let slow = oracle_system(&basis, &rho, &aux).unwrap();
        assert!((&fast.gram - &slow.gram).amax() < 1e-12);
        assert!((&fast.target - &slow.target).amax() < 1e-12);
        assert!((fast.aux_norm_sq - slow.aux_norm_sq).abs() < 1e-12);
        assert!((&fast.gram - fast.gram.transpose()).amax() < 1e-12);
    }
}

#[test]
fn gram_diagonal_is_two() {
    let mut r = rng(32);
    let psi = random_state(4, &mut r);
    let basis = enumerate_basis(&AnsatzSpec::canonical(2, 3), 4).unwrap();
    let sys = build_system(&basis, &psi, &random_hermitian(16, &mut r)).unwrap();
    for i in 0..basis.len() {
        assert!((sys.gram[(i, i)] - 2.0).abs() < 1e-13);
    }
}

#[test]
fn maximally_mixed_state_kills_the_target_on_real_strings() {
    let n = 3;
    let (_, aux) = ground_and_aux(n, 0.8, 1.0);
    let basis = enumerate_basis(&AnsatzSpec::canonical(3, 2), n).unwrap();
    let real_only: Vec<PauliString> = basis.strings().iter().filter(|p| p.count(Pauli::Y) % 2 == 0).cloned().collect();
    for p in &real_only {
        assert!((aux.matrix.clone() * kron_pauli(p, n)).trace().norm() < 1e-12);
    }
    let basis = OperatorBasis::from_strings(real_only, n).unwrap();
    let rho = cdforge::Matrix::identity(8, 8) * Complex64::new(0.125, 0.0);
    let sys = oracle_system(&basis, &rho, &aux).unwrap();
    assert!(sys.target.amax() < 1e-12);
}

#[test]
fn single_z_string_on_all_up_state() {
    let basis = OperatorBasis::from_strings(vec![PauliString::single(1, Pauli::Z).unwrap()], 2).unwrap();
    let mut rho = cdforge::Matrix::zeros(4, 4);
    rho[(0, 0)] = Complex64::new(1.0, 0.0);
    let sys = oracle_system(&basis, &rho, &Aux::zeros(4, 0.0)).unwrap();
    assert_eq!(sys.gram[(0, 0)], 2.0);
}

#[test]
fn invalid_density_matrices_are_rejected() {
    let basis = enumerate_basis(&AnsatzSpec::canonical(1, 0), 1).unwrap();
    let aux = Aux::zeros(2, 0.0);
    let mut rho = cdforge::Matrix::identity(2, 2);
    assert!(matches!(oracle_system(&basis, &rho, &aux), Err(Error::Contract(_))));
    rho[(0, 0)] = Complex64::new(1.5, 0.0);
    rho[(1, 1)] = Complex64::new(-0.5, 0.0);
    assert!(matches!(oracle_system(&basis, &rho, &aux), Err(Error::Contract(_))));
    rho = cdforge::Matrix::identity(2, 2) * Complex64::new(0.5, 0.0);
    rho[(0, 1)] = Complex64::new(0.0, 0.1);
    assert!(matches!(oracle_system(&basis, &rho, &aux), Err(Error::Contract(_))));
}

#[test]
fn complete_basis_reproduces_the_aux_image() {
    let n = 3;
    let basis = enumerate_basis(&AnsatzSpec::canonical(3, 2), n).unwrap();
    for b in [0.4, 1.0, 2.3] {
        let (psi, aux) = ground_and_aux(n, b, 1.7);
        let sol = solve(&build_system(&basis, &psi, &aux).unwrap(), CUTOFF).unwrap();
        assert!(sol.residual < 1e-10 * sol.aux_norm_sq, "B={b}");
        let direct = residual(&basis, &sol.amplitudes, &psi, &aux).unwrap();
        assert!(direct < 1e-10 * sol.aux_norm_sq);
    }
}

/// Orthonormal basis of the column space by modified Gram-Schmidt with
/// reorthogonalization; columns whose remainder falls below `tol` are dropped.
fn column_space(x: &DMatrix<f64>, tol: f64) -> Vec<DVector<f64>> {
    let mut q: Vec<DVector<f64>> = Vec::new();
    let scale = x.column_iter().fold(0.0f64, |m, c| m.max(c.norm()));
    for c in x.column_iter() {
        let mut v = c.into_owned();
        for _ in 0..2 {
            for u in &q {
                let proj = u.dot(&v);
                v -= u * proj;
            }
        }
        let norm = v.norm();
        if norm > tol * scale {
            q.push(v / norm);
        }
    }
    q
}

#[test]
fn two_body_fit_matches_dense_least_squares() {
    let n = 4;
    let (psi, aux) = ground_and_aux(n, 1.2, 1.0);
    let basis = enumerate_basis(&AnsatzSpec::two_body_yz(3), n).unwrap();
    let sol = solve(&build_system(&basis, &psi, &aux).unwrap(), CUTOFF).unwrap();

    let dim = psi.dim();
    let mut x = DMatrix::zeros(2 * dim, basis.len());
    for (k, p) in basis.strings().iter().enumerate() {
        let col = kron_pauli(p, n) * psi.amplitudes();
        for i in 0..dim {
            x[(i, k)] = col[i].re;
            x[(i + dim, k)] = col[i].im;
        }
    }
    let target = &aux.matrix * psi.amplitudes();
    let y = DVector::from_fn(2 * dim, |i, _| if i < dim { target[i].re } else { target[i - dim].im });
    let q = column_space(&x, 1e-9);
    let mut rest = y.clone();
    for u in &q {
        rest -= u * u.dot(&y);
    }
    let oracle = rest.norm_squared();
    assert!((sol.residual - oracle).abs() < 1e-9, "{} vs {oracle}", sol.residual);
    assert_eq!(sol.rank, q.len());

    // full-rank restriction: QR on the independent columns reproduces the same cost
    let keep: Vec<usize> = {
        let mut kept = Vec::new();
        let mut qs: Vec<DVector<f64>> = Vec::new();
        for (k, c) in x.column_iter().enumerate() {
            let mut v = c.into_owned();
            for u in &qs {
                let proj = u.dot(&v);
                v -= u * proj;
            }
            if v.norm() > 1e-9 {
                qs.push(v.normalize());
                kept.push(k);
            }
        }
        kept
    };
    let xs = x.select_columns(&keep);
    let qr = xs.clone().qr();
    let rhs = qr.q().transpose() * &y;
    let h = qr.r().solve_upper_triangular(&rhs).unwrap();
    let qr_cost = (&xs * h - &y).norm_squared();
    assert!((sol.residual - qr_cost).abs() < 1e-9);
}

#[test]
fn residual_agrees_with_normal_system_expansion() {
    let mut r = rng(33);
    for (n, spec) in [(4, AnsatzSpec::two_body_yz(3)), (3, AnsatzSpec::canonical(2, 2)), (5, AnsatzSpec::two_body_yz(2))] {
        let (psi, aux) = ground_and_aux(n, r.gen_range(0.3..2.5), 1.0);
        let basis = enumerate_basis(&spec, n).unwrap();
        let sys = build_system(&basis, &psi, &aux).unwrap();
        for trial in 0..3 {
            let h = if trial == 0 {
                solve(&sys, CUTOFF).unwrap().amplitudes
            } else {
                DVector::from_fn(basis.len(), |_, _| r.gen_range(-1.0..1.0))
            };
            let direct = residual(&basis, &h, &psi, &aux).unwrap();
            let expanded = sys.aux_norm_sq - h.dot(&sys.target) + 0.5 * h.dot(&(&sys.gram * &h));
            assert!((direct - expanded).abs() < 1e-10, "{direct} vs {expanded}");
        }
        let zero = residual(&basis, &DVector::zeros(basis.len()), &psi, &aux).unwrap();
        assert!((zero - sys.aux_norm_sq).abs() < 1e-12);
    }
}

#[test]
fn zero_target_gives_zero_amplitudes() {
    let (psi, aux) = ground_and_aux(3, 1.0, 0.0);
    let basis = enumerate_basis(&AnsatzSpec::two_body_yz(2), 3).unwrap();
    let sol = solve(&build_system(&basis, &psi, &aux).unwrap(), CUTOFF).unwrap();
    assert!(sol.amplitudes.iter().all(|h| *h == 0.0));
    assert_eq!(sol.residual, 0.0);
}

#[test]
fn solution_is_stationary() {
    let (psi, aux) = ground_and_aux(5, 0.9, 1.0);
    for spec in [AnsatzSpec::two_body_yz(4), AnsatzSpec::canonical(3, 2)] {
        let basis = enumerate_basis(&spec, 5).unwrap();
        let sys = build_system(&basis, &psi, &aux).unwrap();
        let sol = solve(&sys, CUTOFF).unwrap();
        let grad = &sys.gram * &sol.amplitudes - &sys.target;
        assert!(grad.amax() < 1e-9 * sys.target.amax().max(1.0));
        assert!(sol.residual >= 0.0 && sol.residual <= sol.aux_norm_sq);
        assert!(sol.amplitudes.iter().all(|h| h.is_finite()));
    }
}

#[test]
fn fast_fit_matches_normal_equations() {
    for (n, spec) in [(4, AnsatzSpec::two_body_yz(3)), (4, AnsatzSpec::canonical(3, 3)), (3, AnsatzSpec::canonical(3, 2))] {
        let (psi, aux) = ground_and_aux(n, 0.7, 1.3);
        let basis = enumerate_basis(&spec, n).unwrap();
        let sol = solve(&build_system(&basis, &psi, &aux).unwrap(), CUTOFF).unwrap();
        let image = &aux.matrix * psi.amplitudes();
        let f = fit(&basis, psi.as_slice(), &image, CUTOFF).unwrap();
        assert!((f.residual - sol.residual).abs() < 1e-10);
        assert!((&f.amplitudes - &sol.amplitudes).amax() < 1e-8);
        assert_eq!(f.rank, sol.rank);
    }
}

#[test]
fn larger_basis_never_does_worse() {
    let n = 5;
    let chain = [
        AnsatzSpec::two_body_yz(1),
        AnsatzSpec::two_body_yz(4),
        AnsatzSpec::canonical(2, 4),
        AnsatzSpec::canonical(3, 2),
        AnsatzSpec::canonical(3, 4),
    ];
    for b in [0.3, 1.0, 1.8] {
        let (psi, aux) = ground_and_aux(n, b, 1.0);
        let mut prev: Option<(OperatorBasis, f64)> = None;
        for spec in &chain {
            let basis = enumerate_basis(spec, n).unwrap();
            let res = solve(&build_system(&basis, &psi, &aux).unwrap(), CUTOFF).unwrap().residual;
            if let Some((small, r0)) = &prev {
                if small.strings().iter().all(|p| basis.position(p).is_some()) {
                    assert!(res <= r0 + 1e-12, "B={b}: {res} > {r0}");
                }
            }
            prev = Some((basis, res));
        }
    }
}

#[test]
fn strings_with_even_y_count_get_no_amplitude() {
    let n = 4;
    let (psi, aux) = ground_and_aux(n, 1.2, 1.0);
    for spec in [AnsatzSpec::canonical(2, 3), AnsatzSpec::canonical(3, 3), AnsatzSpec::canonical(4, 3)] {
        let basis = enumerate_basis(&spec, n).unwrap();
        let sol = solve(&build_system(&basis, &psi, &aux).unwrap(), CUTOFF).unwrap();
        for (p, h) in basis.strings().iter().zip(sol.amplitudes.iter()) {
            if p.count(Pauli::Y) % 2 == 0 {
                assert!(h.abs() < 1e-8, "{p}: {h}");
            }
        }
    }
}

#[test]
fn gram_is_positive_semidefinite() {
    let mut r = rng(34);
    for _ in 0..10 {
        let psi = random_state(4, &mut r);
        let basis = enumerate_basis(&AnsatzSpec::canonical(3, 3), 4).unwrap();
        let sys = build_system(&basis, &psi, &random_hermitian(16, &mut r)).unwrap();
        let eig = sys.gram.symmetric_eigenvalues();
        let max = eig.max();
        assert!(eig.min() >= -1e-10 * max);
    }
}

#[test]
fn amplitudes_scale_with_the_rate() {
    let n = 4;
    let basis = enumerate_basis(&AnsatzSpec::two_body_yz(3), n).unwrap();
    let (psi, base) = ground_and_aux(n, 0.9, 1.0);
    let one = solve(&build_system(&basis, &psi, &base).unwrap(), CUTOFF).unwrap();
    for c in [-3.0, 0.5, 10.0] {
        let (_, aux) = ground_and_aux(n, 0.9, c);
        let sol = solve(&build_system(&basis, &psi, &aux).unwrap(), CUTOFF).unwrap();
        assert!((&sol.amplitudes - &one.amplitudes * c).amax() < 1e-10 * c.abs());
        assert!((sol.residual - one.residual * c * c).abs() < 1e-10 * c * c);
    }
}

#[test]
fn enumeration_and_assembly_are_deterministic() {
    let spec = AnsatzSpec::canonical(3, 3);
    let a = enumerate_basis(&spec, 5).unwrap();
    let b = enumerate_basis(&spec, 5).unwrap();
    assert_eq!(a, b);
    let (psi, aux) = ground_and_aux(5, 1.1, 1.0);
    let s1 = build_system(&a, &psi, &aux).unwrap();
    let s2 = build_system(&b, &psi, &aux).unwrap();
    assert_eq!(s1.gram, s2.gram);
    assert_eq!(s1.target, s2.target);
    assert_eq!(solve(&s1, CUTOFF).unwrap(), solve(&s2, CUTOFF).unwrap());
}

#[test]
fn every_basis_entry_respects_the_range() {
    for n in 2..=6 {
        for k in 1..=3.min(n) {
            for range in (k - 1).max(1)..n {
                for spec in [AnsatzSpec::canonical(k, range), AnsatzSpec::patterns(vec![vec![Pauli::Y; k]], range)] {
                    if spec.validate(n).is_err() {
                        continue;
                    }
                    let b = enumerate_basis(&spec, n).unwrap();
                    assert!(b.strings().iter().all(|p| p.span() <= range && p.support_size() <= k));
                    assert!(b.strings().windows(2).all(|w| w[0] < w[1]));
                }
            }
        }
    }
}

#[test]
fn resource_count_matches_big_integers() {
    for n in 1u64..=10 {
        for k in 1..=n {
            let falling: BigUint = ((n - k + 1)..=n).map(BigUint::from).product();
            let want = BigUint::from(4u32).pow(k as u32) * falling / BigUint::from(2u32);
            assert_eq!(BigUint::from(resource_count(n, k).unwrap()), want, "N={n} K={k}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn residual_is_bounded_by_the_unfitted_cost(b in 0.2f64..3.0, rate in -4.0f64..4.0, range in 1usize..4) {
        let (psi, aux) = ground_and_aux(4, b, rate);
        let basis = enumerate_basis(&AnsatzSpec::two_body_yz(range), 4).unwrap();
        let sol = solve(&build_system(&basis, &psi, &aux).unwrap(), CUTOFF).unwrap();
        prop_assert!(sol.residual >= 0.0);
        prop_assert!(sol.residual <= sol.aux_norm_sq * (1.0 + 1e-12));
    }
}
