mod common;

use common::*;
use nalgebra::DVector;
use qauth_core::family::{
    generate_block_diagonal_family, generate_generic_family, generate_orthogonal_family,
};
use qauth_core::linalg::{haar_unitary, identity, unitarity_defect};
use qauth_core::protocol::*;
use qauth_core::unitary_attack::*;
use qauth_core::{ComplexMatrix, Error, Tolerances, C64};

fn swap_family(layout: SpaceLayout) -> CodingSet {
    let c = layout.code_dim();
    let mut u = ComplexMatrix::zeros(2 * c, 2 * c);
    for i in 0..c {
        u[(i, c + i)] = C64::from(1.0);
        u[(c + i, i)] = C64::from(1.0);
    }
    CodingSet::new(layout, vec![identity(2 * c), u]).unwrap()
}

fn layout(m: usize, t: usize, v: usize) -> SpaceLayout {
    SpaceLayout::new(m, t, v).unwrap()
}

#[test]
fn gh_block_diagonal_and_swap() {
    let l = layout(2, 2, 1);
    let cs = generate_block_diagonal_family(&l, 2, 3).unwrap();
    let gh = gh_operators(&cs, 1).unwrap();
    assert!(frob(&(&gh.g_ii - identity(2))) < 1e-12);
    assert!(frob(&gh.g_oi) < 1e-15 && frob(&gh.h) < 1e-15);

    let gh = gh_operators(&swap_family(l), 1).unwrap();
    assert_eq!(frob(&gh.g_ii), 0.0);
    assert_eq!(frob(&gh.h), 0.0);
    assert_eq!(gh.g_oi, identity(2));

    assert!(matches!(
        gh_operators(&swap_family(l), 0),
        Err(Error::Key { .. })
    ));
}

#[test]
fn gh_unitarity_relation() {
    // U_ii U_ii^dagger + U_io U_io^dagger = I and U_ii U_oi^dagger + U_io U_oo^dagger = 0
    // give G_ii (I - G_ii) = H H^dagger
    let l = layout(2, 2, 1);
    for seed in 0..20 {
        let cs = generate_generic_family(&l, 2, seed).unwrap();
        let gh = gh_operators(&cs, 1).unwrap();
        let u = cs.unitary(1).unwrap();
        assert!(frob(&(&gh.g_ii - g_ii_naive(u, 2))) < 1e-12);
        let lhs = naive_mul(&gh.g_ii, &(identity(2) - &gh.g_ii));
        let rhs = naive_mul(&gh.h, &naive_adjoint(&gh.h));
        assert!(frob(&(lhs - rhs)) < 1e-9);
    }
}

#[test]
fn pair_sum_law_holds() {
    for (m, t, v) in [(2, 2, 1), (2, 3, 1), (3, 2, 1), (2, 4, 1)] {
        let l = layout(m, t, v);
        let c = l.code_dim();
        for seed in 0..100 {
            let cs = generate_generic_family(&l, 2, seed * 31).unwrap();
            assert!(cs.unitary(1).unwrap().nrows() == l.total_dim());
            let gh = gh_operators(&cs, 1).unwrap();
            assert!(gh.pair_sum_defect().unwrap() < 1e-9);
            // oracle: spectra of U_ii^dagger U_ii and U_oi^dagger U_oi
            let u = cs.unitary(1).unwrap();
            let uii = u.view((0, 0), (c, c)).into_owned();
            let uoi = u.view((c, 0), (l.complement_dim(), c)).into_owned();
            let a = jacobi_eigenvalues(&naive_mul(&naive_adjoint(&uii), &uii));
            let mut b = jacobi_eigenvalues(&naive_mul(&naive_adjoint(&uoi), &uoi));
            b.reverse();
            assert!(a.iter().zip(&b).all(|(x, y)| (x + y - 1.0).abs() < 1e-9));
            for lam in a {
                assert!((-1e-10..=1.0 + 1e-10).contains(&lam));
            }
        }
    }
}

#[test]
fn q_operator_examples() {
    let l = layout(2, 2, 1);
    let cs = generate_generic_family(&l, 3, 8).unwrap();
    for k in 0..3 {
        assert!(frob(&(q_operator(&cs, &identity(4), k).unwrap() - identity(4))) < 1e-12);
    }
    let f = haar_unitary(4, 44);
    assert_eq!(q_operator(&cs, &f, 0).unwrap(), f);
    assert!(unitarity_defect(&q_operator(&cs, &f, 2).unwrap()) < 1e-12);

    let mut bad = identity(4);
    bad[(0, 0)] = C64::from(2.0);
    assert!(matches!(q_operator(&cs, &bad, 1), Err(Error::Domain(_))));
}

#[test]
fn q_oi_vanishing_forces_q_io_vanishing() {
    let tol = Tolerances::default();
    let l = layout(2, 3, 1);
    for seed in 0..10 {
        let cs = generate_generic_family(&l, 2, seed).unwrap();
        let report = deterministic_attack_commutant(&cs, &tol).unwrap();
        let f = report.extracted_attack.unwrap();
        for k in 0..2 {
            let b = io_decompose(&l, &q_operator(&cs, &f, k).unwrap()).unwrap();
            assert!(frob(&b.oi) < 1e-12);
            assert!(frob(&b.io) < 1e-9);
        }
    }
}

#[test]
fn commutant_with_single_rule_is_unconstrained() {
    let tol = Tolerances::default();
    for (m, t, v) in [(2, 2, 1), (2, 3, 1), (3, 2, 1)] {
        let l = layout(m, t, v);
        let cs = CodingSet::new(l, vec![identity(l.total_dim())]).unwrap();
        let report = deterministic_attack_commutant(&cs, &tol).unwrap();
        let (c, d) = (l.code_dim(), l.complement_dim());
        assert_eq!(report.dimension, c * c + d * d);
        assert!(!report.is_secure);
    }
}

#[test]
fn commutant_matches_principal_angle_oracle() {
    let tol = Tolerances::default();
    for (m, t, v) in [(2, 2, 1), (2, 3, 1), (3, 2, 1), (2, 4, 1)] {
        let l = layout(m, t, v);
        for seed in 0..10 {
            let cs = generate_generic_family(&l, 2, 500 + seed).unwrap();
            let report = deterministic_attack_commutant(&cs, &tol).unwrap();
            let expected = two_projector_commutant_dim(cs.unitary(1).unwrap(), l.code_dim());
            assert_eq!(report.dimension, expected, "layout {l}, seed {seed}");
        }
    }
    // structured cases: block-diagonal U(1) leaves P_i fixed, a C=D swap
    // exchanges it with P_o
    let l = layout(2, 2, 1);
    let cs = generate_block_diagonal_family(&l, 2, 1).unwrap();
    let report = deterministic_attack_commutant(&cs, &tol).unwrap();
    assert_eq!(report.dimension, 8);
    assert_eq!(
        report.dimension,
        two_projector_commutant_dim(cs.unitary(1).unwrap(), 2)
    );
    let sw = swap_family(l);
    let report = deterministic_attack_commutant(&sw, &tol).unwrap();
    assert_eq!(
        report.dimension,
        two_projector_commutant_dim(sw.unitary(1).unwrap(), 2)
    );
}

#[test]
fn commutant_basis_invariants_and_closure() {
    let tol = Tolerances::default();
    let l = layout(2, 3, 1);
    let cs = generate_generic_family(&l, 2, 12).unwrap();
    let report = deterministic_attack_commutant(&cs, &tol).unwrap();
    assert!(report.dimension >= 2);
    assert!(max_commutator_residual(&cs, &report.basis).unwrap() < 1e-8);
    let p = l.code_projector();
    for b in &report.basis {
        assert!(frob(&(naive_mul(b, &p) - naive_mul(&p, b))) < 1e-8);
    }

    // vectorised basis, orthonormalised, then project every product back onto it
    let e2 = l.total_dim().pow(2);
    let mut span = ComplexMatrix::zeros(e2, report.basis.len());
    for (j, b) in report.basis.iter().enumerate() {
        span.column_mut(j).copy_from_slice(b.as_slice());
    }
    let q = span.qr().q();
    for b1 in &report.basis {
        for b2 in &report.basis {
            let prod = naive_mul(b1, b2);
            let x = DVector::from_column_slice(prod.as_slice());
            let residual = &x - &q * (q.adjoint() * &x);
            assert!(residual.norm() < 1e-8);
        }
    }
}

#[test]
fn extraction_examples() {
    let tol = Tolerances::default();
    let l = layout(2, 2, 1);
    for seed in 0..10 {
        let cs = generate_generic_family(&l, 2, seed).unwrap();
        let report = deterministic_attack_commutant(&cs, &tol).unwrap();
        let f = report.extracted_attack.clone().unwrap();
        assert!(unitarity_defect(&f) < 1e-9);
        assert!(max_commutator_residual(&cs, std::slice::from_ref(&f)).unwrap() < 1e-8);
        let e = l.total_dim() as f64;
        let tr: C64 = (0..4).map(|i| f[(i, i)]).sum();
        assert!(frob(&(&f - identity(4) * (tr / e))) > 1e-6);
        assert_eq!(report.harmful, Some(true));
        for r in 0..10 {
            let rho = random_code_state(&l, seed * 100 + r);
            assert!((p_unitary(&cs, &f, &rho).unwrap() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn secure_family_yields_no_attack() {
    let tol = Tolerances::default();
    let l = layout(2, 2, 1);
    let cs = generate_generic_family(&l, 3, 42).unwrap();
    let report = deterministic_attack_commutant(&cs, &tol).unwrap();
    assert_eq!(report.dimension, 1);
    assert!(report.is_secure);
    assert!(report.extracted_attack.is_none());
    assert!(extract_nonscalar_unitary(&report, &cs).unwrap().is_none());
}

#[test]
fn coincident_family_has_harmful_attack() {
    let tol = Tolerances::default();
    let l = layout(2, 3, 1);
    let cs = generate_block_diagonal_family(&l, 4, 9).unwrap();
    let report = deterministic_attack_commutant(&cs, &tol).unwrap();
    assert!(report.dimension >= 2);
    assert_eq!(report.harmful, Some(true));
    let f = report.extracted_attack.unwrap();
    let p = l.code_projector();
    assert!(frob(&(naive_mul(&f, &p) - naive_mul(&p, &f))) < 1e-8);
    let rho = random_code_state(&l, 3);
    assert!((p_unitary(&cs, &f, &rho).unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn p_unitary_examples() {
    let l = layout(2, 2, 1);
    let cs = generate_generic_family(&l, 3, 1).unwrap();
    let rho = random_code_state(&l, 5);
    assert_eq!(p_unitary(&cs, &identity(4), &rho).unwrap(), 1.0);
    let phase = identity(4) * C64::from_polar(1.0, 0.7);
    assert!((p_unitary(&cs, &phase, &rho).unwrap() - 1.0).abs() < 1e-12);

    let outside = DensityOperator::basis_state(4, 3).unwrap();
    assert!(matches!(
        p_unitary(&cs, &identity(4), &outside),
        Err(Error::Domain(_))
    ));

    // a generic unitary is caught with positive probability
    let f = haar_unitary(4, 90);
    assert!(p_unitary(&cs, &f, &rho).unwrap() < 1.0 - 1e-6);
}

#[test]
fn block_attack_examples() {
    let tol = Tolerances::default();
    let l = layout(2, 2, 1);
    let cs = generate_orthogonal_family(&l, 2).unwrap();
    let f = block_preserving_attack(&cs, &[identity(2), identity(2)], &tol).unwrap();
    assert_eq!(f, identity(4));

    let mut x = ComplexMatrix::zeros(2, 2);
    x[(0, 1)] = C64::from(1.0);
    x[(1, 0)] = C64::from(1.0);
    let f = block_preserving_attack(&cs, &[x, identity(2)], &tol).unwrap();
    assert!(unitarity_defect(&f) < 1e-12);
    let tag = DensityOperator::basis_state(2, 0).unwrap();
    let rho_m = DensityOperator::basis_state(2, 0).unwrap();
    let rho = tag_message(&l, &rho_m, &tag).unwrap();
    assert!((p_unitary(&cs, &f, &rho).unwrap() - 1.0).abs() < 1e-9);
    let sent = encode(&cs, &rho, 0).unwrap();
    let tampered = DensityOperator::new(&f * sent.matrix() * f.adjoint()).unwrap();
    let v = verify(&l, &decode(&cs, &tampered, 0).unwrap()).unwrap();
    assert!((v.accept_prob - 1.0).abs() < 1e-12);
    assert!(v.recovered_plaintext.unwrap().overlap(&rho_m) < 1.0 - 1e-6);

    for (m, t, v, keys) in [(2, 4, 1, 4), (3, 3, 1, 3), (2, 4, 1, 2)] {
        let l = layout(m, t, v);
        let cs = generate_orthogonal_family(&l, keys).unwrap();
        let c = l.code_dim();
        let blocks: Vec<_> = (0..keys).map(|k| haar_unitary(c, 70 + k as u64)).collect();
        let f = block_preserving_attack(&cs, &blocks, &tol).unwrap();
        for seed in 0..5 {
            let rho = random_code_state(&l, seed);
            assert!((p_unitary(&cs, &f, &rho).unwrap() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn block_attack_rejects_overlapping_code_spaces() {
    let tol = Tolerances::default();
    let l = layout(2, 2, 1);
    let cs = generate_generic_family(&l, 2, 3).unwrap();
    let r = block_preserving_attack(&cs, &[identity(2), identity(2)], &tol);
    assert!(matches!(r, Err(Error::Domain(_))));
}

#[test]
fn k2_square_nonsingular() {
    let tol = Tolerances::default();
    let l = layout(2, 2, 1);
    for seed in 0..10 {
        let cs = generate_generic_family(&l, 2, seed).unwrap();
        let a = k2_structural_analysis(&cs, &tol).unwrap();
        assert_eq!(a.case, HRankCase::SquareNonsingular);
        assert_eq!(a.h_rank, 2);
        let h = gh_operators(&cs, 1).unwrap().h;
        assert!(frob(&(naive_mul(&h, &a.j) - identity(2))) < 1e-8);
        assert!(a.certificate_residual < 1e-8);
    }
}

#[test]
fn k2_swap_is_deficient() {
    let a = k2_structural_analysis(&swap_family(layout(2, 2, 1)), &Tolerances::default()).unwrap();
    assert_eq!(a.h_rank, 0);
    assert_eq!(a.case, HRankCase::Deficient);
}

#[test]
fn k2_rectangular_cases() {
    let tol = Tolerances::default();
    let l = layout(2, 3, 1);
    let cs = generate_generic_family(&l, 2, 6).unwrap();
    let a = k2_structural_analysis(&cs, &tol).unwrap();
    assert_eq!(a.case, HRankCase::LeftInvertible);
    let h = gh_operators(&cs, 1).unwrap().h;
    assert!(frob(&(naive_mul(&h, &a.j) - identity(2))) < 1e-8);

    let l = layout(2, 3, 2);
    let cs = generate_generic_family(&l, 2, 6).unwrap();
    let a = k2_structural_analysis(&cs, &tol).unwrap();
    assert_eq!(a.case, HRankCase::RightInvertible);
    let h = gh_operators(&cs, 1).unwrap().h;
    assert!(frob(&(naive_mul(&a.j, &h) - identity(2))) < 1e-8);

    let cs3 = generate_generic_family(&l, 3, 6).unwrap();
    assert!(matches!(
        k2_structural_analysis(&cs3, &tol),
        Err(Error::Domain(_))
    ));
}

#[test]
fn k2_deficient_rank_certificate() {
    // U(1) fixes one code vector and one complement vector, so H has rank 1
    let l = layout(2, 2, 1);
    let mut u = identity(4);
    let inner = haar_unitary(2, 5);
    for (a, &i) in [1usize, 3].iter().enumerate() {
        for (b, &j) in [1usize, 3].iter().enumerate() {
            u[(i, j)] = inner[(a, b)];
        }
    }
    let cs = CodingSet::new(l, vec![identity(4), u]).unwrap();
    let a = k2_structural_analysis(&cs, &Tolerances::default()).unwrap();
    assert_eq!(a.h_rank, 1);
    assert_eq!(a.case, HRankCase::Deficient);
    assert!(a.certificate_residual < 1e-8);
}

#[test]
fn vanishing_q_oi_means_certain_acceptance() {
    let tol = Tolerances::default();
    for (m, t, v) in [(2, 2, 1), (3, 2, 1)] {
        let l = layout(m, t, v);
        let cs = generate_generic_family(&l, 2, 21).unwrap();
        let f = deterministic_attack_commutant(&cs, &tol)
            .unwrap()
            .extracted_attack
            .unwrap();
        let max_oi = (0..cs.len())
            .map(|k| {
                frob(
                    &io_decompose(&l, &q_operator(&cs, &f, k).unwrap())
                        .unwrap()
                        .oi,
                )
            })
            .fold(0.0, f64::max);
        assert!(max_oi < 1e-12);
        for seed in 0..10 {
            let rho = random_code_state(&l, seed);
            assert!((p_unitary(&cs, &f, &rho).unwrap() - 1.0).abs() < 1e-9);
        }
    }
}
