//! Acceptance suite: one test per criterion, each printing a PASS line
//! (run with `cargo test --test acceptance -- --nocapture` to see them
//! as they go). Every tolerance and threshold is pinned here, in code.

use std::sync::Arc;
use std::time::Instant;

use theta_pq::crossratio::{cr_derivative_fd, cr_k, cr_project, CrossRatioInput};
use theta_pq::flags::{standard_flags, IsotropicSubspace, PartialFlag};
use theta_pq::matrix::Matrix;
use theta_pq::positivity::{elementary, ConeVariant};
use theta_pq::pqspace::{build_form, ConeClass, FormData};
use theta_pq::reps::{collar2q_check, GroupElement};
use theta_pq::sampling::{
    random_closure_vj, random_interior_vj, random_isometry, random_positive, trial_rng,
};
use theta_pq::scalar::{s, sf, Scalar};
use theta_pq::suites::{run_suite, SuiteConfig};

fn form(p: usize, q: usize) -> Arc<FormData> {
    Arc::new(build_form(p, q).unwrap())
}

fn all_signatures() -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for p in 2..=5 {
        for q in p + 1..=6 {
            v.push((p, q));
        }
    }
    v
}

fn pass(line: &str) {
    println!("acceptance: PASS — {line}");
}

/// 1. Every elementary matrix over 500 random interior parameters per
/// signature is an exact Q-isometry; runtime < 5 s.
#[test]
fn criterion_01_isometry_suite() {
    let started = Instant::now();
    for (p, q) in all_signatures() {
        let f = form(p, q);
        let mut rng = trial_rng(101, (p * 10 + q) as u64);
        for trial in 0..500 {
            let k = 1 + trial % (p - 1);
            let param: Vec<Scalar> = if k <= p - 2 {
                vec![random_positive(&mut rng, 5, 4)]
            } else {
                random_interior_vj(&f, &mut rng)
            };
            let e = elementary(&f, k, &param).expect("interior elementary");
            assert!(f.is_isometry(&e).unwrap(), "E_{k} failed at ({p},{q})");
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}, budget 5 s");
    pass(&format!(
        "criterion 1: 500 interior elementary isometries per signature up to (5,6), exact, in {elapsed:?}"
    ));
}

/// 2. b_J(v,w) > 0 on 10³ (interior, closure) pairs, exact; < 1 s.
#[test]
fn criterion_02_cone_lemma() {
    let started = Instant::now();
    let mut checked = 0usize;
    for (i, (p, q)) in [(2, 3), (2, 6), (3, 5), (4, 6)].iter().enumerate() {
        let f = form(*p, *q);
        let mut rng = trial_rng(202, i as u64);
        let mut done = 0usize;
        while done < 250 {
            let v = random_interior_vj(&f, &mut rng);
            let w = random_closure_vj(&f, &mut rng);
            if w.iter().all(Scalar::is_zero) {
                continue;
            }
            assert!(
                f.bj(&v, &w).unwrap().is_positive(),
                "b_J not positive at ({p},{q}): {v:?} {w:?}"
            );
            done += 1;
        }
        checked += done;
    }
    let elapsed = started.elapsed();
    assert_eq!(checked, 1000);
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}, budget 1 s");
    pass(&format!(
        "criterion 2: b_J(v,w) > 0 on {checked} sampled cone pairs, exact, in {elapsed:?}"
    ));
}

/// 3. Semigroup closure and the sum corollary: 200 trials each for
/// p ∈ {2,3,4}; zero FAIL, zero UNDECIDED for p ∈ {2,3}, p = 4 rate
/// reported; < 30 s.
#[test]
fn criterion_03_semigroup_closure() {
    let started = Instant::now();
    let mut p4_rate = 0.0;
    for (p, q) in [(2, 3), (3, 4), (4, 5)] {
        let report = run_suite("semigroup", &SuiteConfig::new(p, q, 200, 303)).unwrap();
        assert_eq!(report.fail, 0, "semigroup FAIL at ({p},{q})");
        if p <= 3 {
            assert_eq!(report.undecided, 0, "undecided at ({p},{q})");
        } else {
            p4_rate = report.undecided as f64 / report.trials.len() as f64;
            assert!(
                p4_rate <= 0.05,
                "p = 4 undecided rate {p4_rate} above 5 %"
            );
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}, budget 30 s");
    pass(&format!(
        "criterion 3: semigroup closure + sum corollary, 200 trials each for p=2,3,4 with exact re-multiplication; p=4 undecided rate {p4_rate:.3}; in {elapsed:?}"
    ));
}

/// 4. Braid relation: the reversed-parity factorisation succeeds on 200
/// trials for p ∈ {2,3,4}; zero FAIL.
#[test]
fn criterion_04_braid() {
    for (p, q) in [(2, 3), (3, 4), (4, 5)] {
        let report = run_suite("braid", &SuiteConfig::new(p, q, 200, 404)).unwrap();
        assert_eq!(report.fail, 0, "braid FAIL at ({p},{q})");
        if p <= 3 {
            assert_eq!(report.undecided, 0);
        } else {
            assert!(report.undecided as f64 <= 0.05 * report.trials.len() as f64);
        }
    }
    pass("criterion 4: ba-factorisation of 200 random positive elements for p=2,3,4, exact");
}

/// 5. Cross-ratio identities (1)–(5): exact equality on 200 random
/// transverse configurations per identity including invariance.
#[test]
fn criterion_05_cross_ratio_identities() {
    let mut per_statement: std::collections::BTreeMap<String, usize> = Default::default();
    for (p, q, n) in [(2, 4, 100), (3, 4, 100)] {
        let report = run_suite("identities", &SuiteConfig::new(p, q, n, 505)).unwrap();
        assert_eq!(report.fail, 0, "identities FAIL at ({p},{q})");
        for t in &report.trials {
            if t.verdict == theta_pq::report::TrialVerdict::Pass {
                *per_statement.entry(t.statement.clone()).or_default() += 1;
            }
        }
    }
    for key in [
        "cr.unit",
        "cr.inverse.vswap",
        "cr.inverse.wswap",
        "cr.symmetry",
        "cr.cocycle3",
        "cr.cocycle4",
        "cr.invariance",
    ] {
        assert!(
            per_statement.get(key).copied().unwrap_or(0) >= 190,
            "only {} instances of {key}",
            per_statement.get(key).copied().unwrap_or(0)
        );
    }
    pass("criterion 5: cross-ratio identities (unit, inversion, symmetry, cocycles, invariance) exact on ~200 configurations each");
}

/// 6. Anchor instance: cr₁(e_{q+2}, x, y, e₁) = q_J(s_y)/q_J(s_x) = 9.
#[test]
fn criterion_06_anchor_instance() {
    let f = form(2, 3);
    let line = |sv: &[i64]| {
        let sv: Vec<Scalar> = sv.iter().map(|&x| s(x)).collect();
        let qj = f.qj(&sv).unwrap();
        let mut v = Matrix::zeros(5, 1);
        v[(0, 0)] = qj;
        for (i, c) in sv.iter().enumerate() {
            v[(1 + i, 0)] = c.clone();
        }
        v[(4, 0)] = s(1);
        IsotropicSubspace::line(f.clone(), &v).unwrap()
    };
    let input = CrossRatioInput::new(
        IsotropicSubspace::coordinate_line(f.clone(), 5).unwrap(),
        line(&[1, 0, 1]),
        line(&[3, 0, 3]),
        IsotropicSubspace::coordinate_line(f.clone(), 1).unwrap(),
    )
    .unwrap();
    assert_eq!(cr_k(&input).unwrap(), s(9));
    pass("criterion 6: anchor cross ratio equals exactly 9");
}

/// 7. Weight period: cr₁(γ₋, x, γx, γ₊) = λ₁² = 16 for the exact
/// diagonal test element.
#[test]
fn criterion_07_weight_period() {
    let f = form(2, 3);
    let g = Matrix::from_rows(vec![
        vec![s(4), s(0), s(0), s(0), s(0)],
        vec![s(0), s(2), s(0), s(0), s(0)],
        vec![s(0), s(0), s(1), s(0), s(0)],
        vec![s(0), s(0), s(0), sf(1, 2), s(0)],
        vec![s(0), s(0), s(0), s(0), sf(1, 4)],
    ]);
    assert!(f.is_isometry(&g).unwrap());
    let x = {
        let mut v = Matrix::zeros(5, 1);
        v[(0, 0)] = s(1);
        v[(1, 0)] = s(1);
        v[(3, 0)] = s(1);
        v[(4, 0)] = s(1);
        IsotropicSubspace::line(f.clone(), &v).unwrap()
    };
    let input = CrossRatioInput::new(
        IsotropicSubspace::coordinate_line(f.clone(), 5).unwrap(),
        x.clone(),
        x.transform(&g).unwrap(),
        IsotropicSubspace::coordinate_line(f.clone(), 1).unwrap(),
    )
    .unwrap();
    assert_eq!(cr_k(&input).unwrap(), s(16));
    pass("criterion 7: weight period of diag(4,2,1,1/2,1/4) equals exactly 16 = λ₁²");
}

/// 8. Projection formula: the quotient reduction equals cr_k exactly on
/// 100 configurations with dim V₁∩V₂ = k−1 in (3,4) and (4,5).
#[test]
fn criterion_08_projection_formula() {
    let mut done = 0usize;
    for (p, q, k, count, seed) in [(3usize, 4usize, 2usize, 50usize, 808u64), (4, 5, 2, 25, 809), (4, 5, 3, 25, 810)] {
        let f = form(p, q);
        let mut rng = trial_rng(seed, 0);
        let all_rows: Vec<usize> = (0..f.d()).collect();
        let z_k = Matrix::identity(f.d()).submatrix(&all_rows, &(0..k).collect::<Vec<_>>());
        let mut found = 0usize;
        while found < count {
            let param: Vec<Scalar> = if k <= p - 2 {
                vec![random_positive(&mut rng, 3, 2)]
            } else {
                random_interior_vj(&f, &mut rng)
            };
            let e_t = elementary(&f, k, &param).unwrap().transpose();
            let g = random_isometry(&f, &mut rng, 8);
            let v1 = IsotropicSubspace::new(f.clone(), &g * &z_k).unwrap();
            let v2 = IsotropicSubspace::new(f.clone(), &(&g * &e_t) * &z_k).unwrap();
            let w1 = IsotropicSubspace::new(f.clone(), &random_isometry(&f, &mut rng, 8) * &z_k)
                .unwrap();
            let w2 = IsotropicSubspace::new(f.clone(), &random_isometry(&f, &mut rng, 8) * &z_k)
                .unwrap();
            let Ok(input) = CrossRatioInput::new(v1, w1, w2, v2) else {
                continue;
            };
            let Ok(direct) = cr_k(&input) else { continue };
            match cr_project(&input) {
                Ok(reduced) => {
                    assert_eq!(reduced, direct, "projection mismatch at ({p},{q}) k={k}");
                    found += 1;
                }
                Err(_) => continue,
            }
        }
        done += found;
    }
    assert_eq!(done, 100);
    pass("criterion 8: quotient reduction equals cr_k exactly on 100 shared-subspace configurations in (3,4) and (4,5)");
}

/// 9. Positive quadruples of lines in (2,q) have cr₁ > 1, exact.
#[test]
fn criterion_09_positive_implies_cr_gt_1() {
    for (q, seed) in [(3u64, 909u64), (4, 910), (5, 911), (6, 912)] {
        let report = run_suite("poscr", &SuiteConfig::new(2, q as usize, 50, seed)).unwrap();
        assert_eq!(report.fail, 0, "poscr FAIL at (2,{q})");
        assert_eq!(report.undecided, 0);
    }
    pass("criterion 9: 200 positive quadruples in (2,q), q ≤ 6, all with cr₁ > 1 exactly");
}

/// 10. PO(2,m) collar bound on 200 sampled (h, x) plus the exact
/// fixture cr = 4 against bound 2.
#[test]
fn criterion_10_collar_2m() {
    for (q, seed) in [(3u64, 1010u64), (4, 1011), (5, 1012), (6, 1013)] {
        let report = run_suite("collar2q", &SuiteConfig::new(2, q as usize, 50, seed)).unwrap();
        assert_eq!(report.fail, 0, "collar2q FAIL at (2,{q})");
        assert_eq!(report.undecided, 0, "collar2q undecided at (2,{q})");
    }
    // Exact fixture.
    let f = form(2, 3);
    let h = Matrix::from_rows(vec![
        vec![s(2), s(0), s(0), s(0), s(0)],
        vec![s(0), s(1), s(0), s(0), s(0)],
        vec![s(0), s(0), s(1), s(0), s(0)],
        vec![s(0), s(0), s(0), s(1), s(0)],
        vec![s(0), s(0), s(0), s(0), sf(1, 2)],
    ]);
    let ge = GroupElement::new(f.clone(), h).unwrap();
    let h_plus = IsotropicSubspace::coordinate_line(f.clone(), 1).unwrap();
    let h_minus = IsotropicSubspace::coordinate_line(f.clone(), 5).unwrap();
    let mut v = Matrix::zeros(5, 1);
    v[(0, 0)] = s(1);
    v[(1, 0)] = s(1);
    v[(3, 0)] = s(1);
    v[(4, 0)] = s(1);
    let x = IsotropicSubspace::line(f.clone(), &v).unwrap();
    let report = collar2q_check(&ge, &h_plus, &h_minus, &x, &theta_pq::reps::default_eigen_tol())
        .unwrap();
    assert!(report.decided && report.pass);
    assert_eq!(report.rhs.lo, s(4));
    assert_eq!(report.lhs.hi, s(2));
    pass("criterion 10: collar bound on 200 sampled pairs and the exact fixture cr = 4 ≥ 2");
}

/// 11. Hybrid positivity on 100 attracting-flag quadruples in (3,4) and
/// (4,5): zero FAIL, undecided ≤ 5 %.
#[test]
fn criterion_11_hybrid_positivity() {
    for (p, q, trials, seed) in [(3usize, 4usize, 100usize, 1111u64), (4, 5, 100, 1112)] {
        let report = run_suite("hybrid", &SuiteConfig::new(p, q, trials, seed)).unwrap();
        assert_eq!(report.fail, 0, "hybrid FAIL at ({p},{q})");
        let rate = report.undecided as f64 / report.trials.len().max(1) as f64;
        assert!(
            rate <= 0.05,
            "hybrid undecided rate {rate} above 5 % at ({p},{q})"
        );
    }
    pass("criterion 11: hybrid flags of 100 positive quadruples per signature stay positive for every k");
}

/// 12. Finite-difference derivative of the cross ratio is positive on
/// 100 positive triples; for p = 2 the value matches the closed form
/// within 10⁻², fixture value 2 at h = 10⁻³.
#[test]
fn criterion_12_derivative_positivity() {
    for (p, q, trials, seed) in [(2usize, 3usize, 40usize, 1212u64), (3, 4, 30, 1213), (4, 5, 30, 1214)] {
        let report = run_suite("derivative", &SuiteConfig::new(p, q, trials, seed)).unwrap();
        assert_eq!(report.fail, 0, "derivative FAIL at ({p},{q})");
        assert_eq!(report.undecided, 0);
    }
    // Fixture: slope 2 with the symmetric difference at h = 10⁻³
    // within 10⁻².
    let f = form(2, 3);
    let (x_std, z_std) = standard_flags(&f);
    let y = x_std
        .transform(&elementary(&f, 1, &[s(1), s(0), s(1)]).unwrap())
        .unwrap();
    let fd = cr_derivative_fd(&x_std, &y, &z_std, 1, &[s(1), s(0), s(1)], &sf(1, 1000)).unwrap();
    assert!((fd.clone() - s(2)).abs() < sf(1, 100), "fd = {fd}");
    pass("criterion 12: cross-ratio slope positive on 100 triples; p=2 closed form matched within 10⁻² (fixture 2)");
}

/// 13. Collar inequality on Fuchsian-locus representations in (2,3),
/// (3,4), (3,5): 50 linked word pairs of length ≤ 4, strict for every
/// k ≤ p−1 with certified margin; < 2 min total.
#[test]
fn criterion_13_collar_lemma() {
    let started = Instant::now();
    for (p, q, seed) in [(2usize, 3usize, 1313u64), (3, 4, 1314), (3, 5, 1315)] {
        let report = run_suite("collar", &SuiteConfig::new(p, q, 50, seed)).unwrap();
        assert_eq!(report.fail, 0, "collar FAIL at ({p},{q})");
        assert_eq!(report.undecided, 0, "collar undecided at ({p},{q})");
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}, budget 2 min");
    pass(&format!(
        "criterion 13: collar inequality strict on 50 linked pairs per representation, certified margins, in {elapsed:?}"
    ));
}

/// 14. Ratioed probe: cr_k > 1 on 100 cyclically ordered
/// attracting-flag quadruples per representation, all k ≤ p−1.
#[test]
fn criterion_14_ratioed_probe() {
    for (p, q, seed) in [(2usize, 3usize, 1414u64), (3, 4, 1415), (3, 5, 1416)] {
        let report = run_suite("ratioed", &SuiteConfig::new(p, q, 100, seed)).unwrap();
        assert_eq!(report.fail, 0, "ratioed FAIL at ({p},{q})");
        assert_eq!(report.undecided, 0, "ratioed undecided at ({p},{q})");
    }
    pass("criterion 14: cr_k > 1 on 100 ordered attracting-flag quadruples per representation, every k");
}

/// 15. Involutions: K·E_k(s)·K = E_k(s)ᵗ and H·E_k(s)·H = E_k(−s)
/// exactly for 100 random parameters per signature up to q = 6.
#[test]
fn criterion_15_involutions() {
    for (p, q) in all_signatures() {
        let report =
            run_suite("involutions", &SuiteConfig::new(p, q, 100, 1515)).unwrap();
        assert_eq!(report.fail, 0, "involutions FAIL at ({p},{q})");
        assert_eq!(report.undecided, 0);
    }
    pass("criterion 15: involution conjugation identities exact on 100 parameters per signature");
}

/// The cone classification of the p = 2 example block is part of the
/// factorisation contract: the refuted fixture stays refuted.
#[test]
fn refutation_fixture_stays_sound() {
    let f = form(2, 3);
    let bad = elementary(&f, 1, &[s(1), s(2), s(1)]).unwrap();
    match theta_pq::positivity::factor_ab(&f, &bad) {
        theta_pq::positivity::Factorization::Refuted => {}
        other => panic!("expected refutation, got {other:?}"),
    }
    assert_eq!(
        f.cone_classify(&[s(1), s(2), s(1)]).unwrap(),
        ConeClass::Outside
    );
    let _ = ConeVariant::Interior;
    let _: Option<PartialFlag> = None;
    pass("refutation fixture: q_J = −1 parameter rejected by the certifier");
}
