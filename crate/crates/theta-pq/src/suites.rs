//! The batch verification suites.
//!
//! Every suite replays one family of identities or inequalities on
//! deterministic randomized inputs and emits one record per checked
//! statement instance. All comparisons are exact rationals or certified
//! rational intervals; UNDECIDED records an honest failure to decide
//! (solver exhaustion or tolerance too coarse) and is never coerced.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::sync::Arc;

use crate::crossratio::{cr_1_form, cr_derivative_fd, cr_k, cr_project, CrossRatioInput};
use crate::error::Error;
use crate::flags::{standard_flags, transverse_flags, IsotropicSubspace, PartialFlag};
use crate::matrix::Matrix;
use crate::positivity::{
    ab_of, ab_product, factor_ab, factor_ba, hybrid_triple_check, is_positive_tuple, ConeVariant,
    Factorization, Verdict,
};
use crate::pqspace::{build_form, ConeClass, FormData};
use crate::report::{digest, TrialRecord, TrialVerdict, VerificationReport};
use crate::reps::{
    attracting_fixed_point, collar2q_check, collar_check, default_snap_tol, fuchsian_locus_rep,
    linked, GroupElement, Representation, Word,
};
use crate::sampling::{
    random_closure_vj, random_interior_vj, random_isometry, random_positive, random_scalar,
    random_theta_coords, trial_rng,
};
use crate::scalar::Scalar;

pub const SUITE_NAMES: &[&str] = &[
    "identities",
    "semigroup",
    "braid",
    "poscr",
    "collar2q",
    "collar",
    "hybrid",
    "derivative",
    "ratioed",
    "involutions",
];

/// Suite parameters.
#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub p: usize,
    pub q: usize,
    pub trials: usize,
    pub seed: u64,
    /// Target width for eigenvalue enclosures.
    pub tol: Scalar,
}

impl SuiteConfig {
    pub fn new(p: usize, q: usize, trials: usize, seed: u64) -> Self {
        SuiteConfig {
            p,
            q,
            trials,
            seed,
            tol: crate::reps::default_eigen_tol(),
        }
    }
}

/// Run a named suite; the report is deterministic for a fixed seed.
pub fn run_suite(name: &str, cfg: &SuiteConfig) -> Result<VerificationReport, Error> {
    if cfg.trials == 0 {
        return Err(Error::Invalid("trials must be >= 1".into()));
    }
    if !(2..=5).contains(&cfg.p) || !(cfg.p + 1..=6).contains(&cfg.q) {
        return Err(Error::Signature { p: cfg.p, q: cfg.q });
    }
    let form = Arc::new(build_form(cfg.p, cfg.q)?);
    let trial_fn: fn(&Arc<FormData>, &SuiteConfig, usize) -> Vec<TrialRecord> = match name {
        "identities" => identities_trial,
        "semigroup" => semigroup_trial,
        "braid" => braid_trial,
        "poscr" => poscr_trial,
        "collar2q" => collar2q_trial,
        "collar" => collar_trial,
        "hybrid" => hybrid_trial,
        "derivative" => derivative_trial,
        "ratioed" => ratioed_trial,
        "involutions" => involutions_trial,
        _ => return Err(Error::Invalid(format!("unknown suite {name:?}"))),
    };
    if matches!(name, "poscr" | "collar2q") && cfg.p != 2 {
        return Err(Error::Invalid(format!("suite {name:?} requires p = 2")));
    }
    let mut report = VerificationReport::new(name, cfg.p, cfg.q, cfg.seed, cfg.trials);
    let records: Vec<TrialRecord> = (0..cfg.trials)
        .into_par_iter()
        .flat_map(|i| trial_fn(&form, cfg, i))
        .collect();
    report.extend(records);
    report.finalize();
    Ok(report)
}

fn record(
    index: usize,
    statement: &str,
    inputs: &[&str],
    lhs: impl ToString,
    rhs: impl ToString,
    margin: impl ToString,
    verdict: TrialVerdict,
) -> TrialRecord {
    TrialRecord {
        index,
        statement: statement.to_string(),
        inputs_digest: digest(inputs),
        lhs: lhs.to_string(),
        rhs: rhs.to_string(),
        margin: margin.to_string(),
        verdict,
    }
}

fn eq_record(index: usize, statement: &str, inputs: &[&str], lhs: &Scalar, rhs: &Scalar) -> TrialRecord {
    let verdict = if lhs == rhs {
        TrialVerdict::Pass
    } else {
        TrialVerdict::Fail
    };
    record(index, statement, inputs, lhs, rhs, lhs - rhs, verdict)
}

// ---------------------------------------------------------------------------
// identities
// ---------------------------------------------------------------------------

fn random_isotropic(
    form: &Arc<FormData>,
    rng: &mut ChaCha8Rng,
    k: usize,
) -> IsotropicSubspace {
    let d = form.d();
    let z_k = Matrix::from_fn(d, k, |i, j| {
        if i == j {
            Scalar::one()
        } else {
            Scalar::zero()
        }
    });
    let g = random_isometry(form, rng, 8);
    IsotropicSubspace::new(form.clone(), &g * &z_k).expect("image of isotropic span")
}

fn try_cr_input(
    form: &Arc<FormData>,
    rng: &mut ChaCha8Rng,
    k: usize,
) -> Option<(CrossRatioInput, IsotropicSubspace, IsotropicSubspace)> {
    for _ in 0..150 {
        let v1 = random_isotropic(form, rng, k);
        let w1 = random_isotropic(form, rng, k);
        let w2 = random_isotropic(form, rng, k);
        let v2 = random_isotropic(form, rng, k);
        let v3 = random_isotropic(form, rng, k);
        let w3 = random_isotropic(form, rng, k);
        let input = CrossRatioInput::new(v1, w1, w2, v2).ok()?;
        let all_defined = [
            cr_k(&input).is_ok(),
            cr_k(&CrossRatioInput::new(v3.clone(), input.w1.clone(), input.w2.clone(), input.v2.clone()).ok()?)
                .is_ok(),
            cr_k(&CrossRatioInput::new(input.v1.clone(), w3.clone(), input.w2.clone(), input.v2.clone()).ok()?)
                .is_ok(),
        ]
        .iter()
        .all(|b| *b);
        if all_defined {
            return Some((input, v3, w3));
        }
    }
    None
}

fn identities_trial(form: &Arc<FormData>, cfg: &SuiteConfig, idx: usize) -> Vec<TrialRecord> {
    let mut rng = trial_rng(cfg.seed, idx as u64);
    let k = rng.gen_range(1..=form.p() - 1);
    let tag = format!("{idx}:{k}");
    let Some((input, v3, w3)) = try_cr_input(form, &mut rng, k) else {
        return vec![record(
            idx,
            "cr.sample",
            &[&tag],
            "-",
            "-",
            "-",
            TrialVerdict::Undecided,
        )];
    };
    let inputs = [tag.as_str()];
    let mut out = Vec::new();
    let base = cr_k(&input).unwrap();

    // (1) cr(V1,W1,W1,V2) = 1, inversion under V-swap and W-swap.
    let w1w1 = cr_k(&CrossRatioInput::new(
        input.v1.clone(),
        input.w1.clone(),
        input.w1.clone(),
        input.v2.clone(),
    )
    .unwrap())
    .unwrap();
    out.push(eq_record(idx, "cr.unit", &inputs, &w1w1, &Scalar::one()));
    let swapped_v = cr_k(&CrossRatioInput::new(
        input.v2.clone(),
        input.w1.clone(),
        input.w2.clone(),
        input.v1.clone(),
    )
    .unwrap())
    .unwrap();
    out.push(eq_record(
        idx,
        "cr.inverse.vswap",
        &inputs,
        &(&base * &swapped_v),
        &Scalar::one(),
    ));
    let swapped_w = cr_k(&CrossRatioInput::new(
        input.v1.clone(),
        input.w2.clone(),
        input.w1.clone(),
        input.v2.clone(),
    )
    .unwrap())
    .unwrap();
    out.push(eq_record(
        idx,
        "cr.inverse.wswap",
        &inputs,
        &(&base * &swapped_w),
        &Scalar::one(),
    ));

    // (2) symmetry.
    let sym = cr_k(&CrossRatioInput::new(
        input.w1.clone(),
        input.v1.clone(),
        input.v2.clone(),
        input.w2.clone(),
    )
    .unwrap())
    .unwrap();
    out.push(eq_record(idx, "cr.symmetry", &inputs, &sym, &base));

    // (3) and (4): cocycle identities.
    let c3a = cr_k(&CrossRatioInput::new(
        input.v2.clone(),
        input.w1.clone(),
        input.w2.clone(),
        v3.clone(),
    )
    .unwrap())
    .unwrap();
    let c3b = cr_k(&CrossRatioInput::new(
        input.v1.clone(),
        input.w1.clone(),
        input.w2.clone(),
        v3.clone(),
    )
    .unwrap())
    .unwrap();
    out.push(eq_record(idx, "cr.cocycle3", &inputs, &(&base * &c3a), &c3b));
    let c4a = cr_k(&CrossRatioInput::new(
        input.v1.clone(),
        input.w2.clone(),
        w3.clone(),
        input.v2.clone(),
    )
    .unwrap())
    .unwrap();
    let c4b = cr_k(&CrossRatioInput::new(
        input.v1.clone(),
        input.w1.clone(),
        w3.clone(),
        input.v2.clone(),
    )
    .unwrap())
    .unwrap();
    out.push(eq_record(idx, "cr.cocycle4", &inputs, &(&base * &c4a), &c4b));

    // (5) invariance under a random exact isometry.
    let g = random_isometry(form, &mut rng, 6);
    let moved = cr_k(&CrossRatioInput::new(
        input.v1.transform(&g).unwrap(),
        input.w1.transform(&g).unwrap(),
        input.w2.transform(&g).unwrap(),
        input.v2.transform(&g).unwrap(),
    )
    .unwrap())
    .unwrap();
    out.push(eq_record(idx, "cr.invariance", &inputs, &moved, &base));

    // Line specialisation agrees with the wedge formula.
    if k == 1 {
        let lf = cr_1_form(&input.v1, &input.w1, &input.w2, &input.v2).unwrap();
        out.push(eq_record(idx, "cr.cr1form", &inputs, &lf, &base));
    }

    // Reduction formula on a configuration sharing a (k−1)-subspace.
    if k >= 2 {
        if let Some(rec) = projection_record(form, &mut rng, idx, k, &inputs) {
            out.push(rec);
        }
    }
    out
}

fn projection_record(
    form: &Arc<FormData>,
    rng: &mut ChaCha8Rng,
    idx: usize,
    k: usize,
    inputs: &[&str],
) -> Option<TrialRecord> {
    for _ in 0..30 {
        let d = form.d();
        let z_k = Matrix::from_fn(d, k, |i, j| {
            if i == j {
                Scalar::one()
            } else {
                Scalar::zero()
            }
        });
        // V2 = E_k(s)ᵗ·Z^k fixes Z^{k−1} and moves e_k.
        let p = form.p();
        let param: Vec<Scalar> = if k <= p - 2 {
            vec![random_positive(rng, 3, 2)]
        } else {
            random_interior_vj(form, rng)
        };
        let e_t = crate::pqspace::raw_elementary(form, k, &param).transpose();
        let g = random_isometry(form, rng, 4);
        let v1 = IsotropicSubspace::new(form.clone(), &g * &z_k).unwrap();
        let v2 = IsotropicSubspace::new(form.clone(), &(&g * &e_t) * &z_k).unwrap();
        let w1 = random_isotropic(form, rng, k);
        let w2 = random_isotropic(form, rng, k);
        let Ok(input) = CrossRatioInput::new(v1, w1, w2, v2) else {
            continue;
        };
        let Ok(direct) = cr_k(&input) else { continue };
        match cr_project(&input) {
            Ok(reduced) => {
                return Some(eq_record(idx, "cr.project", inputs, &reduced, &direct));
            }
            Err(Error::NotTransverse) | Err(Error::IntersectionDim { .. }) => continue,
            Err(e) => {
                return Some(record(
                    idx,
                    "cr.project",
                    inputs,
                    "-",
                    "-",
                    e,
                    TrialVerdict::Undecided,
                ));
            }
        }
    }
    None
}

// ---------------------------------------------------------------------------
// semigroup / braid
// ---------------------------------------------------------------------------

fn factor_record(
    idx: usize,
    statement: &str,
    inputs: &[&str],
    form: &FormData,
    result: &Factorization,
) -> TrialRecord {
    match result {
        Factorization::Certified(c) => {
            let interior = c.is_interior(form);
            record(
                idx,
                statement,
                inputs,
                "certified",
                "certified",
                if interior { "interior" } else { "non-interior" },
                if interior {
                    TrialVerdict::Pass
                } else {
                    TrialVerdict::Fail
                },
            )
        }
        Factorization::Refuted => record(
            idx,
            statement,
            inputs,
            "refuted",
            "certified",
            "-",
            TrialVerdict::Fail,
        ),
        Factorization::Undecided(msg) => record(
            idx,
            statement,
            inputs,
            "undecided",
            "certified",
            msg,
            TrialVerdict::Undecided,
        ),
    }
}

fn semigroup_trial(form: &Arc<FormData>, cfg: &SuiteConfig, idx: usize) -> Vec<TrialRecord> {
    let mut rng = trial_rng(cfg.seed, idx as u64);
    let v = random_theta_coords(form, &mut rng, ConeVariant::Interior);
    let u = random_theta_coords(form, &mut rng, ConeVariant::Interior);
    let tag = format!("{idx}");
    let inputs = [tag.as_str()];
    let mut out = Vec::new();

    let prod = &ab_product(form, &v) * &ab_product(form, &u);
    out.push(factor_record(
        idx,
        "semigroup.closure",
        &inputs,
        form,
        &factor_ab(form, &prod),
    ));

    // ab(u)·P(v̄) with u in the cone closure.
    let closure_block = crate::sampling::random_theta_block(form, &mut rng, ConeVariant::Closure);
    let prod2 = &ab_of(form, &closure_block) * &ab_product(form, &v);
    out.push(factor_record(
        idx,
        "semigroup.corollary",
        &inputs,
        form,
        &factor_ab(form, &prod2),
    ));
    out
}

fn braid_trial(form: &Arc<FormData>, cfg: &SuiteConfig, idx: usize) -> Vec<TrialRecord> {
    let mut rng = trial_rng(cfg.seed, idx as u64);
    let v = random_theta_coords(form, &mut rng, ConeVariant::Interior);
    let u = ab_product(form, &v);
    let tag = format!("{idx}");
    vec![factor_record(
        idx,
        "braid.ba",
        &[tag.as_str()],
        form,
        &factor_ba(form, &u),
    )]
}

// ---------------------------------------------------------------------------
// poscr / collar2q (p = 2)
// ---------------------------------------------------------------------------

/// The unique representative (q_J(s), s, 1) of a line transverse to
/// ⟨e_1⟩ in a (2,q) space.
fn p2_line(form: &Arc<FormData>, s: &[Scalar]) -> IsotropicSubspace {
    let d = form.d();
    let qj = form.qj(s).unwrap();
    let mut v = Matrix::zeros(d, 1);
    v[(0, 0)] = qj;
    for (i, c) in s.iter().enumerate() {
        v[(1 + i, 0)] = c.clone();
    }
    v[(d - 1, 0)] = Scalar::one();
    IsotropicSubspace::line(form.clone(), &v).unwrap()
}

fn poscr_trial(form: &Arc<FormData>, cfg: &SuiteConfig, idx: usize) -> Vec<TrialRecord> {
    let mut rng = trial_rng(cfg.seed, idx as u64);
    let sx = random_interior_vj(form, &mut rng);
    let delta = random_interior_vj(form, &mut rng);
    let sy: Vec<Scalar> = sx.iter().zip(&delta).map(|(a, b)| a + b).collect();
    let g = random_isometry(form, &mut rng, 5);
    let d = form.d();
    let a = IsotropicSubspace::coordinate_line(form.clone(), d)
        .unwrap()
        .transform(&g)
        .unwrap();
    let b = p2_line(form, &sx).transform(&g).unwrap();
    let c = p2_line(form, &sy).transform(&g).unwrap();
    let e1 = IsotropicSubspace::coordinate_line(form.clone(), 1)
        .unwrap()
        .transform(&g)
        .unwrap();
    let tag = format!("{idx}");
    let inputs = [tag.as_str()];
    let mut out = Vec::new();

    // The quadruple is positive by construction; certify it anyway.
    let flags: Vec<PartialFlag> = [&a, &b, &c, &e1]
        .iter()
        .map(|l| {
            PartialFlag::from_levels(form.clone(), vec![(*l).clone()]).unwrap()
        })
        .collect();
    let tuple_verdict = match is_positive_tuple(&flags) {
        Ok(Verdict::Positive(_)) => TrialVerdict::Pass,
        Ok(Verdict::NotPositive) => TrialVerdict::Fail,
        Ok(Verdict::Undecided(_)) | Err(_) => TrialVerdict::Undecided,
    };
    out.push(record(
        idx,
        "poscr.tuple",
        &inputs,
        "positive",
        "positive",
        "-",
        tuple_verdict,
    ));

    match CrossRatioInput::new(a, b, c, e1).and_then(|i| cr_k(&i)) {
        Ok(cr) => {
            let margin = &cr - &Scalar::one();
            let verdict = if margin.is_positive() {
                TrialVerdict::Pass
            } else {
                TrialVerdict::Fail
            };
            out.push(record(idx, "poscr.gt1", &inputs, &cr, "1", margin, verdict));
        }
        Err(e) => out.push(record(idx, "poscr.gt1", &inputs, "-", "1", e, TrialVerdict::Undecided)),
    }
    out
}

/// Exact O(J)-element: hyperbolic stretch on the isotropic ends and a
/// Pythagorean rotation in the negative-definite middle block.
fn random_j_isometry(form: &FormData, rng: &mut ChaCha8Rng, mu: &Scalar) -> Matrix {
    let m = form.vj_dim();
    let mut j_rot = Matrix::identity(m);
    j_rot[(0, 0)] = mu.clone();
    j_rot[(m - 1, m - 1)] = mu.recip();
    if m >= 4 && rng.gen_bool(0.5) {
        // rotate the first two middle coordinates by (3/5, 4/5)
        j_rot[(1, 1)] = Scalar::fraction(3, 5);
        j_rot[(1, 2)] = Scalar::fraction(-4, 5);
        j_rot[(2, 1)] = Scalar::fraction(4, 5);
        j_rot[(2, 2)] = Scalar::fraction(3, 5);
    }
    j_rot
}

fn collar2q_trial(form: &Arc<FormData>, cfg: &SuiteConfig, idx: usize) -> Vec<TrialRecord> {
    let mut rng = trial_rng(cfg.seed, idx as u64);
    let d = form.d();
    let lambda = [Scalar::from_int(2), Scalar::from_int(3), Scalar::fraction(5, 2)]
        [rng.gen_range(0..3usize)]
    .clone();
    let mu = [Scalar::one(), Scalar::fraction(5, 4)][rng.gen_range(0..2usize)].clone();
    let j_rot = random_j_isometry(form, &mut rng, &mu);
    // h = diag(λ⁻¹, J-block, λ): attracting line e_d, repelling e_1.
    let mut h = Matrix::zeros(d, d);
    h[(0, 0)] = lambda.recip();
    h[(d - 1, d - 1)] = lambda.clone();
    for i in 0..form.vj_dim() {
        for j in 0..form.vj_dim() {
            h[(1 + i, 1 + j)] = j_rot[(i, j)].clone();
        }
    }
    let g = random_isometry(form, &mut rng, 4);
    let h_conj = &(&g * &h) * &g.inverse().unwrap();
    let h_ge = GroupElement::new(form.clone(), h_conj).unwrap();
    let h_plus = IsotropicSubspace::coordinate_line(form.clone(), d)
        .unwrap()
        .transform(&g)
        .unwrap();
    let h_minus = IsotropicSubspace::coordinate_line(form.clone(), 1)
        .unwrap()
        .transform(&g)
        .unwrap();

    // Sample x with (h₊, hx, x, h₋) positive: s_x − λ⁻¹·M s_x interior.
    let mut chosen = None;
    for _ in 0..40 {
        let sx = random_interior_vj(form, &mut rng);
        let msx: Vec<Scalar> = {
            let mut out = vec![Scalar::zero(); form.vj_dim()];
            for i in 0..form.vj_dim() {
                for j in 0..form.vj_dim() {
                    out[i] = &out[i] + &(&j_rot[(i, j)] * &sx[j]);
                }
            }
            out
        };
        let shx: Vec<Scalar> = msx.iter().map(|v| v / &lambda).collect();
        let w: Vec<Scalar> = sx.iter().zip(&shx).map(|(a, b)| a - b).collect();
        if form.cone_classify(&w).unwrap() == ConeClass::Interior
            && form.cone_classify(&shx).unwrap() == ConeClass::Interior
        {
            chosen = Some(sx);
            break;
        }
    }
    let tag = format!("{idx}");
    let inputs = [tag.as_str()];
    let Some(sx) = chosen else {
        return vec![record(
            idx,
            "collar2q.sample",
            &inputs,
            "-",
            "-",
            "-",
            TrialVerdict::Undecided,
        )];
    };
    let x = p2_line(form, &sx).transform(&g).unwrap();
    let mut out = Vec::new();

    // Precondition: the quadruple is positive.
    let hx = x.transform(h_ge.matrix()).unwrap();
    let flags: Vec<PartialFlag> = [&h_plus, &hx, &x, &h_minus]
        .iter()
        .map(|l| PartialFlag::from_levels(form.clone(), vec![(*l).clone()]).unwrap())
        .collect();
    let pre = match is_positive_tuple(&flags) {
        Ok(Verdict::Positive(_)) => TrialVerdict::Pass,
        Ok(Verdict::NotPositive) => TrialVerdict::Fail,
        _ => TrialVerdict::Undecided,
    };
    out.push(record(
        idx,
        "collar2q.pre.positive",
        &inputs,
        "positive",
        "positive",
        "-",
        pre,
    ));

    match collar2q_check(&h_ge, &h_plus, &h_minus, &x, &cfg.tol) {
        Ok(rep) => {
            let verdict = if !rep.decided {
                TrialVerdict::Undecided
            } else if rep.pass {
                TrialVerdict::Pass
            } else {
                TrialVerdict::Fail
            };
            let margin = &rep.rhs.lo - &rep.lhs.hi;
            out.push(record(
                idx,
                "collar2q.bound",
                &inputs,
                rep.lhs.hi,
                rep.rhs.lo,
                margin,
                verdict,
            ));
        }
        Err(e) => out.push(record(
            idx,
            "collar2q.bound",
            &inputs,
            "-",
            "-",
            e,
            TrialVerdict::Undecided,
        )),
    }
    out
}

// ---------------------------------------------------------------------------
// Fuchsian-locus suites: collar, hybrid, ratioed
// ---------------------------------------------------------------------------

fn diag2(a: Scalar, b: Scalar) -> Matrix {
    Matrix::from_rows(vec![vec![a, Scalar::zero()], vec![Scalar::zero(), b]])
}

/// Two linked hyperbolic generators; even seeds give all-rational
/// spectra, odd seeds mix in an irrational (trace 3) generator, the
/// golden-ratio matrix, whose flags exercise the snapping path.
pub fn suite_representation(
    form: &Arc<FormData>,
    seed: u64,
) -> Result<Representation, Error> {
    let mut gens = BTreeMap::new();
    if seed % 2 == 0 {
        gens.insert("a".to_string(), diag2(Scalar::from_int(2), Scalar::fraction(1, 2)));
        gens.insert(
            "b".to_string(),
            Matrix::from_rows(vec![
                vec![Scalar::fraction(5, 4), Scalar::fraction(3, 4)],
                vec![Scalar::fraction(3, 4), Scalar::fraction(5, 4)],
            ]),
        );
    } else {
        gens.insert("a".to_string(), diag2(Scalar::from_int(4), Scalar::fraction(1, 4)));
        gens.insert(
            "b".to_string(),
            Matrix::from_rows(vec![
                vec![Scalar::from_int(2), Scalar::one()],
                vec![Scalar::one(), Scalar::one()],
            ]),
        );
    }
    let mut twists = BTreeMap::new();
    let m = form.q() - form.p() + 1;
    if m >= 2 && seed % 3 == 0 {
        let mut rot = Matrix::identity(m);
        rot[(0, 0)] = Scalar::fraction(3, 5);
        rot[(0, 1)] = Scalar::fraction(-4, 5);
        rot[(1, 0)] = Scalar::fraction(4, 5);
        rot[(1, 1)] = Scalar::fraction(3, 5);
        twists.insert("b".to_string(), rot);
    }
    fuchsian_locus_rep(form, &gens, &twists)
}

/// Random reduced word over {a±1, b±1} of length 1..=max_len.
fn random_word(rng: &mut ChaCha8Rng, max_len: usize) -> Word {
    let len = rng.gen_range(1..=max_len);
    let names = ["a", "b"];
    let mut word: Vec<(String, i32)> = Vec::new();
    while word.iter().map(|(_, e)| e.unsigned_abs() as usize).sum::<usize>() < len {
        let g = names[rng.gen_range(0..2usize)].to_string();
        let e: i32 = if rng.gen_bool(0.5) { 1 } else { -1 };
        if let Some(last) = word.last_mut() {
            if last.0 == g {
                if (last.1 > 0) == (e > 0) {
                    last.1 += e;
                } else {
                    continue; // avoid cancellation
                }
                continue;
            }
        }
        word.push((g, e));
    }
    word
}

fn hyperbolic_word(
    rep: &Representation,
    rng: &mut ChaCha8Rng,
    max_len: usize,
) -> Option<(Word, Matrix)> {
    for _ in 0..40 {
        let w = random_word(rng, max_len);
        let m = rep.evaluate_sl2(&w).ok()?;
        let t = m.trace();
        if &t * &t > Scalar::from_int(4) {
            return Some((w, m));
        }
    }
    None
}

fn collar_trial(form: &Arc<FormData>, cfg: &SuiteConfig, idx: usize) -> Vec<TrialRecord> {
    let mut rng = trial_rng(cfg.seed, idx as u64);
    let rep = match suite_representation(form, cfg.seed.wrapping_add(idx as u64)) {
        Ok(r) => r,
        Err(e) => {
            return vec![record(
                idx,
                "collar.rep",
                &[],
                "-",
                "-",
                e,
                TrialVerdict::Undecided,
            )]
        }
    };
    // Find a linked hyperbolic pair.
    let mut pair = None;
    for _ in 0..60 {
        let Some((gw, gm)) = hyperbolic_word(&rep, &mut rng, 4) else {
            continue;
        };
        let Some((hw, hm)) = hyperbolic_word(&rep, &mut rng, 4) else {
            continue;
        };
        if linked(&gm, &hm).unwrap_or(false) {
            pair = Some((gw, hw));
            break;
        }
    }
    let tag = format!("{idx}");
    let inputs = [tag.as_str()];
    let Some((gw, hw)) = pair else {
        return vec![record(
            idx,
            "collar.sample",
            &inputs,
            "-",
            "-",
            "no linked pair",
            TrialVerdict::Undecided,
        )];
    };
    let mut out = Vec::new();
    for k in 1..=form.p() - 1 {
        let statement = format!("collar.k{k}");
        match collar_check(&rep, &gw, &hw, k, &cfg.tol) {
            Ok(r) => {
                let verdict = if !r.decided {
                    TrialVerdict::Undecided
                } else if r.pass {
                    TrialVerdict::Pass
                } else {
                    TrialVerdict::Fail
                };
                let margin = &r.rhs.lo - &r.lhs.hi;
                out.push(record(
                    idx,
                    &statement,
                    &inputs,
                    r.lhs.hi.to_f64(),
                    r.rhs.lo.to_f64(),
                    margin.to_f64(),
                    verdict,
                ));
            }
            Err(e) => out.push(record(idx, &statement, &inputs, "-", "-", e, TrialVerdict::Undecided)),
        }
    }
    out
}

/// Four words with hyperbolic images, pairwise distinct axes, and
/// certified cyclic positions on the base circle, sorted ascending
/// (the point at infinity greatest).
fn circle_ordered_words(
    rep: &Representation,
    rng: &mut ChaCha8Rng,
    max_len: usize,
) -> Option<[Word; 4]> {
    let tol = Scalar::fraction(1, 1_000_000_000_000_000_000);
    'outer: for _ in 0..60 {
        let mut words = Vec::new();
        let mut mats: Vec<Matrix> = Vec::new();
        for _ in 0..4 {
            let (w, m) = hyperbolic_word(rep, rng, max_len)?;
            words.push(w);
            mats.push(m);
        }
        for i in 0..4 {
            for j in i + 1..4 {
                // Distinct axes: fixed-point resultant must not vanish,
                // and linkedness is irrelevant here.
                if mats[i] == mats[j] {
                    continue 'outer;
                }
            }
        }
        let mut points = Vec::new();
        for m in &mats {
            match attracting_fixed_point(m, &tol) {
                Ok(pt) => points.push(pt),
                Err(_) => continue 'outer,
            }
        }
        // Certified pairwise separation in the chordal metric of the
        // circle (squared, so everything stays rational): points far
        // apart in the line can still collide across infinity, and a
        // minimum gap keeps positivity margins well above the
        // flag-snapping tolerance.
        let min_gap_sq = Scalar::fraction(1, 900);
        let one = crate::approx::RatInterval::point(Scalar::one());
        let chordal_sq_lower = |a: &Option<crate::approx::RatInterval>,
                                b: &Option<crate::approx::RatInterval>|
         -> Option<Scalar> {
            match (a, b) {
                (Some(x), Some(y)) => {
                    let diff = x.sub(y);
                    let num = diff.mul(&diff);
                    let den = one.add(&x.mul(x)).mul(&one.add(&y.mul(y)));
                    Some(num.div(&den).lo)
                }
                (Some(x), None) | (None, Some(x)) => {
                    Some(one.div(&one.add(&x.mul(x))).lo)
                }
                (None, None) => None,
            }
        };
        let mut keys: Vec<(usize, Option<&crate::approx::RatInterval>)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, p.as_ref()))
            .collect();
        for i in 0..4 {
            for j in i + 1..4 {
                match chordal_sq_lower(&points[i], &points[j]) {
                    Some(gap) if gap > min_gap_sq => {}
                    _ => continue 'outer,
                }
            }
        }
        keys.sort_by(|a, b| match (a.1, b.1) {
            (None, None) => std::cmp::Ordering::Equal,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (Some(_), None) => std::cmp::Ordering::Less,
            (Some(x), Some(y)) => x.hi.cmp(&y.lo),
        });
        let ordered: Vec<Word> = keys.iter().map(|(i, _)| words[*i].clone()).collect();
        return Some([
            ordered[0].clone(),
            ordered[1].clone(),
            ordered[2].clone(),
            ordered[3].clone(),
        ]);
    }
    None
}

fn flags_for(
    rep: &Representation,
    words: &[Word; 4],
    tol: &Scalar,
) -> Result<Vec<PartialFlag>, Error> {
    words
        .iter()
        .map(|w| {
            let g = rep.evaluate(w)?;
            let spec = crate::reps::spectral_for(rep, w, tol)?;
            crate::reps::attracting_flag_with_spectral(&g, &spec, &default_snap_tol())
        })
        .collect()
}

/// Try the dihedral re-orderings of a quadruple until one is certified
/// positive.
fn positive_ordering(flags: &[PartialFlag]) -> Result<Option<Vec<PartialFlag>>, Error> {
    let n = flags.len();
    let mut undecided = false;
    for rot in 0..n {
        for rev in [false, true] {
            let mut perm: Vec<PartialFlag> = (0..n)
                .map(|i| flags[(i + rot) % n].clone())
                .collect();
            if rev {
                perm.reverse();
            }
            match is_positive_tuple(&perm) {
                Ok(Verdict::Positive(_)) => return Ok(Some(perm)),
                Ok(Verdict::NotPositive) => {}
                Ok(Verdict::Undecided(_)) => undecided = true,
                Err(Error::NotTransverse) => {}
                Err(e) => return Err(e),
            }
        }
    }
    if undecided {
        Err(Error::Undecided("positivity of the sampled quadruple".into()))
    } else {
        Ok(None)
    }
}

fn hybrid_trial(form: &Arc<FormData>, cfg: &SuiteConfig, idx: usize) -> Vec<TrialRecord> {
    let mut rng = trial_rng(cfg.seed, idx as u64);
    let rep = match suite_representation(form, cfg.seed.wrapping_add(idx as u64)) {
        Ok(r) => r,
        Err(e) => {
            return vec![record(idx, "hybrid.rep", &[], "-", "-", e, TrialVerdict::Undecided)]
        }
    };
    let tag = format!("{idx}");
    let inputs = [tag.as_str()];
    let undecided = |msg: String| {
        vec![record(
            idx,
            "hybrid.sample",
            &inputs,
            "-",
            "-",
            msg,
            TrialVerdict::Undecided,
        )]
    };
    let Some(words) = circle_ordered_words(&rep, &mut rng, 3) else {
        return undecided("no circle-ordered quadruple".into());
    };
    let flags = match flags_for(&rep, &words, &cfg.tol) {
        Ok(f) => f,
        Err(e) => return undecided(e.to_string()),
    };
    let ordered = match positive_ordering(&flags) {
        Ok(Some(o)) => o,
        Ok(None) => {
            return vec![record(
                idx,
                "hybrid.quadruple.positive",
                &inputs,
                "positive",
                "positive",
                "no orientation certified",
                TrialVerdict::Fail,
            )]
        }
        Err(e) => return undecided(e.to_string()),
    };
    let mut out = vec![record(
        idx,
        "hybrid.quadruple.positive",
        &inputs,
        "positive",
        "positive",
        "-",
        TrialVerdict::Pass,
    )];
    // (w, x, y, z) positive ⇒ (x ◁_k w, y, z) positive for all k.
    let (w, x, y, z) = (&ordered[0], &ordered[1], &ordered[2], &ordered[3]);
    for k in 1..=form.p() - 1 {
        let statement = format!("hybrid.k{k}");
        let verdict = match hybrid_triple_check(x, w, y, z, k) {
            Ok(Verdict::Positive(_)) => TrialVerdict::Pass,
            Ok(Verdict::NotPositive) => TrialVerdict::Fail,
            Ok(Verdict::Undecided(_)) => TrialVerdict::Undecided,
            Err(Error::NotTransverse) => TrialVerdict::Undecided,
            Err(_) => TrialVerdict::Undecided,
        };
        out.push(record(
            idx,
            &statement,
            &inputs,
            "positive",
            "positive",
            "-",
            verdict,
        ));
    }
    out
}

fn ratioed_trial(form: &Arc<FormData>, cfg: &SuiteConfig, idx: usize) -> Vec<TrialRecord> {
    let mut rng = trial_rng(cfg.seed, idx as u64);
    let rep = match suite_representation(form, cfg.seed.wrapping_add(idx as u64)) {
        Ok(r) => r,
        Err(e) => {
            return vec![record(idx, "ratioed.rep", &[], "-", "-", e, TrialVerdict::Undecided)]
        }
    };
    let tag = format!("{idx}");
    let inputs = [tag.as_str()];
    let undecided = |msg: String| {
        vec![record(
            idx,
            "ratioed.sample",
            &inputs,
            "-",
            "-",
            msg,
            TrialVerdict::Undecided,
        )]
    };
    let Some(words) = circle_ordered_words(&rep, &mut rng, 3) else {
        return undecided("no circle-ordered quadruple".into());
    };
    let flags = match flags_for(&rep, &words, &cfg.tol) {
        Ok(f) => f,
        Err(e) => return undecided(e.to_string()),
    };
    let ordered = match positive_ordering(&flags) {
        Ok(Some(o)) => o,
        Ok(None) => {
            return vec![record(
                idx,
                "ratioed.orientation",
                &inputs,
                "positive",
                "positive",
                "no orientation certified",
                TrialVerdict::Fail,
            )]
        }
        Err(_) => return undecided("orientation undecided".into()),
    };
    let mut out = Vec::new();
    for k in 1..=form.p() - 1 {
        let statement = format!("ratioed.k{k}");
        let input = CrossRatioInput::new(
            ordered[0].level(k).clone(),
            ordered[1].level(k).clone(),
            ordered[2].level(k).clone(),
            ordered[3].level(k).clone(),
        );
        match input.and_then(|i| cr_k(&i)) {
            Ok(cr) => {
                let margin = &cr - &Scalar::one();
                let verdict = if margin.is_positive() {
                    TrialVerdict::Pass
                } else {
                    TrialVerdict::Fail
                };
                out.push(record(idx, &statement, &inputs, &cr, "1", margin, verdict));
                // Exchanging the endpoints inverts the value, so the
                // reversed traversal lands strictly below 1.
                if k == 1 {
                    let rev = CrossRatioInput::new(
                        ordered[3].level(k).clone(),
                        ordered[1].level(k).clone(),
                        ordered[2].level(k).clone(),
                        ordered[0].level(k).clone(),
                    )
                    .and_then(|i| cr_k(&i));
                    if let Ok(rv) = rev {
                        let prod = &rv * &cr;
                        out.push(eq_record(
                            idx,
                            "ratioed.reciprocal",
                            &inputs,
                            &prod,
                            &Scalar::one(),
                        ));
                    }
                }
            }
            Err(e) => out.push(record(idx, &statement, &inputs, "-", "1", e, TrialVerdict::Undecided)),
        }
    }
    out
}

// ---------------------------------------------------------------------------
// derivative / involutions
// ---------------------------------------------------------------------------

fn derivative_trial(form: &Arc<FormData>, cfg: &SuiteConfig, idx: usize) -> Vec<TrialRecord> {
    let mut rng = trial_rng(cfg.seed, idx as u64);
    let (x_std, z_std) = standard_flags(form);
    let coords = random_theta_coords(form, &mut rng, ConeVariant::Interior);
    let y = x_std.transform(&ab_product(form, &coords)).unwrap();
    if !transverse_flags(&y, &z_std).unwrap_or(false) {
        return vec![record(
            idx,
            "derivative.sample",
            &[],
            "-",
            "-",
            "-",
            TrialVerdict::Undecided,
        )];
    }
    let tag = format!("{idx}");
    let inputs = [tag.as_str()];
    let h = Scalar::fraction(1, 1000);
    let mut out = Vec::new();
    for k in 1..=form.p() - 1 {
        let dir: Vec<Scalar> = if k <= form.p() - 2 {
            vec![random_positive(&mut rng, 3, 2)]
        } else {
            random_closure_vj(form, &mut rng)
        };
        if dir.iter().all(Scalar::is_zero) {
            continue;
        }
        let statement = format!("derivative.positive.k{k}");
        // Shrink the step until the difference quotient stabilises; the
        // secant at a coarse step can overshoot past the target class
        // when the configuration scale is tiny.
        let stable_fd = |h0: &Scalar| -> Result<Scalar, Error> {
            let mut step = h0.clone();
            let mut prev = cr_derivative_fd(&x_std, &y, &z_std, k, &dir, &step)?;
            for _ in 0..14 {
                step = &step * &Scalar::fraction(1, 2);
                let next = cr_derivative_fd(&x_std, &y, &z_std, k, &dir, &step)?;
                let gap = (&next - &prev).abs();
                let scale = next.abs() * Scalar::fraction(1, 4);
                if gap <= scale {
                    return Ok(next);
                }
                prev = next;
            }
            Ok(prev)
        };
        match stable_fd(&h) {
            Ok(fd) => {
                let verdict = if fd.is_positive() {
                    TrialVerdict::Pass
                } else {
                    TrialVerdict::Fail
                };
                out.push(record(idx, &statement, &inputs, fd.to_f64(), 0.0, fd.to_f64(), verdict));

                // The explicit slope for p = 2: 2 b_J(w, s_y)/q_J(s_y),
                // approached by the symmetric difference as h shrinks.
                if form.p() == 2 {
                    let sy: Vec<Scalar> =
                        (0..form.vj_dim()).map(|i| y.level(1).basis()[(1 + i, 0)].clone()).collect();
                    let scale = y.level(1).basis()[(form.d() - 1, 0)].clone();
                    let sy: Vec<Scalar> = sy.iter().map(|v| v / &scale).collect();
                    let closed = Scalar::from_int(2) * form.bj(&dir, &sy).unwrap()
                        / form.qj(&sy).unwrap();
                    let mut step = h.clone();
                    let mut ok = false;
                    let mut last = fd.clone();
                    for _ in 0..10 {
                        if let Ok(v) = cr_derivative_fd(&x_std, &y, &z_std, k, &dir, &step) {
                            last = v;
                            if (&last - &closed).abs() <= Scalar::fraction(1, 100) {
                                ok = true;
                                break;
                            }
                        }
                        step = step * Scalar::fraction(1, 2);
                    }
                    out.push(record(
                        idx,
                        "derivative.closedform",
                        &inputs,
                        last.to_f64(),
                        closed.to_f64(),
                        (&last - &closed).to_f64(),
                        if ok { TrialVerdict::Pass } else { TrialVerdict::Fail },
                    ));
                }
            }
            Err(e) => out.push(record(idx, &statement, &inputs, "-", "0", e, TrialVerdict::Undecided)),
        }
    }
    out
}

fn involutions_trial(form: &Arc<FormData>, cfg: &SuiteConfig, idx: usize) -> Vec<TrialRecord> {
    let mut rng = trial_rng(cfg.seed, idx as u64);
    let p = form.p();
    let tag = format!("{idx}");
    let inputs = [tag.as_str()];
    let mut out = Vec::new();
    let kinv = form.involution_k();
    let hinv = form.involution_h();
    for k in 1..=p - 1 {
        let param: Vec<Scalar> = if k <= p - 2 {
            vec![random_scalar(&mut rng, 4, 3)]
        } else {
            (0..form.vj_dim())
                .map(|_| random_scalar(&mut rng, 3, 2))
                .collect()
        };
        let e = crate::pqspace::raw_elementary(form, k, &param);
        let conj_k = &(kinv * &e) * kinv;
        out.push(record(
            idx,
            &format!("involution.K.k{k}"),
            &inputs,
            "K·E·K",
            "Eᵗ",
            "-",
            if conj_k == e.transpose() {
                TrialVerdict::Pass
            } else {
                TrialVerdict::Fail
            },
        ));
        let neg: Vec<Scalar> = param.iter().map(|v| -v).collect();
        let e_neg = crate::pqspace::raw_elementary(form, k, &neg);
        let conj_h = &(hinv * &e) * hinv;
        out.push(record(
            idx,
            &format!("involution.H.k{k}"),
            &inputs,
            "H·E·H",
            "E(−s)",
            "-",
            if conj_h == e_neg {
                TrialVerdict::Pass
            } else {
                TrialVerdict::Fail
            },
        ));
    }
    out
}
