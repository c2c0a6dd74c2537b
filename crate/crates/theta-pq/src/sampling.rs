//! Deterministic randomized inputs for the verification suites.
//!
//! Every trial draws from a counter-based stream: the suite seed picks
//! the ChaCha key and the trial index picks the stream, so trials are
//! reproducible individually and order-independent under parallelism.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::matrix::Matrix;
use crate::positivity::{ConeVariant, ThetaBlock, ThetaCoordinates};
use crate::pqspace::{ConeClass, FormData};
use crate::scalar::Scalar;

/// RNG for one trial of one suite.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Small random rational in [−max, max] with denominator up to `den`.
pub fn random_scalar(rng: &mut ChaCha8Rng, max: i64, den: i64) -> Scalar {
    let n = rng.gen_range(-max..=max);
    let d = rng.gen_range(1..=den);
    Scalar::fraction(n, d)
}

/// Strictly positive random rational.
pub fn random_positive(rng: &mut ChaCha8Rng, max: i64, den: i64) -> Scalar {
    let n = rng.gen_range(1..=max);
    let d = rng.gen_range(1..=den);
    Scalar::fraction(n, d)
}

/// Random vector in the open cone: positive ends, middle shrunk until
/// q_J > 0.
pub fn random_interior_vj(form: &FormData, rng: &mut ChaCha8Rng) -> Vec<Scalar> {
    let m = form.vj_dim();
    loop {
        let mut v = vec![Scalar::zero(); m];
        v[0] = random_positive(rng, 4, 3);
        v[m - 1] = random_positive(rng, 4, 3);
        for vi in v.iter_mut().take(m - 1).skip(1) {
            *vi = random_scalar(rng, 2, 3);
        }
        for _ in 0..8 {
            if form.cone_classify(&v).unwrap() == ConeClass::Interior {
                return v;
            }
            for vi in v.iter_mut().take(m - 1).skip(1) {
                *vi = &*vi * &Scalar::fraction(1, 2);
            }
        }
    }
}

/// Random vector on the cone boundary with nonzero middle block:
/// c = |m|²/(2a) makes q_J vanish exactly.
pub fn random_boundary_vj(form: &FormData, rng: &mut ChaCha8Rng) -> Vec<Scalar> {
    let m = form.vj_dim();
    let mut v = vec![Scalar::zero(); m];
    v[0] = random_positive(rng, 4, 3);
    let mut norm2 = Scalar::zero();
    for vi in v.iter_mut().take(m - 1).skip(1) {
        *vi = random_scalar(rng, 2, 2);
        norm2 += &(&*vi * &*vi);
    }
    // c := |m|²/(2a); degenerate middle gives the ray (a, 0, 0).
    v[m - 1] = norm2 / (Scalar::from_int(2) * &v[0]);
    v
}

/// Random closure vector: interior, boundary, or zero.
pub fn random_closure_vj(form: &FormData, rng: &mut ChaCha8Rng) -> Vec<Scalar> {
    match rng.gen_range(0..4u8) {
        0 => random_boundary_vj(form, rng),
        1 => vec![Scalar::zero(); form.vj_dim()],
        _ => random_interior_vj(form, rng),
    }
}

pub fn random_theta_block(
    form: &FormData,
    rng: &mut ChaCha8Rng,
    variant: ConeVariant,
) -> ThetaBlock {
    let p = form.p();
    let scalars = (0..p - 2)
        .map(|_| match variant {
            ConeVariant::Interior => random_positive(rng, 4, 3),
            ConeVariant::Closure => {
                if rng.gen_bool(0.25) {
                    Scalar::zero()
                } else {
                    random_positive(rng, 4, 3)
                }
            }
        })
        .collect();
    let vector = match variant {
        ConeVariant::Interior => random_interior_vj(form, rng),
        ConeVariant::Closure => random_closure_vj(form, rng),
    };
    ThetaBlock { scalars, vector }
}

pub fn random_theta_coords(
    form: &FormData,
    rng: &mut ChaCha8Rng,
    variant: ConeVariant,
) -> ThetaCoordinates {
    ThetaCoordinates::new(
        (0..form.p() - 1)
            .map(|_| random_theta_block(form, rng, variant))
            .collect(),
    )
}

/// Random exact isometry: a product of elementary matrices with mixed
/// signs and the two involutions.
pub fn random_isometry(form: &FormData, rng: &mut ChaCha8Rng, length: usize) -> Matrix {
    let p = form.p();
    let mut g = Matrix::identity(form.d());
    for _ in 0..length {
        let choice = rng.gen_range(0..=p);
        let factor = if choice == p {
            if rng.gen_bool(0.5) {
                form.involution_k().clone()
            } else {
                form.involution_h().clone()
            }
        } else {
            let k = rng.gen_range(1..=p - 1);
            let e = if k <= p - 2 {
                crate::pqspace::raw_elementary(form, k, &[random_scalar(rng, 3, 2)])
            } else {
                let v: Vec<Scalar> = (0..form.vj_dim())
                    .map(|_| random_scalar(rng, 2, 2))
                    .collect();
                crate::pqspace::raw_elementary(form, k, &v)
            };
            // Transposed elementaries are isometries of the opposite
            // cell; mixing them in makes the products genuinely generic.
            if rng.gen_bool(0.5) {
                e.transpose()
            } else {
                e
            }
        };
        g = &g * &factor;
    }
    g
}
