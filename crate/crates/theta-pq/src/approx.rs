//! The approximate-real bridge: certified eigenvalue moduli.
//!
//! All inequality checks in this crate compare exact rationals, so the
//! only approximate quantities are eigenvalue moduli of group elements.
//! They are produced here with rigorous error bounds:
//!
//! 1. the characteristic polynomial is computed exactly
//!    (Faddeev–LeVerrier over the rationals),
//! 2. an exact square-free decomposition (Yun) pins multiplicities,
//! 3. rational roots are recognised exactly (float root, rationalise,
//!    verify by exact evaluation, deflate exactly),
//! 4. the remaining roots come from a Durand–Kerner pass whose result
//!    is certified a posteriori: each approximation `z_i` receives the
//!    radius `n·|f(z_i)| / prod_{j≠i}|z_i−z_j|`, evaluated with exact
//!    rational upper/lower bounds; the union of those disks contains
//!    every root, so pairwise disjoint disks isolate one root each and
//!    overlapping disks get merged into a common, coarser interval.
//!
//! Rational roots produce point intervals, which is what makes the
//! zero-tolerance verification rows for exactly-diagonalisable elements
//! possible.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// A double together with a certified absolute tolerance. Values whose
/// intervals overlap are indistinguishable.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ApproxReal {
    pub value: f64,
    pub abs_tol: f64,
}

/// A closed interval with exact rational endpoints, the internal
/// currency of every certified spectral bound.
#[derive(Clone, Debug, PartialEq)]
pub struct RatInterval {
    pub lo: Scalar,
    pub hi: Scalar,
}

impl RatInterval {
    pub fn point(v: Scalar) -> Self {
        RatInterval {
            lo: v.clone(),
            hi: v,
        }
    }

    pub fn new(lo: Scalar, hi: Scalar) -> Self {
        assert!(lo <= hi, "inverted interval");
        RatInterval { lo, hi }
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> Scalar {
        &self.hi - &self.lo
    }

    pub fn mid(&self) -> Scalar {
        (&self.lo + &self.hi) * Scalar::fraction(1, 2)
    }

    pub fn add(&self, other: &RatInterval) -> RatInterval {
        RatInterval::new(&self.lo + &other.lo, &self.hi + &other.hi)
    }

    pub fn sub(&self, other: &RatInterval) -> RatInterval {
        RatInterval::new(&self.lo - &other.hi, &self.hi - &other.lo)
    }

    pub fn mul(&self, other: &RatInterval) -> RatInterval {
        let candidates = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = candidates.iter().cloned().reduce(Scalar::min).unwrap();
        let hi = candidates.into_iter().reduce(Scalar::max).unwrap();
        RatInterval::new(lo, hi)
    }

    /// Reciprocal of an interval that does not contain zero.
    pub fn recip(&self) -> RatInterval {
        assert!(
            self.lo.is_positive() || self.hi.is_negative(),
            "interval contains zero"
        );
        RatInterval::new(self.hi.recip(), self.lo.recip())
    }

    pub fn div(&self, other: &RatInterval) -> RatInterval {
        self.mul(&other.recip())
    }

    pub fn neg(&self) -> RatInterval {
        RatInterval::new(-&self.hi, -&self.lo)
    }

    pub fn abs(&self) -> RatInterval {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            self.neg()
        } else {
            RatInterval::new(Scalar::zero(), self.lo.abs().max(self.hi.abs()))
        }
    }

    pub fn powi(&self, n: u32) -> RatInterval {
        let mut out = RatInterval::point(Scalar::one());
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Certainly strictly less than `other`.
    pub fn lt(&self, other: &RatInterval) -> bool {
        self.hi < other.lo
    }

    pub fn to_approx(&self) -> ApproxReal {
        let mid = self.mid().to_f64();
        // Generous cover for the rational-to-double rounding.
        let rad = self.width().to_f64() * 0.5 * (1.0 + 1e-12) + f64::EPSILON * mid.abs();
        ApproxReal {
            value: mid,
            abs_tol: rad,
        }
    }
}

/// Rigorous enclosure of sqrt(x) with width at most `tol`.
///
/// One rational Newton step from any positive seed lands above the root
/// (AM-GM) and `x/hi` is then below it; steps are interleaved with
/// outward re-rounding so denominators stay small.
pub fn sqrt_interval(x: &Scalar, tol: &Scalar) -> RatInterval {
    assert!(!x.is_negative(), "sqrt of negative rational");
    assert!(tol.is_positive());
    if x.is_zero() {
        return RatInterval::point(Scalar::zero());
    }
    let seed = x.to_f64().sqrt();
    let mut hi = Scalar::from_f64(seed.max(f64::MIN_POSITIVE))
        .filter(|s| s.is_positive())
        .unwrap_or_else(Scalar::one);
    let half = Scalar::fraction(1, 2);
    for _ in 0..64 {
        hi = (&hi + &(x / &hi)) * &half; // now hi >= sqrt(x)
        let lo = x / &hi;
        if &hi - &lo <= *tol {
            return RatInterval::new(lo, hi);
        }
        let rounded = hi.simplest_within(&(tol * &Scalar::fraction(1, 4)));
        if &rounded * &rounded >= *x {
            hi = rounded;
        }
    }
    let lo = x / &hi;
    RatInterval::new(lo, hi)
}

/// Enclosure of |a + bi|.
pub fn complex_abs_interval(re: &Scalar, im: &Scalar, tol: &Scalar) -> RatInterval {
    sqrt_interval(&(re * re + im * im), tol)
}

// ---------------------------------------------------------------------------
// Exact polynomials (ascending coefficients).
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct Poly(pub Vec<Scalar>);

impl Poly {
    pub fn new(mut coeffs: Vec<Scalar>) -> Self {
        while coeffs.len() > 1 && coeffs.last().unwrap().is_zero() {
            coeffs.pop();
        }
        Poly(coeffs)
    }

    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Scalar::is_zero)
    }

    pub fn leading(&self) -> &Scalar {
        self.0.last().unwrap()
    }

    pub fn monic(&self) -> Poly {
        let lc = self.leading().clone();
        Poly::new(self.0.iter().map(|c| c / &lc).collect())
    }

    pub fn eval(&self, x: &Scalar) -> Scalar {
        let mut acc = Scalar::zero();
        for c in self.0.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Exact evaluation at a complex rational point; returns (re, im).
    pub fn eval_complex(&self, re: &Scalar, im: &Scalar) -> (Scalar, Scalar) {
        let mut acc_re = Scalar::zero();
        let mut acc_im = Scalar::zero();
        for c in self.0.iter().rev() {
            let new_re = &acc_re * re - &acc_im * im + c;
            let new_im = &acc_re * im + &acc_im * re;
            acc_re = new_re;
            acc_im = new_im;
        }
        (acc_re, acc_im)
    }

    pub fn derivative(&self) -> Poly {
        if self.is_constant() {
            return Poly::new(vec![Scalar::zero()]);
        }
        Poly::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| Scalar::from_int(i as i64) * c)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        let zero = Scalar::zero();
        Poly::new(
            (0..n)
                .map(|i| self.0.get(i).unwrap_or(&zero) - other.0.get(i).unwrap_or(&zero))
                .collect(),
        )
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![Scalar::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += &(a * b);
            }
        }
        Poly::new(out)
    }

    /// Euclidean division; returns (quotient, remainder).
    pub fn div_rem(&self, divisor: &Poly) -> (Poly, Poly) {
        assert!(!divisor.leading().is_zero());
        let mut rem = self.0.clone();
        let dn = divisor.degree();
        if self.degree() < dn {
            return (Poly::new(vec![Scalar::zero()]), Poly::new(rem));
        }
        let mut quot = vec![Scalar::zero(); self.degree() - dn + 1];
        for k in (0..quot.len()).rev() {
            let c = &rem[k + dn] / divisor.leading();
            if !c.is_zero() {
                for (i, d) in divisor.0.iter().enumerate() {
                    let v = &rem[k + i] - &(&c * d);
                    rem[k + i] = v;
                }
            }
            quot[k] = c;
        }
        rem.truncate(dn.max(1));
        (Poly::new(quot), Poly::new(rem))
    }

    pub fn div_exact(&self, divisor: &Poly) -> Poly {
        let (q, r) = self.div_rem(divisor);
        assert!(r.is_zero(), "inexact polynomial division");
        q
    }

    /// Monic gcd by the Euclidean algorithm.
    pub fn gcd(&self, other: &Poly) -> Poly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            a.monic()
        }
    }

    /// Deflate an exact root: divide by (x − r).
    pub fn deflate(&self, root: &Scalar) -> Poly {
        self.div_exact(&Poly::new(vec![-root, Scalar::one()]))
    }

    /// Square-free decomposition (Yun): `(factor, multiplicity)` pairs
    /// with `self = lc · prod factor_i^multiplicity_i`.
    pub fn square_free(&self) -> Vec<(Poly, usize)> {
        let p = self.monic();
        let dp = p.derivative();
        let g = p.gcd(&dp);
        if g.is_constant() {
            return vec![(p, 1)];
        }
        let mut out = Vec::new();
        let mut v = p.div_exact(&g);
        let mut w = dp.div_exact(&g);
        let mut i = 1;
        loop {
            let diff = w.sub(&v.derivative());
            let h = v.gcd(&diff);
            if !h.is_constant() {
                out.push((h.clone(), i));
            }
            v = v.div_exact(&h);
            w = diff.div_exact(&h);
            i += 1;
            if v.is_constant() {
                break;
            }
        }
        out
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(Scalar::to_f64).collect()
    }
}

/// Exact characteristic polynomial det(xI − A) via Faddeev–LeVerrier.
pub fn char_poly(a: &Matrix) -> Result<Poly, Error> {
    if !a.is_square() {
        return Err(Error::NonSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    let mut coeffs = vec![Scalar::zero(); n + 1];
    coeffs[n] = Scalar::one();
    let mut m = a.clone();
    for k in 1..=n {
        if k > 1 {
            let mut shifted = m.clone();
            for i in 0..n {
                shifted[(i, i)] += &coeffs[n - k + 1];
            }
            m = a * &shifted;
        }
        coeffs[n - k] = -(m.trace() / Scalar::from_int(k as i64));
    }
    Ok(Poly::new(coeffs))
}

// ---------------------------------------------------------------------------
// Durand-Kerner with a posteriori certification.
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
struct C64 {
    re: f64,
    im: f64,
}

impl C64 {
    fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }
    fn sub(self, o: C64) -> C64 {
        C64 {
            re: self.re - o.re,
            im: self.im - o.im,
        }
    }
    fn mul(self, o: C64) -> C64 {
        C64 {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }
    fn div(self, o: C64) -> C64 {
        let d = o.re * o.re + o.im * o.im;
        C64 {
            re: (self.re * o.re + self.im * o.im) / d,
            im: (self.im * o.re - self.re * o.im) / d,
        }
    }
}

fn eval_c(coeffs: &[f64], z: C64) -> C64 {
    let mut acc = C64 { re: 0.0, im: 0.0 };
    for &c in coeffs.iter().rev() {
        acc = acc.mul(z);
        acc.re += c;
    }
    acc
}

/// Durand-Kerner on an exact polynomial made monic; returns float
/// approximations to all complex roots.
fn durand_kerner(poly: &Poly) -> Result<Vec<C64>, Error> {
    let monic = poly.monic();
    let coeffs = monic.to_f64();
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::EigenNoConvergence);
    }
    let n = monic.degree();
    let radius = 1.0 + coeffs[..n].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut roots: Vec<C64> = (0..n)
        .map(|i| {
            let theta = 2.0 * std::f64::consts::PI * (i as f64) / (n as f64) + 0.4;
            C64 {
                re: radius * 0.7 * theta.cos(),
                im: radius * 0.7 * theta.sin(),
            }
        })
        .collect();
    for _ in 0..1000 {
        let mut max_step = 0.0f64;
        for i in 0..n {
            let mut denom = C64 { re: 1.0, im: 0.0 };
            for j in 0..n {
                if j != i {
                    denom = denom.mul(roots[i].sub(roots[j]));
                }
            }
            if denom.abs() == 0.0 {
                roots[i].re += 1e-6 * (i as f64 + 1.0);
                continue;
            }
            let step = eval_c(&coeffs, roots[i]).div(denom);
            roots[i] = roots[i].sub(step);
            max_step = max_step.max(step.abs());
        }
        if max_step < 1e-14 * radius.max(1.0) {
            return Ok(roots);
        }
    }
    Err(Error::EigenNoConvergence)
}

/// A certified root modulus with its multiplicity in the original
/// polynomial.
#[derive(Clone, Debug)]
pub struct CertifiedModulus {
    pub modulus: RatInterval,
    pub multiplicity: usize,
}

/// Certified enclosures for the moduli of all complex roots of an exact
/// polynomial, multiplicities included.
pub fn certified_root_moduli(poly: &Poly, tol: &Scalar) -> Result<Vec<CertifiedModulus>, Error> {
    let mut out = Vec::new();
    for (factor, mult) in poly.square_free() {
        for modulus in certified_moduli_square_free(&factor, tol)? {
            out.push(CertifiedModulus {
                modulus,
                multiplicity: mult,
            });
        }
    }
    Ok(out)
}

fn certified_moduli_square_free(factor: &Poly, tol: &Scalar) -> Result<Vec<RatInterval>, Error> {
    let mut f = factor.monic();
    let mut moduli = Vec::new();

    // Peel off exact rational roots: rationalise float roots and test by
    // exact evaluation.
    'peel: loop {
        if f.degree() == 0 {
            return Ok(moduli);
        }
        let approx = durand_kerner(&f)?;
        for z in &approx {
            if z.im.abs() > 1e-7 {
                continue;
            }
            let Some(re) = Scalar::from_f64(z.re) else {
                continue;
            };
            for cap in [1e-12, 1e-9, 1e-6] {
                let cand = re.simplest_within(&Scalar::from_f64(cap).unwrap());
                if f.eval(&cand).is_zero() {
                    moduli.push(RatInterval::point(cand.abs()));
                    f = f.deflate(&cand);
                    continue 'peel;
                }
            }
        }
        break;
    }
    if f.degree() == 0 {
        return Ok(moduli);
    }

    // Certify the irrational remainder with Smith disks.
    let approx = durand_kerner(&f)?;
    let n = f.degree();
    let points: Vec<(Scalar, Scalar)> = approx
        .iter()
        .map(|z| {
            (
                Scalar::from_f64(z.re).unwrap_or_else(Scalar::zero),
                Scalar::from_f64(z.im).unwrap_or_else(Scalar::zero),
            )
        })
        .collect();
    let mut radii = Vec::with_capacity(n);
    for i in 0..n {
        let (vre, vim) = f.eval_complex(&points[i].0, &points[i].1);
        // |f(z_i)| <= |re| + |im|.
        let num = vre.abs() + vim.abs();
        // prod |z_i − z_j| >= prod max(|d_re|, |d_im|).
        let mut denom = Scalar::one();
        for j in 0..n {
            if j == i {
                continue;
            }
            let dre = (&points[i].0 - &points[j].0).abs();
            let dim = (&points[i].1 - &points[j].1).abs();
            let m = dre.max(dim);
            if m.is_zero() {
                return Err(Error::EigenNoConvergence);
            }
            denom = denom * m;
        }
        radii.push(Scalar::from_int(n as i64) * num / denom);
    }

    // Merge overlapping disks (union-find on a rigorous disjointness
    // test: disks are surely disjoint when r_i + r_j < max-coordinate
    // distance, a lower bound for |z_i − z_j|).
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    for i in 0..n {
        for j in i + 1..n {
            let dre = (&points[i].0 - &points[j].0).abs();
            let dim = (&points[i].1 - &points[j].1).abs();
            let center_lower = dre.max(dim);
            if !(&radii[i] + &radii[j] < center_lower) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let q = tol * &Scalar::fraction(1, 4);
    let abs_ints: Vec<RatInterval> = (0..n)
        .map(|i| complex_abs_interval(&points[i].0, &points[i].1, &q))
        .collect();
    for i in 0..n {
        let my = find(&mut parent, i);
        let mut lo: Option<Scalar> = None;
        let mut hi: Option<Scalar> = None;
        for j in 0..n {
            if find(&mut parent, j) != my {
                continue;
            }
            let l = &abs_ints[j].lo - &radii[j];
            let h = &abs_ints[j].hi + &radii[j];
            lo = Some(match lo {
                Some(v) => v.min(l),
                None => l,
            });
            hi = Some(match hi {
                Some(v) => v.max(h),
                None => h,
            });
        }
        let lo = lo.unwrap().max(Scalar::zero());
        moduli.push(RatInterval::new(lo, hi.unwrap()));
    }
    Ok(moduli)
}

/// Moduli of all eigenvalues sorted non-increasingly, each with a
/// certified absolute tolerance.
pub fn eigen_moduli(m: &Matrix, tol: &Scalar) -> Result<Vec<ApproxReal>, Error> {
    Ok(eigen_moduli_intervals(m, tol)?
        .into_iter()
        .map(|iv| iv.to_approx())
        .collect())
}

/// Interval version of [`eigen_moduli`], used by everything that needs
/// rigorous comparisons downstream.
pub fn eigen_moduli_intervals(m: &Matrix, tol: &Scalar) -> Result<Vec<RatInterval>, Error> {
    let cp = char_poly(m)?;
    let mut all = Vec::new();
    for cm in certified_root_moduli(&cp, tol)? {
        for _ in 0..cm.multiplicity {
            all.push(cm.modulus.clone());
        }
    }
    all.sort_by(|a, b| b.mid().cmp(&a.mid()));
    Ok(all)
}

/// Partial-pivot f64 solver for the spectral bridge (inverse iteration).
/// Accuracy here never affects soundness: every downstream certificate
/// is exact.
pub fn solve_f64(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    let mut aug: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    for k in 0..n {
        let (piv, max) = (k..n)
            .map(|i| (i, aug[i][k].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))?;
        if max < 1e-300 {
            return None;
        }
        aug.swap(k, piv);
        for i in k + 1..n {
            let f = aug[i][k] / aug[k][k];
            for j in k..=n {
                aug[i][j] -= f * aug[k][j];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = aug[i][n];
        for j in i + 1..n {
            s -= aug[i][j] * x[j];
        }
        x[i] = s / aug[i][i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{s, sf};

    fn tol() -> Scalar {
        Scalar::fraction(1, 10_000_000_000)
    }

    #[test]
    fn char_poly_companion() {
        // Companion matrix of x^2 - 3x + 2.
        let m = Matrix::from_i64(&[&[0, -2], &[1, 3]]);
        let cp = char_poly(&m).unwrap();
        assert_eq!(cp.0, vec![s(2), s(-3), s(1)]);
    }

    #[test]
    fn eigen_moduli_diagonal_exact() {
        let m = Matrix::from_rows(vec![
            vec![s(4), s(0), s(0), s(0), s(0)],
            vec![s(0), s(2), s(0), s(0), s(0)],
            vec![s(0), s(0), s(1), s(0), s(0)],
            vec![s(0), s(0), s(0), sf(1, 2), s(0)],
            vec![s(0), s(0), s(0), s(0), sf(1, 4)],
        ]);
        let mods = eigen_moduli_intervals(&m, &tol()).unwrap();
        let expected = [s(4), s(2), s(1), sf(1, 2), sf(1, 4)];
        assert_eq!(mods.len(), 5);
        for (iv, e) in mods.iter().zip(expected) {
            assert!(iv.is_point());
            assert_eq!(iv.lo, e);
        }
    }

    #[test]
    fn eigen_moduli_rotation() {
        let m = Matrix::from_i64(&[&[0, -1], &[1, 0]]);
        let mods = eigen_moduli_intervals(&m, &tol()).unwrap();
        assert_eq!(mods.len(), 2);
        for iv in mods {
            assert!(iv.lo <= s(1) && s(1) <= iv.hi);
            assert!(iv.width() < sf(1, 1000));
        }
    }

    #[test]
    fn eigen_moduli_companion() {
        let m = Matrix::from_i64(&[&[0, -2], &[1, 3]]);
        let mods = eigen_moduli_intervals(&m, &tol()).unwrap();
        assert!(mods[0].is_point() && mods[0].lo == s(2));
        assert!(mods[1].is_point() && mods[1].lo == s(1));
    }

    #[test]
    fn eigen_moduli_irrational_certified() {
        // x^2 - 3x + 1: roots (3 ± sqrt 5)/2.
        let m = Matrix::from_i64(&[&[0, -1], &[1, 3]]);
        let mods = eigen_moduli_intervals(&m, &tol()).unwrap();
        let golden = (3.0 + 5.0f64.sqrt()) / 2.0;
        assert!((mods[0].mid().to_f64() - golden).abs() < 1e-9);
        assert!(mods[0].width() < sf(1, 1_000_000));
        // Certified product of a reciprocal pair encloses 1.
        let prod = mods[0].mul(&mods[1]);
        assert!(prod.lo <= s(1) && s(1) <= prod.hi);
    }

    #[test]
    fn square_free_splits_multiplicities() {
        // (x-1)^2 (x-2)
        let p = Poly::new(vec![s(-2), s(5), s(-4), s(1)]);
        assert_eq!(p.square_free().len(), 2);
        let mods = certified_root_moduli(&p, &tol()).unwrap();
        let mut flat: Vec<(String, usize)> = mods
            .iter()
            .map(|c| (c.modulus.lo.to_string(), c.multiplicity))
            .collect();
        flat.sort();
        assert_eq!(flat, vec![("1".to_string(), 2), ("2".to_string(), 1)]);
    }

    #[test]
    fn sqrt_interval_encloses() {
        let iv = sqrt_interval(&s(2), &tol());
        assert!(&iv.lo * &iv.lo <= s(2));
        assert!(&iv.hi * &iv.hi >= s(2));
        assert!(iv.width() <= tol());
    }
}
