//! Isotropic subspaces and partial flags.
//!
//! A partial flag stores only its isotropic levels of dimensions
//! 1..p−1; orthogonal levels are always derived by exact kernel
//! computation, never stored, so they cannot drift out of sync. All
//! subspace comparisons go through rank tests because bases are
//! non-canonical.

use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::Error;
use crate::matrix::Matrix;
use crate::pqspace::{symmetric_signature, FormData};
use crate::scalar::Scalar;

// ---------------------------------------------------------------------------
// Span utilities on column-basis matrices.
// ---------------------------------------------------------------------------

/// Basis of the intersection of two column spans.
pub fn intersect_spans(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.rows(), b.rows());
    let all_rows: Vec<usize> = (0..a.rows()).collect();
    if a.cols() == 0 || b.cols() == 0 {
        return a.submatrix(&all_rows, &[]);
    }
    let stacked = a.hstack(&(-b));
    let ker = stacked.kernel();
    if ker.cols() == 0 {
        return a.submatrix(&all_rows, &[]);
    }
    let coeffs = ker.submatrix(
        &(0..a.cols()).collect::<Vec<_>>(),
        &(0..ker.cols()).collect::<Vec<_>>(),
    );
    column_space_basis(&(a * &coeffs))
}

/// Reduce columns to an independent subset spanning the same space.
pub fn column_space_basis(m: &Matrix) -> Matrix {
    let all_rows: Vec<usize> = (0..m.rows()).collect();
    if m.cols() == 0 {
        return m.clone();
    }
    let mut chosen: Vec<usize> = Vec::new();
    for j in 0..m.cols() {
        let mut trial = chosen.clone();
        trial.push(j);
        if m.submatrix(&all_rows, &trial).rank() == trial.len() {
            chosen = trial;
        }
    }
    m.submatrix(&all_rows, &chosen)
}

/// Does the span of `a` contain the span of `b`?
pub fn span_contains(a: &Matrix, b: &Matrix) -> bool {
    if b.cols() == 0 {
        return true;
    }
    a.rank() == a.hstack(b).rank()
}

pub fn spans_equal(a: &Matrix, b: &Matrix) -> bool {
    span_contains(a, b) && span_contains(b, a)
}

// ---------------------------------------------------------------------------
// Isotropic subspaces.
// ---------------------------------------------------------------------------

/// An isotropic k-plane, stored as a d×k column basis.
#[derive(Clone, Debug)]
pub struct IsotropicSubspace {
    form: Arc<FormData>,
    basis: Matrix,
}

impl IsotropicSubspace {
    pub fn new(form: Arc<FormData>, basis: Matrix) -> Result<Self, Error> {
        let d = form.d();
        if basis.rows() != d {
            return Err(Error::Dimension(format!(
                "basis has {} rows, ambient dimension is {d}",
                basis.rows()
            )));
        }
        let k = basis.cols();
        if k == 0 || k > form.p() {
            return Err(Error::Dimension(format!(
                "isotropic subspace dimension {k} out of range 1..={}",
                form.p()
            )));
        }
        if basis.rank() != k {
            return Err(Error::Dimension("basis columns are dependent".into()));
        }
        let gram = &(&basis.transpose() * form.q_form()) * &basis;
        if !gram.is_zero() {
            return Err(Error::NotIsotropic);
        }
        Ok(IsotropicSubspace { form, basis })
    }

    /// Span of a single ambient column vector.
    pub fn line(form: Arc<FormData>, v: &Matrix) -> Result<Self, Error> {
        IsotropicSubspace::new(form, v.clone())
    }

    /// Coordinate line ⟨e_i⟩ (1-indexed).
    pub fn coordinate_line(form: Arc<FormData>, i: usize) -> Result<Self, Error> {
        let d = form.d();
        let v = Matrix::from_fn(d, 1, |r, _| {
            if r == i - 1 {
                Scalar::one()
            } else {
                Scalar::zero()
            }
        });
        IsotropicSubspace::new(form, v)
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn form(&self) -> &Arc<FormData> {
        &self.form
    }

    /// Basis of the Q-orthogonal complement, by exact kernel computation.
    pub fn orthogonal(&self) -> Matrix {
        (&self.basis.transpose() * self.form.q_form()).kernel()
    }

    pub fn equals(&self, other: &IsotropicSubspace) -> bool {
        spans_equal(&self.basis, &other.basis)
    }

    pub fn transform(&self, g: &Matrix) -> Result<IsotropicSubspace, Error> {
        if !self.form.is_isometry(g)? {
            return Err(Error::NotIsometry);
        }
        IsotropicSubspace::new(self.form.clone(), g * &self.basis)
    }
}

/// Exact transversality: V ⋔ W iff the k×k Gram pairing [Q(v_i, w_j)]
/// is nonsingular, equivalently V + W^⊥ is direct.
pub fn transverse(v: &IsotropicSubspace, w: &IsotropicSubspace) -> Result<bool, Error> {
    if v.form().sig() != w.form().sig() {
        return Err(Error::Dimension("subspaces live in different forms".into()));
    }
    if v.dim() != w.dim() {
        return Err(Error::Dimension(format!(
            "transversality needs equal dimensions, got {} and {}",
            v.dim(),
            w.dim()
        )));
    }
    let gram = &(&v.basis.transpose() * v.form.q_form()) * &w.basis;
    Ok(!gram.det()?.is_zero())
}

// ---------------------------------------------------------------------------
// Partial flags.
// ---------------------------------------------------------------------------

/// A partial flag of nested isotropic subspaces of dimensions 1..p−1.
#[derive(Clone, Debug)]
pub struct PartialFlag {
    form: Arc<FormData>,
    levels: Vec<IsotropicSubspace>,
}

/// Wire format for flags: `{p, q, levels: [basis matrices]}`.
#[derive(Serialize, Deserialize)]
pub struct FlagWire {
    pub p: usize,
    pub q: usize,
    pub levels: Vec<Matrix>,
}

impl PartialFlag {
    pub fn from_levels(form: Arc<FormData>, levels: Vec<IsotropicSubspace>) -> Result<Self, Error> {
        if levels.len() != form.p() - 1 {
            return Err(Error::Dimension(format!(
                "flag needs {} levels, got {}",
                form.p() - 1,
                levels.len()
            )));
        }
        for (i, lvl) in levels.iter().enumerate() {
            if lvl.dim() != i + 1 {
                return Err(Error::Dimension(format!(
                    "level {} has dimension {}, expected {}",
                    i + 1,
                    lvl.dim(),
                    i + 1
                )));
            }
        }
        for w in levels.windows(2) {
            if !span_contains(w[1].basis(), w[0].basis()) {
                return Err(Error::Invalid("flag levels are not nested".into()));
            }
        }
        Ok(PartialFlag { form, levels })
    }

    /// Build a flag from a d×(p−1) matrix whose first l columns span
    /// level l.
    pub fn from_full_basis(form: Arc<FormData>, basis: &Matrix) -> Result<Self, Error> {
        let all_rows: Vec<usize> = (0..form.d()).collect();
        let levels = (1..form.p())
            .map(|l| {
                IsotropicSubspace::new(
                    form.clone(),
                    basis.submatrix(&all_rows, &(0..l).collect::<Vec<_>>()),
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        PartialFlag::from_levels(form, levels)
    }

    pub fn form(&self) -> &Arc<FormData> {
        &self.form
    }

    /// Level of dimension l, 1 ≤ l ≤ p−1.
    pub fn level(&self, l: usize) -> &IsotropicSubspace {
        &self.levels[l - 1]
    }

    pub fn levels(&self) -> &[IsotropicSubspace] {
        &self.levels
    }

    pub fn top(&self) -> &IsotropicSubspace {
        self.levels.last().unwrap()
    }

    /// Derived orthogonal (x^j)^⊥ for 0 ≤ j ≤ p−1; j = 0 gives the
    /// whole space.
    pub fn perp_of_level(&self, j: usize) -> Matrix {
        if j == 0 {
            return Matrix::identity(self.form.d());
        }
        self.level(j).orthogonal()
    }

    pub fn transform(&self, g: &Matrix) -> Result<PartialFlag, Error> {
        let levels = self
            .levels
            .iter()
            .map(|l| l.transform(g))
            .collect::<Result<Vec<_>, _>>()?;
        PartialFlag::from_levels(self.form.clone(), levels)
    }

    pub fn equals(&self, other: &PartialFlag) -> bool {
        self.levels
            .iter()
            .zip(&other.levels)
            .all(|(a, b)| a.equals(b))
    }

    pub fn to_wire(&self) -> FlagWire {
        FlagWire {
            p: self.form.p(),
            q: self.form.q(),
            levels: self.levels.iter().map(|l| l.basis().clone()).collect(),
        }
    }

    pub fn from_wire(form: Arc<FormData>, wire: &FlagWire) -> Result<Self, Error> {
        if wire.p != form.p() || wire.q != form.q() {
            return Err(Error::Dimension("wire flag signature mismatch".into()));
        }
        let levels = wire
            .levels
            .iter()
            .map(|b| IsotropicSubspace::new(form.clone(), b.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        PartialFlag::from_levels(form, levels)
    }
}

/// Levelwise transversality of two partial flags.
pub fn transverse_flags(x: &PartialFlag, y: &PartialFlag) -> Result<bool, Error> {
    for l in 1..=x.form().p() - 1 {
        if !transverse(x.level(l), y.level(l))? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The standard flags X (trailing basis vectors) and Z (leading basis
/// vectors): Z^l = ⟨e_1,…,e_l⟩ and X^l = ⟨e_{p+q},…,e_{p+q−l+1}⟩.
pub fn standard_flags(form: &Arc<FormData>) -> (PartialFlag, PartialFlag) {
    let d = form.d();
    let p = form.p();
    let z_basis = Matrix::from_fn(d, p - 1, |i, j| {
        if i == j {
            Scalar::one()
        } else {
            Scalar::zero()
        }
    });
    let x_basis = Matrix::from_fn(d, p - 1, |i, j| {
        if i == d - 1 - j {
            Scalar::one()
        } else {
            Scalar::zero()
        }
    });
    let z = PartialFlag::from_full_basis(form.clone(), &z_basis).expect("standard Z flag");
    let x = PartialFlag::from_full_basis(form.clone(), &x_basis).expect("standard X flag");
    (x, z)
}

/// The (x,k)-hybrid flag: level k of `x` is replaced by
/// `x^{k−1} ⊕ (x^{k+1} ∩ y^{p+q−k})` for k ≤ p−2 and by
/// `x^{p−2} ⊕ (x^{q+2} ∩ y^{p−1})` for k = p−1.
pub fn hybrid(x: &PartialFlag, y: &PartialFlag, k: usize) -> Result<PartialFlag, Error> {
    let p = x.form().p();
    if !(1..=p - 1).contains(&k) {
        return Err(Error::IndexRange {
            k,
            min: 1,
            max: p - 1,
        });
    }
    if !transverse_flags(x, y)? {
        return Err(Error::NotTransverse);
    }
    let line = if k <= p - 2 {
        // x^{k+1} ∩ y^{p+q−k}, with y^{p+q−k} = (y^k)^⊥.
        intersect_spans(x.level(k + 1).basis(), &y.perp_of_level(k))
    } else {
        // x^{q+2} ∩ y^{p−1}, with x^{q+2} = (x^{p−2})^⊥.
        intersect_spans(&x.perp_of_level(p - 2), y.level(p - 1).basis())
    };
    if line.cols() != 1 {
        return Err(Error::IntersectionDim {
            expected: 1,
            got: line.cols(),
        });
    }
    let new_level = if k == 1 {
        line
    } else {
        x.level(k - 1).basis().hstack(&line)
    };
    let mut levels = x.levels().to_vec();
    levels[k - 1] = IsotropicSubspace::new(x.form().clone(), new_level)?;
    PartialFlag::from_levels(x.form().clone(), levels)
}

/// Direct-sum test for property H_k:
/// `x^k + (y^k ∩ z^{p+q−k+1}) + z^{p+q−k−1}` is direct.
pub fn check_hk(
    x: &PartialFlag,
    y: &PartialFlag,
    z: &PartialFlag,
    k: usize,
) -> Result<bool, Error> {
    let p = x.form().p();
    if !(1..=p.saturating_sub(2)).contains(&k) {
        return Err(Error::IndexRange {
            k,
            min: 1,
            max: p.saturating_sub(2),
        });
    }
    for (a, b) in [(x, y), (x, z), (y, z)] {
        if !transverse_flags(a, b)? {
            return Err(Error::NotTransverse);
        }
    }
    // z^{p+q−k+1} = (z^{k−1})^⊥ and z^{p+q−k−1} = (z^{k+1})^⊥.
    let mid = intersect_spans(y.level(k).basis(), &z.perp_of_level(k - 1));
    let tail = z.perp_of_level(k + 1);
    let stacked = x.level(k).basis().hstack(&mid).hstack(&tail);
    let total = x.level(k).dim() + mid.cols() + tail.cols();
    Ok(stacked.rank() == total)
}

// ---------------------------------------------------------------------------
// The quotient x^{q+2}/x^{p−2} with its induced form.
// ---------------------------------------------------------------------------

/// The quotient of x^{q+2} = (x^{p−2})^⊥ by x^{p−2} with its induced
/// non-degenerate form of signature (2, q−p+2). For p = 2 this is the
/// ambient space itself.
#[derive(Clone, Debug)]
pub struct QuotientSpace {
    form: Arc<FormData>,
    base: PartialFlag,
    /// Basis of x^{p−2}; zero columns when p = 2.
    radical: Matrix,
    /// Complement representatives spanning the quotient.
    reps: Matrix,
    /// Gram matrix of the representatives: the induced form.
    induced: Matrix,
}

impl QuotientSpace {
    pub fn base(&self) -> &PartialFlag {
        &self.base
    }

    pub fn induced_form(&self) -> &Matrix {
        &self.induced
    }

    pub fn reps(&self) -> &Matrix {
        &self.reps
    }

    pub fn dim(&self) -> usize {
        self.reps.cols()
    }

    /// Quotient coordinates of an ambient vector lying in x^{q+2}.
    pub fn project(&self, v: &Matrix) -> Result<Matrix, Error> {
        let sys = if self.radical.cols() == 0 {
            self.reps.clone()
        } else {
            self.reps.hstack(&self.radical)
        };
        match sys.solve(v)? {
            Some(sol) => Ok(sol.submatrix(&(0..self.reps.cols()).collect::<Vec<_>>(), &[0])),
            None => Err(Error::Invalid("vector does not lie in x^{q+2}".into())),
        }
    }

    /// Induced pairing of two quotient-coordinate vectors.
    pub fn pair(&self, a: &Matrix, b: &Matrix) -> Scalar {
        let qb = &self.induced * b;
        let mut acc = Scalar::zero();
        for i in 0..self.dim() {
            acc += &(&a[(i, 0)] * &qb[(i, 0)]);
        }
        acc
    }
}

/// Build the quotient space of a flag, verifying the induced signature
/// by exact diagonalisation.
pub fn quotient(x: &PartialFlag) -> Result<QuotientSpace, Error> {
    let form = x.form().clone();
    let d = form.d();
    let p = form.p();
    let all_rows: Vec<usize> = (0..d).collect();
    let (radical, perp) = if p == 2 {
        (Matrix::identity(d).submatrix(&all_rows, &[]), Matrix::identity(d))
    } else {
        (x.level(p - 2).basis().clone(), x.perp_of_level(p - 2))
    };
    // Extend the radical basis to a basis of the perp; the added columns
    // represent the quotient.
    let mut reps_cols: Vec<usize> = Vec::new();
    let mut current = radical.clone();
    for j in 0..perp.cols() {
        let cand = perp.submatrix(&all_rows, &[j]);
        let trial = if current.cols() == 0 {
            cand
        } else {
            current.hstack(&cand)
        };
        if trial.rank() == trial.cols() {
            current = trial;
            reps_cols.push(j);
        }
    }
    let reps = perp.submatrix(&all_rows, &reps_cols);
    let induced = &(&reps.transpose() * form.q_form()) * &reps;
    let expect = (2, form.q() - form.p() + 2);
    if symmetric_signature(&induced) != expect {
        return Err(Error::Invalid(format!(
            "induced form does not have signature {expect:?}"
        )));
    }
    Ok(QuotientSpace {
        form,
        base: x.clone(),
        radical,
        reps,
        induced,
    })
}

/// The projection ξ_x(y) = [y^{p−1} ∩ x^{q+2}] as a line in quotient
/// coordinates; ξ_x(x) = [x^{p−1}].
pub fn project_line(qs: &QuotientSpace, y: &PartialFlag) -> Result<Matrix, Error> {
    let p = qs.form.p();
    let d = qs.form.d();
    let all_rows: Vec<usize> = (0..d).collect();
    let line = if y.equals(&qs.base) {
        // [x^{p−1}]: project the top level into the quotient.
        let top = y.level(p - 1).basis();
        let mut acc: Option<Matrix> = None;
        for j in 0..top.cols() {
            let col = qs.project(&top.submatrix(&all_rows, &[j]))?;
            if col.is_zero() {
                continue;
            }
            acc = Some(match acc {
                None => col,
                Some(prev) => column_space_basis(&prev.hstack(&col)),
            });
        }
        acc.ok_or(Error::IntersectionDim {
            expected: 1,
            got: 0,
        })?
    } else {
        let inter = intersect_spans(y.level(p - 1).basis(), &qs.base.perp_of_level(p.saturating_sub(2)));
        if inter.cols() != 1 {
            return Err(Error::IntersectionDim {
                expected: 1,
                got: inter.cols(),
            });
        }
        qs.project(&inter)?
    };
    if line.cols() != 1 {
        return Err(Error::IntersectionDim {
            expected: 1,
            got: line.cols(),
        });
    }
    // Isotropy of the class is forced; verify exactly anyway.
    if !qs.pair(&line, &line).is_zero() {
        return Err(Error::NotIsotropic);
    }
    Ok(line)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pqspace::build_form;
    use crate::scalar::s;

    fn form(p: usize, q: usize) -> Arc<FormData> {
        Arc::new(build_form(p, q).unwrap())
    }

    #[test]
    fn coordinate_lines_and_transversality() {
        let f = form(3, 4);
        let e1 = IsotropicSubspace::coordinate_line(f.clone(), 1).unwrap();
        let e7 = IsotropicSubspace::coordinate_line(f.clone(), 7).unwrap();
        let e2 = IsotropicSubspace::coordinate_line(f.clone(), 2).unwrap();
        assert!(transverse(&e1, &e7).unwrap());
        assert!(!transverse(&e1, &e1).unwrap());
        assert!(!transverse(&e1, &e2).unwrap());
    }

    #[test]
    fn rejects_non_isotropic() {
        let f = form(2, 3);
        // Q(e_3, e_3) = −1.
        assert!(IsotropicSubspace::coordinate_line(f, 3).is_err());
    }

    #[test]
    fn standard_flags_are_transverse() {
        for (p, q) in [(2, 3), (3, 4), (4, 5)] {
            let f = form(p, q);
            let (x, z) = standard_flags(&f);
            assert!(transverse_flags(&x, &z).unwrap());
            assert!(!transverse_flags(&x, &x).unwrap());
            // X^l ∩ Z^{p+q−l+1} = ⟨e_{p+q−l+1}⟩, Z^{p+q−l+1} = (Z^{l−1})^⊥.
            for l in 1..=p - 1 {
                let inter = intersect_spans(x.level(l).basis(), &z.perp_of_level(l - 1));
                let e = IsotropicSubspace::coordinate_line(f.clone(), p + q - l + 1).unwrap();
                assert!(spans_equal(&inter, e.basis()));
            }
        }
    }

    #[test]
    fn flag_derived_orthogonal_dimensions() {
        let f = form(4, 5);
        let (x, _) = standard_flags(&f);
        for l in 1..=3 {
            assert_eq!(x.perp_of_level(l).cols(), f.d() - l);
        }
    }

    #[test]
    fn hybrid_p2_returns_second_flag() {
        let f = form(2, 3);
        let (x, z) = standard_flags(&f);
        let h = hybrid(&x, &z, 1).unwrap();
        assert!(h.equals(&z));
    }

    #[test]
    fn hybrid_fixture_3_4() {
        let f = form(3, 4);
        let (x, z) = standard_flags(&f);
        let h = hybrid(&x, &z, 1).unwrap();
        let e6 = IsotropicSubspace::coordinate_line(f.clone(), 6).unwrap();
        assert!(h.level(1).equals(&e6));
        assert!(h.level(2).equals(x.level(2)));
    }

    #[test]
    fn hybrid_of_non_transverse_errors() {
        let f = form(3, 4);
        let (x, _) = standard_flags(&f);
        assert!(matches!(hybrid(&x, &x, 1), Err(Error::NotTransverse)));
    }

    #[test]
    fn quotient_signature_and_p2_degenerate() {
        let f = form(3, 4);
        let (x, _) = standard_flags(&f);
        let qs = quotient(&x).unwrap();
        assert_eq!(symmetric_signature(qs.induced_form()), (2, 3));
        // dim x^{q+2} − dim x^{p−2} = (d − 1) − 1 = 5.
        assert_eq!(qs.dim(), 5);

        let f2 = form(2, 3);
        let (x2, _) = standard_flags(&f2);
        let qs2 = quotient(&x2).unwrap();
        assert_eq!(qs2.dim(), 5);
        assert_eq!(*qs2.induced_form(), *f2.q_form());
    }

    #[test]
    fn project_line_fixtures() {
        let f = form(3, 4);
        let (x, z) = standard_flags(&f);
        let qs = quotient(&x).unwrap();
        let own = project_line(&qs, &x).unwrap();
        assert_eq!(own.cols(), 1);
        // ξ_X(Z) is the class of the e_2 direction.
        let img = project_line(&qs, &z).unwrap();
        let e2 = Matrix::from_fn(f.d(), 1, |i, _| if i == 1 { s(1) } else { s(0) });
        let e2q = qs.project(&e2).unwrap();
        assert!(spans_equal(&img, &e2q));
    }

    #[test]
    fn check_hk_on_standard_data() {
        let f = form(3, 4);
        let (x, z) = standard_flags(&f);
        let e = crate::pqspace::raw_elementary(&f, 1, &[s(1)]);
        let e2 = crate::pqspace::raw_elementary(&f, 2, &[s(2), s(1), s(1)]);
        // A full positive product lands in the big cell around X.
        let u = &(&(&e * &e2) * &e) * &e2;
        let y = x.transform(&u).unwrap();
        assert!(transverse_flags(&y, &x).unwrap());
        assert!(check_hk(&x, &y, &z, 1).unwrap());
        assert!(check_hk(&x, &y, &z, 2).is_err()); // k ≤ p−2 = 1
    }

    #[test]
    fn wire_round_trip() {
        let f = form(3, 4);
        let (x, _) = standard_flags(&f);
        let json = serde_json::to_string(&x.to_wire()).unwrap();
        let back: FlagWire = serde_json::from_str(&json).unwrap();
        let y = PartialFlag::from_wire(f, &back).unwrap();
        assert!(x.equals(&y));
    }
}
