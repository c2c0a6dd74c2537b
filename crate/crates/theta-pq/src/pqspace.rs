//! The standard quadratic space of signature (p,q).
//!
//! The form is kept in the block shape
//!
//! ```text
//!         ┌ 0   0   C ┐
//!     Q = │ 0   J   0 │
//!         └ Cᵗ  0   0 ┘
//! ```
//!
//! where `C` is the (p−1)×(p−1) antidiagonal with `C[l, p−l] = (−1)^{p−l}`
//! (1-indexed) and `J` is the (q−p+2)×(q−p+2) block with 1 in the two
//! antidiagonal corners and `−Id` in the middle. The subspace `V_J`
//! spanned by the middle coordinates carries the bilinear form
//! `b_J(w,z) = ½ wᵗJz` of signature (1, q−p+1) and its cone of positive
//! vectors with positive first entry. The alternating corner signs of
//! `C` are exactly what makes every elementary matrix an exact
//! Q-isometry; the build verifies this rather than assuming it.
//!
//! Coordinates of `V_J` are indexed by the ambient basis vectors
//! `e_p, …, e_{q+1}`; the first cone inequality constrains the `e_p`
//! coordinate. (The variable names `w_{p−1}, …` seen elsewhere for the
//! same cone refer to these coordinates as well.)

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Signature (p,q) with 2 ≤ p < q.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub p: usize,
    pub q: usize,
}

impl Signature {
    pub fn new(p: usize, q: usize) -> Result<Self, Error> {
        if p < 2 || q <= p {
            return Err(Error::Signature { p, q });
        }
        Ok(Signature { p, q })
    }

    /// Ambient dimension p+q.
    pub fn d(&self) -> usize {
        self.p + self.q
    }

    /// Dimension q−p+2 of V_J.
    pub fn vj_dim(&self) -> usize {
        self.q - self.p + 2
    }
}

/// Cone position of a V_J vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConeClass {
    Interior,
    Boundary,
    Outside,
}

/// The standard form of signature (p,q) with its distinguished blocks
/// and the two involutions used by the transpose/inverse normal forms.
#[derive(Clone, Debug, Serialize)]
pub struct FormData {
    #[serde(flatten)]
    sig: Signature,
    #[serde(rename = "Q")]
    q_mat: Matrix,
    #[serde(rename = "J")]
    j_mat: Matrix,
    #[serde(rename = "K")]
    corner: Matrix,
    #[serde(skip)]
    inv_k: Matrix,
    #[serde(skip)]
    inv_h: Matrix,
}

impl<'de> Deserialize<'de> for FormData {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error as DeError;
        #[derive(Deserialize)]
        struct Wire {
            p: usize,
            q: usize,
            #[serde(rename = "Q")]
            q_mat: Option<Matrix>,
        }
        let wire = Wire::deserialize(deserializer)?;
        let sig = Signature::new(wire.p, wire.q).map_err(D::Error::custom)?;
        let form = FormData::build(sig).map_err(D::Error::custom)?;
        if let Some(q_mat) = wire.q_mat {
            if q_mat != form.q_mat {
                return Err(D::Error::custom(
                    "serialized Q does not match the standard form for (p,q)",
                ));
            }
        }
        Ok(form)
    }
}

/// Congruence-diagonalise a symmetric matrix exactly; returns the
/// diagonal entries of DᵗAD for some invertible D.
pub(crate) fn congruence_diagonal(a: &Matrix) -> Vec<Scalar> {
    assert!(a.is_square());
    let n = a.rows();
    let mut m = a.clone();
    for k in 0..n {
        if m[(k, k)].is_zero() {
            // Prefer a symmetric swap with a later nonzero diagonal.
            if let Some(i) = (k + 1..n).find(|&i| !m[(i, i)].is_zero()) {
                sym_swap(&mut m, k, i);
            } else if let Some(j) = (k + 1..n).find(|&j| !m[(k, j)].is_zero()) {
                // All-diagonal-zero case: add row/col j into k.
                sym_add(&mut m, k, j);
            } else {
                continue; // zero row: contributes a 0 diagonal entry
            }
        }
        let pivot = m[(k, k)].clone();
        for i in k + 1..n {
            if m[(i, k)].is_zero() {
                continue;
            }
            let f = -&(&m[(i, k)] / &pivot);
            // row_i += f·row_k; col_i += f·col_k (congruence)
            for j in 0..n {
                let v = &m[(i, j)] + &(&f * &m[(k, j)]);
                m[(i, j)] = v;
            }
            for j in 0..n {
                let v = &m[(j, i)] + &(&f * &m[(j, k)]);
                m[(j, i)] = v;
            }
        }
    }
    (0..n).map(|i| m[(i, i)].clone()).collect()
}

fn sym_swap(m: &mut Matrix, a: usize, b: usize) {
    let n = m.rows();
    for j in 0..n {
        let (x, y) = (m[(a, j)].clone(), m[(b, j)].clone());
        m[(a, j)] = y;
        m[(b, j)] = x;
    }
    for i in 0..n {
        let (x, y) = (m[(i, a)].clone(), m[(i, b)].clone());
        m[(i, a)] = y;
        m[(i, b)] = x;
    }
}

fn sym_add(m: &mut Matrix, a: usize, b: usize) {
    let n = m.rows();
    for j in 0..n {
        let v = &m[(a, j)] + &m[(b, j)];
        m[(a, j)] = v;
    }
    for i in 0..n {
        let v = &m[(i, a)] + &m[(i, b)];
        m[(i, a)] = v;
    }
}

/// Signature (positives, negatives) of a symmetric matrix, exact.
pub(crate) fn symmetric_signature(a: &Matrix) -> (usize, usize) {
    let diag = congruence_diagonal(a);
    let pos = diag.iter().filter(|d| d.is_positive()).count();
    let neg = diag.iter().filter(|d| d.is_negative()).count();
    (pos, neg)
}

/// Elementary matrix without validation; shared with the positivity
/// module which wraps it behind parameter checks.
pub(crate) fn raw_elementary(f: &FormData, k: usize, param: &[Scalar]) -> Matrix {
    let (p, d) = (f.sig.p, f.sig.d());
    assert!((1..=p - 1).contains(&k));
    let mut m = Matrix::identity(d);
    if k <= p - 2 {
        assert_eq!(param.len(), 1);
        let s = &param[0];
        m[(k - 1, k)] = s.clone(); // (k, k+1) in math indexing
        m[(d - k - 1, d - k)] = s.clone(); // (d−k, d−k+1)
    } else {
        assert_eq!(param.len(), f.sig.vj_dim());
        let row = p - 2; // math row p−1
        let col_qj = f.sig.q + 1; // math column q+2
        for (j, sj) in param.iter().enumerate() {
            m[(row, p - 1 + j)] = sj.clone();
        }
        m[(row, col_qj)] = f.qj(param).unwrap();
        let js = f.j_apply(param);
        for (j, v) in js.iter().enumerate() {
            m[(p - 1 + j, col_qj)] = v.clone();
        }
    }
    m
}

impl FormData {
    /// Assemble the standard form and both involutions, verifying the
    /// signature and every defining identity exactly.
    pub fn build(sig: Signature) -> Result<Self, Error> {
        let (p, q, d) = (sig.p, sig.q, sig.d());
        let m = sig.vj_dim();

        let mut corner = Matrix::zeros(p - 1, p - 1);
        for l in 1..=p - 1 {
            // C[l, p−l] = (−1)^{p−l}, 1-indexed.
            let sign = if (p - l) % 2 == 0 { 1 } else { -1 };
            corner[(l - 1, p - l - 1)] = Scalar::from_int(sign);
        }

        let mut j_mat = Matrix::zeros(m, m);
        j_mat[(0, m - 1)] = Scalar::one();
        j_mat[(m - 1, 0)] = Scalar::one();
        for i in 1..m - 1 {
            j_mat[(i, i)] = Scalar::from_int(-1);
        }

        let mut q_mat = Matrix::zeros(d, d);
        for i in 0..p - 1 {
            for j in 0..p - 1 {
                q_mat[(i, q + 1 + j)] = corner[(i, j)].clone();
                q_mat[(q + 1 + j, i)] = corner[(i, j)].clone();
            }
        }
        for a in 0..m {
            for b in 0..m {
                q_mat[(p - 1 + a, p - 1 + b)] = j_mat[(a, b)].clone();
            }
        }

        if q_mat != q_mat.transpose() {
            return Err(Error::Invalid("assembled form is not symmetric".into()));
        }
        if symmetric_signature(&q_mat) != (p, q) {
            return Err(Error::Invalid(format!(
                "assembled form does not have signature ({p},{q})"
            )));
        }

        let mut f = FormData {
            sig,
            q_mat,
            j_mat,
            corner,
            inv_k: Matrix::identity(d),
            inv_h: Matrix::identity(d),
        };
        f.inv_k = f.search_involution_k()?;
        f.inv_h = f.search_involution_h()?;
        Ok(f)
    }

    pub fn sig(&self) -> Signature {
        self.sig
    }

    pub fn p(&self) -> usize {
        self.sig.p
    }

    pub fn q(&self) -> usize {
        self.sig.q
    }

    pub fn d(&self) -> usize {
        self.sig.d()
    }

    pub fn vj_dim(&self) -> usize {
        self.sig.vj_dim()
    }

    pub fn q_form(&self) -> &Matrix {
        &self.q_mat
    }

    pub fn j_block(&self) -> &Matrix {
        &self.j_mat
    }

    pub fn corner_block(&self) -> &Matrix {
        &self.corner
    }

    /// Q(e_l, e_{d+1−l}) for 1 ≤ l ≤ p−1 (math indexing).
    pub fn corner_sign(&self, l: usize) -> Scalar {
        assert!((1..=self.sig.p - 1).contains(&l));
        self.q_mat[(l - 1, self.sig.d() - l)].clone()
    }

    /// Q(u, v) for ambient column vectors.
    pub fn pair(&self, u: &Matrix, v: &Matrix) -> Scalar {
        let qv = &self.q_mat * v;
        let mut acc = Scalar::zero();
        for i in 0..self.sig.d() {
            acc += &(&u[(i, 0)] * &qv[(i, 0)]);
        }
        acc
    }

    fn check_vj(&self, s: &[Scalar]) -> Result<(), Error> {
        if s.len() != self.sig.vj_dim() {
            return Err(Error::Dimension(format!(
                "V_J vector has length {}, expected {}",
                s.len(),
                self.sig.vj_dim()
            )));
        }
        Ok(())
    }

    /// q_J(s) = ½ sᵗJs; for s = (a, m, c) this is a·c − |m|²/2.
    pub fn qj(&self, s: &[Scalar]) -> Result<Scalar, Error> {
        self.bj(s, s)
    }

    /// b_J(s,t) = ½ sᵗJt, symmetric in its arguments.
    pub fn bj(&self, s: &[Scalar], t: &[Scalar]) -> Result<Scalar, Error> {
        self.check_vj(s)?;
        self.check_vj(t)?;
        let m = self.sig.vj_dim();
        let mut acc = &s[0] * &t[m - 1] + &s[m - 1] * &t[0];
        for i in 1..m - 1 {
            acc -= &(&s[i] * &t[i]);
        }
        Ok(acc * Scalar::fraction(1, 2))
    }

    /// J applied to a V_J vector: (a, m, c) ↦ (c, −m, a).
    pub fn j_apply(&self, s: &[Scalar]) -> Vec<Scalar> {
        let m = self.sig.vj_dim();
        let mut out = vec![Scalar::zero(); m];
        out[0] = s[m - 1].clone();
        out[m - 1] = s[0].clone();
        for i in 1..m - 1 {
            out[i] = -&s[i];
        }
        out
    }

    pub fn cone_classify(&self, s: &[Scalar]) -> Result<ConeClass, Error> {
        self.check_vj(s)?;
        if !s[0].is_positive() {
            return Ok(ConeClass::Outside);
        }
        let qj = self.qj(s)?;
        Ok(if qj.is_positive() {
            ConeClass::Interior
        } else if qj.is_zero() {
            ConeClass::Boundary
        } else {
            ConeClass::Outside
        })
    }

    /// Interior or boundary of the cone (its partial closure).
    pub fn in_cone_closure(&self, s: &[Scalar]) -> Result<bool, Error> {
        Ok(matches!(
            self.cone_classify(s)?,
            ConeClass::Interior | ConeClass::Boundary
        ))
    }

    /// Embed a V_J vector into the ambient space as a column.
    pub fn embed_vj(&self, s: &[Scalar]) -> Matrix {
        let d = self.sig.d();
        let mut v = Matrix::zeros(d, 1);
        for (i, si) in s.iter().enumerate() {
            v[(self.sig.p - 1 + i, 0)] = si.clone();
        }
        v
    }

    /// Exact isometry test gᵗQg = Q.
    pub fn is_isometry(&self, g: &Matrix) -> Result<bool, Error> {
        let d = self.sig.d();
        if g.rows() != d || g.cols() != d {
            return Err(Error::Dimension(format!(
                "expected {d}x{d} matrix, got {}x{}",
                g.rows(),
                g.cols()
            )));
        }
        Ok(&(&g.transpose() * &self.q_mat) * g == self.q_mat)
    }

    /// The involution exchanging the standard flags and conjugating
    /// every elementary matrix to its transpose.
    pub fn involution_k(&self) -> &Matrix {
        &self.inv_k
    }

    /// The diagonal ±1 involution with H·E_k(s)·H = E_k(−s).
    pub fn involution_h(&self) -> &Matrix {
        &self.inv_h
    }

    /// The transpose anti-automorphism φ(M) = K Mᵗ K; it fixes every
    /// elementary matrix and reverses products.
    pub fn phi(&self, m: &Matrix) -> Matrix {
        &(&self.inv_k * &m.transpose()) * &self.inv_k
    }

    fn generic_vj(&self) -> Vec<Scalar> {
        // Interior vector with distinct entries, generic enough to pin
        // the conjugation identities (which are linear in the parameter).
        let m = self.sig.vj_dim();
        let mut v: Vec<Scalar> = (0..m).map(|i| Scalar::fraction(1, 1 + i as i64)).collect();
        let a = Scalar::from_int(3 + m as i64);
        v[0] = a;
        v
    }

    fn conjugation_tests(&self, cand: &Matrix, transpose: bool) -> bool {
        let p = self.sig.p;
        for k in 1..=p - 1 {
            let param: Vec<Scalar> = if k <= p - 2 {
                vec![Scalar::fraction(3, 2)]
            } else {
                self.generic_vj()
            };
            let e = raw_elementary(self, k, &param);
            let conj = &(cand * &e) * cand;
            let expected = if transpose {
                e.transpose()
            } else {
                let neg: Vec<Scalar> = param.iter().map(|x| -x).collect();
                raw_elementary(self, k, &neg)
            };
            if conj != expected {
                return false;
            }
        }
        true
    }

    /// Diagonal ±1 sign patterns compatible with the pairing structure:
    /// d_l = d_{d+1−l} on the corner pairs and d_p = d_{q+1} on the J
    /// corner. Middle signs vary freely.
    fn sign_patterns(&self) -> Vec<Vec<i64>> {
        let (p, q, d) = (self.sig.p, self.sig.q, self.sig.d());
        let free = p + (q - p) + 1; // corner pairs, middle block, J pair
        let mut out = Vec::with_capacity(1 << free);
        for bits in 0..(1u32 << free) {
            let mut diag = vec![1i64; d];
            for l in 1..=p - 1 {
                if bits & (1 << (l - 1)) != 0 {
                    diag[l - 1] = -1;
                    diag[d - l] = -1;
                }
            }
            if bits & (1 << (p - 1)) != 0 {
                diag[p - 1] = -1; // e_p
                diag[q] = -1; // e_{q+1}
            }
            for i in 0..q - p {
                if bits & (1 << (p + i)) != 0 {
                    diag[p + i] = -1;
                }
            }
            out.push(diag);
        }
        out
    }

    fn search_involution_k(&self) -> Result<Matrix, Error> {
        let (p, q, d) = (self.sig.p, self.sig.q, self.sig.d());
        // Base candidate: swap the corner pairs, act by J on V_J.
        let mut base = Matrix::zeros(d, d);
        for l in 1..=p - 1 {
            base[(d - l, l - 1)] = Scalar::one();
            base[(l - 1, d - l)] = Scalar::one();
        }
        let m = self.sig.vj_dim();
        for a in 0..m {
            for b in 0..m {
                base[(p - 1 + a, p - 1 + b)] = self.j_mat[(a, b)].clone();
            }
        }
        for diag in self.sign_patterns() {
            let mut cand = base.clone();
            for j in 0..d {
                if diag[j] == -1 {
                    for i in 0..d {
                        let v = -&cand[(i, j)];
                        cand[(i, j)] = v;
                    }
                }
            }
            if &cand * &cand == Matrix::identity(d)
                && self.is_isometry(&cand)?
                && self.conjugation_tests(&cand, true)
            {
                let _ = q; // pairing structure is already baked into `base`
                return Ok(cand);
            }
        }
        Err(Error::ConventionSearch(
            "no sign adjustment makes K an isometric involution with K·E_k(s)·K = E_k(s)ᵗ".into(),
        ))
    }

    fn search_involution_h(&self) -> Result<Matrix, Error> {
        let d = self.sig.d();
        for diag in self.sign_patterns() {
            let cand = Matrix::from_fn(d, d, |i, j| {
                if i == j {
                    Scalar::from_int(diag[i])
                } else {
                    Scalar::zero()
                }
            });
            if self.is_isometry(&cand)? && self.conjugation_tests(&cand, false) {
                return Ok(cand);
            }
        }
        Err(Error::ConventionSearch(
            "no diagonal sign pattern satisfies H·E_k(s)·H = E_k(−s)".into(),
        ))
    }
}

/// Convenience constructor.
pub fn build_form(p: usize, q: usize) -> Result<FormData, Error> {
    FormData::build(Signature::new(p, q)?)
}
