//! Representations on the Fuchsian locus, certified spectral data, and
//! the collar / positivity probes on group elements.
//!
//! The principal embedding is realised as the n-th symmetric power in
//! the monomial basis of binary forms, carried into the standard
//! (p,q)-form by a change of basis that is computed exactly once from
//! the invariant bilinear form of the representation (block-summed with
//! a compact twist on the orthogonal complement).
//!
//! Attracting flags are exact whenever the relevant eigenvalues are
//! rational. Otherwise eigenvectors are computed in floating point and
//! snapped: the flag is written in its echelon chart, the chart's free
//! coordinates are rationalised within `SNAP_TOL`, and the chart's
//! bound coordinates are recomputed exactly from the isotropy
//! constraints, so the snapped flag is exactly isotropic and nested and
//! every downstream certificate runs in exact arithmetic.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use crate::approx::{eigen_moduli_intervals, solve_f64, sqrt_interval, ApproxReal, RatInterval};
use crate::error::Error;
use crate::flags::PartialFlag;
use crate::matrix::Matrix;
use crate::pqspace::FormData;
use crate::scalar::Scalar;

/// Default tolerance target for eigenvalue enclosures.
pub fn default_eigen_tol() -> Scalar {
    Scalar::fraction(1, 10_000_000_000)
}

/// Default rationalisation tolerance for snapped flags.
pub fn default_snap_tol() -> Scalar {
    Scalar::fraction(1, 100_000_000)
}

// ---------------------------------------------------------------------------
// Group elements and representations.
// ---------------------------------------------------------------------------

/// An exact isometry considered up to global sign.
#[derive(Clone, Debug)]
pub struct GroupElement {
    form: Arc<FormData>,
    matrix: Matrix,
}

impl GroupElement {
    pub fn new(form: Arc<FormData>, matrix: Matrix) -> Result<Self, Error> {
        if !form.is_isometry(&matrix)? {
            return Err(Error::NotIsometry);
        }
        Ok(GroupElement { form, matrix })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn form(&self) -> &Arc<FormData> {
        &self.form
    }

    /// Equality in the projective group: equal up to global sign.
    pub fn projectively_equal(&self, other: &GroupElement) -> bool {
        self.matrix == other.matrix || self.matrix == -&other.matrix
    }
}

/// A finitely generated subgroup given by generator images, with an
/// exact word-evaluation cache (lock-protected; readers dominate).
pub struct Representation {
    form: Arc<FormData>,
    generators: BTreeMap<String, Matrix>,
    /// 2×2 exact unimodular base data, when the representation was
    /// built on the Fuchsian locus; drives linked tests and boundary
    /// ordering.
    base_sl2: Option<BTreeMap<String, Matrix>>,
    /// Degree n of the symmetric power when on the Fuchsian locus.
    sym_degree: Option<usize>,
    cache: Mutex<BTreeMap<String, Matrix>>,
}

/// A word in the generators: pairs (name, exponent).
pub type Word = Vec<(String, i32)>;

pub fn word_key(word: &[(String, i32)]) -> String {
    word.iter()
        .map(|(g, e)| format!("{g}^{e}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Wire format: `{p, q, generators: {name: matrix}}`.
#[derive(Serialize, Deserialize)]
pub struct RepresentationWire {
    pub p: usize,
    pub q: usize,
    pub generators: BTreeMap<String, Matrix>,
}

impl Representation {
    pub fn new(
        form: Arc<FormData>,
        generators: BTreeMap<String, Matrix>,
    ) -> Result<Self, Error> {
        for g in generators.values() {
            if !form.is_isometry(g)? {
                return Err(Error::NotIsometry);
            }
        }
        Ok(Representation {
            form,
            generators,
            base_sl2: None,
            sym_degree: None,
            cache: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn form(&self) -> &Arc<FormData> {
        &self.form
    }

    pub fn generator_names(&self) -> Vec<String> {
        self.generators.keys().cloned().collect()
    }

    pub fn base_sl2(&self) -> Option<&BTreeMap<String, Matrix>> {
        self.base_sl2.as_ref()
    }

    pub fn sym_degree(&self) -> Option<usize> {
        self.sym_degree
    }

    /// Exact product over the word, cached.
    pub fn evaluate(&self, word: &[(String, i32)]) -> Result<GroupElement, Error> {
        let key = word_key(word);
        if let Some(m) = self.cache.lock().unwrap().get(&key) {
            return GroupElement::new(self.form.clone(), m.clone());
        }
        let mut acc = Matrix::identity(self.form.d());
        for (name, exp) in word {
            let g = self
                .generators
                .get(name)
                .ok_or_else(|| Error::Invalid(format!("unknown generator {name:?}")))?;
            let base = if *exp >= 0 { g.clone() } else { g.inverse()? };
            for _ in 0..exp.unsigned_abs() {
                acc = &acc * &base;
            }
        }
        self.cache.lock().unwrap().insert(key, acc.clone());
        GroupElement::new(self.form.clone(), acc)
    }

    /// Exact 2×2 product over the word in the base representation.
    pub fn evaluate_sl2(&self, word: &[(String, i32)]) -> Result<Matrix, Error> {
        let base = self
            .base_sl2
            .as_ref()
            .ok_or_else(|| Error::Invalid("representation has no base SL2 data".into()))?;
        let mut acc = Matrix::identity(2);
        for (name, exp) in word {
            let g = base
                .get(name)
                .ok_or_else(|| Error::Invalid(format!("unknown generator {name:?}")))?;
            let m = if *exp >= 0 { g.clone() } else { g.inverse()? };
            for _ in 0..exp.unsigned_abs() {
                acc = &acc * &m;
            }
        }
        Ok(acc)
    }

    pub fn to_wire(&self) -> RepresentationWire {
        RepresentationWire {
            p: self.form.p(),
            q: self.form.q(),
            generators: self.generators.clone(),
        }
    }

    pub fn from_wire(form: Arc<FormData>, wire: RepresentationWire) -> Result<Self, Error> {
        if wire.p != form.p() || wire.q != form.q() {
            return Err(Error::Dimension("representation signature mismatch".into()));
        }
        Representation::new(form, wire.generators)
    }
}

// ---------------------------------------------------------------------------
// Symmetric powers and the Fuchsian locus.
// ---------------------------------------------------------------------------

/// n-th symmetric power of a 2×2 matrix in the monomial basis
/// X^n, X^{n−1}Y, …, Y^n: column j holds the coefficients of
/// (aX + cY)^{n−j}(bX + dY)^j.
pub fn sym_power_raw(m: &Matrix, n: usize) -> Result<Matrix, Error> {
    if m.rows() != 2 || m.cols() != 2 {
        return Err(Error::Dimension("symmetric power takes a 2×2 matrix".into()));
    }
    if m.det()? != Scalar::one() {
        return Err(Error::Invalid("matrix must be unimodular".into()));
    }
    let (a, b, c, d) = (
        m[(0, 0)].clone(),
        m[(0, 1)].clone(),
        m[(1, 0)].clone(),
        m[(1, 1)].clone(),
    );
    // poly[j] = coefficients of (aX+cY)^{n−j} (bX+dY)^j in X^{n−i}Y^i.
    let mut out = Matrix::zeros(n + 1, n + 1);
    for j in 0..=n {
        // Expand the product of two binomial powers.
        let mut coeffs = vec![Scalar::zero(); n + 1];
        for r in 0..=n - j {
            for s in 0..=j {
                // Term X^{(n−j−r)+(j−s)} Y^{r+s}.
                let cnum = binom(n - j, r) * binom(j, s);
                let term = cnum
                    * a.pow((n - j - r) as i32)
                    * c.pow(r as i32)
                    * b.pow((j - s) as i32)
                    * d.pow(s as i32);
                coeffs[r + s] += &term;
            }
        }
        for i in 0..=n {
            out[(i, j)] = coeffs[i].clone();
        }
    }
    Ok(out)
}

fn binom(n: usize, k: usize) -> Scalar {
    let mut v = Scalar::one();
    for i in 0..k {
        v = v * Scalar::fraction((n - i) as i64, (i + 1) as i64);
    }
    v
}

/// The invariant symmetric bilinear form of the n-th symmetric power
/// (n even), normalised so the central monomial has norm 1. Found by
/// solving the invariance equations for the two unipotent generators
/// exactly; the solution space is one-dimensional.
pub fn sym_invariant_form(n: usize) -> Result<Matrix, Error> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::Invalid("symmetric power degree must be even".into()));
    }
    let dim = n + 1;
    let gens = [
        Matrix::from_i64(&[&[1, 1], &[0, 1]]),
        Matrix::from_i64(&[&[1, 0], &[1, 1]]),
    ];
    // Unknown symmetric G: g^t G g = G for both generators.
    let vars: Vec<(usize, usize)> = (0..dim)
        .flat_map(|i| (i..dim).map(move |j| (i, j)))
        .collect();
    let nv = vars.len();
    let mut rows: Vec<Vec<Scalar>> = Vec::new();
    for g in &gens {
        let s = sym_power_raw(g, n)?;
        // (sᵗ G s − G)[a][b] = Σ_env coeff·G_env = 0.
        for a in 0..dim {
            for b in a..dim {
                let mut row = vec![Scalar::zero(); nv];
                for (v, &(i, j)) in vars.iter().enumerate() {
                    // coefficient of G_ij in (sᵗGs)[a][b]
                    let mut coeff = &s[(i, a)] * &s[(j, b)];
                    if i != j {
                        coeff = coeff + &s[(j, a)] * &s[(i, b)];
                    }
                    if (i, j) == (a, b) {
                        coeff = coeff - Scalar::one();
                    }
                    row[v] = coeff;
                }
                rows.push(row);
            }
        }
    }
    let sys = Matrix::from_rows(rows);
    let ker = sys.kernel();
    if ker.cols() != 1 {
        return Err(Error::ConventionSearch(format!(
            "invariant form space has dimension {}, expected 1",
            ker.cols()
        )));
    }
    let mut g = Matrix::zeros(dim, dim);
    for (v, &(i, j)) in vars.iter().enumerate() {
        g[(i, j)] = ker[(v, 0)].clone();
        g[(j, i)] = ker[(v, 0)].clone();
    }
    // Normalise the central norm to 1.
    let c = n / 2;
    let center = g[(c, c)].clone();
    if center.is_zero() {
        return Err(Error::ConventionSearch("central norm vanishes".into()));
    }
    Ok(g.scale(&center.recip()))
}

/// The exact symmetric power embedded in the standard (p,q) space as a
/// Q-isometry, p = n/2 + 1, together with a compact twist acting on the
/// orthogonal complement.
pub struct FuchsianEmbedding {
    form: Arc<FormData>,
    n: usize,
    /// T with Tᵗ(G ⊕ −I)T = Q; ρ(γ) = T⁻¹(Sym(γ) ⊕ α(γ))T.
    t: Matrix,
    t_inv: Matrix,
}

impl FuchsianEmbedding {
    pub fn new(form: Arc<FormData>) -> Result<Self, Error> {
        let p = form.p();
        let q = form.q();
        let n = 2 * (p - 1);
        let g = sym_invariant_form(n)?;
        let dim_sym = n + 1;
        let m = q - p + 1; // twist block size
        let d = form.d();
        assert_eq!(dim_sym + m, d);
        // Adapted basis columns in Sym ⊕ R^m coordinates.
        let mut t = Matrix::zeros(d, d);
        let col = |t: &mut Matrix, j: usize, entries: &[(usize, Scalar)]| {
            for (i, v) in entries {
                t[(*i, j)] = v.clone();
            }
        };
        // Corner pairs: e_l ↦ u_{l−1}, e_{d+1−l} ↦ (κ_l/g_pair)·u_{n−l+1}.
        for l in 1..=p - 1 {
            col(&mut t, l - 1, &[(l - 1, Scalar::one())]);
            let pair_val = g[(l - 1, n - l + 1)].clone();
            if pair_val.is_zero() {
                return Err(Error::ConventionSearch(
                    "invariant form is not antidiagonal".into(),
                ));
            }
            let scale = form.corner_sign(l) / pair_val;
            col(&mut t, d - l, &[(n - l + 1, scale)]);
        }
        // V_J block: isotropic pair from the central monomial and the
        // first twist vector, then the remaining twist vectors.
        let c = n / 2;
        // e_p ↦ u_c + ν_1
        col(
            &mut t,
            p - 1,
            &[(c, Scalar::one()), (dim_sym, Scalar::one())],
        );
        // e_{q+1} ↦ (u_c − ν_1)/2
        col(
            &mut t,
            q,
            &[
                (c, Scalar::fraction(1, 2)),
                (dim_sym, Scalar::fraction(-1, 2)),
            ],
        );
        // e_{p+1}…e_q ↦ ν_2…ν_m
        for i in 0..m - 1 {
            col(&mut t, p + i, &[(dim_sym + 1 + i, Scalar::one())]);
        }
        // Verify Tᵗ (G ⊕ −I) T = Q exactly.
        let mut big = Matrix::zeros(d, d);
        for i in 0..dim_sym {
            for j in 0..dim_sym {
                big[(i, j)] = g[(i, j)].clone();
            }
        }
        for i in 0..m {
            big[(dim_sym + i, dim_sym + i)] = Scalar::from_int(-1);
        }
        if &(&t.transpose() * &big) * &t != *form.q_form() {
            return Err(Error::ConventionSearch(
                "embedding base change failed verification".into(),
            ));
        }
        let t_inv = t.inverse()?;
        Ok(FuchsianEmbedding {
            form,
            n,
            t,
            t_inv,
        })
    }

    /// Image of (Sym^n(m), twist) in O(p,q).
    pub fn embed(&self, m2: &Matrix, twist: &Matrix) -> Result<Matrix, Error> {
        let msize = self.form.q() - self.form.p() + 1;
        if twist.rows() != msize || twist.cols() != msize {
            return Err(Error::Dimension(format!(
                "twist must be {msize}×{msize}"
            )));
        }
        // Twist must be exactly orthogonal to preserve −Id.
        if &twist.transpose() * twist != Matrix::identity(msize) {
            return Err(Error::Invalid("twist is not orthogonal".into()));
        }
        let sym = sym_power_raw(m2, self.n)?;
        let dim_sym = self.n + 1;
        let d = self.form.d();
        let mut block = Matrix::zeros(d, d);
        for i in 0..dim_sym {
            for j in 0..dim_sym {
                block[(i, j)] = sym[(i, j)].clone();
            }
        }
        for i in 0..msize {
            for j in 0..msize {
                block[(dim_sym + i, dim_sym + j)] = twist[(i, j)].clone();
            }
        }
        let image = &(&self.t_inv * &block) * &self.t;
        if !self.form.is_isometry(&image)? {
            return Err(Error::NotIsometry);
        }
        Ok(image)
    }
}

/// Build a Fuchsian-locus representation: generator images are the
/// embedded symmetric powers block-summed with an orthogonal twist
/// (identity when `twists` is empty for a generator).
pub fn fuchsian_locus_rep(
    form: &Arc<FormData>,
    sl2_gens: &BTreeMap<String, Matrix>,
    twists: &BTreeMap<String, Matrix>,
) -> Result<Representation, Error> {
    let emb = FuchsianEmbedding::new(form.clone())?;
    let msize = form.q() - form.p() + 1;
    let mut images = BTreeMap::new();
    for (name, g) in sl2_gens {
        let twist = twists
            .get(name)
            .cloned()
            .unwrap_or_else(|| Matrix::identity(msize));
        images.insert(name.clone(), emb.embed(g, &twist)?);
    }
    let mut rep = Representation::new(form.clone(), images)?;
    rep.base_sl2 = Some(sl2_gens.clone());
    rep.sym_degree = Some(emb.n);
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Spectral data.
// ---------------------------------------------------------------------------

/// Certified eigenvalue moduli in non-increasing order with the
/// consecutive gap enclosures.
#[derive(Clone, Debug)]
pub struct SpectralData {
    pub moduli: Vec<RatInterval>,
    pub gaps: Vec<RatInterval>,
}

/// Serializable rendering of [`SpectralData`].
#[derive(Serialize, Deserialize)]
pub struct SpectralWire {
    pub moduli: Vec<ApproxReal>,
    pub gaps: Vec<ApproxReal>,
}

impl SpectralData {
    pub fn to_wire(&self) -> SpectralWire {
        SpectralWire {
            moduli: self.moduli.iter().map(RatInterval::to_approx).collect(),
            gaps: self.gaps.iter().map(RatInterval::to_approx).collect(),
        }
    }

    /// Indices k with certified |λ_k|/|λ_{k+1}| > 1.
    pub fn proximal_ks(&self) -> Vec<usize> {
        self.gaps
            .iter()
            .enumerate()
            .filter(|(_, g)| g.lo > Scalar::one())
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Certified product λ₁²…λ_k².
    pub fn weight(&self, k: usize) -> RatInterval {
        let mut acc = RatInterval::point(Scalar::one());
        for iv in &self.moduli[..k] {
            acc = acc.mul(&iv.mul(iv));
        }
        acc
    }
}

/// Certified spectral data of a group element.
pub fn spectral(g: &GroupElement, tol: &Scalar) -> Result<SpectralData, Error> {
    let moduli = eigen_moduli_intervals(g.matrix(), tol)?;
    spectral_from_moduli(g.form(), moduli)
}

fn spectral_from_moduli(
    form: &FormData,
    moduli: Vec<RatInterval>,
) -> Result<SpectralData, Error> {
    let d = form.d();
    if moduli.len() != d {
        return Err(Error::Dimension("modulus count mismatch".into()));
    }
    let p = form.p();
    let mut gaps = Vec::with_capacity(p - 1);
    for k in 1..=p - 1 {
        let denom = &moduli[k];
        if !denom.lo.is_positive() {
            return Err(Error::EigenNoConvergence);
        }
        gaps.push(moduli[k - 1].div(denom));
    }
    Ok(SpectralData { moduli, gaps })
}

/// Spectral data of a Fuchsian-locus word through the base 2×2 matrix:
/// the symmetric-power moduli are exact interval powers of the larger
/// eigenvalue modulus of the base word, and the twist contributes exact
/// unit moduli. Falls back on an error if the word is not hyperbolic.
pub fn spectral_fuchsian(
    rep: &Representation,
    word: &[(String, i32)],
    tol: &Scalar,
) -> Result<SpectralData, Error> {
    let n = rep
        .sym_degree
        .ok_or_else(|| Error::Invalid("not a Fuchsian-locus representation".into()))?;
    let m2 = rep.evaluate_sl2(word)?;
    let theta = top_eigen_modulus_sl2(&m2, tol)?;
    let d = rep.form.d();
    let mut moduli = Vec::with_capacity(d);
    for j in 0..=n {
        let e = n as i64 - 2 * j as i64;
        let pow = theta_power(&theta, e);
        moduli.push(pow);
    }
    for _ in 0..d - (n + 1) {
        moduli.push(RatInterval::point(Scalar::one()));
    }
    moduli.sort_by(|a, b| b.mid().cmp(&a.mid()));
    spectral_from_moduli(&rep.form, moduli)
}

fn theta_power(theta: &RatInterval, e: i64) -> RatInterval {
    if e == 0 {
        return RatInterval::point(Scalar::one());
    }
    let base = theta.powi(e.unsigned_abs() as u32);
    if e > 0 {
        base
    } else {
        base.recip()
    }
}

/// Enclosure of the larger eigenvalue modulus (|T| + sqrt(T²−4))/2 of a
/// hyperbolic unimodular 2×2 matrix.
pub fn top_eigen_modulus_sl2(m: &Matrix, tol: &Scalar) -> Result<RatInterval, Error> {
    if m.det()? != Scalar::one() {
        return Err(Error::Invalid("base matrix must be unimodular".into()));
    }
    let t = m.trace().abs();
    let disc = &t * &t - Scalar::from_int(4);
    if !disc.is_positive() {
        return Err(Error::NotHyperbolic);
    }
    // Exact when the discriminant is a perfect rational square.
    let root = sqrt_interval(&disc, tol);
    if &root.lo * &root.lo == disc {
        let exact = (&t + &root.lo) * Scalar::fraction(1, 2);
        return Ok(RatInterval::point(exact));
    }
    let half = Scalar::fraction(1, 2);
    Ok(RatInterval::new(
        (&t + &root.lo) * &half,
        (&t + &root.hi) * &half,
    ))
}

// ---------------------------------------------------------------------------
// Attracting flags.
// ---------------------------------------------------------------------------

/// The attracting partial flag of a proximal element: level k spans the
/// eigenvectors of the k largest moduli. Exact when those eigenvalues
/// are rational; otherwise computed approximately and snapped to an
/// exactly isotropic rational flag within `snap_tol`.
pub fn attracting_flag(
    g: &GroupElement,
    eigen_tol: &Scalar,
    snap_tol: &Scalar,
) -> Result<PartialFlag, Error> {
    let spec = spectral(g, eigen_tol)?;
    attracting_flag_with_spectral(g, &spec, snap_tol)
}

/// [`attracting_flag`] with externally supplied spectral data, so
/// callers with structural knowledge (Fuchsian words) can avoid the
/// generic root solver.
pub fn attracting_flag_with_spectral(
    g: &GroupElement,
    spec: &SpectralData,
    snap_tol: &Scalar,
) -> Result<PartialFlag, Error> {
    let form = g.form().clone();
    let p = form.p();
    for k in 1..=p - 1 {
        if !(spec.gaps[k - 1].lo > Scalar::one()) {
            return Err(Error::InsufficientGap { k });
        }
    }
    // Exact route: top p−1 eigenvalues rational.
    let mut exact_cols: Vec<Matrix> = Vec::new();
    let mut all_exact = true;
    for k in 0..p - 1 {
        let iv = &spec.moduli[k];
        if !iv.is_point() {
            all_exact = false;
            break;
        }
        let mut found = None;
        for sign in [1i64, -1] {
            let lam = &iv.lo * &Scalar::from_int(sign);
            let mut shifted = g.matrix().clone();
            for i in 0..form.d() {
                shifted[(i, i)] = &shifted[(i, i)] - &lam;
            }
            let ker = shifted.kernel();
            if ker.cols() == 1 {
                found = Some(ker);
                break;
            }
        }
        match found {
            Some(v) => exact_cols.push(v),
            None => {
                all_exact = false;
                break;
            }
        }
    }
    if all_exact {
        let basis = exact_cols
            .iter()
            .skip(1)
            .fold(exact_cols[0].clone(), |acc, c| acc.hstack(c));
        return PartialFlag::from_full_basis(form, &basis);
    }

    // Approximate route: inverse iteration per eigenvalue, then snap.
    let a = g.matrix().to_f64_vec();
    let mut cols_f: Vec<Vec<f64>> = Vec::new();
    for k in 0..p - 1 {
        let modulus = spec.moduli[k].mid().to_f64();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for sign in [1.0f64, -1.0] {
            let lam = sign * modulus;
            if let Some(v) = inverse_iteration(&a, lam) {
                let res = eig_residual(&a, &v, lam);
                if best.as_ref().map_or(true, |(r, _)| res < *r) {
                    best = Some((res, v));
                }
            }
        }
        let (res, v) = best.ok_or(Error::NonRealEigenspace)?;
        if res > 1e-6 {
            return Err(Error::NonRealEigenspace);
        }
        cols_f.push(v);
    }
    snap_flag(&form, &cols_f, snap_tol)
}

fn eig_residual(a: &[Vec<f64>], v: &[f64], lam: f64) -> f64 {
    let n = v.len();
    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut res = 0.0f64;
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            acc += a[i][j] * v[j];
        }
        res += (acc - lam * v[i]).powi(2);
    }
    res.sqrt() / norm.max(1e-300)
}

fn inverse_iteration(a: &[Vec<f64>], lam: f64) -> Option<Vec<f64>> {
    let n = a.len();
    let mut shifted: Vec<Vec<f64>> = a.to_vec();
    let eps = 1e-10 * (1.0 + lam.abs());
    for (i, row) in shifted.iter_mut().enumerate() {
        row[i] -= lam + eps;
    }
    let mut v: Vec<f64> = (0..n)
        .map(|i| 0.3 + ((i * 2654435761) % 97) as f64 / 97.0)
        .collect();
    for _ in 0..8 {
        let w = solve_f64(&shifted, &v)?;
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return None;
        }
        v = w.into_iter().map(|x| x / norm).collect();
    }
    Some(v)
}

/// Snap float flag columns to an exactly isotropic nested rational
/// flag. The flag is written in its chart with lower-unitriangular
/// leading block (column operations stay within levels, preserving the
/// flag), the chart's free coordinates are rationalised within
/// `snap_tol`, and the mirror coordinates are recomputed exactly from
/// the isotropy constraints.
pub fn snap_flag(
    form: &Arc<FormData>,
    cols_f: &[Vec<f64>],
    snap_tol: &Scalar,
) -> Result<PartialFlag, Error> {
    let p = form.p();
    let d = form.d();
    let k = cols_f.len();
    assert_eq!(k, p - 1);
    // Chart normalisation: column j is the unique vector in level j
    // with leading coordinates (0,…,0,1) in rows 0..j, obtained from
    // the first j original columns (a within-level operation).
    let mut ech: Vec<Vec<f64>> = vec![vec![0.0; d]; k];
    for j in 0..k {
        let g_j: Vec<Vec<f64>> = (0..=j)
            .map(|row| (0..=j).map(|c| cols_f[c][row]).collect())
            .collect();
        let mut rhs = vec![0.0; j + 1];
        rhs[j] = 1.0;
        let coeff = solve_f64(&g_j, &rhs).ok_or(Error::Invalid(
            "flag is outside the snap chart (leading minor singular)".into(),
        ))?;
        for i in 0..d {
            let mut acc = 0.0;
            for (c, w) in coeff.iter().enumerate() {
                acc += cols_f[c][i] * w;
            }
            ech[j][i] = acc;
        }
    }
    // Rationalise the free chart coordinates: rows j+1..k−1 of the
    // leading block and every tail row except the bound mirrors d−i
    // (0-indexed) for i = 1..=j+1.
    let mut b = Matrix::zeros(d, k);
    for (j, col) in ech.iter().enumerate() {
        b[(j, j)] = Scalar::one();
        for row in j + 1..k {
            let v = Scalar::from_f64(col[row]).unwrap_or_else(Scalar::zero);
            b[(row, j)] = v.simplest_within(snap_tol);
        }
        for row in k..d {
            if (1..=j + 1).any(|i| row == d - i) {
                continue;
            }
            let v = Scalar::from_f64(col[row]).unwrap_or_else(Scalar::zero);
            b[(row, j)] = v.simplest_within(snap_tol);
        }
    }
    // Exact mirror coordinates. With tails supported in rows ≥ p−1 and
    // leading support in rows i−1..k−1 (1 at i−1), the constraint
    // Q(col_i, col_j) = 0 reads
    //   Σ_{a≥i} col_i[a]·κ_a·col_j[mirror(a)]
    // + Σ_{a≥j} col_j[a]·κ_a·col_i[mirror(a)] + Jmid(col_i, col_j) = 0
    // (math indices, mirror(a) = d+1−a), which solves triangularly for
    // col_j[mirror(i)] when processed with i descending from j.
    let mid_pair = |b: &Matrix, c1: usize, c2: usize| -> Scalar {
        let m = form.vj_dim();
        let u: Vec<Scalar> = (0..m).map(|a| b[(p - 1 + a, c1)].clone()).collect();
        let v: Vec<Scalar> = (0..m).map(|a| b[(p - 1 + a, c2)].clone()).collect();
        Scalar::from_int(2) * form.bj(&u, &v).unwrap()
    };
    for j in 1..=k {
        for i in (1..=j).rev() {
            // Solve Q(col_i, col_j) = 0 for b[(d−i, j−1)].
            let ci = i - 1;
            let cj = j - 1;
            let mut rest = mid_pair(&b, ci, cj);
            // Σ_{a≥i} col_i[a]·κ_a·col_j[mirror(a)], a = i term excluded.
            for a in i + 1..=k {
                let lead = b[(a - 1, ci)].clone();
                if !lead.is_zero() {
                    rest += &(&(&lead * &form.corner_sign(a)) * &b[(d - a, cj)]);
                }
            }
            // Σ_{a≥j} col_j[a]·κ_a·col_i[mirror(a)] (for i = j, the a = j
            // term is the same unknown again).
            for a in j..=k {
                if i == j && a == j {
                    continue; // handled by the 2κ coefficient below
                }
                let lead = b[(a - 1, cj)].clone();
                if !lead.is_zero() {
                    rest += &(&(&lead * &form.corner_sign(a)) * &b[(d - a, ci)]);
                }
            }
            let coeff = if i == j {
                Scalar::from_int(2) * form.corner_sign(i)
            } else {
                form.corner_sign(i)
            };
            b[(d - i, cj)] = -&(&rest / &coeff);
        }
    }
    PartialFlag::from_full_basis(form.clone(), &b)
}

// ---------------------------------------------------------------------------
// Linked pairs and boundary order on the base circle.
// ---------------------------------------------------------------------------

/// Fixed-point polynomial of a 2×2 matrix acting on the projective
/// line: c·x² + (d−a)·x − b.
fn fixed_point_poly(m: &Matrix) -> (Scalar, Scalar, Scalar) {
    (
        m[(1, 0)].clone(),
        &m[(1, 1)] - &m[(0, 0)],
        -&m[(0, 1)],
    )
}

fn is_hyperbolic_sl2(m: &Matrix) -> Result<bool, Error> {
    if m.rows() != 2 || m.cols() != 2 {
        return Err(Error::Dimension("expected a 2×2 matrix".into()));
    }
    if m.det()? != Scalar::one() {
        return Err(Error::Invalid("base matrix must be unimodular".into()));
    }
    let t = m.trace();
    Ok(&t * &t > Scalar::from_int(4))
}

/// Exact linkedness: the fixed pairs of two hyperbolic elements
/// interleave on the projective line. Decided by the sign of the
/// resultant of the two fixed-point polynomials (negative iff one pair
/// separates the other); a vanishing resultant (shared axis endpoint)
/// is not linked.
pub fn linked(g: &Matrix, h: &Matrix) -> Result<bool, Error> {
    if !is_hyperbolic_sl2(g)? || !is_hyperbolic_sl2(h)? {
        return Err(Error::NotHyperbolic);
    }
    let (a2, a1, a0) = fixed_point_poly(g);
    let (b2, b1, b0) = fixed_point_poly(h);
    // Homogeneous resultant of the two (possibly degenerate) quadratics:
    // handles fixed points at infinity (leading coefficient zero).
    let res = resultant_quadratics(&a2, &a1, &a0, &b2, &b1, &b0);
    if res.is_zero() {
        return Ok(false); // shared fixed point
    }
    Ok(res.is_negative())
}

/// Resultant of a₂x²+a₁x+a₀ and b₂x²+b₁x+b₀ treated projectively, via
/// the Sylvester determinant of the homogenised forms.
fn resultant_quadratics(
    a2: &Scalar,
    a1: &Scalar,
    a0: &Scalar,
    b2: &Scalar,
    b1: &Scalar,
    b0: &Scalar,
) -> Scalar {
    let z = Scalar::zero;
    let m = Matrix::from_rows(vec![
        vec![a2.clone(), a1.clone(), a0.clone(), z()],
        vec![z(), a2.clone(), a1.clone(), a0.clone()],
        vec![b2.clone(), b1.clone(), b0.clone(), z()],
        vec![z(), b2.clone(), b1.clone(), b0.clone()],
    ]);
    m.det().unwrap()
}

/// Attracting fixed point of a hyperbolic 2×2 matrix on the projective
/// line, as a certified interval; `None` encodes the point at infinity.
pub fn attracting_fixed_point(
    m: &Matrix,
    tol: &Scalar,
) -> Result<Option<RatInterval>, Error> {
    if !is_hyperbolic_sl2(m)? {
        return Err(Error::NotHyperbolic);
    }
    let (c, _b1, _b0) = fixed_point_poly(m);
    let t = m.trace();
    let disc = &t * &t - Scalar::from_int(4);
    let root = sqrt_interval(&disc, tol);
    // λ₊ has |λ₊| > 1 and carries the sign of the trace.
    let half = Scalar::fraction(1, 2);
    let lam_plus = if t.is_positive() {
        RatInterval::new((&t + &root.lo) * &half, (&t + &root.hi) * &half)
    } else {
        RatInterval::new((&t - &root.hi) * &half, (&t - &root.lo) * &half)
    };
    if c.is_zero() {
        // Fixed points: ∞ and b/(d−a); ∞ is attracting iff |m₀₀| > 1.
        if m[(0, 0)].abs() > Scalar::one() {
            return Ok(None);
        }
        let x = &m[(0, 1)] / &(&m[(1, 1)] - &m[(0, 0)]);
        return Ok(Some(RatInterval::point(x)));
    }
    // x₊ = (λ₊ − d)/c from the eigenvector (x, 1).
    let dd = RatInterval::point(m[(1, 1)].clone());
    let cc = RatInterval::point(c);
    Ok(Some(lam_plus.sub(&dd).div(&cc)))
}

// ---------------------------------------------------------------------------
// Collar and ratioed probes on elements.
// ---------------------------------------------------------------------------

/// Outcome of a certified inequality check: both sides as intervals,
/// whether the tolerance sufficed to decide, and the verdict.
#[derive(Clone, Debug)]
pub struct InequalityReport {
    pub lhs: RatInterval,
    pub rhs: RatInterval,
    pub decided: bool,
    pub pass: bool,
}

impl InequalityReport {
    fn from_intervals(lhs: RatInterval, rhs: RatInterval) -> Self {
        let pass = lhs.lt(&rhs);
        let fail = rhs.lt(&lhs) || rhs.hi == lhs.lo;
        InequalityReport {
            decided: pass || fail,
            pass,
            lhs,
            rhs,
        }
    }
}

/// The collar inequality for a linked pair of words:
/// (1 − |λ_{k+1}/λ_k|(ρ(h)))⁻¹ < λ₁²…λ_k²(ρ(g)), with certified
/// tolerances on both sides.
pub fn collar_check(
    rep: &Representation,
    g_word: &[(String, i32)],
    h_word: &[(String, i32)],
    k: usize,
    tol: &Scalar,
) -> Result<InequalityReport, Error> {
    let p = rep.form.p();
    if !(1..=p - 1).contains(&k) {
        return Err(Error::IndexRange {
            k,
            min: 1,
            max: p - 1,
        });
    }
    if rep.base_sl2.is_some() {
        let g2 = rep.evaluate_sl2(g_word)?;
        let h2 = rep.evaluate_sl2(h_word)?;
        if !linked(&g2, &h2)? {
            return Err(Error::Invalid("words are not linked".into()));
        }
    }
    let spec_g = spectral_for(rep, g_word, tol)?;
    let spec_h = spectral_for(rep, h_word, tol)?;
    let one = RatInterval::point(Scalar::one());
    let ratio = spec_h.gaps[k - 1].recip(); // |λ_{k+1}/λ_k|(h)
    let lhs = one.sub(&ratio).recip();
    let rhs = spec_g.weight(k);
    Ok(InequalityReport::from_intervals(lhs, rhs))
}

/// Spectral data for a word, preferring the exact Fuchsian route.
pub fn spectral_for(
    rep: &Representation,
    word: &[(String, i32)],
    tol: &Scalar,
) -> Result<SpectralData, Error> {
    if rep.base_sl2.is_some() && rep.sym_degree.is_some() {
        if let Ok(s) = spectral_fuchsian(rep, word, tol) {
            return Ok(s);
        }
    }
    spectral(&rep.evaluate(word)?, tol)
}

/// The PO(2,m) collar bound on an element and a line:
/// cr₁(h₋, h₊, hx, x) ≥ (1 − |λ₂/λ₁|(h))⁻¹, cross ratio exact.
pub fn collar2q_check(
    h: &GroupElement,
    h_plus: &crate::flags::IsotropicSubspace,
    h_minus: &crate::flags::IsotropicSubspace,
    x: &crate::flags::IsotropicSubspace,
    tol: &Scalar,
) -> Result<InequalityReport, Error> {
    let hx = x.transform(h.matrix())?;
    let cr = crate::crossratio::cr_k(&crate::crossratio::CrossRatioInput::new(
        h_minus.clone(),
        h_plus.clone(),
        hx,
        x.clone(),
    )?)?;
    let spec = spectral(h, tol)?;
    let one = RatInterval::point(Scalar::one());
    let lhs = one.sub(&spec.gaps[0].recip()).recip();
    let rhs = RatInterval::point(cr);
    // PASS means lhs ≤ rhs with certified margin; equality can occur,
    // so compare with the closed interval.
    let pass = lhs.hi <= rhs.lo;
    let fail = rhs.hi < lhs.lo;
    Ok(InequalityReport {
        decided: pass || fail,
        pass,
        lhs,
        rhs,
    })
}

/// cr_k of the attracting flags of four words; PASS iff > 1 exactly.
pub fn ratioed_check(
    rep: &Representation,
    words: &[Word; 4],
    k: usize,
    eigen_tol: &Scalar,
    snap_tol: &Scalar,
) -> Result<InequalityReport, Error> {
    let flags: Vec<PartialFlag> = words
        .iter()
        .map(|w| attracting_flag(&rep.evaluate(w)?, eigen_tol, snap_tol))
        .collect::<Result<Vec<_>, _>>()?;
    let input = crate::crossratio::CrossRatioInput::new(
        flags[0].level(k).clone(),
        flags[1].level(k).clone(),
        flags[2].level(k).clone(),
        flags[3].level(k).clone(),
    )?;
    let cr = crate::crossratio::cr_k(&input)?;
    let lhs = RatInterval::point(Scalar::one());
    let rhs = RatInterval::point(cr);
    Ok(InequalityReport::from_intervals(lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pqspace::build_form;
    use crate::scalar::{s, sf};

    fn form(p: usize, q: usize) -> Arc<FormData> {
        Arc::new(build_form(p, q).unwrap())
    }

    fn diag2(a: Scalar, b: Scalar) -> Matrix {
        Matrix::from_rows(vec![vec![a, Scalar::zero()], vec![Scalar::zero(), b]])
    }

    fn tol() -> Scalar {
        default_eigen_tol()
    }

    #[test]
    fn sym_power_identity_and_diag() {
        let id = Matrix::identity(2);
        assert_eq!(sym_power_raw(&id, 2).unwrap(), Matrix::identity(3));
        // Sym² of diag(t, 1/t) has eigenvalues t², 1, t⁻².
        let m = diag2(s(2), sf(1, 2));
        let s2 = sym_power_raw(&m, 2).unwrap();
        assert_eq!(s2[(0, 0)], s(4));
        assert_eq!(s2[(1, 1)], s(1));
        assert_eq!(s2[(2, 2)], sf(1, 4));
    }

    #[test]
    fn sym_power_multiplicative() {
        let a = Matrix::from_rows(vec![vec![s(2), s(1)], vec![s(1), s(1)]]);
        let b = Matrix::from_rows(vec![vec![s(1), s(-1)], vec![s(0), s(1)]]);
        let lhs = sym_power_raw(&(&a * &b), 4).unwrap();
        let rhs = &sym_power_raw(&a, 4).unwrap() * &sym_power_raw(&b, 4).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn invariant_form_is_antidiagonal_with_unit_center() {
        for n in [2usize, 4, 6] {
            let g = sym_invariant_form(n).unwrap();
            for i in 0..=n {
                for j in 0..=n {
                    if i + j != n {
                        assert!(g[(i, j)].is_zero());
                    }
                }
            }
            assert_eq!(g[(n / 2, n / 2)], s(1));
            // Invariance for a non-trivial hyperbolic element.
            let m = Matrix::from_rows(vec![vec![s(2), s(1)], vec![s(1), s(1)]]);
            let sp = sym_power_raw(&m, n).unwrap();
            assert_eq!(&(&sp.transpose() * &g) * &sp, g);
        }
    }

    #[test]
    fn fuchsian_rep_2_3() {
        let f = form(2, 3);
        let mut gens = BTreeMap::new();
        gens.insert("a".to_string(), diag2(s(2), sf(1, 2)));
        gens.insert(
            "b".to_string(),
            Matrix::from_rows(vec![vec![sf(5, 4), sf(3, 4)], vec![sf(3, 4), sf(5, 4)]]),
        );
        let rep = fuchsian_locus_rep(&f, &gens, &BTreeMap::new()).unwrap();
        let ga = rep.evaluate(&[("a".into(), 1)]).unwrap();
        assert!(f.is_isometry(ga.matrix()).unwrap());
        // Moduli of Sym²(diag(2,1/2)) ⊕ Id₂: {4, 1, 1, 1, 1/4}.
        let spec = spectral(&ga, &tol()).unwrap();
        assert!(spec.moduli[0].is_point() && spec.moduli[0].lo == s(4));
        assert!(spec.moduli[4].is_point() && spec.moduli[4].lo == sf(1, 4));
        assert!(spec.gaps[0].is_point() && spec.gaps[0].lo == s(4));
    }

    #[test]
    fn fuchsian_sym4_moduli() {
        // n = 4 at t = 2: moduli 16, 4, 1, 1/4, 1/16 plus unit twists.
        let f = form(3, 4);
        let mut gens = BTreeMap::new();
        gens.insert("a".to_string(), diag2(s(2), sf(1, 2)));
        let rep = fuchsian_locus_rep(&f, &gens, &BTreeMap::new()).unwrap();
        let ga = rep.evaluate(&[("a".into(), 1)]).unwrap();
        let spec = spectral(&ga, &tol()).unwrap();
        let expect = [s(16), s(4), s(1), s(1), s(1), sf(1, 4), sf(1, 16)];
        for (iv, e) in spec.moduli.iter().zip(expect) {
            assert!(iv.is_point());
            assert_eq!(iv.lo, e);
        }
        assert_eq!(spec.proximal_ks(), vec![1, 2]);
    }

    #[test]
    fn twist_must_be_orthogonal() {
        let f = form(2, 3);
        let emb = FuchsianEmbedding::new(f).unwrap();
        let m = diag2(s(2), sf(1, 2));
        let bad_twist = Matrix::from_i64(&[&[2, 0], &[0, 1]]);
        assert!(emb.embed(&m, &bad_twist).is_err());
        let rot = Matrix::from_rows(vec![
            vec![sf(3, 5), sf(-4, 5)],
            vec![sf(4, 5), sf(3, 5)],
        ]);
        assert!(emb.embed(&m, &rot).is_ok());
    }

    #[test]
    fn spectral_conjugation_invariant() {
        let f = form(2, 3);
        let mut gens = BTreeMap::new();
        gens.insert("a".to_string(), diag2(s(3), sf(1, 3)));
        let rep = fuchsian_locus_rep(&f, &gens, &BTreeMap::new()).unwrap();
        let ga = rep.evaluate(&[("a".into(), 1)]).unwrap();
        let e = crate::positivity::elementary(&f, 1, &[s(1), s(0), s(1)]).unwrap();
        let conj = GroupElement::new(f.clone(), &(&e * ga.matrix()) * &e.inverse().unwrap())
            .unwrap();
        let s1 = spectral(&ga, &tol()).unwrap();
        let s2 = spectral(&conj, &tol()).unwrap();
        for (a, b) in s1.moduli.iter().zip(s2.moduli.iter()) {
            // Intervals must overlap (equal in the exact case).
            assert!(a.lo <= b.hi && b.lo <= a.hi);
        }
    }

    #[test]
    fn attracting_flag_diagonal_is_coordinate_flag() {
        let f = form(2, 3);
        let g = Matrix::from_rows(vec![
            vec![s(4), s(0), s(0), s(0), s(0)],
            vec![s(0), s(2), s(0), s(0), s(0)],
            vec![s(0), s(0), s(1), s(0), s(0)],
            vec![s(0), s(0), s(0), sf(1, 2), s(0)],
            vec![s(0), s(0), s(0), s(0), sf(1, 4)],
        ]);
        let ge = GroupElement::new(f.clone(), g).unwrap();
        let flag = attracting_flag(&ge, &tol(), &default_snap_tol()).unwrap();
        let e1 = crate::flags::IsotropicSubspace::coordinate_line(f, 1).unwrap();
        assert!(flag.level(1).equals(&e1));
    }

    #[test]
    fn attracting_flag_equivariance_exact() {
        let f = form(3, 4);
        let mut gens = BTreeMap::new();
        gens.insert("a".to_string(), diag2(s(2), sf(1, 2)));
        let rep = fuchsian_locus_rep(&f, &gens, &BTreeMap::new()).unwrap();
        let ga = rep.evaluate(&[("a".into(), 1)]).unwrap();
        let flag = attracting_flag(&ga, &tol(), &default_snap_tol()).unwrap();
        // Conjugating the element moves the flag by the same isometry.
        let r = crate::positivity::elementary(&f, 2, &[s(2), s(1), s(1)]).unwrap();
        let conj =
            GroupElement::new(f.clone(), &(&r * ga.matrix()) * &r.inverse().unwrap()).unwrap();
        let flag2 = attracting_flag(&conj, &tol(), &default_snap_tol()).unwrap();
        assert!(flag2.equals(&flag.transform(&r).unwrap()));
    }

    #[test]
    fn attracting_flag_rejects_parabolic() {
        let f = form(2, 3);
        let e = crate::positivity::elementary(&f, 1, &[s(1), s(0), s(1)]).unwrap();
        let ge = GroupElement::new(f, e).unwrap();
        assert!(matches!(
            attracting_flag(&ge, &tol(), &default_snap_tol()),
            Err(Error::InsufficientGap { .. })
        ));
    }

    #[test]
    fn snapped_flag_is_exactly_isotropic() {
        // Irrational eigenvalues: trace 3 hyperbolic.
        let f = form(2, 4);
        let mut gens = BTreeMap::new();
        gens.insert(
            "a".to_string(),
            Matrix::from_rows(vec![vec![s(3), s(-1)], vec![s(1), s(0)]]),
        );
        let rep = fuchsian_locus_rep(&f, &gens, &BTreeMap::new()).unwrap();
        let ga = rep.evaluate(&[("a".into(), 1)]).unwrap();
        let flag = attracting_flag(&ga, &tol(), &default_snap_tol()).unwrap();
        // The constructor enforces exact isotropy; double-check the Gram.
        let b = flag.level(1).basis();
        assert!(f.pair(b, b).is_zero());
    }

    #[test]
    fn linked_fixtures() {
        // Axis (−1, 1) vs (0, ∞): linked.
        let g = Matrix::from_rows(vec![vec![sf(5, 4), sf(3, 4)], vec![sf(3, 4), sf(5, 4)]]);
        let h = diag2(s(2), sf(1, 2));
        assert!(linked(&g, &h).unwrap());
        // (0,1) vs (2,3): unlinked.
        let g1 = Matrix::from_rows(vec![vec![s(2), s(0)], vec![sf(3, 2), sf(1, 2)]]);
        let g2 = Matrix::from_rows(vec![vec![s(5), s(-9)], vec![sf(3, 2), sf(-5, 2)]]);
        assert_eq!(g1.det().unwrap(), s(1));
        assert_eq!(g2.det().unwrap(), s(1));
        assert!(!linked(&g1, &g2).unwrap());
        // Shared axis: g and g².
        assert!(!linked(&g, &(&g * &g)).unwrap());
        // Non-hyperbolic input errors.
        let rot = Matrix::from_i64(&[&[0, -1], &[1, 0]]);
        assert!(linked(&rot, &h).is_err());
    }

    #[test]
    fn collar_fixture_p2() {
        // h = diag(2,1,1,1,1/2) with s_x = (1,0,1): cr = 4 ≥ bound 2.
        let f = form(2, 3);
        let h = Matrix::from_rows(vec![
            vec![s(2), s(0), s(0), s(0), s(0)],
            vec![s(0), s(1), s(0), s(0), s(0)],
            vec![s(0), s(0), s(1), s(0), s(0)],
            vec![s(0), s(0), s(0), s(1), s(0)],
            vec![s(0), s(0), s(0), s(0), sf(1, 2)],
        ]);
        let ge = GroupElement::new(f.clone(), h).unwrap();
        let h_plus = crate::flags::IsotropicSubspace::coordinate_line(f.clone(), 1).unwrap();
        let h_minus = crate::flags::IsotropicSubspace::coordinate_line(f.clone(), 5).unwrap();
        let sx = [s(1), s(0), s(1)];
        let qj = f.qj(&sx).unwrap();
        let mut v = Matrix::zeros(5, 1);
        v[(0, 0)] = qj;
        for (i, c) in sx.iter().enumerate() {
            v[(1 + i, 0)] = c.clone();
        }
        v[(4, 0)] = s(1);
        let x = crate::flags::IsotropicSubspace::line(f.clone(), &v).unwrap();
        let report = collar2q_check(&ge, &h_plus, &h_minus, &x, &tol()).unwrap();
        assert!(report.decided && report.pass);
        assert_eq!(report.rhs.lo, s(4));
        assert_eq!(report.lhs.hi, s(2));
    }

    #[test]
    fn collar_check_on_fuchsian_pair() {
        let f = form(2, 3);
        let mut gens = BTreeMap::new();
        gens.insert("a".to_string(), diag2(s(2), sf(1, 2)));
        gens.insert(
            "b".to_string(),
            Matrix::from_rows(vec![vec![sf(5, 4), sf(3, 4)], vec![sf(3, 4), sf(5, 4)]]),
        );
        let rep = fuchsian_locus_rep(&f, &gens, &BTreeMap::new()).unwrap();
        let report = collar_check(
            &rep,
            &[("a".into(), 1)],
            &[("b".into(), 1)],
            1,
            &tol(),
        )
        .unwrap();
        assert!(report.decided && report.pass, "{report:?}");
        // k out of range is rejected.
        assert!(collar_check(&rep, &[("a".into(), 1)], &[("b".into(), 1)], 2, &tol()).is_err());
    }

    #[test]
    fn attracting_fixed_points_order() {
        let t = tol();
        let g = diag2(s(2), sf(1, 2)); // attracting at ∞
        assert!(attracting_fixed_point(&g, &t).unwrap().is_none());
        let h = Matrix::from_rows(vec![vec![sf(5, 4), sf(3, 4)], vec![sf(3, 4), sf(5, 4)]]);
        let x = attracting_fixed_point(&h, &t).unwrap().unwrap();
        // Attracting fixed point of the (−1,1)-axis element is 1.
        assert!(x.lo <= s(1) && s(1) <= x.hi);
    }
}
