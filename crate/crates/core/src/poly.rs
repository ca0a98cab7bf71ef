//! Dense homogeneous polynomials over the reals: evaluation, calculus,
//! Kostlan sampling, and the Bombieri-Weyl and L^2 inner products.
//!
//! A [`HomogeneousPoly`] of degree `d` in `n_vars = n + 1` variables stores
//! one coefficient per monomial `x^a` with `|a| = d`, in the lexicographically
//! decreasing exponent order documented in [`crate::monomial`]. That order is
//! also the JSON serialization contract: `{"n": <sphere dim>, "d": <degree>,
//! "coeffs": [...]}` with `n = n_vars - 1`.

use std::sync::{Arc, OnceLock, RwLock};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monomial::{self, multinomial_f64, MonomialTable};

/// A point on the unit sphere S^n, stored as n+1 coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SphericalPoint {
    coords: Vec<f64>,
}

impl SphericalPoint {
    /// Wraps coordinates that must already be unit length (|norm - 1| <= 1e-12).
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let norm: f64 = coords.iter().map(|a| a * a).sum::<f64>().sqrt();
        let deviation = (norm - 1.0).abs();
        if deviation > 1e-12 {
            return Err(Error::NotUnit { deviation });
        }
        Ok(SphericalPoint { coords })
    }

    /// Projects arbitrary nonzero coordinates onto the sphere.
    pub fn project(coords: &[f64]) -> Result<Self> {
        let norm: f64 = coords.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidArgument("cannot project zero or non-finite point".into()));
        }
        Ok(SphericalPoint { coords: coords.iter().map(|a| a / norm).collect() })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn n_vars(&self) -> usize {
        self.coords.len()
    }

    /// Sphere dimension n (= number of coordinates minus one).
    pub fn sphere_dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn antipode(&self) -> SphericalPoint {
        SphericalPoint { coords: self.coords.iter().map(|a| -a).collect() }
    }
}

impl TryFrom<Vec<f64>> for SphericalPoint {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        SphericalPoint::new(v)
    }
}

impl From<SphericalPoint> for Vec<f64> {
    fn from(p: SphericalPoint) -> Vec<f64> {
        p.coords
    }
}

/// Uniform point on S^n from normalized Gaussians.
pub fn random_sphere_point<R: Rng>(n: usize, rng: &mut R) -> SphericalPoint {
    loop {
        let coords: Vec<f64> = (0..=n).map(|_| StandardNormal.sample(rng)).collect();
        if let Ok(p) = SphericalPoint::project(&coords) {
            return p;
        }
    }
}

/// Dense homogeneous polynomial of a fixed degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyRepr", into = "PolyRepr")]
pub struct HomogeneousPoly {
    n_vars: usize,
    degree: usize,
    coeffs: Vec<f64>,
}

/// JSON shape (`n` is the sphere dimension, so the polynomial has n+1 variables).
#[derive(Serialize, Deserialize, Clone)]
struct PolyRepr {
    n: usize,
    d: usize,
    coeffs: Vec<f64>,
}

impl TryFrom<PolyRepr> for HomogeneousPoly {
    type Error = Error;
    fn try_from(r: PolyRepr) -> Result<Self> {
        HomogeneousPoly::from_coeffs(r.n + 1, r.d, r.coeffs)
    }
}

impl From<HomogeneousPoly> for PolyRepr {
    fn from(p: HomogeneousPoly) -> PolyRepr {
        PolyRepr { n: p.n_vars - 1, d: p.degree, coeffs: p.coeffs }
    }
}

impl HomogeneousPoly {
    pub fn zero(n_vars: usize, degree: usize) -> Self {
        assert!(n_vars >= 1);
        let len = monomial::monomial_count(n_vars, degree);
        HomogeneousPoly { n_vars, degree, coeffs: vec![0.0; len] }
    }

    pub fn constant(n_vars: usize, value: f64) -> Self {
        HomogeneousPoly { n_vars, degree: 0, coeffs: vec![value] }
    }

    /// Single monomial `c * x^exps`.
    pub fn monomial(n_vars: usize, exps: &[u32], c: f64) -> Result<Self> {
        if exps.len() != n_vars {
            return Err(Error::DimensionMismatch { expected: n_vars, got: exps.len() });
        }
        let degree = exps.iter().map(|&a| a as usize).sum();
        let table = monomial::table(n_vars, degree);
        let mut coeffs = vec![0.0; table.len()];
        coeffs[table.rank(exps)] = c;
        Ok(HomogeneousPoly { n_vars, degree, coeffs })
    }

    pub fn from_coeffs(n_vars: usize, degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        let expected = monomial::monomial_count(n_vars, degree);
        if coeffs.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "coefficient vector has length {}, expected {} for degree {} in {} variables",
                coeffs.len(),
                expected,
                degree,
                n_vars
            )));
        }
        Ok(HomogeneousPoly { n_vars, degree, coeffs })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    /// Sphere dimension n = n_vars - 1.
    pub fn sphere_dim(&self) -> usize {
        self.n_vars - 1
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn table(&self) -> Arc<MonomialTable> {
        monomial::table(self.n_vars, self.degree)
    }

    /// Euclidean norm of the coefficient vector (not an invariant norm; used
    /// for zero tests and relative error gauges). Scaled by the largest entry
    /// so intermediate squares cannot overflow at high degree.
    pub fn coeff_norm(&self) -> f64 {
        let max = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if max == 0.0 || !max.is_finite() {
            return max;
        }
        let sum: f64 = self.coeffs.iter().map(|c| (c / max) * (c / max)).sum();
        max * sum.sqrt()
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.coeff_norm() <= tol
    }

    /// Evaluates at an arbitrary point of R^{n+1}.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_vars {
            return Err(Error::DimensionMismatch { expected: self.n_vars, got: x.len() });
        }
        Ok(self.value_at(x))
    }

    /// Unchecked evaluation used on hot paths.
    pub(crate) fn value_at(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n_vars);
        let table = self.table();
        // power table: pows[i][k] = x_i^k, laid out flat with stride degree+1
        let stride = self.degree + 1;
        let mut pows = vec![1.0f64; self.n_vars * stride];
        for i in 0..self.n_vars {
            for k in 1..stride {
                pows[i * stride + k] = pows[i * stride + k - 1] * x[i];
            }
        }
        let mut acc = 0.0;
        for (idx, exps) in table.iter() {
            let c = self.coeffs[idx];
            if c == 0.0 {
                continue;
            }
            let mut term = c;
            for (i, &a) in exps.iter().enumerate() {
                term *= pows[i * stride + a as usize];
            }
            acc += term;
        }
        acc
    }

    /// Partial derivative with respect to variable `i`.
    ///
    /// The derivative of a degree-0 polynomial is the zero polynomial of
    /// degree 0 by convention.
    pub fn partial_derivative(&self, i: usize) -> Result<HomogeneousPoly> {
        if i >= self.n_vars {
            return Err(Error::VariableIndex { index: i, n_vars: self.n_vars });
        }
        if self.degree == 0 {
            return Ok(HomogeneousPoly::zero(self.n_vars, 0));
        }
        let src = self.table();
        let dst = monomial::table(self.n_vars, self.degree - 1);
        let mut out = vec![0.0; dst.len()];
        let mut shifted = vec![0u32; self.n_vars];
        for (idx, exps) in src.iter() {
            let a = exps[i];
            if a == 0 {
                continue;
            }
            let c = self.coeffs[idx];
            if c == 0.0 {
                continue;
            }
            shifted.copy_from_slice(exps);
            shifted[i] = a - 1;
            out[dst.rank(&shifted)] += c * a as f64;
        }
        Ok(HomogeneousPoly { n_vars: self.n_vars, degree: self.degree - 1, coeffs: out })
    }

    /// Sum of second partials. Zero polynomial (degree 0) when degree <= 1.
    pub fn laplacian(&self) -> HomogeneousPoly {
        if self.degree < 2 {
            return HomogeneousPoly::zero(self.n_vars, 0);
        }
        let src = self.table();
        let dst = monomial::table(self.n_vars, self.degree - 2);
        let mut out = vec![0.0; dst.len()];
        let mut shifted = vec![0u32; self.n_vars];
        for (idx, exps) in src.iter() {
            let c = self.coeffs[idx];
            if c == 0.0 {
                continue;
            }
            for i in 0..self.n_vars {
                let a = exps[i];
                if a < 2 {
                    continue;
                }
                shifted.copy_from_slice(exps);
                shifted[i] = a - 2;
                out[dst.rank(&shifted)] += c * (a as f64) * (a as f64 - 1.0);
            }
        }
        HomogeneousPoly { n_vars: self.n_vars, degree: self.degree - 2, coeffs: out }
    }

    /// Multiplication by ||x||^2 = x_0^2 + ... + x_n^2 (degree rises by 2).
    pub fn multiply_norm_sq(&self) -> HomogeneousPoly {
        let src = self.table();
        let dst = monomial::table(self.n_vars, self.degree + 2);
        let mut out = vec![0.0; dst.len()];
        let mut shifted = vec![0u32; self.n_vars];
        for (idx, exps) in src.iter() {
            let c = self.coeffs[idx];
            if c == 0.0 {
                continue;
            }
            for i in 0..self.n_vars {
                shifted.copy_from_slice(exps);
                shifted[i] += 2;
                out[dst.rank(&shifted)] += c;
            }
        }
        HomogeneousPoly { n_vars: self.n_vars, degree: self.degree + 2, coeffs: out }
    }

    pub fn scale(&self, t: f64) -> HomogeneousPoly {
        HomogeneousPoly {
            n_vars: self.n_vars,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c * t).collect(),
        }
    }

    pub fn add(&self, other: &HomogeneousPoly) -> Result<HomogeneousPoly> {
        self.check_same_shape(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(HomogeneousPoly { n_vars: self.n_vars, degree: self.degree, coeffs })
    }

    pub fn sub(&self, other: &HomogeneousPoly) -> Result<HomogeneousPoly> {
        self.check_same_shape(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(HomogeneousPoly { n_vars: self.n_vars, degree: self.degree, coeffs })
    }

    /// Dense product of two homogeneous polynomials (degrees add).
    pub fn mul(&self, other: &HomogeneousPoly) -> Result<HomogeneousPoly> {
        if self.n_vars != other.n_vars {
            return Err(Error::DimensionMismatch { expected: self.n_vars, got: other.n_vars });
        }
        let ta = self.table();
        let tb = other.table();
        let dst = monomial::table(self.n_vars, self.degree + other.degree);
        let mut out = vec![0.0; dst.len()];
        let mut sum = vec![0u32; self.n_vars];
        for (ia, ea) in ta.iter() {
            let ca = self.coeffs[ia];
            if ca == 0.0 {
                continue;
            }
            for (ib, eb) in tb.iter() {
                let cb = other.coeffs[ib];
                if cb == 0.0 {
                    continue;
                }
                for k in 0..self.n_vars {
                    sum[k] = ea[k] + eb[k];
                }
                out[dst.rank(&sum)] += ca * cb;
            }
        }
        Ok(HomogeneousPoly {
            n_vars: self.n_vars,
            degree: self.degree + other.degree,
            coeffs: out,
        })
    }

    /// Multiplication by a linear form sum_j row[j] x_j.
    fn mul_linear(&self, row: &[f64]) -> HomogeneousPoly {
        let src = self.table();
        let dst = monomial::table(self.n_vars, self.degree + 1);
        let mut out = vec![0.0; dst.len()];
        let mut shifted = vec![0u32; self.n_vars];
        for (idx, exps) in src.iter() {
            let c = self.coeffs[idx];
            if c == 0.0 {
                continue;
            }
            for j in 0..self.n_vars {
                let r = row[j];
                if r == 0.0 {
                    continue;
                }
                shifted.copy_from_slice(exps);
                shifted[j] += 1;
                out[dst.rank(&shifted)] += c * r;
            }
        }
        HomogeneousPoly { n_vars: self.n_vars, degree: self.degree + 1, coeffs: out }
    }

    /// Coefficients of `P(Rx)` for an orthogonal matrix `R` (row-major).
    ///
    /// Expands each monomial as a product of the substituted linear forms.
    /// General linear substitution is out of scope: orthogonality is required
    /// by the invariance contracts and checked to 1e-10.
    pub fn compose_orthogonal(&self, r: &[Vec<f64>]) -> Result<HomogeneousPoly> {
        if r.len() != self.n_vars || r.iter().any(|row| row.len() != self.n_vars) {
            return Err(Error::DimensionMismatch { expected: self.n_vars, got: r.len() });
        }
        let defect = crate::linalg::orthogonality_defect(r);
        if defect > 1e-10 {
            return Err(Error::NotOrthogonal { deviation: defect });
        }
        if self.degree == 0 {
            return Ok(self.clone());
        }
        let table = self.table();
        let mut out = HomogeneousPoly::zero(self.n_vars, self.degree);
        for (idx, exps) in table.iter() {
            let c = self.coeffs[idx];
            if c == 0.0 {
                continue;
            }
            // product of the substituted linear forms, one factor at a time
            let mut acc = HomogeneousPoly::constant(self.n_vars, c);
            for (i, &a) in exps.iter().enumerate() {
                for _ in 0..a {
                    acc = acc.mul_linear(&r[i]);
                }
            }
            for (o, v) in out.coeffs.iter_mut().zip(&acc.coeffs) {
                *o += v;
            }
        }
        Ok(out)
    }

    fn check_same_shape(&self, other: &HomogeneousPoly) -> Result<()> {
        if self.n_vars != other.n_vars {
            return Err(Error::DimensionMismatch { expected: self.n_vars, got: other.n_vars });
        }
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch { expected: self.degree, got: other.degree });
        }
        Ok(())
    }
}

/// Bombieri-Weyl weights alpha!/d! for every monomial of a (n_vars, degree) pair.
fn bw_weights(n_vars: usize, degree: usize) -> Arc<Vec<f64>> {
    type Key = (usize, usize);
    static CACHE: OnceLock<RwLock<std::collections::HashMap<Key, Arc<Vec<f64>>>>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(std::collections::HashMap::new()));
    {
        let read = cache.read().unwrap();
        if let Some(w) = read.get(&(n_vars, degree)) {
            return Arc::clone(w);
        }
    }
    let table = monomial::table(n_vars, degree);
    let weights: Vec<f64> = table.iter().map(|(_, e)| 1.0 / multinomial_f64(e)).collect();
    let arc = Arc::new(weights);
    let mut write = cache.write().unwrap();
    Arc::clone(write.entry((n_vars, degree)).or_insert(arc))
}

/// Draws a Kostlan random polynomial: the coefficient of x^a is
/// `xi_a * sqrt(d!/a!)` with i.i.d. standard normal `xi_a`.
///
/// `n` is the sphere dimension, so the polynomial has `n + 1` variables.
pub fn sample_kostlan<R: Rng>(n: usize, d: usize, rng: &mut R) -> HomogeneousPoly {
    assert!(n >= 1, "sphere dimension must be at least 1");
    let n_vars = n + 1;
    let weights = bw_weights(n_vars, d);
    let coeffs: Vec<f64> = weights
        .iter()
        .map(|w| {
            let xi: f64 = StandardNormal.sample(rng);
            xi * (1.0 / w).sqrt()
        })
        .collect();
    HomogeneousPoly { n_vars, degree: d, coeffs }
}

/// Bombieri-Weyl inner product: sum over monomials of c_a(P) c_a(Q) a!/d!.
pub fn bw_inner(p: &HomogeneousPoly, q: &HomogeneousPoly) -> Result<f64> {
    if p.n_vars != q.n_vars {
        return Err(Error::DimensionMismatch { expected: p.n_vars, got: q.n_vars });
    }
    if p.degree != q.degree {
        return Err(Error::DegreeMismatch { expected: p.degree, got: q.degree });
    }
    let weights = bw_weights(p.n_vars, p.degree);
    Ok(p
        .coeffs
        .iter()
        .zip(&q.coeffs)
        .zip(weights.iter())
        .map(|((a, b), w)| a * b * w)
        .sum())
}

pub fn bw_norm(p: &HomogeneousPoly) -> f64 {
    bw_inner(p, p).expect("self inner product cannot mismatch").max(0.0).sqrt()
}

pub fn bw_dist(p: &HomogeneousPoly, q: &HomogeneousPoly) -> Result<f64> {
    Ok(bw_norm(&p.sub(q)?))
}

/// ln Gamma(m/2) for positive integer m, built by the half-integer recurrence.
fn ln_gamma_half_table(max_m: usize) -> Vec<f64> {
    let mut t = vec![0.0; max_m + 1];
    if max_m >= 1 {
        t[1] = 0.5 * std::f64::consts::PI.ln(); // Gamma(1/2) = sqrt(pi)
    }
    if max_m >= 2 {
        t[2] = 0.0; // Gamma(1) = 1
    }
    for m in 3..=max_m {
        // Gamma(m/2) = (m/2 - 1) Gamma(m/2 - 1)
        t[m] = ((m as f64 - 2.0) / 2.0).ln() + t[m - 2];
    }
    t
}

/// Exact monomial moment over S^{n}: integral of x^a dx.
///
/// Zero unless every exponent is even; otherwise
/// `2 * prod Gamma((a_i+1)/2) / Gamma((|a| + n_vars)/2)`.
pub fn monomial_sphere_moment(exps: &[u32]) -> f64 {
    if exps.iter().any(|&a| a % 2 == 1) {
        return 0.0;
    }
    let n_vars = exps.len();
    let total: usize = exps.iter().map(|&a| a as usize).sum();
    let lg = ln_gamma_half_table(total + n_vars + 2);
    let mut log_num = 0.0;
    for &a in exps {
        log_num += lg[a as usize + 1];
    }
    let log_den = lg[total + n_vars];
    2.0 * (log_num - log_den).exp()
}

/// Volume of S^n computed from the moment formula with zero exponents.
pub fn sphere_volume(n: usize) -> f64 {
    monomial_sphere_moment(&vec![0u32; n + 1])
}

/// L^2 inner product of the restrictions to S^n: exact sphere integral of
/// the product polynomial via closed-form monomial moments.
///
/// Degrees may differ; if they differ by an odd number the integral is zero
/// by antipodal parity and zero is returned.
pub fn l2_inner(p: &HomogeneousPoly, q: &HomogeneousPoly) -> Result<f64> {
    if p.n_vars != q.n_vars {
        return Err(Error::DimensionMismatch { expected: p.n_vars, got: q.n_vars });
    }
    if (p.degree + q.degree) % 2 == 1 {
        return Ok(0.0);
    }
    let product = p.mul(q)?;
    let table = product.table();
    let total = product.degree;
    let lg = ln_gamma_half_table(total + p.n_vars + 2);
    let log_den = lg[total + p.n_vars];
    let mut acc = 0.0;
    for (idx, exps) in table.iter() {
        let c = product.coeffs()[idx];
        if c == 0.0 {
            continue;
        }
        if exps.iter().any(|&a| a % 2 == 1) {
            continue;
        }
        let mut log_num = 0.0;
        for &a in exps {
            log_num += lg[a as usize + 1];
        }
        acc += c * 2.0 * (log_num - log_den).exp();
    }
    Ok(acc)
}

pub fn l2_norm(p: &HomogeneousPoly) -> f64 {
    l2_inner(p, p).expect("self inner product cannot mismatch").max(0.0).sqrt()
}

/// Ordered system of homogeneous polynomials sharing the ambient space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SystemRepr", into = "SystemRepr")]
pub struct PolySystem {
    components: Vec<HomogeneousPoly>,
}

#[derive(Serialize, Deserialize, Clone)]
struct SystemRepr {
    n: usize,
    components: Vec<HomogeneousPoly>,
}

impl TryFrom<SystemRepr> for PolySystem {
    type Error = Error;
    fn try_from(r: SystemRepr) -> Result<Self> {
        let sys = PolySystem::new(r.components)?;
        if sys.sphere_dim() != r.n {
            return Err(Error::DimensionMismatch { expected: r.n + 1, got: sys.n_vars() });
        }
        Ok(sys)
    }
}

impl From<PolySystem> for SystemRepr {
    fn from(s: PolySystem) -> SystemRepr {
        SystemRepr { n: s.sphere_dim(), components: s.components }
    }
}

impl PolySystem {
    pub fn new(components: Vec<HomogeneousPoly>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("system needs at least one component".into()));
        }
        let n_vars = components[0].n_vars();
        for c in &components {
            if c.n_vars() != n_vars {
                return Err(Error::DimensionMismatch { expected: n_vars, got: c.n_vars() });
            }
        }
        Ok(PolySystem { components })
    }

    pub fn single(p: HomogeneousPoly) -> Self {
        PolySystem { components: vec![p] }
    }

    pub fn components(&self) -> &[HomogeneousPoly] {
        &self.components
    }

    pub fn n_vars(&self) -> usize {
        self.components[0].n_vars()
    }

    pub fn sphere_dim(&self) -> usize {
        self.n_vars() - 1
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.components.iter().map(|c| c.degree()).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.components.iter().map(|c| c.degree()).max().unwrap_or(0)
    }

    /// System Bombieri-Weyl norm: root sum of squares of component norms.
    pub fn bw_norm(&self) -> f64 {
        self.components
            .iter()
            .map(|c| {
                let n = bw_norm(c);
                n * n
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn bw_dist(&self, other: &PolySystem) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::InvalidArgument("system sizes differ".into()));
        }
        let mut acc = 0.0;
        for (a, b) in self.components.iter().zip(&other.components) {
            let d = bw_dist(a, b)?;
            acc += d * d;
        }
        Ok(acc.sqrt())
    }

    pub fn scale(&self, t: f64) -> PolySystem {
        PolySystem { components: self.components.iter().map(|c| c.scale(t)).collect() }
    }

    pub fn compose_orthogonal(&self, r: &[Vec<f64>]) -> Result<PolySystem> {
        let components = self
            .components
            .iter()
            .map(|c| c.compose_orthogonal(r))
            .collect::<Result<Vec<_>>>()?;
        Ok(PolySystem { components })
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }
}

/// Samples a Kostlan system with the given degree pattern on S^n.
pub fn sample_kostlan_system<R: Rng>(n: usize, degrees: &[usize], rng: &mut R) -> PolySystem {
    let components = degrees.iter().map(|&d| sample_kostlan(n, d, rng)).collect();
    PolySystem { components }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_orthogonal;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sphere_poly(n_vars: usize) -> HomogeneousPoly {
        // x_0^2 + ... + x_n^2
        let mut p = HomogeneousPoly::zero(n_vars, 2);
        for i in 0..n_vars {
            let mut e = vec![0u32; n_vars];
            e[i] = 2;
            p = p.add(&HomogeneousPoly::monomial(n_vars, &e, 1.0).unwrap()).unwrap();
        }
        p
    }

    #[test]
    fn eval_examples() {
        let p = sphere_poly(3);
        assert_eq!(p.eval(&[1.0, 0.0, 0.0]).unwrap(), 1.0);

        let xy = HomogeneousPoly::monomial(2, &[1, 1], 1.0).unwrap();
        for t in [0.3, -1.7, 2.0] {
            let v = xy.eval(&[t, t]).unwrap();
            assert!((v - t * t).abs() <= 1e-12 * (t * t).max(1.0));
        }
    }

    #[test]
    fn eval_homogeneity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = sample_kostlan(2, 5, &mut rng);
        let x = [0.3, -0.4, 0.9];
        let x2: Vec<f64> = x.iter().map(|a| 2.0 * a).collect();
        let v = p.eval(&x).unwrap();
        let v2 = p.eval(&x2).unwrap();
        assert!((v2 - 32.0 * v).abs() <= 1e-9 * v.abs().max(1.0));
    }

    #[test]
    fn eval_dimension_mismatch() {
        let p = sphere_poly(3);
        assert!(matches!(p.eval(&[1.0, 0.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn partial_derivative_examples() {
        let x0sq = HomogeneousPoly::monomial(2, &[2, 0], 1.0).unwrap();
        let d0 = x0sq.partial_derivative(0).unwrap();
        assert_eq!(d0, HomogeneousPoly::monomial(2, &[1, 0], 2.0).unwrap());
        let d1 = x0sq.partial_derivative(1).unwrap();
        assert!(d1.is_zero(0.0));

        // mixed partials commute
        let p = HomogeneousPoly::monomial(2, &[1, 2], 1.0).unwrap();
        let d01 = p.partial_derivative(0).unwrap().partial_derivative(1).unwrap();
        let d10 = p.partial_derivative(1).unwrap().partial_derivative(0).unwrap();
        assert_eq!(d01, d10);
        assert_eq!(d01, HomogeneousPoly::monomial(2, &[0, 1], 2.0).unwrap());

        assert!(matches!(
            p.partial_derivative(5),
            Err(Error::VariableIndex { .. })
        ));
    }

    #[test]
    fn derivative_of_constant_is_zero_constant() {
        let c = HomogeneousPoly::constant(3, 4.2);
        let d = c.partial_derivative(1).unwrap();
        assert_eq!(d.degree(), 0);
        assert!(d.is_zero(0.0));
    }

    #[test]
    fn laplacian_examples() {
        let p = sphere_poly(3);
        let lap = p.laplacian();
        assert_eq!(lap, HomogeneousPoly::constant(3, 6.0));

        // x_0^2 - ||x||^2/3 is harmonic in three variables
        let x0sq = HomogeneousPoly::monomial(3, &[2, 0, 0], 1.0).unwrap();
        let h = x0sq.sub(&sphere_poly(3).scale(1.0 / 3.0)).unwrap();
        assert!(h.laplacian().is_zero(1e-14));

        let x0cubed = HomogeneousPoly::monomial(2, &[3, 0], 1.0).unwrap();
        assert_eq!(x0cubed.laplacian(), HomogeneousPoly::monomial(2, &[1, 0], 6.0).unwrap());
    }

    #[test]
    fn multiply_norm_sq_examples() {
        let one = HomogeneousPoly::constant(3, 1.0);
        assert_eq!(one.multiply_norm_sq(), sphere_poly(3));

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = sample_kostlan(2, 3, &mut rng);
        let q = p.multiply_norm_sq();
        let x = [0.2, 1.3, -0.5];
        let nsq: f64 = x.iter().map(|a| a * a).sum();
        let lhs = q.eval(&x).unwrap();
        let rhs = nsq * p.eval(&x).unwrap();
        assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));

        // on the sphere the factor disappears
        let s = random_sphere_point(2, &mut rng);
        let a = q.eval(s.coords()).unwrap();
        let b = p.eval(s.coords()).unwrap();
        assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
    }

    #[test]
    fn euler_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (n, d) in [(1usize, 6usize), (2, 5), (3, 4)] {
            let p = sample_kostlan(n, d, &mut rng);
            // sum_i x_i dP/dx_i as a coefficient vector
            let mut acc = HomogeneousPoly::zero(n + 1, d);
            for i in 0..=n {
                let mut e = vec![0u32; n + 1];
                e[i] = 1;
                let xi = HomogeneousPoly::monomial(n + 1, &e, 1.0).unwrap();
                acc = acc.add(&xi.mul(&p.partial_derivative(i).unwrap()).unwrap()).unwrap();
            }
            let expected = p.scale(d as f64);
            let err = acc.sub(&expected).unwrap().coeff_norm();
            assert!(err <= 1e-12 * expected.coeff_norm());
        }
    }

    #[test]
    fn kostlan_coefficient_variances() {
        // (n=1, d=2): variances of (x0^2, x0 x1, x1^2) are (1, 2, 1)
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let trials = 100_000usize;
        let mut sums = [0.0f64; 3];
        let mut sums_sq = [0.0f64; 3];
        for _ in 0..trials {
            let p = sample_kostlan(1, 2, &mut rng);
            for (k, c) in p.coeffs().iter().enumerate() {
                sums[k] += c;
                sums_sq[k] += c * c;
            }
        }
        let expect = [1.0, 2.0, 1.0];
        for k in 0..3 {
            let var = sums_sq[k] / trials as f64;
            // variance of the sample variance of N(0, s^2) is ~ 2 s^4 / n
            let se = (2.0 * expect[k] * expect[k] / trials as f64).sqrt();
            assert!(
                (var - expect[k]).abs() <= 3.0 * se,
                "variance {} for slot {} out of range (expect {})",
                var,
                k,
                expect[k]
            );
            assert!(sums[k].abs() / trials as f64 <= 3.0 * (expect[k] / trials as f64).sqrt());
        }
    }

    #[test]
    fn kostlan_degree_zero_is_standard_normal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let trials = 100_000usize;
        let mut sum_sq = 0.0;
        for _ in 0..trials {
            let p = sample_kostlan(3, 0, &mut rng);
            assert_eq!(p.coeffs().len(), 1);
            sum_sq += p.coeffs()[0] * p.coeffs()[0];
        }
        let var = sum_sq / trials as f64;
        assert!((var - 1.0).abs() <= 3.0 * (2.0 / trials as f64).sqrt());
    }

    #[test]
    fn kostlan_bw_norm_statistic() {
        // E ||P||_BW^2 = number of monomials, by the unit-variance BW basis;
        // the oracle is the brute-force monomial count.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (n, d) = (2usize, 6usize);
        let expected = crate::monomial::table(n + 1, d).len() as f64;
        let trials = 10_000usize;
        let mut acc = 0.0;
        for _ in 0..trials {
            let p = sample_kostlan(n, d, &mut rng);
            let b = bw_norm(&p);
            acc += b * b;
        }
        let mean = acc / trials as f64;
        // ||P||^2 is chi-square with `expected` dof: variance 2*expected
        let se = (2.0 * expected / trials as f64).sqrt();
        assert!(
            (mean - expected).abs() <= 3.0 * se,
            "mean {mean} expected {expected} se {se}"
        );
    }

    #[test]
    fn bw_examples() {
        for d in [1usize, 3, 7] {
            let mut e = vec![0u32; 2];
            e[0] = d as u32;
            let p = HomogeneousPoly::monomial(2, &e, 1.0).unwrap();
            assert!((bw_norm(&p) - 1.0).abs() <= 1e-14);
        }
        let xy = HomogeneousPoly::monomial(2, &[1, 1], 1.0).unwrap();
        assert!((bw_norm(&xy) - 1.0 / 2.0f64.sqrt()).abs() <= 1e-14);

        let p = sphere_poly(3);
        let q = HomogeneousPoly::monomial(2, &[1, 1], 1.0).unwrap();
        assert!(matches!(bw_inner(&p, &q), Err(Error::DimensionMismatch { .. })));
        let q3 = HomogeneousPoly::monomial(3, &[1, 1, 1], 1.0).unwrap();
        assert!(matches!(bw_inner(&p, &q3), Err(Error::DegreeMismatch { .. })));
    }

    #[test]
    fn bw_orthogonal_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let d = 1 + (rng.random::<u32>() % 10) as usize;
            let p = sample_kostlan(2, d, &mut rng);
            let r = random_orthogonal(3, &mut rng);
            let pr = p.compose_orthogonal(&r).unwrap();
            let a = bw_norm(&p);
            let b = bw_norm(&pr);
            assert!((a - b).abs() <= 1e-8 * a, "invariance violated: {a} vs {b}");
        }
    }

    #[test]
    fn inner_products_are_orthogonally_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..5 {
            let p = sample_kostlan(2, 6, &mut rng);
            let q = sample_kostlan(2, 6, &mut rng);
            let r = random_orthogonal(3, &mut rng);
            let pr = p.compose_orthogonal(&r).unwrap();
            let qr = q.compose_orthogonal(&r).unwrap();
            for inner in [bw_inner, l2_inner] {
                let before = inner(&p, &q).unwrap();
                let after = inner(&pr, &qr).unwrap();
                let scale = inner(&p, &p).unwrap().sqrt() * inner(&q, &q).unwrap().sqrt();
                assert!((after - before).abs() <= 1e-8 * scale, "{before} vs {after}");
            }
        }
    }

    #[test]
    fn inner_products_are_bilinear_and_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = sample_kostlan(2, 4, &mut rng);
        let q = sample_kostlan(2, 4, &mut rng);
        let r = sample_kostlan(2, 4, &mut rng);
        for inner in [bw_inner, l2_inner] {
            let pq = inner(&p, &q).unwrap();
            let qp = inner(&q, &p).unwrap();
            assert!((pq - qp).abs() <= 1e-10 * pq.abs().max(1.0));
            let lin = inner(&p.add(&r.scale(2.0)).unwrap(), &q).unwrap();
            let expect = pq + 2.0 * inner(&r, &q).unwrap();
            assert!((lin - expect).abs() <= 1e-9 * expect.abs().max(1.0));
            assert!(inner(&p, &p).unwrap() > 0.0);
        }
    }

    #[test]
    fn l2_examples() {
        // integral of x0^2 over S^2 is vol(S^2)/3 = 4 pi / 3
        let x0 = HomogeneousPoly::monomial(3, &[1, 0, 0], 1.0).unwrap();
        let v = l2_inner(&x0, &x0).unwrap();
        assert!((v - 4.0 * std::f64::consts::PI / 3.0).abs() <= 1e-12 * v);

        let x1 = HomogeneousPoly::monomial(3, &[0, 1, 0], 1.0).unwrap();
        assert_eq!(l2_inner(&x0, &x1).unwrap(), 0.0);

        assert!((sphere_volume(2) - 4.0 * std::f64::consts::PI).abs() <= 1e-12);
        assert!((sphere_volume(1) - 2.0 * std::f64::consts::PI).abs() <= 1e-12);
    }

    #[test]
    fn l2_matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = sample_kostlan(2, 4, &mut rng);
        let exact = l2_inner(&p, &p).unwrap();
        let samples = 1_000_000usize;
        let vol = sphere_volume(2);
        let mut acc = 0.0;
        let mut acc_sq = 0.0;
        for _ in 0..samples {
            let x = random_sphere_point(2, &mut rng);
            let v = p.value_at(x.coords());
            let f = v * v;
            acc += f;
            acc_sq += f * f;
        }
        let mean = acc / samples as f64;
        let var = (acc_sq / samples as f64 - mean * mean).max(0.0);
        let estimate = vol * mean;
        let se = vol * (var / samples as f64).sqrt();
        assert!(
            (estimate - exact).abs() <= 3.0 * se,
            "MC {estimate} vs exact {exact} (se {se})"
        );
    }

    #[test]
    fn compose_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let p = sample_kostlan(2, 4, &mut rng);
        let id = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        assert_eq!(p.compose_orthogonal(&id).unwrap(), p);

        // rotation sending e0 -> e1: P(x) = x0 becomes x1-like linear form.
        // Composition substitutes rows, so (P o R)(x) = P(Rx) picks row 0.
        let rot = vec![
            vec![0.0, 1.0, 0.0],
            vec![-1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let x0 = HomogeneousPoly::monomial(3, &[1, 0, 0], 1.0).unwrap();
        let composed = x0.compose_orthogonal(&rot).unwrap();
        assert_eq!(composed, HomogeneousPoly::monomial(3, &[0, 1, 0], 1.0).unwrap());

        // eval consistency at random points
        let r = random_orthogonal(3, &mut rng);
        let pr = p.compose_orthogonal(&r).unwrap();
        for _ in 0..5 {
            let x: Vec<f64> = (0..3).map(|_| StandardNormal.sample(&mut rng)).collect();
            let rx = crate::linalg::mat_vec(&r, &x);
            let a = pr.eval(&x).unwrap();
            let b = p.eval(&rx).unwrap();
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }

        // non-orthogonal input is rejected
        let bad = vec![
            vec![1.0, 0.2, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        assert!(matches!(p.compose_orthogonal(&bad), Err(Error::NotOrthogonal { .. })));
    }

    #[test]
    fn poly_json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = sample_kostlan(2, 3, &mut rng);
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.contains("\"n\":2"));
        assert!(text.contains("\"d\":3"));
        let back: HomogeneousPoly = serde_json::from_str(&text).unwrap();
        assert_eq!(p, back);

        // wrong coefficient count is rejected
        let bad = r#"{"n":1,"d":2,"coeffs":[1.0,2.0]}"#;
        assert!(serde_json::from_str::<HomogeneousPoly>(bad).is_err());
    }

    #[test]
    fn system_shares_dimension() {
        let p = sphere_poly(3);
        let q = HomogeneousPoly::monomial(2, &[1, 1], 1.0).unwrap();
        assert!(PolySystem::new(vec![p.clone(), q]).is_err());
        let sys = PolySystem::new(vec![p.clone(), p.scale(2.0)]).unwrap();
        assert_eq!(sys.degrees(), vec![2, 2]);
        let expect = (5.0f64 * bw_inner(&p, &p).unwrap()).sqrt();
        assert!((sys.bw_norm() - expect).abs() <= 1e-12 * expect);
    }
}
