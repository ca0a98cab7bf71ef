//! Harmonic decomposition of homogeneous polynomials, low-degree truncation,
//! Sobolev norms, and the zonal-kernel diagonal identity.
//!
//! Every `P` of degree `d` splits as `P = sum_l ||x||^{d-l} H_l` over the
//! degrees `l` with `d - l` even, where each `H_l` is harmonic. Restricted to
//! the sphere the `||x||` factors disappear, so a polynomial map restricted to
//! S^n is represented by its lists of harmonic parts ([`SphereFunction`]).

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monomial;
use crate::poly::{l2_inner, l2_norm, sphere_volume, HomogeneousPoly, PolySystem, SphericalPoint};

/// The parts `{l -> H_l}` of a single polynomial, with `d - l` even.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicDecomposition {
    n_vars: usize,
    degree: usize,
    parts: BTreeMap<usize, HomogeneousPoly>,
}

impl HarmonicDecomposition {
    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Nonzero harmonic parts keyed by their degree.
    pub fn parts(&self) -> &BTreeMap<usize, HomogeneousPoly> {
        &self.parts
    }

    pub fn part(&self, l: usize) -> Option<&HomogeneousPoly> {
        self.parts.get(&l)
    }

    /// Rebuilds the original polynomial as `sum_l ||x||^{d-l} H_l`.
    pub fn reconstruct(&self) -> HomogeneousPoly {
        let mut acc = HomogeneousPoly::zero(self.n_vars, self.degree);
        for (&l, h) in &self.parts {
            let mut lifted = h.clone();
            for _ in 0..(self.degree - l) / 2 {
                lifted = lifted.multiply_norm_sq();
            }
            acc = acc.add(&lifted).expect("degrees agree by construction");
        }
        acc
    }

    /// Largest relative harmonicity defect over the parts:
    /// max_l ||laplacian(H_l)|| / ||H_l|| in coefficient norm.
    pub fn max_harmonicity_defect(&self) -> f64 {
        self.parts
            .values()
            .map(|h| {
                let norm = h.coeff_norm();
                if norm == 0.0 {
                    0.0
                } else {
                    h.laplacian().coeff_norm() / norm
                }
            })
            .fold(0.0, f64::max)
    }
}

/// `lap^j (||x||^{2i} H_l) = A(i, j, l) ||x||^{2(i-j)} H_l` for harmonic H of
/// degree l in `n_vars` variables: the product of the per-application factors
/// `2t (2t + 2l + n_vars - 2)` for t = i, i-1, ..., i-j+1.
fn laplacian_cascade_factor(i: usize, j: usize, l: usize, n_vars: usize) -> f64 {
    let mut acc = 1.0f64;
    for t in (i - j + 1)..=i {
        acc *= 2.0 * t as f64 * (2.0 * t as f64 + 2.0 * l as f64 + n_vars as f64 - 2.0);
    }
    acc
}

/// Splits `P` into harmonic parts.
///
/// On the circle (two variables) the parts are Fourier modes and are read off
/// by discrete trigonometric projection, which is stable at any degree this
/// crate handles. In more variables, writing `P = sum_i ||x||^{2i} H_{d-2i}`,
/// the iterated Laplacians of `P` form a triangular system: `lap^j P`
/// contains `A(j,j,l) H_{d-2j}` plus lifted copies of the lower-degree parts
/// with known constants. The parts are solved smallest degree first, each
/// from the pristine `lap^j P` with the already-known parts subtracted
/// analytically, and polished to harmonicity by a residual correction pass.
pub fn decompose(p: &HomogeneousPoly) -> Result<HarmonicDecomposition> {
    if p.n_vars() == 2 {
        return circle_decompose(p);
    }
    decompose_cascade(p)
}

/// Fourier-mode split of a binary form restricted to the circle:
/// `p(theta) = sum_l a_l cos(l theta) + b_l sin(l theta)` with the harmonic
/// polynomials `Re/Im (x0 + i x1)^l` as the mode representatives.
fn circle_decompose(p: &HomogeneousPoly) -> Result<HarmonicDecomposition> {
    let d = p.degree();
    let grid = 2 * d + 2;
    let tau = 2.0 * std::f64::consts::PI;
    let values: Vec<f64> = (0..grid)
        .map(|k| {
            let theta = tau * k as f64 / grid as f64;
            p.value_at(&[theta.cos(), theta.sin()])
        })
        .collect();
    let value_scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut parts = BTreeMap::new();
    let mut l = d % 2;
    while l <= d {
        let mut a = 0.0;
        let mut b = 0.0;
        for (k, v) in values.iter().enumerate() {
            let angle = tau * (l * k % grid) as f64 / grid as f64;
            a += v * angle.cos();
            b += v * angle.sin();
        }
        let scale = if l == 0 { 1.0 / grid as f64 } else { 2.0 / grid as f64 };
        a *= scale;
        b *= scale;
        let amplitude = (a * a + b * b).sqrt();
        if amplitude > 1e-13 * value_scale.max(1e-300) {
            let h = circle_mode(l, a, b)?;
            parts.insert(l, h);
        }
        l += 2;
    }
    let dec = HarmonicDecomposition { n_vars: 2, degree: d, parts };
    // The monomial basis of high-degree circle harmonics is exponentially
    // ill-conditioned, so correctness is checked where it matters: values on
    // the circle, at points interleaved with the projection grid.
    let modes = CircleModes::from_parts(&dec.parts);
    let mut worst = 0.0f64;
    for k in 0..grid {
        let theta = tau * (k as f64 + 0.5) / grid as f64;
        let direct = p.value_at(&[theta.cos(), theta.sin()]);
        worst = worst.max((modes.value(theta) - direct).abs());
    }
    if worst > 1e-9 * value_scale.max(1e-300) {
        return Err(Error::Internal(format!(
            "circle harmonic split value residual {:.3e} at degree {d}",
            worst
        )));
    }
    Ok(dec)
}

/// Trigonometric view of a circle sphere-function component:
/// `f(theta) = sum_l a_l cos(l theta) + b_l sin(l theta)`.
///
/// The amplitudes are read exactly from two monomial coefficients of each
/// harmonic part (`a_l` is the x0^l coefficient, `l b_l` the x0^{l-1} x1
/// coefficient), so evaluation through this view stays accurate at degrees
/// where the dense monomial form of the part has lost all precision.
#[derive(Debug, Clone)]
pub struct CircleModes {
    modes: Vec<(usize, f64, f64)>,
}

impl CircleModes {
    pub fn from_component(c: &SphereComponent) -> Result<CircleModes> {
        if c.n_vars != 2 {
            return Err(Error::InvalidArgument("trigonometric view needs n = 1".into()));
        }
        Ok(CircleModes::from_parts(&c.parts))
    }

    fn from_parts(parts: &BTreeMap<usize, HomogeneousPoly>) -> CircleModes {
        let modes = parts
            .iter()
            .map(|(&l, h)| {
                if l == 0 {
                    (0, h.coeffs()[0], 0.0)
                } else {
                    let table = monomial::table(2, l);
                    let a = h.coeffs()[table.rank(&[l as u32, 0])];
                    let b = h.coeffs()[table.rank(&[(l - 1) as u32, 1])] / l as f64;
                    (l, a, b)
                }
            })
            .collect();
        CircleModes { modes }
    }

    pub fn max_frequency(&self) -> usize {
        self.modes.last().map(|&(l, _, _)| l).unwrap_or(0)
    }

    /// The (frequency, cosine, sine) amplitude triples.
    pub fn amplitudes(&self) -> &[(usize, f64, f64)] {
        &self.modes
    }

    /// Value and theta-derivatives in one pass. The per-mode angles advance
    /// by a rotation recurrence, so the cost is a handful of multiplies per
    /// mode instead of two transcendental calls (drift is ~ l epsilon, far
    /// below the working tolerances).
    pub fn derivatives(&self, theta: f64) -> CircleDerivatives {
        let c1 = theta.cos();
        let s1 = theta.sin();
        let mut k = 0usize;
        let mut ck = 1.0f64; // cos(k theta)
        let mut sk = 0.0f64; // sin(k theta)
        let mut out = CircleDerivatives::default();
        for &(l, a, b) in &self.modes {
            while k < l {
                let c = ck * c1 - sk * s1;
                let s = sk * c1 + ck * s1;
                ck = c;
                sk = s;
                k += 1;
            }
            let lf = l as f64;
            let val = a * ck + b * sk;
            out.value += val;
            out.dtheta += lf * (b * ck - a * sk);
            out.d2theta -= lf * lf * val;
            out.radial += lf * val;
        }
        out
    }

    pub fn value(&self, theta: f64) -> f64 {
        self.derivatives(theta).value
    }

    /// d/dtheta.
    pub fn dtheta(&self, theta: f64) -> f64 {
        self.derivatives(theta).dtheta
    }

    /// Second derivative in theta.
    pub fn d2theta(&self, theta: f64) -> f64 {
        self.derivatives(theta).d2theta
    }

    /// Radial derivative `x . grad` of the parts-sum representative on the
    /// circle: each degree-l part contributes `l` times itself (Euler).
    pub fn radial(&self, theta: f64) -> f64 {
        self.derivatives(theta).radial
    }
}

/// Value and derivatives of a [`CircleModes`] at one angle.
#[derive(Debug, Clone, Copy, Default)]
pub struct CircleDerivatives {
    pub value: f64,
    pub dtheta: f64,
    pub d2theta: f64,
    pub radial: f64,
}

/// `a Re (x0 + i x1)^l + b Im (x0 + i x1)^l` as a degree-l polynomial.
fn circle_mode(l: usize, a: f64, b: f64) -> Result<HomogeneousPoly> {
    if l == 0 {
        return Ok(HomogeneousPoly::constant(2, a));
    }
    let table = monomial::table(2, l);
    let mut coeffs = vec![0.0; table.len()];
    let mut binom = 1.0f64; // C(l, k)
    for k in 0..=l {
        // exponent (l-k, k) of x0^{l-k} x1^k
        let idx = table.rank(&[(l - k) as u32, k as u32]);
        // i^k = rotates through (1, i, -1, -i)
        coeffs[idx] = match k % 4 {
            0 => binom * a,
            1 => binom * b,
            2 => -binom * a,
            _ => -binom * b,
        };
        binom *= (l - k) as f64 / (k + 1) as f64;
    }
    HomogeneousPoly::from_coeffs(2, l, coeffs)
}

fn decompose_cascade(p: &HomogeneousPoly) -> Result<HarmonicDecomposition> {
    let (mut dec, lifted_norms) = decompose_cascade_raw(p)?;
    // Residual polish: move each part's Laplacian defect (a tiny polynomial)
    // into the lower parts where it belongs. Errors of the inner splits are
    // relative to the defect magnitude, so one pass over the offending parts
    // contracts their defect sharply. Only triggered near the top of the
    // degree range; the target is a comfortable margin under the 1e-9
    // harmonicity contract.
    for _pass in 0..3 {
        let worst = dec.max_harmonicity_defect();
        if worst <= 6e-10 {
            break;
        }
        refine_cascade(&mut dec, p.n_vars())?;
    }
    // Parts whose lifted contribution at degree d is at the rounding floor of
    // P are numerically zero and dropped. The raw split already produced the
    // lifted magnitudes; refinement compensations are defect-sized, so a
    // fresh lift is only needed for parts it introduced.
    let d = dec.degree;
    let floor = 1e-11 * p.coeff_norm();
    dec.parts.retain(|&l, h| {
        let norm = lifted_norms.get(&l).copied().unwrap_or_else(|| {
            let mut lifted = h.clone();
            for _ in 0..(d - l) / 2 {
                lifted = lifted.multiply_norm_sq();
            }
            lifted.coeff_norm()
        });
        norm > floor
    });
    Ok(dec)
}

fn refine_cascade(dec: &mut HarmonicDecomposition, n_vars: usize) -> Result<()> {
    let degrees: Vec<usize> = dec.parts.keys().rev().copied().collect();
    for l in degrees {
        let Some(h) = dec.parts.get(&l) else { continue };
        let defect = h.laplacian();
        if defect.is_zero(3e-10 * h.coeff_norm()) {
            continue;
        }
        let (inner, _) = decompose_cascade_raw(&defect)?;
        let mut corrected = dec.parts.get(&l).unwrap().clone();
        for (&mu, g) in inner.parts.iter() {
            // defect = sum_mu ||x||^{l-2-mu} G_mu, and
            // lap(||x||^{2(i+1)} G_mu) = A(i+1,1,mu) ||x||^{2i} G_mu
            let i = (l - 2 - mu) / 2;
            let c = laplacian_cascade_factor(i + 1, 1, mu, n_vars);
            let mut lifted = g.scale(1.0 / c);
            // compensate the receiving part so the reconstruction is kept
            let entry =
                dec.parts.entry(mu).or_insert_with(|| HomogeneousPoly::zero(n_vars, mu));
            *entry = entry.add(&lifted)?;
            for _ in 0..=i {
                lifted = lifted.multiply_norm_sq();
            }
            corrected = corrected.sub(&lifted)?;
        }
        dec.parts.insert(l, corrected);
    }
    Ok(())
}

fn decompose_cascade_raw(
    p: &HomogeneousPoly,
) -> Result<(HarmonicDecomposition, BTreeMap<usize, f64>)> {
    let d = p.degree();
    let n_vars = p.n_vars();
    let k_max = d / 2;
    // pristine iterated Laplacians of P
    let mut iterated: Vec<HomogeneousPoly> = Vec::with_capacity(k_max + 1);
    iterated.push(p.clone());
    for _ in 1..=k_max {
        let next = iterated.last().unwrap().laplacian();
        if !next.coeff_norm().is_finite() {
            return Err(Error::Internal(format!(
                "iterated Laplacian overflow at degree {d} in {n_vars} variables"
            )));
        }
        iterated.push(next);
    }
    let mut parts: BTreeMap<usize, HomogeneousPoly> = BTreeMap::new();
    // lifted[l'] tracks ||x||^{2(i-j)} H_{l'} for the current j, advanced by
    // one ||x||^2 factor as j decreases
    let mut lifted: BTreeMap<usize, HomogeneousPoly> = BTreeMap::new();
    for j in (0..=k_max).rev() {
        let l = d - 2 * j;
        let mut acc = iterated[j].clone();
        for (&l_prev, lift) in &lifted {
            let i = (d - l_prev) / 2;
            let weight = laplacian_cascade_factor(i, j, l_prev, n_vars);
            acc = acc.sub(&lift.scale(weight))?;
        }
        let divisor = laplacian_cascade_factor(j, j, l, n_vars);
        if !divisor.is_finite() || divisor == 0.0 {
            return Err(Error::Internal(format!(
                "degree {d} exceeds the floating-point range of the split constants"
            )));
        }
        let h = acc.scale(1.0 / divisor);
        // keep every nonzero part here; the caller prunes by lifted magnitude
        if !h.is_zero(0.0) {
            parts.insert(l, h.clone());
            lifted.insert(l, h);
        }
        if j > 0 {
            for lift in lifted.values_mut() {
                *lift = lift.multiply_norm_sq();
            }
        }
    }
    // the lifted parts now sit at degree d: their sum must reproduce P
    let mut reconstructed = HomogeneousPoly::zero(n_vars, d);
    let mut lifted_norms = BTreeMap::new();
    for (&l, lift) in &lifted {
        reconstructed = reconstructed.add(lift)?;
        lifted_norms.insert(l, lift.coeff_norm());
    }
    let err = reconstructed.sub(p)?.coeff_norm();
    if err > 1e-9 * p.coeff_norm().max(1e-300) {
        return Err(Error::Internal(format!(
            "harmonic split residual {:.3e} for degree {d} in {n_vars} variables",
            err
        )));
    }
    Ok((HarmonicDecomposition { n_vars, degree: d, parts }, lifted_norms))
}

/// One component of a sphere map: the harmonic parts of a polynomial of
/// ambient degree `degree`, restricted to S^n.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereComponent {
    n_vars: usize,
    degree: usize,
    parts: BTreeMap<usize, HomogeneousPoly>,
}

#[derive(Serialize, Deserialize, Clone)]
struct ComponentRepr {
    d: usize,
    parts: Vec<PartRepr>,
}

#[derive(Serialize, Deserialize, Clone)]
struct PartRepr {
    l: usize,
    coeffs: Vec<f64>,
}

impl SphereComponent {
    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    /// Ambient degree of the polynomial this component came from.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn parts(&self) -> &BTreeMap<usize, HomogeneousPoly> {
        &self.parts
    }

    pub fn max_part_degree(&self) -> usize {
        self.parts.keys().next_back().copied().unwrap_or(0)
    }

    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.parts.values().map(|h| h.value_at(x)).sum()
    }

    fn scale(&self, t: f64) -> SphereComponent {
        SphereComponent {
            n_vars: self.n_vars,
            degree: self.degree,
            parts: self.parts.iter().map(|(&l, h)| (l, h.scale(t))).collect(),
        }
    }
}

/// A function S^n -> R^m given componentwise by finite sums of restricted
/// harmonics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FunctionRepr", into = "FunctionRepr")]
pub struct SphereFunction {
    components: Vec<SphereComponent>,
}

#[derive(Serialize, Deserialize, Clone)]
struct FunctionRepr {
    n: usize,
    components: Vec<ComponentRepr>,
}

impl TryFrom<FunctionRepr> for SphereFunction {
    type Error = Error;
    fn try_from(r: FunctionRepr) -> Result<Self> {
        let n_vars = r.n + 1;
        let mut components = Vec::with_capacity(r.components.len());
        for c in r.components {
            let mut parts = BTreeMap::new();
            for part in c.parts {
                if (c.d + part.l) % 2 != 0 {
                    return Err(Error::InvalidArgument(format!(
                        "part degree {} has wrong parity for ambient degree {}",
                        part.l, c.d
                    )));
                }
                let h = HomogeneousPoly::from_coeffs(n_vars, part.l, part.coeffs)?;
                parts.insert(part.l, h);
            }
            components.push(SphereComponent { n_vars, degree: c.d, parts });
        }
        SphereFunction::new(components)
    }
}

impl From<SphereFunction> for FunctionRepr {
    fn from(f: SphereFunction) -> FunctionRepr {
        FunctionRepr {
            n: f.sphere_dim(),
            components: f
                .components
                .into_iter()
                .map(|c| ComponentRepr {
                    d: c.degree,
                    parts: c
                        .parts
                        .into_iter()
                        .map(|(l, h)| PartRepr { l, coeffs: h.coeffs().to_vec() })
                        .collect(),
                })
                .collect(),
        }
    }
}

impl SphereFunction {
    pub fn new(components: Vec<SphereComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("sphere function needs a component".into()));
        }
        let n_vars = components[0].n_vars;
        for c in &components {
            if c.n_vars != n_vars {
                return Err(Error::DimensionMismatch { expected: n_vars, got: c.n_vars });
            }
        }
        Ok(SphereFunction { components })
    }

    /// Restriction of a polynomial system to the sphere, as harmonic parts.
    pub fn from_system(system: &PolySystem) -> Result<Self> {
        let components = system
            .components()
            .iter()
            .map(|p| {
                let dec = decompose(p)?;
                Ok(SphereComponent {
                    n_vars: dec.n_vars,
                    degree: dec.degree,
                    parts: dec.parts,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SphereFunction { components })
    }

    pub fn from_decomposition(dec: HarmonicDecomposition) -> Self {
        SphereFunction {
            components: vec![SphereComponent {
                n_vars: dec.n_vars,
                degree: dec.degree,
                parts: dec.parts,
            }],
        }
    }

    pub fn components(&self) -> &[SphereComponent] {
        &self.components
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn n_vars(&self) -> usize {
        self.components[0].n_vars
    }

    pub fn sphere_dim(&self) -> usize {
        self.n_vars() - 1
    }

    /// Largest ambient degree over the components.
    pub fn max_degree(&self) -> usize {
        self.components.iter().map(|c| c.degree).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &SphericalPoint) -> Result<Vec<f64>> {
        if x.n_vars() != self.n_vars() {
            return Err(Error::DimensionMismatch { expected: self.n_vars(), got: x.n_vars() });
        }
        Ok(self.components.iter().map(|c| c.value_at(x.coords())).collect())
    }

    pub fn scale(&self, t: f64) -> SphereFunction {
        SphereFunction { components: self.components.iter().map(|c| c.scale(t)).collect() }
    }

    /// Componentwise difference `self - other` as retained harmonic parts.
    pub fn sub(&self, other: &SphereFunction) -> Result<SphereFunction> {
        if self.n_components() != other.n_components() || self.n_vars() != other.n_vars() {
            return Err(Error::InvalidArgument("sphere function shapes differ".into()));
        }
        let mut components = Vec::with_capacity(self.components.len());
        for (a, b) in self.components.iter().zip(&other.components) {
            let mut parts: BTreeMap<usize, HomogeneousPoly> = a.parts.clone();
            for (&l, h) in &b.parts {
                match parts.remove(&l) {
                    Some(existing) => {
                        let diff = existing.sub(h)?;
                        if !diff.is_zero(0.0) {
                            parts.insert(l, diff);
                        }
                    }
                    None => {
                        parts.insert(l, h.scale(-1.0));
                    }
                }
            }
            components.push(SphereComponent {
                n_vars: a.n_vars,
                degree: a.degree.max(b.degree),
                parts,
            });
        }
        Ok(SphereFunction { components })
    }

    /// One homogeneous polynomial per component agreeing with it on the
    /// sphere: each retained part is multiplied by `||x||^{lmax - l}` with
    /// `lmax` the largest retained degree of that component. All retained
    /// degrees of a component must share parity.
    pub fn homogeneous_representative(&self) -> Result<PolySystem> {
        let mut reps = Vec::with_capacity(self.components.len());
        for c in &self.components {
            if c.parts.is_empty() {
                reps.push(HomogeneousPoly::zero(c.n_vars, 0));
                continue;
            }
            let lmax = c.max_part_degree();
            let mut acc = HomogeneousPoly::zero(c.n_vars, lmax);
            for (&l, h) in &c.parts {
                if (lmax - l) % 2 != 0 {
                    return Err(Error::InvalidArgument(
                        "mixed parity parts cannot be homogenized".into(),
                    ));
                }
                let mut lifted = h.clone();
                for _ in 0..(lmax - l) / 2 {
                    lifted = lifted.multiply_norm_sq();
                }
                acc = acc.add(&lifted)?;
            }
            reps.push(acc);
        }
        PolySystem::new(reps)
    }

    /// L^2 norm of the map (root sum of squares over components; parts of
    /// distinct degrees are orthogonal on the sphere).
    pub fn l2_norm(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.parts.values())
            .map(|h| {
                let n = l2_norm(h);
                n * n
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Keeps exactly the harmonic parts of degree at most `L`.
///
/// Parity is inherent: parts only exist at degrees with `d_i - l` even.
/// Idempotent and linear, and contractive for both invariant inner products.
pub fn truncate(f: &SphereFunction, level: usize) -> Result<SphereFunction> {
    if level > f.max_degree() {
        return Err(Error::InvalidArgument(format!(
            "truncation level {} exceeds degree {}",
            level,
            f.max_degree()
        )));
    }
    let components = f
        .components
        .iter()
        .map(|c| SphereComponent {
            n_vars: c.n_vars,
            degree: c.degree,
            parts: c.parts.iter().filter(|(&l, _)| l <= level).map(|(&l, h)| (l, h.clone())).collect(),
        })
        .collect();
    Ok(SphereFunction { components })
}

/// Truncation of a polynomial system: decompose then keep degrees <= L.
pub fn truncate_system(p: &PolySystem, level: usize) -> Result<SphereFunction> {
    truncate(&SphereFunction::from_system(p)?, level)
}

/// Sobolev q-norm from the harmonic parts:
/// `(||H_0||^2 + sum_{l>=1} l^{2q} ||H_l||^2)^{1/2}` per component, combined
/// as a root sum of squares. `q = 0` is the L^2 norm.
pub fn sobolev_norm(f: &SphereFunction, q: f64) -> f64 {
    let mut acc = 0.0;
    for c in &f.components {
        for (&l, h) in &c.parts {
            let norm = l2_norm(h);
            let weight = if l == 0 { 1.0 } else { (l as f64).powf(2.0 * q) };
            acc += weight * norm * norm;
        }
    }
    acc.sqrt()
}

/// Dimension of the space of harmonic homogeneous polynomials of degree `l`
/// in `n + 1` variables: C(l+n, n) - C(l-2+n, n).
pub fn dim_harmonic(n: usize, l: usize) -> usize {
    assert!(n >= 1);
    let full = monomial::monomial_count(n + 1, l);
    if l < 2 {
        return full;
    }
    full - monomial::monomial_count(n + 1, l - 2)
}

type BasisKey = (usize, usize);

fn basis_cache() -> &'static RwLock<HashMap<BasisKey, Arc<Vec<HomogeneousPoly>>>> {
    static CACHE: OnceLock<RwLock<HashMap<BasisKey, Arc<Vec<HomogeneousPoly>>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// L^2-orthonormal basis of the harmonic space `H_{n,l}`, built once per
/// `(n, l)` by Gram-Schmidt over the harmonic projections of the degree-l
/// monomials.
pub fn harmonic_basis(n: usize, l: usize) -> Result<Arc<Vec<HomogeneousPoly>>> {
    {
        let cache = basis_cache().read().unwrap();
        if let Some(b) = cache.get(&(n, l)) {
            return Ok(Arc::clone(b));
        }
    }
    let dim = dim_harmonic(n, l);
    let n_vars = n + 1;
    let table = monomial::table(n_vars, l);
    let mut basis: Vec<HomogeneousPoly> = Vec::with_capacity(dim);
    for (_, exps) in table.iter() {
        if basis.len() == dim {
            break;
        }
        let mono = HomogeneousPoly::monomial(n_vars, exps, 1.0)?;
        let dec = decompose(&mono)?;
        let Some(h) = dec.part(l) else { continue };
        let mut candidate = h.clone();
        let original = l2_norm(&candidate);
        if original == 0.0 {
            continue;
        }
        // two Gram-Schmidt passes for numerical stability
        for _ in 0..2 {
            for b in &basis {
                let proj = l2_inner(&candidate, b)?;
                candidate = candidate.sub(&b.scale(proj))?;
            }
        }
        let remaining = l2_norm(&candidate);
        if remaining > 1e-8 * original {
            basis.push(candidate.scale(1.0 / remaining));
        }
    }
    if basis.len() != dim {
        return Err(Error::Internal(format!(
            "harmonic basis for n={n} l={l} stalled at {} of {dim} vectors",
            basis.len()
        )));
    }
    let arc = Arc::new(basis);
    let mut cache = basis_cache().write().unwrap();
    Ok(Arc::clone(cache.entry((n, l)).or_insert(arc)))
}

/// Diagonal of the degree-l zonal kernel at `x`: `sum_j y_j(x)^2` over an
/// orthonormal basis. Equal to `dim_harmonic(n, l) / vol(S^n)` for every x.
pub fn zonal_check(n: usize, l: usize, x: &SphericalPoint) -> Result<f64> {
    if x.n_vars() != n + 1 {
        return Err(Error::DimensionMismatch { expected: n + 1, got: x.n_vars() });
    }
    let basis = harmonic_basis(n, l)?;
    Ok(basis.iter().map(|y| {
        let v = y.value_at(x.coords());
        v * v
    }).sum())
}

/// The constant the zonal diagonal must equal.
pub fn zonal_expected(n: usize, l: usize) -> f64 {
    dim_harmonic(n, l) as f64 / sphere_volume(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_orthogonal;
    use crate::poly::{bw_inner, random_sphere_point, sample_kostlan};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn norm_sq_poly(n_vars: usize) -> HomogeneousPoly {
        HomogeneousPoly::constant(n_vars, 1.0).multiply_norm_sq()
    }

    #[test]
    fn decompose_norm_sq_is_constant_part() {
        let p = norm_sq_poly(3);
        let dec = decompose(&p).unwrap();
        assert_eq!(dec.parts().len(), 1);
        let h0 = dec.part(0).unwrap();
        assert!((h0.coeffs()[0] - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn decompose_x0_squared() {
        let p = HomogeneousPoly::monomial(3, &[2, 0, 0], 1.0).unwrap();
        let dec = decompose(&p).unwrap();
        let h0 = dec.part(0).unwrap();
        assert!((h0.coeffs()[0] - 1.0 / 3.0).abs() <= 1e-14);
        let h2 = dec.part(2).unwrap();
        let expect = p.sub(&norm_sq_poly(3).scale(1.0 / 3.0)).unwrap();
        assert!(h2.sub(&expect).unwrap().coeff_norm() <= 1e-14);
        assert!(dec.max_harmonicity_defect() <= 1e-12);
    }

    #[test]
    fn decompose_random_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let p = sample_kostlan(2, 8, &mut rng);
        let dec = decompose(&p).unwrap();
        // reconstruction
        let err = dec.reconstruct().sub(&p).unwrap().coeff_norm();
        assert!(err <= 1e-9 * p.coeff_norm());
        // harmonicity
        assert!(dec.max_harmonicity_defect() <= 1e-9);
        // pairwise orthogonality in both invariant products
        let parts: Vec<(usize, &HomogeneousPoly)> =
            dec.parts().iter().map(|(&l, h)| (l, h)).collect();
        for (i, &(li, hi)) in parts.iter().enumerate() {
            for &(lj, hj) in parts.iter().skip(i + 1) {
                let v = l2_inner(hi, hj).unwrap();
                let scale = l2_norm(hi) * l2_norm(hj);
                assert!(v.abs() <= 1e-8 * scale, "l2 parts {li},{lj} not orthogonal");
                // lift to common degree for the BW product
                let lift = |h: &HomogeneousPoly, l: usize| {
                    let mut out = h.clone();
                    for _ in 0..(dec.degree() - l) / 2 {
                        out = out.multiply_norm_sq();
                    }
                    out
                };
                let a = lift(hi, li);
                let b = lift(hj, lj);
                let bw = bw_inner(&a, &b).unwrap();
                let bw_scale = crate::poly::bw_norm(&a) * crate::poly::bw_norm(&b);
                assert!(bw.abs() <= 1e-8 * bw_scale, "bw parts {li},{lj} not orthogonal");
            }
        }
    }

    #[test]
    fn decompose_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let p = sample_kostlan(2, 6, &mut rng);
        let q = sample_kostlan(2, 6, &mut rng);
        let combo = p.scale(2.5).add(&q.scale(-1.25)).unwrap();
        let dp = decompose(&p).unwrap();
        let dq = decompose(&q).unwrap();
        let dc = decompose(&combo).unwrap();
        for l in (0..=6).step_by(2) {
            let zero = HomogeneousPoly::zero(3, l);
            let a = dp.part(l).unwrap_or(&zero).scale(2.5);
            let b = dq.part(l).unwrap_or(&zero).scale(-1.25);
            let expect = a.add(&b).unwrap();
            let got = dc.part(l).unwrap_or(&zero);
            assert!(got.sub(&expect).unwrap().coeff_norm() <= 1e-9 * combo.coeff_norm());
        }
    }

    #[test]
    fn decompose_equivariant_under_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let p = sample_kostlan(2, 7, &mut rng);
        let r = random_orthogonal(3, &mut rng);
        let dec_rotated = decompose(&p.compose_orthogonal(&r).unwrap()).unwrap();
        let dec = decompose(&p).unwrap();
        for (&l, h) in dec.parts() {
            let rotated_part = h.compose_orthogonal(&r).unwrap();
            let got = dec_rotated.part(l).expect("part survives rotation");
            assert!(
                got.sub(&rotated_part).unwrap().coeff_norm() <= 1e-8 * h.coeff_norm(),
                "equivariance fails at l={l}"
            );
        }
    }

    #[test]
    fn truncate_laws() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let p = sample_kostlan(2, 9, &mut rng);
        let f = SphereFunction::from_system(&PolySystem::single(p.clone())).unwrap();
        let d = f.max_degree();

        // L = d is the identity
        assert_eq!(truncate(&f, d).unwrap(), f);

        // idempotence and nesting
        let t3 = truncate(&f, 3).unwrap();
        assert_eq!(truncate(&t3, 3).unwrap(), t3);
        let t5_then_3 = truncate(&truncate(&f, 5).unwrap(), 3).unwrap();
        assert_eq!(t5_then_3, t3);

        // contractive in L^2, and Parseval split
        let full = f.l2_norm();
        for level in [1usize, 3, 5, 7, 9] {
            let t = truncate(&f, level).unwrap();
            assert!(t.l2_norm() <= full + 1e-12);
            let tail = f.sub(&t).unwrap();
            let lhs = full * full;
            let rhs = t.l2_norm().powi(2) + tail.l2_norm().powi(2);
            assert!((lhs - rhs).abs() <= 1e-8 * lhs.max(1.0));
        }

        // out of range
        assert!(truncate(&f, d + 1).is_err());
    }

    #[test]
    fn reconstruct_then_decompose_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for (n, d) in [(1usize, 12usize), (2, 9), (3, 8)] {
            let p = sample_kostlan(n, d, &mut rng);
            let dec = decompose(&p).unwrap();
            let again = decompose(&dec.reconstruct()).unwrap();
            assert_eq!(dec.parts().len(), again.parts().len());
            for (&l, h) in dec.parts() {
                let g = again.part(l).expect("part survives the round trip");
                assert!(
                    g.sub(h).unwrap().coeff_norm() <= 1e-9 * h.coeff_norm().max(1e-300),
                    "round trip drifted at n={n} d={d} l={l}"
                );
            }
        }
    }

    #[test]
    fn truncation_is_bw_contractive() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        for _ in 0..10 {
            let d = 4 + (rand::RngExt::random::<u32>(&mut rng) % 10) as usize;
            let p = sample_kostlan(2, d, &mut rng);
            let f = SphereFunction::from_system(&PolySystem::single(p.clone())).unwrap();
            let full = crate::poly::bw_norm(&p);
            for level in [0usize, d / 2, d] {
                let t = truncate(&f, level).unwrap();
                let rep = t.homogeneous_representative().unwrap();
                let base = rep.components()[0].clone();
                if base.is_zero(0.0) {
                    continue;
                }
                let mut lifted = base;
                while lifted.degree() < d {
                    lifted = lifted.multiply_norm_sq();
                }
                assert!(
                    crate::poly::bw_norm(&lifted) <= full * (1.0 + 1e-10),
                    "BW contraction violated at level {level}"
                );
            }
        }
    }

    #[test]
    fn truncate_pure_harmonic_below_its_degree_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let p = sample_kostlan(2, 6, &mut rng);
        let dec = decompose(&p).unwrap();
        let h4 = dec.part(4).unwrap().clone();
        let pure = SphereFunction::from_system(&PolySystem::single(h4)).unwrap();
        let t = truncate(&pure, 3).unwrap();
        assert_eq!(t.components()[0].parts().len(), 0);
        assert_eq!(t.l2_norm(), 0.0);
    }

    #[test]
    fn sobolev_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        // pure harmonic of degree l scales by l^q
        let p = sample_kostlan(2, 5, &mut rng);
        let h = decompose(&p).unwrap().part(5).unwrap().clone();
        let pure = SphereFunction::from_system(&PolySystem::single(h.clone())).unwrap();
        for q in [0.0, 0.5, 1.0, 2.0] {
            let expect = (5.0f64).powf(q) * l2_norm(&h);
            let got = sobolev_norm(&pure, q);
            assert!((got - expect).abs() <= 1e-10 * expect);
        }

        // q = 0 is the L^2 norm
        let f = SphereFunction::from_system(&PolySystem::single(p)).unwrap();
        assert!((sobolev_norm(&f, 0.0) - f.l2_norm()).abs() <= 1e-10 * f.l2_norm());

        // constants are fixed points in q
        let c = SphereFunction::from_system(&PolySystem::single(HomogeneousPoly::constant(
            3, 2.5,
        )))
        .unwrap();
        for q in [0.0, 1.0, 3.0] {
            assert!((sobolev_norm(&c, q) - c.l2_norm()).abs() <= 1e-12 * c.l2_norm());
        }
    }

    /// Brute-force nullity of the Laplacian matrix on P_{n,l}.
    fn laplacian_nullity(n: usize, l: usize) -> usize {
        let n_vars = n + 1;
        let src = monomial::table(n_vars, l);
        if l < 2 {
            return src.len();
        }
        let dst_len = monomial::monomial_count(n_vars, l - 2);
        // rows indexed by source monomials: coefficients of their Laplacian
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(src.len());
        for (_, exps) in src.iter() {
            let mono = HomogeneousPoly::monomial(n_vars, exps, 1.0).unwrap();
            rows.push(mono.laplacian().coeffs().to_vec());
        }
        // rank via Gaussian elimination with partial pivoting
        let mut rank = 0usize;
        let mut used = vec![false; src.len()];
        for col in 0..dst_len {
            let mut pivot = None;
            let mut best = 1e-9;
            for (r, row) in rows.iter().enumerate() {
                if !used[r] && row[col].abs() > best {
                    best = row[col].abs();
                    pivot = Some(r);
                }
            }
            let Some(pr) = pivot else { continue };
            used[pr] = true;
            rank += 1;
            let pivot_row = rows[pr].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != pr && !used[r] && row[col].abs() > 0.0 {
                    let factor = row[col] / pivot_row[col];
                    for c in col..dst_len {
                        row[c] -= factor * pivot_row[c];
                    }
                }
            }
        }
        src.len() - rank
    }

    #[test]
    fn dim_harmonic_matches_rank_oracle() {
        for l in 0..=6 {
            assert_eq!(dim_harmonic(2, l), 2 * l + 1, "closed form n=2 l={l}");
            assert_eq!(dim_harmonic(2, l), laplacian_nullity(2, l), "oracle n=2 l={l}");
        }
        assert_eq!(dim_harmonic(3, 4), laplacian_nullity(3, 4));
        assert_eq!(dim_harmonic(1, 0), 1);
        assert_eq!(dim_harmonic(3, 1), 4);
        // growth consistent with O(l^{n-1})
        for n in [2usize, 3] {
            let ratios: Vec<f64> = (4..=24)
                .map(|l| dim_harmonic(n, l) as f64 / (l as f64).powi(n as i32 - 1))
                .collect();
            let max = ratios.iter().cloned().fold(0.0, f64::max);
            let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(max / min < 4.0, "dimension growth not O(l^{{n-1}}) at n={n}");
        }
    }

    #[test]
    fn zonal_diagonal_is_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        // n = 2, l = 1: dim 3, vol 4 pi
        let x = random_sphere_point(2, &mut rng);
        let z = zonal_check(2, 1, &x).unwrap();
        let expect = 3.0 / (4.0 * std::f64::consts::PI);
        assert!((z - expect).abs() <= 1e-9 * expect);

        // l = 0 gives 1/vol
        let z0 = zonal_check(2, 0, &x).unwrap();
        assert!((z0 - 1.0 / sphere_volume(2)).abs() <= 1e-12);

        // same value at two random points
        for l in [2usize, 5] {
            let a = zonal_check(2, l, &random_sphere_point(2, &mut rng)).unwrap();
            let b = zonal_check(2, l, &random_sphere_point(2, &mut rng)).unwrap();
            assert!((a - b).abs() <= 1e-6 * a.abs());
            let expect = zonal_expected(2, l);
            assert!((a - expect).abs() <= 1e-6 * expect);
        }
    }

    #[test]
    fn sphere_function_json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        let p = sample_kostlan(2, 4, &mut rng);
        let f = SphereFunction::from_system(&PolySystem::single(p)).unwrap();
        let text = serde_json::to_string(&f).unwrap();
        let back: SphereFunction = serde_json::from_str(&text).unwrap();
        assert_eq!(f, back);
    }
}
