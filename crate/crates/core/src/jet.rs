//! Tangential jets of sphere maps, the singularity-type catalogue, pointwise
//! residuals to the non-transversal fiber, mesh-based C^r norm and
//! discriminant-distance estimates, and the low-degree stability margin.
//!
//! A jet here is the list of ambient derivative tensors of a polynomial map,
//! contracted against a deterministic orthonormal tangent frame at the base
//! point. The jet norm is the Frobenius norm of the full (symmetrized)
//! tensors, which makes it invariant under rotations of the frame.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonic::{truncate, SphereFunction};
use crate::linalg::{smallest_singular_value, symmetric_eigenvalues, tangent_frame};
use crate::mesh::SphereMesh;
use crate::monomial::{self, multinomial_f64};
use crate::poly::{HomogeneousPoly, PolySystem, SphericalPoint};

/// Borrowed view of a map S^n -> R^m given by polynomials.
///
/// For a [`PolySystem`] the ambient representative of each component is the
/// polynomial itself; for a [`SphereFunction`] it is the sum of its harmonic
/// parts. The two conventions agree on the sphere up to jet order 1 and may
/// differ at higher order (the restriction forgets the radial extension).
#[derive(Clone, Copy)]
pub enum SphereMapRef<'a> {
    System(&'a PolySystem),
    Function(&'a SphereFunction),
}

impl<'a> From<&'a PolySystem> for SphereMapRef<'a> {
    fn from(p: &'a PolySystem) -> Self {
        SphereMapRef::System(p)
    }
}

impl<'a> From<&'a SphereFunction> for SphereMapRef<'a> {
    fn from(f: &'a SphereFunction) -> Self {
        SphereMapRef::Function(f)
    }
}

impl<'a> SphereMapRef<'a> {
    fn n_vars(&self) -> usize {
        match self {
            SphereMapRef::System(p) => p.n_vars(),
            SphereMapRef::Function(f) => f.n_vars(),
        }
    }

    fn n_components(&self) -> usize {
        match self {
            SphereMapRef::System(p) => p.len(),
            SphereMapRef::Function(f) => f.n_components(),
        }
    }

    fn component_terms(&self, c: usize) -> Vec<HomogeneousPoly> {
        match self {
            SphereMapRef::System(p) => vec![p.components()[c].clone()],
            SphereMapRef::Function(f) => {
                f.components()[c].parts().values().cloned().collect()
            }
        }
    }
}

/// The catalogued singularity types.
///
/// Each is a semialgebraic, orthogonally invariant condition on an r-jet:
/// vanishing of the map (r = 0), vanishing of the differential (r = 1), or
/// vanishing differential with positive Hessian (r = 2). The locus of sphere
/// points whose jet satisfies the condition is the type-W singular set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularityType {
    ZeroSet,
    CriticalPoints,
    NondegenerateMinima,
}

impl SingularityType {
    /// Order of the jet that defines the type.
    pub fn jet_order(&self) -> usize {
        match self {
            SingularityType::ZeroSet => 0,
            SingularityType::CriticalPoints => 1,
            SingularityType::NondegenerateMinima => 2,
        }
    }

    /// Jet order required by [`singular_residual`] (one past the defining order).
    pub fn residual_order(&self) -> usize {
        self.jet_order() + 1
    }

    /// Validates the target dimension constraint: zero sets need m <= n, the
    /// derivative conditions are for scalar functions only.
    pub fn check_target_dim(&self, m: usize, n: usize) -> Result<()> {
        match self {
            SingularityType::ZeroSet => {
                if m > n {
                    return Err(Error::InvalidArgument(format!(
                        "zero-set type needs m <= n, got m={m}, n={n}"
                    )));
                }
            }
            SingularityType::CriticalPoints | SingularityType::NondegenerateMinima => {
                if m != 1 {
                    return Err(Error::InvalidArgument(format!(
                        "{self:?} needs a scalar function, got m={m}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().replace('-', "_").as_str() {
            "zero_set" | "zeroset" | "zeros" => Ok(SingularityType::ZeroSet),
            "critical_points" | "criticalpoints" | "critical" => {
                Ok(SingularityType::CriticalPoints)
            }
            "nondegenerate_minima" | "minima" => Ok(SingularityType::NondegenerateMinima),
            other => Err(Error::InvalidArgument(format!("unknown singularity type `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SingularityType::ZeroSet => "zero_set",
            SingularityType::CriticalPoints => "critical_points",
            SingularityType::NondegenerateMinima => "nondegenerate_minima",
        }
    }
}

/// Precomputed ambient partial derivatives of a map, reused across many
/// evaluation points.
pub struct JetPlan {
    n_vars: usize,
    order: usize,
    // derivs[comp][k][idx over monomial::table(n_vars, k)] = terms of d^beta f_comp
    derivs: Vec<Vec<Vec<Vec<HomogeneousPoly>>>>,
}

impl JetPlan {
    pub fn new<'a>(f: impl Into<SphereMapRef<'a>>, order: usize) -> Result<JetPlan> {
        let f = f.into();
        let n_vars = f.n_vars();
        if n_vars < 2 {
            return Err(Error::InvalidArgument("jets need at least two variables".into()));
        }
        let mut derivs = Vec::with_capacity(f.n_components());
        for c in 0..f.n_components() {
            let base: Vec<HomogeneousPoly> =
                f.component_terms(c).into_iter().filter(|t| !t.is_zero(0.0)).collect();
            let mut per_order: Vec<Vec<Vec<HomogeneousPoly>>> = vec![vec![base]];
            for k in 1..=order {
                let table = monomial::table(n_vars, k);
                let parent_table = monomial::table(n_vars, k - 1);
                let mut level = Vec::with_capacity(table.len());
                let mut parent_exps = vec![0u32; n_vars];
                for (_, exps) in table.iter() {
                    // differentiate the parent multi-index along its first
                    // nonzero slot
                    let i = exps.iter().position(|&a| a > 0).expect("degree k >= 1");
                    parent_exps.copy_from_slice(exps);
                    parent_exps[i] -= 1;
                    let parent = &per_order[k - 1][parent_table.rank(&parent_exps)];
                    let terms: Vec<HomogeneousPoly> = parent
                        .iter()
                        .map(|t| t.partial_derivative(i))
                        .collect::<Result<Vec<_>>>()?
                        .into_iter()
                        .filter(|t| !t.is_zero(0.0))
                        .collect();
                    level.push(terms);
                }
                per_order.push(level);
            }
            derivs.push(per_order);
        }
        Ok(JetPlan { n_vars, order, derivs })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n_components(&self) -> usize {
        self.derivs.len()
    }

    /// Jet at `x` with the deterministic Householder frame.
    pub fn jet(&self, x: &SphericalPoint) -> Result<JetValue> {
        let frame = tangent_frame(x.coords());
        self.jet_with_frame(x, frame)
    }

    /// Jet at `x` against a caller-supplied orthonormal tangent frame.
    pub fn jet_with_frame(&self, x: &SphericalPoint, frame: Vec<Vec<f64>>) -> Result<JetValue> {
        if x.n_vars() != self.n_vars {
            return Err(Error::DimensionMismatch { expected: self.n_vars, got: x.n_vars() });
        }
        let n = self.n_vars - 1;
        if frame.len() != n || frame.iter().any(|t| t.len() != self.n_vars) {
            return Err(Error::InvalidArgument("frame has wrong shape".into()));
        }
        let coords = x.coords();
        let mut tensors = Vec::with_capacity(self.derivs.len());
        let mut radial = Vec::with_capacity(self.derivs.len());
        for per_order in &self.derivs {
            let mut per_k: Vec<Vec<f64>> = Vec::with_capacity(self.order + 1);
            let mut radial_c = 0.0;
            for (k, level) in per_order.iter().enumerate() {
                // ambient symmetric tensor in multiset storage
                let ambient: Vec<f64> = level
                    .iter()
                    .map(|terms| terms.iter().map(|t| t.value_at(coords)).sum())
                    .collect();
                if k == 1 {
                    radial_c = ambient.iter().zip(coords).map(|(d, c)| d * c).sum();
                }
                per_k.push(contract_full(&ambient, k, self.n_vars, &frame));
            }
            tensors.push(per_k);
            radial.push(radial_c);
        }
        Ok(JetValue { base: x.clone(), order: self.order, n_tangent: n, frame, tensors, radial })
    }
}

/// Contracts an ambient order-k symmetric tensor (multiset storage over
/// `n_vars` slots) against every multiset of tangent directions, producing
/// the tangential tensor in multiset storage over `n` directions.
fn contract_full(ambient: &[f64], k: usize, n_vars: usize, frame: &[Vec<f64>]) -> Vec<f64> {
    let n = frame.len();
    if k == 0 {
        return ambient.to_vec();
    }
    let out_table = monomial::table(n, k);
    let mut out = vec![0.0; out_table.len()];
    // contract one direction at a time, walking multisets in lex-decreasing
    // order so each output reuses its parent's partial contraction
    fn rec(
        tensor: &[f64],
        order: usize,
        n_vars: usize,
        frame: &[Vec<f64>],
        start_dir: usize,
        target: usize,
        gamma: &mut Vec<usize>,
        out: &mut [f64],
        out_table: &monomial::MonomialTable,
    ) {
        if gamma.len() == target {
            debug_assert_eq!(order, 0);
            let n = frame.len();
            let mut exps = vec![0u32; n];
            for &g in gamma.iter() {
                exps[g] += 1;
            }
            out[out_table.rank(&exps)] = tensor[0];
            return;
        }
        for dir in start_dir..frame.len() {
            let contracted = contract_once(tensor, order, n_vars, &frame[dir]);
            gamma.push(dir);
            rec(&contracted, order - 1, n_vars, frame, dir, target, gamma, out, out_table);
            gamma.pop();
        }
    }
    let mut gamma = Vec::with_capacity(k);
    rec(ambient, k, n_vars, frame, 0, k, &mut gamma, &mut out, &out_table);
    out
}

/// Single contraction of a symmetric order-j tensor with a vector:
/// S[b'] = sum_i T[b' + e_i] v_i.
fn contract_once(tensor: &[f64], order: usize, n_vars: usize, v: &[f64]) -> Vec<f64> {
    debug_assert!(order >= 1);
    let src = monomial::table(n_vars, order);
    let dst = monomial::table(n_vars, order - 1);
    let mut out = vec![0.0; dst.len()];
    let mut bumped = vec![0u32; n_vars];
    for (idx, exps) in dst.iter() {
        let mut acc = 0.0;
        for i in 0..n_vars {
            bumped.copy_from_slice(exps);
            bumped[i] += 1;
            acc += tensor[src.rank(&bumped)] * v[i];
        }
        out[idx] = acc;
    }
    out
}

/// Tangentially restricted derivatives of a sphere map at a point.
///
/// `tensors[c][k]` holds the order-k symmetric tangential derivative of
/// component `c` in multiset storage over the `n` tangent directions.
/// `radial[c]` is the ambient radial derivative `x . grad f_c` (zero when the
/// jet order is 0), carried so that curvature-corrected second derivatives
/// can be recovered from the jet alone.
#[derive(Debug, Clone)]
pub struct JetValue {
    base: SphericalPoint,
    order: usize,
    n_tangent: usize,
    frame: Vec<Vec<f64>>,
    tensors: Vec<Vec<Vec<f64>>>,
    radial: Vec<f64>,
}

impl JetValue {
    pub fn base(&self) -> &SphericalPoint {
        &self.base
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n_components(&self) -> usize {
        self.tensors.len()
    }

    pub fn n_tangent(&self) -> usize {
        self.n_tangent
    }

    pub fn frame(&self) -> &[Vec<f64>] {
        &self.frame
    }

    /// Value of component `c` at the base point.
    pub fn value(&self, c: usize) -> f64 {
        self.tensors[c][0][0]
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n_components()).map(|c| self.value(c)).collect()
    }

    /// Tangential gradient of component `c` in frame coordinates.
    pub fn tangential_gradient(&self, c: usize) -> Vec<f64> {
        self.tensors[c][1].clone()
    }

    pub fn radial_derivative(&self, c: usize) -> f64 {
        self.radial[c]
    }

    /// Raw order-2 tangential tensor of component `c` as a symmetric matrix.
    pub fn raw_tangential_hessian(&self, c: usize) -> Vec<Vec<f64>> {
        let n = self.n_tangent;
        let table = monomial::table(n, 2);
        let entries = &self.tensors[c][2];
        let mut m = vec![vec![0.0; n]; n];
        let mut exps = vec![0u32; n];
        for i in 0..n {
            for j in 0..n {
                exps.iter_mut().for_each(|e| *e = 0);
                exps[i] += 1;
                exps[j] += 1;
                m[i][j] = entries[table.rank(&exps)];
            }
        }
        m
    }

    /// Hessian of the restriction to the sphere at the base point:
    /// the raw tangential tensor minus the radial derivative times the metric
    /// (the curvature correction of the unit sphere).
    pub fn intrinsic_hessian(&self, c: usize) -> Vec<Vec<f64>> {
        let mut m = self.raw_tangential_hessian(c);
        let r = self.radial[c];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] -= r;
        }
        m
    }

    /// Frobenius norm of the concatenated full tangential tensors: every
    /// permutation of a symmetric entry counts, which is what makes the value
    /// independent of the frame choice.
    pub fn nu(&self) -> f64 {
        let mut acc = 0.0;
        for per_k in &self.tensors {
            for (k, entries) in per_k.iter().enumerate() {
                let table = monomial::table(self.n_tangent, k);
                for (idx, exps) in table.iter() {
                    let mult = multinomial_f64(exps);
                    acc += mult * entries[idx] * entries[idx];
                }
            }
        }
        acc.sqrt()
    }
}

/// Jet of `f` at `x`, restricted to the tangent space, up to order `r`.
///
/// Builds a fresh [`JetPlan`]; batch callers should build the plan once.
pub fn jet_at<'a>(
    f: impl Into<SphereMapRef<'a>>,
    x: &SphericalPoint,
    r: usize,
) -> Result<JetValue> {
    JetPlan::new(f, r)?.jet(x)
}

/// Distance surrogate from a jet to the non-transversal fiber of `w` at the
/// base point. Zero exactly where transversality fails.
///
/// The fiber conditions are closed-form: a zero set is non-transversal where
/// the map vanishes and the tangential Jacobian is rank deficient; the
/// derivative conditions are non-transversal where the tangential gradient
/// vanishes and the intrinsic Hessian is singular. The residual combines the
/// defining equalities with the smallest singular value of the relevant
/// matrix in a root sum of squares.
pub fn singular_residual(w: SingularityType, jet: &JetValue) -> Result<f64> {
    if jet.order() != w.residual_order() {
        return Err(Error::InvalidArgument(format!(
            "residual for {:?} needs a jet of order {}, got {}",
            w,
            w.residual_order(),
            jet.order()
        )));
    }
    w.check_target_dim(jet.n_components(), jet.n_tangent())?;
    match w {
        SingularityType::ZeroSet => {
            let mut value_sq = 0.0;
            let jac: Vec<Vec<f64>> = (0..jet.n_components())
                .map(|c| {
                    let v = jet.value(c);
                    value_sq += v * v;
                    jet.tangential_gradient(c)
                })
                .collect();
            let sigma = smallest_singular_value(&jac);
            Ok((value_sq + sigma * sigma).sqrt())
        }
        SingularityType::CriticalPoints | SingularityType::NondegenerateMinima => {
            let grad = jet.tangential_gradient(0);
            let grad_sq: f64 = grad.iter().map(|g| g * g).sum();
            let hess = jet.intrinsic_hessian(0);
            let eigs = symmetric_eigenvalues(&hess);
            let sigma = eigs.iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min);
            Ok((grad_sq + sigma * sigma).sqrt())
        }
    }
}

/// Deterministic projected extremum polish on the sphere.
///
/// Finite-difference gradient in the tangent frame, step halving, at most
/// `max_steps` accepted steps. Pure function of the start point.
fn polish<F: Fn(&[f64]) -> f64>(
    objective: &F,
    start: &[f64],
    minimize: bool,
    initial_step: f64,
    max_steps: usize,
) -> (Vec<f64>, f64) {
    let sign = if minimize { -1.0 } else { 1.0 };
    let mut x = start.to_vec();
    let mut fx = objective(&x);
    let h = 1e-6;
    let mut step = initial_step;
    for _ in 0..max_steps {
        let frame = tangent_frame(&x);
        let mut grad = Vec::with_capacity(frame.len());
        for t in &frame {
            let plus = project_step(&x, t, h);
            let minus = project_step(&x, t, -h);
            grad.push((objective(&plus) - objective(&minus)) / (2.0 * h));
        }
        let gnorm: f64 = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm <= 1e-14 * (1.0 + fx.abs()) {
            break;
        }
        let dir: Vec<f64> = grad.iter().map(|g| sign * g / gnorm).collect();
        let mut accepted = false;
        let mut local = step;
        for _ in 0..30 {
            let mut candidate = x.clone();
            for (i, t) in frame.iter().enumerate() {
                for (c, tc) in candidate.iter_mut().zip(t) {
                    *c += local * dir[i] * tc;
                }
            }
            normalize(&mut candidate);
            let fc = objective(&candidate);
            if (minimize && fc < fx) || (!minimize && fc > fx) {
                x = candidate;
                fx = fc;
                accepted = true;
                break;
            }
            local *= 0.5;
            if local < 1e-14 {
                break;
            }
        }
        if !accepted {
            break;
        }
        step = (local * 1.5).min(initial_step);
    }
    (x, fx)
}

fn project_step(x: &[f64], t: &[f64], step: f64) -> Vec<f64> {
    let mut out: Vec<f64> = x.iter().zip(t).map(|(a, b)| a + step * b).collect();
    normalize(&mut out);
    out
}

fn normalize(x: &mut [f64]) {
    let norm: f64 = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    for a in x.iter_mut() {
        *a /= norm;
    }
}

fn initial_step(mesh: &SphereMesh) -> f64 {
    match mesh {
        SphereMesh::Circle(c) => 2.0 * std::f64::consts::PI / c.len() as f64,
        SphereMesh::Ico(m) => 1.1071 / (1 << m.level()) as f64,
    }
}

/// Mesh estimate of the infimum over the sphere of the residual to `w`.
#[derive(Debug, Clone, Serialize)]
pub struct DiscriminantEstimate {
    /// Smallest polished residual found; an upper bound of the true infimum
    /// that decreases under mesh refinement.
    pub lower_surrogate: f64,
    /// Point achieving it.
    pub argmin: SphericalPoint,
    /// Mesh resolution tag.
    pub resolution: String,
}

/// Estimates `inf over x of dist(jet of p at x, non-transversal fiber)`, the
/// surrogate for the Bombieri-Weyl distance of `P` to the discriminant of `w`.
///
/// Every mesh vertex is polished by projected descent; the minimum over the
/// polished values is returned. A refined mesh contains the coarse vertex
/// set, so estimates are monotone nonincreasing under refinement.
pub fn discriminant_distance(
    p: &PolySystem,
    w: SingularityType,
    mesh: &SphereMesh,
) -> Result<DiscriminantEstimate> {
    w.check_target_dim(p.len(), p.sphere_dim())?;
    if mesh.sphere_dim() != p.sphere_dim() {
        return Err(Error::DimensionMismatch {
            expected: p.n_vars(),
            got: mesh.sphere_dim() + 1,
        });
    }
    if let (1, 1, SphereMesh::Circle(circle)) = (p.sphere_dim(), w.residual_order(), mesh) {
        return circle_zero_set_distance(p, circle, mesh.resolution());
    }
    let plan = JetPlan::new(p, w.residual_order())?;
    let objective = |coords: &[f64]| -> f64 {
        let x = SphericalPoint::project(coords).expect("polish keeps points on the sphere");
        let jet = plan.jet(&x).expect("plan dimensions match");
        singular_residual(w, &jet).expect("orders match by construction")
    };
    let step = initial_step(mesh);
    let mut best_value = f64::INFINITY;
    let mut best_point: Vec<f64> = mesh.vertex(0).to_vec();
    for i in 0..mesh.n_vertices() {
        let (point, value) = polish(&objective, mesh.vertex(i), true, step, 100);
        if value < best_value {
            best_value = value;
            best_point = point;
        }
    }
    Ok(DiscriminantEstimate {
        lower_surrogate: best_value,
        argmin: SphericalPoint::project(&best_point)?,
        resolution: mesh.resolution(),
    })
}

/// Mesh estimate of a C^r norm: sup over the sphere of the jet norm.
#[derive(Debug, Clone, Serialize)]
pub struct CrNormEstimate {
    /// Largest polished jet norm found; a lower bound of the true sup that
    /// increases under mesh refinement.
    pub value: f64,
    pub argmax: SphericalPoint,
    pub resolution: String,
}

/// Estimates `||f||_{C^r} = sup over x of nu(jet of f at x)` by evaluating
/// every mesh vertex and polishing the best candidates by projected ascent.
///
/// Harmonic-part functions on the circle are evaluated through their
/// trigonometric modes, which stays accurate at frequencies where the dense
/// monomial form of a part is too ill-conditioned to evaluate.
pub fn cr_norm_estimate<'a>(
    f: impl Into<SphereMapRef<'a>>,
    r: usize,
    mesh: &SphereMesh,
) -> Result<CrNormEstimate> {
    let f = f.into();
    if mesh.sphere_dim() + 1 != f.n_vars() {
        return Err(Error::DimensionMismatch { expected: f.n_vars(), got: mesh.sphere_dim() + 1 });
    }
    if let (SphereMapRef::Function(func), SphereMesh::Circle(circle)) = (&f, mesh) {
        if r <= 2 {
            return circle_cr_norm(func, r, circle, mesh.resolution());
        }
    }
    let plan = JetPlan::new(f, r)?;
    let objective = |coords: &[f64]| -> f64 {
        let x = SphericalPoint::project(coords).expect("polish keeps points on the sphere");
        plan.jet(&x).expect("plan dimensions match").nu()
    };
    // single pass over the vertices, then polish the best few
    let mut scored: Vec<(f64, usize)> = (0..mesh.n_vertices())
        .map(|i| (objective(mesh.vertex(i)), i))
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    let step = initial_step(mesh);
    let mut best_value = scored.first().map(|s| s.0).unwrap_or(0.0);
    let mut best_point: Vec<f64> = mesh.vertex(scored.first().map(|s| s.1).unwrap_or(0)).to_vec();
    for &(_, idx) in scored.iter().take(8) {
        let (point, value) = polish(&objective, mesh.vertex(idx), false, step, 100);
        if value > best_value {
            best_value = value;
            best_point = point;
        }
    }
    Ok(CrNormEstimate {
        value: best_value,
        argmax: SphericalPoint::project(&best_point)?,
        resolution: mesh.resolution(),
    })
}

/// Circle specialization of the order-1 residual infimum: the zero-set
/// residual is `sqrt(sum_i f_i^2 + sigma_min(J)^2)` with `J` the column of
/// the theta-derivatives, all evaluated through trigonometric modes.
fn circle_zero_set_distance(
    p: &PolySystem,
    circle: &crate::mesh::CircleMesh,
    resolution: String,
) -> Result<DiscriminantEstimate> {
    let modes: Vec<crate::harmonic::CircleModes> = p
        .components()
        .iter()
        .map(|poly| {
            let dec = crate::harmonic::decompose(poly)?;
            crate::harmonic::CircleModes::from_component(
                &SphereFunction::from_decomposition(dec).components()[0],
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let objective = |theta: f64| -> f64 {
        let mut value_sq = 0.0;
        let mut deriv_sq = 0.0;
        for m in &modes {
            let d = m.derivatives(theta);
            value_sq += d.value * d.value;
            deriv_sq += d.dtheta * d.dtheta;
        }
        // m = 1 on the circle: sigma_min of the 1 x 1 Jacobian is |f'|
        (value_sq + deriv_sq).sqrt()
    };
    let spacing = 2.0 * std::f64::consts::PI / circle.len() as f64;
    let mut best_value = f64::INFINITY;
    let mut best_theta = 0.0;
    for &theta0 in circle.angles() {
        let (theta, value) = polish_angle_directed(&objective, theta0, spacing, 100, false);
        if value < best_value {
            best_value = value;
            best_theta = theta;
        }
    }
    Ok(DiscriminantEstimate {
        lower_surrogate: best_value,
        argmin: SphericalPoint::new(vec![best_theta.cos(), best_theta.sin()])?,
        resolution,
    })
}

/// Circle specialization of the C^r sup estimate through trigonometric modes.
/// The raw tangential derivatives on the circle are `f`, `df/dtheta`, and
/// `d2f/dtheta2 + radial` (the curvature term moves between the raw and
/// intrinsic second derivatives).
fn circle_cr_norm(
    f: &SphereFunction,
    r: usize,
    circle: &crate::mesh::CircleMesh,
    resolution: String,
) -> Result<CrNormEstimate> {
    let modes: Vec<crate::harmonic::CircleModes> = f
        .components()
        .iter()
        .map(crate::harmonic::CircleModes::from_component)
        .collect::<Result<Vec<_>>>()?;
    let objective = |theta: f64| -> f64 {
        let mut acc = 0.0;
        for m in &modes {
            let d = m.derivatives(theta);
            acc += d.value * d.value;
            if r >= 1 {
                acc += d.dtheta * d.dtheta;
            }
            if r >= 2 {
                let raw2 = d.d2theta + d.radial;
                acc += raw2 * raw2;
            }
        }
        acc.sqrt()
    };
    let k = circle.len();
    let spacing = 2.0 * std::f64::consts::PI / k as f64;
    let mut scored: Vec<(f64, f64)> = circle
        .angles()
        .iter()
        .map(|&theta| (objective(theta), theta))
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut best_value = scored.first().map(|s| s.0).unwrap_or(0.0);
    let mut best_theta = scored.first().map(|s| s.1).unwrap_or(0.0);
    for &(_, theta0) in scored.iter().take(8) {
        let (theta, value) = polish_angle(&objective, theta0, spacing, 100);
        if value > best_value {
            best_value = value;
            best_theta = theta;
        }
    }
    Ok(CrNormEstimate {
        value: best_value,
        argmax: SphericalPoint::new(vec![best_theta.cos(), best_theta.sin()])?,
        resolution,
    })
}

/// Deterministic 1-D ascent with step halving.
fn polish_angle<F: Fn(f64) -> f64>(
    objective: &F,
    start: f64,
    initial_step: f64,
    max_steps: usize,
) -> (f64, f64) {
    polish_angle_directed(objective, start, initial_step, max_steps, true)
}

fn polish_angle_directed<F: Fn(f64) -> f64>(
    objective: &F,
    start: f64,
    initial_step: f64,
    max_steps: usize,
    maximize: bool,
) -> (f64, f64) {
    let better = |candidate: f64, current: f64| {
        if maximize {
            candidate > current
        } else {
            candidate < current
        }
    };
    let mut theta = start;
    let mut value = objective(theta);
    let mut step = initial_step;
    for _ in 0..max_steps {
        let mut moved = false;
        let mut local = step;
        for _ in 0..30 {
            for candidate in [theta + local, theta - local] {
                let v = objective(candidate);
                if better(v, value) {
                    theta = candidate;
                    value = v;
                    moved = true;
                    break;
                }
            }
            if moved {
                break;
            }
            local *= 0.5;
            if local < 1e-14 {
                break;
            }
        }
        if !moved {
            break;
        }
        step = (local * 1.5).min(initial_step);
    }
    (theta, value)
}

/// Comparison of the truncation error of `p` at level `L` against the
/// discriminant distance, deciding the stability event.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityMargin {
    /// C^{r+1} norm estimate of `p - p|_L`.
    pub lhs: f64,
    /// Discriminant-distance surrogate of `p`.
    pub distance: f64,
    /// Configured comparison constant.
    pub c1: f64,
    /// Right-hand side `c1 * distance`.
    pub rhs: f64,
    /// Whether `lhs < rhs`.
    pub in_event: bool,
}

/// Evaluates the stability event: `||p - p|_L||_{C^{r+1}} < c1 * dist(P, discriminant of w)`.
///
/// The left side is estimated with [`cr_norm_estimate`] on the harmonic tail,
/// the right side with [`discriminant_distance`]; both sides are degree-1
/// homogeneous in `P`, so the verdict is scale invariant.
pub fn stability_margin(
    p: &PolySystem,
    level: usize,
    w: SingularityType,
    c1: f64,
    mesh: &SphereMesh,
) -> Result<StabilityMargin> {
    if c1 <= 0.0 {
        return Err(Error::InvalidArgument("c1 must be positive".into()));
    }
    let sphere = SphereFunction::from_system(p)?;
    let truncated = truncate(&sphere, level)?;
    let tail = sphere.sub(&truncated)?;
    let r1 = w.residual_order();
    let lhs = if r1 <= 1 && p.n_vars() > 2 {
        // up to first order the tangential jet does not see the radial
        // extension, so the single-polynomial representative is exact and
        // much cheaper to evaluate (the circle case goes through its
        // trigonometric fast path instead)
        let rep = tail.homogeneous_representative()?;
        cr_norm_estimate(&rep, r1, mesh)?.value
    } else {
        cr_norm_estimate(&tail, r1, mesh)?.value
    };
    let distance = discriminant_distance(p, w, mesh)?.lower_surrogate;
    let rhs = c1 * distance;
    Ok(StabilityMargin { lhs, distance, c1, rhs, in_event: lhs < rhs })
}
