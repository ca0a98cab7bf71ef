//! Topological invariants of type-W singular loci: zeros on the circle,
//! curve components and their nesting tree on S^2, Morse-classified critical
//! points, and the comparison verdicts between a function and its truncation.
//!
//! Certification is by agreement of two consecutive mesh resolutions; results
//! that fail their certificate surface as `Unresolved` rather than silently
//! degrading.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonic::{CircleModes, SphereFunction};
use crate::jet::{JetPlan, SingularityType};
use crate::linalg::symmetric_eigenvalues;
use crate::mesh::IcoMesh;
use crate::poly::SphericalPoint;

/// Tie-break added to a vertex value that is exactly zero, so sign tests are
/// total. Logged in the documentation rather than per event: hitting an exact
/// zero is a measure-zero coincidence of the mesh and the function.
const VERTEX_ZERO_NUDGE: f64 = 1e-12;

/// Computable isotopy certificates of a type-W locus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LocusInvariants {
    CircleZeros {
        count: usize,
        angles: Vec<f64>,
    },
    CurveS2 {
        components: usize,
        /// Canonical encoding of the region tree (regions are nodes, curve
        /// components are edges).
        forest: String,
        certified: bool,
        levels: (usize, usize),
    },
    MorsePoints {
        /// Counts by Morse index (minima, saddles, maxima).
        counts_by_index: [usize; 3],
        degenerate: usize,
    },
    Minima {
        count: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Inconsistent,
    Unresolved,
}

/// Comparison outcome plus the invariants it was based on.
#[derive(Debug, Clone, Serialize)]
pub struct IsotopyVerdict {
    pub verdict: Verdict,
    pub left: Option<LocusInvariants>,
    pub right: Option<LocusInvariants>,
    pub detail: String,
}

/// Zeros of a scalar function on S^1, as sorted angles in [0, 2pi).
///
/// Sign changes on a 16d-point grid are bracketed, bisected to 1e-12 and
/// Newton-polished; the count must be reproduced on the doubled grid or the
/// result is `Unresolved`. Zero counts of parity-pure functions are even by
/// antipodal symmetry, which is also enforced as a stability check.
pub fn zeros_on_circle(p: &SphereFunction) -> Result<Vec<f64>> {
    if p.sphere_dim() != 1 || p.n_components() != 1 {
        return Err(Error::InvalidArgument("zeros_on_circle needs n=1, m=1".into()));
    }
    let modes = CircleModes::from_component(&p.components()[0])?;
    // sup-norm proxy from the mode amplitudes
    let scale: f64 =
        modes.amplitudes().iter().map(|&(_, a, b)| (a * a + b * b).sqrt()).sum();
    if scale <= 1e-12 {
        return Err(Error::ZeroPolynomial);
    }
    let degree = modes.max_frequency().max(1);
    let coarse = circle_zeros_from_grid(&modes, 16 * degree)?;
    let fine = circle_zeros_from_grid(&modes, 32 * degree)?;
    if coarse.len() != fine.len() {
        return Err(Error::Unresolved(format!(
            "zero count unstable under grid doubling: {} vs {}",
            coarse.len(),
            fine.len()
        )));
    }
    if parity_pure(p) && fine.len() % 2 == 1 {
        return Err(Error::Unresolved(format!(
            "odd zero count {} for an antipodally symmetric function",
            fine.len()
        )));
    }
    Ok(fine)
}

fn parity_pure(p: &SphereFunction) -> bool {
    let c = &p.components()[0];
    let mut parities = c.parts().keys().map(|l| l % 2);
    match parities.next() {
        None => true,
        Some(first) => parities.all(|q| q == first),
    }
}

fn circle_zeros_from_grid(modes: &CircleModes, grid: usize) -> Result<Vec<f64>> {
    let tau = 2.0 * std::f64::consts::PI;
    let f = |theta: f64| modes.derivatives(theta).value;
    let df = |theta: f64| modes.derivatives(theta).dtheta;
    let mut values: Vec<f64> = (0..grid).map(|i| f(tau * i as f64 / grid as f64)).collect();
    for v in values.iter_mut() {
        if *v == 0.0 {
            *v = VERTEX_ZERO_NUDGE;
        }
    }
    let mut zeros = Vec::new();
    for i in 0..grid {
        let j = (i + 1) % grid;
        if values[i].signum() == values[j].signum() {
            continue;
        }
        let mut a = tau * i as f64 / grid as f64;
        let mut b = tau * (i + 1) as f64 / grid as f64;
        let mut fa = f(a);
        // bisect to 1e-12 in angle
        while b - a > 1e-12 {
            let m = 0.5 * (a + b);
            let fm = f(m);
            if fa.signum() == fm.signum() {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        let mut theta = 0.5 * (a + b);
        // a couple of Newton steps sharpen the root without leaving the bracket
        for _ in 0..3 {
            let d = df(theta);
            if d.abs() < 1e-300 {
                break;
            }
            let next = theta - f(theta) / d;
            if next >= a - 1e-9 && next <= b + 1e-9 {
                theta = next;
            } else {
                break;
            }
        }
        zeros.push(theta.rem_euclid(tau));
    }
    zeros.sort_by(|x, y| x.partial_cmp(y).unwrap());
    // deduplicate at 1e-9 angular tolerance, including the wrap-around pair
    let mut dedup: Vec<f64> = Vec::with_capacity(zeros.len());
    for z in zeros {
        if dedup.last().is_none_or(|&last| z - last > 1e-9) {
            dedup.push(z);
        }
    }
    if dedup.len() >= 2 {
        let first = dedup[0];
        let last = *dedup.last().unwrap();
        if (first + tau) - last <= 1e-9 {
            dedup.pop();
        }
    }
    Ok(dedup)
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet { parent: (0..n).collect() }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Curve extraction result at a pair of consecutive icosphere levels.
#[derive(Debug, Clone, Serialize)]
pub struct CurveTopology {
    /// Component count at the finer level.
    pub components: usize,
    /// Canonical region-tree encoding at the finer level.
    pub forest: String,
    /// Whether both levels produced identical (count, forest) pairs.
    pub certified: bool,
    pub levels: (usize, usize),
    /// (level, components, forest) for both levels.
    pub per_level: Vec<(usize, usize, String)>,
}

#[derive(Debug)]
struct LevelCurve {
    components: usize,
    forest: String,
}

/// Connected components of the zero curve of a scalar function on S^2 and the
/// canonical nesting tree of its complementary regions.
///
/// Triangles whose vertex values change sign form the crossed set; its
/// edge-connected components estimate the curve components. Un-crossed
/// triangles group into regions, and each curve component must separate
/// exactly two regions, yielding a tree on the regions whose canonical
/// (center-rooted, sorted) encoding is the nesting certificate. The result is
/// certified when two consecutive subdivision levels agree.
pub fn curve_components_s2(p: &SphereFunction, level: usize) -> Result<CurveTopology> {
    if p.sphere_dim() != 2 || p.n_components() != 1 {
        return Err(Error::InvalidArgument("curve extraction needs n=2, m=1".into()));
    }
    let rep_system = p.homogeneous_representative()?;
    let rep = &rep_system.components()[0];
    if rep.is_zero(1e-12) {
        return Err(Error::ZeroPolynomial);
    }
    let mut per_level = Vec::with_capacity(2);
    let mut extracted = Vec::with_capacity(2);
    for s in [level, level + 1] {
        match curve_at_level(rep, s) {
            Ok(res) => {
                per_level.push((s, res.components, res.forest.clone()));
                extracted.push(res);
            }
            Err(Error::Internal(msg)) | Err(Error::Unresolved(msg)) => {
                per_level.push((s, 0, format!("malformed: {msg}")));
                extracted.push(LevelCurve { components: 0, forest: format!("malformed: {msg}") });
            }
            Err(other) => return Err(other),
        }
    }
    let coarse = &extracted[0];
    let fine = &extracted[1];
    let certified = coarse.components == fine.components
        && coarse.forest == fine.forest
        && !fine.forest.starts_with("malformed");
    Ok(CurveTopology {
        components: fine.components,
        forest: fine.forest.clone(),
        certified,
        levels: (level, level + 1),
        per_level,
    })
}

fn curve_at_level(rep: &crate::poly::HomogeneousPoly, level: usize) -> Result<LevelCurve> {
    let mesh = IcoMesh::new(level)?;
    let mut signs = Vec::with_capacity(mesh.n_vertices());
    for i in 0..mesh.n_vertices() {
        let mut v = rep.value_at(mesh.vertex(i));
        if v == 0.0 {
            v = VERTEX_ZERO_NUDGE;
        }
        signs.push(v > 0.0);
    }
    let nt = mesh.n_triangles();
    let crossed: Vec<bool> = mesh
        .triangles()
        .iter()
        .map(|&[a, b, c]| !(signs[a] == signs[b] && signs[b] == signs[c]))
        .collect();
    let mut dsu = DisjointSet::new(nt);
    for t in 0..nt {
        for nb in mesh.neighbors(t) {
            if nb > t && crossed[t] == crossed[nb] {
                dsu.union(t, nb);
            }
        }
    }
    // label curve components and regions
    let mut curve_label: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    let mut region_label: std::collections::HashMap<usize, usize> =
        std::collections::HashMap::new();
    for t in 0..nt {
        let root = dsu.find(t);
        if crossed[t] {
            let next = curve_label.len();
            curve_label.entry(root).or_insert(next);
        } else {
            let next = region_label.len();
            region_label.entry(root).or_insert(next);
        }
    }
    let n_curves = curve_label.len();
    let n_regions = region_label.len();
    if n_regions == 0 {
        return Err(Error::Unresolved("crossed triangles cover the whole mesh".into()));
    }
    // incidence between curve components and regions
    let mut incident: Vec<std::collections::BTreeSet<usize>> =
        vec![std::collections::BTreeSet::new(); n_curves];
    for t in 0..nt {
        if !crossed[t] {
            continue;
        }
        let cid = curve_label[&dsu.find(t)];
        for nb in mesh.neighbors(t) {
            if !crossed[nb] {
                incident[cid].insert(region_label[&dsu.find(nb)]);
            }
        }
    }
    let mut edges = Vec::with_capacity(n_curves);
    for (cid, regions) in incident.iter().enumerate() {
        if regions.len() != 2 {
            return Err(Error::Unresolved(format!(
                "curve component {cid} touches {} regions",
                regions.len()
            )));
        }
        let mut it = regions.iter();
        edges.push((*it.next().unwrap(), *it.next().unwrap()));
    }
    if n_curves + 1 != n_regions {
        return Err(Error::Unresolved(format!(
            "{n_curves} curve components with {n_regions} regions do not form a tree"
        )));
    }
    let forest = canonical_tree_encoding(n_regions, &edges)?;
    Ok(LevelCurve { components: n_curves, forest })
}

/// Canonical encoding of an unrooted tree: root at the center (or canonical
/// choice between the two centers) and emit sorted nested parentheses.
fn canonical_tree_encoding(n_nodes: usize, edges: &[(usize, usize)]) -> Result<String> {
    if n_nodes == 0 {
        return Err(Error::Internal("empty region tree".into()));
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
    for &(a, b) in edges {
        if a == b {
            return Err(Error::Unresolved("self-loop in region adjacency".into()));
        }
        adj[a].push(b);
        adj[b].push(a);
    }
    // connectivity check
    let mut seen = vec![false; n_nodes];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut visited = 0usize;
    while let Some(v) = stack.pop() {
        visited += 1;
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    if visited != n_nodes {
        return Err(Error::Unresolved("region adjacency graph is disconnected".into()));
    }
    // peel leaves to find the center(s)
    let mut degree: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let mut removed = vec![false; n_nodes];
    let mut frontier: Vec<usize> =
        (0..n_nodes).filter(|&v| degree[v] <= 1).collect();
    let mut remaining = n_nodes;
    while remaining > 2 {
        let mut next = Vec::new();
        for &v in &frontier {
            if removed[v] {
                continue;
            }
            removed[v] = true;
            remaining -= 1;
            for &u in &adj[v] {
                if !removed[u] {
                    degree[u] -= 1;
                    if degree[u] == 1 {
                        next.push(u);
                    }
                }
            }
        }
        frontier = next;
    }
    let centers: Vec<usize> = (0..n_nodes).filter(|&v| !removed[v]).collect();
    fn encode(v: usize, parent: Option<usize>, adj: &[Vec<usize>]) -> String {
        let mut children: Vec<String> = adj[v]
            .iter()
            .filter(|&&u| Some(u) != parent)
            .map(|&u| encode(u, Some(v), adj))
            .collect();
        children.sort();
        format!("({})", children.concat())
    }
    match centers.as_slice() {
        [c] => Ok(encode(*c, None, &adj)),
        [c1, c2] => {
            let a = encode(*c1, Some(*c2), &adj);
            let b = encode(*c2, Some(*c1), &adj);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            Ok(format!("[{lo}{hi}]"))
        }
        _ => Err(Error::Internal("tree center computation failed".into())),
    }
}

/// A critical point of a scalar function on S^2 with its Morse data.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalPoint {
    pub position: SphericalPoint,
    pub value: f64,
    /// Number of negative eigenvalues of the intrinsic Hessian (0 = minimum,
    /// 1 = saddle, 2 = maximum).
    pub morse_index: u8,
    pub min_abs_eigenvalue: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalPointSet {
    pub points: Vec<CriticalPoint>,
    pub counts_by_index: [usize; 3],
    pub degenerate_count: usize,
}

impl CriticalPointSet {
    pub fn is_clean(&self) -> bool {
        self.degenerate_count == 0
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Critical points of a scalar function on S^2 by multistart projected Newton
/// on the tangential gradient, with Morse indices from the intrinsic Hessian.
///
/// The start mesh is chosen so the vertex count is at least `10 (d-1)^2`.
/// Hessian eigenvalues within 1e-10 of zero flag the point as degenerate;
/// clean outputs are checked against the deterministic ceiling
/// `2((d-1)^2 + (d-1) + 1)`.
pub fn critical_points_s2(p: &SphereFunction) -> Result<CriticalPointSet> {
    if p.sphere_dim() != 2 || p.n_components() != 1 {
        return Err(Error::InvalidArgument("critical points need n=2, m=1".into()));
    }
    let d = p.components()[0].degree().max(1);
    let target = 10 * (d - 1).max(1) * (d - 1).max(1);
    let mut level = 2usize;
    while 10usize * 4usize.pow(level as u32) + 2 < target && level < 7 {
        level += 1;
    }
    let mesh = IcoMesh::new(level)?;
    let plan = JetPlan::new(p, 2)?;
    // scale for the gradient convergence threshold
    let mut value_scale = 0.0f64;
    for i in 0..mesh.n_vertices() {
        value_scale = value_scale.max(p.components()[0].value_at(mesh.vertex(i)).abs());
    }
    let tol = 1e-12 * value_scale.max(1.0);

    let mut found: Vec<CriticalPoint> = Vec::new();
    for start in 0..mesh.n_vertices() {
        let mut x = mesh.vertex(start).to_vec();
        let mut converged = false;
        for _ in 0..60 {
            let point = SphericalPoint::project(&x)?;
            let jet = plan.jet(&point)?;
            let g = jet.tangential_gradient(0);
            let gnorm = (g[0] * g[0] + g[1] * g[1]).sqrt();
            if gnorm <= tol {
                converged = true;
                break;
            }
            let h = jet.intrinsic_hessian(0);
            let det = h[0][0] * h[1][1] - h[0][1] * h[0][1];
            let hnorm = h.iter().flatten().map(|v| v * v).sum::<f64>();
            let mut step = if det.abs() > 1e-12 * hnorm.max(1e-300) {
                [
                    (-g[0] * h[1][1] + g[1] * h[0][1]) / det,
                    (g[0] * h[0][1] - g[1] * h[0][0]) / det,
                ]
            } else {
                // singular Hessian: damped gradient descent
                [-g[0] / (hnorm.sqrt() + 1.0), -g[1] / (hnorm.sqrt() + 1.0)]
            };
            let snorm = (step[0] * step[0] + step[1] * step[1]).sqrt();
            if snorm > 0.5 {
                step[0] *= 0.5 / snorm;
                step[1] *= 0.5 / snorm;
            }
            let frame = jet.frame();
            for (c, (t0, t1)) in x.iter_mut().zip(frame[0].iter().zip(&frame[1])) {
                *c += step[0] * t0 + step[1] * t1;
            }
            let norm: f64 = x.iter().map(|a| a * a).sum::<f64>().sqrt();
            x.iter_mut().for_each(|a| *a /= norm);
        }
        if !converged {
            continue;
        }
        // deduplicate at 1e-8 chordal distance
        if found.iter().any(|cp| {
            cp.position
                .coords()
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
                <= 1e-8
        }) {
            continue;
        }
        let point = SphericalPoint::project(&x)?;
        let jet = plan.jet(&point)?;
        let hess = jet.intrinsic_hessian(0);
        let eigs = symmetric_eigenvalues(&hess);
        let min_abs = eigs.iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min);
        let degenerate = min_abs < 1e-10;
        let morse_index = eigs.iter().filter(|&&e| e < 0.0).count() as u8;
        found.push(CriticalPoint {
            position: point,
            value: jet.value(0),
            morse_index,
            min_abs_eigenvalue: min_abs,
            degenerate,
        });
    }
    let degenerate_count = found.iter().filter(|c| c.degenerate).count();
    let mut counts = [0usize; 3];
    for c in &found {
        if !c.degenerate {
            counts[c.morse_index as usize] += 1;
        }
    }
    let ceiling = 2 * ((d - 1) * (d - 1) + (d - 1) + 1);
    if degenerate_count == 0 && found.len() > ceiling {
        return Err(Error::Internal(format!(
            "{} clean critical points exceed the degree-{d} ceiling {ceiling}",
            found.len()
        )));
    }
    Ok(CriticalPointSet { points: found, counts_by_index: counts, degenerate_count })
}

/// Mesh configuration for the locus comparisons.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CompareConfig {
    /// Icosphere level `s` for the (s, s+1) certificate on S^2.
    pub ico_level: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig { ico_level: 4 }
    }
}

/// Compares the type-W singular loci of two sphere functions through their
/// computable invariants.
///
/// Zero sets on S^1 compare by zero count (a complete invariant of finite
/// point sets on the circle); zero sets on S^2 compare by component count and
/// canonical nesting tree (complete for disjoint smooth circles). The
/// critical-point verdicts compare index-wise counts, which refute isotopy
/// when they differ but do not prove it when they agree.
pub fn compare_loci(
    p: &SphereFunction,
    q: &SphereFunction,
    w: SingularityType,
    cfg: &CompareConfig,
) -> Result<IsotopyVerdict> {
    if p.sphere_dim() != q.sphere_dim() || p.n_components() != q.n_components() {
        return Err(Error::InvalidArgument("compared functions have different shapes".into()));
    }
    let n = p.sphere_dim();
    let m = p.n_components();
    w.check_target_dim(m, n)?;
    match (w, n) {
        (SingularityType::ZeroSet, 1) => {
            if m != 1 {
                return Err(Error::InvalidArgument("circle zero comparison needs m=1".into()));
            }
            let left = zeros_on_circle(p);
            let right = zeros_on_circle(q);
            match (left, right) {
                (Ok(a), Ok(b)) => {
                    let verdict = if a.len() == b.len() {
                        Verdict::Consistent
                    } else {
                        Verdict::Inconsistent
                    };
                    let detail = format!("{} vs {} zeros", a.len(), b.len());
                    Ok(IsotopyVerdict {
                        verdict,
                        left: Some(LocusInvariants::CircleZeros { count: a.len(), angles: a }),
                        right: Some(LocusInvariants::CircleZeros { count: b.len(), angles: b }),
                        detail,
                    })
                }
                (l, r) => {
                    let detail = match (&l, &r) {
                        (Err(e), _) => format!("left: {e}"),
                        (_, Err(e)) => format!("right: {e}"),
                        _ => unreachable!(),
                    };
                    for side in [l, r] {
                        if let Err(e) = side {
                            match e {
                                Error::Unresolved(_) | Error::ZeroPolynomial => {}
                                other => return Err(other),
                            }
                        }
                    }
                    Ok(IsotopyVerdict { verdict: Verdict::Unresolved, left: None, right: None, detail })
                }
            }
        }
        (SingularityType::ZeroSet, 2) => {
            if m != 1 {
                return Err(Error::InvalidArgument(
                    "curve comparison is catalogued for m=1 on S^2".into(),
                ));
            }
            let a = curve_components_s2(p, cfg.ico_level)?;
            let b = curve_components_s2(q, cfg.ico_level)?;
            let left = LocusInvariants::CurveS2 {
                components: a.components,
                forest: a.forest.clone(),
                certified: a.certified,
                levels: a.levels,
            };
            let right = LocusInvariants::CurveS2 {
                components: b.components,
                forest: b.forest.clone(),
                certified: b.certified,
                levels: b.levels,
            };
            let verdict = if !a.certified || !b.certified {
                Verdict::Unresolved
            } else if a.components == b.components && a.forest == b.forest {
                Verdict::Consistent
            } else {
                Verdict::Inconsistent
            };
            let detail = format!(
                "components {} vs {}, forests {} vs {}",
                a.components, b.components, a.forest, b.forest
            );
            Ok(IsotopyVerdict { verdict, left: Some(left), right: Some(right), detail })
        }
        (SingularityType::CriticalPoints, 2) | (SingularityType::NondegenerateMinima, 2) => {
            let a = critical_points_s2(p)?;
            let b = critical_points_s2(q)?;
            let (left, right, verdict, detail) = if w == SingularityType::CriticalPoints {
                let verdict = if !a.is_clean() || !b.is_clean() {
                    Verdict::Unresolved
                } else if a.counts_by_index == b.counts_by_index {
                    Verdict::Consistent
                } else {
                    Verdict::Inconsistent
                };
                (
                    LocusInvariants::MorsePoints {
                        counts_by_index: a.counts_by_index,
                        degenerate: a.degenerate_count,
                    },
                    LocusInvariants::MorsePoints {
                        counts_by_index: b.counts_by_index,
                        degenerate: b.degenerate_count,
                    },
                    verdict,
                    format!("index counts {:?} vs {:?}", a.counts_by_index, b.counts_by_index),
                )
            } else {
                let verdict = if !a.is_clean() || !b.is_clean() {
                    Verdict::Unresolved
                } else if a.counts_by_index[0] == b.counts_by_index[0] {
                    Verdict::Consistent
                } else {
                    Verdict::Inconsistent
                };
                (
                    LocusInvariants::Minima { count: a.counts_by_index[0] },
                    LocusInvariants::Minima { count: b.counts_by_index[0] },
                    verdict,
                    format!("minima {} vs {}", a.counts_by_index[0], b.counts_by_index[0]),
                )
            };
            Ok(IsotopyVerdict { verdict, left: Some(left), right: Some(right), detail })
        }
        (w, n) => Err(Error::InvalidArgument(format!(
            "no catalogued invariants for {w:?} on S^{n}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::SphereFunction;
    use crate::poly::{sample_kostlan, HomogeneousPoly, PolySystem};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn as_function(p: HomogeneousPoly) -> SphereFunction {
        SphereFunction::from_system(&PolySystem::single(p)).unwrap()
    }

    #[test]
    fn zeros_of_x0_x1_are_quarter_turns() {
        let p = as_function(HomogeneousPoly::monomial(2, &[1, 1], 1.0).unwrap());
        let zeros = zeros_on_circle(&p).unwrap();
        assert_eq!(zeros.len(), 4);
        let expect = [0.0, 0.5, 1.0, 1.5].map(|k| k * std::f64::consts::PI);
        for (z, e) in zeros.iter().zip(expect) {
            assert!((z - e).abs() <= 1e-9, "zero {z} vs {e}");
        }
    }

    #[test]
    fn positive_function_has_no_zeros() {
        let p = as_function(
            HomogeneousPoly::constant(2, 1.0).multiply_norm_sq(), // x0^2 + x1^2
        );
        assert!(zeros_on_circle(&p).unwrap().is_empty());
    }

    #[test]
    fn zero_polynomial_is_rejected() {
        let p = as_function(HomogeneousPoly::zero(2, 3));
        assert!(matches!(zeros_on_circle(&p), Err(Error::ZeroPolynomial)));
    }

    #[test]
    fn random_kostlan_zero_counts_even_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for _ in 0..10 {
            let d = 100;
            let p = as_function(sample_kostlan(1, d, &mut rng));
            let zeros = zeros_on_circle(&p).unwrap();
            assert_eq!(zeros.len() % 2, 0, "odd zero count");
            assert!(zeros.len() <= 2 * d);
        }
    }

    #[test]
    fn equator_is_one_component() {
        let p = as_function(HomogeneousPoly::monomial(3, &[1, 0, 0], 1.0).unwrap());
        let result = curve_components_s2(&p, 3).unwrap();
        assert!(result.certified);
        assert_eq!(result.components, 1);
        // two regions joined by one circle
        assert_eq!(result.forest, "[()()]");
    }

    #[test]
    fn two_parallel_circles_make_three_bands() {
        // x0^2 - ||x||^2/4 vanishes on x0 = +-1/2
        let p = HomogeneousPoly::monomial(3, &[2, 0, 0], 1.0)
            .unwrap()
            .sub(&HomogeneousPoly::constant(3, 0.25).multiply_norm_sq())
            .unwrap();
        let f = as_function(p);
        let result = curve_components_s2(&f, 3).unwrap();
        assert!(result.certified);
        assert_eq!(result.components, 2);
        // path with three regions: center-rooted at the middle band
        assert_eq!(result.forest, "(()())");
    }

    #[test]
    fn antipodal_images_of_components_are_components() {
        // structural check: a homogeneous function has an antipodally
        // symmetric zero set, so the antipodal map must permute the curve
        // components. Rebuild the crossed-triangle partition directly on the
        // mesh and push each component through the antipodal vertex map.
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let mesh = IcoMesh::new(3).unwrap();
        // antipodal vertex lookup (the icosphere is centrally symmetric)
        let mut antipode = vec![usize::MAX; mesh.n_vertices()];
        for i in 0..mesh.n_vertices() {
            let v = mesh.vertex(i);
            for j in 0..mesh.n_vertices() {
                let w = mesh.vertex(j);
                if (v[0] + w[0]).abs() + (v[1] + w[1]).abs() + (v[2] + w[2]).abs() <= 1e-9 {
                    antipode[i] = j;
                    break;
                }
            }
            assert_ne!(antipode[i], usize::MAX, "mesh lost central symmetry");
        }
        let mut tri_of = std::collections::HashMap::new();
        for (t, &[a, b, c]) in mesh.triangles().iter().enumerate() {
            let mut key = [a, b, c];
            key.sort_unstable();
            tri_of.insert(key, t);
        }
        for d in [5usize, 6] {
            let p = sample_kostlan(2, d, &mut rng);
            let signs: Vec<bool> =
                (0..mesh.n_vertices()).map(|i| p.value_at(mesh.vertex(i)) > 0.0).collect();
            let crossed: Vec<bool> = mesh
                .triangles()
                .iter()
                .map(|&[a, b, c]| !(signs[a] == signs[b] && signs[b] == signs[c]))
                .collect();
            let mut dsu = DisjointSet::new(mesh.n_triangles());
            for t in 0..mesh.n_triangles() {
                for nb in mesh.neighbors(t) {
                    if nb > t && crossed[t] && crossed[nb] {
                        dsu.union(t, nb);
                    }
                }
            }
            let component_of = |dsu: &mut DisjointSet, t: usize| dsu.find(t);
            // the antipodal image of every crossed component is exactly one
            // crossed component
            let mut image: std::collections::HashMap<usize, usize> =
                std::collections::HashMap::new();
            for t in 0..mesh.n_triangles() {
                if !crossed[t] {
                    continue;
                }
                let [a, b, c] = mesh.triangles()[t];
                let mut key = [antipode[a], antipode[b], antipode[c]];
                key.sort_unstable();
                let anti_t = tri_of[&key];
                assert!(crossed[anti_t], "crossed set must be antipodally symmetric (d={d})");
                let from = component_of(&mut dsu, t);
                let to = component_of(&mut dsu, anti_t);
                match image.entry(from) {
                    std::collections::hash_map::Entry::Vacant(e) => {
                        e.insert(to);
                    }
                    std::collections::hash_map::Entry::Occupied(e) => {
                        assert_eq!(*e.get(), to, "component image split (d={d})");
                    }
                }
            }
        }
    }

    #[test]
    fn critical_points_of_x0() {
        let f = as_function(HomogeneousPoly::monomial(3, &[1, 0, 0], 1.0).unwrap());
        let set = critical_points_s2(&f).unwrap();
        assert!(set.is_clean());
        assert_eq!(set.len(), 2);
        assert_eq!(set.counts_by_index, [1, 0, 1]);
        for cp in &set.points {
            let x0 = cp.position.coords()[0];
            assert!((x0.abs() - 1.0).abs() <= 1e-9, "critical points sit at the poles");
        }
    }

    #[test]
    fn degenerate_example_is_flagged() {
        // x0^2 has a critical circle along the equator
        let f = as_function(HomogeneousPoly::monomial(3, &[2, 0, 0], 1.0).unwrap());
        let set = critical_points_s2(&f).unwrap();
        assert!(set.degenerate_count > 0, "equatorial circle must raise the degenerate flag");
        // after a generic perturbation the output is clean Morse
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let bump = sample_kostlan(2, 2, &mut rng).scale(1e-3);
        let perturbed = as_function(
            HomogeneousPoly::monomial(3, &[2, 0, 0], 1.0).unwrap().add(&bump).unwrap(),
        );
        let clean = critical_points_s2(&perturbed).unwrap();
        assert!(clean.is_clean());
        let euler = clean.counts_by_index[0] as i64 - clean.counts_by_index[1] as i64
            + clean.counts_by_index[2] as i64;
        assert_eq!(euler, 2);
    }

    #[test]
    fn morse_euler_characteristic_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        for _ in 0..5 {
            let f = as_function(sample_kostlan(2, 6, &mut rng));
            let set = critical_points_s2(&f).unwrap();
            assert!(set.is_clean(), "random Kostlan polynomials are Morse");
            let [mins, saddles, maxs] = set.counts_by_index;
            assert_eq!(mins as i64 - saddles as i64 + maxs as i64, 2);
            let d = 6usize;
            assert!(set.len() <= 2 * ((d - 1) * (d - 1) + (d - 1) + 1));
        }
    }

    #[test]
    fn compare_identical_functions_is_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let f = as_function(sample_kostlan(1, 20, &mut rng));
        let v = compare_loci(&f, &f, SingularityType::ZeroSet, &CompareConfig::default()).unwrap();
        assert_eq!(v.verdict, Verdict::Consistent);
    }

    #[test]
    fn compare_different_circle_zero_counts() {
        let a = as_function(HomogeneousPoly::monomial(2, &[1, 1], 1.0).unwrap());
        let b = as_function(HomogeneousPoly::constant(2, 1.0).multiply_norm_sq());
        let v = compare_loci(&a, &b, SingularityType::ZeroSet, &CompareConfig::default()).unwrap();
        assert_eq!(v.verdict, Verdict::Inconsistent);
        assert!(v.detail.contains("4 vs 0"));
    }

    #[test]
    fn verdicts_invariant_under_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(56);
        let p = sample_kostlan(2, 5, &mut rng);
        let r = crate::linalg::random_orthogonal(3, &mut rng);
        let f = as_function(p.clone());
        let g = as_function(p.compose_orthogonal(&r).unwrap());
        let a = curve_components_s2(&f, 3).unwrap();
        let b = curve_components_s2(&g, 3).unwrap();
        assert_eq!(a.components, b.components);
        assert_eq!(a.forest, b.forest);

        let ca = critical_points_s2(&f).unwrap();
        let cb = critical_points_s2(&g).unwrap();
        assert_eq!(ca.counts_by_index, cb.counts_by_index);
    }

    #[test]
    fn canonical_encoding_distinguishes_path_and_star() {
        // path on 5 nodes vs star on 5 nodes
        let path = canonical_tree_encoding(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let star = canonical_tree_encoding(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        assert_ne!(path, star);
        // relabeling leaves the encoding unchanged
        let relabeled = canonical_tree_encoding(5, &[(4, 2), (2, 0), (0, 3), (3, 1)]).unwrap();
        assert_eq!(path, relabeled);
    }
}
