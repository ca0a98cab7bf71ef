//! Sphere meshes used for sampling sups/infs and extracting level sets:
//! a uniform angular grid on S^1 and subdivided icospheres on S^2.

use crate::error::{Error, Result};

/// Uniform grid of K angles on the circle.
#[derive(Debug, Clone)]
pub struct CircleMesh {
    angles: Vec<f64>,
    points: Vec<f64>, // flat, stride 2
}

impl CircleMesh {
    pub fn new(k: usize) -> Result<Self> {
        if k < 3 {
            return Err(Error::InvalidArgument("circle mesh needs at least 3 points".into()));
        }
        let mut angles = Vec::with_capacity(k);
        let mut points = Vec::with_capacity(2 * k);
        for i in 0..k {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
            angles.push(theta);
            points.push(theta.cos());
            points.push(theta.sin());
        }
        Ok(CircleMesh { angles, points })
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[2 * i..2 * i + 2]
    }
}

/// Icosphere at a given subdivision level: vertices, triangles, and
/// triangle-to-triangle adjacency across shared edges.
#[derive(Debug, Clone)]
pub struct IcoMesh {
    level: usize,
    vertices: Vec<f64>, // flat, stride 3
    triangles: Vec<[usize; 3]>,
    neighbors: Vec<[usize; 3]>,
}

impl IcoMesh {
    /// Builds the icosphere by `level` midpoint subdivisions of the
    /// icosahedron, projecting every new vertex back to the unit sphere.
    /// Existing vertices keep their indices across levels.
    pub fn new(level: usize) -> Result<Self> {
        if level > 9 {
            return Err(Error::InvalidArgument(format!(
                "icosphere level {level} too large (triangle count 20*4^level)"
            )));
        }
        let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
        let raw: [[f64; 3]; 12] = [
            [-1.0, phi, 0.0],
            [1.0, phi, 0.0],
            [-1.0, -phi, 0.0],
            [1.0, -phi, 0.0],
            [0.0, -1.0, phi],
            [0.0, 1.0, phi],
            [0.0, -1.0, -phi],
            [0.0, 1.0, -phi],
            [phi, 0.0, -1.0],
            [phi, 0.0, 1.0],
            [-phi, 0.0, -1.0],
            [-phi, 0.0, 1.0],
        ];
        let norm = (1.0 + phi * phi).sqrt();
        let mut vertices: Vec<f64> = Vec::new();
        for v in raw {
            vertices.extend(v.iter().map(|a| a / norm));
        }
        let mut triangles: Vec<[usize; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..level {
            let mut midpoints: std::collections::HashMap<(usize, usize), usize> =
                std::collections::HashMap::new();
            let mut next = Vec::with_capacity(triangles.len() * 4);
            for &[a, b, c] in &triangles {
                let ab = midpoint(&mut vertices, &mut midpoints, a, b);
                let bc = midpoint(&mut vertices, &mut midpoints, b, c);
                let ca = midpoint(&mut vertices, &mut midpoints, c, a);
                next.push([a, ab, ca]);
                next.push([b, bc, ab]);
                next.push([c, ca, bc]);
                next.push([ab, bc, ca]);
            }
            triangles = next;
        }
        let neighbors = adjacency(&triangles)?;
        Ok(IcoMesh { level, vertices, triangles, neighbors })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len() / 3
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.vertices[3 * i..3 * i + 3]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Indices of the three edge-adjacent triangles of triangle `t`.
    pub fn neighbors(&self, t: usize) -> [usize; 3] {
        self.neighbors[t]
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.triangles.len() * 3 / 2
    }
}

fn midpoint(
    vertices: &mut Vec<f64>,
    cache: &mut std::collections::HashMap<(usize, usize), usize>,
    a: usize,
    b: usize,
) -> usize {
    let key = (a.min(b), a.max(b));
    if let Some(&idx) = cache.get(&key) {
        return idx;
    }
    let pa = [vertices[3 * a], vertices[3 * a + 1], vertices[3 * a + 2]];
    let pb = [vertices[3 * b], vertices[3 * b + 1], vertices[3 * b + 2]];
    let mut m = [(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0, (pa[2] + pb[2]) / 2.0];
    let norm = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
    m[0] /= norm;
    m[1] /= norm;
    m[2] /= norm;
    let idx = vertices.len() / 3;
    vertices.extend_from_slice(&m);
    cache.insert(key, idx);
    idx
}

fn adjacency(triangles: &[[usize; 3]]) -> Result<Vec<[usize; 3]>> {
    let mut by_edge: std::collections::HashMap<(usize, usize), Vec<usize>> =
        std::collections::HashMap::new();
    for (t, &[a, b, c]) in triangles.iter().enumerate() {
        for (u, v) in [(a, b), (b, c), (c, a)] {
            by_edge.entry((u.min(v), u.max(v))).or_default().push(t);
        }
    }
    let mut neighbors = vec![[usize::MAX; 3]; triangles.len()];
    for (t, &[a, b, c]) in triangles.iter().enumerate() {
        for (slot, (u, v)) in [(a, b), (b, c), (c, a)].into_iter().enumerate() {
            let owners = &by_edge[&(u.min(v), u.max(v))];
            if owners.len() != 2 {
                return Err(Error::Internal(format!(
                    "edge ({u},{v}) belongs to {} triangles on a closed surface",
                    owners.len()
                )));
            }
            neighbors[t][slot] = if owners[0] == t { owners[1] } else { owners[0] };
        }
    }
    Ok(neighbors)
}

/// A mesh on S^n with n in {1, 2}.
#[derive(Debug, Clone)]
pub enum SphereMesh {
    Circle(CircleMesh),
    Ico(IcoMesh),
}

impl SphereMesh {
    /// Default mesh for sampling extrema of functions whose harmonic content
    /// reaches degree `degree_hint` on S^n.
    ///
    /// On the circle a degree-d polynomial oscillates at frequency at most d,
    /// so 4d points bracket every monotone arc; icosphere levels grow until
    /// the vertex count passes a small multiple of the equivalent sampling
    /// density.
    pub fn for_degree(n: usize, degree_hint: usize) -> Result<SphereMesh> {
        match n {
            1 => SphereMesh::circle((4 * degree_hint.max(1)).max(64)),
            2 => {
                let target = (10 * degree_hint.max(1) * degree_hint.max(1)).max(100);
                let mut level = 2usize;
                while 10usize * 4usize.pow(level as u32) + 2 < target && level < 8 {
                    level += 1;
                }
                SphereMesh::icosphere(level)
            }
            _ => Err(Error::InvalidArgument(format!("meshes exist for n in {{1,2}}, not {n}"))),
        }
    }

    pub fn circle(k: usize) -> Result<SphereMesh> {
        Ok(SphereMesh::Circle(CircleMesh::new(k)?))
    }

    pub fn icosphere(level: usize) -> Result<SphereMesh> {
        Ok(SphereMesh::Ico(IcoMesh::new(level)?))
    }

    pub fn sphere_dim(&self) -> usize {
        match self {
            SphereMesh::Circle(_) => 1,
            SphereMesh::Ico(_) => 2,
        }
    }

    pub fn n_vertices(&self) -> usize {
        match self {
            SphereMesh::Circle(c) => c.len(),
            SphereMesh::Ico(m) => m.n_vertices(),
        }
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        match self {
            SphereMesh::Circle(c) => c.point(i),
            SphereMesh::Ico(m) => m.vertex(i),
        }
    }

    /// Human-readable resolution tag recorded in result metadata.
    pub fn resolution(&self) -> String {
        match self {
            SphereMesh::Circle(c) => format!("circle:{}", c.len()),
            SphereMesh::Ico(m) => format!("ico:{}", m.level()),
        }
    }

    /// Next finer mesh; the current vertex set is a subset of the refined one
    /// (a prefix for icospheres, the even indices for circles).
    pub fn refine(&self) -> Result<SphereMesh> {
        match self {
            SphereMesh::Circle(c) => SphereMesh::circle(c.len() * 2),
            SphereMesh::Ico(m) => SphereMesh::icosphere(m.level() + 1),
        }
    }
}
