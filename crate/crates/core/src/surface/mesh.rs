use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::volume::Vec3;

#[inline]
pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub(crate) fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub(crate) fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub(crate) fn dist(a: Vec3, b: Vec3) -> f64 {
    norm(sub(a, b))
}

/// Closed, consistently oriented triangle mesh. Triangles wind
/// counter-clockwise when seen from outside.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    adjacency: Vec<Vec<usize>>,
    normals: Vec<Vec3>,
}

impl SurfaceMesh {
    /// Builds a mesh and checks that it is closed: every edge is shared by
    /// exactly two triangles that traverse it in opposite directions.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::OpenMesh("no triangles".into()));
        }
        let n = vertices.len();
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(Error::OpenMesh(format!(
                    "triangle {t} references a missing vertex"
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::OpenMesh(format!("triangle {t} repeats a vertex")));
            }
            for e in 0..3 {
                let key = (tri[e], tri[(e + 1) % 3]);
                *directed.entry(key).or_default() += 1;
            }
        }
        for (&(a, b), &count) in &directed {
            if count != 1 {
                return Err(Error::OpenMesh(format!(
                    "edge {a}->{b} traversed {count} times"
                )));
            }
            if !directed.contains_key(&(b, a)) {
                return Err(Error::OpenMesh(format!("edge {a}-{b} is a border edge")));
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in directed.keys() {
            adjacency[a].push(b);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let normals = vertex_normals(&vertices, &triangles);
        Ok(Self {
            vertices,
            triangles,
            adjacency,
            normals,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Edge-connected neighbours of every vertex, sorted.
    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    /// Outward unit normals, area weighted.
    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Undirected edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, list)| list.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
            .collect();
        out.sort_unstable();
        out
    }

    /// Same connectivity with moved vertices. No closedness re-check is
    /// needed since the topology is unchanged.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Self {
        assert_eq!(vertices.len(), self.vertices.len());
        let normals = vertex_normals(&vertices, &self.triangles);
        Self {
            vertices,
            triangles: self.triangles.clone(),
            adjacency: self.adjacency.clone(),
            normals,
        }
    }

    /// Enclosed volume from signed tetrahedra against the origin.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| self.vertices[i]);
                dot(a, cross(b, c)) / 6.0
            })
            .sum()
    }

    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for a in 0..3 {
                lo[a] = lo[a].min(v[a]);
                hi[a] = hi[a].max(v[a]);
            }
        }
        (lo, hi)
    }

    pub fn triangle_normal(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        let n = cross(sub(b, a), sub(c, a));
        let len = norm(n);
        if len > 0.0 {
            scale(n, 1.0 / len)
        } else {
            [0.0; 3]
        }
    }

    /// Geodesic sphere from a subdivided icosahedron.
    pub fn icosphere(center: Vec3, radius: f64, subdivisions: usize) -> Self {
        let t = (1.0 + 5f64.sqrt()) / 2.0;
        let mut verts: Vec<Vec3> = vec![
            [-1.0, t, 0.0],
            [1.0, t, 0.0],
            [-1.0, -t, 0.0],
            [1.0, -t, 0.0],
            [0.0, -1.0, t],
            [0.0, 1.0, t],
            [0.0, -1.0, -t],
            [0.0, 1.0, -t],
            [t, 0.0, -1.0],
            [t, 0.0, 1.0],
            [-t, 0.0, -1.0],
            [-t, 0.0, 1.0],
        ];
        let unit = |v: Vec3| scale(v, 1.0 / norm(v));
        for v in &mut verts {
            *v = unit(*v);
        }
        let mut tris: Vec<[usize; 3]> = vec![
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
        for _ in 0..subdivisions {
            let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
            let mut next = Vec::with_capacity(tris.len() * 4);
            let mut mid = |a: usize, b: usize, verts: &mut Vec<Vec3>| {
                let key = (a.min(b), a.max(b));
                *midpoints.entry(key).or_insert_with(|| {
                    verts.push(unit(scale(add(verts[a], verts[b]), 0.5)));
                    verts.len() - 1
                })
            };
            for [a, b, c] in tris {
                let ab = mid(a, b, &mut verts);
                let bc = mid(b, c, &mut verts);
                let ca = mid(c, a, &mut verts);
                next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            tris = next;
        }
        let verts = verts
            .into_iter()
            .map(|v| add(center, scale(v, radius)))
            .collect();
        Self::new(verts, tris).expect("icosphere is closed")
    }
}

fn vertex_normals(vertices: &[Vec3], triangles: &[[usize; 3]]) -> Vec<Vec3> {
    let mut acc = vec![[0.0; 3]; vertices.len()];
    for tri in triangles {
        let [a, b, c] = tri.map(|i| vertices[i]);
        // cross product length is twice the area: area weighting for free
        let n = cross(sub(b, a), sub(c, a));
        for &i in tri {
            acc[i] = add(acc[i], n);
        }
    }
    acc.into_iter()
        .map(|n| {
            let len = norm(n);
            if len > 0.0 {
                scale(n, 1.0 / len)
            } else {
                n
            }
        })
        .collect()
}
