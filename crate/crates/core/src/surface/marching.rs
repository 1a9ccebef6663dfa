//! Iso-surface extraction from a binary mask.
//!
//! The mask is box-smoothed once (3×3×3 mean) on a grid padded with two
//! background layers, then polygonised at level 0.5 with marching cubes.
//! Ambiguous cube faces are resolved with the asymptotic decider, which
//! only looks at the four face values, so neighbouring cubes always agree
//! on the face contour and the mesh is closed.

use std::collections::HashMap;

use super::mesh::{add, cross, dot, sub, SurfaceMesh};
use crate::error::{Error, Result};
use crate::refine::label_components;
use crate::volume::{LabelVolume, Vec3, Volume};

pub const ISO_LEVEL: f64 = 0.5;
const PAD: usize = 2;

const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [0, 1, 0],
    [1, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [0, 1, 1],
    [1, 1, 1],
];

/// Cube edges as corner pairs; edge `e` runs along axis `e / 4`.
const EDGES: [(usize, usize); 12] = [
    (0, 1),
    (2, 3),
    (4, 5),
    (6, 7),
    (0, 2),
    (1, 3),
    (4, 6),
    (5, 7),
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

/// Cube faces as cyclic corner sequences.
const FACES: [[usize; 4]; 6] = [
    [0, 2, 6, 4],
    [1, 3, 7, 5],
    [0, 1, 5, 4],
    [2, 3, 7, 6],
    [0, 1, 3, 2],
    [4, 5, 7, 6],
];

fn edge_between(a: usize, b: usize) -> usize {
    let key = (a.min(b), a.max(b));
    EDGES
        .iter()
        .position(|&e| e == key)
        .expect("corners share a cube edge")
}

/// Smoothed field on the padded grid, values `k / 27`.
fn box_smoothed(mask: &LabelVolume) -> (Vec<f64>, [usize; 3]) {
    let [nx, ny, nz] = mask.geometry().dims;
    let p = [nx + 2 * PAD, ny + 2 * PAD, nz + 2 * PAD];
    let idx = |x: usize, y: usize, z: usize| x + p[0] * (y + p[1] * z);
    let mut counts = vec![0u32; p[0] * p[1] * p[2]];
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if mask.at(x, y, z) != 0.0 {
                    counts[idx(x + PAD, y + PAD, z + PAD)] = 1;
                }
            }
        }
    }
    let strides = [1, p[0], p[0] * p[1]];
    for axis in 0..3 {
        let src = counts.clone();
        let stride = strides[axis];
        for (i, c) in counts.iter_mut().enumerate() {
            let coord = (i / stride) % p[axis];
            let mut sum = src[i];
            if coord > 0 {
                sum += src[i - stride];
            }
            if coord + 1 < p[axis] {
                sum += src[i + stride];
            }
            *c = sum;
        }
    }
    (counts.into_iter().map(|c| c as f64 / 27.0).collect(), p)
}

/// Marching cubes over a scalar field sampled on a regular grid; returns
/// vertices in grid-index coordinates and outward-wound triangles (normals
/// point from values above `iso` toward values below it).
pub fn polygonise(field: &[f64], dims: [usize; 3], iso: f64) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let idx = |c: [usize; 3]| c[0] + dims[0] * (c[1] + dims[1] * c[2]);
    let mut vertex_ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut triangles = Vec::new();

    for z in 0..dims[2].saturating_sub(1) {
        for y in 0..dims[1].saturating_sub(1) {
            for x in 0..dims[0].saturating_sub(1) {
                let corner = |c: usize| [x + CORNERS[c][0], y + CORNERS[c][1], z + CORNERS[c][2]];
                let v: [f64; 8] = std::array::from_fn(|c| field[idx(corner(c))]);
                let inside: [bool; 8] = std::array::from_fn(|c| v[c] > iso);
                if inside.iter().all(|&b| b) || inside.iter().all(|&b| !b) {
                    continue;
                }

                let mut partners: [[usize; 2]; 12] = [[usize::MAX; 2]; 12];
                let mut link = |a: usize, b: usize| {
                    for (e, other) in [(a, b), (b, a)] {
                        let slot = &mut partners[e];
                        if slot[0] == usize::MAX {
                            slot[0] = other;
                        } else {
                            slot[1] = other;
                        }
                    }
                };
                for face in FACES {
                    let fe: [usize; 4] =
                        std::array::from_fn(|i| edge_between(face[i], face[(i + 1) % 4]));
                    let crossing: Vec<usize> = (0..4)
                        .filter(|&i| inside[face[i]] != inside[face[(i + 1) % 4]])
                        .collect();
                    match crossing.len() {
                        0 => {}
                        2 => link(fe[crossing[0]], fe[crossing[1]]),
                        4 => {
                            let [a, b, c, d] = face.map(|k| v[k]);
                            let saddle = (a * c - b * d) / (a + c - b - d);
                            let center_inside = saddle > iso;
                            // Cut around the corners that are isolated on this face.
                            for i in 0..4 {
                                if inside[face[i]] != center_inside {
                                    link(fe[(i + 3) % 4], fe[i]);
                                }
                            }
                        }
                        _ => unreachable!("a face has an even number of crossings"),
                    }
                }

                let mut seen = [false; 12];
                for start in 0..12 {
                    if seen[start] || partners[start][0] == usize::MAX {
                        continue;
                    }
                    let mut cycle = vec![start];
                    seen[start] = true;
                    let mut prev = start;
                    let mut cur = partners[start][0];
                    while cur != start {
                        seen[cur] = true;
                        cycle.push(cur);
                        let next = if partners[cur][0] == prev {
                            partners[cur][1]
                        } else {
                            partners[cur][0]
                        };
                        prev = cur;
                        cur = next;
                    }

                    let mut ids = Vec::with_capacity(cycle.len());
                    let mut points = Vec::with_capacity(cycle.len());
                    let mut outward = [0.0; 3];
                    for &e in &cycle {
                        let (ca, cb) = EDGES[e];
                        let (pa, pb) = (corner(ca), corner(cb));
                        let pa_f = pa.map(|u| u as f64);
                        let pb_f = pb.map(|u| u as f64);
                        let t = (iso - v[ca]) / (v[cb] - v[ca]);
                        let pos = add(
                            pa_f,
                            [
                                t * (pb_f[0] - pa_f[0]),
                                t * (pb_f[1] - pa_f[1]),
                                t * (pb_f[2] - pa_f[2]),
                            ],
                        );
                        let key = (idx(pa), e / 4);
                        let id = *vertex_ids.entry(key).or_insert_with(|| {
                            vertices.push(pos);
                            vertices.len() - 1
                        });
                        ids.push(id);
                        points.push(pos);
                        let step = if inside[ca] {
                            sub(pb_f, pa_f)
                        } else {
                            sub(pa_f, pb_f)
                        };
                        outward = add(outward, step);
                    }
                    let mut newell = [0.0; 3];
                    for i in 0..points.len() {
                        newell = add(newell, cross(points[i], points[(i + 1) % points.len()]));
                    }
                    if dot(newell, outward) < 0.0 {
                        ids.reverse();
                    }
                    for i in 1..ids.len() - 1 {
                        triangles.push([ids[0], ids[i], ids[i + 1]]);
                    }
                }
            }
        }
    }
    (vertices, triangles)
}

/// Closed boundary mesh of a single-component mask, in world millimetres.
pub fn extract_mesh(mask: &LabelVolume) -> Result<SurfaceMesh> {
    let comps = label_components(mask);
    match comps.count() {
        0 => return Err(Error::EmptyMask),
        1 => {}
        n => return Err(Error::MultipleComponents(n)),
    }
    if comps.sizes[0] < 8 {
        return Err(Error::ComponentTooSmall(comps.sizes[0]));
    }
    let (field, dims) = box_smoothed(mask);
    let (verts, tris) = polygonise(&field, dims, ISO_LEVEL);
    let g = mask.geometry();
    let world = verts
        .into_iter()
        .map(|u| g.to_world([u[0] - PAD as f64, u[1] - PAD as f64, u[2] - PAD as f64]))
        .collect();
    SurfaceMesh::new(world, tris)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::mesh::{dist, norm};
    use crate::volume::Geometry;

    fn mask_where(n: usize, mut f: impl FnMut([usize; 3]) -> bool) -> LabelVolume {
        let g = Geometry::unit([n; 3]).unwrap();
        let m: Vec<bool> = (0..g.len()).map(|i| f(g.coords(i))).collect();
        LabelVolume::from_mask(g, &m)
    }

    #[test]
    fn cube_mesh_volume() {
        let m = mask_where(12, |c| c.iter().all(|&v| (2..10).contains(&v)));
        let mesh = extract_mesh(&m).unwrap();
        let vol = mesh.signed_volume();
        assert!(vol > 0.0);
        assert!((vol - 512.0).abs() / 512.0 <= 0.15, "volume {vol}");
    }

    #[test]
    fn sphere_mesh_radius_bounds() {
        let r = 8.0;
        let m = mask_where(24, |c| {
            c.iter().map(|&v| (v as f64 - 12.0).powi(2)).sum::<f64>() <= r * r
        });
        let mesh = extract_mesh(&m).unwrap();
        for v in mesh.vertices() {
            let d = dist(*v, [12.0; 3]);
            assert!(d >= r - 1.5 && d <= r + 1.5, "distance {d}");
        }
        for n in mesh.normals() {
            assert!((norm(*n) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn empty_and_split_masks_rejected() {
        assert!(matches!(
            extract_mesh(&mask_where(6, |_| false)),
            Err(Error::EmptyMask)
        ));
        let two = mask_where(12, |c| {
            let a = c.iter().all(|&v| (1..4).contains(&v));
            let b = c.iter().all(|&v| (7..10).contains(&v));
            a || b
        });
        assert!(matches!(
            extract_mesh(&two),
            Err(Error::MultipleComponents(2))
        ));
        let tiny = mask_where(6, |c| c == [2, 2, 2]);
        assert!(matches!(
            extract_mesh(&tiny),
            Err(Error::ComponentTooSmall(1))
        ));
    }

    #[test]
    fn diagonal_contacts_stay_closed() {
        // voxels touching only along edges and corners exercise the
        // ambiguous face configurations
        let m = mask_where(10, |c| {
            let inner = c.iter().all(|&v| (2..8).contains(&v));
            inner && (c[0] + c[1] + c[2]) % 2 == 0
        });
        let mesh = extract_mesh(&m).unwrap();
        assert!(mesh.signed_volume() > 0.0);
    }

    #[test]
    fn random_blobs_give_closed_meshes() {
        let mut state = 0x2545_f491_4f6c_dd1du64;
        for _ in 0..20 {
            let m = mask_where(10, |c| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                let interior = c.iter().all(|&v| (1..9).contains(&v));
                interior && !state.is_multiple_of(3)
            });
            let largest = crate::refine::largest_component(&m);
            if largest.count() < 8 {
                continue;
            }
            let mesh = extract_mesh(&largest).unwrap();
            assert!(mesh.signed_volume() > 0.0);
        }
    }
}
