//! Rasterisation of the cut surface by generalised winding numbers.

use rayon::prelude::*;

use super::graph::SurfaceSolution;
use crate::error::{Error, Result};
use crate::surface::mesh::{cross, dot, norm, sub};
use crate::surface::{ColumnSet, SurfaceMesh};
use crate::volume::{Geometry, LabelVolume, Vec3};

/// Winding numbers outside `[-0.5, 1.5]` mean the cut mesh folds over
/// itself.
const WINDING_LOW: f64 = -0.5;
const WINDING_HIGH: f64 = 1.5;

/// Mesh whose vertices sit at the chosen node of their column.
pub fn cut_mesh(
    solution: &SurfaceSolution,
    columns: &ColumnSet,
    mesh: &SurfaceMesh,
) -> Result<SurfaceMesh> {
    if solution.boundary_index.len() != columns.len() || columns.len() != mesh.vertex_count() {
        return Err(Error::LengthMismatch(
            solution.boundary_index.len(),
            mesh.vertex_count(),
        ));
    }
    let vertices = solution
        .boundary_index
        .iter()
        .enumerate()
        .map(|(k, &j)| {
            if j >= columns.length {
                Err(Error::InvalidGraph(format!(
                    "column {k}: node {j} out of range"
                )))
            } else {
                Ok(columns.node(k, j))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(mesh.with_vertices(vertices))
}

/// Solid angle subtended by triangle `abc` seen from the origin
/// (Van Oosterom & Strackee), signed by the triangle's winding.
fn solid_angle(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let (la, lb, lc) = (norm(a), norm(b), norm(c));
    let numerator = dot(a, cross(b, c));
    let denominator = la * lb * lc + dot(a, b) * lc + dot(a, c) * lb + dot(b, c) * la;
    2.0 * numerator.atan2(denominator)
}

/// Generalised winding number of a closed mesh around `point`.
pub fn winding_number(mesh: &SurfaceMesh, point: Vec3) -> f64 {
    let v = mesh.vertices();
    let total: f64 = mesh
        .triangles()
        .iter()
        .map(|t| {
            solid_angle(
                sub(v[t[0]], point),
                sub(v[t[1]], point),
                sub(v[t[2]], point),
            )
        })
        .sum();
    total / (4.0 * std::f64::consts::PI)
}

/// Labels every voxel whose center has winding number above 0.5 with
/// respect to `mesh`. Only voxels inside the mesh's bounding box are
/// evaluated; the winding number of a closed surface is zero outside it.
pub fn voxelize_mesh(mesh: &SurfaceMesh, geometry: &Geometry) -> Result<LabelVolume> {
    let (lo, hi) = mesh.bounding_box();
    let lo_i = geometry.to_index(lo);
    let hi_i = geometry.to_index(hi);
    let range = |a: usize| {
        let start = lo_i[a].ceil().max(0.0) as usize;
        let end = (hi_i[a].floor() + 1.0).clamp(0.0, geometry.dims[a] as f64) as usize;
        start..end.max(start)
    };
    let (rx, ry, rz) = (range(0), range(1), range(2));
    let candidates: Vec<usize> = rz
        .flat_map(|z| {
            let ry = ry.clone();
            let rx = rx.clone();
            ry.flat_map(move |y| rx.clone().map(move |x| geometry.index(x, y, z)))
        })
        .collect();
    let windings: Vec<(usize, f64)> = candidates
        .into_par_iter()
        .map(|i| (i, winding_number(mesh, geometry.voxel_center(i))))
        .collect();
    let bad = windings
        .iter()
        .filter(|(_, w)| !(WINDING_LOW..=WINDING_HIGH).contains(w))
        .count();
    if bad > 0 {
        return Err(Error::DegenerateCutMesh { voxels: bad });
    }
    let mut mask = vec![false; geometry.len()];
    for (i, w) in windings {
        mask[i] = w > 0.5;
    }
    Ok(LabelVolume::from_mask(*geometry, &mask))
}

/// Output mask of a surface solution.
pub fn voxelize(
    solution: &SurfaceSolution,
    columns: &ColumnSet,
    mesh: &SurfaceMesh,
    geometry: &Geometry,
) -> Result<LabelVolume> {
    voxelize_mesh(&cut_mesh(solution, columns, mesh)?, geometry)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::dsc;
    use crate::surface::{build_columns, extract_mesh, ColumnParams};
    use crate::volume::Volume;

    fn ball(n: usize, center: f64, r: f64) -> LabelVolume {
        let g = Geometry::unit([n; 3]).unwrap();
        let m: Vec<bool> = (0..g.len())
            .map(|i| {
                g.coords(i)
                    .iter()
                    .map(|&c| (c as f64 - center).powi(2))
                    .sum::<f64>()
                    <= r * r
            })
            .collect();
        LabelVolume::from_mask(g, &m)
    }

    #[test]
    fn winding_numbers_of_a_sphere() {
        let mesh = SurfaceMesh::icosphere([0.0; 3], 2.0, 2);
        assert!((winding_number(&mesh, [0.1, -0.2, 0.3]) - 1.0).abs() < 1e-9);
        assert!(winding_number(&mesh, [5.0, 0.0, 0.0]).abs() < 1e-9);
    }

    #[test]
    fn base_surface_reproduces_the_mask() {
        let mask = ball(24, 12.0, 7.0);
        let mesh = extract_mesh(&mask).unwrap();
        let params = ColumnParams {
            length: 4,
            ..ColumnParams::default()
        };
        let columns = build_columns(&mesh, &params).unwrap();
        let solution = SurfaceSolution {
            delta: 2,
            boundary_index: vec![columns.base_index; columns.len()],
            total_cost: 0.0,
        };
        let out = voxelize(&solution, &columns, &mesh, mask.geometry()).unwrap();
        let d = dsc(&out, &mask).unwrap();
        assert!(d >= 0.95, "dsc {d}");
    }

    #[test]
    fn innermost_surface_is_smaller() {
        let mesh = SurfaceMesh::icosphere([20.0; 3], 14.0, 2);
        let geometry = Geometry::unit([40; 3]).unwrap();
        let columns = build_columns(&mesh, &ColumnParams::default()).unwrap();
        let at = |j: usize| SurfaceSolution {
            delta: 2,
            boundary_index: vec![j; columns.len()],
            total_cost: 0.0,
        };
        let base = voxelize(&at(columns.base_index), &columns, &mesh, &geometry).unwrap();
        let inner = voxelize(&at(0), &columns, &mesh, &geometry).unwrap();
        assert!(inner.count() < base.count());
        assert!(inner.count() > 0);
    }

    #[test]
    fn folded_mesh_is_reported() {
        // two nested copies of a sphere, both outward: winding 2 inside
        let a = SurfaceMesh::icosphere([5.0; 3], 3.0, 1);
        let b = SurfaceMesh::icosphere([5.0; 3], 2.0, 1);
        let n = a.vertex_count();
        let mut verts = a.vertices().to_vec();
        verts.extend_from_slice(b.vertices());
        let mut tris = a.triangles().to_vec();
        tris.extend(b.triangles().iter().map(|t| t.map(|v| v + n)));
        let nested = SurfaceMesh::new(verts, tris).unwrap();
        let g = Geometry::unit([10; 3]).unwrap();
        assert!(matches!(
            voxelize_mesh(&nested, &g),
            Err(Error::DegenerateCutMesh { .. })
        ));
    }

    #[test]
    fn mismatched_solution_rejected() {
        let mesh = SurfaceMesh::icosphere([0.0; 3], 3.0, 0);
        let columns = build_columns(&mesh, &ColumnParams::default()).unwrap();
        let s = SurfaceSolution {
            delta: 1,
            boundary_index: vec![0; 3],
            total_cost: 0.0,
        };
        assert!(cut_mesh(&s, &columns, &mesh).is_err());
    }
}
