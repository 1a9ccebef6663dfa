//! Graph columns traced from every mesh vertex.
//!
//! Each column holds `length` nodes spaced `spacing` apart in arc length,
//! innermost first, with the mesh vertex itself at `base_index =
//! length / 2`. In ELF mode both halves follow the field lines of unit
//! charges placed on the mesh vertices; in normal mode they are straight
//! lines along the vertex normal.
//!
//! Inside a closed surface the Coulomb field of evenly spread charges
//! nearly cancels (shell theorem), so field lines traced inward wander and
//! turn back through the gaps between charges. The inward half therefore
//! uses a steeper falloff (`inward_falloff`, default `|x − p|^-4`) whose
//! lines head for the medial region without crossing; the outward half uses
//! the plain Coulomb field.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::elf::{elf_vector_falloff, DEFAULT_EXCLUSION_MM};
use super::mesh::{add, dist, dot, norm, scale, SurfaceMesh};
use crate::error::{Error, Result};
use crate::volume::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnMode {
    Elf,
    Normal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnParams {
    pub length: usize,
    pub spacing: f64,
    pub mode: ColumnMode,
    pub exclusion_radius: f64,
    /// Distance exponent of the field used for the inward half in ELF mode;
    /// `2` uses the Coulomb field on both sides.
    pub inward_falloff: i32,
}

impl Default for ColumnParams {
    fn default() -> Self {
        Self {
            length: 50,
            spacing: 0.5,
            mode: ColumnMode::Elf,
            exclusion_radius: DEFAULT_EXCLUSION_MM,
            inward_falloff: 4,
        }
    }
}

impl ColumnParams {
    pub fn validate(&self) -> Result<()> {
        if self.length < 2 {
            return Err(Error::InvalidConfig(format!(
                "column length must be at least 2, got {}",
                self.length
            )));
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "node spacing must be positive, got {}",
                self.spacing
            )));
        }
        if !(self.exclusion_radius.is_finite() && self.exclusion_radius >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "exclusion radius must be non-negative, got {}",
                self.exclusion_radius
            )));
        }
        if !(2..=8).contains(&self.inward_falloff) {
            return Err(Error::InvalidConfig(format!(
                "inward falloff must be in 2..=8, got {}",
                self.inward_falloff
            )));
        }
        Ok(())
    }

    pub fn base_index(&self) -> usize {
        self.length / 2
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ColumnSet {
    /// Node positions per column (one column per mesh vertex), innermost first.
    pub columns: Vec<Vec<Vec3>>,
    pub spacing: f64,
    pub length: usize,
    pub base_index: usize,
    /// Adjacent column pairs `(a, b)` with `a < b`, from the mesh edges.
    pub adjacency: Vec<(usize, usize)>,
}

impl ColumnSet {
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn node(&self, column: usize, index: usize) -> Vec3 {
        self.columns[column][index]
    }

    /// Smallest distance between nodes of two different columns, clamped to
    /// the node spacing: pairs farther apart than one spacing are not
    /// examined, so a result equal to `spacing` means "at least spacing".
    pub fn min_inter_column_distance(&self) -> f64 {
        let cell = self.spacing;
        let key = |p: Vec3| p.map(|v| (v / cell).floor() as i64);
        let mut grid: HashMap<[i64; 3], Vec<(usize, Vec3)>> = HashMap::new();
        for (k, col) in self.columns.iter().enumerate() {
            for &p in col {
                grid.entry(key(p)).or_default().push((k, p));
            }
        }
        let mut best = self.spacing;
        for (k, col) in self.columns.iter().enumerate() {
            for &p in col {
                let c = key(p);
                for dz in -1..=1 {
                    for dy in -1..=1 {
                        for dx in -1..=1 {
                            let Some(bucket) = grid.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) else {
                                continue;
                            };
                            for &(other, q) in bucket {
                                if other > k {
                                    best = best.min(dist(p, q));
                                }
                            }
                        }
                    }
                }
            }
        }
        best
    }
}

/// Picks the orientation of `e` that continues along `prev`; a vanishing
/// field keeps the previous direction.
fn continue_along(e: Vec3, prev: Vec3) -> Vec3 {
    let len = norm(e);
    if !(len >= 1e-12) {
        return prev;
    }
    let d = scale(e, 1.0 / len);
    if dot(d, prev) < 0.0 {
        scale(d, -1.0)
    } else {
        d
    }
}

/// `steps` midpoint-rule steps of length `h` along the field line through
/// `start`, heading initially along `heading`.
fn trace(
    charges: &[Vec3],
    exclusion: f64,
    falloff: i32,
    start: Vec3,
    heading: Vec3,
    h: f64,
    steps: usize,
) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(steps);
    let mut x = start;
    let mut prev = heading;
    for _ in 0..steps {
        let d1 = continue_along(elf_vector_falloff(charges, x, exclusion, falloff), prev);
        let mid = add(x, scale(d1, 0.5 * h));
        let d2 = continue_along(elf_vector_falloff(charges, mid, exclusion, falloff), d1);
        x = add(x, scale(d2, h));
        prev = d2;
        out.push(x);
    }
    out
}

fn build_column(mesh: &SurfaceMesh, params: &ColumnParams, vertex: usize) -> Vec<Vec3> {
    let v = mesh.vertices()[vertex];
    let n = mesh.normals()[vertex];
    let h = params.spacing;
    let base = params.base_index();
    let inward_count = base;
    let outward_count = params.length - base - 1;
    let (inward, outward) = match params.mode {
        ColumnMode::Normal => (
            (1..=inward_count)
                .map(|s| add(v, scale(n, -h * s as f64)))
                .collect(),
            (1..=outward_count)
                .map(|s| add(v, scale(n, h * s as f64)))
                .collect(),
        ),
        ColumnMode::Elf => {
            let charges = mesh.vertices();
            let ex = params.exclusion_radius;
            let minus_n = scale(n, -1.0);
            let mut inward = Vec::with_capacity(inward_count);
            if inward_count > 0 {
                let first = add(v, scale(minus_n, h));
                inward.push(first);
                inward.extend(trace(
                    charges,
                    ex,
                    params.inward_falloff,
                    first,
                    minus_n,
                    h,
                    inward_count - 1,
                ));
            }
            (inward, trace(charges, ex, 2, v, n, h, outward_count))
        }
    };
    let mut column: Vec<Vec3> = inward.into_iter().rev().collect();
    column.push(v);
    column.extend(outward);
    column
}

/// Traces one column per mesh vertex.
pub fn build_columns(mesh: &SurfaceMesh, params: &ColumnParams) -> Result<ColumnSet> {
    params.validate()?;
    let columns: Vec<Vec<Vec3>> = (0..mesh.vertex_count())
        .into_par_iter()
        .map(|k| build_column(mesh, params, k))
        .collect();
    for (k, col) in columns.iter().enumerate() {
        if col.iter().any(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::TracingFailure { vertex: k });
        }
    }
    Ok(ColumnSet {
        columns,
        spacing: params.spacing,
        length: params.length,
        base_index: params.base_index(),
        adjacency: mesh.edges(),
    })
}
