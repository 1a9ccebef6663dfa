//! Volume data model shared by every stage of the pipeline.
//!
//! All three volume kinds carry 32-bit float voxels in x-fastest order on a
//! common [`Geometry`]. Labels are stored as `0.0`/`1.0` and probabilities
//! are validated to lie in `[0, 1]` at construction time; nothing is
//! silently clamped.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

/// Grid layout of a volume: voxel counts, voxel size (mm) and the world
/// position (mm) of the center of voxel `(0, 0, 0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub dims: [usize; 3],
    pub spacing: Vec3,
    pub origin: Vec3,
}

impl Geometry {
    pub fn new(dims: [usize; 3], spacing: Vec3, origin: Vec3) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidVolume(format!(
                "dims must be >= 1, got {dims:?}"
            )));
        }
        if spacing.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidVolume(format!(
                "spacing must be positive, got {spacing:?}"
            )));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidVolume(format!(
                "origin must be finite, got {origin:?}"
            )));
        }
        Ok(Self {
            dims,
            spacing,
            origin,
        })
    }

    /// Isotropic grid with unit spacing anchored at the world origin.
    pub fn unit(dims: [usize; 3]) -> Result<Self> {
        Self::new(dims, [1.0; 3], [0.0; 3])
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let x = index % self.dims[0];
        let yz = index / self.dims[0];
        [x, yz % self.dims[1], yz / self.dims[1]]
    }

    pub fn contains(&self, voxel: [i64; 3]) -> bool {
        (0..3).all(|a| voxel[a] >= 0 && (voxel[a] as usize) < self.dims[a])
    }

    /// World position (mm) of a voxel center; accepts fractional indices.
    #[inline]
    pub fn to_world(&self, index: Vec3) -> Vec3 {
        [
            self.origin[0] + index[0] * self.spacing[0],
            self.origin[1] + index[1] * self.spacing[1],
            self.origin[2] + index[2] * self.spacing[2],
        ]
    }

    /// Continuous voxel index of a world position.
    #[inline]
    pub fn to_index(&self, world: Vec3) -> Vec3 {
        [
            (world[0] - self.origin[0]) / self.spacing[0],
            (world[1] - self.origin[1]) / self.spacing[1],
            (world[2] - self.origin[2]) / self.spacing[2],
        ]
    }

    pub fn voxel_center(&self, index: usize) -> Vec3 {
        let c = self.coords(index);
        self.to_world([c[0] as f64, c[1] as f64, c[2] as f64])
    }

    /// World position of the geometric center of the grid.
    pub fn center(&self) -> Vec3 {
        self.to_world([
            (self.dims[0] as f64 - 1.0) / 2.0,
            (self.dims[1] as f64 - 1.0) / 2.0,
            (self.dims[2] as f64 - 1.0) / 2.0,
        ])
    }

    pub fn voxel_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Geometries are compatible when dims match exactly and spacing/origin
    /// agree to within a small relative tolerance.
    pub fn matches(&self, other: &Geometry) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-6 * (1.0 + a.abs().max(b.abs()));
        self.dims == other.dims
            && (0..3).all(|a| close(self.spacing[a], other.spacing[a]))
            && (0..3).all(|a| close(self.origin[a], other.origin[a]))
    }

    pub fn ensure_matches(&self, other: &Geometry, what: &str) -> Result<()> {
        if self.matches(other) {
            Ok(())
        } else {
            Err(Error::GeometryMismatch(format!(
                "{what}: {:?} vs {:?}",
                self.dims, other.dims
            )))
        }
    }
}

/// Raw voxel storage behind every volume kind.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    geometry: Geometry,
    data: Vec<f32>,
}

impl Grid {
    pub fn new(geometry: Geometry, data: Vec<f32>) -> Result<Self> {
        if data.len() != geometry.len() {
            return Err(Error::InvalidVolume(format!(
                "data length {} does not match dims {:?}",
                data.len(),
                geometry.dims
            )));
        }
        Ok(Self { geometry, data })
    }

    pub fn filled(geometry: Geometry, value: f32) -> Self {
        Self {
            data: vec![value; geometry.len()],
            geometry,
        }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, z: usize) -> f32 {
        self.data[self.geometry.index(x, y, z)]
    }

    /// Trilinear interpolation at a world position. Returns `None` when the
    /// position lies outside the hull of voxel centers.
    pub fn sample(&self, world: Vec3) -> Option<f64> {
        let u = self.geometry.to_index(world);
        let dims = self.geometry.dims;
        for a in 0..3 {
            if !(u[a] >= 0.0 && u[a] <= (dims[a] - 1) as f64) {
                return None;
            }
        }
        Some(self.trilinear(u))
    }

    /// Trilinear interpolation with indices clamped into the grid, i.e. edge
    /// replication beyond the border.
    pub fn sample_clamped(&self, world: Vec3) -> f64 {
        let mut u = self.geometry.to_index(world);
        for (a, v) in u.iter_mut().enumerate() {
            let hi = (self.geometry.dims[a] - 1) as f64;
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, hi) };
        }
        self.trilinear(u)
    }

    fn trilinear(&self, u: Vec3) -> f64 {
        let dims = self.geometry.dims;
        let mut lo = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..3 {
            let f = u[a].floor();
            let mut i = f as usize;
            let mut t = u[a] - f;
            if i >= dims[a] - 1 {
                // On the upper face (or a single-voxel axis).
                i = dims[a] - 1;
                t = 0.0;
            }
            lo[a] = i;
            frac[a] = t;
        }
        let hi = [
            (lo[0] + 1).min(dims[0] - 1),
            (lo[1] + 1).min(dims[1] - 1),
            (lo[2] + 1).min(dims[2] - 1),
        ];
        let v = |x: usize, y: usize, z: usize| self.at(x, y, z) as f64;
        // `a + t (b − a)` reproduces `a` exactly when both ends agree, so a
        // constant field samples to exactly its value.
        let lerp = |a: f64, b: f64, t: f64| a + t * (b - a);
        let c00 = lerp(v(lo[0], lo[1], lo[2]), v(hi[0], lo[1], lo[2]), frac[0]);
        let c10 = lerp(v(lo[0], hi[1], lo[2]), v(hi[0], hi[1], lo[2]), frac[0]);
        let c01 = lerp(v(lo[0], lo[1], hi[2]), v(hi[0], lo[1], hi[2]), frac[0]);
        let c11 = lerp(v(lo[0], hi[1], hi[2]), v(hi[0], hi[1], hi[2]), frac[0]);
        let c0 = lerp(c00, c10, frac[1]);
        let c1 = lerp(c01, c11, frac[1]);
        lerp(c0, c1, frac[2])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VolumeKind {
    Scalar,
    Probability,
    Label,
}

/// Common interface of the three volume kinds.
pub trait Volume: Sized {
    const KIND: VolumeKind;

    fn grid(&self) -> &Grid;

    /// Builds the volume after checking the kind-specific value invariant.
    fn from_grid(grid: Grid) -> Result<Self>;

    fn geometry(&self) -> &Geometry {
        self.grid().geometry()
    }

    fn data(&self) -> &[f32] {
        self.grid().data()
    }

    fn at(&self, x: usize, y: usize, z: usize) -> f32 {
        self.grid().at(x, y, z)
    }

    fn into_grid(self) -> Grid;
}

/// Intensity volume (CT or phantom).
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarVolume(Grid);

/// Per-voxel foreground likelihood in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityVolume(Grid);

/// Binary mask stored as `0.0` / `1.0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelVolume(Grid);

impl Volume for ScalarVolume {
    const KIND: VolumeKind = VolumeKind::Scalar;

    fn grid(&self) -> &Grid {
        &self.0
    }

    fn from_grid(grid: Grid) -> Result<Self> {
        Ok(Self(grid))
    }

    fn into_grid(self) -> Grid {
        self.0
    }
}

impl Volume for ProbabilityVolume {
    const KIND: VolumeKind = VolumeKind::Probability;

    fn grid(&self) -> &Grid {
        &self.0
    }

    fn from_grid(grid: Grid) -> Result<Self> {
        if let Some((index, &value)) = grid
            .data()
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= 0.0 && **v <= 1.0))
        {
            return Err(Error::ProbabilityOutOfRange { index, value });
        }
        Ok(Self(grid))
    }

    fn into_grid(self) -> Grid {
        self.0
    }
}

impl Volume for LabelVolume {
    const KIND: VolumeKind = VolumeKind::Label;

    fn grid(&self) -> &Grid {
        &self.0
    }

    fn from_grid(grid: Grid) -> Result<Self> {
        if let Some((index, &value)) = grid
            .data()
            .iter()
            .enumerate()
            .find(|(_, v)| **v != 0.0 && **v != 1.0)
        {
            return Err(Error::NonBinaryLabel { index, value });
        }
        Ok(Self(grid))
    }

    fn into_grid(self) -> Grid {
        self.0
    }
}

impl ScalarVolume {
    pub fn new(geometry: Geometry, data: Vec<f32>) -> Result<Self> {
        Ok(Self(Grid::new(geometry, data)?))
    }
}

impl ProbabilityVolume {
    pub fn new(geometry: Geometry, data: Vec<f32>) -> Result<Self> {
        Self::from_grid(Grid::new(geometry, data)?)
    }

    /// Binary segmentation `p >= threshold`.
    pub fn threshold(&self, threshold: f64) -> LabelVolume {
        let mask: Vec<bool> = self.data().iter().map(|&p| p as f64 >= threshold).collect();
        LabelVolume::from_mask(*self.geometry(), &mask)
    }
}

impl LabelVolume {
    pub fn new(geometry: Geometry, data: Vec<f32>) -> Result<Self> {
        Self::from_grid(Grid::new(geometry, data)?)
    }

    pub fn empty(geometry: Geometry) -> Self {
        Self(Grid::filled(geometry, 0.0))
    }

    /// # Panics
    /// If `mask.len()` differs from the geometry's voxel count.
    pub fn from_mask(geometry: Geometry, mask: &[bool]) -> Self {
        assert_eq!(
            mask.len(),
            geometry.len(),
            "mask length must match geometry"
        );
        let data = mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        Self(Grid { geometry, data })
    }

    pub fn mask(&self) -> Vec<bool> {
        self.data().iter().map(|&v| v != 0.0).collect()
    }

    #[inline]
    pub fn is_set(&self, index: usize) -> bool {
        self.0.data[index] != 0.0
    }

    pub fn count(&self) -> usize {
        self.data().iter().filter(|&&v| v != 0.0).count()
    }
}

/// Click-point region of interest: a cube of `size` voxels whose voxel
/// `size / 2` along every axis is the clicked center.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoiSpec {
    pub center: [i64; 3],
    pub size: usize,
}

impl RoiSpec {
    pub const DEFAULT_SIZE: usize = 32;

    pub fn new(center: [i64; 3], size: usize) -> Result<Self> {
        if size < 4 || !size.is_multiple_of(2) {
            return Err(Error::InvalidRoi(format!(
                "size must be even and >= 4, got {size}"
            )));
        }
        Ok(Self { center, size })
    }

    pub fn validate_for(&self, geometry: &Geometry) -> Result<()> {
        if self.size < 4 || !self.size.is_multiple_of(2) {
            return Err(Error::InvalidRoi(format!(
                "size must be even and >= 4, got {}",
                self.size
            )));
        }
        if !geometry.contains(self.center) {
            return Err(Error::InvalidRoi(format!(
                "center {:?} outside volume of dims {:?}",
                self.center, geometry.dims
            )));
        }
        Ok(())
    }
}

/// Extracts the ROI cube. Source indices beyond the border are clamped to
/// the nearest voxel; the output origin keeps world coordinates aligned with
/// the source.
pub fn crop_roi<V: Volume>(volume: &V, roi: &RoiSpec) -> Result<V> {
    let src = volume.geometry();
    roi.validate_for(src)?;
    let n = roi.size;
    let half = (n / 2) as i64;
    let start = [
        roi.center[0] - half,
        roi.center[1] - half,
        roi.center[2] - half,
    ];
    let clamp = |v: i64, axis: usize| v.clamp(0, src.dims[axis] as i64 - 1) as usize;
    let mut data = Vec::with_capacity(n * n * n);
    for k in 0..n as i64 {
        let z = clamp(start[2] + k, 2);
        for j in 0..n as i64 {
            let y = clamp(start[1] + j, 1);
            for i in 0..n as i64 {
                let x = clamp(start[0] + i, 0);
                data.push(volume.at(x, y, z));
            }
        }
    }
    let origin = src.to_world([start[0] as f64, start[1] as f64, start[2] as f64]);
    let geometry = Geometry::new([n; 3], src.spacing, origin)?;
    V::from_grid(Grid::new(geometry, data)?)
}
