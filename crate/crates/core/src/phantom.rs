//! Synthetic phantoms: analytic shapes with Gaussian intensity noise,
//! simulated probability maps and distractor blobs.
//!
//! Randomness comes from [`CounterRng`], a keyed SplitMix64 hash of the voxel
//! index, so every output is a pure function of the spec and its seed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{Geometry, LabelVolume, ProbabilityVolume, ScalarVolume, Vec3, Volume};

const STREAM_INTENSITY: u64 = 0x1d4f_7a2b_0000_0001;
const STREAM_PROBABILITY: u64 = 0x1d4f_7a2b_0000_0002;
const STREAM_DISTRACTOR: u64 = 0x1d4f_7a2b_0000_0003;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stateless generator: draw `i` depends only on `(seed, stream, i)`.
#[derive(Clone, Copy, Debug)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self {
            key: splitmix64(seed ^ splitmix64(stream)),
        }
    }

    #[inline]
    pub fn bits(&self, counter: u64) -> u64 {
        splitmix64(self.key ^ splitmix64(counter))
    }

    /// Uniform in the open interval (0, 1).
    #[inline]
    pub fn uniform(&self, counter: u64) -> f64 {
        ((self.bits(counter) >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller on draws `2i` and `2i + 1`.
    #[inline]
    pub fn normal(&self, index: u64) -> f64 {
        let u1 = self.uniform(2 * index);
        let u2 = self.uniform(2 * index + 1);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Sphere { center: Vec3, radius: f64 },
    Ellipsoid { center: Vec3, radii: Vec3 },
}

impl Shape {
    fn center_radii(&self) -> (Vec3, Vec3) {
        match *self {
            Shape::Sphere { center, radius } => (center, [radius; 3]),
            Shape::Ellipsoid { center, radii } => (center, radii),
        }
    }

    pub fn contains(&self, p: Vec3) -> bool {
        let (c, r) = self.center_radii();
        (0..3).map(|a| ((p[a] - c[a]) / r[a]).powi(2)).sum::<f64>() <= 1.0
    }

    pub fn analytic_volume(&self) -> f64 {
        let (_, r) = self.center_radii();
        4.0 / 3.0 * std::f64::consts::PI * r[0] * r[1] * r[2]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub dims: [usize; 3],
    pub spacing: Vec3,
    #[serde(default)]
    pub origin: Vec3,
    pub shape: Shape,
    pub fg_mean: f64,
    pub bg_mean: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl PhantomSpec {
    /// Sphere of `radius_mm` centered in an isotropic 1 mm cube of `size`
    /// voxels.
    pub fn centered_sphere(size: usize, radius_mm: f64, seed: u64) -> Self {
        let c = (size / 2) as f64;
        Self {
            dims: [size; 3],
            spacing: [1.0; 3],
            origin: [0.0; 3],
            shape: Shape::Sphere {
                center: [c; 3],
                radius: radius_mm,
            },
            fg_mean: 200.0,
            bg_mean: 100.0,
            noise_sigma: 10.0,
            seed,
        }
    }

    pub fn geometry(&self) -> Result<Geometry> {
        Geometry::new(self.dims, self.spacing, self.origin)
            .map_err(|e| Error::InvalidPhantom(e.to_string()))
    }

    pub fn validate(&self) -> Result<Geometry> {
        let g = self.geometry()?;
        let (c, r) = self.shape.center_radii();
        if r.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidPhantom(format!(
                "radii must be positive, got {r:?}"
            )));
        }
        let lo = g.to_world([0.0; 3]);
        let hi = g.to_world([
            (g.dims[0] - 1) as f64,
            (g.dims[1] - 1) as f64,
            (g.dims[2] - 1) as f64,
        ]);
        for a in 0..3 {
            if c[a] - r[a] < lo[a] || c[a] + r[a] > hi[a] {
                return Err(Error::InvalidPhantom(format!(
                    "shape exceeds the volume along axis {a}"
                )));
            }
        }
        if !(self.fg_mean > self.bg_mean) {
            return Err(Error::InvalidPhantom("fg_mean must exceed bg_mean".into()));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidPhantom("noise_sigma must be >= 0".into()));
        }
        Ok(g)
    }
}

/// Intensity volume and ground-truth label of an analytic shape.
pub fn make_phantom(spec: &PhantomSpec) -> Result<(ScalarVolume, LabelVolume)> {
    let g = spec.validate()?;
    let rng = CounterRng::new(spec.seed, STREAM_INTENSITY);
    let mask: Vec<bool> = (0..g.len())
        .map(|i| spec.shape.contains(g.voxel_center(i)))
        .collect();
    let data = mask
        .iter()
        .enumerate()
        .map(|(i, &inside)| {
            let mean = if inside { spec.fg_mean } else { spec.bg_mean };
            let noise = if spec.noise_sigma > 0.0 {
                spec.noise_sigma * rng.normal(i as u64)
            } else {
                0.0
            };
            (mean + noise) as f32
        })
        .collect();
    Ok((
        ScalarVolume::new(g, data)?,
        LabelVolume::from_mask(g, &mask),
    ))
}

fn six_neighbors(g: &Geometry, index: usize) -> impl Iterator<Item = usize> + '_ {
    let c = g.coords(index);
    const OFFS: [[i64; 3]; 6] = [
        [-1, 0, 0],
        [1, 0, 0],
        [0, -1, 0],
        [0, 1, 0],
        [0, 0, -1],
        [0, 0, 1],
    ];
    OFFS.iter().filter_map(move |o| {
        let n = [c[0] as i64 + o[0], c[1] as i64 + o[1], c[2] as i64 + o[2]];
        g.contains(n)
            .then(|| g.index(n[0] as usize, n[1] as usize, n[2] as usize))
    })
}

/// Signed distance (mm) to the label boundary, negative inside. The
/// interface sits half a voxel (smallest spacing) beyond the outermost
/// foreground center, so `d <= 0` exactly on the foreground.
pub fn signed_distance(label: &LabelVolume) -> Result<Vec<f64>> {
    let g = *label.geometry();
    let mask = label.mask();
    if !mask.iter().any(|&b| b) {
        return Err(Error::EmptyMask);
    }
    let mut inner = Vec::new();
    let mut outer = Vec::new();
    for i in 0..g.len() {
        if six_neighbors(&g, i).any(|n| mask[n] != mask[i]) {
            let p = g.voxel_center(i);
            if mask[i] {
                inner.push(p);
            } else {
                outer.push(p);
            }
        }
    }
    let half = 0.5 * g.spacing.iter().cloned().fold(f64::INFINITY, f64::min);
    let nearest = |p: Vec3, set: &[Vec3]| {
        set.iter()
            .map(|q| {
                let d = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
                d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
            })
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    };
    Ok((0..g.len())
        .into_par_iter()
        .map(|i| {
            let p = g.voxel_center(i);
            if mask[i] {
                if outer.is_empty() {
                    // Label fills the whole grid; no interface inside it.
                    -f64::INFINITY
                } else {
                    -(nearest(p, &outer) - half)
                }
            } else {
                nearest(p, &inner) - half
            }
        })
        .collect())
}

/// Stand-in for a network probability map: a logistic profile of the signed
/// distance plus clamped Gaussian noise.
pub fn simulate_prob(
    label: &LabelVolume,
    tau_mm: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<ProbabilityVolume> {
    if !(tau_mm > 0.0) {
        return Err(Error::InvalidPhantom(format!(
            "tau must be positive, got {tau_mm}"
        )));
    }
    if !(noise_sigma >= 0.0) {
        return Err(Error::InvalidPhantom("noise_sigma must be >= 0".into()));
    }
    let d = signed_distance(label)?;
    let rng = CounterRng::new(seed, STREAM_PROBABILITY);
    let data = d
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let base = 1.0 / (1.0 + (d / tau_mm).exp());
            let noise = if noise_sigma > 0.0 {
                noise_sigma * rng.normal(i as u64)
            } else {
                0.0
            };
            (base + noise).clamp(0.0, 1.0) as f32
        })
        .collect();
    ProbabilityVolume::new(*label.geometry(), data)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistractorSpec {
    /// Offset (mm) from the main label's centroid to the distractor center.
    pub offset_mm: Vec3,
    pub radius_mm: f64,
    pub intensity_mean: f64,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

pub fn label_centroid(label: &LabelVolume) -> Option<Vec3> {
    let g = label.geometry();
    let mut sum = [0.0; 3];
    let mut n = 0usize;
    for i in (0..g.len()).filter(|&i| label.is_set(i)) {
        let p = g.voxel_center(i);
        for a in 0..3 {
            sum[a] += p[a];
        }
        n += 1;
    }
    (n > 0).then(|| [sum[0] / n as f64, sum[1] / n as f64, sum[2] / n as f64])
}

/// Injects a spherical blob of `spec.intensity_mean` into `volume`, disjoint
/// from `label`. Returns the modified intensity and the distractor's mask.
pub fn add_distractor(
    volume: &ScalarVolume,
    label: &LabelVolume,
    spec: &DistractorSpec,
) -> Result<(ScalarVolume, LabelVolume)> {
    let g = *volume.geometry();
    g.ensure_matches(label.geometry(), "distractor label")?;
    if spec.radius_mm == 0.0 {
        return Ok((volume.clone(), LabelVolume::empty(g)));
    }
    if !(spec.radius_mm > 0.0) {
        return Err(Error::InvalidPhantom(
            "distractor radius must be >= 0".into(),
        ));
    }
    let centroid = label_centroid(label).ok_or(Error::EmptyMask)?;
    let center = [
        centroid[0] + spec.offset_mm[0],
        centroid[1] + spec.offset_mm[1],
        centroid[2] + spec.offset_mm[2],
    ];
    let shape = Shape::Sphere {
        center,
        radius: spec.radius_mm,
    };
    let blob: Vec<bool> = (0..g.len())
        .map(|i| shape.contains(g.voxel_center(i)))
        .collect();

    let main: Vec<Vec3> = (0..g.len())
        .filter(|&i| label.is_set(i))
        .map(|i| g.voxel_center(i))
        .collect();
    let mut gap = f64::INFINITY;
    for i in (0..g.len()).filter(|&i| blob[i]) {
        let p = g.voxel_center(i);
        for q in &main {
            let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
            gap = gap.min(d);
        }
    }
    if gap < 2.0 {
        return Err(Error::DistractorOverlap { gap_mm: gap });
    }

    let rng = CounterRng::new(spec.seed, STREAM_DISTRACTOR);
    let data = volume
        .data()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if blob[i] {
                let noise = if spec.noise_sigma > 0.0 {
                    spec.noise_sigma * rng.normal(i as u64)
                } else {
                    0.0
                };
                (spec.intensity_mean + noise) as f32
            } else {
                v
            }
        })
        .collect();
    Ok((
        ScalarVolume::new(g, data)?,
        LabelVolume::from_mask(g, &blob),
    ))
}

fn default_tau() -> f64 {
    1.0
}

fn default_prob_noise() -> f64 {
    0.05
}

/// Everything needed to produce a phantom triple (intensity, ground-truth
/// label, simulated probability map). The probability map is simulated on
/// the union of the main shape and the distractor, mimicking a detector
/// that also fires on neighbouring lesions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhantomRecipe {
    #[serde(flatten)]
    pub phantom: PhantomSpec,
    #[serde(default = "default_tau")]
    pub tau_mm: f64,
    #[serde(default = "default_prob_noise")]
    pub prob_noise: f64,
    #[serde(default)]
    pub prob_seed: Option<u64>,
    #[serde(default)]
    pub distractor: Option<DistractorSpec>,
}

impl PhantomRecipe {
    pub fn new(phantom: PhantomSpec) -> Self {
        Self {
            phantom,
            tau_mm: default_tau(),
            prob_noise: default_prob_noise(),
            prob_seed: None,
            distractor: None,
        }
    }

    pub fn prob_seed(&self) -> u64 {
        self.prob_seed.unwrap_or(self.phantom.seed.wrapping_add(1))
    }
}

#[derive(Clone, Debug)]
pub struct PhantomOutput {
    pub intensity: ScalarVolume,
    pub label: LabelVolume,
    pub probability: ProbabilityVolume,
    pub distractor: Option<LabelVolume>,
}

pub fn generate(recipe: &PhantomRecipe) -> Result<PhantomOutput> {
    let (mut intensity, label) = make_phantom(&recipe.phantom)?;
    let mut detected = label.clone();
    let mut distractor = None;
    if let Some(spec) = &recipe.distractor {
        let (with_blob, blob) = add_distractor(&intensity, &label, spec)?;
        intensity = with_blob;
        let union: Vec<bool> = label
            .mask()
            .iter()
            .zip(blob.mask())
            .map(|(&a, b)| a || b)
            .collect();
        detected = LabelVolume::from_mask(*label.geometry(), &union);
        distractor = Some(blob);
    }
    let probability = simulate_prob(
        &detected,
        recipe.tau_mm,
        recipe.prob_noise,
        recipe.prob_seed(),
    )?;
    Ok(PhantomOutput {
        intensity,
        label,
        probability,
        distractor,
    })
}
