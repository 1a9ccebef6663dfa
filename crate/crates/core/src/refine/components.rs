//! 26-connected component labeling.

use std::collections::VecDeque;

use crate::volume::{Geometry, LabelVolume, Volume};

#[derive(Clone, Debug)]
pub struct Components {
    /// Component id per voxel, `0` for background, ids start at 1.
    pub labels: Vec<u32>,
    /// Voxel count of component `id` at index `id - 1`.
    pub sizes: Vec<usize>,
    /// Lowest linear voxel index of each component.
    pub first_index: Vec<usize>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }
}

pub fn label_components(mask: &LabelVolume) -> Components {
    let g = *mask.geometry();
    let [nx, ny, nz] = g.dims;
    let mut labels = vec![0u32; g.len()];
    let mut sizes = Vec::new();
    let mut first_index = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..g.len() {
        if !mask.is_set(start) || labels[start] != 0 {
            continue;
        }
        let id = sizes.len() as u32 + 1;
        labels[start] = id;
        queue.push_back(start);
        let mut size = 0;
        while let Some(i) = queue.pop_front() {
            size += 1;
            let [x, y, z] = g.coords(i);
            for dz in -1i64..=1 {
                let zz = z as i64 + dz;
                if zz < 0 || zz >= nz as i64 {
                    continue;
                }
                for dy in -1i64..=1 {
                    let yy = y as i64 + dy;
                    if yy < 0 || yy >= ny as i64 {
                        continue;
                    }
                    for dx in -1i64..=1 {
                        let xx = x as i64 + dx;
                        if xx < 0 || xx >= nx as i64 {
                            continue;
                        }
                        let j = g.index(xx as usize, yy as usize, zz as usize);
                        if mask.is_set(j) && labels[j] == 0 {
                            labels[j] = id;
                            queue.push_back(j);
                        }
                    }
                }
            }
        }
        sizes.push(size);
        first_index.push(start);
    }
    Components {
        labels,
        sizes,
        first_index,
    }
}

pub fn count_components(mask: &LabelVolume) -> usize {
    label_components(mask).count()
}

fn centroid_distance_to_center(g: &Geometry, comps: &Components, id: u32) -> f64 {
    let mut sum = [0.0f64; 3];
    let mut n = 0usize;
    for (i, _) in comps.labels.iter().enumerate().filter(|(_, &l)| l == id) {
        let c = g.coords(i);
        for a in 0..3 {
            sum[a] += c[a] as f64;
        }
        n += 1;
    }
    let center = [
        (g.dims[0] as f64 - 1.0) / 2.0,
        (g.dims[1] as f64 - 1.0) / 2.0,
        (g.dims[2] as f64 - 1.0) / 2.0,
    ];
    (0..3)
        .map(|a| ((sum[a] / n as f64 - center[a]) * g.spacing[a]).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Keeps the component with the most voxels. Ties go to the component whose
/// centroid is closest to the volume center, then to the one containing the
/// lowest linear index.
pub fn largest_component(mask: &LabelVolume) -> LabelVolume {
    let comps = label_components(mask);
    let g = *mask.geometry();
    let Some(&max) = comps.sizes.iter().max() else {
        return mask.clone();
    };
    let mut candidates: Vec<u32> = (0..comps.count())
        .filter(|&c| comps.sizes[c] == max)
        .map(|c| c as u32 + 1)
        .collect();
    if candidates.len() > 1 {
        let mut keyed: Vec<(f64, usize, u32)> = candidates
            .iter()
            .map(|&id| {
                (
                    centroid_distance_to_center(&g, &comps, id),
                    comps.first_index[id as usize - 1],
                    id,
                )
            })
            .collect();
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        candidates = vec![keyed[0].2];
    }
    let keep = candidates[0];
    let out: Vec<bool> = comps.labels.iter().map(|&l| l == keep).collect();
    LabelVolume::from_mask(g, &out)
}
