//! Binary 3D morphology with the 6-neighbour cross structuring element.
//!
//! The volume is treated as embedded in an infinite background: nothing
//! outside the grid is foreground before an operation starts. Opening can
//! evaluate that rule in place; closing pads the grid by `iterations`
//! voxels so the dilation may grow past the border before eroding back.

use crate::volume::{LabelVolume, Volume};

#[derive(Clone, Copy, Debug)]
struct Dims {
    nx: usize,
    ny: usize,
    nz: usize,
}

impl Dims {
    fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }
}

fn erode_once(src: &[bool], d: Dims) -> Vec<bool> {
    let (sx, sy) = (1, d.nx);
    let sz = d.nx * d.ny;
    let mut out = vec![false; src.len()];
    for z in 1..d.nz.saturating_sub(1) {
        for y in 1..d.ny.saturating_sub(1) {
            let row = y * sy + z * sz;
            for x in 1..d.nx.saturating_sub(1) {
                let i = row + x;
                out[i] = src[i]
                    && src[i - sx]
                    && src[i + sx]
                    && src[i - sy]
                    && src[i + sy]
                    && src[i - sz]
                    && src[i + sz];
            }
        }
    }
    out
}

fn dilate_once(src: &[bool], d: Dims) -> Vec<bool> {
    let (sx, sy) = (1, d.nx);
    let sz = d.nx * d.ny;
    let mut out = src.to_vec();
    for z in 0..d.nz {
        for y in 0..d.ny {
            for x in 0..d.nx {
                let i = x + y * sy + z * sz;
                if !src[i] {
                    continue;
                }
                if x > 0 {
                    out[i - sx] = true;
                }
                if x + 1 < d.nx {
                    out[i + sx] = true;
                }
                if y > 0 {
                    out[i - sy] = true;
                }
                if y + 1 < d.ny {
                    out[i + sy] = true;
                }
                if z > 0 {
                    out[i - sz] = true;
                }
                if z + 1 < d.nz {
                    out[i + sz] = true;
                }
            }
        }
    }
    out
}

fn dims_of(mask: &LabelVolume) -> Dims {
    let [nx, ny, nz] = mask.geometry().dims;
    Dims { nx, ny, nz }
}

pub fn erode(mask: &LabelVolume, iterations: usize) -> LabelVolume {
    let d = dims_of(mask);
    let mut m = mask.mask();
    for _ in 0..iterations {
        m = erode_once(&m, d);
    }
    LabelVolume::from_mask(*mask.geometry(), &m)
}

pub fn dilate(mask: &LabelVolume, iterations: usize) -> LabelVolume {
    let d = dims_of(mask);
    let mut m = mask.mask();
    for _ in 0..iterations {
        m = dilate_once(&m, d);
    }
    LabelVolume::from_mask(*mask.geometry(), &m)
}

/// `iterations` erosions followed by `iterations` dilations.
pub fn open3d(mask: &LabelVolume, iterations: usize) -> LabelVolume {
    let d = dims_of(mask);
    let mut m = mask.mask();
    for _ in 0..iterations {
        m = erode_once(&m, d);
    }
    for _ in 0..iterations {
        m = dilate_once(&m, d);
    }
    LabelVolume::from_mask(*mask.geometry(), &m)
}

/// `iterations` dilations followed by `iterations` erosions.
pub fn close3d(mask: &LabelVolume, iterations: usize) -> LabelVolume {
    if iterations == 0 {
        return mask.clone();
    }
    let d = dims_of(mask);
    let p = iterations;
    let pd = Dims {
        nx: d.nx + 2 * p,
        ny: d.ny + 2 * p,
        nz: d.nz + 2 * p,
    };
    let src = mask.mask();
    let mut m = vec![false; pd.len()];
    for z in 0..d.nz {
        for y in 0..d.ny {
            let from = d.nx * (y + d.ny * z);
            let to = p + pd.nx * ((y + p) + pd.ny * (z + p));
            m[to..to + d.nx].copy_from_slice(&src[from..from + d.nx]);
        }
    }
    for _ in 0..iterations {
        m = dilate_once(&m, pd);
    }
    for _ in 0..iterations {
        m = erode_once(&m, pd);
    }
    let mut out = vec![false; d.len()];
    for z in 0..d.nz {
        for y in 0..d.ny {
            let to = d.nx * (y + d.ny * z);
            let from = p + pd.nx * ((y + p) + pd.ny * (z + p));
            out[to..to + d.nx].copy_from_slice(&m[from..from + d.nx]);
        }
    }
    LabelVolume::from_mask(*mask.geometry(), &out)
}
