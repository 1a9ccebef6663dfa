//! Electric-line-of-force direction field generated by unit charges.

use super::mesh::{dot, norm, scale, sub};
use crate::error::{Error, Result};
use crate::volume::Vec3;

/// Charges closer than this to the query point are ignored, which keeps the
/// field bounded next to a column's own base vertex.
pub const DEFAULT_EXCLUSION_MM: f64 = 0.75;
const ZERO_FIELD: f64 = 1e-12;

/// Unnormalised field `Σ (x − p) / |x − p|³` over charges farther than
/// `exclusion` from `query`.
pub fn elf_vector(charges: &[Vec3], query: Vec3, exclusion: f64) -> Vec3 {
    elf_vector_falloff(charges, query, exclusion, 2)
}

/// Generalised field whose magnitude decays as `|x − p|^-falloff`;
/// `falloff = 2` is the Coulomb field of [`elf_vector`].
pub fn elf_vector_falloff(charges: &[Vec3], query: Vec3, exclusion: f64, falloff: i32) -> Vec3 {
    let mut e = [0.0; 3];
    let r2_min = exclusion * exclusion;
    for &p in charges {
        let d = sub(query, p);
        let r2 = dot(d, d);
        if r2 > r2_min {
            let r = r2.sqrt();
            let inv = if falloff == 2 {
                1.0 / (r2 * r)
            } else {
                r.powi(-falloff - 1)
            };
            e[0] += d[0] * inv;
            e[1] += d[1] * inv;
            e[2] += d[2] * inv;
        }
    }
    e
}

/// Unit field direction at `query` with the default exclusion radius.
pub fn elf_field(charges: &[Vec3], query: Vec3) -> Result<Vec3> {
    elf_direction(charges, query, DEFAULT_EXCLUSION_MM)
}

pub fn elf_direction(charges: &[Vec3], query: Vec3, exclusion: f64) -> Result<Vec3> {
    let e = elf_vector(charges, query, exclusion);
    let len = norm(e);
    if !(len >= ZERO_FIELD) {
        return Err(Error::ZeroField);
    }
    Ok(scale(e, 1.0 / len))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        (0..3).all(|i| (a[i] - b[i]).abs() <= tol)
    }

    #[test]
    fn point_charge_is_radial() {
        let e = elf_field(&[[0.0; 3]], [2.0, 0.0, 0.0]).unwrap();
        assert!(close(e, [1.0, 0.0, 0.0], 1e-15));
    }

    #[test]
    fn symmetric_pair() {
        let e = elf_field(&[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]], [0.0, 2.0, 0.0]).unwrap();
        assert!(close(e, [0.0, 1.0, 0.0], 1e-15));
    }

    #[test]
    fn cube_corners_match_direct_sum() {
        let mut charges = Vec::new();
        for c in 0..8 {
            charges.push([(c & 1) as f64, ((c >> 1) & 1) as f64, ((c >> 2) & 1) as f64]);
        }
        for q in [[3.0, 0.2, -1.0], [-2.5, 4.0, 0.5], [0.5, 0.5, 7.0]] {
            let mut sum = [0.0f64; 3];
            for p in &charges {
                let d = [q[0] - p[0], q[1] - p[1], q[2] - p[2]];
                let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                for a in 0..3 {
                    sum[a] += d[a] / (r * r * r);
                }
            }
            let len = (sum[0] * sum[0] + sum[1] * sum[1] + sum[2] * sum[2]).sqrt();
            let expect = [sum[0] / len, sum[1] / len, sum[2] / len];
            assert!(close(elf_field(&charges, q).unwrap(), expect, 1e-9));
        }
    }

    #[test]
    fn steeper_falloff_matches_direct_sum() {
        let charges = [[0.0, 0.0, 0.0], [3.0, 1.0, -2.0]];
        let q = [1.0, 2.0, 0.5];
        let mut sum = [0.0; 3];
        for p in &charges {
            let d = sub(q, *p);
            let r = norm(d);
            for a in 0..3 {
                sum[a] += d[a] / r.powi(5);
            }
        }
        assert!(close(elf_vector_falloff(&charges, q, 0.0, 4), sum, 1e-15));
        assert!(close(
            elf_vector_falloff(&charges, q, 0.0, 2),
            elf_vector(&charges, q, 0.0),
            1e-15
        ));
    }

    #[test]
    fn excluded_and_cancelling_charges_give_zero_field() {
        assert!(matches!(
            elf_field(&[[0.0; 3]], [0.5, 0.0, 0.0]),
            Err(Error::ZeroField)
        ));
        assert!(matches!(
            elf_field(&[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]], [0.0; 3]),
            Err(Error::ZeroField)
        ));
    }
}
