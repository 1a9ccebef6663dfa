//! ASCII STL export for inspecting meshes in external viewers.

use std::fmt::Write as _;
use std::path::Path;

use super::mesh::SurfaceMesh;
use crate::error::{Error, Result};

/// C `printf("%.*g")` formatting.
pub fn format_g(x: f64, precision: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let p = precision.max(1);
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let strip = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if exp < -4 || exp >= p as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", strip(mantissa), sign, exp.abs())
    } else {
        strip(&format!("{:.*}", (p as i32 - 1 - exp) as usize, x))
    }
}

pub fn stl_string(mesh: &SurfaceMesh, name: &str) -> String {
    let g = |v: f64| format_g(v, 9);
    let mut out = String::new();
    writeln!(out, "solid {name}").unwrap();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let n = mesh.triangle_normal(t);
        writeln!(out, "  facet normal {} {} {}", g(n[0]), g(n[1]), g(n[2])).unwrap();
        writeln!(out, "    outer loop").unwrap();
        for &i in tri {
            let v = mesh.vertices()[i];
            writeln!(out, "      vertex {} {} {}", g(v[0]), g(v[1]), g(v[2])).unwrap();
        }
        writeln!(out, "    endloop").unwrap();
        writeln!(out, "  endfacet").unwrap();
    }
    writeln!(out, "endsolid {name}").unwrap();
    out
}

pub fn write_stl(mesh: &SurfaceMesh, path: &Path) -> Result<()> {
    std::fs::write(path, stl_string(mesh, "surface")).map_err(|e| Error::io(path, e))
}
