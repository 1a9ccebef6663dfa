//! Reader and writer for a strict subset of the MetaImage (`.mha`) format.
//!
//! Layout: eight ASCII `Key = Value` lines terminated by LF, in this order
//!
//! ```text
//! ObjectType = Image
//! NDims = 3
//! DimSize = nx ny nz
//! ElementSpacing = sx sy sz
//! Offset = ox oy oz
//! ElementByteOrderMSB = False
//! ElementType = MET_UCHAR | MET_SHORT | MET_FLOAT
//! ElementDataFile = LOCAL
//! ```
//!
//! followed immediately by the raw little-endian payload, x fastest.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::volume::{
    Geometry, Grid, LabelVolume, ProbabilityVolume, ScalarVolume, Volume, VolumeKind,
};

const KEYS: [&str; 8] = [
    "ObjectType",
    "NDims",
    "DimSize",
    "ElementSpacing",
    "Offset",
    "ElementByteOrderMSB",
    "ElementType",
    "ElementDataFile",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementType {
    UChar,
    Short,
    Float,
}

impl ElementType {
    pub fn as_str(self) -> &'static str {
        match self {
            ElementType::UChar => "MET_UCHAR",
            ElementType::Short => "MET_SHORT",
            ElementType::Float => "MET_FLOAT",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "MET_UCHAR" => Ok(ElementType::UChar),
            "MET_SHORT" => Ok(ElementType::Short),
            "MET_FLOAT" => Ok(ElementType::Float),
            other => Err(Error::UnsupportedElementType(other.to_string())),
        }
    }

    pub fn size(self) -> usize {
        match self {
            ElementType::UChar => 1,
            ElementType::Short => 2,
            ElementType::Float => 4,
        }
    }

    /// Element type used when writing a volume of the given kind.
    pub fn for_kind(kind: VolumeKind) -> Self {
        match kind {
            VolumeKind::Label => ElementType::UChar,
            VolumeKind::Scalar | VolumeKind::Probability => ElementType::Float,
        }
    }
}

/// A decoded file before it is interpreted as a particular volume kind.
#[derive(Clone, Debug, PartialEq)]
pub struct MetaImage {
    pub geometry: Geometry,
    pub element_type: ElementType,
    pub data: Vec<f32>,
}

impl MetaImage {
    pub fn into_volume<V: Volume>(self) -> Result<V> {
        V::from_grid(Grid::new(self.geometry, self.data)?)
    }
}

pub fn read_metaimage(path: impl AsRef<Path>) -> Result<MetaImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub fn read_volume<V: Volume>(path: impl AsRef<Path>) -> Result<V> {
    read_metaimage(path)?.into_volume()
}

pub fn read_scalar(path: impl AsRef<Path>) -> Result<ScalarVolume> {
    read_volume(path)
}

pub fn read_probability(path: impl AsRef<Path>) -> Result<ProbabilityVolume> {
    read_volume(path)
}

pub fn read_label(path: impl AsRef<Path>) -> Result<LabelVolume> {
    read_volume(path)
}

pub fn write_metaimage<V: Volume>(volume: &V, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(
        volume.geometry(),
        ElementType::for_kind(V::KIND),
        volume.data(),
    )?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn split_line(bytes: &[u8], pos: usize) -> Result<(&str, usize)> {
    let rest = &bytes[pos..];
    let end = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Header("unterminated header line".into()))?;
    let line = std::str::from_utf8(&rest[..end])
        .map_err(|_| Error::Header("header is not ASCII".into()))?;
    Ok((line, pos + end + 1))
}

fn parse_triple<T: std::str::FromStr>(key: &str, value: &str) -> Result<[T; 3]> {
    let parts: Vec<&str> = value.split(' ').collect();
    if parts.len() != 3 {
        return Err(Error::Header(format!(
            "{key} needs 3 values, got `{value}`"
        )));
    }
    let mut out = Vec::with_capacity(3);
    for p in parts {
        out.push(
            p.parse::<T>()
                .map_err(|_| Error::Header(format!("{key}: cannot parse `{p}`")))?,
        );
    }
    out.try_into()
        .map_err(|_| Error::Header(format!("{key}: bad value")))
}

pub fn decode(bytes: &[u8]) -> Result<MetaImage> {
    let mut values: [Option<String>; 8] = Default::default();
    let mut pos = 0;
    loop {
        let (line, next) = split_line(bytes, pos)?;
        pos = next;
        let (key, value) = line
            .split_once(" = ")
            .ok_or_else(|| Error::Header(format!("malformed line `{line}`")))?;
        let slot = KEYS
            .iter()
            .position(|k| *k == key)
            .ok_or_else(|| Error::Header(format!("unknown key `{key}`")))?;
        if values[slot].is_some() {
            return Err(Error::Header(format!("duplicate key `{key}`")));
        }
        values[slot] = Some(value.to_string());
        if key == "ElementDataFile" {
            break;
        }
    }
    let get = |i: usize| {
        values[i]
            .as_deref()
            .ok_or_else(|| Error::Header(format!("missing key `{}`", KEYS[i])))
    };
    if get(0)? != "Image" {
        return Err(Error::Header(format!(
            "ObjectType must be Image, got `{}`",
            get(0)?
        )));
    }
    if get(1)? != "3" {
        return Err(Error::Header(format!("NDims must be 3, got `{}`", get(1)?)));
    }
    let dims: [usize; 3] = parse_triple("DimSize", get(2)?)?;
    let spacing: [f64; 3] = parse_triple("ElementSpacing", get(3)?)?;
    let origin: [f64; 3] = parse_triple("Offset", get(4)?)?;
    if get(5)? != "False" {
        return Err(Error::Header(format!(
            "ElementByteOrderMSB must be False, got `{}`",
            get(5)?
        )));
    }
    let element_type = ElementType::parse(get(6)?)?;
    if get(7)? != "LOCAL" {
        return Err(Error::Header(format!(
            "ElementDataFile must be LOCAL, got `{}`",
            get(7)?
        )));
    }
    let geometry = Geometry::new(dims, spacing, origin)?;

    let payload = &bytes[pos..];
    let expected = geometry
        .len()
        .checked_mul(element_type.size())
        .ok_or_else(|| Error::Header("dims too large".into()))?;
    if payload.len() != expected {
        return Err(Error::PayloadLength {
            expected,
            actual: payload.len(),
        });
    }
    let data = match element_type {
        ElementType::UChar => payload.iter().map(|&b| b as f32).collect(),
        ElementType::Short => payload
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as f32)
            .collect(),
        ElementType::Float => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect(),
    };
    Ok(MetaImage {
        geometry,
        element_type,
        data,
    })
}

pub fn encode(geometry: &Geometry, element_type: ElementType, data: &[f32]) -> Result<Vec<u8>> {
    if data.len() != geometry.len() {
        return Err(Error::InvalidVolume(format!(
            "data length {} does not match dims {:?}",
            data.len(),
            geometry.dims
        )));
    }
    let [nx, ny, nz] = geometry.dims;
    let [sx, sy, sz] = geometry.spacing;
    let [ox, oy, oz] = geometry.origin;
    let mut header = String::new();
    let _ = write!(
        header,
        "ObjectType = Image\nNDims = 3\nDimSize = {nx} {ny} {nz}\n\
         ElementSpacing = {sx} {sy} {sz}\nOffset = {ox} {oy} {oz}\n\
         ElementByteOrderMSB = False\nElementType = {}\nElementDataFile = LOCAL\n",
        element_type.as_str()
    );
    let mut out = header.into_bytes();
    out.reserve(data.len() * element_type.size());
    match element_type {
        ElementType::UChar => {
            for (i, &v) in data.iter().enumerate() {
                if !(0.0..=255.0).contains(&v) || v.fract() != 0.0 {
                    return Err(Error::InvalidVolume(format!(
                        "value {v} at {i} not representable as MET_UCHAR"
                    )));
                }
                out.push(v as u8);
            }
        }
        ElementType::Short => {
            for (i, &v) in data.iter().enumerate() {
                if !(-32768.0..=32767.0).contains(&v) || v.fract() != 0.0 {
                    return Err(Error::InvalidVolume(format!(
                        "value {v} at {i} not representable as MET_SHORT"
                    )));
                }
                out.extend_from_slice(&(v as i16).to_le_bytes());
            }
        }
        ElementType::Float => {
            for &v in data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(element_type: &str, dims: &str) -> Vec<u8> {
        format!(
            "ObjectType = Image\nNDims = 3\nDimSize = {dims}\nElementSpacing = 1 1 1\n\
             Offset = 0 0 0\nElementByteOrderMSB = False\nElementType = {element_type}\n\
             ElementDataFile = LOCAL\n"
        )
        .into_bytes()
    }

    #[test]
    fn smallest_volume() {
        let mut bytes = header("MET_FLOAT", "1 1 1");
        bytes.extend_from_slice(&0.5f32.to_le_bytes());
        let img = decode(&bytes).unwrap();
        assert_eq!(img.geometry.dims, [1, 1, 1]);
        let p: ProbabilityVolume = img.into_volume().unwrap();
        assert_eq!(p.data(), &[0.5]);
    }

    #[test]
    fn double_is_unsupported() {
        let mut bytes = header("MET_DOUBLE", "1 1 1");
        bytes.extend_from_slice(&0.5f64.to_le_bytes());
        assert!(matches!(
            decode(&bytes),
            Err(Error::UnsupportedElementType(t)) if t == "MET_DOUBLE"
        ));
    }

    #[test]
    fn short_payload_rejected() {
        let mut bytes = header("MET_SHORT", "2 2 1");
        bytes.extend_from_slice(&[0u8; 6]);
        assert!(matches!(
            decode(&bytes),
            Err(Error::PayloadLength {
                expected: 8,
                actual: 6
            })
        ));
    }

    #[test]
    fn short_values_are_signed() {
        let mut bytes = header("MET_SHORT", "2 1 1");
        bytes.extend_from_slice(&(-1000i16).to_le_bytes());
        bytes.extend_from_slice(&(300i16).to_le_bytes());
        let img = decode(&bytes).unwrap();
        assert_eq!(img.data, vec![-1000.0, 300.0]);
    }

    #[test]
    fn duplicate_and_missing_keys() {
        let dup = b"ObjectType = Image\nObjectType = Image\n".to_vec();
        assert!(matches!(decode(&dup), Err(Error::Header(m)) if m.contains("duplicate")));
        let missing = b"ObjectType = Image\nNDims = 3\nElementDataFile = LOCAL\n".to_vec();
        assert!(matches!(decode(&missing), Err(Error::Header(m)) if m.contains("missing")));
    }

    #[test]
    fn probability_out_of_range_rejected_on_load() {
        let mut bytes = header("MET_FLOAT", "2 1 1");
        bytes.extend_from_slice(&0.25f32.to_le_bytes());
        bytes.extend_from_slice(&1.25f32.to_le_bytes());
        let img = decode(&bytes).unwrap();
        assert!(matches!(
            img.into_volume::<ProbabilityVolume>(),
            Err(Error::ProbabilityOutOfRange { index: 1, .. })
        ));
    }

    #[test]
    fn label_writes_uchar_zero_payload() {
        let g = Geometry::unit([2, 2, 2]).unwrap();
        let bytes = encode(&g, ElementType::for_kind(VolumeKind::Label), &[0.0; 8]).unwrap();
        let text = String::from_utf8_lossy(&bytes);
        assert!(text.contains("DimSize = 2 2 2\n"));
        assert!(text.contains("ElementType = MET_UCHAR\n"));
        assert!(bytes.ends_with(b"ElementDataFile = LOCAL\n\0\0\0\0\0\0\0\0"));
    }

    #[test]
    fn spacing_formatting() {
        let g = Geometry::new([1, 1, 1], [0.5, 0.5, 0.5], [0.0; 3]).unwrap();
        let bytes = encode(&g, ElementType::Float, &[0.0]).unwrap();
        assert!(String::from_utf8_lossy(&bytes).contains("\nElementSpacing = 0.5 0.5 0.5\n"));
    }
}
