//! Single-file NIfTI-1 (`.nii` / `.nii.gz`) reader and writer.
//!
//! Only what the generator emits is supported: little-endian, 3D, `uint8`
//! masks and `float32` / `float64` intensities, identity orientation scaled
//! by the voxel spacing.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use byteorder::{ByteOrder, LittleEndian};
use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::error::{Error, Result};
use crate::volume::{Dims, MaskVolume, Volume, Voxel};

pub const HEADER_SIZE: usize = 348;
pub const VOX_OFFSET: usize = 352;
const MAGIC: &[u8; 4] = b"n+1\0";
const MAX_DIM: usize = i16::MAX as usize;

mod offsets {
    pub const SIZEOF_HDR: usize = 0;
    pub const REGULAR: usize = 38;
    pub const DIM: usize = 40;
    pub const DATATYPE: usize = 70;
    pub const BITPIX: usize = 72;
    pub const PIXDIM: usize = 76;
    pub const VOX_OFFSET: usize = 108;
    pub const SCL_SLOPE: usize = 112;
    pub const SCL_INTER: usize = 116;
    pub const XYZT_UNITS: usize = 123;
    pub const DESCRIP: usize = 148;
    pub const QFORM_CODE: usize = 252;
    pub const SFORM_CODE: usize = 254;
    pub const SROW_X: usize = 280;
    pub const MAGIC: usize = 344;
}

/// A volume of whichever element type the file header declares.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyVolume {
    Mask(MaskVolume),
    F32(Volume<f32>),
    F64(Volume<f64>),
}

impl AnyVolume {
    pub fn dims(&self) -> Dims {
        match self {
            AnyVolume::Mask(v) => v.dims(),
            AnyVolume::F32(v) => v.dims(),
            AnyVolume::F64(v) => v.dims(),
        }
    }

    /// Converts to `f32`, mapping mask values 0/1 to 0.0/1.0.
    pub fn to_f32(&self) -> Volume<f32> {
        let (dims, spacing, data): (Dims, [f64; 3], Vec<f32>) = match self {
            AnyVolume::Mask(v) => (
                v.dims(),
                v.spacing(),
                v.data().iter().map(|&x| x as f32).collect(),
            ),
            AnyVolume::F32(v) => return v.clone(),
            AnyVolume::F64(v) => (
                v.dims(),
                v.spacing(),
                v.data().iter().map(|&x| x as f32).collect(),
            ),
        };
        Volume::from_vec(dims, data)
            .expect("same length")
            .with_spacing(spacing)
    }
}

fn header_bytes<V: Voxel>(vol: &Volume<V>) -> Result<Vec<u8>> {
    let dims = vol.dims();
    for &d in &dims.0 {
        if d > MAX_DIM {
            return Err(Error::DimsOverflow { dim: d });
        }
        if d == 0 {
            return Err(Error::param("dims", "zero-sized dimension"));
        }
    }
    let spacing = vol.spacing();
    let mut h = vec![0u8; VOX_OFFSET];
    LittleEndian::write_i32(&mut h[offsets::SIZEOF_HDR..], HEADER_SIZE as i32);
    h[offsets::REGULAR] = b'r';
    let dim: [i16; 8] = [
        3,
        dims.x() as i16,
        dims.y() as i16,
        dims.z() as i16,
        1,
        1,
        1,
        1,
    ];
    for (i, d) in dim.iter().enumerate() {
        LittleEndian::write_i16(&mut h[offsets::DIM + 2 * i..], *d);
    }
    LittleEndian::write_i16(&mut h[offsets::DATATYPE..], V::NIFTI_DATATYPE);
    LittleEndian::write_i16(&mut h[offsets::BITPIX..], (V::BYTES * 8) as i16);
    let pixdim: [f32; 8] = [
        1.0,
        spacing[0] as f32,
        spacing[1] as f32,
        spacing[2] as f32,
        1.0,
        1.0,
        1.0,
        1.0,
    ];
    for (i, p) in pixdim.iter().enumerate() {
        LittleEndian::write_f32(&mut h[offsets::PIXDIM + 4 * i..], *p);
    }
    LittleEndian::write_f32(&mut h[offsets::VOX_OFFSET..], VOX_OFFSET as f32);
    LittleEndian::write_f32(&mut h[offsets::SCL_SLOPE..], 1.0);
    LittleEndian::write_f32(&mut h[offsets::SCL_INTER..], 0.0);
    // millimetres
    h[offsets::XYZT_UNITS] = 2;
    let descrip: &[u8] = match V::KIND {
        crate::volume::VolumeKind::BinaryMask => b"angiosynth mask",
        crate::volume::VolumeKind::Intensity => b"angiosynth intensity",
    };
    h[offsets::DESCRIP..offsets::DESCRIP + descrip.len()].copy_from_slice(descrip);
    LittleEndian::write_i16(&mut h[offsets::QFORM_CODE..], 1);
    LittleEndian::write_i16(&mut h[offsets::SFORM_CODE..], 1);
    // quatern_b/c/d and qoffsets stay zero: identity rotation.
    for row in 0..3 {
        for col in 0..4 {
            let v = if row == col { spacing[row] as f32 } else { 0.0 };
            LittleEndian::write_f32(&mut h[offsets::SROW_X + 16 * row + 4 * col..], v);
        }
    }
    h[offsets::MAGIC..offsets::MAGIC + 4].copy_from_slice(MAGIC);
    Ok(h)
}

/// Uncompressed `.nii` bytes: header, 4-byte empty extension, payload.
pub fn encode_raw<V: Voxel>(vol: &Volume<V>) -> Result<Vec<u8>> {
    let mut out = header_bytes(vol)?;
    out.reserve(vol.data().len() * V::BYTES);
    for &v in vol.data() {
        v.put_le(&mut out);
    }
    Ok(out)
}

/// Gzipped `.nii.gz` bytes. Output is deterministic (zero mtime, fixed level).
pub fn encode_volume<V: Voxel>(vol: &Volume<V>) -> Result<Vec<u8>> {
    let raw = encode_raw(vol)?;
    let mut enc = GzEncoder::new(Vec::with_capacity(raw.len() / 2), Compression::new(1));
    enc.write_all(&raw).expect("writing to a Vec cannot fail");
    Ok(enc.finish().expect("writing to a Vec cannot fail"))
}

pub fn write_volume<V: Voxel>(vol: &Volume<V>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_volume(vol)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn bad(field: &'static str, reason: impl Into<String>) -> Error {
    Error::Nifti {
        field,
        reason: reason.into(),
    }
}

/// Decodes `.nii` or `.nii.gz` bytes (gzip is detected by its magic).
pub fn decode_volume(bytes: &[u8]) -> Result<AnyVolume> {
    if bytes.len() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b {
        let mut raw = Vec::new();
        GzDecoder::new(bytes)
            .read_to_end(&mut raw)
            .map_err(|e| bad("gzip stream", e.to_string()))?;
        decode_raw(&raw)
    } else {
        decode_raw(bytes)
    }
}

fn decode_raw(b: &[u8]) -> Result<AnyVolume> {
    if b.len() < HEADER_SIZE {
        return Err(bad(
            "sizeof_hdr",
            format!("file truncated: {} bytes, header needs {HEADER_SIZE}", b.len()),
        ));
    }
    let sizeof_hdr = LittleEndian::read_i32(&b[offsets::SIZEOF_HDR..]);
    if sizeof_hdr != HEADER_SIZE as i32 {
        return Err(bad(
            "sizeof_hdr",
            format!("expected 348 (little-endian), found {sizeof_hdr}"),
        ));
    }
    let magic = &b[offsets::MAGIC..offsets::MAGIC + 4];
    if magic != MAGIC {
        return Err(bad(
            "magic",
            format!("expected \"n+1\", found {:?}", String::from_utf8_lossy(magic)),
        ));
    }
    let mut dim = [0i16; 8];
    for (i, d) in dim.iter_mut().enumerate() {
        *d = LittleEndian::read_i16(&b[offsets::DIM + 2 * i..]);
    }
    if !(1..=7).contains(&dim[0]) {
        return Err(bad("dim", format!("dim[0] = {} is not in 1..=7", dim[0])));
    }
    let ndim = dim[0] as usize;
    let mut extent = [1usize; 3];
    for i in 1..=ndim {
        if dim[i] < 1 {
            return Err(bad("dim", format!("dim[{i}] = {} is not positive", dim[i])));
        }
        if i <= 3 {
            extent[i - 1] = dim[i] as usize;
        } else if dim[i] != 1 {
            return Err(bad("dim", format!("only 3D volumes are supported, dim[{i}] = {}", dim[i])));
        }
    }
    let dims = Dims(extent);
    let datatype = LittleEndian::read_i16(&b[offsets::DATATYPE..]);
    let bitpix = LittleEndian::read_i16(&b[offsets::BITPIX..]);
    let mut spacing = [1.0f64; 3];
    for (i, s) in spacing.iter_mut().enumerate() {
        let p = LittleEndian::read_f32(&b[offsets::PIXDIM + 4 * (i + 1)..]);
        if p.is_finite() && p > 0.0 {
            *s = p as f64;
        }
    }
    let vox_offset = LittleEndian::read_f32(&b[offsets::VOX_OFFSET..]);
    if !(vox_offset >= VOX_OFFSET as f32) || vox_offset.fract() != 0.0 {
        return Err(bad("vox_offset", format!("invalid value {vox_offset}")));
    }
    let slope = LittleEndian::read_f32(&b[offsets::SCL_SLOPE..]);
    let inter = LittleEndian::read_f32(&b[offsets::SCL_INTER..]);
    if !(slope == 0.0 || slope == 1.0) || inter != 0.0 {
        return Err(bad(
            "scl_slope",
            format!("intensity scaling ({slope}, {inter}) is not supported"),
        ));
    }
    let start = vox_offset as usize;
    match datatype {
        2 => {
            check_bitpix(bitpix, 8)?;
            let vol: MaskVolume = payload(b, start, dims)?;
            if let Some(&v) = vol.data().iter().find(|&&v| v > 1) {
                return Err(Error::NotBinary { value: v });
            }
            Ok(AnyVolume::Mask(vol.with_spacing(spacing)))
        }
        16 => {
            check_bitpix(bitpix, 32)?;
            Ok(AnyVolume::F32(payload(b, start, dims)?.with_spacing(spacing)))
        }
        64 => {
            check_bitpix(bitpix, 64)?;
            Ok(AnyVolume::F64(payload(b, start, dims)?.with_spacing(spacing)))
        }
        other => Err(bad("datatype", format!("unsupported datatype code {other}"))),
    }
}

fn check_bitpix(found: i16, expected: i16) -> Result<()> {
    if found != expected {
        return Err(bad(
            "bitpix",
            format!("expected {expected} for the declared datatype, found {found}"),
        ));
    }
    Ok(())
}

fn payload<V: Voxel>(b: &[u8], start: usize, dims: Dims) -> Result<Volume<V>> {
    let need = dims.len() * V::BYTES;
    let avail = b.len().saturating_sub(start);
    if avail < need {
        return Err(bad(
            "data",
            format!("truncated payload: {avail} bytes, expected {need}"),
        ));
    }
    let data = b[start..start + need]
        .chunks_exact(V::BYTES)
        .map(V::get_le)
        .collect();
    Volume::from_vec(dims, data)
}

pub fn read_volume(path: impl AsRef<Path>) -> Result<AnyVolume> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_volume(&bytes)
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<MaskVolume> {
    match read_volume(path)? {
        AnyVolume::Mask(m) => Ok(m),
        _ => Err(bad("datatype", "expected a uint8 mask volume")),
    }
}

pub fn read_intensity(path: impl AsRef<Path>) -> Result<Volume<f32>> {
    match read_volume(path)? {
        AnyVolume::F32(v) => Ok(v),
        _ => Err(bad("datatype", "expected a float32 intensity volume")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_ones_mask_payload() {
        let vol = MaskVolume::filled(Dims::cube(2), 1);
        let raw = encode_raw(&vol).unwrap();
        assert_eq!(raw.len(), VOX_OFFSET + 8);
        assert_eq!(&raw[VOX_OFFSET..], &[1u8; 8]);
        assert_eq!(LittleEndian::read_i16(&raw[offsets::DATATYPE..]), 2);
        let gz = encode_volume(&vol).unwrap();
        assert_eq!(decode_volume(&gz).unwrap(), AnyVolume::Mask(vol));
    }

    #[test]
    fn float_header_fields() {
        let vol = Volume::<f32>::zeros(Dims::cube(96)).with_spacing([1.0, 1.0, 1.0]);
        let raw = encode_raw(&vol).unwrap();
        let dim: Vec<i16> = (0..8)
            .map(|i| LittleEndian::read_i16(&raw[offsets::DIM + 2 * i..]))
            .collect();
        assert_eq!(dim, vec![3, 96, 96, 96, 1, 1, 1, 1]);
        assert_eq!(LittleEndian::read_i16(&raw[offsets::DATATYPE..]), 16);
        assert_eq!(LittleEndian::read_i16(&raw[offsets::BITPIX..]), 32);
        assert_eq!(LittleEndian::read_i32(&raw[0..]), 348);
        assert_eq!(LittleEndian::read_f32(&raw[offsets::VOX_OFFSET..]), 352.0);
        assert_eq!(&raw[344..348], b"n+1\0");
    }

    #[test]
    fn spacing_is_stored_in_pixdim() {
        let vol = MaskVolume::zeros(Dims::new(2, 3, 4)).with_spacing([0.5, 2.0, 1.5]);
        let back = decode_volume(&encode_volume(&vol).unwrap()).unwrap();
        match back {
            AnyVolume::Mask(m) => {
                assert_eq!(m.spacing(), [0.5, 2.0, 1.5]);
                assert_eq!(m.dims(), Dims::new(2, 3, 4));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn oversized_dims_rejected() {
        let vol = MaskVolume::zeros(Dims::new(40_000, 1, 1));
        assert!(matches!(encode_raw(&vol), Err(Error::DimsOverflow { dim: 40_000 })));
    }

    #[test]
    fn bad_magic_names_field() {
        let mut raw = encode_raw(&MaskVolume::zeros(Dims::cube(2))).unwrap();
        raw[344..348].copy_from_slice(b"ni1\0");
        match decode_volume(&raw) {
            Err(Error::Nifti { field, .. }) => assert_eq!(field, "magic"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncated_inputs_fail() {
        let vol = Volume::<f32>::filled(Dims::cube(4), 0.5);
        let raw = encode_raw(&vol).unwrap();
        assert!(matches!(
            decode_volume(&raw[..raw.len() - 3]),
            Err(Error::Nifti { field: "data", .. })
        ));
        assert!(matches!(
            decode_volume(&raw[..100]),
            Err(Error::Nifti { field: "sizeof_hdr", .. })
        ));
        let gz = encode_volume(&vol).unwrap();
        assert!(decode_volume(&gz[..gz.len() / 2]).is_err());
    }

    #[test]
    fn non_binary_mask_rejected() {
        let mut raw = encode_raw(&MaskVolume::zeros(Dims::cube(2))).unwrap();
        raw[VOX_OFFSET + 3] = 7;
        assert!(matches!(decode_volume(&raw), Err(Error::NotBinary { value: 7 })));
    }

    #[test]
    fn gzip_output_is_deterministic() {
        let vol = Volume::<f32>::from_vec(Dims::cube(8), (0..512).map(|i| i as f32 / 512.0).collect())
            .unwrap();
        assert_eq!(encode_volume(&vol).unwrap(), encode_volume(&vol).unwrap());
    }
}
