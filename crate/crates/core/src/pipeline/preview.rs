use std::path::Path;
use std::str::FromStr;

use image::GrayImage;

use crate::error::{Error, Result};
use crate::nifti::{read_volume, AnyVolume};
use crate::volume::Volume;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Self::X),
            "y" | "Y" => Ok(Self::Y),
            "z" | "Z" => Ok(Self::Z),
            _ => Err(Error::param("axis", format!("`{s}` is not one of x, y, z"))),
        }
    }
}

/// Maximum along `axis`; row-major `(width, height, values)`. Projecting z
/// gives an x-by-y image, x gives y-by-z and y gives x-by-z. Negative
/// (corrupted) voxels count as 0.
pub fn mip(vol: &Volume<f32>, axis: Axis) -> (usize, usize, Vec<f32>) {
    let [nx, ny, nz] = vol.dims().0;
    let (w, h, depth) = match axis {
        Axis::X => (ny, nz, nx),
        Axis::Y => (nx, nz, ny),
        Axis::Z => (nx, ny, nz),
    };
    let mut out = vec![0.0f32; w * h];
    for r in 0..h {
        for c in 0..w {
            let mut m = 0.0f32;
            for d in 0..depth {
                let (x, y, z) = match axis {
                    Axis::X => (d, c, r),
                    Axis::Y => (c, d, r),
                    Axis::Z => (c, r, d),
                };
                m = m.max(vol.get(x, y, z));
            }
            out[r * w + c] = m;
        }
    }
    (w, h, out)
}

pub fn mip_image(vol: &Volume<f32>, axis: Axis) -> GrayImage {
    let (w, h, values) = mip(vol, axis);
    let px = values
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    GrayImage::from_raw(w as u32, h as u32, px).expect("buffer matches dimensions")
}

/// Writes the projection as PNG or PGM depending on the extension.
pub fn preview_mip(volume_path: impl AsRef<Path>, axis: Axis, out_path: impl AsRef<Path>) -> Result<()> {
    let vol = match read_volume(volume_path)? {
        AnyVolume::Mask(m) => {
            let data = m.data().iter().map(|&v| f32::from(v)).collect();
            Volume::from_vec(m.dims(), data)?
        }
        other => other.to_f32(),
    };
    let img = mip_image(&vol, axis);
    let out = out_path.as_ref();
    let format = match out.extension().and_then(|e| e.to_str()) {
        Some("png") => image::ImageFormat::Png,
        Some("pgm") | Some("pnm") => image::ImageFormat::Pnm,
        _ => return Err(Error::param("out", "preview path must end in .png or .pgm")),
    };
    img.save_with_format(out, format)
        .map_err(|e| Error::Image(format!("{}: {e}", out.display())))
}
