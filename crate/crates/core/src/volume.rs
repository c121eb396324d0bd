//! Dense voxel volumes stored in x-fastest order.

use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid extent in voxels, `[x, y, z]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dims(pub [usize; 3]);

impl Dims {
    pub const fn new(x: usize, y: usize, z: usize) -> Self {
        Self([x, y, z])
    }

    pub const fn cube(n: usize) -> Self {
        Self([n, n, n])
    }

    #[inline]
    pub fn x(&self) -> usize {
        self.0[0]
    }

    #[inline]
    pub fn y(&self) -> usize {
        self.0[1]
    }

    #[inline]
    pub fn z(&self) -> usize {
        self.0[2]
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0[0] * self.0[1] * self.0[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.0[0] * (y + self.0[1] * z)
    }

    #[inline]
    pub fn coords(&self, i: usize) -> [usize; 3] {
        let x = i % self.0[0];
        let yz = i / self.0[0];
        [x, yz % self.0[1], yz / self.0[1]]
    }

    pub fn contains(&self, p: [i64; 3]) -> bool {
        (0..3).all(|a| p[a] >= 0 && (p[a] as usize) < self.0[a])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VolumeKind {
    BinaryMask,
    Intensity,
}

/// Element type of a [`Volume`]; fixes the on-disk representation.
pub trait Voxel: Copy + Default + PartialEq + PartialOrd + Debug + Send + Sync + 'static {
    const KIND: VolumeKind;
    const NIFTI_DATATYPE: i16;
    const BYTES: usize;

    fn put_le(self, out: &mut Vec<u8>);
    fn get_le(bytes: &[u8]) -> Self;
    fn to_f64(self) -> f64;
}

impl Voxel for u8 {
    const KIND: VolumeKind = VolumeKind::BinaryMask;
    const NIFTI_DATATYPE: i16 = 2;
    const BYTES: usize = 1;

    fn put_le(self, out: &mut Vec<u8>) {
        out.push(self);
    }

    fn get_le(bytes: &[u8]) -> Self {
        bytes[0]
    }

    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Voxel for f32 {
    const KIND: VolumeKind = VolumeKind::Intensity;
    const NIFTI_DATATYPE: i16 = 16;
    const BYTES: usize = 4;

    fn put_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn get_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]])
    }

    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Voxel for f64 {
    const KIND: VolumeKind = VolumeKind::Intensity;
    const NIFTI_DATATYPE: i16 = 64;
    const BYTES: usize = 8;

    fn put_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn get_le(bytes: &[u8]) -> Self {
        let mut b = [0u8; 8];
        b.copy_from_slice(&bytes[..8]);
        f64::from_le_bytes(b)
    }

    fn to_f64(self) -> f64 {
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Volume<V> {
    dims: Dims,
    spacing: [f64; 3],
    data: Vec<V>,
}

/// Binary `{0, 1}` label volume.
pub type MaskVolume = Volume<u8>;

impl<V: Voxel> Volume<V> {
    pub fn filled(dims: Dims, value: V) -> Self {
        Self {
            dims,
            spacing: [1.0; 3],
            data: vec![value; dims.len()],
        }
    }

    pub fn zeros(dims: Dims) -> Self {
        Self::filled(dims, V::default())
    }

    pub fn from_vec(dims: Dims, data: Vec<V>) -> Result<Self> {
        if data.len() != dims.len() {
            return Err(Error::param(
                "data",
                format!("length {} does not match dims {:?}", data.len(), dims.0),
            ));
        }
        Ok(Self {
            dims,
            spacing: [1.0; 3],
            data,
        })
    }

    pub fn with_spacing(mut self, spacing: [f64; 3]) -> Self {
        self.spacing = spacing;
        self
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn kind(&self) -> VolumeKind {
        V::KIND
    }

    #[inline]
    pub fn data(&self) -> &[V] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [V] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<V> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> V {
        self.data[self.dims.index(x, y, z)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, v: V) {
        let i = self.dims.index(x, y, z);
        self.data[i] = v;
    }

    /// Copies the sub-volume at `origin` with extent `size`.
    pub fn crop(&self, origin: [usize; 3], size: Dims) -> Result<Self> {
        for a in 0..3 {
            if origin[a] + size.0[a] > self.dims.0[a] {
                return Err(Error::param(
                    "crop",
                    format!(
                        "origin {:?} + size {:?} exceeds dims {:?}",
                        origin, size.0, self.dims.0
                    ),
                ));
            }
        }
        let mut data = Vec::with_capacity(size.len());
        for z in 0..size.z() {
            for y in 0..size.y() {
                let start = self.dims.index(origin[0], origin[1] + y, origin[2] + z);
                data.extend_from_slice(&self.data[start..start + size.x()]);
            }
        }
        Ok(Self {
            dims: size,
            spacing: self.spacing,
            data,
        })
    }

    pub fn ensure_same_dims<W: Voxel>(&self, other: &Volume<W>) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimMismatch {
                left: self.dims.0,
                right: other.dims.0,
            });
        }
        Ok(())
    }
}

impl MaskVolume {
    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    pub fn is_binary(&self) -> bool {
        self.data.iter().all(|&v| v <= 1)
    }
}

impl<V: Voxel> Volume<V> {
    pub fn min_max(&self) -> Option<(V, V)> {
        let mut it = self.data.iter().copied();
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), v| {
            (
                if v < lo { v } else { lo },
                if v > hi { v } else { hi },
            )
        }))
    }
}
