//! Domain-randomized intensity synthesis from label patches, skull shells
//! and cutout corruption.

use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{uniform, Vec3};
use crate::volume::{Dims, MaskVolume, Volume};

pub type IntensityVolume = Volume<f32>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Sphere,
    Ellipsoid,
    Box,
    Slab,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkullParams {
    pub semi_axes_range: [f64; 2],
    pub shell_thickness_range: [f64; 2],
    pub shell_intensity_range: [f64; 2],
    /// Maximum offset of the shell center from the patch center, per axis.
    pub center_jitter: f64,
}

impl Default for SkullParams {
    fn default() -> Self {
        Self {
            semi_axes_range: [40.0, 80.0],
            shell_thickness_range: [2.0, 6.0],
            shell_intensity_range: [0.8, 1.0],
            center_jitter: 8.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AppearanceParams {
    pub shape_count_range: [u32; 2],
    pub shape_kinds: BTreeSet<ShapeKind>,
    /// Semi-axis (or slab half-thickness) range for background shapes.
    pub shape_size_range: [f64; 2],
    pub background_intensity_range: [f64; 2],
    pub vessel_intensity_range: [f64; 2],
    pub intensity_jitter_sd: f64,
    pub blur_sigma_range: [f64; 2],
    pub noise_sigma_range: [f64; 2],
    pub contrast_invert_prob: f64,
    pub skull: Option<SkullParams>,
}

impl Default for AppearanceParams {
    fn default() -> Self {
        Self {
            shape_count_range: [1, 8],
            shape_kinds: [ShapeKind::Sphere, ShapeKind::Ellipsoid, ShapeKind::Box, ShapeKind::Slab]
                .into_iter()
                .collect(),
            shape_size_range: [4.0, 32.0],
            background_intensity_range: [0.0, 0.4],
            vessel_intensity_range: [0.6, 1.0],
            intensity_jitter_sd: 0.05,
            blur_sigma_range: [0.0, 1.5],
            noise_sigma_range: [0.01, 0.10],
            contrast_invert_prob: 0.0,
            skull: None,
        }
    }
}

fn ordered(name: &'static str, r: [f64; 2]) -> Result<()> {
    if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
        return Err(Error::param(name, format!("range {r:?} must be finite and ordered")));
    }
    Ok(())
}

fn non_negative(name: &'static str, r: [f64; 2]) -> Result<()> {
    ordered(name, r)?;
    if r[0] < 0.0 {
        return Err(Error::param(name, format!("range {r:?} must be non-negative")));
    }
    Ok(())
}

impl SkullParams {
    pub fn validate(&self) -> Result<()> {
        non_negative("semi_axes_range", self.semi_axes_range)?;
        non_negative("shell_thickness_range", self.shell_thickness_range)?;
        ordered("shell_intensity_range", self.shell_intensity_range)?;
        if self.semi_axes_range[0] <= 0.0 {
            return Err(Error::param("semi_axes_range", "semi-axes must be positive"));
        }
        if self.shell_thickness_range[1] >= self.semi_axes_range[0] {
            return Err(Error::param(
                "shell_thickness_range",
                "thickness must stay below the smallest semi-axis",
            ));
        }
        if !(self.center_jitter >= 0.0) {
            return Err(Error::param("center_jitter", "must be non-negative"));
        }
        Ok(())
    }
}

impl AppearanceParams {
    pub fn validate(&self) -> Result<()> {
        let [c0, c1] = self.shape_count_range;
        if c0 > c1 {
            return Err(Error::param("shape_count_range", "range must be ordered"));
        }
        if c1 > 0 && self.shape_kinds.is_empty() {
            return Err(Error::param("shape_kinds", "no kinds to draw shapes from"));
        }
        non_negative("shape_size_range", self.shape_size_range)?;
        ordered("background_intensity_range", self.background_intensity_range)?;
        ordered("vessel_intensity_range", self.vessel_intensity_range)?;
        non_negative("blur_sigma_range", self.blur_sigma_range)?;
        non_negative("noise_sigma_range", self.noise_sigma_range)?;
        if !(self.intensity_jitter_sd >= 0.0) {
            return Err(Error::param("intensity_jitter_sd", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.contrast_invert_prob) {
            return Err(Error::param("contrast_invert_prob", "must lie in [0, 1]"));
        }
        if let Some(s) = &self.skull {
            s.validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cube {
    pub origin: [usize; 3],
    pub edge: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CutoutParams {
    pub cube_edge_range: [usize; 2],
    pub cube_count_range: [usize; 2],
    pub fill_value: f32,
}

impl Default for CutoutParams {
    fn default() -> Self {
        Self {
            cube_edge_range: [2, 16],
            cube_count_range: [1, 12],
            fill_value: -1.0,
        }
    }
}

impl CutoutParams {
    pub fn validate(&self) -> Result<()> {
        let [e0, e1] = self.cube_edge_range;
        if e0 < 2 || e1 > 16 || e0 > e1 {
            return Err(Error::param("cube_edge_range", "edges must lie in [2, 16] and be ordered"));
        }
        if self.cube_count_range[0] > self.cube_count_range[1] {
            return Err(Error::param("cube_count_range", "range must be ordered"));
        }
        if self.fill_value != -1.0 {
            return Err(Error::param("fill_value", "must be -1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cutout {
    pub image: IntensityVolume,
    pub mask: MaskVolume,
    pub cubes: Vec<Cube>,
}

/// Randomly oriented solid used as background clutter.
#[derive(Clone, Debug)]
enum Shape {
    /// Ellipsoid or box in a rotated frame.
    Solid {
        center: Vec3<f64>,
        axes: [Vec3<f64>; 3],
        semi: [f64; 3],
        boxy: bool,
    },
    Slab {
        point: Vec3<f64>,
        normal: Vec3<f64>,
        half_thickness: f64,
    },
}

impl Shape {
    fn contains(&self, p: Vec3<f64>) -> bool {
        match self {
            Shape::Solid {
                center,
                axes,
                semi,
                boxy,
            } => {
                let d = p - *center;
                let u = [d.dot(axes[0]) / semi[0], d.dot(axes[1]) / semi[1], d.dot(axes[2]) / semi[2]];
                if *boxy {
                    u.iter().all(|v| v.abs() <= 1.0)
                } else {
                    u.iter().map(|v| v * v).sum::<f64>() <= 1.0
                }
            }
            Shape::Slab {
                point,
                normal,
                half_thickness,
            } => (p - *point).dot(*normal).abs() <= *half_thickness,
        }
    }

    /// Conservative voxel bounds `[lo, hi)` per axis.
    fn bounds(&self, dims: Dims) -> [(usize, usize); 3] {
        let full = [(0, dims.x()), (0, dims.y()), (0, dims.z())];
        match self {
            Shape::Slab { .. } => full,
            Shape::Solid { center, semi, .. } => {
                let reach = semi[0].max(semi[1]).max(semi[2]);
                let mut b = full;
                for a in 0..3 {
                    let lo = (center[a] - reach).floor().max(0.0) as usize;
                    let hi = ((center[a] + reach).ceil().max(0.0) as usize + 1).min(dims.0[a]);
                    b[a] = (lo.min(hi), hi);
                }
                b
            }
        }
    }
}

fn random_unit<R: Rng + ?Sized>(rng: &mut R) -> Vec3<f64> {
    let n = Normal::new(0.0, 1.0).expect("unit normal");
    loop {
        let v = Vec3::new(n.sample(rng), n.sample(rng), n.sample(rng));
        if let Some(u) = v.try_normalize() {
            return u;
        }
    }
}

fn random_frame<R: Rng + ?Sized>(rng: &mut R) -> [Vec3<f64>; 3] {
    let a = random_unit(rng);
    let b = a.any_perpendicular().rotate_about(a, uniform(rng, 0.0, std::f64::consts::TAU));
    [a, b, a.cross(b)]
}

fn sample_shape<R: Rng + ?Sized>(kind: ShapeKind, dims: Dims, p: &AppearanceParams, rng: &mut R) -> Shape {
    let [s0, s1] = p.shape_size_range;
    let center = Vec3::new(
        uniform(rng, 0.0, dims.x() as f64),
        uniform(rng, 0.0, dims.y() as f64),
        uniform(rng, 0.0, dims.z() as f64),
    );
    match kind {
        ShapeKind::Sphere => {
            let r = uniform(rng, s0, s1);
            Shape::Solid {
                center,
                axes: [Vec3::axis(0, 1.0), Vec3::axis(1, 1.0), Vec3::axis(2, 1.0)],
                semi: [r; 3],
                boxy: false,
            }
        }
        ShapeKind::Ellipsoid | ShapeKind::Box => {
            let semi = [uniform(rng, s0, s1), uniform(rng, s0, s1), uniform(rng, s0, s1)];
            Shape::Solid {
                center,
                axes: random_frame(rng),
                semi,
                boxy: kind == ShapeKind::Box,
            }
        }
        ShapeKind::Slab => Shape::Slab {
            point: center,
            normal: random_unit(rng),
            half_thickness: uniform(rng, s0, s1) * 0.5,
        },
    }
}

fn paint(image: &mut IntensityVolume, shape: &Shape, value: f32) {
    let dims = image.dims();
    let b = shape.bounds(dims);
    let data = image.data_mut();
    for z in b[2].0..b[2].1 {
        for y in b[1].0..b[1].1 {
            for x in b[0].0..b[0].1 {
                let c = Vec3::new(x as f64 + 0.5, y as f64 + 0.5, z as f64 + 0.5);
                if shape.contains(c) {
                    data[dims.index(x, y, z)] = value;
                }
            }
        }
    }
}

/// Steps (1) and (2): base intensity then composited background shapes.
fn background<R: Rng + ?Sized>(dims: Dims, p: &AppearanceParams, rng: &mut R) -> IntensityVolume {
    let [b0, b1] = p.background_intensity_range;
    let mut image = IntensityVolume::filled(dims, uniform(rng, b0, b1) as f32);
    let n = rng.random_range(p.shape_count_range[0]..=p.shape_count_range[1]);
    let kinds: Vec<ShapeKind> = p.shape_kinds.iter().copied().collect();
    for _ in 0..n {
        if kinds.is_empty() {
            break;
        }
        let kind = kinds[rng.random_range(0..kinds.len())];
        let shape = sample_shape(kind, dims, p, rng);
        let value = uniform(rng, b0, b1) as f32;
        paint(&mut image, &shape, value);
    }
    image
}

/// Steps (5) to (7) plus optional inversion.
fn finish<R: Rng + ?Sized>(image: &mut IntensityVolume, p: &AppearanceParams, rng: &mut R) {
    let sigma = uniform(rng, p.blur_sigma_range[0], p.blur_sigma_range[1]);
    gaussian_blur(image, sigma);
    let noise = uniform(rng, p.noise_sigma_range[0], p.noise_sigma_range[1]);
    if noise > 0.0 {
        let n = Normal::new(0.0, noise).expect("finite noise sigma");
        for v in image.data_mut() {
            *v += n.sample(rng) as f32;
        }
    }
    for v in image.data_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    if p.contrast_invert_prob > 0.0 && rng.random_bool(p.contrast_invert_prob) {
        for v in image.data_mut() {
            *v = 1.0 - *v;
        }
    }
}

/// Label patch to intensity volume. The label is only read.
pub fn synthesize_image<R: Rng + ?Sized>(
    label: &MaskVolume,
    params: &AppearanceParams,
    rng: &mut R,
) -> Result<IntensityVolume> {
    params.validate()?;
    let dims = label.dims();
    let mut image = background(dims, params, rng);

    let [v0, v1] = params.vessel_intensity_range;
    let vessel = uniform(rng, v0, v1);
    let jitter = (params.intensity_jitter_sd > 0.0)
        .then(|| Normal::new(0.0, params.intensity_jitter_sd).expect("finite jitter"));
    for (v, &l) in image.data_mut().iter_mut().zip(label.data()) {
        if l != 0 {
            let j = jitter.as_ref().map_or(0.0, |n| n.sample(rng));
            *v = (vessel + j) as f32;
        }
    }

    if let Some(skull) = &params.skull {
        inject_skull(&mut image, label, skull, rng)?;
    }
    finish(&mut image, params, rng);
    Ok(image)
}

/// Vessel-free negative: background, blur, noise, clamp.
pub fn synthesize_background_sample<R: Rng + ?Sized>(
    patch_size: Dims,
    params: &AppearanceParams,
    rng: &mut R,
) -> Result<(IntensityVolume, MaskVolume)> {
    params.validate()?;
    let mut image = background(patch_size, params, rng);
    finish(&mut image, params, rng);
    Ok((image, MaskVolume::zeros(patch_size)))
}

/// A concrete ellipsoidal shell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shell {
    pub center: [f64; 3],
    pub semi_axes: [f64; 3],
    pub thickness: f64,
    pub intensity: f32,
}

impl Shell {
    /// Geometric mean of the semi-axes; converts the thickness into
    /// normalized radius units.
    pub fn effective_radius(&self) -> f64 {
        let [a, b, c] = self.semi_axes;
        (a * b * c).cbrt()
    }

    /// Whether the voxel center `(x, y, z) + 0.5` lies on the shell.
    pub fn contains_voxel(&self, x: usize, y: usize, z: usize) -> bool {
        let p = [x as f64 + 0.5, y as f64 + 0.5, z as f64 + 0.5];
        let mut s = 0.0;
        for a in 0..3 {
            let u = (p[a] - self.center[a]) / self.semi_axes[a];
            s += u * u;
        }
        let rho = s.sqrt();
        rho <= 1.0 && rho >= 1.0 - self.thickness / self.effective_radius()
    }
}

/// Sets non-vessel shell voxels to the shell intensity. Parts of the shell
/// outside the patch are clipped. Returns the number of voxels written.
pub fn paint_shell(image: &mut IntensityVolume, label: &MaskVolume, shell: &Shell) -> Result<usize> {
    image.ensure_same_dims(label)?;
    let dims = image.dims();
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for a in 0..3 {
        let c = shell.center[a];
        let r = shell.semi_axes[a];
        lo[a] = (c - r - 1.0).floor().max(0.0) as usize;
        hi[a] = ((c + r + 1.0).ceil().max(0.0) as usize).min(dims.0[a]);
    }
    let mut painted = 0;
    let labels = label.data();
    let data = image.data_mut();
    for z in lo[2]..hi[2] {
        for y in lo[1]..hi[1] {
            for x in lo[0]..hi[0] {
                let i = dims.index(x, y, z);
                if labels[i] == 0 && shell.contains_voxel(x, y, z) {
                    data[i] = shell.intensity;
                    painted += 1;
                }
            }
        }
    }
    Ok(painted)
}

pub fn sample_shell<R: Rng + ?Sized>(dims: Dims, skull: &SkullParams, rng: &mut R) -> Shell {
    let [a0, a1] = skull.semi_axes_range;
    let j = skull.center_jitter;
    let mut center = [0.0; 3];
    for (a, c) in center.iter_mut().enumerate() {
        *c = dims.0[a] as f64 * 0.5 + uniform(rng, -j, j);
    }
    let semi_axes = [uniform(rng, a0, a1), uniform(rng, a0, a1), uniform(rng, a0, a1)];
    let [t0, t1] = skull.shell_thickness_range;
    let [i0, i1] = skull.shell_intensity_range;
    Shell {
        center,
        semi_axes,
        thickness: uniform(rng, t0, t1),
        intensity: uniform(rng, i0, i1) as f32,
    }
}

/// Composites a random skull shell over background voxels.
pub fn inject_skull<R: Rng + ?Sized>(
    image: &mut IntensityVolume,
    label: &MaskVolume,
    skull: &SkullParams,
    rng: &mut R,
) -> Result<Shell> {
    skull.validate()?;
    image.ensure_same_dims(label)?;
    let shell = sample_shell(image.dims(), skull, rng);
    paint_shell(image, label, &shell)?;
    Ok(shell)
}

/// Masks random axis-aligned cubes with the fill value.
pub fn apply_cutout<R: Rng + ?Sized>(
    image: &IntensityVolume,
    params: &CutoutParams,
    rng: &mut R,
) -> Result<Cutout> {
    params.validate()?;
    let dims = image.dims();
    let n = rng.random_range(params.cube_count_range[0]..=params.cube_count_range[1]);
    let mut out = image.clone();
    let mut mask = MaskVolume::zeros(dims);
    let mut cubes = Vec::with_capacity(n);
    for _ in 0..n {
        let max_edge = params.cube_edge_range[1].min(dims.x()).min(dims.y()).min(dims.z());
        if max_edge < params.cube_edge_range[0] {
            break;
        }
        let edge = rng.random_range(params.cube_edge_range[0]..=max_edge);
        let origin = [
            rng.random_range(0..=dims.x() - edge),
            rng.random_range(0..=dims.y() - edge),
            rng.random_range(0..=dims.z() - edge),
        ];
        for z in origin[2]..origin[2] + edge {
            for y in origin[1]..origin[1] + edge {
                for x in origin[0]..origin[0] + edge {
                    out.set(x, y, z, params.fill_value);
                    mask.set(x, y, z, 1);
                }
            }
        }
        cubes.push(Cube { origin, edge });
    }
    Ok(Cutout {
        image: out,
        mask,
        cubes,
    })
}

/// Reflected index for the half-sample symmetric boundary
/// `d c b a | a b c d | d c b a`.
fn reflect(i: i64, n: i64) -> usize {
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}

pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    for v in &mut k {
        *v /= s;
    }
    k
}

/// Separable Gaussian blur with reflect boundaries; no-op for tiny sigma.
pub fn gaussian_blur(image: &mut IntensityVolume, sigma: f64) {
    if !(sigma > 1e-3) {
        return;
    }
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as i64;
    let dims = image.dims();
    let d = dims.0;
    let strides = [1usize, d[0], d[0] * d[1]];
    let mut line = Vec::new();
    for axis in 0..3 {
        let n = d[axis];
        let stride = strides[axis];
        let (o1, o2) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let data = image.data_mut();
        for j in 0..d[o2] {
            for i in 0..d[o1] {
                let base = i * strides[o1] + j * strides[o2];
                line.clear();
                line.extend((0..n).map(|t| f64::from(data[base + t * stride])));
                for t in 0..n as i64 {
                    let mut acc = 0.0;
                    for (k, w) in kernel.iter().enumerate() {
                        acc += w * line[reflect(t + k as i64 - radius, n as i64)];
                    }
                    data[base + t as usize * stride] = acc as f32;
                }
            }
        }
    }
}
