//! Exact Euclidean distance transform (separable lower-envelope method).

use crate::volume::MaskVolume;

/// Squared distance from a 1-D sample to the nearest site where `f` is
/// finite, over the lower envelope of parabolas `(q - p)^2 + f(p)`.
fn envelope_1d(f: &[f64], out: &mut [f64], v: &mut Vec<usize>, z: &mut Vec<f64>) {
    v.clear();
    z.clear();
    for (q, &fq) in f.iter().enumerate() {
        if !fq.is_finite() {
            continue;
        }
        loop {
            let Some(&p) = v.last() else {
                v.push(q);
                z.push(f64::NEG_INFINITY);
                break;
            };
            let (qf, pf) = (q as f64, p as f64);
            let s = ((fq + qf * qf) - (f[p] + pf * pf)) / (2.0 * (qf - pf));
            if s <= *z.last().expect("paired with v") {
                v.pop();
                z.pop();
                continue;
            }
            v.push(q);
            z.push(s);
            break;
        }
    }
    if v.is_empty() {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        let qf = q as f64;
        while k + 1 < v.len() && z[k + 1] < qf {
            k += 1;
        }
        let p = v[k];
        let d = qf - p as f64;
        *o = d * d + f[p];
    }
}

/// Squared Euclidean distance from every voxel to the nearest 0-voxel of
/// `mask`. Space outside the volume is not background; a mask without any
/// 0-voxel yields infinity everywhere.
pub fn squared_distance_to_background(mask: &MaskVolume) -> Vec<f64> {
    let dims = mask.dims();
    let d = dims.0;
    let mut g: Vec<f64> = mask
        .data()
        .iter()
        .map(|&m| if m == 0 { 0.0 } else { f64::INFINITY })
        .collect();
    let strides = [1usize, d[0], d[0] * d[1]];
    let (mut v, mut z) = (Vec::new(), Vec::new());
    for axis in 0..3 {
        let n = d[axis];
        let stride = strides[axis];
        let (o1, o2) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let mut line = vec![0.0; n];
        let mut out = vec![0.0; n];
        for j in 0..d[o2] {
            for i in 0..d[o1] {
                let base = i * strides[o1] + j * strides[o2];
                for t in 0..n {
                    line[t] = g[base + t * stride];
                }
                envelope_1d(&line, &mut out, &mut v, &mut z);
                for t in 0..n {
                    g[base + t * stride] = out[t];
                }
            }
        }
    }
    g
}

/// Euclidean distance to the nearest background voxel.
pub fn distance_to_background(mask: &MaskVolume) -> Vec<f64> {
    squared_distance_to_background(mask)
        .into_iter()
        .map(f64::sqrt)
        .collect()
}
