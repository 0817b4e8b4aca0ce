//! Colour-space conversion in 2^15 fixed point and the per-sub-pixel maps
//! (contrast and white balance).

use std::sync::Arc;

use super::PixelGrid;
use crate::error::TransformError;
use crate::gadgets::{clamp_u8, ChipKey, QuotientCheck, RegionShape, Synthesizer};
use crate::image::Image;

/// Fixed-point scale.
pub const SCALE: i64 = 1 << 15;

/// Integer affine map: channel `c` is `(k[c] . input + offset[c]) div SCALE`,
/// clamped to `[0, 255]`. Offsets already include the `SCALE / 2` rounding bias.
pub struct ColorMatrix {
    pub k: [[i64; 3]; 3],
    pub offset: [i64; 3],
}

pub const FORWARD: ColorMatrix = ColorMatrix {
    k: [[9798, 19235, 3736], [-5529, -10855, 16384], [16384, -13720, -2664]],
    offset: [SCALE / 2, 128 * SCALE + SCALE / 2, 128 * SCALE + SCALE / 2],
};

/// Applied to `(Y, Cb, Cr)` directly; the `-128` chroma shift is folded into
/// the offsets.
pub const INVERSE: ColorMatrix = ColorMatrix {
    k: [[32768, 0, 45941], [32768, -11277, -23401], [32768, 58065, 0]],
    offset: [
        -128 * 45941 + SCALE / 2,
        -128 * (-11277 - 23401) + SCALE / 2,
        -128 * 58065 + SCALE / 2,
    ],
};

impl ColorMatrix {
    fn raw(&self, c: usize, px: [u8; 3]) -> i64 {
        (0..3).map(|j| self.k[c][j] * px[j] as i64).sum::<i64>() + self.offset[c]
    }

    /// Quotient before clamping, over all 8-bit inputs.
    pub fn quotient_bounds(&self) -> (i64, i64) {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for c in 0..3 {
            let min: i64 = self.k[c].iter().map(|k| (k * 255).min(0)).sum::<i64>() + self.offset[c];
            let max: i64 = self.k[c].iter().map(|k| (k * 255).max(0)).sum::<i64>() + self.offset[c];
            lo = lo.min(min.div_euclid(SCALE));
            hi = hi.max(max.div_euclid(SCALE));
        }
        (lo, hi)
    }

    pub fn apply(&self, px: [u8; 3]) -> [u8; 3] {
        std::array::from_fn(|c| clamp_u8(self.raw(c, px).div_euclid(SCALE)) as u8)
    }

    fn taps(&self, c: usize) -> (Vec<usize>, Vec<i64>) {
        (0..3).filter(|j| self.k[c][*j] != 0).map(|j| (j, self.k[c][j])).unzip()
    }
}

pub(super) fn colorspace_native(m: &ColorMatrix, img: &Image) -> Image {
    let mut out = img.clone();
    for px in out.data_mut().chunks_exact_mut(3) {
        let v = m.apply([px[0], px[1], px[2]]);
        px.copy_from_slice(&v);
    }
    out
}

pub(super) fn colorspace_shape(m: &ColorMatrix, pixels: usize) -> RegionShape {
    let (lo, hi) = m.quotient_bounds();
    let mut chips: Vec<(ChipKey, usize)> = (0..3)
        .map(|c| (ChipKey::Dot { coeffs: m.taps(c).1, offset: m.offset[c] }, 1))
        .collect();
    chips.push((ChipKey::Div { divisor: SCALE as u64, quotient: QuotientCheck::Unchecked }, 3));
    chips.push((ChipKey::Clamp { lo, hi }, 3));
    RegionShape { name: "colorspace".into(), units: pixels, chips }
}

pub(super) fn colorspace_synth(
    sx: &mut Synthesizer,
    m: &ColorMatrix,
    shape: &RegionShape,
    input: &PixelGrid,
    k: usize,
) -> Result<PixelGrid, TransformError> {
    let taps: Vec<Vec<usize>> = (0..3).map(|c| m.taps(c).0).collect();
    sx.open_region(shape, k)?;
    let mut cells = Vec::with_capacity(input.cells.len());
    for px in input.cells.chunks_exact(3) {
        for (c, t) in taps.iter().enumerate() {
            let ins: Vec<_> = t.iter().map(|j| px[*j]).collect();
            let y = sx.op_dot(c, &ins)?;
            let (q, _) = sx.op_div(3, y)?;
            cells.push(sx.op_clamp(4, q)?);
        }
    }
    sx.close_region()?;
    Ok(PixelGrid { width: input.width, height: input.height, cells })
}

/// `RoundAndClip(128 + f * (p - 128))` for every 8-bit `p`.
pub fn contrast_table(f: f64) -> Arc<[u8; 256]> {
    Arc::new(std::array::from_fn(|p| round_clip(128.0 + f * (p as f64 - 128.0))))
}

/// `RoundAndClip(g * p)` for every 8-bit `p`.
pub fn white_balance_table(g: f64) -> Arc<[u8; 256]> {
    Arc::new(std::array::from_fn(|p| round_clip(g * p as f64)))
}

fn round_clip(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

pub(super) fn map_native(img: &Image, tables: &[Arc<[u8; 256]>; 3]) -> Image {
    let mut out = img.clone();
    for px in out.data_mut().chunks_exact_mut(3) {
        for c in 0..3 {
            px[c] = tables[c][px[c] as usize];
        }
    }
    out
}

/// Chips for distinct tables and the chip index serving each channel.
fn map_groups(tables: &[Arc<[u8; 256]>; 3]) -> (Vec<(ChipKey, usize)>, [usize; 3]) {
    let mut chips: Vec<(ChipKey, usize)> = Vec::new();
    let mut of = [0; 3];
    for c in 0..3 {
        let key = ChipKey::Map { table: tables[c].clone() };
        match chips.iter().position(|(k, _)| *k == key) {
            Some(i) => {
                chips[i].1 += 1;
                of[c] = i;
            }
            None => {
                of[c] = chips.len();
                chips.push((key, 1));
            }
        }
    }
    (chips, of)
}

pub(super) fn map_shape(name: &str, tables: &[Arc<[u8; 256]>; 3], pixels: usize) -> RegionShape {
    RegionShape { name: name.into(), units: pixels, chips: map_groups(tables).0 }
}

pub(super) fn map_synth(
    sx: &mut Synthesizer,
    shape: &RegionShape,
    tables: &[Arc<[u8; 256]>; 3],
    input: &PixelGrid,
    k: usize,
) -> Result<PixelGrid, TransformError> {
    let of = map_groups(tables).1;
    sx.open_region(shape, k)?;
    let mut cells = Vec::with_capacity(input.cells.len());
    for px in input.cells.chunks_exact(3) {
        for c in 0..3 {
            cells.push(sx.op_map(of[c], px[c])?);
        }
    }
    sx.close_region()?;
    Ok(PixelGrid { width: input.width, height: input.height, cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_are_rounded_reals() {
        let fwd = [[0.299, 0.587, 0.114], [-0.168736, -0.331264, 0.5], [0.5, -0.418688, -0.081312]];
        let inv = [[1.0, 0.0, 1.402], [1.0, -0.344136, -0.714136], [1.0, 1.772, 0.0]];
        for (m, real) in [(&FORWARD, fwd), (&INVERSE, inv)] {
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(m.k[i][j], (real[i][j] * SCALE as f64 + 0.5).floor() as i64);
                }
            }
        }
    }

    #[test]
    fn forward_examples() {
        assert_eq!(FORWARD.apply([0, 0, 0]), [0, 128, 128]);
        assert_eq!(FORWARD.apply([255, 255, 255]), [255, 128, 128]);
        // Cr is 255.5 before rounding, 256 after, 255 after the clamp.
        assert_eq!(FORWARD.raw(2, [255, 0, 0]).div_euclid(SCALE), 256);
        assert_eq!(FORWARD.apply([255, 0, 0])[2], 255);
    }

    #[test]
    fn white_balance_identity_shares_one_table() {
        let t = white_balance_table(1.0);
        assert!(t.iter().enumerate().all(|(i, v)| *v as usize == i));
        let (chips, of) = map_groups(&[t.clone(), t.clone(), t]);
        assert_eq!((chips.len(), chips[0].1, of), (1, 3, [0, 0, 0]));
    }
}
