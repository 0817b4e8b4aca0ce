//! 3x3 convolutions with replicated edges.

use super::PixelGrid;
use crate::error::TransformError;
use crate::gadgets::{clamp_u8, ChipKey, QuotientCheck, RegionShape, Synthesizer};
use crate::image::Image;

/// `clamp((sum taps * window + bias) div divisor)`; a divisor of 1 skips the
/// division chip.
pub struct Kernel {
    pub taps: [[i64; 3]; 3],
    pub bias: i64,
    pub divisor: u64,
}

pub const BLUR: Kernel = Kernel { taps: [[1, 2, 1], [2, 4, 2], [1, 2, 1]], bias: 8, divisor: 16 };

pub const SHARPEN: Kernel = Kernel { taps: [[0, -1, 0], [-1, 5, -1], [0, -1, 0]], bias: 0, divisor: 1 };

impl Kernel {
    /// Nonzero taps as `(dx, dy, coefficient)`.
    fn nonzero(&self) -> Vec<(i64, i64, i64)> {
        let mut out = Vec::new();
        for (j, row) in self.taps.iter().enumerate() {
            for (i, k) in row.iter().enumerate() {
                if *k != 0 {
                    out.push((i as i64 - 1, j as i64 - 1, *k));
                }
            }
        }
        out
    }

    /// Range of the value fed to the clamp over all 8-bit windows.
    pub fn clamp_bounds(&self) -> (i64, i64) {
        let flat = self.taps.iter().flatten();
        let lo = flat.clone().map(|k| (k * 255).min(0)).sum::<i64>() + self.bias;
        let hi = flat.map(|k| (k * 255).max(0)).sum::<i64>() + self.bias;
        let d = self.divisor as i64;
        (lo.div_euclid(d), hi.div_euclid(d))
    }
}

fn neighbour((w, h): (u32, u32), x: u32, y: u32, dx: i64, dy: i64) -> (u32, u32) {
    let nx = (x as i64 + dx).clamp(0, w as i64 - 1);
    let ny = (y as i64 + dy).clamp(0, h as i64 - 1);
    (nx as u32, ny as u32)
}

pub(super) fn native(k: &Kernel, img: &Image) -> Image {
    let taps = k.nonzero();
    let dims = img.dims();
    Image::from_fn(dims.0, dims.1, |x, y, c| {
        let s: i64 = taps
            .iter()
            .map(|(dx, dy, t)| {
                let (nx, ny) = neighbour(dims, x, y, *dx, *dy);
                t * img.get(nx, ny, c) as i64
            })
            .sum();
        clamp_u8((s + k.bias).div_euclid(k.divisor as i64)) as u8
    })
}

pub(super) fn shape(k: &Kernel, pixels: usize) -> RegionShape {
    let (lo, hi) = k.clamp_bounds();
    let coeffs = k.nonzero().into_iter().map(|t| t.2).collect();
    let mut chips = vec![(ChipKey::Dot { coeffs, offset: k.bias }, 3)];
    if k.divisor > 1 {
        chips.push((ChipKey::Div { divisor: k.divisor, quotient: QuotientCheck::Unchecked }, 3));
    }
    chips.push((ChipKey::Clamp { lo, hi }, 3));
    RegionShape { name: "convolve".into(), units: pixels, chips }
}

pub(super) fn synth(
    sx: &mut Synthesizer,
    k: &Kernel,
    shape: &RegionShape,
    input: &PixelGrid,
    rows: usize,
) -> Result<PixelGrid, TransformError> {
    let taps = k.nonzero();
    let clamp = shape.chips.len() - 1;
    let dims = input.dims();
    sx.open_region(shape, rows)?;
    let mut cells = Vec::with_capacity(input.cells.len());
    for y in 0..dims.1 {
        for x in 0..dims.0 {
            for c in 0..3 {
                let window: Vec<_> = taps
                    .iter()
                    .map(|(dx, dy, _)| {
                        let (nx, ny) = neighbour(dims, x, y, *dx, *dy);
                        input.cell(nx, ny, c)
                    })
                    .collect();
                let mut v = sx.op_dot(0, &window)?;
                if k.divisor > 1 {
                    v = sx.op_div(1, v)?.0;
                }
                cells.push(sx.op_clamp(clamp, v)?);
            }
        }
    }
    sx.close_region()?;
    Ok(PixelGrid { width: dims.0, height: dims.1, cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds() {
        assert_eq!(BLUR.clamp_bounds(), (0, 255));
        assert_eq!(SHARPEN.clamp_bounds(), (-1020, 1275));
        assert_eq!(SHARPEN.nonzero().len(), 5);
    }

    #[test]
    fn flat_image_is_fixed() {
        let img = Image::filled(4, 3, [7, 100, 250]);
        assert_eq!(native(&BLUR, &img), img);
        assert_eq!(native(&SHARPEN, &img), img);
    }

    #[test]
    fn edges_replicate() {
        // A single bright column at x=0: the blur at (0,0) sees it at dx=-1 and 0.
        let img = Image::from_fn(3, 1, |x, _, _| if x == 0 { 160 } else { 0 });
        let b = native(&BLUR, &img);
        // (1+2+1)*160*... columns: left 4*160 + centre 8*160 + right 0, bias 8, /16
        assert_eq!(b.get(0, 0, 0), ((12 * 160 + 8) / 16) as u8);
        assert_eq!(b.get(1, 0, 0), ((4 * 160 + 8) / 16) as u8);
    }
}
