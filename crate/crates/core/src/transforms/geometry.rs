//! Pure-copy transforms. Each output pixel is either an input pixel or black,
//! so the circuit only re-points cells and adds no constraints.

use super::{FlipAxis, PixelGrid, TransformSpec};
use crate::gadgets::Synthesizer;
use crate::image::Image;

/// Input pixel feeding output pixel `(x, y)`, or `None` for black.
fn source(t: &TransformSpec, (w, h): (u32, u32), x: u32, y: u32) -> Option<(u32, u32)> {
    match t {
        TransformSpec::Crop { x: cx, y: cy, .. } => Some((cx + x, cy + y)),
        TransformSpec::Rotate { degrees: 90 } => Some((y, h - 1 - x)),
        TransformSpec::Rotate { degrees: 180 } => Some((w - 1 - x, h - 1 - y)),
        TransformSpec::Rotate { .. } => Some((w - 1 - y, x)),
        TransformSpec::Flip { axis: FlipAxis::Horizontal } => Some((w - 1 - x, y)),
        TransformSpec::Flip { axis: FlipAxis::Vertical } => Some((x, h - 1 - y)),
        TransformSpec::Translate { dx, dy } => {
            let (sx, sy) = (x as i64 - dx, y as i64 - dy);
            (sx >= 0 && sy >= 0 && sx < w as i64 && sy < h as i64).then_some((sx as u32, sy as u32))
        }
        TransformSpec::Resize { w: rw, h: rh } => {
            Some(((x as u64 * w as u64 / *rw as u64) as u32, (y as u64 * h as u64 / *rh as u64) as u32))
        }
        TransformSpec::Censor { regions } => (!regions.iter().any(|r| r.contains(x, y))).then_some((x, y)),
        _ => unreachable!("not a copy transform"),
    }
}

pub(super) fn native(t: &TransformSpec, img: &Image, (ow, oh): (u32, u32)) -> Image {
    let dims = img.dims();
    let mut data = vec![0u8; ow as usize * oh as usize * 3];
    for y in 0..oh {
        for x in 0..ow {
            if let Some((sx, sy)) = source(t, dims, x, y) {
                let o = (y as usize * ow as usize + x as usize) * 3;
                data[o..o + 3].copy_from_slice(&img.pixel(sx, sy));
            }
        }
    }
    Image::new(ow, oh, data).expect("dimensions validated")
}

pub(super) fn synth(t: &TransformSpec, sx: &mut Synthesizer, input: &PixelGrid, (ow, oh): (u32, u32)) -> PixelGrid {
    let zero = sx.zero();
    let mut cells = Vec::with_capacity(ow as usize * oh as usize * 3);
    for y in 0..oh {
        for x in 0..ow {
            match source(t, input.dims(), x, y) {
                Some((ix, iy)) => cells.extend((0..3).map(|c| input.cell(ix, iy, c))),
                None => cells.extend([zero; 3]),
            }
        }
    }
    PixelGrid { width: ow, height: oh, cells }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img() -> Image {
        Image::from_fn(3, 2, |x, y, c| (10 * y + x) as u8 + c as u8 * 100)
    }

    #[test]
    fn rotate_clockwise() {
        let r = TransformSpec::Rotate { degrees: 90 }.apply_native(&img()).unwrap();
        assert_eq!(r.dims(), (2, 3));
        // top-left moves to top-right
        assert_eq!(r.get(1, 0, 0), img().get(0, 0, 0));
        assert_eq!(r.get(0, 0, 0), img().get(0, 1, 0));
        let back = TransformSpec::Rotate { degrees: 270 }.apply_native(&r).unwrap();
        assert_eq!(back, img());
    }

    #[test]
    fn translate_fills_black() {
        let t = TransformSpec::Translate { dx: 1, dy: 0 }.apply_native(&img()).unwrap();
        assert_eq!(t.pixel(0, 0), [0, 0, 0]);
        assert_eq!(t.pixel(1, 1), img().pixel(0, 1));
    }

    #[test]
    fn resize_nearest() {
        let r = TransformSpec::Resize { w: 6, h: 1 }.apply_native(&img()).unwrap();
        let row: Vec<u8> = (0..6).map(|x| r.get(x, 0, 0)).collect();
        assert_eq!(row, vec![0, 0, 1, 1, 2, 2]);
    }
}
