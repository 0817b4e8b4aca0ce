//! Shared helpers: random transforms and straightforward reference
//! implementations of every transform, written without the library's code.

#![allow(dead_code)]

pub mod poseidon_ref;

use rand::Rng;
use zkimg::gadgets::{SynthConfig, Synthesized, Synthesizer};
use zkimg::transforms::{CensorRegion, CensorShape, FlipAxis, PixelGrid};
use zkimg::ir::{CellRef, CircuitBuilder, CircuitLayout, Expression, WitnessGrid};
use zkimg::{Fe, Image, TransformSpec};

/// The four-column toy system: rows `[a, b | 5 | 0]` and `[a', c | 7 | 1]`,
/// table rows 2 and 3 below. A copy ties `a'` to `a`, a lookup puts `a` in
/// the table column and a gate enforces `col0 + col1 = col2` on rows 0 and 1.
pub fn toy_circuit(a: u64, b: u64, a2: u64, c: u64) -> (CircuitLayout, WitnessGrid, Vec<Fe>) {
    let mut bld = CircuitBuilder::new(3).unwrap();
    let (x, y) = (bld.advice_column(), bld.advice_column());
    let public = bld.instance_column();
    let table = bld.fixed_column();
    for (row, v) in [(0, a), (1, a2)] {
        bld.assign_advice(CellRef::new(row, x), Fe::from_u64(v)).unwrap();
    }
    bld.assign_advice(CellRef::new(0, y), Fe::from_u64(b)).unwrap();
    bld.assign_advice(CellRef::new(1, y), Fe::from_u64(c)).unwrap();
    for v in 0..4 {
        bld.assign_fixed(CellRef::new(v, table), Fe::from_u64(v as u64)).unwrap();
    }
    bld.expose_instance(public).unwrap();
    bld.expose_instance(public).unwrap();
    bld.add_copy(CellRef::new(0, x), CellRef::new(1, x)).unwrap();
    let l = bld.add_lookup("a in 0..3", vec![Expression::cur(x.index)], &[table]).unwrap();
    bld.enable_lookup(l, 0).unwrap();
    let g = bld
        .add_gate("sum", vec![Expression::cur(x.index) + Expression::cur(y.index) - Expression::cur(public.index)])
        .unwrap();
    bld.enable_gate_rows(g, 0..2).unwrap();
    let (layout, witness) = bld.finalize_with_witness();
    (layout, witness, vec![Fe::from_u64(5), Fe::from_u64(7)])
}

pub fn random_image(rng: &mut impl Rng, w: u32, h: u32) -> Image {
    let data = (0..w as usize * h as usize * 3).map(|_| rng.gen()).collect();
    Image::new(w, h, data).unwrap()
}

fn region(rng: &mut impl Rng, (w, h): (u32, u32)) -> CensorRegion {
    let rw = rng.gen_range(1..=w);
    let rh = rng.gen_range(1..=h);
    CensorRegion {
        shape: if rng.gen() { CensorShape::Rect } else { CensorShape::Oval },
        x: rng.gen_range(0..=w - rw),
        y: rng.gen_range(0..=h - rh),
        w: rw,
        h: rh,
    }
}

/// A random valid instance of the transform called `name` for an input of `dims`.
pub fn random_transform(rng: &mut impl Rng, name: &str, (w, h): (u32, u32)) -> TransformSpec {
    match name {
        "crop" => {
            let cw = rng.gen_range(1..=w);
            let ch = rng.gen_range(1..=h);
            TransformSpec::Crop { x: rng.gen_range(0..=w - cw), y: rng.gen_range(0..=h - ch), w: cw, h: ch }
        }
        "rotate" => TransformSpec::Rotate { degrees: [90, 180, 270][rng.gen_range(0..3)] },
        "flip" => TransformSpec::Flip { axis: if rng.gen() { FlipAxis::Horizontal } else { FlipAxis::Vertical } },
        "translate" => TransformSpec::Translate {
            dx: rng.gen_range(-(w as i64)..=w as i64),
            dy: rng.gen_range(-(h as i64)..=h as i64),
        },
        "resize" => TransformSpec::Resize { w: rng.gen_range(1..=2 * w), h: rng.gen_range(1..=2 * h) },
        "censor" => {
            let n = rng.gen_range(1..=3);
            TransformSpec::Censor { regions: (0..n).map(|_| region(rng, (w, h))).collect() }
        }
        "rgb2ycbcr" => TransformSpec::Rgb2YCbCr,
        "ycbcr2rgb" => TransformSpec::YCbCr2Rgb,
        "whitebalance" => TransformSpec::WhiteBalance { gains: std::array::from_fn(|_| rng.gen_range(0.0..2.5)) },
        "contrast" => TransformSpec::Contrast { factor: rng.gen_range(-1.0..3.0) },
        "sharpen" => TransformSpec::Sharpen,
        "blur" => TransformSpec::Blur,
        other => panic!("unknown transform {other}"),
    }
}

fn round_clip(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

fn fixed(c: f64) -> i64 {
    (c * 32768.0).round() as i64
}

fn affine(m: [[f64; 3]; 3], shift: [f64; 3], px: [u8; 3]) -> [u8; 3] {
    std::array::from_fn(|i| {
        let mut acc = 16384i64 + fixed(shift[i]);
        for j in 0..3 {
            acc += fixed(m[i][j]) * px[j] as i64;
        }
        acc.div_euclid(32768).clamp(0, 255) as u8
    })
}

fn pixel(img: &Image, x: i64, y: i64) -> [u8; 3] {
    img.pixel(x as u32, y as u32)
}

/// What `t` does to `img`, computed directly from the transform definitions.
pub fn reference(t: &TransformSpec, img: &Image) -> Image {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let per_pixel = |f: &dyn Fn([u8; 3]) -> [u8; 3]| {
        let mut out = img.clone();
        for y in 0..h {
            for x in 0..w {
                let v = f(pixel(img, x, y));
                for c in 0..3 {
                    let i = out.index(x as u32, y as u32, c);
                    out.data_mut()[i] = v[c];
                }
            }
        }
        out
    };
    let remap = |ow: i64, oh: i64, src: &dyn Fn(i64, i64) -> Option<(i64, i64)>| {
        let mut data = Vec::with_capacity((ow * oh * 3) as usize);
        for y in 0..oh {
            for x in 0..ow {
                data.extend_from_slice(&src(x, y).map_or([0; 3], |(sx, sy)| pixel(img, sx, sy)));
            }
        }
        Image::new(ow as u32, oh as u32, data).unwrap()
    };
    let convolve = |k: [[i64; 3]; 3], bias: i64, div: i64| {
        Image::from_fn(w as u32, h as u32, |x, y, c| {
            let mut acc = bias;
            for (j, row) in k.iter().enumerate() {
                for (i, kv) in row.iter().enumerate() {
                    let sx = (x as i64 + i as i64 - 1).max(0).min(w - 1);
                    let sy = (y as i64 + j as i64 - 1).max(0).min(h - 1);
                    acc += kv * img.get(sx as u32, sy as u32, c) as i64;
                }
            }
            acc.div_euclid(div).clamp(0, 255) as u8
        })
    };
    match t {
        TransformSpec::Crop { x, y, w: cw, h: ch } => {
            remap(*cw as i64, *ch as i64, &|ox, oy| Some((ox + *x as i64, oy + *y as i64)))
        }
        TransformSpec::Rotate { degrees } => {
            // Clockwise quarter turns, each one a transpose followed by a
            // horizontal mirror.
            let mut cur = img.clone();
            for _ in 0..degrees / 90 {
                let (cw, chh) = (cur.width(), cur.height());
                let src = cur.clone();
                cur = Image::from_fn(chh, cw, |x, y, c| src.get(y, chh - 1 - x, c));
            }
            cur
        }
        TransformSpec::Flip { axis: FlipAxis::Horizontal } => remap(w, h, &|x, y| Some((w - 1 - x, y))),
        TransformSpec::Flip { axis: FlipAxis::Vertical } => remap(w, h, &|x, y| Some((x, h - 1 - y))),
        TransformSpec::Translate { dx, dy } => remap(w, h, &|x, y| {
            let (sx, sy) = (x - dx, y - dy);
            ((0..w).contains(&sx) && (0..h).contains(&sy)).then_some((sx, sy))
        }),
        TransformSpec::Resize { w: rw, h: rh } => {
            let (rw, rh) = (*rw as i64, *rh as i64);
            remap(rw, rh, &|x, y| Some(((x * w) / rw, (y * h) / rh)))
        }
        TransformSpec::Censor { regions } => remap(w, h, &|x, y| {
            let hidden = regions.iter().any(|r| {
                let (rx, ry, rw, rh) = (r.x as i64, r.y as i64, r.w as i64, r.h as i64);
                let in_box = x >= rx && x < rx + rw && y >= ry && y < ry + rh;
                match r.shape {
                    CensorShape::Rect => in_box,
                    CensorShape::Oval => {
                        // Pixel centre against the inscribed ellipse, scaled by 2 to stay integral.
                        let ex = (2 * x + 1 - 2 * rx - rw) as i128;
                        let ey = (2 * y + 1 - 2 * ry - rh) as i128;
                        let (a2, b2) = ((rw * rw) as i128, (rh * rh) as i128);
                        in_box && ex * ex * b2 + ey * ey * a2 <= a2 * b2
                    }
                }
            });
            (!hidden).then_some((x, y))
        }),
        TransformSpec::Rgb2YCbCr => per_pixel(&|p| {
            affine(
                [[0.299, 0.587, 0.114], [-0.168736, -0.331264, 0.5], [0.5, -0.418688, -0.081312]],
                [0.0, 128.0, 128.0],
                p,
            )
        }),
        TransformSpec::YCbCr2Rgb => per_pixel(&|p| {
            let m = [[1.0, 0.0, 1.402], [1.0, -0.344136, -0.714136], [1.0, 1.772, 0.0]];
            // The -128 chroma shift uses the rounded coefficients.
            let shift = std::array::from_fn(|i| -128.0 * (fixed(m[i][1]) + fixed(m[i][2])) as f64 / 32768.0);
            affine(m, shift, p)
        }),
        TransformSpec::WhiteBalance { gains } => per_pixel(&|p| std::array::from_fn(|c| round_clip(gains[c] * p[c] as f64))),
        TransformSpec::Contrast { factor } => {
            per_pixel(&|p| p.map(|v| round_clip(128.0 + factor * (v as f64 - 128.0))))
        }
        TransformSpec::Sharpen => convolve([[0, -1, 0], [-1, 5, -1], [0, -1, 0]], 0, 1),
        TransformSpec::Blur => convolve([[1, 2, 1], [2, 4, 2], [1, 2, 1]], 8, 16),
    }
}

/// Synthesizes `t` over unconstrained input cells holding `img` and returns
/// the circuit together with the output grid.
pub fn synthesize_alone(t: &TransformSpec, img: &Image, k: usize) -> (Synthesized, PixelGrid, Vec<u8>) {
    let mut sx = Synthesizer::new(SynthConfig::default()).unwrap();
    let cells = img.data().iter().map(|b| sx.free_cell(Fe::from_u64(*b as u64)).unwrap()).collect();
    let grid = PixelGrid { width: img.width(), height: img.height(), cells };
    let ks = vec![k; t.shapes(img.dims()).unwrap().len()];
    let out = t.synthesize(&mut sx, &grid, &ks).unwrap();
    let bytes = out.cells.iter().map(|c| u8::try_from(sx.value(*c).to_u64().unwrap()).unwrap()).collect();
    (sx.finish().unwrap(), out, bytes)
}
