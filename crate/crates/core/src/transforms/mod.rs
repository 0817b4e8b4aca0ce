//! The twelve image transforms: parameters, canonical text form, native
//! reference semantics and circuit synthesis.

mod color;
mod convolve;
mod geometry;
pub(crate) mod parse;

use std::fmt;

use crate::error::TransformError;
use crate::gadgets::{RegionShape, Synthesizer};
use crate::image::Image;
use crate::ir::CellRef;

pub use color::{contrast_table, white_balance_table, FORWARD, INVERSE, SCALE};
pub use convolve::{BLUR, SHARPEN};
pub use parse::ParseError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FlipAxis {
    Horizontal,
    Vertical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CensorShape {
    Rect,
    Oval,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CensorRegion {
    pub shape: CensorShape,
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl CensorRegion {
    /// Rectangles cover their box; ovals cover pixels whose centre lies in
    /// the inscribed ellipse.
    pub fn contains(&self, px: u32, py: u32) -> bool {
        let inside_box = px >= self.x && py >= self.y && px < self.x + self.w && py < self.y + self.h;
        match self.shape {
            CensorShape::Rect => inside_box,
            CensorShape::Oval => {
                if !inside_box {
                    return false;
                }
                let (w, h) = (self.w as i128, self.h as i128);
                let dx = 2 * px as i128 + 1 - (2 * self.x as i128 + w);
                let dy = 2 * py as i128 + 1 - (2 * self.y as i128 + h);
                dx * dx * h * h + dy * dy * w * w <= w * w * h * h
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TransformSpec {
    Crop { x: u32, y: u32, w: u32, h: u32 },
    /// Clockwise, in degrees: 90, 180 or 270.
    Rotate { degrees: u32 },
    Flip { axis: FlipAxis },
    Translate { dx: i64, dy: i64 },
    Resize { w: u32, h: u32 },
    Censor { regions: Vec<CensorRegion> },
    Rgb2YCbCr,
    YCbCr2Rgb,
    WhiteBalance { gains: [f64; 3] },
    Contrast { factor: f64 },
    Sharpen,
    Blur,
}

/// The circuit-side image: one cell per sub-pixel, row-major RGB.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PixelGrid {
    pub width: u32,
    pub height: u32,
    pub cells: Vec<CellRef>,
}

impl PixelGrid {
    pub fn cell(&self, x: u32, y: u32, c: usize) -> CellRef {
        self.cells[(y as usize * self.width as usize + x as usize) * 3 + c]
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }
}

const MAX_DIM: u32 = 1 << 15;

impl TransformSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TransformSpec::Crop { .. } => "crop",
            TransformSpec::Rotate { .. } => "rotate",
            TransformSpec::Flip { .. } => "flip",
            TransformSpec::Translate { .. } => "translate",
            TransformSpec::Resize { .. } => "resize",
            TransformSpec::Censor { .. } => "censor",
            TransformSpec::Rgb2YCbCr => "rgb2ycbcr",
            TransformSpec::YCbCr2Rgb => "ycbcr2rgb",
            TransformSpec::WhiteBalance { .. } => "whitebalance",
            TransformSpec::Contrast { .. } => "contrast",
            TransformSpec::Sharpen => "sharpen",
            TransformSpec::Blur => "blur",
        }
    }

    /// Every transform name accepted in pipeline files.
    pub const NAMES: [&'static str; 12] = [
        "crop",
        "rotate",
        "flip",
        "translate",
        "resize",
        "censor",
        "rgb2ycbcr",
        "ycbcr2rgb",
        "whitebalance",
        "contrast",
        "sharpen",
        "blur",
    ];

    /// Transforms that only rearrange or zero cells.
    pub fn is_pure_copy(&self) -> bool {
        matches!(
            self,
            TransformSpec::Crop { .. }
                | TransformSpec::Rotate { .. }
                | TransformSpec::Flip { .. }
                | TransformSpec::Translate { .. }
                | TransformSpec::Resize { .. }
                | TransformSpec::Censor { .. }
        )
    }

    fn invalid(&self, detail: impl Into<String>) -> TransformError {
        TransformError::InvalidParams { kind: self.name(), detail: detail.into() }
    }

    /// Checks the parameters against an input of `(w, h)` and returns the
    /// output dimensions.
    pub fn output_dims(&self, (w, h): (u32, u32)) -> Result<(u32, u32), TransformError> {
        match self {
            TransformSpec::Crop { x, y, w: cw, h: ch } => {
                if *cw == 0 || *ch == 0 {
                    return Err(self.invalid("crop size must be positive"));
                }
                if *x as u64 + *cw as u64 > w as u64 || *y as u64 + *ch as u64 > h as u64 {
                    return Err(self.invalid(format!("rectangle {cw}x{ch} at ({x},{y}) exceeds {w}x{h}")));
                }
                Ok((*cw, *ch))
            }
            TransformSpec::Rotate { degrees } => match degrees {
                90 | 270 => Ok((h, w)),
                180 => Ok((w, h)),
                d => Err(self.invalid(format!("rotation must be 90, 180 or 270 degrees, not {d}"))),
            },
            TransformSpec::Translate { dx, dy } => {
                if dx.unsigned_abs() > w as u64 || dy.unsigned_abs() > h as u64 {
                    return Err(self.invalid(format!("offset ({dx},{dy}) exceeds {w}x{h}")));
                }
                Ok((w, h))
            }
            TransformSpec::Resize { w: rw, h: rh } => {
                if *rw == 0 || *rh == 0 || *rw > MAX_DIM || *rh > MAX_DIM {
                    return Err(self.invalid(format!("target size {rw}x{rh} is not allowed")));
                }
                Ok((*rw, *rh))
            }
            TransformSpec::Censor { regions } => {
                if regions.is_empty() {
                    return Err(self.invalid("no regions"));
                }
                for r in regions {
                    if r.w == 0 || r.h == 0 {
                        return Err(self.invalid("region size must be positive"));
                    }
                    if r.x as u64 + r.w as u64 > w as u64 || r.y as u64 + r.h as u64 > h as u64 {
                        return Err(self.invalid(format!("region {}x{} at ({},{}) exceeds {w}x{h}", r.w, r.h, r.x, r.y)));
                    }
                }
                Ok((w, h))
            }
            TransformSpec::WhiteBalance { gains } => {
                if gains.iter().any(|g| !g.is_finite() || *g < 0.0) {
                    return Err(self.invalid("gains must be finite and nonnegative"));
                }
                Ok((w, h))
            }
            TransformSpec::Contrast { factor } => {
                if !factor.is_finite() {
                    return Err(self.invalid("factor must be finite"));
                }
                Ok((w, h))
            }
            TransformSpec::Flip { .. }
            | TransformSpec::Rgb2YCbCr
            | TransformSpec::YCbCr2Rgb
            | TransformSpec::Sharpen
            | TransformSpec::Blur => Ok((w, h)),
        }
    }

    /// Reference semantics; circuit synthesis must reproduce them exactly.
    pub fn apply_native(&self, img: &Image) -> Result<Image, TransformError> {
        let out = self.output_dims(img.dims())?;
        Ok(match self {
            TransformSpec::Rgb2YCbCr => color::colorspace_native(&FORWARD, img),
            TransformSpec::YCbCr2Rgb => color::colorspace_native(&INVERSE, img),
            TransformSpec::WhiteBalance { gains } => {
                let tables = gains.map(white_balance_table);
                color::map_native(img, &tables)
            }
            TransformSpec::Contrast { factor } => {
                let t = contrast_table(*factor);
                color::map_native(img, &[t.clone(), t.clone(), t])
            }
            TransformSpec::Sharpen => convolve::native(&SHARPEN, img),
            TransformSpec::Blur => convolve::native(&BLUR, img),
            _ => geometry::native(self, img, out),
        })
    }

    /// Regions the circuit for this transform needs on an input of `dims`.
    pub fn shapes(&self, dims: (u32, u32)) -> Result<Vec<RegionShape>, TransformError> {
        self.output_dims(dims)?;
        let pixels = dims.0 as usize * dims.1 as usize;
        Ok(match self {
            TransformSpec::Rgb2YCbCr => vec![color::colorspace_shape(&FORWARD, pixels)],
            TransformSpec::YCbCr2Rgb => vec![color::colorspace_shape(&INVERSE, pixels)],
            TransformSpec::WhiteBalance { gains } => vec![color::map_shape("whitebalance", &gains.map(white_balance_table), pixels)],
            TransformSpec::Contrast { factor } => {
                let t = contrast_table(*factor);
                vec![color::map_shape("contrast", &[t.clone(), t.clone(), t], pixels)]
            }
            TransformSpec::Sharpen => vec![convolve::shape(&SHARPEN, pixels)],
            TransformSpec::Blur => vec![convolve::shape(&BLUR, pixels)],
            _ => vec![],
        })
    }

    /// Synthesizes the transform over `input`. `ks` holds one row-packing
    /// factor per region returned by [`TransformSpec::shapes`].
    pub fn synthesize(&self, sx: &mut Synthesizer, input: &PixelGrid, ks: &[usize]) -> Result<PixelGrid, TransformError> {
        let out = self.output_dims(input.dims())?;
        let shapes = self.shapes(input.dims())?;
        let k = |i: usize| ks.get(i).copied().unwrap_or(1);
        match self {
            TransformSpec::Rgb2YCbCr => color::colorspace_synth(sx, &FORWARD, &shapes[0], input, k(0)),
            TransformSpec::YCbCr2Rgb => color::colorspace_synth(sx, &INVERSE, &shapes[0], input, k(0)),
            TransformSpec::WhiteBalance { gains } => {
                color::map_synth(sx, &shapes[0], &gains.map(white_balance_table), input, k(0))
            }
            TransformSpec::Contrast { factor } => {
                let t = contrast_table(*factor);
                color::map_synth(sx, &shapes[0], &[t.clone(), t.clone(), t], input, k(0))
            }
            TransformSpec::Sharpen => convolve::synth(sx, &SHARPEN, &shapes[0], input, k(0)),
            TransformSpec::Blur => convolve::synth(sx, &BLUR, &shapes[0], input, k(0)),
            _ => Ok(geometry::synth(self, sx, input, out)),
        }
    }
}

fn fmt_float(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        write!(f, "{v:.1}")
    } else {
        write!(f, "{v}")
    }
}

/// Canonical pipeline-file form.
impl fmt::Display for TransformSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformSpec::Crop { x, y, w, h } => write!(f, "crop x={x} y={y} w={w} h={h}"),
            TransformSpec::Rotate { degrees } => write!(f, "rotate deg={degrees}"),
            TransformSpec::Flip { axis } => match axis {
                FlipAxis::Horizontal => write!(f, "flip axis=horizontal"),
                FlipAxis::Vertical => write!(f, "flip axis=vertical"),
            },
            TransformSpec::Translate { dx, dy } => write!(f, "translate dx={dx} dy={dy}"),
            TransformSpec::Resize { w, h } => write!(f, "resize w={w} h={h}"),
            TransformSpec::Censor { regions } => {
                write!(f, "censor")?;
                for r in regions {
                    let s = match r.shape {
                        CensorShape::Rect => "rect",
                        CensorShape::Oval => "oval",
                    };
                    write!(f, " {s} x={} y={} w={} h={}", r.x, r.y, r.w, r.h)?;
                }
                Ok(())
            }
            TransformSpec::WhiteBalance { gains } => {
                write!(f, "whitebalance r=")?;
                fmt_float(f, gains[0])?;
                write!(f, " g=")?;
                fmt_float(f, gains[1])?;
                write!(f, " b=")?;
                fmt_float(f, gains[2])
            }
            TransformSpec::Contrast { factor } => {
                write!(f, "contrast f=")?;
                fmt_float(f, *factor)
            }
            _ => write!(f, "{}", self.name()),
        }
    }
}

impl std::str::FromStr for TransformSpec {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<TransformSpec, ParseError> {
        parse::parse_transform(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oval_rasterization() {
        let r = CensorRegion { shape: CensorShape::Oval, x: 0, y: 0, w: 5, h: 3 };
        let rows: Vec<String> =
            (0..3).map(|y| (0..5).map(|x| if r.contains(x, y) { '#' } else { '.' }).collect()).collect();
        assert_eq!(rows, vec![".###.", "#####", ".###."]);
        let dot = CensorRegion { shape: CensorShape::Oval, x: 2, y: 2, w: 1, h: 1 };
        assert!(dot.contains(2, 2) && !dot.contains(3, 2));
    }

    #[test]
    fn text_round_trip() {
        let specs = [
            TransformSpec::Crop { x: 100, y: 50, w: 720, h: 480 },
            TransformSpec::Contrast { factor: 2.0 },
            TransformSpec::WhiteBalance { gains: [1.1, 1.0, 0.85] },
            TransformSpec::Censor {
                regions: vec![
                    CensorRegion { shape: CensorShape::Rect, x: 1, y: 2, w: 3, h: 4 },
                    CensorRegion { shape: CensorShape::Oval, x: 5, y: 6, w: 7, h: 8 },
                ],
            },
            TransformSpec::Flip { axis: FlipAxis::Vertical },
            TransformSpec::Translate { dx: -3, dy: 4 },
            TransformSpec::Blur,
        ];
        for s in specs {
            let text = s.to_string();
            assert_eq!(text.parse::<TransformSpec>().unwrap(), s, "{text}");
        }
    }

    #[test]
    fn contrast_examples() {
        let img = Image::from_fn(4, 2, |x, y, c| (x * 60 + y * 7 + c as u32) as u8);
        assert_eq!(TransformSpec::Contrast { factor: 1.0 }.apply_native(&img).unwrap(), img);
        let t = contrast_table(2.0);
        assert_eq!((t[100], t[200]), (72, 255));
    }

    #[test]
    fn rejects_bad_params() {
        let crop = TransformSpec::Crop { x: 10, y: 0, w: 60, h: 10 };
        assert!(crop.output_dims((64, 48)).is_err());
        assert!(TransformSpec::Rotate { degrees: 45 }.output_dims((4, 4)).is_err());
        assert!(TransformSpec::Resize { w: 0, h: 3 }.output_dims((4, 4)).is_err());
    }

    fn synth_matches_native(t: &TransformSpec, img: &Image) {
        use crate::field::Fe;
        use crate::gadgets::SynthConfig;
        let mut sx = Synthesizer::new(SynthConfig::default()).unwrap();
        let cells = img.data().iter().map(|b| sx.free_cell(Fe::from_u64(*b as u64)).unwrap()).collect();
        let grid = PixelGrid { width: img.width(), height: img.height(), cells };
        for k in [1, 2, 3] {
            let ks = vec![k; t.shapes(img.dims()).unwrap().len()];
            let out = t.synthesize(&mut sx, &grid, &ks).unwrap();
            let want = t.apply_native(img).unwrap();
            let got: Vec<u8> = out.cells.iter().map(|c| sx.value(*c).to_u64().unwrap() as u8).collect();
            assert_eq!(got, want.data(), "{t} k={k}");
        }
        let s = sx.finish().unwrap();
        let report = crate::ir::check_constraints(&s.layout, &s.witness, &s.instance).unwrap();
        assert!(report.satisfied, "{t}: {:?}", report.violations.first());
    }

    #[test]
    fn circuits_match_native() {
        let img = Image::from_fn(5, 4, |x, y, c| ((x * 53 + y * 91 + c as u32 * 37) % 256) as u8);
        for line in [
            "rgb2ycbcr",
            "ycbcr2rgb",
            "blur",
            "sharpen",
            "contrast f=1.7",
            "whitebalance r=1.2 g=1.0 b=1.2",
            "crop x=1 y=1 w=3 h=2",
            "rotate deg=270",
            "translate dx=-2 dy=1",
            "resize w=7 h=3",
            "censor oval x=0 y=0 w=4 h=3",
        ] {
            synth_matches_native(&line.parse().unwrap(), &img);
        }
    }
}
