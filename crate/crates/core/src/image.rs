//! 8-bit RGB rasters and their binary PPM (P6) encoding.

use crate::error::ImageError;

/// Row-major, channel-interleaved RGB raster.
#[derive(Clone, PartialEq, Eq)]
pub struct Image {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl std::fmt::Debug for Image {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Image({}x{})", self.width, self.height)
    }
}

impl Image {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Image, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::Invalid(format!("zero dimension {width}x{height}")));
        }
        let want = width as usize * height as usize * 3;
        if data.len() != want {
            return Err(ImageError::Invalid(format!("{} sub-pixels for a {width}x{height} image", data.len())));
        }
        Ok(Image { width, height, data })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Image {
        let data = rgb.iter().copied().cycle().take(width as usize * height as usize * 3).collect();
        Image { width, height, data }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32, usize) -> u8) -> Image {
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for y in 0..height {
            for x in 0..width {
                for c in 0..3 {
                    data.push(f(x, y, c));
                }
            }
        }
        Image { width, height, data }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn index(&self, x: u32, y: u32, c: usize) -> usize {
        (y as usize * self.width as usize + x as usize) * 3 + c
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32, c: usize) -> u8 {
        self.data[self.index(x, y, c)]
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = self.index(x, y, 0);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }
}

/// Canonical writer: `P6\n{w} {h}\n255\n` followed by the raster.
pub fn save_ppm(img: &Image) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.data);
    out
}

pub fn load_ppm(bytes: &[u8]) -> Result<Image, ImageError> {
    let mut pos = 0;
    let magic = header_token(bytes, &mut pos)?;
    if magic != b"P6" {
        return Err(ImageError::MalformedHeader(format!("magic {:?}", String::from_utf8_lossy(magic))));
    }
    let width = header_number(bytes, &mut pos, "width")?;
    let height = header_number(bytes, &mut pos, "height")?;
    let maxval = header_number(bytes, &mut pos, "maxval")?;
    if maxval != 255 {
        return Err(ImageError::UnsupportedMaxval(maxval));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(ImageError::MalformedHeader("missing separator after maxval".into())),
    }
    if width == 0 || height == 0 {
        return Err(ImageError::MalformedHeader(format!("zero dimension {width}x{height}")));
    }
    let expected = (width as usize)
        .checked_mul(height as usize)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| ImageError::MalformedHeader("dimensions overflow".into()))?;
    let payload = &bytes[pos..];
    if payload.len() < expected {
        return Err(ImageError::TruncatedPayload { expected, found: payload.len() });
    }
    if payload.len() > expected {
        return Err(ImageError::Invalid(format!("{} trailing bytes", payload.len() - expected)));
    }
    Image::new(width, height, payload.to_vec())
}

fn skip_space_and_comments(bytes: &[u8], pos: &mut usize) {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            return;
        }
    }
}

fn header_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8], ImageError> {
    skip_space_and_comments(bytes, pos);
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
        *pos += 1;
    }
    if start == *pos {
        return Err(ImageError::MalformedHeader("unexpected end of header".into()));
    }
    Ok(&bytes[start..*pos])
}

fn header_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<u32, ImageError> {
    let tok = header_token(bytes, pos)?;
    std::str::from_utf8(tok)
        .ok()
        .filter(|s| s.bytes().all(|b| b.is_ascii_digit()))
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| ImageError::MalformedHeader(format!("bad {what} {:?}", String::from_utf8_lossy(tok))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_pixel_encoding() {
        let img = Image::filled(1, 1, [0, 0, 0]);
        let bytes = save_ppm(&img);
        assert_eq!(bytes.len(), 11 + 3);
        assert_eq!(&bytes[..11], b"P6\n1 1\n255\n");
        assert_eq!(load_ppm(&bytes).unwrap(), img);
    }

    #[test]
    fn header_errors() {
        assert!(matches!(load_ppm(b"P6\n2 2\n65535\n"), Err(ImageError::UnsupportedMaxval(65535))));
        assert!(matches!(load_ppm(b"P3\n1 1\n255\n"), Err(ImageError::MalformedHeader(_))));
        assert!(matches!(
            load_ppm(b"P6\n2 1\n255\n\x01\x02"),
            Err(ImageError::TruncatedPayload { expected: 6, found: 2 })
        ));
        let commented = b"P6 # a comment\n1 1\n255\n\x01\x02\x03";
        assert_eq!(load_ppm(commented).unwrap().data(), &[1, 2, 3]);
    }
}
