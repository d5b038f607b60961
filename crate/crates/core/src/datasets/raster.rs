//! 8-bit RGB rasters and the binary P6 portable pixmap container.

use std::fs;
use std::path::Path;

use crate::error::{F2sError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    /// Row-major RGB triples.
    pixels: Vec<[u8; 3]>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(F2sError::data("image must be at least 1x1"));
        }
        if pixels.len() != width * height {
            return Err(F2sError::data(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(RasterImage { width, height, pixels })
    }

    pub fn solid(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        RasterImage::new(width, height, vec![rgb; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> [u8; 3]) -> Result<Self> {
        let pixels = (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
        RasterImage::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn flip_horizontal(&self) -> Self {
        RasterImage::from_fn(self.width, self.height, |x, y| self.pixel(self.width - 1 - x, y))
            .expect("same dimensions")
    }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Option<&[u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self) -> Option<usize> {
        std::str::from_utf8(self.token()?).ok()?.parse().ok()
    }
}

pub fn decode_p6(bytes: &[u8], path: &Path) -> Result<RasterImage> {
    let err = |offset: usize, message: &str| F2sError::Format {
        path: path.to_path_buf(),
        offset: offset as u64,
        message: message.to_string(),
    };
    let mut cur = HeaderCursor { bytes, pos: 0 };
    if cur.token() != Some(b"P6") {
        return Err(err(0, "not a binary P6 pixmap"));
    }
    let width = cur.number().ok_or_else(|| err(cur.pos, "bad width"))?;
    let height = cur.number().ok_or_else(|| err(cur.pos, "bad height"))?;
    let maxval = cur.number().ok_or_else(|| err(cur.pos, "bad maxval"))?;
    if maxval != 255 {
        return Err(err(cur.pos, "only maxval 255 is supported"));
    }
    // exactly one whitespace byte separates the header from the raster
    if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
        return Err(err(cur.pos, "missing separator after maxval"));
    }
    let data = &bytes[cur.pos + 1..];
    let need = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| err(0, "image dimensions overflow"))?;
    if data.len() < need {
        return Err(err(bytes.len(), "truncated pixel data"));
    }
    let pixels = data[..need].chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    RasterImage::new(width, height, pixels).map_err(|_| err(0, "image must be at least 1x1"))
}

pub fn encode_p6(img: &RasterImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    for p in &img.pixels {
        out.extend_from_slice(p);
    }
    out
}

pub fn read_p6(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| F2sError::io(path, e))?;
    decode_p6(&bytes, path)
}

pub fn write_p6(path: impl AsRef<Path>, img: &RasterImage) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_p6(img)).map_err(|e| F2sError::io(path, e))
}
