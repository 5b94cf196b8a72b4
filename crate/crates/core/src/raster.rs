//! Owned pixel buffers and the PNG/JPEG boundary.

use std::io::Cursor;

use image::{ImageFormat, ImageReader, Limits, RgbaImage};

use crate::color::Rgb;
use crate::error::{Error, Result};

/// Largest side accepted by [`RasterImage::decode`].
pub const MAX_DECODE_DIM: u32 = 4096;

/// Row-major RGBA, 8 bits per channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image must have at least one pixel"));
        }
        let expected = width as usize * height as usize * 4;
        if pixels.len() != expected {
            return Err(Error::invalid(format!(
                "pixel buffer holds {} bytes, {width}x{height} RGBA needs {expected}",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: u32, height: u32, rgba: [u8; 4]) -> Result<Self> {
        let n = width as usize * height as usize;
        Self::new(width, height, rgba.repeat(n))
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 4]) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width as usize * height as usize * 4);
        for y in 0..height {
            for x in 0..width {
                pixels.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 4] {
        let i = (y as usize * self.width as usize + x as usize) * 4;
        [
            self.pixels[i],
            self.pixels[i + 1],
            self.pixels[i + 2],
            self.pixels[i + 3],
        ]
    }

    pub fn put(&mut self, x: u32, y: u32, rgba: [u8; 4]) {
        let i = (y as usize * self.width as usize + x as usize) * 4;
        self.pixels[i..i + 4].copy_from_slice(&rgba);
    }

    /// Pixels alpha-composited over opaque white, row-major.
    pub fn composited_rgb(&self) -> impl Iterator<Item = Rgb> + '_ {
        self.pixels
            .chunks_exact(4)
            .map(|p| composite_over_white([p[0], p[1], p[2], p[3]]))
    }

    /// Decodes PNG or JPEG bytes. Sides above [`MAX_DECODE_DIM`] are rejected.
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let reader = ImageReader::new(Cursor::new(bytes))
            .with_guessed_format()
            .map_err(|e| Error::Decode(e.to_string()))?;
        match reader.format() {
            Some(ImageFormat::Png) | Some(ImageFormat::Jpeg) => {}
            Some(other) => {
                return Err(Error::Decode(format!("unsupported image format {other:?}")));
            }
            None => return Err(Error::Decode("unrecognized image format".into())),
        }
        let mut limits = Limits::default();
        limits.max_image_width = Some(MAX_DECODE_DIM);
        limits.max_image_height = Some(MAX_DECODE_DIM);
        limits.max_alloc = Some(256 * 1024 * 1024);
        let mut reader = reader;
        reader.limits(limits);
        let decoded = reader.decode().map_err(|e| Error::Decode(e.to_string()))?;
        let rgba = decoded.into_rgba8();
        let (w, h) = rgba.dimensions();
        Self::new(w, h, rgba.into_raw())
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let buf = RgbaImage::from_raw(self.width, self.height, self.pixels.clone())
            .ok_or_else(|| Error::Encode("buffer size mismatch".into()))?;
        let mut out = Cursor::new(Vec::new());
        buf.write_to(&mut out, ImageFormat::Png)
            .map_err(|e| Error::Encode(e.to_string()))?;
        Ok(out.into_inner())
    }
}

pub fn composite_over_white(p: [u8; 4]) -> Rgb {
    let a = p[3] as u32;
    let blend = |c: u8| ((c as u32 * a + 255 * (255 - a) + 127) / 255) as u8;
    Rgb([blend(p[0]), blend(p[1]), blend(p[2])])
}

/// Single-channel 8-bit raster. Sketches use 0 for ink and 255 for paper.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayRaster {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

impl GrayRaster {
    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        Self {
            width,
            height,
            data: vec![value; width as usize * height as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn count_below(&self, threshold: u8) -> usize {
        self.data.iter().filter(|&&v| v < threshold).count()
    }

    pub fn to_rgba(&self) -> RasterImage {
        let pixels = self.data.iter().flat_map(|&v| [v, v, v, 255]).collect();
        RasterImage {
            width: self.width,
            height: self.height,
            pixels,
        }
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        self.to_rgba().encode_png()
    }
}
