//! Raw YUYV422 frames and their on-disk formats.
//!
//! `.yuyv` files carry a 16-byte header: the magic `YUYV`, width and height
//! as little-endian `u32`, and four reserved zero bytes, followed by the
//! packed pixel data.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

pub const YUYV_MAGIC: &[u8; 4] = b"YUYV";
pub const YUYV_HEADER_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("frame width {0} must be positive and even")]
    OddWidth(u32),
    #[error("frame height must be positive")]
    ZeroHeight,
    #[error("frame buffer holds {actual} bytes, expected {expected}")]
    BadLength { expected: usize, actual: usize },
    #[error("not a YUYV file (bad magic)")]
    BadMagic,
    #[error("YUYV file shorter than its header")]
    Truncated,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One packed YUYV422 frame: `Y0 U Y1 V` per horizontal pixel pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CameraFrame {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
    /// Monotonic capture time in nanoseconds.
    pub timestamp_ns: u64,
}

impl CameraFrame {
    pub fn new(width: u32, height: u32, data: Vec<u8>, timestamp_ns: u64) -> Result<Self, FrameError> {
        let frame = Self {
            width,
            height,
            data,
            timestamp_ns,
        };
        frame.validate()?;
        Ok(frame)
    }

    pub fn validate(&self) -> Result<(), FrameError> {
        if self.width == 0 || !self.width.is_multiple_of(2) {
            return Err(FrameError::OddWidth(self.width));
        }
        if self.height == 0 {
            return Err(FrameError::ZeroHeight);
        }
        let expected = self.width as usize * self.height as usize * 2;
        if self.data.len() != expected {
            return Err(FrameError::BadLength {
                expected,
                actual: self.data.len(),
            });
        }
        Ok(())
    }

    /// Uniform frame with every pixel set to `(y, u, v)`.
    pub fn filled(width: u32, height: u32, y: u8, u: u8, v: u8) -> Result<Self, FrameError> {
        let pairs = width as usize / 2 * height as usize;
        let mut data = Vec::with_capacity(pairs * 4);
        for _ in 0..pairs {
            data.extend_from_slice(&[y, u, y, v]);
        }
        Self::new(width, height, data, 0)
    }

    /// Encodes packed RGB24 into YUYV422 with full-range BT.601 coefficients;
    /// chroma is the average of each horizontal pixel pair.
    pub fn from_rgb(width: u32, height: u32, rgb: &[u8], timestamp_ns: u64) -> Result<Self, FrameError> {
        if width == 0 || !width.is_multiple_of(2) {
            return Err(FrameError::OddWidth(width));
        }
        let n = width as usize * height as usize;
        if rgb.len() != n * 3 {
            return Err(FrameError::BadLength {
                expected: n * 3,
                actual: rgb.len(),
            });
        }
        let mut data = Vec::with_capacity(n * 2);
        for pair in rgb.chunks_exact(6) {
            let (y0, u0, v0) = rgb_to_yuv(pair[0], pair[1], pair[2]);
            let (y1, u1, v1) = rgb_to_yuv(pair[3], pair[4], pair[5]);
            data.push(quantize(y0));
            data.push(quantize((u0 + u1) * 0.5));
            data.push(quantize(y1));
            data.push(quantize((v0 + v1) * 0.5));
        }
        Self::new(width, height, data, timestamp_ns)
    }

    /// Decodes to packed RGB24.
    pub fn to_rgb(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.width as usize * self.height as usize * 3);
        for q in self.data.chunks_exact(4) {
            for y in [q[0], q[2]] {
                let (r, g, b) = yuv_to_rgb(y, q[1], q[3]);
                out.extend_from_slice(&[r, g, b]);
            }
        }
        out
    }

    pub fn read_yuyv(path: impl AsRef<Path>) -> Result<Self, FrameError> {
        let bytes = fs::read(path)?;
        Self::from_yuyv_bytes(&bytes)
    }

    pub fn from_yuyv_bytes(bytes: &[u8]) -> Result<Self, FrameError> {
        if bytes.len() < YUYV_HEADER_LEN {
            return Err(FrameError::Truncated);
        }
        if &bytes[0..4] != YUYV_MAGIC {
            return Err(FrameError::BadMagic);
        }
        let width = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        let height = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        Self::new(width, height, bytes[YUYV_HEADER_LEN..].to_vec(), 0)
    }

    pub fn to_yuyv_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(YUYV_HEADER_LEN + self.data.len());
        out.extend_from_slice(YUYV_MAGIC);
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        out.extend_from_slice(&[0; 4]);
        out.extend_from_slice(&self.data);
        out
    }

    pub fn write_yuyv(&self, path: impl AsRef<Path>) -> Result<(), FrameError> {
        fs::write(path, self.to_yuyv_bytes())?;
        Ok(())
    }
}

fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

pub fn rgb_to_yuv(r: u8, g: u8, b: u8) -> (f64, f64, f64) {
    let (r, g, b) = (r as f64, g as f64, b as f64);
    let y = 0.299 * r + 0.587 * g + 0.114 * b;
    let u = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b;
    let v = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b;
    (y, u, v)
}

/// Full-range BT.601 YUV to RGB, clamped to `[0, 255]`.
#[inline]
pub fn yuv_to_rgb(y: u8, u: u8, v: u8) -> (u8, u8, u8) {
    let y = y as f32;
    let u = u as f32 - 128.0;
    let v = v as f32 - 128.0;
    let r = y + 1.402 * v;
    let g = y - 0.344136 * u - 0.714136 * v;
    let b = y + 1.772 * u;
    let c = |x: f32| x.round().clamp(0.0, 255.0) as u8;
    (c(r), c(g), c(b))
}

/// Writes packed RGB24 as binary PPM (P6).
pub fn write_ppm(path: impl AsRef<Path>, width: u32, height: u32, rgb: &[u8]) -> io::Result<()> {
    let mut f = io::BufWriter::new(fs::File::create(path)?);
    write!(f, "P6\n{width} {height}\n255\n")?;
    f.write_all(rgb)?;
    f.flush()
}
