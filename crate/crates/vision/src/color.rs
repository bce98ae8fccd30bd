use kidsize_core::config::VisionSection;

use crate::frame::{yuv_to_rgb, CameraFrame, FrameError};
use crate::mask::Mask;

/// Hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Hsv {
    pub h: f32,
    pub s: f32,
    pub v: f32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HsvImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<Hsv>,
}

impl HsvImage {
    pub fn get(&self, x: u32, y: u32) -> Hsv {
        self.pixels[(y * self.width + x) as usize]
    }

    /// Pixels inside the configured field-green range.
    pub fn green_mask(&self, cfg: &VisionSection) -> Mask {
        self.classify(|p| is_green(p, cfg))
    }

    /// Pixels inside the configured white range.
    pub fn white_mask(&self, cfg: &VisionSection) -> Mask {
        self.classify(|p| is_white(p, cfg))
    }

    fn classify(&self, f: impl Fn(&Hsv) -> bool) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            data: self.pixels.iter().map(|p| f(p) as u8).collect(),
        }
    }
}

#[inline]
pub fn is_green(p: &Hsv, cfg: &VisionSection) -> bool {
    p.h >= cfg.green_h_min as f32
        && p.h <= cfg.green_h_max as f32
        && p.s >= cfg.green_s_min as f32
        && p.v >= cfg.green_v_min as f32
}

#[inline]
pub fn is_white(p: &Hsv, cfg: &VisionSection) -> bool {
    p.s <= cfg.white_s_max as f32 && p.v >= cfg.white_v_min as f32
}

/// Standard RGB to HSV; achromatic pixels get hue 0.
#[inline]
pub fn rgb_to_hsv(r: u8, g: u8, b: u8) -> Hsv {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let v = max as f32 / 255.0;
    if max == min {
        return Hsv { h: 0.0, s: 0.0, v };
    }
    let d = (max - min) as f32;
    let s = d / max as f32;
    let (r, g, b) = (r as f32, g as f32, b as f32);
    let mut h = if max as f32 == r {
        60.0 * ((g - b) / d)
    } else if max as f32 == g {
        60.0 * ((b - r) / d + 2.0)
    } else {
        60.0 * ((r - g) / d + 4.0)
    };
    if h < 0.0 {
        h += 360.0;
    }
    if h >= 360.0 {
        h -= 360.0;
    }
    Hsv { h, s, v }
}

/// Per-pixel BT.601 YUV to RGB, then RGB to HSV.
pub fn yuyv_to_hsv(frame: &CameraFrame) -> Result<HsvImage, FrameError> {
    frame.validate()?;
    let mut pixels = Vec::with_capacity(frame.width as usize * frame.height as usize);
    let mut last: Option<(&[u8], Hsv, Hsv)> = None;
    for q in frame.data.chunks_exact(4) {
        // Uniform regions repeat the same quad.
        let (a, b) = match last {
            Some((prev, a, b)) if prev == q => (a, b),
            _ => {
                let (r, g, b) = yuv_to_rgb(q[0], q[1], q[3]);
                let a = rgb_to_hsv(r, g, b);
                let (r, g, b) = yuv_to_rgb(q[2], q[1], q[3]);
                (a, rgb_to_hsv(r, g, b))
            }
        };
        pixels.push(a);
        pixels.push(b);
        last = Some((q, a, b));
    }
    Ok(HsvImage {
        width: frame.width,
        height: frame.height,
        pixels,
    })
}
