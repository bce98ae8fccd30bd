/// Binary image, one byte per pixel (0 or 1), row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

impl Mask {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![0; width as usize * height as usize],
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[(y * self.width + x) as usize] != 0
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, on: bool) {
        self.data[(y * self.width + x) as usize] = on as u8;
    }

    pub fn count(&self) -> u64 {
        self.data.iter().map(|&v| v as u64).sum()
    }

    /// Pixel-wise AND.
    pub fn and(&self, other: &Mask) -> Mask {
        assert_eq!((self.width, self.height), (other.width, other.height));
        Mask {
            width: self.width,
            height: self.height,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a & b).collect(),
        }
    }

    /// Mask pixels with at least one 4-neighbour outside the mask. Pixels
    /// beyond the image border count as set, so cropping does not create edges.
    pub fn edges(&self) -> Mask {
        let (w, h) = (self.width as usize, self.height as usize);
        let mut out = Mask::new(self.width, self.height);
        let d = &self.data;
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                if d[i] == 0 {
                    continue;
                }
                let off = |cond: bool, j: usize| cond && d[j] == 0;
                if off(x > 0, i.wrapping_sub(1))
                    || off(x + 1 < w, i + 1)
                    || off(y > 0, i.wrapping_sub(w))
                    || off(y + 1 < h, i + w)
                {
                    out.data[i] = 1;
                }
            }
        }
        out
    }
}
