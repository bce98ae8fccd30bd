use crate::mask::Mask;

/// Summed-area table of a binary mask with a zero top row and left column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegralImage {
    pub width: u32,
    pub height: u32,
    /// `(width + 1) * (height + 1)` entries, row-major.
    pub table: Vec<u64>,
}

pub fn build_integral(mask: &Mask) -> IntegralImage {
    let (w, h) = (mask.width as usize, mask.height as usize);
    let stride = w + 1;
    let mut table = vec![0u64; stride * (h + 1)];
    for y in 0..h {
        let mut row_sum = 0u64;
        for x in 0..w {
            row_sum += mask.data[y * w + x] as u64;
            table[(y + 1) * stride + x + 1] = table[y * stride + x + 1] + row_sum;
        }
    }
    IntegralImage {
        width: mask.width,
        height: mask.height,
        table,
    }
}

impl IntegralImage {
    #[inline]
    pub fn at(&self, x: u32, y: u32) -> u64 {
        self.table[(y * (self.width + 1) + x) as usize]
    }

    /// Number of set pixels in the `w x h` rectangle whose top-left pixel is
    /// `(x, y)`. The rectangle must lie inside the image.
    #[inline]
    pub fn rect_sum(&self, x: u32, y: u32, w: u32, h: u32) -> u64 {
        debug_assert!(x + w <= self.width && y + h <= self.height);
        self.at(x + w, y + h) + self.at(x, y) - self.at(x + w, y) - self.at(x, y + h)
    }

    pub fn total(&self) -> u64 {
        self.at(self.width, self.height)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn brute(mask: &Mask, x: u32, y: u32, w: u32, h: u32) -> u64 {
        let mut n = 0;
        for yy in y..y + h {
            for xx in x..x + w {
                n += mask.get(xx, yy) as u64;
            }
        }
        n
    }

    #[test]
    fn full_ones_corner() {
        let mut m = Mask::new(4, 4);
        m.data.fill(1);
        let ii = build_integral(&m);
        assert_eq!(ii.at(4, 4), 16);
    }

    #[test]
    fn unit_impulse() {
        let mut m = Mask::new(5, 3);
        m.set(0, 0, true);
        let ii = build_integral(&m);
        for y in 1..=3 {
            for x in 1..=5 {
                assert_eq!(ii.at(x, y), 1);
            }
        }
        for x in 0..=5 {
            assert_eq!(ii.at(x, 0), 0);
        }
        for y in 0..=3 {
            assert_eq!(ii.at(0, y), 0);
        }
    }

    #[test]
    fn random_queries_match_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut m = Mask::new(32, 32);
        for v in m.data.iter_mut() {
            *v = rng.random_bool(0.4) as u8;
        }
        let ii = build_integral(&m);
        for _ in 0..1000 {
            let x = rng.random_range(0..32);
            let y = rng.random_range(0..32);
            let w = rng.random_range(0..=32 - x);
            let h = rng.random_range(0..=32 - y);
            assert_eq!(ii.rect_sum(x, y, w, h), brute(&m, x, y, w, h));
        }
    }

    proptest! {
        #[test]
        fn every_rectangle_matches(w in 1u32..12, h in 1u32..12, seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut m = Mask::new(w, h);
            for v in m.data.iter_mut() {
                *v = rng.random_bool(0.5) as u8;
            }
            let ii = build_integral(&m);
            for y in 0..h {
                for x in 0..w {
                    for hh in 0..=h - y {
                        for ww in 0..=w - x {
                            prop_assert_eq!(ii.rect_sum(x, y, ww, hh), brute(&m, x, y, ww, hh));
                        }
                    }
                }
            }
            for y in 0..h {
                for x in 0..w {
                    prop_assert!(ii.at(x + 1, y + 1) >= ii.at(x, y + 1));
                    prop_assert!(ii.at(x + 1, y + 1) >= ii.at(x + 1, y));
                }
            }
        }
    }
}
