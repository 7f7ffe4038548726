use super::ImagingError;

/// Binary pixel mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BitMask {
    pub fn new(width: u32, height: u32) -> Self {
        BitMask { width, height, bits: vec![false; width as usize * height as usize] }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    /// Out-of-bounds coordinates read as background.
    #[inline]
    pub fn get_checked(&self, x: i64, y: i64) -> bool {
        if x < 0 || y < 0 || x >= i64::from(self.width) || y >= i64::from(self.height) {
            false
        } else {
            self.get(x as u32, y as u32)
        }
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        self.bits[y as usize * self.width as usize + x as usize] = v;
    }

    pub fn count_set(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn iter_set(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(move |(i, _)| ((i % w as usize) as u32, (i / w as usize) as u32))
    }
}

/// Dilation with a square structuring element of side `2*radius + 1`.
///
/// Equivalent to the Minkowski sum of the foreground with the square;
/// pixels whose neighborhood reaches outside the image see background there.
/// `radius` must be in `1..=10`.
pub fn dilate(mask: &BitMask, radius: u32) -> Result<BitMask, ImagingError> {
    if !(1..=10).contains(&radius) {
        return Err(ImagingError::BadDilationRadius(radius));
    }
    let (w, h) = (mask.width(), mask.height());
    let r = radius as i64;

    // The square element separates into a horizontal and a vertical run.
    let mut horiz = BitMask::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut any = false;
            for dx in -r..=r {
                if mask.get_checked(i64::from(x) + dx, i64::from(y)) {
                    any = true;
                    break;
                }
            }
            horiz.set(x, y, any);
        }
    }
    let mut out = BitMask::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut any = false;
            for dy in -r..=r {
                if horiz.get_checked(i64::from(x), i64::from(y) + dy) {
                    any = true;
                    break;
                }
            }
            out.set(x, y, any);
        }
    }
    Ok(out)
}
