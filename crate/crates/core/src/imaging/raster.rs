use serde::{Deserialize, Serialize};

use super::ImagingError;

/// Row-major pixel grid with float samples in `[0, 1]`. One channel for
/// grayscale, three (RGB) for color; nothing else is representable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Raster {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<f32>,
}

impl Raster {
    pub fn new(width: u32, height: u32, channels: u8) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::EmptyRaster);
        }
        if channels != 1 && channels != 3 {
            return Err(ImagingError::BadChannelCount(channels));
        }
        let len = width as usize * height as usize * channels as usize;
        Ok(Raster { width, height, channels, data: vec![0.0; len] })
    }

    pub fn gray(width: u32, height: u32) -> Self {
        Self::new(width, height, 1).expect("gray raster dims")
    }

    pub fn rgb(width: u32, height: u32) -> Self {
        Self::new(width, height, 3).expect("rgb raster dims")
    }

    pub fn from_vec(
        width: u32,
        height: u32,
        channels: u8,
        data: Vec<f32>,
    ) -> Result<Self, ImagingError> {
        let mut r = Self::new(width, height, channels)?;
        if data.len() != r.data.len() {
            return Err(ImagingError::DataLength { expected: r.data.len(), got: data.len() });
        }
        if data.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(ImagingError::SampleOutOfRange);
        }
        r.data = data;
        Ok(r)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    fn idx(&self, x: u32, y: u32, c: u8) -> usize {
        debug_assert!(x < self.width && y < self.height && c < self.channels);
        (y as usize * self.width as usize + x as usize) * self.channels as usize + c as usize
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32, c: u8) -> f32 {
        self.data[self.idx(x, y, c)]
    }

    /// Grayscale accessor; panics on multi-channel rasters.
    #[inline]
    pub fn luma(&self, x: u32, y: u32) -> f32 {
        assert_eq!(self.channels, 1, "luma() needs a single-channel raster");
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, c: u8, v: f32) {
        debug_assert!((0.0..=1.0).contains(&v), "sample out of range: {v}");
        let i = self.idx(x, y, c);
        self.data[i] = v;
    }

    /// Clamp-to-border sample on a single-channel raster.
    #[inline]
    pub fn luma_clamped(&self, x: i64, y: i64) -> f32 {
        let cx = x.clamp(0, i64::from(self.width) - 1) as u32;
        let cy = y.clamp(0, i64::from(self.height) - 1) as u32;
        self.luma(cx, cy)
    }
}

/// ITU-R BT.601 luma. Single-channel input is returned unchanged.
pub fn to_grayscale(img: &Raster) -> Raster {
    if img.channels() == 1 {
        return img.clone();
    }
    let mut out = Raster::gray(img.width(), img.height());
    for y in 0..img.height() {
        for x in 0..img.width() {
            let v = 0.299 * img.get(x, y, 0) + 0.587 * img.get(x, y, 1) + 0.114 * img.get(x, y, 2);
            out.set(x, y, 0, v.clamp(0.0, 1.0));
        }
    }
    out
}

/// Discrete Gaussian kernel of radius `ceil(3*sigma)`, normalized to sum 1.
fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i as f64).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Separable Gaussian blur with clamp-to-border sampling.
///
/// sigma must be in `(0, 10]`; the kernel radius is `ceil(3*sigma)`.
pub fn gaussian_blur(img: &Raster, sigma: f64) -> Result<Raster, ImagingError> {
    if !(sigma > 0.0 && sigma <= 10.0) {
        return Err(ImagingError::BadSigma(sigma));
    }
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as i64;
    let (w, h, ch) = (img.width(), img.height(), img.channels());

    // Horizontal pass accumulates in f64; rounding can push results a hair
    // outside [0,1], so clamp on the final store.
    let mut mid = vec![0.0f64; img.data().len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let mut acc = 0.0f64;
                for (ki, kv) in kernel.iter().enumerate() {
                    let sx = (i64::from(x) + ki as i64 - radius)
                        .clamp(0, i64::from(w) - 1) as u32;
                    acc += kv * f64::from(img.get(sx, y, c));
                }
                mid[(y as usize * w as usize + x as usize) * ch as usize + c as usize] = acc;
            }
        }
    }

    let mut out = Raster::new(w, h, ch)?;
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let mut acc = 0.0f64;
                for (ki, kv) in kernel.iter().enumerate() {
                    let sy = (i64::from(y) + ki as i64 - radius)
                        .clamp(0, i64::from(h) - 1) as usize;
                    acc += kv * mid[(sy * w as usize + x as usize) * ch as usize + c as usize];
                }
                out.set(x, y, c, (acc as f32).clamp(0.0, 1.0));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grayscale_weights() {
        let mut img = Raster::rgb(3, 1);
        // white, black, pure red
        for c in 0..3 {
            img.set(0, 0, c, 1.0);
        }
        img.set(2, 0, 0, 1.0);
        let g = to_grayscale(&img);
        assert!((g.luma(0, 0) - 1.0).abs() < 1e-6);
        assert!(g.luma(1, 0).abs() < 1e-6);
        assert!((g.luma(2, 0) - 0.299).abs() < 1e-6);
    }

    #[test]
    fn grayscale_passthrough_on_single_channel() {
        let img = Raster::from_vec(2, 1, 1, vec![0.25, 0.75]).unwrap();
        assert_eq!(to_grayscale(&img), img);
    }

    #[test]
    fn blur_preserves_uniform_field() {
        let img = Raster::from_vec(7, 5, 1, vec![0.42; 35]).unwrap();
        let out = gaussian_blur(&img, 1.4).unwrap();
        for v in out.data() {
            assert!((v - 0.42).abs() < 1e-6);
        }
    }

    #[test]
    fn blur_peak_stays_at_bright_pixel() {
        let mut img = Raster::gray(9, 9);
        img.set(4, 4, 0, 1.0);
        let out = gaussian_blur(&img, 1.0).unwrap();
        let peak = out.luma(4, 4);
        for y in 0..9 {
            for x in 0..9 {
                assert!(out.luma(x, y) <= peak + 1e-9);
            }
        }
        assert!(peak > 0.1);
    }

    #[test]
    fn blur_rejects_bad_sigma() {
        let img = Raster::gray(4, 4);
        assert!(gaussian_blur(&img, 0.0).is_err());
        assert!(gaussian_blur(&img, -1.0).is_err());
        assert!(gaussian_blur(&img, 10.5).is_err());
    }

    /// Direct 2-D convolution with the same clamp-to-border rule, written
    /// independently of the separable implementation.
    fn blur_oracle(img: &Raster, sigma: f64) -> Vec<f32> {
        let radius = (3.0 * sigma).ceil() as i64;
        let mut weights = Vec::new();
        let mut sum = 0.0f64;
        for dy in -radius..=radius {
            for dx in -radius..=radius {
                let w = (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp();
                weights.push((dx, dy, w));
                sum += w;
            }
        }
        let mut out = Vec::new();
        for y in 0..img.height() as i64 {
            for x in 0..img.width() as i64 {
                let mut acc = 0.0f64;
                for &(dx, dy, w) in &weights {
                    acc += w * f64::from(img.luma_clamped(x + dx, y + dy));
                }
                out.push((acc / sum) as f32);
            }
        }
        out
    }

    #[test]
    fn blur_matches_direct_convolution() {
        // fixed pattern, no RNG needed: mix of ramps and speckle
        let mut img = Raster::gray(9, 9);
        for y in 0..9 {
            for x in 0..9 {
                let v = ((x * 31 + y * 17) % 11) as f32 / 10.0;
                img.set(x, y, 0, v);
            }
        }
        let out = gaussian_blur(&img, 1.4).unwrap();
        let oracle = blur_oracle(&img, 1.4);
        for (a, b) in out.data().iter().zip(oracle.iter()) {
            assert!((f64::from(*a) - f64::from(*b)).abs() <= 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn raster_validation() {
        assert!(Raster::new(0, 4, 1).is_err());
        assert!(Raster::new(4, 4, 2).is_err());
        assert!(Raster::from_vec(2, 2, 1, vec![0.0; 3]).is_err());
        assert!(Raster::from_vec(2, 1, 1, vec![0.5, 1.5]).is_err());
    }
}
