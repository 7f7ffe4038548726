use super::morph::BitMask;
use super::raster::Raster;
use super::ImagingError;

/// Canny edge detection on an already-smoothed single-channel raster.
///
/// 3x3 Sobel gradients, magnitude normalized by the image maximum (a flat
/// image has no edges), 4-direction non-maximum suppression, then two-level
/// hysteresis: pixels at or above `high` seed 8-connected chains of pixels
/// at or above `low`. Requires `0 <= low < high <= 1`.
pub fn canny(img: &Raster, low: f64, high: f64) -> Result<BitMask, ImagingError> {
    if img.channels() != 1 {
        return Err(ImagingError::NotGrayscale);
    }
    if !(0.0..=1.0).contains(&low) || !(0.0..=1.0).contains(&high) || low >= high {
        return Err(ImagingError::BadCannyThresholds { low, high });
    }
    let w = img.width() as usize;
    let h = img.height() as usize;

    let mut mag = vec![0.0f64; w * h];
    let mut gxv = vec![0.0f64; w * h];
    let mut gyv = vec![0.0f64; w * h];
    let mut max_mag = 0.0f64;
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let p = |dx: i64, dy: i64| f64::from(img.luma_clamped(x + dx, y + dy));
            let gx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            let gy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
            let m = (gx * gx + gy * gy).sqrt();
            let i = y as usize * w + x as usize;
            gxv[i] = gx;
            gyv[i] = gy;
            mag[i] = m;
            max_mag = max_mag.max(m);
        }
    }
    let mut out = BitMask::new(img.width(), img.height());
    if max_mag == 0.0 {
        return Ok(out);
    }
    for m in &mut mag {
        *m /= max_mag;
    }

    // Non-maximum suppression. The gradient direction picks the neighbor
    // pair; plateaus keep their first pixel in raster order (strict test
    // against the earlier neighbor, non-strict against the later one).
    // Out-of-bounds neighbors read as zero so border edges survive.
    let mag_at = |mag: &[f64], x: i64, y: i64| -> f64 {
        if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };
    let mut thin = vec![0.0f64; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let i = y as usize * w + x as usize;
            let m = mag[i];
            if m == 0.0 {
                continue;
            }
            let mut angle = gyv[i].atan2(gxv[i]).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            if angle >= 180.0 {
                angle -= 180.0;
            }
            // (earlier, later) neighbors along the gradient line
            let (a, b) = if !(22.5..157.5).contains(&angle) {
                ((x - 1, y), (x + 1, y))
            } else if angle < 67.5 {
                ((x - 1, y - 1), (x + 1, y + 1))
            } else if angle < 112.5 {
                ((x, y - 1), (x, y + 1))
            } else {
                ((x + 1, y - 1), (x - 1, y + 1))
            };
            if m > mag_at(&mag, a.0, a.1) && m >= mag_at(&mag, b.0, b.1) {
                thin[i] = m;
            }
        }
    }

    // Hysteresis: grow from strong pixels through weak ones.
    let mut stack = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if thin[y * w + x] >= high {
                stack.push((x as i64, y as i64));
            }
        }
    }
    while let Some((x, y)) = stack.pop() {
        if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
            continue;
        }
        let i = y as usize * w + x as usize;
        if thin[i] < low || out.get(x as u32, y as u32) {
            continue;
        }
        out.set(x as u32, y as u32, true);
        for dy in -1..=1 {
            for dx in -1..=1 {
                if dx != 0 || dy != 0 {
                    stack.push((x + dx, y + dy));
                }
            }
        }
    }
    Ok(out)
}
