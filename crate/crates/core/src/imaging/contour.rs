use serde::{Deserialize, Serialize};

use super::morph::BitMask;
use crate::geom::Rect;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContourKind {
    /// Boundary between a foreground component and the surrounding background.
    Outer,
    /// Boundary between a foreground component and an enclosed background hole.
    Hole,
}

/// Closed 8-connected pixel boundary produced by border following.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contour {
    /// Boundary pixels in traversal order; consecutive points (and the
    /// last-to-first wrap) are 8-neighbors.
    pub points: Vec<(u32, u32)>,
    pub kind: ContourKind,
}

impl Contour {
    pub fn bbox(&self) -> Rect {
        let mut min_x = u32::MAX;
        let mut min_y = u32::MAX;
        let mut max_x = 0;
        let mut max_y = 0;
        for &(x, y) in &self.points {
            min_x = min_x.min(x);
            min_y = min_y.min(y);
            max_x = max_x.max(x);
            max_y = max_y.max(y);
        }
        Rect::new(min_x, min_y, max_x - min_x + 1, max_y - min_y + 1)
    }
}

// Clockwise 8-neighbor ring starting at west (screen coordinates, y down).
const DIR: [(i64, i64); 8] =
    [(-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1)];

fn dir_index(dx: i64, dy: i64) -> usize {
    DIR.iter().position(|d| *d == (dx, dy)).expect("neighbor offset")
}

/// Border following after Suzuki & Abe: every 8-connected foreground
/// component yields exactly one outer contour, and each enclosed background
/// region yields one hole contour. Contours are reported in raster order of
/// their first boundary pixel.
pub fn trace_contours(mask: &BitMask) -> Vec<Contour> {
    let w = i64::from(mask.width());
    let h = i64::from(mask.height());
    let mut f = vec![0i32; (w * h) as usize];
    for (x, y) in mask.iter_set() {
        f[(i64::from(y) * w + i64::from(x)) as usize] = 1;
    }
    let at = |f: &[i32], x: i64, y: i64| -> i32 {
        if x < 0 || y < 0 || x >= w || y >= h {
            0
        } else {
            f[(y * w + x) as usize]
        }
    };

    let mut contours = Vec::new();
    let mut nbd = 1i32;
    for y in 0..h {
        for x in 0..w {
            let fv = at(&f, x, y);
            if fv == 0 {
                continue;
            }
            let start = if fv == 1 && at(&f, x - 1, y) == 0 {
                Some(((x - 1, y), ContourKind::Outer))
            } else if fv >= 1 && at(&f, x + 1, y) == 0 {
                Some(((x + 1, y), ContourKind::Hole))
            } else {
                None
            };
            let Some(((sx, sy), kind)) = start else { continue };
            nbd += 1;

            let mut points = vec![(x as u32, y as u32)];
            // Clockwise scan around (x, y) from the start neighbor for the
            // first foreground pixel.
            let from = dir_index(sx - x, sy - y);
            let mut first = None;
            for k in 0..8 {
                let d = DIR[(from + k) % 8];
                if at(&f, x + d.0, y + d.1) != 0 {
                    first = Some((x + d.0, y + d.1));
                    break;
                }
            }
            let Some((x1, y1)) = first else {
                // Isolated pixel: closed single-point contour.
                f[(y * w + x) as usize] = -nbd;
                contours.push(Contour { points, kind });
                continue;
            };

            let (mut x2, mut y2) = (x1, y1);
            let (mut x3, mut y3) = (x, y);
            loop {
                // Counterclockwise scan around (x3, y3), starting just after
                // the direction of (x2, y2). Guaranteed to terminate because
                // (x2, y2) itself is foreground.
                let from = dir_index(x2 - x3, y2 - y3);
                let mut east_zero = false;
                let mut next = (x2, y2);
                for k in 1..=8 {
                    let idx = (from + 8 - k) % 8;
                    let d = DIR[idx];
                    let (nx, ny) = (x3 + d.0, y3 + d.1);
                    if at(&f, nx, ny) != 0 {
                        next = (nx, ny);
                        break;
                    }
                    if idx == 4 {
                        east_zero = true;
                    }
                }
                let (x4, y4) = next;

                // Mark the current pixel: negative when its east neighbor is
                // exposed background (stops hole re-detection), positive for
                // a plain border visit.
                let i = (y3 * w + x3) as usize;
                if east_zero {
                    f[i] = -nbd;
                } else if f[i] == 1 {
                    f[i] = nbd;
                }

                if (x4, y4) == (x, y) && (x3, y3) == (x1, y1) {
                    break;
                }
                x2 = x3;
                y2 = y3;
                x3 = x4;
                y3 = y4;
                points.push((x3 as u32, y3 as u32));
            }
            contours.push(Contour { points, kind });
        }
    }
    contours
}

/// Pixels enclosed by a closed contour, boundary included: the complement of
/// what an outside 4-connected flood can reach. This is the region a filled
/// polygon through the boundary pixels covers.
pub fn fill_contour(contour: &Contour, width: u32, height: u32) -> BitMask {
    let mut out = BitMask::new(width, height);
    if contour.points.is_empty() {
        return out;
    }
    let bbox = contour.bbox();
    // Work on the bbox plus a 1-px apron so the flood can wrap around.
    let gw = bbox.w as i64 + 2;
    let gh = bbox.h as i64 + 2;
    let ox = i64::from(bbox.x) - 1;
    let oy = i64::from(bbox.y) - 1;
    let mut boundary = vec![false; (gw * gh) as usize];
    for &(x, y) in &contour.points {
        boundary[((i64::from(y) - oy) * gw + (i64::from(x) - ox)) as usize] = true;
    }
    let mut outside = vec![false; (gw * gh) as usize];
    let mut stack = Vec::new();
    for gx in 0..gw {
        for gy in [0, gh - 1] {
            stack.push((gx, gy));
        }
    }
    for gy in 0..gh {
        for gx in [0, gw - 1] {
            stack.push((gx, gy));
        }
    }
    while let Some((gx, gy)) = stack.pop() {
        if gx < 0 || gy < 0 || gx >= gw || gy >= gh {
            continue;
        }
        let i = (gy * gw + gx) as usize;
        if outside[i] || boundary[i] {
            continue;
        }
        outside[i] = true;
        stack.push((gx - 1, gy));
        stack.push((gx + 1, gy));
        stack.push((gx, gy - 1));
        stack.push((gx, gy + 1));
    }
    for gy in 1..gh - 1 {
        for gx in 1..gw - 1 {
            let i = (gy * gw + gx) as usize;
            if !outside[i] {
                let x = (gx + ox) as u32;
                let y = (gy + oy) as u32;
                if x < width && y < height {
                    out.set(x, y, true);
                }
            }
        }
    }
    out
}
