use serde::{Deserialize, Serialize};

use super::contour::{fill_contour, Contour};
use super::ImagingError;
use crate::geom::Rect;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourMetrics {
    /// Enclosed pixel count, boundary included.
    pub area: f64,
    /// Closed traversal length: 1 per axis step, sqrt(2) per diagonal step.
    pub perimeter: f64,
    pub bbox: Rect,
    /// Isoperimetric ratio of the boundary polygon, clamped to [0, 1.1].
    /// Discs score ~0.9+, squares exactly pi/4, elongated shapes lower.
    pub circularity: f64,
    /// Enclosed pixel count over bbox area.
    pub rect_fill: f64,
    /// Principal axis from second-order central moments, degrees in [0, 180).
    pub principal_angle: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Circle,
    Rectangle,
    Irregular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Horizontal,
    Vertical,
    Irregular,
}

/// Classification cutoffs. The defaults make rasterized discs circles,
/// squares and bars rectangles, and leave staircase debris irregular.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShapeThresholds {
    pub circle_circularity: f64,
    pub rect_fill: f64,
    pub orientation_tol_deg: f64,
    /// Circles with |w-h| within this fraction of the larger side count as
    /// horizontal; their moment angle is numerically meaningless.
    pub near_square_frac: f64,
}

impl Default for ShapeThresholds {
    fn default() -> Self {
        ShapeThresholds {
            circle_circularity: 0.80,
            rect_fill: 0.85,
            orientation_tol_deg: 10.0,
            near_square_frac: 0.1,
        }
    }
}

pub fn contour_metrics(contour: &Contour) -> Result<ContourMetrics, ImagingError> {
    if contour.points.is_empty() {
        return Err(ImagingError::EmptyContour);
    }
    let bbox = contour.bbox();
    let filled = fill_contour(contour, bbox.x2(), bbox.y2());
    let area = filled.count_set() as f64;

    let n = contour.points.len();
    let perimeter = if n == 1 {
        1.0
    } else {
        (0..n)
            .map(|i| {
                let (x1, y1) = contour.points[i];
                let (x2, y2) = contour.points[(i + 1) % n];
                if x1 != x2 && y1 != y2 {
                    std::f64::consts::SQRT_2
                } else {
                    1.0
                }
            })
            .sum()
    };

    // Shoelace area of the traversal polygon through pixel centers. Spur
    // pixels walked out and back cancel, which is what we want: the ratio
    // compares the enclosed polygon against its own boundary length.
    let mut shoelace = 0.0f64;
    for i in 0..n {
        let (x1, y1) = contour.points[i];
        let (x2, y2) = contour.points[(i + 1) % n];
        shoelace += f64::from(x1) * f64::from(y2) - f64::from(x2) * f64::from(y1);
    }
    let polygon_area = shoelace.abs() / 2.0;
    let circularity = if n == 1 {
        0.0
    } else {
        (4.0 * std::f64::consts::PI * polygon_area / (perimeter * perimeter)).clamp(0.0, 1.1)
    };

    let rect_fill = area / bbox.area() as f64;

    // Central moments over the filled region.
    let (mut sx, mut sy) = (0.0f64, 0.0f64);
    for (x, y) in filled.iter_set() {
        sx += f64::from(x);
        sy += f64::from(y);
    }
    let cx = sx / area;
    let cy = sy / area;
    let (mut mu20, mut mu02, mut mu11) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in filled.iter_set() {
        let dx = f64::from(x) - cx;
        let dy = f64::from(y) - cy;
        mu20 += dx * dx;
        mu02 += dy * dy;
        mu11 += dx * dy;
    }
    let mut angle = 0.5 * (2.0 * mu11).atan2(mu20 - mu02);
    let mut deg = angle.to_degrees();
    if deg < 0.0 {
        deg += 180.0;
    }
    if deg >= 180.0 {
        deg -= 180.0;
    }
    angle = deg;

    Ok(ContourMetrics {
        area,
        perimeter,
        bbox,
        circularity,
        rect_fill,
        principal_angle: angle,
    })
}

pub fn classify_shape(m: &ContourMetrics) -> (Shape, Orientation) {
    classify_shape_with(m, &ShapeThresholds::default())
}

pub fn classify_shape_with(m: &ContourMetrics, t: &ShapeThresholds) -> (Shape, Orientation) {
    let shape = if m.circularity >= t.circle_circularity {
        Shape::Circle
    } else if m.rect_fill >= t.rect_fill {
        Shape::Rectangle
    } else {
        Shape::Irregular
    };

    let near_square = {
        let (w, h) = (f64::from(m.bbox.w), f64::from(m.bbox.h));
        (w - h).abs() <= t.near_square_frac * w.max(h)
    };
    let orientation = if shape == Shape::Circle && near_square {
        Orientation::Horizontal
    } else {
        let a = m.principal_angle;
        let tol = t.orientation_tol_deg;
        if a <= tol || a >= 180.0 - tol {
            Orientation::Horizontal
        } else if (a - 90.0).abs() <= tol {
            Orientation::Vertical
        } else {
            Orientation::Irregular
        }
    };
    (shape, orientation)
}
