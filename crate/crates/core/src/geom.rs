//! Small geometry helpers shared by the vision and tracking passes.

use serde::{Deserialize, Serialize};

/// Axis-aligned pixel rectangle. `x`/`y` is the top-left corner; `w`/`h`
/// count pixels, so a 1x1 rect covers exactly the pixel at `(x, y)`.
/// Serializes as a `[x, y, w, h]` array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[u32; 4]", into = "[u32; 4]")]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl From<[u32; 4]> for Rect {
    fn from(v: [u32; 4]) -> Self {
        Rect::new(v[0], v[1], v[2], v[3])
    }
}

impl From<Rect> for [u32; 4] {
    fn from(r: Rect) -> Self {
        [r.x, r.y, r.w, r.h]
    }
}

impl Rect {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Rect { x, y, w, h }
    }

    pub fn area(&self) -> u64 {
        u64::from(self.w) * u64::from(self.h)
    }

    /// Exclusive right edge.
    pub fn x2(&self) -> u32 {
        self.x + self.w
    }

    /// Exclusive bottom edge.
    pub fn y2(&self) -> u32 {
        self.y + self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (
            f64::from(self.x) + f64::from(self.w) / 2.0,
            f64::from(self.y) + f64::from(self.h) / 2.0,
        )
    }

    pub fn contains_point(&self, x: i64, y: i64) -> bool {
        x >= i64::from(self.x)
            && y >= i64::from(self.y)
            && x < i64::from(self.x2())
            && y < i64::from(self.y2())
    }

    /// Containment with shared edges allowed.
    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x >= self.x && other.y >= self.y && other.x2() <= self.x2() && other.y2() <= self.y2()
    }

    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        let x1 = self.x.max(other.x);
        let y1 = self.y.max(other.y);
        let x2 = self.x2().min(other.x2());
        let y2 = self.y2().min(other.y2());
        if x2 > x1 && y2 > y1 {
            Some(Rect::new(x1, y1, x2 - x1, y2 - y1))
        } else {
            None
        }
    }

    pub fn intersection_area(&self, other: &Rect) -> u64 {
        self.intersect(other).map_or(0, |r| r.area())
    }

    /// Intersection over union; 0.0 when either rect is empty.
    pub fn iou(&self, other: &Rect) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// Grow by `m` on every side, clamping at the origin.
    pub fn inflate(&self, m: u32) -> Rect {
        let x = self.x.saturating_sub(m);
        let y = self.y.saturating_sub(m);
        Rect::new(x, y, self.w + (self.x - x) + m, self.h + (self.y - y) + m)
    }

    /// Shrink by `m` on every side; collapses to a 1x1 rect at the center
    /// when the rect is too small to shrink.
    pub fn deflate(&self, m: u32) -> Rect {
        if self.w > 2 * m && self.h > 2 * m {
            Rect::new(self.x + m, self.y + m, self.w - 2 * m, self.h - 2 * m)
        } else {
            let (cx, cy) = self.center();
            Rect::new(cx as u32, cy as u32, 1, 1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iou_identity_and_disjoint() {
        let a = Rect::new(2, 3, 10, 10);
        assert_eq!(a.iou(&a), 1.0);
        let b = Rect::new(40, 40, 5, 5);
        assert_eq!(a.iou(&b), 0.0);
    }

    #[test]
    fn iou_half_overlap() {
        let a = Rect::new(0, 0, 10, 10);
        let b = Rect::new(5, 0, 10, 10);
        // intersection 50, union 150
        assert!((a.iou(&b) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn containment_allows_shared_edges() {
        let outer = Rect::new(0, 0, 10, 10);
        assert!(outer.contains_rect(&Rect::new(0, 0, 10, 10)));
        assert!(outer.contains_rect(&Rect::new(3, 3, 2, 2)));
        assert!(!outer.contains_rect(&Rect::new(8, 8, 4, 4)));
    }

    #[test]
    fn serializes_as_array() {
        let r = Rect::new(3, 4, 10, 20);
        assert_eq!(serde_json::to_string(&r).unwrap(), "[3,4,10,20]");
        let back: Rect = serde_json::from_str("[3,4,10,20]").unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn inflate_deflate() {
        let r = Rect::new(5, 5, 10, 10);
        assert_eq!(r.inflate(2), Rect::new(3, 3, 14, 14));
        assert_eq!(r.inflate(2).deflate(2), r);
        assert_eq!(Rect::new(0, 0, 3, 3).inflate(1), Rect::new(0, 0, 4, 4));
        // too small to shrink: collapses at center
        assert_eq!(Rect::new(4, 4, 2, 2).deflate(3), Rect::new(5, 5, 1, 1));
    }
}
