//! Cross-frame element tracking and interaction inference.
//!
//! Consecutive sampled frames are matched element-by-element (box overlap
//! first, then a displacement-tolerant fallback), and each sample interval
//! is explained by the first rule that fits: click, swipe, adjust, screen
//! transition. Without an input-event stream the click rule degrades to a
//! low-confidence single-changed-element heuristic.

use serde::{Deserialize, Serialize};

use crate::detection::{element_label, ElementType, FrameElements, RelationKind};
use crate::geom::Rect;
use crate::imaging::{to_grayscale, Raster};
use crate::vislog::{InputEvent, InputKind, MajorEvent};

fn default_iou_match() -> f64 {
    0.3
}
fn default_center_dist_frac() -> f64 {
    0.1
}
fn default_area_ratio_tol() -> f64 {
    0.3
}
fn default_click_delta() -> f64 {
    0.05
}
fn default_swipe_quorum() -> usize {
    3
}
fn default_swipe_min_frac() -> f64 {
    0.05
}
fn default_pixel_jitter() -> i64 {
    3
}
fn default_adjust_max_rel() -> f64 {
    0.002
}
fn default_adjust_min_px() -> i64 {
    10
}
fn default_touch_slop_px() -> u32 {
    5
}
fn default_animation_window_ms() -> u64 {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackingConfig {
    /// Overlap needed for the primary matching stage.
    pub iou_match: f64,
    /// Fallback search radius as a fraction of screen width.
    pub center_dist_frac: f64,
    /// Fallback area agreement: |a2 - a1| within this fraction of a1.
    pub area_ratio_tol: f64,
    /// Appearance change that counts as "the element reacted".
    pub click_delta: f64,
    /// Coherently displaced elements needed to call a swipe.
    pub swipe_quorum: usize,
    /// Swipe displacement floor as a fraction of screen width.
    pub swipe_min_frac: f64,
    /// Pixel tolerance for "same displacement" and "did not move".
    pub pixel_jitter: i64,
    /// Elements at most this fraction of the screen can be slider knobs.
    pub adjust_max_rel: f64,
    /// Minimum knob travel in pixels.
    pub adjust_min_px: i64,
    /// Touch points this close to a box still hit it.
    pub touch_slop_px: u32,
    /// Visual changes with no input this close in time are animations.
    pub animation_window_ms: u64,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        TrackingConfig {
            iou_match: default_iou_match(),
            center_dist_frac: default_center_dist_frac(),
            area_ratio_tol: default_area_ratio_tol(),
            click_delta: default_click_delta(),
            swipe_quorum: default_swipe_quorum(),
            swipe_min_frac: default_swipe_min_frac(),
            pixel_jitter: default_pixel_jitter(),
            adjust_max_rel: default_adjust_max_rel(),
            adjust_min_px: default_adjust_min_px(),
            touch_slop_px: default_touch_slop_px(),
            animation_window_ms: default_animation_window_ms(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementMatch {
    pub prev_id: usize,
    pub next_id: usize,
    /// Top-left box displacement in pixels, prev -> next.
    pub displacement: (i64, i64),
    /// Mean absolute luma difference over the origin-aligned overlap of the
    /// two boxes; a moved-but-unchanged element scores ~0.
    pub appearance_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchSet {
    pub matches: Vec<ElementMatch>,
    /// Next-frame ids with no counterpart.
    pub appeared: Vec<usize>,
    /// Prev-frame ids with no counterpart.
    pub disappeared: Vec<usize>,
}

/// A sampled frame with everything interaction inference needs.
#[derive(Debug, Clone)]
pub struct Sample {
    pub frame_index: usize,
    pub t_ms: u64,
    pub elements: FrameElements,
    pub image: Raster,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SwipeDirection {
    Left,
    Right,
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "lowercase")]
pub enum InteractionKind {
    Click {
        target: usize,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        label: Option<String>,
    },
    Swipe {
        direction: SwipeDirection,
    },
    Adjust {
        target: usize,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        label: Option<String>,
        /// Signed knob travel in pixels along its axis.
        delta: i64,
    },
    Transition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    /// Sample-interval ordinal, 0-based.
    pub step: usize,
    /// Frame index of the sample before the action.
    pub prev_frame: usize,
    /// Frame index of the sample after the action.
    pub frame: usize,
    #[serde(flatten)]
    pub kind: InteractionKind,
    /// Set when inferred without an input-event stream.
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub low_confidence: bool,
}

/// Mean absolute luma difference between the same rect in two frames.
pub fn region_mad(a: &Raster, b: &Raster, rect: &Rect) -> f64 {
    let (ga, gb) = (to_grayscale(a), to_grayscale(b));
    let mut sum = 0.0f64;
    let mut n = 0u64;
    for y in rect.y..rect.y2().min(ga.height()).min(gb.height()) {
        for x in rect.x..rect.x2().min(ga.width()).min(gb.width()) {
            sum += f64::from((ga.luma(x, y) - gb.luma(x, y)).abs());
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn aligned_mad(prev_img: &Raster, prev_box: &Rect, next_img: &Raster, next_box: &Rect) -> f64 {
    let (ga, gb) = (to_grayscale(prev_img), to_grayscale(next_img));
    let w = prev_box.w.min(next_box.w);
    let h = prev_box.h.min(next_box.h);
    let mut sum = 0.0f64;
    let mut n = 0u64;
    for dy in 0..h {
        for dx in 0..w {
            let (xa, ya) = (prev_box.x + dx, prev_box.y + dy);
            let (xb, yb) = (next_box.x + dx, next_box.y + dy);
            if xa < ga.width() && ya < ga.height() && xb < gb.width() && yb < gb.height() {
                sum += f64::from((ga.luma(xa, ya) - gb.luma(xb, yb)).abs());
                n += 1;
            }
        }
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Pair up elements of two sampled frames. Overlapping boxes match first
/// (best overlap wins); leftovers may match a same-typed, similarly sized
/// element within a fraction of the screen width, nearest first.
pub fn match_elements(
    prev: &FrameElements,
    prev_img: &Raster,
    next: &FrameElements,
    next_img: &Raster,
    cfg: &TrackingConfig,
) -> MatchSet {
    let mut prev_free: Vec<bool> = vec![true; prev.elements.len()];
    let mut next_free: Vec<bool> = vec![true; next.elements.len()];

    let mut overlap_pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (pi, pe) in prev.elements.iter().enumerate() {
        for (ni, ne) in next.elements.iter().enumerate() {
            let iou = pe.bbox.iou(&ne.bbox);
            if iou >= cfg.iou_match {
                overlap_pairs.push((iou, pi, ni));
            }
        }
    }
    overlap_pairs.sort_by(|a, b| {
        b.0.partial_cmp(&a.0).unwrap().then_with(|| (a.1, a.2).cmp(&(b.1, b.2)))
    });
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (_, pi, ni) in overlap_pairs {
        if prev_free[pi] && next_free[ni] {
            prev_free[pi] = false;
            next_free[ni] = false;
            pairs.push((pi, ni));
        }
    }

    let max_dist = cfg.center_dist_frac * f64::from(prev_img.width());
    let mut moved_pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (pi, pe) in prev.elements.iter().enumerate() {
        if !prev_free[pi] {
            continue;
        }
        for (ni, ne) in next.elements.iter().enumerate() {
            if !next_free[ni] || pe.kind != ne.kind {
                continue;
            }
            let (a1, a2) = (pe.bbox.area() as f64, ne.bbox.area() as f64);
            if (a2 - a1).abs() > cfg.area_ratio_tol * a1 {
                continue;
            }
            let (cx1, cy1) = pe.bbox.center();
            let (cx2, cy2) = ne.bbox.center();
            let dist = ((cx2 - cx1).powi(2) + (cy2 - cy1).powi(2)).sqrt();
            if dist < max_dist {
                moved_pairs.push((dist, pi, ni));
            }
        }
    }
    moved_pairs.sort_by(|a, b| {
        a.0.partial_cmp(&b.0).unwrap().then_with(|| (a.1, a.2).cmp(&(b.1, b.2)))
    });
    for (_, pi, ni) in moved_pairs {
        if prev_free[pi] && next_free[ni] {
            prev_free[pi] = false;
            next_free[ni] = false;
            pairs.push((pi, ni));
        }
    }

    pairs.sort();
    let matches = pairs
        .into_iter()
        .map(|(pi, ni)| {
            let pb = prev.elements[pi].bbox;
            let nb = next.elements[ni].bbox;
            ElementMatch {
                prev_id: prev.elements[pi].id,
                next_id: next.elements[ni].id,
                displacement: (
                    i64::from(nb.x) - i64::from(pb.x),
                    i64::from(nb.y) - i64::from(pb.y),
                ),
                appearance_delta: aligned_mad(prev_img, &pb, next_img, &nb),
            }
        })
        .collect();
    MatchSet {
        matches,
        appeared: next
            .elements
            .iter()
            .enumerate()
            .filter(|(ni, _)| next_free[*ni])
            .map(|(_, e)| e.id)
            .collect(),
        disappeared: prev
            .elements
            .iter()
            .enumerate()
            .filter(|(pi, _)| prev_free[*pi])
            .map(|(_, e)| e.id)
            .collect(),
    }
}

fn innermost_hit(elements: &FrameElements, pos: (u32, u32), slop: u32) -> Option<usize> {
    elements
        .elements
        .iter()
        .filter(|e| e.bbox.inflate(slop).contains_point(i64::from(pos.0), i64::from(pos.1)))
        .min_by_key(|e| (e.bbox.area(), e.id))
        .map(|e| e.id)
}

fn parent_of(elements: &FrameElements, id: usize) -> Option<usize> {
    elements
        .relations
        .iter()
        .find(|r| r.source == id && r.kind == RelationKind::Inside)
        .map(|r| r.target)
}

struct Interval<'a> {
    prev: &'a Sample,
    next: &'a Sample,
    matches: MatchSet,
    touches: Vec<&'a InputEvent>,
    has_nearby_input: bool,
    has_major: bool,
}

impl Interval<'_> {
    fn find_match(&self, prev_id: usize) -> Option<&ElementMatch> {
        self.matches.matches.iter().find(|m| m.prev_id == prev_id)
    }

    fn element_delta(&self, prev_id: usize) -> f64 {
        match self.find_match(prev_id) {
            Some(m) => m.appearance_delta,
            None => {
                let bbox = self
                    .prev
                    .elements
                    .elements
                    .iter()
                    .find(|e| e.id == prev_id)
                    .map(|e| e.bbox)
                    .unwrap_or(Rect::new(0, 0, 0, 0));
                region_mad(&self.prev.image, &self.next.image, &bbox)
            }
        }
    }
}

fn try_click(iv: &Interval, cfg: &TrackingConfig) -> Option<InteractionKind> {
    let touch = iv.touches.iter().find(|e| e.kind == InputKind::TouchDown)?;
    let pos = touch.pos?;
    let target = innermost_hit(&iv.prev.elements, pos, cfg.touch_slop_px)?;
    if iv.element_delta(target) >= cfg.click_delta {
        Some(InteractionKind::Click {
            target,
            label: element_label(&iv.prev.elements, target),
        })
    } else {
        None
    }
}

fn try_degraded_click(iv: &Interval, cfg: &TrackingConfig) -> Option<InteractionKind> {
    if !iv.has_major {
        return None;
    }
    let mut changed: Vec<usize> = iv.matches.disappeared.clone();
    for m in &iv.matches.matches {
        let moved = m.displacement.0.abs() > cfg.pixel_jitter
            || m.displacement.1.abs() > cfg.pixel_jitter;
        if moved || m.appearance_delta >= cfg.click_delta {
            changed.push(m.prev_id);
        }
    }
    if changed.len() == 1 {
        let target = changed[0];
        Some(InteractionKind::Click {
            target,
            label: element_label(&iv.prev.elements, target),
        })
    } else {
        None
    }
}

fn try_swipe(iv: &Interval, cfg: &TrackingConfig) -> Option<InteractionKind> {
    let min_len = cfg.swipe_min_frac * f64::from(iv.prev.image.width());
    let movers: Vec<&ElementMatch> = iv
        .matches
        .matches
        .iter()
        .filter(|m| {
            let (dx, dy) = m.displacement;
            ((dx * dx + dy * dy) as f64).sqrt() >= min_len
        })
        .collect();
    // largest coherent displacement group, medoid by smallest prev id
    let mut best: Option<(usize, &ElementMatch)> = None;
    for m in &movers {
        let group = movers
            .iter()
            .filter(|o| {
                (o.displacement.0 - m.displacement.0).abs() <= cfg.pixel_jitter
                    && (o.displacement.1 - m.displacement.1).abs() <= cfg.pixel_jitter
            })
            .count();
        let better = match best {
            None => true,
            Some((bg, bm)) => group > bg || (group == bg && m.prev_id < bm.prev_id),
        };
        if better {
            best = Some((group, m));
        }
    }
    let (group, medoid) = best?;
    if group < cfg.swipe_quorum {
        return None;
    }
    let (dx, dy) = medoid.displacement;
    let direction = if dx.abs() >= dy.abs() {
        if dx > 0 {
            SwipeDirection::Right
        } else {
            SwipeDirection::Left
        }
    } else if dy > 0 {
        SwipeDirection::Down
    } else {
        SwipeDirection::Up
    };
    Some(InteractionKind::Swipe { direction })
}

fn try_adjust(iv: &Interval, cfg: &TrackingConfig) -> Option<InteractionKind> {
    let mut best: Option<(usize, InteractionKind)> = None;
    for m in &iv.matches.matches {
        let knob = iv.prev.elements.elements.iter().find(|e| e.id == m.prev_id)?;
        if knob.rel_size > cfg.adjust_max_rel {
            continue;
        }
        let (dx, dy) = m.displacement;
        let one_axis_travel = if dy.abs() <= cfg.pixel_jitter && dx.abs() >= cfg.adjust_min_px {
            Some((dx, true))
        } else if dx.abs() <= cfg.pixel_jitter && dy.abs() >= cfg.adjust_min_px {
            Some((dy, false))
        } else {
            None
        };
        let Some((travel, _horizontal)) = one_axis_travel else { continue };
        let Some(parent) = parent_of(&iv.prev.elements, knob.id) else { continue };
        let parent_el = iv.prev.elements.elements.iter().find(|e| e.id == parent)?;
        if parent_el.kind != ElementType::Comb {
            continue;
        }
        // the track must hold still while the knob travels
        let parent_moved = match iv.find_match(parent) {
            Some(pm) => {
                pm.displacement.0.abs() > cfg.pixel_jitter
                    || pm.displacement.1.abs() > cfg.pixel_jitter
            }
            None => true,
        };
        if parent_moved {
            continue;
        }
        let kind = InteractionKind::Adjust {
            target: parent,
            label: element_label(&iv.prev.elements, parent),
            delta: travel,
        };
        let better = best.as_ref().map_or(true, |(bid, _)| knob.id < *bid);
        if better {
            best = Some((knob.id, kind));
        }
    }
    best.map(|(_, kind)| kind)
}

/// Explain each sample interval with the first rule that fits. With an
/// event stream: click, swipe, adjust, transition; changes with no input
/// anywhere near the interval are animations and explain nothing. Without
/// events every inference is flagged low-confidence.
pub fn infer_interactions(
    samples: &[Sample],
    events: &[InputEvent],
    majors: &[MajorEvent],
    cfg: &TrackingConfig,
) -> Vec<Interaction> {
    let have_events = !events.is_empty();
    let mut out = Vec::new();
    for step in 0..samples.len().saturating_sub(1) {
        let prev = &samples[step];
        let next = &samples[step + 1];
        let matches = match_elements(&prev.elements, &prev.image, &next.elements, &next.image, cfg);
        let touches: Vec<&InputEvent> = events
            .iter()
            .filter(|e| e.t_ms > prev.t_ms && e.t_ms <= next.t_ms)
            .collect();
        let lo = prev.t_ms.saturating_sub(cfg.animation_window_ms);
        let hi = next.t_ms + cfg.animation_window_ms;
        let has_nearby_input = events.iter().any(|e| e.t_ms >= lo && e.t_ms <= hi);
        let has_major = majors
            .iter()
            .any(|m| m.frame_index > prev.frame_index && m.frame_index <= next.frame_index);
        let iv = Interval { prev, next, matches, touches, has_nearby_input, has_major };

        let kind = if have_events {
            if iv.has_nearby_input {
                try_click(&iv, cfg)
                    .or_else(|| try_swipe(&iv, cfg))
                    .or_else(|| try_adjust(&iv, cfg))
                    .or_else(|| iv.has_major.then_some(InteractionKind::Transition))
            } else {
                // input-free changes are animations; only a major event
                // still counts, as a bare transition
                iv.has_major.then_some(InteractionKind::Transition)
            }
        } else {
            try_degraded_click(&iv, cfg)
                .or_else(|| try_swipe(&iv, cfg))
                .or_else(|| try_adjust(&iv, cfg))
                .or_else(|| iv.has_major.then_some(InteractionKind::Transition))
        };
        if let Some(kind) = kind {
            out.push(Interaction {
                step,
                prev_frame: prev.frame_index,
                frame: next.frame_index,
                kind,
                low_confidence: !have_events,
            });
        }
    }
    out
}

/// Lowercased, whitespace collapsed to single underscores.
pub fn label_slug(s: &str) -> String {
    s.to_lowercase().split_whitespace().collect::<Vec<_>>().join("_")
}

fn handle(target: usize, label: &Option<String>) -> String {
    label.as_deref().map_or_else(|| format!("#{target}"), label_slug)
}

/// One token per interaction: `click:<label>`, `swipe:<direction>`,
/// `adjust:<label>:<sign>`, `transition`. Unlabeled targets fall back to
/// `#<id>`.
pub fn tokenize(interactions: &[Interaction]) -> Vec<String> {
    interactions
        .iter()
        .map(|i| match &i.kind {
            InteractionKind::Click { target, label } => {
                format!("click:{}", handle(*target, label))
            }
            InteractionKind::Swipe { direction } => {
                let d = match direction {
                    SwipeDirection::Left => "left",
                    SwipeDirection::Right => "right",
                    SwipeDirection::Up => "up",
                    SwipeDirection::Down => "down",
                };
                format!("swipe:{d}")
            }
            InteractionKind::Adjust { target, label, delta } => {
                let s = if *delta > 0 { "+" } else { "-" };
                format!("adjust:{}:{s}", handle(*target, label))
            }
            InteractionKind::Transition => "transition".to_string(),
        })
        .collect()
}
