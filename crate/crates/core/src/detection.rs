//! Per-frame GUI element detection: edge-based candidate extraction,
//! pluggable text localization, element typing, and spatial relations.
//!
//! The pipeline is grayscale -> blur -> edge detection -> dilation ->
//! contour tracing. Dilating first fuses the double walls and corner gaps
//! the edge pass leaves behind, so every on-screen widget surfaces as one
//! blob; the concentric inner/outer walls are then collapsed by bounding-box
//! merging and the dilation padding removed by a fixed deflation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Rect;
use crate::imaging::{
    canny, classify_shape_with, contour_metrics, dilate, gaussian_blur, to_grayscale, trace_contours,
    ImagingError, Orientation, Raster, Shape, ShapeThresholds,
};
use crate::vislog::ScreenDim;

#[derive(Debug, Error)]
pub enum DetectError {
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error("truth file {path}: {reason}")]
    Truth { path: PathBuf, reason: String },
    #[error("frame {0} missing from truth file")]
    FrameMissingFromTruth(usize),
    #[error("text detector command failed: {0}")]
    External(String),
    #[error("text region {index} out of bounds for {width}x{height} frame")]
    RegionOutOfBounds { index: usize, width: u32, height: u32 },
    #[error("config: {0}")]
    Config(String),
    #[error("io {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn default_blur_sigma() -> f64 {
    1.4
}
fn default_canny_low() -> f64 {
    0.10
}
fn default_canny_high() -> f64 {
    0.25
}
fn default_dilate_radius() -> u32 {
    1
}
fn default_min_rel_size() -> f64 {
    0.0001
}
fn default_max_irregular_rel_size() -> f64 {
    0.01
}
fn default_container_min_rel_size() -> f64 {
    0.01
}
fn default_text_overlap_frac() -> f64 {
    0.5
}
fn default_relation_gap_frac() -> f64 {
    0.02
}
fn default_alignment_frac() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    pub blur_sigma: f64,
    pub canny_low: f64,
    pub canny_high: f64,
    pub dilate_radius: u32,
    /// Bbox-side tolerance for collapsing concentric contour walls.
    /// `None` means twice the dilation radius.
    pub merge_margin: Option<u32>,
    /// Per-side shrink applied to merged boxes to undo edge/dilation
    /// padding. `None` means dilation radius + 1.
    pub bbox_deflate: Option<u32>,
    /// Candidates smaller than this fraction of the screen are noise.
    pub min_rel_size: f64,
    /// Candidates larger than this fraction must look like clean shapes.
    pub max_irregular_rel_size: f64,
    /// Clean-shaped candidates at least this large are containers.
    pub container_min_rel_size: f64,
    /// Candidate is text debris when one region covers this much of it.
    pub text_overlap_frac: f64,
    /// Caption search distance as a fraction of the screen side.
    pub relation_gap_frac: f64,
    /// Caption center alignment tolerance as a fraction of the screen side.
    pub alignment_frac: f64,
    pub shape: ShapeThresholds,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            blur_sigma: default_blur_sigma(),
            canny_low: default_canny_low(),
            canny_high: default_canny_high(),
            dilate_radius: default_dilate_radius(),
            merge_margin: None,
            bbox_deflate: None,
            min_rel_size: default_min_rel_size(),
            max_irregular_rel_size: default_max_irregular_rel_size(),
            container_min_rel_size: default_container_min_rel_size(),
            text_overlap_frac: default_text_overlap_frac(),
            relation_gap_frac: default_relation_gap_frac(),
            alignment_frac: default_alignment_frac(),
            shape: ShapeThresholds::default(),
        }
    }
}

impl DetectorConfig {
    pub fn merge_margin(&self) -> u32 {
        self.merge_margin.unwrap_or(2 * self.dilate_radius)
    }

    pub fn bbox_deflate(&self) -> u32 {
        self.bbox_deflate.unwrap_or(self.dilate_radius + 1)
    }

    pub fn validate(&self) -> Result<(), DetectError> {
        let err = |m: String| Err(DetectError::Config(m));
        if !(self.blur_sigma > 0.0 && self.blur_sigma <= 10.0) {
            return err(format!("blur_sigma {} outside (0, 10]", self.blur_sigma));
        }
        if !(0.0..1.0).contains(&self.canny_low)
            || !(0.0..=1.0).contains(&self.canny_high)
            || self.canny_low >= self.canny_high
        {
            return err(format!(
                "canny thresholds {}..{} must satisfy 0 <= low < high <= 1",
                self.canny_low, self.canny_high
            ));
        }
        if !(1..=10).contains(&self.dilate_radius) {
            return err(format!("dilate_radius {} outside 1..=10", self.dilate_radius));
        }
        for (name, v) in [
            ("min_rel_size", self.min_rel_size),
            ("max_irregular_rel_size", self.max_irregular_rel_size),
            ("container_min_rel_size", self.container_min_rel_size),
            ("text_overlap_frac", self.text_overlap_frac),
            ("relation_gap_frac", self.relation_gap_frac),
            ("alignment_frac", self.alignment_frac),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return err(format!("{name} {v} outside [0, 1]"));
            }
        }
        if self.min_rel_size > self.max_irregular_rel_size {
            return err("min_rel_size exceeds max_irregular_rel_size".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementType {
    Icon,
    Text,
    Comb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuiElement {
    pub id: usize,
    #[serde(rename = "type")]
    pub kind: ElementType,
    pub bbox: Rect,
    pub shape: Shape,
    pub orientation: Orientation,
    /// Bbox area over screen area.
    pub rel_size: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub label: Option<String>,
    /// Ids of directly contained elements.
    #[serde(default)]
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationKind {
    Above,
    Below,
    Left,
    Right,
    Inside,
}

/// `source <kind> target`: "text 3 sits below icon 1" is
/// `{source: 3, target: 1, kind: below}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementRelation {
    pub source: usize,
    pub target: usize,
    pub kind: RelationKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameElements {
    pub frame: usize,
    pub elements: Vec<GuiElement>,
    pub relations: Vec<ElementRelation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextRegion {
    pub bbox: Rect,
    pub text: String,
}

/// Ground-truth sidecar written next to synthetic logs: per-frame elements
/// and relations, the action tokens the script performed, and the frame
/// indices where major visual events land.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub screen: ScreenDim,
    pub frames: Vec<TruthFrame>,
    pub tokens: Vec<String>,
    pub major_events: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFrame {
    pub frame: usize,
    pub elements: Vec<GuiElement>,
    pub relations: Vec<ElementRelation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorPolicy {
    /// Text-detector failures abort the frame.
    Strict,
    /// Text-detector failures degrade to "no text found" plus a warning.
    Lenient,
}

#[derive(Debug, Clone)]
pub enum TextDetector {
    None,
    /// Reads text boxes for the frame index from a truth sidecar.
    Oracle { truth_path: PathBuf },
    /// Runs `command <frame.png>` and parses a JSON array of regions from
    /// stdout. The command string is split on whitespace; no shell.
    External { command: String },
}

impl TextDetector {
    pub fn detect(
        &self,
        frame: &Raster,
        frame_index: usize,
        png_path: Option<&Path>,
    ) -> Result<Vec<TextRegion>, DetectError> {
        match self {
            TextDetector::None => Ok(Vec::new()),
            TextDetector::Oracle { truth_path } => {
                let truth = load_truth(truth_path)?;
                let tf = truth
                    .frames
                    .iter()
                    .find(|f| f.frame == frame_index)
                    .ok_or(DetectError::FrameMissingFromTruth(frame_index))?;
                Ok(tf
                    .elements
                    .iter()
                    .filter(|e| e.kind == ElementType::Text)
                    .map(|e| TextRegion {
                        bbox: e.bbox,
                        text: e.label.clone().unwrap_or_default(),
                    })
                    .collect())
            }
            TextDetector::External { command } => {
                let mut parts = command.split_whitespace();
                let program = parts
                    .next()
                    .ok_or_else(|| DetectError::External("empty command".into()))?;
                // The command needs a file on disk; write one if the caller
                // only has the decoded frame.
                let (path, cleanup) = match png_path {
                    Some(p) => (p.to_path_buf(), false),
                    None => {
                        let p = std::env::temp_dir().join(format!(
                            "vislog-text-{}-{}.png",
                            std::process::id(),
                            frame_index
                        ));
                        crate::vislog::save_frame_png(frame, &p)
                            .map_err(|e| DetectError::External(e.to_string()))?;
                        (p, true)
                    }
                };
                let out = Command::new(program).args(parts).arg(&path).output();
                if cleanup {
                    let _ = std::fs::remove_file(&path);
                }
                let out = out.map_err(|e| DetectError::External(format!("{program}: {e}")))?;
                if !out.status.success() {
                    return Err(DetectError::External(format!(
                        "{program} exited with {}: {}",
                        out.status,
                        String::from_utf8_lossy(&out.stderr).trim()
                    )));
                }
                serde_json::from_slice::<Vec<TextRegion>>(&out.stdout)
                    .map_err(|e| DetectError::External(format!("bad region JSON: {e}")))
            }
        }
    }
}

pub fn load_truth(path: &Path) -> Result<TruthFile, DetectError> {
    let bytes = std::fs::read(path).map_err(|source| DetectError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_slice(&bytes).map_err(|e| DetectError::Truth {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

pub fn save_truth(truth: &TruthFile, path: &Path) -> Result<(), DetectError> {
    let json = serde_json::to_vec_pretty(truth).expect("truth serializes");
    std::fs::write(path, json).map_err(|source| DetectError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Size/shape filter: too-small boxes are sensor noise, and large blobs
/// that are neither clean shapes nor axis-aligned are background texture.
/// Boundary values pass on both sides.
pub fn passes_size_filter(
    bbox: &Rect,
    screen_area: u64,
    shape: Shape,
    orientation: Orientation,
    cfg: &DetectorConfig,
) -> bool {
    let rel = bbox.area() as f64 / screen_area as f64;
    if rel < cfg.min_rel_size {
        return false;
    }
    if rel > cfg.max_irregular_rel_size
        && (shape == Shape::Irregular || orientation == Orientation::Irregular)
    {
        return false;
    }
    true
}

#[derive(Debug, Clone)]
struct Candidate {
    bbox: Rect,
    shape: Shape,
    orientation: Orientation,
}

/// Collapse concentric walls: a box whose four sides each sit within
/// `margin` of a larger kept box is the same widget's inner wall.
fn merge_boxes(mut cands: Vec<Candidate>, margin: u32) -> Vec<Candidate> {
    cands.sort_by(|a, b| {
        b.bbox
            .area()
            .cmp(&a.bbox.area())
            .then_with(|| (a.bbox.y, a.bbox.x).cmp(&(b.bbox.y, b.bbox.x)))
    });
    let near = |a: u32, b: u32| a.abs_diff(b) <= margin;
    let mut kept: Vec<Candidate> = Vec::new();
    for c in cands {
        let absorbed = kept.iter().any(|k| {
            near(c.bbox.x, k.bbox.x)
                && near(c.bbox.y, k.bbox.y)
                && near(c.bbox.x2(), k.bbox.x2())
                && near(c.bbox.y2(), k.bbox.y2())
        });
        if !absorbed {
            kept.push(c);
        }
    }
    kept
}

/// Orientation a text box gets from its aspect alone; reading order makes
/// wide-or-square boxes horizontal.
pub fn text_orientation(bbox: &Rect) -> Orientation {
    if bbox.w >= bbox.h {
        Orientation::Horizontal
    } else {
        Orientation::Vertical
    }
}

pub fn detect_elements(
    frame: &Raster,
    frame_index: usize,
    png_path: Option<&Path>,
    cfg: &DetectorConfig,
    text: &TextDetector,
    policy: ErrorPolicy,
) -> Result<FrameElements, DetectError> {
    detect_elements_with_report(frame, frame_index, png_path, cfg, text, policy).map(|(fe, _)| fe)
}

pub fn detect_elements_with_report(
    frame: &Raster,
    frame_index: usize,
    png_path: Option<&Path>,
    cfg: &DetectorConfig,
    text: &TextDetector,
    policy: ErrorPolicy,
) -> Result<(FrameElements, Vec<String>), DetectError> {
    cfg.validate()?;
    let mut warnings = Vec::new();
    let (width, height) = (frame.width(), frame.height());
    let screen_area = u64::from(width) * u64::from(height);

    let gray = to_grayscale(frame);
    let blurred = gaussian_blur(&gray, cfg.blur_sigma)?;
    let edges = canny(&blurred, cfg.canny_low, cfg.canny_high)?;
    let mask = dilate(&edges, cfg.dilate_radius)?;
    let contours = trace_contours(&mask);

    let mut cands = Vec::new();
    for contour in &contours {
        let m = contour_metrics(contour)?;
        let (shape, orientation) = classify_shape_with(&m, &cfg.shape);
        cands.push(Candidate { bbox: m.bbox, shape, orientation });
    }
    let mut cands = merge_boxes(cands, cfg.merge_margin());
    for c in &mut cands {
        c.bbox = c.bbox.deflate(cfg.bbox_deflate());
    }
    cands.retain(|c| passes_size_filter(&c.bbox, screen_area, c.shape, c.orientation, cfg));

    // Text pass: suppress candidates that are really text debris, then add
    // the regions themselves as elements.
    let regions = match text.detect(frame, frame_index, png_path) {
        Ok(r) => r,
        Err(e) if policy == ErrorPolicy::Lenient => {
            warnings.push(format!("frame {frame_index}: text detector failed: {e}"));
            Vec::new()
        }
        Err(e) => return Err(e),
    };
    let mut valid_regions = Vec::new();
    for (i, r) in regions.into_iter().enumerate() {
        let frame_rect = Rect::new(0, 0, width, height);
        if !frame_rect.contains_rect(&r.bbox) || r.bbox.area() == 0 {
            match policy {
                ErrorPolicy::Strict => {
                    return Err(DetectError::RegionOutOfBounds { index: i, width, height })
                }
                ErrorPolicy::Lenient => {
                    warnings.push(format!(
                        "frame {frame_index}: dropping out-of-bounds text region {i}"
                    ));
                    continue;
                }
            }
        }
        valid_regions.push(r);
    }
    cands.retain(|c| {
        let area = c.bbox.area();
        !valid_regions
            .iter()
            .any(|r| r.bbox.intersection_area(&c.bbox) as f64 >= cfg.text_overlap_frac * area as f64)
    });

    let mut slots: Vec<ElementSlot> = cands
        .into_iter()
        .map(|c| ElementSlot {
            bbox: c.bbox,
            shape: c.shape,
            orientation: c.orientation,
            label: None,
            is_text: false,
        })
        .collect();
    for r in valid_regions {
        if (r.bbox.area() as f64) < cfg.min_rel_size * screen_area as f64 {
            continue;
        }
        slots.push(ElementSlot {
            bbox: r.bbox,
            shape: Shape::Rectangle,
            orientation: text_orientation(&r.bbox),
            label: (!r.text.is_empty()).then(|| r.text),
            is_text: true,
        });
    }

    Ok((assemble_elements(slots, frame_index, width, height, cfg), warnings))
}

/// One to-be element before ids and types are fixed.
#[derive(Debug, Clone)]
pub(crate) struct ElementSlot {
    pub bbox: Rect,
    pub shape: Shape,
    pub orientation: Orientation,
    pub label: Option<String>,
    pub is_text: bool,
}

/// Turn raw slots into the final frame structure: reading-order ids,
/// container typing, direct-containment children, relations. Shared by the
/// detector and the synthetic ground-truth writer so the two can never
/// disagree on conventions.
pub(crate) fn assemble_elements(
    mut slots: Vec<ElementSlot>,
    frame_index: usize,
    width: u32,
    height: u32,
    cfg: &DetectorConfig,
) -> FrameElements {
    let screen_area = u64::from(width) * u64::from(height);

    // Reading order fixes ids: top-to-bottom, then left-to-right.
    slots.sort_by_key(|s| (s.bbox.y, s.bbox.x, s.bbox.w, s.bbox.h));

    // Strict containment: equal boxes are the same widget, not a hierarchy.
    let contains = |a: &Rect, b: &Rect| a.contains_rect(b) && b.area() < a.area();
    let n = slots.len();
    let mut parent: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        // smallest enclosing slot = direct parent
        let mut best: Option<usize> = None;
        for j in 0..n {
            if i != j && contains(&slots[j].bbox, &slots[i].bbox) {
                best = match best {
                    Some(b) if slots[b].bbox.area() <= slots[j].bbox.area() => Some(b),
                    _ => Some(j),
                };
            }
        }
        parent[i] = best;
    }
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        if let Some(p) = parent[i] {
            children[p].push(i);
        }
    }

    let mut elements = Vec::with_capacity(n);
    for (id, s) in slots.iter().enumerate() {
        let kind = if s.is_text {
            ElementType::Text
        } else {
            let rel = s.bbox.area() as f64 / screen_area as f64;
            let clean = s.shape == Shape::Rectangle || s.shape == Shape::Circle;
            if !children[id].is_empty() || (rel >= cfg.container_min_rel_size && clean) {
                ElementType::Comb
            } else {
                ElementType::Icon
            }
        };
        elements.push(GuiElement {
            id,
            kind,
            bbox: s.bbox,
            shape: s.shape,
            orientation: s.orientation,
            rel_size: s.bbox.area() as f64 / screen_area as f64,
            label: s.label.clone(),
            children: children[id].clone(),
        });
    }

    let relations = infer_relations(&elements, &parent, width, height, cfg);
    FrameElements { frame: frame_index, elements, relations }
}

/// Containment gives every child an `inside` relation. Uncontained text
/// additionally attaches to the nearest icon/container it captions: the
/// boxes must be gap-close along one axis and center-aligned on the other.
fn infer_relations(
    elements: &[GuiElement],
    parent: &[Option<usize>],
    width: u32,
    height: u32,
    cfg: &DetectorConfig,
) -> Vec<ElementRelation> {
    let mut relations = Vec::new();
    for (i, p) in parent.iter().enumerate() {
        if let Some(p) = p {
            relations.push(ElementRelation { source: i, target: *p, kind: RelationKind::Inside });
        }
    }

    let max_gap_y = cfg.relation_gap_frac * f64::from(height);
    let max_gap_x = cfg.relation_gap_frac * f64::from(width);
    let align_x = cfg.alignment_frac * f64::from(width);
    let align_y = cfg.alignment_frac * f64::from(height);
    for t in elements.iter().filter(|e| e.kind == ElementType::Text) {
        if parent[t.id].is_some() {
            continue;
        }
        let (tcx, tcy) = t.bbox.center();
        let mut best: Option<(f64, usize, RelationKind)> = None;
        for e in elements.iter().filter(|e| e.kind != ElementType::Text) {
            let (ecx, ecy) = e.bbox.center();
            let mut consider = |gap: f64, kind: RelationKind| {
                if gap >= 0.0 {
                    let better = match best {
                        None => true,
                        Some((bg, bid, _)) => gap < bg || (gap == bg && e.id < bid),
                    };
                    if better {
                        best = Some((gap, e.id, kind));
                    }
                }
            };
            if (tcx - ecx).abs() <= align_x {
                let below_gap = f64::from(t.bbox.y) - f64::from(e.bbox.y2());
                if (0.0..=max_gap_y).contains(&below_gap) {
                    consider(below_gap, RelationKind::Below);
                }
                let above_gap = f64::from(e.bbox.y) - f64::from(t.bbox.y2());
                if (0.0..=max_gap_y).contains(&above_gap) {
                    consider(above_gap, RelationKind::Above);
                }
            }
            if (tcy - ecy).abs() <= align_y {
                let right_gap = f64::from(t.bbox.x) - f64::from(e.bbox.x2());
                if (0.0..=max_gap_x).contains(&right_gap) {
                    consider(right_gap, RelationKind::Right);
                }
                let left_gap = f64::from(e.bbox.x) - f64::from(t.bbox.x2());
                if (0.0..=max_gap_x).contains(&left_gap) {
                    consider(left_gap, RelationKind::Left);
                }
            }
        }
        if let Some((_, target, kind)) = best {
            relations.push(ElementRelation { source: t.id, target, kind });
        }
    }
    relations.sort_by_key(|r| (r.source, r.target, r.kind));
    relations
}

/// Human-readable handle for an element: its own text, a contained text
/// child, or the caption text pointing at it.
pub fn element_label(fe: &FrameElements, id: usize) -> Option<String> {
    let by_id: BTreeMap<usize, &GuiElement> = fe.elements.iter().map(|e| (e.id, e)).collect();
    let el = by_id.get(&id)?;
    if el.label.is_some() {
        return el.label.clone();
    }
    if el.kind == ElementType::Text {
        return None;
    }
    for child in &el.children {
        if let Some(c) = by_id.get(child) {
            if c.kind == ElementType::Text && c.label.is_some() {
                return c.label.clone();
            }
        }
    }
    fe.relations
        .iter()
        .filter(|r| r.target == id && r.kind != RelationKind::Inside)
        .filter_map(|r| by_id.get(&r.source))
        .find(|s| s.kind == ElementType::Text && s.label.is_some())
        .and_then(|s| s.label.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vislog::ScreenDim;

    fn flat(width: u32, height: u32, v: f32) -> Raster {
        let mut r = Raster::gray(width, height);
        for y in 0..height {
            for x in 0..width {
                r.set(x, y, 0, v);
            }
        }
        r
    }

    fn paint_rect(img: &mut Raster, rect: Rect, v: f32) {
        for y in rect.y..rect.y2() {
            for x in rect.x..rect.x2() {
                img.set(x, y, 0, v);
            }
        }
    }

    fn paint_disc(img: &mut Raster, cx: i64, cy: i64, r: i64, v: f32) {
        for y in 0..img.height() as i64 {
            for x in 0..img.width() as i64 {
                if (x - cx).pow(2) + (y - cy).pow(2) <= r * r {
                    img.set(x as u32, y as u32, 0, v);
                }
            }
        }
    }

    fn detect(frame: &Raster) -> FrameElements {
        detect_elements(
            frame,
            0,
            None,
            &DetectorConfig::default(),
            &TextDetector::None,
            ErrorPolicy::Strict,
        )
        .unwrap()
    }

    #[test]
    fn config_defaults_and_derived_values() {
        let cfg = DetectorConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.merge_margin(), 2);
        assert_eq!(cfg.bbox_deflate(), 2);
        let cfg2 = DetectorConfig { dilate_radius: 3, ..Default::default() };
        assert_eq!(cfg2.merge_margin(), 6);
        assert_eq!(cfg2.bbox_deflate(), 4);
    }

    #[test]
    fn config_rejects_bad_values() {
        for cfg in [
            DetectorConfig { blur_sigma: 0.0, ..Default::default() },
            DetectorConfig { canny_low: 0.5, canny_high: 0.2, ..Default::default() },
            DetectorConfig { dilate_radius: 0, ..Default::default() },
            DetectorConfig { min_rel_size: 1.5, ..Default::default() },
            DetectorConfig { min_rel_size: 0.5, max_irregular_rel_size: 0.01, ..Default::default() },
        ] {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn config_json_rejects_unknown_fields() {
        let r: Result<DetectorConfig, _> = serde_json::from_str(r#"{"blur_zigma": 2.0}"#);
        assert!(r.is_err());
        let ok: DetectorConfig = serde_json::from_str(r#"{"blur_sigma": 2.0}"#).unwrap();
        assert_eq!(ok.blur_sigma, 2.0);
        assert_eq!(ok.canny_low, 0.10);
    }

    #[test]
    fn size_filter_boundaries_are_kept() {
        let cfg = DetectorConfig::default();
        let screen = 1_000_000u64;
        // 10x10 / 1e6 == min_rel_size exactly
        assert!(passes_size_filter(
            &Rect::new(0, 0, 10, 10),
            screen,
            Shape::Irregular,
            Orientation::Irregular,
            &cfg
        ));
        // 9x11 = 99 < 100: too small whatever the shape
        assert!(!passes_size_filter(
            &Rect::new(0, 0, 9, 11),
            screen,
            Shape::Rectangle,
            Orientation::Horizontal,
            &cfg
        ));
        // 100x100 / 1e6 == max boundary: irregular still kept
        assert!(passes_size_filter(
            &Rect::new(0, 0, 100, 100),
            screen,
            Shape::Irregular,
            Orientation::Irregular,
            &cfg
        ));
        // 101x100 just over: irregular shape dropped...
        assert!(!passes_size_filter(
            &Rect::new(0, 0, 101, 100),
            screen,
            Shape::Irregular,
            Orientation::Horizontal,
            &cfg
        ));
        // ...clean orientation alone does not save an irregular shape,
        // and vice versa
        assert!(!passes_size_filter(
            &Rect::new(0, 0, 101, 100),
            screen,
            Shape::Rectangle,
            Orientation::Irregular,
            &cfg
        ));
        // large but clean: kept
        assert!(passes_size_filter(
            &Rect::new(0, 0, 500, 400),
            screen,
            Shape::Rectangle,
            Orientation::Horizontal,
            &cfg
        ));
    }

    #[test]
    fn merge_collapses_concentric_walls() {
        let mk = |r: Rect| Candidate { bbox: r, shape: Shape::Rectangle, orientation: Orientation::Horizontal };
        let merged = merge_boxes(
            vec![
                mk(Rect::new(10, 10, 30, 20)),
                mk(Rect::new(12, 12, 26, 16)), // inner wall, sides within 2
                mk(Rect::new(60, 10, 20, 20)), // separate widget
            ],
            2,
        );
        let boxes: Vec<Rect> = merged.iter().map(|c| c.bbox).collect();
        assert_eq!(boxes.len(), 2);
        assert!(boxes.contains(&Rect::new(10, 10, 30, 20)));
        assert!(boxes.contains(&Rect::new(60, 10, 20, 20)));
    }

    #[test]
    fn merge_keeps_distinct_nested_widgets() {
        let mk = |r: Rect| Candidate { bbox: r, shape: Shape::Rectangle, orientation: Orientation::Horizontal };
        // inner box well inside: a real nested widget, sides differ by 8
        let merged = merge_boxes(
            vec![mk(Rect::new(10, 10, 40, 40)), mk(Rect::new(18, 18, 24, 24))],
            2,
        );
        assert_eq!(merged.len(), 2);
    }

    #[test]
    fn bright_rect_detected_with_tight_bbox() {
        let mut img = flat(200, 150, 0.15);
        let truth = Rect::new(60, 50, 30, 24);
        paint_rect(&mut img, truth, 0.85);
        let fe = detect(&img);
        assert_eq!(fe.elements.len(), 1, "{:?}", fe.elements);
        let e = &fe.elements[0];
        assert_eq!(e.shape, Shape::Rectangle);
        assert_eq!(e.orientation, Orientation::Horizontal);
        assert!(e.bbox.iou(&truth) > 0.8, "bbox {:?} vs {truth:?}", e.bbox);
        assert_eq!(e.id, 0);
        assert!(e.children.is_empty());
    }

    #[test]
    fn small_rect_is_icon_large_rect_is_comb() {
        let mut img = flat(200, 150, 0.1);
        paint_rect(&mut img, Rect::new(20, 20, 12, 10), 0.9); // rel 0.004
        let fe = detect(&img);
        assert_eq!(fe.elements.len(), 1);
        assert_eq!(fe.elements[0].kind, ElementType::Icon);

        let mut img2 = flat(200, 150, 0.1);
        paint_rect(&mut img2, Rect::new(20, 20, 60, 40), 0.9); // rel 0.08
        let fe2 = detect(&img2);
        assert_eq!(fe2.elements.len(), 1);
        assert_eq!(fe2.elements[0].kind, ElementType::Comb);
    }

    #[test]
    fn disc_is_single_circle_candidate() {
        // the dilated ring's hole wall must merge away, not become a
        // phantom second element
        let mut img = flat(400, 300, 0.12);
        paint_disc(&mut img, 200, 150, 14, 0.88);
        let fe = detect(&img);
        assert_eq!(fe.elements.len(), 1, "{:?}", fe.elements);
        let e = &fe.elements[0];
        assert_eq!(e.shape, Shape::Circle);
        assert_eq!(e.kind, ElementType::Icon);
        assert_eq!(e.orientation, Orientation::Horizontal);
        let truth = Rect::new(186, 136, 29, 29);
        assert!(e.bbox.iou(&truth) > 0.75, "bbox {:?}", e.bbox);
    }

    #[test]
    fn uniform_frame_has_no_elements() {
        let fe = detect(&flat(120, 90, 0.4));
        assert!(fe.elements.is_empty());
        assert!(fe.relations.is_empty());
    }

    #[test]
    fn panel_with_inner_icon_nests() {
        let mut img = flat(300, 200, 0.08);
        paint_rect(&mut img, Rect::new(40, 30, 140, 100), 0.40);
        paint_rect(&mut img, Rect::new(70, 60, 24, 20), 0.90);
        let fe = detect(&img);
        assert_eq!(fe.elements.len(), 2, "{:?}", fe.elements);
        let panel = fe.elements.iter().find(|e| e.bbox.w > 100).unwrap();
        let icon = fe.elements.iter().find(|e| e.bbox.w < 100).unwrap();
        assert_eq!(panel.kind, ElementType::Comb);
        assert_eq!(icon.kind, ElementType::Icon);
        assert_eq!(panel.children, vec![icon.id]);
        assert_eq!(
            fe.relations,
            vec![ElementRelation { source: icon.id, target: panel.id, kind: RelationKind::Inside }]
        );
    }

    #[test]
    fn ids_follow_reading_order() {
        let mut img = flat(300, 200, 0.1);
        paint_rect(&mut img, Rect::new(200, 20, 20, 16), 0.9); // top right
        paint_rect(&mut img, Rect::new(30, 24, 20, 16), 0.9); // top left, lower y? no: y=24 > 20
        paint_rect(&mut img, Rect::new(30, 120, 20, 16), 0.9); // bottom
        let fe = detect(&img);
        assert_eq!(fe.elements.len(), 3);
        // detected y for the first two: 20 vs 24 (minus padding skew is
        // uniform), so order is right-top, left-top, bottom
        assert!(fe.elements[0].bbox.x > 150);
        assert!(fe.elements[1].bbox.x < 100 && fe.elements[1].bbox.y < 60);
        assert!(fe.elements[2].bbox.y > 100);
        assert_eq!(
            fe.elements.iter().map(|e| e.id).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );
    }

    fn write_truth_with_text(dir: &Path, frame: usize, bbox: Rect, text: &str) -> PathBuf {
        let truth = TruthFile {
            screen: ScreenDim { width: 300, height: 200 },
            frames: vec![TruthFrame {
                frame,
                elements: vec![GuiElement {
                    id: 0,
                    kind: ElementType::Text,
                    bbox,
                    shape: Shape::Rectangle,
                    orientation: Orientation::Horizontal,
                    rel_size: bbox.area() as f64 / 60_000.0,
                    label: Some(text.to_string()),
                    children: vec![],
                }],
                relations: vec![],
            }],
            tokens: vec![],
            major_events: vec![],
        };
        let path = dir.join("truth.json");
        save_truth(&truth, &path).unwrap();
        path
    }

    #[test]
    fn oracle_detector_reads_truth_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let region = Rect::new(50, 100, 60, 12);
        let path = write_truth_with_text(dir.path(), 7, region, "save");
        let det = TextDetector::Oracle { truth_path: path.clone() };
        let img = flat(300, 200, 0.2);
        let got = det.detect(&img, 7, None).unwrap();
        assert_eq!(got, vec![TextRegion { bbox: region, text: "save".into() }]);
        // frame not in truth: strict error
        assert!(matches!(
            det.detect(&img, 3, None),
            Err(DetectError::FrameMissingFromTruth(3))
        ));
    }

    #[test]
    fn text_region_becomes_labeled_text_element_and_suppresses_debris() {
        let mut img = flat(300, 200, 0.1);
        // icon plus striped "text" under it
        paint_rect(&mut img, Rect::new(60, 40, 24, 20), 0.9);
        for stripe in 0..3 {
            paint_rect(&mut img, Rect::new(56, 64 + stripe * 5, 32, 3), 0.8);
        }
        let dir = tempfile::tempdir().unwrap();
        let region = Rect::new(54, 62, 36, 16);
        let path = write_truth_with_text(dir.path(), 0, region, "open");
        let fe = detect_elements(
            &img,
            0,
            None,
            &DetectorConfig::default(),
            &TextDetector::Oracle { truth_path: path },
            ErrorPolicy::Strict,
        )
        .unwrap();
        // the stripe contours must be suppressed by the region
        assert_eq!(fe.elements.len(), 2, "{:?}", fe.elements);
        let text = fe.elements.iter().find(|e| e.kind == ElementType::Text).unwrap();
        let icon = fe.elements.iter().find(|e| e.kind == ElementType::Icon).unwrap();
        assert_eq!(text.label.as_deref(), Some("open"));
        assert_eq!(text.bbox, region);
        // caption right under the icon, centers aligned: "text below icon"
        assert_eq!(
            fe.relations,
            vec![ElementRelation { source: text.id, target: icon.id, kind: RelationKind::Below }]
        );
        assert_eq!(element_label(&fe, icon.id).as_deref(), Some("open"));
    }

    #[test]
    fn caption_relations_left_and_none() {
        let mut img = flat(400, 200, 0.1);
        let comb_box = Rect::new(200, 80, 120, 50);
        paint_rect(&mut img, comb_box, 0.5);
        let dir = tempfile::tempdir().unwrap();
        // text level with the comb's center (105), just left of it:
        // gap 6 < 2% of width, center offset 0 < 1% of height
        let region = Rect::new(134, 98, 60, 14);
        let path = write_truth_with_text(dir.path(), 0, region, "level");
        let fe = detect_elements(
            &img,
            0,
            None,
            &DetectorConfig::default(),
            &TextDetector::Oracle { truth_path: path },
            ErrorPolicy::Strict,
        )
        .unwrap();
        let text = fe.elements.iter().find(|e| e.kind == ElementType::Text).unwrap();
        let comb = fe.elements.iter().find(|e| e.kind == ElementType::Comb).unwrap();
        assert_eq!(
            fe.relations,
            vec![ElementRelation { source: text.id, target: comb.id, kind: RelationKind::Left }]
        );
        assert_eq!(element_label(&fe, comb.id).as_deref(), Some("level"));

        // push the text far away: gap exceeds 2% of width, no relation
        let far = write_truth_with_text(dir.path(), 0, Rect::new(20, 98, 60, 14), "level");
        let fe2 = detect_elements(
            &img,
            0,
            None,
            &DetectorConfig::default(),
            &TextDetector::Oracle { truth_path: far },
            ErrorPolicy::Strict,
        )
        .unwrap();
        assert!(fe2.relations.is_empty());
        assert_eq!(element_label(&fe2, comb.id), None);
    }

    #[test]
    fn contained_text_gets_inside_not_caption() {
        let mut img = flat(300, 200, 0.1);
        let button = Rect::new(100, 80, 80, 30);
        paint_rect(&mut img, button, 0.5);
        let dir = tempfile::tempdir().unwrap();
        let region = Rect::new(120, 90, 40, 10);
        let path = write_truth_with_text(dir.path(), 0, region, "save");
        let fe = detect_elements(
            &img,
            0,
            None,
            &DetectorConfig::default(),
            &TextDetector::Oracle { truth_path: path },
            ErrorPolicy::Strict,
        )
        .unwrap();
        let text = fe.elements.iter().find(|e| e.kind == ElementType::Text).unwrap();
        // the button contains a candidate, so it types as comb
        let comb = fe.elements.iter().find(|e| e.kind == ElementType::Comb).unwrap();
        assert_eq!(
            fe.relations,
            vec![ElementRelation { source: text.id, target: comb.id, kind: RelationKind::Inside }]
        );
        // label resolves through the contained text
        assert_eq!(element_label(&fe, comb.id).as_deref(), Some("save"));
    }

    #[test]
    fn external_detector_round_trip_and_failure_policies() {
        use std::io::Write;
        use std::os::unix::fs::PermissionsExt;
        let dir = tempfile::tempdir().unwrap();
        let ok_script = dir.path().join("ok.sh");
        {
            let mut f = std::fs::File::create(&ok_script).unwrap();
            writeln!(f, "#!/bin/sh").unwrap();
            writeln!(f, "test -f \"$1\" || exit 3").unwrap();
            writeln!(f, "echo '[{{\"bbox\":[5,6,20,8],\"text\":\"hi\"}}]'").unwrap();
        }
        std::fs::set_permissions(&ok_script, std::fs::Permissions::from_mode(0o755)).unwrap();
        let det = TextDetector::External { command: ok_script.display().to_string() };
        let img = flat(64, 48, 0.3);
        let got = det.detect(&img, 0, None).unwrap();
        assert_eq!(got, vec![TextRegion { bbox: Rect::new(5, 6, 20, 8), text: "hi".into() }]);

        let bad_script = dir.path().join("bad.sh");
        {
            let mut f = std::fs::File::create(&bad_script).unwrap();
            writeln!(f, "#!/bin/sh").unwrap();
            writeln!(f, "echo boom >&2; exit 1").unwrap();
        }
        std::fs::set_permissions(&bad_script, std::fs::Permissions::from_mode(0o755)).unwrap();
        let bad = TextDetector::External { command: bad_script.display().to_string() };
        assert!(matches!(bad.detect(&img, 0, None), Err(DetectError::External(_))));
        // lenient pipeline degrades to no text plus a warning
        let (fe, warnings) = detect_elements_with_report(
            &img,
            0,
            None,
            &DetectorConfig::default(),
            &bad,
            ErrorPolicy::Lenient,
        )
        .unwrap();
        assert!(fe.elements.is_empty());
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("text detector failed"), "{warnings:?}");
        // strict pipeline propagates
        assert!(detect_elements(
            &img,
            0,
            None,
            &DetectorConfig::default(),
            &bad,
            ErrorPolicy::Strict
        )
        .is_err());
    }

    #[test]
    fn out_of_bounds_region_strict_vs_lenient() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_truth_with_text(dir.path(), 0, Rect::new(280, 190, 40, 20), "x");
        let img = flat(300, 200, 0.3);
        let det = TextDetector::Oracle { truth_path: path };
        assert!(matches!(
            detect_elements(&img, 0, None, &DetectorConfig::default(), &det, ErrorPolicy::Strict),
            Err(DetectError::RegionOutOfBounds { index: 0, .. })
        ));
        let (fe, warnings) = detect_elements_with_report(
            &img,
            0,
            None,
            &DetectorConfig::default(),
            &det,
            ErrorPolicy::Lenient,
        )
        .unwrap();
        assert!(fe.elements.is_empty());
        assert!(warnings[0].contains("out-of-bounds"));
    }

    #[test]
    fn detection_is_deterministic() {
        let mut img = flat(300, 200, 0.1);
        paint_rect(&mut img, Rect::new(40, 30, 140, 100), 0.40);
        paint_rect(&mut img, Rect::new(70, 60, 24, 20), 0.90);
        paint_disc(&mut img, 250, 60, 12, 0.85);
        let a = detect(&img);
        let b = detect(&img);
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn frame_elements_json_schema() {
        let fe = FrameElements {
            frame: 3,
            elements: vec![GuiElement {
                id: 0,
                kind: ElementType::Icon,
                bbox: Rect::new(1, 2, 3, 4),
                shape: Shape::Circle,
                orientation: Orientation::Horizontal,
                rel_size: 0.001,
                label: None,
                children: vec![],
            }],
            relations: vec![],
        };
        let v = serde_json::to_value(&fe).unwrap();
        assert_eq!(v["frame"], 3);
        assert_eq!(v["elements"][0]["type"], "icon");
        assert_eq!(v["elements"][0]["bbox"], serde_json::json!([1, 2, 3, 4]));
        assert_eq!(v["elements"][0]["shape"], "circle");
        assert!(v["elements"][0].get("label").is_none());
        let back: FrameElements = serde_json::from_value(v).unwrap();
        assert_eq!(back, fe);
    }
}
