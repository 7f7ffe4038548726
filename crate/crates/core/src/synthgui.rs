//! Deterministic synthetic GUI screens and scripted interaction logs, with
//! ground truth in the detector's own vocabulary.
//!
//! Rendering is grayscale, quantized to 8-bit levels in memory, so the
//! pixels a consumer reads back from disk are bit-identical to the ones
//! used for truth bookkeeping. Truth elements go through the same assembly
//! path as detection, which pins ids, types and relations to identical
//! conventions.
//!
//! Shade discipline keeps every edge findable: panels sit 0.25 above the
//! background, foreground elements at least 0.25 above panels, and nothing
//! exceeds 0.95 so click highlights stay visible.

use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detection::{
    assemble_elements, text_orientation, DetectError, DetectorConfig, ElementSlot, TruthFile,
    TruthFrame,
};
use crate::geom::Rect;
use crate::imaging::{Raster, Shape};
use crate::vislog::{
    frame_mse, save_frame_png, write_events, InputEvent, InputKind, LogError, Manifest,
    ManifestFrame, ScreenDim, MANIFEST_NAME, SUPPORTED_VERSION,
};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("frame {frame}: {reason}")]
    BadScript { frame: usize, reason: String },
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Detect(#[from] DetectError),
}

/// Stripe geometry for rendered text blocks: 2 rows on, 2 rows off.
pub const TEXT_STRIPE: u32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Widget {
    /// Flat backdrop rectangle; reads as a container when large enough or
    /// when something sits inside it.
    Panel { rect: Rect, shade: f32 },
    RectIcon { rect: Rect, shade: f32 },
    DiscIcon { cx: u32, cy: u32, r: u32, shade: f32 },
    /// Striped block standing in for rendered text.
    TextBlock { rect: Rect, shade: f32, text: String },
}

impl Widget {
    pub fn bbox(&self) -> Rect {
        match self {
            Widget::Panel { rect, .. }
            | Widget::RectIcon { rect, .. }
            | Widget::TextBlock { rect, .. } => *rect,
            Widget::DiscIcon { cx, cy, r, .. } => {
                Rect::new(cx - r, cy - r, 2 * r + 1, 2 * r + 1)
            }
        }
    }

    pub fn shade(&self) -> f32 {
        match self {
            Widget::Panel { shade, .. }
            | Widget::RectIcon { shade, .. }
            | Widget::DiscIcon { shade, .. }
            | Widget::TextBlock { shade, .. } => *shade,
        }
    }

    pub fn set_shade(&mut self, v: f32) {
        match self {
            Widget::Panel { shade, .. }
            | Widget::RectIcon { shade, .. }
            | Widget::DiscIcon { shade, .. }
            | Widget::TextBlock { shade, .. } => *shade = v,
        }
    }

    pub fn translate(&mut self, dx: i64, dy: i64) {
        let shift = |v: u32, d: i64| (i64::from(v) + d) as u32;
        match self {
            Widget::Panel { rect, .. }
            | Widget::RectIcon { rect, .. }
            | Widget::TextBlock { rect, .. } => {
                rect.x = shift(rect.x, dx);
                rect.y = shift(rect.y, dy);
            }
            Widget::DiscIcon { cx, cy, .. } => {
                *cx = shift(*cx, dx);
                *cy = shift(*cy, dy);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenSpec {
    pub width: u32,
    pub height: u32,
    pub background: f32,
    pub widgets: Vec<Widget>,
}

fn snap(v: f32) -> f32 {
    (v * 255.0).round().clamp(0.0, 255.0) / 255.0
}

fn fill_rect(data: &mut [f32], sw: u32, sh: u32, rect: Rect, shade: f32) {
    for y in rect.y..rect.y2().min(sh) {
        let row = y as usize * sw as usize;
        for x in rect.x..rect.x2().min(sw) {
            data[row + x as usize] = shade;
        }
    }
}

pub fn render_screen(spec: &ScreenSpec) -> Raster {
    let (sw, sh) = (spec.width, spec.height);
    let mut data = vec![spec.background; sw as usize * sh as usize];
    for widget in &spec.widgets {
        match widget {
            Widget::Panel { rect, shade } | Widget::RectIcon { rect, shade } => {
                fill_rect(&mut data, sw, sh, *rect, *shade)
            }
            Widget::DiscIcon { cx, cy, r, shade } => {
                let (cx, cy, r) = (i64::from(*cx), i64::from(*cy), i64::from(*r));
                for y in (cy - r).max(0)..=(cy + r).min(i64::from(sh) - 1) {
                    for x in (cx - r).max(0)..=(cx + r).min(i64::from(sw) - 1) {
                        if (x - cx).pow(2) + (y - cy).pow(2) <= r * r {
                            data[y as usize * sw as usize + x as usize] = *shade;
                        }
                    }
                }
            }
            Widget::TextBlock { rect, shade, .. } => {
                for dy in 0..rect.h {
                    if (dy / TEXT_STRIPE) % 2 == 0 {
                        fill_rect(&mut data, sw, sh, Rect::new(rect.x, rect.y + dy, rect.w, 1), *shade);
                    }
                }
            }
        }
    }
    for v in &mut data {
        *v = snap(*v);
    }
    Raster::from_vec(sw, sh, 1, data).expect("canvas values stay in range")
}

fn widget_slot(widget: &Widget) -> ElementSlot {
    let bbox = widget.bbox();
    let (shape, label, is_text) = match widget {
        Widget::Panel { .. } | Widget::RectIcon { .. } => (Shape::Rectangle, None, false),
        Widget::DiscIcon { .. } => (Shape::Circle, None, false),
        Widget::TextBlock { text, .. } => {
            (Shape::Rectangle, (!text.is_empty()).then(|| text.clone()), true)
        }
    };
    ElementSlot { bbox, shape, orientation: text_orientation(&bbox), label, is_text }
}

/// Ground truth for one rendered screen, in detector conventions.
pub fn truth_frame(
    spec: &ScreenSpec,
    frame_index: usize,
    cfg: &DetectorConfig,
) -> crate::detection::FrameElements {
    let slots = spec.widgets.iter().map(widget_slot).collect();
    assemble_elements(slots, frame_index, spec.width, spec.height, cfg)
}

/// A fully scripted log: one spec per frame plus the inputs that drove it
/// and the action tokens the script performed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogScript {
    pub width: u32,
    pub height: u32,
    pub frame_dt_ms: u64,
    pub frames: Vec<ScreenSpec>,
    #[serde(default)]
    pub events: Vec<InputEvent>,
    #[serde(default)]
    pub tokens: Vec<String>,
}

/// Everything a script promises before rendering: at least one frame,
/// uniform screen dimensions, widgets inside the screen, shades in [0, 1].
pub fn validate_script(script: &LogScript) -> Result<(), SynthError> {
    let bad = |frame: usize, reason: String| Err(SynthError::BadScript { frame, reason });
    if script.width == 0 || script.height == 0 {
        return bad(0, "zero screen dimension".into());
    }
    if script.frames.is_empty() {
        return bad(0, "script has no frames".into());
    }
    if script.frame_dt_ms == 0 {
        return bad(0, "frame_dt_ms must be positive".into());
    }
    for (i, spec) in script.frames.iter().enumerate() {
        if (spec.width, spec.height) != (script.width, script.height) {
            return bad(i, format!("screen is {}x{}, frame is {}x{}", script.width, script.height, spec.width, spec.height));
        }
        if !(0.0..=1.0).contains(&spec.background) {
            return bad(i, format!("background shade {} out of range", spec.background));
        }
        for widget in &spec.widgets {
            if !(0.0..=1.0).contains(&widget.shade()) {
                return bad(i, format!("shade out of range: {widget:?}"));
            }
            if let Widget::DiscIcon { cx, cy, r, .. } = widget {
                if cx < r || cy < r {
                    return bad(i, format!("disc crosses the origin: {widget:?}"));
                }
            }
            let b = widget.bbox();
            if b.w == 0 || b.h == 0 || b.x2() > spec.width || b.y2() > spec.height {
                return bad(i, format!("widget outside {}x{}: {widget:?}", spec.width, spec.height));
            }
        }
    }
    Ok(())
}

/// Render the script into a log directory (manifest, PNGs, events) plus a
/// `truth.json` sidecar, streaming frame by frame. Major events in the
/// truth are recomputed from the quantized pixels with threshold `theta`.
pub fn render_log(script: &LogScript, dir: &Path, theta: f64) -> Result<TruthFile, SynthError> {
    validate_script(script)?;
    let cfg = DetectorConfig::default();
    std::fs::create_dir_all(dir)
        .map_err(|e| LogError::Io { path: dir.into(), source: e })?;
    let screen = ScreenDim { width: script.width, height: script.height };

    let manifest = Manifest {
        version: SUPPORTED_VERSION,
        screen,
        frames: (0..script.frames.len())
            .map(|i| ManifestFrame {
                file: format!("f{i:05}.png"),
                t_ms: i as u64 * script.frame_dt_ms,
            })
            .collect(),
        events_file: (!script.events.is_empty()).then(|| "events.jsonl".to_string()),
    };
    let mpath = dir.join(MANIFEST_NAME);
    let mjson = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&mpath, mjson).map_err(|e| LogError::Io { path: mpath, source: e })?;
    if !script.events.is_empty() {
        write_events(&script.events, &dir.join("events.jsonl"))?;
    }

    let mut truth = TruthFile {
        screen,
        frames: Vec::with_capacity(script.frames.len()),
        tokens: script.tokens.clone(),
        major_events: Vec::new(),
    };
    let mut prev: Option<Raster> = None;
    for (i, spec) in script.frames.iter().enumerate() {
        let img = render_screen(spec);
        save_frame_png(&img, &dir.join(format!("f{i:05}.png")))?;
        let fe = truth_frame(spec, i, &cfg);
        truth.frames.push(TruthFrame {
            frame: i,
            elements: fe.elements,
            relations: fe.relations,
        });
        if let Some(p) = &prev {
            if frame_mse(p, &img)? > theta {
                truth.major_events.push(i);
            }
        }
        prev = Some(img);
    }
    crate::detection::save_truth(&truth, &dir.join("truth.json"))?;
    Ok(truth)
}

/// Builds frame sequences action by action. Every action leaves enough
/// settle frames for event-plus-delay sampling to land on a steady screen.
pub struct ScriptBuilder {
    width: u32,
    height: u32,
    dt: u64,
    frames: Vec<ScreenSpec>,
    events: Vec<InputEvent>,
    tokens: Vec<String>,
}

impl ScriptBuilder {
    pub fn new(width: u32, height: u32, frame_dt_ms: u64) -> Self {
        ScriptBuilder {
            width,
            height,
            dt: frame_dt_ms,
            frames: Vec::new(),
            events: Vec::new(),
            tokens: Vec::new(),
        }
    }

    fn last(&self) -> &ScreenSpec {
        self.frames.last().expect("script starts with show()")
    }

    /// Timestamp of the last pushed frame.
    fn t_now(&self) -> u64 {
        (self.frames.len() as u64 - 1) * self.dt
    }

    fn touch(&mut self, kind: InputKind, t_ms: u64, pos: (u32, u32)) {
        self.events.push(InputEvent { t_ms, kind, pos: Some(pos), key: None });
    }

    pub fn show(&mut self, spec: ScreenSpec, frames: usize) -> &mut Self {
        for _ in 0..frames {
            self.frames.push(spec.clone());
        }
        self
    }

    /// Tap widget `idx`: one highlighted frame, then the next screen with
    /// two settle frames.
    pub fn click(&mut self, idx: usize, to: ScreenSpec, token: &str) -> &mut Self {
        let (cx, cy) = self.last().widgets[idx].bbox().center();
        let pos = (cx as u32, cy as u32);
        let t = self.t_now();
        self.touch(InputKind::TouchDown, t + self.dt / 2, pos);
        self.touch(InputKind::TouchUp, t + self.dt * 3 / 4, pos);
        let mut hl = self.last().clone();
        let w = &mut hl.widgets[idx];
        w.set_shade((w.shade() + 0.2).min(1.0));
        self.frames.push(hl);
        self.show(to, 3);
        self.tokens.push(token.to_string());
        self
    }

    /// Drag the listed widgets by `(dx, dy)` over two frames, plus settle.
    pub fn swipe(
        &mut self,
        moving: &[usize],
        (dx, dy): (i64, i64),
        from: (u32, u32),
        token: &str,
    ) -> &mut Self {
        let t = self.t_now();
        let to = ((from.0 as i64 + dx) as u32, (from.1 as i64 + dy) as u32);
        self.touch(InputKind::TouchDown, t + 30, from);
        self.touch(InputKind::TouchMove, t + 80, ((from.0 + to.0) / 2, (from.1 + to.1) / 2));
        self.touch(InputKind::TouchUp, t + 170, to);
        let base = self.last().clone();
        let shifted = |spec: &ScreenSpec, fx: i64, fy: i64| {
            let mut s = spec.clone();
            for &i in moving {
                s.widgets[i].translate(fx, fy);
            }
            s
        };
        self.frames.push(shifted(&base, dx / 2, dy / 2));
        self.show(shifted(&base, dx, dy), 3);
        self.tokens.push(token.to_string());
        self
    }

    /// Slide widget `knob` by `dx` and restyle widget `preview` to the
    /// given shade in the same step.
    pub fn adjust(
        &mut self,
        knob: usize,
        dx: i64,
        preview: usize,
        preview_shade: f32,
        token: &str,
    ) -> &mut Self {
        let (cx, cy) = self.last().widgets[knob].bbox().center();
        let from = (cx as u32, cy as u32);
        let to = ((from.0 as i64 + dx) as u32, from.1);
        let t = self.t_now();
        self.touch(InputKind::TouchDown, t + 30, from);
        self.touch(InputKind::TouchMove, t + 80, ((from.0 + to.0) / 2, from.1));
        self.touch(InputKind::TouchUp, t + 170, to);
        let mut next = self.last().clone();
        next.widgets[knob].translate(dx, 0);
        next.widgets[preview].set_shade(preview_shade);
        self.show(next, 3);
        self.tokens.push(token.to_string());
        self
    }

    /// Uninstrumented screen change: no input, just new pixels.
    pub fn transition(&mut self, to: ScreenSpec, settle: usize) -> &mut Self {
        self.show(to, settle);
        self.tokens.push("transition".to_string());
        self
    }

    pub fn finish(self) -> LogScript {
        LogScript {
            width: self.width,
            height: self.height,
            frame_dt_ms: self.dt,
            frames: self.frames,
            events: self.events,
            tokens: self.tokens,
        }
    }
}

// Shade palette: backgrounds cycle far enough apart that any screen change
// clears the major-event threshold on its own, and every edge step stays
// above a third of the strongest step on its screen.
const BACKGROUNDS: [f32; 3] = [0.05, 0.20, 0.35];

fn panel_shade(bg: f32) -> f32 {
    bg + 0.28
}

fn fg_shade(bg: f32) -> f32 {
    bg + 0.55
}

/// Icon with a caption centered a few pixels below it.
fn captioned_icon(widgets: &mut Vec<Widget>, x: u32, y: u32, side: u32, cap_h: u32, label: &str) {
    widgets.push(Widget::RectIcon { rect: Rect::new(x, y, side, side), shade: 0.95 });
    let cap_w = side + 16;
    let cap_x = x + side / 2 - cap_w / 2;
    widgets.push(Widget::TextBlock {
        rect: Rect::new(cap_x, y + side + 4, cap_w, cap_h),
        shade: 0.95,
        text: label.to_string(),
    });
}

/// Rectangular button: a panel-shaded plate with its label inside.
fn button(widgets: &mut Vec<Widget>, rect: Rect, bg: f32, label: &str) {
    widgets.push(Widget::Panel { rect, shade: panel_shade(bg) });
    let tw = (rect.w / 2).max(24);
    let th = 10;
    widgets.push(Widget::TextBlock {
        rect: Rect::new(rect.x + (rect.w - tw) / 2, rect.y + (rect.h - th) / 2, tw, th),
        shade: fg_shade(bg),
        text: label.to_string(),
    });
}

fn blank(width: u32, height: u32, bg: f32) -> ScreenSpec {
    ScreenSpec { width, height, background: bg, widgets: Vec::new() }
}

/// A row of six captioned tool icons along the bottom of the screen.
/// Returns the screen and the widget indices of the row (for swiping).
///
/// Row period (180) exceeds twice the swipe distance (80), so a shifted
/// icon is still nearest to its own old position; `side`/`cap_h` differ
/// between the two toolbar screens so their rows cannot cross-match.
fn toolbar_screen(
    width: u32,
    height: u32,
    bg: f32,
    side: u32,
    cap_h: u32,
    labels: [&str; 6],
) -> (ScreenSpec, Vec<usize>) {
    let mut spec = blank(width, height, bg);
    spec.widgets.push(Widget::Panel {
        rect: Rect::new(268, 80, 600, 380),
        shade: panel_shade(bg),
    });
    let row_start = spec.widgets.len();
    for (i, label) in labels.iter().enumerate() {
        captioned_icon(&mut spec.widgets, 80 + i as u32 * 180, 520, side, cap_h, label);
    }
    let row: Vec<usize> = (row_start..spec.widgets.len()).collect();
    (spec, row)
}

/// The photo-editing walkthrough: open an album, pick a photo, page through
/// the edit tools, drag the contrast slider, confirm, save. Eleven actions.
pub fn demo_scenario() -> LogScript {
    let (width, height) = (1136u32, 640u32);
    let bg = |i: usize| BACKGROUNDS[i % BACKGROUNDS.len()];
    let mut b = ScriptBuilder::new(width, height, 100);

    // home: three launcher icons
    let mut home = blank(width, height, bg(0));
    captioned_icon(&mut home.widgets, 150, 200, 48, 10, "album");
    home.widgets.push(Widget::DiscIcon { cx: 560, cy: 224, r: 24, shade: 0.95 });
    home.widgets.push(Widget::TextBlock {
        rect: Rect::new(528, 253, 64, 10),
        shade: 0.95,
        text: "camera".into(),
    });
    captioned_icon(&mut home.widgets, 850, 200, 48, 10, "files");

    // album list: three wide buttons
    let mut albums = blank(width, height, bg(1));
    button(&mut albums.widgets, Rect::new(100, 150, 200, 60), bg(1), "holiday");
    button(&mut albums.widgets, Rect::new(100, 260, 200, 60), bg(1), "summer");
    button(&mut albums.widgets, Rect::new(100, 370, 200, 60), bg(1), "work");

    // photo grid: four captioned thumbnails
    let mut grid = blank(width, height, bg(2));
    for (i, name) in ["photo_1", "photo_2", "photo_3", "photo_4"].iter().enumerate() {
        let x = 120 + i as u32 * 250;
        grid.widgets.push(Widget::RectIcon { rect: Rect::new(x, 160, 100, 80), shade: 0.95 });
        grid.widgets.push(Widget::TextBlock {
            rect: Rect::new(x + 18, 244, 64, 10),
            shade: 0.95,
            text: name.to_string(),
        });
    }

    // photo view: preview plus edit/share buttons
    let mut photo = blank(width, height, bg(0));
    photo.widgets.push(Widget::Panel {
        rect: Rect::new(268, 80, 600, 380),
        shade: panel_shade(bg(0)),
    });
    button(&mut photo.widgets, Rect::new(80, 520, 140, 60), bg(0), "edit");
    button(&mut photo.widgets, Rect::new(916, 520, 140, 60), bg(0), "share");

    let (tools, tool_row) = toolbar_screen(
        width,
        height,
        bg(1),
        40,
        10,
        ["crop", "rotate", "filters", "adjust", "draw", "notes"],
    );
    let (adjusts, adjust_row) = toolbar_screen(
        width,
        height,
        bg(2),
        48,
        14,
        ["exposure", "brightness", "saturation", "contrast", "warmth", "tint"],
    );

    // contrast editor: large preview, slider panel with caption, tick button
    let cbg = bg(0);
    let mut contrast = blank(width, height, cbg);
    contrast.widgets.push(Widget::Panel {
        rect: Rect::new(268, 60, 600, 380),
        shade: panel_shade(cbg),
    });
    let preview_idx = contrast.widgets.len() - 1;
    contrast.widgets.push(Widget::Panel {
        rect: Rect::new(268, 480, 600, 120),
        shade: panel_shade(cbg),
    });
    contrast.widgets.push(Widget::TextBlock {
        rect: Rect::new(298, 500, 60, 12),
        shade: fg_shade(cbg),
        text: "level".into(),
    });
    contrast.widgets.push(Widget::RectIcon {
        rect: Rect::new(380, 536, 360, 8),
        shade: fg_shade(cbg),
    });
    contrast.widgets.push(Widget::RectIcon { rect: Rect::new(450, 548, 14, 14), shade: 0.95 });
    let knob_idx = contrast.widgets.len() - 1;
    button(&mut contrast.widgets, Rect::new(920, 480, 140, 70), cbg, "tick");
    let tick_idx = contrast.widgets.len() - 2;

    // photo view again, now with a save button
    let mut done = blank(width, height, bg(1));
    done.widgets.push(Widget::Panel {
        rect: Rect::new(268, 80, 600, 380),
        shade: panel_shade(bg(1)),
    });
    button(&mut done.widgets, Rect::new(80, 520, 140, 60), bg(1), "save");

    let mut end = blank(width, height, bg(2));
    captioned_icon(&mut end.widgets, 150, 200, 48, 10, "album");

    b.show(home, 3);
    b.click(0, albums, "click:album"); // album icon
    b.click(0, grid, "click:holiday"); // holiday button plate
    b.click(0, photo, "click:photo_1"); // first thumbnail
    b.click(1, tools, "click:edit"); // edit button plate
    // gesture starts in the gap between the preview and the tool row
    b.swipe(&tool_row, (80, 0), (300, 500), "swipe:right");
    // the adjust tool icon after the +80 shift: row label index 3 -> widget
    let adjust_icon = tool_row[2 * 3];
    b.click(adjust_icon, adjusts, "click:adjust");
    b.swipe(&adjust_row, (80, 0), (300, 500), "swipe:right");
    let contrast_icon = adjust_row[2 * 3];
    b.click(contrast_icon, contrast, "click:contrast");
    b.adjust(knob_idx, 30, preview_idx, panel_shade(cbg) + 0.25, "adjust:level:+");
    b.click(tick_idx, done, "click:tick"); // tick button plate
    b.click(1, end, "click:save"); // save button plate
    b.finish()
}

/// A log of bare screen changes: `transitions` uninstrumented switches
/// padded with steady frames to `total_frames` total.
pub fn transitions_log(transitions: usize, total_frames: usize) -> LogScript {
    let (width, height) = (800u32, 480u32);
    assert!(total_frames >= transitions * 2 + 2, "not enough frames to settle");
    let mut b = ScriptBuilder::new(width, height, 100);
    let screen_for = |i: usize| {
        let bg = BACKGROUNDS[i % BACKGROUNDS.len()];
        let mut s = blank(width, height, bg);
        // one icon wandering between two spots keeps the screens distinct
        let x = if i % 2 == 0 { 100 } else { 500 };
        s.widgets.push(Widget::RectIcon { rect: Rect::new(x, 150, 60, 48), shade: 0.95 });
        s
    };
    let settle = (total_frames - transitions) / (transitions + 1);
    let first = (total_frames - transitions - settle * transitions).max(1);
    b.show(screen_for(0), first);
    let mut used = first;
    for i in 1..=transitions {
        let pad = if i == transitions { total_frames - used - 1 } else { settle - 1 };
        b.transition(screen_for(i), 1 + pad);
        used += 1 + pad;
    }
    b.finish()
}

/// A long log alternating clicks between three screens; used for
/// throughput runs. Produces exactly `total_frames` frames.
pub fn long_click_log(width: u32, height: u32, total_frames: usize) -> LogScript {
    assert!(total_frames >= 8 && total_frames % 4 == 0, "length must be 4k >= 8");
    let mut b = ScriptBuilder::new(width, height, 100);
    let screen_for = |i: usize| {
        let bg = BACKGROUNDS[i % BACKGROUNDS.len()];
        let mut s = blank(width, height, bg);
        let x = 120 + (i % 3) as u32 * 200;
        captioned_icon(&mut s.widgets, x, 140, 48, 10, "next");
        s.widgets.push(Widget::Panel {
            rect: Rect::new(width / 3, height / 2, width / 3, height / 3),
            shade: panel_shade(bg),
        });
        s
    };
    b.show(screen_for(0), 4);
    let mut i = 1;
    while b.frames.len() < total_frames {
        b.click(0, screen_for(i), "click:next");
        i += 1;
    }
    b.finish()
}

/// Seeded random screen for detector evaluation: 8..=20 elements across a
/// 5x4 cell grid, mixing plain icons, discs, captioned icons and panels
/// with a nested child. All sizes scale with the screen so relative sizes
/// stay constant.
pub fn random_screen(seed: u64, width: u32, height: u32) -> ScreenSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bg = BACKGROUNDS[rng.gen_range(0..BACKGROUNDS.len())];
    let mut spec = blank(width, height, bg);
    let scale = ((width as f64 * height as f64) / (1136.0 * 640.0)).sqrt();
    let s = |v: f64| (v * scale).round() as u32;

    let (cols, rows) = (5u32, 4u32);
    let (cw, ch) = (width / cols, height / rows);
    let mut cells: Vec<(u32, u32)> =
        (0..rows).flat_map(|r| (0..cols).map(move |c| (c, r))).collect();
    // seeded shuffle
    for i in (1..cells.len()).rev() {
        cells.swap(i, rng.gen_range(0..=i));
    }

    let target = rng.gen_range(8..=20usize);
    let mut count = 0usize;
    for (c, r) in cells {
        if count >= target {
            break;
        }
        let (ox, oy) = (c * cw, r * ch);
        let jitter_x = rng.gen_range(0..cw / 6);
        let jitter_y = rng.gen_range(0..ch / 6);
        let (x, y) = (ox + 14 + jitter_x, oy + 14 + jitter_y);
        match rng.gen_range(0..4) {
            0 => {
                let side = s(rng.gen_range(34.0..56.0));
                spec.widgets.push(Widget::RectIcon {
                    rect: Rect::new(x, y, side, side * 4 / 5),
                    shade: 0.95,
                });
                count += 1;
            }
            1 => {
                let radius = s(rng.gen_range(18.0..28.0)).max(12);
                spec.widgets.push(Widget::DiscIcon {
                    cx: x + radius,
                    cy: y + radius,
                    r: radius,
                    shade: 0.95,
                });
                count += 1;
            }
            2 => {
                let side = s(rng.gen_range(40.0..52.0));
                captioned_icon(&mut spec.widgets, x, y, side, 10, "item");
                count += 2;
            }
            _ => {
                let (pw, ph) = (s(150.0), s(110.0));
                spec.widgets.push(Widget::Panel {
                    rect: Rect::new(x, y, pw, ph),
                    shade: panel_shade(bg),
                });
                spec.widgets.push(Widget::RectIcon {
                    rect: Rect::new(x + pw / 4, y + ph / 4, s(44.0), s(34.0)),
                    shade: (fg_shade(bg) + 0.15).min(0.95),
                });
                count += 2;
            }
        }
    }
    spec
}
