//! Template serialization (`pbn/1` JSON), SVG and PNG rendering.
//!
//! The JSON form is canonical: keys sorted, no whitespace, every float
//! written with exactly three decimals. The schema is described in
//! `docs/template-schema.md`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};

use crate::color::{LabColor, Rgb};
use crate::error::{Error, Result};
use crate::quant::{Palette, PaletteEntry};
use crate::raster::{RasterImage, MAX_DECODE_DIM};
use crate::regions::{Contour, ContourKind, LabelAnchor, Point, MIN_LABEL_CLEARANCE};
use crate::template::{PbnTemplate, TemplateRegion, TEMPLATE_VERSION};

/// Region id → palette number chosen by the painter.
pub type Fills = BTreeMap<u32, u32>;

/// Largest side of a rendered PNG.
pub const MAX_RENDER_DIM: u32 = 8192;

const OUTLINE: [u8; 4] = [0, 0, 0, 255];
const DIGIT_INK: [u8; 4] = [96, 96, 96, 255];
const UNOWNED: u32 = u32::MAX;

// Field order is alphabetical so derived serialization emits sorted keys.

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Doc {
    canvas: CanvasDoc,
    colors_requested: u64,
    palette: Vec<PaletteDoc>,
    regions: Vec<RegionDoc>,
    version: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CanvasDoc {
    height: u32,
    width: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PaletteDoc {
    hex: String,
    lab: [f64; 3],
    number: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionDoc {
    anchor: Option<AnchorDoc>,
    area: u32,
    contours: Vec<ContourDoc>,
    id: u32,
    label_omitted: bool,
    number: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnchorDoc {
    clearance: f64,
    x: u32,
    y: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContourDoc {
    kind: KindDoc,
    points: Vec<[i32; 2]>,
}

#[derive(Serialize, Deserialize, PartialEq, Eq, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum KindDoc {
    Outer,
    Hole,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: String,
}

struct CanonicalFormatter;

impl serde_json::ser::Formatter for CanonicalFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        let s = format!("{value:.3}");
        writer.write_all(if s == "-0.000" { b"0.000" } else { s.as_bytes() })
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn template_to_json(t: &PbnTemplate) -> Vec<u8> {
    let doc = Doc {
        canvas: CanvasDoc {
            height: t.height,
            width: t.width,
        },
        colors_requested: t.palette.k_requested() as u64,
        palette: t
            .palette
            .entries()
            .iter()
            .map(|e| PaletteDoc {
                hex: e.srgb.hex(),
                lab: [e.lab.l, e.lab.a, e.lab.b],
                number: e.number,
            })
            .collect(),
        regions: t
            .regions
            .iter()
            .map(|r| RegionDoc {
                anchor: r.label_anchor.map(|a| AnchorDoc {
                    clearance: a.clearance,
                    x: a.x,
                    y: a.y,
                }),
                area: r.area,
                contours: r
                    .contours
                    .iter()
                    .map(|c| ContourDoc {
                        kind: match c.kind {
                            ContourKind::Outer => KindDoc::Outer,
                            ContourKind::Hole => KindDoc::Hole,
                        },
                        points: c.points.iter().map(|p| [p.x, p.y]).collect(),
                    })
                    .collect(),
                id: r.id,
                label_omitted: r.label_omitted,
                number: r.number,
            })
            .collect(),
        version: t.version.clone(),
    };
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, CanonicalFormatter);
    doc.serialize(&mut ser)
        .expect("serializing plain structs into memory cannot fail");
    out
}

/// Parses and validates a `pbn/1` document.
///
/// Malformed or mistyped JSON is [`Error::Parse`], another version tag is
/// [`Error::UnsupportedVersion`], and a broken invariant is
/// [`Error::Validation`] with the offending field path.
pub fn template_from_json(bytes: &[u8]) -> Result<PbnTemplate> {
    let probe: VersionProbe = serde_json::from_slice(bytes).map_err(|e| Error::Parse(e.to_string()))?;
    if probe.version != TEMPLATE_VERSION {
        return Err(Error::UnsupportedVersion(probe.version));
    }
    let doc: Doc = serde_json::from_slice(bytes).map_err(|e| Error::Parse(e.to_string()))?;
    validate_doc(doc)
}

fn validate_doc(doc: Doc) -> Result<PbnTemplate> {
    let (w, h) = (doc.canvas.width, doc.canvas.height);
    for (field, v) in [("canvas.width", w), ("canvas.height", h)] {
        if v == 0 || v > MAX_DECODE_DIM {
            return Err(Error::validation(field, format!("must be in 1..={MAX_DECODE_DIM}, got {v}")));
        }
    }

    if doc.palette.is_empty() {
        return Err(Error::validation("palette", "must not be empty"));
    }
    let mut entries: Vec<PaletteEntry> = Vec::with_capacity(doc.palette.len());
    for (i, p) in doc.palette.iter().enumerate() {
        if p.number as usize != i + 1 {
            return Err(Error::validation(
                format!("palette[{i}].number"),
                format!("expected {}, got {}", i + 1, p.number),
            ));
        }
        let srgb = Rgb::from_hex(&p.hex)
            .ok_or_else(|| Error::validation(format!("palette[{i}].hex"), format!("not a #rrggbb color: {:?}", p.hex)))?;
        if entries.iter().any(|e| e.srgb == srgb) {
            return Err(Error::validation(format!("palette[{i}].hex"), "duplicate color"));
        }
        let [l, a, b] = p.lab;
        if !(l.is_finite() && a.is_finite() && b.is_finite()) || !(0.0..=100.0).contains(&l) {
            return Err(Error::validation(format!("palette[{i}].lab"), "needs finite values with L in [0, 100]"));
        }
        if let Some(prev) = entries.last() {
            if l > prev.lab.l {
                return Err(Error::validation(format!("palette[{i}].lab"), "palette must be ordered by L descending"));
            }
        }
        entries.push(PaletteEntry {
            number: p.number,
            srgb,
            lab: LabColor::new(l, a, b),
        });
    }
    let k = usize::try_from(doc.colors_requested).unwrap_or(usize::MAX);
    if k < entries.len() {
        return Err(Error::validation(
            "colors_requested",
            format!("{k} is smaller than the palette size {}", entries.len()),
        ));
    }
    let palette = Palette::new(entries, k).map_err(|e| Error::validation("palette", e.to_string()))?;

    if doc.regions.is_empty() {
        return Err(Error::validation("regions", "must not be empty"));
    }
    let mut regions = Vec::with_capacity(doc.regions.len());
    let mut area_sum = 0u64;
    for (i, r) in doc.regions.into_iter().enumerate() {
        let field = |name: &str| format!("regions[{i}].{name}");
        if r.id as usize != i {
            return Err(Error::validation(field("id"), format!("expected {i}, got {}", r.id)));
        }
        if r.number == 0 || r.number as usize > palette.len() {
            return Err(Error::validation(
                field("number"),
                format!("{} is not a palette number (palette has {} entries)", r.number, palette.len()),
            ));
        }
        if r.area == 0 {
            return Err(Error::validation(field("area"), "must be at least 1"));
        }
        area_sum += r.area as u64;
        if r.contours.is_empty() {
            return Err(Error::validation(field("contours"), "region needs an outer contour"));
        }
        let mut contours = Vec::with_capacity(r.contours.len());
        for (j, c) in r.contours.into_iter().enumerate() {
            let cfield = format!("regions[{i}].contours[{j}]");
            let want = if j == 0 { KindDoc::Outer } else { KindDoc::Hole };
            if c.kind != want {
                return Err(Error::validation(
                    format!("{cfield}.kind"),
                    "the first contour must be outer and the rest holes",
                ));
            }
            if c.points.len() < 4 || c.points.first() != c.points.last() {
                return Err(Error::validation(
                    format!("{cfield}.points"),
                    "contour must be closed with at least 4 points",
                ));
            }
            if c.points.iter().any(|&[x, y]| x < 0 || y < 0 || x as u32 > w || y as u32 > h) {
                return Err(Error::validation(format!("{cfield}.points"), "point outside the canvas"));
            }
            contours.push(Contour {
                points: c.points.iter().map(|&[x, y]| Point::new(x, y)).collect(),
                kind: if j == 0 { ContourKind::Outer } else { ContourKind::Hole },
            });
        }
        if r.label_omitted != r.anchor.is_none() {
            return Err(Error::validation(
                field("label_omitted"),
                "must be true exactly when the anchor is null",
            ));
        }
        let label_anchor = match r.anchor {
            None => None,
            Some(a) => {
                if a.x >= w || a.y >= h {
                    return Err(Error::validation(field("anchor"), "anchor outside the canvas"));
                }
                if !(a.clearance.is_finite() && a.clearance >= MIN_LABEL_CLEARANCE) {
                    return Err(Error::validation(
                        field("anchor.clearance"),
                        format!("must be a finite value of at least {MIN_LABEL_CLEARANCE}"),
                    ));
                }
                if !contains(&contours, a.x as f64 + 0.5, a.y as f64 + 0.5) {
                    return Err(Error::validation(field("anchor"), "anchor is not inside the region"));
                }
                Some(LabelAnchor {
                    x: a.x,
                    y: a.y,
                    clearance: a.clearance,
                })
            }
        };
        regions.push(TemplateRegion {
            id: r.id,
            number: r.number,
            contours,
            label_anchor,
            label_omitted: r.label_omitted,
            area: r.area,
        });
    }
    let canvas = w as u64 * h as u64;
    if area_sum != canvas {
        return Err(Error::validation(
            "regions",
            format!("region areas sum to {area_sum}, canvas has {canvas} pixels"),
        ));
    }

    let t = PbnTemplate {
        version: TEMPLATE_VERSION.to_string(),
        width: w,
        height: h,
        palette,
        regions,
    };
    if is_rectilinear(&t) {
        check_tiling(&t)?;
    }
    Ok(t)
}

fn is_rectilinear(t: &PbnTemplate) -> bool {
    t.regions
        .iter()
        .flat_map(|r| &r.contours)
        .flat_map(|c| c.segments())
        .all(|(a, b)| a.x == b.x || a.y == b.y)
}

/// Pixel-edge outlines must cover the canvas exactly once with each region
/// owning `area` pixels.
fn check_tiling(t: &PbnTemplate) -> Result<()> {
    let (owners, overlap) = rasterize_owners(t, 1);
    if let Some(id) = overlap {
        return Err(Error::validation(
            format!("regions[{id}].contours"),
            "contours overlap another region",
        ));
    }
    let mut counts = vec![0u32; t.regions.len()];
    for &o in &owners {
        if o == UNOWNED {
            return Err(Error::validation("regions", "contours leave part of the canvas uncovered"));
        }
        counts[o as usize] += 1;
    }
    for (i, (r, c)) in t.regions.iter().zip(counts).enumerate() {
        if r.area != c {
            return Err(Error::validation(
                format!("regions[{i}].area"),
                format!("declared {} but contours enclose {c} pixels", r.area),
            ));
        }
    }
    Ok(())
}

/// Even-odd containment of a point against all contours of one region.
fn contains(contours: &[Contour], x: f64, y: f64) -> bool {
    let mut inside = false;
    for (a, b) in contours.iter().flat_map(|c| c.segments()) {
        let (ax, ay, bx, by) = (a.x as f64, a.y as f64, b.x as f64, b.y as f64);
        if (ay <= y) != (by <= y) {
            let cx = ax + (y - ay) * (bx - ax) / (by - ay);
            if x < cx {
                inside = !inside;
            }
        }
    }
    inside
}

/// Assigns each output pixel (centre sampled, even-odd) to a region id.
/// Later regions overwrite earlier ones; the first overwritten region id is
/// reported.
fn rasterize_owners(t: &PbnTemplate, scale: u32) -> (Vec<u32>, Option<u32>) {
    let (ow, oh) = (t.width * scale, t.height * scale);
    let s = scale as f64;
    let mut owners = vec![UNOWNED; ow as usize * oh as usize];
    let mut overlap = None;
    for r in &t.regions {
        let (mut ymin, mut ymax) = (i32::MAX, i32::MIN);
        for p in r.contours.iter().flat_map(|c| &c.points) {
            ymin = ymin.min(p.y);
            ymax = ymax.max(p.y);
        }
        if ymin >= ymax {
            continue;
        }
        let row_lo = (ymin as u32 * scale).min(oh);
        let row_hi = (ymax as u32 * scale).min(oh);
        let mut rows: Vec<Vec<f64>> = vec![Vec::new(); (row_hi - row_lo) as usize];
        for (a, b) in r.contours.iter().flat_map(|c| c.segments()) {
            if a.y == b.y {
                continue;
            }
            let (y0, y1) = (a.y.min(b.y) as u32 * scale, (a.y.max(b.y) as u32 * scale).min(oh));
            for py in y0..y1 {
                let yc = (py as f64 + 0.5) / s;
                let x = a.x as f64 + (yc - a.y as f64) * (b.x - a.x) as f64 / (b.y - a.y) as f64;
                rows[(py - row_lo) as usize].push(x * s);
            }
        }
        for (ri, xs) in rows.iter_mut().enumerate() {
            xs.sort_by(f64::total_cmp);
            let py = row_lo as usize + ri;
            for pair in xs.chunks_exact(2) {
                // Pixels whose centre lies in [x0, x1).
                let start = (pair[0] - 0.5).ceil().max(0.0) as u32;
                let end = ((pair[1] - 0.5).ceil().max(0.0) as u32).min(ow);
                for px in start..end {
                    let slot = &mut owners[py * ow as usize + px as usize];
                    if *slot != UNOWNED && overlap.is_none() {
                        overlap = Some(r.id);
                    }
                    *slot = r.id;
                }
            }
        }
    }
    (owners, overlap)
}

fn boundary_mask(owners: &[u32], w: u32, h: u32) -> Vec<bool> {
    let (w, h) = (w as usize, h as usize);
    let mut mask = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let o = owners[y * w + x];
            mask[y * w + x] = (x + 1 < w && owners[y * w + x + 1] != o) || (y + 1 < h && owners[(y + 1) * w + x] != o);
        }
    }
    mask
}

fn check_render_size(t: &PbnTemplate, scale: u32) -> Result<()> {
    if scale == 0 {
        return Err(Error::invalid("scale must be at least 1"));
    }
    let side = t.width.max(t.height) as u64 * scale as u64;
    if side > MAX_RENDER_DIM as u64 {
        return Err(Error::invalid(format!(
            "rendered side of {side} px exceeds the {MAX_RENDER_DIM} px limit"
        )));
    }
    Ok(())
}

/// Black outlines on white with each labelled region's number drawn in a
/// 5×7 bitmap font sized by its clearance.
pub fn render_template_png(t: &PbnTemplate, scale: u32) -> Result<RasterImage> {
    check_render_size(t, scale)?;
    let (w, h) = (t.width * scale, t.height * scale);
    let (owners, _) = rasterize_owners(t, scale);
    let mask = boundary_mask(&owners, w, h);
    let mut img = RasterImage::filled(w, h, [255; 4])?;
    for (i, &edge) in mask.iter().enumerate() {
        if edge {
            img.put(i as u32 % w, i as u32 / w, OUTLINE);
        }
    }
    for r in &t.regions {
        if let Some(a) = r.label_anchor {
            let glyph = ((a.clearance * scale as f64 * 1.2 / 7.0).round() as u32).max(1);
            let cx = (a.x as f64 + 0.5) * scale as f64;
            let cy = (a.y as f64 + 0.5) * scale as f64;
            draw_number(&mut img, r.number, cx, cy, glyph);
        }
    }
    Ok(img)
}

/// Scale-1 preview with the listed regions painted in their chosen palette
/// colors, unlisted regions white and outlines on top. Numbers are omitted.
pub fn render_filled_png(t: &PbnTemplate, fills: &Fills) -> Result<RasterImage> {
    for (&id, &number) in fills {
        if t.region(id).is_none() {
            return Err(Error::invalid(format!("unknown region id {id}")));
        }
        if number == 0 || number as usize > t.palette.len() {
            return Err(Error::invalid(format!("unknown palette number {number}")));
        }
    }
    check_render_size(t, 1)?;
    let (w, h) = (t.width, t.height);
    let (owners, _) = rasterize_owners(t, 1);
    let mask = boundary_mask(&owners, w, h);
    let colors: Vec<[u8; 4]> = (0..t.regions.len() as u32)
        .map(|id| match fills.get(&id) {
            Some(&n) => {
                let [r, g, b] = t.palette.entries()[n as usize - 1].srgb.0;
                [r, g, b, 255]
            }
            None => [255; 4],
        })
        .collect();
    RasterImage::from_fn(w, h, |x, y| {
        let i = (y * w + x) as usize;
        if mask[i] {
            OUTLINE
        } else {
            colors.get(owners[i] as usize).copied().unwrap_or([255; 4])
        }
    })
}

const DIGITS: [[u8; 7]; 10] = [
    [0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E],
    [0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E],
    [0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F],
    [0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E],
    [0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02],
    [0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E],
    [0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E],
    [0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08],
    [0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E],
    [0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C],
];

/// Draws `n` centred on `(cx, cy)`, each font cell `glyph` pixels wide.
fn draw_number(img: &mut RasterImage, n: u32, cx: f64, cy: f64, glyph: u32) {
    let digits: Vec<usize> = n.to_string().bytes().map(|b| (b - b'0') as usize).collect();
    let g = glyph as i64;
    let text_w = digits.len() as i64 * 6 * g - g;
    let x0 = (cx - text_w as f64 / 2.0).round() as i64;
    let y0 = (cy - 3.5 * g as f64).round() as i64;
    for (k, &d) in digits.iter().enumerate() {
        let left = x0 + k as i64 * 6 * g;
        for (row, bits) in DIGITS[d].iter().enumerate() {
            for col in 0..5 {
                if bits & (0x10 >> col) == 0 {
                    continue;
                }
                for dy in 0..g {
                    for dx in 0..g {
                        let x = left + col * g + dx;
                        let y = y0 + row as i64 * g + dy;
                        if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
                            img.put(x as u32, y as u32, DIGIT_INK);
                        }
                    }
                }
            }
        }
    }
}

const LEGEND_CELL_W: u32 = 64;
const LEGEND_CELL_H: u32 = 28;

fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn path_data(contours: &[Contour]) -> String {
    let mut d = String::new();
    for c in contours {
        let n = c.points.len() - 1;
        for (i, p) in c.points[..n].iter().enumerate() {
            let _ = write!(d, "{}{} {}", if i == 0 { "M" } else { "L" }, p.x, p.y);
        }
        d.push('Z');
    }
    d
}

/// SVG 1.1 outline template.
///
/// The drawing sits in a nested `<svg id="canvas">` whose viewBox is the
/// template canvas; the legend of numbered swatches is laid out below it.
/// Region labels carry `class="label"`, legend numbers
/// `class="legend-number"`.
pub fn render_template_svg(t: &PbnTemplate, stroke_width: f64) -> Result<Vec<u8>> {
    if !(stroke_width > 0.0 && stroke_width.is_finite()) {
        return Err(Error::invalid(format!("stroke width must be positive, got {stroke_width}")));
    }
    let (w, h) = (t.width, t.height);
    let n = t.palette.len() as u32;
    let cols = (w / LEGEND_CELL_W).max(1);
    let legend_h = n.div_ceil(cols) * LEGEND_CELL_H + 8;
    let total_w = w.max(LEGEND_CELL_W);
    let total_h = h + legend_h;

    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{total_w}\" height=\"{total_h}\" viewBox=\"0 0 {total_w} {total_h}\">"
    );
    let _ = writeln!(
        s,
        "<svg id=\"canvas\" x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(
        s,
        "<g class=\"regions\" fill=\"#ffffff\" fill-rule=\"evenodd\" stroke=\"#000000\" stroke-width=\"{}\" stroke-linejoin=\"round\">",
        num(stroke_width)
    );
    for r in &t.regions {
        let _ = writeln!(
            s,
            "<path data-region=\"{}\" data-number=\"{}\" d=\"{}\"/>",
            r.id,
            r.number,
            path_data(&r.contours)
        );
    }
    s.push_str("</g>\n");
    s.push_str("<g class=\"labels\" font-family=\"sans-serif\" text-anchor=\"middle\" dominant-baseline=\"central\" fill=\"#000000\">\n");
    for r in &t.regions {
        if let Some(a) = r.label_anchor {
            let _ = writeln!(
                s,
                "<text class=\"label\" data-region=\"{}\" x=\"{}\" y=\"{}\" font-size=\"{}\">{}</text>",
                r.id,
                num(a.x as f64 + 0.5),
                num(a.y as f64 + 0.5),
                num(a.clearance * 1.2),
                r.number
            );
        }
    }
    s.push_str("</g>\n</svg>\n");
    let _ = writeln!(
        s,
        "<g class=\"legend\" transform=\"translate(0 {h})\" font-family=\"sans-serif\" font-size=\"14\" dominant-baseline=\"central\">"
    );
    for (i, e) in t.palette.entries().iter().enumerate() {
        let (cx, cy) = ((i as u32 % cols) * LEGEND_CELL_W, (i as u32 / cols) * LEGEND_CELL_H + 4);
        let _ = writeln!(
            s,
            "<rect class=\"swatch\" data-number=\"{}\" x=\"{}\" y=\"{}\" width=\"20\" height=\"20\" fill=\"{}\" stroke=\"#000000\" stroke-width=\"1\"/>",
            e.number,
            cx + 8,
            cy + 4,
            e.srgb.hex()
        );
        let _ = writeln!(
            s,
            "<text class=\"legend-number\" x=\"{}\" y=\"{}\">{}</text>",
            cx + 34,
            cy + 14,
            e.number
        );
    }
    s.push_str("</g>\n</svg>\n");
    Ok(s.into_bytes())
}
