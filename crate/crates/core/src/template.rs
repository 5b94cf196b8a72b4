//! End-to-end paint-by-number template construction.

use crate::error::{Error, Result};
use crate::quant::{downscale_for_analysis, quantize_colors, Palette, PaletteEntry, Quantized, DEFAULT_COLORS, DEFAULT_RESTARTS};
use crate::raster::RasterImage;
use crate::regions::{
    compute_label_anchor, label_regions, merge_small_regions, simplify_contour, trace_boundaries, Connectivity, Contour,
    LabelAnchor, RegionMap,
};
use crate::color::LabColor;

pub const TEMPLATE_VERSION: &str = "pbn/1";

/// Longest side analyzed; larger inputs are box-filtered down first.
pub const ANALYSIS_MAX_DIM: u32 = 1024;

/// Regions under this fraction of the canvas are merged away by default (0.05 %).
pub const DEFAULT_MIN_AREA_FRACTION: f64 = 0.0005;

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateOptions {
    pub colors: usize,
    pub seed: u64,
    pub restarts: usize,
    /// Fraction of the analyzed pixel count below which regions are merged, in `[0, 1)`.
    pub min_area_fraction: f64,
    /// RDP tolerance in pixels. Zero keeps exact pixel-edge outlines, so the
    /// contours of all regions tile the canvas.
    pub simplify_tolerance: f64,
    pub max_dim: u32,
}

impl Default for TemplateOptions {
    fn default() -> Self {
        Self {
            colors: DEFAULT_COLORS,
            seed: 0,
            restarts: DEFAULT_RESTARTS,
            min_area_fraction: DEFAULT_MIN_AREA_FRACTION,
            simplify_tolerance: 0.0,
            max_dim: ANALYSIS_MAX_DIM,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateRegion {
    pub id: u32,
    /// Palette number (1-based) the region is painted with.
    pub number: u32,
    /// Outer contour first, then holes.
    pub contours: Vec<Contour>,
    pub label_anchor: Option<LabelAnchor>,
    pub label_omitted: bool,
    pub area: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PbnTemplate {
    pub version: String,
    pub width: u32,
    pub height: u32,
    pub palette: Palette,
    pub regions: Vec<TemplateRegion>,
}

impl PbnTemplate {
    pub fn region(&self, id: u32) -> Option<&TemplateRegion> {
        self.regions.get(id as usize)
    }

    pub fn pixel_count(&self) -> u64 {
        self.width as u64 * self.height as u64
    }
}

/// A template together with the intermediate results it was built from.
#[derive(Debug, Clone)]
pub struct TemplateBuild {
    pub template: PbnTemplate,
    /// Quantization of the analyzed image, before merging.
    pub quantized: Quantized,
    /// Merged regions; palette indices refer to `template.palette`.
    pub regions: RegionMap,
}

pub(crate) fn round3(v: f64) -> f64 {
    let r = (v * 1000.0).round() / 1000.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

pub fn build_template(img: &RasterImage, opts: &TemplateOptions) -> Result<PbnTemplate> {
    build_template_detailed(img, opts).map(|b| b.template)
}

/// downscale → quantize → label (4-connected) → merge → trace → simplify → anchors.
///
/// Palette colors no region uses after merging are dropped and the rest
/// renumbered, keeping their light-to-dark order. Lab values and label
/// clearances are rounded to three decimals so the template survives a
/// JSON round trip unchanged.
pub fn build_template_detailed(img: &RasterImage, opts: &TemplateOptions) -> Result<TemplateBuild> {
    let f = opts.min_area_fraction;
    if !(0.0..1.0).contains(&f) {
        return Err(Error::invalid(format!("min_area_fraction must be in [0, 1), got {f}")));
    }
    let analyzed = downscale_for_analysis(img, opts.max_dim)?;
    let quantized = quantize_colors(&analyzed, opts.colors, opts.seed, opts.restarts)?;
    let labelled = label_regions(&quantized.indices, Connectivity::Four);
    let pixels = analyzed.pixel_count() as f64;
    let min_area = ((f * pixels).ceil() as u32).max(1);
    let merged = merge_small_regions(&labelled, &quantized.palette, min_area)?;

    // Keep only the colors that still own a region.
    let mut used = vec![false; quantized.palette.len()];
    for r in &merged.regions {
        used[r.palette_index as usize] = true;
    }
    let mut remap = vec![u32::MAX; used.len()];
    let mut entries = Vec::new();
    for (i, e) in quantized.palette.entries().iter().enumerate() {
        if used[i] {
            remap[i] = entries.len() as u32;
            entries.push(PaletteEntry {
                number: entries.len() as u32 + 1,
                srgb: e.srgb,
                lab: LabColor::new(round3(e.lab.l), round3(e.lab.a), round3(e.lab.b)),
            });
        }
    }
    let palette = Palette::new(entries, opts.colors)?;
    let mut regions = merged;
    for r in &mut regions.regions {
        r.palette_index = remap[r.palette_index as usize];
    }

    let traced = trace_boundaries(&regions);
    let mut template_regions = Vec::with_capacity(regions.regions.len());
    for (region, contours) in regions.regions.iter().zip(traced) {
        let contours = contours
            .iter()
            .map(|c| simplify_contour(c, opts.simplify_tolerance))
            .collect::<Result<Vec<_>>>()?;
        let anchor = compute_label_anchor(&regions, region.id)?.map(|a| LabelAnchor {
            clearance: round3(a.clearance),
            ..a
        });
        template_regions.push(TemplateRegion {
            id: region.id,
            number: region.palette_index + 1,
            contours,
            label_omitted: anchor.is_none(),
            label_anchor: anchor,
            area: region.area,
        });
    }

    let template = PbnTemplate {
        version: TEMPLATE_VERSION.to_string(),
        width: analyzed.width(),
        height: analyzed.height(),
        palette,
        regions: template_regions,
    };
    Ok(TemplateBuild {
        template,
        quantized,
        regions,
    })
}
