//! Image analysis behind ArtVista: perceptual palette extraction, paint-by-number
//! region building, sketch levels and the template export formats.
//!
//! The pipeline for a template is
//! [`downscale_for_analysis`] → [`quantize_colors`] → [`label_regions`] →
//! [`merge_small_regions`] → [`trace_boundaries`] → [`simplify_contour`] →
//! [`compute_label_anchor`], composed by [`build_template`].

pub mod color;
pub mod error;
pub mod exporter;
pub mod quant;
pub mod raster;
pub mod regions;
pub mod rng;
pub mod sketch;
pub mod synth;
pub mod template;

pub use color::{cielab_to_srgb, srgb_to_cielab, LabColor, Rgb};
pub use error::{Error, Result};
pub use quant::{
    downscale_for_analysis, quantize_colors, IndexMap, Palette, PaletteEntry, Quantized,
    DEFAULT_COLORS, MAX_COLORS, SIMPLIFIED_COLORS,
};
pub use raster::{GrayRaster, RasterImage, MAX_DECODE_DIM};
pub use regions::{
    compute_label_anchor, label_regions, merge_small_regions, simplify_contour,
    trace_boundaries, Connectivity, Contour, ContourKind, LabelAnchor, Point, Region, RegionMap,
};
pub use rng::SplitMix64;
pub use template::{build_template, build_template_detailed, DEFAULT_MIN_AREA_FRACTION, PbnTemplate, TemplateBuild, TemplateOptions, TemplateRegion};
pub use sketch::{canny_edges, generate_sketch, xdog_lineart, Sketch, SketchLevel, XdogParams};
pub use exporter::{render_filled_png, render_template_png, render_template_svg, template_from_json, template_to_json, Fills};
pub use synth::synthetic_photo;
