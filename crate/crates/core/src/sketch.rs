//! Three sketch difficulty levels from classical filters.
//!
//! * abstract: outlines of an aggressively merged 6-color template,
//! * intermediate: those outlines plus Canny edges,
//! * advanced: XDoG line art.
//!
//! Luma is Rec. 709 on the composited sRGB values, scaled to `[0, 1]`.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::quant::downscale_for_analysis;
use crate::raster::{GrayRaster, RasterImage};
use crate::template::{build_template_detailed, TemplateOptions, ANALYSIS_MAX_DIM};

pub const INK: u8 = 0;
pub const PAPER: u8 = 255;

const ABSTRACT_COLORS: usize = 6;
const ABSTRACT_MIN_AREA_FRACTION: f64 = 0.005;
const CANNY_SIGMA: f64 = 1.4;
const CANNY_LOW: f64 = 0.1;
const CANNY_HIGH: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SketchLevel {
    Abstract,
    Intermediate,
    Advanced,
}

impl SketchLevel {
    pub const ALL: [SketchLevel; 3] = [SketchLevel::Abstract, SketchLevel::Intermediate, SketchLevel::Advanced];

    pub fn as_str(self) -> &'static str {
        match self {
            SketchLevel::Abstract => "abstract",
            SketchLevel::Intermediate => "intermediate",
            SketchLevel::Advanced => "advanced",
        }
    }
}

impl fmt::Display for SketchLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SketchLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abstract" => Ok(SketchLevel::Abstract),
            "intermediate" => Ok(SketchLevel::Intermediate),
            "advanced" => Ok(SketchLevel::Advanced),
            other => Err(Error::invalid(format!(
                "unknown sketch level {other:?} (expected abstract, intermediate or advanced)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sketch {
    pub level: SketchLevel,
    /// 0 is ink, 255 is paper.
    pub strokes: GrayRaster,
}

impl Sketch {
    /// Fraction of pixels darker than mid-grey.
    pub fn ink_density(&self) -> f64 {
        self.strokes.count_below(128) as f64 / self.strokes.data.len() as f64
    }
}

struct Plane {
    w: usize,
    h: usize,
    v: Vec<f64>,
}

impl Plane {
    fn at(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.w as isize - 1) as usize;
        let y = y.clamp(0, self.h as isize - 1) as usize;
        self.v[y * self.w + x]
    }
}

fn luma(img: &RasterImage) -> Plane {
    let v = img
        .composited_rgb()
        .map(|c| {
            let [r, g, b] = c.0;
            (0.2126 * r as f64 + 0.7152 * g as f64 + 0.0722 * b as f64) / 255.0
        })
        .collect();
    Plane {
        w: img.width() as usize,
        h: img.height() as usize,
        v,
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-r..=r).map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian blur with clamp-to-edge borders.
fn blur(p: &Plane, sigma: f64) -> Plane {
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let mut tmp = vec![0.0; p.v.len()];
    for y in 0..p.h {
        for x in 0..p.w {
            tmp[y * p.w + x] = k
                .iter()
                .enumerate()
                .map(|(i, wt)| wt * p.at(x as isize + i as isize - r, y as isize))
                .sum();
        }
    }
    let tmp = Plane { w: p.w, h: p.h, v: tmp };
    let mut out = vec![0.0; p.v.len()];
    for y in 0..p.h {
        for x in 0..p.w {
            out[y * p.w + x] = k
                .iter()
                .enumerate()
                .map(|(i, wt)| wt * tmp.at(x as isize, y as isize + i as isize - r))
                .sum();
        }
    }
    Plane { w: p.w, h: p.h, v: out }
}

/// Canny edge map: 255 on edge pixels, 0 elsewhere.
///
/// Luma → Gaussian blur → Sobel → non-maximum suppression → hysteresis.
/// `low` and `high` are fractions of the strongest gradient magnitude.
/// Suppression compares against both neighbors across the edge but only
/// requires a strict maximum towards the negative side, so a symmetric ridge
/// produces a one-pixel line.
pub fn canny_edges(img: &RasterImage, sigma: f64, low: f64, high: f64) -> Result<GrayRaster> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("sigma must be positive"));
    }
    if !(0.0 < low && low < high && high <= 1.0) {
        return Err(Error::invalid(format!(
            "thresholds must satisfy 0 < low < high <= 1, got low={low} high={high}"
        )));
    }
    let g = blur(&luma(img), sigma);
    let (w, h) = (g.w, g.h);
    let mut mag = vec![0.0; w * h];
    let mut sector = vec![0u8; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (g.at(x + 1, y - 1) + 2.0 * g.at(x + 1, y) + g.at(x + 1, y + 1))
                - (g.at(x - 1, y - 1) + 2.0 * g.at(x - 1, y) + g.at(x - 1, y + 1));
            let gy = (g.at(x - 1, y + 1) + 2.0 * g.at(x, y + 1) + g.at(x + 1, y + 1))
                - (g.at(x - 1, y - 1) + 2.0 * g.at(x, y - 1) + g.at(x + 1, y - 1));
            let i = y as usize * w + x as usize;
            mag[i] = gx.hypot(gy);
            let angle = gy.atan2(gx).to_degrees().rem_euclid(180.0);
            sector[i] = match angle {
                a if !(22.5..157.5).contains(&a) => 0,
                a if a < 67.5 => 1,
                a if a < 112.5 => 2,
                _ => 3,
            };
        }
    }
    let gmax = mag.iter().cloned().fold(0.0, f64::max);
    let mut out = GrayRaster::filled(w as u32, h as u32, 0);
    if gmax <= 0.0 {
        return Ok(out);
    }

    let m = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };
    let mut thin = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            // (negative-side offset, positive-side offset) across the edge.
            let ((nx, ny), (px, py)) = match sector[i] {
                0 => ((-1, 0), (1, 0)),
                1 => ((-1, -1), (1, 1)),
                2 => ((0, -1), (0, 1)),
                _ => ((1, -1), (-1, 1)),
            };
            let v = mag[i];
            if v > m(x + nx, y + ny) && v >= m(x + px, y + py) {
                thin[i] = v;
            }
        }
    }

    let (lo, hi) = (low * gmax, high * gmax);
    let mut queue = VecDeque::new();
    for (i, &v) in thin.iter().enumerate() {
        if v >= hi && v > 0.0 {
            out.data[i] = 255;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if out.data[j] == 0 && thin[j] >= lo && thin[j] > 0.0 {
                    out.data[j] = 255;
                    queue.push_back(j);
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XdogParams {
    pub sigma: f64,
    pub k_ratio: f64,
    pub tau: f64,
    pub epsilon: f64,
    pub phi: f64,
}

impl Default for XdogParams {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            k_ratio: 1.6,
            tau: 0.99,
            epsilon: 0.01,
            phi: 10.0,
        }
    }
}

/// Extended difference-of-Gaussians line art.
///
/// `S = G(σ) − G(kσ) + (1 − τ)·255` on 8-bit luma, i.e. `G(σ) − τ·G(kσ)`
/// with the wide blur's flat response measured against white paper, so
/// flat areas of any tone sit exactly at `(1 − τ)·255` and leave no ink.
/// Output is 255 where `S ≥ ε`, else `255·(1 + tanh(φ·(S − ε)))`.
pub fn xdog_lineart(img: &RasterImage, p: &XdogParams) -> Result<GrayRaster> {
    if !(p.sigma > 0.0 && p.sigma.is_finite()) {
        return Err(Error::invalid("sigma must be positive"));
    }
    if !(p.k_ratio > 1.0 && p.k_ratio.is_finite()) {
        return Err(Error::invalid("k_ratio must be greater than 1"));
    }
    if !(p.phi > 0.0 && p.phi.is_finite()) {
        return Err(Error::invalid("phi must be positive"));
    }
    if !p.tau.is_finite() || !p.epsilon.is_finite() {
        return Err(Error::invalid("tau and epsilon must be finite"));
    }
    let l = luma(img);
    let narrow = blur(&l, p.sigma);
    let wide = blur(&l, p.sigma * p.k_ratio);
    let data = narrow
        .v
        .iter()
        .zip(&wide.v)
        .map(|(a, b)| {
            let s = 255.0 * (a - b + (1.0 - p.tau));
            if s >= p.epsilon {
                PAPER
            } else {
                (255.0 * (1.0 + (p.phi * (s - p.epsilon)).tanh())).round().clamp(0.0, 255.0) as u8
            }
        })
        .collect();
    Ok(GrayRaster {
        width: l.w as u32,
        height: l.h as u32,
        data,
    })
}

/// One-pixel ink wherever the right or lower neighbor lies in another region.
fn region_outlines(img: &RasterImage, seed: u64) -> Result<GrayRaster> {
    let opts = TemplateOptions {
        colors: ABSTRACT_COLORS,
        seed,
        min_area_fraction: ABSTRACT_MIN_AREA_FRACTION,
        ..Default::default()
    };
    let build = build_template_detailed(img, &opts)?;
    let rm = &build.regions;
    let (w, h) = (rm.width, rm.height);
    let mut out = GrayRaster::filled(w, h, PAPER);
    for y in 0..h {
        for x in 0..w {
            let r = rm.get(x, y);
            let edge = (x + 1 < w && rm.get(x + 1, y) != r) || (y + 1 < h && rm.get(x, y + 1) != r);
            if edge {
                out.data[(y * w + x) as usize] = INK;
            }
        }
    }
    Ok(out)
}

/// Renders one sketch level at the analysis resolution (longest side at
/// most 1024 px). `seed` drives the palette clustering behind the outline
/// levels.
pub fn generate_sketch(img: &RasterImage, level: SketchLevel, seed: u64) -> Result<Sketch> {
    let analyzed = downscale_for_analysis(img, ANALYSIS_MAX_DIM)?;
    let strokes = match level {
        SketchLevel::Abstract => region_outlines(&analyzed, seed)?,
        SketchLevel::Intermediate => {
            let mut out = region_outlines(&analyzed, seed)?;
            let edges = canny_edges(&analyzed, CANNY_SIGMA, CANNY_LOW, CANNY_HIGH)?;
            for (o, e) in out.data.iter_mut().zip(&edges.data) {
                if *e == 255 {
                    *o = INK;
                }
            }
            out
        }
        SketchLevel::Advanced => xdog_lineart(&analyzed, &XdogParams::default())?,
    };
    Ok(Sketch { level, strokes })
}
