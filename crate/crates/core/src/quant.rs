//! Perceptual palette extraction: seeded k-means++ / Lloyd in CIELAB.
//!
//! Pixels are composited over white, deduplicated into weighted distinct
//! colors and clustered in Lab with squared Euclidean distance. Every restart
//! draws its own [`SplitMix64`] stream from a root generator seeded with the
//! caller's seed, in restart order. Within one restart the generator is
//! consumed by k-means++ only: one draw for the first center, then one draw
//! per additional center.

use crate::color::{cielab_to_srgb, srgb_to_cielab, LabColor, Rgb};
use crate::error::{Error, Result};
use crate::raster::RasterImage;
use crate::rng::SplitMix64;

/// Palette size used unless the caller asks otherwise.
pub const DEFAULT_COLORS: usize = 16;
/// The reduced palette size for quicker painting sessions.
pub const SIMPLIFIED_COLORS: usize = 8;
pub const DEFAULT_RESTARTS: usize = 3;

/// Upper bound on requested palette size; numbered legends stop being usable well before this.
pub const MAX_COLORS: usize = 64;
pub const MAX_ITERATIONS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct PaletteEntry {
    /// Painter-facing label, 1-based.
    pub number: u32,
    pub srgb: Rgb,
    pub lab: LabColor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Palette {
    entries: Vec<PaletteEntry>,
    k_requested: usize,
}

impl Palette {
    /// Checks numbering (1..=len, in order), size (≤ `k_requested`) and sRGB uniqueness.
    pub fn new(entries: Vec<PaletteEntry>, k_requested: usize) -> Result<Self> {
        if entries.len() > k_requested {
            return Err(Error::invalid(format!(
                "palette has {} entries but only {k_requested} were requested",
                entries.len()
            )));
        }
        for (i, e) in entries.iter().enumerate() {
            if e.number as usize != i + 1 {
                return Err(Error::invalid(format!(
                    "palette entry {i} has number {}, expected {}",
                    e.number,
                    i + 1
                )));
            }
            if entries[..i].iter().any(|o| o.srgb == e.srgb) {
                return Err(Error::invalid(format!("duplicate palette color {}", e.srgb.hex())));
            }
        }
        Ok(Self {
            entries,
            k_requested,
        })
    }

    /// Numbers the colors 1..=n in the given order; Lab is derived from sRGB.
    pub fn from_colors(colors: &[Rgb]) -> Result<Self> {
        let entries = colors
            .iter()
            .enumerate()
            .map(|(i, &srgb)| PaletteEntry {
                number: i as u32 + 1,
                srgb,
                lab: srgb_to_cielab(srgb),
            })
            .collect();
        Self::new(entries, colors.len())
    }

    pub fn entries(&self) -> &[PaletteEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn k_requested(&self) -> usize {
        self.k_requested
    }

    pub fn get(&self, ordinal: usize) -> Option<&PaletteEntry> {
        self.entries.get(ordinal)
    }
}

/// Per-pixel palette ordinals (0-based), row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexMap {
    pub width: u32,
    pub height: u32,
    pub indices: Vec<u32>,
}

impl IndexMap {
    pub fn new(width: u32, height: u32, indices: Vec<u32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("index map must be non-empty"));
        }
        if indices.len() != width as usize * height as usize {
            return Err(Error::invalid("index buffer does not match dimensions"));
        }
        Ok(Self {
            width,
            height,
            indices,
        })
    }

    pub fn get(&self, x: u32, y: u32) -> u32 {
        self.indices[y as usize * self.width as usize + x as usize]
    }

    /// Palette-indexed rasterization, opaque.
    pub fn render(&self, palette: &Palette) -> RasterImage {
        let mut pixels = Vec::with_capacity(self.indices.len() * 4);
        for &i in &self.indices {
            let [r, g, b] = palette.entries[i as usize].srgb.0;
            pixels.extend_from_slice(&[r, g, b, 255]);
        }
        RasterImage::new(self.width, self.height, pixels).expect("dimensions checked")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quantized {
    pub palette: Palette,
    pub indices: IndexMap,
    /// Sum over pixels of the squared Lab distance to the assigned entry.
    pub sse: f64,
    /// SSE after every assignment step, one list per restart.
    pub traces: Vec<Vec<f64>>,
}

/// Distinct composited colors of an image with their pixel counts, sorted by
/// packed RGB, plus the distinct-color slot of every pixel.
struct ColorHistogram {
    colors: Vec<Rgb>,
    weights: Vec<f64>,
    pixel_slots: Vec<u32>,
}

fn pack(c: Rgb) -> u32 {
    let [r, g, b] = c.0;
    (r as u32) << 16 | (g as u32) << 8 | b as u32
}

impl ColorHistogram {
    fn build(img: &RasterImage) -> Self {
        let keys: Vec<u32> = img.composited_rgb().map(pack).collect();
        let mut sorted = keys.clone();
        sorted.sort_unstable();
        let mut distinct: Vec<u32> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for &k in &sorted {
            if distinct.last() == Some(&k) {
                *weights.last_mut().unwrap() += 1.0;
            } else {
                distinct.push(k);
                weights.push(1.0);
            }
        }
        let pixel_slots = keys
            .iter()
            .map(|k| distinct.binary_search(k).expect("key present") as u32)
            .collect();
        let colors = distinct
            .iter()
            .map(|&k| Rgb([(k >> 16) as u8, (k >> 8) as u8, k as u8]))
            .collect();
        Self {
            colors,
            weights,
            pixel_slots,
        }
    }
}

/// One seeded k-means++ / Lloyd run over weighted points.
#[derive(Debug, Clone)]
pub(crate) struct KmeansRun {
    pub centroids: Vec<LabColor>,
    pub assignment: Vec<usize>,
    pub sse: f64,
    pub history: Vec<f64>,
}

fn nearest(point: &LabColor, centroids: &[LabColor]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = point.distance_sq(c);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    (best, best_d)
}

/// Index of the first slot whose running sum exceeds `target`; falls back to
/// the last slot with positive mass when rounding leaves `target` past the end.
fn pick_cumulative(masses: impl Iterator<Item = f64> + Clone, target: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, m) in masses.enumerate() {
        if m > 0.0 {
            last_positive = i;
            acc += m;
            if acc > target {
                return i;
            }
        }
    }
    last_positive
}

fn kmeans_plus_plus(points: &[LabColor], weights: &[f64], k: usize, rng: &mut SplitMix64) -> Vec<LabColor> {
    let total: f64 = weights.iter().sum();
    let first = pick_cumulative(weights.iter().copied(), rng.next_f64() * total);
    let mut centroids = vec![points[first]];
    let mut d2: Vec<f64> = points.iter().map(|p| p.distance_sq(&points[first])).collect();
    while centroids.len() < k {
        let mass: f64 = d2.iter().zip(weights).map(|(d, w)| d * w).sum();
        if mass <= 0.0 {
            break;
        }
        let target = rng.next_f64() * mass;
        let next = pick_cumulative(d2.iter().zip(weights).map(|(d, w)| d * w), target);
        let c = points[next];
        centroids.push(c);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(p.distance_sq(&c));
        }
    }
    centroids
}

pub(crate) fn lloyd(points: &[LabColor], weights: &[f64], k: usize, rng: &mut SplitMix64) -> KmeansRun {
    let centroids = kmeans_plus_plus(points, weights, k, rng);
    lloyd_from(points, weights, centroids)
}

fn lloyd_from(points: &[LabColor], weights: &[f64], mut centroids: Vec<LabColor>) -> KmeansRun {
    let kk = centroids.len();
    let mut assignment = vec![usize::MAX; points.len()];
    let mut dist = vec![0.0; points.len()];
    let mut history = Vec::new();
    let mut sse = 0.0;

    for _ in 0..MAX_ITERATIONS {
        let mut changed = false;
        sse = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (best, d) = nearest(p, &centroids);
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
            dist[i] = d;
            sse += weights[i] * d;
        }
        history.push(sse);
        if !changed {
            break;
        }

        let mut sums = vec![[0.0f64; 3]; kk];
        let mut mass = vec![0.0f64; kk];
        for ((p, &w), &a) in points.iter().zip(weights).zip(&assignment) {
            sums[a][0] += w * p.l;
            sums[a][1] += w * p.a;
            sums[a][2] += w * p.b;
            mass[a] += w;
        }
        let mut taken = vec![false; points.len()];
        for c in 0..kk {
            if mass[c] > 0.0 {
                centroids[c] = LabColor::new(sums[c][0] / mass[c], sums[c][1] / mass[c], sums[c][2] / mass[c]);
                continue;
            }
            // Empty: move to the point farthest from its own centroid.
            let mut far = None;
            let mut far_d = -1.0;
            for (i, &d) in dist.iter().enumerate() {
                if !taken[i] && d > far_d {
                    far = Some(i);
                    far_d = d;
                }
            }
            if let Some(i) = far {
                taken[i] = true;
                centroids[c] = points[i];
            }
        }
    }

    KmeansRun {
        centroids,
        assignment,
        sse,
        history,
    }
}

/// Reduces an image to at most `k` perceptually spaced colors.
///
/// Runs `restarts` seeded k-means++ initializations followed by Lloyd
/// iterations (at most [`MAX_ITERATIONS`], stopping early once no assignment
/// changes) and keeps the run with the lowest SSE, earliest restart on ties.
/// Images with at most `k` distinct colors get exactly those colors back.
///
/// The palette is sorted by lightness, lightest first, and numbered from 1.
/// Clusters that end up empty, or whose rounded sRGB collides with another
/// entry, do not survive.
pub fn quantize_colors(img: &RasterImage, k: usize, seed: u64, restarts: usize) -> Result<Quantized> {
    if !(1..=MAX_COLORS).contains(&k) {
        return Err(Error::invalid(format!("k must be in 1..={MAX_COLORS}, got {k}")));
    }
    if restarts == 0 {
        return Err(Error::invalid("restarts must be at least 1"));
    }
    if img.pixel_count() == 0 {
        return Err(Error::invalid("image has no pixels"));
    }

    let hist = ColorHistogram::build(img);
    let points: Vec<LabColor> = hist.colors.iter().map(|&c| srgb_to_cielab(c)).collect();

    let (centroids, assignment, traces) = if points.len() <= k {
        let ids = (0..points.len()).collect();
        (points.clone(), ids, vec![vec![0.0]])
    } else {
        let mut root = SplitMix64::new(seed);
        let mut best: Option<KmeansRun> = None;
        let mut traces = Vec::with_capacity(restarts);
        for _ in 0..restarts {
            let mut rng = root.split();
            let run = lloyd(&points, &hist.weights, k, &mut rng);
            traces.push(run.history.clone());
            if best.as_ref().is_none_or(|b| run.sse < b.sse) {
                best = Some(run);
            }
        }
        let run = best.expect("at least one restart");
        (run.centroids, run.assignment, traces)
    };

    let (palette, slot_entry) = finalize_palette(&points, &hist.weights, centroids, assignment, k);

    let mut sse = 0.0;
    for (i, p) in points.iter().enumerate() {
        sse += hist.weights[i] * p.distance_sq(&palette.entries[slot_entry[i]].lab);
    }
    let indices = hist
        .pixel_slots
        .iter()
        .map(|&s| slot_entry[s as usize] as u32)
        .collect();
    let indices = IndexMap::new(img.width(), img.height(), indices)?;
    Ok(Quantized {
        palette,
        indices,
        sse,
        traces,
    })
}

/// Turns raw centroids into a sorted, deduplicated palette and the final
/// nearest-entry assignment of every distinct color.
fn finalize_palette(
    points: &[LabColor],
    weights: &[f64],
    centroids: Vec<LabColor>,
    mut assignment: Vec<usize>,
    k: usize,
) -> (Palette, Vec<usize>) {
    let mut centers = centroids;
    loop {
        // Drop empty clusters.
        let mut mass = vec![0.0; centers.len()];
        for (&a, &w) in assignment.iter().zip(weights) {
            mass[a] += w;
        }
        let keep: Vec<usize> = (0..centers.len()).filter(|&c| mass[c] > 0.0).collect();
        let mut remap = vec![usize::MAX; centers.len()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
        }
        centers = keep.iter().map(|&c| centers[c]).collect();
        for a in assignment.iter_mut() {
            *a = remap[*a];
        }

        // Merge clusters whose rounded sRGB coincide into their weighted mean.
        let srgb: Vec<Rgb> = centers.iter().map(|&c| cielab_to_srgb(c)).collect();
        let mut group = (0..centers.len()).collect::<Vec<_>>();
        for i in 0..centers.len() {
            if let Some(j) = (0..i).find(|&j| srgb[j] == srgb[i]) {
                group[i] = group[j];
            }
        }
        let merged = group.iter().enumerate().any(|(i, &g)| g != i);
        if merged {
            for a in assignment.iter_mut() {
                *a = group[*a];
            }
            let mut sums = vec![[0.0f64; 4]; centers.len()];
            for ((p, &w), &a) in points.iter().zip(weights).zip(&assignment) {
                sums[a][0] += w * p.l;
                sums[a][1] += w * p.a;
                sums[a][2] += w * p.b;
                sums[a][3] += w;
            }
            for (c, s) in centers.iter_mut().zip(&sums) {
                if s[3] > 0.0 {
                    *c = LabColor::new(s[0] / s[3], s[1] / s[3], s[2] / s[3]);
                }
            }
            continue;
        }

        // Lightest first; sRGB breaks exact lightness ties.
        let mut order: Vec<usize> = (0..centers.len()).collect();
        order.sort_by(|&x, &y| {
            centers[y]
                .l
                .total_cmp(&centers[x].l)
                .then_with(|| srgb[x].cmp(&srgb[y]))
        });
        let sorted: Vec<LabColor> = order.iter().map(|&c| centers[c]).collect();
        let sorted_srgb: Vec<Rgb> = order.iter().map(|&c| srgb[c]).collect();

        let mut next_assignment = Vec::with_capacity(points.len());
        let mut mass = vec![0.0; sorted.len()];
        for (p, &w) in points.iter().zip(weights) {
            let (best, _) = nearest(p, &sorted);
            mass[best] += w;
            next_assignment.push(best);
        }
        if mass.iter().any(|&m| m == 0.0) {
            centers = sorted;
            assignment = next_assignment;
            continue;
        }

        let entries = sorted
            .iter()
            .zip(&sorted_srgb)
            .enumerate()
            .map(|(i, (&lab, &srgb))| PaletteEntry {
                number: i as u32 + 1,
                srgb,
                lab,
            })
            .collect();
        let palette = Palette::new(entries, k).expect("palette invariants hold by construction");
        return (palette, next_assignment);
    }
}

/// Box-filter downscale so the longer side is at most `max_dim`.
///
/// Images already within the limit are returned unchanged. Otherwise the
/// longer side becomes exactly `max_dim` and the shorter side is scaled in
/// proportion, rounding halves up. Averaging is area-weighted over
/// premultiplied RGBA.
pub fn downscale_for_analysis(img: &RasterImage, max_dim: u32) -> Result<RasterImage> {
    if max_dim < 16 {
        return Err(Error::invalid("max_dim must be at least 16"));
    }
    let (w, h) = (img.width(), img.height());
    if w.max(h) <= max_dim {
        return Ok(img.clone());
    }
    let scale_minor = |minor: u32, major: u32| -> u32 {
        let num = 2 * minor as u64 * max_dim as u64 + major as u64;
        ((num / (2 * major as u64)) as u32).max(1)
    };
    let (nw, nh) = if w >= h {
        (max_dim, scale_minor(h, w))
    } else {
        (scale_minor(w, h), max_dim)
    };

    let xs = box_weights(w, nw);
    let ys = box_weights(h, nh);

    let mut premul = Vec::with_capacity(img.pixel_count() * 4);
    for p in img.as_bytes().chunks_exact(4) {
        let a = p[3] as f64 / 255.0;
        premul.extend_from_slice(&[p[0] as f64 * a, p[1] as f64 * a, p[2] as f64 * a, p[3] as f64]);
    }

    // Horizontal pass: h rows of nw pixels.
    let mut rows = vec![0.0f64; h as usize * nw as usize * 4];
    for y in 0..h as usize {
        for (ox, taps) in xs.iter().enumerate() {
            let out = &mut rows[(y * nw as usize + ox) * 4..][..4];
            for &(sx, wt) in taps {
                let src = &premul[(y * w as usize + sx) * 4..][..4];
                for c in 0..4 {
                    out[c] += src[c] * wt;
                }
            }
        }
    }

    let mut pixels = Vec::with_capacity(nw as usize * nh as usize * 4);
    for taps in &ys {
        for ox in 0..nw as usize {
            let mut acc = [0.0f64; 4];
            for &(sy, wt) in taps {
                let src = &rows[(sy * nw as usize + ox) * 4..][..4];
                for c in 0..4 {
                    acc[c] += src[c] * wt;
                }
            }
            let alpha = acc[3];
            let unpremul = |v: f64| {
                if alpha > 0.0 {
                    (v * 255.0 / alpha).round().clamp(0.0, 255.0) as u8
                } else {
                    0
                }
            };
            pixels.extend_from_slice(&[
                unpremul(acc[0]),
                unpremul(acc[1]),
                unpremul(acc[2]),
                alpha.round().clamp(0.0, 255.0) as u8,
            ]);
        }
    }
    RasterImage::new(nw, nh, pixels)
}

/// For each output index, the source indices it covers and their normalized
/// overlap weights.
fn box_weights(src: u32, dst: u32) -> Vec<Vec<(usize, f64)>> {
    let ratio = src as f64 / dst as f64;
    (0..dst)
        .map(|o| {
            let start = o as f64 * ratio;
            let end = start + ratio;
            let first = start.floor() as usize;
            let last = (end.ceil() as usize).min(src as usize);
            (first..last)
                .filter_map(|i| {
                    let overlap = (end.min(i as f64 + 1.0) - start.max(i as f64)).max(0.0);
                    (overlap > 0.0).then_some((i, overlap / ratio))
                })
                .collect()
        })
        .collect()
}
