//! Offline stand-in for the backend. Output depends only on the request, so
//! identical requests give byte-identical images.

use artvista_core::rng::mix64;
use artvista_core::{RasterImage, SplitMix64};

use crate::{GenRequest, Style};

pub const MOCK_IMAGE_SIZE: u32 = 512;

fn fnv1a(text: &str) -> u64 {
    text.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

fn hsv(h: f64, s: f64, v: f64) -> [f64; 3] {
    let h = h.rem_euclid(1.0) * 6.0;
    let c = v * s;
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [(r + m) * 255.0, (g + m) * 255.0, (b + m) * 255.0]
}

/// Seeded vertical gradient overlaid with wavy hue bands derived from the
/// prompt hash.
fn reference_image(prompt_hash: u64, seed: u64) -> RasterImage {
    let mut rng = SplitMix64::new(seed);
    let top = hsv(rng.next_f64(), 0.3 + 0.4 * rng.next_f64(), 0.6 + 0.4 * rng.next_f64());
    let bottom = hsv(rng.next_f64(), 0.3 + 0.4 * rng.next_f64(), 0.2 + 0.5 * rng.next_f64());
    let mut bands_rng = SplitMix64::new(prompt_hash);
    let n_bands = 3 + bands_rng.next_below(6) as usize;
    let bands: Vec<([f64; 3], f64, f64)> = (0..n_bands)
        .map(|_| {
            let color = hsv(bands_rng.next_f64(), 0.5 + 0.5 * bands_rng.next_f64(), 0.4 + 0.6 * bands_rng.next_f64());
            let amplitude = 10.0 + 40.0 * bands_rng.next_f64();
            let phase = bands_rng.next_f64() * std::f64::consts::TAU;
            (color, amplitude, phase)
        })
        .collect();
    let wobble = 1.0 + rng.next_f64();
    let size = MOCK_IMAGE_SIZE as f64;
    let band_height = size / (n_bands as f64 + 1.0);
    RasterImage::from_fn(MOCK_IMAGE_SIZE, MOCK_IMAGE_SIZE, |x, y| {
        let (fx, fy) = (x as f64, y as f64);
        let t = fy / size;
        let mut c = [0, 1, 2].map(|i| top[i] * (1.0 - t) + bottom[i] * t);
        for (i, (color, amplitude, phase)) in bands.iter().enumerate() {
            let center = band_height * (i as f64 + 1.0) + amplitude * (fx / size * wobble * std::f64::consts::TAU + phase).sin();
            let d = (fy - center).abs();
            if d < band_height * 0.35 {
                c = *color;
            }
        }
        let px = c.map(|v| v.round().clamp(0.0, 255.0) as u8);
        [px[0], px[1], px[2], 255]
    })
    .expect("fixed non-zero size")
}

pub(crate) fn generate(req: &GenRequest) -> Vec<RasterImage> {
    let style_tag = req.style.map_or(0, |s| s as u64 + 1);
    let h = fnv1a(req.prompt.trim()) ^ mix64(style_tag);
    (0..req.count as u64)
        .map(|i| {
            let img = reference_image(h, mix64(req.seed ^ mix64(i)));
            match req.style {
                Some(style) => stylize(&img, style, req.seed.wrapping_add(i)),
                None => img,
            }
        })
        .collect()
}

fn luma(c: [f64; 3]) -> f64 {
    0.2126 * c[0] + 0.7152 * c[1] + 0.0722 * c[2]
}

/// Per-style tone curve plus a seeded texture overlay.
pub(crate) fn stylize(img: &RasterImage, style: Style, seed: u64) -> RasterImage {
    let texture_seed = mix64(seed ^ (style as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let (amplitude, cell) = match style {
        Style::Realistic => (3.0, 1),
        Style::Colorful => (6.0, 2),
        Style::Watercolor => (14.0, 8),
        Style::Oil => (18.0, 3),
    };
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            let p = img.get(x, y);
            let c = [p[0] as f64, p[1] as f64, p[2] as f64];
            let l = luma(c);
            let toned = match style {
                Style::Realistic => c.map(|v| {
                    let t = v / 255.0;
                    255.0 * (t * t * (3.0 - 2.0 * t) * 0.3 + t * 0.7)
                }),
                Style::Colorful => c.map(|v| l + (v - l) * 1.5),
                Style::Watercolor => c.map(|v| {
                    let soft = l + (v - l) * 0.7;
                    soft + (255.0 - soft) * 0.25
                }),
                Style::Oil => c.map(|v| (v / 32.0).round() * 32.0 + (v - l) * 0.3),
            };
            let cell_hash = mix64(texture_seed ^ (((y / cell) as u64) << 32) ^ (x / cell) as u64);
            let grain = ((cell_hash >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 2.0 * amplitude;
            let px = toned.map(|v| (v + grain).round().clamp(0.0, 255.0) as u8);
            out.put(x, y, [px[0], px[1], px[2], p[3]]);
        }
    }
    out
}
