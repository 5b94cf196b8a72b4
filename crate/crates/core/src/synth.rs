//! Seeded photo-like scenes, used as a reproducible stand-in for
//! photographs: a graded sky and ground, overlapping objects with crisp
//! occluding edges, fine-grained textured patches (foliage, gravel), thin
//! dark structures (branches, wires) and a 1/f texture over everything.

use crate::raster::RasterImage;
use crate::rng::{mix64, SplitMix64};

struct Blob {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    color: [f64; 3],
    /// Amplitude of the fine texture inside the blob, in 8-bit levels.
    grain: f64,
}

struct Boxed {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
    color: [f64; 3],
}

struct Stroke {
    ax: f64,
    ay: f64,
    bx: f64,
    by: f64,
    half_width: f64,
    shade: f64,
}

fn color(rng: &mut SplitMix64) -> [f64; 3] {
    [rng.next_f64() * 255.0, rng.next_f64() * 255.0, rng.next_f64() * 255.0]
}

fn smoothstep(e0: f64, e1: f64, x: f64) -> f64 {
    let t = ((x - e0) / (e1 - e0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Smoothly interpolated lattice noise in `[-1, 1]` with the given period.
fn value_noise(seed: u64, x: f64, y: f64, period: f64) -> f64 {
    let (gx, gy) = (x / period, y / period);
    let (ix, iy) = (gx.floor(), gy.floor());
    let (tx, ty) = (smoothstep(0.0, 1.0, gx - ix), smoothstep(0.0, 1.0, gy - iy));
    let corner = |dx: f64, dy: f64| {
        let h = mix64(seed ^ mix64((((ix + dx) as i64 as u64) << 32) ^ ((iy + dy) as i64 as u64 & 0xFFFF_FFFF)));
        (h >> 11) as f64 / (1u64 << 52) as f64 - 1.0
    };
    let top = corner(0.0, 0.0) * (1.0 - tx) + corner(1.0, 0.0) * tx;
    let bottom = corner(0.0, 1.0) * (1.0 - tx) + corner(1.0, 1.0) * tx;
    top * (1.0 - ty) + bottom * ty
}

/// Octaves from 64 px down to 2 px, amplitude proportional to period.
fn pink_noise(seed: u64, x: f64, y: f64) -> f64 {
    let mut total = 0.0;
    let mut period = 64.0;
    let mut octave = 0u64;
    while period >= 2.0 {
        total += value_noise(mix64(seed.wrapping_add(octave)), x, y, period) * period / 64.0;
        period /= 2.0;
        octave += 1;
    }
    total
}

fn segment_distance(px: f64, py: f64, s: &Stroke) -> f64 {
    let (dx, dy) = (s.bx - s.ax, s.by - s.ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((px - s.ax) * dx + (py - s.ay) * dy) / len2).clamp(0.0, 1.0)
    };
    (px - s.ax - t * dx).hypot(py - s.ay - t * dy)
}

/// Opaque `width × height` scene, identical for identical arguments.
pub fn synthetic_photo(width: u32, height: u32, seed: u64) -> RasterImage {
    let (width, height) = (width.max(1), height.max(1));
    let mut rng = SplitMix64::new(seed);
    let (w, h) = (width as f64, height as f64);
    let sky_top = color(&mut rng);
    let sky_bottom = color(&mut rng);
    let ground = color(&mut rng);
    let horizon = 0.45 + 0.2 * rng.next_f64();
    let blobs: Vec<Blob> = (0..4 + rng.next_below(5))
        .map(|_| Blob {
            cx: rng.next_f64() * w,
            cy: rng.next_f64() * h,
            rx: (0.05 + 0.2 * rng.next_f64()) * w,
            ry: (0.05 + 0.2 * rng.next_f64()) * h,
            color: color(&mut rng),
            grain: if rng.next_f64() < 0.4 { 30.0 + 50.0 * rng.next_f64() } else { 0.0 },
        })
        .collect();
    let boxes: Vec<Boxed> = (0..1 + rng.next_below(3))
        .map(|_| {
            let (x, y) = (rng.next_f64() * w, rng.next_f64() * h);
            Boxed {
                x0: x,
                y0: y,
                x1: x + (0.05 + 0.25 * rng.next_f64()) * w,
                y1: y + (0.05 + 0.25 * rng.next_f64()) * h,
                color: color(&mut rng),
            }
        })
        .collect();
    let scale = w.max(h) / 256.0;
    let strokes: Vec<Stroke> = (0..rng.next_below(6))
        .map(|_| Stroke {
            ax: rng.next_f64() * w,
            ay: rng.next_f64() * h,
            bx: rng.next_f64() * w,
            by: rng.next_f64() * h,
            half_width: (0.5 + rng.next_f64()) * scale.max(0.5),
            shade: 0.2 + 0.4 * rng.next_f64(),
        })
        .collect();
    let texture_amp = 10.0 + 30.0 * rng.next_f64();
    let texture_seed = rng.next_u64();
    let grain_seed = rng.next_u64();
    let noise_seed = rng.next_u64();

    RasterImage::from_fn(width, height, |x, y| {
        let (fx, fy) = (x as f64 + 0.5, y as f64 + 0.5);
        let t = fy / h;
        let mut c = if t < horizon {
            let s = t / horizon;
            [0, 1, 2].map(|i| sky_top[i] * (1.0 - s) + sky_bottom[i] * s)
        } else {
            let shade = 1.0 - 0.4 * (t - horizon) / (1.0 - horizon);
            ground.map(|v| v * shade)
        };
        for b in &blobs {
            let d = ((fx - b.cx) / b.rx).powi(2) + ((fy - b.cy) / b.ry).powi(2);
            let a = 1.0 - smoothstep(0.9, 1.0, d.sqrt());
            if a > 0.0 {
                let light = 1.0 - 0.3 * d.min(1.0);
                let grain = if b.grain > 0.0 {
                    b.grain * value_noise(grain_seed, fx, fy, 2.0 + (b.cx as u64 % 3) as f64)
                } else {
                    0.0
                };
                for i in 0..3 {
                    c[i] = c[i] * (1.0 - a) + (b.color[i] * light + grain) * a;
                }
            }
        }
        for b in &boxes {
            if fx >= b.x0 && fx < b.x1 && fy >= b.y0 && fy < b.y1 {
                c = b.color;
            }
        }
        for s in &strokes {
            let cover = 1.0 - smoothstep(s.half_width - 0.5, s.half_width + 0.5, segment_distance(fx, fy, s));
            if cover > 0.0 {
                c = c.map(|v| v * (1.0 - cover * (1.0 - s.shade)));
            }
        }
        let texture = texture_amp * pink_noise(texture_seed, fx, fy);
        let n = SplitMix64::new(noise_seed ^ ((y as u64) << 32) ^ x as u64).next_f64();
        let noise = (n - 0.5) * 8.0;
        let px = c.map(|v| (v + texture + noise).round().clamp(0.0, 255.0) as u8);
        [px[0], px[1], px[2], 255]
    })
    .expect("dimensions are at least 1")
}
