use std::time::Instant;

use artvista_core::{
    build_template, quantize_colors, synthetic_photo, RasterImage, SplitMix64, TemplateOptions, DEFAULT_COLORS,
    SIMPLIFIED_COLORS,
};
use artvista_testkit::{brute_force_two_means_sse, weighted_lab_points};

/// 4×4 image drawing each pixel from a seeded set of 3..=6 colors.
fn toy_image(seed: u64) -> RasterImage {
    let mut rng = SplitMix64::new(seed);
    let n = 3 + rng.next_below(4) as usize;
    let colors: Vec<[u8; 4]> = (0..n)
        .map(|_| {
            let v = rng.next_u64().to_le_bytes();
            [v[0], v[1], v[2], 255]
        })
        .collect();
    let picks: Vec<usize> = (0..16).map(|_| rng.next_below(n as u64) as usize).collect();
    RasterImage::from_fn(4, 4, |x, y| colors[picks[(y * 4 + x) as usize]]).unwrap()
}

fn noise_image(seed: u64) -> RasterImage {
    let mut rng = SplitMix64::new(seed);
    RasterImage::from_fn(32, 32, |_, _| {
        let v = rng.next_u64().to_le_bytes();
        [v[0], v[1], v[2], 255]
    })
    .unwrap()
}

#[test]
fn two_means_reach_the_exhaustive_optimum_on_toy_images() {
    let start = Instant::now();
    let mut optimal = 0;
    for seed in 0..25 {
        let img = toy_image(seed);
        let (points, weights) = weighted_lab_points(&img);
        if points.len() < 3 {
            // Two or fewer colors are returned verbatim with zero error.
            optimal += 1;
            continue;
        }
        let q = quantize_colors(&img, 2, seed, 10).unwrap();
        let best = brute_force_two_means_sse(&points, &weights);
        if q.sse <= best * (1.0 + 1e-9) + 1e-9 {
            optimal += 1;
        }
    }
    assert!(optimal >= 24, "only {optimal}/25 optimal");
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn lloyd_error_never_increases() {
    let mut violations = 0;
    for seed in 0..100 {
        let img = if seed % 2 == 0 { noise_image(seed) } else { synthetic_photo(32, 32, seed) };
        let q = quantize_colors(&img, DEFAULT_COLORS, seed, 3).unwrap();
        for trace in &q.traces {
            for w in trace.windows(2) {
                if w[1] > w[0] * (1.0 + 1e-9) {
                    violations += 1;
                }
            }
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn palette_never_exceeds_k_and_is_light_first() {
    for seed in 0..20 {
        let img = synthetic_photo(48, 48, seed);
        for k in [1, 2, 5, SIMPLIFIED_COLORS, DEFAULT_COLORS] {
            let q = quantize_colors(&img, k, seed, 2).unwrap();
            let e = q.palette.entries();
            assert!(!e.is_empty() && e.len() <= k);
            assert!(e.windows(2).all(|p| p[0].lab.l >= p[1].lab.l));
            assert!(q.indices.indices.iter().all(|&i| (i as usize) < e.len()));
        }
    }
}

#[test]
fn same_seed_same_quantization() {
    let img = synthetic_photo(64, 48, 9);
    assert_eq!(quantize_colors(&img, 8, 4, 3).unwrap(), quantize_colors(&img, 8, 4, 3).unwrap());
}

#[test]
fn fewer_colors_give_no_more_regions() {
    let mut ok = 0;
    for seed in 0..50 {
        let img = synthetic_photo(96, 72, seed);
        let count = |k| {
            let opts = TemplateOptions {
                colors: k,
                seed,
                ..Default::default()
            };
            build_template(&img, &opts).unwrap().regions.len()
        };
        if count(SIMPLIFIED_COLORS) <= count(DEFAULT_COLORS) {
            ok += 1;
        }
    }
    assert!(ok * 100 >= 95 * 50, "{ok}/50");
}
