//! Slow, obviously-correct reference implementations. Each one is written
//! independently of the production code it checks and favours clarity over
//! speed.

use std::collections::BTreeMap;

use artvista_core::{srgb_to_cielab, Contour, LabColor, RasterImage, RegionMap, Rgb};

/// Flood-fill labelling with an explicit stack. Ids follow the raster order
/// of each component's first pixel.
pub fn naive_labels(values: &[u32], w: usize, h: usize, eight: bool) -> Vec<u32> {
    let mut label = vec![u32::MAX; w * h];
    let mut next = 0;
    for start in 0..w * h {
        if label[start] != u32::MAX {
            continue;
        }
        label[start] = next;
        let mut stack = vec![start];
        while let Some(p) = stack.pop() {
            let (x, y) = ((p % w) as i64, (p / w) as i64);
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if (dx, dy) == (0, 0) || (!eight && dx != 0 && dy != 0) {
                        continue;
                    }
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let q = ny as usize * w + nx as usize;
                    if label[q] == u32::MAX && values[q] == values[start] {
                        label[q] = next;
                        stack.push(q);
                    }
                }
            }
        }
        next += 1;
    }
    label
}

/// Merge by repeated relabelling: find the smallest undersized component
/// (earliest first pixel on ties), repaint it with the color of its best
/// neighbor, relabel the whole map, repeat.
///
/// The best neighbor has the nearest Lab color, then the larger area, then
/// the earlier first pixel. Returns the final labels and the palette index
/// of every pixel.
pub fn naive_merge(values: &[u32], w: usize, h: usize, labs: &[LabColor], min_area: u32) -> (Vec<u32>, Vec<u32>) {
    let mut colors = values.to_vec();
    loop {
        let labels = naive_labels(&colors, w, h, false);
        let n = labels.iter().max().map_or(0, |m| m + 1) as usize;
        if n <= 1 {
            return (labels, colors);
        }
        let mut area = vec![0u32; n];
        let mut first = vec![usize::MAX; n];
        let mut color = vec![0u32; n];
        for (i, &l) in labels.iter().enumerate() {
            area[l as usize] += 1;
            first[l as usize] = first[l as usize].min(i);
            color[l as usize] = colors[i];
        }
        let Some(small) = (0..n).filter(|&r| area[r] < min_area).min_by_key(|&r| (area[r], first[r])) else {
            return (labels, colors);
        };
        let mut neighbors = Vec::new();
        for (i, &l) in labels.iter().enumerate() {
            if l as usize != small {
                continue;
            }
            let (x, y) = (i % w, i / w);
            let around = [
                (x > 0).then(|| i - 1),
                (x + 1 < w).then(|| i + 1),
                (y > 0).then(|| i - w),
                (y + 1 < h).then(|| i + w),
            ];
            for q in around.into_iter().flatten() {
                let r = labels[q] as usize;
                if r != small && !neighbors.contains(&r) {
                    neighbors.push(r);
                }
            }
        }
        let own = labs[color[small] as usize];
        let target = neighbors
            .into_iter()
            .min_by(|&a, &b| {
                own.distance_sq(&labs[color[a] as usize])
                    .total_cmp(&own.distance_sq(&labs[color[b] as usize]))
                    .then(area[b].cmp(&area[a]))
                    .then(first[a].cmp(&first[b]))
            })
            .expect("more than one region means a neighbor exists");
        for (i, &l) in labels.iter().enumerate() {
            if l as usize == small {
                colors[i] = color[target];
            }
        }
    }
}

/// Minimum weighted Lab SSE over every split of `points` into two non-empty
/// groups, each represented by its weighted mean.
pub fn brute_force_two_means_sse(points: &[LabColor], weights: &[f64]) -> f64 {
    let n = points.len();
    assert!((2..=20).contains(&n), "exhaustive search needs 2..=20 points");
    let mut best = f64::INFINITY;
    // Point 0 always sits in group A, halving the search.
    for mask in 0u32..(1 << (n - 1)) {
        let in_b = |i: usize| i > 0 && mask >> (i - 1) & 1 == 1;
        if !(0..n).any(in_b) {
            continue;
        }
        let mut sse = 0.0;
        for group in [false, true] {
            let members: Vec<usize> = (0..n).filter(|&i| in_b(i) == group).collect();
            let wsum: f64 = members.iter().map(|&i| weights[i]).sum();
            let mean = LabColor::new(
                members.iter().map(|&i| weights[i] * points[i].l).sum::<f64>() / wsum,
                members.iter().map(|&i| weights[i] * points[i].a).sum::<f64>() / wsum,
                members.iter().map(|&i| weights[i] * points[i].b).sum::<f64>() / wsum,
            );
            sse += members.iter().map(|&i| weights[i] * points[i].distance_sq(&mean)).sum::<f64>();
        }
        best = best.min(sse);
    }
    best
}

/// Distinct opaque colors of an image as Lab points with pixel counts.
pub fn weighted_lab_points(img: &RasterImage) -> (Vec<LabColor>, Vec<f64>) {
    let mut counts: BTreeMap<[u8; 3], f64> = BTreeMap::new();
    for p in img.as_bytes().chunks(4) {
        assert_eq!(p[3], 255, "reference only handles opaque images");
        *counts.entry([p[0], p[1], p[2]]).or_default() += 1.0;
    }
    counts
        .into_iter()
        .map(|(c, n)| (srgb_to_cielab(Rgb(c)), n))
        .unzip()
}

/// Euclidean distance from the centre of `(x, y)` to the nearest pixel
/// centre outside region `id`, counting a one-pixel frame around the canvas
/// as outside.
pub fn exact_clearance(rm: &RegionMap, id: u32, x: u32, y: u32) -> f64 {
    let (w, h) = (rm.width as i64, rm.height as i64);
    let mut best = f64::INFINITY;
    for qy in -1..=h {
        for qx in -1..=w {
            let outside = qx < 0 || qy < 0 || qx >= w || qy >= h || rm.get(qx as u32, qy as u32) != id;
            if outside {
                let d = (((qx - x as i64).pow(2) + (qy - y as i64).pow(2)) as f64).sqrt();
                best = best.min(d);
            }
        }
    }
    best
}

/// Largest [`exact_clearance`] over the region's pixels.
pub fn exact_pole_clearance(rm: &RegionMap, id: u32) -> f64 {
    let mut best = 0.0f64;
    for y in 0..rm.height {
        for x in 0..rm.width {
            if rm.get(x, y) == id {
                best = best.max(exact_clearance(rm, id, x, y));
            }
        }
    }
    best
}

/// Unit crack edges of a region: pixel sides whose other side is a
/// different region or the canvas border.
pub fn direct_crack_count(rm: &RegionMap, id: u32) -> u64 {
    let (w, h) = (rm.width as i64, rm.height as i64);
    let mut n = 0;
    for y in 0..h {
        for x in 0..w {
            if rm.get(x as u32, y as u32) != id {
                continue;
            }
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w || ny >= h || rm.get(nx as u32, ny as u32) != id {
                    n += 1;
                }
            }
        }
    }
    n
}

/// Unit edges along a set of closed rectilinear contours, as
/// `((x0, y0), (x1, y1))` pairs in travel order.
pub fn unit_edges(contours: &[Contour]) -> Vec<((i32, i32), (i32, i32))> {
    let mut out = Vec::new();
    for c in contours {
        for (a, b) in c.segments() {
            assert!(a.x == b.x || a.y == b.y, "contour is not rectilinear");
            let (sx, sy) = ((b.x - a.x).signum(), (b.y - a.y).signum());
            let (mut x, mut y) = (a.x, a.y);
            while (x, y) != (b.x, b.y) {
                out.push(((x, y), (x + sx, y + sy)));
                x += sx;
                y += sy;
            }
        }
    }
    out
}

/// Coordinates of ink pixels (value below 128).
pub fn ink_set(data: &[u8]) -> Vec<usize> {
    data.iter().enumerate().filter(|(_, &v)| v < 128).map(|(i, _)| i).collect()
}
