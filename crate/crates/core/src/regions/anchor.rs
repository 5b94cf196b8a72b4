use super::RegionMap;
use crate::error::Result;

/// Labels need this much room (in pixels) around their anchor to be readable.
pub const MIN_LABEL_CLEARANCE: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelAnchor {
    pub x: u32,
    pub y: u32,
    /// Approximate distance in pixels from the anchor to the region's outside.
    pub clearance: f64,
}

/// The most interior pixel of a region by chamfer 3-4 distance, whatever its
/// clearance. Everything outside the region, including beyond the canvas
/// edge, counts as outside. Ties go to the smallest (row, column).
pub fn chamfer_pole(rm: &RegionMap, region_id: u32) -> Result<LabelAnchor> {
    let region = rm.region(region_id)?;
    let b = region.bbox;
    // One-pixel frame of outside around the bounding box.
    let w = (b.max_x - b.min_x + 3) as usize;
    let h = (b.max_y - b.min_y + 3) as usize;
    const FAR: u32 = u32::MAX / 2;
    let mut dist = vec![0u32; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let (cx, cy) = (b.min_x + x as u32 - 1, b.min_y + y as u32 - 1);
            if rm.get(cx, cy) == region_id {
                dist[y * w + x] = FAR;
            }
        }
    }
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let i = y * w + x;
            if dist[i] == 0 {
                continue;
            }
            let d = dist[i]
                .min(dist[i - 1] + 3)
                .min(dist[i - w] + 3)
                .min(dist[i - w - 1] + 4)
                .min(dist[i - w + 1] + 4);
            dist[i] = d;
        }
    }
    for y in (1..h - 1).rev() {
        for x in (1..w - 1).rev() {
            let i = y * w + x;
            if dist[i] == 0 {
                continue;
            }
            let d = dist[i]
                .min(dist[i + 1] + 3)
                .min(dist[i + w] + 3)
                .min(dist[i + w + 1] + 4)
                .min(dist[i + w - 1] + 4);
            dist[i] = d;
        }
    }
    let mut best = (0u32, 0usize, 0usize);
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let d = dist[y * w + x];
            if d > best.0 {
                best = (d, x, y);
            }
        }
    }
    let (d, x, y) = best;
    Ok(LabelAnchor {
        x: b.min_x + x as u32 - 1,
        y: b.min_y + y as u32 - 1,
        clearance: d as f64 / 3.0,
    })
}

/// Where to print a region's number, or `None` when the region is too thin
/// for a readable label (clearance under [`MIN_LABEL_CLEARANCE`]).
pub fn compute_label_anchor(rm: &RegionMap, region_id: u32) -> Result<Option<LabelAnchor>> {
    let pole = chamfer_pole(rm, region_id)?;
    Ok((pole.clearance >= MIN_LABEL_CLEARANCE).then_some(pole))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::quant::IndexMap;
    use crate::regions::{label_regions, Connectivity};

    fn regions(w: u32, h: u32, v: Vec<u32>) -> RegionMap {
        label_regions(&IndexMap::new(w, h, v).unwrap(), Connectivity::Four)
    }

    #[test]
    fn square_anchor_is_centre() {
        let rm = regions(7, 7, vec![0; 49]);
        let a = compute_label_anchor(&rm, 0).unwrap().unwrap();
        assert_eq!((a.x, a.y), (3, 3));
        assert_eq!(a.clearance, 4.0);
    }

    #[test]
    fn thin_strip_has_no_label() {
        let rm = regions(10, 1, vec![0; 10]);
        assert_eq!(compute_label_anchor(&rm, 0).unwrap(), None);
        assert_eq!(chamfer_pole(&rm, 0).unwrap().clearance, 1.0);
    }

    #[test]
    fn unknown_region_is_invalid() {
        let rm = regions(2, 2, vec![0; 4]);
        assert!(matches!(compute_label_anchor(&rm, 1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn l_shape_matches_exact_scan() {
        // L in an 8x8 canvas: left 4 columns plus bottom 4 rows.
        let v: Vec<u32> = (0..64).map(|i| u32::from(!(i % 8 < 4 || i / 8 >= 4))).collect();
        let rm = regions(8, 8, v);
        let a = chamfer_pole(&rm, 0).unwrap();
        assert_eq!(rm.get(a.x, a.y), 0);

        let inside = |x: i32, y: i32| (0..8).contains(&x) && (0..8).contains(&y) && rm.get(x as u32, y as u32) == 0;
        let clearance = |x: i32, y: i32| {
            let mut best = f64::INFINITY;
            for oy in -1..=8 {
                for ox in -1..=8 {
                    if !inside(ox, oy) {
                        best = best.min((((ox - x).pow(2) + (oy - y).pow(2)) as f64).sqrt());
                    }
                }
            }
            best
        };
        let mut exact_best = 0.0f64;
        for y in 0..8 {
            for x in 0..8 {
                if inside(x, y) {
                    exact_best = exact_best.max(clearance(x, y));
                }
            }
        }
        assert!((clearance(a.x as i32, a.y as i32) - exact_best).abs() <= 1.0);
    }
}
