use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use super::RegionMap;
use crate::error::{Error, Result};
use crate::quant::Palette;

struct Live {
    area: u32,
    first_pixel: u32,
    palette_index: u32,
    neighbors: BTreeSet<u32>,
}

/// Absorbs every region smaller than `min_area` into a neighbor.
///
/// Regions are processed smallest first (earliest first pixel on ties). A
/// small region joins the neighbor whose palette color is nearest in Lab,
/// preferring the larger neighbor and then the earlier first pixel on ties.
/// Other neighbors that carry the target's palette index become contiguous
/// with it through the absorbed pixels and are fused as well, so adjacent
/// regions never share a color. Stops when nothing is below `min_area` or a
/// single region is left; ids are re-densified in raster order.
pub fn merge_small_regions(rm: &RegionMap, palette: &Palette, min_area: u32) -> Result<RegionMap> {
    if min_area == 0 {
        return Err(Error::invalid("min_area must be at least 1"));
    }
    if let Some(r) = rm.regions.iter().find(|r| r.palette_index as usize >= palette.len()) {
        return Err(Error::invalid(format!(
            "region {} uses palette index {} outside a {}-entry palette",
            r.id,
            r.palette_index,
            palette.len()
        )));
    }
    if min_area == 1 {
        return Ok(rm.clone());
    }

    let mut first_pixel = vec![u32::MAX; rm.regions.len()];
    for (i, &r) in rm.region_of.iter().enumerate() {
        let f = &mut first_pixel[r as usize];
        *f = (*f).min(i as u32);
    }
    let mut live: Vec<Live> = rm
        .regions
        .iter()
        .map(|r| Live {
            area: r.area,
            first_pixel: first_pixel[r.id as usize],
            palette_index: r.palette_index,
            neighbors: r.neighbors.clone(),
        })
        .collect();
    let mut parent: Vec<u32> = (0..rm.regions.len() as u32).collect();
    let mut alive = rm.regions.len();

    let mut heap: BinaryHeap<Reverse<(u32, u32, u32)>> = live
        .iter()
        .enumerate()
        .filter(|(_, r)| r.area < min_area)
        .map(|(id, r)| Reverse((r.area, r.first_pixel, id as u32)))
        .collect();

    let lab = |r: &Live| palette.entries()[r.palette_index as usize].lab;

    while let Some(Reverse((area, first, id))) = heap.pop() {
        if alive <= 1 {
            break;
        }
        let small = &live[id as usize];
        if parent[id as usize] != id || small.area != area || small.first_pixel != first {
            continue;
        }
        let own = lab(small);
        let target = small
            .neighbors
            .iter()
            .copied()
            .min_by(|&a, &b| {
                let (ra, rb) = (&live[a as usize], &live[b as usize]);
                own.distance_sq(&lab(ra))
                    .total_cmp(&own.distance_sq(&lab(rb)))
                    .then(rb.area.cmp(&ra.area))
                    .then(ra.first_pixel.cmp(&rb.first_pixel))
            })
            .expect("a region that is not alone has a neighbor");

        let target_index = live[target as usize].palette_index;
        let mut absorbed = vec![id];
        absorbed.extend(
            small
                .neighbors
                .iter()
                .copied()
                .filter(|&n| n != target && live[n as usize].palette_index == target_index),
        );

        for &a in &absorbed {
            parent[a as usize] = target;
            let taken = std::mem::take(&mut live[a as usize].neighbors);
            let (a_area, a_first) = (live[a as usize].area, live[a as usize].first_pixel);
            for &b in &taken {
                let nb = &mut live[b as usize].neighbors;
                nb.remove(&a);
                if b != target {
                    nb.insert(target);
                }
            }
            let t = &mut live[target as usize];
            t.area += a_area;
            t.first_pixel = t.first_pixel.min(a_first);
            t.neighbors.extend(taken);
            alive -= 1;
        }
        let t = &mut live[target as usize];
        t.neighbors.remove(&target);
        for a in &absorbed {
            t.neighbors.remove(a);
        }
        if t.area < min_area {
            heap.push(Reverse((t.area, t.first_pixel, target)));
        }
    }

    // Resolve every original id to its surviving root.
    let mut root: Vec<u32> = (0..parent.len() as u32).collect();
    for i in 0..parent.len() {
        let mut r = i as u32;
        while parent[r as usize] != r {
            r = parent[r as usize];
        }
        root[i] = r;
    }
    let labels: Vec<u32> = rm.region_of.iter().map(|&r| root[r as usize]).collect();
    Ok(RegionMap::from_labels(rm.width, rm.height, &labels, |r| {
        live[r as usize].palette_index
    }))
}
