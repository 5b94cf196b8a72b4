use std::collections::VecDeque;

use super::RegionMap;
use crate::quant::IndexMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    #[default]
    Four,
    Eight,
}

/// Connected components of equal palette index, found by iterative BFS.
///
/// Region ids follow the raster order of each component's first pixel.
/// Neighbor sets always use 4-adjacency, whatever `connectivity` is used for
/// growing the components.
pub fn label_regions(im: &IndexMap, connectivity: Connectivity) -> RegionMap {
    label_raw(im.width, im.height, &im.indices, connectivity)
}

pub(crate) fn label_raw(width: u32, height: u32, values: &[u32], connectivity: Connectivity) -> RegionMap {
    let (w, h) = (width as i64, height as i64);
    let mut labels = vec![u32::MAX; values.len()];
    let mut queue = VecDeque::new();
    let offsets: &[(i64, i64)] = match connectivity {
        Connectivity::Four => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
        Connectivity::Eight => &[(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)],
    };
    let mut next = 0u32;
    for start in 0..values.len() {
        if labels[start] != u32::MAX {
            continue;
        }
        let value = values[start];
        labels[start] = next;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i as i64 % w, i as i64 / w);
            for &(dx, dy) in offsets {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                    continue;
                }
                let j = (ny * w + nx) as usize;
                if labels[j] == u32::MAX && values[j] == value {
                    labels[j] = next;
                    queue.push_back(j);
                }
            }
        }
        next += 1;
    }
    let mut palette_of = vec![0u32; next as usize];
    for (i, &l) in labels.iter().enumerate() {
        palette_of[l as usize] = values[i];
    }
    RegionMap::from_labels(width, height, &labels, |l| palette_of[l as usize])
}
